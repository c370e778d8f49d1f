//! Brute-force reference algorithms: naive first-order evaluation and
//! exhaustive solvers for HOM, EMB, CLIQUE, weighted satisfiability, and
//! Fagin witnesses. These are the correctness oracles for the FPT engines.
//!
//! Search order is fixed everywhere (elements ascending, variables in
//! first-occurrence order), so returned witnesses are deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::formula::Formula;
use crate::prop::PropFormula;
use crate::structure::{Element, Graph, Structure, Tuple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("relation {rel} used with {got} arguments, arity is {arity}")]
    ArityMismatch { rel: String, arity: usize, got: usize },
    #[error("vocabulary mismatch between the two structures")]
    VocabularyMismatch,
    #[error("instance too large for brute force: {candidates} candidates exceed the limit {limit}")]
    TooLarge { candidates: u128, limit: u64 },
}

/// Size guards for the exhaustive solvers.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximal number of candidates a brute-force search may enumerate.
    pub max_candidates: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_candidates: 100_000_000 }
    }
}

impl Limits {
    pub fn check(&self, candidates: u128) -> Result<(), OracleError> {
        if candidates > self.max_candidates as u128 {
            Err(OracleError::TooLarge { candidates, limit: self.max_candidates })
        } else {
            Ok(())
        }
    }
}

/// A partial assignment: individual variables to elements, plus
/// interpretations for free relation variables (the Fagin `X`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub vars: BTreeMap<String, Element>,
    /// name -> (arity, tuple set)
    pub rels: BTreeMap<String, (usize, BTreeSet<Tuple>)>,
}

impl Assignment {
    pub fn empty() -> Self {
        Assignment::default()
    }

    pub fn of_vars<S: Into<String>>(vars: impl IntoIterator<Item = (S, Element)>) -> Self {
        Assignment {
            vars: vars.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            rels: BTreeMap::new(),
        }
    }

    pub fn with_relation(mut self, name: impl Into<String>, arity: usize, tuples: BTreeSet<Tuple>) -> Self {
        self.rels.insert(name.into(), (arity, tuples));
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Truth {
    T,
    F,
    Unknown,
}

/// Standard Tarski semantics by recursive enumeration.
///
/// Evaluation-only devices keep structured instances from degenerating:
/// quantifiers are pushed back inward over subformulas that do not mention
/// them (miniscoping), candidate values are drawn from matching tuples where
/// a top-level literal pins them down, partial assignments that already fix
/// the truth of the subformula are cut off by three-valued scans restricted
/// to the parts the last binding can have changed, and quantified
/// subformulas are memoized on the values of their free variables. None of
/// these changes the result, and the `O(‖φ‖·n^{qr(φ)})` bound is preserved.
pub fn eval_naive(a: &Structure, f: &Formula, asg: &Assignment) -> Result<bool, OracleError> {
    check_atoms(a, f, asg)?;
    for v in f.free_vars() {
        if !asg.vars.contains_key(&v) {
            return Err(OracleError::UnboundVariable(v));
        }
    }
    let f = crate::formula::miniscope(f);
    let mut index = BinIndex::default();
    for sym in a.vocab().symbols() {
        if sym.arity == 2 {
            for t in a.tuples(&sym.name) {
                index.insert(&sym.name, t[0], t[1]);
            }
        }
    }
    for (name, (arity, tuples)) in &asg.rels {
        if *arity == 2 {
            for t in tuples {
                index.insert(name, t[0], t[1]);
            }
        }
    }
    let mut ev = Evaluator {
        a,
        asg,
        env: asg.vars.clone(),
        index,
        memo: HashMap::new(),
        free_vars: HashMap::new(),
    };
    match ev.scan(&f, None) {
        Truth::T => Ok(true),
        Truth::F => Ok(false),
        Truth::Unknown => Ok(ev.eval(&f)),
    }
}

/// Evaluates a sentence under the empty assignment.
pub fn eval_sentence(a: &Structure, f: &Formula) -> Result<bool, OracleError> {
    eval_naive(a, f, &Assignment::empty())
}

fn check_atoms(a: &Structure, f: &Formula, asg: &Assignment) -> Result<(), OracleError> {
    match f {
        Formula::Atom { rel, args } => {
            let arity = a
                .vocab()
                .arity_of(rel)
                .or_else(|| asg.rels.get(rel).map(|(ar, _)| *ar))
                .ok_or_else(|| OracleError::UnknownRelation(rel.clone()))?;
            if arity != args.len() {
                return Err(OracleError::ArityMismatch { rel: rel.clone(), arity, got: args.len() });
            }
            Ok(())
        }
        Formula::True | Formula::False | Formula::Eq(..) => Ok(()),
        Formula::Not(g) => check_atoms(a, g, asg),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().try_for_each(|g| check_atoms(a, g, asg)),
        Formula::Exists(_, g) | Formula::Forall(_, g) => check_atoms(a, g, asg),
    }
}

/// Adjacency index over binary relations, for candidate lookups.
#[derive(Default)]
struct BinIndex {
    by_first: HashMap<(String, Element), BTreeSet<Element>>,
    by_second: HashMap<(String, Element), BTreeSet<Element>>,
    indexed: BTreeSet<String>,
}

impl BinIndex {
    fn insert(&mut self, rel: &str, a: Element, b: Element) {
        self.indexed.insert(rel.to_string());
        self.by_first.entry((rel.to_string(), a)).or_default().insert(b);
        self.by_second.entry((rel.to_string(), b)).or_default().insert(a);
    }
}

struct Evaluator<'a> {
    a: &'a Structure,
    asg: &'a Assignment,
    env: BTreeMap<String, Element>,
    index: BinIndex,
    /// truth of quantified subformulas keyed by node identity and the values
    /// of their free variables
    memo: HashMap<(usize, Vec<Element>), bool>,
    /// free variables per subformula node, keyed by node identity
    free_vars: HashMap<usize, std::rc::Rc<BTreeSet<String>>>,
}

impl Evaluator<'_> {
    fn atom_truth(&self, rel: &str, tuple: &[Element]) -> bool {
        if self.a.vocab().contains(rel) {
            self.a.has_tuple(rel, tuple)
        } else {
            self.asg
                .rels
                .get(rel)
                .map(|(_, ts)| ts.contains(tuple))
                .unwrap_or(false)
        }
    }

    fn node_vars(&mut self, f: &Formula) -> std::rc::Rc<BTreeSet<String>> {
        let ptr = f as *const Formula as usize;
        self.free_vars
            .entry(ptr)
            .or_insert_with(|| std::rc::Rc::new(f.free_vars()))
            .clone()
    }

    /// Three-valued evaluation under the partial environment. With
    /// `touched = Some(v)`, subformulas in which `v` does not occur free are
    /// skipped as `Unknown`: binding `v` cannot have changed their status,
    /// and any already-decided refutation among them was seen by the scan of
    /// the binding that completed them. Quantifiers are looked through with
    /// their variable unbound; a definite answer for every extension is
    /// definite for the quantified formula, since universes are nonempty.
    fn scan(&mut self, f: &Formula, touched: Option<&str>) -> Truth {
        if let Some(v) = touched {
            if !self.node_vars(f).contains(v) {
                return Truth::Unknown;
            }
        }
        match f {
            Formula::True => Truth::T,
            Formula::False => Truth::F,
            Formula::Atom { rel, args } => {
                let mut tuple = Vec::with_capacity(args.len());
                for v in args {
                    match self.env.get(v) {
                        Some(&e) => tuple.push(e),
                        None => return Truth::Unknown,
                    }
                }
                if self.atom_truth(rel, &tuple) {
                    Truth::T
                } else {
                    Truth::F
                }
            }
            Formula::Eq(x, y) => match (self.env.get(x), self.env.get(y)) {
                (Some(&ex), Some(&ey)) => {
                    if ex == ey {
                        Truth::T
                    } else {
                        Truth::F
                    }
                }
                _ => Truth::Unknown,
            },
            Formula::Not(g) => match self.scan(g, touched) {
                Truth::T => Truth::F,
                Truth::F => Truth::T,
                Truth::Unknown => Truth::Unknown,
            },
            Formula::And(gs) => {
                let mut all_true = true;
                for g in gs {
                    match self.scan(g, touched) {
                        Truth::F => return Truth::F,
                        Truth::Unknown => all_true = false,
                        Truth::T => {}
                    }
                }
                if all_true {
                    Truth::T
                } else {
                    Truth::Unknown
                }
            }
            Formula::Or(gs) => {
                let mut all_false = true;
                for g in gs {
                    match self.scan(g, touched) {
                        Truth::T => return Truth::T,
                        Truth::Unknown => all_false = false,
                        Truth::F => {}
                    }
                }
                if all_false {
                    Truth::F
                } else {
                    Truth::Unknown
                }
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let saved = self.env.remove(v);
                let r = self.scan(g, touched);
                if let Some(e) = saved {
                    self.env.insert(v.clone(), e);
                }
                r
            }
        }
    }

    fn eval(&mut self, f: &Formula) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { rel, args } => {
                let tuple: Vec<Element> = args
                    .iter()
                    .map(|v| *self.env.get(v).expect("variable bound along the walk"))
                    .collect();
                self.atom_truth(rel, &tuple)
            }
            Formula::Eq(x, y) => {
                let ex = self.env.get(x).expect("variable bound along the walk");
                let ey = self.env.get(y).expect("variable bound along the walk");
                ex == ey
            }
            Formula::Not(g) => !self.eval(g),
            Formula::And(gs) => gs.iter().all(|g| self.eval(g)),
            Formula::Or(gs) => gs.iter().any(|g| self.eval(g)),
            Formula::Exists(..) | Formula::Forall(..) => {
                let key = self.memo_key(f);
                if let Some(k) = &key {
                    if let Some(&hit) = self.memo.get(k) {
                        return hit;
                    }
                }
                let result = self.eval_quantifier(f);
                if let Some(k) = key {
                    self.memo.insert(k, result);
                }
                result
            }
        }
    }

    fn eval_quantifier(&mut self, f: &Formula) -> bool {
        let (v, g, exists) = match f {
            Formula::Exists(v, g) => (v, g, true),
            Formula::Forall(v, g) => (v, g, false),
            _ => unreachable!(),
        };
        let saved = self.env.remove(v);
        let cands = self.candidates(g, v, exists);
        let mut decided = !exists;
        for e in iterate(cands, self.a.universe()) {
            self.env.insert(v.clone(), e);
            let verdict = match self.scan(g, Some(v)) {
                Truth::T => true,
                Truth::F => false,
                Truth::Unknown => self.eval(g),
            };
            if verdict == exists {
                decided = exists;
                break;
            }
        }
        self.env.remove(v);
        if let Some(e) = saved {
            self.env.insert(v.clone(), e);
        }
        decided
    }

    fn memo_key(&mut self, f: &Formula) -> Option<(usize, Vec<Element>)> {
        let ptr = f as *const Formula as usize;
        let vars = self.node_vars(f);
        let mut vals = Vec::with_capacity(vars.len());
        for v in vars.iter() {
            vals.push(*self.env.get(v)?);
        }
        Some((ptr, vals))
    }

    /// Atom-directed candidate restriction for a quantified variable. For
    /// `∃v` over a conjunction, a value falsifying a top-level positive
    /// literal in `v` (with its other variables already bound) cannot
    /// satisfy the body, so only values drawn from matching tuples need to
    /// be enumerated. For `∀v` over a disjunction, a value satisfying a
    /// top-level negative literal satisfies the body outright, so only
    /// values realizing all such atoms need checking. Values skipped here
    /// are exactly those the three-valued scan would discard right after
    /// insertion; the result never changes.
    fn candidates(&self, body: &Formula, v: &str, exists: bool) -> Option<BTreeSet<Element>> {
        let spine: Vec<&Formula> = match (exists, body) {
            (true, Formula::And(parts)) => parts.iter().collect(),
            (false, Formula::Or(parts)) => parts.iter().collect(),
            _ => vec![body],
        };
        let mut out: Option<BTreeSet<Element>> = None;
        for part in spine {
            let literal = if exists {
                part
            } else {
                match part {
                    Formula::Not(g) => &**g,
                    _ => continue,
                }
            };
            let set = match literal {
                Formula::Atom { rel, args } if args.iter().any(|x| x == v) => {
                    match self.atom_candidates(rel, args, v) {
                        Some(s) => s,
                        None => continue,
                    }
                }
                Formula::Eq(x, y) => {
                    if x == v && y != v {
                        match self.env.get(y) {
                            Some(&e) => BTreeSet::from([e]),
                            None => continue,
                        }
                    } else if y == v && x != v {
                        match self.env.get(x) {
                            Some(&e) => BTreeSet::from([e]),
                            None => continue,
                        }
                    } else {
                        continue;
                    }
                }
                _ => continue,
            };
            out = Some(match out {
                None => set,
                Some(prev) => prev.intersection(&set).copied().collect(),
            });
            if out.as_ref().is_some_and(|s| s.is_empty()) {
                break;
            }
        }
        out
    }

    /// Values of `v` for which some tuple of `rel` matches the bound
    /// positions. `None` when another argument is still unbound.
    fn atom_candidates(&self, rel: &str, args: &[String], v: &str) -> Option<BTreeSet<Element>> {
        let mut pattern: Vec<Option<Element>> = Vec::with_capacity(args.len());
        for arg in args {
            if arg == v {
                pattern.push(None);
            } else {
                pattern.push(Some(*self.env.get(arg)?));
            }
        }
        // indexed fast path for binary atoms with one bound argument
        if self.index.indexed.contains(rel) && args.len() == 2 {
            match (pattern[0], pattern[1]) {
                (Some(a), None) => {
                    return Some(
                        self.index
                            .by_first
                            .get(&(rel.to_string(), a))
                            .cloned()
                            .unwrap_or_default(),
                    )
                }
                (None, Some(b)) => {
                    return Some(
                        self.index
                            .by_second
                            .get(&(rel.to_string(), b))
                            .cloned()
                            .unwrap_or_default(),
                    )
                }
                _ => {}
            }
        }
        let mut out = BTreeSet::new();
        let mut scan_tuples = |tuples: &BTreeSet<Tuple>| {
            for t in tuples {
                let mut val: Option<Element> = None;
                let mut ok = true;
                for (i, p) in pattern.iter().enumerate() {
                    match p {
                        Some(e) => {
                            if t[i] != *e {
                                ok = false;
                                break;
                            }
                        }
                        None => match val {
                            Some(e) => {
                                if t[i] != e {
                                    ok = false;
                                    break;
                                }
                            }
                            None => val = Some(t[i]),
                        },
                    }
                }
                if ok {
                    if let Some(e) = val {
                        out.insert(e);
                    }
                }
            }
        };
        if let Some(tuples) = self.a.tuple_set(rel) {
            scan_tuples(tuples);
        } else if let Some((_, tuples)) = self.asg.rels.get(rel) {
            scan_tuples(tuples);
        }
        Some(out)
    }
}

fn iterate(cands: Option<BTreeSet<Element>>, n: usize) -> Box<dyn Iterator<Item = Element>> {
    match cands {
        Some(set) => Box::new(set.into_iter()),
        None => Box::new(0..n),
    }
}

// ---------------------------------------------------------------------------
// Homomorphisms and embeddings
// ---------------------------------------------------------------------------

fn same_vocab(a: &Structure, b: &Structure) -> bool {
    let mut va: Vec<_> = a.vocab().symbols().to_vec();
    let mut vb: Vec<_> = b.vocab().symbols().to_vec();
    va.sort();
    vb.sort();
    va == vb
}

/// Exhaustive backtracking search for a homomorphism `B -> A`; returns the
/// first witness in lexicographic order, as a vector indexed by `B`-elements.
pub fn brute_hom(a: &Structure, b: &Structure, limits: &Limits) -> Result<Option<Vec<Element>>, OracleError> {
    brute_map(a, b, limits, false)
}

/// As [`brute_hom`] but injective: a (weak) embedding of `B` into `A`.
pub fn brute_emb(a: &Structure, b: &Structure, limits: &Limits) -> Result<Option<Vec<Element>>, OracleError> {
    brute_map(a, b, limits, true)
}

fn brute_map(
    a: &Structure,
    b: &Structure,
    limits: &Limits,
    injective: bool,
) -> Result<Option<Vec<Element>>, OracleError> {
    if !same_vocab(a, b) {
        return Err(OracleError::VocabularyMismatch);
    }
    limits.check((a.universe() as u128).pow(b.universe() as u32))?;
    // tuples grouped by the maximal element they mention, so consistency is
    // checked as soon as a tuple becomes fully assigned
    let mut tuples_by_max: Vec<Vec<(&str, &Tuple)>> = vec![Vec::new(); b.universe()];
    for sym in b.vocab().symbols() {
        for t in b.tuples(&sym.name) {
            let m = *t.iter().max().expect("arity >= 1");
            tuples_by_max[m].push((&sym.name, t));
        }
    }
    let mut h: Vec<Element> = Vec::with_capacity(b.universe());
    if search(a, &tuples_by_max, &mut h, b.universe(), injective) {
        Ok(Some(h))
    } else {
        Ok(None)
    }
}

fn search(
    a: &Structure,
    tuples_by_max: &[Vec<(&str, &Tuple)>],
    h: &mut Vec<Element>,
    total: usize,
    injective: bool,
) -> bool {
    if h.len() == total {
        return true;
    }
    let next = h.len();
    'outer: for cand in 0..a.universe() {
        if injective && h.contains(&cand) {
            continue;
        }
        h.push(cand);
        for (rel, t) in &tuples_by_max[next] {
            let image: Tuple = t.iter().map(|&e| h[e]).collect();
            if !a.has_tuple(rel, &image) {
                h.pop();
                continue 'outer;
            }
        }
        if search(a, tuples_by_max, h, total, injective) {
            return true;
        }
        h.pop();
    }
    false
}

/// Checks that `h` (indexed by `B`-elements) is a homomorphism `B -> A`.
pub fn check_hom(a: &Structure, b: &Structure, h: &[Element]) -> bool {
    if h.len() != b.universe() || h.iter().any(|&x| x >= a.universe()) {
        return false;
    }
    b.vocab().symbols().iter().all(|sym| {
        b.tuples(&sym.name).all(|t| {
            let image: Tuple = t.iter().map(|&e| h[e]).collect();
            a.has_tuple(&sym.name, &image)
        })
    })
}

/// Checks that `h` is an embedding (an injective homomorphism).
pub fn check_emb(a: &Structure, b: &Structure, h: &[Element]) -> bool {
    let distinct: BTreeSet<_> = h.iter().collect();
    distinct.len() == h.len() && check_hom(a, b, h)
}

// ---------------------------------------------------------------------------
// Cliques
// ---------------------------------------------------------------------------

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k.min(n - k) {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// First `k`-clique in lexicographic order, found by extension search.
pub fn brute_clique(g: &Graph, k: usize, limits: &Limits) -> Result<Option<Vec<Element>>, OracleError> {
    limits.check(binomial(g.vertices() as u128, k as u128))?;
    let mut acc = Vec::with_capacity(k);
    if clique_search(g, k, 0, &mut acc) {
        Ok(Some(acc))
    } else {
        Ok(None)
    }
}

fn clique_search(g: &Graph, k: usize, from: Element, acc: &mut Vec<Element>) -> bool {
    if acc.len() == k {
        return true;
    }
    for v in from..g.vertices() {
        if acc.iter().all(|&u| g.has_edge(u, v)) {
            acc.push(v);
            if clique_search(g, k, v + 1, acc) {
                return true;
            }
            acc.pop();
        }
    }
    false
}

pub fn check_clique(g: &Graph, vs: &[Element]) -> bool {
    let distinct: BTreeSet<_> = vs.iter().collect();
    distinct.len() == vs.len()
        && vs.iter().all(|&v| v < g.vertices())
        && vs
            .iter()
            .enumerate()
            .all(|(i, &u)| vs[i + 1..].iter().all(|&v| g.has_edge(u, v)))
}

/// Counts all `k`-cliques; an independent second route for tests.
pub fn count_cliques(g: &Graph, k: usize) -> usize {
    fn go(g: &Graph, k: usize, from: Element, acc: &mut Vec<Element>) -> usize {
        if acc.len() == k {
            return 1;
        }
        let mut total = 0;
        for v in from..g.vertices() {
            if acc.iter().all(|&u| g.has_edge(u, v)) {
                acc.push(v);
                total += go(g, k, v + 1, acc);
                acc.pop();
            }
        }
        total
    }
    go(g, k, 0, &mut Vec::new())
}

// ---------------------------------------------------------------------------
// Weighted satisfiability
// ---------------------------------------------------------------------------

/// Iterates `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn for_each_k_subset(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    fn go(n: usize, k: usize, from: usize, acc: &mut Vec<usize>, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
        if acc.len() == k {
            return f(acc);
        }
        for v in from..n {
            if n - v < k - acc.len() {
                break;
            }
            acc.push(v);
            if go(n, k, v + 1, acc, f) {
                return true;
            }
            acc.pop();
        }
        false
    }
    go(n, k, 0, &mut Vec::with_capacity(k), &mut f)
}

/// First weight-`k` satisfying assignment in lexicographic order over the
/// formula's variables, if any. The result is the set of true variables.
pub fn brute_wsat(f: &PropFormula, k: usize, limits: &Limits) -> Result<Option<BTreeSet<usize>>, OracleError> {
    let vars: Vec<usize> = f.variables().into_iter().collect();
    if k > vars.len() {
        return Ok(None);
    }
    limits.check(binomial(vars.len() as u128, k as u128))?;
    let mut found = None;
    for_each_k_subset(vars.len(), k, |idxs| {
        let truth: BTreeSet<usize> = idxs.iter().map(|&i| vars[i]).collect();
        if f.eval(&truth) {
            found = Some(truth);
            true
        } else {
            false
        }
    });
    Ok(found)
}

pub fn check_wsat(f: &PropFormula, truth: &BTreeSet<usize>, k: usize) -> bool {
    truth.len() == k && truth.is_subset(&f.variables()) && f.eval(truth)
}

// ---------------------------------------------------------------------------
// Fagin witnesses
// ---------------------------------------------------------------------------

/// All tuples of `A^r` in lexicographic order.
pub fn all_tuples(n: usize, r: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        let mut next = Vec::with_capacity(out.len() * n);
        for t in &out {
            for e in 0..n {
                let mut t2 = t.clone();
                t2.push(e);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Exhaustive Fagin oracle: the first `k`-subset `B ⊆ A^r` (in lexicographic
/// order) with `A ⊨ φ(B)`, where `x` names the designated relation variable.
pub fn brute_fagin(
    a: &Structure,
    phi: &Formula,
    x: (&str, usize),
    k: usize,
    limits: &Limits,
) -> Result<Option<BTreeSet<Tuple>>, OracleError> {
    let (name, arity) = x;
    let domain = (a.universe() as u128).pow(arity as u32);
    limits.check(domain.saturating_mul(binomial(domain, k as u128).max(1)))?;
    let tuples = all_tuples(a.universe(), arity);
    if k > tuples.len() {
        return Ok(None);
    }
    let mut found = None;
    let mut err = None;
    for_each_k_subset(tuples.len(), k, |idxs| {
        let b: BTreeSet<Tuple> = idxs.iter().map(|&i| tuples[i].clone()).collect();
        let asg = Assignment::empty().with_relation(name, arity, b.clone());
        match eval_naive(a, phi, &asg) {
            Ok(true) => {
                found = Some(b);
                true
            }
            Ok(false) => false,
            Err(e) => {
                err = Some(e);
                true
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

pub fn check_fagin_witness(
    a: &Structure,
    phi: &Formula,
    x: (&str, usize),
    b: &BTreeSet<Tuple>,
    k: usize,
) -> bool {
    b.len() == k
        && b.iter().all(|t| t.len() == x.1 && t.iter().all(|&e| e < a.universe()))
        && eval_naive(
            a,
            phi,
            &Assignment::empty().with_relation(x.0, x.1, b.clone()),
        )
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{and, atom, eq, exists, forall, not, or};
    use proptest::prelude::*;

    /// Plain recursion with none of the evaluation devices; the reference
    /// the optimized evaluator is checked against.
    fn eval_plain(a: &Structure, f: &Formula, env: &mut BTreeMap<String, Element>) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { rel, args } => {
                let tuple: Vec<Element> = args.iter().map(|v| env[v]).collect();
                a.has_tuple(rel, &tuple)
            }
            Formula::Eq(x, y) => env[x] == env[y],
            Formula::Not(g) => !eval_plain(a, g, env),
            Formula::And(gs) => gs.iter().all(|g| eval_plain(a, g, env)),
            Formula::Or(gs) => gs.iter().any(|g| eval_plain(a, g, env)),
            Formula::Exists(v, g) => {
                let saved = env.get(v).copied();
                let mut found = false;
                for e in 0..a.universe() {
                    env.insert(v.clone(), e);
                    if eval_plain(a, g, env) {
                        found = true;
                        break;
                    }
                }
                match saved {
                    Some(e) => {
                        env.insert(v.clone(), e);
                    }
                    None => {
                        env.remove(v);
                    }
                }
                found
            }
            Formula::Forall(v, g) => {
                let saved = env.get(v).copied();
                let mut holds = true;
                for e in 0..a.universe() {
                    env.insert(v.clone(), e);
                    if !eval_plain(a, g, env) {
                        holds = false;
                        break;
                    }
                }
                match saved {
                    Some(e) => {
                        env.insert(v.clone(), e);
                    }
                    None => {
                        env.remove(v);
                    }
                }
                holds
            }
        }
    }

    fn arb_formula(vars: Vec<String>, depth: u32) -> impl Strategy<Value = Formula> {
        let leaf = {
            let vars = vars.clone();
            prop_oneof![
                (0..vars.len(), 0..vars.len()).prop_map({
                    let vars = vars.clone();
                    move |(i, j)| atom("E", [vars[i].clone(), vars[j].clone()])
                }),
                (0..vars.len()).prop_map({
                    let vars = vars.clone();
                    move |i| atom("P", [vars[i].clone()])
                }),
                (0..vars.len(), 0..vars.len()).prop_map({
                    let vars = vars.clone();
                    move |(i, j)| eq(vars[i].clone(), vars[j].clone())
                }),
            ]
        };
        leaf.prop_recursive(depth, 24, 3, move |inner| {
            let vars = vars.clone();
            prop_oneof![
                inner.clone().prop_map(not),
                prop::collection::vec(inner.clone(), 2..4).prop_map(and),
                prop::collection::vec(inner.clone(), 2..4).prop_map(or),
                (0..vars.len(), inner.clone()).prop_map({
                    let vars = vars.clone();
                    move |(i, f)| exists(vars[i].clone(), f)
                }),
                (0..vars.len(), inner).prop_map({
                    let vars = vars.clone();
                    move |(i, f)| forall(vars[i].clone(), f)
                }),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn optimized_matches_plain_reference(
            n in 1usize..4,
            edges in prop::collection::vec((0usize..4, 0usize..4), 0..8),
            unary in prop::collection::vec(0usize..4, 0..3),
            f in arb_formula(vec!["a".into(), "b".into(), "c".into()], 3),
        ) {
            let vocab = crate::structure::Vocabulary::new([("E", 2), ("P", 1)]).unwrap();
            let mut tuples: Vec<(String, Tuple)> = Vec::new();
            for (x, y) in edges {
                if x < n && y < n {
                    tuples.push(("E".to_string(), vec![x, y]));
                }
            }
            for x in unary {
                if x < n {
                    tuples.push(("P".to_string(), vec![x]));
                }
            }
            let a = Structure::new(vocab, n, tuples).unwrap();
            // bind any free variables to element 0
            let asg = Assignment::of_vars(f.free_vars().into_iter().map(|v| (v, 0usize)));
            let mut env = asg.vars.clone();
            let expect = eval_plain(&a, &f, &mut env);
            prop_assert_eq!(eval_naive(&a, &f, &asg).unwrap(), expect);
            // normal forms preserve truth
            let pre = crate::formula::to_prenex(&f);
            prop_assert_eq!(eval_naive(&a, &pre, &asg).unwrap(), expect);
            let nnf = crate::formula::to_nnf(&f);
            prop_assert_eq!(eval_naive(&a, &nnf, &asg).unwrap(), expect);
        }
    }

    use crate::parse::parse;
    use crate::prop::{pand, pnot, por, pvar, PropFormula};

    fn triangle_sentence() -> Formula {
        parse(
            "EX x. EX y. EX z. (!x=y & !x=z & !y=z \
             & E(x,y) & E(y,x) & E(x,z) & E(z,x) & E(y,z) & E(z,y))",
        )
        .unwrap()
    }

    #[test]
    fn k3_models_triangle_sentence() {
        let k3 = Graph::complete(3).unwrap();
        assert!(eval_sentence(k3.as_structure(), &triangle_sentence()).unwrap());
    }

    #[test]
    fn p3_does_not_model_triangle_sentence() {
        let p3 = Graph::path(3).unwrap();
        assert!(!eval_sentence(p3.as_structure(), &triangle_sentence()).unwrap());
    }

    #[test]
    fn reflexivity_tautology_holds_everywhere() {
        let f = exists("x", eq("x", "x"));
        for n in 1..4 {
            let g = Graph::edgeless(n).unwrap();
            assert!(eval_sentence(g.as_structure(), &f).unwrap());
        }
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let g = Graph::complete(2).unwrap();
        let f = atom("E", ["x", "y"]);
        assert!(matches!(
            eval_naive(g.as_structure(), &f, &Assignment::empty()),
            Err(OracleError::UnboundVariable(_))
        ));
        let asg = Assignment::of_vars([("x", 0), ("y", 1)]);
        assert!(eval_naive(g.as_structure(), &f, &asg).unwrap());
    }

    #[test]
    fn forall_exists_on_cycle() {
        // every vertex of C4 has a neighbor
        let c4 = Graph::cycle(4).unwrap();
        let f = forall("x", exists("y", atom("E", ["x", "y"])));
        assert!(eval_sentence(c4.as_structure(), &f).unwrap());
        // but not in an edgeless graph
        let e2 = Graph::edgeless(2).unwrap();
        assert!(!eval_sentence(e2.as_structure(), &f).unwrap());
    }

    #[test]
    fn no_hom_from_c5_to_k2() {
        let c5 = Graph::cycle(5).unwrap();
        let k2 = Graph::complete(2).unwrap();
        assert_eq!(
            brute_hom(k2.as_structure(), c5.as_structure(), &Limits::default()).unwrap(),
            None
        );
    }

    #[test]
    fn hom_from_c5_to_k3_exists() {
        let c5 = Graph::cycle(5).unwrap();
        let k3 = Graph::complete(3).unwrap();
        let h = brute_hom(k3.as_structure(), c5.as_structure(), &Limits::default())
            .unwrap()
            .expect("C5 is 3-colorable");
        assert!(check_hom(k3.as_structure(), c5.as_structure(), &h));
    }

    #[test]
    fn identity_hom_always_found() {
        let g = Graph::cycle(4).unwrap();
        let h = brute_hom(g.as_structure(), g.as_structure(), &Limits::default())
            .unwrap()
            .expect("identity exists");
        assert!(check_hom(g.as_structure(), g.as_structure(), &h));
    }

    #[test]
    fn p3_does_not_embed_into_k2_but_maps_into_it() {
        let p3 = Graph::path(3).unwrap();
        let k2 = Graph::complete(2).unwrap();
        assert!(brute_hom(k2.as_structure(), p3.as_structure(), &Limits::default())
            .unwrap()
            .is_some());
        assert!(brute_emb(k2.as_structure(), p3.as_structure(), &Limits::default())
            .unwrap()
            .is_none());
    }

    #[test]
    fn p3_embeds_into_itself() {
        let p3 = Graph::path(3).unwrap();
        let h = brute_emb(p3.as_structure(), p3.as_structure(), &Limits::default())
            .unwrap()
            .unwrap();
        assert!(check_emb(p3.as_structure(), p3.as_structure(), &h));
    }

    fn petersen() -> Graph {
        // outer C5, inner 5-star polygon, spokes
        let mut g = Graph::edgeless(10).unwrap();
        for i in 0..5 {
            g.add_edge(i, (i + 1) % 5);
            g.add_edge(5 + i, 5 + (i + 2) % 5);
            g.add_edge(i, 5 + i);
        }
        g
    }

    #[test]
    fn no_triangle_in_petersen() {
        let k3 = Graph::complete(3).unwrap();
        let p = petersen();
        assert!(brute_emb(p.as_structure(), k3.as_structure(), &Limits::default())
            .unwrap()
            .is_none());
        assert_eq!(brute_clique(&p, 3, &Limits::default()).unwrap(), None);
    }

    #[test]
    fn vocabulary_mismatch_is_reported() {
        let g = Graph::complete(2).unwrap();
        let s = Structure::empty_relations(
            crate::structure::Vocabulary::new([("R", 1)]).unwrap(),
            2,
        )
        .unwrap();
        assert_eq!(
            brute_hom(g.as_structure(), &s, &Limits::default()).unwrap_err(),
            OracleError::VocabularyMismatch
        );
    }

    #[test]
    fn k4_has_a_4_clique() {
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(
            brute_clique(&k4, 4, &Limits::default()).unwrap(),
            Some(vec![0, 1, 2, 3])
        );
    }

    #[test]
    fn c5_is_triangle_free() {
        let c5 = Graph::cycle(5).unwrap();
        assert_eq!(brute_clique(&c5, 3, &Limits::default()).unwrap(), None);
    }

    #[test]
    fn clique_agrees_with_embedding_of_complete_pattern() {
        // brute_clique(G,k) must agree with brute_emb(G, K_k)
        let mut g = Graph::edgeless(5).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (2, 4)] {
            g.add_edge(a, b);
        }
        for k in 1..=4 {
            let kk = Graph::complete(k).unwrap();
            let via_emb = brute_emb(g.as_structure(), kk.as_structure(), &Limits::default())
                .unwrap()
                .is_some();
            let via_clique = brute_clique(&g, k, &Limits::default()).unwrap().is_some();
            assert_eq!(via_emb, via_clique, "k={k}");
        }
    }

    #[test]
    fn wsat_contradiction_and_positive_unit() {
        let contra = pand(pvar(1), pnot(pvar(1)));
        for k in 0..=1 {
            assert_eq!(brute_wsat(&contra, k, &Limits::default()).unwrap(), None);
        }
        let unit = pvar(1);
        assert_eq!(brute_wsat(&unit, 0, &Limits::default()).unwrap(), None);
        assert_eq!(
            brute_wsat(&unit, 1, &Limits::default()).unwrap(),
            Some([1].into_iter().collect())
        );
    }

    #[test]
    fn wsat_figure_formula_weight_one() {
        // (X|Y|Z) & (X|!Y|Z) & (X|!Y|!Z) & (!X|Y|!Z) with X=0, Y=1, Z=2
        let cl = |a: PropFormula, b: PropFormula, c: PropFormula| por(por(a, b), c);
        let f = PropFormula::BigAnd(vec![
            cl(pvar(0), pvar(1), pvar(2)),
            cl(pvar(0), pnot(pvar(1)), pvar(2)),
            cl(pvar(0), pnot(pvar(1)), pnot(pvar(2))),
            cl(pnot(pvar(0)), pvar(1), pnot(pvar(2))),
        ]);
        let w1 = brute_wsat(&f, 1, &Limits::default()).unwrap().unwrap();
        assert_eq!(w1, [0].into_iter().collect());
        assert!(check_wsat(&f, &w1, 1));
    }

    #[test]
    fn fagin_vertex_cover_facts() {
        // phi_VC with X unary: ALL y. ALL z. (!E(y,z) | X(y) | X(z))
        let phi = forall(
            "y",
            forall("z", or([not(atom("E", ["y", "z"])), atom("X", ["y"]), atom("X", ["z"])])),
        );
        let p3 = Graph::path(3).unwrap();
        let b = brute_fagin(p3.as_structure(), &phi, ("X", 1), 1, &Limits::default())
            .unwrap()
            .expect("middle vertex covers P3");
        assert_eq!(b, [vec![1]].into_iter().collect());
        let k3 = Graph::complete(3).unwrap();
        assert_eq!(
            brute_fagin(k3.as_structure(), &phi, ("X", 1), 1, &Limits::default()).unwrap(),
            None
        );
        assert!(brute_fagin(k3.as_structure(), &phi, ("X", 1), 2, &Limits::default())
            .unwrap()
            .is_some());
    }

    #[test]
    fn fagin_clique_formula_full_witness() {
        // phi_CLI: ALL y. ALL z. (!(X(y) & X(z)) | y=z | E(y,z))
        let phi = forall(
            "y",
            forall(
                "z",
                or([
                    not(and([atom("X", ["y"]), atom("X", ["z"])])),
                    eq("y", "z"),
                    atom("E", ["y", "z"]),
                ]),
            ),
        );
        let k3 = Graph::complete(3).unwrap();
        let b = brute_fagin(k3.as_structure(), &phi, ("X", 1), 3, &Limits::default())
            .unwrap()
            .unwrap();
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn too_large_guard_trips() {
        let g = Graph::complete(6).unwrap();
        let tiny = Limits { max_candidates: 10 };
        assert!(matches!(
            brute_hom(g.as_structure(), g.as_structure(), &tiny),
            Err(OracleError::TooLarge { .. })
        ));
    }

    #[test]
    fn emb_implies_hom_on_random_cases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let na = rng.gen_range(1..=5);
            let nb = rng.gen_range(1..=3);
            let mut a = Graph::edgeless(na).unwrap();
            let mut b = Graph::edgeless(nb).unwrap();
            for i in 0..na {
                for j in i + 1..na {
                    if rng.gen_bool(0.5) {
                        a.add_edge(i, j);
                    }
                }
            }
            for i in 0..nb {
                for j in i + 1..nb {
                    if rng.gen_bool(0.5) {
                        b.add_edge(i, j);
                    }
                }
            }
            let lim = Limits::default();
            let emb = brute_emb(a.as_structure(), b.as_structure(), &lim).unwrap();
            let hom = brute_hom(a.as_structure(), b.as_structure(), &lim).unwrap();
            if emb.is_some() {
                assert!(hom.is_some());
            }
        }
    }
}
