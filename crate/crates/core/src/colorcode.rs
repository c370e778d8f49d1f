//! The Σ₁ model-checking pipelines: reduction to homomorphism over an
//! expanded structure, color coding of inequality literals through perfect
//! hash families, and the embedding solver built from both.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{
    self, and, atom, canonical_query, classify, exists, formula_graph, not, to_prenex, Formula,
};
use crate::hom::{solve_hom, HomError};
use crate::oracle::{all_tuples, check_emb, eval_naive, Assignment, OracleError};
use crate::structure::{color_expand, Element, Graph, Structure, StructureError};
use crate::treewidth::heuristic_td;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColorError {
    #[error("formula is not an existential prenex sentence")]
    NotSigma1,
    #[error("disjunctive normal form would have over {cap} disjuncts")]
    DnfBlowup { cap: usize },
    #[error("deterministic hash family infeasible: {0}")]
    InfeasibleDeterministic(String),
    #[error("complement relation would need {candidates} tuples, over the cap {cap}")]
    ComplementTooLarge { candidates: u128, cap: u64 },
    #[error(transparent)]
    Hom(#[from] HomError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Default cap on disjunct counts produced by DNF expansion.
pub const DNF_CAP: usize = 10_000;

// ---------------------------------------------------------------------------
// Perfect hash families
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyMode {
    /// Coverage verified exhaustively: for every `l`-subset of the domain
    /// some function is injective on it.
    Deterministic,
    /// `⌈e^l · ln(1/ε)⌉` uniform colorings from per-trial seeded streams;
    /// per-subset failure probability at most `(1 - l!/l^l)^trials`.
    Randomized { seed: u64, epsilon: f64 },
}

/// A family of colorings `{0..n-1} -> {1..l}`.
#[derive(Debug, Clone)]
pub struct HashFamily {
    pub n: usize,
    pub l: usize,
    pub functions: Vec<Vec<usize>>,
    pub mode: FamilyMode,
}

impl HashFamily {
    /// Upper bound on the probability that no function of a randomized
    /// family is injective on a fixed `l`-subset.
    pub fn failure_bound(&self) -> f64 {
        match self.mode {
            FamilyMode::Deterministic => 0.0,
            FamilyMode::Randomized { .. } => {
                let l = self.l as f64;
                let mut inj = 1.0;
                for i in 0..self.l {
                    inj *= (l - i as f64) / l;
                }
                (1.0 - inj).powi(self.functions.len() as i32)
            }
        }
    }
}

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

fn smallest_prime_above(n: usize) -> usize {
    let mut p = n + 1;
    loop {
        if p >= 2 && (2..=((p as f64).sqrt() as usize + 1)).all(|d| p % d != 0) {
            return p;
        }
        p += 1;
    }
}

const SUBSET_CAP: u128 = 1_000_000;
const STAGE2_CAP: u128 = 10_000_000;

/// Builds an `l`-perfect family of hash functions on `{0..n-1}`.
///
/// Deterministic mode composes the affine maps `x ↦ ((a·x+b) mod p) mod l²`
/// (`p` prime above `n`, all `a, b < p`) with all maps `{0..l²-1} → {1..l}`
/// (enumerated on the image, which yields the same composites), keeps a
/// function only when it covers a still-uncovered subset, and verifies
/// coverage exhaustively; it requires `C(n,l) ≤ 10⁶`. Randomized mode draws
/// `⌈e^l·ln(1/ε)⌉` uniform colorings from streams seeded by (seed, trial).
pub fn build_hash_family(n: usize, l: usize, mode: FamilyMode) -> Result<HashFamily, ColorError> {
    assert!(n >= 1 && l >= 1);
    if l == 1 {
        return Ok(HashFamily { n, l, functions: vec![vec![1; n]], mode });
    }
    match mode {
        FamilyMode::Randomized { seed, epsilon } => {
            use rand::{Rng, SeedableRng};
            let trials = ((l as f64).exp() * (1.0 / epsilon).ln()).ceil().max(1.0) as usize;
            let mut functions = Vec::with_capacity(trials);
            for trial in 0..trials {
                let stream = seed ^ ((trial as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(stream);
                functions.push((0..n).map(|_| rng.gen_range(1..=l)).collect());
            }
            Ok(HashFamily { n, l, functions, mode: FamilyMode::Randomized { seed, epsilon } })
        }
        FamilyMode::Deterministic => {
            if l > n {
                return Err(ColorError::InfeasibleDeterministic(format!(
                    "no injective map from an {l}-subset exists with domain size {n}"
                )));
            }
            let subsets = binomial(n as u128, l as u128);
            if subsets > SUBSET_CAP {
                return Err(ColorError::InfeasibleDeterministic(format!(
                    "C({n},{l}) = {subsets} subsets exceed the exhaustive-coverage cap; \
                     use randomized mode"
                )));
            }
            let mut uncovered: Vec<Vec<usize>> = Vec::new();
            crate::oracle::for_each_k_subset(n, l, |s| {
                uncovered.push(s.to_vec());
                false
            });
            let p = smallest_prime_above(n.max(l * l));
            let mut functions: Vec<Vec<usize>> = Vec::new();
            let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
            'outer: for a in 1..p {
                for b in 0..p {
                    if uncovered.is_empty() {
                        break 'outer;
                    }
                    let h: Vec<usize> = (0..n).map(|x| ((a * x + b) % p) % (l * l)).collect();
                    let image: Vec<usize> = h.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
                    let g_count = (l as u128).checked_pow(image.len() as u32).unwrap_or(u128::MAX);
                    if g_count > STAGE2_CAP {
                        return Err(ColorError::InfeasibleDeterministic(format!(
                            "second-stage enumeration of {g_count} maps exceeds the cap"
                        )));
                    }
                    // enumerate g over the image only: composites agree with
                    // enumerating g over all of 0..l²
                    let mut g = vec![1usize; image.len()];
                    loop {
                        let assign: BTreeMap<usize, usize> =
                            image.iter().copied().zip(g.iter().copied()).collect();
                        let f: Vec<usize> = h.iter().map(|v| assign[v]).collect();
                        if !seen.contains(&f) {
                            let before = uncovered.len();
                            uncovered.retain(|s| {
                                let colors: BTreeSet<usize> = s.iter().map(|&x| f[x]).collect();
                                colors.len() < l
                            });
                            if uncovered.len() < before {
                                seen.insert(f.clone());
                                functions.push(f);
                            }
                        }
                        if uncovered.is_empty() {
                            break;
                        }
                        // odometer over digits 1..=l, most significant first
                        let mut pos = image.len();
                        let mut carried = true;
                        while pos > 0 {
                            pos -= 1;
                            if g[pos] < l {
                                g[pos] += 1;
                                carried = false;
                                break;
                            }
                            g[pos] = 1;
                        }
                        if carried {
                            break;
                        }
                    }
                }
            }
            if !uncovered.is_empty() {
                return Err(ColorError::InfeasibleDeterministic(format!(
                    "{} subsets remained uncovered",
                    uncovered.len()
                )));
            }
            // exhaustive verification of the invariant
            let mut ok = true;
            crate::oracle::for_each_k_subset(n, l, |s| {
                let covered = functions.iter().any(|f| {
                    let colors: BTreeSet<usize> = s.iter().map(|&x| f[x]).collect();
                    colors.len() == l
                });
                if !covered {
                    ok = false;
                    true
                } else {
                    false
                }
            });
            if !ok {
                return Err(ColorError::InfeasibleDeterministic(
                    "exhaustive verification failed".into(),
                ));
            }
            Ok(HashFamily { n, l, functions, mode: FamilyMode::Deterministic })
        }
    }
}

// ---------------------------------------------------------------------------
// DNF of quantifier-free matrices
// ---------------------------------------------------------------------------

/// A literal of a quantifier-free matrix in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Lit {
    Pos(String, Vec<String>),
    Neg(String, Vec<String>),
    EqPos(String, String),
    EqNeg(String, String),
}

impl Lit {
    pub fn to_formula(&self) -> Formula {
        match self {
            Lit::Pos(r, args) => atom(r.clone(), args.clone()),
            Lit::Neg(r, args) => not(atom(r.clone(), args.clone())),
            Lit::EqPos(x, y) => formula::eq(x.clone(), y.clone()),
            Lit::EqNeg(x, y) => not(formula::eq(x.clone(), y.clone())),
        }
    }

    pub fn vars(&self) -> Vec<&String> {
        match self {
            Lit::Pos(_, args) | Lit::Neg(_, args) => args.iter().collect(),
            Lit::EqPos(x, y) | Lit::EqNeg(x, y) => vec![x, y],
        }
    }
}

/// Expands an NNF quantifier-free matrix into a disjunction of conjunctions
/// of literals, capped at `cap` disjuncts. `True` yields one empty disjunct;
/// `False` yields none.
pub fn dnf(matrix: &Formula, cap: usize) -> Result<Vec<Vec<Lit>>, ColorError> {
    fn go(f: &Formula, cap: usize) -> Result<Vec<Vec<Lit>>, ColorError> {
        match f {
            Formula::True => Ok(vec![Vec::new()]),
            Formula::False => Ok(Vec::new()),
            Formula::Atom { rel, args } => Ok(vec![vec![Lit::Pos(rel.clone(), args.clone())]]),
            Formula::Eq(x, y) => Ok(vec![vec![Lit::EqPos(x.clone(), y.clone())]]),
            Formula::Not(g) => match &**g {
                Formula::Atom { rel, args } => {
                    Ok(vec![vec![Lit::Neg(rel.clone(), args.clone())]])
                }
                Formula::Eq(x, y) => Ok(vec![vec![Lit::EqNeg(x.clone(), y.clone())]]),
                _ => unreachable!("matrix is in negation normal form"),
            },
            Formula::Or(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    out.extend(go(g, cap)?);
                    if out.len() > cap {
                        return Err(ColorError::DnfBlowup { cap });
                    }
                }
                Ok(out)
            }
            Formula::And(gs) => {
                let mut acc: Vec<Vec<Lit>> = vec![Vec::new()];
                for g in gs {
                    let parts = go(g, cap)?;
                    let mut next = Vec::with_capacity(acc.len() * parts.len());
                    for left in &acc {
                        for right in &parts {
                            let mut merged = left.clone();
                            merged.extend(right.iter().cloned());
                            next.push(merged);
                            if next.len() > cap {
                                return Err(ColorError::DnfBlowup { cap });
                            }
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
            Formula::Exists(..) | Formula::Forall(..) => {
                unreachable!("matrix is quantifier-free")
            }
        }
    }
    let mut disjuncts = go(matrix, cap)?;
    for d in &mut disjuncts {
        d.sort();
        d.dedup();
    }
    Ok(disjuncts)
}

// ---------------------------------------------------------------------------
// MC(Σ₁) via homomorphisms
// ---------------------------------------------------------------------------

/// Outcome of a Σ₁ model-checking run.
#[derive(Debug, Clone)]
pub struct McOutcome {
    pub holds: bool,
    /// Witness assignment for the leading existential block, re-verified
    /// against the original sentence.
    pub witness: Option<BTreeMap<String, Element>>,
    /// Per-subset failure bound carried by a randomized family, if any.
    pub failure_bound: Option<f64>,
}

/// Splits an existential sentence into its prefix variables and NNF matrix.
/// Already-prenex inputs keep their variable names, so witnesses come back
/// under the caller's names; other inputs are prenexed (which renames).
fn sigma1_parts(phi: &Formula) -> Result<(Vec<String>, Formula, Formula), ColorError> {
    let mut p = if classify(phi).is_ok() { phi.clone() } else { to_prenex(phi) };
    {
        let mut names = BTreeSet::new();
        let mut cur = &p;
        let mut shadowed = false;
        loop {
            match cur {
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    shadowed |= !names.insert(v.clone());
                    cur = g;
                }
                _ => break,
            }
        }
        if shadowed {
            p = to_prenex(phi);
        }
    }
    if !p.is_sentence() {
        return Err(ColorError::NotSigma1);
    }
    let info = classify(&p).map_err(|_| ColorError::NotSigma1)?;
    if !info.in_sigma(1) {
        return Err(ColorError::NotSigma1);
    }
    let mut vars = Vec::new();
    let mut cur = &p;
    while let Formula::Exists(v, g) = cur {
        vars.push(v.clone());
        cur = g;
    }
    Ok((vars, crate::formula::to_nnf(cur), p))
}

const COMPLEMENT_CAP: u64 = 1_000_000;

/// The expanded structure of the Σ₁-to-homomorphism reduction: the input
/// plus an empty padding relation, complement relations, and equality and
/// inequality relations. Returns the structure and the symbol names
/// `(padding, complements, eq, neq)`.
struct ExpandedTarget {
    structure: Structure,
    padding: String,
    complements: BTreeMap<String, String>,
    eq_name: String,
    neq_name: String,
}

fn expand_target(a: &Structure) -> Result<ExpandedTarget, ColorError> {
    let n = a.universe();
    let padding = a.vocab().fresh_name("S");
    let mut out = a.with_relation(&padding, 2, std::iter::empty::<Vec<Element>>())?;
    let mut complements = BTreeMap::new();
    for sym in a.vocab().symbols().to_vec() {
        let candidates = (n as u128).pow(sym.arity as u32);
        if candidates > COMPLEMENT_CAP as u128 {
            return Err(ColorError::ComplementTooLarge { candidates, cap: COMPLEMENT_CAP });
        }
        let name = out.vocab().fresh_name(&format!("not_{}", sym.name));
        let tuples: Vec<_> = all_tuples(n, sym.arity)
            .into_iter()
            .filter(|t| !a.has_tuple(&sym.name, t))
            .collect();
        out = out.with_relation(&name, sym.arity, tuples)?;
        complements.insert(sym.name.clone(), name);
    }
    // complement of the padding relation is full
    let not_padding = out.vocab().fresh_name(&format!("not_{padding}"));
    out = out.with_relation(&not_padding, 2, all_tuples(n, 2))?;
    complements.insert(padding.clone(), not_padding);
    let eq_name = out.vocab().fresh_name("eq");
    out = out.with_relation(&eq_name, 2, (0..n).map(|e| vec![e, e]))?;
    let neq_name = out.vocab().fresh_name("neq");
    out = out.with_relation(
        &neq_name,
        2,
        all_tuples(n, 2).into_iter().filter(|t| t[0] != t[1]),
    )?;
    Ok(ExpandedTarget { structure: out, padding, complements, eq_name, neq_name })
}

/// Builds the pattern structure of one disjunct: universe = the sentence's
/// variables, one tuple per literal, over the expanded vocabulary.
fn disjunct_pattern(
    vars: &[String],
    lits: &[Lit],
    target: &ExpandedTarget,
) -> Result<Structure, ColorError> {
    let index = |v: &String| vars.iter().position(|w| w == v).expect("literal variable");
    let mut b = Structure::empty_relations(target.structure.vocab().clone(), vars.len())?;
    for (i, v) in vars.iter().enumerate() {
        b.provenance.insert(i, v.clone());
    }
    for lit in lits {
        match lit {
            Lit::Pos(r, args) => {
                b.insert_tuple(r, args.iter().map(index).collect());
            }
            Lit::Neg(r, args) => {
                b.insert_tuple(&target.complements[r], args.iter().map(index).collect());
            }
            Lit::EqPos(x, y) => b.insert_tuple(&target.eq_name, vec![index(x), index(y)]),
            Lit::EqNeg(x, y) => b.insert_tuple(&target.neq_name, vec![index(x), index(y)]),
        }
    }
    Ok(b)
}

/// Pads a disjunct with trivially-true negated literals of the empty padding
/// relation until its co-occurrence graph equals the graph of the whole
/// sentence, so every pattern has the same Gaifman graph.
fn pad_disjunct(lits: &mut Vec<Lit>, vars: &[String], sentence_graph: &Graph) {
    let mut present: BTreeSet<(usize, usize)> = BTreeSet::new();
    let index = |v: &String| vars.iter().position(|w| w == v).expect("var");
    for lit in lits.iter() {
        let vs = lit.vars();
        for (i, x) in vs.iter().enumerate() {
            for y in &vs[i + 1..] {
                if x != y {
                    let (a, b) = (index(x), index(y));
                    present.insert((a.min(b), a.max(b)));
                }
            }
        }
    }
    for a in 0..vars.len() {
        for b in a + 1..vars.len() {
            if sentence_graph.has_edge(a, b) && !present.contains(&(a, b)) {
                lits.push(Lit::Neg("__pad__".into(), vec![vars[a].clone(), vars[b].clone()]));
            }
        }
    }
}

fn verify_witness(
    a: &Structure,
    matrix: &Formula,
    vars: &[String],
    h: &[Element],
) -> Result<BTreeMap<String, Element>, ColorError> {
    let map: BTreeMap<String, Element> =
        vars.iter().cloned().zip(h.iter().copied()).collect();
    let asg = Assignment { vars: map.clone(), rels: BTreeMap::new() };
    debug_assert!(eval_naive(a, matrix, &asg)?);
    Ok(map)
}

/// Decides `A ⊨ φ` for existential `φ` through the homomorphism problem:
/// the matrix is put in disjunctive normal form, each disjunct is padded to
/// the sentence's full co-occurrence graph with dummy negated literals of an
/// empty relation, and turned into a pattern over the expansion of `A` with
/// complement, equality, and inequality relations; the answer is the
/// disjunction of the homomorphism tests, each solved by the tree
/// decomposition dynamic program.
pub fn mc_sigma1_via_hom(a: &Structure, phi: &Formula) -> Result<McOutcome, ColorError> {
    mc_sigma1_via_hom_capped(a, phi, DNF_CAP)
}

pub fn mc_sigma1_via_hom_capped(
    a: &Structure,
    phi: &Formula,
    cap: usize,
) -> Result<McOutcome, ColorError> {
    let (vars, matrix, prenex) = sigma1_parts(phi)?;
    if vars.is_empty() {
        let holds = eval_naive(a, &matrix, &Assignment::empty())?;
        return Ok(McOutcome { holds, witness: None, failure_bound: None });
    }
    let sentence_graph = formula_graph(&prenex);
    let disjuncts = dnf(&matrix, cap)?;
    let target = expand_target(a)?;
    for mut lits in disjuncts {
        pad_disjunct(&mut lits, &vars, &sentence_graph);
        let lits: Vec<Lit> = lits
            .into_iter()
            .map(|l| match l {
                Lit::Neg(r, args) if r == "__pad__" => Lit::Neg(target.padding.clone(), args),
                other => other,
            })
            .collect();
        let b = disjunct_pattern(&vars, &lits, &target)?;
        let td = heuristic_td(&b.gaifman());
        if let Some(h) = solve_hom(&target.structure, &b, &td)? {
            let witness = verify_witness(a, &matrix, &vars, &h)?;
            return Ok(McOutcome { holds: true, witness: Some(witness), failure_bound: None });
        }
    }
    Ok(McOutcome { holds: false, witness: None, failure_bound: None })
}

// ---------------------------------------------------------------------------
// Color coding
// ---------------------------------------------------------------------------

/// Enumerates colorings `vars -> {1..colors}` that are proper on the given
/// inequality pairs, in lexicographic order.
fn proper_colorings(k: usize, colors: usize, ineq: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut gamma = vec![0usize; k];
    fn go(
        pos: usize,
        k: usize,
        colors: usize,
        ineq: &[(usize, usize)],
        gamma: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if pos == k {
            out.push(gamma.clone());
            return;
        }
        'cand: for c in 1..=colors {
            for &(i, j) in ineq {
                let other = if i == pos && j < pos {
                    j
                } else if j == pos && i < pos {
                    i
                } else {
                    continue;
                };
                if gamma[other] == c {
                    continue 'cand;
                }
            }
            gamma[pos] = c;
            go(pos + 1, k, colors, ineq, gamma, out);
        }
        gamma[pos] = 0;
    }
    go(0, k, colors, ineq, &mut gamma, &mut out);
    out
}

/// Decides `A ⊨ φ` for existential `φ` by color coding: the matrix is split
/// into conjunctions of literals; per disjunct, negated equalities are
/// replaced by color constraints under every proper coloring of the
/// inequality graph, the structure is expanded by every coloring from an
/// `l`-perfect hash family (`l = 1..k`), and each colored instance runs
/// through the homomorphism pipeline. Deterministic families give exact
/// answers; randomized families never report false positives and miss with
/// probability at most the family's failure bound.
pub fn mc_sigma1_neq_color_coding(
    a: &Structure,
    phi: &Formula,
    mode: FamilyMode,
) -> Result<McOutcome, ColorError> {
    mc_sigma1_neq_color_coding_capped(a, phi, mode, DNF_CAP)
}

pub fn mc_sigma1_neq_color_coding_capped(
    a: &Structure,
    phi: &Formula,
    mode: FamilyMode,
    cap: usize,
) -> Result<McOutcome, ColorError> {
    let (vars, matrix, _prenex) = sigma1_parts(phi)?;
    if vars.is_empty() {
        let holds = eval_naive(a, &matrix, &Assignment::empty())?;
        return Ok(McOutcome { holds, witness: None, failure_bound: None });
    }
    let k = vars.len();
    let disjuncts = dnf(&matrix, cap)?;
    let mut failure_bound: Option<f64> = None;
    for lits in disjuncts {
        let index = |v: &String| vars.iter().position(|w| w == v).expect("var");
        let ineq: Vec<(usize, usize)> = lits
            .iter()
            .filter_map(|l| match l {
                Lit::EqNeg(x, y) if x != y => Some((index(x), index(y))),
                _ => None,
            })
            .collect();
        let disjunct_formula = |body: Vec<Formula>| {
            let mut f = and(body);
            for v in vars.iter().rev() {
                f = exists(v.clone(), f);
            }
            f
        };
        if ineq.is_empty() {
            // single trivial coloring class: the disjunct runs directly
            let f = disjunct_formula(lits.iter().map(Lit::to_formula).collect());
            let out = mc_sigma1_via_hom_capped(a, &f, cap)?;
            if out.holds {
                let witness = verify_witness(
                    a,
                    &matrix,
                    &vars,
                    &vars.iter().map(|v| out.witness.as_ref().unwrap()[v]).collect::<Vec<_>>(),
                )?;
                return Ok(McOutcome { holds: true, witness: Some(witness), failure_bound: None });
            }
            continue;
        }
        // unsatisfiable inequality x != x
        if lits.iter().any(|l| matches!(l, Lit::EqNeg(x, y) if x == y)) {
            continue;
        }
        for l in 1..=k.min(a.universe()) {
            let family = build_hash_family(a.universe(), l, mode.clone())?;
            if let FamilyMode::Randomized { .. } = family.mode {
                let b = family.failure_bound();
                failure_bound = Some(failure_bound.map_or(b, |x: f64| x.max(b)));
            }
            for gamma in proper_colorings(k, l, &ineq) {
                for f in &family.functions {
                    let (colored, color_names) = color_expand(a, f, l)?;
                    // replace each inequality literal by color constraints
                    let mut body: Vec<Formula> = Vec::new();
                    for lit in &lits {
                        match lit {
                            Lit::EqNeg(x, y) if x != y => {
                                body.push(atom(
                                    color_names[gamma[index(x)] - 1].clone(),
                                    [x.clone()],
                                ));
                                body.push(atom(
                                    color_names[gamma[index(y)] - 1].clone(),
                                    [y.clone()],
                                ));
                            }
                            other => body.push(other.to_formula()),
                        }
                    }
                    let phi_gamma = disjunct_formula(body);
                    debug_assert!({
                        let lhs = crate::formula::formula_graph_neq(&phi_gamma);
                        let rhs = crate::formula::formula_graph_neq(&disjunct_formula(
                            lits.iter().map(Lit::to_formula).collect(),
                        ));
                        lhs == rhs
                    });
                    let out = mc_sigma1_via_hom_capped(&colored, &phi_gamma, cap)?;
                    if out.holds {
                        let w = out.witness.as_ref().unwrap();
                        let h: Vec<Element> = vars.iter().map(|v| w[v]).collect();
                        let witness = verify_witness(a, &matrix, &vars, &h)?;
                        return Ok(McOutcome {
                            holds: true,
                            witness: Some(witness),
                            failure_bound: None,
                        });
                    }
                }
            }
        }
    }
    Ok(McOutcome { holds: false, witness: None, failure_bound })
}

/// Finds an embedding `B → A` through the chain: canonical query of the
/// pattern, color coding of its inequalities, homomorphism dynamic program.
pub fn solve_emb(
    a: &Structure,
    b: &Structure,
    mode: FamilyMode,
) -> Result<Option<Vec<Element>>, ColorError> {
    let (phi_b, _) = canonical_query(b);
    let out = mc_sigma1_neq_color_coding(a, &phi_b, mode)?;
    match out.witness {
        Some(w) => {
            let h: Vec<Element> = (0..b.universe()).map(|i| w[&format!("x{i}")]).collect();
            debug_assert!(check_emb(a, b, &h));
            Ok(Some(h))
        }
        None => Ok(None),
    }
}
