//! First-order formulas: AST, canonical printing, normal forms, fragment
//! classification, formula graphs, and canonical queries.
//!
//! The concrete syntax is `EX v.` / `ALL v.` for quantifiers, `&`, `|`, `!`
//! for connectives (precedence `!` > `&` > `|`), atoms `R(x,y)`, equalities
//! `x=y`, and the constants `true` / `false`. Quantifier scope extends
//! maximally to the right; parentheses override.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::structure::{Graph, Structure, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown relation: {0}")]
    UnknownRelation(String),
    #[error("formula is not in prenex form")]
    NotPrenex,
}

/// A first-order formula over relational vocabularies with equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom { rel: String, args: Vec<String> },
    Eq(String, String),
    Not(Box<Formula>),
    /// Conjunction; invariant: at least two conjuncts, none of them `And`.
    And(Vec<Formula>),
    /// Disjunction; invariant: at least two disjuncts, none of them `Or`.
    Or(Vec<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

pub fn atom(rel: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Formula {
    Formula::Atom {
        rel: rel.into(),
        args: args.into_iter().map(Into::into).collect(),
    }
}

pub fn eq(x: impl Into<String>, y: impl Into<String>) -> Formula {
    Formula::Eq(x.into(), y.into())
}

pub fn not(f: Formula) -> Formula {
    Formula::Not(Box::new(f))
}

/// Conjunction. Flattens nested conjunctions, drops `true`, collapses to
/// `false` on any `false` conjunct; the empty conjunction is `true`.
pub fn and(fs: impl IntoIterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for f in fs {
        match f {
            Formula::True => {}
            Formula::False => return Formula::False,
            Formula::And(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Formula::True,
        1 => out.pop().unwrap(),
        _ => Formula::And(out),
    }
}

/// Disjunction, dual to [`and`]; the empty disjunction is `false`.
pub fn or(fs: impl IntoIterator<Item = Formula>) -> Formula {
    let mut out = Vec::new();
    for f in fs {
        match f {
            Formula::False => {}
            Formula::True => return Formula::True,
            Formula::Or(inner) => out.extend(inner),
            other => out.push(other),
        }
    }
    match out.len() {
        0 => Formula::False,
        1 => out.pop().unwrap(),
        _ => Formula::Or(out),
    }
}

pub fn exists(v: impl Into<String>, f: Formula) -> Formula {
    Formula::Exists(v.into(), Box::new(f))
}

pub fn forall(v: impl Into<String>, f: Formula) -> Formula {
    Formula::Forall(v.into(), Box::new(f))
}

/// `antecedent -> consequent`, compiled to `!antecedent | consequent`.
pub fn implies(a: Formula, b: Formula) -> Formula {
    or([not(a), b])
}

impl Formula {
    /// Canonical concrete syntax. `parse` is a left inverse on this output.
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.print_prec(0, &mut s);
        s
    }

    /// Encoding length `‖φ‖`: the character count of the canonical print.
    pub fn encoding_len(&self) -> usize {
        self.print().chars().count()
    }

    // level 0: disjunction position, 1: conjunction position, 2: unary operand
    fn print_prec(&self, level: u8, out: &mut String) {
        match self {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Atom { rel, args } => {
                out.push_str(rel);
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(a);
                }
                out.push(')');
            }
            Formula::Eq(x, y) => {
                out.push_str(x);
                out.push('=');
                out.push_str(y);
            }
            Formula::Not(f) => {
                out.push('!');
                f.print_prec(2, out);
            }
            Formula::And(fs) => {
                let paren = level > 1;
                if paren {
                    out.push('(');
                }
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" & ");
                    }
                    f.print_prec(1, out);
                }
                if paren {
                    out.push(')');
                }
            }
            Formula::Or(fs) => {
                let paren = level > 0;
                if paren {
                    out.push('(');
                }
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" | ");
                    }
                    f.print_prec(1, out);
                }
                if paren {
                    out.push(')');
                }
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let kw = if matches!(self, Formula::Exists(..)) { "EX" } else { "ALL" };
                let paren = level > 0;
                if paren {
                    out.push('(');
                }
                out.push_str(kw);
                out.push(' ');
                out.push_str(v);
                out.push_str(". ");
                f.print_prec(0, out);
                if paren {
                    out.push(')');
                }
            }
        }
    }

    /// All variables occurring in the formula (bound or free), in first
    /// occurrence order of an AST preorder walk; binders count as occurrences.
    pub fn all_vars(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.walk_vars(&mut |v| {
            if seen.insert(v.to_string()) {
                out.push(v.to_string());
            }
        });
        out
    }

    fn walk_vars(&self, f: &mut impl FnMut(&str)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => args.iter().for_each(|a| f(a)),
            Formula::Eq(x, y) => {
                f(x);
                f(y);
            }
            Formula::Not(g) => g.walk_vars(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.walk_vars(f)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                f(v);
                g.walk_vars(f);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
            match f {
                Formula::True | Formula::False => {}
                Formula::Atom { args, .. } => {
                    for a in args {
                        if !bound.contains(a) {
                            out.insert(a.clone());
                        }
                    }
                }
                Formula::Eq(x, y) => {
                    for a in [x, y] {
                        if !bound.contains(a) {
                            out.insert(a.clone());
                        }
                    }
                }
                Formula::Not(g) => go(g, bound, out),
                Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| go(g, bound, out)),
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    bound.push(v.clone());
                    go(g, bound, out);
                    bound.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Maximal nesting depth of quantifiers.
    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => 0,
            Formula::Not(g) => g.quantifier_rank(),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().map(|g| g.quantifier_rank()).max().unwrap_or(0)
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => 1 + g.quantifier_rank(),
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.quantifier_rank() == 0
    }

    /// Maximal arity over relation atoms; 0 when only equalities occur.
    pub fn vocab_arity(&self) -> usize {
        match self {
            Formula::Atom { args, .. } => args.len(),
            Formula::True | Formula::False | Formula::Eq(..) => 0,
            Formula::Not(g) => g.vocab_arity(),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().map(|g| g.vocab_arity()).max().unwrap_or(0)
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => g.vocab_arity(),
        }
    }

    /// Checks every atom against a vocabulary (name known, arity matching).
    pub fn check_vocab(&self, vocab: &Vocabulary, extra: &[(String, usize)]) -> Result<(), LogicError> {
        match self {
            Formula::Atom { rel, args } => {
                let arity = vocab
                    .arity_of(rel)
                    .or_else(|| extra.iter().find(|(n, _)| n == rel).map(|(_, a)| *a));
                match arity {
                    Some(a) if a == args.len() => Ok(()),
                    Some(a) => Err(LogicError::UnknownRelation(format!(
                        "{rel} used with {} arguments, declared arity {a}",
                        args.len()
                    ))),
                    None => Err(LogicError::UnknownRelation(rel.clone())),
                }
            }
            Formula::True | Formula::False | Formula::Eq(..) => Ok(()),
            Formula::Not(g) => g.check_vocab(vocab, extra),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().try_for_each(|g| g.check_vocab(vocab, extra))
            }
            Formula::Exists(_, g) | Formula::Forall(_, g) => g.check_vocab(vocab, extra),
        }
    }

    /// Replaces every atom node `rel(args)` by `f(rel, args)` wherever `f`
    /// returns `Some`. Negations above atoms are kept wrapping the result.
    pub fn map_atoms(&self, f: &mut impl FnMut(&str, &[String]) -> Option<Formula>) -> Formula {
        match self {
            Formula::Atom { rel, args } => f(rel, args).unwrap_or_else(|| self.clone()),
            Formula::True | Formula::False | Formula::Eq(..) => self.clone(),
            Formula::Not(g) => not(g.map_atoms(f)),
            Formula::And(gs) => and(gs.iter().map(|g| g.map_atoms(f)).collect::<Vec<_>>()),
            Formula::Or(gs) => or(gs.iter().map(|g| g.map_atoms(f)).collect::<Vec<_>>()),
            Formula::Exists(v, g) => exists(v.clone(), g.map_atoms(f)),
            Formula::Forall(v, g) => forall(v.clone(), g.map_atoms(f)),
        }
    }
}

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

/// Negation normal form: negations only directly in front of atoms.
pub fn to_nnf(f: &Formula) -> Formula {
    fn go(f: &Formula, neg: bool) -> Formula {
        match f {
            Formula::True => {
                if neg {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::False => {
                if neg {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::Atom { .. } | Formula::Eq(..) => {
                if neg {
                    not(f.clone())
                } else {
                    f.clone()
                }
            }
            Formula::Not(g) => go(g, !neg),
            Formula::And(gs) => {
                let kids = gs.iter().map(|g| go(g, neg));
                if neg {
                    or(kids)
                } else {
                    and(kids)
                }
            }
            Formula::Or(gs) => {
                let kids = gs.iter().map(|g| go(g, neg));
                if neg {
                    and(kids)
                } else {
                    or(kids)
                }
            }
            Formula::Exists(v, g) => {
                if neg {
                    forall(v.clone(), go(g, true))
                } else {
                    exists(v.clone(), go(g, false))
                }
            }
            Formula::Forall(v, g) => {
                if neg {
                    exists(v.clone(), go(g, true))
                } else {
                    forall(v.clone(), go(g, false))
                }
            }
        }
    }
    go(f, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum QKind {
    E,
    A,
}

#[derive(Debug, Clone)]
struct QNode {
    kind: QKind,
    var: String,
    children: Vec<QNode>,
}

/// Prenex negation normal form. Bound variables are renamed apart
/// deterministically (`v` → `v_1`, `v_2`, … in AST preorder), then
/// quantifiers are pulled out along a linear extension of their nesting
/// order that greedily groups equal kinds, keeping the number of
/// alternations minimal for the shapes produced by the encoders.
pub fn to_prenex(f: &Formula) -> Formula {
    let f = to_nnf(f);
    let f = rename_apart(&f);
    let (forest, matrix) = pull(&f);
    if forest.is_empty() {
        return matrix;
    }
    let plan_e = linearize(&forest, QKind::E);
    let plan_a = linearize(&forest, QKind::A);
    let first = first_kind(&forest);
    let plan = match plan_e.1.cmp(&plan_a.1) {
        std::cmp::Ordering::Less => plan_e.0,
        std::cmp::Ordering::Greater => plan_a.0,
        std::cmp::Ordering::Equal => {
            if first == QKind::E {
                plan_e.0
            } else {
                plan_a.0
            }
        }
    };
    let mut out = matrix;
    for (kind, var) in plan.into_iter().rev() {
        out = match kind {
            QKind::E => exists(var, out),
            QKind::A => forall(var, out),
        };
    }
    out
}

fn first_kind(forest: &[QNode]) -> QKind {
    forest.first().map(|q| q.kind).unwrap_or(QKind::E)
}

fn rename_apart(f: &Formula) -> Formula {
    use std::collections::BTreeMap;
    let mut used: BTreeSet<String> = f.all_vars().into_iter().collect();
    let mut counters: BTreeMap<String, usize> = BTreeMap::new();
    fn go(
        f: &Formula,
        subst: &mut Vec<(String, String)>,
        used: &mut BTreeSet<String>,
        counters: &mut BTreeMap<String, usize>,
    ) -> Formula {
        let lookup = |v: &str, subst: &Vec<(String, String)>| {
            subst
                .iter()
                .rev()
                .find(|(old, _)| old == v)
                .map(|(_, new)| new.clone())
                .unwrap_or_else(|| v.to_string())
        };
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Atom { rel, args } => Formula::Atom {
                rel: rel.clone(),
                args: args.iter().map(|a| lookup(a, subst)).collect(),
            },
            Formula::Eq(x, y) => Formula::Eq(lookup(x, subst), lookup(y, subst)),
            Formula::Not(g) => not(go(g, subst, used, counters)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| go(g, subst, used, counters)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| go(g, subst, used, counters)).collect()),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let fresh = loop {
                    let c = counters.entry(v.clone()).or_insert(0);
                    *c += 1;
                    let cand = format!("{v}_{c}");
                    if used.insert(cand.clone()) {
                        break cand;
                    }
                };
                subst.push((v.clone(), fresh.clone()));
                let body = go(g, subst, used, counters);
                subst.pop();
                if matches!(f, Formula::Exists(..)) {
                    exists(fresh, body)
                } else {
                    forall(fresh, body)
                }
            }
        }
    }
    go(f, &mut Vec::new(), &mut used, &mut counters)
}

/// Separates an NNF, renamed-apart formula into its quantifier forest and
/// quantifier-free matrix.
fn pull(f: &Formula) -> (Vec<QNode>, Formula) {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) | Formula::Not(_) => {
            (Vec::new(), f.clone())
        }
        Formula::And(gs) => {
            let mut forest = Vec::new();
            let mut parts = Vec::new();
            for g in gs {
                let (sub, m) = pull(g);
                forest.extend(sub);
                parts.push(m);
            }
            (forest, and(parts))
        }
        Formula::Or(gs) => {
            let mut forest = Vec::new();
            let mut parts = Vec::new();
            for g in gs {
                let (sub, m) = pull(g);
                forest.extend(sub);
                parts.push(m);
            }
            (forest, or(parts))
        }
        Formula::Exists(v, g) => {
            let (sub, m) = pull(g);
            (
                vec![QNode { kind: QKind::E, var: v.clone(), children: sub }],
                m,
            )
        }
        Formula::Forall(v, g) => {
            let (sub, m) = pull(g);
            (
                vec![QNode { kind: QKind::A, var: v.clone(), children: sub }],
                m,
            )
        }
    }
}

/// Greedy linear extension of the quantifier forest: repeatedly consume all
/// exposed quantifiers of the current kind, then switch. Returns the plan and
/// its block count.
fn linearize(forest: &[QNode], start: QKind) -> (Vec<(QKind, String)>, usize) {
    let mut avail: Vec<QNode> = forest.to_vec();
    let mut plan = Vec::new();
    let mut kind = start;
    while !avail.is_empty() {
        // consume exposed quantifiers of the current kind until none remain;
        // consuming a node may expose same-kind children
        loop {
            let mut next_avail = Vec::new();
            let mut consumed = false;
            for node in avail {
                if node.kind == kind {
                    plan.push((kind, node.var));
                    next_avail.extend(node.children);
                    consumed = true;
                } else {
                    next_avail.push(node);
                }
            }
            avail = next_avail;
            if !consumed {
                break;
            }
        }
        kind = match kind {
            QKind::E => QKind::A,
            QKind::A => QKind::E,
        };
    }
    let blocks = count_blocks(&plan);
    (plan, blocks)
}

fn count_blocks(plan: &[(QKind, String)]) -> usize {
    let mut blocks = 0;
    let mut last: Option<QKind> = None;
    for (k, _) in plan {
        if last != Some(*k) {
            blocks += 1;
            last = Some(*k);
        }
    }
    blocks
}

// ---------------------------------------------------------------------------
// Fragment classification
// ---------------------------------------------------------------------------

/// Pushes quantifiers inward as far as possible (miniscoping): vacuous
/// quantifiers are dropped (universes are nonempty), `∃` distributes over
/// `∨` and `∀` over `∧`, and over the other connective a quantifier narrows
/// to the operands its variable actually occurs free in. The result is a
/// logically equivalent NNF formula; evaluation by recursion then treats
/// independent subproblems independently instead of multiplying them.
pub fn miniscope(f: &Formula) -> Formula {
    fn go(f: &Formula) -> Formula {
        match f {
            Formula::True
            | Formula::False
            | Formula::Atom { .. }
            | Formula::Eq(..)
            | Formula::Not(_) => f.clone(),
            Formula::And(gs) => and(gs.iter().map(go).collect::<Vec<_>>()),
            Formula::Or(gs) => or(gs.iter().map(go).collect::<Vec<_>>()),
            Formula::Exists(v, g) => push(QKind::E, v, go(g)),
            Formula::Forall(v, g) => push(QKind::A, v, go(g)),
        }
    }
    fn push(kind: QKind, v: &str, body: Formula) -> Formula {
        if !body.free_vars().contains(v) {
            return body;
        }
        match (kind, body) {
            (QKind::E, Formula::Or(gs)) => or(gs.into_iter().map(|g| push(QKind::E, v, g)).collect::<Vec<_>>()),
            (QKind::A, Formula::And(gs)) => {
                and(gs.into_iter().map(|g| push(QKind::A, v, g)).collect::<Vec<_>>())
            }
            (QKind::E, Formula::And(gs)) => narrow(QKind::E, v, gs),
            (QKind::A, Formula::Or(gs)) => narrow(QKind::A, v, gs),
            (QKind::E, other) => exists(v, other),
            (QKind::A, other) => forall(v, other),
        }
    }
    fn narrow(kind: QKind, v: &str, gs: Vec<Formula>) -> Formula {
        let (mut dep, indep): (Vec<_>, Vec<_>) =
            gs.into_iter().partition(|g| g.free_vars().contains(v));
        // dep is nonempty: the caller checked that v occurs free. With two
        // or more dependents all mentioning v the quantifier stops here;
        // a single dependent may still admit pushing (it can be the dual
        // connective), so recurse into it. The narrowed part goes first: it
        // is the locally constrained piece, and deciding it early lets
        // evaluation skip the unrelated (often heavier) siblings.
        let quantified = if dep.len() == 1 {
            push(kind, v, dep.pop().unwrap())
        } else {
            match kind {
                QKind::E => exists(v, and(dep)),
                QKind::A => forall(v, or(dep)),
            }
        };
        match kind {
            QKind::E => and([quantified].into_iter().chain(indep).collect::<Vec<_>>()),
            QKind::A => or([quantified].into_iter().chain(indep).collect::<Vec<_>>()),
        }
    }
    go(&to_nnf(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentClass {
    QuantifierFree,
    /// `Σ_t`: `t` alternating blocks starting existentially.
    Sigma(usize),
    /// `Π_t`: `t` alternating blocks starting universally.
    Pi(usize),
}

/// Syntactic data of a prenex formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentInfo {
    pub class: FragmentClass,
    pub quantifier_rank: usize,
    pub vocab_arity: usize,
    pub variable_count: usize,
    pub block_lengths: Vec<usize>,
}

impl FragmentInfo {
    /// Containment in `Σ_t` (blocks may be empty, so e.g. `Π_1 ⊆ Σ_2`).
    pub fn in_sigma(&self, t: usize) -> bool {
        match self.class {
            FragmentClass::QuantifierFree => true,
            FragmentClass::Sigma(s) => s <= t,
            FragmentClass::Pi(s) => s < t,
        }
    }

    pub fn in_pi(&self, t: usize) -> bool {
        match self.class {
            FragmentClass::QuantifierFree => true,
            FragmentClass::Pi(s) => s <= t,
            FragmentClass::Sigma(s) => s < t,
        }
    }

    /// Containment in `Σ_{t,u}`: `Σ_t` with all blocks after the leading
    /// existential block of length at most `u`.
    pub fn in_sigma_tu(&self, t: usize, u: usize) -> bool {
        if !self.in_sigma(t) {
            return false;
        }
        match self.class {
            FragmentClass::QuantifierFree => true,
            FragmentClass::Sigma(_) => self.block_lengths.iter().skip(1).all(|&l| l <= u),
            // the leading existential block is empty here
            FragmentClass::Pi(_) => self.block_lengths.iter().all(|&l| l <= u),
        }
    }
}

/// Classifies a prenex formula. Errors with [`LogicError::NotPrenex`] when a
/// quantifier occurs below a connective.
pub fn classify(f: &Formula) -> Result<FragmentInfo, LogicError> {
    let mut prefix: Vec<QKind> = Vec::new();
    let mut cur = f;
    loop {
        match cur {
            Formula::Exists(_, g) => {
                prefix.push(QKind::E);
                cur = g;
            }
            Formula::Forall(_, g) => {
                prefix.push(QKind::A);
                cur = g;
            }
            _ => break,
        }
    }
    if !cur.is_quantifier_free() {
        return Err(LogicError::NotPrenex);
    }
    let mut block_lengths = Vec::new();
    let mut last: Option<QKind> = None;
    for k in &prefix {
        if last == Some(*k) {
            *block_lengths.last_mut().unwrap() += 1;
        } else {
            block_lengths.push(1);
            last = Some(*k);
        }
    }
    let class = match prefix.first() {
        None => FragmentClass::QuantifierFree,
        Some(QKind::E) => FragmentClass::Sigma(block_lengths.len()),
        Some(QKind::A) => FragmentClass::Pi(block_lengths.len()),
    };
    Ok(FragmentInfo {
        class,
        quantifier_rank: prefix.len(),
        vocab_arity: f.vocab_arity(),
        variable_count: f.all_vars().len(),
        block_lengths,
    })
}

// ---------------------------------------------------------------------------
// Formula graphs and canonical queries
// ---------------------------------------------------------------------------

/// The graph `G(φ)`: vertices are the variables of `φ` (in first occurrence
/// order, recorded in the provenance map), with an edge between two distinct
/// variables that co-occur in some atomic subformula, equalities included.
pub fn formula_graph(f: &Formula) -> Graph {
    build_formula_graph(f, false)
}

/// The graph `G(φ^≠)`: as [`formula_graph`] after deleting all equality
/// atoms occurring under an odd number of negations.
pub fn formula_graph_neq(f: &Formula) -> Graph {
    build_formula_graph(f, true)
}

fn build_formula_graph(f: &Formula, drop_negated_eq: bool) -> Graph {
    let vars = f.all_vars();
    let index = |v: &str| vars.iter().position(|w| w == v).unwrap();
    let n = vars.len().max(1);
    let mut st = Graph::edgeless(n).expect("nonempty").into_structure();
    for (i, v) in vars.iter().enumerate() {
        st.provenance.insert(i, v.clone());
    }
    fn walk(f: &Formula, neg: usize, on_atom: &mut impl FnMut(&Formula, usize)) {
        match f {
            Formula::True | Formula::False => {}
            Formula::Atom { .. } | Formula::Eq(..) => on_atom(f, neg),
            Formula::Not(g) => walk(g, neg + 1, on_atom),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| walk(g, neg, on_atom)),
            Formula::Exists(_, g) | Formula::Forall(_, g) => walk(g, neg, on_atom),
        }
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    walk(f, 0, &mut |atom, neg| match atom {
        Formula::Eq(x, y) => {
            if !(drop_negated_eq && neg % 2 == 1) && x != y {
                edges.push((index(x), index(y)));
            }
        }
        Formula::Atom { args, .. } => {
            for (i, a) in args.iter().enumerate() {
                for b in &args[i + 1..] {
                    if a != b {
                        edges.push((index(a), index(b)));
                    }
                }
            }
        }
        _ => unreachable!(),
    });
    let mut g = Graph::try_from_structure(st).expect("edgeless is a graph");
    for (a, b) in edges {
        g.add_edge(a, b);
    }
    g
}

/// The canonical queries of a structure `B` with universe `0..n`: the pair
/// `(φ_B, φ_B^≠)` where
///
/// * `φ_B = ∃x0…x_{n-1} (⋀_{i<j} !xi=xj ∧ ⋀_{R, t∈R^B} R(x_t))` holds in `A`
///   iff `B` embeds into `A`, and
/// * `φ_B^≠` drops the inequalities and holds iff there is a homomorphism
///   `B → A`.
///
/// `G(φ_B^≠)` coincides with the Gaifman graph of `B`.
pub fn canonical_query(b: &Structure) -> (Formula, Formula) {
    let n = b.universe();
    let var = |i: usize| format!("x{i}");
    let mut inequalities = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            inequalities.push(not(eq(var(i), var(j))));
        }
    }
    let mut atoms = Vec::new();
    for sym in b.vocab().symbols() {
        for t in b.tuples(&sym.name) {
            atoms.push(atom(&sym.name, t.iter().map(|&e| var(e))));
        }
    }
    let close = |matrix: Formula| {
        let mut f = matrix;
        for i in (0..n).rev() {
            f = exists(var(i), f);
        }
        f
    };
    let emb = close(and(inequalities.iter().cloned().chain(atoms.iter().cloned())));
    let hom = close(and(atoms));
    (emb, hom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_formula(k: usize) -> Formula {
        // EX x1 ... EX xk (pairwise != and E x_i x_{i+1})
        let var = |i: usize| format!("x{i}");
        let mut parts = Vec::new();
        for i in 1..=k {
            for j in i + 1..=k {
                parts.push(not(eq(var(i), var(j))));
            }
        }
        for i in 1..k {
            parts.push(atom("E", [var(i), var(i + 1)]));
        }
        let mut f = and(parts);
        for i in (1..=k).rev() {
            f = exists(var(i), f);
        }
        f
    }

    #[test]
    fn print_respects_precedence() {
        let f = or([and([atom("P", ["x"]), atom("Q", ["x"])]), not(eq("x", "y"))]);
        assert_eq!(f.print(), "P(x) & Q(x) | !x=y");
        let g = and([or([atom("P", ["x"]), atom("Q", ["x"])]), atom("R", ["x"])]);
        assert_eq!(g.print(), "(P(x) | Q(x)) & R(x)");
    }

    #[test]
    fn quantifier_scope_prints_with_parens_when_nested() {
        let f = and([exists("x", atom("P", ["x"])), atom("Q", ["y"])]);
        assert_eq!(f.print(), "(EX x. P(x)) & Q(y)");
    }

    #[test]
    fn nnf_pushes_negation_through_quantifier() {
        let f = not(exists("x", atom("P", ["x"])));
        assert_eq!(to_nnf(&f), forall("x", not(atom("P", ["x"]))));
    }

    #[test]
    fn nnf_de_morgan() {
        let f = not(and([atom("P", ["x"]), atom("Q", ["y"])]));
        assert_eq!(to_nnf(&f), or([not(atom("P", ["x"])), not(atom("Q", ["y"]))]));
    }

    #[test]
    fn prenex_renames_apart() {
        // EX x P(x) & EX x Q(x): the two binders must become distinct.
        let f = and([exists("x", atom("P", ["x"])), exists("x", atom("Q", ["x"]))]);
        let p = to_prenex(&f);
        let info = classify(&p).unwrap();
        assert_eq!(info.class, FragmentClass::Sigma(1));
        assert_eq!(info.quantifier_rank, 2);
        assert_eq!(p.print(), "EX x_1. EX x_2. P(x_1) & Q(x_2)");
    }

    #[test]
    fn prenex_groups_blocks_greedily() {
        // ALL y P(y) & EX x Q(x) under an outer EX z: expect Sigma_2, not Sigma_3.
        let f = exists(
            "z",
            and([
                forall("y", atom("P", ["y"])),
                exists("x", atom("Q", ["x"])),
                atom("R", ["z"]),
            ]),
        );
        let info = classify(&to_prenex(&f)).unwrap();
        assert_eq!(info.class, FragmentClass::Sigma(2));
    }

    #[test]
    fn classify_sigma2() {
        let f = exists("x", forall("y", atom("E", ["x", "y"])));
        let info = classify(&f).unwrap();
        assert_eq!(info.class, FragmentClass::Sigma(2));
        assert_eq!(info.quantifier_rank, 2);
        assert_eq!(info.block_lengths, vec![1, 1]);
    }

    #[test]
    fn classify_path_formula_is_sigma1() {
        let info = classify(&path_formula(3)).unwrap();
        assert_eq!(info.class, FragmentClass::Sigma(1));
        assert_eq!(info.block_lengths, vec![3]);
        assert!(info.in_sigma_tu(1, 1));
    }

    #[test]
    fn classify_quantifier_free() {
        let f = and([atom("E", ["x", "y"]), not(eq("x", "y"))]);
        let info = classify(&f).unwrap();
        assert_eq!(info.class, FragmentClass::QuantifierFree);
        assert_eq!(info.quantifier_rank, 0);
    }

    #[test]
    fn classify_rejects_non_prenex() {
        let f = and([exists("x", atom("P", ["x"])), atom("Q", ["y"])]);
        assert_eq!(classify(&f).unwrap_err(), LogicError::NotPrenex);
    }

    #[test]
    fn containment_lattice() {
        let sigma1 = classify(&exists("x", atom("P", ["x"]))).unwrap();
        assert!(sigma1.in_sigma(1) && sigma1.in_sigma(2) && !sigma1.in_pi(1) && sigma1.in_pi(2));
        let pi1 = classify(&forall("x", atom("P", ["x"]))).unwrap();
        assert!(pi1.in_pi(1) && pi1.in_sigma(2) && !pi1.in_sigma(1));
    }

    #[test]
    fn formula_graph_of_path_formula() {
        // G(phi) is complete, G(phi^neq) is the path, per the k=4 example.
        let f = path_formula(4);
        let g = formula_graph(&f);
        assert_eq!(g.edge_count(), 6);
        let gn = formula_graph_neq(&f);
        assert_eq!(gn.edge_count(), 3);
        assert!(gn.has_edge(0, 1) && gn.has_edge(1, 2) && gn.has_edge(2, 3));
        assert!(!gn.has_edge(0, 2));
    }

    #[test]
    fn formula_graph_of_ternary_atom_is_triangle() {
        let f = atom("R", ["x", "y", "z"]);
        assert_eq!(formula_graph(&f).edge_count(), 3);
    }

    #[test]
    fn formula_graph_of_unary_atoms_is_edgeless() {
        let f = and([atom("P", ["x"]), atom("Q", ["y"])]);
        assert_eq!(formula_graph(&f).edge_count(), 0);
    }

    #[test]
    fn canonical_query_of_k2() {
        let b = Graph::complete(2).unwrap().into_structure();
        let (emb, hom) = canonical_query(&b);
        assert_eq!(
            emb.print(),
            "EX x0. EX x1. !x0=x1 & E(x0,x1) & E(x1,x0)"
        );
        assert_eq!(hom.print(), "EX x0. EX x1. E(x0,x1) & E(x1,x0)");
    }

    #[test]
    fn canonical_query_inequality_count() {
        let b = Graph::cycle(4).unwrap().into_structure();
        let (emb, _) = canonical_query(&b);
        let printed = emb.print();
        assert_eq!(printed.matches("!x").count(), 4 * 3 / 2);
    }

    #[test]
    fn canonical_query_neq_graph_is_gaifman() {
        let b = Graph::cycle(5).unwrap().into_structure();
        let (_, hom) = canonical_query(&b);
        let g = formula_graph_neq(&hom);
        let gf = b.gaifman();
        assert_eq!(g.vertices(), gf.vertices());
        for a in 0..5 {
            for bb in 0..5 {
                assert_eq!(g.has_edge(a, bb), gf.has_edge(a, bb));
            }
        }
    }
}
