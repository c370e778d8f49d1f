//! Positive Fagin definability: deciding whether a size-k relation can be
//! planted so a sentence holds. Covers the positivity check, normalization
//! to a universal prefix over a disjunction of atom conjunctions, the
//! precomputed target structure, the partial-solution search, and the
//! expansion into plain slicewise sentences.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::formula::{and, atom, eq, exists, forall, not, or, to_nnf, Formula};
use crate::oracle::{all_tuples, eval_naive, Assignment, OracleError};
use crate::structure::{Structure, StructureError, Tuple};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FaginError {
    #[error("the relation variable occurs under an existential quantifier or a negation")]
    NotPositive,
    #[error("no witness of size exactly {k} exists: the tuple space has {space} tuples")]
    KTooLarge { k: usize, space: usize },
    #[error("normalized matrix would have over {cap} disjuncts")]
    MatrixBlowup { cap: usize },
    #[error("precomputation over {candidates} assignments exceeds the cap {cap}")]
    PrecomputeTooLarge { candidates: u128, cap: u64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Checks that the designated relation variable occurs neither in the scope
/// of an existential quantifier nor of a negation symbol.
pub fn check_fagin_positive(phi: &Formula, x: &str) -> bool {
    fn go(f: &Formula, x: &str, under_exists: bool, under_not: bool) -> bool {
        match f {
            Formula::Atom { rel, .. } if rel == x => !under_exists && !under_not,
            Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => true,
            Formula::Not(g) => go(g, x, under_exists, true),
            Formula::And(gs) | Formula::Or(gs) => {
                gs.iter().all(|g| go(g, x, under_exists, under_not))
            }
            Formula::Exists(_, g) => go(g, x, true, under_not),
            Formula::Forall(_, g) => go(g, x, under_exists, under_not),
        }
    }
    go(phi, x, false, false)
}

/// An atom of a normalized disjunct: either the relation variable applied to
/// a tuple of universal variables, or a reference to a variable-free-of-X
/// subformula evaluated positionally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disjunct {
    /// Tuples of indices into the universal prefix, one per X-atom.
    pub x_atoms: Vec<Vec<usize>>,
    /// `(unit index, argument positions into the universal prefix)`.
    pub unit_atoms: Vec<(usize, Vec<usize>)>,
}

/// A subformula in which the relation variable does not occur, abstracted as
/// a fresh relation over its free variables (in first-occurrence order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub formula: Formula,
    pub vars: Vec<String>,
    pub rel_name: String,
}

/// A positive Fagin-definability instance in normalized form:
/// `∀ y_1 … y_l ⋁_i ⋀_j ψ_ij` with each `ψ_ij` an X-atom or a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaginProblem {
    pub x_name: String,
    pub x_arity: usize,
    pub universal_vars: Vec<String>,
    pub disjuncts: Vec<Disjunct>,
    pub units: Vec<Unit>,
}

/// Default cap on normalized-matrix disjunct counts.
pub const MATRIX_CAP: usize = 10_000;

/// Normalizes a positive-in-X sentence: negation normal form, maximal X-free
/// subformulas abstracted into units, the remaining all-universal skeleton
/// prenexed, and its matrix expanded into a disjunction of conjunctions.
/// Sentence-level units (no free variables) are bound to the first universal
/// variable as constant unary relations; an empty universal prefix gets one
/// dummy variable the matrix does not mention.
pub fn fagin_normalize(phi: &Formula, x: &str, x_arity: usize) -> Result<FaginProblem, FaginError> {
    if !check_fagin_positive(phi, x) {
        return Err(FaginError::NotPositive);
    }
    let f = to_nnf(phi);
    let mut units: Vec<Unit> = Vec::new();
    let mut unit_index: BTreeMap<String, usize> = BTreeMap::new();

    fn has_x(f: &Formula, x: &str) -> bool {
        match f {
            Formula::Atom { rel, .. } => rel == x,
            Formula::True | Formula::False | Formula::Eq(..) => false,
            Formula::Not(g) => has_x(g, x),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().any(|g| has_x(g, x)),
            Formula::Exists(_, g) | Formula::Forall(_, g) => has_x(g, x),
        }
    }

    // replace maximal X-free subformulas by placeholder atoms __u<i>
    fn abstract_units(
        f: &Formula,
        x: &str,
        units: &mut Vec<Unit>,
        index: &mut BTreeMap<String, usize>,
    ) -> Formula {
        if !has_x(f, x) {
            let key = f.print();
            let i = *index.entry(key).or_insert_with(|| {
                let vars: Vec<String> = {
                    let free = f.free_vars();
                    let mut ordered: Vec<String> =
                        f.all_vars().into_iter().filter(|v| free.contains(v)).collect();
                    ordered.dedup();
                    ordered
                };
                units.push(Unit {
                    formula: f.clone(),
                    vars,
                    rel_name: format!("__u{}", units.len()),
                });
                units.len() - 1
            });
            return atom(units[i].rel_name.clone(), units[i].vars.clone());
        }
        match f {
            Formula::Atom { .. } => f.clone(),
            Formula::And(gs) => {
                and(gs.iter().map(|g| abstract_units(g, x, units, index)).collect::<Vec<_>>())
            }
            Formula::Or(gs) => {
                or(gs.iter().map(|g| abstract_units(g, x, units, index)).collect::<Vec<_>>())
            }
            Formula::Forall(v, g) => forall(v.clone(), abstract_units(g, x, units, index)),
            // positivity rules out X under ∃ and ¬; True/False/Eq are X-free
            _ => unreachable!("checked positive in X"),
        }
    }

    let skeleton = abstract_units(&f, x, &mut units, &mut unit_index);
    let prenexed = crate::formula::to_prenex(&skeleton);
    let mut universal_vars = Vec::new();
    let mut cur = &prenexed;
    while let Formula::Forall(v, g) = cur {
        universal_vars.push(v.clone());
        cur = g;
    }
    // the skeleton contains only universal quantifiers
    debug_assert!(cur.is_quantifier_free());
    if universal_vars.is_empty() {
        universal_vars.push("__y".to_string());
    }

    // prenexing renamed unit argument variables inside the placeholder
    // atoms; recover each unit's positional arguments from the atoms
    let disjunct_lists = matrix_dnf(cur, MATRIX_CAP)?;
    let pos_of = |v: &str| universal_vars.iter().position(|w| w == v);
    let mut disjuncts = Vec::with_capacity(disjunct_lists.len());
    for conj in disjunct_lists {
        let mut d = Disjunct { x_atoms: Vec::new(), unit_atoms: Vec::new() };
        for (rel, args) in conj {
            let positions: Vec<usize> = args
                .iter()
                .map(|v| pos_of(v).expect("matrix variables are universal"))
                .collect();
            if rel == x {
                assert_eq!(positions.len(), x_arity, "X used with its declared arity");
                d.x_atoms.push(positions);
            } else {
                let idx = units
                    .iter()
                    .position(|u| u.rel_name == rel)
                    .expect("placeholder names its unit");
                // sentence units bind to the first universal variable
                let positions = if positions.is_empty() { vec![0] } else { positions };
                d.unit_atoms.push((idx, positions));
            }
        }
        disjuncts.push(d);
    }
    Ok(FaginProblem {
        x_name: x.to_string(),
        x_arity,
        universal_vars,
        disjuncts,
        units,
    })
}

/// Expands a quantifier-free skeleton matrix (atoms only, NNF) into a
/// disjunction of conjunctions of `(relation, args)` atoms.
fn matrix_dnf(matrix: &Formula, cap: usize) -> Result<Vec<Vec<(String, Vec<String>)>>, FaginError> {
    fn go(f: &Formula, cap: usize) -> Result<Vec<Vec<(String, Vec<String>)>>, FaginError> {
        match f {
            Formula::True => Ok(vec![Vec::new()]),
            Formula::False => Ok(Vec::new()),
            Formula::Atom { rel, args } => Ok(vec![vec![(rel.clone(), args.clone())]]),
            Formula::Or(gs) => {
                let mut out = Vec::new();
                for g in gs {
                    out.extend(go(g, cap)?);
                    if out.len() > cap {
                        return Err(FaginError::MatrixBlowup { cap });
                    }
                }
                Ok(out)
            }
            Formula::And(gs) => {
                let mut acc: Vec<Vec<(String, Vec<String>)>> = vec![Vec::new()];
                for g in gs {
                    let parts = go(g, cap)?;
                    let mut next = Vec::with_capacity(acc.len() * parts.len());
                    for left in &acc {
                        for right in &parts {
                            let mut merged = left.clone();
                            merged.extend(right.iter().cloned());
                            next.push(merged);
                            if next.len() > cap {
                                return Err(FaginError::MatrixBlowup { cap });
                            }
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
            // units absorbed negations and equalities; X-atoms are positive
            _ => unreachable!("skeleton matrix contains only positive atoms"),
        }
    }
    let mut out = go(matrix, cap)?;
    for d in &mut out {
        d.sort();
        d.dedup();
    }
    Ok(out)
}

impl FaginProblem {
    /// Reconstructs the normalized sentence `∀ȳ ⋁ᵢ ⋀ⱼ ψᵢⱼ` with units
    /// spliced back in.
    pub fn to_formula(&self) -> Formula {
        let matrix = or(self
            .disjuncts
            .iter()
            .map(|d| {
                and(d
                    .x_atoms
                    .iter()
                    .map(|positions| {
                        atom(
                            self.x_name.clone(),
                            positions.iter().map(|&p| self.universal_vars[p].clone()),
                        )
                    })
                    .chain(d.unit_atoms.iter().map(|(u, positions)| {
                        let unit = &self.units[*u];
                        if unit.vars.is_empty() {
                            unit.formula.clone()
                        } else {
                            substitute_vars(
                                &unit.formula,
                                &unit
                                    .vars
                                    .iter()
                                    .cloned()
                                    .zip(positions.iter().map(|&p| self.universal_vars[p].clone()))
                                    .collect(),
                            )
                        }
                    }))
                    .collect::<Vec<_>>())
            })
            .collect::<Vec<_>>());
        let mut f = matrix;
        for v in self.universal_vars.iter().rev() {
            f = forall(v.clone(), f);
        }
        f
    }
}

/// Capture-avoiding free-variable substitution; binders shadow.
fn substitute_vars(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom { rel, args } => Formula::Atom {
            rel: rel.clone(),
            args: args.iter().map(|a| map.get(a).cloned().unwrap_or_else(|| a.clone())).collect(),
        },
        Formula::Eq(x, y) => Formula::Eq(
            map.get(x).cloned().unwrap_or_else(|| x.clone()),
            map.get(y).cloned().unwrap_or_else(|| y.clone()),
        ),
        Formula::Not(g) => not(substitute_vars(g, map)),
        Formula::And(gs) => and(gs.iter().map(|g| substitute_vars(g, map)).collect::<Vec<_>>()),
        Formula::Or(gs) => or(gs.iter().map(|g| substitute_vars(g, map)).collect::<Vec<_>>()),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let mut inner = map.clone();
            inner.remove(v);
            let body = substitute_vars(g, &inner);
            if matches!(f, Formula::Exists(..)) {
                exists(v.clone(), body)
            } else {
                forall(v.clone(), body)
            }
        }
    }
}

const PRECOMPUTE_CAP: u64 = 1_000_000;

/// The precomputed target: one relation per unit, holding the assignments
/// under which the unit's subformula is true, evaluated naively.
pub fn fagin_precompute(a: &Structure, problem: &FaginProblem) -> Result<Structure, FaginError> {
    let n = a.universe();
    let mut vocab_syms: Vec<(String, usize)> = Vec::new();
    for unit in &problem.units {
        vocab_syms.push((unit.rel_name.clone(), unit.vars.len().max(1)));
    }
    let vocab = crate::structure::Vocabulary::new(vocab_syms)?;
    let mut star = Structure::empty_relations(vocab, n)?;
    for unit in &problem.units {
        let arity = unit.vars.len().max(1);
        let candidates = (n as u128).pow(arity as u32);
        if candidates > PRECOMPUTE_CAP as u128 {
            return Err(FaginError::PrecomputeTooLarge { candidates, cap: PRECOMPUTE_CAP });
        }
        if unit.vars.is_empty() {
            // sentence unit: constant unary relation
            if eval_naive(a, &unit.formula, &Assignment::empty())? {
                for e in 0..n {
                    star.insert_tuple(&unit.rel_name, vec![e]);
                }
            }
            continue;
        }
        for t in all_tuples(n, arity) {
            let asg = Assignment::of_vars(unit.vars.iter().cloned().zip(t.iter().copied()));
            if eval_naive(a, &unit.formula, &asg)? {
                star.insert_tuple(&unit.rel_name, t);
            }
        }
    }
    Ok(star)
}

fn disjunct_holds(
    star: &Structure,
    problem: &FaginProblem,
    d: &Disjunct,
    b: &BTreeSet<Tuple>,
    assignment: &[usize],
) -> bool {
    d.x_atoms.iter().all(|positions| {
        let tuple: Tuple = positions.iter().map(|&p| assignment[p]).collect();
        b.contains(&tuple)
    }) && d.unit_atoms.iter().all(|(u, positions)| {
        let tuple: Tuple = positions.iter().map(|&p| assignment[p]).collect();
        star.has_tuple(&problem.units[*u].rel_name, &tuple)
    })
}

/// The partial-solution search: maintains a family of candidate sets of size
/// at most `k`; for every universal assignment, failing sets are replaced by
/// their minimal extensions that satisfy some disjunct. Accepts iff the
/// family is nonempty afterwards, returning a minimal survivor padded with
/// fresh tuples to size exactly `k` (positivity makes supersets safe).
/// Runs in `O(m^k · n^l)` family steps plus precomputation.
pub fn check_phi(
    a: &Structure,
    problem: &FaginProblem,
    k: usize,
) -> Result<Option<BTreeSet<Tuple>>, FaginError> {
    let n = a.universe();
    let space = (n as u128).pow(problem.x_arity as u32);
    if (k as u128) > space {
        return Err(FaginError::KTooLarge { k, space: space as usize });
    }
    let star = fagin_precompute(a, problem)?;
    let mut family: BTreeSet<BTreeSet<Tuple>> = BTreeSet::from([BTreeSet::new()]);
    let l = problem.universal_vars.len();
    for assignment in all_tuples(n, l) {
        for b in family.clone() {
            let ok = problem
                .disjuncts
                .iter()
                .any(|d| disjunct_holds(&star, problem, d, &b, &assignment));
            if ok {
                continue;
            }
            family.remove(&b);
            for d in &problem.disjuncts {
                let mut extended = b.clone();
                for positions in &d.x_atoms {
                    extended.insert(positions.iter().map(|&p| assignment[p]).collect());
                }
                if extended.len() <= k
                    && disjunct_holds(&star, problem, d, &extended, &assignment)
                {
                    family.insert(extended);
                }
            }
        }
        if family.is_empty() {
            return Ok(None);
        }
    }
    // minimal survivor, then lexicographically least; padded to exact size
    let mut best: Option<&BTreeSet<Tuple>> = None;
    for b in &family {
        if best.map_or(true, |cur| b.len() < cur.len()) {
            best = Some(b);
        }
    }
    let mut witness = best.expect("family nonempty").clone();
    if witness.len() < k {
        for t in all_tuples(n, problem.x_arity) {
            if witness.len() == k {
                break;
            }
            witness.insert(t);
        }
    }
    debug_assert_eq!(witness.len(), k);
    Ok(Some(witness))
}

/// The slicewise expansion: `δ(k) = ∃x̄₁…∃x̄_k (⋀_{i<j} x̄ᵢ≠x̄ⱼ ∧ φ_k)` where
/// `φ_k` replaces every `X ȳ` by `⋁ᵢ x̄ᵢ = ȳ`. For `k = 0` the X-atoms
/// become `false`.
pub fn fagin_to_slicewise(phi: &Formula, x: &str, x_arity: usize, k: usize) -> Formula {
    let used: BTreeSet<String> = phi.all_vars().into_iter().collect();
    let var = |i: usize, c: usize| {
        let mut name = format!("w{i}_{c}");
        while used.contains(&name) {
            name.push('_');
        }
        name
    };
    let replaced = phi.map_atoms(&mut |rel, args| {
        if rel != x {
            return None;
        }
        Some(or((1..=k).map(|i| {
            and((0..x_arity)
                .map(|c| eq(var(i, c), args[c].clone()))
                .collect::<Vec<_>>())
        })
        .collect::<Vec<_>>()))
    });
    let mut parts = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            parts.push(or((0..x_arity)
                .map(|c| not(eq(var(i, c), var(j, c))))
                .collect::<Vec<_>>()));
        }
    }
    parts.push(replaced);
    let mut f = and(parts);
    for i in (1..=k).rev() {
        for c in (0..x_arity).rev() {
            f = exists(var(i, c), f);
        }
    }
    f
}

// ---------------------------------------------------------------------------
// The running example formulas
// ---------------------------------------------------------------------------

/// `∀y∀z (E(y,z) → X(y) ∨ X(z))`: X is a vertex cover.
pub fn vertex_cover_formula() -> Formula {
    forall(
        "y",
        forall(
            "z",
            or([not(atom("E", ["y", "z"])), atom("X", ["y"]), atom("X", ["z"])]),
        ),
    )
}

/// `∀y∃x (X(x) ∧ (x=y ∨ E(x,y)))`: X is a dominating set. X occurs under an
/// existential quantifier, so this is not positive.
pub fn dominating_set_formula() -> Formula {
    forall(
        "y",
        exists(
            "x",
            and([atom("X", ["x"]), or([eq("x", "y"), atom("E", ["x", "y"])])]),
        ),
    )
}

/// `∀y∀z ((X(y) ∧ X(z)) → y=z ∨ E(y,z))`: X is a clique. X occurs negated
/// after implication elimination, so this is not positive.
pub fn clique_formula() -> Formula {
    forall(
        "y",
        forall(
            "z",
            or([
                not(and([atom("X", ["y"]), atom("X", ["z"])])),
                eq("y", "z"),
                atom("E", ["y", "z"]),
            ]),
        ),
    )
}

/// The bounded-valence dominating-set formula: the valence is at most `l`
/// (via the expansion of the counting quantifier) and whenever `y1..yl`
/// enumerate the neighbors of `y0`, some `yi` lies in X.
pub fn valence_dominating_formula(l: usize) -> Formula {
    // ∃^{≤l} z E(x,z) expands to ∃u1…ul ∀z (E(x,z) → ⋁ z=ui)
    let valence = {
        let mut alternatives = vec![not(atom("E", ["x", "z"]))];
        for i in 1..=l {
            alternatives.push(eq("z", format!("u{i}")));
        }
        let mut f = forall("z", or(alternatives));
        for i in (1..=l).rev() {
            f = exists(format!("u{i}"), f);
        }
        forall("x", f)
    };
    let dominated = {
        let mut enumerate_parts = vec![not(atom("E", ["y0", "w"]))];
        for i in 1..=l {
            enumerate_parts.push(eq("w", format!("y{i}")));
        }
        let enumerates = forall("w", or(enumerate_parts));
        let mut covered = Vec::new();
        for i in 0..=l {
            covered.push(atom("X", [format!("y{i}")]));
        }
        let mut f = or([not(enumerates), or(covered)]);
        for i in (0..=l).rev() {
            f = forall(format!("y{i}"), f);
        }
        f
    };
    and([valence, dominated])
}
