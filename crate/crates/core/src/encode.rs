//! Structure-to-graph encodings: the three-step construction that turns any
//! relational structure into a graph while preserving truth, and the
//! arity-bounded variant that also preserves the quantifier fragment.
//!
//! Step 1 replaces every tuple by an incidence element wired to the tuple's
//! positions through binary relations `E1..Es`. Step 2 subdivides those
//! binary relations into a single symmetric `E` through labeled midpoints.
//! Step 3 removes the remaining unary predicates by attaching, to each
//! member of the i-th predicate, a pendant hub sitting on a fresh odd cycle
//! of length `2i+5`; a predicate test becomes an existential cycle-detector
//! formula. All base cycles have length divisible by 4 and each gadget cycle
//! length is odd and unique to its predicate, so the detectors are exact.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{
    and, atom, classify, eq, exists, forall, not, or, to_nnf, to_prenex, Formula, FragmentClass,
    LogicError,
};
use crate::structure::{Element, Graph, Structure, StructureError, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("formula must be a sentence in prenex negation normal form")]
    NotPrenexNnf,
    #[error("vocabulary arity {found} exceeds the declared bound {bound}")]
    ArityBoundExceeded { found: usize, bound: usize },
    #[error("complement relation would need {candidates} tuples, over the cap {cap}")]
    ComplementTooLarge { candidates: u128, cap: u64 },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// Intermediate products of the three encoding steps.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    /// Step 1: binary vocabulary with incidence elements.
    pub b: Structure,
    pub phi_b: Formula,
    /// Step 2: single edge relation plus midpoint labels.
    pub c: Structure,
    pub phi_c: Formula,
    /// Step 3: plain graph and prenex sentence.
    pub h: Graph,
    pub phi_gra: Formula,
    /// Unary predicates eliminated in step 3, with their gadget cycle
    /// lengths, in elimination order.
    pub gadgets: Vec<(String, usize)>,
}

struct Gensym {
    used: std::collections::BTreeSet<String>,
    counter: usize,
}

impl Gensym {
    fn new(used: impl IntoIterator<Item = String>) -> Self {
        Gensym { used: used.into_iter().collect(), counter: 0 }
    }

    fn fresh(&mut self, base: &str) -> String {
        loop {
            self.counter += 1;
            let cand = format!("{base}{}", self.counter);
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

fn is_nnf(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => true,
        Formula::Not(g) => matches!(**g, Formula::Atom { .. } | Formula::Eq(..)),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(is_nnf),
        Formula::Exists(_, g) | Formula::Forall(_, g) => is_nnf(g),
    }
}

fn check_precondition(a: &Structure, phi: &Formula) -> Result<(), EncodeError> {
    if !phi.is_sentence() || !is_nnf(phi) || classify(phi).is_err() {
        return Err(EncodeError::NotPrenexNnf);
    }
    phi.check_vocab(a.vocab(), &[])?;
    Ok(())
}

/// Lemma-style graph encoding: returns `(H(A), φ_GRA)` with
/// `A ⊨ φ ⟺ H(A) ⊨ φ_GRA`, and `φ ∈ Σ_t ⇒ φ_GRA ∈ Σ_{t+1}` (dually for Π).
pub fn encode_to_graph(a: &Structure, phi: &Formula) -> Result<(Graph, Formula), EncodeError> {
    let trace = encode_to_graph_trace(a, phi)?;
    Ok((trace.h, trace.phi_gra))
}

/// As [`encode_to_graph`], exposing all intermediate steps.
fn ur_name(r: &str) -> String {
    format!("U_{r}")
}

fn ei_name(i: usize) -> String {
    format!("E{i}")
}

fn pi_name(i: usize) -> String {
    format!("P{i}")
}

const U_NAME: &str = "U";

/// Gadget cycle length for the i-th eliminated predicate (1-based): odd and
/// pairwise distinct, and longer than any base cycle structure it must be
/// told apart from by parity alone.
fn gadget_len(idx1: usize) -> usize {
    2 * idx1 + 5
}

pub fn encode_to_graph_trace(a: &Structure, phi: &Formula) -> Result<EncodeTrace, EncodeError> {
    check_precondition(a, phi)?;
    let mut gensym = Gensym::new(phi.all_vars());
    let s = a.vocab().arity().max(1);

    // Step 1: incidence elements b(R, tuple)
    let n = a.universe();
    let mut b_elems: Vec<(String, Vec<Element>)> = Vec::new();
    for sym in a.vocab().symbols() {
        for t in a.tuples(&sym.name) {
            b_elems.push((sym.name.clone(), t.clone()));
        }
    }
    let b_size = n + b_elems.len();
    let mut bsyms: Vec<(String, usize)> = vec![(U_NAME.to_string(), 1)];
    for sym in a.vocab().symbols() {
        bsyms.push((ur_name(&sym.name), 1));
    }
    for i in 1..=s {
        bsyms.push((ei_name(i), 2));
    }
    let bvocab = Vocabulary::new(bsyms)?;
    let mut b = Structure::empty_relations(bvocab, b_size)?;
    for e in 0..n {
        b.insert_tuple(U_NAME, vec![e]);
    }
    for (offset, (r, t)) in b_elems.iter().enumerate() {
        let id = n + offset;
        b.provenance.insert(id, format!("b({r},{t:?})"));
        b.insert_tuple(&ur_name(r), vec![id]);
        for (i, &ai) in t.iter().enumerate() {
            b.insert_tuple(&ei_name(i + 1), vec![ai, id]);
            b.insert_tuple(&ei_name(i + 1), vec![id, ai]);
        }
    }

    // relativize quantifiers to U, then rewrite atoms to incidence form
    let relativized = relativize(phi, U_NAME);
    let phi_b = to_nnf(&relativized.map_atoms(&mut |rel: &str, args: &[String]| {
        if rel == U_NAME {
            return None;
        }
        let z = gensym.fresh("z");
        let mut parts = vec![atom(ur_name(rel), [z.clone()])];
        for (i, x) in args.iter().enumerate() {
            parts.push(atom(ei_name(i + 1), [x.clone(), z.clone()]));
        }
        Some(exists(z, and(parts)))
    }));

    // Step 2: subdivide E1..Es into one symmetric E with midpoint labels.
    // E_i is symmetric, so one midpoint per unordered pair serves both
    // directions.
    let mut midpoints: Vec<(usize, Element, Element)> = Vec::new();
    for i in 1..=s {
        for t in b.tuples(&ei_name(i)) {
            if t[0] < t[1] {
                midpoints.push((i, t[0], t[1]));
            }
        }
    }
    let c_size = b_size + midpoints.len();
    let mut csyms: Vec<(String, usize)> = vec![(U_NAME.to_string(), 1)];
    for sym in a.vocab().symbols() {
        csyms.push((ur_name(&sym.name), 1));
    }
    for i in 1..=s {
        csyms.push((pi_name(i), 1));
    }
    csyms.push(("E".to_string(), 2));
    let cvocab = Vocabulary::new(csyms)?;
    let mut c = Structure::empty_relations(cvocab, c_size)?;
    c.provenance = b.provenance.clone();
    for e in 0..n {
        c.insert_tuple(U_NAME, vec![e]);
    }
    for sym in a.vocab().symbols() {
        for t in b.tuples(&ur_name(&sym.name)) {
            c.insert_tuple(&ur_name(&sym.name), t.clone());
        }
    }
    for (offset, &(i, x, y)) in midpoints.iter().enumerate() {
        let id = b_size + offset;
        c.provenance.insert(id, format!("c({i},{x},{y})"));
        c.insert_tuple(&pi_name(i), vec![id]);
        for (p, q) in [(x, id), (id, x), (id, y), (y, id)] {
            c.insert_tuple("E", vec![p, q]);
        }
    }
    let phi_c = to_nnf(&phi_b.map_atoms(&mut |rel: &str, args: &[String]| {
        let i = (1..=s).find(|&i| rel == ei_name(i))?;
        let z = gensym.fresh("z");
        Some(exists(
            z.clone(),
            and([
                atom("E", [args[0].clone(), z.clone()]),
                atom("E", [z.clone(), args[1].clone()]),
                atom(pi_name(i), [z]),
            ]),
        ))
    }));

    // Step 3: replace unary predicates by pendant odd-cycle gadgets
    let mut predicates: Vec<String> = vec![U_NAME.to_string()];
    for sym in a.vocab().symbols() {
        predicates.push(ur_name(&sym.name));
    }
    for i in 1..=s {
        predicates.push(pi_name(i));
    }
    let mut gadget_vertices = 0;
    let mut members_of: Vec<Vec<Element>> = Vec::new();
    for (idx, pred) in predicates.iter().enumerate() {
        let members: Vec<Element> = c.tuples(pred).map(|t| t[0]).collect();
        gadget_vertices += members.len() * gadget_len(idx + 1);
        members_of.push(members);
    }
    let mut hs = Structure::empty_relations(Vocabulary::graph(), c_size + gadget_vertices)?;
    hs.provenance = c.provenance.clone();
    for t in c.tuples("E") {
        hs.insert_tuple("E", t.clone());
    }
    let mut h = Graph::try_from_structure(hs).expect("subdivision is symmetric and loop-free");
    let mut gadgets = Vec::new();
    let mut next_id = c_size;
    for (idx, (pred, members)) in predicates.iter().zip(&members_of).enumerate() {
        let cycle_len = gadget_len(idx + 1);
        gadgets.push((pred.clone(), cycle_len));
        for &m in members {
            let base = next_id;
            next_id += cycle_len;
            for (k, id) in (base..base + cycle_len).enumerate() {
                h.set_provenance(id, format!("gadget({pred},{m},{k})"));
            }
            // pendant edge to the hub, then the cycle through it
            h.add_edge(m, base);
            for k in 0..cycle_len {
                h.add_edge(base + k, base + (k + 1) % cycle_len);
            }
        }
    }
    let phi_h = phi_c.map_atoms(&mut |rel: &str, args: &[String]| {
        let idx = predicates.iter().position(|p| p == rel)?;
        let cycle_len = gadget_len(idx + 1);
        let x = args[0].clone();
        let ys: Vec<String> = (0..cycle_len).map(|_| gensym.fresh("y")).collect();
        let mut parts = Vec::new();
        for (j, yj) in ys.iter().enumerate() {
            for yk in &ys[j + 1..] {
                parts.push(not(eq(yj.clone(), yk.clone())));
            }
        }
        for yj in &ys {
            parts.push(not(eq(yj.clone(), x.clone())));
        }
        parts.push(atom("E", [x, ys[0].clone()]));
        for j in 0..cycle_len {
            parts.push(atom("E", [ys[j].clone(), ys[(j + 1) % cycle_len].clone()]));
        }
        let mut f = and(parts);
        for y in ys.into_iter().rev() {
            f = exists(y, f);
        }
        Some(f)
    });
    let phi_gra = to_prenex(&phi_h);
    Ok(EncodeTrace { b, phi_b, c, phi_c, h, phi_gra, gadgets })
}

fn relativize(phi: &Formula, u_name: &str) -> Formula {
    match phi {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) | Formula::Not(_) => {
            phi.clone()
        }
        Formula::And(gs) => and(gs.iter().map(|g| relativize(g, u_name))),
        Formula::Or(gs) => or(gs.iter().map(|g| relativize(g, u_name))),
        Formula::Exists(v, g) => exists(
            v.clone(),
            and([atom(u_name, [v.clone()]), relativize(g, u_name)]),
        ),
        Formula::Forall(v, g) => forall(
            v.clone(),
            or([not(atom(u_name, [v.clone()])), relativize(g, u_name)]),
        ),
    }
}

/// Cap on the complement relation size in the arity-preserving encoding.
pub const COMPLEMENT_CAP: u64 = 1_000_000;

/// Arity-bounded encoding: expands `A` with complement relations, rewrites
/// all relation literals to a uniform polarity (chosen from the fragment of
/// `φ` so that the new quantifier block merges with the innermost block),
/// then applies the graph encoding. `φ ∈ Σ_t ⇒ result ∈ Σ_t` (dually Π).
pub fn encode_to_graph_arity_preserving(
    a: &Structure,
    phi: &Formula,
    s: usize,
) -> Result<(Graph, Formula), EncodeError> {
    let trace = encode_to_graph_arity_preserving_trace(a, phi, s)?;
    Ok((trace.h, trace.phi_gra))
}

/// The complement-expanded structure and uniform-polarity formula of the
/// arity-preserving encoding, plus the downstream graph trace.
pub struct ArityPreservingTrace {
    pub expanded: Structure,
    pub uniform: Formula,
    pub h: Graph,
    pub phi_gra: Formula,
}

pub fn encode_to_graph_arity_preserving_trace(
    a: &Structure,
    phi: &Formula,
    s: usize,
) -> Result<ArityPreservingTrace, EncodeError> {
    check_precondition(a, phi)?;
    let found = a.vocab().arity();
    if found > s {
        return Err(EncodeError::ArityBoundExceeded { found, bound: s });
    }
    let info = classify(phi).expect("prenex checked");
    // last block existential: rewrite positively so the fresh existentials
    // merge into it; last block universal: rewrite negatively
    let positive = match info.class {
        FragmentClass::QuantifierFree => true,
        FragmentClass::Sigma(t) => t % 2 == 1,
        FragmentClass::Pi(t) => t % 2 == 0,
    };

    let mut expanded = a.clone();
    let mut co_name: BTreeMap<String, String> = BTreeMap::new();
    for sym in a.vocab().symbols() {
        let candidates = (a.universe() as u128).pow(sym.arity as u32);
        if candidates > COMPLEMENT_CAP as u128 {
            return Err(EncodeError::ComplementTooLarge { candidates, cap: COMPLEMENT_CAP });
        }
        let name = expanded.vocab().fresh_name(&format!("not_{}", sym.name));
        let complement: Vec<Vec<Element>> = crate::oracle::all_tuples(a.universe(), sym.arity)
            .into_iter()
            .filter(|t| !a.has_tuple(&sym.name, t))
            .collect();
        expanded = expanded.with_relation(&name, sym.arity, complement)?;
        co_name.insert(sym.name.clone(), name);
    }

    let uniform = to_nnf(&rewrite_polarity(phi, &co_name, positive));
    let (h, phi_gra) = encode_to_graph(&expanded, &uniform)?;
    Ok(ArityPreservingTrace { expanded, uniform, h, phi_gra })
}

/// Rewrites relation literals to uniform polarity: positively by replacing
/// `¬R(x̄)` with `not_R(x̄)`, negatively by replacing `R(x̄)` with `¬not_R(x̄)`.
fn rewrite_polarity(f: &Formula, co: &BTreeMap<String, String>, positive: bool) -> Formula {
    match f {
        Formula::Not(g) => {
            if let Formula::Atom { rel, args } = &**g {
                if co.contains_key(rel) {
                    return if positive {
                        // ¬R(x̄) becomes the positive complement atom
                        atom(co[rel].clone(), args.clone())
                    } else {
                        // already a negative literal
                        f.clone()
                    };
                }
            }
            not(rewrite_polarity(g, co, positive))
        }
        Formula::Atom { rel, args } => {
            if !positive {
                if let Some(c) = co.get(rel) {
                    return not(atom(c.clone(), args.clone()));
                }
            }
            f.clone()
        }
        Formula::True | Formula::False | Formula::Eq(..) => f.clone(),
        Formula::And(gs) => and(gs.iter().map(|g| rewrite_polarity(g, co, positive))),
        Formula::Or(gs) => or(gs.iter().map(|g| rewrite_polarity(g, co, positive))),
        Formula::Exists(v, g) => exists(v.clone(), rewrite_polarity(g, co, positive)),
        Formula::Forall(v, g) => forall(v.clone(), rewrite_polarity(g, co, positive)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::eval_sentence;
    use crate::parse::parse;

    #[test]
    fn b_structure_size_of_k2() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. EX y. (E(x,y) & !x=y)").unwrap();
        let trace = encode_to_graph_trace(&k2, &phi).unwrap();
        assert_eq!(trace.b.universe(), 2 + 2);
        assert_eq!(trace.b.tuple_count("U"), 2);
        assert_eq!(trace.b.tuple_count("U_E"), 2);
    }

    #[test]
    fn midpoints_subdivide_each_incidence() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. E(x,x)").unwrap();
        let trace = encode_to_graph_trace(&k2, &phi).unwrap();
        // each of the 2 incidence elements touches one element through E1
        // and one through E2: one midpoint per incidence
        assert_eq!(trace.c.tuple_count("P1"), 2);
        assert_eq!(trace.c.tuple_count("P2"), 2);
        assert_eq!(trace.c.universe(), 4 + 4);
        // every midpoint has degree 2 toward its two endpoints
        assert_eq!(trace.c.tuple_count("E"), 4 * 4);
    }

    #[test]
    fn base_graph_is_layered_bipartite() {
        // every midpoint edge joins a midpoint and a non-midpoint, and every
        // incidence joins an original element and an incidence element; hence
        // all base cycles have length divisible by four
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. E(x,x)").unwrap();
        let trace = encode_to_graph_trace(&k2, &phi).unwrap();
        let c = &trace.c;
        let is_mid = |e: Element| (1..=2).any(|i| c.has_tuple(&format!("P{i}"), &[e]));
        for t in c.tuples("E") {
            assert_ne!(is_mid(t[0]), is_mid(t[1]));
        }
        for i in 1..=2 {
            for t in trace.b.tuples(&format!("E{i}")) {
                let orig = t[0] < 2 || t[1] < 2;
                let incidence = trace.b.has_tuple("U_E", &[t[0]]) || trace.b.has_tuple("U_E", &[t[1]]);
                assert!(orig && incidence);
            }
        }
    }

    #[test]
    fn truth_preserved_on_k2_examples() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        for (src, expect) in [
            ("EX x. EX y. (E(x,y) & !x=y)", true),
            ("EX x. E(x,x)", false),
            ("ALL x. EX y. E(x,y)", true),
            ("EX x. ALL y. (x=y | E(x,y))", true),
            ("ALL x. ALL y. E(x,y)", false),
        ] {
            let phi = to_prenex(&parse(src).unwrap());
            assert_eq!(eval_sentence(&k2, &phi).unwrap(), expect, "{src} on K2");
            let (h, phi_gra) = encode_to_graph(&k2, &phi).unwrap();
            assert_eq!(
                eval_sentence(h.as_structure(), &phi_gra).unwrap(),
                expect,
                "{src} encoded"
            );
        }
    }

    #[test]
    fn truth_preserved_on_ternary_structure() {
        let vocab = Vocabulary::new([("R", 3)]).unwrap();
        let s = Structure::new(
            vocab,
            3,
            [("R".to_string(), vec![0, 1, 2]), ("R".to_string(), vec![2, 2, 0])],
        )
        .unwrap();
        for (src, expect) in [
            ("EX x. EX y. EX z. R(x,y,z)", true),
            ("EX x. R(x,x,x)", false),
            ("ALL x. EX y. EX z. (R(x,y,z) | R(y,z,x) | R(z,x,y))", true),
        ] {
            let phi = to_prenex(&parse(src).unwrap());
            assert_eq!(eval_sentence(&s, &phi).unwrap(), expect, "{src} direct");
            let (h, phi_gra) = encode_to_graph(&s, &phi).unwrap();
            assert_eq!(
                eval_sentence(h.as_structure(), &phi_gra).unwrap(),
                expect,
                "{src} encoded"
            );
        }
    }

    #[test]
    fn sigma1_lands_in_sigma2() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. EX y. E(x,y)").unwrap();
        let (_, phi_gra) = encode_to_graph(&k2, &phi).unwrap();
        let info = classify(&phi_gra).unwrap();
        assert!(info.in_sigma(2), "got {:?}", info.class);
    }

    #[test]
    fn pi1_lands_in_pi2() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("ALL x. ALL y. (x=y | E(x,y))").unwrap();
        let (_, phi_gra) = encode_to_graph(&k2, &phi).unwrap();
        assert!(classify(&phi_gra).unwrap().in_pi(2));
    }

    #[test]
    fn rejects_non_prenex_input() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("(EX x. E(x,x)) | (EX y. E(y,y))").unwrap();
        assert_eq!(encode_to_graph(&k2, &phi).unwrap_err(), EncodeError::NotPrenexNnf);
    }

    #[test]
    fn complement_of_k2_edges() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. EX y. E(x,y)").unwrap();
        let trace = encode_to_graph_arity_preserving_trace(&k2, &phi, 2).unwrap();
        assert_eq!(trace.expanded.tuple_count("not_E"), 2);
        assert!(trace.expanded.has_tuple("not_E", &[0, 0]));
        assert!(trace.expanded.has_tuple("not_E", &[1, 1]));
    }

    #[test]
    fn arity_preserving_keeps_sigma1() {
        let k2 = Graph::complete(2).unwrap().into_structure();
        let phi = parse("EX x. EX y. (E(x,y) & !x=y)").unwrap();
        let (h, phi_gra) = encode_to_graph_arity_preserving(&k2, &phi, 2).unwrap();
        assert!(classify(&phi_gra).unwrap().in_sigma(1), "got {:?}", classify(&phi_gra));
        assert!(eval_sentence(h.as_structure(), &phi_gra).unwrap());
    }

    #[test]
    fn arity_preserving_keeps_pi1() {
        let p3 = Graph::path(3).unwrap().into_structure();
        let phi = parse("ALL x. ALL y. (!E(x,y) | !x=y)").unwrap();
        assert!(eval_sentence(&p3, &phi).unwrap());
        let (h, phi_gra) = encode_to_graph_arity_preserving(&p3, &phi, 2).unwrap();
        assert!(classify(&phi_gra).unwrap().in_pi(1), "got {:?}", classify(&phi_gra));
        assert!(eval_sentence(h.as_structure(), &phi_gra).unwrap());
    }

    #[test]
    fn arity_bound_enforced() {
        let vocab = Vocabulary::new([("R", 3)]).unwrap();
        let s = Structure::new(vocab, 2, [("R".to_string(), vec![0, 1, 1])]).unwrap();
        let phi = parse("EX x. R(x,x,x)").unwrap();
        assert_eq!(
            encode_to_graph_arity_preserving(&s, &phi, 2).unwrap_err(),
            EncodeError::ArityBoundExceeded { found: 3, bound: 2 }
        );
    }

    #[test]
    fn truth_preserved_by_arity_preserving_on_examples() {
        let p3 = Graph::path(3).unwrap().into_structure();
        for (src, expect) in [
            ("EX x. EX y. (E(x,y) & !x=y)", true),
            ("ALL x. EX y. E(x,y)", true),
            ("EX x. ALL y. E(x,y)", false),
            ("ALL x. ALL y. E(x,y)", false),
        ] {
            let phi = to_prenex(&parse(src).unwrap());
            let (h, phi_gra) = encode_to_graph_arity_preserving(&p3, &phi, 2).unwrap();
            assert_eq!(
                eval_sentence(h.as_structure(), &phi_gra).unwrap(),
                expect,
                "{src}"
            );
        }
    }
}
