//! Seeded random generators for structures and formulas, used by the tests,
//! the verification suites, and the command-line generator.

use rand::Rng;

use crate::formula::{and, atom, eq, exists, forall, not, or, Formula};
use crate::prop::{pand, pnot, por, PropFormula};
use crate::structure::{Graph, Structure, Vocabulary};

/// Erdős–Rényi graph with edge probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut g = Graph::edgeless(n.max(1)).expect("n >= 1");
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// Uniform random tree built by attaching each vertex to an earlier one.
pub fn random_tree(n: usize, rng: &mut impl Rng) -> Graph {
    let n = n.max(1);
    let mut g = Graph::edgeless(n).expect("n >= 1");
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        g.add_edge(parent, v);
    }
    g
}

/// Random structure: every tuple of every relation is present independently
/// with probability `density`.
pub fn random_structure(vocab: &Vocabulary, n: usize, density: f64, rng: &mut impl Rng) -> Structure {
    let mut s = Structure::empty_relations(vocab.clone(), n.max(1)).expect("n >= 1");
    for sym in vocab.symbols() {
        for t in crate::oracle::all_tuples(n.max(1), sym.arity) {
            if rng.gen_bool(density) {
                s.insert_tuple(&sym.name, t);
            }
        }
    }
    s
}

fn var_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("v{i}")).collect()
}

fn random_literal(vocab: &Vocabulary, vars: &[String], rng: &mut impl Rng) -> Formula {
    let lit = if vocab.symbols().is_empty() || rng.gen_bool(0.3) {
        let x = &vars[rng.gen_range(0..vars.len())];
        let y = &vars[rng.gen_range(0..vars.len())];
        eq(x.clone(), y.clone())
    } else {
        let sym = &vocab.symbols()[rng.gen_range(0..vocab.symbols().len())];
        let args: Vec<String> = (0..sym.arity)
            .map(|_| vars[rng.gen_range(0..vars.len())].clone())
            .collect();
        atom(sym.name.clone(), args)
    };
    if rng.gen_bool(0.5) {
        not(lit)
    } else {
        lit
    }
}

/// Random existential prenex sentence: `k` variables, a matrix combining up
/// to `literals` literals with conjunction and disjunction.
pub fn random_sigma1(
    vocab: &Vocabulary,
    max_vars: usize,
    literals: usize,
    rng: &mut impl Rng,
) -> Formula {
    let k = rng.gen_range(1..=max_vars.max(1));
    let vars = var_names(k);
    let count = rng.gen_range(1..=literals.max(1));
    let mut pool: Vec<Formula> = (0..count).map(|_| random_literal(vocab, &vars, rng)).collect();
    // group a few literals disjunctively, conjoin the rest
    let mut parts: Vec<Formula> = Vec::new();
    while let Some(l) = pool.pop() {
        if pool.len() >= 2 && rng.gen_bool(0.4) {
            let r = pool.pop().unwrap();
            parts.push(or([l, r]));
        } else {
            parts.push(l);
        }
    }
    let mut f = and(parts);
    // ensure every variable occurs so the result is a sentence
    for v in &vars {
        if !f.free_vars().contains(v) {
            f = and([f, eq(v.clone(), v.clone())]);
        }
    }
    for v in vars.iter().rev() {
        f = exists(v.clone(), f);
    }
    f
}

/// Random existential prenex sentence whose matrix is a conjunction of
/// literals, inequalities included — the color-coding input shape.
pub fn random_conjunctive_sigma1(vocab: &Vocabulary, max_vars: usize, rng: &mut impl Rng) -> Formula {
    let k = rng.gen_range(1..=max_vars.max(1));
    let vars = var_names(k);
    let count = rng.gen_range(1..=(2 * k).max(2));
    let mut parts: Vec<Formula> = (0..count).map(|_| random_literal(vocab, &vars, rng)).collect();
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(0.5) {
                parts.push(not(eq(vars[i].clone(), vars[j].clone())));
            }
        }
    }
    let mut f = and(parts);
    for v in &vars {
        if !f.free_vars().contains(v) {
            f = and([f, eq(v.clone(), v.clone())]);
        }
    }
    for v in vars.iter().rev() {
        f = exists(v.clone(), f);
    }
    f
}

/// Random sentence of quantifier rank up to `qr` with arbitrary quantifier
/// kinds and connectives.
pub fn random_formula(vocab: &Vocabulary, qr: usize, rng: &mut impl Rng) -> Formula {
    let k = rng.gen_range(1..=qr.max(1));
    let vars = var_names(k);
    let count = rng.gen_range(1..=(2 * k).max(2));
    let mut pool: Vec<Formula> = (0..count).map(|_| random_literal(vocab, &vars, rng)).collect();
    let mut matrix = pool.pop().unwrap();
    for l in pool {
        matrix = if rng.gen_bool(0.5) { and([matrix, l]) } else { or([matrix, l]) };
        if rng.gen_bool(0.2) {
            matrix = not(matrix);
        }
    }
    for v in &vars {
        if !matrix.free_vars().contains(v) {
            matrix = and([matrix, eq(v.clone(), v.clone())]);
        }
    }
    let mut f = matrix;
    for v in vars.iter().rev() {
        f = if rng.gen_bool(0.5) {
            exists(v.clone(), f)
        } else {
            forall(v.clone(), f)
        };
    }
    f
}

/// Random propositional formula over `nvars` variables with the given
/// connective depth; big connectives appear at the outermost levels.
pub fn random_prop(nvars: usize, depth: usize, rng: &mut impl Rng) -> PropFormula {
    fn small(nvars: usize, depth: usize, rng: &mut impl Rng) -> PropFormula {
        if depth == 0 {
            let v = PropFormula::Var(rng.gen_range(0..nvars));
            return if rng.gen_bool(0.4) { pnot(v) } else { v };
        }
        let a = small(nvars, depth - 1, rng);
        let b = small(nvars, depth - 1, rng);
        if rng.gen_bool(0.5) {
            pand(a, b)
        } else {
            por(a, b)
        }
    }
    let nvars = nvars.max(1);
    if depth == 0 {
        return small(nvars, 0, rng);
    }
    let width = rng.gen_range(1..=3);
    let children: Vec<PropFormula> = (0..width)
        .map(|_| small(nvars, rng.gen_range(0..depth.min(2)), rng))
        .collect();
    if rng.gen_bool(0.5) {
        PropFormula::BigAnd(children)
    } else {
        PropFormula::BigOr(children)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{classify, to_nnf, to_prenex};
    use crate::parse::parse;
    use rand::SeedableRng;

    #[test]
    fn generators_are_deterministic_per_seed() {
        let vocab = Vocabulary::graph();
        let (a, b) = {
            let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(5);
            (
                random_structure(&vocab, 4, 0.5, &mut r1),
                random_structure(&vocab, 4, 0.5, &mut r2),
            )
        };
        assert_eq!(a, b);
    }

    #[test]
    fn random_sigma1_is_sigma1_sentence() {
        let vocab = Vocabulary::new([("E", 2), ("P", 1)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let f = random_sigma1(&vocab, 4, 5, &mut rng);
            assert!(f.is_sentence(), "{}", f.print());
            let info = classify(&to_prenex(&f)).unwrap();
            assert!(info.in_sigma(1), "{}", f.print());
        }
    }

    #[test]
    fn random_formula_roundtrips_and_classifies() {
        let vocab = Vocabulary::new([("E", 2), ("P", 1)]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let f = random_formula(&vocab, 3, &mut rng);
            assert_eq!(parse(&f.print()).unwrap(), f);
            // classification of the prenex never fails for grammar formulas
            let p = to_prenex(&to_nnf(&f));
            classify(&p).unwrap();
        }
    }

    #[test]
    fn random_trees_have_n_minus_1_edges() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..8 {
            let t = random_tree(n, &mut rng);
            assert_eq!(t.edge_count(), n.saturating_sub(1));
        }
    }
}
