//! Propositional formulas with small and big connectives, and the syntactic
//! `C_t` / `D_t` depth-bounded classes used by weighted satisfiability.
//!
//! Small conjunctions and disjunctions are binary; big ones range over
//! arbitrary finite lists. Depth counts `∧ ∨ ⋀ ⋁` nodes on a root-leaf path;
//! negations are not counted.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropError {
    #[error("propositional syntax error: {0}")]
    Syntax(String),
}

/// A propositional formula over variables `X0, X1, …`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum PropFormula {
    Var(usize),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
    BigAnd(Vec<PropFormula>),
    BigOr(Vec<PropFormula>),
}

pub fn pvar(i: usize) -> PropFormula {
    PropFormula::Var(i)
}

pub fn pnot(f: PropFormula) -> PropFormula {
    PropFormula::Not(Box::new(f))
}

pub fn pand(a: PropFormula, b: PropFormula) -> PropFormula {
    PropFormula::And(Box::new(a), Box::new(b))
}

pub fn por(a: PropFormula, b: PropFormula) -> PropFormula {
    PropFormula::Or(Box::new(a), Box::new(b))
}

impl PropFormula {
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            PropFormula::Var(i) => {
                out.insert(*i);
            }
            PropFormula::Not(f) => f.collect_vars(out),
            PropFormula::And(a, b) | PropFormula::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            PropFormula::BigAnd(fs) | PropFormula::BigOr(fs) => {
                fs.iter().for_each(|f| f.collect_vars(out));
            }
        }
    }

    /// Evaluates under the assignment whose true variables are `truth`.
    pub fn eval(&self, truth: &BTreeSet<usize>) -> bool {
        match self {
            PropFormula::Var(i) => truth.contains(i),
            PropFormula::Not(f) => !f.eval(truth),
            PropFormula::And(a, b) => a.eval(truth) && b.eval(truth),
            PropFormula::Or(a, b) => a.eval(truth) || b.eval(truth),
            PropFormula::BigAnd(fs) => fs.iter().all(|f| f.eval(truth)),
            PropFormula::BigOr(fs) => fs.iter().any(|f| f.eval(truth)),
        }
    }

    /// Maximum number of connective nodes (negations excluded) on a
    /// root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            PropFormula::Var(_) => 0,
            PropFormula::Not(f) => f.depth(),
            PropFormula::And(a, b) | PropFormula::Or(a, b) => 1 + a.depth().max(b.depth()),
            PropFormula::BigAnd(fs) | PropFormula::BigOr(fs) => {
                1 + fs.iter().map(|f| f.depth()).max().unwrap_or(0)
            }
        }
    }

    /// Small formulas contain no big connectives.
    pub fn is_small(&self) -> bool {
        match self {
            PropFormula::Var(_) => true,
            PropFormula::Not(f) => f.is_small(),
            PropFormula::And(a, b) | PropFormula::Or(a, b) => a.is_small() && b.is_small(),
            PropFormula::BigAnd(_) | PropFormula::BigOr(_) => false,
        }
    }

    /// A literal is a variable or a negated variable.
    pub fn as_literal(&self) -> Option<(usize, bool)> {
        match self {
            PropFormula::Var(i) => Some((*i, true)),
            PropFormula::Not(f) => match **f {
                PropFormula::Var(i) => Some((i, false)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn print(&self) -> String {
        match self {
            PropFormula::Var(i) => format!("X{i}"),
            PropFormula::Not(f) => format!("(NOT {})", f.print()),
            PropFormula::And(a, b) => format!("(AND {} {})", a.print(), b.print()),
            PropFormula::Or(a, b) => format!("(OR {} {})", a.print(), b.print()),
            PropFormula::BigAnd(fs) => print_many("BIGAND", fs),
            PropFormula::BigOr(fs) => print_many("BIGOR", fs),
        }
    }
}

fn print_many(tag: &str, fs: &[PropFormula]) -> String {
    let mut out = format!("({tag}");
    for f in fs {
        out.push(' ');
        out.push_str(&f.print());
    }
    out.push(')');
    out
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// The syntactic class of a propositional formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropClass {
    /// `C_0 = D_0`: a small formula of the recorded depth.
    Small { depth: usize },
    /// `C_t` (`t ≥ 1`): a big conjunction of `D_{t-1}` formulas; `d` is the
    /// maximal depth of its small subformulas, so the formula is `C_{t,d}`.
    C { t: usize, d: usize },
    /// `D_t`, dually.
    D { t: usize, d: usize },
    /// Fits no class (e.g. a negated or small-joined big formula).
    Other,
}

impl PropClass {
    /// Membership in `C_{t,d}` under the strict syntactic reading
    /// (`C_0 = D_0` is the small class; `d` bounds small-subformula depth).
    pub fn in_ctd(&self, t: usize, d: usize) -> bool {
        match *self {
            PropClass::Small { depth } => t == 0 && depth <= d,
            PropClass::C { t: mt, d: md } => mt == t && md <= d,
            _ => false,
        }
    }

    pub fn in_dtd(&self, t: usize, d: usize) -> bool {
        match *self {
            PropClass::Small { depth } => t == 0 && depth <= d,
            PropClass::D { t: mt, d: md } => mt == t && md <= d,
            _ => false,
        }
    }
}

/// Minimal `t` such that the formula is in `C_t` / `D_t`, with the small
/// depth bound `d`. Purely syntactic and total.
pub fn classify_prop(f: &PropFormula) -> PropClass {
    if f.is_small() {
        return PropClass::Small { depth: f.depth() };
    }
    match (c_rank(f), d_rank(f)) {
        (Some((t, d)), _) => PropClass::C { t, d },
        (None, Some((t, d))) => PropClass::D { t, d },
        (None, None) => PropClass::Other,
    }
}

fn c_rank(f: &PropFormula) -> Option<(usize, usize)> {
    match f {
        PropFormula::BigAnd(fs) => {
            let mut t = 0;
            let mut d = 0;
            for child in fs {
                let (ct, cd) = d_rank(child)?;
                t = t.max(ct);
                d = d.max(cd);
            }
            Some((t + 1, d))
        }
        _ if f.is_small() => Some((0, f.depth())),
        _ => None,
    }
}

fn d_rank(f: &PropFormula) -> Option<(usize, usize)> {
    match f {
        PropFormula::BigOr(fs) => {
            let mut t = 0;
            let mut d = 0;
            for child in fs {
                let (ct, cd) = c_rank(child)?;
                t = t.max(ct);
                d = d.max(cd);
            }
            Some((t + 1, d))
        }
        _ if f.is_small() => Some((0, f.depth())),
        _ => None,
    }
}

/// Lifts a `C_t`/`D_t` formula to `C_{t+1}`/`D_{t+1}` by wrapping each
/// innermost small subformula in a singleton big connective of the dual kind.
pub fn lift(f: &PropFormula) -> PropFormula {
    fn go(f: &PropFormula, under_and: bool) -> PropFormula {
        if f.is_small() {
            return if under_and {
                PropFormula::BigOr(vec![f.clone()])
            } else {
                PropFormula::BigAnd(vec![f.clone()])
            };
        }
        match f {
            PropFormula::BigAnd(fs) => PropFormula::BigAnd(fs.iter().map(|g| go(g, true)).collect()),
            PropFormula::BigOr(fs) => PropFormula::BigOr(fs.iter().map(|g| go(g, false)).collect()),
            other => other.clone(),
        }
    }
    if f.is_small() {
        // ambient convention: wrap small formulas conjunctively
        return PropFormula::BigAnd(vec![f.clone()]);
    }
    go(f, false)
}

// ---------------------------------------------------------------------------
// Text format: prefix notation
// ---------------------------------------------------------------------------

/// Parses the prefix notation `(AND …)`, `(OR …)`, `(BIGAND …)`,
/// `(BIGOR …)`, `(NOT …)`, with variables `X<n>`.
pub fn parse_prop(src: &str) -> Result<PropFormula, PropError> {
    let toks = lex_prop(src)?;
    let mut pos = 0;
    let f = parse_node(&toks, &mut pos)?;
    if pos != toks.len() {
        return Err(PropError::Syntax("trailing input".into()));
    }
    Ok(f)
}

#[derive(Debug, PartialEq, Eq)]
enum PTok {
    LParen,
    RParen,
    Word(String),
}

fn lex_prop(src: &str) -> Result<Vec<PTok>, PropError> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' => {
                toks.push(PTok::LParen);
                chars.next();
            }
            ')' => {
                toks.push(PTok::RParen);
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            c if c.is_ascii_alphanumeric() => {
                let mut w = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() {
                        w.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                toks.push(PTok::Word(w));
            }
            other => return Err(PropError::Syntax(format!("unexpected character {other:?}"))),
        }
    }
    Ok(toks)
}

fn parse_node(toks: &[PTok], pos: &mut usize) -> Result<PropFormula, PropError> {
    match toks.get(*pos) {
        Some(PTok::Word(w)) => {
            let idx = w
                .strip_prefix('X')
                .and_then(|rest| rest.parse::<usize>().ok())
                .ok_or_else(|| PropError::Syntax(format!("expected a variable X<n>, got {w}")))?;
            *pos += 1;
            Ok(PropFormula::Var(idx))
        }
        Some(PTok::LParen) => {
            *pos += 1;
            let tag = match toks.get(*pos) {
                Some(PTok::Word(w)) => w.clone(),
                _ => return Err(PropError::Syntax("expected an operator after '('".into())),
            };
            *pos += 1;
            let mut children = Vec::new();
            while toks.get(*pos) != Some(&PTok::RParen) {
                if *pos >= toks.len() {
                    return Err(PropError::Syntax("unclosed '('".into()));
                }
                children.push(parse_node(toks, pos)?);
            }
            *pos += 1; // consume ')'
            let arity_err = |n: usize, got: usize| {
                PropError::Syntax(format!("{tag} takes {n} operands, got {got}"))
            };
            match tag.as_str() {
                "NOT" => match <[PropFormula; 1]>::try_from(children) {
                    Ok([a]) => Ok(pnot(a)),
                    Err(c) => Err(arity_err(1, c.len())),
                },
                "AND" => match <[PropFormula; 2]>::try_from(children) {
                    Ok([a, b]) => Ok(pand(a, b)),
                    Err(c) => Err(arity_err(2, c.len())),
                },
                "OR" => match <[PropFormula; 2]>::try_from(children) {
                    Ok([a, b]) => Ok(por(a, b)),
                    Err(c) => Err(arity_err(2, c.len())),
                },
                "BIGAND" => Ok(PropFormula::BigAnd(children)),
                "BIGOR" => Ok(PropFormula::BigOr(children)),
                other => Err(PropError::Syntax(format!("unknown operator {other}"))),
            }
        }
        _ => Err(PropError::Syntax("expected a formula".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_does_not_count_toward_depth() {
        let f = pnot(pand(pvar(0), pvar(1)));
        assert_eq!(f.depth(), 1);
        assert_eq!(classify_prop(&f), PropClass::Small { depth: 1 });
    }

    #[test]
    fn single_literal_is_small_depth_zero() {
        assert_eq!(classify_prop(&pvar(3)), PropClass::Small { depth: 0 });
        assert_eq!(classify_prop(&pnot(pvar(3))), PropClass::Small { depth: 0 });
    }

    #[test]
    fn bigand_of_bigors_of_literals_is_c2_d0() {
        let f = PropFormula::BigAnd(vec![
            PropFormula::BigOr(vec![pvar(0), pnot(pvar(1))]),
            PropFormula::BigOr(vec![pvar(2)]),
        ]);
        assert_eq!(classify_prop(&f), PropClass::C { t: 2, d: 0 });
        assert!(classify_prop(&f).in_ctd(2, 0));
        assert!(classify_prop(&f).in_ctd(2, 3));
        assert!(!classify_prop(&f).in_ctd(1, 3));
    }

    #[test]
    fn bigand_of_small_clauses_is_c1() {
        let clause = |a: usize, b: usize| por(pnot(pvar(a)), pnot(pvar(b)));
        let f = PropFormula::BigAnd(vec![clause(0, 1), clause(1, 2)]);
        assert_eq!(classify_prop(&f), PropClass::C { t: 1, d: 1 });
    }

    #[test]
    fn lifting_increases_t_by_one() {
        let f = PropFormula::BigAnd(vec![por(pvar(0), pvar(1)), pvar(2)]);
        assert_eq!(classify_prop(&f), PropClass::C { t: 1, d: 1 });
        assert_eq!(classify_prop(&lift(&f)), PropClass::C { t: 2, d: 1 });
    }

    #[test]
    fn negated_big_formula_is_other() {
        let f = pnot(PropFormula::BigAnd(vec![pvar(0)]));
        assert_eq!(classify_prop(&f), PropClass::Other);
    }

    #[test]
    fn eval_and_print_roundtrip() {
        let f = PropFormula::BigAnd(vec![
            por(pvar(0), pvar(1)),
            pnot(pand(pvar(1), pvar(2))),
        ]);
        assert_eq!(parse_prop(&f.print()).unwrap(), f);
        let mut truth = BTreeSet::new();
        truth.insert(0);
        assert!(f.eval(&truth));
        truth.insert(1);
        truth.insert(2);
        assert!(!f.eval(&truth));
    }

    #[test]
    fn empty_bigand_is_true_empty_bigor_is_false() {
        let t = PropFormula::BigAnd(vec![]);
        let f = PropFormula::BigOr(vec![]);
        assert!(t.eval(&BTreeSet::new()));
        assert!(!f.eval(&BTreeSet::new()));
    }
}
