//! Finite relational structures in list representation.
//!
//! A [`Structure`] is a finite universe `0..n` together with a tuple set for
//! each relation symbol of its [`Vocabulary`]. Graphs are structures over a
//! single binary symbol `E` whose relation is symmetric and irreflexive.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

/// A universe element. Universes are always `0..n`.
pub type Element = usize;

/// A tuple of universe elements.
pub type Tuple = Vec<Element>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("tuple {tuple:?} for relation {rel} has {} entries, arity is {arity}", tuple.len())]
    ArityMismatch {
        rel: String,
        arity: usize,
        tuple: Tuple,
    },
    #[error("tuple {tuple:?} for relation {rel} mentions element {elem}, universe size is {n}")]
    ElementOutOfRange {
        rel: String,
        tuple: Tuple,
        elem: Element,
        n: usize,
    },
    #[error("empty universes are rejected")]
    EmptyUniverse,
    #[error("not a graph: {0}")]
    NotAGraph(String),
    #[error("unknown relation symbol {0}")]
    UnknownRelation(String),
    #[error("duplicate relation symbol {0}")]
    DuplicateSymbol(String),
    #[error("relation symbol {0} has arity 0; arities must be positive")]
    ZeroArity(String),
    #[error("structure text format: {0}")]
    Format(String),
}

/// A relation symbol with its arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelSym {
    pub name: String,
    pub arity: usize,
}

/// An ordered list of relation symbols. No function or constant symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    symbols: Vec<RelSym>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(name, arity)` pairs. Names must be unique,
    /// arities positive. The empty vocabulary (equality only) is allowed.
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = (S, usize)>) -> Result<Self, StructureError> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (name, arity) in symbols {
            let name = name.into();
            if arity == 0 {
                return Err(StructureError::ZeroArity(name));
            }
            if !seen.insert(name.clone()) {
                return Err(StructureError::DuplicateSymbol(name));
            }
            out.push(RelSym { name, arity });
        }
        Ok(Vocabulary { symbols: out })
    }

    /// The vocabulary of graphs: a single binary symbol `E`.
    pub fn graph() -> Self {
        Vocabulary::new([("E", 2)]).unwrap()
    }

    pub fn symbols(&self) -> &[RelSym] {
        &self.symbols
    }

    pub fn arity_of(&self, name: &str) -> Option<usize> {
        self.symbols.iter().find(|s| s.name == name).map(|s| s.arity)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.arity_of(name).is_some()
    }

    /// The maximal arity of the relation symbols; 0 for the empty vocabulary.
    pub fn arity(&self) -> usize {
        self.symbols.iter().map(|s| s.arity).max().unwrap_or(0)
    }

    /// Extends with a fresh symbol, erroring on duplicates.
    pub fn with_symbol(&self, name: &str, arity: usize) -> Result<Self, StructureError> {
        let mut symbols: Vec<(String, usize)> =
            self.symbols.iter().map(|s| (s.name.clone(), s.arity)).collect();
        symbols.push((name.to_string(), arity));
        Vocabulary::new(symbols)
    }

    /// A name not colliding with any existing symbol, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> String {
        if !self.contains(base) {
            return base.to_string();
        }
        let mut i = 1;
        loop {
            let cand = format!("{base}_{i}");
            if !self.contains(&cand) {
                return cand;
            }
            i += 1;
        }
    }
}

/// A finite relational structure with universe `0..n` and one tuple set per
/// relation symbol, stored as sorted sets (list representation).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    vocab: Vocabulary,
    n: usize,
    rels: BTreeMap<String, BTreeSet<Tuple>>,
    /// Descriptions of elements introduced by encodings, keyed by element.
    pub provenance: BTreeMap<Element, String>,
}

impl Structure {
    /// Validates raw structure data: every tuple must match its symbol's
    /// arity and stay inside the universe; `n` must be positive.
    pub fn new(
        vocab: Vocabulary,
        n: usize,
        tuples: impl IntoIterator<Item = (String, Tuple)>,
    ) -> Result<Self, StructureError> {
        if n == 0 {
            return Err(StructureError::EmptyUniverse);
        }
        let mut rels: BTreeMap<String, BTreeSet<Tuple>> = vocab
            .symbols()
            .iter()
            .map(|s| (s.name.clone(), BTreeSet::new()))
            .collect();
        for (name, tuple) in tuples {
            let arity = vocab
                .arity_of(&name)
                .ok_or_else(|| StructureError::UnknownRelation(name.clone()))?;
            if tuple.len() != arity {
                return Err(StructureError::ArityMismatch { rel: name, arity, tuple });
            }
            if let Some(&elem) = tuple.iter().find(|&&e| e >= n) {
                return Err(StructureError::ElementOutOfRange { rel: name, tuple, elem, n });
            }
            rels.get_mut(&name).unwrap().insert(tuple);
        }
        Ok(Structure { vocab, n, rels, provenance: BTreeMap::new() })
    }

    /// A structure with all relations empty.
    pub fn empty_relations(vocab: Vocabulary, n: usize) -> Result<Self, StructureError> {
        Structure::new(vocab, n, std::iter::empty::<(String, Tuple)>())
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Universe size.
    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> {
        0..self.n
    }

    pub fn tuples(&self, rel: &str) -> impl Iterator<Item = &Tuple> {
        self.rels.get(rel).into_iter().flatten()
    }

    pub fn tuple_set(&self, rel: &str) -> Option<&BTreeSet<Tuple>> {
        self.rels.get(rel)
    }

    pub fn tuple_count(&self, rel: &str) -> usize {
        self.rels.get(rel).map_or(0, |s| s.len())
    }

    pub fn has_tuple(&self, rel: &str, tuple: &[Element]) -> bool {
        self.rels.get(rel).is_some_and(|s| s.contains(tuple))
    }

    /// `‖A‖ = |A| + Σ_R arity(R)·|R^A|`, the size of the list representation.
    pub fn size(&self) -> usize {
        self.n
            + self
                .vocab
                .symbols()
                .iter()
                .map(|s| s.arity * self.tuple_count(&s.name))
                .sum::<usize>()
    }

    /// Inserts a tuple, assuming the symbol exists and the tuple is valid.
    /// Intended for encoders that construct structures incrementally.
    pub fn insert_tuple(&mut self, rel: &str, tuple: Tuple) {
        debug_assert_eq!(self.vocab.arity_of(rel), Some(tuple.len()));
        debug_assert!(tuple.iter().all(|&e| e < self.n));
        self.rels.get_mut(rel).expect("relation exists").insert(tuple);
    }

    /// Expansion by a fresh unary relation.
    pub fn with_unary(&self, name: &str, members: impl IntoIterator<Item = Element>) -> Result<Self, StructureError> {
        let vocab = self.vocab.with_symbol(name, 1)?;
        let mut s = Structure {
            vocab,
            n: self.n,
            rels: self.rels.clone(),
            provenance: self.provenance.clone(),
        };
        s.rels.insert(name.to_string(), members.into_iter().map(|e| vec![e]).collect());
        Ok(s)
    }

    /// Expansion by a fresh relation of the given arity and tuple set.
    pub fn with_relation(
        &self,
        name: &str,
        arity: usize,
        tuples: impl IntoIterator<Item = Tuple>,
    ) -> Result<Self, StructureError> {
        let vocab = self.vocab.with_symbol(name, arity)?;
        let mut s = Structure {
            vocab,
            n: self.n,
            rels: self.rels.clone(),
            provenance: self.provenance.clone(),
        };
        s.rels.insert(name.to_string(), tuples.into_iter().collect());
        Ok(s)
    }

    /// The reduct to a sub-vocabulary.
    pub fn reduct(&self, vocab: &Vocabulary) -> Result<Self, StructureError> {
        let mut rels = BTreeMap::new();
        for sym in vocab.symbols() {
            match self.rels.get(&sym.name) {
                Some(ts) if self.vocab.arity_of(&sym.name) == Some(sym.arity) => {
                    rels.insert(sym.name.clone(), ts.clone());
                }
                _ => return Err(StructureError::UnknownRelation(sym.name.clone())),
            }
        }
        Ok(Structure {
            vocab: vocab.clone(),
            n: self.n,
            rels,
            provenance: self.provenance.clone(),
        })
    }

    /// The Gaifman graph: `a ~ b` iff `a ≠ b` and some tuple of some relation
    /// contains both.
    pub fn gaifman(&self) -> Graph {
        let mut g = Structure::empty_relations(Vocabulary::graph(), self.n).expect("n >= 1");
        for sym in self.vocab.symbols() {
            for tuple in self.tuples(&sym.name) {
                for (i, &a) in tuple.iter().enumerate() {
                    for &b in &tuple[i + 1..] {
                        if a != b {
                            g.insert_tuple("E", vec![a, b]);
                            g.insert_tuple("E", vec![b, a]);
                        }
                    }
                }
            }
        }
        Graph(g)
    }
}

/// A loop-free undirected graph: a `{E/2}`-structure with `E` symmetric and
/// irreflexive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph(Structure);

impl Graph {
    /// Checks the graph invariants on an arbitrary structure.
    pub fn try_from_structure(s: Structure) -> Result<Self, StructureError> {
        if s.vocab.symbols().len() != 1 || s.vocab.arity_of("E") != Some(2) {
            return Err(StructureError::NotAGraph(
                "vocabulary must be exactly {E/2}".into(),
            ));
        }
        for t in s.tuples("E") {
            if t[0] == t[1] {
                return Err(StructureError::NotAGraph(format!("loop at {}", t[0])));
            }
            if !s.has_tuple("E", &[t[1], t[0]]) {
                return Err(StructureError::NotAGraph(format!(
                    "edge ({},{}) has no symmetric partner",
                    t[0], t[1]
                )));
            }
        }
        Ok(Graph(s))
    }

    /// An edgeless graph on `n` vertices.
    pub fn edgeless(n: usize) -> Result<Self, StructureError> {
        Ok(Graph(Structure::empty_relations(Vocabulary::graph(), n)?))
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self, StructureError> {
        let mut g = Self::edgeless(n)?;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    g.0.insert_tuple("E", vec![a, b]);
                }
            }
        }
        Ok(g)
    }

    /// The path `P_n` on `n` vertices (`n-1` edges).
    pub fn path(n: usize) -> Result<Self, StructureError> {
        let mut g = Self::edgeless(n)?;
        for a in 0..n.saturating_sub(1) {
            g.add_edge(a, a + 1);
        }
        Ok(g)
    }

    /// The cycle `C_n`, requiring `n >= 3`.
    pub fn cycle(n: usize) -> Result<Self, StructureError> {
        if n < 3 {
            return Err(StructureError::NotAGraph("cycles need n >= 3".into()));
        }
        let mut g = Self::edgeless(n)?;
        for a in 0..n {
            g.add_edge(a, (a + 1) % n);
        }
        Ok(g)
    }

    /// The `rows × cols` grid graph.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, StructureError> {
        let mut g = Self::edgeless(rows.checked_mul(cols).unwrap_or(0))?;
        let idx = |r: usize, c: usize| r * cols + c;
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    g.add_edge(idx(r, c), idx(r, c + 1));
                }
                if r + 1 < rows {
                    g.add_edge(idx(r, c), idx(r + 1, c));
                }
            }
        }
        Ok(g)
    }

    /// Inserts both orientations of an edge. Loops are ignored.
    pub fn add_edge(&mut self, a: Element, b: Element) {
        if a != b {
            self.0.insert_tuple("E", vec![a, b]);
            self.0.insert_tuple("E", vec![b, a]);
        }
    }

    pub fn has_edge(&self, a: Element, b: Element) -> bool {
        self.0.has_tuple("E", &[a, b])
    }

    pub fn vertices(&self) -> usize {
        self.0.universe()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.0.tuple_count("E") / 2
    }

    pub fn neighbors(&self, a: Element) -> Vec<Element> {
        self.0
            .tuples("E")
            .filter(|t| t[0] == a)
            .map(|t| t[1])
            .collect()
    }

    pub fn degree(&self, a: Element) -> usize {
        self.neighbors(a).len()
    }

    pub fn as_structure(&self) -> &Structure {
        &self.0
    }

    pub fn into_structure(self) -> Structure {
        self.0
    }

    /// Records a provenance label for a vertex.
    pub fn set_provenance(&mut self, v: Element, label: String) {
        self.0.provenance.insert(v, label);
    }
}

/// Disjoint union of graphs: the universe is renumbered consecutively and the
/// provenance map records each vertex's origin.
pub fn disjoint_union(graphs: &[Graph]) -> Result<Graph, StructureError> {
    let total: usize = graphs.iter().map(|g| g.vertices()).sum();
    if total == 0 {
        return Err(StructureError::EmptyUniverse);
    }
    let mut out = Graph::edgeless(total)?;
    let mut offset = 0;
    for (gi, g) in graphs.iter().enumerate() {
        for v in 0..g.vertices() {
            let label = match g.as_structure().provenance.get(&v) {
                Some(p) => format!("g{gi}:{p}"),
                None => format!("g{gi}:{v}"),
            };
            out.0.provenance.insert(offset + v, label);
        }
        for t in g.as_structure().tuples("E") {
            out.0.insert_tuple("E", vec![offset + t[0], offset + t[1]]);
        }
        offset += g.vertices();
    }
    Ok(out)
}

/// Expands `A` by unary color relations `C1..Ck` with `C_i = f⁻¹(i)`.
/// `f` maps every element to a color in `1..=k`; the reduct to the original
/// vocabulary is `A` itself. Color symbol names are uniqued against the
/// vocabulary, and the chosen names are returned alongside.
pub fn color_expand(
    a: &Structure,
    f: &[usize],
    k: usize,
) -> Result<(Structure, Vec<String>), StructureError> {
    assert_eq!(f.len(), a.universe(), "f must be total on the universe");
    assert!(f.iter().all(|&c| 1 <= c && c <= k), "colors must lie in 1..=k");
    let mut out = a.clone();
    let mut names = Vec::new();
    for color in 1..=k {
        let name = out.vocab().fresh_name(&format!("C{color}"));
        let members: Vec<Element> = (0..a.universe()).filter(|&e| f[e] == color).collect();
        out = out.with_unary(&name, members)?;
        names.push(name);
    }
    Ok((out, names))
}

// ---------------------------------------------------------------------------
// Text format and DOT export
// ---------------------------------------------------------------------------

/// Parses the line-oriented structure format:
///
/// ```text
/// # comment
/// vocab E 2
/// universe 3
/// E 0 1
/// E 1 0
/// ```
///
/// With `symmetrize` set, binary tuples are closed under swapping, so each
/// undirected edge may be given once.
pub fn parse_structure(text: &str, symmetrize: bool) -> Result<Structure, StructureError> {
    let mut symbols: Vec<(String, usize)> = Vec::new();
    let mut n: Option<usize> = None;
    let mut tuples: Vec<(String, Tuple)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        let err = |msg: String| StructureError::Format(format!("line {}: {msg}", lineno + 1));
        match head {
            "vocab" => {
                let name = parts
                    .next()
                    .ok_or_else(|| err("vocab needs a symbol name".into()))?;
                let arity: usize = parts
                    .next()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| err("vocab needs a numeric arity".into()))?;
                symbols.push((name.to_string(), arity));
            }
            "universe" => {
                let size: usize = parts
                    .next()
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| err("universe needs a size".into()))?;
                n = Some(size);
            }
            rel => {
                let tuple: Result<Tuple, _> = parts
                    .map(|p| p.parse::<usize>().map_err(|_| err(format!("bad element {p}"))))
                    .collect();
                tuples.push((rel.to_string(), tuple?));
            }
        }
    }
    let n = n.ok_or_else(|| StructureError::Format("missing universe line".into()))?;
    if symmetrize {
        let mut extra = Vec::new();
        for (name, t) in &tuples {
            if t.len() == 2 {
                extra.push((name.clone(), vec![t[1], t[0]]));
            }
        }
        tuples.extend(extra);
    }
    let vocab = Vocabulary::new(symbols)?;
    Structure::new(vocab, n, tuples)
}

/// Renders a structure in the text format accepted by [`parse_structure`].
pub fn print_structure(s: &Structure) -> String {
    let mut out = String::new();
    for sym in s.vocab().symbols() {
        let _ = writeln!(out, "vocab {} {}", sym.name, sym.arity);
    }
    let _ = writeln!(out, "universe {}", s.universe());
    for sym in s.vocab().symbols() {
        for t in s.tuples(&sym.name) {
            let elems: Vec<String> = t.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(out, "{} {}", sym.name, elems.join(" "));
        }
    }
    out
}

/// DOT export for graphs; vertex labels carry provenance when present.
pub fn graph_to_dot(g: &Graph) -> String {
    let mut out = String::from("graph {\n");
    for v in 0..g.vertices() {
        match g.as_structure().provenance.get(&v) {
            Some(p) => {
                let _ = writeln!(out, "  v{v} [label=\"{v}: {p}\"];");
            }
            None => {
                let _ = writeln!(out, "  v{v};");
            }
        }
    }
    for t in g.as_structure().tuples("E") {
        if t[0] < t[1] {
            let _ = writeln!(out, "  v{} -- v{};", t[0], t[1]);
        }
    }
    out.push_str("}\n");
    out
}
