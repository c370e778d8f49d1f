//! Tree decompositions: validation, width, heuristic and exact computation,
//! and the nice form used by the homomorphism dynamic program.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::structure::{Element, Graph, Structure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TdError {
    #[error("element {0} occurs in no bag")]
    ElementNotCovered(Element),
    #[error("tuple {tuple:?} of relation {rel} is contained in no bag")]
    TupleNotCovered { rel: String, tuple: Vec<Element> },
    #[error("the bags containing element {0} do not induce a subtree")]
    DisconnectedOccurrence(Element),
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("bag of node {node} mentions element {elem} outside the universe")]
    BagElementOutOfRange { node: usize, elem: Element },
    #[error("exact tree-width solver is capped at {cap} vertices, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error("tree decomposition text format: {0}")]
    Format(String),
}

/// A rooted tree decomposition: one bag per node, parent pointers with a
/// single root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition {
    bags: Vec<BTreeSet<Element>>,
    parent: Vec<Option<usize>>,
    root: usize,
}

impl TreeDecomposition {
    /// Builds a decomposition from bags and undirected tree edges, rooting it
    /// at the first node whose bag contains the smallest covered element.
    pub fn new(bags: Vec<BTreeSet<Element>>, edges: &[(usize, usize)]) -> Result<Self, TdError> {
        let n = bags.len();
        if n == 0 {
            return Err(TdError::NotATree("a decomposition needs at least one node".into()));
        }
        if edges.len() != n - 1 {
            return Err(TdError::NotATree(format!(
                "{} nodes need {} edges, got {}",
                n,
                n - 1,
                edges.len()
            )));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(TdError::NotATree(format!("edge ({a},{b}) mentions a missing node")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let min_elem = bags.iter().filter_map(|b| b.iter().next()).min().copied();
        let root = match min_elem {
            Some(e) => bags.iter().position(|b| b.contains(&e)).unwrap(),
            None => 0,
        };
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(t) = queue.pop_front() {
            for &u in &adj[t] {
                if !seen[u] {
                    seen[u] = true;
                    parent[u] = Some(t);
                    queue.push_back(u);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(TdError::NotATree("the edge set is not connected".into()));
        }
        Ok(TreeDecomposition { bags, parent, root })
    }

    /// A single node holding the whole universe `0..n`.
    pub fn trivial(n: usize) -> Self {
        TreeDecomposition {
            bags: vec![(0..n).collect()],
            parent: vec![None],
            root: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    pub fn bag(&self, t: usize) -> &BTreeSet<Element> {
        &self.bags[t]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parent[t]
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.bags.len()];
        for (t, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                ch[p].push(t);
            }
        }
        ch
    }

    /// `max |A_t| - 1`.
    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }
}

/// Checks both decomposition conditions against a structure: every element's
/// occurrence set is nonempty and connected, and every tuple of every
/// relation fits inside some bag. Returns the width.
pub fn validate_td(a: &Structure, td: &TreeDecomposition) -> Result<usize, TdError> {
    let n = a.universe();
    for (node, bag) in td.bags.iter().enumerate() {
        if let Some(&elem) = bag.iter().find(|&&e| e >= n) {
            return Err(TdError::BagElementOutOfRange { node, elem });
        }
    }
    // tree shape: exactly one root, every node reaches it
    let roots = td.parent.iter().filter(|p| p.is_none()).count();
    if roots != 1 || td.parent[td.root].is_some() {
        return Err(TdError::NotATree(format!("expected exactly one root, found {roots}")));
    }
    for start in 0..td.node_count() {
        let mut seen = BTreeSet::new();
        let mut cur = start;
        while let Some(p) = td.parent[cur] {
            if !seen.insert(cur) {
                return Err(TdError::NotATree("parent pointers contain a cycle".into()));
            }
            cur = p;
        }
        if cur != td.root {
            return Err(TdError::NotATree("node does not reach the root".into()));
        }
    }
    let children = td.children();
    for e in 0..n {
        let holders: BTreeSet<usize> = (0..td.node_count())
            .filter(|&t| td.bags[t].contains(&e))
            .collect();
        if holders.is_empty() {
            return Err(TdError::ElementNotCovered(e));
        }
        // connectivity of the occurrence set within the tree
        let start = *holders.iter().next().unwrap();
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(t) = queue.pop_front() {
            let mut nbrs = children[t].clone();
            if let Some(p) = td.parent[t] {
                nbrs.push(p);
            }
            for u in nbrs {
                if holders.contains(&u) && seen.insert(u) {
                    queue.push_back(u);
                }
            }
        }
        if seen.len() != holders.len() {
            return Err(TdError::DisconnectedOccurrence(e));
        }
    }
    for sym in a.vocab().symbols() {
        for tuple in a.tuples(&sym.name) {
            let elems: BTreeSet<Element> = tuple.iter().copied().collect();
            if !td.bags.iter().any(|b| elems.is_subset(b)) {
                return Err(TdError::TupleNotCovered { rel: sym.name.clone(), tuple: tuple.clone() });
            }
        }
    }
    Ok(td.width())
}

// ---------------------------------------------------------------------------
// Construction from elimination orderings
// ---------------------------------------------------------------------------

fn adjacency(g: &Graph) -> Vec<BTreeSet<Element>> {
    let mut adj = vec![BTreeSet::new(); g.vertices()];
    for t in g.as_structure().tuples("E") {
        adj[t[0]].insert(t[1]);
    }
    adj
}

/// Builds a decomposition from an elimination ordering: the bag of `v` is
/// `{v}` plus its neighbors in the fill graph at elimination time, and each
/// node hangs below the node of its earliest-eliminated bag neighbor.
fn td_from_order(g: &Graph, order: &[Element]) -> TreeDecomposition {
    let n = g.vertices();
    debug_assert_eq!(order.len(), n);
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut adj = adjacency(g);
    let mut bags: Vec<BTreeSet<Element>> = Vec::with_capacity(n);
    for &v in order {
        let nbrs: Vec<Element> = adj[v].iter().copied().collect();
        let mut bag: BTreeSet<Element> = nbrs.iter().copied().collect();
        bag.insert(v);
        bags.push(bag);
        for (i, &x) in nbrs.iter().enumerate() {
            adj[x].remove(&v);
            for &y in &nbrs[i + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        adj[v].clear();
    }
    // node i is the step at which order[i] was eliminated
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, &v) in order.iter().enumerate() {
        let next = bags[i]
            .iter()
            .filter(|&&u| u != v)
            .map(|&u| pos[u])
            .min();
        match next {
            Some(j) => edges.push((i, j)),
            None => {
                if i + 1 < n {
                    // isolated at elimination time: chain below the last node
                    edges.push((i, n - 1));
                }
            }
        }
    }
    TreeDecomposition::new(bags, &edges).expect("elimination order yields a tree")
}

/// Min-fill elimination heuristic; deterministic with lowest-id tie breaking.
/// The result is always valid; its width is an upper bound on `tw(G)`.
pub fn heuristic_td(g: &Graph) -> TreeDecomposition {
    let n = g.vertices();
    let mut adj = adjacency(g);
    let mut alive: BTreeSet<Element> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    while !alive.is_empty() {
        let mut best: Option<(usize, Element)> = None;
        for &v in &alive {
            let nbrs: Vec<Element> = adj[v].iter().copied().collect();
            let mut fill = 0usize;
            for (i, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[i + 1..] {
                    if !adj[x].contains(&y) {
                        fill += 1;
                    }
                }
            }
            if best.map_or(true, |(bf, _)| fill < bf) {
                best = Some((fill, v));
            }
        }
        let (_, v) = best.unwrap();
        let nbrs: Vec<Element> = adj[v].iter().copied().collect();
        for (i, &x) in nbrs.iter().enumerate() {
            adj[x].remove(&v);
            for &y in &nbrs[i + 1..] {
                adj[x].insert(y);
                adj[y].insert(x);
            }
        }
        adj[v].clear();
        alive.remove(&v);
        order.push(v);
    }
    td_from_order(g, &order)
}

/// Cap for [`exact_td`].
pub const EXACT_TD_CAP: usize = 12;

/// Optimal-width decomposition by dynamic programming over vertex subsets of
/// elimination prefixes. Guarded to at most [`EXACT_TD_CAP`] vertices.
pub fn exact_td(g: &Graph) -> Result<TreeDecomposition, TdError> {
    let n = g.vertices();
    if n > EXACT_TD_CAP {
        return Err(TdError::TooLarge { n, cap: EXACT_TD_CAP });
    }
    let adj = adjacency(g);
    // q(mask, v): neighbors of v outside mask∪{v}, reachable through mask
    let q = |mask: u32, v: usize| -> usize {
        let mut seen: u32 = 1 << v;
        let mut stack = vec![v];
        let mut boundary: u32 = 0;
        while let Some(u) = stack.pop() {
            for &w in &adj[u] {
                let bit = 1u32 << w;
                if seen & bit != 0 {
                    continue;
                }
                seen |= bit;
                if mask & bit != 0 {
                    stack.push(w);
                } else {
                    boundary |= bit;
                }
            }
        }
        boundary.count_ones() as usize
    };
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut cost: Vec<u8> = vec![u8::MAX; (full as usize) + 1];
    let mut choice: Vec<u8> = vec![u8::MAX; (full as usize) + 1];
    cost[0] = 0;
    let mut by_popcount: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for mask in 0..=full {
        by_popcount[mask.count_ones() as usize].push(mask);
    }
    for size in 1..=n {
        for &mask in &by_popcount[size] {
            let mut best = u8::MAX;
            let mut best_v = u8::MAX;
            for v in 0..n {
                let bit = 1u32 << v;
                if mask & bit == 0 {
                    continue;
                }
                let rest = mask & !bit;
                let c = cost[rest as usize].max(q(rest, v) as u8);
                if c < best {
                    best = c;
                    best_v = v as u8;
                }
            }
            cost[mask as usize] = best;
            choice[mask as usize] = best_v;
        }
    }
    // peel the order from the back: choice[mask] is eliminated last within mask
    let mut order_rev = Vec::with_capacity(n);
    let mut mask = full;
    while mask != 0 {
        let v = choice[mask as usize] as usize;
        order_rev.push(v);
        mask &= !(1 << v);
    }
    order_rev.reverse();
    let td = td_from_order(g, &order_rev);
    debug_assert_eq!(td.width(), cost[full as usize] as usize);
    Ok(td)
}

// ---------------------------------------------------------------------------
// Nice decompositions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NiceKind {
    /// Empty bag, no children.
    Leaf,
    /// Adds one element over its single child.
    Introduce(Element),
    /// Drops one element from its single child.
    Forget(Element),
    /// Two children with identical bags.
    Join,
}

/// A tree decomposition whose nodes are leaf/introduce/forget/join with
/// bag-size deltas of at most one. The root bag is empty.
#[derive(Debug, Clone)]
pub struct NiceDecomposition {
    pub bags: Vec<BTreeSet<Element>>,
    pub kinds: Vec<NiceKind>,
    pub children: Vec<Vec<usize>>,
    pub root: usize,
}

impl NiceDecomposition {
    pub fn node_count(&self) -> usize {
        self.bags.len()
    }

    pub fn width(&self) -> usize {
        self.bags.iter().map(|b| b.len()).max().unwrap_or(0).saturating_sub(1)
    }

    /// Bottom-up order: children before parents.
    pub fn topo_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut stack = vec![(self.root, false)];
        while let Some((t, expanded)) = stack.pop() {
            if expanded {
                out.push(t);
            } else {
                stack.push((t, true));
                for &c in &self.children[t] {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Converts to a plain decomposition (for validation).
    pub fn to_tree_decomposition(&self) -> TreeDecomposition {
        let mut parent = vec![None; self.node_count()];
        for (t, ch) in self.children.iter().enumerate() {
            for &c in ch {
                parent[c] = Some(t);
            }
        }
        TreeDecomposition { bags: self.bags.clone(), parent, root: self.root }
    }
}

struct NiceBuilder {
    bags: Vec<BTreeSet<Element>>,
    kinds: Vec<NiceKind>,
    children: Vec<Vec<usize>>,
}

impl NiceBuilder {
    fn push(&mut self, bag: BTreeSet<Element>, kind: NiceKind, children: Vec<usize>) -> usize {
        self.bags.push(bag);
        self.kinds.push(kind);
        self.children.push(children);
        self.bags.len() - 1
    }

    /// A leaf followed by introduces building up `target` (ascending).
    fn chain_up(&mut self, target: &BTreeSet<Element>) -> usize {
        let mut node = self.push(BTreeSet::new(), NiceKind::Leaf, vec![]);
        let mut bag = BTreeSet::new();
        for &e in target {
            bag.insert(e);
            node = self.push(bag.clone(), NiceKind::Introduce(e), vec![node]);
        }
        node
    }

    /// Forgets (descending) then introduces (ascending) to morph the bag on
    /// top of `node` from `from` into `to`.
    fn morph(&mut self, mut node: usize, from: &BTreeSet<Element>, to: &BTreeSet<Element>) -> usize {
        let mut bag = from.clone();
        for &e in from.difference(to).copied().collect::<Vec<_>>().iter().rev() {
            bag.remove(&e);
            node = self.push(bag.clone(), NiceKind::Forget(e), vec![node]);
        }
        for &e in to.difference(from).copied().collect::<Vec<_>>().iter() {
            bag.insert(e);
            node = self.push(bag.clone(), NiceKind::Introduce(e), vec![node]);
        }
        node
    }
}

/// Converts a decomposition into nice form. The width is unchanged.
pub fn make_nice(td: &TreeDecomposition) -> NiceDecomposition {
    let children = td.children();
    let mut b = NiceBuilder { bags: Vec::new(), kinds: Vec::new(), children: Vec::new() };

    fn build(t: usize, td: &TreeDecomposition, children: &[Vec<usize>], b: &mut NiceBuilder) -> usize {
        let bag = td.bag(t).clone();
        let kids = &children[t];
        if kids.is_empty() {
            return b.chain_up(&bag);
        }
        let mut tops: Vec<usize> = Vec::with_capacity(kids.len());
        for &c in kids {
            let sub = build(c, td, children, b);
            tops.push(b.morph(sub, td.bag(c), &bag));
        }
        let mut acc = tops[0];
        for &t2 in &tops[1..] {
            acc = b.push(bag.clone(), NiceKind::Join, vec![acc, t2]);
        }
        acc
    }

    let top = build(td.root(), td, &children, &mut b);
    let root = b.morph(top, td.bag(td.root()), &BTreeSet::new());
    NiceDecomposition { bags: b.bags, kinds: b.kinds, children: b.children, root }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the text format `node <id> : <e1> <e2> …` / `edge <id> <id>`.
/// Node ids may be arbitrary; they are mapped to creation order.
pub fn parse_td(text: &str) -> Result<TreeDecomposition, TdError> {
    let mut ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut bags: Vec<BTreeSet<Element>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| TdError::Format(format!("line {}: {msg}", lineno + 1));
        let mut parts = line.split_whitespace();
        match parts.next().unwrap() {
            "node" => {
                let id = parts.next().ok_or_else(|| err("node needs an id".into()))?;
                if parts.next() != Some(":") {
                    return Err(err("expected ':' after the node id".into()));
                }
                let bag: Result<BTreeSet<Element>, TdError> = parts
                    .map(|p| p.parse::<usize>().map_err(|_| err(format!("bad element {p}"))))
                    .collect();
                if ids.contains_key(id) {
                    return Err(err(format!("duplicate node id {id}")));
                }
                ids.insert(id.to_string(), bags.len());
                bags.push(bag?);
            }
            "edge" => {
                let a = parts.next().ok_or_else(|| err("edge needs two ids".into()))?;
                let b = parts.next().ok_or_else(|| err("edge needs two ids".into()))?;
                let &ia = ids.get(a).ok_or_else(|| err(format!("unknown node {a}")))?;
                let &ib = ids.get(b).ok_or_else(|| err(format!("unknown node {b}")))?;
                edges.push((ia, ib));
            }
            other => return Err(err(format!("unknown directive {other}"))),
        }
    }
    TreeDecomposition::new(bags, &edges)
}

pub fn print_td(td: &TreeDecomposition) -> String {
    let mut out = String::new();
    for (t, bag) in td.bags.iter().enumerate() {
        let elems: Vec<String> = bag.iter().map(|e| e.to_string()).collect();
        let _ = writeln!(out, "node {t} : {}", elems.join(" "));
    }
    for (t, p) in td.parent.iter().enumerate() {
        if let Some(p) = *p {
            let _ = writeln!(out, "edge {p} {t}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;

    #[test]
    fn trivial_decomposition_is_valid_with_width_n_minus_1() {
        let k4 = Graph::complete(4).unwrap();
        let td = TreeDecomposition::trivial(4);
        assert_eq!(validate_td(k4.as_structure(), &td).unwrap(), 3);
    }

    #[test]
    fn path_decomposition_of_p3() {
        let p3 = Graph::path(3).unwrap();
        let td = TreeDecomposition::new(
            vec![[0, 1].into_iter().collect(), [1, 2].into_iter().collect()],
            &[(0, 1)],
        )
        .unwrap();
        assert_eq!(validate_td(p3.as_structure(), &td).unwrap(), 1);
    }

    #[test]
    fn disconnected_occurrence_detected() {
        // element 1 sits in both end bags of a 3-node path but not the middle
        let p3 = Graph::path(3).unwrap();
        let td = TreeDecomposition::new(
            vec![
                [0, 1].into_iter().collect(),
                [0, 2].into_iter().collect(),
                [1, 2].into_iter().collect(),
            ],
            &[(0, 1), (1, 2)],
        )
        .unwrap();
        assert_eq!(
            validate_td(p3.as_structure(), &td).unwrap_err(),
            TdError::DisconnectedOccurrence(1)
        );
    }

    #[test]
    fn uncovered_tuple_detected() {
        let k3 = Graph::complete(3).unwrap();
        let td = TreeDecomposition::new(
            vec![[0, 1].into_iter().collect(), [1, 2].into_iter().collect()],
            &[(0, 1)],
        )
        .unwrap();
        assert!(matches!(
            validate_td(k3.as_structure(), &td).unwrap_err(),
            TdError::TupleNotCovered { .. }
        ));
    }

    #[test]
    fn uncovered_element_detected() {
        let g = Graph::edgeless(3).unwrap();
        let td = TreeDecomposition::new(vec![[0, 1].into_iter().collect()], &[]).unwrap();
        assert_eq!(
            validate_td(g.as_structure(), &td).unwrap_err(),
            TdError::ElementNotCovered(2)
        );
    }

    #[test]
    fn ternary_tuple_coverage() {
        let vocab = Vocabulary::new([("R", 3)]).unwrap();
        let s = Structure::new(vocab, 3, [("R".to_string(), vec![0, 1, 2])]).unwrap();
        let td = TreeDecomposition::trivial(3);
        assert_eq!(validate_td(&s, &td).unwrap(), 2);
        let bad = TreeDecomposition::new(
            vec![[0, 1].into_iter().collect(), [1, 2].into_iter().collect()],
            &[(0, 1)],
        )
        .unwrap();
        assert!(validate_td(&s, &bad).is_err());
    }

    #[test]
    fn heuristic_width_on_tree_is_one() {
        // a star plus a pendant path
        let mut g = Graph::edgeless(6).unwrap();
        for v in 1..4 {
            g.add_edge(0, v);
        }
        g.add_edge(3, 4);
        g.add_edge(4, 5);
        let td = heuristic_td(&g);
        assert_eq!(validate_td(g.as_structure(), &td).unwrap(), 1);
    }

    #[test]
    fn heuristic_on_c4_gives_two() {
        let c4 = Graph::cycle(4).unwrap();
        let td = heuristic_td(&c4);
        assert_eq!(validate_td(c4.as_structure(), &td).unwrap(), 2);
    }

    #[test]
    fn exact_widths_of_named_graphs() {
        assert_eq!(exact_td(&Graph::complete(4).unwrap()).unwrap().width(), 3);
        assert_eq!(exact_td(&Graph::path(5).unwrap()).unwrap().width(), 1);
        assert_eq!(exact_td(&Graph::cycle(5).unwrap()).unwrap().width(), 2);
        assert_eq!(exact_td(&Graph::grid(3, 3).unwrap()).unwrap().width(), 3);
    }

    #[test]
    fn exact_caps_instance_size() {
        let g = Graph::edgeless(13).unwrap();
        assert!(matches!(exact_td(&g).unwrap_err(), TdError::TooLarge { .. }));
    }

    #[test]
    fn exact_outputs_validate() {
        for g in [
            Graph::complete(5).unwrap(),
            Graph::cycle(6).unwrap(),
            Graph::grid(2, 4).unwrap(),
            Graph::edgeless(4).unwrap(),
        ] {
            let td = exact_td(&g).unwrap();
            assert_eq!(validate_td(g.as_structure(), &td).unwrap(), td.width());
        }
    }

    #[test]
    fn make_nice_preserves_width_and_validates() {
        for g in [
            Graph::complete(4).unwrap(),
            Graph::cycle(5).unwrap(),
            Graph::grid(2, 3).unwrap(),
            Graph::path(6).unwrap(),
        ] {
            let td = heuristic_td(&g);
            let nice = make_nice(&td);
            assert_eq!(nice.width(), td.width());
            let back = nice.to_tree_decomposition();
            assert_eq!(validate_td(g.as_structure(), &back).unwrap(), td.width());
            // bag-size deltas of at most one, kinds consistent
            for (t, kind) in nice.kinds.iter().enumerate() {
                match kind {
                    NiceKind::Leaf => {
                        assert!(nice.bags[t].is_empty());
                        assert!(nice.children[t].is_empty());
                    }
                    NiceKind::Introduce(e) => {
                        let c = nice.children[t][0];
                        assert!(!nice.bags[c].contains(e));
                        let mut expect = nice.bags[c].clone();
                        expect.insert(*e);
                        assert_eq!(nice.bags[t], expect);
                    }
                    NiceKind::Forget(e) => {
                        let c = nice.children[t][0];
                        assert!(nice.bags[c].contains(e));
                        let mut expect = nice.bags[c].clone();
                        expect.remove(e);
                        assert_eq!(nice.bags[t], expect);
                    }
                    NiceKind::Join => {
                        assert_eq!(nice.children[t].len(), 2);
                        for &c in &nice.children[t] {
                            assert_eq!(nice.bags[c], nice.bags[t]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn single_bag_becomes_introduce_chain() {
        let td = TreeDecomposition::trivial(3);
        let nice = make_nice(&td);
        let introduces = nice
            .kinds
            .iter()
            .filter(|k| matches!(k, NiceKind::Introduce(_)))
            .count();
        assert_eq!(introduces, 3);
        assert!(nice.kinds.iter().any(|k| matches!(k, NiceKind::Leaf)));
        assert_eq!(nice.width(), 2);
    }

    #[test]
    fn td_text_roundtrip() {
        let td = TreeDecomposition::new(
            vec![
                [0, 1].into_iter().collect(),
                [1, 2].into_iter().collect(),
                [2, 3].into_iter().collect(),
            ],
            &[(0, 1), (1, 2)],
        )
        .unwrap();
        let parsed = parse_td(&print_td(&td)).unwrap();
        assert_eq!(parsed, td);
    }

    #[test]
    fn heuristic_not_below_exact_on_small_randoms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let n = rng.gen_range(2..=8);
            let mut g = Graph::edgeless(n).unwrap();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen_bool(0.4) {
                        g.add_edge(i, j);
                    }
                }
            }
            let h = heuristic_td(&g);
            let e = exact_td(&g).unwrap();
            assert!(h.width() >= e.width());
            assert!(validate_td(g.as_structure(), &h).is_ok());
            assert!(validate_td(g.as_structure(), &e).is_ok());
        }
    }
}
