use std::collections::BTreeSet;

use super::{index_nodes, is_acyclic, lookup, topo_sort_by, Cpdag, GraphFile};
use crate::error::{Error, Result};

/// Directed acyclic graph over named nodes. Node order is the column order
/// and breaks ties in every ordering computed from the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalDag {
    nodes: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl CausalDag {
    pub fn new<S: AsRef<str>>(nodes: Vec<String>, edges: &[(S, S)]) -> Result<Self> {
        let idx = edges
            .iter()
            .map(|(u, v)| Ok((lookup(&nodes, u.as_ref())?, lookup(&nodes, v.as_ref())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(nodes, &idx)
    }

    pub fn from_indices(nodes: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        index_nodes(&nodes)?;
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u >= nodes.len() || v >= nodes.len() {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on {:?}", nodes[u])));
            }
            if !set.insert((u, v)) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate edge {:?} -> {:?}",
                    nodes[u], nodes[v]
                )));
            }
        }
        if !is_acyclic(nodes.len(), &set) {
            return Err(Error::Cycle);
        }
        Ok(Self { nodes, edges: set })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        lookup(&self.nodes, name)
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_names(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(u, v)| (self.nodes[u].clone(), self.nodes[v].clone()))
            .collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_edge(u, v) || self.has_edge(v, u)
    }

    /// Parents in column order.
    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    pub fn children(&self, u: usize) -> Vec<usize> {
        self.edges.range((u, 0)..(u + 1, 0)).map(|e| e.1).collect()
    }

    /// Parents before children; column order among simultaneously
    /// available nodes.
    pub fn topological_order(&self) -> Vec<usize> {
        let priority: Vec<usize> = (0..self.len()).collect();
        topo_sort_by(self.len(), &self.edges, &priority)
            .expect("CausalDag is acyclic by construction")
    }

    pub fn reverse_topological_order(&self) -> Vec<usize> {
        let mut order = self.topological_order();
        order.reverse();
        order
    }

    pub fn names_of(&self, order: &[usize]) -> Vec<String> {
        order.iter().map(|&i| self.nodes[i].clone()).collect()
    }

    /// Triples `(a, c, b)` with `a -> c <- b`, `a < b`, and `a`, `b`
    /// non-adjacent.
    pub fn v_structures(&self) -> BTreeSet<(usize, usize, usize)> {
        let mut out = BTreeSet::new();
        for c in 0..self.len() {
            let parents = self.parents(c);
            for (i, &a) in parents.iter().enumerate() {
                for &b in &parents[i + 1..] {
                    if !self.adjacent(a, b) {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    /// Orient exactly the v-structure edges; everything else stays
    /// undirected. No orientation propagation is applied.
    pub fn minimal_cpdag(&self) -> Cpdag {
        let mut directed = BTreeSet::new();
        for (a, c, b) in self.v_structures() {
            directed.insert((a, c));
            directed.insert((b, c));
        }
        let undirected = self
            .edges
            .iter()
            .filter(|e| !directed.contains(e))
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .collect();
        Cpdag::from_parts(self.nodes.clone(), directed, undirected)
            .expect("sub-orientation of a DAG is a valid CPDAG")
    }

    /// Every edge directed.
    pub fn to_cpdag(&self) -> Cpdag {
        Cpdag::from_parts(self.nodes.clone(), self.edges.clone(), BTreeSet::new())
            .expect("a DAG is a valid CPDAG")
    }

    /// The graph after `do(node = ·)`: all edges into `node` removed.
    pub fn mutilate(&self, node: usize) -> CausalDag {
        CausalDag {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().copied().filter(|e| e.1 != node).collect(),
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            directed: self.edge_names().into_iter().map(|(u, v)| [u, v]).collect(),
            undirected: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn collider() -> CausalDag {
        CausalDag::new(
            names(&["X0", "X1", "X2", "X3"]),
            &[("X3", "X2"), ("X2", "X1"), ("X0", "X1")],
        )
        .unwrap()
    }

    /// All permutations of `0..n`.
    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Brute force: among edge-respecting permutations, the one that is
    /// lexicographically smallest when each step picks the lowest column.
    fn brute_force_topo(g: &CausalDag) -> Vec<usize> {
        let valid: Vec<Vec<usize>> = permutations(g.len())
            .into_iter()
            .filter(|p| {
                let pos = |x| p.iter().position(|&y| y == x).unwrap();
                g.edges().iter().all(|&(u, v)| pos(u) < pos(v))
            })
            .collect();
        valid.into_iter().min().unwrap()
    }

    #[test]
    fn topological_order_matches_brute_force() {
        let g = collider();
        let expected = brute_force_topo(&g);
        assert_eq!(g.topological_order(), expected);
        assert_eq!(g.names_of(&expected), ["X0", "X3", "X2", "X1"]);
        assert_eq!(
            g.names_of(&g.reverse_topological_order()),
            ["X1", "X2", "X3", "X0"]
        );
    }

    #[test]
    fn trivial_orders() {
        let empty = CausalDag::new::<&str>(names(&["A", "B", "C"]), &[]).unwrap();
        assert_eq!(empty.topological_order(), [0, 1, 2]);
        assert_eq!(empty.reverse_topological_order(), [2, 1, 0]);
        let chain =
            CausalDag::new(names(&["A", "B", "C"]), &[("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(chain.topological_order(), [0, 1, 2]);
        assert_eq!(chain.reverse_topological_order(), [2, 1, 0]);
        let back = CausalDag::new(names(&["C", "B", "A"]), &[("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(back.names_of(&back.topological_order()), ["A", "B", "C"]);
    }

    #[test]
    fn rejects_cycles_loops_duplicates() {
        let n = names(&["A", "B"]);
        assert!(matches!(
            CausalDag::new(n.clone(), &[("A", "B"), ("B", "A")]),
            Err(Error::Cycle)
        ));
        assert!(CausalDag::new(n.clone(), &[("A", "A")]).is_err());
        assert!(CausalDag::new(n.clone(), &[("A", "B"), ("A", "B")]).is_err());
        assert!(matches!(
            CausalDag::new(n, &[("A", "Z")]),
            Err(Error::UnknownNode(_))
        ));
    }

    fn brute_force_v_structures(g: &CausalDag) -> BTreeSet<(usize, usize, usize)> {
        let n = g.len();
        let mut out = BTreeSet::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in 0..n {
                    if c != a
                        && c != b
                        && g.has_edge(a, c)
                        && g.has_edge(b, c)
                        && !g.has_edge(a, b)
                        && !g.has_edge(b, a)
                    {
                        out.insert((a, c, b));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn v_structures_match_brute_force() {
        let g = collider();
        let vs = g.v_structures();
        assert_eq!(vs, brute_force_v_structures(&g));
        assert_eq!(vs, BTreeSet::from([(0, 1, 2)]));

        let chain =
            CausalDag::new(names(&["A", "B", "C"]), &[("A", "B"), ("B", "C")]).unwrap();
        assert!(chain.v_structures().is_empty());
        let shielded = CausalDag::new(
            names(&["A", "B", "C"]),
            &[("A", "C"), ("B", "C"), ("A", "B")],
        )
        .unwrap();
        assert!(shielded.v_structures().is_empty());
    }

    #[test]
    fn minimal_cpdag_of_collider() {
        let m = collider().minimal_cpdag();
        assert_eq!(m.directed_names(), [("X0".into(), "X1".into()), ("X2".into(), "X1".into())]);
        assert_eq!(m.undirected_names(), [("X2".into(), "X3".into())]);

        let chain =
            CausalDag::new(names(&["A", "B", "C"]), &[("A", "B"), ("B", "C")]).unwrap();
        let m = chain.minimal_cpdag();
        assert!(m.directed().is_empty());
        assert_eq!(m.undirected().len(), 2);

        let pure = CausalDag::new(names(&["X", "Y", "Z"]), &[("X", "Z"), ("Y", "Z")]).unwrap();
        let m = pure.minimal_cpdag();
        assert_eq!(m.directed().len(), 2);
        assert!(m.undirected().is_empty());
    }

    #[test]
    fn mutilation_drops_in_edges() {
        let g = collider();
        let m = g.mutilate(g.index_of("X1").unwrap());
        assert_eq!(m.edge_names(), [("X3".to_string(), "X2".to_string())]);
        let root = g.mutilate(0);
        assert_eq!(root, g);
    }

    #[test]
    fn file_round_trip() {
        let g = collider();
        assert_eq!(g.to_file().into_dag().unwrap(), g);
    }
}
