use std::collections::BTreeSet;

use super::{index_nodes, is_acyclic, lookup, CausalDag, GraphFile};
use crate::error::{Error, Result};

/// Partially directed graph: directed edges `(parent, child)` and undirected
/// edges stored as `(min, max)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cpdag {
    nodes: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    undirected: BTreeSet<(usize, usize)>,
}

impl Cpdag {
    pub fn from_names<S: AsRef<str>>(
        nodes: Vec<String>,
        directed: &[[S; 2]],
        undirected: &[[S; 2]],
    ) -> Result<Self> {
        let pair = |[u, v]: &[S; 2]| -> Result<(usize, usize)> {
            Ok((lookup(&nodes, u.as_ref())?, lookup(&nodes, v.as_ref())?))
        };
        let d: Vec<_> = directed.iter().map(pair).collect::<Result<_>>()?;
        let u: Vec<_> = undirected.iter().map(pair).collect::<Result<_>>()?;
        Self::from_index_edges(nodes, &d, &u)
    }

    pub fn from_index_edges(
        nodes: Vec<String>,
        directed: &[(usize, usize)],
        undirected: &[(usize, usize)],
    ) -> Result<Self> {
        let n = nodes.len();
        let check = |&(u, v): &(usize, usize)| -> Result<()> {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on {:?}", nodes[u])));
            }
            Ok(())
        };
        let mut d = BTreeSet::new();
        for e in directed {
            check(e)?;
            if !d.insert(*e) {
                return Err(Error::InvalidGraph(format!("duplicate directed edge {e:?}")));
            }
        }
        let mut u = BTreeSet::new();
        for e in undirected {
            check(e)?;
            if !u.insert((e.0.min(e.1), e.0.max(e.1))) {
                return Err(Error::InvalidGraph(format!("duplicate undirected edge {e:?}")));
            }
        }
        Self::from_parts(nodes, d, u)
    }

    pub(crate) fn from_parts(
        nodes: Vec<String>,
        directed: BTreeSet<(usize, usize)>,
        undirected: BTreeSet<(usize, usize)>,
    ) -> Result<Self> {
        index_nodes(&nodes)?;
        for &(a, b) in &directed {
            if directed.contains(&(b, a)) || undirected.contains(&(a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!(
                    "{:?} and {:?} joined by more than one edge",
                    nodes[a], nodes[b]
                )));
            }
        }
        if !is_acyclic(nodes.len(), &directed) {
            return Err(Error::Cycle);
        }
        Ok(Self {
            nodes,
            directed,
            undirected,
        })
    }

    pub fn empty(nodes: Vec<String>) -> Result<Self> {
        Self::from_parts(nodes, BTreeSet::new(), BTreeSet::new())
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

    pub fn directed(&self) -> &BTreeSet<(usize, usize)> {
        &self.directed
    }

    pub fn undirected(&self) -> &BTreeSet<(usize, usize)> {
        &self.undirected
    }

    pub fn directed_names(&self) -> Vec<(String, String)> {
        self.directed
            .iter()
            .map(|&(u, v)| (self.nodes[u].clone(), self.nodes[v].clone()))
            .collect()
    }

    pub fn undirected_names(&self) -> Vec<(String, String)> {
        self.undirected
            .iter()
            .map(|&(u, v)| (self.nodes[u].clone(), self.nodes[v].clone()))
            .collect()
    }

    pub fn has_directed(&self, u: usize, v: usize) -> bool {
        self.directed.contains(&(u, v))
    }

    pub fn has_undirected(&self, u: usize, v: usize) -> bool {
        self.undirected.contains(&(u.min(v), u.max(v)))
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.has_directed(u, v) || self.has_directed(v, u) || self.has_undirected(u, v)
    }

    pub fn n_edges(&self) -> usize {
        self.directed.len() + self.undirected.len()
    }

    /// Unordered adjacencies as `(min, max)`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.directed
            .iter()
            .map(|&(u, v)| (u.min(v), u.max(v)))
            .chain(self.undirected.iter().copied())
            .collect()
    }

    pub fn directed_parents(&self, v: usize) -> Vec<usize> {
        self.directed.iter().filter(|e| e.1 == v).map(|e| e.0).collect()
    }

    pub fn undirected_neighbors(&self, v: usize) -> Vec<usize> {
        self.undirected
            .iter()
            .filter_map(|&(a, b)| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        (0..self.len()).filter(|&u| u != v && self.adjacent(u, v)).collect()
    }

    /// At least one directed edge touches `v` (either direction) and no
    /// undirected edge does.
    pub fn is_fully_directed(&self, v: usize) -> bool {
        let touches_directed = self.directed.iter().any(|&(a, b)| a == v || b == v);
        let touches_undirected = self.undirected.iter().any(|&(a, b)| a == v || b == v);
        touches_directed && !touches_undirected
    }

    pub fn is_fully_directed_named(&self, name: &str) -> Result<bool> {
        Ok(self.is_fully_directed(self.index_of(name)?))
    }

    /// Turn the undirected edge `u -- v` into `u -> v`. Returns false if there
    /// was no such undirected edge.
    pub(crate) fn orient(&mut self, u: usize, v: usize) -> bool {
        if self.undirected.remove(&(u.min(v), u.max(v))) {
            self.directed.insert((u, v));
            true
        } else {
            false
        }
    }

    pub(crate) fn directed_is_acyclic(&self) -> bool {
        is_acyclic(self.len(), &self.directed)
    }

    /// The DAG formed by the directed edges (undirected edges dropped).
    pub fn directed_subgraph(&self) -> CausalDag {
        let edges: Vec<_> = self.directed.iter().copied().collect();
        CausalDag::from_indices(self.nodes.clone(), &edges)
            .expect("directed part is acyclic by construction")
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            directed: self.directed_names().into_iter().map(|(u, v)| [u, v]).collect(),
            undirected: self
                .undirected_names()
                .into_iter()
                .map(|(u, v)| [u, v])
                .collect(),
        }
    }

    /// Same graph with nodes renumbered to follow `order` (a permutation of
    /// the node names).
    pub fn relabel<S: AsRef<str>>(&self, order: &[S]) -> Result<Cpdag> {
        let file = self.to_file();
        let nodes: Vec<String> = order.iter().map(|s| s.as_ref().to_string()).collect();
        let mut a = nodes.clone();
        let mut b = self.nodes.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::NotAPermutation(format!("{nodes:?}")));
        }
        Cpdag::from_names(nodes, &file.directed, &file.undirected)
    }
}
