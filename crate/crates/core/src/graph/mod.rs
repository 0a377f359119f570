//! Causal graphs and generation plans.

mod cpdag;
mod dag;
mod plan;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cpdag::Cpdag;
pub use dag::CausalDag;
pub use plan::{build_plan, GenerationPlan, PlanGraph, Strategy};

/// On-disk graph: a DAG is a file with an empty `undirected` list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<[String; 2]>,
    #[serde(default)]
    pub undirected: Vec<[String; 2]>,
}

impl GraphFile {
    pub fn load(path: &Path) -> Result<Self> {
        crate::io::read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn into_cpdag(self) -> Result<Cpdag> {
        Cpdag::from_names(self.nodes, &self.directed, &self.undirected)
    }

    pub fn into_dag(self) -> Result<CausalDag> {
        if !self.undirected.is_empty() {
            return Err(Error::InvalidGraph(
                "a DAG file must not contain undirected edges".into(),
            ));
        }
        let edges: Vec<(String, String)> = self
            .directed
            .into_iter()
            .map(|[u, v]| (u, v))
            .collect();
        CausalDag::new(self.nodes, &edges)
    }
}

pub(crate) fn index_nodes(nodes: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for n in nodes {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidGraph(format!("duplicate node {n:?}")));
        }
    }
    Ok(())
}

pub(crate) fn lookup(nodes: &[String], name: &str) -> Result<usize> {
    nodes
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::UnknownNode(name.to_string()))
}

/// Kahn's algorithm; among available nodes the one with the smallest
/// `priority` goes first.
pub(crate) fn topo_sort_by(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
    priority: &[usize],
) -> Result<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for &(u, v) in edges {
        indegree[v] += 1;
        children[u].push(v);
    }
    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..n)
        .filter(|&v| indegree[v] == 0)
        .map(|v| Reverse((priority[v], v)))
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((_, u))) = ready.pop() {
        order.push(u);
        for &v in &children[u] {
            indegree[v] -= 1;
            if indegree[v] == 0 {
                ready.push(Reverse((priority[v], v)));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Cycle);
    }
    Ok(order)
}

pub(crate) fn is_acyclic(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    let identity: Vec<usize> = (0..n).collect();
    topo_sort_by(n, edges, &identity).is_ok()
}
