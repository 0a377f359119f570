use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{topo_sort_by, CausalDag, Cpdag};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Condition on every variable generated before.
    Vanilla,
    /// Condition on DAG parents only.
    Dag,
    /// Parents for fully directed nodes, prefix for the rest.
    Cpdag,
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Strategy::Vanilla),
            "dag" => Ok(Strategy::Dag),
            "cpdag" => Ok(Strategy::Cpdag),
            other => Err(Error::InvalidInput(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum PlanGraph<'a> {
    None,
    Dag(&'a CausalDag),
    Cpdag(&'a Cpdag),
}

/// Generation order plus the conditioning set of every variable.
///
/// `conditioning[i]` belongs to `order[i]` and lists variables in the order
/// they are generated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationPlan {
    pub strategy: Strategy,
    pub order: Vec<String>,
    pub conditioning: Vec<Vec<String>>,
}

impl GenerationPlan {
    /// Prefix conditioning along `order`.
    pub fn vanilla<S: AsRef<str>>(order: &[S]) -> Self {
        let order: Vec<String> = order.iter().map(|s| s.as_ref().to_string()).collect();
        let conditioning = (0..order.len()).map(|i| order[..i].to_vec()).collect();
        Self {
            strategy: Strategy::Vanilla,
            order,
            conditioning,
        }
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.order.iter().position(|n| n == name)
    }

    pub fn conditioning_of(&self, name: &str) -> Option<&[String]> {
        self.position(name).map(|i| self.conditioning[i].as_slice())
    }

    /// Every conditioning variable must be generated strictly before its
    /// target, and the order must not repeat nodes.
    pub fn validate(&self) -> Result<()> {
        if self.order.len() != self.conditioning.len() {
            return Err(Error::InvalidPlan("order/conditioning length mismatch".into()));
        }
        let pos: HashMap<&str, usize> = self
            .order
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        if pos.len() != self.order.len() {
            return Err(Error::InvalidPlan("order repeats a variable".into()));
        }
        for (i, (target, cond)) in self.order.iter().zip(&self.conditioning).enumerate() {
            for c in cond {
                match pos.get(c.as_str()) {
                    Some(&j) if j < i => {}
                    Some(_) => {
                        return Err(Error::InvalidPlan(format!(
                            "{c:?} conditions {target:?} but is not generated before it"
                        )))
                    }
                    None => return Err(Error::InvalidPlan(format!("unknown variable {c:?}"))),
                }
            }
        }
        Ok(())
    }

    /// Conditioning sets keyed by variable, as sets (for plan comparisons).
    pub fn conditioning_sets(&self) -> HashMap<String, BTreeSet<String>> {
        self.order
            .iter()
            .zip(&self.conditioning)
            .map(|(t, c)| (t.clone(), c.iter().cloned().collect()))
            .collect()
    }
}

/// Build the plan for `strategy` over `columns`.
///
/// Vanilla keeps `columns` as the order. Dag uses the topological order of
/// the graph. Cpdag puts every node touched by a directed edge first
/// (topologically sorted on the directed edges), then the rest; fully
/// directed nodes condition on their directed parents and everyone else on
/// the whole prefix. Ties always go to the earlier entry of `columns`.
pub fn build_plan<S: AsRef<str>>(
    strategy: Strategy,
    columns: &[S],
    graph: PlanGraph<'_>,
) -> Result<GenerationPlan> {
    let columns: Vec<String> = columns.iter().map(|s| s.as_ref().to_string()).collect();
    let plan = match (strategy, graph) {
        (Strategy::Vanilla, _) => GenerationPlan::vanilla(&columns),
        (Strategy::Dag, PlanGraph::Dag(g)) => dag_plan(&columns, g)?,
        (Strategy::Dag, PlanGraph::Cpdag(g)) => {
            if !g.undirected().is_empty() {
                return Err(Error::InvalidPlan(
                    "dag strategy needs a fully oriented graph".into(),
                ));
            }
            dag_plan(&columns, &g.directed_subgraph())?
        }
        (Strategy::Cpdag, PlanGraph::Cpdag(g)) => cpdag_plan(&columns, g)?,
        (Strategy::Cpdag, PlanGraph::Dag(g)) => cpdag_plan(&columns, &g.to_cpdag())?,
        (s, PlanGraph::None) => {
            return Err(Error::InvalidPlan(format!("{s:?} strategy requires a graph")))
        }
    };
    plan.validate()?;
    Ok(plan)
}

/// `col_of[graph index] = position in columns`.
fn column_positions(columns: &[String], graph_nodes: &[String]) -> Result<Vec<usize>> {
    let mut a: Vec<&String> = columns.iter().collect();
    let mut b: Vec<&String> = graph_nodes.iter().collect();
    a.sort();
    b.sort();
    if a != b || a.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidPlan(format!(
            "graph nodes {graph_nodes:?} do not match columns {columns:?}"
        )));
    }
    Ok(graph_nodes
        .iter()
        .map(|n| columns.iter().position(|c| c == n).expect("checked above"))
        .collect())
}

fn sorted_by_position(mut items: Vec<usize>, pos: &[usize]) -> Vec<usize> {
    items.sort_by_key(|&i| pos[i]);
    items
}

fn dag_plan(columns: &[String], g: &CausalDag) -> Result<GenerationPlan> {
    let col_of = column_positions(columns, g.nodes())?;
    let order = topo_sort_by(g.len(), g.edges(), &col_of)?;
    let mut sigma = vec![0; g.len()];
    for (i, &v) in order.iter().enumerate() {
        sigma[v] = i;
    }
    let conditioning = order
        .iter()
        .map(|&v| g.names_of(&sorted_by_position(g.parents(v), &sigma)))
        .collect();
    Ok(GenerationPlan {
        strategy: Strategy::Dag,
        order: g.names_of(&order),
        conditioning,
    })
}

fn cpdag_plan(columns: &[String], g: &Cpdag) -> Result<GenerationPlan> {
    let col_of = column_positions(columns, g.nodes())?;
    let n = g.len();
    let in_block: Vec<bool> = (0..n)
        .map(|v| g.directed().iter().any(|&(a, b)| a == v || b == v))
        .collect();
    let full_order = topo_sort_by(n, g.directed(), &col_of)?;
    let mut order: Vec<usize> = full_order.into_iter().filter(|&v| in_block[v]).collect();
    let mut rest: Vec<usize> = (0..n).filter(|&v| !in_block[v]).collect();
    rest.sort_by_key(|&v| col_of[v]);
    order.extend(rest);

    let mut sigma = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        sigma[v] = i;
    }
    let names = |idx: &[usize]| -> Vec<String> {
        idx.iter().map(|&i| g.nodes()[i].clone()).collect()
    };
    let conditioning = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if g.is_fully_directed(v) {
                names(&sorted_by_position(g.directed_parents(v), &sigma))
            } else {
                names(&order[..i])
            }
        })
        .collect();
    Ok(GenerationPlan {
        strategy: Strategy::Cpdag,
        order: names(&order),
        conditioning,
    })
}
