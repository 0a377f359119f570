use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{CausalDag, Cpdag};

/// Recovery scores; `None` where the ratio has a zero denominator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphQuality {
    pub skeleton_recall: Option<f64>,
    pub direction_recall: Option<f64>,
    pub oriented_fraction: Option<f64>,
    pub direction_precision: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Score `estimated` against `truth`, optionally after removing the edges
/// into `mutilate` from the truth.
pub fn graph_quality(estimated: &Cpdag, truth: &CausalDag, mutilate: Option<&str>) -> Result<GraphQuality> {
    let mut a: Vec<&String> = estimated.nodes().iter().collect();
    let mut b: Vec<&String> = truth.nodes().iter().collect();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::InvalidGraph("estimated and true graphs have different nodes".into()));
    }
    let truth = match mutilate {
        Some(t) => truth.mutilate(truth.index_of(t)?),
        None => truth.clone(),
    };
    // estimated index -> truth index
    let map: Vec<usize> = estimated
        .nodes()
        .iter()
        .map(|n| truth.index_of(n))
        .collect::<Result<_>>()?;
    let true_edges = truth.edges();
    let skeleton: std::collections::BTreeSet<(usize, usize)> = estimated
        .skeleton()
        .iter()
        .map(|&(a, b)| (map[a].min(map[b]), map[a].max(map[b])))
        .collect();
    let skeleton_hits = true_edges
        .iter()
        .filter(|&&(u, v)| skeleton.contains(&(u.min(v), u.max(v))))
        .count();
    let correct = estimated
        .directed()
        .iter()
        .filter(|&&(p, c)| true_edges.contains(&(map[p], map[c])))
        .count();
    let n_directed = estimated.directed().len();
    Ok(GraphQuality {
        skeleton_recall: ratio(skeleton_hits, true_edges.len()),
        direction_recall: ratio(correct, true_edges.len()),
        oriented_fraction: ratio(n_directed, estimated.n_edges()),
        direction_precision: ratio(correct, n_directed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::builtin_collider;

    #[test]
    fn examples() {
        let dag = builtin_collider(1e-5).unwrap().dag().clone();
        let full = graph_quality(&dag.to_cpdag(), &dag, None).unwrap();
        assert_eq!(
            full,
            GraphQuality {
                skeleton_recall: Some(1.0),
                direction_recall: Some(1.0),
                oriented_fraction: Some(1.0),
                direction_precision: Some(1.0),
            }
        );
        let empty = Cpdag::empty(dag.nodes().to_vec()).unwrap();
        let q = graph_quality(&empty, &dag, None).unwrap();
        assert_eq!(q.skeleton_recall, Some(0.0));
        assert_eq!(q.direction_recall, Some(0.0));
        assert_eq!(q.oriented_fraction, None);
        assert_eq!(q.direction_precision, None);
        let q = graph_quality(&dag.minimal_cpdag(), &dag, None).unwrap();
        assert_eq!(q.skeleton_recall, Some(1.0));
        assert_eq!(q.direction_recall, Some(2.0 / 3.0));
        assert_eq!(q.oriented_fraction, Some(2.0 / 3.0));
        assert_eq!(q.direction_precision, Some(1.0));
    }

    #[test]
    fn mutilated_reference() {
        let dag = builtin_collider(1e-5).unwrap().dag().clone();
        // without X3 -> X2 the truth has two edges, both recovered and oriented
        let q = graph_quality(&dag.minimal_cpdag(), &dag, Some("X2")).unwrap();
        assert_eq!(q.skeleton_recall, Some(1.0));
        assert_eq!(q.direction_recall, Some(1.0));
        assert_eq!(q.direction_precision, Some(1.0));
    }

    #[test]
    fn relabelled_estimate() {
        let dag = builtin_collider(1e-5).unwrap().dag().clone();
        let est = dag.to_cpdag().relabel(&["X3", "X1", "X0", "X2"]).unwrap();
        assert_eq!(graph_quality(&est, &dag, None).unwrap().direction_precision, Some(1.0));
        let other = Cpdag::empty(vec!["A".into()]).unwrap();
        assert!(graph_quality(&other, &dag, None).is_err());
    }
}
