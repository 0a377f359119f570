use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::ci::{CiData, CiTestKind};
use super::meek::meek_closure;
use crate::error::{Error, Result};
use crate::graph::{is_acyclic, Cpdag};
use crate::par;
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PcConfig {
    pub alpha: f64,
    /// Largest conditioning set tried.
    pub max_cond: usize,
    pub test: CiTestKind,
}

impl Default for PcConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            max_cond: 3,
            test: CiTestKind::Hybrid,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcOutput {
    pub cpdag: Cpdag,
    /// Separating set of every removed edge, keyed by name pair (sorted).
    pub sepsets: BTreeMap<(String, String), Vec<String>>,
    pub n_tests: usize,
}

/// Size-`k` subsets of `items` in lexicographic order.
fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// PC-stable. Variables are processed in name order and conditioning sets
/// are drawn from adjacencies frozen at the start of each level, so the
/// result does not depend on the table's column order. A CI test that
/// cannot be computed (constant residuals, empty contingency tables)
/// counts as a failure to reject.
pub fn pc_stable(data: &Table, cfg: &PcConfig) -> Result<PcOutput> {
    let d = data.n_cols();
    if d < 2 {
        return Err(Error::InvalidInput("PC needs at least two columns".into()));
    }
    if cfg.test == CiTestKind::FisherZ && data.schema().iter().any(|c| c.is_categorical()) {
        return Err(Error::InvalidInput("Fisher-Z cannot test categorical columns".into()));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| data.schema()[a].name.cmp(&data.schema()[b].name));
    let names: Vec<String> = order.iter().map(|&c| data.schema()[c].name.clone()).collect();
    let ci = CiData::new(data).permuted(&order);

    let mut adj: Vec<BTreeSet<usize>> = (0..d).map(|i| (0..d).filter(|&j| j != i).collect()).collect();
    let mut sepsets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut n_tests = 0;
    for level in 0..=cfg.max_cond {
        let frozen = adj.clone();
        let others = |i: usize, j: usize| -> Vec<usize> { frozen[i].iter().copied().filter(|&k| k != j).collect() };
        let pairs: Vec<(usize, usize)> = (0..d)
            .flat_map(|i| frozen[i].iter().copied().filter(move |&j| j > i).map(move |j| (i, j)))
            .filter(|&(i, j)| others(i, j).len() >= level || others(j, i).len() >= level)
            .collect();
        if pairs.is_empty() {
            break;
        }
        let results = par::map_slice(&pairs, |&(i, j)| {
            let first = others(i, j);
            let second = others(j, i);
            let mut tests = 0;
            let mut candidates = subsets(&first, level);
            candidates.extend(
                subsets(&second, level)
                    .into_iter()
                    .filter(|s| !s.iter().all(|k| first.contains(k))),
            );
            for s in candidates {
                tests += 1;
                let independent = match ci.test(cfg.test, i, j, &s, cfg.alpha) {
                    Ok(r) => r.independent,
                    Err(e) => {
                        debug!("CI test {i}-{j} | {s:?} skipped: {e}");
                        true
                    }
                };
                if independent {
                    return (Some(s), tests);
                }
            }
            (None, tests)
        });
        for (&(i, j), (sep, tests)) in pairs.iter().zip(results) {
            n_tests += tests;
            if let Some(s) = sep {
                adj[i].remove(&j);
                adj[j].remove(&i);
                sepsets.insert((i, j), s);
            }
        }
    }

    // v-structures a -> c <- b for unshielded a -- c -- b with c outside sepset(a, b)
    let mut proposals: BTreeSet<(usize, usize)> = BTreeSet::new();
    for c in 0..d {
        let nb: Vec<usize> = adj[c].iter().copied().collect();
        for (x, &a) in nb.iter().enumerate() {
            for &b in &nb[x + 1..] {
                if adj[a].contains(&b) {
                    continue;
                }
                let sep = sepsets.get(&(a.min(b), a.max(b)));
                if sep.is_some_and(|s| !s.contains(&c)) {
                    proposals.insert((a, c));
                    proposals.insert((b, c));
                }
            }
        }
    }
    let mut directed = BTreeSet::new();
    for &(u, v) in &proposals {
        if proposals.contains(&(v, u)) {
            debug!("conflicting v-structures on {} -- {}", names[u], names[v]);
            continue;
        }
        directed.insert((u, v));
        if !is_acyclic(d, &directed) {
            directed.remove(&(u, v));
        }
    }
    let undirected: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| adj[i].iter().copied().filter(move |&j| j > i).map(move |j| (i, j)))
        .filter(|&(i, j)| !directed.contains(&(i, j)) && !directed.contains(&(j, i)))
        .collect();
    let directed: Vec<(usize, usize)> = directed.into_iter().collect();
    let pattern = Cpdag::from_index_edges(names.clone(), &directed, &undirected)?;
    let closed = match meek_closure(&pattern) {
        Ok(g) => g,
        Err(e) => {
            warn!("orientation propagation failed ({e}); keeping the v-structure pattern");
            pattern
        }
    };
    let original: Vec<String> = data.names().map(str::to_string).collect();
    let cpdag = closed.relabel(&original)?;
    let sepsets = sepsets
        .into_iter()
        .map(|((i, j), s)| ((names[i].clone(), names[j].clone()), s.into_iter().map(|k| names[k].clone()).collect()))
        .collect();
    Ok(PcOutput {
        cpdag,
        sepsets,
        n_tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::builtin_collider;
    use crate::table::ColumnSchema;

    #[test]
    fn lexicographic_subsets() {
        assert_eq!(subsets(&[1, 4, 7], 2), vec![vec![1, 4], vec![1, 7], vec![4, 7]]);
        assert_eq!(subsets(&[1, 4], 0), vec![Vec::<usize>::new()]);
        assert!(subsets(&[1], 2).is_empty());
    }

    fn fisher() -> PcConfig {
        PcConfig {
            test: CiTestKind::FisherZ,
            ..PcConfig::default()
        }
    }

    #[test]
    fn unit_noise_collider_recovered() {
        let scm = builtin_collider(1.0).unwrap();
        let out = pc_stable(&scm.sample(2000, 1), &fisher()).unwrap();
        assert_eq!(out.cpdag, scm.dag().minimal_cpdag());
        assert_eq!(out.sepsets[&("X0".to_string(), "X2".to_string())], Vec::<String>::new());
    }

    #[test]
    fn near_deterministic_collider_loses_edge() {
        // X2 is almost a copy of X3/2, so X1 ⟂ X2 | X3 holds to within
        // a partial correlation of about 2e-5
        let scm = builtin_collider(1e-5).unwrap();
        let out = pc_stable(&scm.sample(5000, 1), &fisher()).unwrap();
        assert_eq!(out.sepsets[&("X1".to_string(), "X2".to_string())], ["X3"]);
        assert!(out.cpdag.directed().is_empty());
    }

    #[test]
    fn independent_columns() {
        let s = vec![ColumnSchema::numeric("a"), ColumnSchema::numeric("b")];
        let a: Vec<f64> = (0..500).map(|i| (f64::from(i) * 1.7).sin()).collect();
        let b: Vec<f64> = (0..500).map(|i| (f64::from(i) * 0.37 + 1.0).cos()).collect();
        let t = Table::new(s, vec![a, b]).unwrap();
        let out = pc_stable(&t, &PcConfig::default()).unwrap();
        let p = super::super::ci::fisher_z::<&str>(&t, "a", "b", &[], 0.05).unwrap();
        if p.independent {
            assert_eq!(out.cpdag.n_edges(), 0);
        }
    }

    #[test]
    fn column_order_invariant() {
        let t = builtin_collider(1e-2).unwrap().sample(800, 4);
        let base = pc_stable(&t, &PcConfig::default()).unwrap().cpdag;
        let shuffled = t.reorder_columns(&["X2", "X0", "X3", "X1"]).unwrap();
        let other = pc_stable(&shuffled, &PcConfig::default()).unwrap().cpdag;
        assert_eq!(other.relabel(base.nodes()).unwrap(), base);
    }
}
