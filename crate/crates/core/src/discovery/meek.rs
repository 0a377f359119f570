use crate::error::{Error, Result};
use crate::graph::Cpdag;

/// Which rule, if any, orients the undirected edge `u -- v` as `u -> v`.
fn applies(g: &Cpdag, u: usize, v: usize) -> bool {
    let n = g.len();
    // R1: a -> u -- v, a and v non-adjacent
    if g.directed_parents(u).iter().any(|&a| a != v && !g.adjacent(a, v)) {
        return true;
    }
    // R2: u -> w -> v
    if (0..n).any(|w| g.has_directed(u, w) && g.has_directed(w, v)) {
        return true;
    }
    let und = g.undirected_neighbors(u);
    // R3: u -- c -> v, u -- d -> v, c and d non-adjacent
    let into_v: Vec<usize> = und.iter().copied().filter(|&c| c != v && g.has_directed(c, v)).collect();
    for (i, &c) in into_v.iter().enumerate() {
        if into_v[i + 1..].iter().any(|&d| !g.adjacent(c, d)) {
            return true;
        }
    }
    // R4: u -- c -> d -> v, u adjacent to d, c and v non-adjacent
    for &c in &und {
        if c == v || g.adjacent(c, v) {
            continue;
        }
        if (0..n).any(|d| d != u && g.has_directed(c, d) && g.has_directed(d, v) && g.adjacent(u, d)) {
            return true;
        }
    }
    false
}

/// Apply Meek's rules R1–R4 until nothing changes. Fails with
/// [`Error::Cycle`] when an orientation would close a directed cycle.
pub fn meek_closure(g: &Cpdag) -> Result<Cpdag> {
    let mut g = g.clone();
    loop {
        let mut changed = false;
        let edges: Vec<(usize, usize)> = g.undirected().iter().copied().collect();
        for (a, b) in edges {
            for (u, v) in [(a, b), (b, a)] {
                if g.has_undirected(u, v) && applies(&g, u, v) {
                    g.orient(u, v);
                    if !g.directed_is_acyclic() {
                        return Err(Error::Cycle);
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(g);
        }
    }
}
