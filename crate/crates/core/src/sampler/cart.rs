use rand::Rng;

use super::{ConditionalSampler, FittedConditional, TrainingView};
use crate::error::Result;
use crate::seed::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_depth: 12,
            min_leaf: 5,
        }
    }
}

/// Regression/classification tree whose leaves keep their training targets.
/// Sampling walks the tree and draws uniformly from the reached leaf.
#[derive(Clone, Copy, Debug, Default)]
pub struct CartSampler {
    params: CartParams,
}

impl CartSampler {
    pub fn new(params: CartParams) -> Self {
        Self { params }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Rule {
    /// Left when `x <= threshold`.
    Below(f64),
    /// Left when `x == level`.
    Is(usize),
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        rule: Rule,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// `feature` indices in the tree refer to the name-sorted feature list, so
/// the tree does not depend on the caller's column order.
#[derive(Clone, Debug, PartialEq)]
pub struct CartTree {
    root: Node,
    /// Caller position of each name-sorted feature.
    positions: Vec<usize>,
}

impl CartTree {
    pub fn n_leaves(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    fn leaf(&self, context: &[f64]) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(values) => return values,
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => {
                    let x = context[self.positions[*feature]];
                    let go_left = match *rule {
                        Rule::Below(t) => x <= t,
                        Rule::Is(level) => x as usize == level,
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }
}

impl FittedConditional for CartTree {
    fn sample(&self, context: &[f64], rng: &mut SeededRng) -> f64 {
        let values = self.leaf(context);
        values[rng.random_range(0..values.len())]
    }
}

enum Target<'a> {
    Numeric(&'a [f64]),
    Categorical(&'a [f64], usize),
}

impl Target<'_> {
    /// Node impurity times node size: SSE for numeric, n·Gini for categorical.
    fn cost(&self, rows: &[usize]) -> f64 {
        match *self {
            Target::Numeric(y) => {
                let n = rows.len() as f64;
                let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n;
                rows.iter().map(|&r| (y[r] - mean).powi(2)).sum()
            }
            Target::Categorical(y, k) => {
                let mut counts = vec![0usize; k];
                for &r in rows {
                    counts[y[r] as usize] += 1;
                }
                gini_cost(&counts, rows.len())
            }
        }
    }
}

fn gini_cost(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    nf - counts.iter().map(|&c| (c * c) as f64).sum::<f64>() / nf
}

/// Running cost of a growing left partition (and its complement).
struct Scan {
    kind: ScanKind,
}

enum ScanKind {
    Numeric {
        shift: f64,
        left: (f64, f64),
        total: (f64, f64),
    },
    Categorical {
        left: Vec<usize>,
        total: Vec<usize>,
    },
}

impl Scan {
    fn new(target: &Target<'_>, rows: &[usize]) -> Self {
        let kind = match *target {
            Target::Numeric(y) => {
                let shift = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
                let total = rows.iter().fold((0.0, 0.0), |(s, q), &r| {
                    let d = y[r] - shift;
                    (s + d, q + d * d)
                });
                ScanKind::Numeric {
                    shift,
                    left: (0.0, 0.0),
                    total,
                }
            }
            Target::Categorical(y, k) => {
                let mut total = vec![0; k];
                for &r in rows {
                    total[y[r] as usize] += 1;
                }
                ScanKind::Categorical {
                    left: vec![0; k],
                    total,
                }
            }
        };
        Self { kind }
    }

    fn push(&mut self, target: &Target<'_>, r: usize) {
        match (&mut self.kind, target) {
            (ScanKind::Numeric { shift, left, .. }, Target::Numeric(y)) => {
                let d = y[r] - *shift;
                left.0 += d;
                left.1 += d * d;
            }
            (ScanKind::Categorical { left, .. }, Target::Categorical(y, _)) => {
                left[y[r] as usize] += 1;
            }
            _ => unreachable!(),
        }
    }

    fn cost(&self, n_left: usize, n: usize) -> f64 {
        let n_right = n - n_left;
        match &self.kind {
            ScanKind::Numeric { left, total, .. } => {
                let sse = |s: f64, q: f64, m: usize| (q - s * s / m as f64).max(0.0);
                sse(left.0, left.1, n_left) + sse(total.0 - left.0, total.1 - left.1, n_right)
            }
            ScanKind::Categorical { left, total } => {
                let right: Vec<usize> = total.iter().zip(left).map(|(t, l)| t - l).collect();
                gini_cost(left, n_left) + gini_cost(&right, n_right)
            }
        }
    }
}

struct Builder<'a> {
    params: CartParams,
    target: Target<'a>,
    /// Name-sorted features: values and level count (0 for numeric).
    features: Vec<(&'a [f64], usize)>,
}

struct Candidate {
    cost: f64,
    feature: usize,
    rule: Rule,
}

impl Builder<'_> {
    fn grow(&self, rows: Vec<usize>, depth: usize) -> Node {
        let n = rows.len();
        let parent = self.target.cost(&rows);
        if depth >= self.params.max_depth || n < 2 * self.params.min_leaf || parent <= 0.0 {
            return self.leaf(rows);
        }
        let tol = parent * 1e-12;
        let mut best: Option<Candidate> = None;
        for f in 0..self.features.len() {
            if let Some(c) = self.best_for(f, &rows) {
                if c.cost < parent - tol && best.as_ref().is_none_or(|b| c.cost < b.cost - tol) {
                    best = Some(c);
                }
            }
        }
        let Some(best) = best else {
            return self.leaf(rows);
        };
        let values = self.features[best.feature].0;
        let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| match best.rule {
            Rule::Below(t) => values[r] <= t,
            Rule::Is(level) => values[r] as usize == level,
        });
        Node::Split {
            feature: best.feature,
            rule: best.rule,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    fn leaf(&self, rows: Vec<usize>) -> Node {
        let y = match self.target {
            Target::Numeric(y) | Target::Categorical(y, _) => y,
        };
        Node::Leaf(rows.iter().map(|&r| y[r]).collect())
    }

    fn best_for(&self, f: usize, rows: &[usize]) -> Option<Candidate> {
        let (x, levels) = self.features[f];
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<Candidate> = None;
        let mut consider = |cost: f64, rule: Rule| {
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                best = Some(Candidate {
                    cost,
                    feature: f,
                    rule,
                });
            }
        };
        if levels == 0 {
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
            let mut scan = Scan::new(&self.target, rows);
            for i in 0..n - 1 {
                scan.push(&self.target, sorted[i]);
                let n_left = i + 1;
                let (lo, hi) = (x[sorted[i]], x[sorted[i + 1]]);
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let mut t = lo + (hi - lo) / 2.0;
                if t >= hi {
                    t = lo;
                }
                consider(scan.cost(n_left, n), Rule::Below(t));
            }
        } else {
            for level in 0..levels {
                let mut scan = Scan::new(&self.target, rows);
                let mut n_left = 0;
                for &r in rows {
                    if x[r] as usize == level {
                        scan.push(&self.target, r);
                        n_left += 1;
                    }
                }
                if n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                consider(scan.cost(n_left, n), Rule::Is(level));
            }
        }
        best
    }
}

pub fn fit_cart(view: &TrainingView<'_>, params: CartParams) -> CartTree {
    let positions = view.name_order();
    let target = if view.target.schema.is_categorical() {
        Target::Categorical(view.target.values, view.target.schema.n_categories())
    } else {
        Target::Numeric(view.target.values)
    };
    let features = positions
        .iter()
        .map(|&p| {
            let f = view.features[p];
            let levels = if f.schema.is_categorical() {
                f.schema.n_categories()
            } else {
                0
            };
            (f.values, levels)
        })
        .collect();
    let builder = Builder {
        params,
        target,
        features,
    };
    let root = builder.grow((0..view.n_rows()).collect(), 0);
    CartTree { root, positions }
}

impl ConditionalSampler for CartSampler {
    fn name(&self) -> &'static str {
        "cart"
    }

    fn supports_categorical(&self) -> bool {
        true
    }

    fn fit(
        &self,
        view: &TrainingView<'_>,
        _permutations: usize,
    ) -> Result<Box<dyn FittedConditional>> {
        if view.n_rows() == 0 {
            return Err(crate::Error::InsufficientRows {
                needed: 1,
                available: 0,
            });
        }
        Ok(Box::new(fit_cart(view, self.params)))
    }
}
