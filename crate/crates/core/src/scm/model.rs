use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::CausalDag;
use crate::seed::{self, tag};
use crate::table::{ColumnKind, ColumnSchema, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Equation {
    GaussianRoot {
        mean: f64,
        std: f64,
    },
    /// `intercept + Σ coefficient·parent + noise_std·N(0, 1)`.
    Linear {
        #[serde(default)]
        intercept: f64,
        coefficients: BTreeMap<String, f64>,
        noise_std: f64,
    },
    /// One probability row per parent configuration, first parent most
    /// significant. Parents must be categorical.
    CategoricalTable {
        categories: Vec<String>,
        #[serde(default)]
        parents: Vec<String>,
        probabilities: Vec<Vec<f64>>,
    },
    Constant {
        value: f64,
    },
}

impl Equation {
    fn parent_names(&self) -> Vec<&str> {
        match self {
            Equation::Linear { coefficients, .. } => {
                coefficients.keys().map(String::as_str).collect()
            }
            Equation::CategoricalTable { parents, .. } => {
                parents.iter().map(String::as_str).collect()
            }
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterventionValue {
    Numeric(f64),
    Category(String),
}

impl From<f64> for InterventionValue {
    fn from(v: f64) -> Self {
        InterventionValue::Numeric(v)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Intervention {
    pub node: String,
    pub value: InterventionValue,
}

impl Intervention {
    pub fn new(node: impl Into<String>, value: impl Into<InterventionValue>) -> Self {
        Self {
            node: node.into(),
            value: value.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scm {
    dag: CausalDag,
    equations: Vec<Equation>,
    schema: Vec<ColumnSchema>,
}

/// On-disk SCM: `{nodes, edges, equations: {node: equation}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScmFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
    pub equations: BTreeMap<String, Equation>,
}

const CPT_TOLERANCE: f64 = 1e-12;

impl Scm {
    /// Equations may be listed in any order; each node needs exactly one.
    pub fn new<S: AsRef<str>>(dag: CausalDag, equations: Vec<(S, Equation)>) -> Result<Self> {
        let mut slots: Vec<Option<Equation>> = vec![None; dag.len()];
        for (name, eq) in equations {
            let i = dag.index_of(name.as_ref())?;
            if slots[i].replace(eq).is_some() {
                return Err(Error::InvalidScm(format!(
                    "node {:?} has two equations",
                    name.as_ref()
                )));
            }
        }
        let equations = slots
            .into_iter()
            .enumerate()
            .map(|(i, e)| {
                e.ok_or_else(|| {
                    Error::InvalidScm(format!("node {:?} has no equation", dag.nodes()[i]))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let schema = dag
            .nodes()
            .iter()
            .zip(&equations)
            .map(|(name, eq)| match eq {
                Equation::CategoricalTable { categories, .. } => {
                    ColumnSchema::categorical(name.clone(), categories.iter().cloned())
                }
                _ => ColumnSchema::numeric(name.clone()),
            })
            .collect();
        let scm = Scm {
            dag,
            equations,
            schema,
        };
        scm.validate()?;
        Ok(scm)
    }

    fn validate(&self) -> Result<()> {
        crate::table::validate_schema(&self.schema)?;
        for (v, eq) in self.equations.iter().enumerate() {
            let name = &self.dag.nodes()[v];
            let mut declared: Vec<usize> = eq
                .parent_names()
                .into_iter()
                .map(|p| self.dag.index_of(p))
                .collect::<Result<_>>()?;
            declared.sort_unstable();
            if declared != self.dag.parents(v) {
                return Err(Error::InvalidScm(format!(
                    "equation parents of {name:?} do not match the graph"
                )));
            }
            match eq {
                Equation::GaussianRoot { mean, std } => {
                    if !mean.is_finite() || !(*std >= 0.0 && std.is_finite()) {
                        return Err(Error::InvalidScm(format!("bad root parameters at {name:?}")));
                    }
                }
                Equation::Linear {
                    intercept,
                    coefficients,
                    noise_std,
                } => {
                    if !(*noise_std >= 0.0 && noise_std.is_finite())
                        || !intercept.is_finite()
                        || coefficients.values().any(|c| !c.is_finite())
                    {
                        return Err(Error::InvalidScm(format!("bad linear parameters at {name:?}")));
                    }
                }
                Equation::CategoricalTable {
                    categories,
                    parents,
                    probabilities,
                } => {
                    let mut configs = 1usize;
                    for p in parents {
                        let col = &self.schema[self.dag.index_of(p)?];
                        if !col.is_categorical() {
                            return Err(Error::InvalidScm(format!(
                                "CPT parent {p:?} of {name:?} is not categorical"
                            )));
                        }
                        configs *= col.n_categories();
                    }
                    if probabilities.len() != configs {
                        return Err(Error::InvalidScm(format!(
                            "{name:?}: {} CPT rows for {configs} parent configurations",
                            probabilities.len()
                        )));
                    }
                    for row in probabilities {
                        let sum: f64 = row.iter().sum();
                        if row.len() != categories.len()
                            || row.iter().any(|p| !(*p >= 0.0))
                            || (sum - 1.0).abs() > CPT_TOLERANCE
                        {
                            return Err(Error::InvalidScm(format!("bad CPT row at {name:?}")));
                        }
                    }
                }
                Equation::Constant { value } => {
                    if !value.is_finite() {
                        return Err(Error::InvalidScm(format!("bad constant at {name:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn equation(&self, name: &str) -> Result<&Equation> {
        Ok(&self.equations[self.dag.index_of(name)?])
    }

    pub fn from_file(file: ScmFile) -> Result<Self> {
        let edges: Vec<(String, String)> = file.edges.into_iter().map(|[u, v]| (u, v)).collect();
        let dag = CausalDag::new(file.nodes, &edges)?;
        Scm::new(dag, file.equations.into_iter().collect())
    }

    pub fn to_file(&self) -> ScmFile {
        ScmFile {
            nodes: self.dag.nodes().to_vec(),
            edges: self
                .dag
                .edge_names()
                .into_iter()
                .map(|(u, v)| [u, v])
                .collect(),
            equations: self
                .dag
                .nodes()
                .iter()
                .cloned()
                .zip(self.equations.iter().cloned())
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_file(crate::io::read_json(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, &self.to_file())
    }

    /// Draw `n` rows. Nodes are evaluated in topological order; each node
    /// has its own noise stream keyed by its index, so the result depends
    /// only on `(scm, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Table {
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); self.dag.len()];
        for v in self.dag.topological_order() {
            let mut rng = seed::rng_at(seed, &[tag::SCM_NODE, v as u64]);
            let values: Vec<f64> = match &self.equations[v] {
                Equation::GaussianRoot { mean, std } => (0..n)
                    .map(|_| mean + std * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
                Equation::Linear {
                    intercept,
                    coefficients,
                    noise_std,
                } => {
                    let terms: Vec<(usize, f64)> = coefficients
                        .iter()
                        .map(|(p, &c)| (self.dag.index_of(p).expect("validated"), c))
                        .collect();
                    (0..n)
                        .map(|r| {
                            let mean = terms
                                .iter()
                                .fold(*intercept, |acc, &(p, c)| acc + c * columns[p][r]);
                            mean + noise_std * rng.sample::<f64, _>(StandardNormal)
                        })
                        .collect()
                }
                Equation::CategoricalTable {
                    parents,
                    probabilities,
                    ..
                } => {
                    let parents: Vec<(usize, usize)> = parents
                        .iter()
                        .map(|p| {
                            let i = self.dag.index_of(p).expect("validated");
                            (i, self.schema[i].n_categories())
                        })
                        .collect();
                    (0..n)
                        .map(|r| {
                            let config = parents
                                .iter()
                                .fold(0usize, |acc, &(p, k)| acc * k + columns[p][r] as usize);
                            draw_category(&probabilities[config], rng.random::<f64>()) as f64
                        })
                        .collect()
                }
                Equation::Constant { value } => vec![*value; n],
            };
            columns[v] = values;
        }
        Table::new(self.schema.clone(), columns).expect("SCM output matches its schema")
    }

    /// `do(node = value)`: cut incoming edges, replace the equation by a
    /// constant. The column kind is kept.
    pub fn intervene(&self, iv: &Intervention) -> Result<Scm> {
        let v = self.dag.index_of(&iv.node)?;
        let col = &self.schema[v];
        let value = match (&iv.value, col.kind) {
            (InterventionValue::Numeric(x), ColumnKind::Numeric) if x.is_finite() => *x,
            (InterventionValue::Category(label), ColumnKind::Categorical) => {
                col.category_index(label).ok_or_else(|| Error::UnknownCategory {
                    column: col.name.clone(),
                    label: label.clone(),
                })? as f64
            }
            _ => {
                return Err(Error::InvalidInput(format!(
                    "intervention value {:?} does not fit column {:?}",
                    iv.value, col.name
                )))
            }
        };
        let mut equations = self.equations.clone();
        equations[v] = Equation::Constant { value };
        Ok(Scm {
            dag: self.dag.mutilate(v),
            equations,
            schema: self.schema.clone(),
        })
    }
}

fn draw_category(probabilities: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // u landed in the rounding gap above the cumulative sum
    probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// `n_per_arm` rows from `do(treatment = x0)` followed by `n_per_arm` rows
/// from `do(treatment = x1)`. Arm streams are derived from `seed`.
pub fn interventional_arms(
    scm: &Scm,
    treatment: &str,
    x0: impl Into<InterventionValue>,
    x1: impl Into<InterventionValue>,
    n_per_arm: usize,
    seed: u64,
) -> Result<Table> {
    if n_per_arm == 0 {
        return Err(Error::InvalidInput("n_per_arm must be at least 1".into()));
    }
    let arm0 = scm.intervene(&Intervention::new(treatment, x0))?;
    let arm1 = scm.intervene(&Intervention::new(treatment, x1))?;
    let t0 = arm0.sample(n_per_arm, seed::derive(seed, &[tag::ARM, 0]));
    let t1 = arm1.sample(n_per_arm, seed::derive(seed, &[tag::ARM, 1]));
    t0.concat(&t1)
}

/// Total effect of `treatment` on `outcome` in a linear SCM: the sum over
/// directed paths of coefficient products, times `x1 - x0`.
pub fn analytic_ate(scm: &Scm, treatment: &str, outcome: &str, x0: f64, x1: f64) -> Result<f64> {
    let dag = scm.dag();
    let t = dag.index_of(treatment)?;
    let y = dag.index_of(outcome)?;
    let n = dag.len();

    // nodes from which the outcome is reachable
    let mut reaches_outcome = vec![false; n];
    reaches_outcome[y] = true;
    for &v in dag.reverse_topological_order().iter() {
        if dag.children(v).iter().any(|&c| reaches_outcome[c]) {
            reaches_outcome[v] = true;
        }
    }
    if !reaches_outcome[t] {
        return Ok(0.0);
    }

    let mut effect = vec![0.0; n];
    let mut on_path = vec![false; n];
    effect[t] = 1.0;
    on_path[t] = true;
    for v in dag.topological_order() {
        if v == t || !reaches_outcome[v] {
            continue;
        }
        let parents_on_path: Vec<usize> =
            dag.parents(v).into_iter().filter(|&p| on_path[p]).collect();
        if parents_on_path.is_empty() {
            continue;
        }
        on_path[v] = true;
        effect[v] = match &scm.equations[v] {
            Equation::Linear { coefficients, .. } => parents_on_path
                .iter()
                .map(|&p| coefficients[&dag.nodes()[p]] * effect[p])
                .sum(),
            Equation::Constant { .. } => 0.0,
            _ => return Err(Error::NonLinear(dag.nodes()[v].clone())),
        };
    }
    Ok(effect[y] * (x1 - x0))
}

/// The four-node collider `X3 -> X2 -> X1 <- X0`:
/// `X0, X3 ~ N(0, 1)`, `X2 = 0.5 X3 + ε`, `X1 = 5 X0 + 10 X2 + ε`,
/// `ε ~ N(0, noise_std²)`.
pub fn builtin_collider(noise_std: f64) -> Result<Scm> {
    if !(noise_std > 0.0 && noise_std.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise std must be positive, got {noise_std}"
        )));
    }
    let nodes: Vec<String> = ["X0", "X1", "X2", "X3"].map(String::from).to_vec();
    let dag = CausalDag::new(nodes, &[("X3", "X2"), ("X2", "X1"), ("X0", "X1")])?;
    let root = Equation::GaussianRoot {
        mean: 0.0,
        std: 1.0,
    };
    Scm::new(
        dag,
        vec![
            ("X0", root.clone()),
            (
                "X1",
                Equation::Linear {
                    intercept: 0.0,
                    coefficients: BTreeMap::from([("X0".into(), 5.0), ("X2".into(), 10.0)]),
                    noise_std,
                },
            ),
            (
                "X2",
                Equation::Linear {
                    intercept: 0.0,
                    coefficients: BTreeMap::from([("X3".into(), 0.5)]),
                    noise_std,
                },
            ),
            ("X3", root),
        ],
    )
}

/// Look up a built-in model by name.
pub fn builtin(name: &str, noise_std: f64) -> Result<Scm> {
    match name {
        "collider" => builtin_collider(noise_std),
        other => Err(Error::InvalidInput(format!("unknown built-in SCM {other:?}"))),
    }
}
