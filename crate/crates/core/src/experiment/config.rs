use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discovery::PcConfig;
use crate::error::{Error, Result};
use crate::graph::Strategy;
use crate::io::read_json;
use crate::sampler::SamplerSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Original,
    Topological,
    Reverse,
}

impl std::str::FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Ordering::Original),
            "topological" => Ok(Ordering::Topological),
            "reverse" => Ok(Ordering::Reverse),
            other => Err(Error::InvalidInput(format!("unknown ordering {other:?}"))),
        }
    }
}

impl std::fmt::Display for Ordering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Ordering::Original => "original",
            Ordering::Topological => "topological",
            Ordering::Reverse => "reverse",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphSource {
    TrueDag,
    MinimalCpdag,
    DiscoveredCpdag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    pub label: String,
    pub strategy: Strategy,
    #[serde(default = "original")]
    pub ordering: Ordering,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSource>,
}

fn original() -> Ordering {
    Ordering::Original
}

impl StrategySpec {
    pub fn vanilla(label: &str, ordering: Ordering) -> Self {
        Self {
            label: label.into(),
            strategy: Strategy::Vanilla,
            ordering,
            graph: None,
        }
    }

    pub fn with_graph(label: &str, strategy: Strategy, graph: GraphSource) -> Self {
        Self {
            label: label.into(),
            strategy,
            ordering: Ordering::Original,
            graph: Some(graph),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSource {
    /// A built-in SCM; `sigma` sets the noise scale.
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
    },
    ScmFile { path: PathBuf },
    /// Observational pool in CSV form plus an optional DAG file. ATE runs
    /// need one CSV per intervention arm.
    External {
        data: PathBuf,
        schema: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arms: Option<[PathBuf; 2]>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AteSpec {
    pub treatment: String,
    pub outcome: String,
    pub x0: f64,
    pub x1: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparison {
    pub a: String,
    pub b: String,
}

/// Which comparisons share one Holm adjustment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolmFamily {
    /// No adjustment.
    Cell,
    /// Every train size and dataset for one metric and one comparison.
    #[default]
    MetricComparison,
    /// Every comparison for one metric.
    Metric,
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    #[default]
    Quality,
    Ate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub kind: ExperimentKind,
    pub dataset: DatasetSource,
    pub strategies: Vec<StrategySpec>,
    pub train_sizes: Vec<usize>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    /// Rows drawn from a built-in SCM to form the split pool.
    #[serde(default = "default_pool_size")]
    pub pool_size: usize,
    #[serde(default)]
    pub sampler: SamplerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bridge_cmd: Option<String>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<String>,
    #[serde(default)]
    pub spurious_pairs: Vec<[String; 2]>,
    /// Replace the declared column order with a seeded random permutation
    /// when it is already topological.
    #[serde(default)]
    pub randomize_original: bool,
    #[serde(default)]
    pub pc: PcConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ate: Option<AteSpec>,
    #[serde(default)]
    pub comparisons: Vec<Comparison>,
    #[serde(default)]
    pub holm_family: HolmFamily,
}

fn default_iterations() -> usize {
    100
}

fn default_test_size() -> usize {
    2000
}

fn default_pool_size() -> usize {
    6000
}

fn default_permutations() -> usize {
    3
}

fn default_metrics() -> Vec<String> {
    vec!["cmd".into(), "kmtvd".into(), "nnaa".into()]
}

const KNOWN_METRICS: [&str; 3] = ["cmd", "kmtvd", "nnaa"];

impl ExperimentConfig {
    /// A quality experiment on a built-in SCM with default settings.
    pub fn builtin(name: &str, sigma: Option<f64>, strategies: Vec<StrategySpec>, train_sizes: Vec<usize>) -> Self {
        Self {
            name: None,
            kind: ExperimentKind::Quality,
            dataset: DatasetSource::Builtin {
                name: name.into(),
                sigma,
            },
            strategies,
            train_sizes,
            iterations: default_iterations(),
            test_size: default_test_size(),
            pool_size: default_pool_size(),
            sampler: SamplerSpec::default(),
            bridge_cmd: None,
            master_seed: 0,
            permutations: default_permutations(),
            metrics: default_metrics(),
            spurious_pairs: Vec::new(),
            randomize_original: false,
            pc: PcConfig::default(),
            ate: None,
            comparisons: Vec::new(),
            holm_family: HolmFamily::default(),
        }
    }

    /// Reads a JSON config. Relative paths inside it resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.dataset {
            DatasetSource::ScmFile { path } => fix(path),
            DatasetSource::External {
                data,
                schema,
                graph,
                arms,
            } => {
                fix(data);
                fix(schema);
                if let Some(g) = graph {
                    fix(g);
                }
                if let Some(a) = arms {
                    a.iter_mut().for_each(fix);
                }
            }
            DatasetSource::Builtin { .. } => {}
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dataset_name(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        match &self.dataset {
            DatasetSource::Builtin { name, sigma } => match sigma {
                Some(s) => format!("{name}-{s:e}"),
                None => name.clone(),
            },
            DatasetSource::ScmFile { path } | DatasetSource::External { data: path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.strategies.is_empty() {
            return bad("no strategies".into());
        }
        if self.train_sizes.is_empty() || self.train_sizes.contains(&0) {
            return bad("train sizes must be positive".into());
        }
        if self.test_size < 2 {
            return bad("test_size must be at least 2".into());
        }
        let mut labels = HashSet::new();
        for s in &self.strategies {
            if !labels.insert(s.label.as_str()) {
                return bad(format!("duplicate strategy label {:?}", s.label));
            }
            match (s.strategy, s.graph) {
                (Strategy::Vanilla, Some(_)) => {
                    return bad(format!("{:?}: vanilla takes no graph", s.label));
                }
                (Strategy::Dag, g) if g != Some(GraphSource::TrueDag) => {
                    return bad(format!("{:?}: dag strategy needs graph \"true-dag\"", s.label));
                }
                (Strategy::Cpdag, None) => {
                    return bad(format!("{:?}: cpdag strategy needs a graph source", s.label));
                }
                _ => {}
            }
        }
        for m in &self.metrics {
            if !KNOWN_METRICS.contains(&m.as_str()) {
                return bad(format!("unknown metric {m:?}"));
            }
        }
        for c in &self.comparisons {
            for side in [&c.a, &c.b] {
                if !labels.contains(side.as_str()) {
                    return bad(format!("comparison names unknown strategy {side:?}"));
                }
            }
        }
        if self.kind == ExperimentKind::Ate {
            let Some(ate) = &self.ate else {
                return bad("ATE experiment without an \"ate\" section".into());
            };
            if ate.x0 == ate.x1 {
                return bad("ATE arms must differ".into());
            }
            if self.test_size % 2 == 1 || self.train_sizes.iter().any(|n| n % 2 == 1) {
                return bad("ATE sizes must be even (equal arms)".into());
            }
        }
        Ok(())
    }
}
