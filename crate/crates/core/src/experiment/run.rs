use std::sync::OnceLock;

use log::{info, warn};

use super::compare::{aggregate_and_compare, sensitivity_from_records, ComparisonRow, SensitivityCell};
use super::config::{DatasetSource, ExperimentConfig, ExperimentKind, GraphSource, Ordering, StrategySpec};
use super::records::{GraphQualityRecord, RunRecord};
use crate::discovery::{graph_quality, pc_stable};
use crate::error::{Error, Result};
use crate::graph::{build_plan, CausalDag, Cpdag, GenerationPlan, PlanGraph, Strategy};
use crate::metrics::{ate_from_table, cmd, delta_ate, kmtvd, nnaa, pearson, snap_to_arms, DEFAULT_BINS};
use crate::par;
use crate::sampler::{GenerationRequest, Generator};
use crate::scm::{builtin, interventional_arms, InterventionValue, Scm};
use crate::seed::{derive, rng_at, tag};
use crate::table::{fixed_split, load_schema, load_table, SplitSpec, Table};

/// The data behind an experiment: an SCM to sample from or an observational
/// pool (plus arm pools for ATE runs), and the true DAG when known.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub columns: Vec<String>,
    pub dag: Option<CausalDag>,
    pub scm: Option<Scm>,
    pub pool: Option<Table>,
    pub arm_pools: Option<[Table; 2]>,
}

impl Dataset {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self> {
        let name = cfg.dataset_name();
        let from_scm = |scm: Scm| -> Self {
            Dataset {
                name: name.clone(),
                columns: scm.schema().iter().map(|c| c.name.clone()).collect(),
                dag: Some(scm.dag().clone()),
                pool: None,
                arm_pools: None,
                scm: Some(scm),
            }
        };
        match &cfg.dataset {
            DatasetSource::Builtin { name: n, sigma } => Ok(from_scm(builtin(n, sigma.unwrap_or(1e-5))?)),
            DatasetSource::ScmFile { path } => Ok(from_scm(Scm::load(path)?)),
            DatasetSource::External {
                data,
                schema,
                graph,
                arms,
            } => {
                let schema = load_schema(schema)?;
                let pool = load_table(data, &schema)?;
                let dag = graph
                    .as_ref()
                    .map(|g| crate::graph::GraphFile::load(g)?.into_dag())
                    .transpose()?;
                let arm_pools = match arms {
                    Some([a, b]) => Some([load_table(a, &schema)?, load_table(b, &schema)?]),
                    None => None,
                };
                Ok(Dataset {
                    name,
                    columns: schema.iter().map(|c| c.name.clone()).collect(),
                    dag,
                    scm: None,
                    pool: Some(pool),
                    arm_pools,
                })
            }
        }
    }

    fn observational_pool(&self, cfg: &ExperimentConfig) -> Result<Table> {
        match (&self.pool, &self.scm) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(scm)) => Ok(scm.sample(cfg.pool_size, derive(cfg.master_seed, &[tag::POOL]))),
            (None, None) => Err(Error::Config("dataset has no rows".into())),
        }
    }

    fn need_dag(&self) -> Result<&CausalDag> {
        self.dag
            .as_ref()
            .ok_or_else(|| Error::Config(format!("dataset {:?} has no known DAG", self.name)))
    }

    /// Column order for an ordering choice.
    pub fn order(&self, ordering: Ordering, cfg: &ExperimentConfig) -> Result<Vec<String>> {
        match ordering {
            Ordering::Original => {
                let declared = self.columns.clone();
                if !cfg.randomize_original || declared.len() < 2 {
                    return Ok(declared);
                }
                let topo = match &self.dag {
                    Some(d) => d.names_of(&d.topological_order()),
                    None => return Ok(declared),
                };
                if declared != topo {
                    return Ok(declared);
                }
                use rand::seq::SliceRandom;
                let mut rng = rng_at(cfg.master_seed, &[tag::ORDERING]);
                let mut order = declared.clone();
                while order == topo {
                    order.shuffle(&mut rng);
                }
                Ok(order)
            }
            Ordering::Topological => {
                let d = self.need_dag()?;
                Ok(d.names_of(&d.topological_order()))
            }
            Ordering::Reverse => {
                let d = self.need_dag()?;
                Ok(d.names_of(&d.reverse_topological_order()))
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub graph_quality: Vec<GraphQualityRecord>,
    pub comparisons: Vec<ComparisonRow>,
    pub sensitivity: Vec<SensitivityCell>,
}

struct Runner<'a> {
    cfg: &'a ExperimentConfig,
    data: Dataset,
    generator: Generator,
    orders: Vec<Vec<String>>,
    /// Graph used for the true-dag and minimal-cpdag sources.
    truth: Option<CausalDag>,
    /// Node whose in-edges are dropped from the reference graph.
    mutilated: Option<String>,
    metric_names: Vec<String>,
}

enum Evaluation<'a> {
    Quality { test: &'a Table },
    Ate { test_ate: f64 },
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a ExperimentConfig, metric_names: Vec<String>) -> Result<Self> {
        cfg.validate()?;
        let data = Dataset::resolve(cfg)?;
        let generator = match &cfg.bridge_cmd {
            Some(cmd) => Generator::bridge(cmd)?,
            None => Generator::builtin(&cfg.sampler),
        };
        let orders = cfg
            .strategies
            .iter()
            .map(|s| data.order(s.ordering, cfg))
            .collect::<Result<_>>()?;
        let mutilated = match cfg.kind {
            ExperimentKind::Ate => cfg.ate.as_ref().map(|a| a.treatment.clone()),
            ExperimentKind::Quality => None,
        };
        let truth = match (&data.dag, &mutilated) {
            (Some(d), Some(t)) => Some(d.mutilate(d.index_of(t)?)),
            (Some(d), None) => Some(d.clone()),
            _ => None,
        };
        let needs_truth = cfg
            .strategies
            .iter()
            .any(|s| matches!(s.graph, Some(GraphSource::TrueDag | GraphSource::MinimalCpdag)));
        if needs_truth && truth.is_none() {
            return Err(Error::Config("graph source needs a known DAG".into()));
        }
        Ok(Self {
            cfg,
            data,
            generator,
            orders,
            truth,
            mutilated,
            metric_names,
        })
    }

    fn plan(&self, s: &StrategySpec, order: &[String], discovered: &dyn Fn() -> Result<Cpdag>) -> Result<GenerationPlan> {
        let truth = || self.truth.as_ref().expect("checked at construction");
        match s.graph {
            None => build_plan(s.strategy, order, PlanGraph::None),
            Some(GraphSource::TrueDag) => build_plan(s.strategy, order, PlanGraph::Dag(truth())),
            Some(GraphSource::MinimalCpdag) => {
                build_plan(s.strategy, order, PlanGraph::Cpdag(&truth().minimal_cpdag()))
            }
            Some(GraphSource::DiscoveredCpdag) => {
                let g = discovered()?;
                build_plan(s.strategy, order, PlanGraph::Cpdag(&g))
            }
        }
    }

    fn evaluate(&self, eval: &Evaluation<'_>, synth: &Table) -> Vec<Option<f64>> {
        let ok = |r: Result<f64>, name: &str| match r {
            Ok(v) => Some(v),
            Err(e) => {
                warn!("{name} undefined: {e}");
                None
            }
        };
        match eval {
            Evaluation::Quality { test } => {
                let mut out = Vec::new();
                for m in &self.cfg.metrics {
                    out.push(match m.as_str() {
                        "cmd" => ok(cmd(test, synth), m),
                        "kmtvd" => ok(kmtvd(test, synth, DEFAULT_BINS), m),
                        "nnaa" => ok(nnaa(test, synth), m),
                        _ => unreachable!("validated"),
                    });
                }
                for [a, b] in &self.cfg.spurious_pairs {
                    let rho = synth
                        .column(a)
                        .and_then(|x| Ok(pearson(x, synth.column(b)?)))
                        .ok()
                        .flatten();
                    out.push(rho);
                    out.push(rho.map(f64::abs));
                }
                out
            }
            Evaluation::Ate { test_ate } => {
                let ate = self.cfg.ate.as_ref().expect("validated");
                match synthetic_ate(synth, ate.treatment.as_str(), &ate.outcome, ate.x0, ate.x1) {
                    Ok(v) => vec![Some(v), Some(delta_ate(*test_ate, v))],
                    Err(e) => {
                        warn!("synthetic ATE undefined: {e}");
                        vec![None, None]
                    }
                }
            }
        }
    }

    fn run_cell(
        &self,
        train_size: usize,
        iteration: usize,
        train: &Table,
        eval: &Evaluation<'_>,
        n_samples: usize,
    ) -> (Vec<RunRecord>, Vec<GraphQualityRecord>) {
        let cfg = self.cfg;
        let hash = format!("{:016x}", train.fingerprint());
        let discovered: OnceLock<std::result::Result<Cpdag, String>> = OnceLock::new();
        let discover = || -> Result<Cpdag> {
            discovered
                .get_or_init(|| pc_stable(train, &cfg.pc).map(|o| o.cpdag).map_err(|e| e.to_string()))
                .clone()
                .map_err(Error::Degenerate)
        };
        let seed = derive(cfg.master_seed, &[tag::GENERATE, train_size as u64, iteration as u64]);
        let mut records = Vec::new();
        let mut quality = Vec::new();
        for (s, order) in cfg.strategies.iter().zip(&self.orders) {
            let values = self
                .plan(s, order, &discover)
                .and_then(|plan| {
                    self.generator.generate(&GenerationRequest {
                        train,
                        plan: &plan,
                        n_samples,
                        seed,
                        permutations: cfg.permutations,
                    })
                })
                .map(|synth| self.evaluate(eval, &synth))
                .unwrap_or_else(|e| {
                    warn!("{} at N={train_size}, iteration {iteration}: {e}", s.label);
                    vec![None; self.metric_names.len()]
                });
            for (metric, value) in self.metric_names.iter().zip(values) {
                records.push(RunRecord {
                    dataset: self.data.name.clone(),
                    strategy: s.label.clone(),
                    ordering: s.ordering.to_string(),
                    train_size,
                    iteration,
                    metric: metric.clone(),
                    value,
                    train_hash: hash.clone(),
                });
            }
            if s.graph == Some(GraphSource::DiscoveredCpdag) {
                if let (Ok(g), Some(dag)) = (discover(), &self.data.dag) {
                    match graph_quality(&g, dag, self.mutilated.as_deref()) {
                        Ok(q) => quality.push(GraphQualityRecord {
                            dataset: self.data.name.clone(),
                            strategy: s.label.clone(),
                            train_size,
                            iteration,
                            quality: q,
                        }),
                        Err(e) => warn!("graph quality: {e}"),
                    }
                }
            }
        }
        (records, quality)
    }

    /// All-missing records for a cell whose training data could not be drawn.
    fn missing_cell(&self, train_size: usize, iteration: usize) -> Vec<RunRecord> {
        let mut out = Vec::new();
        for s in &self.cfg.strategies {
            for m in &self.metric_names {
                out.push(RunRecord {
                    dataset: self.data.name.clone(),
                    strategy: s.label.clone(),
                    ordering: s.ordering.to_string(),
                    train_size,
                    iteration,
                    metric: m.clone(),
                    value: None,
                    train_hash: String::new(),
                });
            }
        }
        out
    }

    fn cells(&self) -> Vec<(usize, usize)> {
        self.cfg
            .train_sizes
            .iter()
            .flat_map(|&n| (0..self.cfg.iterations).map(move |i| (n, i)))
            .collect()
    }
}

fn synthetic_ate(synth: &Table, treatment: &str, outcome: &str, x0: f64, x1: f64) -> Result<f64> {
    let t = synth.index_of(treatment)?;
    if synth.schema()[t].is_categorical() {
        return ate_from_table(synth, treatment, outcome, x0, x1);
    }
    let mut columns = synth.columns().to_vec();
    columns[t] = snap_to_arms(&columns[t], x0, x1);
    let snapped = Table::new(synth.schema().to_vec(), columns)?;
    ate_from_table(&snapped, treatment, outcome, x0, x1)
}

fn quality_metric_names(cfg: &ExperimentConfig) -> Vec<String> {
    let mut names = cfg.metrics.clone();
    for [a, b] in &cfg.spurious_pairs {
        names.push(format!("rho:{a}:{b}"));
        names.push(format!("abs_rho:{a}:{b}"));
    }
    names
}

fn collect(results: Vec<(Vec<RunRecord>, Vec<GraphQualityRecord>)>) -> ExperimentOutput {
    let mut out = ExperimentOutput::default();
    for (r, q) in results {
        out.records.extend(r);
        out.graph_quality.extend(q);
    }
    out
}

/// Quality protocol: a fixed test set, one shared training draw per
/// (train size, iteration), and `test_size` synthetic rows per strategy.
pub fn run_quality_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let runner = Runner::new(cfg, quality_metric_names(cfg))?;
    let pool = runner.data.observational_pool(cfg)?;
    let needed = cfg.test_size + cfg.train_sizes.iter().max().copied().unwrap_or(0);
    if pool.n_rows() < needed {
        return Err(Error::InsufficientRows {
            needed,
            available: pool.n_rows(),
        });
    }
    let cells = runner.cells();
    info!("quality experiment: {} cells x {} strategies", cells.len(), cfg.strategies.len());
    let results = par::map_slice(&cells, |&(n, i)| {
        let spec = SplitSpec {
            test_size: cfg.test_size,
            train_size: n,
            master_seed: cfg.master_seed,
            iteration: i as u64,
        };
        let (train, test) = fixed_split(&pool, &spec).expect("pool size checked");
        runner.run_cell(n, i, &train, &Evaluation::Quality { test: &test }, cfg.test_size)
    });
    Ok(collect(results))
}

/// ATE protocol: balanced interventional train and test sets, ATE
/// estimated on the synthetic rows with the treatment snapped to the
/// nearest arm.
pub fn run_ate_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let ate = cfg
        .ate
        .as_ref()
        .ok_or_else(|| Error::Config("missing \"ate\" section".into()))?;
    let runner = Runner::new(cfg, vec!["ate".into(), "delta_ate".into()])?;
    let data = &runner.data;
    let arm_value = |scm: &Scm, x: f64| -> Result<InterventionValue> {
        let col = scm.schema().iter().find(|c| c.name == ate.treatment).ok_or_else(|| Error::UnknownNode(ate.treatment.clone()))?;
        Ok(if col.is_categorical() {
            InterventionValue::Category(
                col.categories
                    .get(x as usize)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("arm {x} is not a category index")))?,
            )
        } else {
            InterventionValue::Numeric(x)
        })
    };
    // External arm pools: each arm gets its own fixed test half and a
    // per-iteration train half.
    let arm_split = |n_per_arm: usize, iteration: usize| -> Result<(Table, Table)> {
        let pools = data
            .arm_pools
            .as_ref()
            .ok_or_else(|| Error::Config("ATE experiment needs an SCM or two arm files".into()))?;
        let mut parts = Vec::with_capacity(2);
        for (a, pool) in pools.iter().enumerate() {
            let spec = SplitSpec {
                test_size: cfg.test_size / 2,
                train_size: n_per_arm,
                master_seed: derive(cfg.master_seed, &[tag::ARM, a as u64]),
                iteration: iteration as u64,
            };
            parts.push(fixed_split(pool, &spec)?);
        }
        Ok((parts[0].0.concat(&parts[1].0)?, parts[0].1.concat(&parts[1].1)?))
    };
    let draw_arms = |scm: &Scm, n_per_arm: usize, seed: u64| -> Result<Table> {
        interventional_arms(
            scm,
            &ate.treatment,
            arm_value(scm, ate.x0)?,
            arm_value(scm, ate.x1)?,
            n_per_arm,
            seed,
        )
    };
    let draw_train = |n: usize, i: usize| -> Result<Table> {
        match &data.scm {
            Some(scm) => draw_arms(scm, n / 2, derive(cfg.master_seed, &[tag::ATE_TRAIN, n as u64, i as u64])),
            None => Ok(arm_split(n / 2, i)?.0),
        }
    };
    let test = match &data.scm {
        Some(scm) => draw_arms(scm, cfg.test_size / 2, derive(cfg.master_seed, &[tag::ATE_TEST]))?,
        None => arm_split(0, 0)?.1,
    };
    let test_ate = ate_from_table(&test, &ate.treatment, &ate.outcome, ate.x0, ate.x1)?;
    info!("test ATE {test_ate}");
    let cells = runner.cells();
    let runner = &runner;
    let results = par::map_slice(&cells, move |&(n, i)| {
        match draw_train(n, i) {
            Ok(train) => runner.run_cell(n, i, &train, &Evaluation::Ate { test_ate }, cfg.test_size),
            Err(e) => {
                warn!("ATE train draw at N={n}, iteration {i}: {e}");
                (runner.missing_cell(n, i), Vec::new())
            }
        }
    });
    Ok(collect(results))
}

/// Runs the configured protocol, then paired comparisons and, when the
/// strategies include vanilla generation under all three orderings, the
/// order-sensitivity summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let mut out = match cfg.kind {
        ExperimentKind::Quality => run_quality_experiment(cfg)?,
        ExperimentKind::Ate => run_ate_experiment(cfg)?,
    };
    out.comparisons = aggregate_and_compare(&out.records, &cfg.comparisons, cfg.holm_family, cfg.master_seed)?;
    if cfg.kind == ExperimentKind::Quality {
        let label = |o: Ordering| {
            cfg.strategies
                .iter()
                .find(|s| s.strategy == Strategy::Vanilla && s.ordering == o)
                .map(|s| s.label.clone())
        };
        if let (Some(a), Some(b), Some(c)) = (
            label(Ordering::Original),
            label(Ordering::Topological),
            label(Ordering::Reverse),
        ) {
            out.sensitivity = sensitivity_from_records(&out.records, [&a, &b, &c], cfg.master_seed);
        }
    }
    Ok(out)
}
