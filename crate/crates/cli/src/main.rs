//! `causagen` command-line front end.
//!
//! Machine-readable results go to files (or stdout where noted); human
//! summaries go to stderr. Exit codes: 0 success, 1 usage error, 2 data or
//! validation error.

use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use causagen::discovery::{graph_quality, pc_stable, CiTestKind, PcConfig};
use causagen::experiment::{
    aggregate_and_compare, read_records, run_experiment, write_graph_quality, write_records, Comparison,
    ExperimentConfig, HolmFamily,
};
use causagen::graph::{build_plan, GraphFile, PlanGraph};
use causagen::io::write_json;
use causagen::metrics::evaluate;
use causagen::sampler::{serve, BridgeClient, GenerationRequest, Generator, SamplerSpec};
use causagen::scm::{builtin, Scm};
use causagen::table::{fixed_split, load_schema, load_table, save_schema, save_table, SplitSpec};
use causagen::{par, Strategy, Table};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "causagen", version, about = "Causally-conditioned synthetic tabular data")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    log_level: log::LevelFilter,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structural causal models.
    #[command(subcommand)]
    Scm(ScmCommand),
    /// Fixed test set plus a per-iteration training draw.
    Split(SplitArgs),
    /// Autoregressive synthetic data generation.
    Generate(GenerateArgs),
    /// PC-stable structure discovery.
    Discover(DiscoverArgs),
    /// Compare an estimated CPDAG with a true DAG.
    GraphQuality(GraphQualityArgs),
    /// Fidelity and privacy metrics of a synthetic table.
    Evaluate(EvaluateArgs),
    /// Paired comparison of two run-record files.
    Compare(CompareArgs),
    /// Run an experiment described by a JSON config.
    Experiment(ExperimentArgs),
    /// Handshake with a bridge command and run a small generate request.
    BridgeCheck(BridgeCheckArgs),
    /// Serve the bridge protocol on stdin/stdout with a built-in sampler.
    BridgeServe(BridgeServeArgs),
}

#[derive(Subcommand, Debug)]
enum ScmCommand {
    /// Draw observational rows.
    Sample(ScmSampleArgs),
    /// Write a model as an SCM file.
    Export(ScmExportArgs),
}

#[derive(Args, Debug)]
struct ScmSource {
    /// Built-in model name (collider).
    #[arg(long, conflicts_with = "scm", required_unless_present = "scm")]
    builtin: Option<String>,
    /// Noise scale of the built-in model.
    #[arg(long, default_value_t = 1e-5, requires = "builtin")]
    sigma: f64,
    /// SCM file.
    #[arg(long)]
    scm: Option<PathBuf>,
}

impl ScmSource {
    fn load(&self) -> Result<Scm> {
        match (&self.builtin, &self.scm) {
            (Some(name), _) => Ok(builtin(name, self.sigma)?),
            (None, Some(path)) => Ok(Scm::load(path)?),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

#[derive(Args, Debug)]
struct ScmSampleArgs {
    #[command(flatten)]
    source: ScmSource,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    schema_out: Option<PathBuf>,
    /// Also write the true DAG as a graph file.
    #[arg(long)]
    graph_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScmExportArgs {
    #[command(flatten)]
    source: ScmSource,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    test_size: usize,
    #[arg(long)]
    train_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    iteration: u64,
    #[arg(long)]
    train_out: PathBuf,
    #[arg(long)]
    test_out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Vanilla,
    Dag,
    Cpdag,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderArg {
    Original,
    Topological,
    Reverse,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SamplerArg {
    Cart,
    Lingauss,
    Bridge,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BuiltinSamplerArg {
    Cart,
    Lingauss,
}

impl BuiltinSamplerArg {
    fn spec(self) -> SamplerSpec {
        match self {
            Self::Cart => SamplerSpec::default(),
            Self::Lingauss => SamplerSpec::Lingauss,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, default_value = "vanilla")]
    strategy: StrategyArg,
    /// Graph file: a DAG for `dag`, a DAG or CPDAG for `cpdag`.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "original")]
    order: OrderArg,
    #[arg(long, value_enum, default_value = "cart")]
    sampler: SamplerArg,
    /// Shell command that starts a bridge process.
    #[arg(long)]
    bridge_cmd: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    permutations: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CiTestArg {
    FisherZ,
    G2,
    Hybrid,
}

#[derive(Args, Debug)]
struct DiscoverArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "hybrid")]
    test: CiTestArg,
    #[arg(long, default_value_t = 3)]
    max_cond: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GraphQualityArgs {
    #[arg(long)]
    estimated: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Score against the truth with all edges into this node removed.
    #[arg(long)]
    mutilate: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    real: PathBuf,
    #[arg(long)]
    synth: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Column pairs whose synthetic correlation is reported, e.g. X0:X3,X0:X2.
    #[arg(long, value_delimiter = ',')]
    spurious: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HolmArg {
    Cell,
    MetricComparison,
    Metric,
    All,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    metrics_a: PathBuf,
    #[arg(long)]
    metrics_b: PathBuf,
    /// Strategy to take from the first file when it holds several.
    #[arg(long)]
    strategy_a: Option<String>,
    #[arg(long)]
    strategy_b: Option<String>,
    #[arg(long, value_enum, default_value = "metric-comparison")]
    holm_family: HolmArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Override the config's iteration count.
    #[arg(long)]
    iterations: Option<usize>,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BridgeCheckArgs {
    #[arg(long)]
    bridge_cmd: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BridgeServeArgs {
    #[arg(long, value_enum, default_value = "cart")]
    sampler: BuiltinSamplerArg,
}

/// Bad flag combination detected after parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .init();
    match par::with_threads(cli.threads, || run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Scm(ScmCommand::Sample(a)) => scm_sample(a),
        Command::Scm(ScmCommand::Export(a)) => {
            a.source.load()?.save(&a.out)?;
            Ok(())
        }
        Command::Split(a) => split(a),
        Command::Generate(a) => generate(a),
        Command::Discover(a) => discover(a),
        Command::GraphQuality(a) => quality(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Compare(a) => compare(a),
        Command::Experiment(a) => experiment(a),
        Command::BridgeCheck(a) => bridge_check(a),
        Command::BridgeServe(a) => {
            let sampler = a.sampler.spec().build();
            serve(io::stdin().lock(), BufWriter::new(io::stdout().lock()), sampler.as_ref())?;
            Ok(())
        }
    }
}

fn read_data(data: &Path, schema: &Path) -> Result<Table> {
    let schema = load_schema(schema)?;
    Ok(load_table(data, &schema)?)
}

fn scm_sample(a: ScmSampleArgs) -> Result<()> {
    let scm = a.source.load()?;
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let t = scm.sample(a.n, a.seed);
    save_table(&a.out, &t)?;
    if let Some(p) = &a.schema_out {
        save_schema(p, t.schema())?;
    }
    if let Some(p) = &a.graph_out {
        scm.dag().to_file().save(p)?;
    }
    eprintln!("wrote {} rows x {} columns to {}", t.n_rows(), t.n_cols(), a.out.display());
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    let pool = read_data(&a.data, &a.schema)?;
    let (train, test) = fixed_split(
        &pool,
        &SplitSpec {
            test_size: a.test_size,
            train_size: a.train_size,
            master_seed: a.seed,
            iteration: a.iteration,
        },
    )?;
    save_table(&a.train_out, &train)?;
    save_table(&a.test_out, &test)?;
    eprintln!("train {} rows, test {} rows", train.n_rows(), test.n_rows());
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let generator = match (a.sampler, &a.bridge_cmd) {
        (SamplerArg::Bridge, Some(cmd)) => Generator::bridge(cmd)?,
        (SamplerArg::Bridge, None) => return Err(usage("--sampler bridge needs --bridge-cmd")),
        (_, Some(_)) => return Err(usage("--bridge-cmd only applies to --sampler bridge")),
        (SamplerArg::Cart, None) => Generator::builtin(&SamplerSpec::default()),
        (SamplerArg::Lingauss, None) => Generator::builtin(&SamplerSpec::Lingauss),
    };
    let train = read_data(&a.train, &a.schema)?;
    let graph = a.graph.as_deref().map(GraphFile::load).transpose()?;
    let columns: Vec<String> = train.names().map(String::from).collect();
    let order = match a.order {
        OrderArg::Original => columns,
        OrderArg::Topological | OrderArg::Reverse => {
            let dag = graph
                .clone()
                .ok_or_else(|| usage("--order topological/reverse needs --graph"))?
                .into_dag()
                .context("ordering needs a fully directed graph")?;
            let idx = match a.order {
                OrderArg::Topological => dag.topological_order(),
                _ => dag.reverse_topological_order(),
            };
            dag.names_of(&idx)
        }
    };
    let plan = match (a.strategy, graph) {
        (StrategyArg::Vanilla, _) => build_plan(Strategy::Vanilla, &order, PlanGraph::None)?,
        (_, None) => return Err(usage("--strategy dag/cpdag needs --graph")),
        (StrategyArg::Dag, Some(g)) => build_plan(Strategy::Dag, &order, PlanGraph::Dag(&g.into_dag()?))?,
        (StrategyArg::Cpdag, Some(g)) => build_plan(Strategy::Cpdag, &order, PlanGraph::Cpdag(&g.into_cpdag()?))?,
    };
    let synth = generator.generate(&GenerationRequest {
        train: &train,
        plan: &plan,
        n_samples: a.n,
        seed: a.seed,
        permutations: a.permutations,
    })?;
    save_table(&a.out, &synth)?;
    eprintln!("generated {} rows in order {:?}", synth.n_rows(), plan.order);
    Ok(())
}

fn discover(a: DiscoverArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage("--alpha must lie in (0, 1)"));
    }
    let data = read_data(&a.data, &a.schema)?;
    let test = match a.test {
        CiTestArg::FisherZ => CiTestKind::FisherZ,
        CiTestArg::G2 => CiTestKind::G2,
        CiTestArg::Hybrid => CiTestKind::Hybrid,
    };
    let out = pc_stable(
        &data,
        &PcConfig {
            alpha: a.alpha,
            max_cond: a.max_cond,
            test,
        },
    )?;
    out.cpdag.to_file().save(&a.out)?;
    eprintln!(
        "{} CI tests; {} directed, {} undirected edges",
        out.n_tests,
        out.cpdag.directed().len(),
        out.cpdag.undirected().len()
    );
    Ok(())
}

fn quality(a: GraphQualityArgs) -> Result<()> {
    let est = GraphFile::load(&a.estimated)?.into_cpdag()?;
    let truth = GraphFile::load(&a.truth)?.into_dag()?;
    let q = graph_quality(&est, &truth, a.mutilate.as_deref())?;
    write_json(&a.out, &q)?;
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let schema = load_schema(&a.schema)?;
    let real = load_table(&a.real, &schema)?;
    let synth = load_table(&a.synth, &schema)?;
    let pairs = a
        .spurious
        .iter()
        .map(|p| {
            p.split_once(':')
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .ok_or_else(|| usage(format!("--spurious expects A:B pairs, got {p:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let report = evaluate(&real, &synth, &pairs)?;
    write_json(&a.out, &report)?;
    eprintln!("cmd {:.4}  kmtvd {:.4}  nnaa {:.4}", report.cmd, report.kmtvd, report.nnaa);
    Ok(())
}

fn single_strategy(records: &[causagen::experiment::RunRecord], chosen: Option<&str>, flag: &str) -> Result<String> {
    let mut labels: Vec<&str> = records.iter().map(|r| r.strategy.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    match chosen {
        Some(c) if labels.contains(&c) => Ok(c.to_string()),
        Some(c) => Err(anyhow!("strategy {c:?} not found (have {labels:?})")),
        None if labels.len() == 1 => Ok(labels[0].to_string()),
        None => Err(usage(format!("file holds strategies {labels:?}; choose one with {flag}"))),
    }
}

fn compare(a: CompareArgs) -> Result<()> {
    let ra = read_records(&a.metrics_a)?;
    let rb = read_records(&a.metrics_b)?;
    let sa = single_strategy(&ra, a.strategy_a.as_deref(), "--strategy-a")?;
    let sb = single_strategy(&rb, a.strategy_b.as_deref(), "--strategy-b")?;
    // the two sides may share a label when they come from separate runs
    let (la, lb) = if sa == sb {
        (format!("{sa} (a)"), format!("{sb} (b)"))
    } else {
        (sa.clone(), sb.clone())
    };
    let mut records: Vec<_> = ra
        .into_iter()
        .filter(|r| r.strategy == sa)
        .map(|mut r| {
            r.strategy = la.clone();
            r
        })
        .collect();
    records.extend(rb.into_iter().filter(|r| r.strategy == sb).map(|mut r| {
        r.strategy = lb.clone();
        r
    }));
    let family = match a.holm_family {
        HolmArg::Cell => HolmFamily::Cell,
        HolmArg::MetricComparison => HolmFamily::MetricComparison,
        HolmArg::Metric => HolmFamily::Metric,
        HolmArg::All => HolmFamily::All,
    };
    let rows = aggregate_and_compare(&records, &[Comparison { a: la, b: lb }], family, a.seed)?;
    write_json(&a.out, &rows)?;
    for r in &rows {
        if let Some(res) = &r.result {
            eprintln!(
                "N={:<5} {:<22} HL {:+.4} [{:+.4}, {:+.4}] p_holm {:.3e}{}",
                r.train_size,
                r.metric,
                res.hl_estimate,
                res.ci_low,
                res.ci_high,
                res.p_adjusted,
                if res.significant { " *" } else { "" }
            );
        }
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(i) = a.iterations {
        cfg.iterations = i;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let out = run_experiment(&cfg)?;
    write_records(&a.out_dir.join("records.csv"), &out.records)?;
    write_json(&a.out_dir.join("comparisons.json"), &out.comparisons)?;
    if !out.sensitivity.is_empty() {
        write_json(&a.out_dir.join("sensitivity.json"), &out.sensitivity)?;
    }
    if !out.graph_quality.is_empty() {
        write_graph_quality(&a.out_dir.join("graph_quality.csv"), &out.graph_quality)?;
    }
    let missing = out.records.iter().filter(|r| r.value.is_none()).count();
    eprintln!(
        "{}: {} records ({} missing), {} comparisons, {} sensitivity cells",
        cfg.dataset_name(),
        out.records.len(),
        missing,
        out.comparisons.len(),
        out.sensitivity.len()
    );
    Ok(())
}

fn bridge_check(a: BridgeCheckArgs) -> Result<()> {
    let mut client = BridgeClient::spawn(&a.bridge_cmd)?;
    let train = builtin("collider", 1e-2)?.sample(50, a.seed);
    let order = ["X3", "X2", "X1", "X0"];
    let plan = build_plan(Strategy::Vanilla, &order, PlanGraph::None)?;
    let synth = client.generate(&GenerationRequest {
        train: &train,
        plan: &plan,
        n_samples: 10,
        seed: a.seed,
        permutations: 1,
    })?;
    let model = client.model().to_string();
    client.shutdown()?;
    let report = serde_json::json!({
        "ok": true,
        "protocol": causagen::sampler::PROTOCOL_VERSION,
        "model": model,
        "rows": synth.n_rows(),
        "columns": synth.n_cols(),
    });
    println!("{report}");
    eprintln!("bridge {model:?} answered a generate request with {} rows", synth.n_rows());
    Ok(())
}
