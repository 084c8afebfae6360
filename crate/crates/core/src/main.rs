use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fdss::data::ImputePolicy;
use fdss::evaluation::{crisp_evaluate, evaluate, Evaluation, VotePolicy};
use fdss::inference::{FallbackPolicy, InputValue};
use fdss::pipeline::{load_path, train, Artifact, PipelineConfig, SelectionTable};
use fdss::selection::SelectionStrategy;
use fdss::service::{router, Engine};
use fdss::Error;

/// Rough-set rule mining and weighted fuzzy inference for coronary artery
/// disease decision support. Every flag can also be set through an
/// `FDSS_*` environment variable.
#[derive(Parser)]
#[command(name = "fdss", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a rule base and write the artifact.
    Train(TrainArgs),
    /// Score an artifact on a data file.
    Eval(EvalArgs),
    /// Run one patient through the rule base.
    Diagnose(DiagnoseArgs),
    /// Serve the HTTP API (and optionally a static UI).
    Serve(ServeArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, env = "FDSS_DATA")]
    data: PathBuf,
    #[arg(long, env = "FDSS_SCHEMA", default_value = "uci-heart-14")]
    schema: String,
    #[arg(long, env = "FDSS_OUT")]
    out: PathBuf,
    #[arg(long, env = "FDSS_MIN_SUPPORT", default_value_t = 2)]
    min_support: usize,
    #[arg(long, env = "FDSS_SEED", default_value_t = 42)]
    seed: u64,
    /// Training fraction; omit to train on every object.
    #[arg(long, env = "FDSS_SPLIT")]
    split: Option<f64>,
    /// drop | mode-median
    #[arg(long, env = "FDSS_IMPUTE", default_value = "mode-median")]
    impute: ImputePolicy,
    /// complete-cases | training
    #[arg(long, env = "FDSS_SELECTION_TABLE", default_value = "complete-cases")]
    selection_table: SelectionTable,
    /// per-class | joint
    #[arg(long, env = "FDSS_SELECTION_STRATEGY", default_value = "per-class")]
    selection_strategy: SelectionStrategy,
    /// Greedy tie orders tried when the rule table is too wide for exhaustive search.
    #[arg(long, env = "FDSS_PERMUTATIONS", default_value_t = 1)]
    permutations: usize,
    /// Spread as a fraction of the smallest cut gap.
    #[arg(long, env = "FDSS_SPREAD", default_value_t = 0.25)]
    spread: f64,
    #[arg(long, env = "FDSS_THRESHOLD", default_value_t = 50.0)]
    threshold: f64,
    #[arg(long, env = "FDSS_SAMPLES", default_value_t = 1001)]
    samples: usize,
    /// passthrough | majority
    #[arg(long, env = "FDSS_POLICY", default_value = "passthrough")]
    policy: FallbackPolicy,
    /// The data file starts with a header line.
    #[arg(long, env = "FDSS_HEADER")]
    header: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, env = "FDSS_ARTIFACT")]
    artifact: PathBuf,
    #[arg(long, env = "FDSS_DATA")]
    data: PathBuf,
    /// Defaults to the artifact's threshold.
    #[arg(long, env = "FDSS_THRESHOLD")]
    threshold: Option<f64>,
    /// Defaults to the artifact's policy.
    #[arg(long, env = "FDSS_POLICY")]
    policy: Option<FallbackPolicy>,
    #[arg(long, env = "FDSS_HEADER")]
    header: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long, env = "FDSS_ARTIFACT")]
    artifact: PathBuf,
    /// name=value; `?` or `null` marks a missing value.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "FDSS_ARTIFACT")]
    artifact: PathBuf,
    #[arg(long, env = "FDSS_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "FDSS_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory of built UI assets.
    #[arg(long = "static", env = "FDSS_STATIC")]
    static_dir: Option<PathBuf>,
}

#[derive(Serialize)]
struct EvalReport {
    dataset: String,
    threshold: f64,
    policy: FallbackPolicy,
    fuzzy: Evaluation,
    crisp: Evaluation,
}

fn row(name: &str, e: &Evaluation) -> String {
    let show = |v: Option<f64>| v.map_or_else(|| "undef".to_string(), |x| format!("{x:.3}"));
    let c = &e.confusion;
    format!(
        "{name:<8} {:>8} {:>11} {:>11} {:>8}   {:>3} {:>3} {:>3} {:>3} {:>3}",
        show(e.metrics.accuracy),
        show(e.metrics.sensitivity),
        show(e.metrics.specificity),
        show(e.metrics.coverage),
        c.tp,
        c.tn,
        c.fp,
        c.fn_,
        c.uncovered
    )
}

fn run_train(args: TrainArgs) -> Result<(), Error> {
    let mut config = PipelineConfig {
        data: args.data,
        schema: args.schema,
        header: args.header,
        impute: args.impute,
        split: args.split,
        seed: args.seed,
        min_support: args.min_support,
        selection_table: args.selection_table,
        threshold: args.threshold,
        fallback: args.policy,
        ..PipelineConfig::default()
    };
    config.spread.factor = args.spread;
    config.selection.seed = args.seed;
    config.selection.strategy = args.selection_strategy;
    config.selection.permutations = args.permutations;
    config.inference.samples = args.samples;
    let trained = train(&config)?;
    println!("{}", trained.artifact.stats);
    trained.artifact.save(&args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), Error> {
    let artifact = Artifact::load(&args.artifact)?;
    let table = load_path(&args.data, &artifact.schema, args.header)?;
    let threshold = args.threshold.unwrap_or(artifact.rulebase.threshold);
    let policy = args.policy.unwrap_or(artifact.config.fallback);
    let fuzzy = evaluate(&artifact.rulebase, &table, threshold, policy, artifact.config.inference)?;
    let crisp = crisp_evaluate(&artifact.rules, &table, VotePolicy::TieYes)?;
    let report = EvalReport {
        dataset: args.data.display().to_string(),
        threshold,
        policy,
        fuzzy,
        crisp,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?);
    } else {
        println!("{} ({} objects, threshold {}, policy {:?})", report.dataset, report.fuzzy.objects, threshold, policy);
        println!("method   accuracy sensitivity specificity coverage    tp  tn  fp  fn unc");
        println!("{}", row("fdss", &report.fuzzy));
        println!("{}", row("crisp", &report.crisp));
    }
    Ok(())
}

fn parse_assignment(text: &str) -> Result<(String, Option<InputValue>), Error> {
    let (name, value) = text.split_once('=').ok_or_else(|| Error::Input {
        attribute: text.to_string(),
        message: "expected NAME=VALUE".into(),
    })?;
    let value = value.trim();
    let parsed = match value {
        "?" | "null" | "" => None,
        v => Some(InputValue::Label(v.to_string())),
    };
    Ok((name.trim().to_string(), parsed))
}

fn run_diagnose(args: DiagnoseArgs) -> Result<(), Error> {
    let engine = Engine::new(Artifact::load(&args.artifact)?);
    let values: BTreeMap<String, Option<InputValue>> =
        args.set.iter().map(|s| parse_assignment(s)).collect::<Result<_, _>>()?;
    let input = engine.input(&values)?;
    let response = engine.diagnose(&input)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&response).map_err(|e| Error::Io(e.to_string()))?);
        return Ok(());
    }
    match response.percentage {
        Some(p) => println!("percentage {p:.2}"),
        None => println!("percentage none (no rule fired)"),
    }
    println!("label      {}", response.label.as_str());
    let texts: BTreeMap<usize, String> = engine.rules().into_iter().map(|r| (r.id, r.text)).collect();
    for a in &response.activations {
        println!(
            "  rule {:>4}  activation {:.4}  weight {:.4}  {}",
            a.rule_id,
            a.activation,
            a.weight,
            texts.get(&a.rule_id).map_or("", String::as_str)
        );
    }
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<(), Error> {
    let engine = Arc::new(Engine::new(Artifact::load(&args.artifact)?));
    let app = router(engine, args.static_dir);
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await
    })?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Diagnose(a) => run_diagnose(a),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
