//! `tier`: scripting front end for the reward engine.
//!
//! Every subcommand prints one JSON document on stdout. Exit status 0 means
//! the primary artifact was produced, 1 a domain failure (the document, when
//! there is one, still goes to stdout), 2 a usage error.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use tier_core::bench::{check_split, evaluate_dataset, load_dataset, load_rollouts, report_for, score_response, RewardMode};
use tier_core::exec::{echo_backend, execute_sequence, fixture_backend, Fixtures, ToolBackend};
use tier_core::ir::{parse_any, IrFormat, ParseOutcome, ToolCallSequence};
use tier_core::reward::GoldSpec;
use tier_core::rl::{default_epsilon, default_lambda_kl, total_loss, RlError};
use tier_core::schema::{load_registry, Dialect, ToolRegistry};
use tier_core::verify::verify_sequence;
use tier_core::{Config, RolloutGroup, TokenLogProbs};

const CONFIG_ENV: &str = "TIER_CONFIG";

#[derive(Parser)]
#[command(name = "tier", version, about = "Parse, verify, execute and score tool-call sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    Json,
    Xml,
    Direct,
}

impl FormatArg {
    fn ir(self) -> Option<IrFormat> {
        match self {
            FormatArg::Auto => None,
            FormatArg::Json => Some(IrFormat::Json),
            FormatArg::Xml => Some(IrFormat::Xml),
            FormatArg::Direct => Some(IrFormat::Direct),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DialectArg {
    Native,
    Toolace,
    Xlam,
}

impl From<DialectArg> for Dialect {
    fn from(d: DialectArg) -> Dialect {
        match d {
            DialectArg::Native => Dialect::Native,
            DialectArg::Toolace => Dialect::Toolace,
            DialectArg::Xlam => Dialect::Xlam,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Echo,
    Fixtures,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tier,
    Simple,
}

#[derive(clap::Args)]
struct RegistryArgs {
    /// Tool schema document.
    #[arg(long)]
    registry: PathBuf,
    #[arg(long, value_enum, default_value = "native")]
    dialect: DialectArg,
}

#[derive(clap::Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "echo")]
    backend: BackendArg,
    /// Fixture tables; required with `--backend fixtures`.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a tool-call payload or wrapped response into the canonical sequence document.
    Parse {
        #[arg(long, value_enum, default_value = "auto")]
        format: FormatArg,
        /// Input file; stdin when absent or `-`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Check a sequence against the tool schemas.
    Verify {
        #[command(flatten)]
        registry: RegistryArgs,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run a sequence on a backend and print the trace.
    Exec {
        /// Tool schemas for the echo backend; the fixture backend ships its own.
        #[arg(long)]
        registry: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "native")]
        dialect: DialectArg,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score one model response.
    Reward {
        #[command(flatten)]
        registry: RegistryArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Gold answer document.
        #[arg(long)]
        gold: PathBuf,
        /// Reward config; falls back to $TIER_CONFIG, then the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        response: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "tier")]
        mode: ModeArg,
    },
    /// Score a rollout set and report accuracy by depth.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        rollouts: PathBuf,
        #[command(flatten)]
        registry: RegistryArgs,
        #[arg(long)]
        fixtures: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Group-normalized advantages for a rewards document.
    Advantages {
        /// `{prompt_id: [reward, ...]}`; stdin when absent or `-`.
        #[arg(long)]
        rewards: Option<PathBuf>,
        #[arg(long, default_value_t = default_epsilon())]
        epsilon: f64,
    },
    /// Clipped surrogate plus KL loss over a token log-prob document.
    Loss {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Check that a train and an eval split share no tools.
    CheckSplit {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
        #[command(flatten)]
        registry: RegistryArgs,
    },
}

enum Failure {
    Usage(String),
    Domain { message: String, document: Option<Value> },
}

impl Failure {
    fn domain(message: impl ToString) -> Failure {
        Failure::Domain {
            message: message.to_string(),
            document: None,
        }
    }

    fn with_document(message: impl ToString, document: Value) -> Failure {
        Failure::Domain {
            message: message.to_string(),
            document: Some(document),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn read_text(path: Option<&Path>) -> Result<String, Failure> {
    match path {
        None => read_stdin(),
        Some(p) if p == Path::new("-") => read_stdin(),
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display()))),
    }
}

fn read_stdin() -> Result<String, Failure> {
    let mut s = String::new();
    std::io::stdin()
        .read_to_string(&mut s)
        .map_err(|e| Failure::Usage(format!("cannot read stdin: {e}")))?;
    Ok(s)
}

fn read_json(path: Option<&Path>) -> Result<Value, Failure> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::domain(format!("{}: {e}", describe(path))))
}

fn describe(path: Option<&Path>) -> String {
    path.map_or_else(|| "stdin".into(), |p| p.display().to_string())
}

fn registry(args: &RegistryArgs) -> Result<ToolRegistry, Failure> {
    load_registry_at(&args.registry, args.dialect)
}

fn load_registry_at(path: &Path, dialect: DialectArg) -> Result<ToolRegistry, Failure> {
    let text = read_text(Some(path))?;
    load_registry(&text, dialect.into()).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn fixtures(path: &Path) -> Result<Fixtures, Failure> {
    let text = read_text(Some(path))?;
    Fixtures::from_json(&text).map_err(|e| Failure::domain(format!("{}: {e}", path.display())))
}

fn backend(args: &BackendArgs, registry: Option<ToolRegistry>) -> Result<Box<dyn ToolBackend>, Failure> {
    match (args.backend, &args.fixtures) {
        (BackendArg::Fixtures, None) => Err(Failure::Usage("--backend fixtures needs --fixtures <path>".into())),
        (BackendArg::Fixtures, Some(path)) => Ok(Box::new(fixture_backend(fixtures(path)?))),
        (BackendArg::Echo, _) => match registry {
            Some(r) => Ok(Box::new(echo_backend(r))),
            None => Err(Failure::Usage("--backend echo needs --registry <path>".into())),
        },
    }
}

fn config(path: Option<&Path>) -> Result<Config, Failure> {
    let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(from_env) {
        None => Ok(Config::default()),
        Some(p) => {
            let text = read_text(Some(&p))?;
            Config::from_json(&text).map_err(|e| Failure::domain(format!("{}: {e}", p.display())))
        }
    }
}

/// Reads a stage input: a canonical sequence document (as printed by
/// `parse`), a wrapped model response, or a bare payload.
fn sequence_input(path: Option<&Path>) -> Result<ToolCallSequence, Failure> {
    let text = read_text(path)?;
    let outcome: ParseOutcome = match serde_json::from_str::<Value>(&text) {
        Ok(doc) if doc.get("calls").is_some_and(Value::is_array) => ToolCallSequence::from_document(&doc),
        _ => parse_any(&text, None),
    };
    outcome.map_err(parse_failure)
}

fn parse_failure(e: tier_core::ir::FormatError) -> Failure {
    Failure::with_document(&e, json!({ "error": e }))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("documents serialize")
}

fn cmd_parse(format: FormatArg, input: Option<&Path>) -> Outcome {
    let text = read_text(input)?;
    parse_any(&text, format.ir()).map(|seq| seq.to_document()).map_err(parse_failure)
}

fn cmd_verify(reg: &RegistryArgs, input: Option<&Path>) -> Outcome {
    let registry = registry(reg)?;
    let seq = sequence_input(input)?;
    Ok(to_value(&verify_sequence(&seq, &registry)))
}

fn cmd_exec(registry: Option<&Path>, dialect: DialectArg, args: &BackendArgs, input: Option<&Path>) -> Outcome {
    let registry = registry.map(|p| load_registry_at(p, dialect)).transpose()?;
    let backend = backend(args, registry)?;
    let seq = sequence_input(input)?;
    let trace = execute_sequence(&seq, backend.as_ref());
    let doc = to_value(&trace);
    if trace.all_succeeded {
        Ok(doc)
    } else {
        Err(Failure::with_document("at least one call failed", doc))
    }
}

fn cmd_reward(
    reg: &RegistryArgs,
    args: &BackendArgs,
    gold: &Path,
    config_path: Option<&Path>,
    response: Option<&Path>,
    mode: ModeArg,
) -> Outcome {
    let registry = registry(reg)?;
    let backend = backend(args, Some(registry.clone()))?;
    let gold: GoldSpec = serde_json::from_value(read_json(Some(gold))?)
        .map_err(|e| Failure::domain(format!("{}: {e}", gold.display())))?;
    let cfg = config(config_path)?;
    let response = read_text(response)?;
    let mode = match mode {
        ModeArg::Tier => RewardMode::Tier,
        ModeArg::Simple => RewardMode::Simple,
    };
    let scored = score_response(&response, &registry, backend.as_ref(), &gold, &cfg, mode);
    Ok(scored.breakdown.to_document())
}

fn cmd_evaluate(
    dataset: &Path,
    rollouts: &Path,
    reg: &RegistryArgs,
    fixtures_path: &Path,
    config_path: Option<&Path>,
) -> Outcome {
    let registry = registry(reg)?;
    let backend = fixture_backend(fixtures(fixtures_path)?);
    let cfg = config(config_path)?;
    let items = load_dataset(&read_text(Some(dataset))?, &registry).map_err(Failure::domain)?;
    let rollouts = load_rollouts(&read_text(Some(rollouts))?).map_err(Failure::domain)?;
    let results = evaluate_dataset(&items, &rollouts, &registry, &backend, &cfg).map_err(|e| {
        let doc = match &e {
            tier_core::bench::BenchError::OrphanRollouts { missing, unknown } => {
                Some(json!({ "error": "orphan_rollouts", "missing": missing, "unknown": unknown }))
            }
            _ => None,
        };
        Failure::Domain {
            message: e.to_string(),
            document: doc,
        }
    })?;
    Ok(report_for(&results).map_err(Failure::domain)?.to_document())
}

fn cmd_advantages(rewards: Option<&Path>, epsilon: f64) -> Outcome {
    let doc = read_json(rewards)?;
    let groups: Map<String, Value> = serde_json::from_value(doc)
        .map_err(|e| Failure::domain(format!("rewards document must map prompt ids to reward lists: {e}")))?;
    let mut out = Map::new();
    for (prompt_id, rewards) in groups {
        let rewards: Vec<f64> = serde_json::from_value(rewards)
            .map_err(|e| Failure::domain(format!("group `{prompt_id}`: {e}")))?;
        let group = RolloutGroup::new(prompt_id.clone(), rewards)
            .map_err(|e| Failure::domain(format!("group `{prompt_id}`: {e}")))?;
        out.insert(prompt_id, to_value(&group.advantages(epsilon)));
    }
    Ok(Value::Object(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LossDocument {
    #[serde(default = "default_clip")]
    clip_epsilon: f64,
    #[serde(default = "default_lambda_kl")]
    lambda_kl: f64,
    items: Vec<LossItem>,
}

fn default_clip() -> f64 {
    0.2
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LossItem {
    current: Vec<f64>,
    /// Defaults to `current` (one update per batch).
    old: Option<Vec<f64>>,
    reference: Vec<f64>,
    advantage: f64,
}

fn cmd_loss(input: Option<&Path>) -> Outcome {
    let doc: LossDocument =
        serde_json::from_value(read_json(input)?).map_err(|e| Failure::domain(format!("loss document: {e}")))?;
    let batch = doc
        .items
        .into_iter()
        .map(|item| {
            let lp = match item.old {
                Some(old) => TokenLogProbs::new(item.current, old, item.reference),
                None => TokenLogProbs::on_policy(item.current, item.reference),
            }?;
            Ok((lp, item.advantage))
        })
        .collect::<Result<Vec<_>, RlError>>()
        .map_err(Failure::domain)?;
    let report = total_loss(&batch, doc.clip_epsilon, doc.lambda_kl).map_err(Failure::domain)?;
    Ok(to_value(&report))
}

fn cmd_check_split(train: &Path, eval: &Path, reg: &RegistryArgs) -> Outcome {
    let registry = registry(reg)?;
    let train = load_dataset(&read_text(Some(train))?, &registry).map_err(Failure::domain)?;
    let eval = load_dataset(&read_text(Some(eval))?, &registry).map_err(Failure::domain)?;
    let report = check_split(&train, &eval);
    let doc = to_value(&report);
    if report.disjoint {
        Ok(doc)
    } else {
        Err(Failure::with_document("train and eval splits share tools", doc))
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Parse { format, input } => cmd_parse(format, input.as_deref()),
        Command::Verify { registry, input } => cmd_verify(&registry, input.as_deref()),
        Command::Exec {
            registry,
            dialect,
            backend,
            input,
        } => cmd_exec(registry.as_deref(), dialect, &backend, input.as_deref()),
        Command::Reward {
            registry,
            backend,
            gold,
            config,
            response,
            mode,
        } => cmd_reward(&registry, &backend, &gold, config.as_deref(), response.as_deref(), mode),
        Command::Evaluate {
            dataset,
            rollouts,
            registry,
            fixtures,
            config,
        } => cmd_evaluate(&dataset, &rollouts, &registry, &fixtures, config.as_deref()),
        Command::Advantages { rewards, epsilon } => cmd_advantages(rewards.as_deref(), epsilon),
        Command::Loss { input } => cmd_loss(input.as_deref()),
        Command::CheckSplit { train, eval, registry } => cmd_check_split(&train, &eval, &registry),
    }
}

fn emit(doc: &Value) {
    let text = serde_json::to_string_pretty(doc).expect("documents serialize");
    // A closed pipe downstream is not our failure.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(doc) => {
            emit(&doc);
            ExitCode::SUCCESS
        }
        Err(Failure::Domain { message, document }) => {
            if let Some(doc) = document {
                emit(&doc);
            }
            eprintln!("tier: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(message)) => {
            eprintln!("tier: {message}");
            ExitCode::from(2)
        }
    }
}
