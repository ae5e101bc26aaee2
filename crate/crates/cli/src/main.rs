//! `forge`: corpus construction and objective verification from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use forge_core::curriculum::{compute_difficulties, curriculum_trace};
use forge_core::deps::{Labeler, DEFAULT_TAU};
use forge_core::objectives::{perturb_entities, plan_objectives};
use forge_core::pipeline::{
    read_records_lenient, report_stats, run_pipeline, sample_examples, schema_registry,
    write_curriculum_csv, write_jsonl, CorpusRecord, PipelineConfig, Reject, WireEpr,
};
use forge_core::sdp::{train_demo, DemoConfig, TraceRow};
use forge_core::seed::derive_seed;
use forge_core::sql::{Clause, GrammarConfig};
use forge_core::{PretrainExample, Schema};
use log::{info, warn};

#[derive(Parser)]
#[command(name = "forge", version, about = "Schema-dependency pre-training corpus forge")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample SQL from the grammar and attach template questions.
    Sample(SampleArgs),
    /// Derive schema dependencies for question/SQL pairs.
    Label(LabelArgs),
    /// Attach masking and entity-perturbation plans.
    Objectives(ObjectivesArgs),
    /// Audit the curriculum schedule.
    Curriculum(CurriculumArgs),
    /// Train the toy SDP/EPR model and write its loss trace.
    TrainDemo(TrainDemoArgs),
    /// Print corpus statistics as JSON.
    Stats(StatsArgs),
    /// Run the full pipeline from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct SchemaArgs {
    /// Directory of schema JSON files.
    #[arg(long)]
    schemas: PathBuf,
    /// Skip multi-table composition.
    #[arg(long)]
    no_compose: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    schemas: SchemaArgs,
    #[arg(long)]
    count: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    max_joins: usize,
    /// Comma-separated clause families, e.g. select,where,group_by.
    #[arg(long, value_delimiter = ',', value_parser = parse_clause)]
    clauses: Option<Vec<Clause>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[command(flatten)]
    schemas: SchemaArgs,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
    /// Where to write rejected rows. Defaults to `<out>.rejects.jsonl`.
    #[arg(long)]
    rejects: Option<PathBuf>,
}

#[derive(Args)]
struct ObjectivesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    schemas: SchemaArgs,
    #[arg(long, default_value_t = 0.25)]
    mlm_ratio: f64,
    #[arg(long, default_value_t = 0.25)]
    value_prob: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurriculumArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    schemas: SchemaArgs,
    #[arg(long)]
    steps: u64,
    #[arg(long)]
    batch_size: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct TrainDemoArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    schemas: SchemaArgs,
    #[arg(long, default_value_t = 300)]
    steps: usize,
    #[arg(long, default_value_t = 0.5)]
    lr: f64,
    #[arg(long)]
    seed: u64,
    /// Use the first N records of the corpus.
    #[arg(long, default_value_t = 8)]
    examples: usize,
    #[arg(long)]
    trace: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, required = true, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[command(flatten)]
    schemas: SchemaArgs,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_clause(s: &str) -> Result<Clause, String> {
    Clause::from_name(s).ok_or_else(|| format!("unknown clause {s:?}"))
}

fn registry(args: &SchemaArgs) -> Result<(Vec<Schema>, BTreeMap<String, Schema>)> {
    schema_registry(&args.schemas, !args.no_compose)
        .with_context(|| format!("loading schemas from {}", args.schemas.display()))
}

fn to_example(
    record: &CorpusRecord,
    schemas: &BTreeMap<String, Schema>,
) -> std::result::Result<PretrainExample, String> {
    let schema = schemas
        .get(&record.schema_id)
        .ok_or_else(|| format!("unknown schema_id {:?}", record.schema_id))?;
    record.to_example(schema).map_err(|e| e.to_string())
}

/// A record with its schema-bound example.
type Bound = (CorpusRecord, PretrainExample);

/// Records of `path` that deserialize and bind to a schema, plus rejects.
fn load_corpus(
    path: &Path,
    schemas: &BTreeMap<String, Schema>,
) -> Result<(Vec<Bound>, Vec<Reject>)> {
    let (rows, mut rejects) =
        read_records_lenient(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::with_capacity(rows.len());
    for (line, record) in rows {
        match to_example(&record, schemas) {
            Ok(ex) => out.push((record, ex)),
            Err(reason) => rejects.push(Reject {
                line,
                example_id: Some(record.example_id.clone()),
                reason,
            }),
        }
    }
    rejects.sort_by_key(|r| r.line);
    Ok((out, rejects))
}

fn report_rejects(rejects: &[Reject]) -> ExitCode {
    for r in rejects {
        warn!("line {}: {}", r.line, r.reason);
    }
    if rejects.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} record(s) rejected", rejects.len());
        ExitCode::from(2)
    }
}

fn sample(args: SampleArgs) -> Result<ExitCode> {
    let (working, registry) = registry(&args.schemas)?;
    let mut grammar = GrammarConfig {
        max_joins: args.max_joins,
        ..GrammarConfig::default()
    };
    if let Some(clauses) = args.clauses {
        grammar.clauses = clauses.into_iter().chain([Clause::Select]).collect();
    }
    grammar.validate()?;
    let examples = sample_examples(&working, args.count, &grammar, args.seed)?;
    let records: Vec<CorpusRecord> = examples
        .iter()
        .map(|ex| CorpusRecord::from_example(ex, &registry[&ex.schema_id]))
        .collect();
    write_jsonl(&args.out, &records)?;
    info!("wrote {} samples to {}", records.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn label(args: LabelArgs) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&args.tau) {
        bail!("tau must lie in [0, 1]");
    }
    let (_, registry) = registry(&args.schemas)?;
    let (rows, rejects) = load_corpus(&args.pairs, &registry)?;
    let labeler = Labeler {
        tau: args.tau,
        ..Labeler::default()
    };
    let records: Vec<CorpusRecord> = rows
        .into_iter()
        .map(|(record, mut ex)| {
            let schema = &registry[&ex.schema_id];
            let (graph, stats) = labeler.label(&ex.question, &ex.sql, schema);
            ex.dependencies = Some(graph);
            ex.mention_stats = Some(stats);
            CorpusRecord {
                question_source: record.question_source,
                ..CorpusRecord::from_example(&ex, schema)
            }
        })
        .collect();
    write_jsonl(&args.out, &records)?;
    let rejects_path = args.rejects.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".rejects.jsonl");
        p.into()
    });
    write_jsonl(&rejects_path, &rejects)?;
    Ok(report_rejects(&rejects))
}

fn objectives(args: ObjectivesArgs) -> Result<ExitCode> {
    let (_, registry) = registry(&args.schemas)?;
    let (rows, rejects) = load_corpus(&args.corpus, &registry)?;
    let mut out = Vec::with_capacity(rows.len());
    for (mut record, ex) in rows {
        let schema = &registry[&ex.schema_id];
        record.mask_plan = Some(plan_objectives(
            &ex,
            schema,
            args.mlm_ratio,
            args.value_prob,
            args.seed,
        )?);
        let epr = perturb_entities(&ex, derive_seed(args.seed, &format!("epr:{}", ex.example_id)));
        record.epr = Some(WireEpr::from(&epr));
        out.push(record);
    }
    write_jsonl(&args.out, &out)?;
    Ok(report_rejects(&rejects))
}

fn curriculum(args: CurriculumArgs) -> Result<ExitCode> {
    let (_, registry) = registry(&args.schemas)?;
    let (rows, rejects) = load_corpus(&args.corpus, &registry)?;
    if rows.is_empty() {
        bail!("{} holds no usable records", args.corpus.display());
    }
    let examples: Vec<PretrainExample> = rows.iter().map(|(_, ex)| ex.clone()).collect();
    let ids: Vec<String> = examples.iter().map(|e| e.example_id.clone()).collect();
    let d = compute_difficulties(&examples, &registry)?;
    let trace = curriculum_trace(d, args.steps, args.batch_size, derive_seed(args.seed, "curriculum"))?;
    write_curriculum_csv(&args.trace, &trace, &ids)?;
    Ok(report_rejects(&rejects))
}

fn train(args: TrainDemoArgs) -> Result<ExitCode> {
    let (_, registry) = registry(&args.schemas)?;
    let (rows, rejects) = load_corpus(&args.corpus, &registry)?;
    let examples: Vec<PretrainExample> = rows
        .into_iter()
        .map(|(_, ex)| ex)
        .take(args.examples)
        .collect();
    let cfg = DemoConfig {
        steps: args.steps,
        lr: args.lr,
        seed: args.seed,
        ..DemoConfig::default()
    };
    let outcome = train_demo(&examples, &registry, &cfg)?;
    let mut text = String::from(TraceRow::CSV_HEADER);
    text.push('\n');
    for row in &outcome.trace {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    fs::write(&args.trace, text).with_context(|| format!("writing {}", args.trace.display()))?;
    println!("final edge F1 {:.4}", outcome.final_edge_f1);
    Ok(report_rejects(&rejects))
}

fn stats(args: StatsArgs) -> Result<ExitCode> {
    let (_, registry) = registry(&args.schemas)?;
    let mut examples = Vec::new();
    let mut rejects = Vec::new();
    for path in &args.corpus {
        let (rows, bad) = load_corpus(path, &registry)?;
        examples.extend(rows.into_iter().map(|(_, ex)| ex));
        rejects.extend(bad);
    }
    let mut stats = report_stats(&examples);
    stats.rejected = rejects.len();
    let text = serde_json::to_string_pretty(&stats)? + "\n";
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(report_rejects(&rejects))
}

fn run(config: &Path) -> Result<ExitCode> {
    let cfg = PipelineConfig::load(config)?;
    let summary = run_pipeline(&cfg)?;
    eprintln!(
        "{} accepted, {} rejected, {} shard(s) in {}",
        summary.accepted,
        summary.rejected,
        summary.shards.len(),
        cfg.out_dir.display()
    );
    Ok(ExitCode::from(summary.exit_code() as u8))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FORGE_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(a) => sample(a),
        Command::Label(a) => label(a),
        Command::Objectives(a) => objectives(a),
        Command::Curriculum(a) => curriculum(a),
        Command::TrainDemo(a) => train(a),
        Command::Stats(a) => stats(a),
        Command::Run { config } => run(&config),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
