use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rand::Rng;

use super::config::PipelineConfig;
use super::io::{ingest_pairs, ingest_schemas, schema_map, write_jsonl, Reject};
use super::record::{CorpusRecord, WireEpr};
use super::stats::{report_stats, CorpusStats};
use crate::curriculum::{compute_difficulties, curriculum_trace, CurriculumStep};
use crate::deps::Labeler;
use crate::error::{ForgeError, Result};
use crate::model::{PretrainExample, Provenance, Question, Schema};
use crate::objectives::{perturb_entities, plan_objectives};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sql::{compose_multitable, synthesize_question, GrammarConfig, SqlSampler};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub stats: CorpusStats,
    pub accepted: usize,
    pub rejected: usize,
    pub shards: Vec<PathBuf>,
}

impl RunSummary {
    /// Zero for a clean run, 2 when rows were rejected or nothing was
    /// produced.
    pub fn exit_code(&self) -> i32 {
        if self.rejected > 0 || self.accepted == 0 {
            2
        } else {
            0
        }
    }
}

fn stage(name: &'static str, record: &str) -> impl FnOnce(ForgeError) -> ForgeError {
    let record = record.to_string();
    move |e| ForgeError::Stage {
        stage: name,
        record,
        source: Box::new(e),
    }
}

fn schema_of<'a>(schemas: &'a BTreeMap<String, Schema>, ex: &PretrainExample) -> &'a Schema {
    &schemas[&ex.schema_id]
}

/// Loads a schema directory. Returns the sampling set (composed when
/// `compose` is set) and a registry holding both the originals and the
/// composed schemas.
pub fn schema_registry(dir: &Path, compose: bool) -> Result<(Vec<Schema>, BTreeMap<String, Schema>)> {
    let originals: Vec<Schema> = ingest_schemas(dir)?.into_iter().map(|l| l.schema).collect();
    info!("loaded {} schemas", originals.len());
    let working = if compose {
        compose_multitable(&originals)
    } else {
        originals.clone()
    };
    let mut registry = schema_map(&originals);
    for s in &working {
        registry.entry(s.schema_id.clone()).or_insert_with(|| s.clone());
    }
    Ok((working, registry))
}

/// Grammar-sampled examples with template questions.
pub fn sample_examples(
    schemas: &[Schema],
    count: usize,
    grammar: &GrammarConfig,
    seed: u64,
) -> Result<Vec<PretrainExample>> {
    if count > 0 && schemas.is_empty() {
        return Err(ForgeError::contract("sampling needs at least one schema"));
    }
    let mut sampler = SqlSampler::new(GrammarConfig {
        seed: derive_seed(seed, "sampler"),
        ..grammar.clone()
    })?;
    let mut pick = rng_from_seed(derive_seed(seed, "schema-pick"));
    (0..count)
        .map(|k| {
            let id = format!("s{k:07}");
            let schema = &schemas[pick.gen_range(0..schemas.len())];
            let sql = sampler.sample(schema).map_err(stage("sample", &id))?;
            let question = Question::new(synthesize_question(&sql, schema));
            Ok(PretrainExample::new(
                id,
                schema.schema_id.clone(),
                question,
                sql,
                Provenance::Sampled,
            ))
        })
        .collect()
}

fn clear_shards(dir: &Path) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| ForgeError::io(dir, e))? {
        let path = entry.map_err(|e| ForgeError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        let is_shard = name.len() == "corpus-00000.jsonl".len()
            && name.starts_with("corpus-")
            && name.ends_with(".jsonl")
            && name[7..12].bytes().all(|b| b.is_ascii_digit());
        if is_shard {
            fs::remove_file(&path).map_err(|e| ForgeError::io(&path, e))?;
        }
    }
    Ok(())
}

/// Writes `corpus-NNNNN.jsonl` shards of at most `shard_size` records.
/// An empty corpus still gets one empty shard.
pub fn write_shards(dir: &Path, records: &[CorpusRecord], shard_size: usize) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| ForgeError::io(dir, e))?;
    clear_shards(dir)?;
    let chunks: Vec<&[CorpusRecord]> = if records.is_empty() {
        vec![&[]]
    } else {
        records.chunks(shard_size).collect()
    };
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| {
            let path = dir.join(format!("corpus-{i:05}.jsonl"));
            write_jsonl(&path, chunk)?;
            Ok(path)
        })
        .collect()
}

/// CSV audit of a curriculum trace; batches are written as `;`-joined ids.
pub fn write_curriculum_csv(path: &Path, trace: &[CurriculumStep], ids: &[String]) -> Result<()> {
    let csv_err = |e: csv::Error| ForgeError::contract(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["t", "competence", "pool_size", "batch"])
        .map_err(csv_err)?;
    for step in trace {
        let batch: Vec<&str> = step.batch.iter().map(|&i| ids[i].as_str()).collect();
        w.write_record([
            step.t.to_string(),
            step.competence.to_string(),
            step.pool_size.to_string(),
            batch.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| ForgeError::io(path, e))
}

/// compose, sample and/or ingest, label, difficulty, objectives, emit.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let (working, schemas) = schema_registry(&cfg.schemas, cfg.stages.compose)?;

    let mut corpus = if cfg.stages.sample {
        sample_examples(&working, cfg.sample_count, &cfg.grammar, cfg.seed)?
    } else {
        Vec::new()
    };
    info!("sampled {} examples", corpus.len());
    let mut rejects: Vec<Reject> = Vec::new();
    if let Some(pairs) = &cfg.pairs {
        let (real, bad) = ingest_pairs(pairs, &schemas)?;
        info!("ingested {} pairs, rejected {}", real.len(), bad.len());
        corpus.extend(real);
        rejects = bad;
    }

    if cfg.stages.label {
        let labeler = Labeler {
            tau: cfg.tau,
            ..Labeler::default()
        };
        for ex in &mut corpus {
            let (graph, stats) = labeler.label(&ex.question, &ex.sql, schema_of(&schemas, ex));
            ex.dependencies = Some(graph);
            ex.mention_stats = Some(stats);
        }
    }

    if cfg.stages.difficulty && !corpus.is_empty() {
        let d = compute_difficulties(&corpus, &schemas).map_err(stage("difficulty", "*"))?;
        for (ex, d) in corpus.iter_mut().zip(d) {
            ex.difficulty = Some(d);
        }
    }

    let mut records = Vec::with_capacity(corpus.len());
    for ex in &corpus {
        let schema = schema_of(&schemas, ex);
        ex.validate(schema).map_err(stage("emit", &ex.example_id))?;
        let mut record = CorpusRecord::from_example(ex, schema);
        if cfg.stages.objectives {
            let plan = plan_objectives(ex, schema, cfg.mlm_ratio, cfg.value_prob, cfg.seed)
                .map_err(stage("objectives", &ex.example_id))?;
            let epr = perturb_entities(ex, derive_seed(cfg.seed, &format!("epr:{}", ex.example_id)));
            record.mask_plan = Some(plan);
            record.epr = Some(WireEpr::from(&epr));
        }
        records.push(record);
    }

    let shards = write_shards(&cfg.out_dir, &records, cfg.shard_size)?;
    write_jsonl(&cfg.out_dir.join("rejects.jsonl"), &rejects)?;
    if let Some(c) = &cfg.curriculum {
        if corpus.iter().all(|e| e.difficulty.is_some()) && !corpus.is_empty() {
            let d: Vec<f64> = corpus.iter().filter_map(|e| e.difficulty).collect();
            let ids: Vec<String> = corpus.iter().map(|e| e.example_id.clone()).collect();
            let trace = curriculum_trace(d, c.steps, c.batch_size, derive_seed(cfg.seed, "curriculum"))?;
            write_curriculum_csv(&cfg.out_dir.join("curriculum.csv"), &trace, &ids)?;
        }
    }

    let mut stats = report_stats(&corpus);
    stats.rejected = rejects.len();
    let stats_path = cfg.out_dir.join("stats.json");
    let text = serde_json::to_string_pretty(&stats).map_err(|e| ForgeError::contract(e.to_string()))?;
    fs::write(&stats_path, text + "\n").map_err(|e| ForgeError::io(&stats_path, e))?;
    info!(
        "wrote {} records in {} shard(s) to {}",
        records.len(),
        shards.len(),
        cfg.out_dir.display()
    );
    Ok(RunSummary {
        stats,
        accepted: records.len(),
        rejected: rejects.len(),
        shards,
    })
}
