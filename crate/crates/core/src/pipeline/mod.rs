//! End-to-end corpus construction: ingestion, stage orchestration,
//! sharded JSONL output and corpus statistics.

mod config;
mod io;
mod record;
mod run;
mod stats;

pub use config::{CurriculumConfig, PipelineConfig, Stages, DEFAULT_SHARD_SIZE};
pub use io::{
    ingest_pairs, ingest_schemas, read_corpus, read_records_lenient, schema_map, write_jsonl,
    LoadedSchema, NumberedRecords, Reject,
};
pub use record::{CorpusRecord, WireEdge, WireEpr};
pub use run::{
    run_pipeline, sample_examples, schema_registry, write_curriculum_csv, write_shards, RunSummary,
};
pub use stats::{report_stats, CorpusStats, DifficultySummary};
