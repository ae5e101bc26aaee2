use std::fs;
use std::path::{Path, PathBuf};

use forge_core::pipeline::{
    ingest_pairs, ingest_schemas, read_corpus, report_stats, run_pipeline, schema_map,
    PipelineConfig, Stages,
};
use forge_core::{ForgeError, PretrainExample};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn config(out: &Path, pairs: bool, count: usize) -> PipelineConfig {
    PipelineConfig {
        seed: 7,
        schemas: fixtures().join("schemas"),
        pairs: pairs.then(|| fixtures().join("pairs.jsonl")),
        out_dir: out.to_path_buf(),
        sample_count: count,
        stages: Stages::default(),
        grammar: Default::default(),
        tau: 0.3,
        mlm_ratio: 0.25,
        value_prob: 0.25,
        curriculum: None,
        shard_size: 50_000,
    }
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn schemas_load_in_file_order() {
    let loaded = ingest_schemas(&fixtures().join("schemas")).unwrap();
    let ids: Vec<&str> = loaded.iter().map(|l| l.schema.schema_id.as_str()).collect();
    assert_eq!(ids, ["music", "school", "weather"]);
}

#[test]
fn duplicate_schema_id_names_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"schema_id":"x","tables":[{"name":"t","columns":[{"name":"c","type":"text"}]}]}"#;
    write(dir.path(), "a.json", body);
    write(dir.path(), "b.json", body);
    let err = ingest_schemas(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, ForgeError::DuplicateSchema { .. }));
    assert!(msg.contains("a.json") && msg.contains("b.json"), "{msg}");
}

#[test]
fn non_numeric_value_in_number_column_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "a.json",
        r#"{"schema_id":"x","tables":[{"name":"t","columns":[{"name":"c","type":"number","values":["ten"]}]}]}"#,
    );
    assert!(matches!(
        ingest_schemas(dir.path()).unwrap_err(),
        ForgeError::InvalidSchema { .. }
    ));
}

#[test]
fn malformed_json_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", "{\n  \"schema_id\": \"x\",\n  \"tables\": [,]\n}");
    match ingest_schemas(dir.path()).unwrap_err() {
        ForgeError::Json { line, path, .. } => {
            assert_eq!(line, 3);
            assert!(path.ends_with("a.json"));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn pairs_split_into_examples_and_rejects() {
    let schemas = ingest_schemas(&fixtures().join("schemas")).unwrap();
    let map = schema_map(schemas.iter().map(|l| &l.schema));
    let (examples, rejects) = ingest_pairs(&fixtures().join("pairs.jsonl"), &map).unwrap();
    assert_eq!(examples.len() + rejects.len(), 8);
    assert_eq!(rejects.len(), 2);
    assert!(rejects[0].reason.contains("unknown column"), "{:?}", rejects[0]);
    assert_eq!(rejects[0].line, 7);
    assert!(rejects[1].reason.contains("unknown schema_id"));
}

#[test]
fn malformed_and_duplicate_rows_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let schemas = ingest_schemas(&fixtures().join("schemas")).unwrap();
    let map = schema_map(schemas.iter().map(|l| &l.schema));
    let row = r#"{"example_id":"a","schema_id":"weather","question":"q","sql":"SELECT region FROM station"}"#;
    write(dir.path(), "p.jsonl", &format!("{row}\nnot json\n\n{row}\n"));
    let (examples, rejects) = ingest_pairs(&dir.path().join("p.jsonl"), &map).unwrap();
    assert_eq!(examples.len(), 1);
    assert_eq!(rejects.iter().map(|r| r.line).collect::<Vec<_>>(), [2, 4]);
}

#[test]
fn sampling_run_labels_and_scores_every_record() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_pipeline(&config(dir.path(), false, 100)).unwrap();
    assert_eq!(summary.accepted, 100);
    assert_eq!(summary.exit_code(), 0);
    let records = read_corpus(&dir.path().join("corpus-00000.jsonl")).unwrap();
    assert_eq!(records.len(), 100);
    for r in &records {
        assert!(r.dependencies.is_some());
        assert!(r.difficulty.is_some_and(|d| (0.0..=1.0).contains(&d)));
        assert!(r.mask_plan.is_some() && r.epr.is_some());
        assert_eq!(r.question_source.as_deref(), Some("template"));
    }
    let edges: usize = records.iter().map(|r| r.dependencies.as_ref().unwrap().len()).sum();
    assert_eq!(summary.stats.histogram.values().sum::<usize>(), edges);
    assert_eq!(summary.stats.edges, edges);
    assert!(dir.path().join("stats.json").is_file());
    assert_eq!(fs::read_to_string(dir.path().join("rejects.jsonl")).unwrap(), "");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&config(a.path(), true, 300)).unwrap();
    run_pipeline(&config(b.path(), true, 300)).unwrap();
    for name in ["corpus-00000.jsonl", "rejects.jsonl", "stats.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn labeling_toggle_leaves_records_bare() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), false, 20);
    cfg.stages.label = false;
    let summary = run_pipeline(&cfg).unwrap();
    assert_eq!(summary.stats.histogram.values().sum::<usize>(), 0);
    let text = fs::read_to_string(dir.path().join("corpus-00000.jsonl")).unwrap();
    assert!(!text.contains("\"dependencies\""));
}

#[test]
fn rejects_give_warning_status_and_shards_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), true, 10);
    cfg.shard_size = 7;
    cfg.curriculum = Some(forge_core::pipeline::CurriculumConfig {
        steps: 5,
        batch_size: 4,
    });
    let summary = run_pipeline(&cfg).unwrap();
    assert_eq!(summary.accepted, 16);
    assert_eq!(summary.rejected, 2);
    assert_eq!(summary.exit_code(), 2);
    let names: Vec<String> = summary
        .shards
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["corpus-00000.jsonl", "corpus-00001.jsonl", "corpus-00002.jsonl"]);
    let rejects = fs::read_to_string(dir.path().join("rejects.jsonl")).unwrap();
    assert_eq!(rejects.lines().count(), 2);
    let trace = fs::read_to_string(dir.path().join("curriculum.csv")).unwrap();
    assert_eq!(trace.lines().count(), 7);
    assert!(trace.starts_with("t,competence,pool_size,batch"));
}

#[test]
fn zero_valid_records_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("bad.jsonl");
    fs::write(&pairs, "{\"example_id\":\"x\",\"schema_id\":\"nope\",\"question\":\"q\",\"sql\":\"SELECT a FROM b\"}\n").unwrap();
    let mut cfg = config(&dir.path().join("out"), false, 0);
    cfg.pairs = Some(pairs);
    let summary = run_pipeline(&cfg).unwrap();
    assert_eq!(summary.accepted, 0);
    assert_eq!(summary.exit_code(), 2);
    assert_eq!(fs::read_to_string(dir.path().join("out/corpus-00000.jsonl")).unwrap(), "");
}

#[test]
fn config_requires_seed_and_existing_paths() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schemas": "s", "out_dir": "o", "sample_count": 3}"#);
    let err = PipelineConfig::load(&dir.path().join("c.json")).unwrap_err();
    assert!(err.to_string().contains("seed"), "{err}");
    write(dir.path(), "d.json", r#"{"seed": 1, "schemas": "missing", "out_dir": "o", "sample_count": 3}"#);
    assert!(PipelineConfig::load(&dir.path().join("d.json")).is_err());
    let cfg = PipelineConfig::load(&fixtures().join("run.json")).unwrap();
    assert!(cfg.schemas.ends_with("fixtures/schemas"));
}

#[test]
fn wire_records_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&config(dir.path(), true, 50)).unwrap();
    let schemas = ingest_schemas(&fixtures().join("schemas")).unwrap();
    let mut map = schema_map(schemas.iter().map(|l| &l.schema));
    for s in forge_core::sql::compose_multitable(&schemas.iter().map(|l| l.schema.clone()).collect::<Vec<_>>()) {
        map.entry(s.schema_id.clone()).or_insert(s);
    }
    let records = read_corpus(&dir.path().join("corpus-00000.jsonl")).unwrap();
    let examples: Vec<PretrainExample> = records
        .iter()
        .map(|r| r.to_example(&map[&r.schema_id]).unwrap())
        .collect();
    for (r, ex) in records.iter().zip(&examples) {
        let back = forge_core::pipeline::CorpusRecord::from_example(ex, &map[&r.schema_id]);
        assert_eq!(back.sql, r.sql);
        assert_eq!(back.dependencies, r.dependencies);
    }
    let stats = report_stats(&examples);
    assert_eq!(stats.examples, 56);
}

#[test]
fn stats_of_worked_example_and_empty_corpus() {
    let empty = report_stats(&[]);
    assert_eq!(empty.examples, 0);
    assert!(empty.histogram.values().all(|&c| c == 0));
    assert_eq!(empty.histogram.len(), 17);
    assert!(empty.difficulty.is_none());

    let schemas = ingest_schemas(&fixtures().join("schemas")).unwrap();
    let map = schema_map(schemas.iter().map(|l| &l.schema));
    let (mut examples, _) = ingest_pairs(&fixtures().join("pairs.jsonl"), &map).unwrap();
    examples.truncate(1);
    let labeler = forge_core::deps::Labeler::default();
    let ex = &mut examples[0];
    let (g, s) = labeler.label(&ex.question, &ex.sql, &map["school"]);
    ex.dependencies = Some(g);
    ex.mention_stats = Some(s);
    let stats = report_stats(&examples);
    assert!(stats.histogram["SELECT-Agg"] >= 1);
}
