use std::fs;
use std::path::{Path, PathBuf};

use biokg::config::{PipelineConfig, Stage};
use biokg::kg_store::{self, MANIFEST_FILE};
use biokg::pipeline::{self, STAGES_DIR};
use biokg::Error;

fn fixture_config(out: &Path) -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.conf");
    let mut cfg = PipelineConfig::load(&path).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn full_run_produces_a_readable_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("kg");
    let report = pipeline::run(&fixture_config(&out), false).unwrap();
    assert_eq!(report.stages_run, Stage::ALL.to_vec());
    let kg = kg_store::read_kg(&out).unwrap();
    assert_eq!(kg.manifest.dataset_id, report.manifest.dataset_id);
    assert!(!kg.concepts.is_empty() && !kg.terms.is_empty() && !kg.triplets.is_empty());
    // Every stage artifact is registered in the manifest with its hash.
    for a in &kg.manifest.artifacts {
        assert!(a.name.starts_with(STAGES_DIR));
        let bytes = fs::read(out.join(&a.name)).unwrap();
        assert_eq!(biokg::util::sha256_hex(&bytes), a.sha256);
    }
    let first_line = |name: &str| fs::read_to_string(out.join(name)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(
        first_line("stages/clusters.tsv"),
        format!("# dataset_id={}", report.manifest.dataset_id)
    );
}

#[test]
fn all_stages_off_writes_only_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(tmp.path());
    cfg.set_all_stages(false);
    let report = pipeline::run(&cfg, false).unwrap();
    assert!(report.stages_run.is_empty());
    assert_eq!(listing(tmp.path()), [MANIFEST_FILE]);
}

#[test]
fn dry_run_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("kg");
    let report = pipeline::run(&fixture_config(&out), true).unwrap();
    assert!(report.dry_run);
    assert!(!out.exists());
}

#[test]
fn seed_changes_the_dataset_id() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(tmp.path());
    let a = pipeline::manifest_for(&cfg).unwrap().dataset_id;
    cfg.seed += 1;
    let b = pipeline::manifest_for(&cfg).unwrap().dataset_id;
    assert_ne!(a, b);
}

#[test]
fn stage_requirements_are_enforced() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config(tmp.path());
    cfg.set_all_stages(false);
    cfg.stages.insert(Stage::Train, true);
    let err = pipeline::run(&cfg, false).unwrap_err();
    assert!(err.is_validation(), "{err}");
    assert!(!tmp.path().join(MANIFEST_FILE).exists());
}

#[test]
fn bad_record_names_the_stage_and_file() {
    let tmp = tempfile::tempdir().unwrap();
    let broken = tmp.path().join("corpus.jsonl");
    fs::write(&broken, "{\"doc_id\":\"a\",\"text\":\"Fever.\"}\nnot json\n").unwrap();
    let mut cfg = fixture_config(&tmp.path().join("kg"));
    cfg.inputs.corpus = broken;
    let err = pipeline::run(&cfg, false).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(*stage, "ingest");
            assert!(source.to_string().contains("corpus.jsonl:2"), "{source}");
        }
        other => panic!("unexpected error {other}"),
    }
    assert!(!tmp.path().join("kg").exists());
}

#[test]
fn tampered_dataset_fails_closed() {
    let tmp = tempfile::tempdir().unwrap();
    pipeline::run(&fixture_config(tmp.path()), false).unwrap();
    let rel = tmp.path().join(kg_store::RELATIONS_FILE);
    let text = fs::read_to_string(&rel).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    fs::write(&rel, cut[..cut.len() - 1].join("\n") + "\n").unwrap();
    assert!(kg_store::read_kg(tmp.path()).is_err());
}
