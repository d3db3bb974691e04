use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biokg::config::{PipelineConfig, Stage};
use biokg::corpus::Corpus;
use biokg::error::Error;
use biokg::{kg_store, pipeline, stats, util};
use clap::{Parser, Subcommand};

const EXIT_VALIDATION: u8 = 1;
const EXIT_STAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "biokg", version, about = "Build a bilingual biomedical knowledge graph from a corpus")]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "pipeline.conf")]
    config: PathBuf,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Validate inputs and run every stage without writing anything.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check the corpus and dictionary, then print counts.
    Ingest,
    /// Dictionary-annotate the corpus into BIO tags.
    Annotate,
    /// Pick one sentence per seed term for tagger training.
    Sample,
    /// Filter tagger-discovered terms.
    CleanTerms,
    /// Group terms into concepts.
    Cluster,
    /// Assign semantic types to concepts.
    Type,
    /// Relation extraction stages.
    Relations {
        #[command(subcommand)]
        step: RelationStep,
    },
    /// Score and filter candidate translations.
    TranslateFilter,
    /// Run every stage enabled in the config and write the dataset.
    Write,
    /// Print composition, term and coverage tables for a dataset.
    Stats {
        dir: PathBuf,
        /// Also write the tables as TSV into this directory.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Check a dataset directory against its manifest.
    Validate { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
enum RelationStep {
    BuildBags,
    Train,
    Predict,
}

enum Failure {
    Validation(Error),
    Stage(Error),
}

impl Failure {
    fn classify(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e)
        } else {
            Failure::Stage(e)
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let mut cfg = PipelineConfig::load(&cli.config).map_err(Failure::Validation)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn target_stage(command: &Command) -> Option<Stage> {
    Some(match command {
        Command::Annotate => Stage::Annotate,
        Command::Sample => Stage::Sample,
        Command::CleanTerms => Stage::Discover,
        Command::Cluster => Stage::Cluster,
        Command::Type => Stage::Type,
        Command::Relations { step } => match step {
            RelationStep::BuildBags => Stage::Bags,
            RelationStep::Train => Stage::Train,
            RelationStep::Predict => Stage::Predict,
        },
        Command::TranslateFilter => Stage::Translate,
        _ => return None,
    })
}

fn run_pipeline(cfg: &PipelineConfig, dry_run: bool) -> Result<(), Failure> {
    cfg.validate().map_err(Failure::Validation)?;
    let report = pipeline::run(cfg, dry_run).map_err(Failure::classify)?;
    let names: Vec<&str> = report.stages_run.iter().map(|s| s.name()).collect();
    println!("dataset_id\t{}", report.manifest.dataset_id);
    println!("stages\t{}", if names.is_empty() { "-".to_string() } else { names.join(",") });
    for (k, v) in &report.counts {
        println!("{k}\t{v}");
    }
    if report.dry_run {
        println!("dry run: nothing written");
    } else {
        println!("written\t{}", report.out_dir.display());
    }
    Ok(())
}

fn ingest(cfg: &PipelineConfig) -> Result<(), Failure> {
    cfg.validate().map_err(Failure::Validation)?;
    let corpus = Corpus::ingest(&cfg.inputs.corpus).map_err(Failure::Validation)?;
    let (seeds, _) = pipeline::load_seed_terms(cfg).map_err(Failure::Validation)?;
    let manifest = pipeline::manifest_for(cfg).map_err(Failure::Validation)?;
    println!("dataset_id\t{}", manifest.dataset_id);
    println!("documents\t{}", corpus.len());
    println!("seed_terms\t{}", seeds.len());
    for input in &manifest.inputs {
        println!("input\t{}\t{}", input.name, input.sha256);
    }
    Ok(())
}

fn print_stats(dir: &Path, tsv: Option<&Path>, dry_run: bool) -> Result<(), Failure> {
    let report = stats::stats(dir).map_err(Failure::Validation)?;
    print!("{}", report.to_text());
    if let (Some(out), false) = (tsv, dry_run) {
        for (name, body) in report.to_tsv() {
            util::write_string(&out.join(name), &body).map_err(Failure::Stage)?;
        }
    }
    Ok(())
}

fn validate_dataset(dir: &Path) -> Result<(), Failure> {
    let kg = kg_store::read_kg(dir).map_err(Failure::Validation)?;
    println!(
        "ok\t{}\tconcepts={}\tterms={}\ttriplets={}",
        kg.manifest.dataset_id,
        kg.concepts.len(),
        kg.terms.len(),
        kg.triplets.len()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Stats { dir, tsv } => print_stats(dir, tsv.as_deref(), cli.dry_run),
        Command::Validate { dir } => validate_dataset(dir),
        Command::Ingest => ingest(&load_config(cli)?),
        Command::Write => {
            let mut cfg = load_config(cli)?;
            cfg.enable_with_requirements(Stage::Store);
            run_pipeline(&cfg, cli.dry_run)
        }
        command => {
            let mut cfg = load_config(cli)?;
            let target = target_stage(command).expect("every remaining command maps to a stage");
            cfg.set_all_stages(false);
            cfg.enable_with_requirements(target);
            run_pipeline(&cfg, cli.dry_run)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Stage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
