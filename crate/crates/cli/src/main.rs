//! `kglink` — link prediction on multi-relational knowledge graphs with
//! policy-controlled message passing.

mod config;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kglink_core::datagen::generate_dataset;
use kglink_core::eval::{
    run_experiment, write_plot_data, write_report, ExperimentKind,
};
use kglink_core::kg::{
    ingest_clinical_csv, load_triple_table, validate_kg, write_triple_table, SyntheaStreams,
};
use kglink_core::nn::{load_checkpoint, save_checkpoint};
use kglink_core::train::{predict_care_action, train, write_predictions};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "kglink", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic clinical dataset as a triple table.
    GenerateData(GenerateArgs),
    /// Build a triple table from a Synthea-style CSV export.
    IngestSynthea(IngestArgs),
    /// Train a model on a triple table and write a checkpoint.
    Train(TrainArgs),
    /// Predict care actions for a test graph against a checkpoint.
    Predict(PredictArgs),
    /// Run a batch experiment grid and write report files.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator config file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of patients (overrides the config file).
    #[arg(long)]
    patients: Option<usize>,
    /// Signature sampling probability (overrides the config file).
    #[arg(long)]
    p_sig: Option<f64>,
    /// Generator seed (overrides the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output triple-table path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// patients.csv from the export.
    #[arg(long)]
    patients: PathBuf,
    /// encounters.csv from the export.
    #[arg(long)]
    encounters: PathBuf,
    /// conditions.csv from the export.
    #[arg(long)]
    conditions: PathBuf,
    /// observations.csv from the export.
    #[arg(long)]
    observations: PathBuf,
    /// Output triple-table path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training triple table.
    #[arg(long)]
    data: PathBuf,
    /// Training config file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Skip negative-edge synthesis before training.
    #[arg(long)]
    no_negatives: bool,
    /// Checkpoint output path (versioned JSON).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-epoch loss CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    /// The triple table the checkpoint was trained on.
    #[arg(long)]
    train_data: PathBuf,
    /// Triple table with the encounters to predict.
    #[arg(long)]
    test_data: PathBuf,
    /// Training config file (the policy must match training).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Predictions CSV output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// connectivity | embedding_sweep | layer_sweep | negative_ablation.
    #[arg(long)]
    kind: String,
    /// Independent realizations per grid cell.
    #[arg(long, default_value_t = 10)]
    realizations: usize,
    /// Master seed; per-cell, per-realization seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Experiment config file (key = value).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report CSV output path; sweeps also write `<out>.plot.csv`.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    if let Err(error) = run() {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::GenerateData(args) => generate_data(args),
        Command::IngestSynthea(args) => ingest_synthea(args),
        Command::Train(args) => train_command(args),
        Command::Predict(args) => predict_command(args),
        Command::Experiment(args) => experiment_command(args),
    }
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create `{}`", path.display())
    })?))
}

fn open(path: &PathBuf) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open `{}`", path.display())
    })?))
}

fn generate_data(args: GenerateArgs) -> Result<()> {
    let mut gen_config = config::load_gen_config(args.config.as_deref())?;
    if let Some(patients) = args.patients {
        gen_config.patients = patients;
    }
    if let Some(p_sig) = args.p_sig {
        gen_config.p_sig = p_sig;
    }
    if let Some(seed) = args.seed {
        gen_config.seed = seed;
    }
    let mut writer = create(&args.out)?;
    generate_dataset(&gen_config, &mut writer)?;
    writer.flush()?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn ingest_synthea(args: IngestArgs) -> Result<()> {
    let kg = ingest_clinical_csv(SyntheaStreams {
        patients: open(&args.patients)?,
        encounters: open(&args.encounters)?,
        conditions: open(&args.conditions)?,
        observations: open(&args.observations)?,
    })?;
    let report = validate_kg(&kg);
    if !report.is_empty() {
        for finding in &report.findings {
            eprintln!("validation: {finding}");
        }
        bail!("{} validation findings", report.findings.len());
    }
    let mut writer = create(&args.out)?;
    write_triple_table(&kg, &mut writer)?;
    writer.flush()?;
    println!(
        "wrote {} ({} nodes, {} edges)",
        args.out.display(),
        kg.node_count(),
        kg.edge_count()
    );
    Ok(())
}

fn train_command(args: TrainArgs) -> Result<()> {
    let mut train_config = config::load_train_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        train_config.seed = seed;
    }
    let mut kg = load_triple_table(open(&args.data)?)?;
    if !args.no_negatives {
        let added = kg.synthesize_negative_careaction_edges()?;
        println!("synthesized {added} negative edges");
    }
    let (params, history) = train(&kg, &train_config)?;
    let mut writer = create(&args.out)?;
    save_checkpoint(&params, &kg, &mut writer)?;
    writer.flush()?;
    if let Some(history_path) = &args.history {
        let mut writer = create(history_path)?;
        writeln!(writer, "epoch,loss")?;
        for (epoch, loss) in history.epoch_losses.iter().enumerate() {
            writeln!(writer, "{},{loss}", epoch + 1)?;
        }
        writer.flush()?;
    }
    println!(
        "trained {} epochs in {:.1?}; final loss {:.6}; checkpoint {}",
        history.epoch_losses.len(),
        history.wall,
        history.epoch_losses.last().copied().unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

fn predict_command(args: PredictArgs) -> Result<()> {
    let train_config = config::load_train_config(args.config.as_deref())?;
    let checkpoint = load_checkpoint(open(&args.checkpoint)?)?;
    let train_kg = load_triple_table(open(&args.train_data)?)?;
    let test_kg = load_triple_table(open(&args.test_data)?)?;

    // The checkpoint must address the same node table it was trained on.
    // Training synthesizes negatives, which add no nodes, so names and
    // order must match exactly.
    let names: Vec<&str> = train_kg.nodes().iter().map(|n| n.name.as_str()).collect();
    let saved: Vec<&str> = checkpoint.node_names.iter().map(|s| s.as_str()).collect();
    if names != saved {
        bail!(
            "checkpoint was trained on a different node table ({} vs {} nodes); \
             pass the original training data",
            saved.len(),
            names.len()
        );
    }
    let params = checkpoint.into_params()?;
    let predictions = predict_care_action(&params, &train_kg, &test_kg, &train_config)?;
    let degenerate = predictions
        .predictions
        .iter()
        .filter(|p| p.no_evidence)
        .count();
    if degenerate > 0 {
        eprintln!("{degenerate} encounters had no observation/condition evidence");
    }
    let mut writer = create(&args.out)?;
    write_predictions(&predictions, &mut writer)?;
    writer.flush()?;
    let confident = predictions
        .predictions
        .iter()
        .filter(|p| p.scores.iter().any(|&s| s > train_config.confidence_threshold))
        .count();
    println!(
        "wrote {} predictions to {} ({confident} clear the {} confidence threshold)",
        predictions.predictions.len(),
        args.out.display(),
        train_config.confidence_threshold
    );
    Ok(())
}

fn experiment_command(args: ExperimentArgs) -> Result<()> {
    let kind = ExperimentKind::parse(&args.kind)?;
    let experiment_config = config::load_experiment_config(args.config.as_deref())?;
    let report = run_experiment(kind, &experiment_config, args.realizations, args.seed)?;

    let mut writer = create(&args.out)?;
    write_report(&report, &mut writer)?;
    writer.flush()?;
    let mut written = vec![args.out.display().to_string()];
    if matches!(
        kind,
        ExperimentKind::EmbeddingSweep | ExperimentKind::LayerSweep
    ) {
        let plot_path = args.out.with_extension("plot.csv");
        let mut writer = create(&plot_path)?;
        write_plot_data(&report, &mut writer)?;
        writer.flush()?;
        written.push(plot_path.display().to_string());
    }

    println!(
        "{} × {} realizations (seed {})",
        kind.name(),
        report.realizations,
        report.master_seed
    );
    for cell in &report.cells {
        println!(
            "  {:<22} micro {:.3} ± {:.3}",
            cell.cell.label, cell.micro_mean, cell.micro_std
        );
    }
    println!("wrote {}", written.join(", "));
    Ok(())
}
