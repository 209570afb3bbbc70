//! Accuracy metrics, the four batch experiments, and report emission.
//!
//! An experiment is a grid of cells (connectivity presets, embedding sizes,
//! layer counts, or the negative-edge toggle) crossed with independent
//! realizations. Every realization of every cell derives its own seed from
//! the master seed, so results are identical whether realizations run
//! serially or across a thread pool, and a single realization can be
//! reproduced in isolation.

use crate::connectivity::Preset;
use crate::datagen::{generate_kg, GenConfig, GenError};
use crate::kg::{load_triple_table, split_by_patients, KgError, CARE_ACTION_CLASSES};
use crate::train::{predict_care_action, train, PolicyChoice, Prediction, TrainConfig, TrainError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("prediction for encounter `{0}` has no ground truth")]
    MissingTruth(String),
    #[error("unknown care-action class `{0}`")]
    UnknownClass(String),
    #[error("experiment requires at least one realization")]
    NoRealizations,
    #[error("unknown experiment kind `{0}`")]
    UnknownKind(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error("report row {row}: {reason}")]
    MalformedReport { row: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Correct/total tally for one care action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub correct: usize,
    pub total: usize,
}

impl ClassCount {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Per-class tallies plus the micro average (total correct over total
/// predictions, i.e. the support-weighted mean of per-class accuracies).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Indexed in canonical class order (wellness … emergency).
    pub per_class: [ClassCount; 5],
    pub micro_accuracy: f64,
    pub realizations: usize,
    pub config_fingerprint: String,
}

impl EvalReport {
    pub fn from_counts(
        per_class: [ClassCount; 5],
        realizations: usize,
        config_fingerprint: String,
    ) -> Self {
        let correct: usize = per_class.iter().map(|c| c.correct).sum();
        let total: usize = per_class.iter().map(|c| c.total).sum();
        EvalReport {
            per_class,
            micro_accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
            realizations,
            config_fingerprint,
        }
    }
}

/// Tallies exact-match predictions per class. Every prediction must carry
/// its ground truth.
pub fn evaluate_predictions(predictions: &[Prediction]) -> Result<EvalReport, EvalError> {
    let class_index = |name: &str| {
        CARE_ACTION_CLASSES
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| EvalError::UnknownClass(name.to_string()))
    };
    let mut per_class = [ClassCount {
        correct: 0,
        total: 0,
    }; 5];
    for prediction in predictions {
        let truth = prediction
            .truth
            .as_deref()
            .ok_or_else(|| EvalError::MissingTruth(prediction.encounter.clone()))?;
        let t = class_index(truth)?;
        let p = class_index(&prediction.predicted)?;
        per_class[t].total += 1;
        if p == t {
            per_class[t].correct += 1;
        }
    }
    Ok(EvalReport::from_counts(per_class, 1, String::new()))
}

/// The four batch experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    Connectivity,
    EmbeddingSweep,
    LayerSweep,
    NegativeAblation,
}

impl ExperimentKind {
    pub fn parse(name: &str) -> Result<Self, EvalError> {
        match name {
            "connectivity" => Ok(ExperimentKind::Connectivity),
            "embedding_sweep" => Ok(ExperimentKind::EmbeddingSweep),
            "layer_sweep" => Ok(ExperimentKind::LayerSweep),
            "negative_ablation" => Ok(ExperimentKind::NegativeAblation),
            other => Err(EvalError::UnknownKind(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Connectivity => "connectivity",
            ExperimentKind::EmbeddingSweep => "embedding_sweep",
            ExperimentKind::LayerSweep => "layer_sweep",
            ExperimentKind::NegativeAblation => "negative_ablation",
        }
    }
}

/// Where each realization's clinical graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    /// A fresh synthetic sample per realization.
    Generate(GenConfig),
    /// A fixed dataset (triple-table text), freshly split per realization.
    Dataset(String),
}

/// Experiment configuration: the data source, the split sizes, and the base
/// training recipe the cells modify.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub train_patients: usize,
    pub test_patients: usize,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::Generate(GenConfig {
                patients: 60,
                ..GenConfig::default()
            }),
            train_patients: 50,
            test_patients: 10,
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        format!("{:016x}", fnv1a(&bytes))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &byte in bytes {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// One grid cell: a label, an optional sweep coordinate, and the
/// training-config modification it applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    /// Sweep x-coordinate (embedding size or layer count), when applicable.
    pub x: Option<f64>,
    /// Sweep series label (e.g. `L=2`), when applicable.
    pub series: Option<String>,
    pub policy: PolicyChoice,
    pub embedding_dim: usize,
    pub layers: usize,
    pub synthesize_negatives: bool,
}

/// The grid of cells an experiment kind expands to.
pub fn experiment_cells(kind: ExperimentKind, base: &TrainConfig) -> Vec<Cell> {
    let cell = |label: String| Cell {
        label,
        x: None,
        series: None,
        policy: base.policy.clone(),
        embedding_dim: base.embedding_dim,
        layers: base.layers,
        synthesize_negatives: true,
    };
    match kind {
        ExperimentKind::Connectivity => Preset::ALL
            .iter()
            .map(|&preset| Cell {
                policy: PolicyChoice::Preset(preset),
                ..cell(preset.to_string())
            })
            .collect(),
        ExperimentKind::EmbeddingSweep => {
            let mut cells = Vec::new();
            for layers in [2usize, 3] {
                for dim in [1usize, 2, 3, 5, 8, 10] {
                    cells.push(Cell {
                        x: Some(dim as f64),
                        series: Some(format!("L={layers}")),
                        embedding_dim: dim,
                        layers,
                        ..cell(format!("d={dim},L={layers}"))
                    });
                }
            }
            cells
        }
        ExperimentKind::LayerSweep => {
            let mut cells = Vec::new();
            for dim in [5usize, 10] {
                for layers in 1..=8usize {
                    cells.push(Cell {
                        x: Some(layers as f64),
                        series: Some(format!("d={dim}")),
                        embedding_dim: dim,
                        layers,
                        ..cell(format!("L={layers},d={dim}"))
                    });
                }
            }
            cells
        }
        ExperimentKind::NegativeAblation => vec![
            Cell {
                synthesize_negatives: true,
                ..cell("with-negatives".to_string())
            },
            Cell {
                synthesize_negatives: false,
                ..cell("without-negatives".to_string())
            },
        ],
    }
}

/// Deterministic per-(cell, realization) seed.
pub fn realization_seed(master_seed: u64, cell_index: usize, realization: usize) -> u64 {
    let mut bytes = Vec::with_capacity(24);
    bytes.extend_from_slice(&master_seed.to_le_bytes());
    bytes.extend_from_slice(&(cell_index as u64).to_le_bytes());
    bytes.extend_from_slice(&(realization as u64).to_le_bytes());
    fnv1a(&bytes)
}

/// Distinct sub-seeds for the generator, the split, and the training run.
fn sub_seed(seed: u64, stage: u64) -> u64 {
    let mut bytes = Vec::with_capacity(16);
    bytes.extend_from_slice(&seed.to_le_bytes());
    bytes.extend_from_slice(&stage.to_le_bytes());
    fnv1a(&bytes)
}

/// Runs one (cell, seed) pipeline: sample or split data, synthesize
/// negatives, train, predict, evaluate.
pub fn run_single_realization(
    config: &ExperimentConfig,
    cell: &Cell,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    let base = match &config.data {
        DataSource::Generate(gen_config) => {
            let mut sample_config = gen_config.clone();
            sample_config.seed = sub_seed(seed, 1);
            generate_kg(&sample_config)?
        }
        DataSource::Dataset(text) => load_triple_table(text.as_bytes())?,
    };
    let (mut train_kg, mut test_kg) =
        split_by_patients(&base, config.train_patients, config.test_patients, sub_seed(seed, 2))?;
    if cell.synthesize_negatives {
        train_kg.synthesize_negative_careaction_edges()?;
        test_kg.synthesize_negative_careaction_edges()?;
    }

    let train_config = TrainConfig {
        embedding_dim: cell.embedding_dim,
        layers: cell.layers,
        policy: cell.policy.clone(),
        seed: sub_seed(seed, 3),
        ..config.train.clone()
    };
    let (params, _history) = train(&train_kg, &train_config)?;
    let predictions = predict_care_action(&params, &train_kg, &test_kg, &train_config)?;
    evaluate_predictions(&predictions.predictions)
}

/// Aggregated outcome of one cell across realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    /// Pooled per-class tallies across realizations.
    pub report: EvalReport,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub per_realization_micro: Vec<f64>,
}

/// A full experiment outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub master_seed: u64,
    pub realizations: usize,
    pub config_fingerprint: String,
    pub cells: Vec<CellResult>,
}

/// Runs an experiment grid. Realizations execute in parallel; aggregation
/// is an ordered fold over (cell, realization) indices, so the output is
/// identical at any parallelism level.
pub fn run_experiment(
    kind: ExperimentKind,
    config: &ExperimentConfig,
    realizations: usize,
    master_seed: u64,
) -> Result<ExperimentReport, EvalError> {
    if realizations == 0 {
        return Err(EvalError::NoRealizations);
    }
    let cells = experiment_cells(kind, &config.train);
    let mut jobs = Vec::new();
    for (cell_index, cell) in cells.iter().enumerate() {
        for realization in 0..realizations {
            jobs.push((cell_index, cell, realization_seed(master_seed, cell_index, realization)));
        }
    }

    let results: Vec<EvalReport> = jobs
        .par_iter()
        .map(|(_, cell, seed)| run_single_realization(config, cell, *seed))
        .collect::<Result<_, _>>()?;

    let mut cell_results = Vec::with_capacity(cells.len());
    let fingerprint = config.fingerprint();
    for (cell_index, cell) in cells.iter().enumerate() {
        let mut per_class = [ClassCount {
            correct: 0,
            total: 0,
        }; 5];
        let mut micros = Vec::with_capacity(realizations);
        for realization in 0..realizations {
            let report = &results[cell_index * realizations + realization];
            for (slot, count) in per_class.iter_mut().zip(report.per_class) {
                slot.correct += count.correct;
                slot.total += count.total;
            }
            micros.push(report.micro_accuracy);
        }
        let mean = micros.iter().sum::<f64>() / micros.len() as f64;
        let std = if micros.len() > 1 {
            (micros.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (micros.len() - 1) as f64)
                .sqrt()
        } else {
            0.0
        };
        cell_results.push(CellResult {
            cell: cell.clone(),
            report: EvalReport::from_counts(per_class, realizations, fingerprint.clone()),
            micro_mean: mean,
            micro_std: std,
            per_realization_micro: micros,
        });
    }

    Ok(ExperimentReport {
        kind,
        master_seed,
        realizations,
        config_fingerprint: fingerprint,
        cells: cell_results,
    })
}

const REPORT_HEADER: [&str; 8] = [
    "cell",
    "class",
    "correct",
    "total",
    "class_accuracy",
    "micro_mean",
    "micro_std",
    "realizations",
];

/// Writes a report as CSV: header row, then one row per (cell, class).
pub fn write_report<W: Write>(report: &ExperimentReport, writer: W) -> Result<(), EvalError> {
    let mut csv_writer = csv::WriterBuilder::new().from_writer(writer);
    csv_writer.write_record(REPORT_HEADER)?;
    for cell in &report.cells {
        for (k, class) in CARE_ACTION_CLASSES.iter().enumerate() {
            let count = cell.report.per_class[k];
            csv_writer.write_record([
                cell.cell.label.as_str(),
                class,
                &count.correct.to_string(),
                &count.total.to_string(),
                &format!("{}", count.accuracy()),
                &format!("{}", cell.micro_mean),
                &format!("{}", cell.micro_std),
                &report.realizations.to_string(),
            ])?;
        }
    }
    csv_writer.flush()?;
    Ok(())
}

/// One parsed row of a report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub cell: String,
    pub class: String,
    pub correct: usize,
    pub total: usize,
    pub class_accuracy: f64,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub realizations: usize,
}

/// Reads back a report CSV written by [`write_report`].
pub fn read_report<R: Read>(reader: R) -> Result<Vec<ReportRow>, EvalError> {
    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut rows = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        let parse_err = |reason: String| EvalError::MalformedReport { row: row_no, reason };
        let field = |idx: usize| record.get(idx).unwrap_or("").to_string();
        rows.push(ReportRow {
            cell: field(0),
            class: field(1),
            correct: field(2).parse().map_err(|e| parse_err(format!("correct: {e}")))?,
            total: field(3).parse().map_err(|e| parse_err(format!("total: {e}")))?,
            class_accuracy: field(4)
                .parse()
                .map_err(|e| parse_err(format!("class_accuracy: {e}")))?,
            micro_mean: field(5).parse().map_err(|e| parse_err(format!("micro_mean: {e}")))?,
            micro_std: field(6).parse().map_err(|e| parse_err(format!("micro_std: {e}")))?,
            realizations: field(7)
                .parse()
                .map_err(|e| parse_err(format!("realizations: {e}")))?,
        });
    }
    Ok(rows)
}

/// The rows a report round-trips through its CSV form as.
pub fn report_rows(report: &ExperimentReport) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for cell in &report.cells {
        for (k, class) in CARE_ACTION_CLASSES.iter().enumerate() {
            let count = cell.report.per_class[k];
            rows.push(ReportRow {
                cell: cell.cell.label.clone(),
                class: class.to_string(),
                correct: count.correct,
                total: count.total,
                class_accuracy: count.accuracy(),
                micro_mean: cell.micro_mean,
                micro_std: cell.micro_std,
                realizations: report.realizations,
            });
        }
    }
    rows
}

/// Writes the plot-data companion for sweep reports: one
/// `series,x,mean,stddev` row per cell.
pub fn write_plot_data<W: Write>(report: &ExperimentReport, writer: W) -> Result<(), EvalError> {
    let mut csv_writer = csv::WriterBuilder::new().from_writer(writer);
    csv_writer.write_record(["series", "x", "mean", "stddev"])?;
    for cell in &report.cells {
        csv_writer.write_record([
            cell.cell.series.clone().unwrap_or_else(|| cell.cell.label.clone()),
            cell.cell
                .x
                .map(|x| format!("{x}"))
                .unwrap_or_else(|| cell.cell.label.clone()),
            format!("{}", cell.micro_mean),
            format!("{}", cell.micro_std),
        ])?;
    }
    csv_writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::GenConfig;
    use crate::train::Prediction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prediction(truth: &str, predicted: &str) -> Prediction {
        Prediction {
            encounter: format!("e-{truth}-{predicted}"),
            predicted: predicted.to_string(),
            truth: Some(truth.to_string()),
            scores: [0.5; 5],
            no_evidence: false,
        }
    }

    #[test]
    fn all_correct_scores_unit_everywhere() {
        let predictions: Vec<Prediction> = CARE_ACTION_CLASSES
            .iter()
            .map(|c| prediction(c, c))
            .collect();
        let report = evaluate_predictions(&predictions).unwrap();
        assert_eq!(report.micro_accuracy, 1.0);
        for count in report.per_class {
            assert_eq!(count.accuracy(), 1.0);
        }
    }

    #[test]
    fn skewed_supports_reproduce_the_connectivity_baseline_average() {
        // Per-class accuracies (0.73, 0, 0.27, 0, 0 in wellness/emergency/
        // ambulatory/inpatient/outpatient reading order) under skewed
        // supports land at a 0.43 micro average.
        let mut predictions = Vec::new();
        let fill = |predictions: &mut Vec<Prediction>, class: &str, correct: usize, total: usize| {
            for i in 0..total {
                let predicted = if i < correct { class } else { "inpatient" };
                let predicted = if class == "inpatient" && i >= correct {
                    "wellness"
                } else {
                    predicted
                };
                predictions.push(prediction(class, predicted));
            }
        };
        fill(&mut predictions, "wellness", 730, 1000);
        fill(&mut predictions, "emergency", 0, 100);
        fill(&mut predictions, "ambulatory", 108, 400);
        fill(&mut predictions, "inpatient", 0, 200);
        fill(&mut predictions, "outpatient", 0, 250);
        let report = evaluate_predictions(&predictions).unwrap();
        let accuracy = |class: &str| {
            let k = CARE_ACTION_CLASSES.iter().position(|c| *c == class).unwrap();
            report.per_class[k].accuracy()
        };
        assert!((accuracy("wellness") - 0.73).abs() < 1e-12);
        assert!((accuracy("ambulatory") - 0.27).abs() < 1e-12);
        assert_eq!(accuracy("emergency"), 0.0);
        assert!((report.micro_accuracy - 0.43).abs() < 0.005);
    }

    #[test]
    fn micro_average_matches_counting_oracle_on_random_confusions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let mut predictions = Vec::new();
            let mut correct_oracle = 0usize;
            let mut total_oracle = 0usize;
            for truth in CARE_ACTION_CLASSES {
                for _ in 0..rng.random_range(0..30usize) {
                    let predicted = CARE_ACTION_CLASSES[rng.random_range(0..5)];
                    predictions.push(prediction(truth, predicted));
                    total_oracle += 1;
                    if predicted == truth {
                        correct_oracle += 1;
                    }
                }
            }
            if total_oracle == 0 {
                continue;
            }
            let report = evaluate_predictions(&predictions).unwrap();
            assert_eq!(
                report.micro_accuracy,
                correct_oracle as f64 / total_oracle as f64
            );

            // Micro equals the support-weighted mean of per-class accuracies.
            let weighted: f64 = report
                .per_class
                .iter()
                .map(|c| c.accuracy() * c.total as f64)
                .sum::<f64>()
                / total_oracle as f64;
            assert!((report.micro_accuracy - weighted).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_truth_is_an_error() {
        let mut p = prediction("wellness", "wellness");
        p.truth = None;
        assert!(matches!(
            evaluate_predictions(&[p]),
            Err(EvalError::MissingTruth(_))
        ));
    }

    #[test]
    fn unknown_class_is_an_error() {
        let p = prediction("wellness", "surgery");
        assert!(matches!(
            evaluate_predictions(&[p]),
            Err(EvalError::UnknownClass(_))
        ));
    }

    #[test]
    fn experiment_grids_have_documented_shapes() {
        let base = crate::train::TrainConfig::default();
        assert_eq!(experiment_cells(ExperimentKind::Connectivity, &base).len(), 4);
        assert_eq!(experiment_cells(ExperimentKind::EmbeddingSweep, &base).len(), 12);
        assert_eq!(experiment_cells(ExperimentKind::LayerSweep, &base).len(), 16);
        assert_eq!(experiment_cells(ExperimentKind::NegativeAblation, &base).len(), 2);
        let labels: Vec<String> = experiment_cells(ExperimentKind::Connectivity, &base)
            .into_iter()
            .map(|c| c.label)
            .collect();
        assert_eq!(labels, vec!["C1", "C2", "C3", "C4"]);
    }

    fn tiny_experiment_config() -> ExperimentConfig {
        // Uniform prior: every class appears even in tiny samples.
        ExperimentConfig {
            data: DataSource::Generate(GenConfig {
                patients: 13,
                mean_encounters_per_patient: 5.0,
                care_action_prior: [0.2; 5],
                ..Default::default()
            }),
            train_patients: 10,
            test_patients: 3,
            train: crate::train::TrainConfig {
                epochs: 30,
                ..Default::default()
            },
        }
    }

    #[test]
    fn two_realizations_equal_two_single_runs_with_derived_seeds() {
        let config = tiny_experiment_config();
        let master = 99u64;
        let report = run_experiment(ExperimentKind::NegativeAblation, &config, 2, master).unwrap();
        let cells = experiment_cells(ExperimentKind::NegativeAblation, &config.train);
        for (cell_index, cell) in cells.iter().enumerate() {
            for realization in 0..2usize {
                let seed = realization_seed(master, cell_index, realization);
                let single = run_single_realization(&config, cell, seed).unwrap();
                assert_eq!(
                    single.micro_accuracy,
                    report.cells[cell_index].per_realization_micro[realization]
                );
            }
        }
    }

    #[test]
    fn experiment_is_reproducible() {
        let config = tiny_experiment_config();
        let a = run_experiment(ExperimentKind::NegativeAblation, &config, 2, 7).unwrap();
        let b = run_experiment(ExperimentKind::NegativeAblation, &config, 2, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dataset_source_runs_fresh_splits() {
        let gen_config = GenConfig {
            patients: 13,
            mean_encounters_per_patient: 5.0,
            care_action_prior: [0.2; 5],
            seed: 21,
            ..Default::default()
        };
        let mut table = Vec::new();
        crate::datagen::generate_dataset(&gen_config, &mut table).unwrap();
        let config = ExperimentConfig {
            data: DataSource::Dataset(String::from_utf8(table).unwrap()),
            train_patients: 10,
            test_patients: 3,
            train: crate::train::TrainConfig {
                epochs: 20,
                ..Default::default()
            },
        };
        let cells = experiment_cells(ExperimentKind::Connectivity, &config.train);
        let report = run_single_realization(&config, &cells[3], 5).unwrap();
        let total: usize = report.per_class.iter().map(|c| c.total).sum();
        assert!(total > 0);
    }

    #[test]
    fn zero_realizations_is_rejected() {
        let config = tiny_experiment_config();
        assert!(matches!(
            run_experiment(ExperimentKind::Connectivity, &config, 0, 0),
            Err(EvalError::NoRealizations)
        ));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(matches!(
            ExperimentKind::parse("bogus"),
            Err(EvalError::UnknownKind(_))
        ));
        assert_eq!(
            ExperimentKind::parse("embedding_sweep").unwrap(),
            ExperimentKind::EmbeddingSweep
        );
    }

    fn fabricated_report() -> ExperimentReport {
        let base = crate::train::TrainConfig::default();
        let cells = experiment_cells(ExperimentKind::EmbeddingSweep, &base);
        let cell_results = cells
            .into_iter()
            .enumerate()
            .map(|(i, cell)| {
                let per_class = [ClassCount {
                    correct: i,
                    total: i + 3,
                }; 5];
                CellResult {
                    cell,
                    report: EvalReport::from_counts(per_class, 2, "fp".into()),
                    micro_mean: i as f64 / 10.0,
                    micro_std: 0.01,
                    per_realization_micro: vec![i as f64 / 10.0; 2],
                }
            })
            .collect();
        ExperimentReport {
            kind: ExperimentKind::EmbeddingSweep,
            master_seed: 1,
            realizations: 2,
            config_fingerprint: "fp".into(),
            cells: cell_results,
        }
    }

    #[test]
    fn empty_report_writes_header_only() {
        let report = ExperimentReport {
            kind: ExperimentKind::Connectivity,
            master_seed: 0,
            realizations: 1,
            config_fingerprint: String::new(),
            cells: Vec::new(),
        };
        let mut bytes = Vec::new();
        write_report(&report, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("cell,class,"));
    }

    #[test]
    fn report_round_trips_through_csv() {
        let report = fabricated_report();
        let mut bytes = Vec::new();
        write_report(&report, &mut bytes).unwrap();
        let rows = read_report(&bytes[..]).unwrap();
        assert_eq!(rows, report_rows(&report));
    }

    #[test]
    fn plot_rows_count_equals_cells() {
        let report = fabricated_report();
        let mut bytes = Vec::new();
        write_plot_data(&report, &mut bytes).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert_eq!(text.lines().count(), 1 + report.cells.len());
    }

    #[test]
    fn micro_recomputation_matches_stored_value() {
        let report = fabricated_report();
        for cell in &report.cells {
            let correct: usize = cell.report.per_class.iter().map(|c| c.correct).sum();
            let total: usize = cell.report.per_class.iter().map(|c| c.total).sum();
            assert_eq!(cell.report.micro_accuracy, correct as f64 / total as f64);
        }
    }
}
