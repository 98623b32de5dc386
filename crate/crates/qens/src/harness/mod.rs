//! Experiment engine: dataset ingestion, seeded Monte Carlo
//! cross-validation over classifier/ensemble configurations, result
//! aggregation, and the XOR sanity benchmark.
//!
//! Every run draws its randomness from seeds derived off one master
//! seed, so a fixed configuration reproduces its results exactly (wall
//! clock timings aside). Stream numbers keep the derivations disjoint:
//! stream 0 maps the master seed to per-run seeds, stream 1 is consumed
//! inside ensemble training for per-sample shot noise, streams 2 and 3
//! cover ensemble and single-classifier evaluations per test point, and
//! streams 4 through 6 cover split redraws and the weight holdout.

mod dataset;
mod report;

pub use dataset::load_dataset;
pub use report::{
    emit_results, parse_results, summarize, OutputFormat, ResultsDocument, RunResult, SummaryRow,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{run_classifier, sample_classifier, ClassifierKind};
use crate::encoding::{
    apply_normalization, encode_training_set, fit_normalization, unit_normalize, Dataset,
    EncodedTrainingSet, NormalizationKind, NormalizationSpec,
};
use crate::ensemble::{
    derive_seed, evaluate_branch, run_test_mode, run_train_mode, EnsembleConfig, ExecMode,
};
use crate::error::{Error, Result};
use crate::stacking::{fit_stacking, predict, OptimizerConfig};

const RUN_STREAM: u64 = 0;
const TEST_POINT_STREAM: u64 = 2;
const SINGLE_SAMPLE_STREAM: u64 = 3;
const SPLIT_REDRAW_STREAM: u64 = 4;
const HOLDOUT_STREAM: u64 = 5;
const HOLDOUT_REDRAW_STREAM: u64 = 6;

/// Everything one experiment needs: the dataset files, the preprocessing
/// and classifier grid, the execution backend, and the seeding.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<PathBuf>,
    pub normalization: NormalizationKind,
    pub classifiers: Vec<ClassifierKind>,
    /// Ensemble control-register sizes to sweep; 2^d branches each.
    pub d_values: Vec<usize>,
    pub mode: ExecMode,
    pub shots: u64,
    pub runs: usize,
    pub split_fraction: f64,
    pub seed: u64,
    /// Fit ensemble weights on a carve-out of the training partition
    /// instead of on the training points themselves.
    pub weight_holdout: bool,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            normalization: NormalizationKind::Std,
            classifiers: vec![ClassifierKind::Distance],
            d_values: vec![3],
            mode: ExecMode::Exact,
            shots: 8192,
            runs: 10,
            split_fraction: 0.8,
            seed: 0,
            weight_holdout: false,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split_fraction must lie strictly between 0 and 1, got {}",
                self.split_fraction
            )));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Config("no classifiers configured".into()));
        }
        if self.d_values.is_empty() {
            return Err(Error::Config("no control-register sizes configured".into()));
        }
        if self.mode == ExecMode::Sampled && self.shots == 0 {
            return Err(Error::Config("sampled mode needs at least 1 shot".into()));
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        parse_config(&std::fs::read_to_string(path)?)
    }
}

/// Parses the flat `key = value` configuration format. `#` starts a
/// comment, blank lines are skipped, list values are comma-separated,
/// and unset keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    fn scalar<T: std::str::FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
        value.parse().map_err(|_| {
            Error::Config(format!("line {line}: cannot parse {value:?} for {key}"))
        })
    }
    fn list(value: &str) -> impl Iterator<Item = &str> {
        value.split(',').map(str::trim).filter(|s| !s.is_empty())
    }

    let mut cfg = ExperimentConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {line}: expected `key = value`, got {content:?}"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "datasets" => cfg.datasets = list(value).map(PathBuf::from).collect(),
            "normalization" => cfg.normalization = value.parse()?,
            "classifiers" => {
                cfg.classifiers = list(value).map(str::parse).collect::<Result<_>>()?;
            }
            "d_values" => {
                cfg.d_values = list(value)
                    .map(|v| scalar(v, line, "d_values"))
                    .collect::<Result<_>>()?;
            }
            "mode" => cfg.mode = value.parse()?,
            "shots" => cfg.shots = scalar(value, line, key)?,
            "runs" => cfg.runs = scalar(value, line, key)?,
            "split_fraction" => cfg.split_fraction = scalar(value, line, key)?,
            "seed" => cfg.seed = scalar(value, line, key)?,
            "weight_holdout" => cfg.weight_holdout = scalar(value, line, key)?,
            "output" => cfg.output = Some(PathBuf::from(value)),
            other => {
                return Err(Error::Config(format!("line {line}: unknown key {other:?}")));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Shuffles 0..n and cuts it at round(n * fraction), clamped so both
/// sides stay nonempty. Each side is returned sorted.
fn split_indices(n: usize, fraction: f64, rng: &mut impl rand::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let n_train = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let (train, test) = idx.split_at(n_train);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

fn both_classes(data: &Dataset, indices: &[usize]) -> bool {
    indices.iter().any(|&i| data.label(i) == 1) && indices.iter().any(|&i| data.label(i) == -1)
}

/// Draws a train/test split, redrawing once if the training side came
/// out single-class; a second miss is an error.
fn split_with_redraw(
    data: &Dataset,
    fraction: f64,
    run_seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let (train, test) = split_indices(data.len(), fraction, &mut rng);
    if both_classes(data, &train) {
        return Ok((train, test));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run_seed, SPLIT_REDRAW_STREAM, 0));
    let (train, test) = split_indices(data.len(), fraction, &mut rng);
    if both_classes(data, &train) {
        Ok((train, test))
    } else {
        Err(Error::DegenerateLabels)
    }
}

/// Scales a raw feature row and unit-normalizes it for amplitude
/// encoding. `None` marks a point the encoding cannot represent
/// (zero vector after scaling); callers score it as a miss.
fn encode_ready(spec: &NormalizationSpec, raw: &[f64]) -> Result<Option<Vec<f64>>> {
    let scaled = apply_normalization(spec, raw)?;
    match unit_normalize(&scaled) {
        Ok(unit) => Ok(Some(unit)),
        Err(Error::ZeroVector { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn scaled_dataset(spec: &NormalizationSpec, part: &Dataset) -> Result<Dataset> {
    let rows: Vec<Vec<f64>> = part
        .rows()
        .iter()
        .map(|r| apply_normalization(spec, r))
        .collect::<Result<_>>()?;
    Dataset::new(rows, part.labels().to_vec())
}

/// Runs the full Monte Carlo grid over every configured dataset file.
pub fn monte_carlo_cv(cfg: &ExperimentConfig) -> Result<(Vec<RunResult>, Vec<SummaryRow>)> {
    cfg.validate()?;
    if cfg.datasets.is_empty() {
        return Err(Error::Config("no datasets configured".into()));
    }
    let mut results = Vec::new();
    for path in &cfg.datasets {
        let data = load_dataset(path)?;
        let (mut part, _) = run_dataset(&data, &dataset_name(path), cfg)?;
        results.append(&mut part);
    }
    let summary = summarize(&results);
    Ok((results, summary))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Runs the configured grid on one in-memory dataset: every classifier
/// kind, every control-register size, `cfg.runs` splits each.
pub fn run_dataset(
    data: &Dataset,
    name: &str,
    cfg: &ExperimentConfig,
) -> Result<(Vec<RunResult>, Vec<SummaryRow>)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::Config(format!(
            "dataset {name} has {} rows, need at least 2",
            data.len()
        )));
    }
    let (pos, neg) = data.class_counts();
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    let mut results = Vec::new();
    for &kind in &cfg.classifiers {
        for &d in &cfg.d_values {
            for run in 0..cfg.runs {
                let run_seed = derive_seed(cfg.seed, RUN_STREAM, run as u64);
                results.push(run_once(data, name, cfg, kind, d, run, run_seed)?);
            }
        }
    }
    let summary = summarize(&results);
    Ok((results, summary))
}

/// The training material the ensemble works from: its encoded training
/// set and the unit-normalized points the weights are fitted on.
struct EnsembleFit {
    enc: EncodedTrainingSet,
    weight_vecs: Vec<Vec<f64>>,
    weight_labels: Vec<i8>,
}

fn ensemble_fit_inputs(
    cfg: &ExperimentConfig,
    spec: &NormalizationSpec,
    train: &Dataset,
    full_enc: &EncodedTrainingSet,
    run_seed: u64,
) -> Result<EnsembleFit> {
    if !cfg.weight_holdout {
        // In-sample fit: the encoded points double as fitting samples.
        let mut weight_vecs = Vec::new();
        let mut weight_labels = Vec::new();
        for (i, row) in train.rows().iter().enumerate() {
            if let Some(unit) = encode_ready(spec, row)? {
                weight_vecs.push(unit);
                weight_labels.push(train.label(i));
            }
        }
        return Ok(EnsembleFit {
            enc: full_enc.clone(),
            weight_vecs,
            weight_labels,
        });
    }

    let carve = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        split_indices(train.len(), 0.8, &mut rng)
    };
    let (mut core_idx, mut hold_idx) = carve(derive_seed(run_seed, HOLDOUT_STREAM, 0));
    if !(both_classes(train, &core_idx) && both_classes(train, &hold_idx)) {
        (core_idx, hold_idx) = carve(derive_seed(run_seed, HOLDOUT_REDRAW_STREAM, 0));
        if !(both_classes(train, &core_idx) && both_classes(train, &hold_idx)) {
            return Err(Error::DegenerateLabels);
        }
    }
    let core = train.subset(&core_idx);
    let hold = train.subset(&hold_idx);
    let enc = encode_training_set(&scaled_dataset(spec, &core)?)?;
    let mut weight_vecs = Vec::new();
    let mut weight_labels = Vec::new();
    for (i, row) in hold.rows().iter().enumerate() {
        if let Some(unit) = encode_ready(spec, row)? {
            weight_vecs.push(unit);
            weight_labels.push(hold.label(i));
        }
    }
    Ok(EnsembleFit {
        enc,
        weight_vecs,
        weight_labels,
    })
}

fn run_once(
    data: &Dataset,
    name: &str,
    cfg: &ExperimentConfig,
    kind: ClassifierKind,
    d: usize,
    run: usize,
    run_seed: u64,
) -> Result<RunResult> {
    let started = Instant::now();
    let (train_idx, test_idx) = split_with_redraw(data, cfg.split_fraction, run_seed)?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let spec = fit_normalization(&train, cfg.normalization);
    let full_enc = encode_training_set(&scaled_dataset(&spec, &train)?)?;

    let mut test_vecs = Vec::with_capacity(test.len());
    for row in test.rows() {
        test_vecs.push(encode_ready(&spec, row)?);
    }

    let mut single_correct = 0usize;
    for (t, point) in test_vecs.iter().enumerate() {
        let Some(x) = point else { continue };
        let label = match cfg.mode {
            ExecMode::Exact => run_classifier(kind, &full_enc, x)?.label,
            ExecMode::Sampled => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                    run_seed,
                    SINGLE_SAMPLE_STREAM,
                    t as u64,
                ));
                sample_classifier(kind, &full_enc, x, cfg.shots, &mut rng)?.label
            }
        };
        if label == test.label(t) {
            single_correct += 1;
        }
    }

    let mut ens_cfg = EnsembleConfig::new(kind, d);
    ens_cfg.mode = cfg.mode;
    ens_cfg.shots = cfg.shots;
    ens_cfg.seed = run_seed;

    let fit_inputs = ensemble_fit_inputs(cfg, &spec, &train, &full_enc, run_seed)?;
    let outputs = run_train_mode(&ens_cfg, &fit_inputs.enc, &fit_inputs.weight_vecs)?;
    let (model, _) = fit_stacking(&outputs, &fit_inputs.weight_labels, &OptimizerConfig::default())?;

    let branches = 1usize << d;
    let mut internal_correct = vec![0usize; branches];
    let mut ensemble_correct = 0usize;
    let mut selection_sum = 0.0;
    let mut judged = 0usize;
    for (t, point) in test_vecs.iter().enumerate() {
        let Some(x) = point else { continue };
        for (c, correct) in internal_correct.iter_mut().enumerate() {
            let eval = evaluate_branch(&ens_cfg, &fit_inputs.enc, x, c as u64)?;
            if eval.output.label == test.label(t) {
                *correct += 1;
            }
        }
        let mut point_cfg = ens_cfg;
        point_cfg.seed = derive_seed(run_seed, TEST_POINT_STREAM, t as u64);
        let out = run_test_mode(&point_cfg, &model.weights, &fit_inputs.enc, x)?;
        selection_sum += out.selection_prob;
        judged += 1;
        if predict(&model, out.eo)? == test.label(t) {
            ensemble_correct += 1;
        }
    }

    let per_point = |correct: usize| correct as f64 / test.len() as f64;
    Ok(RunResult {
        dataset: name.to_string(),
        normalization: cfg.normalization,
        classifier: kind,
        control_qubits: d,
        mode: cfg.mode,
        run,
        seed: run_seed,
        single_accuracy: per_point(single_correct),
        internal_accuracies: internal_correct.iter().map(|&c| per_point(c)).collect(),
        ensemble_accuracy: per_point(ensemble_correct),
        weights: model.weights,
        bias: model.bias,
        scale: model.scale,
        mean_selection_prob: if judged > 0 {
            selection_sum / judged as f64
        } else {
            0.0
        },
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Synthetic two-dimensional XOR data: points uniform in [-1,1]^2,
/// labeled by the sign of the coordinate product. Points on an axis
/// are redrawn so every label is well defined.
pub fn xor_benchmark(seed: u64, size: usize) -> Result<Dataset> {
    if size < 8 {
        return Err(Error::Config(format!(
            "the XOR benchmark needs at least 8 points, got {size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(size);
    let mut labels = Vec::with_capacity(size);
    while rows.len() < size {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        if x * y == 0.0 {
            continue;
        }
        labels.push(if x * y > 0.0 { 1 } else { -1 });
        rows.push(vec![x, y]);
    }
    Dataset::new(rows, labels)
}
