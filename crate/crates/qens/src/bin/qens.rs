use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qens::classifier::{
    analytic_oracle, run_classifier, sample_classifier, ClassifierKind,
};
use qens::encoding::{
    encode_training_set, pad_test_vector, unit_normalize, Dataset, NormalizationKind,
};
use qens::ensemble::{
    evaluate_branch, run_test_mode, run_train_mode, EnsembleConfig, SelectionProgram,
};
use qens::harness::{
    emit_results, monte_carlo_cv, run_dataset, xor_benchmark, ExperimentConfig, OutputFormat,
    SummaryRow,
};
use qens::stacking::{fit_stacking, OptimizerConfig};
use qens::Result;

/// Quantum-ensemble binary classification experiments.
#[derive(Parser)]
#[command(name = "qens", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a configuration file.
    Run {
        /// Flat `key = value` experiment description.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the result table; overrides the config file.
        /// A `.json` extension selects the structured document format.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Benchmark all three classifiers on a synthetic XOR dataset.
    BenchXor {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of points to generate.
        #[arg(long, default_value_t = 60)]
        size: usize,
        /// Monte Carlo cross-validation runs.
        #[arg(long, default_value_t = 10)]
        runs: usize,
        /// Ensemble control-register size d (2^d branches).
        #[arg(long, default_value_t = 3)]
        ensemble_size: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check core invariants end to end and exit nonzero on any miss.
    Selftest,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if output.is_some() {
                cfg.output = output;
            }
            let (results, summary) = monte_carlo_cv(&cfg)?;
            print_summary(&summary);
            if let Some(path) = &cfg.output {
                emit_results(&results, &summary, path, OutputFormat::from_path(path))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::BenchXor {
            seed,
            size,
            runs,
            ensemble_size,
            output,
        } => {
            let data = xor_benchmark(seed, size)?;
            let cfg = ExperimentConfig {
                normalization: NormalizationKind::None,
                classifiers: vec![
                    ClassifierKind::SwapTest,
                    ClassifierKind::Cosine,
                    ClassifierKind::Distance,
                ],
                d_values: vec![ensemble_size],
                runs,
                seed,
                ..ExperimentConfig::default()
            };
            let (results, summary) = run_dataset(&data, "xor", &cfg)?;
            print_summary(&summary);
            if let Some(path) = &output {
                emit_results(&results, &summary, path, OutputFormat::from_path(path))?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Selftest => selftest(),
    }
}

fn stat(mean: f64, std: f64) -> String {
    format!("{mean:.3} +- {std:.3}")
}

fn print_summary(summary: &[SummaryRow]) {
    println!(
        "{:<28} {:<7} {:<9} {:>2} {:<8} {:>4}  {:<15} {:<15} {:<15}",
        "dataset", "norm", "kind", "d", "mode", "runs", "single", "internal", "ensemble"
    );
    for s in summary {
        println!(
            "{:<28} {:<7} {:<9} {:>2} {:<8} {:>4}  {:<15} {:<15} {:<15}",
            s.dataset,
            s.normalization.to_string(),
            s.classifier.to_string(),
            s.control_qubits,
            s.mode.to_string(),
            s.runs,
            stat(s.single_mean, s.single_std),
            stat(s.internal_mean, s.internal_std),
            stat(s.ensemble_mean, s.ensemble_std),
        );
    }
}

fn ensure(cond: bool, what: &str) -> Result<()> {
    if cond {
        println!("ok: {what}");
        Ok(())
    } else {
        Err(qens::Error::Numeric(format!("selftest failed: {what}")))
    }
}

fn selftest() -> Result<()> {
    let data = Dataset::new(
        vec![
            vec![0.6, 0.8],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.8, 0.6],
        ],
        vec![1, -1, 1, -1],
    )?;
    let enc = encode_training_set(&data)?;
    let x = unit_normalize(&[0.8, -0.6])?;
    let x_pad = pad_test_vector(&enc, &x)?;
    let labels: Vec<i8> = enc
        .label_bits
        .iter()
        .map(|&b| if b == 0 { 1 } else { -1 })
        .collect();

    for kind in ClassifierKind::ALL {
        let run = run_classifier(kind, &enc, &x)?;
        let oracle = analytic_oracle(kind, &enc.alpha, &labels, &x_pad)?;
        ensure(
            (run.eo - oracle.eo).abs() <= 1e-9,
            &format!("{kind} circuit matches its closed form"),
        )?;
    }

    let program = SelectionProgram::build(enc.index_qubits, enc.feature_qubits, 2)?;
    let rows = 1usize << enc.index_qubits;
    let cols = 1usize << enc.feature_qubits;
    let mut bijective = true;
    let mut kept_counts = true;
    for c in 0..4u64 {
        let mut seen = vec![false; rows * cols];
        let mut kept = 0;
        for i in 0..rows {
            for j in 0..cols {
                let (ip, jp) = program.apply_classical(c, i, j);
                if std::mem::replace(&mut seen[ip * cols + jp], true) {
                    bijective = false;
                }
                if program.kept_with(0, ip, jp) {
                    kept += 1;
                }
            }
        }
        if kept * 4 != rows * cols * 3 {
            kept_counts = false;
        }
    }
    ensure(bijective, "selection permutations are bijections")?;
    ensure(kept_counts, "each branch keeps exactly 3/4 of the grid")?;

    let cfg = EnsembleConfig::new(ClassifierKind::Distance, 2);
    let w = [0.4, 0.3, 0.2, 0.1];
    let out = run_test_mode(&cfg, &w, &enc, &x)?;
    let (mut num, mut den) = (0.0, 0.0);
    for c in 0..4u64 {
        let b = evaluate_branch(&cfg, &enc, &x, c)?;
        num += w[c as usize] * b.weight * b.eo;
        den += w[c as usize] * b.weight;
    }
    ensure(
        (out.eo - num / den).abs() <= 1e-9,
        "ensemble readout matches the weighted branch combination",
    )?;

    let vecs: Vec<Vec<f64>> = data
        .rows()
        .iter()
        .map(|r| unit_normalize(r))
        .collect::<Result<_>>()?;
    let outputs = run_train_mode(&cfg, &enc, &vecs)?;
    let (model, report) = fit_stacking(&outputs, data.labels(), &OptimizerConfig::default())?;
    ensure(
        report.final_loss <= report.initial_loss + 1e-12,
        "weight fitting never raises the loss",
    )?;
    ensure(
        (model.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        "fitted weights form a distribution",
    )?;

    let exact = run_classifier(ClassifierKind::Distance, &enc, &x)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sampled = sample_classifier(ClassifierKind::Distance, &enc, &x, 4096, &mut rng)?;
    ensure(
        (sampled.eo - exact.eo).abs() <= 0.05,
        "4096-shot sampling tracks the exact reading",
    )?;

    println!("all checks passed");
    Ok(())
}
