//! Classical weight learning for the ensemble: logistic stacking over the
//! per-branch readings collected by the train-time pipeline.
//!
//! The model maps the combined favorable-outcome probability E through
//! sigma(k * E + b); weights are learned by projected gradient descent on
//! the mean log-loss with w kept nonnegative, then rescaled to sum to 1,
//! which leaves every prediction unchanged because E is a ratio that is
//! invariant under positive rescaling of w.

use crate::classifier::sign_with_tiebreak;
use crate::ensemble::TrainOutputs;
use crate::error::{Error, Result};

/// Sigmoid outputs are clamped to [SIGMA_CLAMP, 1 - SIGMA_CLAMP] inside
/// the loss so perfect separation keeps it finite.
pub const SIGMA_CLAMP: f64 = 1e-12;

/// Learned combination parameters.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StackingModel {
    /// Nonnegative branch weights; rescaled to sum to 1 after fitting.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scale: f64,
}

/// Descent controls. The bounds themselves are fixed: w >= 0, bias and
/// scale free.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once the projected-gradient step norm falls below this.
    pub tolerance: f64,
    pub init_scale: f64,
    pub init_bias: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iterations: 500,
            tolerance: 1e-6,
            // A scale well above 1 breaks the sigmoid's flat region around
            // the small differences typical of E values near 0.5.
            init_scale: 10.0,
            init_bias: 0.0,
        }
    }
}

/// What a fit did, for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Accepted descent steps.
    pub iterations: usize,
}

/// The ensemble's combined favorable-outcome probability
/// E = sum_c w_c p_c p0_c / sum_c w_c p_c.
pub fn ensemble_output(w: &[f64], p_row: &[f64], p0_row: &[f64]) -> Result<f64> {
    if w.len() != p_row.len() || w.len() != p0_row.len() {
        return Err(Error::DimensionMismatch {
            expected: w.len(),
            actual: p_row.len().min(p0_row.len()),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((wc, pc), p0c) in w.iter().zip(p_row).zip(p0_row) {
        num += wc * pc * p0c;
        den += wc * pc;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateCombination);
    }
    Ok(num / den)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_shapes(outputs: &TrainOutputs, labels: &[i8]) -> Result<()> {
    if outputs.p.len() != labels.len() || outputs.p0.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: outputs.p.len().min(outputs.p0.len()),
        });
    }
    if let Some(&l) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::Config(format!("label must be +1 or -1, got {l}")));
    }
    Ok(())
}

/// Mean negative log-likelihood of the labels under
/// sigma(scale * E_i + bias), with E_i from `ensemble_output`.
pub fn log_loss(model: &StackingModel, outputs: &TrainOutputs, labels: &[i8]) -> Result<f64> {
    check_shapes(outputs, labels)?;
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let e = ensemble_output(&model.weights, &outputs.p[i], &outputs.p0[i])?;
        let z = model.scale * e + model.bias;
        let s = sigmoid(z).clamp(SIGMA_CLAMP, 1.0 - SIGMA_CLAMP);
        let t = f64::from(1 + label) / 2.0;
        loss -= t * s.ln() + (1.0 - t) * (1.0 - s).ln();
    }
    Ok(loss / labels.len() as f64)
}

/// Analytic gradient of `log_loss` with respect to (weights, bias, scale).
/// Samples whose sigmoid sits in a clamped region contribute zero, which
/// matches the flat clamped loss there.
pub fn log_loss_gradient(
    model: &StackingModel,
    outputs: &TrainOutputs,
    labels: &[i8],
) -> Result<(Vec<f64>, f64, f64)> {
    check_shapes(outputs, labels)?;
    let branches = model.weights.len();
    let samples = labels.len() as f64;
    let mut dw = vec![0.0; branches];
    let mut db = 0.0;
    let mut dk = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let p_row = &outputs.p[i];
        let p0_row = &outputs.p0[i];
        let e = ensemble_output(&model.weights, p_row, p0_row)?;
        let z = model.scale * e + model.bias;
        let s = sigmoid(z);
        if s <= SIGMA_CLAMP || s >= 1.0 - SIGMA_CLAMP {
            continue;
        }
        let t = f64::from(1 + label) / 2.0;
        let dz = (s - t) / samples;
        db += dz;
        dk += dz * e;
        let den: f64 = model
            .weights
            .iter()
            .zip(p_row)
            .map(|(wc, pc)| wc * pc)
            .sum();
        for c in 0..branches {
            // dE/dw_c of the ratio: p_c (p0_c - E) / sum w p.
            dw[c] += dz * model.scale * p_row[c] * (p0_row[c] - e) / den;
        }
    }
    Ok((dw, db, dk))
}

fn project(w: &mut [f64]) {
    for wc in w {
        if *wc < 0.0 {
            *wc = 0.0;
        }
    }
}

/// Fits weights, bias, and scale by projected gradient descent with
/// backtracking line search. The loss never ends above its value at the
/// uniform-weight initialization; if descent stalls immediately, the
/// initialization itself is returned.
pub fn fit_stacking(
    outputs: &TrainOutputs,
    labels: &[i8],
    cfg: &OptimizerConfig,
) -> Result<(StackingModel, FitReport)> {
    check_shapes(outputs, labels)?;
    if cfg.max_iterations == 0 || cfg.tolerance <= 0.0 {
        return Err(Error::Config(
            "optimizer needs max_iterations >= 1 and tolerance > 0".into(),
        ));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    if labels.len() < 2 || pos == 0 || pos == labels.len() {
        return Err(Error::DegenerateLabels);
    }

    let branches = outputs.num_branches;
    let init = StackingModel {
        weights: vec![1.0 / branches as f64; branches],
        bias: cfg.init_bias,
        scale: cfg.init_scale,
    };
    let initial_loss = log_loss(&init, outputs, labels)?;

    let mut model = init.clone();
    let mut loss = initial_loss;
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        let (dw, db, dk) = log_loss_gradient(&model, outputs, labels)?;

        // Size of the bound-respecting step a unit learning rate would
        // take; small means a KKT point of the projected problem.
        let mut step_norm2 = (db * db) + (dk * dk);
        for (wc, gc) in model.weights.iter().zip(&dw) {
            let moved = (wc - gc).max(0.0) - wc;
            step_norm2 += moved * moved;
        }
        if step_norm2.sqrt() <= cfg.tolerance {
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let mut cand = model.clone();
            for (wc, gc) in cand.weights.iter_mut().zip(&dw) {
                *wc -= alpha * gc;
            }
            project(&mut cand.weights);
            cand.bias -= alpha * db;
            cand.scale -= alpha * dk;

            // Directional decrease actually available after projection.
            let mut descent = (cand.bias - model.bias) * db + (cand.scale - model.scale) * dk;
            for ((new, old), gc) in cand.weights.iter().zip(&model.weights).zip(&dw) {
                descent += (new - old) * gc;
            }

            match log_loss(&cand, outputs, labels) {
                Ok(cand_loss) if cand_loss <= loss + 1e-4 * descent => {
                    model = cand;
                    loss = cand_loss;
                    accepted = true;
                    break;
                }
                // A candidate outside the feasible region (all surviving
                // weight mass gone) just shortens the step.
                Ok(_) | Err(Error::DegenerateCombination) => alpha *= 0.5,
                Err(other) => return Err(other),
            }
        }
        if !accepted {
            break;
        }
        iterations += 1;
    }

    let sum: f64 = model.weights.iter().sum();
    if sum > 0.0 {
        for wc in &mut model.weights {
            *wc /= sum;
        }
    }
    let final_loss = log_loss(&model, outputs, labels)?;
    if final_loss > initial_loss {
        return Ok((
            init,
            FitReport {
                initial_loss,
                final_loss: initial_loss,
                iterations: 0,
            },
        ));
    }
    Ok((
        model,
        FitReport {
            initial_loss,
            final_loss,
            iterations,
        },
    ))
}

/// Decision rule on a combined output: sign of scale * E + bias, ties to
/// +1. Equivalent to thresholding sigma(scale * E + bias) at 1/2.
pub fn predict(model: &StackingModel, eo: f64) -> Result<i8> {
    if model.scale == 0.0 {
        return Err(Error::DegenerateModel(
            "scale is zero, the decision threshold is undefined".into(),
        ));
    }
    sign_with_tiebreak(model.scale * eo + model.bias)
}

/// Two-run evaluation recovering a signed-weight combination from a
/// backend that only accepts nonnegative weights summing to 1.
///
/// Shifting every weight by `b_shift` makes the vector positive; the
/// callback is run once with the shifted weights and once with uniform
/// weights, each L1-normalized, and the results recombine to
/// w.beta / ||w||_2 whenever the callback is linear in its weights.
pub fn signed_weight_combine(
    w_signed: &[f64],
    b_shift: f64,
    mut run: impl FnMut(&[f64]) -> Result<f64>,
) -> Result<f64> {
    if w_signed.is_empty() {
        return Err(Error::InvalidWeights("no weights".into()));
    }
    let norm = w_signed.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector { norm });
    }
    let shifted: Vec<f64> = w_signed.iter().map(|w| w + b_shift).collect();
    if let Some(bad) = shifted.iter().find(|&&w| w <= 0.0) {
        return Err(Error::InvalidWeights(format!(
            "shift {b_shift} leaves a nonpositive weight {bad}"
        )));
    }
    let s1: f64 = shifted.iter().sum();
    let s2 = b_shift * w_signed.len() as f64;
    let run1 = run(&shifted.iter().map(|w| w / s1).collect::<Vec<f64>>())?;
    let run2 = run(&vec![1.0 / w_signed.len() as f64; w_signed.len()])?;
    Ok((s1 * run1 - s2 * run2) / norm)
}
