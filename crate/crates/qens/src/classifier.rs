//! Three instance-based binary classifiers that interfere a test vector
//! with amplitude-encoded training data, plus closed-form oracles that
//! reproduce every circuit value classically.
//!
//! All three share one output convention: `eo` is the probability of the
//! favorable outcome on the classifier's output qubit(s), so `eo` lives in
//! [0, 1] and larger values vote for class +1. `raw` and `score` are the
//! kind-specific quantities derived from it.

use std::ops::Range;

use rand::Rng;

use crate::encoding::{self, EncodedTrainingSet};
use crate::error::{Error, Result};
use crate::sim::{Circuit, GateOp, Statevector};

/// The classifier family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    /// Swap test between a |+⟩ auxiliary and the branch ancilla; the
    /// control outcome encodes the signed sum of cosine similarities.
    Cosine,
    /// Interference of test and training branches on one ancilla; the
    /// label qubit is read conditionally on the ancilla landing in 0.
    Distance,
    /// Swap test between the feature register and a separate test
    /// register; outcome parity with the label encodes squared overlaps.
    SwapTest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [
        ClassifierKind::Cosine,
        ClassifierKind::Distance,
        ClassifierKind::SwapTest,
    ];
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" => Ok(ClassifierKind::Cosine),
            "distance" => Ok(ClassifierKind::Distance),
            "swap" | "swaptest" | "swap-test" => Ok(ClassifierKind::SwapTest),
            other => Err(Error::Config(format!(
                "unknown classifier {other:?} (expected cosine, distance, or swap)"
            ))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassifierKind::Cosine => "cosine",
            ClassifierKind::Distance => "distance",
            ClassifierKind::SwapTest => "swap",
        };
        f.write_str(s)
    }
}

/// Where each register sits in the global statevector, from qubit 0 up:
/// classifier auxiliaries, label, feature, index, then (swap kind only)
/// the test register. Ensemble qubits stack on top of `num_qubits`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassifierLayout {
    pub kind: ClassifierKind,
    pub num_qubits: usize,
    /// Swap-test control, measured as the output for cosine and swap.
    pub swap_control: Option<usize>,
    /// Cosine only: the auxiliary prepared in |+⟩.
    pub plus_aux: Option<usize>,
    /// Cosine: branch ancilla. Distance: interference ancilla.
    pub ancilla: Option<usize>,
    pub label: usize,
    pub feature: Range<usize>,
    pub index: Range<usize>,
    pub test: Range<usize>,
}

impl ClassifierLayout {
    pub fn new(kind: ClassifierKind, index_qubits: usize, feature_qubits: usize) -> Self {
        let (n, m) = (index_qubits, feature_qubits);
        match kind {
            ClassifierKind::Cosine => ClassifierLayout {
                kind,
                num_qubits: 4 + m + n,
                swap_control: Some(0),
                plus_aux: Some(1),
                ancilla: Some(2),
                label: 3,
                feature: 4..4 + m,
                index: 4 + m..4 + m + n,
                test: 0..0,
            },
            ClassifierKind::Distance => ClassifierLayout {
                kind,
                num_qubits: 2 + m + n,
                swap_control: None,
                plus_aux: None,
                ancilla: Some(0),
                label: 1,
                feature: 2..2 + m,
                index: 2 + m..2 + m + n,
                test: 0..0,
            },
            ClassifierKind::SwapTest => ClassifierLayout {
                kind,
                num_qubits: 2 + 2 * m + n,
                swap_control: Some(0),
                plus_aux: None,
                ancilla: None,
                label: 1,
                feature: 2..2 + m,
                index: 2 + m..2 + m + n,
                test: 2 + m + n..2 + 2 * m + n,
            },
        }
    }

    /// Qubits whose joint outcome is the classifier's reading.
    pub fn output_qubits(&self) -> Vec<usize> {
        match self.kind {
            ClassifierKind::Cosine => vec![self.swap_control.unwrap()],
            ClassifierKind::Distance => vec![self.label],
            ClassifierKind::SwapTest => vec![self.swap_control.unwrap(), self.label],
        }
    }

    /// The qubit that must land on 0 before the output is read, if any.
    pub fn postselect_qubit(&self) -> Option<usize> {
        match self.kind {
            ClassifierKind::Distance => self.ancilla,
            _ => None,
        }
    }
}

/// One classifier reading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierOutput {
    /// Kind-specific measured quantity: cosine P(1), distance P(0|0),
    /// swap ⟨σz ⊗ σz⟩.
    pub raw: f64,
    /// Signed decision value; positive votes +1.
    pub score: f64,
    /// Probability of the favorable output outcome, in [0, 1].
    pub eo: f64,
    pub label: i8,
    /// Distance kind: probability that the ancilla postselection succeeds.
    pub ancilla_success: Option<f64>,
}

/// A branch-level reading: the unnormalized output-state weight alongside
/// the conditional output distribution. Weights are the p_c factors a
/// weighted ensemble combines with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchEvaluation {
    /// Squared norm of the branch's output state, relative to a unit
    /// branch input. 1 when nothing was masked away.
    pub weight: f64,
    /// Conditional probability of the favorable outcome. 0.5 when the
    /// branch carries no mass at all.
    pub eo: f64,
    pub output: ClassifierOutput,
}

/// Sign decision with ties (score exactly 0) resolved to +1.
pub fn sign_with_tiebreak(score: f64) -> Result<i8> {
    if score.is_nan() {
        return Err(Error::Numeric("decision score is NaN".into()));
    }
    Ok(if score >= 0.0 { 1 } else { -1 })
}

/// The measurement-side circuit of a classifier, given its layout.
pub fn classifier_circuit(layout: &ClassifierLayout) -> Circuit {
    let mut circuit = Circuit::new(layout.num_qubits);
    match layout.kind {
        ClassifierKind::Cosine => {
            let s = layout.swap_control.unwrap();
            let aux = layout.plus_aux.unwrap();
            let anc = layout.ancilla.unwrap();
            circuit.push(GateOp::h(s)).unwrap();
            circuit.push(GateOp::cswap(s, aux, anc)).unwrap();
            circuit.push(GateOp::h(s)).unwrap();
        }
        ClassifierKind::Distance => {
            circuit.push(GateOp::h(layout.ancilla.unwrap())).unwrap();
        }
        ClassifierKind::SwapTest => {
            let s = layout.swap_control.unwrap();
            circuit.push(GateOp::h(s)).unwrap();
            for (f, t) in layout.feature.clone().zip(layout.test.clone()) {
                circuit.push(GateOp::cswap(s, f, t)).unwrap();
            }
            circuit.push(GateOp::h(s)).unwrap();
        }
    }
    circuit
}

/// Derives the kind-specific `raw` value from the favorable-outcome
/// probability.
pub fn eo_to_raw(kind: ClassifierKind, eo: f64) -> f64 {
    match kind {
        ClassifierKind::Cosine => 1.0 - eo,
        ClassifierKind::Distance => eo,
        ClassifierKind::SwapTest => 2.0 * eo - 1.0,
    }
}

/// Derives the signed decision value from the favorable-outcome
/// probability. Zero sits exactly at each kind's decision threshold.
pub fn eo_to_score(kind: ClassifierKind, eo: f64) -> f64 {
    match kind {
        ClassifierKind::Cosine => 4.0 * eo - 3.0,
        ClassifierKind::Distance => eo - 0.5,
        ClassifierKind::SwapTest => 2.0 * eo - 1.0,
    }
}

/// Assembles a full output record from the favorable-outcome probability.
pub fn output_from_eo(
    kind: ClassifierKind,
    eo: f64,
    ancilla_success: Option<f64>,
) -> Result<ClassifierOutput> {
    let raw = eo_to_raw(kind, eo);
    let score = eo_to_score(kind, eo);
    Ok(ClassifierOutput {
        raw,
        score,
        eo,
        label: sign_with_tiebreak(score)?,
        ancilla_success,
    })
}

/// Runs one classifier exactly: state preparation, measurement circuit,
/// and closed-form probability extraction from the final statevector.
pub fn run_classifier(
    kind: ClassifierKind,
    enc: &EncodedTrainingSet,
    x: &[f64],
) -> Result<ClassifierOutput> {
    let (mut state, layout) = encoding::build_initial_state(kind, enc, x)?;
    state.apply_circuit(&classifier_circuit(&layout))?;
    read_output_exact(&state, &layout)
}

/// Reads a classifier's output distribution from a finished state.
pub(crate) fn read_output_exact(
    state: &Statevector,
    layout: &ClassifierLayout,
) -> Result<ClassifierOutput> {
    match layout.kind {
        ClassifierKind::Cosine => {
            let p1 = state.probability(layout.swap_control.unwrap(), 1)?;
            output_from_eo(layout.kind, 1.0 - p1, None)
        }
        ClassifierKind::Distance => {
            let (pa, collapsed) = state.postselect(layout.ancilla.unwrap(), 0)?;
            let p0 = collapsed.probability(layout.label, 0)?;
            output_from_eo(layout.kind, p0, Some(pa))
        }
        ClassifierKind::SwapTest => {
            let dist =
                state.joint_distribution(&[layout.swap_control.unwrap(), layout.label])?;
            // Keys pack (swap control, label); even parity is favorable.
            output_from_eo(layout.kind, dist[0b00] + dist[0b11], None)
        }
    }
}

/// Runs one classifier with a finite shot budget. Distance-kind shots
/// whose ancilla lands on 1 are discarded before the label is read.
pub fn sample_classifier(
    kind: ClassifierKind,
    enc: &EncodedTrainingSet,
    x: &[f64],
    shots: u64,
    rng: &mut impl Rng,
) -> Result<ClassifierOutput> {
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    let (mut state, layout) = encoding::build_initial_state(kind, enc, x)?;
    state.apply_circuit(&classifier_circuit(&layout))?;
    match kind {
        ClassifierKind::Cosine => {
            let counts = state.sample(&[layout.swap_control.unwrap()], shots, rng)?;
            let ones = *counts.get(&1).unwrap_or(&0) as f64;
            output_from_eo(kind, 1.0 - ones / shots as f64, None)
        }
        ClassifierKind::Distance => {
            let counts =
                state.sample(&[layout.ancilla.unwrap(), layout.label], shots, rng)?;
            let kept0 = *counts.get(&0b00).unwrap_or(&0);
            let kept1 = *counts.get(&0b10).unwrap_or(&0);
            let kept = kept0 + kept1;
            if kept == 0 {
                return Err(Error::Numeric(format!(
                    "all {shots} shots failed the ancilla postselection"
                )));
            }
            output_from_eo(
                kind,
                kept0 as f64 / kept as f64,
                Some(kept as f64 / shots as f64),
            )
        }
        ClassifierKind::SwapTest => {
            let counts = state.sample(
                &[layout.swap_control.unwrap(), layout.label],
                shots,
                rng,
            )?;
            let even = *counts.get(&0b00).unwrap_or(&0) + *counts.get(&0b11).unwrap_or(&0);
            output_from_eo(kind, even as f64 / shots as f64, None)
        }
    }
}

/// Evaluates one classifier from per-instance (training, test) vector
/// pairs without touching the simulator.
///
/// Vectors need not be unit norm; this is the path that serves the
/// postselection sub-vectors an ensemble branch sees, where the surviving
/// test components can differ per training instance. The decision rule is
/// only meaningful on unit-norm inputs; on sub-normalized pairs the value
/// feeds a weighted combination instead.
pub fn analytic_pairs(
    kind: ClassifierKind,
    train: &[Vec<f64>],
    test: &[Vec<f64>],
    labels: &[i8],
) -> Result<BranchEvaluation> {
    let n = train.len();
    if n == 0 {
        return Err(Error::Config("no training instances".into()));
    }
    if test.len() != n || labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: test.len().min(labels.len()),
        });
    }
    let width = train[0].len();
    for v in train.iter().chain(test) {
        if v.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: v.len(),
            });
        }
    }
    if let Some(&l) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::Config(format!("label must be +1 or -1, got {l}")));
    }

    let nf = n as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let norm2 = |a: &[f64]| dot(a, a);

    match kind {
        ClassifierKind::Cosine => {
            // P(1) = (1/4) (1 - 2 sum_i y_i <b_i|a_i> / (sqrt(2) sum_i (|a_i|^2 + |b_i|^2)))
            let mut s = 0.0;
            let mut t = 0.0;
            for i in 0..n {
                s += norm2(&train[i]) + norm2(&test[i]);
                t += f64::from(labels[i]) * dot(&train[i], &test[i]);
            }
            if s == 0.0 {
                return empty_branch(kind);
            }
            let p1 = 0.25 * (1.0 - 2.0 * t / (std::f64::consts::SQRT_2 * s));
            let eo = 1.0 - p1;
            Ok(BranchEvaluation {
                weight: s / (2.0 * nf),
                eo,
                output: output_from_eo(kind, eo, None)?,
            })
        }
        ClassifierKind::Distance => {
            // P(k|0) = sum_{i: l_i = k} |b_i + a_i|^2 / sum_i |b_i + a_i|^2
            let mut dsum = 0.0;
            let mut d0 = 0.0;
            let mut s_in = 0.0;
            for i in 0..n {
                let merged: f64 = train[i]
                    .iter()
                    .zip(&test[i])
                    .map(|(a, b)| (a + b) * (a + b))
                    .sum();
                dsum += merged;
                if labels[i] == 1 {
                    d0 += merged;
                }
                s_in += norm2(&train[i]) + norm2(&test[i]);
            }
            if dsum == 0.0 || s_in == 0.0 {
                return empty_branch(kind);
            }
            let eo = d0 / dsum;
            Ok(BranchEvaluation {
                weight: dsum / (4.0 * nf),
                eo,
                output: output_from_eo(kind, eo, Some(dsum / (2.0 * s_in)))?,
            })
        }
        ClassifierKind::SwapTest => {
            // P(q,k) = (1/2N) sum_{i: l_i = k} (|a_i|^2 |b_i|^2 + (-1)^q <a_i|b_i>^2)
            let mut v = 0.0;
            let mut g = 0.0;
            for i in 0..n {
                v += norm2(&train[i]) * norm2(&test[i]);
                g += f64::from(labels[i]) * dot(&train[i], &test[i]).powi(2);
            }
            if v == 0.0 {
                return empty_branch(kind);
            }
            let eo = 0.5 * (1.0 + g / v);
            Ok(BranchEvaluation {
                weight: v / nf,
                eo,
                output: output_from_eo(kind, eo, None)?,
            })
        }
    }
}

/// A branch whose selected state carries no amplitude: zero weight and a
/// neutral conditional output, mirroring the shot-count convention for
/// branches that never fire.
fn empty_branch(kind: ClassifierKind) -> Result<BranchEvaluation> {
    Ok(BranchEvaluation {
        weight: 0.0,
        eo: 0.5,
        output: output_from_eo(kind, 0.5, None)?,
    })
}

/// Closed-form classifier evaluation on a shared test vector.
///
/// Mirrors `run_classifier` exactly, including the failure mode: a
/// distance reading does not exist when the test vector is antipodal to
/// every training vector, because no amplitude survives the ancilla
/// postselection.
pub fn analytic_oracle(
    kind: ClassifierKind,
    train: &[Vec<f64>],
    labels: &[i8],
    x: &[f64],
) -> Result<ClassifierOutput> {
    let test = vec![x.to_vec(); train.len()];
    let eval = analytic_pairs(kind, train, &test, labels)?;
    let has_mass = train.iter().chain(&test).flatten().any(|&v| v != 0.0);
    if kind == ClassifierKind::Distance && eval.weight == 0.0 && has_mass {
        return Err(Error::Numeric(
            "ancilla postselection is impossible: the test vector is antipodal \
             to every training vector"
                .into(),
        ));
    }
    Ok(eval.output)
}
