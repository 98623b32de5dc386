//! Classical-side data preparation: feature scaling fitted on training
//! data, unit-norm amplitude tables padded to power-of-two registers, and
//! direct injection of the entangled initial states the classifiers
//! measure.

use num_complex::Complex64;

use crate::classifier::{ClassifierKind, ClassifierLayout};
use crate::error::{Error, Result};
use crate::sim::Statevector;

/// Vectors with a smaller L2 norm cannot be amplitude-encoded.
pub const EPS_NORM: f64 = 1e-12;

/// Tolerance when checking that a caller-supplied test vector is unit norm.
pub const EPS_UNIT_INPUT: f64 = 1e-9;

/// A labeled tabular dataset. Labels are +1 / -1.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Config("dataset has no rows".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        let width = features[0].len();
        if width == 0 {
            return Err(Error::Config("dataset has no feature columns".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: row.len(),
                });
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite feature {v} in row {i}")));
            }
        }
        if let Some(&l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Config(format!("label must be +1 or -1, got {l}")));
        }
        Ok(Dataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn label(&self, i: usize) -> i8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    /// Rows at `indices`, in order. Indices must be in range.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// (count of +1 labels, count of -1 labels).
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (pos, self.labels.len() - pos)
    }
}

/// Feature-scaling family, fitted on training data only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationKind {
    None,
    Std,
    MinMax,
}

impl std::str::FromStr for NormalizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(NormalizationKind::None),
            "std" => Ok(NormalizationKind::Std),
            "minmax" => Ok(NormalizationKind::MinMax),
            other => Err(Error::Config(format!(
                "unknown normalization {other:?} (expected none, std, or minmax)"
            ))),
        }
    }
}

impl std::fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NormalizationKind::None => "none",
            NormalizationKind::Std => "std",
            NormalizationKind::MinMax => "minmax",
        };
        f.write_str(s)
    }
}

/// Fitted per-feature scaling parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum NormalizationSpec {
    None,
    /// Per-feature mean and population standard deviation.
    Std { mean: Vec<f64>, sigma: Vec<f64> },
    /// Per-feature training minimum and maximum.
    MinMax { min: Vec<f64>, max: Vec<f64> },
}

impl NormalizationSpec {
    pub fn kind(&self) -> NormalizationKind {
        match self {
            NormalizationSpec::None => NormalizationKind::None,
            NormalizationSpec::Std { .. } => NormalizationKind::Std,
            NormalizationSpec::MinMax { .. } => NormalizationKind::MinMax,
        }
    }
}

/// Fits per-feature scaling parameters on `data`.
///
/// Degenerate features (zero spread) are not rejected here; they map to 0
/// when the spec is applied.
pub fn fit_normalization(data: &Dataset, kind: NormalizationKind) -> NormalizationSpec {
    let n = data.len() as f64;
    let width = data.num_features();
    match kind {
        NormalizationKind::None => NormalizationSpec::None,
        NormalizationKind::Std => {
            let mut mean = vec![0.0; width];
            for row in data.rows() {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= n;
            }
            let mut var = vec![0.0; width];
            for row in data.rows() {
                for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            let sigma = var.into_iter().map(|s| (s / n).sqrt()).collect();
            NormalizationSpec::Std { mean, sigma }
        }
        NormalizationKind::MinMax => {
            let mut min = data.row(0).to_vec();
            let mut max = data.row(0).to_vec();
            for row in data.rows() {
                for ((lo, hi), v) in min.iter_mut().zip(&mut max).zip(row) {
                    *lo = lo.min(*v);
                    *hi = hi.max(*v);
                }
            }
            NormalizationSpec::MinMax { min, max }
        }
    }
}

/// Applies fitted scaling to one feature vector.
///
/// Std maps zero-spread features to 0; minmax clips to [0, 1] so unseen
/// test values cannot escape the training range.
pub fn apply_normalization(spec: &NormalizationSpec, x: &[f64]) -> Result<Vec<f64>> {
    let check_len = |expected: usize| {
        if x.len() != expected {
            Err(Error::DimensionMismatch {
                expected,
                actual: x.len(),
            })
        } else {
            Ok(())
        }
    };
    match spec {
        NormalizationSpec::None => Ok(x.to_vec()),
        NormalizationSpec::Std { mean, sigma } => {
            check_len(mean.len())?;
            Ok(x.iter()
                .zip(mean)
                .zip(sigma)
                .map(|((v, m), s)| if *s == 0.0 { 0.0 } else { (v - m) / s })
                .collect())
        }
        NormalizationSpec::MinMax { min, max } => {
            check_len(min.len())?;
            Ok(x.iter()
                .zip(min)
                .zip(max)
                .map(|((v, lo), hi)| {
                    if hi == lo {
                        0.0
                    } else {
                        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                    }
                })
                .collect())
        }
    }
}

/// Rescales `x` to unit L2 norm.
pub fn unit_normalize(x: &[f64]) -> Result<Vec<f64>> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= EPS_NORM {
        return Err(Error::ZeroVector { norm });
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Smallest `k` with `2^k >= x`; `ceil_log2(1) == 0`.
pub fn ceil_log2(x: usize) -> usize {
    assert!(x >= 1);
    (usize::BITS - (x - 1).leading_zeros()) as usize
}

/// Amplitude-encoded training table: unit-norm rows zero-padded to a
/// 2^index_qubits x 2^feature_qubits grid, plus the label bit per row.
#[derive(Clone, Debug)]
pub struct EncodedTrainingSet {
    pub num_samples: usize,
    pub num_features: usize,
    pub index_qubits: usize,
    pub feature_qubits: usize,
    /// Row `i`, column `j`: amplitude of feature basis state `j` for
    /// training instance `i`. Rows at or beyond `num_samples` are zero.
    pub alpha: Vec<Vec<f64>>,
    /// Label bit per row: 0 encodes +1, 1 encodes -1. Padding rows hold 0.
    pub label_bits: Vec<u8>,
}

impl EncodedTrainingSet {
    /// Signed label of row `i` recovered from its bit.
    pub fn label_sign(&self, i: usize) -> f64 {
        1.0 - 2.0 * f64::from(self.label_bits[i])
    }
}

/// Unit-normalizes every row of `data` and lays it out on power-of-two
/// registers. Rows with vanishing norm are rejected.
pub fn encode_training_set(data: &Dataset) -> Result<EncodedTrainingSet> {
    let n = data.len();
    let m = data.num_features();
    let index_qubits = ceil_log2(n);
    let feature_qubits = ceil_log2(m);
    let rows = 1usize << index_qubits;
    let cols = 1usize << feature_qubits;

    let mut alpha = vec![vec![0.0; cols]; rows];
    let mut label_bits = vec![0u8; rows];
    for i in 0..n {
        let unit = unit_normalize(data.row(i))?;
        alpha[i][..m].copy_from_slice(&unit);
        label_bits[i] = if data.label(i) == 1 { 0 } else { 1 };
    }
    Ok(EncodedTrainingSet {
        num_samples: n,
        num_features: m,
        index_qubits,
        feature_qubits,
        alpha,
        label_bits,
    })
}

/// Validates a caller-supplied unit test vector and zero-pads it to the
/// feature register width.
pub fn pad_test_vector(enc: &EncodedTrainingSet, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != enc.num_features {
        return Err(Error::DimensionMismatch {
            expected: enc.num_features,
            actual: x.len(),
        });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > EPS_UNIT_INPUT {
        return Err(Error::NotNormalized {
            norm,
            tolerance: EPS_UNIT_INPUT,
        });
    }
    let mut padded = vec![0.0; 1 << enc.feature_qubits];
    padded[..x.len()].copy_from_slice(x);
    Ok(padded)
}

/// Builds the entangled register state a classifier starts from, together
/// with the qubit layout describing where each register sits.
///
/// Register order from qubit 0 upward: classifier auxiliaries, label,
/// feature, index, and (swap kind only) the test register.
pub fn build_initial_state(
    kind: ClassifierKind,
    enc: &EncodedTrainingSet,
    x: &[f64],
) -> Result<(Statevector, ClassifierLayout)> {
    let x_pad = pad_test_vector(enc, x)?;
    let layout = ClassifierLayout::new(kind, enc.index_qubits, enc.feature_qubits);
    let mut amps = vec![Complex64::ZERO; 1usize << layout.num_qubits];
    let n = enc.num_samples as f64;

    match kind {
        ClassifierKind::Cosine => {
            // (1/sqrt(2)) (psi_x |0>_a + psi |1>_a) with the swap-test
            // auxiliary in |+> and the swap control in |0>. The a=1 branch
            // carries the test vector with its label qubit in |->.
            let aux = layout.plus_aux.expect("cosine layout has a plus auxiliary");
            let anc = layout.ancilla.expect("cosine layout has a branch ancilla");
            let c_train = 1.0 / (2.0 * n.sqrt());
            let c_test = 1.0 / (2.0 * (2.0 * n).sqrt());
            for i in 0..enc.num_samples {
                let ibits = i << layout.index.start;
                let lbit = (enc.label_bits[i] as usize) << layout.label;
                for u in 0..2usize {
                    let ubits = u << aux;
                    for (j, &a) in enc.alpha[i].iter().enumerate() {
                        if a != 0.0 {
                            let z = ubits | lbit | (j << layout.feature.start) | ibits;
                            amps[z] += Complex64::new(c_train * a, 0.0);
                        }
                    }
                    for (j, &v) in x_pad.iter().enumerate() {
                        if v != 0.0 {
                            for b in 0..2usize {
                                let sign = if b == 0 { 1.0 } else { -1.0 };
                                let z = ubits
                                    | (1 << anc)
                                    | (b << layout.label)
                                    | (j << layout.feature.start)
                                    | ibits;
                                amps[z] += Complex64::new(sign * c_test * v, 0.0);
                            }
                        }
                    }
                }
            }
        }
        ClassifierKind::Distance => {
            // (1/sqrt(2N)) sum_i |i> (|0>|x> + |1>|x_i>) |l_i>.
            let anc = layout.ancilla.expect("distance layout has an ancilla");
            let c = 1.0 / (2.0 * n).sqrt();
            for i in 0..enc.num_samples {
                let ibits = i << layout.index.start;
                let lbit = (enc.label_bits[i] as usize) << layout.label;
                for (j, &v) in x_pad.iter().enumerate() {
                    if v != 0.0 {
                        let z = lbit | (j << layout.feature.start) | ibits;
                        amps[z] += Complex64::new(c * v, 0.0);
                    }
                }
                for (j, &a) in enc.alpha[i].iter().enumerate() {
                    if a != 0.0 {
                        let z = (1 << anc) | lbit | (j << layout.feature.start) | ibits;
                        amps[z] += Complex64::new(c * a, 0.0);
                    }
                }
            }
        }
        ClassifierKind::SwapTest => {
            // (1/sqrt(N)) sum_i |i> |x_i> |l_i> tensor |x>, swap control |0>.
            let c = 1.0 / n.sqrt();
            for i in 0..enc.num_samples {
                let ibits = i << layout.index.start;
                let lbit = (enc.label_bits[i] as usize) << layout.label;
                for (j, &a) in enc.alpha[i].iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (t, &v) in x_pad.iter().enumerate() {
                        if v != 0.0 {
                            let z = lbit
                                | (j << layout.feature.start)
                                | ibits
                                | (t << layout.test.start);
                            amps[z] += Complex64::new(c * a * v, 0.0);
                        }
                    }
                }
            }
        }
    }

    let state = Statevector::from_amplitudes(layout.num_qubits, amps)?;
    Ok((state, layout))
}

#[cfg(test)]
mod tests;
