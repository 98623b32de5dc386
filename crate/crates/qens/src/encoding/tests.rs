use approx::assert_abs_diff_eq;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::classifier::ClassifierKind;

#[test]
fn std_scaling_uses_population_statistics() {
    let data = Dataset::new(vec![vec![1.0], vec![2.0], vec![3.0]], vec![1, 1, -1]).unwrap();
    let spec = fit_normalization(&data, NormalizationKind::Std);
    let NormalizationSpec::Std { mean, sigma } = &spec else {
        panic!("expected std spec");
    };
    assert_abs_diff_eq!(mean[0], 2.0, epsilon = 1e-15);
    assert_abs_diff_eq!(sigma[0], (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);

    let scaled: Vec<f64> = data
        .rows()
        .iter()
        .map(|r| apply_normalization(&spec, r).unwrap()[0])
        .collect();
    let z = (1.5f64).sqrt();
    assert_abs_diff_eq!(scaled[0], -z, epsilon = 1e-12);
    assert_abs_diff_eq!(scaled[1], 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(scaled[2], z, epsilon = 1e-12);
}

#[test]
fn minmax_scaling_clips_unseen_values() {
    let data = Dataset::new(vec![vec![0.0, 10.0], vec![4.0, 20.0]], vec![1, -1]).unwrap();
    let spec = fit_normalization(&data, NormalizationKind::MinMax);
    assert_eq!(spec.kind(), NormalizationKind::MinMax);
    let mid = apply_normalization(&spec, &[2.0, 15.0]).unwrap();
    assert_abs_diff_eq!(mid[0], 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(mid[1], 0.5, epsilon = 1e-15);
    let outside = apply_normalization(&spec, &[-3.0, 99.0]).unwrap();
    assert_eq!(outside, vec![0.0, 1.0]);
}

#[test]
fn zero_spread_features_scale_to_zero() {
    let data = Dataset::new(vec![vec![7.0, 1.0], vec![7.0, 2.0]], vec![1, -1]).unwrap();
    for kind in [NormalizationKind::Std, NormalizationKind::MinMax] {
        let spec = fit_normalization(&data, kind);
        let out = apply_normalization(&spec, &[7.0, 1.5]).unwrap();
        assert_eq!(out[0], 0.0, "{kind}");
    }
}

#[test]
fn none_scaling_is_identity() {
    let data = Dataset::new(vec![vec![3.0, -1.0]], vec![1]).unwrap();
    let spec = fit_normalization(&data, NormalizationKind::None);
    assert_eq!(apply_normalization(&spec, &[5.5, 0.25]).unwrap(), vec![5.5, 0.25]);
}

#[test]
fn normalization_rejects_width_mismatch() {
    let data = Dataset::new(vec![vec![1.0, 2.0]], vec![1]).unwrap();
    let spec = fit_normalization(&data, NormalizationKind::Std);
    assert!(matches!(
        apply_normalization(&spec, &[1.0]),
        Err(Error::DimensionMismatch { expected: 2, actual: 1 })
    ));
}

#[test]
fn normalization_names_round_trip() {
    for kind in [
        NormalizationKind::None,
        NormalizationKind::Std,
        NormalizationKind::MinMax,
    ] {
        let parsed: NormalizationKind = kind.to_string().parse().unwrap();
        assert_eq!(parsed, kind);
    }
    assert!("robust".parse::<NormalizationKind>().is_err());
}

#[test]
fn unit_normalize_scales_and_rejects_zero() {
    let v = unit_normalize(&[3.0, 4.0]).unwrap();
    assert_abs_diff_eq!(v[0], 0.6, epsilon = 1e-15);
    assert_abs_diff_eq!(v[1], 0.8, epsilon = 1e-15);
    assert!(matches!(
        unit_normalize(&[0.0, 0.0]),
        Err(Error::ZeroVector { .. })
    ));
}

#[test]
fn ceil_log2_covers_boundaries() {
    assert_eq!(ceil_log2(1), 0);
    assert_eq!(ceil_log2(2), 1);
    assert_eq!(ceil_log2(3), 2);
    assert_eq!(ceil_log2(4), 2);
    assert_eq!(ceil_log2(5), 3);
    assert_eq!(ceil_log2(8), 3);
    assert_eq!(ceil_log2(9), 4);
}

#[test]
fn dataset_validation_rejects_malformed_input() {
    assert!(Dataset::new(vec![], vec![]).is_err());
    assert!(Dataset::new(vec![vec![]], vec![1]).is_err());
    assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![1, -1]).is_err());
    assert!(Dataset::new(vec![vec![1.0]], vec![2]).is_err());
    assert!(Dataset::new(vec![vec![f64::NAN]], vec![1]).is_err());
    assert!(Dataset::new(vec![vec![1.0], vec![2.0]], vec![1]).is_err());
}

#[test]
fn subset_and_class_counts() {
    let data = Dataset::new(
        vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]],
        vec![1, -1, 1, 1],
    )
    .unwrap();
    assert_eq!(data.class_counts(), (3, 1));
    let sub = data.subset(&[2, 0]);
    assert_eq!(sub.rows(), &[vec![3.0], vec![1.0]]);
    assert_eq!(sub.labels(), &[1, 1]);
}

#[test]
fn encoding_pads_to_power_of_two_registers() {
    let data = Dataset::new(
        vec![vec![1.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![0.0, 3.0, 4.0]],
        vec![1, -1, 1],
    )
    .unwrap();
    let enc = encode_training_set(&data).unwrap();
    assert_eq!(enc.num_samples, 3);
    assert_eq!(enc.num_features, 3);
    assert_eq!(enc.index_qubits, 2);
    assert_eq!(enc.feature_qubits, 2);
    assert_eq!(enc.alpha.len(), 4);
    assert_eq!(enc.alpha[0].len(), 4);
    for i in 0..3 {
        let norm2: f64 = enc.alpha[i].iter().map(|a| a * a).sum();
        assert_abs_diff_eq!(norm2, 1.0, epsilon = 1e-12);
        assert_eq!(enc.alpha[i][3], 0.0);
    }
    assert!(enc.alpha[3].iter().all(|&a| a == 0.0));
    assert_eq!(enc.label_bits, vec![0, 1, 0, 0]);
    assert_eq!(enc.label_sign(0), 1.0);
    assert_eq!(enc.label_sign(1), -1.0);
}

#[test]
fn single_row_dataset_needs_no_index_register() {
    let data = Dataset::new(vec![vec![3.0, 4.0]], vec![-1]).unwrap();
    let enc = encode_training_set(&data).unwrap();
    assert_eq!(enc.index_qubits, 0);
    assert_eq!(enc.feature_qubits, 1);
    assert_eq!(enc.alpha, vec![vec![0.6, 0.8]]);
    assert_eq!(enc.label_bits, vec![1]);
}

#[test]
fn encoding_rejects_zero_rows() {
    let data = Dataset::new(vec![vec![0.0, 0.0]], vec![1]).unwrap();
    assert!(matches!(
        encode_training_set(&data),
        Err(Error::ZeroVector { .. })
    ));
}

#[test]
fn pad_test_vector_checks_width_and_norm() {
    let data = Dataset::new(
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        vec![1, -1],
    )
    .unwrap();
    let enc = encode_training_set(&data).unwrap();
    let padded = pad_test_vector(&enc, &[0.0, 0.6, 0.8]).unwrap();
    assert_eq!(padded, vec![0.0, 0.6, 0.8, 0.0]);
    assert!(matches!(
        pad_test_vector(&enc, &[1.0, 0.0]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        pad_test_vector(&enc, &[0.5, 0.5, 0.5]),
        Err(Error::NotNormalized { .. })
    ));
}

fn fixture() -> (EncodedTrainingSet, Vec<f64>, Vec<u8>) {
    let data = Dataset::new(vec![vec![0.6, 0.8], vec![1.0, 0.0]], vec![1, -1]).unwrap();
    let enc = encode_training_set(&data).unwrap();
    let x = vec![0.8, -0.6];
    let bits = enc.label_bits.clone();
    (enc, x, bits)
}

#[test]
fn initial_states_are_normalized_for_every_kind() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) + 0.1).collect())
            .collect();
        let labels = (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect();
        let data = Dataset::new(rows, labels).unwrap();
        let enc = encode_training_set(&data).unwrap();
        let raw: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let x = unit_normalize(&raw).unwrap();
        for kind in ClassifierKind::ALL {
            let (state, layout) = build_initial_state(kind, &enc, &x).unwrap();
            assert_eq!(state.num_qubits(), layout.num_qubits);
            assert_abs_diff_eq!(state.norm(), 1.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn cosine_state_amplitudes_follow_the_two_branch_form() {
    let (enc, x, bits) = fixture();
    let (state, layout) = build_initial_state(ClassifierKind::Cosine, &enc, &x).unwrap();
    assert_eq!(layout.num_qubits, 6);
    // Qubits: swap control 0, plus aux 1, branch ancilla 2, label 3,
    // feature 4, index 5.
    let c_train = 1.0 / (2.0 * (2.0f64).sqrt());
    let c_test = 0.25;
    for z in 0..state.amplitudes().len() {
        let sc = z & 1;
        let u = (z >> 1) & 1;
        let a = (z >> 2) & 1;
        let b = (z >> 3) & 1;
        let j = (z >> 4) & 1;
        let i = (z >> 5) & 1;
        let expected = if sc == 1 {
            0.0
        } else if a == 0 {
            if b == bits[i] as usize {
                c_train * enc.alpha[i][j]
            } else {
                0.0
            }
        } else {
            let sign = if b == 0 { 1.0 } else { -1.0 };
            sign * c_test * x[j]
        };
        let _ = u;
        let amp = state.amplitudes()[z];
        assert_abs_diff_eq!(amp.re, expected, epsilon = 1e-12);
        assert_eq!(amp.im, 0.0);
    }
}

#[test]
fn distance_state_interleaves_test_and_training_branches() {
    let (enc, x, bits) = fixture();
    let (state, layout) = build_initial_state(ClassifierKind::Distance, &enc, &x).unwrap();
    assert_eq!(layout.num_qubits, 4);
    // Qubits: ancilla 0, label 1, feature 2, index 3.
    let c = 0.5;
    for z in 0..state.amplitudes().len() {
        let a = z & 1;
        let l = (z >> 1) & 1;
        let j = (z >> 2) & 1;
        let i = (z >> 3) & 1;
        let expected = if l != bits[i] as usize {
            0.0
        } else if a == 0 {
            c * x[j]
        } else {
            c * enc.alpha[i][j]
        };
        assert_abs_diff_eq!(state.amplitudes()[z].re, expected, epsilon = 1e-12);
    }
}

#[test]
fn swap_state_is_a_product_with_the_test_register() {
    let (enc, x, bits) = fixture();
    let (state, layout) = build_initial_state(ClassifierKind::SwapTest, &enc, &x).unwrap();
    assert_eq!(layout.num_qubits, 5);
    // Qubits: swap control 0, label 1, feature 2, index 3, test 4.
    let c = 1.0 / (2.0f64).sqrt();
    for z in 0..state.amplitudes().len() {
        let sc = z & 1;
        let l = (z >> 1) & 1;
        let j = (z >> 2) & 1;
        let i = (z >> 3) & 1;
        let t = (z >> 4) & 1;
        let expected = if sc == 1 || l != bits[i] as usize {
            0.0
        } else {
            c * enc.alpha[i][j] * x[t]
        };
        assert_abs_diff_eq!(state.amplitudes()[z].re, expected, epsilon = 1e-12);
    }
}
