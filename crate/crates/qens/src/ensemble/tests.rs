use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::*;
use crate::encoding::Dataset;

fn unit_vector(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

fn random_encoded(
    rng: &mut impl Rng,
    n: usize,
    m: usize,
) -> (EncodedTrainingSet, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_vector(rng, m)).collect();
    let labels = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let data = Dataset::new(rows, labels).unwrap();
    let enc = encoding::encode_training_set(&data).unwrap();
    let x = unit_vector(rng, m);
    (enc, x)
}

fn random_weights(rng: &mut impl Rng, branches: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..branches).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|w| w / sum).collect()
}

/// Four identical rows and a matching test vector put equal probability
/// mass on every (index, feature) cell for all three kinds.
fn uniform_amplitude_fixture() -> (EncodedTrainingSet, Vec<f64>) {
    let rows = vec![vec![1.0, 1.0, 1.0, 1.0]; 4];
    let data = Dataset::new(rows, vec![1, -1, 1, -1]).unwrap();
    let enc = encoding::encode_training_set(&data).unwrap();
    (enc, vec![0.5, 0.5, 0.5, 0.5])
}

#[test]
fn program_matches_the_handworked_gate_lists() {
    let p = SelectionProgram::build(2, 2, 1).unwrap();
    let want = vec![
        ControlledPerm {
            control: 0,
            target: PermTarget::Index,
            op: PermOp::SwapBits { a: 0, b: 1 },
        },
        ControlledPerm {
            control: 0,
            target: PermTarget::Feature,
            op: PermOp::SwapBits { a: 0, b: 1 },
        },
        ControlledPerm {
            control: 0,
            target: PermTarget::Index,
            op: PermOp::FlipBit { k: 0 },
        },
        ControlledPerm {
            control: 0,
            target: PermTarget::Feature,
            op: PermOp::FlipBit { k: 0 },
        },
    ];
    assert_eq!(p.ops, want);

    assert!(SelectionProgram::build(2, 2, 0).unwrap().ops.is_empty());

    let p = SelectionProgram::build(4, 4, 2).unwrap();
    assert_eq!(p.ops.len(), 12);
    let pairwise: Vec<_> = p.ops[8..].to_vec();
    assert_eq!(
        pairwise,
        vec![
            ControlledPerm {
                control: 0,
                target: PermTarget::Index,
                op: PermOp::SwapBits { a: 0, b: 1 },
            },
            ControlledPerm {
                control: 0,
                target: PermTarget::Feature,
                op: PermOp::SwapBits { a: 0, b: 1 },
            },
            ControlledPerm {
                control: 1,
                target: PermTarget::Index,
                op: PermOp::SwapBits { a: 1, b: 0 },
            },
            ControlledPerm {
                control: 1,
                target: PermTarget::Feature,
                op: PermOp::SwapBits { a: 1, b: 0 },
            },
        ]
    );

    assert!(SelectionProgram::build(0, 2, 1).is_err());
    assert!(SelectionProgram::build(2, 0, 1).is_err());
}

#[test]
fn control_value_one_traces_the_documented_bit_pattern() {
    let p = SelectionProgram::build(2, 2, 1).unwrap();
    let (ip, jp) = p.apply_classical(1, 0, 0);
    assert_eq!(ip, 1);
    assert_eq!(jp, 1);
    let (ip, jp, kept) = classical_selection_oracle(&p, 0, 1, 1);
    assert_eq!((ip, jp), (1, 1));
    assert!(!kept);
    assert!(classical_selection_oracle(&p, 0, 0, 1).2);
}

#[test]
fn circuit_permutes_basis_states_and_marks_the_quarter() {
    let program = SelectionProgram::build(2, 2, 2).unwrap();
    let layout = EnsembleLayout::new(ClassifierKind::Distance, 2, 2, 2);
    let circuit = program
        .to_circuit(&layout.base, layout.selection_ancilla, layout.control.start)
        .unwrap();
    for c in 0..4u64 {
        for i in 0..4usize {
            for j in 0..4usize {
                let z0 = ((c as usize) << 7) | (i << 4) | (j << 2);
                let mut amps = vec![Complex64::ZERO; 1 << layout.num_qubits];
                amps[z0] = Complex64::ONE;
                let mut state =
                    Statevector::from_amplitudes(layout.num_qubits, amps).unwrap();
                state.apply_circuit(&circuit).unwrap();

                let (ip, jp) = program.apply_classical(c, i, j);
                let marked = (ip & 1 == 1) && (jp & 1 == 1);
                let z1 =
                    ((c as usize) << 7) | ((marked as usize) << 6) | (ip << 4) | (jp << 2);
                let hits: Vec<usize> = state
                    .amplitudes()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() > 1e-9)
                    .map(|(z, _)| z)
                    .collect();
                assert_eq!(hits, vec![z1], "c={c} i={i} j={j}");
                assert_abs_diff_eq!(state.amplitudes()[z1].re, 1.0, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn swap_kind_applies_the_same_permutation_to_the_test_register() {
    let program = SelectionProgram::build(2, 2, 2).unwrap();
    let layout = EnsembleLayout::new(ClassifierKind::SwapTest, 2, 2, 2);
    let circuit = program
        .to_circuit(&layout.base, layout.selection_ancilla, layout.control.start)
        .unwrap();
    for c in 0..4u64 {
        for i in 0..4usize {
            for j in 0..4usize {
                for t in 0..4usize {
                    let z0 = ((c as usize) << 9) | (t << 6) | (i << 4) | (j << 2);
                    let mut amps = vec![Complex64::ZERO; 1 << layout.num_qubits];
                    amps[z0] = Complex64::ONE;
                    let mut state =
                        Statevector::from_amplitudes(layout.num_qubits, amps).unwrap();
                    state.apply_circuit(&circuit).unwrap();

                    let (ip, jp) = program.apply_classical(c, i, j);
                    // The feature permutation alone acts on the test
                    // register; the index half of the oracle is unused.
                    let (_, tp) = program.apply_classical(c, 0, t);
                    let marked = (ip & 1 == 1) && (jp & 1 == 1);
                    let z1 = ((c as usize) << 9)
                        | ((marked as usize) << 8)
                        | (tp << 6)
                        | (ip << 4)
                        | (jp << 2);
                    let hits: Vec<usize> = state
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .filter(|(_, a)| a.norm() > 1e-9)
                        .map(|(z, _)| z)
                        .collect();
                    assert_eq!(hits, vec![z1], "c={c} i={i} j={j} t={t}");
                }
            }
        }
    }
}

#[test]
fn every_branch_keeps_exactly_three_quarters_of_the_cells() {
    for d in 0..=2 {
        for n in 1..=2 {
            for m in 1..=2 {
                let program = SelectionProgram::build(n, m, d).unwrap();
                for c in 0..(1u64 << d) {
                    let kept = (0..1usize << n)
                        .flat_map(|i| (0..1usize << m).map(move |j| (i, j)))
                        .filter(|&(i, j)| classical_selection_oracle(&program, c, i, j).2)
                        .count();
                    assert_eq!(kept * 4, 3 * (1 << (n + m)), "d={d} n={n} m={m} c={c}");
                }
            }
        }
    }
}

#[test]
fn uniform_amplitude_data_selects_at_three_quarters() {
    let (enc, x) = uniform_amplitude_fixture();
    for kind in ClassifierKind::ALL {
        for d in [1, 3] {
            let cfg = EnsembleConfig::new(kind, d);
            let p = selection_success_probability(&cfg, &enc, &x).unwrap();
            assert_abs_diff_eq!(p, 0.75, epsilon = 1e-9);

            let complement = EnsembleConfig {
                accept_outcome: 1,
                ..cfg
            };
            let q = selection_success_probability(&complement, &enc, &x).unwrap();
            assert_abs_diff_eq!(q, 0.25, epsilon = 1e-9);
        }
    }
}

#[test]
fn single_branch_ensemble_equals_the_subsetted_classifier() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (enc, x) = random_encoded(&mut rng, 4, 3);
    for kind in ClassifierKind::ALL {
        let cfg = EnsembleConfig::new(kind, 0);
        let circuit = run_test_mode(&cfg, &[1.0], &enc, &x).unwrap();
        let branch = evaluate_branch(&cfg, &enc, &x, 0).unwrap();
        assert_abs_diff_eq!(circuit.eo, branch.eo, epsilon = 1e-9);
    }
}

#[test]
fn exact_test_mode_equals_the_branch_combination() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..8 {
        let n = rng.random_range(2..=5);
        let m = rng.random_range(2..=4);
        let (enc, x) = random_encoded(&mut rng, n, m);
        for kind in ClassifierKind::ALL {
            for d in [1, 2] {
                let cfg = EnsembleConfig::new(kind, d);
                let w = random_weights(&mut rng, cfg.num_branches());
                let circuit = run_test_mode(&cfg, &w, &enc, &x).unwrap();
                let evals: Vec<BranchEvaluation> = (0..cfg.num_branches() as u64)
                    .map(|c| evaluate_branch(&cfg, &enc, &x, c).unwrap())
                    .collect();
                let combined = combine_branches(&w, &evals).unwrap();
                assert_abs_diff_eq!(circuit.eo, combined, epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn one_hot_weights_reproduce_each_single_branch() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (enc, x) = random_encoded(&mut rng, 4, 3);
    for kind in ClassifierKind::ALL {
        let cfg = EnsembleConfig::new(kind, 2);
        for c in 0..cfg.num_branches() {
            let mut w = vec![0.0; cfg.num_branches()];
            w[c] = 1.0;
            let circuit = run_test_mode(&cfg, &w, &enc, &x).unwrap();
            let branch = evaluate_branch(&cfg, &enc, &x, c as u64).unwrap();
            assert!(branch.weight > 0.0);
            assert_abs_diff_eq!(circuit.eo, branch.eo, epsilon = 1e-9);
        }
    }
}

#[test]
fn uniform_test_mode_matches_train_mode_readings() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let (enc, x) = random_encoded(&mut rng, 4, 3);
    for kind in ClassifierKind::ALL {
        let cfg = EnsembleConfig::new(kind, 2);
        let uniform = vec![0.25; 4];
        let test = run_test_mode(&cfg, &uniform, &enc, &x).unwrap();
        let train = run_train_mode(&cfg, &enc, std::slice::from_ref(&x)).unwrap();
        let combined: f64 = train.p[0]
            .iter()
            .zip(&train.p0[0])
            .map(|(pc, p0c)| pc * p0c)
            .sum();
        assert_abs_diff_eq!(test.eo, combined, epsilon = 1e-9);
    }
}

#[test]
fn train_mode_branch_masses_match_the_closed_form_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (enc, x) = random_encoded(&mut rng, 4, 3);
    for kind in ClassifierKind::ALL {
        let cfg = EnsembleConfig::new(kind, 2);
        let branches = cfg.num_branches();
        let train = run_train_mode(&cfg, &enc, std::slice::from_ref(&x)).unwrap();
        let evals: Vec<BranchEvaluation> = (0..branches as u64)
            .map(|c| evaluate_branch(&cfg, &enc, &x, c).unwrap())
            .collect();
        let weight_sum: f64 = evals.iter().map(|e| e.weight).sum();
        let joint = train.joint_success.as_ref().unwrap();
        let favorable = train.joint_favorable.as_ref().unwrap();
        for c in 0..branches {
            assert_abs_diff_eq!(
                train.p[0][c],
                evals[c].weight / weight_sum,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(train.p0[0][c], evals[c].eo, epsilon = 1e-9);
            assert_abs_diff_eq!(
                joint[0][c] * branches as f64,
                evals[c].weight,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                favorable[0][c] * branches as f64,
                evals[c].weight * evals[c].eo,
                epsilon = 1e-9
            );
        }
    }
}

#[test]
fn exact_train_mode_rows_are_proper_distributions() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (enc, _) = random_encoded(&mut rng, 5, 3);
    let validation: Vec<Vec<f64>> = (0..3).map(|_| unit_vector(&mut rng, 3)).collect();
    for kind in ClassifierKind::ALL {
        let cfg = EnsembleConfig::new(kind, 2);
        let train = run_train_mode(&cfg, &enc, &validation).unwrap();
        assert_eq!(train.p.len(), 3);
        for (p_row, p0_row) in train.p.iter().zip(&train.p0) {
            assert_abs_diff_eq!(p_row.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
            for (&pc, &p0c) in p_row.iter().zip(p0_row) {
                assert!((0.0..=1.0 + 1e-12).contains(&pc));
                assert!((0.0..=1.0 + 1e-12).contains(&p0c));
            }
        }
    }
}

#[test]
fn sampled_train_mode_tracks_exact_joint_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let (enc, _) = random_encoded(&mut rng, 4, 3);
    let validation: Vec<Vec<f64>> = (0..4).map(|_| unit_vector(&mut rng, 3)).collect();
    let shots = 20_000u64;
    for kind in ClassifierKind::ALL {
        let exact_cfg = EnsembleConfig::new(kind, 2);
        let exact = run_train_mode(&exact_cfg, &enc, &validation).unwrap();
        let sampled_cfg = EnsembleConfig {
            mode: ExecMode::Sampled,
            shots,
            seed: 99,
            ..exact_cfg
        };
        let sampled = run_train_mode(&sampled_cfg, &enc, &validation).unwrap();
        let joint = exact.joint_success.as_ref().unwrap();
        let counts = sampled.counts.as_ref().unwrap();

        let mut outliers = 0;
        let mut cells = 0;
        for i in 0..validation.len() {
            for c in 0..exact.num_branches {
                cells += 1;
                let s = joint[i][c];
                let sigma = (s * (1.0 - s) / shots as f64).sqrt();
                if (sampled.p[i][c] - s).abs() > 3.0 * sigma + 1e-9 {
                    outliers += 1;
                }
                let kc = counts[i].k0[c] + counts[i].k1[c];
                if kc >= 50 {
                    let p0 = exact.p0[i][c];
                    let sigma0 = (p0 * (1.0 - p0) / kc as f64).sqrt();
                    if (sampled.p0[i][c] - p0).abs() > 3.0 * sigma0 + 1e-9 {
                        outliers += 1;
                    }
                }
            }
        }
        assert!(outliers <= 1, "{kind}: {outliers} outliers over {cells} cells");
    }
}

#[test]
fn sampled_test_mode_tracks_the_exact_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (enc, x) = random_encoded(&mut rng, 4, 3);
    for kind in ClassifierKind::ALL {
        let exact_cfg = EnsembleConfig::new(kind, 2);
        let w = random_weights(&mut rng, exact_cfg.num_branches());
        let exact = run_test_mode(&exact_cfg, &w, &enc, &x).unwrap();
        let sampled_cfg = EnsembleConfig {
            mode: ExecMode::Sampled,
            shots: 30_000,
            seed: 7,
            ..exact_cfg
        };
        let sampled = run_test_mode(&sampled_cfg, &w, &enc, &x).unwrap();
        let kept = sampled.kept_shots.unwrap() as f64;
        let sigma = (exact.eo * (1.0 - exact.eo) / kept).sqrt();
        assert!(
            (sampled.eo - exact.eo).abs() <= 3.0 * sigma + 1e-9,
            "{kind}: sampled {} vs exact {}",
            sampled.eo,
            exact.eo
        );
        let sigma_sel =
            (exact.selection_prob * (1.0 - exact.selection_prob) / 30_000.0).sqrt();
        assert!(
            (sampled.selection_prob - exact.selection_prob).abs() <= 3.0 * sigma_sel + 1e-9
        );
    }
}

#[test]
fn weight_validation_rejects_bad_vectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let (enc, x) = random_encoded(&mut rng, 2, 2);
    let cfg = EnsembleConfig::new(ClassifierKind::Distance, 1);
    for w in [
        vec![1.0],
        vec![0.5, 0.6],
        vec![-0.1, 1.1],
        vec![f64::NAN, 1.0],
    ] {
        assert!(matches!(
            run_test_mode(&cfg, &w, &enc, &x),
            Err(Error::InvalidWeights(_))
        ));
    }
    let bad_accept = EnsembleConfig {
        accept_outcome: 2,
        ..cfg
    };
    assert!(matches!(
        run_test_mode(&bad_accept, &[0.5, 0.5], &enc, &x),
        Err(Error::Config(_))
    ));
    let no_shots = EnsembleConfig {
        mode: ExecMode::Sampled,
        shots: 0,
        ..cfg
    };
    assert!(matches!(
        run_test_mode(&no_shots, &[0.5, 0.5], &enc, &x),
        Err(Error::Config(_))
    ));
}

#[test]
fn derive_seed_separates_streams_and_indices() {
    let seeds = [
        derive_seed(0, 0, 0),
        derive_seed(0, 0, 1),
        derive_seed(0, 1, 0),
        derive_seed(1, 0, 0),
    ];
    for a in 0..seeds.len() {
        for b in a + 1..seeds.len() {
            assert_ne!(seeds[a], seeds[b]);
        }
    }
    assert_eq!(derive_seed(5, 2, 9), derive_seed(5, 2, 9));
}

#[test]
fn mode_names_round_trip() {
    for mode in [ExecMode::Exact, ExecMode::Sampled] {
        let parsed: ExecMode = mode.to_string().parse().unwrap();
        assert_eq!(parsed, mode);
    }
    assert!("noisy".parse::<ExecMode>().is_err());
}

proptest! {
    #[test]
    fn branch_permutations_are_bijections(
        d in 1usize..=3,
        n in 1usize..=3,
        m in 1usize..=3,
        c_raw in any::<u64>(),
    ) {
        let program = SelectionProgram::build(n, m, d).unwrap();
        let c = c_raw % (1 << d);
        let cells = 1usize << (n + m);
        let mut seen = vec![false; cells];
        for i in 0..1usize << n {
            for j in 0..1usize << m {
                let (ip, jp) = program.apply_classical(c, i, j);
                prop_assert!(ip < (1 << n));
                prop_assert!(jp < (1 << m));
                let slot = (ip << m) | jp;
                prop_assert!(!seen[slot], "collision at c={c} i={i} j={j}");
                seen[slot] = true;
            }
        }
    }
}
