//! Weighted homogeneous ensembles executed in quantum parallel.
//!
//! A control register of d qubits is prepared in a weighted (test time) or
//! balanced (train time) superposition. A selection program of controlled
//! permutations rearranges the encoded training data differently in every
//! control branch, an ancilla marks a quarter of the (index, feature)
//! cells for discarding, and one shared classifier circuit then acts on
//! all 2^d surviving datasets at once. Branch readings combine into the
//! ensemble expectation Σ_c w_c p_c E_c / Σ_c w_c p_c, where p_c is the
//! squared norm of branch c's postselected state.

use std::ops::Range;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::{
    self, analytic_pairs, BranchEvaluation, ClassifierKind, ClassifierLayout,
};
use crate::encoding::{self, EncodedTrainingSet};
use crate::error::{Error, Result};
use crate::sim::{Circuit, GateOp, Statevector};

/// Selection ancilla outcome that keeps a shot.
pub const ACCEPT_OUTCOME: u8 = 0;

/// Weight vectors must sum to 1 within this tolerance before encoding.
pub const EPS_WEIGHT_SUM: f64 = 1e-9;

/// Execution backend: exact statevector readout or finite shot sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecMode {
    Exact,
    Sampled,
}

impl std::str::FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(ExecMode::Exact),
            "sampled" => Ok(ExecMode::Sampled),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected exact or sampled)"
            ))),
        }
    }
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExecMode::Exact => "exact",
            ExecMode::Sampled => "sampled",
        })
    }
}

/// How an ensemble is executed. `control_qubits` = d gives 2^d branches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConfig {
    pub kind: ClassifierKind,
    pub control_qubits: usize,
    pub mode: ExecMode,
    /// Circuit launches per evaluation in sampled mode; failed selections
    /// count against this budget and are not re-run.
    pub shots: u64,
    /// Selection ancilla value that keeps a branch. 0 keeps the 3/4
    /// subsets; 1 exists to probe the complementary quarter.
    pub accept_outcome: u8,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(kind: ClassifierKind, control_qubits: usize) -> Self {
        EnsembleConfig {
            kind,
            control_qubits,
            mode: ExecMode::Exact,
            shots: 8192,
            accept_outcome: ACCEPT_OUTCOME,
            seed: 0,
        }
    }

    pub fn num_branches(&self) -> usize {
        1 << self.control_qubits
    }

    fn validate(&self) -> Result<()> {
        if self.accept_outcome > 1 {
            return Err(Error::Config(format!(
                "accept outcome must be 0 or 1, got {}",
                self.accept_outcome
            )));
        }
        if self.mode == ExecMode::Sampled && self.shots == 0 {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        Ok(())
    }
}

/// Deterministic per-task seed derivation: `stream` separates usage sites,
/// `index` separates iterations within one site.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    fn mix(z: u64) -> u64 {
        let z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        let z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(master ^ mix(stream)) ^ index)
}

/// Register an abstract permutation op acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermTarget {
    Index,
    Feature,
}

/// Reversible classical op on one register, gated by a control qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PermOp {
    /// Exchange register bits `a` and `b`.
    SwapBits { a: usize, b: usize },
    /// Flip register bit `k`.
    FlipBit { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ControlledPerm {
    /// Control-register bit that gates this op.
    pub control: usize,
    pub target: PermTarget,
    pub op: PermOp,
}

/// The data-selection program: an ordered list of controlled permutations
/// over the index and feature registers, followed (at circuit level) by a
/// CCX from index bit 0 and feature bit 0 onto the selection ancilla.
///
/// Every op is a basis-state permutation, so each control value c induces
/// a bijection (i, j) -> (i', j'); the ancilla then marks the quarter of
/// cells with bit0(i') = bit0(j') = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionProgram {
    pub control_qubits: usize,
    pub index_qubits: usize,
    pub feature_qubits: usize,
    pub ops: Vec<ControlledPerm>,
}

impl SelectionProgram {
    /// Emits the program for the given register sizes. Ops whose bit
    /// references would fall outside a register are skipped, which is what
    /// keeps the construction valid when d exceeds the register widths.
    pub fn build(index_qubits: usize, feature_qubits: usize, control_qubits: usize) -> Result<Self> {
        if index_qubits == 0 || feature_qubits == 0 {
            return Err(Error::Config(
                "selection needs at least one index and one feature qubit".into(),
            ));
        }
        let (n, m, d) = (index_qubits, feature_qubits, control_qubits);
        let mut ops = Vec::new();
        for idx in 0..d {
            if idx < n / 2 {
                ops.push(ControlledPerm {
                    control: idx,
                    target: PermTarget::Index,
                    op: PermOp::SwapBits { a: idx, b: idx + n / 2 },
                });
            }
            if idx < m / 2 {
                ops.push(ControlledPerm {
                    control: idx,
                    target: PermTarget::Feature,
                    op: PermOp::SwapBits { a: idx, b: idx + m / 2 },
                });
            }
            if idx < n {
                ops.push(ControlledPerm {
                    control: idx,
                    target: PermTarget::Index,
                    op: PermOp::FlipBit { k: idx },
                });
            }
            if idx < m {
                ops.push(ControlledPerm {
                    control: idx,
                    target: PermTarget::Feature,
                    op: PermOp::FlipBit { k: idx },
                });
            }
        }
        for idx in 0..d {
            for idx1 in 0..d {
                if idx == idx1 {
                    continue;
                }
                if idx < n && idx1 < n {
                    ops.push(ControlledPerm {
                        control: idx,
                        target: PermTarget::Index,
                        op: PermOp::SwapBits { a: idx, b: idx1 },
                    });
                }
                if idx < m && idx1 < m {
                    ops.push(ControlledPerm {
                        control: idx,
                        target: PermTarget::Feature,
                        op: PermOp::SwapBits { a: idx, b: idx1 },
                    });
                }
            }
        }
        Ok(SelectionProgram {
            control_qubits: d,
            index_qubits: n,
            feature_qubits: m,
            ops,
        })
    }

    /// Image of the basis cell (i, j) under the branch-c permutation.
    pub fn apply_classical(&self, c: u64, i: usize, j: usize) -> (usize, usize) {
        debug_assert!(c < (1 << self.control_qubits) as u64);
        let mut i = i;
        let mut j = j;
        for op in &self.ops {
            if (c >> op.control) & 1 == 0 {
                continue;
            }
            let reg = match op.target {
                PermTarget::Index => &mut i,
                PermTarget::Feature => &mut j,
            };
            match op.op {
                PermOp::SwapBits { a, b } => {
                    let bit_a = (*reg >> a) & 1;
                    let bit_b = (*reg >> b) & 1;
                    if bit_a != bit_b {
                        *reg ^= (1 << a) | (1 << b);
                    }
                }
                PermOp::FlipBit { k } => *reg ^= 1 << k,
            }
        }
        (i, j)
    }

    /// Whether the permuted cell survives postselection on `accept`.
    pub fn kept_with(&self, accept: u8, i_prime: usize, j_prime: usize) -> bool {
        let marked = (i_prime & 1 == 1) && (j_prime & 1 == 1);
        if accept == 0 {
            !marked
        } else {
            marked
        }
    }

    /// Materializes the program as gates over an ensemble register built
    /// on `layout`, with the selection ancilla at `sel` and the control
    /// register starting at `ctrl_start`. Feature-register ops are
    /// mirrored onto the test register for the swap kind, so both sides of
    /// its swap test see the same permutation; the test register is not
    /// wired into the final CCX.
    pub fn to_circuit(
        &self,
        layout: &ClassifierLayout,
        sel: usize,
        ctrl_start: usize,
    ) -> Result<Circuit> {
        let width = ctrl_start + self.control_qubits;
        let mut circuit = Circuit::new(width);
        let mirror_test = layout.kind == ClassifierKind::SwapTest;
        for cop in &self.ops {
            let control = ctrl_start + cop.control;
            let bases: &[usize] = match cop.target {
                PermTarget::Index => &[layout.index.start],
                PermTarget::Feature => {
                    if mirror_test {
                        &[layout.feature.start, layout.test.start]
                    } else {
                        &[layout.feature.start]
                    }
                }
            };
            for &base in bases {
                let gate = match cop.op {
                    PermOp::SwapBits { a, b } => GateOp::cswap(control, base + a, base + b),
                    PermOp::FlipBit { k } => GateOp::cx(control, base + k),
                };
                circuit.push(gate)?;
            }
        }
        circuit.push(GateOp::ccx(
            layout.index.start,
            layout.feature.start,
            sel,
        ))?;
        Ok(circuit)
    }
}

/// Full permutation-plus-mask view of one cell: where (i, j) lands in
/// branch c and whether it survives postselection on outcome 0.
pub fn classical_selection_oracle(
    program: &SelectionProgram,
    c: u64,
    i: usize,
    j: usize,
) -> (usize, usize, bool) {
    let (ip, jp) = program.apply_classical(c, i, j);
    (ip, jp, program.kept_with(ACCEPT_OUTCOME, ip, jp))
}

/// Qubit placement of the full ensemble register: the classifier layout
/// at the bottom, the selection ancilla above it, the control register on
/// top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleLayout {
    pub base: ClassifierLayout,
    pub selection_ancilla: usize,
    pub control: Range<usize>,
    pub num_qubits: usize,
}

impl EnsembleLayout {
    pub fn new(kind: ClassifierKind, index_qubits: usize, feature_qubits: usize, d: usize) -> Self {
        let base = ClassifierLayout::new(kind, index_qubits, feature_qubits);
        let sel = base.num_qubits;
        EnsembleLayout {
            selection_ancilla: sel,
            control: sel + 1..sel + 1 + d,
            num_qubits: sel + 1 + d,
            base,
        }
    }
}

/// One ensemble reading on a test point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleOutput {
    /// The combined favorable-outcome probability E[O] in [0, 1].
    pub eo: f64,
    pub raw: f64,
    pub score: f64,
    pub label: i8,
    /// Probability that the selection ancilla showed the accept outcome.
    pub selection_prob: f64,
    /// Distance kind: classifier-ancilla success rate among accepted mass.
    pub ancilla_success: Option<f64>,
    /// Sampled mode: shots that survived every postselection.
    pub kept_shots: Option<u64>,
}

/// Validation-set readings used to fit stacking weights: per sample i and
/// branch c, the branch probability p[i][c] and its conditional favorable
/// probability p0[i][c].
///
/// Exact mode: p rows are conditional on overall success and sum to 1;
/// `joint_success` and `joint_favorable` carry the unconditioned branch
/// masses, which are the expectations of the sampled-mode estimators
/// (k0+k1)/shots and k0/shots. Sampled mode: p[i][c] = (k0+k1)/shots and
/// `counts` holds the raw tallies.
#[derive(Clone, Debug)]
pub struct TrainOutputs {
    pub num_branches: usize,
    pub p: Vec<Vec<f64>>,
    pub p0: Vec<Vec<f64>>,
    pub joint_success: Option<Vec<Vec<f64>>>,
    pub joint_favorable: Option<Vec<Vec<f64>>>,
    pub counts: Option<Vec<TrainCounts>>,
}

/// Raw shot tallies for one validation sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainCounts {
    pub k0: Vec<u64>,
    pub k1: Vec<u64>,
    /// Shots discarded by the selection ancilla or, for the distance
    /// kind, by its classifier ancilla.
    pub failed: u64,
    pub shots: u64,
}

fn validate_weights(w: &[f64], branches: usize) -> Result<f64> {
    if w.len() != branches {
        return Err(Error::InvalidWeights(format!(
            "expected {branches} weights, got {}",
            w.len()
        )));
    }
    let mut sum = 0.0;
    for &wc in w {
        if !wc.is_finite() || wc < 0.0 {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and nonnegative, got {wc}"
            )));
        }
        sum += wc;
    }
    if (sum - 1.0).abs() > EPS_WEIGHT_SUM {
        return Err(Error::InvalidWeights(format!(
            "weights must sum to 1 (within {EPS_WEIGHT_SUM}), got {sum}"
        )));
    }
    Ok(sum)
}

/// Tensors the classifier's initial state with |0> on the selection
/// ancilla and the given control-register amplitudes.
fn prepare_ensemble_state(
    cfg: &EnsembleConfig,
    enc: &EncodedTrainingSet,
    x: &[f64],
    control_amps: &[f64],
) -> Result<(Statevector, EnsembleLayout)> {
    let (base_state, base_layout) = encoding::build_initial_state(cfg.kind, enc, x)?;
    let layout = EnsembleLayout::new(
        cfg.kind,
        enc.index_qubits,
        enc.feature_qubits,
        cfg.control_qubits,
    );
    debug_assert_eq!(layout.base, base_layout);
    let shift = layout.selection_ancilla + 1;
    let mut amps = vec![Complex64::ZERO; 1 << layout.num_qubits];
    for (c, &a) in control_amps.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let offset = c << shift;
        for (z, &b) in base_state.amplitudes().iter().enumerate() {
            amps[offset | z] = a * b;
        }
    }
    let state = Statevector::from_amplitudes(layout.num_qubits, amps)?;
    Ok((state, layout))
}

/// The classifier circuit re-validated against the wider ensemble register.
fn embedded_classifier_circuit(layout: &EnsembleLayout) -> Result<Circuit> {
    let inner = classifier::classifier_circuit(&layout.base);
    let mut circuit = Circuit::new(layout.num_qubits);
    for op in inner.ops() {
        circuit.push(op.clone())?;
    }
    Ok(circuit)
}

/// Output class of one shot given the bits read from the classifier's
/// output qubits; class 0 is the favorable outcome.
fn output_class(kind: ClassifierKind, bits: &[u8]) -> u8 {
    match kind {
        ClassifierKind::Cosine => bits[0],
        ClassifierKind::Distance => bits[0],
        ClassifierKind::SwapTest => bits[0] ^ bits[1],
    }
}

/// Runs the test-time pipeline: weighted control superposition, data
/// selection, postselection on the accept outcome, shared classifier, and
/// the per-kind readout combined over all branches.
pub fn run_test_mode(
    cfg: &EnsembleConfig,
    w: &[f64],
    enc: &EncodedTrainingSet,
    x: &[f64],
) -> Result<EnsembleOutput> {
    cfg.validate()?;
    let sum = validate_weights(w, cfg.num_branches())?;
    let control_amps: Vec<f64> = w.iter().map(|&wc| (wc / sum).sqrt()).collect();
    let (mut state, layout) = prepare_ensemble_state(cfg, enc, x, &control_amps)?;
    let program = SelectionProgram::build(
        enc.index_qubits,
        enc.feature_qubits,
        cfg.control_qubits,
    )?;
    state.apply_circuit(&program.to_circuit(
        &layout.base,
        layout.selection_ancilla,
        layout.control.start,
    )?)?;

    match cfg.mode {
        ExecMode::Exact => {
            let (p_sel, mut state) =
                state.postselect(layout.selection_ancilla, cfg.accept_outcome)?;
            state.apply_circuit(&embedded_classifier_circuit(&layout)?)?;
            let (eo, ancilla_success) = match cfg.kind {
                ClassifierKind::Cosine => {
                    let p1 = state.probability(layout.base.swap_control.unwrap(), 1)?;
                    (1.0 - p1, None)
                }
                ClassifierKind::Distance => {
                    let (pa, collapsed) =
                        state.postselect(layout.base.ancilla.unwrap(), 0)?;
                    (collapsed.probability(layout.base.label, 0)?, Some(pa))
                }
                ClassifierKind::SwapTest => {
                    let dist = state.joint_distribution(&[
                        layout.base.swap_control.unwrap(),
                        layout.base.label,
                    ])?;
                    (dist[0b00] + dist[0b11], None)
                }
            };
            let out = classifier::output_from_eo(cfg.kind, eo, ancilla_success)?;
            Ok(EnsembleOutput {
                eo,
                raw: out.raw,
                score: out.score,
                label: out.label,
                selection_prob: p_sel,
                ancilla_success,
                kept_shots: None,
            })
        }
        ExecMode::Sampled => {
            state.apply_circuit(&embedded_classifier_circuit(&layout)?)?;
            let mut qubits = vec![layout.selection_ancilla];
            if cfg.kind == ClassifierKind::Distance {
                qubits.push(layout.base.ancilla.unwrap());
            }
            qubits.extend(layout.base.output_qubits());
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let counts = state.sample(&qubits, cfg.shots, &mut rng)?;

            let mut selected = 0u64;
            let mut kept = 0u64;
            let mut favorable = 0u64;
            let out_bits = layout.base.output_qubits().len();
            let out_off = qubits.len() - out_bits;
            for (&key, &count) in &counts {
                if key & 1 != u64::from(cfg.accept_outcome) {
                    continue;
                }
                selected += count;
                if cfg.kind == ClassifierKind::Distance && (key >> 1) & 1 != 0 {
                    continue;
                }
                kept += count;
                let bits: Vec<u8> = (0..out_bits)
                    .map(|b| ((key >> (out_off + b)) & 1) as u8)
                    .collect();
                if output_class(cfg.kind, &bits) == 0 {
                    favorable += count;
                }
            }
            if kept == 0 {
                return Err(Error::Numeric(format!(
                    "all {} shots failed postselection",
                    cfg.shots
                )));
            }
            let eo = favorable as f64 / kept as f64;
            let ancilla_success = (cfg.kind == ClassifierKind::Distance)
                .then(|| kept as f64 / selected as f64);
            let out = classifier::output_from_eo(cfg.kind, eo, ancilla_success)?;
            Ok(EnsembleOutput {
                eo,
                raw: out.raw,
                score: out.score,
                label: out.label,
                selection_prob: selected as f64 / cfg.shots as f64,
                ancilla_success,
                kept_shots: Some(kept),
            })
        }
    }
}

/// Runs the train-time pipeline on a validation set: balanced control
/// superposition, selection, classifier, then a per-branch readout of the
/// branch probability p[i][c] and its favorable-outcome probability
/// p0[i][c]. Validation vectors must be unit norm.
pub fn run_train_mode(
    cfg: &EnsembleConfig,
    enc: &EncodedTrainingSet,
    validation: &[Vec<f64>],
) -> Result<TrainOutputs> {
    cfg.validate()?;
    let branches = cfg.num_branches();
    let uniform = vec![(1.0 / branches as f64).sqrt(); branches];
    let program = SelectionProgram::build(
        enc.index_qubits,
        enc.feature_qubits,
        cfg.control_qubits,
    )?;

    let mut p = Vec::with_capacity(validation.len());
    let mut p0 = Vec::with_capacity(validation.len());
    let mut joint_success = Vec::with_capacity(validation.len());
    let mut joint_favorable = Vec::with_capacity(validation.len());
    let mut counts = Vec::with_capacity(validation.len());

    for (sample_idx, x) in validation.iter().enumerate() {
        let (mut state, layout) = prepare_ensemble_state(cfg, enc, x, &uniform)?;
        state.apply_circuit(&program.to_circuit(
            &layout.base,
            layout.selection_ancilla,
            layout.control.start,
        )?)?;
        state.apply_circuit(&embedded_classifier_circuit(&layout)?)?;

        match cfg.mode {
            ExecMode::Exact => {
                let (j0, j1) = exact_branch_masses(cfg, &state, &layout)?;
                let total: f64 = j0.iter().chain(&j1).sum();
                let mut p_row = vec![0.0; branches];
                let mut p0_row = vec![0.5; branches];
                for c in 0..branches {
                    let mass = j0[c] + j1[c];
                    if total > 0.0 {
                        p_row[c] = mass / total;
                    }
                    if mass > 0.0 {
                        p0_row[c] = j0[c] / mass;
                    }
                }
                p.push(p_row);
                p0.push(p0_row);
                joint_success.push(
                    (0..branches).map(|c| j0[c] + j1[c]).collect::<Vec<f64>>(),
                );
                joint_favorable.push(j0);
            }
            ExecMode::Sampled => {
                let mut qubits = vec![layout.selection_ancilla];
                if cfg.kind == ClassifierKind::Distance {
                    qubits.push(layout.base.ancilla.unwrap());
                }
                qubits.extend(layout.base.output_qubits());
                let ctrl_off = qubits.len();
                qubits.extend(layout.control.clone());

                let seed = derive_seed(cfg.seed, 1, sample_idx as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let tallies = state.sample(&qubits, cfg.shots, &mut rng)?;

                let mut k0 = vec![0u64; branches];
                let mut k1 = vec![0u64; branches];
                let mut failed = 0u64;
                let out_bits = layout.base.output_qubits().len();
                let out_off = ctrl_off - out_bits;
                for (&key, &count) in &tallies {
                    let sel_ok = key & 1 == u64::from(cfg.accept_outcome);
                    let anc_ok = cfg.kind != ClassifierKind::Distance
                        || (key >> 1) & 1 == 0;
                    if !sel_ok || !anc_ok {
                        failed += count;
                        continue;
                    }
                    let c = (key >> ctrl_off) as usize;
                    let bits: Vec<u8> = (0..out_bits)
                        .map(|b| ((key >> (out_off + b)) & 1) as u8)
                        .collect();
                    if output_class(cfg.kind, &bits) == 0 {
                        k0[c] += count;
                    } else {
                        k1[c] += count;
                    }
                }
                let shots_f = cfg.shots as f64;
                let mut p_row = vec![0.0; branches];
                let mut p0_row = vec![0.5; branches];
                for c in 0..branches {
                    let kc = k0[c] + k1[c];
                    p_row[c] = kc as f64 / shots_f;
                    if kc > 0 {
                        p0_row[c] = k0[c] as f64 / kc as f64;
                    }
                }
                p.push(p_row);
                p0.push(p0_row);
                counts.push(TrainCounts {
                    k0,
                    k1,
                    failed,
                    shots: cfg.shots,
                });
            }
        }
    }

    let exact = cfg.mode == ExecMode::Exact;
    Ok(TrainOutputs {
        num_branches: branches,
        p,
        p0,
        joint_success: exact.then_some(joint_success),
        joint_favorable: exact.then_some(joint_favorable),
        counts: (!exact).then_some(counts),
    })
}

/// Per-branch joint masses of (control = c, every postselection passed,
/// output class k), read directly from the final state.
fn exact_branch_masses(
    cfg: &EnsembleConfig,
    state: &Statevector,
    layout: &EnsembleLayout,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let branches = cfg.num_branches();
    let mut j0 = vec![0.0; branches];
    let mut j1 = vec![0.0; branches];
    let sel_bit = layout.selection_ancilla;
    let ctrl_start = layout.control.start;
    for (z, amp) in state.amplitudes().iter().enumerate() {
        let prob = amp.norm_sqr();
        if prob == 0.0 {
            continue;
        }
        if ((z >> sel_bit) & 1) as u8 != cfg.accept_outcome {
            continue;
        }
        let class = match cfg.kind {
            ClassifierKind::Cosine => (z >> layout.base.swap_control.unwrap()) & 1,
            ClassifierKind::Distance => {
                if (z >> layout.base.ancilla.unwrap()) & 1 != 0 {
                    continue;
                }
                (z >> layout.base.label) & 1
            }
            ClassifierKind::SwapTest => {
                ((z >> layout.base.swap_control.unwrap()) & 1)
                    ^ ((z >> layout.base.label) & 1)
            }
        };
        let c = z >> ctrl_start;
        if class == 0 {
            j0[c] += prob;
        } else {
            j1[c] += prob;
        }
    }
    Ok((j0, j1))
}

/// Exact probability that the selection ancilla shows the accept outcome,
/// under a balanced control superposition.
pub fn selection_success_probability(
    cfg: &EnsembleConfig,
    enc: &EncodedTrainingSet,
    x: &[f64],
) -> Result<f64> {
    cfg.validate()?;
    let branches = cfg.num_branches();
    let uniform = vec![(1.0 / branches as f64).sqrt(); branches];
    let (mut state, layout) = prepare_ensemble_state(cfg, enc, x, &uniform)?;
    let program = SelectionProgram::build(
        enc.index_qubits,
        enc.feature_qubits,
        cfg.control_qubits,
    )?;
    state.apply_circuit(&program.to_circuit(
        &layout.base,
        layout.selection_ancilla,
        layout.control.start,
    )?)?;
    state.probability(layout.selection_ancilla, cfg.accept_outcome)
}

/// The (training, test) vector pairs classifier branch c acts on, in the
/// original feature coordinates: training amplitudes masked by the
/// branch's kept cells, and the test vector masked the same way for the
/// cosine and distance kinds (it shares the feature register) but left
/// whole for the swap kind (its test register is permuted alongside yet
/// never wired into the selection ancilla).
pub fn branch_inputs(
    program: &SelectionProgram,
    enc: &EncodedTrainingSet,
    x_pad: &[f64],
    kind: ClassifierKind,
    c: u64,
    accept: u8,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<i8>) {
    let n = enc.num_samples;
    let cols = 1 << enc.feature_qubits;
    let mut train = Vec::with_capacity(n);
    let mut test = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut a_row = vec![0.0; cols];
        let mut b_row = vec![0.0; cols];
        for j in 0..cols {
            let (ip, jp) = program.apply_classical(c, i, j);
            let kept = program.kept_with(accept, ip, jp);
            if kept {
                a_row[j] = enc.alpha[i][j];
                b_row[j] = x_pad[j];
            }
        }
        if kind == ClassifierKind::SwapTest {
            b_row.copy_from_slice(x_pad);
        }
        train.push(a_row);
        test.push(b_row);
        labels.push(if enc.label_bits[i] == 0 { 1 } else { -1 });
    }
    (train, test, labels)
}

/// Circuit-free exact evaluation of one ensemble branch.
pub fn evaluate_branch(
    cfg: &EnsembleConfig,
    enc: &EncodedTrainingSet,
    x: &[f64],
    c: u64,
) -> Result<BranchEvaluation> {
    cfg.validate()?;
    let x_pad = encoding::pad_test_vector(enc, x)?;
    let program = SelectionProgram::build(
        enc.index_qubits,
        enc.feature_qubits,
        cfg.control_qubits,
    )?;
    let (train, test, labels) =
        branch_inputs(&program, enc, &x_pad, cfg.kind, c, cfg.accept_outcome);
    analytic_pairs(cfg.kind, &train, &test, &labels)
}

/// Combines per-branch readings into the ensemble's favorable-outcome
/// probability Σ_c w_c p_c eo_c / Σ_c w_c p_c.
pub fn combine_branches(w: &[f64], branches: &[BranchEvaluation]) -> Result<f64> {
    if w.len() != branches.len() {
        return Err(Error::DimensionMismatch {
            expected: branches.len(),
            actual: w.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (wc, branch) in w.iter().zip(branches) {
        num += wc * branch.weight * branch.eo;
        den += wc * branch.weight;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateCombination);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests;
