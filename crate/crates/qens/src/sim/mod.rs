//! Statevector simulation of small qubit registers.
//!
//! Basis-state labels follow the bit convention used throughout the crate:
//! qubit `k` is bit `k` of the label, so qubit 0 is the least-significant
//! bit. A gate mutates the state in place by iterating over amplitude
//! pairs; nothing here allocates per gate.

mod dense;

pub use dense::{dense_oracle_apply, DENSE_MAX_QUBITS};
pub use num_complex::Complex64;

use std::collections::BTreeMap;
use rand::Rng;

use crate::error::{Error, Result};

/// Outcomes below this probability cannot be postselected.
pub const EPS_POSTSELECT: f64 = 1e-12;

/// Construction rejects states whose L2 norm strays further than this from 1.
pub const EPS_STATE_NORM: f64 = 1e-12;

/// Shot counts keyed by the packed outcome bits of the sampled qubits.
///
/// Bit `k` of a key holds the outcome of the `k`-th qubit in the list that
/// was passed to [`Statevector::sample`].
pub type Counts = BTreeMap<u64, u64>;

/// Gate alphabet: Hadamard, Pauli-X, and SWAP, each with optional controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    H,
    X,
    Swap,
}

impl GateKind {
    fn target_arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X => 1,
            GateKind::Swap => 2,
        }
    }
}

/// A single gate: kind, target qubit(s), and control qubits (all on |1⟩).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
}

impl GateOp {
    pub fn h(target: usize) -> Self {
        GateOp {
            kind: GateKind::H,
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn x(target: usize) -> Self {
        GateOp {
            kind: GateKind::X,
            targets: vec![target],
            controls: Vec::new(),
        }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        GateOp {
            kind: GateKind::Swap,
            targets: vec![a, b],
            controls: Vec::new(),
        }
    }

    pub fn cx(control: usize, target: usize) -> Self {
        GateOp::x(target).controlled_by(&[control])
    }

    pub fn ccx(control_a: usize, control_b: usize, target: usize) -> Self {
        GateOp::x(target).controlled_by(&[control_a, control_b])
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        GateOp::swap(a, b).controlled_by(&[control])
    }

    pub fn controlled_by(mut self, controls: &[usize]) -> Self {
        self.controls.extend_from_slice(controls);
        self
    }

    /// Checks arity, ranges, and target/control disjointness.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        if self.targets.len() != self.kind.target_arity() {
            return Err(Error::InvalidGate(format!(
                "{:?} takes {} target(s), got {}",
                self.kind,
                self.kind.target_arity(),
                self.targets.len()
            )));
        }
        let mut seen = 0u64;
        for &q in self.targets.iter().chain(&self.controls) {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    num_qubits,
                });
            }
            if q >= 64 {
                return Err(Error::InvalidGate(format!("qubit {q} exceeds 63")));
            }
            if seen & (1 << q) != 0 {
                return Err(Error::InvalidGate(format!(
                    "qubit {q} appears twice in {:?}",
                    self
                )));
            }
            seen |= 1 << q;
        }
        Ok(())
    }

    fn control_mask(&self) -> u64 {
        self.controls.iter().fold(0u64, |m, &q| m | (1 << q))
    }
}

/// Ordered gate list bound to a fixed register width; validated as it grows.
#[derive(Clone, Debug, Default)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            ops: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.num_qubits)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn extend(&mut self, ops: impl IntoIterator<Item = GateOp>) -> Result<()> {
        for op in ops {
            self.push(op)?;
        }
        Ok(())
    }
}

/// Pure state of `num_qubits` qubits as a dense complex amplitude vector.
#[derive(Clone, Debug)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        assert!(num_qubits < 64, "register too wide");
        let mut amps = vec![Complex64::ZERO; 1 << num_qubits];
        amps[0] = Complex64::ONE;
        Statevector { num_qubits, amps }
    }

    /// Wraps an amplitude vector, enforcing length 2^n and unit norm.
    pub fn from_amplitudes(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << num_qubits,
                actual: amps.len(),
            });
        }
        let state = Statevector { num_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > EPS_STATE_NORM {
            return Err(Error::NotNormalized {
                norm,
                tolerance: EPS_STATE_NORM,
            });
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, basis: usize) -> Complex64 {
        self.amps[basis]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies one gate in place.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.num_qubits)?;
        let cmask = op.control_mask();
        match op.kind {
            GateKind::H => self.apply_h(op.targets[0], cmask),
            GateKind::X => self.apply_x(op.targets[0], cmask),
            GateKind::Swap => self.apply_swap(op.targets[0], op.targets[1], cmask),
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: circuit.num_qubits(),
            });
        }
        for op in circuit.ops() {
            self.apply(op)?;
        }
        Ok(())
    }

    fn apply_h(&mut self, target: usize, cmask: u64) {
        let bit = 1usize << target;
        let f = std::f64::consts::FRAC_1_SQRT_2;
        for lo in 0..self.amps.len() {
            if lo & bit == 0 && lo as u64 & cmask == cmask {
                let hi = lo | bit;
                let a = self.amps[lo];
                let b = self.amps[hi];
                self.amps[lo] = f * (a + b);
                self.amps[hi] = f * (a - b);
            }
        }
    }

    fn apply_x(&mut self, target: usize, cmask: u64) {
        let bit = 1usize << target;
        for lo in 0..self.amps.len() {
            if lo & bit == 0 && lo as u64 & cmask == cmask {
                self.amps.swap(lo, lo | bit);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize, cmask: u64) {
        let bit_a = 1usize << a;
        let bit_b = 1usize << b;
        // Only |ab⟩ = |10⟩ ↔ |01⟩ moves amplitude.
        for z in 0..self.amps.len() {
            if z & bit_a != 0 && z & bit_b == 0 && z as u64 & cmask == cmask {
                self.amps.swap(z, z ^ (bit_a | bit_b));
            }
        }
    }

    /// Probability of measuring `outcome` on one qubit.
    pub fn probability(&self, qubit: usize, outcome: u8) -> Result<f64> {
        self.check_qubit(qubit)?;
        check_outcome(outcome)?;
        let bit = 1usize << qubit;
        let want = if outcome == 1 { bit } else { 0 };
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(z, _)| z & bit == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects one qubit onto `outcome` and renormalizes.
    ///
    /// Returns the outcome probability alongside the collapsed state; an
    /// outcome with probability at or below [`EPS_POSTSELECT`] is an error.
    pub fn postselect(&self, qubit: usize, outcome: u8) -> Result<(f64, Statevector)> {
        let p = self.probability(qubit, outcome)?;
        if p <= EPS_POSTSELECT {
            return Err(Error::ImpossibleOutcome {
                qubit,
                outcome,
                probability: p,
            });
        }
        let bit = 1usize << qubit;
        let want = if outcome == 1 { bit } else { 0 };
        let scale = 1.0 / p.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(z, &a)| {
                if z & bit == want {
                    a * scale
                } else {
                    Complex64::ZERO
                }
            })
            .collect();
        Ok((
            p,
            Statevector {
                num_qubits: self.num_qubits,
                amps,
            },
        ))
    }

    /// Exact joint outcome distribution of the listed qubits.
    ///
    /// Entry `k` of the result is the probability of the outcome whose bit
    /// `i` equals the measured value of `qubits[i]`.
    pub fn joint_distribution(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        self.check_distinct(qubits)?;
        let mut dist = vec![0.0; 1 << qubits.len()];
        for (z, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut key = 0usize;
            for (i, &q) in qubits.iter().enumerate() {
                key |= ((z >> q) & 1) << i;
            }
            dist[key] += p;
        }
        Ok(dist)
    }

    /// Draws `shots` outcomes of the listed qubits from their exact joint
    /// marginal distribution. Keys pack the outcomes as in
    /// [`Statevector::joint_distribution`].
    pub fn sample(&self, qubits: &[usize], shots: u64, rng: &mut impl Rng) -> Result<Counts> {
        let dist = self.joint_distribution(qubits)?;
        let mut cumulative = Vec::with_capacity(dist.len());
        let mut acc = 0.0;
        for &p in &dist {
            acc += p;
            cumulative.push(acc);
        }
        let total = acc.max(f64::MIN_POSITIVE);
        let mut counts = Counts::new();
        for _ in 0..shots {
            let r = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= r).min(dist.len() - 1);
            *counts.entry(k as u64).or_insert(0) += 1;
        }
        Ok(counts)
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn check_distinct(&self, qubits: &[usize]) -> Result<()> {
        if qubits.is_empty() {
            return Err(Error::InvalidGate("empty qubit list".into()));
        }
        let mut seen = 0u64;
        for &q in qubits {
            self.check_qubit(q)?;
            if seen & (1 << q) != 0 {
                return Err(Error::InvalidGate(format!("qubit {q} listed twice")));
            }
            seen |= 1 << q;
        }
        Ok(())
    }
}

fn check_outcome(outcome: u8) -> Result<()> {
    if outcome > 1 {
        return Err(Error::InvalidGate(format!(
            "measurement outcome must be 0 or 1, got {outcome}"
        )));
    }
    Ok(())
}
