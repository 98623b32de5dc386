//! Dense-matrix reference path for cross-checking the stride kernels.
//!
//! The gate is materialized as a full 2^n x 2^n operator assembled from
//! tensor products of 2x2 blocks (SWAP as (II + XX + YY + ZZ)/2), with the
//! control projector folded in column-wise. Deliberately naive: this path
//! exists so the fast kernels have something independent to disagree with.

use num_complex::Complex64;

use super::{GateKind, GateOp, Statevector};
use crate::error::{Error, Result};

/// Dense application refuses registers wider than this.
pub const DENSE_MAX_QUBITS: usize = 10;

type Mat2 = [[Complex64; 2]; 2];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mat_i() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

fn mat_h() -> Mat2 {
    let f = std::f64::consts::FRAC_1_SQRT_2;
    [[c(f, 0.0), c(f, 0.0)], [c(f, 0.0), c(-f, 0.0)]]
}

fn mat_x() -> Mat2 {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

fn mat_y() -> Mat2 {
    [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

fn mat_z() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

/// One tensor-product term: a 2x2 factor per listed qubit, identity elsewhere.
struct ProductTerm {
    scale: f64,
    factors: Vec<(usize, Mat2)>,
}

impl ProductTerm {
    fn entry(&self, row: usize, col: usize, num_qubits: usize) -> Complex64 {
        let mut value = c(self.scale, 0.0);
        let mut covered = 0usize;
        for &(q, m) in &self.factors {
            value *= m[(row >> q) & 1][(col >> q) & 1];
            if value == Complex64::ZERO {
                return value;
            }
            covered |= 1 << q;
        }
        // Identity on every untouched qubit: row and col bits must agree.
        let rest = !covered & ((1usize << num_qubits) - 1);
        if row & rest != col & rest {
            return Complex64::ZERO;
        }
        value
    }
}

fn base_terms(op: &GateOp) -> Vec<ProductTerm> {
    match op.kind {
        GateKind::H => vec![ProductTerm {
            scale: 1.0,
            factors: vec![(op.targets[0], mat_h())],
        }],
        GateKind::X => vec![ProductTerm {
            scale: 1.0,
            factors: vec![(op.targets[0], mat_x())],
        }],
        GateKind::Swap => {
            let (a, b) = (op.targets[0], op.targets[1]);
            [mat_i(), mat_x(), mat_y(), mat_z()]
                .into_iter()
                .map(|m| ProductTerm {
                    scale: 0.5,
                    factors: vec![(a, m), (b, m)],
                })
                .collect()
        }
    }
}

/// Applies `op` to `state` through an explicitly constructed dense matrix.
pub fn dense_oracle_apply(state: &Statevector, op: &GateOp) -> Result<Statevector> {
    let n = state.num_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::DenseTooLarge {
            max: DENSE_MAX_QUBITS,
            got: n,
        });
    }
    op.validate(n)?;

    let dim = 1usize << n;
    let terms = base_terms(op);
    let cmask = op.controls.iter().fold(0usize, |m, &q| m | (1 << q));

    let mut matrix = vec![Complex64::ZERO; dim * dim];
    for col in 0..dim {
        if col & cmask != cmask {
            // Controls unsatisfied: the column is a standard basis vector.
            matrix[col * dim + col] = Complex64::ONE;
            continue;
        }
        for row in 0..dim {
            let mut entry = Complex64::ZERO;
            for term in &terms {
                entry += term.entry(row, col, n);
            }
            matrix[col * dim + row] = entry;
        }
    }

    let amps = state.amplitudes();
    let mut out = vec![Complex64::ZERO; dim];
    for col in 0..dim {
        let a = amps[col];
        if a == Complex64::ZERO {
            continue;
        }
        let column = &matrix[col * dim..(col + 1) * dim];
        for (o, &m) in out.iter_mut().zip(column) {
            *o += m * a;
        }
    }

    Statevector::from_amplitudes(n, out)
}
