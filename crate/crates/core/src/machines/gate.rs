//! Average fidelity of a gate whose duration is set by an imperfect clock.
//!
//! The gate `U = e^{−iK}` runs for a time `t = 1 + ε` in units of its nominal
//! period, with `ε ~ N(0, 1/N)` for clock accuracy `N`. For a test state `ψ`
//! with amplitudes `c_j` in the eigenbasis of `U = Σ e^{iθ_j} |j⟩⟨j|`,
//! `|⟨ψ|U† U(t)|ψ⟩|² = |Σ_j |c_j|² e^{iθ_j ε}|²`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{max_abs, CMatrix, CVector};
use crate::trajectories::trajectory_rng;

pub const MIN_GATE_SAMPLES: usize = 1000;
const UNITARY_TOL: f64 = 1e-10;
/// Largest off-diagonal Schur entry tolerated for a diagonalizable gate.
const SCHUR_TOL: f64 = 1e-8;

/// Eigendecomposition `U = V diag(e^{iθ}) V†` with phases in `(−π, π]`.
#[derive(Debug, Clone)]
pub struct GateGenerator {
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl GateGenerator {
    /// Hermitian `K` with `e^{−iK} = U`.
    pub fn hamiltonian(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&t| Complex64::new(-t, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }

    /// `e^{−iKt}`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            self.phases.len(),
            self.phases.iter().map(|&th| Complex64::from_polar(1.0, th * t)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn gate_generator(gate: &CMatrix) -> Result<GateGenerator> {
    if !gate.is_square() {
        return Err(Error::DimensionMismatch {
            expected: gate.nrows(),
            found: gate.ncols(),
        });
    }
    let n = gate.nrows();
    let deviation = max_abs(&(gate.adjoint() * gate - CMatrix::identity(n, n)));
    if !(deviation <= UNITARY_TOL) {
        return Err(Error::NotUnitary { deviation });
    }
    let (vectors, t) = gate.clone().schur().unpack();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(t[(i, j)].norm());
            }
        }
    }
    if off > SCHUR_TOL {
        return Err(Error::param("gate", format!("Schur form not diagonal (off-diagonal {off:e})")));
    }
    let phases = (0..n)
        .map(|j| {
            let th = t[(j, j)].arg();
            if th <= -std::f64::consts::PI + 1e-12 {
                std::f64::consts::PI
            } else {
                th
            }
        })
        .collect();
    Ok(GateGenerator { phases, vectors })
}

/// Two-qubit CNOT with the first (most significant) qubit as control.
pub fn cnot() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    let one = Complex64::new(1.0, 0.0);
    m[(0, 0)] = one;
    m[(1, 1)] = one;
    m[(2, 3)] = one;
    m[(3, 2)] = one;
    m
}

/// `(2 + e^{−π²/(2N)})/3`.
pub fn clocked_gate_fidelity_closed_form(accuracy: f64) -> f64 {
    (2.0 + (-std::f64::consts::PI.powi(2) / (2.0 * accuracy)).exp()) / 3.0
}

fn check_accuracy(accuracy: f64) -> Result<()> {
    if accuracy > 0.0 {
        Ok(())
    } else {
        Err(Error::param("accuracy", format!("must be > 0, got {accuracy}")))
    }
}

/// Haar average in closed form: `(Σ_jk e^{−(θ_j−θ_k)²/(2N)} + d) / (d(d+1))`.
pub fn jittered_gate_fidelity_exact(gate: &CMatrix, accuracy: f64) -> Result<f64> {
    check_accuracy(accuracy)?;
    let g = gate_generator(gate)?;
    let d = g.phases.len() as f64;
    let mut sum = 0.0;
    for a in &g.phases {
        for b in &g.phases {
            sum += (-(a - b).powi(2) / (2.0 * accuracy)).exp();
        }
    }
    Ok((sum + d) / (d * (d + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Monte Carlo over Haar test states (normalized complex Gaussian vectors) and
/// Gaussian timing jitter of variance `1/N`. Sample `i` uses stream `i` of `seed`.
pub fn estimate_clocked_gate_fidelity(
    accuracy: f64,
    gate: &CMatrix,
    n_samples: usize,
    seed: u64,
) -> Result<FidelityEstimate> {
    check_accuracy(accuracy)?;
    if n_samples < MIN_GATE_SAMPLES {
        return Err(Error::param("n_samples", format!("need at least {MIN_GATE_SAMPLES}, got {n_samples}")));
    }
    let g = gate_generator(gate)?;
    let dim = g.phases.len();
    let sigma = if accuracy.is_infinite() { 0.0 } else { accuracy.sqrt().recip() };
    let v_adj = g.vectors.adjoint();
    let samples: Vec<f64> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trajectory_rng(seed, i as u64);
            let psi = CVector::from_iterator(
                dim,
                (0..dim).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
            );
            let eps: f64 = sigma * rng.sample::<f64, _>(StandardNormal);
            let c = &v_adj * &psi;
            let norm2 = psi.norm_squared();
            let amp: Complex64 = c
                .iter()
                .zip(&g.phases)
                .map(|(cj, th)| Complex64::from_polar(cj.norm_sqr(), th * eps))
                .sum();
            amp.norm_sqr() / (norm2 * norm2)
        })
        .collect();
    let n = n_samples as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(FidelityEstimate {
        mean,
        std_error: (var / n).sqrt(),
        n_samples,
    })
}
