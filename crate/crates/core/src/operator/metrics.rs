//! State figures of merit: purity, fidelity and energy-mode coherence.

use num_complex::Complex64;

use super::density::DensityMatrix;
use super::matrix::{eigh_matrix, hermitian_part, Operator};
use crate::error::{Error, Result};

/// Default tolerance for matching energy differences to a mode frequency.
pub const MODE_TOL: f64 = 1e-9;

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let m = rho.matrix();
    // Tr(ρ²) = Σ_jk |ρ_jk|² for Hermitian ρ
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Uhlmann fidelity `(Tr √(√σ ρ √σ))²`, clamped to [0, 1].
pub fn fidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if sigma.space() != rho.space() {
        return Err(Error::SpaceMismatch {
            left: sigma.space().dims().to_vec(),
            right: rho.space().dims().to_vec(),
        });
    }
    let sqrt_sigma = eigh_matrix(sigma.matrix()).map(|x| x.max(0.0).sqrt());
    let inner = hermitian_part(&(&sqrt_sigma * rho.matrix() * &sqrt_sigma));
    let root_trace: f64 = eigh_matrix(&inner)
        .values
        .iter()
        .map(|&x| x.max(0.0).sqrt())
        .sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// One coherence mode: all `ρ_jk` with `E_j − E_k ≈ frequency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceMode {
    pub frequency: f64,
    pub weight: f64,
}

struct EnergyFrame {
    /// Eigenvalues with near-degenerate clusters snapped to one representative.
    levels: Vec<f64>,
    rho: nalgebra::DMatrix<Complex64>,
}

fn energy_frame(rho: &DensityMatrix, hamiltonian: &Operator, tol: f64) -> Result<EnergyFrame> {
    if rho.space() != hamiltonian.space() {
        return Err(Error::SpaceMismatch {
            left: rho.space().dims().to_vec(),
            right: hamiltonian.space().dims().to_vec(),
        });
    }
    let eig = hamiltonian.eigh()?;
    let mut levels = eig.values.clone();
    let mut anchor = levels[0];
    for e in levels.iter_mut() {
        if *e - anchor > tol {
            anchor = *e;
        }
        *e = anchor;
    }
    let rho_e = eig.vectors.adjoint() * rho.matrix() * &eig.vectors;
    Ok(EnergyFrame { levels, rho: rho_e })
}

/// `Σ_{j,k : E_j − E_k = ω} |ρ_jk|` with ρ written in the eigenbasis of `hamiltonian`.
pub fn coherence_mode_weight(
    rho: &DensityMatrix,
    hamiltonian: &Operator,
    frequency: f64,
    tol: f64,
) -> Result<f64> {
    let frame = energy_frame(rho, hamiltonian, tol)?;
    let n = frame.levels.len();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            if (frame.levels[j] - frame.levels[k] - frequency).abs() <= tol {
                acc += frame.rho[(j, k)].norm();
            }
        }
    }
    Ok(acc)
}

/// Every distinct mode with its weight, sorted by frequency.
pub fn coherence_modes(rho: &DensityMatrix, hamiltonian: &Operator, tol: f64) -> Result<Vec<CoherenceMode>> {
    let frame = energy_frame(rho, hamiltonian, tol)?;
    let n = frame.levels.len();
    let mut modes: Vec<CoherenceMode> = Vec::new();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            pairs.push((frame.levels[j] - frame.levels[k], frame.rho[(j, k)].norm()));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (omega, w) in pairs {
        match modes.last_mut() {
            Some(last) if (omega - last.frequency).abs() <= tol => last.weight += w,
            _ => modes.push(CoherenceMode {
                frequency: omega,
                weight: w,
            }),
        }
    }
    // ω = 0 is exact after snapping; pin it so callers can look it up by equality
    for m in modes.iter_mut() {
        if m.frequency.abs() <= tol {
            m.frequency = 0.0;
        }
    }
    Ok(modes)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    eigh_matrix(rho.matrix())
        .values
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.ln())
        .sum()
}
