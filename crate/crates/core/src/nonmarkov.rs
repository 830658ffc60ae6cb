//! Exactly solvable qubit decaying into a vacuum bath with a Lorentzian spectral
//! density centred on the qubit frequency.
//!
//! With `λ′ = √(λ² − 2γ₀λ)` the decoherence function is
//! `G(t) = e^{−λt/2}[cosh(λ′t/2) + (λ/λ′) sinh(λ′t/2)]`, real for all parameters
//! (for `γ₀ > λ/2` the root is imaginary and the hyperbolic pair turns
//! trigonometric). Populations decay as `|G|²` and coherences as `G`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{purity, CMatrix, DensityMatrix};

/// Points on the default plotting grid.
pub const FIGURE_POINTS: usize = 2000;
/// Largest tolerated imaginary part of `G` before it is discarded.
const IMAG_TOL: f64 = 1e-12;
/// Below this `|λ′t/2|` the `sinh(z)/z` factor uses its series.
const SERIES_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `γ₀ < λ/2`: `G` decreases monotonically.
    Markovian,
    /// `γ₀ ≥ λ/2`.
    NonMarkovian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianBath {
    lambda: f64,
    gamma0: f64,
}

impl LorentzianBath {
    pub fn new(lambda: f64, gamma0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("width must be finite and > 0, got {lambda}")));
        }
        if !(gamma0 >= 0.0 && gamma0.is_finite()) {
            return Err(Error::param("gamma0", format!("coupling must be finite and ≥ 0, got {gamma0}")));
        }
        Ok(Self { lambda, gamma0 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn regime(&self) -> Regime {
        if self.gamma0 < self.lambda / 2.0 {
            Regime::Markovian
        } else {
            Regime::NonMarkovian
        }
    }

    /// Principal root `√(λ² − 2γ₀λ)`.
    pub fn lambda_prime(&self) -> Complex64 {
        Complex64::new(self.lambda * self.lambda - 2.0 * self.gamma0 * self.lambda, 0.0).sqrt()
    }

    pub fn decoherence(&self, t: f64) -> Result<f64> {
        decoherence_function(self, t)
    }
}

fn sinhc(z: Complex64) -> Complex64 {
    if z.norm() < SERIES_CUTOFF {
        let z2 = z * z;
        1.0 + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

/// `G(t)`; the `λ′ → 0` limit `e^{−λt/2}(1 + λt/2)` falls out of the `sinh(z)/z` form.
pub fn decoherence_function(bath: &LorentzianBath, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("time must be finite and ≥ 0, got {t}")));
    }
    let lp = bath.lambda_prime();
    let a = bath.lambda * t / 2.0;
    let z = lp * (t / 2.0);
    let g = if z.re.abs() > 1.0 {
        // split into exponentials so large t cannot overflow cosh/sinh
        let ratio = bath.lambda / lp;
        0.5 * (1.0 + ratio) * ((z - a).exp()) + 0.5 * (1.0 - ratio) * ((-z - a).exp())
    } else {
        (-a).exp() * (z.cosh() + a * sinhc(z))
    };
    if g.im.abs() > IMAG_TOL * g.re.abs().max(1.0) {
        return Err(Error::NonConvergence { residual: g.im });
    }
    Ok(g.re)
}

fn qubit_check(rho0: &DensityMatrix) -> Result<()> {
    if rho0.space().dims() != [2] {
        return Err(Error::param("rho0", format!("expected a single qubit, got {:?}", rho0.space().dims())));
    }
    Ok(())
}

/// Populations `(1 − G²ρ₁₁, G²ρ₁₁)`, coherences `Gρ₀₁`.
pub fn evolve_closed_form(rho0: &DensityMatrix, bath: &LorentzianBath, t: f64) -> Result<DensityMatrix> {
    qubit_check(rho0)?;
    let g = decoherence_function(bath, t)?;
    Ok(state_at(rho0, g))
}

fn state_at(rho0: &DensityMatrix, g: f64) -> DensityMatrix {
    let m = rho0.matrix();
    let p1 = m[(1, 1)].re * g * g;
    let mut out = CMatrix::zeros(2, 2);
    out[(0, 0)] = Complex64::new(1.0 - p1, 0.0);
    out[(1, 1)] = Complex64::new(p1, 0.0);
    out[(0, 1)] = m[(0, 1)] * g;
    out[(1, 0)] = m[(1, 0)] * g;
    DensityMatrix::new(rho0.space().clone(), out).expect("|G| ≤ 1 keeps the state valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurityPoint {
    pub t: f64,
    pub purity: f64,
    pub g: f64,
}

pub fn purity_series(rho0: &DensityMatrix, bath: &LorentzianBath, times: &[f64]) -> Result<Vec<PurityPoint>> {
    qubit_check(rho0)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("times", "grid must be strictly increasing"));
    }
    times
        .iter()
        .map(|&t| {
            let g = decoherence_function(bath, t)?;
            Ok(PurityPoint {
                t,
                purity: purity(&state_at(rho0, g)),
                g,
            })
        })
        .collect()
}

/// `points` evenly spaced times on `[0, t_max]`.
pub fn time_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) || points < 2 {
        return Err(Error::param("grid", "need t_max > 0 and at least 2 points"));
    }
    let step = t_max / (points - 1) as f64;
    Ok((0..points).map(|k| if k + 1 == points { t_max } else { k as f64 * step }).collect())
}

/// Default plotting grid `[0, 10/λ]`.
pub fn figure_grid(bath: &LorentzianBath) -> Vec<f64> {
    time_grid(10.0 / bath.lambda, FIGURE_POINTS).expect("λ > 0")
}

/// Bisection on a bracketing interval to absolute width `1e-15 · scale`.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Roots of `f` on `grid`, bracketed by sign changes and refined by bisection.
fn roots_on(grid: &[f64], f: impl Fn(f64) -> Result<f64> + Copy) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut prev = f(grid[0])?;
    for w in grid.windows(2) {
        let next = f(w[1])?;
        if next == 0.0 {
            out.push(w[1]);
        } else if prev != 0.0 && (prev > 0.0) != (next > 0.0) {
            out.push(bisect(f, w[0], w[1])?);
        }
        prev = next;
    }
    Ok(out)
}

/// First sign change of `G` on `[0, t_max]`, refined to machine precision.
pub fn first_zero(bath: &LorentzianBath, t_max: f64) -> Result<Option<f64>> {
    let grid = time_grid(t_max, 20 * FIGURE_POINTS)?;
    Ok(roots_on(&grid, |t| decoherence_function(bath, t))?.first().copied())
}

/// Global purity minimum on `[0, t_max]` for the initial state `rho0`.
///
/// Candidates are a dense grid plus the refined crossings of `G² = 1/2`, where
/// the purity of an equal superposition is stationary.
pub fn purity_minimum(rho0: &DensityMatrix, bath: &LorentzianBath, t_max: f64) -> Result<PurityPoint> {
    qubit_check(rho0)?;
    let grid = time_grid(t_max, 20 * FIGURE_POINTS)?;
    let mut candidates = grid.clone();
    candidates.extend(roots_on(&grid, |t| Ok(decoherence_function(bath, t)?.powi(2) - 0.5))?);
    let mut best: Option<PurityPoint> = None;
    for t in candidates {
        let g = decoherence_function(bath, t)?;
        let p = purity(&state_at(rho0, g));
        if best.is_none_or(|b| p < b.purity) {
            best = Some(PurityPoint { t, purity: p, g });
        }
    }
    Ok(best.expect("grid is nonempty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CVector, HilbertSpace};
    use proptest::prelude::*;

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&HilbertSpace::qubit(), &CVector::from_vec(vec![Complex64::new(1.0, 0.0); 2])).unwrap()
    }

    #[test]
    fn trivial_limits() {
        for gamma0 in [0.0, 0.3, 0.5, 2.0, 25.0] {
            let bath = LorentzianBath::new(1.0, gamma0).unwrap();
            assert_eq!(bath.decoherence(0.0).unwrap(), 1.0);
        }
        let free = LorentzianBath::new(1.0, 0.0).unwrap();
        for t in [0.1, 1.0, 10.0, 500.0, 5000.0] {
            assert!((free.decoherence(t).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(free.decoherence(-1.0).is_err());
        assert!(LorentzianBath::new(0.0, 1.0).is_err());
        assert!(LorentzianBath::new(1.0, -1.0).is_err());
    }

    #[test]
    fn critical_coupling_limit() {
        let bath = LorentzianBath::new(2.0, 1.0).unwrap();
        assert_eq!(bath.lambda_prime(), Complex64::new(0.0, 0.0));
        for t in [0.01f64, 0.7, 3.0] {
            let expected = (-t).exp() * (1.0 + t);
            assert!((bath.decoherence(t).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn strong_coupling_reduces_to_trigonometric_form() {
        let bath = LorentzianBath::new(1.0, 25.0).unwrap();
        assert!((bath.lambda_prime() - Complex64::new(0.0, 7.0)).norm() < 1e-14);
        for t in [0.05f64, 0.3, 1.2, 4.0, 9.9] {
            let expected = (-t / 2.0).exp() * ((3.5 * t).cos() + (3.5 * t).sin() / 7.0);
            assert!((bath.decoherence(t).unwrap() - expected).abs() < 1e-13);
        }
        assert_eq!(bath.regime(), Regime::NonMarkovian);
        assert_eq!(LorentzianBath::new(1.0, 0.4).unwrap().regime(), Regime::Markovian);
    }

    #[test]
    fn first_zero_matches_trig_root() {
        let bath = LorentzianBath::new(1.0, 25.0).unwrap();
        let root = first_zero(&bath, 10.0).unwrap().unwrap();
        let oracle = 2.0 * (std::f64::consts::PI - 7f64.atan()) / 7.0;
        assert!((root - oracle).abs() < 1e-12, "{root} vs {oracle}");
        assert!(first_zero(&LorentzianBath::new(1.0, 0.4).unwrap(), 10.0).unwrap().is_none());
    }

    #[test]
    fn purity_minimum_is_seven_eighths() {
        for gamma0 in [25.0, 0.4] {
            let bath = LorentzianBath::new(1.0, gamma0).unwrap();
            let min = purity_minimum(&plus(), &bath, 10.0).unwrap();
            assert!((min.purity - 0.875).abs() < 1e-12);
            assert!((min.g * min.g - 0.5).abs() < 1e-9);
        }
        // the purity of |+⟩ comes back towards 1 as the qubit relaxes to |0⟩
        let bath = LorentzianBath::new(1.0, 25.0).unwrap();
        let late = purity_series(&plus(), &bath, &[60.0]).unwrap()[0];
        assert!((late.purity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weak_coupling_is_monotone() {
        let bath = LorentzianBath::new(1.0, 0.4).unwrap();
        let series = purity_series(&plus(), &bath, &figure_grid(&bath)).unwrap();
        assert!(series.windows(2).all(|w| w[1].g - w[0].g < 1e-12));
        // purity dips to 7/8 and then rises; no interior local maximum
        let p: Vec<f64> = series.iter().map(|s| s.purity).collect();
        assert!(!p.windows(3).any(|w| w[1] > w[0] + 1e-15 && w[1] > w[2] + 1e-15));
    }

    #[test]
    fn vacuum_and_coherence_evolution() {
        let bath = LorentzianBath::new(1.0, 3.0).unwrap();
        let ground = DensityMatrix::basis_state(&HilbertSpace::qubit(), 0).unwrap();
        for t in [0.5, 2.0] {
            let out = evolve_closed_form(&ground, &bath, t).unwrap();
            assert!((out.matrix() - ground.matrix()).norm() < 1e-15);
            let g = bath.decoherence(t).unwrap();
            let p = evolve_closed_form(&plus(), &bath, t).unwrap();
            assert!((p.matrix()[(0, 1)] - Complex64::new(g / 2.0, 0.0)).norm() < 1e-15);
        }
        let late = evolve_closed_form(&plus(), &bath, 80.0).unwrap();
        assert!((late.population(0) - 1.0).abs() < 1e-12);
        let two = DensityMatrix::maximally_mixed(&HilbertSpace::new(&[3]).unwrap());
        assert!(evolve_closed_form(&two, &bath, 1.0).is_err());
    }

    #[test]
    fn small_time_expansion() {
        for gamma0 in [0.0, 0.01, 0.05] {
            let bath = LorentzianBath::new(1.0, gamma0).unwrap();
            // Richardson step removes the O(t) correction to (G(h) − 1)/h²
            let quad = |h: f64| (bath.decoherence(h).unwrap() - 1.0) / (h * h);
            for h in [1e-3, 4e-3] {
                let curvature = 2.0 * quad(h / 2.0) - quad(h);
                assert!((curvature + gamma0 / 4.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn strong_coupling_oscillates() {
        for gamma0 in [5.0, 12.0, 25.0] {
            let bath = LorentzianBath::new(1.0, gamma0).unwrap();
            assert!(first_zero(&bath, 10.0).unwrap().is_some());
        }
    }

    proptest! {
        #[test]
        fn bounded_and_physical(
            lambda in 0.1f64..5.0, ratio in 0.0f64..40.0, t in 0.0f64..30.0,
            re in -0.5f64..0.5, im in -0.5f64..0.5, p1 in 0.0f64..1.0,
        ) {
            let bath = LorentzianBath::new(lambda, ratio * lambda).unwrap();
            let g = bath.decoherence(t).unwrap();
            prop_assert!(g.abs() <= 1.0 + 1e-12);
            // a valid qubit state: coherence bounded by √(p0 p1)
            let bound = (p1 * (1.0 - p1)).sqrt();
            let c = Complex64::new(re, im);
            let c = if c.norm() > bound { c * (bound / c.norm()) } else { c };
            let m = CMatrix::from_row_slice(2, 2, &[Complex64::new(1.0 - p1, 0.0), c, c.conj(), Complex64::new(p1, 0.0)]);
            let rho0 = DensityMatrix::new(HilbertSpace::qubit(), m).unwrap();
            let out = evolve_closed_form(&rho0, &bath, t).unwrap();
            let audit = out.audit();
            prop_assert!(audit.min_eigenvalue >= -1e-12);
            prop_assert!(audit.trace_error < 1e-15);
        }

        #[test]
        fn markovian_regime_never_rises(lambda in 0.2f64..3.0, ratio in 0.0f64..0.499) {
            let bath = LorentzianBath::new(lambda, ratio * lambda).unwrap();
            let grid = figure_grid(&bath);
            let g: Vec<f64> = grid.iter().map(|&t| bath.decoherence(t).unwrap()).collect();
            prop_assert!(g.windows(2).all(|w| w[1] - w[0] <= 1e-12));
        }
    }
}
