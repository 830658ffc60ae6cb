use num_complex::Complex64;

use super::matrix::{eigh_matrix, hermiticity_deviation, trace, CMatrix, CVector, Operator};
use super::space::HilbertSpace;
use crate::error::{Error, Result};

/// Bounds checked whenever a density matrix is constructed or re-validated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateTolerance {
    pub hermiticity: f64,
    pub trace: f64,
    pub positivity: f64,
}

impl StateTolerance {
    pub const STRICT: StateTolerance = StateTolerance {
        hermiticity: 1e-10,
        trace: 1e-9,
        positivity: 1e-9,
    };

    /// Looser bounds for states produced by time integration.
    pub const EVOLVED: StateTolerance = StateTolerance {
        hermiticity: 1e-10,
        trace: 1e-7,
        positivity: 1e-7,
    };
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    space: HilbertSpace,
    matrix: CMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAudit {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl StateAudit {
    pub fn of(matrix: &CMatrix) -> Self {
        let eig = eigh_matrix(matrix);
        Self {
            hermiticity: hermiticity_deviation(matrix),
            trace_error: (trace(matrix) - Complex64::new(1.0, 0.0)).norm(),
            min_eigenvalue: eig.values.first().copied().unwrap_or(0.0),
        }
    }

    pub fn check(&self, tol: &StateTolerance) -> Result<()> {
        if self.hermiticity > tol.hermiticity {
            return Err(Error::InvalidState {
                what: "hermiticity deviation",
                value: self.hermiticity,
            });
        }
        if self.trace_error > tol.trace {
            return Err(Error::InvalidState {
                what: "trace error",
                value: self.trace_error,
            });
        }
        if self.min_eigenvalue < -tol.positivity {
            return Err(Error::InvalidState {
                what: "minimum eigenvalue",
                value: self.min_eigenvalue,
            });
        }
        Ok(())
    }
}

impl DensityMatrix {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(space, matrix, &StateTolerance::STRICT)
    }

    pub fn with_tolerance(space: HilbertSpace, matrix: CMatrix, tol: &StateTolerance) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        StateAudit::of(&matrix).check(tol)?;
        Ok(Self { space, matrix })
    }

    pub(crate) fn new_unchecked(space: HilbertSpace, matrix: CMatrix) -> Self {
        Self { space, matrix }
    }

    /// `|ψ⟩⟨ψ|` after normalizing `psi`.
    pub fn pure(space: &HilbertSpace, psi: &CVector) -> Result<Self> {
        if psi.len() != space.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.total_dim(),
                found: psi.len(),
            });
        }
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::param("psi", "state vector has zero or non-finite norm"));
        }
        let v = psi.unscale(norm);
        Ok(Self::new_unchecked(space.clone(), &v * v.adjoint()))
    }

    pub fn basis_state(space: &HilbertSpace, index: usize) -> Result<Self> {
        let n = space.total_dim();
        if index >= n {
            return Err(Error::param("index", format!("{index} out of range for dimension {n}")));
        }
        let mut m = CMatrix::zeros(n, n);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(Self::new_unchecked(space.clone(), m))
    }

    pub fn maximally_mixed(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self::new_unchecked(
            space.clone(),
            CMatrix::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0),
        )
    }

    /// Tensor product in the order given.
    pub fn product(factors: &[DensityMatrix]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::param("factors", "empty product"))?;
        let mut out = first.clone();
        for f in rest {
            out = Self::new_unchecked(out.space.tensor(&f.space)?, out.matrix.kronecker(&f.matrix));
        }
        Ok(out)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// `⟨k|ρ|k⟩` in the computational basis.
    pub fn population(&self, k: usize) -> f64 {
        self.matrix[(k, k)].re
    }

    pub fn audit(&self) -> StateAudit {
        StateAudit::of(&self.matrix)
    }

    pub fn expectation(&self, op: &Operator) -> Result<f64> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch {
                left: op.space().dims().to_vec(),
                right: self.space.dims().to_vec(),
            });
        }
        Ok(trace(&(op.matrix() * &self.matrix)).re)
    }

    /// Reduced state on the subsystems in `keep`; order follows the parent space.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let count = self.space.num_subsystems();
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        if let Some(&bad) = keep.iter().find(|&&k| k >= count) {
            return Err(Error::InvalidSubsystem { index: bad, count });
        }
        let kept = self.space.subspace(&keep)?;
        let traced: Vec<usize> = (0..count).filter(|i| !keep.contains(i)).collect();
        let dims = self.space.dims();
        let traced_total: usize = traced.iter().map(|&i| dims[i]).product();
        let n_kept = kept.total_dim();
        let mut out = CMatrix::zeros(n_kept, n_kept);
        let mut digits = vec![0usize; count];
        for a in 0..n_kept {
            let da = kept.digits(a);
            for b in 0..n_kept {
                let db = kept.digits(b);
                let mut acc = Complex64::new(0.0, 0.0);
                for e in 0..traced_total {
                    let mut rem = e;
                    for &t in traced.iter().rev() {
                        digits[t] = rem % dims[t];
                        rem /= dims[t];
                    }
                    for (slot, &k) in keep.iter().enumerate() {
                        digits[k] = da[slot];
                    }
                    let row = self.space.index_of(&digits);
                    for (slot, &k) in keep.iter().enumerate() {
                        digits[k] = db[slot];
                    }
                    let col = self.space.index_of(&digits);
                    acc += self.matrix[(row, col)];
                }
                out[(a, b)] = acc;
            }
        }
        Ok(Self::new_unchecked(kept, out))
    }
}

/// Bath or state temperature with the two limits represented exactly (k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    Finite(f64),
    Infinite,
}

impl Temperature {
    pub fn finite(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(Temperature::Finite(t))
        } else {
            Err(Error::InvalidTemperature(t))
        }
    }

    /// Maps 0 and +∞ onto the explicit limits; negative or NaN is rejected.
    pub fn from_value(t: f64) -> Result<Self> {
        if t == 0.0 {
            Ok(Temperature::Zero)
        } else if t == f64::INFINITY {
            Ok(Temperature::Infinite)
        } else {
            Self::finite(t)
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Temperature::Zero => 0.0,
            Temperature::Finite(t) => *t,
            Temperature::Infinite => f64::INFINITY,
        }
    }

    /// `e^{-gap/T}` for `gap ≥ 0`.
    pub fn boltzmann_factor(&self, gap: f64) -> f64 {
        match self {
            Temperature::Zero => {
                if gap > 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            Temperature::Finite(t) => (-gap / t).exp(),
            Temperature::Infinite => 1.0,
        }
    }

    pub fn inverse(&self) -> f64 {
        match self {
            Temperature::Zero => f64::INFINITY,
            Temperature::Finite(t) => 1.0 / t,
            Temperature::Infinite => 0.0,
        }
    }
}

/// Degenerate ground levels closer than this share the zero-temperature weight.
const GROUND_DEGENERACY_TOL: f64 = 1e-12;

/// Gibbs state `e^{-H/T}/Z`.
pub fn thermal_state(hamiltonian: &Operator, temperature: Temperature) -> Result<DensityMatrix> {
    let eig = hamiltonian.eigh()?;
    let e0 = eig.values[0];
    let weights: Vec<f64> = match temperature {
        Temperature::Infinite => vec![1.0; eig.values.len()],
        Temperature::Zero => eig
            .values
            .iter()
            .map(|&e| if e - e0 <= GROUND_DEGENERACY_TOL { 1.0 } else { 0.0 })
            .collect(),
        Temperature::Finite(t) => eig.values.iter().map(|&e| (-(e - e0) / t).exp()).collect(),
    };
    let z: f64 = weights.iter().sum();
    let n = eig.values.len();
    let mut scaled = eig.vectors.clone();
    for (j, w) in weights.iter().enumerate() {
        for i in 0..n {
            scaled[(i, j)] *= w / z;
        }
    }
    let rho = &scaled * eig.vectors.adjoint();
    Ok(DensityMatrix::new_unchecked(
        hamiltonian.space().clone(),
        super::matrix::hermitian_part(&rho),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::matrix::{basis::*, embed, max_abs};
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn random_state(n: usize, vals: &[f64]) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(vals[k % vals.len()], vals[(k + 1) % vals.len()])
        });
        let rho = &a * a.adjoint();
        let tr = trace(&rho);
        rho / tr
    }

    #[test]
    fn thermal_limits_and_ratio() {
        let delta = 0.7;
        let h = Operator::single(sigma_z() * Complex64::new(delta, 0.0)).unwrap();
        let hot = thermal_state(&h, Temperature::Infinite).unwrap();
        assert!((hot.population(0) - 0.5).abs() < 1e-15);
        let cold = thermal_state(&h, Temperature::Zero).unwrap();
        assert!((cold.population(0) - 1.0).abs() < 1e-15);
        // Δ/T = ln(3)/2: p(|1⟩) = e^{-βΔ}/(2cosh βΔ) = (1/√3)/(1/√3+√3) = 1/4
        let t = delta / (0.5 * 3f64.ln());
        let rho = thermal_state(&h, Temperature::finite(t).unwrap()).unwrap();
        assert!((rho.population(1) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn temperature_validation() {
        assert_eq!(Temperature::finite(0.0), Err(Error::InvalidTemperature(0.0)));
        assert!(Temperature::finite(-1.0).is_err());
        assert_eq!(Temperature::from_value(0.0).unwrap(), Temperature::Zero);
        assert_eq!(Temperature::from_value(f64::INFINITY).unwrap(), Temperature::Infinite);
        let h = Operator::single(sigma_plus()).unwrap();
        assert!(matches!(
            thermal_state(&h, Temperature::Infinite),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let s1 = HilbertSpace::qubit();
        let s2 = HilbertSpace::new(&[3]).unwrap();
        let a = DensityMatrix::new(s1, random_state(2, &[0.3, 0.1, -0.2, 0.5, 0.9])).unwrap();
        let b = DensityMatrix::new(s2, random_state(3, &[0.7, -0.4, 0.2, 0.1])).unwrap();
        let ab = DensityMatrix::product(&[a.clone(), b.clone()]).unwrap();
        assert!(max_abs(&(ab.partial_trace(&[0]).unwrap().matrix() - a.matrix())) < 1e-14);
        assert!(max_abs(&(ab.partial_trace(&[1]).unwrap().matrix() - b.matrix())) < 1e-14);

        let s = HilbertSpace::new(&[2, 2]).unwrap();
        let mut psi = CVector::zeros(4);
        psi[0] = Complex64::new(1.0, 0.0);
        psi[3] = Complex64::new(1.0, 0.0);
        let bell = DensityMatrix::pure(&s, &psi).unwrap();
        let red = bell.partial_trace(&[0]).unwrap();
        let half = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        assert!(max_abs(&(red.matrix() - half)) < 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let s = HilbertSpace::new(&[2, 2]).unwrap();
        let rho = DensityMatrix::maximally_mixed(&s);
        assert_eq!(rho.partial_trace(&[]), Err(Error::EmptyKeepSet));
        assert_eq!(
            rho.partial_trace(&[2]),
            Err(Error::InvalidSubsystem { index: 2, count: 2 })
        );
    }

    #[test]
    fn rejects_invalid_states() {
        let s = HilbertSpace::qubit();
        let bad_trace = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(s.clone(), bad_trace),
            Err(Error::InvalidState { what: "trace error", .. })
        ));
        let negative = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::new(1.1, 0.0),
            Complex64::new(-0.1, 0.0),
        ]));
        assert!(matches!(
            DensityMatrix::new(s.clone(), negative),
            Err(Error::InvalidState { what: "minimum eigenvalue", .. })
        ));
        let mut skew = CMatrix::identity(2, 2) * Complex64::new(0.5, 0.0);
        skew[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::new(s, skew),
            Err(Error::InvalidState { what: "hermiticity deviation", .. })
        ));
    }

    proptest! {
        #[test]
        fn partial_trace_preserves_trace(vals in proptest::collection::vec(-1.0f64..1.0, 40), keep in 0usize..3) {
            let s = HilbertSpace::new(&[2, 3, 2]).unwrap();
            let rho = DensityMatrix::new(s, random_state(12, &vals)).unwrap();
            let red = rho.partial_trace(&[keep]).unwrap();
            // direct summation oracle: trace of the full matrix
            let direct: f64 = (0..12).map(|k| rho.population(k)).sum();
            prop_assert!((trace(red.matrix()).re - direct).abs() < 1e-12);
            prop_assert!((direct - 1.0).abs() < 1e-12);
        }

        #[test]
        fn thermal_state_commutes_and_balances(vals in proptest::collection::vec(-1.0f64..1.0, 32), t in 0.2f64..5.0) {
            let raw = CMatrix::from_fn(4, 4, |i, j| Complex64::new(vals[2 * (4 * i + j)], vals[2 * (4 * i + j) + 1]));
            let h = Operator::new(HilbertSpace::new(&[2, 2]).unwrap(), super::super::matrix::hermitian_part(&raw)).unwrap();
            let rho = thermal_state(&h, Temperature::finite(t).unwrap()).unwrap();
            let comm = h.matrix() * rho.matrix() - rho.matrix() * h.matrix();
            prop_assert!(max_abs(&comm) < 1e-10);
            let eig = h.eigh().unwrap();
            let p: Vec<f64> = (0..4).map(|j| {
                let v = eig.vectors.column(j);
                (v.adjoint() * rho.matrix() * v)[(0, 0)].re
            }).collect();
            for j in 0..4 {
                for k in 0..4 {
                    let ratio = p[j] / p[k];
                    let expected = (-(eig.values[j] - eig.values[k]) / t).exp();
                    prop_assert!((ratio - expected).abs() < 1e-9 * expected.max(1.0));
                }
            }
            let z = embed(&Operator::single(sigma_z()).unwrap(), h.space(), 0).unwrap();
            prop_assert!(rho.expectation(&z).unwrap().abs() <= 1.0);
        }
    }
}
