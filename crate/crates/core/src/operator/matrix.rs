use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::space::HilbertSpace;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Hermiticity tolerance applied to operators handed to spectral routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense operator on a tensor-product space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors matching `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    /// Reassemble `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        self.map_complex(|x| Complex64::new(f(x), 0.0))
    }

    pub fn map_complex(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a matrix assumed Hermitian. The strict upper triangle is
/// symmetrized first so round-off asymmetry does not leak into the result.
pub fn eigh_matrix(m: &CMatrix) -> Eigh {
    let herm = hermitian_part(m);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Eigh { values, vectors }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

impl Operator {
    pub fn new(space: HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    /// Operator on a single qudit whose dimension is read off the matrix.
    pub fn single(matrix: CMatrix) -> Result<Self> {
        let space = HilbertSpace::new(&[matrix.nrows()])?;
        Self::new(space, matrix)
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let n = space.total_dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::zeros(n, n),
        }
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

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn ensure_hermitian(&self) -> Result<()> {
        let deviation = self.hermiticity_deviation();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(())
    }

    fn same_space(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims().to_vec(),
                right: other.space.dims().to_vec(),
            });
        }
        Ok(())
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// `self ⊗ other` on the concatenated space.
    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        Ok(Self {
            space: self.space.tensor(&other.space)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn eigh(&self) -> Result<Eigh> {
        self.ensure_hermitian()?;
        Ok(eigh_matrix(&self.matrix))
    }

    /// `exp(-i H t)` for Hermitian `self`.
    pub fn propagator(&self, t: f64) -> Result<CMatrix> {
        let eig = self.eigh()?;
        Ok(eig.map_complex(|e| Complex64::from_polar(1.0, -e * t)))
    }

    pub fn expectation(&self, psi: &CVector) -> Complex64 {
        psi.dotc(&(&self.matrix * psi))
    }
}

/// `1 ⊗ … ⊗ op ⊗ … ⊗ 1` with `op` acting on subsystem `position` of `space`.
pub fn embed(op: &Operator, space: &HilbertSpace, position: usize) -> Result<Operator> {
    let dims = space.dims();
    if position >= dims.len() {
        return Err(Error::InvalidSubsystem {
            index: position,
            count: dims.len(),
        });
    }
    if op.dim() != dims[position] {
        return Err(Error::DimensionMismatch {
            expected: dims[position],
            found: op.dim(),
        });
    }
    let before: usize = dims[..position].iter().product();
    let after: usize = dims[position + 1..].iter().product();
    let matrix = CMatrix::identity(before, before)
        .kronecker(op.matrix())
        .kronecker(&CMatrix::identity(after, after));
    Operator::new(space.clone(), matrix)
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Operator> for &Operator {
            type Output = Operator;
            fn $method(self, rhs: &Operator) -> Operator {
                assert_eq!(self.space, rhs.space, "operator spaces differ");
                Operator {
                    space: self.space.clone(),
                    matrix: &self.matrix $op &rhs.matrix,
                }
            }
        }
        impl $trait<Operator> for Operator {
            type Output = Operator;
            fn $method(self, rhs: Operator) -> Operator {
                &self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Mul<Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        rhs.scaled(self)
    }
}

/// Standard single-qudit operators in the basis where index 0 is `|0⟩`.
pub mod basis {
    use super::*;

    /// `|row⟩⟨col|` on an `n`-level system.
    pub fn transition(n: usize, row: usize, col: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        m[(row, col)] = ONE;
        m
    }

    pub fn projector(n: usize, k: usize) -> CMatrix {
        transition(n, k, k)
    }

    /// `σ_z = |1⟩⟨1| − |0⟩⟨0|`, so `|1⟩` carries eigenvalue +1.
    pub fn sigma_z() -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_vec(vec![-ONE, ONE]))
    }

    pub fn sigma_x() -> CMatrix {
        transition(2, 0, 1) + transition(2, 1, 0)
    }

    pub fn sigma_y() -> CMatrix {
        transition(2, 1, 0) * I - transition(2, 0, 1) * I
    }

    /// `σ₊ = |1⟩⟨0|`.
    pub fn sigma_plus() -> CMatrix {
        transition(2, 1, 0)
    }

    /// `σ₋ = |0⟩⟨1|`.
    pub fn sigma_minus() -> CMatrix {
        transition(2, 0, 1)
    }

    /// Truncated bosonic annihilation operator on Fock levels `0..n`.
    pub fn annihilation(n: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for k in 1..n {
            m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        m
    }

    pub fn number(n: usize) -> CMatrix {
        CMatrix::from_diagonal(&CVector::from_fn(n, |k, _| Complex64::new(k as f64, 0.0)))
    }

    pub fn ket(n: usize, k: usize) -> CVector {
        let mut v = CVector::zeros(n);
        v[k] = ONE;
        v
    }
}
