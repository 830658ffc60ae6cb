use crate::error::{Error, Result};

/// Largest total dimension accepted unless a caller raises the cap explicitly.
pub const DEFAULT_DIM_CAP: usize = 256;

/// Ordered tensor product of finite subsystems.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    dims: Vec<usize>,
    total: usize,
}

impl HilbertSpace {
    pub fn new(dims: &[usize]) -> Result<Self> {
        Self::with_cap(dims, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(dims: &[usize], cap: usize) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::param("dims", "at least one subsystem is required"));
        }
        if let Some(&bad) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(bad));
        }
        let mut total: usize = 1;
        for &d in dims {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= cap)
                .ok_or(Error::DimensionCap {
                    total: dims.iter().fold(1usize, |a, &d| a.saturating_mul(d)),
                    cap,
                })?;
        }
        Ok(Self {
            dims: dims.to_vec(),
            total,
        })
    }

    pub fn qubit() -> Self {
        Self {
            dims: vec![2],
            total: 2,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> Result<HilbertSpace> {
        let dims: Vec<usize> = self.dims.iter().chain(other.dims.iter()).copied().collect();
        HilbertSpace::new(&dims)
    }

    /// Subspace formed by the listed subsystems, in ascending order.
    pub fn subspace(&self, keep: &[usize]) -> Result<HilbertSpace> {
        let dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        HilbertSpace::with_cap(&dims, self.total)
    }

    /// Digits of a flat basis index, most significant subsystem first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(self.dims.iter()).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(self.dims.iter())
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }
}
