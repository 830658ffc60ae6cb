//! Switch-controlled Hamiltonians and the dispersive qubit-mode coupling.

use crate::error::{Error, Result};
use crate::operator::{basis, embed, CMatrix, DensityMatrix, HilbertSpace, Operator};

/// Occupation of the highest kept Fock level above which truncation is flagged.
pub const TRUNCATION_WARN: f64 = 1e-6;

/// `Σ_j H_j ⊗ |φ_j⟩⟨φ_j| + H_S + H_R` on `rest ⊗ switch`.
///
/// Each branch pairs a Hamiltonian on the rest of the machine with the index of
/// the switch basis state that selects it.
pub fn build_switch_hamiltonian(
    branches: &[(Operator, usize)],
    h_switch: &Operator,
    h_rest: &Operator,
) -> Result<Operator> {
    if branches.is_empty() {
        return Err(Error::param("branches", "need at least one branch"));
    }
    h_switch.ensure_hermitian()?;
    h_rest.ensure_hermitian()?;
    let rest = h_rest.space();
    let switch = h_switch.space();
    let n_switch = switch.total_dim();
    let mut seen = vec![false; n_switch];
    let mut dims = rest.dims().to_vec();
    dims.extend_from_slice(switch.dims());
    let space = HilbertSpace::new(&dims)?;
    let id_rest = CMatrix::identity(rest.total_dim(), rest.total_dim());
    let id_switch = CMatrix::identity(n_switch, n_switch);
    let mut total = id_rest.kronecker(h_switch.matrix()) + h_rest.matrix().kronecker(&id_switch);
    for (h, phi) in branches {
        if h.space() != rest {
            return Err(Error::SpaceMismatch {
                left: h.space().dims().to_vec(),
                right: rest.dims().to_vec(),
            });
        }
        h.ensure_hermitian()?;
        if *phi >= n_switch {
            return Err(Error::param("branches", format!("switch index {phi} ≥ switch dimension {n_switch}")));
        }
        if std::mem::replace(&mut seen[*phi], true) {
            return Err(Error::param("branches", format!("duplicate switch index {phi}")));
        }
        total += h.matrix().kronecker(&basis::projector(n_switch, *phi));
    }
    Operator::new(space, total)
}

/// `Δσ_z + ω a†a + χ σ_z a†a` on `[2, n_max + 1]`.
pub fn build_dispersive(delta: f64, omega: f64, chi: f64, n_max: usize) -> Result<Operator> {
    if n_max < 2 {
        return Err(Error::param("n_max", format!("Fock truncation must be ≥ 2, got {n_max}")));
    }
    for (name, x) in [("delta", delta), ("omega", omega), ("chi", chi)] {
        if !x.is_finite() {
            return Err(Error::param(name, "must be finite"));
        }
    }
    let n = n_max + 1;
    let space = HilbertSpace::new(&[2, n])?;
    let z = Operator::single(basis::sigma_z())?;
    let num = Operator::single(basis::number(n))?;
    let z_full = embed(&z, &space, 0)?;
    let n_full = embed(&num, &space, 1)?;
    let coupling = &z_full * &n_full;
    Ok(z_full.scaled(delta) + n_full.scaled(omega) + coupling.scaled(chi))
}

/// Population of the top kept Fock level of a qubit-mode state; logs a warning
/// when it exceeds [`TRUNCATION_WARN`].
pub fn top_rung_weight(rho: &DensityMatrix) -> Result<f64> {
    let dims = rho.space().dims();
    if dims.len() != 2 || dims[0] != 2 {
        return Err(Error::param("rho", "expected a qubit-mode state on [2, n]"));
    }
    let mode = rho.partial_trace(&[1])?;
    let w = mode.population(dims[1] - 1);
    if w > TRUNCATION_WARN {
        log::warn!("Fock truncation: top level holds {w:e} > {TRUNCATION_WARN:e}; raise n_max");
    }
    Ok(w)
}
