//! Markovian open-system evolution in GKSL form.
//!
//! ```text
//! dρ/dt = −i[H, ρ] + Σ_c γ_c (L_c ρ L_c† − ½{L_c†L_c, ρ})
//! ```
//!
//! Channels carry a tag naming the bath (or process) they belong to, so heat
//! currents and jump counts can be attributed per bath.

use log::warn;
use nalgebra::{DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{
    eigh_matrix, max_abs, trace, CMatrix, DensityMatrix, HilbertSpace, Operator, StateAudit,
    StateTolerance, Temperature, I, ONE,
};

/// Largest `dt × spectral scale` accepted without a warning.
pub const MAX_STEP_SCALE: f64 = 0.1;
/// Tolerance on the RK4 step-halving error estimate.
pub const CONVERGENCE_TOL: f64 = 1e-6;
/// Null-space gap: the second-smallest singular value must exceed this times the largest.
pub const NULL_SPACE_GAP: f64 = 1e-8;
/// Entrywise bound on `L[ρ_ss]` accepted from the steady-state solver.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpChannel {
    operator: Operator,
    rate: f64,
    tag: String,
}

impl JumpChannel {
    pub fn new(operator: Operator, rate: f64, tag: impl Into<String>) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", format!("must be finite and ≥ 0, got {rate}")));
        }
        Ok(Self {
            operator,
            rate,
            tag: tag.into(),
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }
}

/// Decay at rate `γ` and excitation at `γ e^{−gap/T}` through `lowering` and its adjoint.
pub fn thermal_channels(
    lowering: &Operator,
    gap: f64,
    temperature: Temperature,
    rate: f64,
    tag: &str,
) -> Result<Vec<JumpChannel>> {
    if !(gap > 0.0) {
        return Err(Error::param("gap", format!("level splitting must be > 0, got {gap}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::param("rate", format!("bath rate must be > 0, got {rate}")));
    }
    if let Temperature::Finite(t) = temperature {
        Temperature::finite(t)?;
    }
    let up = rate * temperature.boltzmann_factor(gap);
    Ok(vec![
        JumpChannel::new(lowering.clone(), rate, tag)?,
        JumpChannel::new(lowering.adjoint(), up, tag)?,
    ])
}

/// Constant Hamiltonian plus tagged jump channels.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    space: HilbertSpace,
    hamiltonian: Operator,
    channels: Vec<JumpChannel>,
    /// `H − (i/2) Σ γ L†L`
    effective: CMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, channels: Vec<JumpChannel>) -> Result<Self> {
        hamiltonian.ensure_hermitian()?;
        let space = hamiltonian.space().clone();
        for c in &channels {
            if c.operator.space() != &space {
                return Err(Error::SpaceMismatch {
                    left: space.dims().to_vec(),
                    right: c.operator.space().dims().to_vec(),
                });
            }
        }
        let n = space.total_dim();
        let mut decay = CMatrix::zeros(n, n);
        for c in &channels {
            let l = c.operator.matrix();
            decay += l.adjoint() * l * Complex64::new(c.rate, 0.0);
        }
        let effective = hamiltonian.matrix() - decay * Complex64::new(0.0, 0.5);
        Ok(Self {
            space,
            hamiltonian,
            channels,
            effective,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn effective_hamiltonian(&self) -> &CMatrix {
        &self.effective
    }

    /// Distinct tags in first-seen order.
    pub fn tags(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.channels {
            if !out.iter().any(|t| t == &c.tag) {
                out.push(c.tag.clone());
            }
        }
        out
    }

    fn channels_tagged<'a>(&'a self, tag: &'a str) -> Result<impl Iterator<Item = &'a JumpChannel>> {
        if !self.channels.iter().any(|c| c.tag == tag) {
            return Err(Error::UnknownTag(tag.to_string()));
        }
        Ok(self.channels.iter().filter(move |c| c.tag == tag))
    }

    /// Bound on the generator's spectral radius used to vet integration steps.
    pub fn spectral_scale(&self) -> f64 {
        let e = eigh_matrix(self.hamiltonian.matrix()).values;
        let spread = e.last().unwrap() - e.first().unwrap();
        let dissipative: f64 = self
            .channels
            .iter()
            .filter(|c| c.rate > 0.0)
            .map(|c| {
                let l = c.operator.matrix();
                let ll = l.adjoint() * l;
                c.rate * eigh_matrix(&ll).values.last().copied().unwrap_or(0.0)
            })
            .sum();
        spread + dissipative
    }

    /// Generator applied to a raw matrix.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let mut out = (&self.effective * rho - rho * self.effective.adjoint()) * (-I);
        for c in &self.channels {
            if c.rate == 0.0 {
                continue;
            }
            let l = c.operator.matrix();
            out += l * rho * l.adjoint() * Complex64::new(c.rate, 0.0);
        }
        out
    }

    /// Dissipator restricted to the channels carrying `tag`.
    pub fn dissipator(&self, rho: &CMatrix, tag: &str) -> Result<CMatrix> {
        let n = self.space.total_dim();
        let mut out = CMatrix::zeros(n, n);
        for c in self.channels_tagged(tag)? {
            let l = c.operator.matrix();
            let ll = l.adjoint() * l;
            let half = Complex64::new(0.5, 0.0);
            out += (l * rho * l.adjoint() - (&ll * rho + rho * &ll) * half) * Complex64::new(c.rate, 0.0);
        }
        Ok(out)
    }

    /// Column-stacked superoperator, `vec(L[ρ]) = S vec(ρ)`.
    pub fn superoperator(&self) -> CMatrix {
        let n = self.space.total_dim();
        let id = CMatrix::identity(n, n);
        let mut s = id.kronecker(&self.effective) * (-I) + self.effective.conjugate().kronecker(&id) * I;
        for c in &self.channels {
            if c.rate == 0.0 {
                continue;
            }
            let l = c.operator.matrix();
            s += l.conjugate().kronecker(l) * Complex64::new(c.rate, 0.0);
        }
        s
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.space() != &self.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims().to_vec(),
                right: rho.space().dims().to_vec(),
            });
        }
        Ok(())
    }
}

/// `dρ/dt` for a validated state.
pub fn liouvillian_apply(model: &LindbladModel, rho: &DensityMatrix) -> Result<CMatrix> {
    model.check_state(rho)?;
    Ok(model.apply(rho.matrix()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Turn the step-size warning into an error.
    pub strict_step_check: bool,
    /// Re-run at `dt/2` and require agreement to [`CONVERGENCE_TOL`].
    pub convergence_check: bool,
    /// Emit every n-th step (the initial and final states are always emitted).
    pub sample_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            strict_step_check: false,
            convergence_check: true,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Max entrywise difference between the `dt` and `dt/2` final states.
    pub convergence_error: Option<f64>,
    pub step_scale: f64,
}

impl TimeSeries {
    pub fn last(&self) -> &DensityMatrix {
        self.states.last().expect("time series always holds the initial state")
    }
}

fn rk4_step(model: &LindbladModel, rho: &CMatrix, dt: f64) -> CMatrix {
    let h = Complex64::new(dt, 0.0);
    let half = Complex64::new(0.5 * dt, 0.0);
    let k1 = model.apply(rho);
    let k2 = model.apply(&(rho + &k1 * half));
    let k3 = model.apply(&(rho + &k2 * half));
    let k4 = model.apply(&(rho + &k3 * h));
    rho + (k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0)
}

/// Largest Hilbert dimension for which the RK4 step is precomputed as a dense
/// Liouville-space matrix.
const DENSE_STEP_MAX_DIM: usize = 32;

/// RK4 propagation. For a constant generator `S` one step is exactly the
/// polynomial `T = Σ_{k≤4} (hS)^k/k!`, so small models apply `T^n` for a block
/// of `n` steps as a single matvec.
enum Stepper<'a> {
    Dense {
        step: CMatrix,
        powers: Vec<(usize, CMatrix)>,
        src: DVector<Complex64>,
        dst: DVector<Complex64>,
    },
    Direct { model: &'a LindbladModel, dt: f64 },
}

fn matrix_power(m: &CMatrix, mut n: usize) -> CMatrix {
    let mut base = m.clone();
    let mut acc = CMatrix::identity(m.nrows(), m.ncols());
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    acc
}

impl<'a> Stepper<'a> {
    fn new(model: &'a LindbladModel, dt: f64) -> Self {
        let n = model.space.total_dim();
        if n > DENSE_STEP_MAX_DIM {
            return Stepper::Direct { model, dt };
        }
        let hs = model.superoperator() * Complex64::new(dt, 0.0);
        let m = n * n;
        let mut step = CMatrix::identity(m, m);
        let mut term = CMatrix::identity(m, m);
        for k in 1..=4 {
            term = &hs * term * Complex64::new(1.0 / k as f64, 0.0);
            step += &term;
        }
        Stepper::Dense {
            step,
            powers: Vec::new(),
            src: DVector::zeros(m),
            dst: DVector::zeros(m),
        }
    }

    /// Advances `rho` by `n` steps starting from step index `start`. The direct
    /// path checks the trace after every step; the dense path once per block.
    fn advance(&mut self, rho: &mut CMatrix, n: usize, start: usize, tol: f64) -> Result<()> {
        match self {
            Stepper::Dense { step, powers, src, dst } => {
                let idx = match powers.iter().position(|(k, _)| *k == n) {
                    Some(i) => i,
                    None => {
                        powers.push((n, matrix_power(step, n)));
                        powers.len() - 1
                    }
                };
                src.as_mut_slice().copy_from_slice(rho.as_slice());
                dst.gemv(ONE, &powers[idx].1, src, Complex64::new(0.0, 0.0));
                rho.as_mut_slice().copy_from_slice(dst.as_slice());
                Ok(())
            }
            Stepper::Direct { model, dt } => {
                for k in start + 1..=start + n {
                    *rho = rk4_step(model, rho, *dt);
                    trace_check(rho, k as f64 * *dt, tol)?;
                }
                Ok(())
            }
        }
    }
}

fn trace_check(rho: &CMatrix, t: f64, tol: f64) -> Result<()> {
    let drift = (trace(rho) - ONE).norm();
    if drift <= tol {
        Ok(())
    } else {
        Err(Error::EvolutionFailure {
            time: t,
            source: Box::new(Error::InvalidState {
                what: "trace error",
                value: drift,
            }),
        })
    }
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("must be > 0, got {dt}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::param("t_final", format!("must be ≥ 0, got {t_final}")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::param(
            "dt",
            format!("t_final = {t_final} is not an integer multiple of dt = {dt}"),
        ));
    }
    Ok(n as usize)
}

/// Fixed-step RK4 integration. Every emitted state is audited; trace drift beyond
/// 1e-7 aborts the run instead of being renormalized away.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    t_final: f64,
    dt: f64,
    options: &EvolveOptions,
) -> Result<TimeSeries> {
    model.check_state(rho0)?;
    let steps = step_count(t_final, dt)?;
    let step_scale = dt * model.spectral_scale();
    if step_scale > MAX_STEP_SCALE {
        let msg = format!("dt × spectral scale = {step_scale:.3} exceeds {MAX_STEP_SCALE}");
        if options.strict_step_check {
            return Err(Error::StepTooCoarse(msg));
        }
        warn!("{msg}");
    }
    let every = options.sample_every.max(1);
    let tol = StateTolerance::EVOLVED;
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut rho = rho0.matrix().clone();
    let mut stepper = Stepper::new(model, dt);
    let mut k = 0;
    while k < steps {
        let n = every.min(steps - k);
        stepper.advance(&mut rho, n, k, tol.trace)?;
        k += n;
        let t = k as f64 * dt;
        trace_check(&rho, t, tol.trace)?;
        StateAudit::of(&rho)
            .check(&tol)
            .map_err(|e| Error::EvolutionFailure {
                time: t,
                source: Box::new(e),
            })?;
        times.push(t);
        states.push(DensityMatrix::new_unchecked(model.space.clone(), rho.clone()));
    }
    let convergence_error = if options.convergence_check && steps > 0 {
        let mut fine = rho0.matrix().clone();
        Stepper::new(model, 0.5 * dt).advance(&mut fine, 2 * steps, 0, f64::INFINITY)?;
        let err = max_abs(&(&fine - &rho));
        if !(err < CONVERGENCE_TOL) {
            return Err(Error::StepTooCoarse(format!(
                "step-halving error estimate {err:e} exceeds {CONVERGENCE_TOL:e}"
            )));
        }
        Some(err)
    } else {
        None
    };
    Ok(TimeSeries {
        times,
        states,
        convergence_error,
        step_scale,
    })
}

/// Unique stationary state from the null vector of the vectorized generator.
pub fn steady_state(model: &LindbladModel) -> Result<DensityMatrix> {
    let n = model.space.total_dim();
    let s = model.superoperator();
    let svd = SVD::new(s, false, true);
    let sv = &svd.singular_values;
    let largest = sv[0];
    let m = sv.len();
    let smallest = sv[m - 1];
    let second = if m > 1 { sv[m - 2] } else { largest };
    if second <= NULL_SPACE_GAP * largest {
        let dimension = sv.iter().filter(|&&x| x <= NULL_SPACE_GAP * largest).count();
        return Err(Error::DegenerateNullSpace { dimension });
    }
    log::debug!("steady state: smallest singular value {smallest:e}, gap {second:e}");
    let v_t = svd.v_t.expect("requested right singular vectors");
    let null: DVector<Complex64> = v_t.row(m - 1).adjoint();
    let mut rho = CMatrix::from_column_slice(n, n, null.as_slice());
    rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = trace(&rho);
    if tr.norm() < 1e-300 {
        return Err(Error::NonConvergence { residual: f64::NAN });
    }
    rho /= tr;
    let residual = max_abs(&model.apply(&rho));
    if !(residual < STEADY_RESIDUAL_TOL) {
        return Err(Error::NonConvergence { residual });
    }
    DensityMatrix::new(model.space.clone(), rho).map_err(|_| Error::NonConvergence { residual })
}

/// `Tr(H D_tag[ρ])`; positive when energy flows from that bath into the system.
pub fn heat_current(model: &LindbladModel, rho: &DensityMatrix, tag: &str) -> Result<f64> {
    model.check_state(rho)?;
    let d = model.dissipator(rho.matrix(), tag)?;
    Ok(trace(&(model.hamiltonian.matrix() * d)).re)
}

/// Expected number of jumps per unit time on channels with `tag`.
pub fn jump_rate(model: &LindbladModel, rho: &DensityMatrix, tag: &str) -> Result<f64> {
    model.check_state(rho)?;
    let mut acc = 0.0;
    for c in model.channels_tagged(tag)? {
        let l = c.operator.matrix();
        acc += c.rate * trace(&(l.adjoint() * l * rho.matrix())).re;
    }
    Ok(acc)
}

/// `Σ_tag −Q̇_tag / T_tag`. Zero-temperature baths contribute ±∞ unless their
/// current vanishes (|Q̇| ≤ `zero_tol`); infinite-temperature baths contribute 0.
pub fn entropy_production(
    model: &LindbladModel,
    rho: &DensityMatrix,
    baths: &[(&str, Temperature)],
    zero_tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (tag, t) in baths {
        let q = heat_current(model, rho, tag)?;
        total += match t {
            Temperature::Finite(t) => -q / t,
            Temperature::Infinite => 0.0,
            Temperature::Zero if q.abs() <= zero_tol => 0.0,
            Temperature::Zero if q < 0.0 => f64::INFINITY,
            Temperature::Zero => f64::NEG_INFINITY,
        };
    }
    Ok(total)
}
