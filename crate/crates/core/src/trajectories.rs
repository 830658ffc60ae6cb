//! Monte Carlo wavefunction unraveling and tick statistics.
//!
//! Between jumps the unnormalized state evolves under `exp(−i H_eff t)`, computed
//! exactly for a base step `dt`. A jump fires once the squared norm falls below a
//! uniform threshold drawn after the previous jump; the channel is then picked
//! with probability proportional to `γ_c ‖L_c ψ‖²`. Quiet stretches are crossed
//! with doubled steps, each accepted only if its jump probability stays below
//! [`MAX_JUMP_PROBABILITY`], and a threshold crossing is always re-resolved down
//! to the base step, so jump times land on the `dt` grid.

use nalgebra::DMatrix;
use nalgebra_sparse::convert::serial::convert_dense_csr;
use nalgebra_sparse::ops::serial::spmm_csr_dense;
use nalgebra_sparse::ops::Op;
use nalgebra_sparse::CsrMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::LindbladModel;
use crate::error::{Error, Result};
use crate::operator::{eigh_matrix, CMatrix, CVector, DensityMatrix};

/// Upper bound on the conditional jump probability of any accepted step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.05;
/// Coarse steps go up to `dt · 2^MAX_LEVEL`.
const MAX_LEVEL: usize = 16;
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
/// Trajectories processed per parallel batch before reduction.
const BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    /// Index into the model's channel list.
    pub channel: usize,
    pub tag: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Root seed of the ensemble.
    pub seed: u64,
    /// Stream index (trajectory index) within the root seed.
    pub stream: u64,
    pub events: Vec<JumpEvent>,
    /// Normalized state at `t_final`.
    pub final_state: CVector,
    pub t_final: f64,
}

impl TrajectoryRecord {
    pub fn times_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = f64> + 'a {
        self.events.iter().filter(move |e| e.tag == tag).map(|e| e.time)
    }
}

/// RNG for one trajectory: the stream depends only on `(seed, index)`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn steps_for(time: f64, dt: f64, name: &'static str) -> Result<u64> {
    if !(time >= 0.0 && time.is_finite()) {
        return Err(Error::param(name, format!("must be ≥ 0, got {time}")));
    }
    let n = (time / dt).round();
    if (n * dt - time).abs() > 1e-9 * time.max(1.0) {
        return Err(Error::param(
            name,
            format!("{time} is not an integer multiple of dt = {dt}"),
        ));
    }
    Ok(n as u64)
}

/// No-jump propagator, stored sparse when at most a quarter of it is nonzero.
///
/// Energy-conserving models make `exp(−i H_eff t)` block diagonal with exact
/// zeros elsewhere, and skipping those zeros leaves every sum unchanged.
#[derive(Debug, Clone)]
enum Propagator {
    Dense(CMatrix),
    Sparse(CsrMatrix<Complex64>),
}

impl Propagator {
    fn new(m: CMatrix) -> Self {
        let nonzero = m.iter().filter(|z| **z != ZERO).count();
        if 4 * nonzero <= m.len() {
            Propagator::Sparse(convert_dense_csr(&m))
        } else {
            Propagator::Dense(m)
        }
    }

    fn apply(&self, psi: &CVector, out: &mut CVector) {
        match self {
            Propagator::Dense(m) => out.gemv(ONE, m, psi, ZERO),
            Propagator::Sparse(m) => spmm_csr_dense(ZERO, out, ONE, Op::NoOp(m), Op::NoOp(psi)),
        }
    }
}

/// Precomputed no-jump propagators and scaled jump operators for one model.
#[derive(Debug, Clone)]
pub struct Unraveler<'a> {
    model: &'a LindbladModel,
    dt: f64,
    propagators: Vec<Propagator>,
    /// `(channel index, √γ L)` for channels with nonzero rate.
    jumps: Vec<(usize, CMatrix)>,
}

impl<'a> Unraveler<'a> {
    pub fn new(model: &'a LindbladModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {dt}")));
        }
        let base = (model.effective_hamiltonian() * Complex64::new(0.0, -dt)).exp();
        let mut dense = vec![base];
        for k in 1..=MAX_LEVEL {
            let p = &dense[k - 1];
            dense.push(p * p);
        }
        let propagators = dense.into_iter().map(Propagator::new).collect();
        let jumps = model
            .channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.rate() > 0.0)
            .map(|(i, c)| (i, c.operator().matrix() * Complex64::new(c.rate().sqrt(), 0.0)))
            .collect();
        Ok(Self {
            model,
            dt,
            propagators,
            jumps,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One trajectory to `t_final`, also returning the normalized state at each
    /// of `sample_times` (which must lie on the `dt` grid, ascending).
    pub fn run<R: Rng>(
        &self,
        psi0: &CVector,
        t_final: f64,
        sample_times: &[f64],
        rng: &mut R,
    ) -> Result<(Vec<JumpEvent>, CVector, Vec<CVector>)> {
        let dim = self.model.space().total_dim();
        if psi0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: psi0.len(),
            });
        }
        let norm0 = psi0.norm();
        if (norm0 - 1.0).abs() > 1e-10 {
            return Err(Error::param("psi0", format!("state must be normalized, norm = {norm0}")));
        }
        if !(t_final > 0.0) {
            return Err(Error::param("t_final", format!("must be > 0, got {t_final}")));
        }
        let n_final = steps_for(t_final, self.dt, "t_final")?;
        let mut stops = Vec::with_capacity(sample_times.len());
        for &t in sample_times {
            let s = steps_for(t, self.dt, "sample time")?;
            if s > n_final || stops.last().is_some_and(|&last| s < last) {
                return Err(Error::param("sample time", "must be ascending and ≤ t_final"));
            }
            stops.push(s);
        }

        let mut psi = psi0.clone();
        let mut buffer = CVector::zeros(dim);
        let mut threshold = 1.0 - rng.random::<f64>();
        let mut events = Vec::new();
        let mut samples = Vec::with_capacity(stops.len());
        let mut next_sample = 0;
        let mut level = 0usize;
        let mut n: u64 = 0;
        while next_sample < stops.len() && stops[next_sample] == 0 {
            samples.push(psi.clone());
            next_sample += 1;
        }
        while n < n_final {
            let stop = stops.get(next_sample).copied().unwrap_or(n_final);
            let mut k = level;
            while n + (1u64 << k) > stop {
                k -= 1;
            }
            let before = psi.norm_squared();
            if !(before > 1e-300) {
                return Err(Error::NormUnderflow {
                    time: n as f64 * self.dt,
                });
            }
            let (after, p) = loop {
                self.propagators[k].apply(&psi, &mut buffer);
                let after = buffer.norm_squared();
                let p = 1.0 - after / before;
                if p >= MAX_JUMP_PROBABILITY || after < threshold {
                    if k == 0 {
                        if p >= MAX_JUMP_PROBABILITY {
                            return Err(Error::StepTooCoarse(format!(
                                "jump probability {p:.4} per step at t = {} (dt = {})",
                                n as f64 * self.dt,
                                self.dt
                            )));
                        }
                        break (after, p);
                    }
                    k -= 1;
                    continue;
                }
                break (after, p);
            };
            n += 1u64 << k;
            std::mem::swap(&mut psi, &mut buffer);
            if after < threshold {
                let time = n as f64 * self.dt;
                let (channel, jumped) = self.select_jump(&psi, rng, time)?;
                psi = jumped;
                events.push(JumpEvent {
                    time,
                    channel,
                    tag: self.model.channels()[channel].tag().to_string(),
                });
                threshold = 1.0 - rng.random::<f64>();
                level = 0;
            } else if p < 0.5 * MAX_JUMP_PROBABILITY && k == level {
                level = (level + 1).min(MAX_LEVEL);
            } else {
                level = k;
            }
            while next_sample < stops.len() && stops[next_sample] == n {
                samples.push(psi.unscale(psi.norm()));
                next_sample += 1;
            }
        }
        let final_state = psi.unscale(psi.norm());
        Ok((events, final_state, samples))
    }

    fn select_jump<R: Rng>(&self, psi: &CVector, rng: &mut R, time: f64) -> Result<(usize, CVector)> {
        let candidates: Vec<(usize, CVector, f64)> = self
            .jumps
            .iter()
            .map(|(i, op)| {
                let v = op * psi;
                let w = v.norm_squared();
                (*i, v, w)
            })
            .collect();
        let total: f64 = candidates.iter().map(|c| c.2).sum();
        if !(total > 0.0) {
            return Err(Error::NormUnderflow { time });
        }
        let mut u = rng.random::<f64>() * total;
        let last = candidates.iter().rposition(|c| c.2 > 0.0).unwrap_or(0);
        for (pos, (i, v, w)) in candidates.into_iter().enumerate() {
            if u < w || pos == last {
                let norm = v.norm();
                return Ok((i, v.unscale(norm)));
            }
            u -= w;
        }
        unreachable!("last positive-weight channel always selected")
    }
}

/// Single trajectory on stream 0 of `seed`.
pub fn unravel_trajectory(
    model: &LindbladModel,
    psi0: &CVector,
    t_final: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let unraveler = Unraveler::new(model, dt)?;
    let mut rng = trajectory_rng(seed, 0);
    let (events, final_state, _) = unraveler.run(psi0, t_final, &[], &mut rng)?;
    Ok(TrajectoryRecord {
        seed,
        stream: 0,
        events,
        final_state,
        t_final,
    })
}

/// Initial condition for an ensemble; mixtures are sampled per trajectory.
#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(CVector),
    Mixture(Vec<(f64, CVector)>),
}

impl InitialState {
    /// Spectral decomposition of `rho`, dropping weights below 1e-14.
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let eig = eigh_matrix(rho.matrix());
        let parts: Vec<(f64, CVector)> = eig
            .values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 1e-14)
            .map(|(j, &p)| (p, eig.vectors.column(j).into_owned()))
            .collect();
        if parts.len() == 1 {
            InitialState::Pure(parts[0].1.clone())
        } else {
            InitialState::Mixture(parts)
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> CVector {
        match self {
            InitialState::Pure(psi) => psi.clone(),
            InitialState::Mixture(parts) => {
                let total: f64 = parts.iter().map(|p| p.0).sum();
                let mut u = rng.random::<f64>() * total;
                for (p, psi) in parts {
                    if u < *p {
                        return psi.clone();
                    }
                    u -= p;
                }
                parts.last().expect("nonempty mixture").1.clone()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    pub n_traj: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_final: f64,
    pub sample_times: Vec<f64>,
    /// Keep per-trajectory records (events and final states).
    pub keep_records: bool,
}

/// Ensemble-averaged `|ψ⟩⟨ψ|` with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub records: Vec<TrajectoryRecord>,
    pub sample_times: Vec<f64>,
    pub mean: Vec<CMatrix>,
    /// Standard error of the real and imaginary parts of each entry.
    pub std_error: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    pub n_traj: usize,
}

struct Moments {
    sum: CMatrix,
    sum_sq_re: DMatrix<f64>,
    sum_sq_im: DMatrix<f64>,
}

/// Runs `n_traj` trajectories; per-trajectory streams and in-order reduction make
/// the result independent of thread scheduling.
pub fn run_ensemble(model: &LindbladModel, initial: &InitialState, opts: &EnsembleOptions) -> Result<Ensemble> {
    if opts.n_traj == 0 {
        return Err(Error::param("n_traj", "must be ≥ 1"));
    }
    let unraveler = Unraveler::new(model, opts.dt)?;
    let dim = model.space().total_dim();
    let mut moments: Vec<Moments> = opts
        .sample_times
        .iter()
        .map(|_| Moments {
            sum: CMatrix::zeros(dim, dim),
            sum_sq_re: DMatrix::zeros(dim, dim),
            sum_sq_im: DMatrix::zeros(dim, dim),
        })
        .collect();
    let mut records = Vec::new();
    let mut start = 0usize;
    while start < opts.n_traj {
        let end = (start + BATCH).min(opts.n_traj);
        let batch: Vec<Result<(TrajectoryRecord, Vec<CVector>)>> = (start..end)
            .into_par_iter()
            .map(|index| {
                let mut rng = trajectory_rng(opts.seed, index as u64);
                let psi0 = initial.sample(&mut rng);
                let (events, final_state, samples) =
                    unraveler.run(&psi0, opts.t_final, &opts.sample_times, &mut rng)?;
                Ok((
                    TrajectoryRecord {
                        seed: opts.seed,
                        stream: index as u64,
                        events,
                        final_state,
                        t_final: opts.t_final,
                    },
                    samples,
                ))
            })
            .collect();
        for item in batch {
            let (record, samples) = item?;
            for (m, psi) in moments.iter_mut().zip(samples.iter()) {
                let outer = psi * psi.adjoint();
                m.sum += &outer;
                m.sum_sq_re += outer.map(|z| z.re * z.re);
                m.sum_sq_im += outer.map(|z| z.im * z.im);
            }
            if opts.keep_records {
                records.push(record);
            }
        }
        start = end;
    }
    let n = opts.n_traj as f64;
    let mut mean = Vec::with_capacity(moments.len());
    let mut std_error = Vec::with_capacity(moments.len());
    for m in moments {
        let mu = m.sum / Complex64::new(n, 0.0);
        let se = |sq: &DMatrix<f64>, part: fn(&Complex64) -> f64| {
            DMatrix::from_fn(dim, dim, |i, j| {
                let x = part(&mu[(i, j)]);
                let var = ((sq[(i, j)] / n - x * x) * n / (n - 1.0).max(1.0)).max(0.0);
                (var / n).sqrt()
            })
        };
        std_error.push((se(&m.sum_sq_re, |z| z.re), se(&m.sum_sq_im, |z| z.im)));
        mean.push(mu);
    }
    Ok(Ensemble {
        records,
        sample_times: opts.sample_times.clone(),
        mean,
        std_error,
        n_traj: opts.n_traj,
    })
}

/// Inter-tick statistics pooled over records.
#[derive(Debug, Clone, PartialEq)]
pub struct TickStatistics {
    pub n_ticks: usize,
    pub n_intervals: usize,
    /// Mean interval between ticks.
    pub t_bar: f64,
    /// Unbiased standard deviation of the interval.
    pub delta_t: f64,
    /// `(t̄/Δt)²`; `None` when the intervals have zero spread.
    pub accuracy: Option<f64>,
    /// Delta-method standard error of `accuracy`.
    pub accuracy_std_error: Option<f64>,
    /// `1/t̄`.
    pub resolution: f64,
}

/// Intervals are formed within each record only, from ticks at or after
/// `transient_cut`.
pub fn tick_statistics(records: &[TrajectoryRecord], tag: &str, transient_cut: f64) -> Result<TickStatistics> {
    let mut intervals: Vec<f64> = Vec::new();
    let mut n_ticks = 0usize;
    let mut seen_tag = false;
    for r in records {
        let mut prev: Option<f64> = None;
        for t in r.times_tagged(tag) {
            seen_tag = true;
            if t < transient_cut {
                continue;
            }
            n_ticks += 1;
            if let Some(p) = prev {
                intervals.push(t - p);
            }
            prev = Some(t);
        }
    }
    if !seen_tag {
        return Err(Error::UnknownTag(tag.to_string()));
    }
    if intervals.len() < 2 {
        return Err(Error::InsufficientEvents(format!(
            "{} interval(s) between `{tag}` events after t = {transient_cut}; need at least 2",
            intervals.len()
        )));
    }
    // sorted summation keeps the result independent of record order
    intervals.sort_by(f64::total_cmp);
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let central = |p: i32| intervals.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / n;
    let var = central(2) * n / (n - 1.0);
    let delta_t = var.sqrt();
    let (accuracy, accuracy_std_error) = if delta_t > 0.0 {
        let acc = mean * mean / var;
        let (m3, m4) = (central(3), central(4));
        let d_mean = 2.0 * mean / var;
        let d_var = -mean * mean / (var * var);
        let v = (d_mean * d_mean * var + d_var * d_var * (m4 - var * var) + 2.0 * d_mean * d_var * m3) / n;
        (Some(acc), Some(v.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    Ok(TickStatistics {
        n_ticks,
        n_intervals: intervals.len(),
        t_bar: mean,
        delta_t,
        accuracy,
        accuracy_std_error,
        resolution: 1.0 / mean,
    })
}
