//! Backward stochastic Lagrangian flow and its expectation reconstruction.
//!
//! For viscosity ν > 0 the flow solves dX = u(s, X) ds + √(2ν) dW backwards
//! from X(t) = x; here it is integrated in the reversed time variable by
//! Euler-Maruyama with sign-flipped drift, which reproduces the law of the
//! terminal position X_{t,0}. For ν = 0 the characteristics are integrated
//! by a midpoint (RK2) rule with no noise.
//!
//! Every (point, sample) pair owns a counter-keyed noise stream, so any
//! parallel partition of the work reproduces the serial result bit-exactly.

use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{biot_savart, ScalarField};
use crate::grid::GridSpec;
use crate::solver::Trajectory;

/// How velocities and data are evaluated off-grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Bilinear on the native grid (default).
    Bilinear,
    /// Zero-pad the spectrum by `factor`, then bilinear on the refined grid.
    SpectralUpsampled { factor: usize },
}

impl Default for Interpolation {
    fn default() -> Self {
        Interpolation::Bilinear
    }
}

/// Where the flow starts.
#[derive(Debug, Clone, Serialize)]
pub enum StartPoints {
    /// The full m×m lattice (i/m, j/m).
    Grid { m: usize },
    Points(Vec<[f64; 2]>),
}

impl StartPoints {
    fn resolve(&self) -> Result<Vec<[f64; 2]>> {
        match self {
            StartPoints::Grid { m } => {
                if *m == 0 {
                    return Err(Error::Config("start grid must be nonempty".into()));
                }
                let mut pts = Vec::with_capacity(m * m);
                for i in 0..*m {
                    for j in 0..*m {
                        pts.push([i as f64 / *m as f64, j as f64 / *m as f64]);
                    }
                }
                Ok(pts)
            }
            StartPoints::Points(pts) => {
                if pts.is_empty() {
                    return Err(Error::Config("start point list must be nonempty".into()));
                }
                if !pts.iter().all(|p| p[0].is_finite() && p[1].is_finite()) {
                    return Err(Error::Config("start points must be finite".into()));
                }
                Ok(pts.clone())
            }
        }
    }
}

/// Monte Carlo configuration for the flow.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleConfig {
    /// Samples per start point, M ≥ 1.
    pub samples: usize,
    pub sde_dt: f64,
    pub seed: u64,
    pub interpolation: Interpolation,
    pub start_points: StartPoints,
}

impl EnsembleConfig {
    pub fn new(samples: usize, sde_dt: f64, seed: u64, start_points: StartPoints) -> Result<Self> {
        if samples == 0 {
            return Err(Error::Config("need at least one sample per point".into()));
        }
        if !(sde_dt > 0.0) || !sde_dt.is_finite() {
            return Err(Error::Config(format!(
                "sde_dt must be positive, got {sde_dt}"
            )));
        }
        Ok(EnsembleConfig {
            samples,
            sde_dt,
            seed,
            interpolation: Interpolation::default(),
            start_points,
        })
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }
}

/// Terminal positions X_{t,0}(x; j) for every start point x and sample j,
/// wrapped to [0,1)².
#[derive(Debug, Clone)]
pub struct FlowEnsemble {
    pub t: f64,
    pub nu: f64,
    pub samples: usize,
    pub seed: u64,
    pub interpolation: Interpolation,
    start_points: Vec<[f64; 2]>,
    /// index p * samples + j
    positions: Vec<[f64; 2]>,
}

/// Per-start-point summary statistics (displacement-centered, so the torus
/// seam does not distort them).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnsembleSummaryRow {
    pub x1: f64,
    pub x2: f64,
    pub mean_x1: f64,
    pub mean_x2: f64,
    /// Sum of the two displacement-component variances.
    pub var: f64,
    pub samples: usize,
}

impl FlowEnsemble {
    pub fn start_points(&self) -> &[[f64; 2]] {
        &self.start_points
    }

    pub fn positions(&self, point: usize) -> &[[f64; 2]] {
        &self.positions[point * self.samples..(point + 1) * self.samples]
    }

    pub fn all_positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn summary(&self) -> Vec<EnsembleSummaryRow> {
        self.start_points
            .iter()
            .enumerate()
            .map(|(p, &x)| {
                let m = self.samples;
                let mut mean = [0.0f64; 2];
                let mut sq = [0.0f64; 2];
                for pos in self.positions(p) {
                    for c in 0..2 {
                        let d = GridSpec::wrap_diff(pos[c] - x[c]);
                        mean[c] += d;
                        sq[c] += d * d;
                    }
                }
                let mf = m as f64;
                let var = if m > 1 {
                    (sq[0] - mean[0] * mean[0] / mf + sq[1] - mean[1] * mean[1] / mf)
                        / (mf - 1.0)
                } else {
                    0.0
                };
                EnsembleSummaryRow {
                    x1: x[0],
                    x2: x[1],
                    mean_x1: GridSpec::wrap_coord(x[0] + mean[0] / mf),
                    mean_x2: GridSpec::wrap_coord(x[1] + mean[1] / mf),
                    var,
                    samples: m,
                }
            })
            .collect()
    }
}

/// Velocity snapshots reconstructed from a trajectory, interpolated linearly
/// in time and bilinearly (optionally on a spectrally refined grid) in space.
struct VelocitySampler {
    times: Vec<f64>,
    components: Vec<(ScalarField, ScalarField)>,
    n: usize,
}

impl VelocitySampler {
    fn build(traj: &Trajectory, t: f64, interpolation: Interpolation) -> Result<Self> {
        let last = traj.snapshots.last().unwrap().0;
        if t > last + 1e-12 || t < 0.0 {
            return Err(Error::InsufficientData(format!(
                "trajectory covers [0, {last}], asked for t = {t}"
            )));
        }
        let mut times = Vec::new();
        let mut components = Vec::new();
        for (s, field) in &traj.snapshots {
            let u = biot_savart(field.spectrum())?;
            let (u1, u2) = match interpolation {
                Interpolation::Bilinear => (u.u1().clone(), u.u2().clone()),
                Interpolation::SpectralUpsampled { factor } => {
                    if factor < 2 {
                        return Err(Error::Config(
                            "spectral upsampling factor must be at least 2".into(),
                        ));
                    }
                    let fine = factor * field.n();
                    (
                        ScalarField::from_spectrum(u.u1().spectrum().resample(fine)?)?,
                        ScalarField::from_spectrum(u.u2().spectrum().resample(fine)?)?,
                    )
                }
            };
            times.push(*s);
            components.push((u1, u2));
        }
        let n = components[0].0.n();
        Ok(VelocitySampler {
            times,
            components,
            n,
        })
    }

    fn max_snapshot_gap(&self, t: f64) -> f64 {
        let mut gap = 0.0f64;
        for w in self.times.windows(2) {
            if w[0] < t {
                gap = gap.max(w[1].min(t) - w[0]);
            }
        }
        gap
    }

    #[inline]
    fn sample_component(values: &[f64], n: usize, x1: f64, x2: f64) -> f64 {
        let nf = n as f64;
        let p = GridSpec::wrap_coord(x1) * nf;
        let q = GridSpec::wrap_coord(x2) * nf;
        let i0 = (p.floor() as usize) % n;
        let j0 = (q.floor() as usize) % n;
        let i1 = (i0 + 1) % n;
        let j1 = (j0 + 1) % n;
        let s = p - p.floor();
        let u = q - q.floor();
        values[i0 * n + j0] * (1.0 - s) * (1.0 - u)
            + values[i0 * n + j1] * (1.0 - s) * u
            + values[i1 * n + j0] * s * (1.0 - u)
            + values[i1 * n + j1] * s * u
    }

    /// Time bracket (lo, hi, weight) around s; linear interpolation inside.
    fn bracket(&self, s: f64) -> (usize, usize, f64) {
        let times = &self.times;
        let idx = match times.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(i) => return (i, i, 0.0),
            Err(i) => i,
        };
        let hi = idx.min(times.len() - 1).max(1);
        let lo = hi - 1;
        let span = times[hi] - times[lo];
        let w = if span > 0.0 {
            ((s - times[lo]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (lo, hi, w)
    }

    /// Both velocity components at one point, the corner indices and weights
    /// computed once and reused across the four involved value arrays.
    #[inline]
    fn velocity_bracketed(&self, bracket: (usize, usize, f64), x: [f64; 2]) -> [f64; 2] {
        let (lo, hi, w) = bracket;
        let n = self.n;
        let nf = n as f64;
        let p = GridSpec::wrap_coord(x[0]) * nf;
        let q = GridSpec::wrap_coord(x[1]) * nf;
        let pf = p.floor();
        let qf = q.floor();
        let i0 = (pf as usize) % n;
        let j0 = (qf as usize) % n;
        let i1 = (i0 + 1) % n;
        let j1 = (j0 + 1) % n;
        let s = p - pf;
        let u = q - qf;
        let w00 = (1.0 - s) * (1.0 - u);
        let w01 = (1.0 - s) * u;
        let w10 = s * (1.0 - u);
        let w11 = s * u;
        let c00 = i0 * n + j0;
        let c01 = i0 * n + j1;
        let c10 = i1 * n + j0;
        let c11 = i1 * n + j1;
        let fetch = |values: &[f64]| -> f64 {
            values[c00] * w00 + values[c01] * w01 + values[c10] * w10 + values[c11] * w11
        };
        let (a1, a2) = &self.components[lo];
        let mut v = [fetch(a1.values()), fetch(a2.values())];
        if w > 0.0 {
            let (b1, b2) = &self.components[hi];
            v[0] = (1.0 - w) * v[0] + w * fetch(b1.values());
            v[1] = (1.0 - w) * v[1] + w * fetch(b2.values());
        }
        v
    }

}

/// Time brackets for every step (and midpoint) of the backward integration,
/// hoisted out of the per-sample loop: step k always sits at s = t − k·dt.
struct StepSchedule {
    dt: f64,
    full: Vec<(usize, usize, f64)>,
    mid: Vec<(usize, usize, f64)>,
}

impl StepSchedule {
    fn build(sampler: &VelocitySampler, t: f64, n_steps: usize) -> Self {
        let dt = t / n_steps as f64;
        let full = (0..n_steps)
            .map(|k| sampler.bracket(t - k as f64 * dt))
            .collect();
        let mid = (0..n_steps)
            .map(|k| sampler.bracket(t - (k as f64 + 0.5) * dt))
            .collect();
        StepSchedule { dt, full, mid }
    }
}

fn noise_rng(seed: u64, point: u64, sample: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&sample.to_le_bytes());
    key[24..32].copy_from_slice(&0xf10c_ca11_u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Integrate one trajectory from (t, x) down to s = 0; `rng` is consumed
/// step by step, so the noise of step k is a pure function of
/// (seed, point, sample, k).
fn integrate_one(
    sampler: &VelocitySampler,
    schedule: &StepSchedule,
    x: [f64; 2],
    nu: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> [f64; 2] {
    let dt = schedule.dt;
    let mut pos = x;
    match rng {
        Some(rng) if nu > 0.0 => {
            let sigma = (2.0 * nu * dt).sqrt();
            for bracket in &schedule.full {
                let u = sampler.velocity_bracketed(*bracket, pos);
                let xi1: f64 = StandardNormal.sample(rng);
                let xi2: f64 = StandardNormal.sample(rng);
                pos[0] = GridSpec::wrap_coord(pos[0] - u[0] * dt + sigma * xi1);
                pos[1] = GridSpec::wrap_coord(pos[1] - u[1] * dt + sigma * xi2);
            }
        }
        _ => {
            for (full, mid_bracket) in schedule.full.iter().zip(&schedule.mid) {
                let k1 = sampler.velocity_bracketed(*full, pos);
                let mid = [
                    GridSpec::wrap_coord(pos[0] - 0.5 * dt * k1[0]),
                    GridSpec::wrap_coord(pos[1] - 0.5 * dt * k1[1]),
                ];
                let k2 = sampler.velocity_bracketed(*mid_bracket, mid);
                pos[0] = GridSpec::wrap_coord(pos[0] - dt * k2[0]);
                pos[1] = GridSpec::wrap_coord(pos[1] - dt * k2[1]);
            }
        }
    }
    pos
}

fn sde_steps(t: f64, sde_dt: f64) -> usize {
    ((t / sde_dt).ceil() as usize).max(1)
}

/// The SDE step must resolve the velocity snapshots: no coarser than the
/// snapshot spacing, and no more than a tenth as fine (a wider gap means the
/// drift would be linearly interpolated across many steps of dynamics).
fn check_time_resolution(sampler: &VelocitySampler, t: f64, sde_dt: f64) -> Result<()> {
    let gap = sampler.max_snapshot_gap(t);
    if gap > 10.0 * sde_dt + 1e-15 {
        return Err(Error::InsufficientData(format!(
            "snapshot gap {gap:.3e} exceeds 10·sde_dt = {:.3e}; record more snapshots or enlarge sde_dt",
            10.0 * sde_dt
        )));
    }
    if sde_dt > gap + 1e-15 && gap > 0.0 {
        return Err(Error::Config(format!(
            "sde_dt = {sde_dt:.3e} exceeds the snapshot spacing {gap:.3e}"
        )));
    }
    Ok(())
}

/// Backward flow X_{t,0} of the trajectory's velocity field: Euler-Maruyama
/// in reversed time for ν > 0, midpoint characteristics for ν = 0.
pub fn backward_flow(traj: &Trajectory, t: f64, config: &EnsembleConfig) -> Result<FlowEnsemble> {
    let nu = traj.config.nu;
    let sampler = VelocitySampler::build(traj, t, config.interpolation)?;
    check_time_resolution(&sampler, t, config.sde_dt)?;
    let start_points = config.start_points.resolve()?;
    let n_steps = sde_steps(t, config.sde_dt);
    let schedule = StepSchedule::build(&sampler, t, n_steps);
    let m = config.samples;
    let seed = config.seed;
    let positions: Vec<[f64; 2]> = start_points
        .par_iter()
        .enumerate()
        .flat_map_iter(|(p, &x)| {
            let sampler = &sampler;
            let schedule = &schedule;
            (0..m).map(move |j| {
                if nu > 0.0 {
                    let mut rng = noise_rng(seed, p as u64, j as u64);
                    integrate_one(sampler, schedule, x, nu, Some(&mut rng))
                } else {
                    integrate_one(sampler, schedule, x, nu, None)
                }
            })
        })
        .collect();
    Ok(FlowEnsemble {
        t,
        nu,
        samples: m,
        seed,
        interpolation: config.interpolation,
        start_points,
        positions,
    })
}

/// Expectation reconstruction ω̃(t, x) = (1/M) Σ_j ω₀(X_{t,0}(x; j)) with its
/// Monte Carlo standard error.
#[derive(Debug, Clone)]
pub struct ExpectationField {
    pub field: ScalarField,
    /// Per-point standard error √(Var/M); `None` when M < 2 (flagged).
    pub std_error: Option<ScalarField>,
    pub mean_std_error: f64,
}

fn datum_values(omega0: &ScalarField, interpolation: Interpolation) -> Result<(Vec<f64>, usize)> {
    match interpolation {
        Interpolation::Bilinear => Ok((omega0.values().to_vec(), omega0.n())),
        Interpolation::SpectralUpsampled { factor } => {
            let fine = factor * omega0.n();
            let f = ScalarField::from_spectrum(omega0.spectrum().resample(fine)?)?;
            Ok((f.values().to_vec(), fine))
        }
    }
}

/// Reconstruct the advected-diffused field from a materialized ensemble.
/// Requires the ensemble to start on the full grid of `omega0`.
pub fn feynman_kac(omega0: &ScalarField, ens: &FlowEnsemble) -> Result<ExpectationField> {
    let n = omega0.n();
    if ens.start_points.len() != n * n {
        return Err(Error::Precondition(format!(
            "ensemble must start on the full {n}×{n} grid, has {} points",
            ens.start_points.len()
        )));
    }
    let (datum, dn) = datum_values(omega0, ens.interpolation)?;
    let m = ens.samples;
    let stats: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for pos in ens.positions(p) {
                let v = VelocitySampler::sample_component(&datum, dn, pos[0], pos[1]);
                sum += v;
                sumsq += v * v;
            }
            (sum, sumsq)
        })
        .collect();
    assemble_expectation(omega0.grid(), &stats, m)
}

/// Streaming fusion of [`backward_flow`] and [`feynman_kac`]: integrates each
/// (point, sample) trajectory and folds it into Monte Carlo moments without
/// materializing positions. Bit-identical to the two-stage path because the
/// noise keying and the per-point accumulation order are the same.
pub fn feynman_kac_streamed(
    omega0: &ScalarField,
    traj: &Trajectory,
    t: f64,
    config: &EnsembleConfig,
) -> Result<ExpectationField> {
    let n = omega0.n();
    match config.start_points {
        StartPoints::Grid { m } if m == n => {}
        _ => {
            return Err(Error::Precondition(format!(
                "streamed reconstruction requires StartPoints::Grid {{ m: {n} }}"
            )))
        }
    }
    let nu = traj.config.nu;
    let sampler = VelocitySampler::build(traj, t, config.interpolation)?;
    check_time_resolution(&sampler, t, config.sde_dt)?;
    let (datum, dn) = datum_values(omega0, config.interpolation)?;
    let n_steps = sde_steps(t, config.sde_dt);
    let schedule = StepSchedule::build(&sampler, t, n_steps);
    let m = config.samples;
    let seed = config.seed;
    let grid = omega0.grid();
    let stats: Vec<(f64, f64)> = (0..n * n)
        .into_par_iter()
        .map(|p| {
            let i = p / n;
            let j = p % n;
            let x = grid.node(i, j);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for jj in 0..m {
                let pos = if nu > 0.0 {
                    let mut rng = noise_rng(seed, p as u64, jj as u64);
                    integrate_one(&sampler, &schedule, x, nu, Some(&mut rng))
                } else {
                    integrate_one(&sampler, &schedule, x, nu, None)
                };
                let v = VelocitySampler::sample_component(&datum, dn, pos[0], pos[1]);
                sum += v;
                sumsq += v * v;
            }
            (sum, sumsq)
        })
        .collect();
    assemble_expectation(grid, &stats, m)
}

fn assemble_expectation(
    grid: GridSpec,
    stats: &[(f64, f64)],
    m: usize,
) -> Result<ExpectationField> {
    let mf = m as f64;
    let means: Vec<f64> = stats.iter().map(|(s, _)| s / mf).collect();
    let field = ScalarField::from_values(grid, means)?;
    if m < 2 {
        return Ok(ExpectationField {
            field,
            std_error: None,
            mean_std_error: 0.0,
        });
    }
    let ses: Vec<f64> = stats
        .iter()
        .map(|(s, sq)| {
            let var = ((sq - s * s / mf) / (mf - 1.0)).max(0.0);
            (var / mf).sqrt()
        })
        .collect();
    let mean_se = ses.iter().sum::<f64>() / ses.len() as f64;
    Ok(ExpectationField {
        field,
        std_error: Some(ScalarField::from_values(grid, ses)?),
        mean_std_error: mean_se,
    })
}

/// Mean squared geodesic distance between a stochastic ensemble and the
/// deterministic flow started from the same points:
/// (1/P) Σ_x (1/M) Σ_j d(X^ν(x;j), X⁰(x))².
pub fn flow_l2_distance(ens_nu: &FlowEnsemble, flow_zero: &FlowEnsemble) -> Result<f64> {
    if flow_zero.nu != 0.0 {
        return Err(Error::Mismatch(
            "second ensemble must be the deterministic (nu = 0) flow".into(),
        ));
    }
    if (ens_nu.t - flow_zero.t).abs() > 1e-12 * ens_nu.t.max(1.0) {
        return Err(Error::Mismatch(format!(
            "ensembles were taken at different times ({} vs {})",
            ens_nu.t, flow_zero.t
        )));
    }
    if ens_nu.start_points.len() != flow_zero.start_points.len()
        || ens_nu
            .start_points
            .iter()
            .zip(&flow_zero.start_points)
            .any(|(a, b)| a != b)
    {
        return Err(Error::Mismatch("start points differ".into()));
    }
    let p = ens_nu.start_points.len() as f64;
    let m = ens_nu.samples as f64;
    let mut total = 0.0;
    for (pi, _) in ens_nu.start_points.iter().enumerate() {
        let reference = flow_zero.positions(pi)[0];
        let mut acc = 0.0;
        for pos in ens_nu.positions(pi) {
            let d = GridSpec::geodesic_distance(*pos, reference);
            acc += d * d;
        }
        total += acc / m;
    }
    Ok(total / p)
}
