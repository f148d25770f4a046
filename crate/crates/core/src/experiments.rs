//! Experiment drivers: propagation of the log-order semi-norms along Euler
//! trajectories, the viscosity sweep measuring ‖ω^ν − ω‖ against the
//! logarithmic rate, the stochastic-flow convergence sweep, and the
//! least-squares rate fits they share.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{biot_savart, ScalarField};
use crate::seminorm::{hlog_fourier, wlog_seminorm, SeminormReport};
use crate::solver::{simulate, SolverConfig, Trajectory};
use crate::stochastic::{backward_flow, flow_l2_distance, EnsembleConfig, StartPoints};

/// Error-vs-viscosity models the sweeps are fitted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateModel {
    /// e = C ν^β
    Power,
    /// e = C |log ν|^{-γ}
    LogLog,
}

/// Least-squares fit of a sweep in transformed coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub constant: f64,
    /// β for the power model, γ for the log-log model.
    pub exponent: f64,
    /// max_i |e_i − model(ν_i)| / e_i
    pub max_relative_residual: f64,
    pub sweep: Vec<(f64, f64)>,
}

impl RateFit {
    pub fn predict(&self, nu: f64) -> f64 {
        match self.model {
            RateModel::Power => self.constant * nu.powf(self.exponent),
            RateModel::LogLog => self.constant * nu.ln().abs().powf(-self.exponent),
        }
    }
}

/// Regress log(error) on log ν (power) or log |log ν| (log-log).
pub fn fit_rate(table: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if table.len() < 3 {
        return Err(Error::Domain(format!(
            "rate fit needs at least 3 points, got {}",
            table.len()
        )));
    }
    for &(nu, e) in table {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("viscosities must be positive, got {nu}")));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::Domain(format!(
                "errors must be positive for a log-transformed fit, got {e}"
            )));
        }
        if model == RateModel::LogLog && nu == 1.0 {
            return Err(Error::Domain("|log nu| vanishes at nu = 1".into()));
        }
    }
    let xs: Vec<f64> = table
        .iter()
        .map(|&(nu, _)| match model {
            RateModel::Power => nu.ln(),
            RateModel::LogLog => nu.ln().abs().ln(),
        })
        .collect();
    let ys: Vec<f64> = table.iter().map(|&(_, e)| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain(
            "sweep viscosities are all equal; the slope is undetermined".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let fit = RateFit {
        model,
        constant: intercept.exp(),
        exponent: match model {
            RateModel::Power => slope,
            RateModel::LogLog => -slope,
        },
        max_relative_residual: 0.0,
        sweep: table.to_vec(),
    };
    let residual = table
        .iter()
        .map(|&(nu, e)| ((e - fit.predict(nu)) / e).abs())
        .fold(0.0, f64::max);
    Ok(RateFit {
        max_relative_residual: residual,
        ..fit
    })
}

/// Which semi-norm a propagation run tracks.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case", tag = "space")]
pub enum PropagationSpace {
    /// Kernel quadratic form with sup over scales at exponent θ.
    KernelForm { theta: f64 },
    /// Log-weighted Fourier sum at order p (bounded-vorticity regime).
    LogFourier { p: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationRow {
    pub t: f64,
    pub seminorm: f64,
    /// Structural growth budget at this t: t‖ω₀‖_{L²}‖ω₀‖²_{L⁴} for the
    /// kernel form (squared-seminorm accounting), t^{p/2}‖ω₀‖_{L∞}^{1+p/2}
    /// for the log-Fourier form. The bound reads lhs ≤ base + Ĉ·budget.
    pub growth_budget: f64,
    /// Smallest admissible constant making the growth bound hold at this t
    /// (0 at t = 0 by convention).
    pub c_hat: f64,
    /// Scale attaining the sup, when the kernel form is tracked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_h: Option<f64>,
}

/// Time series of a propagated semi-norm with the empirical constants of the
/// corresponding growth bound.
#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub space: PropagationSpace,
    pub nu: f64,
    pub n: usize,
    pub rows: Vec<PropagationRow>,
    /// sup over t > 0 of c_hat.
    pub c_hat_sup: f64,
    pub initial_l2: f64,
    pub initial_l4: f64,
    pub initial_linf: f64,
    /// Resolution flag of the underlying run.
    pub spectral_tail_fraction: f64,
}

/// Shared solver options for experiment runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunOptions {
    pub t_final: f64,
    pub snapshots: usize,
    pub dt: Option<f64>,
    pub cfl: f64,
}

impl RunOptions {
    pub fn new(t_final: f64, snapshots: usize) -> Self {
        RunOptions {
            t_final,
            snapshots,
            dt: None,
            cfl: 0.5,
        }
    }

    fn solver_config(&self, nu: f64) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(nu, self.t_final)?
            .with_cfl(self.cfl)?
            .with_uniform_snapshots(self.snapshots)?;
        if let Some(dt) = self.dt {
            cfg = cfg.with_dt(dt)?;
        }
        Ok(cfg)
    }

    /// Fix a step size from the initial datum's CFL bound, snapped to divide
    /// the snapshot spacing so every run in a sweep shares one discretization.
    pub fn with_shared_dt(mut self, omega0: &ScalarField) -> Result<Self> {
        let speed = biot_savart(omega0.spectrum())?.max_speed();
        let bound = self.cfl * omega0.grid().spacing() / speed.max(1e-14);
        let spacing = self.t_final / self.snapshots as f64;
        let substeps = (spacing / bound).ceil().max(1.0);
        self.dt = Some(spacing / substeps);
        Ok(self)
    }
}

/// Run the inviscid dynamics and track a semi-norm along it.
///
/// For the kernel form the bound is
///   [ω(t)]² ≤ [ω₀]² + Ĉ · t · ‖ω₀‖_{L²} ‖ω₀‖²_{L⁴},
/// for the log-Fourier form
///   [ω(t)] ≤ [ω₀] + Ĉ · t^{p/2} ‖ω₀‖_{L∞}^{1+p/2},
/// and each row reports the smallest admissible Ĉ at its time.
pub fn propagation_experiment(
    omega0: &ScalarField,
    space: PropagationSpace,
    options: &RunOptions,
) -> Result<PropagationReport> {
    match space {
        PropagationSpace::KernelForm { theta } => {
            if !(theta > 0.0 && theta < 1.0) {
                return Err(Error::Domain(format!(
                    "theta must lie in (0,1), got {theta}"
                )));
            }
        }
        PropagationSpace::LogFourier { p } => {
            if !(p > 1.0) {
                return Err(Error::Domain(format!(
                    "the bounded-vorticity bound needs p > 1, got {p}"
                )));
            }
        }
    }
    let cfg = options.solver_config(0.0)?;
    let traj = simulate(omega0, &cfg)?;
    propagation_report_of(&traj, space)
}

/// Evaluate the propagation series on an existing trajectory.
pub fn propagation_report_of(
    traj: &Trajectory,
    space: PropagationSpace,
) -> Result<PropagationReport> {
    let omega0 = traj.initial();
    let l2 = omega0.l2_norm();
    let l4 = omega0.lp_norm(4.0)?;
    let linf = omega0.max_abs();
    let eval = |f: &ScalarField| -> Result<SeminormReport> {
        match space {
            PropagationSpace::KernelForm { theta } => wlog_seminorm(f, theta),
            PropagationSpace::LogFourier { p } => hlog_fourier(f, p),
        }
    };
    let base = eval(omega0)?;
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    rows.push(PropagationRow {
        t: 0.0,
        seminorm: base.value,
        growth_budget: 0.0,
        c_hat: 0.0,
        argmax_h: base.h,
    });
    for (t, field) in traj.snapshots.iter().skip(1) {
        let report = eval(field)?;
        let (budget, c_hat) = match space {
            PropagationSpace::KernelForm { .. } => {
                let budget = t * l2 * l4 * l4;
                let growth = report.value * report.value - base.value * base.value;
                (budget, growth / budget)
            }
            PropagationSpace::LogFourier { p } => {
                let budget = t.powf(p / 2.0) * linf.powf(1.0 + p / 2.0);
                let growth = (report.value - base.value).max(0.0);
                (budget, growth / budget)
            }
        };
        rows.push(PropagationRow {
            t: *t,
            seminorm: report.value,
            growth_budget: budget,
            c_hat,
            argmax_h: report.h,
        });
    }
    let c_hat_sup = rows[1..].iter().map(|r| r.c_hat).fold(f64::NEG_INFINITY, f64::max);
    Ok(PropagationReport {
        space,
        nu: traj.config.nu,
        n: traj.grid().n(),
        rows,
        c_hat_sup,
        initial_l2: l2,
        initial_l4: l4,
        initial_linf: linf,
        spectral_tail_fraction: traj.spectral_tail_fraction,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViscositySweepRow {
    pub nu: f64,
    /// max over snapshot times of ‖ω^ν(t) − ω(t)‖_{L^q}.
    pub error: f64,
    /// error · |log ν|^{f(α,q)}.
    pub product: f64,
    /// Resolution flag of the viscous run.
    pub tail_fraction: f64,
    pub under_resolved: bool,
    pub steps: usize,
}

/// Viscosity sweep against the logarithmic rate.
#[derive(Debug, Clone, Serialize)]
pub struct InviscidLimitReport {
    pub alpha: f64,
    pub q: f64,
    /// min(α/2, α/q): the exponent the products are weighed with.
    pub rate_exponent: f64,
    pub n: usize,
    pub t_final: f64,
    pub rows: Vec<ViscositySweepRow>,
    /// max over the sweep of error·|log ν|^{rate_exponent}.
    pub c_hat: f64,
    pub errors_nonincreasing: bool,
    pub fit: RateFit,
    pub euler_tail_fraction: f64,
}

/// Sweep ν over `nu_list` (decreasing), integrating the viscous and inviscid
/// dynamics from the same datum with one shared discretization, and measure
/// E(ν) = sup_t ‖ω^ν(t) − ω(t)‖_{L²} against the |log ν|^{-α/2} rate.
pub fn inviscid_limit_experiment(
    omega0: &ScalarField,
    alpha: f64,
    nu_list: &[f64],
    options: &RunOptions,
) -> Result<InviscidLimitReport> {
    lq_rate_experiment(omega0, alpha, 2.0, nu_list, options)
}

/// Same sweep measured in L^q, weighted by |log ν|^{min(α/2, α/q)}.
/// q = ∞ is outside the interpolation argument and is refused.
pub fn lq_rate_experiment(
    omega0: &ScalarField,
    alpha: f64,
    q: f64,
    nu_list: &[f64],
    options: &RunOptions,
) -> Result<InviscidLimitReport> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(q >= 1.0) || q.is_infinite() {
        return Err(Error::Domain(format!(
            "the L^q rate holds for 1 <= q < infinity, got {q}"
        )));
    }
    if nu_list.len() < 2 {
        return Err(Error::Domain("need at least two viscosities".into()));
    }
    for w in nu_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Domain(
                "viscosity list must be strictly decreasing".into(),
            ));
        }
    }
    if !(nu_list[0] < 1.0) || !(nu_list[nu_list.len() - 1] > 0.0) {
        return Err(Error::Domain(
            "viscosities must lie in (0, 1) for the log rate".into(),
        ));
    }
    let rate_exponent = (alpha / 2.0).min(alpha / q);
    let options = options.clone().with_shared_dt(omega0)?;
    let euler = simulate(omega0, &options.solver_config(0.0)?)?;
    let rows: Vec<ViscositySweepRow> = nu_list
        .par_iter()
        .map(|&nu| -> Result<ViscositySweepRow> {
            let traj = simulate(omega0, &options.solver_config(nu)?)?;
            let mut err = 0.0f64;
            for ((t_ns, f_ns), (t_e, f_e)) in traj
                .snapshots
                .iter()
                .skip(1)
                .zip(euler.snapshots.iter().skip(1))
            {
                debug_assert!((t_ns - t_e).abs() < 1e-12);
                err = err.max(f_ns.sub(f_e)?.lp_norm(q)?);
            }
            let product = err * nu.ln().abs().powf(rate_exponent);
            Ok(ViscositySweepRow {
                nu,
                error: err,
                product,
                tail_fraction: traj.spectral_tail_fraction,
                under_resolved: traj.spectral_tail_fraction > 0.01,
                steps: traj.steps_taken,
            })
        })
        .collect::<Result<_>>()?;
    let c_hat = rows.iter().map(|r| r.product).fold(0.0, f64::max);
    let errors_nonincreasing = rows.windows(2).all(|w| w[1].error <= w[0].error * 1.02);
    let table: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error > 0.0)
        .map(|r| (r.nu, r.error))
        .collect();
    let fit = fit_rate(&table, RateModel::LogLog)?;
    Ok(InviscidLimitReport {
        alpha,
        q,
        rate_exponent,
        n: omega0.n(),
        t_final: options.t_final,
        rows,
        c_hat,
        errors_nonincreasing,
        fit,
        euler_tail_fraction: euler.spectral_tail_fraction,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlowSweepRow {
    pub nu: f64,
    pub distance: f64,
    /// Monte Carlo standard error of the distance estimate.
    pub mc_std_error: f64,
}

/// Stochastic-vs-deterministic flow distances over a viscosity sweep with a
/// power-law fit.
#[derive(Debug, Clone, Serialize)]
pub struct FlowConvergenceReport {
    pub t_final: f64,
    pub samples: usize,
    pub rows: Vec<FlowSweepRow>,
    pub fit: RateFit,
    pub distances_decreasing: bool,
    /// Set when the MC error exceeds 25% of the smallest distance; fits are
    /// then unreliable.
    pub inconclusive: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowConvergenceConfig {
    pub nu_list: Vec<f64>,
    pub samples: usize,
    pub sde_dt: f64,
    pub seed: u64,
    /// Start points form an m×m lattice.
    pub start_grid: usize,
}

/// For each ν: integrate the viscous dynamics, draw the backward stochastic
/// flow, and measure its mean squared geodesic distance to the deterministic
/// backward characteristics of the inviscid flow.
pub fn flow_convergence_experiment(
    omega0: &ScalarField,
    cfg: &FlowConvergenceConfig,
    options: &RunOptions,
) -> Result<FlowConvergenceReport> {
    if cfg.nu_list.len() < 3 {
        return Err(Error::Domain(
            "need at least three viscosities to fit a rate".into(),
        ));
    }
    for w in cfg.nu_list.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Domain(
                "viscosity list must be strictly decreasing".into(),
            ));
        }
    }
    let t = options.t_final;
    let options = options.clone().with_shared_dt(omega0)?;
    let start = StartPoints::Grid { m: cfg.start_grid };
    let ens_cfg = EnsembleConfig::new(cfg.samples, cfg.sde_dt, cfg.seed, start.clone())?;
    let det_cfg = EnsembleConfig::new(1, cfg.sde_dt, cfg.seed, start)?;
    let euler = simulate(omega0, &options.solver_config(0.0)?)?;
    let flow_zero = backward_flow(&euler, t, &det_cfg)?;
    let rows: Vec<FlowSweepRow> = cfg
        .nu_list
        .par_iter()
        .map(|&nu| -> Result<FlowSweepRow> {
            let traj = simulate(omega0, &options.solver_config(nu)?)?;
            let ens = backward_flow(&traj, t, &ens_cfg)?;
            let distance = flow_l2_distance(&ens, &flow_zero)?;
            // spread of the per-point sample means of d²
            let m = ens.samples as f64;
            let mut var_sum = 0.0;
            for (p, _) in ens.start_points().iter().enumerate() {
                let reference = flow_zero.positions(p)[0];
                let mut s = 0.0;
                let mut sq = 0.0;
                for pos in ens.positions(p) {
                    let d = crate::grid::GridSpec::geodesic_distance(*pos, reference);
                    let d2 = d * d;
                    s += d2;
                    sq += d2 * d2;
                }
                if ens.samples > 1 {
                    var_sum += ((sq - s * s / m) / (m - 1.0)).max(0.0) / m;
                }
            }
            let pcount = ens.start_points().len() as f64;
            let mc_std_error = (var_sum / (pcount * pcount)).sqrt();
            Ok(FlowSweepRow {
                nu,
                distance,
                mc_std_error,
            })
        })
        .collect::<Result<_>>()?;
    // the sweep is unusable when the smallest distance cannot be told apart
    // from its own Monte Carlo noise
    let inconclusive = rows
        .iter()
        .min_by(|a, b| a.distance.partial_cmp(&b.distance).unwrap())
        .map(|r| r.mc_std_error > 0.25 * r.distance)
        .unwrap_or(true);
    let distances_decreasing = rows.windows(2).all(|w| w[1].distance <= w[0].distance * 1.02);
    let table: Vec<(f64, f64)> = rows.iter().map(|r| (r.nu, r.distance)).collect();
    let fit = fit_rate(&table, RateModel::Power)?;
    Ok(FlowConvergenceReport {
        t_final: t,
        samples: cfg.samples,
        rows,
        fit,
        distances_decreasing,
        inconclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::init::AnalyticFamily;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n).unwrap()
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let table: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&nu| (nu, 3.0 * f64::powf(nu, 0.7)))
            .collect();
        let fit = fit_rate(&table, RateModel::Power).unwrap();
        assert!((fit.constant - 3.0).abs() < 1e-10);
        assert!((fit.exponent - 0.7).abs() < 1e-10);
        assert!(fit.max_relative_residual < 1e-10);
    }

    #[test]
    fn fit_recovers_exact_loglog_law() {
        let table: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&nu| (nu, 2.0 * f64::ln(nu).abs().powf(-0.5)))
            .collect();
        let fit = fit_rate(&table, RateModel::LogLog).unwrap();
        assert!((fit.constant - 2.0).abs() < 1e-10);
        assert!((fit.exponent - 0.5).abs() < 1e-10);
        assert!(fit.max_relative_residual < 1e-10);
    }

    #[test]
    fn fit_survives_five_percent_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let table: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let nu = 10f64.powf(-1.0 - 0.5 * i as f64);
                let wobble = 1.0 + 0.05 * (rng.gen::<f64>() * 2.0 - 1.0);
                (nu, 3.0 * nu.powf(0.7) * wobble)
            })
            .collect();
        let fit = fit_rate(&table, RateModel::Power).unwrap();
        assert!((fit.exponent - 0.7).abs() < 0.1, "exponent {}", fit.exponent);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_rate(&[(1e-2, 1.0), (1e-3, 0.5)], RateModel::Power).is_err());
        assert!(fit_rate(
            &[(1e-2, 1.0), (1e-3, 0.0), (1e-4, 0.5)],
            RateModel::Power
        )
        .is_err());
        assert!(fit_rate(
            &[(1e-2, 1.0), (1e-2, 1.0), (1e-2, 1.0)],
            RateModel::Power
        )
        .is_err());
    }

    #[test]
    fn steady_shear_keeps_its_seminorm() {
        let omega0 = AnalyticFamily::Shear.build(grid(64));
        let report = propagation_experiment(
            &omega0,
            PropagationSpace::KernelForm { theta: 0.5 },
            &RunOptions::new(0.5, 4),
        )
        .unwrap();
        let v0 = report.rows[0].seminorm;
        for row in &report.rows {
            assert!((row.seminorm - v0).abs() <= 1e-12 * v0, "t={}", row.t);
        }
        assert!(report.c_hat_sup.abs() < 1e-10);
    }

    #[test]
    fn propagation_base_row_is_the_initial_seminorm() {
        let omega0 = AnalyticFamily::ThreeMode.build(grid(64));
        let report = propagation_experiment(
            &omega0,
            PropagationSpace::KernelForm { theta: 0.5 },
            &RunOptions::new(0.25, 2),
        )
        .unwrap();
        let direct = wlog_seminorm(&omega0, 0.5).unwrap().value;
        assert_eq!(report.rows[0].seminorm, direct);
        assert_eq!(report.rows[0].c_hat, 0.0);
        assert!(report.c_hat_sup.is_finite());
    }

    #[test]
    fn log_fourier_propagation_of_steady_flow_is_flat() {
        let omega0 = AnalyticFamily::Shear.build(grid(64));
        let report = propagation_experiment(
            &omega0,
            PropagationSpace::LogFourier { p: 2.0 },
            &RunOptions::new(0.5, 4),
        )
        .unwrap();
        for row in &report.rows {
            assert!((row.seminorm - report.rows[0].seminorm).abs() <= 1e-12);
            assert!(row.c_hat.abs() <= 1e-12);
        }
    }

    #[test]
    fn log_fourier_prefactors_stay_bounded_on_rough_data() {
        let omega0 = crate::init::random_log_field_banded(grid(128), 2.0, 0.1, 5, 40)
            .unwrap()
            .scaled(4.0);
        let report = propagation_experiment(
            &omega0,
            PropagationSpace::LogFourier { p: 2.0 },
            &RunOptions::new(0.5, 5),
        )
        .unwrap();
        assert!(report.spectral_tail_fraction < 0.01);
        for row in &report.rows {
            assert!(row.c_hat.is_finite() && row.c_hat >= 0.0);
        }
        assert!(report.c_hat_sup.is_finite());
    }

    #[test]
    fn propagation_validates_parameters() {
        let omega0 = AnalyticFamily::Shear.build(grid(32));
        assert!(propagation_experiment(
            &omega0,
            PropagationSpace::KernelForm { theta: 1.5 },
            &RunOptions::new(0.1, 1),
        )
        .is_err());
        assert!(propagation_experiment(
            &omega0,
            PropagationSpace::LogFourier { p: 1.0 },
            &RunOptions::new(0.1, 1),
        )
        .is_err());
    }

    #[test]
    fn shear_sweep_matches_the_heat_factor_exactly() {
        // E(ν) = (1 − e^{−4π²νT})/√2 for the steady shear datum
        let omega0 = AnalyticFamily::Shear.build(grid(32));
        let nu_list = [1e-2, 1e-3, 1e-4];
        let report = inviscid_limit_experiment(
            &omega0,
            1.0,
            &nu_list,
            &RunOptions::new(0.5, 4),
        )
        .unwrap();
        for row in &report.rows {
            let expect =
                (1.0 - (-4.0 * std::f64::consts::PI.powi(2) * row.nu * 0.5).exp())
                    / 2f64.sqrt();
            assert!(
                (row.error - expect).abs() <= 1e-8 * expect,
                "nu={}: {} vs {expect}",
                row.nu,
                row.error
            );
        }
        assert!(report.errors_nonincreasing);
        // heat decay beats the log rate: products fall along the sweep
        assert!(report.rows[2].product < report.rows[0].product);
    }

    #[test]
    fn lq_exponent_uses_the_interpolation_minimum() {
        let omega0 = AnalyticFamily::Shear.build(grid(32));
        let nu_list = [1e-2, 1e-3, 1e-4];
        let r42 =
            lq_rate_experiment(&omega0, 1.0, 4.0, &nu_list, &RunOptions::new(0.25, 2)).unwrap();
        assert!((r42.rate_exponent - 0.25).abs() < 1e-15);
        let r2 =
            lq_rate_experiment(&omega0, 1.0, 2.0, &nu_list, &RunOptions::new(0.25, 2)).unwrap();
        assert!((r2.rate_exponent - 0.5).abs() < 1e-15);
        assert!(lq_rate_experiment(
            &omega0,
            1.0,
            f64::INFINITY,
            &nu_list,
            &RunOptions::new(0.25, 2)
        )
        .is_err());
    }

    #[test]
    fn identical_viscosity_runs_are_bitwise_equal() {
        let omega0 = AnalyticFamily::ThreeMode.build(grid(32));
        let options = RunOptions::new(0.25, 2).with_shared_dt(&omega0).unwrap();
        let nu = 3e-3;
        let a = simulate(&omega0, &options.solver_config(nu).unwrap()).unwrap();
        let b = simulate(&omega0, &options.solver_config(nu).unwrap()).unwrap();
        for ((_, fa), (_, fb)) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(fa.values(), fb.values());
        }
    }

    #[test]
    fn still_flow_convergence_recovers_linear_brownian_rate() {
        let omega0 = ScalarField::zeros(grid(16));
        let cfg = FlowConvergenceConfig {
            nu_list: vec![1e-2, 3.16e-3, 1e-3],
            samples: 600,
            sde_dt: 0.025,
            seed: 11,
            start_grid: 6,
        };
        let report =
            flow_convergence_experiment(&omega0, &cfg, &RunOptions::new(0.5, 4)).unwrap();
        // distance = 4νT exactly in expectation
        for row in &report.rows {
            let expect = 4.0 * row.nu * 0.5;
            assert!(
                (row.distance - expect).abs() <= 5.0 * row.mc_std_error + 1e-12,
                "nu={}: {} vs {expect} (se {})",
                row.nu,
                row.distance,
                row.mc_std_error
            );
        }
        assert!((report.fit.exponent - 1.0).abs() < 0.1);
        assert!(report.distances_decreasing);
        assert!(!report.inconclusive);
    }
}
