//! Executes a resolved manifest: builds the datum, runs the requested
//! computation, and writes the report bundle into the output directory.

use std::path::Path;

use logeuler::experiments::{
    flow_convergence_experiment, inviscid_limit_experiment, lq_rate_experiment,
    propagation_experiment, FlowConvergenceConfig, PropagationSpace, RunOptions,
};
use logeuler::init::{random_log_field, AnalyticFamily};
use logeuler::io::{
    read_snapshot, write_diagnostics_csv, write_expectation_bundle, write_flow_bundle,
    write_inviscid_bundle, write_propagation_bundle, write_seminorm_csv, write_snapshot,
    write_spectrum_csv, PayloadKind,
};
use logeuler::seminorm::{
    commutator_functional, hlog_fourier, hlog_physical, wlog_seminorm, xgp_seminorm,
    SeminormKind, SeminormReport,
};
use logeuler::solver::{simulate, SolverConfig};
use logeuler::stochastic::{feynman_kac_streamed, EnsembleConfig, StartPoints};
use logeuler::{biot_savart, Error, GridSpec, Result, ScalarField};

use crate::manifest::{InitSpec, Manifest};

fn build_datum(init: &InitSpec, n: usize, seed: u64) -> Result<ScalarField> {
    let grid = GridSpec::new(n)?;
    match init {
        InitSpec::Analytic { family } => Ok(AnalyticFamily::parse(family)?.build(grid)),
        InitSpec::Random { alpha, margin } => random_log_field(grid, *alpha, *margin, seed),
        InitSpec::File { path } => {
            let p = Path::new(path);
            if !p.is_file() {
                return Err(Error::Config(format!("unreadable snapshot file '{path}'")));
            }
            let (field, _) = read_snapshot(p)?;
            if field.n() != n {
                return Err(Error::Config(format!(
                    "snapshot '{path}' holds an N={} field, run requests N={n}",
                    field.n()
                )));
            }
            Ok(field)
        }
    }
}

/// Run the manifest, writing everything (manifest included) under `out`.
/// Returns a nonzero count of soft failures (inconclusive sweeps).
pub fn execute(manifest: &Manifest, out: &Path) -> Result<u32> {
    std::fs::create_dir_all(out)?;
    manifest.write(out)?;
    match manifest {
        Manifest::Simulate {
            n,
            nu,
            t_final,
            dt,
            cfl,
            snapshots,
            init,
            seed,
            write_snapshots,
        } => {
            let omega0 = build_datum(init, *n, *seed)?;
            let mut cfg = SolverConfig::new(*nu, *t_final)?
                .with_cfl(*cfl)?
                .with_uniform_snapshots(*snapshots)?;
            if let Some(dt) = dt {
                cfg = cfg.with_dt(*dt)?;
            }
            let traj = simulate(&omega0, &cfg)?;
            write_diagnostics_csv(&out.join("diagnostics.csv"), &traj)?;
            if *write_snapshots {
                for (i, (_, field)) in traj.snapshots.iter().enumerate() {
                    let name = format!("snapshot_{i:03}.fld");
                    write_snapshot(&out.join(name), field, PayloadKind::Scalar)?;
                }
            }
            write_spectrum_csv(&out.join("final_spectrum.csv"), traj.final_field().spectrum())?;
            println!(
                "simulate: {} steps, tail fraction {:.3e}",
                traj.steps_taken, traj.spectral_tail_fraction
            );
            Ok(0)
        }

        Manifest::Seminorm {
            n,
            kind,
            alpha,
            theta,
            gamma,
            p,
            h,
            init,
            seed,
        } => {
            let f = build_datum(init, *n, *seed)?;
            let need = |v: Option<f64>, name: &str| -> Result<f64> {
                v.ok_or_else(|| Error::Config(format!("--{name} is required for kind {kind}")))
            };
            let report: SeminormReport = match kind.as_str() {
                "hlog-fourier" => hlog_fourier(&f, need(*alpha, "alpha")?)?,
                "hlog-physical" => hlog_physical(&f, need(*alpha, "alpha")?)?,
                "wlog" => wlog_seminorm(&f, need(*theta, "theta")?)?,
                "xgp" => xgp_seminorm(&f, need(*gamma, "gamma")?, need(*p, "p")?)?,
                "commutator" => {
                    let hval = need(*h, "h")?;
                    let a = biot_savart(f.spectrum())?;
                    let value = commutator_functional(&a, &f, hval)?;
                    SeminormReport {
                        kind: SeminormKind::Commutator,
                        value,
                        n: *n,
                        alpha: None,
                        theta: None,
                        gamma: None,
                        p: None,
                        h: Some(hval),
                        shift_radius: None,
                        quadrature_points: *n * *n,
                        h_grid: None,
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown seminorm kind '{other}' (hlog-fourier|hlog-physical|wlog|xgp|commutator)"
                    )))
                }
            };
            write_seminorm_csv(&out.join("seminorm.csv"), std::slice::from_ref(&report))?;
            println!("{} = {}", report.kind, report.value);
            Ok(0)
        }

        Manifest::Propagation {
            n,
            space,
            theta,
            p,
            t_final,
            snapshots,
            cfl,
            init,
            seed,
        } => {
            let omega0 = build_datum(init, *n, *seed)?;
            let space = match space.as_str() {
                "wlog" => PropagationSpace::KernelForm {
                    theta: theta.ok_or_else(|| {
                        Error::Config("--theta is required for the wlog space".into())
                    })?,
                },
                "hlog" => PropagationSpace::LogFourier {
                    p: p.ok_or_else(|| {
                        Error::Config("--p is required for the hlog space".into())
                    })?,
                },
                other => {
                    return Err(Error::Config(format!(
                        "unknown propagation space '{other}' (wlog|hlog)"
                    )))
                }
            };
            let mut options = RunOptions::new(*t_final, *snapshots);
            options.cfl = *cfl;
            let report = propagation_experiment(&omega0, space, &options)?;
            write_propagation_bundle(out, &report)?;
            println!(
                "propagation: c_hat_sup = {}, tail fraction {:.3e}",
                report.c_hat_sup, report.spectral_tail_fraction
            );
            Ok(0)
        }

        Manifest::InviscidLimit {
            n,
            alpha,
            q,
            nu_list,
            t_final,
            snapshots,
            cfl,
            init,
            seed,
        } => {
            let omega0 = build_datum(init, *n, *seed)?;
            let mut options = RunOptions::new(*t_final, *snapshots);
            options.cfl = *cfl;
            let report = if *q == 2.0 {
                inviscid_limit_experiment(&omega0, *alpha, nu_list, &options)?
            } else {
                lq_rate_experiment(&omega0, *alpha, *q, nu_list, &options)?
            };
            write_inviscid_bundle(out, &report)?;
            println!(
                "inviscid limit: C_hat = {}, fitted exponent {} (residual {:.3})",
                report.c_hat, report.fit.exponent, report.fit.max_relative_residual
            );
            let flagged = report.rows.iter().filter(|r| r.under_resolved).count();
            if flagged > 0 {
                println!("warning: {flagged} run(s) under-resolved (spectral tail > 1%)");
            }
            Ok(0)
        }

        Manifest::FlowConvergence {
            n,
            nu_list,
            t_final,
            samples,
            sde_dt,
            start_grid,
            snapshots,
            cfl,
            init,
            seed,
        } => {
            let omega0 = build_datum(init, *n, *seed)?;
            let cfg = FlowConvergenceConfig {
                nu_list: nu_list.clone(),
                samples: *samples,
                sde_dt: *sde_dt,
                seed: *seed,
                start_grid: *start_grid,
            };
            let mut options = RunOptions::new(*t_final, *snapshots);
            options.cfl = *cfl;
            let report = flow_convergence_experiment(&omega0, &cfg, &options)?;
            write_flow_bundle(out, &report)?;
            println!(
                "flow convergence: beta_hat = {} (residual {:.3})",
                report.fit.exponent, report.fit.max_relative_residual
            );
            if report.inconclusive {
                println!("inconclusive: MC error exceeds 25% of the smallest distance");
                return Ok(1);
            }
            Ok(0)
        }

        Manifest::FeynmanKac {
            n,
            nu,
            t,
            samples,
            sde_dt,
            snapshots,
            cfl,
            init,
            seed,
        } => {
            let omega0 = build_datum(init, *n, *seed)?;
            let cfg = SolverConfig::new(*nu, *t)?
                .with_cfl(*cfl)?
                .with_uniform_snapshots(*snapshots)?;
            let traj = simulate(&omega0, &cfg)?;
            let ens_cfg = EnsembleConfig::new(*samples, *sde_dt, *seed, StartPoints::Grid { m: *n })?;
            let rec = feynman_kac_streamed(&omega0, &traj, *t, &ens_cfg)?;
            let reference = traj.final_field();
            let err = rec.field.sub(reference)?.l2_norm();
            write_expectation_bundle(out, &rec, Some(err))?;
            write_snapshot(&out.join("reference.fld"), reference, PayloadKind::Scalar)?;
            println!(
                "feynman-kac: |reconstruction - reference|_L2 = {err}, mean MC std error = {}",
                rec.mean_std_error
            );
            Ok(0)
        }
    }
}
