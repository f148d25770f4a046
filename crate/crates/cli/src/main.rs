//! Command-line driver: binds flags and config files to the experiment
//! drivers and writes each run's report bundle plus a manifest that
//! reproduces it bit-exactly.

mod config;
mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_nu_list, FileConfig};
use logeuler::{Error, Result};
use manifest::{InitSpec, Manifest};

#[derive(Parser)]
#[command(
    name = "logeuler",
    about = "Spectral laboratory for 2D incompressible flow with logarithmic-order regularity diagnostics",
    version
)]
struct Cli {
    /// Output directory (default: $LOGEULER_OUT or ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Flat key=value config file; flags take precedence over it
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Cap the worker thread pool (results are identical for any value)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Grid resolution N (even, >= 8)
    #[arg(long, short = 'N')]
    n: Option<usize>,

    /// Initial datum: shear|twomode|threemode, random:alpha=A[,margin=M], file:PATH
    #[arg(long)]
    init: Option<String>,

    /// Master seed; all randomness derives from it
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the vorticity equation and write diagnostics + snapshots
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Viscosity (0 = inviscid)
        #[arg(long)]
        nu: Option<f64>,
        /// Final time
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Step-size cap (CFL still applies)
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        cfl: Option<f64>,
        /// Number of uniform snapshot times
        #[arg(long)]
        snapshots: Option<usize>,
        /// Write binary field snapshots alongside diagnostics
        #[arg(long)]
        write_snapshots: Option<bool>,
    },
    /// Evaluate a semi-norm of the initial datum
    Seminorm {
        #[command(flatten)]
        common: CommonArgs,
        /// hlog-fourier|hlog-physical|wlog|xgp|commutator
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        h: Option<f64>,
    },
    /// Track a semi-norm along the inviscid flow and report growth constants
    Propagation {
        #[command(flatten)]
        common: CommonArgs,
        /// wlog (kernel form, needs --theta) or hlog (Fourier form, needs --p)
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
    },
    /// Viscosity sweep measuring sup_t |omega^nu - omega|_L2 vs the log rate
    InviscidLimit {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// Comma-separated decreasing viscosities
        #[arg(long)]
        nu_list: Option<String>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
    },
    /// Same sweep measured in L^q with exponent min(alpha/2, alpha/q)
    LqRate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        nu_list: Option<String>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
    },
    /// Distance between stochastic and deterministic backward flows across nu
    FlowConvergence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        nu_list: Option<String>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        /// Monte Carlo samples per start point
        #[arg(long = "M")]
        samples: Option<usize>,
        #[arg(long)]
        sde_dt: Option<f64>,
        /// Start points form an m x m lattice
        #[arg(long)]
        start_grid: Option<usize>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
    },
    /// Monte Carlo reconstruction of the viscous field vs the spectral solver
    FeynmanKac {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        nu: Option<f64>,
        /// Reconstruction time
        #[arg(long)]
        t: Option<f64>,
        #[arg(long = "M")]
        samples: Option<usize>,
        #[arg(long)]
        sde_dt: Option<f64>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        cfl: Option<f64>,
    },
    /// Re-run a previously written manifest.json
    Rerun {
        /// Path to manifest.json
        manifest: PathBuf,
    },
}

struct Merge<'a> {
    file: &'a FileConfig,
}

impl<'a> Merge<'a> {
    fn f64(&self, cli: Option<f64>, key: &str) -> Result<Option<f64>> {
        Ok(cli.or(self.file.f64(key)?))
    }
    fn f64_or(&self, cli: Option<f64>, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(cli, key)?.unwrap_or(default))
    }
    fn f64_required(&self, cli: Option<f64>, key: &str) -> Result<f64> {
        self.f64(cli, key)?
            .ok_or_else(|| Error::Config(format!("missing required parameter --{key}")))
    }
    fn usize_or(&self, cli: Option<usize>, key: &str, default: usize) -> Result<usize> {
        Ok(cli.or(self.file.usize(key)?).unwrap_or(default))
    }
    fn u64_or(&self, cli: Option<u64>, key: &str, default: u64) -> Result<u64> {
        Ok(cli.or(self.file.u64(key)?).unwrap_or(default))
    }
    fn string(&self, cli: Option<String>, key: &str) -> Result<Option<String>> {
        Ok(cli.or(self.file.string(key)?))
    }
    fn string_required(&self, cli: Option<String>, key: &str) -> Result<String> {
        self.string(cli, key)?
            .ok_or_else(|| Error::Config(format!("missing required parameter --{key}")))
    }
    fn bool_or(&self, cli: Option<bool>, key: &str, default: bool) -> Result<bool> {
        Ok(cli.or(self.file.bool(key)?).unwrap_or(default))
    }

    fn common(&self, common: &CommonArgs, default_n: usize) -> Result<(usize, InitSpec, u64)> {
        let n = self.usize_or(common.n, "n", default_n)?;
        let init_text = self.string_required(common.init.clone(), "init")?;
        let init = InitSpec::parse(&init_text)?;
        let seed = self.u64_or(common.seed, "seed", 0)?;
        Ok((n, init, seed))
    }

    fn nu_list(&self, cli: Option<String>) -> Result<Vec<f64>> {
        let text = self.string_required(cli, "nu-list")?;
        parse_nu_list(&text)
    }
}

fn resolve_manifest(command: Command, merge: &Merge) -> Result<std::result::Result<Manifest, PathBuf>> {
    Ok(Ok(match command {
        Command::Rerun { manifest } => return Ok(Err(manifest)),
        Command::Simulate {
            common,
            nu,
            t_final,
            dt,
            cfl,
            snapshots,
            write_snapshots,
        } => {
            let (n, init, seed) = merge.common(&common, 128)?;
            Manifest::Simulate {
                n,
                nu: merge.f64_or(nu, "nu", 0.0)?,
                t_final: merge.f64_required(t_final, "T")?,
                dt: merge.f64(dt, "dt")?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 10)?,
                init,
                seed,
                write_snapshots: merge.bool_or(write_snapshots, "write-snapshots", true)?,
            }
        }
        Command::Seminorm {
            common,
            kind,
            alpha,
            theta,
            gamma,
            p,
            h,
        } => {
            let (n, init, seed) = merge.common(&common, 128)?;
            Manifest::Seminorm {
                n,
                kind: merge.string_required(kind, "kind")?,
                alpha: merge.f64(alpha, "alpha")?,
                theta: merge.f64(theta, "theta")?,
                gamma: merge.f64(gamma, "gamma")?,
                p: merge.f64(p, "p")?,
                h: merge.f64(h, "h")?,
                init,
                seed,
            }
        }
        Command::Propagation {
            common,
            space,
            theta,
            p,
            t_final,
            snapshots,
            cfl,
        } => {
            let (n, init, seed) = merge.common(&common, 256)?;
            Manifest::Propagation {
                n,
                space: merge
                    .string(space, "space")?
                    .unwrap_or_else(|| "wlog".to_string()),
                theta: merge.f64(theta, "theta")?,
                p: merge.f64(p, "p")?,
                t_final: merge.f64_or(t_final, "T", 1.0)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 10)?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                init,
                seed,
            }
        }
        Command::InviscidLimit {
            common,
            alpha,
            nu_list,
            t_final,
            snapshots,
            cfl,
        } => {
            let (n, init, seed) = merge.common(&common, 256)?;
            Manifest::InviscidLimit {
                n,
                alpha: merge.f64_required(alpha, "alpha")?,
                q: 2.0,
                nu_list: merge.nu_list(nu_list)?,
                t_final: merge.f64_or(t_final, "T", 0.25)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 20)?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                init,
                seed,
            }
        }
        Command::LqRate {
            common,
            alpha,
            q,
            nu_list,
            t_final,
            snapshots,
            cfl,
        } => {
            let (n, init, seed) = merge.common(&common, 256)?;
            Manifest::InviscidLimit {
                n,
                alpha: merge.f64_required(alpha, "alpha")?,
                q: merge.f64_required(q, "q")?,
                nu_list: merge.nu_list(nu_list)?,
                t_final: merge.f64_or(t_final, "T", 0.25)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 20)?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                init,
                seed,
            }
        }
        Command::FlowConvergence {
            common,
            nu_list,
            t_final,
            samples,
            sde_dt,
            start_grid,
            snapshots,
            cfl,
        } => {
            let (n, init, seed) = merge.common(&common, 128)?;
            Manifest::FlowConvergence {
                n,
                nu_list: merge.nu_list(nu_list)?,
                t_final: merge.f64_or(t_final, "T", 0.5)?,
                samples: merge.usize_or(samples, "M", 1000)?,
                sde_dt: merge.f64_or(sde_dt, "sde-dt", 2e-3)?,
                start_grid: merge.usize_or(start_grid, "start-grid", 16)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 20)?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                init,
                seed,
            }
        }
        Command::FeynmanKac {
            common,
            nu,
            t,
            samples,
            sde_dt,
            snapshots,
            cfl,
        } => {
            let (n, init, seed) = merge.common(&common, 64)?;
            Manifest::FeynmanKac {
                n,
                nu: merge.f64_required(nu, "nu")?,
                t: merge.f64_required(t, "t")?,
                samples: merge.usize_or(samples, "M", 10_000)?,
                sde_dt: merge.f64_or(sde_dt, "sde-dt", 1.0 / 128.0)?,
                snapshots: merge.usize_or(snapshots, "snapshots", 10)?,
                cfl: merge.f64_or(cfl, "cfl", 0.5)?,
                init,
                seed,
            }
        }
    }))
}

fn run() -> Result<u32> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool setup failed: {e}")))?;
    }
    let out = cli
        .out
        .or_else(|| std::env::var_os("LOGEULER_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let file_config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::empty(),
    };
    let merge = Merge { file: &file_config };
    let manifest = match resolve_manifest(cli.command, &merge)? {
        Ok(manifest) => manifest,
        Err(path) => Manifest::read(&path)?,
    };
    run::execute(&manifest, &out)
}

fn main() -> ExitCode {
    match run() {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
