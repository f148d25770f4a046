//! File formats: the binary field snapshot, CSV exports, and the per-
//! experiment report bundles (CSV table + JSON summary).
//!
//! Snapshot layout, bit-exact: a 16-byte header — magic "LGEU", version u16,
//! N u16, payload kind u32, reserved u32, all little-endian — followed by one
//! or more N×N layers of little-endian f64 in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::{FlowConvergenceReport, InviscidLimitReport, PropagationReport};
use crate::field::{ScalarField, Spectrum};
use crate::grid::GridSpec;
use crate::seminorm::SeminormReport;
use crate::solver::Trajectory;
use crate::stochastic::{ExpectationField, FlowEnsemble};

const MAGIC: &[u8; 4] = b"LGEU";
const VERSION: u16 = 1;

/// What a snapshot payload contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Scalar,
    VelocityX,
    VelocityY,
    /// First coordinates of ensemble positions, one layer per sample.
    EnsembleX,
    /// Second coordinates of ensemble positions, one layer per sample.
    EnsembleY,
}

impl PayloadKind {
    fn code(self) -> u32 {
        match self {
            PayloadKind::Scalar => 0,
            PayloadKind::VelocityX => 1,
            PayloadKind::VelocityY => 2,
            PayloadKind::EnsembleX => 3,
            PayloadKind::EnsembleY => 4,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => PayloadKind::Scalar,
            1 => PayloadKind::VelocityX,
            2 => PayloadKind::VelocityY,
            3 => PayloadKind::EnsembleX,
            4 => PayloadKind::EnsembleY,
            other => return Err(Error::Format(format!("unknown payload kind {other}"))),
        })
    }
}

fn write_header<W: Write>(w: &mut W, n: usize, kind: PayloadKind) -> Result<()> {
    if n > u16::MAX as usize {
        return Err(Error::Format(format!("N = {n} exceeds the u16 header field")));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u16).to_le_bytes())?;
    w.write_all(&kind.code().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    Ok(())
}

fn write_layer<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Write one scalar field.
pub fn write_snapshot(path: &Path, field: &ScalarField, kind: PayloadKind) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, field.n(), kind)?;
    write_layer(&mut w, field.values())?;
    w.flush()?;
    Ok(())
}

/// Write consecutive N×N layers under one header.
pub fn write_layered_snapshot(
    path: &Path,
    n: usize,
    kind: PayloadKind,
    layers: &[Vec<f64>],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, n, kind)?;
    for layer in layers {
        if layer.len() != n * n {
            return Err(Error::Format(format!(
                "layer holds {} values, expected {}",
                layer.len(),
                n * n
            )));
        }
        write_layer(&mut w, layer)?;
    }
    w.flush()?;
    Ok(())
}

fn read_header<R: Read>(r: &mut R, path: &Path) -> Result<(usize, PayloadKind)> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| {
        Error::Format(format!("{}: snapshot shorter than its header ({e})", path.display()))
    })?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format(format!(
            "{}: bad magic, not a field snapshot",
            path.display()
        )));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported snapshot version {version}",
            path.display()
        )));
    }
    let n = u16::from_le_bytes([header[6], header[7]]) as usize;
    let kind = PayloadKind::from_code(u32::from_le_bytes([
        header[8], header[9], header[10], header[11],
    ]))?;
    Ok((n, kind))
}

fn read_layers_impl(path: &Path) -> Result<(usize, PayloadKind, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path)?);
    let (n, kind) = read_header(&mut r, path)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    let layer_bytes = n * n * 8;
    if layer_bytes == 0 || rest.len() % layer_bytes != 0 || rest.is_empty() {
        return Err(Error::Format(format!(
            "{}: payload of {} bytes is not a positive multiple of N²·8 = {layer_bytes}",
            path.display(),
            rest.len()
        )));
    }
    let layers = rest
        .chunks_exact(layer_bytes)
        .map(|chunk| {
            chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok((n, kind, layers))
}

/// Read a single-layer snapshot back into a field.
pub fn read_snapshot(path: &Path) -> Result<(ScalarField, PayloadKind)> {
    let (n, kind, mut layers) = read_layers_impl(path)?;
    if layers.len() != 1 {
        return Err(Error::Format(format!(
            "{}: expected one layer, found {}",
            path.display(),
            layers.len()
        )));
    }
    let grid = GridSpec::new(n)?;
    Ok((ScalarField::from_values(grid, layers.pop().unwrap())?, kind))
}

/// Read a layered snapshot.
pub fn read_layered_snapshot(path: &Path) -> Result<(usize, PayloadKind, Vec<Vec<f64>>)> {
    read_layers_impl(path)
}

/// Dump a grid-started ensemble as two layered snapshots (x and y
/// coordinates, one layer per sample). `m` is the start-lattice side.
pub fn write_ensemble_layers(dir: &Path, ens: &FlowEnsemble, m: usize) -> Result<()> {
    if ens.start_points().len() != m * m {
        return Err(Error::Mismatch(format!(
            "ensemble holds {} start points, not an {m}×{m} lattice",
            ens.start_points().len()
        )));
    }
    let mut xs = Vec::with_capacity(ens.samples);
    let mut ys = Vec::with_capacity(ens.samples);
    for j in 0..ens.samples {
        let mut lx = Vec::with_capacity(m * m);
        let mut ly = Vec::with_capacity(m * m);
        for p in 0..m * m {
            let pos = ens.positions(p)[j];
            lx.push(pos[0]);
            ly.push(pos[1]);
        }
        xs.push(lx);
        ys.push(ly);
    }
    write_layered_snapshot(&dir.join("ensemble_x.fld"), m, PayloadKind::EnsembleX, &xs)?;
    write_layered_snapshot(&dir.join("ensemble_y.fld"), m, PayloadKind::EnsembleY, &ys)?;
    Ok(())
}

// ---------------------------------------------------------------- CSV ----

/// Spectrum as (k1, k2, Re û, Im û) rows.
pub fn write_spectrum_csv(path: &Path, spectrum: &Spectrum) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k1,k2,re,im")?;
    for (k1, k2, c) in spectrum.iter_modes() {
        writeln!(w, "{k1},{k2},{},{}", c.re, c.im)?;
    }
    w.flush()?;
    Ok(())
}

/// Trajectory diagnostics as (t, l2, l4, linf, energy) rows.
pub fn write_diagnostics_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,l2,l4,linf,energy")?;
    for d in &traj.diagnostics {
        writeln!(w, "{},{},{},{},{}", d.t, d.l2, d.l4, d.linf, d.energy)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Semi-norm reports, one CSV row each.
pub fn write_seminorm_csv(path: &Path, reports: &[SeminormReport]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "kind,alpha,theta,gamma,p,h,value,n,shift_radius,quadrature_points,h_grid"
    )?;
    for r in reports {
        let h_grid = r
            .h_grid
            .as_ref()
            .map(|g| {
                g.iter()
                    .map(|h| h.to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.kind,
            opt(r.alpha),
            opt(r.theta),
            opt(r.gamma),
            opt(r.p),
            opt(r.h),
            r.value,
            r.n,
            opt(r.shift_radius),
            r.quadrature_points,
            h_grid
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Ensemble summary as (x1, x2, mean_x1, mean_x2, var, samples) rows.
pub fn write_ensemble_summary_csv(path: &Path, ens: &FlowEnsemble) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x1,x2,mean_x1,mean_x2,var,samples")?;
    for row in ens.summary() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.x1, row.x2, row.mean_x1, row.mean_x2, row.var, row.samples
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| Error::Format(format!("JSON serialization failed: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

// ------------------------------------------------------------- bundles ----

/// diagnostics.csv (+ numbered snapshot files) for a trajectory.
pub fn write_trajectory_bundle(dir: &Path, traj: &Trajectory, snapshots: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_diagnostics_csv(&dir.join("diagnostics.csv"), traj)?;
    if snapshots {
        for (i, (_, field)) in traj.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:03}.fld");
            write_snapshot(&dir.join(name), field, PayloadKind::Scalar)?;
        }
    }
    Ok(())
}

/// sweep.csv + summary.json for a viscosity sweep.
pub fn write_inviscid_bundle(dir: &Path, report: &InviscidLimitReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("sweep.csv"))?);
    writeln!(w, "nu,error,product,tail_fraction,under_resolved,steps")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.nu, r.error, r.product, r.tail_fraction, r.under_resolved, r.steps
        )?;
    }
    w.flush()?;
    write_json(&dir.join("summary.json"), report)
}

/// series.csv + summary.json for a propagation run.
pub fn write_propagation_bundle(dir: &Path, report: &PropagationReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("series.csv"))?);
    writeln!(w, "t,seminorm,growth_budget,c_hat,argmax_h")?;
    for r in &report.rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.t,
            r.seminorm,
            r.growth_budget,
            r.c_hat,
            opt(r.argmax_h)
        )?;
    }
    w.flush()?;
    write_json(&dir.join("summary.json"), report)
}

/// sweep.csv + summary.json for the flow-convergence sweep.
pub fn write_flow_bundle(dir: &Path, report: &FlowConvergenceReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("sweep.csv"))?);
    writeln!(w, "nu,distance,mc_std_error")?;
    for r in &report.rows {
        writeln!(w, "{},{},{}", r.nu, r.distance, r.mc_std_error)?;
    }
    w.flush()?;
    write_json(&dir.join("summary.json"), report)
}

/// Reconstructed field (+ standard error) snapshots and a small JSON summary.
pub fn write_expectation_bundle(
    dir: &Path,
    rec: &ExpectationField,
    reference_error: Option<f64>,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_snapshot(&dir.join("expectation.fld"), &rec.field, PayloadKind::Scalar)?;
    if let Some(se) = &rec.std_error {
        write_snapshot(&dir.join("std_error.fld"), se, PayloadKind::Scalar)?;
    }
    #[derive(serde::Serialize)]
    struct Summary {
        mean_std_error: f64,
        has_variance_estimate: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        reference_l2_error: Option<f64>,
    }
    write_json(
        &dir.join("summary.json"),
        &Summary {
            mean_std_error: rec.mean_std_error,
            has_variance_estimate: rec.std_error.is_some(),
            reference_l2_error: reference_error,
        },
    )
}
