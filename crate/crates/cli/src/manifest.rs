//! The fully resolved run description. Every run writes its manifest next to
//! its outputs; re-running a manifest reproduces them bit-exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use logeuler::{Error, Result};

/// How the initial vorticity is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum InitSpec {
    Analytic { family: String },
    Random { alpha: f64, margin: f64 },
    File { path: String },
}

impl InitSpec {
    /// Parse `shear|twomode|threemode`, `random:alpha=A,margin=M`, or
    /// `file:PATH`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(path) = text.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::Config("empty snapshot path in --init".into()));
            }
            return Ok(InitSpec::File { path: path.to_string() });
        }
        if let Some(params) = text.strip_prefix("random:") {
            let mut alpha = None;
            let mut margin = Some(0.1);
            for part in params.split(',') {
                let (key, value) = part.split_once('=').ok_or_else(|| {
                    Error::Config(format!("bad random-field parameter '{part}', expected key=value"))
                })?;
                let value: f64 = value.parse().map_err(|_| {
                    Error::Config(format!("bad numeric value '{value}' for '{key}'"))
                })?;
                match key {
                    "alpha" => alpha = Some(value),
                    "margin" => margin = Some(value),
                    other => {
                        return Err(Error::Config(format!(
                            "unknown random-field parameter '{other}' (alpha, margin)"
                        )))
                    }
                }
            }
            let alpha = alpha
                .ok_or_else(|| Error::Config("random init requires alpha=<value>".into()))?;
            return Ok(InitSpec::Random {
                alpha,
                margin: margin.unwrap(),
            });
        }
        logeuler::init::AnalyticFamily::parse(text)?;
        Ok(InitSpec::Analytic {
            family: text.to_string(),
        })
    }
}

/// One resolved run. Serialized as manifest.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Manifest {
    Simulate {
        n: usize,
        nu: f64,
        t_final: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        cfl: f64,
        snapshots: usize,
        init: InitSpec,
        seed: u64,
        write_snapshots: bool,
    },
    Seminorm {
        n: usize,
        kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
        init: InitSpec,
        seed: u64,
    },
    Propagation {
        n: usize,
        space: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        p: Option<f64>,
        t_final: f64,
        snapshots: usize,
        cfl: f64,
        init: InitSpec,
        seed: u64,
    },
    InviscidLimit {
        n: usize,
        alpha: f64,
        q: f64,
        nu_list: Vec<f64>,
        t_final: f64,
        snapshots: usize,
        cfl: f64,
        init: InitSpec,
        seed: u64,
    },
    FlowConvergence {
        n: usize,
        nu_list: Vec<f64>,
        t_final: f64,
        samples: usize,
        sde_dt: f64,
        start_grid: usize,
        snapshots: usize,
        cfl: f64,
        init: InitSpec,
        seed: u64,
    },
    FeynmanKac {
        n: usize,
        nu: f64,
        t: f64,
        samples: usize,
        sde_dt: f64,
        snapshots: usize,
        cfl: f64,
        init: InitSpec,
        seed: u64,
    },
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("manifest serialization failed: {e}")))?;
        std::fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("unreadable manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("malformed manifest {}: {e}", path.display())))
    }
}
