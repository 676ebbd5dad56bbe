//! Command-line pipeline: configuration, figure rendering and the
//! per-command drivers behind the `coamoeba` binary.

pub mod commands;
pub mod config;
pub mod render;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

pub use commands::{run, Outcome};
pub use config::{FigureSpec, Layer, RunConfig};
pub use render::{render, FigureInputs, RenderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Newton polygon of the polynomial.
    Newton,
    /// Sampled curve and critical points as CSV.
    Sample,
    /// Amoeba figure and Log-point queries.
    Amoeba,
    /// Coamoeba raster, PNG/PGM images and Arg-point queries.
    Coamoeba,
    /// Multiplicity-counted coamoeba area against its bound.
    Area,
    /// Tropical spine and its dual subdivision.
    Spine,
    /// Codual lines of the dual subdivision.
    Codual,
    /// Region decomposition, extra-pieces and fiber-count checks.
    Extras,
    /// Harnack verdict.
    Harnack,
    /// Coamoebas along the deformation towards the tropical limit.
    Deform,
    /// Everything above in one report.
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Newton => "newton",
            Command::Sample => "sample",
            Command::Amoeba => "amoeba",
            Command::Coamoeba => "coamoeba",
            Command::Area => "area",
            Command::Spine => "spine",
            Command::Codual => "codual",
            Command::Extras => "extras",
            Command::Harnack => "harnack",
            Command::Deform => "deform",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] coamoeba_core::Error),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 for usage errors (including unparsable polynomials), 2 for domain errors.
    pub fn exit_code(&self) -> i32 {
        use coamoeba_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Domain(E::Syntax { .. } | E::NegativeExponent { .. } | E::EmptyPolynomial) => 1,
            CliError::Domain(_) | CliError::Render(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Domain(e) => e.kind(),
            CliError::Render(_) => "render",
            CliError::Io(_) => "io",
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"error": {"kind": self.kind(), "message": self.to_string(), "exit_code": self.exit_code()}})
    }
}

/// Flags shared by every command; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Polynomial, e.g. "1 + z + w" or "1 + e^(i*pi/3)*z + w".
    #[arg(long)]
    pub poly: Option<String>,
    /// TOML (by extension) or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Torus raster resolution N.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Half-width X of the Log window.
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<f64>,
    /// Fiber grid size along log|u|.
    #[arg(long)]
    pub nx: Option<usize>,
    /// Fiber grid size along arg u.
    #[arg(long)]
    pub ntheta: Option<usize>,
    /// Arg query point "a,b" (radians; "0.5pi" style allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Log query point "x,y".
    #[arg(long, allow_hyphen_values = true)]
    pub logpoint: Option<String>,
    /// Strictly decreasing deformation parameters "t1,t2,...".
    #[arg(long)]
    pub t_sequence: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Figure layers, comma separated: amoeba,coamoeba,spine,codual,critical,extra,alga.
    #[arg(long)]
    pub layers: Option<String>,
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.poly {
            cfg.polynomial = Some(p.clone());
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(n) = self.resolution {
            cfg.resolution = n;
        }
        if let Some(x) = self.window {
            cfg.window = Some(x);
        }
        if let Some(n) = self.nx {
            cfg.nx = n;
        }
        if let Some(n) = self.ntheta {
            cfg.ntheta = n;
        }
        if let Some(t) = &self.theta {
            cfg.theta = Some(config::parse_pair(t, "--theta")?);
        }
        if let Some(x) = &self.logpoint {
            cfg.logpoint = Some(config::parse_pair(x, "--logpoint")?);
        }
        if let Some(ts) = &self.t_sequence {
            cfg.t_sequence = Some(config::parse_reals(ts)?);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(l) = &self.layers {
            cfg.layers = Some(config::parse_layers(l)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Writes through a temporary file in `dir` and renames it into place.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.join(name).display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}
