use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use coamoeba_core::analysis::HarnackThresholds;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Amoeba,
    Coamoeba,
    Spine,
    Codual,
    Critical,
    Extra,
    Alga,
}

impl Layer {
    pub const ALL: [Layer; 7] =
        [Layer::Amoeba, Layer::Coamoeba, Layer::Spine, Layer::Codual, Layer::Critical, Layer::Extra, Layer::Alga];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Amoeba => "amoeba",
            Layer::Coamoeba => "coamoeba",
            Layer::Spine => "spine",
            Layer::Codual => "codual",
            Layer::Critical => "critical",
            Layer::Extra => "extra",
            Layer::Alga => "alga",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layer {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Layer::ALL
            .into_iter()
            .find(|l| l.name() == s.trim())
            .ok_or_else(|| CliError::Usage(format!("unknown layer `{}`", s.trim())))
    }
}

pub fn parse_layers(csv: &str) -> Result<BTreeSet<Layer>, CliError> {
    csv.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Parses comma-separated reals; a component may end in `pi` or `π`.
pub fn parse_reals(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            let (body, scale) = match s.strip_suffix("pi").or_else(|| s.strip_suffix('π')) {
                Some(b) => (b.trim().trim_end_matches('*'), std::f64::consts::PI),
                None => (s, 1.0),
            };
            let v = match body {
                "" => 1.0,
                "-" => -1.0,
                b => b.parse::<f64>().map_err(|_| CliError::Usage(format!("not a number: `{s}`")))?,
            };
            Ok(v * scale)
        })
        .collect()
}

pub fn parse_pair(text: &str, what: &str) -> Result<[f64; 2], CliError> {
    match parse_reals(text)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(CliError::Usage(format!("{what} expects two comma-separated values"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub residual_tol: f64,
    pub dedup_tol: f64,
    pub critical_tol: f64,
    /// Codual-line attribution distance, in raster cells.
    pub line_tol: f64,
    /// Distance to a critical value below which fiber queries are refused;
    /// defaults to two cells of the raster.
    pub exclusion_tol: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { residual_tol: 1e-12, dedup_tol: 1e-6, critical_tol: 1e-9, line_tol: 2.0, exclusion_tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Palette {
    pub background: String,
    /// Region fill by multiplicity, cycled.
    pub regions: Vec<String>,
    pub codual: String,
    pub critical: String,
    pub extra: String,
    pub amoeba: String,
    pub spine: String,
    pub alga: String,
    pub axes: String,
}

impl Default for Palette {
    fn default() -> Self {
        let s = |x: &str| x.to_string();
        Palette {
            background: s("#ffffff"),
            regions: vec![s("#9ecae1"), s("#fdae6b"), s("#a1d99b"), s("#bcbddc"), s("#fc9272")],
            codual: s("#1f4fd8"),
            critical: s("#d62728"),
            extra: s("#7f2704"),
            amoeba: s("#969696"),
            spine: s("#000000"),
            alga: s("#31a354"),
            axes: s("#333333"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FigureSpec {
    pub layers: BTreeSet<Layer>,
    pub palette: Palette,
    /// Side of one square panel, in pixels.
    pub panel: u32,
    pub margin: u32,
}

impl Default for FigureSpec {
    fn default() -> Self {
        FigureSpec {
            layers: [Layer::Coamoeba, Layer::Codual, Layer::Critical].into_iter().collect(),
            palette: Palette::default(),
            panel: 480,
            margin: 40,
        }
    }
}

impl FigureSpec {
    pub fn with_layers(layers: impl IntoIterator<Item = Layer>) -> Self {
        FigureSpec { layers: layers.into_iter().collect(), ..FigureSpec::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub polynomial: Option<String>,
    /// Half-width of the sampling window; `None` picks it from the polynomial.
    pub window: Option<f64>,
    pub nx: usize,
    pub ntheta: usize,
    pub resolution: usize,
    pub tolerances: Tolerances,
    pub thresholds: HarnackThresholds,
    pub out: PathBuf,
    pub seed: u64,
    /// Figure layers; `None` uses the command's defaults.
    pub layers: Option<BTreeSet<Layer>>,
    pub palette: Palette,
    pub panel: u32,
    pub theta: Option<[f64; 2]>,
    pub logpoint: Option<[f64; 2]>,
    pub t_sequence: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            polynomial: None,
            window: None,
            nx: 200,
            ntheta: 200,
            resolution: 512,
            tolerances: Tolerances::default(),
            thresholds: HarnackThresholds::default(),
            out: PathBuf::from("out"),
            seed: 0,
            layers: None,
            palette: Palette::default(),
            panel: 480,
            theta: None,
            logpoint: None,
            t_sequence: None,
        }
    }
}

impl RunConfig {
    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let toml = path.extension().is_some_and(|e| e == "toml");
        if toml {
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        } else {
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        for (name, v) in [("nx", self.nx), ("ntheta", self.ntheta), ("resolution", self.resolution)] {
            if v < 2 {
                return bad(format!("{name} must be at least 2, got {v}"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("residual_tol", t.residual_tol),
            ("dedup_tol", t.dedup_tol),
            ("critical_tol", t.critical_tol),
            ("line_tol", t.line_tol),
            ("exclusion_tol", t.exclusion_tol.unwrap_or(1.0)),
            ("phase_tol", self.thresholds.phase_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let th = &self.thresholds;
        if !(0.0 < th.inconclusive && th.inconclusive <= th.maximal) {
            return bad(format!(
                "thresholds must satisfy 0 < inconclusive ≤ maximal, got {} and {}",
                th.inconclusive, th.maximal
            ));
        }
        if th.probes == 0 {
            return bad("thresholds.probes must be positive".into());
        }
        if let Some(x) = self.window {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("window must be positive, got {x}"));
            }
        }
        if self.layers.as_ref().is_some_and(|l| l.is_empty()) {
            return bad("layer set is empty".into());
        }
        if self.panel < 16 {
            return bad(format!("panel must be at least 16 pixels, got {}", self.panel));
        }
        Ok(())
    }

    pub fn figure(&self, defaults: &[Layer]) -> FigureSpec {
        FigureSpec {
            layers: self.layers.clone().unwrap_or_else(|| defaults.iter().copied().collect()),
            palette: self.palette.clone(),
            panel: self.panel,
            ..FigureSpec::default()
        }
    }
}
