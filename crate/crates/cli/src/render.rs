//! Deterministic SVG figures: torus panel, quotient-torus panel, Log panel.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};
use std::fmt::Write;

use coamoeba_core::analysis::RegionReport;
use coamoeba_core::raster::TorusRaster;
use coamoeba_core::tropical::{CodualLine, EdgeKind, TropicalCurve};
use coamoeba_core::TorusPoint;
use thiserror::Error;

use crate::config::{FigureSpec, Layer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("layer `{0}` requested without its input")]
    MissingInput(Layer),
    #[error("figure has no layers")]
    NoLayers,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FigureInputs<'a> {
    pub raster: Option<&'a TorusRaster>,
    pub regions: Option<&'a RegionReport>,
    pub coduals: Option<&'a [CodualLine]>,
    pub critical_values: Option<&'a [TorusPoint]>,
    pub amoeba: Option<&'a [[f64; 2]]>,
    pub spine: Option<&'a TropicalCurve>,
    /// Half-width of the Log panel.
    pub window: f64,
}

const TORUS_LAYERS: [Layer; 4] = [Layer::Coamoeba, Layer::Codual, Layer::Critical, Layer::Extra];
const LOG_LAYERS: [Layer; 2] = [Layer::Amoeba, Layer::Spine];
const AMOEBA_BINS: usize = 200;

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn check_inputs(fig: &FigureSpec, inp: &FigureInputs<'_>) -> Result<(), RenderError> {
    if fig.layers.is_empty() {
        return Err(RenderError::NoLayers);
    }
    for &layer in &fig.layers {
        let ok = match layer {
            Layer::Coamoeba | Layer::Alga => inp.raster.is_some(),
            Layer::Codual => inp.coduals.is_some(),
            Layer::Critical => inp.raster.is_some() || inp.critical_values.is_some(),
            Layer::Extra => inp.regions.is_some(),
            Layer::Amoeba => inp.amoeba.is_some(),
            Layer::Spine => inp.spine.is_some(),
        };
        if !ok {
            return Err(RenderError::MissingInput(layer));
        }
    }
    Ok(())
}

/// Union of axis-aligned cells as one path: horizontal runs per grid row.
/// `cell(a, b)` is true when column `a`, row `b` (counted upwards) is set.
fn runs_path(n: usize, side: f64, cell: impl Fn(usize, usize) -> bool) -> String {
    let s = side / n as f64;
    let mut d = String::new();
    for b in (0..n).rev() {
        let y = side - (b + 1) as f64 * s;
        let mut a = 0;
        while a < n {
            if !cell(a, b) {
                a += 1;
                continue;
            }
            let start = a;
            while a < n && cell(a, b) {
                a += 1;
            }
            let w = (a - start) as f64 * s;
            let _ = write!(d, "M{} {}h{}v{}h{}z", num(start as f64 * s), num(y), num(w), num(s), num(-w));
        }
    }
    d
}

struct Panel {
    id: &'static str,
    title: &'static str,
    body: String,
}

fn torus_xy(side: f64, t: [f64; 2], period: f64) -> (f64, f64) {
    (t[0] / period * side, side - t[1] / period * side)
}

fn torus_panel(fig: &FigureSpec, inp: &FigureInputs<'_>) -> Panel {
    let side = fig.panel as f64;
    let pal = &fig.palette;
    let mut body = String::new();
    let fill = |m: u32| pal.regions[(m.max(1) as usize - 1) % pal.regions.len().max(1)].clone();

    if fig.layers.contains(&Layer::Coamoeba) {
        let r = inp.raster.expect("checked");
        let n = r.resolution;
        match inp.regions {
            Some(rep) => {
                let mut owned = vec![false; n * n];
                for (i, c) in rep.components.iter().enumerate() {
                    let mut mask = vec![false; n * n];
                    for &cell in &c.cells {
                        mask[cell as usize] = true;
                        owned[cell as usize] = true;
                    }
                    let d = runs_path(n, side, |a, b| mask[a * n + b]);
                    let _ = writeln!(
                        body,
                        r#"<path id="region-{i}" class="region" data-multiplicity="{}" fill="{}" stroke="none" d="{d}"/>"#,
                        c.multiplicity,
                        fill(c.multiplicity)
                    );
                }
                let rest = runs_path(n, side, |a, b| r.occupancy[a * n + b] && !owned[a * n + b]);
                if !rest.is_empty() {
                    let _ = writeln!(
                        body,
                        r#"<path id="coamoeba-residual" class="residual" fill="{}" fill-opacity="0.35" stroke="none" d="{rest}"/>"#,
                        fill(1)
                    );
                }
            }
            None => {
                let levels: BTreeSet<u32> =
                    (0..n * n).filter(|&c| r.occupancy[c]).map(|c| r.multiplicity(c).max(1)).collect();
                for m in levels {
                    let d = runs_path(n, side, |a, b| {
                        let c = a * n + b;
                        r.occupancy[c] && r.multiplicity(c).max(1) == m
                    });
                    let _ = writeln!(
                        body,
                        r#"<path id="coamoeba-m{m}" class="occupancy" data-multiplicity="{m}" fill="{}" stroke="none" d="{d}"/>"#,
                        fill(m)
                    );
                }
            }
        }
    }

    if fig.layers.contains(&Layer::Extra) {
        let rep = inp.regions.expect("checked");
        let n = rep.resolution;
        for (i, c) in rep.components.iter().enumerate().filter(|(_, c)| c.extra_piece) {
            let set: BTreeSet<u32> = c.cells.iter().copied().collect();
            let d = runs_path(n, side, |a, b| set.contains(&((a * n + b) as u32)));
            let _ = writeln!(body, r#"<path id="extra-{i}" class="extra" fill="url(#hatch)" stroke="none" d="{d}"/>"#);
        }
    }

    if fig.layers.contains(&Layer::Critical) {
        if let Some(r) = inp.raster {
            let n = r.resolution;
            let d = runs_path(n, side, |a, b| r.critical[a * n + b]);
            if !d.is_empty() {
                let _ = writeln!(
                    body,
                    r#"<path id="critical-cells" class="critical" fill="{}" stroke="none" d="{d}"/>"#,
                    pal.critical
                );
            }
        }
        if let Some(vals) = inp.critical_values {
            let marks: BTreeSet<(i64, i64)> = vals
                .iter()
                .map(|t| {
                    let (x, y) = torus_xy(side, [t.theta1, t.theta2], TAU);
                    ((x * 10.0).round() as i64, (y * 10.0).round() as i64)
                })
                .collect();
            for (k, (x, y)) in marks.into_iter().enumerate() {
                let _ = writeln!(
                    body,
                    r#"<circle id="critical-value-{k}" class="critical-value" cx="{}" cy="{}" r="3.00" fill="none" stroke="{}" stroke-width="1.50"/>"#,
                    num(x as f64 / 10.0),
                    num(y as f64 / 10.0),
                    pal.critical
                );
            }
        }
    }

    if fig.layers.contains(&Layer::Codual) {
        for (i, line) in inp.coduals.expect("checked").iter().enumerate() {
            let mut d = String::new();
            for (p, q) in line.segments_in_square() {
                let (x0, y0) = torus_xy(side, p, TAU);
                let (x1, y1) = torus_xy(side, q, TAU);
                let _ = write!(d, "M{} {}L{} {}", num(x0), num(y0), num(x1), num(y1));
            }
            let _ = writeln!(
                body,
                r#"<path id="codual-{i}" class="codual" data-external="{}" fill="none" stroke="{}" stroke-width="1.50" stroke-dasharray="6 4" d="{d}"/>"#,
                line.is_external, fig.palette.codual
            );
        }
    }
    Panel { id: "torus", title: "Arg", body }
}

fn alga_panel(fig: &FigureSpec, r: &TorusRaster) -> Panel {
    let side = fig.panel as f64;
    let n = r.resolution;
    let m = n.div_ceil(2);
    let mut folded = vec![0u32; m * m];
    for a in 0..n {
        for b in 0..n {
            let c = a * n + b;
            if r.occupancy[c] {
                let t = r.center(a, b);
                let q = |x: f64| (((x % PI) / PI * m as f64) as usize).min(m - 1);
                folded[q(t.theta1) * m + q(t.theta2)] += r.multiplicity(c).max(1);
            }
        }
    }
    let levels: BTreeSet<u32> = folded.iter().copied().filter(|&k| k > 0).collect();
    let mut body = String::new();
    for k in levels {
        let d = runs_path(m, side, |a, b| folded[a * m + b] == k);
        let _ = writeln!(
            body,
            r#"<path id="alga-m{k}" class="alga" data-count="{k}" fill="{}" fill-opacity="{}" stroke="none" d="{d}"/>"#,
            fig.palette.alga,
            num((0.25 * k as f64).min(1.0))
        );
    }
    Panel { id: "alga", title: "Arg mod π", body }
}

fn clip_ray(from: [f64; 2], dir: [f64; 2], x: f64) -> Option<[f64; 2]> {
    if from.iter().any(|c| c.abs() > x) {
        return None;
    }
    let t = (0..2)
        .filter(|&i| dir[i] != 0.0)
        .map(|i| (x * dir[i].signum() - from[i]) / dir[i])
        .fold(f64::INFINITY, f64::min);
    t.is_finite().then(|| [from[0] + t * dir[0], from[1] + t * dir[1]])
}

fn log_panel(fig: &FigureSpec, inp: &FigureInputs<'_>) -> Panel {
    let side = fig.panel as f64;
    let x = inp.window;
    let xy = |p: [f64; 2]| ((p[0] + x) / (2.0 * x) * side, side - (p[1] + x) / (2.0 * x) * side);
    let mut body = String::new();
    if fig.layers.contains(&Layer::Amoeba) {
        let mut bins = vec![false; AMOEBA_BINS * AMOEBA_BINS];
        for p in inp.amoeba.expect("checked") {
            let k = |c: f64| ((c + x) / (2.0 * x) * AMOEBA_BINS as f64).floor();
            let (a, b) = (k(p[0]), k(p[1]));
            if (0.0..AMOEBA_BINS as f64).contains(&a) && (0.0..AMOEBA_BINS as f64).contains(&b) {
                bins[a as usize * AMOEBA_BINS + b as usize] = true;
            }
        }
        let d = runs_path(AMOEBA_BINS, side, |a, b| bins[a * AMOEBA_BINS + b]);
        let _ =
            writeln!(body, r#"<path id="amoeba" class="amoeba" fill="{}" stroke="none" d="{d}"/>"#, fig.palette.amoeba);
    }
    if fig.layers.contains(&Layer::Spine) {
        let curve = inp.spine.expect("checked");
        let _ = writeln!(body, r#"<g id="spine" stroke="{}" fill="none">"#, fig.palette.spine);
        for (i, e) in curve.edges.iter().enumerate() {
            let dir = [e.direction[0] as f64, e.direction[1] as f64];
            let seg = match e.kind {
                EdgeKind::Bounded { from, to } => Some((curve.vertices[from].position, curve.vertices[to].position)),
                EdgeKind::Ray { from } => {
                    let v = curve.vertices[from].position;
                    clip_ray(v, dir, x).map(|q| (v, q))
                }
                EdgeKind::Line { point } => clip_ray(point, dir, x).zip(clip_ray(point, [-dir[0], -dir[1]], x)),
            };
            if let Some((p, q)) = seg {
                let ((x0, y0), (x1, y1)) = (xy(p), xy(q));
                let _ = writeln!(
                    body,
                    r#"<line id="spine-edge-{i}" class="spine-edge" data-weight="{}" x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="{}"/>"#,
                    e.weight,
                    num(x0),
                    num(y0),
                    num(x1),
                    num(y1),
                    num(1.5 * e.weight as f64)
                );
            }
        }
        for (i, v) in curve.vertices.iter().enumerate() {
            let (cx, cy) = xy(v.position);
            let _ = writeln!(
                body,
                r#"<circle id="spine-vertex-{i}" class="spine-vertex" data-multiplicity="{}" cx="{}" cy="{}" r="3.00" fill="{}"/>"#,
                v.multiplicity,
                num(cx),
                num(cy),
                fig.palette.spine
            );
        }
        body.push_str("</g>\n");
    }
    Panel { id: "log", title: "Log", body }
}

fn pi_label(k: usize) -> &'static str {
    ["0", "π/2", "π", "3π/2", "2π"][k]
}

fn log_ticks(x: f64) -> Vec<f64> {
    let raw = x / 2.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|s| s * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let k = (x / step).floor() as i64;
    (-k..=k).map(|i| i as f64 * step).collect()
}

/// Frame, ticks and labels; `ticks` maps pixel offsets to labels.
fn axes(out: &mut String, side: f64, color: &str, ticks: &[(f64, String)]) {
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="0" y="0" width="{}" height="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
        num(side),
        num(side)
    );
    let _ = writeln!(out, r#"<g class="ticks" stroke="{color}" font-size="12" font-family="sans-serif">"#);
    for (p, label) in ticks {
        let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#, num(*p), num(side), num(side + 5.0));
        let _ = writeln!(out, r#"<line x1="-5.00" y1="{0}" x2="0.00" y2="{0}"/>"#, num(side - p));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" stroke="none" fill="{color}">{label}</text>"#,
            num(*p),
            num(side + 18.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="-8.00" y="{}" text-anchor="end" stroke="none" fill="{color}">{label}</text>"#,
            num(side - p + 4.0)
        );
    }
    out.push_str("</g>\n");
}

/// Renders the requested layers into one SVG document.
pub fn render(fig: &FigureSpec, inp: &FigureInputs<'_>) -> Result<String, RenderError> {
    check_inputs(fig, inp)?;
    let side = fig.panel as f64;
    let margin = fig.margin as f64;
    let mut panels = Vec::new();
    let mut ticks: BTreeMap<&'static str, Vec<(f64, String)>> = BTreeMap::new();
    if TORUS_LAYERS.iter().any(|l| fig.layers.contains(l)) {
        panels.push(torus_panel(fig, inp));
        ticks.insert("torus", (0..=4).map(|k| (k as f64 * side / 4.0, pi_label(k).to_string())).collect());
    }
    if fig.layers.contains(&Layer::Alga) {
        panels.push(alga_panel(fig, inp.raster.expect("checked")));
        ticks.insert("alga", (0..=2).map(|k| (k as f64 * side / 2.0, pi_label(k).to_string())).collect());
    }
    if LOG_LAYERS.iter().any(|l| fig.layers.contains(l)) {
        panels.push(log_panel(fig, inp));
        let x = inp.window;
        ticks.insert("log", log_ticks(x).into_iter().map(|t| ((t + x) / (2.0 * x) * side, format!("{t}"))).collect());
    }
    let width = margin + panels.len() as f64 * (side + margin);
    let height = side + 2.0 * margin;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        num(width),
        num(height)
    );
    if fig.layers.contains(&Layer::Extra) {
        let _ = writeln!(
            out,
            r#"<defs><pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6"><path d="M0 6L6 0" stroke="{}" stroke-width="1.2"/></pattern></defs>"#,
            fig.palette.extra
        );
    }
    let _ = writeln!(out, r#"<rect id="background" width="100%" height="100%" fill="{}"/>"#, fig.palette.background);
    for (k, p) in panels.iter().enumerate() {
        let x0 = margin + k as f64 * (side + margin);
        let _ = writeln!(out, r#"<g id="panel-{}" transform="translate({},{})">"#, p.id, num(x0), num(margin));
        let _ = writeln!(
            out,
            r#"<text class="title" x="{}" y="-10.00" text-anchor="middle" font-size="14" font-family="sans-serif">{}</text>"#,
            num(side / 2.0),
            p.title
        );
        out.push_str(&p.body);
        axes(&mut out, side, &fig.palette.axes, &ticks[p.id]);
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
