use std::cell::OnceCell;
use std::collections::BTreeSet;
use std::f64::consts::{E, PI, TAU};
use std::path::PathBuf;

use coamoeba_core::analysis::{
    check_alga_identity, check_fiber_constancy, check_prime_area_criterion, harnack_test_with, region_decomposition,
    HarnackReport, HarnackThresholds, RegionParams, RegionReport,
};
use coamoeba_core::curve::{
    cloud_csv, critical_points, critical_values_arg, default_window, sample_curve, CriticalPoint, CurvePointCloud,
    GridSpec,
};
use coamoeba_core::measure::{alga_area, area_mult_coamoeba, AreaReport, FiberCounter};
use coamoeba_core::raster::{hausdorff_raster_distance, TorusRaster};
use coamoeba_core::tropical::{
    codual_lines, order_map_with, ronkin_gradient, ronkin_value, spine, spine_with, tropical_limit_run, CodualLine,
    Spine, DEFAULT_RONKIN_ORDER,
};
use coamoeba_core::{alga_project, Error, LatticePoint, NewtonPolygon, Polynomial, TorusPoint};
use serde_json::{json, Value};

use crate::config::{Layer, RunConfig};
use crate::render::{render, FigureInputs};
use crate::{write_atomic, CliError, Command};

/// Angle in units of π, rounded to 6 decimals.
pub fn pi6(x: f64) -> f64 {
    let v = (x / PI * 1e6).round() / 1e6;
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn torus_pi(t: &TorusPoint) -> Value {
    json!([pi6(t.theta1), pi6(t.theta2)])
}

fn lattice(a: &LatticePoint) -> Value {
    json!([a.i, a.j])
}

/// A domain failure of a sub-query becomes part of the report.
fn outcome(r: Result<Value, Error>) -> Value {
    r.unwrap_or_else(|e| json!({"error": {"kind": e.kind(), "message": e.to_string()}}))
}

/// Lazily computed pipeline stages shared by the commands.
pub struct Context<'c> {
    pub cfg: &'c RunConfig,
    pub poly: Polynomial,
    pub grid: GridSpec,
    cloud: OnceCell<CurvePointCloud>,
    critical: OnceCell<Vec<CriticalPoint>>,
    raster: OnceCell<TorusRaster>,
    spine: OnceCell<Spine>,
    coduals: OnceCell<Vec<CodualLine>>,
    regions: OnceCell<RegionReport>,
    area: OnceCell<AreaReport>,
    harnack: OnceCell<HarnackReport>,
}

fn cached<'a, T>(cell: &'a OnceCell<T>, f: impl FnOnce() -> Result<T, Error>) -> Result<&'a T, Error> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

impl<'c> Context<'c> {
    pub fn new(cfg: &'c RunConfig) -> Result<Self, CliError> {
        let text = cfg.polynomial.as_deref().ok_or_else(|| CliError::Usage("no polynomial given (--poly)".into()))?;
        let poly = Polynomial::parse(text)?;
        let grid = GridSpec::new(cfg.window.unwrap_or_else(|| default_window(&poly)), cfg.nx, cfg.ntheta)?;
        Ok(Context {
            cfg,
            poly,
            grid,
            cloud: OnceCell::new(),
            critical: OnceCell::new(),
            raster: OnceCell::new(),
            spine: OnceCell::new(),
            coduals: OnceCell::new(),
            regions: OnceCell::new(),
            area: OnceCell::new(),
            harnack: OnceCell::new(),
        })
    }

    pub fn cloud(&self) -> Result<&CurvePointCloud, Error> {
        cached(&self.cloud, || sample_curve(&self.poly, &self.grid))
    }

    pub fn critical(&self) -> Result<&[CriticalPoint], Error> {
        let cloud = self.cloud()?;
        cached(&self.critical, || Ok(critical_points(cloud, self.cfg.tolerances.critical_tol))).map(Vec::as_slice)
    }

    pub fn counter(&self) -> Result<FiberCounter<'_>, Error> {
        let t = &self.cfg.tolerances;
        let mut c = FiberCounter::new(self.cloud()?, self.critical()?)
            .with_exclusion_tol(t.exclusion_tol.unwrap_or(2.0 * TAU / self.cfg.resolution as f64));
        c.residual_tol = t.residual_tol;
        c.dedup_tol = t.dedup_tol;
        Ok(c)
    }

    pub fn raster(&self) -> Result<&TorusRaster, Error> {
        let cloud = self.cloud()?;
        cached(&self.raster, || Ok(TorusRaster::from_cloud(cloud, self.cfg.resolution)))
    }

    pub fn spine(&self) -> Result<&Spine, Error> {
        cached(&self.spine, || {
            if self.poly.len() == 1 {
                return spine(&self.poly);
            }
            spine_with(&self.poly, &self.counter()?, self.grid.window)
        })
    }

    pub fn coduals(&self) -> Result<&[CodualLine], Error> {
        let dual = &self.spine()?.curve.dual;
        cached(&self.coduals, || codual_lines(&self.poly, dual)).map(Vec::as_slice)
    }

    pub fn regions(&self) -> Result<&RegionReport, Error> {
        cached(&self.regions, || {
            let params = RegionParams { line_tol_cells: self.cfg.tolerances.line_tol, ..RegionParams::default() };
            let values = critical_values_arg(self.critical()?);
            region_decomposition(self.raster()?, &values, self.coduals()?, Some(&self.counter()?), &params)
        })
    }

    pub fn area(&self) -> Result<&AreaReport, Error> {
        cached(&self.area, || area_mult_coamoeba(&self.poly, &self.grid))
    }

    pub fn harnack(&self) -> Result<&HarnackReport, Error> {
        let th = HarnackThresholds { seed: self.cfg.seed, ..self.cfg.thresholds };
        cached(&self.harnack, || harnack_test_with(&self.poly, &self.grid, &th))
    }

    /// Renders the configured layers, or `defaults` when none are configured.
    pub fn figure(&self, defaults: &[Layer]) -> Result<String, CliError> {
        let fig = self.cfg.figure(defaults);
        let has = |l: Layer| fig.layers.contains(&l);
        let amoeba: Vec<[f64; 2]>;
        let critical_values: Vec<TorusPoint>;
        let mut inp = FigureInputs { window: self.grid.window, ..FigureInputs::default() };
        if has(Layer::Coamoeba) || has(Layer::Alga) || has(Layer::Critical) {
            inp.raster = Some(self.raster()?);
        }
        if has(Layer::Extra) {
            inp.regions = Some(self.regions()?);
        } else if has(Layer::Coamoeba) {
            // regions only refine the drawing; fall back to plain occupancy
            inp.regions = self.regions().ok();
        }
        if has(Layer::Codual) {
            inp.coduals = Some(self.coduals()?);
        }
        if has(Layer::Critical) {
            critical_values = critical_values_arg(self.critical()?);
            inp.critical_values = Some(&critical_values);
        }
        if has(Layer::Amoeba) {
            amoeba = self.cloud()?.points().filter(|p| !p.singular).map(|p| p.log()).collect();
            inp.amoeba = Some(&amoeba);
        }
        if has(Layer::Spine) {
            inp.spine = Some(&self.spine()?.curve);
        }
        Ok(render(&fig, &inp)?)
    }

    fn config_json(&self) -> Value {
        let c = self.cfg;
        json!({
            "window": self.grid.window,
            "nx": c.nx,
            "ntheta": c.ntheta,
            "resolution": c.resolution,
            "tolerances": c.tolerances,
            "thresholds": HarnackThresholds { seed: c.seed, ..c.thresholds },
            "seed": c.seed,
            "layers": c.layers,
        })
    }
}

/// What a run wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub report: Value,
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }
}

fn newton_json(p: &Polynomial) -> Value {
    let poly = NewtonPolygon::of(p);
    json!({
        "support": p.support().iter().map(lattice).collect::<Vec<_>>(),
        "vertices": poly.vertices.iter().map(lattice).collect::<Vec<_>>(),
        "area": poly.euclidean_area,
        "twice_area": poly.twice_area(),
        "degenerate": poly.is_degenerate(),
        "maximally_sparse": p.is_maximally_sparse(),
    })
}

fn distinct_torus(points: &[TorusPoint]) -> Vec<Value> {
    let set: BTreeSet<(i64, i64)> = points
        .iter()
        .map(|t| ((pi6(t.theta1) * 1e6).round() as i64 % 2_000_000, (pi6(t.theta2) * 1e6).round() as i64 % 2_000_000))
        .collect();
    set.into_iter().map(|(a, b)| json!([a as f64 / 1e6, b as f64 / 1e6])).collect()
}

fn sample_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let cloud = ctx.cloud()?;
    let crit = ctx.critical()?;
    let values = critical_values_arg(crit);
    Ok(json!({
        "grid": ctx.grid,
        "points": cloud.len(),
        "singular": cloud.singular_count(),
        "critical_points": crit.len(),
        "degenerate_critical_points": crit.iter().filter(|c| c.degenerate).count(),
        "critical_values_pi": distinct_torus(&values),
    }))
}

fn logpoint_json(ctx: &Context<'_>, x: [f64; 2]) -> Result<Value, Error> {
    let counter = ctx.counter()?;
    let count = counter.log_fiber_count(x);
    let order = order_map_with(&counter, &ctx.poly, x).map(|a| lattice(&a));
    let ronkin = ronkin_value(&ctx.poly, x, DEFAULT_RONKIN_ORDER)
        .map(|r| json!({"value": r.value, "disagreement": r.disagreement}));
    let gradient = ronkin_gradient(&ctx.poly, x, DEFAULT_RONKIN_ORDER).map(|g| json!(g));
    Ok(json!({
        "point": x,
        "log_fiber_count": outcome(count.map(|n| json!(n))),
        "order": outcome(order),
        "ronkin": outcome(ronkin),
        "ronkin_gradient": outcome(gradient),
    }))
}

fn theta_json(ctx: &Context<'_>, theta: [f64; 2]) -> Result<Value, Error> {
    let counter = ctx.counter()?;
    let t = TorusPoint::new(theta[0], theta[1]);
    let count = counter.arg_fiber_count(t);
    let q = alga_project(t);
    let quotient: Result<usize, Error> = [(0.0, 0.0), (PI, 0.0), (0.0, PI), (PI, PI)]
        .into_iter()
        .map(|(a, b)| counter.arg_fiber_count(TorusPoint::new(q.eta1 + a, q.eta2 + b)))
        .sum();
    Ok(json!({
        "theta_pi": torus_pi(&t),
        "arg_fiber_count": outcome(count.map(|n| json!(n))),
        "quotient_fiber_count": outcome(quotient.map(|n| json!(n))),
        "distance_to_critical_value": counter.distance_to_critical_value(&t),
    }))
}

fn amoeba_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let cloud = ctx.cloud()?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in cloud.points().filter(|p| !p.singular) {
        let x = p.log();
        for i in 0..2 {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    let mut v = json!({
        "grid": ctx.grid,
        "points": cloud.len(),
        "bounding_box": {"min": lo, "max": hi},
    });
    if let Some(x) = ctx.cfg.logpoint {
        v["logpoint"] = logpoint_json(ctx, x)?;
    }
    Ok(v)
}

fn coamoeba_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let r = ctx.raster()?;
    let cell = r.cell_width();
    let occupied = r.occupied_count();
    let mut v = json!({
        "resolution": r.resolution,
        "occupied_cells": occupied,
        "critical_cells": r.critical.iter().filter(|c| **c).count(),
        "occupied_area": occupied as f64 * cell * cell,
        "multiplicity_area": r.density.iter().map(|d| d.round()).sum::<f64>() * cell * cell,
    });
    if let Some(t) = ctx.cfg.theta {
        v["theta"] = theta_json(ctx, t)?;
    }
    Ok(v)
}

fn area_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let a = ctx.area()?;
    let alga = alga_area(&ctx.poly, ctx.cloud()?, ctx.cfg.resolution.max(64))?;
    Ok(json!({
        "area_mult": a.area_mult,
        "bound": a.bound,
        "ratio": a.ratio,
        "quad_error": a.quadrature_error,
        "area_mult_over_pi2": a.area_mult / (PI * PI),
        "alga_area": alga,
        "alga_area_over_pi2": alga / (PI * PI),
    }))
}

fn spine_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let s = ctx.spine()?;
    let balancing: Vec<Value> = (0..s.curve.vertices.len()).map(|v| json!(s.curve.balancing_defect(v))).collect();
    let mut v = json!({
        "curve": s.curve.to_json(),
        "balancing_defects": balancing,
        "components": s.components.iter().map(|c| json!({
            "alpha": lattice(&c.alpha),
            "probes": c.probes.len(),
            "spread": c.spread,
        })).collect::<Vec<_>>(),
        "unrealized": s.unrealized.iter().map(lattice).collect::<Vec<_>>(),
    });
    if let Some(x) = ctx.cfg.logpoint {
        v["logpoint"] = logpoint_json(ctx, x)?;
    }
    Ok(v)
}

fn codual_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let lines = ctx.coduals()?;
    Ok(json!({
        "subdivision": ctx.spine()?.curve.dual.cells.iter().map(|c| c.iter().map(lattice).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "lines": lines.iter().map(|l| json!({
            "alpha": lattice(&l.alpha),
            "beta": lattice(&l.beta),
            "normal": l.normal,
            "offset_pi": pi6(l.offset),
            "external": l.is_external,
        })).collect::<Vec<_>>(),
    }))
}

fn harnack_json(h: &HarnackReport) -> Value {
    json!({
        "verdict": h.verdict,
        "ratio": h.ratio,
        "area_mult": h.area_mult,
        "bound": h.bound,
        "max_log_fiber": h.max_log_fiber,
        "real_torus_phase": h.real_torus_phase.map(|p| json!({
            "phi0_pi": pi6(p.phi0),
            "phi_pi": [pi6(p.phi[0]), pi6(p.phi[1])],
            "residual": p.residual,
        })),
        "thresholds": h.thresholds,
    })
}

fn regions_json(rep: &RegionReport) -> Value {
    json!({
        "resolution": rep.resolution,
        "global_k_constant": rep.global_k_constant,
        "global_alga_k": rep.global_alga_k,
        "has_extra_piece": rep.has_extra_piece(),
        "dropped_cells": rep.dropped_cells,
        "params": rep.params,
        "components": rep.components.iter().map(|c| json!({
            "cells": c.cells.len(),
            "multiplicity": c.multiplicity,
            "area": c.area,
            "k": c.k,
            "k_samples": c.k_samples,
            "alga_samples": c.alga_samples,
            "sample_points_pi": c.sample_points.iter().map(torus_pi).collect::<Vec<_>>(),
            "arcs": c.arcs,
            "extra_piece": c.extra_piece,
        })).collect::<Vec<_>>(),
    })
}

fn extras_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let rep = ctx.regions()?;
    let polygon = NewtonPolygon::of(&ctx.poly);
    let constancy = check_fiber_constancy(rep, &polygon);
    let verdict = ctx.harnack().map(|h| h.verdict).ok();
    let alga = ctx
        .area()
        .and_then(|a| Ok((a.area_mult, alga_area(&ctx.poly, ctx.cloud()?, ctx.cfg.resolution.max(64))?)))
        .and_then(|(mult, alga)| check_alga_identity(&ctx.poly, rep, alga, mult, verdict))
        .map(|v| json!(v));
    let prime = match verdict {
        Some(v) => ctx.spine().and_then(|s| check_prime_area_criterion(&ctx.poly, &s.curve, rep, v)).map(|v| json!(v)),
        None => Err(Error::NotApplicable("no Harnack verdict".into())),
    };
    let mut v = json!({
        "regions": regions_json(rep),
        "fiber_constancy": constancy,
        "alga_identity": outcome(alga),
        "prime_area_criterion": outcome(prime),
        "harnack_verdict": verdict,
    });
    if let Some(t) = ctx.cfg.theta {
        v["theta"] = theta_json(ctx, t)?;
    }
    Ok(v)
}

fn deform_json(ctx: &Context<'_>) -> Result<Value, Error> {
    let ts =
        ctx.cfg.t_sequence.clone().unwrap_or_else(|| vec![1.0 / E, 1.0 / (2.0 * E), 1.0 / (4.0 * E), 1.0 / (8.0 * E)]);
    let lifting = ctx.spine()?.full_lifting(&ctx.poly);
    let steps = tropical_limit_run(&ctx.poly, &lifting, &ts, ctx.cfg.resolution)?;
    let cell = TAU / ctx.cfg.resolution as f64;
    let first_to_last = match (steps.first(), steps.last()) {
        (Some(a), Some(b)) => hausdorff_raster_distance(&a.raster, &b.raster)?,
        _ => 0.0,
    };
    Ok(json!({
        "lifting": lifting.iter().map(|(a, c)| json!({"alpha": lattice(a), "c": c})).collect::<Vec<_>>(),
        "steps": steps.iter().map(|s| json!({
            "t": s.t,
            "occupied_cells": s.raster.occupied_count(),
            "hausdorff": s.distance,
            "hausdorff_cells": s.distance / cell,
        })).collect::<Vec<_>>(),
        "first_to_last_cells": first_to_last / cell,
    }))
}

const COAMOEBA_LAYERS: [Layer; 2] = [Layer::Coamoeba, Layer::Critical];
const CODUAL_LAYERS: [Layer; 2] = [Layer::Coamoeba, Layer::Codual];
const EXTRAS_LAYERS: [Layer; 4] = [Layer::Coamoeba, Layer::Codual, Layer::Critical, Layer::Extra];
const LOG_LAYERS: [Layer; 2] = [Layer::Amoeba, Layer::Spine];
const REPORT_LAYERS: [Layer; 7] =
    [Layer::Amoeba, Layer::Coamoeba, Layer::Spine, Layer::Codual, Layer::Critical, Layer::Extra, Layer::Alga];

fn raster_images(ctx: &Context<'_>, out: &mut Artifacts) -> Result<(), CliError> {
    let r = ctx.raster()?;
    let n = r.resolution as u32;
    let img = image::GrayImage::from_raw(n, n, r.density_image()).expect("square image");
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| CliError::Io(format!("png encoding: {e}")))?;
    out.add("coamoeba.png", png);
    out.add("coamoeba.pgm", r.to_pgm());
    Ok(())
}

fn execute(cmd: Command, ctx: &Context<'_>, out: &mut Artifacts) -> Result<Value, CliError> {
    let explicit_layers = ctx.cfg.layers.is_some();
    let figure_defaults: Option<&[Layer]> = match cmd {
        Command::Amoeba => Some(&[Layer::Amoeba]),
        Command::Spine => Some(&LOG_LAYERS),
        Command::Coamoeba => Some(&COAMOEBA_LAYERS),
        Command::Codual => Some(&CODUAL_LAYERS),
        Command::Extras => Some(&EXTRAS_LAYERS),
        Command::Report => Some(&REPORT_LAYERS),
        _ if explicit_layers => Some(&[]),
        _ => None,
    };
    let result = match cmd {
        Command::Newton => newton_json(&ctx.poly),
        Command::Sample => {
            let v = sample_json(ctx)?;
            out.add("cloud.csv", cloud_csv(ctx.cloud()?, ctx.critical()?).into_bytes());
            v
        }
        Command::Amoeba => amoeba_json(ctx)?,
        Command::Coamoeba => {
            raster_images(ctx, out)?;
            coamoeba_json(ctx)?
        }
        Command::Area => area_json(ctx)?,
        Command::Spine => spine_json(ctx)?,
        Command::Codual => codual_json(ctx)?,
        Command::Extras => extras_json(ctx)?,
        Command::Harnack => harnack_json(ctx.harnack()?),
        Command::Deform => deform_json(ctx)?,
        Command::Report => {
            raster_images(ctx, out)?;
            json!({
                "newton": newton_json(&ctx.poly),
                "sample": sample_json(ctx)?,
                "area": outcome(area_json(ctx)),
                "harnack": outcome(ctx.harnack().map(harnack_json)),
                "spine": outcome(spine_json(ctx)),
                "codual": outcome(codual_json(ctx)),
                "extras": outcome(extras_json(ctx)),
                "coamoeba": coamoeba_json(ctx)?,
            })
        }
    };
    if let Some(defaults) = figure_defaults {
        out.add("figure.svg", ctx.figure(defaults)?.into_bytes());
    }
    Ok(result)
}

/// Runs one command and writes its artifacts plus `report.json` into
/// `cfg.out`. Nothing is written when the command fails.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let ctx = Context::new(cfg)?;
    let mut files = Artifacts { files: Vec::new() };
    let result = execute(cmd, &ctx, &mut files)?;
    let mut names: Vec<&str> = files.files.iter().map(|(n, _)| n.as_str()).collect();
    names.push("report.json");
    let report = json!({
        "command": cmd.name(),
        "input": cfg.polynomial,
        "polynomial": ctx.poly.to_string(),
        "config": ctx.config_json(),
        "result": result,
        "artifacts": names,
    });
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::Io(format!("{}: {e}", cfg.out.display())))?;
    let mut artifacts = Vec::new();
    for (name, bytes) in &files.files {
        artifacts.push(write_atomic(&cfg.out, name, bytes)?);
    }
    let mut text = serde_json::to_string_pretty(&report).expect("serializable report");
    text.push('\n');
    artifacts.push(write_atomic(&cfg.out, "report.json", text.as_bytes())?);
    Ok(Outcome { artifacts, report })
}
