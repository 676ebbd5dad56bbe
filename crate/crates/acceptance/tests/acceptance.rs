//! End-to-end acceptance: one PASS/FAIL line per criterion, nonzero exit on
//! any failure.

use std::f64::consts::{E, PI, TAU};
use std::time::Instant;

use coamoeba_acceptance::{
    bilinear_fiber_count, cell_centers, distance_to_half_lattice, linear_fiber_count, torus_line_distance,
};
use coamoeba_cli::{run, Command, RunConfig};
use coamoeba_core::analysis::{
    check_alga_identity, check_fiber_constancy, harnack_test, region_decomposition, HarnackVerdict, RegionParams,
    RegionReport,
};
use coamoeba_core::curve::{
    critical_points, critical_values_arg, jacobian_determinants, sample_curve, CurvePointCloud, GridSpec,
};
use coamoeba_core::measure::{alga_area, area_mult_coamoeba, FiberCounter, DEFAULT_CRITICAL_TOL, DEFAULT_RESOLUTION};
use coamoeba_core::raster::TorusRaster;
use coamoeba_core::tropical::{codual_lines, spine, tropical_limit_run, EdgeKind};
use coamoeba_core::{Error, LatticePoint, NewtonPolygon, Polynomial, TorusPoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<(bool, String), Error>;

const LINE: &str = "1 + z + w";
const NONREAL_QUADRIC: &str = "1 + e^(i*pi/3)*z + w + e^(i*pi/7)*z*w";
/// Non-real instance with lens-shaped extra-pieces.
const LENS_QUADRIC: &str = "1 + z + w + i*z*w";

fn poly(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

struct Pipeline {
    poly: Polynomial,
    cloud: CurvePointCloud,
}

impl Pipeline {
    fn new(s: &str) -> Result<Self, Error> {
        let p = poly(s);
        let cloud = sample_curve(&p, &GridSpec::for_polynomial(&p))?;
        Ok(Pipeline { poly: p, cloud })
    }

    fn regions(&self) -> Result<RegionReport, Error> {
        let crit = critical_points(&self.cloud, DEFAULT_CRITICAL_TOL);
        let counter = FiberCounter::new(&self.cloud, &crit);
        let raster = TorusRaster::from_cloud(&self.cloud, DEFAULT_RESOLUTION);
        let coduals = codual_lines(&self.poly, &spine(&self.poly)?.curve.dual)?;
        region_decomposition(&raster, &critical_values_arg(&crit), &coduals, Some(&counter), &RegionParams::default())
    }
}

/// The three codual lines of the line, as `(normal, offset)`.
const LINE_CODUALS: [([f64; 2], f64); 3] = [([1.0, 0.0], PI), ([0.0, 1.0], PI), ([1.0, -1.0], PI)];

fn near_line_codual(t: [f64; 2], tol: f64) -> bool {
    LINE_CODUALS.iter().any(|(n, c)| torus_line_distance(t, *n, *c) <= tol)
}

fn standard_line_area() -> Outcome {
    let p = poly(LINE);
    let start = Instant::now();
    let a = area_mult_coamoeba(&p, &GridSpec::for_polynomial(&p))?;
    let secs = start.elapsed().as_secs_f64();
    let rel = (a.area_mult - PI * PI).abs() / (PI * PI);
    Ok((rel <= 0.01 && secs < 60.0, format!("area_mult {:.6} (rel err {rel:.2e}), {secs:.1} s", a.area_mult)))
}

fn two_triangles() -> Outcome {
    let pipe = Pipeline::new(LINE)?;
    let rep = pipe.regions()?;
    let n = rep.resolution;
    let cell = TAU / n as f64;
    let half = PI * PI / 2.0;
    let areas: Vec<f64> = rep.components.iter().map(|c| c.area).collect();
    let areas_ok = areas.len() == 2 && areas.iter().all(|a| (a - half).abs() <= 0.02 * half);
    // every cell on a component boundary lies within 2 cells of a codual line
    let mut far = 0;
    let mut boundary = 0;
    for c in &rep.components {
        let set: std::collections::HashSet<u32> = c.cells.iter().copied().collect();
        for &k in &c.cells {
            let (a, b) = (k as usize / n, k as usize % n);
            let on_edge = [(1, 0), (n - 1, 0), (0, 1), (0, n - 1)]
                .iter()
                .any(|(da, db)| !set.contains(&((((a + da) % n) * n + (b + db) % n) as u32)));
            if on_edge {
                boundary += 1;
                let t = [(a as f64 + 0.5) * cell, (b as f64 + 0.5) * cell];
                if !near_line_codual(t, 2.0 * cell) {
                    far += 1;
                }
            }
        }
    }
    let classes: Vec<String> =
        rep.components.iter().flat_map(|c| c.arcs.iter().map(|a| format!("{:?}:{}", a.class, a.cells))).collect();
    Ok((
        areas_ok && far == 0,
        format!(
            "{} components, areas {areas:.4?}, {far}/{boundary} boundary cells off the codual lines; arcs {classes:?}",
            areas.len()
        ),
    ))
}

fn jacobian_identity() -> Outcome {
    let polys = [LINE, "1 + 2*z + 3*w - 0.5*z*w", LENS_QUADRIC, NONREAL_QUADRIC, "1 + z^2*w + z*w^2 - 4*z*w"];
    let results: Vec<Result<(usize, usize, usize, usize, f64, f64), Error>> = polys
        .par_iter()
        .map(|s| {
            let p = poly(s);
            let grid = GridSpec::new(GridSpec::for_polynomial(&p).window, 50, 50)?;
            let cloud = sample_curve(&p, &grid)?;
            let (mut n, mut bad_pair, mut bad_rel) = (0, 0, 0);
            let (mut worst_pair, mut worst_rel) = (0.0f64, 0.0f64);
            for pt in cloud.points().filter(|q| !q.singular) {
                let Some(j) = jacobian_determinants(&p, pt, pt.base, 1e-3) else { continue };
                n += 1;
                let pair = (j.det_arg - j.det_log).abs();
                let rel = (j.det_arg.abs() - j.im_m.abs()).abs() / j.im_m.abs();
                worst_pair = worst_pair.max(pair);
                worst_rel = worst_rel.max(rel);
                bad_pair += usize::from(pair > 1e-9);
                bad_rel += usize::from(!(rel <= 1e-6));
            }
            let mut crit_bad = 0;
            let crit = critical_points(&cloud, DEFAULT_CRITICAL_TOL);
            for c in crit.iter().filter(|c| !c.degenerate) {
                match jacobian_determinants(&p, &c.point, c.point.base, 1e-3) {
                    Some(j) if j.det_arg.abs() < 1e-8 && j.det_log.abs() < 1e-8 => {}
                    _ => crit_bad += 1,
                }
            }
            Ok((n, bad_pair, bad_rel, crit_bad, worst_pair, worst_rel))
        })
        .collect();
    let mut total = 0;
    let mut fails = Vec::new();
    let (mut wp, mut wr) = (0.0f64, 0.0f64);
    for (s, r) in polys.iter().zip(results) {
        let (n, bp, br, bc, p, q) = r?;
        total += n;
        wp = wp.max(p);
        wr = wr.max(q);
        if bp + br + bc > 0 {
            fails.push(format!("{s}: {bp} pair, {br} relative, {bc} critical"));
        }
    }
    Ok((
        total >= 10_000 && fails.is_empty(),
        format!("{total} samples, worst |Δdet| {wp:.1e}, worst rel {wr:.1e}; failures {fails:?}"),
    ))
}

fn harnack_critical_values() -> Outcome {
    let pipe = Pipeline::new(LINE)?;
    let crit = critical_points(&pipe.cloud, DEFAULT_CRITICAL_TOL);
    let worst =
        critical_values_arg(&crit).iter().map(|t| distance_to_half_lattice([t.theta1, t.theta2])).fold(0.0, f64::max);
    Ok((
        !crit.is_empty() && worst <= 1e-6,
        format!("{} critical values, max distance to {{0,π}}² {worst:.2e}", crit.len()),
    ))
}

/// Agreement of `arg_fiber_count` with an oracle on the regular points of
/// the 64 × 64 grid: (agreeing, compared, disagreeing points).
fn oracle_agreement(
    counter: &FiberCounter<'_>,
    oracle: impl Fn([f64; 2]) -> usize + Sync,
) -> (usize, usize, Vec<([f64; 2], usize, usize)>) {
    let rows: Vec<_> = cell_centers(64)
        .into_par_iter()
        .filter_map(|t| match counter.arg_fiber_count(TorusPoint::new(t[0], t[1])) {
            Ok(k) => Some((t, k, oracle(t))),
            Err(_) => None,
        })
        .collect();
    let bad: Vec<_> = rows.iter().filter(|(_, k, o)| k != o).copied().collect();
    (rows.len() - bad.len(), rows.len(), bad)
}

fn fiber_count_oracle() -> Outcome {
    let pipe = Pipeline::new(LINE)?;
    let crit = critical_points(&pipe.cloud, DEFAULT_CRITICAL_TOL);
    let counter = FiberCounter::new(&pipe.cloud, &crit);
    let one = Complex64::new(1.0, 0.0);
    let (agree, total, bad) = oracle_agreement(&counter, |t| linear_fiber_count(one, one, t));
    let cell = TAU / 64.0;
    let bad_far = bad.iter().filter(|(t, _, _)| !near_line_codual(*t, 2.0 * cell)).count();
    let interior_ok = cell_centers(64)
        .into_iter()
        .filter(|t| linear_fiber_count(one, one, *t) == 1 && !near_line_codual(*t, 2.0 * cell))
        .all(|t| counter.arg_fiber_count(TorusPoint::new(t[0], t[1])).map_or(false, |k| k == 1));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let logs: Vec<[f64; 2]> = pipe.cloud.points().filter(|p| !p.singular).map(|p| p.log()).collect();
    let (mut probed, mut max_log) = (0, 0);
    for _ in 0..2000 {
        if probed == 100 {
            break;
        }
        if let Ok(k) = counter.log_fiber_count(logs[rng.gen_range(0..logs.len())]) {
            probed += 1;
            max_log = max_log.max(k);
        }
    }
    let frac = agree as f64 / total as f64;
    Ok((
        frac >= 0.995 && bad_far == 0 && interior_ok && probed == 100 && max_log <= 2,
        format!(
            "agreement {agree}/{total} ({:.3}%), {bad_far} disagreements off the boundary, interior k = 1: {interior_ok}, max log fiber {max_log} over {probed} points",
            100.0 * frac
        ),
    ))
}

fn random_polynomial(rng: &mut ChaCha8Rng, support: &[(i64, i64)]) -> Polynomial {
    Polynomial::from_terms(support.iter().map(|&(i, j)| {
        let c = Complex64::from_polar(rng.gen_range(-1.0f64..1.0).exp(), rng.gen_range(0.0..TAU));
        (LatticePoint::new(i, j), c)
    }))
    .unwrap()
}

fn area_bound() -> Outcome {
    let shapes: [&[(i64, i64)]; 3] = [
        &[(0, 0), (1, 0), (0, 1)],
        &[(0, 0), (1, 0), (0, 1), (1, 1)],
        &[(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let polys: Vec<Polynomial> =
        shapes.iter().flat_map(|s| (0..20).map(|_| random_polynomial(&mut rng, s)).collect::<Vec<_>>()).collect();
    let ratios: Vec<Result<f64, Error>> =
        polys.par_iter().map(|p| area_mult_coamoeba(p, &GridSpec::for_polynomial(p)).map(|a| a.ratio)).collect();
    let mut worst = 0.0f64;
    let mut errors = Vec::new();
    for (p, r) in polys.iter().zip(ratios) {
        match r {
            Ok(x) => worst = worst.max(x),
            Err(e) => errors.push(format!("{p}: {e}")),
        }
    }
    let p = poly(NONREAL_QUADRIC);
    let deficit = area_mult_coamoeba(&p, &GridSpec::for_polynomial(&p))?.ratio;
    Ok((
        errors.is_empty() && worst <= 1.02 && deficit <= 0.98,
        format!(
            "max ratio over 60 random polynomials {worst:.5}, non-real quadric ratio {deficit:.5}; errors {errors:?}"
        ),
    ))
}

fn alga_identity() -> Outcome {
    let pipe = Pipeline::new(LINE)?;
    let rep = pipe.regions()?;
    let area = area_mult_coamoeba(&pipe.poly, &pipe.cloud.grid)?.area_mult;
    let alga = alga_area(&pipe.poly, &pipe.cloud, DEFAULT_RESOLUTION)?;
    let v = check_alga_identity(&pipe.poly, &rep, alga, area, None)?;
    let alga_ok = (alga - PI * PI).abs() <= 0.02 * PI * PI;
    Ok((
        v.k == 1 && v.identity_holds && alga_ok,
        format!("k {}, alga area {alga:.5} (π² {:.5}), residual {:.2e}", v.k, PI * PI, v.relative_residual),
    ))
}

fn line_spine() -> Outcome {
    let s = spine(&poly(LINE))?;
    let c = &s.curve;
    let vertex_ok = c.vertices.len() == 1 && {
        let v = c.vertices[0];
        v.position[0].hypot(v.position[1]) <= 0.05 && v.multiplicity == 1
    };
    let mut dirs: Vec<[i64; 2]> = c.rays().map(|e| e.direction).collect();
    dirs.sort();
    let rays_ok = dirs == vec![[-1, 0], [0, -1], [1, 1]]
        && c.edges.iter().all(|e| matches!(e.kind, EdgeKind::Ray { .. }) && e.weight == 1);
    let balanced = (0..c.vertices.len()).all(|v| c.balancing_defect(v) == [0, 0]);
    let spread = s.components.iter().map(|p| p.spread).fold(0.0, f64::max);
    let probes_ok = s.components.len() == 3 && s.components.iter().all(|p| p.probes.len() >= 5);
    Ok((
        vertex_ok && rays_ok && balanced && probes_ok && spread < 1e-3,
        format!(
            "vertices {:?}, ray directions {dirs:?}, balanced {balanced}, max c spread {spread:.1e}",
            c.vertices.iter().map(|v| (v.position, v.multiplicity)).collect::<Vec<_>>()
        ),
    ))
}

fn deformation() -> Outcome {
    let p = poly(LINE);
    let lifting = spine(&p)?.full_lifting(&p);
    let ts = [1.0 / E, 1.0 / (2.0 * E), 1.0 / (4.0 * E), 1.0 / (8.0 * E)];
    let steps = tropical_limit_run(&p, &lifting, &ts, DEFAULT_RESOLUTION)?;
    let cell = TAU / DEFAULT_RESOLUTION as f64;
    let cells: Vec<f64> = steps.iter().skip(1).map(|s| s.distance / cell).collect();
    Ok((cells.iter().all(|d| *d <= 2.0), format!("successive Hausdorff distances {cells:?} cells")))
}

fn extra_piece_soundness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let harnack_suite = [LINE, "1 + 2*z + 3*w - 0.5*z*w", "1 + z^2*w + z*w^2 - 4*z*w"];
    for s in harnack_suite {
        let pipe = Pipeline::new(s)?;
        let verdict = harnack_test(&pipe.poly)?.verdict;
        let rep = pipe.regions()?;
        let fine = verdict == HarnackVerdict::MaximalHarnack && !rep.has_extra_piece();
        ok &= fine;
        let eq = check_fiber_constancy(&rep, &NewtonPolygon::of(&pipe.poly)).equivalence_holds;
        if s == LINE {
            ok &= eq;
        }
        notes.push(format!("{s}: {verdict:?}, extra {}, equivalence {eq}", rep.has_extra_piece()));
    }
    let pipe = Pipeline::new(LENS_QUADRIC)?;
    let crit = critical_points(&pipe.cloud, DEFAULT_CRITICAL_TOL);
    let counter = FiberCounter::new(&pipe.cloud, &crit);
    let one = Complex64::new(1.0, 0.0);
    let (agree, total, _) = oracle_agreement(&counter, |t| bilinear_fiber_count(one, one, Complex64::new(0.0, 1.0), t));
    let validated = agree as f64 >= 0.995 * total as f64;
    let rep = pipe.regions()?;
    let extras = rep.components.iter().filter(|c| c.extra_piece).count();
    let v = check_fiber_constancy(&rep, &NewtonPolygon::of(&pipe.poly));
    ok &= validated && extras >= 1 && v.equivalence_holds;
    notes.push(format!(
        "{LENS_QUADRIC}: oracle agreement {agree}/{total}, {extras} extra-pieces, k constant {}, equivalence {}",
        v.k_constant, v.equivalence_holds
    ));
    Ok((ok, notes.join("; ")))
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = RunConfig { polynomial: Some(LENS_QUADRIC.into()), seed: 0, ..RunConfig::default() };
    let mut files = Vec::new();
    for dir in [&a, &b] {
        cfg.out = dir.path().to_path_buf();
        run(Command::Report, &cfg).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
        files.push((read("report.json"), read("figure.svg")));
    }
    let same = files[0] == files[1];
    Ok((
        same,
        format!("report.json {} bytes, figure.svg {} bytes, identical {same}", files[0].0.len(), files[0].1.len()),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("standard line area", standard_line_area),
        ("two-triangle structure", two_triangles),
        ("Jacobian identity", jacobian_identity),
        ("Harnack critical values", harnack_critical_values),
        ("fiber-count oracle", fiber_count_oracle),
        ("area bound", area_bound),
        ("Alga identity", alga_identity),
        ("spine of the line", line_spine),
        ("deformation consistency", deformation),
        ("extra-piece detector", extra_piece_soundness),
        ("determinism", determinism),
    ];
    let results: Vec<Outcome> = criteria.par_iter().map(|(_, f)| f()).collect();
    let mut failed = 0;
    for (k, ((name, _), r)) in criteria.iter().zip(results).enumerate() {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!pass);
        println!("criterion {:>2} {} {name}: {detail}", k + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
