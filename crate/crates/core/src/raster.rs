//! Coamoeba rasters on the argument torus and their Hausdorff distance.
//!
//! A raster is built from the chart meshes of a sampled curve. Each grid
//! quad of a chart, with its sheets matched across the four corners, is
//! split into two triangles whose Arg images are drawn in the universal
//! cover of the torus. A triangle adds its chart weight to every cell whose
//! centre it covers, so `density` estimates the Arg-fiber cardinality, and
//! marks the cells along its realness zero crossing critical.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{from_chart, match_sheets, track, CurvePoint, CurvePointCloud};
use crate::error::{Error, Result};
use crate::poly::{Chart, Polynomial};
use crate::torus::{angle_diff, TorusPoint};

/// Image edges longer than this many cells trigger subdivision.
const MAX_EDGE_CELLS: f64 = 4.0;
const MAX_DEPTH: u32 = 6;
/// Quads whose slope in the chart exceeds this are left to the other chart.
const MAX_CHART_SLOPE: f64 = 20.0;

/// Regular `N × N` grid over `[0, 2π)²`; cell `(a, b)` covers
/// `θ1 ∈ [a, a+1)·2π/N`, `θ2 ∈ [b, b+1)·2π/N` and is stored at `a·N + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusRaster {
    pub resolution: usize,
    pub occupancy: Vec<bool>,
    pub density: Vec<f64>,
    pub critical: Vec<bool>,
}

#[derive(Clone, Copy)]
struct Vertex {
    u: Complex64,
    v: Complex64,
    s: f64,
    weight: f64,
}

struct Contribution {
    cell: u32,
    weight: f64,
    critical: bool,
}

impl TorusRaster {
    pub fn empty(resolution: usize) -> Self {
        let n = resolution * resolution;
        TorusRaster { resolution, occupancy: vec![false; n], density: vec![0.0; n], critical: vec![false; n] }
    }

    pub fn cell_width(&self) -> f64 {
        TAU / self.resolution as f64
    }

    pub fn index(&self, a: usize, b: usize) -> usize {
        a * self.resolution + b
    }

    pub fn cell_of(&self, t: &TorusPoint) -> (usize, usize) {
        let n = self.resolution;
        let f = |x: f64| ((x / TAU * n as f64).floor() as i64).rem_euclid(n as i64) as usize;
        (f(t.theta1), f(t.theta2))
    }

    pub fn center(&self, a: usize, b: usize) -> TorusPoint {
        let w = self.cell_width();
        TorusPoint::new((a as f64 + 0.5) * w, (b as f64 + 0.5) * w)
    }

    /// Rounded density: the estimated number of Arg preimages of the cell centre.
    pub fn multiplicity(&self, cell: usize) -> u32 {
        self.density[cell].round().max(0.0) as u32
    }

    /// Marks single cells as occupied.
    pub fn splat(&mut self, points: &[TorusPoint]) {
        for p in points {
            let (a, b) = self.cell_of(p);
            let c = self.index(a, b);
            self.occupancy[c] = true;
        }
    }

    /// Rasterizes the chart meshes of `cloud`.
    pub fn from_cloud(cloud: &CurvePointCloud, resolution: usize) -> Self {
        let mut r = TorusRaster::empty(resolution);
        let grid = cloud.grid;
        let jobs: Vec<(usize, usize)> =
            (0..2).flat_map(|c| (0..grid.nx.saturating_sub(1)).map(move |k| (c, k))).collect();
        let parts: Vec<Vec<Contribution>> = jobs
            .par_iter()
            .map(|&(c, k)| {
                let mut out = Vec::new();
                for l in 0..grid.ntheta {
                    quad_contributions(cloud, c, k, l, resolution, &mut out);
                }
                out
            })
            .collect();
        for part in parts {
            for c in part {
                let cell = c.cell as usize;
                r.density[cell] += c.weight;
                if c.critical {
                    r.critical[cell] = true;
                }
            }
        }
        let splats: Vec<TorusPoint> = cloud.points().filter(|p| !p.singular).map(|p| p.arg()).collect();
        r.splat(&splats);
        for c in 0..r.density.len() {
            if r.density[c] >= 0.5 {
                r.occupancy[c] = true;
            }
        }
        r
    }

    /// Square dilation of a cell mask by `radius` cells, with wraparound.
    pub fn dilate(&self, mask: &[bool], radius: usize) -> Vec<bool> {
        let n = self.resolution;
        let r = radius as isize;
        let mut out = vec![false; n * n];
        for a in 0..n {
            for b in 0..n {
                if !mask[a * n + b] {
                    continue;
                }
                for da in -r..=r {
                    for db in -r..=r {
                        let x = (a as isize + da).rem_euclid(n as isize) as usize;
                        let y = (b as isize + db).rem_euclid(n as isize) as usize;
                        out[x * n + y] = true;
                    }
                }
            }
        }
        out
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    /// Row-major 8-bit image of the density, `θ2` increasing upwards.
    pub fn density_image(&self) -> Vec<u8> {
        let n = self.resolution;
        let max = self.density.iter().cloned().fold(0.0, f64::max);
        let mut px = Vec::with_capacity(n * n);
        for row in 0..n {
            let b = n - 1 - row;
            for a in 0..n {
                let d = self.density[a * n + b];
                px.push(if max > 0.0 { (d / max * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 });
            }
        }
        px
    }

    /// Binary PGM (P5) of the density.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.resolution;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        out.extend(self.density_image());
        out
    }
}

fn chart_weight(p: &CurvePoint, chart: Chart) -> f64 {
    let (a, b) = (p.zfz.norm_sqr(), p.wfw.norm_sqr());
    match chart {
        Chart::Z => b / (a + b),
        Chart::W => a / (a + b),
    }
}

fn vertex(p: &CurvePoint, chart: Chart, u: Complex64, v_ref: Option<Complex64>) -> Vertex {
    let v = p.log_other(chart);
    let v = match v_ref {
        Some(r) => Complex64::new(v.re, r.im + angle_diff(v.im, r.im)),
        None => v,
    };
    Vertex { u, v, s: p.realness(), weight: chart_weight(p, chart) }
}

fn quad_contributions(cloud: &CurvePointCloud, c: usize, k: usize, l: usize, n: usize, out: &mut Vec<Contribution>) {
    let sample = &cloud.charts[c];
    let chart = sample.chart;
    let grid = &cloud.grid;
    let l1 = (l + 1) % grid.ntheta;
    let p00 = sample.node(grid, k, l);
    let p10 = sample.node(grid, k + 1, l);
    let p01 = sample.node(grid, k, l1);
    let p11 = sample.node(grid, k + 1, l1);
    let m_a = match_sheets(p00, p10, chart);
    let m_b = match_sheets(p00, p01, chart);
    let m_c = match_sheets(p10, p11, chart);
    let m_d = match_sheets(p01, p11, chart);
    let find = |m: &[(usize, usize)], i: usize| m.iter().find(|(a, _)| *a == i).map(|(_, b)| *b);
    let (x0, x1) = (grid.x(k), grid.x(k + 1));
    let (t0, t1) = (grid.theta(l), grid.theta(l) + grid.dtheta());
    for i in 0..p00.len() {
        let (Some(j10), Some(j01)) = (find(&m_a, i), find(&m_b, i)) else { continue };
        let (Some(j11), Some(j11b)) = (find(&m_c, j10), find(&m_d, j01)) else { continue };
        if j11 != j11b {
            continue;
        }
        let corners = [&p00[i], &p10[j10], &p11[j11], &p01[j01]];
        if corners.iter().any(|p| p.singular || p.slope_in(chart).norm() > MAX_CHART_SLOPE) {
            continue;
        }
        let a = vertex(corners[0], chart, Complex64::new(x0, t0), None);
        let b = vertex(corners[1], chart, Complex64::new(x1, t0), Some(a.v));
        let cc = vertex(corners[2], chart, Complex64::new(x1, t1), Some(a.v));
        let d = vertex(corners[3], chart, Complex64::new(x0, t1), Some(a.v));
        for tri in [[a, b, cc], [a, cc, d]] {
            draw_triangle(&cloud.poly, chart, tri, 0, n, out);
        }
    }
}

fn image(chart: Chart, v: &Vertex) -> [f64; 2] {
    match chart {
        Chart::Z => [v.u.im, v.v.im],
        Chart::W => [v.v.im, v.u.im],
    }
}

fn midpoint(p: &Polynomial, chart: Chart, a: &Vertex, b: &Vertex) -> Option<Vertex> {
    let u = (a.u + b.u) * 0.5;
    let guess = (a.v + b.v) * 0.5;
    let v = track(p, chart, u, guess)?;
    if (v - guess).norm() > 0.5 {
        return None;
    }
    let (z, w) = from_chart(chart, u, v);
    let q = CurvePoint::new(p, z, w, chart, (0, 0));
    if q.singular {
        return None;
    }
    Some(Vertex { u, v, s: q.realness(), weight: chart_weight(&q, chart) })
}

fn draw_triangle(p: &Polynomial, chart: Chart, t: [Vertex; 3], depth: u32, n: usize, out: &mut Vec<Contribution>) {
    let cell = TAU / n as f64;
    let pts = [image(chart, &t[0]), image(chart, &t[1]), image(chart, &t[2])];
    // Each edge is split on its own length, so both triangles sharing an
    // edge split it the same way and the mesh stays crack-free.
    let long: Vec<bool> = (0..3)
        .map(|e| {
            let (q, r) = (pts[e], pts[(e + 1) % 3]);
            (q[0] - r[0]).hypot(q[1] - r[1]) > MAX_EDGE_CELLS * cell
        })
        .collect();
    if long.iter().any(|l| *l) && depth < MAX_DEPTH {
        let mid = |e: usize| {
            let (a, b) = (&t[e], &t[(e + 1) % 3]);
            let curved = if long[e] { midpoint(p, chart, a, b) } else { None };
            curved.unwrap_or(Vertex {
                u: (a.u + b.u) * 0.5,
                v: (a.v + b.v) * 0.5,
                s: (a.s + b.s) * 0.5,
                weight: (a.weight + b.weight) * 0.5,
            })
        };
        let (ab, bc, ca) = (mid(0), mid(1), mid(2));
        for sub in [[t[0], ab, ca], [ab, t[1], bc], [ca, bc, t[2]], [ab, bc, ca]] {
            draw_triangle(p, chart, sub, depth + 1, n, out);
        }
        return;
    }
    let signs: Vec<bool> = t.iter().map(|v| v.s > 0.0).collect();
    let critical = signs.iter().any(|s| *s != signs[0]);
    let weight = (t[0].weight + t[1].weight + t[2].weight) / 3.0;
    let wrap = |i: i64| i.rem_euclid(n as i64) as u32;
    if critical {
        // the zero set of the realness is the segment joining the two
        // sign-change points on the edges
        let crossings: Vec<[f64; 2]> = (0..3)
            .filter(|&e| signs[e] != signs[(e + 1) % 3])
            .map(|e| {
                let (sa, sb) = (t[e].s, t[(e + 1) % 3].s);
                let f = if sa == sb { 0.5 } else { sa / (sa - sb) };
                let (q, r) = (pts[e], pts[(e + 1) % 3]);
                [q[0] + f * (r[0] - q[0]), q[1] + f * (r[1] - q[1])]
            })
            .collect();
        if let [q, r] = crossings[..] {
            let steps = ((q[0] - r[0]).hypot(q[1] - r[1]) / (0.25 * cell)).ceil().max(1.0) as usize;
            for k in 0..=steps {
                let f = k as f64 / steps as f64;
                let a = wrap(((q[0] + f * (r[0] - q[0])) / cell).floor() as i64);
                let b = wrap(((q[1] + f * (r[1] - q[1])) / cell).floor() as i64);
                out.push(Contribution { cell: a * n as u32 + b, weight: 0.0, critical: true });
            }
        }
    }
    let lo = |k: usize| pts.iter().map(|q| q[k]).fold(f64::INFINITY, f64::min);
    let hi = |k: usize| pts.iter().map(|q| q[k]).fold(f64::NEG_INFINITY, f64::max);
    let (i0, i1) = ((lo(0) / cell - 0.5).ceil() as i64, (hi(0) / cell - 0.5).floor() as i64);
    let (j0, j1) = ((lo(1) / cell - 0.5).ceil() as i64, (hi(1) / cell - 0.5).floor() as i64);
    if i1 - i0 > n as i64 / 2 || j1 - j0 > n as i64 / 2 {
        return;
    }
    let edge = |a: [f64; 2], b: [f64; 2], q: [f64; 2]| (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
    let area = edge(pts[0], pts[1], pts[2]);
    if area == 0.0 {
        return;
    }
    let orient = area.signum();
    for i in i0..=i1 {
        for j in j0..=j1 {
            let q = [(i as f64 + 0.5) * cell, (j as f64 + 0.5) * cell];
            let inside = (0..3).all(|e| orient * edge(pts[e], pts[(e + 1) % 3], q) >= 0.0);
            if inside {
                out.push(Contribution { cell: wrap(i) * n as u32 + wrap(j), weight, critical: false });
            }
        }
    }
}

/// Exact 1-D squared distance transform (lower envelope of parabolas).
fn dt1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![f64::INFINITY; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(q) => q,
        None => return d,
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] is −∞, so this stops at k = 0
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
    d
}

/// Periodic squared distance (in cells²) to the nearest set cell.
pub(crate) fn periodic_edt(mask: &[bool], n: usize) -> Vec<f64> {
    let mut g = vec![f64::INFINITY; n * n];
    let mut line = vec![f64::INFINITY; 3 * n];
    for a in 0..n {
        for t in 0..3 * n {
            line[t] = if mask[a * n + t % n] { 0.0 } else { f64::INFINITY };
        }
        let d = dt1d(&line);
        g[a * n..(a + 1) * n].copy_from_slice(&d[n..2 * n]);
    }
    let mut out = vec![f64::INFINITY; n * n];
    for b in 0..n {
        for t in 0..3 * n {
            line[t] = g[(t % n) * n + b];
        }
        let d = dt1d(&line);
        for a in 0..n {
            out[a * n + b] = d[n + a];
        }
    }
    out
}

/// Symmetric Hausdorff distance between occupied sets under the flat metric.
pub fn hausdorff_raster_distance(a: &TorusRaster, b: &TorusRaster) -> Result<f64> {
    if a.resolution != b.resolution {
        return Err(Error::ResolutionMismatch(a.resolution, b.resolution));
    }
    let n = a.resolution;
    let (ea, eb) = (a.occupied_count() == 0, b.occupied_count() == 0);
    if ea && eb {
        return Ok(0.0);
    }
    if ea || eb {
        return Ok(f64::INFINITY);
    }
    let da = periodic_edt(&a.occupancy, n);
    let db = periodic_edt(&b.occupancy, n);
    let mut worst = 0.0f64;
    for c in 0..n * n {
        if a.occupancy[c] {
            worst = worst.max(db[c]);
        }
        if b.occupancy[c] {
            worst = worst.max(da[c]);
        }
    }
    Ok(worst.sqrt() * a.cell_width())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{sample_curve, GridSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn hausdorff_examples() {
        let mut a = TorusRaster::empty(64);
        let mut b = TorusRaster::empty(64);
        assert_eq!(hausdorff_raster_distance(&a, &b).unwrap(), 0.0);
        a.splat(&[TorusPoint::new(0.0, 0.0)]);
        assert_eq!(hausdorff_raster_distance(&a, &b).unwrap(), f64::INFINITY);
        b.splat(&[TorusPoint::new(PI, PI)]);
        let d = hausdorff_raster_distance(&a, &b).unwrap();
        assert!((d - PI * 2f64.sqrt()).abs() <= a.cell_width(), "{d}");
        assert_eq!(hausdorff_raster_distance(&a, &a).unwrap(), 0.0);
        assert!(matches!(
            hausdorff_raster_distance(&a, &TorusRaster::empty(32)),
            Err(Error::ResolutionMismatch(64, 32))
        ));
    }

    fn brute_force(a: &TorusRaster, b: &TorusRaster) -> f64 {
        let n = a.resolution as i64;
        let cells = |r: &TorusRaster| -> Vec<(i64, i64)> {
            (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .filter(|&(x, y)| r.occupancy[(x * n + y) as usize])
                .collect()
        };
        let (ca, cb) = (cells(a), cells(b));
        let d = |p: (i64, i64), q: (i64, i64)| {
            let dx = (p.0 - q.0).rem_euclid(n).min((q.0 - p.0).rem_euclid(n));
            let dy = (p.1 - q.1).rem_euclid(n).min((q.1 - p.1).rem_euclid(n));
            ((dx * dx + dy * dy) as f64).sqrt()
        };
        let one = |x: &[(i64, i64)], y: &[(i64, i64)]| {
            x.iter().map(|p| y.iter().map(|q| d(*p, *q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
        };
        one(&ca, &cb).max(one(&cb, &ca)) * a.cell_width()
    }

    proptest! {
        #[test]
        fn edt_matches_brute_force(pa in proptest::collection::vec((0usize..24, 0usize..24), 1..8),
                                   pb in proptest::collection::vec((0usize..24, 0usize..24), 1..8)) {
            let mut a = TorusRaster::empty(24);
            let mut b = TorusRaster::empty(24);
            for (x, y) in pa { a.occupancy[x * 24 + y] = true; }
            for (x, y) in pb { b.occupancy[x * 24 + y] = true; }
            let fast = hausdorff_raster_distance(&a, &b).unwrap();
            prop_assert!((fast - brute_force(&a, &b)).abs() < 1e-9);
        }
    }

    #[test]
    fn line_raster_has_unit_multiplicity() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let cloud = sample_curve(&p, &GridSpec::for_polynomial(&p)).unwrap();
        let r = TorusRaster::from_cloud(&cloud, 256);
        let cell = r.cell_width();
        let area: f64 = (0..r.density.len()).map(|c| r.density[c]).sum::<f64>() * cell * cell;
        assert!((area - PI * PI).abs() < 0.01 * PI * PI, "{area}");
        assert!(r.density.iter().all(|d| *d < 1.5));
        // every critical cell is close to one of the three corner values
        let corners = [TorusPoint::new(PI, 0.0), TorusPoint::new(PI, PI), TorusPoint::new(0.0, PI)];
        for a in 0..256 {
            for b in 0..256 {
                if r.critical[r.index(a, b)] {
                    let c = r.center(a, b);
                    assert!(corners.iter().any(|k| k.distance(&c) < 0.2), "{c:?}");
                }
            }
        }
        let pgm = r.to_pgm();
        assert!(pgm.starts_with(b"P5\n256 256\n255\n"));
        assert_eq!(pgm.len(), 15 + 256 * 256);
    }
}
