//! Ronkin function, order map, amoeba spine, codual lines and the
//! tropical-limit deformation experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::curve::{critical_points, default_window, sample_curve, CurvePointCloud, GridSpec};
use crate::error::{Error, Result};
use crate::measure::{pairwise_sum, FiberCounter, DEFAULT_CRITICAL_TOL};
use crate::newton::NewtonPolygon;
use crate::poly::{LatticePoint, Polynomial};
use crate::raster::{hausdorff_raster_distance, TorusRaster};
use crate::torus::TorusPoint;

/// Quadrature order used for Ronkin values and order-map gradients.
pub const DEFAULT_RONKIN_ORDER: usize = 128;
/// Weight of the quadratic tie-breaking term added to the lifting.
pub const LIFTING_EPSILON: f64 = 1e-9;
/// Golden ratio; `α ↦ (α1 + φ α2)²` is injective on lattice lines.
const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RonkinValue {
    pub value: f64,
    /// `|R_M − R_2M|`
    pub disagreement: f64,
}

fn torus_mean<F>(p: &Polynomial, x: [f64; 2], m: usize, g: F) -> Result<Vec<f64>>
where
    F: Fn(Complex64, Complex64, &crate::poly::Evaluation) -> Vec<f64> + Sync,
{
    let (r1, r2) = (x[0].exp(), x[1].exp());
    let rows: Vec<Result<Vec<Vec<f64>>>> = (0..m)
        .into_par_iter()
        .map(|a| {
            let t1 = (a as f64 + 0.5) * TAU / m as f64;
            (0..m)
                .map(|b| {
                    let t2 = (b as f64 + 0.5) * TAU / m as f64;
                    let (z, w) = (Complex64::from_polar(r1, t1), Complex64::from_polar(r2, t2));
                    let ev = p.eval_log(z, w);
                    if ev.f.norm() < 1e-13 * ev.scale {
                        return Err(Error::FiberHitsZeroLocus);
                    }
                    Ok(g(z, w, &ev))
                })
                .collect()
        })
        .collect();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        for vals in row? {
            if columns.is_empty() {
                columns = vec![Vec::with_capacity(m * m); vals.len()];
            }
            for (c, v) in columns.iter_mut().zip(vals) {
                c.push(v);
            }
        }
    }
    Ok(columns.iter().map(|c| pairwise_sum(c) / (m * m) as f64).collect())
}

/// Mean of `log|f|` over the fiber torus above `x`, at orders `M` and `2M`.
pub fn ronkin_value(p: &Polynomial, x: [f64; 2], m: usize) -> Result<RonkinValue> {
    if m < 2 {
        return Err(Error::InvalidArgument("quadrature order must be at least 2".into()));
    }
    let f = |_: Complex64, _: Complex64, ev: &crate::poly::Evaluation| vec![ev.f.norm().ln()];
    let coarse = torus_mean(p, x, m, f)?[0];
    let fine = torus_mean(p, x, 2 * m, f)?[0];
    Ok(RonkinValue { value: fine, disagreement: (fine - coarse).abs() })
}

/// Gradient of the Ronkin function: the torus mean of `(Re zf_z/f, Re wf_w/f)`.
pub fn ronkin_gradient(p: &Polynomial, x: [f64; 2], m: usize) -> Result<[f64; 2]> {
    let g = torus_mean(p, x, m, |_, _, ev| vec![(ev.zfz / ev.f).re, (ev.wfw / ev.f).re])?;
    Ok([g[0], g[1]])
}

/// Order of the amoeba complement component containing `x`.
pub fn order_map_with(counter: &FiberCounter<'_>, p: &Polynomial, x: [f64; 2]) -> Result<LatticePoint> {
    let n = counter.log_fiber_count(x)?;
    if n > 0 {
        return Err(Error::InsideAmoeba(n));
    }
    let g = ronkin_gradient(p, x, DEFAULT_RONKIN_ORDER)?;
    let alpha = LatticePoint::new(g[0].round() as i64, g[1].round() as i64);
    if (g[0] - alpha.i as f64).hypot(g[1] - alpha.j as f64) > 0.2 {
        return Err(Error::AmbiguousRounding(g[0], g[1]));
    }
    Ok(alpha)
}

pub fn order_map(p: &Polynomial, x: [f64; 2], cloud: &CurvePointCloud) -> Result<LatticePoint> {
    let crit = critical_points(cloud, DEFAULT_CRITICAL_TOL);
    order_map_with(&FiberCounter::new(cloud, &crit), p, x)
}

/// Regular subdivision of Δ induced by a lifting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSubdivision {
    /// Lattice polygons (triangles after tie-breaking), counterclockwise.
    pub cells: Vec<Vec<LatticePoint>>,
    pub lifting: BTreeMap<LatticePoint, f64>,
}

impl DualSubdivision {
    /// Distinct cell edges `(α, β)` with `α < β`; for a one-dimensional
    /// subdivision, the consecutive segments.
    pub fn edges(&self) -> Vec<(LatticePoint, LatticePoint)> {
        let mut set = BTreeSet::new();
        for cell in &self.cells {
            let n = cell.len();
            if n == 2 {
                set.insert((cell[0].min(cell[1]), cell[0].max(cell[1])));
                continue;
            }
            for k in 0..n {
                let (a, b) = (cell[k], cell[(k + 1) % n]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    pub fn two_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.len() >= 3).count()
    }
}

fn perturbed(alpha: LatticePoint, c: f64) -> f64 {
    let q = alpha.i as f64 + GOLDEN * alpha.j as f64;
    c - LIFTING_EPSILON * q * q
}

fn twice_signed_area(a: LatticePoint, b: LatticePoint, c: LatticePoint) -> i64 {
    (b.i - a.i) * (c.j - a.j) - (b.j - a.j) * (c.i - a.i)
}

/// Upper-hull subdivision of the lifted points `(α, c_α − ε(α1 + φα2)²)`.
pub fn regular_subdivision(lifting: &BTreeMap<LatticePoint, f64>) -> DualSubdivision {
    let pts: Vec<(LatticePoint, f64)> = lifting.iter().map(|(a, c)| (*a, perturbed(*a, *c))).collect();
    let n = pts.len();
    let hull = NewtonPolygon::hull(&pts.iter().map(|p| p.0).collect::<Vec<_>>());
    let mut cells = Vec::new();
    if n >= 2 && hull.is_degenerate() {
        // collinear support: the upper hull of a planar point set
        let (a, b) = (hull.vertices[0], hull.vertices[hull.vertices.len() - 1]);
        let dir = [(b.i - a.i) as f64, (b.j - a.j) as f64];
        let mut line: Vec<(f64, f64, LatticePoint)> =
            pts.iter().map(|(p, h)| ((p.i - a.i) as f64 * dir[0] + (p.j - a.j) as f64 * dir[1], *h, *p)).collect();
        line.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut upper: Vec<(f64, f64, LatticePoint)> = Vec::new();
        for p in line {
            while upper.len() >= 2 {
                let (o, q) = (upper[upper.len() - 2], upper[upper.len() - 1]);
                let cross = (q.0 - o.0) * (p.1 - o.1) - (q.1 - o.1) * (p.0 - o.0);
                if cross >= 0.0 {
                    upper.pop();
                } else {
                    break;
                }
            }
            upper.push(p);
        }
        for w in upper.windows(2) {
            cells.push(vec![w[0].2, w[1].2]);
        }
        return DualSubdivision { cells, lifting: lifting.clone() };
    }
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let (pa, pb, pc) = (pts[a], pts[b], pts[c]);
                let det = twice_signed_area(pa.0, pb.0, pc.0);
                if det == 0 {
                    continue;
                }
                // plane h = h_a + g·(α − α_a)
                let (u, v) = (pb.0.sub(pa.0), pc.0.sub(pa.0));
                let (du, dv) = (pb.1 - pa.1, pc.1 - pa.1);
                let g0 = (du * v.j as f64 - dv * u.j as f64) / det as f64;
                let g1 = (dv * u.i as f64 - du * v.i as f64) / det as f64;
                let upper = pts.iter().enumerate().all(|(k, (q, h))| {
                    if k == a || k == b || k == c {
                        return true;
                    }
                    let d = q.sub(pa.0);
                    let plane = pa.1 + g0 * d.i as f64 + g1 * d.j as f64;
                    *h < plane - 1e-15 * (1.0 + plane.abs())
                });
                if upper {
                    let mut cell = vec![pa.0, pb.0, pc.0];
                    if det < 0 {
                        cell.swap(1, 2);
                    }
                    cells.push(cell);
                }
            }
        }
    }
    DualSubdivision { cells, lifting: lifting.clone() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TropicalVertex {
    pub position: [f64; 2],
    /// Twice the Euclidean area of the dual cell.
    pub multiplicity: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeKind {
    Bounded {
        from: usize,
        to: usize,
    },
    Ray {
        from: usize,
    },
    /// A whole line through `point`; occurs for collinear supports.
    Line {
        point: [f64; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TropicalEdge {
    pub kind: EdgeKind,
    /// Primitive integer direction, from `from` towards `to` or along the ray.
    pub direction: [i64; 2],
    pub weight: i64,
    pub dual: (LatticePoint, LatticePoint),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalCurve {
    pub vertices: Vec<TropicalVertex>,
    pub edges: Vec<TropicalEdge>,
    pub dual: DualSubdivision,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl TropicalCurve {
    /// Corner locus of `max_α (c_α + <α, ξ>)` over the lifting's support.
    pub fn from_lifting(lifting: &BTreeMap<LatticePoint, f64>) -> Self {
        let dual = regular_subdivision(lifting);
        let c = |a: &LatticePoint| lifting[a];
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        if dual.two_cells() == 0 {
            for cell in &dual.cells {
                let (a, b) = (cell[0], cell[1]);
                let e = b.sub(a);
                let g = gcd(e.i, e.j);
                // <e, ξ> = c_a − c_b, nearest point to the origin
                let n2 = (e.i * e.i + e.j * e.j) as f64;
                let s = (c(&a) - c(&b)) / n2;
                edges.push(TropicalEdge {
                    kind: EdgeKind::Line { point: [s * e.i as f64, s * e.j as f64] },
                    direction: [-e.j / g, e.i / g],
                    weight: g,
                    dual: (a, b),
                });
            }
            return TropicalCurve { vertices, edges, dual };
        }
        for cell in &dual.cells {
            let (a, b, cc) = (cell[0], cell[1], cell[2]);
            let (u, v) = (b.sub(a), cc.sub(a));
            let (r1, r2) = (c(&a) - c(&b), c(&a) - c(&cc));
            let det = (u.i * v.j - u.j * v.i) as f64;
            let x = (r1 * v.j as f64 - r2 * u.j as f64) / det;
            let y = (u.i as f64 * r2 - v.i as f64 * r1) / det;
            vertices.push(TropicalVertex { position: [x, y], multiplicity: twice_signed_area(a, b, cc).abs() });
        }
        // cell edges, each with the cells on either side
        let mut sides: BTreeMap<(LatticePoint, LatticePoint), Vec<(usize, [i64; 2])>> = BTreeMap::new();
        for (k, cell) in dual.cells.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (cell[e], cell[(e + 1) % 3]);
                // counterclockwise cell: outward normal of edge a→b is (dy, −dx)
                let d = b.sub(a);
                let g = gcd(d.i, d.j);
                sides.entry((a.min(b), a.max(b))).or_default().push((k, [d.j / g, -d.i / g]));
            }
        }
        for ((a, b), s) in sides {
            let d = b.sub(a);
            let weight = gcd(d.i, d.j);
            match s.as_slice() {
                [(k, normal)] => edges.push(TropicalEdge {
                    kind: EdgeKind::Ray { from: *k },
                    direction: *normal,
                    weight,
                    dual: (a, b),
                }),
                [(k1, normal), (k2, _)] => edges.push(TropicalEdge {
                    kind: EdgeKind::Bounded { from: *k1, to: *k2 },
                    direction: *normal,
                    weight,
                    dual: (a, b),
                }),
                _ => {}
            }
        }
        TropicalCurve { vertices, edges, dual }
    }

    pub fn rays(&self) -> impl Iterator<Item = &TropicalEdge> {
        self.edges.iter().filter(|e| matches!(e.kind, EdgeKind::Ray { .. }))
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }

    /// `Σ weight · direction` over the edges at vertex `v`, oriented away from it.
    pub fn balancing_defect(&self, v: usize) -> [i64; 2] {
        let mut s = [0, 0];
        for e in &self.edges {
            let sign = match e.kind {
                EdgeKind::Ray { from } if from == v => 1,
                EdgeKind::Bounded { from, .. } if from == v => 1,
                EdgeKind::Bounded { to, .. } if to == v => -1,
                _ => 0,
            };
            s[0] += sign * e.weight * e.direction[0];
            s[1] += sign * e.weight * e.direction[1];
        }
        s
    }

    /// JSON export with vertices, bounded edges, rays, lines and the dual cells.
    pub fn to_json(&self) -> serde_json::Value {
        let lp = |a: &LatticePoint| json!([a.i, a.j]);
        let mut bounded = Vec::new();
        let mut rays = Vec::new();
        let mut lines = Vec::new();
        for e in &self.edges {
            let dual = json!([lp(&e.dual.0), lp(&e.dual.1)]);
            match e.kind {
                EdgeKind::Bounded { from, to } => bounded
                    .push(json!({"from": from, "to": to, "direction": e.direction, "weight": e.weight, "dual": dual})),
                EdgeKind::Ray { from } => {
                    rays.push(json!({"from": from, "direction": e.direction, "weight": e.weight, "dual": dual}))
                }
                EdgeKind::Line { point } => {
                    lines.push(json!({"point": point, "direction": e.direction, "weight": e.weight, "dual": dual}))
                }
            }
        }
        json!({
            "vertices": self.vertices.iter().map(|v| json!({"position": v.position, "multiplicity": v.multiplicity})).collect::<Vec<_>>(),
            "edges": bounded,
            "rays": rays,
            "lines": lines,
            "dual": {
                "cells": self.dual.cells.iter().map(|c| c.iter().map(lp).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "lifting": self.dual.lifting.iter().map(|(a, c)| json!({"i": a.i, "j": a.j, "c": c})).collect::<Vec<_>>(),
            }
        })
    }
}

/// Complement-component data behind a spine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentProbe {
    pub alpha: LatticePoint,
    pub probes: Vec<[f64; 2]>,
    pub constants: Vec<f64>,
    /// `max − min` of the constants over the probes.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spine {
    pub curve: TropicalCurve,
    pub components: Vec<ComponentProbe>,
    /// Support points whose complement component was not found.
    pub unrealized: Vec<LatticePoint>,
}

impl Spine {
    /// `c_α` for the realized exponents.
    pub fn constants(&self) -> BTreeMap<LatticePoint, f64> {
        self.curve.dual.lifting.clone()
    }

    /// A lifting on the whole support: realized exponents keep `c_α`, the
    /// others get one less than the concave envelope of the realized ones,
    /// which keeps them out of the subdivision.
    pub fn full_lifting(&self, p: &Polynomial) -> BTreeMap<LatticePoint, f64> {
        let mut out = self.constants();
        for alpha in p.support() {
            if out.contains_key(&alpha) {
                continue;
            }
            let env = self
                .curve
                .dual
                .cells
                .iter()
                .filter(|cell| cell.len() == 3)
                .filter_map(|cell| {
                    let (a, b, c) = (cell[0], cell[1], cell[2]);
                    let det = twice_signed_area(a, b, c) as f64;
                    let l = |x: LatticePoint, y: LatticePoint| twice_signed_area(x, y, alpha) as f64 / det;
                    let (wa, wb, wc) = (l(b, c), l(c, a), l(a, b));
                    (wa >= 0.0 && wb >= 0.0 && wc >= 0.0).then(|| {
                        wa * self.curve.dual.lifting[&a]
                            + wb * self.curve.dual.lifting[&b]
                            + wc * self.curve.dual.lifting[&c]
                    })
                })
                .next()
                .unwrap_or_else(|| self.curve.dual.lifting.values().cloned().fold(f64::INFINITY, f64::min));
            out.insert(alpha, env - 1.0);
        }
        out
    }
}

fn outward_normals(poly: &NewtonPolygon) -> Vec<[f64; 2]> {
    // for each vertex, the sum of the unit outward normals of its two edges
    let v = &poly.vertices;
    let n = v.len();
    (0..n)
        .map(|k| {
            let normal = |a: LatticePoint, b: LatticePoint| {
                let d = [(b.i - a.i) as f64, (b.j - a.j) as f64];
                let len = d[0].hypot(d[1]);
                [d[1] / len, -d[0] / len]
            };
            let (prev, here, next) = (v[(k + n - 1) % n], v[k], v[(k + 1) % n]);
            let (a, b) = (normal(prev, here), normal(here, next));
            let s = [a[0] + b[0], a[1] + b[1]];
            let len = s[0].hypot(s[1]);
            [s[0] / len, s[1] / len]
        })
        .collect()
}

/// Spine of the amoeba from Ronkin values at probes in each complement
/// component: far points along the normal fan of Δ, then a coarse grid.
pub fn spine(p: &Polynomial) -> Result<Spine> {
    let support = p.support();
    if support.len() == 1 {
        return Ok(Spine {
            curve: TropicalCurve {
                vertices: vec![],
                edges: vec![],
                dual: DualSubdivision { cells: vec![], lifting: BTreeMap::new() },
            },
            components: vec![],
            unrealized: vec![],
        });
    }
    let grid = GridSpec::for_polynomial(p);
    let cloud = sample_curve(p, &grid)?;
    let crit = critical_points(&cloud, DEFAULT_CRITICAL_TOL);
    let counter = FiberCounter::new(&cloud, &crit);
    spine_with(p, &counter, grid.window)
}

pub fn spine_with(p: &Polynomial, counter: &FiberCounter<'_>, window: f64) -> Result<Spine> {
    let support = p.support();
    let poly = NewtonPolygon::of(p);
    let mut found: BTreeMap<LatticePoint, Vec<[f64; 2]>> = BTreeMap::new();
    let try_probe = |x: [f64; 2], found: &mut BTreeMap<LatticePoint, Vec<[f64; 2]>>| {
        if let Ok(alpha) = order_map_with(counter, p, x) {
            let list = found.entry(alpha).or_default();
            if list.len() < 5 {
                list.push(x);
            }
        }
    };
    if !poly.is_degenerate() {
        for d in outward_normals(&poly) {
            let perp = [-d[1], d[0]];
            for off in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let x = [window * d[0] + off * perp[0], window * d[1] + off * perp[1]];
                try_probe(x, &mut found);
            }
        }
    }
    let missing = |found: &BTreeMap<LatticePoint, Vec<[f64; 2]>>| {
        support.iter().any(|a| found.get(a).is_none_or(|l| l.len() < 5))
    };
    if missing(&found) {
        let steps = (2.0 * window / 0.5).round() as i64;
        for a in 0..=steps {
            for b in 0..=steps {
                let x = [-window + 0.5 * a as f64, -window + 0.5 * b as f64];
                try_probe(x, &mut found);
            }
        }
    }
    let mut components = Vec::new();
    let mut lifting = BTreeMap::new();
    for (alpha, probes) in &found {
        if !support.contains(alpha) {
            continue;
        }
        let mut constants = Vec::new();
        for x in probes {
            let r = ronkin_value(p, *x, DEFAULT_RONKIN_ORDER)?;
            constants.push(r.value - alpha.dot(*x));
        }
        let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = constants.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sorted = constants.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        lifting.insert(*alpha, sorted[sorted.len() / 2]);
        components.push(ComponentProbe { alpha: *alpha, probes: probes.clone(), constants, spread: hi - lo });
    }
    let unrealized = support.iter().filter(|a| !lifting.contains_key(*a)).copied().collect();
    Ok(Spine { curve: TropicalCurve::from_lifting(&lifting), components, unrealized })
}

/// A codual line `<n, θ> ≡ offset (mod 2π)` with `n = α − β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodualLine {
    pub alpha: LatticePoint,
    pub beta: LatticePoint,
    pub normal: [i64; 2],
    /// `π − arg a_α + arg a_β`, reduced to `[0, 2π)`.
    pub offset: f64,
    pub is_external: bool,
}

impl CodualLine {
    pub fn new(p: &Polynomial, alpha: LatticePoint, beta: LatticePoint, polygon: &NewtonPolygon) -> Result<Self> {
        let aa = p.coefficient(alpha).ok_or(Error::MissingCoefficient { i: alpha.i, j: alpha.j })?;
        let ab = p.coefficient(beta).ok_or(Error::MissingCoefficient { i: beta.i, j: beta.j })?;
        let n = alpha.sub(beta);
        Ok(CodualLine {
            alpha,
            beta,
            normal: [n.i, n.j],
            offset: (PI - aa.arg() + ab.arg()).rem_euclid(TAU),
            is_external: polygon.segment_on_boundary(alpha, beta),
        })
    }

    /// Flat-torus distance from `t` to the line set.
    pub fn distance(&self, t: &TorusPoint) -> f64 {
        let (n0, n1) = (self.normal[0] as f64, self.normal[1] as f64);
        let r = (n0 * t.theta1 + n1 * t.theta2 - self.offset).rem_euclid(TAU);
        r.min(TAU - r) / n0.hypot(n1)
    }

    /// Pieces of the line inside the square `[0, 2π]²`.
    pub fn segments_in_square(&self) -> Vec<([f64; 2], [f64; 2])> {
        let (n0, n1) = (self.normal[0] as f64, self.normal[1] as f64);
        let span = (n0.abs() + n1.abs()) as i64 + 1;
        let mut out = Vec::new();
        for k in -span..=span {
            let c = self.offset + TAU * k as f64;
            // intersections of n·θ = c with the square's edges
            let mut pts: Vec<[f64; 2]> = Vec::new();
            for &(fixed, idx) in &[(0.0, 0usize), (TAU, 0), (0.0, 1), (TAU, 1)] {
                let (nf, nv) = if idx == 0 { (n0, n1) } else { (n1, n0) };
                if nv == 0.0 {
                    continue;
                }
                let other = (c - nf * fixed) / nv;
                if (-1e-12..=TAU + 1e-12).contains(&other) {
                    let q = if idx == 0 { [fixed, other.clamp(0.0, TAU)] } else { [other.clamp(0.0, TAU), fixed] };
                    if !pts.iter().any(|p| (p[0] - q[0]).abs() < 1e-9 && (p[1] - q[1]).abs() < 1e-9) {
                        pts.push(q);
                    }
                }
            }
            if pts.len() >= 2 {
                pts.sort_by(|a, b| (a[0], a[1]).partial_cmp(&(b[0], b[1])).unwrap());
                let (a, b) = (pts[0], pts[pts.len() - 1]);
                if (a[0] - b[0]).hypot(a[1] - b[1]) > 1e-9 {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// One codual line per edge of the subdivision.
pub fn codual_lines(p: &Polynomial, dual: &DualSubdivision) -> Result<Vec<CodualLine>> {
    let polygon = NewtonPolygon::of(p);
    dual.edges().into_iter().map(|(a, b)| CodualLine::new(p, a, b, &polygon)).collect()
}

/// `(|z|^h z/|z|, |w|^h w/|w|)`
pub fn h_scale(point: (Complex64, Complex64), h: f64) -> Result<(Complex64, Complex64)> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    if point.0.norm() == 0.0 || point.1.norm() == 0.0 {
        return Err(Error::InvalidArgument("point must lie in (C*)^2".into()));
    }
    let s = |z: Complex64| Complex64::from_polar(z.norm().powf(h), z.arg());
    Ok((s(point.0), s(point.1)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitStep {
    pub t: f64,
    pub raster: TorusRaster,
    /// Hausdorff distance to the previous raster (0 for the first).
    pub distance: f64,
}

/// Coamoeba rasters of the deformation family along a decreasing sequence.
pub fn tropical_limit_run(
    p: &Polynomial,
    lifting: &BTreeMap<LatticePoint, f64>,
    ts: &[f64],
    resolution: usize,
) -> Result<Vec<LimitStep>> {
    if ts.is_empty() {
        return Err(Error::InvalidArgument("empty t sequence".into()));
    }
    if ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("t sequence must be strictly decreasing".into()));
    }
    let rasters: Vec<Result<TorusRaster>> = ts
        .par_iter()
        .map(|&t| {
            let q = p.deformation_family(lifting, t)?;
            let cloud = sample_curve(&q, &GridSpec::new(default_window(&q), 200, 200)?)?;
            Ok(TorusRaster::from_cloud(&cloud, resolution))
        })
        .collect();
    let mut out: Vec<LimitStep> = Vec::new();
    for (t, r) in ts.iter().zip(rasters) {
        let raster = r?;
        let distance = match out.last() {
            Some(prev) => hausdorff_raster_distance(&prev.raster, &raster)?,
            None => 0.0,
        };
        out.push(LimitStep { t: *t, raster, distance });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn ronkin_examples() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        assert!(ronkin_value(&p, [-10.0, -10.0], 64).unwrap().value.abs() < 1e-4);
        assert!((ronkin_value(&p, [10.0, 0.0], 64).unwrap().value - 10.0).abs() < 1e-3);
        let mono = Polynomial::parse("5*z^2*w").unwrap();
        for x in [[0.3, -1.2], [4.0, 2.0]] {
            let r = ronkin_value(&mono, x, 16).unwrap();
            assert!((r.value - (5f64.ln() + 2.0 * x[0] + x[1])).abs() < 1e-12);
        }
        // an odd order puts a node at θ1 = π, where 1 + z vanishes
        let q = Polynomial::parse("1 + z").unwrap();
        assert_eq!(ronkin_value(&q, [0.0, 0.0], 3).err(), Some(Error::FiberHitsZeroLocus));
    }

    #[test]
    fn order_map_examples() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let cloud = sample_curve(&p, &GridSpec::for_polynomial(&p)).unwrap();
        assert_eq!(order_map(&p, [10.0, 0.0], &cloud).unwrap(), LatticePoint::new(1, 0));
        assert_eq!(order_map(&p, [-10.0, -10.0], &cloud).unwrap(), LatticePoint::new(0, 0));
        assert_eq!(order_map(&p, [0.0, 10.0], &cloud).unwrap(), LatticePoint::new(0, 1));
        assert!(matches!(order_map(&p, [0.0, 0.0], &cloud), Err(Error::InsideAmoeba(2))));
    }

    #[test]
    fn line_spine() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let s = spine(&p).unwrap();
        assert!(s.unrealized.is_empty());
        assert_eq!(s.curve.vertices.len(), 1);
        let v = s.curve.vertices[0];
        assert!(v.position[0].hypot(v.position[1]) < 0.05);
        assert_eq!(v.multiplicity, 1);
        let mut dirs: Vec<[i64; 2]> = s.curve.rays().map(|e| e.direction).collect();
        dirs.sort();
        assert_eq!(dirs, vec![[-1, 0], [0, -1], [1, 1]]);
        assert_eq!(s.curve.balancing_defect(0), [0, 0]);
        for c in &s.components {
            assert_eq!(c.probes.len(), 5);
            assert!(c.spread < 1e-3);
        }
    }

    #[test]
    fn monomial_spine_is_empty() {
        let s = spine(&Polynomial::parse("5*z^2*w").unwrap()).unwrap();
        assert!(s.curve.is_empty());
    }

    /// Independent oracle: for `1 + z + w + a·zw` with `a > 0` the constants
    /// follow from Jensen's formula, `c = (0, 0, 0, log a)`.
    #[test]
    fn quadric_subdivision_follows_sign() {
        for (a, diagonal) in [
            (5.0, (LatticePoint::new(0, 0), LatticePoint::new(1, 1))),
            (0.2, (LatticePoint::new(0, 1), LatticePoint::new(1, 0))),
        ] {
            let p = Polynomial::parse(&format!("1 + z + w + {a}*z*w")).unwrap();
            let s = spine(&p).unwrap();
            let c = s.constants();
            assert!((c[&LatticePoint::new(1, 1)] - f64::ln(a)).abs() < 1e-6, "{c:?}");
            assert!(c[&LatticePoint::new(0, 0)].abs() < 1e-6);
            assert_eq!(s.curve.vertices.len(), 2);
            let bounded: Vec<_> = s.curve.edges.iter().filter(|e| matches!(e.kind, EdgeKind::Bounded { .. })).collect();
            assert_eq!(bounded.len(), 1);
            assert_eq!(bounded[0].dual, diagonal);
            for v in 0..2 {
                assert_eq!(s.curve.balancing_defect(v), [0, 0]);
            }
        }
    }

    #[test]
    fn tie_breaking_triangulates_the_square() {
        let lifting: BTreeMap<_, _> =
            [(0, 0), (1, 0), (0, 1), (1, 1)].iter().map(|&(i, j)| (LatticePoint::new(i, j), 0.0)).collect();
        let d = regular_subdivision(&lifting);
        assert_eq!(d.two_cells(), 2);
        let total: i64 = d.cells.iter().map(|c| twice_signed_area(c[0], c[1], c[2])).sum();
        assert_eq!(total, 2);
    }

    #[test]
    fn collinear_support_gives_parallel_lines() {
        let lifting: BTreeMap<_, _> = [((0, 0), 0.0), ((1, 0), 0.0), ((2, 0), -5.0)]
            .iter()
            .map(|&((i, j), c)| (LatticePoint::new(i, j), c))
            .collect();
        let t = TropicalCurve::from_lifting(&lifting);
        assert!(t.vertices.is_empty());
        assert_eq!(t.edges.len(), 2);
        assert!(t.edges.iter().all(|e| matches!(e.kind, EdgeKind::Line { .. }) && e.direction == [0, 1]));
    }

    #[test]
    fn codual_examples() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let poly = NewtonPolygon::of(&p);
        let l = CodualLine::new(&p, LatticePoint::new(0, 1), LatticePoint::new(1, 0), &poly).unwrap();
        // −θ1 + θ2 = π  ⇔  θ1 − θ2 = π
        assert!(l.is_external);
        assert!(l.distance(&TorusPoint::new(PI + 0.5, 0.5)) < 1e-12);
        let l = CodualLine::new(&p, LatticePoint::new(0, 0), LatticePoint::new(1, 0), &poly).unwrap();
        assert_eq!(l.normal, [-1, 0]);
        assert!(l.distance(&TorusPoint::new(PI, 1.0)) < 1e-12);
        let phi = 0.7;
        let q = Polynomial::parse(&format!("1 + e^(i*{phi})*z")).unwrap();
        let l = CodualLine::new(&q, LatticePoint::new(0, 0), LatticePoint::new(1, 0), &NewtonPolygon::of(&q)).unwrap();
        assert!(l.distance(&TorusPoint::new(PI - phi, 2.0)) < 1e-12);
        assert!(matches!(
            CodualLine::new(&p, LatticePoint::new(1, 1), LatticePoint::new(1, 0), &poly),
            Err(Error::MissingCoefficient { i: 1, j: 1 })
        ));
        let s = spine(&p).unwrap();
        let lines = codual_lines(&p, &s.curve.dual).unwrap();
        assert_eq!(lines.len(), 3);
        assert!(lines.iter().all(|l| l.is_external));
        for l in &lines {
            assert_eq!(l.segments_in_square().len(), if l.normal[0] != 0 && l.normal[1] != 0 { 2 } else { 1 });
        }
    }

    #[test]
    fn h_scale_examples() {
        let pt = (Complex64::new(E * E, 0.0), Complex64::from_polar(1.0, PI / 3.0));
        let (a, b) = h_scale(pt, 0.5).unwrap();
        assert!((a - Complex64::new(E, 0.0)).norm() < 1e-14);
        assert!((b - Complex64::from_polar(1.0, PI / 3.0)).norm() < 1e-15);
        let q = (Complex64::new(0.3, -2.0), Complex64::new(-4.0, 0.1));
        let (a, b) = h_scale(q, 1.0).unwrap();
        assert!((a - q.0).norm() < 1e-14 && (b - q.1).norm() < 1e-14);
        let (a, b) = h_scale(q, 0.37).unwrap();
        assert_eq!((a.arg(), b.arg()), (q.0.arg(), q.1.arg()));
        assert!((a.norm().ln() - 0.37 * q.0.norm().ln()).abs() < 1e-12);
        assert!((b.norm().ln() - 0.37 * q.1.norm().ln()).abs() < 1e-12);
        assert!(h_scale(q, 0.0).is_err());
    }

    #[test]
    fn limit_run_of_line_is_constant() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let zero: BTreeMap<_, _> = p.support().into_iter().map(|a| (a, 0.0)).collect();
        let ts = [1.0 / E, 0.5 / E];
        let run = tropical_limit_run(&p, &zero, &ts, 128).unwrap();
        assert_eq!(run.len(), 2);
        assert!(run[1].distance <= 2.0 * TAU / 128.0);
        let mono = Polynomial::parse("5*z^2*w").unwrap();
        let lift: BTreeMap<_, _> = mono.support().into_iter().map(|a| (a, 0.0)).collect();
        let run = tropical_limit_run(&mono, &lift, &ts, 64).unwrap();
        assert!(run.iter().all(|s| s.distance == 0.0 && s.raster.occupied_count() == 0));
        assert!(tropical_limit_run(&p, &zero, &[0.1, 0.2], 64).is_err());
    }
}
