//! Sampling the curve V = {f = 0} ⊂ (ℂ*)², the logarithmic Gauss map and
//! the critical locus shared by the Log and Arg maps.
//!
//! The curve is sampled twice, once per chart. In the `Z` chart the base
//! variable `z = e^{x + iθ}` runs over a uniform grid and every nonzero root
//! `w` of `f(z, ·)` gives a point; the `W` chart swaps the roles. In a
//! chart with base `u = log base` and fiber `v = log other` the curve is
//! locally a graph `v(u)` with slope `m = dv/du`.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::NewtonPolygon;
use crate::poly::{Chart, Evaluation, Polynomial};
use crate::roots::nonzero_roots;
use crate::torus::{angle_diff, TorusPoint};

/// Both logarithmic partials below this fraction of the term scale mark a
/// point as singular.
pub const SINGULAR_TOL: f64 = 1e-8;
/// Fiber coefficients below this fraction of their scale count as zero.
const ZERO_FIBER_TOL: f64 = 1e-13;
/// Leading coefficients below this fraction of their own term scale are dropped.
const DEGREE_DROP_TOL: f64 = 1e-14;
/// `|s|` at or below this value is an exact tie for the sign test.
pub const TIE_TOL: f64 = 1e-12;
/// Largest log-distance at which two sheets of neighbouring fibers match.
const MATCH_RADIUS: f64 = 0.5;

/// Uniform grid over `x ∈ [−X, X]`, `θ ∈ [0, 2π)` with cell-midpoint nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub window: f64,
    pub nx: usize,
    pub ntheta: usize,
}

impl GridSpec {
    pub fn new(window: f64, nx: usize, ntheta: usize) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::InvalidArgument(format!("window must be positive, got {window}")));
        }
        if nx < 2 || ntheta < 2 {
            return Err(Error::InvalidArgument("grid counts must be at least 2".into()));
        }
        Ok(GridSpec { window, nx, ntheta })
    }

    /// Default 200 × 200 grid with a window wide enough for the tentacles.
    pub fn for_polynomial(p: &Polynomial) -> Self {
        GridSpec { window: default_window(p), nx: 200, ntheta: 200 }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.window / self.nx as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.ntheta as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        -self.window + (k as f64 + 0.5) * self.dx()
    }

    pub fn theta(&self, l: usize) -> f64 {
        (l as f64 + 0.5) * self.dtheta()
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ntheta
    }

    /// Same window, both counts doubled.
    pub fn refined(&self) -> Self {
        GridSpec { window: self.window, nx: 2 * self.nx, ntheta: 2 * self.ntheta }
    }
}

/// `9 · (coordinate spread of Δ) + spread of log|a_α|`. Along a tentacle
/// the neglected terms decay like `e^{-|x|/spread}`, so the window grows
/// with the spread.
pub fn default_window(p: &Polynomial) -> f64 {
    9.0 * NewtonPolygon::of(p).coordinate_spread().max(1) as f64 + p.max_coefficient_log_spread()
}

/// A sampled point of V with its derivative data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub z: Complex64,
    pub w: Complex64,
    pub fz: Complex64,
    pub fw: Complex64,
    /// `z fz`
    pub zfz: Complex64,
    /// `w fw`
    pub wfw: Complex64,
    /// Logarithmic slope `d log(other) / d log(base)`.
    pub m: Complex64,
    /// `|Im m|`
    pub jac_density: f64,
    /// Chart in which `|m| ≤ 1`.
    pub base: Chart,
    /// Chart whose grid produced the point.
    pub chart: Chart,
    pub singular: bool,
    /// `|f| / Σ|a_α||z|^i|w|^j`
    pub residual: f64,
    /// Grid node `(k, l)` of the sampling chart.
    pub node: (u32, u32),
}

impl CurvePoint {
    pub fn new(p: &Polynomial, z: Complex64, w: Complex64, chart: Chart, node: (u32, u32)) -> Self {
        let ev = p.eval_log(z, w);
        Self::from_evaluation(&ev, z, w, chart, node)
    }

    fn from_evaluation(ev: &Evaluation, z: Complex64, w: Complex64, chart: Chart, node: (u32, u32)) -> Self {
        let (a, b) = (ev.zfz, ev.wfw);
        let singular = a.norm().max(b.norm()) < SINGULAR_TOL * ev.scale;
        let base = if a.norm() <= b.norm() { Chart::Z } else { Chart::W };
        let m = match base {
            Chart::Z => -a / b,
            Chart::W => -b / a,
        };
        let m = if m.re.is_finite() && m.im.is_finite() { m } else { Complex64::new(0.0, 0.0) };
        CurvePoint {
            z,
            w,
            fz: a / z,
            fw: b / w,
            zfz: a,
            wfw: b,
            m,
            jac_density: m.im.abs(),
            base,
            chart,
            singular,
            residual: ev.f.norm() / ev.scale.max(f64::MIN_POSITIVE),
            node,
        }
    }

    /// Signed realness `Im(A·conj B) / (|A|² + |B|²)` with `A = z fz`, `B = w fw`.
    /// Its zero set is γ⁻¹(ℝP¹).
    pub fn realness(&self) -> f64 {
        let den = self.zfz.norm_sqr() + self.wfw.norm_sqr();
        if den == 0.0 {
            return 0.0;
        }
        (self.zfz * self.wfw.conj()).im / den
    }

    /// True when the Gauss map is real to within `TIE_TOL` in angle,
    /// `|sin arg(A·conj B)| ≤ TIE_TOL`, or `A·B = 0`.
    pub fn is_tied(&self) -> bool {
        let prod = self.zfz * self.wfw.conj();
        prod.im.abs() <= TIE_TOL * prod.norm()
    }

    /// Arg-Jacobian density weighted by the chart partition of unity; it
    /// is the same expression in both charts and at most 1/2.
    pub fn blended_density(&self) -> f64 {
        if self.singular {
            0.0
        } else {
            self.realness().abs()
        }
    }

    /// Slope `d log(other) / d log(base)` in the given chart.
    pub fn slope_in(&self, chart: Chart) -> Complex64 {
        match chart {
            Chart::Z => -self.zfz / self.wfw,
            Chart::W => -self.wfw / self.zfz,
        }
    }

    pub fn arg(&self) -> TorusPoint {
        TorusPoint::new(self.z.arg(), self.w.arg())
    }

    pub fn log(&self) -> [f64; 2] {
        [self.z.norm().ln(), self.w.norm().ln()]
    }

    /// `log` of the fiber variable of `chart`.
    pub fn log_other(&self, chart: Chart) -> Complex64 {
        match chart {
            Chart::Z => self.w.ln(),
            Chart::W => self.z.ln(),
        }
    }

    pub fn log_base(&self, chart: Chart) -> Complex64 {
        self.log_other(chart.other())
    }
}

/// Point of (ℂ*)² from chart coordinates `u = log base`, `v = log other`.
pub fn from_chart(chart: Chart, u: Complex64, v: Complex64) -> (Complex64, Complex64) {
    match chart {
        Chart::Z => (u.exp(), v.exp()),
        Chart::W => (v.exp(), u.exp()),
    }
}

/// Newton iteration on `v ↦ f(from_chart(u, v))` starting at `v0`.
pub fn track(p: &Polynomial, chart: Chart, u: Complex64, v0: Complex64) -> Option<Complex64> {
    let mut v = v0;
    for _ in 0..40 {
        let (z, w) = from_chart(chart, u, v);
        let ev = p.eval_log(z, w);
        let d = match chart {
            Chart::Z => ev.wfw,
            Chart::W => ev.zfz,
        };
        if ev.f.norm() <= 1e-15 * ev.scale {
            return Some(v);
        }
        let step = ev.f / d;
        if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 1.0 {
            return None;
        }
        v -= step;
        if step.norm() <= 1e-15 * (1.0 + v.norm()) {
            return Some(v);
        }
    }
    let (z, w) = from_chart(chart, u, v);
    let ev = p.eval_log(z, w);
    (ev.f.norm() <= 1e-11 * ev.scale).then_some(v)
}

/// Nonzero roots `w` of `f(z, ·)`, with multiplicity.
pub fn fiber_roots(p: &Polynomial, z: Complex64) -> Result<Vec<Complex64>> {
    fiber_roots_in(p, Chart::Z, z)
}

/// Nonzero roots of the fiber of `chart` over the base value `base`.
pub fn fiber_roots_in(p: &Polynomial, chart: Chart, base: Complex64) -> Result<Vec<Complex64>> {
    if base.norm() == 0.0 {
        return Err(Error::InvalidArgument("base value must be nonzero".into()));
    }
    let (mut coeffs, scales) = p.fiber_coefficients(chart, base);
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if cmax <= ZERO_FIBER_TOL * scales.iter().sum::<f64>() {
        return Err(Error::IdenticallyZeroFiber);
    }
    // a small leading coefficient is a root far out along a tentacle, unless
    // it is rounding noise from cancelling terms
    while let Some(k) = coeffs.iter().rposition(|c| c.norm() > 0.0) {
        if coeffs[k].norm() > DEGREE_DROP_TOL * scales[k] {
            break;
        }
        coeffs[k] = Complex64::new(0.0, 0.0);
    }
    let roots = nonzero_roots(&coeffs, 0.0).ok_or(Error::IdenticallyZeroFiber)?;
    Ok(roots.into_iter().map(|r| refine_root(p, chart, base, r)).collect())
}

/// One bivariate Newton pass in the fiber variable, kept only if it helps.
fn refine_root(p: &Polynomial, chart: Chart, base: Complex64, r: Complex64) -> Complex64 {
    let (z, w) = match chart {
        Chart::Z => (base, r),
        Chart::W => (r, base),
    };
    let ev = p.eval_log(z, w);
    let d = match chart {
        Chart::Z => ev.wfw / w,
        Chart::W => ev.zfz / z,
    };
    let cand = r - ev.f / d;
    if !(cand.re.is_finite() && cand.im.is_finite()) || cand.norm() == 0.0 {
        return r;
    }
    let (z2, w2) = match chart {
        Chart::Z => (base, cand),
        Chart::W => (cand, base),
    };
    if p.eval(z2, w2).norm() < ev.f.norm() {
        cand
    } else {
        r
    }
}

/// Points sampled over one chart's grid, stored node by node.
#[derive(Debug, Clone)]
pub struct ChartSample {
    pub chart: Chart,
    pub points: Vec<CurvePoint>,
    /// `points[offsets[n]..offsets[n + 1]]` lie over node `n = k·nθ + l`.
    pub offsets: Vec<usize>,
}

impl ChartSample {
    pub fn node(&self, grid: &GridSpec, k: usize, l: usize) -> &[CurvePoint] {
        let n = k * grid.ntheta + l;
        &self.points[self.offsets[n]..self.offsets[n + 1]]
    }
}

/// The discretized curve: both chart samplings over the same grid.
#[derive(Debug, Clone)]
pub struct CurvePointCloud {
    pub poly: Polynomial,
    pub grid: GridSpec,
    pub charts: [ChartSample; 2],
}

impl CurvePointCloud {
    pub fn points(&self) -> impl Iterator<Item = &CurvePoint> + '_ {
        self.charts.iter().flat_map(|c| c.points.iter())
    }

    pub fn len(&self) -> usize {
        self.charts.iter().map(|c| c.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn singular_count(&self) -> usize {
        self.points().filter(|p| p.singular).count()
    }

    pub fn chart(&self, chart: Chart) -> &ChartSample {
        &self.charts[chart as usize]
    }
}

fn sample_chart(p: &Polynomial, grid: &GridSpec, chart: Chart) -> Result<ChartSample> {
    let columns: Vec<Result<Vec<Vec<CurvePoint>>>> = (0..grid.nx)
        .into_par_iter()
        .map(|k| {
            let x = grid.x(k);
            (0..grid.ntheta)
                .map(|l| {
                    let base = Complex64::from_polar(x.exp(), grid.theta(l));
                    let roots = fiber_roots_in(p, chart, base)?;
                    Ok(roots
                        .into_iter()
                        .map(|r| {
                            let (z, w) = match chart {
                                Chart::Z => (base, r),
                                Chart::W => (r, base),
                            };
                            CurvePoint::new(p, z, w, chart, (k as u32, l as u32))
                        })
                        .collect())
                })
                .collect()
        })
        .collect();
    let mut points = Vec::new();
    let mut offsets = vec![0];
    for column in columns {
        for node in column? {
            points.extend(node);
            offsets.push(points.len());
        }
    }
    Ok(ChartSample { chart, points, offsets })
}

/// Samples V over the grid in both charts.
pub fn sample_curve(p: &Polynomial, grid: &GridSpec) -> Result<CurvePointCloud> {
    let z = sample_chart(p, grid, Chart::Z)?;
    let w = sample_chart(p, grid, Chart::W)?;
    Ok(CurvePointCloud { poly: p.clone(), grid: *grid, charts: [z, w] })
}

/// Homogeneous coordinates of the logarithmic Gauss map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussValue {
    pub g1: Complex64,
    pub g2: Complex64,
    pub realness_residual: f64,
}

pub fn gauss_map(p: &Polynomial, z: Complex64, w: Complex64) -> Result<GaussValue> {
    let ev = p.eval_log(z, w);
    let big = ev.zfz.norm().max(ev.wfw.norm());
    if big < SINGULAR_TOL * ev.scale || big == 0.0 {
        return Err(Error::SingularPoint);
    }
    let (g1, g2) = (ev.zfz / big, ev.wfw / big);
    let prod = g1 * g2.conj();
    Ok(GaussValue { g1, g2, realness_residual: prod.im.abs() / (prod.norm() + 1e-300) })
}

/// Sheets over two neighbouring nodes paired by mutual nearest neighbour in
/// `log(other)` with a ratio test.
pub fn match_sheets(a: &[CurvePoint], b: &[CurvePoint], chart: Chart) -> Vec<(usize, usize)> {
    let la: Vec<Complex64> = a.iter().map(|p| p.log_other(chart)).collect();
    let lb: Vec<Complex64> = b.iter().map(|p| p.log_other(chart)).collect();
    let dist = |x: Complex64, y: Complex64| (x.re - y.re).hypot(angle_diff(x.im, y.im));
    let nearest = |x: Complex64, set: &[Complex64]| -> Option<(usize, f64, f64)> {
        let mut best = (usize::MAX, f64::INFINITY, f64::INFINITY);
        for (k, y) in set.iter().enumerate() {
            let d = dist(x, *y);
            if d < best.1 {
                best = (k, d, best.1);
            } else if d < best.2 {
                best.2 = d;
            }
        }
        (best.0 != usize::MAX).then_some(best)
    };
    let mut out = Vec::new();
    for (i, x) in la.iter().enumerate() {
        let Some((j, d, second)) = nearest(*x, &lb) else { continue };
        if d >= MATCH_RADIUS || d >= 0.5 * second {
            continue;
        }
        let Some((back, _, second_back)) = nearest(lb[j], &la) else { continue };
        if back == i && d < 0.5 * second_back {
            out.push((i, j));
        }
    }
    out
}

/// A point of γ⁻¹(ℝP¹) found on the sampled curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub point: CurvePoint,
    pub realness_residual: f64,
    /// Part of a non-isolated zero of the realness (e.g. a component of V
    /// on which the Gauss map is real).
    pub degenerate: bool,
}

fn continuous_other(a: Complex64, b: Complex64) -> Complex64 {
    Complex64::new(b.re, a.im + angle_diff(b.im, a.im))
}

/// Bisection of the realness along the segment between two matched samples.
fn bisect(
    p: &Polynomial,
    chart: Chart,
    (mut ua, mut va, mut sa): (Complex64, Complex64, f64),
    (mut ub, mut vb, _sb): (Complex64, Complex64, f64),
) -> Option<CurvePoint> {
    let node = (0, 0);
    for _ in 0..60 {
        let um = (ua + ub) * 0.5;
        if um == ua || um == ub {
            break;
        }
        let vm = track(p, chart, um, (va + vb) * 0.5)?;
        let (z, w) = from_chart(chart, um, vm);
        let sm = CurvePoint::new(p, z, w, chart, node).realness();
        if sm == 0.0 {
            ua = um;
            va = vm;
            break;
        }
        if (sm > 0.0) == (sa > 0.0) {
            ua = um;
            va = vm;
            sa = sm;
        } else {
            ub = um;
            vb = vm;
        }
    }
    let (z, w) = from_chart(chart, ua, va);
    let pa = CurvePoint::new(p, z, w, chart, node);
    let (z, w) = from_chart(chart, ub, vb);
    let pb = CurvePoint::new(p, z, w, chart, node);
    Some(if pa.realness().abs() <= pb.realness().abs() { pa } else { pb })
}

fn critical_point(point: CurvePoint, degenerate: bool) -> CriticalPoint {
    let prod = point.zfz * point.wfw.conj();
    CriticalPoint { point, realness_residual: prod.im.abs() / (prod.norm() + 1e-300), degenerate }
}

/// Critical points of Log|V and Arg|V: sign changes of the realness between
/// matched neighbouring samples, bisected to machine precision, plus exact
/// ties. Points whose refined slope still has `|Im m| ≥ tol` are dropped.
pub fn critical_points(cloud: &CurvePointCloud, tol: f64) -> Vec<CriticalPoint> {
    let grid = &cloud.grid;
    let p = &cloud.poly;
    let per_chart: Vec<Vec<CriticalPoint>> = cloud
        .charts
        .par_iter()
        .map(|sample| {
            let chart = sample.chart;
            let mut out = Vec::new();
            for k in 0..grid.nx {
                for l in 0..grid.ntheta {
                    let here = sample.node(grid, k, l);
                    let mut neighbours = vec![((k, (l + 1) % grid.ntheta), Complex64::new(0.0, grid.dtheta()))];
                    if k + 1 < grid.nx {
                        neighbours.push(((k + 1, l), Complex64::new(grid.dx(), 0.0)));
                    }
                    let mut tied_with_neighbour = vec![false; here.len()];
                    for ((k2, l2), du) in neighbours {
                        let there = sample.node(grid, k2, l2);
                        for (i, j) in match_sheets(here, there, chart) {
                            let (a, b) = (&here[i], &there[j]);
                            if a.singular || b.singular {
                                continue;
                            }
                            let (sa, sb) = (a.realness(), b.realness());
                            if a.is_tied() && b.is_tied() {
                                tied_with_neighbour[i] = true;
                                continue;
                            }
                            if a.is_tied() || b.is_tied() || (sa > 0.0) == (sb > 0.0) {
                                continue;
                            }
                            let ua = a.log_base(chart);
                            let va = a.log_other(chart);
                            let vb = continuous_other(va, b.log_other(chart));
                            if let Some(c) = bisect(p, chart, (ua, va, sa), (ua + du, vb, sb)) {
                                if !c.singular && c.slope_in(c.base).im.abs() < tol {
                                    out.push(critical_point(c, false));
                                }
                            }
                        }
                    }
                    for (i, a) in here.iter().enumerate() {
                        if !a.singular && a.is_tied() {
                            out.push(critical_point(*a, tied_with_neighbour[i]));
                        }
                    }
                }
            }
            out
        })
        .collect();
    per_chart.into_iter().flatten().collect()
}

/// Arguments of the critical points.
pub fn critical_values_arg(points: &[CriticalPoint]) -> Vec<TorusPoint> {
    points.iter().map(|c| c.point.arg()).collect()
}

/// Finite-difference Jacobian determinants of Arg and Log in the chart
/// `(x, θ) ↦ (x + iθ) = log base`, both expected to equal `−Im m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianCheck {
    pub det_arg: f64,
    pub det_log: f64,
    pub im_m: f64,
}

/// Newton iteration for the offset `δ` with `f(base·e^{du}, other·e^{δ}) = 0`.
///
/// Working with offsets from the sampled point keeps differences of `v`
/// free of the rounding of `|v|` itself.
fn track_offset(
    p: &Polynomial,
    chart: Chart,
    base: Complex64,
    other: Complex64,
    du: Complex64,
    d0: Complex64,
) -> Option<Complex64> {
    let b = base * du.exp();
    let mut d = d0;
    for _ in 0..40 {
        let o = other * d.exp();
        let (z, w) = match chart {
            Chart::Z => (b, o),
            Chart::W => (o, b),
        };
        let ev = p.eval_log(z, w);
        let deriv = match chart {
            Chart::Z => ev.wfw,
            Chart::W => ev.zfz,
        };
        if ev.f.norm() <= 1e-16 * ev.scale {
            return Some(d);
        }
        let step = ev.f / deriv;
        if !(step.re.is_finite() && step.im.is_finite()) || step.norm() > 1.0 {
            return None;
        }
        d -= step;
        if step.norm() <= 1e-17 * (1.0 + d.norm()) {
            return Some(d);
        }
    }
    let o = other * d.exp();
    let (z, w) = match chart {
        Chart::Z => (b, o),
        Chart::W => (o, b),
    };
    let ev = p.eval_log(z, w);
    (ev.f.norm() <= 1e-11 * ev.scale).then_some(d)
}

/// Steps tried by [`jacobian_determinants`], as multiples of the smallest.
const JACOBIAN_STEPS: usize = 11;

/// Central differences of the local graph `v(u)` along `x` (Arg
/// determinant `−∂θ_o/∂x`) and along `θ` (Log determinant `∂x_o/∂θ`).
///
/// Fourth-order stencils with steps `h, 2h, 4h, …` are Richardson-combined
/// and the estimate whose successive values agree best is kept, so nearly
/// flat stretches of a tentacle get long steps and curved ones short steps.
pub fn jacobian_determinants(p: &Polynomial, point: &CurvePoint, chart: Chart, h: f64) -> Option<JacobianCheck> {
    let (base, other) = match chart {
        Chart::Z => (point.z, point.w),
        Chart::W => (point.w, point.z),
    };
    let zero = Complex64::new(0.0, 0.0);
    let d0 = track_offset(p, chart, base, other, zero, zero)?;
    let stencil = |dir: Complex64, step: f64| -> Option<Complex64> {
        let mut vals = [zero; 4];
        for (slot, t) in [2.0, 1.0, -1.0, -2.0].iter().enumerate() {
            let mut d = d0;
            // continue in two steps so the Newton start stays close
            for frac in [0.5, 1.0] {
                d = track_offset(p, chart, base, other, dir * (step * t * frac), d)?;
            }
            vals[slot] = d - d0;
        }
        Some((-vals[0] + 8.0 * vals[1] - 8.0 * vals[2] + vals[3]) / (12.0 * step))
    };
    let best = |dir: Complex64, part: fn(Complex64) -> f64| -> Option<f64> {
        let raw: Vec<Option<f64>> =
            (0..JACOBIAN_STEPS).map(|k| stencil(dir, h * f64::from(1u32 << k)).map(part)).collect();
        // Richardson: the fourth-order error term cancels between h and 2h
        let rich: Vec<Option<f64>> = raw
            .windows(2)
            .map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => Some((16.0 * a - b) / 15.0),
                _ => None,
            })
            .collect();
        let mut choice: Option<(f64, f64)> = None;
        for w in rich.windows(3) {
            if let (Some(a), Some(b), Some(c)) = (w[0], w[1], w[2]) {
                let err = (b - a).abs().max((b - c).abs());
                if choice.map_or(true, |(e, _)| err < e) {
                    choice = Some((err, b));
                }
            }
        }
        choice.map(|(_, v)| v).or(raw[0])
    };
    let det_arg = -best(Complex64::new(1.0, 0.0), |c| c.im)?;
    let det_log = best(Complex64::new(0.0, 1.0), |c| c.re)?;
    let m = point.slope_in(chart);
    Some(JacobianCheck { det_arg, det_log, im_m: m.im })
}

/// CSV export: `x1,theta1,x2,theta2,re_m,im_m,critical_flag`, sampled points
/// first (flag 0) then critical points (flag 1). `m` is the `Z`-chart slope.
pub fn cloud_csv(cloud: &CurvePointCloud, critical: &[CriticalPoint]) -> String {
    let mut s = String::from("x1,theta1,x2,theta2,re_m,im_m,critical_flag\n");
    let mut row = |p: &CurvePoint, flag: u8| {
        let [x1, x2] = p.log();
        let t = p.arg();
        let m = p.slope_in(Chart::Z);
        let _ = writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            x1, t.theta1, x2, t.theta2, m.re, m.im, flag
        );
    };
    for p in cloud.points() {
        row(p, 0);
    }
    for c in critical {
        row(&c.point, 1);
    }
    s
}

/// Realness sign changes counted on a single fiber, used by tests as a
/// dense-scan cross-check of the bisection.
pub fn realness_sign_changes_on_circle(p: &Polynomial, x: f64, samples: usize) -> usize {
    let mut count = 0;
    let mut prev: Option<Vec<(Complex64, f64)>> = None;
    for l in 0..=samples {
        let theta = l as f64 / samples as f64 * TAU + 1e-3;
        let z = Complex64::from_polar(x.exp(), theta);
        let Ok(roots) = fiber_roots(p, z) else { continue };
        let cur: Vec<(Complex64, f64)> =
            roots.iter().map(|&w| (w.ln(), CurvePoint::new(p, z, w, Chart::Z, (0, 0)).realness())).collect();
        if let Some(prev) = &prev {
            for (v, s) in &cur {
                if let Some((_, s0)) = prev.iter().min_by(|a, b| {
                    let da = (a.0.re - v.re).hypot(angle_diff(a.0.im, v.im));
                    let db = (b.0.re - v.re).hypot(angle_diff(b.0.im, v.im));
                    da.partial_cmp(&db).unwrap()
                }) {
                    if (s0 > &0.0) != (s > &0.0) {
                        count += 1;
                    }
                }
            }
        }
        prev = Some(cur);
    }
    count
}
