//! Multiplicity-counted coamoeba area, Arg and Log fiber counts and the
//! area of the Alga image.
//!
//! The area is `∫_V |det d(Arg)|`. In the `Z` chart the integrand is
//! `|Im m| dx dθ`; it blows up near branch points of the projection, so the
//! two charts are blended with the partition of unity
//! `ω_Z = |B|²/(|A|²+|B|²)`, `ω_W = |A|²/(|A|²+|B|²)` where `A = z f_z`,
//! `B = w f_w`. The blended integrand `|Im(A B̄)|/(|A|²+|B|²)` is bounded by
//! 1/2 and has the same form in both charts.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{critical_points, sample_curve, CriticalPoint, CurvePointCloud, GridSpec};
use crate::error::{Error, Result};
use crate::index::{PlaneIndex, TorusIndex};
use crate::newton::NewtonPolygon;
use crate::poly::{Chart, Polynomial};
use crate::raster::TorusRaster;
use crate::torus::{angle_diff, TorusPoint};

/// Fraction of singular samples above which a curve is rejected.
pub const MAX_SINGULAR_FRACTION: f64 = 1e-3;
/// Boundary-column share of the integral above which the window is too small.
pub const MAX_BOUNDARY_FRACTION: f64 = 1e-4;
/// Default raster resolution.
pub const DEFAULT_RESOLUTION: usize = 512;
/// Critical-value tolerance used by the default raster resolution.
pub const DEFAULT_CRITICAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    pub area_mult: f64,
    /// `2π² Area(Δ)`
    pub bound: f64,
    pub ratio: f64,
    #[serde(rename = "quad_error")]
    pub quadrature_error: f64,
}

pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Blended multiplicity-counted area of the sampled curve.
pub fn area_of_cloud(cloud: &CurvePointCloud) -> Result<f64> {
    let total = cloud.len();
    let singular = cloud.singular_count();
    if total > 0 && singular as f64 > MAX_SINGULAR_FRACTION * total as f64 {
        return Err(Error::SingularCurve { singular, total });
    }
    let grid = &cloud.grid;
    let last = grid.nx as u32 - 1;
    let mut values = Vec::with_capacity(total);
    let mut boundary = Vec::new();
    for p in cloud.points() {
        let d = p.blended_density();
        values.push(d);
        if p.node.0 == 0 || p.node.0 == last {
            boundary.push(d);
        }
    }
    let sum = pairwise_sum(&values);
    if sum > 0.0 {
        let fraction = pairwise_sum(&boundary) / sum;
        if fraction > MAX_BOUNDARY_FRACTION {
            return Err(Error::WindowTooSmall { fraction });
        }
    }
    Ok(sum * grid.dx() * grid.dtheta())
}

/// Unblended area `∫ |Im m| dx dθ` over the samples of a single chart.
pub fn chart_area(cloud: &CurvePointCloud, chart: Chart) -> f64 {
    let values: Vec<f64> = cloud
        .chart(chart)
        .points
        .iter()
        .filter(|p| !p.singular)
        .map(|p| {
            let m = p.slope_in(chart);
            if m.im.is_finite() {
                m.im.abs()
            } else {
                0.0
            }
        })
        .collect();
    pairwise_sum(&values) * cloud.grid.dx() * cloud.grid.dtheta()
}

/// `2π² Area(Δ)`
pub fn area_bound(p: &Polynomial) -> f64 {
    2.0 * PI * PI * NewtonPolygon::of(p).euclidean_area
}

/// Area on `grid` and on the refined grid; the refined value is reported
/// with `|A_2N − A_N| / 3` as the error estimate.
pub fn area_mult_coamoeba(p: &Polynomial, grid: &GridSpec) -> Result<AreaReport> {
    let coarse = area_of_cloud(&sample_curve(p, grid)?)?;
    let fine = area_of_cloud(&sample_curve(p, &grid.refined())?)?;
    let bound = area_bound(p);
    Ok(AreaReport {
        area_mult: fine,
        bound,
        ratio: if bound > 0.0 { fine / bound } else { 0.0 },
        quadrature_error: (fine - coarse).abs() / 3.0,
    })
}

enum Outcome {
    Converged { y: [f64; 2], singular: bool },
    Escaped,
    Stalled,
    NonFinite,
}

/// Damped Newton iteration for `F(y) = 0`, `F: ℝ² → ℂ`, given
/// `F, ∂F/∂y1, ∂F/∂y2` and the term scale.
fn newton2<E>(eval: E, y0: [f64; 2], escape: Option<f64>, residual_tol: f64) -> Outcome
where
    E: Fn([f64; 2]) -> (Complex64, Complex64, Complex64, f64),
{
    let mut y = y0;
    let (mut f, mut d1, mut d2, mut scale) = eval(y);
    for _ in 0..80 {
        if !(f.re.is_finite() && f.im.is_finite() && scale.is_finite()) {
            return Outcome::NonFinite;
        }
        let norm = d1.norm_sqr() + d2.norm_sqr();
        if f.norm() < residual_tol * scale {
            let det = (d1.conj() * d2).im;
            return Outcome::Converged { y, singular: det.abs() < 1e-6 * norm };
        }
        let j = Matrix2::new(d1.re, d2.re, d1.im, d2.im);
        let rhs = nalgebra::Vector2::new(-f.re, -f.im);
        let det = (d1.conj() * d2).im;
        let step = if det.abs() > 1e-14 * norm {
            j.lu().solve(&rhs)
        } else {
            j.pseudo_inverse(1e-14 * norm.sqrt()).ok().map(|pinv| pinv * rhs)
        };
        let Some(mut step) = step else { return Outcome::Stalled };
        let mut accepted = false;
        for _ in 0..12 {
            let cand = [y[0] + step[0], y[1] + step[1]];
            let (fc, c1, c2, sc) = eval(cand);
            if !(fc.re.is_finite() && fc.im.is_finite()) {
                step *= 0.5;
                continue;
            }
            if fc.norm() / sc <= f.norm() / scale {
                y = cand;
                (f, d1, d2, scale) = (fc, c1, c2, sc);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Outcome::Stalled;
        }
        if let Some(limit) = escape {
            if y[0].abs().max(y[1].abs()) > limit {
                return Outcome::Escaped;
            }
        }
    }
    if f.norm() < 100.0 * residual_tol * scale {
        let det = (d1.conj() * d2).im;
        return Outcome::Converged { y, singular: det.abs() < 1e-6 * (d1.norm_sqr() + d2.norm_sqr()) };
    }
    Outcome::Stalled
}

/// Arg and Log fiber counts seeded from a sampled curve.
pub struct FiberCounter<'a> {
    poly: &'a Polynomial,
    arg_index: TorusIndex,
    log_index: PlaneIndex,
    critical_args: TorusIndex,
    critical_logs: PlaneIndex,
    /// Queries closer than this to a critical value (Arg) or to the Log of a
    /// critical point are rejected.
    pub exclusion_tol: f64,
    pub seed_radius: f64,
    /// Newton stops once `|f| < residual_tol · Σ|a_α z^α|`.
    pub residual_tol: f64,
    /// Relative distance under which two regular solutions coincide.
    pub dedup_tol: f64,
    bucket: f64,
    cluster_radius: f64,
}

impl<'a> FiberCounter<'a> {
    /// Default exclusion tolerance: two cells of a 512 raster.
    pub fn new(cloud: &'a CurvePointCloud, critical: &[CriticalPoint]) -> Self {
        let grid = &cloud.grid;
        let seed_radius = (1.5 * grid.dx().max(grid.dtheta())).max(0.15);
        let regular: Vec<_> = cloud.points().filter(|p| !p.singular).collect();
        let arg_index = TorusIndex::new(regular.iter().map(|p| p.arg()).collect(), seed_radius);
        let log_index = PlaneIndex::new(regular.iter().map(|p| p.log()).collect(), seed_radius);
        let exclusion_tol = 2.0 * TAU / DEFAULT_RESOLUTION as f64;
        let strict: Vec<_> = critical.iter().filter(|c| !c.degenerate).collect();
        let critical_args = TorusIndex::new(strict.iter().map(|c| c.point.arg()).collect(), 0.1);
        let critical_logs = PlaneIndex::new(strict.iter().map(|c| c.point.log()).collect(), 0.1);
        FiberCounter {
            poly: &cloud.poly,
            arg_index,
            log_index,
            critical_args,
            critical_logs,
            exclusion_tol,
            seed_radius,
            residual_tol: 1e-12,
            dedup_tol: 1e-6,
            bucket: 0.25,
            cluster_radius: 0.75,
        }
    }

    /// Sets the exclusion tolerance (at most 0.1).
    pub fn with_exclusion_tol(mut self, tol: f64) -> Self {
        self.exclusion_tol = tol.min(0.1);
        self
    }

    pub fn distance_to_critical_value(&self, theta: &TorusPoint) -> Option<f64> {
        self.critical_args.nearest_within(theta, 0.1)
    }

    pub fn is_regular_value(&self, theta: &TorusPoint) -> bool {
        self.distance_to_critical_value(theta).is_none_or(|d| d > self.exclusion_tol)
    }

    /// Solutions `(x1, x2)` of `f(e^{x1+iθ1}, e^{x2+iθ2}) = 0`.
    pub fn arg_fiber(&self, theta: TorusPoint) -> Result<Vec<[f64; 2]>> {
        if let Some(distance) = self.distance_to_critical_value(&theta) {
            if distance <= self.exclusion_tol {
                return Err(Error::NearCriticalQuery { distance });
            }
        }
        let cand = self.arg_index.within(&theta, self.seed_radius);
        let seeds = thin(cand.iter().map(|&n| self.log_index.points[n]), self.bucket, false);
        let (e1, e2) = (Complex64::from_polar(1.0, theta.theta1), Complex64::from_polar(1.0, theta.theta2));
        let p = self.poly;
        let eval = |y: [f64; 2]| {
            let ev = p.eval_log(e1 * y[0].exp(), e2 * y[1].exp());
            (ev.f, ev.zfz, ev.wfw, ev.scale)
        };
        let outcomes: Vec<Outcome> =
            seeds.par_iter().map(|s| newton2(eval, *s, Some(60.0), self.residual_tol)).collect();
        collect_solutions(outcomes, seeds.len(), self.cluster_radius, self.dedup_tol, false)
    }

    pub fn arg_fiber_count(&self, theta: TorusPoint) -> Result<usize> {
        self.arg_fiber(theta).map(|s| s.len())
    }

    /// Solutions `(θ1, θ2)` of `f(e^{x1+iθ1}, e^{x2+iθ2}) = 0`, in `[0, 2π)²`.
    pub fn log_fiber(&self, x: [f64; 2]) -> Result<Vec<[f64; 2]>> {
        if let Some(distance) = self.critical_logs.nearest_within(&x, 0.1) {
            if distance <= self.exclusion_tol {
                return Err(Error::NearCriticalQuery { distance });
            }
        }
        let cand = self.log_index.within(&x, self.seed_radius);
        let seeds = thin(
            cand.iter().map(|&n| {
                let t = self.arg_index.points[n];
                [t.theta1, t.theta2]
            }),
            self.bucket,
            true,
        );
        let (r1, r2) = (x[0].exp(), x[1].exp());
        let p = self.poly;
        let i = Complex64::new(0.0, 1.0);
        let eval = |t: [f64; 2]| {
            let ev = p.eval_log(Complex64::from_polar(r1, t[0]), Complex64::from_polar(r2, t[1]));
            (ev.f, i * ev.zfz, i * ev.wfw, ev.scale)
        };
        let outcomes: Vec<Outcome> = seeds.par_iter().map(|s| newton2(eval, *s, None, self.residual_tol)).collect();
        let sols = collect_solutions(outcomes, seeds.len(), self.cluster_radius, self.dedup_tol, true)?;
        Ok(sols.into_iter().map(|[a, b]| [a.rem_euclid(TAU), b.rem_euclid(TAU)]).collect())
    }

    pub fn log_fiber_count(&self, x: [f64; 2]) -> Result<usize> {
        self.log_fiber(x).map(|s| s.len())
    }
}

/// One representative per bucket of side `bucket`, in first-seen order.
fn thin(points: impl Iterator<Item = [f64; 2]>, bucket: f64, periodic: bool) -> Vec<[f64; 2]> {
    let mut keys = std::collections::HashSet::new();
    let mut out = Vec::new();
    for p in points {
        let q = if periodic { [p[0].rem_euclid(TAU), p[1].rem_euclid(TAU)] } else { p };
        if keys.insert(((q[0] / bucket).floor() as i64, (q[1] / bucket).floor() as i64)) {
            out.push(p);
        }
    }
    out
}

fn separation(a: [f64; 2], b: [f64; 2], periodic: bool) -> f64 {
    if periodic {
        angle_diff(a[0], b[0]).hypot(angle_diff(a[1], b[1]))
    } else {
        (a[0] - b[0]).hypot(a[1] - b[1])
    }
}

/// Deduplicates regular solutions at `dedup` and merges singular ones, which
/// lie on non-isolated solution curves, by single linkage.
fn collect_solutions(
    outcomes: Vec<Outcome>,
    seeds: usize,
    cluster: f64,
    dedup: f64,
    periodic: bool,
) -> Result<Vec<[f64; 2]>> {
    let failed = outcomes.iter().filter(|o| matches!(o, Outcome::NonFinite)).count();
    if seeds > 0 && failed * 10 > seeds {
        return Err(Error::NonconvergentSeeds { failed, total: seeds });
    }
    let mut regular: Vec<[f64; 2]> = Vec::new();
    let mut singular: Vec<[f64; 2]> = Vec::new();
    for o in outcomes {
        if let Outcome::Converged { y, singular: s } = o {
            if s {
                singular.push(y);
            } else if !regular.iter().any(|r| separation(*r, y, periodic) < dedup * (1.0 + y[0].abs() + y[1].abs())) {
                regular.push(y);
            }
        }
    }
    // single-linkage clusters of singular solutions
    let mut label: Vec<usize> = (0..singular.len()).collect();
    fn root(label: &mut [usize], mut k: usize) -> usize {
        while label[k] != k {
            label[k] = label[label[k]];
            k = label[k];
        }
        k
    }
    for a in 0..singular.len() {
        for b in a + 1..singular.len() {
            if separation(singular[a], singular[b], periodic) < cluster {
                let (ra, rb) = (root(&mut label, a), root(&mut label, b));
                label[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    for k in 0..singular.len() {
        if root(&mut label, k) == k && !regular.iter().any(|r| separation(*r, singular[k], periodic) < cluster) {
            regular.push(singular[k]);
        }
    }
    Ok(regular)
}

/// Convenience wrapper that detects critical points itself.
pub fn arg_fiber_count(p: &Polynomial, theta: TorusPoint, cloud: &CurvePointCloud) -> Result<usize> {
    debug_assert!(cloud.poly == *p);
    let crit = critical_points(cloud, DEFAULT_CRITICAL_TOL);
    FiberCounter::new(cloud, &crit).arg_fiber_count(theta)
}

/// Convenience wrapper that detects critical points itself.
pub fn log_fiber_count(p: &Polynomial, x: [f64; 2], cloud: &CurvePointCloud) -> Result<usize> {
    debug_assert!(cloud.poly == *p);
    let crit = critical_points(cloud, DEFAULT_CRITICAL_TOL);
    FiberCounter::new(cloud, &crit).log_fiber_count(x)
}

/// Points of the additive R2 low-discrepancy sequence in `[0, 2π)²`.
pub fn r2_torus_points(n: usize, offset: usize) -> Vec<TorusPoint> {
    // plastic number
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    (offset..offset + n)
        .map(|k| {
            let t1 = (0.5 + a1 * (k + 1) as f64).fract();
            let t2 = (0.5 + a2 * (k + 1) as f64).fract();
            TorusPoint::new(t1 * TAU, t2 * TAU)
        })
        .collect()
}

/// `(2π)²` times the mean Arg fiber count over `n` regular low-discrepancy
/// torus points; near-critical points are skipped and replaced.
pub fn monte_carlo_area(counter: &FiberCounter<'_>, n: usize) -> Result<f64> {
    let mut counts = Vec::with_capacity(n);
    let mut k = 0;
    while counts.len() < n {
        let pts = r2_torus_points(n, k);
        k += n;
        for t in pts {
            if counts.len() == n {
                break;
            }
            match counter.arg_fiber_count(t) {
                Ok(c) => counts.push(c as f64),
                Err(Error::NearCriticalQuery { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if k > 100 * n {
            return Err(Error::PreconditionFails("too few regular torus points".into()));
        }
    }
    Ok(TAU * TAU * pairwise_sum(&counts) / n as f64)
}

/// Area of the Alga image: the coamoeba raster at twice the resolution,
/// minus a one-cell band around critical cells, projected onto `[0, π)²`.
pub fn alga_area(p: &Polynomial, cloud: &CurvePointCloud, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 64, got {resolution}")));
    }
    debug_assert!(cloud.poly == *p);
    let raster = TorusRaster::from_cloud(cloud, 2 * resolution);
    Ok(alga_area_of_raster(&raster))
}

pub fn alga_area_of_raster(raster: &TorusRaster) -> f64 {
    let n = raster.resolution;
    let half = n / 2;
    let banned = raster.dilate(&raster.critical, 1);
    let mut hit = vec![false; half * half];
    for a in 0..n {
        for b in 0..n {
            let c = a * n + b;
            if raster.occupancy[c] && !banned[c] {
                hit[(a % half) * half + b % half] = true;
            }
        }
    }
    let cell = PI / half as f64;
    hit.iter().filter(|h| **h).count() as f64 * cell * cell
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> Polynomial {
        Polynomial::parse("1 + z + w").unwrap()
    }

    #[test]
    fn pairwise_sum_matches() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64 * 0.1).collect();
        assert!((pairwise_sum(&xs) - 49950.0).abs() < 1e-9);
    }

    #[test]
    fn line_area_is_pi_squared() {
        let p = line();
        let r = area_mult_coamoeba(&p, &GridSpec::for_polynomial(&p)).unwrap();
        assert!((r.area_mult - PI * PI).abs() < 0.01 * PI * PI, "{r:?}");
        assert!((r.bound - PI * PI).abs() < 1e-12);
        assert!(r.quadrature_error < 0.01);
    }

    #[test]
    fn degenerate_areas_vanish() {
        let fac = Polynomial::parse("1 + z + w + z*w").unwrap();
        let r = area_mult_coamoeba(&fac, &GridSpec::new(9.0, 100, 100).unwrap()).unwrap();
        assert!(r.area_mult < 1e-3);
        assert!(r.bound > 19.0);
        let d = Polynomial::parse("z - w").unwrap();
        let r = area_mult_coamoeba(&d, &GridSpec::new(9.0, 50, 50).unwrap()).unwrap();
        assert_eq!((r.area_mult, r.bound, r.ratio), (0.0, 0.0, 0.0));
    }

    #[test]
    fn small_window_is_rejected() {
        let p = line();
        let err = area_of_cloud(&sample_curve(&p, &GridSpec::new(1.0, 40, 40).unwrap()).unwrap());
        assert!(matches!(err, Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn line_fiber_counts() {
        let p = line();
        let cloud = sample_curve(&p, &GridSpec::for_polynomial(&p)).unwrap();
        let crit = critical_points(&cloud, DEFAULT_CRITICAL_TOL);
        let fc = FiberCounter::new(&cloud, &crit);
        assert_eq!(fc.arg_fiber_count(TorusPoint::new(2.0 * PI / 3.0, 4.0 * PI / 3.0)).unwrap(), 1);
        assert_eq!(fc.arg_fiber_count(TorusPoint::new(PI / 4.0, PI / 3.0)).unwrap(), 0);
        assert_eq!(fc.arg_fiber_count(TorusPoint::new(0.0, 0.0)).unwrap_or(0), 0);
        assert_eq!(fc.log_fiber_count([0.0, 0.0]).unwrap(), 2);
        assert_eq!(fc.log_fiber_count([10.0, 0.0]).unwrap(), 0);
        let sols = fc.log_fiber([0.0, 0.0]).unwrap();
        for t in sols {
            assert!(
                (angle_diff(t[0], 2.0 * PI / 3.0).abs() < 1e-9) || (angle_diff(t[0], -2.0 * PI / 3.0).abs() < 1e-9)
            );
        }
    }

    #[test]
    fn factored_log_fiber_counts_one_branch() {
        let p = Polynomial::parse("1 + z + w + z*w").unwrap();
        let cloud = sample_curve(&p, &GridSpec::new(9.0, 200, 200).unwrap()).unwrap();
        let crit = critical_points(&cloud, DEFAULT_CRITICAL_TOL);
        assert_eq!(log_fiber_count(&p, [0.0, 5.0], &cloud).unwrap(), 1);
        let fc = FiberCounter::new(&cloud, &crit);
        assert_eq!(fc.log_fiber_count([0.0, 5.0]).unwrap(), 1);
    }

    #[test]
    fn alga_examples() {
        let p = line();
        let cloud = sample_curve(&p, &GridSpec::for_polynomial(&p)).unwrap();
        let a = alga_area(&p, &cloud, 256).unwrap();
        assert!((a - PI * PI).abs() < 0.02 * PI * PI, "{a}");
        let fac = Polynomial::parse("1 + z + w + z*w").unwrap();
        let cloud = sample_curve(&fac, &GridSpec::new(9.0, 200, 200).unwrap()).unwrap();
        let slack = 4.0 * PI * 2.0 * (PI / 256.0);
        assert!(alga_area(&fac, &cloud, 256).unwrap() <= slack);
        let d = Polynomial::parse("z - w").unwrap();
        let cloud = sample_curve(&d, &GridSpec::new(9.0, 100, 100).unwrap()).unwrap();
        assert!(alga_area(&d, &cloud, 256).unwrap() <= slack);
        assert!(matches!(alga_area(&d, &cloud, 10), Err(Error::InvalidArgument(_))));
    }
}
