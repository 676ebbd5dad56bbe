//! Closed-form reference computations, independent of `coamoeba-core`.
//!
//! Each oracle counts the points of a curve over a fixed argument pair by
//! solving for the moduli directly.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Points of `1 + a z + b w = 0` with `Arg(z, w) = θ`: one when `−1` lies
/// in the open cone spanned by `a e^{iθ1}` and `b e^{iθ2}`, else none.
pub fn linear_fiber_count(a: Complex64, b: Complex64, theta: [f64; 2]) -> usize {
    let u = a * Complex64::from_polar(1.0, theta[0]);
    let v = b * Complex64::from_polar(1.0, theta[1]);
    let det = u.re * v.im - u.im * v.re;
    // antiparallel directions span no open cone; rounding leaves |det| ~ ε
    if det.abs() <= 1e-12 * u.norm() * v.norm() {
        return 0;
    }
    let r1 = -v.im / det;
    let r2 = u.im / det;
    usize::from(r1 > 0.0 && r2 > 0.0)
}

/// Moduli `(r1, r2)` with `1 + a z + b w + c z w = 0`, `z = r1 e^{iθ1}`,
/// `w = r2 e^{iθ2}`, both positive.
///
/// Eliminating `r2 = −(1 + A r1)/(B + C r1)` leaves the reality condition
/// `Im[(1 + A r1) conj(B + C r1)] = 0`, a quadratic in `r1`.
pub fn bilinear_fiber(a: Complex64, b: Complex64, c: Complex64, theta: [f64; 2]) -> Vec<[f64; 2]> {
    let e1 = Complex64::from_polar(1.0, theta[0]);
    let e2 = Complex64::from_polar(1.0, theta[1]);
    let (ca, cb, cc) = (a * e1, b * e2, c * e1 * e2);
    let q0 = cb.conj().im;
    let q1 = (cc.conj() + ca * cb.conj()).im;
    let q2 = (ca * cc.conj()).im;
    let scale = q0.abs().max(q1.abs()).max(q2.abs());
    let mut roots = Vec::new();
    if q2.abs() <= 1e-14 * scale {
        // a rounding-level linear coefficient means antiparallel terms
        if q1.abs() > 1e-12 * (cc.norm() + ca.norm() * cb.norm()) {
            roots.push(-q0 / q1);
        }
    } else {
        let disc = q1 * q1 - 4.0 * q2 * q0;
        if disc >= 0.0 {
            let s = disc.sqrt();
            // stable pair
            let q = -0.5 * (q1 + q1.signum() * s);
            if q != 0.0 {
                roots.push(q / q2);
                roots.push(q0 / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots
        .into_iter()
        .filter(|r1| *r1 > 0.0)
        .filter_map(|r1| {
            let den = cb + cc * r1;
            let r2 = -((Complex64::new(1.0, 0.0) + ca * r1) * den.conj()).re / den.norm_sqr();
            (r2 > 0.0 && r2.is_finite()).then_some([r1, r2])
        })
        .collect()
}

pub fn bilinear_fiber_count(a: Complex64, b: Complex64, c: Complex64, theta: [f64; 2]) -> usize {
    bilinear_fiber(a, b, c, theta).len()
}

/// Flat distance on the torus from `θ` to the line `<n, θ> ≡ offset (mod 2π)`.
pub fn torus_line_distance(theta: [f64; 2], n: [f64; 2], offset: f64) -> f64 {
    let s = n[0] * theta[0] + n[1] * theta[1] - offset;
    let r = s.rem_euclid(TAU);
    r.min(TAU - r) / n[0].hypot(n[1])
}

/// Distance from `θ` to the nearest point of `{0, π}²`.
pub fn distance_to_half_lattice(theta: [f64; 2]) -> f64 {
    let d = |t: f64| {
        let r = t.rem_euclid(PI);
        r.min(PI - r)
    };
    d(theta[0]).hypot(d(theta[1]))
}

/// Centers of the `n × n` cells of `[0, 2π)²`.
pub fn cell_centers(n: usize) -> Vec<[f64; 2]> {
    let h = TAU / n as f64;
    (0..n).flat_map(|a| (0..n).map(move |b| [(a as f64 + 0.5) * h, (b as f64 + 0.5) * h])).collect()
}
