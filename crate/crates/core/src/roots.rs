//! All roots of a univariate complex polynomial.
//!
//! Degrees one and two are solved in closed form. Higher degrees use
//! Aberth–Ehrlich simultaneous iteration, falling back to the eigenvalues
//! of the companion matrix if the iteration stalls. Every root gets a
//! guarded Newton polish at the end.

use nalgebra::DMatrix;
use num_complex::Complex64;

const MAX_ABERTH_ITERATIONS: usize = 500;

fn horner(coeffs: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn quadratic(c: &[Complex64]) -> Vec<Complex64> {
    let (a, b, cc) = (c[2], c[1], c[0]);
    let disc = (b * b - 4.0 * a * cc).sqrt();
    // pick the sign that avoids cancellation
    let q = if (b.conj() * disc).re >= 0.0 { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
    if q.norm() == 0.0 {
        return vec![Complex64::new(0.0, 0.0); 2];
    }
    vec![q / a, cc / q]
}

fn aberth(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    // Cauchy-type radius and offset angles
    let radius =
        (0..n).map(|k| (coeffs[k] / lead).norm().powf(1.0 / (n - k) as f64)).fold(0.0f64, f64::max).max(1e-300);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4)).collect();
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut max_step = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(coeffs, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex64::new(0.0, 0.0);
            for (m, zm) in z.iter().enumerate() {
                if m != k {
                    sum += 1.0 / (z[k] - zm);
                }
            }
            let step = ratio / (1.0 - ratio * sum);
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / z[k].norm().max(1e-300));
        }
        if max_step < 1e-15 {
            return Some(z);
        }
    }
    None
}

fn companion(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 1..n {
        m[(k, k - 1)] = Complex64::new(1.0, 0.0);
    }
    for k in 0..n {
        m[(k, n - 1)] = -coeffs[k] / lead;
    }
    m.schur().eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default()
}

fn polish(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    let mut x = x;
    let mut px = horner(coeffs, x).0.norm();
    for _ in 0..3 {
        let (p, dp) = horner(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = x - p / dp;
        let pc = horner(coeffs, cand).0.norm();
        if !(pc < px) {
            break;
        }
        x = cand;
        px = pc;
    }
    x
}

/// Roots of `Σ coeffs[k] x^k`, excluding roots at zero, with multiplicity.
///
/// Leading coefficients with modulus at most `drop_tol · max|c|` are treated
/// as zero (degree drop). Returns `None` if every coefficient vanishes.
pub fn nonzero_roots(coeffs: &[Complex64], drop_tol: f64) -> Option<Vec<Complex64>> {
    let cmax = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if cmax == 0.0 {
        return None;
    }
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() <= drop_tol * cmax {
        hi -= 1;
    }
    let mut lo = 0;
    while lo < hi && coeffs[lo].norm() == 0.0 {
        lo += 1;
    }
    let c = &coeffs[lo..hi];
    let n = c.len().saturating_sub(1);
    let roots = match n {
        0 => Vec::new(),
        1 => vec![-c[0] / c[1]],
        2 => quadratic(c),
        _ => aberth(c).unwrap_or_else(|| companion(c)),
    };
    Some(
        roots
            .into_iter()
            .map(|r| if n >= 2 { polish(c, r) } else { r })
            .filter(|r| r.norm() > 0.0 && r.re.is_finite() && r.im.is_finite())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expand(roots: &[Complex64], lead: Complex64) -> Vec<Complex64> {
        let mut p = vec![lead];
        for r in roots {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (k, a) in p.iter().enumerate() {
                q[k + 1] += a;
                q[k] -= a * r;
            }
            p = q;
        }
        p
    }

    #[test]
    fn closed_forms() {
        let r = nonzero_roots(&[c(2.0, 0.0), c(1.0, 0.0)], 1e-15).unwrap();
        assert_eq!(r, vec![c(-2.0, 0.0)]);
        let mut r = nonzero_roots(&[c(2.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)], 1e-15).unwrap();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - c(0.0, -2f64.sqrt())).norm() < 1e-15);
        assert!((r[1] - c(0.0, 2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn zero_roots_and_degree_drop() {
        // w^2 (w - 3) with a negligible w^4 term
        let r = nonzero_roots(&[c(0.0, 0.0), c(0.0, 0.0), c(-3.0, 0.0), c(1.0, 0.0), c(1e-20, 0.0)], 1e-15).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - c(3.0, 0.0)).norm() < 1e-14);
        assert!(nonzero_roots(&[c(0.0, 0.0); 3], 1e-15).is_none());
    }

    #[test]
    fn companion_fallback_agrees() {
        let roots = [c(1.0, 2.0), c(-0.5, 0.1), c(3.0, -1.0), c(0.2, 0.7)];
        let p = expand(&roots, c(2.0, -1.0));
        let mut got = companion(&p);
        assert_eq!(got.len(), 4);
        for r in roots {
            let (k, _) =
                got.iter().enumerate().min_by(|a, b| (a.1 - r).norm().partial_cmp(&(b.1 - r).norm()).unwrap()).unwrap();
            assert!((got.remove(k) - r).norm() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn recovers_random_roots(parts in proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 3..9)) {
            let roots: Vec<_> = parts.iter().map(|&(a, b)| c(a, b)).collect();
            // keep roots well separated so the comparison is meaningful
            for (x, a) in roots.iter().enumerate() {
                for b in &roots[x + 1..] {
                    prop_assume!((a - b).norm() > 0.05);
                }
                prop_assume!(a.norm() > 0.05);
            }
            let p = expand(&roots, c(1.0, 0.5));
            let got = nonzero_roots(&p, 1e-15).unwrap();
            prop_assert_eq!(got.len(), roots.len());
            for r in &roots {
                let d = got.iter().map(|g| (g - r).norm()).fold(f64::INFINITY, f64::min);
                prop_assert!(d < 1e-8, "root {} missed by {}", r, d);
            }
        }
    }
}
