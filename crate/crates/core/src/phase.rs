//! Deciding whether a polynomial becomes real after a torus rotation.
//!
//! A polynomial is real up to the action of the torus when there are angles
//! `(φ0, φ1, φ2)` with `arg a_α ≡ φ0 + <α, φ> (mod π)` for every exponent.
//! The system is linear over the reals once the branch integers are fixed,
//! so candidate solutions are enumerated over a bounded window of branches
//! on an affine frame of the support and then refined by least squares.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::poly::{LatticePoint, Polynomial};

/// Angles `(φ0, φ1, φ2)` in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPhase {
    pub phi0: f64,
    pub phi: [f64; 2],
    /// Largest angular residual mod π over all coefficients.
    pub residual: f64,
}

impl TorusPhase {
    /// `e^{-iφ0} p(e^{-iφ1} z, e^{-iφ2} w)`, whose coefficients are real up to `residual`.
    pub fn realify(&self, p: &Polynomial) -> Polynomial {
        p.torus_rotate(-self.phi0, [-self.phi[0], -self.phi[1]])
    }
}

/// Distance of an angle to the nearest multiple of π.
pub fn distance_to_real_axis(angle: f64) -> f64 {
    let r = angle.rem_euclid(PI);
    r.min(PI - r)
}

fn wrap_pi(x: f64) -> f64 {
    // into [-π/2, π/2)
    (x + PI / 2.0).rem_euclid(PI) - PI / 2.0
}

fn reduce_2pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if TAU - r < 1e-12 || r < 1e-15 {
        0.0
    } else {
        r
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

struct Candidate {
    phi0: f64,
    phi: [f64; 2],
    residual: f64,
}

fn residuals(terms: &[(LatticePoint, f64)], phi0: f64, phi: [f64; 2]) -> Vec<f64> {
    terms.iter().map(|&(a, b)| wrap_pi(b - phi0 - a.dot(phi))).collect()
}

fn evaluate(terms: &[(LatticePoint, f64)], phi0: f64, phi: [f64; 2]) -> Candidate {
    // fix branches, then least squares on the affine system
    let n = terms.len();
    let mut design = DMatrix::<f64>::zeros(n, 3);
    let mut rhs = DVector::<f64>::zeros(n);
    for (row, &(a, b)) in terms.iter().enumerate() {
        let k = ((b - phi0 - a.dot(phi)) / PI).round();
        design[(row, 0)] = 1.0;
        design[(row, 1)] = a.i as f64;
        design[(row, 2)] = a.j as f64;
        rhs[row] = b - PI * k;
    }
    let (mut phi0, mut phi) = (phi0, phi);
    let svd = design.svd(true, true);
    if let Ok(sol) = svd.solve(&rhs, 1e-10) {
        // minimum-norm solution only moves along directions the data determines
        let base = DVector::from_vec(vec![phi0, phi[0], phi[1]]);
        let corr = &sol - &base;
        let v_t = svd.v_t.as_ref().unwrap();
        let mut projected = DVector::<f64>::zeros(3);
        for (s, row) in svd.singular_values.iter().zip(v_t.row_iter()) {
            if *s > 1e-10 {
                let r = row.transpose();
                projected += &r * r.dot(&corr);
            }
        }
        phi0 += projected[0];
        phi = [phi[0] + projected[1], phi[1] + projected[2]];
    }
    let residual = residuals(terms, phi0, phi).into_iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Candidate { phi0, phi, residual }
}

/// Searches for `(φ0, φ)` making `p` real; returns `None` when the best
/// branch choice leaves an angular residual above `tol`.
pub fn real_up_to_torus_action(p: &Polynomial, tol: f64) -> Option<TorusPhase> {
    let terms: Vec<(LatticePoint, f64)> = p.terms().map(|(a, c)| (a, c.arg())).collect();
    let (alpha0, b0) = terms[0];
    let diffs: Vec<(LatticePoint, f64)> = terms[1..].iter().map(|&(a, b)| (a.sub(alpha0), b - b0)).collect();

    // candidate φ for each branch vector, ordered by (|k|_1, k)
    let mut branch_candidates: Vec<((i64, i64), [f64; 2])> = Vec::new();
    let rank2 = diffs
        .iter()
        .enumerate()
        .flat_map(|(x, da)| diffs[x + 1..].iter().map(move |db| (*da, *db)))
        .filter(|(da, db)| da.0.i * db.0.j - da.0.j * db.0.i != 0)
        .min_by_key(|(da, db)| (da.0.i * db.0.j - da.0.j * db.0.i).abs());
    if let Some(((da, ea), (db, eb))) = rank2 {
        let det = (da.i * db.j - da.j * db.i) as f64;
        let bound = det.abs() as i64;
        for k1 in -bound..=bound {
            for k2 in -bound..=bound {
                let r1 = ea + PI * k1 as f64;
                let r2 = eb + PI * k2 as f64;
                let phi = [(r1 * db.j as f64 - r2 * da.j as f64) / det, (da.i as f64 * r2 - db.i as f64 * r1) / det];
                branch_candidates.push(((k1, k2), phi));
            }
        }
    } else if let Some(&(d, _)) = diffs.iter().find(|(d, _)| d.i != 0 || d.j != 0) {
        let g = gcd(d.i, d.j);
        let u = LatticePoint::new(d.i / g, d.j / g);
        let norm2 = (u.i * u.i + u.j * u.j) as f64;
        let t_of = |a: LatticePoint| if u.i != 0 { a.i / u.i } else { a.j / u.j };
        let &(dr, er) = diffs.iter().filter(|(a, _)| t_of(*a) != 0).min_by_key(|(a, _)| t_of(*a).abs()).unwrap();
        let t = t_of(dr);
        for k in -t.abs()..=t.abs() {
            let psi = (er + PI * k as f64) / t as f64;
            branch_candidates.push(((k, 0), [psi * u.i as f64 / norm2, psi * u.j as f64 / norm2]));
        }
    } else {
        branch_candidates.push(((0, 0), [0.0, 0.0]));
    }
    branch_candidates.sort_by_key(|((k1, k2), _)| (k1.abs() + k2.abs(), *k1, *k2));

    let mut best: Option<Candidate> = None;
    for (_, phi) in branch_candidates {
        let phi0 = b0 - alpha0.dot(phi);
        let cand = evaluate(&terms, phi0, phi);
        if best.as_ref().is_none_or(|b| cand.residual < b.residual - 1e-15) {
            best = Some(cand);
        }
    }
    let best = best?;
    if best.residual > tol {
        return None;
    }
    Some(TorusPhase {
        phi0: reduce_2pi(best.phi0),
        phi: [reduce_2pi(best.phi[0]), reduce_2pi(best.phi[1])],
        residual: best.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn real_line_is_identity() {
        let p = Polynomial::parse("1 + z + w").unwrap();
        let ph = real_up_to_torus_action(&p, 1e-9).unwrap();
        assert_eq!((ph.phi0, ph.phi), (0.0, [0.0, 0.0]));
        assert_eq!(ph.residual, 0.0);
    }

    #[test]
    fn global_phase() {
        let p = Polynomial::parse("i + i*z + i*w").unwrap();
        let ph = real_up_to_torus_action(&p, 1e-9).unwrap();
        assert!((ph.phi0 - PI / 2.0).abs() < 1e-12);
        assert!(ph.phi[0].abs() < 1e-12 && ph.phi[1].abs() < 1e-12);
    }

    /// Independent check: the three constraints from (0,0), (1,0), (0,1)
    /// fix φ mod π up to branches; enumerate them all and test (1,1).
    #[test]
    fn inconsistent_quadric_has_no_phase() {
        let b = [0.0, PI / 3.0, 0.0, PI / 7.0];
        let mut consistent = false;
        for k0 in -2..=2 {
            for k1 in -2..=2 {
                for k2 in -2..=2 {
                    let phi0 = b[0] + PI * k0 as f64;
                    let phi1 = b[1] - phi0 + PI * k1 as f64;
                    let phi2 = b[2] - phi0 + PI * k2 as f64;
                    if distance_to_real_axis(b[3] - phi0 - phi1 - phi2) < 1e-6 {
                        consistent = true;
                    }
                }
            }
        }
        assert!(!consistent);
        let p = Polynomial::parse("1 + e^(i*pi/3)*z + w + e^(i*pi/7)*z*w").unwrap();
        assert!(real_up_to_torus_action(&p, 1e-6).is_none());
    }

    #[test]
    fn collinear_support() {
        let p = Polynomial::parse("1 + e^(i*0.4)*z*w + e^(i*0.8)*z^2*w^2").unwrap();
        let ph = real_up_to_torus_action(&p, 1e-9).unwrap();
        let q = ph.realify(&p);
        assert!(q.terms().all(|(_, c)| distance_to_real_axis(c.arg()) < 1e-9));
        let single = Polynomial::parse("(2+3i)*z^4*w").unwrap();
        let ph = real_up_to_torus_action(&single, 1e-9).unwrap();
        assert!(ph.realify(&single).terms().all(|(_, c)| distance_to_real_axis(c.arg()) < 1e-9));
    }

    proptest! {
        #[test]
        fn rotated_real_polynomials_are_recognized(
            coefs in proptest::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], 6),
            phi0 in 0.0f64..TAU, phi1 in 0.0f64..TAU, phi2 in 0.0f64..TAU,
        ) {
            let support = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
            let p = Polynomial::from_terms(support.iter().zip(&coefs).map(|(&(i, j), &c)| {
                (LatticePoint::new(i, j), Complex64::new(c, 0.0))
            })).unwrap();
            let ph = real_up_to_torus_action(&p, 1e-12).unwrap();
            prop_assert!(ph.residual < 1e-12);
            let rotated = p.torus_rotate(phi0, [phi1, phi2]);
            let ph = real_up_to_torus_action(&rotated, 1e-9).unwrap();
            prop_assert!((0.0..TAU).contains(&ph.phi0));
            let q = ph.realify(&rotated);
            for (_, c) in q.terms() {
                prop_assert!(distance_to_real_axis(c.arg()) < 1e-9);
            }
        }
    }
}
