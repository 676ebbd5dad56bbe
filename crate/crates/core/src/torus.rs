//! Points of the argument torus (S¹)² and of its quotient by (ℤ₂)².

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// A point of [0, 2π)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub theta1: f64,
    pub theta2: f64,
}

/// A point of [0, π)², the image of the Alga map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientPoint {
    pub eta1: f64,
    pub eta2: f64,
}

pub fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed difference reduced into (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

impl TorusPoint {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        TorusPoint { theta1: reduce_angle(theta1), theta2: reduce_angle(theta2) }
    }

    /// Flat-torus distance.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        angle_diff(self.theta1, other.theta1).hypot(angle_diff(self.theta2, other.theta2))
    }
}

pub fn alga_project(theta: TorusPoint) -> QuotientPoint {
    let red = |a: f64| {
        let r = a.rem_euclid(PI);
        if r >= PI {
            0.0
        } else {
            r
        }
    };
    QuotientPoint { eta1: red(theta.theta1), eta2: red(theta.theta2) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let q = alga_project(TorusPoint::new(PI + 0.3, 0.2));
        assert!((q.eta1 - 0.3).abs() < 1e-15 && q.eta2 == 0.2);
        assert_eq!(alga_project(TorusPoint::new(0.0, 0.0)), QuotientPoint { eta1: 0.0, eta2: 0.0 });
        let q = alga_project(TorusPoint::new(PI - 1e-9, PI));
        assert_eq!(q, QuotientPoint { eta1: PI - 1e-9, eta2: 0.0 });
    }

    #[test]
    fn flat_distance_wraps() {
        let a = TorusPoint::new(0.1, 0.0);
        let b = TorusPoint::new(TAU - 0.1, 0.0);
        assert!((a.distance(&b) - 0.2).abs() < 1e-12);
        assert!((TorusPoint::new(0.0, 0.0).distance(&TorusPoint::new(PI, PI)) - PI * 2f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn projection_is_invariant_under_half_turns(t1 in 0.0f64..TAU, t2 in 0.0f64..TAU, a in 0..2u8, b in 0..2u8) {
            let p = alga_project(TorusPoint::new(t1, t2));
            let q = alga_project(TorusPoint::new(t1 + PI * a as f64, t2 + PI * b as f64));
            let close = |x: f64, y: f64| { let d = (x - y).abs(); d < 1e-12 || (PI - d).abs() < 1e-12 };
            prop_assert!(close(p.eta1, q.eta1) && close(p.eta2, q.eta2));
        }
    }
}
