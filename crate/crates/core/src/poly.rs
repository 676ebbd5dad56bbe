//! Bivariate polynomials with complex coefficients and support in ℕ².

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector `(i, j)` of the monomial `z^i w^j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

impl LatticePoint {
    pub const fn new(i: i64, j: i64) -> Self {
        LatticePoint { i, j }
    }

    pub fn dot(self, x: [f64; 2]) -> f64 {
        self.i as f64 * x[0] + self.j as f64 * x[1]
    }

    pub fn sub(self, other: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.i - other.i, self.j - other.j)
    }

    pub fn swapped(self) -> LatticePoint {
        LatticePoint::new(self.j, self.i)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Which variable parametrizes a local sheet of the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Chart {
    Z,
    W,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Z => Chart::W,
            Chart::W => Chart::Z,
        }
    }
}

/// Value of `f` and its logarithmic partial derivatives at a point of (ℂ*)².
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub f: Complex64,
    /// `z ∂f/∂z`
    pub zfz: Complex64,
    /// `w ∂f/∂w`
    pub wfw: Complex64,
    /// `Σ |a_α| |z|^i |w|^j`, the natural size of the terms at the point.
    pub scale: f64,
}

/// A polynomial `Σ a_α z^i w^j` with nonzero complex coefficients.
///
/// Terms are kept in lexicographic exponent order, so iteration and
/// serialization are deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<LatticePoint, Complex64>,
}

impl Polynomial {
    /// Builds a polynomial, combining repeated exponents and dropping
    /// coefficients that cancel to zero.
    pub fn from_terms<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, Complex64)>,
    {
        let mut map: BTreeMap<LatticePoint, Complex64> = BTreeMap::new();
        for (alpha, coef) in terms {
            if alpha.i < 0 || alpha.j < 0 {
                return Err(Error::NegativeExponent { position: 0 });
            }
            *map.entry(alpha).or_insert(Complex64::new(0.0, 0.0)) += coef;
        }
        map.retain(|_, c| c.norm() > 0.0);
        if map.is_empty() {
            return Err(Error::EmptyPolynomial);
        }
        Ok(Polynomial { terms: map })
    }

    pub fn parse(text: &str) -> Result<Self> {
        crate::parse::parse_polynomial(text)
    }

    pub fn terms(&self) -> impl Iterator<Item = (LatticePoint, Complex64)> + '_ {
        self.terms.iter().map(|(a, c)| (*a, *c))
    }

    pub fn support(&self) -> Vec<LatticePoint> {
        self.terms.keys().copied().collect()
    }

    pub fn coefficient(&self, alpha: LatticePoint) -> Option<Complex64> {
        self.terms.get(&alpha).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree_in(&self, chart: Chart) -> i64 {
        self.terms
            .keys()
            .map(|a| match chart {
                Chart::Z => a.i,
                Chart::W => a.j,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, z: Complex64, w: Complex64) -> Complex64 {
        self.eval_log(z, w).f
    }

    pub fn eval_log(&self, z: Complex64, w: Complex64) -> Evaluation {
        let zp = powers(z, self.degree_in(Chart::Z) as usize);
        let wp = powers(w, self.degree_in(Chart::W) as usize);
        let (az, aw) = (z.norm(), w.norm());
        let mut ev = Evaluation {
            f: Complex64::new(0.0, 0.0),
            zfz: Complex64::new(0.0, 0.0),
            wfw: Complex64::new(0.0, 0.0),
            scale: 0.0,
        };
        for (alpha, coef) in &self.terms {
            let t = coef * zp[alpha.i as usize] * wp[alpha.j as usize];
            ev.f += t;
            ev.zfz += t * alpha.i as f64;
            ev.wfw += t * alpha.j as f64;
            ev.scale += coef.norm() * az.powi(alpha.i as i32) * aw.powi(alpha.j as i32);
        }
        ev
    }

    /// Coefficients (ascending) of the univariate polynomial obtained by fixing
    /// the `chart` variable to `base`, each with its natural scale (the sum of
    /// the moduli of the terms adding up to it).
    pub fn fiber_coefficients(&self, chart: Chart, base: Complex64) -> (Vec<Complex64>, Vec<f64>) {
        let other = chart.other();
        let deg_base = self.degree_in(chart) as usize;
        let deg = self.degree_in(other) as usize;
        let bp = powers(base, deg_base);
        let ab = base.norm();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); deg + 1];
        let mut scales = vec![0.0; deg + 1];
        for (alpha, coef) in &self.terms {
            let (kb, ko) = match chart {
                Chart::Z => (alpha.i, alpha.j),
                Chart::W => (alpha.j, alpha.i),
            };
            coeffs[ko as usize] += coef * bp[kb as usize];
            scales[ko as usize] += coef.norm() * ab.powi(kb as i32);
        }
        (coeffs, scales)
    }

    /// Restriction of the polynomial to the exponents in `cell`.
    pub fn truncate(&self, cell: &[LatticePoint]) -> Result<Self> {
        let terms: BTreeMap<_, _> =
            self.terms.iter().filter(|(a, _)| cell.contains(a)).map(|(a, c)| (*a, *c)).collect();
        if terms.is_empty() {
            return Err(Error::EmptyTruncation);
        }
        Ok(Polynomial { terms })
    }

    /// The family `Σ a_α (e t)^{-c(α)} z^i w^j` for `0 < t ≤ 1/e`.
    ///
    /// At `t = 1/e` the input is returned unchanged, bit for bit.
    pub fn deformation_family(&self, lifting: &BTreeMap<LatticePoint, f64>, t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= (1.0 / E) * (1.0 + 4.0 * f64::EPSILON)) {
            return Err(Error::ParameterOutOfRange(t));
        }
        for alpha in self.terms.keys() {
            if !lifting.contains_key(alpha) {
                return Err(Error::MissingLifting { i: alpha.i, j: alpha.j });
            }
        }
        let log_et = 1.0 + t.ln();
        if log_et.abs() <= 8.0 * f64::EPSILON {
            return Ok(self.clone());
        }
        let terms = self.terms.iter().map(|(a, c)| (*a, c * (-lifting[a] * log_et).exp())).collect();
        Ok(Polynomial { terms })
    }

    /// `f(w, z)`.
    pub fn swap_variables(&self) -> Self {
        Polynomial { terms: self.terms.iter().map(|(a, c)| (a.swapped(), *c)).collect() }
    }

    /// `e^{iφ0} f(e^{iφ1} z, e^{iφ2} w)`.
    pub fn torus_rotate(&self, phi0: f64, phi: [f64; 2]) -> Self {
        Polynomial {
            terms: self.terms.iter().map(|(a, c)| (*a, c * Complex64::from_polar(1.0, phi0 + a.dot(phi)))).collect(),
        }
    }

    /// True when the support is exactly the vertex set of the Newton polygon.
    pub fn is_maximally_sparse(&self) -> bool {
        let hull = crate::newton::NewtonPolygon::of(self);
        hull.vertices.len() == self.terms.len()
    }

    pub fn max_coefficient_log_spread(&self) -> f64 {
        let logs: Vec<f64> = self.terms.values().map(|c| c.norm().ln()).collect();
        let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

fn powers(x: Complex64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = Complex64::new(1.0, 0.0);
    for _ in 0..=n {
        out.push(acc);
        acc *= x;
    }
    out
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (alpha, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "({})", c.re)?;
            } else if c.im < 0.0 {
                write!(f, "({}-{}i)", c.re, -c.im)?;
            } else {
                write!(f, "({}+{}i)", c.re, c.im)?;
            }
            if alpha.i > 0 {
                write!(f, "*z^{}", alpha.i)?;
            }
            if alpha.j > 0 {
                write!(f, "*w^{}", alpha.j)?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTerm {
    i: i64,
    j: i64,
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonPolynomial {
    terms: Vec<JsonTerm>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        JsonPolynomial {
            terms: self.terms.iter().map(|(a, c)| JsonTerm { i: a.i, j: a.j, re: c.re, im: c.im }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = JsonPolynomial::deserialize(d)?;
        Polynomial::from_terms(raw.terms.into_iter().map(|t| (LatticePoint::new(t.i, t.j), Complex64::new(t.re, t.im))))
            .map_err(serde::de::Error::custom)
    }
}
