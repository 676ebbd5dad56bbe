//! Newton polygons of bivariate polynomials.

use serde::{Deserialize, Serialize};

use crate::poly::{LatticePoint, Polynomial};

/// Convex hull of a lattice point set, vertices counterclockwise starting
/// from the lexicographically smallest one. Collinear boundary points are
/// not vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonPolygon {
    pub vertices: Vec<LatticePoint>,
    pub euclidean_area: f64,
}

fn cross(o: LatticePoint, a: LatticePoint, b: LatticePoint) -> i64 {
    (a.i - o.i) * (b.j - o.j) - (a.j - o.j) * (b.i - o.i)
}

impl NewtonPolygon {
    pub fn of(p: &Polynomial) -> Self {
        Self::hull(&p.support())
    }

    /// Monotone-chain convex hull.
    pub fn hull(points: &[LatticePoint]) -> Self {
        let mut pts = points.to_vec();
        pts.sort();
        pts.dedup();
        if pts.len() <= 2 {
            return NewtonPolygon { vertices: pts, euclidean_area: 0.0 };
        }
        let mut lower: Vec<LatticePoint> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<LatticePoint> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        let mut hull = NewtonPolygon { vertices: lower, euclidean_area: 0.0 };
        if hull.vertices.len() <= 2 {
            // all points collinear: keep the two extreme points
            hull.vertices = vec![pts[0], *pts.last().unwrap()];
        }
        hull.euclidean_area = hull.twice_area() as f64 / 2.0;
        hull
    }

    /// Twice the shoelace area, an integer for lattice polygons.
    pub fn twice_area(&self) -> i64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0;
        }
        let mut s = 0;
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[(k + 1) % n]);
            s += a.i * b.j - a.j * b.i;
        }
        s.abs()
    }

    pub fn is_degenerate(&self) -> bool {
        self.twice_area() == 0
    }

    /// Edges `(v_k, v_{k+1})` in counterclockwise order.
    pub fn edges(&self) -> Vec<(LatticePoint, LatticePoint)> {
        let n = self.vertices.len();
        match n {
            0 | 1 => Vec::new(),
            2 => vec![(self.vertices[0], self.vertices[1])],
            _ => (0..n).map(|k| (self.vertices[k], self.vertices[(k + 1) % n])).collect(),
        }
    }

    /// Whether `p` lies in the closed polygon.
    pub fn contains(&self, p: LatticePoint) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => self.vertices[0] == p,
            2 => on_segment(self.vertices[0], self.vertices[1], p),
            _ => self.edges().iter().all(|&(a, b)| cross(a, b, p) >= 0),
        }
    }

    /// Whether the segment `[a, b]` lies in the boundary of the polygon.
    pub fn segment_on_boundary(&self, a: LatticePoint, b: LatticePoint) -> bool {
        if self.vertices.len() == 2 {
            return on_segment(self.vertices[0], self.vertices[1], a)
                && on_segment(self.vertices[0], self.vertices[1], b);
        }
        self.edges().iter().any(|&(u, v)| on_segment(u, v, a) && on_segment(u, v, b))
    }

    /// Largest coordinate range over the vertices.
    pub fn coordinate_spread(&self) -> i64 {
        let is = self.vertices.iter().map(|v| v.i);
        let js = self.vertices.iter().map(|v| v.j);
        let ri = is.clone().max().unwrap_or(0) - is.min().unwrap_or(0);
        let rj = js.clone().max().unwrap_or(0) - js.min().unwrap_or(0);
        ri.max(rj)
    }
}

pub(crate) fn on_segment(a: LatticePoint, b: LatticePoint, p: LatticePoint) -> bool {
    cross(a, b, p) == 0 && p.i >= a.i.min(b.i) && p.i <= a.i.max(b.i) && p.j >= a.j.min(b.j) && p.j <= a.j.max(b.j)
}
