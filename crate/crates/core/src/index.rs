//! Bucket grids for radius queries on the torus and in the plane.

use std::collections::HashMap;
use std::f64::consts::TAU;

use crate::torus::TorusPoint;

pub(crate) struct TorusIndex {
    bins: usize,
    cells: Vec<Vec<u32>>,
    pub(crate) points: Vec<TorusPoint>,
}

impl TorusIndex {
    /// Queries are exact for radii up to `radius`.
    pub(crate) fn new(points: Vec<TorusPoint>, radius: f64) -> Self {
        let bins = ((TAU / radius).floor() as usize).clamp(1, 4096);
        let mut cells = vec![Vec::new(); bins * bins];
        for (n, p) in points.iter().enumerate() {
            let (a, b) = Self::bin(bins, p);
            cells[a * bins + b].push(n as u32);
        }
        TorusIndex { bins, cells, points }
    }

    fn bin(bins: usize, p: &TorusPoint) -> (usize, usize) {
        let f = |t: f64| ((t / TAU * bins as f64) as usize).min(bins - 1);
        (f(p.theta1), f(p.theta2))
    }

    /// Indices within distance `r`, ascending.
    pub(crate) fn within(&self, q: &TorusPoint, r: f64) -> Vec<usize> {
        let (a, b) = Self::bin(self.bins, q);
        let span: Vec<isize> = if self.bins < 3 { (0..self.bins as isize).collect() } else { vec![-1, 0, 1] };
        let mut out = Vec::new();
        let mut seen = Vec::new();
        for da in &span {
            for db in &span {
                let ia = if self.bins < 3 {
                    *da as usize
                } else {
                    (a as isize + da).rem_euclid(self.bins as isize) as usize
                };
                let ib = if self.bins < 3 {
                    *db as usize
                } else {
                    (b as isize + db).rem_euclid(self.bins as isize) as usize
                };
                let cell = ia * self.bins + ib;
                if seen.contains(&cell) {
                    continue;
                }
                seen.push(cell);
                for &n in &self.cells[cell] {
                    if self.points[n as usize].distance(q) <= r {
                        out.push(n as usize);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub(crate) fn nearest_within(&self, q: &TorusPoint, r: f64) -> Option<f64> {
        self.within(q, r).into_iter().map(|n| self.points[n].distance(q)).min_by(|a, b| a.total_cmp(b))
    }
}

pub(crate) struct PlaneIndex {
    cell: f64,
    map: HashMap<(i64, i64), Vec<u32>>,
    pub(crate) points: Vec<[f64; 2]>,
}

impl PlaneIndex {
    pub(crate) fn new(points: Vec<[f64; 2]>, radius: f64) -> Self {
        let mut map: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        for (n, p) in points.iter().enumerate() {
            if p[0].is_finite() && p[1].is_finite() {
                map.entry(Self::key(radius, p)).or_default().push(n as u32);
            }
        }
        PlaneIndex { cell: radius, map, points }
    }

    fn key(cell: f64, p: &[f64; 2]) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    pub(crate) fn within(&self, q: &[f64; 2], r: f64) -> Vec<usize> {
        let (a, b) = Self::key(self.cell, q);
        let mut out = Vec::new();
        for da in -1..=1 {
            for db in -1..=1 {
                if let Some(list) = self.map.get(&(a + da, b + db)) {
                    for &n in list {
                        let p = self.points[n as usize];
                        if (p[0] - q[0]).hypot(p[1] - q[1]) <= r {
                            out.push(n as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub(crate) fn nearest_within(&self, q: &[f64; 2], r: f64) -> Option<f64> {
        self.within(q, r)
            .into_iter()
            .map(|n| (self.points[n][0] - q[0]).hypot(self.points[n][1] - q[1]))
            .min_by(|a, b| a.total_cmp(b))
    }
}
