//! Coamoeba region decomposition, extra-piece detection and the
//! consistency checks built on it.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{critical_points, sample_curve, CriticalPoint, CurvePointCloud, GridSpec};
use crate::error::{Error, Result};
use crate::measure::{area_mult_coamoeba, FiberCounter, DEFAULT_CRITICAL_TOL};
use crate::newton::NewtonPolygon;
use crate::phase::{real_up_to_torus_action, TorusPhase};
use crate::poly::Polynomial;
use crate::raster::{periodic_edt, TorusRaster};
use crate::torus::TorusPoint;
use crate::tropical::{CodualLine, TropicalCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    /// Distance to a codual line, in cells, below which a boundary cell is on it.
    pub line_tol_cells: f64,
    /// Components with fewer cells are discarded as raster noise.
    pub min_component_cells: usize,
    /// On-critical arcs shorter than this do not make an extra-piece.
    pub min_arc_cells: usize,
    /// Interior cells at which the fiber count is sampled.
    pub samples: usize,
}

impl Default for RegionParams {
    fn default() -> Self {
        RegionParams { line_tol_cells: 2.0, min_component_cells: 8, min_arc_cells: 3, samples: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryClass {
    OnCodualLine,
    OnCriticalCurve,
    /// Neither: the edge of the raster between two regular regions.
    Unattributed,
}

/// An 8-connected run of boundary cells sharing a class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArc {
    pub class: BoundaryClass,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Raster cell indices, ascending.
    pub cells: Vec<u32>,
    /// Rounded raster density shared by the cells.
    pub multiplicity: u32,
    /// `cells · (2π/N)²`
    pub area: f64,
    /// Most frequent sampled Arg fiber count.
    pub k: usize,
    pub k_samples: Vec<usize>,
    /// Fiber counts of the projection to the quotient torus at the same
    /// samples: curve points over the sample's class mod π.
    pub alga_samples: Vec<usize>,
    pub sample_points: Vec<TorusPoint>,
    pub arcs: Vec<BoundaryArc>,
    pub extra_piece: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub resolution: usize,
    pub components: Vec<Region>,
    /// Arg fiber count, when the same at every sample.
    pub global_k_constant: Option<usize>,
    /// Quotient-torus fiber count, when the same at every sample.
    pub global_alga_k: Option<usize>,
    /// Occupied regular cells left out because their component was too small.
    pub dropped_cells: usize,
    pub params: RegionParams,
}

impl RegionReport {
    pub fn has_extra_piece(&self) -> bool {
        self.components.iter().any(|c| c.extra_piece)
    }
}

const NEIGHBORS4: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

fn neighbors8() -> impl Iterator<Item = (isize, isize)> {
    (-1..=1).flat_map(|a| (-1..=1).map(move |b| (a, b))).filter(|&d| d != (0, 0))
}

fn shift(n: usize, cell: usize, d: (isize, isize)) -> usize {
    let (a, b) = ((cell / n) as isize, (cell % n) as isize);
    let m = n as isize;
    ((a + d.0).rem_euclid(m) * m + (b + d.1).rem_euclid(m)) as usize
}

/// Splits the coamoeba raster into regions of constant multiplicity away
/// from critical values, classifies their boundaries and samples the fiber
/// count inside each. Without a counter the raster multiplicity is used.
///
/// A boundary cell is on a codual line when it is within `line_tol_cells`
/// of one, or when it borders the removed critical band only where that
/// band consists of critical cells lying on codual lines.
pub fn region_decomposition(
    raster: &TorusRaster,
    critical_values: &[TorusPoint],
    coduals: &[CodualLine],
    counter: Option<&FiberCounter<'_>>,
    params: &RegionParams,
) -> Result<RegionReport> {
    let n = raster.resolution;
    let cells = n * n;
    let mut crit = raster.critical.clone();
    for t in critical_values {
        let (a, b) = raster.cell_of(t);
        crit[raster.index(a, b)] = true;
    }
    let removed = raster.dilate(&crit, 1);
    let mult: Vec<u32> = (0..cells).map(|c| raster.multiplicity(c)).collect();
    let keep: Vec<bool> = (0..cells).map(|c| raster.occupancy[c] && mult[c] >= 1 && !removed[c]).collect();

    let mut label = vec![u32::MAX; cells];
    let mut groups: Vec<Vec<u32>> = Vec::new();
    let mut dropped = 0;
    for start in 0..cells {
        if !keep[start] || label[start] != u32::MAX {
            continue;
        }
        let id = groups.len() as u32;
        let mut members = vec![start as u32];
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(c) = queue.pop_front() {
            for d in NEIGHBORS4 {
                let q = shift(n, c, d);
                if keep[q] && label[q] == u32::MAX && mult[q] == mult[start] {
                    label[q] = id;
                    members.push(q as u32);
                    queue.push_back(q);
                }
            }
        }
        if members.len() < params.min_component_cells {
            dropped += members.len();
            for &m in &members {
                label[m as usize] = u32::MAX - 1;
            }
            // keep the id slot so labels stay dense
            groups.push(Vec::new());
        } else {
            members.sort_unstable();
            groups.push(members);
        }
    }
    if groups.iter().all(|g| g.is_empty()) {
        return Err(Error::EmptyCoamoeba);
    }

    let width = raster.cell_width();
    let line_tol = params.line_tol_cells * width;
    let near_codual = |c: usize| {
        let t = raster.center(c / n, c % n);
        coduals.iter().any(|l| l.distance(&t) <= line_tol)
    };
    // critical cells that do not lie on the codual lines, widened to reach
    // the cells bordering the removed band
    let off_codual: Vec<bool> = (0..cells).map(|c| crit[c] && !near_codual(c)).collect();
    let critical_reach = raster.dilate(&off_codual, 2);
    let mut components = Vec::new();
    for (id, members) in groups.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let inside = |c: usize| label[c] == id as u32;
        let boundary: Vec<usize> = members
            .iter()
            .map(|&c| c as usize)
            .filter(|&c| NEIGHBORS4.iter().any(|&d| !inside(shift(n, c, d))))
            .collect();
        let class_of = |c: usize| {
            let at_band = neighbors8().any(|d| removed[shift(n, c, d)]);
            if near_codual(c) || (at_band && !critical_reach[c]) {
                BoundaryClass::OnCodualLine
            } else if at_band {
                BoundaryClass::OnCriticalCurve
            } else {
                BoundaryClass::Unattributed
            }
        };
        let classes: Vec<BoundaryClass> = boundary.iter().map(|&c| class_of(c)).collect();
        let arcs = boundary_arcs(n, &boundary, &classes);
        let extra_piece =
            arcs.iter().any(|a| a.class == BoundaryClass::OnCriticalCurve && a.cells >= params.min_arc_cells);

        let depth = periodic_edt(&(0..cells).map(|c| !inside(c)).collect::<Vec<_>>(), n);
        let mut order: Vec<usize> = members.iter().map(|&c| c as usize).collect();
        order.sort_by(|&a, &b| depth[b].total_cmp(&depth[a]).then(a.cmp(&b)));
        let mut sample_points: Vec<TorusPoint> = Vec::new();
        let mut k_samples = Vec::new();
        let mut alga_samples = Vec::new();
        let min_sep = 3.0 * width;
        for &c in &order {
            if k_samples.len() == params.samples {
                break;
            }
            let t = raster.center(c / n, c % n);
            if sample_points.iter().any(|s| s.distance(&t) < min_sep) {
                continue;
            }
            // the four points of the torus over the same point of the quotient
            let mut counts = [0usize; 4];
            let mut regular = true;
            for (slot, (v1, v2)) in [(0.0, 0.0), (PI, 0.0), (0.0, PI), (PI, PI)].into_iter().enumerate() {
                let q = TorusPoint::new(t.theta1 + v1, t.theta2 + v2);
                counts[slot] = match counter {
                    Some(fc) => match fc.arg_fiber_count(q) {
                        Ok(k) => k,
                        Err(Error::NearCriticalQuery { .. }) => {
                            regular = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    },
                    None => {
                        let (a, b) = raster.cell_of(&q);
                        let cell = raster.index(a, b);
                        if removed[cell] {
                            regular = false;
                            break;
                        }
                        mult[cell] as usize
                    }
                };
            }
            if !regular {
                continue;
            }
            sample_points.push(t);
            k_samples.push(counts[0]);
            alga_samples.push(counts.iter().sum());
        }
        let k = mode(&k_samples).unwrap_or(mult[members[0] as usize] as usize);
        components.push(Region {
            cells: members.clone(),
            multiplicity: mult[members[0] as usize],
            area: members.len() as f64 * width * width,
            k,
            k_samples,
            alga_samples,
            sample_points,
            arcs,
            extra_piece,
        });
    }
    let constant = |samples: &dyn Fn(&Region) -> &Vec<usize>| {
        let all: Vec<usize> = components.iter().flat_map(|c| samples(c).iter().copied()).collect();
        let first = *all.first()?;
        all.iter().all(|&k| k == first).then_some(first)
    };
    let global_k_constant = constant(&|c| &c.k_samples);
    let global_alga_k = constant(&|c| &c.alga_samples);
    Ok(RegionReport {
        resolution: n,
        components,
        global_k_constant,
        global_alga_k,
        dropped_cells: dropped,
        params: *params,
    })
}

fn mode(v: &[usize]) -> Option<usize> {
    let mut counts = std::collections::BTreeMap::new();
    for &k in v {
        *counts.entry(k).or_insert(0usize) += 1;
    }
    // ties go to the smaller value
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map(|(k, _)| k)
}

fn boundary_arcs(n: usize, boundary: &[usize], classes: &[BoundaryClass]) -> Vec<BoundaryArc> {
    let pos: std::collections::HashMap<usize, usize> = boundary.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut seen = vec![false; boundary.len()];
    let mut arcs = Vec::new();
    for s in 0..boundary.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut count = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            count += 1;
            for d in neighbors8() {
                if let Some(&j) = pos.get(&shift(n, boundary[i], d)) {
                    if !seen[j] && classes[j] == classes[s] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        arcs.push(BoundaryArc { class: classes[s], cells: count });
    }
    arcs
}

/// Constant fiber count against absence of extra-pieces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberConstancyVerdict {
    pub k_constant: bool,
    pub k_value: Option<usize>,
    /// `2·Area(Δ)`
    pub k_bound: i64,
    pub no_extra_piece: bool,
    pub equivalence_holds: bool,
    pub k_within_bound: bool,
    /// Quotient-torus fiber count, when constant.
    pub alga_k: Option<usize>,
}

pub fn check_fiber_constancy(report: &RegionReport, polygon: &NewtonPolygon) -> FiberConstancyVerdict {
    let k_value = report.global_k_constant;
    let k_bound = polygon.twice_area();
    let k_constant = k_value.is_some();
    let no_extra_piece = !report.has_extra_piece();
    let max_k = report.components.iter().flat_map(|c| c.k_samples.iter().copied()).max().unwrap_or(0);
    FiberConstancyVerdict {
        k_constant,
        k_value,
        k_bound,
        no_extra_piece,
        equivalence_holds: k_constant == no_extra_piece,
        k_within_bound: max_k as i64 <= k_bound,
        alga_k: report.global_alga_k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum HarnackVerdict {
    MaximalHarnack,
    NotMaximal,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarnackThresholds {
    pub maximal: f64,
    pub inconclusive: f64,
    pub phase_tol: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for HarnackThresholds {
    fn default() -> Self {
        HarnackThresholds { maximal: 0.98, inconclusive: 0.95, phase_tol: 1e-9, probes: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnackReport {
    pub ratio: f64,
    pub area_mult: f64,
    pub bound: f64,
    pub real_torus_phase: Option<TorusPhase>,
    pub max_log_fiber: usize,
    pub verdict: HarnackVerdict,
    pub thresholds: HarnackThresholds,
}

/// Largest Log-fiber count over seeded probes at Log images of curve points.
pub fn max_log_fiber(cloud: &CurvePointCloud, counter: &FiberCounter<'_>, probes: usize, seed: u64) -> usize {
    let mut logs: Vec<[f64; 2]> = cloud.points().filter(|p| !p.singular).map(|p| p.log()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    logs.shuffle(&mut rng);
    let mut best = 0;
    let mut done = 0;
    for x in logs.into_iter().take(8 * probes) {
        if done == probes {
            break;
        }
        if let Ok(n) = counter.log_fiber_count(x) {
            best = best.max(n);
            done += 1;
        }
    }
    best
}

pub fn harnack_test(p: &Polynomial) -> Result<HarnackReport> {
    harnack_test_with(p, &GridSpec::for_polynomial(p), &HarnackThresholds::default())
}

pub fn harnack_test_with(p: &Polynomial, grid: &GridSpec, th: &HarnackThresholds) -> Result<HarnackReport> {
    if NewtonPolygon::of(p).is_degenerate() {
        return Err(Error::DegenerateNewtonPolygon);
    }
    let area = area_mult_coamoeba(p, grid)?;
    let phase = real_up_to_torus_action(p, th.phase_tol);
    let cloud = sample_curve(p, grid)?;
    let crit: Vec<CriticalPoint> = critical_points(&cloud, DEFAULT_CRITICAL_TOL);
    let counter = FiberCounter::new(&cloud, &crit);
    let max_log = max_log_fiber(&cloud, &counter, th.probes, th.seed);
    let verdict = if area.ratio >= th.maximal {
        if phase.is_some() && max_log <= 2 {
            HarnackVerdict::MaximalHarnack
        } else {
            HarnackVerdict::Inconclusive
        }
    } else if area.ratio > th.inconclusive {
        HarnackVerdict::Inconclusive
    } else {
        HarnackVerdict::NotMaximal
    };
    Ok(HarnackReport {
        ratio: area.ratio,
        area_mult: area.area_mult,
        bound: area.bound,
        real_torus_phase: phase,
        max_log_fiber: max_log,
        verdict,
        thresholds: *th,
    })
}

/// Multiplicity area against `k` times the area of the quotient image, with
/// `k` the fiber count of the projection to the quotient torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgaVerdict {
    pub k: usize,
    pub alga_area: f64,
    pub area_mult: f64,
    /// `|area_mult − k·alga_area| / area_mult`
    pub relative_residual: f64,
    pub identity_holds: bool,
    /// For maximal curves: `k = 2·Area(Δ)` and `alga_area = π² ± 2%`.
    pub harnack_checks: Option<bool>,
}

pub fn check_alga_identity(
    p: &Polynomial,
    report: &RegionReport,
    alga_area: f64,
    area_mult: f64,
    verdict: Option<HarnackVerdict>,
) -> Result<AlgaVerdict> {
    if report.has_extra_piece() {
        return Err(Error::NotApplicable("extra-pieces present".into()));
    }
    let k = report.global_alga_k.ok_or_else(|| Error::NotApplicable("quotient fiber count is not constant".into()))?;
    let relative_residual = (area_mult - k as f64 * alga_area).abs() / area_mult;
    let harnack_checks = (verdict == Some(HarnackVerdict::MaximalHarnack))
        .then(|| k as i64 == NewtonPolygon::of(p).twice_area() && (alga_area - PI * PI).abs() <= 0.02 * PI * PI);
    Ok(AlgaVerdict {
        k,
        alga_area,
        area_mult,
        relative_residual,
        identity_holds: relative_residual <= 0.05,
        harnack_checks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimeAreaVerdict {
    pub no_extra_piece: bool,
    pub harnack: bool,
    pub spine_vertex_count: usize,
    pub maximally_sparse: bool,
    pub consistent: bool,
}

fn is_prime(n: i64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// For `2·Area(Δ)` prime: no extra-piece exactly when the curve is Harnack
/// or it is maximally sparse with a one-vertex spine.
pub fn check_prime_area_criterion(
    p: &Polynomial,
    spine: &TropicalCurve,
    report: &RegionReport,
    verdict: HarnackVerdict,
) -> Result<PrimeAreaVerdict> {
    let twice = NewtonPolygon::of(p).twice_area();
    if !is_prime(twice) {
        return Err(Error::PreconditionFails(format!("2·Area(Δ) = {twice} is not prime")));
    }
    let no_extra_piece = !report.has_extra_piece();
    let harnack = verdict == HarnackVerdict::MaximalHarnack;
    let spine_vertex_count = spine.vertices.len();
    let maximally_sparse = p.is_maximally_sparse();
    Ok(PrimeAreaVerdict {
        no_extra_piece,
        harnack,
        spine_vertex_count,
        maximally_sparse,
        consistent: no_extra_piece == (harnack || (spine_vertex_count == 1 && maximally_sparse)),
    })
}
