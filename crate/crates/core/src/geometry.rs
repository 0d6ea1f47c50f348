//! Computational domains, Latin-hypercube collocation sampling and
//! deterministic evaluation point sets.

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::distr::Open01;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for "point lies on its face".
pub const FACE_TOL: f64 = 1e-12;

/// Rejection sampling gives up after this many candidates per requested point.
pub const MAX_OVERSAMPLING: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hole {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Hole {
    fn distance(&self, x: &[f64]) -> f64 {
        self.center
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed ball: points on the hole surface count as inside.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.distance(x) <= self.radius
    }
}

/// Axis-aligned box with optional circular/spherical exclusions.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
    holes: Vec<Hole>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>, holes: Vec<Hole>) -> Result<Self> {
        if !(2..=3).contains(&bounds.len()) {
            return Err(Error::Geometry(format!(
                "domain dimension must be 2 or 3, got {}",
                bounds.len()
            )));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Geometry(format!("axis {i}: need min < max, got [{lo}, {hi}]")));
            }
        }
        for (i, h) in holes.iter().enumerate() {
            if h.center.len() != bounds.len() {
                return Err(Error::Geometry(format!("hole {i}: center has wrong dimension")));
            }
            if !(h.radius > 0.0 && h.radius.is_finite()) {
                return Err(Error::Geometry(format!("hole {i}: radius must be positive")));
            }
            let inside = h
                .center
                .iter()
                .zip(&bounds)
                .all(|(c, (lo, hi))| c > lo && c < hi);
            if !inside {
                return Err(Error::Geometry(format!("hole {i}: center outside the domain")));
            }
        }
        Ok(Domain { bounds, holes })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Domain::new(vec![(lo, hi); dim], Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn holes(&self) -> &[Hole] {
        &self.holes
    }

    pub fn in_hole(&self, x: &[f64]) -> bool {
        self.holes.iter().any(|h| h.contains(x))
    }

    /// Inside the box (closed) and outside every hole.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
            && !self.in_hole(x)
    }

    fn strictly_inside(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.bounds)
            .all(|(v, (lo, hi))| *v > *lo && *v < *hi)
            && !self.in_hole(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub t0: f64,
    pub t_max: f64,
}

impl TimeRange {
    pub fn new(t0: f64, t_max: f64) -> Result<Self> {
        if !(t0.is_finite() && t_max.is_finite() && t0 < t_max) {
            return Err(Error::Geometry(format!("need t0 < t_max, got ({t0}, {t_max}]")));
        }
        Ok(TimeRange { t0, t_max })
    }

    pub fn span(&self) -> f64 {
        self.t_max - self.t0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint {
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpaceTimePoint {
    pub fn new(x: Vec<f64>, t: f64) -> Self {
        SpaceTimePoint { x, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    /// Outer face `x[axis] = min` (`high == false`) or `x[axis] = max`.
    Side { axis: usize, high: bool },
    Hole(usize),
}

impl Face {
    /// Outer faces in canonical order: x1 low, x1 high, x2 low, ...
    pub fn sides(dim: usize) -> impl Iterator<Item = Face> {
        (0..dim).flat_map(|axis| [false, true].map(|high| Face::Side { axis, high }))
    }

    /// Index into the canonical outer-face order.
    pub fn side_index(self) -> Option<usize> {
        match self {
            Face::Side { axis, high } => Some(2 * axis + high as usize),
            Face::Hole(_) => None,
        }
    }

    pub fn name(self) -> String {
        match self {
            Face::Side { axis, high } => {
                format!("x{}_{}", axis + 1, if high { "high" } else { "low" })
            }
            Face::Hole(i) => format!("hole{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub point: SpaceTimePoint,
    pub face: Face,
    /// Outward unit normal of the material region.
    pub normal: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleCounts {
    pub interior: usize,
    pub boundary: usize,
    pub initial: usize,
}

/// One epoch's collocation set.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingBatch {
    pub interior: Vec<SpaceTimePoint>,
    pub boundary: Vec<BoundaryPoint>,
    /// Spatial points; time is `t0`.
    pub initial: Vec<Vec<f64>>,
}

/// `n × d` Latin hypercube sample in the open unit cube.
///
/// Along every dimension each stratum `[k/n, (k+1)/n)` holds exactly one
/// point; strata are assigned by an independent uniform permutation per
/// dimension and jittered uniformly inside the stratum.
pub fn lhs_sample<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "Latin hypercube needs n >= 1 and d >= 1, got n={n}, d={d}"
        )));
    }
    let mut out = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    let nf = n as f64;
    for j in 0..d {
        strata.shuffle(rng);
        for (row, &k) in out.iter_mut().zip(&strata) {
            let u: f64 = rng.sample(Open01);
            // (k + u)/n can round up onto the next stratum edge
            row[j] = ((k as f64 + u) / nf).min(next_down((k + 1) as f64 / nf));
        }
    }
    Ok(out)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

fn lerp(lo: f64, hi: f64, u: f64) -> f64 {
    lo + u * (hi - lo)
}

/// Draws interior, boundary and initial collocation points.
///
/// Interior and initial points come from Latin hypercubes mapped onto the
/// box (and time range), with rejection of points inside holes. Boundary
/// points pick a face uniformly among the outer faces (plus the hole
/// surfaces when `hole_faces` is set) and place themselves with the
/// remaining Latin hypercube coordinates.
pub fn sample_batch<R: Rng + ?Sized>(
    domain: &Domain,
    time: &TimeRange,
    counts: SampleCounts,
    hole_faces: bool,
    rng: &mut R,
) -> Result<TrainingBatch> {
    if counts.interior == 0 || counts.boundary == 0 || counts.initial == 0 {
        return Err(Error::InvalidArgument("sample counts must be positive".into()));
    }
    let d = domain.dim();
    let interior = rejection_fill(counts.interior, d + 1, rng, |u| {
        let x: Vec<f64> = (0..d)
            .map(|i| lerp(domain.bounds[i].0, domain.bounds[i].1, u[i]))
            .collect();
        let t = lerp(time.t0, time.t_max, u[d]);
        (domain.strictly_inside(&x) && t > time.t0 && t <= time.t_max)
            .then(|| SpaceTimePoint::new(x, t))
    })?;

    let initial = rejection_fill(counts.initial, d, rng, |u| {
        let x: Vec<f64> = (0..d)
            .map(|i| lerp(domain.bounds[i].0, domain.bounds[i].1, u[i]))
            .collect();
        domain.strictly_inside(&x).then_some(x)
    })?;

    let mut faces: Vec<Face> = Face::sides(d).collect();
    if hole_faces {
        faces.extend((0..domain.holes.len()).map(Face::Hole));
    }
    let mut boundary = Vec::with_capacity(counts.boundary);
    let mut budget = MAX_OVERSAMPLING * counts.boundary;
    while boundary.len() < counts.boundary {
        let need = counts.boundary - boundary.len();
        if budget < need {
            return Err(Error::Geometry(
                "boundary sampling exhausted its rejection budget".into(),
            ));
        }
        budget -= need;
        let u = lhs_sample(need, d, rng)?;
        for row in u {
            let face = faces[rng.random_range(0..faces.len())];
            let t = lerp(time.t0, time.t_max, row[d - 1]);
            if t <= time.t0 {
                continue;
            }
            if let Some(bp) = place_on_face(domain, face, &row[..d - 1], t) {
                boundary.push(bp);
            }
        }
    }
    Ok(TrainingBatch {
        interior,
        boundary,
        initial,
    })
}

fn rejection_fill<R, T, F>(n: usize, d: usize, rng: &mut R, accept: F) -> Result<Vec<T>>
where
    R: Rng + ?Sized,
    F: Fn(&[f64]) -> Option<T>,
{
    let mut out = Vec::with_capacity(n);
    let mut budget = MAX_OVERSAMPLING * n;
    while out.len() < n {
        let need = n - out.len();
        if budget < need {
            return Err(Error::Geometry(format!(
                "rejection sampling accepted only {} of {n} points; holes may cover the domain",
                out.len()
            )));
        }
        budget -= need;
        out.extend(lhs_sample(need, d, rng)?.iter().filter_map(|u| accept(u)));
    }
    Ok(out)
}

/// Maps `d - 1` unit coordinates onto a face; `None` if the result is not on
/// the material boundary (inside a hole, or a hole surface outside the box).
fn place_on_face(domain: &Domain, face: Face, u: &[f64], t: f64) -> Option<BoundaryPoint> {
    let d = domain.dim();
    match face {
        Face::Side { axis, high } => {
            let mut x = Vec::with_capacity(d);
            let mut it = u.iter();
            for (i, &(lo, hi)) in domain.bounds.iter().enumerate() {
                x.push(if i == axis {
                    if high {
                        hi
                    } else {
                        lo
                    }
                } else {
                    lerp(lo, hi, *it.next().unwrap())
                });
            }
            if domain.in_hole(&x) {
                return None;
            }
            let mut normal = vec![0.0; d];
            normal[axis] = if high { 1.0 } else { -1.0 };
            Some(BoundaryPoint {
                point: SpaceTimePoint::new(x, t),
                face,
                normal,
            })
        }
        Face::Hole(i) => {
            let hole = &domain.holes[i];
            let dir = if d == 2 {
                let phi = 2.0 * PI * u[0];
                vec![phi.cos(), phi.sin()]
            } else {
                // uniform on the sphere: z uniform in [-1, 1]
                let z = 2.0 * u[0] - 1.0;
                let phi = 2.0 * PI * u[1];
                let r = (1.0 - z * z).max(0.0).sqrt();
                vec![r * phi.cos(), r * phi.sin(), z]
            };
            let x: Vec<f64> = hole
                .center
                .iter()
                .zip(&dir)
                .map(|(c, v)| c + hole.radius * v)
                .collect();
            let in_box = x
                .iter()
                .zip(&domain.bounds)
                .all(|(v, (lo, hi))| v >= lo && v <= hi);
            let in_other = domain
                .holes
                .iter()
                .enumerate()
                .any(|(j, h)| j != i && h.contains(&x));
            if !in_box || in_other {
                return None;
            }
            Some(BoundaryPoint {
                point: SpaceTimePoint::new(x, t),
                face,
                normal: dir.iter().map(|v| -v).collect(),
            })
        }
    }
}

/// Whether `bp` satisfies its face equation to [`FACE_TOL`].
pub fn on_face(domain: &Domain, bp: &BoundaryPoint) -> bool {
    match bp.face {
        Face::Side { axis, high } => {
            let (lo, hi) = domain.bounds[axis];
            let target = if high { hi } else { lo };
            (bp.point.x[axis] - target).abs() <= FACE_TOL
        }
        Face::Hole(i) => {
            let h = &domain.holes[i];
            (h.distance(&bp.point.x) - h.radius).abs() <= FACE_TOL * h.radius.max(1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub axis: usize,
    pub value: f64,
}

/// Evaluation point set descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalSet {
    /// Tensor-product equidistant nodes including the box corners.
    Grid {
        resolution: usize,
        t: f64,
        exclude_holes: bool,
    },
    /// Fibonacci-spiral points on a sphere (circle in 2D).
    Sphere {
        center: Vec<f64>,
        radius: f64,
        count: usize,
        t: f64,
    },
    /// Union of axis-parallel plane grids.
    Planes {
        planes: Vec<Plane>,
        resolution: usize,
        t: f64,
        exclude_holes: bool,
    },
}

impl EvalSet {
    pub fn time(&self) -> f64 {
        match self {
            EvalSet::Grid { t, .. } | EvalSet::Sphere { t, .. } | EvalSet::Planes { t, .. } => *t,
        }
    }
}

fn axis_nodes(lo: f64, hi: f64, res: usize) -> Vec<f64> {
    if res == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..res)
        .map(|i| {
            if i + 1 == res {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (res - 1) as f64
            }
        })
        .collect()
}

/// Cartesian product of node lists, first axis slowest.
fn tensor_grid(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for nodes in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                nodes.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Deterministic evaluation points for `set` over `domain`.
pub fn build_test_set(domain: &Domain, set: &EvalSet) -> Result<Vec<SpaceTimePoint>> {
    let d = domain.dim();
    match set {
        EvalSet::Grid {
            resolution,
            t,
            exclude_holes,
        } => {
            if *resolution == 0 {
                return Err(Error::InvalidArgument("grid resolution must be positive".into()));
            }
            let axes: Vec<Vec<f64>> = domain
                .bounds
                .iter()
                .map(|&(lo, hi)| axis_nodes(lo, hi, *resolution))
                .collect();
            Ok(tensor_grid(&axes)
                .into_iter()
                .filter(|x| !(*exclude_holes && domain.in_hole(x)))
                .map(|x| SpaceTimePoint::new(x, *t))
                .collect())
        }
        EvalSet::Sphere {
            center,
            radius,
            count,
            t,
        } => {
            if center.len() != d {
                return Err(Error::Geometry("sphere center has wrong dimension".into()));
            }
            let n = *count;
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut pts = Vec::with_capacity(n);
            for i in 0..n {
                let dir = if d == 2 {
                    let phi = 2.0 * PI * i as f64 / n as f64;
                    vec![phi.cos(), phi.sin()]
                } else {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                };
                let x: Vec<f64> = center.iter().zip(&dir).map(|(c, v)| c + radius * v).collect();
                if !domain.contains(&x) {
                    return Err(Error::Geometry(format!(
                        "sphere of radius {radius} leaves the material domain at {x:?}"
                    )));
                }
                pts.push(SpaceTimePoint::new(x, *t));
            }
            Ok(pts)
        }
        EvalSet::Planes {
            planes,
            resolution,
            t,
            exclude_holes,
        } => {
            let mut seen = HashSet::new();
            let mut pts = Vec::new();
            for plane in planes {
                let (lo, hi) = *domain.bounds.get(plane.axis).ok_or_else(|| {
                    Error::Geometry(format!("plane axis {} out of range", plane.axis))
                })?;
                if plane.value < lo || plane.value > hi {
                    return Err(Error::Geometry(format!(
                        "plane x{} = {} lies outside the domain",
                        plane.axis + 1,
                        plane.value
                    )));
                }
                let axes: Vec<Vec<f64>> = domain
                    .bounds
                    .iter()
                    .enumerate()
                    .map(|(i, &(lo, hi))| {
                        if i == plane.axis {
                            vec![plane.value]
                        } else {
                            axis_nodes(lo, hi, *resolution)
                        }
                    })
                    .collect();
                for x in tensor_grid(&axes) {
                    if *exclude_holes && domain.in_hole(&x) {
                        continue;
                    }
                    let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
                    if seen.insert(key) {
                        pts.push(SpaceTimePoint::new(x, *t));
                    }
                }
            }
            Ok(pts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn porous() -> Domain {
        let s = 10.0 * PI;
        let holes = (0..2)
            .flat_map(|i| {
                (0..2).map(move |j| Hole {
                    center: vec![2.5 * PI + 5.0 * PI * i as f64, 2.5 * PI + 5.0 * PI * j as f64],
                    radius: PI,
                })
            })
            .collect();
        Domain::new(vec![(0.0, s), (0.0, s)], holes).unwrap()
    }

    #[test]
    fn lhs_single_point() {
        let p = lhs_sample(1, 3, &mut rng(0)).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].iter().all(|v| (0.0..1.0).contains(v)));
    }

    #[test]
    fn lhs_four_strata() {
        let mut col: Vec<f64> = lhs_sample(4, 1, &mut rng(3)).unwrap().into_iter().map(|r| r[0]).collect();
        col.sort_by(f64::total_cmp);
        for (k, v) in col.iter().enumerate() {
            assert!(*v >= k as f64 / 4.0 && *v < (k + 1) as f64 / 4.0);
        }
    }

    #[test]
    fn lhs_rejects_empty() {
        assert!(matches!(lhs_sample(0, 2, &mut rng(0)), Err(Error::InvalidArgument(_))));
        assert!(matches!(lhs_sample(2, 0, &mut rng(0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn batch_counts_and_invariants() {
        let dom = porous();
        let time = TimeRange::new(0.0, 10.0).unwrap();
        let counts = SampleCounts {
            interior: 1500,
            boundary: 300,
            initial: 700,
        };
        let b = sample_batch(&dom, &time, counts, false, &mut rng(11)).unwrap();
        assert_eq!(b.interior.len(), 1500);
        assert_eq!(b.boundary.len(), 300);
        assert_eq!(b.initial.len(), 700);
        for p in &b.interior {
            assert!(dom.strictly_inside(&p.x));
            assert!(p.t > 0.0 && p.t <= 10.0);
            for h in dom.holes() {
                assert!(h.distance(&p.x) > h.radius);
            }
        }
        for x in &b.initial {
            assert!(!dom.in_hole(x));
        }
        for bp in &b.boundary {
            assert!(on_face(&dom, bp));
            assert!(matches!(bp.face, Face::Side { .. }));
            let norm: f64 = bp.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn low_face_normal_points_outward() {
        let dom = Domain::cube(2, 0.0, 1.0).unwrap();
        let time = TimeRange::new(0.0, 1.0).unwrap();
        let counts = SampleCounts {
            interior: 4,
            boundary: 200,
            initial: 4,
        };
        let b = sample_batch(&dom, &time, counts, false, &mut rng(2)).unwrap();
        let low = b
            .boundary
            .iter()
            .find(|bp| bp.face == Face::Side { axis: 0, high: false })
            .unwrap();
        assert_eq!(low.normal, vec![-1.0, 0.0]);
        assert_eq!(low.point.x[0], 0.0);
    }

    #[test]
    fn hole_surface_points_have_inward_normals() {
        let dom = porous();
        let time = TimeRange::new(0.0, 1.0).unwrap();
        let counts = SampleCounts {
            interior: 4,
            boundary: 400,
            initial: 4,
        };
        let b = sample_batch(&dom, &time, counts, true, &mut rng(5)).unwrap();
        let on_holes: Vec<_> = b.boundary.iter().filter(|bp| matches!(bp.face, Face::Hole(_))).collect();
        assert!(!on_holes.is_empty());
        for bp in on_holes {
            assert!(on_face(&dom, bp));
            let Face::Hole(i) = bp.face else { unreachable!() };
            let c = &dom.holes()[i].center;
            // normal points from the surface towards the hole center
            let dot: f64 = bp.normal.iter().zip(c.iter().zip(&bp.point.x)).map(|(n, (c, x))| n * (c - x)).sum();
            assert!(dot > 0.0);
        }
    }

    #[test]
    fn fully_covered_domain_is_geometry_error() {
        let dom = Domain::new(
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![Hole {
                center: vec![0.5, 0.5],
                radius: 10.0,
            }],
        )
        .unwrap();
        let time = TimeRange::new(0.0, 1.0).unwrap();
        let counts = SampleCounts {
            interior: 2,
            boundary: 2,
            initial: 2,
        };
        assert!(matches!(
            sample_batch(&dom, &time, counts, false, &mut rng(0)),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn same_seed_same_batch() {
        let dom = porous();
        let time = TimeRange::new(0.0, 10.0).unwrap();
        let counts = SampleCounts {
            interior: 50,
            boundary: 20,
            initial: 30,
        };
        let a = sample_batch(&dom, &time, counts, true, &mut rng(9)).unwrap();
        let b = sample_batch(&dom, &time, counts, true, &mut rng(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_128_squared() {
        let dom = Domain::cube(2, 0.0, 10.0 * PI).unwrap();
        let set = EvalSet::Grid {
            resolution: 128,
            t: 2.5,
            exclude_holes: false,
        };
        let pts = build_test_set(&dom, &set).unwrap();
        assert_eq!(pts.len(), 16384);
        assert_eq!(pts[0].x, vec![0.0, 0.0]);
        assert_eq!(pts[16383].x, vec![10.0 * PI, 10.0 * PI]);
        assert!(pts.iter().all(|p| p.t == 2.5));
    }

    #[test]
    fn grid_excludes_central_hole() {
        let dom = Domain::new(
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![Hole {
                center: vec![0.5, 0.5],
                radius: 0.2,
            }],
        )
        .unwrap();
        let set = EvalSet::Grid {
            resolution: 21,
            t: 0.0,
            exclude_holes: true,
        };
        let pts = build_test_set(&dom, &set).unwrap();
        assert!(pts.len() < 441);
        assert!(pts.iter().all(|p| !dom.in_hole(&p.x)));
    }

    #[test]
    fn sphere_surface_points() {
        let c = 5.0 * PI;
        let dom = Domain::cube(3, 0.0, 10.0 * PI).unwrap();
        let set = EvalSet::Sphere {
            center: vec![c; 3],
            radius: 3.0,
            count: 3000,
            t: 2.5,
        };
        let pts = build_test_set(&dom, &set).unwrap();
        assert_eq!(pts.len(), 3000);
        for p in &pts {
            let r: f64 = p.x.iter().map(|v| (v - c) * (v - c)).sum::<f64>().sqrt();
            assert!((r - 3.0).abs() < 1e-12);
        }
        let too_big = EvalSet::Sphere {
            center: vec![c; 3],
            radius: 20.0,
            count: 10,
            t: 2.5,
        };
        assert!(matches!(build_test_set(&dom, &too_big), Err(Error::Geometry(_))));
    }

    #[test]
    fn cut_planes_deduplicate_and_skip_holes() {
        let dom = Domain::new(
            vec![(0.0, 1.0); 3],
            vec![Hole {
                center: vec![0.25, 0.5, 0.5],
                radius: 0.1,
            }],
        )
        .unwrap();
        let set = EvalSet::Planes {
            planes: vec![Plane { axis: 2, value: 0.5 }, Plane { axis: 0, value: 0.5 }],
            resolution: 5,
            t: 1.0,
            exclude_holes: true,
        };
        let pts = build_test_set(&dom, &set).unwrap();
        // two 5x5 planes sharing a 5-point line, minus the hole center node
        assert_eq!(pts.len(), 25 + 25 - 5 - 1);
        assert!(pts.iter().all(|p| !dom.in_hole(&p.x)));
    }
}
