//! Built-in wave problems and user-defined problems from expressions.
//!
//! Every problem is posed in physical coordinates. Neumann data is the
//! outward normal derivative `∂u/∂n` on each face.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::geometry::{Domain, EvalSet, Face, Hole, Plane, SampleCounts, TimeRange};

/// `g(x, t)`.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// `h(x)`.
pub type SpatialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `f(x, t, u)` returning `(f, ∂f/∂u)`.
pub type ForcingFn = Arc<dyn Fn(&[f64], f64, f64) -> (f64, f64) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

/// Per-face boundary data, outer faces in [`Face::sides`] order.
#[derive(Clone)]
pub struct BoundaryData {
    pub kind: BoundaryKind,
    pub faces: Vec<SpaceTimeFn>,
    /// Data on hole surfaces; only needed when holes carry collocation points.
    pub holes: Option<SpaceTimeFn>,
}

impl BoundaryData {
    pub fn for_face(&self, face: Face) -> Result<&SpaceTimeFn> {
        match face {
            Face::Side { .. } => Ok(&self.faces[face.side_index().expect("side face")]),
            Face::Hole(_) => self
                .holes
                .as_ref()
                .ok_or_else(|| Error::Config("problem has no hole-surface boundary data".into())),
        }
    }
}

/// Exact solution value with its physical-coordinate derivatives; index `d`
/// of `grad` and `diag2` is time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactValue {
    pub u: f64,
    pub grad: Vec<f64>,
    pub diag2: Vec<f64>,
}

pub trait ExactSolution: Send + Sync {
    fn eval(&self, x: &[f64], t: f64) -> ExactValue;
}

struct ClosedForm(fn(&[f64], f64) -> ExactValue);

impl ExactSolution for ClosedForm {
    fn eval(&self, x: &[f64], t: f64) -> ExactValue {
        (self.0)(x, t)
    }
}

/// Problem-specific defaults used when the run configuration leaves them unset.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemDefaults {
    pub counts: SampleCounts,
    pub subnets: usize,
    pub eval_set: EvalSet,
}

#[derive(Clone)]
pub struct WaveProblem {
    pub name: String,
    /// Squared wave speed `a²`.
    pub a_sq: f64,
    pub domain: Domain,
    pub time: TimeRange,
    pub forcing: ForcingFn,
    pub boundary: BoundaryData,
    pub initial_value: SpatialFn,
    pub initial_velocity: SpatialFn,
    pub exact: Option<Arc<dyn ExactSolution>>,
    pub defaults: ProblemDefaults,
}

impl fmt::Debug for WaveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveProblem")
            .field("name", &self.name)
            .field("a_sq", &self.a_sq)
            .field("domain", &self.domain)
            .field("time", &self.time)
            .field("boundary", &self.boundary.kind)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl WaveProblem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn exact_eval(&self, x: &[f64], t: f64) -> Result<ExactValue> {
        self.exact
            .as_ref()
            .map(|e| e.eval(x, t))
            .ok_or_else(|| Error::NoExactSolution(self.name.clone()))
    }

    pub fn exact_value(&self, x: &[f64], t: f64) -> Result<f64> {
        self.exact_eval(x, t).map(|e| e.u)
    }
}

pub const PROBLEM_NAMES: [&str; 6] = [
    "example1_small",
    "example1_large",
    "example2_highfreq",
    "example3_porous",
    "example4_sphere",
    "example5_porous3d",
];

/// Looks up a built-in problem by name.
pub fn builtin(name: &str) -> Result<WaveProblem> {
    match name {
        "example1_small" => example1(name, 2.0 * PI, 2.0, 0.5),
        "example1_large" => example1(name, 10.0 * PI, 10.0, 2.5),
        "example2_highfreq" => example2(),
        "example3_porous" => example3(),
        "example4_sphere" => example4(),
        "example5_porous3d" => example5(),
        _ => Err(Error::UnknownProblem(format!(
            "`{name}` (known: {})",
            PROBLEM_NAMES.join(", ")
        ))),
    }
}

fn st(f: fn(&[f64], f64) -> f64) -> SpaceTimeFn {
    Arc::new(f)
}

fn sp(f: fn(&[f64]) -> f64) -> SpatialFn {
    Arc::new(f)
}

fn forcing(f: fn(&[f64], f64) -> f64) -> ForcingFn {
    Arc::new(move |x, t, _u| (f(x, t), 0.0))
}

/// Neumann data from an axis derivative: `±∂u/∂x_axis` on the low/high face.
fn neumann_pair(axis_derivative: SpaceTimeFn) -> [SpaceTimeFn; 2] {
    let lo = axis_derivative.clone();
    [Arc::new(move |x: &[f64], t| -lo(x, t)), axis_derivative]
}

const COUNTS_2D: SampleCounts = SampleCounts {
    interior: 1500,
    boundary: 300,
    initial: 700,
};

const COUNTS_3D: SampleCounts = SampleCounts {
    interior: 2000,
    boundary: 500,
    initial: 1000,
};

/// Hole lattice: one ball of radius π centred in each 5π cell of [0, 10π]^d.
fn porous_holes(dim: usize) -> Vec<Hole> {
    let c = [2.5 * PI, 7.5 * PI];
    let mut out = Vec::new();
    for i in 0..2usize.pow(dim as u32) {
        let center = (0..dim).map(|k| c[(i >> (dim - 1 - k)) & 1]).collect();
        out.push(Hole { center, radius: PI });
    }
    out
}

fn square_bounds(dim: usize, hi: f64) -> Vec<(f64, f64)> {
    vec![(0.0, hi); dim]
}

fn ex1_exact(x: &[f64], t: f64) -> ExactValue {
    let (s1, c1, s2, c2) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let (st, ct) = (t.sin(), t.cos());
    let s = s1 * s2 * st;
    ExactValue {
        u: t.powi(4) + s,
        grad: vec![c1 * s2 * st, s1 * c2 * st, 4.0 * t.powi(3) + s1 * s2 * ct],
        diag2: vec![-s, -s, 12.0 * t * t - s],
    }
}

fn example1(name: &str, side: f64, t_max: f64, t_eval: f64) -> Result<WaveProblem> {
    let g = st(|x, t| ex1_exact(x, t).u);
    Ok(WaveProblem {
        name: name.into(),
        a_sq: 0.5,
        domain: Domain::new(square_bounds(2, side), vec![])?,
        time: TimeRange::new(0.0, t_max)?,
        forcing: forcing(|_, t| 12.0 * t * t),
        boundary: BoundaryData {
            kind: BoundaryKind::Dirichlet,
            faces: vec![g; 4],
            holes: None,
        },
        initial_value: sp(|_| 0.0),
        initial_velocity: sp(|x| x[0].sin() * x[1].sin()),
        exact: Some(Arc::new(ClosedForm(ex1_exact))),
        defaults: ProblemDefaults {
            counts: COUNTS_2D,
            subnets: 10,
            eval_set: EvalSet::Grid {
                resolution: 128,
                t: t_eval,
                exclude_holes: false,
            },
        },
    })
}

fn ex2_exact(x: &[f64], t: f64) -> ExactValue {
    let (c8, c6) = ((8.0 * x[0]).cos(), (6.0 * x[1]).cos());
    let (st, ct) = (t.sin(), t.cos());
    let p = c8 * c6 * st;
    ExactValue {
        u: t.powi(4) + p,
        grad: vec![
            -8.0 * (8.0 * x[0]).sin() * c6 * st,
            -6.0 * c8 * (6.0 * x[1]).sin() * st,
            4.0 * t.powi(3) + c8 * c6 * ct,
        ],
        diag2: vec![-64.0 * p, -36.0 * p, 12.0 * t * t - p],
    }
}

fn example2() -> Result<WaveProblem> {
    // x1 = 0 and x1 = 10π give cos(8x1) = 1; x2 = 0 and 10π give cos(6x2) = 1
    let on_x1 = st(|x, t| t.powi(4) + (6.0 * x[1]).cos() * t.sin());
    let on_x2 = st(|x, t| t.powi(4) + (8.0 * x[0]).cos() * t.sin());
    Ok(WaveProblem {
        name: "example2_highfreq".into(),
        a_sq: 0.01,
        domain: Domain::new(square_bounds(2, 10.0 * PI), vec![])?,
        time: TimeRange::new(0.0, 10.0)?,
        forcing: forcing(|_, t| 12.0 * t * t),
        boundary: BoundaryData {
            kind: BoundaryKind::Dirichlet,
            faces: vec![on_x1.clone(), on_x1, on_x2.clone(), on_x2],
            holes: None,
        },
        initial_value: sp(|_| 0.0),
        initial_velocity: sp(|x| (8.0 * x[0]).cos() * (6.0 * x[1]).cos()),
        exact: Some(Arc::new(ClosedForm(ex2_exact))),
        defaults: ProblemDefaults {
            counts: COUNTS_2D,
            subnets: 10,
            eval_set: EvalSet::Grid {
                resolution: 128,
                t: 2.5,
                exclude_holes: false,
            },
        },
    })
}

fn ex3_exact(x: &[f64], t: f64) -> ExactValue {
    let (s1, c1, s2, c2) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let (st, ct) = (t.sin(), t.cos());
    let p = x[0] * s1 * s2 * st;
    ExactValue {
        u: t.powi(4) + p,
        grad: vec![
            (s1 + x[0] * c1) * s2 * st,
            x[0] * s1 * c2 * st,
            4.0 * t.powi(3) + x[0] * s1 * s2 * ct,
        ],
        diag2: vec![(2.0 * c1 - x[0] * s1) * s2 * st, -p, 12.0 * t * t - p],
    }
}

fn example3() -> Result<WaveProblem> {
    // ∂u/∂x1 = (sin x1 + x1 cos x1) sin x2 sin t: 0 at x1 = 0, 10π sin x2 sin t
    // at x1 = 10π. ∂u/∂x2 = x1 sin x1 cos x2 sin t, cos x2 = 1 on both x2 faces.
    let [x1_lo, x1_hi] = neumann_pair(st(|x, t| {
        if x[0] < 5.0 * PI {
            0.0
        } else {
            10.0 * PI * x[1].sin() * t.sin()
        }
    }));
    let [x2_lo, x2_hi] = neumann_pair(st(|x, t| x[0] * x[0].sin() * t.sin()));
    Ok(WaveProblem {
        name: "example3_porous".into(),
        a_sq: 0.5,
        domain: Domain::new(square_bounds(2, 10.0 * PI), porous_holes(2))?,
        time: TimeRange::new(0.0, 10.0)?,
        forcing: forcing(|x, t| 12.0 * t * t - x[0].cos() * x[1].sin() * t.sin()),
        boundary: BoundaryData {
            kind: BoundaryKind::Neumann,
            faces: vec![x1_lo, x1_hi, x2_lo, x2_hi],
            holes: Some(Arc::new(|x: &[f64], t| {
                // outward normal of the material at a hole points to the centre
                let h = porous_holes(2)
                    .into_iter()
                    .min_by(|a, b| dist2(&a.center, x).total_cmp(&dist2(&b.center, x)))
                    .expect("holes");
                let e = ex3_exact(x, t);
                (0..2).map(|i| e.grad[i] * (h.center[i] - x[i]) / h.radius).sum()
            })),
        },
        initial_value: sp(|_| 0.0),
        initial_velocity: sp(|x| x[0] * x[0].sin() * x[1].sin()),
        exact: Some(Arc::new(ClosedForm(ex3_exact))),
        defaults: ProblemDefaults {
            counts: COUNTS_2D,
            subnets: 10,
            eval_set: EvalSet::Grid {
                resolution: 128,
                t: 2.5,
                exclude_holes: true,
            },
        },
    })
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn ex4_exact(x: &[f64], t: f64) -> ExactValue {
    let (s1, c1, s2, c2) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let (s3, c3) = (x[2].sin(), x[2].cos());
    let (st, ct) = (t.sin(), t.cos());
    let s = s1 * s2 * st;
    ExactValue {
        u: t.powi(4) + s + s3,
        grad: vec![c1 * s2 * st, s1 * c2 * st, c3, 4.0 * t.powi(3) + s1 * s2 * ct],
        diag2: vec![-s, -s, -s3, 12.0 * t * t - s],
    }
}

fn example4() -> Result<WaveProblem> {
    let side = st(|x, t| t.powi(4) + x[2].sin());
    let top = st(|x, t| t.powi(4) + x[0].sin() * x[1].sin() * t.sin());
    let c = 5.0 * PI;
    Ok(WaveProblem {
        name: "example4_sphere".into(),
        a_sq: 0.5,
        domain: Domain::new(square_bounds(3, 10.0 * PI), vec![])?,
        time: TimeRange::new(0.0, 10.0)?,
        forcing: forcing(|x, t| 12.0 * t * t + 0.5 * x[2].sin()),
        boundary: BoundaryData {
            kind: BoundaryKind::Dirichlet,
            faces: vec![side.clone(), side.clone(), side.clone(), side, top.clone(), top],
            holes: None,
        },
        initial_value: sp(|x| x[2].sin()),
        initial_velocity: sp(|x| x[0].sin() * x[1].sin()),
        exact: Some(Arc::new(ClosedForm(ex4_exact))),
        defaults: ProblemDefaults {
            counts: COUNTS_3D,
            subnets: 15,
            eval_set: EvalSet::Sphere {
                center: vec![c, c, c],
                radius: 3.0,
                count: 3000,
                t: 2.5,
            },
        },
    })
}

fn ex5_exact(x: &[f64], t: f64) -> ExactValue {
    let (s1, c1, s2, c2) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
    let (s3, c3) = (x[2].sin(), x[2].cos());
    let (st, ct) = (t.sin(), t.cos());
    ExactValue {
        u: t.powi(4) + s1 * s2 + s3 * st,
        grad: vec![c1 * s2, s1 * c2, c3 * st, 4.0 * t.powi(3) + s3 * ct],
        diag2: vec![-s1 * s2, -s1 * s2, -s3 * st, 12.0 * t * t - s3 * st],
    }
}

fn example5() -> Result<WaveProblem> {
    // cos(0) = cos(10π) = 1, so each axis derivative reduces to one factor
    let [a_lo, a_hi] = neumann_pair(st(|x, _| x[1].sin()));
    let [b_lo, b_hi] = neumann_pair(st(|x, _| x[0].sin()));
    let [c_lo, c_hi] = neumann_pair(st(|_, t| t.sin()));
    let mid = 2.5 * PI;
    Ok(WaveProblem {
        name: "example5_porous3d".into(),
        a_sq: 1.0,
        domain: Domain::new(square_bounds(3, 10.0 * PI), porous_holes(3))?,
        time: TimeRange::new(0.0, 10.0)?,
        forcing: forcing(|x, t| 12.0 * t * t + 2.0 * x[0].sin() * x[1].sin()),
        boundary: BoundaryData {
            kind: BoundaryKind::Neumann,
            faces: vec![a_lo, a_hi, b_lo, b_hi, c_lo, c_hi],
            holes: Some(Arc::new(|x: &[f64], t| {
                let h = porous_holes(3)
                    .into_iter()
                    .min_by(|a, b| dist2(&a.center, x).total_cmp(&dist2(&b.center, x)))
                    .expect("holes");
                let e = ex5_exact(x, t);
                (0..3).map(|i| e.grad[i] * (h.center[i] - x[i]) / h.radius).sum()
            })),
        },
        initial_value: sp(|x| x[0].sin() * x[1].sin()),
        initial_velocity: sp(|x| x[2].sin()),
        exact: Some(Arc::new(ClosedForm(ex5_exact))),
        defaults: ProblemDefaults {
            counts: COUNTS_3D,
            subnets: 15,
            eval_set: EvalSet::Planes {
                planes: vec![Plane { axis: 2, value: mid }, Plane { axis: 0, value: mid }],
                resolution: 88,
                t: 2.5,
                exclude_holes: true,
            },
        },
    })
}

/// User-defined problem, as written in the `[custom]` table of a run file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblemSpec {
    #[serde(default = "custom_name")]
    pub name: String,
    pub bounds: Vec<[f64; 2]>,
    /// Each hole is `[c1, .., cd, radius]`.
    #[serde(default)]
    pub holes: Vec<Vec<f64>>,
    #[serde(default)]
    pub t0: f64,
    pub t_max: f64,
    pub a_sq: f64,
    /// `f(x, t, u)`; may reference `u`.
    pub forcing: String,
    pub boundary_kind: BoundaryKind,
    /// Data on every outer face unless overridden in `boundary_faces`.
    pub boundary: String,
    /// Per-face overrides keyed by `x1_low`, `x1_high`, ...
    #[serde(default)]
    pub boundary_faces: std::collections::BTreeMap<String, String>,
    #[serde(default)]
    pub hole_boundary: Option<String>,
    pub initial_value: String,
    pub initial_velocity: String,
    #[serde(default)]
    pub exact: Option<String>,
}

fn custom_name() -> String {
    "custom".into()
}

struct ExprExact {
    u: Expr,
    d1: Vec<Expr>,
    d2: Vec<Expr>,
}

impl ExactSolution for ExprExact {
    fn eval(&self, x: &[f64], t: f64) -> ExactValue {
        let env = Env { x, t, u: 0.0 };
        ExactValue {
            u: self.u.eval(&env),
            grad: self.d1.iter().map(|e| e.eval(&env)).collect(),
            diag2: self.d2.iter().map(|e| e.eval(&env)).collect(),
        }
    }
}

fn parse_checked(src: &str, dim: usize, allow_u: bool, allow_t: bool, what: &str) -> Result<Expr> {
    let e = Expr::parse(src).map_err(|e| Error::Expr(format!("{what}: {e}")))?;
    if let Some(i) = e.max_space_index() {
        if i >= dim {
            return Err(Error::Expr(format!("{what}: x{} used in a {dim}D problem", i + 1)));
        }
    }
    if !allow_u && e.uses(Var::U) {
        return Err(Error::Expr(format!("{what}: `u` is only allowed in the forcing term")));
    }
    if !allow_t && e.uses(Var::T) {
        return Err(Error::Expr(format!("{what}: `t` is not allowed here")));
    }
    Ok(e)
}

fn space_time_fn(e: Expr) -> SpaceTimeFn {
    Arc::new(move |x, t| e.eval(&Env { x, t, u: 0.0 }))
}

fn spatial_fn(e: Expr) -> SpatialFn {
    Arc::new(move |x| e.eval(&Env { x, t: 0.0, u: 0.0 }))
}

impl CustomProblemSpec {
    pub fn build(&self) -> Result<WaveProblem> {
        let dim = self.bounds.len();
        let holes = self
            .holes
            .iter()
            .map(|h| {
                if h.len() != dim + 1 {
                    return Err(Error::Geometry(format!(
                        "hole needs {} numbers (centre and radius), got {}",
                        dim + 1,
                        h.len()
                    )));
                }
                Ok(Hole {
                    center: h[..dim].to_vec(),
                    radius: h[dim],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let domain = Domain::new(self.bounds.iter().map(|b| (b[0], b[1])).collect(), holes)?;
        let time = TimeRange::new(self.t0, self.t_max)?;
        if !(self.a_sq.is_finite() && self.a_sq > 0.0) {
            return Err(Error::Config(format!("a_sq must be positive, got {}", self.a_sq)));
        }

        let f = parse_checked(&self.forcing, dim, true, true, "forcing")?;
        let df = f.diff(Var::U);
        let forcing: ForcingFn = Arc::new(move |x, t, u| {
            let env = Env { x, t, u };
            (f.eval(&env), df.eval(&env))
        });

        let default_face = parse_checked(&self.boundary, dim, false, true, "boundary")?;
        let mut faces = Vec::new();
        for face in Face::sides(dim) {
            let e = match self.boundary_faces.get(&face.name()) {
                Some(src) => parse_checked(src, dim, false, true, &face.name())?,
                None => default_face.clone(),
            };
            faces.push(space_time_fn(e));
        }
        for key in self.boundary_faces.keys() {
            if !Face::sides(dim).any(|f| &f.name() == key) {
                return Err(Error::Config(format!("unknown boundary face `{key}`")));
            }
        }
        let hole_data = self
            .hole_boundary
            .as_deref()
            .map(|s| parse_checked(s, dim, false, true, "hole_boundary").map(space_time_fn))
            .transpose()?;

        let exact: Option<Arc<dyn ExactSolution>> = match &self.exact {
            Some(src) => {
                let u = parse_checked(src, dim, false, true, "exact")?;
                let vars: Vec<Var> = (0..dim).map(Var::X).chain([Var::T]).collect();
                let d1: Vec<Expr> = vars.iter().map(|v| u.diff(*v)).collect();
                let d2 = d1.iter().zip(&vars).map(|(e, v)| e.diff(*v)).collect();
                Some(Arc::new(ExprExact { u, d1, d2 }))
            }
            None => None,
        };

        let (counts, subnets, resolution) = if dim == 2 {
            (COUNTS_2D, 10, 128)
        } else {
            (COUNTS_3D, 15, 32)
        };
        let has_holes = !domain.holes().is_empty();
        Ok(WaveProblem {
            name: self.name.clone(),
            a_sq: self.a_sq,
            time,
            forcing,
            boundary: BoundaryData {
                kind: self.boundary_kind,
                faces,
                holes: hole_data,
            },
            initial_value: spatial_fn(parse_checked(&self.initial_value, dim, false, false, "initial_value")?),
            initial_velocity: spatial_fn(parse_checked(
                &self.initial_velocity,
                dim,
                false,
                false,
                "initial_velocity",
            )?),
            exact,
            defaults: ProblemDefaults {
                counts,
                subnets,
                eval_set: EvalSet::Grid {
                    resolution,
                    t: 0.5 * (self.t0 + self.t_max),
                    exclude_holes: has_holes,
                },
            },
            domain,
        })
    }
}
