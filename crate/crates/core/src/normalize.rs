//! Input normalization and the residual operators written in network
//! coordinates.
//!
//! A [`NormalizationPlan`] maps physical points `(x, t)` to network inputs
//! `z = (x̃, t̃)`. Derivatives of the network with respect to `z` are turned
//! into physical derivatives through the chain rule: a normalized axis with
//! scale `s` contributes `1/s` to first derivatives and `1/s²` to second
//! derivatives.

use serde::{Deserialize, Serialize};

use crate::deriv::{Adjoint, DerivativeBundle, Need, Surrogate};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Domain, SpaceTimePoint, TimeRange};
use crate::problems::{BoundaryKind, WaveProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    None,
    Spatial,
    Temporal,
    SpatioTemporal,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::None, Mode::Spatial, Mode::Temporal, Mode::SpatioTemporal];

    pub fn name(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Spatial => "spatial",
            Mode::Temporal => "temporal",
            Mode::SpatioTemporal => "spatiotemporal",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown normalization `{s}`")))
    }

    pub fn normalizes_space(self) -> bool {
        matches!(self, Mode::Spatial | Mode::SpatioTemporal)
    }

    pub fn normalizes_time(self) -> bool {
        matches!(self, Mode::Temporal | Mode::SpatioTemporal)
    }
}

/// Coefficient applied to `∂²u/∂t̃²` in the spatio-temporal mode.
///
/// `ChainRule` uses `1/s_T²`, which is what the chain rule gives and what
/// the temporal mode uses. `SingleScale` uses `1/s_T` for comparison runs
/// against that alternative reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeCurvature {
    #[default]
    ChainRule,
    SingleScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationPlan {
    mode: Mode,
    dim: usize,
    x_min: Vec<f64>,
    x_scale: Vec<f64>,
    t0: f64,
    t_scale: f64,
    /// Physical-derivative factors per network input; index `dim` is time.
    first: Vec<f64>,
    second: Vec<f64>,
}

impl NormalizationPlan {
    pub fn new(mode: Mode, domain: &Domain, time: &TimeRange) -> Self {
        Self::with_time_curvature(mode, domain, time, TimeCurvature::ChainRule)
    }

    pub fn with_time_curvature(
        mode: Mode,
        domain: &Domain,
        time: &TimeRange,
        curvature: TimeCurvature,
    ) -> Self {
        let dim = domain.dim();
        let (x_min, x_scale): (Vec<f64>, Vec<f64>) = domain
            .bounds()
            .iter()
            .map(|&(lo, hi)| if mode.normalizes_space() { (lo, hi - lo) } else { (0.0, 1.0) })
            .unzip();
        let (t0, t_scale) = if mode.normalizes_time() {
            (time.t0, time.span())
        } else {
            (0.0, 1.0)
        };
        let mut first: Vec<f64> = x_scale.iter().map(|s| 1.0 / s).collect();
        let mut second: Vec<f64> = x_scale.iter().map(|s| 1.0 / (s * s)).collect();
        first.push(1.0 / t_scale);
        second.push(match (mode, curvature) {
            (Mode::SpatioTemporal, TimeCurvature::SingleScale) => 1.0 / t_scale,
            _ => 1.0 / (t_scale * t_scale),
        });
        NormalizationPlan {
            mode,
            dim,
            x_min,
            x_scale,
            t0,
            t_scale,
            first,
            second,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Network input for a physical point.
    pub fn map_to_unit(&self, p: &SpaceTimePoint) -> Vec<f64> {
        let mut z: Vec<f64> = p
            .x
            .iter()
            .zip(self.x_min.iter().zip(&self.x_scale))
            .map(|(x, (lo, s))| (x - lo) / s)
            .collect();
        z.push((p.t - self.t0) / self.t_scale);
        z
    }

    pub fn unmap(&self, z: &[f64]) -> SpaceTimePoint {
        let x = z[..self.dim]
            .iter()
            .zip(self.x_min.iter().zip(&self.x_scale))
            .map(|(v, (lo, s))| lo + s * v)
            .collect();
        SpaceTimePoint::new(x, self.t0 + self.t_scale * z[self.dim])
    }

    /// `∂z_k/∂(x, t)_k` for each input.
    pub fn first_factors(&self) -> &[f64] {
        &self.first
    }

    /// Factor converting `∂²u/∂z_k²` to the physical second derivative.
    pub fn second_factors(&self) -> &[f64] {
        &self.second
    }
}

fn numeric(term: &'static str, index: usize, detail: impl Into<String>) -> Error {
    Error::Numeric {
        term,
        index,
        detail: detail.into(),
    }
}

/// `u_tt − a²Δu − f` at an interior point, with its sensitivity.
pub fn pde_residual_parts(
    problem: &WaveProblem,
    plan: &NormalizationPlan,
    p: &SpaceTimePoint,
    b: &DerivativeBundle,
) -> (f64, Adjoint) {
    let d = plan.dim;
    let c = &plan.second;
    let (f, dfdu) = (problem.forcing)(&p.x, p.t, b.value);
    let mut lap = 0.0;
    for i in 0..d {
        lap += c[i] * b.diag2[i];
    }
    let r = c[d] * b.diag2[d] - problem.a_sq * lap - f;
    let mut adj = Adjoint::zeros(d + 1, Need::Second);
    adj.value = -dfdu;
    for i in 0..d {
        adj.diag2[i] = -problem.a_sq * c[i];
    }
    adj.diag2[d] = c[d];
    (r, adj)
}

/// Derivative order the boundary residual needs.
pub fn boundary_need(kind: BoundaryKind) -> Need {
    match kind {
        BoundaryKind::Dirichlet => Need::Value,
        BoundaryKind::Neumann => Need::First,
    }
}

/// Dirichlet `u − g` or Neumann `∂u/∂n − g` at a boundary point.
pub fn boundary_residual_parts(
    problem: &WaveProblem,
    plan: &NormalizationPlan,
    bp: &BoundaryPoint,
    b: &DerivativeBundle,
) -> Result<(f64, Adjoint)> {
    let d = plan.dim;
    let g = problem.boundary.for_face(bp.face)?(&bp.point.x, bp.point.t);
    match problem.boundary.kind {
        BoundaryKind::Dirichlet => {
            let mut adj = Adjoint::zeros(d + 1, Need::Value);
            adj.value = 1.0;
            Ok((b.value - g, adj))
        }
        BoundaryKind::Neumann => {
            let mut adj = Adjoint::zeros(d + 1, Need::First);
            let mut dn = 0.0;
            for i in 0..d {
                let w = plan.first[i] * bp.normal[i];
                dn += w * b.grad[i];
                adj.grad[i] = w;
            }
            Ok((dn - g, adj))
        }
    }
}

/// Initial-value and initial-velocity residuals at a point on `t = t0`.
pub fn initial_residual_parts(
    problem: &WaveProblem,
    plan: &NormalizationPlan,
    x: &[f64],
    b: &DerivativeBundle,
) -> ((f64, Adjoint), (f64, Adjoint)) {
    let d = plan.dim;
    let mut a_val = Adjoint::zeros(d + 1, Need::First);
    a_val.value = 1.0;
    let mut a_vel = Adjoint::zeros(d + 1, Need::First);
    a_vel.grad[d] = plan.first[d];
    (
        (b.value - (problem.initial_value)(x), a_val),
        (plan.first[d] * b.grad[d] - (problem.initial_velocity)(x), a_vel),
    )
}

fn checked_eval<S: Surrogate + ?Sized>(s: &S, z: &[f64], need: Need) -> Result<DerivativeBundle> {
    if z.len() != s.input_dim() {
        return Err(Error::Shape {
            expected: s.input_dim(),
            got: z.len(),
        });
    }
    Ok(s.evaluate(z, need))
}

pub fn pde_residual<S: Surrogate + ?Sized>(
    problem: &WaveProblem,
    surrogate: &S,
    plan: &NormalizationPlan,
    p: &SpaceTimePoint,
) -> Result<f64> {
    let b = checked_eval(surrogate, &plan.map_to_unit(p), Need::Second)?;
    let r = pde_residual_parts(problem, plan, p, &b).0;
    if !r.is_finite() {
        return Err(numeric("pde", 0, format!("residual {r} at {p:?}")));
    }
    Ok(r)
}

pub fn boundary_residual<S: Surrogate + ?Sized>(
    problem: &WaveProblem,
    surrogate: &S,
    plan: &NormalizationPlan,
    bp: &BoundaryPoint,
) -> Result<f64> {
    let need = boundary_need(problem.boundary.kind);
    let b = checked_eval(surrogate, &plan.map_to_unit(&bp.point), need)?;
    let r = boundary_residual_parts(problem, plan, bp, &b)?.0;
    if !r.is_finite() {
        return Err(numeric("bc", 0, format!("residual {r} at {:?}", bp.point)));
    }
    Ok(r)
}

/// `(value residual, velocity residual)` at `(x, t0)`.
pub fn initial_residuals<S: Surrogate + ?Sized>(
    problem: &WaveProblem,
    surrogate: &S,
    plan: &NormalizationPlan,
    x: &[f64],
) -> Result<(f64, f64)> {
    let p = SpaceTimePoint::new(x.to_vec(), problem.time.t0);
    let b = checked_eval(surrogate, &plan.map_to_unit(&p), Need::First)?;
    let ((rv, _), (rd, _)) = initial_residual_parts(problem, plan, x, &b);
    if !rv.is_finite() || !rd.is_finite() {
        return Err(numeric("ic", 0, format!("residuals ({rv}, {rd}) at {x:?}")));
    }
    Ok((rv, rd))
}

/// The exact solution seen through a normalization plan: a surrogate whose
/// derivatives are the exact physical ones scaled back to network inputs.
pub struct ExactField<'a> {
    problem: &'a WaveProblem,
    plan: &'a NormalizationPlan,
}

impl<'a> ExactField<'a> {
    pub fn new(problem: &'a WaveProblem, plan: &'a NormalizationPlan) -> Result<Self> {
        if problem.exact.is_none() {
            return Err(Error::NoExactSolution(problem.name.clone()));
        }
        Ok(ExactField { problem, plan })
    }
}

impl Surrogate for ExactField<'_> {
    fn input_dim(&self) -> usize {
        self.plan.dim + 1
    }

    fn evaluate(&self, z: &[f64], need: Need) -> DerivativeBundle {
        let p = self.plan.unmap(z);
        let e = self.problem.exact_eval(&p.x, p.t).expect("checked in constructor");
        let scales: Vec<f64> = self.plan.x_scale.iter().copied().chain([self.plan.t_scale]).collect();
        DerivativeBundle {
            value: e.u,
            grad: if need >= Need::First {
                e.grad.iter().zip(&scales).map(|(g, s)| g * s).collect()
            } else {
                Vec::new()
            },
            diag2: if need >= Need::Second {
                e.diag2.iter().zip(&scales).map(|(g, s)| g * s * s).collect()
            } else {
                Vec::new()
            },
        }
    }
}
