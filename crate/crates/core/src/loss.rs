//! Composite training loss and its parameter gradient.

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::deriv::{param_gradient, Adjoint, Need, Surrogate};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{SpaceTimePoint, TrainingBatch};
use crate::network::FfmNetwork;
use crate::normalize::{
    boundary_need, boundary_residual_parts, initial_residual_parts, pde_residual_parts,
    NormalizationPlan,
};
use crate::problems::WaveProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub pde: f64,
    pub bc: f64,
    pub ic_value: f64,
    pub ic_velocity: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pde: 1.0,
            bc: 1.0,
            ic_value: 1.0,
            ic_velocity: 1.0,
            data: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.pde, self.bc, self.ic_value, self.ic_velocity, self.data];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Config(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// Unweighted mean-squared components and the weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pde: f64,
    pub bc: f64,
    pub ic_value: f64,
    pub ic_velocity: f64,
    pub data: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn finish(mut self, w: &LossWeights) -> Self {
        self.total = w.pde * self.pde
            + w.bc * self.bc
            + w.ic_value * self.ic_value
            + w.ic_velocity * self.ic_velocity
            + w.data * self.data;
        self
    }
}

/// Observed solution value used by the optional data term.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub point: SpaceTimePoint,
    pub value: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct Pair(f64, f64);

impl AddAssign for Pair {
    fn add_assign(&mut self, o: Pair) {
        self.0 += o.0;
        self.1 += o.1;
    }
}

fn check(term: &'static str, index: usize, r: f64) -> Result<f64> {
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::Numeric {
            term,
            index,
            detail: format!("residual is {r}"),
        })
    }
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Loss of any surrogate on a batch. Empty components contribute 0.
pub fn assemble_loss<S: Surrogate + ?Sized>(
    problem: &WaveProblem,
    surrogate: &S,
    plan: &NormalizationPlan,
    batch: &TrainingBatch,
    weights: &LossWeights,
    data: &[LabeledPoint],
    exec: Execution,
) -> Result<LossBreakdown> {
    let eval = |zs: Vec<Vec<f64>>, need| surrogate.evaluate_batch(&zs, need, exec);

    let mut pde = 0.0;
    let bundles = eval(batch.interior.iter().map(|p| plan.map_to_unit(p)).collect(), Need::Second);
    for (i, (p, b)) in batch.interior.iter().zip(&bundles).enumerate() {
        pde += check("pde", i, pde_residual_parts(problem, plan, p, b).0)?.powi(2);
    }

    let mut bc = 0.0;
    let need = boundary_need(problem.boundary.kind);
    let bundles = eval(batch.boundary.iter().map(|bp| plan.map_to_unit(&bp.point)).collect(), need);
    for (i, (bp, b)) in batch.boundary.iter().zip(&bundles).enumerate() {
        bc += check("bc", i, boundary_residual_parts(problem, plan, bp, b)?.0)?.powi(2);
    }

    let (mut icv, mut icd) = (0.0, 0.0);
    let zs = batch
        .initial
        .iter()
        .map(|x| plan.map_to_unit(&SpaceTimePoint::new(x.clone(), problem.time.t0)))
        .collect();
    for (i, (x, b)) in batch.initial.iter().zip(&eval(zs, Need::First)).enumerate() {
        let ((rv, _), (rd, _)) = initial_residual_parts(problem, plan, x, b);
        icv += check("ic_value", i, rv)?.powi(2);
        icd += check("ic_velocity", i, rd)?.powi(2);
    }

    let mut dat = 0.0;
    let bundles = eval(data.iter().map(|d| plan.map_to_unit(&d.point)).collect(), Need::Value);
    for (i, (d, b)) in data.iter().zip(&bundles).enumerate() {
        dat += check("data", i, b.value - d.value)?.powi(2);
    }
    Ok(LossBreakdown {
        pde: mean(pde, batch.interior.len()),
        bc: mean(bc, batch.boundary.len()),
        ic_value: mean(icv, batch.initial.len()),
        ic_velocity: mean(icd, batch.initial.len()),
        data: mean(dat, data.len()),
        total: 0.0,
    }
    .finish(weights))
}

/// Loss breakdown and the gradient of the weighted total with respect to
/// every network parameter.
pub fn loss_and_gradient(
    problem: &WaveProblem,
    net: &FfmNetwork,
    plan: &NormalizationPlan,
    batch: &TrainingBatch,
    weights: &LossWeights,
    data: &[LabeledPoint],
    exec: Execution,
) -> Result<(LossBreakdown, Vec<f64>)> {
    let mut grad = vec![0.0; net.param_count()];
    let mut add = |g: &[f64]| grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);

    let n = batch.interior.len();
    let inputs: Vec<Vec<f64>> = batch.interior.iter().map(|p| plan.map_to_unit(p)).collect();
    let pde = param_gradient(net, &inputs, Need::Second, exec, |i, b| {
        let (r, mut adj) = pde_residual_parts(problem, plan, &batch.interior[i], b);
        check("pde", i, r)?;
        adj.scale(weights.pde * 2.0 * r / n as f64);
        Ok((r * r, adj))
    })?;
    add(&pde.grad);

    let n = batch.boundary.len();
    let inputs: Vec<Vec<f64>> = batch.boundary.iter().map(|bp| plan.map_to_unit(&bp.point)).collect();
    let need = boundary_need(problem.boundary.kind);
    let bc = param_gradient(net, &inputs, need, exec, |i, b| {
        let (r, mut adj) = boundary_residual_parts(problem, plan, &batch.boundary[i], b)?;
        check("bc", i, r)?;
        adj.scale(weights.bc * 2.0 * r / n as f64);
        Ok((r * r, adj))
    })?;
    add(&bc.grad);

    let n = batch.initial.len();
    let inputs: Vec<Vec<f64>> = batch
        .initial
        .iter()
        .map(|x| plan.map_to_unit(&SpaceTimePoint::new(x.clone(), problem.time.t0)))
        .collect();
    let ic = param_gradient(net, &inputs, Need::First, exec, |i, b| {
        let ((rv, av), (rd, ad)) = initial_residual_parts(problem, plan, &batch.initial[i], b);
        check("ic_value", i, rv)?;
        check("ic_velocity", i, rd)?;
        let mut adj = Adjoint::zeros(b.grad.len(), Need::First);
        adj.add_scaled(&av, weights.ic_value * 2.0 * rv / n as f64);
        adj.add_scaled(&ad, weights.ic_velocity * 2.0 * rd / n as f64);
        Ok((Pair(rv * rv, rd * rd), adj))
    })?;
    add(&ic.grad);

    let mut data_sum = 0.0;
    if !data.is_empty() {
        let n = data.len();
        let inputs: Vec<Vec<f64>> = data.iter().map(|d| plan.map_to_unit(&d.point)).collect();
        let g = param_gradient(net, &inputs, Need::Value, exec, |i, b| {
            let r = check("data", i, b.value - data[i].value)?;
            let mut adj = Adjoint::zeros(b.grad.len(), Need::Value);
            adj.value = weights.data * 2.0 * r / n as f64;
            Ok((r * r, adj))
        })?;
        add(&g.grad);
        data_sum = g.objective;
    }

    let breakdown = LossBreakdown {
        pde: mean(pde.objective, batch.interior.len()),
        bc: mean(bc.objective, batch.boundary.len()),
        ic_value: mean(ic.objective.0, batch.initial.len()),
        ic_velocity: mean(ic.objective.1, batch.initial.len()),
        data: mean(data_sum, data.len()),
        total: 0.0,
    }
    .finish(weights);
    Ok((breakdown, grad))
}
