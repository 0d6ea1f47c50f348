//! Self-checks behind the `gradcheck` and `residualcheck` commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::deriv::{param_gradient, value_grad_laplacian, Adjoint, Need};
use crate::error::Result;
use crate::exec::Execution;
use crate::geometry::{sample_batch, SampleCounts};
use crate::network::FfmNetwork;
use crate::normalize::{
    boundary_residual, initial_residuals, pde_residual, ExactField, Mode, NormalizationPlan,
};
use crate::problems::WaveProblem;

/// Worst discrepancies between analytic derivatives and central differences,
/// each as `max |analytic − fd| / max |fd|` over the sampled entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradReport {
    pub points: usize,
    pub gradient: f64,
    pub second: f64,
    pub params: f64,
}

fn norm_rel(pairs: &[(f64, f64)]) -> f64 {
    let scale = pairs.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let err = pairs.iter().fold(0.0f64, |m, p| m.max((p.0 - p.1).abs()));
    if scale == 0.0 {
        err
    } else {
        err / scale
    }
}

/// Compares input derivatives at `points` random inputs in the unit cube,
/// and the parameter gradient of the output summed over those inputs for
/// up to `max_params` parameters spread across the vector.
pub fn gradcheck(net: &FfmNetwork, points: usize, max_params: usize, seed: u64) -> Result<GradReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = net.input_dim();
    let zs: Vec<Vec<f64>> = (0..points)
        .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
        .collect();
    let (h1, h2) = (1e-6, 1e-4);
    let (mut g, mut s) = (Vec::new(), Vec::new());
    for z in &zs {
        let b = value_grad_laplacian(net, z)?;
        let f0 = net.forward(z)?;
        for k in 0..d {
            let at = |dz: f64| {
                let mut w = z.clone();
                w[k] += dz;
                net.forward(&w)
            };
            g.push((b.grad[k], (at(h1)? - at(-h1)?) / (2.0 * h1)));
            s.push((b.diag2[k], (at(h2)? - 2.0 * f0 + at(-h2)?) / (h2 * h2)));
        }
    }

    let grad = param_gradient(net, &zs, Need::Value, Execution::Sequential, |_, b| {
        let mut a = Adjoint::zeros(d, Need::Value);
        a.value = 1.0;
        Ok((b.value, a))
    })?
    .grad;
    let n = net.param_count();
    let stride = n.div_ceil(max_params.max(1)).max(1);
    let total = |net: &FfmNetwork| -> Result<f64> {
        let mut s = 0.0;
        for z in &zs {
            s += net.forward(z)?;
        }
        Ok(s)
    };
    let hp = 1e-6;
    let mut p = Vec::new();
    let mut probe = net.clone();
    for i in (0..n).step_by(stride) {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + hp;
        let up = total(&probe)?;
        probe.params_mut()[i] = orig - hp;
        let down = total(&probe)?;
        probe.params_mut()[i] = orig;
        p.push((grad[i], (up - down) / (2.0 * hp)));
    }
    Ok(GradReport {
        points,
        gradient: norm_rel(&g),
        second: norm_rel(&s),
        params: norm_rel(&p),
    })
}

/// Largest absolute residual of the exact solution per condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub problem: String,
    pub mode: Mode,
    pub pde: f64,
    pub boundary: f64,
    pub initial_value: f64,
    pub initial_velocity: f64,
}

impl ResidualReport {
    pub fn worst(&self) -> f64 {
        self.pde
            .max(self.boundary)
            .max(self.initial_value)
            .max(self.initial_velocity)
    }
}

/// Residuals of the exact solution at `n` random points of each kind. Hole
/// surfaces are included whenever the problem prescribes data on them.
pub fn residualcheck(problem: &WaveProblem, mode: Mode, n: usize, seed: u64) -> Result<ResidualReport> {
    let plan = NormalizationPlan::new(mode, &problem.domain, &problem.time);
    let field = ExactField::new(problem, &plan)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = SampleCounts {
        interior: n,
        boundary: n,
        initial: n,
    };
    let holes = problem.boundary.holes.is_some() && !problem.domain.holes().is_empty();
    let batch = sample_batch(&problem.domain, &problem.time, counts, holes, &mut rng)?;
    let mut r = ResidualReport {
        problem: problem.name.clone(),
        mode,
        pde: 0.0,
        boundary: 0.0,
        initial_value: 0.0,
        initial_velocity: 0.0,
    };
    for p in &batch.interior {
        r.pde = r.pde.max(pde_residual(problem, &field, &plan, p)?.abs());
    }
    for bp in &batch.boundary {
        r.boundary = r.boundary.max(boundary_residual(problem, &field, &plan, bp)?.abs());
    }
    for x in &batch.initial {
        let (v, d) = initial_residuals(problem, &field, &plan, x)?;
        r.initial_value = r.initial_value.max(v.abs());
        r.initial_velocity = r.initial_velocity.max(d.abs());
    }
    Ok(r)
}
