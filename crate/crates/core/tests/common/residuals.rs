//! Residual sweeps shared by the residual tests and the acceptance target.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wave_fpinn::deriv::{Need, Surrogate};
use wave_fpinn::geometry::{sample_batch, SampleCounts, SpaceTimePoint};
use wave_fpinn::normalize::{
    boundary_residual, initial_residuals, pde_residual, ExactField, Mode, NormalizationPlan,
};
use wave_fpinn::problems::WaveProblem;

use super::jets::{Composed, SmoothTestFn};

/// Largest |residual| of the exact solution over `n` random points of each
/// kind: `(pde, boundary, initial)`.
pub fn exact_residual_max(problem: &WaveProblem, mode: Mode, n: usize, seed: u64) -> (f64, f64, f64) {
    let plan = NormalizationPlan::new(mode, &problem.domain, &problem.time);
    let field = ExactField::new(problem, &plan).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = SampleCounts { interior: n, boundary: n, initial: n };
    let hole_faces = problem.boundary.holes.is_some() && !problem.domain.holes().is_empty();
    let batch = sample_batch(&problem.domain, &problem.time, counts, hole_faces, &mut rng).unwrap();
    let mut out = (0.0f64, 0.0f64, 0.0f64);
    for p in &batch.interior {
        out.0 = out.0.max(pde_residual(problem, &field, &plan, p).unwrap().abs());
    }
    for bp in &batch.boundary {
        out.1 = out.1.max(boundary_residual(problem, &field, &plan, bp).unwrap().abs());
    }
    for x in &batch.initial {
        let (a, b) = initial_residuals(problem, &field, &plan, x).unwrap();
        out.2 = out.2.max(a.abs()).max(b.abs());
    }
    out
}

/// Map scales used by `mode`, computed from the domain independently of the
/// library's plan.
pub fn affine_map(problem: &WaveProblem, mode: Mode) -> (Vec<f64>, Vec<f64>) {
    let space = matches!(mode, Mode::Spatial | Mode::SpatioTemporal);
    let time = matches!(mode, Mode::Temporal | Mode::SpatioTemporal);
    let mut lo = Vec::new();
    let mut s = Vec::new();
    for &(a, b) in problem.domain.bounds() {
        lo.push(if space { a } else { 0.0 });
        s.push(if space { b - a } else { 1.0 });
    }
    lo.push(if time { problem.time.t0 } else { 0.0 });
    s.push(if time { problem.time.span() } else { 1.0 });
    (lo, s)
}

/// Worst relative disagreement between the mode-None residuals of `g` and
/// the mode-`mode` residuals of `g ∘ map`, over pde, boundary and initial
/// residuals at `n` random points each. Differences are measured relative
/// to the magnitude of the residual's largest term so that near-cancelling
/// residuals do not inflate the ratio.
pub fn chain_rule_max_rel(problem: &WaveProblem, mode: Mode, g: &SmoothTestFn, n: usize, seed: u64) -> f64 {
    let plain_plan = NormalizationPlan::new(Mode::None, &problem.domain, &problem.time);
    let plan = NormalizationPlan::new(mode, &problem.domain, &problem.time);
    let d = problem.dim();
    let plain = Composed { g, lo: vec![0.0; d + 1], s: vec![1.0; d + 1] };
    let (lo, s) = affine_map(problem, mode);
    let mapped = Composed { g, lo, s };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = SampleCounts { interior: n, boundary: n, initial: n };
    let batch = sample_batch(&problem.domain, &problem.time, counts, false, &mut rng).unwrap();
    let mut worst = 0.0f64;
    let mut rel = |a: f64, b: f64, scale: f64| {
        worst = worst.max((a - b).abs() / scale.max(a.abs()).max(f64::MIN_POSITIVE));
    };
    let z0 = |p: &SpaceTimePoint| p.x.iter().copied().chain([p.t]).collect::<Vec<f64>>();
    for p in &batch.interior {
        let b = plain.evaluate(&z0(p), Need::Second);
        let (f, _) = (problem.forcing)(&p.x, p.t, b.value);
        let scale = b.diag2[d].abs()
            + problem.a_sq * b.diag2[..d].iter().map(|v| v.abs()).sum::<f64>()
            + f.abs();
        let r0 = pde_residual(problem, &plain, &plain_plan, p).unwrap();
        let r1 = pde_residual(problem, &mapped, &plan, p).unwrap();
        rel(r0, r1, scale);
    }
    for bp in &batch.boundary {
        let b = plain.evaluate(&z0(&bp.point), Need::First);
        let g_data = problem.boundary.for_face(bp.face).unwrap()(&bp.point.x, bp.point.t);
        let scale = b.value.abs() + b.grad.iter().map(|v| v.abs()).sum::<f64>() + g_data.abs();
        let r0 = boundary_residual(problem, &plain, &plain_plan, bp).unwrap();
        let r1 = boundary_residual(problem, &mapped, &plan, bp).unwrap();
        rel(r0, r1, scale);
    }
    for x in &batch.initial {
        let p = SpaceTimePoint::new(x.clone(), problem.time.t0);
        let b = plain.evaluate(&z0(&p), Need::First);
        let scale = b.value.abs()
            + b.grad[d].abs()
            + (problem.initial_value)(x).abs()
            + (problem.initial_velocity)(x).abs();
        let (a0, v0) = initial_residuals(problem, &plain, &plain_plan, x).unwrap();
        let (a1, v1) = initial_residuals(problem, &mapped, &plan, x).unwrap();
        rel(a0, a1, scale);
        rel(v0, v1, scale);
    }
    worst
}
