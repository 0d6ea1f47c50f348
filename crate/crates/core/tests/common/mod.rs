#![allow(dead_code)]

//! Independent finite-difference oracles. These only call `forward` and
//! never touch the analytic derivative code paths.

use wave_fpinn::network::FfmNetwork;

pub mod jets;
pub mod residuals;

/// Central first and second differences along every input coordinate.
pub fn fd_input_derivatives(net: &FfmNetwork, z: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let f0 = net.forward(z).unwrap();
    let mut grad = Vec::new();
    let mut diag2 = Vec::new();
    for k in 0..z.len() {
        let mut zp = z.to_vec();
        let mut zm = z.to_vec();
        zp[k] += h;
        zm[k] -= h;
        let (fp, fm) = (net.forward(&zp).unwrap(), net.forward(&zm).unwrap());
        grad.push((fp - fm) / (2.0 * h));
        diag2.push((fp - 2.0 * f0 + fm) / (h * h));
    }
    (grad, diag2)
}

/// Central differences of `loss` over every parameter, step `rel·max(1, |θ|)`.
pub fn fd_param_gradient<F>(net: &FfmNetwork, rel: f64, loss: F) -> Vec<f64>
where
    F: Fn(&FfmNetwork) -> f64,
{
    let mut probe = net.clone();
    (0..net.param_count())
        .map(|i| {
            let theta = net.params()[i];
            let h = rel * theta.abs().max(1.0);
            probe.params_mut()[i] = theta + h;
            let fp = loss(&probe);
            probe.params_mut()[i] = theta - h;
            let fm = loss(&probe);
            probe.params_mut()[i] = theta;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Componentwise relative error with an absolute floor tied to the overall
/// magnitude of the reference vector.
pub fn max_rel_err(analytic: &[f64], reference: &[f64], floor_frac: f64) -> f64 {
    let scale = reference.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (floor_frac * scale).max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(reference)
        .map(|(a, r)| (a - r).abs() / a.abs().max(r.abs()).max(floor))
        .fold(0.0, f64::max)
}
