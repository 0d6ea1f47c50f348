//! Fourier-feature network: `Q` parallel subnetworks, each seeing its input
//! multiplied by a fixed scale `aᵢ`, averaged at the output.
//!
//! A subnetwork is a Fourier first layer `[cos(W₁ξ); sin(W₁ξ)]` (no bias) or a
//! plain `GELU(W₁ξ + b₁)` layer, followed by GELU hidden layers and a linear
//! scalar output. All trainable parameters live in one flat vector; see
//! [`Layout`] for the ordering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::gelu;
use crate::error::{Error, Result};
use crate::kernels::matmul;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FirstLayer {
    #[default]
    Fourier,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Spatial dimension plus one for time.
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
    /// Per-subnetwork input scales; the subnetwork count is `scales.len()`.
    pub scales: Vec<f64>,
    pub first_layer: FirstLayer,
    pub init_seed: u64,
}

impl NetworkConfig {
    pub const DEFAULT_WIDTHS: [usize; 4] = [20, 15, 15, 10];

    /// Default widths with scales `1..=subnets`.
    pub fn new(input_dim: usize, subnets: usize) -> Self {
        NetworkConfig {
            input_dim,
            hidden_widths: Self::DEFAULT_WIDTHS.to_vec(),
            scales: (1..=subnets).map(|a| a as f64).collect(),
            first_layer: FirstLayer::Fourier,
            init_seed: 0,
        }
    }

    pub fn subnet_count(&self) -> usize {
        self.scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if self.hidden_widths.is_empty() || self.hidden_widths.contains(&0) {
            return Err(Error::Config(
                "hidden_widths must be a nonempty list of positive widths".into(),
            ));
        }
        if self.first_layer == FirstLayer::Fourier && !self.hidden_widths[0].is_multiple_of(2) {
            return Err(Error::Config(format!(
                "Fourier first layer needs an even width (cos/sin halves), got {}",
                self.hidden_widths[0]
            )));
        }
        if self.scales.is_empty() {
            return Err(Error::Config("at least one subnetwork scale is required".into()));
        }
        if let Some(a) = self.scales.iter().find(|a| !a.is_finite() || **a < 1.0) {
            return Err(Error::Config(format!("subnetwork scales must be >= 1, got {a}")));
        }
        Ok(())
    }
}

/// Offsets of one dense layer inside a subnetwork's parameter slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLayout {
    pub weights: usize,
    /// Bias offset; `None` for the Fourier layer.
    pub bias: Option<usize>,
    pub rows: usize,
    pub cols: usize,
    /// Width of the layer's output (twice `rows` for the Fourier layer).
    pub width: usize,
}

/// Parameter ordering for one subnetwork: first layer `W₁` (row-major, one
/// row per unit) and `b₁` for the plain variant, then `W, b` for each further
/// hidden layer, then the output row and scalar output bias. Subnetworks are
/// stored back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub first_layer: FirstLayer,
    pub input_dim: usize,
    pub layers: Vec<DenseLayout>,
    pub output_weights: usize,
    pub output_bias: usize,
    pub per_subnet: usize,
    pub subnets: usize,
}

impl Layout {
    pub fn new(config: &NetworkConfig) -> Self {
        let mut layers = Vec::with_capacity(config.hidden_widths.len());
        let mut offset = 0;
        let mut cols = config.input_dim;
        for (i, &width) in config.hidden_widths.iter().enumerate() {
            let fourier = i == 0 && config.first_layer == FirstLayer::Fourier;
            let rows = if fourier { width / 2 } else { width };
            let weights = offset;
            offset += rows * cols;
            let bias = if fourier {
                None
            } else {
                offset += rows;
                Some(offset - rows)
            };
            layers.push(DenseLayout {
                weights,
                bias,
                rows,
                cols,
                width,
            });
            cols = width;
        }
        let output_weights = offset;
        let output_bias = offset + cols;
        Layout {
            first_layer: config.first_layer,
            input_dim: config.input_dim,
            layers,
            output_weights,
            output_bias,
            per_subnet: output_bias + 1,
            subnets: config.subnet_count(),
        }
    }

    pub fn total(&self) -> usize {
        self.per_subnet * self.subnets
    }

    pub fn max_width(&self) -> usize {
        self.layers.iter().map(|l| l.width).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FfmNetwork {
    config: NetworkConfig,
    layout: Layout,
    params: Vec<f64>,
}

#[inline]
pub(crate) fn dot(row: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for (w, v) in row.iter().zip(x) {
        s += w * v;
    }
    s
}

impl FfmNetwork {
    /// Glorot-uniform weights, zero biases, deterministic in `config.init_seed`.
    pub fn init(config: NetworkConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.init_seed);
        Self::init_with_rng(config, &mut rng)
    }

    pub fn init_with_rng<R: Rng + ?Sized>(config: NetworkConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total()];
        for sub in params.chunks_mut(layout.per_subnet) {
            for l in &layout.layers {
                let bound = (6.0 / (l.cols + l.rows) as f64).sqrt();
                for w in &mut sub[l.weights..l.weights + l.rows * l.cols] {
                    *w = rng.random_range(-bound..bound);
                }
            }
            let fan_in = layout.layers.last().map_or(layout.input_dim, |l| l.width);
            let bound = (6.0 / (fan_in + 1) as f64).sqrt();
            for w in &mut sub[layout.output_weights..layout.output_bias] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(FfmNetwork {
            config,
            layout,
            params,
        })
    }

    pub fn from_params(config: NetworkConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total() {
            return Err(Error::Shape {
                expected: layout.total(),
                got: params.len(),
            });
        }
        Ok(FfmNetwork {
            config,
            layout,
            params,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub(crate) fn subnet_params(&self, q: usize) -> &[f64] {
        let n = self.layout.per_subnet;
        &self.params[q * n..(q + 1) * n]
    }

    pub fn forward(&self, z: &[f64]) -> Result<f64> {
        self.check_input(z)?;
        Ok(self.forward_unchecked(z))
    }

    pub(crate) fn check_input(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.config.input_dim {
            return Err(Error::Shape {
                expected: self.config.input_dim,
                got: z.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn forward_unchecked(&self, z: &[f64]) -> f64 {
        let mut total = 0.0;
        for q in 0..self.layout.subnets {
            total += self.subnet_forward(q, z);
        }
        total / self.layout.subnets as f64
    }

    /// Output of subnetwork `q` alone (before averaging).
    pub fn subnet_output(&self, q: usize, z: &[f64]) -> Result<f64> {
        self.check_input(z)?;
        if q >= self.layout.subnets {
            return Err(Error::InvalidArgument(format!("no subnetwork {q}")));
        }
        Ok(self.subnet_forward(q, z))
    }

    fn subnet_forward(&self, q: usize, z: &[f64]) -> f64 {
        let p = self.subnet_params(q);
        let a = self.config.scales[q];
        let xi: Vec<f64> = z.iter().map(|v| a * v).collect();
        let mut h = Vec::with_capacity(self.layout.max_width());
        let mut next = Vec::with_capacity(self.layout.max_width());
        let mut input: &[f64] = &xi;
        for (li, l) in self.layout.layers.iter().enumerate() {
            next.clear();
            let w = &p[l.weights..l.weights + l.rows * l.cols];
            match l.bias {
                None => {
                    next.resize(l.width, 0.0);
                    for j in 0..l.rows {
                        let pre = dot(&w[j * l.cols..(j + 1) * l.cols], input);
                        next[j] = pre.cos();
                        next[l.rows + j] = pre.sin();
                    }
                }
                Some(b) if li == 0 => {
                    for j in 0..l.rows {
                        let pre = dot(&w[j * l.cols..(j + 1) * l.cols], input) + p[b + j];
                        next.push(gelu(pre));
                    }
                }
                Some(b) => {
                    next.resize(l.rows, 0.0);
                    matmul(l.rows, l.cols, 1, w, (l.cols, 1), input, 1, &mut next, 1, false);
                    for j in 0..l.rows {
                        next[j] = gelu(next[j] + p[b + j]);
                    }
                }
            }
            std::mem::swap(&mut h, &mut next);
            input = &h;
        }
        let wout = &p[self.layout.output_weights..self.layout.output_bias];
        let mut y = [0.0];
        matmul(1, wout.len(), 1, wout, (wout.len(), 1), input, 1, &mut y, 1, false);
        y[0] + p[self.layout.output_bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(first: FirstLayer, q: usize) -> NetworkConfig {
        NetworkConfig {
            first_layer: first,
            ..NetworkConfig::new(3, q)
        }
    }

    #[test]
    fn parameter_counts() {
        let fourier = Layout::new(&cfg(FirstLayer::Fourier, 10));
        assert_eq!(fourier.per_subnet, 756);
        assert_eq!(fourier.total(), 7560);
        let plain = Layout::new(&cfg(FirstLayer::Plain, 1));
        assert_eq!(plain.per_subnet, 806);
    }

    #[test]
    fn odd_fourier_width_rejected() {
        let mut c = cfg(FirstLayer::Fourier, 2);
        c.hidden_widths = vec![15, 10];
        assert!(matches!(FfmNetwork::init(c.clone()), Err(Error::Config(_))));
        c.first_layer = FirstLayer::Plain;
        assert!(FfmNetwork::init(c).is_ok());
    }

    #[test]
    fn scales_below_one_rejected() {
        let mut c = cfg(FirstLayer::Fourier, 2);
        c.scales = vec![1.0, 0.5];
        assert!(FfmNetwork::init(c).is_err());
    }

    #[test]
    fn init_is_deterministic() {
        let a = FfmNetwork::init(cfg(FirstLayer::Fourier, 3)).unwrap();
        let b = FfmNetwork::init(cfg(FirstLayer::Fourier, 3)).unwrap();
        assert_eq!(a.params(), b.params());
        let mut c2 = cfg(FirstLayer::Fourier, 3);
        c2.init_seed = 1;
        assert_ne!(a.params(), FfmNetwork::init(c2).unwrap().params());
    }

    #[test]
    fn biases_start_at_zero() {
        let net = FfmNetwork::init(cfg(FirstLayer::Plain, 2)).unwrap();
        let l = net.layout().clone();
        for q in 0..2 {
            let p = net.subnet_params(q);
            for d in &l.layers {
                let b = d.bias.unwrap();
                assert!(p[b..b + d.rows].iter().all(|v| *v == 0.0));
            }
            assert_eq!(p[l.output_bias], 0.0);
        }
    }

    #[test]
    fn zero_weights_give_output_bias() {
        let c = cfg(FirstLayer::Fourier, 4);
        let layout = Layout::new(&c);
        let mut params = vec![0.0; layout.total()];
        for q in 0..4 {
            params[q * layout.per_subnet + layout.output_bias] = 0.75;
        }
        let net = FfmNetwork::from_params(c, params).unwrap();
        for z in [[0.0, 0.0, 0.0], [3.0, -1.0, 7.5]] {
            assert_eq!(net.forward(&z).unwrap(), 0.75);
        }
    }

    #[test]
    fn identical_subnets_average_to_one() {
        let mut c = cfg(FirstLayer::Fourier, 1);
        let single = FfmNetwork::init(c.clone()).unwrap();
        c.scales = vec![1.0; 5];
        let params = single.params().repeat(5);
        let five = FfmNetwork::from_params(c, params).unwrap();
        let z = [0.3, -0.2, 0.9];
        let (a, b) = (single.forward(&z).unwrap(), five.forward(&z).unwrap());
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn output_layer_is_linear() {
        let net = FfmNetwork::init(cfg(FirstLayer::Fourier, 3)).unwrap();
        let l = net.layout().clone();
        let mut doubled = net.clone();
        for q in 0..3 {
            let base = q * l.per_subnet;
            for v in &mut doubled.params_mut()[base + l.output_weights..=base + l.output_bias] {
                *v *= 2.0;
            }
        }
        let z = [0.1, 0.4, 0.7];
        let (a, b) = (net.forward(&z).unwrap(), doubled.forward(&z).unwrap());
        assert!((2.0 * a - b).abs() < 1e-14);
    }

    #[test]
    fn scale_equivariance_per_subnet() {
        let c = cfg(FirstLayer::Fourier, 3);
        let net = FfmNetwork::init(c.clone()).unwrap();
        let factor = 2.5;
        let mut scaled_cfg = c;
        scaled_cfg.scales.iter_mut().for_each(|a| *a *= factor);
        let scaled = FfmNetwork::from_params(scaled_cfg, net.params().to_vec()).unwrap();
        let z = [0.2, 0.5, -0.4];
        let cz: Vec<f64> = z.iter().map(|v| v * factor).collect();
        for q in 0..3 {
            let a = scaled.subnet_output(q, &z).unwrap();
            let b = net.subnet_output(q, &cz).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch_is_shape_error() {
        let net = FfmNetwork::init(cfg(FirstLayer::Fourier, 1)).unwrap();
        assert!(matches!(
            net.forward(&[1.0, 2.0]),
            Err(Error::Shape { expected: 3, got: 2 })
        ));
    }
}
