//! Input derivatives and parameter gradients for [`FfmNetwork`].
//!
//! The forward pass carries, for every unit and every input coordinate `k`,
//! the triple `(h, ∂h/∂z_k, ∂²h/∂z_k²)`. Only diagonal second derivatives are
//! propagated, which is all the wave operator needs. The reverse pass
//! differentiates that augmented computation with respect to every parameter,
//! so losses built from values, gradients and diagonal second derivatives all
//! get exact parameter gradients.
//!
//! Batch gradients are summed per fixed-size chunk and the chunks are combined
//! in order (see [`crate::exec`]), so results do not depend on thread count.

use std::ops::AddAssign;

use crate::activation::gelu_jet;
use crate::error::{Error, Result};
use crate::exec::{map_chunks, Execution};
use crate::kernels::{matmul, matmul_nt};
use crate::network::{dot, FfmNetwork, Layout};

/// Which derivative channels to propagate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Need {
    Value,
    First,
    Second,
}

/// Network value, input gradient and diagonal second derivatives at one input.
///
/// `grad` is empty for [`Need::Value`]; `diag2` is empty unless [`Need::Second`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeBundle {
    pub value: f64,
    pub grad: Vec<f64>,
    pub diag2: Vec<f64>,
}

impl DerivativeBundle {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|v| v.is_finite())
            && self.diag2.iter().all(|v| v.is_finite())
    }
}

/// Sensitivity of a scalar with respect to the channels of a [`DerivativeBundle`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjoint {
    pub value: f64,
    pub grad: Vec<f64>,
    pub diag2: Vec<f64>,
}

impl Adjoint {
    pub fn zeros(dim: usize, need: Need) -> Self {
        Adjoint {
            value: 0.0,
            grad: if need >= Need::First { vec![0.0; dim] } else { Vec::new() },
            diag2: if need >= Need::Second { vec![0.0; dim] } else { Vec::new() },
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.value *= c;
        self.grad.iter_mut().for_each(|v| *v *= c);
        self.diag2.iter_mut().for_each(|v| *v *= c);
    }

    /// Adds `c · other` channel-wise.
    pub fn add_scaled(&mut self, other: &Adjoint, c: f64) {
        self.value += c * other.value;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += c * b;
        }
        for (a, b) in self.diag2.iter_mut().zip(&other.diag2) {
            *a += c * b;
        }
    }
}

/// Anything that can be evaluated like the network: the network itself, or a
/// closed-form field used as an oracle.
pub trait Surrogate: Sync {
    fn input_dim(&self) -> usize;
    fn evaluate(&self, z: &[f64], need: Need) -> DerivativeBundle;

    /// Evaluates many inputs, preserving order.
    fn evaluate_batch(&self, zs: &[Vec<f64>], need: Need, exec: Execution) -> Vec<DerivativeBundle> {
        map_chunks(exec, zs.len(), |r| r.map(|i| self.evaluate(&zs[i], need)).collect::<Vec<_>>())
            .into_iter()
            .flatten()
            .collect()
    }
}

impl Surrogate for FfmNetwork {
    fn input_dim(&self) -> usize {
        FfmNetwork::input_dim(self)
    }

    fn evaluate(&self, z: &[f64], need: Need) -> DerivativeBundle {
        let mut ws = Workspace::new(self);
        ws.evaluate(self, z, need)
    }

    fn evaluate_batch(&self, zs: &[Vec<f64>], need: Need, exec: Execution) -> Vec<DerivativeBundle> {
        evaluate_many(self, zs, need, exec)
    }
}

/// Points evaluated together by one workspace; divides [`crate::exec::CHUNK`].
pub const BLOCK: usize = 16;

// Channel layout: every unit stores, for each point of the block, `cp`
// consecutive channels `[value, ∂/∂z_0.., ∂²/∂z_0²..]`. All linear layers then
// act on contiguous rows of `block · cp` channels.
#[derive(Debug, Clone, Default)]
struct LayerTape {
    // pre-activation channels, rows × c
    pre: Vec<f64>,
    // GELU: (g', g'', g''') per (row, point). Fourier: (cos, sin).
    act: Vec<f64>,
    // post-activation channels, width × c
    h: Vec<f64>,
}

/// Reusable buffers for evaluating and back-propagating one block of inputs.
#[derive(Debug, Clone)]
pub struct Workspace {
    layout: Layout,
    need: Need,
    k: usize,
    cp: usize,
    nb: usize,
    // scaled inputs per subnet, nb × d
    xi: Vec<Vec<f64>>,
    tapes: Vec<Vec<LayerTape>>,
    out: Vec<f64>,
    y: Vec<f64>,
    yb: Vec<f64>,
    hb: Vec<f64>,
    xb: Vec<f64>,
    pb: Vec<f64>,
}

impl Workspace {
    pub fn new(net: &FfmNetwork) -> Self {
        let layout = net.layout().clone();
        let q = layout.subnets;
        let l = layout.layers.len();
        Workspace {
            xi: vec![Vec::new(); q],
            tapes: vec![vec![LayerTape::default(); l]; q],
            layout,
            need: Need::Value,
            k: 0,
            cp: 1,
            nb: 0,
            out: Vec::new(),
            y: Vec::new(),
            yb: Vec::new(),
            hb: Vec::new(),
            xb: Vec::new(),
            pb: Vec::new(),
        }
    }

    /// Single-point forward pass recording what [`backprop`](Self::backprop)
    /// needs.
    pub fn evaluate(&mut self, net: &FfmNetwork, z: &[f64], need: Need) -> DerivativeBundle {
        self.evaluate_block(net, std::slice::from_ref(&z), need).pop().expect("one point")
    }

    /// Accumulates `Σ adjoint · ∂(bundle)/∂θ` for the most recent single-point
    /// evaluation into `grad_out`.
    pub fn backprop(&mut self, net: &FfmNetwork, adjoint: &Adjoint, grad_out: &mut [f64]) {
        self.backprop_block(net, std::slice::from_ref(adjoint), grad_out)
    }

    /// Evaluates up to [`BLOCK`] inputs at once (more are allowed but use
    /// more memory). The tape of the last call is kept for
    /// [`backprop_block`](Self::backprop_block).
    pub fn evaluate_block<Z: AsRef<[f64]>>(
        &mut self,
        net: &FfmNetwork,
        zs: &[Z],
        need: Need,
    ) -> Vec<DerivativeBundle> {
        self.evaluate_block_impl(net, zs, need)
    }

    /// Back-propagates one adjoint per point of the last evaluated block.
    pub fn backprop_block(&mut self, net: &FfmNetwork, adjoints: &[Adjoint], grad_out: &mut [f64]) {
        assert_eq!(adjoints.len(), self.nb, "one adjoint per evaluated point");
        self.backprop_block_impl(net, adjoints, grad_out)
    }

    fn evaluate_block_impl<Z: AsRef<[f64]>>(
        &mut self,
        net: &FfmNetwork,
        zs: &[Z],
        need: Need,
    ) -> Vec<DerivativeBundle> {
        let d = net.input_dim();
        let k = if need == Need::Value { 0 } else { d };
        let second = need == Need::Second;
        let cp = 1 + k + if second { k } else { 0 };
        let nb = zs.len();
        let c = nb * cp;
        self.need = need;
        self.k = k;
        self.cp = cp;
        self.nb = nb;
        self.out.clear();
        self.out.resize(c, 0.0);

        for q in 0..self.layout.subnets {
            let a = net.config().scales[q];
            let p = net.subnet_params(q);
            let xi = &mut self.xi[q];
            xi.clear();
            for z in zs {
                debug_assert_eq!(z.as_ref().len(), d);
                xi.extend(z.as_ref().iter().map(|v| a * v));
            }
            let tapes = &mut self.tapes[q];
            for (li, l) in self.layout.layers.iter().enumerate() {
                let (done, rest) = tapes.split_at_mut(li);
                let t = &mut rest[0];
                let w = &p[l.weights..l.weights + l.rows * l.cols];
                scratch(&mut t.pre, l.rows * c);
                if li == 0 {
                    // ξ = a·z: tangents are a·W[:, k], curvature is zero
                    for j in 0..l.rows {
                        let row = &w[j * l.cols..(j + 1) * l.cols];
                        let pre = &mut t.pre[j * c..(j + 1) * c];
                        for b in 0..nb {
                            let v = dot(row, &xi[b * d..(b + 1) * d]);
                            pre[b * cp] = match l.bias {
                                Some(bi) => v + p[bi + j],
                                None => v,
                            };
                            for kk in 0..k {
                                pre[b * cp + 1 + kk] = a * row[kk];
                            }
                            pre[b * cp + 1 + k..(b + 1) * cp].fill(0.0);
                        }
                    }
                } else {
                    let prev = &done[li - 1].h;
                    let bias = l.bias.expect("hidden layers have biases");
                    matmul(l.rows, l.cols, c, w, (l.cols, 1), prev, c, &mut t.pre, c, false);
                    for j in 0..l.rows {
                        for b in 0..nb {
                            t.pre[j * c + b * cp] += p[bias + j];
                        }
                    }
                }

                scratch(&mut t.h, l.width * c);
                t.act.clear();
                match l.bias {
                    None => {
                        let m = l.rows;
                        for j in 0..m {
                            for b in 0..nb {
                                let o = b * cp;
                                let pre = &t.pre[j * c + o..j * c + o + cp];
                                let (s, co) = pre[0].sin_cos();
                                t.act.push(co);
                                t.act.push(s);
                                let (hc, hs) = t.h.split_at_mut(m * c);
                                let hc = &mut hc[j * c + o..j * c + o + cp];
                                let hs = &mut hs[j * c + o..j * c + o + cp];
                                hc[0] = co;
                                hs[0] = s;
                                for kk in 0..k {
                                    let pk = pre[1 + kk];
                                    hc[1 + kk] = -s * pk;
                                    hs[1 + kk] = co * pk;
                                    if second {
                                        hc[1 + k + kk] = -co * pk * pk;
                                        hs[1 + k + kk] = -s * pk * pk;
                                    }
                                }
                            }
                        }
                    }
                    Some(_) => {
                        for j in 0..l.rows {
                            for b in 0..nb {
                                let o = j * c + b * cp;
                                let pre = &t.pre[o..o + cp];
                                let (g, g1, g2, g3) = gelu_jet(pre[0]);
                                t.act.extend([g1, g2, g3]);
                                let h = &mut t.h[o..o + cp];
                                h[0] = g;
                                for kk in 0..k {
                                    let pk = pre[1 + kk];
                                    h[1 + kk] = g1 * pk;
                                    if second {
                                        h[1 + k + kk] = g2 * pk * pk + g1 * pre[1 + k + kk];
                                    }
                                }
                            }
                        }
                    }
                }
            }

            let last = &tapes.last().expect("at least one layer").h;
            let wout = &p[self.layout.output_weights..self.layout.output_bias];
            scratch(&mut self.y, c);
            matmul(1, wout.len(), c, wout, (wout.len(), 1), last, c, &mut self.y, c, false);
            let bias = p[self.layout.output_bias];
            for b in 0..nb {
                self.y[b * cp] += bias;
            }
            for (o, y) in self.out.iter_mut().zip(&self.y) {
                *o += y;
            }
        }

        let qf = self.layout.subnets as f64;
        (0..nb)
            .map(|b| {
                let o = &self.out[b * cp..(b + 1) * cp];
                DerivativeBundle {
                    value: o[0] / qf,
                    grad: o[1..1 + k].iter().map(|v| v / qf).collect(),
                    diag2: if second {
                        o[1 + k..].iter().map(|v| v / qf).collect()
                    } else {
                        Vec::new()
                    },
                }
            })
            .collect()
    }

    fn backprop_block_impl(&mut self, net: &FfmNetwork, adjoints: &[Adjoint], grad_out: &mut [f64]) {
        let (k, cp, nb) = (self.k, self.cp, self.nb);
        let second = self.need == Need::Second;
        let c = nb * cp;
        let layout = &self.layout;
        let qf = layout.subnets as f64;

        scratch(&mut self.yb, c);
        for (b, adj) in adjoints.iter().enumerate() {
            let y = &mut self.yb[b * cp..(b + 1) * cp];
            y[0] = adj.value / qf;
            for kk in 0..k {
                y[1 + kk] = adj.grad.get(kk).copied().unwrap_or(0.0) / qf;
                if second {
                    y[1 + k + kk] = adj.diag2.get(kk).copied().unwrap_or(0.0) / qf;
                }
            }
        }

        for q in 0..layout.subnets {
            let a = net.config().scales[q];
            let p = net.subnet_params(q);
            let g = &mut grad_out[q * layout.per_subnet..(q + 1) * layout.per_subnet];
            let tapes = &self.tapes[q];
            let last = &tapes.last().expect("at least one layer").h;
            let width = last.len() / c.max(1);

            let wout = &p[layout.output_weights..layout.output_bias];
            scratch(&mut self.hb, width * c);
            let gw = &mut g[layout.output_weights..layout.output_bias];
            matmul_nt(1, width, c, &self.yb, c, last, c, gw, width);
            for i in 0..width {
                for (h, y) in self.hb[i * c..(i + 1) * c].iter_mut().zip(&self.yb) {
                    *h = wout[i] * y;
                }
            }
            for b in 0..nb {
                g[layout.output_bias] += self.yb[b * cp];
            }

            for li in (0..layout.layers.len()).rev() {
                let l = layout.layers[li];
                let t = &tapes[li];
                let rows = l.rows;
                scratch(&mut self.pb, rows * c);

                match l.bias {
                    None => {
                        let m = rows;
                        for j in 0..m {
                            for b in 0..nb {
                                let o = j * c + b * cp;
                                let (co, s) = (t.act[2 * (j * nb + b)], t.act[2 * (j * nb + b) + 1]);
                                let pre = &t.pre[o..o + cp];
                                let cb = &self.hb[o..o + cp];
                                let sb = &self.hb[m * c + o..m * c + o + cp];
                                let pbo = &mut self.pb[o..o + cp];
                                let mut acc = -s * cb[0] + co * sb[0];
                                for kk in 0..k {
                                    let pk = pre[1 + kk];
                                    let (cb1, sb1) = (cb[1 + kk], sb[1 + kk]);
                                    let (cb2, sb2) = if second {
                                        (cb[1 + k + kk], sb[1 + k + kk])
                                    } else {
                                        (0.0, 0.0)
                                    };
                                    acc += -co * pk * cb1 - s * pk * sb1;
                                    acc += s * pk * pk * cb2 - co * pk * pk * sb2;
                                    pbo[1 + kk] = -s * cb1 + co * sb1 - 2.0 * pk * (co * cb2 + s * sb2);
                                }
                                pbo[0] = acc;
                            }
                        }
                    }
                    Some(bias) => {
                        for j in 0..rows {
                            for b in 0..nb {
                                let o = j * c + b * cp;
                                let ai = 3 * (j * nb + b);
                                let (g1, g2, g3) = (t.act[ai], t.act[ai + 1], t.act[ai + 2]);
                                let pre = &t.pre[o..o + cp];
                                let hb = &self.hb[o..o + cp];
                                let pbo = &mut self.pb[o..o + cp];
                                let mut acc = hb[0] * g1;
                                for kk in 0..k {
                                    let pk = pre[1 + kk];
                                    let b1 = hb[1 + kk];
                                    acc += b1 * g2 * pk;
                                    if second {
                                        let b2 = hb[1 + k + kk];
                                        acc += b2 * (g3 * pk * pk + g2 * pre[1 + k + kk]);
                                        pbo[1 + kk] = b1 * g1 + 2.0 * b2 * g2 * pk;
                                        pbo[1 + k + kk] = b2 * g1;
                                    } else {
                                        pbo[1 + kk] = b1 * g1;
                                    }
                                }
                                pbo[0] = acc;
                            }
                            let mut sb = 0.0;
                            for b in 0..nb {
                                sb += self.pb[j * c + b * cp];
                            }
                            g[bias + j] += sb;
                        }
                    }
                }

                if li == 0 {
                    let xi = &self.xi[q];
                    let d = l.cols;
                    for j in 0..rows {
                        let pb = &self.pb[j * c..(j + 1) * c];
                        for i in 0..d {
                            let mut acc = 0.0;
                            for b in 0..nb {
                                acc += pb[b * cp] * xi[b * d + i];
                                if k > 0 {
                                    acc += a * pb[b * cp + 1 + i];
                                }
                            }
                            g[l.weights + j * d + i] += acc;
                        }
                    }
                } else {
                    let prev = &tapes[li - 1].h;
                    let cols = l.cols;
                    let w = &p[l.weights..l.weights + rows * cols];
                    scratch(&mut self.xb, cols * c);
                    let gw = &mut g[l.weights..l.weights + rows * cols];
                    matmul_nt(rows, cols, c, &self.pb, c, prev, c, gw, cols);
                    matmul(cols, rows, c, w, (1, cols), &self.pb, c, &mut self.xb, c, false);
                    std::mem::swap(&mut self.hb, &mut self.xb);
                }
            }
        }
    }
}

/// Sizes a buffer whose every element is about to be overwritten.
#[inline]
fn scratch(v: &mut Vec<f64>, n: usize) {
    if v.len() != n {
        v.resize(n, 0.0);
    }
}

/// Value, input gradient and diagonal second derivatives of the network at `z`.
pub fn value_grad_laplacian(net: &FfmNetwork, z: &[f64]) -> Result<DerivativeBundle> {
    net.check_input(z)?;
    Ok(Workspace::new(net).evaluate(net, z, Need::Second))
}

/// Evaluates many inputs, preserving order.
pub fn evaluate_many(
    net: &FfmNetwork,
    inputs: &[Vec<f64>],
    need: Need,
    exec: Execution,
) -> Vec<DerivativeBundle> {
    map_chunks(exec, inputs.len(), |r| {
        let mut ws = Workspace::new(net);
        let mut out = Vec::with_capacity(r.len());
        for block in inputs[r].chunks(BLOCK) {
            out.extend(ws.evaluate_block(net, block, need));
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Sum of per-point objective contributions and its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient<T = f64> {
    pub objective: T,
    pub grad: Vec<f64>,
}

/// Gradient of `Σᵢ φᵢ(bundleᵢ)` with respect to every network parameter.
///
/// `term(i, bundle)` returns point `i`'s contribution `φᵢ` and its adjoint
/// `∂φᵢ/∂bundle`. Reduction is chunked and ordered, so repeated calls are
/// bit-identical under both execution modes.
pub fn param_gradient<T, F>(
    net: &FfmNetwork,
    inputs: &[Vec<f64>],
    need: Need,
    exec: Execution,
    term: F,
) -> Result<ParamGradient<T>>
where
    T: Default + AddAssign + Send,
    F: Fn(usize, &DerivativeBundle) -> Result<(T, Adjoint)> + Sync + Send,
{
    for z in inputs {
        net.check_input(z)?;
    }
    let n = net.param_count();
    let chunks = map_chunks(exec, inputs.len(), |r| -> Result<(T, Vec<f64>)> {
        let mut ws = Workspace::new(net);
        let mut grad = vec![0.0; n];
        let mut objective = T::default();
        let mut adjoints = Vec::with_capacity(BLOCK);
        let mut start = r.start;
        while start < r.end {
            let end = (start + BLOCK).min(r.end);
            let bundles = ws.evaluate_block(net, &inputs[start..end], need);
            adjoints.clear();
            for (off, bundle) in bundles.iter().enumerate() {
                let (phi, adj) = term(start + off, bundle)?;
                objective += phi;
                adjoints.push(adj);
            }
            ws.backprop_block(net, &adjoints, &mut grad);
            start = end;
        }
        Ok((objective, grad))
    });
    let mut out = ParamGradient {
        objective: T::default(),
        grad: vec![0.0; n],
    };
    for chunk in chunks {
        let (phi, g) = chunk?;
        out.objective += phi;
        for (a, b) in out.grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    if let Some(i) = out.grad.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            term: "parameter gradient",
            index: i,
            detail: "non-finite gradient entry".into(),
        });
    }
    Ok(out)
}
