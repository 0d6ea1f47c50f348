//! Second-order forward-mode jet numbers and smooth closed-form test
//! functions, evaluated without any library derivative code.

use rand::Rng;
use wave_fpinn::deriv::{DerivativeBundle, Need, Surrogate};

/// `(value, d/dε, d²/dε²)` along one direction.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub v: f64,
    pub d: f64,
    pub dd: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, d: 0.0, dd: 0.0 }
    }

    pub fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d: self.d + o.d, dd: self.dd + o.dd }
    }

    pub fn mul(self, o: Jet) -> Jet {
        Jet {
            v: self.v * o.v,
            d: self.d * o.v + self.v * o.d,
            dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd,
        }
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet { v: c * self.v, d: c * self.d, dd: c * self.dd }
    }

    pub fn sin(self) -> Jet {
        let (s, c) = self.v.sin_cos();
        Jet { v: s, d: c * self.d, dd: c * self.dd - s * self.d * self.d }
    }
}

/// `g(y) = (c0 + Σ c_k y_k + Σ q_k y_k²) · Π sin(ω_k y_k + φ_k)`.
#[derive(Debug, Clone)]
pub struct SmoothTestFn {
    c0: f64,
    c: Vec<f64>,
    q: Vec<f64>,
    omega: Vec<f64>,
    phi: Vec<f64>,
}

impl SmoothTestFn {
    /// Random coefficients scaled to the extent of each coordinate.
    pub fn random<R: Rng>(extent: &[f64], rng: &mut R) -> Self {
        let n = extent.len();
        SmoothTestFn {
            c0: rng.random_range(-2.0..2.0),
            c: extent.iter().map(|l| rng.random_range(-1.0..1.0) / l).collect(),
            q: extent.iter().map(|l| rng.random_range(-1.0..1.0) / (l * l)).collect(),
            omega: (0..n).map(|_| rng.random_range(0.2..3.0)).collect(),
            phi: (0..n).map(|_| rng.random_range(0.0..6.0)).collect(),
        }
    }

    pub fn eval(&self, y: &[Jet]) -> Jet {
        let mut p = Jet::constant(self.c0);
        let mut t = Jet::constant(1.0);
        for k in 0..y.len() {
            p = p.add(y[k].scale(self.c[k])).add(y[k].mul(y[k]).scale(self.q[k]));
            t = t.mul(y[k].scale(self.omega[k]).add(Jet::constant(self.phi[k])).sin());
        }
        p.mul(t)
    }
}

/// `g` composed with the affine map `y = lo + s·z` from network inputs to
/// physical coordinates.
pub struct Composed<'a> {
    pub g: &'a SmoothTestFn,
    pub lo: Vec<f64>,
    pub s: Vec<f64>,
}

impl Surrogate for Composed<'_> {
    fn input_dim(&self) -> usize {
        self.lo.len()
    }

    fn evaluate(&self, z: &[f64], need: Need) -> DerivativeBundle {
        let n = z.len();
        let along = |k: Option<usize>| {
            let y: Vec<Jet> = (0..n)
                .map(|j| Jet {
                    v: self.lo[j] + self.s[j] * z[j],
                    d: if Some(j) == k { self.s[j] } else { 0.0 },
                    dd: 0.0,
                })
                .collect();
            self.g.eval(&y)
        };
        let jets: Vec<Jet> = (0..n).map(|k| along(Some(k))).collect();
        DerivativeBundle {
            value: along(None).v,
            grad: if need >= Need::First { jets.iter().map(|j| j.d).collect() } else { vec![] },
            diag2: if need >= Need::Second { jets.iter().map(|j| j.dd).collect() } else { vec![] },
        }
    }
}
