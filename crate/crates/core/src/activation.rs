//! Exact GELU and its derivatives.
//!
//! With `Φ` the standard normal CDF and `φ` its density:
//! `g = xΦ`, `g' = Φ + xφ`, `g'' = (2 - x²)φ`, `g''' = (x³ - 4x)φ`.

use std::f64::consts::FRAC_1_SQRT_2;

/// `(value, first, second)` derivatives of GELU at `x`.
#[inline]
pub fn gelu_with_derivatives(x: f64) -> (f64, f64, f64) {
    let (v, d1, d2, _) = gelu_jet(x);
    (v, d1, d2)
}

#[inline]
pub fn gelu(x: f64) -> f64 {
    x * normal_cdf(x)
}

/// Value and first three derivatives; the third is needed when
/// back-propagating through second input derivatives.
#[inline]
pub fn gelu_jet(x: f64) -> (f64, f64, f64, f64) {
    let x2 = x * x;
    let e = (-0.5 * x2).exp();
    let cdf = cdf_from_gaussian(x, e);
    let pdf = e * FRAC_1_SQRT_2PI;
    (x * cdf, cdf + x * pdf, (2.0 - x2) * pdf, (x2 - 4.0) * x * pdf)
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[inline]
fn normal_cdf(x: f64) -> f64 {
    cdf_from_gaussian(x, (-0.5 * (x * x)).exp())
}

/// `Φ(x)` given `e = exp(-x²/2)`, so callers that also need the density
/// pay for a single exponential. Rational fits are the 53-bit erf/erfc
/// minimax approximations (relative error below 1e-16 on each interval).
#[inline]
fn cdf_from_gaussian(x: f64, e: f64) -> f64 {
    let t = -x * FRAC_1_SQRT_2;
    let z = t.abs();
    if z < 0.5 {
        return 0.5 - 0.5 * erf_small(t);
    }
    // erfc(z) = exp(-z²) * scaled(z) and exp(-z²) = e
    let tail = 0.5 * e * erfc_scaled(z);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

#[inline]
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

// Rational-fit coefficients are kept exactly as published.
#[allow(clippy::excessive_precision)]
#[inline]
fn erf_small(t: f64) -> f64 {
    const Y: f64 = 1.044_948_577_880_859_375;
    const P: [f64; 5] = [
        0.0834305892146531832907,
        -0.338165134459360935041,
        -0.0509990735146777432841,
        -0.00772758345802133288487,
        -0.000322780120964605683831,
    ];
    const Q: [f64; 5] = [
        1.0,
        0.455004033050794024546,
        0.0875222600142252549554,
        0.00858571925074406212772,
        0.000370900071787748000569,
    ];
    let tt = t * t;
    t * (Y + poly(&P, tt) / poly(&Q, tt))
}

/// `erfc(z) * exp(z²)` for `z >= 0.5`.
#[allow(clippy::excessive_precision)]
#[inline]
fn erfc_scaled(z: f64) -> f64 {
    let r = if z < 1.5 {
        const Y: f64 = 0.405_935_764_312_744_140_625;
        const P: [f64; 6] = [
            -0.098090592216281240205,
            0.178114665841120341155,
            0.191003695796775433986,
            0.0888900368967884466578,
            0.0195049001251218801359,
            0.00180424538297014223957,
        ];
        const Q: [f64; 7] = [
            1.0,
            1.84759070983002217845,
            1.42628004845511324508,
            0.578052804889902404909,
            0.12385097467900864233,
            0.0113385233577001411017,
            0.337511472483094676155e-5,
        ];
        let s = z - 0.5;
        Y + poly(&P, s) / poly(&Q, s)
    } else if z < 2.5 {
        const Y: f64 = 0.506_728_172_302_246_093_75;
        const P: [f64; 6] = [
            -0.0243500476207698441272,
            0.0386540375035707201728,
            0.04394818964209516296,
            0.0175679436311802092299,
            0.00323962406290842133584,
            0.000235839115596880717416,
        ];
        const Q: [f64; 6] = [
            1.0,
            1.53991494948552447182,
            0.982403709157920235114,
            0.325732924782444448493,
            0.0563921837420478160373,
            0.00410369723978904575884,
        ];
        let s = z - 1.5;
        Y + poly(&P, s) / poly(&Q, s)
    } else if z < 4.5 {
        const Y: f64 = 0.540_575_027_465_820_312_5;
        const P: [f64; 6] = [
            0.00295276716530971662634,
            0.0137384425896355332126,
            0.00840807615555585383007,
            0.00212825620914618649141,
            0.000250269961544794627958,
            0.113212406648847561139e-4,
        ];
        const Q: [f64; 6] = [
            1.0,
            1.04217814166938418171,
            0.442597659481563127003,
            0.0958492726301061423444,
            0.0105982906484876531489,
            0.000479411269521714493907,
        ];
        let s = z - 3.5;
        Y + poly(&P, s) / poly(&Q, s)
    } else {
        const Y: f64 = 0.557_909_011_840_820_312_5;
        const P: [f64; 7] = [
            0.00628057170626964891937,
            0.0175389834052493308818,
            -0.212652252872804219852,
            -0.687717681153649930619,
            -2.5518551727311523996,
            -3.22729451764143718517,
            -2.8175401114513378771,
        ];
        const Q: [f64; 7] = [
            1.0,
            2.79257750980575282228,
            11.0567237927800161565,
            15.930646027911794143,
            22.9367376522880577224,
            13.5064170191802889145,
            5.48409182238641741584,
        ];
        let s = 1.0 / z;
        Y + poly(&P, s) / poly(&Q, s)
    };
    r / z
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn cdf_matches_libm_erfc() {
        let mut worst = 0.0f64;
        let mut x = -38.0;
        while x < 10.0 {
            let reference = 0.5 * libm::erfc(-x * FRAC_1_SQRT_2);
            let got = normal_cdf(x);
            assert_eq!(gelu_jet(x).0.to_bits(), gelu(x).to_bits());
            if reference > 1e-300 {
                // exp(-x²/2) inherits the rounding of x², roughly x²·ε
                let scale = 1.0 + x * x;
                worst = worst.max(((got - reference) / reference).abs() / scale);
            }
            x += 0.000_713;
        }
        assert!(worst < 1e-15, "worst scaled relative error {worst:e}");
    }

    #[test]
    fn values_at_zero() {
        let (v, d1, d2) = gelu_with_derivatives(0.0);
        assert_eq!(v, 0.0);
        assert_eq!(d1, 0.5);
        assert!((d2 - 2.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn saturates_to_identity() {
        let (v, d1, _) = gelu_with_derivatives(10.0);
        assert!((v - 10.0).abs() < 1e-8);
        assert!((d1 - 1.0).abs() < 1e-8);
        assert!(gelu(-10.0).abs() < 1e-8);
    }

    #[test]
    fn matches_erf_definition() {
        for &x in &[-3.0, -0.7, 0.2, 1.5, 4.0] {
            let reference = x * 0.5 * (1.0 + libm::erf(x / 2f64.sqrt()));
            assert!((gelu(x) - reference).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &x in &[-2.5, -0.3, 0.0, 0.8, 3.1] {
            let (_, d1, d2, d3) = gelu_jet(x);
            let fd1 = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            let fd2 = (gelu_jet(x + h).1 - gelu_jet(x - h).1) / (2.0 * h);
            let fd3 = (gelu_jet(x + h).2 - gelu_jet(x - h).2) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-9, "g' at {x}");
            assert!((d2 - fd2).abs() < 1e-9, "g'' at {x}");
            assert!((d3 - fd3).abs() < 1e-9, "g''' at {x}");
        }
    }
}
