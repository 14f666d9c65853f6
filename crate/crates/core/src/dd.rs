//! Double-double (compensated pair) arithmetic for the finite-difference
//! side of the gradient checker.
//!
//! Central differences divide a tiny loss difference by 2e-5; evaluating the
//! losses in plain f64 leaves ~1e-12 of roundoff on the quotient, which
//! drowns coordinates whose true gradient is near the checker's 1e-8 guard.
//! Evaluating the same function with ~31 significant digits pushes that
//! noise below 1e-19, so the comparison measures the backward pass and not
//! the evaluation error.
//!
//! Only the operations the shadow forward pass needs are implemented.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

// Dekker split; avoids relying on an FMA instruction.
#[inline]
fn split(a: f64) -> (f64, f64) {
    let c = 134_217_729.0 * a; // 2^27 + 1
    let hi = c - (c - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl From<f64> for Dd {
    #[inline]
    fn from(v: f64) -> Dd {
        Dd { hi: v, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;

    #[inline]
    fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let (t1, t2) = two_sum(self.lo, other.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;

    #[inline]
    fn sub(self, other: Dd) -> Dd {
        self + (-other)
    }
}

impl Neg for Dd {
    type Output = Dd;

    #[inline]
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Mul for Dd {
    type Output = Dd;

    #[inline]
    fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + (self.hi * other.lo + self.lo * other.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;

    fn div(self, other: Dd) -> Dd {
        let q0 = self.hi / other.hi;
        let r = self - other * Dd::from(q0);
        let q1 = r.hi / other.hi;
        let r = r - other * Dd::from(q1);
        let q2 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q0, q1);
        Dd { hi, lo } + Dd::from(q2)
    }
}

impl Dd {
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact scaling by a power of two.
    #[inline]
    fn scale2(self, pow: i32) -> Dd {
        let f = 2.0f64.powi(pow);
        Dd {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    /// e^x by range reduction (x = k ln2 + r), a scaled Taylor series, and
    /// repeated squaring.
    pub fn exp(self) -> Dd {
        if self.hi > 700.0 {
            return Dd::from(f64::INFINITY);
        }
        if self.hi < -700.0 {
            return ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = self - LN2 * Dd::from(k);
        // |r| <= ln2/2; scale to |s| <= ln2/1024 so eight Taylor terms reach
        // ~1e-29.
        let s = r.scale2(-9);
        let mut term = s;
        let mut sum = s;
        for n in 2..=9u32 {
            term = term * s / Dd::from(f64::from(n));
            sum = sum + term;
        }
        // e^s - 1 = sum; square back: (1 + y)^2 = 1 + (2y + y^2).
        let mut y = sum;
        for _ in 0..9 {
            y = y.scale2(1) + y * y;
        }
        (ONE + y).scale2(k as i32)
    }

    /// Natural log via one Newton step on a double-precision seed.
    pub fn ln(self) -> Dd {
        debug_assert!(self.hi > 0.0);
        let y0 = Dd::from(self.hi.ln());
        // y1 = y0 + a e^{-y0} - 1
        y0 + self * (-y0).exp() - ONE
    }

    pub fn sigmoid(self) -> Dd {
        if self.hi >= 0.0 {
            ONE / (ONE + (-self).exp())
        } else {
            let e = self.exp();
            e / (ONE + e)
        }
    }

    pub fn tanh(self) -> Dd {
        // tanh(x) = sign(x) (1 - t) / (1 + t), t = e^{-2|x|}.
        let ax = if self.hi >= 0.0 { self } else { -self };
        let t = (-ax.scale2(1)).exp();
        let v = (ONE - t) / (ONE + t);
        if self.hi >= 0.0 {
            v
        } else {
            -v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_dd(value: Dd, expected_hi: f64, expected_lo: f64) {
        // Compare against a 2-part reference to ~1e-28.
        let err = value
            - Dd {
                hi: expected_hi,
                lo: expected_lo,
            };
        assert!(
            err.to_f64().abs() < 1e-27,
            "dd mismatch: got ({:e}, {:e}), want ({:e}, {:e})",
            value.hi,
            value.lo,
            expected_hi,
            expected_lo
        );
    }

    #[test]
    fn exp_matches_reference() {
        // exp(1) = 2.71828182845904523536028747135266...
        assert_dd(ONE.exp(), std::f64::consts::E, 1.4456468917292502e-16);
        // exp(x) * exp(-x) = 1 at the dyadic nearest to 0.3.
        let x = Dd::from(0.3);
        assert_dd(x.exp() * (-x).exp(), 1.0, 0.0);
    }

    #[test]
    fn ln_inverts_exp() {
        for v in [0.7, 1.0, 2.0, 13.25, 1e-3] {
            let x = Dd::from(v);
            let err = (x.exp().ln() - x).to_f64().abs();
            assert!(err < 1e-27, "ln(exp({v})) off by {err:e}");
        }
        assert_dd(Dd::from(2.0).ln(), std::f64::consts::LN_2, 2.3190468138462996e-17);
    }

    #[test]
    fn division_round_trips() {
        let a = Dd::from(std::f64::consts::PI);
        let b = Dd::from(0.37);
        let q = a / b;
        assert!((q * b - a).to_f64().abs() < 1e-28);
    }

    #[test]
    fn sigmoid_and_tanh_match_f64_to_their_precision() {
        for v in [-5.0, -1.3, 0.0, 0.8, 4.2] {
            let s = Dd::from(v).sigmoid().to_f64();
            let t = Dd::from(v).tanh().to_f64();
            assert!((s - crate::numeric::sigmoid(v)).abs() < 1e-15);
            assert!((t - v.tanh()).abs() < 1e-15);
        }
        // Spot values against high-precision references evaluated at the
        // dyadic arguments.
        let s = Dd::from(-1.3).sigmoid();
        assert!((s.to_f64() - 0.214_165_016_957_441_4).abs() < 2e-17);
        let t = Dd::from(0.8).tanh();
        assert!((t.to_f64() - 0.664_036_770_267_849).abs() < 2e-17);
    }

    #[test]
    fn summation_is_compensated() {
        // 1 + 1e-20 stays distinguishable from 1.
        let s = ONE + Dd::from(1e-20);
        assert_eq!(s.hi, 1.0);
        assert_eq!(s.lo, 1e-20);
        assert_eq!((s - ONE).to_f64(), 1e-20);
    }
}
