//! Scalar special functions: Gamma, reciprocal Gamma, and the Mittag-Leffler
//! function E_a(z) = sum z^n / Gamma(1 + a n), together with the validated
//! stability index carried around by every other module.
//!
//! The reciprocal Gamma is computed through the reflection formula
//! 1/Gamma(x) = sin(pi x) Gamma(1-x) / pi for x < 1/2, so its zeros at the
//! non-positive integers are exact. Series code that divides by Gamma at a
//! pole relies on that.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Validated stability index in the open interval (1, 2), with cached
/// trigonometric values used throughout the closed-form densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableIndex {
    alpha: f64,
    sin_pi_alpha: f64,
    cos_pi_alpha: f64,
    inv_alpha: f64,
}

impl StableIndex {
    /// Default guard delta: alpha must satisfy 1 + delta < alpha < 2 - delta.
    pub const DEFAULT_GUARD: f64 = 1e-3;

    /// Construct with the default guard.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_guard(alpha, Self::DEFAULT_GUARD)
    }

    /// Construct with a custom guard delta.
    pub fn with_guard(alpha: f64, delta: f64) -> Result<Self> {
        let lo = 1.0 + delta;
        let hi = 2.0 - delta;
        if !alpha.is_finite() || !(alpha > lo && alpha < hi) {
            return Err(Error::InvalidAlpha { alpha, lo, hi });
        }
        Ok(StableIndex {
            alpha,
            sin_pi_alpha: sin_pi(alpha),
            cos_pi_alpha: cos_pi(alpha),
            inv_alpha: 1.0 / alpha,
        })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// sin(pi alpha), negative everywhere on (1, 2).
    #[inline]
    pub fn sin_pi_alpha(&self) -> f64 {
        self.sin_pi_alpha
    }

    #[inline]
    pub fn cos_pi_alpha(&self) -> f64 {
        self.cos_pi_alpha
    }

    /// 1/alpha.
    #[inline]
    pub fn inv_alpha(&self) -> f64 {
        self.inv_alpha
    }
}

// ---------------------------------------------------------------------------
// Lanczos approximation (g = 7, n = 9), coefficients after Godfrey/Pugh.
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos series A_g(z) with z = x - 1.
#[inline]
fn lanczos_sum(x: f64) -> f64 {
    let z = x - 1.0;
    let mut s = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS[1..].iter().enumerate() {
        s += c / (z + (i + 1) as f64);
    }
    s
}

/// Gamma function for x >= 0.5 (no reflection).
fn gamma_positive(x: f64) -> f64 {
    let s = lanczos_sum(x);
    let t = x - 1.0 + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x - 0.5) * (-t).exp() * s
}

/// ln Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x), valid on (0, 1/2)
        return PI.ln() - sin_pi(x).abs().ln() - ln_gamma(1.0 - x);
    }
    let s = lanczos_sum(x);
    let t = x - 1.0 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x - 0.5) * t.ln() - t + s.ln()
}

/// Gamma function on the real line. Returns NaN at the poles 0, -1, -2, ...
pub fn gamma(x: f64) -> f64 {
    if x >= 0.5 {
        gamma_positive(x)
    } else {
        let s = sin_pi(x);
        if s == 0.0 {
            return f64::NAN;
        }
        PI / (s * gamma_positive(1.0 - x))
    }
}

/// Reciprocal Gamma 1/Gamma(x): entire, exactly zero at 0, -1, -2, ...
pub fn rgamma(x: f64) -> f64 {
    if x >= 0.5 {
        1.0 / gamma_positive(x)
    } else {
        sin_pi(x) * gamma_positive(1.0 - x) / PI
    }
}

/// sin(pi x) with exact argument reduction modulo 2. Exactly zero at integer
/// x, which is what makes the rgamma zeros exact.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    // reduce to r in [-1, 1] with x - r an even integer; fmod is exact
    let mut r = x % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r < -1.0 {
        r += 2.0;
    }
    // fold onto [-1/2, 1/2] where the direct series is accurate
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    if r == 0.0 {
        return 0.0;
    }
    (PI * r).sin()
}

/// cos(pi x) via the half-period shift of `sin_pi`.
pub fn cos_pi(x: f64) -> f64 {
    // |x| + 0.5 is exact for |x| < 2^52
    sin_pi(0.5 - x.abs())
}

// ---------------------------------------------------------------------------
// Mittag-Leffler
// ---------------------------------------------------------------------------

/// Which quantity `mittag_leffler` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlPart {
    /// E_a(z)
    Value,
    /// d/dz E_a(z)
    Derivative,
}

/// Largest exponent exp() can take before f64 overflow.
const EXP_OVERFLOW: f64 = 709.0;

/// Mittag-Leffler function E_a(z) = sum_{n>=0} z^n / Gamma(1 + a n) or its
/// derivative, for a in (0, 2] and real z.
///
/// E_1 is the exponential and is evaluated as such. Otherwise the power
/// series is summed with compensated accumulation until three consecutive
/// terms fall below machine epsilon relative to the partial sum.
pub fn mittag_leffler(a: f64, z: f64, part: MlPart) -> Result<f64> {
    if !(a > 0.0 && a <= 2.0) || !a.is_finite() {
        return Err(Error::Domain {
            op: "mittag_leffler",
            msg: format!("order a = {a} outside (0, 2]"),
        });
    }
    if !z.is_finite() {
        return Err(Error::Domain {
            op: "mittag_leffler",
            msg: format!("argument z = {z} not finite"),
        });
    }
    if a == 1.0 {
        // E_1(z) = exp(z), and so is its derivative
        return Ok(z.exp());
    }
    if z > 0.0 && z.powf(1.0 / a) > EXP_OVERFLOW {
        // E_a(z) ~ exp(z^(1/a))/a for large positive z
        return Err(Error::Overflow {
            op: "mittag_leffler",
            arg: z,
        });
    }
    if z == 0.0 {
        return Ok(match part {
            MlPart::Value => 1.0,
            MlPart::Derivative => rgamma(1.0 + a),
        });
    }

    let ln_abs_z = z.abs().ln();
    let mut sum;
    let mut comp = 0.0_f64; // Kahan compensation
    let n0: u32;
    match part {
        MlPart::Value => {
            sum = 1.0;
            n0 = 1;
        }
        MlPart::Derivative => {
            sum = rgamma(1.0 + a);
            n0 = 2;
        }
    }
    let mut small_in_a_row = 0;
    const MAX_TERMS: u32 = 4000;
    for n in n0..MAX_TERMS {
        let ln_mag = match part {
            MlPart::Value => n as f64 * ln_abs_z - ln_gamma(1.0 + a * n as f64),
            MlPart::Derivative => {
                (n as f64).ln() + (n - 1) as f64 * ln_abs_z - ln_gamma(1.0 + a * n as f64)
            }
        };
        let term = sign_of_power(z, n, part) * ln_mag.exp();
        // Kahan step
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() <= f64::EPSILON * sum.abs() {
            small_in_a_row += 1;
            if small_in_a_row >= 3 {
                return Ok(sum);
            }
        } else {
            small_in_a_row = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "mittag_leffler",
        x: z,
        max_terms: MAX_TERMS,
    })
}

#[inline]
fn sign_of_power(z: f64, n: u32, part: MlPart) -> f64 {
    let p = match part {
        MlPart::Value => n,
        MlPart::Derivative => n - 1,
    };
    if z < 0.0 && p % 2 == 1 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn stable_index_guard() {
        assert!(StableIndex::new(1.5).is_ok());
        assert!(StableIndex::new(1.0005).is_err());
        assert!(StableIndex::new(1.999).is_err());
        assert!(StableIndex::new(2.5).is_err());
        assert!(StableIndex::new(f64::NAN).is_err());
        assert!(StableIndex::with_guard(1.0005, 1e-4).is_ok());
    }

    #[test]
    fn stable_index_caches() {
        for &a in &[1.1, 1.25, 1.5, 1.75, 1.9] {
            let idx = StableIndex::new(a).unwrap();
            assert!(idx.sin_pi_alpha() < 0.0);
            assert!(rel(idx.sin_pi_alpha().abs(), (PI * a).sin().abs()) < 1e-13);
            assert!((idx.inv_alpha() - 1.0 / a).abs() < 1e-16);
        }
        // cos(3 pi / 2) is exactly zero through the reduced evaluation
        assert_eq!(StableIndex::new(1.5).unwrap().cos_pi_alpha(), 0.0);
    }

    #[test]
    fn sin_pi_basics() {
        assert_eq!(sin_pi(0.0), 0.0);
        assert_eq!(sin_pi(1.0), 0.0);
        assert_eq!(sin_pi(-3.0), 0.0);
        assert_eq!(sin_pi(725.0), 0.0);
        assert!((sin_pi(0.5) - 1.0).abs() < 1e-15);
        assert!((sin_pi(-0.5) + 1.0).abs() < 1e-15);
        assert!((sin_pi(10.25) - (0.25_f64 * PI).sin()).abs() < 1e-15);
        assert_eq!(cos_pi(0.5), 0.0);
        assert_eq!(cos_pi(1.5), 0.0);
        assert!((cos_pi(1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_reference_points() {
        assert!(rel(gamma(1.0), 1.0) < 1e-14);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        // Gamma(-1.5) = 4 sqrt(pi) / 3
        assert!(rel(gamma(-1.5), 4.0 * PI.sqrt() / 3.0) < 1e-13);
        assert!(gamma(0.0).is_nan());
        assert!(gamma(-2.0).is_nan());
    }

    #[test]
    fn rgamma_poles_are_exact_zeros() {
        assert_eq!(rgamma(0.0), 0.0);
        assert_eq!(rgamma(-1.0), 0.0);
        assert_eq!(rgamma(-3.0), 0.0);
        assert_eq!(rgamma(-42.0), 0.0);
    }

    #[test]
    fn rgamma_reference_points() {
        // reference values from 50-digit arithmetic
        assert!(rel(rgamma(1.0), 1.0) < 1e-13);
        assert!(rel(rgamma(-1.5), 0.42314218766081721521) < 1e-13);
        assert!(rel(rgamma(-2.5), -1.057855469152043038) < 1e-13);
        assert!(rel(rgamma(0.5), 0.56418958354775628695) < 1e-13);
        assert!(rel(rgamma(10.5), 8.8239572002038009055e-7) < 1e-13);
        assert!(rel(rgamma(-35.5), 1.9666456125211330012e40) < 2e-13);
        assert!(rel(rgamma(40.25), 1.9539790522453672782e-47) < 2e-13);
    }

    #[test]
    fn rgamma_recurrence_on_grid() {
        // 1/Gamma(x+1) = (1/Gamma(x)) / x away from poles
        let mut x = -49.63;
        while x < 49.0 {
            let lhs = rgamma(x + 1.0);
            let rhs = rgamma(x) / x;
            assert!(
                rel(lhs, rhs) < 1e-12,
                "recurrence failed at x = {x}: {lhs} vs {rhs}"
            );
            x += 0.77;
        }
    }

    #[test]
    fn mittag_leffler_is_exp_at_one() {
        for &z in &[-10.0, -2.5, 0.0, 1.0, 7.75, 10.0] {
            let v = mittag_leffler(1.0, z, MlPart::Value).unwrap();
            assert!(rel(v, z.exp()) < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn mittag_leffler_at_zero() {
        for &a in &[0.5, 1.1, 1.5, 1.9, 2.0] {
            assert_eq!(mittag_leffler(a, 0.0, MlPart::Value).unwrap(), 1.0);
        }
    }

    #[test]
    fn mittag_leffler_reference_points() {
        // reference values from 50-digit partial summation
        let cases = [
            (1.5, 2.0, 3.3487008963183954036),
            (1.1, 5.0, 68.328456464341922271),
            (1.9, -3.0, -0.19800617221635832014),
            (0.5, 1.0, 5.0089800807622834663),
            (2.0, 4.0, 3.7621956910836314596), // cosh(2)
        ];
        for (a, z, want) in cases {
            let v = mittag_leffler(a, z, MlPart::Value).unwrap();
            assert!(rel(v, want) < 1e-12, "E_{a}({z}) = {v}, want {want}");
        }
        let d = mittag_leffler(1.5, 2.0, MlPart::Derivative).unwrap();
        assert!(rel(d, 1.6988911460485704985) < 1e-12);
    }

    #[test]
    fn mittag_leffler_derivative_matches_finite_differences() {
        let h = 1e-5;
        for &a in &[1.1, 1.5, 1.9] {
            let mut z = 0.1;
            while z <= 5.0 {
                let d = mittag_leffler(a, z, MlPart::Derivative).unwrap();
                let fd = (mittag_leffler(a, z + h, MlPart::Value).unwrap()
                    - mittag_leffler(a, z - h, MlPart::Value).unwrap())
                    / (2.0 * h);
                assert!(rel(d, fd) < 1e-6, "a = {a}, z = {z}: {d} vs {fd}");
                z += 0.35;
            }
        }
    }

    #[test]
    fn mittag_leffler_rejects_bad_input() {
        assert!(mittag_leffler(0.0, 1.0, MlPart::Value).is_err());
        assert!(mittag_leffler(2.5, 1.0, MlPart::Value).is_err());
        assert!(mittag_leffler(1.5, f64::INFINITY, MlPart::Value).is_err());
        // overflow guard: z^(1/a) far beyond exp range
        assert!(matches!(
            mittag_leffler(1.5, 1e9, MlPart::Value),
            Err(Error::Overflow { .. })
        ));
    }
}
