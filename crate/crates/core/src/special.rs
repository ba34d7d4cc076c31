//! Gamma and Mittag-Leffler functions on the real axis.
//!
//! `gamma` uses the Lanczos approximation (g = 7, nine coefficients) with the
//! reflection formula below 1/2. The Mittag-Leffler functions are summed from
//! their power series with compensated accumulation; arguments beyond
//! [`ML_Z_MAX`] are refused instead of being evaluated asymptotically.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Largest |z| accepted by the Mittag-Leffler series.
pub const ML_Z_MAX: f64 = 100.0;

/// Relative truncation threshold for the series tail.
const ML_TERM_TOL: f64 = 1e-16;

const ML_MAX_TERMS: usize = 100_000;

/// Largest argument for which Γ is finite in double precision.
const GAMMA_MAX_ARG: f64 = 171.624_376_956_302_7;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(zm1: f64) -> f64 {
    let mut x = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += c / (zm1 + i as f64);
    }
    x
}

/// Γ(z) for real z > 0.
pub fn gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("gamma requires z > 0, got {z}")));
    }
    if z > GAMMA_MAX_ARG {
        return Err(Error::Overflow(format!("gamma({z}) exceeds f64 range")));
    }
    Ok(gamma_unchecked(z))
}

fn gamma_unchecked(z: f64) -> f64 {
    // integers: exact factorial
    if z.fract() == 0.0 && z <= 171.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < z {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma_unchecked(1.0 - z));
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    let x = lanczos_sum(zm1);
    // split the power so that large arguments do not overflow early
    let half = t.powf((zm1 + 0.5) / 2.0);
    (2.0 * PI).sqrt() * x * half * (half * (-t).exp())
}

/// ln Γ(z) for real z > 0.
pub fn ln_gamma(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires z > 0, got {z}")));
    }
    Ok(ln_gamma_unchecked(z))
}

fn ln_gamma_unchecked(z: f64) -> f64 {
    if z < 0.5 {
        return (PI / (PI * z).sin()).ln() - ln_gamma_unchecked(1.0 - z);
    }
    if z < 20.0 {
        return gamma_unchecked(z).ln();
    }
    let zm1 = z - 1.0;
    let t = zm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm1 + 0.5) * t.ln() - t + lanczos_sum(zm1).ln()
}

/// 1/Γ(z), extended by zero to the non-positive integers.
pub fn recip_gamma(z: f64) -> f64 {
    if z <= 0.0 && z.fract() == 0.0 {
        return 0.0;
    }
    if z > 0.0 {
        if z > GAMMA_MAX_ARG {
            return 0.0;
        }
        return 1.0 / gamma_unchecked(z);
    }
    // negative non-integer: reflection
    (PI * z).sin() * gamma_unchecked(1.0 - z) / PI
}

/// Euler beta function B(p, q) for p, q > 0.
pub fn beta(p: f64, q: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::domain(format!("beta requires p, q > 0, got ({p}, {q})")));
    }
    if p + q < 150.0 {
        Ok(gamma_unchecked(p) * gamma_unchecked(q) / gamma_unchecked(p + q))
    } else {
        Ok((ln_gamma_unchecked(p) + ln_gamma_unchecked(q) - ln_gamma_unchecked(p + q)).exp())
    }
}

/// Parameters of the two-parameter Mittag-Leffler function E_{μ,ν}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub mu: f64,
    pub nu: f64,
}

impl MLParams {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain(format!("Mittag-Leffler order must be > 0, got {mu}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::domain(format!("Mittag-Leffler second parameter must be > 0, got {nu}")));
        }
        Ok(MLParams { mu, nu })
    }

    /// One-parameter form (ν = 1).
    pub fn one(mu: f64) -> Result<Self> {
        Self::new(mu, 1.0)
    }
}

/// One-parameter Mittag-Leffler function E_μ(z).
pub fn ml1(mu: f64, z: f64) -> Result<f64> {
    ml2(MLParams::one(mu)?, z)
}

/// Two-parameter Mittag-Leffler function E_{μ,ν}(z) = Σ z^k / Γ(μk + ν).
pub fn ml2(p: MLParams, z: f64) -> Result<f64> {
    if !z.is_finite() || z.abs() > ML_Z_MAX {
        return Err(Error::ArgumentRange { z, max: ML_Z_MAX });
    }
    let MLParams { mu, nu } = p;
    if z == 0.0 {
        return Ok(recip_gamma(nu));
    }
    let az = z.abs();
    let ln_az = az.ln();
    // terms grow until μk ≈ |z|^{1/μ}
    let peak = az.powf(1.0 / mu) * mu + nu;

    // Neumaier-compensated sum
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for k in 0..ML_MAX_TERMS {
        let kf = k as f64;
        let arg = mu * kf + nu;
        let log_mag = kf * ln_az - ln_gamma_unchecked(arg);
        if log_mag > 709.0 {
            return Err(Error::Overflow(format!(
                "Mittag-Leffler series term overflows for mu={mu}, nu={nu}, z={z}"
            )));
        }
        // direct ratio only while numerator and denominator both fit in f64
        let mag = if arg <= 170.0 && kf * ln_az < 700.0 && log_mag.abs() < 600.0 && k < 300 {
            az.powi(k as i32) / gamma_unchecked(arg)
        } else {
            log_mag.exp()
        };
        let term = if z < 0.0 && k % 2 == 1 { -mag } else { mag };

        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;

        let total = sum + comp;
        if mag < ML_TERM_TOL * total.abs() && arg > peak {
            return Ok(total);
        }
        if mag == 0.0 && arg > peak {
            return Ok(total);
        }
        if !total.is_finite() {
            break;
        }
    }
    let total = sum + comp;
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Overflow(format!("Mittag-Leffler sum diverged for z={z}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_trivial_values() {
        assert_eq!(gamma(1.0).unwrap(), 1.0);
        assert_eq!(gamma(5.0).unwrap(), 24.0);
        assert_relative_eq!(gamma(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn ml_large_terms_stay_finite() {
        // z^k and Γ(μk + 1) both overflow before their ratio does
        let (mu, z) = (0.6f64, 25.0f64);
        let logs: f64 = (0..2000)
            .map(|k| (k as f64 * z.ln() - ln_gamma(mu * k as f64 + 1.0).unwrap()).exp())
            .sum();
        assert_relative_eq!(ml1(mu, z).unwrap(), logs, max_relative = 1e-12);
    }

    #[test]
    fn gamma_rejects_bad_arguments() {
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(gamma(200.0), Err(Error::Overflow(_))));
    }

    // Γ(n + 1/2) = (2n)! √π / (4^n n!)
    #[test]
    fn gamma_half_integers_match_closed_form() {
        for n in 0..60u32 {
            let mut fact_2n = 1.0f64;
            for k in 1..=(2 * n) {
                fact_2n *= k as f64;
            }
            let mut fact_n = 1.0f64;
            for k in 1..=n {
                fact_n *= k as f64;
            }
            let expected = fact_2n * PI.sqrt() / (4f64.powi(n as i32) * fact_n);
            let got = gamma(n as f64 + 0.5).unwrap();
            assert_relative_eq!(got, expected, max_relative = 1e-12);
        }
    }

    // Legendre duplication: Γ(z)Γ(z+1/2) = 2^{1-2z} √π Γ(2z)
    #[test]
    fn gamma_duplication_formula() {
        let mut z = 0.013;
        while z < 80.0 {
            let lhs = gamma(z).unwrap() * gamma(z + 0.5).unwrap();
            let rhs = 2f64.powf(1.0 - 2.0 * z) * PI.sqrt() * gamma(2.0 * z).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 2e-12);
            z *= 1.37;
        }
    }

    #[test]
    fn gamma_recurrence_near_upper_limit() {
        let z = 169.3;
        let a = gamma(z + 1.0).unwrap();
        let b = z * gamma(z).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn ln_gamma_agrees_with_gamma() {
        for &z in &[0.1, 0.5, 1.5, 7.25, 19.9, 20.1, 55.5, 150.0] {
            assert_relative_eq!(ln_gamma(z).unwrap(), gamma(z).unwrap().ln(), max_relative = 1e-12, epsilon = 1e-14);
        }
    }

    #[test]
    fn recip_gamma_poles() {
        assert_eq!(recip_gamma(0.0), 0.0);
        assert_eq!(recip_gamma(-3.0), 0.0);
        assert_relative_eq!(recip_gamma(-0.5), 1.0 / (-2.0 * PI.sqrt()), max_relative = 1e-13);
    }

    #[test]
    fn ml_known_values() {
        assert_relative_eq!(ml1(1.0, 1.0).unwrap(), std::f64::consts::E, max_relative = 1e-14);
        assert_eq!(ml1(0.7, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            ml2(MLParams::new(1.0, 1.0).unwrap(), 2.0).unwrap(),
            2f64.exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ml2(MLParams::new(0.5, 0.5).unwrap(), 0.0).unwrap(),
            1.0 / PI.sqrt(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ml_refuses_large_arguments() {
        assert!(matches!(ml1(0.5, 100.5), Err(Error::ArgumentRange { .. })));
        assert!(matches!(ml1(0.5, -101.0), Err(Error::ArgumentRange { .. })));
        assert!(ml1(1.0, 100.0).is_ok());
    }

    #[test]
    fn ml_overflow_is_reported() {
        // E_{0.3}(100) ~ exp(100^{10/3}) / 0.3
        assert!(matches!(ml1(0.3, 100.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn ml_exp_agreement_on_interval() {
        let mut z = -10.0;
        while z <= 10.0 {
            let got = ml1(1.0, z).unwrap();
            assert!((got - z.exp()).abs() <= 1e-10 * z.abs().exp(), "z={z}");
            z += 0.125;
        }
    }

    #[test]
    fn ml_mu_two_is_cosh() {
        // E_2(z^2) = cosh z
        for &x in &[0.0, 0.3, 1.7, 4.0] {
            assert_relative_eq!(ml1(2.0, x * x).unwrap(), f64::cosh(x), max_relative = 1e-13);
        }
    }
}
