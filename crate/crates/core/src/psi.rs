//! The weight function Ψ and the fractional order triple (μ, ν, ε).

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An increasing map Ψ together with its derivative Ψ′.
#[derive(Clone)]
pub struct PsiMap {
    label: String,
    psi: ScalarFn,
    psi_prime: ScalarFn,
}

impl fmt::Debug for PsiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PsiMap").field("label", &self.label).finish()
    }
}

impl PsiMap {
    /// Ψ(t) = t
    pub fn identity() -> Self {
        Self::custom("identity", |t| t, |_| 1.0)
    }

    /// Ψ(t) = t²
    pub fn power2() -> Self {
        Self::custom("power2", |t| t * t, |t| 2.0 * t)
    }

    /// Ψ(t) = eᵗ
    pub fn exp() -> Self {
        Self::custom("exp", f64::exp, f64::exp)
    }

    /// Ψ(t) = ln(1 + t)
    pub fn log1p() -> Self {
        Self::custom("log1p", f64::ln_1p, |t| 1.0 / (1.0 + t))
    }

    pub fn custom<F, G>(label: impl Into<String>, psi: F, psi_prime: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        PsiMap {
            label: label.into(),
            psi: Arc::new(psi),
            psi_prime: Arc::new(psi_prime),
        }
    }

    /// Looks up one of the built-in maps by label.
    pub fn builtin(label: &str) -> Result<Self> {
        match label {
            "identity" | "t" => Ok(Self::identity()),
            "power2" | "t^2" => Ok(Self::power2()),
            "exp" => Ok(Self::exp()),
            "log1p" | "log" => Ok(Self::log1p()),
            other => Err(Error::domain(format!(
                "unknown psi map '{other}' (expected identity, power2, exp or log1p)"
            ))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.psi)(t)
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        (self.psi_prime)(t)
    }

    /// Checks monotonicity and derivative consistency on the given nodes.
    ///
    /// Ψ′ may vanish at an endpoint (Ψ(t) = t² on [0, b]); it must be positive
    /// at every interior node.
    pub fn validate_on(&self, nodes: &[f64]) -> Result<()> {
        let n = nodes.len();
        for (i, w) in nodes.windows(2).enumerate() {
            let (p0, p1) = (self.eval(w[0]), self.eval(w[1]));
            if !(p1 > p0) || !p0.is_finite() || !p1.is_finite() {
                return Err(Error::domain(format!(
                    "psi '{}' is not strictly increasing between nodes {} and {}",
                    self.label,
                    i,
                    i + 1
                )));
            }
        }
        for (i, &t) in nodes.iter().enumerate() {
            let d = self.derivative(t);
            let interior = i > 0 && i + 1 < n;
            if !d.is_finite() || d < 0.0 || (interior && d <= 0.0) {
                return Err(Error::domain(format!(
                    "psi' of '{}' is not positive at t = {t}",
                    self.label
                )));
            }
        }
        // central-difference consistency at a handful of interior points
        if n >= 3 {
            let (a, b) = (nodes[0], nodes[n - 1]);
            for k in 1..8 {
                let t = a + (b - a) * k as f64 / 8.0;
                let h = 1e-5 * (b - a);
                let fd = (self.eval(t + h) - self.eval(t - h)) / (2.0 * h);
                let d = self.derivative(t);
                if (fd - d).abs() > 1e-6 * d.abs().max(1e-12) + 1e-9 {
                    return Err(Error::domain(format!(
                        "psi' of '{}' disagrees with a finite difference at t = {t}: {d} vs {fd}",
                        self.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Order μ ∈ (0, 1], type ν ∈ [0, 1] and ε = μ + ν(1 − μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder {
    mu: f64,
    nu: f64,
    eps: f64,
}

impl FracOrder {
    pub fn new(mu: f64, nu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::domain(format!("order mu must lie in (0, 1], got {mu}")));
        }
        if !(0.0..=1.0).contains(&nu) {
            return Err(Error::domain(format!("type nu must lie in [0, 1], got {nu}")));
        }
        let eps = if mu == 1.0 || nu == 1.0 {
            1.0
        } else {
            mu + nu * (1.0 - mu)
        };
        Ok(FracOrder { mu, nu, eps })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// (1 − ν)(1 − μ) = 1 − ε, the order of the inner integral.
    pub fn inner_order(&self) -> f64 {
        (1.0 - self.nu) * (1.0 - self.mu)
    }

    /// ν(1 − μ), the order of the outer integral.
    pub fn outer_order(&self) -> f64 {
        self.nu * (1.0 - self.mu)
    }

    /// Default grading exponent: 2/ε for ε < 1, capped at 4; 1 otherwise.
    pub fn default_grading(&self) -> f64 {
        if self.eps < 1.0 {
            (2.0 / self.eps).min(4.0)
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_is_exactly_one_for_caputo_and_integer_order() {
        assert_eq!(FracOrder::new(0.3, 1.0).unwrap().eps(), 1.0);
        assert_eq!(FracOrder::new(1.0, 0.4).unwrap().eps(), 1.0);
        let o = FracOrder::new(0.5, 0.5).unwrap();
        assert!((o.eps() - 0.75).abs() < 1e-15);
        assert!((o.inner_order() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn order_bounds() {
        assert!(FracOrder::new(0.0, 0.5).is_err());
        assert!(FracOrder::new(1.2, 0.5).is_err());
        assert!(FracOrder::new(0.5, -0.1).is_err());
        assert!(FracOrder::new(0.5, 1.1).is_err());
    }

    #[test]
    fn grading_default() {
        assert_eq!(FracOrder::new(0.5, 1.0).unwrap().default_grading(), 1.0);
        assert_eq!(FracOrder::new(0.5, 0.0).unwrap().default_grading(), 4.0);
        let r = FracOrder::new(0.5, 0.5).unwrap().default_grading();
        assert!((r - 2.0 / 0.75).abs() < 1e-12);
    }

    #[test]
    fn builtins_validate() {
        let nodes: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
        for label in ["identity", "power2", "exp", "log1p"] {
            PsiMap::builtin(label).unwrap().validate_on(&nodes).unwrap();
        }
        assert!(PsiMap::builtin("cube").is_err());
    }

    #[test]
    fn validation_catches_bad_maps() {
        let nodes: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        let decreasing = PsiMap::custom("neg", |t| -t, |_| -1.0);
        assert!(decreasing.validate_on(&nodes).is_err());
        let wrong_derivative = PsiMap::custom("bad", |t| t * t, |_| 1.0);
        assert!(wrong_derivative.validate_on(&nodes).is_err());
    }
}
