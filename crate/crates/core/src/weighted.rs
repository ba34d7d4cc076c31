//! Mittag-Leffler weighted sup norms ‖x‖ = sup |x(t)| / E_μ(ξ(Ψ(t) − Ψ(a))^μ),
//! taken over mesh nodes.

use crate::error::{Error, Result};
use crate::mesh::GridFunction;
use crate::psi::PsiMap;
use crate::special::ml1;

#[derive(Debug, Clone)]
pub struct BieleckiWeight {
    xi: f64,
    mu: f64,
    psi: PsiMap,
    a: f64,
}

impl BieleckiWeight {
    pub fn new(xi: f64, mu: f64, psi: PsiMap, a: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::domain(format!("xi must be positive, got {xi}")));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::domain(format!("mu must lie in (0, 1], got {mu}")));
        }
        Ok(BieleckiWeight { xi, mu, psi, a })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// E_μ(ξ u^μ) for u = Ψ(t) − Ψ(a) ≥ 0. Saturates to +∞ beyond the
    /// range of f64, where the weight only ever divides.
    pub fn at_u(&self, u: f64) -> Result<f64> {
        if u <= 0.0 {
            return Ok(1.0);
        }
        if self.mu == 1.0 {
            return Ok((self.xi * u).exp());
        }
        match ml1(self.mu, self.xi * u.powf(self.mu)) {
            Err(Error::Overflow(_)) | Err(Error::ArgumentRange { .. }) => Ok(f64::INFINITY),
            other => other,
        }
    }

    pub fn at(&self, t: f64) -> Result<f64> {
        self.at_u(self.psi.eval(t) - self.psi.eval(self.a))
    }
}

/// Which textbook weight to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Ψ = identity, E_μ(ξ(t − a)^μ).
    PsiIdentity,
    /// Ψ = identity, μ = 1: exp(ξ(t − a)).
    ClassicalBielecki,
}

pub fn special_case_weight(kind: WeightKind, xi: f64, mu: f64, a: f64) -> Result<BieleckiWeight> {
    match kind {
        WeightKind::PsiIdentity => BieleckiWeight::new(xi, mu, PsiMap::identity(), a),
        WeightKind::ClassicalBielecki => BieleckiWeight::new(xi, 1.0, PsiMap::identity(), a),
    }
}

/// Weight values at every node of the grid of `x`, validated against `w`.
pub fn node_weights(w: &BieleckiWeight, x: &GridFunction) -> Result<Vec<f64>> {
    let grid = x.grid();
    if (grid.a() - w.a()).abs() > 1e-14 * (1.0 + w.a().abs()) {
        return Err(Error::domain(format!(
            "weight anchored at {} but the mesh starts at {}",
            w.a(),
            grid.a()
        )));
    }
    grid.u().iter().map(|&u| w.at_u(u)).collect()
}

/// max_i |x(t_i)| / E_μ(ξ u_i^μ). At t = a a weighted function contributes
/// its weighted limit z(a).
pub fn bielecki_norm(w: &BieleckiWeight, x: &GridFunction) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::domain("empty mesh"));
    }
    let e = node_weights(w, x)?;
    Ok(norm_with(&e, x))
}

pub(crate) fn norm_with(e: &[f64], x: &GridFunction) -> f64 {
    (0..x.len()).fold(0.0, |m, i| {
        let v = if i == 0 { x.values()[0] } else { x.raw(i) };
        m.max(v.abs() / e[i])
    })
}

pub fn bielecki_metric(w: &BieleckiWeight, x: &GridFunction, y: &GridFunction) -> Result<f64> {
    bielecki_norm(w, &x.sub(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PsiGrid;

    #[test]
    fn constant_one_has_unit_norm() {
        let g = PsiGrid::graded(PsiMap::exp(), 0.0, 1.0, 33, 1.0).unwrap();
        let w = BieleckiWeight::new(2.0, 0.5, PsiMap::exp(), 0.0).unwrap();
        let one = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert_eq!(bielecki_norm(&w, &one).unwrap(), 1.0);
    }

    #[test]
    fn weight_itself_has_unit_norm() {
        let g = PsiGrid::graded(PsiMap::power2(), 0.0, 1.0, 65, 1.0).unwrap();
        let w = BieleckiWeight::new(1.5, 0.7, PsiMap::power2(), 0.0).unwrap();
        let x = GridFunction::from_u_fn(g, |u| ml1(0.7, 1.5 * u.powf(0.7)).unwrap()).unwrap();
        assert!((bielecki_norm(&w, &x).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn classical_weight_is_exponential() {
        let w = special_case_weight(WeightKind::ClassicalBielecki, 1.0, 0.3, 0.0).unwrap();
        assert!((w.at(0.7).unwrap() - 0.7f64.exp()).abs() < 1e-14);
        let w1 = special_case_weight(WeightKind::PsiIdentity, 1.0, 1.0, 0.0).unwrap();
        assert!((w1.at(0.7).unwrap() - 0.7f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn weighted_functions_use_the_limit_at_a() {
        let g = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 17, 2.0).unwrap();
        let w = BieleckiWeight::new(1.0, 0.5, PsiMap::identity(), 0.0).unwrap();
        // z = 3 at a, raw values u^{-0.25}·3 elsewhere exceed 3
        let x = GridFunction::from_weighted_u_fn(g, 0.25, |_| 3.0).unwrap();
        let n = bielecki_norm(&w, &x).unwrap();
        assert!(n >= 3.0 && n.is_finite());
    }

    #[test]
    fn huge_weights_saturate() {
        let g = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 1001, 1.0).unwrap();
        let w = BieleckiWeight::new(50.0, 0.5, PsiMap::identity(), 0.0).unwrap();
        assert_eq!(w.at(1.0).unwrap(), f64::INFINITY);
        let x = GridFunction::from_fn(g.clone(), |t| t).unwrap();
        let oracle = g
            .u()
            .iter()
            .map(|&u| u / w.at_u(u).unwrap())
            .fold(0.0, f64::max);
        let n = bielecki_norm(&w, &x).unwrap();
        assert!(n > 0.0 && n.is_finite());
        assert_eq!(n, oracle);
    }

    #[test]
    fn mismatched_anchor_is_rejected() {
        let g = PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, 9, 1.0).unwrap();
        let w = BieleckiWeight::new(1.0, 0.5, PsiMap::identity(), 0.5).unwrap();
        let x = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert!(bielecki_norm(&w, &x).is_err());
        assert!(BieleckiWeight::new(0.0, 0.5, PsiMap::identity(), 0.0).is_err());
    }
}
