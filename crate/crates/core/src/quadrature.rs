//! Ψ-Riemann-Liouville fractional integral by product integration.
//!
//! With u = Ψ(s) − Ψ(a) the integral becomes a classical Riemann-Liouville
//! integral in u:
//!
//! ```text
//! I^{μ,Ψ} x(t) = 1/Γ(μ) ∫_0^{U} (U − u)^{μ−1} x(u) du,   U = Ψ(t) − Ψ(a).
//! ```
//!
//! The integrand is interpolated piecewise linearly in u and every panel is
//! integrated against (U − u)^{μ−1} in closed form. For a weighted function
//! x = u^{−w} z, panels that are wide relative to their distance from u = 0
//! keep u^{−w} exact and interpolate z; the remaining panels interpolate the
//! raw values.

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, PsiGrid};
use crate::psi::{FracOrder, PsiMap};
use crate::special::{beta, gamma, recip_gamma};
use rayon::prelude::*;
use std::sync::Arc;

/// G^μ_Ψ(t, s) = Ψ′(s)(Ψ(t) − Ψ(s))^{μ−1} for s < t.
pub fn kernel(psi: &PsiMap, mu: f64, t: f64, s: f64) -> Result<f64> {
    if !(s < t) {
        return Err(Error::domain(format!("kernel needs s < t, got s = {s}, t = {t}")));
    }
    let d = psi.eval(t) - psi.eval(s);
    if !(d > 0.0) {
        return Err(Error::domain(format!("psi(t) - psi(s) = {d} is not positive")));
    }
    Ok(psi.derivative(s) * d.powf(mu - 1.0))
}

/// R^Ψ_ε(t, a) = (Ψ(t) − Ψ(a))^{ε−1}/Γ(ε).
pub fn resolvent(psi: &PsiMap, ord: FracOrder, t: f64, a: f64) -> Result<f64> {
    let eps = ord.eps();
    if t < a {
        return Err(Error::domain(format!("resolvent needs t >= a, got t = {t} < a = {a}")));
    }
    if eps == 1.0 {
        return Ok(1.0);
    }
    let d = psi.eval(t) - psi.eval(a);
    if !(d > 0.0) {
        return Err(Error::Singularity(format!(
            "resolvent is unbounded at t = a for eps = {eps}; use the weighted representation"
        )));
    }
    Ok(d.powf(eps - 1.0) / gamma(eps)?)
}

/// A^p − B^p for A ≥ B ≥ 0, accurate when B is close to A.
fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return a.powf(p);
    }
    a.powf(p) * -f64::exp_m1(p * f64::ln_1p(-(a - b) / a))
}

/// Weights of the linear hat functions of panel [u_k, u_k + h], integrated
/// against (U − u)^{μ−1} from u_k up to min(u_k + h, U).
fn panel_weights(mu: f64, a_dist: f64, h: f64) -> (f64, f64) {
    let b_dist = (a_dist - h).max(0.0);
    let m0 = pow_diff(a_dist, b_dist, mu) / mu;
    let m1 = a_dist * m0 - pow_diff(a_dist, b_dist, mu + 1.0) / (mu + 1.0);
    (m0 - m1 / h, m1 / h)
}

/// Sum of c_m r^m / (m + shift) with c_0 = 1, c_{m+1} = c_m (m + g)/(m + 1),
/// i.e. the binomial series of (1 − r)^{−g} integrated against a power.
fn binomial_power_series(g: f64, r: f64, shift: f64) -> f64 {
    let mut c = 1.0;
    let mut rm = 1.0;
    let mut sum = 0.0;
    for m in 0..5000 {
        let mf = m as f64;
        let term = c * rm / (mf + shift);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() && m > 2 {
            break;
        }
        c *= (mf + g) / (mf + 1.0);
        rm *= r;
    }
    sum
}

/// ∫_0^{min(x, U)} (U − u)^{μ−1} u^{p} du for p > −1.
fn power_moment_to(mu: f64, p: f64, x: f64, big_u: f64) -> f64 {
    if x >= big_u {
        return big_u.powf(mu + p) * beta(p + 1.0, mu).expect("positive beta arguments");
    }
    let ratio = x / big_u;
    if ratio <= 0.9 {
        // (U − u)^{μ−1} = U^{μ−1} Σ (1−μ)_m/m! (u/U)^m
        big_u.powf(mu - 1.0) * x.powf(p + 1.0) * binomial_power_series(1.0 - mu, ratio, p + 1.0)
    } else {
        // ∫_0^U minus the short tail ∫_x^U, expanding u^p around U
        let whole = big_u.powf(mu + p) * beta(p + 1.0, mu).expect("positive beta arguments");
        let d = big_u - x;
        let tail = big_u.powf(p) * d.powf(mu) * binomial_power_series(-p, d / big_u, mu);
        whole - tail
    }
}

/// Panels whose relative width h/u_k exceeds this keep u^{−w} exact.
const SINGULAR_PANEL_RATIO: f64 = 0.02;

/// Quadrature weights for I^μ at the point u = `big_u`, acting on the
/// weighted values z_0..z_m of a function with weight exponent `w`.
/// Includes the 1/Γ(μ) factor.
pub(crate) fn row_weights(us: &[f64], mu: f64, w: f64, big_u: f64) -> Vec<f64> {
    if big_u <= 0.0 {
        return vec![0.0];
    }
    // first node index with u_m >= U
    let m = us.partition_point(|&u| u < big_u).min(us.len() - 1);
    let mut raw = vec![0.0; m + 1];
    let mut zw = vec![0.0; m + 1];

    if w == 0.0 {
        for k in 0..m {
            let (l, r) = panel_weights(mu, big_u - us[k], us[k + 1] - us[k]);
            raw[k] += l;
            raw[k + 1] += r;
        }
    } else {
        // cumulative moments F_p(x) = ∫_0^x (U−u)^{μ−1} u^p du
        let (p0, p1) = (-w, 1.0 - w);
        let mut f0_prev = 0.0;
        let mut f1_prev = 0.0;
        let mut exact = true;
        for k in 0..m {
            let (uk, uk1) = (us[k], us[k + 1]);
            let h = uk1 - uk;
            if exact && k > 0 && h < SINGULAR_PANEL_RATIO * uk {
                exact = false;
            }
            if exact {
                let f0 = power_moment_to(mu, p0, uk1, big_u);
                let f1 = power_moment_to(mu, p1, uk1, big_u);
                let m0 = f0 - f0_prev;
                // ∫ (U−u)^{μ−1} u^{−w} (u − u_k) du
                let m1 = (f1 - f1_prev) - uk * m0;
                zw[k] += m0 - m1 / h;
                zw[k + 1] += m1 / h;
                f0_prev = f0;
                f1_prev = f1;
            } else {
                let (l, r) = panel_weights(mu, big_u - uk, h);
                raw[k] += l;
                raw[k + 1] += r;
            }
        }
    }

    let scale = recip_gamma(mu);
    (0..=m)
        .map(|k| {
            let conv = if w == 0.0 || k == 0 { 1.0 } else { us[k].powf(-w) };
            (zw[k] + raw[k] * conv) * scale
        })
        .collect()
}

/// Precomputed lower-triangular product-integration weights for I^μ at all
/// mesh nodes, for integrands stored with weight exponent `weight`.
#[derive(Debug, Clone)]
pub struct ProductRule {
    grid: Arc<PsiGrid>,
    mu: f64,
    weight: f64,
    rows: Vec<Vec<f64>>,
}

impl ProductRule {
    pub fn new(grid: Arc<PsiGrid>, mu: f64, weight: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::domain(format!("integral order must lie in (0, 1], got {mu}")));
        }
        if !(0.0..1.0).contains(&weight) {
            return Err(Error::domain(format!("weight exponent must lie in [0, 1), got {weight}")));
        }
        let us = grid.u();
        let rows = (0..grid.len())
            .into_par_iter()
            .map(|j| if j == 0 { Vec::new() } else { row_weights(us, mu, weight, us[j]) })
            .collect();
        Ok(ProductRule { grid, mu, weight, rows })
    }

    pub fn grid(&self) -> &Arc<PsiGrid> {
        &self.grid
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Weights of row j (length j + 1, empty for j = 0).
    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    /// Raw values of I^μ at node j for the weighted samples `z` (only
    /// z_0..z_j are read). Node 0 yields 0.
    pub fn apply_at(&self, z: &[f64], j: usize) -> f64 {
        self.rows[j].iter().zip(z).map(|(w, v)| w * v).sum()
    }

    /// Raw values of I^μ at every node.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        (0..self.rows.len()).map(|j| self.apply_at(z, j)).collect()
    }
}

/// Weight exponent of I^μ x when x carries weight `w`.
pub fn integral_output_weight(w: f64, mu: f64) -> f64 {
    (w - mu).max(0.0)
}

/// Limit of u^{w_out} I^μ x at u → 0 for x = z_0 u^{−w} + …
fn integral_start_value(z0: f64, w: f64, mu: f64) -> f64 {
    if w + 1e-12 >= mu {
        z0 * gamma(1.0 - w).expect("w < 1") * recip_gamma(1.0 - w + mu)
    } else {
        0.0
    }
}

/// I^{μ,Ψ} x on every node, with a precomputed rule.
pub fn frac_integral_with(rule: &ProductRule, x: &GridFunction) -> Result<GridFunction> {
    if !rule.grid().same_as(x.grid()) {
        return Err(Error::MeshMismatch);
    }
    if (rule.weight() - x.weight()).abs() > 1e-15 {
        return Err(Error::domain("product rule weight does not match the grid function"));
    }
    let mu = rule.mu();
    let w = x.weight();
    let w_out = integral_output_weight(w, mu);
    let us = x.grid().u();
    let z = x.values();
    let mut values: Vec<f64> = (0..x.len())
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                0.0
            } else {
                let raw = rule.apply_at(z, j);
                if w_out > 0.0 { raw * us[j].powf(w_out) } else { raw }
            }
        })
        .collect();
    values[0] = integral_start_value(z[0], w, mu);
    GridFunction::new(x.grid().clone(), w_out, values)
}

/// I^{μ,Ψ} x on every node. The result carries weight max(w − μ, 0).
pub fn frac_integral(x: &GridFunction, mu: f64) -> Result<GridFunction> {
    if mu == 0.0 {
        return Ok(x.clone());
    }
    let rule = ProductRule::new(x.grid().clone(), mu, x.weight())?;
    frac_integral_with(&rule, x)
}

/// I^{μ,Ψ} x at a single point t ∈ [a, b] (raw value).
///
/// Points between nodes are handled by integrating the last panel up to t.
pub fn frac_integral_at(x: &GridFunction, mu: f64, t: f64) -> Result<f64> {
    let grid = x.grid();
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::domain(format!("integral order must lie in (0, 1], got {mu}")));
    }
    if !(t >= grid.a() && t <= grid.b()) {
        return Err(Error::domain(format!(
            "t = {t} outside the mesh interval [{}, {}]",
            grid.a(),
            grid.b()
        )));
    }
    let big_u = match grid.mesh().node_index(t) {
        Some(j) => grid.u()[j],
        None => grid.u_of(t),
    };
    if big_u == 0.0 {
        let w = x.weight();
        return if w + 1e-12 < mu {
            Ok(0.0)
        } else if (w - mu).abs() <= 1e-12 {
            Ok(integral_start_value(x.values()[0], w, mu))
        } else {
            Err(Error::Singularity("fractional integral is unbounded at t = a".into()))
        };
    }
    let weights = row_weights(grid.u(), mu, x.weight(), big_u);
    Ok(weights.iter().zip(x.values()).map(|(w, v)| w * v).sum())
}
