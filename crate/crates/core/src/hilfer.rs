//! Ψ-Hilfer derivative of order μ ∈ (0, 1] and type ν ∈ [0, 1]:
//!
//! ```text
//! D^{μ,ν,Ψ} x = I^{ν(1−μ),Ψ} (1/Ψ′ d/dt) I^{(1−ν)(1−μ),Ψ} x.
//! ```
//!
//! In the variable u = Ψ(t) − Ψ(a) the middle factor is d/du. A weighted input
//! x = u^{−w} z is split into z(a)·u^{−w}, handled by the power rule, and a
//! remainder r that vanishes at a. For r the composition collapses to
//! d/du I^{1−μ} r, evaluated by quadrature and a nonuniform three-point
//! difference in u.

use crate::error::{Error, Result};
use crate::mesh::{extrapolate_to_zero, GridFunction};
use crate::psi::FracOrder;
use crate::quadrature::frac_integral;
use crate::special::{gamma, recip_gamma};

/// Fewest mesh nodes accepted by the derivative.
pub const MIN_DERIVATIVE_NODES: usize = 32;

const ORDER_TOL: f64 = 1e-12;

/// Derivative at `at` of the quadratic through three points.
fn lagrange3_derivative(xs: [f64; 3], ys: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let [y0, y1, y2] = ys;
    y0 * ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2))
        + y1 * ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2))
        + y2 * ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1))
}

/// dy/du on every node: central stencil inside, one-sided at the ends.
fn derivative_in_u(us: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = us.len();
    (0..n)
        .map(|i| {
            let k = i.clamp(1, n - 2) - 1;
            lagrange3_derivative(
                [us[k], us[k + 1], us[k + 2]],
                [ys[k], ys[k + 1], ys[k + 2]],
                us[i],
            )
        })
        .collect()
}

/// z(a)·u^{−w} passed through D^{μ,ν,Ψ}: coef·u^{−μ−w}, returned as
/// (coef, weight). The coefficient vanishes when w equals the inner order.
fn leading_term(ord: FracOrder, w: f64, z0: f64) -> Result<(f64, f64)> {
    let alpha = ord.inner_order();
    if z0 == 0.0 || (alpha - w).abs() < ORDER_TOL {
        return Ok((0.0, 0.0));
    }
    let coef = z0 * gamma(1.0 - w)? * recip_gamma(1.0 - ord.mu() - w);
    let weight = ord.mu() + w;
    if weight >= 1.0 {
        return Err(Error::Precondition(format!(
            "derivative of the leading term behaves like u^-{weight}, outside the weighted spaces"
        )));
    }
    Ok((coef, weight))
}

/// D^{μ,ν,Ψ} x on the mesh of `x`.
///
/// The input weight must not exceed the inner order (1 − ν)(1 − μ). The
/// output weight is chosen so that the result stays finite at a.
pub fn hilfer_derivative(ord: FracOrder, x: &GridFunction) -> Result<GridFunction> {
    let grid = x.grid();
    if grid.len() < MIN_DERIVATIVE_NODES {
        return Err(Error::Resolution {
            n: grid.len(),
            min: MIN_DERIVATIVE_NODES,
        });
    }
    let w = x.weight();
    let alpha = ord.inner_order();
    if w > alpha + ORDER_TOL {
        return Err(Error::Precondition(format!(
            "weight exponent {w} exceeds the inner order {alpha}"
        )));
    }
    let us = grid.u();
    let z = x.values();
    let z0 = z[0];

    // remainder r = x − z0 u^{−w}, a raw function with r(a) = 0
    let r: Vec<f64> = z
        .iter()
        .zip(us)
        .map(|(&zi, &u)| if u > 0.0 { (zi - z0) * u.powf(-w) } else { 0.0 })
        .collect();
    let r = GridFunction::new(grid.clone(), 0.0, r)?;
    // I^β d/du I^α r = d/du I^{1−μ} r because I^α r vanishes at a; the
    // smoother integrand keeps the difference quotients accurate near a.
    let y = if ord.mu() < 1.0 { frac_integral(&r, 1.0 - ord.mu())? } else { r };
    let dy = derivative_in_u(us, y.values());

    // local power of y near a decides whether dy/du needs a weight
    let (y1, y2) = (y.values()[1], y.values()[2]);
    let p_hat = if y1 != 0.0 && y2 != 0.0 && y1.signum() == y2.signum() {
        (y2 / y1).ln() / (us[2] / us[1]).ln()
    } else {
        1.0
    };
    let w_d = (1.0 - p_hat).clamp(0.0, 0.95);
    let mut d: Vec<f64> = dy
        .iter()
        .zip(us)
        .map(|(&v, &u)| if w_d > 0.0 { v * u.powf(w_d) } else { v })
        .collect();
    d[0] = extrapolate_to_zero(us[1], d[1], us[2], d[2]);
    let rem = GridFunction::new(grid.clone(), w_d, d)?;

    let (coef, w_lead) = leading_term(ord, w, z0)?;
    if coef == 0.0 {
        return Ok(rem);
    }
    let lead = GridFunction::new(grid.clone(), w_lead, vec![coef; grid.len()])?;
    lead.add(&rem)
}

/// I^{(1−ν)(1−μ),Ψ} x at t = a, read from the weighted value z(a).
pub fn initial_datum(ord: FracOrder, x: &GridFunction) -> Result<f64> {
    let alpha = ord.inner_order();
    let w = x.weight();
    if w > alpha + ORDER_TOL {
        return Err(Error::Singularity(format!(
            "inner integral is unbounded at a for weight {w} > {alpha}"
        )));
    }
    if (w - alpha).abs() <= ORDER_TOL {
        Ok(x.values()[0] * gamma(1.0 - w)?)
    } else {
        Ok(0.0)
    }
}

/// I^μ D^{μ,ν,Ψ} x − x + R_ε(·, a)·I^{(1−ν)(1−μ),Ψ} x(a), which vanishes for
/// admissible x.
pub fn inversion_defect(ord: FracOrder, x: &GridFunction) -> Result<GridFunction> {
    if x.values().iter().all(|&v| v == 0.0) {
        return Ok(x.clone());
    }
    let d = hilfer_derivative(ord, x)?;
    let back = frac_integral(&d, ord.mu())?;
    let datum = initial_datum(ord, x)?;
    // R_ε·datum in the weighted form u^{1−ε}: the constant datum/Γ(ε)
    let w_r = 1.0 - ord.eps();
    let resolvent_term =
        GridFunction::new(x.grid().clone(), w_r, vec![datum * recip_gamma(ord.eps()); x.len()])?;
    back.sub(x)?.add(&resolvent_term)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PsiGrid;
    use crate::psi::PsiMap;

    fn grid(psi: PsiMap, n: usize, r: f64) -> std::sync::Arc<crate::mesh::PsiGrid> {
        PsiGrid::graded(psi, 0.0, 1.0, n, r).unwrap()
    }

    #[test]
    fn refuses_coarse_mesh() {
        let g = grid(PsiMap::identity(), 16, 1.0);
        let x = GridFunction::from_fn(g, |_| 1.0).unwrap();
        let ord = FracOrder::new(0.5, 1.0).unwrap();
        assert_eq!(
            hilfer_derivative(ord, &x).unwrap_err(),
            Error::Resolution { n: 16, min: MIN_DERIVATIVE_NODES }
        );
    }

    #[test]
    fn caputo_type_kills_constants() {
        let g = grid(PsiMap::exp(), 128, 1.0);
        let x = GridFunction::from_fn(g, |_| 3.0).unwrap();
        let d = hilfer_derivative(FracOrder::new(0.4, 1.0).unwrap(), &x).unwrap();
        for i in 1..d.len() - 1 {
            assert!(d.raw(i).abs() < 1e-4 * 3.0, "node {i}: {}", d.raw(i));
        }
    }

    #[test]
    fn kernel_function_has_zero_derivative() {
        let ord = FracOrder::new(0.5, 0.5).unwrap();
        let w = 1.0 - ord.eps();
        let g = grid(PsiMap::identity(), 256, ord.default_grading());
        // x = u^{ε−1}, stored as z ≡ 1 with weight 1 − ε
        let x = GridFunction::from_weighted_u_fn(g, w, |_| 1.0).unwrap();
        let d = hilfer_derivative(ord, &x).unwrap();
        assert!(d.sup_abs() < 1e-12, "{}", d.sup_abs());
    }

    #[test]
    fn riemann_liouville_derivative_of_power() {
        // ν = 0: D^μ u = u^{1−μ}/Γ(2−μ)
        let mu = 0.5;
        let ord = FracOrder::new(mu, 0.0).unwrap();
        let g = grid(PsiMap::power2(), 512, 2.0);
        let x = GridFunction::from_u_fn(g.clone(), |u| u).unwrap();
        let d = hilfer_derivative(ord, &x).unwrap();
        let exact = 1.0 / gamma(2.0 - mu).unwrap();
        let us = g.u();
        for i in (32..d.len()).step_by(32) {
            let got = d.raw(i);
            let want = exact * us[i].powf(1.0 - mu);
            assert!((got - want).abs() < 1e-3 * want.abs().max(1e-2), "{got} vs {want}");
        }
    }

    #[test]
    fn datum_of_weighted_functions() {
        let ord = FracOrder::new(0.5, 0.5).unwrap();
        let g = grid(PsiMap::identity(), 64, 2.0);
        let x = GridFunction::from_weighted_u_fn(g.clone(), 0.25, |_| 2.0).unwrap();
        let want = 2.0 * gamma(0.75).unwrap();
        assert!((initial_datum(ord, &x).unwrap() - want).abs() < 1e-14);
        let raw = GridFunction::from_fn(g, |_| 1.0).unwrap();
        assert_eq!(initial_datum(ord, &raw).unwrap(), 0.0);
    }

    #[test]
    fn zero_function_has_exactly_zero_defect() {
        let g = grid(PsiMap::identity(), 64, 1.0);
        let x = GridFunction::zeros(g, 0.0);
        let defect = inversion_defect(FracOrder::new(0.5, 0.0).unwrap(), &x).unwrap();
        assert_eq!(defect.sup_abs(), 0.0);
    }
}
