//! Picard iteration for
//!
//! ```text
//! x = R_ε(·, a) x₀ + I^{μ,Ψ} 𝒰(x) + I^{μ,Ψ} f(·, x)
//! ```
//!
//! carried out on the weighted function z = u^{1−ε} x, so that z(a) = x₀/Γ(ε).

use crate::error::{Error, Result};
use crate::mesh::{GridFunction, PsiGrid};
use crate::psi::{FracOrder, PsiMap};
use crate::quadrature::ProductRule;
use crate::special::{gamma, recip_gamma};
use crate::volterra::{RhsFunction, VolterraOperator, ZeroOperator};
use crate::weighted::{norm_with, BieleckiWeight};
use serde::Serialize;
use std::sync::Arc;

/// Initial value problem for D^{μ,ν,Ψ} x = 𝒰(x) + f(t, x) with
/// I^{1−ε,Ψ} x(a) = x₀.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub psi: PsiMap,
    pub ord: FracOrder,
    pub a: f64,
    pub b: f64,
    pub x0: f64,
    pub f: RhsFunction,
    pub op: Arc<dyn VolterraOperator>,
    pub xi: f64,
}

impl ProblemSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        psi: PsiMap,
        ord: FracOrder,
        a: f64,
        b: f64,
        x0: f64,
        f: RhsFunction,
        op: Arc<dyn VolterraOperator>,
        xi: f64,
    ) -> Result<Self> {
        if !(b > a) {
            return Err(Error::domain(format!("need b > a, got [{a}, {b}]")));
        }
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::domain(format!("xi must be positive, got {xi}")));
        }
        if !x0.is_finite() {
            return Err(Error::domain("initial datum must be finite"));
        }
        Ok(ProblemSpec { psi, ord, a, b, x0, f, op, xi })
    }

    /// 𝒰 ≡ 0.
    pub fn without_operator(psi: PsiMap, ord: FracOrder, a: f64, b: f64, x0: f64, f: RhsFunction, xi: f64) -> Result<Self> {
        Self::new(psi, ord, a, b, x0, f, Arc::new(ZeroOperator), xi)
    }

    pub fn with_x0(&self, x0: f64) -> Self {
        ProblemSpec { x0, ..self.clone() }
    }

    pub fn with_f(&self, f: RhsFunction) -> Self {
        ProblemSpec { f, ..self.clone() }
    }

    pub fn with_op(&self, op: Arc<dyn VolterraOperator>) -> Self {
        ProblemSpec { op, ..self.clone() }
    }

    pub fn span(&self) -> f64 {
        self.psi.eval(self.b) - self.psi.eval(self.a)
    }

    /// L_f + L_𝒰.
    pub fn lipschitz_sum(&self) -> f64 {
        self.f.lipschitz() + self.op.lipschitz(self.xi)
    }

    /// ξ > L_f + L_𝒰.
    pub fn preconditions_hold(&self) -> bool {
        self.xi > self.lipschitz_sum()
    }

    pub fn weight(&self) -> Result<BieleckiWeight> {
        BieleckiWeight::new(self.xi, self.ord.mu(), self.psi.clone(), self.a)
    }

    /// Weight exponent 1 − ε of the solver's representation.
    pub fn weight_exponent(&self) -> f64 {
        1.0 - self.ord.eps()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionFactors {
    /// ((L_f + L_𝒰)/ξ)(1 − 1/E_μ(ξ(Ψ(b) − Ψ(a))^μ))
    pub refined: f64,
    /// (L_f + L_𝒰)/ξ
    pub coarse: f64,
}

pub fn contraction_factor(p: &ProblemSpec) -> Result<ContractionFactors> {
    if !(p.xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {}", p.xi)));
    }
    let coarse = p.lipschitz_sum() / p.xi;
    let e_b = p.weight()?.at_u(p.span())?;
    Ok(ContractionFactors {
        refined: coarse * (1.0 - 1.0 / e_b),
        coarse,
    })
}

/// c = (1 − (L_f + L_𝒰)/ξ)^{−1}.
pub fn c_constant(p: &ProblemSpec) -> Result<f64> {
    let coarse = p.lipschitz_sum() / p.xi;
    if !(coarse < 1.0) {
        return Err(Error::Precondition(format!(
            "xi = {} does not exceed L_f + L_U = {}",
            p.xi,
            p.lipschitz_sum()
        )));
    }
    Ok(1.0 / (1.0 - coarse))
}

/// Which integral operator the iteration applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IterationMap {
    /// Datum pinned to x₀.
    #[default]
    Theta,
    /// Datum read from the iterate.
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub map: IterationMap,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 200,
            map: IterationMap::Theta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub iterates: usize,
    pub converged: bool,
    pub q_theoretical: f64,
    pub q_coarse: f64,
    pub q_empirical: Vec<f64>,
    pub c_constant: Option<f64>,
    /// d(start, Θ start)
    pub first_step: f64,
    /// d(x_k, x_{k−1}) at termination
    pub last_step: f64,
    /// q/(1 − q)·d(x_k, x_{k−1})
    pub apost_bound: f64,
    /// d(x_k, Θ x_k)
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// A problem bound to a mesh, with the quadrature and metric weights built once.
#[derive(Debug, Clone)]
pub struct PicardSolver {
    spec: ProblemSpec,
    grid: Arc<PsiGrid>,
    rule: ProductRule,
    e: Vec<f64>,
    u_delta: f64,
}

impl PicardSolver {
    pub fn new(spec: ProblemSpec, n: usize, grading: f64) -> Result<Self> {
        let grid = PsiGrid::graded(spec.psi.clone(), spec.a, spec.b, n, grading)?;
        Self::on_grid(spec, grid)
    }

    /// Uses the default grading for the problem's order.
    pub fn with_default_grading(spec: ProblemSpec, n: usize) -> Result<Self> {
        let r = spec.ord.default_grading();
        Self::new(spec, n, r)
    }

    pub fn on_grid(spec: ProblemSpec, grid: Arc<PsiGrid>) -> Result<Self> {
        if grid.psi().label() != spec.psi.label()
            || grid.a() != spec.a
            || grid.b() != spec.b
        {
            return Err(Error::domain("grid does not match the problem's psi and interval"));
        }
        let rule = ProductRule::new(grid.clone(), spec.ord.mu(), spec.weight_exponent())?;
        let w = spec.weight()?;
        let e = grid.u().iter().map(|&u| w.at_u(u)).collect::<Result<Vec<f64>>>()?;
        let u_delta = grid.u()[1] * 1e-10;
        Ok(PicardSolver { spec, grid, rule, e, u_delta })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Arc<PsiGrid> {
        &self.grid
    }

    pub fn norm(&self, x: &GridFunction) -> Result<f64> {
        if !x.grid().same_as(&self.grid) {
            return Err(Error::MeshMismatch);
        }
        Ok(norm_with(&self.e, x))
    }

    pub fn metric(&self, x: &GridFunction, y: &GridFunction) -> Result<f64> {
        self.norm(&x.sub(y)?)
    }

    /// z ≡ x₀/Γ(ε): the resolvent term alone.
    pub fn resolvent_start(&self) -> GridFunction {
        let z = self.spec.x0 * recip_gamma(self.spec.ord.eps());
        GridFunction::new(self.grid.clone(), self.spec.weight_exponent(), vec![z; self.grid.len()])
            .expect("finite start")
    }

    /// Start with an arbitrary weighted datum z(a).
    pub fn constant_start(&self, z: f64) -> Result<GridFunction> {
        GridFunction::new(self.grid.clone(), self.spec.weight_exponent(), vec![z; self.grid.len()])
    }

    fn prepare(&self, x: &GridFunction) -> Result<GridFunction> {
        if !x.grid().same_as(&self.grid) {
            return Err(Error::MeshMismatch);
        }
        x.reweight(self.spec.weight_exponent())
    }

    /// Weighted integrand u^w (𝒰(x) + f(·, x)).
    fn integrand(&self, x: &GridFunction) -> Result<Vec<f64>> {
        let w = x.weight();
        let us = self.grid.u();
        let ts = self.grid.nodes();
        let ux = self.spec.op.apply(x)?;
        let f = &self.spec.f;
        let z0 = x.values()[0];
        let values = (0..x.len())
            .map(|k| {
                let fz = if w == 0.0 {
                    f.eval(ts[k], x.values()[k])
                } else if k == 0 {
                    // limit of u^w f(a, z0 u^{−w}) as u → 0
                    let ud = self.u_delta;
                    ud.powf(w) * f.eval(ts[0], z0 * ud.powf(-w))
                } else {
                    us[k].powf(w) * f.eval(ts[k], x.raw(k))
                };
                fz + ux.values()[k]
            })
            .collect();
        Ok(values)
    }

    fn apply_with_datum(&self, x: &GridFunction, z_a: f64) -> Result<GridFunction> {
        let x = self.prepare(x)?;
        let w = x.weight();
        let g = self.integrand(&x)?;
        let us = self.grid.u();
        let values = (0..x.len())
            .map(|j| {
                if j == 0 {
                    z_a
                } else {
                    let raw = self.rule.apply_at(&g, j);
                    z_a + if w == 0.0 { raw } else { raw * us[j].powf(w) }
                }
            })
            .collect();
        GridFunction::new(self.grid.clone(), w, values)
    }

    /// Θ_f x: datum pinned to x₀.
    pub fn theta_apply(&self, x: &GridFunction) -> Result<GridFunction> {
        self.apply_with_datum(x, self.spec.x0 * recip_gamma(self.spec.ord.eps()))
    }

    /// Φ_f x: datum I^{1−ε}x(a) = Γ(ε) z(a) read from x.
    pub fn phi_apply(&self, x: &GridFunction) -> Result<GridFunction> {
        let x = self.prepare(x)?;
        let z_a = x.values()[0];
        self.apply_with_datum(&x, z_a)
    }

    pub fn apply_map(&self, map: IterationMap, x: &GridFunction) -> Result<GridFunction> {
        match map {
            IterationMap::Theta => self.theta_apply(x),
            IterationMap::Phi => self.phi_apply(x),
        }
    }

    pub fn solve(&self, start: &GridFunction, opts: SolverOptions) -> Result<(GridFunction, SolverReport)> {
        let factors = contraction_factor(&self.spec)?;
        let c = c_constant(&self.spec).ok();
        let mut warnings = Vec::new();
        if !self.spec.preconditions_hold() {
            warnings.push(format!(
                "C2: xi = {} does not exceed L_f + L_U = {}; convergence is not guaranteed",
                self.spec.xi,
                self.spec.lipschitz_sum()
            ));
        }
        let mut x = self.prepare(start)?;
        let mut ratios = Vec::new();
        let mut prev_step = f64::NAN;
        let mut first_step = f64::NAN;
        let mut step = f64::INFINITY;
        let mut iterates = 0;
        let mut converged = false;
        while iterates < opts.max_iter {
            let next = self.apply_map(opts.map, &x)?;
            step = self.metric(&next, &x)?;
            iterates += 1;
            if iterates == 1 {
                first_step = step;
            } else if prev_step > 0.0 {
                ratios.push(step / prev_step);
            }
            x = next;
            prev_step = step;
            if step <= opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            warnings.push(format!(
                "no convergence after {iterates} iterations (last step {step:e})"
            ));
        }
        let residual = self.metric(&x, &self.apply_map(opts.map, &x)?)?;
        let q = factors.refined;
        let apost = if q < 1.0 { q / (1.0 - q) * step } else { f64::INFINITY };
        let report = SolverReport {
            iterates,
            converged,
            q_theoretical: q,
            q_coarse: factors.coarse,
            q_empirical: ratios,
            c_constant: c,
            first_step,
            last_step: step,
            apost_bound: apost,
            residual,
            warnings,
        };
        Ok((x, report))
    }
}

/// Solves `p` on an n-node mesh with the default grading, starting from the
/// resolvent function.
pub fn picard_solve(p: &ProblemSpec, n: usize, opts: SolverOptions) -> Result<(GridFunction, SolverReport)> {
    let solver = PicardSolver::with_default_grading(p.clone(), n)?;
    let start = solver.resolvent_start();
    solver.solve(&start, opts)
}

/// Γ(ε)·z(a), the datum I^{1−ε}x(a) of a solver iterate.
pub fn iterate_datum(p: &ProblemSpec, x: &GridFunction) -> Result<f64> {
    Ok(gamma(p.ord.eps())? * x.reweight(p.weight_exponent())?.values()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ml1;
    use crate::volterra::PointwiseOperator;

    fn caputo(mu: f64, f: RhsFunction) -> ProblemSpec {
        ProblemSpec::without_operator(PsiMap::identity(), FracOrder::new(mu, 1.0).unwrap(), 0.0, 1.0, 1.0, f, 4.0)
            .unwrap()
    }

    #[test]
    fn factors_and_constant() {
        let p = ProblemSpec::new(
            PsiMap::identity(),
            FracOrder::new(0.5, 1.0).unwrap(),
            0.0,
            1.0,
            1.0,
            RhsFunction::linear(0.5),
            Arc::new(PointwiseOperator(0.3)),
            2.0,
        )
        .unwrap();
        let q = contraction_factor(&p).unwrap();
        assert!((q.coarse - 0.4).abs() < 1e-15);
        let e2 = ml1(0.5, 2.0).unwrap();
        assert!((q.refined - 0.4 * (1.0 - 1.0 / e2)).abs() < 1e-15);
        assert!((c_constant(&p).unwrap() - 5.0 / 3.0).abs() < 1e-14);
        let bad = ProblemSpec { xi: 0.7, ..p };
        assert!(matches!(c_constant(&bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_dynamics_converge_in_one_step() {
        let p = ProblemSpec::without_operator(
            PsiMap::exp(),
            FracOrder::new(0.5, 0.5).unwrap(),
            0.0,
            1.0,
            2.0,
            RhsFunction::zero(),
            1.0,
        )
        .unwrap();
        let (x, r) = picard_solve(&p, 64, SolverOptions::default()).unwrap();
        assert_eq!(r.iterates, 1);
        let z = 2.0 / gamma(0.75).unwrap();
        assert!(x.values().iter().all(|&v| (v - z).abs() < 1e-15));
    }

    #[test]
    fn ordinary_integration() {
        let p = ProblemSpec::without_operator(
            PsiMap::identity(),
            FracOrder::new(1.0, 1.0).unwrap(),
            0.0,
            1.0,
            0.5,
            RhsFunction::constant(1.0),
            1.0,
        )
        .unwrap();
        let solver = PicardSolver::new(p, 33, 1.0).unwrap();
        let x = solver.theta_apply(&solver.resolvent_start()).unwrap();
        for (i, &t) in solver.grid().nodes().iter().enumerate() {
            assert!((x.values()[i] - (0.5 + t)).abs() < 1e-14);
        }
    }

    #[test]
    fn caputo_eigenfunction() {
        let (x, r) = picard_solve(&caputo(0.5, RhsFunction::linear(0.8)), 512, SolverOptions::default()).unwrap();
        assert!(r.converged);
        let exact = ml1(0.5, 0.8).unwrap();
        let got = x.raw(x.len() - 1);
        assert!((got - exact).abs() < 5e-3 * exact, "{got} vs {exact}");
    }

    #[test]
    fn theta_and_phi_agree_on_the_datum_class() {
        let p = ProblemSpec::without_operator(
            PsiMap::log1p(),
            FracOrder::new(0.6, 0.3).unwrap(),
            0.0,
            1.0,
            1.5,
            RhsFunction::linear(0.7),
            3.0,
        )
        .unwrap();
        let solver = PicardSolver::with_default_grading(p.clone(), 64).unwrap();
        let x = solver.resolvent_start();
        let (t, f) = (solver.theta_apply(&x).unwrap(), solver.phi_apply(&x).unwrap());
        for (a, b) in t.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((iterate_datum(&p, &t).unwrap() - 1.5).abs() < 1e-14);
    }
}
