//! Causal (Volterra) operators 𝒰 acting on grid functions, and the scalar
//! right-hand side f(t, x).
//!
//! Operators take and return functions in the same weighted representation:
//! `apply_at(x, j)` is u_j^w·𝒰(x)(t_j), with the limit value at j = 0.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::mesh::{extrapolate_to_zero, GridFunction, PsiGrid};
use crate::psi::PsiMap;
use crate::quadrature::ProductRule;
use crate::special::{gamma, ml1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::sync::{Arc, Mutex};

pub trait VolterraOperator: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    /// L_𝒰 in the weighted sense used by the contraction estimate:
    /// |𝒰x(t) − 𝒰y(t)| ≤ L_𝒰 ‖x − y‖_ξ E_μ(ξ(Ψ(t) − Ψ(a))^μ).
    /// For pointwise operators this is the ordinary constant.
    fn lipschitz(&self, xi: f64) -> f64;

    /// x ≤ y ⇒ 𝒰x ≤ 𝒰y, as declared by the instance.
    fn is_increasing(&self) -> bool;

    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64>;

    fn apply(&self, x: &GridFunction) -> Result<GridFunction> {
        let values = (0..x.len())
            .into_par_iter()
            .map(|j| self.apply_at(x, j))
            .collect::<Result<Vec<f64>>>()?;
        x.with_values(values)
    }
}

/// Weighted form u^w·v of a raw value v at node j (zero limit at j = 0 when w > 0).
fn weigh(x: &GridFunction, j: usize, v: f64) -> f64 {
    let w = x.weight();
    if w == 0.0 {
        v
    } else if j == 0 {
        0.0
    } else {
        v * x.grid().u()[j].powf(w)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroOperator;

impl VolterraOperator for ZeroOperator {
    fn label(&self) -> String {
        "zero".into()
    }
    fn lipschitz(&self, _xi: f64) -> f64 {
        0.0
    }
    fn is_increasing(&self) -> bool {
        true
    }
    fn apply_at(&self, _x: &GridFunction, _j: usize) -> Result<f64> {
        Ok(0.0)
    }
}

/// 𝒰x ≡ c.
#[derive(Debug, Clone, Copy)]
pub struct ConstantOperator(pub f64);

impl VolterraOperator for ConstantOperator {
    fn label(&self) -> String {
        format!("constant({})", self.0)
    }
    fn lipschitz(&self, _xi: f64) -> f64 {
        0.0
    }
    fn is_increasing(&self) -> bool {
        true
    }
    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        Ok(weigh(x, j, self.0))
    }
}

/// 𝒰x(t) = k·x(t).
#[derive(Debug, Clone, Copy)]
pub struct PointwiseOperator(pub f64);

impl VolterraOperator for PointwiseOperator {
    fn label(&self) -> String {
        format!("pointwise({})", self.0)
    }
    fn lipschitz(&self, _xi: f64) -> f64 {
        self.0.abs()
    }
    fn is_increasing(&self) -> bool {
        self.0 >= 0.0
    }
    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        Ok(self.0 * x.values()[j])
    }
}

/// 𝒰x(t) = x(b): not causal. Exists to exercise the causality gate.
#[derive(Debug, Clone, Copy, Default)]
pub struct EndpointOperator;

impl VolterraOperator for EndpointOperator {
    fn label(&self) -> String {
        "endpoint".into()
    }
    fn lipschitz(&self, _xi: f64) -> f64 {
        1.0
    }
    fn is_increasing(&self) -> bool {
        true
    }
    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        Ok(weigh(x, j, x.raw(x.len() - 1)))
    }
}

/// 𝒰x = inner(x) + c.
#[derive(Debug, Clone)]
pub struct OffsetOperator {
    pub inner: Arc<dyn VolterraOperator>,
    pub offset: f64,
}

impl VolterraOperator for OffsetOperator {
    fn label(&self) -> String {
        format!("{} + {}", self.inner.label(), self.offset)
    }
    fn lipschitz(&self, xi: f64) -> f64 {
        self.inner.lipschitz(xi)
    }
    fn is_increasing(&self) -> bool {
        self.inner.is_increasing()
    }
    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        Ok(self.inner.apply_at(x, j)? + weigh(x, j, self.offset))
    }
}

type RhsFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// f(t, u) with its declared Lipschitz constant in u and monotonicity flag.
#[derive(Clone)]
pub struct RhsFunction {
    label: String,
    f: RhsFn,
    lipschitz: f64,
    monotone: bool,
}

impl fmt::Debug for RhsFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RhsFunction")
            .field("label", &self.label)
            .field("lipschitz", &self.lipschitz)
            .field("monotone", &self.monotone)
            .finish()
    }
}

impl RhsFunction {
    pub fn new<F>(label: impl Into<String>, lipschitz: f64, monotone: bool, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::domain(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        Ok(RhsFunction {
            label: label.into(),
            f: Arc::new(f),
            lipschitz,
            monotone,
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), 0.0, true, move |_, _| c).expect("valid constant")
    }

    /// f(t, u) = k·u.
    pub fn linear(k: f64) -> Self {
        Self::new(format!("{k}*u"), k.abs(), k >= 0.0, move |_, u| k * u).expect("valid linear")
    }

    /// Parses an expression in t and u (x is accepted as a synonym for u).
    pub fn from_expr(src: &str, lipschitz: f64, monotone: bool) -> Result<Self> {
        let e = Expr::parse(src, &["t", "u", "x"])?;
        Self::new(src, lipschitz, monotone, move |t, u| e.eval(&[t, u, u]))
    }

    /// f + δ.
    pub fn shifted(&self, delta: f64) -> Self {
        let inner = self.f.clone();
        RhsFunction {
            label: format!("{} + {delta}", self.label),
            f: Arc::new(move |t, u| inner(t, u) + delta),
            lipschitz: self.lipschitz,
            monotone: self.monotone,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    #[inline]
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }

    /// Samples pairs (t, u₁), (t, u₂) and reports the largest difference
    /// quotient and the worst monotonicity violation.
    pub fn probe(&self, t_range: (f64, f64), u_range: (f64, f64), probes: usize, seed: u64) -> ProbeReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst_ratio: f64 = 0.0;
        let mut worst_monotone: f64 = 0.0;
        for _ in 0..probes {
            let t = rng.gen_range(t_range.0..=t_range.1);
            let u1 = rng.gen_range(u_range.0..=u_range.1);
            let u2 = rng.gen_range(u_range.0..=u_range.1);
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            let (f_lo, f_hi) = (self.eval(t, lo), self.eval(t, hi));
            if hi > lo {
                worst_ratio = worst_ratio.max((f_hi - f_lo).abs() / (hi - lo));
            }
            worst_monotone = worst_monotone.max(f_lo - f_hi);
        }
        ProbeReport {
            probes,
            lipschitz_declared: self.lipschitz,
            lipschitz_observed: worst_ratio,
            monotone_violation: worst_monotone,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub probes: usize,
    pub lipschitz_declared: f64,
    pub lipschitz_observed: f64,
    pub monotone_violation: f64,
}

impl ProbeReport {
    pub fn lipschitz_ok(&self) -> bool {
        self.lipschitz_observed <= self.lipschitz_declared * (1.0 + 1e-9) + 1e-12
    }

    pub fn monotone_ok(&self) -> bool {
        self.monotone_violation <= 1e-12
    }
}

type KernelFn = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

/// A(t, s, u₁, u₂) with proportional delay λ, for
/// 𝒰x(t) = 1/Γ(μ) ∫_a^t G^μ_Ψ(t, s) A(t, s, x(s), x(a + λ(s − a))) ds.
#[derive(Clone)]
pub struct PantographKernel {
    label: String,
    lambda: f64,
    a_fn: KernelFn,
    lipschitz: f64,
    monotone: bool,
    mu: f64,
    psi: PsiMap,
}

impl fmt::Debug for PantographKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PantographKernel")
            .field("label", &self.label)
            .field("lambda", &self.lambda)
            .field("lipschitz", &self.lipschitz)
            .field("monotone", &self.monotone)
            .field("mu", &self.mu)
            .field("psi", &self.psi.label())
            .finish()
    }
}

impl PantographKernel {
    #[allow(clippy::too_many_arguments)]
    pub fn new<F>(
        label: impl Into<String>,
        lambda: f64,
        lipschitz: f64,
        monotone: bool,
        mu: f64,
        psi: PsiMap,
        a_fn: F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::domain(format!("delay factor lambda must lie in (0, 1), got {lambda}")));
        }
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::domain(format!("kernel order mu must lie in (0, 1], got {mu}")));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::domain(format!("L_A must be finite and >= 0, got {lipschitz}")));
        }
        Ok(PantographKernel {
            label: label.into(),
            lambda,
            a_fn: Arc::new(a_fn),
            lipschitz,
            monotone,
            mu,
            psi,
        })
    }

    /// Kernel from an expression in t, s, u1, u2.
    pub fn from_expr(src: &str, lambda: f64, lipschitz: f64, monotone: bool, mu: f64, psi: PsiMap) -> Result<Self> {
        let e = Expr::parse(src, &["t", "s", "u1", "u2"])?;
        Self::new(src, lambda, lipschitz, monotone, mu, psi, move |t, s, u1, u2| {
            e.eval(&[t, s, u1, u2])
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn psi(&self) -> &PsiMap {
        &self.psi
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64, u1: f64, u2: f64) -> f64 {
        (self.a_fn)(t, s, u1, u2)
    }

    /// Largest sampled |ΔA| / (|Δu₁| + |Δu₂|) over random tuples.
    pub fn probe_lipschitz(&self, t_range: (f64, f64), u_range: (f64, f64), probes: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..probes {
            let t = rng.gen_range(t_range.0..=t_range.1);
            let s = rng.gen_range(t_range.0..=t);
            let u: [f64; 4] = std::array::from_fn(|_| rng.gen_range(u_range.0..=u_range.1));
            let gap = (u[0] - u[2]).abs() + (u[1] - u[3]).abs();
            if gap > 0.0 {
                let d = (self.eval(t, s, u[0], u[1]) - self.eval(t, s, u[2], u[3])).abs();
                worst = worst.max(d / gap);
            }
        }
        worst
    }
}

/// The operator generated by a pantograph kernel. Quadrature rows are
/// cached per grid and weight.
#[derive(Debug)]
pub struct PantographOperator {
    kernel: PantographKernel,
    rule: Mutex<Option<Arc<ProductRule>>>,
}

impl Clone for PantographOperator {
    fn clone(&self) -> Self {
        PantographOperator {
            kernel: self.kernel.clone(),
            rule: Mutex::new(self.rule.lock().expect("rule cache").clone()),
        }
    }
}

impl PantographOperator {
    pub fn new(kernel: PantographKernel) -> Self {
        PantographOperator {
            kernel,
            rule: Mutex::new(None),
        }
    }

    pub fn kernel(&self) -> &PantographKernel {
        &self.kernel
    }

    fn rule_for(&self, grid: &Arc<PsiGrid>, weight: f64) -> Result<Arc<ProductRule>> {
        let mut slot = self.rule.lock().expect("rule cache");
        if let Some(rule) = slot.as_ref() {
            if rule.grid().same_as(grid) && rule.weight() == weight {
                return Ok(rule.clone());
            }
        }
        if grid.psi().label() != self.kernel.psi.label() {
            return Err(Error::domain(format!(
                "kernel uses psi '{}' but the grid uses '{}'",
                self.kernel.psi.label(),
                grid.psi().label()
            )));
        }
        let rule = Arc::new(ProductRule::new(grid.clone(), self.kernel.mu, weight)?);
        *slot = Some(rule.clone());
        Ok(rule)
    }

    /// Raw value 𝒰x(t_j).
    pub fn raw_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        if j == 0 {
            return Ok(0.0);
        }
        let grid = x.grid();
        let w = x.weight();
        let rule = self.rule_for(grid, w)?;
        let (us, ts) = (grid.u(), grid.nodes());
        let (a, tj, lambda) = (grid.a(), ts[j], self.kernel.lambda);
        let psi_a = grid.psi().eval(a);
        let raw_x = |k: usize| -> f64 {
            let s = ts[k];
            let delayed = a + lambda * (s - a);
            let ud = grid.psi().eval(delayed) - psi_a;
            let zd = x.weighted_at_u(ud);
            let xd = if w == 0.0 { zd } else { zd * ud.powf(-w) };
            self.kernel.eval(tj, s, x.raw(k), xd)
        };
        // weighted integrand u^w·A(t_j, s, x(s), x(λs))
        let mut z: Vec<f64> = (0..=j)
            .map(|k| if k == 0 { 0.0 } else { weigh_raw(us[k], w, raw_x(k)) })
            .collect();
        z[0] = if w == 0.0 {
            self.kernel.eval(tj, a, x.values()[0], x.values()[0])
        } else if j == 1 {
            z[1]
        } else {
            extrapolate_to_zero(us[1], z[1], us[2], z[2])
        };
        Ok(rule.row(j).iter().zip(&z).map(|(c, v)| c * v).sum())
    }
}

fn weigh_raw(u: f64, w: f64, v: f64) -> f64 {
    if w == 0.0 {
        v
    } else {
        v * u.powf(w)
    }
}

/// Raw value of the pantograph integral at mesh node t_j.
pub fn pantograph_apply(k: &PantographKernel, x: &GridFunction, j: usize) -> Result<f64> {
    PantographOperator::new(k.clone()).raw_at(x, j)
}

impl VolterraOperator for PantographOperator {
    fn label(&self) -> String {
        format!("pantograph(lambda={}, A={})", self.kernel.lambda, self.kernel.label)
    }

    /// 2L_A/ξ: I^μ E_μ(ξu^μ) = (E_μ(ξu^μ) − 1)/ξ bounds both arguments of A.
    fn lipschitz(&self, xi: f64) -> f64 {
        2.0 * self.kernel.lipschitz / xi
    }

    fn is_increasing(&self) -> bool {
        self.kernel.monotone
    }

    fn apply_at(&self, x: &GridFunction, j: usize) -> Result<f64> {
        let raw = self.raw_at(x, j)?;
        Ok(weigh(x, j, raw))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub node: usize,
    pub trials: usize,
    pub max_violation: f64,
    pub passed: bool,
}

/// Perturbs x at nodes after `j` and checks that 𝒰x(t_j) does not move.
pub fn causality_check(
    op: &dyn VolterraOperator,
    x: &GridFunction,
    j: usize,
    trials: usize,
    seed: u64,
) -> Result<CausalityReport> {
    if j == 0 || j + 1 >= x.len() {
        return Err(Error::domain(format!("node {j} is not interior")));
    }
    let base = op.apply_at(x, j)?;
    let scale = 1.0 + x.sup_abs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mut v = x.values().to_vec();
        for z in v.iter_mut().skip(j + 1) {
            *z += scale * rng.gen_range(-1.0..=1.0);
        }
        let moved = op.apply_at(&x.with_values(v)?, j)?;
        worst = worst.max((moved - base).abs());
    }
    Ok(CausalityReport {
        node: j,
        trials,
        max_violation: worst,
        passed: worst <= 1e-12 * (1.0 + base.abs()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionDReport {
    pub condition_value: f64,
    pub condition_holds: bool,
    pub standard_value: f64,
    pub standard_holds: bool,
}

/// Smallness condition for the pantograph problem on [0, 1].
pub fn check_condition_d(k: &PantographKernel, rhs: &RhsFunction, xi: f64) -> Result<ConditionDReport> {
    check_condition_d_on(k, rhs, xi, 0.0, 1.0)
}

/// Smallness condition for the pantograph problem on [a, b]. Reports the
/// expression L_f/ξ + (2L_A/ξ)(1/ξ − S^μ/Γ(μ+1)) next to the contraction
/// factor (L_f + 2L_A/ξ)/ξ·(1 − 1/E_μ(ξS^μ)), where S = Ψ(b) − Ψ(a).
pub fn check_condition_d_on(
    k: &PantographKernel,
    rhs: &RhsFunction,
    xi: f64,
    a: f64,
    b: f64,
) -> Result<ConditionDReport> {
    if !(xi > 0.0) {
        return Err(Error::domain(format!("xi must be positive, got {xi}")));
    }
    let (lf, la, mu) = (rhs.lipschitz(), k.lipschitz(), k.mu());
    let span = k.psi().eval(b) - k.psi().eval(a);
    let value = lf / xi + 2.0 * la / xi * (1.0 / xi - span.powf(mu) / gamma(mu + 1.0)?);
    let e_b = if mu == 1.0 {
        (xi * span).exp()
    } else {
        ml1(mu, xi * span.powf(mu))?
    };
    let standard = (lf + 2.0 * la / xi) / xi * (1.0 - 1.0 / e_b);
    Ok(ConditionDReport {
        condition_value: value,
        condition_holds: value < 1.0,
        standard_value: standard,
        standard_holds: standard < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<PsiGrid> {
        PsiGrid::graded(PsiMap::identity(), 0.0, 1.0, n, 1.0).unwrap()
    }

    fn kernel(src: &str, la: f64) -> PantographKernel {
        PantographKernel::from_expr(src, 0.5, la, true, 0.5, PsiMap::identity()).unwrap()
    }

    #[test]
    fn pantograph_of_unit_kernel() {
        let g = grid(65);
        let x = GridFunction::from_fn(g.clone(), |t| t).unwrap();
        let k = kernel("1", 0.0);
        let exact = 1.0 / gamma(1.5).unwrap();
        assert!((pantograph_apply(&k, &x, 64).unwrap() - exact).abs() < 1e-13);
        assert_eq!(pantograph_apply(&kernel("0", 0.0), &x, 64).unwrap(), 0.0);
    }

    #[test]
    fn delayed_argument_of_a_constant() {
        let g = grid(65);
        let x = GridFunction::from_fn(g.clone(), |_| 3.0).unwrap();
        let v = pantograph_apply(&kernel("u2", 1.0), &x, 32).unwrap();
        let exact = 3.0 * 0.5f64.sqrt() / gamma(1.5).unwrap();
        assert!((v - exact).abs() < 1e-13, "{v} vs {exact}");
    }

    #[test]
    fn causality_of_builtins() {
        let g = grid(41);
        let x = GridFunction::from_fn(g, |t| (3.0 * t).sin()).unwrap();
        let pant = PantographOperator::new(kernel("0.25*(u1 + u2)", 0.25));
        let ops: Vec<Box<dyn VolterraOperator>> = vec![
            Box::new(ZeroOperator),
            Box::new(ConstantOperator(2.0)),
            Box::new(PointwiseOperator(-1.5)),
            Box::new(pant),
        ];
        for op in &ops {
            let r = causality_check(op.as_ref(), &x, 20, 8, 7).unwrap();
            assert!(r.passed, "{}: {}", op.label(), r.max_violation);
        }
        let r = causality_check(&EndpointOperator, &x, 20, 8, 7).unwrap();
        assert!(!r.passed && r.max_violation > 0.1);
    }

    #[test]
    fn condition_d_arithmetic() {
        let k = kernel("0.25*(u1 + u2)", 0.25);
        let rhs = RhsFunction::linear(0.5);
        let r = check_condition_d(&k, &rhs, 2.0).unwrap();
        let value = 0.25 + 0.25 * (0.5 - 1.0 / gamma(1.5).unwrap());
        assert!((r.condition_value - value).abs() < 1e-15);
        assert!(r.condition_holds && r.standard_holds);

        let zero = check_condition_d(&kernel("0", 0.0), &RhsFunction::zero(), 1.0).unwrap();
        assert_eq!(zero.condition_value, 0.0);
        assert!(zero.condition_holds);
    }

    #[test]
    fn rhs_probe_flags_understated_lipschitz() {
        let f = RhsFunction::from_expr("2*u + sin(t)", 1.0, true).unwrap();
        let r = f.probe((0.0, 1.0), (-2.0, 2.0), 64, 1);
        assert!(!r.lipschitz_ok() && r.monotone_ok());
        let g = RhsFunction::from_expr("-x", 1.0, true).unwrap();
        assert!(!g.probe((0.0, 1.0), (-2.0, 2.0), 64, 1).monotone_ok());
    }
}
