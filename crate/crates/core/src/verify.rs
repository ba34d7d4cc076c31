//! Executable checks of the qualitative results: Čaplygin-type ordering of
//! subsolutions, the three-problem comparison sandwich, the data-dependence
//! estimate and the Pompeiu-Hausdorff estimate between solution sets.
//!
//! Hypotheses quantified over all of ℝ or all functions are spot-checked on
//! seeded random probes; a failed probe is a [`Error::Hypothesis`].

use crate::error::{Error, Result};
use crate::hilfer::hilfer_derivative;
use crate::mesh::{GridFunction, PsiGrid};
use crate::solver::{iterate_datum, PicardSolver, ProblemSpec, SolverOptions, SolverReport};
use crate::special::{gamma, recip_gamma};
use crate::volterra::{causality_check, VolterraOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

/// Declared gaps between two problems: data, operators, right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationSpec {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

impl PerturbationSpec {
    pub fn new(eta1: f64, eta2: f64, eta3: f64) -> Result<Self> {
        for (name, v) in [("eta1", eta1), ("eta2", eta2), ("eta3", eta3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(PerturbationSpec { eta1, eta2, eta3 })
    }

    pub fn zero() -> Self {
        PerturbationSpec { eta1: 0.0, eta2: 0.0, eta3: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub n: usize,
    /// Mesh grading; `None` picks the default for the problem's order.
    pub grading: Option<f64>,
    pub solver: SolverOptions,
    pub probes: usize,
    pub seed: u64,
    /// Ordering slack: violations up to slack·(1 + |x|) are tolerated.
    pub slack: f64,
    /// Relative slack on bound comparisons.
    pub bound_slack: f64,
    /// Fraction of [a, b] next to a excluded from nodewise orderings.
    pub boundary_layer: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            n: 512,
            grading: None,
            solver: SolverOptions::default(),
            probes: 64,
            seed: 0,
            slack: 5e-3,
            bound_slack: 0.05,
            boundary_layer: 0.05,
        }
    }
}

impl VerifyOptions {
    fn solver_for(&self, p: &ProblemSpec) -> Result<PicardSolver> {
        let r = self.grading.unwrap_or_else(|| p.ord.default_grading());
        PicardSolver::new(p.clone(), self.n, r)
    }

    fn outside_layer(&self, grid: &PsiGrid) -> impl Iterator<Item = usize> + '_ {
        let cut = grid.a() + self.boundary_layer * (grid.b() - grid.a());
        let ts = grid.nodes().to_vec();
        (1..ts.len()).filter(move |&i| ts[i] >= cut)
    }
}

/// Shared mesh for several problems on the same Ψ, order and interval.
fn common_grid(opts: &VerifyOptions, ps: &[&ProblemSpec]) -> Result<Arc<PsiGrid>> {
    let p0 = ps[0];
    for p in &ps[1..] {
        if p.psi.label() != p0.psi.label() || p.ord != p0.ord || p.a != p0.a || p.b != p0.b || p.xi != p0.xi {
            return Err(Error::domain(
                "problems must share psi, order, interval and xi to be compared",
            ));
        }
    }
    let r = opts.grading.unwrap_or_else(|| p0.ord.default_grading());
    PsiGrid::graded(p0.psi.clone(), p0.a, p0.b, opts.n, r)
}

fn solve_on(p: &ProblemSpec, grid: &Arc<PsiGrid>, opts: &VerifyOptions) -> Result<(PicardSolver, GridFunction, SolverReport)> {
    let solver = PicardSolver::on_grid(p.clone(), grid.clone())?;
    let (x, report) = solver.solve(&solver.resolvent_start(), opts.solver)?;
    Ok((solver, x, report))
}

/// Range of raw values over nodes after a, widened by 10%.
fn envelope(fs: &[&GridFunction]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in fs {
        for i in 1..f.len() {
            let v = f.raw(i);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let pad = 0.1 * (hi - lo).max(lo.abs()).max(hi.abs()).max(1e-3);
    (lo - pad, hi + pad)
}

/// Random functions around the given ones: base + Σ c_k sin(kπ u/U).
fn probe_functions(base: &[&GridFunction], count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<GridFunction>> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let b = base[i % base.len()];
        let us = b.grid().u();
        let span = us[us.len() - 1];
        let scale = 0.1 * (1.0 + b.sup_abs());
        let c: [f64; 3] = std::array::from_fn(|_| scale * rng.gen_range(-1.0..=1.0));
        let values = b
            .values()
            .iter()
            .zip(us)
            .map(|(&z, &u)| {
                let s = u / span * std::f64::consts::PI;
                z + c[0] * s.sin() + c[1] * (2.0 * s).sin() + c[2] * (3.0 * s).sin()
            })
            .collect();
        out.push(b.with_values(values)?);
    }
    Ok(out)
}

/// Largest value of 𝒰₁x − 𝒰₂x (raw, after a) over the probe functions.
fn operator_excess(op1: &dyn VolterraOperator, op2: &dyn VolterraOperator, probes: &[GridFunction]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for x in probes {
        let (a, b) = (op1.apply(x)?, op2.apply(x)?);
        for i in 1..x.len() {
            worst = worst.max(a.raw(i) - b.raw(i));
        }
    }
    Ok(worst)
}

/// Largest value of f₁(t, u) − f₂(t, u) over random (t, u).
fn rhs_excess(p1: &ProblemSpec, p2: &ProblemSpec, u_range: (f64, f64), probes: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..probes {
        let t = rng.gen_range(p1.a..=p1.b);
        let u = rng.gen_range(u_range.0..=u_range.1);
        worst = worst.max(p1.f.eval(t, u) - p2.f.eval(t, u));
    }
    worst
}

fn check_causal(op: &dyn VolterraOperator, x: &GridFunction, seed: u64) -> Result<()> {
    let n = x.len();
    for j in [n / 4, n / 2, 3 * n / 4] {
        let r = causality_check(op, x, j.max(1), 4, seed)?;
        if !r.passed {
            return Err(Error::hypothesis(
                "C2",
                format!(
                    "operator '{}' is not causal: perturbing x after node {j} moved its value by {:e}",
                    op.label(),
                    r.max_violation
                ),
            ));
        }
    }
    Ok(())
}

/// Causality gate run before any solve: an acausal operator can make the
/// iteration diverge, which would hide the reason behind overflow.
fn gate_causal(p: &ProblemSpec, grid: &Arc<PsiGrid>, seed: u64) -> Result<()> {
    let start = PicardSolver::on_grid(p.clone(), grid.clone())?.resolvent_start();
    check_causal(p.op.as_ref(), &start, seed)
}

/// Gate for increasing f(t, ·) and 𝒰: declared flags plus sampled probes.
fn check_monotone(p: &ProblemSpec, probes: &[GridFunction], u_range: (f64, f64), opts: &VerifyOptions, seed: u64) -> Result<()> {
    if !p.f.is_monotone() {
        return Err(Error::hypothesis("monotone f", format!("f = '{}' is not declared increasing in u", p.f.label())));
    }
    if !p.op.is_increasing() {
        return Err(Error::hypothesis(
            "monotone U",
            format!("operator '{}' is not declared increasing", p.op.label()),
        ));
    }
    let r = p.f.probe((p.a, p.b), u_range, opts.probes, seed);
    if !r.monotone_ok() {
        return Err(Error::hypothesis(
            "monotone f",
            format!("f = '{}' decreases by {:e} on a sampled pair", p.f.label(), r.monotone_violation),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for x in probes {
        // y = x + nonnegative bump, so x ≤ y nodewise
        let bump: Vec<f64> = x.values().iter().map(|&z| z + rng.gen_range(0.0..=0.1) * (1.0 + z.abs())).collect();
        let y = x.with_values(bump)?;
        let (ux, uy) = (p.op.apply(x)?, p.op.apply(&y)?);
        for i in 0..x.len() {
            let drop = ux.values()[i] - uy.values()[i];
            if drop > 1e-12 * (1.0 + ux.values()[i].abs()) {
                return Err(Error::hypothesis(
                    "monotone U",
                    format!("operator '{}' decreased by {drop:e} for an increased argument", p.op.label()),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaplyginReport {
    pub passed: bool,
    /// max over checked nodes of y − x*
    pub max_excess: f64,
    /// max of D y − (𝒰y + f(·, y)) over checked nodes
    pub derivative_excess: f64,
    pub datum_y: f64,
    pub datum_x: f64,
    pub checked_nodes: usize,
    pub slack: f64,
    pub boundary_layer: f64,
    pub probes: usize,
    pub seed: u64,
    pub solver: SolverReport,
}

/// Checks that a subsolution y stays below the solution x*.
pub fn check_caplygin(p: &ProblemSpec, y: &GridFunction, opts: &VerifyOptions) -> Result<CaplyginReport> {
    let grid = y.grid().clone();
    gate_causal(p, &grid, opts.seed)?;
    let y = y.reweight(p.weight_exponent())?;
    let solver = PicardSolver::on_grid(p.clone(), grid.clone())?;
    let (x, report) = solver.solve(&solver.resolvent_start(), opts.solver)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = probe_functions(&[&x, &y], opts.probes.min(16), &mut rng)?;
    check_causal(p.op.as_ref(), &x, opts.seed)?;
    check_monotone(p, &probes, envelope(&[&x, &y]), opts, opts.seed)?;

    let datum_y = iterate_datum(p, &y)?;
    if datum_y > p.x0 + 1e-12 * (1.0 + p.x0.abs()) {
        return Err(Error::hypothesis(
            "datum",
            format!("subsolution datum {datum_y} exceeds x0 = {}", p.x0),
        ));
    }

    // the differential inequality D y ≤ 𝒰y + f(·, y)
    let d = hilfer_derivative(p.ord, &y)?;
    let uy = p.op.apply(&y)?;
    let mut derivative_excess = f64::NEG_INFINITY;
    let last = grid.len() - 1;
    for i in opts.outside_layer(&grid).filter(|&i| i < last) {
        let (t, yi) = (grid.t(i), y.raw(i));
        let gap = d.raw(i) - (uy.raw(i) + p.f.eval(t, yi));
        if gap > opts.slack * (1.0 + yi.abs()) {
            return Err(Error::hypothesis(
                "MR5",
                format!("y is not a subsolution at t = {t}: D y exceeds the right-hand side by {gap:e}"),
            ));
        }
        derivative_excess = derivative_excess.max(gap);
    }

    let mut max_excess = f64::NEG_INFINITY;
    let mut passed = true;
    let mut checked = 0;
    for i in opts.outside_layer(&grid) {
        let (xi, yi) = (x.raw(i), y.raw(i));
        max_excess = max_excess.max(yi - xi);
        passed &= yi <= xi + opts.slack * (1.0 + xi.abs());
        checked += 1;
    }
    Ok(CaplyginReport {
        passed,
        max_excess,
        derivative_excess,
        datum_y,
        datum_x: p.x0,
        checked_nodes: checked,
        slack: opts.slack,
        boundary_layer: opts.boundary_layer,
        probes: opts.probes,
        seed: opts.seed,
        solver: report,
    })
}

/// The solution of `p` with f replaced by f − κ and datum x₀ − δ, a
/// subsolution of `p` when κ, δ ≥ 0.
pub fn perturbed_subsolution(p: &ProblemSpec, kappa: f64, delta: f64, opts: &VerifyOptions) -> Result<GridFunction> {
    if kappa < 0.0 || delta < 0.0 {
        return Err(Error::domain("forcing and datum gaps must be nonnegative"));
    }
    let q = p.with_f(p.f.shifted(-kappa)).with_x0(p.x0 - delta);
    let solver = opts.solver_for(&q)?;
    gate_causal(&q, solver.grid(), opts.seed)?;
    let (y, _) = solver.solve(&solver.resolvent_start(), opts.solver)?;
    Ok(y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub passed: bool,
    /// max of x₁ − x₂ over checked nodes
    pub excess_12: f64,
    /// max of x₂ − x₃ over checked nodes
    pub excess_23: f64,
    /// values of x₁, x₂, x₃ at t = b
    pub at_b: [f64; 3],
    pub checked_nodes: usize,
    pub slack: f64,
    pub boundary_layer: f64,
    pub probes: usize,
    pub seed: u64,
}

/// Checks x₁ ≤ x₂ ≤ x₃ for ordered data, right-hand sides and operators.
pub fn check_comparison(p1: &ProblemSpec, p2: &ProblemSpec, p3: &ProblemSpec, opts: &VerifyOptions) -> Result<ComparisonReport> {
    let grid = common_grid(opts, &[p1, p2, p3])?;
    if !(p1.x0 <= p2.x0 && p2.x0 <= p3.x0) {
        return Err(Error::hypothesis(
            "data",
            format!("initial data are not ordered: {} , {} , {}", p1.x0, p2.x0, p3.x0),
        ));
    }
    for p in [p1, p2, p3] {
        gate_causal(p, &grid, opts.seed)?;
    }
    let (_, x1, _) = solve_on(p1, &grid, opts)?;
    let (_, x2, _) = solve_on(p2, &grid, opts)?;
    let (_, x3, _) = solve_on(p3, &grid, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = probe_functions(&[&x1, &x2, &x3], opts.probes.min(16), &mut rng)?;
    for p in [p1, p2, p3] {
        check_causal(p.op.as_ref(), &x2, opts.seed)?;
    }
    let u_range = envelope(&[&x1, &x2, &x3]);
    check_monotone(p2, &probes, u_range, opts, opts.seed)?;

    let tol = 1e-12;
    for (name, a, b) in [("f1 <= f2", p1, p2), ("f2 <= f3", p2, p3)] {
        let ex = rhs_excess(a, b, u_range, opts.probes, &mut rng);
        if ex > tol {
            return Err(Error::hypothesis(name, format!("violated by {ex:e} on a sampled point")));
        }
    }
    for (name, a, b) in [("U1 <= U2", p1, p2), ("U2 <= U3", p2, p3)] {
        let ex = operator_excess(a.op.as_ref(), b.op.as_ref(), &probes)?;
        if ex > tol {
            return Err(Error::hypothesis(name, format!("violated by {ex:e} on a sampled function")));
        }
    }

    let mut e12 = f64::NEG_INFINITY;
    let mut e23 = f64::NEG_INFINITY;
    let mut passed = true;
    let mut checked = 0;
    for i in opts.outside_layer(&grid) {
        let (a, b, c) = (x1.raw(i), x2.raw(i), x3.raw(i));
        e12 = e12.max(a - b);
        e23 = e23.max(b - c);
        passed &= a <= b + opts.slack * (1.0 + b.abs()) && b <= c + opts.slack * (1.0 + c.abs());
        checked += 1;
    }
    let last = grid.len() - 1;
    Ok(ComparisonReport {
        passed,
        excess_12: e12,
        excess_23: e23,
        at_b: [x1.raw(last), x2.raw(last), x3.raw(last)],
        checked_nodes: checked,
        slack: opts.slack,
        boundary_layer: opts.boundary_layer,
        probes: opts.probes,
        seed: opts.seed,
    })
}

/// c from the larger Lipschitz constants of two problems.
fn pair_c_constant(p1: &ProblemSpec, p2: &ProblemSpec) -> Result<f64> {
    let xi = p1.xi;
    let lf = p1.f.lipschitz().max(p2.f.lipschitz());
    let lu = p1.op.lipschitz(xi).max(p2.op.lipschitz(xi));
    if !(xi > lf + lu) {
        return Err(Error::hypothesis(
            "C2",
            format!("xi = {xi} does not exceed L_f + L_U = {}", lf + lu),
        ));
    }
    Ok(1.0 / (1.0 - (lf + lu) / xi))
}

/// c·sup_t B(t)/E(t) over mesh nodes for B(u) = u^{ε−1}/Γ(ε)·d + u^μ/Γ(μ+1)·g.
/// At t = a the weighted limit d/Γ(ε) is used, matching the norm.
fn corrected_bound(p: &ProblemSpec, grid: &PsiGrid, c: f64, d: f64, g: f64) -> Result<f64> {
    let eps = p.ord.eps();
    let mu = p.ord.mu();
    let w = p.weight()?;
    let (ge, gm) = (recip_gamma(eps), recip_gamma(mu + 1.0));
    let mut sup = d * ge;
    for &u in &grid.u()[1..] {
        let b = u.powf(eps - 1.0) * ge * d + u.powf(mu) * gm * g;
        sup = sup.max(b / w.at_u(u)?);
    }
    Ok(c * sup)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataDependenceReport {
    /// Bielecki distance between the two solutions
    pub lhs: f64,
    /// c/E(b)·{S^{ε−1}/Γ(ε)·η₁ + S^μ/Γ(μ+1)·(η₂ + η₃)}
    pub endpoint_bound: f64,
    /// c·sup_t {R(t)η₁ + I^μ(1)(t)(η₂ + η₃)}/E(t)
    pub corrected_bound: f64,
    pub holds: bool,
    pub holds_corrected: bool,
    pub c_constant: f64,
    pub perturbation: PerturbationSpec,
    /// largest sampled |𝒰₁x − 𝒰₂x| and |f₁ − f₂|
    pub observed_eta2: f64,
    pub observed_eta3: f64,
    pub bound_slack: f64,
    pub probes: usize,
    pub seed: u64,
}

pub fn data_dependence_bound(
    p1: &ProblemSpec,
    p2: &ProblemSpec,
    pert: &PerturbationSpec,
    opts: &VerifyOptions,
) -> Result<DataDependenceReport> {
    let grid = common_grid(opts, &[p1, p2])?;
    let c = pair_c_constant(p1, p2)?;
    let gap = (p1.x0 - p2.x0).abs();
    if gap > pert.eta1 * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::hypothesis("eta1", format!("|x01 - x02| = {gap} exceeds eta1 = {}", pert.eta1)));
    }
    gate_causal(p1, &grid, opts.seed)?;
    gate_causal(p2, &grid, opts.seed)?;
    let (s1, x1, _) = solve_on(p1, &grid, opts)?;
    let (_, x2, _) = solve_on(p2, &grid, opts)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = probe_functions(&[&x1, &x2], opts.probes.min(16), &mut rng)?;
    let u_range = envelope(&[&x1, &x2]);
    let eta3_obs = rhs_excess(p1, p2, u_range, opts.probes, &mut rng)
        .max(rhs_excess(p2, p1, u_range, opts.probes, &mut rng));
    if eta3_obs > pert.eta3 * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::hypothesis("eta3", format!("sampled |f1 - f2| = {eta3_obs} exceeds eta3 = {}", pert.eta3)));
    }
    let eta2_obs = operator_excess(p1.op.as_ref(), p2.op.as_ref(), &probes)?
        .max(operator_excess(p2.op.as_ref(), p1.op.as_ref(), &probes)?);
    if eta2_obs > pert.eta2 * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::hypothesis("eta2", format!("sampled |U1 - U2| = {eta2_obs} exceeds eta2 = {}", pert.eta2)));
    }

    let lhs = s1.metric(&x1, &x2)?;
    let span = p1.span();
    let e_b = p1.weight()?.at_u(span)?;
    let eps = p1.ord.eps();
    let mu = p1.ord.mu();
    let endpoint = c / e_b
        * (span.powf(eps - 1.0) / gamma(eps)? * pert.eta1 + span.powf(mu) / gamma(mu + 1.0)? * (pert.eta2 + pert.eta3));
    let corrected = corrected_bound(p1, &grid, c, pert.eta1, pert.eta2 + pert.eta3)?;
    let tol_floor = 2.0 * opts.solver.tol;
    Ok(DataDependenceReport {
        lhs,
        endpoint_bound: endpoint,
        corrected_bound: corrected,
        holds: lhs <= endpoint * (1.0 + opts.bound_slack) + tol_floor,
        holds_corrected: lhs <= corrected * (1.0 + opts.bound_slack) + tol_floor,
        c_constant: c,
        perturbation: *pert,
        observed_eta2: eta2_obs.max(0.0),
        observed_eta3: eta3_obs.max(0.0),
        bound_slack: opts.bound_slack,
        probes: opts.probes,
        seed: opts.seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HausdorffReport {
    /// two-sided max-min distance between the sampled solution families;
    /// a lower estimate of the distance between the full solution sets
    pub hausdorff_distance: f64,
    /// c(η₁ + η₂)S^μ/(Γ(μ+1)E(b)) with η₁ the operator gap, η₂ the f gap
    pub bound: f64,
    /// c(η₁ + η₂)·sup_t I^μ(1)(t)/E(t)
    pub corrected_bound: f64,
    pub holds: bool,
    pub holds_corrected: bool,
    pub c_constant: f64,
    pub eta_operator: f64,
    pub eta_rhs: f64,
    pub family_size: usize,
    pub bound_slack: f64,
    pub probes: usize,
    pub seed: u64,
}

/// Distance between the solution families of two problems over the initial
/// data in `data_set`. The gaps η are measured on probes, not declared.
pub fn hausdorff_bound(p1: &ProblemSpec, p2: &ProblemSpec, data_set: &[f64], opts: &VerifyOptions) -> Result<HausdorffReport> {
    if data_set.is_empty() {
        return Err(Error::domain("data set of initial values is empty"));
    }
    let grid = common_grid(opts, &[p1, p2])?;
    let c = pair_c_constant(p1, p2)?;
    gate_causal(p1, &grid, opts.seed)?;
    gate_causal(p2, &grid, opts.seed)?;
    let mut fam1 = Vec::with_capacity(data_set.len());
    let mut fam2 = Vec::with_capacity(data_set.len());
    for &x0 in data_set {
        fam1.push(solve_on(&p1.with_x0(x0), &grid, opts)?.1);
        fam2.push(solve_on(&p2.with_x0(x0), &grid, opts)?.1);
    }
    let metric_solver = PicardSolver::on_grid(p1.clone(), grid.clone())?;
    let m = data_set.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            dist[i][j] = metric_solver.metric(&fam1[i], &fam2[j])?;
        }
    }
    let sup_inf_12 = (0..m).map(|i| dist[i].iter().cloned().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let sup_inf_21 = (0..m)
        .map(|j| (0..m).map(|i| dist[i][j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let h = sup_inf_12.max(sup_inf_21);

    let all: Vec<&GridFunction> = fam1.iter().chain(&fam2).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes = probe_functions(&all, opts.probes.min(16), &mut rng)?;
    let u_range = envelope(&all);
    let eta_rhs = rhs_excess(p1, p2, u_range, opts.probes, &mut rng)
        .max(rhs_excess(p2, p1, u_range, opts.probes, &mut rng))
        .max(0.0);
    let eta_op = operator_excess(p1.op.as_ref(), p2.op.as_ref(), &probes)?
        .max(operator_excess(p2.op.as_ref(), p1.op.as_ref(), &probes)?)
        .max(0.0);

    let span = p1.span();
    let e_b = p1.weight()?.at_u(span)?;
    let mu = p1.ord.mu();
    let bound = c * (eta_op + eta_rhs) * span.powf(mu) / (gamma(mu + 1.0)? * e_b);
    let corrected = corrected_bound(p1, &grid, c, 0.0, eta_op + eta_rhs)?;
    let tol_floor = 2.0 * opts.solver.tol;
    Ok(HausdorffReport {
        hausdorff_distance: h,
        bound,
        corrected_bound: corrected,
        holds: h <= bound * (1.0 + opts.bound_slack) + tol_floor,
        holds_corrected: h <= corrected * (1.0 + opts.bound_slack) + tol_floor,
        c_constant: c,
        eta_operator: eta_op,
        eta_rhs,
        family_size: m,
        bound_slack: opts.bound_slack,
        probes: opts.probes,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::{FracOrder, PsiMap};
    use crate::volterra::{EndpointOperator, OffsetOperator, PointwiseOperator, RhsFunction};

    fn base(x0: f64, f: RhsFunction) -> ProblemSpec {
        ProblemSpec::new(
            PsiMap::identity(),
            FracOrder::new(0.6, 1.0).unwrap(),
            0.0,
            1.0,
            x0,
            f,
            Arc::new(PointwiseOperator(0.2)),
            2.0,
        )
        .unwrap()
    }

    fn opts() -> VerifyOptions {
        VerifyOptions { n: 128, probes: 16, ..Default::default() }
    }

    #[test]
    fn caplygin_accepts_the_solution_itself_and_a_subsolution() {
        let p = base(1.0, RhsFunction::linear(0.5));
        let o = opts();
        let solver = o.solver_for(&p).unwrap();
        let (x, _) = solver.solve(&solver.resolvent_start(), o.solver).unwrap();
        let r = check_caplygin(&p, &x, &o).unwrap();
        assert!(r.passed && r.max_excess.abs() < 1e-9);
        let y = perturbed_subsolution(&p, 0.2, 0.1, &o).unwrap();
        let r = check_caplygin(&p, &y, &o).unwrap();
        assert!(r.passed && r.max_excess < 0.0);
    }

    #[test]
    fn caplygin_gate_rejects_large_datum_and_nonmonotone_f() {
        let p = base(1.0, RhsFunction::linear(0.5));
        let o = opts();
        let above = perturbed_subsolution(&p.with_x0(1.5), 0.0, 0.0, &o).unwrap();
        assert!(matches!(check_caplygin(&p, &above, &o), Err(Error::Hypothesis { condition, .. }) if condition == "datum"));
        let q = p.with_f(RhsFunction::linear(-0.5));
        let y = perturbed_subsolution(&q, 0.1, 0.1, &o).unwrap();
        assert!(matches!(check_caplygin(&q, &y, &o), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn comparison_sandwich_and_acausal_gate() {
        let o = opts();
        let ps: Vec<ProblemSpec> = [0.2, 0.5, 0.8].iter().map(|&l| base(1.0, RhsFunction::linear(l))).collect();
        let r = check_comparison(&ps[0], &ps[1], &ps[2], &o).unwrap();
        assert!(r.passed && r.at_b[0] < r.at_b[1] && r.at_b[1] < r.at_b[2]);
        let bad = ps[1].with_op(Arc::new(EndpointOperator));
        let err = check_comparison(&ps[0], &bad, &ps[2], &o).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { ref condition, .. } if condition == "C2"), "{err}");
    }

    #[test]
    fn identical_problems_have_zero_distance() {
        let p = base(1.0, RhsFunction::linear(0.5));
        let r = data_dependence_bound(&p, &p, &PerturbationSpec::zero(), &opts()).unwrap();
        assert!(r.lhs <= 2e-10 && r.holds);
        let h = hausdorff_bound(&p, &p, &[0.5, 1.0], &opts()).unwrap();
        assert_eq!(h.hausdorff_distance, 0.0);
    }

    #[test]
    fn understated_gap_is_rejected() {
        let p = base(1.0, RhsFunction::linear(0.5));
        let q = p.with_op(Arc::new(OffsetOperator { inner: p.op.clone(), offset: 0.3 }));
        let err = data_dependence_bound(&p, &q, &PerturbationSpec::new(0.0, 0.1, 0.0).unwrap(), &opts()).unwrap_err();
        assert!(matches!(err, Error::Hypothesis { ref condition, .. } if condition == "eta2"));
        let ok = data_dependence_bound(&p, &q, &PerturbationSpec::new(0.0, 0.3, 0.0).unwrap(), &opts()).unwrap();
        assert!(ok.holds_corrected);
    }
}
