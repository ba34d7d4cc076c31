//! The three subcommands. Each returns an [`Outcome`]; errors carry their
//! exit code through [`CliError`].

use hilfer_core::{
    check_caplygin, check_comparison, check_condition_d_on, contraction_factor, data_dependence_bound, frac_integral,
    frac_integral_at, gamma, hausdorff_bound, inversion_defect, perturbed_subsolution, BieleckiWeight,
    CaplyginReport, ComparisonReport, DataDependenceReport, FracOrder, GridFunction, HausdorffReport, PicardSolver,
    ProblemSpec, PsiGrid, PsiMap, SolverReport,
};
use serde::Serialize;
use std::path::Path;

use crate::config::{ProblemConfig, RunConfig, TableTarget, TestFunction};
use crate::output::{convergence_csv, solution_csv, to_toml, write_file, ConvergenceRow};
use crate::{Check, Cli, CliError, Command};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub summary: String,
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli
        .common
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.common.mesh_n {
        cfg.mesh.n = n;
    }
    if let Some(r) = cli.common.grading {
        cfg.mesh.grading = Some(r);
    }
    let out = cli.common.out.as_path();
    match cli.command {
        Command::Solve => solve(&cfg, out),
        Command::Verify { check } => verify(&cfg, check, out),
        Command::Table => table(&cfg, out),
    }
}

#[derive(Debug, Serialize)]
struct ProblemSummary {
    psi: String,
    mu: f64,
    nu: f64,
    eps: f64,
    /// solutions are stored as z = (Ψ(t) − Ψ(a))^w · x(t) with this w
    weight_exponent: f64,
    a: f64,
    b: f64,
    x0: f64,
    xi: f64,
    f: String,
    operator: String,
    lipschitz_sum: f64,
    preconditions_hold: bool,
}

impl ProblemSummary {
    fn of(p: &ProblemSpec) -> Self {
        ProblemSummary {
            psi: p.psi.label().to_string(),
            mu: p.ord.mu(),
            nu: p.ord.nu(),
            eps: p.ord.eps(),
            weight_exponent: p.weight_exponent(),
            a: p.a,
            b: p.b,
            x0: p.x0,
            xi: p.xi,
            f: p.f.label().to_string(),
            operator: p.op.label(),
            lipschitz_sum: p.lipschitz_sum(),
            preconditions_hold: p.preconditions_hold(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ConditionD {
    condition_value: f64,
    condition_holds: bool,
    standard_value: f64,
    standard_holds: bool,
}

#[derive(Debug, Serialize)]
struct SolveFile {
    command: &'static str,
    passed: bool,
    seed: u64,
    n: usize,
    grading: f64,
    q_refined: f64,
    q_coarse: f64,
    problem: ProblemSummary,
    condition_d: Option<ConditionD>,
    solver: SolverReport,
}

fn grading_for(cfg: &RunConfig, ord: FracOrder) -> f64 {
    cfg.mesh.grading.unwrap_or_else(|| ord.default_grading())
}

fn condition_d(pc: &ProblemConfig, p: &ProblemSpec) -> Result<Option<ConditionD>, CliError> {
    let Some(k) = pc.pantograph_kernel()? else {
        return Ok(None);
    };
    let r = check_condition_d_on(&k, &p.f, p.xi, p.a, p.b)?;
    Ok(Some(ConditionD {
        condition_value: r.condition_value,
        condition_holds: r.condition_holds,
        standard_value: r.standard_value,
        standard_holds: r.standard_holds,
    }))
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let pc = cfg.single_problem()?;
    let p = pc.build()?;
    let grading = grading_for(cfg, p.ord);
    let solver = PicardSolver::new(p.clone(), cfg.mesh.n, grading)?;
    let (x, rep) = solver.solve(&solver.resolvent_start(), cfg.solver_options()?)?;
    let q = contraction_factor(&p)?;
    let file = SolveFile {
        command: "solve",
        passed: rep.converged,
        seed: cfg.seed,
        n: cfg.mesh.n,
        grading,
        q_refined: q.refined,
        q_coarse: q.coarse,
        problem: ProblemSummary::of(&p),
        condition_d: condition_d(pc, &p)?,
        solver: rep,
    };
    write_file(out, "solution.csv", &solution_csv(&x))?;
    write_file(out, "report.toml", &to_toml(&file)?)?;
    let r = &file.solver;
    Ok(Outcome {
        passed: r.converged,
        summary: format!(
            "solve: {} after {} iterations, residual {:.3e}, q = {:.6}, x(b) = {:.10}",
            if r.converged { "converged" } else { "NOT converged" },
            r.iterates,
            r.residual,
            r.q_theoretical,
            x.raw(x.len() - 1)
        ),
    })
}

#[derive(Debug, Serialize)]
struct VerifyFile<T: Serialize> {
    command: &'static str,
    check: &'static str,
    passed: bool,
    seed: u64,
    n: usize,
    report: T,
}

fn finish<T: Serialize>(
    cfg: &RunConfig,
    check: Check,
    out: &Path,
    passed: bool,
    detail: String,
    report: T,
) -> Result<Outcome, CliError> {
    let file = VerifyFile { command: "verify", check: check.name(), passed, seed: cfg.seed, n: cfg.mesh.n, report };
    write_file(out, "report.toml", &to_toml(&file)?)?;
    Ok(Outcome {
        passed,
        summary: format!("verify {}: {} ({detail})", check.name(), if passed { "PASS" } else { "FAIL" }),
    })
}

pub fn verify(cfg: &RunConfig, check: Check, out: &Path) -> Result<Outcome, CliError> {
    match check {
        Check::Identity => verify_identity(cfg, out),
        Check::Inversion => verify_inversion(cfg, out),
        Check::Caplygin => verify_caplygin(cfg, out),
        Check::Comparison => verify_comparison(cfg, out),
        Check::DataDep => verify_data_dep(cfg, out),
        Check::Hausdorff => verify_hausdorff(cfg, out),
    }
}

#[derive(Debug, Serialize)]
struct IdentityRow {
    psi: String,
    mu: f64,
    xi: f64,
    t: f64,
    integral: f64,
    closed_form: f64,
    rel_defect: f64,
}

#[derive(Debug, Serialize)]
struct IdentityReport {
    tol: f64,
    grading: f64,
    max_rel_defect: f64,
    rows: Vec<IdentityRow>,
}

/// I^μ of E_μ(ξ(Ψ − Ψ(a))^μ) against (E_μ(ξ(Ψ(t) − Ψ(a))^μ) − 1)/ξ on [0, 1].
fn verify_identity(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ic = cfg.identity.as_ref().ok_or_else(|| CliError::Config("missing [identity] table".into()))?;
    let grading = cfg.mesh.grading.unwrap_or(1.0);
    let mut rows = Vec::new();
    for label in &ic.psi {
        let psi = PsiMap::builtin(label)?;
        let grid = PsiGrid::graded(psi.clone(), 0.0, 1.0, cfg.mesh.n, grading)?;
        for &mu in &ic.mu {
            for &xi in &ic.xi {
                let w = BieleckiWeight::new(xi, mu, psi.clone(), 0.0)?;
                let e = GridFunction::from_u_fn(grid.clone(), |u| w.at_u(u).unwrap_or(f64::NAN))?;
                for &t in &ic.t {
                    let integral = frac_integral_at(&e, mu, t)?;
                    let closed_form = (w.at(t)? - 1.0) / xi;
                    rows.push(IdentityRow {
                        psi: label.clone(),
                        mu,
                        xi,
                        t,
                        integral,
                        closed_form,
                        rel_defect: ((integral - closed_form) / closed_form).abs(),
                    });
                }
            }
        }
    }
    let max = rows.iter().map(|r| r.rel_defect).fold(0.0, f64::max);
    let passed = !rows.is_empty() && max <= ic.tol && max.is_finite();
    let detail = format!("{} points, max relative defect {max:.3e} vs tol {:.1e}", rows.len(), ic.tol);
    finish(cfg, Check::Identity, out, passed, detail, IdentityReport { tol: ic.tol, grading, max_rel_defect: max, rows })
}

#[derive(Debug, Serialize)]
struct InversionRow {
    psi: String,
    mu: f64,
    nu: f64,
    function: String,
    grading: f64,
    /// max of |defect| over t > a, with the weighted value at t = a
    sup_defect: f64,
    /// sup of the weighted representation (Ψ − Ψ(a))^{1−ε}·defect
    weighted_sup_defect: f64,
}

#[derive(Debug, Serialize)]
struct InversionReport {
    tol: f64,
    max_defect: f64,
    rows: Vec<InversionRow>,
}

fn verify_inversion(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ic = cfg.inversion.as_ref().ok_or_else(|| CliError::Config("missing [inversion] table".into()))?;
    let mut rows = Vec::new();
    for label in &ic.psi {
        let psi = PsiMap::builtin(label)?;
        for &nu in &ic.nu {
            let ord = FracOrder::new(ic.mu, nu)?;
            let grading = grading_for(cfg, ord);
            let grid = PsiGrid::graded(psi.clone(), 0.0, 1.0, cfg.mesh.n, grading)?;
            for &func in &ic.functions {
                let x = match func {
                    TestFunction::One => GridFunction::from_fn(grid.clone(), |_| 1.0)?,
                    TestFunction::Psi => GridFunction::from_u_fn(grid.clone(), |u| u)?,
                };
                let d = inversion_defect(ord, &x)?;
                let sup = (1..d.len()).map(|i| d.raw(i).abs()).fold(d.values()[0].abs(), f64::max);
                rows.push(InversionRow {
                    psi: label.clone(),
                    mu: ic.mu,
                    nu,
                    function: format!("{func:?}").to_lowercase(),
                    grading,
                    sup_defect: sup,
                    weighted_sup_defect: d.sup_abs(),
                });
            }
        }
    }
    let max = rows.iter().map(|r| r.sup_defect).fold(0.0, f64::max);
    let passed = !rows.is_empty() && max <= ic.tol && max.is_finite();
    let detail = format!("{} cases, max sup defect {max:.3e} vs tol {:.1e}", rows.len(), ic.tol);
    finish(cfg, Check::Inversion, out, passed, detail, InversionReport { tol: ic.tol, max_defect: max, rows })
}

#[derive(Debug, Serialize)]
struct CaplyginFile {
    kappa: f64,
    delta: f64,
    result: CaplyginReport,
}

fn verify_caplygin(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p = cfg.single_problem()?.build()?;
    let (kappa, delta) = cfg.caplygin.as_ref().map(|c| (c.kappa, c.delta)).unwrap_or((0.1, 0.1));
    let opts = cfg.verify_options()?;
    let y = perturbed_subsolution(&p, kappa, delta, &opts)?;
    let r = check_caplygin(&p, &y, &opts)?;
    let detail = format!("max y - x* = {:.3e} over {} nodes", r.max_excess, r.checked_nodes);
    finish(cfg, Check::Caplygin, out, r.passed, detail, CaplyginFile { kappa, delta, result: r })
}

fn build_all(list: &[ProblemConfig]) -> Result<Vec<ProblemSpec>, CliError> {
    list.iter().map(|p| p.build()).collect()
}

fn verify_comparison(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ps = build_all(cfg.problem_list(3)?)?;
    let r: ComparisonReport = check_comparison(&ps[0], &ps[1], &ps[2], &cfg.verify_options()?)?;
    let detail = format!(
        "x(b) = {:.6} <= {:.6} <= {:.6}, excesses {:.2e}, {:.2e}",
        r.at_b[0], r.at_b[1], r.at_b[2], r.excess_12, r.excess_23
    );
    finish(cfg, Check::Comparison, out, r.passed, detail, r)
}

fn verify_data_dep(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ps = build_all(cfg.problem_list(2)?)?;
    let pert = cfg
        .perturbation
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [perturbation] table".into()))?
        .build()?;
    let r: DataDependenceReport = data_dependence_bound(&ps[0], &ps[1], &pert, &cfg.verify_options()?)?;
    let detail = format!(
        "distance {:.6e}, endpoint bound {:.6e}, corrected bound {:.6e}",
        r.lhs, r.endpoint_bound, r.corrected_bound
    );
    finish(cfg, Check::DataDep, out, r.holds, detail, r)
}

fn verify_hausdorff(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let ps = build_all(cfg.problem_list(2)?)?;
    let data = &cfg
        .hausdorff
        .as_ref()
        .ok_or_else(|| CliError::Config("missing [hausdorff] table".into()))?
        .data;
    let r: HausdorffReport = hausdorff_bound(&ps[0], &ps[1], data, &cfg.verify_options()?)?;
    let detail = format!(
        "distance {:.6e}, endpoint bound {:.6e}, corrected bound {:.6e}",
        r.hausdorff_distance, r.bound, r.corrected_bound
    );
    finish(cfg, Check::Hausdorff, out, r.holds, detail, r)
}

#[derive(Debug, Serialize)]
struct TableFile {
    command: &'static str,
    target: String,
    passed: bool,
    /// pass rule: every observed order >= 1 (power), errors decreasing (solve)
    rule: &'static str,
    rows: Vec<ConvergenceRow>,
}

/// Errors below this are quadrature round-off, not discretization error.
const EXACT: f64 = 1e-14;

fn with_orders(target: &str, ns: &[usize], errors: &[f64]) -> Vec<ConvergenceRow> {
    ns.iter()
        .zip(errors)
        .enumerate()
        .map(|(i, (&n, &e))| ConvergenceRow {
            target: target.to_string(),
            n,
            error: e,
            observed_order: (i > 0).then(|| (errors[i - 1] / e).ln() / (n as f64 / ns[i - 1] as f64).ln()),
        })
        .collect()
}

pub fn table(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let tc = cfg.table.clone().unwrap_or_default();
    if tc.ns.len() < 2 || tc.ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config("table.ns needs at least two increasing mesh sizes".into()));
    }
    let (target, errors) = match tc.target {
        TableTarget::Power => {
            let psi = tc.psi.build()?;
            let p = tc.k as f64 * tc.mu;
            let grading = cfg.mesh.grading.unwrap_or(1.0);
            let mut errors = Vec::new();
            for &n in &tc.ns {
                let g = PsiGrid::graded(psi.clone(), 0.0, 1.0, n, grading)?;
                let x = GridFunction::from_u_fn(g.clone(), |u| u.powf(p))?;
                let got = frac_integral(&x, tc.mu)?.raw(n - 1);
                let exact = gamma(p + 1.0)? / gamma(p + tc.mu + 1.0)? * g.span().powf(p + tc.mu);
                errors.push(((got - exact) / exact).abs());
            }
            (format!("power k={} mu={}", tc.k, tc.mu), errors)
        }
        TableTarget::Solve => {
            let p = cfg.single_problem()?.build()?;
            let grading = grading_for(cfg, p.ord);
            let opts = cfg.solver_options()?;
            let finest = 4 * tc.ns.last().copied().unwrap_or(0);
            let at_b = |n: usize| -> Result<f64, CliError> {
                let s = PicardSolver::new(p.clone(), n, grading)?;
                let (x, _) = s.solve(&s.resolvent_start(), opts)?;
                Ok(x.raw(n - 1))
            };
            let reference = at_b(finest)?;
            let errors = tc
                .ns
                .iter()
                .map(|&n| at_b(n).map(|v| ((v - reference) / reference).abs()))
                .collect::<Result<Vec<f64>, CliError>>()?;
            (format!("solve x(b) ref_n={finest}"), errors)
        }
    };
    let rows = with_orders(&target, &tc.ns, &errors);
    let (passed, rule) = match tc.target {
        TableTarget::Power => (
            rows.iter().all(|r| r.error <= EXACT || r.observed_order.is_none_or(|o| o >= 1.0)),
            "observed order >= 1 between consecutive meshes (or error at round-off)",
        ),
        TableTarget::Solve => (
            errors.windows(2).all(|w| w[1] <= w[0] || w[0] <= EXACT),
            "error decreases with every refinement",
        ),
    };
    write_file(out, "convergence.csv", &convergence_csv(&rows))?;
    let file = TableFile { command: "table", target: target.clone(), passed, rule, rows };
    write_file(out, "report.toml", &to_toml(&file)?)?;
    let orders: Vec<String> = file
        .rows
        .iter()
        .filter_map(|r| r.observed_order.map(|o| format!("{o:.3}")))
        .collect();
    Ok(Outcome {
        passed,
        summary: format!("table {target}: {} (orders {})", if passed { "PASS" } else { "FAIL" }, orders.join(", ")),
    })
}
