//! TOML run configuration. Unknown keys are rejected everywhere.

use hilfer_core::{
    ConstantOperator, EndpointOperator, Expr, FracOrder, IterationMap, OffsetOperator, PantographKernel,
    PantographOperator, PerturbationSpec, PointwiseOperator, ProblemSpec, PsiMap, RhsFunction, SolverOptions,
    VerifyOptions, VolterraOperator, ZeroOperator,
};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub problems: Vec<ProblemConfig>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    pub identity: Option<IdentityConfig>,
    pub inversion: Option<InversionConfig>,
    pub caplygin: Option<CaplyginConfig>,
    pub perturbation: Option<PerturbationConfig>,
    pub hausdorff: Option<HausdorffConfig>,
    pub table: Option<TableConfig>,
}

impl RunConfig {
    pub fn from_toml(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&src).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// The single problem of `[problem]`, or the only entry of `[[problems]]`.
    pub fn single_problem(&self) -> Result<&ProblemConfig, CliError> {
        match (&self.problem, self.problems.as_slice()) {
            (Some(p), []) => Ok(p),
            (None, [p]) => Ok(p),
            (None, []) => Err(CliError::Config("missing [problem] table".into())),
            _ => Err(CliError::Config("expected exactly one problem".into())),
        }
    }

    /// Exactly `count` problems from `[[problems]]`.
    pub fn problem_list(&self, count: usize) -> Result<&[ProblemConfig], CliError> {
        if self.problem.is_some() || self.problems.len() != count {
            return Err(CliError::Config(format!(
                "this command needs exactly {count} [[problems]] entries, found {}",
                self.problems.len() + usize::from(self.problem.is_some())
            )));
        }
        Ok(&self.problems)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, CliError> {
        let s = &self.solver;
        if !(s.tol > 0.0) || s.max_iter == 0 {
            return Err(CliError::Config("solver.tol must be > 0 and solver.max_iter >= 1".into()));
        }
        Ok(SolverOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            map: match s.map {
                MapChoice::Theta => IterationMap::Theta,
                MapChoice::Phi => IterationMap::Phi,
            },
        })
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, CliError> {
        let v = &self.verify;
        Ok(VerifyOptions {
            n: self.mesh.n,
            grading: self.mesh.grading,
            solver: self.solver_options()?,
            probes: v.probes,
            seed: self.seed,
            slack: v.slack,
            bound_slack: v.bound_slack,
            boundary_layer: v.boundary_layer,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Grading exponent; the order-dependent default when absent.
    pub grading: Option<f64>,
}

fn default_n() -> usize {
    512
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { n: default_n(), grading: None }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MapChoice {
    #[default]
    Theta,
    Phi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub map: MapChoice,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    200
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: default_tol(), max_iter: default_max_iter(), map: MapChoice::Theta }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_slack")]
    pub slack: f64,
    #[serde(default = "five_percent")]
    pub bound_slack: f64,
    #[serde(default = "five_percent")]
    pub boundary_layer: f64,
}

fn default_probes() -> usize {
    64
}

fn default_slack() -> f64 {
    5e-3
}

fn five_percent() -> f64 {
    0.05
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            probes: default_probes(),
            slack: default_slack(),
            bound_slack: five_percent(),
            boundary_layer: five_percent(),
        }
    }
}

/// A built-in label, or a user map given by Ψ and Ψ′ as expressions in t.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PsiConfig {
    Builtin(String),
    Custom { psi: String, derivative: String },
}

impl Default for PsiConfig {
    fn default() -> Self {
        PsiConfig::Builtin("identity".into())
    }
}

impl PsiConfig {
    pub fn build(&self) -> Result<PsiMap, CliError> {
        match self {
            PsiConfig::Builtin(label) => Ok(PsiMap::builtin(label)?),
            PsiConfig::Custom { psi, derivative } => {
                let f = Expr::parse(psi, &["t"])?;
                let g = Expr::parse(derivative, &["t"])?;
                Ok(PsiMap::custom(psi.clone(), move |t| f.eval(&[t]), move |t| g.eval(&[t])))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhsConfig {
    /// Expression in t and x (u is accepted as a synonym for x).
    pub expr: String,
    #[serde(default)]
    pub lipschitz: f64,
    #[serde(default = "yes")]
    pub monotone: bool,
}

fn yes() -> bool {
    true
}

impl Default for RhsConfig {
    fn default() -> Self {
        RhsConfig { expr: "0".into(), lipschitz: 0.0, monotone: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatorConfig {
    Zero {},
    Constant {
        value: f64,
    },
    /// 𝒰x(t) = k·x(t)
    Pointwise {
        k: f64,
    },
    /// 𝒰x(t) = x(b); not causal, for exercising the hypothesis gate.
    Endpoint {},
    /// (1/Γ(μ))∫ G^μ_Ψ(t, s) A(t, s, x(s), x(a + λ(s − a))) ds
    Pantograph {
        kernel: String,
        lambda: f64,
        lipschitz: f64,
        #[serde(default = "yes")]
        monotone: bool,
    },
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self::Zero {}
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub psi: PsiConfig,
    pub mu: f64,
    #[serde(default = "one")]
    pub nu: f64,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "one")]
    pub b: f64,
    pub x0: f64,
    pub xi: f64,
    #[serde(default)]
    pub f: RhsConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    /// Constant added to the operator output.
    #[serde(default)]
    pub operator_shift: f64,
}

fn one() -> f64 {
    1.0
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemSpec, CliError> {
        let psi = self.psi.build()?;
        let ord = FracOrder::new(self.mu, self.nu)?;
        let f = RhsFunction::from_expr(&self.f.expr, self.f.lipschitz, self.f.monotone)?;
        let mut op: Arc<dyn VolterraOperator> = match &self.operator {
            OperatorConfig::Zero {} => Arc::new(ZeroOperator),
            OperatorConfig::Constant { value } => Arc::new(ConstantOperator(*value)),
            OperatorConfig::Pointwise { k } => Arc::new(PointwiseOperator(*k)),
            OperatorConfig::Endpoint {} => Arc::new(EndpointOperator),
            OperatorConfig::Pantograph { kernel, lambda, lipschitz, monotone } => {
                let k = PantographKernel::from_expr(kernel, *lambda, *lipschitz, *monotone, self.mu, psi.clone())?;
                Arc::new(PantographOperator::new(k))
            }
        };
        if self.operator_shift != 0.0 {
            op = Arc::new(OffsetOperator { inner: op, offset: self.operator_shift });
        }
        Ok(ProblemSpec::new(psi, ord, self.a, self.b, self.x0, f, op, self.xi)?)
    }

    pub fn pantograph_kernel(&self) -> Result<Option<PantographKernel>, CliError> {
        match &self.operator {
            OperatorConfig::Pantograph { kernel, lambda, lipschitz, monotone } => Ok(Some(PantographKernel::from_expr(
                kernel,
                *lambda,
                *lipschitz,
                *monotone,
                self.mu,
                self.psi.build()?,
            )?)),
            _ => Ok(None),
        }
    }
}

/// ML-integral identity sweep on [0, 1].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentityConfig {
    #[serde(default = "all_psis")]
    pub psi: Vec<String>,
    pub mu: Vec<f64>,
    pub xi: Vec<f64>,
    #[serde(default = "default_points")]
    pub t: Vec<f64>,
    #[serde(default = "identity_tol")]
    pub tol: f64,
}

fn all_psis() -> Vec<String> {
    ["identity", "t^2", "exp", "log1p"].map(String::from).to_vec()
}

fn default_points() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

fn identity_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// x ≡ 1
    One,
    /// x = Ψ(t) − Ψ(a)
    Psi,
}

/// Inversion identity sweep on [0, 1].
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionConfig {
    #[serde(default = "identity_only")]
    pub psi: Vec<String>,
    pub mu: f64,
    pub nu: Vec<f64>,
    #[serde(default = "both_functions")]
    pub functions: Vec<TestFunction>,
    #[serde(default = "inversion_tol")]
    pub tol: f64,
}

fn identity_only() -> Vec<String> {
    vec!["identity".into()]
}

fn both_functions() -> Vec<TestFunction> {
    vec![TestFunction::One, TestFunction::Psi]
}

fn inversion_tol() -> f64 {
    1e-3
}

/// The subsolution solves the problem with f − kappa and datum x0 − delta.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaplyginConfig {
    #[serde(default = "tenth")]
    pub kappa: f64,
    #[serde(default = "tenth")]
    pub delta: f64,
}

fn tenth() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub eta1: f64,
    #[serde(default)]
    pub eta2: f64,
    #[serde(default)]
    pub eta3: f64,
}

impl PerturbationConfig {
    pub fn build(&self) -> Result<PerturbationSpec, CliError> {
        Ok(PerturbationSpec::new(self.eta1, self.eta2, self.eta3)?)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HausdorffConfig {
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum TableTarget {
    /// I^μ of (Ψ − Ψ(a))^{kμ} against its closed form
    #[default]
    Power,
    /// Picard solve of `[problem]` against a reference solve
    Solve,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    #[serde(default)]
    pub target: TableTarget,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    #[serde(default)]
    pub psi: PsiConfig,
    #[serde(default = "table_mu")]
    pub mu: f64,
    #[serde(default = "table_k")]
    pub k: u32,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            target: TableTarget::Power,
            ns: default_ns(),
            psi: PsiConfig::default(),
            mu: table_mu(),
            k: table_k(),
        }
    }
}

fn default_ns() -> Vec<usize> {
    vec![128, 256, 512, 1024]
}

fn table_mu() -> f64 {
    0.3
}

fn table_k() -> u32 {
    2
}
