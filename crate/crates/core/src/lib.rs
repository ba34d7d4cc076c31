//! Fractional functional differential equations with abstract Volterra
//! operators, posed with the Ψ-Hilfer derivative and solved as the equivalent
//! weakly singular Volterra integral equation by Picard iteration in
//! Mittag-Leffler weighted (Bielecki) metrics.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod hilfer;
pub mod mesh;
pub mod psi;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod verify;
pub mod volterra;
pub mod weighted;

pub use error::{Error, Result};
pub use expr::Expr;
pub use hilfer::{hilfer_derivative, initial_datum, inversion_defect};
pub use mesh::{GradedMesh, GridFunction, PsiGrid};
pub use psi::{FracOrder, PsiMap};
pub use quadrature::{frac_integral, frac_integral_at, kernel, resolvent, ProductRule};
pub use solver::{
    c_constant, contraction_factor, iterate_datum, picard_solve, ContractionFactors, IterationMap, PicardSolver,
    ProblemSpec, SolverOptions, SolverReport,
};
pub use special::{gamma, ln_gamma, ml1, ml2, MLParams, ML_Z_MAX};
pub use verify::{
    check_caplygin, check_comparison, data_dependence_bound, hausdorff_bound, perturbed_subsolution, CaplyginReport,
    ComparisonReport, DataDependenceReport, HausdorffReport, PerturbationSpec, VerifyOptions,
};
pub use volterra::{
    causality_check, check_condition_d, check_condition_d_on, pantograph_apply, ConstantOperator, EndpointOperator,
    OffsetOperator, PantographKernel, PantographOperator, PointwiseOperator, RhsFunction, VolterraOperator, ZeroOperator,
};
pub use weighted::{bielecki_metric, bielecki_norm, special_case_weight, BieleckiWeight, WeightKind};
