//! Sparse computer algebra for weighted symmetric Fock series: the Wick
//! convolution product, a loop-space Poisson bracket, the associated formal
//! deformation with closed-form slot operators, a diagonally perturbed
//! variant with its gauge transform, dense reference evaluators, and
//! numerical summability and continuity diagnostics.
//!
//! Exact complex-rational arithmetic is the default; a float mode exists
//! for scale experiments. Every randomized routine is seeded and
//! reproducible.

pub mod basis;
pub mod bracket;
pub mod checks;
pub mod deform;
pub mod error;
pub mod io;
pub mod model;
pub mod multiindex;
pub mod norms;
pub mod oracle;
pub mod sample;
pub mod scalar;
pub mod series;
pub mod star;
pub mod suite;

pub use basis::BasisIndex;
pub use bracket::{c1a, e_a_form, poisson_bracket};
pub use checks::{
    associativity_residual, calibrate, exchange_check, gauge_equivalence_check, gauge_residual,
    CalibrationOutcome, ResidualReport, Tamper,
};
pub use deform::{DeformationSeries, StarConvention};
pub use error::{CoreError, Result};
pub use model::{omega_inverse_entry, DiagonalOperator, LambdaSpec, SymplecticModel};
pub use multiindex::MultiIndex;
pub use norms::{
    continuity_probe, hida_norm, hs_embedding_norm, nuclearity_sum, NormParams, ProbeOp,
    ProbeReport, SampleSpec, SummabilityParams, SummabilityReport,
};
pub use oracle::{oracle_eval, DenseFockVector, DenseSpace, OracleOp};
pub use scalar::{ExactScalar, FloatScalar, Rat, Scalar, ScalarMode};
pub use series::{linear_combine, sum_series, wick_exponential, FockSeries};
pub use star::{d_star, p_l, star, star_a, t1, t_prime, t_prime_deform, StarKind};
pub use suite::{
    axioms_suite, exchange_suite, gauge_suite, norms_suite, oracle_suite, poisson_suite,
    star_suite, wick_suite, CheckLine, SuiteReport,
};
