//! Energies: the restoration objective minimized by the solver, and the
//! resolution-weighted discrete energy with its continuous limit.

pub mod continuous;
pub mod convergence;
pub mod discrete;
pub mod fields;
pub mod model;
pub mod sampling;

pub use continuous::{
    continuous_energy, gauss_legendre, ContinuousEnergy, HarnessOperator, QuadratureOptions,
};
pub use convergence::{
    convergence_experiment, convergence_table, semi_discrete_energy, ConvergenceOptions,
    ConvergenceRow, ConvergenceTable,
};
pub use discrete::{a2_weights, discrete_energy, dominates, Boundary, EnergySpec, EnergyTerms};
pub use fields::{check_partials, Field, SeparableTerm, TestFunctionPair, Univariate};
pub use model::{model_energy, ModelEnergy};
pub use sampling::{
    index_range, interior_range, sample_t_n, sample_t_n_unchecked, GridSamples, REFINEMENT_TOL,
};
