//! P1 finite elements: coefficient fields, sources, assembly and solves.

mod coefficient;
mod field;
mod solve;
mod source;
mod sparse;

pub use coefficient::{CoefficientField, SymMatrix};
pub use field::DiscreteField;
pub use solve::{
    assemble_load, assemble_stiffness, conjugate_gradient, pair_source, quadratic_energy, solve_dirichlet,
    BuiltPreconditioner, DirichletSystem, Preconditioner, Solution, SolveStats, SolverOptions,
};
pub use source::SourceTerm;
pub use sparse::CsrMatrix;
