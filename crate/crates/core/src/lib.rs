//! Mixed finite element discretization of the Stokes eigenvalue problem in
//! velocity-pressure-pseudostress form.

pub mod assembly;
pub mod eigsolve;
pub mod error;
pub mod mesh;
pub mod refelem;
pub mod space;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use mesh::{disk_mesh, lshape_mesh, unit_square_mesh, DomainKind, Mesh};
pub use space::{build_pressure_space, build_pseudostress_space, build_trace_constraint, build_velocity_space, FeSpace, Scheme};
pub use assembly::{build_eig_system, EigSystem, Formulation};
pub use eigsolve::{filter_spectrum, solve_generalized, solve_generalized_with, SolverKind, SolverOptions, Spectrum};
pub use study::{check_spurious_free, compare_reference, fit_order, recover_pressure, run_convergence_study, ConvergenceReport, ReferenceTable, StudyConfig, Tolerances};
