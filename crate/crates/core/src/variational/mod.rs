//! Variationally optimized product formulas.

pub mod ansatz;
pub mod dynamics;
pub mod eom;
pub mod integrator;
pub mod scope;
pub mod trajectory;

pub use ansatz::{Factor, ProductAnsatz, Sharing, Slot};
pub use dynamics::{magnetization_trajectory, select_ordering, OrderingReport, RankedAnsatz};
pub use eom::{eom_rhs_l1, eom_rhs_l2, force_vector, geometric_tensor, residual_norm, tangents, L1Solution, Tangents};
pub use integrator::{SolverOptions, SolverStats, Tolerances};
pub use scope::{krylov_basis, TraceScope};
pub use trajectory::{
    integrate_l1, integrate_l2, integrate_trajectory, uniform_grid, Lagrangian, ParameterTrajectory,
};
