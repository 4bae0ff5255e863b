//! The very thin obstacle problem: constraint on the codimension-two line
//! `{x_n = 0, y = 0}`, which only makes sense for `a < 0`.

pub mod barrier;
pub mod equivalence;
pub mod extend;
pub mod flux;
pub mod fractional;
pub mod homogeneous;
pub mod kernel;
pub mod line;

pub use barrier::{barrier, barrier_profile, holder_exponent, BarrierReport, HolderFit, HolderOptions};
pub use equivalence::{equivalence_chain, EquivalenceOptions, EquivalenceReport};
pub use extend::{extend, Extension};
pub use flux::{f_a_flux, predicted_flux_constant, weighted_circle_length, FluxEstimate, FluxOptions};
pub use fractional::{fractional_laplacian, solve_fractional_obstacle, FractionalObstacleOptions, LineSolution};
pub use homogeneous::{verify_homogeneous_2d, HomogeneityClass, HomogeneousVerdict};
pub use kernel::{kernel_eval, kernel_mass, KernelSpec};
pub use line::LineFunction;
