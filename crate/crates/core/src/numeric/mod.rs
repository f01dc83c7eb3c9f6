//! Small self-contained numerical kernels, generic over [`Real`](crate::Real).

pub mod cubic;
pub mod dopri;
pub mod golden;
pub mod linsolve;

pub use cubic::{real_cubic_roots, CubicRoots};
pub use dopri::{integrate_sampled, OdeSystem, SampledRun, StepStats, Tolerances};
pub use golden::{golden_section_max, GoldenResult};
pub use linsolve::{solve3, Solved3};
