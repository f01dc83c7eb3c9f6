//! Sideband generation in a gain/loss coupled-cavity optomechanical system
//! with an embedded atomic ensemble.
//!
//! The crate solves the pumped steady state, the first- and second-order
//! sideband amplitudes driven by a weak probe, derived transmission and
//! efficiency observables, parameter sweeps, and a time-domain integrator
//! used as an independent check.
//!
//! Kernels are generic over the scalar ([`Real`]); the aliases at the crate
//! root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constants;
pub mod error;
pub mod figures;
pub mod numeric;
pub mod observables;
pub mod oracle;
pub mod params;
pub mod provenance;
pub mod real;
pub mod selftest;
pub mod sideband;
pub mod steady_state;
pub mod sweep;

pub use error::{Error, ErrorKind, Result};
pub use figures::{figure_data, reproduce_figure, write_figure, FigureData, FIGURE_IDS};
pub use observables::{
    efficiencies, evaluate_point, spectrum, spectrum_on, transmission, write_spectrum_csv,
    Efficiencies, OutputFields, SpectrumPoint,
};
pub use params::{derive, load_config, ConfigDocument, DerivedQuantities, SystemParams};
pub use real::{Real, C};
pub use sideband::{
    closed_form, first_order, hierarchical_solve, response_functions, second_order, Method,
    ResponseFunctions, SidebandSolution,
};
pub use steady_state::{
    assess_linear_stability, field_denominator, intensity_polynomial, solve_steady_state,
    BranchPolicy, IntensityPolynomial, LinearStability, SteadyState,
};
pub use sweep::{run_sweep, Axis, Grid, Observable, SweepResult, SweepSpec};

pub type Params = SystemParams<f64>;
pub type Params32 = SystemParams<f32>;
pub type Derived = DerivedQuantities<f64>;
pub type Steady = SteadyState<f64>;
pub type Sidebands = SidebandSolution<f64>;
