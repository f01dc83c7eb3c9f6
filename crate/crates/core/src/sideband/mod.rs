//! First- and second-order sideband amplitudes under a weak probe.
//!
//! Two routes are provided: the closed forms in [`closed_form`] and an
//! order-by-order harmonic balance in [`hierarchical`]. They are
//! algebraically identical after truncation at second order in the probe,
//! and the test suites hold them against each other.
//!
//! Sign convention for the intra-cavity field of cavity A:
//!
//! ```text
//! a(t) = a_s + A1- e^{-iΩt} + A1+ e^{iΩt} + A2- e^{-2iΩt} + A2+ e^{2iΩt}
//! ```

pub mod closed_form;
pub mod hierarchical;
pub mod response;

use serde::Serialize;

use crate::real::{Real, C};

pub use closed_form::{closed_form, first_order, second_order, FirstOrder, SecondOrder};
pub use hierarchical::{elimination_kernels, hierarchical_solve};
pub use response::{response_functions, ResponseFunctions, ResponsePair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Hierarchical,
}

/// Cavity-B and atomic harmonics, recovered from the A harmonics through the
/// linearised B and C equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Eliminated<T> {
    #[serde(rename = "B1_minus")]
    pub b1_minus: C<T>,
    #[serde(rename = "B1_plus")]
    pub b1_plus: C<T>,
    #[serde(rename = "B2_minus")]
    pub b2_minus: C<T>,
    #[serde(rename = "B2_plus")]
    pub b2_plus: C<T>,
    #[serde(rename = "C1_minus")]
    pub c1_minus: C<T>,
    #[serde(rename = "C1_plus")]
    pub c1_plus: C<T>,
    #[serde(rename = "C2_minus")]
    pub c2_minus: C<T>,
    #[serde(rename = "C2_plus")]
    pub c2_plus: C<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SidebandSolution<T> {
    /// Probe-pump detuning Ω (rad/s).
    pub omega: T,
    #[serde(rename = "A1_minus")]
    pub a1_minus: C<T>,
    #[serde(rename = "A1_plus")]
    pub a1_plus: C<T>,
    #[serde(rename = "A2_minus")]
    pub a2_minus: C<T>,
    #[serde(rename = "A2_plus")]
    pub a2_plus: C<T>,
    /// Mechanical harmonics in metres.
    #[serde(rename = "X1")]
    pub x1: C<T>,
    #[serde(rename = "X2")]
    pub x2: C<T>,
    /// Mechanical harmonics in zero-point units.
    pub x1_zpf: C<T>,
    pub x2_zpf: C<T>,
    pub eliminated: Option<Eliminated<T>>,
    pub method: Method,
}

impl<T: Real> SidebandSolution<T> {
    pub fn eliminated(&self) -> Option<&Eliminated<T>> {
        self.eliminated.as_ref()
    }
}
