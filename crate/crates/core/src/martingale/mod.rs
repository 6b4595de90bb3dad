//! Vertex-exposure Doob martingale for `X = m(H, k)`.
//!
//! Vertices are revealed in an order `pi`; after `j` reveals,
//! `X_j = E[X | x(pi(1)), ..., x(pi(j))]`. Everything here is computed
//! exactly (up to floating point) from the binomial structure of the model:
//!
//! * a revealed vertex `v` with `t` unrevealed neighbours, `h` of its
//!   revealed neighbours above `1 - x(v)`, has conditional probability
//!   `p(x(v), t, k - h)` of ending with degree `k`;
//! * an unrevealed vertex integrates that over its own weight, piecewise
//!   between the thresholds `1 - x(w)` of its revealed neighbours.
//!
//! Revealing `pi(j)` only moves the conditional means of `pi(j)` and its
//! neighbours, so each step touches `d + 1` vertices.
//!
//! The conditional second moment `E[Y_j^2 | F_{j-1}]` integrates the square
//! of the increment over the candidate weight of `pi(j)`. As a function of
//! that weight the increment is piecewise polynomial of degree at most `d`,
//! with breakpoints at `1 - x(u)` for revealed neighbours `u` of `pi(j)` and
//! at `x(w)` for revealed neighbours `w` of unrevealed neighbours of `pi(j)`.
//! Splitting at all of them and using `D + 1` Gauss–Legendre nodes per piece,
//! where `D` bounds the piece degree, makes the quadrature exact.

mod state;
mod step;
mod trace;

pub use state::RevealState;
pub use step::{
    cond_indicator_mean, cond_sq_increment, decompose_increment, martingale_step, step_moments,
    StepMoments,
};
pub use trace::{random_order, run_trace, trace_for_stream, MartingaleTrace, TraceOrder};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MartingaleError {
    #[error("vertex order is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("weight vector has length {found}, graph has {expected} vertices")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("step {got} requested but the next reveal is step {expected}")]
    OutOfOrderReveal { expected: usize, got: usize },
    #[error("all vertices are already revealed")]
    Exhausted,
    #[error("degree {k} exceeds d = {d}")]
    DegreeOutOfRange { k: usize, d: usize },
    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error(
        "quadrature did not converge at step {step}: relative difference {achieved:.3e} \
         under node doubling exceeds {tolerance:.1e}"
    )]
    QuadratureNonConvergence { step: usize, achieved: f64, tolerance: f64 },
    #[error("Bernstein bound needs a > 0, L > 0 and z >= 0 (z = {z}, a = {a}, L = {l})")]
    InvalidBernsteinArguments { z: f64, a: f64, l: f64 },
}

/// How `E[Y_j^2 | F_{j-1}]` and its decomposition are integrated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per piece. `None` picks `D + 1` for pieces of
    /// polynomial degree `D`, which is exact.
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Relative tolerance for the node-doubling check.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Re-integrate with twice the nodes and compare.
    #[serde(default = "default_verify")]
    pub verify: bool,
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_verify() -> bool {
    true
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { nodes: None, tolerance: default_tolerance(), verify: true }
    }
}

impl QuadratureSpec {
    /// Degree-exact rule without the doubling pass.
    pub fn fast() -> Self {
        Self { verify: false, ..Self::default() }
    }
}

/// `exp(-(1/2) (z/a)^2 / (L/a^2 + z/a))`: the exponential term of the
/// martingale Bernstein (Freedman) inequality.
///
/// Bounds `P[max_i |X_i - X_0| >= z, M_n <= L]` once the probability that
/// some increment exceeds `a` is added.
pub fn bernstein_tail(z: f64, a: f64, l: f64) -> Result<f64, MartingaleError> {
    if !(z >= 0.0 && a > 0.0 && l > 0.0) {
        return Err(MartingaleError::InvalidBernsteinArguments { z, a, l });
    }
    let r = z / a;
    if r == 0.0 {
        return Ok(1.0);
    }
    Ok((-0.5 * r * r / (l / (a * a) + r)).exp())
}
