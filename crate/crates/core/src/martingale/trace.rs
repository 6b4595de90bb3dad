use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::graph::Graph;
use crate::rng::StreamId;
use crate::sampler::WeightAssignment;

use super::step::{advance_cached, cond_indicator_mean, step_moments, StepMoments};
use super::{MartingaleError, QuadratureSpec, RevealState};

/// How the reveal order of a trace is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOrder {
    /// A fresh uniform permutation per trace.
    #[default]
    Random,
    /// `0, 1, ..., n-1`.
    Identity,
}

/// One run of the exposure martingale.
#[derive(Clone, Debug, PartialEq)]
pub struct MartingaleTrace {
    pub k: usize,
    pub order: Vec<usize>,
    pub weights: Vec<f64>,
    /// `X_0, ..., X_n`. `X_n` is the exact count `m(H, k)`.
    pub x_values: Vec<f64>,
    /// `Y_1, ..., Y_n` with `Y_j = X_j - X_{j-1}`.
    pub y_values: Vec<f64>,
    /// `E[Y_j^2 | F_{j-1}]`, present when the trace ran with quadrature.
    pub sq_increments: Option<Vec<f64>>,
    /// Partial sums `M_1, ..., M_n`.
    pub m_running: Option<Vec<f64>>,
    pub moments: Option<Vec<StepMoments>>,
    pub quadrature: Option<QuadratureSpec>,
    pub final_count: usize,
    /// Gap between the running sum of increments and the exact final count
    /// before the last increment was closed onto the count.
    pub rounding_residual: f64,
}

impl MartingaleTrace {
    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn x0(&self) -> f64 {
        self.x_values[0]
    }

    /// `M_n`, when quadrature was run.
    pub fn m_n(&self) -> Option<f64> {
        self.m_running.as_ref().map(|m| m.last().copied().unwrap_or(0.0))
    }

    pub fn max_abs_increment(&self) -> f64 {
        self.y_values.iter().fold(0.0, |acc, y| acc.max(y.abs()))
    }

    /// CSV with columns `j, X_j, Y_j, sq_increment, M_j`; row `j = 0` leaves
    /// the increment columns empty, as do traces run without quadrature.
    pub fn write_csv(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(out, "j,X_j,Y_j,sq_increment,M_j")?;
        writeln!(out, "0,{},,,", self.x_values[0])?;
        for j in 1..=self.n() {
            let sq = self.sq_increments.as_ref().map(|s| s[j - 1].to_string()).unwrap_or_default();
            let m = self.m_running.as_ref().map(|s| s[j - 1].to_string()).unwrap_or_default();
            writeln!(out, "{j},{},{},{sq},{m}", self.x_values[j], self.y_values[j - 1])?;
        }
        Ok(())
    }
}

/// A uniform permutation of `0..n`.
pub fn random_order(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Runs the martingale for the given order and weights. With `quad`, each
/// step also integrates the conditional moments before revealing.
pub fn run_trace(
    g: &Graph,
    order: Vec<usize>,
    w: &WeightAssignment,
    k: usize,
    quad: Option<&QuadratureSpec>,
) -> Result<MartingaleTrace, MartingaleError> {
    let n = g.n();
    if w.len() != n {
        return Err(MartingaleError::DimensionMismatch { expected: n, found: w.len() });
    }
    if k > g.d() {
        return Err(MartingaleError::DegreeOutOfRange { k, d: g.d() });
    }
    let mut state = RevealState::new(g, order)?;
    let mut cur: Vec<f64> = (0..n).map(|v| cond_indicator_mean(&state, v, k)).collect();
    let mut x_values = Vec::with_capacity(n + 1);
    x_values.push(cur.iter().sum::<f64>());
    let mut y_values = Vec::with_capacity(n);
    let mut moments = quad.map(|_| Vec::with_capacity(n));
    let x = w.values();
    for j in 1..=n {
        if let (Some(q), Some(out)) = (quad, moments.as_mut()) {
            out.push(step_moments(&state, k, q)?);
        }
        let v = state.next_vertex().ok_or(MartingaleError::Exhausted)?;
        let y = advance_cached(&mut state, x[v], k, &mut cur)?;
        y_values.push(y);
        x_values.push(x_values[j - 1] + y);
    }
    // every conditional mean is now an exact 0 or 1
    let final_count = cur.iter().filter(|&&c| c == 1.0).count();
    debug_assert!(cur.iter().all(|&c| c == 0.0 || c == 1.0));
    let rounding_residual = x_values[n] - final_count as f64;
    if n > 0 {
        x_values[n] = final_count as f64;
        y_values[n - 1] = x_values[n] - x_values[n - 1];
    }
    let sq_increments =
        moments.as_ref().map(|m| m.iter().map(|s| s.sq_increment).collect::<Vec<_>>());
    let m_running = sq_increments.as_ref().map(|s| {
        s.iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect()
    });
    Ok(MartingaleTrace {
        k,
        order: state.order().to_vec(),
        weights: x.to_vec(),
        x_values,
        y_values,
        sq_increments,
        m_running,
        moments,
        quadrature: quad.copied(),
        final_count,
        rounding_residual,
    })
}

/// Draws weights (as [`WeightAssignment::sample`] would) and then the
/// order from `stream`, and runs the trace.
pub fn trace_for_stream(
    g: &Graph,
    k: usize,
    stream: StreamId,
    order: TraceOrder,
    quad: Option<&QuadratureSpec>,
) -> Result<MartingaleTrace, MartingaleError> {
    let mut rng = stream.rng();
    let w = WeightAssignment::from_rng(g.n(), &mut rng);
    let order = match order {
        TraceOrder::Random => random_order(g.n(), &mut rng),
        TraceOrder::Identity => (0..g.n()).collect(),
    };
    run_trace(g, order, &w, k, quad)
}
