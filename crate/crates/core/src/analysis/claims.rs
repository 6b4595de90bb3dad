//! Numerical checks of the analytic facts behind the variance-proxy bound.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::rng::StreamId;
use crate::special::{binomial_point, ln_gamma};

use super::{binomial_se, AnalysisError, SE_MARGIN};

/// `f(alpha) = alpha ln(x/alpha) + (1-alpha) ln((1-x)/(1-alpha))`, the
/// negated Kullback–Leibler divergence between Bernoulli(alpha) and
/// Bernoulli(x). Written with `ln_1p` so that it stays accurate near the
/// diagonal.
pub fn f_alpha(x: f64, alpha: f64) -> f64 {
    let left = if alpha == 0.0 { 0.0 } else { alpha * ((x - alpha) / alpha).ln_1p() };
    let right = if alpha == 1.0 { 0.0 } else { (1.0 - alpha) * ((alpha - x) / (1.0 - alpha)).ln_1p() };
    left + right
}

fn f_ratio(x: f64, alpha: f64) -> f64 {
    let gap = (x - alpha).abs();
    let quad = (1.0 / x + 1.0 / (1.0 - x)) * gap * gap;
    -f_alpha(x, alpha) / gap.min(quad)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FCheck {
    pub grid_points: usize,
    pub max_f: f64,
    /// Largest `|f(x)|` on the diagonal.
    pub diagonal_max_abs: f64,
    /// Smallest `-f(alpha) / min(|x - alpha|, (1/x + 1/(1-x)) (x - alpha)^2)`
    /// off the diagonal.
    pub c_hat: f64,
    pub c_hat_at: (f64, f64),
    /// `f(1/4)` at `x = 1/2` and its ratio.
    pub spot_value: f64,
    pub spot_ratio: f64,
    pub passed: bool,
}

/// Log-uniform points in `[1e-6, 1/2]`, mirrored into `[1/2, 1 - 1e-6]`.
fn mirrored_grid(resolution: usize) -> Vec<f64> {
    let half = resolution / 2 + 1;
    let (lo, hi) = (1e-6f64.ln(), 0.5f64.ln());
    let lower: Vec<f64> =
        (0..half).map(|i| (lo + (hi - lo) * i as f64 / (half - 1) as f64).exp()).collect();
    let mut grid = lower.clone();
    grid.pop();
    grid.push(0.5);
    grid.extend(lower[..half - 1].iter().rev().map(|u| 1.0 - u));
    grid
}

pub fn check_f_inequality(resolution: usize) -> Result<FCheck, AnalysisError> {
    if resolution < 100 {
        return Err(AnalysisError::InvalidParameter(format!(
            "grid resolution must be at least 100, got {resolution}"
        )));
    }
    let grid = mirrored_grid(resolution);
    let mut max_f = f64::NEG_INFINITY;
    let mut diagonal_max_abs = 0.0f64;
    let mut c_hat = f64::INFINITY;
    let mut c_hat_at = (0.0, 0.0);
    for &x in &grid {
        for &alpha in &grid {
            let f = f_alpha(x, alpha);
            max_f = max_f.max(f);
            if alpha == x {
                diagonal_max_abs = diagonal_max_abs.max(f.abs());
                continue;
            }
            let r = f_ratio(x, alpha);
            if r < c_hat {
                c_hat = r;
                c_hat_at = (x, alpha);
            }
        }
    }
    Ok(FCheck {
        grid_points: grid.len(),
        max_f,
        diagonal_max_abs,
        c_hat,
        c_hat_at,
        spot_value: f_alpha(0.5, 0.25),
        spot_ratio: f_ratio(0.5, 0.25),
        passed: max_f <= 0.0 && diagonal_max_abs == 0.0 && c_hat > 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StirlingCheck {
    pub samples: usize,
    pub max_abs_delta: f64,
    /// Largest `|delta| / rhs` with implied constant one.
    pub max_ratio: f64,
    pub max_ratio_at: (f64, usize, usize),
    /// Largest relative gap between `|p(x,t,h) - p(x,t,h+1)|` and its
    /// factored form.
    pub identity_max_rel_error: f64,
    pub passed: bool,
}

/// `ln |p(x,t,h) - p(x,t,h+1)|` through
/// `t!/((h+1)!(t-h)!) x^h (1-x)^(t-h-1) |(1-x)(h+1) - x(t-h)|`.
fn ln_delta_factored(x: f64, t: usize, h: usize) -> f64 {
    let (tf, hf) = (t as f64, h as f64);
    ln_gamma(tf + 1.0) - ln_gamma(hf + 2.0) - ln_gamma(tf - hf + 1.0)
        + hf * x.ln()
        + (tf - hf - 1.0) * (-x).ln_1p()
        + ((1.0 - x) * (hf + 1.0) - x * (tf - hf)).abs().ln()
}

/// `ln [ (|t(alpha - x)| + 3) / (alpha (1-alpha) t)^(3/2) * exp(f(alpha) (t-1)) ]`
/// with `alpha = h/(t-1)`.
fn ln_stirling_rhs(x: f64, t: usize, h: usize) -> f64 {
    let tf = t as f64;
    let alpha = h as f64 / (tf - 1.0);
    ((tf * (alpha - x)).abs() + 3.0).ln() - 1.5 * (alpha * (1.0 - alpha) * tf).ln()
        + f_alpha(x, alpha) * (tf - 1.0)
}

/// Samples `(x, t, h)` with `t` in `3..=400`, `0 < h < t - 1`.
pub fn check_stirling_delta(samples: usize, seed: u64) -> Result<StirlingCheck, AnalysisError> {
    if samples < 1000 {
        return Err(AnalysisError::InvalidParameter(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    let mut rng = StreamId::new(seed, 0).rng();
    let mut out = StirlingCheck {
        samples,
        max_abs_delta: 0.0,
        max_ratio: 0.0,
        max_ratio_at: (0.0, 0, 0),
        identity_max_rel_error: 0.0,
        passed: false,
    };
    for _ in 0..samples {
        let t: usize = rng.random_range(3..=400);
        let h: usize = rng.random_range(1..=t - 2);
        let x: f64 = rng.random_range(1e-9..1.0);
        let delta = binomial_point(x, t, h as i64) - binomial_point(x, t, h as i64 + 1);
        out.max_abs_delta = out.max_abs_delta.max(delta.abs());
        let ln_l = ln_delta_factored(x, t, h);
        if delta.abs() > 1e-250 {
            let rel = (delta.abs().ln() - ln_l).abs();
            // cancellation in the direct difference grows with t / |delta|
            if delta.abs() > 1e-8 {
                out.identity_max_rel_error = out.identity_max_rel_error.max(rel);
            }
        }
        let ratio = (ln_l - ln_stirling_rhs(x, t, h)).exp();
        if ratio > out.max_ratio {
            out.max_ratio = ratio;
            out.max_ratio_at = (x, t, h);
        }
    }
    out.passed = out.max_abs_delta <= 1.0 && out.max_ratio.is_finite() && out.identity_max_rel_error < 1e-6;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimFrequency {
    pub events: usize,
    pub reps: usize,
    pub frequency: f64,
    pub standard_error: f64,
    pub bound: f64,
    pub holds: bool,
}

impl ClaimFrequency {
    fn new(events: usize, reps: usize, bound: f64) -> Self {
        let frequency = events as f64 / reps as f64;
        let standard_error = binomial_se(frequency, reps);
        Self { events, reps, frequency, standard_error, bound, holds: frequency <= bound + SE_MARGIN * standard_error }
    }
}

/// Frequencies of the three interval-occupancy events for `m` uniforms on
/// `[0, 1)`, with the fixed subinterval `[0, h/m)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalClaims {
    pub m: usize,
    pub h: f64,
    pub kappa: f64,
    /// `sqrt(kappa max(h, kappa))`.
    pub deviation: f64,
    /// Count outside `[h - deviation, h + deviation]`; bound `exp(-kappa/3)`.
    pub count_deviation: ClaimFrequency,
    /// More than `2h` points; bound `exp(-h/3)`.
    pub overfill: ClaimFrequency,
    /// Some gap of length at least `h/m`, ends included; bound `3m exp(-h/3)`.
    pub empty_gap: ClaimFrequency,
    pub passed: bool,
}

/// `kappa` defaults to `ln m` when `None`.
pub fn interval_claims_stats(
    m: usize,
    h: f64,
    reps: usize,
    seed: u64,
    kappa: Option<f64>,
) -> Result<IntervalClaims, AnalysisError> {
    if m < 100 || reps < 100 {
        return Err(AnalysisError::InvalidParameter(format!(
            "need m >= 100 and reps >= 100, got m = {m}, reps = {reps}"
        )));
    }
    if !(h > 1.0 && h <= m as f64) {
        return Err(AnalysisError::InvalidParameter(format!("need 1 < h <= m, got h = {h}")));
    }
    let kappa = kappa.unwrap_or((m as f64).ln());
    if !(kappa > 0.0) {
        return Err(AnalysisError::InvalidParameter(format!("kappa must be positive, got {kappa}")));
    }
    let deviation = (kappa * h.max(kappa)).sqrt();
    let width = h / m as f64;
    let outcomes: Vec<(bool, bool, bool)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamId::new(seed, r).rng();
            let mut xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let inside = xs.iter().filter(|&&x| x < width).count() as f64;
            xs.sort_by(f64::total_cmp);
            let mut gap = xs[0].max(1.0 - xs[m - 1]);
            for w in xs.windows(2) {
                gap = gap.max(w[1] - w[0]);
            }
            ((inside - h).abs() > deviation, inside > 2.0 * h, gap >= width)
        })
        .collect();
    let count = |f: fn(&(bool, bool, bool)) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let count_deviation = ClaimFrequency::new(count(|o| o.0), reps, (-kappa / 3.0).exp());
    let overfill = ClaimFrequency::new(count(|o| o.1), reps, (-h / 3.0).exp());
    let empty_gap = ClaimFrequency::new(count(|o| o.2), reps, 3.0 * m as f64 * (-h / 3.0).exp());
    let passed = count_deviation.holds && overfill.holds && empty_gap.holds;
    Ok(IntervalClaims { m, h, kappa, deviation, count_deviation, overfill, empty_gap, passed })
}
