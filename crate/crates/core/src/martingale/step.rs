use std::borrow::Cow;

use crate::quadrature::{GaussLegendre, MAX_CACHED_NODES};
use crate::sampler::edge_kept;
use crate::special::{binomial_point, segment_unchecked};

use super::{MartingaleError, QuadratureSpec, RevealState};

/// `E[I_v | F_j]` for the current prefix `j` of `state`.
///
/// Revealed `v`: `p(x(v), t(v, j), k - h(v, x(v), j))`. Unrevealed `v`: the
/// same expression integrated over `x(v)`, which is piecewise binomial between
/// the thresholds `1 - x(w)` of its revealed neighbours.
pub fn cond_indicator_mean(state: &RevealState<'_>, v: usize, k: usize) -> f64 {
    let t = state.unrevealed_neighbors(v);
    if let Some(xv) = state.weight(v) {
        let h = state.exceedances(v, xv);
        return binomial_point(xv, t, k as i64 - h as i64);
    }
    let weights = state.revealed_neighbor_weights(v);
    let r = weights.len();
    let mut lo = 0.0;
    let mut total = 0.0;
    for i in 0..=r {
        let hi = if i < r { 1.0 - weights[r - 1 - i] } else { 1.0 };
        total += segment_unchecked(lo, hi, t, k as i64 - i as i64);
        lo = hi;
    }
    total
}

fn expect_step(state: &RevealState<'_>, j: usize) -> Result<usize, MartingaleError> {
    let expected = state.prefix() + 1;
    if j != expected {
        return Err(MartingaleError::OutOfOrderReveal { expected, got: j });
    }
    state.next_vertex().ok_or(MartingaleError::Exhausted)
}

fn check_k(state: &RevealState<'_>, k: usize) -> Result<(), MartingaleError> {
    let d = state.graph().d();
    if k > d {
        return Err(MartingaleError::DegreeOutOfRange { k, d });
    }
    Ok(())
}

/// Reveals `x(pi(j)) = xj` and returns `Y_j`.
///
/// Only `pi(j)` and its neighbours change their conditional means, so
/// `Y_j` is the sum of at most `d + 1` differences of probabilities.
pub fn martingale_step(
    state: &mut RevealState<'_>,
    j: usize,
    xj: f64,
    k: usize,
) -> Result<f64, MartingaleError> {
    check_k(state, k)?;
    let w = expect_step(state, j)?;
    let g = state.graph();
    let touched: Vec<usize> =
        std::iter::once(w).chain(g.neighbors(w).iter().map(|&u| u as usize)).collect();
    let before: Vec<f64> = touched.iter().map(|&v| cond_indicator_mean(state, v, k)).collect();
    state.reveal(xj)?;
    Ok(touched.iter().zip(&before).map(|(&v, b)| cond_indicator_mean(state, v, k) - b).sum())
}

/// Same as [`martingale_step`], reading and updating cached conditional
/// means instead of recomputing the "before" side.
pub(crate) fn advance_cached(
    state: &mut RevealState<'_>,
    xj: f64,
    k: usize,
    cur: &mut [f64],
) -> Result<f64, MartingaleError> {
    let w = state.reveal(xj)?;
    let g = state.graph();
    let mut y = 0.0;
    for v in std::iter::once(w).chain(g.neighbors(w).iter().map(|&u| u as usize)) {
        let now = cond_indicator_mean(state, v, k);
        y += now - cur[v];
        cur[v] = now;
    }
    Ok(y)
}

/// Conditional moments of the next increment, integrated over the weight of
/// the vertex about to be revealed.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepMoments {
    /// `E[Y_j^2 | F_{j-1}]` for the full increment, including the change in
    /// the revealed vertex's own indicator.
    pub sq_increment: f64,
    /// The same with only the neighbours' changes, the sum written out in
    /// the `A_1`/`A_2` decomposition.
    pub neighbor_sq_increment: f64,
    /// `E[Y_j | F_{j-1}]`, zero up to rounding.
    pub mean_increment: f64,
    pub a1: f64,
    pub a2: f64,
    /// Pieces of the partition of `[0, 1]` for the reveal weight.
    pub pieces: usize,
    /// Gauss–Legendre nodes used per piece.
    pub nodes: usize,
}

/// A revealed neighbour `u` of the next vertex. Its conditional mean after
/// the reveal is `hi` if the edge to it is kept and `lo` otherwise.
struct RevealedNeighbor {
    x: f64,
    lo: f64,
    hi: f64,
    cur: f64,
}

impl RevealedNeighbor {
    fn delta(&self) -> f64 {
        self.hi - self.lo
    }
}

/// An unrevealed neighbour `v` of the next vertex.
///
/// With `c = 1 - y`, its conditional mean after the reveal is
/// `int_0^c p(z, t, k - h(z)) dz + int_c^1 p(z, t, k - 1 - h(z)) dz`, where
/// `h(z)` is constant between consecutive `breaks`. `lower` and `upper` hold
/// prefix and suffix sums of the two integrands over whole pieces.
struct UnrevealedNeighbor {
    t: usize,
    breaks: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cur: f64,
}

impl UnrevealedNeighbor {
    fn new(state: &RevealState<'_>, v: usize, k: usize) -> Self {
        let t = state.unrevealed_neighbors(v) - 1;
        let weights = state.revealed_neighbor_weights(v);
        let mut breaks = Vec::with_capacity(weights.len() + 2);
        breaks.push(0.0);
        breaks.extend(weights.iter().rev().map(|x| 1.0 - x));
        breaks.push(1.0);
        let pieces = breaks.len() - 1;
        let k = k as i64;
        let mut lower = vec![0.0; pieces + 1];
        for p in 0..pieces {
            lower[p + 1] = lower[p] + segment_unchecked(breaks[p], breaks[p + 1], t, k - p as i64);
        }
        let mut upper = vec![0.0; pieces + 1];
        for p in (0..pieces).rev() {
            upper[p] = upper[p + 1] + segment_unchecked(breaks[p], breaks[p + 1], t, k - 1 - p as i64);
        }
        Self { t, breaks, lower, upper, cur: cond_indicator_mean(state, v, k as usize) }
    }

    fn piece_of(&self, z: f64) -> usize {
        let interior = &self.breaks[1..self.breaks.len() - 1];
        interior.partition_point(|&b| b <= z)
    }

    fn after_reveal(&self, y: f64, k: usize) -> f64 {
        let c = 1.0 - y;
        let i = self.piece_of(c);
        let h = k as i64 - i as i64;
        self.lower[i]
            + segment_unchecked(self.breaks[i], c, self.t, h)
            + segment_unchecked(c, self.breaks[i + 1], self.t, h - 1)
            + self.upper[i + 1]
    }

    fn delta(&self, z: f64, piece: usize, k: usize) -> f64 {
        let h = k as i64 - piece as i64;
        binomial_point(z, self.t, h - 1) - binomial_point(z, self.t, h)
    }

    /// `int_0^1 delta(z)^2 z (1 - z) dz`: the diagonal part of `A_2`.
    fn delta_variance(&self, k: usize, rule: &GaussLegendre) -> f64 {
        (0..self.breaks.len() - 1)
            .map(|p| {
                rule.integrate(self.breaks[p], self.breaks[p + 1], |z| {
                    let dl = self.delta(z, p, k);
                    dl * dl * z * (1.0 - z)
                })
            })
            .sum()
    }
}

fn rule(m: usize) -> Cow<'static, GaussLegendre> {
    if m <= MAX_CACHED_NODES {
        Cow::Borrowed(GaussLegendre::cached(m))
    } else {
        Cow::Owned(GaussLegendre::new(m))
    }
}

struct StepIntegrand<'a, 's> {
    state: &'a RevealState<'s>,
    k: usize,
    w: usize,
    tw: usize,
    cur_w: f64,
    revealed: Vec<RevealedNeighbor>,
    unrevealed: Vec<UnrevealedNeighbor>,
    partition: Vec<f64>,
    degree: usize,
}

impl<'a, 's> StepIntegrand<'a, 's> {
    fn new(state: &'a RevealState<'s>, k: usize) -> Result<Self, MartingaleError> {
        let w = state.next_vertex().ok_or(MartingaleError::Exhausted)?;
        let g = state.graph();
        let tw = state.unrevealed_neighbors(w);
        let mut revealed = Vec::new();
        let mut unrevealed = Vec::new();
        let mut partition = vec![0.0, 1.0];
        let mut degree = tw;
        for &u in g.neighbors(w) {
            let u = u as usize;
            if let Some(x) = state.weight(u) {
                let t = state.unrevealed_neighbors(u) - 1;
                let h = k as i64 - state.exceedances(u, x) as i64;
                revealed.push(RevealedNeighbor {
                    x,
                    lo: binomial_point(x, t, h),
                    hi: binomial_point(x, t, h - 1),
                    cur: binomial_point(x, t + 1, h),
                });
                partition.push(1.0 - x);
            } else {
                let nb = UnrevealedNeighbor::new(state, u, k);
                degree = degree.max(nb.t + 1);
                partition.extend(state.revealed_neighbor_weights(u).iter().copied());
                unrevealed.push(nb);
            }
        }
        partition.retain(|p| (0.0..=1.0).contains(p));
        partition.sort_by(f64::total_cmp);
        partition.dedup();
        Ok(Self {
            state,
            k,
            w,
            tw,
            cur_w: cond_indicator_mean(state, w, k),
            revealed,
            unrevealed,
            partition,
            degree,
        })
    }

    fn integrate(&self, m: usize) -> StepMoments {
        let rule = rule(m);
        let mut out = StepMoments { nodes: m, pieces: self.partition.len() - 1, ..Default::default() };
        let mut changes = vec![0.0; self.unrevealed.len()];
        for piece in self.partition.windows(2) {
            for (y, wt) in rule.on_interval(piece[0], piece[1]) {
                let h = self.k as i64 - self.state.exceedances(self.w, y) as i64;
                let own = binomial_point(y, self.tw, h) - self.cur_w;
                let mut first = 0.0;
                let mut a1_sum = 0.0;
                for u in &self.revealed {
                    let kept = edge_kept(u.x, y);
                    first += if kept { u.hi } else { u.lo } - u.cur;
                    a1_sum += u.delta() * (if kept { 1.0 } else { 0.0 } - u.x);
                }
                let mut second = 0.0;
                let mut second_sq = 0.0;
                for (v, slot) in self.unrevealed.iter().zip(changes.iter_mut()) {
                    *slot = v.after_reveal(y, self.k) - v.cur;
                    second += *slot;
                    second_sq += *slot * *slot;
                }
                let nbr = first + second;
                let full = own + nbr;
                out.sq_increment += wt * full * full;
                out.neighbor_sq_increment += wt * nbr * nbr;
                out.mean_increment += wt * full;
                out.a1 += wt * a1_sum * a1_sum;
                out.a2 += wt * (second * second - second_sq);
            }
        }
        out.a2 += self.unrevealed.iter().map(|v| v.delta_variance(self.k, &rule)).sum::<f64>();
        out
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff <= 1e-14 {
        0.0
    } else {
        diff / b.abs().max(1e-300)
    }
}

/// Conditional moments of the increment at the next step of `state`.
pub fn step_moments(
    state: &RevealState<'_>,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<StepMoments, MartingaleError> {
    check_k(state, k)?;
    let integrand = StepIntegrand::new(state, k)?;
    let m = quad.nodes.unwrap_or(integrand.degree + 1).max(1);
    let coarse = integrand.integrate(m);
    if quad.verify {
        let fine = integrand.integrate(2 * m);
        let achieved = [
            relative_gap(coarse.sq_increment, fine.sq_increment),
            relative_gap(coarse.neighbor_sq_increment, fine.neighbor_sq_increment),
            relative_gap(coarse.a1, fine.a1),
            relative_gap(coarse.a2, fine.a2),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if achieved > quad.tolerance {
            return Err(MartingaleError::QuadratureNonConvergence {
                step: state.prefix() + 1,
                achieved,
                tolerance: quad.tolerance,
            });
        }
    }
    Ok(coarse)
}

/// `E[Y_j^2 | F_{j-1}]`, requiring `j` to be the next step of `state`.
pub fn cond_sq_increment(
    state: &RevealState<'_>,
    j: usize,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<f64, MartingaleError> {
    expect_step(state, j)?;
    Ok(step_moments(state, k, quad)?.sq_increment)
}

/// `(A_1(j), A_2(j))`, requiring `j` to be the next step of `state`.
///
/// `A_1` squares the revealed neighbours' part of the increment and averages
/// over `x(j)`. `A_2` squares the unrevealed neighbours' part written with
/// their own weights left free, averaging over `x(j)` and those weights.
pub fn decompose_increment(
    state: &RevealState<'_>,
    j: usize,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<(f64, f64), MartingaleError> {
    expect_step(state, j)?;
    let m = step_moments(state, k, quad)?;
    Ok((m.a1, m.a2))
}
