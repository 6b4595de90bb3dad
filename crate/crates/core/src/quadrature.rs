//! Gauss–Legendre rules.
//!
//! An `m`-node rule integrates polynomials of degree up to `2m - 1` exactly,
//! which is what the exposure-martingale integrals rely on: their
//! integrands are piecewise polynomials of known degree.

use std::sync::OnceLock;

/// Largest rule kept in the shared cache.
pub const MAX_CACHED_NODES: usize = 128;

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_m`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "a quadrature rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(m, z);
                dp = d;
                let step = p / d;
                z -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(m, z);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[m - 1 - i] = z;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Cached rule for `m <= MAX_CACHED_NODES`, built on first use.
    pub fn cached(m: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
        let table =
            CACHE.get_or_init(|| (1..=MAX_CACHED_NODES).map(GaussLegendre::new).collect());
        &table[m.clamp(1, MAX_CACHED_NODES) - 1]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&z, &w)| (mid + half * z, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_m(z), P_m'(z))` by the three-term recurrence.
fn legendre(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = if (1.0 - z * z).abs() < 1e-300 { 0.0 } else { m as f64 * (z * p1 - p0) / (z * z - 1.0) };
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_interval_length() {
        for m in [1, 2, 5, 16, 32, 64, 128] {
            let rule = GaussLegendre::new(m);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "m = {m}: {s}");
        }
    }

    #[test]
    fn exact_for_degree_two_m_minus_one() {
        for m in 1..=40 {
            let rule = GaussLegendre::cached(m);
            for p in 0..2 * m {
                let got = rule.integrate(0.0, 1.0, |x| x.powi(p as i32));
                let want = 1.0 / (p + 1) as f64;
                assert!((got - want).abs() < 1e-13, "m = {m}, p = {p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn two_point_rule_nodes() {
        let rule = GaussLegendre::new(2);
        let r = 1.0 / 3f64.sqrt();
        assert!((rule.nodes[0] + r).abs() < 1e-15 && (rule.nodes[1] - r).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand() {
        let got = GaussLegendre::cached(20).integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }
}
