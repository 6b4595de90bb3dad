use serde::Serialize;

use crate::exact::Exact;
use crate::graph::Graph;
use crate::oracle::{variance_from_distribution, ExactOracle};

use super::variance::{exact_variance_check, VarianceCheck};
use super::AnalysisError;

/// `P[|X - n/(d+1)| >= z]` against Chebyshev with the exact variance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactTailRow {
    pub z: Exact,
    pub tail: Exact,
    /// `min(1, Var X / z^2)`.
    pub chebyshev: Exact,
    /// `17 n / ((d+1) z^2)`, unclipped.
    pub chebyshev_cap: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactKReport {
    pub k: usize,
    pub mean: Exact,
    pub mean_is_n_over_d1: bool,
    pub variance: Exact,
    /// The pair-table variance equals the one from the count distribution.
    pub variance_routes_agree: bool,
    pub variance_check: VarianceCheck,
    pub joint_violations: usize,
    pub tails: Vec<ExactTailRow>,
}

/// Everything the oracle can certify about one small graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactReport {
    pub graph: String,
    pub n: usize,
    pub d: usize,
    pub order_types: u64,
    /// Every vertex has degree `k` with probability exactly `1/(d+1)`.
    pub degree_law_holds: bool,
    pub codegree_sum: u64,
    pub codegree_identity_holds: bool,
    pub joint_pairs_checked: usize,
    /// Largest `E[1_u 1_v] (d+1)^2`; reported, not asserted.
    pub worst_joint_ratio: Exact,
    pub per_k: Vec<ExactKReport>,
    pub passed: bool,
}

/// Half-integer deviations `1/2, 1, ..., n`.
fn default_z_grid(n: usize) -> Vec<Exact> {
    (1..=2 * n as u64).map(|i| Exact::new(i, 2u64)).collect()
}

pub fn exact_report(g: &Graph, ks: &[usize], cap: usize) -> Result<ExactReport, AnalysisError> {
    if let Some(&k) = ks.iter().find(|&&k| k > g.d()) {
        return Err(AnalysisError::DegreeOutOfRange { k, d: g.d() });
    }
    let oracle = ExactOracle::enumerate(g, cap)?;
    let (n, d) = (g.n(), g.d());
    let uniform = Exact::new(1u64, (d + 1) as u64);
    let mut degree_law_holds = true;
    for v in 0..n {
        degree_law_holds &= oracle.degree_pmf(v)?.iter().all(|p| *p == uniform);
    }
    let table = oracle.joint_table();
    let expected_mean = Exact::new(n as u64, (d + 1) as u64);
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let (mean, variance) = oracle.mean_var(k)?;
        let dist = oracle.count_distribution(k)?;
        let variance_routes_agree = variance_from_distribution(&dist) == variance;
        let joint_violations =
            table.iter().filter(|e| e.k == k && e.probability > e.bound).count();
        let mut tails = Vec::new();
        for z in default_z_grid(n) {
            let tail = oracle.tail(k, &z)?;
            let cheb = &variance * &Exact::new(z.denominator() * z.denominator(), z.numerator() * z.numerator());
            let chebyshev = if cheb > Exact::one() { Exact::one() } else { cheb };
            let zf = z.to_f64();
            tails.push(ExactTailRow {
                holds: tail <= chebyshev,
                chebyshev_cap: 17.0 * n as f64 / ((d + 1) as f64 * zf * zf),
                z,
                tail,
                chebyshev,
            });
        }
        per_k.push(ExactKReport {
            k,
            mean_is_n_over_d1: mean == expected_mean,
            mean,
            variance_check: exact_variance_check(g, k, variance.clone()),
            variance,
            variance_routes_agree,
            joint_violations,
            tails,
        });
    }
    let codegree_sum = g.codegree_sum();
    let codegree_identity_holds = codegree_sum == (n * d * d.saturating_sub(1)) as u64;
    let passed = degree_law_holds
        && codegree_identity_holds
        && per_k.iter().all(|r| {
            r.mean_is_n_over_d1
                && r.variance_routes_agree
                && r.variance_check.passed
                && r.joint_violations == 0
                && r.tails.iter().all(|t| t.holds)
        });
    Ok(ExactReport {
        graph: g.descriptor().to_string(),
        n,
        d,
        order_types: oracle.order_types(),
        degree_law_holds,
        codegree_sum,
        codegree_identity_holds,
        joint_pairs_checked: table.len() / (d + 1),
        worst_joint_ratio: oracle.worst_joint_ratio(),
        per_k,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphFamilySpec;

    #[test]
    fn k4_report_passes() {
        let g = GraphFamilySpec::complete(4).build().unwrap();
        let r = exact_report(&g, &[0, 1, 2, 3], 8).unwrap();
        assert!(r.passed);
        assert_eq!(r.order_types, 384);
        assert_eq!(r.joint_pairs_checked, 6);
        for k in &r.per_k {
            assert_eq!(k.mean, Exact::one());
            // z = 1/2 catches every outcome except X = 1
            assert_eq!(k.tails[0].z, Exact::new(1, 2));
            assert!(k.tails.last().unwrap().tail == Exact::zero());
        }
    }

    #[test]
    fn k2_tail_at_one_is_certain() {
        let g = GraphFamilySpec::complete(2).build().unwrap();
        let r = exact_report(&g, &[0], 8).unwrap();
        // X is 0 or 2, each with probability 1/2, so |X - 1| = 1 always
        let row = &r.per_k[0].tails[1];
        assert_eq!(row.z, Exact::one());
        assert_eq!(row.tail, Exact::one());
        assert_eq!(row.chebyshev, Exact::one());
        assert!(exact_report(&g, &[2], 8).is_err());
    }
}
