use serde::Serialize;

use super::claims::{FCheck, IntervalClaims, StirlingCheck};
use super::concentration::TailTable;
use super::exact_checks::ExactReport;
use super::martingale_study::MartingaleSummary;
use super::monte_carlo::MonteCarloReport;
use super::scaling::ScalingTable;
use super::variance::VarianceCheck;
use super::SE_MARGIN;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Collected results of a verification run, with one flag per assertion.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundReport {
    pub master_seed: u64,
    pub exact: Vec<ExactReport>,
    pub monte_carlo: Vec<MonteCarloReport>,
    pub variance: Vec<VarianceCheck>,
    pub concentration: Vec<TailTable>,
    pub martingale: Vec<MartingaleSummary>,
    pub f_inequality: Option<FCheck>,
    pub stirling: Option<StirlingCheck>,
    pub interval_claims: Vec<IntervalClaims>,
    pub scaling: Vec<ScalingTable>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
}

impl BoundReport {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, passed: true, ..Self::default() }
    }

    fn assert(&mut self, name: String, passed: bool, detail: String) {
        self.passed &= passed;
        self.assertions.push(Assertion { name, passed, detail });
    }

    pub fn add_exact(&mut self, r: ExactReport) {
        let g = &r.graph;
        self.assert(
            format!("degree law on {g}"),
            r.degree_law_holds,
            format!("every vertex has each degree with probability 1/{}", r.d + 1),
        );
        self.assert(
            format!("codegree identity on {g}"),
            r.codegree_identity_holds,
            format!("sum = {}, n d (d-1) = {}", r.codegree_sum, r.n * r.d * r.d.saturating_sub(1)),
        );
        for k in &r.per_k {
            self.assert(
                format!("exact mean on {g}, k = {}", k.k),
                k.mean_is_n_over_d1 && k.variance_routes_agree,
                format!("mean {}, variance {}", k.mean, k.variance),
            );
            self.assert(
                format!("exact variance cap on {g}, k = {}", k.k),
                k.variance_check.passed,
                format!("{} <= {}", k.variance, k.variance_check.cap),
            );
            self.assert(
                format!("joint bound on {g}, k = {}", k.k),
                k.joint_violations == 0,
                format!("{} violating pairs", k.joint_violations),
            );
            let bad = k.tails.iter().filter(|t| !t.holds).count();
            self.assert(
                format!("exact Chebyshev on {g}, k = {}", k.k),
                bad == 0,
                format!("{bad} of {} thresholds exceed Var/z^2", k.tails.len()),
            );
        }
        self.exact.push(r);
    }

    /// Adds Monte Carlo results and asserts every mean lies within four
    /// standard errors of `n/(d+1)`, using the variance cap.
    pub fn add_monte_carlo(&mut self, r: MonteCarloReport) {
        let radius = 4.0 * (r.variance_cap / r.trials as f64).sqrt();
        for s in &r.stats {
            self.assert(
                format!("mean count on {}, k = {}", r.graph, s.k),
                (s.mean - r.expected_mean).abs() <= radius,
                format!("|{} - {}| <= {radius}", s.mean, r.expected_mean),
            );
        }
        self.monte_carlo.push(r);
    }

    pub fn add_variance(&mut self, c: VarianceCheck) {
        let detail = match c.upper_bound {
            Some(ub) => format!("upper bound {ub} <= {} * {}", 1.0 + c.slack, c.cap),
            None => format!("{} <= {}", c.variance, c.cap),
        };
        self.assert(format!("variance cap on {}, k = {}", c.graph, c.k), c.passed, detail);
        self.variance.push(c);
    }

    pub fn add_concentration(&mut self, t: TailTable) {
        let bad = t.rows.iter().filter(|r| !r.holds).count();
        self.assert(
            format!("tail bounds on {}, k = {}", t.graph, t.k),
            t.passed,
            format!("{bad} of {} thresholds exceed a bound by more than {SE_MARGIN} s.e.", t.rows.len()),
        );
        self.concentration.push(t);
    }

    pub fn add_martingale(&mut self, s: MartingaleSummary) {
        let g = format!("{}, k = {}", s.graph, s.k);
        self.assert(
            format!("martingale endpoints on {g}"),
            s.endpoints_hold,
            format!("max |X_0 - n/(d+1)| = {:e}", s.x0_max_error),
        );
        self.assert(
            format!("increment cap on {g}"),
            s.max_abs_y.max <= (s.d + 1) as f64,
            format!("max |Y_j| = {} <= {}", s.max_abs_y.max, s.d + 1),
        );
        if let (Some(ok), Some(v), Some(q)) = (s.variance_consistent, &s.exact_variance, &s.m_n) {
            self.assert(
                format!("mean variance proxy on {g}"),
                ok,
                format!("mean M_n {} vs Var {} (s.e. {})", q.mean, v.to_f64(), q.standard_error),
            );
        }
        if let Some(ok) = s.decomposition_holds() {
            self.assert(
                format!("increment decomposition on {g}"),
                ok,
                format!(
                    "{} of {} steps exceed 2 A_1 + 2 A_2 (worst by {:?})",
                    s.decomposition_violations, s.steps_checked, s.worst_decomposition_excess
                ),
            );
        }
        self.martingale.push(s);
    }

    pub fn add_f_inequality(&mut self, c: FCheck) {
        self.assert(
            "f inequality".into(),
            c.passed,
            format!("max f = {}, c_hat = {}", c.max_f, c.c_hat),
        );
        self.f_inequality = Some(c);
    }

    pub fn add_stirling(&mut self, c: StirlingCheck) {
        self.assert(
            "Stirling bound on delta".into(),
            c.passed,
            format!("max ratio {} over {} samples", c.max_ratio, c.samples),
        );
        self.stirling = Some(c);
    }

    pub fn add_interval_claims(&mut self, c: IntervalClaims) {
        for (name, f) in
            [("count deviation", &c.count_deviation), ("overfill", &c.overfill), ("empty gap", &c.empty_gap)]
        {
            self.assert(
                format!("interval {name}, m = {}, h = {}", c.m, c.h),
                f.holds,
                format!("frequency {} vs bound {}", f.frequency, f.bound),
            );
        }
        self.interval_claims.push(c);
    }

    pub fn add_scaling(&mut self, t: ScalingTable) {
        self.assert(
            format!("increment trend, d = {}", t.spec.d),
            t.passed,
            format!("q(max |Y|)/ln n varies by a factor {}", t.trend_factor),
        );
        self.scaling.push(t);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
