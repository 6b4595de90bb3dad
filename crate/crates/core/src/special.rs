//! Binomial probabilities and the regularized incomplete beta function.
//!
//! The conditional degree probabilities of the exposure martingale are
//! binomial pmf values `p(x, t, h)` and their integrals over intervals of
//! `x`. With integer parameters the integral reduces to a difference of
//! regularized incomplete beta values,
//!
//! ```text
//! int_a^b C(t,h) y^h (1-y)^(t-h) dy = (I_b(h+1, t-h+1) - I_a(h+1, t-h+1)) / (t+1)
//! ```
//!
//! and `I_x(h+1, t-h+1) = P[Bin(t+1, x) >= h+1]`. Small `t` uses that
//! binomial tail directly; larger `t` uses the Lentz continued fraction.

use thiserror::Error;

/// Largest `t` summed term by term; above it the continued fraction is used.
pub const DIRECT_SUM_MAX: usize = 30;

const CF_MAX_ITER: usize = 500;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum SpecialError {
    #[error("integration bounds out of order: a = {a} > b = {b}")]
    BoundsOutOfOrder { a: f64, b: f64 },
    #[error("incomplete beta needs a, b > 0 and 0 <= x <= 1 (a = {a}, b = {b}, x = {x})")]
    Domain { a: f64, b: f64, x: f64 },
}

/// `ln C(t, h)` for `0 <= h <= t`.
pub fn ln_choose(t: usize, h: usize) -> f64 {
    ln_gamma((t + 1) as f64) - ln_gamma((h + 1) as f64) - ln_gamma((t - h + 1) as f64)
}

/// Lanczos approximation (g = 7, nine coefficients), accurate to ~1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + 7.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn choose_f64(t: usize, h: usize) -> f64 {
    let h = h.min(t - h);
    let mut c = 1.0;
    for i in 0..h {
        c = c * (t - i) as f64 / (i + 1) as f64;
    }
    c
}

/// `p(x, t, h) = C(t, h) x^h (1 - x)^(t - h)`, and `0` when `h < 0` or `h > t`.
pub fn binomial_point(x: f64, t: usize, h: i64) -> f64 {
    if h < 0 || h as usize > t {
        return 0.0;
    }
    let h = h as usize;
    if x <= 0.0 {
        return if h == 0 { 1.0 } else { 0.0 };
    }
    if x >= 1.0 {
        return if h == t { 1.0 } else { 0.0 };
    }
    if t <= 60 {
        choose_f64(t, h) * x.powi(h as i32) * (1.0 - x).powi((t - h) as i32)
    } else {
        (ln_choose(t, h) + h as f64 * x.ln() + (t - h) as f64 * (-x).ln_1p()).exp()
    }
}

/// `P[Bin(m, x) >= s]` by direct summation from the side nearer the mode.
pub fn binomial_upper_tail(m: usize, s: usize, x: f64) -> f64 {
    if s == 0 {
        return 1.0;
    }
    if s > m {
        return 0.0;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let odds = x / (1.0 - x);
    if s as f64 > m as f64 * x {
        let mut term = binomial_point(x, m, s as i64);
        let mut sum = term;
        for i in s..m {
            term *= (m - i) as f64 / (i + 1) as f64 * odds;
            sum += term;
        }
        sum.min(1.0)
    } else {
        let mut term = binomial_point(x, m, s as i64 - 1);
        let mut sum = term;
        for i in (1..s).rev() {
            term *= i as f64 / (m - i + 1) as f64 / odds;
            sum += term;
        }
        (1.0 - sum).max(0.0)
    }
}

/// Regularized incomplete beta `I_x(a, b)` by continued fraction, using
/// `I_x(a, b) = 1 - I_{1-x}(b, a)` past the mean for fast convergence.
pub fn beta_reg(a: f64, b: f64, x: f64) -> Result<f64, SpecialError> {
    if !(a > 0.0 && b > 0.0 && (0.0..=1.0).contains(&x)) {
        return Err(SpecialError::Domain { a, b, x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(a, b, x) / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b)
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// `I_y(h+1, t-h+1)` for `0 <= h <= t`, choosing the evaluation path by `t`.
#[inline]
pub fn binomial_cdf_integral(y: f64, t: usize, h: usize) -> f64 {
    if t <= DIRECT_SUM_MAX {
        binomial_upper_tail(t + 1, h + 1, y)
    } else {
        beta_reg((h + 1) as f64, (t - h + 1) as f64, y.clamp(0.0, 1.0))
            .expect("parameters are positive")
    }
}

/// `int_a^b p(y, t, h) dy` for `0 <= a <= b <= 1`.
pub fn binomial_segment_integral(a: f64, b: f64, t: usize, h: i64) -> Result<f64, SpecialError> {
    if a > b {
        return Err(SpecialError::BoundsOutOfOrder { a, b });
    }
    Ok(segment_unchecked(a, b, t, h))
}

#[inline]
pub(crate) fn segment_unchecked(a: f64, b: f64, t: usize, h: i64) -> f64 {
    if h < 0 || h as usize > t || a >= b {
        return 0.0;
    }
    let h = h as usize;
    let upper = if b >= 1.0 { 1.0 } else { binomial_cdf_integral(b, t, h) };
    let lower = if a <= 0.0 { 0.0 } else { binomial_cdf_integral(a, t, h) };
    (upper - lower) / (t + 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn point_values() {
        assert_eq!(binomial_point(0.5, 2, 1), 0.5);
        assert_eq!(binomial_point(0.3, 5, -1), 0.0);
        assert_eq!(binomial_point(0.3, 5, 6), 0.0);
        for x in [0.0, 0.2, 1.0] {
            assert_eq!(binomial_point(x, 0, 0), 1.0);
        }
        assert!((binomial_point(0.5, 10, 4) - 210.0 / 1024.0).abs() < 1e-15);
        // large-t log path against the small-t product path
        let a = binomial_point(0.37, 60, 22);
        let b = (ln_choose(60, 22) + 22.0 * 0.37f64.ln() + 38.0 * 0.63f64.ln()).exp();
        assert!((a - b).abs() < 1e-13 * a);
        let s: f64 = (0..=200).map(|h| binomial_point(0.41, 200, h)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ln_gamma_on_factorials() {
        let mut f = 0.0f64;
        for m in 1..40usize {
            f += (m as f64).ln();
            assert!((ln_gamma((m + 1) as f64) - f).abs() < 1e-12 * f.max(1.0), "m = {m}");
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn segment_examples() {
        for t in 0..12 {
            for h in 0..=t as i64 {
                let v = binomial_segment_integral(0.0, 1.0, t, h).unwrap();
                assert!((v - 1.0 / (t + 1) as f64).abs() < 1e-14);
            }
            assert_eq!(binomial_segment_integral(0.0, 1.0, t, -1).unwrap(), 0.0);
        }
        let v = binomial_segment_integral(0.0, 0.5, 1, 0).unwrap();
        assert!((v - 0.375).abs() < 1e-15);
        assert!(binomial_segment_integral(0.6, 0.5, 1, 0).is_err());
        for t in [31, 45, 80] {
            let v = binomial_segment_integral(0.0, 1.0, t, 7).unwrap();
            assert!((v - 1.0 / (t + 1) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn beta_reg_domain_errors() {
        assert!(beta_reg(0.0, 1.0, 0.5).is_err());
        assert!(beta_reg(1.0, 1.0, 1.5).is_err());
        assert!((beta_reg(1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
    }

    /// Composite Simpson with many panels, as an independent check of the
    /// closed-form segment integral.
    fn simpson(a: f64, b: f64, t: usize, h: i64) -> f64 {
        let panels = 2000;
        let w = (b - a) / panels as f64;
        let f = |y: f64| binomial_point(y, t, h);
        let mut s = f(a) + f(b);
        for i in 1..panels {
            s += f(a + i as f64 * w) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * w / 3.0
    }

    proptest! {
        #[test]
        fn direct_and_continued_fraction_paths_agree(t in 0usize..=60, hf in 0.0f64..1.0, y in 0.0f64..=1.0) {
            let h = ((t as f64) * hf).floor() as usize;
            let direct = binomial_upper_tail(t + 1, h + 1, y);
            let cf = beta_reg((h + 1) as f64, (t - h + 1) as f64, y).unwrap();
            prop_assert!((direct - cf).abs() < 1e-12, "t={t} h={h} y={y}: {direct} vs {cf}");
        }

        #[test]
        fn matches_statrs_reference(a in 1usize..40, b in 1usize..40, y in 0.0f64..=1.0) {
            let ours = beta_reg(a as f64, b as f64, y).unwrap();
            let reference = statrs::function::beta::beta_reg(a as f64, b as f64, y);
            prop_assert!((ours - reference).abs() < 1e-12);
        }

        #[test]
        fn segment_matches_simpson(t in 0usize..40, hf in 0.0f64..1.0, a in 0.0f64..1.0, len in 0.0f64..1.0) {
            let h = ((t as f64) * hf).floor() as i64;
            let b = a + (1.0 - a) * len;
            let exact = binomial_segment_integral(a, b, t, h).unwrap();
            prop_assert!((exact - simpson(a, b, t, h)).abs() < 1e-10);
        }
    }
}
