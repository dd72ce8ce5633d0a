//! Kolmogorov-Smirnov statistics, empirical Mellin moments, adaptive
//! Gauss-Kronrod quadrature and the multiple-testing policy used by the
//! verification suites.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Asymptotic Kolmogorov critical constant at the 1% level.
pub const KS_C_1PCT: f64 = 1.63;
/// Asymptotic Kolmogorov critical constant at the 0.1% level.
pub const KS_C_01PCT: f64 = 1.95;
/// Two-sided normal quantile at 0.1%.
pub const Z_01PCT: f64 = 3.29;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    /// `n` for one sample, `n m / (n + m)` for two.
    pub n_effective: f64,
    pub critical_1pct: f64,
    pub pass: bool,
}

impl KsResult {
    fn new(statistic: f64, n_effective: f64) -> Self {
        let critical_1pct = KS_C_1PCT / n_effective.sqrt();
        KsResult { statistic, n_effective, critical_1pct, pass: statistic < critical_1pct }
    }

    pub fn critical_01pct(&self) -> f64 {
        KS_C_01PCT / self.n_effective.sqrt()
    }
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    v
}

/// One-sample KS statistic of `values` against the model CDF `cdf`.
pub fn ks_one_sample<F>(values: &[f64], cdf: F) -> Result<KsResult>
where
    F: Fn(f64) -> f64,
{
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let xs = sorted(values);
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    });
    Ok(KsResult::new(d, n))
}

/// Two-sample KS statistic by a merged sweep over both sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (xs, ys) = (sorted(a), sorted(b));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(KsResult::new(d, nf * mf / (nf + mf)))
}

/// Mean of `x^s` and its standard error.
pub fn empirical_mellin(values: &[f64], s: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    if s == 0.0 {
        return Ok((1.0, 0.0));
    }
    let mean = values.iter().map(|x| x.powf(s)).sum::<f64>() / n;
    if values.len() < 2 {
        return Ok((mean, 0.0));
    }
    let var = values.iter().map(|x| (x.powf(s) - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Maximum number of subintervals in [`adaptive_quadrature`].
pub const QUADRATURE_MAX_INTERVALS: usize = 4000;

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Interval {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Interval {}
impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature of `f` over `[a, b]`.
/// The interval with the largest error estimate is bisected until the summed
/// estimate drops below `eps`.
pub fn adaptive_quadrature<F>(f: F, a: f64, b: f64, eps: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let (value, err) = gauss_kronrod(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Interval { a, b, value, err });
    let mut total_err = err;
    while total_err > eps {
        if heap.len() >= QUADRATURE_MAX_INTERVALS {
            return Err(Error::Quadrature { err_estimate: total_err, intervals: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = gauss_kronrod(&f, worst.a, mid);
        let (rv, re) = gauss_kronrod(&f, mid, worst.b);
        total_err += le + re - worst.err;
        heap.push(Interval { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Interval { a: mid, b: worst.b, value: rv, err: re });
        // Resum periodically so cancellation in the running total cannot drift.
        if heap.len() % 64 == 0 {
            total_err = heap.iter().map(|i| i.err).sum();
        }
    }
    let total = heap.iter().map(|i| i.value).sum();
    Ok((total, total_err))
}

/// One run of a statistical check under a given seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Attempt {
    pub seed: u64,
    pub statistic: f64,
    pub critical_1pct: f64,
    pub critical_01pct: f64,
}

impl Attempt {
    pub fn from_ks(seed: u64, ks: &KsResult) -> Self {
        Attempt {
            seed,
            statistic: ks.statistic,
            critical_1pct: ks.critical_1pct,
            critical_01pct: ks.critical_01pct(),
        }
    }

    /// A z-score check with a `k`-standard-error acceptance band.
    pub fn from_z(seed: u64, estimate: f64, expected: f64, std_err: f64, k: f64) -> Self {
        let z = if std_err > 0.0 {
            (estimate - expected).abs() / std_err
        } else if estimate == expected {
            0.0
        } else {
            f64::INFINITY
        };
        Attempt { seed, statistic: z, critical_1pct: k, critical_01pct: Z_01PCT.max(k) }
    }

    pub fn passes(&self) -> bool {
        self.statistic < self.critical_1pct
    }

    fn gross_failure(&self) -> bool {
        self.statistic >= self.critical_01pct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyOutcome {
    pub attempts: Vec<Attempt>,
    pub pass: bool,
}

/// Seeds derived from a base seed for policy retries.
pub fn retry_seeds(base: u64) -> [u64; 3] {
    [base, base.wrapping_add(0x9e37_79b9_7f4a_7c15), base.wrapping_add(0x3c6e_f372_fe94_f82a)]
}

/// Runs a statistical check under the suite's multiple-testing policy: a
/// failure is reported only if some attempt is significant at the 0.1% level
/// or the check fails at the 1% level under all three seeds.
pub fn with_policy<F>(seeds: [u64; 3], mut run: F) -> Result<PolicyOutcome>
where
    F: FnMut(u64) -> Result<Attempt>,
{
    let mut attempts = Vec::with_capacity(3);
    for seed in seeds {
        let attempt = run(seed)?;
        attempts.push(attempt);
        if attempt.passes() {
            return Ok(PolicyOutcome { attempts, pass: true });
        }
        if attempt.gross_failure() {
            return Ok(PolicyOutcome { attempts, pass: false });
        }
    }
    Ok(PolicyOutcome { attempts, pass: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::gamma_real;
    use crate::rng::RngState;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn uniform_self_test() {
        let mut rng = RngState::new(11);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.uniform()).collect();
        let ks = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(ks.pass, "{ks:?}");
    }

    #[test]
    fn degenerate_one_sample() {
        let xs = vec![0.5; 20];
        let ks = ks_one_sample(&xs, |x| x).unwrap();
        assert_relative_eq!(ks.statistic, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let xs = vec![3.0, 1.0, 2.0, 2.0, 5.0];
        let ks = ks_two_sample(&xs, &xs).unwrap();
        assert_eq!(ks.statistic, 0.0);
    }

    #[test]
    fn two_sample_disjoint_is_one() {
        let ks = ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap();
        assert_eq!(ks.statistic, 1.0);
        assert_relative_eq!(ks.n_effective, 1.2);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(ks_one_sample(&[], |x| x), Err(Error::EmptyInput));
        assert_eq!(ks_two_sample(&[1.0], &[]), Err(Error::EmptyInput));
        assert_eq!(empirical_mellin(&[], 1.0), Err(Error::EmptyInput));
    }

    #[test]
    fn mellin_of_constants() {
        let xs = vec![2.5; 10];
        assert_eq!(empirical_mellin(&xs, 0.0).unwrap(), (1.0, 0.0));
        for s in [1.0, 2.0] {
            let (m, se) = empirical_mellin(&xs, s).unwrap();
            assert_eq!(m, 2.5f64.powf(s));
            assert_eq!(se, 0.0);
        }
    }

    #[test]
    fn quadrature_examples() {
        let (v, e) = adaptive_quadrature(|x| x, 0.0, 1.0, 1e-12).unwrap();
        assert_relative_eq!(v, 0.5, epsilon = 1e-12);
        assert!(e <= 1e-12);
        let (v, _) = adaptive_quadrature(|x| (-x).exp(), 0.0, 50.0, 1e-12).unwrap();
        assert!((v - 1.0).abs() <= 1e-12 + (-50.0f64).exp());
    }

    #[test]
    fn quadrature_reproduces_gamma_integral() {
        for x in [1.0, 2.5, 5.0] {
            let f = |t: f64| if t == 0.0 { if x == 1.0 { 1.0 } else { 0.0 } } else { t.powf(x - 1.0) * (-t).exp() };
            let (v, _) = adaptive_quadrature(f, 0.0, 50.0, 1e-11).unwrap();
            assert!((v - gamma_real(x).unwrap()).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn quadrature_cap() {
        let r = adaptive_quadrature(|x| (1.0 / x).sin(), 1e-9, 1.0, 1e-15);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn policy_retries_then_fails() {
        let mut calls = 0;
        let out = with_policy([1, 2, 3], |seed| {
            calls += 1;
            Ok(Attempt { seed, statistic: 2.0, critical_1pct: 1.0, critical_01pct: 3.0 })
        })
        .unwrap();
        assert!(!out.pass);
        assert_eq!(calls, 3);
    }

    #[test]
    fn policy_gross_failure_short_circuits() {
        let out = with_policy([1, 2, 3], |seed| {
            Ok(Attempt { seed, statistic: 5.0, critical_1pct: 1.0, critical_01pct: 3.0 })
        })
        .unwrap();
        assert!(!out.pass);
        assert_eq!(out.attempts.len(), 1);
    }

    #[test]
    fn policy_recovers_on_retry() {
        let out = with_policy([1, 2, 3], |seed| {
            let statistic = if seed == 1 { 2.0 } else { 0.5 };
            Ok(Attempt { seed, statistic, critical_1pct: 1.0, critical_01pct: 3.0 })
        })
        .unwrap();
        assert!(out.pass);
        assert_eq!(out.attempts.len(), 2);
    }

    proptest! {
        #[test]
        fn two_sample_is_symmetric(
            a in prop::collection::vec(-10.0f64..10.0, 1..60),
            b in prop::collection::vec(-10.0f64..10.0, 1..60),
        ) {
            let ab = ks_two_sample(&a, &b).unwrap();
            let ba = ks_two_sample(&b, &a).unwrap();
            prop_assert_eq!(ab.statistic, ba.statistic);
            prop_assert!((0.0..=1.0).contains(&ab.statistic));
        }
    }
}
