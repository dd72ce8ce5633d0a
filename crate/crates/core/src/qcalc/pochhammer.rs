use num_complex::Complex64;

use super::{check_q, SeriesTolerance};
use crate::error::{domain, Error, Result};

/// Factors `1 - a q^j` are multiplied directly while `|a q^j|` exceeds this
/// radius; the remaining tail is summed as a logarithmic series.
const DIRECT_RADIUS: f64 = 0.5;

/// Index range of the finite q-Pochhammer product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PochhammerConvention {
    /// `prod_{j=0}^{n-1}`, `n` factors.
    #[default]
    Standard,
    /// `prod_{j=0}^{n}`, one factor too many. Kept only so the verification
    /// suite can show that it detects the wrong convention.
    Inclusive,
}

/// `(a; q)_n` under the given convention.
pub fn qpochhammer_finite_with(a: Complex64, q: f64, n: usize, convention: PochhammerConvention) -> Complex64 {
    match convention {
        PochhammerConvention::Standard => qpochhammer_finite(a, q, n),
        PochhammerConvention::Inclusive => qpochhammer_finite(a, q, n + 1),
    }
}

/// `(a; q)_n = prod_{j=0}^{n-1} (1 - a q^j)`, exactly `n` factors.
pub fn qpochhammer_finite(a: Complex64, q: f64, n: usize) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    let mut qj = 1.0;
    for _ in 0..n {
        prod *= 1.0 - a * qj;
        qj *= q;
    }
    prod
}

/// `ln (q; q)_n` style finite product for real `a` with all factors positive.
pub fn ln_qpochhammer_real(a: f64, q: f64, n: usize) -> f64 {
    let ln_q = q.ln();
    (0..n).map(|j| (-a * (j as f64 * ln_q).exp()).ln_1p()).sum()
}

/// Logarithm of `(a; q)_inf`.
///
/// `None` means the product has an exactly vanishing factor. Otherwise the
/// returned pair is `(log, bound)` where `bound` dominates the absolute error
/// of the truncated logarithm.
///
/// The tail `prod_{j>=J} (1 - w q^(j-J))` with `w = a q^J`, `|w| <= 1/2`, is
/// evaluated through `-sum_k w^k / (k (1 - q^k))`, whose remainder after `K`
/// terms is at most `|w|^(K+1) / ((K+1) (1 - q^(K+1)) (1 - |w|))`.
pub(crate) fn ln_qpochhammer_inf(
    a: Complex64,
    q: f64,
    tol: &SeriesTolerance,
    log_target: f64,
) -> Result<Option<(Complex64, f64)>> {
    check_q(q)?;
    if a.norm() == 0.0 {
        return Ok(Some((Complex64::new(0.0, 0.0), 0.0)));
    }
    let ln_q = q.ln();
    let mut log = Complex64::new(0.0, 0.0);
    let mut j = 0usize;
    let mut w = a;
    while w.norm() > DIRECT_RADIUS {
        if j >= tol.max_terms {
            return Err(Error::CapExceeded { eps: tol.eps_abs, max_terms: tol.max_terms });
        }
        let factor = 1.0 - w;
        if factor.norm() == 0.0 {
            return Ok(None);
        }
        log += factor.ln();
        j += 1;
        w = a * (j as f64 * ln_q).exp();
    }

    let r = w.norm();
    let mut wk = w;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        tail += wk / (kf * -(kf * ln_q).exp_m1());
        let next = kf + 1.0;
        let bound = r.powf(next) / (next * -(next * ln_q).exp_m1() * (1.0 - r));
        if bound <= log_target {
            return Ok(Some((log - tail, bound)));
        }
        if j + k >= tol.max_terms {
            return Err(Error::CapExceeded { eps: tol.eps_abs, max_terms: tol.max_terms });
        }
        wk *= w;
        k += 1;
    }
}

/// `(a; q)_inf` together with a bound on the absolute truncation error.
///
/// The bound is at most `tol.eps_abs`, and is also below machine precision
/// relative to the returned value.
pub fn qpochhammer_inf(a: Complex64, q: f64, tol: &SeriesTolerance) -> Result<(Complex64, f64)> {
    let mut target = f64::EPSILON / 4.0;
    loop {
        match ln_qpochhammer_inf(a, q, tol, target)? {
            None => return Ok((Complex64::new(0.0, 0.0), 0.0)),
            Some((log, bound)) => {
                let value = log.exp();
                let err = value.norm() * bound.exp_m1();
                if err <= tol.eps_abs {
                    return Ok((value, err));
                }
                target *= 0.5 * tol.eps_abs / err;
                if target == 0.0 {
                    return Err(Error::CapExceeded { eps: tol.eps_abs, max_terms: tol.max_terms });
                }
            }
        }
    }
}

/// `ln (a; q)_inf` for real `a < 1`, where every factor is positive.
/// Returns the logarithm and a bound on its absolute error.
pub fn ln_qpochhammer_inf_real(a: f64, q: f64, tol: &SeriesTolerance) -> Result<(f64, f64)> {
    if !(a < 1.0) {
        return domain(format!("real log-Pochhammer needs a < 1, got {a}"));
    }
    let target = (f64::EPSILON / 4.0).min(tol.eps_abs);
    match ln_qpochhammer_inf(Complex64::new(a, 0.0), q, tol, target)? {
        Some((log, bound)) => Ok((log.re, bound)),
        None => unreachable!("factors are positive for a < 1"),
    }
}

/// `ln Gamma_q(x)` for `x > 0`.
pub fn ln_q_gamma(x: f64, q: f64, tol: &SeriesTolerance) -> Result<f64> {
    check_q(q)?;
    if !(x > 0.0) {
        return domain(format!("q-gamma needs x > 0, got {x}"));
    }
    let (ln_qq, _) = ln_qpochhammer_inf_real(q, q, tol)?;
    let (ln_qx, _) = ln_qpochhammer_inf_real(q.powf(x), q, tol)?;
    Ok((1.0 - x) * (-q).ln_1p() + ln_qq - ln_qx)
}

/// `Gamma_q(x) = (1-q)^(1-x) (q;q)_inf / (q^x;q)_inf` for `x > 0`.
pub fn q_gamma(x: f64, q: f64, tol: &SeriesTolerance) -> Result<f64> {
    ln_q_gamma(x, q, tol).map(f64::exp)
}

/// q-exponential with the sign convention `E_q(t) = (-t(1-q); q)_inf`, so
/// that `E_q(-t) = (t(1-q); q)_inf`.
pub fn q_exponential(t: Complex64, q: f64, tol: &SeriesTolerance) -> Result<(Complex64, f64)> {
    check_q(q)?;
    qpochhammer_inf(-t * (1.0 - q), q, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// Plain product with many factors, independent of the log-tail route.
    fn brute_product(a: Complex64, q: f64, factors: usize) -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for j in 0..factors {
            p *= 1.0 - a * q.powi(j as i32);
        }
        p
    }

    #[test]
    fn finite_examples() {
        assert_eq!(qpochhammer_finite(c(0.7), 0.5, 0), c(1.0));
        assert_relative_eq!(qpochhammer_finite(c(0.7), 0.5, 1).re, 0.3, epsilon = 1e-15);
        assert_relative_eq!(qpochhammer_finite(c(0.5), 0.5, 3).re, 0.328125, epsilon = 1e-15);
    }

    #[test]
    fn infinite_examples() {
        let tol = SeriesTolerance::default();
        let (v, e) = qpochhammer_inf(c(0.0), 0.5, &tol).unwrap();
        assert_eq!((v, e), (c(1.0), 0.0));
        let (v, e) = qpochhammer_inf(c(0.5), 0.5, &tol).unwrap();
        assert!((v.re - 0.2887880951).abs() < 1e-10);
        assert!(e <= tol.eps_abs);
        let (v, _) = qpochhammer_inf(c(1.0), 0.5, &tol).unwrap();
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn infinite_matches_brute_force() {
        let tol = SeriesTolerance::default();
        let cases = [
            (c(0.5), 0.5),
            (c(-3.0), 0.3),
            (c(0.99), 0.9),
            (Complex64::new(0.3, -1.7), 0.7),
            (Complex64::new(4.0, 0.2), 0.8),
            (c(0.9), 0.95),
        ];
        for (a, q) in cases {
            let (v, err) = qpochhammer_inf(a, q, &tol).unwrap();
            let oracle = brute_product(a, q, 5000);
            assert!((v - oracle).norm() <= 1e-13 * oracle.norm().max(1.0), "a={a} q={q}");
            assert!(err <= tol.eps_abs);
        }
    }

    #[test]
    fn q_gamma_examples() {
        let tol = SeriesTolerance::default();
        assert_relative_eq!(q_gamma(1.0, 0.5, &tol).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(q_gamma(2.0, 0.5, &tol).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(q_gamma(3.0, 0.5, &tol).unwrap(), 1.5, epsilon = 1e-14);
        assert!(matches!(q_gamma(0.0, 0.5, &tol), Err(Error::Domain(_))));
        assert!(matches!(q_gamma(-1.5, 0.5, &tol), Err(Error::Domain(_))));
    }

    #[test]
    fn q_exponential_examples() {
        let tol = SeriesTolerance::default();
        let (v, _) = q_exponential(c(0.0), 0.5, &tol).unwrap();
        assert_eq!(v, c(1.0));
        let (v, _) = q_exponential(c(-2.0), 0.5, &tol).unwrap();
        assert_eq!(v.norm(), 0.0);
        // (-0.5; 0.5)_inf, frozen from a 2000-factor product at 30 digits.
        let (v, _) = q_exponential(c(1.0), 0.5, &tol).unwrap();
        assert_relative_eq!(v.re, 2.384231029031371, max_relative = 1e-14);
    }

    #[test]
    fn cap_is_reported() {
        let tol = SeriesTolerance::new(1e-12, 50).unwrap();
        assert!(matches!(
            qpochhammer_inf(c(0.9), 0.999, &tol),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn near_one_does_not_underflow() {
        // (q;q)_inf underflows for q = 0.9999 but its logarithm does not.
        let tol = SeriesTolerance::limit_study();
        let (l, _) = ln_qpochhammer_inf_real(0.9999, 0.9999, &tol).unwrap();
        // Euler-Maclaurin leading term -pi^2 / (6 (1-q)).
        let approx = -std::f64::consts::PI.powi(2) / (6.0 * 1e-4);
        assert!((l / approx - 1.0).abs() < 1e-3);
    }
}
