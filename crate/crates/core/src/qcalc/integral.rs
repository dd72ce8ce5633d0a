use super::{check_q, SeriesTolerance};
use crate::error::{domain, Error, Result};

/// Caller-supplied control of `|f|` near the origin, used to bound the
/// discarded tail of the Jackson sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope {
    /// `|f(t)| <= bound` on `[0, q^N u]`.
    Bounded(f64),
    /// `|f(t)| <= coeff * t^exponent` on `[0, u]`, with `exponent > -1`.
    Power { coeff: f64, exponent: f64 },
}

impl Envelope {
    /// Bound on `(1-q) sum_{n>=n0} q^n u |f(q^n u)|`.
    fn tail(&self, u: f64, q: f64, n0: usize) -> f64 {
        let qn = q.powi(n0 as i32);
        match *self {
            Envelope::Bounded(b) => u * b * qn,
            Envelope::Power { coeff, exponent } => {
                let p = 1.0 + exponent;
                (1.0 - q) * coeff * u.powf(p) * qn.powf(p) / -(p * q.ln()).exp_m1()
            }
        }
    }
}

/// Jackson q-integral `int_0^u f(t) d_q t = (1-q) sum_{n>=0} q^n u f(q^n u)`.
///
/// Returns the truncated sum and the tail bound implied by `envelope`.
pub fn q_integral<F>(
    f: F,
    u: f64,
    q: f64,
    envelope: Envelope,
    tol: &SeriesTolerance,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    check_q(q)?;
    if !(u > 0.0) {
        return domain(format!("q-integral needs u > 0, got {u}"));
    }
    if let Envelope::Power { exponent, .. } = envelope {
        if !(exponent > -1.0) {
            return domain("power envelope needs exponent > -1");
        }
    }
    let mut sum = 0.0;
    let mut qn = 1.0;
    for n in 0..tol.max_terms {
        let t = qn * u;
        sum += qn * u * f(t);
        qn *= q;
        let tail = envelope.tail(u, q, n + 1);
        if tail <= tol.eps_abs {
            return Ok(((1.0 - q) * sum, tail));
        }
    }
    Err(Error::CapExceeded { eps: tol.eps_abs, max_terms: tol.max_terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcalc::{q_exponential, q_gamma};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn constant_and_linear() {
        let tol = SeriesTolerance::default();
        let (v, e) = q_integral(|_| 1.0, 1.0, 0.5, Envelope::Bounded(1.0), &tol).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        assert!(e <= 1e-12);
        let (v, _) = q_integral(|t| t, 1.0, 0.5, Envelope::Bounded(1.0), &tol).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-12);
    }

    /// `Gamma_q(x) = int_0^{1/(1-q)} t^(x-1) E_q(-q t) d_q t`. Without the
    /// factor `q` inside `E_q` the sum shifts by one support point and gives
    /// `q^x Gamma_q(x)`.
    #[test]
    fn q_gamma_as_q_integral() {
        let tol = SeriesTolerance::default();
        for q in [0.3, 0.8] {
            let u = 1.0 / (1.0 - q);
            for x in [0.5, 1.0, 2.0, 3.7] {
                let eq = |t: f64| q_exponential(Complex64::new(-t, 0.0), q, &tol).unwrap().0.re;
                let env = Envelope::Power { coeff: 1.0, exponent: x - 1.0 };
                let (v, tail) =
                    q_integral(|t| t.powf(x - 1.0) * eq(q * t), u, q, env, &tol).unwrap();
                let want = q_gamma(x, q, &tol).unwrap();
                assert!((v - want).abs() <= tail + 1e-12 * want, "q={q} x={x}: {v} vs {want}");
                let (shifted, _) = q_integral(|t| t.powf(x - 1.0) * eq(t), u, q, env, &tol).unwrap();
                assert_relative_eq!(shifted, q.powf(x) * want, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn linear_times_q_exponential() {
        let tol = SeriesTolerance::default();
        let q = 0.5;
        let f = |t: f64| t * q_exponential(Complex64::new(-q * t, 0.0), q, &tol).unwrap().0.re;
        let u = 1.0 / (1.0 - q);
        let (v, _) = q_integral(f, u, q, Envelope::Bounded(u), &tol).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn rejects_bad_envelope() {
        let tol = SeriesTolerance::default();
        let env = Envelope::Power { coeff: 1.0, exponent: -1.0 };
        assert!(q_integral(|t| 1.0 / t, 1.0, 0.5, env, &tol).is_err());
    }
}
