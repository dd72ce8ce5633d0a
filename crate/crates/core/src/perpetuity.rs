//! The law of the perpetuity `I = int_0^inf q^{zeta_s} ds`.
//!
//! With `C = (z;q)_inf / (q;q)_inf` the Mellin transform is
//!
//! ```text
//! E[I^s] = Gamma(1+s) (q^{1+s};q)_inf / (q;q)_inf * (z;q)_inf / (z q^{-s};q)_inf
//!        = (1-q)^{-2s} Gamma(1+s)/Gamma_q(1+s) * Gamma_q(mu-s)/Gamma_q(mu)
//! ```
//!
//! for `Re(s) < mu`, and the density is the double series
//! `i(x) = C sum_m (qz)^m/(q;q)_m g(x q^m)` with
//! `g(y) = sum_n (-1)^n q^{n(n-1)/2}/(q;q)_n exp(-y q^{-n})`.

use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::qcalc::{
    gamma_classical, gamma_over_qgamma, ln_gamma, ln_q_gamma, ln_qpochhammer_inf,
    ln_qpochhammer_inf_real, qpochhammer_finite, QParams, SeriesTolerance,
};
use crate::stats::adaptive_quadrature;

/// Below this the density is reported as 0 with the supremum bound as error.
pub const X_FLOOR: f64 = 1e-8;

/// Relative truncation targets are never asked to go below `eps * FLOOR`.
const FLOOR: f64 = 1e-80;

/// Allowance for floating-point rounding, per unit of absolute term mass.
const ROUNDING: f64 = 16.0 * f64::EPSILON;

/// Coefficient tables stop once `ln q^{n(n-1)/2} / (q;q)_inf` is below this.
const LN_NEGLIGIBLE: f64 = -800.0;

/// `psi(s) = (q^{-s} - 1) + z (q^s - 1)`, so that `E[q^{-s zeta_t}] = e^{t psi(s)}`.
pub fn levy_exponent(params: &QParams, s: Complex64) -> Complex64 {
    let ln_q = params.q().ln();
    let qs = (s * ln_q).exp();
    let q_minus_s = (-s * ln_q).exp();
    (q_minus_s - 1.0) + params.z() * (qs - 1.0)
}

/// Ladder exponents `(phi_+(s), phi_-(s)) = (q^{-s} - 1, z q^{-s} - 1)`,
/// with `psi(s) = -phi_+(s) phi_-(-s)`.
pub fn wiener_hopf_factors(params: &QParams, s: Complex64) -> (Complex64, Complex64) {
    let q_minus_s = (-s * params.q().ln()).exp();
    (q_minus_s - 1.0, params.z() * q_minus_s - 1.0)
}

/// Which closed form of the Mellin transform to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MellinForm {
    #[default]
    Pochhammer,
    /// Real `s` only.
    QGamma,
}

#[derive(Debug, Clone)]
pub struct PerpetuityLaw {
    params: QParams,
    tol: SeriesTolerance,
    ln_qq: f64,
    /// `ln C`.
    ln_c: f64,
    /// `ln (-1;q)_inf` and `ln (-q;q)_inf`.
    ln_minus_one: f64,
    ln_minus_q: f64,
    ln_qz_poch: f64,
    /// `ln (q^{n(n-1)/2} / (q;q)_n)`.
    ln_coef: Vec<f64>,
}

impl PerpetuityLaw {
    pub fn new(params: QParams, tol: SeriesTolerance) -> Result<Self> {
        let q = params.q();
        let z = params.z();
        let wide = SeriesTolerance::limit_study();
        let ln_qq = ln_qpochhammer_inf_real(q, q, &wide)?.0;
        let ln_zq = if z > 0.0 { ln_qpochhammer_inf_real(z, q, &wide)?.0 } else { 0.0 };
        let ln_qz_poch = if z > 0.0 { ln_qpochhammer_inf_real(q * z, q, &wide)?.0 } else { 0.0 };
        let ln_minus_one = ln_qpochhammer_inf_real(-1.0, q, &wide)?.0;
        let ln_minus_q = ln_qpochhammer_inf_real(-q, q, &wide)?.0;

        let ln_q = q.ln();
        let mut ln_coef = vec![0.0];
        let mut n = 0usize;
        loop {
            let nf = n as f64;
            let next = ln_coef[n] + nf * ln_q - (-((nf + 1.0) * ln_q).exp()).ln_1p();
            if (nf + 1.0) * nf / 2.0 * ln_q - ln_qq < LN_NEGLIGIBLE {
                break;
            }
            ln_coef.push(next);
            n += 1;
        }
        Ok(PerpetuityLaw {
            params,
            tol,
            ln_qq,
            ln_c: ln_zq - ln_qq,
            ln_minus_one,
            ln_minus_q,
            ln_qz_poch,
            ln_coef,
        })
    }

    pub fn params(&self) -> &QParams {
        &self.params
    }

    pub fn tol(&self) -> &SeriesTolerance {
        &self.tol
    }

    fn ln_poch(&self, a: Complex64) -> Result<Option<Complex64>> {
        let target = (f64::EPSILON / 4.0).min(self.tol.eps_abs);
        let wide = SeriesTolerance { max_terms: self.tol.max_terms.max(SeriesTolerance::LIMIT_STUDY_MAX_TERMS), ..self.tol };
        Ok(ln_qpochhammer_inf(a, self.params.q(), &wide, target)?.map(|(log, _)| log))
    }

    /// `E[I^s]` for `Re(s) < mu`.
    ///
    /// At negative integers the poles of `Gamma(1+s)` cancel against zeros of
    /// `(q^{1+s};q)_inf`; there the Pochhammer form is evaluated with the
    /// vanishing factor divided out, and the q-gamma form relies on
    /// [`gamma_over_qgamma`].
    pub fn mellin(&self, s: Complex64, form: MellinForm) -> Result<Complex64> {
        let mu = self.params.mu();
        if !(s.re < mu) {
            return Err(Error::Strip { re: s.re, mu });
        }
        if !(s.re.is_finite() && s.im.is_finite()) {
            return domain(format!("Mellin argument must be finite, got {s}"));
        }
        match form {
            MellinForm::Pochhammer => self.mellin_pochhammer(s),
            MellinForm::QGamma => {
                if s.im != 0.0 {
                    return domain("the q-gamma form of the Mellin transform needs real s");
                }
                self.mellin_qgamma(s.re).map(|v| Complex64::new(v, 0.0))
            }
        }
    }

    pub fn mellin_real(&self, s: f64) -> Result<f64> {
        self.mellin(Complex64::new(s, 0.0), MellinForm::Pochhammer).map(|v| v.re)
    }

    /// `(z;q)_inf / (z q^{-s};q)_inf`, as a logarithm.
    fn ln_down_factor(&self, s: Complex64) -> Result<Complex64> {
        let z = self.params.z();
        if z == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let zqs = z * (-s * self.params.q().ln()).exp();
        match self.ln_poch(zqs)? {
            Some(den) => Ok(self.ln_c + self.ln_qq - den),
            None => Err(Error::Strip { re: s.re, mu: self.params.mu() }),
        }
    }

    fn mellin_pochhammer(&self, s: Complex64) -> Result<Complex64> {
        let q = self.params.q();
        let ln_q = q.ln();
        let down = self.ln_down_factor(s)?;
        let k = (-s.re).round();
        if s.re <= -0.5 && (s + k).norm() < 0.5 {
            let k = k as usize;
            let eps = s + k as f64;
            // Gamma(1+s) = Gamma(1+eps) / prod_{i=1}^{k} (s+i), and the factor
            // j = k-1 of (q^{1+s};q)_inf is 1 - q^eps.
            let mut value = gamma_classical(1.0 + eps)?;
            for i in 1..k {
                value /= s + i as f64;
            }
            let ratio = if eps.norm() == 0.0 {
                Complex64::new(-ln_q, 0.0)
            } else {
                -expm1_complex(eps * ln_q) / eps
            };
            value *= ratio;
            value *= qpochhammer_finite(q_pow(q, 1.0 + s), q, k - 1);
            let tail = self
                .ln_poch(q_pow(q, 1.0 + eps))?
                .expect("(q^{1+eps};q)_inf has no zero factor for |eps| < 1/2");
            return Ok(value * (tail - self.ln_qq + down).exp());
        }
        let head = match self.ln_poch(q_pow(q, 1.0 + s))? {
            Some(log) => log,
            None => return Ok(Complex64::new(0.0, 0.0)),
        };
        Ok((ln_gamma(1.0 + s)? + head - self.ln_qq + down).exp())
    }

    fn mellin_qgamma(&self, s: f64) -> Result<f64> {
        let q = self.params.q();
        let wide = SeriesTolerance { max_terms: SeriesTolerance::LIMIT_STUDY_MAX_TERMS, ..self.tol };
        let ratio = gamma_over_qgamma(1.0 + s, q, &wide)?;
        if self.params.z() == 0.0 {
            return Ok((1.0 - q).powf(-s) * ratio);
        }
        let mu = self.params.mu();
        let ln_tail = ln_q_gamma(mu - s, q, &wide)? - ln_q_gamma(mu, q, &wide)?;
        Ok((-2.0 * s * (-q).ln_1p() + ln_tail).exp() * ratio)
    }

    /// Relative residual of
    /// `E[I^{-r}] = r / ((q^{-r} - 1)(1 - q^{mu+r})) E[I^{-(r+1)}]`.
    pub fn mellin_recurrence_residual(&self, r: Complex64) -> Result<f64> {
        if !(r.re > 0.0) {
            return domain(format!("recurrence needs Re(r) > 0, got {r}"));
        }
        let ln_q = self.params.q().ln();
        let lhs = self.mellin(-r, MellinForm::Pochhammer)?;
        let next = self.mellin(-(r + 1.0), MellinForm::Pochhammer)?;
        let q_minus_r = (-r * ln_q).exp();
        let factor = 1.0 - self.params.z() * (r * ln_q).exp();
        let rhs = r / ((q_minus_r - 1.0) * factor) * next;
        Ok((lhs - rhs).norm() / lhs.norm())
    }

    /// Inner alternating series `g(y)`; returns the value, a bound on the
    /// discarded tail and the sum of absolute terms.
    fn inner_density(&self, y: f64, eps: f64) -> (f64, f64, f64) {
        let envelope = self.ln_minus_one - y;
        if envelope <= eps.ln() {
            return (0.0, envelope.exp(), 0.0);
        }
        let ln_q = self.params.q().ln();
        let (mut sum, mut abs, mut tail) = (0.0, 0.0, 0.0);
        for (n, &lc) in self.ln_coef.iter().enumerate() {
            let t = (lc - y * (-(n as f64) * ln_q).exp()).exp();
            sum += if n % 2 == 0 { t } else { -t };
            abs += t;
            let n1 = n as f64 + 1.0;
            let ln_tail = -y * (-n1 * ln_q).exp() + n1 * (n1 - 1.0) / 2.0 * ln_q
                - (-(n1 * ln_q).exp_m1()).ln()
                - self.ln_qq;
            tail = ln_tail.exp();
            if ln_tail <= eps.ln() {
                break;
            }
        }
        (sum, tail, abs)
    }

    /// Supremum of the density, `C (-1;q)_inf / (qz;q)_inf`.
    pub fn density_sup_bound(&self) -> f64 {
        (self.ln_c + self.ln_minus_one - self.ln_qz_poch).exp()
    }

    /// Density of `I` at `x` and a bound on its absolute error.
    pub fn density(&self, x: f64) -> Result<(f64, f64)> {
        if !(x > 0.0) {
            return domain(format!("density needs x > 0, got {x}"));
        }
        if x < X_FLOOR {
            return Ok((0.0, self.density_sup_bound()));
        }
        if x.is_infinite() {
            return Ok((0.0, 0.0));
        }
        let q = self.params.q();
        let z = self.params.z();
        let ln_q = q.ln();
        let eps = self.tol.eps_abs;
        let qz = q * z;
        let ln_qz = qz.ln();
        let inner_eps = 0.5 * eps * FLOOR * (1.0 - qz) * (self.ln_qq - self.ln_c).exp();

        let mut ln_a = 0.0;
        let (mut sum, mut abs, mut inner_err) = (0.0, 0.0, 0.0);
        for m in 0..self.tol.max_terms {
            let mf = m as f64;
            let (g, tail, g_abs) = self.inner_density(x * (mf * ln_q).exp(), inner_eps);
            let w = (self.ln_c + ln_a).exp();
            sum += w * g;
            abs += w * g_abs;
            inner_err += w * tail;
            let outer = if z == 0.0 {
                0.0
            } else {
                (self.ln_c + self.ln_minus_one + (mf + 1.0) * ln_qz
                    - (-qz).ln_1p()
                    - self.ln_qq)
                    .exp()
            };
            if outer <= 0.5 * eps * sum.abs().clamp(FLOOR, 1.0) {
                let err = outer + inner_err + ROUNDING * abs;
                return Ok((sum.max(0.0), err));
            }
            ln_a += ln_qz - (-((mf + 1.0) * ln_q).exp_m1()).ln();
        }
        Err(Error::CapExceeded { eps, max_terms: self.tol.max_terms })
    }

    /// `h(w) = sum_n c_n (1 - exp(-w q^{-n}))` with
    /// `c_n = (-1)^n q^{n(n+1)/2} / (q;q)_n`.
    fn inner_cdf(&self, w: f64, eps: f64) -> (f64, f64, f64) {
        let envelope = w * self.ln_minus_one.exp();
        if envelope <= eps {
            return (0.0, envelope, 0.0);
        }
        let ln_q = self.params.q().ln();
        let (mut sum, mut abs, mut tail) = (0.0, 0.0, 0.0);
        for (n, &lc) in self.ln_coef.iter().enumerate() {
            let nf = n as f64;
            let t = (lc + nf * ln_q).exp() * -(-w * (-nf * ln_q).exp()).exp_m1();
            sum += if n % 2 == 0 { t } else { -t };
            abs += t;
            let n2 = nf + 2.0;
            let ln_tail = n2 * (n2 - 1.0) / 2.0 * ln_q - (-(n2 * ln_q).exp_m1()).ln() - self.ln_qq;
            tail = ln_tail.exp();
            if ln_tail <= eps.ln() {
                break;
            }
        }
        (sum, tail, abs)
    }

    /// `S(w) = sum_n c_n exp(-w q^{-n})`, so that `h(w) = (q;q)_inf - S(w)`.
    fn inner_survival(&self, w: f64, eps: f64) -> (f64, f64, f64) {
        let envelope = self.ln_minus_q - w;
        if envelope <= eps.ln() {
            return (0.0, envelope.exp(), 0.0);
        }
        let ln_q = self.params.q().ln();
        let (mut sum, mut abs, mut tail) = (0.0, 0.0, 0.0);
        for (n, &lc) in self.ln_coef.iter().enumerate() {
            let nf = n as f64;
            let t = (lc + nf * ln_q - w * (-nf * ln_q).exp()).exp();
            sum += if n % 2 == 0 { t } else { -t };
            abs += t;
            let (n1, n2) = (nf + 1.0, nf + 2.0);
            let ln_tail = -w * (-n1 * ln_q).exp() + n2 * (n2 - 1.0) / 2.0 * ln_q
                - (-(n2 * ln_q).exp_m1()).ln()
                - self.ln_qq;
            tail = ln_tail.exp();
            if ln_tail <= eps.ln() {
                break;
            }
        }
        (sum, tail, abs)
    }

    /// `P(I <= y)` with an absolute error bound.
    pub fn cdf(&self, y: f64) -> Result<(f64, f64)> {
        if !(y >= 0.0) {
            return domain(format!("cdf needs y >= 0, got {y}"));
        }
        if y == 0.0 {
            return Ok((0.0, 0.0));
        }
        if y > 1.0 {
            let (s, err) = self.survival(y)?;
            return Ok(((1.0 - s).clamp(0.0, 1.0), err));
        }
        let q = self.params.q();
        let z = self.params.z();
        let ln_q = q.ln();
        let eps = self.tol.eps_abs;
        let inner_eps = 0.5 * eps * (1.0 - z) * (self.ln_qq - self.ln_c).exp();
        let mut ln_b = self.ln_c;
        let (mut sum, mut abs, mut inner_err) = (0.0, 0.0, 0.0);
        for m in 0..self.tol.max_terms {
            let mf = m as f64;
            let w = y * (mf * ln_q).exp();
            let (h, tail, h_abs) = self.inner_cdf(w, inner_eps);
            let b = ln_b.exp();
            sum += b * h;
            abs += b * h_abs;
            inner_err += b * tail;
            let outer = if z == 0.0 {
                0.0
            } else {
                let by_w = self.ln_c + self.ln_minus_one + y.ln() + (mf + 1.0) * (q * z).ln()
                    - (-q * z).ln_1p()
                    - self.ln_qq;
                let by_one = self.ln_c + self.ln_minus_q + (mf + 1.0) * z.ln() - (-z).ln_1p() - self.ln_qq;
                by_w.min(by_one).exp()
            };
            if outer <= 0.5 * eps {
                let err = outer + inner_err + ROUNDING * abs;
                return Ok((sum.clamp(0.0, 1.0), err));
            }
            ln_b += z.ln() - (-((mf + 1.0) * ln_q).exp_m1()).ln();
        }
        Err(Error::CapExceeded { eps, max_terms: self.tol.max_terms })
    }

    /// `P(I > y)`, accurate relative to its own size in the upper tail.
    pub fn survival(&self, y: f64) -> Result<(f64, f64)> {
        if !(y >= 0.0) {
            return domain(format!("survival needs y >= 0, got {y}"));
        }
        if y == 0.0 {
            return Ok((1.0, 0.0));
        }
        if y.is_infinite() {
            return Ok((0.0, 0.0));
        }
        let q = self.params.q();
        let z = self.params.z();
        let ln_q = q.ln();
        let eps = self.tol.eps_abs;
        let inner_eps = 0.5 * eps * FLOOR * (1.0 - z) * (self.ln_qq - self.ln_c).exp();
        let mut ln_b = self.ln_c;
        let (mut sum, mut abs, mut inner_err) = (0.0, 0.0, 0.0);
        for m in 0..self.tol.max_terms {
            let mf = m as f64;
            let (s, tail, s_abs) = self.inner_survival(y * (mf * ln_q).exp(), inner_eps);
            let b = ln_b.exp();
            sum += b * s;
            abs += b * s_abs;
            inner_err += b * tail;
            let outer = if z == 0.0 {
                0.0
            } else {
                (self.ln_c + self.ln_minus_q + (mf + 1.0) * z.ln() - (-z).ln_1p() - self.ln_qq).exp()
            };
            if outer <= 0.5 * eps * sum.abs().clamp(FLOOR, 1.0) {
                let err = outer + inner_err + ROUNDING * abs;
                return Ok((sum.clamp(0.0, 1.0), err));
            }
            ln_b += z.ln() - (-((mf + 1.0) * ln_q).exp_m1()).ln();
        }
        Err(Error::CapExceeded { eps, max_terms: self.tol.max_terms })
    }

    /// `int x^s i(x) dx` by quadrature in `u = ln x`, with rigorous bounds on
    /// the two cut-off tails. `s = 0` gives the total mass.
    ///
    /// Below [`X_FLOOR`] the tail is at most `E[I^{-r}] X_FLOOR^{s+r}` for
    /// any `r > -s`; above the cut-off `Q` it is at most `E[I^nu] Q^{s-nu}`
    /// for `s < nu < mu`, with `Q` chosen so this is below `eps / 4`.
    pub fn numeric_mellin(&self, s: f64, eps: f64) -> Result<(f64, f64)> {
        let mu = self.params.mu();
        if !(s < mu) {
            return Err(Error::Strip { re: s, mu });
        }
        let r = (1.0 - s).max(1.0);
        let lower_tail = self.mellin_real(-r)? * X_FLOOR.powf(s + r);

        let budget = 0.25 * eps;
        let gaps: Vec<f64> = if mu.is_finite() {
            [0.5, 0.7, 0.85, 0.95].iter().map(|f| f * (mu - s)).collect()
        } else {
            vec![1.0, 2.0, 4.0]
        };
        let mut ln_cut = f64::INFINITY;
        for gap in gaps {
            let ln_q_cut = (self.mellin_real(s + gap)?.ln() - budget.ln()) / gap;
            ln_cut = ln_cut.min(ln_q_cut);
        }
        let upper_tail = budget;

        let failure = Cell::new(None);
        let integrand = |u: f64| {
            let x = u.exp();
            match self.density(x) {
                Ok((d, _)) => d * ((s + 1.0) * u).exp(),
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        let (value, quad_err) = adaptive_quadrature(integrand, X_FLOOR.ln(), ln_cut.max(1.0), 0.5 * eps)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok((value, quad_err + lower_tail + upper_tail))
    }
}

fn q_pow(q: f64, s: Complex64) -> Complex64 {
    (s * q.ln()).exp()
}

/// `e^w - 1` without cancellation for small `|w|`.
fn expm1_complex(w: Complex64) -> Complex64 {
    let (x, y) = (w.re, w.im);
    let half = (0.5 * y).sin();
    Complex64::new(x.exp_m1() * y.cos() - 2.0 * half * half, x.exp() * y.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn law(q: f64, mu: f64) -> PerpetuityLaw {
        PerpetuityLaw::new(QParams::new(q, mu).unwrap(), SeriesTolerance::default()).unwrap()
    }

    #[test]
    fn levy_exponent_examples() {
        let p = QParams::new(0.5, 1.0).unwrap();
        assert_eq!(levy_exponent(&p, c(0.0, 0.0)), c(0.0, 0.0));
        assert!(levy_exponent(&p, c(-1.0, 0.0)).norm() < 1e-15);
        assert_relative_eq!(levy_exponent(&p, c(1.0, 0.0)).re, 0.75, max_relative = 1e-15);
    }

    #[test]
    fn wiener_hopf_examples() {
        let p = QParams::new(0.5, 1.3).unwrap();
        let (plus, minus) = wiener_hopf_factors(&p, c(0.0, 0.0));
        assert_eq!(plus, c(0.0, 0.0));
        assert_relative_eq!(minus.re, p.z() - 1.0);
        let s = c(1.0, 2.0);
        let (plus, _) = wiener_hopf_factors(&p, s);
        let (_, minus_neg) = wiener_hopf_factors(&p, -s);
        assert!((levy_exponent(&p, s) + plus * minus_neg).norm() < 1e-14);
    }

    #[test]
    fn mellin_examples() {
        let l = law(0.5, 2.0);
        for form in [MellinForm::Pochhammer, MellinForm::QGamma] {
            assert_relative_eq!(l.mellin(c(0.0, 0.0), form).unwrap().re, 1.0, max_relative = 1e-14);
            assert_relative_eq!(l.mellin(c(1.0, 0.0), form).unwrap().re, 4.0, max_relative = 1e-13);
        }
        assert!(matches!(l.mellin(c(2.0, 0.0), MellinForm::Pochhammer), Err(Error::Strip { .. })));
        assert!(l.mellin(c(0.5, 0.1), MellinForm::QGamma).is_err());
    }

    #[test]
    fn mellin_without_down_jumps() {
        let q = 0.5;
        let l = PerpetuityLaw::new(QParams::without_down_jumps(q).unwrap(), SeriesTolerance::default()).unwrap();
        // E[I^(q)] = sum q^n = 1/(1-q), E[I^2] = 2 / ((1-q)(1-q^2)).
        assert_relative_eq!(l.mellin_real(1.0).unwrap(), 2.0, max_relative = 1e-13);
        assert_relative_eq!(l.mellin_real(2.0).unwrap(), 2.0 / (0.5 * 0.75), max_relative = 1e-13);
        let g = l.mellin(c(7.5, 0.0), MellinForm::QGamma).unwrap().re;
        assert_relative_eq!(l.mellin_real(7.5).unwrap(), g, max_relative = 1e-10);
    }

    #[test]
    fn negative_integers_are_regular() {
        let l = law(0.3, 0.5);
        for k in 1..=4 {
            let at = l.mellin_real(-(k as f64)).unwrap();
            let near = l.mellin_real(-(k as f64) + 1e-7).unwrap();
            let g = l.mellin(c(-(k as f64), 0.0), MellinForm::QGamma).unwrap().re;
            assert!(at.is_finite() && at > 0.0);
            assert_relative_eq!(at, near, max_relative = 1e-5);
            assert_relative_eq!(at, g, max_relative = 1e-10);
        }
        // The regularised branch agrees with the direct branch across its edge.
        let a = l.mellin(c(-2.4999, 0.3), MellinForm::Pochhammer).unwrap();
        let b = l.mellin(c(-2.5001, 0.3), MellinForm::Pochhammer).unwrap();
        assert!((a - b).norm() < 1e-3 * a.norm());
    }

    #[test]
    fn forms_agree_on_grid() {
        for q in [0.3, 0.5, 0.8, 0.95] {
            for mu in [0.5, 1.0, 2.0, 5.0] {
                let l = law(q, mu);
                for s in [-3.0, -1.5, -0.5, 0.0, 0.3 * mu, 0.9 * mu] {
                    let p = l.mellin(c(s, 0.0), MellinForm::Pochhammer).unwrap().re;
                    let g = l.mellin(c(s, 0.0), MellinForm::QGamma).unwrap().re;
                    assert!((p - g).abs() <= 1e-10 * p.abs(), "q={q} mu={mu} s={s}: {p} vs {g}");
                }
            }
        }
    }

    #[test]
    fn recurrence_examples() {
        assert!(law(0.5, 1.5).mellin_recurrence_residual(c(0.7, 0.0)).unwrap() < 1e-9);
        assert!(law(0.9, 0.5).mellin_recurrence_residual(c(2.3, 0.0)).unwrap() < 1e-9);
        assert!(law(0.5, 1.5).mellin_recurrence_residual(c(1.0, 1.0)).unwrap() < 1e-9);
    }

    #[test]
    fn blows_up_at_strip_edge() {
        let l = law(0.5, 1.5);
        let mut prev = 0.0;
        for k in 1..=6 {
            let v = l.mellin_real(1.5 - 10f64.powi(-k)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn density_floor_and_domain() {
        let l = law(0.5, 1.5);
        let (v, err) = l.density(1e-9).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(err, l.density_sup_bound());
        assert!(l.density(0.0).is_err());
        assert!(l.density(-1.0).is_err());
    }

    #[test]
    fn density_without_down_jumps_matches_exponential_limit() {
        // For q -> 0 the law approaches Exp(1); at q = 0.01 the density at 1
        // is close to e^{-1}.
        let l = PerpetuityLaw::new(QParams::without_down_jumps(0.01).unwrap(), SeriesTolerance::default()).unwrap();
        let (v, _) = l.density(1.0).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 0.02);
    }

    #[test]
    fn cdf_is_derivative_consistent() {
        let l = law(0.5, 1.5);
        let h = 1e-4;
        let (a, _) = l.cdf(2.0).unwrap();
        let (b, _) = l.cdf(2.0 + h).unwrap();
        let (d, _) = l.density(2.0).unwrap();
        assert!(((b - a) / h - d).abs() < 10.0 * h);
        assert_eq!(l.cdf(0.0).unwrap().0, 0.0);
        // The two series agree where both are used.
        let (lo, _) = l.cdf(1.0).unwrap();
        let (s, _) = l.survival(1.0).unwrap();
        assert!((lo + s - 1.0).abs() < 1e-11);
    }

    #[test]
    fn cdf_is_monotone_and_reaches_one() {
        let l = law(0.8, 0.7);
        let mut prev = 0.0;
        for i in 0..60 {
            let y = 10f64.powf(-3.0 + 0.25 * i as f64);
            let (v, err) = l.cdf(y).unwrap();
            assert!(v + err >= prev, "y={y}");
            prev = v;
        }
        assert!(prev > 1.0 - 1e-6);
    }

    #[test]
    fn normalised_and_numeric_mellin() {
        let l = law(0.5, 1.5);
        let (mass, err) = l.numeric_mellin(0.0, 1e-8).unwrap();
        assert!((mass - 1.0).abs() < 1e-6, "{mass} +- {err}");
        let (m, _) = l.numeric_mellin(-0.5, 1e-7).unwrap();
        assert!((m - l.mellin_real(-0.5).unwrap()).abs() < 1e-4);
    }
}
