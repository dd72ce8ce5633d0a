//! The q-gamma distribution `R_a = (1-q)^{-1} q^{sum_n G_{a q^n}}` on the
//! points `(1-q)^{-1} q^n`, and the inverse-gamma law it converges to.

use num_complex::Complex64;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::gamma_ur;

use crate::error::{domain, Error, Result};
use crate::qcalc::{
    check_q, ln_gamma_real, ln_q_gamma, ln_qpochhammer_inf_real,
    ln_qpochhammer_real, qpochhammer_inf, SeriesTolerance,
};
use crate::rng::RngState;

/// Tolerance used for the early-termination probabilities `(a q^n; q)_inf`.
const SAMPLER_EPS: f64 = 1e-14;

/// Tables are extended until the remaining mass is below this.
const TABLE_TAIL: f64 = 1e-17;

#[derive(Debug, Clone)]
pub struct QGammaLaw {
    a: f64,
    q: f64,
    kappa: f64,
    /// `ln (a; q)_inf`, i.e. `ln P(R = (1-q)^{-1})`.
    ln_poch_a: f64,
    /// Cumulative distribution over the exponent `n`.
    cdf_table: Vec<f64>,
    /// `ln (a q^n; q)_inf` for `n = 0, 1, ...`, increasing to 0.
    ln_no_more: Vec<f64>,
}

impl QGammaLaw {
    pub fn new(a: f64, q: f64) -> Result<Self> {
        check_q(q)?;
        if !(0.0..1.0).contains(&a) {
            return domain(format!("q-gamma parameter a must lie in [0, 1), got {a}"));
        }
        let tol = SeriesTolerance::limit_study().with_eps(SAMPLER_EPS);
        let kappa = if a > 0.0 { a.ln() / q.ln() } else { f64::INFINITY };
        let ln_poch_a = if a > 0.0 { ln_qpochhammer_inf_real(a, q, &tol)?.0 } else { 0.0 };
        let mut law = QGammaLaw {
            a,
            q,
            kappa,
            ln_poch_a,
            cdf_table: Vec::new(),
            ln_no_more: Vec::new(),
        };
        law.cdf_table = law.build_cdf_table();
        law.ln_no_more = law.build_no_more_table();
        Ok(law)
    }

    /// The law with `a = q^kappa`.
    pub fn from_kappa(kappa: f64, q: f64) -> Result<Self> {
        check_q(q)?;
        if !(kappa > 0.0) {
            return domain(format!("kappa must be > 0, got {kappa}"));
        }
        Self::new(q.powf(kappa), q)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `ln a / ln q`, infinite when `a = 0`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Support point `(1-q)^{-1} q^n`.
    pub fn support_point(&self, n: u64) -> f64 {
        (n as f64 * self.q.ln()).exp() / (1.0 - self.q)
    }

    /// `P(R = (1-q)^{-1} q^n) = (a;q)_inf a^n / (q;q)_n`.
    pub fn pmf(&self, n: u64) -> f64 {
        if self.a == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let ln_qq_n = ln_qpochhammer_real(self.q, self.q, n as usize);
        (self.ln_poch_a + n as f64 * self.a.ln() - ln_qq_n).exp()
    }

    /// Index `N` with `P(exponent > N)` below `eps`, together with the bound
    /// `(a;q)_inf a^{N+1} / ((q;q)_inf (1-a))`.
    pub fn tail_index(&self, eps: f64) -> Result<(u64, f64)> {
        if self.a == 0.0 {
            return Ok((0, 0.0));
        }
        let tol = SeriesTolerance::limit_study();
        let (ln_qq, _) = ln_qpochhammer_inf_real(self.q, self.q, &tol)?;
        let ln_bound_at = |n: u64| {
            self.ln_poch_a + (n + 1) as f64 * self.a.ln() - ln_qq - (-self.a).ln_1p()
        };
        let mut n = 0u64;
        while ln_bound_at(n) > eps.ln() {
            n += 1;
            if n > 100_000_000 {
                return Err(Error::CapExceeded { eps, max_terms: 100_000_000 });
            }
        }
        Ok((n, ln_bound_at(n).exp()))
    }

    /// Mellin transform `E[R^s] = (1-q)^{-s} (a;q)_inf / (a q^s; q)_inf`.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        let q = self.q;
        if self.a == 0.0 {
            return Ok((-s * (1.0 - q).ln()).exp());
        }
        if self.a * q.powf(s.re) >= 1.0 {
            return domain(format!(
                "q-gamma Mellin transform needs a q^Re(s) < 1 (a = {}, s = {s})",
                self.a
            ));
        }
        let tol = SeriesTolerance::limit_study();
        let aqs = self.a * (s * q.ln()).exp();
        let (den, _) = qpochhammer_inf(aqs, q, &tol)?;
        Ok((-s * (1.0 - q).ln() + self.ln_poch_a).exp() / den)
    }

    /// The same transform as `Gamma_q(s + kappa) / Gamma_q(kappa)`, real `s > -kappa`.
    pub fn mellin_qgamma_form(&self, s: f64) -> Result<f64> {
        if self.a == 0.0 {
            return Ok((1.0 - self.q).powf(-s));
        }
        if !(s + self.kappa > 0.0) {
            return domain("q-gamma form needs s + kappa > 0");
        }
        let tol = SeriesTolerance::limit_study();
        Ok((ln_q_gamma(s + self.kappa, self.q, &tol)? - ln_q_gamma(self.kappa, self.q, &tol)?).exp())
    }

    fn build_cdf_table(&self) -> Vec<f64> {
        if self.a == 0.0 {
            return vec![1.0];
        }
        let (ln_a, ln_q) = (self.a.ln(), self.q.ln());
        let mut table = Vec::new();
        let mut ln_p = self.ln_poch_a;
        let mut cum = 0.0;
        let mut n = 0u64;
        loop {
            cum += ln_p.exp();
            table.push(cum);
            n += 1;
            ln_p += ln_a - (-(n as f64 * ln_q).exp()).ln_1p();
            // Past the mode the ratio a/(1-q^n) is < 1, so the remaining mass is
            // at most p_n / (1 - a/(1-q^n)).
            let ratio = self.a / -(n as f64 * ln_q).exp_m1();
            if ratio < 1.0 && ln_p.exp() / (1.0 - ratio) < TABLE_TAIL {
                break;
            }
        }
        table
    }

    /// Built as suffix sums from the far end so entries close to 0 keep full
    /// relative accuracy.
    fn build_no_more_table(&self) -> Vec<f64> {
        if self.a == 0.0 {
            return vec![0.0];
        }
        let ln_q = self.q.ln();
        let mut terms = Vec::new();
        let mut n = 0u64;
        let tail = loop {
            let p = self.a * (n as f64 * ln_q).exp();
            if p / (1.0 - self.q) < TABLE_TAIL {
                break -p / (1.0 - self.q);
            }
            terms.push((-p).ln_1p());
            n += 1;
        };
        let mut table = vec![0.0; terms.len() + 1];
        table[terms.len()] = tail;
        for k in (0..terms.len()).rev() {
            table[k] = table[k + 1] + terms[k];
        }
        table
    }

    /// Exact draw of the exponent `n` by inverting the cumulative
    /// distribution. The precomputed table covers all but `1e-17` of the
    /// mass; beyond it the walk continues with the pmf recurrence.
    pub fn sample_exponent_invcdf(&self, rng: &mut RngState) -> u64 {
        if self.a == 0.0 {
            return 0;
        }
        loop {
            let u = rng.uniform();
            let idx = self.cdf_table.partition_point(|&c| c <= u);
            if idx < self.cdf_table.len() {
                return idx as u64;
            }
            let (ln_a, ln_q) = (self.a.ln(), self.q.ln());
            let mut n = self.cdf_table.len() as u64 - 1;
            let mut cum = *self.cdf_table.last().unwrap();
            let mut ln_p = self.ln_poch_a + n as f64 * ln_a
                - ln_qpochhammer_real(self.q, self.q, n as usize);
            loop {
                n += 1;
                ln_p += ln_a - (-(n as f64 * ln_q).exp()).ln_1p();
                let next = cum + ln_p.exp();
                if next > u {
                    return n;
                }
                if next == cum {
                    // Rounding exhausted the table; redraw.
                    break;
                }
                cum = next;
            }
        }
    }

    pub fn sample_invcdf(&self, rng: &mut RngState) -> f64 {
        self.support_point(self.sample_exponent_invcdf(rng))
    }

    /// Exact draw of `sum_n G_{a q^n}` from the geometric representation.
    ///
    /// From a fresh index `n` the event "all remaining geometrics vanish" has
    /// probability `P_n = (a q^n; q)_inf`. Otherwise the first non-zero index
    /// `T >= n` satisfies `P(T >= k) = P_n / P_k`; it is located in the table
    /// of `ln P_k`, `G_T` is drawn conditioned on being positive, and the walk
    /// restarts fresh at `T + 1`.
    pub fn sample_exponent_geomsum(&self, rng: &mut RngState) -> u64 {
        if self.a == 0.0 {
            return 0;
        }
        let table = &self.ln_no_more;
        let last = table.len() - 1;
        let ln_q = self.q.ln();
        let mut total = 0u64;
        let mut n = 0usize;
        while n < last {
            let ln_u = rng.uniform_open0().ln();
            if ln_u <= table[n] {
                break;
            }
            let threshold = table[n] - ln_u;
            let t = n + table[n + 1..].partition_point(|&l| l <= threshold);
            let t = t.min(last - 1);
            let p = self.a * (t as f64 * ln_q).exp();
            total += 1 + rng.geometric(p);
            n = t + 1;
        }
        total
    }

    pub fn sample_geomsum(&self, rng: &mut RngState) -> f64 {
        self.support_point(self.sample_exponent_geomsum(rng))
    }
}

/// The law of `1 / gamma_mu`: density `x^{-mu-1} e^{-1/x} / Gamma(mu)`.
#[derive(Debug, Clone)]
pub struct InverseGamma {
    mu: f64,
    ln_gamma_mu: f64,
    gamma: Gamma<f64>,
}

impl InverseGamma {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return domain(format!("inverse gamma needs finite mu > 0, got {mu}"));
        }
        let gamma = Gamma::new(mu, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(InverseGamma { mu, ln_gamma_mu: ln_gamma_real(mu)?, gamma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        (-(self.mu + 1.0) * x.ln() - 1.0 / x - self.ln_gamma_mu).exp()
    }

    /// `P(1/gamma_mu <= x) = P(gamma_mu >= 1/x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x.is_infinite() {
            return 1.0;
        }
        gamma_ur(self.mu, 1.0 / x)
    }

    pub fn mode(&self) -> f64 {
        1.0 / (self.mu + 1.0)
    }

    pub fn sample(&self, rng: &mut RngState) -> f64 {
        1.0 / self.gamma.sample(rng)
    }
}
