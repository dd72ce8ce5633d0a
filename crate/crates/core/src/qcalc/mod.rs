//! Scalar q-calculus: q-Pochhammer symbols, the q-gamma and q-exponential
//! functions, the Jackson q-integral and the classical gamma function.
//!
//! Every infinite series or product is truncated with an explicit bound on
//! the discarded tail, controlled by a [`SeriesTolerance`].

mod gamma;
mod integral;
mod pochhammer;

pub use gamma::{gamma_classical, gamma_over_qgamma, gamma_real, ln_gamma, ln_gamma_real};
pub use integral::{q_integral, Envelope};
pub use pochhammer::{
    ln_qpochhammer_inf_real, ln_qpochhammer_real, q_exponential, q_gamma, ln_q_gamma,
    qpochhammer_finite, qpochhammer_finite_with, qpochhammer_inf, PochhammerConvention,
};
pub(crate) use pochhammer::ln_qpochhammer_inf;

use serde::Serialize;

use crate::error::{domain, Result};

/// Model parameters: `0 < q < 1`, `mu > 0` and the down-jump rate `z = q^mu`.
///
/// `mu = +inf` is allowed and means `z = 0`, i.e. the walk never steps down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QParams {
    q: f64,
    mu: f64,
    z: f64,
}

impl QParams {
    pub fn new(q: f64, mu: f64) -> Result<Self> {
        check_q(q)?;
        if !(mu > 0.0) {
            return domain(format!("mu must be > 0, got {mu}"));
        }
        Ok(QParams { q, mu, z: q.powf(mu) })
    }

    /// The pure-birth case `z = 0`.
    pub fn without_down_jumps(q: f64) -> Result<Self> {
        check_q(q)?;
        Ok(QParams { q, mu: f64::INFINITY, z: 0.0 })
    }

    /// Build from the down-jump rate directly. Only used where a law is
    /// naturally indexed by `z` (the q-gamma distribution `R_z`).
    pub fn from_z(q: f64, z: f64) -> Result<Self> {
        check_q(q)?;
        if !(0.0..1.0).contains(&z) {
            return domain(format!("z must lie in [0, 1), got {z}"));
        }
        if z == 0.0 {
            return Self::without_down_jumps(q);
        }
        Ok(QParams { q, mu: z.ln() / q.ln(), z })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn z(&self) -> f64 {
        self.z
    }
}

/// Truncation control for series and products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTolerance {
    pub eps_abs: f64,
    pub max_terms: usize,
}

impl SeriesTolerance {
    pub const DEFAULT_EPS: f64 = 1e-12;
    pub const DEFAULT_MAX_TERMS: usize = 10_000;
    /// Cap used for studies with q very close to 1.
    pub const LIMIT_STUDY_MAX_TERMS: usize = 100_000;

    pub fn new(eps_abs: f64, max_terms: usize) -> Result<Self> {
        if !(eps_abs > 0.0) {
            return domain(format!("eps_abs must be > 0, got {eps_abs}"));
        }
        if max_terms == 0 {
            return domain("max_terms must be >= 1");
        }
        Ok(SeriesTolerance { eps_abs, max_terms })
    }

    pub fn limit_study() -> Self {
        SeriesTolerance {
            eps_abs: Self::DEFAULT_EPS,
            max_terms: Self::LIMIT_STUDY_MAX_TERMS,
        }
    }

    pub fn with_eps(self, eps_abs: f64) -> Self {
        SeriesTolerance { eps_abs, ..self }
    }
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        SeriesTolerance {
            eps_abs: Self::DEFAULT_EPS,
            max_terms: Self::DEFAULT_MAX_TERMS,
        }
    }
}

pub(crate) fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        domain(format!("q must lie in (0, 1), got {q}"))
    }
}
