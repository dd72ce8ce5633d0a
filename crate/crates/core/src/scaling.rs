//! The rescaled process `W_t = -(ln q)/2 * zeta_{2t/(1-q)^2}` and its
//! approach to Brownian motion with drift `mu` as `q -> 1`.

use num_complex::Complex64;
use rand::RngCore;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::perpetuity::levy_exponent;
use crate::qcalc::QParams;
use crate::qgamma::InverseGamma;
use crate::rng::RngState;
use crate::samplers::{exp_functional_of_path, simulate_zeta, PathSampler, SampleBatch, SamplerConfig, SamplerId, SkeletonPath};
use crate::stats::ks_one_sample;

/// In the limit study the omitted part of `I^(q)` contributes at most this
/// much, in expectation, to `(1-q)^2 I` relative to `1 / ((1-q) R)`.
pub const LIMIT_SCALED_BIAS: f64 = 1e-6;

/// Minimum sample size for the limit study.
pub const LIMIT_MIN_N: usize = 10_000;

/// `W_t = space_scale * zeta_{time_scale * t}` on a simulated skeleton.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    base: SkeletonPath,
    q: f64,
    space_scale: f64,
    time_scale: f64,
}

impl RescaledPath {
    pub fn new(base: SkeletonPath, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return domain(format!("q must lie in (0, 1), got {q}"));
        }
        Ok(RescaledPath { base, q, space_scale: -q.ln() / 2.0, time_scale: 2.0 / (1.0 - q).powi(2) })
    }

    /// Simulates `zeta` long enough to cover `[0, horizon]` in rescaled time.
    pub fn simulate(params: &QParams, horizon: f64, rng: &mut RngState) -> Result<Self> {
        if !(horizon > 0.0) {
            return domain(format!("horizon must be > 0, got {horizon}"));
        }
        let q = params.q();
        let time_scale = 2.0 / (1.0 - q).powi(2);
        Self::new(simulate_zeta(params, horizon * time_scale, rng)?, q)
    }

    pub fn base(&self) -> &SkeletonPath {
        &self.base
    }

    pub fn space_scale(&self) -> f64 {
        self.space_scale
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Horizon in rescaled time.
    pub fn horizon(&self) -> f64 {
        self.base.horizon() / self.time_scale
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let u = t * self.time_scale;
        let idx = self.base.jump_times().partition_point(|&s| s <= u);
        self.space_scale * self.base.levels()[idx] as f64
    }

    pub fn final_value(&self) -> f64 {
        self.space_scale * self.base.final_level() as f64
    }

    /// `2 int_0^T e^{-2 W_s} ds`, summed in rescaled coordinates.
    pub fn functional(&self) -> f64 {
        self.base
            .segments()
            .map(|(a, b, l)| {
                let w = self.space_scale * l as f64;
                2.0 * (-2.0 * w).exp() * ((b - a) / self.time_scale)
            })
            .sum()
    }
}

/// `psi_q(s) = -2 (1 - q^{-s/2})(1 - q^{mu+s/2}) / (1-q)^2`, the exponent
/// with `E[e^{s W_t}] = e^{t psi_q(s)}`.
pub fn psi_q(params: &QParams, s: Complex64) -> Complex64 {
    let q = params.q();
    let ln_q = q.ln();
    let a = 1.0 - (-s / 2.0 * ln_q).exp();
    let b = 1.0 - params.z() * (s / 2.0 * ln_q).exp();
    -2.0 * a * b / (1.0 - q).powi(2)
}

/// `(E W_t, Var W_t)`.
pub fn wald_moments(params: &QParams, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return domain(format!("t must be > 0, got {t}"));
    }
    let q = params.q();
    let ln_q = q.ln();
    let denom = (1.0 - q).powi(2);
    let mean = -(1.0 - params.z()) * ln_q * t / denom;
    let var = 0.5 * ln_q * ln_q * (1.0 + params.z()) * t / denom;
    Ok((mean, var))
}

/// Both sides of `(1-q)^2 int_0^{T time_scale} q^{zeta} = 2 int_0^T e^{-2W}`
/// computed on the same path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryCheck {
    pub scaled_functional: f64,
    pub rescaled_functional: f64,
}

impl TrajectoryCheck {
    pub fn from_path(path: &RescaledPath) -> Self {
        TrajectoryCheck {
            scaled_functional: (1.0 - path.q).powi(2) * exp_functional_of_path(path.base(), path.q),
            rescaled_functional: path.functional(),
        }
    }

    pub fn abs_diff(&self) -> f64 {
        (self.scaled_functional - self.rescaled_functional).abs()
    }

    pub fn rel_diff(&self) -> f64 {
        self.abs_diff() / self.scaled_functional.abs()
    }
}

pub fn trajectory_identity_check(params: &QParams, horizon_rescaled: f64, rng: &mut RngState) -> Result<TrajectoryCheck> {
    Ok(TrajectoryCheck::from_path(&RescaledPath::simulate(params, horizon_rescaled, rng)?))
}

/// The path sampler's horizon expressed in rescaled time.
pub fn default_rescaled_horizon(params: &QParams) -> Result<f64> {
    let sampler = PathSampler::new(*params, None, crate::samplers::DEFAULT_EPS_TAIL)?;
    Ok(sampler.horizon() * (1.0 - params.q()).powi(2) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub q: f64,
    pub n: usize,
    pub ks_distance: f64,
    pub ks_critical_1pct: f64,
}

/// KS distance between `n` draws of `(1-q)^2 I` and the inverse gamma law
/// with parameter `mu`, for each `q` in the grid.
///
/// Each grid point draws from the factorisation sampler with its own seed,
/// taken from `rng`.
pub fn dufresne_limit_study(mu: f64, q_grid: &[f64], n: usize, rng: &mut RngState) -> Result<Vec<LimitRow>> {
    if q_grid.is_empty() {
        return domain("q grid is empty");
    }
    if q_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("q grid must be strictly increasing");
    }
    if n < LIMIT_MIN_N {
        return domain(format!("limit study needs n >= {LIMIT_MIN_N}, got {n}"));
    }
    let reference = InverseGamma::new(mu)?;
    let mut rows = Vec::with_capacity(q_grid.len());
    for &q in q_grid {
        let params = QParams::new(q, mu)?;
        let config = SamplerConfig { eps_series: LIMIT_SCALED_BIAS / (1.0 - q).powi(2), ..SamplerConfig::default() };
        let seed = rng.next_u64();
        let batch = SampleBatch::generate(SamplerId::Factorization, params, seed, n, &config)?;
        let scale = (1.0 - q).powi(2);
        let scaled: Vec<f64> = batch.values.iter().map(|v| v * scale).collect();
        let ks = ks_one_sample(&scaled, |x| reference.cdf(x))?;
        rows.push(LimitRow { q, n, ks_distance: ks.statistic, ks_critical_1pct: ks.critical_1pct });
    }
    Ok(rows)
}

/// CSV with columns `q,n,ks_distance,ks_critical_1pct`.
pub fn limit_rows_to_csv(rows: &[LimitRow]) -> String {
    use crate::samplers::format_number;
    let mut out = String::from("q,n,ks_distance,ks_critical_1pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_number(r.q),
            r.n,
            format_number(r.ks_distance),
            format_number(r.ks_critical_1pct)
        ));
    }
    out
}

/// `psi_q(s) = time_scale * psi(s/2)`; exposed for cross-checks.
pub fn psi_q_from_levy(params: &QParams, s: Complex64) -> Complex64 {
    let time_scale = 2.0 / (1.0 - params.q()).powi(2);
    time_scale * levy_exponent(params, s / 2.0)
}
