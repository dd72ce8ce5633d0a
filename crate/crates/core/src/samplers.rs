//! Three independent ways to draw `I`: simulating `zeta` in continuous time,
//! summing along the embedded random walk, and the factorisation
//! `I = (1-q)^{-1} I^(q) / R_z` into independent factors.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::perpetuity::{levy_exponent, PerpetuityLaw};
use crate::qcalc::{QParams, SeriesTolerance};
use crate::qgamma::QGammaLaw;
use crate::rng::RngState;

pub const DEFAULT_EPS_TAIL: f64 = 1e-4;
/// `delta` is this multiple of the scale `E[I^nu]^{1/nu}`.
pub const DEFAULT_DELTA_FACTOR: f64 = 1e-4;
pub const DEFAULT_EPS_SERIES: f64 = 1e-12;
/// Draws per chunk in batch generation; chunk `c` uses stream `c`.
pub const CHUNK_SIZE: usize = 4096;

/// Trajectory of `zeta` up to `horizon`: `levels[i]` is held on
/// `[jump_times[i-1], jump_times[i])`, with `levels[0] = 0` from time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonPath {
    jump_times: Vec<f64>,
    levels: Vec<i64>,
    horizon: f64,
}

impl SkeletonPath {
    pub fn new(jump_times: Vec<f64>, levels: Vec<i64>, horizon: f64) -> Result<Self> {
        if levels.len() != jump_times.len() + 1 {
            return domain("a path needs exactly one more level than jump times");
        }
        if levels[0] != 0 {
            return domain("paths start at level 0");
        }
        if levels.windows(2).any(|w| (w[1] - w[0]).abs() != 1) {
            return domain("consecutive levels must differ by one");
        }
        let mut prev = 0.0;
        for &t in &jump_times {
            if !(t > prev) {
                return domain("jump times must be positive and strictly increasing");
            }
            prev = t;
        }
        if !(horizon >= prev) {
            return domain("horizon must not precede the last jump");
        }
        Ok(SkeletonPath { jump_times, levels, horizon })
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn levels(&self) -> &[i64] {
        &self.levels
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn final_level(&self) -> i64 {
        *self.levels.last().expect("levels is never empty")
    }

    /// `(start, end, level)` for each constant piece.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, i64)> + '_ {
        let starts = std::iter::once(0.0).chain(self.jump_times.iter().copied());
        let ends = self.jump_times.iter().copied().chain(std::iter::once(self.horizon));
        starts.zip(ends).zip(self.levels.iter().copied()).map(|((a, b), l)| (a, b, l))
    }
}

/// One step of `zeta`: the holding time and the direction of the jump.
#[inline]
fn next_jump(rate: f64, p_up: f64, has_down: bool, rng: &mut RngState) -> (f64, i64) {
    let dt = rng.exponential() / rate;
    let step = if !has_down || rng.uniform() < p_up { 1 } else { -1 };
    (dt, step)
}

/// Simulates `zeta` on `[0, horizon]`: holding times Exp(1+z), up with
/// probability `1/(1+z)`.
pub fn simulate_zeta(params: &QParams, horizon: f64, rng: &mut RngState) -> Result<SkeletonPath> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return domain(format!("horizon must be finite and > 0, got {horizon}"));
    }
    let z = params.z();
    let (rate, p_up, has_down) = (1.0 + z, 1.0 / (1.0 + z), z > 0.0);
    let mut jump_times = Vec::new();
    let mut levels = vec![0i64];
    let mut t = 0.0;
    loop {
        let (dt, step) = next_jump(rate, p_up, has_down, rng);
        t += dt;
        if t >= horizon {
            break;
        }
        jump_times.push(t);
        levels.push(levels[levels.len() - 1] + step);
    }
    Ok(SkeletonPath { jump_times, levels, horizon })
}

/// `int_0^T q^{zeta_s} ds` over the skeleton, summed exactly.
pub fn exp_functional_of_path(path: &SkeletonPath, q: f64) -> f64 {
    let ln_q = q.ln();
    path.segments().map(|(a, b, l)| (l as f64 * ln_q).exp() * (b - a)).sum()
}

/// Moment order used in Markov tail bounds: `mu / 2`, or 1 without down-jumps.
pub fn markov_order(params: &QParams) -> f64 {
    if params.z() == 0.0 {
        1.0
    } else {
        params.mu() / 2.0
    }
}

/// Scale of `I` used to express `delta`: `E[I^nu]^{1/nu}`.
fn moment_scale(law: &PerpetuityLaw, nu: f64) -> Result<(f64, f64)> {
    let m = law.mellin_real(nu)?;
    Ok((m, m.powf(1.0 / nu)))
}

/// Continuous-time sampler truncated at the horizon `T` solving
/// `delta^{-nu} e^{T psi(-nu)} E[I^nu] = eps_tail`, so that the draw is
/// within `delta` of an exact one except on an event of probability
/// at most `eps_tail`.
#[derive(Debug, Clone)]
pub struct PathSampler {
    params: QParams,
    nu: f64,
    delta: f64,
    eps_tail: f64,
    horizon: f64,
}

impl PathSampler {
    /// `delta = None` uses `1e-4` times the moment scale.
    pub fn new(params: QParams, delta: Option<f64>, eps_tail: f64) -> Result<Self> {
        if !(eps_tail > 0.0 && eps_tail < 1.0) {
            return domain(format!("eps_tail must lie in (0, 1), got {eps_tail}"));
        }
        let law = PerpetuityLaw::new(params, SeriesTolerance::default())?;
        let nu = markov_order(&params);
        let (moment, scale) = moment_scale(&law, nu)?;
        let delta = delta.unwrap_or(DEFAULT_DELTA_FACTOR * scale);
        if !(delta > 0.0) {
            return domain(format!("delta must be > 0, got {delta}"));
        }
        let rate = levy_exponent(&params, Complex64::new(-nu, 0.0)).re;
        if !(rate < 0.0) {
            return Err(Error::UnreachableHorizon { rate });
        }
        let horizon = ((eps_tail.ln() + nu * delta.ln() - moment.ln()) / rate).max(0.0);
        Ok(PathSampler { params, nu, delta, eps_tail, horizon })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `I_T`, accumulated without storing the path.
    pub fn sample(&self, rng: &mut RngState) -> f64 {
        let z = self.params.z();
        let (rate, p_up, has_down) = (1.0 + z, 1.0 / (1.0 + z), z > 0.0);
        let q = self.params.q();
        let inv_q = 1.0 / q;
        let mut weight = 1.0;
        let mut level = 0i64;
        let (mut t, mut total) = (0.0, 0.0);
        loop {
            let (dt, step) = next_jump(rate, p_up, has_down, rng);
            if t + dt >= self.horizon {
                return total + weight * (self.horizon - t);
            }
            total += weight * dt;
            t += dt;
            level += step;
            // Recompute from the level now and then so products do not drift.
            weight = if level % 64 == 0 {
                q.powi(level as i32)
            } else if step > 0 {
                weight * q
            } else {
                weight * inv_q
            };
        }
    }
}

pub fn sample_perpetuity_path(
    params: &QParams,
    delta: f64,
    eps_tail: f64,
    rng: &mut RngState,
) -> Result<f64> {
    Ok(PathSampler::new(*params, Some(delta), eps_tail)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDraw {
    pub value: f64,
    /// `q^L`: the untouched remainder is `q^L` times an independent copy of `I`.
    pub remainder_scale: f64,
    /// Walk steps taken before first reaching level `L`.
    pub steps: u64,
}

/// Sums `(1+z)^{-1} q^{B_n} e_n` along the embedded walk until it first
/// reaches `level_stop`.
pub fn sample_perpetuity_series(params: &QParams, level_stop: u32, rng: &mut RngState) -> Result<SeriesDraw> {
    if level_stop == 0 {
        return domain("level_stop must be >= 1");
    }
    Ok(series_draw(params, level_stop, rng))
}

fn series_draw(params: &QParams, level_stop: u32, rng: &mut RngState) -> SeriesDraw {
    let z = params.z();
    let q = params.q();
    let p_up = 1.0 / (1.0 + z);
    let target = level_stop as i64;
    let mut level = 0i64;
    let mut weight = 1.0;
    let mut sum = 0.0;
    let mut steps = 0u64;
    while level < target {
        sum += weight * rng.exponential();
        steps += 1;
        if z == 0.0 || rng.uniform() < p_up {
            level += 1;
            weight *= q;
        } else {
            level -= 1;
            weight /= q;
        }
        if level % 64 == 0 {
            weight = q.powi(level as i32);
        }
    }
    SeriesDraw { value: sum * p_up, remainder_scale: q.powi(target as i32), steps }
}

/// Smallest `L` with `P(q^L I' > delta) <= (q^L / delta)^nu E[I^nu] <= eps_tail`.
pub fn level_for_tail(params: &QParams, delta: Option<f64>, eps_tail: f64) -> Result<u32> {
    if !(eps_tail > 0.0 && eps_tail < 1.0) {
        return domain(format!("eps_tail must lie in (0, 1), got {eps_tail}"));
    }
    let law = PerpetuityLaw::new(*params, SeriesTolerance::default())?;
    let nu = markov_order(params);
    let (moment, scale) = moment_scale(&law, nu)?;
    let delta = delta.unwrap_or(DEFAULT_DELTA_FACTOR * scale);
    let ln_ql = delta.ln() + (eps_tail.ln() - moment.ln()) / nu;
    let level = (ln_ql / params.q().ln()).ceil().max(1.0);
    if level > u32::MAX as f64 {
        return domain("required level exceeds the supported range");
    }
    Ok(level as u32)
}

/// Draws `(1-q)^{-1} I^(q) / R_z` with `I^(q) = sum_{n<N} q^n e_n` cut
/// where the mean of the omitted part, `q^N / (1-q)`, is below `eps_series`.
#[derive(Debug, Clone)]
pub struct FactorizationSampler {
    q: f64,
    n_terms: usize,
    omitted_mean: f64,
    r_law: QGammaLaw,
}

impl FactorizationSampler {
    pub fn new(params: &QParams, eps_series: f64) -> Result<Self> {
        if !(eps_series > 0.0) {
            return domain(format!("eps_series must be > 0, got {eps_series}"));
        }
        let q = params.q();
        let n_terms = ((eps_series * (1.0 - q)).ln() / q.ln()).ceil().max(1.0);
        if n_terms > 1e9 {
            return domain("eps_series too small for this q");
        }
        let n_terms = n_terms as usize;
        Ok(FactorizationSampler {
            q,
            n_terms,
            omitted_mean: q.powi(n_terms as i32) / (1.0 - q),
            r_law: QGammaLaw::new(params.z(), q)?,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    /// The draw and the conditional mean of what the truncation left out.
    pub fn sample_with_bias(&self, rng: &mut RngState) -> (f64, f64) {
        let mut weight = 1.0;
        let mut sum = 0.0;
        for _ in 0..self.n_terms {
            sum += weight * rng.exponential();
            weight *= self.q;
        }
        let r = self.r_law.sample_invcdf(rng);
        let scale = 1.0 / ((1.0 - self.q) * r);
        (sum * scale, self.omitted_mean * scale)
    }

    pub fn sample(&self, rng: &mut RngState) -> f64 {
        self.sample_with_bias(rng).0
    }
}

pub fn sample_perpetuity_factorization(params: &QParams, eps_series: f64, rng: &mut RngState) -> Result<f64> {
    Ok(FactorizationSampler::new(params, eps_series)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerId {
    Path,
    Series,
    Factorization,
    QGamma,
}

impl SamplerId {
    pub const ALL: [SamplerId; 4] = [SamplerId::Path, SamplerId::Series, SamplerId::Factorization, SamplerId::QGamma];

    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerId::Path => "path",
            SamplerId::Series => "series",
            SamplerId::Factorization => "factorization",
            SamplerId::QGamma => "qgamma",
        }
    }
}

impl fmt::Display for SamplerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SamplerId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Domain(format!("unknown sampler '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QGammaMethod {
    #[default]
    InverseCdf,
    GeometricSum,
}

/// Truncation settings shared by all samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub eps_tail: f64,
    /// `None` means `1e-4` times the moment scale.
    pub delta: Option<f64>,
    pub eps_series: f64,
    /// `None` derives the level from `delta` and `eps_tail`.
    pub level_stop: Option<u32>,
    pub qgamma_method: QGammaMethod,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            eps_tail: DEFAULT_EPS_TAIL,
            delta: None,
            eps_series: DEFAULT_EPS_SERIES,
            level_stop: None,
            qgamma_method: QGammaMethod::InverseCdf,
        }
    }
}

/// `n` draws of one sampler, reproducible from `(sampler_id, params, seed, n)`
/// and the configuration.
///
/// For `qgamma` the law is `R_a` with `a = params.z()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub sampler_id: SamplerId,
    pub params: QParams,
    pub seed: u64,
    pub n: usize,
    pub bias_bound: f64,
    pub values: Vec<f64>,
}

enum Prepared {
    Path(PathSampler),
    Series(QParams, u32),
    Factorization(FactorizationSampler),
    QGamma(QGammaLaw, QGammaMethod),
}

impl Prepared {
    /// A draw and its own bias contribution.
    fn draw(&self, rng: &mut RngState) -> (f64, f64) {
        match self {
            Prepared::Path(s) => (s.sample(rng), 0.0),
            Prepared::Series(p, l) => (series_draw(p, *l, rng).value, 0.0),
            Prepared::Factorization(s) => s.sample_with_bias(rng),
            Prepared::QGamma(law, QGammaMethod::InverseCdf) => (law.sample_invcdf(rng), 0.0),
            Prepared::QGamma(law, QGammaMethod::GeometricSum) => (law.sample_geomsum(rng), 0.0),
        }
    }
}

impl SampleBatch {
    /// Draws in chunks of [`CHUNK_SIZE`], chunk `c` from stream `c` of `seed`,
    /// so the result does not depend on the number of threads.
    ///
    /// `bias_bound` is `delta` for the path and series samplers (exceeded with
    /// probability at most `eps_tail` per draw), the largest conditional mean
    /// of the omitted series for the factorisation sampler, and 0 for `qgamma`.
    pub fn generate(
        sampler_id: SamplerId,
        params: QParams,
        seed: u64,
        n: usize,
        config: &SamplerConfig,
    ) -> Result<Self> {
        if n == 0 {
            return domain("n must be >= 1");
        }
        let (prepared, fixed_bias) = match sampler_id {
            SamplerId::Path => {
                let s = PathSampler::new(params, config.delta, config.eps_tail)?;
                let d = s.delta();
                (Prepared::Path(s), d)
            }
            SamplerId::Series => {
                let level = match config.level_stop {
                    Some(0) => return domain("level_stop must be >= 1"),
                    Some(l) => l,
                    None => level_for_tail(&params, config.delta, config.eps_tail)?,
                };
                let law = PerpetuityLaw::new(params, SeriesTolerance::default())?;
                let (_, scale) = moment_scale(&law, markov_order(&params))?;
                let delta = config.delta.unwrap_or(DEFAULT_DELTA_FACTOR * scale);
                (Prepared::Series(params, level), delta)
            }
            SamplerId::Factorization => {
                (Prepared::Factorization(FactorizationSampler::new(&params, config.eps_series)?), 0.0)
            }
            SamplerId::QGamma => (Prepared::QGamma(QGammaLaw::new(params.z(), params.q())?, config.qgamma_method), 0.0),
        };
        let chunks = n.div_ceil(CHUNK_SIZE);
        let parts: Vec<(Vec<f64>, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = RngState::with_stream(seed, c as u64);
                let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
                let mut values = Vec::with_capacity(len);
                let mut bias = 0.0f64;
                for _ in 0..len {
                    let (v, b) = prepared.draw(&mut rng);
                    values.push(v);
                    bias = bias.max(b);
                }
                (values, bias)
            })
            .collect();
        let mut values = Vec::with_capacity(n);
        let mut bias_bound = fixed_bias;
        for (part, b) in parts {
            values.extend(part);
            bias_bound = bias_bound.max(b);
        }
        Ok(SampleBatch { sampler_id, params, seed, n, bias_bound, values })
    }

    /// A `#` metadata line, a `value` header, then one value per line.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# sampler_id={},q={},mu={},z={},seed={},n={},bias_bound={}\nvalue\n",
            self.sampler_id,
            format_number(self.params.q()),
            format_number(self.params.mu()),
            format_number(self.params.z()),
            self.seed,
            self.n,
            format_number(self.bias_bound),
        );
        for v in &self.values {
            out.push_str(&format_number(*v));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// Shortest decimal that round-trips, in plain notation for moderate
/// exponents and scientific notation otherwise.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let exp = x.abs().log10().floor();
    if (-5.0..=16.0).contains(&exp) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
