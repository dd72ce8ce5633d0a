use std::f64::consts::PI;

use num_complex::Complex64;

use super::pochhammer::ln_q_gamma;
use super::{check_q, SeriesTolerance};
use crate::error::{Error, Result};

// Lanczos approximation, g = 607/128 with 15 terms (Godfrey's coefficients).
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

fn lanczos_ln(s: Complex64) -> Complex64 {
    let x = s - 1.0;
    let mut series = Complex64::new(LANCZOS_COEF[0], 0.0);
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + series.ln()
}

fn lanczos_ln_real(x: f64) -> f64 {
    let x = x - 1.0;
    let mut series = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        series += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    HALF_LN_TWO_PI + (x + 0.5) * t.ln() - t + series.ln()
}

/// `sin(pi x)` with exact argument reduction.
fn sinpi(x: f64) -> f64 {
    let mut r = x % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r <= -1.0 {
        r += 2.0;
    }
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

fn cospi(x: f64) -> f64 {
    let mut r = (x % 2.0).abs();
    if r > 1.0 {
        r = 2.0 - r;
    }
    sinpi(0.5 - r)
}

fn sinpi_complex(s: Complex64) -> Complex64 {
    let (y_sinh, y_cosh) = ((PI * s.im).sinh(), (PI * s.im).cosh());
    Complex64::new(sinpi(s.re) * y_cosh, cospi(s.re) * y_sinh)
}

fn is_pole(s: Complex64) -> bool {
    s.im == 0.0 && s.re <= 0.0 && s.re == s.re.round()
}

/// `Gamma(s)` for complex `s`, via Lanczos and the reflection formula.
pub fn gamma_classical(s: Complex64) -> Result<Complex64> {
    if is_pole(s) {
        return Err(Error::Pole(format!("{s}")));
    }
    if s.re < 0.5 {
        let reflected = lanczos_ln(1.0 - s).exp();
        Ok(PI / (sinpi_complex(s) * reflected))
    } else {
        Ok(lanczos_ln(s).exp())
    }
}

/// A logarithm of `Gamma(s)` (not necessarily the principal branch of the
/// log-gamma function, but `exp` of it is `Gamma(s)`).
pub fn ln_gamma(s: Complex64) -> Result<Complex64> {
    if is_pole(s) {
        return Err(Error::Pole(format!("{s}")));
    }
    if s.re < 0.5 {
        Ok(Complex64::new(PI.ln(), 0.0) - sinpi_complex(s).ln() - lanczos_ln(1.0 - s))
    } else {
        Ok(lanczos_ln(s))
    }
}

pub fn gamma_real(x: f64) -> Result<f64> {
    gamma_classical(Complex64::new(x, 0.0)).map(|g| g.re)
}

/// `ln |Gamma(x)|` for real `x`.
pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if is_pole(Complex64::new(x, 0.0)) {
        return Err(Error::Pole(format!("{x}")));
    }
    if x < 0.5 {
        Ok(PI.ln() - sinpi(x).abs().ln() - lanczos_ln_real(1.0 - x))
    } else {
        Ok(lanczos_ln_real(x))
    }
}

/// `Gamma(x) / Gamma_q(x)` for any real `x`.
///
/// At non-positive integers both functions have simple poles and the ratio
/// extends continuously. Arguments `x <= 0` are shifted with the two
/// recurrences `Gamma(y+1) = y Gamma(y)` and
/// `Gamma_q(y+1) = (1-q^y)/(1-q) Gamma_q(y)`; each shift contributes the
/// factor `(1 - q^y) / ((1-q) y)`, which is analytic at `y = 0`.
pub fn gamma_over_qgamma(x: f64, q: f64, tol: &SeriesTolerance) -> Result<f64> {
    check_q(q)?;
    let ln_q = q.ln();
    let shift = if x > 0.0 { 0 } else { (-x).floor() as usize + 1 };
    let mut factor = 1.0;
    for i in 0..shift {
        let y = x + i as f64;
        let ratio = if y == 0.0 {
            -ln_q
        } else {
            -(y * ln_q).exp_m1() / y
        };
        factor *= ratio / (1.0 - q);
    }
    let y = x + shift as f64;
    let ln_ratio = ln_gamma_real(y)? - ln_q_gamma(y, q, tol)?;
    Ok(factor * ln_ratio.exp())
}
