//! Littlewood-Paley bump, dyadic projectors and diagonal spectral multipliers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::SpectralCoefficients;
use crate::spectrum::{eigenvalue, kg_frequency_of, FieldParams, Spin};

fn mollifier(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn smooth_step(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        return 1.0;
    }
    if lambda >= 2.0 {
        return 0.0;
    }
    let a = mollifier(2.0 - lambda);
    let b = mollifier(lambda - 1.0);
    a / (a + b)
}

/// `phi(lambda) = psi(lambda) - psi(2 lambda)`, supported in `[1/2, 2]`.
pub fn bump_phi(lambda: f64) -> f64 {
    if !(0.5..2.0).contains(&lambda) {
        return 0.0;
    }
    smooth_step(lambda) - smooth_step(2.0 * lambda)
}

/// `phi_0(lambda) = sum_{j <= 0} phi(2^{-j} lambda)`.
pub fn bump_phi0(lambda: f64) -> f64 {
    if lambda <= 0.5 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut x = lambda;
    while x < 2.0 {
        total += bump_phi(x);
        x *= 2.0;
    }
    total
}

/// `phi_j(lambda) = phi(2^{-j} lambda)`.
pub fn bump_phi_j(j: i32, lambda: f64) -> f64 {
    bump_phi(lambda * 2f64.powi(-j))
}

/// Spectral quantity a multiplier is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultiplierArg {
    SqrtH,
    KgUp,
    KgDown,
    Lambda,
}

impl MultiplierArg {
    pub fn evaluate(self, lambda: f64, params: &FieldParams) -> f64 {
        match self {
            MultiplierArg::SqrtH => lambda.sqrt(),
            MultiplierArg::KgUp => kg_frequency_of(lambda, params, Spin::Up),
            MultiplierArg::KgDown => kg_frequency_of(lambda, params, Spin::Down),
            MultiplierArg::Lambda => lambda,
        }
    }
}

/// Multiplies every coefficient by `F` evaluated at the chosen spectral argument.
pub fn apply_multiplier<F, T>(f: F, c: &SpectralCoefficients, arg: MultiplierArg) -> Result<SpectralCoefficients>
where
    F: Fn(f64) -> T,
    T: Into<Complex64>,
{
    let params = *c.params();
    let mut out = c.clone();
    for (idx, v) in out.iter_mut() {
        let lambda = eigenvalue(idx, &params);
        let factor: Complex64 = f(arg.evaluate(lambda, &params)).into();
        if !factor.re.is_finite() || !factor.im.is_finite() {
            return Err(Error::NonFiniteMultiplier { k: idx.k, ell: idx.ell });
        }
        *v *= factor;
    }
    Ok(out)
}

/// `phi(2^{-j} sqrt H) c`.
pub fn lp_project(j: i32, c: &SpectralCoefficients) -> SpectralCoefficients {
    apply_multiplier(|x| bump_phi_j(j, x), c, MultiplierArg::SqrtH).expect("bump values are finite")
}

/// `phi_0(sqrt H) c`.
pub fn lp_project_low(c: &SpectralCoefficients) -> SpectralCoefficients {
    apply_multiplier(bump_phi0, c, MultiplierArg::SqrtH).expect("bump values are finite")
}

/// Dyadic indices `j` with `phi_j` nonzero somewhere on `[lo, hi]`.
pub fn dyadic_range(lo: f64, hi: f64) -> std::ops::RangeInclusive<i32> {
    let first = (lo.log2() - 1.0).floor() as i32;
    let last = (hi.log2() + 1.0).ceil() as i32;
    first..=last
}
