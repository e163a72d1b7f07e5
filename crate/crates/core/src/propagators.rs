//! Heat, Schrödinger and half-Klein-Gordon flows, the Mehler kernel, the
//! subordination identity and the oscillatory integral `I(a, t)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{analyze, synthesize, SpectralCoefficients};
use crate::grid::GridField;
use crate::levels::{distance_grid, LevelSeries};
use crate::spectrum::{
    clockwise_angle, eigenvalue, kg_frequency, normalized_profiles, FieldParams, ModeBasis, ModeIndex, Spin,
};

/// Which exponential a unitary flow applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FlowSign {
    /// `e^{-itX}`: solves `i d_t u = X u`.
    #[default]
    Cauchy,
    /// `e^{+itX}`.
    Conjugate,
}

impl FlowSign {
    pub fn phase(self, t: f64, frequency: f64) -> Complex64 {
        match self {
            FlowSign::Cauchy => Complex64::from_polar(1.0, -t * frequency),
            FlowSign::Conjugate => Complex64::from_polar(1.0, t * frequency),
        }
    }
}

fn spin_shift(params: &FieldParams, shift: Option<Spin>) -> f64 {
    shift.map_or(0.0, |s| params.mass * params.mass + s.shift(params.b0))
}

/// Mehler kernel of `e^{-tH}`, or of `e^{-t(H + m^2 -+ B0)}` with a spin shift.
pub fn heat_mehler_kernel(t: f64, x: [f64; 2], y: [f64; 2], params: &FieldParams, shift: Option<Spin>) -> Complex64 {
    let b0 = params.b0;
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let modulus = b0 / (4.0 * PI * (b0 * t).sinh()) * (-b0 * d2 / (4.0 * (b0 * t).tanh()) - t * spin_shift(params, shift)).exp();
    Complex64::from_polar(modulus, -0.5 * b0 * (x[0] * y[1] - x[1] * y[0]))
}

/// `e^{-tH}` (optionally spin shifted) on coefficients.
pub fn heat_apply(t: f64, c: &SpectralCoefficients, shift: Option<Spin>) -> SpectralCoefficients {
    let params = *c.params();
    let extra = spin_shift(&params, shift);
    c.map_modes(|idx, v| v * (-t * (eigenvalue(idx, &params) + extra)).exp())
}

/// Quadrature of the Mehler kernel against grid samples, at arbitrary targets.
pub fn heat_apply_kernel(
    t: f64,
    f: &GridField,
    params: &FieldParams,
    shift: Option<Spin>,
    targets: &[[f64; 2]],
) -> Vec<Complex64> {
    let grid = &f.grid;
    targets
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..grid.n_r() {
                let w = grid.area_weight(i);
                let mut ring = Complex64::new(0.0, 0.0);
                for j in 0..grid.n_theta() {
                    ring += heat_mehler_kernel(t, x, grid.point(i, j), params, shift) * f.at(i, j);
                }
                acc += ring * w;
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatRoute {
    Spectral,
    Kernel,
}

/// `e^{-tH} f` on the basis grid by either route.
pub fn heat_apply_grid(t: f64, f: &GridField, basis: &ModeBasis, route: HeatRoute) -> Result<GridField> {
    if !f.grid.same_shape(basis.grid()) {
        return Err(Error::GridMismatch("heat flow input lives on a different grid".into()));
    }
    match route {
        HeatRoute::Spectral => synthesize(&heat_apply(t, &analyze(f, basis)?, None), basis),
        HeatRoute::Kernel => {
            let grid = basis.grid();
            let targets: Vec<[f64; 2]> = (0..grid.n_r())
                .flat_map(|i| (0..grid.n_theta()).map(move |j| (i, j)))
                .map(|(i, j)| grid.point(i, j))
                .collect();
            Ok(GridField {
                grid: grid.clone(),
                values: heat_apply_kernel(t, f, basis.params(), None, &targets),
            })
        }
    }
}

/// Kernel `sum F(idx) V~(x) conj(V~(y))` over `|k| <= K`, `l <= L`, with analytic profiles.
pub fn spectral_kernel(
    params: &FieldParams,
    k_max: usize,
    l_max: usize,
    x: [f64; 2],
    y: [f64; 2],
    f: impl Fn(ModeIndex, f64) -> Complex64 + Sync,
) -> Complex64 {
    let (rx, ry) = (x[0].hypot(x[1]), y[0].hypot(y[1]));
    let dtheta = clockwise_angle(x) - clockwise_angle(y);
    let k_max = k_max as i64;
    (-k_max..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut px = Vec::new();
            let mut py = Vec::new();
            normalized_profiles(k, l_max, params.b0, rx, &mut px);
            normalized_profiles(k, l_max, params.b0, ry, &mut py);
            let radial: Complex64 = (0..=l_max)
                .map(|ell| {
                    let idx = ModeIndex::new(k, ell);
                    f(idx, eigenvalue(idx, params)) * (px[ell] * py[ell])
                })
                .sum();
            radial * Complex64::from_polar(1.0, k as f64 * dtheta)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum()
}

/// `e^{-itH}` (or its conjugate) on coefficients.
pub fn schrodinger_apply(t: f64, c: &SpectralCoefficients, sign: FlowSign) -> SpectralCoefficients {
    let params = *c.params();
    c.map_modes(|idx, v| v * sign.phase(t, eigenvalue(idx, &params)))
}

/// Closed-form and level-summed values of `sup |e^{-itH}(x, y)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchrodingerSup {
    pub closed_form: f64,
    pub level_sum: f64,
}

/// Damping `e^{-eps lambda / B0}` applied to the level sum of the Schrödinger
/// kernel, which turns it into the Mehler kernel at complex time `eps/B0 + it`.
pub const SCHRODINGER_ABEL: f64 = 0.005;

/// `B0/(4pi |sin(B0 t)|)` together with the supremum over distances of the
/// Abel-summed level series of `e^{-itH}`.
pub fn schrodinger_kernel_sup(t: f64, params: &FieldParams) -> Result<SchrodingerSup> {
    let b0 = params.b0;
    let turns = b0 * t / PI;
    if (turns - turns.round()).abs() < 1e-9 {
        return Err(Error::ResonantTime { t });
    }
    let closed_form = b0 / (4.0 * PI * (b0 * t).sin().abs());
    let levels = (40.0 / (2.0 * SCHRODINGER_ABEL)).ceil() as usize;
    let series = LevelSeries::from_fn(params, levels, |n, lam| {
        Complex64::from_polar((-SCHRODINGER_ABEL * (2 * n + 1) as f64).exp(), -t * lam)
    });
    let distances = distance_grid(6.0 / b0.sqrt(), 121);
    let (level_sum, _) = series.sup_modulus(&distances);
    Ok(SchrodingerSup { closed_form, level_sum })
}

/// `e^{-+it sqrt(H + m^2 -+ B0)}` on coefficients.
pub fn halfwave_apply(t: f64, c: &SpectralCoefficients, spin: Spin, sign: FlowSign) -> SpectralCoefficients {
    let params = *c.params();
    c.map_modes(|idx, v| {
        let omega = kg_frequency(idx, &params, spin);
        if omega == 0.0 {
            v
        } else {
            v * sign.phase(t, omega)
        }
    })
}

/// Trapezoid values of an integral on successive halvings of the step.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureTrace {
    pub value: Complex64,
    pub levels: Vec<Complex64>,
}

const MAX_QUAD_POINTS: usize = 1 << 24;

/// `int_0^inf e^{-y (x r + 1/(4r))} r^{-3/2} dr` for `Re y > 0`, by the
/// trapezoid rule in `u = ln r` with step halving until successive values
/// agree to `1e-13`.
pub fn damped_integral(y: Complex64, x: f64) -> Result<QuadratureTrace> {
    if !(y.re > 0.0) || !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("need Re y > 0 and x > 0 (got y={y}, x={x})")));
    }
    let lo = (-30.0f64).min(-(180.0 / y.re).ln());
    let hi = 10.0f64.max((45.0 / (y.re * x)).ln());
    let g = |u: f64| -> Complex64 {
        let r = u.exp();
        (-y * (x * r + 0.25 / r)).exp() * (-0.5 * u).exp()
    };
    let mut n = 80usize;
    let mut h = (hi - lo) / n as f64;
    let mut sum: Complex64 = (0..=n).map(|i| g(lo + i as f64 * h) * if i == 0 || i == n { 0.5 } else { 1.0 }).sum();
    let mut levels = vec![sum * h];
    loop {
        let mids: Complex64 = (0..n)
            .into_par_iter()
            .map(|i| g(lo + (i as f64 + 0.5) * h))
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        sum += mids;
        n *= 2;
        h /= 2.0;
        let value = sum * h;
        let prev = *levels.last().expect("at least one level");
        levels.push(value);
        let change = (value - prev).norm();
        if levels.len() >= 4 && change <= 1e-13 * value.norm() {
            return Ok(QuadratureTrace { value, levels });
        }
        if n >= MAX_QUAD_POINTS {
            let rel = change / value.norm();
            if rel <= 1e-6 {
                return Ok(QuadratureTrace { value, levels });
            }
            return Err(Error::QuadratureFailure(format!(
                "trapezoid refinement stalled at relative change {rel:e} with {n} intervals"
            )));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinationSample {
    pub x_tilde: f64,
    pub y: Complex64,
}

/// `e^{-y sqrt(x)}`.
pub fn subordination_lhs(s: &SubordinationSample) -> Complex64 {
    (-s.y * s.x_tilde.sqrt()).exp()
}

/// `(y / 2 sqrt(pi)) int_0^inf e^{-s x - y^2/(4s)} s^{-3/2} ds`, evaluated on the
/// ray `s = y r` so that complex `y` with `Re y > 0` converges absolutely.
pub fn subordination_rhs(s: &SubordinationSample) -> Result<QuadratureTrace> {
    let trace = damped_integral(s.y, s.x_tilde)?;
    let scale = s.y.sqrt() / (2.0 * PI.sqrt());
    Ok(QuadratureTrace {
        value: trace.value * scale,
        levels: trace.levels.into_iter().map(|v| v * scale).collect(),
    })
}

/// `|LHS - RHS| / |LHS|` of the subordination identity.
pub fn subordination_residual(s: &SubordinationSample) -> Result<f64> {
    let lhs = subordination_lhs(s);
    Ok((lhs - subordination_rhs(s)?.value).norm() / lhs.norm())
}

/// `I_eps(a, t) = int_0^inf e^{ira} e^{it/(4r)} e^{-eps a r / t - eps/(4r)} r^{-3/2} dr`.
pub fn oscillatory_i_regularized(a: f64, t: f64, eps: f64) -> Result<Complex64> {
    if !(a > 0.0) || !(t > 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("need a, t, eps > 0 (got {a}, {t}, {eps})")));
    }
    Ok(damped_integral(Complex64::new(eps, -t), a / t)?.value)
}

/// Halvings of `eps` fed to the extrapolation in [`oscillatory_i`].
pub const OSCILLATORY_STEPS: usize = 5;

/// `I(a, t)` as the `eps -> 0` limit of [`oscillatory_i_regularized`], by
/// polynomial (Neville) extrapolation from `eps, eps/2, ...`.
pub fn oscillatory_i(a: f64, t: f64, eps: f64) -> Result<Complex64> {
    let hs: Vec<f64> = (0..OSCILLATORY_STEPS).map(|i| eps / 2f64.powi(i as i32)).collect();
    let mut table = hs
        .iter()
        .map(|&e| oscillatory_i_regularized(a, t, e))
        .collect::<Result<Vec<_>>>()?;
    let mut change = f64::INFINITY;
    for level in 1..hs.len() {
        let before = table[0];
        for i in 0..hs.len() - level {
            let (h0, h1) = (hs[i], hs[i + level]);
            table[i] = (table[i + 1] * h0 - table[i] * h1) / (h0 - h1);
        }
        change = (table[0] - before).norm() / table[0].norm();
    }
    if !change.is_finite() {
        return Err(Error::NoConvergence { terms: hs.len(), last_term: change });
    }
    Ok(table[0])
}

/// `2 sqrt(pi) t^{-1/2} e^{i(sqrt(a t) + pi/4)}`, the value of `I(a, t)`.
pub fn oscillatory_i_closed_form(a: f64, t: f64) -> Complex64 {
    Complex64::from_polar(2.0 * PI.sqrt() / t.sqrt(), (a * t).sqrt() + PI / 4.0)
}
