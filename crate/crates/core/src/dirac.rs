//! The magnetic Dirac operator `D = -[[-m, D+], [D-, m]]` on spinor coefficients.
//!
//! With the clockwise angle of [`crate::grid`], `D-` maps the upper mode `k` to
//! the lower mode `k - 1`; radially it is `i(d_r + k/r + B0 r/2)`. Its adjoint
//! `D+` maps the lower mode `n` to the upper mode `n + 1` and is radially
//! `i(d_r - n/r - B0 r/2)`. Each upper mode pairs with one lower mode, except
//! the lowest-level upper modes (`k <= 0`, `l = 0`) which `D-` annihilates.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::SpectralCoefficients;
use crate::multipliers::bump_phi_j;
use crate::propagators::FlowSign;
use crate::specfun::laguerre_p;
use crate::spectrum::{eigenvalue, kg_frequency, normalized_profiles, FieldParams, ModeBasis, ModeIndex, Spin};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Upper component on angular modes `k`, lower component on `k - 1`; both
/// share the truncation `|k| <= K`, `l <= L` in their own labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorCoefficients {
    pub upper: SpectralCoefficients,
    pub lower: SpectralCoefficients,
}

/// Angular mode of the lower component paired with upper mode `k`.
pub fn lower_partner_mode(k: i64) -> i64 {
    k - 1
}

impl SpinorCoefficients {
    pub fn zeros(params: FieldParams, k_max: usize, l_max: usize) -> Self {
        SpinorCoefficients {
            upper: SpectralCoefficients::zeros(params, k_max, l_max),
            lower: SpectralCoefficients::zeros(params, k_max, l_max),
        }
    }

    pub fn new(upper: SpectralCoefficients, lower: SpectralCoefficients) -> Result<Self> {
        if upper.k_max() != lower.k_max() || upper.l_max() != lower.l_max() || upper.params() != lower.params() {
            return Err(Error::InvalidArgument("spinor components need equal truncations and parameters".into()));
        }
        Ok(SpinorCoefficients { upper, lower })
    }

    pub fn params(&self) -> &FieldParams {
        self.upper.params()
    }

    pub fn k_max(&self) -> usize {
        self.upper.k_max()
    }

    pub fn l_max(&self) -> usize {
        self.upper.l_max()
    }

    pub fn with_params(self, params: FieldParams) -> Self {
        SpinorCoefficients {
            upper: self.upper.with_params(params),
            lower: self.lower.with_params(params),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.upper.l2_norm().powi(2) + self.lower.l2_norm().powi(2)).sqrt()
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        Ok(self.upper.inner(&other.upper)? + self.lower.inner(&other.lower)?)
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.upper.scale(alpha);
        self.lower.scale(alpha);
    }

    pub fn add_scaled(&mut self, alpha: Complex64, other: &Self) -> Result<()> {
        self.upper.add_scaled(alpha, &other.upper)?;
        self.lower.add_scaled(alpha, &other.lower)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let mut d = self.clone();
        d.add_scaled(Complex64::new(-1.0, 0.0), other).expect("same truncation");
        d.l2_norm()
    }
}

/// Image of one basis mode under `D-` or `D+`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry {
    /// `None` when the image vanishes (lowest-level upper modes under `D-`).
    pub target: Option<ModeIndex>,
    pub coeff: Complex64,
    /// Largest projection onto non-target modes of the target angular sector.
    pub leakage: f64,
}

/// Coefficients of `D-` on upper modes and `D+` on lower modes.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderTable {
    params: FieldParams,
    k_max: usize,
    l_max: usize,
    minus: Vec<LadderEntry>,
    plus: Vec<LadderEntry>,
}

/// Off-target projection above which a ladder image counts as unresolved.
pub const LEAKAGE_TOL: f64 = 1e-8;

fn minus_target(idx: ModeIndex) -> Option<ModeIndex> {
    if idx.k >= 1 {
        Some(ModeIndex::new(idx.k - 1, idx.ell))
    } else if idx.ell >= 1 {
        Some(ModeIndex::new(idx.k - 1, idx.ell - 1))
    } else {
        None
    }
}

fn plus_target(idx: ModeIndex) -> ModeIndex {
    if idx.k >= 0 {
        ModeIndex::new(idx.k + 1, idx.ell)
    } else {
        ModeIndex::new(idx.k + 1, idx.ell + 1)
    }
}

/// Unnormalized radial profile and its derivative, using
/// `P'_{k,l}(u) = -l/(|k|+1) P_{|k|+1,l-1}(u)`.
fn profile_with_derivative(idx: ModeIndex, b0: f64, r: f64) -> (f64, f64) {
    let alpha = idx.k.unsigned_abs() as f64;
    let u = b0 * r * r / 2.0;
    let envelope = (alpha * r.ln() - b0 * r * r / 4.0).exp();
    let p = laguerre_p(idx.k, idx.ell, u);
    let dp = if idx.ell == 0 {
        0.0
    } else {
        -(idx.ell as f64) / (alpha + 1.0) * laguerre_p(idx.k.abs() + 1, idx.ell - 1, u)
    };
    let value = envelope * p;
    let derivative = envelope * ((alpha / r - b0 * r / 2.0) * p + b0 * r * dp);
    (value, derivative)
}

impl LadderTable {
    /// Exact coefficients: `D-` sends upper `(k, l)` to `i sqrt(2B0(k+l))` times
    /// lower `(k-1, l)` for `k >= 1` and to `-i sqrt(2B0 l)` times lower
    /// `(k-1, l-1)` for `k <= 0`; `D+` carries the conjugates back.
    pub fn closed_form(params: FieldParams, k_max: usize, l_max: usize) -> Self {
        let b0 = params.b0;
        let shape = SpectralCoefficients::zeros(params, k_max, l_max);
        let minus = shape
            .modes()
            .map(|idx| {
                let coeff = if idx.k >= 1 {
                    I * (2.0 * b0 * (idx.k as f64 + idx.ell as f64)).sqrt()
                } else {
                    -I * (2.0 * b0 * idx.ell as f64).sqrt()
                };
                let target = minus_target(idx);
                LadderEntry {
                    target,
                    coeff: if target.is_some() { coeff } else { ZERO },
                    leakage: 0.0,
                }
            })
            .collect();
        let plus = shape
            .modes()
            .map(|idx| {
                let coeff = if idx.k >= 0 {
                    -I * (2.0 * b0 * (idx.k as f64 + 1.0 + idx.ell as f64)).sqrt()
                } else {
                    I * (2.0 * b0 * (idx.ell as f64 + 1.0)).sqrt()
                };
                LadderEntry {
                    target: Some(plus_target(idx)),
                    coeff,
                    leakage: 0.0,
                }
            })
            .collect();
        LadderTable {
            params,
            k_max,
            l_max,
            minus,
            plus,
        }
    }

    /// Applies the radial first-order forms of `D-` and `D+` to every sampled
    /// basis profile (derivatives taken analytically) and projects the image on
    /// the eigenbasis of the target angular sector by the grid quadrature.
    pub fn from_basis(basis: &ModeBasis) -> Result<Self> {
        let params = *basis.params();
        let b0 = params.b0;
        let (k_max, l_max) = (basis.k_max(), basis.l_max());
        let grid = basis.grid();
        let nodes = grid.radial_nodes();
        let weights = grid.radial_weights();
        let shape = SpectralCoefficients::zeros(params, k_max, l_max);
        let modes: Vec<ModeIndex> = shape.modes().collect();

        let project = |idx: ModeIndex, lowering: bool| -> LadderEntry {
            let (target, out_k) = if lowering {
                (minus_target(idx), idx.k - 1)
            } else {
                let t = plus_target(idx);
                (Some(t), t.k)
            };
            let norm = basis.norm_constant(idx);
            let top = l_max.max(target.map_or(0, |t| t.ell));
            let mut proj = vec![ZERO; top + 1];
            let mut prof = Vec::with_capacity(top + 1);
            for (i, &r) in nodes.iter().enumerate() {
                let (v, dv) = profile_with_derivative(idx, b0, r);
                let kf = idx.k as f64;
                let image = if lowering {
                    I * (dv + kf / r * v + b0 * r / 2.0 * v) / norm
                } else {
                    I * (dv - kf / r * v - b0 * r / 2.0 * v) / norm
                };
                normalized_profiles(out_k, top, b0, r, &mut prof);
                let w = 2.0 * std::f64::consts::PI * weights[i] * r;
                for (acc, p) in proj.iter_mut().zip(&prof) {
                    *acc += image * (p * w);
                }
            }
            let coeff = target.map_or(ZERO, |t| proj[t.ell]);
            let leakage = proj
                .iter()
                .enumerate()
                .filter(|(ell, _)| target.map_or(true, |t| t.ell != *ell))
                .map(|(_, v)| v.norm())
                .fold(0.0, f64::max);
            LadderEntry { target, coeff, leakage }
        };

        let minus: Vec<LadderEntry> = modes.par_iter().map(|&idx| project(idx, true)).collect();
        let plus: Vec<LadderEntry> = modes.par_iter().map(|&idx| project(idx, false)).collect();
        for (idx, e) in modes.iter().zip(minus.iter().chain(plus.iter())) {
            if e.leakage > LEAKAGE_TOL {
                return Err(Error::LeakageError {
                    k: idx.k,
                    ell: idx.ell,
                    leakage: e.leakage,
                });
            }
        }
        for (idx, e) in modes.iter().zip(plus.iter()) {
            if e.leakage > LEAKAGE_TOL {
                return Err(Error::LeakageError {
                    k: idx.k,
                    ell: idx.ell,
                    leakage: e.leakage,
                });
            }
        }
        Ok(LadderTable {
            params,
            k_max,
            l_max,
            minus,
            plus,
        })
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    fn slot(&self, idx: ModeIndex) -> usize {
        (idx.k + self.k_max as i64) as usize * (self.l_max + 1) + idx.ell
    }

    fn in_window(&self, idx: ModeIndex) -> bool {
        idx.k.unsigned_abs() as usize <= self.k_max && idx.ell <= self.l_max
    }

    /// `D-` on the upper mode `idx`.
    pub fn minus(&self, idx: ModeIndex) -> &LadderEntry {
        &self.minus[self.slot(idx)]
    }

    /// `D+` on the lower mode `idx`.
    pub fn plus(&self, idx: ModeIndex) -> &LadderEntry {
        &self.plus[self.slot(idx)]
    }

    /// Upper mode whose partner is inside the truncation (or which has no partner).
    pub fn upper_interior(&self, idx: ModeIndex) -> bool {
        self.minus(idx).target.map_or(true, |t| self.in_window(t))
    }

    pub fn lower_interior(&self, idx: ModeIndex) -> bool {
        self.plus(idx).target.map_or(true, |t| self.in_window(t))
    }

    /// Largest off-target projection in the table.
    pub fn max_leakage(&self) -> f64 {
        self.minus.iter().chain(&self.plus).map(|e| e.leakage).fold(0.0, f64::max)
    }

    /// Plain-text export: `k ell target_k target_ell re im` per mode. Modes
    /// with a vanishing image are written with target `- -`.
    pub fn write_table<W: Write>(&self, mut out: W, lowering: bool) -> Result<()> {
        let (name, entries) = if lowering { ("minus", &self.minus) } else { ("plus", &self.plus) };
        writeln!(
            out,
            "# ladder-{name} B0={:e} K={} L={}",
            self.params.b0, self.k_max, self.l_max
        )?;
        writeln!(out, "# columns: k ell target_k target_ell re im")?;
        let shape = SpectralCoefficients::zeros(self.params, self.k_max, self.l_max);
        for (idx, e) in shape.modes().zip(entries) {
            match e.target {
                Some(t) => writeln!(out, "{} {} {} {} {:e} {:e}", idx.k, idx.ell, t.k, t.ell, e.coeff.re, e.coeff.im)?,
                None => writeln!(out, "{} {} - - 0e0 0e0", idx.k, idx.ell)?,
            }
        }
        Ok(())
    }

    fn check(&self, s: &SpinorCoefficients) -> Result<()> {
        if s.k_max() != self.k_max || s.l_max() != self.l_max {
            return Err(Error::TruncationExceeded {
                k: s.k_max(),
                l: s.l_max(),
                basis_k: self.k_max,
                basis_l: self.l_max,
            });
        }
        Ok(())
    }
}

/// `D s` with the matrix `-[[-m, D+], [D-, m]]`. Fails when a nonzero amplitude
/// would be sent outside the truncation.
pub fn apply_dirac(s: &SpinorCoefficients, table: &LadderTable) -> Result<SpinorCoefficients> {
    table.check(s)?;
    let overflow = s
        .upper
        .iter()
        .filter(|(idx, v)| *v != ZERO && !table.upper_interior(*idx))
        .count()
        + s.lower
            .iter()
            .filter(|(idx, v)| *v != ZERO && !table.lower_interior(*idx))
            .count();
    if overflow > 0 {
        return Err(Error::TruncationOverflow { count: overflow });
    }
    Ok(apply_dirac_truncated(s, table))
}

/// `D s` compressed to the truncation: images leaving it are dropped, which
/// keeps the finite matrix Hermitian.
pub fn apply_dirac_truncated(s: &SpinorCoefficients, table: &LadderTable) -> SpinorCoefficients {
    let m = s.params().mass;
    let mut out = SpinorCoefficients::zeros(*s.params(), s.k_max(), s.l_max());
    for (idx, v) in s.upper.iter() {
        out.upper[idx] += v * m;
        let e = table.minus(idx);
        if let Some(t) = e.target.filter(|t| table.in_window(*t)) {
            out.lower[t] -= e.coeff * v;
        }
    }
    for (idx, v) in s.lower.iter() {
        out.lower[idx] -= v * m;
        let e = table.plus(idx);
        if let Some(t) = e.target.filter(|t| table.in_window(*t)) {
            out.upper[t] -= e.coeff * v;
        }
    }
    out
}

/// `diag(H + m^2 - B0, H + m^2 + B0) s`.
pub fn squared_diagonal(s: &SpinorCoefficients) -> SpinorCoefficients {
    let p = *s.params();
    SpinorCoefficients {
        upper: s.upper.map_modes(|idx, v| v * kg_frequency(idx, &p, Spin::Up).powi(2)),
        lower: s.lower.map_modes(|idx, v| v * kg_frequency(idx, &p, Spin::Down).powi(2)),
    }
}

/// Restriction of `s` to modes whose ladder partner lies inside the truncation.
pub fn interior_part(s: &SpinorCoefficients, table: &LadderTable) -> SpinorCoefficients {
    SpinorCoefficients {
        upper: s.upper.map_modes(|idx, v| if table.upper_interior(idx) { v } else { ZERO }),
        lower: s.lower.map_modes(|idx, v| if table.lower_interior(idx) { v } else { ZERO }),
    }
}

/// `||D^2 s - diag(...) s|| / ||diag(...) s||` on the interior part of `s`.
pub fn squaring_residual(s: &SpinorCoefficients, table: &LadderTable) -> Result<f64> {
    table.check(s)?;
    let inner = interior_part(s, table);
    let twice = apply_dirac_truncated(&apply_dirac_truncated(&inner, table), table);
    let diag = squared_diagonal(&inner);
    let scale = diag.l2_norm();
    let gap = twice.distance(&diag);
    Ok(if scale == 0.0 { gap } else { gap / scale })
}

/// Frequencies `|D|` per component of the truncated operator: the
/// Klein-Gordon frequency on paired modes, `m` where the partner was cut off.
fn truncated_frequencies(table: &LadderTable, s: &SpinorCoefficients) -> (SpectralCoefficients, SpectralCoefficients) {
    let p = *s.params();
    let up = s.upper.map_modes(|idx, _| {
        let w = if table.upper_interior(idx) { kg_frequency(idx, &p, Spin::Up) } else { p.mass };
        Complex64::new(w, 0.0)
    });
    let down = s.lower.map_modes(|idx, _| {
        let w = if table.lower_interior(idx) { kg_frequency(idx, &p, Spin::Down) } else { p.mass };
        Complex64::new(w, 0.0)
    });
    (up, down)
}

fn sinc_t(omega: f64, t: f64) -> f64 {
    let x = omega * t;
    if x.abs() < 1e-8 {
        t * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / omega
    }
}

/// `u(t) = cos(t|D|) s -+ i sin(t|D|)/|D| D s`: the exact exponential of the
/// truncated Hermitian operator, `e^{-itD}` for [`FlowSign::Cauchy`].
pub fn evolve_dirac(t: f64, s: &SpinorCoefficients, table: &LadderTable, sign: FlowSign) -> Result<SpinorCoefficients> {
    table.check(s)?;
    let ds = apply_dirac_truncated(s, table);
    let (w_up, w_down) = truncated_frequencies(table, s);
    let direction = match sign {
        FlowSign::Cauchy => -I,
        FlowSign::Conjugate => I,
    };
    let step = |c: &SpectralCoefficients, dc: &SpectralCoefficients, w: &SpectralCoefficients| {
        c.map_modes(|idx, v| {
            let omega = w[idx].re;
            v * (omega * t).cos() + direction * dc[idx] * sinc_t(omega, t)
        })
    };
    Ok(SpinorCoefficients {
        upper: step(&s.upper, &ds.upper, &w_up),
        lower: step(&s.lower, &ds.lower, &w_down),
    })
}

/// `phi(2^{-j} |D|)` on a spinor; `|D|` is diagonal with the Klein-Gordon
/// frequency of each component, so this commutes with the Dirac flow.
pub fn lp_project_dirac(j: i32, s: &SpinorCoefficients, table: &LadderTable) -> SpinorCoefficients {
    let (w_up, w_down) = truncated_frequencies(table, s);
    SpinorCoefficients {
        upper: s.upper.map_modes(|idx, v| v * bump_phi_j(j, w_up[idx].re)),
        lower: s.lower.map_modes(|idx, v| v * bump_phi_j(j, w_down[idx].re)),
    }
}

/// Both sides of `||D f||^2 = <(H + m^2 - B0) f1, f1> + <(H + m^2 + B0) f2, f2>`,
/// and the squared `H^1` norm `sum (lambda + m^2 + B0)|c|^2` bounding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub h1_squared: f64,
}

pub fn dirac_norm_identity(s: &SpinorCoefficients, table: &LadderTable) -> Result<NormIdentity> {
    let ds = apply_dirac(s, table)?;
    let p = *s.params();
    let rhs = s
        .upper
        .iter()
        .map(|(idx, v)| (eigenvalue(idx, &p) + p.mass * p.mass - p.b0) * v.norm_sqr())
        .sum::<f64>()
        + s.lower
            .iter()
            .map(|(idx, v)| (eigenvalue(idx, &p) + p.mass * p.mass + p.b0) * v.norm_sqr())
            .sum::<f64>();
    let h1_squared = s
        .upper
        .iter()
        .chain(s.lower.iter())
        .map(|(idx, v)| (eigenvalue(idx, &p) + p.mass * p.mass + p.b0) * v.norm_sqr())
        .sum();
    Ok(NormIdentity {
        lhs: ds.l2_norm().powi(2),
        rhs,
        h1_squared,
    })
}

/// Solutions of the two integer windows `0 < |k|+1 < 2` and `0 < |k+1|+1 < 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeficiencyVerdict {
    pub first_window: Vec<i64>,
    pub second_window: Vec<i64>,
    pub common: Vec<i64>,
}

pub fn deficiency_window_check() -> DeficiencyVerdict {
    // each window bounds |k| by 2, so a short scan is exhaustive
    let scan = -4i64..=4;
    let first_window: Vec<i64> = scan.clone().filter(|k| 0 < k.abs() + 1 && k.abs() + 1 < 2).collect();
    let second_window: Vec<i64> = scan.filter(|k| 0 < (k + 1).abs() + 1 && (k + 1).abs() + 1 < 2).collect();
    let common = first_window.iter().copied().filter(|k| second_window.contains(k)).collect();
    DeficiencyVerdict {
        first_window,
        second_window,
        common,
    }
}
