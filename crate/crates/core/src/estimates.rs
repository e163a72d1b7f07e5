//! Measurements of the dispersive, Bernstein, square-function, norm
//! equivalence and Strichartz inequalities, collected into CSV reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dirac::{evolve_dirac, LadderTable, SpinorCoefficients};
use crate::error::{Error, Result};
use crate::fields::{analyze, lp_norm, sobolev_besov_norm, synthesize, NormVariant, SpectralCoefficients};
use crate::grid::{gauss_legendre, GridField, PANEL_ORDER};
use crate::levels::{distance_grid, LevelSeries};
use crate::multipliers::{bump_phi_j, dyadic_range, lp_project};
use crate::propagators::FlowSign;
use crate::spectrum::{eigenvalue, kg_frequency, kg_frequency_of, normalized_profiles, FieldParams, ModeBasis, ModeIndex, Spin};

/// A CSV row of one of the report schemas.
pub trait ReportRow {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// Least-squares line `y = slope x + intercept`; `residual` is the RMS misfit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "a line fit needs at least two paired points (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("line fit abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LinearFit { slope, intercept, residual })
}

/// Rows of one scan with the metadata needed to reproduce them.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<R> {
    pub rows: Vec<R>,
    pub metadata: BTreeMap<String, String>,
    pub fit: Option<LinearFit>,
}

impl<R: ReportRow> EstimateReport<R> {
    pub fn new(rows: Vec<R>) -> Self {
        EstimateReport {
            rows,
            metadata: BTreeMap::new(),
            fit: None,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(R::HEADER)?;
        for row in &self.rows {
            w.write_record(row.cells())?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key = value` lines, fit results last.
    pub fn write_metadata<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(out, "{k} = {v}")?;
        }
        if let Some(fit) = self.fit {
            writeln!(out, "fit_slope = {}", fit.slope)?;
            writeln!(out, "fit_intercept = {}", fit.intercept)?;
            writeln!(out, "fit_residual = {}", fit.residual)?;
        }
        Ok(())
    }
}

/// `max/min` of a set of positive values.
pub fn spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi / lo
}

fn real(v: f64) -> String {
    format!("{v}")
}

fn exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        real(v)
    }
}

fn finite_ratio(measured: f64, bound: f64) -> Result<f64> {
    let ratio = measured / bound;
    if ratio.is_finite() {
        Ok(ratio)
    } else {
        Err(Error::InvalidArgument(format!("ratio {measured}/{bound} is not finite")))
    }
}

// ---------------------------------------------------------------- admissibility

/// Exponents `(q, p)` with `2/q <= 1/2 - 1/p` and the regularity `s = 1 - 1/q - 2/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissiblePair {
    pub q: f64,
    pub p: f64,
    pub s: f64,
}

pub fn admissible_check(q: f64, p: f64) -> (bool, f64) {
    let s = 1.0 - 1.0 / q - 2.0 / p;
    let ok = (2.0..=f64::INFINITY).contains(&q) && (2.0..f64::INFINITY).contains(&p) && 2.0 / q <= 0.5 - 1.0 / p + 1e-15;
    (ok, s)
}

impl AdmissiblePair {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        match admissible_check(q, p) {
            (true, s) => Ok(AdmissiblePair { q, p, s }),
            (false, _) => Err(Error::NotAdmissible { q, p }),
        }
    }
}

/// `-(alpha + sigma)(1/2 - 1/p) + 1/q`.
pub fn keel_tao_exponent(alpha: f64, sigma: f64, q: f64, p: f64) -> f64 {
    -(alpha + sigma) * (0.5 - 1.0 / p) + 1.0 / q
}

/// `Lambda(h) = h^{-(alpha + sigma)(1/2 - 1/p) + 1/q}`.
pub fn keel_tao_bound(alpha: f64, sigma: f64, q: f64, p: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    Ok(h.powf(keel_tao_exponent(alpha, sigma, q, p)))
}

// ---------------------------------------------------------------- decay

/// Landau levels `n` with `phi(2^{-j} sqrt(lambda_n))` nonzero lie below this count.
fn levels_for(j: i32, params: &FieldParams) -> usize {
    let top = 4f64.powi(j + 1) / params.b0;
    ((top - 1.0) / 2.0).ceil().max(0.0) as usize + 1
}

/// Number of levels holding every `phi_j` weight above `threshold`.
fn levels_needed(j: i32, params: &FieldParams, threshold: f64) -> usize {
    let n = levels_for(j, params);
    (0..n)
        .rev()
        .find(|&l| bump_phi_j(j, ((2 * l + 1) as f64 * params.b0).sqrt()) > threshold)
        .map_or(0, |l| l + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayRow {
    pub j: i32,
    pub t: f64,
    pub b0: f64,
    pub mass: f64,
    pub spin: Spin,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

impl ReportRow for DecayRow {
    const HEADER: &'static [&'static str] = &["j", "t", "B0", "m", "spin", "measured", "bound", "ratio"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.j.to_string(),
            real(self.t),
            real(self.b0),
            real(self.mass),
            self.spin.label().into(),
            real(self.measured),
            real(self.bound),
            real(self.ratio),
        ]
    }
}

/// Settings of a decay scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayScan {
    pub js: Vec<i32>,
    /// Times are given through `2^j t`.
    pub scaled_times: Vec<f64>,
    /// Keep only points with `2^{-j} t <= pi/(8 B0)`.
    pub enforce_regime: bool,
    pub distances: usize,
    pub max_levels: usize,
    pub fit_window: (f64, f64),
}

impl Default for DecayScan {
    fn default() -> Self {
        DecayScan {
            js: vec![3, 4, 5],
            scaled_times: geomspace(4.0, 64.0, 9),
            enforce_regime: true,
            distances: 6000,
            max_levels: 1 << 16,
            fit_window: (4.0, 64.0),
        }
    }
}

/// `count` logarithmically spaced values from `a` to `b`.
pub fn geomspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// `sup_{x,y} |K(x, y)|` for `K` the kernel of `phi(2^{-j} sqrt H) e^{-it sqrt(H + m^2 -+ B0)}`.
pub fn decay_kernel_sup(j: i32, t: f64, params: &FieldParams, spin: Spin, distances: usize, max_levels: usize) -> Result<f64> {
    let needed = levels_needed(j, params, 1e-3);
    if needed > max_levels {
        return Err(Error::TruncationTooSmall(format!(
            "j={j} needs {needed} Landau levels, the cap is {max_levels}"
        )));
    }
    let levels = levels_for(j, params).min(max_levels);
    let series = LevelSeries::from_fn(params, levels, |_, lam| {
        bump_phi_j(j, lam.sqrt()) * FlowSign::Cauchy.phase(t, kg_frequency_of(lam, params, spin))
    });
    let d_max = 1.3 * t + 3.0 / params.b0.sqrt();
    Ok(series.sup_modulus(&distance_grid(d_max, distances)).0)
}

/// Measured `L^1 -> L^infinity` norms against `2^{2j}(1 + 2^j t)^{-1/2}`,
/// with a fit of `log(measured/2^{2j})` against `log(2^j t)`.
pub fn decay_scan(scan: &DecayScan, params: &FieldParams, spin: Spin) -> Result<EstimateReport<DecayRow>> {
    let points: Vec<(i32, f64)> = scan
        .js
        .iter()
        .flat_map(|&j| scan.scaled_times.iter().map(move |&jt| (j, jt / 2f64.powi(j))))
        .filter(|&(j, t)| !scan.enforce_regime || t / 2f64.powi(j) <= PI / (8.0 * params.b0) * (1.0 + 1e-12))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(j, t)| {
            let measured = decay_kernel_sup(j, t, params, spin, scan.distances, scan.max_levels)?;
            let bound = 4f64.powi(j) / (1.0 + 2f64.powi(j) * t).sqrt();
            Ok(DecayRow {
                j,
                t,
                b0: params.b0,
                mass: params.mass,
                spin,
                measured,
                bound,
                ratio: finite_ratio(measured, bound)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (lo, hi) = scan.fit_window;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .map(|r| (2f64.powi(r.j) * r.t, r))
        .filter(|(jt, _)| *jt >= lo * (1.0 - 1e-12) && *jt <= hi * (1.0 + 1e-12))
        .map(|(jt, r)| (jt.ln(), (r.measured / 4f64.powi(r.j)).ln()))
        .unzip();
    let fit = if xs.len() >= 2 { Some(fit_line(&xs, &ys)?) } else { None };
    let mut report = EstimateReport::new(rows)
        .with_meta("task", "decay-scan")
        .with_meta("B0", params.b0)
        .with_meta("m", params.mass)
        .with_meta("spin", spin.label())
        .with_meta("bump", "phi = psi(x) - psi(2x), psi smooth step 1 on [0,1], 0 on [2,inf)")
        .with_meta("distances", scan.distances)
        .with_meta("fit_window", format!("{lo},{hi}"))
        .with_meta("regime", if scan.enforce_regime { "2^-j t <= pi/(8 B0)" } else { "all" });
    report.fit = fit;
    Ok(report)
}

// ---------------------------------------------------------------- bernstein

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinRow {
    pub j: i32,
    pub q: f64,
    pub p: f64,
    pub measured: f64,
    pub scale: f64,
    pub ratio: f64,
}

impl ReportRow for BernsteinRow {
    const HEADER: &'static [&'static str] = &["j", "q", "p", "measured", "scale", "ratio"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.j.to_string(),
            exponent(self.q),
            exponent(self.p),
            real(self.measured),
            real(self.scale),
            real(self.ratio),
        ]
    }
}

/// `||phi_j(sqrt H)||_{q -> p}` for `(1, inf)`, `(2, inf)` and `(2, 2)`.
pub fn bernstein_norm(j: i32, q: f64, p: f64, params: &FieldParams) -> Result<f64> {
    let series = LevelSeries::from_fn(params, levels_for(j, params), |_, lam| bump_phi_j(j, lam.sqrt()));
    if q == 1.0 && p.is_infinite() {
        Ok(series.sup_modulus(&distance_grid(6.0 / params.b0.sqrt(), 601)).0)
    } else if q == 2.0 && p.is_infinite() {
        Ok(series.row_l2_norm())
    } else if q == 2.0 && p == 2.0 {
        Ok(series.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max))
    } else {
        Err(Error::UnsupportedPair { q, p })
    }
}

pub fn bernstein_scan(js: &[i32], pairs: &[(f64, f64)], params: &FieldParams) -> Result<EstimateReport<BernsteinRow>> {
    let mut rows = Vec::new();
    for &(q, p) in pairs {
        for &j in js {
            let measured = bernstein_norm(j, q, p, params)?;
            let scale = 2f64.powf(2.0 * j as f64 * (1.0 / q - 1.0 / p));
            rows.push(BernsteinRow {
                j,
                q,
                p,
                measured,
                scale,
                ratio: finite_ratio(measured, scale)?,
            });
        }
    }
    Ok(EstimateReport::new(rows).with_meta("task", "bernstein-scan").with_meta("B0", params.b0))
}

// ---------------------------------------------------------------- square function

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareFunctionCheck {
    /// `||(sum_j |phi_j f|^2)^{1/2}||_p`
    pub lhs: f64,
    /// `||f||_p`
    pub rhs: f64,
    /// `rhs / lhs`
    pub ratio: f64,
}

/// Square function of `f` over the dyadic blocks meeting the spectrum of the basis.
pub fn square_function_check(f: &GridField, basis: &ModeBasis, p: f64) -> Result<SquareFunctionCheck> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("square function needs 1 < p < inf, got {p}")));
    }
    let c = analyze(f, basis)?;
    let params = *c.params();
    let top = eigenvalue(ModeIndex::new(c.k_max() as i64, c.l_max()), &params).sqrt();
    let mut square = GridField::zeros(&f.grid);
    for j in dyadic_range(params.b0.sqrt(), top) {
        let block = lp_project(j, &c);
        if block.l2_norm() == 0.0 {
            continue;
        }
        let piece = synthesize(&block, basis)?;
        for (acc, v) in square.values.iter_mut().zip(&piece.values) {
            acc.re += v.norm_sqr();
        }
    }
    square.values.iter_mut().for_each(|v| v.re = v.re.sqrt());
    let lhs = lp_norm(&square, p)?;
    let rhs = lp_norm(&synthesize(&c, basis)?, p)?;
    Ok(SquareFunctionCheck {
        lhs,
        rhs,
        ratio: finite_ratio(rhs, lhs)?,
    })
}

// ---------------------------------------------------------------- norm equivalence

#[derive(Debug, Clone, PartialEq)]
pub struct NormRow {
    pub id: usize,
    pub s: f64,
    pub besov: f64,
    pub sobolev_hom: f64,
    pub sobolev_inhom: f64,
    pub ratio1: f64,
    pub ratio2: f64,
}

impl ReportRow for NormRow {
    const HEADER: &'static [&'static str] = &["id", "s", "besov", "sobolev_hom", "sobolev_inhom", "ratio1", "ratio2"];
    fn cells(&self) -> Vec<String> {
        vec![
            self.id.to_string(),
            real(self.s),
            real(self.besov),
            real(self.sobolev_hom),
            real(self.sobolev_inhom),
            real(self.ratio1),
            real(self.ratio2),
        ]
    }
}

/// Homogeneous `B^s_{2,2}` norm against both Sobolev norms of order `s`.
pub fn norm_equivalence_scan(family: &[SpectralCoefficients], s: f64) -> Result<EstimateReport<NormRow>> {
    if !(0.0..=2.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("norm equivalence is scanned for s in [0, 2], got {s}")));
    }
    let rows = family
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let besov = sobolev_besov_norm(c, s, 2.0, 2.0, NormVariant::HomogeneousBesov, None)?;
            let sobolev_hom = sobolev_besov_norm(c, s, 2.0, 2.0, NormVariant::HomogeneousSobolev, None)?;
            let sobolev_inhom = sobolev_besov_norm(c, s, 2.0, 2.0, NormVariant::InhomogeneousSobolev, None)?;
            Ok(NormRow {
                id,
                s,
                besov,
                sobolev_hom,
                sobolev_inhom,
                ratio1: finite_ratio(besov, sobolev_hom)?,
                ratio2: finite_ratio(besov, sobolev_inhom)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateReport::new(rows).with_meta("task", "norm-check").with_meta("s", s))
}

// ---------------------------------------------------------------- strichartz

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrichartzFlow {
    HalfwaveUp,
    HalfwaveDown,
    Dirac,
}

impl StrichartzFlow {
    pub fn label(self) -> &'static str {
        match self {
            StrichartzFlow::HalfwaveUp => "halfwave-up",
            StrichartzFlow::HalfwaveDown => "halfwave-down",
            StrichartzFlow::Dirac => "dirac",
        }
    }
}

/// Initial data: a scalar field for the half-wave flows, a spinor for the Dirac flow.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowState {
    Scalar(SpectralCoefficients),
    Spinor(SpinorCoefficients),
}

impl FlowState {
    pub fn l2_norm(&self) -> f64 {
        match self {
            FlowState::Scalar(c) => c.l2_norm(),
            FlowState::Spinor(s) => s.l2_norm(),
        }
    }

    fn params(&self) -> FieldParams {
        match self {
            FlowState::Scalar(c) => *c.params(),
            FlowState::Spinor(s) => *s.params(),
        }
    }

    fn components(&self) -> Vec<&SpectralCoefficients> {
        match self {
            FlowState::Scalar(c) => vec![c],
            FlowState::Spinor(s) => vec![&s.upper, &s.lower],
        }
    }

    /// `||(H + m^2 + B0)^{s/2} f||`, summed over components.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let p = self.params();
        self.components()
            .iter()
            .flat_map(|c| c.iter())
            .map(|(idx, v)| (eigenvalue(idx, &p) + p.mass * p.mass + p.b0).powf(s) * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `phi(2^{-j} sqrt H) delta_0`, as radial coefficients on the `k = 0` modes.
pub fn localized_delta(params: FieldParams, j: i32) -> SpectralCoefficients {
    let l_max = levels_for(j, &params);
    let weight = (params.b0 / (2.0 * PI)).sqrt();
    SpectralCoefficients::zeros(params, 1, l_max).map_modes(|idx, _| {
        if idx.k == 0 {
            Complex64::new(bump_phi_j(j, eigenvalue(idx, &params).sqrt()) * weight, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrichartzRow {
    pub q: f64,
    pub p: f64,
    pub s: f64,
    pub j: i32,
    pub t_final: f64,
    pub flow: String,
    pub measured: f64,
    pub reference: f64,
    pub ratio: f64,
}

impl ReportRow for StrichartzRow {
    const HEADER: &'static [&'static str] = &["q", "p", "s", "j", "T", "flow", "measured", "reference", "ratio"];
    fn cells(&self) -> Vec<String> {
        vec![
            exponent(self.q),
            exponent(self.p),
            real(self.s),
            self.j.to_string(),
            real(self.t_final),
            self.flow.clone(),
            real(self.measured),
            real(self.reference),
            real(self.ratio),
        ]
    }
}

/// The mixed norm, its reference values and the time-step doubling check.
#[derive(Debug, Clone, PartialEq)]
pub struct StrichartzMeasurement {
    pub measured: f64,
    /// `2^{js} ||f||_2`
    pub reference: f64,
    /// `||f||_{H^s}`, reported for the Dirac flow.
    pub sobolev_reference: Option<f64>,
    /// Relative change of the mixed norm when the time step is halved.
    pub richardson: f64,
}

impl StrichartzMeasurement {
    pub fn rows(&self, pair: AdmissiblePair, j: i32, t_final: f64, flow: StrichartzFlow) -> Vec<StrichartzRow> {
        let row = |label: String, reference: f64| StrichartzRow {
            q: pair.q,
            p: pair.p,
            s: pair.s,
            j,
            t_final,
            flow: label,
            measured: self.measured,
            reference,
            ratio: self.measured / reference,
        };
        let mut out = vec![row(flow.label().into(), self.reference)];
        if let Some(h) = self.sobolev_reference {
            out.push(row(format!("{}-sobolev", flow.label()), h));
        }
        out
    }
}

/// Default number of time steps on `[0, T]`.
pub const STRICHARTZ_TIME_STEPS: usize = 128;

/// Radial values of every angular block of one component.
struct ComponentTable {
    /// `(k, [(l, profile over nodes)])`
    blocks: Vec<(i64, Vec<(usize, Vec<f64>)>)>,
}

impl ComponentTable {
    fn new(support: &[ModeIndex], b0: f64, nodes: &[f64]) -> Self {
        let mut by_k: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for idx in support {
            by_k.entry(idx.k).or_default().push(idx.ell);
        }
        let blocks = by_k
            .into_iter()
            .map(|(k, ells)| {
                let l_top = *ells.iter().max().unwrap();
                let columns: Vec<Vec<f64>> = nodes
                    .par_iter()
                    .map(|&r| {
                        let mut prof = Vec::new();
                        normalized_profiles(k, l_top, b0, r, &mut prof);
                        prof
                    })
                    .collect();
                let rows = ells
                    .into_iter()
                    .map(|ell| (ell, columns.iter().map(|c| c[ell]).collect()))
                    .collect();
                (k, rows)
            })
            .collect();
        ComponentTable { blocks }
    }

    /// `u_k(r_i)` for every block.
    fn radial(&self, c: &SpectralCoefficients, n_nodes: usize) -> Vec<(i64, Vec<Complex64>)> {
        self.blocks
            .iter()
            .map(|(k, rows)| {
                let mut acc = vec![Complex64::new(0.0, 0.0); n_nodes];
                for (ell, prof) in rows {
                    let a = c[ModeIndex::new(*k, *ell)];
                    if a == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (u, p) in acc.iter_mut().zip(prof) {
                        *u += a * p;
                    }
                }
                (*k, acc)
            })
            .collect()
    }
}

fn support(c: &SpectralCoefficients) -> Vec<ModeIndex> {
    c.iter().filter(|(_, v)| v.norm() > 0.0).map(|(idx, _)| idx).collect()
}

/// Panel Gauss-Legendre nodes on `[0, radius]`, `panels` panels.
fn radial_rule(radius: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = radius / panels as f64;
    let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
    let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
    for p in 0..panels {
        let a = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(a + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

/// Spatial `L^p` norm of the state at one time.
struct SpatialNorm {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    tables: Vec<ComponentTable>,
    n_theta: usize,
}

impl SpatialNorm {
    fn eval(&self, comps: &[&SpectralCoefficients], p: f64) -> f64 {
        if p == 2.0 {
            return comps.iter().map(|c| c.l2_norm().powi(2)).sum::<f64>().sqrt();
        }
        let n = self.nodes.len();
        let radial: Vec<Vec<(i64, Vec<Complex64>)>> =
            self.tables.iter().zip(comps).map(|(t, c)| t.radial(c, n)).collect();
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let mut total = 0.0;
        for i in 0..n {
            let mut ring = 0.0;
            for jt in 0..self.n_theta {
                let theta = jt as f64 * dtheta;
                let mut mod2 = 0.0;
                for comp in &radial {
                    let v: Complex64 = comp
                        .iter()
                        .map(|(k, u)| u[i] * Complex64::from_polar(1.0, *k as f64 * theta))
                        .sum();
                    mod2 += v.norm_sqr();
                }
                ring += mod2.powf(p / 2.0);
            }
            total += ring * dtheta * self.nodes[i] * self.weights[i];
        }
        if p.is_infinite() {
            unreachable!()
        }
        total.powf(1.0 / p)
    }

    fn sup(&self, comps: &[&SpectralCoefficients]) -> f64 {
        let n = self.nodes.len();
        let radial: Vec<Vec<(i64, Vec<Complex64>)>> =
            self.tables.iter().zip(comps).map(|(t, c)| t.radial(c, n)).collect();
        let dtheta = 2.0 * PI / self.n_theta as f64;
        let mut best: f64 = 0.0;
        for i in 0..n {
            for jt in 0..self.n_theta {
                let theta = jt as f64 * dtheta;
                let mod2: f64 = radial
                    .iter()
                    .map(|comp| {
                        comp.iter()
                            .map(|(k, u)| u[i] * Complex64::from_polar(1.0, *k as f64 * theta))
                            .sum::<Complex64>()
                            .norm_sqr()
                    })
                    .sum();
                best = best.max(mod2.sqrt());
            }
        }
        best
    }
}

fn mixed_norm(values: &[f64], q: f64, t_final: f64) -> f64 {
    if q.is_infinite() {
        return values.iter().copied().fold(0.0, f64::max);
    }
    let h = t_final / (values.len() - 1) as f64;
    let last = values.len() - 1;
    let integral: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| if i == 0 || i == last { 0.5 } else { 1.0 } * v.powf(q))
        .sum::<f64>()
        * h;
    integral.powf(1.0 / q)
}

/// `||U(t) f||_{L^q([0,T]; L^p)}` by trapezoid quadrature in time on
/// `time_steps + 1` uniform nodes and panel Gauss-Legendre quadrature in space.
pub fn strichartz_norm(
    pair: AdmissiblePair,
    j: i32,
    t_final: f64,
    state: &FlowState,
    flow: StrichartzFlow,
    time_steps: usize,
) -> Result<StrichartzMeasurement> {
    let pair = AdmissiblePair::new(pair.q, pair.p)?;
    if !(t_final > 0.0) || time_steps < 64 {
        return Err(Error::InvalidArgument(format!(
            "need T > 0 and at least 64 time steps (got T={t_final}, steps={time_steps})"
        )));
    }
    let params = state.params();
    let evolve: Box<dyn Fn(f64) -> Result<FlowState> + Sync> = match (flow, state) {
        (StrichartzFlow::HalfwaveUp | StrichartzFlow::HalfwaveDown, FlowState::Scalar(c)) => {
            let spin = if flow == StrichartzFlow::HalfwaveUp { Spin::Up } else { Spin::Down };
            let freqs = c.map_modes(|idx, _| Complex64::new(kg_frequency(idx, &params, spin), 0.0));
            let c = c.clone();
            Box::new(move |t| Ok(FlowState::Scalar(c.map_modes(|idx, v| v * FlowSign::Cauchy.phase(t, freqs[idx].re)))))
        }
        (StrichartzFlow::Dirac, FlowState::Spinor(s)) => {
            let table = LadderTable::closed_form(params, s.k_max(), s.l_max());
            let s = s.clone();
            evolve_dirac(0.0, &s, &table, FlowSign::Cauchy)?;
            Box::new(move |t| Ok(FlowState::Spinor(evolve_dirac(t, &s, &table, FlowSign::Cauchy)?)))
        }
        _ => {
            return Err(Error::UnsupportedCombination(format!(
                "flow {} does not act on this kind of state",
                flow.label()
            )))
        }
    };

    // the evolved support stays inside the union of the supports of U(t) f at a generic time
    let probe = evolve(0.37 * t_final)?;
    let supports: Vec<Vec<ModeIndex>> = state
        .components()
        .iter()
        .zip(probe.components())
        .map(|(a, b)| {
            let mut s = support(a);
            s.extend(support(b));
            s.sort();
            s.dedup();
            s
        })
        .collect();
    let k_spread = supports
        .iter()
        .flat_map(|s| s.iter().map(|i| i.k))
        .fold((i64::MAX, i64::MIN), |(lo, hi), k| (lo.min(k), hi.max(k)));
    let spread = (k_spread.1 - k_spread.0).max(0) as usize;
    let n_theta = if spread == 0 {
        1
    } else {
        ((pair.p.ceil() as usize + 1) * spread + 1).next_power_of_two()
    };
    let b0 = params.b0;
    let radius = t_final + 4.0 / b0.sqrt();
    let panels = (radius * 2f64.powi(j.max(0)) / 2.0).ceil() as usize + 8;
    let (nodes, weights) = radial_rule(radius, panels);
    let tables = supports.iter().map(|s| ComponentTable::new(s, b0, &nodes)).collect();
    let spatial = SpatialNorm {
        nodes,
        weights,
        tables,
        n_theta,
    };

    let fine = 2 * time_steps;
    let values: Vec<f64> = (0..=fine)
        .into_par_iter()
        .map(|i| {
            let u = evolve(t_final * i as f64 / fine as f64)?;
            let comps = u.components();
            Ok(if pair.p.is_infinite() { spatial.sup(&comps) } else { spatial.eval(&comps, pair.p) })
        })
        .collect::<Result<Vec<_>>>()?;
    let coarse: Vec<f64> = values.iter().step_by(2).copied().collect();
    let measured = mixed_norm(&coarse, pair.q, t_final);
    let refined = mixed_norm(&values, pair.q, t_final);
    let norm = state.l2_norm();
    Ok(StrichartzMeasurement {
        measured,
        reference: 2f64.powf(j as f64 * pair.s) * norm,
        sobolev_reference: (flow == StrichartzFlow::Dirac).then(|| state.sobolev_norm(pair.s)),
        richardson: if refined == 0.0 { 0.0 } else { (refined - measured).abs() / refined },
    })
}

/// Strichartz rows for `phi_j(sqrt H) delta_0` over several `j` and `T`.
pub fn strichartz_scan(
    pair: AdmissiblePair,
    js: &[i32],
    t_finals: &[f64],
    params: FieldParams,
    flow: StrichartzFlow,
) -> Result<EstimateReport<StrichartzRow>> {
    let pair = AdmissiblePair::new(pair.q, pair.p)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &t_final in t_finals {
        for &j in js {
            let scalar = localized_delta(params, j);
            let state = match flow {
                StrichartzFlow::Dirac => {
                    let zero = SpectralCoefficients::zeros(params, scalar.k_max(), scalar.l_max());
                    FlowState::Spinor(SpinorCoefficients::new(scalar, zero)?)
                }
                _ => FlowState::Scalar(scalar),
            };
            let m = strichartz_norm(pair, j, t_final, &state, flow, STRICHARTZ_TIME_STEPS)?;
            worst = worst.max(m.richardson);
            rows.extend(m.rows(pair, j, t_final, flow));
        }
    }
    Ok(EstimateReport::new(rows)
        .with_meta("task", "strichartz-scan")
        .with_meta("B0", params.b0)
        .with_meta("m", params.mass)
        .with_meta("time_steps", STRICHARTZ_TIME_STEPS)
        .with_meta("richardson_max", worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PolarGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> FieldParams {
        FieldParams::new(1.0, 0.0).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        assert_eq!(admissible_check(f64::INFINITY, 2.0), (true, 0.0));
        let (ok, s) = admissible_check(8.0, 4.0);
        assert!(ok);
        assert!((s - 0.375).abs() < 1e-15);
        assert!(!admissible_check(2.0, 4.0).0);
        assert!(matches!(AdmissiblePair::new(2.0, 4.0), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn keel_tao_examples() {
        for k in 0..6 {
            let h = 2f64.powi(-k);
            let v = keel_tao_bound(1.5, 0.5, 8.0, 4.0, h).unwrap();
            assert!((v / 2f64.powf(3.0 * k as f64 / 8.0) - 1.0).abs() < 1e-14);
            assert_eq!(keel_tao_bound(1.5, 0.5, f64::INFINITY, 2.0, h).unwrap(), 1.0);
        }
        assert_eq!(keel_tao_bound(1.5, 0.5, 4.0, 8.0, 1.0).unwrap(), 1.0);
        assert!(keel_tao_bound(1.5, 0.5, 4.0, 8.0, 0.0).is_err());
        for (q, p) in [(8.0, 4.0), (4.0, 8.0), (f64::INFINITY, 2.0), (5.0, 7.0)] {
            let lhs = keel_tao_exponent(1.5, 0.5, q, p);
            let rhs = -(2.0 * (0.5 - 1.0 / p) - 1.0 / q);
            assert!((lhs - rhs).abs() <= 1e-15);
        }
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-14 && (fit.intercept - 2.0).abs() < 1e-13 && fit.residual < 1e-13);
        assert!(fit_line(&[1.0], &[2.0]).is_err());
    }

    #[test]
    fn bernstein_pairs() {
        let p = unit();
        for j in 2..=6 {
            assert!(bernstein_norm(j, 2.0, 2.0, &p).unwrap() <= 1.0);
        }
        assert!(matches!(bernstein_norm(3, 1.0, 2.0, &p), Err(Error::UnsupportedPair { .. })));
        let r = bernstein_scan(&[2, 3, 4, 5, 6], &[(1.0, f64::INFINITY), (2.0, f64::INFINITY)], &p).unwrap();
        for pair in [1.0, 2.0] {
            let s = spread(r.rows.iter().filter(|row| row.q == pair).map(|row| row.ratio));
            assert!(s < 10.0, "q={pair} spread {s}");
        }
    }

    #[test]
    fn decay_at_small_time_is_bernstein() {
        let p = unit();
        for j in [3, 4] {
            let small = decay_kernel_sup(j, 1e-6, &p, Spin::Down, 2000, 1 << 16).unwrap();
            let bern = bernstein_norm(j, 1.0, f64::INFINITY, &p).unwrap();
            assert!((small / bern - 1.0).abs() < 0.01, "j={j} {small} {bern}");
        }
        let err = decay_kernel_sup(6, 0.1, &p, Spin::Up, 100, 10).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall(_)));
    }

    #[test]
    fn decay_report_schema() {
        let scan = DecayScan {
            js: vec![2],
            scaled_times: vec![4.0, 6.0, 1e6],
            distances: 400,
            ..DecayScan::default()
        };
        let r = decay_scan(&scan, &unit(), Spin::Up).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.fit.is_some());
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("j,t,B0,m,spin,measured,bound,ratio\n2,1,1,0,up,"));
    }

    #[test]
    fn unitarity_case_is_exact() {
        let pair = AdmissiblePair::new(f64::INFINITY, 2.0).unwrap();
        let p = FieldParams::new(1.0, 1.0).unwrap();
        let scalar = localized_delta(p, 3);
        let m = strichartz_norm(pair, 3, 1.0, &FlowState::Scalar(scalar.clone()), StrichartzFlow::HalfwaveUp, 64).unwrap();
        assert!((m.measured / m.reference - 1.0).abs() < 1e-10);
        let zero = SpectralCoefficients::zeros(p, scalar.k_max(), scalar.l_max());
        let spinor = FlowState::Spinor(SpinorCoefficients::new(scalar, zero).unwrap());
        let d = strichartz_norm(pair, 3, 1.0, &spinor, StrichartzFlow::Dirac, 64).unwrap();
        assert!((d.measured / d.reference - 1.0).abs() < 1e-10);
        assert!(d.sobolev_reference.is_some());
    }

    #[test]
    fn spatial_quadrature_matches_parseval() {
        // p = 4 and p = 2 through the same quadrature: check L^2 by brute force
        let p = unit();
        let c = localized_delta(p, 3);
        let (nodes, weights) = radial_rule(10.0, 48);
        let table = ComponentTable::new(&support(&c), p.b0, &nodes);
        let u = table.radial(&c, nodes.len());
        let l2: f64 = u[0]
            .1
            .iter()
            .zip(nodes.iter().zip(&weights))
            .map(|(v, (r, w))| 2.0 * PI * v.norm_sqr() * r * w)
            .sum();
        assert!((l2.sqrt() / c.l2_norm() - 1.0).abs() < 1e-8, "{} {}", l2.sqrt(), c.l2_norm());
    }

    #[test]
    fn strichartz_is_monotone_in_time_and_rejects_bad_input() {
        let pair = AdmissiblePair::new(8.0, 4.0).unwrap();
        let p = FieldParams::new(1.0, 1.0).unwrap();
        let state = FlowState::Scalar(localized_delta(p, 3));
        let mut last = 0.0;
        for t in [0.25, 0.5, 1.0] {
            let m = strichartz_norm(pair, 3, t, &state, StrichartzFlow::HalfwaveDown, 64).unwrap();
            assert!(m.measured >= last);
            assert!(m.richardson < 0.01);
            last = m.measured;
        }
        let bad = AdmissiblePair { q: 2.0, p: 4.0, s: 0.0 };
        assert!(matches!(
            strichartz_norm(bad, 3, 1.0, &state, StrichartzFlow::HalfwaveUp, 64),
            Err(Error::NotAdmissible { .. })
        ));
        assert!(strichartz_norm(pair, 3, 1.0, &state, StrichartzFlow::Dirac, 64).is_err());
    }

    #[test]
    fn multi_mode_lp_norm_matches_grid() {
        let p = unit();
        let grid = PolarGrid::new(12.0, 256, 32).unwrap();
        let basis = ModeBasis::build(p, 3, 3, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = SpectralCoefficients::random(p, 3, 3, 6, &mut rng);
        let expect = lp_norm(&synthesize(&c, &basis).unwrap(), 4.0).unwrap();
        let (nodes, weights) = radial_rule(12.0, 16);
        let spatial = SpatialNorm {
            tables: vec![ComponentTable::new(&support(&c), p.b0, &nodes)],
            nodes,
            weights,
            n_theta: 32,
        };
        let got = spatial.eval(&[&c], 4.0);
        assert!((got / expect - 1.0).abs() < 1e-8, "{got} {expect}");
    }

    #[test]
    fn square_function_band() {
        let p = unit();
        let grid = PolarGrid::new(PolarGrid::default_radius(1.0, 4, 6), 256, 32).unwrap();
        let basis = ModeBasis::build(p, 4, 6, &grid).unwrap();
        let single = SpectralCoefficients::single(p, 4, 6, ModeIndex::new(-2, 3));
        let f = synthesize(&single, &basis).unwrap();
        let one = square_function_check(&f, &basis, 2.0).unwrap();
        assert!(one.ratio >= 1.0 / 2f64.sqrt() - 1e-12 && one.ratio <= 2f64.sqrt() + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..3 {
            let c = SpectralCoefficients::random(p, 4, 6, 10, &mut rng);
            let f = synthesize(&c, &basis).unwrap();
            let r = square_function_check(&f, &basis, 2.0).unwrap().ratio.powi(2);
            assert!((1.0 - 1e-9..=2.0 + 1e-9).contains(&r), "{r}");
        }
        assert!(square_function_check(&f, &basis, 1.0).is_err());
    }

    #[test]
    fn norm_equivalence_examples() {
        let p = unit();
        let single = SpectralCoefficients::single(p, 4, 4, ModeIndex::new(1, 2));
        let r = norm_equivalence_scan(&[single], 0.0).unwrap();
        let row = &r.rows[0];
        assert!((row.sobolev_hom - 1.0).abs() < 1e-15);
        assert!(row.ratio1 >= 1.0 / 2f64.sqrt() - 1e-12 && row.ratio1 <= 1.0 + 1e-12);
        assert!(norm_equivalence_scan(&[], 3.0).is_err());
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("id,s,besov,sobolev_hom,sobolev_inhom,ratio1,ratio2\n"));
    }

    #[test]
    fn geomspace_endpoints() {
        let g = geomspace(4.0, 64.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 4.0).abs() < 1e-12 && (g[2] - 16.0).abs() < 1e-12 && (g[4] - 64.0).abs() < 1e-12);
    }
}
