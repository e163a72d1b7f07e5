//! Spectral coefficients, grid/eigenbasis transforms, the radial Landau
//! Hamiltonian and the L^p, Sobolev and Besov norms.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{header_fields, header_value, parse_num, GridField, PolarGrid};
use crate::multipliers::{bump_phi0, bump_phi_j, dyadic_range};
use crate::spectrum::{eigenvalue, FieldParams, ModeBasis, ModeIndex};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Amplitudes `c_{k,l}` for `|k| <= K`, `l <= L`, stored at `(k + K)(L + 1) + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    params: FieldParams,
    k_max: usize,
    l_max: usize,
    data: Vec<Complex64>,
}

impl SpectralCoefficients {
    pub fn zeros(params: FieldParams, k_max: usize, l_max: usize) -> Self {
        SpectralCoefficients {
            params,
            k_max,
            l_max,
            data: vec![ZERO; (2 * k_max + 1) * (l_max + 1)],
        }
    }

    pub fn single(params: FieldParams, k_max: usize, l_max: usize, idx: ModeIndex) -> Self {
        let mut c = Self::zeros(params, k_max, l_max);
        c[idx] = Complex64::new(1.0, 0.0);
        c
    }

    /// `count` distinct modes drawn uniformly from the truncation, with
    /// amplitudes uniform in the unit square of the complex plane.
    pub fn random<R: Rng>(params: FieldParams, k_max: usize, l_max: usize, count: usize, rng: &mut R) -> Self {
        let mut c = Self::zeros(params, k_max, l_max);
        let n = c.data.len();
        for slot in sample(rng, n, count.min(n)).into_iter() {
            c.data[slot] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        c
    }

    pub fn params(&self) -> &FieldParams {
        &self.params
    }

    pub fn with_params(mut self, params: FieldParams) -> Self {
        self.params = params;
        self
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn contains(&self, idx: ModeIndex) -> bool {
        idx.k.unsigned_abs() as usize <= self.k_max && idx.ell <= self.l_max
    }

    fn slot(&self, idx: ModeIndex) -> usize {
        assert!(self.contains(idx), "mode {idx:?} outside truncation");
        (idx.k + self.k_max as i64) as usize * (self.l_max + 1) + idx.ell
    }

    fn mode_at(&self, slot: usize) -> ModeIndex {
        let k = (slot / (self.l_max + 1)) as i64 - self.k_max as i64;
        ModeIndex::new(k, slot % (self.l_max + 1))
    }

    /// Amplitude of `idx`, zero outside the truncation.
    pub fn get(&self, idx: ModeIndex) -> Complex64 {
        if self.contains(idx) {
            self.data[self.slot(idx)]
        } else {
            ZERO
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        (0..self.data.len()).map(|s| self.mode_at(s))
    }

    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, Complex64)> + '_ {
        self.data.iter().enumerate().map(|(s, v)| (self.mode_at(s), *v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ModeIndex, &mut Complex64)> + '_ {
        let (k_max, l_max) = (self.k_max as i64, self.l_max + 1);
        self.data
            .iter_mut()
            .enumerate()
            .map(move |(s, v)| (ModeIndex::new((s / l_max) as i64 - k_max, s % l_max), v))
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self, other> = sum c conj(c')`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b.conj()).sum())
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.k_max != other.k_max || self.l_max != other.l_max {
            return Err(Error::TruncationExceeded {
                k: other.k_max,
                l: other.l_max,
                basis_k: self.k_max,
                basis_l: self.l_max,
            });
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: Complex64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    pub fn add_scaled(&mut self, alpha: Complex64, other: &Self) -> Result<()> {
        self.check_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn map_modes(&self, f: impl Fn(ModeIndex, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for (idx, v) in out.iter_mut() {
            *v = f(idx, *v);
        }
        out
    }

    /// Copies into truncation `(K, L)`, dropping or zero-padding modes.
    pub fn resized(&self, k_max: usize, l_max: usize) -> Self {
        let mut out = Self::zeros(self.params, k_max, l_max);
        for (idx, v) in out.iter_mut() {
            *v = self.get(idx);
        }
        out
    }

    /// Largest `|c|` among modes on the outer edge of the truncation (`|k| = K` or `l = L`).
    pub fn edge_amplitude(&self) -> f64 {
        self.iter()
            .filter(|(idx, _)| idx.k.unsigned_abs() as usize == self.k_max || idx.ell == self.l_max)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }

    /// Header with the field parameters and truncation, then `k ell re im` rows.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# spectral-coefficients B0={:e} m={:e} K={} L={}",
            self.params.b0, self.params.mass, self.k_max, self.l_max
        )?;
        for (idx, v) in self.iter() {
            writeln!(out, "{} {} {:e} {:e}", idx.k, idx.ell, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_table<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty coefficient table".into()))??;
        let fields = header_fields(&header, "# spectral-coefficients")?;
        let params = FieldParams::new(header_value(&fields, "B0")?, header_value(&fields, "m")?)?;
        let mut c = Self::zeros(params, header_value(&fields, "K")?, header_value(&fields, "L")?);
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 columns", n + 2)));
            }
            let idx = ModeIndex::new(parse_num(parts[0], n + 2)?, parse_num(parts[1], n + 2)?);
            if !c.contains(idx) {
                return Err(Error::Parse(format!("line {}: mode outside truncation", n + 2)));
            }
            let v = Complex64::new(parse_num(parts[2], n + 2)?, parse_num(parts[3], n + 2)?);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Parse(format!("line {}: non-finite amplitude", n + 2)));
            }
            c[idx] = v;
        }
        Ok(c)
    }
}

impl Index<ModeIndex> for SpectralCoefficients {
    type Output = Complex64;

    fn index(&self, idx: ModeIndex) -> &Complex64 {
        &self.data[self.slot(idx)]
    }
}

impl IndexMut<ModeIndex> for SpectralCoefficients {
    fn index_mut(&mut self, idx: ModeIndex) -> &mut Complex64 {
        let s = self.slot(idx);
        &mut self.data[s]
    }
}

/// Signed angular number carried by FFT bin `b` of an `n`-point transform.
fn bin_mode(b: usize, n: usize) -> i64 {
    if b < n / 2 {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

fn mode_bin(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

struct AngularTransform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl AngularTransform {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        AngularTransform {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    /// Per-ring angular Fourier coefficients `a_k(r_i)`, indexed `[i][bin]`.
    fn modes_of(&self, f: &GridField) -> Vec<Vec<Complex64>> {
        let scale = 1.0 / self.n as f64;
        (0..f.grid.n_r())
            .into_par_iter()
            .map(|i| {
                let mut buf = f.ring(i).to_vec();
                self.forward.process(&mut buf);
                buf.iter_mut().for_each(|v| *v *= scale);
                buf
            })
            .collect()
    }

    fn field_of(&self, grid: &PolarGrid, rings: Vec<Vec<Complex64>>) -> GridField {
        let rings: Vec<Vec<Complex64>> = rings
            .into_par_iter()
            .map(|mut buf| {
                self.inverse.process(&mut buf);
                buf
            })
            .collect();
        GridField {
            grid: grid.clone(),
            values: rings.concat(),
        }
    }
}

fn check_basis_grid(grid: &PolarGrid, basis: &ModeBasis) -> Result<()> {
    if !grid.same_shape(basis.grid()) {
        return Err(Error::GridMismatch(format!(
            "field grid (R={}, Nr={}, Ntheta={}) differs from basis grid (R={}, Nr={}, Ntheta={})",
            grid.radius(),
            grid.n_r(),
            grid.n_theta(),
            basis.grid().radius(),
            basis.grid().n_r(),
            basis.grid().n_theta()
        )));
    }
    if grid.n_theta() < 2 * basis.k_max() + 1 {
        return Err(Error::GridMismatch(format!(
            "Ntheta={} cannot resolve angular modes up to K={}",
            grid.n_theta(),
            basis.k_max()
        )));
    }
    Ok(())
}

/// `c_{k,l} = integral of f conj(V~_{k,l})` by the grid quadrature.
pub fn analyze(f: &GridField, basis: &ModeBasis) -> Result<SpectralCoefficients> {
    check_basis_grid(&f.grid, basis)?;
    let grid = basis.grid();
    let transform = AngularTransform::new(grid.n_theta());
    let rings = transform.modes_of(f);
    let mut c = SpectralCoefficients::zeros(*basis.params(), basis.k_max(), basis.l_max());
    let k_max = basis.k_max() as i64;
    let values: Vec<Vec<Complex64>> = (-k_max..=k_max)
        .into_par_iter()
        .map(|k| {
            let bin = mode_bin(k, grid.n_theta());
            (0..=basis.l_max())
                .map(|ell| {
                    let profile = basis.profile(ModeIndex::new(k, ell));
                    let mut acc = ZERO;
                    for (i, ring) in rings.iter().enumerate() {
                        acc += ring[bin] * (profile[i] * grid.radial_weights()[i] * grid.radial_nodes()[i]);
                    }
                    acc * (2.0 * PI)
                })
                .collect()
        })
        .collect();
    for (v, out) in values.into_iter().flatten().zip(c.data.iter_mut()) {
        *out = v;
    }
    Ok(c)
}

/// `sum c_{k,l} V~_{k,l}` sampled on the basis grid.
pub fn synthesize(c: &SpectralCoefficients, basis: &ModeBasis) -> Result<GridField> {
    if c.k_max() > basis.k_max() || c.l_max() > basis.l_max() {
        return Err(Error::TruncationExceeded {
            k: c.k_max(),
            l: c.l_max(),
            basis_k: basis.k_max(),
            basis_l: basis.l_max(),
        });
    }
    let grid = basis.grid();
    check_basis_grid(grid, basis)?;
    let n_theta = grid.n_theta();
    let transform = AngularTransform::new(n_theta);
    let k_max = c.k_max() as i64;
    let rings: Vec<Vec<Complex64>> = (0..grid.n_r())
        .into_par_iter()
        .map(|i| {
            let mut buf = vec![ZERO; n_theta];
            for k in -k_max..=k_max {
                let mut acc = ZERO;
                for ell in 0..=c.l_max() {
                    let idx = ModeIndex::new(k, ell);
                    acc += c[idx] * basis.profile(idx)[i];
                }
                buf[mode_bin(k, n_theta)] = acc;
            }
            buf
        })
        .collect();
    Ok(transform.field_of(grid, rings))
}

/// Finite-difference weights for derivatives `0..=order` at `z` (Fornberg's recursion).
/// Returns `w[d][j]` for derivative `d` and stencil point `j`.
pub fn fornberg_weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Points per radial finite-difference stencil.
pub const STENCIL_WIDTH: usize = 9;
const HALF: usize = STENCIL_WIDTH / 2;

/// First and second radial derivative stencils on the Gauss nodes. Near the
/// origin the stencil reaches mirrored nodes `-r_i`, whose values are
/// `(-1)^k a_k(r_i)` for angular mode `k`; near `R` it becomes one-sided and
/// the row is flagged as boundary.
#[derive(Debug, Clone)]
pub struct RadialStencil {
    rows: Vec<StencilRow>,
}

#[derive(Debug, Clone)]
struct StencilRow {
    source: [usize; STENCIL_WIDTH],
    mirrored: [bool; STENCIL_WIDTH],
    d1: [f64; STENCIL_WIDTH],
    d2: [f64; STENCIL_WIDTH],
    boundary: bool,
}

impl RadialStencil {
    pub fn new(grid: &PolarGrid) -> Self {
        let r = grid.radial_nodes();
        let n = r.len();
        // extended index e: e < HALF are mirrored nodes -r_{HALF-1-e}
        let ext = |e: usize| -> (usize, bool, f64) {
            if e < HALF {
                let i = HALF - 1 - e;
                (i, true, -r[i])
            } else {
                (e - HALF, false, r[e - HALF])
            }
        };
        let rows = (0..n)
            .map(|i| {
                let centre = i + HALF;
                let start = (centre - HALF).min(n + HALF - STENCIL_WIDTH);
                let mut source = [0usize; STENCIL_WIDTH];
                let mut mirrored = [false; STENCIL_WIDTH];
                let mut xs = [0.0; STENCIL_WIDTH];
                for s in 0..STENCIL_WIDTH {
                    let (src, m, x) = ext(start + s);
                    source[s] = src;
                    mirrored[s] = m;
                    xs[s] = x;
                }
                let w = fornberg_weights(r[i], &xs, 2);
                let mut d1 = [0.0; STENCIL_WIDTH];
                let mut d2 = [0.0; STENCIL_WIDTH];
                d1.copy_from_slice(&w[1]);
                d2.copy_from_slice(&w[2]);
                StencilRow {
                    source,
                    mirrored,
                    d1,
                    d2,
                    boundary: i + HALF >= n,
                }
            })
            .collect();
        RadialStencil { rows }
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.rows[i].boundary
    }

    /// `(a'(r_i), a''(r_i))` for samples `a` of angular mode `k`.
    pub fn derivatives(&self, i: usize, k: i64, a: &[Complex64]) -> (Complex64, Complex64) {
        let row = &self.rows[i];
        let parity = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let mut first = ZERO;
        let mut second = ZERO;
        for s in 0..STENCIL_WIDTH {
            let mut v = a[row.source[s]];
            if row.mirrored[s] {
                v *= parity;
            }
            first += v * row.d1[s];
            second += v * row.d2[s];
        }
        (first, second)
    }
}

/// Result of a finite-difference operator application with its boundary rows.
#[derive(Debug, Clone)]
pub struct FlaggedField {
    pub field: GridField,
    pub boundary_rows: Vec<bool>,
}

/// `H f` computed mode by mode in theta with the radial operator
/// `-d_rr - (1/r) d_r + k^2/r^2 + B0^2 r^2/4 + B0 k`.
pub fn apply_h_radial(f: &GridField, params: &FieldParams) -> FlaggedField {
    let grid = &f.grid;
    let n_theta = grid.n_theta();
    let b0 = params.b0;
    let stencil = RadialStencil::new(grid);
    let transform = AngularTransform::new(n_theta);
    let rings = transform.modes_of(f);
    let r = grid.radial_nodes();
    let columns: Vec<Vec<Complex64>> = (0..n_theta)
        .into_par_iter()
        .map(|bin| {
            let k = bin_mode(bin, n_theta);
            let kf = k as f64;
            let a: Vec<Complex64> = rings.iter().map(|ring| ring[bin]).collect();
            (0..r.len())
                .map(|i| {
                    let (d1, d2) = stencil.derivatives(i, k, &a);
                    let ri = r[i];
                    let potential = kf * kf / (ri * ri) + b0 * b0 * ri * ri / 4.0 + b0 * kf;
                    -d2 - d1 / ri + a[i] * potential
                })
                .collect()
        })
        .collect();
    let out_rings: Vec<Vec<Complex64>> = (0..r.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect();
    FlaggedField {
        field: transform.field_of(grid, out_rings),
        boundary_rows: (0..r.len()).map(|i| stencil.is_boundary(i)).collect(),
    }
}

/// `||Hf - lambda f|| / ||lambda f||` in L^2 over the interior rows.
pub fn eigen_residual(f: &GridField, lambda: f64, applied: &FlaggedField) -> f64 {
    let grid = &f.grid;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..grid.n_r() {
        if applied.boundary_rows[i] {
            continue;
        }
        let w = grid.area_weight(i);
        for j in 0..grid.n_theta() {
            let v = f.at(i, j) * lambda;
            num += w * (applied.field.at(i, j) - v).norm_sqr();
            den += w * v.norm_sqr();
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// `(integral |f|^p)^{1/p}` by quadrature, or the grid maximum for `p = inf`.
pub fn lp_norm(f: &GridField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p exponent must be >= 1, got {p}")));
    }
    let grid = &f.grid;
    if p.is_infinite() {
        return Ok(f.values.iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let total: f64 = (0..grid.n_r())
        .map(|i| {
            let w = grid.area_weight(i);
            f.ring(i).iter().map(|v| v.norm().powf(p)).sum::<f64>() * w
        })
        .sum();
    Ok(total.powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormVariant {
    /// `||H^{s/2} f||`
    HomogeneousSobolev,
    /// `||(H + m^2 + B0)^{s/2} f||`
    InhomogeneousSobolev,
    /// `phi_0` block plus `2^{js}`-weighted blocks `j >= 1`.
    Besov,
    /// `2^{js}`-weighted blocks over all `j`.
    HomogeneousBesov,
}

/// Sobolev norms from eigenvalues and Besov norms from Littlewood-Paley pieces.
/// For `p = 2` the block norms come from Parseval on the coefficients; other
/// `p` synthesize each block on the basis grid.
pub fn sobolev_besov_norm(
    c: &SpectralCoefficients,
    s: f64,
    p: f64,
    r: f64,
    variant: NormVariant,
    basis: Option<&ModeBasis>,
) -> Result<f64> {
    let params = *c.params();
    match variant {
        NormVariant::HomogeneousSobolev | NormVariant::InhomogeneousSobolev => {
            if p != 2.0 || r != 2.0 {
                return Err(Error::UnsupportedCombination(format!(
                    "Sobolev norms need p = r = 2 (got p={p}, r={r})"
                )));
            }
            let shift = if variant == NormVariant::InhomogeneousSobolev {
                params.mass * params.mass + params.b0
            } else {
                0.0
            };
            Ok(c.iter()
                .map(|(idx, v)| (eigenvalue(idx, &params) + shift).powf(s) * v.norm_sqr())
                .sum::<f64>()
                .sqrt())
        }
        NormVariant::Besov | NormVariant::HomogeneousBesov => {
            if !(p >= 1.0) || !(r >= 1.0) {
                return Err(Error::UnsupportedCombination(format!(
                    "Besov norms need p, r >= 1 (got p={p}, r={r})"
                )));
            }
            let block_norm = |block: &SpectralCoefficients| -> Result<f64> {
                if p == 2.0 {
                    return Ok(block.l2_norm());
                }
                let basis = basis.ok_or_else(|| {
                    Error::InvalidArgument("a mode basis is needed for Besov norms with p != 2".into())
                })?;
                lp_norm(&synthesize(block, basis)?, p)
            };
            let (lo, hi) = sqrt_spectrum_bounds(c);
            let mut weighted = Vec::new();
            let js: Vec<i32> = dyadic_range(lo, hi).collect();
            if variant == NormVariant::Besov {
                let low = c.map_modes(|idx, v| v * bump_phi0(eigenvalue(idx, &params).sqrt()));
                weighted.push(block_norm(&low)?);
            }
            for j in js {
                if variant == NormVariant::Besov && j < 1 {
                    continue;
                }
                let block = c.map_modes(|idx, v| v * bump_phi_j(j, eigenvalue(idx, &params).sqrt()));
                weighted.push(2f64.powf(j as f64 * s) * block_norm(&block)?);
            }
            Ok(if r.is_infinite() {
                weighted.into_iter().fold(0.0, f64::max)
            } else {
                weighted.iter().map(|w| w.powf(r)).sum::<f64>().powf(1.0 / r)
            })
        }
    }
}

fn sqrt_spectrum_bounds(c: &SpectralCoefficients) -> (f64, f64) {
    let b0 = c.params().b0;
    let top = ModeIndex::new(c.k_max() as i64, c.l_max());
    (b0.sqrt(), eigenvalue(top, c.params()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit() -> FieldParams {
        FieldParams::new(1.0, 0.0).unwrap()
    }

    fn basis(k: usize, l: usize) -> ModeBasis {
        let p = unit();
        let grid = PolarGrid::new(
            PolarGrid::default_radius(p.b0, k, l),
            256,
            PolarGrid::default_n_theta(k),
        )
        .unwrap();
        ModeBasis::build(p, k, l, &grid).unwrap()
    }

    #[test]
    fn fornberg_reproduces_polynomials() {
        let xs = [-0.3, 0.1, 0.25, 0.7, 1.1];
        let w = fornberg_weights(0.4, &xs, 2);
        let f = |x: f64| 2.0 + x - 3.0 * x * x + x.powi(4);
        let d1: f64 = xs.iter().zip(&w[1]).map(|(x, c)| c * f(*x)).sum();
        let d2: f64 = xs.iter().zip(&w[2]).map(|(x, c)| c * f(*x)).sum();
        assert!((d1 - (1.0 - 6.0 * 0.4 + 4.0 * 0.4f64.powi(3))).abs() < 1e-11);
        assert!((d2 - (-6.0 + 12.0 * 0.16)).abs() < 1e-10);
    }

    #[test]
    fn analyze_examples() {
        let b = basis(4, 4);
        let grid = b.grid().clone();
        let v00 = GridField::from_fn(&grid, |x| b.eval_normalized(ModeIndex::new(0, 0), x));
        let c = analyze(&v00, &b).unwrap();
        for (idx, v) in c.iter() {
            let expect = if idx == ModeIndex::new(0, 0) { 1.0 } else { 0.0 };
            assert!((v - expect).norm() < 1e-10, "{idx:?} {v}");
        }
        let zero = analyze(&GridField::zeros(&grid), &b).unwrap();
        assert_eq!(zero.l2_norm(), 0.0);
        let mut f = GridField::zeros(&grid);
        f.scaled_add(Complex64::new(2.0, 0.0), &GridField::from_fn(&grid, |x| b.eval_normalized(ModeIndex::new(1, 1), x)))
            .unwrap();
        f.scaled_add(Complex64::new(0.0, 3.0), &GridField::from_fn(&grid, |x| b.eval_normalized(ModeIndex::new(-2, 0), x)))
            .unwrap();
        let c = analyze(&f, &b).unwrap();
        assert!((c[ModeIndex::new(1, 1)] - 2.0).norm() < 1e-8);
        assert!((c[ModeIndex::new(-2, 0)] - Complex64::new(0.0, 3.0)).norm() < 1e-8);
        let other = PolarGrid::new(grid.radius() + 1.0, 256, grid.n_theta()).unwrap();
        assert!(matches!(analyze(&GridField::zeros(&other), &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn synthesize_round_trip_and_parseval() {
        let b = basis(6, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = SpectralCoefficients::random(unit(), 6, 6, 20, &mut rng);
        let f = synthesize(&c, &b).unwrap();
        let back = analyze(&f, &b).unwrap();
        let mut diff = back.clone();
        diff.add_scaled(Complex64::new(-1.0, 0.0), &c).unwrap();
        assert!(diff.l2_norm() < 1e-8);
        assert!((lp_norm(&f, 2.0).unwrap() - c.l2_norm()).abs() < 1e-8 * c.l2_norm());
        let single = SpectralCoefficients::single(unit(), 6, 6, ModeIndex::new(0, 0));
        let g = synthesize(&single, &b).unwrap();
        for i in 0..b.grid().n_r() {
            for j in 0..b.grid().n_theta() {
                let expect = b.eval_normalized(ModeIndex::new(0, 0), b.grid().point(i, j));
                assert!((g.at(i, j) - expect).norm() < 1e-13);
            }
        }
        let too_big = SpectralCoefficients::zeros(unit(), 7, 6);
        assert!(matches!(synthesize(&too_big, &b), Err(Error::TruncationExceeded { .. })));
    }

    #[test]
    fn analyze_is_linear() {
        let b = basis(3, 3);
        let grid = b.grid().clone();
        let f = GridField::from_fn(&grid, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 3.0).exp(), x[0] * 0.1));
        let g = GridField::from_fn(&grid, |x| Complex64::new(x[1], 0.2) * (-(x[0] * x[0] + x[1] * x[1]) / 5.0).exp());
        let (alpha, beta) = (Complex64::new(0.3, -1.2), Complex64::new(-2.0, 0.5));
        let mut h = GridField::zeros(&grid);
        h.scaled_add(alpha, &f).unwrap();
        h.scaled_add(beta, &g).unwrap();
        let lhs = analyze(&h, &b).unwrap();
        let mut rhs = analyze(&f, &b).unwrap();
        rhs.scale(alpha);
        rhs.add_scaled(beta, &analyze(&g, &b).unwrap()).unwrap();
        for ((_, x), (_, y)) in lhs.iter().zip(rhs.iter()) {
            assert!((x - y).norm() < 1e-10);
        }
    }

    #[test]
    fn radial_hamiltonian_eigen_residuals() {
        let p = FieldParams::new(1.0, 0.0).unwrap();
        let grid = PolarGrid::new(12.0, 512, 64).unwrap();
        assert!(apply_h_radial(&GridField::zeros(&grid), &p).field.values.iter().all(|v| v.norm() == 0.0));
        for idx in [ModeIndex::new(0, 0), ModeIndex::new(-3, 2), ModeIndex::new(2, 1)] {
            let f = GridField::from_fn(&grid, |x| crate::spectrum::eigenfunction_eval(idx, &p, x));
            let applied = apply_h_radial(&f, &p);
            let res = eigen_residual(&f, eigenvalue(idx, &p), &applied);
            assert!(res < 1e-6, "{idx:?} residual {res}");
        }
    }

    #[test]
    fn lp_norm_examples() {
        let b = basis(2, 2);
        let grid = b.grid().clone();
        let v = GridField::from_fn(&grid, |x| b.eval_normalized(ModeIndex::new(0, 0), x));
        assert!((lp_norm(&v, 2.0).unwrap() - 1.0).abs() < 1e-10);
        let zero = GridField::zeros(&grid);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lp_norm(&zero, p).unwrap(), 0.0);
        }
        let fine = PolarGrid::new(12.0, 512, 64).unwrap();
        let raw = GridField::from_fn(&fine, |x| crate::spectrum::eigenfunction_eval(ModeIndex::new(0, 0), &unit(), x));
        let sup = lp_norm(&raw, f64::INFINITY).unwrap();
        assert!((sup - 1.0).abs() < 1e-3 && sup <= 1.0);
        assert!(lp_norm(&v, 0.5).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let p = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = SpectralCoefficients::random(p, 5, 5, 20, &mut rng);
        let plain = sobolev_besov_norm(&c, 0.0, 2.0, 2.0, NormVariant::HomogeneousSobolev, None).unwrap();
        assert!((plain - c.l2_norm()).abs() < 1e-14);
        let single = SpectralCoefficients::single(p, 5, 5, ModeIndex::new(0, 0));
        let one = sobolev_besov_norm(&single, 1.0, 2.0, 2.0, NormVariant::HomogeneousSobolev, None).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        let inh = sobolev_besov_norm(&single, 1.0, 2.0, 2.0, NormVariant::InhomogeneousSobolev, None).unwrap();
        assert!((inh - 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(
            sobolev_besov_norm(&c, 1.0, 4.0, 2.0, NormVariant::HomogeneousSobolev, None),
            Err(Error::UnsupportedCombination(_))
        ));
    }

    #[test]
    fn besov_with_zero_regularity_is_within_overlap_of_l2() {
        let p = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let c = SpectralCoefficients::random(p, 8, 8, 20, &mut rng);
            let besov = sobolev_besov_norm(&c, 0.0, 2.0, 2.0, NormVariant::HomogeneousBesov, None).unwrap();
            let ratio = c.l2_norm().powi(2) / besov.powi(2);
            assert!((1.0..=2.0 + 1e-12).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn coefficient_table_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = SpectralCoefficients::random(FieldParams::new(1.25, 0.5).unwrap(), 3, 4, 12, &mut rng);
        let mut buf = Vec::new();
        c.write_table(&mut buf).unwrap();
        let back = SpectralCoefficients::read_table(buf.as_slice()).unwrap();
        assert_eq!(back, c);
        assert!(SpectralCoefficients::read_table("# spectral-coefficients B0=1 m=0 K=1 L=1\n5 0 1 1\n".as_bytes()).is_err());
    }
}
