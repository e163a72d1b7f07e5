//! Landau spectral data for `H = (i grad + A)^2`, `A = (B0/2)(-x2, x1)`.
//!
//! Modes are labelled by the angular number `k` and the radial index `l`; the
//! eigenvalue is `(2l + 1 + |k| + k) B0` and the eigenfunction
//! `|x|^{|k|} e^{-B0|x|^2/4} P_{k,l}(B0|x|^2/2) e^{ik theta}` with the clockwise
//! angle of [`crate::grid`].

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{header_fields, header_value, parse_num, PolarGrid};
use crate::specfun::{laguerre_functions, laguerre_p, laguerre_p_family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub k: i64,
    pub ell: usize,
}

impl ModeIndex {
    pub fn new(k: i64, ell: usize) -> Self {
        ModeIndex { k, ell }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub b0: f64,
    pub mass: f64,
}

impl FieldParams {
    pub fn new(b0: f64, mass: f64) -> Result<Self> {
        if !(b0 > 0.0) || !b0.is_finite() {
            return Err(Error::InvalidArgument(format!("B0 must be positive, got {b0}")));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::InvalidArgument(format!("mass must be non-negative, got {mass}")));
        }
        Ok(FieldParams { b0, mass })
    }

    pub fn with_mass(self, mass: f64) -> Self {
        FieldParams { mass, ..self }
    }
}

/// Which Klein-Gordon block: `Up` is `H + m^2 - B0`, `Down` is `H + m^2 + B0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn shift(self, b0: f64) -> f64 {
        match self {
            Spin::Up => -b0,
            Spin::Down => b0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }
}

pub fn eigenvalue(idx: ModeIndex, params: &FieldParams) -> f64 {
    let level = 2 * idx.ell as i64 + 1 + idx.k.abs() + idx.k;
    level as f64 * params.b0
}

/// `sqrt(lambda + m^2 -+ B0)`; exactly zero on the massless lowest level for `Up`.
pub fn kg_frequency(idx: ModeIndex, params: &FieldParams, spin: Spin) -> f64 {
    kg_frequency_of(eigenvalue(idx, params), params, spin)
}

pub fn kg_frequency_of(lambda: f64, params: &FieldParams, spin: Spin) -> f64 {
    // lambda >= B0, so the radicand is >= m^2; clamp the rounding residue
    (lambda + params.mass * params.mass + spin.shift(params.b0)).max(0.0).sqrt()
}

/// Radial part `r^{|k|} e^{-B0 r^2/4} P_{k,l}(B0 r^2/2)` of the unnormalized eigenfunction.
pub fn radial_profile(idx: ModeIndex, b0: f64, r: f64) -> f64 {
    let alpha = idx.k.unsigned_abs() as i32;
    let envelope = if alpha == 0 {
        (-b0 * r * r / 4.0).exp()
    } else if r == 0.0 {
        0.0
    } else {
        (alpha as f64 * r.ln() - b0 * r * r / 4.0).exp()
    };
    envelope * laguerre_p(idx.k, idx.ell, b0 * r * r / 2.0)
}

/// Unnormalized eigenfunction `V_{k,l}(x)`.
pub fn eigenfunction_eval(idx: ModeIndex, params: &FieldParams, x: [f64; 2]) -> Complex64 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return if idx.k == 0 {
            Complex64::new(radial_profile(idx, params.b0, 0.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let theta = clockwise_angle(x);
    radial_profile(idx, params.b0, r) * Complex64::from_polar(1.0, idx.k as f64 * theta)
}

pub fn clockwise_angle(x: [f64; 2]) -> f64 {
    (-x[1]).atan2(x[0])
}

/// Normalized radial profiles `sqrt(B0/2pi) L~_l^{(|k|)}(B0 r^2/2)`, `l = 0..=l_max`,
/// from the orthonormal Laguerre functions; no grid is involved.
pub fn normalized_profiles(k: i64, l_max: usize, b0: f64, r: f64, out: &mut Vec<f64>) {
    laguerre_functions(k.unsigned_abs() as usize, l_max, b0 * r * r / 2.0, out);
    let scale = (b0 / (2.0 * PI)).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
}

/// Normalized eigenfunction at a point, from [`normalized_profiles`].
pub fn normalized_eigenfunction(idx: ModeIndex, params: &FieldParams, x: [f64; 2]) -> Complex64 {
    let mut prof = Vec::with_capacity(idx.ell + 1);
    normalized_profiles(idx.k, idx.ell, params.b0, x[0].hypot(x[1]), &mut prof);
    prof[idx.ell] * Complex64::from_polar(1.0, idx.k as f64 * clockwise_angle(x))
}

/// Landau level `n` of a mode: `lambda = (2n + 1) B0`.
pub fn landau_level(idx: ModeIndex) -> usize {
    idx.ell + ((idx.k.abs() + idx.k) / 2) as usize
}

/// Counts `j` in `[-K, K]` with `(lambda - j B0)/(2 B0) - (|j|+1)/2` a non-negative integer.
pub fn multiplicity_formula(lambda: f64, params: &FieldParams, k_window: usize) -> usize {
    let b0 = params.b0;
    let k = k_window as i64;
    (-k..=k)
        .filter(|&j| {
            let v = (lambda - j as f64 * b0) / (2.0 * b0) - (j.abs() as f64 + 1.0) / 2.0;
            v > -1e-9 && (v - v.round()).abs() < 1e-9
        })
        .count()
}

/// Brute-force count of modes `|k| <= K`, `l <= L` with eigenvalue within `1e-9 B0` of `lambda`.
pub fn multiplicity_brute(lambda: f64, params: &FieldParams, k_window: usize, l_window: usize) -> usize {
    let k = k_window as i64;
    (-k..=k)
        .flat_map(|kk| (0..=l_window).map(move |ell| ModeIndex::new(kk, ell)))
        .filter(|&idx| (eigenvalue(idx, params) - lambda).abs() < 1e-9 * params.b0)
        .count()
}

/// Normalized eigenfunctions sampled on the radial nodes of a grid, for all
/// `|k| <= K`, `l <= L`.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    params: FieldParams,
    k_max: usize,
    l_max: usize,
    grid: PolarGrid,
    norms: Vec<f64>,
    profiles: Vec<Vec<f64>>,
}

/// Relative norm change under radial node doubling that makes a grid unusable.
const NORM_DOUBLING_TOL: f64 = 1e-8;

fn raw_family(k: i64, l_max: usize, b0: f64, nodes: &[f64]) -> Vec<Vec<f64>> {
    let alpha = k.unsigned_abs() as f64;
    let mut out = vec![Vec::with_capacity(nodes.len()); l_max + 1];
    let mut poly = Vec::with_capacity(l_max + 1);
    for &r in nodes {
        let u = b0 * r * r / 2.0;
        laguerre_p_family(k, l_max, u, &mut poly);
        let envelope = (alpha * r.ln() - b0 * r * r / 4.0).exp();
        for (ell, p) in poly.iter().enumerate() {
            out[ell].push(envelope * p);
        }
    }
    out
}

fn norms_on(grid: &PolarGrid, family: &[Vec<f64>]) -> Vec<f64> {
    family
        .iter()
        .map(|v| {
            let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
            (2.0 * PI * grid.radial_integral(&sq)).sqrt()
        })
        .collect()
}

impl ModeBasis {
    pub fn build(params: FieldParams, k_max: usize, l_max: usize, grid: &PolarGrid) -> Result<Self> {
        let fine = grid.refined();
        let per_k: Vec<Result<(Vec<f64>, Vec<Vec<f64>>)>> = (-(k_max as i64)..=k_max as i64)
            .into_par_iter()
            .map(|k| {
                let family = raw_family(k, l_max, params.b0, grid.radial_nodes());
                let norms = norms_on(grid, &family);
                let fine_norms = norms_on(&fine, &raw_family(k, l_max, params.b0, fine.radial_nodes()));
                for (ell, (n, f)) in norms.iter().zip(&fine_norms).enumerate() {
                    let rel_change = (n - f).abs() / f;
                    if !(rel_change <= NORM_DOUBLING_TOL) {
                        return Err(Error::GridTooCoarse { k, ell, rel_change });
                    }
                }
                let profiles = family
                    .into_iter()
                    .zip(&norms)
                    .map(|(v, n)| v.into_iter().map(|x| x / n).collect())
                    .collect();
                Ok((norms, profiles))
            })
            .collect();
        let mut norms = Vec::with_capacity((2 * k_max + 1) * (l_max + 1));
        let mut profiles = Vec::with_capacity(norms.capacity());
        for item in per_k {
            let (n, p) = item?;
            norms.extend(n);
            profiles.extend(p);
        }
        Ok(ModeBasis {
            params,
            k_max,
            l_max,
            grid: grid.clone(),
            norms,
            profiles,
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

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn contains(&self, idx: ModeIndex) -> bool {
        idx.k.unsigned_abs() as usize <= self.k_max && idx.ell <= self.l_max
    }

    fn slot(&self, idx: ModeIndex) -> usize {
        debug_assert!(self.contains(idx));
        (idx.k + self.k_max as i64) as usize * (self.l_max + 1) + idx.ell
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        let k = self.k_max as i64;
        (-k..=k).flat_map(move |kk| (0..=self.l_max).map(move |ell| ModeIndex::new(kk, ell)))
    }

    pub fn eigenvalue(&self, idx: ModeIndex) -> f64 {
        eigenvalue(idx, &self.params)
    }

    /// `||V_{k,l}||_{L^2(R^2)}` from radial quadrature.
    pub fn norm_constant(&self, idx: ModeIndex) -> f64 {
        self.norms[self.slot(idx)]
    }

    /// Normalized radial samples on the grid's radial nodes.
    pub fn profile(&self, idx: ModeIndex) -> &[f64] {
        &self.profiles[self.slot(idx)]
    }

    /// Normalized eigenfunction at an arbitrary point.
    pub fn eval_normalized(&self, idx: ModeIndex, x: [f64; 2]) -> Complex64 {
        eigenfunction_eval(idx, &self.params, x) / self.norm_constant(idx)
    }

    /// Normalized radial profile at an arbitrary radius.
    pub fn radial_normalized(&self, idx: ModeIndex, r: f64) -> f64 {
        radial_profile(idx, self.params.b0, r) / self.norm_constant(idx)
    }

    /// Gram matrix entries `<V_{k,l}, V_{k,l'}>` of the normalized profiles at fixed `k`.
    pub fn gram(&self, k: i64, ell_a: usize, ell_b: usize) -> f64 {
        let a = self.profile(ModeIndex::new(k, ell_a));
        let b = self.profile(ModeIndex::new(k, ell_b));
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        2.0 * PI * self.grid.radial_integral(&prod)
    }

    fn header(&self, tag: &str) -> String {
        format!(
            "{tag} B0={:e} m={:e} R={:e} Nr={} Ntheta={} K={} L={}",
            self.params.b0,
            self.params.mass,
            self.grid.radius(),
            self.grid.n_r(),
            self.grid.n_theta(),
            self.k_max,
            self.l_max
        )
    }

    /// Mode table: header, then one `k ell lambda norm` row per mode.
    pub fn write_modes<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header("# mode-basis"))?;
        writeln!(out, "# columns: k ell lambda norm")?;
        for idx in self.modes() {
            writeln!(
                out,
                "{} {} {:e} {:e}",
                idx.k,
                idx.ell,
                self.eigenvalue(idx),
                self.norm_constant(idx)
            )?;
        }
        Ok(())
    }

    /// Radial sample table: header, then `k ell i value` rows of normalized samples.
    pub fn write_profiles<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.header("# mode-profiles"))?;
        writeln!(out, "# columns: k ell node value")?;
        for idx in self.modes() {
            for (i, v) in self.profile(idx).iter().enumerate() {
                writeln!(out, "{} {} {} {:e}", idx.k, idx.ell, i, v)?;
            }
        }
        Ok(())
    }

    /// Cache key written in both table headers.
    pub fn metadata_matches(
        header: &str,
        params: &FieldParams,
        grid: &PolarGrid,
        k_max: usize,
        l_max: usize,
    ) -> bool {
        let Some(tag) = header.split_whitespace().take(2).collect::<Vec<_>>().get(1).copied() else {
            return false;
        };
        let Ok(fields) = header_fields(header, &format!("# {tag}")) else {
            return false;
        };
        let check = || -> Result<bool> {
            Ok(header_value::<f64>(&fields, "B0")? == params.b0
                && header_value::<f64>(&fields, "m")? == params.mass
                && header_value::<f64>(&fields, "R")? == grid.radius()
                && header_value::<usize>(&fields, "Nr")? == grid.n_r()
                && header_value::<usize>(&fields, "Ntheta")? == grid.n_theta()
                && header_value::<usize>(&fields, "K")? == k_max
                && header_value::<usize>(&fields, "L")? == l_max)
        };
        check().unwrap_or(false)
    }

    /// Loads a basis from the two cache tables. Returns `Ok(None)` when the
    /// cache was written for different parameters, grid or truncation.
    pub fn read_cache<R1: BufRead, R2: BufRead>(
        modes: R1,
        profiles: R2,
        params: FieldParams,
        grid: &PolarGrid,
        k_max: usize,
        l_max: usize,
    ) -> Result<Option<Self>> {
        let mut mode_lines = modes.lines();
        let header = mode_lines.next().ok_or_else(|| Error::Parse("empty mode table".into()))??;
        if !Self::metadata_matches(&header, &params, grid, k_max, l_max) {
            return Ok(None);
        }
        let count = (2 * k_max + 1) * (l_max + 1);
        let mut basis = ModeBasis {
            params,
            k_max,
            l_max,
            grid: grid.clone(),
            norms: vec![f64::NAN; count],
            profiles: vec![vec![f64::NAN; grid.n_r()]; count],
        };
        for (n, line) in mode_lines.enumerate() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("mode table line {}: expected 4 columns", n + 2)));
            }
            let idx = ModeIndex::new(parse_num(parts[0], n + 2)?, parse_num(parts[1], n + 2)?);
            if !basis.contains(idx) {
                return Err(Error::Parse(format!("mode table line {}: mode outside truncation", n + 2)));
            }
            let slot = basis.slot(idx);
            basis.norms[slot] = parse_num(parts[3], n + 2)?;
        }
        let mut profile_lines = profiles.lines();
        let header = profile_lines
            .next()
            .ok_or_else(|| Error::Parse("empty profile table".into()))??;
        if !Self::metadata_matches(&header, &params, grid, k_max, l_max) {
            return Ok(None);
        }
        for (n, line) in profile_lines.enumerate() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("profile table line {}: expected 4 columns", n + 2)));
            }
            let idx = ModeIndex::new(parse_num(parts[0], n + 2)?, parse_num(parts[1], n + 2)?);
            let node: usize = parse_num(parts[2], n + 2)?;
            if !basis.contains(idx) || node >= grid.n_r() {
                return Err(Error::Parse(format!("profile table line {}: index out of range", n + 2)));
            }
            let slot = basis.slot(idx);
            basis.profiles[slot][node] = parse_num(parts[3], n + 2)?;
        }
        let complete = basis.norms.iter().all(|v| v.is_finite())
            && basis.profiles.iter().all(|p| p.iter().all(|v| v.is_finite()));
        if !complete {
            return Err(Error::Parse("cache tables are incomplete".into()));
        }
        Ok(Some(basis))
    }
}
