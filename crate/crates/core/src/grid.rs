//! Polar quadrature grids and sampled fields.
//!
//! Angles are measured clockwise from the `x1` axis: the node `(r, theta)` sits
//! at `x = (r cos theta, -r sin theta)`. With this orientation the angular modes
//! `e^{ik theta}` carry the Landau eigenvalues `(2l+1+|k|+k) B0` for the vector
//! potential `A = (B0/2)(-x2, x1)`, and the Mehler kernel keeps its usual phase.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre order used inside every radial panel.
pub const PANEL_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    n_theta: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl PolarGrid {
    /// Composite Gauss-Legendre radial rule on `[0, R]` (`Nr / 16` equal panels of
    /// order 16) times the uniform periodic rule in the angle.
    pub fn new(radius: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidResolution(format!("R must be positive, got {radius}")));
        }
        if n_r < 16 || n_r % PANEL_ORDER != 0 {
            return Err(Error::InvalidResolution(format!(
                "Nr must be a multiple of {PANEL_ORDER} and at least 16, got {n_r}"
            )));
        }
        if n_theta < 8 || !n_theta.is_power_of_two() {
            return Err(Error::InvalidResolution(format!(
                "Ntheta must be a power of two and at least 8, got {n_theta}"
            )));
        }
        let (x, w) = gauss_legendre(PANEL_ORDER);
        let panels = n_r / PANEL_ORDER;
        let width = radius / panels as f64;
        let mut nodes = Vec::with_capacity(n_r);
        let mut weights = Vec::with_capacity(n_r);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * width * xi);
                weights.push(0.5 * width * wi);
            }
        }
        Ok(PolarGrid {
            radius,
            nodes,
            weights,
            n_theta,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_r(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn radial_nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Plain `dr` weights; multiply by `r` for the polar measure.
    pub fn radial_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn theta(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_theta as f64
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    /// Cartesian position of node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let r = self.nodes[i];
        let th = self.theta(j);
        [r * th.cos(), -r * th.sin()]
    }

    /// Quadrature weight of node `(i, j)` for `dx` in the plane.
    pub fn area_weight(&self, i: usize) -> f64 {
        self.weights[i] * self.nodes[i] * self.dtheta()
    }

    /// Same grid with twice the radial nodes (used for refinement checks).
    pub fn refined(&self) -> Self {
        PolarGrid::new(self.radius, 2 * self.n_r(), self.n_theta).expect("refining a valid grid")
    }

    /// Integral of a radial profile against `r dr`.
    pub fn radial_integral(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.nodes)
            .zip(&self.weights)
            .map(|((v, r), w)| v * r * w)
            .sum()
    }

    /// Smallest half-integer `R` with `R^{K+2L} e^{-B0 R^2/4} < 1e-12`, and never below 12.
    pub fn default_radius(b0: f64, k_max: usize, l_max: usize) -> f64 {
        let degree = (k_max + 2 * l_max) as f64;
        let mut r: f64 = 12.0;
        while degree * r.ln() - b0 * r * r / 4.0 >= (1e-12f64).ln() {
            r += 0.5;
        }
        r
    }

    /// Smallest power of two that is at least `max(8, 4K + 4)`.
    pub fn default_n_theta(k_max: usize) -> usize {
        (4 * k_max + 4).max(8).next_power_of_two()
    }

    pub fn same_shape(&self, other: &PolarGrid) -> bool {
        self.n_theta == other.n_theta
            && self.nodes.len() == other.nodes.len()
            && (self.radius - other.radius).abs() <= 1e-12 * self.radius
    }
}

/// Complex samples on a polar grid, stored radius-major: index `i * Ntheta + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: PolarGrid,
    pub values: Vec<Complex64>,
}

impl GridField {
    pub fn zeros(grid: &PolarGrid) -> Self {
        GridField {
            values: vec![Complex64::new(0.0, 0.0); grid.n_r() * grid.n_theta()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &PolarGrid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let mut field = GridField::zeros(grid);
        for i in 0..grid.n_r() {
            for j in 0..grid.n_theta() {
                field.values[i * grid.n_theta() + j] = f(grid.point(i, j));
            }
        }
        field
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.grid.n_theta() + j]
    }

    pub fn ring(&self, i: usize) -> &[Complex64] {
        let nt = self.grid.n_theta();
        &self.values[i * nt..(i + 1) * nt]
    }

    pub fn ring_mut(&mut self, i: usize) -> &mut [Complex64] {
        let nt = self.grid.n_theta();
        &mut self.values[i * nt..(i + 1) * nt]
    }

    pub fn scaled_add(&mut self, alpha: Complex64, other: &GridField) -> Result<()> {
        if !self.grid.same_shape(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    /// Plain-text table: a header line with the grid, then `i j re im` rows.
    pub fn write_table<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# grid-field R={:e} Nr={} Ntheta={}",
            self.grid.radius,
            self.grid.n_r(),
            self.grid.n_theta()
        )?;
        let mut line = String::new();
        for i in 0..self.grid.n_r() {
            for j in 0..self.grid.n_theta() {
                let v = self.at(i, j);
                line.clear();
                let _ = writeln!(line, "{i} {j} {:e} {:e}", v.re, v.im);
                out.write_all(line.as_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_table<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid-field table".into()))??;
        let fields = header_fields(&header, "# grid-field")?;
        let radius: f64 = header_value(&fields, "R")?;
        let n_r: usize = header_value(&fields, "Nr")?;
        let n_theta: usize = header_value(&fields, "Ntheta")?;
        let grid = PolarGrid::new(radius, n_r, n_theta)?;
        let mut field = GridField::zeros(&grid);
        let mut seen = 0usize;
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(Error::Parse(format!("line {}: expected 4 columns", lineno + 2)));
            }
            let i: usize = parse_num(parts[0], lineno + 2)?;
            let j: usize = parse_num(parts[1], lineno + 2)?;
            if i >= n_r || j >= n_theta {
                return Err(Error::Parse(format!("line {}: node out of range", lineno + 2)));
            }
            field.values[i * n_theta + j] =
                Complex64::new(parse_num(parts[2], lineno + 2)?, parse_num(parts[3], lineno + 2)?);
            seen += 1;
        }
        if seen != n_r * n_theta {
            return Err(Error::Parse(format!(
                "expected {} samples, found {seen}",
                n_r * n_theta
            )));
        }
        Ok(field)
    }
}

pub(crate) fn header_fields(header: &str, tag: &str) -> Result<Vec<(String, String)>> {
    let rest = header
        .strip_prefix(tag)
        .ok_or_else(|| Error::Parse(format!("expected header starting with '{tag}'")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("malformed header entry '{kv}'")))
        })
        .collect()
}

pub(crate) fn header_value<T: std::str::FromStr>(fields: &[(String, String)], key: &str) -> Result<T> {
    let raw = fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Parse(format!("header is missing '{key}'")))?;
    raw.parse()
        .map_err(|_| Error::Parse(format!("header entry {key}={raw} is not valid")))
}

pub(crate) fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: cannot parse '{s}'")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        for deg in 0..32 {
            let quad: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((quad - exact).abs() < 1e-14, "degree {deg}");
        }
    }

    #[test]
    fn disc_area_and_gaussian() {
        let grid = PolarGrid::new(12.0, 512, 64).unwrap();
        let area: f64 = (0..grid.n_r()).map(|i| grid.area_weight(i)).sum::<f64>() * grid.n_theta() as f64;
        assert_relative_eq!(area, PI * 144.0, max_relative = 1e-10);
        let moment: f64 = grid.radial_weights().iter().zip(grid.radial_nodes()).map(|(w, r)| w * r).sum();
        assert_relative_eq!(moment, 72.0, max_relative = 1e-10);
        // closed form: 2 pi (1 - e^{-72})
        let gauss: Vec<f64> = grid.radial_nodes().iter().map(|r| (-r * r / 2.0).exp()).collect();
        let total = 2.0 * PI * grid.radial_integral(&gauss);
        assert_relative_eq!(total, 2.0 * PI * (1.0 - (-72.0f64).exp()), max_relative = 1e-12);
    }

    #[test]
    fn small_grid_and_validation() {
        let grid = PolarGrid::new(1.0, 16, 8).unwrap();
        assert!(grid.radial_weights().iter().all(|w| *w > 0.0));
        assert!(PolarGrid::new(-1.0, 16, 8).is_err());
        assert!(PolarGrid::new(1.0, 8, 8).is_err());
        assert!(PolarGrid::new(1.0, 24, 8).is_err());
        assert!(PolarGrid::new(1.0, 16, 12).is_err());
        assert!(PolarGrid::new(1.0, 16, 4).is_err());
    }

    #[test]
    fn angles_run_clockwise() {
        let grid = PolarGrid::new(1.0, 16, 8).unwrap();
        let p = grid.point(0, 2);
        let r = grid.radial_nodes()[0];
        assert!(p[0].abs() < 1e-15 && (p[1] + r).abs() < 1e-15);
    }

    #[test]
    fn default_radius_meets_tail_rule() {
        let r = PolarGrid::default_radius(1.0, 8, 8);
        assert!(24.0 * r.ln() - r * r / 4.0 < (1e-12f64).ln());
        assert_eq!(PolarGrid::default_radius(1.0, 0, 0), 12.0);
        assert_eq!(PolarGrid::default_n_theta(24), 128);
        assert_eq!(PolarGrid::default_n_theta(0), 8);
    }

    #[test]
    fn table_round_trip() {
        let grid = PolarGrid::new(2.0, 16, 8).unwrap();
        let field = GridField::from_fn(&grid, |x| Complex64::new(x[0], x[1] * 0.1 + 1.0 / 3.0));
        let mut buf = Vec::new();
        field.write_table(&mut buf).unwrap();
        let back = GridField::read_table(buf.as_slice()).unwrap();
        assert_eq!(back, field);
    }
}
