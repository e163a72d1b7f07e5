//! Kernels of functions of `H` summed over whole Landau levels.
//!
//! The projector onto the level `(2n+1) B0` has the closed kernel
//! `(B0/2pi) e^{-i(B0/2)(x1 y2 - x2 y1)} L_n(B0 d^2/2) e^{-B0 d^2/4}`, `d = |x - y|`,
//! so `F(H)` has a kernel whose modulus depends on `d` alone. Suprema over
//! pairs of points reduce to a maximum over distances.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::specfun::laguerre_functions;
use crate::spectrum::FieldParams;

/// `e^{-i(B0/2)(x1 y2 - x2 y1)}`.
pub fn magnetic_phase(b0: f64, x: [f64; 2], y: [f64; 2]) -> Complex64 {
    Complex64::from_polar(1.0, -0.5 * b0 * (x[0] * y[1] - x[1] * y[0]))
}

pub fn level_eigenvalue(n: usize, params: &FieldParams) -> f64 {
    (2 * n + 1) as f64 * params.b0
}

/// Kernel of the projector onto Landau level `n`.
pub fn level_projector_kernel(n: usize, params: &FieldParams, x: [f64; 2], y: [f64; 2]) -> Complex64 {
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let mut funcs = Vec::with_capacity(n + 1);
    laguerre_functions(0, n, params.b0 * d2 / 2.0, &mut funcs);
    magnetic_phase(params.b0, x, y) * (params.b0 / (2.0 * PI) * funcs[n])
}

/// `F(H) = sum_n a_n P_n` with finitely many levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSeries {
    b0: f64,
    coeffs: Vec<Complex64>,
}

impl LevelSeries {
    pub fn new(b0: f64, coeffs: Vec<Complex64>) -> Self {
        LevelSeries { b0, coeffs }
    }

    /// `a_n = f(n, lambda_n)` for `n = 0..levels`.
    pub fn from_fn<T: Into<Complex64>>(params: &FieldParams, levels: usize, f: impl Fn(usize, f64) -> T) -> Self {
        let coeffs = (0..levels).map(|n| f(n, level_eigenvalue(n, params)).into()).collect();
        LevelSeries { b0: params.b0, coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn levels(&self) -> usize {
        self.coeffs.len()
    }

    /// `(B0/2pi) sum_n a_n L_n(B0 d^2/2) e^{-B0 d^2/4}`.
    pub fn radial(&self, d: f64) -> Complex64 {
        let Some(last) = self.coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0)) else {
            return Complex64::new(0.0, 0.0);
        };
        let mut funcs = Vec::with_capacity(last + 1);
        laguerre_functions(0, last, self.b0 * d * d / 2.0, &mut funcs);
        let sum: Complex64 = self.coeffs[..=last].iter().zip(&funcs).map(|(c, f)| c * f).sum();
        sum * (self.b0 / (2.0 * PI))
    }

    pub fn kernel(&self, x: [f64; 2], y: [f64; 2]) -> Complex64 {
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        magnetic_phase(self.b0, x, y) * self.radial(d)
    }

    /// Largest kernel modulus over the given distances, with the distance attaining it.
    pub fn sup_modulus(&self, distances: &[f64]) -> (f64, f64) {
        distances
            .par_iter()
            .map(|&d| (self.radial(d).norm(), d))
            .reduce(|| (f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
    }

    /// `sup_x ||K(x, .)||_{L^2} = (B0/2pi sum |a_n|^2)^{1/2}`: every level has
    /// diagonal density `B0/2pi`.
    pub fn row_l2_norm(&self) -> f64 {
        (self.b0 / (2.0 * PI) * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }
}

/// `count` equally spaced distances on `[0, d_max]`.
pub fn distance_grid(d_max: f64, count: usize) -> Vec<f64> {
    let step = d_max / (count - 1) as f64;
    (0..count).map(|i| i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{landau_level, normalized_eigenfunction, ModeIndex};

    #[test]
    fn projector_matches_mode_sum() {
        let p = FieldParams::new(1.2, 0.0).unwrap();
        let pts = [([0.3, -0.2], [0.5, 0.4]), ([0.0, 0.0], [0.7, -0.1]), ([-0.4, 0.6], [-0.4, 0.6])];
        for n in 0..4usize {
            for (x, y) in pts {
                let mut sum = Complex64::new(0.0, 0.0);
                for k in -60i64..=(n as i64) {
                    for ell in 0..=n {
                        let idx = ModeIndex::new(k, ell);
                        if landau_level(idx) == n {
                            sum += normalized_eigenfunction(idx, &p, x) * normalized_eigenfunction(idx, &p, y).conj();
                        }
                    }
                }
                let closed = level_projector_kernel(n, &p, x, y);
                assert!((sum - closed).norm() < 1e-12, "n={n} {sum} {closed}");
            }
        }
    }

    #[test]
    fn series_kernel_is_sum_of_projectors() {
        let p = FieldParams::new(0.8, 0.0).unwrap();
        let series = LevelSeries::from_fn(&p, 6, |n, lam| Complex64::new(lam.sin(), n as f64));
        let (x, y) = ([0.2, 1.0], [-0.5, 0.3]);
        let direct: Complex64 = (0..6).map(|n| series.coeffs()[n] * level_projector_kernel(n, &p, x, y)).sum();
        assert!((series.kernel(x, y) - direct).norm() < 1e-13);
        let zero = LevelSeries::new(1.0, vec![Complex64::new(0.0, 0.0); 4]);
        assert_eq!(zero.radial(0.3), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn row_norm_matches_quadrature() {
        let p = FieldParams::new(1.0, 0.0).unwrap();
        let series = LevelSeries::from_fn(&p, 5, |n, _| 1.0 / (n as f64 + 1.0));
        // integral over the plane of |K(0, y)|^2 = 2 pi int |radial(d)|^2 d dd
        let (nodes, weights) = crate::grid::gauss_legendre(64);
        let mut total = 0.0;
        for panel in 0..20 {
            let (a, b) = (panel as f64 * 0.6, (panel + 1) as f64 * 0.6);
            for (x, w) in nodes.iter().zip(&weights) {
                let d = 0.5 * (a + b) + 0.5 * (b - a) * x;
                total += 0.5 * (b - a) * w * 2.0 * PI * d * series.radial(d).norm_sqr();
            }
        }
        assert!((total.sqrt() - series.row_l2_norm()).abs() < 1e-12);
    }
}
