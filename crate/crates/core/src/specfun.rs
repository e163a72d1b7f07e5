//! Special functions behind the Landau eigenfunctions: the rising factorial,
//! Kummer's confluent hypergeometric series `M(a, b, s)` and the terminating
//! radial polynomials `P_{k,l}`.

use crate::error::{Error, Result};

/// Stopping rule for infinite series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTolerance {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        SeriesTolerance {
            abs_tol: 1e-14,
            max_terms: 10_000,
        }
    }
}

impl SeriesTolerance {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) || max_terms == 0 {
            return Err(Error::InvalidArgument(format!(
                "series tolerance needs abs_tol > 0 and max_terms >= 1 (got {abs_tol}, {max_terms})"
            )));
        }
        Ok(SeriesTolerance { abs_tol, max_terms })
    }
}

/// Neumaier's variant of compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Rising factorial `(a)_n = a (a+1) ... (a+n-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, i| acc * (a + i as f64))
}

fn is_nonpositive_integer(b: f64) -> bool {
    b <= 0.0 && b.fract() == 0.0
}

/// Kummer's function `M(a, b, s) = sum_n (a)_n / (b)_n s^n / n!`.
///
/// Terms are generated by their ratio. Summation stops once a term is below
/// `abs_tol` and the term ratio has dropped under 1/2, which bounds the
/// remaining tail by the last term. A terminating series (`a` a non-positive
/// integer) returns as soon as the terms vanish.
pub fn kummer_m(a: f64, b: f64, s: f64, tol: SeriesTolerance) -> Result<f64> {
    if is_nonpositive_integer(b) {
        return Err(Error::InvalidB(b));
    }
    let mut sum = CompensatedSum::default();
    let mut term = 1.0;
    sum.add(term);
    for n in 0..tol.max_terms {
        let nf = n as f64;
        let ratio = (a + nf) / ((b + nf) * (nf + 1.0)) * s;
        term *= ratio;
        if term == 0.0 {
            return Ok(sum.value());
        }
        sum.add(term);
        if term.abs() < tol.abs_tol && ratio.abs() < 0.5 {
            return Ok(sum.value());
        }
    }
    Err(Error::NoConvergence {
        terms: tol.max_terms,
        last_term: term,
    })
}

/// The degree-`ell` radial polynomial
/// `P_{k,ell}(r) = sum_{n=0}^{ell} (-ell)_n / (1+|k|)_n r^n / n!`,
/// summed exactly with compensation (the terms alternate in sign).
pub fn laguerre_p(k: i64, ell: usize, r: f64) -> f64 {
    let alpha = k.unsigned_abs() as f64;
    let mut sum = CompensatedSum::default();
    let mut term = 1.0;
    sum.add(term);
    for n in 0..ell {
        let nf = n as f64;
        term *= (nf - ell as f64) / ((alpha + 1.0 + nf) * (nf + 1.0)) * r;
        sum.add(term);
    }
    sum.value()
}

/// All of `P_{k,0}(u), ..., P_{k,lmax}(u)` by the three-term recurrence
/// `(n+a) P_n = (2n-1+a-u) P_{n-1} - (n-1) P_{n-2}`, `a = |k|`.
///
/// Stable where the explicit sum suffers cancellation; used when sampling
/// whole families of modes.
pub fn laguerre_p_family(k: i64, lmax: usize, u: f64, out: &mut Vec<f64>) {
    let alpha = k.unsigned_abs() as f64;
    out.clear();
    out.push(1.0);
    if lmax == 0 {
        return;
    }
    out.push(1.0 - u / (1.0 + alpha));
    for n in 2..=lmax {
        let nf = n as f64;
        let next = ((2.0 * nf - 1.0 + alpha - u) * out[n - 1] - (nf - 1.0) * out[n - 2]) / (nf + alpha);
        out.push(next);
    }
}

/// Orthonormal Laguerre functions
/// `sqrt(n!/(n+a)!) u^{a/2} e^{-u/2} L_n^{(a)}(u)`, `n = 0..=nmax`, on `[0, inf)` with
/// measure `du`. The starting value is formed in log space so large `a` and `u`
/// neither overflow nor underflow prematurely.
pub fn laguerre_functions(alpha: usize, nmax: usize, u: f64, out: &mut Vec<f64>) {
    out.clear();
    let a = alpha as f64;
    let log_gamma = ln_factorial(alpha);
    let first = if u == 0.0 {
        if alpha == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (0.5 * a * u.ln() - 0.5 * u - 0.5 * log_gamma).exp()
    };
    out.push(first);
    if nmax == 0 {
        return;
    }
    out.push((1.0 + a - u) * first / (1.0 + a).sqrt());
    for n in 2..=nmax {
        let nf = n as f64;
        let next = ((2.0 * nf - 1.0 + a - u) * out[n - 1]
            - ((nf - 1.0) * (nf - 1.0 + a)).sqrt() * out[n - 2])
            / (nf * (nf + a)).sqrt();
        out.push(next);
    }
}

/// `ln(n!)`, summed directly; `n` stays small in this crate.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}
