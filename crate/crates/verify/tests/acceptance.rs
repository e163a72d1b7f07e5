//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use magdirac::dirac::{
    apply_dirac, apply_dirac_truncated, deficiency_window_check, evolve_dirac, squaring_residual, LadderTable,
    SpinorCoefficients,
};
use magdirac::estimates::{
    bernstein_scan, decay_scan, fit_line, keel_tao_exponent, norm_equivalence_scan, spread, square_function_check,
    strichartz_scan, AdmissiblePair, DecayScan, StrichartzFlow,
};
use magdirac::fields::{apply_h_radial, eigen_residual, synthesize, SpectralCoefficients};
use magdirac::grid::PolarGrid;
use magdirac::propagators::{
    halfwave_apply, heat_apply, heat_mehler_kernel, oscillatory_i, schrodinger_apply, schrodinger_kernel_sup,
    spectral_kernel, subordination_residual, FlowSign, SubordinationSample,
};
use magdirac::spectrum::{
    eigenvalue, kg_frequency, multiplicity_brute, multiplicity_formula, FieldParams, ModeBasis, ModeIndex, Spin,
};
use magdirac::Result;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String)>;

fn unit() -> FieldParams {
    FieldParams::new(1.0, 0.0).unwrap()
}

fn basis(p: FieldParams, k: usize, l: usize, n_r: usize) -> Result<ModeBasis> {
    let grid = PolarGrid::new(PolarGrid::default_radius(p.b0, k, l), n_r, PolarGrid::default_n_theta(k))?;
    ModeBasis::build(p, k, l, &grid)
}

fn max_gap(a: &SpectralCoefficients, b: &SpectralCoefficients) -> f64 {
    a.iter().zip(b.iter()).map(|((_, x), (_, y))| (x - y).norm()).fold(0.0, f64::max)
}

fn eigen_residuals() -> Outcome {
    let p = unit();
    let b = basis(p, 8, 8, 512)?;
    let mut worst: f64 = 0.0;
    for k in -8i64..=8 {
        for ell in 0..=8 {
            let idx = ModeIndex::new(k, ell);
            let f = synthesize(&SpectralCoefficients::single(p, 8, 8, idx), &b)?;
            let applied = apply_h_radial(&f, &p);
            worst = worst.max(eigen_residual(&f, eigenvalue(idx, &p), &applied));
        }
    }
    Ok((worst < 1e-6, format!("max relative residual {worst:.3e} (< 1e-6)")))
}

fn orthonormality() -> Outcome {
    let b = basis(unit(), 8, 8, 512)?;
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for k in -8i64..=8 {
        for a in 0..=8 {
            for c in 0..=8 {
                let g = b.gram(k, a, c);
                if a == c {
                    diag = diag.max((g - 1.0).abs());
                } else {
                    off = off.max(g.abs());
                }
            }
        }
    }
    Ok((off < 1e-8, format!("max off-diagonal {off:.3e} (< 1e-8), max |diag - 1| {diag:.3e}")))
}

fn mehler() -> Outcome {
    let p = unit();
    let pts = [
        ([0.2, 0.1], [-0.3, 0.4]),
        ([0.5, -0.5], [0.5, -0.5]),
        ([0.0, 0.0], [0.6, 0.2]),
        ([-0.7, 0.3], [0.1, -0.6]),
    ];
    let mut worst: f64 = 0.0;
    for t in [0.25, 0.5, 1.0] {
        for (x, y) in pts {
            let spec = spectral_kernel(&p, 24, 24, x, y, |_, lam| Complex64::new((-t * lam).exp(), 0.0));
            let closed = heat_mehler_kernel(t, x, y, &p, None);
            worst = worst.max((spec - closed).norm() / closed.norm());
        }
    }
    Ok((worst < 1e-5, format!("max pointwise relative error {worst:.3e} at K=L=24 (< 1e-5)")))
}

fn schrodinger() -> Outcome {
    let p = unit();
    let mut worst: f64 = 0.0;
    for t in [0.3, 0.7, 1.2] {
        let s = schrodinger_kernel_sup(t, &p)?;
        worst = worst.max((s.level_sum / s.closed_form - 1.0).abs());
    }
    let c = SpectralCoefficients::random(p, 8, 8, 40, &mut ChaCha8Rng::seed_from_u64(4));
    let flipped = schrodinger_apply(PI / p.b0, &c, FlowSign::Cauchy);
    let anti = flipped.iter().zip(c.iter()).map(|((_, a), (_, b))| (a + b).norm()).fold(0.0, f64::max);
    Ok((
        worst < 1e-3 && anti < 1e-12,
        format!("sup relative error {worst:.3e} (< 1e-3), anti-periodicity defect {anti:.3e} (< 1e-12)"),
    ))
}

fn subordination() -> Outcome {
    let mut real_worst: f64 = 0.0;
    for (x, y) in [(1.0, 1.0), (4.0, 2.0), (9.0, 0.5)] {
        let s = SubordinationSample { x_tilde: x, y: Complex64::new(y, 0.0) };
        real_worst = real_worst.max(subordination_residual(&s)?);
    }
    let mut complex_worst: f64 = 0.0;
    for x in [1.0, 4.0, 9.0] {
        let s = SubordinationSample { x_tilde: x, y: Complex64::new(0.1, -5.0) };
        complex_worst = complex_worst.max(subordination_residual(&s)?);
    }
    Ok((
        real_worst < 1e-8 && complex_worst < 1e-6,
        format!("real y residual {real_worst:.3e} (< 1e-8), y = 0.1-5i residual {complex_worst:.3e} (< 1e-6)"),
    ))
}

fn oscillatory_scaling() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, t) in [(4.0, 4.0), (16.0, 8.0)] {
        let base = oscillatory_i(a, t, t / 16.0)?;
        for j in [-2, 0, 2] {
            let (a2, t2) = (a * 2f64.powi(-j), t * 2f64.powi(j));
            let scaled = oscillatory_i(a2, t2, t2 / 16.0)? * 2f64.powf(j as f64 / 2.0);
            worst = worst.max((base - scaled).norm() / base.norm());
        }
    }
    Ok((worst < 1e-4, format!("max relative scaling defect {worst:.3e} (< 1e-4)")))
}

fn squaring() -> Outcome {
    let mut residual: f64 = 0.0;
    for mass in [0.0, 1.0, 2.5] {
        let p = FieldParams::new(1.0, mass)?;
        let table = LadderTable::closed_form(p, 6, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = SpinorCoefficients::new(
            SpectralCoefficients::random(p, 6, 8, 30, &mut rng),
            SpectralCoefficients::random(p, 6, 8, 30, &mut rng),
        )?;
        residual = residual.max(squaring_residual(&s, &table)?);
    }
    // sector matrices from the projected ladder, upper modes l <= 6 with their partners
    let mut eig_gap: f64 = 0.0;
    for mass in [0.0, 1.0, 2.5] {
        let p = FieldParams::new(1.0, mass)?;
        let table = LadderTable::from_basis(&basis(p, 4, 7, 256)?)?;
        for k in -3i64..=3 {
            let ups: Vec<ModeIndex> = (0..=6).map(|l| ModeIndex::new(k, l)).collect();
            let downs: Vec<ModeIndex> = ups.iter().filter_map(|u| table.minus(*u).target).collect();
            let n = ups.len() + downs.len();
            let mut mat = DMatrix::<Complex64>::zeros(n, n);
            for (col, idx) in ups.iter().chain(&downs).enumerate() {
                let mut s = SpinorCoefficients::zeros(p, 4, 7);
                if col < ups.len() {
                    s.upper[*idx] = Complex64::new(1.0, 0.0);
                } else {
                    s.lower[*idx] = Complex64::new(1.0, 0.0);
                }
                let ds = apply_dirac_truncated(&s, &table);
                for (row, jdx) in ups.iter().chain(&downs).enumerate() {
                    mat[(row, col)] = if row < ups.len() { ds.upper[*jdx] } else { ds.lower[*jdx] };
                }
            }
            let mut eig: Vec<f64> = mat.symmetric_eigenvalues().iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            let mut expect: Vec<f64> = Vec::new();
            for idx in &ups {
                let w = kg_frequency(*idx, &p, Spin::Up);
                expect.push(w);
                if table.minus(*idx).target.is_some() {
                    expect.push(-w);
                }
            }
            expect.sort_by(f64::total_cmp);
            for (a, b) in eig.iter().zip(&expect) {
                eig_gap = eig_gap.max((a - b).abs());
            }
        }
    }
    Ok((
        residual < 1e-6 && eig_gap < 1e-8,
        format!("squaring residual {residual:.3e} (< 1e-6), sector eigenvalue gap {eig_gap:.3e} (< 1e-8)"),
    ))
}

fn zero_modes() -> Outcome {
    let p = unit();
    let table = LadderTable::closed_form(p, 8, 8);
    let mut image: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for k in -8i64..=0 {
        let mut s = SpinorCoefficients::zeros(p, 8, 8);
        s.upper[ModeIndex::new(k, 0)] = Complex64::new(1.0, 0.0);
        image = image.max(apply_dirac(&s, &table)?.l2_norm());
        for i in 0..=20 {
            let t = i as f64 * 0.5;
            drift = drift.max(evolve_dirac(t, &s, &table, FlowSign::Cauchy)?.distance(&s));
        }
    }
    Ok((
        image < 1e-8 && drift < 1e-8,
        format!("max ||D f|| {image:.3e} (< 1e-8), max drift over [0, 10] {drift:.3e} (< 1e-8)"),
    ))
}

fn unitarity() -> Outcome {
    let p = FieldParams::new(1.0, 0.7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let c = SpectralCoefficients::random(p, 8, 8, 60, &mut rng);
    let s = SpinorCoefficients::new(
        SpectralCoefficients::random(p, 8, 8, 40, &mut rng),
        SpectralCoefficients::random(p, 8, 8, 40, &mut rng),
    )?;
    let table = LadderTable::closed_form(p, 8, 8);
    let (t1, t2) = (0.83, 2.41);
    let mut norm_defect: f64 = 0.0;
    let mut group_defect: f64 = 0.0;
    for t in [t1, t2, 17.0] {
        norm_defect = norm_defect.max((schrodinger_apply(t, &c, FlowSign::Cauchy).l2_norm() - c.l2_norm()).abs());
        for spin in [Spin::Up, Spin::Down] {
            norm_defect = norm_defect.max((halfwave_apply(t, &c, spin, FlowSign::Cauchy).l2_norm() - c.l2_norm()).abs());
        }
        norm_defect = norm_defect.max((evolve_dirac(t, &s, &table, FlowSign::Cauchy)?.l2_norm() - s.l2_norm()).abs());
    }
    group_defect = group_defect.max(max_gap(
        &schrodinger_apply(t1, &schrodinger_apply(t2, &c, FlowSign::Cauchy), FlowSign::Cauchy),
        &schrodinger_apply(t1 + t2, &c, FlowSign::Cauchy),
    ));
    for spin in [Spin::Up, Spin::Down] {
        group_defect = group_defect.max(max_gap(
            &halfwave_apply(t1, &halfwave_apply(t2, &c, spin, FlowSign::Cauchy), spin, FlowSign::Cauchy),
            &halfwave_apply(t1 + t2, &c, spin, FlowSign::Cauchy),
        ));
    }
    group_defect = group_defect.max(max_gap(
        &heat_apply(t1, &heat_apply(t2, &c, None), None),
        &heat_apply(t1 + t2, &c, None),
    ));
    let twice = evolve_dirac(t1, &evolve_dirac(t2, &s, &table, FlowSign::Cauchy)?, &table, FlowSign::Cauchy)?;
    group_defect = group_defect.max(twice.distance(&evolve_dirac(t1 + t2, &s, &table, FlowSign::Cauchy)?));
    Ok((
        norm_defect < 1e-10 && group_defect < 1e-12,
        format!("norm defect {norm_defect:.3e} (< 1e-10), composition defect {group_defect:.3e} (< 1e-12)"),
    ))
}

fn decay() -> Outcome {
    let scan = DecayScan::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for mass in [0.0, 1.0] {
        for spin in [Spin::Up, Spin::Down] {
            let p = FieldParams::new(1.0, mass)?;
            let report = decay_scan(&scan, &p, spin)?;
            let slope = report.fit.map_or(f64::NAN, |f| f.slope);
            let ratio_spread = spread(report.rows.iter().map(|r| r.ratio));
            let (xs, ys): (Vec<f64>, Vec<f64>) = report
                .rows
                .iter()
                .map(|r| (2f64.powi(r.j) * r.t, r.measured / 4f64.powi(r.j)))
                .filter(|(jt, _)| *jt >= 8.0 * (1.0 - 1e-12))
                .map(|(jt, m)| (jt.ln(), m.ln()))
                .unzip();
            let upper = fit_line(&xs, &ys)?.slope;
            pass &= (slope + 0.5).abs() <= 0.1 && ratio_spread < 10.0;
            parts.push(format!(
                "m={mass} {}: slope {slope:.3} on [4,64] ([8,64]: {upper:.3}), ratio spread {ratio_spread:.2}",
                spin.label()
            ));
        }
    }
    Ok((pass, format!("{} (target slope -0.5 +- 0.1, spread < 10)", parts.join("; "))))
}

fn bernstein() -> Outcome {
    let report = bernstein_scan(&[2, 3, 4, 5, 6], &[(1.0, f64::INFINITY), (2.0, f64::INFINITY)], &unit())?;
    let one = spread(report.rows.iter().filter(|r| r.q == 1.0).map(|r| r.ratio));
    let two = spread(report.rows.iter().filter(|r| r.q == 2.0).map(|r| r.ratio));
    Ok((
        one < 10.0 && two < 10.0,
        format!("(1,inf) ratio spread {one:.3}, (2,inf) ratio spread {two:.3} (< 10)"),
    ))
}

fn norms_and_square_function() -> Outcome {
    let p = unit();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let family: Vec<SpectralCoefficients> =
        (0..20).map(|_| SpectralCoefficients::random(p, 4, 6, 12, &mut rng)).collect();
    let mut worst: f64 = 0.0;
    for s in [0.0, 0.5, 1.0] {
        let report = norm_equivalence_scan(&family, s)?;
        worst = worst.max(spread(report.rows.iter().map(|r| r.ratio1)));
        worst = worst.max(spread(report.rows.iter().map(|r| r.ratio2)));
    }
    let b = basis(p, 4, 6, 256)?;
    let mut square: f64 = 0.0;
    let mut p2_band = (f64::INFINITY, f64::NEG_INFINITY);
    for exp in [2.0, 4.0] {
        let ratios = family
            .iter()
            .map(|c| Ok(square_function_check(&synthesize(c, &b)?, &b, exp)?.ratio))
            .collect::<Result<Vec<f64>>>()?;
        square = square.max(spread(ratios.iter().copied()));
        if exp == 2.0 {
            for r in &ratios {
                p2_band = (p2_band.0.min(r * r), p2_band.1.max(r * r));
            }
        }
    }
    Ok((
        worst < 10.0 && square < 10.0,
        format!(
            "norm ratio spread {worst:.3}, square-function ratio spread {square:.3} (< 10); p=2 squared ratios in [{:.3}, {:.3}]",
            p2_band.0, p2_band.1
        ),
    ))
}

fn strichartz() -> Outcome {
    let p = FieldParams::new(1.0, 1.0)?;
    let pair = AdmissiblePair::new(8.0, 4.0)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for flow in [StrichartzFlow::HalfwaveUp, StrichartzFlow::HalfwaveDown, StrichartzFlow::Dirac] {
        let report = strichartz_scan(pair, &[3, 4, 5], &[1.0], p, flow)?;
        let ratios: Vec<f64> = report.rows.iter().filter(|r| r.flow == flow.label()).map(|r| r.ratio).collect();
        let s = spread(ratios.iter().copied());
        pass &= s < 3.0;
        parts.push(format!("{} spread {s:.3}", flow.label()));
    }
    let unit_pair = AdmissiblePair::new(f64::INFINITY, 2.0)?;
    let mut exact: f64 = 0.0;
    for flow in [StrichartzFlow::HalfwaveUp, StrichartzFlow::Dirac] {
        let report = strichartz_scan(unit_pair, &[3, 4], &[1.0], p, flow)?;
        for r in report.rows.iter().filter(|r| r.flow == flow.label()) {
            exact = exact.max((r.ratio - 1.0).abs());
        }
    }
    let mut identity: f64 = 0.0;
    for (q, pp) in [(8.0, 4.0), (4.0, 8.0), (f64::INFINITY, 2.0), (6.0, 3.0), (12.0, 20.0)] {
        let lhs = keel_tao_exponent(1.5, 0.5, q, pp);
        identity = identity.max((lhs + (2.0 * (0.5 - 1.0 / pp) - 1.0 / q)).abs());
    }
    pass &= exact < 1e-10 && identity <= 1e-15;
    Ok((
        pass,
        format!(
            "(8,4): {} (< 3); (inf,2) |ratio - 1| {exact:.3e} (< 1e-10); exponent identity {identity:.1e}",
            parts.join(", ")
        ),
    ))
}

fn multiplicity() -> Outcome {
    let p = unit();
    let mut details = Vec::new();
    let mut pass = true;
    for level in [1.0, 3.0, 5.0, 7.0, 9.0] {
        let f = multiplicity_formula(level, &p, 8);
        let b = multiplicity_brute(level, &p, 8, 8);
        pass &= f == b;
        details.push(format!("{level}:{f}/{b}"));
    }
    Ok((pass, format!("formula/brute counts {}", details.join(" "))))
}

fn deficiency() -> Outcome {
    let v = deficiency_window_check();
    let pass = v.first_window == vec![0] && v.second_window == vec![-1] && v.common.is_empty();
    Ok((pass, format!("windows {:?}, {:?}, common {:?}", v.first_window, v.second_window, v.common)))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 15] = [
        ("eigen-residuals", eigen_residuals),
        ("orthonormality", orthonormality),
        ("heat kernel vs closed form", mehler),
        ("schrodinger dispersive constant", schrodinger),
        ("subordination identity", subordination),
        ("oscillatory integral scaling", oscillatory_scaling),
        ("squaring identity and sector spectrum", squaring),
        ("massless zero modes", zero_modes),
        ("unitarity and group law", unitarity),
        ("microlocal decay slope", decay),
        ("bernstein ratios", bernstein),
        ("norm equivalence and square function", norms_and_square_function),
        ("strichartz ratios", strichartz),
        ("multiplicity", multiplicity),
        ("deficiency windows", deficiency),
    ];
    let mut failures = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            n + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
