//! Task execution, basis caching and artifact writing.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use magdirac::dirac::{apply_dirac, deficiency_window_check, evolve_dirac, squaring_residual, LadderTable, SpinorCoefficients};
use magdirac::estimates::{
    bernstein_scan, decay_scan, norm_equivalence_scan, spread, square_function_check, strichartz_scan, AdmissiblePair,
    DecayScan, EstimateReport, ReportRow, StrichartzFlow,
};
use magdirac::fields::{synthesize, SpectralCoefficients};
use magdirac::grid::PolarGrid;
use magdirac::propagators::{
    heat_mehler_kernel, schrodinger_kernel_sup, spectral_kernel, subordination_residual, FlowSign, SubordinationSample,
};
use magdirac::spectrum::{FieldParams, ModeBasis, ModeIndex, Spin};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, FlowChoice, RunConfig, SpinChoice, Task};

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "MAGDIRAC_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] magdirac::Error),
    #[error("numerical check failed: {0}")]
    Check(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(magdirac::Error::Io(_) | magdirac::Error::Csv(_)) | RunError::Io { .. } => 4,
            RunError::Numeric(_) | RunError::Check(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            RunError::Config(ConfigError::Parse { .. }) => "parse",
            RunError::Config(ConfigError::Validation { .. }) => "validation",
            RunError::Numeric(magdirac::Error::Io(_) | magdirac::Error::Csv(_)) | RunError::Io { .. } => "io",
            RunError::Numeric(_) => "numerical",
            RunError::Check(_) => "check",
        }
    }

    /// One-line JSON record describing the failure.
    pub fn record(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "status": "error",
            "kind": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        });
        match self {
            RunError::Config(ConfigError::Parse { line, .. }) => v["line"] = (*line).into(),
            RunError::Config(ConfigError::Validation { field, .. }) => v["field"] = field.clone().into(),
            RunError::Io { path, .. } => v["path"] = path.display().to_string().into(),
            _ => {}
        }
        v
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Command-line overrides of a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Unused,
    Hit,
    Built,
    Rebuilt,
}

impl CacheStatus {
    pub fn label(self) -> &'static str {
        match self {
            CacheStatus::Unused => "unused",
            CacheStatus::Hit => "hit",
            CacheStatus::Built => "built",
            CacheStatus::Rebuilt => "rebuilt",
        }
    }
}

/// Files written by a run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub cache: CacheStatus,
}

struct TaskOutput {
    csv: Vec<u8>,
    meta: Vec<(String, String)>,
    failures: Vec<String>,
}

impl TaskOutput {
    fn from_report<R: ReportRow>(report: &EstimateReport<R>) -> Result<Self, RunError> {
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        let mut meta_text = Vec::new();
        report.write_metadata(&mut meta_text)?;
        let meta = String::from_utf8_lossy(&meta_text)
            .lines()
            .filter_map(|l| l.split_once(" = ").map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        Ok(TaskOutput {
            csv,
            meta,
            failures: Vec::new(),
        })
    }
}

/// Plain table row for the check tasks.
macro_rules! check_row {
    ($name:ident { $($field:ident : $ty:ty => $col:literal),* $(,)? }) => {
        struct $name { $($field: $ty),* }
        impl ReportRow for $name {
            const HEADER: &'static [&'static str] = &[$($col),*];
            fn cells(&self) -> Vec<String> {
                vec![$(self.$field.to_string()),*]
            }
        }
    };
}

check_row!(SpectrumRow { k: i64 => "k", ell: usize => "ell", lambda: f64 => "lambda", norm: f64 => "norm" });
check_row!(HeatRow {
    t: f64 => "t", x1: f64 => "x1", x2: f64 => "x2", y1: f64 => "y1", y2: f64 => "y2",
    spectral_re: f64 => "spectral_re", spectral_im: f64 => "spectral_im",
    mehler_re: f64 => "mehler_re", mehler_im: f64 => "mehler_im", rel_error: f64 => "rel_error",
});
check_row!(SchrodingerRow { t: f64 => "t", closed_form: f64 => "closed_form", level_sum: f64 => "level_sum", rel_error: f64 => "rel_error" });
check_row!(SubordinationRow { x_tilde: f64 => "x_tilde", y_re: f64 => "y_re", y_im: f64 => "y_im", residual: f64 => "residual" });
check_row!(DiracRow { check: String => "check", value: f64 => "value", tolerance: f64 => "tolerance", pass: bool => "pass" });
check_row!(SquareRow { id: usize => "id", p: f64 => "p", lhs: f64 => "lhs", rhs: f64 => "rhs", ratio: f64 => "ratio" });

fn cache_files(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("modes.txt"), dir.join("profiles.txt"))
}

fn write_atomic(path: &Path, body: &[u8]) -> Result<(), RunError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, body).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Loads the basis from `dir` when its metadata matches the config, else builds and stores it.
pub fn load_or_build_basis(cfg: &RunConfig, dir: &Path) -> Result<(ModeBasis, CacheStatus), RunError> {
    let params = FieldParams::new(cfg.b0, cfg.mass)?;
    let grid = PolarGrid::new(cfg.radius, cfg.n_r, cfg.n_theta)?;
    let (modes_path, profiles_path) = cache_files(dir);
    let mut status = CacheStatus::Built;
    if modes_path.exists() && profiles_path.exists() {
        let modes = BufReader::new(File::open(&modes_path).map_err(io_err(&modes_path))?);
        let profiles = BufReader::new(File::open(&profiles_path).map_err(io_err(&profiles_path))?);
        match ModeBasis::read_cache(modes, profiles, params, &grid, cfg.k_max, cfg.l_max) {
            Ok(Some(b)) => return Ok((b, CacheStatus::Hit)),
            Ok(None) | Err(magdirac::Error::Parse(_)) => status = CacheStatus::Rebuilt,
            Err(e) => return Err(e.into()),
        }
    }
    let basis = ModeBasis::build(params, cfg.k_max, cfg.l_max, &grid)?;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut modes = Vec::new();
    basis.write_modes(&mut modes)?;
    let mut profiles = Vec::new();
    basis.write_profiles(&mut profiles)?;
    write_atomic(&profiles_path, &profiles)?;
    write_atomic(&modes_path, &modes)?;
    Ok((basis, status))
}

fn params(cfg: &RunConfig) -> Result<FieldParams, RunError> {
    Ok(FieldParams::new(cfg.b0, cfg.mass)?)
}

fn random_family(cfg: &RunConfig, p: FieldParams) -> Vec<SpectralCoefficients> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nonzero = 12.min((2 * cfg.k_max + 1) * (cfg.l_max + 1));
    (0..cfg.samples)
        .map(|_| SpectralCoefficients::random(p, cfg.k_max, cfg.l_max, nonzero, &mut rng))
        .collect()
}

fn spectrum_task(basis: &ModeBasis) -> Result<TaskOutput, RunError> {
    let rows = basis
        .modes()
        .map(|idx| SpectrumRow {
            k: idx.k,
            ell: idx.ell,
            lambda: basis.eigenvalue(idx),
            norm: basis.norm_constant(idx),
        })
        .collect();
    TaskOutput::from_report(&EstimateReport::new(rows))
}

const HEAT_POINTS: [([f64; 2], [f64; 2]); 4] = [
    ([0.2, 0.1], [-0.3, 0.4]),
    ([0.5, -0.5], [0.5, -0.5]),
    ([0.0, 0.0], [0.6, 0.2]),
    ([-0.7, 0.3], [0.1, -0.6]),
];
const HEAT_TOL: f64 = 1e-5;

fn heat_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let p = params(cfg)?;
    let mut rows = Vec::new();
    for &t in &cfg.times {
        for (x, y) in HEAT_POINTS {
            let spec = spectral_kernel(&p, cfg.k_max, cfg.l_max, x, y, |_, lam| Complex64::new((-t * lam).exp(), 0.0));
            let mehler = heat_mehler_kernel(t, x, y, &p, None);
            rows.push(HeatRow {
                t,
                x1: x[0],
                x2: x[1],
                y1: y[0],
                y2: y[1],
                spectral_re: spec.re,
                spectral_im: spec.im,
                mehler_re: mehler.re,
                mehler_im: mehler.im,
                rel_error: (spec - mehler).norm() / mehler.norm(),
            });
        }
    }
    let failures = rows
        .iter()
        .filter(|r| !(r.rel_error < HEAT_TOL))
        .map(|r| format!("heat kernel error {:e} at t={} exceeds {HEAT_TOL:e}", r.rel_error, r.t))
        .collect();
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.failures = failures;
    out.meta.push(("tolerance".into(), HEAT_TOL.to_string()));
    Ok(out)
}

const SCHRODINGER_TOL: f64 = 1e-3;

fn schrodinger_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let p = params(cfg)?;
    let rows = cfg
        .times
        .iter()
        .map(|&t| {
            let s = schrodinger_kernel_sup(t, &p)?;
            Ok(SchrodingerRow {
                t,
                closed_form: s.closed_form,
                level_sum: s.level_sum,
                rel_error: (s.level_sum / s.closed_form - 1.0).abs(),
            })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let failures = rows
        .iter()
        .filter(|r| !(r.rel_error < SCHRODINGER_TOL))
        .map(|r| format!("dispersive constant error {:e} at t={}", r.rel_error, r.t))
        .collect();
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.failures = failures;
    out.meta.push(("tolerance".into(), SCHRODINGER_TOL.to_string()));
    Ok(out)
}

fn subordination_task() -> Result<TaskOutput, RunError> {
    let samples = [
        (1.0, Complex64::new(1.0, 0.0)),
        (4.0, Complex64::new(2.0, 0.0)),
        (9.0, Complex64::new(0.5, 0.0)),
        (1.0, Complex64::new(0.1, -5.0)),
        (9.0, Complex64::new(0.1, -5.0)),
    ];
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (x, y) in samples {
        let residual = subordination_residual(&SubordinationSample { x_tilde: x, y })?;
        let tol = if y.im == 0.0 { 1e-8 } else { 1e-6 };
        if !(residual < tol) {
            failures.push(format!("subordination residual {residual:e} at x={x}, y={y}"));
        }
        rows.push(SubordinationRow {
            x_tilde: x,
            y_re: y.re,
            y_im: y.im,
            residual,
        });
    }
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.failures = failures;
    Ok(out)
}

fn dirac_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let p = params(cfg)?;
    let table = LadderTable::closed_form(p, cfg.k_max, cfg.l_max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nonzero = 40.min((2 * cfg.k_max + 1) * (cfg.l_max + 1));
    let s = SpinorCoefficients::new(
        SpectralCoefficients::random(p, cfg.k_max, cfg.l_max, nonzero, &mut rng),
        SpectralCoefficients::random(p, cfg.k_max, cfg.l_max, nonzero, &mut rng),
    )?;
    let mut rows = Vec::new();
    let mut push = |check: &str, value: f64, tolerance: f64| {
        rows.push(DiracRow {
            check: check.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        })
    };
    push("squaring_residual", squaring_residual(&s, &table)?, 1e-6);

    // lowest-level upper modes: D f = m f, so the flow is a pure phase
    let mut eigen: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for k in -(cfg.k_max as i64)..=0 {
        let mut f = SpinorCoefficients::zeros(p, cfg.k_max, cfg.l_max);
        f.upper[ModeIndex::new(k, 0)] = Complex64::new(1.0, 0.0);
        let mut df = apply_dirac(&f, &table)?;
        df.add_scaled(Complex64::new(-p.mass, 0.0), &f)?;
        eigen = eigen.max(df.l2_norm());
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            let mut expect = f.clone();
            expect.scale(FlowSign::Cauchy.phase(t, p.mass));
            drift = drift.max(evolve_dirac(t, &f, &table, FlowSign::Cauchy)?.distance(&expect));
        }
    }
    push("lowest_level_eigenrelation", eigen, 1e-8);
    push("lowest_level_flow", drift, 1e-8);

    let (t1, t2) = (0.83, 2.41);
    let mut norm_defect: f64 = 0.0;
    for t in [t1, t2, t1 + t2] {
        norm_defect = norm_defect.max((evolve_dirac(t, &s, &table, FlowSign::Cauchy)?.l2_norm() - s.l2_norm()).abs());
    }
    push("norm_conservation", norm_defect, 1e-10);
    let twice = evolve_dirac(t1, &evolve_dirac(t2, &s, &table, FlowSign::Cauchy)?, &table, FlowSign::Cauchy)?;
    push(
        "group_law",
        twice.distance(&evolve_dirac(t1 + t2, &s, &table, FlowSign::Cauchy)?),
        1e-12,
    );
    let verdict = deficiency_window_check();
    let windows_ok = verdict.first_window == [0] && verdict.second_window == [-1] && verdict.common.is_empty();
    push("deficiency_windows", if windows_ok { 0.0 } else { 1.0 }, 0.0);

    let failures = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} = {:e} exceeds {:e}", r.check, r.value, r.tolerance))
        .collect();
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.failures = failures;
    Ok(out)
}

fn decay_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let p = params(cfg)?;
    let scan = DecayScan {
        js: cfg.js.clone(),
        scaled_times: cfg.scaled_times.clone(),
        distances: cfg.distances,
        ..DecayScan::default()
    };
    let spins = match cfg.spin {
        SpinChoice::Up => vec![Spin::Up],
        SpinChoice::Down => vec![Spin::Down],
        SpinChoice::Both => vec![Spin::Up, Spin::Down],
    };
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for spin in spins {
        let report = decay_scan(&scan, &p, spin)?;
        if let Some(fit) = report.fit {
            meta.push((format!("fit_slope_{}", spin.label()), fit.slope.to_string()));
            meta.push((format!("fit_intercept_{}", spin.label()), fit.intercept.to_string()));
            meta.push((format!("fit_residual_{}", spin.label()), fit.residual.to_string()));
        }
        meta.push((
            format!("ratio_spread_{}", spin.label()),
            spread(report.rows.iter().map(|r| r.ratio)).to_string(),
        ));
        for (k, v) in &report.metadata {
            if k != "spin" && !meta.iter().any(|(m, _)| m == k) {
                meta.push((k.clone(), v.clone()));
            }
        }
        rows.extend(report.rows);
    }
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.meta = meta;
    Ok(out)
}

fn bernstein_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let report = bernstein_scan(&cfg.js, &cfg.pairs, &params(cfg)?)?;
    TaskOutput::from_report(&report)
}

fn strichartz_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let p = params(cfg)?;
    let flow = match cfg.flow {
        FlowChoice::HalfwaveUp => StrichartzFlow::HalfwaveUp,
        FlowChoice::HalfwaveDown => StrichartzFlow::HalfwaveDown,
        FlowChoice::Dirac => StrichartzFlow::Dirac,
    };
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for &(q, pp) in &cfg.pairs {
        let report = strichartz_scan(AdmissiblePair::new(q, pp)?, &cfg.js, &cfg.t_finals, p, flow)?;
        for (k, v) in report.metadata {
            if !meta.iter().any(|(m, _): &(String, String)| *m == k) {
                meta.push((k, v));
            }
        }
        rows.extend(report.rows);
    }
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.meta = meta;
    Ok(out)
}

fn norm_task(cfg: &RunConfig) -> Result<TaskOutput, RunError> {
    let family = random_family(cfg, params(cfg)?);
    let mut rows = Vec::new();
    for &s in &cfg.s_values {
        rows.extend(norm_equivalence_scan(&family, s)?.rows);
    }
    let mut out = TaskOutput::from_report(&EstimateReport::new(rows))?;
    out.meta.push(("samples".into(), cfg.samples.to_string()));
    Ok(out)
}

fn square_task(cfg: &RunConfig, basis: &ModeBasis) -> Result<TaskOutput, RunError> {
    let family = random_family(cfg, *basis.params());
    let mut rows = Vec::new();
    for &p in &cfg.p_values {
        for (id, c) in family.iter().enumerate() {
            let check = square_function_check(&synthesize(c, basis)?, basis, p)?;
            rows.push(SquareRow {
                id,
                p,
                lhs: check.lhs,
                rhs: check.rhs,
                ratio: check.ratio,
            });
        }
    }
    TaskOutput::from_report(&EstimateReport::new(rows))
}

fn resolve_cache(cfg: &RunConfig, out_dir: &Path) -> PathBuf {
    cfg.cache
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
        .unwrap_or_else(|| out_dir.join("cache"))
}

/// Runs a validated config and writes `<task>.csv` and `<task>.meta` to the output directory.
pub fn run(mut cfg: RunConfig, overrides: &Overrides) -> Result<RunSummary, RunError> {
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if overrides.out.is_some() {
        cfg.out = overrides.out.clone();
    }
    if overrides.cache.is_some() {
        cfg.cache = overrides.cache.clone();
    }
    let out_dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let threads = overrides.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| RunError::Check(format!("cannot start {threads} worker threads: {e}")))?;
    let start = Instant::now();
    let needs_basis = matches!(cfg.task, Task::Spectrum | Task::SquareCheck);
    let cache_dir = resolve_cache(&cfg, &out_dir);

    let (output, cache) = pool.install(|| -> Result<(TaskOutput, CacheStatus), RunError> {
        let (basis, status) = if needs_basis {
            let (b, s) = load_or_build_basis(&cfg, &cache_dir)?;
            (Some(b), s)
        } else {
            (None, CacheStatus::Unused)
        };
        let output = match cfg.task {
            Task::Spectrum => spectrum_task(basis.as_ref().expect("basis built"))?,
            Task::HeatCheck => heat_task(&cfg)?,
            Task::SchrodingerCheck => schrodinger_task(&cfg)?,
            Task::SubordinationCheck => subordination_task()?,
            Task::DiracCheck => dirac_task(&cfg)?,
            Task::DecayScan => decay_task(&cfg)?,
            Task::BernsteinScan => bernstein_task(&cfg)?,
            Task::StrichartzScan => strichartz_task(&cfg)?,
            Task::NormCheck => norm_task(&cfg)?,
            Task::SquareCheck => square_task(&cfg, basis.as_ref().expect("basis built"))?,
        };
        Ok((output, status))
    })?;

    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let csv_path = out_dir.join(format!("{}.csv", cfg.task.name()));
    let meta_path = out_dir.join(format!("{}.meta", cfg.task.name()));
    write_atomic(&csv_path, &output.csv)?;

    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut meta = format!(
        "# run\nversion = {}\ntimestamp = {stamp}\nelapsed_s = {:.3}\nthreads = {}\ncache_status = {}\n",
        env!("CARGO_PKG_VERSION"),
        start.elapsed().as_secs_f64(),
        pool.current_num_threads(),
        cache.label()
    );
    if needs_basis {
        meta += &format!("cache_dir = {}\n", cache_dir.display());
    }
    meta += "# config\n";
    meta += &cfg.render();
    meta += "# report\n";
    for (k, v) in &output.meta {
        meta += &format!("{k} = {v}\n");
    }
    meta += &format!("checks_failed = {}\n", output.failures.len());
    write_atomic(&meta_path, meta.as_bytes())?;

    if !output.failures.is_empty() {
        return Err(RunError::Check(output.failures.join("; ")));
    }
    Ok(RunSummary {
        csv: csv_path,
        metadata: meta_path,
        cache,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use std::f64::consts::PI;

    #[test]
    fn exit_codes() {
        let cfg_err = RunError::Config(ConfigError::Parse {
            line: 3,
            message: "x".into(),
        });
        assert_eq!(cfg_err.exit_code(), 2);
        assert_eq!(cfg_err.record()["line"], 3);
        assert_eq!(RunError::Check("x".into()).exit_code(), 3);
        assert_eq!(RunError::Numeric(magdirac::Error::ResonantTime { t: PI }).exit_code(), 3);
        let io = RunError::Numeric(magdirac::Error::Io(std::io::Error::other("x")));
        assert_eq!(io.exit_code(), 4);
        assert_eq!(io.record()["kind"], "io");
    }

    #[test]
    fn cache_is_reused_and_rebuilt_on_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("task = spectrum\nR = 10\nNr = 64\nNtheta = 16\nK = 3\nL = 3\n").unwrap();
        let (a, s) = load_or_build_basis(&cfg, dir.path()).unwrap();
        assert_eq!(s, CacheStatus::Built);
        let (b, s) = load_or_build_basis(&cfg, dir.path()).unwrap();
        assert_eq!(s, CacheStatus::Hit);
        for idx in a.modes() {
            assert_eq!(a.profile(idx), b.profile(idx));
            assert_eq!(a.norm_constant(idx), b.norm_constant(idx));
        }
        let other = parse_config("task = spectrum\nR = 10\nNr = 64\nNtheta = 16\nK = 3\nL = 4\n").unwrap();
        let (_, s) = load_or_build_basis(&other, dir.path()).unwrap();
        assert_eq!(s, CacheStatus::Rebuilt);
        let massive = parse_config("task = spectrum\nR = 10\nNr = 64\nNtheta = 16\nK = 3\nL = 4\nm = 1\n").unwrap();
        let (_, s) = load_or_build_basis(&massive, dir.path()).unwrap();
        assert_eq!(s, CacheStatus::Rebuilt);
    }
}
