//! Line-based `key = value` run configuration.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use magdirac::estimates::{admissible_check, geomspace};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    HeatCheck,
    SchrodingerCheck,
    SubordinationCheck,
    DiracCheck,
    DecayScan,
    BernsteinScan,
    StrichartzScan,
    NormCheck,
    SquareCheck,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::Spectrum,
        Task::HeatCheck,
        Task::SchrodingerCheck,
        Task::SubordinationCheck,
        Task::DiracCheck,
        Task::DecayScan,
        Task::BernsteinScan,
        Task::StrichartzScan,
        Task::NormCheck,
        Task::SquareCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::HeatCheck => "heat-check",
            Task::SchrodingerCheck => "schrodinger-check",
            Task::SubordinationCheck => "subordination-check",
            Task::DiracCheck => "dirac-check",
            Task::DecayScan => "decay-scan",
            Task::BernsteinScan => "bernstein-scan",
            Task::StrichartzScan => "strichartz-scan",
            Task::NormCheck => "norm-check",
            Task::SquareCheck => "square-check",
        }
    }

    fn parse(s: &str) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinChoice {
    Up,
    Down,
    Both,
}

impl SpinChoice {
    fn name(self) -> &'static str {
        match self {
            SpinChoice::Up => "up",
            SpinChoice::Down => "down",
            SpinChoice::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowChoice {
    HalfwaveUp,
    HalfwaveDown,
    Dirac,
}

impl FlowChoice {
    pub fn name(self) -> &'static str {
        match self {
            FlowChoice::HalfwaveUp => "halfwave-up",
            FlowChoice::HalfwaveDown => "halfwave-down",
            FlowChoice::Dirac => "dirac",
        }
    }
}

/// A fully validated run description; task-dependent keys carry their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub b0: f64,
    pub mass: f64,
    pub radius: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub k_max: usize,
    pub l_max: usize,
    pub task: Task,
    pub js: Vec<i32>,
    pub times: Vec<f64>,
    pub scaled_times: Vec<f64>,
    pub t_finals: Vec<f64>,
    pub pairs: Vec<(f64, f64)>,
    pub spin: SpinChoice,
    pub flow: FlowChoice,
    pub s_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub distances: usize,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
}

const KEYS: [&str; 22] = [
    "B0", "m", "R", "Nr", "Ntheta", "K", "L", "task", "j", "t", "scaled_t", "T", "pairs", "spin", "flow", "s", "p",
    "samples", "seed", "distances", "out", "cache",
];

fn split_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn number(field: &str, raw: &str) -> Result<f64, ConfigError> {
    let v: f64 = match raw {
        "inf" | "infinity" => f64::INFINITY,
        _ => raw.parse().map_err(|_| ConfigError::invalid(field, format!("`{raw}` is not a number")))?,
    };
    if v.is_nan() {
        return Err(ConfigError::invalid(field, "NaN is not allowed"));
    }
    Ok(v)
}

fn finite(field: &str, raw: &str) -> Result<f64, ConfigError> {
    let v = number(field, raw)?;
    if !v.is_finite() {
        return Err(ConfigError::invalid(field, format!("`{raw}` is not finite")));
    }
    Ok(v)
}

fn count(field: &str, raw: &str) -> Result<usize, ConfigError> {
    let v: i64 = raw
        .parse()
        .map_err(|_| ConfigError::invalid(field, format!("`{raw}` is not an integer")))?;
    usize::try_from(v).map_err(|_| ConfigError::invalid(field, format!("must be non-negative, got {v}")))
}

fn reals(field: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    let v = split_list(raw).map(|x| finite(field, x)).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(ConfigError::invalid(field, "empty list"));
    }
    Ok(v)
}

fn positive_reals(field: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    let v = reals(field, raw)?;
    if let Some(bad) = v.iter().find(|x| **x <= 0.0) {
        return Err(ConfigError::invalid(field, format!("values must be positive, got {bad}")));
    }
    Ok(v)
}

/// `3, 4, 5` or an inclusive range `2..6`.
fn integers(field: &str, raw: &str) -> Result<Vec<i32>, ConfigError> {
    let parse = |s: &str| -> Result<i32, ConfigError> {
        s.trim()
            .parse()
            .map_err(|_| ConfigError::invalid(field, format!("`{s}` is not an integer")))
    };
    let v = if let Some((a, b)) = raw.split_once("..") {
        let (a, b) = (parse(a)?, parse(b)?);
        if a > b {
            return Err(ConfigError::invalid(field, format!("empty range {a}..{b}")));
        }
        (a..=b).collect()
    } else {
        split_list(raw).map(parse).collect::<Result<Vec<_>, _>>()?
    };
    if v.is_empty() {
        return Err(ConfigError::invalid(field, "empty list"));
    }
    if let Some(bad) = v.iter().find(|j| !(-4..=10).contains(*j)) {
        return Err(ConfigError::invalid(field, format!("dyadic index {bad} outside [-4, 10]")));
    }
    Ok(v)
}

/// `q:p` pairs separated by commas.
fn pairs(field: &str, raw: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    let v = split_list(raw)
        .map(|item| {
            let (q, p) = item
                .split_once(':')
                .ok_or_else(|| ConfigError::invalid(field, format!("`{item}` is not of the form q:p")))?;
            Ok((number(field, q.trim())?, number(field, p.trim())?))
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    if v.is_empty() {
        return Err(ConfigError::invalid(field, "empty list"));
    }
    Ok(v)
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

impl RunConfig {
    fn task_defaults(task: Task) -> RunConfig {
        let (js, pairs, flow) = match task {
            Task::BernsteinScan => (
                (2..=6).collect(),
                vec![(1.0, f64::INFINITY), (2.0, f64::INFINITY), (2.0, 2.0)],
                FlowChoice::Dirac,
            ),
            Task::StrichartzScan => (vec![3, 4, 5], vec![(8.0, 4.0), (f64::INFINITY, 2.0)], FlowChoice::Dirac),
            _ => (vec![3, 4, 5], vec![(8.0, 4.0)], FlowChoice::Dirac),
        };
        let times = match task {
            Task::HeatCheck => vec![0.25, 0.5, 1.0],
            _ => vec![0.3, 0.7, 1.2],
        };
        RunConfig {
            b0: 1.0,
            mass: 0.0,
            radius: 12.0,
            n_r: 512,
            n_theta: 64,
            k_max: 24,
            l_max: 24,
            task,
            js,
            times,
            scaled_times: geomspace(4.0, 64.0, 9),
            t_finals: vec![1.0],
            pairs,
            spin: SpinChoice::Both,
            flow,
            s_values: vec![0.0, 0.5, 1.0],
            p_values: vec![2.0, 4.0],
            samples: 20,
            seed: 1,
            distances: 6000,
            out: None,
            cache: None,
        }
    }

    /// Canonical rendering with every key; parsing it gives back the same config.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let opt = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let pairs: Vec<String> = self
            .pairs
            .iter()
            .map(|(q, p)| format!("{}:{}", fmt_exponent(*q), fmt_exponent(*p)))
            .collect();
        let lines = [
            ("task", self.task.name().to_string()),
            ("B0", self.b0.to_string()),
            ("m", self.mass.to_string()),
            ("R", self.radius.to_string()),
            ("Nr", self.n_r.to_string()),
            ("Ntheta", self.n_theta.to_string()),
            ("K", self.k_max.to_string()),
            ("L", self.l_max.to_string()),
            ("j", fmt_list(&self.js)),
            ("t", fmt_list(&self.times)),
            ("scaled_t", fmt_list(&self.scaled_times)),
            ("T", fmt_list(&self.t_finals)),
            ("pairs", pairs.join(", ")),
            ("spin", self.spin.name().to_string()),
            ("flow", self.flow.name().to_string()),
            ("s", fmt_list(&self.s_values)),
            ("p", fmt_list(&self.p_values)),
            ("samples", self.samples.to_string()),
            ("seed", self.seed.to_string()),
            ("distances", self.distances.to_string()),
            ("out", opt(&self.out)),
            ("cache", opt(&self.cache)),
        ];
        for (k, v) in lines {
            if v.is_empty() {
                continue;
            }
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    let mut seen = BTreeSet::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: "missing key before `=`".into(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::Parse {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                message: format!("missing value for `{key}`"),
            });
        }
        entries.push((line, key.to_string(), value.to_string()));
    }

    let task = match entries.iter().find(|(_, k, _)| k == "task") {
        Some((_, _, v)) => Task::parse(v).ok_or_else(|| {
            let names: Vec<&str> = Task::ALL.iter().map(|t| t.name()).collect();
            ConfigError::invalid("task", format!("`{v}` is not one of {}", names.join(", ")))
        })?,
        None => return Err(ConfigError::invalid("task", "missing")),
    };
    let mut c = RunConfig::task_defaults(task);
    for (_, key, value) in &entries {
        let v = value.as_str();
        let k = key.as_str();
        match k {
            "task" => {}
            "B0" => c.b0 = finite(k, v)?,
            "m" => c.mass = finite(k, v)?,
            "R" => c.radius = finite(k, v)?,
            "Nr" => c.n_r = count(k, v)?,
            "Ntheta" => c.n_theta = count(k, v)?,
            "K" => c.k_max = count(k, v)?,
            "L" => c.l_max = count(k, v)?,
            "j" => c.js = integers(k, v)?,
            "t" => c.times = positive_reals(k, v)?,
            "scaled_t" => c.scaled_times = positive_reals(k, v)?,
            "T" => c.t_finals = positive_reals(k, v)?,
            "pairs" => c.pairs = pairs(k, v)?,
            "spin" => {
                c.spin = match v {
                    "up" => SpinChoice::Up,
                    "down" => SpinChoice::Down,
                    "both" => SpinChoice::Both,
                    _ => return Err(ConfigError::invalid(k, format!("`{v}` is not up, down or both"))),
                }
            }
            "flow" => {
                c.flow = match v {
                    "halfwave-up" => FlowChoice::HalfwaveUp,
                    "halfwave-down" => FlowChoice::HalfwaveDown,
                    "dirac" => FlowChoice::Dirac,
                    _ => return Err(ConfigError::invalid(k, format!("`{v}` is not halfwave-up, halfwave-down or dirac"))),
                }
            }
            "s" => c.s_values = reals(k, v)?,
            "p" => c.p_values = reals(k, v)?,
            "samples" => c.samples = count(k, v)?,
            "seed" => {
                c.seed = v
                    .parse()
                    .map_err(|_| ConfigError::invalid(k, format!("`{v}` is not a non-negative integer")))?
            }
            "distances" => c.distances = count(k, v)?,
            "out" => c.out = Some(PathBuf::from(v)),
            "cache" => c.cache = Some(PathBuf::from(v)),
            _ => unreachable!("key list and match arms agree"),
        }
    }
    validate(&c)?;
    Ok(c)
}

fn validate(c: &RunConfig) -> Result<(), ConfigError> {
    if !(c.b0 > 0.0) {
        return Err(ConfigError::invalid("B0", format!("must be positive, got {}", c.b0)));
    }
    if c.mass < 0.0 {
        return Err(ConfigError::invalid("m", format!("must be non-negative, got {}", c.mass)));
    }
    if !(c.radius > 0.0) {
        return Err(ConfigError::invalid("R", format!("must be positive, got {}", c.radius)));
    }
    if c.n_r == 0 || c.n_r % 16 != 0 {
        return Err(ConfigError::invalid("Nr", format!("must be a positive multiple of 16, got {}", c.n_r)));
    }
    if c.n_theta < 8 || !c.n_theta.is_power_of_two() {
        return Err(ConfigError::invalid("Ntheta", format!("must be a power of two >= 8, got {}", c.n_theta)));
    }
    if c.n_theta < 2 * c.k_max + 1 {
        return Err(ConfigError::invalid(
            "Ntheta",
            format!("{} angular nodes cannot resolve K = {}", c.n_theta, c.k_max),
        ));
    }
    if c.k_max > 256 || c.l_max > 4096 {
        return Err(ConfigError::invalid("K", "truncation above K = 256 or L = 4096"));
    }
    for &(q, p) in &c.pairs {
        if !(q >= 1.0 && p >= 1.0) {
            return Err(ConfigError::invalid("pairs", format!("exponents must be at least 1, got {q}:{p}")));
        }
        if c.task == Task::BernsteinScan && q > p {
            return Err(ConfigError::invalid("pairs", format!("need q <= p, got {q}:{p}")));
        }
    }
    if c.task == Task::StrichartzScan {
        for &(q, p) in &c.pairs {
            if !admissible_check(q, p).0 {
                return Err(ConfigError::invalid("pairs", format!("{q}:{p} is not admissible")));
            }
        }
    }
    if let Some(s) = c.s_values.iter().find(|s| !(0.0..=2.0).contains(*s)) {
        return Err(ConfigError::invalid("s", format!("must lie in [0, 2], got {s}")));
    }
    if let Some(p) = c.p_values.iter().find(|p| !(**p > 1.0)) {
        return Err(ConfigError::invalid("p", format!("must exceed 1, got {p}")));
    }
    if c.samples == 0 {
        return Err(ConfigError::invalid("samples", "must be at least 1"));
    }
    if c.distances < 2 {
        return Err(ConfigError::invalid("distances", "must be at least 2"));
    }
    Ok(())
}
