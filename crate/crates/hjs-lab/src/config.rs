//! Flat `key = value` scenario files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Lists are comma separated and may be wrapped in brackets. Keys are case
//! sensitive (`L` and `N` are upper case).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    /// The n-th `--set` override (1-based).
    Override(usize),
    /// Past the last line of the file.
    End(usize),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override(n) => write!(f, "--set #{n}"),
            Origin::End(n) => write!(f, "line {n} (end of input)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: {message}")]
    At { origin: Origin, message: String },
}

impl ConfigError {
    fn at(origin: Origin, message: impl Into<String>) -> Self {
        ConfigError::At { origin, message: message.into() }
    }

    pub fn origin(&self) -> Origin {
        match self {
            ConfigError::At { origin, .. } => *origin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FreePacket,
    HarmonicBenchmark,
    Quartic,
    KappaSweep,
    ThetaInterference,
    EquivalenceCheck,
    AdmissibilitySuite,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::FreePacket,
        Scenario::HarmonicBenchmark,
        Scenario::Quartic,
        Scenario::KappaSweep,
        Scenario::ThetaInterference,
        Scenario::EquivalenceCheck,
        Scenario::AdmissibilitySuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FreePacket => "free_packet",
            Scenario::HarmonicBenchmark => "harmonic_benchmark",
            Scenario::Quartic => "quartic",
            Scenario::KappaSweep => "kappa_sweep",
            Scenario::ThetaInterference => "theta_interference",
            Scenario::EquivalenceCheck => "equivalence_check",
            Scenario::AdmissibilitySuite => "admissibility_suite",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Scenario::FreePacket => "free Gaussian packet against its closed-form spreading",
            Scenario::HarmonicBenchmark => "modified Gaussian in a harmonic trap against closed-form moments",
            Scenario::Quartic => "benchmark state in a quartic potential, no oracle",
            Scenario::KappaSweep => "harmonic benchmark over several kappa, one subdirectory each",
            Scenario::ThetaInterference => "Born-density modulation of two packets at small theta",
            Scenario::EquivalenceCheck => "Madelung against linear evolution from the same data",
            Scenario::AdmissibilitySuite => "embedding candidates against the admissibility condition",
        }
    }

    fn default_t_final(self) -> f64 {
        match self {
            Scenario::FreePacket => 2.0,
            Scenario::EquivalenceCheck => std::f64::consts::PI,
            _ => std::f64::consts::TAU,
        }
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (see `hjs-lab list-scenarios`)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Linear,
    Madelung,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub mean_abs: f64,
    pub var_rel: f64,
    pub norm: f64,
    pub sweep_mean: f64,
    pub equivalence: f64,
    pub linearity: f64,
    pub admissible: f64,
    pub inadmissible: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            mean_abs: 1e-5,
            var_rel: 1e-3,
            norm: 1e-8,
            sweep_mean: 1e-6,
            equivalence: 1e-3,
            linearity: 1e-2,
            admissible: 1e-10,
            inadmissible: 0.1,
        }
    }
}

/// A validated scenario with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub outdir: PathBuf,
    pub solver: Solver,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n_points: usize,
    pub dt: f64,
    pub t_final: f64,
    pub samples: usize,
    pub sample_every: Option<usize>,
    pub kappa_re: f64,
    pub kappa_im: f64,
    pub mass: f64,
    pub omega: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub p0: f64,
    pub q0: f64,
    pub width: f64,
    pub separation: f64,
    pub node_floor: f64,
    pub quantum_term: bool,
    pub kappa_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub snapshots: usize,
    pub tolerances: Tolerances,
}

pub const KEYS: &[&str] = &[
    "scenario",
    "outdir",
    "solver",
    "L",
    "N",
    "dt",
    "t_final",
    "samples",
    "sample_every",
    "kappa_re",
    "kappa_im",
    "mass",
    "omega",
    "lambda",
    "epsilon",
    "sigma",
    "p0",
    "q0",
    "width",
    "separation",
    "node_floor",
    "quantum_term",
    "kappa_values",
    "theta_values",
    "r_min",
    "r_max",
    "snapshots",
    "tol_mean_abs",
    "tol_var_rel",
    "tol_norm",
    "tol_sweep_mean",
    "tol_equivalence",
    "tol_linearity",
    "tol_admissible",
    "tol_inadmissible",
];

type Entries = BTreeMap<String, (String, Origin)>;

fn split_assignment(raw: &str, origin: Origin) -> Result<Option<(String, String)>, ConfigError> {
    let line = raw.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (key, value) = line
        .split_once('=')
        .ok_or_else(|| ConfigError::at(origin, format!("expected `key = value`, found `{line}`")))?;
    let (key, value) = (key.trim(), value.trim());
    if !KEYS.contains(&key) {
        return Err(ConfigError::at(origin, format!("unknown key `{key}`")));
    }
    if value.is_empty() {
        return Err(ConfigError::at(origin, format!("empty value for `{key}`")));
    }
    Ok(Some((key.to_string(), value.to_string())))
}

/// Parses a config file and applies `--set key=value` overrides on top.
/// `outdir`, when given, replaces the file's `outdir` and makes it optional there.
pub fn parse_config(text: &str, overrides: &[String], outdir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
    let mut entries = Entries::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        let origin = Origin::Line(i + 1);
        if let Some((key, value)) = split_assignment(raw, origin)? {
            if let Some((_, Origin::Line(first))) = entries.get(&key) {
                return Err(ConfigError::at(origin, format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key, (value, origin));
        }
    }
    for (i, raw) in overrides.iter().enumerate() {
        let origin = Origin::Override(i + 1);
        match split_assignment(raw, origin)? {
            Some((key, value)) => {
                entries.insert(key, (value, origin));
            }
            None => return Err(ConfigError::at(origin, "empty override")),
        }
    }
    if let Some(dir) = outdir {
        entries.insert("outdir".into(), (dir.display().to_string(), Origin::Override(overrides.len() + 1)));
    }
    build(&entries, Origin::End(last + 1))
}

struct Reader<'a> {
    entries: &'a Entries,
    end: Origin,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Option<(&str, Origin)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), *o))
    }

    fn origin(&self, key: &str) -> Origin {
        self.raw(key).map(|(_, o)| o).unwrap_or(self.end)
    }

    fn required(&self, key: &str) -> Result<(&str, Origin), ConfigError> {
        self.raw(key).ok_or_else(|| ConfigError::at(self.end, format!("missing required key `{key}`")))
    }

    fn parsed<V: FromStr>(&self, key: &str, what: &str) -> Result<Option<V>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, origin)) => v
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::at(origin, format!("`{key}`: cannot parse `{v}` as {what}"))),
        }
    }

    fn float(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.parsed::<f64>(key, "a number")?.unwrap_or(default);
        if !v.is_finite() {
            return Err(ConfigError::at(self.origin(key), format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.float(key, default)?;
        if v <= 0.0 {
            return Err(ConfigError::at(self.origin(key), format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.parsed::<usize>(key, "a nonnegative integer")?.unwrap_or(default))
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        let Some((raw, origin)) = self.raw(key) else {
            return Ok(default.to_vec());
        };
        let inner = raw.trim().trim_start_matches('[').trim_end_matches(']');
        let values = inner
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| ConfigError::at(origin, format!("`{key}`: cannot parse `{s}` as a finite number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(values)
    }

    fn fail(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::at(self.origin(key), message)
    }
}

fn build(entries: &Entries, end: Origin) -> Result<ScenarioConfig, ConfigError> {
    let rd = Reader { entries, end };
    let (name, origin) = rd.required("scenario")?;
    let scenario: Scenario = name.parse().map_err(|e: String| ConfigError::at(origin, e))?;
    let outdir = PathBuf::from(rd.required("outdir")?.0);
    let solver = match rd.raw("solver") {
        None | Some(("linear", _)) => Solver::Linear,
        Some(("madelung", _)) => Solver::Madelung,
        Some((other, origin)) => {
            return Err(ConfigError::at(origin, format!("`solver` must be `linear` or `madelung`, got `{other}`")))
        }
    };
    let quantum_term = match rd.raw("quantum_term") {
        None | Some(("true", _)) => true,
        Some(("false", _)) => false,
        Some((other, origin)) => {
            return Err(ConfigError::at(origin, format!("`quantum_term` must be `true` or `false`, got `{other}`")))
        }
    };

    let default_l = if scenario == Scenario::KappaSweep { 30.0 } else { 20.0 };
    let default_dt = if scenario == Scenario::EquivalenceCheck { 2e-4 } else { 1e-3 };
    let n_points = rd.count("N", 1024)?;
    if n_points < 16 || !n_points.is_power_of_two() {
        return Err(rd.fail("N", format!("`N` must be a power of two >= 16, got {n_points}")));
    }
    let samples = rd.count("samples", 64)?;
    if samples < 2 {
        return Err(rd.fail("samples", "`samples` must be at least 2"));
    }
    let sample_every = rd.parsed::<usize>("sample_every", "a positive integer")?;
    if sample_every == Some(0) {
        return Err(rd.fail("sample_every", "`sample_every` must be positive"));
    }
    if sample_every.is_some() && rd.raw("samples").is_some() {
        return Err(rd.fail("sample_every", "set either `samples` or `sample_every`, not both"));
    }

    let defaults = Tolerances::default();
    let tolerances = Tolerances {
        mean_abs: rd.positive("tol_mean_abs", defaults.mean_abs)?,
        var_rel: rd.positive("tol_var_rel", defaults.var_rel)?,
        norm: rd.positive("tol_norm", defaults.norm)?,
        sweep_mean: rd.positive("tol_sweep_mean", defaults.sweep_mean)?,
        equivalence: rd.positive("tol_equivalence", defaults.equivalence)?,
        linearity: rd.positive("tol_linearity", defaults.linearity)?,
        admissible: rd.positive("tol_admissible", defaults.admissible)?,
        inadmissible: rd.positive("tol_inadmissible", defaults.inadmissible)?,
    };

    let cfg = ScenarioConfig {
        scenario,
        outdir,
        solver,
        half_width: rd.positive("L", default_l)?,
        n_points,
        dt: rd.positive("dt", default_dt)?,
        t_final: rd.positive("t_final", scenario.default_t_final())?,
        samples,
        sample_every,
        kappa_re: rd.float("kappa_re", 1.0)?,
        kappa_im: rd.float("kappa_im", 0.0)?,
        mass: rd.positive("mass", 1.0)?,
        omega: rd.positive("omega", 1.0)?,
        lambda: {
            if scenario == Scenario::Quartic {
                rd.required("lambda")?;
            }
            rd.float("lambda", 0.0)?
        },
        epsilon: rd.positive("epsilon", 0.4)?,
        sigma: rd.positive("sigma", 0.4)?,
        p0: rd.float("p0", 1.0)?,
        q0: rd.float("q0", 0.0)?,
        width: rd.positive("width", 1.0)?,
        separation: rd.positive("separation", 2.5)?,
        node_floor: rd.positive("node_floor", hjs::solver_madelung::DEFAULT_NODE_FLOOR)?,
        quantum_term,
        kappa_values: rd.list("kappa_values", &[0.5, 1.0, 2.0])?,
        theta_values: rd.list("theta_values", &[0.0, 1e-3, 2e-3])?,
        r_min: rd.positive("r_min", 0.1)?,
        r_max: rd.positive("r_max", 10.0)?,
        snapshots: rd.count("snapshots", 2)?,
        tolerances,
    };
    validate(&cfg, &rd)?;
    Ok(cfg)
}

fn validate(cfg: &ScenarioConfig, rd: &Reader) -> Result<(), ConfigError> {
    if cfg.kappa_re == 0.0 {
        return Err(rd.fail("kappa_re", "`kappa_re` must be nonzero"));
    }
    let complex = cfg.kappa_im != 0.0;
    let complex_ok = matches!(cfg.scenario, Scenario::FreePacket | Scenario::Quartic) && cfg.solver == Solver::Linear;
    if complex && !complex_ok {
        let why = match (cfg.scenario, cfg.solver) {
            (Scenario::EquivalenceCheck, _) | (_, Solver::Madelung) => "the Madelung solver requires real kappa",
            _ => "this scenario requires real kappa",
        };
        return Err(rd.fail("kappa_im", format!("`kappa_im` = {}: {why}", cfg.kappa_im)));
    }
    if cfg.solver == Solver::Madelung
        && !matches!(cfg.scenario, Scenario::FreePacket | Scenario::HarmonicBenchmark | Scenario::Quartic)
    {
        return Err(rd.fail("solver", format!("`solver` has no effect on {}", cfg.scenario.name())));
    }
    if cfg.node_floor >= 1.0 {
        return Err(rd.fail("node_floor", "`node_floor` must be below 1"));
    }
    let closed_forms = matches!(cfg.scenario, Scenario::HarmonicBenchmark | Scenario::KappaSweep);
    if closed_forms && (cfg.mass != 1.0 || cfg.omega != 1.0) {
        let key = if cfg.mass != 1.0 { "mass" } else { "omega" };
        return Err(rd.fail(key, "the benchmark closed forms need `mass` = `omega` = 1"));
    }
    match cfg.scenario {
        Scenario::KappaSweep => {
            if cfg.kappa_values.is_empty() || cfg.kappa_values.iter().any(|&k| k <= 0.0) {
                return Err(rd.fail("kappa_values", "`kappa_values` must be positive"));
            }
        }
        Scenario::ThetaInterference => {
            let t = &cfg.theta_values;
            if !t.contains(&0.0) || t.iter().filter(|&&x| x != 0.0).count() < 2 {
                return Err(rd.fail("theta_values", "`theta_values` must contain 0 and at least two nonzero values"));
            }
            if t.iter().any(|x| x.abs() > 1e-2) {
                return Err(rd.fail("theta_values", "`theta_values` must satisfy |theta| <= 1e-2"));
            }
        }
        Scenario::AdmissibilitySuite if cfg.r_min >= cfg.r_max => {
            return Err(rd.fail("r_max", "`r_max` must exceed `r_min`"));
        }
        _ => {}
    }
    Ok(())
}
