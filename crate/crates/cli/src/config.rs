//! Experiment configuration: TOML sections, validated into
//! [`ExperimentConfig`] with every default filled in.

use std::collections::{BTreeMap, BTreeSet};
use std::cell::RefCell;
use std::fmt;
use std::path::{Path, PathBuf};

use gflow_core::flow::{FlowParams, Scheme, StepControl};
use gflow_core::grid_fields::{GridSpec, Topology, MIN_POINTS_PER_AXIS};
use gflow_core::presets::{MetricPreset, PhiPreset, METRIC_AMPLITUDE, PHI_AMPLITUDE};
use gflow_core::verify::LemmaId;
use serde_json::{json, Value};
use thiserror::Error;

/// Where a configuration value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--override"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: missing key {key}")]
    MissingKey { key: String, origin: Origin },
    #[error("{origin}: bad value for {key}: {reason}")]
    BadValue { key: String, reason: String, origin: Origin },
    #[error("{origin}: unknown scenario {name:?}")]
    UnknownScenario { name: String, origin: Origin },
    #[error("line {line}: {message}")]
    Syntax { message: String, line: usize },
    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::MissingKey { key, .. } | ConfigError::BadValue { key, .. } => Some(key),
            _ => None,
        }
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            ConfigError::BadValue { reason, .. } => Some(reason),
            _ => None,
        }
    }
}

fn bad(key: &str, reason: impl Into<String>, origin: Origin) -> ConfigError {
    ConfigError::BadValue { key: key.to_string(), reason: reason.into(), origin }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    Evolve,
    CheckLemmas,
    Classify,
    Envelope,
    Soliton,
    DeturckCompare,
    Entropy,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Evolve,
        Scenario::CheckLemmas,
        Scenario::Classify,
        Scenario::Envelope,
        Scenario::Soliton,
        Scenario::DeturckCompare,
        Scenario::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::CheckLemmas => "check-lemmas",
            Scenario::Classify => "classify",
            Scenario::Envelope => "envelope",
            Scenario::Soliton => "soliton",
            Scenario::DeturckCompare => "deturck-compare",
            Scenario::Entropy => "entropy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|sc| sc.name() == s)
    }

    /// Scenarios that integrate the flow and therefore need a torus.
    fn runs_flow(self) -> bool {
        matches!(self, Scenario::Evolve | Scenario::Envelope | Scenario::DeturckCompare | Scenario::CheckLemmas)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeChoice {
    Direct,
    /// De Turck gauge against the flat metric.
    DeTurck,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Preset { metric: MetricPreset, metric_amplitude: f64, phi: PhiPreset, phi_amplitude: f64, frequency: f64 },
    /// CSV with one row per grid point: the upper-triangular metric
    /// components row by row, then `phi`.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlConfig {
    pub scheme: Scheme,
    /// Fixed step; `cfl_safety` times the stability limit when absent.
    pub dt: Option<f64>,
    pub cfl_safety: f64,
    pub t_end: f64,
    pub monitor_stride: usize,
    pub gauge: GaugeChoice,
    pub max_eigen_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub emit_csv: bool,
    pub emit_svg: bool,
    pub emit_json: bool,
    pub plot_columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonitorsConfig {
    pub decay: bool,
    pub sandwich_power: u32,
    pub entropy_tau: f64,
}

/// Pass/fail criteria; a check runs only when its key is set, except
/// where a scenario is itself a check.
#[derive(Clone, Debug, PartialEq)]
pub struct ChecksConfig {
    pub envelope_slack: f64,
    pub c_tilde: Option<f64>,
    pub volume_tolerance: Option<f64>,
    pub conservation_tolerance: Option<f64>,
    pub decay: bool,
    /// Decay columns are judged on samples with `t ≥ decay_t_min`; `4h²` when absent.
    pub decay_t_min: Option<f64>,
    pub order_threshold: f64,
    pub levels: usize,
    pub lemmas: Vec<LemmaId>,
    pub compare_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EntropyPotential {
    Phi,
    Constant(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyConfig {
    pub tau: f64,
    pub f: EntropyPotential,
    pub expect: Option<f64>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub grid: GridSpec,
    pub params: FlowParams,
    /// Name of the parameter preset, if one was used.
    pub params_preset: Option<String>,
    pub initial: InitialData,
    pub control: ControlConfig,
    pub output: OutputConfig,
    pub monitors: MonitorsConfig,
    pub checks: ChecksConfig,
    pub entropy: EntropyConfig,
}

/// Named parameter quadruples.
pub fn params_preset(name: &str) -> Option<FlowParams> {
    Some(match name {
        "ricci-flow" | "ricci" => FlowParams::ricci(),
        "list-flow" | "list" => FlowParams::list(),
        _ => return None,
    })
}

#[derive(Clone, Debug)]
struct Entry {
    value: toml::Value,
    origin: Origin,
}

/// Flat `section.key` view of the document with use tracking.
struct Raw {
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        type Doc = BTreeMap<String, BTreeMap<String, toml::Spanned<toml::Value>>>;
        let doc: Doc = toml::from_str(text).map_err(|e| ConfigError::Syntax {
            message: e.message().to_string(),
            line: e.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        })?;
        let mut entries = BTreeMap::new();
        for (section, keys) in doc {
            for (key, v) in keys {
                let origin = Origin::Line(line_of(text, v.span().start));
                entries.insert(format!("{section}.{key}"), Entry { value: v.into_inner(), origin });
            }
        }
        Ok(Raw { entries, used: RefCell::new(BTreeSet::new()) })
    }

    /// Applies `section.key=value`; the value is read as TOML and falls
    /// back to a bare string.
    fn apply_override(&mut self, spec: &str) -> Result<(), ConfigError> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| bad(spec, "overrides take the form section.key=value", Origin::Override))?;
        let key = key.trim();
        if key.split('.').count() != 2 || key.split('.').any(str::is_empty) {
            return Err(bad(key, "override keys take the form section.key", Origin::Override));
        }
        let value = value.trim();
        let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.to_string()));
        self.entries.insert(key.to_string(), Entry { value: parsed, origin: Origin::Override });
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        let e = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(e)
    }

    fn origin(&self, key: &str) -> Origin {
        self.entries.get(key).map(|e| e.origin).unwrap_or(Origin::Default)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let v = match &e.value {
            toml::Value::Float(x) => *x,
            toml::Value::Integer(i) => *i as f64,
            _ => return Err(bad(key, "expected a number", e.origin)),
        };
        if !v.is_finite() {
            return Err(bad(key, "must be finite", e.origin));
        }
        Ok(Some(v))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.opt_f64(key)?.unwrap_or(default))
    }

    fn opt_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        match &e.value {
            toml::Value::Integer(i) if *i >= 0 => Ok(Some(*i as usize)),
            _ => Err(bad(key, "expected a non-negative integer", e.origin)),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        Ok(self.opt_usize(key)?.unwrap_or(default))
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(default) };
        match &e.value {
            toml::Value::Boolean(b) => Ok(*b),
            _ => Err(bad(key, "expected true or false", e.origin)),
        }
    }

    fn opt_str(&self, key: &str) -> Result<Option<String>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        match &e.value {
            toml::Value::String(s) => Ok(Some(s.clone())),
            _ => Err(bad(key, "expected a string", e.origin)),
        }
    }

    fn opt_str_list(&self, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
        let Some(e) = self.get(key) else { return Ok(None) };
        let err = || bad(key, "expected a list of strings", e.origin);
        match &e.value {
            toml::Value::Array(items) => items
                .iter()
                .map(|v| v.as_str().map(str::to_string).ok_or_else(err))
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            toml::Value::String(s) => Ok(Some(s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())),
            _ => Err(err()),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        let used = self.used.into_inner();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, e)) => Err(bad(k, "unknown key", e.origin)),
            None => Ok(()),
        }
    }
}

fn require(ok: bool, key: &str, reason: &str, raw: &Raw) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(bad(key, reason, raw.origin(key)))
    }
}

/// Reads and validates a configuration file. `scenario`, when given, is
/// the scenario named on the command line; it must agree with `run.scenario`
/// if the file also names one.
pub fn parse_config(path: &Path, scenario: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text, scenario, overrides)
}

pub fn parse_config_str(text: &str, scenario: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = Raw::parse(text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    let cfg = build(&raw, scenario)?;
    raw.finish()?;
    Ok(cfg)
}

fn build(raw: &Raw, cli_scenario: Option<&str>) -> Result<ExperimentConfig, ConfigError> {
    let file_scenario = raw.opt_str("run.scenario")?;
    let name = match (cli_scenario, &file_scenario) {
        (Some(a), Some(b)) if a != b => {
            return Err(bad("run.scenario", format!("file names {b:?} but {a:?} was requested"), raw.origin("run.scenario")))
        }
        (Some(a), _) => a.to_string(),
        (None, Some(b)) => b.clone(),
        (None, None) => return Err(ConfigError::MissingKey { key: "run.scenario".into(), origin: Origin::Default }),
    };
    let scenario = Scenario::parse(&name)
        .ok_or_else(|| ConfigError::UnknownScenario { name: name.clone(), origin: raw.origin("run.scenario") })?;

    // grid
    let topology = match raw.opt_str("grid.topology")?.as_deref() {
        None if scenario == Scenario::Soliton => Topology::InteriorPatch,
        None | Some("torus") | Some("periodic") => Topology::Periodic,
        Some("patch") => Topology::InteriorPatch,
        Some(other) => {
            return Err(bad("grid.topology", format!("expected torus or patch, got {other:?}"), raw.origin("grid.topology")))
        }
    };
    let dim = raw.usize("grid.dim", 2)?;
    require(dim == 2 || dim == 3, "grid.dim", "must be 2 or 3", raw)?;
    let default_n = if scenario == Scenario::Soliton { 129 } else { 64 };
    let n = raw.usize("grid.n", default_n)?;
    require(n >= MIN_POINTS_PER_AXIS, "grid.n", &format!("minimum {MIN_POINTS_PER_AXIS}"), raw)?;
    let default_length = match topology {
        Topology::Periodic => std::f64::consts::TAU,
        Topology::InteriorPatch => 4.0,
    };
    let length = raw.f64("grid.length", default_length)?;
    require(length > 0.0, "grid.length", "must be positive", raw)?;
    if scenario.runs_flow() {
        require(topology == Topology::Periodic, "grid.topology", "this scenario needs a torus", raw)?;
    }
    if scenario == Scenario::Soliton {
        require(dim == 2 && topology == Topology::InteriorPatch, "grid.topology", "the cigar needs a 2D patch", raw)?;
    }
    let grid = GridSpec::new(dim, n, length, topology).map_err(|e| bad("grid", e.to_string(), Origin::Default))?;

    // params
    let preset_name = raw.opt_str("params.preset")?;
    let base = match &preset_name {
        Some(name) => params_preset(name)
            .ok_or_else(|| bad("params.preset", format!("unknown preset {name:?}"), raw.origin("params.preset")))?,
        None => FlowParams::ricci(),
    };
    let params = FlowParams::new(
        raw.f64("params.alpha1", base.alpha1)?,
        raw.f64("params.alpha2", base.alpha2)?,
        raw.f64("params.beta1", base.beta1)?,
        raw.f64("params.beta2", base.beta2)?,
    );

    // initial data
    let initial = match raw.opt_str("initial.file")? {
        Some(path) => {
            for key in ["initial.metric", "initial.phi"] {
                require(raw.get(key).is_none(), key, "cannot be combined with initial.file", raw)?;
            }
            InitialData::File(PathBuf::from(path))
        }
        None => {
            let default_metric = if scenario == Scenario::Soliton { "cigar" } else { "bump" };
            let default_phi = if scenario == Scenario::Soliton { "cigar" } else { "mix" };
            let metric_name = raw.opt_str("initial.metric")?.unwrap_or_else(|| default_metric.into());
            let metric = MetricPreset::parse(&metric_name).ok_or_else(|| {
                bad("initial.metric", format!("unknown metric preset {metric_name:?}"), raw.origin("initial.metric"))
            })?;
            let phi_name = raw.opt_str("initial.phi")?.unwrap_or_else(|| default_phi.into());
            let phi = PhiPreset::parse(&phi_name)
                .ok_or_else(|| bad("initial.phi", format!("unknown phi preset {phi_name:?}"), raw.origin("initial.phi")))?;
            let frequency = raw.f64("initial.frequency", 1.0)?;
            if topology == Topology::Periodic {
                let periods = frequency * length / std::f64::consts::TAU;
                require(
                    frequency > 0.0 && (periods - periods.round()).abs() < 1e-9,
                    "initial.frequency",
                    "must make the data periodic (a positive multiple of 2π/length)",
                    raw,
                )?;
            }
            require((metric == MetricPreset::Cigar) == (topology == Topology::InteriorPatch) || metric == MetricPreset::Flat,
                "initial.metric", "the cigar metric lives on a patch; curved tori use bump or conformal", raw)?;
            InitialData::Preset {
                metric,
                metric_amplitude: raw.f64("initial.metric_amplitude", METRIC_AMPLITUDE)?,
                phi,
                phi_amplitude: raw.f64("initial.phi_amplitude", PHI_AMPLITUDE)?,
                frequency,
            }
        }
    };

    // control
    let scheme = match raw.opt_str("control.scheme")?.as_deref() {
        None | Some("rk4") => Scheme::Rk4,
        Some("euler") => Scheme::Euler,
        Some(other) => return Err(bad("control.scheme", format!("expected rk4 or euler, got {other:?}"), raw.origin("control.scheme"))),
    };
    let dt = raw.opt_f64("control.dt")?;
    require(dt.is_none_or(|d| d > 0.0), "control.dt", "must be positive", raw)?;
    let cfl_safety = raw.f64("control.cfl_safety", StepControl::DEFAULT_SAFETY)?;
    require(cfl_safety > 0.0 && cfl_safety <= 1.0, "control.cfl_safety", "must lie in (0, 1]", raw)?;
    let t_end = raw.f64("control.t_end", 0.1)?;
    require(t_end >= 0.0, "control.t_end", "must be non-negative", raw)?;
    let monitor_stride = raw.usize("control.monitor_stride", 1)?;
    require(monitor_stride >= 1, "control.monitor_stride", "minimum 1", raw)?;
    let gauge = match raw.opt_str("control.gauge")?.as_deref() {
        None | Some("direct") => GaugeChoice::Direct,
        Some("deturck") => GaugeChoice::DeTurck,
        Some(other) => {
            return Err(bad("control.gauge", format!("expected direct or deturck, got {other:?}"), raw.origin("control.gauge")))
        }
    };
    let max_eigen_ratio = raw.f64("control.max_eigen_ratio", 1e3)?;
    require(max_eigen_ratio > 1.0, "control.max_eigen_ratio", "must exceed 1", raw)?;
    let compare_t_end = raw.opt_f64("compare.t_end")?;
    if let Some(t) = compare_t_end {
        require(t == t_end, "compare.t_end", &format!("both runs must share control.t_end = {t_end}"), raw)?;
    }

    // output
    let emit_svg = raw.bool("output.emit_svg", false)?;
    let plot_columns = raw
        .opt_str_list("output.plot_columns")?
        .unwrap_or_else(|| vec!["max_grad_phi_sq".into(), "max_R".into()]);
    let output = OutputConfig {
        directory: PathBuf::from(raw.opt_str("output.directory")?.unwrap_or_else(|| "gflow-out".into())),
        emit_csv: raw.bool("output.emit_csv", true)?,
        emit_svg,
        emit_json: raw.bool("output.emit_json", true)?,
        plot_columns,
    };

    let monitors = MonitorsConfig {
        decay: raw.bool("monitors.decay", true)?,
        sandwich_power: raw.usize("monitors.sandwich_power", 1)? as u32,
        entropy_tau: raw.f64("monitors.entropy_tau", 1.0)?,
    };
    require(monitors.sandwich_power >= 1, "monitors.sandwich_power", "minimum 1", raw)?;
    require(monitors.entropy_tau > 0.0, "monitors.entropy_tau", "must be positive", raw)?;

    // checks
    let lemmas = match raw.opt_str_list("checks.lemmas")? {
        None => LemmaId::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| {
                LemmaId::parse(n)
                    .ok_or_else(|| bad("checks.lemmas", format!("unknown lemma {n:?}"), raw.origin("checks.lemmas")))
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let checks = ChecksConfig {
        envelope_slack: raw.f64("checks.envelope_slack", 1e-3)?,
        c_tilde: raw.opt_f64("checks.c_tilde")?,
        volume_tolerance: raw.opt_f64("checks.volume_tolerance")?,
        conservation_tolerance: raw.opt_f64("checks.conservation_tolerance")?,
        decay: raw.bool("checks.decay", false)?,
        decay_t_min: raw.opt_f64("checks.decay_t_min")?,
        order_threshold: raw.f64("checks.order_threshold", if dim == 3 { 1.5 } else { 1.8 })?,
        levels: raw.usize("checks.levels", 2)?,
        lemmas,
        compare_tolerance: raw.f64("compare.tolerance", 0.02)?,
    };
    require(checks.envelope_slack >= 0.0, "checks.envelope_slack", "must be non-negative", raw)?;
    require(checks.c_tilde.is_none_or(|c| c >= 0.0), "checks.c_tilde", "must be non-negative", raw)?;
    require(checks.levels >= 2, "checks.levels", "minimum 2", raw)?;
    require(checks.compare_tolerance > 0.0, "compare.tolerance", "must be positive", raw)?;
    if scenario == Scenario::DeturckCompare {
        require(compare_t_end.is_some() || t_end > 0.0, "control.t_end", "must be positive", raw)?;
    }

    let f = match raw.get("entropy.f").map(|e| (e.value.clone(), e.origin)) {
        None => EntropyPotential::Phi,
        Some((toml::Value::String(s), _)) if s == "phi" => EntropyPotential::Phi,
        Some((toml::Value::Float(x), _)) => EntropyPotential::Constant(x),
        Some((toml::Value::Integer(i), _)) => EntropyPotential::Constant(i as f64),
        Some((_, origin)) => return Err(bad("entropy.f", "expected \"phi\" or a number", origin)),
    };
    let entropy = EntropyConfig {
        tau: raw.f64("entropy.tau", 1.0)?,
        f,
        expect: raw.opt_f64("entropy.expect")?,
        tolerance: raw.f64("entropy.tolerance", 1e-10)?,
    };
    require(entropy.tau > 0.0, "entropy.tau", "must be positive", raw)?;
    if scenario == Scenario::Entropy {
        require(topology == Topology::Periodic, "grid.topology", "the entropy needs a closed manifold (torus)", raw)?;
    }

    Ok(ExperimentConfig {
        scenario,
        grid,
        params,
        params_preset: preset_name,
        initial,
        control: ControlConfig { scheme, dt, cfl_safety, t_end, monitor_stride, gauge, max_eigen_ratio },
        output,
        monitors,
        checks,
        entropy,
    })
}

impl ExperimentConfig {
    /// The resolved configuration, defaults included, as flat `section.key`
    /// pairs in sorted order.
    pub fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        let g = &self.grid;
        put("run.scenario", json!(self.scenario.name()));
        put("grid.dim", json!(g.dim()));
        put("grid.n", json!(g.n()));
        put("grid.length", json!(g.length()));
        put("grid.topology", json!(if g.is_periodic() { "torus" } else { "patch" }));
        put("grid.accuracy", json!(g.accuracy().order()));
        let p = &self.params;
        if let Some(name) = &self.params_preset {
            put("params.preset", json!(name));
        }
        put("params.alpha1", json!(p.alpha1));
        put("params.alpha2", json!(p.alpha2));
        put("params.beta1", json!(p.beta1));
        put("params.beta2", json!(p.beta2));
        match &self.initial {
            InitialData::Preset { metric, metric_amplitude, phi, phi_amplitude, frequency } => {
                put("initial.metric", json!(metric.name()));
                put("initial.metric_amplitude", json!(metric_amplitude));
                put("initial.phi", json!(phi.name()));
                put("initial.phi_amplitude", json!(phi_amplitude));
                put("initial.frequency", json!(frequency));
            }
            InitialData::File(path) => put("initial.file", json!(path.display().to_string())),
        }
        let c = &self.control;
        put("control.scheme", json!(c.scheme.name()));
        if let Some(dt) = c.dt {
            put("control.dt", json!(dt));
        }
        put("control.cfl_safety", json!(c.cfl_safety));
        put("control.t_end", json!(c.t_end));
        put("control.monitor_stride", json!(c.monitor_stride));
        put("control.gauge", json!(match c.gauge {
            GaugeChoice::Direct => "direct",
            GaugeChoice::DeTurck => "deturck",
        }));
        put("control.max_eigen_ratio", json!(c.max_eigen_ratio));
        let o = &self.output;
        put("output.emit_csv", json!(o.emit_csv));
        put("output.emit_svg", json!(o.emit_svg));
        put("output.emit_json", json!(o.emit_json));
        put("output.plot_columns", json!(o.plot_columns));
        let mo = &self.monitors;
        put("monitors.decay", json!(mo.decay));
        put("monitors.sandwich_power", json!(mo.sandwich_power));
        put("monitors.entropy_tau", json!(mo.entropy_tau));
        let ch = &self.checks;
        put("checks.envelope_slack", json!(ch.envelope_slack));
        if let Some(c) = ch.c_tilde {
            put("checks.c_tilde", json!(c));
        }
        if let Some(v) = ch.volume_tolerance {
            put("checks.volume_tolerance", json!(v));
        }
        if let Some(v) = ch.conservation_tolerance {
            put("checks.conservation_tolerance", json!(v));
        }
        put("checks.decay", json!(ch.decay));
        if let Some(v) = ch.decay_t_min {
            put("checks.decay_t_min", json!(v));
        }
        put("checks.order_threshold", json!(ch.order_threshold));
        put("checks.levels", json!(ch.levels));
        put("checks.lemmas", json!(ch.lemmas.iter().map(|l| l.name()).collect::<Vec<_>>()));
        put("compare.tolerance", json!(ch.compare_tolerance));
        let e = &self.entropy;
        put("entropy.tau", json!(e.tau));
        put("entropy.f", match e.f {
            EntropyPotential::Phi => json!("phi"),
            EntropyPotential::Constant(x) => json!(x),
        });
        if let Some(x) = e.expect {
            put("entropy.expect", json!(x));
        }
        put("entropy.tolerance", json!(e.tolerance));
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_numbers_count_from_one() {
        assert_eq!(line_of("a\nb\nc", 0), 1);
        assert_eq!(line_of("a\nb\nc", 4), 3);
    }

    #[test]
    fn override_values_are_typed() {
        let mut raw = Raw::parse("[grid]\nn = 16\n").unwrap();
        raw.apply_override("grid.n=32").unwrap();
        raw.apply_override("initial.metric=flat").unwrap();
        assert_eq!(raw.opt_usize("grid.n").unwrap(), Some(32));
        assert_eq!(raw.opt_str("initial.metric").unwrap().as_deref(), Some("flat"));
        assert!(raw.apply_override("nokey").is_err());
        assert!(raw.apply_override("a.b.c=1").is_err());
    }
}
