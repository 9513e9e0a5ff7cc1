//! Experiment configuration: a JSON document with a strict schema.
//!
//! Parsing runs in two stages. The envelope (`experiment`, `parameters`,
//! `output_path`, `seed`) is read first, then `parameters` is decoded into
//! the schema of the selected experiment. Every stage rejects unknown keys
//! and reports the offending key path.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use holoqd::model::EnvelopeShape;
use holoqd::noise::{NoiseChannel, SiteMask};
use holoqd::twoqubit::FreeAmplitude;
use holoqd::{HolonomyConfig64, IntegratorConfig64, SweepGrid64};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Environment variable that overrides `output_path`.
pub const OUTPUT_DIR_ENV: &str = "HOLOQD_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SingleGate,
    Compose,
    TwoQubit,
    ConcurrenceSweep,
    FidelityCurve,
    VerifyAll,
}

/// Pulse envelope of every loop, fixed by its area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeParams {
    #[serde(default = "default_shape")]
    pub shape: EnvelopeShape,
    #[serde(default = "one")]
    pub duration: f64,
    #[serde(default = "pi")]
    pub area: f64,
    #[serde(default = "default_gaussian_width")]
    pub gaussian_width: f64,
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        Self {
            shape: default_shape(),
            duration: 1.0,
            area: PI,
            gaussian_width: default_gaussian_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleGateParams {
    #[serde(default = "quarter_pi")]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    /// Propagate on the flux-threaded ring instead of the bare Λ system.
    #[serde(default)]
    pub ring: bool,
    #[serde(default)]
    pub total_flux: f64,
    #[serde(default)]
    pub envelope: EnvelopeParams,
    #[serde(default)]
    pub holonomy: HolonomyConfig64,
}

impl Default for SingleGateParams {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeParams {
    /// Loops in application order.
    #[serde(default = "default_loops")]
    pub loops: Vec<LoopSpec>,
    /// Envelope of each loop.
    #[serde(default)]
    pub envelope: EnvelopeParams,
    #[serde(default)]
    pub holonomy: HolonomyConfig64,
}

impl Default for ComposeParams {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitConfig {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub delta: f64,
    #[serde(default = "two")]
    pub amp1: f64,
    #[serde(default)]
    pub amp2: f64,
    #[serde(default)]
    pub n1: u8,
    #[serde(default)]
    pub n2: u8,
    #[serde(default)]
    pub gap: f64,
    /// When set, the free amplitude is re-solved for this concurrence.
    #[serde(default)]
    pub target_concurrence: Option<f64>,
    #[serde(default = "default_free")]
    pub free: FreeAmplitude,
    #[serde(default)]
    pub integrator: IntegratorConfig64,
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcurrenceSweepParams {
    #[serde(default)]
    pub grid: SweepGrid64,
}

impl Default for ConcurrenceSweepParams {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingleQubitGate {
    Hadamard,
    Pi8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub gate: SingleQubitGate,
    pub site_mask: SiteMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceParams {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_surface_mask")]
    pub site_mask: SiteMask,
    #[serde(default = "default_tau_ratio")]
    pub tau_ratio: [f64; 2],
    #[serde(default = "default_tau_points")]
    pub tau_ratio_points: usize,
    #[serde(default = "default_inv_gamma")]
    pub inv_gamma_tau: [f64; 2],
    #[serde(default = "default_inv_gamma_points")]
    pub inv_gamma_tau_points: usize,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelityCurveParams {
    #[serde(default)]
    pub channel: NoiseChannel,
    #[serde(default = "default_curves")]
    pub curves: Vec<CurveSpec>,
    #[serde(default = "default_shape")]
    pub envelope_shape: EnvelopeShape,
    /// Log-spaced `1/(γτ)` grid.
    #[serde(default = "default_ratio_range")]
    pub ratio: [f64; 2],
    #[serde(default = "default_ratio_points")]
    pub ratio_points: usize,
    #[serde(default)]
    pub surface: SurfaceParams,
    /// Optional fixed rate `γ` (gate time 1) evaluated for every curve.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub integrator: IntegratorConfig64,
}

impl Default for FidelityCurveParams {
    fn default() -> Self {
        from_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAllParams {
    /// Integrator tolerance for every propagation in the suite.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_random_points")]
    pub random_points: usize,
    #[serde(default = "default_compose_pairs")]
    pub compose_pairs: usize,
    #[serde(default = "default_gauge_samples")]
    pub gauge_samples: usize,
    #[serde(default)]
    pub grid: SweepGrid64,
}

impl Default for VerifyAllParams {
    fn default() -> Self {
        from_empty()
    }
}

/// A fully decoded experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    SingleGate(SingleGateParams),
    Compose(ComposeParams),
    TwoQubit(TwoQubitConfig),
    ConcurrenceSweep(ConcurrenceSweepParams),
    FidelityCurve(FidelityCurveParams),
    VerifyAll(VerifyAllParams),
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::SingleGate(_) => ExperimentKind::SingleGate,
            Experiment::Compose(_) => ExperimentKind::Compose,
            Experiment::TwoQubit(_) => ExperimentKind::TwoQubit,
            Experiment::ConcurrenceSweep(_) => ExperimentKind::ConcurrenceSweep,
            Experiment::FidelityCurve(_) => ExperimentKind::FidelityCurve,
            Experiment::VerifyAll(_) => ExperimentKind::VerifyAll,
        }
    }

    fn parameters_value(&self) -> Value {
        let v = match self {
            Experiment::SingleGate(p) => serde_json::to_value(p),
            Experiment::Compose(p) => serde_json::to_value(p),
            Experiment::TwoQubit(p) => serde_json::to_value(p),
            Experiment::ConcurrenceSweep(p) => serde_json::to_value(p),
            Experiment::FidelityCurve(p) => serde_json::to_value(p),
            Experiment::VerifyAll(p) => serde_json::to_value(p),
        };
        v.expect("parameter structs serialise to JSON")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub output_path: PathBuf,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            output_path: PathBuf::from(DEFAULT_OUTPUT_DIR),
            seed: 0,
        }
    }

    /// The configuration with every default filled in.
    pub fn effective(&self) -> Value {
        serde_json::json!({
            "experiment": self.experiment.kind(),
            "parameters": self.experiment.parameters_value(),
            "output_path": self.output_path.display().to_string(),
            "seed": self.seed,
        })
    }

    /// `output_path`, unless overridden by the environment.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_path.clone(),
        }
    }
}

/// One problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    /// Dotted key path, empty for document-level problems.
    pub key: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.key.is_empty() {
            write!(f, "`{}`: ", self.key)?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    experiment: ExperimentKind,
    #[serde(default)]
    parameters: Option<Value>,
    #[serde(default)]
    output_path: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
}

fn issue(key: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue {
        key: key.into(),
        line: None,
        column: None,
        message: message.into(),
    }
}

fn path_key(prefix: &str, path: &serde_path_to_error::Path) -> String {
    let inner = path.to_string();
    match (prefix.is_empty(), inner == ".") {
        (_, true) => prefix.to_string(),
        (true, false) => inner,
        (false, false) => format!("{prefix}.{inner}"),
    }
}

fn decode<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, Vec<ConfigIssue>> {
    serde_path_to_error::deserialize(value).map_err(|e| vec![issue(path_key(prefix, e.path()), e.inner().to_string())])
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    // an empty document is an empty object, so the missing key is reported
    let text = if text.trim().is_empty() { "{}" } else { text };
    let de = &mut serde_json::Deserializer::from_str(text);
    let envelope: Envelope = serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        vec![ConfigIssue {
            key: path_key("", e.path()),
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string(),
        }]
    })?;
    let params = envelope.parameters.unwrap_or_else(|| Value::Object(Default::default()));
    let experiment = match envelope.experiment {
        ExperimentKind::SingleGate => Experiment::SingleGate(decode(params, "parameters")?),
        ExperimentKind::Compose => Experiment::Compose(decode(params, "parameters")?),
        ExperimentKind::TwoQubit => Experiment::TwoQubit(decode(params, "parameters")?),
        ExperimentKind::ConcurrenceSweep => Experiment::ConcurrenceSweep(decode(params, "parameters")?),
        ExperimentKind::FidelityCurve => Experiment::FidelityCurve(decode(params, "parameters")?),
        ExperimentKind::VerifyAll => Experiment::VerifyAll(decode(params, "parameters")?),
    };
    let config = ExperimentConfig {
        experiment,
        output_path: PathBuf::from(envelope.output_path.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into())),
        seed: envelope.seed.unwrap_or(0),
    };
    let issues = validate(&config);
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(issues)
    }
}

fn finite(issues: &mut Vec<ConfigIssue>, key: &str, v: f64) {
    if !v.is_finite() {
        issues.push(issue(key, "must be finite"));
    }
}

fn positive(issues: &mut Vec<ConfigIssue>, key: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        issues.push(issue(key, "must be finite and positive"));
    }
}

fn from_core(issues: &mut Vec<ConfigIssue>, prefix: &str, r: holoqd::Result<()>) {
    match r {
        Ok(()) => {}
        Err(holoqd::Error::Config { field, message }) => issues.push(issue(format!("{prefix}.{field}"), message)),
        Err(e) => issues.push(issue(prefix, e.to_string())),
    }
}

fn check_envelope(issues: &mut Vec<ConfigIssue>, prefix: &str, e: &EnvelopeParams) {
    positive(issues, &format!("{prefix}.duration"), e.duration);
    finite(issues, &format!("{prefix}.area"), e.area);
    positive(issues, &format!("{prefix}.gaussian_width"), e.gaussian_width);
}

fn check_angles(issues: &mut Vec<ConfigIssue>, prefix: &str, theta: f64, phi: f64) {
    if !(0.0..=PI).contains(&theta) {
        issues.push(issue(format!("{prefix}.theta"), "must lie in [0, pi]"));
    }
    finite(issues, &format!("{prefix}.phi"), phi);
}

fn check_range(issues: &mut Vec<ConfigIssue>, key: &str, r: [f64; 2], points: usize) {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] > 0.0 && r[0] <= r[1]) {
        issues.push(issue(key, "needs 0 < lower <= upper, both finite"));
    }
    if points == 0 {
        issues.push(issue(format!("{key}_points"), "must be at least 1"));
    }
}

/// Semantic checks on decoded parameters.
pub fn validate(config: &ExperimentConfig) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    let p = "parameters";
    match &config.experiment {
        Experiment::SingleGate(s) => {
            check_angles(&mut issues, p, s.theta, s.phi);
            finite(&mut issues, &format!("{p}.total_flux"), s.total_flux);
            check_envelope(&mut issues, &format!("{p}.envelope"), &s.envelope);
            from_core(&mut issues, &format!("{p}.holonomy.integrator"), s.holonomy.integrator.validate());
        }
        Experiment::Compose(c) => {
            if c.loops.is_empty() {
                issues.push(issue(format!("{p}.loops"), "at least one loop is required"));
            }
            for (k, l) in c.loops.iter().enumerate() {
                check_angles(&mut issues, &format!("{p}.loops[{k}]"), l.theta, l.phi);
            }
            check_envelope(&mut issues, &format!("{p}.envelope"), &c.envelope);
            from_core(&mut issues, &format!("{p}.holonomy.integrator"), c.holonomy.integrator.validate());
        }
        Experiment::TwoQubit(t) => {
            from_core(&mut issues, p, t.to_params().validate());
            if let Some(c) = t.target_concurrence {
                if !(0.0..=1.0).contains(&c) {
                    issues.push(issue(format!("{p}.target_concurrence"), "must lie in [0, 1]"));
                }
            }
            from_core(&mut issues, &format!("{p}.integrator"), t.integrator.validate());
        }
        Experiment::ConcurrenceSweep(s) => from_core(&mut issues, &format!("{p}.grid"), s.grid.validate()),
        Experiment::FidelityCurve(f) => {
            if f.curves.is_empty() && !f.surface.enabled {
                issues.push(issue(format!("{p}.curves"), "nothing to compute"));
            }
            for (k, c) in f.curves.iter().enumerate() {
                if c.site_mask.len() != 3 {
                    issues.push(issue(format!("{p}.curves[{k}].site_mask"), "single-qubit masks have 3 bits"));
                }
            }
            check_range(&mut issues, &format!("{p}.ratio"), f.ratio, f.ratio_points);
            if let Some(g) = f.gamma {
                if !(g.is_finite() && g >= 0.0) {
                    issues.push(issue(format!("{p}.gamma"), "gamma must be finite and non-negative"));
                }
            }
            if f.surface.enabled {
                let s = &f.surface;
                if s.site_mask.len() != 4 {
                    issues.push(issue(format!("{p}.surface.site_mask"), "two-qubit masks have 4 bits"));
                }
                check_range(&mut issues, &format!("{p}.surface.tau_ratio"), s.tau_ratio, s.tau_ratio_points);
                check_range(
                    &mut issues,
                    &format!("{p}.surface.inv_gamma_tau"),
                    s.inv_gamma_tau,
                    s.inv_gamma_tau_points,
                );
            }
            from_core(&mut issues, &format!("{p}.integrator"), f.integrator.validate());
        }
        Experiment::VerifyAll(v) => {
            positive(&mut issues, &format!("{p}.tolerance"), v.tolerance);
            for (key, n) in [
                ("random_points", v.random_points),
                ("compose_pairs", v.compose_pairs),
                ("gauge_samples", v.gauge_samples),
            ] {
                if n == 0 {
                    issues.push(issue(format!("{p}.{key}"), "must be at least 1"));
                }
            }
            from_core(&mut issues, &format!("{p}.grid"), v.grid.validate());
        }
    }
    issues
}

impl TwoQubitConfig {
    pub fn to_params(&self) -> holoqd::TwoQubitParams64 {
        holoqd::TwoQubitParams64 {
            alpha: self.alpha,
            delta: self.delta,
            amp1: self.amp1,
            amp2: self.amp2,
            n1: self.n1,
            n2: self.n2,
            gap: self.gap,
        }
    }
}

fn from_empty<T: DeserializeOwned>() -> T {
    serde_json::from_value(Value::Object(Default::default())).expect("every field has a default")
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn pi() -> f64 {
    PI
}

fn quarter_pi() -> f64 {
    PI / 4.0
}

fn yes() -> bool {
    true
}

fn default_shape() -> EnvelopeShape {
    EnvelopeShape::SineSquared
}

fn default_gaussian_width() -> f64 {
    1.0 / 6.0
}

fn default_free() -> FreeAmplitude {
    FreeAmplitude::First
}

fn default_loops() -> Vec<LoopSpec> {
    vec![
        LoopSpec { theta: PI / 2.0, phi: 0.0 },
        LoopSpec {
            theta: PI / 2.0,
            phi: PI / 8.0,
        },
    ]
}

fn default_curves() -> Vec<CurveSpec> {
    let spec = |gate, mask: &str| CurveSpec {
        gate,
        site_mask: mask.parse().expect("literal mask"),
    };
    vec![
        spec(SingleQubitGate::Hadamard, "111"),
        spec(SingleQubitGate::Hadamard, "010"),
        spec(SingleQubitGate::Hadamard, "101"),
        spec(SingleQubitGate::Pi8, "111"),
    ]
}

fn default_surface_mask() -> SiteMask {
    SiteMask::full(4)
}

fn default_tau_ratio() -> [f64; 2] {
    [0.8, 3.0]
}

fn default_tau_points() -> usize {
    12
}

fn default_inv_gamma() -> [f64; 2] {
    [1.0, 1e3]
}

fn default_inv_gamma_points() -> usize {
    10
}

fn default_ratio_range() -> [f64; 2] {
    [1.0, 1e4]
}

fn default_ratio_points() -> usize {
    20
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_random_points() -> usize {
    100
}

fn default_compose_pairs() -> usize {
    1000
}

fn default_gauge_samples() -> usize {
    10
}
