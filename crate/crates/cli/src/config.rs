//! Run configuration: JSON schema, presets and resolution to simulator inputs.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::f64::consts::PI;

use cavity_ghz::budget::LossParams;
use cavity_ghz::engine::PropagationSettings;
use cavity_ghz::model::{self, LambdaParams};
use cavity_ghz::protocol::{CavityReadout, GateScheme, ProtocolOptions, SourceModel};
use cavity_ghz::{Exec, SimParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaConfig {
    /// Cavity coupling G (rad/ns).
    pub g: f64,
    /// Laser Rabi frequency Omega_L (rad/ns).
    pub omega_l: f64,
    /// Excited-state detuning Delta (rad/ns).
    pub excited_detuning: f64,
    /// Raman detuning; the resolved delta when absent.
    #[serde(default)]
    pub raman_detuning: Option<f64>,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    /// Ground-state splitting omega_10 (rad/ns).
    #[serde(default = "default_splitting")]
    pub omega_10: f64,
}

fn default_wavelength() -> f64 {
    637.0
}

fn default_splitting() -> f64 {
    model::ghz(2.88)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsConfig {
    #[serde(default = "default_rel")]
    pub rel_tol: f64,
    #[serde(default = "default_abs")]
    pub abs_tol: f64,
    #[serde(default)]
    pub max_step: Option<f64>,
    /// Intervals in the fidelity time series (at least 200).
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_rel() -> f64 {
    1e-9
}

fn default_abs() -> f64 {
    1e-12
}

fn default_samples() -> usize {
    400
}

impl Default for SettingsConfig {
    fn default() -> Self {
        Self {
            rel_tol: default_rel(),
            abs_tol: default_abs(),
            max_step: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_sweep")]
    pub sweep: String,
    #[serde(default = "default_budget")]
    pub budget: String,
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

fn default_sweep() -> String {
    "sweep.csv".into()
}

fn default_budget() -> String {
    "budget.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            trajectory: default_trajectory(),
            summary: default_summary(),
            sweep: default_sweep(),
            budget: default_budget(),
        }
    }
}

/// Parameters a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NQubits,
    Eta,
    Delta,
    Omega,
    OmegaOverDelta,
    Phi,
    NMax,
    NBar,
    K,
    InitialFock,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::NQubits => "n_qubits",
            Self::Eta => "eta",
            Self::Delta => "delta",
            Self::Omega => "omega",
            Self::OmegaOverDelta => "omega_over_delta",
            Self::Phi => "phi",
            Self::NMax => "n_max",
            Self::NBar => "n_bar",
            Self::K => "k",
            Self::InitialFock => "initial_fock",
        }
    }

    fn is_integer(self) -> bool {
        matches!(self, Self::NQubits | Self::NMax | Self::K | Self::InitialFock)
    }
}

/// Either explicit values or a linear range with `steps` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl SweepAxis {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        let name = self.parameter.name();
        let pts = match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => match n {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            },
            _ => {
                return Err(format!(
                    "sweep axis `{name}`: give either `values` or all of `start`, `stop`, `steps`"
                ))
            }
        };
        if pts.is_empty() {
            return Err(format!("sweep axis `{name}` has no points"));
        }
        if let Some(x) = pts.iter().find(|x| !x.is_finite()) {
            return Err(format!("sweep axis `{name}`: non-finite value {x}"));
        }
        if self.parameter.is_integer() {
            if let Some(x) = pts.iter().find(|x| x.fract() != 0.0 || **x < 0.0) {
                return Err(format!("sweep axis `{name}` takes non-negative integers, got {x}"));
            }
        }
        Ok(pts)
    }
}

/// On-disk configuration. Every field except `n_qubits` and `eta` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n_qubits: usize,
    /// Coupling eta (rad/ns).
    pub eta: f64,
    #[serde(default)]
    pub eta_per_qubit: Option<Vec<f64>>,
    /// Detuning delta (rad/ns); the scheme's matched value for `k` when absent.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Drive Omega (rad/ns); `omega_over_delta * delta` when absent.
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub omega_over_delta: Option<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub n_bar: f64,
    #[serde(default)]
    pub scheme: GateScheme,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub source: SourceModel,
    #[serde(default = "default_readout")]
    pub readout: CavityReadout,
    #[serde(default)]
    pub initial_fock: usize,
    #[serde(default)]
    pub lambda: Option<LambdaConfig>,
    #[serde(default)]
    pub loss: Option<LossParams>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub settings: SettingsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_max() -> usize {
    12
}

fn default_k() -> usize {
    1
}

fn default_readout() -> CavityReadout {
    CavityReadout::Trace
}

const DEFAULT_OMEGA_OVER_DELTA: f64 = 6.0;

/// Config with every default materialised; embedded in the summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub n_qubits: usize,
    pub eta: f64,
    pub eta_per_qubit: Option<Vec<f64>>,
    pub delta: f64,
    pub omega: f64,
    pub omega_over_delta: f64,
    pub phi: f64,
    pub n_max: usize,
    pub n_bar: f64,
    pub scheme: GateScheme,
    pub k: usize,
    pub source: SourceModel,
    pub readout: CavityReadout,
    pub initial_fock: usize,
    pub lambda: Option<LambdaConfig>,
    pub loss: Option<LossParams>,
    pub sweep: Vec<SweepAxis>,
    pub settings: SettingsConfig,
    pub output: OutputConfig,
    pub seed: u64,
}

impl Resolved {
    pub fn sim_params(&self) -> SimParams {
        let mut p = SimParams::new(self.n_qubits, self.eta, self.delta, self.omega, self.n_max);
        p.eta_per_qubit = self.eta_per_qubit.clone();
        p.phi = self.phi;
        p.n_bar = self.n_bar;
        p.lambda = self.lambda.as_ref().map(|l| {
            LambdaParams::from_detunings(
                self.n_qubits,
                l.g,
                l.omega_l,
                l.excited_detuning,
                l.raman_detuning.unwrap_or(self.delta),
                model::optical_frequency(l.wavelength_nm),
                l.omega_10,
            )
        });
        p
    }

    pub fn protocol_options(&self, exec: Exec) -> ProtocolOptions {
        let mut settings = PropagationSettings::default().with_exec(exec);
        settings.rel_tol = self.settings.rel_tol;
        settings.abs_tol = self.settings.abs_tol;
        settings.max_step = self.settings.max_step;
        ProtocolOptions {
            scheme: self.scheme,
            k: self.k,
            source: self.source,
            initial_fock: self.initial_fock,
            readout: self.readout,
            samples: self.settings.samples,
            settings,
        }
    }
}

impl RunConfig {
    pub fn resolve(&self) -> Resolved {
        let delta = self
            .delta
            .unwrap_or_else(|| self.scheme.matched_delta(self.eta, self.k.max(1)));
        let (omega, ratio) = match self.omega {
            Some(w) => (w, w / delta),
            None => {
                let r = self.omega_over_delta.unwrap_or(DEFAULT_OMEGA_OVER_DELTA);
                (r * delta, r)
            }
        };
        let lambda = self.lambda.clone().map(|mut l| {
            l.raman_detuning = Some(l.raman_detuning.unwrap_or(delta));
            l
        });
        Resolved {
            n_qubits: self.n_qubits,
            eta: self.eta,
            eta_per_qubit: self.eta_per_qubit.clone(),
            delta,
            omega,
            omega_over_delta: ratio,
            phi: self.phi,
            n_max: self.n_max,
            n_bar: self.n_bar,
            scheme: self.scheme,
            k: self.k,
            source: self.source,
            readout: self.readout,
            initial_fock: self.initial_fock,
            lambda,
            loss: self.loss.clone(),
            sweep: self.sweep.clone(),
            settings: self.settings.clone(),
            output: self.output.clone(),
            seed: self.seed,
        }
    }

    /// Copy with one sweep coordinate applied.
    pub fn with_value(&self, parameter: SweepParameter, x: f64) -> RunConfig {
        let mut c = self.clone();
        match parameter {
            SweepParameter::NQubits => c.n_qubits = x as usize,
            SweepParameter::Eta => c.eta = x,
            SweepParameter::Delta => c.delta = Some(x),
            SweepParameter::Omega => c.omega = Some(x),
            SweepParameter::OmegaOverDelta => {
                c.omega = None;
                c.omega_over_delta = Some(x);
            }
            SweepParameter::Phi => c.phi = x,
            SweepParameter::NMax => c.n_max = x as usize,
            SweepParameter::NBar => c.n_bar = x,
            SweepParameter::K => c.k = x as usize,
            SweepParameter::InitialFock => c.initial_fock = x as usize,
        }
        c
    }
}

/// Bundled parameter sets by name.
pub fn preset(name: &str) -> Option<Value> {
    let n = match name {
        "paper_n2" => 2,
        "paper_n4" => 4,
        _ => return None,
    };
    let eta = 2.0 * PI * 0.05;
    Some(serde_json::json!({
        "n_qubits": n,
        "eta": eta,
        "delta": 2.0 * eta,
        "omega": 12.0 * eta,
        "n_max": 12,
        "n_bar": 0.0,
        "lambda": {
            "g": 2.0 * PI * 1.0,
            "omega_l": 2.0 * PI * 0.5,
            "excited_detuning": 2.0 * PI * 20.0,
            "wavelength_nm": 637.0,
        },
        "loss": {
            "gamma0": 2.0 * PI * 0.083,
            "quality_factor": 1e9,
            "wavelength_nm": 637.0,
        },
    }))
}

pub const PRESETS: [&str; 2] = ["paper_n2", "paper_n4"];

/// Recursively overlay `patch` onto `base`; `null` removes a key.
pub fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    b.remove(&k);
                } else {
                    merge(b.entry(k).or_insert(Value::Null), v);
                }
            }
        }
        (b, p) => *b = p,
    }
}

pub fn parse(value: Value) -> Result<RunConfig, String> {
    serde_json::from_value(value).map_err(|e| format!("invalid config: {e}"))
}
