use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};

use cavity_ghz::budget::{self, BudgetReport};
use cavity_ghz::protocol::{self, Commensurability, GateReport};
use cavity_ghz::validation::{self, Level, ValidationOptions};
use cavity_ghz::{Error, Exec};

use crate::config::{self, Resolved, RunConfig};

/// Exit code and message of a failed command.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

fn physics(err: Error) -> Failure {
    let code = match err {
        Error::StepUnderflow { .. } | Error::PropagationFailed(_) | Error::NotBlockDiagonal { .. } => 4,
        _ => 3,
    };
    Failure::new(code, err.to_string())
}

fn io(path: &Path, err: impl std::fmt::Display) -> Failure {
    Failure::new(1, format!("{}: {err}", path.display()))
}

fn load(config: &Option<PathBuf>, preset: &Option<String>) -> CmdResult<RunConfig> {
    let mut value = match preset {
        Some(name) => config::preset(name).ok_or_else(|| {
            Failure::new(
                2,
                format!("unknown preset `{name}` (expected one of {})", config::PRESETS.join(", ")),
            )
        })?,
        None => Value::Object(Default::default()),
    };
    match config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))?;
            let patch: Value = serde_json::from_str(&text)
                .map_err(|e| Failure::new(2, format!("{}: invalid JSON: {e}", path.display())))?;
            if !patch.is_object() {
                return Err(Failure::new(2, format!("{}: config must be a JSON object", path.display())));
            }
            config::merge(&mut value, patch);
        }
        None if preset.is_none() => return Err(Failure::new(2, "give --config, --preset or both")),
        None => {}
    }
    config::parse(value).map_err(|m| Failure::new(2, m))
}

fn out_path(dir: &Path, name: &str) -> CmdResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    Ok(dir.join(name))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io(path, e))
}

fn float(x: f64) -> String {
    format!("{x:.15e}")
}

fn csv_writer(path: &Path) -> CmdResult<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io(path, e))
}

fn optional_budget(r: &Resolved) -> CmdResult<Option<BudgetReport>> {
    match (&r.lambda, &r.loss) {
        (Some(_), Some(loss)) => budget::decoherence_budget(&r.sim_params(), loss)
            .map(Some)
            .map_err(physics),
        _ => Ok(None),
    }
}

fn run(r: &Resolved) -> CmdResult<GateReport> {
    let params = r.sim_params();
    params.validate().map_err(physics)?;
    protocol::run_ghz_protocol(&params, &r.protocol_options(Exec::default())).map_err(physics)
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    config: &'a Resolved,
    gate_time: f64,
    gate_angle: f64,
    gamma: f64,
    final_fidelity: f64,
    final_fidelity_traced: f64,
    final_fidelity_projected: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ghz_fidelity: Option<f64>,
    composite_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    single_qubit_purity: &'a [f64],
    commensurability: Commensurability,
    max_norm_defect: f64,
    max_top_fock_pop: f64,
    truncation_alarm: bool,
    failed: bool,
    steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<BudgetReport>,
    warnings: &'a [String],
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn simulate(config: &Option<PathBuf>, preset: &Option<String>, out: &Path) -> CmdResult {
    let resolved = load(config, preset)?.resolve();
    let report = run(&resolved)?;
    let budget = optional_budget(&resolved)?;

    let path = out_path(out, &resolved.output.trajectory)?;
    let mut w = csv_writer(&path)?;
    w.write_record(["t_ns", "fidelity", "F_in_model", "norm_defect", "top_fock_pop"])
        .map_err(|e| io(&path, e))?;
    for k in 0..report.times.len() {
        w.write_record([
            float(report.times[k]),
            float(report.fidelity[k]),
            float(report.infidelity_model[k]),
            float(report.norm_deviation[k]),
            float(report.top_fock_population[k]),
        ])
        .map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))?;

    let summary = SimulateSummary {
        config: &resolved,
        gate_time: report.gate_time,
        gate_angle: report.gate_angle,
        gamma: report.gamma,
        final_fidelity: report.final_fidelity,
        final_fidelity_traced: report.final_fidelity_traced,
        final_fidelity_projected: report.final_fidelity_projected,
        ghz_fidelity: report.ghz_fidelity,
        composite_fidelity: report.composite_fidelity,
        xi: report.xi,
        single_qubit_purity: &report.single_qubit_purity,
        commensurability: report.commensurability,
        max_norm_defect: max(&report.norm_deviation),
        max_top_fock_pop: max(&report.top_fock_population),
        truncation_alarm: report.truncation_alarm,
        failed: report.failed,
        steps: report.steps,
        budget,
        warnings: &report.warnings,
    };
    write_json(&out_path(out, &resolved.output.summary)?, &summary)?;
    println!(
        "final fidelity {:.9} (gate time {:.6} ns, {} warnings)",
        report.final_fidelity,
        report.gate_time,
        report.warnings.len()
    );
    if report.failed {
        return Err(Failure::new(4, "norm deviation exceeded the failure tolerance"));
    }
    Ok(())
}

const SWEEP_METRICS: [&str; 16] = [
    "final_fidelity",
    "infidelity",
    "final_fidelity_traced",
    "final_fidelity_projected",
    "ghz_fidelity",
    "composite_fidelity",
    "xi",
    "gate_time",
    "gate_angle",
    "gamma",
    "delta_residual",
    "omega_residual",
    "max_norm_defect",
    "max_top_fock_pop",
    "truncation_alarm",
    "failed",
];

fn metric_row(r: &GateReport) -> Vec<String> {
    let opt = |x: Option<f64>| x.map(float).unwrap_or_default();
    vec![
        float(r.final_fidelity),
        float(1.0 - r.final_fidelity),
        float(r.final_fidelity_traced),
        float(r.final_fidelity_projected),
        opt(r.ghz_fidelity),
        float(r.composite_fidelity),
        opt(r.xi),
        float(r.gate_time),
        float(r.gate_angle),
        float(r.gamma),
        float(r.commensurability.delta_residual),
        float(r.commensurability.omega_residual),
        float(max(&r.norm_deviation)),
        float(max(&r.top_fock_population)),
        r.truncation_alarm.to_string(),
        r.failed.to_string(),
    ]
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: &'a Resolved,
    points: usize,
    warnings: Vec<String>,
}

pub fn sweep(config: &Option<PathBuf>, preset: &Option<String>, out: &Path) -> CmdResult {
    let base = load(config, preset)?;
    if base.sweep.is_empty() || base.sweep.len() > 2 {
        return Err(Failure::new(
            2,
            format!("sweep needs 1 or 2 axes, got {}", base.sweep.len()),
        ));
    }
    let axes = base
        .sweep
        .iter()
        .map(|a| a.points().map(|p| (a.parameter, p)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|m| Failure::new(2, m))?;
    if axes.len() == 2 && axes[0].0 == axes[1].0 {
        return Err(Failure::new(2, format!("sweep axis `{}` given twice", axes[0].0.name())));
    }

    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for (_, pts) in &axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                pts.iter().map(move |x| {
                    let mut p = prefix.clone();
                    p.push(*x);
                    p
                })
            })
            .collect();
    }
    let runs: Vec<CmdResult<GateReport>> = grid
        .par_iter()
        .map(|point| {
            let mut c = base.clone();
            for ((param, _), x) in axes.iter().zip(point) {
                c = c.with_value(*param, *x);
            }
            run(&c.resolve())
        })
        .collect();
    let reports = runs.into_iter().collect::<CmdResult<Vec<_>>>()?;

    let resolved = base.resolve();
    let path = out_path(out, &resolved.output.sweep)?;
    let mut w = csv_writer(&path)?;
    let header: Vec<&str> = axes
        .iter()
        .map(|(p, _)| p.name())
        .chain(SWEEP_METRICS)
        .collect();
    w.write_record(&header).map_err(|e| io(&path, e))?;
    let mut warnings = Vec::new();
    for (point, report) in grid.iter().zip(&reports) {
        let row: Vec<String> = point.iter().map(|x| float(*x)).chain(metric_row(report)).collect();
        w.write_record(&row).map_err(|e| io(&path, e))?;
        let label: Vec<String> = axes
            .iter()
            .zip(point)
            .map(|((p, _), x)| format!("{}={x}", p.name()))
            .collect();
        warnings.extend(report.warnings.iter().map(|m| format!("[{}] {m}", label.join(", "))));
    }
    w.flush().map_err(|e| io(&path, e))?;
    write_json(
        &out_path(out, &resolved.output.summary)?,
        &SweepSummary {
            config: &resolved,
            points: grid.len(),
            warnings,
        },
    )?;
    println!("{} grid points written to {}", grid.len(), path.display());
    if reports.iter().any(|r| r.failed) {
        return Err(Failure::new(4, "norm deviation exceeded the failure tolerance"));
    }
    Ok(())
}

pub fn budget(config: &Option<PathBuf>, preset: &Option<String>, out: &Path) -> CmdResult {
    let c = load(config, preset)?;
    let resolved = c.resolve();
    if resolved.lambda.is_none() {
        return Err(Failure::new(3, "budget needs the `lambda` section"));
    }
    let Some(loss) = &resolved.loss else {
        return Err(Failure::new(2, "invalid config: missing field `loss`"));
    };
    let report = budget::decoherence_budget(&resolved.sim_params(), loss).map_err(physics)?;
    let path = out_path(out, &resolved.output.budget)?;
    write_json(&path, &report)?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| io(&path, e))?);
    Ok(())
}

pub fn validate(level: Level, seed: u64) -> CmdResult {
    let checks = validation::run_checks(&ValidationOptions {
        level,
        seed,
        ..Default::default()
    });
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        println!(
            "{}  {:<width$}  {:>12.4e}  {:<16}  {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.requirement,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        return Err(Failure::new(1, String::new()));
    }
    Ok(())
}
