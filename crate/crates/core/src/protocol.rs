//! GHZ-generation protocol: pulse schedules, gate angles, targets,
//! fidelities, the analytic infidelity model and the Dyson-series oracle.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::engine::{
    self, Compiled, Generator, Initial, PropagationSettings, Record, NORM_FAIL_TOL, TRUNCATION_TOL,
};
use crate::error::{Error, Result};
use crate::hilbert::{self, HilbertLayout, SpinState};
use crate::linalg::{self, I, ONE};
use crate::model::{self, HamiltonianRecipe, NeglectedPart, SimParams};

/// Hamiltonian driving a protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    /// `Omega J_x + H_I`.
    #[default]
    Driven,
    /// Effective Molmer-Sorensen form.
    Effective,
    /// Effective form plus the sigma_y part of the counter-rotating remainder.
    EffectiveSigmaY,
    /// Full driven model in the frame of the drive (effective form plus the whole remainder).
    Rotated,
}

pub fn build_source(params: &SimParams, source: SourceModel, phi: f64) -> Result<HamiltonianRecipe> {
    match source {
        SourceModel::Driven => model::build_driven_hamiltonian(params, phi),
        SourceModel::Effective => model::build_effective_hamiltonian(params, phi),
        SourceModel::EffectiveSigmaY => {
            let h3 = model::build_effective_hamiltonian(params, phi)?;
            let hy = model::build_neglected_part(params, phi, NeglectedPart::SigmaY)?;
            Ok(h3.plus(&hy, format!("H_3 + H_n[sigma_y] (phi = {phi})")))
        }
        SourceModel::Rotated => model::build_rotated_hamiltonian(params, phi),
    }
}

/// How the gate is composed in time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateScheme {
    /// One segment at `phi = 0`, closing at `delta T = 2 k pi`.
    #[default]
    Single,
    /// Two equal segments at `phi = 0` then `phi = pi`, closing at `delta T = 4 k pi`.
    Echo,
}

impl GateScheme {
    pub fn gate_time(self, delta: f64, k: usize) -> f64 {
        match self {
            GateScheme::Single => 2.0 * PI * k as f64 / delta,
            GateScheme::Echo => 4.0 * PI * k as f64 / delta,
        }
    }

    /// Detuning giving a `pi/2` gate angle at the `k`-th closure time.
    pub fn matched_delta(self, eta: f64, k: usize) -> f64 {
        match self {
            GateScheme::Single => 2.0 * (k as f64).sqrt() * eta,
            GateScheme::Echo => 2.0 * (2.0 * k as f64).sqrt() * eta,
        }
    }

    /// Real part of the accumulated `J_x^2` angle at total duration `t`.
    pub fn angle(self, t: f64, eta: f64, delta: f64) -> f64 {
        match self {
            GateScheme::Single => single_angle(t, eta, delta),
            GateScheme::Echo => echo_angle(t, eta, delta),
        }
    }

    pub fn schedule(self, total_t: f64, source: SourceModel) -> Result<PulseSchedule> {
        match self {
            GateScheme::Single => single_schedule(total_t, source),
            GateScheme::Echo => echo_schedule(total_t, source),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub source: SourceModel,
    pub phi: f64,
    /// ns
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    segments: Vec<Segment>,
}

impl PulseSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("a schedule needs at least one segment".into()));
        }
        if let Some(s) = segments.iter().find(|s| !(s.duration > 0.0) || !s.duration.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "segment durations must be finite and > 0, got {}",
                s.duration
            )));
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `(start, end)` of every segment.
    pub fn boundaries(&self) -> Vec<(f64, f64)> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                (start, t)
            })
            .collect()
    }
}

/// Two halves, `phi = 0` then `phi = pi`.
pub fn echo_schedule(total_t: f64, source: SourceModel) -> Result<PulseSchedule> {
    let half = total_t / 2.0;
    PulseSchedule::new(vec![
        Segment { source, phi: 0.0, duration: half },
        Segment { source, phi: PI, duration: half },
    ])
}

pub fn single_schedule(total_t: f64, source: SourceModel) -> Result<PulseSchedule> {
    PulseSchedule::new(vec![Segment { source, phi: 0.0, duration: total_t }])
}

/// `gamma = (eta^2/delta) (2/delta sin(delta t / 2) - t)`.
pub fn gamma_of(t: f64, eta: f64, delta: f64) -> f64 {
    eta * eta / delta * (2.0 / delta * (0.5 * delta * t).sin() - t)
}

/// `J_x^2` angle of the single-segment gate, `(eta^2/delta)(t - sin(delta t)/delta)`.
pub fn single_angle(t: f64, eta: f64, delta: f64) -> f64 {
    eta * eta / delta * (t - (delta * t).sin() / delta)
}

/// `J_x^2` angle of the `phi = 0 / pi` echo of total duration `t`,
/// `(eta^2/delta)(t - 4 sin(delta t/2)/delta + sin(delta t)/delta)`.
pub fn echo_angle(t: f64, eta: f64, delta: f64) -> f64 {
    eta * eta / delta * (t - 4.0 * (0.5 * delta * t).sin() / delta + (delta * t).sin() / delta)
}

/// `exp(i theta J_x^2)` on `n` qubits.
pub fn jx2_gate(n_sites: usize, theta: f64) -> DMatrix<C64> {
    let dim = 1 << n_sites;
    let mut u = DMatrix::zeros(dim, dim);
    for (m, p) in engine::jx_projectors(n_sites) {
        u += p * C64::from_polar(1.0, theta * m * m);
    }
    u
}

/// `exp(-i pi/2 J_x)`, the odd-N correction.
pub fn odd_correction(n_sites: usize) -> DMatrix<C64> {
    linalg::exp_hermitian(&hilbert::spin_jx(n_sites), -I * (PI / 2.0))
}

/// Best `theta` for `block ~ e^{i chi} exp(i theta J_x^2)` on `(-pi, pi]`,
/// with the phase-aligned max-entry residual.
pub fn fit_jx2_angle(block: &DMatrix<C64>, n_sites: usize) -> (f64, f64) {
    let objective = |theta: f64| linalg::phase_aligned_distance(block, &jx2_gate(n_sites, theta));
    let n_grid = 1440;
    let step = 2.0 * PI / n_grid as f64;
    let (mut best, mut best_val) = (0.0, f64::INFINITY);
    for k in 0..n_grid {
        let theta = -PI + step * (k + 1) as f64;
        let v = objective(theta);
        if v < best_val {
            best = theta;
            best_val = v;
        }
    }
    let (theta, val) = linalg::golden_min(&objective, best - step, best + step, 1e-12);
    if val < best_val {
        (theta, val)
    } else {
        (best, best_val)
    }
}

/// State produced by the ideal `pi/2` gate from `|0...0>`, including the
/// odd-N correction: `exp(-i pi/2 J_x)^[N odd] exp(i pi/2 J_x^2) |0...0>`.
pub fn ideal_output(n_sites: usize) -> Result<SpinState> {
    let zero = SpinState::all_zero(n_sites);
    let mut state = zero.evolved(&jx2_gate(n_sites, PI / 2.0))?;
    if n_sites % 2 == 1 {
        state = state.evolved(&odd_correction(n_sites))?;
    }
    Ok(state)
}

/// GHZ state the protocol produces from `|0...0>` (`N >= 2`). For even `N`
/// this is `exp(i pi/2 J_x^2)|0...0>`, the complex conjugate of
/// [`ghz_state_printed`].
pub fn ghz_target(n_sites: usize) -> Result<SpinState> {
    if n_sites < 2 {
        return Err(Error::InvalidParameter {
            name: "n_qubits",
            reason: format!("a GHZ target needs at least 2 qubits, got {n_sites}"),
        });
    }
    ideal_output(n_sites)
}

/// `(e^{-i pi/4}|0...0> + e^{i pi (1/4 + N/2)}|1...1>)/sqrt(2)`.
pub fn ghz_state_printed(n_sites: usize) -> Result<SpinState> {
    if n_sites < 2 {
        return Err(Error::InvalidParameter {
            name: "n_qubits",
            reason: format!("a GHZ target needs at least 2 qubits, got {n_sites}"),
        });
    }
    let dim = 1 << n_sites;
    let mut amps = DVector::zeros(dim);
    let s = 0.5_f64.sqrt();
    amps[0] = C64::from_polar(s, -PI / 4.0);
    amps[dim - 1] = C64::from_polar(s, PI * (0.25 + n_sites as f64 / 2.0));
    SpinState::new(n_sites, amps)
}

/// What happens to the cavity when the qubits are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityReadout {
    /// Partial trace over the cavity.
    #[default]
    Trace,
    /// Projection onto the initial Fock state (not renormalised).
    Project,
}

/// `|<target|psi>|^2` on the qubits; `project` onto Fock level `n`, or trace the cavity.
pub fn fidelity(
    state: &hilbert::StateVector,
    target: &SpinState,
    readout: CavityReadout,
    fock_n: usize,
) -> Result<f64> {
    let layout = state.layout();
    let x = DMatrix::from_column_slice(layout.dim(), 1, state.amplitudes().as_slice());
    ensemble_fidelity(&layout, &x, target, readout, &[fock_n])
}

/// Fidelity of the mixed state `X X^dagger`; column `c` started in Fock level `fock_of_column[c]`.
pub fn ensemble_fidelity(
    layout: &HilbertLayout,
    x: &DMatrix<C64>,
    target: &SpinState,
    readout: CavityReadout,
    fock_of_column: &[usize],
) -> Result<f64> {
    if target.n_sites() != layout.n_sites() || layout.site_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: layout.spin_dim(),
            got: target.dim(),
        });
    }
    let t = target.amplitudes();
    match readout {
        CavityReadout::Trace => {
            let rho = hilbert::trace_out_cavity(layout, x);
            Ok((t.adjoint() * rho * t)[(0, 0)].re)
        }
        CavityReadout::Project => {
            if fock_of_column.len() != x.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: x.ncols(),
                    got: fock_of_column.len(),
                });
            }
            let mut total = 0.0;
            for (col, &n) in x.column_iter().zip(fock_of_column) {
                let amp: C64 = (0..layout.spin_dim())
                    .map(|s| t[s].conj() * col[layout.index(s, n)])
                    .sum();
                total += amp.norm_sqr();
            }
            Ok(total)
        }
    }
}

/// `xi = N(N-1) eta^2 / (8 Omega^2)`.
pub fn xi(n_qubits: usize, eta: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter {
            name: "omega",
            reason: format!("the infidelity model needs Omega > 0, got {omega}"),
        });
    }
    let n = n_qubits as f64;
    Ok(n * (n - 1.0) * eta * eta / (8.0 * omega * omega))
}

/// `F_in = xi (1 - cos(2 Omega t))`.
pub fn infidelity_model(n_qubits: usize, eta: f64, omega: f64, t: f64) -> Result<f64> {
    Ok(xi(n_qubits, eta, omega)? * (1.0 - (2.0 * omega * t).cos()))
}

/// `overlap * (1 - F_in)` clamped to `[0, 1]`.
pub fn composite_fidelity(overlap: f64, f_in: f64) -> f64 {
    (overlap * (1.0 - f_in)).clamp(0.0, 1.0)
}

/// Residuals of `delta t` modulo `2 pi` and `Omega t` modulo `4 pi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Commensurability {
    /// In `[-pi, pi)`.
    pub delta_residual: f64,
    /// In `[-2 pi, 2 pi)`.
    pub omega_residual: f64,
    pub satisfied: bool,
}

fn centered_mod(x: f64, period: f64) -> f64 {
    let r = (x + period / 2.0).rem_euclid(period) - period / 2.0;
    if r >= period / 2.0 {
        r - period
    } else {
        r
    }
}

pub fn commensurability_check(delta: f64, omega: f64, t: f64) -> Commensurability {
    let delta_residual = centered_mod(delta * t, 2.0 * PI);
    let omega_residual = centered_mod(omega * t, 4.0 * PI);
    let tol = 1e-9 * t.abs().max(1.0);
    Commensurability {
        delta_residual,
        omega_residual,
        satisfied: delta_residual.abs() <= tol && omega_residual.abs() <= tol,
    }
}

/// True when `Omega / delta` is an even integer.
pub fn drive_ratio_is_even(delta: f64, omega: f64) -> bool {
    let r = omega / delta;
    (r / 2.0 - (r / 2.0).round()).abs() <= 1e-9 * r.abs().max(1.0)
}

/// Snapshots of a schedule run on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleRun {
    pub layout: HilbertLayout,
    pub times: Vec<f64>,
    pub snapshots: Vec<DMatrix<C64>>,
    pub norm_deviation: Vec<f64>,
    pub top_fock_population: Vec<f64>,
    pub truncation_alarm: bool,
    pub failed: bool,
    pub steps: usize,
}

/// Propagate `x0` through every segment of `schedule`, keeping snapshots at
/// the ascending `grid` times. `mixed` marks `x0` as state or ensemble
/// columns (enables the truncation alarm) rather than operator columns.
pub fn run_schedule(
    params: &SimParams,
    schedule: &PulseSchedule,
    x0: &DMatrix<C64>,
    mixed: bool,
    grid: &[f64],
    settings: &PropagationSettings,
) -> Result<ScheduleRun> {
    let total = schedule.total();
    let tol = 1e-12 * total;
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|g| *g < 0.0 || *g > total + tol) {
        return Err(Error::InvalidSchedule(format!(
            "grid must be ascending inside [0, {total}]"
        )));
    }
    let layout = params.qubit_layout()?;
    let mut snapshots: Vec<Option<DMatrix<C64>>> = vec![None; grid.len()];
    for (k, g) in grid.iter().enumerate() {
        if *g <= tol {
            snapshots[k] = Some(x0.clone());
        }
    }
    let mut x = x0.clone();
    let mut steps = 0;
    for (seg, (s0, s1)) in schedule.segments().iter().zip(schedule.boundaries()) {
        let recipe = build_source(params, seg.source, seg.phi)?;
        let inside: Vec<usize> = (0..grid.len())
            .filter(|&k| grid[k] > s0 + tol && grid[k] <= s1 + tol)
            .collect();
        let mut record: Vec<f64> = inside.iter().map(|&k| grid[k].min(s1)).collect();
        if record.last().is_none_or(|t| *t < s1) {
            record.push(s1);
        }
        let seg_settings = settings.clone().with_record(Record::Times(record));
        let run = engine::propagate(&recipe, &Initial::Columns(x), s0, s1, &seg_settings)?;
        steps += run.steps;
        for (j, &k) in inside.iter().enumerate() {
            snapshots[k] = Some(run.snapshots[j].clone());
        }
        x = run.final_block().clone();
    }
    let snapshots: Vec<DMatrix<C64>> = snapshots
        .into_iter()
        .map(|s| s.expect("every grid point lies in a segment"))
        .collect();
    let gram0 = x0.adjoint() * x0;
    let norm_deviation: Vec<f64> = snapshots
        .iter()
        .map(|s| linalg::max_diff(&(s.adjoint() * s), &gram0))
        .collect();
    let top = layout.n_max();
    let top_fock_population: Vec<f64> = snapshots
        .iter()
        .map(|s| {
            let per_col = s.column_iter().map(|c| {
                (0..layout.spin_dim())
                    .map(|sp| c[layout.index(sp, top)].norm_sqr())
                    .sum::<f64>()
            });
            if mixed {
                per_col.sum()
            } else {
                per_col.fold(0.0, f64::max)
            }
        })
        .collect();
    let truncation_alarm = mixed && top_fock_population.iter().any(|p| *p > TRUNCATION_TOL);
    let failed = norm_deviation.iter().any(|d| *d > NORM_FAIL_TOL);
    Ok(ScheduleRun {
        layout,
        times: grid.to_vec(),
        snapshots,
        norm_deviation,
        top_fock_population,
        truncation_alarm,
        failed,
        steps,
    })
}

/// Protocol controls beyond the physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolOptions {
    pub scheme: GateScheme,
    pub k: usize,
    pub source: SourceModel,
    /// Initial Fock level when `n_bar = 0`.
    pub initial_fock: usize,
    pub readout: CavityReadout,
    /// Number of time intervals in the fidelity series.
    pub samples: usize,
    pub settings: PropagationSettings,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            scheme: GateScheme::Single,
            k: 1,
            source: SourceModel::Driven,
            initial_fock: 0,
            readout: CavityReadout::Trace,
            samples: 200,
            settings: PropagationSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub n_qubits: usize,
    pub scheme: GateScheme,
    pub source: SourceModel,
    pub readout: CavityReadout,
    pub k: usize,
    /// ns
    pub gate_time: f64,
    /// Achieved `J_x^2` angle at the gate time.
    pub gate_angle: f64,
    /// Closed-form `gamma` at the gate time.
    pub gamma: f64,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub infidelity_model: Vec<f64>,
    pub norm_deviation: Vec<f64>,
    pub top_fock_population: Vec<f64>,
    /// Fidelity at the gate time with the selected readout (thermally averaged).
    pub final_fidelity: f64,
    pub final_fidelity_traced: f64,
    pub final_fidelity_projected: f64,
    /// `None` for a single qubit.
    pub ghz_fidelity: Option<f64>,
    pub composite_fidelity: f64,
    pub xi: Option<f64>,
    /// Purity of each single-qubit reduced state at the gate time.
    pub single_qubit_purity: Vec<f64>,
    pub commensurability: Commensurability,
    pub truncation_alarm: bool,
    pub failed: bool,
    pub steps: usize,
    pub warnings: Vec<String>,
}

/// Initial columns: `|0...0, n>` or `sqrt(w_n)|0...0, n>` for a thermal cavity.
fn initial_columns(params: &SimParams, initial_fock: usize) -> Result<(DMatrix<C64>, Vec<usize>)> {
    let layout = params.qubit_layout()?;
    if params.n_bar > 0.0 {
        let w = hilbert::thermal_weights(params.n_bar, layout.fock_dim())?;
        let levels: Vec<usize> = (0..layout.fock_dim()).filter(|&n| w.weights[n] > 0.0).collect();
        let mut x = DMatrix::zeros(layout.dim(), levels.len());
        for (c, &n) in levels.iter().enumerate() {
            x[(layout.index(0, n), c)] = C64::from(w.weights[n].sqrt());
        }
        Ok((x, levels))
    } else {
        if initial_fock > layout.n_max() {
            return Err(Error::InvalidParameter {
                name: "initial_fock",
                reason: format!("level {initial_fock} above n_max = {}", layout.n_max()),
            });
        }
        let mut x = DMatrix::zeros(layout.dim(), 1);
        x[(layout.index(0, initial_fock), 0)] = ONE;
        Ok((x, vec![initial_fock]))
    }
}

fn resolved_settings(params: &SimParams, settings: &PropagationSettings) -> PropagationSettings {
    let mut s = settings.clone();
    if s.max_step.is_none() {
        s.max_step = PropagationSettings::for_params(params).max_step;
    }
    s
}

fn corrected(layout: &HilbertLayout, x: &DMatrix<C64>, correction: &Option<DMatrix<C64>>) -> DMatrix<C64> {
    match correction {
        Some(r) => {
            let full = linalg::kron(r, &linalg::identity(layout.fock_dim()));
            full * x
        }
        None => x.clone(),
    }
}

/// Run the GHZ protocol from `|0...0>` and the cavity state of `params`.
pub fn run_ghz_protocol(params: &SimParams, opts: &ProtocolOptions) -> Result<GateReport> {
    params.validate()?;
    if opts.k == 0 {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "closure index must be >= 1".into(),
        });
    }
    let n = params.n_qubits;
    let gate_time = opts.scheme.gate_time(params.delta, opts.k);
    let schedule = opts.scheme.schedule(gate_time, opts.source)?;
    let (x0, levels) = initial_columns(params, opts.initial_fock)?;
    let samples = opts.samples.max(200);
    let grid: Vec<f64> = (0..=samples)
        .map(|k| if k == samples { gate_time } else { gate_time * k as f64 / samples as f64 })
        .collect();
    let settings = resolved_settings(params, &opts.settings);
    let run = run_schedule(params, &schedule, &x0, true, &grid, &settings)?;
    let layout = run.layout;

    let target = ideal_output(n)?;
    let correction = (n % 2 == 1).then(|| odd_correction(n));
    let fidelity = run
        .snapshots
        .iter()
        .map(|x| ensemble_fidelity(&layout, &corrected(&layout, x, &correction), &target, opts.readout, &levels))
        .collect::<Result<Vec<f64>>>()?;
    let final_x = corrected(&layout, run.snapshots.last().expect("grid ends at the gate time"), &correction);
    let traced = ensemble_fidelity(&layout, &final_x, &target, CavityReadout::Trace, &levels)?;
    let projected = ensemble_fidelity(&layout, &final_x, &target, CavityReadout::Project, &levels)?;
    let final_fidelity = match opts.readout {
        CavityReadout::Trace => traced,
        CavityReadout::Project => projected,
    };

    let xi_value = (params.omega > 0.0).then(|| xi(n, params.eta, params.omega)).transpose()?;
    let infidelity_series: Vec<f64> = grid
        .iter()
        .map(|&t| xi_value.map_or(0.0, |x| x * (1.0 - (2.0 * params.omega * t).cos())))
        .collect();
    let f_in_final = *infidelity_series.last().expect("non-empty grid");

    let rho = hilbert::trace_out_cavity(&layout, &final_x);
    let tr = rho.trace().re;
    let rho = rho / C64::from(tr);
    let single_qubit_purity = (1..=n)
        .map(|site| {
            let r = hilbert::reduce_to_site(n, &rho, site);
            (&r * &r).trace().re
        })
        .collect();

    let commensurability = commensurability_check(params.delta, params.omega, gate_time);
    let mut warnings = Vec::new();
    if params.omega > 0.0 && !drive_ratio_is_even(params.delta, params.omega) {
        warnings.push(format!(
            "commensurability: Omega/delta = {:.6} is not an even integer",
            params.omega / params.delta
        ));
    } else if !commensurability.satisfied {
        warnings.push(format!(
            "commensurability: residuals delta*t = {:.3e}, Omega*t = {:.3e} at the gate time",
            commensurability.delta_residual, commensurability.omega_residual
        ));
    }
    if run.truncation_alarm {
        warnings.push(format!(
            "truncation: top Fock population {:.3e} exceeds {TRUNCATION_TOL:e}; increase n_max",
            run.top_fock_population.iter().fold(0.0_f64, |m, p| m.max(*p))
        ));
    }
    if run.failed {
        warnings.push(format!(
            "norm: deviation {:.3e} exceeds {NORM_FAIL_TOL:e}",
            run.norm_deviation.iter().fold(0.0_f64, |m, p| m.max(*p))
        ));
    }

    Ok(GateReport {
        n_qubits: n,
        scheme: opts.scheme,
        source: opts.source,
        readout: opts.readout,
        k: opts.k,
        gate_time,
        gate_angle: opts.scheme.angle(gate_time, params.eta, params.delta),
        gamma: gamma_of(gate_time, params.eta, params.delta),
        times: grid,
        fidelity,
        infidelity_model: infidelity_series,
        norm_deviation: run.norm_deviation,
        top_fock_population: run.top_fock_population,
        final_fidelity,
        final_fidelity_traced: traced,
        final_fidelity_projected: projected,
        ghz_fidelity: (n >= 2).then_some(final_fidelity),
        composite_fidelity: composite_fidelity(final_fidelity, f_in_final),
        xi: xi_value,
        single_qubit_purity,
        commensurability,
        truncation_alarm: run.truncation_alarm,
        failed: run.failed,
        steps: run.steps,
        warnings,
    })
}

/// Final fidelity of a schedule of the given total `duration` (no time series).
pub fn gate_fidelity(params: &SimParams, opts: &ProtocolOptions, duration: f64) -> Result<f64> {
    params.validate()?;
    let n = params.n_qubits;
    let schedule = opts.scheme.schedule(duration, opts.source)?;
    let (x0, levels) = initial_columns(params, opts.initial_fock)?;
    let settings = resolved_settings(params, &opts.settings);
    let run = run_schedule(params, &schedule, &x0, true, &[duration], &settings)?;
    if run.failed {
        return Err(Error::PropagationFailed(format!(
            "norm deviation {:.3e}",
            run.norm_deviation[0]
        )));
    }
    let correction = (n % 2 == 1).then(|| odd_correction(n));
    let x = corrected(&run.layout, &run.snapshots[0], &correction);
    ensemble_fidelity(&run.layout, &x, &ideal_output(n)?, opts.readout, &levels)
}

/// Backward secant `(F(T) - F(T - h)) / h` of the gate fidelity against total duration.
pub fn duration_slope(params: &SimParams, opts: &ProtocolOptions, gate_time: f64, h: f64) -> Result<f64> {
    let f1 = gate_fidelity(params, opts, gate_time)?;
    let f0 = gate_fidelity(params, opts, gate_time - h)?;
    Ok((f1 - f0) / h)
}

/// Coupled first- and second-order Dyson amplitudes carried in the
/// Schroedinger picture of the effective Hamiltonian:
/// `phi_0' = A phi_0`, `phi_1' = A phi_1 + B phi_0`, `phi_2' = A phi_2 + B phi_1`
/// with `A = -i H_3`, `B = -i H_n`.
struct DysonSystem {
    h3: Compiled,
    hn: Compiled,
}

impl Generator for DysonSystem {
    fn rhs(&self, t: f64, y: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = self.h3.rhs(t, y);
        let lower = y.columns(0, 2).into_owned();
        let mut coupled = DMatrix::zeros(y.nrows(), 2);
        self.hn.apply_into(t, &lower, &mut coupled);
        let mut upper = out.columns_mut(1, 2);
        upper += coupled;
        out
    }
}

/// Second-order Dyson estimate of the infidelity caused by the
/// counter-rotating remainder `part`, relative to the exact effective
/// evolution from `|0...0, 0>`: `-2 Re<psi_0|y_2> - |<psi_0|y_1>|^2`.
pub fn dyson_infidelity_oracle(params: &SimParams, t: f64, part: NeglectedPart) -> Result<f64> {
    params.validate()?;
    let phase = params.delta * t;
    let residual = (phase - 2.0 * PI * (phase / (2.0 * PI)).round()).abs();
    if !(t > 0.0) || residual > 1e-9 * phase.abs().max(1.0) {
        return Err(Error::NotClosureTime { time: t, residual });
    }
    let h3 = model::build_effective_hamiltonian(params, 0.0)?;
    let hn = model::build_neglected_part(params, 0.0, part)?;
    let max_frequency = h3.max_frequency().max(hn.max_frequency());
    let layout = h3.layout();
    let sys = DysonSystem {
        h3: Compiled::new(&h3),
        hn: Compiled::new(&hn),
    };
    let mut y0 = DMatrix::zeros(layout.dim(), 3);
    y0[(layout.index(0, 0), 0)] = ONE;
    let settings = PropagationSettings::for_params(params);
    let max_step = (2.0 * PI / max_frequency.max(params.delta) / 40.0)
        .min(settings.max_step.expect("set by for_params"));
    let chunk = engine::integrate_chunk(&sys, y0, 0.0, &[t], max_step, &settings, max_frequency)?;
    let y = &chunk.snapshots[0];
    let phi0 = y.column(0);
    let a1 = phi0.dotc(&y.column(1));
    let a2 = phi0.dotc(&y.column(2));
    Ok(-2.0 * a2.re - a1.norm_sqr())
}
