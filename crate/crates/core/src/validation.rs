//! Self-check suite: oracle cross-checks and invariants with measured residuals.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::budget::{self, LossParams};
use crate::engine::{self, Initial, PropagationSettings, Record};
use crate::error::Result;
use crate::exec::Exec;
use crate::hilbert::{self, HilbertLayout, StateVector};
use crate::linalg::{self, I};
use crate::model::{self, ghz, mhz, LambdaParams, NeglectedPart, SimParams};
use crate::protocol::{self, GateScheme, ProtocolOptions, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Level {
    #[default]
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOptions {
    pub level: Level,
    /// Multiplies eta on the analytic side of the propagator oracle.
    pub tamper_eta: f64,
    /// Offset of the low-discrepancy sample sequence.
    pub seed: u64,
    pub exec: Exec,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            level: Level::Fast,
            tamper_eta: 1.0,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub requirement: String,
    pub passed: bool,
    pub detail: String,
}

enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

fn check(name: &str, measured: f64, bound: Bound, detail: impl Into<String>) -> Check {
    let (passed, requirement) = match bound {
        Bound::AtMost(x) => (measured <= x, format!("<= {x:e}")),
        Bound::AtLeast(x) => (measured >= x, format!(">= {x}")),
        Bound::Within(lo, hi) => (measured >= lo && measured <= hi, format!("in [{lo}, {hi}]")),
    };
    Check {
        name: name.into(),
        measured,
        requirement,
        passed: passed && measured.is_finite(),
        detail: detail.into(),
    }
}

fn errored(name: &str, err: crate::Error) -> Check {
    Check {
        name: name.into(),
        measured: f64::NAN,
        requirement: "runs".into(),
        passed: false,
        detail: err.to_string(),
    }
}

/// `k`-th point of a golden-ratio sequence in `[0, 1)`.
pub fn low_discrepancy(k: u64) -> f64 {
    let g = 0.618_033_988_749_894_9;
    (0.5 + k as f64 * g).fract()
}

/// Paper parameter set: eta = 2 pi x 50 MHz, delta = 2 eta, Omega = 6 delta.
pub fn preset_params(n_qubits: usize, n_max: usize) -> SimParams {
    let eta = mhz(50.0);
    SimParams::new(n_qubits, eta, 2.0 * eta, 12.0 * eta, n_max)
}

/// Reference Lambda parameters: G = 2 pi x 1 GHz, Omega_L = 2 pi x 0.5 GHz,
/// Delta = 2 pi x 20 GHz, 637 nm cavity.
pub fn preset_lambda(n_qubits: usize, raman_detuning: f64) -> LambdaParams {
    LambdaParams::from_detunings(
        n_qubits,
        ghz(1.0),
        ghz(0.5),
        ghz(20.0),
        raman_detuning,
        model::optical_frequency(637.0),
        ghz(2.88),
    )
}

/// Max phase-aligned distance between the analytic propagator and numeric
/// propagation of the effective Hamiltonian (guard-padded ladder) at
/// `times`, compared on the retained `n <= n_max` block.
pub fn analytic_numeric_distance(
    n_qubits: usize,
    n_max: usize,
    eta: f64,
    delta: f64,
    times: &[f64],
    analytic_eta: f64,
    exec: Exec,
) -> Result<f64> {
    let small = HilbertLayout::qubits(n_qubits, n_max)?;
    let padded = small.with_fock_dim(small.fock_dim() + 40)?;
    let params = SimParams::new(n_qubits, eta, delta, 0.0, padded.n_max());
    let recipe = model::build_effective_hamiltonian(&params, 0.0)?;
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let t_end = sorted.last().copied().unwrap_or(0.0);
    let settings = PropagationSettings::default()
        .with_record(Record::Times(sorted.clone()))
        .with_exec(exec);
    let x0 = engine::padded_identity_columns(&small, &padded);
    let run = engine::propagate(&recipe, &Initial::Columns(x0), 0.0, t_end, &settings)?;
    let mut worst = 0.0_f64;
    for (k, &t) in sorted.iter().enumerate() {
        let numeric = engine::restrict_rows(&small, &padded, &run.snapshots[k]);
        let exact = engine::analytic_propagator(&small, analytic_eta, delta, t)?;
        worst = worst.max(linalg::phase_aligned_distance(&numeric, exact.matrix()));
    }
    Ok(worst)
}

/// Largest pairwise distance between the qubit blocks `n = 0..=5` of the
/// numerically propagated effective model (guard-padded ladder) at the
/// closure times `k = 1..=3`, and their distance from `exp(i gamma' J_x^2)`.
pub fn closure_block_spread(n_qubits: usize, eta: f64, delta: f64, exec: Exec) -> Result<(f64, f64)> {
    let small = HilbertLayout::qubits(n_qubits, 5)?;
    let padded = small.with_fock_dim(small.fock_dim() + 40)?;
    let params = SimParams::new(n_qubits, eta, delta, 0.0, padded.n_max());
    let recipe = model::build_effective_hamiltonian(&params, 0.0)?;
    let times = engine::closure_times(delta, 3);
    let mut settings = PropagationSettings::default()
        .with_record(Record::Times(times.clone()))
        .with_exec(exec);
    settings.rel_tol = 1e-12;
    settings.abs_tol = 1e-14;
    let x0 = engine::padded_identity_columns(&small, &padded);
    let run = engine::propagate(&recipe, &Initial::Columns(x0), 0.0, times[2], &settings)?;
    let mut spread = 0.0_f64;
    let mut gate_distance = 0.0_f64;
    for (k, &t) in times.iter().enumerate() {
        let u = crate::OperatorMatrix::new(small, engine::restrict_rows(&small, &padded, &run.snapshots[k]))?;
        let blocks = (0..=5)
            .map(|n| engine::reduced_qubit_propagator(&u, n))
            .collect::<Result<Vec<_>>>()?;
        let gate = protocol::jx2_gate(n_qubits, eta * eta * t / delta);
        for (i, a) in blocks.iter().enumerate() {
            gate_distance = gate_distance.max(linalg::max_diff(a.matrix(), &gate));
            for b in &blocks[i + 1..] {
                spread = spread.max(linalg::max_diff(a.matrix(), b.matrix()));
            }
        }
    }
    Ok((spread, gate_distance))
}

/// Fitted `|theta|` of the echo gate against `|gamma(t)|` at the echo closure
/// times `t_k = 4 k pi / delta`, `k = 1..=count`. Returns the worst mismatch
/// and the worst factorisation residual.
pub fn echo_angle_mismatch(eta: f64, delta: f64, count: usize) -> Result<(f64, f64)> {
    let params = SimParams::new(2, eta, delta, 0.0, 12);
    let layout = params.qubit_layout()?;
    let low = HilbertLayout::qubits(2, 3)?;
    let x0 = engine::padded_identity_columns(&low, &layout);
    let mut mismatch = 0.0_f64;
    let mut residual = 0.0_f64;
    for k in 1..=count {
        let t = 4.0 * PI * k as f64 / delta;
        let schedule = protocol::echo_schedule(t, SourceModel::Effective)?;
        let run = protocol::run_schedule(&params, &schedule, &x0, false, &[t], &PropagationSettings::default())?;
        let u = engine::restrict_rows(&low, &layout, &run.snapshots[0]);
        let u = crate::OperatorMatrix::new(low, u)?;
        let vacuum = engine::reduced_qubit_propagator(&u, 0)?;
        let (theta, res) = protocol::fit_jx2_angle(vacuum.matrix(), 2);
        for n in 1..=3 {
            let b = engine::reduced_qubit_propagator(&u, n)?;
            residual = residual.max(linalg::phase_aligned_distance(b.matrix(), vacuum.matrix()));
        }
        residual = residual.max(res);
        mismatch = mismatch.max((theta.abs() - protocol::gamma_of(t, eta, delta).abs()).abs());
    }
    Ok((mismatch, residual))
}

/// Ratio of the no-echo to echo backward-secant fidelity slopes at the gate
/// time (window `T/100`), effective model, two qubits, eta = 1.
pub fn echo_slope_ratio() -> Result<(f64, f64, f64)> {
    let eta = 1.0;
    let echo = ProtocolOptions {
        scheme: GateScheme::Echo,
        source: SourceModel::Effective,
        ..Default::default()
    };
    let single = ProtocolOptions {
        scheme: GateScheme::Single,
        ..echo.clone()
    };
    let pe = SimParams::new(2, eta, GateScheme::Echo.matched_delta(eta, 1), 0.0, 14);
    let ps = SimParams::new(2, eta, GateScheme::Single.matched_delta(eta, 1), 0.0, 14);
    let te = GateScheme::Echo.gate_time(pe.delta, 1);
    let ts = GateScheme::Single.gate_time(ps.delta, 1);
    let se = protocol::duration_slope(&pe, &echo, te, te / 100.0)?;
    let ss = protocol::duration_slope(&ps, &single, ts, ts / 100.0)?;
    Ok((ss.abs() / se.abs().max(f64::MIN_POSITIVE), se, ss))
}

/// Angular frequency of the `|0,1> <-> |1,0>` population oscillation of a
/// single Lambda system, at the Raman detuning that maximises the transfer.
/// Returns `(frequency, raman_detuning, peak_transfer)`.
pub fn raman_oscillation_frequency(base: &LambdaParams, exec: Exec) -> Result<(f64, f64, f64)> {
    let eta_far = model::far_detuned_eta(base, 0);
    let window = 3.0 * PI / eta_far;
    let transfer = |raman: f64, samples: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let s = &base.sites[0];
        let big = base.excited_detuning(0);
        let mut p = SimParams::new(1, 1.0, 1.0, 0.0, 1);
        p.lambda = Some(LambdaParams::from_detunings(
            1,
            s.g,
            s.omega_l,
            big,
            raman,
            base.omega_c,
            s.omega_10,
        ));
        let recipe = model::build_lambda_hamiltonian(&p)?;
        let layout = recipe.layout();
        let psi = StateVector::basis(layout, 0, 1)?;
        let settings = PropagationSettings::default()
            .with_record(Record::Uniform(samples))
            .with_exec(Exec::Sequential);
        let run = engine::propagate(&recipe, &Initial::State(psi), 0.0, window, &settings)?;
        let target = layout.index(1, 0);
        let pops = run.snapshots.iter().map(|x| x[(target, 0)].norm_sqr()).collect();
        Ok((run.times, pops))
    };
    let peak = |raman: f64| -> f64 {
        transfer(raman, 400)
            .map(|(_, p)| p.iter().fold(0.0_f64, |m, x| m.max(*x)))
            .unwrap_or(0.0)
    };
    let span = 3.0 * eta_far;
    let grid: Vec<f64> = (0..=30).map(|k| -span + 2.0 * span * k as f64 / 30.0).collect();
    let peaks = exec.map(&grid, |&r| peak(r));
    let best = (0..grid.len())
        .max_by(|&a, &b| peaks[a].total_cmp(&peaks[b]))
        .expect("non-empty grid");
    let step = grid[1] - grid[0];
    let (raman, _) = linalg::golden_min(&|r| -peak(r), grid[best] - step, grid[best] + step, 1e-6 * eta_far);
    let (times, pops) = transfer(raman, 6000)?;
    let top = pops.iter().fold(0.0_f64, |m, x| m.max(*x));
    let up = (1..pops.len())
        .find(|&k| pops[k - 1] < 0.5 * top && pops[k] >= 0.5 * top)
        .ok_or_else(|| crate::Error::PropagationFailed("no Raman transfer in the window".into()))?;
    let frac = (0.5 * top - pops[up - 1]) / (pops[up] - pops[up - 1]);
    let t_half = times[up - 1] + frac * (times[up] - times[up - 1]);
    // A sin^2 profile peaks at twice its half-rise time.
    let (t_star, p_star) = times
        .iter()
        .zip(&pops)
        .filter(|(t, _)| **t >= 1.5 * t_half && **t <= 2.5 * t_half)
        .fold((2.0 * t_half, 0.0_f64), |best, (t, p)| if *p > best.1 { (*t, *p) } else { best });
    Ok((PI / t_star, raman, p_star))
}

/// `1 - |<psi_eff(t)|psi_full(t)>|^2` from `|0...0, 0>` at the read-out times
/// `Omega t = 4 n pi` up to `t_end`, where the drive frame is the identity.
pub fn rwa_readout_infidelity(params: &SimParams, t_end: f64, exec: Exec) -> Result<Vec<(f64, f64)>> {
    let step = 4.0 * PI / params.omega;
    let times: Vec<f64> = (1..)
        .map(|n| n as f64 * step)
        .take_while(|t| *t <= t_end * (1.0 + 1e-12))
        .collect();
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let full = model::build_driven_hamiltonian(params, params.phi)?;
    let ideal = model::build_effective_hamiltonian(params, params.phi)?;
    let psi = StateVector::basis(full.layout(), 0, 0)?;
    let settings = PropagationSettings::for_params(params)
        .with_record(Record::Times(times.clone()))
        .with_exec(exec);
    let t1 = *times.last().expect("non-empty");
    let a = engine::propagate(&full, &Initial::State(psi.clone()), 0.0, t1, &settings)?;
    let b = engine::propagate(&ideal, &Initial::State(psi), 0.0, t1, &settings)?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let overlap = (b.snapshots[k].adjoint() * &a.snapshots[k])[(0, 0)];
            (t, 1.0 - overlap.norm_sqr())
        })
        .collect())
}

fn full_checks(opts: &ValidationOptions, out: &mut Vec<Check>) {
    let eta = mhz(50.0);

    match protocol::run_ghz_protocol(&preset_params(4, 24), &ProtocolOptions::default()) {
        Ok(r) => {
            out.push(check(
                "full model N=4 GHZ fidelity",
                r.final_fidelity,
                Bound::AtLeast(0.97),
                format!("xi = {:.4e}", r.xi.unwrap_or(0.0)),
            ));
            let bound = 2.0 * r.xi.unwrap_or(0.0) + 0.01;
            match rwa_readout_infidelity(&preset_params(4, 24), r.gate_time, opts.exec) {
                Ok(v) => {
                    let worst = v.iter().fold(0.0_f64, |m, (_, x)| m.max(*x));
                    out.push(check(
                        "full model N=4 infidelity at Omega t = 4 n pi",
                        worst,
                        Bound::AtMost(bound),
                        format!("{} read-out times, bound 2 xi + 0.01", v.len()),
                    ));
                }
                Err(e) => out.push(errored("full model N=4 infidelity at Omega t = 4 n pi", e)),
            }
        }
        Err(e) => out.push(errored("full model N=4 GHZ fidelity", e)),
    }

    let ratios = [2.0, 4.0, 6.0, 8.0, 10.0];
    let infid = opts.exec.try_map(&ratios, |&r| {
        let p = SimParams::new(2, eta, 2.0 * eta, 2.0 * eta * r, 16);
        protocol::run_ghz_protocol(&p, &ProtocolOptions::default()).map(|x| 1.0 - x.final_fidelity)
    });
    match infid {
        Ok(v) => {
            let monotone = v.windows(2).all(|w| w[1] < w[0]);
            let consecutive: Vec<f64> = v.windows(2).map(|w| w[0] / w[1]).collect();
            let worst = consecutive
                .iter()
                .copied()
                .find(|x| !(2.0..=8.0).contains(x))
                .unwrap_or(consecutive[0]);
            out.push(check(
                "Omega scaling consecutive ratios",
                if monotone { worst } else { f64::NAN },
                Bound::Within(2.0, 8.0),
                format!("ratios {consecutive:.3?}"),
            ));
            let doubling = [v[0] / v[1], v[1] / v[3]];
            let outside = doubling
                .iter()
                .copied()
                .find(|x| !(2.0..=8.0).contains(x))
                .unwrap_or(doubling[0]);
            out.push(check(
                "Omega doubling (2 -> 4 -> 8) infidelity ratio",
                outside,
                Bound::Within(2.0, 8.0),
                format!("ratios {doubling:.3?}"),
            ));
        }
        Err(e) => out.push(errored("Omega scaling consecutive ratios", e)),
    }

    let spread = |source: SourceModel, params: SimParams| -> Result<f64> {
        let levels: Vec<usize> = (0..=5).collect();
        let f = opts.exec.try_map(&levels, |&n| {
            let o = ProtocolOptions {
                source,
                initial_fock: n,
                ..Default::default()
            };
            protocol::gate_fidelity(&params, &o, 2.0 * PI / params.delta)
        })?;
        let max = f.iter().fold(f64::MIN, |m, x| m.max(*x));
        let min = f.iter().fold(f64::MAX, |m, x| m.min(*x));
        Ok(max - min)
    };
    match spread(SourceModel::Driven, preset_params(4, 30)) {
        Ok(s) => out.push(check("thermal spread n=0..5, full model", s, Bound::AtMost(5e-3), "")),
        Err(e) => out.push(errored("thermal spread n=0..5, full model", e)),
    }

    match protocol::dyson_infidelity_oracle(&preset_params(4, 16), 10.0, NeglectedPart::SigmaY) {
        Ok(v) => out.push(check(
            "Dyson oracle N=4 at commensurate time",
            v,
            Bound::AtMost(1e-3),
            "second order in the sigma_y remainder",
        )),
        Err(e) => out.push(errored("Dyson oracle N=4 at commensurate time", e)),
    }

    match raman_oscillation_frequency(&preset_lambda(1, 0.0), opts.exec) {
        Ok((w, raman, peak)) => {
            let mut p = SimParams::new(1, 1.0, 1.0, 0.0, 1);
            p.lambda = Some(preset_lambda(1, raman));
            let eta_eff = model::effective_eta(&p).map(|v| v[0]).unwrap_or(f64::NAN);
            out.push(check(
                "adiabatic elimination: oscillation / (2 eta)",
                w / (2.0 * eta_eff),
                Bound::Within(0.95, 1.05),
                format!("omega = {w:.6}, eta = {eta_eff:.6}, peak transfer {peak:.4}"),
            ));
        }
        Err(e) => out.push(errored("adiabatic elimination", e)),
    }
}

/// Run the suite. Every entry reports its measured residual.
pub fn run_checks(opts: &ValidationOptions) -> Vec<Check> {
    let full = opts.level == Level::Full;
    let mut out = Vec::new();
    let (eta, delta) = (1.0, 2.0);

    let times: Vec<f64> = (0..20)
        .map(|k| low_discrepancy(k + opts.seed) * 4.0 * PI / delta)
        .collect();
    let sizes: &[usize] = if full { &[1, 2, 3] } else { &[1, 2] };
    for &n in sizes {
        let name = format!("analytic vs numeric propagator N={n}");
        match analytic_numeric_distance(n, 10, eta, delta, &times, eta * opts.tamper_eta, opts.exec) {
            Ok(d) => out.push(check(&name, d, Bound::AtMost(1e-6), "n_max = 10, 20 times")),
            Err(e) => out.push(errored(&name, e)),
        }
    }

    let p = SimParams {
        phi: 0.4,
        ..SimParams::new(2, 0.3, 0.7, 2.1, 4)
    };
    let decomposition = (|| -> Result<f64> {
        let h2 = model::build_rotated_hamiltonian(&p, p.phi)?;
        let h3 = model::build_effective_hamiltonian(&p, p.phi)?;
        let hn = model::build_neglected_terms(&p, p.phi)?;
        Ok((0..50)
            .map(|k| {
                let t = 20.0 * low_discrepancy(k);
                (&(&h2.eval(t) - &h3.eval(t)) - &hn.eval(t)).max_abs()
            })
            .fold(0.0, f64::max))
    })();
    match decomposition {
        Ok(d) => out.push(check("H_2 = H_3 + H_n", d, Bound::AtMost(1e-12), "50 times")),
        Err(e) => out.push(errored("H_2 = H_3 + H_n", e)),
    }

    let frame = (|| -> Result<(f64, f64)> {
        let t = 3.0;
        let s = PropagationSettings::default().with_exec(opts.exec);
        let u1 = engine::propagate_unitary(&model::build_driven_hamiltonian(&p, p.phi)?, 0.0, t, &s)?;
        let u2 = engine::propagate_unitary(&model::build_rotated_hamiltonian(&p, p.phi)?, 0.0, t, &s)?;
        let jx = hilbert::collective_jx(&u1.layout())?;
        let ux = linalg::exp_hermitian(jx.matrix(), -I * (p.omega * t));
        let d = linalg::max_diff(u1.matrix(), &(ux * u2.matrix()));
        let defect = linalg::unitarity_defect(u1.matrix()).max(linalg::unitarity_defect(u2.matrix()));
        Ok((d, defect))
    })();
    match frame {
        Ok((d, defect)) => {
            out.push(check("frame equivalence U_1 = e^{-i Omega Jx t} U_2", d, Bound::AtMost(1e-7), ""));
            out.push(check("unitarity of numeric propagators", defect, Bound::AtMost(1e-8), ""));
        }
        Err(e) => out.push(errored("frame equivalence", e)),
    }

    let hermitian = (|| -> Result<f64> {
        let mut q = p.clone();
        q.lambda = Some(preset_lambda(2, 0.7));
        let recipes = [
            model::build_raman_hamiltonian(&q, q.phi)?,
            model::build_driven_hamiltonian(&q, q.phi)?,
            model::build_effective_hamiltonian(&q, q.phi)?,
            model::build_rotated_hamiltonian(&q, q.phi)?,
            model::build_neglected_terms(&q, q.phi)?,
            model::build_lambda_hamiltonian(&q)?,
        ];
        Ok(recipes
            .iter()
            .flat_map(|r| (0..10).map(move |k| r.hermiticity_defect(7.0 * low_discrepancy(k))))
            .fold(0.0, f64::max))
    })();
    match hermitian {
        Ok(d) => out.push(check("Hermiticity of every Hamiltonian", d, Bound::AtMost(1e-12), "relative")),
        Err(e) => out.push(errored("Hermiticity of every Hamiltonian", e)),
    }

    match closure_block_spread(if full { 3 } else { 2 }, eta, delta, opts.exec) {
        Ok((spread, gate)) => {
            out.push(check("closure blocks n=0..5 pairwise", spread, Bound::AtMost(1e-8), "k = 1..3"));
            out.push(check("closure blocks vs exp(i gamma' Jx^2)", gate, Bound::AtMost(1e-8), "k = 1..3"));
        }
        Err(e) => out.push(errored("closure blocks", e)),
    }

    let conservation = (|| -> Result<f64> {
        let q = SimParams::new(3, eta, delta, 0.0, 8);
        let r = model::build_effective_hamiltonian(&q, 0.0)?;
        let l = r.layout();
        let mut amps = nalgebra::DVector::from_fn(8, |i, _| C64::new(1.0 + i as f64, 0.5 * i as f64));
        amps /= C64::from(amps.norm());
        let spin = hilbert::SpinState::new(3, amps)?;
        let psi = StateVector::product(&spin, l, 0)?;
        let s = PropagationSettings::default().with_record(Record::Uniform(8));
        let run = engine::propagate(&r, &Initial::State(psi), 0.0, 4.0, &s)?;
        let proj = engine::jx_projectors(3);
        let pops = |x: &DMatrix<C64>| -> Vec<f64> {
            let rho = hilbert::trace_out_cavity(&l, x);
            proj.iter().map(|(_, p)| (p * &rho).trace().re).collect()
        };
        let p0 = pops(&run.snapshots[0]);
        Ok(run
            .snapshots
            .iter()
            .flat_map(|x| pops(x).into_iter().zip(p0.clone()).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max))
    })();
    match conservation {
        Ok(d) => out.push(check("Jx populations conserved", d, Bound::AtMost(1e-8), "N = 3")),
        Err(e) => out.push(errored("Jx populations conserved", e)),
    }

    let ghz_sizes: &[usize] = if full { &[2, 3, 4] } else { &[2, 3] };
    for &n in ghz_sizes {
        let name = format!("GHZ fidelity, effective model N={n}");
        let opts_e = ProtocolOptions {
            source: SourceModel::Effective,
            ..Default::default()
        };
        match protocol::run_ghz_protocol(&preset_params(n, 24), &opts_e) {
            Ok(r) => {
                out.push(check(&name, r.final_fidelity, Bound::AtLeast(1.0 - 1e-6), ""));
                let purity = r
                    .single_qubit_purity
                    .iter()
                    .fold(0.0_f64, |m, x| m.max((x - 0.5).abs()));
                out.push(check(
                    &format!("single-qubit purity 1/2, N={n}"),
                    purity,
                    Bound::AtMost(1e-6),
                    "deviation from 1/2",
                ));
            }
            Err(e) => out.push(errored(&name, e)),
        }
    }

    let thermal = (|| -> Result<f64> {
        let mut cold = preset_params(2, 30);
        let o = ProtocolOptions {
            source: SourceModel::Effective,
            ..Default::default()
        };
        let f0 = protocol::run_ghz_protocol(&cold, &o)?.final_fidelity;
        cold.n_bar = 1.0;
        let f1 = protocol::run_ghz_protocol(&cold, &o)?.final_fidelity;
        Ok((f0 - f1).abs())
    })();
    match thermal {
        Ok(d) => out.push(check("thermal n_bar=1 vs 0, effective model", d, Bound::AtMost(1e-6), "")),
        Err(e) => out.push(errored("thermal n_bar=1 vs 0, effective model", e)),
    }

    match echo_angle_mismatch(0.25, 2.0, if full { 10 } else { 3 }) {
        Ok((m, res)) => {
            out.push(check("echo |theta| vs |gamma|", m, Bound::AtMost(1e-4), "echo closure times"));
            out.push(check("echo gate form exp(i theta Jx^2)", res, Bound::AtMost(1e-6), "phase-aligned"));
        }
        Err(e) => out.push(errored("echo |theta| vs |gamma|", e)),
    }

    match echo_slope_ratio() {
        Ok((ratio, se, ss)) => out.push(check(
            "echo slope reduction",
            ratio,
            Bound::AtLeast(10.0),
            format!("echo {se:.3e}, single {ss:.3e} per ns"),
        )),
        Err(e) => out.push(errored("echo slope reduction", e)),
    }

    match protocol::dyson_infidelity_oracle(&preset_params(1, 12), 10.0, NeglectedPart::SigmaY) {
        Ok(v) => out.push(check("Dyson oracle N=1", v.abs(), Bound::AtMost(1e-4), "")),
        Err(e) => out.push(errored("Dyson oracle N=1", e)),
    }

    let budget = (|| -> Result<(f64, f64)> {
        let eta = mhz(50.0);
        let mut q = preset_params(4, 12);
        q.lambda = Some(preset_lambda(4, 2.0 * eta));
        let loss = LossParams {
            gamma0: ghz(0.083),
            quality_factor: 1e9,
            wavelength_nm: Some(637.0),
        };
        let b = budget::decoherence_budget(&q, &loss)?;
        let eta_err = (linalg::round_sig(b.eta_far_detuned / (2.0 * PI), 3) - 0.05).abs();
        let t_err = (linalg::round_sig(b.gate_time, 3) - 10.0).abs();
        Ok((eta_err, t_err))
    })();
    match budget {
        Ok((a, b)) => out.push(check("budget eta and T", a.max(b), Bound::AtMost(1e-12), "3 significant figures")),
        Err(e) => out.push(errored("budget eta and T", e)),
    }

    if full {
        full_checks(opts, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_discrepancy_covers_interval() {
        let mut v: Vec<f64> = (0..20).map(low_discrepancy).collect();
        v.sort_by(f64::total_cmp);
        assert!(v.windows(2).all(|w| w[1] - w[0] < 0.15));
        assert!(v.iter().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn tampered_eta_is_detected() {
        let times: Vec<f64> = (0..3).map(|k| low_discrepancy(k) * 2.0 * PI).collect();
        let ok = analytic_numeric_distance(2, 6, 1.0, 2.0, &times, 1.0, Exec::Parallel).unwrap();
        let bad = analytic_numeric_distance(2, 6, 1.0, 2.0, &times, 1.01, Exec::Parallel).unwrap();
        assert!(ok <= 1e-6, "{ok}");
        assert!(bad > 1e-4, "{bad}");
    }

    #[test]
    fn preset_matches_reference_ratios() {
        let p = preset_params(4, 12);
        assert!((p.delta / p.eta - 2.0).abs() < 1e-15);
        assert!((p.omega / p.delta - 6.0).abs() < 1e-12);
        let lp = preset_lambda(1, 0.0);
        assert!((model::far_detuned_eta(&lp, 0) - mhz(50.0)).abs() < 1e-12);
    }
}
