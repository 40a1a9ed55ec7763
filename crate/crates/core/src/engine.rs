//! Time-ordered propagation of a [`HamiltonianRecipe`] and the closed-form
//! propagator of the effective Molmer-Sorensen Hamiltonian.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hilbert::{self, DensityMatrix, HilbertLayout, OperatorMatrix, StateVector};
use crate::linalg::{self, I, ONE, ZERO};
use crate::model::{Envelope, HamiltonianRecipe, SimParams};

/// Norm deviation above which a run is marked failed.
pub const NORM_FAIL_TOL: f64 = 1e-8;
/// Population of the highest retained Fock level that raises the truncation alarm.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Off-block amplitude tolerated by [`reduced_qubit_propagator`].
pub const BLOCK_TOL: f64 = 1e-6;
/// Columns integrated together as one work item.
pub const CHUNK_COLS: usize = 8;

/// Which times to keep snapshots at.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Record {
    /// Only the final time.
    #[default]
    Final,
    /// `n + 1` equally spaced points from `t0` to `t1` inclusive.
    Uniform(usize),
    /// Explicit ascending times inside `[t0, t1]`.
    Times(Vec<f64>),
}

/// Integrator controls. The scheme is classical RK4 with step doubling:
/// each step is compared against two half steps, accepted when the scaled
/// difference is below one, and Richardson-extrapolated.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step in ns; derived from the recipe when `None`.
    pub max_step: Option<f64>,
    pub record: Record,
    pub exec: Exec,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: None,
            record: Record::Final,
            exec: Exec::default(),
        }
    }
}

impl PropagationSettings {
    /// Defaults with `max_step` resolving the fastest scale of `params`:
    /// a fortieth of the drive period, or of the detuning period without drive.
    pub fn for_params(params: &SimParams) -> Self {
        let w = if params.omega > 0.0 {
            params.omega
        } else {
            params.delta
        };
        Self {
            max_step: Some(2.0 * PI / w / 40.0),
            ..Self::default()
        }
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = Some(max_step);
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: "tolerances must be finite and > 0".into(),
            });
        }
        if let Some(h) = self.max_step {
            if !ok(h) {
                return Err(Error::InvalidParameter {
                    name: "max_step",
                    reason: format!("must be finite and > 0, got {h}"),
                });
            }
        }
        Ok(())
    }
}

/// Starting point of a propagation.
#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    State(StateVector),
    Density(DensityMatrix),
    /// Full propagator.
    Identity,
    /// Arbitrary block of column vectors.
    Columns(DMatrix<C64>),
    /// Columns `Y` of a mixed state `rho = Y Y^dagger`.
    Ensemble(DMatrix<C64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    State,
    Density,
    Identity,
    Columns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub layout: HilbertLayout,
    pub times: Vec<f64>,
    /// Propagated column blocks, one per recorded time. For a density
    /// matrix the block `Y` satisfies `rho = Y Y^dagger`.
    pub snapshots: Vec<DMatrix<C64>>,
    /// `max |X^dagger X - X0^dagger X0|` per recorded time.
    pub norm_deviation: Vec<f64>,
    /// Population of Fock level `n_max` (total for states and densities,
    /// worst column otherwise).
    pub top_fock_population: Vec<f64>,
    /// True when any state or density run exceeded [`TRUNCATION_TOL`].
    pub truncation_alarm: bool,
    /// True when the norm deviation exceeded [`NORM_FAIL_TOL`].
    pub failed: bool,
    /// Final propagator for [`Initial::Identity`].
    pub propagator: Option<OperatorMatrix>,
    pub unitarity_defect: Option<f64>,
    /// Accepted steps summed over column chunks.
    pub steps: usize,
    kind: Kind,
}

impl TrajectoryResult {
    pub fn final_block(&self) -> &DMatrix<C64> {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// State at snapshot `k` for state runs; its norm drift is in `norm_deviation`.
    pub fn state(&self, k: usize) -> Result<StateVector> {
        if self.kind != Kind::State {
            return Err(Error::InvalidState("trajectory does not hold a pure state".into()));
        }
        Ok(StateVector::unchecked(self.layout, self.snapshots[k].column(0).into_owned()))
    }

    /// Density matrix `X X^dagger` at snapshot `k`.
    pub fn density(&self, k: usize) -> DMatrix<C64> {
        let x = &self.snapshots[k];
        x * x.adjoint()
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.norm_deviation.iter().fold(0.0, |m, x| m.max(*x))
    }

    pub fn max_top_fock_population(&self) -> f64 {
        self.top_fock_population.iter().fold(0.0, |m, x| m.max(*x))
    }
}

/// Right-hand side `dY/dt = f(t, Y)` of a linear block ODE.
pub(crate) trait Generator: Sync {
    fn rhs(&self, t: f64, y: &DMatrix<C64>) -> DMatrix<C64>;

    fn rk4(&self, t: f64, y: &DMatrix<C64>, h: f64) -> DMatrix<C64> {
        let k1 = self.rhs(t, y);
        self.rk4_from(t, y, h, &k1)
    }

    /// Classical RK4 step given the first stage `k1 = f(t, y)`.
    fn rk4_from(&self, t: f64, y: &DMatrix<C64>, h: f64, k1: &DMatrix<C64>) -> DMatrix<C64> {
        let k2 = self.rhs(t + 0.5 * h, &(y + k1 * C64::from(0.5 * h)));
        let k3 = self.rhs(t + 0.5 * h, &(y + &k2 * C64::from(0.5 * h)));
        let k4 = self.rhs(t + h, &(y + &k3 * C64::from(h)));
        y + (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0)
    }
}

/// Recipe terms in compressed-row form.
pub(crate) struct Compiled {
    terms: Vec<(SparseTerm, Envelope)>,
    dim: usize,
}

impl Compiled {
    pub(crate) fn new(recipe: &HamiltonianRecipe) -> Self {
        let dim = recipe.layout().dim();
        let terms = recipe
            .terms()
            .iter()
            .map(|term| {
                let mut coo = CooMatrix::new(dim, dim);
                for j in 0..dim {
                    for i in 0..dim {
                        let z = term.op[(i, j)];
                        if z != ZERO {
                            coo.push(i, j, z);
                        }
                    }
                }
                (SparseTerm::new(CsrMatrix::from(&coo)), term.envelope.clone())
            })
            .collect();
        Self { terms, dim }
    }

    /// Accumulate `-i H(t) y` into `out`.
    pub(crate) fn apply_into(&self, t: f64, y: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        for (op, env) in &self.terms {
            let alpha = -I * env.eval(t);
            if alpha != ZERO {
                csr_gemm_acc(op, alpha, y, out);
            }
        }
    }
}

/// `out += alpha * a * y` for column-major dense `y` and `out`.
fn csr_gemm_acc(a: &SparseTerm, alpha: C64, y: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    let csr = &a.csr;
    let (offsets, indices) = (csr.row_offsets(), csr.col_indices());
    let n = y.nrows();
    let ys = y.as_slice();
    let os = out.as_mut_slice();
    let mut first = 0;
    while first < y.ncols() {
        let width = (y.ncols() - first).min(LANES);
        for r in 0..csr.nrows() {
            let (lo, hi) = (offsets[r], offsets[r + 1]);
            if lo == hi {
                continue;
            }
            let mut acc = [ZERO; LANES];
            match &a.real {
                Some(values) => {
                    for k in lo..hi {
                        let (v, c) = (values[k], indices[k]);
                        for (j, slot) in acc[..width].iter_mut().enumerate() {
                            *slot += ys[(first + j) * n + c] * v;
                        }
                    }
                }
                None => {
                    let values = csr.values();
                    for k in lo..hi {
                        let (v, c) = (values[k], indices[k]);
                        for (j, slot) in acc[..width].iter_mut().enumerate() {
                            *slot += ys[(first + j) * n + c] * v;
                        }
                    }
                }
            }
            for (j, z) in acc[..width].iter().enumerate() {
                os[(first + j) * n + r] += alpha * z;
            }
        }
        first += width;
    }
}

const LANES: usize = 8;

pub(crate) struct SparseTerm {
    csr: CsrMatrix<C64>,
    /// Real parts when every stored value is real.
    real: Option<Vec<f64>>,
}

impl SparseTerm {
    fn new(csr: CsrMatrix<C64>) -> Self {
        let real = csr
            .values()
            .iter()
            .all(|z| z.im == 0.0)
            .then(|| csr.values().iter().map(|z| z.re).collect());
        Self { csr, real }
    }
}

impl Generator for Compiled {
    /// `-i H(t) y`.
    fn rhs(&self, t: f64, y: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.dim, y.ncols());
        self.apply_into(t, y, &mut out);
        out
    }
}

pub(crate) struct Chunk {
    pub(crate) snapshots: Vec<DMatrix<C64>>,
    pub(crate) steps: usize,
}

pub(crate) fn integrate_chunk<G: Generator>(
    sys: &G,
    y0: DMatrix<C64>,
    t0: f64,
    record: &[f64],
    max_step: f64,
    settings: &PropagationSettings,
    max_frequency: f64,
) -> Result<Chunk> {
    let span = (record.last().copied().unwrap_or(t0) - t0).abs().max(f64::MIN_POSITIVE);
    let min_step = 1e-13 * span.max(t0.abs());
    let mut t = t0;
    let mut y = y0;
    let mut h = max_step;
    let mut steps = 0;
    let mut snapshots = Vec::with_capacity(record.len());
    for &target in record {
        while target - t > 1e-14 * target.abs().max(1.0) {
            let remaining = target - t;
            let lands = h >= remaining;
            let hh = if lands { remaining } else { h };
            let k1 = sys.rhs(t, &y);
            let full = sys.rk4_from(t, &y, hh, &k1);
            let first = sys.rk4_from(t, &y, 0.5 * hh, &k1);
            let half = sys.rk4(t + 0.5 * hh, &first, 0.5 * hh);
            let diff = &half - &full;
            let scale = settings.abs_tol + settings.rel_tol * linalg::max_abs(&half);
            let err = linalg::max_abs(&diff) / scale;
            let factor = if err == 0.0 {
                4.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 4.0)
            };
            let accepted = err <= 1.0;
            if accepted {
                y = half + diff * C64::from(1.0 / 15.0);
                t = if lands { target } else { t + hh };
                steps += 1;
            }
            let proposal = (hh * factor).min(max_step);
            h = if accepted && lands {
                h.max(proposal).min(max_step)
            } else {
                proposal
            };
            if !accepted && h < min_step {
                return Err(Error::StepUnderflow {
                    time: t,
                    step: h,
                    max_frequency,
                });
            }
        }
        snapshots.push(y.clone());
    }
    Ok(Chunk { snapshots, steps })
}

fn record_times(record: &Record, t0: f64, t1: f64) -> Result<Vec<f64>> {
    let times = match record {
        Record::Final => vec![t1],
        Record::Uniform(n) => {
            let n = (*n).max(1);
            (0..=n)
                .map(|k| {
                    if k == n {
                        t1
                    } else {
                        t0 + (t1 - t0) * k as f64 / n as f64
                    }
                })
                .collect()
        }
        Record::Times(ts) => {
            if ts.is_empty() {
                return Err(Error::InvalidSchedule("empty record list".into()));
            }
            if ts.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::InvalidSchedule("record times must be ascending".into()));
            }
            if ts[0] < t0 || ts[ts.len() - 1] > t1 {
                return Err(Error::InvalidSchedule(format!(
                    "record times must lie in [{t0}, {t1}]"
                )));
            }
            ts.clone()
        }
    };
    Ok(times)
}

fn initial_block(layout: &HilbertLayout, initial: &Initial) -> Result<(DMatrix<C64>, Kind)> {
    let dim = layout.dim();
    let check = |l: HilbertLayout| {
        if l != *layout {
            Err(Error::DimensionMismatch {
                expected: dim,
                got: l.dim(),
            })
        } else {
            Ok(())
        }
    };
    match initial {
        Initial::State(psi) => {
            check(psi.layout())?;
            Ok((
                DMatrix::from_column_slice(dim, 1, psi.amplitudes().as_slice()),
                Kind::State,
            ))
        }
        Initial::Density(rho) => {
            check(rho.layout())?;
            let (values, vectors) = linalg::eigh(rho.matrix());
            let keep: Vec<usize> = (0..values.len()).filter(|&k| values[k] > 1e-15).collect();
            let mut y = DMatrix::zeros(dim, keep.len());
            for (c, &k) in keep.iter().enumerate() {
                let w = values[k].sqrt();
                y.set_column(c, &(vectors.column(k) * C64::from(w)));
            }
            Ok((y, Kind::Density))
        }
        Initial::Identity => Ok((linalg::identity(dim), Kind::Identity)),
        Initial::Columns(x) | Initial::Ensemble(x) => {
            if x.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: x.nrows(),
                });
            }
            let kind = if matches!(initial, Initial::Columns(_)) {
                Kind::Columns
            } else {
                Kind::Density
            };
            Ok((x.clone(), kind))
        }
    }
}

fn top_fock_population(layout: &HilbertLayout, x: &DMatrix<C64>, kind: Kind) -> f64 {
    let top = layout.n_max();
    let per_col = x.column_iter().map(|col| {
        (0..layout.spin_dim())
            .map(|s| col[layout.index(s, top)].norm_sqr())
            .sum::<f64>()
    });
    match kind {
        Kind::State | Kind::Density => per_col.sum(),
        Kind::Identity | Kind::Columns => per_col.fold(0.0, f64::max),
    }
}

fn gram_deviation(x: &DMatrix<C64>, gram0: &DMatrix<C64>) -> f64 {
    linalg::max_diff(&(x.adjoint() * x), gram0)
}

/// Solve `i dX/dt = H(t) X` from `t0` to `t1`.
pub fn propagate(
    recipe: &HamiltonianRecipe,
    initial: &Initial,
    t0: f64,
    t1: f64,
    settings: &PropagationSettings,
) -> Result<TrajectoryResult> {
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInterval { t0, t1 });
    }
    settings.validate()?;
    let layout = recipe.layout();
    let (block, kind) = initial_block(&layout, initial)?;
    let times = record_times(&settings.record, t0, t1)?;
    let max_frequency = recipe.max_frequency();
    let max_step = settings.max_step.unwrap_or_else(|| {
        if max_frequency > 0.0 {
            2.0 * PI / max_frequency / 40.0
        } else {
            t1 - t0
        }
    });

    let sys = Compiled::new(recipe);
    let ncols = block.ncols();
    let starts: Vec<usize> = (0..ncols).step_by(CHUNK_COLS).collect();
    let chunks = settings.exec.try_map(&starts, |&c0| {
        let width = CHUNK_COLS.min(ncols - c0);
        let y0 = block.columns(c0, width).into_owned();
        integrate_chunk(&sys, y0, t0, &times, max_step, settings, max_frequency)
    })?;

    let dim = layout.dim();
    let mut snapshots = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut x = DMatrix::zeros(dim, ncols);
        for (chunk, &c0) in chunks.iter().zip(&starts) {
            let part = &chunk.snapshots[k];
            x.columns_mut(c0, part.ncols()).copy_from(part);
        }
        snapshots.push(x);
    }
    let steps = chunks.iter().map(|c| c.steps).sum();

    let gram0 = block.adjoint() * &block;
    let norm_deviation: Vec<f64> = snapshots.iter().map(|x| gram_deviation(x, &gram0)).collect();
    let top: Vec<f64> = snapshots
        .iter()
        .map(|x| top_fock_population(&layout, x, kind))
        .collect();
    let truncation_alarm =
        matches!(kind, Kind::State | Kind::Density) && top.iter().any(|p| *p > TRUNCATION_TOL);
    let failed = norm_deviation.iter().any(|d| *d > NORM_FAIL_TOL);
    let (propagator, unitarity_defect) = if kind == Kind::Identity {
        let u = snapshots.last().expect("snapshot").clone();
        let defect = linalg::unitarity_defect(&u);
        (Some(OperatorMatrix::new(layout, u)?), Some(defect))
    } else {
        (None, None)
    };

    Ok(TrajectoryResult {
        layout,
        times,
        snapshots,
        norm_deviation,
        top_fock_population: top,
        truncation_alarm,
        failed,
        propagator,
        unitarity_defect,
        steps,
        kind,
    })
}

/// Full propagator over `[t0, t1]`.
pub fn propagate_unitary(
    recipe: &HamiltonianRecipe,
    t0: f64,
    t1: f64,
    settings: &PropagationSettings,
) -> Result<OperatorMatrix> {
    let settings = settings.clone().with_record(Record::Final);
    let run = propagate(recipe, &Initial::Identity, t0, t1, &settings)?;
    if run.failed {
        return Err(Error::PropagationFailed(format!(
            "unitarity defect {:.3e} exceeds {NORM_FAIL_TOL:e}",
            run.max_norm_deviation()
        )));
    }
    Ok(run.propagator.expect("identity run keeps the propagator"))
}

/// `A(t) = (eta^2/delta) [ (e^{i delta t} - 1)/(i delta) - t ]`.
pub fn analytic_a(t: f64, eta: f64, delta: f64) -> C64 {
    let osc = (C64::from_polar(1.0, delta * t) - ONE) / (I * delta);
    (osc - t) * (eta * eta / delta)
}

/// `B(t) = i (eta/delta) (e^{-i delta t} - 1)`.
pub fn analytic_b(t: f64, eta: f64, delta: f64) -> C64 {
    I * (eta / delta) * (C64::from_polar(1.0, -delta * t) - ONE)
}

/// `T_k = 2 k pi / delta` for `k = 1..=k_max`.
pub fn closure_times(delta: f64, k_max: usize) -> Vec<f64> {
    (1..=k_max).map(|k| 2.0 * PI * k as f64 / delta).collect()
}

/// Distinct eigenvalues of the collective spin operator `J_x` on `n` qubits
/// with their spectral projectors.
pub fn jx_projectors(n_sites: usize) -> Vec<(f64, DMatrix<C64>)> {
    let jx = hilbert::spin_jx(n_sites);
    let (values, vectors) = linalg::eigh(&jx);
    let dim = jx.nrows();
    let mut out: Vec<(f64, DMatrix<C64>)> = Vec::new();
    for (k, &lam) in values.iter().enumerate() {
        let m = (2.0 * lam).round() / 2.0;
        let v = vectors.column(k);
        let proj = &v * v.adjoint();
        debug_assert_eq!(proj.nrows(), dim);
        match out.last_mut() {
            Some((last, p)) if *last == m => *p += proj,
            _ => out.push((m, proj)),
        }
    }
    out
}

/// Matrix of `exp(x a)` on `p` Fock levels (upper triangular):
/// `<n| e^{x a} |n+k> = x^k / k! * sqrt((n+k)!/n!)`.
fn exp_annihilation(x: C64, p: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(p, p);
    for n in 0..p {
        let mut c = ONE;
        m[(n, n)] = c;
        for k in 1..p - n {
            c = c * x * ((n + k) as f64).sqrt() / k as f64;
            m[(n, n + k)] = c;
        }
    }
    m
}

/// Guard levels added above the retained ladder when evaluating the
/// displacement factors, so the truncated product matches the infinite one.
fn pad_levels(max_displacement: f64) -> usize {
    40 + (8.0 * max_displacement * max_displacement).ceil() as usize
}

/// `U(t) = exp[-i A J_x^2] exp[-i B a J_x] exp[-i B^* a^dagger J_x]` on a
/// qubit layout, evaluated on each `J_x` eigenspace and restricted to the
/// retained Fock levels.
pub fn analytic_propagator(
    layout: &HilbertLayout,
    eta: f64,
    delta: f64,
    t: f64,
) -> Result<OperatorMatrix> {
    layout.require_qubits()?;
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "detuning must be finite and nonzero".into(),
        });
    }
    let a = analytic_a(t, eta, delta);
    let b = analytic_b(t, eta, delta);
    let f = layout.fock_dim();
    let s = layout.spin_dim();
    let projectors = jx_projectors(layout.n_sites());
    let m_max = layout.n_sites() as f64 / 2.0;
    let p = f + pad_levels(b.norm() * m_max);

    let mut u = DMatrix::zeros(s * f, s * f);
    for (m, proj) in &projectors {
        let phase = (-I * a * m * m).exp();
        let left = exp_annihilation(-I * b * *m, p);
        let right = exp_annihilation(-I * b.conj() * *m, p).transpose();
        let d = (left * right).view((0, 0), (f, f)).map(|z| z * phase);
        u += linalg::kron(proj, &d);
    }
    OperatorMatrix::new(*layout, u)
}

/// Spin-space block of `u` on cavity sector `|fock_n>`; requires `u` to be
/// block diagonal in the Fock index.
pub fn reduced_qubit_propagator(u: &OperatorMatrix, fock_n: usize) -> Result<OperatorMatrix> {
    let layout = u.layout();
    let f = layout.fock_dim();
    if fock_n >= f {
        return Err(Error::InvalidParameter {
            name: "fock_n",
            reason: format!("level {fock_n} outside a ladder of {f} levels"),
        });
    }
    let m = u.matrix();
    let mut leakage = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if layout.fock_of(i) != layout.fock_of(j) {
                leakage = leakage.max(m[(i, j)].norm());
            }
        }
    }
    if leakage > BLOCK_TOL {
        return Err(Error::NotBlockDiagonal { leakage });
    }
    let s = layout.spin_dim();
    let block = DMatrix::from_fn(s, s, |r, c| m[(layout.index(r, fock_n), layout.index(c, fock_n))]);
    let spin_layout = HilbertLayout::spin_only(layout.n_sites(), layout.site_dim())?;
    OperatorMatrix::new(spin_layout, block)
}

/// Identity columns of `small` embedded in the larger ladder of `padded`.
pub fn padded_identity_columns(small: &HilbertLayout, padded: &HilbertLayout) -> DMatrix<C64> {
    assert_eq!(small.spin_dim(), padded.spin_dim(), "spin spaces differ");
    let mut x = DMatrix::zeros(padded.dim(), small.dim());
    for col in 0..small.dim() {
        x[(padded.index(small.spin_of(col), small.fock_of(col)), col)] = ONE;
    }
    x
}

/// Rows of a padded column block that belong to the retained ladder of `small`.
pub fn restrict_rows(small: &HilbertLayout, padded: &HilbertLayout, x: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(small.dim(), x.ncols(), |r, c| {
        x[(padded.index(small.spin_of(r), small.fock_of(r)), c)]
    })
}
