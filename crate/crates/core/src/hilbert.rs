//! Tensor-product Hilbert spaces of N two- or three-level sites and one
//! truncated bosonic mode.
//!
//! Basis ordering is fixed: `site 1 ⊗ … ⊗ site N ⊗ cavity`, with site 1 the
//! slowest index and the Fock index the fastest. A composite index is
//! therefore `spin_index * fock_dim + n`, and within `spin_index` the bit (or
//! trit) of site 1 is the most significant digit.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::linalg::{self, ONE, ZERO};

/// Hard cap on the composite dimension of any dense object.
pub const MAX_DIM: usize = 4096;

/// Tolerance used when a Hermiticity flag is asserted.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance on state normalisation.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertLayout {
    n_sites: usize,
    site_dim: usize,
    fock_dim: usize,
}

impl HilbertLayout {
    pub fn new(n_sites: usize, site_dim: usize, fock_dim: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidLayout("n_sites must be at least 1".into()));
        }
        if site_dim != 2 && site_dim != 3 {
            return Err(Error::InvalidLayout(format!(
                "site_dim must be 2 or 3, got {site_dim}"
            )));
        }
        if fock_dim < 2 {
            return Err(Error::InvalidLayout(format!("fock_dim must be at least 2, got {fock_dim}")));
        }
        let dim = site_dim
            .checked_pow(n_sites as u32)
            .and_then(|s| s.checked_mul(fock_dim))
            .unwrap_or(usize::MAX);
        if dim > MAX_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_DIM });
        }
        Ok(Self {
            n_sites,
            site_dim,
            fock_dim,
        })
    }

    /// Spin register alone, carried as a one-level cavity; used for reduced blocks.
    pub fn spin_only(n_sites: usize, site_dim: usize) -> Result<Self> {
        let mut layout = Self::new(n_sites, site_dim, 2)?;
        layout.fock_dim = 1;
        Ok(layout)
    }

    /// `n` qubits and a Fock ladder truncated at `n_max`.
    pub fn qubits(n: usize, n_max: usize) -> Result<Self> {
        Self::new(n, 2, n_max + 1)
    }

    /// `n` three-level (|0>, |1>, |e>) sites and a Fock ladder truncated at `n_max`.
    pub fn lambda(n: usize, n_max: usize) -> Result<Self> {
        Self::new(n, 3, n_max + 1)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn n_max(&self) -> usize {
        self.fock_dim - 1
    }

    pub fn spin_dim(&self) -> usize {
        self.site_dim.pow(self.n_sites as u32)
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.fock_dim
    }

    pub fn is_qubit(&self) -> bool {
        self.site_dim == 2
    }

    /// Same sites, different Fock truncation.
    pub fn with_fock_dim(&self, fock_dim: usize) -> Result<Self> {
        Self::new(self.n_sites, self.site_dim, fock_dim)
    }

    pub fn index(&self, spin: usize, n: usize) -> usize {
        debug_assert!(spin < self.spin_dim() && n < self.fock_dim);
        spin * self.fock_dim + n
    }

    pub fn fock_of(&self, index: usize) -> usize {
        index % self.fock_dim
    }

    pub fn spin_of(&self, index: usize) -> usize {
        index / self.fock_dim
    }

    pub fn require_qubits(&self) -> Result<()> {
        if self.site_dim == 2 {
            Ok(())
        } else {
            Err(Error::NotQubitLayout(self.site_dim))
        }
    }

    pub fn require_lambda(&self) -> Result<()> {
        if self.site_dim == 3 {
            Ok(())
        } else {
            Err(Error::NotLambdaLayout(self.site_dim))
        }
    }
}

/// Dense operator on the composite space described by `layout`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn new(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: matrix.nrows(),
            });
        }
        Ok(Self { layout, matrix })
    }

    /// Construct and verify Hermiticity to [`HERMITIAN_TOL`] relative to the largest entry.
    pub fn hermitian(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(layout, matrix)?;
        let scale = linalg::max_abs(&op.matrix).max(1.0);
        let defect = linalg::hermiticity_defect(&op.matrix);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::InvalidState(format!(
                "operator asserted Hermitian but |M - M^dagger| = {defect:.3e}"
            )));
        }
        Ok(op)
    }

    pub fn zeros(layout: HilbertLayout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(layout: HilbertLayout) -> Self {
        let d = layout.dim();
        Self {
            layout,
            matrix: DMatrix::identity(d, d),
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            layout: self.layout,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self {
            layout: self.layout,
            matrix: self.matrix.map(|x| x * z),
        }
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self {
            layout: self.layout,
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        }
    }

    pub fn max_abs(&self) -> f64 {
        linalg::max_abs(&self.matrix)
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        linalg::max_diff(&self.matrix, &other.matrix)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        OperatorMatrix {
            layout: self.layout,
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        OperatorMatrix {
            layout: self.layout,
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.layout, rhs.layout, "layout mismatch");
        OperatorMatrix {
            layout: self.layout,
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

/// Single-site operators. Qubit basis is (|0>, |1>); the three-level basis is (|0>, |1>, |e>).
pub mod local {
    use super::*;

    fn m2(entries: [C64; 4]) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &entries)
    }

    pub fn sigma_x() -> DMatrix<C64> {
        m2([ZERO, ONE, ONE, ZERO])
    }

    pub fn sigma_y() -> DMatrix<C64> {
        m2([ZERO, -linalg::I, linalg::I, ZERO])
    }

    pub fn sigma_z() -> DMatrix<C64> {
        m2([ONE, ZERO, ZERO, -ONE])
    }

    /// `|1><0|`.
    pub fn sigma_plus() -> DMatrix<C64> {
        m2([ZERO, ZERO, ONE, ZERO])
    }

    /// `|0><1|`.
    pub fn sigma_minus() -> DMatrix<C64> {
        m2([ZERO, ONE, ZERO, ZERO])
    }

    /// `|+><-|` with `|±> = (|0> ± |1>)/sqrt 2`.
    pub fn plus_minus() -> DMatrix<C64> {
        let h = C64::new(0.5, 0.0);
        m2([h, -h, h, -h])
    }

    /// `|-><+|`.
    pub fn minus_plus() -> DMatrix<C64> {
        plus_minus().adjoint()
    }

    /// `|row><col|` on a site of dimension `dim`.
    pub fn ket_bra(dim: usize, row: usize, col: usize) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(dim, dim);
        m[(row, col)] = ONE;
        m
    }
}

/// Operator acting as `local` on `site` (1-based) of the spin register only.
pub fn spin_site_op(
    n_sites: usize,
    site_dim: usize,
    site: usize,
    local: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    if local.nrows() != site_dim || local.ncols() != site_dim {
        return Err(Error::DimensionMismatch {
            expected: site_dim,
            got: local.nrows(),
        });
    }
    let left = linalg::identity(site_dim.pow((site - 1) as u32));
    let right = linalg::identity(site_dim.pow((n_sites - site) as u32));
    Ok(linalg::kron(&linalg::kron(&left, local), &right))
}

/// `sum_j weights[j] * local_j` on the spin register, summed in site order.
pub fn spin_weighted_sum(
    n_sites: usize,
    site_dim: usize,
    local: &DMatrix<C64>,
    weights: &[f64],
) -> Result<DMatrix<C64>> {
    if weights.len() != n_sites {
        return Err(Error::DimensionMismatch {
            expected: n_sites,
            got: weights.len(),
        });
    }
    let d = site_dim.pow(n_sites as u32);
    let mut acc = DMatrix::zeros(d, d);
    for (j, &w) in weights.iter().enumerate() {
        let op = spin_site_op(n_sites, site_dim, j + 1, local)?;
        acc += op.map(|z| z * w);
    }
    Ok(acc)
}

/// `J_x = sum_j sigma_x^j / 2` on the spin register alone.
pub fn spin_jx(n_sites: usize) -> DMatrix<C64> {
    let half = local::sigma_x().map(|z| z * 0.5);
    let d = 1usize << n_sites;
    let mut acc = DMatrix::zeros(d, d);
    for j in 1..=n_sites {
        acc += spin_site_op(n_sites, 2, j, &half).expect("site in range");
    }
    acc
}

/// `local` on `site`, identity on every other site and on the cavity.
pub fn embed_site_op(
    layout: &HilbertLayout,
    site: usize,
    local: &DMatrix<C64>,
) -> Result<OperatorMatrix> {
    let spin = spin_site_op(layout.n_sites, layout.site_dim, site, local)?;
    embed_spin(layout, &spin)
}

/// `spin_op ⊗ 1_cavity`.
pub fn embed_spin(layout: &HilbertLayout, spin_op: &DMatrix<C64>) -> Result<OperatorMatrix> {
    if spin_op.nrows() != layout.spin_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.spin_dim(),
            got: spin_op.nrows(),
        });
    }
    OperatorMatrix::new(
        *layout,
        linalg::kron(spin_op, &linalg::identity(layout.fock_dim)),
    )
}

/// `1_spin ⊗ cavity_op`.
pub fn embed_cavity(layout: &HilbertLayout, cavity_op: &DMatrix<C64>) -> Result<OperatorMatrix> {
    if cavity_op.nrows() != layout.fock_dim {
        return Err(Error::DimensionMismatch {
            expected: layout.fock_dim,
            got: cavity_op.nrows(),
        });
    }
    OperatorMatrix::new(
        *layout,
        linalg::kron(&linalg::identity(layout.spin_dim()), cavity_op),
    )
}

/// Annihilation operator on a truncated ladder of `fock_dim` levels;
/// `a|n> = sqrt(n)|n-1>` and `a^dagger|n_max> = 0`.
pub fn ladder(fock_dim: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(fock_dim, fock_dim);
    for n in 1..fock_dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `(a, a^dagger)` embedded in the full space.
pub fn fock_ops(layout: &HilbertLayout) -> (OperatorMatrix, OperatorMatrix) {
    let a = embed_cavity(layout, &ladder(layout.fock_dim)).expect("cavity dimension matches");
    let a_dag = a.adjoint();
    (a, a_dag)
}

/// `J_x` in the full space, built as the ordered sum of single-site embeddings.
pub fn collective_jx(layout: &HilbertLayout) -> Result<OperatorMatrix> {
    layout.require_qubits()?;
    let half = local::sigma_x().map(|z| z * 0.5);
    let mut acc = OperatorMatrix::zeros(*layout);
    for j in 1..=layout.n_sites {
        acc = &acc + &embed_site_op(layout, j, &half)?;
    }
    Ok(acc)
}

/// Truncated Bose-Einstein weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalWeights {
    /// Renormalised weights, one per retained Fock level.
    pub weights: Vec<f64>,
    /// Probability mass above `n_max` before renormalisation.
    pub tail_mass: f64,
}

/// Maximum discarded thermal mass tolerated before asking for a larger ladder.
pub const THERMAL_TAIL_TOL: f64 = 1e-6;

pub fn thermal_weights(n_bar: f64, fock_dim: usize) -> Result<ThermalWeights> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidParameter {
            name: "n_bar",
            reason: format!("mean occupation must be finite and >= 0, got {n_bar}"),
        });
    }
    let ratio = n_bar / (n_bar + 1.0);
    let mut weights = Vec::with_capacity(fock_dim);
    let mut w = 1.0 / (n_bar + 1.0);
    for _ in 0..fock_dim {
        weights.push(w);
        w *= ratio;
    }
    let tail_mass = ratio.powi(fock_dim as i32);
    if tail_mass > THERMAL_TAIL_TOL {
        return Err(Error::ThermalTail {
            tail: tail_mass,
            fock_dim,
        });
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    Ok(ThermalWeights { weights, tail_mass })
}

/// Normalised pure state on a composite layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: HilbertLayout,
    amps: DVector<C64>,
}

impl StateVector {
    pub fn new(layout: HilbertLayout, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "state norm {norm:.12} differs from 1"
            )));
        }
        Ok(Self { layout, amps })
    }

    /// Integrated amplitudes whose norm drift is tracked by the caller.
    pub(crate) fn unchecked(layout: HilbertLayout, amps: DVector<C64>) -> Self {
        debug_assert_eq!(amps.len(), layout.dim());
        Self { layout, amps }
    }

    /// Product basis state `|spin> ⊗ |n>`.
    pub fn basis(layout: HilbertLayout, spin: usize, n: usize) -> Result<Self> {
        if spin >= layout.spin_dim() || n >= layout.fock_dim {
            return Err(Error::InvalidState(format!(
                "basis label (spin {spin}, n {n}) outside layout"
            )));
        }
        let mut amps = DVector::zeros(layout.dim());
        amps[layout.index(spin, n)] = ONE;
        Ok(Self { layout, amps })
    }

    /// `|spin_state> ⊗ |n>`.
    pub fn product(spin_state: &SpinState, layout: HilbertLayout, n: usize) -> Result<Self> {
        if spin_state.dim() != layout.spin_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.spin_dim(),
                got: spin_state.dim(),
            });
        }
        if n >= layout.fock_dim {
            return Err(Error::InvalidState(format!("Fock level {n} above n_max")));
        }
        let mut amps = DVector::zeros(layout.dim());
        for (s, z) in spin_state.amplitudes().iter().enumerate() {
            amps[layout.index(s, n)] = *z;
        }
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amps
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Reduced spin density matrix after tracing out the cavity.
    pub fn reduced_spin(&self) -> DMatrix<C64> {
        let block = DMatrix::from_column_slice(self.amps.len(), 1, self.amps.as_slice());
        trace_out_cavity(&self.layout, &block)
    }
}

/// Mixed state on a composite layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(layout: HilbertLayout, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.dim(),
                got: matrix.nrows(),
            });
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "density matrix not Hermitian (defect {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("density matrix trace {trace}")));
        }
        let (values, _) = linalg::eigh(&matrix);
        if let Some(&low) = values.first() {
            if low < -NORM_TOL {
                return Err(Error::InvalidState(format!(
                    "density matrix has negative eigenvalue {low:.3e}"
                )));
            }
        }
        Ok(Self { layout, matrix })
    }

    pub fn pure(state: &StateVector) -> Self {
        let v = state.amplitudes();
        Self {
            layout: state.layout(),
            matrix: v * v.adjoint(),
        }
    }

    /// `|spin_state><spin_state| ⊗ rho_thermal(n_bar)`.
    pub fn spin_with_thermal_cavity(
        spin_state: &SpinState,
        layout: HilbertLayout,
        n_bar: f64,
    ) -> Result<Self> {
        let w = thermal_weights(n_bar, layout.fock_dim)?;
        let d = layout.dim();
        let mut m = DMatrix::zeros(d, d);
        for (n, &p) in w.weights.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let s = StateVector::product(spin_state, layout, n)?;
            m += s.amplitudes() * s.amplitudes().adjoint() * C64::new(p, 0.0);
        }
        Ok(Self { layout, matrix: m })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn reduced_spin(&self) -> DMatrix<C64> {
        let f = self.layout.fock_dim;
        let s = self.layout.spin_dim();
        DMatrix::from_fn(s, s, |i, j| {
            (0..f).map(|n| self.matrix[(i * f + n, j * f + n)]).sum()
        })
    }
}

/// Pure state of the spin register alone (targets, ideal gate outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinState {
    n_sites: usize,
    amps: DVector<C64>,
}

impl SpinState {
    pub fn new(n_sites: usize, amps: DVector<C64>) -> Result<Self> {
        if amps.len() != 1 << n_sites {
            return Err(Error::DimensionMismatch {
                expected: 1 << n_sites,
                got: amps.len(),
            });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "spin state norm {norm:.12} differs from 1"
            )));
        }
        Ok(Self { n_sites, amps })
    }

    /// `|0 0 … 0>`.
    pub fn all_zero(n_sites: usize) -> Self {
        let mut amps = DVector::zeros(1 << n_sites);
        amps[0] = ONE;
        Self { n_sites, amps }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    /// Apply a spin-space operator, keeping the result unnormalised-safe.
    pub fn evolved(&self, op: &DMatrix<C64>) -> Result<Self> {
        Self::new(self.n_sites, op * &self.amps)
    }

    pub fn overlap(&self, other: &Self) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Reduced state of one site (1-based) as a 2x2 density matrix.
    pub fn single_site_density(&self, site: usize) -> DMatrix<C64> {
        let rho = &self.amps * self.amps.adjoint();
        reduce_to_site(self.n_sites, &rho, site)
    }
}

/// Partial trace of a spin density matrix onto a single qubit (1-based).
pub fn reduce_to_site(n_sites: usize, rho: &DMatrix<C64>, site: usize) -> DMatrix<C64> {
    let shift = n_sites - site;
    let mut out = DMatrix::zeros(2, 2);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            let rest_i = i & !(1 << shift);
            let rest_j = j & !(1 << shift);
            if rest_i == rest_j {
                out[((i >> shift) & 1, (j >> shift) & 1)] += rho[(i, j)];
            }
        }
    }
    out
}

/// `Tr_cavity(X X^dagger)` for a column block `X` of composite vectors.
pub fn trace_out_cavity(layout: &HilbertLayout, block: &DMatrix<C64>) -> DMatrix<C64> {
    let f = layout.fock_dim;
    let s = layout.spin_dim();
    let mut rho = DMatrix::zeros(s, s);
    for col in block.column_iter() {
        for n in 0..f {
            for i in 0..s {
                let xi = col[i * f + n];
                if xi == ZERO {
                    continue;
                }
                for j in 0..s {
                    rho[(i, j)] += xi * col[j * f + n].conj();
                }
            }
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_diff, I};

    fn qubits(n: usize, fock_dim: usize) -> HilbertLayout {
        HilbertLayout::new(n, 2, fock_dim).unwrap()
    }

    #[test]
    fn layout_invariants() {
        let l = qubits(3, 5);
        assert_eq!(l.dim(), 40);
        assert_eq!(l.n_max(), 4);
        assert!(HilbertLayout::new(0, 2, 4).is_err());
        assert!(HilbertLayout::new(2, 2, 0).is_err());
        assert!(HilbertLayout::new(2, 4, 3).is_err());
        assert_eq!(
            HilbertLayout::new(7, 2, 33).unwrap_err(),
            Error::DimensionCap { dim: 4224, cap: MAX_DIM }
        );
        assert!(HilbertLayout::new(6, 2, 64).is_ok());
    }

    #[test]
    fn sigma_z_single_site_is_block_diagonal() {
        let l = qubits(1, 2);
        let z = embed_site_op(&l, 1, &local::sigma_z()).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![ONE, ONE, -ONE, -ONE]));
        assert_eq!(z.matrix(), &expected);
    }

    #[test]
    fn embedding_identity_gives_identity() {
        let l = qubits(3, 3);
        let id = embed_site_op(&l, 2, &linalg::identity(2)).unwrap();
        assert_eq!(id, OperatorMatrix::identity(l));
    }

    #[test]
    fn embedding_errors() {
        let l = qubits(2, 3);
        assert_eq!(
            embed_site_op(&l, 3, &local::sigma_x()).unwrap_err(),
            Error::SiteOutOfRange { site: 3, n_sites: 2 }
        );
        assert_eq!(
            embed_site_op(&l, 0, &local::sigma_x()).unwrap_err(),
            Error::SiteOutOfRange { site: 0, n_sites: 2 }
        );
        assert!(matches!(
            embed_site_op(&l, 1, &linalg::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn disjoint_sites_commute() {
        let l = qubits(2, 3);
        let x1 = embed_site_op(&l, 1, &local::sigma_x()).unwrap();
        let x2 = embed_site_op(&l, 2, &local::sigma_x()).unwrap();
        assert_eq!(x1.commutator(&x2).max_abs(), 0.0);
        let y2 = embed_site_op(&l, 2, &local::sigma_y()).unwrap();
        assert_eq!(x1.commutator(&y2).max_abs(), 0.0);
    }

    #[test]
    fn embedding_is_homomorphism() {
        let l = qubits(3, 4);
        let a = local::sigma_x() + local::sigma_z().map(|z| z * 0.3);
        let b = local::sigma_y() + local::sigma_plus().map(|z| z * I);
        let lhs = embed_site_op(&l, 2, &(&a * &b)).unwrap();
        let rhs = &embed_site_op(&l, 2, &a).unwrap() * &embed_site_op(&l, 2, &b).unwrap();
        assert!(lhs.max_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn ladder_entries_and_vacuum() {
        let l = HilbertLayout::new(1, 2, 3).unwrap();
        let a = ladder(3);
        assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a[(1, 2)], C64::new(2f64.sqrt(), 0.0));
        assert_eq!(a.iter().filter(|z| **z != ZERO).count(), 2);
        let (a_full, a_dag) = fock_ops(&l);
        assert_eq!(a_dag.matrix(), &a_full.matrix().adjoint());
        let vac = StateVector::basis(l, 0, 0).unwrap();
        let out = a_full.matrix() * vac.amplitudes();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn truncated_commutator_boundary_term() {
        // Brute force [a, a^dagger] on the truncated ladder: 1 - (n_max+1)|n_max><n_max|.
        for fock_dim in 2..8 {
            let a = ladder(fock_dim);
            let comm = &a * a.adjoint() - a.adjoint() * &a;
            let mut expected = linalg::identity(fock_dim);
            expected[(fock_dim - 1, fock_dim - 1)] -= C64::new(fock_dim as f64, 0.0);
            assert!(max_diff(&comm, &expected) < 1e-14);
        }
    }

    #[test]
    fn jx_spectrum() {
        let l1 = qubits(1, 3);
        let (v1, _) = linalg::eigh(collective_jx(&l1).unwrap().matrix());
        assert!(v1[..3].iter().all(|x| (x + 0.5).abs() < 1e-12));
        assert!(v1[3..].iter().all(|x| (x - 0.5).abs() < 1e-12));

        // N=2 spin block: {-1, 0, 0, 1}; J_x^2 block: {0, 0, 1, 1}.
        let jx = spin_jx(2);
        let (v2, _) = linalg::eigh(&jx);
        let expected = [-1.0, 0.0, 0.0, 1.0];
        for (a, b) in v2.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let (v3, _) = linalg::eigh(&(&jx * &jx));
        for (a, b) in v3.iter().zip([0.0, 0.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jx_rejects_lambda_layout() {
        let l = HilbertLayout::lambda(1, 2).unwrap();
        assert_eq!(collective_jx(&l).unwrap_err(), Error::NotQubitLayout(3));
    }

    #[test]
    fn jx_is_ordered_sum_of_embeddings_bit_exact() {
        let l = qubits(3, 3);
        let jx = collective_jx(&l).unwrap();
        let from_spin = embed_spin(&l, &spin_jx(3)).unwrap();
        assert_eq!(jx, from_spin);
    }

    #[test]
    fn thermal_weight_cases() {
        let w0 = thermal_weights(0.0, 5).unwrap();
        assert_eq!(w0.weights, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        let w1 = thermal_weights(1.0, 40).unwrap();
        assert!((w1.weights[0] - 0.5).abs() < 1e-9);
        assert!((w1.weights[1] - 0.25).abs() < 1e-9);
        assert!((w1.weights[2] - 0.125).abs() < 1e-9);
        assert!((w1.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(thermal_weights(1.0, 10), Err(Error::ThermalTail { .. })));
        assert!(thermal_weights(-0.1, 10).is_err());
    }

    #[test]
    fn density_validation() {
        let l = qubits(1, 2);
        let s = StateVector::basis(l, 1, 0).unwrap();
        assert!(DensityMatrix::new(l, DensityMatrix::pure(&s).matrix().clone()).is_ok());
        let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.2, 0.0),
            C64::new(-0.2, 0.0),
            ZERO,
            ZERO,
        ]));
        assert!(DensityMatrix::new(l, bad).is_err());
        let thermal =
            DensityMatrix::spin_with_thermal_cavity(&SpinState::all_zero(1), qubits(1, 40), 0.5)
                .unwrap();
        assert!((thermal.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construction_is_deterministic() {
        let l = qubits(3, 6);
        let a = collective_jx(&l).unwrap();
        let b = collective_jx(&l).unwrap();
        assert_eq!(a, b);
    }
}
