//! Hamiltonian levels of the NV-center / whispering-gallery-mode scheme.
//!
//! Every Hamiltonian is a [`HamiltonianRecipe`]: a list of constant operators,
//! each multiplied by an [`Envelope`] that is a finite sum of complex
//! exponentials `sum_k c_k e^{i w_k t}`. All frequencies are angular, in
//! rad/ns; times are in ns; hbar = 1.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hilbert::{self, local, HilbertLayout, OperatorMatrix};
use crate::linalg::{self, I, ONE};

/// `2 pi * f` for a frequency `f` given in GHz (= cycles per ns).
pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f
}

/// `2 pi * f` for a frequency `f` given in MHz, in rad/ns.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e-3
}

/// Speed of light in nm/ns.
pub const SPEED_OF_LIGHT_NM_PER_NS: f64 = 299_792_458.0;

/// Optical angular frequency (rad/ns) of light with vacuum wavelength `nm`.
pub fn optical_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_NS / wavelength_nm
}

/// Per-site parameters of the three-level (Lambda) model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaSite {
    /// Cavity coupling G_j on |0> <-> |e>.
    pub g: f64,
    /// Laser Rabi frequency Omega_{L,j} on |1> <-> |e>.
    pub omega_l: f64,
    /// Optical transition frequency omega_{e0,j}.
    pub omega_e0: f64,
    /// Ground-state splitting omega_{10,j}.
    pub omega_10: f64,
    /// Laser frequency omega_{L,j}.
    pub omega_laser: f64,
}

/// Optical-level parameters for the full Lambda model and the coupling formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaParams {
    /// Cavity frequency omega_c.
    pub omega_c: f64,
    pub sites: Vec<LambdaSite>,
}

impl LambdaParams {
    /// Identical sites built from detunings: omega_e0 = omega_c + Delta and
    /// omega_L = omega_c - omega_10 - delta.
    pub fn from_detunings(
        n_sites: usize,
        g: f64,
        omega_l: f64,
        excited_detuning: f64,
        raman_detuning: f64,
        omega_c: f64,
        omega_10: f64,
    ) -> Self {
        let site = LambdaSite {
            g,
            omega_l,
            omega_e0: omega_c + excited_detuning,
            omega_10,
            omega_laser: omega_c - omega_10 - raman_detuning,
        };
        Self {
            omega_c,
            sites: vec![site; n_sites],
        }
    }

    /// Delta_j = omega_{e0,j} - omega_c.
    pub fn excited_detuning(&self, j: usize) -> f64 {
        self.sites[j].omega_e0 - self.omega_c
    }

    /// delta_j = omega_c - omega_{10,j} - omega_{L,j}.
    pub fn raman_detuning(&self, j: usize) -> f64 {
        let s = &self.sites[j];
        self.omega_c - s.omega_10 - s.omega_laser
    }

    /// Laser detuning from |1> <-> |e>: omega_{e1,j} - omega_{L,j} = Delta_j + delta_j.
    pub fn laser_detuning(&self, j: usize) -> f64 {
        let s = &self.sites[j];
        (s.omega_e0 - s.omega_10) - s.omega_laser
    }
}

/// Physical parameters of one simulation, angular frequencies in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub n_qubits: usize,
    /// Effective Raman coupling eta.
    pub eta: f64,
    /// Optional per-qubit couplings eta_j; overrides `eta` in the builders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_per_qubit: Option<Vec<f64>>,
    /// Raman detuning delta.
    pub delta: f64,
    /// Microwave Rabi frequency Omega.
    pub omega: f64,
    /// Laser phase phi.
    #[serde(default)]
    pub phi: f64,
    /// Fock truncation n_max.
    pub n_max: usize,
    /// Thermal occupation of the cavity.
    #[serde(default)]
    pub n_bar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<LambdaParams>,
}

impl SimParams {
    pub fn new(n_qubits: usize, eta: f64, delta: f64, omega: f64, n_max: usize) -> Self {
        Self {
            n_qubits,
            eta,
            eta_per_qubit: None,
            delta,
            omega,
            phi: 0.0,
            n_max,
            n_bar: 0.0,
            lambda: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::InvalidParameter { name, reason });
        if self.n_qubits == 0 {
            return bad("n_qubits", "at least one qubit is required".into());
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return bad("eta", format!("coupling must be finite and > 0, got {}", self.eta));
        }
        if !self.delta.is_finite() || self.delta == 0.0 {
            return bad("delta", "detuning must be finite and nonzero".into());
        }
        if self.delta < 0.0 {
            return bad(
                "delta",
                format!("only delta > 0 is supported (got {})", self.delta),
            );
        }
        if !(self.omega >= 0.0) || !self.omega.is_finite() {
            return bad("omega", format!("drive must be finite and >= 0, got {}", self.omega));
        }
        if !self.phi.is_finite() {
            return bad("phi", "phase must be finite".into());
        }
        if !(self.n_bar >= 0.0) || !self.n_bar.is_finite() {
            return bad("n_bar", format!("thermal occupation must be >= 0, got {}", self.n_bar));
        }
        if let Some(etas) = &self.eta_per_qubit {
            if etas.len() != self.n_qubits {
                return bad(
                    "eta_per_qubit",
                    format!("expected {} entries, got {}", self.n_qubits, etas.len()),
                );
            }
            if etas.iter().any(|e| !e.is_finite() || *e < 0.0) {
                return bad("eta_per_qubit", "entries must be finite and >= 0".into());
            }
        }
        if let Some(lp) = &self.lambda {
            if lp.sites.len() != self.n_qubits {
                return bad(
                    "lambda",
                    format!("expected {} sites, got {}", self.n_qubits, lp.sites.len()),
                );
            }
        }
        self.qubit_layout().map(|_| ())
    }

    /// Per-qubit couplings, replicating `eta` when no list is given.
    pub fn etas(&self) -> Vec<f64> {
        self.eta_per_qubit
            .clone()
            .unwrap_or_else(|| vec![self.eta; self.n_qubits])
    }

    /// True when every qubit sees the same coupling.
    pub fn is_uniform(&self) -> bool {
        self.etas().iter().all(|e| *e == self.etas()[0])
    }

    pub fn qubit_layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::qubits(self.n_qubits, self.n_max)
    }

    pub fn lambda_layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::lambda(self.n_qubits, self.n_max)
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self {
            phi,
            ..self.clone()
        }
    }
}

/// `c(t) = sum_k amp_k * exp(i * freq_k * t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub components: Vec<(C64, f64)>,
}

impl Envelope {
    pub fn constant(value: C64) -> Self {
        Self {
            components: vec![(value, 0.0)],
        }
    }

    pub fn exp(amp: C64, freq: f64) -> Self {
        Self {
            components: vec![(amp, freq)],
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.components
            .iter()
            .map(|(amp, w)| amp * C64::from_polar(1.0, w * t))
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self {
            components: self.components.iter().map(|(a, w)| (a.conj(), -w)).collect(),
        }
    }

    pub fn scaled(&self, z: C64) -> Self {
        Self {
            components: self.components.iter().map(|(a, w)| (a * z, *w)).collect(),
        }
    }

    pub fn max_frequency(&self) -> f64 {
        self.components.iter().fold(0.0_f64, |m, (_, w)| m.max(w.abs()))
    }

    /// Upper bound on `|c(t)|`.
    pub fn amplitude_bound(&self) -> f64 {
        self.components.iter().map(|(a, _)| a.norm()).sum()
    }
}

/// One constant operator and its time envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub op: DMatrix<C64>,
    pub envelope: Envelope,
}

/// `H(t) = sum_k envelope_k(t) * op_k` on a fixed layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianRecipe {
    layout: HilbertLayout,
    terms: Vec<Term>,
    label: String,
}

impl HamiltonianRecipe {
    pub fn new(layout: HilbertLayout, label: impl Into<String>) -> Self {
        Self {
            layout,
            terms: Vec::new(),
            label: label.into(),
        }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn push(&mut self, op: DMatrix<C64>, envelope: Envelope) {
        assert_eq!(op.nrows(), self.layout.dim(), "term dimension mismatch");
        self.terms.push(Term { op, envelope });
    }

    /// Push `c(t) X + conj(c(t)) X^dagger`.
    pub fn push_with_hc(&mut self, op: DMatrix<C64>, envelope: Envelope) {
        let adj = op.adjoint();
        let env_conj = envelope.conj();
        self.push(op, envelope);
        self.push(adj, env_conj);
    }

    /// `H(t)` as a dense matrix.
    pub fn eval(&self, t: f64) -> OperatorMatrix {
        let d = self.layout.dim();
        let mut h = DMatrix::zeros(d, d);
        for term in &self.terms {
            let c = term.envelope.eval(t);
            if c != C64::new(0.0, 0.0) {
                h += term.op.map(|z| z * c);
            }
        }
        OperatorMatrix::new(self.layout, h).expect("recipe terms share the layout")
    }

    /// Relative Hermiticity defect of `H(t)`.
    pub fn hermiticity_defect(&self, t: f64) -> f64 {
        let h = self.eval(t);
        h.hermiticity_defect() / h.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Largest |frequency| appearing in any envelope.
    pub fn max_frequency(&self) -> f64 {
        self.terms
            .iter()
            .fold(0.0_f64, |m, t| m.max(t.envelope.max_frequency()))
    }

    /// Upper bound on the operator norm of `H(t)` over all t
    /// (sum of envelope bounds times induced infinity norms).
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let row_max = t
                    .op
                    .row_iter()
                    .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
                    .fold(0.0_f64, f64::max);
                row_max * t.envelope.amplitude_bound()
            })
            .sum()
    }

    /// Sum of two recipes on the same layout.
    pub fn plus(&self, other: &Self, label: impl Into<String>) -> Self {
        assert_eq!(self.layout, other.layout, "layout mismatch");
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self {
            layout: self.layout,
            terms,
            label: label.into(),
        }
    }

    /// `-H(t)`.
    pub fn negated(&self) -> Self {
        Self {
            layout: self.layout,
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    op: t.op.clone(),
                    envelope: t.envelope.scaled(-ONE),
                })
                .collect(),
            label: format!("-({})", self.label),
        }
    }
}

/// eta_j = G_j Omega_{L,j} (1/(Delta_j + delta_j) + 1/Delta_j).
pub fn effective_eta(params: &SimParams) -> Result<Vec<f64>> {
    let lp = params.lambda.as_ref().ok_or(Error::InvalidParameter {
        name: "lambda",
        reason: "Lambda-level parameters are required".into(),
    })?;
    (0..lp.sites.len())
        .map(|j| {
            let big = lp.excited_detuning(j);
            let small = lp.raman_detuning(j);
            if big == 0.0 || big + small == 0.0 {
                return Err(Error::SingularCoupling { site: j + 1 });
            }
            let s = &lp.sites[j];
            Ok(s.g * s.omega_l * (1.0 / (big + small) + 1.0 / big))
        })
        .collect()
}

/// `2 G Omega_L / Delta` for site `j`, the far-detuned limit of [`effective_eta`].
pub fn far_detuned_eta(lp: &LambdaParams, j: usize) -> f64 {
    let s = &lp.sites[j];
    2.0 * s.g * s.omega_l / lp.excited_detuning(j)
}

/// Three-level Hamiltonian in the interaction picture of
/// `H_0 = omega_c a^dagger a + sum_i omega_i |i><i|`:
///
/// `sum_j G_j a|e><0| e^{i Delta_j t} + Omega_{L,j} e^{-i phi} |e><1| e^{i (Delta_j + delta_j) t} + h.c.`
///
/// Site levels are ordered |0>, |1>, |e>. Stark shifts are not added.
pub fn build_lambda_hamiltonian(params: &SimParams) -> Result<HamiltonianRecipe> {
    let lp = params.lambda.as_ref().ok_or(Error::InvalidParameter {
        name: "lambda",
        reason: "Lambda-level parameters are required".into(),
    })?;
    let layout = params.lambda_layout()?;
    if lp.sites.len() != layout.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: layout.n_sites(),
            got: lp.sites.len(),
        });
    }
    let a = hilbert::ladder(layout.fock_dim());
    let mut recipe = HamiltonianRecipe::new(layout, "H_S (Lambda, interaction picture)");
    for (j, site) in lp.sites.iter().enumerate() {
        let e0 = hilbert::spin_site_op(layout.n_sites(), 3, j + 1, &local::ket_bra(3, 2, 0))?;
        let e1 = hilbert::spin_site_op(layout.n_sites(), 3, j + 1, &local::ket_bra(3, 2, 1))?;
        let cavity_term = linalg::kron(&e0, &a);
        let laser_term = linalg::kron(&e1, &linalg::identity(layout.fock_dim()));
        recipe.push_with_hc(
            cavity_term,
            Envelope::exp(C64::new(site.g, 0.0), lp.excited_detuning(j)),
        );
        recipe.push_with_hc(
            laser_term,
            Envelope::exp(
                C64::from_polar(site.omega_l, -params.phi),
                lp.laser_detuning(j),
            ),
        );
    }
    Ok(recipe)
}

/// `sum_j eta_j (sigma_j^op) ⊗ cavity_op` as a dense composite operator.
fn weighted_spin_cavity(
    layout: &HilbertLayout,
    spin_local: &DMatrix<C64>,
    weights: &[f64],
    cavity: &DMatrix<C64>,
) -> Result<DMatrix<C64>> {
    let spin = hilbert::spin_weighted_sum(layout.n_sites(), 2, spin_local, weights)?;
    Ok(linalg::kron(&spin, cavity))
}

/// Raman qubit-cavity coupling
/// `sum_j eta_j (a sigma_j^+ e^{-i(delta t - phi)} + h.c.)`.
pub fn build_raman_hamiltonian(params: &SimParams, phi: f64) -> Result<HamiltonianRecipe> {
    let layout = params.qubit_layout()?;
    let a = hilbert::ladder(layout.fock_dim());
    let op = weighted_spin_cavity(&layout, &local::sigma_plus(), &params.etas(), &a)?;
    let mut recipe = HamiltonianRecipe::new(layout, format!("H_I (phi = {phi})"));
    recipe.push_with_hc(op, Envelope::exp(C64::from_polar(1.0, phi), -params.delta));
    Ok(recipe)
}

/// Microwave-driven model `Omega J_x + H_I`; the numeric truth model.
pub fn build_driven_hamiltonian(params: &SimParams, phi: f64) -> Result<HamiltonianRecipe> {
    let mut recipe = build_raman_hamiltonian(params, phi)?;
    recipe.label = format!("H_1 (phi = {phi})");
    if params.omega != 0.0 {
        let layout = recipe.layout();
        let jx = hilbert::collective_jx(&layout)?;
        recipe.push(jx.into_matrix(), Envelope::constant(C64::new(params.omega, 0.0)));
    }
    Ok(recipe)
}

/// Effective Molmer-Sorensen form
/// `eta (a e^{-i(delta t - phi)} + a^dagger e^{i(delta t - phi)}) J_x`;
/// with per-qubit couplings J_x is replaced by `sum_j eta_j sigma_j^x / 2`.
pub fn build_effective_hamiltonian(params: &SimParams, phi: f64) -> Result<HamiltonianRecipe> {
    let layout = params.qubit_layout()?;
    let a = hilbert::ladder(layout.fock_dim());
    let half_x = local::sigma_x().map(|z| z * 0.5);
    let op = weighted_spin_cavity(&layout, &half_x, &params.etas(), &a)?;
    let mut recipe = HamiltonianRecipe::new(layout, format!("H_3 (phi = {phi})"));
    recipe.push_with_hc(op, Envelope::exp(C64::from_polar(1.0, phi), -params.delta));
    Ok(recipe)
}

/// Which part of the counter-rotating remainder to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeglectedPart {
    /// Both the sigma_z and sigma_y pieces.
    All,
    /// Only the sigma_y piece.
    SigmaY,
    /// Only the sigma_z piece.
    SigmaZ,
}

/// Counter-rotating remainder dropped by the RWA,
/// `(i eta / 2) a e^{-i(delta t - phi)} sum_j [sin(Omega t) sigma_j^z - cos(Omega t) sigma_j^y] + h.c.`
pub fn build_neglected_terms(params: &SimParams, phi: f64) -> Result<HamiltonianRecipe> {
    build_neglected_part(params, phi, NeglectedPart::All)
}

pub fn build_neglected_part(
    params: &SimParams,
    phi: f64,
    part: NeglectedPart,
) -> Result<HamiltonianRecipe> {
    let layout = params.qubit_layout()?;
    let a = hilbert::ladder(layout.fock_dim());
    let etas = params.etas();
    let (delta, omega) = (params.delta, params.omega);
    let phase = C64::from_polar(1.0, phi);
    let mut recipe = HamiltonianRecipe::new(layout, format!("H_n {part:?} (phi = {phi})"));

    // (i/2) e^{-i delta t} sin(Omega t) = (1/4)(e^{i(Omega-delta)t} - e^{-i(Omega+delta)t})
    if matches!(part, NeglectedPart::All | NeglectedPart::SigmaZ) {
        let op = weighted_spin_cavity(&layout, &local::sigma_z(), &etas, &a)?;
        let env = Envelope {
            components: vec![(phase * 0.25, omega - delta), (-phase * 0.25, -(omega + delta))],
        };
        recipe.push_with_hc(op, env);
    }
    // -(i/2) e^{-i delta t} cos(Omega t) = -(i/4)(e^{i(Omega-delta)t} + e^{-i(Omega+delta)t})
    if matches!(part, NeglectedPart::All | NeglectedPart::SigmaY) {
        let op = weighted_spin_cavity(&layout, &local::sigma_y(), &etas, &a)?;
        let env = Envelope {
            components: vec![(-I * phase * 0.25, omega - delta), (-I * phase * 0.25, -(omega + delta))],
        };
        recipe.push_with_hc(op, env);
    }
    Ok(recipe)
}

/// The driven model in the frame rotating with `Omega J_x`, written in the
/// `|±>` eigenbasis of sigma_x:
/// `(eta/2) a e^{-i(delta t - phi)} sum_j (sigma~_z + e^{i Omega t}|+><-| - e^{-i Omega t}|-><+|) + h.c.`
/// where `sigma~_z = |+><+| - |-><-|`.
pub fn build_rotated_hamiltonian(params: &SimParams, phi: f64) -> Result<HamiltonianRecipe> {
    let layout = params.qubit_layout()?;
    let a = hilbert::ladder(layout.fock_dim());
    let etas = params.etas();
    let (delta, omega) = (params.delta, params.omega);
    let half = C64::from_polar(0.5, phi);
    let pm = local::plus_minus();
    let mp = local::minus_plus();
    let plus = DMatrix::from_element(2, 2, C64::new(0.5, 0.0));
    let minus = DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.5, 0.0), C64::new(-0.5, 0.0), C64::new(-0.5, 0.0), C64::new(0.5, 0.0)],
    );
    let sigma_tilde_z = &plus - &minus;

    let mut recipe = HamiltonianRecipe::new(layout, format!("H_2 (phi = {phi})"));
    let z_op = weighted_spin_cavity(&layout, &sigma_tilde_z, &etas, &a)?;
    recipe.push_with_hc(z_op, Envelope::exp(half, -delta));
    let pm_op = weighted_spin_cavity(&layout, &pm, &etas, &a)?;
    recipe.push_with_hc(pm_op, Envelope::exp(half, omega - delta));
    let mp_op = weighted_spin_cavity(&layout, &mp, &etas, &a)?;
    recipe.push_with_hc(mp_op, Envelope::exp(-half, -(omega + delta)));
    Ok(recipe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::StateVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(n: usize) -> SimParams {
        let mut p = SimParams::new(n, 0.3, 0.7, 2.1, 4);
        p.phi = 0.4;
        p
    }

    fn reference_lambda(n: usize, raman_detuning: f64) -> LambdaParams {
        LambdaParams::from_detunings(
            n,
            ghz(1.0),
            ghz(0.5),
            ghz(20.0),
            raman_detuning,
            optical_frequency(637.0),
            ghz(2.88),
        )
    }

    #[test]
    fn effective_eta_far_detuned_matches_quoted_value() {
        let mut p = SimParams::new(1, mhz(50.0), mhz(100.0), 0.0, 2);
        p.lambda = Some(reference_lambda(1, 0.0));
        let eta = effective_eta(&p).unwrap()[0];
        // delta = 0: equal denominators, exactly 2 G Omega_L / Delta.
        assert!((eta - 2.0 * ghz(1.0) * ghz(0.5) / ghz(20.0)).abs() < 1e-12);
        assert!((eta / mhz(50.0) - 1.0).abs() < 1e-9);

        // delta << Delta: close to 2 pi x 50 MHz.
        p.lambda = Some(reference_lambda(1, mhz(100.0)));
        let eta = effective_eta(&p).unwrap()[0];
        assert!((eta / mhz(50.0) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn effective_eta_zero_coupling_and_singularity() {
        let mut lp = reference_lambda(2, 0.0);
        lp.sites[0].g = 0.0;
        let mut p = SimParams::new(2, 1.0, 1.0, 0.0, 2);
        p.lambda = Some(lp.clone());
        assert_eq!(effective_eta(&p).unwrap()[0], 0.0);

        lp.sites[1].omega_e0 = lp.omega_c;
        p.lambda = Some(lp);
        assert_eq!(effective_eta(&p).unwrap_err(), Error::SingularCoupling { site: 2 });
    }

    #[test]
    fn lambda_hamiltonian_structure() {
        let mut p = SimParams::new(1, 1.0, 1.0, 0.0, 2);
        let mut lp = reference_lambda(1, 0.0);
        lp.sites[0].g = 0.0;
        lp.sites[0].omega_l = 0.0;
        p.lambda = Some(lp);
        let h = build_lambda_hamiltonian(&p).unwrap();
        assert_eq!(h.eval(0.3).max_abs(), 0.0);

        p.lambda = Some(reference_lambda(1, 0.0));
        let h = build_lambda_hamiltonian(&p).unwrap().eval(0.0);
        let l = h.layout();
        let (g, om) = (ghz(1.0), ghz(0.5));
        for n in 1..l.fock_dim() {
            let z = h.matrix()[(l.index(2, n - 1), l.index(0, n))];
            assert!((z - C64::new(g * (n as f64).sqrt(), 0.0)).norm() < 1e-12);
        }
        for n in 0..l.fock_dim() {
            let z = h.matrix()[(l.index(2, n), l.index(1, n))];
            assert!((z - C64::new(om, 0.0)).norm() < 1e-12);
        }
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn lambda_requires_parameters() {
        let p = SimParams::new(1, 1.0, 1.0, 0.0, 2);
        assert!(build_lambda_hamiltonian(&p).is_err());
    }

    #[test]
    fn raman_phase_and_matrix_element() {
        let p = params(1);
        let h = build_raman_hamiltonian(&p, p.phi).unwrap();
        let l = h.layout();
        // <1, 0| H(0) |0, 1> = eta e^{i phi}
        let z = h.eval(0.0).matrix()[(l.index(1, 0), l.index(0, 1))];
        assert!((z - C64::from_polar(p.eta, p.phi)).norm() < 1e-14);

        // At t = phi / delta the phase factor is 1.
        let t = p.phi / p.delta;
        let z = h.eval(t).matrix()[(l.index(1, 0), l.index(0, 1))];
        assert!((z - C64::new(p.eta, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn driven_reduces_to_raman_and_drive() {
        let mut p = params(2);
        p.omega = 0.0;
        let t = 0.83;
        let a = build_driven_hamiltonian(&p, 0.2).unwrap().eval(t);
        let b = build_raman_hamiltonian(&p, 0.2).unwrap().eval(t);
        assert_eq!(a.matrix(), b.matrix());

        let mut q = params(2);
        q.eta_per_qubit = Some(vec![0.0, 0.0]);
        let h = build_driven_hamiltonian(&q, 0.0).unwrap().eval(t);
        let jx = hilbert::collective_jx(&h.layout()).unwrap();
        assert!(h.max_diff(&jx.scale(C64::new(q.omega, 0.0))) < 1e-15);
    }

    #[test]
    fn effective_phi_pi_is_negation() {
        let p = params(3);
        let h0 = build_effective_hamiltonian(&p, 0.0).unwrap();
        let h1 = build_effective_hamiltonian(&p, PI).unwrap();
        for t in [0.0, 0.3, 1.7, 5.2] {
            let d = &h0.eval(t) + &h1.eval(t);
            assert!(d.max_abs() < 1e-14, "t = {t}: {}", d.max_abs());
        }
    }

    #[test]
    fn effective_commutes_with_jx_and_carries_sqrt_n() {
        let p = params(2);
        let h = build_effective_hamiltonian(&p, 0.0).unwrap();
        let jx = hilbert::collective_jx(&h.layout()).unwrap();
        for t in [0.0, 0.9, 2.4] {
            assert!(h.eval(t).commutator(&jx).max_abs() < 1e-14);
        }
        // spin block of <n-1| H(0) |n> is eta sqrt(n) J_x
        let l = h.layout();
        let h0 = h.eval(0.0);
        let jx_spin = hilbert::spin_jx(2);
        for n in 1..l.fock_dim() {
            for s in 0..4 {
                for r in 0..4 {
                    let z = h0.matrix()[(l.index(r, n - 1), l.index(s, n))];
                    let expected = jx_spin[(r, s)] * p.eta * (n as f64).sqrt();
                    assert!((z - expected).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rotated_equals_effective_plus_neglected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            let p = params(n);
            let h2 = build_rotated_hamiltonian(&p, p.phi).unwrap();
            let h3 = build_effective_hamiltonian(&p, p.phi).unwrap();
            let hn = build_neglected_terms(&p, p.phi).unwrap();
            for _ in 0..100 {
                let t = rng.random_range(0.0..20.0);
                let diff = &(&h2.eval(t) - &h3.eval(t)) - &hn.eval(t);
                assert!(diff.max_abs() < 1e-12, "N={n} t={t}: {}", diff.max_abs());
            }
        }
    }

    #[test]
    fn rotated_is_frame_transform_of_driven() {
        // H_2(t) = e^{i Omega J_x t} (H_1(t) - Omega J_x) e^{-i Omega J_x t}
        let p = params(2);
        let h1 = build_driven_hamiltonian(&p, p.phi).unwrap();
        let h2 = build_rotated_hamiltonian(&p, p.phi).unwrap();
        let jx = hilbert::collective_jx(&h1.layout()).unwrap();
        for t in [0.0, 0.61, 3.3] {
            let u = linalg::exp_hermitian(jx.matrix(), -I * p.omega * t);
            let inner = h1.eval(t).matrix() - jx.matrix().map(|z| z * p.omega);
            let rotated = u.adjoint() * inner * &u;
            assert!(linalg::max_diff(&rotated, h2.eval(t).matrix()) < 1e-12);
        }
    }

    #[test]
    fn neglected_terms_at_zero_drive() {
        // Omega = 0, phi = 0: sin -> 0, cos -> 1, leaving -(i eta/2) a e^{-i delta t} sum sigma_y + h.c.
        let mut p = params(2);
        p.omega = 0.0;
        let hn = build_neglected_terms(&p, 0.0).unwrap();
        let l = hn.layout();
        let a = hilbert::ladder(l.fock_dim());
        let sy = hilbert::spin_weighted_sum(2, 2, &local::sigma_y(), &p.etas()).unwrap();
        for t in [0.0, 1.1] {
            let x = linalg::kron(&sy, &a).map(|z| z * (-I * 0.5) * C64::from_polar(1.0, -p.delta * t));
            let expected = &x + &x.adjoint();
            assert!(linalg::max_diff(hn.eval(t).matrix(), &expected) < 1e-14);
        }
    }

    #[test]
    fn every_recipe_is_hermitian_at_random_times() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = params(2);
        p.lambda = Some(reference_lambda(2, mhz(100.0)));
        p.eta_per_qubit = Some(vec![0.3, 0.45]);
        let recipes = vec![
            build_raman_hamiltonian(&p, 0.3).unwrap(),
            build_driven_hamiltonian(&p, 0.3).unwrap(),
            build_effective_hamiltonian(&p, 0.3).unwrap(),
            build_neglected_terms(&p, 0.3).unwrap(),
            build_rotated_hamiltonian(&p, 0.3).unwrap(),
            build_lambda_hamiltonian(&p).unwrap(),
        ];
        for r in &recipes {
            for _ in 0..20 {
                let t = rng.random_range(0.0..50.0);
                assert!(r.hermiticity_defect(t) <= 1e-12, "{} at {t}", r.label());
            }
        }
    }

    #[test]
    fn uniform_list_is_bit_identical_to_scalar() {
        let p = params(3);
        let mut q = p.clone();
        q.eta_per_qubit = Some(vec![p.eta; 3]);
        for phi in [0.0, 1.0] {
            assert_eq!(
                build_driven_hamiltonian(&p, phi).unwrap(),
                build_driven_hamiltonian(&q, phi).unwrap()
            );
            assert_eq!(
                build_effective_hamiltonian(&p, phi).unwrap(),
                build_effective_hamiltonian(&q, phi).unwrap()
            );
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let mut p = params(2);
        p.delta = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "delta", .. })));
        p.delta = 0.0;
        assert!(p.validate().is_err());
        let mut p = params(2);
        p.eta = 0.0;
        assert!(p.validate().is_err());
        let mut p = params(2);
        p.eta_per_qubit = Some(vec![1.0]);
        assert!(p.validate().is_err());
        assert!(params(2).validate().is_ok());
    }

    #[test]
    fn drive_dominates_at_preset_ratio() {
        // Omega = 6 delta = 12 eta: the drive term carries the largest norm.
        let eta = mhz(50.0);
        let p = SimParams::new(4, eta, 2.0 * eta, 12.0 * eta, 12);
        let drive = hilbert::collective_jx(&p.qubit_layout().unwrap())
            .unwrap()
            .scale(C64::new(p.omega, 0.0));
        let coupling = build_raman_hamiltonian(&p, 0.0).unwrap().eval(0.0);
        let (dv, _) = linalg::eigh(drive.matrix());
        let (cv, _) = linalg::eigh(coupling.matrix());
        let norm = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(norm(&dv) > norm(&cv));
        let _ = StateVector::basis(p.qubit_layout().unwrap(), 0, 0).unwrap();
    }
}
