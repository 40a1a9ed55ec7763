//! Decoherence budget: effective rates against the gate time.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::{self, SimParams};

/// Loss parameters that enter only the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossParams {
    /// Excited-state decay rate Gamma_0 (rad/ns).
    pub gamma0: f64,
    /// Cavity quality factor.
    pub quality_factor: f64,
    /// Cavity wavelength (nm); the Lambda parameters' omega_c is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub n_qubits: usize,
    /// Coupling from the full detuning formula (rad/ns).
    pub eta: f64,
    /// `2 G Omega_L / Delta` (rad/ns).
    pub eta_far_detuned: f64,
    /// `pi / eta_far_detuned` (ns).
    pub gate_time: f64,
    /// `Gamma_0 Omega_L G / Delta^2` (rad/ns).
    pub gamma_eff: f64,
    /// Cavity frequency (rad/ns).
    pub omega_c: f64,
    pub quality_factor: f64,
    /// `omega_c / Q` (rad/ns).
    pub kappa: f64,
    /// `T Gamma_eff N`.
    pub spontaneous_emission_product: f64,
    /// `T kappa (n_bar + 1)`.
    pub cavity_loss_product: f64,
}

/// Rates of the first site's Lambda parameters against the gate time.
pub fn decoherence_budget(params: &SimParams, loss: &LossParams) -> Result<BudgetReport> {
    let lp = params.lambda.as_ref().ok_or(Error::InvalidParameter {
        name: "lambda",
        reason: "Lambda-level parameters are required for the budget".into(),
    })?;
    if !(loss.quality_factor > 0.0) || !loss.quality_factor.is_finite() {
        return Err(Error::InvalidParameter {
            name: "quality_factor",
            reason: format!("Q must be finite and > 0, got {}", loss.quality_factor),
        });
    }
    if !(loss.gamma0 >= 0.0) || !loss.gamma0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma0",
            reason: format!("decay rate must be finite and >= 0, got {}", loss.gamma0),
        });
    }
    let omega_c = match loss.wavelength_nm {
        Some(nm) if nm > 0.0 && nm.is_finite() => model::optical_frequency(nm),
        Some(nm) => {
            return Err(Error::InvalidParameter {
                name: "wavelength_nm",
                reason: format!("wavelength must be finite and > 0, got {nm}"),
            })
        }
        None => lp.omega_c,
    };
    let eta = model::effective_eta(params)?[0];
    let site = &lp.sites[0];
    let big = lp.excited_detuning(0);
    if big == 0.0 {
        return Err(Error::SingularCoupling { site: 1 });
    }
    let eta_far = model::far_detuned_eta(lp, 0);
    let gate_time = PI / eta_far;
    let gamma_eff = loss.gamma0 * site.omega_l * site.g / (big * big);
    let kappa = omega_c / loss.quality_factor;
    Ok(BudgetReport {
        n_qubits: params.n_qubits,
        eta,
        eta_far_detuned: eta_far,
        gate_time,
        gamma_eff,
        omega_c,
        quality_factor: loss.quality_factor,
        kappa,
        spontaneous_emission_product: gate_time * gamma_eff * params.n_qubits as f64,
        cavity_loss_product: gate_time * kappa * (params.n_bar + 1.0),
    })
}
