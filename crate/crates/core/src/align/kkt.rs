use serde::Serialize;

use super::{p_norm, signed_pow, ConstraintSpec, UpdateSolution};
use crate::Logits;

/// Outcome of checking the KKT conditions at a candidate maximizer.
///
/// Stationarity is taken in maximization form,
/// `g − ε·φ·p·sign(x)|x|^(p−1) = 0` with `x = μ* − μ_β` and `ε ≥ 0`, with the
/// multiplier recovered from the candidate by least squares.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// `|‖x‖_p^p − (δ − log Z)/φ|`
    pub primal_residual: f64,
    pub primal_ok: bool,
    /// Least-squares multiplier, 0 when `x = 0`.
    pub multiplier: f64,
    pub dual_ok: bool,
    /// Max-abs coordinate residual of the stationarity equation.
    pub stationarity_residual: f64,
    pub stationarity_ok: bool,
}

impl KktReport {
    pub fn passed(&self) -> bool {
        self.primal_ok && self.dual_ok && self.stationarity_ok
    }

    fn failed() -> Self {
        Self {
            primal_residual: f64::INFINITY,
            primal_ok: false,
            multiplier: f64::NAN,
            dual_ok: false,
            stationarity_residual: f64::INFINITY,
            stationarity_ok: false,
        }
    }
}

/// Check primal feasibility, dual feasibility and stationarity of `sol`.
///
/// Never fails; malformed inputs (length mismatch, invalid spec) produce a
/// report with every condition failed.
pub fn kkt_check(sol: &UpdateSolution, mu_beta: &Logits, grad: &Logits, spec: &ConstraintSpec, tol: f64) -> KktReport {
    if spec.validate().is_err() || sol.mu_star.len() != mu_beta.len() || grad.len() != mu_beta.len() {
        return KktReport::failed();
    }
    let p = spec.p;
    let x: Vec<f64> = sol.mu_star.iter().zip(mu_beta.iter()).map(|(a, b)| a - b).collect();

    let primal_residual = (p_norm(&x, p).powf(p) - spec.budget()).abs();

    // h = ∂/∂μ of φ‖μ − μ_β‖_p^p
    let h: Vec<f64> = x.iter().map(|&xi| spec.phi * p * signed_pow(xi, p - 1.0)).collect();
    let hh: f64 = h.iter().map(|v| v * v).sum();
    let multiplier = if hh > 0.0 {
        grad.iter().zip(&h).map(|(g, v)| g * v).sum::<f64>() / hh
    } else {
        0.0
    };
    let stationarity_residual = grad
        .iter()
        .zip(&h)
        .map(|(g, v)| (g - multiplier * v).abs())
        .fold(0.0, f64::max);

    KktReport {
        primal_ok: primal_residual <= tol,
        primal_residual,
        dual_ok: multiplier >= 0.0,
        multiplier,
        stationarity_ok: stationarity_residual <= tol,
        stationarity_residual,
    }
}
