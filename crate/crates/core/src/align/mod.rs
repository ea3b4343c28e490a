//! Closed-form maximization of a linear objective over a p-norm ball.
//!
//! The aligned logits solve
//!
//! ```text
//! maximize    gᵀμ
//! subject to  φ·‖μ − μ_β‖_p^p + log Z ≤ δ
//! ```
//!
//! where `g` is the preference gradient at the unaligned logits `μ_β`. The
//! constraint is always active at the optimum, so the step has p-norm
//! `r = ((δ − log Z)/φ)^(1/p)` and points along the signed power
//! `sign(g)·|g|^(1/(p−1))`, the dual direction of `g` under the p-norm.

mod kkt;
mod oracle;

pub use kkt::{kkt_check, KktReport};
pub use oracle::{oracle_maximize, OracleOptions};

use serde::{Deserialize, Serialize};

use crate::{Error, Logits, Result};

/// Divergence budget of the constrained update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    /// Norm order, strictly greater than one.
    pub p: f64,
    /// Scale of the p-norm penalty, positive.
    pub phi: f64,
    /// Negative log-likelihood budget.
    pub delta: f64,
    /// Log partition function at the unaligned logits.
    pub log_z: f64,
}

impl ConstraintSpec {
    pub fn new(p: f64, phi: f64, delta: f64, log_z: f64) -> Result<Self> {
        let spec = Self { p, phi, delta, log_z };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_norm_order(self.p)?;
        if !(self.phi.is_finite() && self.phi > 0.0) {
            return Err(Error::Config(format!("phi must be positive, got {}", self.phi)));
        }
        if !(self.delta.is_finite() && self.log_z.is_finite()) {
            return Err(Error::Config("delta and log_z must be finite".into()));
        }
        if self.delta <= self.log_z {
            return Err(Error::EmptyConstraint {
                delta: self.delta,
                log_z: self.log_z,
            });
        }
        Ok(())
    }

    /// Budget on `‖μ − μ_β‖_p^p` implied by the spec.
    pub fn budget(&self) -> f64 {
        (self.delta - self.log_z) / self.phi
    }
}

/// Result of [`closed_form_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSolution {
    pub mu_star: Logits,
    /// Achieved `‖μ* − μ_β‖_p`.
    pub radius: f64,
    /// Lagrange multiplier of the divergence constraint.
    pub multiplier: f64,
    /// `max_i |g_i − ε·φ·p·sign(x_i)|x_i|^(p−1)|` with `x = μ* − μ_β`.
    pub stationarity_residual: f64,
}

pub(crate) fn check_norm_order(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::Config(format!("norm order p must be > 1, got {p}")));
    }
    Ok(())
}

/// Element-wise `sign(v_i)·|v_i|^exponent`.
pub fn signed_power(v: &[f64], exponent: f64) -> Result<Vec<f64>> {
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "exponent must be finite and positive, got {exponent}"
        )));
    }
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("entry {i} is not finite")));
    }
    Ok(v.iter().map(|&x| signed_pow(x, exponent)).collect())
}

#[inline]
fn signed_pow(x: f64, exponent: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(exponent)
    }
}

/// `‖v‖_p`, computed with max-abs scaling so large or tiny entries do not
/// overflow or underflow.
pub fn p_norm(v: &[f64], p: f64) -> f64 {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt();
    }
    m * v.iter().map(|x| (x.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Radius `((δ − log Z)/φ)^(1/p)` of the active constraint.
pub fn constraint_radius(spec: &ConstraintSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.budget().powf(1.0 / spec.p))
}

/// Step of p-norm `length` along the p-norm dual direction of `direction`.
///
/// For `p = 2` this is exactly `length · direction / ‖direction‖₂`. A zero
/// direction yields a zero step.
pub(crate) fn dual_step(direction: &[f64], p: f64, length: f64) -> Vec<f64> {
    let m = direction.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return vec![0.0; direction.len()];
    }
    if p == 2.0 {
        let scale = length / p_norm(direction, 2.0);
        return direction.iter().map(|d| d * scale).collect();
    }
    // Normalizing by the max entry first keeps the power well inside range;
    // the final rescale removes it.
    let exponent = 1.0 / (p - 1.0);
    let d: Vec<f64> = direction.iter().map(|&x| signed_pow(x / m, exponent)).collect();
    let scale = length / p_norm(&d, p);
    d.into_iter().map(|x| x * scale).collect()
}

/// Dual norm order `q = p/(p−1)`.
fn dual_order(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Exact maximizer of `gradᵀμ` over the divergence ball around `mu_beta`.
///
/// A zero gradient leaves `mu_beta` unchanged with radius 0.
pub fn closed_form_update(mu_beta: &Logits, grad: &Logits, spec: &ConstraintSpec) -> Result<UpdateSolution> {
    mu_beta.check_same_len(grad)?;
    let r = constraint_radius(spec)?;
    let p = spec.p;

    if grad.iter().all(|&g| g == 0.0) {
        return Ok(UpdateSolution {
            mu_star: mu_beta.clone(),
            radius: 0.0,
            multiplier: 0.0,
            stationarity_residual: 0.0,
        });
    }

    let step = dual_step(grad, p, r);
    let mu_star = Logits::new(mu_beta.iter().zip(&step).map(|(m, s)| m + s).collect())?;

    // From g = ε·φ·p·sign(x)|x|^(p−1) with x = r·d/‖d‖_p:
    // ε = ‖g‖_q / (φ·p·r^(p−1)).
    let multiplier = p_norm(grad, dual_order(p)) / (spec.phi * p * r.powf(p - 1.0));
    let stationarity_residual = grad
        .iter()
        .zip(&step)
        .map(|(&g, &x)| (g - multiplier * spec.phi * p * signed_pow(x, p - 1.0)).abs())
        .fold(0.0, f64::max);

    Ok(UpdateSolution {
        radius: p_norm(&step, p),
        mu_star,
        multiplier,
        stationarity_residual,
    })
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = p_norm(a, 2.0);
    let nb = p_norm(b, 2.0);
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x / na) * (y / nb)).sum()
}
