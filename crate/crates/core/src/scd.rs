//! Self-contrastive gradient estimation.
//!
//! The same model is queried with and without a principle text in its
//! context. The logit difference is taken as the preference gradient, and the
//! plain logits are moved a fixed p-norm distance along it.

use serde::{Deserialize, Serialize};

use crate::align::{check_norm_order, constraint_radius, dual_step, p_norm, ConstraintSpec};
use crate::{Error, Logits, Result};

const HARMLESS: &str = include_str!("../assets/principles/harmless.txt");
const HARMLESS_NUMBERED: &str = include_str!("../assets/principles/harmless-numbered.txt");

/// Names accepted by [`PrincipleTemplate::builtin`].
pub const BUILTIN_PRINCIPLES: &[&str] = &["harmless", "harmless-numbered"];

/// Where the principle text goes relative to the dialog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Before the whole dialog, like a system preamble.
    #[default]
    SystemPrefix,
    /// Between the dialog history and the final user message.
    UserPrefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipleTemplate {
    text: String,
    placement: Placement,
}

impl PrincipleTemplate {
    pub fn new(text: impl Into<String>, placement: Placement) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::Config("principle text must not be empty".into()));
        }
        Ok(Self { text, placement })
    }

    /// One of the shipped principle texts, placed as a system prefix.
    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name {
            "harmless" => HARMLESS,
            "harmless-numbered" => HARMLESS_NUMBERED,
            _ => return None,
        };
        Some(Self {
            text: text.trim_end().to_string(),
            placement: Placement::SystemPrefix,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }
}

/// Normalized logit difference between principled and plain forwards.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    /// Unit ℓ2 direction, or all zeros when `degenerate`.
    pub direction: Logits,
    /// ℓ2 norm of the difference before normalization.
    pub raw_norm: f64,
    pub degenerate: bool,
}

impl GradientEstimate {
    /// The estimate for a step with no principled counterpart.
    pub fn none(vocab_size: usize) -> Self {
        Self {
            direction: Logits::zeros(vocab_size),
            raw_norm: 0.0,
            degenerate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentConfig {
    /// Norm order of the divergence ball.
    pub p: f64,
    /// Step length in the p-norm.
    pub lambda: f64,
    /// Differences with ℓ2 norm below this are treated as no signal.
    pub epsilon_floor: f64,
    /// When set, the step length is the constraint radius of this spec
    /// instead of `lambda`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_form: Option<ConstraintSpec>,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            lambda: 3.0,
            epsilon_floor: 1e-8,
            full_form: None,
        }
    }
}

impl AlignmentConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_norm_order(self.p)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.epsilon_floor.is_finite() && self.epsilon_floor > 0.0) {
            return Err(Error::Config(format!(
                "epsilon_floor must be > 0, got {}",
                self.epsilon_floor
            )));
        }
        if let Some(spec) = &self.full_form {
            spec.validate()?;
            if spec.p != self.p {
                return Err(Error::Config(format!(
                    "full-form constraint uses p = {} but the alignment uses p = {}",
                    spec.p, self.p
                )));
            }
        }
        Ok(())
    }

    /// p-norm length of one update.
    pub fn step_length(&self) -> Result<f64> {
        match &self.full_form {
            Some(spec) => constraint_radius(spec),
            None => Ok(self.lambda),
        }
    }
}

pub fn gradient_estimate(
    logits_plain: &Logits,
    logits_principled: &Logits,
    epsilon_floor: f64,
) -> Result<GradientEstimate> {
    logits_plain.check_same_len(logits_principled)?;
    if !(epsilon_floor.is_finite() && epsilon_floor > 0.0) {
        return Err(Error::Config(format!("epsilon_floor must be > 0, got {epsilon_floor}")));
    }
    let delta: Vec<f64> = logits_principled
        .iter()
        .zip(logits_plain.iter())
        .map(|(b, a)| b - a)
        .collect();
    let raw_norm = p_norm(&delta, 2.0);
    if raw_norm < epsilon_floor {
        return Ok(GradientEstimate {
            direction: Logits::zeros(delta.len()),
            raw_norm,
            degenerate: true,
        });
    }
    let direction = Logits::new(delta.into_iter().map(|d| d / raw_norm).collect())?;
    Ok(GradientEstimate {
        direction,
        raw_norm,
        degenerate: false,
    })
}

/// Move `logits_plain` a p-norm distance of the configured step length along
/// the dual direction of `est`.
///
/// Degenerate estimates and zero steps return the input unchanged.
pub fn apply_alignment(logits_plain: &Logits, est: &GradientEstimate, cfg: &AlignmentConfig) -> Result<Logits> {
    cfg.validate()?;
    logits_plain.check_same_len(&est.direction)?;
    let length = cfg.step_length()?;
    if est.degenerate || length == 0.0 {
        return Ok(logits_plain.clone());
    }
    let step = dual_step(&est.direction, cfg.p, length);
    Logits::new(logits_plain.iter().zip(&step).map(|(l, s)| l + s).collect())
}
