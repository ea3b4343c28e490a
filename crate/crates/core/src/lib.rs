//! Decoding-time preference alignment.
//!
//! A principle-conditioned forward pass and a plain forward pass of the same
//! model are contrasted at every decoding step. Their logit difference gives
//! the ascent direction of the preference objective, and a closed-form update
//! under a p-norm divergence budget moves the plain logits along it before
//! sampling. No model parameters are touched.
//!
//! Module map:
//!
//! * [`align`]: the closed-form constrained update, an independent numerical
//!   maximizer used as an oracle, and KKT verification.
//! * [`scd`]: self-contrastive gradient estimation and the practical
//!   single-step-size update.
//! * [`decode`]: the token loop with paired contexts, sampling and stop rules.
//! * [`backend`]: the logits-provider trait, a deterministic n-gram toy model
//!   and the HTTP logits client.
//! * [`prefeval`]: the personal-preference multiple-choice harness.
//! * [`verify`]: randomized closed-form vs oracle verification suite.

pub mod align;
pub mod backend;
pub mod decode;
mod error;
mod logits;
pub mod prefeval;
pub mod rng;
pub mod scd;
pub mod verify;

pub use error::{Error, Result};
pub use logits::Logits;

/// Vocabulary index of a token.
pub type TokenId = u32;
