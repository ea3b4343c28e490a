//! The aligned decoding loop.
//!
//! Each step runs the model twice, once on the plain context and once on the
//! context carrying the principle, turns the difference into a unit direction,
//! shifts the plain logits along it and samples. The sampled token is appended
//! to both contexts.

mod sampling;

pub use sampling::{argmax, sample, SamplingConfig, SamplingMode};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::{check_context, BackendError, LogitsBackend};
use crate::rng::{stream_rng, SessionRng};
use crate::scd::{apply_alignment, gradient_estimate, AlignmentConfig, GradientEstimate, Placement, PrincipleTemplate};
use crate::{Error, Logits, Result, TokenId};

/// A piece of prompt, either raw text for the backend tokenizer or token ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Segment {
    Text(String),
    Tokens(Vec<TokenId>),
}

impl Segment {
    fn resolve(&self, backend: &dyn LogitsBackend) -> Result<Vec<TokenId>> {
        match self {
            Segment::Tokens(ids) => {
                check_context(ids, backend.meta().vocab_size)?;
                Ok(ids.clone())
            }
            Segment::Text(text) if text.is_empty() => Ok(Vec::new()),
            Segment::Text(text) => Ok(backend.tokenize(text)?),
        }
    }
}

/// Dialog context: earlier material followed by the final user message.
///
/// A system-prefix principle goes before `history`; a user-prefix principle
/// goes between `history` and `message`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub history: Segment,
    pub message: Segment,
}

impl Prompt {
    pub fn text(message: impl Into<String>) -> Self {
        Self {
            history: Segment::Text(String::new()),
            message: Segment::Text(message.into()),
        }
    }

    pub fn tokens(message: Vec<TokenId>) -> Self {
        Self {
            history: Segment::Tokens(Vec::new()),
            message: Segment::Tokens(message),
        }
    }
}

/// How the two forwards of a step reach the backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DualForward {
    /// One batched call when the backend supports it, else two calls.
    #[default]
    Auto,
    Batched,
    Sequential,
}

/// One decoding session. Owned by a single caller.
#[derive(Debug, Clone)]
pub struct DecodeState {
    plain_context: Vec<TokenId>,
    principled_context: Vec<TokenId>,
    principle_tokens: Vec<TokenId>,
    generated: Vec<TokenId>,
    step: usize,
    rng: SessionRng,
    finished: bool,
    has_principle: bool,
}

impl DecodeState {
    pub fn plain_context(&self) -> &[TokenId] {
        &self.plain_context
    }

    /// Equal to the plain context when the session has no principle.
    pub fn principled_context(&self) -> &[TokenId] {
        &self.principled_context
    }

    pub fn principle_tokens(&self) -> &[TokenId] {
        &self.principle_tokens
    }

    pub fn generated(&self) -> &[TokenId] {
        &self.generated
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn has_principle(&self) -> bool {
        self.has_principle
    }

    fn push(&mut self, token: TokenId) {
        self.plain_context.push(token);
        if self.has_principle {
            self.principled_context.push(token);
        } else {
            self.principled_context = self.plain_context.clone();
        }
        self.generated.push(token);
        self.step += 1;
    }
}

/// Logits of one step before sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedLogits {
    pub plain: Logits,
    /// `None` when the session has no principle.
    pub principled: Option<Logits>,
    pub estimate: GradientEstimate,
    pub aligned: Logits,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub token: TokenId,
    pub raw_norm: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub tokens: Vec<TokenId>,
    /// Detokenized output when the backend has a tokenizer.
    pub text: Option<String>,
    /// Unnormalized norm of each step's logit difference.
    pub per_step_norms: Vec<f64>,
    /// Steps whose difference fell below the degeneracy floor.
    pub steps_skipped: usize,
}

/// Runs sessions against one backend with fixed configuration.
#[derive(Clone)]
pub struct Decoder<'b> {
    backend: &'b dyn LogitsBackend,
    align: AlignmentConfig,
    sampling: SamplingConfig,
    dual_forward: DualForward,
    stream: u64,
    stop_tokens: BTreeSet<TokenId>,
}

impl<'b> Decoder<'b> {
    pub fn new(backend: &'b dyn LogitsBackend, align: AlignmentConfig, sampling: SamplingConfig) -> Result<Self> {
        align.validate()?;
        sampling.validate()?;
        let meta = backend.meta();
        let mut stop_tokens = sampling.stop_tokens.clone();
        stop_tokens.extend(meta.stop_token_ids.iter().copied());
        if let Some(&t) = stop_tokens.iter().find(|&&t| t as usize >= meta.vocab_size) {
            return Err(Error::Config(format!(
                "stop token {t} outside vocabulary of size {}",
                meta.vocab_size
            )));
        }
        Ok(Self {
            backend,
            align,
            sampling,
            dual_forward: DualForward::Auto,
            stream: 0,
            stop_tokens,
        })
    }

    pub fn with_dual_forward(mut self, mode: DualForward) -> Self {
        self.dual_forward = mode;
        self
    }

    /// Select the random stream of the session seed.
    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn align(&self) -> &AlignmentConfig {
        &self.align
    }

    pub fn sampling(&self) -> &SamplingConfig {
        &self.sampling
    }

    pub fn start(&self, prompt: &Prompt, principle: Option<&PrincipleTemplate>) -> Result<DecodeState> {
        let history = prompt.history.resolve(self.backend)?;
        let message = prompt.message.resolve(self.backend)?;
        let plain_context = [history.as_slice(), message.as_slice()].concat();

        let (principle_tokens, principled_context) = match principle {
            None => (Vec::new(), plain_context.clone()),
            Some(t) => {
                let tokens = Segment::Text(t.text().to_string()).resolve(self.backend)?;
                let ctx = match t.placement() {
                    Placement::SystemPrefix => [tokens.as_slice(), &history, &message].concat(),
                    Placement::UserPrefix => [history.as_slice(), &tokens, &message].concat(),
                };
                (tokens, ctx)
            }
        };

        Ok(DecodeState {
            plain_context,
            principled_context,
            principle_tokens,
            generated: Vec::new(),
            step: 0,
            rng: stream_rng(self.sampling.seed, self.stream),
            finished: false,
            has_principle: principle.is_some(),
        })
    }

    fn forward_pair(&self, state: &DecodeState) -> Result<(Logits, Logits), BackendError> {
        let plain = state.plain_context.as_slice();
        let principled = state.principled_context.as_slice();
        let batched = match self.dual_forward {
            DualForward::Auto => self.backend.supports_batching(),
            DualForward::Batched => true,
            DualForward::Sequential => false,
        };
        if batched {
            let rows = self.backend.batched_logits(&[plain, principled])?;
            let [a, b]: [Logits; 2] = rows.try_into().map_err(|rows: Vec<Logits>| {
                BackendError::Protocol(format!("dual forward returned {} rows", rows.len()))
            })?;
            Ok((a, b))
        } else {
            Ok((self.backend.logits(plain)?, self.backend.logits(principled)?))
        }
    }

    /// The aligned logits for the state's next position, without sampling.
    pub fn aligned_logits(&self, state: &DecodeState) -> Result<AlignedLogits> {
        let vocab = self.backend.meta().vocab_size;
        let check = |l: &Logits| -> Result<(), BackendError> {
            if l.len() != vocab {
                return Err(BackendError::VocabMismatch {
                    expected: vocab,
                    actual: l.len(),
                });
            }
            Ok(())
        };

        if !state.has_principle {
            let plain = self.backend.logits(&state.plain_context)?;
            check(&plain)?;
            return Ok(AlignedLogits {
                estimate: GradientEstimate::none(plain.len()),
                aligned: plain.clone(),
                plain,
                principled: None,
            });
        }

        let (plain, principled) = self.forward_pair(state)?;
        check(&plain)?;
        check(&principled)?;
        let estimate = gradient_estimate(&plain, &principled, self.align.epsilon_floor)?;
        let aligned = apply_alignment(&plain, &estimate, &self.align)?;
        Ok(AlignedLogits {
            plain,
            principled: Some(principled),
            estimate,
            aligned,
        })
    }

    /// Sample one token and append it to both contexts.
    pub fn step(&self, state: &mut DecodeState) -> Result<StepOutcome> {
        if state.finished {
            return Err(Error::InvalidArgument("session already finished".into()));
        }
        let at = state.step;
        let wrap = |e: Error| Error::Step {
            step: at,
            source: Box::new(e),
        };
        let logits = self.aligned_logits(state).map_err(wrap)?;
        let token = sample(&logits.aligned, &self.sampling, &mut state.rng).map_err(wrap)?;
        state.push(token);
        if self.stop_tokens.contains(&token) || state.generated.len() >= self.sampling.max_new_tokens {
            state.finished = true;
        }
        Ok(StepOutcome {
            token,
            raw_norm: logits.estimate.raw_norm,
            degenerate: logits.estimate.degenerate,
        })
    }

    /// Decode until a stop token or the token budget.
    pub fn generate(&self, prompt: &Prompt, principle: Option<&PrincipleTemplate>) -> Result<GenerationResult> {
        let mut state = self.start(prompt, principle)?;
        let mut per_step_norms = Vec::new();
        let mut steps_skipped = 0;
        while !state.finished {
            let outcome = self.step(&mut state).map_err(|e| Error::Generation {
                partial: state.generated.clone(),
                source: Box::new(e),
            })?;
            per_step_norms.push(outcome.raw_norm);
            steps_skipped += usize::from(outcome.degenerate);
        }
        let text = if self.backend.meta().has_tokenizer {
            Some(
                self.backend
                    .detokenize(&state.generated)
                    .map_err(|e| Error::Generation {
                        partial: state.generated.clone(),
                        source: Box::new(e.into()),
                    })?,
            )
        } else {
            None
        };
        Ok(GenerationResult {
            tokens: state.generated,
            text,
            per_step_norms,
            steps_skipped,
        })
    }
}
