use std::collections::HashMap;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_choice, AccuracyReport, EvalTask, PreferenceItem, PromptParts, DEFAULT_SYSTEM_PROMPT};
use crate::backend::LogitsBackend;
use crate::decode::{Decoder, Prompt, SamplingConfig, Segment};
use crate::rng::{quarter, stream_rng};
use crate::scd::{AlignmentConfig, Placement, PrincipleTemplate};
use crate::{Error, Result};

const SHUFFLE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    /// No persona anywhere.
    Baseline,
    /// Persona sentence inside the single prompt.
    PrinciplePrompt,
    /// Persona sentence only in the principled context of the aligned pair.
    LinearAlign,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub mode: EvalMode,
    /// Draws ground truths and shuffle seeds.
    pub seed: u64,
    pub system_prompt: String,
    pub shuffle_options: bool,
    /// Stop at the first failed item instead of scoring it incorrect.
    pub abort_on_error: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            mode: EvalMode::Baseline,
            seed: 0,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            shuffle_options: false,
            abort_on_error: false,
        }
    }
}

/// Draw one ground-truth description per item.
pub fn assign_tasks(items: &[PreferenceItem], seed: u64, shuffle_options: bool) -> Vec<EvalTask> {
    let mut truths = stream_rng(seed, 0);
    let mut shuffles = stream_rng(seed, SHUFFLE_STREAM);
    items
        .iter()
        .map(|item| {
            let ground_truth_index = quarter(&mut truths);
            let shuffle_seed = shuffle_options.then(|| shuffles.next_u64());
            EvalTask {
                item: item.clone(),
                ground_truth_index,
                shuffle_seed,
            }
        })
        .collect()
}

/// Everything a responder needs to answer one item.
#[derive(Debug, Clone)]
pub struct EvalRequest<'a> {
    /// Position of the item in the dataset.
    pub index: usize,
    pub task: &'a EvalTask,
    pub parts: PromptParts,
    pub mode: EvalMode,
}

pub trait Responder: Sync {
    fn respond(&self, request: &EvalRequest<'_>) -> Result<String>;
}

/// Canned replies keyed by item id.
#[derive(Debug, Clone, Default)]
pub struct ScriptedResponder {
    replies: HashMap<String, String>,
    fallback: Option<String>,
}

impl ScriptedResponder {
    /// The same reply for every item.
    pub fn constant(reply: impl Into<String>) -> Self {
        Self {
            replies: HashMap::new(),
            fallback: Some(reply.into()),
        }
    }

    pub fn with_reply(mut self, id: impl Into<String>, reply: impl Into<String>) -> Self {
        self.replies.insert(id.into(), reply.into());
        self
    }
}

impl Responder for ScriptedResponder {
    fn respond(&self, request: &EvalRequest<'_>) -> Result<String> {
        let id = &request.task.item.id;
        self.replies
            .get(id)
            .or(self.fallback.as_ref())
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("no scripted reply for item {id:?}")))
    }
}

/// Answers by decoding against a backend with a text tokenizer.
///
/// Item `i` decodes on stream `i + 1` of the sampling seed.
pub struct DecoderResponder<'b> {
    backend: &'b dyn LogitsBackend,
    align: AlignmentConfig,
    sampling: SamplingConfig,
}

impl<'b> DecoderResponder<'b> {
    pub fn new(backend: &'b dyn LogitsBackend, align: AlignmentConfig, sampling: SamplingConfig) -> Result<Self> {
        Decoder::new(backend, align, sampling.clone())?;
        if !backend.meta().has_tokenizer {
            return Err(Error::Config("evaluation needs a backend with a tokenizer".into()));
        }
        Ok(Self {
            backend,
            align,
            sampling,
        })
    }
}

impl Responder for DecoderResponder<'_> {
    fn respond(&self, request: &EvalRequest<'_>) -> Result<String> {
        let decoder =
            Decoder::new(self.backend, self.align, self.sampling.clone())?.with_stream(request.index as u64 + 1);
        let parts = &request.parts;
        let (history, principle) = match request.mode {
            EvalMode::Baseline => (parts.system.clone(), None),
            EvalMode::PrinciplePrompt => (format!("{}{}", parts.system, parts.persona), None),
            EvalMode::LinearAlign => (
                parts.system.clone(),
                Some(PrincipleTemplate::new(parts.persona.clone(), Placement::UserPrefix)?),
            ),
        };
        let prompt = Prompt {
            history: Segment::Text(history),
            message: Segment::Text(parts.body.clone()),
        };
        let out = decoder.generate(&prompt, principle.as_ref())?;
        Ok(out.text.unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub domain: String,
    pub ground_truth_index: usize,
    /// Letter index the correct answer was shown under.
    pub correct_option: usize,
    pub response: Option<String>,
    pub choice: Option<usize>,
    pub correct: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub report: AccuracyReport,
    pub records: Vec<ItemRecord>,
}

/// Score every item. Items run in parallel; records keep dataset order.
pub fn evaluate(responder: &dyn Responder, items: &[PreferenceItem], settings: &EvalSettings) -> Result<EvalOutcome> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let tasks = assign_tasks(items, settings.seed, settings.shuffle_options);
    let answers: Vec<Result<String>> = tasks
        .par_iter()
        .enumerate()
        .map(|(index, task)| {
            responder.respond(&EvalRequest {
                index,
                task,
                parts: PromptParts::new(task, &settings.system_prompt),
                mode: settings.mode,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(tasks.len());
    for (task, answer) in tasks.iter().zip(answers) {
        let correct_option = task.correct_option();
        let (response, error) = match answer {
            Ok(text) => (Some(text), None),
            Err(e) if settings.abort_on_error => return Err(e),
            Err(e) => (None, Some(e.to_string())),
        };
        let choice = response.as_deref().and_then(extract_choice);
        records.push(ItemRecord {
            id: task.item.id.clone(),
            domain: task.item.domain.clone(),
            ground_truth_index: task.ground_truth_index,
            correct_option,
            correct: choice == Some(correct_option),
            response,
            choice,
            error,
        });
    }

    let unparsed = records
        .iter()
        .filter(|r| r.response.is_some() && r.choice.is_none())
        .count();
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let report = AccuracyReport::tally(records.iter().map(|r| (r.domain.as_str(), r.correct)), unparsed, failed);
    Ok(EvalOutcome { report, records })
}
