//! Personal-preference multiple-choice evaluation.
//!
//! Each item pairs a question with four user descriptions and the four
//! answers written for them. One description is drawn as the asker, the model
//! picks a letter, and accuracy is reported per domain and as a
//! count-weighted total.

mod dataset;
mod eval;
mod extract;
mod prompt;
mod report;

pub use dataset::{load_dataset, parse_dataset, DatasetError, PreferenceItem};
pub use eval::{
    assign_tasks, evaluate, DecoderResponder, EvalMode, EvalOutcome, EvalRequest, EvalSettings, ItemRecord, Responder,
    ScriptedResponder,
};
pub use extract::extract_choice;
pub use prompt::{build_prompt, persona_sentence, EvalTask, PromptParts, CLOSING_INSTRUCTION, DEFAULT_SYSTEM_PROMPT};
pub use report::{weighted_accuracy, AccuracyReport, DomainScore, CANONICAL_DOMAINS};

/// Option labels in presentation order.
pub const OPTION_LETTERS: [char; 4] = ['A', 'B', 'C', 'D'];
