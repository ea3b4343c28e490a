use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{PreferenceItem, OPTION_LETTERS};
use crate::rng::stream_rng;
use crate::{Error, Result};

pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a helpful, respectful and honest assistant. \
Always answer as helpfully as possible, while being safe.";

pub const CLOSING_INSTRUCTION: &str = "You need to choose the best answer for the given question.";

pub fn persona_sentence(user_description: &str) -> String {
    format!(
        "The person who asked the question is {user_description}, \
your answer needs to take his(her) needs into account."
    )
}

/// An item with the asker's description chosen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTask {
    pub item: PreferenceItem,
    /// Index into `item.preferences` of the asker.
    pub ground_truth_index: usize,
    /// When set, options are presented in a seeded permutation.
    pub shuffle_seed: Option<u64>,
}

impl EvalTask {
    pub fn new(item: PreferenceItem, ground_truth_index: usize, shuffle_seed: Option<u64>) -> Result<Self> {
        if ground_truth_index > 3 {
            return Err(Error::InvalidArgument(format!(
                "ground truth index {ground_truth_index} outside 0..=3"
            )));
        }
        Ok(Self {
            item,
            ground_truth_index,
            shuffle_seed,
        })
    }

    /// `order[j]` is the answer shown under letter `j`.
    pub fn option_order(&self) -> [usize; 4] {
        let mut order = [0, 1, 2, 3];
        if let Some(seed) = self.shuffle_seed {
            order.shuffle(&mut stream_rng(seed, 0));
        }
        order
    }

    /// Letter index under which the ground-truth answer is shown.
    pub fn correct_option(&self) -> usize {
        self.option_order()
            .iter()
            .position(|&a| a == self.ground_truth_index)
            .expect("permutation of 0..4")
    }

    pub fn persona(&self) -> &str {
        &self.item.preferences[self.ground_truth_index]
    }
}

/// The multiple-choice prompt split at the persona sentence.
///
/// `system + persona + body` is the full prompt; `system + body` is the same
/// prompt with no knowledge of the asker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptParts {
    pub system: String,
    pub persona: String,
    pub body: String,
}

impl PromptParts {
    pub fn new(task: &EvalTask, system_prompt: &str) -> Self {
        let system = if system_prompt.trim().is_empty() {
            String::new()
        } else {
            format!("{} ", system_prompt.trim())
        };
        let persona = format!("{}\n", persona_sentence(task.persona()));

        let mut body = format!("Question: {}.\n", task.item.question.trim());
        for (letter, &answer) in OPTION_LETTERS.iter().zip(task.option_order().iter()) {
            body.push_str(&format!("{letter}. {}\n", task.item.answers[answer].trim()));
        }
        body.push_str(CLOSING_INSTRUCTION);
        body.push_str(" Answer:");
        Self { system, persona, body }
    }

    pub fn full(&self) -> String {
        format!("{}{}{}", self.system, self.persona, self.body)
    }

    pub fn without_persona(&self) -> String {
        format!("{}{}", self.system, self.body)
    }
}

/// Render the multiple-choice prompt for `task`.
pub fn build_prompt(task: &EvalTask, system_prompt: &str) -> String {
    PromptParts::new(task, system_prompt).full()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item() -> PreferenceItem {
        PreferenceItem {
            id: "career-01".into(),
            domain: "Career planning".into(),
            question: "What strategies are effective for gaining new skills relevant to my career growth?".into(),
            preferences: [
                "a recent graduate entering the tech industry".into(),
                "a mid-career professional pivoting to creative design".into(),
                "an executive seeking to stay abreast of market trends".into(),
                "a retiree looking to re-enter the workforce part-time".into(),
            ],
            answers: ["first".into(), "second".into(), "third".into(), "fourth".into()],
        }
    }

    #[test]
    fn renders_template() {
        let task = EvalTask::new(item(), 0, None).unwrap();
        let p = build_prompt(&task, DEFAULT_SYSTEM_PROMPT);
        assert!(p.starts_with(DEFAULT_SYSTEM_PROMPT));
        assert!(p.contains(
            "The person who asked the question is a recent graduate entering the tech industry, \
your answer needs to take his(her) needs into account."
        ));
        assert!(
            p.contains("Question: What strategies are effective for gaining new skills relevant to my career growth?.")
        );
        for line in ["A. first", "B. second", "C. third", "D. fourth"] {
            assert!(p.lines().any(|l| l == line), "missing {line:?} in\n{p}");
        }
        assert!(p.ends_with("You need to choose the best answer for the given question. Answer:"));
        assert_eq!(p, build_prompt(&task, DEFAULT_SYSTEM_PROMPT));
    }

    #[test]
    fn empty_system_prompt() {
        let task = EvalTask::new(item(), 2, None).unwrap();
        let p = build_prompt(&task, "");
        assert!(p.starts_with("The person who asked the question is an executive"));
    }

    #[test]
    fn persona_free_variant() {
        let task = EvalTask::new(item(), 1, None).unwrap();
        let parts = PromptParts::new(&task, DEFAULT_SYSTEM_PROMPT);
        assert!(!parts.without_persona().contains("The person who asked"));
        assert_eq!(parts.full(), build_prompt(&task, DEFAULT_SYSTEM_PROMPT));
    }

    #[test]
    fn shuffled_options_track_ground_truth() {
        for seed in 0..20 {
            let task = EvalTask::new(item(), 3, Some(seed)).unwrap();
            let order = task.option_order();
            let mut sorted = order;
            sorted.sort();
            assert_eq!(sorted, [0, 1, 2, 3]);
            assert_eq!(order[task.correct_option()], 3);
            let p = build_prompt(&task, "");
            let letter = OPTION_LETTERS[task.correct_option()];
            assert!(p.contains(&format!("{letter}. fourth")));
        }
        assert!(EvalTask::new(item(), 4, None).is_err());
    }
}
