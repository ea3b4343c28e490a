use std::path::PathBuf;

use linalign::backend::{LogitsBackend, ToyModel};
use linalign::decode::{Decoder, DualForward, Prompt, SamplingConfig};
use linalign::scd::{AlignmentConfig, PrincipleTemplate};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn suite() -> ToyModel {
    ToyModel::load(data("suite_lm.json")).unwrap()
}

fn prompts() -> Vec<String> {
    serde_json::from_str(&std::fs::read_to_string(data("suite_prompts.json")).unwrap()).unwrap()
}

fn principle() -> PrincipleTemplate {
    PrincipleTemplate::builtin("harmless").unwrap()
}

fn sampled(seed: u64) -> SamplingConfig {
    SamplingConfig {
        max_new_tokens: 24,
        top_k: Some(8),
        top_p: Some(0.95),
        temperature: 0.8,
        seed,
        ..SamplingConfig::default()
    }
}

fn log_softmax(v: &[f64], i: usize) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    v[i] - lse
}

#[test]
fn suite_has_twenty_prompts() {
    assert_eq!(prompts().len(), 20);
}

#[test]
fn zero_lambda_greedy_is_plain_greedy() {
    let m = suite();
    let aligned = Decoder::new(&m, AlignmentConfig::with_lambda(0.0), SamplingConfig::greedy(32)).unwrap();
    for p in prompts() {
        let plain = aligned.generate(&Prompt::text(p.as_str()), None).unwrap();
        let zero = aligned.generate(&Prompt::text(p.as_str()), Some(&principle())).unwrap();
        assert_eq!(plain.tokens, zero.tokens, "prompt {p:?}");
    }
}

#[test]
fn steering_token_log_probability_is_monotone_in_lambda() {
    let m = suite();
    let rule = &m.spec().principle_shifts[0];
    let target = rule
        .shift
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let lambdas = [0.0, 1.0, 2.0, 3.0, 4.0, 8.0];
    let decoders: Vec<Decoder> = lambdas
        .iter()
        .map(|&l| Decoder::new(&m, AlignmentConfig::with_lambda(l), SamplingConfig::greedy(16)).unwrap())
        .collect();
    for p in prompts() {
        let mut state = decoders[0]
            .start(&Prompt::text(p.as_str()), Some(&principle()))
            .unwrap();
        while !state.is_finished() {
            let lp: Vec<f64> = decoders
                .iter()
                .map(|d| log_softmax(&d.aligned_logits(&state).unwrap().aligned, target))
                .collect();
            assert!(
                lp.windows(2).all(|w| w[1] >= w[0]),
                "prompt {p:?} step {}: {lp:?}",
                state.step()
            );
            decoders[0].step(&mut state).unwrap();
        }
    }
}

#[test]
fn batched_and_sequential_forwards_agree() {
    let m = suite();
    for p in prompts() {
        let run = |mode| {
            Decoder::new(&m, AlignmentConfig::default(), sampled(3))
                .unwrap()
                .with_dual_forward(mode)
                .generate(&Prompt::text(p.as_str()), Some(&principle()))
                .unwrap()
        };
        let batched = run(DualForward::Batched);
        assert_eq!(batched, run(DualForward::Sequential));
        assert_eq!(batched, run(DualForward::Auto));
    }
}

#[test]
fn generation_is_deterministic_and_well_formed() {
    let m = suite();
    let d = Decoder::new(&m, AlignmentConfig::default(), sampled(11)).unwrap();
    let stops = &m.meta().stop_token_ids;
    for p in prompts() {
        let a = d.generate(&Prompt::text(p.as_str()), Some(&principle())).unwrap();
        assert_eq!(a, d.generate(&Prompt::text(p.as_str()), Some(&principle())).unwrap());
        assert!(a.tokens.len() <= 24);
        assert_eq!(a.per_step_norms.len(), a.tokens.len());
        let last = *a.tokens.last().unwrap();
        assert!(stops.contains(&last) || a.tokens.len() == 24);
        assert!(a.tokens[..a.tokens.len() - 1].iter().all(|t| !stops.contains(t)));
    }
}

#[test]
fn different_streams_diverge() {
    let m = suite();
    let d = Decoder::new(&m, AlignmentConfig::default(), sampled(11)).unwrap();
    let outs: Vec<_> = (0..8)
        .map(|s| {
            d.clone()
                .with_stream(s)
                .generate(&Prompt::text("the"), None)
                .unwrap()
                .tokens
        })
        .collect();
    assert!(outs.iter().any(|o| o != &outs[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn contexts_share_the_generated_suffix(
        prompt in prop::collection::vec(0u32..16, 0..8),
        seed in any::<u64>(),
        lambda in 0.0..8.0f64,
    ) {
        let m = suite();
        let d = Decoder::new(&m, AlignmentConfig::with_lambda(lambda), sampled(seed)).unwrap();
        let mut state = d.start(&Prompt::tokens(prompt.clone()), Some(&principle())).unwrap();
        let tau = state.principle_tokens().to_vec();
        while !state.is_finished() {
            d.step(&mut state).unwrap();
            let generated = state.generated();
            prop_assert!(state.plain_context().ends_with(generated));
            prop_assert!(state.principled_context().ends_with(generated));
            prop_assert_eq!(state.plain_context().to_vec(), [prompt.as_slice(), generated].concat());
            prop_assert_eq!(state.principled_context().to_vec(), [tau.as_slice(), &prompt, generated].concat());
        }
    }

    #[test]
    fn fused_and_split_steps_are_bit_identical(
        prompt in prop::collection::vec(0u32..16, 0..8),
        seed in any::<u64>(),
        p in prop::sample::select(vec![1.5, 2.0, 3.0]),
    ) {
        let m = suite();
        let align = AlignmentConfig { p, ..AlignmentConfig::default() };
        let fused = Decoder::new(&m, align, sampled(seed)).unwrap().with_dual_forward(DualForward::Batched);
        let split = fused.clone().with_dual_forward(DualForward::Sequential);
        let mut state = fused.start(&Prompt::tokens(prompt), Some(&principle())).unwrap();
        while !state.is_finished() {
            prop_assert_eq!(fused.aligned_logits(&state).unwrap(), split.aligned_logits(&state).unwrap());
            fused.step(&mut state).unwrap();
        }
    }
}
