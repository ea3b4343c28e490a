use std::path::PathBuf;

use linalign::backend::{LogitsBackend, ToyModel, ToyModelSpec};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn suite() -> ToyModel {
    ToyModel::load(data("suite_lm.json")).unwrap()
}

#[test]
fn shipped_models_load_and_round_trip() {
    for name in ["suite_lm.json", "steering_lm.json"] {
        let model = ToyModel::load(data(name)).unwrap();
        let dumped = model.spec().to_json();
        let again = ToyModelSpec::from_json(&dumped).unwrap();
        assert_eq!(&again, model.spec());
        assert_eq!(again.to_json(), dumped);
    }
}

#[test]
fn save_and_reload_through_a_file() {
    let model = suite();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.json");
    std::fs::write(&path, model.spec().to_json()).unwrap();
    let copy = ToyModel::load(&path).unwrap();
    for ctx in [&[][..], &[2, 3], &[9, 9, 9, 4]] {
        assert_eq!(copy.logits(ctx).unwrap(), model.logits(ctx).unwrap());
    }
}

#[test]
fn load_errors_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"vocab_size\": 3}").unwrap();
    let msg = ToyModel::load(&path).unwrap_err().to_string();
    assert!(msg.contains("broken.json"), "{msg}");
    let missing = ToyModel::load(dir.path().join("absent.json")).unwrap_err().to_string();
    assert!(missing.contains("absent.json"), "{missing}");
}

fn context() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..16, 0..12)
}

proptest! {
    #[test]
    fn logits_are_pure(ctx in context()) {
        let m = suite();
        prop_assert_eq!(m.logits(&ctx).unwrap(), m.logits(&ctx).unwrap());
    }

    #[test]
    fn batched_equals_mapped(ctxs in prop::collection::vec(context(), 0..6)) {
        let m = suite();
        let refs: Vec<&[u32]> = ctxs.iter().map(Vec::as_slice).collect();
        let batched = m.batched_logits(&refs).unwrap();
        let mapped: Vec<_> = refs.iter().map(|c| m.logits(c).unwrap()).collect();
        prop_assert_eq!(batched, mapped);
    }

    #[test]
    fn only_the_trailing_window_matters(head in context(), tail in prop::collection::vec(2u32..16, 2)) {
        // Content tokens never form the principle trigger, so a context
        // starting with one sees no shift.
        let m = suite();
        let mut long = vec![2];
        long.extend(&head);
        long.extend(&tail);
        let mut short = vec![2];
        short.extend(&tail);
        prop_assert_eq!(m.logits(&long).unwrap(), m.logits(&short).unwrap());
    }

    #[test]
    fn principle_prefix_adds_a_constant_shift(ctx in context()) {
        let m = suite();
        let rule = &m.spec().principle_shifts[0];
        let principled = [rule.trigger.as_slice(), &ctx].concat();
        let a = m.logits(&ctx).unwrap();
        let b = m.logits(&principled).unwrap();
        // The plain context may itself start with the trigger only if it is
        // at least as long; the trigger is far longer than these contexts.
        prop_assume!(ctx.len() < rule.trigger.len());
        for ((x, y), s) in a.iter().zip(b.iter()).zip(&rule.shift) {
            prop_assert_eq!(y - x, (x + s) - x);
        }
    }
}
