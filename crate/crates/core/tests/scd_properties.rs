use linalign::align::{closed_form_update, p_norm, ConstraintSpec};
use linalign::scd::{apply_alignment, gradient_estimate, AlignmentConfig};
use linalign::Logits;
use proptest::prelude::*;

fn logits(v: &[f64]) -> Logits {
    Logits::new(v.to_vec()).unwrap()
}

fn pair(max_dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2..=max_dim).prop_flat_map(|n| {
        (
            prop::collection::vec(-20.0..20.0f64, n),
            prop::collection::vec(-20.0..20.0f64, n),
        )
    })
}

fn cfg(p: f64, lambda: f64) -> AlignmentConfig {
    AlignmentConfig {
        p,
        lambda,
        ..AlignmentConfig::default()
    }
}

proptest! {
    #[test]
    fn step_has_requested_length((a, b) in pair(64), p in 1.2..6.0f64, lambda in 0.01..10.0f64) {
        let est = gradient_estimate(&logits(&a), &logits(&b), 1e-8).unwrap();
        prop_assume!(!est.degenerate);
        let out = apply_alignment(&logits(&a), &est, &cfg(p, lambda)).unwrap();
        let step: Vec<f64> = out.iter().zip(&a).map(|(o, x)| o - x).collect();
        let len = p_norm(&step, p);
        prop_assert!((len - lambda).abs() <= 1e-9 * lambda.max(1.0), "{len} vs {lambda}");
    }

    #[test]
    fn zero_step_and_degenerate_are_pass_through((a, b) in pair(32), p in 1.2..6.0f64) {
        let est = gradient_estimate(&logits(&a), &logits(&b), 1e-8).unwrap();
        prop_assert_eq!(apply_alignment(&logits(&a), &est, &cfg(p, 0.0)).unwrap(), logits(&a));
        let same = gradient_estimate(&logits(&a), &logits(&a), 1e-8).unwrap();
        prop_assert!(same.degenerate);
        prop_assert_eq!(apply_alignment(&logits(&a), &same, &cfg(p, 3.0)).unwrap(), logits(&a));
    }

    #[test]
    fn estimate_ignores_uniform_shift((a, b) in pair(32), c in -50.0..50.0f64) {
        let base = gradient_estimate(&logits(&a), &logits(&b), 1e-8).unwrap();
        prop_assume!(base.raw_norm > 1e-3);
        let sa: Vec<f64> = a.iter().map(|x| x + c).collect();
        let sb: Vec<f64> = b.iter().map(|x| x + c).collect();
        let shifted = gradient_estimate(&logits(&sa), &logits(&sb), 1e-8).unwrap();
        prop_assert_eq!(base.degenerate, shifted.degenerate);
        prop_assert!((base.raw_norm - shifted.raw_norm).abs() <= 1e-9 * base.raw_norm.max(1.0));
        for (x, y) in base.direction.iter().zip(shifted.direction.iter()) {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn p2_matches_closed_form((a, b) in pair(64), lambda in 0.01..10.0f64) {
        let est = gradient_estimate(&logits(&a), &logits(&b), 1e-8).unwrap();
        prop_assume!(!est.degenerate);
        let aligned = apply_alignment(&logits(&a), &est, &cfg(2.0, lambda)).unwrap();
        // Budget λ² with φ = 1 and log Z = 0 puts the radius at λ.
        let spec = ConstraintSpec::new(2.0, 1.0, lambda * lambda, 0.0).unwrap();
        let sol = closed_form_update(&logits(&a), &est.direction, &spec).unwrap();
        for (x, y) in aligned.iter().zip(sol.mu_star.iter()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()), "{x} vs {y}");
        }
    }
}

#[test]
fn direction_recomputed_independently() {
    let a: Vec<f64> = (0..16).map(|i| (i as f64 * 0.73).sin() * 4.0).collect();
    let b: Vec<f64> = (0..16).map(|i| (i as f64 * 1.31).cos() * 3.0 + 0.5).collect();
    let est = gradient_estimate(&logits(&a), &logits(&b), 1e-8).unwrap();
    let diff: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
    let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
    assert!((est.raw_norm - norm).abs() <= 1e-9);
    for (d, e) in diff.iter().zip(est.direction.iter()) {
        assert!((d / norm - e).abs() <= 1e-9);
    }
}

#[test]
fn p3_unit_step_recomputed() {
    let plain = logits(&[0.5, -0.25, 2.0, 1.0]);
    let principled = logits(&[1.5, 0.75, 1.0, 1.25]);
    let est = gradient_estimate(&plain, &principled, 1e-8).unwrap();
    let out = apply_alignment(&plain, &est, &cfg(3.0, 1.0)).unwrap();
    let step: Vec<f64> = out.iter().zip(plain.iter()).map(|(o, x)| o - x).collect();
    let norm3 = step.iter().map(|s| s.abs().powi(3)).sum::<f64>().cbrt();
    assert!((norm3 - 1.0).abs() <= 1e-9);
    // Dual direction of Δ = (1, 1, −1, 0.25) under p = 3: sign(Δ)·|Δ|^(1/2).
    let want = [1.0, 1.0, -1.0, 0.5];
    let wn = want.iter().map(|s: &f64| s.abs().powi(3)).sum::<f64>().cbrt();
    for (s, w) in step.iter().zip(want) {
        assert!((s - w / wn).abs() <= 1e-12);
    }
}
