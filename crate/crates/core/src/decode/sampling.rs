use std::collections::BTreeSet;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::rng::unit_f64;
use crate::{Error, Result, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Greedy,
    Temperature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub mode: SamplingMode,
    pub temperature: f64,
    pub top_k: Option<usize>,
    pub top_p: Option<f64>,
    pub max_new_tokens: usize,
    /// Merged with the backend's own stop tokens.
    pub stop_tokens: BTreeSet<TokenId>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            mode: SamplingMode::Temperature,
            temperature: 1.0,
            top_k: None,
            top_p: None,
            max_new_tokens: 512,
            stop_tokens: BTreeSet::new(),
            seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn greedy(max_new_tokens: usize) -> Self {
        Self {
            mode: SamplingMode::Greedy,
            max_new_tokens,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_new_tokens == 0 {
            return Err(Error::Config("max_new_tokens must be at least 1".into()));
        }
        if self.mode == SamplingMode::Greedy {
            return Ok(());
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if self.top_k == Some(0) {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        if let Some(p) = self.top_p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("top_p must lie in (0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in logits.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Draw one token.
///
/// Temperature mode scales by `1/temperature`, keeps the `top_k` highest
/// scores, applies softmax, keeps the smallest descending-probability prefix
/// whose mass reaches `top_p`, renormalizes and inverts one uniform draw over
/// the surviving tokens in ascending id order. Ties in either ranking go to
/// the lower id.
pub fn sample(logits: &[f64], cfg: &SamplingConfig, rng: &mut impl RngCore) -> Result<TokenId> {
    if logits.is_empty() {
        return Err(Error::Sampling("empty logits".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::Sampling("non-finite logits".into()));
    }
    cfg.validate()?;
    if cfg.mode == SamplingMode::Greedy {
        return Ok(argmax(logits).expect("non-empty") as TokenId);
    }

    let scaled: Vec<f64> = logits.iter().map(|l| l / cfg.temperature).collect();
    let by_score = |a: &usize, b: &usize| scaled[*b].total_cmp(&scaled[*a]).then(a.cmp(b));

    let mut kept: Vec<usize> = (0..scaled.len()).collect();
    if let Some(k) = cfg.top_k {
        if k < kept.len() {
            kept.sort_by(by_score);
            kept.truncate(k);
        }
    }

    let max = kept.iter().map(|&i| scaled[i]).fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<(usize, f64)> = kept.iter().map(|&i| (i, (scaled[i] - max).exp())).collect();
    let total: f64 = probs.iter().map(|(_, w)| w).sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Sampling("no probability mass left after truncation".into()));
    }
    for (_, w) in probs.iter_mut() {
        *w /= total;
    }

    if let Some(top_p) = cfg.top_p {
        probs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut mass = 0.0;
        let mut cut = probs.len();
        for (n, (_, w)) in probs.iter().enumerate() {
            mass += w;
            if mass >= top_p {
                cut = n + 1;
                break;
            }
        }
        probs.truncate(cut);
    }

    probs.sort_by_key(|(i, _)| *i);
    let mass: f64 = probs.iter().map(|(_, w)| w).sum();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Sampling("no probability mass left after truncation".into()));
    }
    let target = unit_f64(rng) * mass;
    let mut acc = 0.0;
    for &(i, w) in &probs {
        acc += w;
        if target < acc {
            return Ok(i as TokenId);
        }
    }
    Ok(probs.last().expect("at least one token kept").0 as TokenId)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn temp(t: f64) -> SamplingConfig {
        SamplingConfig {
            temperature: t,
            ..SamplingConfig::default()
        }
    }

    #[test]
    fn greedy_argmax_lowest_index() {
        let mut rng = stream_rng(0, 0);
        let cfg = SamplingConfig::greedy(1);
        assert_eq!(sample(&[1.0, 3.0, 2.0], &cfg, &mut rng).unwrap(), 1);
        assert_eq!(sample(&[5.0, 1.0, 5.0], &cfg, &mut rng).unwrap(), 0);
    }

    #[test]
    fn top_k_one_is_greedy() {
        let mut rng = stream_rng(3, 0);
        let logits = [0.3, 2.0, 2.0, -1.0, 1.9];
        for t in [0.1, 1.0, 10.0, 1000.0] {
            let cfg = SamplingConfig {
                top_k: Some(1),
                ..temp(t)
            };
            for _ in 0..50 {
                assert_eq!(sample(&logits, &cfg, &mut rng).unwrap(), 1);
            }
        }
    }

    #[test]
    fn fair_coin_monte_carlo() {
        let mut rng = stream_rng(2024, 0);
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| sample(&[0.0, 0.0], &temp(1.0), &mut rng).unwrap() == 1)
            .count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.01, "frequency {freq}");
    }

    #[test]
    fn matches_softmax_frequencies() {
        // p ∝ exp(l/2) for l = (0, ln 4, ln 16) → (1, 2, 4)/7
        let logits = [0.0, 4f64.ln(), 16f64.ln()];
        let mut rng = stream_rng(11, 0);
        let n = 200_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[sample(&logits, &temp(2.0), &mut rng).unwrap() as usize] += 1;
        }
        for (c, want) in counts.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((*c as f64 / n as f64 - want).abs() < 0.005, "{counts:?}");
        }
    }

    #[test]
    fn nucleus_keeps_smallest_covering_prefix() {
        // probs ≈ (0.643, 0.236, 0.087, 0.032): top_p 0.8 keeps ids 0 and 1.
        let logits = [3.0, 2.0, 1.0, 0.0];
        let cfg = SamplingConfig {
            top_p: Some(0.8),
            ..temp(1.0)
        };
        let mut rng = stream_rng(5, 0);
        let mut seen = [false; 4];
        for _ in 0..2000 {
            seen[sample(&logits, &cfg, &mut rng).unwrap() as usize] = true;
        }
        assert_eq!(seen, [true, true, false, false]);
    }

    #[test]
    fn top_k_then_top_p() {
        let logits = [3.0, 2.9, 2.8, -5.0];
        let cfg = SamplingConfig {
            top_k: Some(2),
            top_p: Some(1.0),
            ..temp(1.0)
        };
        let mut rng = stream_rng(9, 0);
        for _ in 0..1000 {
            assert!(sample(&logits, &cfg, &mut rng).unwrap() < 2);
        }
    }

    #[test]
    fn config_errors() {
        let mut rng = stream_rng(0, 0);
        for cfg in [
            temp(0.0),
            SamplingConfig {
                top_k: Some(0),
                ..temp(1.0)
            },
            SamplingConfig {
                top_p: Some(0.0),
                ..temp(1.0)
            },
            SamplingConfig {
                top_p: Some(1.5),
                ..temp(1.0)
            },
            SamplingConfig {
                max_new_tokens: 0,
                ..temp(1.0)
            },
        ] {
            assert!(matches!(sample(&[0.0, 1.0], &cfg, &mut rng), Err(Error::Config(_))));
        }
        assert!(matches!(sample(&[], &temp(1.0), &mut rng), Err(Error::Sampling(_))));
        assert!(matches!(
            sample(&[f64::NEG_INFINITY, f64::NEG_INFINITY], &temp(1.0), &mut rng),
            Err(Error::Sampling(_))
        ));
    }
}
