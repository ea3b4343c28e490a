use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Domains of the reference dataset, in report column order.
pub const CANONICAL_DOMAINS: [&str; 5] = ["Technology", "Daily Life", "Career planning", "Healthy care", "Diet"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainScore {
    pub domain: String,
    pub correct: usize,
    pub total: usize,
    /// Percent.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Canonical domains first in their fixed order, then any others by name.
    pub per_domain: Vec<DomainScore>,
    /// `Σ accuracy_d · n_d / Σ n_d`, percent.
    pub weighted_total: f64,
    /// Responses with no extractable letter. Counted as incorrect.
    pub unparsed: usize,
    /// Items whose generation failed. Counted as incorrect.
    pub failed: usize,
}

/// Count-weighted mean of per-domain accuracies. `None` when all counts are zero.
pub fn weighted_accuracy(rows: impl IntoIterator<Item = (f64, usize)>) -> Option<f64> {
    let (num, den) = rows
        .into_iter()
        .fold((0.0, 0usize), |(num, den), (acc, n)| (num + acc * n as f64, den + n));
    (den > 0).then(|| num / den as f64)
}

fn domain_rank(domain: &str) -> (usize, String) {
    let canonical = CANONICAL_DOMAINS
        .iter()
        .position(|d| d.eq_ignore_ascii_case(domain))
        .unwrap_or(CANONICAL_DOMAINS.len());
    (canonical, domain.to_string())
}

impl AccuracyReport {
    /// Tally `(domain, correct)` outcomes.
    pub fn tally<'a>(outcomes: impl IntoIterator<Item = (&'a str, bool)>, unparsed: usize, failed: usize) -> Self {
        let mut counts: BTreeMap<(usize, String), (usize, usize)> = BTreeMap::new();
        for (domain, correct) in outcomes {
            let entry = counts.entry(domain_rank(domain)).or_default();
            entry.0 += usize::from(correct);
            entry.1 += 1;
        }
        let per_domain: Vec<DomainScore> = counts
            .into_iter()
            .map(|((_, domain), (correct, total))| DomainScore {
                domain,
                correct,
                total,
                accuracy: 100.0 * correct as f64 / total as f64,
            })
            .collect();
        let weighted_total = weighted_accuracy(per_domain.iter().map(|d| (d.accuracy, d.total))).unwrap_or(0.0);
        Self {
            per_domain,
            weighted_total,
            unparsed,
            failed,
        }
    }

    pub fn domain(&self, name: &str) -> Option<&DomainScore> {
        self.per_domain.iter().find(|d| d.domain == name)
    }

    pub fn total(&self) -> usize {
        self.per_domain.iter().map(|d| d.total).sum()
    }

    pub fn correct(&self) -> usize {
        self.per_domain.iter().map(|d| d.correct).sum()
    }

    /// Markdown table: one accuracy column per domain plus the weighted total.
    pub fn render_table(&self, label: &str) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.per_domain.iter().map(|d| d.domain.as_str()).collect();
        let _ = writeln!(out, "| Model | {} | Total |", header.join(" | "));
        let _ = writeln!(out, "|---|{}---|", "---|".repeat(header.len()));
        let cells: Vec<String> = self.per_domain.iter().map(|d| format!("{:.1}", d.accuracy)).collect();
        let _ = writeln!(out, "| {label} | {} | {:.1} |", cells.join(" | "), self.weighted_total);
        let counts: Vec<String> = self.per_domain.iter().map(|d| d.total.to_string()).collect();
        let _ = writeln!(out, "| #samples | {} | {} |", counts.join(" | "), self.total());
        let _ = writeln!(out);
        let _ = writeln!(out, "unparsed responses: {}", self.unparsed);
        let _ = writeln!(out, "failed items: {}", self.failed);
        out
    }
}
