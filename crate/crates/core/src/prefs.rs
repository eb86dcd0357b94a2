//! Pairwise preference win rates with Wilson score intervals.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrefError {
    #[error("no decisive comparisons (all ties)")]
    NoDecisive,
    #[error("wilson interval needs 0 ≤ wins ≤ n and n ≥ 1, got wins = {wins}, n = {n}")]
    BadCounts { wins: u64, n: u64 },
    #[error("confidence must lie in (0, 1), got {0}")]
    BadConfidence(f64),
    #[error("unknown verdict {0:?}, expected candidate, baseline or tie")]
    BadVerdict(String),
    #[error("records: {0}")]
    Records(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Candidate,
    Baseline,
    Tie,
}

impl FromStr for Verdict {
    type Err = PrefError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "candidate" => Ok(Verdict::Candidate),
            "baseline" => Ok(Verdict::Baseline),
            "tie" => Ok(Verdict::Tie),
            _ => Err(PrefError::BadVerdict(s.to_string())),
        }
    }
}

/// One human judgment: which of two reconstructions is closer to the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub item_id: String,
    pub candidate: String,
    pub baseline: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
}

impl Tally {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a PreferenceRecord>) -> Self {
        let mut t = Tally::default();
        for r in records {
            match r.verdict {
                Verdict::Candidate => t.wins += 1,
                Verdict::Baseline => t.losses += 1,
                Verdict::Tie => t.ties += 1,
            }
        }
        t
    }

    pub fn decisive(&self) -> u64 {
        self.wins + self.losses
    }
}

/// Win rate among decisive comparisons; ties are ignored.
/// Returns `(wins, decisive n, rate)`.
pub fn win_rate<'a>(records: impl IntoIterator<Item = &'a PreferenceRecord>) -> Result<(u64, u64, f64), PrefError> {
    let t = Tally::of(records);
    let n = t.decisive();
    if n == 0 {
        return Err(PrefError::NoDecisive);
    }
    Ok((t.wins, n, t.wins as f64 / n as f64))
}

/// Two-sided standard normal quantile for a confidence level.
pub fn z_for_confidence(confidence: f64) -> Result<f64, PrefError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(PrefError::BadConfidence(confidence));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Wilson score interval for `wins` successes out of `n` trials.
pub fn wilson_interval(wins: u64, n: u64, confidence: f64) -> Result<(f64, f64), PrefError> {
    if n == 0 || wins > n {
        return Err(PrefError::BadCounts { wins, n });
    }
    let z = z_for_confidence(confidence)?;
    let nf = n as f64;
    let p = wins as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let (mut low, mut high) = (center - half, center + half);
    // Exact bounds at the edges, otherwise rounding can leave 1e-17 residue.
    if wins == 0 {
        low = 0.0;
    }
    if wins == n {
        high = 1.0;
    }
    Ok((low.clamp(0.0, p), high.clamp(p, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinRateReport {
    pub candidate: String,
    pub baseline: String,
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// One report per (candidate, baseline) pair, ordered by candidate then
/// baseline name.
pub fn win_rate_reports(records: &[PreferenceRecord], confidence: f64) -> Result<Vec<WinRateReport>, PrefError> {
    let mut groups: BTreeMap<(&str, &str), Vec<&PreferenceRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.candidate.as_str(), r.baseline.as_str())).or_default().push(r);
    }
    if groups.is_empty() {
        return Err(PrefError::NoDecisive);
    }
    groups
        .into_iter()
        .map(|((candidate, baseline), recs)| {
            let t = Tally::of(recs.iter().copied());
            let (wins, n, rate) = win_rate(recs.iter().copied())?;
            let (ci_low, ci_high) = wilson_interval(wins, n, confidence)?;
            Ok(WinRateReport {
                candidate: candidate.to_string(),
                baseline: baseline.to_string(),
                wins: t.wins,
                losses: t.losses,
                ties: t.ties,
                win_rate: rate,
                ci_low,
                ci_high,
            })
        })
        .collect()
}

/// Rounds a fraction to a percentage with one decimal, halves rounding up.
pub fn percent_1dp(fraction: f64) -> f64 {
    // The tiny offset keeps values like 0.8215 (stored as 0.82149999...)
    // rounding up as printed.
    ((fraction * 1000.0) + 0.5 + 1e-9).floor() / 10.0
}

/// Parses `item_id,candidate,baseline,verdict` CSV text (header required).
pub fn parse_records_csv(text: &str) -> Result<Vec<PreferenceRecord>, PrefError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| PrefError::Records("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["item_id", "candidate", "baseline", "verdict"] {
        return Err(PrefError::Records(format!("unexpected header {header:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(PrefError::Records(format!("line {}: expected 4 fields", i + 2)));
            }
            Ok(PreferenceRecord {
                item_id: f[0].to_string(),
                candidate: f[1].to_string(),
                baseline: f[2].to_string(),
                verdict: f[3].parse()?,
            })
        })
        .collect()
}

pub fn parse_records_json(text: &str) -> Result<Vec<PreferenceRecord>, PrefError> {
    serde_json::from_str(text).map_err(|e| PrefError::Records(e.to_string()))
}
