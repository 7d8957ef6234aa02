//! Evaluation metrics with LIKE as the positive class.

use indexmap::IndexMap;

use crate::data::{Preference, Strategy};
use crate::tsv::fmt_opt;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Tallies predictions against ground truth over the same id set.
pub fn confusion(
    predictions: &IndexMap<String, Preference>,
    truth: &IndexMap<String, Preference>,
) -> Result<ConfusionCounts> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "confusion: {} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (id, &t) in truth {
        let p = *predictions
            .get(id)
            .ok_or_else(|| Error::UnknownSong(id.clone()))?;
        match (p, t) {
            (Preference::Like, Preference::Like) => c.tp += 1,
            (Preference::Like, Preference::Dislike) => c.fp += 1,
            (Preference::Dislike, Preference::Dislike) => c.tn += 1,
            (Preference::Dislike, Preference::Like) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Confusion-derived rates; `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasicMetrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn basic_metrics(c: &ConfusionCounts) -> Result<BasicMetrics> {
    if c.total() == 0 {
        return Err(Error::InvalidInput(
            "metrics need a non-empty test set".into(),
        ));
    }
    Ok(BasicMetrics {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        fpr: ratio(c.fp, c.fp + c.tn),
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. `None` unless both classes are present.
pub fn auroc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(
        scores.len(),
        positive.len(),
        "auroc: scores and labels differ in length"
    );
    let pos: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| p)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(positive)
        .filter(|(_, &p)| !p)
        .map(|(s, _)| *s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Accuracy,
    Precision,
    Recall,
    Auroc,
    Fpr,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Recall,
        Metric::Auroc,
        Metric::Fpr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Auroc => "auroc",
            Metric::Fpr => "fpr",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Whether larger values are better.
    pub fn higher_is_better(self) -> bool {
        self != Metric::Fpr
    }
}

/// The five metrics for one (user, strategy) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub user_id: String,
    pub strategy: Strategy,
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub auroc: Option<f64>,
    pub fpr: Option<f64>,
}

impl MetricReport {
    pub fn evaluate(
        user_id: &str,
        strategy: Strategy,
        probabilities: &IndexMap<String, f64>,
        predictions: &IndexMap<String, Preference>,
        truth: &IndexMap<String, Preference>,
    ) -> Result<Self> {
        let basic = basic_metrics(&confusion(predictions, truth)?)?;
        let mut scores = Vec::with_capacity(truth.len());
        let mut positive = Vec::with_capacity(truth.len());
        for (id, t) in truth {
            scores.push(
                *probabilities
                    .get(id)
                    .ok_or_else(|| Error::UnknownSong(id.clone()))?,
            );
            positive.push(t.is_like());
        }
        Ok(Self {
            user_id: user_id.to_owned(),
            strategy,
            accuracy: basic.accuracy,
            precision: basic.precision,
            recall: basic.recall,
            auroc: auroc(&scores, &positive),
            fpr: basic.fpr,
        })
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Accuracy => Some(self.accuracy),
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::Auroc => self.auroc,
            Metric::Fpr => self.fpr,
        }
    }

    pub const TSV_HEADER: &'static str =
        "user_id\tstrategy\taccuracy\tprecision\trecall\tauroc\tfpr";

    /// One TSV row; absent values are empty fields.
    pub fn tsv_row(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.user_id,
            self.strategy,
            fmt_opt(Some(self.accuracy)),
            fmt_opt(self.precision),
            fmt_opt(self.recall),
            fmt_opt(self.auroc),
            fmt_opt(self.fpr)
        )
    }

    pub fn parse_tsv_row(cells: &[String]) -> std::result::Result<Self, String> {
        if cells.len() != 7 {
            return Err(format!("expected 7 columns, found {}", cells.len()));
        }
        let opt = |i: usize| crate::tsv::parse_opt(&cells[i]);
        Ok(Self {
            user_id: cells[0].clone(),
            strategy: cells[1].parse().map_err(|e: Error| e.to_string())?,
            accuracy: opt(2)?.ok_or("accuracy may not be empty")?,
            precision: opt(3)?,
            recall: opt(4)?,
            auroc: opt(5)?,
            fpr: opt(6)?,
        })
    }
}
