//! Remote-detection threshold sweep on development passages.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::TokenSentence;
use crate::eval::{score_aligned, EvalError};
use crate::graph::Passage;
use crate::lexicon::LexiconSet;
use crate::parser::{parse_batch, DecoderConfig, ParseError};
use crate::tagger::Tagger;

#[derive(Debug, Error)]
pub enum TuneError {
    #[error("passage {id}: {source}")]
    Parse {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `0.05, 0.10, ..., 0.95`.
pub fn thresholds() -> Vec<f64> {
    (1..=19).map(|k| k as f64 / 20.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub remote_f1: f64,
    pub avg_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub best: f64,
}

impl Sweep {
    pub fn to_text(&self) -> String {
        let mut s = format!("{:>9} {:>9} {:>9}\n", "threshold", "remote_f1", "avg_f1");
        for r in &self.rows {
            let _ = writeln!(s, "{:>9.2} {:>9.4} {:>9.4}", r.threshold, r.remote_f1, r.avg_f1);
        }
        let _ = writeln!(s, "selected threshold {:.2}", self.best);
        s
    }
}

/// Parses `gold` at every threshold and keeps the one with the best average
/// labeled F1; ties go to the smaller threshold.
pub fn tune_threshold(
    gold: &[Passage],
    tagger: &dyn Tagger,
    lexicons: &LexiconSet,
    base: &DecoderConfig,
) -> Result<Sweep, TuneError> {
    let inputs: Vec<TokenSentence> = gold
        .iter()
        .map(|p| TokenSentence {
            id: p.passage_id.clone(),
            tokens: p.tokens.clone(),
        })
        .collect();
    let mut rows = Vec::new();
    for threshold in thresholds() {
        let cfg = DecoderConfig {
            remote_threshold: threshold,
            ..base.clone()
        };
        let mut pred = Vec::with_capacity(gold.len());
        for (result, input) in parse_batch(&inputs, tagger, lexicons, &cfg).into_iter().zip(&inputs) {
            let (p, _) = result.map_err(|source| TuneError::Parse {
                id: input.id.clone(),
                source,
            })?;
            pred.push(p);
        }
        let report = score_aligned(&pred, gold)?;
        rows.push(SweepRow {
            threshold,
            remote_f1: report.overall.labeled.remote.f1(),
            avg_f1: report.overall.labeled.avg.f1(),
        });
    }
    let mut best = rows[0];
    for r in &rows[1..] {
        if r.avg_f1 > best.avg_f1 {
            best = *r;
        }
    }
    Ok(Sweep {
        rows,
        best: best.threshold,
    })
}
