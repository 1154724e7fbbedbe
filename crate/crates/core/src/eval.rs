//! Edge-yield scoring of predicted passages against gold passages.
//!
//! Every edge is reduced to a signature (child's primary yield, category,
//! remote flag); precision and recall come from multiset intersections of
//! signatures. The `avg` cell pools primary and remote edges (micro-average).

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};
use std::hash::Hash;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Category, GraphError, Passage};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("passage {pred} and gold passage {gold} have different tokens")]
    TokenMismatch { pred: String, gold: String },
    #[error("{pred} predicted passages but {gold} gold passages")]
    LengthMismatch { pred: usize, gold: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeSignature {
    pub tokens: Vec<usize>,
    pub category: Category,
    pub remote: bool,
}

/// One signature per edge, sorted.
pub fn signatures(passage: &Passage) -> Result<Vec<EdgeSignature>, EvalError> {
    let index = passage.index()?;
    let mut out = Vec::with_capacity(passage.edges.len());
    for e in &passage.edges {
        out.push(EdgeSignature {
            tokens: index.primary_yield(e.child)?.into_iter().collect(),
            category: e.category,
            remote: e.remote,
        });
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.predicted)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.gold)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn add(&mut self, other: &Counts) {
        self.matched += other.matched;
        self.predicted += other.predicted;
        self.gold += other.gold;
    }
}

impl Serialize for Counts {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Counts", 6)?;
        st.serialize_field("matched", &self.matched)?;
        st.serialize_field("predicted", &self.predicted)?;
        st.serialize_field("gold", &self.gold)?;
        st.serialize_field("precision", &self.precision())?;
        st.serialize_field("recall", &self.recall())?;
        st.serialize_field("f1", &self.f1())?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Cells {
    pub avg: Counts,
    pub primary: Counts,
    pub remote: Counts,
}

impl Cells {
    fn add(&mut self, other: &Cells) {
        self.avg.add(&other.avg);
        self.primary.add(&other.primary);
        self.remote.add(&other.remote);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub labeled: Cells,
    pub unlabeled: Cells,
    /// Labeled counts per category, primary and remote edges together.
    pub per_category: BTreeMap<Category, Counts>,
}

impl Default for EvalReport {
    fn default() -> Self {
        EvalReport {
            sentences: 0,
            labeled: Cells::default(),
            unlabeled: Cells::default(),
            per_category: Category::ALL.iter().map(|&c| (c, Counts::default())).collect(),
        }
    }
}

fn multiset<K: Hash + Eq, I: IntoIterator<Item = K>>(items: I) -> HashMap<K, usize> {
    let mut m = HashMap::new();
    for k in items {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn count<K: Hash + Eq + Clone>(pred: &[K], gold: &[K]) -> Counts {
    let p = multiset(pred.iter().cloned());
    let g = multiset(gold.iter().cloned());
    let matched = p.iter().map(|(k, n)| (*n).min(g.get(k).copied().unwrap_or(0))).sum();
    Counts {
        matched,
        predicted: pred.len(),
        gold: gold.len(),
    }
}

fn cells<K: Hash + Eq + Clone>(pred: &[(K, bool)], gold: &[(K, bool)]) -> Cells {
    let part = |items: &[(K, bool)], remote: bool| -> Vec<(K, bool)> {
        items.iter().filter(|(_, r)| *r == remote).cloned().collect()
    };
    let primary = count(&part(pred, false), &part(gold, false));
    let remote = count(&part(pred, true), &part(gold, true));
    let mut avg = primary;
    avg.add(&remote);
    Cells { avg, primary, remote }
}

impl EvalReport {
    fn add(&mut self, other: &EvalReport) {
        self.sentences += other.sentences;
        self.labeled.add(&other.labeled);
        self.unlabeled.add(&other.unlabeled);
        for (c, counts) in &other.per_category {
            self.per_category.entry(*c).or_default().add(counts);
        }
    }

    /// Aligned text table: Labeled/Unlabeled x Avg/Prim/Rem, counts and per-category F1.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        type Measure = fn(&Counts) -> f64;
        let rows: [(&str, Measure); 3] = [
            ("Precision", Counts::precision),
            ("Recall", Counts::recall),
            ("F1", Counts::f1),
        ];
        let _ = writeln!(s, "sentences: {}", self.sentences);
        let _ = writeln!(s, "{:<10} {:^26} {:^26}", "", "Labeled", "Unlabeled");
        let _ = writeln!(s, "{:<10} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "", "Avg", "Prim", "Rem", "Avg", "Prim", "Rem");
        for (name, f) in rows {
            let l = &self.labeled;
            let u = &self.unlabeled;
            let _ = writeln!(
                s,
                "{:<10} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                name,
                f(&l.avg),
                f(&l.primary),
                f(&l.remote),
                f(&u.avg),
                f(&u.primary),
                f(&u.remote)
            );
        }
        let _ = writeln!(s, "counts (matched/predicted/gold):");
        for (mode, c) in [("labeled", &self.labeled), ("unlabeled", &self.unlabeled)] {
            for (cell, n) in [("avg", c.avg), ("prim", c.primary), ("rem", c.remote)] {
                let _ = writeln!(s, "  {mode:<9} {cell:<4} {}/{}/{}", n.matched, n.predicted, n.gold);
            }
        }
        let _ = writeln!(s, "per-category labeled F1:");
        for (c, n) in &self.per_category {
            let _ = writeln!(s, "  {:<2} {:>8.4}  {}/{}/{}", c.as_str(), n.f1(), n.matched, n.predicted, n.gold);
        }
        s
    }
}

/// Scores one predicted passage against its gold counterpart.
pub fn score(pred: &Passage, gold: &Passage) -> Result<EvalReport, EvalError> {
    let forms = |p: &Passage| p.tokens.iter().map(|t| t.form.clone()).collect::<Vec<_>>();
    if forms(pred) != forms(gold) {
        return Err(EvalError::TokenMismatch {
            pred: pred.passage_id.clone(),
            gold: gold.passage_id.clone(),
        });
    }
    let ps = signatures(pred)?;
    let gs = signatures(gold)?;
    let labeled = |v: &[EdgeSignature]| -> Vec<((Vec<usize>, Category), bool)> {
        v.iter().map(|s| ((s.tokens.clone(), s.category), s.remote)).collect()
    };
    let unlabeled = |v: &[EdgeSignature]| -> Vec<(Vec<usize>, bool)> { v.iter().map(|s| (s.tokens.clone(), s.remote)).collect() };
    let mut report = EvalReport {
        sentences: 1,
        labeled: cells(&labeled(&ps), &labeled(&gs)),
        unlabeled: cells(&unlabeled(&ps), &unlabeled(&gs)),
        ..EvalReport::default()
    };
    for c in Category::ALL {
        let only = |v: &[EdgeSignature]| -> Vec<EdgeSignature> { v.iter().filter(|s| s.category == c).cloned().collect() };
        report.per_category.insert(c, count(&only(&ps), &only(&gs)));
    }
    Ok(report)
}

/// A gold passage is mono-scene when it has at most one primary `H` edge.
pub fn is_mono_scene(gold: &Passage) -> bool {
    gold.edges.iter().filter(|e| !e.remote && e.category == Category::H).count() <= 1
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CorpusReport {
    pub overall: EvalReport,
    pub mono_scene: EvalReport,
    pub multi_scene: EvalReport,
}

impl CorpusReport {
    pub fn to_text(&self) -> String {
        let mut s = String::from("avg = micro-average over primary and remote edges\n\n");
        s.push_str(&self.overall.to_text());
        for (name, r) in [("mono-scene", &self.mono_scene), ("multi-scene", &self.multi_scene)] {
            let _ = writeln!(
                s,
                "{name}: sentences {} labeled avg F1 {:.4} unlabeled avg F1 {:.4}",
                r.sentences,
                r.labeled.avg.f1(),
                r.unlabeled.avg.f1()
            );
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Micro-averaged scores over `(pred, gold)` pairs, with mono-/multi-scene splits.
pub fn score_corpus(pairs: &[(Passage, Passage)]) -> Result<CorpusReport, EvalError> {
    let mut out = CorpusReport::default();
    for (pred, gold) in pairs {
        let r = score(pred, gold)?;
        out.overall.add(&r);
        if is_mono_scene(gold) {
            out.mono_scene.add(&r);
        } else {
            out.multi_scene.add(&r);
        }
    }
    Ok(out)
}

/// Scores position-aligned predicted and gold collections.
pub fn score_aligned(pred: &[Passage], gold: &[Passage]) -> Result<CorpusReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let pairs: Vec<(Passage, Passage)> = pred.iter().cloned().zip(gold.iter().cloned()).collect();
    score_corpus(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::NodeId;
    use Category::*;

    #[test]
    fn single_token_signature() {
        let s = signatures(&fixtures::single_token()).unwrap();
        assert_eq!(
            s,
            vec![EdgeSignature {
                tokens: vec![0],
                category: H,
                remote: false
            }]
        );
    }

    #[test]
    fn scene_fixture_signatures_by_hand() {
        let s = signatures(&fixtures::scenes_and_link()).unwrap();
        let sig = |t: &[usize], c, r| EdgeSignature {
            tokens: t.to_vec(),
            category: c,
            remote: r,
        };
        let mut expected = vec![
            sig(&[0, 1, 2], H, false),
            sig(&[3], L, false),
            sig(&[4, 5, 6], H, false),
            sig(&[0], A, false),
            sig(&[1], P, false),
            sig(&[2], A, false),
            sig(&[4], D, false),
            sig(&[5], P, false),
            sig(&[6], A, false),
            sig(&[0], A, true),
        ];
        expected.sort();
        assert_eq!(s, expected);
        assert_eq!(s.iter().filter(|x| x.remote).count(), 1);
    }

    #[test]
    fn identity_scores_one() {
        for p in fixtures::oracle_corpus(4, 10) {
            let r = score(&p, &p).unwrap();
            assert_eq!(r.labeled.avg.f1(), 1.0);
            assert_eq!(r.unlabeled.primary.f1(), 1.0);
            for (c, n) in &r.per_category {
                if n.gold > 0 {
                    assert_eq!(n.f1(), 1.0, "{c}");
                }
            }
        }
    }

    #[test]
    fn hand_counted_fixture() {
        // gold has 10 edges; the prediction drops the remote edge and relabels two primary ones
        let gold = fixtures::scenes_and_link();
        let mut pred = gold.clone();
        pred.edges.retain(|e| !e.remote);
        for e in pred.edges.iter_mut() {
            if e.child == NodeId(6) {
                e.category = S;
            }
            if e.child == NodeId(7) {
                e.category = E;
            }
        }
        let r = score(&pred, &gold).unwrap();
        assert_eq!(r.labeled.avg, Counts { matched: 7, predicted: 9, gold: 10 });
        assert_eq!(r.labeled.remote, Counts { matched: 0, predicted: 0, gold: 1 });
        assert_eq!(r.unlabeled.avg, Counts { matched: 9, predicted: 9, gold: 10 });
        assert_eq!(r.per_category[&P], Counts { matched: 1, predicted: 1, gold: 2 });
        let swapped = score(&gold, &pred).unwrap();
        assert_eq!(swapped.labeled.avg.precision(), r.labeled.avg.recall());
    }

    #[test]
    fn counts_arithmetic() {
        let c = Counts {
            matched: 4,
            predicted: 5,
            gold: 6,
        };
        assert!((c.precision() - 0.8).abs() < 1e-12);
        assert!((c.recall() - 4.0 / 6.0).abs() < 1e-12);
        assert!((c.f1() - 8.0 / 11.0).abs() < 1e-12);
        assert_eq!(Counts::default().f1(), 0.0);
    }

    #[test]
    fn mono_and_multi_split() {
        let multi = fixtures::scenes_and_link();
        let mono = fixtures::single_token();
        assert!(!is_mono_scene(&multi));
        assert!(is_mono_scene(&mono));
        let r = score_corpus(&[(multi.clone(), multi), (mono.clone(), mono)]).unwrap();
        assert_eq!((r.mono_scene.sentences, r.multi_scene.sentences, r.overall.sentences), (1, 1, 2));
    }

    #[test]
    fn token_and_length_mismatch() {
        let a = fixtures::single_token();
        let b = fixtures::scenes_and_link();
        assert!(matches!(score(&a, &b), Err(EvalError::TokenMismatch { .. })));
        assert!(matches!(score_aligned(&[a], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn no_match_scores_zero() {
        let gold = fixtures::scenes_and_link();
        let mut pred = gold.clone();
        pred.edges.iter_mut().for_each(|e| e.category = G);
        let r = score(&pred, &gold).unwrap();
        assert_eq!(r.labeled.avg.matched, 0);
        assert_eq!(r.labeled.avg.f1(), 0.0);
        assert_eq!(r.unlabeled.avg.f1(), 1.0);
    }

    #[test]
    fn text_report_layout() {
        let p = fixtures::scenes_and_link();
        let r = score_corpus(&[(p.clone(), p)]).unwrap();
        let text = r.to_text();
        assert!(text.contains("Labeled") && text.contains("Unlabeled"));
        assert!(text.contains("Avg") && text.contains("Prim") && text.contains("Rem"));
        for c in Category::ALL {
            assert!(text.lines().any(|l| l.trim_start().starts_with(&format!("{} ", c.as_str()))));
        }
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["overall"]["labeled"]["avg"]["f1"], 1.0);
        assert_eq!(json["overall"]["per_category"].as_object().unwrap().len(), 13);
    }
}
