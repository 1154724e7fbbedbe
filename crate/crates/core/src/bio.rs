//! BIO encoding of a node's children and decoding of label or probability
//! sequences back into child spans.
//!
//! Remote children share the same label sequence through `B-REM-X`/`I-REM-X`
//! labels, so one softmax per token covers both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{Category, GraphError, NodeId, Passage};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BioError {
    #[error("invalid BIO label '{0}'")]
    InvalidLabel(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("children of {node} are not BIO-representable: {reason}")]
    NotRepresentable { node: NodeId, reason: String },
    #[error("malformed tag distribution: {0}")]
    MalformedDistribution(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioLabel {
    O,
    Begin(Category),
    Inside(Category),
    RemoteBegin(Category),
    RemoteInside(Category),
}

impl BioLabel {
    pub const COUNT: usize = 1 + 4 * Category::COUNT;
    /// Labels `0..PRIMARY_END` are `O` and the primary B/I labels.
    pub const PRIMARY_END: usize = 1 + 2 * Category::COUNT;

    pub fn index(self) -> usize {
        const N: usize = Category::COUNT;
        match self {
            BioLabel::O => 0,
            BioLabel::Begin(c) => 1 + c.index(),
            BioLabel::Inside(c) => 1 + N + c.index(),
            BioLabel::RemoteBegin(c) => 1 + 2 * N + c.index(),
            BioLabel::RemoteInside(c) => 1 + 3 * N + c.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<BioLabel> {
        const N: usize = Category::COUNT;
        if index == 0 {
            return Some(BioLabel::O);
        }
        let cat = Category::from_index((index - 1) % N)?;
        Some(match (index - 1) / N {
            0 => BioLabel::Begin(cat),
            1 => BioLabel::Inside(cat),
            2 => BioLabel::RemoteBegin(cat),
            3 => BioLabel::RemoteInside(cat),
            _ => return None,
        })
    }

    pub fn all() -> impl Iterator<Item = BioLabel> {
        (0..Self::COUNT).map(|i| BioLabel::from_index(i).unwrap())
    }

    pub fn begin(category: Category, remote: bool) -> Self {
        if remote {
            BioLabel::RemoteBegin(category)
        } else {
            BioLabel::Begin(category)
        }
    }

    pub fn inside(category: Category, remote: bool) -> Self {
        if remote {
            BioLabel::RemoteInside(category)
        } else {
            BioLabel::Inside(category)
        }
    }

    pub fn category(self) -> Option<Category> {
        match self {
            BioLabel::O => None,
            BioLabel::Begin(c) | BioLabel::Inside(c) | BioLabel::RemoteBegin(c) | BioLabel::RemoteInside(c) => {
                Some(c)
            }
        }
    }

    pub fn is_remote(self) -> bool {
        matches!(self, BioLabel::RemoteBegin(_) | BioLabel::RemoteInside(_))
    }
}

impl fmt::Display for BioLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioLabel::O => f.write_str("O"),
            BioLabel::Begin(c) => write!(f, "B-{c}"),
            BioLabel::Inside(c) => write!(f, "I-{c}"),
            BioLabel::RemoteBegin(c) => write!(f, "B-REM-{c}"),
            BioLabel::RemoteInside(c) => write!(f, "I-REM-{c}"),
        }
    }
}

impl FromStr for BioLabel {
    type Err = BioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || BioError::InvalidLabel(s.to_owned());
        if s == "O" {
            return Ok(BioLabel::O);
        }
        let (prefix, rest) = s.split_once('-').ok_or_else(invalid)?;
        let (remote, cat) = match rest.strip_prefix("REM-") {
            Some(cat) => (true, cat),
            None => (false, rest),
        };
        let cat: Category = cat.parse().map_err(|_| invalid())?;
        match prefix {
            "B" => Ok(BioLabel::begin(cat, remote)),
            "I" => Ok(BioLabel::inside(cat, remote)),
            _ => Err(invalid()),
        }
    }
}

impl Serialize for BioLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A decoded child: tokens `start..end` attached with `category`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChildSpan {
    pub start: usize,
    pub end: usize,
    pub category: Category,
    pub remote: bool,
}

impl ChildSpan {
    pub fn new(start: usize, end: usize, category: Category) -> Self {
        ChildSpan {
            start,
            end,
            category,
            remote: false,
        }
    }

    pub fn remote(start: usize, end: usize, category: Category) -> Self {
        ChildSpan {
            start,
            end,
            category,
            remote: true,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.start <= pos && pos < self.end
    }
}

impl fmt::Display for ChildSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rem = if self.remote { "REM-" } else { "" };
        write!(f, "{rem}{}({},{})", self.category, self.start, self.end)
    }
}

/// Per-token distributions for the children labels and the auxiliary task.
#[derive(Clone, Debug, PartialEq)]
pub struct TagDistribution {
    /// `len x BioLabel::COUNT`.
    pub bio: Vec<Vec<f64>>,
    /// `len x aux vocabulary size`.
    pub aux: Vec<Vec<f64>>,
}

impl TagDistribution {
    pub const TOLERANCE: f64 = 1e-6;

    pub fn len(&self) -> usize {
        self.bio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bio.is_empty()
    }

    /// One-hot rows for `labels`; the auxiliary head is a single certain `O`.
    pub fn one_hot(labels: &[BioLabel]) -> Self {
        let bio = labels
            .iter()
            .map(|l| {
                let mut row = vec![0.0; BioLabel::COUNT];
                row[l.index()] = 1.0;
                row
            })
            .collect();
        TagDistribution {
            bio,
            aux: vec![vec![1.0]; labels.len()],
        }
    }

    pub fn check(&self) -> Result<(), BioError> {
        if self.aux.len() != self.bio.len() {
            return Err(BioError::MalformedDistribution(format!(
                "{} BIO rows but {} auxiliary rows",
                self.bio.len(),
                self.aux.len()
            )));
        }
        for (name, rows, width) in [("bio", &self.bio, Some(BioLabel::COUNT)), ("aux", &self.aux, None)] {
            for (i, row) in rows.iter().enumerate() {
                if let Some(w) = width {
                    if row.len() != w {
                        return Err(BioError::MalformedDistribution(format!(
                            "{name} row {i} has width {}, expected {w}",
                            row.len()
                        )));
                    }
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(BioError::MalformedDistribution(format!(
                        "{name} row {i} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > Self::TOLERANCE {
                    return Err(BioError::MalformedDistribution(format!(
                        "{name} row {i} sums to {sum}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Highest probability of any S or P label at `pos`, with the winning category.
    pub fn scene_relation_score(&self, pos: usize) -> (f64, Category) {
        let row = &self.bio[pos];
        let p = row[BioLabel::Begin(Category::P).index()].max(row[BioLabel::Inside(Category::P).index()]);
        let s = row[BioLabel::Begin(Category::S).index()].max(row[BioLabel::Inside(Category::S).index()]);
        if s > p {
            (s, Category::S)
        } else {
            (p, Category::P)
        }
    }
}

/// BIO labels for the children of `node` over the whole sentence.
///
/// Fails with [`BioError::NotRepresentable`] when a child's yield is
/// discontiguous, empty, or overlaps another child.
pub fn encode(passage: &Passage, node: NodeId) -> Result<Vec<BioLabel>, BioError> {
    let index = passage.index()?;
    if index.node(node)?.is_terminal() {
        return Err(BioError::NotRepresentable {
            node,
            reason: "terminal nodes have no children".to_owned(),
        });
    }
    let not_representable = |reason: String| BioError::NotRepresentable { node, reason };

    let mut labels = vec![BioLabel::O; passage.len()];
    let mut expected = Vec::new();
    let children = index.primary_children(node)?;
    let remotes = index.remote_children(node);
    for edge in children.iter().chain(remotes.iter()) {
        let yld = index.primary_yield(edge.child)?;
        let (Some(&first), Some(&last)) = (yld.first(), yld.last()) else {
            return Err(not_representable(format!("child {} has an empty yield", edge.child)));
        };
        if last - first + 1 != yld.len() {
            return Err(not_representable(format!("child {} has a discontiguous yield", edge.child)));
        }
        for pos in first..=last {
            if labels[pos] != BioLabel::O {
                return Err(not_representable(format!(
                    "child {} overlaps another child at token {pos}",
                    edge.child
                )));
            }
            labels[pos] = if pos == first {
                BioLabel::begin(edge.category, edge.remote)
            } else {
                BioLabel::inside(edge.category, edge.remote)
            };
        }
        expected.push(ChildSpan {
            start: first,
            end: last + 1,
            category: edge.category,
            remote: edge.remote,
        });
    }

    expected.sort();
    let mut decoded = decode_labels(&labels);
    decoded.sort();
    if decoded != expected {
        return Err(not_representable("labels do not decode to the children".to_owned()));
    }
    Ok(labels)
}

/// Spans from a label sequence. Total: malformed sequences are repaired.
///
/// `I-X` without an open `X` span opens one; a label of another category
/// (or remote flag) closes the open span; `O` closes it.
pub fn decode_labels(labels: &[BioLabel]) -> Vec<ChildSpan> {
    let mut spans = Vec::new();
    let mut open: Option<ChildSpan> = None;
    for (pos, label) in labels.iter().enumerate() {
        let Some(category) = label.category() else {
            spans.extend(open.take());
            continue;
        };
        let remote = label.is_remote();
        let continues = matches!(label, BioLabel::Inside(_) | BioLabel::RemoteInside(_))
            && open.is_some_and(|s| s.category == category && s.remote == remote);
        if continues {
            if let Some(span) = open.as_mut() {
                span.end = pos + 1;
            }
        } else {
            spans.extend(open.take());
            open = Some(ChildSpan {
                start: pos,
                end: pos + 1,
                category,
                remote,
            });
        }
    }
    spans.extend(open);
    spans
}

fn argmax(values: &[f64]) -> (usize, f64) {
    values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
}

/// Primary and remote spans from a distribution.
///
/// Primary labels come from the per-token argmax over `O` and the primary
/// labels. A token receives its best remote label only when that label's
/// probability is strictly greater than `remote_threshold`.
pub fn decode_probs(
    dist: &TagDistribution,
    remote_threshold: f64,
) -> Result<(Vec<ChildSpan>, Vec<ChildSpan>), BioError> {
    dist.check()?;
    if !(0.0..=1.0).contains(&remote_threshold) {
        return Err(BioError::MalformedDistribution(format!(
            "remote threshold {remote_threshold} outside [0, 1]"
        )));
    }
    let primary: Vec<BioLabel> = dist
        .bio
        .iter()
        .map(|row| BioLabel::from_index(argmax(&row[..BioLabel::PRIMARY_END]).0).unwrap())
        .collect();
    let remote: Vec<BioLabel> = dist
        .bio
        .iter()
        .map(|row| {
            let (i, p) = argmax(&row[BioLabel::PRIMARY_END..]);
            if p > remote_threshold {
                BioLabel::from_index(BioLabel::PRIMARY_END + i).unwrap()
            } else {
                BioLabel::O
            }
        })
        .collect();
    Ok((decode_labels(&primary), decode_labels(&remote)))
}
