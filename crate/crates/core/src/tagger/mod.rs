//! Sequence taggers that label the children of a focus node.

mod checkpoint;
mod gru;
mod params;
mod train;

use std::collections::HashMap;

use thiserror::Error;

use crate::bio::{self, BioError, BioLabel, TagDistribution};
use crate::corpus::{MaskSymbol, MaskedExample, AUX_NONE};
use crate::features::Featurizer;
use crate::graph::{GraphError, NodeId, Passage};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gru::{cross_entropy, GruTagger, ModelDims, Targets, PROB_CEIL, PROB_FLOOR};
pub use params::{ParamSet, Tensor};
pub use train::{train, token_accuracy, EpochRecord, SelectionMetric, TrainConfig, TrainingLog};

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite {0}")]
    NonFinite(String),
    #[error("example has no training targets")]
    MissingTargets,
    #[error("empty training corpus")]
    EmptyCorpus,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Bio(#[from] BioError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no gold passage '{0}'")]
    UnknownPassage(String),
    #[error("passage {passage}: no gold node over {start}..{end} with mask {symbol}")]
    NoGoldNode {
        passage: String,
        start: usize,
        end: usize,
        symbol: MaskSymbol,
    },
    #[error("malformed mask for passage {0}")]
    MalformedMask(String),
    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("checkpoint {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("evaluation during training failed: {0}")]
    Evaluation(String),
}

/// Anything that maps a masked sentence to per-token label distributions.
pub trait Tagger: Sync {
    fn predict(&self, example: &MaskedExample) -> Result<TagDistribution, TaggerError>;
}

/// One-hot distribution reproducing the gold labeling of `focus`'s children.
/// The auxiliary head is a single certain label per token.
pub fn oracle_predict(gold: &Passage, focus: NodeId) -> Result<TagDistribution, TaggerError> {
    let labels = bio::encode(gold, focus)?;
    Ok(TagDistribution::one_hot(&labels))
}

/// Replays gold passages: for each request it finds the gold node whose
/// yield and incoming arc match the mask and emits its one-hot labeling.
#[derive(Clone, Debug)]
pub struct OracleTagger {
    gold: HashMap<String, Passage>,
}

impl OracleTagger {
    pub fn new<'a, I: IntoIterator<Item = &'a Passage>>(gold: I) -> Self {
        OracleTagger {
            gold: gold.into_iter().map(|p| (p.passage_id.clone(), p.clone())).collect(),
        }
    }

    /// Gold node addressed by a mask; the shallowest one when several qualify.
    pub fn focus_node(&self, example: &MaskedExample) -> Result<NodeId, TaggerError> {
        let gold = self
            .gold
            .get(&example.passage_id)
            .ok_or_else(|| TaggerError::UnknownPassage(example.passage_id.clone()))?;
        let (start, end, symbol) = example
            .focus_span()
            .ok_or_else(|| TaggerError::MalformedMask(example.passage_id.clone()))?;
        let index = gold.index()?;
        for node in index.non_terminals()? {
            let arc = match index.primary_parent(node) {
                None => MaskSymbol::Root,
                Some(edge) => MaskSymbol::Arc(edge.category),
            };
            if arc != symbol {
                continue;
            }
            let yld = index.primary_yield(node)?;
            if yld.first() == Some(&start) && yld.last() == Some(&(end - 1)) && yld.len() == end - start {
                return Ok(node);
            }
        }
        Err(TaggerError::NoGoldNode {
            passage: example.passage_id.clone(),
            start,
            end,
            symbol,
        })
    }
}

impl Tagger for OracleTagger {
    fn predict(&self, example: &MaskedExample) -> Result<TagDistribution, TaggerError> {
        let node = self.focus_node(example)?;
        oracle_predict(&self.gold[&example.passage_id], node)
    }
}

/// A trained network together with the feature pipeline and label vocabularies it expects.
#[derive(Clone, Debug)]
pub struct TaggerModel {
    pub featurizer: Featurizer,
    pub network: GruTagger,
    pub aux_labels: Vec<String>,
    pub config: TrainConfig,
}

impl TaggerModel {
    /// Label indices for a training example; unseen auxiliary labels map to `O`.
    pub fn targets(&self, example: &MaskedExample) -> Result<Targets, TaggerError> {
        targets_for(example, &self.aux_labels)
    }
}

pub(crate) fn targets_for(example: &MaskedExample, aux_labels: &[String]) -> Result<Targets, TaggerError> {
    let bio = example.target_bio.as_ref().ok_or(TaggerError::MissingTargets)?;
    let none = aux_labels.iter().position(|l| l == AUX_NONE).unwrap_or(0);
    let aux = match &example.target_aux {
        Some(aux) => aux
            .iter()
            .map(|a| aux_labels.iter().position(|l| l == a).unwrap_or(none))
            .collect(),
        None => vec![none; example.len()],
    };
    if bio.len() != example.len() || aux.len() != example.len() {
        return Err(TaggerError::MissingTargets);
    }
    Ok(Targets {
        bio: bio.iter().map(|l| BioLabel::index(*l)).collect(),
        aux,
    })
}

impl Tagger for TaggerModel {
    fn predict(&self, example: &MaskedExample) -> Result<TagDistribution, TaggerError> {
        self.network.forward(&self.featurizer.featurize(example))
    }
}
