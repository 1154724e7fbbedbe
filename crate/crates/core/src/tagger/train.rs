//! Mini-batch training with Adam, global gradient clipping and
//! per-epoch model selection on development parses.

use std::fmt;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gru::{GruTagger, ModelDims, Targets};
use super::params::ParamSet;
use super::{targets_for, TaggerError, TaggerModel};
use crate::corpus::{MaskedExample, TokenSentence};
use crate::eval::score_corpus;
use crate::features::{aux_vocabulary, FeaturizedExample, Featurizer, WORD_DIM};
use crate::graph::Passage;
use crate::parser::{parse_batch, DecoderConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Best average labeled F1 of full parses of the development passages.
    DevAvgLabeledF1,
    /// Lowest mean training loss.
    TrainLoss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub hidden: usize,
    pub layers: usize,
    pub aux_weight: f64,
    pub selection: SelectionMetric,
    /// Worker threads for gradient and development-parse computation; 0 uses all cores.
    #[serde(skip)]
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            learning_rate: 1e-3,
            batch_size: 16,
            seed: 13,
            clip_norm: 5.0,
            hidden: 128,
            layers: 4,
            aux_weight: 1.0,
            selection: SelectionMetric::DevAvgLabeledF1,
            workers: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TaggerError> {
        let fail = |m: &str| Err(TaggerError::Config(m.to_owned()));
        if self.epochs == 0 {
            return fail("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1");
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            return fail("clip norm must be positive");
        }
        if self.hidden == 0 || self.layers == 0 {
            return fail("hidden width and layer count must be at least 1");
        }
        if !(self.aux_weight >= 0.0 && self.aux_weight.is_finite()) {
            return fail("auxiliary weight must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    pub selected_epoch: usize,
}

impl fmt::Display for TrainingLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.epochs {
            let dev = r.dev_f1.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
            writeln!(f, "epoch {} loss {:.6} dev_avg_labeled_f1 {}", r.epoch, r.loss, dev)?;
        }
        writeln!(f, "selected epoch {}", self.selected_epoch)
    }
}

struct Adam {
    m: ParamSet,
    v: ParamSet,
    step: i32,
    lr: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(params: &ParamSet, lr: f64) -> Self {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            step: 0,
            lr,
        }
    }

    fn update(&mut self, params: &mut ParamSet, grads: &ParamSet) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, g), m), v) in params
            .tensors
            .iter_mut()
            .zip(&grads.tensors)
            .zip(self.m.tensors.iter_mut())
            .zip(self.v.tensors.iter_mut())
        {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = Self::BETA1 * m.data[i] + (1.0 - Self::BETA1) * gi;
                v.data[i] = Self::BETA2 * v.data[i] + (1.0 - Self::BETA2) * gi * gi;
                let mh = m.data[i] / c1;
                let vh = v.data[i] / c2;
                p.data[i] -= self.lr * mh / (vh.sqrt() + Self::EPS);
            }
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, TaggerError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| TaggerError::Config(format!("thread pool: {e}")))
}

/// Sum of per-example gradients, accumulated in example order.
fn batch_gradients(
    network: &GruTagger,
    batch: &[(FeaturizedExample, Targets)],
    aux_weight: f64,
) -> Result<(f64, ParamSet), TaggerError> {
    let results: Vec<Result<(f64, ParamSet), TaggerError>> = batch
        .par_iter()
        .map(|(ex, t)| network.gradients(ex, t, aux_weight))
        .collect();
    let mut total = network.params.zeros_like();
    let mut loss = 0.0;
    for r in results {
        let (l, g) = r?;
        loss += l;
        total.add_assign(&g);
    }
    Ok((loss, total))
}

fn dev_score(model: &TaggerModel, dev: &[Passage], decoder: &DecoderConfig) -> Result<f64, TaggerError> {
    let inputs: Vec<TokenSentence> = dev
        .iter()
        .map(|p| TokenSentence {
            id: p.passage_id.clone(),
            tokens: p.tokens.clone(),
        })
        .collect();
    let mut pairs = Vec::with_capacity(dev.len());
    for (result, gold) in parse_batch(&inputs, model, &model.featurizer.lexicons, decoder).into_iter().zip(dev) {
        let (pred, _) = result.map_err(|e| TaggerError::Evaluation(e.to_string()))?;
        pairs.push((pred, gold.clone()));
    }
    let report = score_corpus(&pairs).map_err(|e| TaggerError::Evaluation(e.to_string()))?;
    Ok(report.overall.labeled.avg.f1())
}

/// Trains a tagger on `corpus` and returns the epoch selected by `config.selection`.
/// With an empty development set selection falls back to training loss.
pub fn train(
    corpus: &[MaskedExample],
    dev: &[Passage],
    featurizer: Featurizer,
    config: &TrainConfig,
    decoder: &DecoderConfig,
) -> Result<(TaggerModel, TrainingLog), TaggerError> {
    config.validate()?;
    let trainable: Vec<&MaskedExample> = corpus.iter().filter(|ex| ex.is_trainable()).collect();
    if trainable.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let aux_labels = aux_vocabulary(corpus);
    let dims = ModelDims {
        word_dim: WORD_DIM,
        table_sizes: featurizer.vocab.table_sizes(),
        embedding_dims: featurizer.vocab.dims.clone(),
        hidden: config.hidden,
        layers: config.layers,
        aux_labels: aux_labels.len(),
    };
    let data: Vec<(FeaturizedExample, Targets)> = trainable
        .iter()
        .map(|ex| Ok((featurizer.featurize(ex), targets_for(ex, &aux_labels)?)))
        .collect::<Result<_, TaggerError>>()?;

    let mut model = TaggerModel {
        featurizer,
        network: GruTagger::new(dims, config.seed),
        aux_labels,
        config: config.clone(),
    };
    let selection = if dev.is_empty() {
        SelectionMetric::TrainLoss
    } else {
        config.selection
    };
    let pool = pool(config.workers)?;
    let mut adam = Adam::new(&model.network.params, config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, ParamSet)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<(FeaturizedExample, Targets)> = chunk.iter().map(|&i| data[i].clone()).collect();
            let numeric = |_| TaggerError::NonFiniteLoss { epoch, batch: b + 1 };
            let (loss, mut grads) = pool
                .install(|| batch_gradients(&model.network, &batch, config.aux_weight))
                .map_err(numeric)?;
            if !loss.is_finite() {
                return Err(TaggerError::NonFiniteLoss { epoch, batch: b + 1 });
            }
            epoch_loss += loss;
            grads.scale(1.0 / batch.len() as f64);
            let norm = grads.l2_norm();
            if norm > config.clip_norm {
                grads.scale(config.clip_norm / norm);
            }
            adam.update(&mut model.network.params, &grads);
            if !model.network.params.all_finite() {
                return Err(TaggerError::NonFiniteLoss { epoch, batch: b + 1 });
            }
        }
        let loss = epoch_loss / data.len() as f64;
        let dev_f1 = if dev.is_empty() {
            None
        } else {
            Some(pool.install(|| dev_score(&model, dev, decoder))?)
        };
        info!(
            "epoch {epoch} loss {loss:.6} dev_avg_labeled_f1 {}",
            dev_f1.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"))
        );
        let score = match selection {
            SelectionMetric::DevAvgLabeledF1 => dev_f1.unwrap_or(0.0),
            SelectionMetric::TrainLoss => -loss,
        };
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, model.network.params.clone()));
            log.selected_epoch = epoch;
        }
        log.epochs.push(EpochRecord { epoch, loss, dev_f1 });
    }
    if let Some((_, params)) = best {
        model.network.params = params;
    }
    Ok((model, log))
}

/// Fraction of tokens whose most probable children label equals the target.
pub fn token_accuracy(model: &TaggerModel, examples: &[MaskedExample]) -> Result<f64, TaggerError> {
    let mut correct = 0usize;
    let mut total = 0usize;
    for ex in examples.iter().filter(|ex| ex.is_trainable()) {
        let targets = targets_for(ex, &model.aux_labels)?;
        let dist = model.network.forward(&model.featurizer.featurize(ex))?;
        for (row, &gold) in dist.bio.iter().zip(&targets.bio) {
            let mut best = 0;
            for (i, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = i;
                }
            }
            correct += usize::from(best == gold);
            total += 1;
        }
    }
    Ok(if total == 0 { 0.0 } else { correct as f64 / total as f64 })
}
