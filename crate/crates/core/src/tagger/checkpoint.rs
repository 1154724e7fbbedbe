//! Binary model container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` metadata length, the
//! metadata as JSON (dimensions, vocabularies, auxiliary labels, training
//! configuration, tensor names and shapes), then every tensor value as a
//! little-endian `f64` in tensor order. Word vectors and lexicons are not
//! stored; they are supplied again when loading.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::gru::{GruTagger, ModelDims};
use super::params::{ParamSet, Tensor};
use super::train::TrainConfig;
use super::{TaggerError, TaggerModel};
use crate::features::{FeatureVocabularies, Featurizer, WordEmbeddingTable};
use crate::lexicon::LexiconSet;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"UCCAREC\0";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Metadata {
    dims: ModelDims,
    vocab: FeatureVocabularies,
    aux_labels: Vec<String>,
    config: TrainConfig,
    tensors: Vec<Tensor>,
}

pub fn write_checkpoint<W: Write>(model: &TaggerModel, w: &mut W) -> std::io::Result<()> {
    let meta = Metadata {
        dims: model.network.dims.clone(),
        vocab: model.featurizer.vocab.clone(),
        aux_labels: model.aux_labels.clone(),
        config: model.config.clone(),
        tensors: model.network.params.tensors.clone(),
    };
    let json = serde_json::to_vec(&meta)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for t in &model.network.params.tensors {
        for v in &t.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn save_checkpoint(model: &TaggerModel, path: &Path) -> Result<(), TaggerError> {
    let io = |source| TaggerError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_checkpoint(model, &mut w).map_err(io)
}

pub fn read_checkpoint<R: Read>(
    r: &mut R,
    name: &str,
    embeddings: WordEmbeddingTable,
    lexicons: LexiconSet,
) -> Result<TaggerModel, TaggerError> {
    let bad = |message: String| TaggerError::Checkpoint {
        path: name.to_owned(),
        message,
    };
    let io = |source| TaggerError::Io {
        path: name.to_owned(),
        source,
    };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(io)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("format version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let mut long = [0u8; 8];
    r.read_exact(&mut long).map_err(io)?;
    let len = usize::try_from(u64::from_le_bytes(long)).map_err(|_| bad("metadata too large".into()))?;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(io)?;
    let mut meta: Metadata = serde_json::from_slice(&json).map_err(|e| bad(format!("metadata: {e}")))?;
    let mut buf = [0u8; 8];
    for t in &mut meta.tensors {
        t.data = Vec::with_capacity(t.rows * t.cols);
        for _ in 0..t.rows * t.cols {
            r.read_exact(&mut buf).map_err(io)?;
            t.data.push(f64::from_le_bytes(buf));
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest).map_err(io)?;
    if !rest.is_empty() {
        return Err(bad(format!("{} trailing bytes", rest.len())));
    }
    if meta.vocab.table_sizes() != meta.dims.table_sizes || meta.vocab.dims != meta.dims.embedding_dims {
        return Err(bad("vocabularies do not match model dimensions".into()));
    }
    if meta.aux_labels.len() != meta.dims.aux_labels {
        return Err(bad("auxiliary labels do not match model dimensions".into()));
    }
    meta.vocab.reindex();
    let network = GruTagger::from_params(meta.dims, ParamSet { tensors: meta.tensors })?;
    Ok(TaggerModel {
        featurizer: Featurizer::new(meta.vocab, embeddings, lexicons),
        network,
        aux_labels: meta.aux_labels,
        config: meta.config,
    })
}

pub fn load_checkpoint(path: &Path, embeddings: WordEmbeddingTable, lexicons: LexiconSet) -> Result<TaggerModel, TaggerError> {
    let file = File::open(path).map_err(|source| TaggerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_checkpoint(&mut BufReader::new(file), &path.display().to_string(), embeddings, lexicons)
}
