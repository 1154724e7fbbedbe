//! The five pipeline commands: expand, train, parse, eval and tune.
//!
//! Each command reads its inputs from a [`Config`], writes its outputs to the
//! configured paths and returns a summary for the caller to print.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use log::info;
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::corpus::{
    expand_corpus, load_examples, load_passages, load_token_file, save_examples, save_passages, CorpusError,
    SkipReport, TokenSentence,
};
use crate::eval::{score_aligned, CorpusReport, EvalError};
use crate::features::{load_embeddings, FeatureError, FeatureVocabularies, Featurizer, WordEmbeddingTable};
use crate::graph::Passage;
use crate::lexicon::{load_lexicon, LexiconError, LexiconSet};
use crate::parser::{parse_batch, DecoderConfig, ParseError, ParseTrace};
use crate::tagger::{self, load_checkpoint, save_checkpoint, OracleTagger, Tagger, TaggerError, TrainingLog};
use crate::tune::{tune_threshold, Sweep, TuneError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error("sentence {id}: {source}")]
    Parse {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn tagger_exit_code(e: &TaggerError) -> i32 {
    match e {
        TaggerError::NonFinite(_) | TaggerError::NonFiniteLoss { .. } => 3,
        TaggerError::Io { .. } | TaggerError::Config(_) => 1,
        _ => 2,
    }
}

fn parse_exit_code(e: &ParseError) -> i32 {
    match e {
        ParseError::Tagger(t) => tagger_exit_code(t),
        ParseError::Config(_) => 1,
        _ => 2,
    }
}

impl PipelineError {
    /// 1: usage, configuration or I/O; 2: data validation; 3: numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Usage(_) | PipelineError::Io { .. } | PipelineError::Lexicon(_) => 1,
            PipelineError::Corpus(CorpusError::Io { .. }) | PipelineError::Features(FeatureError::Io { .. }) => 1,
            PipelineError::Corpus(_) | PipelineError::Features(_) | PipelineError::Eval(_) => 2,
            PipelineError::Tagger(t) => tagger_exit_code(t),
            PipelineError::Parse { source, .. } => parse_exit_code(source),
        }
    }
}

impl From<TuneError> for PipelineError {
    fn from(e: TuneError) -> Self {
        match e {
            TuneError::Parse { id, source } => PipelineError::Parse { id, source },
            TuneError::Eval(e) => PipelineError::Eval(e),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn pool(cfg: &Config) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Usage(format!("cannot start worker pool: {e}")))
}

pub fn load_lexicons(cfg: &Config) -> Result<LexiconSet, PipelineError> {
    let mut set = LexiconSet::new();
    for (lang, path) in &cfg.lexicons {
        set.insert(load_lexicon(path, lang)?);
    }
    Ok(set)
}

pub fn load_word_vectors(cfg: &Config) -> Result<WordEmbeddingTable, PipelineError> {
    match cfg.path("embeddings") {
        Some(p) => Ok(load_embeddings(p)?),
        None => Ok(WordEmbeddingTable::empty()),
    }
}

/// Decoder settings with the action-noun lexicon loaded.
pub fn decoder_config(cfg: &Config) -> Result<DecoderConfig, PipelineError> {
    let mut d = cfg.decoder.clone();
    if let Some(p) = cfg.path("action_nouns") {
        d.action_nouns = Some(load_lexicon(p, &cfg.language)?);
    }
    Ok(d)
}

/// Writes the trainable examples of the `train` passages to `examples`.
pub fn cmd_expand(cfg: &Config) -> Result<SkipReport, PipelineError> {
    let passages = load_passages(cfg.require_existing("train")?)?;
    let out = cfg.require("examples")?;
    let (examples, report) = expand_corpus(&passages)?;
    save_examples(&examples, out)?;
    info!("expanded {} passages into {} examples", report.passages, report.emitted);
    Ok(report)
}

/// Trains on `examples`, selecting on `dev` when given, and writes the checkpoint to `model`.
pub fn cmd_train(cfg: &Config) -> Result<TrainingLog, PipelineError> {
    let examples = load_examples(cfg.require_existing("examples")?)?;
    let dev = match cfg.path("dev") {
        Some(p) => load_passages(p)?,
        None => Vec::new(),
    };
    let model_path = cfg.require("model")?;
    let vocab = FeatureVocabularies::fit(&examples, cfg.embedding_dim)?;
    let featurizer = Featurizer::new(vocab, load_word_vectors(cfg)?, load_lexicons(cfg)?);
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = cfg.seed;
    train_cfg.workers = cfg.workers;
    let (model, log) = tagger::train(&examples, &dev, featurizer, &train_cfg, &decoder_config(cfg)?)?;
    save_checkpoint(&model, model_path)?;
    if let Some(p) = cfg.path("train_log") {
        write_file(p, &log.to_string())?;
    }
    Ok(log)
}

fn gold_sentences(gold: &[Passage]) -> Vec<TokenSentence> {
    gold.iter()
        .map(|p| TokenSentence {
            id: p.passage_id.clone(),
            tokens: p.tokens.clone(),
        })
        .collect()
}

/// Either the gold-replaying oracle or the trained model from `model`.
fn build_tagger(cfg: &Config, oracle: bool, gold: Option<&[Passage]>) -> Result<Box<dyn Tagger>, PipelineError> {
    if oracle {
        let gold = gold.ok_or_else(|| PipelineError::Usage("--oracle needs gold passages ('gold' or 'dev')".into()))?;
        Ok(Box::new(OracleTagger::new(gold)))
    } else {
        let path = cfg.require_existing("model")?;
        Ok(Box::new(load_checkpoint(path, load_word_vectors(cfg)?, load_lexicons(cfg)?)?))
    }
}

/// Parses `input` (or the tokens of `gold`) and writes the passages to `predictions`.
pub fn cmd_parse(cfg: &Config, oracle: bool) -> Result<Vec<Passage>, PipelineError> {
    let gold = match cfg.path("gold") {
        Some(p) if oracle || cfg.path("input").is_none() => Some(load_passages(p)?),
        _ => None,
    };
    let sentences = match cfg.path("input") {
        Some(p) => load_token_file(p, &cfg.language)?,
        None => gold_sentences(
            gold.as_deref()
                .ok_or_else(|| PipelineError::Usage("parse needs 'input' or 'gold'".into()))?,
        ),
    };
    let out = cfg.require("predictions")?;
    let tagger = build_tagger(cfg, oracle, gold.as_deref())?;
    let lexicons = load_lexicons(cfg)?;
    let decoder = decoder_config(cfg)?;
    let results = pool(cfg)?.install(|| parse_batch(&sentences, tagger.as_ref(), &lexicons, &decoder));
    let mut passages = Vec::with_capacity(results.len());
    let mut traces: Vec<(String, ParseTrace)> = Vec::new();
    for (r, s) in results.into_iter().zip(&sentences) {
        let (p, t) = r.map_err(|source| PipelineError::Parse {
            id: s.id.clone(),
            source,
        })?;
        passages.push(p);
        traces.push((s.id.clone(), t));
    }
    save_passages(&passages, out)?;
    if let Some(p) = cfg.path("trace") {
        let io = |source| PipelineError::Io {
            path: p.display().to_string(),
            source,
        };
        let mut w = BufWriter::new(File::create(p).map_err(io)?);
        for (id, t) in &traces {
            writeln!(w, "# sent_id = {id}").map_err(io)?;
            write!(w, "{t}").map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    info!("parsed {} sentences", passages.len());
    Ok(passages)
}

/// Scores `predictions` against `gold`; writes `report` (text) and `report_json` when set.
pub fn cmd_eval(cfg: &Config) -> Result<CorpusReport, PipelineError> {
    let pred = load_passages(cfg.require_existing("predictions")?)?;
    let gold = load_passages(cfg.require_existing("gold")?)?;
    let report = score_aligned(&pred, &gold)?;
    if let Some(p) = cfg.path("report") {
        write_file(p, &report.to_text())?;
    }
    if let Some(p) = cfg.path("report_json") {
        write_file(p, &(report.to_json() + "\n"))?;
    }
    Ok(report)
}

/// Sweeps the remote threshold on `dev` (or `gold`) and writes the updated
/// configuration to `tuned_config` when set.
pub fn cmd_tune(cfg: &Config, oracle: bool) -> Result<Sweep, PipelineError> {
    let gold_path = match cfg.path("dev") {
        Some(p) => p,
        None => cfg.require_existing("gold")?,
    };
    let gold = load_passages(gold_path)?;
    let tagger = build_tagger(cfg, oracle, Some(&gold))?;
    let lexicons = load_lexicons(cfg)?;
    let decoder = decoder_config(cfg)?;
    let sweep = pool(cfg)?.install(|| tune_threshold(&gold, tagger.as_ref(), &lexicons, &decoder))?;
    if let Some(p) = cfg.path("tuned_config") {
        let mut tuned = cfg.clone();
        tuned.decoder.remote_threshold = sweep.best;
        tuned.paths.remove("tuned_config");
        write_file(p, &tuned.to_text())?;
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::path::PathBuf;

    fn setup(dir: &Path, count: usize) -> Config {
        let passages = fixtures::oracle_corpus(9, count);
        save_passages(&passages, &dir.join("gold.jsonl")).unwrap();
        let mut cfg = Config::default();
        let text = "train = gold.jsonl\ngold = gold.jsonl\nexamples = ex.jsonl\npredictions = pred.jsonl\nmodel = model.bin\n";
        cfg.apply_text(text, dir, "test").unwrap();
        cfg
    }

    #[test]
    fn expand_then_oracle_parse_then_eval() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = setup(dir.path(), 4);
        let report = cmd_expand(&cfg).unwrap();
        assert_eq!(report.emitted + report.skipped.len(), report.non_terminals);
        let parsed = cmd_parse(&cfg, true).unwrap();
        assert_eq!(parsed.len(), 8);
        let report = cmd_eval(&cfg).unwrap();
        assert_eq!(report.overall.labeled.avg.f1(), 1.0);
    }

    #[test]
    fn exit_codes() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = setup(dir.path(), 0);
        cfg.paths.insert("train".into(), PathBuf::from("/no/such/file"));
        assert_eq!(cmd_expand(&cfg).unwrap_err().exit_code(), 1);
        fs::write(dir.path().join("bad.jsonl"), "#ucca-passages v1\n{}\n").unwrap();
        cfg.paths.insert("train".into(), dir.path().join("bad.jsonl"));
        assert_eq!(cmd_expand(&cfg).unwrap_err().exit_code(), 2);
        let numeric = PipelineError::Tagger(TaggerError::NonFiniteLoss { epoch: 1, batch: 1 });
        assert_eq!(numeric.exit_code(), 3);
    }

    #[test]
    fn tune_with_oracle_writes_threshold() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = setup(dir.path(), 3);
        cfg.set("tuned_config", "tuned.cfg", dir.path(), "t").unwrap();
        let sweep = cmd_tune(&cfg, true).unwrap();
        assert_eq!(sweep.best, 0.05);
        let text = fs::read_to_string(dir.path().join("tuned.cfg")).unwrap();
        assert!(text.contains("remote_threshold = 0.05"));
    }
}
