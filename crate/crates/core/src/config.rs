//! Flat `key = value` configuration with environment and command-line overrides.
//!
//! Precedence, lowest first: built-in defaults, the configuration file,
//! `UCCA_REC_*` environment variables, explicit overrides. Relative paths in
//! the file are resolved against the file's directory; relative paths from
//! the environment or overrides against the working directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::features::DEFAULT_EMBEDDING_DIM;
use crate::parser::DecoderConfig;
use crate::tagger::{SelectionMetric, TrainConfig};

pub const ENV_PREFIX: &str = "UCCA_REC_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: line {line}: expected 'key = value'")]
    Syntax { origin: String, line: usize },
    #[error("{origin}: unknown key '{key}'")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: invalid value '{value}' for '{key}': {reason}")]
    Value {
        origin: String,
        key: String,
        value: String,
        reason: String,
    },
    #[error("missing setting '{0}'")]
    Missing(&'static str),
    #[error("{key}: path {path} does not exist")]
    NoSuchPath { key: &'static str, path: String },
}

/// Keys holding a single path.
pub const PATH_KEYS: [&str; 14] = [
    "train",
    "dev",
    "gold",
    "input",
    "examples",
    "embeddings",
    "action_nouns",
    "model",
    "predictions",
    "report",
    "report_json",
    "train_log",
    "trace",
    "tuned_config",
];

const SCALAR_KEYS: [&str; 15] = [
    "language",
    "seed",
    "workers",
    "embedding_dim",
    "epochs",
    "learning_rate",
    "batch_size",
    "clip_norm",
    "hidden",
    "layers",
    "aux_weight",
    "selection",
    "remote_threshold",
    "max_depth",
    "verb_upos",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub paths: BTreeMap<String, PathBuf>,
    /// Expression lexicon per language (`lexicon.<lang>` keys).
    pub lexicons: BTreeMap<String, PathBuf>,
    /// Language assigned to tokens read from annotation files.
    pub language: String,
    pub seed: u64,
    pub workers: usize,
    pub embedding_dim: usize,
    pub train: TrainConfig,
    pub decoder: DecoderConfig,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            paths: BTreeMap::new(),
            lexicons: BTreeMap::new(),
            language: "en".into(),
            seed: 13,
            workers: 0,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            train: TrainConfig::default(),
            decoder: DecoderConfig::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(origin: &str, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        origin: origin.to_owned(),
        key: key.to_owned(),
        value: value.to_owned(),
        reason: e.to_string(),
    })
}

impl Config {
    /// Sets one key. `base` resolves relative paths.
    pub fn set(&mut self, key: &str, value: &str, base: &Path, origin: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let value = value.trim();
        let path = || {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        if let Some(lang) = key.strip_prefix("lexicon.") {
            self.lexicons.insert(lang.to_owned(), path());
            return Ok(());
        }
        if PATH_KEYS.contains(&key) {
            if value.is_empty() {
                self.paths.remove(key);
            } else {
                self.paths.insert(key.to_owned(), path());
            }
            return Ok(());
        }
        let bad = |reason: &str| ConfigError::Value {
            origin: origin.to_owned(),
            key: key.to_owned(),
            value: value.to_owned(),
            reason: reason.to_owned(),
        };
        match key {
            "language" => self.language = value.to_owned(),
            "seed" => {
                self.seed = parse_num(origin, key, value)?;
                self.train.seed = self.seed;
            }
            "workers" => {
                self.workers = parse_num(origin, key, value)?;
                self.train.workers = self.workers;
            }
            "embedding_dim" => self.embedding_dim = parse_num(origin, key, value)?,
            "epochs" => self.train.epochs = parse_num(origin, key, value)?,
            "learning_rate" => self.train.learning_rate = parse_num(origin, key, value)?,
            "batch_size" => self.train.batch_size = parse_num(origin, key, value)?,
            "clip_norm" => self.train.clip_norm = parse_num(origin, key, value)?,
            "hidden" => self.train.hidden = parse_num(origin, key, value)?,
            "layers" => self.train.layers = parse_num(origin, key, value)?,
            "aux_weight" => self.train.aux_weight = parse_num(origin, key, value)?,
            "selection" => {
                self.train.selection = match value {
                    "dev_avg_labeled_f1" => SelectionMetric::DevAvgLabeledF1,
                    "train_loss" => SelectionMetric::TrainLoss,
                    _ => return Err(bad("expected dev_avg_labeled_f1 or train_loss")),
                }
            }
            "remote_threshold" => {
                let t: f64 = parse_num(origin, key, value)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(bad("must lie in [0, 1]"));
                }
                self.decoder.remote_threshold = t;
            }
            "max_depth" => {
                let d: usize = parse_num(origin, key, value)?;
                if d == 0 {
                    return Err(bad("must be at least 1"));
                }
                self.decoder.max_depth = d;
            }
            "verb_upos" => {
                self.decoder.verb_upos = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect()
            }
            _ => {
                return Err(ConfigError::UnknownKey {
                    origin: origin.to_owned(),
                    key: key.to_owned(),
                })
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, base: &Path, origin: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax {
                origin: origin.to_owned(),
                line: i + 1,
            })?;
            self.set(key, value, base, &format!("{origin}:{}", i + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        self.apply_text(&text, &base, &path.display().to_string())
    }

    /// Applies `UCCA_REC_<KEY>` variables. `UCCA_REC_LEXICON_<LANG>` sets `lexicon.<lang>`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I, cwd: &Path) -> Result<(), ConfigError> {
        let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (name, value) in vars {
            let key = name[ENV_PREFIX.len()..].to_lowercase();
            let key = match key.strip_prefix("lexicon_") {
                Some(lang) => format!("lexicon.{lang}"),
                None => key,
            };
            self.set(&key, &value, cwd, &name)?;
        }
        Ok(())
    }

    /// Defaults, then `file`, then the process environment.
    pub fn load(file: Option<&Path>) -> Result<Config, ConfigError> {
        let mut cfg = Config::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        let cwd = std::env::current_dir().unwrap_or_default();
        cfg.apply_env(std::env::vars(), &cwd)?;
        Ok(cfg)
    }

    pub fn path(&self, key: &'static str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    pub fn require(&self, key: &'static str) -> Result<&Path, ConfigError> {
        self.path(key).ok_or(ConfigError::Missing(key))
    }

    /// Like [`Config::require`], and the path must exist.
    pub fn require_existing(&self, key: &'static str) -> Result<&Path, ConfigError> {
        let p = self.require(key)?;
        if p.exists() {
            Ok(p)
        } else {
            Err(ConfigError::NoSuchPath {
                key,
                path: p.display().to_string(),
            })
        }
    }

    /// Every setting as `key = value` lines, paths absolute where possible.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, p) in &self.paths {
            let p = fs::canonicalize(p).unwrap_or_else(|_| p.clone());
            let _ = writeln!(s, "{k} = {}", p.display());
        }
        for (lang, p) in &self.lexicons {
            let p = fs::canonicalize(p).unwrap_or_else(|_| p.clone());
            let _ = writeln!(s, "lexicon.{lang} = {}", p.display());
        }
        let t = &self.train;
        let d = &self.decoder;
        let selection = match t.selection {
            SelectionMetric::DevAvgLabeledF1 => "dev_avg_labeled_f1",
            SelectionMetric::TrainLoss => "train_loss",
        };
        let verbs: Vec<&str> = d.verb_upos.iter().map(String::as_str).collect();
        for (k, v) in [
            ("language", self.language.clone()),
            ("seed", self.seed.to_string()),
            ("workers", self.workers.to_string()),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("epochs", t.epochs.to_string()),
            ("learning_rate", t.learning_rate.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("clip_norm", t.clip_norm.to_string()),
            ("hidden", t.hidden.to_string()),
            ("layers", t.layers.to_string()),
            ("aux_weight", t.aux_weight.to_string()),
            ("selection", selection.to_owned()),
            ("remote_threshold", d.remote_threshold.to_string()),
            ("max_depth", d.max_depth.to_string()),
            ("verb_upos", verbs.join(",")),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// Names of every accepted key (lexicons as `lexicon.<lang>`).
pub fn known_keys() -> Vec<&'static str> {
    let mut keys: Vec<&str> = PATH_KEYS.iter().chain(SCALAR_KEYS.iter()).copied().collect();
    keys.push("lexicon.<lang>");
    keys
}
