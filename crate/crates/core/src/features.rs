//! Token features for the tagger: frozen word vectors, categorical symbol
//! indices and the multiword-expression flag.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{MaskSymbol, MaskedExample};
use crate::graph::TokenRow;
use crate::lexicon::LexiconSet;

pub const WORD_DIM: usize = 300;
pub const PAD: usize = 0;
pub const OOV: usize = 1;
pub const DEFAULT_EMBEDDING_DIM: usize = 16;

const PAD_SYMBOL: &str = "<pad>";
const OOV_SYMBOL: &str = "<oov>";
/// Affix of a word shorter than the affix length.
pub const SHORT_SYMBOL: &str = "<short>";
/// Morphological key absent on a token.
pub const ABSENT_SYMBOL: &str = "_";

pub const LENGTH_BUCKETS: [&str; 6] = ["1", "2", "3", "4-6", "7-10", "11+"];
pub const CAPITALIZATION_CLASSES: [&str; 5] = ["lower", "initial", "upper", "mixed", "nonalpha"];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot fit vocabularies on an empty corpus")]
    EmptyCorpus,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: no valid {WORD_DIM}-dimensional rows ({skipped} skipped)")]
    NoEmbeddings { path: String, skipped: usize },
}

pub fn length_bucket(form: &str) -> &'static str {
    match form.chars().count() {
        0 | 1 => LENGTH_BUCKETS[0],
        2 => LENGTH_BUCKETS[1],
        3 => LENGTH_BUCKETS[2],
        4..=6 => LENGTH_BUCKETS[3],
        7..=10 => LENGTH_BUCKETS[4],
        _ => LENGTH_BUCKETS[5],
    }
}

pub fn capitalization(form: &str) -> &'static str {
    let letters: Vec<char> = form.chars().filter(|c| c.is_alphabetic()).collect();
    let Some((first, rest)) = letters.split_first() else {
        return "nonalpha";
    };
    let rest_lower = rest.iter().all(|c| !c.is_uppercase());
    if !first.is_uppercase() && rest_lower {
        "lower"
    } else if first.is_uppercase() && rest_lower {
        "initial"
    } else if letters.iter().all(|c| !c.is_lowercase()) {
        "upper"
    } else {
        "mixed"
    }
}

pub fn prefix(form: &str, len: usize) -> String {
    let lower = form.to_lowercase();
    if lower.chars().count() < len {
        SHORT_SYMBOL.to_owned()
    } else {
        lower.chars().take(len).collect()
    }
}

pub fn suffix(form: &str, len: usize) -> String {
    let lower: Vec<char> = form.to_lowercase().chars().collect();
    if lower.len() < len {
        SHORT_SYMBOL.to_owned()
    } else {
        lower[lower.len() - len..].iter().collect()
    }
}

/// Index table for one categorical feature. Index 0 is padding, 1 is OOV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    pub name: String,
    symbols: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl SymbolTable {
    fn new(name: &str, seen: BTreeSet<String>) -> Self {
        let mut symbols = vec![PAD_SYMBOL.to_owned(), OOV_SYMBOL.to_owned()];
        symbols.extend(seen);
        let mut table = SymbolTable {
            name: name.to_owned(),
            symbols,
            index: HashMap::new(),
        };
        table.rebuild_index();
        table
    }

    fn rebuild_index(&mut self) {
        self.index = self
            .symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn lookup(&self, symbol: &str) -> usize {
        self.index.get(symbol).copied().unwrap_or(OOV)
    }

    pub fn symbol(&self, index: usize) -> Option<&str> {
        self.symbols.get(index).map(String::as_str)
    }
}

/// Frozen symbol tables, one per categorical feature, in a fixed order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocabularies {
    pub morph_keys: Vec<String>,
    pub tables: Vec<SymbolTable>,
    /// Embedding width per table.
    pub dims: Vec<usize>,
}

fn table_names(morph_keys: &[String]) -> Vec<String> {
    let mut names: Vec<String> = ["deprel", "upos", "xpos"].map(str::to_owned).to_vec();
    names.extend(morph_keys.iter().map(|k| format!("morph:{k}")));
    names.extend(
        ["prefix2", "prefix3", "suffix2", "suffix3", "length", "capitalization", "language", "mask"]
            .map(str::to_owned),
    );
    names
}

/// Symbols of one token, in table order.
fn token_symbols(token: &TokenRow, mask: MaskSymbol, morph_keys: &[String]) -> Vec<String> {
    let mut out = vec![
        token.deprel.clone(),
        token.upos.clone(),
        token.xpos.clone().unwrap_or_else(|| ABSENT_SYMBOL.to_owned()),
    ];
    out.extend(morph_keys.iter().map(|k| {
        token
            .morph
            .get(k)
            .cloned()
            .unwrap_or_else(|| ABSENT_SYMBOL.to_owned())
    }));
    out.push(prefix(&token.form, 2));
    out.push(prefix(&token.form, 3));
    out.push(suffix(&token.form, 2));
    out.push(suffix(&token.form, 3));
    out.push(length_bucket(&token.form).to_owned());
    out.push(capitalization(&token.form).to_owned());
    out.push(token.language.clone());
    out.push(mask.to_string());
    out
}

impl FeatureVocabularies {
    /// Tables from every symbol seen in `corpus`, sorted before indexing.
    pub fn fit(corpus: &[MaskedExample], embedding_dim: usize) -> Result<Self, FeatureError> {
        if corpus.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let morph_keys: Vec<String> = corpus
            .iter()
            .flat_map(|ex| ex.tokens.iter().flat_map(|t| t.morph.keys().cloned()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let names = table_names(&morph_keys);
        let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); names.len()];
        // closed inventories are always present
        let n = names.len();
        seen[n - 4].extend(LENGTH_BUCKETS.iter().map(|s| s.to_string()));
        seen[n - 3].extend(CAPITALIZATION_CLASSES.iter().map(|s| s.to_string()));
        seen[n - 1].extend(MaskSymbol::all().map(|m| m.to_string()));
        for ex in corpus {
            for (token, mask) in ex.tokens.iter().zip(&ex.mask) {
                for (set, sym) in seen.iter_mut().zip(token_symbols(token, *mask, &morph_keys)) {
                    set.insert(sym);
                }
            }
        }
        let tables = names
            .iter()
            .zip(seen)
            .map(|(name, set)| SymbolTable::new(name, set))
            .collect::<Vec<_>>();
        let dims = vec![embedding_dim; tables.len()];
        Ok(FeatureVocabularies {
            morph_keys,
            tables,
            dims,
        })
    }

    /// Restores lookup indices after deserialization.
    pub fn reindex(&mut self) {
        for t in &mut self.tables {
            t.rebuild_index();
        }
    }

    pub fn table(&self, name: &str) -> Option<&SymbolTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn mask_table(&self) -> &SymbolTable {
        self.tables.last().expect("mask table is always last")
    }

    pub fn table_sizes(&self) -> Vec<usize> {
        self.tables.iter().map(SymbolTable::len).collect()
    }

    pub fn indices(&self, token: &TokenRow, mask: MaskSymbol) -> Vec<usize> {
        token_symbols(token, mask, &self.morph_keys)
            .iter()
            .zip(&self.tables)
            .map(|(sym, table)| table.lookup(sym))
            .collect()
    }
}

/// Pretrained word vectors; missing words map to a zero vector.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WordEmbeddingTable {
    vectors: HashMap<String, Vec<f64>>,
    /// Rows rejected while loading.
    pub skipped: usize,
}

impl WordEmbeddingTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Table from in-memory rows; rows of the wrong width are skipped.
    pub fn from_rows<I: IntoIterator<Item = (String, Vec<f64>)>>(rows: I) -> Self {
        let mut table = WordEmbeddingTable::default();
        for (word, v) in rows {
            if v.len() == WORD_DIM && v.iter().all(|x| x.is_finite()) {
                table.vectors.insert(word, v);
            } else {
                table.skipped += 1;
            }
        }
        table
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }
}

/// Reads `word v1 ... v300` rows. A leading `count dim` header line is ignored.
pub fn load_embeddings(path: &Path) -> Result<WordEmbeddingTable, FeatureError> {
    let io_err = |source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut rows = Vec::new();
    let mut malformed = 0;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        match values {
            Ok(v) if i == 0 && v.len() == 1 && word.parse::<usize>().is_ok() => continue,
            Ok(v) => rows.push((word.to_owned(), v)),
            Err(_) => malformed += 1,
        }
    }
    let mut table = WordEmbeddingTable::from_rows(rows);
    table.skipped += malformed;
    if table.skipped > 0 {
        warn!("{}: skipped {} malformed embedding row(s)", path.display(), table.skipped);
    }
    if table.is_empty() {
        return Err(FeatureError::NoEmbeddings {
            path: path.display().to_string(),
            skipped: table.skipped,
        });
    }
    Ok(table)
}

/// Tagger input for one masked sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturizedExample {
    /// `len x WORD_DIM`, frozen.
    pub words: Vec<Vec<f64>>,
    /// `len x tables`, symbol indices.
    pub categorical: Vec<Vec<usize>>,
    pub mwe: Vec<bool>,
}

impl FeaturizedExample {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Everything needed to turn masked examples into tagger input.
#[derive(Clone, Debug)]
pub struct Featurizer {
    pub vocab: FeatureVocabularies,
    pub embeddings: WordEmbeddingTable,
    pub lexicons: LexiconSet,
}

impl Featurizer {
    pub fn new(vocab: FeatureVocabularies, embeddings: WordEmbeddingTable, lexicons: LexiconSet) -> Self {
        Featurizer {
            vocab,
            embeddings,
            lexicons,
        }
    }

    pub fn featurize(&self, example: &MaskedExample) -> FeaturizedExample {
        let zero = vec![0.0; WORD_DIM];
        let words = example
            .tokens
            .iter()
            .map(|t| self.embeddings.get(&t.form).unwrap_or(&zero).to_vec())
            .collect();
        let categorical = example
            .tokens
            .iter()
            .zip(&example.mask)
            .map(|(t, m)| self.vocab.indices(t, *m))
            .collect();
        let mwe = self.lexicons.match_tokens(&example.tokens).flags;
        FeaturizedExample {
            words,
            categorical,
            mwe,
        }
    }
}

/// Sorted auxiliary-label vocabulary (always containing `O`) from training targets.
pub fn aux_vocabulary(corpus: &[MaskedExample]) -> Vec<String> {
    let mut set: BTreeSet<String> = BTreeSet::from([crate::corpus::AUX_NONE.to_owned()]);
    for ex in corpus {
        if let Some(aux) = &ex.target_aux {
            set.extend(aux.iter().cloned());
        }
    }
    set.into_iter().collect()
}

/// Languages present in a corpus.
pub fn languages(corpus: &[MaskedExample]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for ex in corpus {
        for t in &ex.tokens {
            *out.entry(t.language.clone()).or_insert(0) += 1;
        }
    }
    out
}
