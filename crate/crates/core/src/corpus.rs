//! Passage and token-annotation files, and expansion of passages into
//! masked examples (one per non-terminal node).

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bio::{self, BioError, BioLabel};
use crate::graph::{Category, GraphError, Head, NodeId, Passage, TokenRow};

pub const PASSAGE_HEADER: &str = "#ucca-passages v1";
pub const EXAMPLE_HEADER: &str = "#ucca-masked-examples v1";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Schema {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: passage {passage} is invalid: {}", violations.join("; "))]
    Invalid {
        path: String,
        line: usize,
        passage: String,
        violations: Vec<String>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads a passage file; every passage is validated.
pub fn load_passages(path: &Path) -> Result<Vec<Passage>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_passages(BufReader::new(file), &path.display().to_string())
}

pub fn read_passages<R: BufRead>(reader: R, name: &str) -> Result<Vec<Passage>, CorpusError> {
    let mut passages = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: name.to_owned(),
            source,
        })?;
        let lineno = i + 1;
        if i == 0 {
            if line.trim() != PASSAGE_HEADER {
                return Err(CorpusError::Schema {
                    path: name.to_owned(),
                    line: lineno,
                    message: format!("expected header '{PASSAGE_HEADER}'"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let passage: Passage = serde_json::from_str(&line).map_err(|e| CorpusError::Schema {
            path: name.to_owned(),
            line: lineno,
            message: e.to_string(),
        })?;
        let violations = passage.validate();
        if !violations.is_empty() {
            return Err(CorpusError::Invalid {
                path: name.to_owned(),
                line: lineno,
                passage: passage.passage_id,
                violations,
            });
        }
        passages.push(passage);
    }
    Ok(passages)
}

pub fn save_passages(passages: &[Passage], path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_passages(passages, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_passages<W: Write>(passages: &[Passage], w: &mut W) -> io::Result<()> {
    writeln!(w, "{PASSAGE_HEADER}")?;
    for p in passages {
        serde_json::to_writer(&mut *w, p)?;
        writeln!(w)?;
    }
    Ok(())
}

/// One sentence from a token annotation file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSentence {
    pub id: String,
    pub tokens: Vec<TokenRow>,
}

/// Reads tab-separated `ID FORM UPOS XPOS FEATS HEAD DEPREL` rows.
///
/// Sentences are separated by blank lines. A `# sent_id = X` comment names the
/// sentence; otherwise sentences are named `s{n}` in file order.
pub fn load_token_file(path: &Path, language: &str) -> Result<Vec<TokenSentence>, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_token_text(&text, language, &path.display().to_string())
}

pub fn parse_token_text(text: &str, language: &str, name: &str) -> Result<Vec<TokenSentence>, CorpusError> {
    let schema = |line: usize, message: String| CorpusError::Schema {
        path: name.to_owned(),
        line,
        message,
    };
    let mut sentences = Vec::new();
    let mut current: Vec<TokenRow> = Vec::new();
    let mut current_id: Option<String> = None;
    let flush = |tokens: &mut Vec<TokenRow>, id: &mut Option<String>, sentences: &mut Vec<TokenSentence>| {
        if !tokens.is_empty() {
            let id = id.take().unwrap_or_else(|| format!("s{}", sentences.len()));
            sentences.push(TokenSentence {
                id,
                tokens: std::mem::take(tokens),
            });
        }
    };
    let mut heads: Vec<(usize, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            check_heads(&current, &heads).map_err(|m| schema(lineno, m))?;
            heads.clear();
            flush(&mut current, &mut current_id, &mut sentences);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("sent_id") {
                current_id = Some(id.trim_start_matches([' ', '=']).trim().to_owned());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 7 {
            return Err(schema(lineno, format!("expected 7 columns, found {}", cols.len())));
        }
        let id: usize = cols[0]
            .parse()
            .map_err(|_| schema(lineno, format!("invalid token id '{}'", cols[0])))?;
        if id != current.len() + 1 {
            return Err(schema(lineno, format!("token id {id} out of sequence")));
        }
        let optional = |s: &str| (s != "_").then(|| s.to_owned());
        let mut morph = BTreeMap::new();
        if cols[4] != "_" {
            for feat in cols[4].split('|') {
                let (k, v) = feat
                    .split_once('=')
                    .ok_or_else(|| schema(lineno, format!("malformed feature '{feat}'")))?;
                morph.insert(k.to_owned(), v.to_owned());
            }
        }
        let head = match cols[5] {
            "_" => None,
            "0" => Some(Head::Root),
            h => {
                let h: usize = h
                    .parse()
                    .map_err(|_| schema(lineno, format!("invalid head '{h}'")))?;
                heads.push((lineno, h));
                Some(Head::Token(h - 1))
            }
        };
        current.push(TokenRow {
            form: cols[1].to_owned(),
            upos: cols[2].to_owned(),
            xpos: optional(cols[3]),
            morph,
            head,
            deprel: cols[6].to_owned(),
            language: language.to_owned(),
            aux: None,
        });
    }
    check_heads(&current, &heads).map_err(|m| schema(text.lines().count(), m))?;
    flush(&mut current, &mut current_id, &mut sentences);
    Ok(sentences)
}

fn check_heads(tokens: &[TokenRow], heads: &[(usize, usize)]) -> Result<(), String> {
    for &(line, h) in heads {
        if h > tokens.len() {
            return Err(format!("head {h} on line {line} exceeds sentence length {}", tokens.len()));
        }
    }
    Ok(())
}

pub fn write_token_text<W: Write>(sentences: &[TokenSentence], w: &mut W) -> io::Result<()> {
    for s in sentences {
        writeln!(w, "# sent_id = {}", s.id)?;
        for (i, t) in s.tokens.iter().enumerate() {
            let feats = if t.morph.is_empty() {
                "_".to_owned()
            } else {
                t.morph
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join("|")
            };
            let head = match t.head {
                None => "_".to_owned(),
                Some(Head::Root) => "0".to_owned(),
                Some(Head::Token(h)) => (h + 1).to_string(),
            };
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.form,
                t.upos,
                t.xpos.as_deref().unwrap_or("_"),
                feats,
                head,
                t.deprel
            )?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Per-token input mask: the focus node's arc category inside its yield, `O` outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaskSymbol {
    O,
    Arc(Category),
    Root,
}

impl MaskSymbol {
    /// The closed mask vocabulary.
    pub fn all() -> impl Iterator<Item = MaskSymbol> {
        std::iter::once(MaskSymbol::O)
            .chain(Category::ALL.iter().map(|&c| MaskSymbol::Arc(c)))
            .chain(std::iter::once(MaskSymbol::Root))
    }
}

impl fmt::Display for MaskSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSymbol::O => f.write_str("O"),
            MaskSymbol::Arc(c) => write!(f, "{c}"),
            MaskSymbol::Root => f.write_str("ROOT"),
        }
    }
}

impl FromStr for MaskSymbol {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "O" => Ok(MaskSymbol::O),
            "ROOT" => Ok(MaskSymbol::Root),
            c => c.parse().map(MaskSymbol::Arc),
        }
    }
}

impl Serialize for MaskSymbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MaskSymbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// Mask for a focus span: `symbol` on `start..end`, `O` elsewhere.
pub fn span_mask(len: usize, start: usize, end: usize, symbol: MaskSymbol) -> Vec<MaskSymbol> {
    (0..len)
        .map(|i| if start <= i && i < end { symbol } else { MaskSymbol::O })
        .collect()
}

/// Auxiliary label for tokens without one.
pub const AUX_NONE: &str = "O";

/// One tagger instance: a sentence masked for one focus node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskedExample {
    pub passage_id: String,
    pub tokens: Vec<TokenRow>,
    pub mask: Vec<MaskSymbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_bio: Option<Vec<BioLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_aux: Option<Vec<String>>,
    pub focus_node: Option<NodeId>,
    /// The focus node's children could not be BIO-encoded; excluded from training.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub not_representable: bool,
}

impl MaskedExample {
    /// An inference instance with no targets.
    pub fn for_inference(passage_id: &str, tokens: &[TokenRow], mask: Vec<MaskSymbol>) -> Self {
        MaskedExample {
            passage_id: passage_id.to_owned(),
            tokens: tokens.to_vec(),
            mask,
            target_bio: None,
            target_aux: None,
            focus_node: None,
            not_representable: false,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_trainable(&self) -> bool {
        !self.not_representable && self.target_bio.is_some()
    }

    /// Contiguous non-`O` mask region and its symbol, if the mask has that shape.
    pub fn focus_span(&self) -> Option<(usize, usize, MaskSymbol)> {
        let start = self.mask.iter().position(|m| *m != MaskSymbol::O)?;
        let symbol = self.mask[start];
        let end = start + self.mask[start..].iter().take_while(|m| **m == symbol).count();
        if self.mask[end..].iter().all(|m| *m == MaskSymbol::O) {
            Some((start, end, symbol))
        } else {
            None
        }
    }
}

/// Per-token auxiliary labels: supplied tags when every token has one,
/// otherwise the category of the edge under the root that dominates the token.
pub fn aux_labels(passage: &Passage) -> Result<Vec<String>, GraphError> {
    if !passage.tokens.is_empty() && passage.tokens.iter().all(|t| t.aux.is_some()) {
        return Ok(passage.tokens.iter().map(|t| t.aux.clone().unwrap()).collect());
    }
    let index = passage.index()?;
    let mut labels = vec![AUX_NONE.to_owned(); passage.len()];
    for edge in index.primary_children(passage.root)? {
        for pos in index.primary_yield(edge.child)? {
            labels[pos] = edge.category.to_string();
        }
    }
    Ok(labels)
}

/// One example per non-terminal, in pre-order. Nodes whose children cannot
/// be BIO-encoded are still emitted, flagged `not_representable`.
pub fn expand(passage: &Passage) -> Result<Vec<MaskedExample>, CorpusError> {
    let index = passage.index()?;
    let aux = aux_labels(passage)?;
    let mut out = Vec::new();
    for node in index.non_terminals()? {
        let symbol = match index.primary_parent(node) {
            None => MaskSymbol::Root,
            Some(edge) => MaskSymbol::Arc(edge.category),
        };
        let yld = index.primary_yield(node)?;
        let mask = (0..passage.len())
            .map(|i| if yld.contains(&i) { symbol } else { MaskSymbol::O })
            .collect();
        let (target_bio, not_representable) = match bio::encode(passage, node) {
            Ok(labels) => (Some(labels), false),
            Err(BioError::NotRepresentable { .. }) => (None, true),
            Err(BioError::Graph(e)) => return Err(e.into()),
            Err(other) => unreachable!("encode only fails on graphs: {other}"),
        };
        out.push(MaskedExample {
            passage_id: passage.passage_id.clone(),
            tokens: passage.tokens.clone(),
            mask,
            target_bio,
            target_aux: Some(aux.clone()),
            focus_node: Some(node),
            not_representable,
        });
    }
    Ok(out)
}

/// Counts from expanding a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SkipReport {
    pub passages: usize,
    pub non_terminals: usize,
    pub emitted: usize,
    /// `(passage_id, node)` pairs excluded from training.
    pub skipped: Vec<(String, NodeId)>,
}

impl fmt::Display for SkipReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "passages={} non_terminals={} emitted={} skipped={}",
            self.passages,
            self.non_terminals,
            self.emitted,
            self.skipped.len()
        )?;
        for (passage, node) in &self.skipped {
            writeln!(f, "skipped {passage} {node}")?;
        }
        Ok(())
    }
}

/// Trainable examples of a corpus and the skip report.
pub fn expand_corpus(passages: &[Passage]) -> Result<(Vec<MaskedExample>, SkipReport), CorpusError> {
    let mut report = SkipReport {
        passages: passages.len(),
        ..Default::default()
    };
    let mut examples = Vec::new();
    for p in passages {
        for ex in expand(p)? {
            report.non_terminals += 1;
            if ex.is_trainable() {
                report.emitted += 1;
                examples.push(ex);
            } else {
                report.skipped.push((p.passage_id.clone(), ex.focus_node.expect("expanded")));
            }
        }
    }
    Ok((examples, report))
}

pub fn save_examples(examples: &[MaskedExample], path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> io::Result<()> {
        writeln!(w, "{EXAMPLE_HEADER}")?;
        for ex in examples {
            serde_json::to_writer(&mut w, ex)?;
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(io_err(path))
}

pub fn load_examples(path: &Path) -> Result<Vec<MaskedExample>, CorpusError> {
    let file = File::open(path).map_err(io_err(path))?;
    let name = path.display().to_string();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let schema = |message: String| CorpusError::Schema {
            path: name.clone(),
            line: i + 1,
            message,
        };
        if i == 0 {
            if line.trim() != EXAMPLE_HEADER {
                return Err(schema(format!("expected header '{EXAMPLE_HEADER}'")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let ex: MaskedExample = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        let n = ex.tokens.len();
        let lengths_ok = ex.mask.len() == n
            && ex.target_bio.as_ref().is_none_or(|t| t.len() == n)
            && ex.target_aux.as_ref().is_none_or(|t| t.len() == n);
        if !lengths_ok {
            return Err(schema("mask and target lengths differ from token count".to_owned()));
        }
        out.push(ex);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::io::Cursor;

    fn round_trip(passages: &[Passage]) -> Vec<Passage> {
        let mut buf = Vec::new();
        write_passages(passages, &mut buf).unwrap();
        read_passages(Cursor::new(buf), "mem").unwrap()
    }

    #[test]
    fn empty_corpus_has_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        save_passages(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{PASSAGE_HEADER}\n"));
        assert!(load_passages(&path).unwrap().is_empty());
    }

    #[test]
    fn single_passage_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.jsonl");
        let p = fixtures::single_token();
        save_passages(std::slice::from_ref(&p), &path).unwrap();
        assert_eq!(load_passages(&path).unwrap(), vec![p]);
    }

    #[test]
    fn random_passages_round_trip() {
        let corpus = fixtures::random_corpus(5, 50, "rt", &fixtures::GeneratorConfig::default());
        assert_eq!(round_trip(&corpus), corpus);
        let mut with_aux = fixtures::scenes_and_link();
        with_aux.tokens[0].aux = Some("A".into());
        with_aux.tokens[0].xpos = Some("PRP".into());
        assert_eq!(round_trip(std::slice::from_ref(&with_aux)), vec![with_aux]);
    }

    #[test]
    fn unknown_category_names_record() {
        let p = fixtures::single_token();
        let line = serde_json::to_string(&p).unwrap().replace("\"H\"", "\"X\"");
        let text = format!("{PASSAGE_HEADER}\n{line}\n");
        let err = read_passages(Cursor::new(text), "bad.jsonl").unwrap_err();
        match err {
            CorpusError::Schema { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("unknown category 'X'"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let p = fixtures::single_token();
        let line = serde_json::to_string(&p)
            .unwrap()
            .replacen('{', "{\"extra\":1,", 1);
        let text = format!("{PASSAGE_HEADER}\n{line}\n");
        assert!(matches!(
            read_passages(Cursor::new(text), "x"),
            Err(CorpusError::Schema { line: 2, .. })
        ));
    }

    #[test]
    fn invalid_passage_rejected_with_line() {
        let mut p = fixtures::single_token();
        p.edges.clear();
        let text = format!("{PASSAGE_HEADER}\n\n{}\n", serde_json::to_string(&p).unwrap());
        match read_passages(Cursor::new(text), "x").unwrap_err() {
            CorpusError::Invalid { line, violations, .. } => {
                assert_eq!(line, 3);
                assert!(!violations.is_empty());
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn missing_header_is_schema_error() {
        assert!(matches!(
            read_passages(Cursor::new("{}\n"), "x"),
            Err(CorpusError::Schema { line: 1, .. })
        ));
    }

    #[test]
    fn fifteen_passage_file() {
        let cfg = fixtures::GeneratorConfig {
            language: "fr".into(),
            ..Default::default()
        };
        let corpus = fixtures::random_corpus(15, 15, "fr", &cfg);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fr.jsonl");
        save_passages(&corpus, &path).unwrap();
        let loaded = load_passages(&path).unwrap();
        assert_eq!(loaded.len(), 15);
        assert!(loaded.iter().all(|p| p.language == "fr"));
    }

    #[test]
    fn expand_single_token() {
        let ex = expand(&fixtures::single_token()).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].mask, vec![MaskSymbol::Root]);
        assert_eq!(ex[0].target_bio, Some(vec![BioLabel::Begin(Category::H)]));
    }

    #[test]
    fn expand_counts_match_non_terminals() {
        let p = fixtures::nested_scenes();
        let ex = expand(&p).unwrap();
        assert_eq!(ex.len(), 6);
        let focus: Vec<_> = ex.iter().map(|e| e.focus_node.unwrap()).collect();
        assert_eq!(focus, p.non_terminals().unwrap());
    }

    #[test]
    fn scene_mask_covers_scene_yield() {
        let p = fixtures::scenes_and_link();
        let ex = expand(&p).unwrap();
        let second_scene = ex.iter().find(|e| e.focus_node == Some(NodeId(9))).unwrap();
        let h = MaskSymbol::Arc(Category::H);
        let o = MaskSymbol::O;
        assert_eq!(second_scene.mask, vec![o, o, o, o, h, h, h]);
        assert_eq!(second_scene.focus_span(), Some((4, 7, h)));
        assert_eq!(ex[0].mask, vec![MaskSymbol::Root; 7]);
        // auxiliary targets are shared by every example of the passage
        let aux = ex[0].target_aux.clone().unwrap();
        assert_eq!(aux, vec!["H", "H", "H", "L", "H", "H", "H"]);
        assert!(ex.iter().all(|e| e.target_aux.as_ref() == Some(&aux)));
    }

    #[test]
    fn supplied_aux_tags_are_used_verbatim() {
        let mut p = fixtures::single_token();
        p.tokens[0].aux = Some("ROOT-H".into());
        assert_eq!(aux_labels(&p).unwrap(), vec!["ROOT-H"]);
    }

    #[test]
    fn non_representable_nodes_are_flagged() {
        let (examples, report) = expand_corpus(&[fixtures::discontiguous()]).unwrap();
        assert_eq!(report.non_terminals, 2);
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.emitted + report.skipped.len(), report.non_terminals);
        assert_eq!(examples.len(), 1);
        // the discontiguous node itself has terminal children, which encode fine
        assert_eq!(examples[0].focus_node, Some(NodeId(4)));
    }

    #[test]
    fn example_file_round_trip() {
        let (examples, _) = expand_corpus(&[fixtures::scenes_and_link()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ex.jsonl");
        save_examples(&examples, &path).unwrap();
        assert_eq!(load_examples(&path).unwrap(), examples);
    }

    #[test]
    fn token_file_round_trip() {
        let text = "# sent_id = a1\n1\tShe\tPRON\tPRP\tNumber=Sing|Person=3\t2\tnsubj\n2\tsleeps\tVERB\t_\t_\t0\troot\n\n1\tHi\tINTJ\t_\t_\t_\tdiscourse\n";
        let sentences = parse_token_text(text, "en", "mem").unwrap();
        assert_eq!(sentences.len(), 2);
        assert_eq!(sentences[0].id, "a1");
        assert_eq!(sentences[1].id, "s1");
        assert_eq!(sentences[0].tokens[0].head, Some(Head::Token(1)));
        assert_eq!(sentences[0].tokens[1].head, Some(Head::Root));
        assert_eq!(sentences[0].tokens[0].morph["Person"], "3");
        assert_eq!(sentences[1].tokens[0].head, None);
        let mut buf = Vec::new();
        write_token_text(&sentences, &mut buf).unwrap();
        let again = parse_token_text(std::str::from_utf8(&buf).unwrap(), "en", "mem").unwrap();
        assert_eq!(again, sentences);
    }

    #[test]
    fn token_file_errors() {
        assert!(parse_token_text("1\tx\tNOUN\n", "en", "m").is_err());
        assert!(parse_token_text("2\tx\tNOUN\t_\t_\t0\troot\n", "en", "m").is_err());
        assert!(parse_token_text("1\tx\tNOUN\t_\t_\t5\troot\n", "en", "m").is_err());
        assert!(parse_token_text("1\tx\tNOUN\t_\tbad\t0\troot\n", "en", "m").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::SeedableRng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn expansion_invariants(seed in any::<u64>()) {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                let p = fixtures::random_passage(&mut rng, "p", &fixtures::GeneratorConfig::default());
                let index = p.index().unwrap();
                let examples = expand(&p).unwrap();
                prop_assert_eq!(examples.len(), index.non_terminals().unwrap().len());
                for ex in &examples {
                    let node = ex.focus_node.unwrap();
                    let yld = index.primary_yield(node).unwrap();
                    let marked: std::collections::BTreeSet<usize> =
                        (0..ex.len()).filter(|&i| ex.mask[i] != MaskSymbol::O).collect();
                    prop_assert_eq!(&marked, &yld);
                    prop_assert_eq!(ex.mask.len(), ex.tokens.len());
                    prop_assert_eq!(ex.target_bio.as_ref().unwrap().len(), ex.tokens.len());
                }
                prop_assert_eq!(round_trip(std::slice::from_ref(&p)), vec![p.clone()]);
            }
        }
    }
}
