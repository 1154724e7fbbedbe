//! Multiword-expression lexicons and leftmost-longest span matching.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::graph::TokenRow;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Lowercased token-sequence patterns for one language.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExpressionLexicon {
    pub language: String,
    patterns: BTreeSet<Vec<String>>,
    max_len: usize,
    /// Duplicate lines dropped while building.
    pub duplicates: usize,
}

impl ExpressionLexicon {
    pub fn new(language: impl Into<String>) -> Self {
        ExpressionLexicon {
            language: language.into(),
            ..Default::default()
        }
    }

    /// Builds a lexicon from expressions given as space-separated strings.
    pub fn from_expressions<I, S>(language: impl Into<String>, expressions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = ExpressionLexicon::new(language);
        for expr in expressions {
            lexicon.insert(expr.as_ref());
        }
        lexicon
    }

    /// Adds one expression; returns false for empty or duplicate patterns.
    pub fn insert(&mut self, expression: &str) -> bool {
        let pattern: Vec<String> = expression.split_whitespace().map(str::to_lowercase).collect();
        if pattern.is_empty() {
            return false;
        }
        self.max_len = self.max_len.max(pattern.len());
        if self.patterns.insert(pattern) {
            true
        } else {
            self.duplicates += 1;
            false
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn patterns(&self) -> impl Iterator<Item = &[String]> {
        self.patterns.iter().map(Vec::as_slice)
    }

    pub fn contains(&self, pattern: &[String]) -> bool {
        self.patterns.contains(pattern)
    }

    /// Marks tokens inside expressions, scanning left to right and taking
    /// the longest pattern that starts at each position.
    pub fn match_forms<S: AsRef<str>>(&self, forms: &[S]) -> MweMask {
        let lowered: Vec<String> = forms.iter().map(|f| f.as_ref().to_lowercase()).collect();
        let mut flags = vec![false; lowered.len()];
        let mut spans = Vec::new();
        let mut i = 0;
        while i < lowered.len() {
            let longest = (1..=self.max_len.min(lowered.len() - i))
                .rev()
                .find(|&len| self.patterns.contains(&lowered[i..i + len]));
            match longest {
                Some(len) => {
                    flags[i..i + len].iter_mut().for_each(|f| *f = true);
                    spans.push((i, i + len));
                    i += len;
                }
                None => i += 1,
            }
        }
        MweMask { flags, spans }
    }

    pub fn match_tokens(&self, tokens: &[TokenRow]) -> MweMask {
        let forms: Vec<&str> = tokens.iter().map(|t| t.form.as_str()).collect();
        self.match_forms(&forms)
    }
}

/// Reads a lexicon file: one expression per line, `#` comments, blank lines skipped.
pub fn load_lexicon(path: &Path, language: &str) -> Result<ExpressionLexicon, LexiconError> {
    let text = fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lexicon = ExpressionLexicon::new(language);
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        lexicon.insert(line);
    }
    if lexicon.duplicates > 0 {
        warn!(
            "{}: dropped {} duplicate expression(s)",
            path.display(),
            lexicon.duplicates
        );
    }
    Ok(lexicon)
}

/// Per-token expression membership.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MweMask {
    pub flags: Vec<bool>,
    /// Half-open `(start, end)` intervals.
    pub spans: Vec<(usize, usize)>,
}

impl MweMask {
    pub fn empty(len: usize) -> Self {
        MweMask {
            flags: vec![false; len],
            spans: Vec::new(),
        }
    }

    /// True when `boundary` (a cut before token `boundary`) splits an expression.
    pub fn splits(&self, boundary: usize) -> bool {
        self.spans.iter().any(|&(s, e)| s < boundary && boundary < e)
    }
}

/// Lexicons keyed by language code.
#[derive(Clone, Debug, Default)]
pub struct LexiconSet {
    by_language: BTreeMap<String, ExpressionLexicon>,
}

impl LexiconSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, lexicon: ExpressionLexicon) {
        self.by_language.insert(lexicon.language.clone(), lexicon);
    }

    pub fn get(&self, language: &str) -> Option<&ExpressionLexicon> {
        self.by_language.get(language)
    }

    /// Matches with the lexicon of the first token's language; all-false without one.
    pub fn match_tokens(&self, tokens: &[TokenRow]) -> MweMask {
        tokens
            .first()
            .and_then(|t| self.get(&t.language))
            .map(|lex| lex.match_tokens(tokens))
            .unwrap_or_else(|| MweMask::empty(tokens.len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn forms(s: &str) -> Vec<&str> {
        s.split(' ').collect()
    }

    /// Every (start, end) where some pattern occurs.
    fn all_matches(lex: &ExpressionLexicon, words: &[&str]) -> Vec<(usize, usize)> {
        let lowered: Vec<String> = words.iter().map(|w| w.to_lowercase()).collect();
        let mut out = Vec::new();
        for s in 0..lowered.len() {
            for e in s + 1..=lowered.len() {
                if lex.contains(&lowered[s..e]) {
                    out.push((s, e));
                }
            }
        }
        out
    }

    #[test]
    fn load_two_expressions() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "at least\nin front of").unwrap();
        let lex = load_lexicon(f.path(), "en").unwrap();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.duplicates, 0);
    }

    #[test]
    fn empty_file_gives_empty_lexicon() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let lex = load_lexicon(f.path(), "fr").unwrap();
        assert!(lex.is_empty());
        let mask = lex.match_forms(&forms("rien du tout"));
        assert_eq!(mask.flags, vec![false; 3]);
        assert!(mask.spans.is_empty());
    }

    #[test]
    fn duplicates_comments_and_blank_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# prepositional\nat least\n\nAt Least\nat least").unwrap();
        let lex = load_lexicon(f.path(), "en").unwrap();
        assert_eq!(lex.len(), 1);
        assert_eq!(lex.duplicates, 2);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(load_lexicon(Path::new("/nonexistent/lexicon.txt"), "en").is_err());
    }

    #[test]
    fn matches_in_front_of() {
        let lex = ExpressionLexicon::from_expressions("en", ["in front of"]);
        let words = forms("She stood in front of him");
        let mask = lex.match_forms(&words);
        assert_eq!(mask.flags, vec![false, false, true, true, true, false]);
        assert_eq!(mask.spans, vec![(2, 5)]);
        assert_eq!(all_matches(&lex, &words), vec![(2, 5)]);
    }

    #[test]
    fn longest_pattern_wins() {
        let lex = ExpressionLexicon::from_expressions("en", ["in front", "in front of"]);
        let words = forms("in front of");
        let candidates = all_matches(&lex, &words);
        assert_eq!(candidates, vec![(0, 2), (0, 3)]);
        // leftmost start, then longest among those
        let expected = *candidates.iter().max_by_key(|(s, e)| (std::cmp::Reverse(*s), e - s)).unwrap();
        assert_eq!(lex.match_forms(&words).spans, vec![expected]);
    }

    #[test]
    fn no_hits_gives_all_false() {
        let lex = ExpressionLexicon::from_expressions("en", ["at least"]);
        let mask = lex.match_forms(&forms("the dog sleeps"));
        assert_eq!(mask, MweMask::empty(3));
    }

    #[test]
    fn case_insensitive() {
        let lex = ExpressionLexicon::from_expressions("en", ["AT least"]);
        assert_eq!(lex.match_forms(&forms("At LEAST once")).spans, vec![(0, 2)]);
    }

    #[test]
    fn overlapping_resolved_leftmost() {
        let lex = ExpressionLexicon::from_expressions("en", ["a b", "b c d"]);
        assert_eq!(lex.match_forms(&forms("a b c d")).spans, vec![(0, 2)]);
    }

    #[test]
    fn boundary_split_detection() {
        let mask = MweMask {
            flags: vec![false, false, true, true, true],
            spans: vec![(2, 5)],
        };
        assert!(!mask.splits(2));
        assert!(mask.splits(3));
        assert!(mask.splits(4));
        assert!(!mask.splits(5));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        const WORDS: &[&str] = &["a", "b", "c", "d"];

        fn word() -> impl Strategy<Value = String> {
            prop::sample::select(WORDS).prop_map(str::to_owned)
        }

        proptest! {
            #[test]
            fn spans_disjoint_and_flags_consistent(
                exprs in prop::collection::vec(prop::collection::vec(word(), 1..4), 0..6),
                sentence in prop::collection::vec(word(), 1..12),
            ) {
                let lines: Vec<String> = exprs.iter().map(|e| e.join(" ")).collect();
                let lex = ExpressionLexicon::from_expressions("en", &lines);
                let mask = lex.match_forms(&sentence);
                let mut covered = vec![0usize; sentence.len()];
                for &(s, e) in &mask.spans {
                    prop_assert!(s < e && e <= sentence.len());
                    for c in &mut covered[s..e] { *c += 1; }
                }
                for (i, &c) in covered.iter().enumerate() {
                    prop_assert!(c <= 1);
                    prop_assert_eq!(mask.flags[i], c == 1);
                }

                let mut reversed = lines.clone();
                reversed.reverse();
                let lex_rev = ExpressionLexicon::from_expressions("en", &reversed);
                prop_assert_eq!(lex_rev.match_forms(&sentence), mask);
            }
        }
    }
}
