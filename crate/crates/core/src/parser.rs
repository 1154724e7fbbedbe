//! Top-down recursive parsing: tag the children of a focus node, decode and
//! constrain the spans, then recurse into every multi-token child.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bio::{decode_probs, BioError, ChildSpan, TagDistribution};
use crate::corpus::{span_mask, MaskSymbol, MaskedExample, TokenSentence};
use crate::graph::{Category, Edge, Node, NodeId, Passage, TokenRow};
use crate::lexicon::{ExpressionLexicon, LexiconSet, MweMask};
use crate::tagger::{Tagger, TaggerError};

/// Parts of speech attached as `F` when spans are filled in without tagger support.
pub const FUNCTION_UPOS: [&str; 6] = ["ADP", "DET", "AUX", "CCONJ", "SCONJ", "PART"];

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub remote_threshold: f64,
    pub max_depth: usize,
    pub action_nouns: Option<ExpressionLexicon>,
    pub verb_upos: BTreeSet<String>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            remote_threshold: 0.3,
            max_depth: 20,
            action_nouns: None,
            verb_upos: BTreeSet::from(["VERB".to_owned()]),
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), ParseError> {
        if !(0.0..=1.0).contains(&self.remote_threshold) {
            return Err(ParseError::Config(format!(
                "remote threshold {} outside [0, 1]",
                self.remote_threshold
            )));
        }
        if self.max_depth == 0 {
            return Err(ParseError::Config("max depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot parse an empty sentence")]
    Empty,
    #[error("invalid decoder configuration: {0}")]
    Config(String),
    #[error("tagger failed: {0}")]
    Tagger(#[from] TaggerError),
    #[error("tagger output: {0}")]
    Distribution(#[from] BioError),
    #[error("tagger returned {got} rows for {expected} tokens")]
    Length { expected: usize, got: usize },
    #[error("parser produced an invalid passage: {0:?}")]
    Invalid(Vec<String>),
}

/// What happened while decoding one focus node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub depth: usize,
    pub focus: (usize, usize),
    pub mask: Vec<MaskSymbol>,
    /// Whether the tagger was consulted; false for nodes flattened at the depth limit.
    pub tagged: bool,
    pub decoded: Vec<ChildSpan>,
    pub constrained: Vec<ChildSpan>,
    pub remote: Vec<ChildSpan>,
    pub firings: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseTrace {
    /// One step per non-terminal, in pre-order.
    pub steps: Vec<TraceStep>,
    /// Remote attachment decisions.
    pub remote_notes: Vec<String>,
}

impl ParseTrace {
    pub fn max_depth(&self) -> usize {
        self.steps.iter().map(|s| s.depth).max().unwrap_or(0)
    }

    pub fn tagger_calls(&self) -> usize {
        self.steps.iter().filter(|s| s.tagged).count()
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl fmt::Display for ParseTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(
                f,
                "depth={} focus={}..{} tagged={} mask=[{}] decoded=[{}] constrained=[{}] remote=[{}] firings=[{}]",
                s.depth,
                s.focus.0,
                s.focus.1,
                s.tagged,
                join(&s.mask),
                join(&s.decoded),
                join(&s.constrained),
                join(&s.remote),
                s.firings.join("; ")
            )?;
        }
        for note in &self.remote_notes {
            writeln!(f, "remote {note}")?;
        }
        Ok(())
    }
}

pub fn fallback_category(token: &TokenRow) -> Category {
    if FUNCTION_UPOS.contains(&token.upos.as_str()) {
        Category::F
    } else {
        Category::C
    }
}

fn is_relation(c: Category) -> bool {
    matches!(c, Category::P | Category::S)
}

/// Applies, in order: scene merging, the single-relation rule (scene level
/// only) and multiword-expression integrity. Spans must be disjoint and sorted.
pub fn apply_constraints(
    spans: &[ChildSpan],
    tokens: &[TokenRow],
    dist: &TagDistribution,
    mwe: &MweMask,
    cfg: &DecoderConfig,
    at_scene_level: bool,
) -> Vec<ChildSpan> {
    apply_constraints_traced(spans, tokens, dist, mwe, cfg, at_scene_level).0
}

/// [`apply_constraints`] plus a description of every rule that fired.
pub fn apply_constraints_traced(
    spans: &[ChildSpan],
    tokens: &[TokenRow],
    dist: &TagDistribution,
    mwe: &MweMask,
    cfg: &DecoderConfig,
    at_scene_level: bool,
) -> (Vec<ChildSpan>, Vec<String>) {
    let mut out: Vec<ChildSpan> = spans.to_vec();
    out.sort();
    let mut firings = Vec::new();

    let action = cfg
        .action_nouns
        .as_ref()
        .map(|lex| lex.match_tokens(tokens).flags)
        .unwrap_or_else(|| vec![false; tokens.len()]);
    let qualifies = |sp: &ChildSpan| {
        (sp.start..sp.end).any(|i| cfg.verb_upos.contains(&tokens[i].upos) || action.get(i).copied().unwrap_or(false))
    };
    merge_scenes(&mut out, qualifies, &mut firings);

    if at_scene_level {
        unique_relation(&mut out, dist, &mut firings);
    }

    let mut merged = false;
    let mut i = 0;
    while i + 1 < out.len() {
        let (a, b) = (out[i], out[i + 1]);
        let guarded = |c: Category| matches!(c, Category::H | Category::A);
        if a.end == b.start && mwe.splits(a.end) && (guarded(a.category) || guarded(b.category)) {
            firings.push(format!("expression: merged {a} and {b}"));
            out[i].end = b.end;
            out.remove(i + 1);
            merged = true;
        } else {
            i += 1;
        }
    }
    if merged && at_scene_level {
        unique_relation(&mut out, dist, &mut firings);
    }
    (out, firings)
}

fn merge_scenes(spans: &mut Vec<ChildSpan>, qualifies: impl Fn(&ChildSpan) -> bool, firings: &mut Vec<String>) {
    let scenes: Vec<usize> = (0..spans.len()).filter(|&i| spans[i].category == Category::H).collect();
    let ok: Vec<bool> = scenes.iter().map(|&i| qualifies(&spans[i])).collect();
    if !ok.iter().any(|&q| q) || ok.iter().all(|&q| q) {
        return;
    }
    // target span index -> merged range
    let mut groups: HashMap<usize, (usize, usize)> = HashMap::new();
    for (k, &i) in scenes.iter().enumerate() {
        let target = if ok[k] {
            i
        } else if let Some(j) = (0..k).rev().find(|&j| ok[j]) {
            firings.push(format!("scene: merged {} into preceding {}", spans[i], spans[scenes[j]]));
            scenes[j]
        } else {
            let j = (k + 1..scenes.len()).find(|&j| ok[j]).expect("some scene qualifies");
            debug!("scene {} merged forward into {}", spans[i], spans[scenes[j]]);
            firings.push(format!("scene: merged {} into following {}", spans[i], spans[scenes[j]]));
            scenes[j]
        };
        let g = groups.entry(target).or_insert((spans[target].start, spans[target].end));
        g.0 = g.0.min(spans[i].start);
        g.1 = g.1.max(spans[i].end);
    }
    let old = std::mem::take(spans);
    for (i, sp) in old.into_iter().enumerate() {
        if let Some(&(s, e)) = groups.get(&i) {
            spans.push(ChildSpan::new(s, e, Category::H));
        } else if !groups.values().any(|&(s, e)| s <= sp.start && sp.end <= e) {
            spans.push(sp);
        }
    }
}

fn unique_relation(spans: &mut [ChildSpan], dist: &TagDistribution, firings: &mut Vec<String>) {
    let count = spans.iter().filter(|s| is_relation(s.category)).count();
    if count == 1 {
        return;
    }
    let mut best: Option<(f64, Category, usize)> = None;
    for sp in spans.iter() {
        for pos in sp.start..sp.end {
            let (score, cat) = dist.scene_relation_score(pos);
            if best.is_none_or(|(b, _, _)| score > b) {
                best = Some((score, cat, pos));
            }
        }
    }
    let Some((_, cat, pos)) = best else { return };
    for sp in spans.iter_mut() {
        if sp.contains(pos) {
            sp.category = cat;
        } else if is_relation(sp.category) {
            sp.category = Category::C;
        }
    }
    firings.push(format!("relation: {count} candidates, token {pos} selected as {cat}"));
}

struct Builder<'a> {
    passage_id: &'a str,
    tokens: &'a [TokenRow],
    tagger: &'a dyn Tagger,
    cfg: &'a DecoderConfig,
    mwe: MweMask,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    depth: HashMap<NodeId, usize>,
    remotes: Vec<(NodeId, ChildSpan)>,
    trace: ParseTrace,
}

fn terminal_id(pos: usize) -> NodeId {
    NodeId(pos as u32 + 1)
}

impl Builder<'_> {
    fn new_node(&mut self, depth: usize) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node::non_terminal(id));
        self.depth.insert(id, depth);
        id
    }

    fn flat_spans(&self, start: usize, end: usize, symbol: MaskSymbol) -> Vec<ChildSpan> {
        let mut spans: Vec<ChildSpan> = (start..end)
            .map(|i| ChildSpan::new(i, i + 1, fallback_category(&self.tokens[i])))
            .collect();
        if symbol == MaskSymbol::Arc(Category::H) {
            let pos = (start..end)
                .find(|&i| self.cfg.verb_upos.contains(&self.tokens[i].upos))
                .unwrap_or(start);
            spans[pos - start].category = Category::P;
        }
        spans
    }

    fn expand(&mut self, node: NodeId, start: usize, end: usize, symbol: MaskSymbol, depth: usize) -> Result<(), ParseError> {
        let n = self.tokens.len();
        let mask = span_mask(n, start, end, symbol);
        let mut step = TraceStep {
            depth,
            focus: (start, end),
            mask: mask.clone(),
            tagged: false,
            decoded: Vec::new(),
            constrained: Vec::new(),
            remote: Vec::new(),
            firings: Vec::new(),
        };

        let children = if depth >= self.cfg.max_depth {
            step.firings.push("depth limit: flat node".into());
            self.flat_spans(start, end, symbol)
        } else {
            step.tagged = true;
            let example = MaskedExample::for_inference(self.passage_id, self.tokens, mask);
            let dist = self.tagger.predict(&example)?;
            if dist.len() != n {
                return Err(ParseError::Length {
                    expected: n,
                    got: dist.len(),
                });
            }
            let (primary, remote) = decode_probs(&dist, self.cfg.remote_threshold)?;
            let mut spans: Vec<ChildSpan> = primary
                .iter()
                .filter_map(|sp| {
                    let (s, e) = (sp.start.max(start), sp.end.min(end));
                    (s < e).then(|| ChildSpan::new(s, e, sp.category))
                })
                .collect();
            let covered: BTreeSet<usize> = spans.iter().flat_map(|sp| sp.start..sp.end).collect();
            let gaps: Vec<usize> = (start..end).filter(|i| !covered.contains(i)).collect();
            if !gaps.is_empty() {
                step.firings.push(format!("fill: {} uncovered token(s)", gaps.len()));
                spans.extend(gaps.iter().map(|&i| ChildSpan::new(i, i + 1, fallback_category(&self.tokens[i]))));
                spans.sort();
            }
            step.remote = remote
                .into_iter()
                .filter(|sp| sp.end <= start || sp.start >= end)
                .collect();
            let at_scene_level = match symbol {
                MaskSymbol::Arc(c) => c == Category::H,
                MaskSymbol::Root => !spans.iter().any(|sp| sp.category == Category::H),
                MaskSymbol::O => false,
            };
            let (mut constrained, firings) =
                apply_constraints_traced(&spans, self.tokens, &dist, &self.mwe, self.cfg, at_scene_level);
            step.firings.extend(firings);
            // root whose scenes were all merged away
            if symbol == MaskSymbol::Root && !at_scene_level && !constrained.iter().any(|sp| sp.category == Category::H) {
                let (again, firings) =
                    apply_constraints_traced(&constrained, self.tokens, &dist, &self.mwe, self.cfg, true);
                constrained = again;
                step.firings.extend(firings);
            }
            step.decoded = spans;
            constrained
        };
        step.constrained = children.clone();
        self.remotes.extend(step.remote.iter().map(|sp| (node, *sp)));
        self.trace.steps.push(step);

        for sp in children {
            if sp.len() == 1 {
                self.edges.push(Edge::primary(node, terminal_id(sp.start), sp.category));
            } else {
                let child = self.new_node(depth + 1);
                self.edges.push(Edge::primary(node, child, sp.category));
                self.expand(child, sp.start, sp.end, MaskSymbol::Arc(sp.category), depth + 1)?;
            }
        }
        Ok(())
    }

    /// Attaches remote spans to existing nodes with exactly that yield,
    /// preferring the deepest; spans that match nothing, or whose only match
    /// would close a cycle, are dropped.
    fn resolve_remotes(&mut self) {
        let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for e in self.edges.iter().filter(|e| !e.remote) {
            children.entry(e.parent).or_default().push(e.child);
        }
        let mut yields: HashMap<NodeId, (usize, usize)> = HashMap::new();
        fn span_of(
            node: NodeId,
            children: &HashMap<NodeId, Vec<NodeId>>,
            n: usize,
            memo: &mut HashMap<NodeId, (usize, usize)>,
        ) -> (usize, usize) {
            if let Some(&s) = memo.get(&node) {
                return s;
            }
            let s = if node.0 >= 1 && (node.0 as usize) <= n {
                (node.0 as usize - 1, node.0 as usize)
            } else {
                children.get(&node).map_or((0, 0), |cs| {
                    cs.iter().fold((usize::MAX, 0), |(lo, hi), &c| {
                        let (a, b) = span_of(c, children, n, memo);
                        (lo.min(a), hi.max(b))
                    })
                })
            };
            memo.insert(node, s);
            s
        }
        let n = self.tokens.len();
        let all: Vec<NodeId> = self.nodes.iter().map(|nd| nd.id).collect();
        for &id in &all {
            span_of(id, &children, n, &mut yields);
        }
        let depth_of = |id: NodeId, depth: &HashMap<NodeId, usize>, edges: &[Edge]| -> usize {
            if let Some(&d) = depth.get(&id) {
                d
            } else {
                let parent = edges.iter().find(|e| !e.remote && e.child == id).map(|e| e.parent);
                parent.and_then(|p| depth.get(&p)).map_or(0, |d| d + 1)
            }
        };
        let mut remotes = std::mem::take(&mut self.remotes);
        remotes.sort_by_key(|(node, sp)| (node.0, sp.start, sp.end));
        for (parent, sp) in remotes {
            let mut candidates: Vec<(usize, NodeId)> = all
                .iter()
                .filter(|&&id| id != parent && id.0 != 0 && yields[&id] == (sp.start, sp.end))
                .map(|&id| (depth_of(id, &self.depth, &self.edges), id))
                .collect();
            // deepest first, then most recently created
            candidates.sort_by(|a, b| b.cmp(a));
            let chosen = candidates.into_iter().map(|(_, id)| id).find(|&c| {
                !self.edges.iter().any(|e| e.parent == parent && e.child == c) && !self.reaches(c, parent)
            });
            match chosen {
                Some(child) => {
                    self.edges.push(Edge::remote(parent, child, sp.category));
                    self.trace.remote_notes.push(format!("{parent} -> {child} {sp}"));
                }
                None => {
                    debug!("{}: dropped remote span {sp} from {parent}", self.passage_id);
                    self.trace.remote_notes.push(format!("{parent} dropped {sp}"));
                }
            }
        }
    }

    fn reaches(&self, from: NodeId, to: NodeId) -> bool {
        let mut stack = vec![from];
        let mut seen = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if x == to {
                return true;
            }
            if seen.insert(x) {
                stack.extend(self.edges.iter().filter(|e| e.parent == x).map(|e| e.child));
            }
        }
        false
    }
}

/// Parses one sentence. Node ids: root 0, terminal for token `i` is `i + 1`,
/// non-terminals follow in creation (pre-order) order.
pub fn parse(
    passage_id: &str,
    tokens: &[TokenRow],
    tagger: &dyn Tagger,
    lexicons: &LexiconSet,
    cfg: &DecoderConfig,
) -> Result<(Passage, ParseTrace), ParseError> {
    cfg.validate()?;
    if tokens.is_empty() {
        return Err(ParseError::Empty);
    }
    let n = tokens.len();
    let mut nodes = vec![Node::non_terminal(NodeId(0))];
    nodes.extend((0..n).map(|i| Node::terminal(terminal_id(i), i)));
    let mut b = Builder {
        passage_id,
        tokens,
        tagger,
        cfg,
        mwe: lexicons.match_tokens(tokens),
        nodes,
        edges: Vec::new(),
        depth: HashMap::from([(NodeId(0), 1)]),
        remotes: Vec::new(),
        trace: ParseTrace::default(),
    };
    b.expand(NodeId(0), 0, n, MaskSymbol::Root, 1)?;
    b.resolve_remotes();
    let passage = Passage {
        passage_id: passage_id.to_owned(),
        language: tokens[0].language.clone(),
        tokens: tokens.to_vec(),
        nodes: b.nodes,
        edges: b.edges,
        root: NodeId(0),
    };
    let violations = passage.validate();
    if !violations.is_empty() {
        return Err(ParseError::Invalid(violations));
    }
    Ok((passage, b.trace))
}

/// Parses sentences concurrently on the current thread pool; output order follows input.
pub fn parse_batch(
    sentences: &[TokenSentence],
    tagger: &dyn Tagger,
    lexicons: &LexiconSet,
    cfg: &DecoderConfig,
) -> Vec<Result<(Passage, ParseTrace), ParseError>> {
    sentences
        .par_iter()
        .map(|s| parse(&s.id, &s.tokens, tagger, lexicons, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::BioLabel;
    use crate::fixtures;
    use crate::tagger::OracleTagger;
    use Category::*;

    fn toks(upos: &[&str]) -> Vec<TokenRow> {
        upos.iter()
            .enumerate()
            .map(|(i, u)| TokenRow::new(format!("w{i}"), *u, "en"))
            .collect()
    }

    fn uniform(len: usize) -> TagDistribution {
        TagDistribution {
            bio: vec![vec![1.0 / 53.0; 53]; len],
            aux: vec![vec![1.0]; len],
        }
    }

    struct AllO;
    impl Tagger for AllO {
        fn predict(&self, ex: &MaskedExample) -> Result<TagDistribution, TaggerError> {
            Ok(TagDistribution::one_hot(&vec![BioLabel::O; ex.len()]))
        }
    }

    /// Fixed labels at the root, nothing below it.
    struct RootOnly(Vec<BioLabel>);
    impl Tagger for RootOnly {
        fn predict(&self, ex: &MaskedExample) -> Result<TagDistribution, TaggerError> {
            if ex.mask.iter().all(|m| *m == MaskSymbol::Root) {
                Ok(TagDistribution::one_hot(&self.0))
            } else {
                AllO.predict(ex)
            }
        }
    }

    #[test]
    fn root_scene_absorbed_by_expression_gets_a_relation() {
        let tokens = toks(&["PRON", "NOUN", "VERB"]);
        let tagger = RootOnly(vec![BioLabel::Begin(A), BioLabel::Begin(H), BioLabel::Inside(H)]);
        let mut lexicons = LexiconSet::new();
        lexicons.insert(ExpressionLexicon::from_expressions("en", ["w0 w1"]));
        let (pred, trace) = parse("x", &tokens, &tagger, &lexicons, &DecoderConfig::default()).unwrap();
        let root_children: Vec<Category> = pred.edges.iter().filter(|e| e.parent == NodeId(0)).map(|e| e.category).collect();
        assert_eq!(root_children.len(), 1);
        assert!(is_relation(root_children[0]), "{root_children:?}");
        assert!(trace.steps[0].firings.iter().any(|f| f.starts_with("relation")));
    }

    #[test]
    fn scene_without_verb_merges_into_previous() {
        let tokens = toks(&["PRON", "VERB", "CCONJ", "ADV", "NOUN"]);
        let spans = [ChildSpan::new(0, 2, H), ChildSpan::new(2, 3, L), ChildSpan::new(3, 5, H)];
        let out = apply_constraints(&spans, &tokens, &uniform(5), &MweMask::empty(5), &DecoderConfig::default(), false);
        assert_eq!(out, vec![ChildSpan::new(0, 5, H)]);
    }

    #[test]
    fn leading_scene_without_verb_merges_forward() {
        let tokens = toks(&["NOUN", "NOUN", "PRON", "VERB"]);
        let spans = [ChildSpan::new(0, 2, H), ChildSpan::new(2, 4, H)];
        let (out, firings) =
            apply_constraints_traced(&spans, &tokens, &uniform(4), &MweMask::empty(4), &DecoderConfig::default(), false);
        assert_eq!(out, vec![ChildSpan::new(0, 4, H)]);
        assert!(firings[0].contains("following"));
    }

    #[test]
    fn action_noun_qualifies_a_scene() {
        let tokens = toks(&["PRON", "VERB", "DET", "NOUN"]);
        let mut tokens = tokens;
        tokens[3].form = "decision".into();
        let cfg = DecoderConfig {
            action_nouns: Some(ExpressionLexicon::from_expressions("en", ["decision"])),
            ..DecoderConfig::default()
        };
        let spans = [ChildSpan::new(0, 2, H), ChildSpan::new(2, 4, H)];
        let out = apply_constraints(&spans, &tokens, &uniform(4), &MweMask::empty(4), &cfg, false);
        assert_eq!(out, spans.to_vec());
    }

    #[test]
    fn no_qualifying_scene_leaves_spans() {
        let tokens = toks(&["NOUN", "NOUN"]);
        let spans = [ChildSpan::new(0, 1, H), ChildSpan::new(1, 2, H)];
        let out = apply_constraints(&spans, &tokens, &uniform(2), &MweMask::empty(2), &DecoderConfig::default(), false);
        assert_eq!(out, spans.to_vec());
    }

    #[test]
    fn two_relations_keep_the_most_probable() {
        let tokens = toks(&["VERB", "NOUN", "VERB"]);
        let mut dist = uniform(3);
        let mut put = |pos: usize, label: BioLabel, p: f64| {
            let row = &mut dist.bio[pos];
            row.iter_mut().for_each(|v| *v = (1.0 - p) / 52.0);
            row[label.index()] = p;
        };
        put(0, BioLabel::Begin(P), 0.6);
        put(1, BioLabel::Begin(A), 0.9);
        put(2, BioLabel::Begin(P), 0.7);
        let spans = [ChildSpan::new(0, 1, P), ChildSpan::new(1, 2, A), ChildSpan::new(2, 3, P)];
        let out = apply_constraints(&spans, &tokens, &dist, &MweMask::empty(3), &DecoderConfig::default(), true);
        assert_eq!(out, vec![ChildSpan::new(0, 1, C), ChildSpan::new(1, 2, A), ChildSpan::new(2, 3, P)]);
        // enumeration oracle: the winner is the argmax of max(B-P, I-P, B-S, I-S) per token
        let winner = (0..3)
            .max_by(|&a, &b| dist.scene_relation_score(a).0.partial_cmp(&dist.scene_relation_score(b).0).unwrap())
            .unwrap();
        assert_eq!(winner, 2);
        // outside a scene the rule does not apply
        let out = apply_constraints(&spans, &tokens, &dist, &MweMask::empty(3), &DecoderConfig::default(), false);
        assert_eq!(out, spans.to_vec());
    }

    #[test]
    fn missing_relation_is_created_from_state_probability() {
        let tokens = toks(&["NOUN", "ADJ"]);
        let mut dist = uniform(2);
        dist.bio[1][BioLabel::Begin(S).index()] += 0.1;
        dist.bio[1][BioLabel::O.index()] -= 0.1;
        let spans = [ChildSpan::new(0, 1, A), ChildSpan::new(1, 2, D)];
        let out = apply_constraints(&spans, &tokens, &dist, &MweMask::empty(2), &DecoderConfig::default(), true);
        assert_eq!(out, vec![ChildSpan::new(0, 1, A), ChildSpan::new(1, 2, S)]);
    }

    #[test]
    fn expression_boundary_merges_participants() {
        let tokens = toks(&["PRON", "VERB", "ADP", "NOUN", "NOUN", "ADV"]);
        let lex = ExpressionLexicon::from_expressions("en", ["w2 w3 w4"]);
        let mwe = lex.match_tokens(&tokens);
        assert_eq!(mwe.spans, vec![(2, 5)]);
        let spans = [
            ChildSpan::new(0, 1, A),
            ChildSpan::new(1, 2, P),
            ChildSpan::new(2, 3, A),
            ChildSpan::new(3, 5, A),
            ChildSpan::new(5, 6, D),
        ];
        let out = apply_constraints(&spans, &tokens, &uniform(6), &mwe, &DecoderConfig::default(), true);
        assert_eq!(
            out,
            vec![ChildSpan::new(0, 1, A), ChildSpan::new(1, 2, P), ChildSpan::new(2, 5, A), ChildSpan::new(5, 6, D)]
        );
    }

    #[test]
    fn satisfied_spans_are_a_fixpoint() {
        let tokens = toks(&["PRON", "VERB", "NOUN"]);
        let spans = [ChildSpan::new(0, 1, A), ChildSpan::new(1, 2, P), ChildSpan::new(2, 3, A)];
        let out = apply_constraints(&spans, &tokens, &uniform(3), &MweMask::empty(3), &DecoderConfig::default(), true);
        assert_eq!(out, spans.to_vec());
    }

    #[test]
    fn single_token_sentence() {
        let p = fixtures::single_token();
        let oracle = OracleTagger::new([&p]);
        let (pred, trace) = parse(&p.passage_id, &p.tokens, &oracle, &LexiconSet::new(), &DecoderConfig::default()).unwrap();
        assert_eq!(pred.nodes.len(), 2);
        assert_eq!(pred.edges, vec![Edge::primary(NodeId(0), NodeId(1), H)]);
        assert_eq!(trace.max_depth(), 1);
        assert_eq!(trace.tagger_calls(), 1);
    }

    fn signature_set(p: &Passage) -> BTreeSet<(Vec<usize>, Category, bool)> {
        let index = p.index().unwrap();
        p.edges
            .iter()
            .map(|e| (index.primary_yield(e.child).unwrap().into_iter().collect(), e.category, e.remote))
            .collect()
    }

    #[test]
    fn oracle_reconstructs_hand_fixtures() {
        for gold in [fixtures::single_token(), fixtures::scenes_and_link(), fixtures::nested_scenes()] {
            let oracle = OracleTagger::new([&gold]);
            let (pred, trace) =
                parse(&gold.passage_id, &gold.tokens, &oracle, &LexiconSet::new(), &DecoderConfig::default()).unwrap();
            assert_eq!(signature_set(&pred), signature_set(&gold), "{}", gold.passage_id);
            assert_eq!(pred.edges.len(), gold.edges.len());
            assert_eq!(trace.steps.len(), gold.non_terminals().unwrap().len());
        }
    }

    #[test]
    fn all_o_tagger_falls_back_to_flat_children() {
        let tokens = toks(&["DET", "NOUN", "VERB", "ADP", "NOUN"]);
        let (pred, trace) = parse("x", &tokens, &AllO, &LexiconSet::new(), &DecoderConfig::default()).unwrap();
        let cats: Vec<(NodeId, Category)> = pred.edges.iter().map(|e| (e.child, e.category)).collect();
        assert_eq!(
            cats,
            vec![(NodeId(1), P), (NodeId(2), C), (NodeId(3), C), (NodeId(4), F), (NodeId(5), C)]
        );
        assert!(pred.edges.iter().all(|e| e.parent == NodeId(0)));
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn depth_limit_flattens() {
        let gold = fixtures::nested_scenes();
        let oracle = OracleTagger::new([&gold]);
        let cfg = DecoderConfig {
            max_depth: 2,
            ..DecoderConfig::default()
        };
        let (pred, trace) = parse(&gold.passage_id, &gold.tokens, &oracle, &LexiconSet::new(), &cfg).unwrap();
        assert_eq!(trace.max_depth(), 2);
        assert!(trace.steps.iter().filter(|s| s.depth == 2).all(|s| !s.tagged));
        let index = pred.index().unwrap();
        for node in index.non_terminals().unwrap() {
            if index.primary_parent(node).map(|e| e.category) == Some(H) {
                let rel = index.primary_children(node).unwrap().iter().filter(|e| is_relation(e.category)).count();
                assert_eq!(rel, 1);
            }
        }
        let cfg = DecoderConfig {
            max_depth: 1,
            ..DecoderConfig::default()
        };
        let (_, trace) = parse(&gold.passage_id, &gold.tokens, &oracle, &LexiconSet::new(), &cfg).unwrap();
        assert_eq!(trace.tagger_calls(), 0);
    }

    #[test]
    fn threshold_one_drops_remotes() {
        let gold = fixtures::scenes_and_link();
        let oracle = OracleTagger::new([&gold]);
        let cfg = DecoderConfig {
            remote_threshold: 1.0,
            ..DecoderConfig::default()
        };
        let (pred, _) = parse(&gold.passage_id, &gold.tokens, &oracle, &LexiconSet::new(), &cfg).unwrap();
        assert!(pred.edges.iter().all(|e| !e.remote));
    }

    #[test]
    fn masks_match_focus_in_trace() {
        let gold = fixtures::nested_scenes();
        let oracle = OracleTagger::new([&gold]);
        let (_, trace) = parse(&gold.passage_id, &gold.tokens, &oracle, &LexiconSet::new(), &DecoderConfig::default()).unwrap();
        for step in &trace.steps {
            for (i, m) in step.mask.iter().enumerate() {
                let inside = step.focus.0 <= i && i < step.focus.1;
                assert_eq!(*m != MaskSymbol::O, inside);
            }
        }
        let text = trace.to_string();
        assert_eq!(text.lines().filter(|l| l.starts_with("depth=")).count(), trace.steps.len());
    }

    #[test]
    fn errors() {
        let cfg = DecoderConfig::default();
        assert!(matches!(parse("x", &[], &AllO, &LexiconSet::new(), &cfg), Err(ParseError::Empty)));
        let bad = DecoderConfig {
            remote_threshold: 1.5,
            ..DecoderConfig::default()
        };
        assert!(matches!(parse("x", &toks(&["NOUN"]), &AllO, &LexiconSet::new(), &bad), Err(ParseError::Config(_))));
        let oracle = OracleTagger::new(&[] as &[Passage]);
        assert!(matches!(
            parse("x", &toks(&["NOUN", "NOUN"]), &oracle, &LexiconSet::new(), &cfg),
            Err(ParseError::Tagger(TaggerError::UnknownPassage(_)))
        ));
    }

    #[test]
    fn batch_preserves_order_and_matches_sequential() {
        let corpus = fixtures::oracle_corpus(2, 5);
        let oracle = OracleTagger::new(&corpus);
        let inputs: Vec<TokenSentence> = corpus
            .iter()
            .map(|p| TokenSentence {
                id: p.passage_id.clone(),
                tokens: p.tokens.clone(),
            })
            .collect();
        let cfg = DecoderConfig::default();
        let batch = parse_batch(&inputs, &oracle, &LexiconSet::new(), &cfg);
        assert_eq!(batch.len(), inputs.len());
        for (r, s) in batch.iter().zip(&inputs) {
            let seq = parse(&s.id, &s.tokens, &oracle, &LexiconSet::new(), &cfg).unwrap();
            assert_eq!(r.as_ref().unwrap(), &seq);
        }
        assert!(parse_batch(&[], &oracle, &LexiconSet::new(), &cfg).is_empty());
    }
}
