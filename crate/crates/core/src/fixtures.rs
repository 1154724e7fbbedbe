//! Hand-built and randomly generated passages for tests and demos.
//!
//! Generated passages are always valid, BIO-representable at every node and
//! compatible with the decoding constraints: every scene contains a verb and
//! exactly one process or state, there are no unary non-terminals, and remote
//! children lie outside their parent's yield and are never scenes themselves.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Category, Edge, Head, Node, NodeId, Passage, TokenRow};

fn token(form: &str, upos: &str, deprel: &str, head: Option<Head>) -> TokenRow {
    let mut row = TokenRow::new(form, upos, "en");
    row.deprel = deprel.to_owned();
    row.head = head;
    row
}

fn assemble(id: &str, tokens: Vec<TokenRow>, non_terminals: u32, edges: &[(u32, u32, Category, bool)]) -> Passage {
    let n = tokens.len() as u32;
    let mut nodes = vec![Node::non_terminal(NodeId(0))];
    nodes.extend((0..n).map(|i| Node::terminal(NodeId(i + 1), i as usize)));
    nodes.extend((0..non_terminals).map(|i| Node::non_terminal(NodeId(n + 1 + i))));
    let edges = edges
        .iter()
        .map(|&(p, c, cat, remote)| Edge {
            parent: NodeId(p),
            child: NodeId(c),
            category: cat,
            remote,
        })
        .collect();
    Passage {
        passage_id: id.to_owned(),
        language: "en".to_owned(),
        tokens,
        nodes,
        edges,
        root: NodeId(0),
    }
}

/// `Go` as a one-token scene: root -H-> terminal.
pub fn single_token() -> Passage {
    assemble(
        "single",
        vec![token("Go", "VERB", "root", Some(Head::Root))],
        0,
        &[(0, 1, Category::H, false)],
    )
}

/// "She plays guitar and then sings songs": two scenes joined by a linker,
/// the second scene sharing its participant with the first through a remote edge.
///
/// Terminals are n1..n7 (positions 0..6), scenes are n8 and n9.
pub fn scenes_and_link() -> Passage {
    use Category::*;
    let tokens = vec![
        token("She", "PRON", "nsubj", Some(Head::Token(1))),
        token("plays", "VERB", "root", Some(Head::Root)),
        token("guitar", "NOUN", "obj", Some(Head::Token(1))),
        token("and", "CCONJ", "cc", Some(Head::Token(5))),
        token("then", "ADV", "advmod", Some(Head::Token(5))),
        token("sings", "VERB", "conj", Some(Head::Token(1))),
        token("songs", "NOUN", "obj", Some(Head::Token(5))),
    ];
    assemble(
        "scenes-and-link",
        tokens,
        2,
        &[
            (0, 8, H, false),
            (0, 4, L, false),
            (0, 9, H, false),
            (8, 1, A, false),
            (8, 2, P, false),
            (8, 3, A, false),
            (9, 5, D, false),
            (9, 6, P, false),
            (9, 7, A, false),
            (9, 1, A, true),
        ],
    )
}

/// "My older sister plays the guitar and he sings very loudly":
/// root, two scenes and three inner units (n12..n16).
pub fn nested_scenes() -> Passage {
    use Category::*;
    let tokens = vec![
        token("My", "PRON", "nmod:poss", Some(Head::Token(2))),
        token("older", "ADJ", "amod", Some(Head::Token(2))),
        token("sister", "NOUN", "nsubj", Some(Head::Token(3))),
        token("plays", "VERB", "root", Some(Head::Root)),
        token("the", "DET", "det", Some(Head::Token(5))),
        token("guitar", "NOUN", "obj", Some(Head::Token(3))),
        token("and", "CCONJ", "cc", Some(Head::Token(8))),
        token("he", "PRON", "nsubj", Some(Head::Token(8))),
        token("sings", "VERB", "conj", Some(Head::Token(3))),
        token("very", "ADV", "advmod", Some(Head::Token(10))),
        token("loudly", "ADV", "advmod", Some(Head::Token(8))),
    ];
    assemble(
        "nested-scenes",
        tokens,
        5,
        &[
            (0, 12, H, false),
            (0, 7, L, false),
            (0, 15, H, false),
            (12, 13, A, false),
            (12, 4, P, false),
            (12, 14, A, false),
            (13, 1, E, false),
            (13, 2, E, false),
            (13, 3, C, false),
            (14, 5, E, false),
            (14, 6, C, false),
            (15, 8, A, false),
            (15, 9, P, false),
            (15, 16, D, false),
            (16, 10, E, false),
            (16, 11, C, false),
        ],
    )
}

/// "The man slept and cats ran": two scenes under a linker, the first with a
/// two-token participant. Non-terminals: root, n7, n8, n9.
pub fn scenes_with_unit() -> Passage {
    use Category::*;
    let tokens = vec![
        token("The", "DET", "det", Some(Head::Token(1))),
        token("man", "NOUN", "nsubj", Some(Head::Token(2))),
        token("slept", "VERB", "root", Some(Head::Root)),
        token("and", "CCONJ", "cc", Some(Head::Token(5))),
        token("cats", "NOUN", "nsubj", Some(Head::Token(5))),
        token("ran", "VERB", "conj", Some(Head::Token(2))),
    ];
    assemble(
        "scenes-with-unit",
        tokens,
        3,
        &[
            (0, 7, H, false),
            (0, 4, L, false),
            (0, 9, H, false),
            (7, 8, A, false),
            (7, 3, P, false),
            (8, 1, F, false),
            (8, 2, C, false),
            (9, 5, A, false),
            (9, 6, P, false),
        ],
    )
}

/// "gave it up": a process unit whose yield {0, 2} skips the participant.
pub fn discontiguous() -> Passage {
    use Category::*;
    let tokens = vec![
        token("gave", "VERB", "root", Some(Head::Root)),
        token("it", "PRON", "obj", Some(Head::Token(0))),
        token("up", "ADP", "compound:prt", Some(Head::Token(0))),
    ];
    assemble(
        "discontiguous",
        tokens,
        1,
        &[(0, 4, P, false), (0, 2, A, false), (4, 1, C, false), (4, 3, F, false)],
    )
}

const NOUNS: &[&str] = &["guitar", "song", "house", "dog", "city", "letter", "river", "book", "car", "garden"];
const VERBS: &[&str] = &["plays", "sings", "runs", "sees", "writes", "is", "reads", "builds", "likes", "walks"];
const ADJS: &[&str] = &["old", "red", "quiet", "small", "happy"];
const ADVS: &[&str] = &["very", "then", "often", "slowly", "here"];
const DETS: &[&str] = &["the", "a", "this", "every"];
const PRONS: &[&str] = &["she", "he", "they", "it", "we"];
const ADPS: &[&str] = &["in", "front", "of", "at", "least", "on", "with"];
const LINKS: &[&str] = &["and", "but", "because", "while"];

/// Options for [`random_passage`].
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub language: String,
    pub remote_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            min_len: 1,
            max_len: 12,
            language: "en".to_owned(),
            remote_probability: 0.4,
        }
    }
}

struct Builder<'a, R> {
    rng: &'a mut R,
    next_id: u32,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    /// Category assigned to each token position while building.
    roles: Vec<Option<Category>>,
    /// Positions that must carry a verb.
    verbs: BTreeSet<usize>,
    scenes: Vec<(NodeId, usize, usize)>,
    /// Non-scene units and terminals: the possible remote targets.
    spans: Vec<(NodeId, usize, usize)>,
}

impl<R: Rng> Builder<'_, R> {
    fn fresh(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn partition(&mut self, start: usize, end: usize, min_parts: usize) -> Vec<(usize, usize)> {
        let len = end - start;
        let parts = if len <= 1 {
            1
        } else {
            self.rng.gen_range(min_parts.min(len)..=len.min(4))
        };
        let mut cuts: Vec<usize> = (start + 1..end).collect();
        cuts.shuffle(self.rng);
        let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
        cuts.sort_unstable();
        let mut bounds = vec![start];
        bounds.extend(cuts);
        bounds.push(end);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }

    fn attach(&mut self, parent: NodeId, start: usize, end: usize, category: Category) {
        if end - start == 1 {
            let id = self.fresh();
            self.nodes.push(Node::terminal(id, start));
            self.edges.push(Edge::primary(parent, id, category));
            self.roles[start] = Some(category);
            self.spans.push((id, start, end));
            return;
        }
        let id = self.fresh();
        self.nodes.push(Node::non_terminal(id));
        self.edges.push(Edge::primary(parent, id, category));
        if category == Category::H {
            self.scenes.push((id, start, end));
            self.scene_children(id, start, end);
        } else {
            self.spans.push((id, start, end));
            self.unit_children(id, start, end);
        }
    }

    fn scene_children(&mut self, parent: NodeId, start: usize, end: usize) {
        let parts = self.partition(start, end, 2);
        let relation = self.rng.gen_range(0..parts.len());
        for (i, &(s, e)) in parts.iter().enumerate() {
            let cat = if i == relation {
                self.verbs.insert(s);
                if self.rng.gen_bool(0.8) {
                    Category::P
                } else {
                    Category::S
                }
            } else {
                *[Category::A, Category::A, Category::D, Category::F, Category::G]
                    .choose(self.rng)
                    .unwrap()
            };
            self.attach(parent, s, e, cat);
        }
    }

    fn unit_children(&mut self, parent: NodeId, start: usize, end: usize) {
        let parts = self.partition(start, end, 2);
        let center = self.rng.gen_range(0..parts.len());
        for (i, &(s, e)) in parts.iter().enumerate() {
            let cat = if i == center {
                Category::C
            } else {
                *[Category::E, Category::E, Category::F, Category::R, Category::N, Category::D]
                    .choose(self.rng)
                    .unwrap()
            };
            self.attach(parent, s, e, cat);
        }
    }
}

fn yields_disjoint(a: (usize, usize), b: (usize, usize)) -> bool {
    a.1 <= b.0 || b.1 <= a.0
}

/// Generates one valid, representable, constraint-compatible passage.
pub fn random_passage<R: Rng>(rng: &mut R, id: &str, cfg: &GeneratorConfig) -> Passage {
    let n = rng.gen_range(cfg.min_len.max(1)..=cfg.max_len.max(cfg.min_len.max(1)));
    let mut b = Builder {
        rng,
        next_id: 1,
        nodes: vec![Node::non_terminal(NodeId(0))],
        edges: Vec::new(),
        roles: vec![None; n],
        verbs: BTreeSet::new(),
        scenes: Vec::new(),
        spans: Vec::new(),
    };
    let root = NodeId(0);
    let mut links = BTreeSet::new();
    if n == 1 {
        let cat = if b.rng.gen_bool(0.5) { Category::H } else { Category::P };
        b.verbs.insert(0);
        b.attach(root, 0, 1, cat);
    } else if n >= 5 && b.rng.gen_bool(0.6) {
        // H (L H)+ with optional trailing punctuation
        let punct = n >= 6 && b.rng.gen_bool(0.3);
        let body = if punct { n - 1 } else { n };
        let max_scenes = ((body + 1) / 3).min(3);
        let scenes = b.rng.gen_range(2..=max_scenes);
        let mut lengths = vec![2usize; scenes];
        let mut remaining = body - (3 * scenes - 1);
        while remaining > 0 {
            let i = b.rng.gen_range(0..scenes);
            lengths[i] += 1;
            remaining -= 1;
        }
        let mut pos = 0;
        for (i, len) in lengths.iter().enumerate() {
            if i > 0 {
                links.insert(pos);
                b.attach(root, pos, pos + 1, Category::L);
                pos += 1;
            }
            b.attach(root, pos, pos + len, Category::H);
            pos += len;
        }
        if punct {
            b.attach(root, pos, pos + 1, Category::U);
        }
    } else {
        b.scene_children(root, 0, n);
    }

    // Remote participants for scenes, pointing outside the scene.
    let scenes = b.scenes.clone();
    for (scene, s, e) in scenes {
        if !b.rng.gen_bool(cfg.remote_probability) {
            continue;
        }
        let candidates: Vec<_> = b
            .spans
            .iter()
            .copied()
            .filter(|&(_, cs, ce)| yields_disjoint((s, e), (cs, ce)))
            .collect();
        if let Some(&(target, _, _)) = candidates.choose(b.rng) {
            b.edges.push(Edge::remote(scene, target, Category::A));
        }
    }

    let tokens = (0..n)
        .map(|i| {
            let (upos, words): (&str, &[&str]) = if b.verbs.contains(&i) {
                ("VERB", VERBS)
            } else if links.contains(&i) {
                ("CCONJ", LINKS)
            } else if b.roles[i] == Some(Category::U) {
                ("PUNCT", &["."])
            } else {
                *[
                    ("NOUN", NOUNS),
                    ("NOUN", NOUNS),
                    ("ADJ", ADJS),
                    ("ADV", ADVS),
                    ("DET", DETS),
                    ("PRON", PRONS),
                    ("ADP", ADPS),
                ]
                .choose(b.rng)
                .unwrap()
            };
            let mut form = (*words.choose(b.rng).unwrap()).to_owned();
            if i == 0 {
                let mut chars = form.chars();
                form = chars
                    .next()
                    .map(|c| c.to_uppercase().chain(chars).collect())
                    .unwrap_or_default();
            }
            let mut row = TokenRow::new(form, upos, cfg.language.clone());
            if upos == "NOUN" {
                let number = if b.rng.gen_bool(0.5) { "Sing" } else { "Plur" };
                row.morph.insert("Number".to_owned(), number.to_owned());
            }
            row.deprel = match upos {
                "VERB" => "root",
                "NOUN" | "PRON" => "nsubj",
                "DET" => "det",
                "ADJ" => "amod",
                "ADV" => "advmod",
                "ADP" => "case",
                "CCONJ" => "cc",
                _ => "punct",
            }
            .to_owned();
            row
        })
        .collect::<Vec<_>>();
    let first_verb = b.verbs.iter().next().copied();
    let tokens = tokens
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.head = match first_verb {
                Some(v) if v == i => Some(Head::Root),
                Some(v) => Some(Head::Token(v)),
                None => Some(Head::Root),
            };
            row
        })
        .collect();

    Passage {
        passage_id: id.to_owned(),
        language: cfg.language.clone(),
        tokens,
        nodes: b.nodes,
        edges: b.edges,
        root,
    }
}

/// `count` generated passages named `{prefix}-{i}`, deterministic in `seed`.
pub fn random_corpus(seed: u64, count: usize, prefix: &str, cfg: &GeneratorConfig) -> Vec<Passage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| random_passage(&mut rng, &format!("{prefix}-{i}"), cfg))
        .collect()
}

/// The hand-built passages plus `generated` random ones.
pub fn oracle_corpus(seed: u64, generated: usize) -> Vec<Passage> {
    let mut corpus = vec![single_token(), scenes_and_link(), nested_scenes(), scenes_with_unit()];
    corpus.extend(random_corpus(seed, generated, "gen", &GeneratorConfig::default()));
    corpus
}
