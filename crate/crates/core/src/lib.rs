//! Recursive UCCA parsing with a masked sequence tagger.
//!
//! A sentence is parsed top-down: the tagger labels the children of the
//! current focus node as BIO spans, the spans are decoded under structural
//! constraints, and every multi-token child is parsed again with an input
//! mask marking its span and arc category.

pub mod bio;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod features;
pub mod lexicon;
pub mod parser;
pub mod pipeline;
pub mod tagger;
pub mod tune;

pub use bio::{BioLabel, ChildSpan, TagDistribution};
pub use corpus::{MaskSymbol, MaskedExample};
pub use graph::{Category, Edge, Head, Node, NodeId, Passage, TokenRow};
pub use lexicon::{ExpressionLexicon, LexiconSet, MweMask};
