//! Tree-pattern evaluation over documents and the tuple wire format.

mod tuple;
mod twig;
mod wire;

use std::collections::BTreeSet;

pub use tuple::{Cell, Tuple};
pub use twig::{finish, has_keyword_below, match_below, match_many, match_pattern, match_targets, Context};
pub use wire::{decode_tuple, encode_tuple, into_batches, TupleBatch, DEFAULT_BATCH_BYTES, DEFAULT_BATCH_TUPLES};

use crate::xml::{tokens, Document, NodeKind};

/// Distinct element and attribute names plus distinct text tokens.
pub fn doc_keys(d: &Document) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = BTreeSet::new();
    for n in d.nodes() {
        match n.kind() {
            NodeKind::Element | NodeKind::Attribute => {
                if !out.contains(n.label()) {
                    out.insert(n.label().to_string());
                }
            }
            NodeKind::Text => {
                for t in tokens(n.label()) {
                    if !out.contains(t) {
                        out.insert(t.to_string());
                    }
                }
            }
        }
    }
    out
}
