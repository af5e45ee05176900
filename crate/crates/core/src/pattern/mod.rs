//! Annotated (joined) tree patterns: the shared form of views and queries.

mod dialect;
mod embed;
mod literal;
mod paths;
mod tree;
mod view;

pub use dialect::{parse_dialect, parse_query, DialectError, ParsedQuery, ReturnItem, ReturnTemplate};
pub use embed::{embed, embeddings, is_valid_embedding, Embedding};
pub use literal::{jp, parse_literal, to_literal, tp, LiteralError};
pub use paths::{
    annotated_labels, height, labels, leaf_count, leaf_paths, path_key, return_paths, sub_paths, subsequences, LabelPath,
};
pub use tree::{
    Annotation, Annotations, Axis, Column, JoinedTreePattern, NodeRef, NodeTest, PNode, PatternError, PatternNode, TreePattern,
};
pub use view::{decode_pattern, encode_pattern, ViewDefinition};
