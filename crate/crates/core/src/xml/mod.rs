//! Document model: Dewey identifiers, parsing, canonical serialization.

mod doc;
mod id;
mod serialize;
mod tokens;

pub use doc::{parse_document, Children, Document, NodeKind, ParseError, XmlNode};
pub use id::{is_ancestor, is_parent, StructuralId};
pub use serialize::{escape_attr, escape_text};
pub use tokens::{contains_token, tokens};
