use std::collections::HashMap;
use std::sync::Arc;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::id::StructuralId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Element,
    Attribute,
    Text,
}

#[derive(Debug, thiserror::Error)]
#[error("xml parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    kind: NodeKind,
    /// Symbol index for elements and attributes, NONE for text.
    sym: u32,
    /// Text content or attribute value.
    text: Option<Box<str>>,
    parent: u32,
    ordinal: u32,
    depth: u32,
    next_sibling: u32,
    /// One past the last descendant in pre-order.
    end: u32,
}

/// An immutable parsed document. Nodes live in a pre-order arena, so arena
/// index order is document order and a subtree is a contiguous range.
#[derive(Debug, Clone)]
pub struct Document {
    uri: Arc<str>,
    nodes: Arc<Vec<Node>>,
    symbols: Arc<Vec<Arc<str>>>,
    symbol_map: Arc<HashMap<Arc<str>, u32>>,
    size_bytes: usize,
}

impl PartialEq for Document {
    fn eq(&self, other: &Self) -> bool {
        self.uri == other.uri && self.root().structurally_eq(&other.root())
    }
}

impl Document {
    pub fn parse(bytes: &[u8], uri: &str) -> Result<Document, ParseError> {
        parse_document(bytes, uri)
    }

    pub fn parse_str(text: &str, uri: &str) -> Result<Document, ParseError> {
        parse_document(text.as_bytes(), uri)
    }

    /// The same content under another uri; the arena is shared.
    pub fn with_uri(&self, uri: &str) -> Document {
        Document { uri: Arc::from(uri), ..self.clone() }
    }

    pub fn uri(&self) -> &str {
        &self.uri
    }

    pub fn uri_arc(&self) -> &Arc<str> {
        &self.uri
    }

    pub fn size_bytes(&self) -> usize {
        self.size_bytes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> XmlNode<'_> {
        XmlNode { doc: self, idx: 0 }
    }

    pub fn node(&self, idx: u32) -> XmlNode<'_> {
        assert!((idx as usize) < self.nodes.len());
        XmlNode { doc: self, idx }
    }

    /// All nodes in document order.
    pub fn nodes(&self) -> impl Iterator<Item = XmlNode<'_>> + '_ {
        (0..self.nodes.len() as u32).map(move |idx| XmlNode { doc: self, idx })
    }

    pub fn symbol(&self, label: &str) -> Option<u32> {
        self.symbol_map.get(label).copied()
    }

    pub fn symbols(&self) -> &[Arc<str>] {
        &self.symbols
    }

    pub fn node_symbol(&self, idx: u32) -> Option<u32> {
        let s = self.nodes[idx as usize].sym;
        (s != NONE).then_some(s)
    }

    pub fn kind_of(&self, idx: u32) -> NodeKind {
        self.nodes[idx as usize].kind
    }

    pub fn parent_of(&self, idx: u32) -> Option<u32> {
        let p = self.nodes[idx as usize].parent;
        (p != NONE).then_some(p)
    }

    pub fn subtree_end(&self, idx: u32) -> u32 {
        self.nodes[idx as usize].end
    }

    pub fn text_of(&self, idx: u32) -> Option<&str> {
        self.nodes[idx as usize].text.as_deref()
    }
}

/// Borrowed handle on one node of a [`Document`].
#[derive(Clone, Copy)]
pub struct XmlNode<'a> {
    doc: &'a Document,
    idx: u32,
}

impl std::fmt::Debug for XmlNode<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}({:?} {})", self.kind(), self.label(), self.id())
    }
}

impl<'a> XmlNode<'a> {
    pub fn document(&self) -> &'a Document {
        self.doc
    }

    pub fn index(&self) -> u32 {
        self.idx
    }

    fn raw(&self) -> &'a Node {
        &self.doc.nodes[self.idx as usize]
    }

    pub fn kind(&self) -> NodeKind {
        self.raw().kind
    }

    /// Element name, `@name` for attributes, the text for text nodes.
    pub fn label(&self) -> &'a str {
        let n = self.raw();
        match n.kind {
            NodeKind::Text => n.text.as_deref().unwrap_or(""),
            _ => &self.doc.symbols[n.sym as usize],
        }
    }

    /// Attribute value, or text content for text nodes.
    pub fn value(&self) -> Option<&'a str> {
        self.raw().text.as_deref()
    }

    pub fn depth(&self) -> u32 {
        self.raw().depth
    }

    pub fn ordinal(&self) -> u32 {
        self.raw().ordinal
    }

    pub fn id(&self) -> StructuralId {
        let mut path = vec![0u32; self.raw().depth as usize];
        let mut cur = self.idx;
        let mut i = path.len();
        while cur != NONE {
            i -= 1;
            let n = &self.doc.nodes[cur as usize];
            path[i] = n.ordinal;
            cur = n.parent;
        }
        StructuralId::new(self.doc.uri.clone(), path)
    }

    pub fn parent(&self) -> Option<XmlNode<'a>> {
        self.doc.parent_of(self.idx).map(|idx| XmlNode { doc: self.doc, idx })
    }

    pub fn children(&self) -> Children<'a> {
        let end = self.raw().end;
        let first = if self.idx + 1 < end { self.idx + 1 } else { NONE };
        Children { doc: self.doc, next: first }
    }

    /// Strict descendants in document order.
    pub fn descendants(&self) -> impl Iterator<Item = XmlNode<'a>> + 'a {
        let doc = self.doc;
        (self.idx + 1..self.raw().end).map(move |idx| XmlNode { doc, idx })
    }

    pub fn is_ancestor_of(&self, other: &XmlNode<'_>) -> bool {
        std::ptr::eq(self.doc, other.doc) && other.idx > self.idx && other.idx < self.raw().end
    }

    /// Concatenation of the text descendants in document order (the node's
    /// own text for text nodes, the value for attributes).
    pub fn string_value(&self) -> String {
        let n = self.raw();
        match n.kind {
            NodeKind::Text | NodeKind::Attribute => n.text.as_deref().unwrap_or("").to_string(),
            NodeKind::Element => {
                let mut s = String::new();
                for d in &self.doc.nodes[self.idx as usize + 1..n.end as usize] {
                    if d.kind == NodeKind::Text {
                        s.push_str(d.text.as_deref().unwrap_or(""));
                    }
                }
                s
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        super::serialize::write_subtree(*self, &mut out);
        out
    }

    /// Same labels, kinds, values and shape (IDs and uri ignored).
    pub fn structurally_eq(&self, other: &XmlNode<'_>) -> bool {
        if self.kind() != other.kind() || self.label() != other.label() || self.value() != other.value() {
            return false;
        }
        let mut a = self.children();
        let mut b = other.children();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if !x.structurally_eq(&y) {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
}

pub struct Children<'a> {
    doc: &'a Document,
    next: u32,
}

impl<'a> Iterator for Children<'a> {
    type Item = XmlNode<'a>;
    fn next(&mut self) -> Option<XmlNode<'a>> {
        if self.next == NONE {
            return None;
        }
        let idx = self.next;
        self.next = self.doc.nodes[idx as usize].next_sibling;
        Some(XmlNode { doc: self.doc, idx })
    }
}

struct Builder {
    nodes: Vec<Node>,
    symbols: Vec<Arc<str>>,
    symbol_map: HashMap<Arc<str>, u32>,
    /// Open elements: (arena index, children so far, last child index).
    open: Vec<(u32, u32, u32)>,
    pending_text: String,
    root_done: bool,
}

impl Builder {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&s) = self.symbol_map.get(label) {
            return s;
        }
        let s = self.symbols.len() as u32;
        let a: Arc<str> = Arc::from(label);
        self.symbols.push(a.clone());
        self.symbol_map.insert(a, s);
        s
    }

    fn add(&mut self, kind: NodeKind, sym: u32, text: Option<Box<str>>) -> u32 {
        let idx = self.nodes.len() as u32;
        let (parent, ordinal, depth) = match self.open.last_mut() {
            Some((p, count, last)) => {
                *count += 1;
                let ord = *count;
                let prev = *last;
                *last = idx;
                let p = *p;
                if prev != NONE {
                    self.nodes[prev as usize].next_sibling = idx;
                }
                (p, ord, self.nodes[p as usize].depth + 1)
            }
            None => (NONE, 1, 1),
        };
        self.nodes.push(Node { kind, sym, text, parent, ordinal, depth, next_sibling: NONE, end: idx + 1 });
        idx
    }

    fn flush_text(&mut self, offset: usize) -> Result<(), ParseError> {
        if self.pending_text.is_empty() {
            return Ok(());
        }
        let text = std::mem::take(&mut self.pending_text);
        if text.chars().all(char::is_whitespace) {
            return Ok(());
        }
        if self.open.is_empty() {
            return Err(ParseError { offset, message: "text outside the root element".into() });
        }
        self.add(NodeKind::Text, NONE, Some(text.into_boxed_str()));
        Ok(())
    }

    fn start(
        &mut self,
        e: &quick_xml::events::BytesStart<'_>,
        offset: usize,
        empty: bool,
    ) -> Result<(), ParseError> {
        self.flush_text(offset)?;
        if self.open.is_empty() && self.root_done {
            return Err(ParseError { offset, message: "more than one root element".into() });
        }
        let err = |m: String| ParseError { offset, message: m };
        let name = std::str::from_utf8(e.name().as_ref()).map_err(|x| err(x.to_string()))?.to_string();
        let mut attrs = Vec::new();
        for a in e.attributes() {
            let a = a.map_err(|x| err(x.to_string()))?;
            let key = std::str::from_utf8(a.key.as_ref()).map_err(|x| err(x.to_string()))?;
            if key == "xmlns" || key.starts_with("xmlns:") {
                continue;
            }
            let value = a.unescape_value().map_err(|x| err(x.to_string()))?;
            attrs.push((format!("@{key}"), value.into_owned()));
        }
        attrs.sort();
        let sym = self.intern(&name);
        let idx = self.add(NodeKind::Element, sym, None);
        self.open.push((idx, 0, NONE));
        for (k, v) in attrs {
            let s = self.intern(&k);
            self.add(NodeKind::Attribute, s, Some(v.into_boxed_str()));
        }
        if empty {
            self.close();
        }
        Ok(())
    }

    fn close(&mut self) {
        let (idx, _, _) = self.open.pop().expect("balanced");
        self.nodes[idx as usize].end = self.nodes.len() as u32;
        if self.open.is_empty() {
            self.root_done = true;
        }
    }
}

/// Parses one document. Node IDs follow a single depth-first pass; attributes
/// come first among an element's children, sorted by name; whitespace-only
/// text is dropped and adjacent text/CDATA pieces merge into one node.
pub fn parse_document(bytes: &[u8], uri: &str) -> Result<Document, ParseError> {
    let mut reader = Reader::from_reader(bytes);
    reader.config_mut().check_end_names = true;
    let mut b = Builder {
        nodes: Vec::new(),
        symbols: Vec::new(),
        symbol_map: HashMap::new(),
        open: Vec::new(),
        pending_text: String::new(),
        root_done: false,
    };
    loop {
        let offset = reader.buffer_position() as usize;
        let ev = reader.read_event().map_err(|e| ParseError {
            offset: reader.error_position() as usize,
            message: e.to_string(),
        })?;
        match ev {
            Event::Start(e) => b.start(&e, offset, false)?,
            Event::Empty(e) => b.start(&e, offset, true)?,
            Event::End(_) => {
                b.flush_text(offset)?;
                if b.open.is_empty() {
                    return Err(ParseError { offset, message: "unbalanced end tag".into() });
                }
                b.close();
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| ParseError { offset, message: e.to_string() })?;
                b.pending_text.push_str(&s);
            }
            Event::CData(t) => {
                let raw = t.into_inner();
                let s = std::str::from_utf8(&raw).map_err(|e| ParseError { offset, message: e.to_string() })?;
                if b.open.is_empty() {
                    return Err(ParseError { offset, message: "CDATA outside the root element".into() });
                }
                b.pending_text.push_str(s);
            }
            Event::Eof => {
                b.flush_text(offset)?;
                if !b.open.is_empty() {
                    return Err(ParseError { offset, message: "unexpected end of input".into() });
                }
                break;
            }
            _ => {}
        }
    }
    if b.nodes.is_empty() {
        return Err(ParseError { offset: bytes.len(), message: "no root element".into() });
    }
    Ok(Document {
        uri: Arc::from(uri),
        nodes: Arc::new(b.nodes),
        symbols: Arc::new(b.symbols),
        symbol_map: Arc::new(b.symbol_map),
        size_bytes: bytes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(d: &Document) -> Vec<(String, Vec<u32>)> {
        d.nodes().map(|n| (n.label().to_string(), n.id().path().to_vec())).collect()
    }

    #[test]
    fn numbering() {
        let d = Document::parse_str("<a><b/></a>", "u").unwrap();
        assert_eq!(ids(&d), vec![("a".into(), vec![1]), ("b".into(), vec![1, 1])]);
        let d = Document::parse_str("<a><b/><c/></a>", "u").unwrap();
        assert_eq!(d.node(2).id().path(), &[1, 2]);
    }

    #[test]
    fn attributes_first_and_sorted() {
        let d = Document::parse_str(r#"<a z="1" b="2"><c/></a>"#, "u").unwrap();
        let labels: Vec<_> = d.root().children().map(|n| n.label().to_string()).collect();
        assert_eq!(labels, ["@b", "@z", "c"]);
        assert_eq!(d.node(3).id().path(), &[1, 3]);
        assert_eq!(d.node(1).value(), Some("2"));
    }

    #[test]
    fn whitespace_dropped_and_entities_decoded() {
        let d = Document::parse_str("<a>\n  <b>x &amp; y</b>\n</a>", "u").unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.root().string_value(), "x & y");
    }

    #[test]
    fn string_value_concatenates() {
        let d = Document::parse_str("<name><first>Serge</first><last>Abiteboul</last></name>", "u").unwrap();
        assert_eq!(d.root().string_value(), "SergeAbiteboul");
        let e = Document::parse_str("<a><b/></a>", "u").unwrap();
        assert_eq!(e.root().string_value(), "");
    }

    #[test]
    fn errors_carry_offsets() {
        for bad in ["<a><b></a>", "<a>", "", "<a/><b/>", "x<a/>", "<a></a></b>"] {
            let e = Document::parse_str(bad, "u").unwrap_err();
            assert!(e.offset <= bad.len(), "{bad}: {e}");
        }
    }

    #[test]
    fn deterministic_ids() {
        let text = "<r><x><y/>t</x><x a='1'/></r>";
        let a = Document::parse_str(text, "u").unwrap();
        let b = Document::parse_str(text, "u").unwrap();
        assert_eq!(
            a.nodes().map(|n| n.id()).collect::<Vec<_>>(),
            b.nodes().map(|n| n.id()).collect::<Vec<_>>()
        );
    }
}
