use super::doc::{NodeKind, XmlNode};

pub fn escape_text(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
}

pub fn escape_attr(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\t' => out.push_str("&#9;"),
            '\r' => out.push_str("&#13;"),
            _ => out.push(c),
        }
    }
}

/// Canonical form: attributes sorted by name (the arena already keeps them
/// sorted), `<x/>` for empty elements, no added whitespace.
pub fn write_subtree(node: XmlNode<'_>, out: &mut String) {
    let doc = node.document();
    match node.kind() {
        NodeKind::Text => return escape_text(node.label(), out),
        NodeKind::Attribute => {
            out.push_str(&node.label()[1..]);
            out.push_str("=\"");
            escape_attr(node.value().unwrap_or(""), out);
            out.push('"');
            return;
        }
        NodeKind::Element => {}
    }
    let start = node.index();
    let end = doc.subtree_end(start);
    // Open elements awaiting their end tag: (subtree end, arena index).
    let mut open: Vec<(u32, u32)> = Vec::new();
    let mut i = start;
    while i < end {
        while let Some(&(e, idx)) = open.last() {
            if e > i {
                break;
            }
            close(doc.node(idx).label(), out);
            open.pop();
        }
        let n = doc.node(i);
        match n.kind() {
            NodeKind::Text => {
                escape_text(n.label(), out);
                i += 1;
            }
            NodeKind::Attribute => unreachable!("attributes are written with their element"),
            NodeKind::Element => {
                out.push('<');
                out.push_str(n.label());
                let e = doc.subtree_end(i);
                let mut j = i + 1;
                while j < e && doc.kind_of(j) == NodeKind::Attribute {
                    out.push(' ');
                    write_subtree(doc.node(j), out);
                    j += 1;
                }
                if j < e {
                    out.push('>');
                    open.push((e, i));
                } else {
                    out.push_str("/>");
                }
                i = j;
            }
        }
    }
    while let Some((_, idx)) = open.pop() {
        close(doc.node(idx).label(), out);
    }
}

fn close(label: &str, out: &mut String) {
    out.push_str("</");
    out.push_str(label);
    out.push('>');
}

#[cfg(test)]
mod tests {
    use crate::xml::Document;

    #[test]
    fn canonical_forms() {
        let d = Document::parse_str("<b/>", "u").unwrap();
        assert_eq!(d.root().serialize(), "<b/>");
        let d = Document::parse_str("<a y='2' x=\"1\">\n <b>t&lt;</b><c></c></a>", "u").unwrap();
        assert_eq!(d.root().serialize(), r#"<a x="1" y="2"><b>t&lt;</b><c/></a>"#);
        assert_eq!(d.node(3).serialize(), "<b>t&lt;</b>");
    }
}
