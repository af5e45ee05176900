//! Compact pattern literals, e.g. `//book[ID]/title[val]` or
//! `//a[ID]$x//b; //c$y[val]; $x=$y`.
//!
//! A step is `name[annots]$tag[pred]...` followed by an optional `/` or `//`
//! continuation. Predicates are `[='c']`, `[contains(.,'w')]` or a relative
//! branch such as `[author[ID]]` or `[//last[val]]`. A bracket holding only
//! `ID`, `val`, `cont` is an annotation list; write `[/ID]` for a child
//! element named `ID`.

use std::collections::HashMap;

use super::tree::*;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("pattern literal error at {pos}: {msg}")]
pub struct LiteralError {
    pub pos: usize,
    pub msg: String,
}

struct P<'a> {
    s: &'a [u8],
    src: &'a str,
    pos: usize,
    tags: HashMap<String, NodeRef>,
    pattern: usize,
    next_node: usize,
}

fn is_name_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'-' || c == b':' || c >= 0x80
}

impl<'a> P<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LiteralError> {
        Err(LiteralError { pos: self.pos, msg: msg.into() })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, t: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(t) {
            self.pos += t.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &str) -> Result<(), LiteralError> {
        if self.eat(t) {
            Ok(())
        } else {
            self.err(format!("expected `{t}`"))
        }
    }

    fn name(&mut self) -> Result<String, LiteralError> {
        self.ws();
        let start = self.pos;
        if self.s.get(self.pos) == Some(&b'@') {
            self.pos += 1;
        }
        let body = self.pos;
        while self.pos < self.s.len() && is_name_char(self.s[self.pos]) {
            self.pos += 1;
        }
        if self.pos == body {
            return self.err("expected a name");
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn quoted(&mut self) -> Result<String, LiteralError> {
        self.ws();
        let q = match self.s.get(self.pos) {
            Some(&c @ (b'\'' | b'"')) => c,
            _ => return self.err("expected a quoted string"),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != q {
            self.pos += 1;
        }
        if self.pos >= self.s.len() {
            return self.err("unterminated string");
        }
        let v = self.src[start..self.pos].to_string();
        self.pos += 1;
        Ok(v)
    }

    fn axis(&mut self) -> Option<Axis> {
        if self.eat("//") {
            Some(Axis::Descendant)
        } else if self.eat("/") {
            Some(Axis::Child)
        } else {
            None
        }
    }

    /// Tries to read `[ID,val]`; restores position otherwise.
    fn annotations(&mut self) -> Option<Annotations> {
        let save = self.pos;
        if !self.eat("[") {
            return None;
        }
        let mut a = Annotations::NONE;
        loop {
            self.ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphabetic() {
                self.pos += 1;
            }
            match Annotation::parse(&self.src[start..self.pos]) {
                Some(x) => a.insert(x),
                None => {
                    self.pos = save;
                    return None;
                }
            }
            if self.eat(",") {
                continue;
            }
            if self.eat("]") {
                return Some(a);
            }
            self.pos = save;
            return None;
        }
    }

    fn step(&mut self) -> Result<PatternNode, LiteralError> {
        let label = self.name()?;
        let my = NodeRef::new(self.pattern, self.next_node);
        self.next_node += 1;
        let mut node = PatternNode::new(label);
        let mut branches: Vec<(Axis, PatternNode)> = Vec::new();
        loop {
            if let Some(a) = self.annotations() {
                node.annotations = node.annotations.union(a);
                continue;
            }
            if self.peek() == Some(b'$') {
                self.pos += 1;
                let t = self.name()?;
                if self.tags.insert(t.clone(), my).is_some() {
                    return self.err(format!("duplicate tag ${t}"));
                }
                continue;
            }
            if self.peek() == Some(b'[') {
                self.pos += 1;
                if self.eat("=") {
                    node.value_predicate = Some(self.quoted()?);
                    self.expect("]")?;
                } else if self.eat("contains") {
                    self.expect("(")?;
                    self.expect(".")?;
                    self.expect(",")?;
                    let w = self.quoted()?;
                    self.expect(")")?;
                    self.expect("]")?;
                    self.next_node += 1;
                    branches.push((Axis::Descendant, PatternNode::keyword(w)));
                } else {
                    self.eat(".");
                    let axis = self.axis().unwrap_or(Axis::Child);
                    let c = self.step()?;
                    self.expect("]")?;
                    branches.push((axis, c));
                }
                continue;
            }
            break;
        }
        let save = self.pos;
        if let Some(axis) = self.axis() {
            if matches!(self.peek(), Some(c) if is_name_char(c) || c == b'@') {
                let c = self.step()?;
                branches.push((axis, c));
            } else {
                self.pos = save;
            }
        }
        node.children = branches;
        Ok(node)
    }
}

pub fn parse_literal(src: &str) -> Result<JoinedTreePattern, LiteralError> {
    let mut p = P { s: src.as_bytes(), src, pos: 0, tags: HashMap::new(), pattern: 0, next_node: 0 };
    let mut trees = Vec::new();
    let mut join_names: Vec<(String, String, usize)> = Vec::new();
    loop {
        match p.peek() {
            Some(b'$') => loop {
                let at = p.pos;
                p.expect("$")?;
                let a = p.name()?;
                p.expect("=")?;
                p.expect("$")?;
                let b = p.name()?;
                join_names.push((a, b, at));
                if !p.eat(",") {
                    break;
                }
            },
            Some(b'/') => {
                let axis = p.axis().unwrap();
                p.next_node = 0;
                let root = p.step()?;
                trees.push(TreePattern::new(axis, root));
                p.pattern += 1;
            }
            _ => return p.err("expected `/`, `//` or `$`"),
        }
        if p.eat(";") {
            continue;
        }
        if p.peek().is_none() {
            break;
        }
        return p.err("unexpected input");
    }
    let mut joins = Vec::new();
    for (a, b, at) in join_names {
        let ra = p.tags.get(&a).copied();
        let rb = p.tags.get(&b).copied();
        match (ra, rb) {
            (Some(x), Some(y)) => joins.push((x, y)),
            _ => return Err(LiteralError { pos: at, msg: "unknown tag in join".into() }),
        }
    }
    JoinedTreePattern::new(trees, joins).map_err(|e| LiteralError { pos: src.len(), msg: e.to_string() })
}

/// Single tree pattern literal; panics on a syntax error or a joined literal.
pub fn tp(src: &str) -> TreePattern {
    let j = parse_literal(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    assert_eq!(j.patterns().len(), 1, "{src}: expected one tree");
    j.patterns()[0].clone()
}

/// Joined pattern literal; panics on a syntax error.
pub fn jp(src: &str) -> JoinedTreePattern {
    parse_literal(src).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn quote(s: &str, out: &mut String) {
    if s.contains('\'') {
        out.push('"');
        out.push_str(s);
        out.push('"');
    } else {
        out.push('\'');
        out.push_str(s);
        out.push('\'');
    }
}

fn write_node(t: &TreePattern, i: usize, tags: &HashMap<usize, String>, out: &mut String) {
    let n = t.node(i);
    out.push_str(&n.label);
    if !n.annotations.is_empty() {
        let v: Vec<_> = n.annotations.iter().map(|a| a.as_str()).collect();
        out.push('[');
        out.push_str(&v.join(","));
        out.push(']');
    }
    if let Some(tag) = tags.get(&i) {
        out.push('$');
        out.push_str(tag);
    }
    if let Some(c) = &n.value_predicate {
        out.push_str("[=");
        quote(c, out);
        out.push(']');
    }
    let kids = &n.children;
    for (k, &c) in kids.iter().enumerate() {
        let cn = t.node(c);
        let last = k + 1 == kids.len();
        if cn.test == NodeTest::Keyword {
            out.push_str("[contains(.,");
            quote(&cn.label, out);
            out.push_str(")]");
        } else if last {
            out.push_str(cn.axis.as_str());
            write_node(t, c, tags, out);
        } else {
            out.push('[');
            if cn.axis == Axis::Descendant || Annotation::parse(&cn.label).is_some() || cn.label == "contains" {
                out.push_str(cn.axis.as_str());
            }
            write_node(t, c, tags, out);
            out.push(']');
        }
    }
}

/// Inverse of [`parse_literal`] up to whitespace and tag names.
pub fn to_literal(j: &JoinedTreePattern) -> String {
    let mut tags: Vec<HashMap<usize, String>> = vec![HashMap::new(); j.patterns().len()];
    let mut names = HashMap::new();
    for &(a, b) in j.joins() {
        for r in [a, b] {
            let k = names.len();
            names.entry(r).or_insert_with(|| format!("j{k}"));
        }
    }
    for (r, name) in &names {
        tags[r.pattern].insert(r.node, name.clone());
    }
    let mut parts = Vec::new();
    for (pi, t) in j.patterns().iter().enumerate() {
        let mut s = String::from(t.root_axis().as_str());
        write_node(t, 0, &tags[pi], &mut s);
        parts.push(s);
    }
    if !j.joins().is_empty() {
        let v: Vec<_> = j.joins().iter().map(|(a, b)| format!("${}=${}", names[a], names[b])).collect();
        parts.push(v.join(", "));
    }
    parts.join("; ")
}

impl std::fmt::Display for JoinedTreePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&to_literal(self))
    }
}

impl std::fmt::Display for TreePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&to_literal(&JoinedTreePattern::single(self.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_paths() {
        let t = tp("//book[ID]//title[val]");
        assert_eq!(t.len(), 2);
        assert_eq!(t.root_axis(), Axis::Descendant);
        assert!(t.node(0).annotations.has(Annotation::Id));
        assert_eq!(t.node(1).axis, Axis::Descendant);
        assert!(t.node(1).annotations.has(Annotation::Val));
    }

    #[test]
    fn branches_and_predicates() {
        let t = tp("//book[ID][year[=\"2008\"]][//last[cont]][contains(.,'Databases')]/title[val,ID]");
        let labels: Vec<_> = t.nodes().iter().map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["book", "year", "last", "Databases", "title"]);
        assert_eq!(t.node(1).value_predicate.as_deref(), Some("2008"));
        assert_eq!(t.node(2).axis, Axis::Descendant);
        assert_eq!(t.node(3).test, NodeTest::Keyword);
        assert_eq!(t.node(4).annotations, Annotations::of(&[Annotation::Id, Annotation::Val]));
    }

    #[test]
    fn joins_resolve() {
        let j = jp("//book[ID]/author$x; //paper/author$y[val]; $x=$y");
        assert_eq!(j.joins(), &[(NodeRef::new(0, 1), NodeRef::new(1, 1))]);
    }

    #[test]
    fn printer_roundtrip() {
        for s in [
            "//book[ID]/title[val]",
            "/a[ID,val,cont][b][//c[=\"x'y\"]]/d",
            "//a[/ID[val]]/b",
            "//book[ID][contains(.,'w')]; //paper[author$j1]/year[val]$j0; $j0=$j1",
        ] {
            let a = jp(s);
            let b = jp(&to_literal(&a));
            assert_eq!(a, b, "{s} -> {}", to_literal(&a));
        }
    }

    #[test]
    fn errors() {
        assert!(parse_literal("book").is_err());
        assert!(parse_literal("//a[").is_err());
        assert!(parse_literal("//a; $x=$y").is_err());
    }
}
