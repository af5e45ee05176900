//! Parser for the FLWR view/query dialect:
//!
//! ```text
//! for $x in doc("uri")//a/b[c], $y in $x//d
//! where $y = 'const' and $x = $z
//! return <r><l1>{id($x)}</l1><l2>{string($y)}</l2><l3>{$y}</l3></r>
//! ```

use std::collections::HashMap;

use super::tree::*;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DialectError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("undeclared variable ${0}")]
    Undeclared(String),
    #[error("variable ${0} declared twice")]
    Redeclared(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(String),
    Str(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, DialectError> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syms = ["</", "//", "/", "[", "]", "(", ")", "{", "}", ",", "=", "<", ">", ".", "@"];
    'outer: while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'$' || c.is_ascii_alphabetic() || c == b'_' || c >= 0x80 {
            let start = i;
            if c == b'$' {
                i += 1;
            }
            let body = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b"_-:".contains(&b[i]) || b[i] >= 0x80) {
                i += 1;
            }
            if i == body {
                return Err(DialectError::Syntax { pos: start, msg: "empty variable name".into() });
            }
            let s = src[body..i].to_string();
            out.push((if c == b'$' { Tok::Var(s) } else { Tok::Name(s) }, start));
            continue;
        }
        if c == b'"' || c == b'\'' || c == b'`' {
            let close = if c == b'`' { b'\'' } else { c };
            let start = i;
            i += 1;
            let body = i;
            while i < b.len() && b[i] != close {
                i += 1;
            }
            if i >= b.len() {
                return Err(DialectError::Syntax { pos: start, msg: "unterminated string".into() });
            }
            out.push((Tok::Str(src[body..i].to_string()), start));
            i += 1;
            continue;
        }
        for s in syms {
            if src[i..].starts_with(s) {
                out.push((Tok::Sym(s), i));
                i += s.len();
                continue 'outer;
            }
        }
        return Err(DialectError::Syntax { pos: i, msg: format!("unexpected character `{}`", c as char) });
    }
    Ok(out)
}

/// One `{...}` item of the return template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnItem {
    pub element: String,
    pub node: NodeRef,
    pub ann: Annotation,
}

/// Return-clause element names, kept only for final result tagging.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReturnTemplate {
    pub element: String,
    pub items: Vec<ReturnItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuery {
    pub pattern: JoinedTreePattern,
    pub template: ReturnTemplate,
    /// `doc(uri)` of each component, for information only.
    pub uris: Vec<String>,
    pub variables: Vec<(String, NodeRef)>,
}

/// Mutable recursive tree under construction.
struct Comp {
    axis: Axis,
}

#[derive(Clone)]
struct Build {
    node: PatternNode,
    kids: Vec<(Axis, usize)>,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
    /// Flat node storage; tree shape kept through `kids`.
    nodes: Vec<Build>,
    comps: Vec<(Comp, usize)>,
    vars: HashMap<String, usize>,
    var_order: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn at(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.len)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DialectError> {
        Err(DialectError::Syntax { pos: self.at(), msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(x)) if x == s)
    }

    fn sym(&mut self, s: &str) -> Result<(), DialectError> {
        if self.is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn kw(&mut self, s: &str) -> Result<(), DialectError> {
        if self.is_kw(s) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn name(&mut self) -> Result<String, DialectError> {
        match self.peek().cloned() {
            Some(Tok::Name(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a name"),
        }
    }

    fn var(&mut self) -> Result<String, DialectError> {
        match self.peek().cloned() {
            Some(Tok::Var(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a variable"),
        }
    }

    fn string(&mut self) -> Result<String, DialectError> {
        match self.peek().cloned() {
            Some(Tok::Str(n)) => {
                self.pos += 1;
                Ok(n)
            }
            _ => self.err("expected a string literal"),
        }
    }

    fn lookup(&self, v: &str) -> Result<usize, DialectError> {
        self.vars.get(v).copied().ok_or_else(|| DialectError::Undeclared(v.to_string()))
    }

    fn new_node(&mut self, n: PatternNode) -> usize {
        self.nodes.push(Build { node: n, kids: Vec::new() });
        self.nodes.len() - 1
    }

    fn axis(&mut self) -> Option<Axis> {
        if self.is_sym("//") {
            self.pos += 1;
            Some(Axis::Descendant)
        } else if self.is_sym("/") {
            self.pos += 1;
            Some(Axis::Child)
        } else {
            None
        }
    }

    fn nametest(&mut self) -> Result<String, DialectError> {
        if self.is_sym("@") {
            self.pos += 1;
            return Ok(format!("@{}", self.name()?));
        }
        self.name()
    }

    /// Parses steps, attaching the first one under `parent` (or as a
    /// component root when `parent` is None). Returns the last step's node.
    fn steps(&mut self, parent: Option<usize>, first_axis: Axis, comp: usize) -> Result<usize, DialectError> {
        let mut cur = parent;
        let mut axis = first_axis;
        loop {
            let label = self.nametest()?;
            let n = self.new_node(PatternNode::new(label));
            match cur {
                Some(p) => self.nodes[p].kids.push((axis, n)),
                None => {
                    self.comps[comp].0.axis = axis;
                    self.comps[comp].1 = n;
                }
            }
            while self.is_sym("[") {
                self.pos += 1;
                self.predicate(n, comp)?;
                self.sym("]")?;
            }
            cur = Some(n);
            match self.axis() {
                Some(a) => axis = a,
                None => return Ok(n),
            }
        }
    }

    fn predicate(&mut self, n: usize, comp: usize) -> Result<(), DialectError> {
        if self.is_kw("contains") {
            self.pos += 1;
            self.sym("(")?;
            self.sym(".")?;
            self.sym(",")?;
            let w = self.string()?;
            self.sym(")")?;
            let k = self.new_node(PatternNode::keyword(w));
            self.nodes[n].kids.push((Axis::Descendant, k));
            return Ok(());
        }
        let mut target = n;
        if self.is_sym(".") {
            self.pos += 1;
            if let Some(a) = self.axis() {
                target = self.steps(Some(n), a, comp)?;
            }
        } else {
            let a = self.axis().unwrap_or(Axis::Child);
            target = self.steps(Some(n), a, comp)?;
        }
        if self.is_sym("=") {
            self.pos += 1;
            let c = self.string()?;
            self.nodes[target].node.value_predicate = Some(c);
        }
        Ok(())
    }

    fn binding(&mut self) -> Result<(), DialectError> {
        let v = self.var()?;
        if self.vars.contains_key(&v) {
            return Err(DialectError::Redeclared(v));
        }
        self.kw("in")?;
        let node = if self.is_kw("doc") {
            self.pos += 1;
            self.sym("(")?;
            let _uri = self.string()?;
            self.sym(")")?;
            let axis = match self.axis() {
                Some(a) => a,
                None => return self.err("expected a path after doc(...)"),
            };
            self.comps.push((Comp { axis }, usize::MAX));
            let c = self.comps.len() - 1;
            self.steps(None, axis, c)?
        } else {
            let base = self.var()?;
            let b = self.lookup(&base)?;
            let comp = self.comp_of(b);
            let axis = match self.axis() {
                Some(a) => a,
                None => return self.err("expected a path after the base variable"),
            };
            self.steps(Some(b), axis, comp)?
        };
        self.vars.insert(v.clone(), node);
        self.var_order.push(v);
        Ok(())
    }

    fn comp_of(&self, n: usize) -> usize {
        for (ci, (_, root)) in self.comps.iter().enumerate() {
            if self.reaches(*root, n) {
                return ci;
            }
        }
        unreachable!("every node belongs to a component")
    }

    fn reaches(&self, from: usize, n: usize) -> bool {
        from == n || self.nodes[from].kids.iter().any(|&(_, k)| self.reaches(k, n))
    }

    fn operand(&mut self) -> Result<Operand, DialectError> {
        match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                Ok(Operand::Node(self.lookup(&v)?))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Operand::Const(s))
            }
            Some(Tok::Name(n)) if n == "string" => {
                self.pos += 1;
                self.sym("(")?;
                let v = self.var()?;
                self.sym(")")?;
                Ok(Operand::Node(self.lookup(&v)?))
            }
            _ => self.err("expected a variable or string literal"),
        }
    }

    fn ret_item(&mut self) -> Result<(usize, Annotation), DialectError> {
        self.sym("{")?;
        let r = match self.peek().cloned() {
            Some(Tok::Var(v)) => {
                self.pos += 1;
                (self.lookup(&v)?, Annotation::Cont)
            }
            Some(Tok::Name(f)) if f == "id" || f == "string" => {
                self.pos += 1;
                self.sym("(")?;
                let v = self.var()?;
                self.sym(")")?;
                (self.lookup(&v)?, if f == "id" { Annotation::Id } else { Annotation::Val })
            }
            _ => return self.err("expected $x, id($x) or string($x)"),
        };
        self.sym("}")?;
        Ok(r)
    }
}

enum Operand {
    Node(usize),
    Const(String),
}

/// Parses a dialect query or view into its pattern plus return template.
pub fn parse_query(src: &str) -> Result<ParsedQuery, DialectError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        len: src.len(),
        nodes: Vec::new(),
        comps: Vec::new(),
        vars: HashMap::new(),
        var_order: Vec::new(),
    };
    let mut uris = Vec::new();
    p.kw("for")?;
    loop {
        if let Some(Tok::Str(u)) = p.toks.get(p.pos + 4).map(|t| t.0.clone()) {
            if matches!(p.toks.get(p.pos + 2).map(|t| &t.0), Some(Tok::Name(d)) if d == "doc") {
                uris.push(u);
            }
        }
        p.binding()?;
        if p.is_sym(",") {
            p.pos += 1;
            continue;
        }
        break;
    }
    let mut eqs: Vec<(usize, usize)> = Vec::new();
    if p.is_kw("where") {
        p.pos += 1;
        loop {
            let a = p.operand()?;
            p.sym("=")?;
            let b = p.operand()?;
            match (a, b) {
                (Operand::Node(x), Operand::Node(y)) => eqs.push((x, y)),
                (Operand::Node(x), Operand::Const(c)) | (Operand::Const(c), Operand::Node(x)) => {
                    p.nodes[x].node.value_predicate = Some(c)
                }
                _ => return p.err("comparison between two constants"),
            }
            if p.is_kw("and") {
                p.pos += 1;
                continue;
            }
            break;
        }
    }
    p.kw("return")?;
    p.sym("<")?;
    let element = p.name()?;
    p.sym(">")?;
    let mut raw_items = Vec::new();
    loop {
        if p.is_sym("</") {
            break;
        }
        if p.is_sym("{") {
            let (n, a) = p.ret_item()?;
            raw_items.push((String::new(), n, a));
            continue;
        }
        p.sym("<")?;
        let name = p.name()?;
        p.sym(">")?;
        let (n, a) = p.ret_item()?;
        p.sym("</")?;
        let close = p.name()?;
        if close != name {
            return p.err(format!("mismatched </{close}>"));
        }
        p.sym(">")?;
        raw_items.push((name, n, a));
    }
    p.sym("</")?;
    let close = p.name()?;
    if close != element {
        return p.err(format!("mismatched </{close}>"));
    }
    p.sym(">")?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    for (_, n, a) in &raw_items {
        p.nodes[*n].node.annotations.insert(*a);
    }

    // Materialize components; arena indices follow pre-order.
    let mut map: HashMap<usize, NodeRef> = HashMap::new();
    let mut trees = Vec::new();
    for (ci, (comp, root)) in p.comps.iter().enumerate() {
        fn build(p: &Parser, i: usize, ci: usize, map: &mut HashMap<usize, NodeRef>, ctr: &mut usize) -> PatternNode {
            map.insert(i, NodeRef::new(ci, *ctr));
            *ctr += 1;
            let mut n = p.nodes[i].node.clone();
            for &(ax, k) in &p.nodes[i].kids {
                n.children.push((ax, build(p, k, ci, map, ctr)));
            }
            n
        }
        let mut ctr = 0;
        let root_node = build(&p, *root, ci, &mut map, &mut ctr);
        trees.push(TreePattern::new(comp.axis, root_node));
    }
    let joins = eqs.iter().map(|(a, b)| (map[a], map[b])).collect();
    let pattern = JoinedTreePattern::new(trees, joins).map_err(|e| DialectError::Syntax { pos: 0, msg: e.to_string() })?;
    let template = ReturnTemplate {
        element,
        items: raw_items.into_iter().map(|(e, n, a)| ReturnItem { element: e, node: map[&n], ann: a }).collect(),
    };
    let variables = p.var_order.iter().map(|v| (v.clone(), map[&p.vars[v]])).collect();
    Ok(ParsedQuery { pattern, template, uris, variables })
}

pub fn parse_dialect(src: &str) -> Result<JoinedTreePattern, DialectError> {
    parse_query(src).map(|q| q.pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::literal::jp;

    #[test]
    fn single_node() {
        let j = parse_dialect(r#"for $x in doc("d")//a return <r><i>{id($x)}</i></r>"#).unwrap();
        assert_eq!(j, jp("//a[ID]"));
    }

    #[test]
    fn affiliation_view() {
        let v = parse_query(
            r#"for $p in doc("confs")//confs//paper, $a in $p/affiliation
               return <v1><pid>{id($p)}</pid><aid>{id($a)}</aid><acont>{$a}</acont></v1>"#,
        )
        .unwrap();
        assert_eq!(v.pattern, jp("//confs//paper[ID]/affiliation[ID,cont]"));
        assert_eq!(v.template.element, "v1");
        assert_eq!(v.template.items.len(), 3);
        assert_eq!(v.uris, ["confs"]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_dialect("for $a in $b/x return <r>{$a}</r>").unwrap_err(),
            DialectError::Undeclared("b".into())
        );
        assert!(matches!(parse_dialect("for $a in doc('d')//x return <r>{$a}"), Err(DialectError::Syntax { .. })));
        assert_eq!(
            parse_dialect("for $a in doc('d')//x, $a in doc('d')//y return <r>{$a}</r>").unwrap_err(),
            DialectError::Redeclared("a".into())
        );
    }

    #[test]
    fn predicates_in_steps() {
        let j = parse_dialect(
            "for $b in doc('x')//book[contains(., 'Databases')][year = '2008'], $t in $b/title[. = 'T'] return <r>{string($t)}</r>",
        )
        .unwrap();
        assert_eq!(j, jp("//book[contains(.,'Databases')][year[='2008']]/title[val][='T']"));
    }
}
