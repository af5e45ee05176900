use std::collections::HashSet;
use std::fmt::{self, Write as _};

use crate::pattern::{parse_literal, to_literal, Annotation, JoinedTreePattern, TreePattern};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnInfo {
    pub name: String,
    pub kind: Annotation,
}

impl ColumnInfo {
    pub fn new(name: impl Into<String>, kind: Annotation) -> Self {
        ColumnInfo { name: name.into(), kind }
    }
}

pub type Schema = Vec<ColumnInfo>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Col(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pred {
    Eq(Operand, Operand),
    /// Left is the parent of right.
    Parent(String, String),
    /// Left is a strict ancestor of right.
    Ancestor(String, String),
}

impl Pred {
    pub fn eq_cols(a: &str, b: &str) -> Pred {
        Pred::Eq(Operand::Col(a.into()), Operand::Col(b.into()))
    }

    pub fn eq_const(a: &str, c: &str) -> Pred {
        Pred::Eq(Operand::Col(a.into()), Operand::Const(c.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LogicalPlan {
    /// Tuples of a view; column names are given by `schema`.
    Scan { view: String, schema: Schema },
    Product(Box<LogicalPlan>, Box<LogicalPlan>),
    /// Conjunction of predicates.
    Select { input: Box<LogicalPlan>, preds: Vec<Pred> },
    /// (source column, output name).
    Project { input: Box<LogicalPlan>, cols: Vec<(String, String)> },
    /// Evaluates `pattern` over the fragment in `col`; new columns are
    /// named `{prefix}.{stem}.{attr}`.
    Nav { input: Box<LogicalPlan>, col: String, pattern: TreePattern, prefix: String },
    /// Equi-join on (left column, right column) pairs.
    Join { left: Box<LogicalPlan>, right: Box<LogicalPlan>, on: Vec<(String, String)> },
    DupElim(Box<LogicalPlan>),
    Sort { input: Box<LogicalPlan>, keys: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("unknown column {0}")]
    UnknownColumn(String),
    #[error("duplicate column {0}")]
    DuplicateColumn(String),
    #[error("column {col} has type {found}, expected {expected}")]
    Type { col: String, found: &'static str, expected: &'static str },
    #[error("incomparable columns {0} and {1}")]
    Incomparable(String, String),
    #[error("navigation patterns cannot return ID")]
    NavId,
    #[error("plan text line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn find<'s>(s: &'s Schema, name: &str) -> Result<&'s ColumnInfo, PlanError> {
    s.iter().find(|c| c.name == name).ok_or_else(|| PlanError::UnknownColumn(name.to_string()))
}

fn check_unique(s: &Schema) -> Result<(), PlanError> {
    let mut seen = HashSet::new();
    for c in s {
        if !seen.insert(c.name.as_str()) {
            return Err(PlanError::DuplicateColumn(c.name.clone()));
        }
    }
    Ok(())
}

fn expect_kind(s: &Schema, name: &str, k: Annotation) -> Result<(), PlanError> {
    let c = find(s, name)?;
    if c.kind != k {
        return Err(PlanError::Type { col: name.to_string(), found: c.kind.as_str(), expected: k.as_str() });
    }
    Ok(())
}

fn comparable(a: Annotation, b: Annotation) -> bool {
    (a == Annotation::Id) == (b == Annotation::Id)
}

/// Columns produced by a navigation pattern.
pub fn nav_columns(pattern: &TreePattern, prefix: &str) -> Schema {
    JoinedTreePattern::single(pattern.clone())
        .columns()
        .into_iter()
        .map(|c| ColumnInfo::new(format!("{prefix}.{}", c.name), c.ann))
        .collect()
}

impl LogicalPlan {
    pub fn scan(view: impl Into<String>, schema: Schema) -> Self {
        LogicalPlan::Scan { view: view.into(), schema }
    }

    pub fn product(self, r: LogicalPlan) -> Self {
        LogicalPlan::Product(Box::new(self), Box::new(r))
    }

    pub fn select(self, preds: Vec<Pred>) -> Self {
        LogicalPlan::Select { input: Box::new(self), preds }
    }

    pub fn project(self, cols: Vec<(String, String)>) -> Self {
        LogicalPlan::Project { input: Box::new(self), cols }
    }

    /// Projection keeping names.
    pub fn project_names(self, cols: &[&str]) -> Self {
        self.project(cols.iter().map(|c| (c.to_string(), c.to_string())).collect())
    }

    pub fn nav(self, col: impl Into<String>, pattern: TreePattern, prefix: impl Into<String>) -> Self {
        LogicalPlan::Nav { input: Box::new(self), col: col.into(), pattern, prefix: prefix.into() }
    }

    pub fn join(self, r: LogicalPlan, on: Vec<(String, String)>) -> Self {
        LogicalPlan::Join { left: Box::new(self), right: Box::new(r), on }
    }

    pub fn dup_elim(self) -> Self {
        LogicalPlan::DupElim(Box::new(self))
    }

    pub fn sort(self, keys: Vec<String>) -> Self {
        LogicalPlan::Sort { input: Box::new(self), keys }
    }

    pub fn children(&self) -> Vec<&LogicalPlan> {
        match self {
            LogicalPlan::Scan { .. } => vec![],
            LogicalPlan::Product(l, r) | LogicalPlan::Join { left: l, right: r, .. } => vec![l, r],
            LogicalPlan::Select { input, .. }
            | LogicalPlan::Project { input, .. }
            | LogicalPlan::Nav { input, .. }
            | LogicalPlan::Sort { input, .. }
            | LogicalPlan::DupElim(input) => vec![input],
        }
    }

    /// Views scanned, left to right.
    pub fn views(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn walk<'a>(p: &'a LogicalPlan, out: &mut Vec<&'a str>) {
            if let LogicalPlan::Scan { view, .. } = p {
                out.push(view);
            }
            for c in p.children() {
                walk(c, out);
            }
        }
        walk(self, &mut out);
        out
    }

    /// Output schema; fails on any type or name error.
    pub fn schema(&self) -> Result<Schema, PlanError> {
        let s = match self {
            LogicalPlan::Scan { schema, .. } => schema.clone(),
            LogicalPlan::Product(l, r) => {
                let mut s = l.schema()?;
                s.extend(r.schema()?);
                s
            }
            LogicalPlan::Select { input, preds } => {
                let s = input.schema()?;
                for p in preds {
                    match p {
                        Pred::Eq(a, b) => match (a, b) {
                            (Operand::Col(x), Operand::Col(y)) => {
                                let (cx, cy) = (find(&s, x)?, find(&s, y)?);
                                if !comparable(cx.kind, cy.kind) {
                                    return Err(PlanError::Incomparable(x.clone(), y.clone()));
                                }
                            }
                            (Operand::Col(x), Operand::Const(_)) | (Operand::Const(_), Operand::Col(x)) => {
                                let cx = find(&s, x)?;
                                if cx.kind == Annotation::Id {
                                    return Err(PlanError::Type { col: x.clone(), found: "ID", expected: "val" });
                                }
                            }
                            (Operand::Const(_), Operand::Const(_)) => {}
                        },
                        Pred::Parent(x, y) | Pred::Ancestor(x, y) => {
                            expect_kind(&s, x, Annotation::Id)?;
                            expect_kind(&s, y, Annotation::Id)?;
                        }
                    }
                }
                s
            }
            LogicalPlan::Project { input, cols } => {
                let s = input.schema()?;
                let mut out = Vec::new();
                for (src, name) in cols {
                    out.push(ColumnInfo::new(name.clone(), find(&s, src)?.kind));
                }
                out
            }
            LogicalPlan::Nav { input, col, pattern, prefix } => {
                let mut s = input.schema()?;
                expect_kind(&s, col, Annotation::Cont)?;
                if pattern.nodes().iter().any(|n| n.annotations.has(Annotation::Id)) {
                    return Err(PlanError::NavId);
                }
                s.extend(nav_columns(pattern, prefix));
                s
            }
            LogicalPlan::Join { left, right, on } => {
                let (ls, rs) = (left.schema()?, right.schema()?);
                for (a, b) in on {
                    let (ca, cb) = (find(&ls, a)?, find(&rs, b)?);
                    if !comparable(ca.kind, cb.kind) {
                        return Err(PlanError::Incomparable(a.clone(), b.clone()));
                    }
                }
                let mut s = ls;
                s.extend(rs);
                s
            }
            LogicalPlan::DupElim(input) => input.schema()?,
            LogicalPlan::Sort { input, keys } => {
                let s = input.schema()?;
                for k in keys {
                    find(&s, k)?;
                }
                s
            }
        };
        check_unique(&s)?;
        Ok(s)
    }

    /// Stable text form: one operator per line, children indented by two
    /// spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_text(0, &mut out);
        out
    }

    fn write_text(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        let line = match self {
            LogicalPlan::Scan { view, schema } => {
                let cols: Vec<String> = schema.iter().map(|c| format!("{}:{}", c.name, c.kind.as_str())).collect();
                format!("scan {} [{}]", quote(view), cols.join(" "))
            }
            LogicalPlan::Product(..) => "product".to_string(),
            LogicalPlan::Select { preds, .. } => {
                format!("select {}", preds.iter().map(pred_text).collect::<Vec<_>>().join(" and "))
            }
            LogicalPlan::Project { cols, .. } => {
                let items: Vec<String> =
                    cols.iter().map(|(s, n)| if s == n { s.clone() } else { format!("{s} as {n}") }).collect();
                format!("project {}", items.join(", "))
            }
            LogicalPlan::Nav { col, pattern, prefix, .. } => {
                format!("nav {col} {} as {prefix}", quote(&to_literal(&JoinedTreePattern::single(pattern.clone()))))
            }
            LogicalPlan::Join { on, .. } => {
                format!("join {}", on.iter().map(|(a, b)| format!("{a} = {b}")).collect::<Vec<_>>().join(", "))
            }
            LogicalPlan::DupElim(_) => "dupelim".to_string(),
            LogicalPlan::Sort { keys, .. } => format!("sort {}", keys.join(", ")),
        };
        let _ = writeln!(out, "{pad}{line}");
        for c in self.children() {
            c.write_text(depth + 1, out);
        }
    }

    pub fn from_text(text: &str) -> Result<LogicalPlan, PlanError> {
        let lines: Vec<(usize, usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let indent = l.len() - l.trim_start_matches(' ').len();
                (i + 1, indent / 2, l.trim())
            })
            .collect();
        let mut pos = 0;
        let p = parse_node(&lines, &mut pos, 0)?;
        if pos != lines.len() {
            return Err(PlanError::Syntax { line: lines[pos].0, msg: "trailing operator".into() });
        }
        Ok(p)
    }

    /// Compact algebraic notation, e.g. `π[a](σ[x < y](v1 ⋈[k = k] v2))`.
    pub fn to_algebra(&self) -> String {
        match self {
            LogicalPlan::Scan { view, .. } => view.clone(),
            LogicalPlan::Product(l, r) => format!("({} × {})", l.to_algebra(), r.to_algebra()),
            LogicalPlan::Select { input, preds } => {
                format!("σ[{}]({})", preds.iter().map(pred_text).collect::<Vec<_>>().join(" ∧ "), input.to_algebra())
            }
            LogicalPlan::Project { input, cols } => {
                format!("π[{}]({})", cols.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join(", "), input.to_algebra())
            }
            LogicalPlan::Nav { input, col, pattern, .. } => {
                format!("nav[{col}, {}]({})", to_literal(&JoinedTreePattern::single(pattern.clone())), input.to_algebra())
            }
            LogicalPlan::Join { left, right, on } => format!(
                "({} ⋈[{}] {})",
                left.to_algebra(),
                on.iter().map(|(a, b)| format!("{a} = {b}")).collect::<Vec<_>>().join(", "),
                right.to_algebra()
            ),
            LogicalPlan::DupElim(i) => format!("δ({})", i.to_algebra()),
            LogicalPlan::Sort { input, keys } => format!("sort[{}]({})", keys.join(", "), input.to_algebra()),
        }
    }
}

impl fmt::Display for LogicalPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_algebra())
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn operand_text(o: &Operand) -> String {
    match o {
        Operand::Col(c) => c.clone(),
        Operand::Const(c) => format!("'{}'", c.replace('\\', "\\\\").replace('\'', "\\'")),
    }
}

pub fn pred_text(p: &Pred) -> String {
    match p {
        Pred::Eq(a, b) => format!("{} = {}", operand_text(a), operand_text(b)),
        Pred::Parent(a, b) => format!("{a} < {b}"),
        Pred::Ancestor(a, b) => format!("{a} << {b}"),
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> PlanError {
    PlanError::Syntax { line, msg: msg.into() }
}

/// Reads a quoted string starting at `s[0] == quote`; returns (value, rest).
fn unquote(s: &str, q: char, line: usize) -> Result<(String, &str), PlanError> {
    let mut out = String::new();
    let mut it = s.char_indices().skip(1);
    while let Some((i, c)) = it.next() {
        match c {
            '\\' => match it.next() {
                Some((_, n)) => out.push(n),
                None => break,
            },
            c if c == q => return Ok((out, &s[i + 1..])),
            c => out.push(c),
        }
    }
    Err(syntax(line, "unterminated string"))
}

fn parse_pred(s: &str, line: usize) -> Result<(Pred, &str), PlanError> {
    let s = s.trim_start();
    let (a, rest) = parse_operand(s, line)?;
    let rest = rest.trim_start();
    let (op, rest) = if let Some(r) = rest.strip_prefix("<<") {
        ("<<", r)
    } else if let Some(r) = rest.strip_prefix('<') {
        ("<", r)
    } else if let Some(r) = rest.strip_prefix('=') {
        ("=", r)
    } else {
        return Err(syntax(line, "expected predicate operator"));
    };
    let (b, rest) = parse_operand(rest.trim_start(), line)?;
    let p = match (op, a, b) {
        ("=", a, b) => Pred::Eq(a, b),
        ("<", Operand::Col(a), Operand::Col(b)) => Pred::Parent(a, b),
        ("<<", Operand::Col(a), Operand::Col(b)) => Pred::Ancestor(a, b),
        _ => return Err(syntax(line, "structural predicates compare columns")),
    };
    Ok((p, rest))
}

fn parse_operand(s: &str, line: usize) -> Result<(Operand, &str), PlanError> {
    if s.starts_with('\'') {
        let (v, rest) = unquote(s, '\'', line)?;
        return Ok((Operand::Const(v), rest));
    }
    let end = s.find(|c: char| c.is_whitespace() || c == '=' || c == '<' || c == ',').unwrap_or(s.len());
    if end == 0 {
        return Err(syntax(line, "expected column"));
    }
    Ok((Operand::Col(s[..end].to_string()), &s[end..]))
}

fn parse_node(lines: &[(usize, usize, &str)], pos: &mut usize, depth: usize) -> Result<LogicalPlan, PlanError> {
    let Some(&(ln, d, text)) = lines.get(*pos) else {
        return Err(syntax(lines.last().map_or(0, |l| l.0), "missing operator"));
    };
    if d != depth {
        return Err(syntax(ln, "bad indentation"));
    }
    *pos += 1;
    let (op, rest) = text.split_once(' ').unwrap_or((text, ""));
    let child = |pos: &mut usize| parse_node(lines, pos, depth + 1);
    let plan = match op {
        "scan" => {
            let (view, rest) = unquote(rest, '"', ln)?;
            let rest = rest.trim();
            let inner = rest.strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(|| syntax(ln, "expected schema"))?;
            let mut schema = Vec::new();
            for item in inner.split_whitespace() {
                let (n, k) = item.rsplit_once(':').ok_or_else(|| syntax(ln, "bad column"))?;
                let k = Annotation::parse(k).ok_or_else(|| syntax(ln, "bad column kind"))?;
                schema.push(ColumnInfo::new(n, k));
            }
            LogicalPlan::Scan { view, schema }
        }
        "product" => {
            let l = child(pos)?;
            let r = child(pos)?;
            l.product(r)
        }
        "select" => {
            let mut preds = Vec::new();
            let mut s = rest;
            loop {
                let (p, r) = parse_pred(s, ln)?;
                preds.push(p);
                let r = r.trim_start();
                if r.is_empty() {
                    break;
                }
                s = r.strip_prefix("and").ok_or_else(|| syntax(ln, "expected and"))?;
            }
            child(pos)?.select(preds)
        }
        "project" => {
            let cols = rest
                .split(", ")
                .map(|item| match item.split_once(" as ") {
                    Some((a, b)) => (a.to_string(), b.to_string()),
                    None => (item.to_string(), item.to_string()),
                })
                .collect();
            child(pos)?.project(cols)
        }
        "nav" => {
            let (col, rest) = rest.split_once(' ').ok_or_else(|| syntax(ln, "expected nav column"))?;
            let (lit, rest) = unquote(rest, '"', ln)?;
            let prefix = rest.trim().strip_prefix("as ").ok_or_else(|| syntax(ln, "expected as"))?;
            let j = parse_literal(&lit).map_err(|e| syntax(ln, e.to_string()))?;
            if j.patterns().len() != 1 {
                return Err(syntax(ln, "navigation takes one tree pattern"));
            }
            child(pos)?.nav(col, j.pattern(0).clone(), prefix.trim())
        }
        "join" => {
            let mut on = Vec::new();
            for item in rest.split(", ") {
                let (a, b) = item.split_once(" = ").ok_or_else(|| syntax(ln, "bad join key"))?;
                on.push((a.to_string(), b.to_string()));
            }
            let l = child(pos)?;
            let r = child(pos)?;
            l.join(r, on)
        }
        "dupelim" => child(pos)?.dup_elim(),
        "sort" => {
            let keys = rest.split(", ").map(str::to_string).collect();
            child(pos)?.sort(keys)
        }
        _ => return Err(syntax(ln, format!("unknown operator {op}"))),
    };
    Ok(plan)
}
