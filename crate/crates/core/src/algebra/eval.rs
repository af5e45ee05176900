use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::extract::{match_below, Cell, Tuple};
use crate::pattern::TreePattern;
use crate::xml::{Document, ParseError, StructuralId};

use super::plan::{LogicalPlan, Operand, PlanError, Pred, Schema};

/// Supplies the tuples of each view to scans.
pub trait ViewSource {
    fn scan(&self, view: &str) -> Option<Vec<Tuple>>;
}

impl ViewSource for HashMap<String, Vec<Tuple>> {
    fn scan(&self, view: &str) -> Option<Vec<Tuple>> {
        self.get(view).cloned()
    }
}

impl ViewSource for BTreeMap<String, Vec<Tuple>> {
    fn scan(&self, view: &str) -> Option<Vec<Tuple>> {
        self.get(view).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub schema: Schema,
    pub rows: Vec<Tuple>,
}

impl Relation {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows in canonical (sorted) order.
    pub fn sorted_rows(&self) -> Vec<Tuple> {
        let mut r = self.rows.clone();
        r.sort();
        r
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("no tuples for view {0}")]
    MissingView(String),
    #[error("view {view} tuple has {found} cells, schema has {expected}")]
    Arity { view: String, found: usize, expected: usize },
    #[error("fragment does not parse: {0}")]
    Fragment(#[from] ParseError),
}

/// Comparable key of a cell: IDs compare as IDs, values and contents as
/// text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellKey {
    Id(StructuralId),
    Text(Arc<str>),
}

pub fn cell_key(c: &Cell) -> CellKey {
    match c {
        Cell::Id(i) => CellKey::Id(i.clone()),
        Cell::Val(s) | Cell::Cont(s) => CellKey::Text(s.clone()),
    }
}

fn idx(s: &Schema, name: &str) -> usize {
    s.iter().position(|c| c.name == name).expect("checked by schema()")
}

enum ROperand {
    Col(usize),
    Const(String),
}

enum RPred {
    Eq(ROperand, ROperand),
    Parent(usize, usize),
    Ancestor(usize, usize),
}

fn resolve(s: &Schema, p: &Pred) -> RPred {
    let op = |o: &Operand| match o {
        Operand::Col(c) => ROperand::Col(idx(s, c)),
        Operand::Const(c) => ROperand::Const(c.clone()),
    };
    match p {
        Pred::Eq(a, b) => RPred::Eq(op(a), op(b)),
        Pred::Parent(a, b) => RPred::Parent(idx(s, a), idx(s, b)),
        Pred::Ancestor(a, b) => RPred::Ancestor(idx(s, a), idx(s, b)),
    }
}

fn holds(p: &RPred, t: &Tuple) -> bool {
    match p {
        RPred::Eq(a, b) => {
            let text = |o: &ROperand| -> Option<CellKey> {
                match o {
                    ROperand::Col(i) => Some(cell_key(&t.0[*i])),
                    ROperand::Const(c) => Some(CellKey::Text(Arc::from(c.as_str()))),
                }
            };
            text(a) == text(b)
        }
        RPred::Parent(a, b) => match (t.0[*a].as_id(), t.0[*b].as_id()) {
            (Some(x), Some(y)) => x.is_parent_of(y),
            _ => false,
        },
        RPred::Ancestor(a, b) => match (t.0[*a].as_id(), t.0[*b].as_id()) {
            (Some(x), Some(y)) => x.is_ancestor_of(y),
            _ => false,
        },
    }
}

/// Tuples of `pattern` evaluated below the root of `fragment`.
pub fn navigate(fragment: &str, pattern: &TreePattern) -> Result<Vec<Tuple>, ParseError> {
    let d = Document::parse_str(fragment, "")?;
    Ok(match_below(pattern, &d, 0))
}

/// Evaluates a well-typed plan with multiset semantics.
pub fn eval_logical(plan: &LogicalPlan, src: &dyn ViewSource) -> Result<Relation, EvalError> {
    plan.schema()?;
    eval(plan, src)
}

fn eval(plan: &LogicalPlan, src: &dyn ViewSource) -> Result<Relation, EvalError> {
    Ok(match plan {
        LogicalPlan::Scan { view, schema } => {
            let rows = src.scan(view).ok_or_else(|| EvalError::MissingView(view.clone()))?;
            if let Some(t) = rows.iter().find(|t| t.len() != schema.len()) {
                return Err(EvalError::Arity { view: view.clone(), found: t.len(), expected: schema.len() });
            }
            Relation { schema: schema.clone(), rows }
        }
        LogicalPlan::Product(l, r) => {
            let (l, r) = (eval(l, src)?, eval(r, src)?);
            let mut rows = Vec::with_capacity(l.rows.len() * r.rows.len());
            for a in &l.rows {
                for b in &r.rows {
                    rows.push(a.concat(b));
                }
            }
            let mut schema = l.schema;
            schema.extend(r.schema);
            Relation { schema, rows }
        }
        LogicalPlan::Select { input, preds } => {
            let mut rel = eval(input, src)?;
            let rp: Vec<RPred> = preds.iter().map(|p| resolve(&rel.schema, p)).collect();
            rel.rows.retain(|t| rp.iter().all(|p| holds(p, t)));
            rel
        }
        LogicalPlan::Project { input, cols } => {
            let rel = eval(input, src)?;
            let ix: Vec<usize> = cols.iter().map(|(s, _)| idx(&rel.schema, s)).collect();
            let schema = plan.schema()?;
            Relation { schema, rows: rel.rows.iter().map(|t| t.project(&ix)).collect() }
        }
        LogicalPlan::Nav { input, col, pattern, .. } => {
            let rel = eval(input, src)?;
            let c = idx(&rel.schema, col);
            let schema = plan.schema()?;
            let mut rows = Vec::new();
            for t in &rel.rows {
                let frag = t.0[c].as_text().unwrap_or("");
                for r in navigate(frag, pattern)? {
                    rows.push(t.concat(&r));
                }
            }
            Relation { schema, rows }
        }
        LogicalPlan::Join { left, right, on } => {
            let (l, r) = (eval(left, src)?, eval(right, src)?);
            let lk: Vec<usize> = on.iter().map(|(a, _)| idx(&l.schema, a)).collect();
            let rk: Vec<usize> = on.iter().map(|(_, b)| idx(&r.schema, b)).collect();
            let rows = hash_join(&l.rows, &lk, &r.rows, &rk);
            let mut schema = l.schema;
            schema.extend(r.schema);
            Relation { schema, rows }
        }
        LogicalPlan::DupElim(input) => {
            let mut rel = eval(input, src)?;
            rel.rows = dedup_keep_first(rel.rows);
            rel
        }
        LogicalPlan::Sort { input, keys } => {
            let mut rel = eval(input, src)?;
            let ix: Vec<usize> = keys.iter().map(|k| idx(&rel.schema, k)).collect();
            rel.rows.sort_by(|a, b| ix.iter().map(|&i| a.0[i].cmp(&b.0[i])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
            rel
        }
    })
}

/// Builds on `right`, probes with `left`; output follows left order, then
/// right order within a key.
pub fn hash_join(left: &[Tuple], lk: &[usize], right: &[Tuple], rk: &[usize]) -> Vec<Tuple> {
    let mut table: HashMap<Vec<CellKey>, Vec<usize>> = HashMap::new();
    for (i, t) in right.iter().enumerate() {
        table.entry(rk.iter().map(|&k| cell_key(&t.0[k])).collect()).or_default().push(i);
    }
    let mut out = Vec::new();
    for t in left {
        let key: Vec<CellKey> = lk.iter().map(|&k| cell_key(&t.0[k])).collect();
        if let Some(m) = table.get(&key) {
            for &i in m {
                out.push(t.concat(&right[i]));
            }
        }
    }
    out
}

pub fn dedup_keep_first(rows: Vec<Tuple>) -> Vec<Tuple> {
    let mut seen = HashSet::new();
    rows.into_iter().filter(|t| seen.insert(t.clone())).collect()
}
