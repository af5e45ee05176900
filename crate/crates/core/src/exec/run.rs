//! Timed execution of a placed plan: operators pipeline batch by batch,
//! hash joins wait for their whole build input, and cross-peer edges pay
//! link costs.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::algebra::{cell_key, navigate, CellKey, EvalError, LogicalPlan, Operand, Pred, Schema, ViewSource};
use crate::dht::PeerAddr;
use crate::extract::Tuple;
use crate::materialize::{CostModel, Links, Micros};

use super::place::{PhysNode, PhysOp, PhysicalPlan, Side};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    /// An operator emitted a batch.
    Batch { tuples: usize },
    /// A hash join or product finished its build input.
    BuildDone,
    /// A batch crossed from `peer` to `to`.
    Ship { to: PeerAddr, bytes: usize },
    /// A result batch reached the query peer.
    Result { tuples: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecEvent {
    pub time: Micros,
    pub peer: PeerAddr,
    /// Pre-order index of the operator in the physical plan.
    pub node: usize,
    pub op: &'static str,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default)]
pub struct ExecReport {
    pub schema: Schema,
    pub rows: Vec<Tuple>,
    pub response_time: Micros,
    /// Arrival of the first result tuple at the query peer.
    pub first_result: Option<Micros>,
    pub partial: bool,
    pub events: Vec<ExecEvent>,
    pub bytes_shipped: usize,
}

/// A peer that stops at `at`: nothing it would emit afterwards is seen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Failure {
    pub peer: PeerAddr,
    pub at: Micros,
}

struct Batch {
    t: Micros,
    rows: Vec<Tuple>,
}

struct Out {
    batches: Vec<Batch>,
    end: Micros,
}

struct Ctx<'a> {
    cost: &'a CostModel,
    links: Links,
    src: &'a dyn ViewSource,
    starts: HashMap<PeerAddr, Micros>,
    events: Vec<ExecEvent>,
    next_id: usize,
    failure: Option<Failure>,
    partial: bool,
    shipped: usize,
}

fn bytes_of(rows: &[Tuple]) -> usize {
    rows.iter().map(Tuple::byte_size).sum()
}

fn idx(s: &Schema, name: &str) -> usize {
    s.iter().position(|c| c.name == name).expect("plan type-checked")
}

impl Ctx<'_> {
    fn event(&mut self, time: Micros, peer: PeerAddr, node: usize, op: &'static str, kind: EventKind) {
        self.events.push(ExecEvent { time, peer, node, op, kind });
    }

    fn chunk(&self, rows: Vec<Tuple>) -> Vec<Vec<Tuple>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        let mut bytes = 0;
        for t in rows {
            bytes += t.byte_size();
            cur.push(t);
            if cur.len() >= self.cost.batch_tuples || bytes >= self.cost.batch_bytes {
                out.push(std::mem::take(&mut cur));
                bytes = 0;
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    fn ship(&mut self, out: Out, from: PeerAddr, to: PeerAddr, node: usize, op: &'static str) -> Out {
        if from == to {
            return out;
        }
        let mut batches = Vec::with_capacity(out.batches.len());
        let mut last = 0;
        for b in out.batches {
            let bytes = bytes_of(&b.rows) + 16;
            let t = self.links.transfer(self.cost, b.t, from, to, bytes as u64);
            self.shipped += bytes;
            self.event(b.t, from, node, op, EventKind::Ship { to, bytes });
            last = last.max(t);
            batches.push(Batch { t, rows: b.rows });
        }
        let end = self.links.message(self.cost, out.end, from, to).max(last);
        Out { batches, end }
    }

    fn cut(&mut self, peer: PeerAddr, mut out: Out) -> Out {
        if let Some(f) = self.failure {
            if f.peer == peer {
                let before = out.batches.len();
                out.batches.retain(|b| b.t < f.at);
                if out.batches.len() < before || out.end >= f.at {
                    self.partial = true;
                    out.end = out.end.min(f.at);
                }
            }
        }
        out
    }

    fn run(&mut self, n: &PhysNode) -> Result<Out, EvalError> {
        let id = self.next_id;
        self.next_id += 1;
        let op = n.op.name();
        let out = match &n.op {
            PhysOp::Scan { view, schema } => {
                let rows = self.src.scan(view).ok_or_else(|| EvalError::MissingView(view.clone()))?;
                if let Some(t) = rows.iter().find(|t| t.len() != schema.len()) {
                    return Err(EvalError::Arity { view: view.clone(), found: t.len(), expected: schema.len() });
                }
                let mut t = self.starts[&n.peer];
                let mut batches = Vec::new();
                for c in self.chunk(rows) {
                    t += self.cost.operator_us(bytes_of(&c));
                    self.event(t, n.peer, id, op, EventKind::Batch { tuples: c.len() });
                    batches.push(Batch { t, rows: c });
                }
                Out { batches, end: t }
            }
            PhysOp::Select(_) | PhysOp::Project(_) | PhysOp::Nav { .. } | PhysOp::DupElim => {
                let input_schema = n.children[0].logical().schema()?;
                let input = self.input(n, 0)?;
                let mut stage = Stage::new(&n.op, &input_schema);
                let mut free = 0;
                let mut batches = Vec::new();
                for b in input.batches {
                    let s = b.t.max(free);
                    let (rows, work) = stage.apply(b.rows)?;
                    free = s + self.cost.operator_us(work);
                    if !rows.is_empty() {
                        self.event(free, n.peer, id, op, EventKind::Batch { tuples: rows.len() });
                        batches.push(Batch { t: free, rows });
                    }
                }
                Out { batches, end: input.end.max(free) }
            }
            PhysOp::HashJoin { build, .. } | PhysOp::Product { build } => {
                let ls = n.children[0].logical().schema()?;
                let rs = n.children[1].logical().schema()?;
                let (bi, pi) = match build {
                    Side::Left => (0, 1),
                    Side::Right => (1, 0),
                };
                let b_in = self.input(n, bi)?;
                let p_in = self.input(n, pi)?;
                let (lk, rk): (Vec<usize>, Vec<usize>) = match &n.op {
                    PhysOp::HashJoin { on, .. } => on.iter().map(|(a, b)| (idx(&ls, a), idx(&rs, b))).unzip(),
                    _ => (vec![], vec![]),
                };
                let (bk, pk) = if bi == 1 { (rk, lk) } else { (lk, rk) };
                let mut table: HashMap<Vec<CellKey>, Vec<Tuple>> = HashMap::new();
                let mut build_bytes = 0;
                let mut last = b_in.end;
                for b in b_in.batches {
                    last = last.max(b.t);
                    build_bytes += bytes_of(&b.rows);
                    for t in b.rows {
                        table.entry(bk.iter().map(|&k| cell_key(&t.0[k])).collect()).or_default().push(t);
                    }
                }
                let built = last + self.cost.operator_us(build_bytes);
                self.event(built, n.peer, id, op, EventKind::BuildDone);
                let mut free = built;
                let mut batches = Vec::new();
                for b in p_in.batches {
                    let s = b.t.max(free);
                    let mut rows = Vec::new();
                    for t in &b.rows {
                        let key: Vec<CellKey> = pk.iter().map(|&k| cell_key(&t.0[k])).collect();
                        if let Some(m) = table.get(&key) {
                            for other in m {
                                rows.push(if bi == 1 { t.concat(other) } else { other.concat(t) });
                            }
                        }
                    }
                    free = s + self.cost.operator_us(bytes_of(&b.rows) + bytes_of(&rows));
                    for c in self.chunk(rows) {
                        self.event(free, n.peer, id, op, EventKind::Batch { tuples: c.len() });
                        batches.push(Batch { t: free, rows: c });
                    }
                }
                Out { batches, end: p_in.end.max(free) }
            }
            PhysOp::Sort(keys) => {
                let schema = n.children[0].logical().schema()?;
                let input = self.input(n, 0)?;
                let ix: Vec<usize> = keys.iter().map(|k| idx(&schema, k)).collect();
                let mut last = input.end;
                let mut rows = Vec::new();
                for b in input.batches {
                    last = last.max(b.t);
                    rows.extend(b.rows);
                }
                rows.sort_by(|a, b| ix.iter().map(|&i| a.0[i].cmp(&b.0[i])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
                let t = last + self.cost.operator_us(bytes_of(&rows));
                let mut batches = Vec::new();
                for c in self.chunk(rows) {
                    self.event(t, n.peer, id, op, EventKind::Batch { tuples: c.len() });
                    batches.push(Batch { t, rows: c });
                }
                Out { batches, end: t }
            }
        };
        Ok(self.cut(n.peer, out))
    }

    /// Output of child `i`, delivered at `n`'s peer.
    fn input(&mut self, n: &PhysNode, i: usize) -> Result<Out, EvalError> {
        let c = &n.children[i];
        let id = self.next_id;
        let out = self.run(c)?;
        Ok(self.ship(out, c.peer, n.peer, id, c.op.name()))
    }
}

/// Per-batch state of a pipelined unary operator.
enum Stage {
    Select(Vec<Resolved>),
    Project(Vec<usize>),
    Nav { col: usize, pattern: crate::pattern::TreePattern },
    DupElim(HashSet<Tuple>),
}

enum Resolved {
    Eq(Option<usize>, Option<usize>, Option<String>),
    Parent(usize, usize),
    Ancestor(usize, usize),
}

impl Stage {
    fn new(op: &PhysOp, s: &Schema) -> Stage {
        match op {
            PhysOp::Select(preds) => Stage::Select(
                preds
                    .iter()
                    .map(|p| match p {
                        Pred::Eq(a, b) => {
                            let col = |o: &Operand| match o {
                                Operand::Col(c) => Some(idx(s, c)),
                                Operand::Const(_) => None,
                            };
                            let konst = [a, b].iter().find_map(|o| match o {
                                Operand::Const(c) => Some(c.clone()),
                                _ => None,
                            });
                            Resolved::Eq(col(a), col(b), konst)
                        }
                        Pred::Parent(a, b) => Resolved::Parent(idx(s, a), idx(s, b)),
                        Pred::Ancestor(a, b) => Resolved::Ancestor(idx(s, a), idx(s, b)),
                    })
                    .collect(),
            ),
            PhysOp::Project(cols) => Stage::Project(cols.iter().map(|(c, _)| idx(s, c)).collect()),
            PhysOp::Nav { col, pattern, .. } => Stage::Nav { col: idx(s, col), pattern: pattern.clone() },
            PhysOp::DupElim => Stage::DupElim(HashSet::new()),
            _ => unreachable!("not a pipelined unary operator"),
        }
    }

    /// Output rows and the bytes of work done.
    fn apply(&mut self, rows: Vec<Tuple>) -> Result<(Vec<Tuple>, usize), EvalError> {
        let work = bytes_of(&rows);
        Ok(match self {
            Stage::Select(preds) => {
                let keep = |t: &Tuple| {
                    preds.iter().all(|p| match p {
                        Resolved::Eq(a, b, c) => {
                            let v = |i: &Option<usize>| i.map(|i| cell_key(&t.0[i]));
                            let k = c.as_ref().map(|c| CellKey::Text(std::sync::Arc::from(c.as_str())));
                            match (v(a), v(b)) {
                                (Some(x), Some(y)) => x == y,
                                (Some(x), None) | (None, Some(x)) => Some(x) == k,
                                (None, None) => true,
                            }
                        }
                        Resolved::Parent(a, b) => matches!((t.0[*a].as_id(), t.0[*b].as_id()), (Some(x), Some(y)) if x.is_parent_of(y)),
                        Resolved::Ancestor(a, b) => matches!((t.0[*a].as_id(), t.0[*b].as_id()), (Some(x), Some(y)) if x.is_ancestor_of(y)),
                    })
                };
                (rows.into_iter().filter(keep).collect(), work)
            }
            Stage::Project(ix) => (rows.iter().map(|t| t.project(ix)).collect(), work),
            Stage::Nav { col, pattern } => {
                let mut out = Vec::new();
                for t in &rows {
                    for r in navigate(t.0[*col].as_text().unwrap_or(""), pattern)? {
                        out.push(t.concat(&r));
                    }
                }
                (out, work)
            }
            Stage::DupElim(seen) => (rows.into_iter().filter(|t| seen.insert(t.clone())).collect(), work),
        })
    }
}

/// Runs `pp` with the query issued at time 0 from `pp.query_peer`.
pub fn execute(pp: &PhysicalPlan, src: &dyn ViewSource, cost: &CostModel) -> Result<ExecReport, EvalError> {
    execute_with(pp, src, cost, None)
}

pub fn execute_with(pp: &PhysicalPlan, src: &dyn ViewSource, cost: &CostModel, failure: Option<Failure>) -> Result<ExecReport, EvalError> {
    let schema = pp.root.logical().schema()?;
    let mut links = Links::new();
    let peers: BTreeSet<PeerAddr> = pp.operators().iter().map(|(_, n)| n.peer).collect();
    let starts = peers.iter().map(|&p| (p, links.message(cost, 0, pp.query_peer, p))).collect();
    let mut ctx = Ctx { cost, links, src, starts, events: Vec::new(), next_id: 0, failure, partial: false, shipped: 0 };
    let out = ctx.run(&pp.root)?;
    let out = ctx.ship(out, pp.root.peer, pp.query_peer, 0, pp.root.op.name());
    let mut rep = ExecReport { schema, ..Default::default() };
    let mut end = out.end;
    for b in out.batches {
        end = end.max(b.t);
        if !b.rows.is_empty() {
            rep.first_result = Some(rep.first_result.map_or(b.t, |f| f.min(b.t)));
            ctx.event(b.t, pp.query_peer, 0, "result", EventKind::Result { tuples: b.rows.len() });
            rep.rows.extend(b.rows);
        }
    }
    rep.response_time = end;
    rep.partial = ctx.partial;
    rep.events = ctx.events;
    rep.bytes_shipped = ctx.shipped;
    Ok(rep)
}

/// Logical plan whose physical execution is `pp`.
pub fn logical_of(pp: &PhysicalPlan) -> LogicalPlan {
    pp.root.logical()
}
