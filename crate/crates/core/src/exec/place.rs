use std::collections::BTreeMap;

use crate::algebra::{LogicalPlan, Pred, Schema};
use crate::dht::PeerAddr;
use crate::pattern::TreePattern;

/// Size and location of a materialized view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ViewStats {
    pub holder: PeerAddr,
    pub tuples: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PhysOp {
    Scan { view: String, schema: Schema },
    /// Cartesian product; the build side is materialized first.
    Product { build: Side },
    Select(Vec<Pred>),
    Project(Vec<(String, String)>),
    Nav { col: String, pattern: TreePattern, prefix: String },
    HashJoin { on: Vec<(String, String)>, build: Side },
    DupElim,
    Sort(Vec<String>),
}

impl PhysOp {
    pub fn name(&self) -> &'static str {
        match self {
            PhysOp::Scan { .. } => "scan",
            PhysOp::Product { .. } => "product",
            PhysOp::Select(_) => "select",
            PhysOp::Project(_) => "project",
            PhysOp::Nav { .. } => "nav",
            PhysOp::HashJoin { .. } => "hashjoin",
            PhysOp::DupElim => "dupelim",
            PhysOp::Sort(_) => "sort",
        }
    }
}

/// An operator with the peer running it. Edges whose peers differ are
/// shipped as batch streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysNode {
    pub op: PhysOp,
    pub peer: PeerAddr,
    /// Estimated output bytes.
    pub est_bytes: usize,
    pub children: Vec<PhysNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhysicalPlan {
    pub root: PhysNode,
    pub query_peer: PeerAddr,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlaceError {
    #[error("no statistics for view {0}")]
    UnknownView(String),
}

impl PhysicalPlan {
    /// Operators in pre-order, with depth.
    pub fn operators(&self) -> Vec<(usize, &PhysNode)> {
        let mut out = Vec::new();
        fn walk<'a>(n: &'a PhysNode, d: usize, out: &mut Vec<(usize, &'a PhysNode)>) {
            out.push((d, n));
            for c in &n.children {
                walk(c, d + 1, out);
            }
        }
        walk(&self.root, 0, &mut out);
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (d, n) in self.operators() {
            s.push_str(&format!("{}{} @{}\n", "  ".repeat(d), n.op.name(), n.peer));
        }
        s.push_str(&format!("-> {}\n", self.query_peer));
        s
    }
}

impl PhysNode {
    /// The logical plan this subtree computes.
    pub fn logical(&self) -> LogicalPlan {
        let c = |i: usize| Box::new(self.children[i].logical());
        match &self.op {
            PhysOp::Scan { view, schema } => LogicalPlan::Scan { view: view.clone(), schema: schema.clone() },
            PhysOp::Product { .. } => LogicalPlan::Product(c(0), c(1)),
            PhysOp::HashJoin { on, .. } => LogicalPlan::Join { left: c(0), right: c(1), on: on.clone() },
            PhysOp::Select(p) => LogicalPlan::Select { input: c(0), preds: p.clone() },
            PhysOp::Project(cols) => LogicalPlan::Project { input: c(0), cols: cols.clone() },
            PhysOp::Nav { col, pattern, prefix } => {
                LogicalPlan::Nav { input: c(0), col: col.clone(), pattern: pattern.clone(), prefix: prefix.clone() }
            }
            PhysOp::DupElim => LogicalPlan::DupElim(c(0)),
            PhysOp::Sort(k) => LogicalPlan::Sort { input: c(0), keys: k.clone() },
        }
    }
}

/// Assigns peers: scans at the view holder, unary operators with their
/// input, binary operators at the holder of the larger input; the input
/// that moves is the build side.
pub fn place(plan: &LogicalPlan, stats: &BTreeMap<String, ViewStats>, query_peer: PeerAddr) -> Result<PhysicalPlan, PlaceError> {
    Ok(PhysicalPlan { root: place_node(plan, stats)?, query_peer })
}

fn binary(l: PhysNode, r: PhysNode, make: impl FnOnce(Side) -> PhysOp, est: usize) -> PhysNode {
    let (peer, build) = if l.peer == r.peer {
        (l.peer, if r.est_bytes <= l.est_bytes { Side::Right } else { Side::Left })
    } else if l.est_bytes >= r.est_bytes {
        (l.peer, Side::Right)
    } else {
        (r.peer, Side::Left)
    };
    PhysNode { op: make(build), peer, est_bytes: est, children: vec![l, r] }
}

fn place_node(plan: &LogicalPlan, stats: &BTreeMap<String, ViewStats>) -> Result<PhysNode, PlaceError> {
    let unary = |input: &LogicalPlan, op: PhysOp| -> Result<PhysNode, PlaceError> {
        let c = place_node(input, stats)?;
        Ok(PhysNode { op, peer: c.peer, est_bytes: c.est_bytes, children: vec![c] })
    };
    Ok(match plan {
        LogicalPlan::Scan { view, schema } => {
            let s = stats.get(view).ok_or_else(|| PlaceError::UnknownView(view.clone()))?;
            PhysNode { op: PhysOp::Scan { view: view.clone(), schema: schema.clone() }, peer: s.holder, est_bytes: s.bytes, children: vec![] }
        }
        LogicalPlan::Product(l, r) => {
            let (l, r) = (place_node(l, stats)?, place_node(r, stats)?);
            let est = l.est_bytes.saturating_mul(r.est_bytes.max(1));
            binary(l, r, |build| PhysOp::Product { build }, est)
        }
        LogicalPlan::Join { left, right, on } => {
            let (l, r) = (place_node(left, stats)?, place_node(right, stats)?);
            let est = l.est_bytes + r.est_bytes;
            binary(l, r, |build| PhysOp::HashJoin { on: on.clone(), build }, est)
        }
        LogicalPlan::Select { input, preds } => unary(input, PhysOp::Select(preds.clone()))?,
        LogicalPlan::Project { input, cols } => unary(input, PhysOp::Project(cols.clone()))?,
        LogicalPlan::Nav { input, col, pattern, prefix } => {
            unary(input, PhysOp::Nav { col: col.clone(), pattern: pattern.clone(), prefix: prefix.clone() })?
        }
        LogicalPlan::DupElim(input) => unary(input, PhysOp::DupElim)?,
        LogicalPlan::Sort { input, keys } => unary(input, PhysOp::Sort(keys.clone()))?,
    })
}
