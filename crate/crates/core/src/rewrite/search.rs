use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::algebra::{LogicalPlan, Pred};
use crate::pattern::{
    embeddings, Annotation, Annotations, Axis, Embedding, JoinedTreePattern, NodeRef, PatternNode, TreePattern,
    ViewDefinition,
};

use super::battery::{battery, BatteryConfig};
use super::oracle::Oracle;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteConfig {
    pub k_max: usize,
    /// Embeddings tried per view.
    pub max_embeddings: usize,
    /// Cap on subsets built and checked.
    pub max_subsets: usize,
    pub battery: BatteryConfig,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig { k_max: 3, max_embeddings: 4, max_subsets: 20_000, battery: BatteryConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewriting {
    pub plan: LogicalPlan,
    pub used_views: BTreeSet<String>,
    pub minimal: bool,
}

/// One way a view is used: the view with an embedding into the query.
#[derive(Debug, Clone)]
pub struct ViewInstance<'a> {
    pub view_id: &'a str,
    pub pattern: &'a JoinedTreePattern,
    pub embedding: Embedding,
}

/// Columns available for a query node.
#[derive(Default, Clone)]
struct Avail {
    id: Option<String>,
    val: Option<String>,
    cont: Option<String>,
}

impl Avail {
    fn get(&self, a: Annotation) -> Option<&String> {
        match a {
            Annotation::Id => self.id.as_ref(),
            Annotation::Val => self.val.as_ref(),
            Annotation::Cont => self.cont.as_ref(),
        }
    }

    fn set_if_empty(&mut self, a: Annotation, c: String) {
        let slot = match a {
            Annotation::Id => &mut self.id,
            Annotation::Val => &mut self.val,
            Annotation::Cont => &mut self.cont,
        };
        if slot.is_none() {
            *slot = Some(c);
        }
    }
}

/// Column name of (node, ann) in a pattern scanned or navigated under
/// `prefix`.
fn col_name(stems: &[Vec<String>], r: NodeRef, a: Annotation, prefix: &str) -> String {
    format!("{prefix}.{}.{}", stems[r.pattern][r.node], a.as_str())
}

/// Subtree of `t` rooted at `b`, as a navigation pattern, with the given
/// annotations per query node; also returns the pre-order query nodes.
fn branch_pattern(t: &TreePattern, b: usize, ann: &HashMap<usize, Annotations>) -> (TreePattern, Vec<usize>) {
    fn build(t: &TreePattern, i: usize, ann: &HashMap<usize, Annotations>, order: &mut Vec<usize>) -> PatternNode {
        order.push(i);
        let n = t.node(i);
        let mut p = PatternNode {
            label: n.label.clone(),
            test: n.test,
            annotations: ann.get(&i).copied().unwrap_or(Annotations::NONE),
            value_predicate: n.value_predicate.clone(),
            children: Vec::new(),
        };
        for &c in &n.children {
            let child = build(t, c, ann, order);
            p.children.push((t.node(c).axis, child));
        }
        p
    }
    let mut order = Vec::new();
    let root = build(t, b, ann, &mut order);
    (TreePattern::new(t.node(b).axis, root), order)
}

/// Child of `x` on the path down to `y` (x a strict ancestor of y).
fn branch_child(t: &TreePattern, x: usize, y: usize) -> usize {
    let mut cur = y;
    while t.node(cur).parent != Some(x) {
        cur = t.node(cur).parent.expect("x is an ancestor of y");
    }
    cur
}

fn nearest_ancestor(t: &TreePattern, y: usize, pred: impl Fn(usize) -> bool) -> Option<usize> {
    let mut cur = t.node(y).parent;
    while let Some(c) = cur {
        if pred(c) {
            return Some(c);
        }
        cur = t.node(c).parent;
    }
    None
}

/// Builds the candidate plan combining `insts`, or None when they cannot
/// cover the query.
pub fn build_plan(q: &JoinedTreePattern, insts: &[ViewInstance<'_>]) -> Option<LogicalPlan> {
    let aliases = aliases(insts);
    let mut mapped: BTreeSet<NodeRef> = BTreeSet::new();
    let mut avail: BTreeMap<NodeRef, Avail> = BTreeMap::new();
    // Per instance: ID columns per query node.
    let mut inst_ids: Vec<BTreeMap<NodeRef, Vec<String>>> = vec![BTreeMap::new(); insts.len()];
    let mut cont_src: BTreeMap<NodeRef, usize> = BTreeMap::new();
    for (k, inst) in insts.iter().enumerate() {
        let stems = inst.pattern.stems();
        for r in inst.pattern.node_refs() {
            mapped.insert(inst.embedding.image(r));
        }
        for c in inst.pattern.columns() {
            let img = inst.embedding.image(c.node);
            let name = col_name(&stems, c.node, c.ann, &aliases[k]);
            if c.ann == Annotation::Id {
                inst_ids[k].entry(img).or_default().push(name.clone());
            }
            if c.ann == Annotation::Cont {
                cont_src.entry(img).or_insert(k);
            }
            avail.entry(img).or_default().set_if_empty(c.ann, name);
        }
    }

    // Navigation branches: (source node, branch child) -> needed annotations.
    let mut branches: BTreeMap<(NodeRef, usize), HashMap<usize, Annotations>> = BTreeMap::new();
    let nav_root = |y: NodeRef| -> Option<(NodeRef, usize)> {
        let t = q.pattern(y.pattern);
        let x = nearest_ancestor(t, y.node, |c| cont_src.contains_key(&NodeRef::new(y.pattern, c)))?;
        Some((NodeRef::new(y.pattern, x), branch_child(t, x, y.node)))
    };
    for y in q.node_refs() {
        if !mapped.contains(&y) {
            let b = nav_root(y)?;
            branches.entry(b).or_default();
        }
    }
    let in_branch = |branches: &BTreeMap<(NodeRef, usize), HashMap<usize, Annotations>>, y: NodeRef| {
        branches.keys().any(|&(x, b)| {
            x.pattern == y.pattern && (b == y.node || q.pattern(y.pattern).is_ancestor(b, y.node))
        })
    };
    // Value needs: (node, ann) that must come from a nav when no view
    // supplies them.
    let mut needs: Vec<(NodeRef, Annotation)> = Vec::new();
    for c in q.columns() {
        if avail.get(&c.node).and_then(|a| a.get(c.ann)).is_none() {
            if c.ann == Annotation::Id {
                return None;
            }
            needs.push((c.node, c.ann));
        }
    }
    let mut value_preds: Vec<(NodeRef, String)> = Vec::new();
    for y in q.node_refs() {
        let Some(c) = &q.node(y).value_predicate else { continue };
        let enforced = insts.iter().any(|inst| {
            inst.pattern.node_refs().any(|r| inst.embedding.image(r) == y && inst.pattern.node(r).value_predicate.as_ref() == Some(c))
        });
        if !enforced {
            value_preds.push((y, c.clone()));
        }
    }
    let mut value_joins: Vec<(NodeRef, NodeRef)> = Vec::new();
    for &(a, b) in q.joins() {
        let enforced = insts.iter().any(|inst| {
            inst.pattern.joins().iter().any(|&(va, vb)| {
                let (ia, ib) = (inst.embedding.image(va), inst.embedding.image(vb));
                (ia, ib) == (a, b) || (ia, ib) == (b, a)
            })
        });
        if !enforced {
            value_joins.push((a, b));
            for r in [a, b] {
                if avail.get(&r).and_then(|x| x.val.as_ref()).is_none() {
                    needs.push((r, Annotation::Val));
                }
            }
        }
    }
    for &(y, a) in &needs {
        let b = nav_root(y)?;
        branches.entry(b).or_default().entry(y.node).or_insert(Annotations::NONE).insert(a);
    }
    // A constant is checked by the nav pattern when its node is navigated,
    // else by a selection on a view's val column.
    let mut kept = Vec::new();
    for (y, c) in value_preds {
        if in_branch(&branches, y) {
            continue;
        }
        if avail.get(&y).and_then(|a| a.val.as_ref()).is_some() {
            kept.push((y, c));
        } else {
            branches.entry(nav_root(y)?).or_default();
        }
    }
    let value_preds = kept;

    // Per-instance sub-plans with their navigations.
    let mut subplans: Vec<LogicalPlan> = Vec::new();
    let mut nav_count = 0;
    let mut nav_avail: BTreeMap<NodeRef, Avail> = BTreeMap::new();
    for (k, inst) in insts.iter().enumerate() {
        let stems = inst.pattern.stems();
        let schema = inst
            .pattern
            .columns()
            .iter()
            .map(|c| crate::algebra::ColumnInfo::new(col_name(&stems, c.node, c.ann, &aliases[k]), c.ann))
            .collect();
        let mut p = LogicalPlan::scan(inst.view_id, schema);
        for (&(x, b), ann) in &branches {
            if cont_src.get(&x) != Some(&k) {
                continue;
            }
            nav_count += 1;
            let prefix = format!("n{nav_count}");
            let t = q.pattern(x.pattern);
            let (np, order) = branch_pattern(t, b, ann);
            let np_stems = JoinedTreePattern::single(np.clone()).stems();
            for (pos, &qn) in order.iter().enumerate() {
                for a in ann.get(&qn).copied().unwrap_or(Annotations::NONE).iter() {
                    nav_avail
                        .entry(NodeRef::new(x.pattern, qn))
                        .or_default()
                        .set_if_empty(a, col_name(&np_stems, NodeRef::new(0, pos), a, &prefix));
                }
            }
            p = p.nav(avail[&x].cont.clone().unwrap(), np, prefix);
        }
        subplans.push(p);
    }
    let value_col = |r: NodeRef, a: Annotation| -> Option<String> {
        avail.get(&r).and_then(|x| x.get(a)).or_else(|| nav_avail.get(&r).and_then(|x| x.get(a))).cloned()
    };

    // Combine: equi-join on shared ID nodes, else product.
    let mut order: Vec<usize> = (0..insts.len()).collect();
    order.sort_by_key(|&k| std::cmp::Reverse(insts[k].pattern.size()));
    let mut acc_ids: BTreeMap<NodeRef, String> = BTreeMap::new();
    let mut struct_preds: Vec<Pred> = Vec::new();
    let mut plan: Option<LogicalPlan> = None;
    for &k in &order {
        let sub = subplans[k].clone();
        for cols in inst_ids[k].values() {
            for extra in &cols[1..] {
                struct_preds.push(Pred::eq_cols(&cols[0], extra));
            }
        }
        plan = Some(match plan {
            None => sub,
            Some(acc) => {
                let on: Vec<(String, String)> = inst_ids[k]
                    .iter()
                    .filter_map(|(r, cols)| acc_ids.get(r).map(|a| (a.clone(), cols[0].clone())))
                    .collect();
                if on.is_empty() {
                    acc.product(sub)
                } else {
                    acc.join(sub, on)
                }
            }
        });
        for (r, cols) in &inst_ids[k] {
            acc_ids.entry(*r).or_insert_with(|| cols[0].clone());
        }
    }
    let mut plan = plan?;

    // Structural links between ID nodes not implied by a single view.
    for (&y, ycol) in &acc_ids {
        let t = q.pattern(y.pattern);
        let Some(x) = nearest_ancestor(t, y.node, |c| acc_ids.contains_key(&NodeRef::new(y.pattern, c))) else {
            continue;
        };
        let xr = NodeRef::new(y.pattern, x);
        let parent = t.node(y.node).parent == Some(x) && t.node(y.node).axis == Axis::Child;
        let implied = insts.iter().any(|inst| {
            let v = inst.pattern;
            v.node_refs().any(|vx| {
                inst.embedding.image(vx) == xr
                    && v.node(vx).annotations.has(Annotation::Id)
                    && v.node_refs().any(|vy| {
                        if vy.pattern != vx.pattern || inst.embedding.image(vy) != y || !v.node(vy).annotations.has(Annotation::Id) {
                            return false;
                        }
                        let vt = v.pattern(vx.pattern);
                        if parent {
                            vt.node(vy.node).parent == Some(vx.node) && vt.node(vy.node).axis == Axis::Child
                        } else {
                            vt.is_ancestor(vx.node, vy.node)
                        }
                    })
            })
        });
        if !implied {
            let xcol = acc_ids[&xr].clone();
            struct_preds.push(if parent { Pred::Parent(xcol, ycol.clone()) } else { Pred::Ancestor(xcol, ycol.clone()) });
        }
    }
    if !struct_preds.is_empty() {
        plan = plan.select(struct_preds);
    }
    let mut vp = Vec::new();
    for (y, c) in &value_preds {
        vp.push(Pred::eq_const(&value_col(*y, Annotation::Val)?, c));
    }
    for &(a, b) in &value_joins {
        vp.push(Pred::eq_cols(&value_col(a, Annotation::Val)?, &value_col(b, Annotation::Val)?));
    }
    if !vp.is_empty() {
        plan = plan.select(vp);
    }
    let mut cols = Vec::new();
    for c in q.columns() {
        let src = value_col(c.node, c.ann)?;
        cols.push((src, c.name.clone()));
    }
    Some(plan.project(cols))
}

/// Scan aliases: the view id, suffixed when a view appears twice.
fn aliases(insts: &[ViewInstance<'_>]) -> Vec<String> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    insts
        .iter()
        .map(|i| {
            let c = seen.entry(i.view_id).or_insert(0);
            *c += 1;
            if *c == 1 {
                i.view_id.to_string()
            } else {
                format!("{}_{}", i.view_id, c)
            }
        })
        .collect()
}

/// All view instances of the candidates in `q`.
pub fn instances<'a>(q: &JoinedTreePattern, candidates: &'a [ViewDefinition], limit: usize) -> Vec<ViewInstance<'a>> {
    let mut out = Vec::new();
    for v in candidates {
        for e in embeddings(&v.pattern, q, limit) {
            out.push(ViewInstance { view_id: &v.view_id, pattern: &v.pattern, embedding: e });
        }
    }
    out
}

/// Minimal equivalent rewritings of `q` using at most `k_max` view
/// instances, with the default battery.
pub fn rewrite(q: &JoinedTreePattern, candidates: &[ViewDefinition], k_max: usize) -> Vec<Rewriting> {
    rewrite_with(q, candidates, &RewriteConfig { k_max, ..RewriteConfig::default() })
}

pub fn rewrite_with(q: &JoinedTreePattern, candidates: &[ViewDefinition], cfg: &RewriteConfig) -> Vec<Rewriting> {
    let insts = instances(q, candidates, cfg.max_embeddings);
    if insts.is_empty() {
        return Vec::new();
    }
    let docs = battery(q, &cfg.battery);
    let views: Vec<(String, JoinedTreePattern)> =
        candidates.iter().map(|v| (v.view_id.clone(), v.pattern.clone())).collect();
    let oracle = Oracle::new(q, &views, &docs);
    let mut passed: Vec<Vec<usize>> = Vec::new();
    let mut out: Vec<Rewriting> = Vec::new();
    let mut tried = 0;
    for size in 1..=cfg.k_max.min(insts.len()) {
        for combo in combinations(insts.len(), size) {
            if passed.iter().any(|p| p.iter().all(|i| combo.contains(i))) {
                continue;
            }
            if tried >= cfg.max_subsets {
                return out;
            }
            tried += 1;
            let chosen: Vec<ViewInstance<'_>> = combo.iter().map(|&i| insts[i].clone()).collect();
            let Some(plan) = build_plan(q, &chosen) else { continue };
            let plan = if oracle.check(&plan) {
                plan
            } else {
                let d = plan.dup_elim();
                if !oracle.check(&d) {
                    continue;
                }
                d
            };
            passed.push(combo.clone());
            let used_views = chosen.iter().map(|i| i.view_id.to_string()).collect();
            if !out.iter().any(|r| r.plan == plan) {
                out.push(Rewriting { plan, used_views, minimal: true });
            }
        }
    }
    out
}

/// k-subsets of 0..n in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
