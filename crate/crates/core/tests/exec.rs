use std::collections::{BTreeMap, HashMap};

use vippy::algebra::{eval_logical, LogicalPlan};
use vippy::bench::fixtures;
use vippy::dht::PeerAddr;
use vippy::exec::{execute, execute_with, place, tag_results, EventKind, Failure, PhysOp, Side, ViewStats};
use vippy::extract::Tuple;
use vippy::materialize::CostModel;
use vippy::pattern::{JoinedTreePattern, ViewDefinition};
use vippy::rewrite::{materialize, rewrite};
use vippy::xml::Document;

fn conf_setup() -> (LogicalPlan, HashMap<String, Vec<Tuple>>) {
    let q = fixtures::conf_query().pattern;
    let views = fixtures::conf_views();
    let defs: Vec<ViewDefinition> = views.iter().map(|(n, p)| ViewDefinition::new(*n, p.clone(), PeerAddr(1))).collect();
    let plan = rewrite(&q, &defs, 3).remove(0).plan;
    let docs: Vec<Document> = fixtures::CONF_DOCS.iter().map(|(u, s)| Document::parse_str(s, u).unwrap()).collect();
    let refs: Vec<&Document> = docs.iter().collect();
    let named: Vec<(String, JoinedTreePattern)> = views.iter().map(|(n, p)| (n.to_string(), p.clone())).collect();
    (plan, materialize(&named, &refs))
}

fn stats(store: &HashMap<String, Vec<Tuple>>, holders: &[(&str, u32)]) -> BTreeMap<String, ViewStats> {
    holders
        .iter()
        .map(|(v, h)| {
            let rows = &store[*v];
            let bytes = rows.iter().map(Tuple::byte_size).sum();
            (v.to_string(), ViewStats { holder: PeerAddr(*h), tuples: rows.len(), bytes })
        })
        .collect()
}

fn sorted(mut v: Vec<Tuple>) -> Vec<Tuple> {
    v.sort();
    v
}

#[test]
fn physical_matches_logical() {
    let (plan, store) = conf_setup();
    let pp = place(&plan, &stats(&store, &[("v1", 2), ("v2", 3)]), PeerAddr(9)).unwrap();
    let rep = execute(&pp, &store, &CostModel::default()).unwrap();
    let logical = eval_logical(&plan, &store).unwrap();
    assert_eq!(rep.schema, logical.schema);
    assert_eq!(sorted(rep.rows), logical.sorted_rows());
    assert!(!rep.partial);
    assert!(rep.response_time > 0);
    assert!(rep.first_result.unwrap() <= rep.response_time);
}

fn join_node(pp: &vippy::exec::PhysicalPlan) -> (PeerAddr, Side) {
    pp.operators()
        .into_iter()
        .find_map(|(_, n)| match &n.op {
            PhysOp::HashJoin { build, .. } => Some((n.peer, *build)),
            _ => None,
        })
        .unwrap()
}

#[test]
fn join_runs_at_larger_input() {
    let (plan, store) = conf_setup();
    let mut st = stats(&store, &[("v1", 2), ("v2", 3)]);
    st.get_mut("v1").unwrap().bytes = 10_000;
    st.get_mut("v2").unwrap().bytes = 10;
    let (peer, build) = join_node(&place(&plan, &st, PeerAddr(9)).unwrap());
    // v2 is the left input of the join.
    assert_eq!((peer, build), (PeerAddr(2), Side::Left));
    st.get_mut("v1").unwrap().bytes = 10;
    st.get_mut("v2").unwrap().bytes = 10_000;
    let (peer, build) = join_node(&place(&plan, &st, PeerAddr(9)).unwrap());
    assert_eq!((peer, build), (PeerAddr(3), Side::Right));
}

#[test]
fn single_view_plan_stays_at_holder() {
    let (_, store) = conf_setup();
    let v1 = &fixtures::conf_views()[0].1;
    let q = v1.clone();
    let defs = vec![ViewDefinition::new("v1", v1.clone(), PeerAddr(4))];
    let plan = rewrite(&q, &defs, 1).remove(0).plan;
    let pp = place(&plan, &stats(&store, &[("v1", 4)]), PeerAddr(9)).unwrap();
    assert!(pp.operators().iter().all(|(_, n)| n.peer == PeerAddr(4)), "{}", pp.to_text());
    let rep = execute(&pp, &store, &CostModel::default()).unwrap();
    assert_eq!(rep.rows.len(), store["v1"].len());
}

#[test]
fn empty_views_take_time() {
    let (plan, store) = conf_setup();
    let empty: HashMap<String, Vec<Tuple>> = store.keys().map(|k| (k.clone(), vec![])).collect();
    let pp = place(&plan, &stats(&empty, &[("v1", 2), ("v2", 3)]), PeerAddr(9)).unwrap();
    let rep = execute(&pp, &empty, &CostModel::default()).unwrap();
    assert!(rep.rows.is_empty());
    assert!(rep.first_result.is_none());
    assert!(rep.response_time >= 2 * CostModel::default().latency_us);
}

#[test]
fn join_emits_only_after_build() {
    let (plan, store) = conf_setup();
    let pp = place(&plan, &stats(&store, &[("v1", 2), ("v2", 3)]), PeerAddr(9)).unwrap();
    let join_id = pp.operators().iter().position(|(_, n)| matches!(n.op, PhysOp::HashJoin { .. })).unwrap();
    let rep = execute(&pp, &store, &CostModel::default()).unwrap();
    let built = rep.events.iter().find(|e| e.node == join_id && e.kind == EventKind::BuildDone).unwrap().time;
    let outs: Vec<_> = rep.events.iter().filter(|e| e.node == join_id && matches!(e.kind, EventKind::Batch { .. })).collect();
    assert!(!outs.is_empty());
    assert!(outs.iter().all(|e| e.time >= built));
}

#[test]
fn failure_marks_partial() {
    let (plan, store) = conf_setup();
    let pp = place(&plan, &stats(&store, &[("v1", 2), ("v2", 3)]), PeerAddr(9)).unwrap();
    let rep = execute_with(&pp, &store, &CostModel::default(), Some(Failure { peer: PeerAddr(3), at: 1 })).unwrap();
    assert!(rep.partial);
    assert!(rep.rows.is_empty());
}

#[test]
fn results_are_tagged() {
    let pq = fixtures::conf_query();
    let (plan, store) = conf_setup();
    let rel = eval_logical(&plan, &store).unwrap();
    let xml = tag_results(&pq.pattern, &pq.template, &rel.schema, &rel.rows);
    println!("{xml}");
    assert!(xml.starts_with(&format!("<{}>", pq.template.element)));
    assert_eq!(xml.matches(&format!("</{}>", pq.template.element)).count(), rel.rows.len());
}
