use std::collections::BTreeMap;

use proptest::prelude::*;
use vippy::algebra::{eval_logical, ColumnInfo, LogicalPlan, Pred, Schema};
use vippy::bench::fixtures;
use vippy::dht::PeerAddr;
use vippy::extract::{Cell, Tuple};
use vippy::pattern::{tp, Annotation, ViewDefinition};
use vippy::rewrite::rewrite;
use vippy::xml::StructuralId;

fn canonical(schema: &Schema, rows: &[Tuple]) -> String {
    let mut out = String::new();
    out.push_str(&schema.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(" | "));
    out.push('\n');
    for t in rows {
        let cells: Vec<String> = t
            .0
            .iter()
            .map(|c| match c {
                Cell::Id(i) => i.to_string(),
                Cell::Val(s) | Cell::Cont(s) => s.to_string(),
            })
            .collect();
        out.push_str(&cells.join(" | "));
        out.push('\n');
    }
    out
}

fn book_source() -> (LogicalPlan, BTreeMap<String, Vec<Tuple>>) {
    let rows = fixtures::NAV_INPUT
        .iter()
        .map(|(p, c)| Tuple(vec![Cell::Id(StructuralId::new("bib", p.to_vec())), Cell::cont(c)]))
        .collect();
    let schema = vec![ColumnInfo::new("book.ID", Annotation::Id), ColumnInfo::new("book.cont", Annotation::Cont)];
    (LogicalPlan::scan("op", schema), BTreeMap::from([("op".to_string(), rows)]))
}

#[test]
fn nav_golden_output() {
    let (scan, src) = book_source();
    let plan = scan.nav("book.cont", tp("//author[cont]"), "n1");
    let r = eval_logical(&plan, &src).unwrap();
    let expected = "\
book.ID | book.cont | n1.author.cont
bib#1.1 | <book><author>author1</author></book> | <author>author1</author>
bib#1.3 | <book><author>author2</author><author>author3</author></book> | <author>author2</author>
bib#1.3 | <book><author>author2</author><author>author3</author></book> | <author>author3</author>
";
    assert_eq!(canonical(&r.schema, &r.rows), expected);
}

#[test]
fn nav_with_single_match_keeps_cardinality() {
    let (scan, src) = book_source();
    let one = scan.select(vec![Pred::eq_const("book.ID", "x")]);
    assert!(one.schema().is_err(), "ID compared with a constant must not type-check");
    let (scan, _) = book_source();
    let plan = scan.nav("book.cont", tp("/book"), "n1");
    let r = eval_logical(&plan, &src).unwrap();
    // Fragments are matched below their root: `/book` never matches.
    assert!(r.is_empty());
    let (scan, _) = book_source();
    let plan = scan.nav("book.cont", tp("//author[val]"), "n1").dup_elim();
    assert_eq!(eval_logical(&plan, &src).unwrap().len(), 3);
}

#[test]
fn nav_rejects_id_annotations_and_wrong_columns() {
    let (scan, _) = book_source();
    assert!(scan.clone().nav("book.cont", tp("//author[ID]"), "n1").schema().is_err());
    assert!(scan.clone().nav("book.ID", tp("//author"), "n1").schema().is_err());
    assert!(scan.nav("nope", tp("//author"), "n1").schema().is_err());
}

#[test]
fn plan_text_round_trips() {
    let q = fixtures::conf_query().pattern;
    let views: Vec<ViewDefinition> =
        fixtures::conf_views().into_iter().map(|(n, p)| ViewDefinition::new(n, p, PeerAddr(1))).collect();
    let r = &rewrite(&q, &views, 3)[0];
    let text = r.plan.to_text();
    assert_eq!(LogicalPlan::from_text(&text).unwrap(), r.plan);
    let (scan, _) = book_source();
    let p = scan
        .nav("book.cont", tp("//author[val]"), "n1")
        .select(vec![Pred::eq_const("n1.author.val", "it's \"x\"")])
        .sort(vec!["book.ID".into()])
        .dup_elim()
        .project(vec![("n1.author.val".into(), "a".into())]);
    assert_eq!(LogicalPlan::from_text(&p.to_text()).unwrap(), p);
}

#[test]
fn redundant_views_never_appear_in_minimal_rewritings() {
    let q = fixtures::conf_query().pattern;
    let mut views: Vec<ViewDefinition> =
        fixtures::conf_views().into_iter().map(|(n, p)| ViewDefinition::new(n, p, PeerAddr(1))).collect();
    let extra = views[0].pattern.clone();
    views.push(ViewDefinition::new("v3", extra, PeerAddr(1)));
    let rs = rewrite(&q, &views, 3);
    assert!(!rs.is_empty());
    for r in &rs {
        assert!(r.minimal);
        assert_eq!(r.used_views.len(), 2, "{:?}", r.used_views);
    }
}

fn id(path: &[u32]) -> StructuralId {
    StructuralId::new("d", path.to_vec())
}

/// Reference test on the printed form: `b` is `a` followed by one more step.
fn printed_parent(a: &StructuralId, b: &StructuralId) -> bool {
    let (sa, sb) = (a.to_string(), b.to_string());
    sb.strip_prefix(&format!("{sa}.")).is_some_and(|rest| !rest.contains('.'))
}

fn printed_ancestor(a: &StructuralId, b: &StructuralId) -> bool {
    let (sa, sb) = (a.to_string(), b.to_string());
    sb.starts_with(&format!("{sa}."))
}

fn id_pairs() -> impl Strategy<Value = Vec<(Vec<u32>, Vec<u32>)>> {
    let path = prop::collection::vec(1u32..4, 1..5);
    prop::collection::vec((path.clone(), path), 1..20)
}

fn val_rows(width: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    prop::collection::vec(prop::collection::vec(0u8..4, width), 0..12)
}

fn rel(name: &str, cols: &[&str], rows: &[Vec<u8>]) -> (LogicalPlan, Vec<Tuple>) {
    let schema = cols.iter().map(|c| ColumnInfo::new(format!("{name}.{c}"), Annotation::Val)).collect();
    let rows = rows.iter().map(|r| Tuple(r.iter().map(|v| Cell::val(&v.to_string())).collect())).collect();
    (LogicalPlan::scan(name, schema), rows)
}

fn sorted(mut v: Vec<Tuple>) -> Vec<Tuple> {
    v.sort();
    v
}

proptest! {
    #[test]
    fn structural_selections_agree_with_dewey_tests(pairs in id_pairs()) {
        let schema = vec![ColumnInfo::new("a.ID", Annotation::Id), ColumnInfo::new("b.ID", Annotation::Id)];
        let rows: Vec<Tuple> = pairs.iter().map(|(a, b)| Tuple(vec![Cell::Id(id(a)), Cell::Id(id(b))])).collect();
        let src = BTreeMap::from([("r".to_string(), rows.clone())]);
        let scan = LogicalPlan::scan("r", schema);
        let par = eval_logical(&scan.clone().select(vec![Pred::Parent("a.ID".into(), "b.ID".into())]), &src).unwrap();
        let anc = eval_logical(&scan.select(vec![Pred::Ancestor("a.ID".into(), "b.ID".into())]), &src).unwrap();
        let want_par: Vec<Tuple> = rows.iter().filter(|t| printed_parent(t.0[0].as_id().unwrap(), t.0[1].as_id().unwrap())).cloned().collect();
        let want_anc: Vec<Tuple> = rows.iter().filter(|t| printed_ancestor(t.0[0].as_id().unwrap(), t.0[1].as_id().unwrap())).cloned().collect();
        prop_assert_eq!(par.rows, want_par);
        prop_assert_eq!(anc.rows, want_anc);
    }

    #[test]
    fn join_is_selection_over_product(l in val_rows(2), r in val_rows(2)) {
        let (ls, lrows) = rel("l", &["k", "x"], &l);
        let (rs, rrows) = rel("r", &["k", "y"], &r);
        let src = BTreeMap::from([("l".to_string(), lrows), ("r".to_string(), rrows)]);
        let join = ls.clone().join(rs.clone(), vec![("l.k".into(), "r.k".into())]);
        let sel = ls.product(rs).select(vec![Pred::eq_cols("l.k", "r.k")]);
        prop_assert_eq!(sorted(eval_logical(&join, &src).unwrap().rows), sorted(eval_logical(&sel, &src).unwrap().rows));
    }

    #[test]
    fn selections_commute_and_split(rows in val_rows(3), a in 0u8..4, b in 0u8..4) {
        let (s, data) = rel("t", &["x", "y", "z"], &rows);
        let src = BTreeMap::from([("t".to_string(), data)]);
        let p = Pred::eq_const("t.x", &a.to_string());
        let q = Pred::eq_const("t.y", &b.to_string());
        let both = s.clone().select(vec![p.clone(), q.clone()]);
        let pq = s.clone().select(vec![p.clone()]).select(vec![q.clone()]);
        let qp = s.select(vec![q]).select(vec![p]);
        let e = |plan: &LogicalPlan| eval_logical(plan, &src).unwrap().rows;
        prop_assert_eq!(e(&both), e(&pq));
        prop_assert_eq!(e(&pq), e(&qp));
    }

    #[test]
    fn dup_elim_is_idempotent_and_projection_keeps_cardinality(rows in val_rows(2)) {
        let (s, data) = rel("t", &["x", "y"], &rows);
        let src = BTreeMap::from([("t".to_string(), data)]);
        let once = eval_logical(&s.clone().dup_elim(), &src).unwrap().rows;
        let twice = eval_logical(&s.clone().dup_elim().dup_elim(), &src).unwrap().rows;
        prop_assert_eq!(&once, &twice);
        let mut uniq = rows.clone();
        uniq.sort();
        uniq.dedup();
        prop_assert_eq!(once.len(), uniq.len());
        let proj = eval_logical(&s.project_names(&["t.y"]), &src).unwrap();
        prop_assert_eq!(proj.len(), rows.len());
    }

    #[test]
    fn sort_orders_rows_and_preserves_them(rows in val_rows(2)) {
        let (s, data) = rel("t", &["x", "y"], &rows);
        let src = BTreeMap::from([("t".to_string(), data.clone())]);
        let out = eval_logical(&s.sort(vec!["t.y".into(), "t.x".into()]), &src).unwrap().rows;
        prop_assert!(out.windows(2).all(|w| (&w[0].0[1], &w[0].0[0]) <= (&w[1].0[1], &w[1].0[0])));
        prop_assert_eq!(sorted(out), sorted(data));
    }
}
