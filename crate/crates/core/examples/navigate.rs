//! The nav operator: evaluates `//author` inside each book fragment.

use std::collections::BTreeMap;

use vippy::algebra::{eval_logical, ColumnInfo, LogicalPlan};
use vippy::bench::fixtures::NAV_INPUT;
use vippy::extract::{Cell, Tuple};
use vippy::pattern::{tp, Annotation};
use vippy::xml::StructuralId;

fn main() {
    let rows: Vec<Tuple> =
        NAV_INPUT.iter().map(|(p, c)| Tuple(vec![Cell::Id(StructuralId::new("bib", p.to_vec())), Cell::cont(c)])).collect();
    let schema = vec![ColumnInfo::new("book.ID", Annotation::Id), ColumnInfo::new("book.cont", Annotation::Cont)];
    let src = BTreeMap::from([("op".to_string(), rows)]);
    let plan = LogicalPlan::scan("op", schema).nav("book.cont", tp("//author[cont]"), "n1");
    print!("{}", plan.to_text());
    let out = eval_logical(&plan, &src).expect("well-typed");
    println!("{}", out.schema.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(" | "));
    for t in out.rows {
        println!("{t:?}");
    }
}
