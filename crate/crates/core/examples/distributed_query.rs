//! Places a rewriting on peers, runs it on the timed execution model and
//! tags the results.

use std::collections::BTreeMap;

use vippy::bench::fixtures;
use vippy::dht::PeerAddr;
use vippy::exec::{execute_with, place, tag_results, EventKind, Failure, ViewStats};
use vippy::extract::Tuple;
use vippy::materialize::CostModel;
use vippy::pattern::{JoinedTreePattern, ViewDefinition};
use vippy::rewrite::{materialize, rewrite};
use vippy::xml::Document;

fn main() {
    let parsed = fixtures::conf_query();
    let views: Vec<ViewDefinition> =
        fixtures::conf_views().into_iter().zip([1, 2]).map(|((n, p), h)| ViewDefinition::new(n, p, PeerAddr(h))).collect();
    let docs: Vec<Document> = fixtures::CONF_DOCS.iter().map(|(u, s)| Document::parse_str(s, u).unwrap()).collect();
    let named: Vec<(String, JoinedTreePattern)> = views.iter().map(|v| (v.view_id.clone(), v.pattern.clone())).collect();
    let store = materialize(&named, &docs.iter().collect::<Vec<_>>());
    let stats: BTreeMap<String, ViewStats> = views
        .iter()
        .map(|v| {
            let rows = &store[&v.view_id];
            (v.view_id.clone(), ViewStats { holder: v.holder, tuples: rows.len(), bytes: rows.iter().map(Tuple::byte_size).sum() })
        })
        .collect();
    let r = rewrite(&parsed.pattern, &views, 3).into_iter().next().expect("rewritable");
    let pp = place(&r.plan, &stats, PeerAddr(3)).expect("stats for every view");
    print!("{}", pp.to_text());
    let cost = CostModel::default();
    for failure in [None, Some(Failure { peer: PeerAddr(2), at: 1 })] {
        let ex = execute_with(&pp, &store, &cost, failure).expect("well-typed");
        println!("\nfailure {failure:?}: response {} us, first result {:?}, partial {}", ex.response_time, ex.first_result, ex.partial);
        for e in &ex.events {
            if matches!(e.kind, EventKind::BuildDone | EventKind::Result { .. }) {
                println!("  {:>7} us {} #{} {} {:?}", e.time, e.peer, e.node, e.op, e.kind);
            }
        }
        println!("{}", tag_results(&parsed.pattern, &parsed.template, &ex.schema, &ex.rows));
    }
}
