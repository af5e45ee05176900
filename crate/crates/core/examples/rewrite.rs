//! Rewrites the conference query over its two views and checks the plan on
//! the hand-built documents.

use vippy::algebra::evaluate;
use vippy::bench::fixtures;
use vippy::dht::PeerAddr;
use vippy::pattern::{JoinedTreePattern, ViewDefinition};
use vippy::rewrite::{equivalence_oracle, rewrite};
use vippy::xml::Document;

fn main() {
    let q = fixtures::conf_query().pattern;
    let views: Vec<ViewDefinition> =
        fixtures::conf_views().into_iter().map(|(n, p)| ViewDefinition::new(n, p, PeerAddr(1))).collect();
    println!("q = {q}");
    for v in &views {
        println!("{} = {}", v.view_id, v.pattern);
    }
    for r in rewrite(&q, &views, 3) {
        println!("\n{} (minimal: {}, views {:?})", r.plan, r.minimal, r.used_views);
        print!("{}", r.plan.to_text());
        let docs: Vec<Document> = fixtures::CONF_DOCS.iter().map(|(u, s)| Document::parse_str(s, u).unwrap()).collect();
        let named: Vec<(String, JoinedTreePattern)> = views.iter().map(|v| (v.view_id.clone(), v.pattern.clone())).collect();
        let refs: Vec<&Document> = docs.iter().collect();
        println!("answers: {}, equivalent on fixture: {}", evaluate(&q, &refs).len(), equivalence_oracle(&q, &r.plan.clone().dup_elim(), &named, &docs));
    }
}
