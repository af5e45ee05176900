//! Indexes the sample views under each strategy and looks up candidates
//! for the sample queries.

use vippy::bench::fixtures;
use vippy::catalog::{lookup_for_query, publish_view, Strategy};
use vippy::dht::{Dht, PeerAddr};
use vippy::pattern::{embed, ViewDefinition};

fn main() {
    let views: Vec<ViewDefinition> =
        fixtures::sample_views().into_iter().map(|(n, p)| ViewDefinition::new(n, p, PeerAddr(1))).collect();
    for (qn, q) in fixtures::sample_queries() {
        let useful: Vec<&str> = views.iter().filter(|v| embed(&v.pattern, &q).is_some()).map(|v| v.view_id.as_str()).collect();
        println!("{qn} = {q}  (embeddable: {useful:?})");
        for s in Strategy::ALL {
            let mut dht = Dht::new(16);
            for v in &views {
                publish_view(&mut dht, v.holder, v, s).expect("live overlay");
            }
            let r = lookup_for_query(&mut dht, PeerAddr(0), &q, s).expect("live overlay");
            println!("  {s:<3} {:>2} lookups -> {:?}", r.lookups(), r.ids());
        }
    }
}
