//! Simulates view materialization: four consumers, one publisher, with
//! sequential and parallel sending.

use std::sync::Arc;

use vippy::bench::gen::{gen_camera_doc, CameraDoc};
use vippy::dht::{Dht, PeerAddr};
use vippy::materialize::{scan_view, CostModel, ReceivePolicy, SendMode, SendPolicy, Simulation};
use vippy::pattern::{jp, ViewDefinition};
use vippy::xml::Document;

fn main() {
    let doc = Arc::new(Document::parse_str(&gen_camera_doc(&CameraDoc::new(1 << 20)), "cams").expect("generated"));
    for mode in [SendMode::Sequential, SendMode::Parallel] {
        let mut sim = Simulation::new(Dht::new(8), CostModel::default(), SendPolicy { mode }, ReceivePolicy::default(), 1);
        let views: Vec<ViewDefinition> = (1..=4)
            .map(|k| ViewDefinition::new(format!("v{k}"), jp(&format!("//catalog//camera_{k}[cont]")), PeerAddr(k)))
            .collect();
        for v in &views {
            sim.schedule_view(0, v.clone());
        }
        sim.schedule_document(1_000_000, PeerAddr(0), doc.clone());
        let (rep, stores) = sim.run();
        let c = &rep.clock;
        println!(
            "{mode:?}: materialization {} us (extraction {} us, exchange {} us, storage {} us)",
            c.materialization_time(),
            c.extraction,
            c.exchange,
            c.storage
        );
        for v in &views {
            println!("  {}: {} tuples at {}", v.view_id, scan_view(v, &stores).len(), v.holder);
        }
    }
}
