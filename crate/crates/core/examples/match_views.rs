//! Parses the bibliography document and evaluates each sample view over it.

use vippy::algebra::evaluate;
use vippy::bench::fixtures;
use vippy::xml::Document;

fn main() {
    let d = Document::parse_str(fixtures::BIBLIOGRAPHY, "bib").expect("well-formed");
    println!("{} nodes, {} bytes", d.len(), d.size_bytes());
    for (name, v) in fixtures::sample_views() {
        let rows = evaluate(&v, &[&d]);
        println!("{name} = {v}: {} tuples", rows.len());
        for t in rows {
            println!("  {t:?}");
        }
    }
}
