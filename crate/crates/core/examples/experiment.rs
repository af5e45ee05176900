//! Runs one desk-scale experiment and prints the summary rows.
//!
//! cargo run --release --example experiment -- 6

use vippy::bench::{run_experiment, Experiment, ExperimentConfig};

fn main() {
    let exp: Experiment = std::env::args().nth(1).as_deref().unwrap_or("1").parse().expect("experiment: 1..9, dht-size, netcap, subnets");
    let cfg = ExperimentConfig::new(exp, 1);
    let report = run_experiment(&cfg).expect("desk defaults are feasible");
    for run in report.runs() {
        let line: Vec<String> = report
            .rows
            .iter()
            .filter(|r| r.run_id == run && r.peer.is_none())
            .map(|r| format!("{}={}", r.phase, r.value))
            .collect();
        println!("{run}: {}", line.join(" "));
    }
}
