//! Writes a camera view directory, reloads it and answers the three camera
//! queries under each strategy.

use vippy::bench::fixtures::CAMERA_QUERIES;
use vippy::bench::{answer, ViewDir};
use vippy::catalog::Strategy;
use vippy::materialize::CostModel;

fn main() {
    let dir = std::env::temp_dir().join("vippy-workspace-example");
    ViewDir::camera(10, 16 << 10, 3).write(&dir).expect("writable temp dir");
    let vd = ViewDir::load(&dir).expect("just written");
    println!("{}: {} views, {} documents", dir.display(), vd.views.len(), vd.docs.len());
    for (name, q) in CAMERA_QUERIES {
        for s in Strategy::ALL {
            let o = answer(&vd, q, s, &CostModel::default(), 1).expect("valid workspace");
            let ex = o.exec.as_ref();
            println!(
                "{name} {s:<3} candidates {:?} -> {} rows, response {:?} us",
                o.candidates,
                ex.map_or(0, |e| e.rows.len()),
                ex.map(|e| e.response_time)
            );
        }
    }
}
