//! Key placement, routing hops and churn on the simulated overlay.

use vippy::dht::{Dht, PeerAddr};

fn main() {
    let mut dht = Dht::new(64);
    for k in ["book", "author", "book.author", "paper.year"] {
        let r = dht.put(PeerAddr(0), k, k.as_bytes()).expect("live overlay");
        println!("{k:<12} -> {} in {} hops", r.responsible, r.hops);
    }
    let before = dht.responsible_peer("book").expect("live overlay");
    dht.remove_peer(before.addr);
    let (vals, r) = dht.get(PeerAddr(5), "book").expect("live overlay");
    println!("after {} left, `book` lives at {} ({} values)", before.addr, r.responsible, vals.len());
    for n in [16, 64, 256] {
        let d = Dht::new(n);
        let worst = (0..n).map(|p| d.hops(PeerAddr(0), PeerAddr(p)).unwrap()).max().unwrap();
        println!("{n} peers: at most {worst} hops");
    }
}
