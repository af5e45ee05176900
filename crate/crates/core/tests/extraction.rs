mod support;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{brute_match, random_pattern};
use vippy::bench::gen::{random_document, RandomDocSpec};
use vippy::extract::{match_many, match_pattern, Tuple};
use vippy::pattern::{tp, TreePattern};
use vippy::xml::Document;

const LABELS: &[&str] = &["a", "b", "c", "d"];
const WORDS: &[&str] = &["x", "y", "z"];

fn case(seed: u64) -> (Document, TreePattern) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = RandomDocSpec { labels: LABELS, words: WORDS, max_nodes: rand::Rng::gen_range(&mut rng, 1..=200), ..Default::default() };
    let d = Document::parse_str(&random_document(&mut rng, &spec), "r").unwrap();
    (d, random_pattern(&mut rng, LABELS, WORDS, 5))
}

#[test]
fn matches_brute_force_enumeration() {
    for seed in 0..300 {
        let (d, p) = case(seed);
        assert_eq!(match_pattern(&p, &d), brute_match(&p, &d), "seed {seed}: {p} over {}", d.root().serialize());
    }
}

#[test]
fn match_many_agrees_with_match() {
    for seed in 0..300 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
        let (d, _) = case(seed);
        let ps: Vec<TreePattern> = (0..4).map(|_| random_pattern(&mut rng, LABELS, WORDS, 5)).collect();
        let refs: Vec<&TreePattern> = ps.iter().collect();
        let many = match_many(&refs, &d);
        for (p, m) in ps.iter().zip(many) {
            assert_eq!(match_pattern(p, &d), m, "seed {seed}");
        }
    }
}

#[test]
fn output_is_in_document_order_of_first_id() {
    for seed in 0..200 {
        let (d, p) = case(seed);
        let out: Vec<Tuple> = match_pattern(&p, &d);
        let first: Vec<_> = out.iter().filter_map(|t| t.0.iter().find_map(|c| c.as_id().cloned())).collect();
        assert!(first.windows(2).all(|w| w[0] <= w[1]), "seed {seed}");
    }
}

#[test]
fn camera_style_single_tuple() {
    let mut s = String::from("<catalog>");
    for i in 0..64 {
        s.push_str(&format!("<camera_{i}><description>d</description><price>1</price><specs><sensor_type>s</sensor_type></specs><type>t</type></camera_{i}>"));
    }
    s.push_str("</catalog>");
    let d = Document::parse_str(&s, "c").unwrap();
    for i in [0, 17, 63] {
        assert_eq!(match_pattern(&tp(&format!("//catalog//camera_{i}[cont]")), &d).len(), 1);
    }
}
