mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::random_pattern;
use vippy::bench::exp8::{gen_exp8_family, Exp8Family, QUERY_NODES};
use vippy::bench::fixtures;
use vippy::catalog::{lookup_for_document, lookup_for_query, publish_view, Strategy};
use vippy::dht::{Dht, PeerAddr};
use vippy::pattern::{embed, height, labels, leaf_count, Annotation, JoinedTreePattern, TreePattern, ViewDefinition};
use vippy::xml::Document;

fn catalog(views: &[ViewDefinition], strategy: Strategy, peers: u32) -> Dht {
    let mut dht = Dht::new(peers);
    for v in views {
        publish_view(&mut dht, v.holder, v, strategy).unwrap();
    }
    dht
}

fn sample_defs() -> Vec<ViewDefinition> {
    fixtures::sample_views().into_iter().enumerate().map(|(i, (n, p))| ViewDefinition::new(n, p, PeerAddr(i as u32 % 8))).collect()
}

fn retrieved(strategy: Strategy, q: &str) -> Vec<String> {
    let views = sample_defs();
    let mut dht = catalog(&views, strategy, 16);
    let q = fixtures::sample_queries().into_iter().find(|(n, _)| *n == q).unwrap().1;
    lookup_for_query(&mut dht, PeerAddr(9), &q, strategy).unwrap().ids().into_iter().collect()
}

fn names(s: &[&str]) -> Vec<String> {
    s.iter().map(|x| x.to_string()).collect()
}

#[test]
fn label_index_retrieves_every_sample_view_for_q1() {
    assert_eq!(retrieved(Strategy::Li, "q1"), names(&["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8"]));
}

#[test]
fn leaf_path_index_prunes_unrelated_views_for_q1() {
    let got: BTreeSet<String> = retrieved(Strategy::Lpi, "q1").into_iter().collect();
    for v in ["v3", "v4", "v7"] {
        assert!(!got.contains(v), "{v} in {got:?}");
    }
}

#[test]
fn q2_lookups_per_strategy() {
    assert_eq!(retrieved(Strategy::Rli, "q2"), names(&["v1", "v2", "v6", "v7", "v8"]));
    assert_eq!(retrieved(Strategy::Rpi, "q2"), names(&["v1", "v2", "v6", "v8"]));
    assert_eq!(retrieved(Strategy::Lpi, "q2"), names(&["v5", "v6", "v8"]));
}

#[test]
fn bibliography_document_finds_all_views() {
    let views = sample_defs();
    let mut dht = catalog(&views, Strategy::Lpi, 16);
    let d = Document::parse_str(fixtures::BIBLIOGRAPHY, "bib").unwrap();
    let got: Vec<String> = lookup_for_document(&mut dht, PeerAddr(3), &d).unwrap().ids().into_iter().collect();
    assert_eq!(got, names(&["v1", "v2", "v3", "v4", "v5", "v6", "v7", "v8"]));
}

#[test]
fn unrelated_document_finds_nothing() {
    let views = sample_defs();
    let mut dht = catalog(&views, Strategy::Li, 16);
    let d = Document::parse_str("<catalog><camera>x</camera></catalog>", "c").unwrap();
    assert!(lookup_for_document(&mut dht, PeerAddr(3), &d).unwrap().views.is_empty());
}

fn family() -> Exp8Family {
    gen_exp8_family(7)
}

#[test]
fn generated_query_has_thirty_labels_and_path_count() {
    let f = family();
    let q = f.q();
    assert_eq!(labels(q).len(), QUERY_NODES);
    let mut dht = catalog(&f.view_defs(), Strategy::Li, 250);
    for s in [Strategy::Li, Strategy::Rli] {
        assert_eq!(lookup_for_query(&mut dht, PeerAddr(0), q, s).unwrap().lookups(), 30, "{s}");
    }
    let sp = independent_sub_paths(q);
    for s in [Strategy::Lpi, Strategy::Rpi] {
        assert_eq!(lookup_for_query(&mut dht, PeerAddr(0), q, s).unwrap().lookups(), sp.len(), "{s}");
    }
    assert!(sp.len() <= leaf_count(q) << height(q), "{} > {} * 2^{}", sp.len(), leaf_count(q), height(q));
}

#[test]
fn every_embeddable_family_view_is_retrieved() {
    let f = family();
    let views = f.view_defs();
    let want: BTreeSet<String> = f.embeddable().iter().map(|v| v.view_id.clone()).collect();
    assert!(!want.is_empty());
    let mut sizes = Vec::new();
    for s in Strategy::ALL {
        let mut dht = catalog(&views, s, 250);
        let got = lookup_for_query(&mut dht, PeerAddr(0), f.q(), s).unwrap().ids();
        let missing: Vec<_> = want.difference(&got).collect();
        assert!(missing.is_empty(), "{s} misses {missing:?}");
        sizes.push((s, got.len()));
    }
    let size = |x: Strategy| sizes.iter().find(|(s, _)| *s == x).unwrap().1;
    assert!(size(Strategy::Lpi) <= size(Strategy::Li));
    assert!(size(Strategy::Rpi) <= size(Strategy::Rli));
}

/// Leaf paths by climbing parent links, then every non-empty subsequence.
fn independent_sub_paths(q: &JoinedTreePattern) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    for t in q.patterns() {
        for (i, n) in t.nodes().iter().enumerate() {
            if !n.children.is_empty() {
                continue;
            }
            let mut path = Vec::new();
            let mut at = Some(i);
            while let Some(k) = at {
                path.push(t.node(k).label.clone());
                at = t.node(k).parent;
            }
            path.reverse();
            for mask in 1u64..(1 << path.len()) {
                out.insert((0..path.len()).filter(|b| mask >> b & 1 == 1).map(|b| path[b].clone()).collect());
            }
        }
    }
    out
}

fn leaf_path_lengths(q: &JoinedTreePattern) -> Vec<usize> {
    q.patterns().iter().flat_map(|t| t.nodes().iter().filter(|n| n.children.is_empty()).map(|n| n.depth + 1)).collect()
}

const LABELS: &[&str] = &["a", "b", "c", "d", "e"];
const WORDS: &[&str] = &["x", "y"];

fn returning(mut t: TreePattern) -> TreePattern {
    if t.annotated().next().is_none() {
        t = t.with_annotation(0, Annotation::Id);
    }
    t
}

fn random_catalog(seed: u64) -> (JoinedTreePattern, Vec<ViewDefinition>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = JoinedTreePattern::single(random_pattern(&mut rng, LABELS, WORDS, 7));
    let views = (0..12)
        .map(|i| {
            let p = returning(random_pattern(&mut rng, LABELS, WORDS, 3));
            ViewDefinition::new(format!("v{i}"), JoinedTreePattern::single(p), PeerAddr(i % 6))
        })
        .collect();
    (q, views)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lookups_are_complete_on_random_catalogs(seed in any::<u64>()) {
        let (q, views) = random_catalog(seed);
        let want: BTreeSet<String> = views.iter().filter(|v| embed(&v.pattern, &q).is_some()).map(|v| v.view_id.clone()).collect();
        for s in Strategy::ALL {
            let mut dht = catalog(&views, s, 12);
            let got = lookup_for_query(&mut dht, PeerAddr(1), &q, s).unwrap().ids();
            prop_assert!(want.is_subset(&got), "{} missed {:?} for {}", s, want.difference(&got).collect::<Vec<_>>(), q);
        }
    }

    #[test]
    fn lookup_count_law(seed in any::<u64>()) {
        let (q, views) = random_catalog(seed);
        let sp = independent_sub_paths(&q);
        let mut keys: BTreeSet<String> = BTreeSet::new();
        for t in q.patterns() {
            for n in t.nodes() {
                keys.insert(n.label.clone());
            }
        }
        for s in Strategy::ALL {
            let mut dht = catalog(&views, s, 12);
            let n = lookup_for_query(&mut dht, PeerAddr(1), &q, s).unwrap().lookups();
            match s {
                Strategy::Li | Strategy::Rli => prop_assert_eq!(n, keys.len()),
                Strategy::Lpi | Strategy::Rpi => prop_assert_eq!(n, sp.len()),
            }
        }
        let lens = leaf_path_lengths(&q);
        let per_path: usize = lens.iter().map(|l| (1usize << l) - 1).sum();
        prop_assert!(sp.len() <= per_path);
        prop_assert!(per_path <= lens.len() << lens.iter().max().copied().unwrap_or(0));
    }
}
