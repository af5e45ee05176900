//! Test documents for the equivalence oracle. Each document holds copies of
//! the query's components, some exact and some broken in small ways
//! (missing branch, relabelled node, child step stretched into a
//! descendant step, wrong constant, duplicated siblings), plus noise.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pattern::{Axis, JoinedTreePattern, NodeTest, TreePattern};
use crate::xml::{escape_attr, escape_text, Document};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatteryConfig {
    pub size: usize,
    pub max_nodes: usize,
    pub seed: u64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig { size: 20, max_nodes: 500, seed: 7 }
    }
}

#[derive(Debug, Clone, Default)]
struct Elem {
    label: String,
    attrs: Vec<(String, String)>,
    text: Vec<String>,
    children: Vec<Elem>,
}

impl Elem {
    fn new(label: &str) -> Self {
        Elem { label: label.to_string(), ..Default::default() }
    }

    fn count(&self) -> usize {
        1 + self.attrs.len() + self.text.len() + self.children.iter().map(Elem::count).sum::<usize>()
    }

    fn write(&self, out: &mut String) {
        out.push('<');
        out.push_str(&self.label);
        let mut seen = BTreeSet::new();
        for (k, v) in &self.attrs {
            if seen.insert(k.as_str()) {
                out.push_str(&format!(" {k}=\""));
                escape_attr(v, out);
                out.push('"');
            }
        }
        out.push('>');
        for t in &self.text {
            escape_text(t, out);
        }
        for c in &self.children {
            c.write(out);
        }
        out.push_str(&format!("</{}>", self.label));
    }
}

struct Gen<'q> {
    q: &'q JoinedTreePattern,
    rng: ChaCha8Rng,
    labels: Vec<String>,
    values: Vec<String>,
    /// Probability of a deliberate defect at each step.
    noise: f64,
}

impl<'q> Gen<'q> {
    fn value(&mut self) -> String {
        self.values.choose(&mut self.rng).unwrap().clone()
    }

    fn other_label(&mut self, not: &str) -> String {
        let pool: Vec<&String> = self.labels.iter().filter(|l| *l != not).collect();
        match pool.choose(&mut self.rng) {
            Some(l) => (*l).clone(),
            None => "zz".to_string(),
        }
    }

    fn instance(&mut self, comp: usize, node: usize) -> Elem {
        let t: &TreePattern = self.q.pattern(comp);
        let n = t.node(node).clone();
        let label = if self.rng.gen_bool(self.noise * 0.5) { self.other_label(&n.label) } else { n.label.clone() };
        let mut e = Elem::new(&label);
        let leaf = n.children.iter().all(|&c| t.node(c).test == NodeTest::Keyword || t.node(c).label.starts_with('@'));
        if leaf {
            let v = match &n.value_predicate {
                Some(c) if !self.rng.gen_bool(self.noise) => c.clone(),
                _ => self.value(),
            };
            e.text.push(v);
        }
        for &c in &n.children {
            let cn = t.node(c).clone();
            if self.rng.gen_bool(self.noise * 0.6) {
                continue;
            }
            if cn.test == NodeTest::Keyword {
                let w = if self.rng.gen_bool(self.noise) { "other".to_string() } else { cn.label.clone() };
                let filler = self.value();
                if cn.axis == Axis::Descendant && self.rng.gen_bool(0.3) {
                    let mut mid = Elem::new(&self.other_label(""));
                    mid.text.push(format!("{filler} {w}"));
                    e.children.push(mid);
                } else {
                    e.text.push(format!(" {w} {filler}"));
                }
                continue;
            }
            if let Some(name) = cn.label.strip_prefix('@') {
                let v = match &cn.value_predicate {
                    Some(c) if !self.rng.gen_bool(self.noise) => c.clone(),
                    _ => self.value(),
                };
                e.attrs.push((name.to_string(), v));
                continue;
            }
            let copies = if self.rng.gen_bool(0.3) { 2 } else { 1 };
            for _ in 0..copies {
                let sub = self.instance(comp, c);
                let stretch = match cn.axis {
                    Axis::Descendant => self.rng.gen_bool(0.5),
                    Axis::Child => self.rng.gen_bool(self.noise * 0.5),
                };
                if stretch {
                    let mut mid = Elem::new(&self.other_label(&cn.label));
                    mid.children.push(sub);
                    e.children.push(mid);
                } else {
                    e.children.push(sub);
                }
            }
        }
        if self.rng.gen_bool(self.noise) {
            let mut extra = Elem::new(&self.other_label(""));
            extra.text.push(self.value());
            let at = self.rng.gen_range(0..=e.children.len());
            e.children.insert(at, extra);
        }
        e
    }
}

/// Labels and constants of `q`, plus the filler alphabet used for values.
fn alphabet(q: &JoinedTreePattern) -> (Vec<String>, Vec<String>) {
    let mut labels = BTreeSet::new();
    let mut values: BTreeSet<String> = ["v0", "v1"].iter().map(|s| s.to_string()).collect();
    for t in q.patterns() {
        for n in t.nodes() {
            if n.test == NodeTest::Element && !n.label.starts_with('@') {
                labels.insert(n.label.clone());
            }
            if let Some(c) = &n.value_predicate {
                values.insert(c.clone());
            }
        }
    }
    (labels.into_iter().collect(), values.into_iter().collect())
}

/// `cfg.size` documents for `q`, each at most `cfg.max_nodes` nodes.
pub fn battery(q: &JoinedTreePattern, cfg: &BatteryConfig) -> Vec<Document> {
    let (labels, values) = alphabet(q);
    let mut g = Gen { q, rng: ChaCha8Rng::seed_from_u64(cfg.seed), labels, values, noise: 0.0 };
    let mut docs = Vec::with_capacity(cfg.size);
    for k in 0..cfg.size {
        // The first document is an exact image; later ones get noisier.
        g.noise = if k == 0 { 0.0 } else { 0.05 + 0.25 * (k % 5) as f64 / 4.0 };
        let rooted = q.pattern(0).root_axis() == Axis::Child;
        let mut root = if rooted { Elem::new(&q.pattern(0).root().label) } else { Elem::new("r") };
        let mut count = root.count();
        for comp in 0..q.patterns().len() {
            let copies = if k == 0 { 1 } else { g.rng.gen_range(1..=3) };
            for _ in 0..copies {
                let inst = if rooted && comp == 0 {
                    let mut e = g.instance(0, 0);
                    e.label = String::new();
                    e
                } else {
                    g.instance(comp, 0)
                };
                let n = inst.count();
                if count + n > cfg.max_nodes {
                    continue;
                }
                count += n;
                if inst.label.is_empty() {
                    root.attrs.extend(inst.attrs);
                    root.text.extend(inst.text);
                    root.children.extend(inst.children);
                } else if g.rng.gen_bool(0.3) {
                    let mut mid = Elem::new(&g.other_label(""));
                    mid.children.push(inst);
                    root.children.push(mid);
                    count += 1;
                } else {
                    root.children.push(inst);
                }
            }
        }
        while k > 0 && count + 2 <= cfg.max_nodes && g.rng.gen_bool(0.5) {
            let mut extra = Elem::new(&g.other_label(""));
            extra.text.push(g.value());
            count += extra.count();
            let at = g.rng.gen_range(0..=root.children.len());
            root.children.insert(at, extra);
        }
        let mut s = String::new();
        root.write(&mut s);
        docs.push(Document::parse_str(&s, &format!("b{k}")).expect("generated XML parses"));
    }
    docs
}
