//! Seeded document generators.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::xml::escape_text;

/// Shape knobs for [`random_document`].
#[derive(Debug, Clone)]
pub struct RandomDocSpec<'a> {
    pub labels: &'a [&'a str],
    pub words: &'a [&'a str],
    pub max_nodes: usize,
    pub max_depth: usize,
    pub max_fanout: usize,
    /// Probability that an element gets a text child.
    pub text_prob: f64,
    /// Probability that an element gets an attribute.
    pub attr_prob: f64,
}

impl Default for RandomDocSpec<'_> {
    fn default() -> Self {
        RandomDocSpec {
            labels: &["a", "b", "c", "d"],
            words: &["x", "y", "z"],
            max_nodes: 200,
            max_depth: 6,
            max_fanout: 4,
            text_prob: 0.3,
            attr_prob: 0.1,
        }
    }
}

/// A random tree as XML text; at most `max_nodes` nodes counting text and
/// attribute nodes.
pub fn random_document<R: Rng>(rng: &mut R, spec: &RandomDocSpec<'_>) -> String {
    let mut out = String::new();
    let mut budget = spec.max_nodes.max(1);
    let root = spec.labels.choose(rng).unwrap();
    write_elem(rng, spec, root, 1, &mut budget, &mut out);
    out
}

fn write_elem<R: Rng>(rng: &mut R, spec: &RandomDocSpec<'_>, label: &str, depth: usize, budget: &mut usize, out: &mut String) {
    *budget -= 1;
    out.push('<');
    out.push_str(label);
    if *budget > 0 && rng.gen_bool(spec.attr_prob) {
        *budget -= 1;
        let w = spec.words.choose(rng).unwrap();
        out.push_str(&format!(" k=\"{w}\""));
    }
    let mut body = String::new();
    if *budget > 0 && rng.gen_bool(spec.text_prob) {
        *budget -= 1;
        let n = rng.gen_range(1..=2);
        let words: Vec<&str> = (0..n).map(|_| *spec.words.choose(rng).unwrap()).collect();
        escape_text(&words.join(" "), &mut body);
    }
    if depth < spec.max_depth {
        let kids = rng.gen_range(0..=spec.max_fanout);
        for _ in 0..kids {
            if *budget == 0 {
                break;
            }
            let l = spec.labels.choose(rng).unwrap();
            write_elem(rng, spec, l, depth + 1, budget, &mut body);
        }
    }
    if body.is_empty() {
        out.push_str("/>");
    } else {
        out.push('>');
        out.push_str(&body);
        out.push_str("</");
        out.push_str(label);
        out.push('>');
    }
}

const WORDS: [&str; 12] = ["lens", "zoom", "sharp", "bright", "compact", "grip", "shutter", "frame", "battery", "flash", "mount", "focus"];

/// Camera element naming in [`CameraDoc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraLabels {
    /// `camera_1` .. `camera_n`.
    Numbered,
    /// Every camera is `camera`.
    Uniform,
}

/// The controlled catalog document: `n` cameras under one root, each with
/// description, price, specs/sensor_type and type children. The size is
/// reached by padding descriptions.
#[derive(Debug, Clone)]
pub struct CameraDoc {
    pub root: String,
    pub cameras: usize,
    pub labels: CameraLabels,
    pub target_bytes: usize,
    pub seed: u64,
}

impl CameraDoc {
    pub fn new(target_bytes: usize) -> Self {
        CameraDoc { root: "catalog".into(), cameras: 64, labels: CameraLabels::Numbered, target_bytes, seed: 0 }
    }

    /// One `camera` child.
    pub fn single(target_bytes: usize) -> Self {
        CameraDoc { cameras: 1, labels: CameraLabels::Uniform, ..CameraDoc::new(target_bytes) }
    }

    pub fn uniform(mut self) -> Self {
        self.labels = CameraLabels::Uniform;
        self
    }

    pub fn root(mut self, r: impl Into<String>) -> Self {
        self.root = r.into();
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }
}

/// Words `p{k}n{j}` naming the part `j` of `k` equal parts that camera
/// `i` (0-based, of 64) falls in, for k = 1, 2, 4 .. 64.
pub fn partition_tokens(i: usize, n: usize) -> String {
    let mut out = Vec::new();
    let mut k = 1;
    while k <= 64 {
        out.push(format!("p{k}n{}", i * k / n.max(1)));
        k *= 2;
    }
    out.join(" ")
}

pub fn gen_camera_doc(spec: &CameraDoc) -> String {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
    let label = |i: usize| match spec.labels {
        CameraLabels::Numbered => format!("camera_{}", i + 1),
        CameraLabels::Uniform => "camera".to_string(),
    };
    let parts: Vec<(String, String)> = (0..spec.cameras)
        .map(|i| {
            let l = label(i);
            let sensor = if i % 2 == 0 { "CMOS" } else { "CCD" };
            let open = format!("<{l}><description>");
            let close = format!(
                "</description><price>{}</price><specs><sensor_type>{sensor}</sensor_type></specs><type>{}</type></{l}>",
                100 + 7 * i,
                partition_tokens(i, spec.cameras)
            );
            (open, close)
        })
        .collect();
    let head = format!("<{}>", spec.root);
    let tail = format!("</{}>", spec.root);
    let skeleton = head.len() + tail.len() + parts.iter().map(|(a, b)| a.len() + b.len()).sum::<usize>();
    let pad = spec.target_bytes.saturating_sub(skeleton);
    let n = spec.cameras.max(1);
    let mut out = String::with_capacity(skeleton + pad);
    out.push_str(&head);
    for (i, (open, close)) in parts.iter().enumerate() {
        out.push_str(open);
        let len = pad / n + usize::from(i < pad % n);
        filler(&mut rng, len, &mut out);
        out.push_str(close);
    }
    out.push_str(&tail);
    out
}

/// Exactly `len` bytes of space-separated words.
fn filler<R: Rng>(rng: &mut R, len: usize, out: &mut String) {
    let start = out.len();
    while out.len() - start < len {
        if out.len() > start {
            out.push(' ');
        }
        out.push_str(WORDS.choose(rng).unwrap());
    }
    out.truncate(start + len);
    // A trailing space would be trimmed from the value; end on a letter.
    if out.ends_with(' ') {
        out.pop();
        out.push('x');
    }
}

/// Document for the multi-view extraction run: repeated groups holding
/// one `t1` .. `t{k}` element each, so every `//t{i}` view gets the same
/// number of tuples.
pub fn gen_tagged_doc(k: usize, target_bytes: usize) -> String {
    let group: String = std::iter::once("<g>".to_string())
        .chain((1..=k).map(|i| format!("<t{i}>x</t{i}>")))
        .chain(std::iter::once("</g>".to_string()))
        .collect();
    let reps = (target_bytes.saturating_sub(7) / group.len()).max(1);
    let mut out = String::with_capacity(reps * group.len() + 7);
    out.push_str("<doc>");
    for _ in 0..reps {
        out.push_str(&group);
    }
    out.push_str("</doc>");
    out
}

/// The site document: a `group` element and a `people` element, each with
/// `fanout` item children of `inner` data leaves.
pub fn gen_site_doc(group: &str, fanout: usize, inner: usize) -> String {
    let mut out = String::from("<site>");
    for name in [group, "people"] {
        out.push_str(&format!("<{name}>"));
        for i in 0..fanout {
            out.push_str("<item>");
            for j in 0..inner {
                out.push_str(&format!("<data>{i}.{j}</data>"));
            }
            out.push_str("</item>");
        }
        out.push_str(&format!("</{name}>"));
    }
    out.push_str("</site>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xml::Document;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_budget_and_parses() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = random_document(&mut rng, &RandomDocSpec::default());
            let d = Document::parse_str(&s, "r").unwrap();
            assert!(d.len() <= 200);
        }
    }

    #[test]
    fn camera_doc_hits_target_size() {
        for target in [20_000, 100_000, 1 << 20] {
            let s = gen_camera_doc(&CameraDoc::new(target));
            assert_eq!(s.len(), target);
            let d = Document::parse_str(&s, "c").unwrap();
            assert_eq!(d.root().children().count(), 64);
        }
        let tiny = gen_camera_doc(&CameraDoc::new(0));
        assert!(tiny.contains("<description></description>"));
        let one = gen_camera_doc(&CameraDoc::single(50_000));
        assert_eq!(Document::parse_str(&one, "c").unwrap().root().children().count(), 1);
    }

    #[test]
    fn fifty_megabytes_split_over_descriptions() {
        // 50 MB over 64 descriptions is about 0.78 MB each.
        let s = gen_camera_doc(&CameraDoc::new(50 << 20));
        let first = s.find("<description>").unwrap() + 13;
        let len = s[first..].find("</description>").unwrap();
        assert!((len as f64 - 50.0 * 1048576.0 / 64.0).abs() / (50.0 * 1048576.0 / 64.0) < 0.01);
    }
}
