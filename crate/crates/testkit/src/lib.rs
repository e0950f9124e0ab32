//! Seeded generators for specification documents and for invalid variants
//! of them with a known first error line.

use std::collections::BTreeSet;

use perspecml_core::catalog::{Catalog, ConcernId, PerspectiveId, RoleCode};
use perspecml_core::specformat::{
    serialize_spec, ConcernEntry, Disposition, Relevance, SpecDocument, Status,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PIECES: &[&str] = &[
    "F1", ">= 0.8", "on the holdout set", "latency", "p99 < 200 ms", "loan", "révision",
    "日本語", "naïve", "\"quoted\"", "back\\slash", "{braces}", "[brackets]", "a|b", "#hash",
    "tab\there", "line\nbreak", "crlf\r\n", "n/a", "because", "essential", "M5", "by: DS",
    "ünïcödé", "≥", "–", "emoji 🚀", "", " ", "trailing ",
];

/// Free text drawn from a pool that stresses escaping and the tokenizer.
pub fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..6);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(PIECES.choose(rng).unwrap());
    }
    if rng.random_bool(0.1) {
        out.push(char::from_u32(rng.random_range(0x20..0x7f)).unwrap());
    }
    out
}

pub fn random_disposition(rng: &mut impl Rng) -> Disposition {
    if rng.random_bool(0.25) {
        let reason = rng.random_bool(0.6).then(|| random_text(rng));
        return Disposition::NotApplicable { reason };
    }
    let mut by = BTreeSet::new();
    for code in RoleCode::ALL {
        if rng.random_bool(0.3) {
            by.insert(code);
        }
    }
    Disposition::Applicable {
        relevance: *Relevance::ALL.choose(rng).unwrap(),
        spec_text: if rng.random_bool(0.85) {
            random_text(rng)
        } else {
            String::new()
        },
        by,
        status: *Status::ALL.choose(rng).unwrap(),
        experimental_override: *[None, None, Some(true), Some(false)].choose(rng).unwrap(),
    }
}

/// A valid document over `c`: a random subset of concerns in random order.
pub fn random_document(rng: &mut impl Rng, c: &Catalog) -> SpecDocument {
    let density: f64 = *[0.0, 0.1, 0.3, 0.6, 0.9, 1.0].choose(rng).unwrap();
    let mut ids = c.flow_order();
    ids.retain(|_| rng.random_bool(density));
    ids.shuffle(rng);
    let mut doc = SpecDocument::new(random_text(rng));
    for id in ids {
        doc.entries.push(ConcernEntry::new(id, random_disposition(rng)));
    }
    doc
}

/// Invalid source text whose first error-level finding should be on `line`.
#[derive(Debug, Clone)]
pub struct Mutant {
    pub text: String,
    pub line: u32,
    pub mutation: &'static str,
}

fn is_entry_line(l: &str) -> bool {
    let w = l.split(' ').next().unwrap_or("");
    w.parse::<ConcernId>().is_ok()
}

fn block_header_lines(lines: &[String]) -> Vec<(usize, PerspectiveId)> {
    lines
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            l.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .and_then(|p| p.parse().ok())
                .map(|p| (i, p))
        })
        .collect()
}

/// Index one past the last line of the entry starting at `i`.
fn entry_end(lines: &[String], i: usize) -> usize {
    if lines[i].ends_with('{') {
        let close = (i + 1..lines.len()).find(|&j| lines[j] == "}").unwrap();
        close + 1
    } else {
        i + 1
    }
}

/// Applies one random mutation to the canonical text of `doc`.
pub fn mutate(rng: &mut impl Rng, doc: &SpecDocument) -> Mutant {
    let text = serialize_spec(doc);
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let entries: Vec<usize> = (0..lines.len()).filter(|&i| is_entry_line(&lines[i])).collect();
    let blocks = block_header_lines(&lines);

    loop {
        let kind = rng.random_range(0..10);
        let needs_entry = kind < 4;
        if needs_entry && entries.is_empty() {
            continue;
        }
        let (line, mutation) = match kind {
            0 => {
                let i = *entries.choose(rng).unwrap();
                let mut words: Vec<String> = lines[i].split(' ').map(str::to_owned).collect();
                words[1] = if words[1] == "n/a" { "n/x".into() } else { "crucial".into() };
                lines[i] = words.join(" ");
                (i, "bad relevance")
            }
            1 => {
                let i = *entries.choose(rng).unwrap();
                let id: ConcernId = lines[i].split(' ').next().unwrap().parse().unwrap();
                let p = id.perspective();
                let bogus = p.expected_concerns() + rng.random_range(1..50);
                let rest = lines[i].split_once(' ').unwrap().1.to_owned();
                lines[i] = format!("{}{bogus} {rest}", p.prefix());
                (i, "unknown concern id")
            }
            2 => {
                let i = *entries.choose(rng).unwrap();
                let id: ConcernId = lines[i].split(' ').next().unwrap().parse().unwrap();
                let others: Vec<PerspectiveId> = PerspectiveId::ALL
                    .into_iter()
                    .filter(|p| *p != id.perspective())
                    .collect();
                let p = *others.choose(rng).unwrap();
                let n = rng.random_range(1..=p.expected_concerns());
                let rest = lines[i].split_once(' ').unwrap().1.to_owned();
                lines[i] = format!("{}{n} {rest}", p.prefix());
                (i, "entry in the wrong block")
            }
            3 => {
                let i = *entries.choose(rng).unwrap();
                let end = entry_end(&lines, i);
                let copy: Vec<String> = lines[i..end].to_vec();
                for (k, l) in copy.into_iter().enumerate() {
                    lines.insert(end + k, l);
                }
                (end, "duplicate entry")
            }
            4 => {
                let (h, _) = *blocks.choose(rng).unwrap();
                lines.insert(h + 1, "} stray".into());
                (h + 1, "stray token")
            }
            5 => {
                lines[0] = format!("perspecml {}", rng.random_range(2..100));
                (0, "unsupported version")
            }
            6 => {
                let (h, p) = *blocks.choose(rng).unwrap();
                let n = rng.random_range(1..=p.expected_concerns());
                lines.insert(h + 1, format!("{}{n} essential {{ spec: \"unterminated", p.prefix()));
                (h + 1, "unterminated string")
            }
            7 => {
                lines.push("[nowhere]".into());
                (lines.len() - 1, "unknown block")
            }
            8 => {
                let (h, p) = *blocks.choose(rng).unwrap();
                let n = rng.random_range(1..=p.expected_concerns());
                lines.insert(h + 1, format!("{}{n} important {{ colour: \"red\" }}", p.prefix()));
                (h + 1, "unknown attribute")
            }
            _ => {
                let (h, p) = *blocks.choose(rng).unwrap();
                let n = rng.random_range(1..=p.expected_concerns());
                lines.insert(h + 1, format!("{}{n} desirable {{ by: DS, ZZ }}", p.prefix()));
                (h + 1, "unknown role")
            }
        };
        let mut text = lines.join("\n");
        text.push('\n');
        return Mutant {
            text,
            line: line as u32 + 1,
            mutation,
        };
    }
}
