//! Distant-supervision bags: sentences mentioning a concept pair.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, SliceRandom};
use serde::Serialize;

use crate::cluster::{Concept, ConceptId};
use crate::corpus::{term_tokens, Corpus, Sentence, SentenceOccurrence};
use crate::error::{Error, Result};
use crate::fmm::{fmm_match, MatchTrie};
use crate::kg_store::RelationTriplet;
use crate::util;

use super::schema::{relation_index, RelationSchema, K};

pub const DEFAULT_MAX_DISTANCE: usize = 10;
pub const DEFAULT_MAX_BAG: usize = 16;
pub const DEFAULT_NEGATIVE_RATIO: f64 = 1.0;

pub const H_ST: &str = "[H_ST]";
pub const H_ED: &str = "[H_ED]";
pub const T_ST: &str = "[T_ST]";
pub const T_ED: &str = "[T_ED]";

/// A sentence with head and tail entity spans (token ranges, end exclusive).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkedSentence {
    pub doc_id: String,
    pub sent_index: usize,
    /// Normalized tokens.
    pub tokens: Vec<String>,
    pub head: (usize, usize),
    pub tail: (usize, usize),
    /// Source span covering both entities.
    pub occurrence: SentenceOccurrence,
}

impl MarkedSentence {
    pub fn new(sentence: &Sentence, head: (usize, usize), tail: (usize, usize)) -> Result<Self> {
        let n = sentence.len();
        let ok = |s: (usize, usize)| s.0 < s.1 && s.1 <= n;
        if !ok(head) || !ok(tail) || (head.0 < tail.1 && tail.0 < head.1) {
            return Err(Error::InvalidInput(format!(
                "bad entity spans {head:?} / {tail:?} in a sentence of {n} tokens"
            )));
        }
        Ok(MarkedSentence {
            doc_id: sentence.doc_id.clone(),
            sent_index: sentence.sent_index,
            tokens: sentence.tokens.iter().map(|t| t.norm.clone()).collect(),
            head,
            tail,
            occurrence: sentence.occurrence(head.0.min(tail.0), head.1.max(tail.1)),
        })
    }

    /// Gap between the nearest boundaries of the two spans, counted so that
    /// adjacent entities are 1 apart.
    pub fn distance(&self) -> usize {
        entity_distance(self.head, self.tail)
    }

    /// Tokens with entity markers inserted literally.
    pub fn marked_tokens(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.tokens.len() + 4);
        for (i, tok) in self.tokens.iter().enumerate() {
            if i == self.head.0 {
                out.push(H_ST.to_string());
            }
            if i == self.tail.0 {
                out.push(T_ST.to_string());
            }
            out.push(tok.clone());
            if i + 1 == self.head.1 {
                out.push(H_ED.to_string());
            }
            if i + 1 == self.tail.1 {
                out.push(T_ED.to_string());
            }
        }
        out
    }

    pub fn head_text(&self) -> String {
        self.tokens[self.head.0..self.head.1].join(" ")
    }

    pub fn tail_text(&self) -> String {
        self.tokens[self.tail.0..self.tail.1].join(" ")
    }
}

/// Distance between non-overlapping spans `a` and `b`: first token of the
/// later span minus last token of the earlier one.
pub fn entity_distance(a: (usize, usize), b: (usize, usize)) -> usize {
    let (first, second) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    second.0 + 1 - first.1
}

/// FMM matcher from concept terms to concept ids.
pub struct ConceptMatcher {
    trie: MatchTrie<ConceptId>,
}

impl ConceptMatcher {
    /// A term listed under several concepts resolves to the first.
    pub fn new(concepts: &[Concept]) -> Self {
        let mut trie = MatchTrie::new();
        for c in concepts {
            for t in &c.terms {
                let toks = term_tokens(t);
                if !toks.is_empty() && !trie.insert(&toks, c.id.clone()) && trie.get(&toks) != Some(&c.id) {
                    log::warn!("term {t:?} already belongs to another concept");
                }
            }
        }
        ConceptMatcher { trie }
    }

    /// Concept mentions `(start, end, concept)` in one sentence.
    pub fn mentions(&self, sentence: &Sentence) -> Vec<(usize, usize, ConceptId)> {
        fmm_match(&sentence.norm_tokens(), &self.trie)
            .into_iter()
            .map(|m| (m.start, m.end, m.value.clone()))
            .collect()
    }
}

/// Ordered concept pair → qualifying sentences in corpus order.
pub type PairIndex = BTreeMap<(ConceptId, ConceptId), Vec<MarkedSentence>>;

/// Every ordered pair of distinct concepts co-mentioned within
/// `max_distance`. A sentence contributes at most once per pair, using the
/// closest pair of mentions (earliest on ties).
pub fn co_occurring_pairs(corpus: &Corpus, matcher: &ConceptMatcher, max_distance: usize) -> PairIndex {
    let mut out = PairIndex::new();
    for sent in corpus.sentences() {
        let mentions = matcher.mentions(sent);
        let mut best: BTreeMap<(&ConceptId, &ConceptId), ((usize, usize), (usize, usize), usize)> = BTreeMap::new();
        for (i, h) in mentions.iter().enumerate() {
            for (j, t) in mentions.iter().enumerate() {
                if i == j || h.2 == t.2 {
                    continue;
                }
                let d = entity_distance((h.0, h.1), (t.0, t.1));
                if d > max_distance {
                    continue;
                }
                let entry = best.entry((&h.2, &t.2)).or_insert(((h.0, h.1), (t.0, t.1), d));
                if d < entry.2 {
                    *entry = ((h.0, h.1), (t.0, t.1), d);
                }
            }
        }
        for ((h, t), (hs, ts, _)) in best {
            let marked = MarkedSentence::new(sent, hs, ts).expect("fmm spans are disjoint and in bounds");
            out.entry((h.clone(), t.clone())).or_default().push(marked);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BagParams {
    pub max_distance: usize,
    pub max_bag: usize,
    pub seed: u64,
}

impl Default for BagParams {
    fn default() -> Self {
        BagParams {
            max_distance: DEFAULT_MAX_DISTANCE,
            max_bag: DEFAULT_MAX_BAG,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bag {
    pub head: ConceptId,
    pub tail: ConceptId,
    pub sentences: Vec<MarkedSentence>,
    /// `labels[k]` is 1 iff relation `k` is stored for the pair.
    pub labels: Vec<u8>,
    /// Qualifying sentences before the cap.
    pub available: usize,
}

impl Bag {
    pub fn is_negative(&self) -> bool {
        self.labels.iter().all(|&y| y == 0)
    }
}

/// Keep at most `max_bag` sentences, chosen by a generator keyed by the
/// pair, in their original order.
pub fn cap_sentences(
    sentences: &[MarkedSentence],
    max_bag: usize,
    seed: u64,
    head: &ConceptId,
    tail: &ConceptId,
) -> Vec<MarkedSentence> {
    if sentences.len() <= max_bag {
        return sentences.to_vec();
    }
    let mut rng = util::keyed_rng(seed, &["bag", head.as_str(), tail.as_str()]);
    let mut picked = index::sample(&mut rng, sentences.len(), max_bag).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| sentences[i].clone()).collect()
}

fn make_bag(
    head: &ConceptId,
    tail: &ConceptId,
    sentences: &[MarkedSentence],
    labels: Vec<u8>,
    params: &BagParams,
) -> Option<Bag> {
    let kept: Vec<MarkedSentence> = sentences
        .iter()
        .filter(|s| s.distance() <= params.max_distance)
        .cloned()
        .collect();
    if kept.is_empty() {
        return None;
    }
    Some(Bag {
        head: head.clone(),
        tail: tail.clone(),
        sentences: cap_sentences(&kept, params.max_bag, params.seed, head, tail),
        labels,
        available: kept.len(),
    })
}

/// One positive bag per stored `(head, tail)` pair that has qualifying
/// sentences, ordered by pair.
pub fn build_bags(triplets: &[RelationTriplet], pairs: &PairIndex, params: &BagParams) -> Vec<Bag> {
    let mut labels: BTreeMap<(&ConceptId, &ConceptId), Vec<u8>> = BTreeMap::new();
    for t in triplets {
        let Some(k) = relation_index(&t.relation) else {
            log::warn!("relation {:?} is outside the schema; not used for bags", t.relation);
            continue;
        };
        labels.entry((&t.head, &t.tail)).or_insert_with(|| vec![0; K])[k] = 1;
    }
    labels
        .into_iter()
        .filter_map(|((h, t), y)| {
            let sentences = pairs.get(&(h.clone(), t.clone()))?;
            make_bag(h, t, sentences, y, params)
        })
        .collect()
}

/// Negative bags: co-mentioned pairs whose types fit at least one relation
/// but which appear in no stored triplet in either direction. About
/// `ratio × positives` pairs are drawn with a seeded shuffle; the result is
/// ordered by pair.
pub fn sample_negatives(
    schema: &RelationSchema,
    types: &BTreeMap<ConceptId, Vec<String>>,
    triplets: &[RelationTriplet],
    pairs: &PairIndex,
    positives: usize,
    ratio: f64,
    params: &BagParams,
) -> Vec<Bag> {
    let stored: BTreeSet<(&ConceptId, &ConceptId)> = triplets
        .iter()
        .flat_map(|t| [(&t.head, &t.tail), (&t.tail, &t.head)])
        .collect();
    let none = Vec::new();
    let mut candidates: Vec<&(ConceptId, ConceptId)> = pairs
        .keys()
        .filter(|(h, t)| !stored.contains(&(h, t)))
        .filter(|(h, t)| schema.any_compatible(types.get(h).unwrap_or(&none), types.get(t).unwrap_or(&none)))
        .collect();
    let wanted = ((positives as f64) * ratio).round().max(0.0) as usize;
    let mut rng = util::keyed_rng(params.seed, &["negatives"]);
    candidates.shuffle(&mut rng);
    candidates.truncate(wanted);
    candidates.sort();
    candidates
        .into_iter()
        .filter_map(|(h, t)| make_bag(h, t, &pairs[&(h.clone(), t.clone())], vec![0; K], params))
        .collect()
}

#[derive(Serialize)]
struct BagSentenceRow<'a> {
    doc_id: &'a str,
    sent_index: usize,
    head_span: (usize, usize),
    tail_span: (usize, usize),
}

#[derive(Serialize)]
struct BagRow<'a> {
    head: &'a str,
    tail: &'a str,
    y: &'a [u8],
    sentences: Vec<BagSentenceRow<'a>>,
}

/// One JSON object per bag.
pub fn bags_to_jsonl(bags: &[Bag]) -> Result<String> {
    let mut out = String::new();
    for b in bags {
        let row = BagRow {
            head: b.head.as_str(),
            tail: b.tail.as_str(),
            y: &b.labels,
            sentences: b
                .sentences
                .iter()
                .map(|s| BagSentenceRow {
                    doc_id: &s.doc_id,
                    sent_index: s.sent_index,
                    head_span: s.head,
                    tail_span: s.tail,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&row)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_store::TripletSource;

    fn concept(i: usize, terms: &[&str]) -> Concept {
        Concept {
            id: ConceptId::from_index(i),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            preferred_term: terms[0].to_string(),
            semtypes: vec![],
        }
    }

    fn corpus(lines: &[&str]) -> Corpus {
        let rows: Vec<String> = lines
            .iter()
            .enumerate()
            .map(|(i, t)| format!(r#"{{"doc_id":"d{i:03}","text":"{t}"}}"#))
            .collect();
        Corpus::from_jsonl(&rows.join("\n"), "t").unwrap()
    }

    #[test]
    fn markers_and_distance() {
        let c = corpus(&["Aspirin may relieve headache."]);
        let s = c.sentence("d000", 0).unwrap();
        let m = MarkedSentence::new(s, (3, 4), (0, 1)).unwrap();
        assert_eq!(
            m.marked_tokens().join(" "),
            "[T_ST] aspirin [T_ED] may relieve [H_ST] headache [H_ED] ."
        );
        assert_eq!(m.distance(), 3);
        assert_eq!(entity_distance((0, 1), (1, 2)), 1);
        assert!(MarkedSentence::new(s, (0, 2), (1, 3)).is_err());
    }

    #[test]
    fn distance_limit() {
        let far = format!("Aspirin {} headache.", ["x"; 10].join(" "));
        let near = format!("Aspirin {} headache.", ["x"; 9].join(" "));
        let c = corpus(&[&far, &near]);
        let concepts = vec![concept(1, &["aspirin"]), concept(2, &["headache"])];
        let pairs = co_occurring_pairs(&c, &ConceptMatcher::new(&concepts), 10);
        let sents = &pairs[&(ConceptId::from_index(1), ConceptId::from_index(2))];
        assert_eq!(sents.len(), 1);
        assert_eq!(sents[0].doc_id, "d001");
        assert_eq!(sents[0].distance(), 10);
    }

    #[test]
    fn labels_and_cap() {
        let lines: Vec<String> = (0..40).map(|i| format!("Aspirin treats headache {i}.")).collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let c = corpus(&refs);
        let concepts = vec![concept(1, &["aspirin"]), concept(2, &["headache"])];
        let pairs = co_occurring_pairs(&c, &ConceptMatcher::new(&concepts), 10);
        let trip = RelationTriplet::new(
            ConceptId::from_index(1),
            "may treat",
            ConceptId::from_index(2),
            TripletSource::Imported,
            "",
        );
        let params = BagParams { seed: 5, ..BagParams::default() };
        let bags = build_bags(std::slice::from_ref(&trip), &pairs, &params);
        assert_eq!(bags.len(), 1);
        assert_eq!(bags[0].sentences.len(), 16);
        assert_eq!(bags[0].available, 40);
        assert_eq!(bags[0].labels[relation_index("may treat").unwrap()], 1);
        assert_eq!(bags[0].labels.iter().map(|&y| y as usize).sum::<usize>(), 1);
        assert_eq!(build_bags(&[trip], &pairs, &params), bags);

        // The reverse-direction pair is stored, so no negative comes from it.
        let neg = sample_negatives(&RelationSchema::permissive(), &BTreeMap::new(), &[], &pairs, 5, 1.0, &params);
        assert_eq!(neg.len(), 2);
        let stored = [RelationTriplet::new(
            ConceptId::from_index(1),
            "may treat",
            ConceptId::from_index(2),
            TripletSource::Imported,
            "",
        )];
        let neg = sample_negatives(&RelationSchema::permissive(), &BTreeMap::new(), &stored, &pairs, 5, 1.0, &params);
        assert!(neg.is_empty());
    }
}
