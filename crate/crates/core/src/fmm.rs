//! Forward maximum matching over a token-level trie, and the
//! distant-supervision annotation policy built on top of it.
//!
//! Matching walks a sentence left to right; at each position the longest
//! dictionary term starting there is emitted and the cursor jumps past it.
//! Matches always start and end on token boundaries.
//!
//! Annotation gates each match with a semantic type annotator (STA): the
//! match is kept only if the predicted type falls in the same semantic group
//! as one of the term's recorded types, and then only with probability
//! `1 - DF(term)`, drawn from a stream keyed by `(seed, doc_id, sent_index)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::corpus::{canonical_term, OccurrenceIndex, Sentence, SentenceOccurrence};
use crate::error::{Error, Result};
use crate::lexicon::SeedTerm;
use crate::util;

#[derive(Debug, Clone)]
struct TrieNode<V> {
    children: HashMap<String, usize>,
    value: Option<V>,
}

impl<V> Default for TrieNode<V> {
    fn default() -> Self {
        TrieNode {
            children: HashMap::new(),
            value: None,
        }
    }
}

/// Prefix tree keyed by normalized tokens.
#[derive(Debug, Clone)]
pub struct MatchTrie<V> {
    nodes: Vec<TrieNode<V>>,
    terms: usize,
}

impl<V> Default for MatchTrie<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V> MatchTrie<V> {
    pub fn new() -> Self {
        MatchTrie {
            nodes: vec![TrieNode::default()],
            terms: 0,
        }
    }

    /// Insert a term. Returns `false` (keeping the existing value) when the
    /// token sequence is empty or already present.
    pub fn insert<S: AsRef<str>>(&mut self, tokens: &[S], value: V) -> bool {
        if tokens.is_empty() {
            return false;
        }
        let mut node = 0;
        for tok in tokens {
            let tok = tok.as_ref();
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(TrieNode::default());
                    self.nodes[node].children.insert(tok.to_string(), next);
                    next
                }
            };
        }
        if self.nodes[node].value.is_some() {
            return false;
        }
        self.nodes[node].value = Some(value);
        self.terms += 1;
        true
    }

    pub fn get<S: AsRef<str>>(&self, tokens: &[S]) -> Option<&V> {
        let mut node = 0;
        for tok in tokens {
            node = *self.nodes[node].children.get(tok.as_ref())?;
        }
        self.nodes[node].value.as_ref()
    }

    /// Longest term starting at `start`: its exclusive end and value.
    pub fn longest_at<S: AsRef<str>>(&self, tokens: &[S], start: usize) -> Option<(usize, &V)> {
        let mut node = 0;
        let mut best = None;
        for (i, tok) in tokens.iter().enumerate().skip(start) {
            match self.nodes[node].children.get(tok.as_ref()) {
                Some(&next) => node = next,
                None => break,
            }
            if let Some(v) = &self.nodes[node].value {
                best = Some((i + 1, v));
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms == 0
    }
}

impl MatchTrie<SeedTerm> {
    /// Trie over seed terms keyed by their normalized tokens.
    pub fn from_seed_terms(terms: &[SeedTerm]) -> Self {
        let mut trie = MatchTrie::new();
        for t in terms {
            trie.insert(&crate::corpus::term_tokens(&t.surface), t.clone());
        }
        trie
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match<'t, V> {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub value: &'t V,
}

/// Forward maximum matching of normalized `tokens` against `trie`.
pub fn fmm_match<'t, V, S: AsRef<str>>(tokens: &[S], trie: &'t MatchTrie<V>) -> Vec<Match<'t, V>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        match trie.longest_at(tokens, pos) {
            Some((end, value)) => {
                out.push(Match {
                    start: pos,
                    end,
                    value,
                });
                pos = end;
            }
            None => pos += 1,
        }
    }
    out
}

/// Semantic type annotator: predicts a type for a term mention in context.
pub trait StaAdapter {
    fn predict(&self, term: &str, sentence: &Sentence) -> String;
}

/// Always predicts the same type.
#[derive(Debug, Clone)]
pub struct ConstantSta(pub String);

impl StaAdapter for ConstantSta {
    fn predict(&self, _term: &str, _sentence: &Sentence) -> String {
        self.0.clone()
    }
}

/// File-backed STA keyed by `(term, context bucket)`.
///
/// TSV rows are `term \t bucket \t type`, where bucket is an integer or `*`
/// for any context. The bucket of a sentence is a stable hash of its
/// normalized tokens modulo the bucket count (header `#buckets <n>`,
/// default 16). Lookups fall back from the exact bucket to `*` and then to
/// the configured fallback type, so the adapter is total.
#[derive(Debug, Clone)]
pub struct TableSta {
    exact: HashMap<(String, u64), String>,
    any: HashMap<String, String>,
    buckets: u64,
    fallback: String,
}

impl TableSta {
    pub const DEFAULT_BUCKETS: u64 = 16;

    pub fn new(fallback: impl Into<String>) -> Self {
        TableSta {
            exact: HashMap::new(),
            any: HashMap::new(),
            buckets: Self::DEFAULT_BUCKETS,
            fallback: fallback.into(),
        }
    }

    pub fn load(path: &Path, fallback: impl Into<String>) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path), fallback)
    }

    pub fn parse(text: &str, label: &str, fallback: impl Into<String>) -> Result<Self> {
        let mut sta = TableSta::new(fallback);
        for (i, line) in text.lines().enumerate() {
            if let Some(n) = line.strip_prefix("#buckets") {
                sta.buckets = n
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&b| b > 0)
                    .ok_or_else(|| Error::parse(label, i + 1, "invalid bucket count"))?;
            }
        }
        for (lineno, line) in util::data_lines(text) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(label, lineno, "expected term, bucket, type"));
            }
            let term = canonical_term(cols[0]);
            let ty = cols[2].trim().to_string();
            if cols[1].trim() == "*" {
                sta.any.insert(term, ty);
            } else {
                let b: u64 = cols[1]
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(label, lineno, "bucket must be an integer or *"))?;
                sta.exact.insert((term, b), ty);
            }
        }
        Ok(sta)
    }

    pub fn insert(&mut self, term: &str, bucket: Option<u64>, ty: impl Into<String>) {
        let term = canonical_term(term);
        match bucket {
            Some(b) => self.exact.insert((term, b), ty.into()),
            None => self.any.insert(term, ty.into()),
        };
    }

    pub fn bucket_of(&self, sentence: &Sentence) -> u64 {
        util::stable_hash(sentence.norm_tokens()) % self.buckets
    }
}

impl StaAdapter for TableSta {
    fn predict(&self, term: &str, sentence: &Sentence) -> String {
        let key = canonical_term(term);
        let bucket = self.bucket_of(sentence);
        self.exact
            .get(&(key.clone(), bucket))
            .or_else(|| self.any.get(&key))
            .unwrap_or(&self.fallback)
            .clone()
    }
}

/// Semantic type → semantic group table.
#[derive(Debug, Clone, Default)]
pub struct SemanticGroups {
    groups: BTreeMap<String, String>,
}

const DEFAULT_GROUPS: &str = include_str!("../data/semantic_groups.tsv");

impl SemanticGroups {
    /// The shipped stand-in table (UMLS-style types and groups).
    pub fn default_table() -> Self {
        Self::parse(DEFAULT_GROUPS, "semantic_groups.tsv").expect("shipped table parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path))
    }

    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut groups = BTreeMap::new();
        for (lineno, line) in util::data_lines(text) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(label, lineno, "expected type, group"));
            }
            groups.insert(cols[0].trim().to_string(), cols[1].trim().to_string());
        }
        Ok(SemanticGroups { groups })
    }

    pub fn group_of(&self, semtype: &str) -> Result<&str> {
        self.groups
            .get(semtype)
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownSemType(semtype.to_string()))
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }
}

/// One distant-supervision annotation of a matched term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Annotation {
    /// Dictionary term that matched.
    pub term: String,
    pub occurrence: SentenceOccurrence,
    pub semtype: String,
    /// B-I-O tags over the whole sentence, only this span tagged.
    pub tags: Vec<String>,
}

/// Annotate the FMM `matches` of one sentence.
///
/// One uniform draw is consumed per match, whether or not the match is
/// group-compatible, so the decision for a match never depends on the STA
/// output for another.
pub fn annotate(
    sentence: &Sentence,
    matches: &[Match<'_, SeedTerm>],
    sta: &dyn StaAdapter,
    index: &OccurrenceIndex,
    groups: &SemanticGroups,
    seed: u64,
) -> Result<Vec<Annotation>> {
    let sent_key = sentence.sent_index.to_string();
    let mut rng = util::keyed_rng(seed, &[&sentence.doc_id, &sent_key]);
    let mut out = Vec::new();
    for m in matches {
        let u: f64 = rng.gen();
        let term = m.value;
        let predicted = sta.predict(&term.surface, sentence);
        let predicted_group = groups.group_of(&predicted)?;
        let chosen = if term.allowed_semtypes.contains(&predicted) {
            Some(predicted.as_str())
        } else {
            let mut found = None;
            for recorded in &term.allowed_semtypes {
                if groups.group_of(recorded)? == predicted_group {
                    found = Some(recorded.as_str());
                    break;
                }
            }
            found
        };
        let Some(semtype) = chosen else { continue };
        if !index.contains(&term.surface) {
            return Err(Error::InvalidInput(format!(
                "no document frequency for term {:?}",
                term.surface
            )));
        }
        if u < 1.0 - index.df(&term.surface) {
            out.push(Annotation {
                term: term.surface.clone(),
                occurrence: sentence.occurrence(m.start, m.end),
                semtype: semtype.to_string(),
                tags: bio_tags(sentence.len(), m.start, m.end, semtype),
            });
        }
    }
    Ok(out)
}

/// Tags for a single labelled span over a sentence of `len` tokens.
pub fn bio_tags(len: usize, start: usize, end: usize, label: &str) -> Vec<String> {
    (0..len)
        .map(|i| {
            if i == start {
                format!("B-{label}")
            } else if i > start && i < end {
                format!("I-{label}")
            } else {
                "O".to_string()
            }
        })
        .collect()
}

/// Combined tags for non-overlapping annotations of one sentence.
pub fn merge_tags(len: usize, annotations: &[&Annotation]) -> Vec<String> {
    let mut tags = vec!["O".to_string(); len];
    for a in annotations {
        for i in a.occurrence.start..a.occurrence.end {
            tags[i] = a.tags[i].clone();
        }
    }
    tags
}

/// Decode labelled spans from a tag sequence. Returns `None` if the
/// sequence is ill-formed (an `I-` tag not continuing a span of its type).
pub fn decode_tags<S: AsRef<str>>(tags: &[S]) -> Option<Vec<(usize, usize, String)>> {
    let mut spans: Vec<(usize, usize, String)> = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, tag) in tags.iter().enumerate() {
        let tag = tag.as_ref();
        if let Some(label) = tag.strip_prefix("I-") {
            match &open {
                Some((_, l)) if l == label => continue,
                _ => return None,
            }
        }
        if let Some((s, l)) = open.take() {
            spans.push((s, i, l));
        }
        if let Some(label) = tag.strip_prefix("B-") {
            open = Some((i, label.to_string()));
        } else if tag != "O" {
            return None;
        }
    }
    if let Some((s, l)) = open {
        spans.push((s, tags.len(), l));
    }
    Some(spans)
}

/// CoNLL-style `token \t tag` lines with a blank line after each sentence.
pub fn write_conll<'a, I>(sentences: I) -> String
where
    I: IntoIterator<Item = (&'a Sentence, Vec<String>)>,
{
    let mut out = String::new();
    for (sent, tags) in sentences {
        for (tok, tag) in sent.tokens.iter().zip(&tags) {
            let _ = writeln!(out, "{}\t{}", tok.surface, tag);
        }
        out.push('\n');
    }
    out
}
