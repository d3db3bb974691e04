//! Document ingestion, sentence/token segmentation and the occurrence index.
//!
//! Documents arrive as JSONL (`{"doc_id", "text", "pos"?}` per line). Each
//! document is split into sentences and tokens with fixed, dependency-free
//! rules so that ingestion is a pure function of the input bytes. Offsets on
//! tokens are byte offsets into the document text.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmm::{fmm_match, MatchTrie};
use crate::util;

/// Words that end with a period without ending a sentence.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "dr", "e.g", "eq", "etc", "fig", "figs", "i.e", "inc", "ltd", "mr",
    "mrs", "ms", "no", "nos", "prof", "ref", "refs", "resp", "sp", "spp", "st", "vol", "vs",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// Lowercased surface used for dictionary matching.
    pub norm: String,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub tokens: Vec<Token>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_tags: Option<Vec<String>>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn norm_tokens(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.norm.as_str()).collect()
    }

    /// Occurrence for the token span `start..end`.
    ///
    /// Panics if the span is empty or out of bounds.
    pub fn occurrence(&self, start: usize, end: usize) -> SentenceOccurrence {
        assert!(start < end && end <= self.tokens.len(), "bad span {start}..{end}");
        SentenceOccurrence {
            doc_id: self.doc_id.clone(),
            sent_index: self.sent_index,
            start,
            end,
            char_start: self.tokens[start].char_start,
            char_end: self.tokens[end - 1].char_end,
        }
    }

    /// Normalized surface of a token span, tokens joined by single spaces.
    pub fn span_norm(&self, start: usize, end: usize) -> String {
        self.tokens[start..end]
            .iter()
            .map(|t| t.norm.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub sentences: Vec<Sentence>,
}

/// Pointer from an extracted item back to its source text.
///
/// `start..end` is the token span inside the sentence; `char_start..char_end`
/// the byte span inside the document text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceOccurrence {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    docs: Vec<Document>,
    #[serde(skip)]
    by_id: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    text: String,
    #[serde(default)]
    pos: Option<Vec<Vec<String>>>,
}

impl Corpus {
    /// Load a JSONL corpus file.
    pub fn ingest(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        Self::from_jsonl(&text, &util::file_label(path))
    }

    pub fn from_jsonl(text: &str, label: &str) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawDocument = serde_json::from_str(line)
                .map_err(|e| Error::parse(label, lineno, format!("malformed document: {e}")))?;
            if raw.doc_id.is_empty() {
                return Err(Error::parse(label, lineno, "empty doc_id"));
            }
            let doc = build_document(raw.doc_id, raw.text, raw.pos)
                .map_err(|msg| Error::parse(label, lineno, msg))?;
            corpus.push(doc)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, doc: Document) -> Result<()> {
        if self.by_id.contains_key(&doc.doc_id) {
            return Err(Error::DuplicateDocId(doc.doc_id));
        }
        self.by_id.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn sentence(&self, doc_id: &str, sent_index: usize) -> Option<&Sentence> {
        self.doc(doc_id)?.sentences.get(sent_index)
    }

    /// All sentences in corpus order.
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.docs.iter().flat_map(|d| d.sentences.iter())
    }

    /// Source text covered by an occurrence, or `None` if it does not
    /// resolve against this corpus.
    pub fn resolve(&self, occ: &SentenceOccurrence) -> Option<&str> {
        let doc = self.doc(&occ.doc_id)?;
        let sent = doc.sentences.get(occ.sent_index)?;
        if occ.start >= occ.end || occ.end > sent.tokens.len() {
            return None;
        }
        let (a, b) = (
            sent.tokens[occ.start].char_start,
            sent.tokens[occ.end - 1].char_end,
        );
        if (a, b) != (occ.char_start, occ.char_end) {
            return None;
        }
        doc.text.get(a..b)
    }

    /// Canonical serialization; identical for identical input bytes.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.docs)?)
    }
}

fn build_document(
    doc_id: String,
    text: String,
    pos: Option<Vec<Vec<String>>>,
) -> std::result::Result<Document, String> {
    let spans = split_sentences(&text);
    let mut sentences: Vec<Sentence> = spans
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| Sentence {
            doc_id: doc_id.clone(),
            sent_index: i,
            tokens: tokenize_at(&text[a..b], a),
            pos_tags: None,
        })
        .collect();
    if let Some(pos) = pos {
        if pos.len() != sentences.len() {
            return Err(format!(
                "pos has {} sentences, text has {}",
                pos.len(),
                sentences.len()
            ));
        }
        for (sent, tags) in sentences.iter_mut().zip(pos) {
            if tags.len() != sent.tokens.len() {
                return Err(format!(
                    "sentence {} has {} tokens but {} pos tags",
                    sent.sent_index,
                    sent.tokens.len(),
                    tags.len()
                ));
            }
            sent.pos_tags = Some(tags);
        }
    }
    Ok(Document {
        doc_id,
        text,
        sentences,
    })
}

/// Byte spans of the sentences in `text`.
///
/// A boundary follows `.`, `?` or `!` when the next character is whitespace
/// and the next non-whitespace character is an uppercase letter or a digit.
/// A period closing a word from [`ABBREVIATIONS`] is not a boundary.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut spans = Vec::new();
    let mut start = 0usize;
    for (k, &(i, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        match chars.get(k + 1) {
            Some(&(_, n)) if n.is_whitespace() => {}
            _ => continue,
        }
        let next = chars[k + 1..].iter().find(|(_, ch)| !ch.is_whitespace());
        match next {
            Some(&(_, n)) if n.is_uppercase() || n.is_ascii_digit() => {}
            _ => continue,
        }
        if c == '.' && is_abbreviation(&text[start..i]) {
            continue;
        }
        push_trimmed(text, start, i + c.len_utf8(), &mut spans);
        start = i + c.len_utf8();
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    let word = word.to_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

fn push_trimmed(text: &str, a: usize, b: usize, out: &mut Vec<(usize, usize)>) {
    let seg = &text[a..b];
    let lead = seg.len() - seg.trim_start().len();
    let trail = seg.len() - seg.trim_end().len();
    if lead + trail < seg.len() {
        out.push((a + lead, b - trail));
    }
}

/// Tokenize `text` with offsets relative to its own start.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_at(text, 0)
}

/// Alphanumeric runs are words; a hyphen between two alphanumerics stays
/// inside the word; every other non-space character is its own token.
fn tokenize_at(text: &str, base: usize) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut word_start: Option<usize> = None;
    let emit = |tokens: &mut Vec<Token>, a: usize, b: usize| {
        let surface = &text[a..b];
        tokens.push(Token {
            surface: surface.to_string(),
            norm: surface.to_lowercase(),
            char_start: base + a,
            char_end: base + b,
        });
    };
    for (k, &(i, c)) in chars.iter().enumerate() {
        let joins_hyphen = c == '-'
            && word_start.is_some()
            && chars.get(k + 1).is_some_and(|&(_, n)| n.is_alphanumeric());
        if c.is_alphanumeric() || joins_hyphen {
            word_start.get_or_insert(i);
            continue;
        }
        if let Some(ws) = word_start.take() {
            emit(&mut tokens, ws, i);
        }
        if !c.is_whitespace() {
            emit(&mut tokens, i, i + c.len_utf8());
        }
    }
    if let Some(ws) = word_start {
        emit(&mut tokens, ws, text.len());
    }
    tokens
}

/// Lowercase and collapse internal whitespace.
pub fn normalize_term(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Normalized token sequence of a dictionary term, as used for trie keys.
pub fn term_tokens(s: &str) -> Vec<String> {
    tokenize(&normalize_term(s))
        .into_iter()
        .map(|t| t.norm)
        .collect()
}

/// Canonical string form of a term: its normalized tokens joined by spaces.
/// Matches [`Sentence::span_norm`] for any span the term matches.
pub fn canonical_term(s: &str) -> String {
    term_tokens(s).join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermOccurrences {
    pub occurrences: Vec<SentenceOccurrence>,
    pub doc_count: usize,
}

/// Occurrences and document frequency of each dictionary term.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceIndex {
    n_docs: usize,
    terms: BTreeMap<String, TermOccurrences>,
}

impl OccurrenceIndex {
    /// Index `dictionary` against `corpus` with forward maximum matching,
    /// one sentence at a time. Terms are canonicalized before indexing.
    pub fn build<S: AsRef<str>>(corpus: &Corpus, dictionary: &[S]) -> Self {
        let mut trie = MatchTrie::new();
        let mut keys: Vec<String> = Vec::new();
        for term in dictionary {
            let toks = term_tokens(term.as_ref());
            if toks.is_empty() {
                continue;
            }
            if trie.insert(&toks, keys.len()) {
                keys.push(toks.join(" "));
            }
        }
        let per_doc: Vec<Vec<(usize, SentenceOccurrence)>> = corpus
            .docs()
            .par_iter()
            .map(|doc| {
                let mut hits = Vec::new();
                for sent in &doc.sentences {
                    let toks = sent.norm_tokens();
                    for m in fmm_match(&toks, &trie) {
                        hits.push((*m.value, sent.occurrence(m.start, m.end)));
                    }
                }
                hits
            })
            .collect();

        let mut terms: BTreeMap<String, TermOccurrences> = keys
            .iter()
            .map(|k| (k.clone(), TermOccurrences::default()))
            .collect();
        for hits in per_doc {
            let mut seen = HashSet::new();
            for (idx, occ) in hits {
                let entry = terms.get_mut(&keys[idx]).expect("indexed key");
                if seen.insert(idx) {
                    entry.doc_count += 1;
                }
                entry.occurrences.push(occ);
            }
        }
        OccurrenceIndex {
            n_docs: corpus.len(),
            terms,
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains_key(&canonical_term(term))
    }

    /// Fraction of documents containing the term; 0 for unknown terms and
    /// for an empty corpus.
    pub fn df(&self, term: &str) -> f64 {
        match self.terms.get(&canonical_term(term)) {
            Some(t) if self.n_docs > 0 => t.doc_count as f64 / self.n_docs as f64,
            _ => 0.0,
        }
    }

    pub fn count(&self, term: &str) -> usize {
        self.terms
            .get(&canonical_term(term))
            .map_or(0, |t| t.occurrences.len())
    }

    pub fn occurrences(&self, term: &str) -> &[SentenceOccurrence] {
        self.terms
            .get(&canonical_term(term))
            .map_or(&[], |t| t.occurrences.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TermOccurrences)> {
        self.terms.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// `term \t DF \t count` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("term\tdf\tcount\n");
        for (term, t) in &self.terms {
            let df = if self.n_docs == 0 {
                0.0
            } else {
                t.doc_count as f64 / self.n_docs as f64
            };
            out.push_str(&format!("{term}\t{df}\t{}\n", t.occurrences.len()));
        }
        out
    }

    /// One JSON object per term: `{"term", "occurrences": [...]}`.
    pub fn to_jsonl(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            term: &'a str,
            occurrences: &'a [SentenceOccurrence],
        }
        let mut out = String::new();
        for (term, t) in &self.terms {
            out.push_str(&serde_json::to_string(&Row {
                term,
                occurrences: &t.occurrences,
            })?);
            out.push('\n');
        }
        Ok(out)
    }
}
