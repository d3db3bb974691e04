//! NER training-set sampling and cleaning of model-discovered terms.
//!
//! The tagger itself is an adapter: predictions are read from a file or
//! echoed from dictionary matching.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, OccurrenceIndex, Sentence, SentenceOccurrence};
use crate::error::{Error, Result};
use crate::fmm::{fmm_match, merge_tags, write_conll, Annotation, MatchTrie};
use crate::lexicon::{clean_by, CleanOutcome, FilterRuleSet, SeedTerm};
use crate::util;

pub const DEFAULT_RATIO_THRESHOLD: f64 = 20.0;

/// A predicted entity span, tokens `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NerSpan {
    pub start: usize,
    pub end: usize,
    pub semtype: String,
}

pub trait NerAdapter: Sync {
    /// Spans predicted for one sentence, within its bounds.
    fn predict(&self, sentence: &Sentence) -> Result<Vec<NerSpan>>;
}

/// Predictions loaded from JSONL rows
/// `{"doc_id", "sent_index", "spans": [[start, end, "Type"], ...]}`.
#[derive(Debug, Clone, Default)]
pub struct FilePredictions {
    rows: HashMap<(String, usize), Vec<NerSpan>>,
}

#[derive(Deserialize)]
struct PredictionRow {
    doc_id: String,
    sent_index: usize,
    spans: Vec<(usize, usize, String)>,
}

impl FilePredictions {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path))
    }

    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut rows: HashMap<(String, usize), Vec<NerSpan>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: PredictionRow =
                serde_json::from_str(line).map_err(|e| Error::parse(label, i + 1, e.to_string()))?;
            let spans = rows.entry((row.doc_id, row.sent_index)).or_default();
            for (start, end, semtype) in row.spans {
                if start >= end {
                    return Err(Error::parse(label, i + 1, format!("empty span {start}..{end}")));
                }
                spans.push(NerSpan { start, end, semtype });
            }
        }
        for spans in rows.values_mut() {
            spans.sort();
            spans.dedup();
        }
        Ok(FilePredictions { rows })
    }
}

impl NerAdapter for FilePredictions {
    fn predict(&self, sentence: &Sentence) -> Result<Vec<NerSpan>> {
        let key = (sentence.doc_id.clone(), sentence.sent_index);
        let spans = self.rows.get(&key).cloned().unwrap_or_default();
        if let Some(bad) = spans.iter().find(|s| s.end > sentence.len()) {
            return Err(Error::InvalidInput(format!(
                "prediction {}..{} exceeds sentence {}#{} of {} tokens",
                bad.start,
                bad.end,
                sentence.doc_id,
                sentence.sent_index,
                sentence.len()
            )));
        }
        Ok(spans)
    }
}

/// Stub tagger that predicts exactly the dictionary matches, typed with the
/// first recorded semantic type of each term.
pub struct FmmEcho {
    trie: MatchTrie<SeedTerm>,
}

impl FmmEcho {
    pub fn new(terms: &[SeedTerm]) -> Self {
        FmmEcho {
            trie: MatchTrie::from_seed_terms(terms),
        }
    }
}

impl NerAdapter for FmmEcho {
    fn predict(&self, sentence: &Sentence) -> Result<Vec<NerSpan>> {
        Ok(fmm_match(&sentence.norm_tokens(), &self.trie)
            .into_iter()
            .map(|m| NerSpan {
                start: m.start,
                end: m.end,
                semtype: m.value.allowed_semtypes.iter().next().cloned().unwrap_or_default(),
            })
            .collect())
    }
}

/// A selected training sentence with every annotation it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSentence {
    pub doc_id: String,
    pub sent_index: usize,
    /// Ordered by span start.
    pub annotations: Vec<Annotation>,
}

/// One sentence per annotated term: each distinct term picks the first
/// sentence, in `(doc_id, sent_index)` order, where it is annotated. The
/// result is the de-duplicated set of picked sentences, ordered the same
/// way, each with all of its annotations.
pub fn sample_training_set(annotations: &[Annotation]) -> Vec<TrainingSentence> {
    let mut by_sentence: BTreeMap<(&str, usize), Vec<&Annotation>> = BTreeMap::new();
    for a in annotations {
        by_sentence
            .entry((a.occurrence.doc_id.as_str(), a.occurrence.sent_index))
            .or_default()
            .push(a);
    }
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    let mut out = Vec::new();
    for ((doc_id, sent_index), anns) in by_sentence {
        let fresh = anns.iter().any(|a| !covered.contains(a.term.as_str()));
        if !fresh {
            continue;
        }
        covered.extend(anns.iter().map(|a| a.term.as_str()));
        let mut annotations: Vec<Annotation> = anns.into_iter().cloned().collect();
        annotations.sort_by_key(|a| (a.occurrence.start, a.occurrence.end));
        annotations.dedup_by(|a, b| a.occurrence == b.occurrence);
        out.push(TrainingSentence {
            doc_id: doc_id.to_string(),
            sent_index,
            annotations,
        });
    }
    out
}

/// CoNLL rendering of a training set.
pub fn training_set_to_conll(set: &[TrainingSentence], corpus: &Corpus) -> Result<String> {
    let mut rows = Vec::with_capacity(set.len());
    for ts in set {
        let sent = corpus
            .sentence(&ts.doc_id, ts.sent_index)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sentence {}#{}", ts.doc_id, ts.sent_index)))?;
        let refs: Vec<&Annotation> = ts.annotations.iter().collect();
        rows.push((sent, merge_tags(sent.len(), &refs)));
    }
    Ok(write_conll(rows))
}

/// A term proposed by the tagger, with evidence for the cleaning filters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredTerm {
    pub surface: String,
    pub prediction_count: usize,
    /// Matches of the term when discovered terms are used as an FMM
    /// dictionary over the corpus.
    pub fmm_count: usize,
    pub semtype_counts: BTreeMap<String, usize>,
    pub occurrences: Vec<SentenceOccurrence>,
}

/// Run the tagger over every sentence and collect discovered terms, sorted
/// by surface, with FMM counts filled in.
pub fn discover_terms(corpus: &Corpus, ner: &dyn NerAdapter) -> Result<Vec<DiscoveredTerm>> {
    let mut terms: BTreeMap<String, DiscoveredTerm> = BTreeMap::new();
    for sent in corpus.sentences() {
        for span in ner.predict(sent)? {
            let surface = sent.span_norm(span.start, span.end);
            let t = terms.entry(surface.clone()).or_insert_with(|| DiscoveredTerm {
                surface,
                prediction_count: 0,
                fmm_count: 0,
                semtype_counts: BTreeMap::new(),
                occurrences: Vec::new(),
            });
            t.prediction_count += 1;
            *t.semtype_counts.entry(span.semtype).or_default() += 1;
            t.occurrences.push(sent.occurrence(span.start, span.end));
        }
    }
    let dictionary: Vec<&str> = terms.keys().map(String::as_str).collect();
    let index = OccurrenceIndex::build(corpus, &dictionary);
    let mut out: Vec<DiscoveredTerm> = terms.into_values().collect();
    for t in &mut out {
        t.fmm_count = index.count(&t.surface);
    }
    Ok(out)
}

/// Reject a term iff `fmm_count / prediction_count > threshold`.
pub fn ratio_filter(
    terms: Vec<DiscoveredTerm>,
    threshold: f64,
) -> Result<(Vec<DiscoveredTerm>, Vec<DiscoveredTerm>)> {
    if let Some(t) = terms.iter().find(|t| t.prediction_count == 0) {
        return Err(Error::ZeroPredictions(t.surface.clone()));
    }
    Ok(terms
        .into_iter()
        .partition(|t| t.fmm_count as f64 / t.prediction_count as f64 <= threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NounPhraseMode {
    /// The last token of the span carries a noun tag.
    FinalNoun,
    /// The whole span has the shape of a simple noun phrase: modifiers
    /// (adjectives, nouns, numbers, participles, hyphens) then a noun.
    NounPhrase,
}

impl std::str::FromStr for NounPhraseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final_noun" => Ok(NounPhraseMode::FinalNoun),
            "noun_phrase" => Ok(NounPhraseMode::NounPhrase),
            other => Err(Error::Config(format!("unknown noun phrase mode {other:?}"))),
        }
    }
}

fn is_noun(tag: &str) -> bool {
    tag.starts_with("NN")
}

fn is_modifier(tag: &str) -> bool {
    ["JJ", "NN", "CD", "VBN", "VBG", "HYPH", "FW"]
        .iter()
        .any(|p| tag.starts_with(p))
}

/// Whether a tag sequence for a span passes the check.
pub fn span_passes<S: AsRef<str>>(tags: &[S], mode: NounPhraseMode) -> bool {
    let Some((last, init)) = tags.split_last() else {
        return false;
    };
    is_noun(last.as_ref())
        && match mode {
            NounPhraseMode::FinalNoun => true,
            NounPhraseMode::NounPhrase => init.iter().all(|t| is_modifier(t.as_ref())),
        }
}

#[derive(Debug, Clone, Default)]
pub struct NounPhraseOutcome {
    pub kept: Vec<DiscoveredTerm>,
    pub rejected: Vec<DiscoveredTerm>,
    /// Terms kept because none of their occurrences had tags.
    pub untagged: Vec<String>,
}

/// Keep a term iff at least one of its tagged occurrences passes the check.
/// Terms with no tagged occurrence are kept and reported.
pub fn noun_phrase_filter(
    terms: Vec<DiscoveredTerm>,
    corpus: &Corpus,
    mode: NounPhraseMode,
) -> NounPhraseOutcome {
    let mut out = NounPhraseOutcome::default();
    for term in terms {
        let mut any_tagged = false;
        let mut pass = false;
        for occ in &term.occurrences {
            let tags = corpus
                .sentence(&occ.doc_id, occ.sent_index)
                .and_then(|s| s.pos_tags.as_ref());
            if let Some(tags) = tags {
                any_tagged = true;
                if span_passes(&tags[occ.start..occ.end], mode) {
                    pass = true;
                    break;
                }
            }
        }
        if !any_tagged {
            log::warn!("no part-of-speech evidence for {:?}; keeping it", term.surface);
            out.untagged.push(term.surface.clone());
            out.kept.push(term);
        } else if pass {
            out.kept.push(term);
        } else {
            out.rejected.push(term);
        }
    }
    out
}

/// Apply the seed-term cleaning rules to discovered terms.
pub fn clean_discovered(terms: Vec<DiscoveredTerm>, rules: &FilterRuleSet) -> CleanOutcome<DiscoveredTerm> {
    clean_by(terms, |t| t.surface.as_str(), rules)
}

pub fn discovered_to_tsv(terms: &[DiscoveredTerm]) -> String {
    let mut out = String::from("term\tprediction_count\tfmm_count\tsemtypes\n");
    for t in terms {
        let types: Vec<String> = t.semtype_counts.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            t.surface,
            t.prediction_count,
            t.fmm_count,
            types.join("|")
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmm::bio_tags;

    fn ann(doc: &str, sent: usize, start: usize, end: usize, term: &str) -> Annotation {
        Annotation {
            term: term.to_string(),
            occurrence: SentenceOccurrence {
                doc_id: doc.to_string(),
                sent_index: sent,
                start,
                end,
                char_start: 0,
                char_end: 1,
            },
            semtype: "Finding".to_string(),
            tags: bio_tags(8, start, end, "Finding"),
        }
    }

    fn term(surface: &str, fmm: usize, pred: usize) -> DiscoveredTerm {
        DiscoveredTerm {
            surface: surface.to_string(),
            prediction_count: pred,
            fmm_count: fmm,
            semtype_counts: BTreeMap::new(),
            occurrences: Vec::new(),
        }
    }

    #[test]
    fn disjoint_terms_pick_first_sentence_each() {
        let mut anns = Vec::new();
        for (t, name) in ["a", "b", "c"].iter().enumerate() {
            for s in 0..10 {
                anns.push(ann(&format!("d{t}"), s, 0, 1, name));
            }
        }
        let set = sample_training_set(&anns);
        assert_eq!(set.len(), 3);
        assert!(set.iter().all(|s| s.sent_index == 0));
    }

    #[test]
    fn cooccurring_terms_share_a_sentence() {
        let anns = vec![ann("d1", 4, 0, 1, "x"), ann("d1", 4, 2, 3, "y")];
        let set = sample_training_set(&anns);
        assert_eq!(set.len(), 1);
        assert_eq!(set[0].annotations.len(), 2);
    }

    #[test]
    fn ratio_rule() {
        let (kept, rejected) = ratio_filter(vec![term("a", 100, 2), term("b", 10, 10), term("c", 40, 2)], 20.0).unwrap();
        assert_eq!(rejected.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>(), ["a"]);
        assert_eq!(kept.len(), 2, "ratio exactly at the threshold is kept");
        assert!(matches!(ratio_filter(vec![term("z", 1, 0)], 20.0), Err(Error::ZeroPredictions(_))));
    }

    #[test]
    fn noun_checks() {
        assert!(span_passes(&["JJ", "NN"], NounPhraseMode::NounPhrase));
        assert!(span_passes(&["VB", "NN"], NounPhraseMode::FinalNoun));
        assert!(!span_passes(&["VB", "NN"], NounPhraseMode::NounPhrase));
        assert!(!span_passes(&["NN", "VB"], NounPhraseMode::FinalNoun));
        assert!(!span_passes::<&str>(&[], NounPhraseMode::FinalNoun));
    }

    #[test]
    fn noun_filter_uses_tags_and_keeps_untagged() {
        let corpus = Corpus::from_jsonl(
            concat!(
                r#"{"doc_id":"d1","text":"Chronic cough persists.","pos":[["JJ","NN","VBZ","."]]}"#,
                "\n",
                r#"{"doc_id":"d2","text":"Cough persists."}"#,
            ),
            "t",
        )
        .unwrap();
        let s1 = corpus.sentence("d1", 0).unwrap();
        let s2 = corpus.sentence("d2", 0).unwrap();
        let mut a = term("chronic cough", 1, 1);
        a.occurrences.push(s1.occurrence(0, 2));
        let mut b = term("cough persists", 1, 1);
        b.occurrences.push(s1.occurrence(1, 3));
        let mut c = term("persists", 1, 1);
        c.occurrences.push(s2.occurrence(1, 2));
        let out = noun_phrase_filter(vec![a, b, c], &corpus, NounPhraseMode::FinalNoun);
        assert_eq!(out.kept.len(), 2);
        assert_eq!(out.rejected[0].surface, "cough persists");
        assert_eq!(out.untagged, vec!["persists".to_string()]);
    }

    #[test]
    fn file_predictions_validate_bounds() {
        let corpus = Corpus::from_jsonl(r#"{"doc_id":"d1","text":"Fever and chills."}"#, "t").unwrap();
        let preds = FilePredictions::parse(
            r#"{"doc_id":"d1","sent_index":0,"spans":[[0,1,"Finding"],[2,3,"Finding"]]}"#,
            "p",
        )
        .unwrap();
        let terms = discover_terms(&corpus, &preds).unwrap();
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].surface, "chills");
        assert_eq!(terms[0].fmm_count, 1);

        let bad = FilePredictions::parse(r#"{"doc_id":"d1","sent_index":0,"spans":[[0,9,"X"]]}"#, "p").unwrap();
        assert!(discover_terms(&corpus, &bad).is_err());
        assert!(FilePredictions::parse(r#"{"doc_id":"d1","sent_index":0,"spans":[[2,2,"X"]]}"#, "p").is_err());
    }
}
