//! Back-translation reliability filter for machine-translated terms.
//!
//! A translation is deleted when the embedding similarity between the
//! source term and its back-translation falls below the threshold for the
//! term's type. Translations come from an external translator as TSV rows
//! `source \t translated \t back_translated \t semtype`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::Serialize;

use crate::cluster::Concept;
use crate::corpus::normalize_term;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::semtype::{BIOS_TYPES, CHEMICAL_OR_DRUG};
use crate::util;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationCandidate {
    pub source: String,
    pub translated: String,
    pub back_translated: String,
    pub semtype: String,
}

pub fn parse_candidates(text: &str, label: &str) -> Result<Vec<TranslationCandidate>> {
    let mut out = Vec::new();
    for (lineno, line) in util::data_lines(text) {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cols.len() != 4 || cols.iter().any(|c| c.is_empty()) {
            return Err(Error::parse(
                label,
                lineno,
                "expected four non-empty columns: source, translated, back_translated, semtype",
            ));
        }
        out.push(TranslationCandidate {
            source: cols[0].to_string(),
            translated: cols[1].to_string(),
            back_translated: cols[2].to_string(),
            semtype: cols[3].to_string(),
        });
    }
    Ok(out)
}

pub fn load_candidates(path: &Path) -> Result<Vec<TranslationCandidate>> {
    parse_candidates(&util::read_to_string(path)?, &util::file_label(path))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds<T> {
    pub default: T,
    pub chemical: T,
}

impl<T: Scalar> Default for FilterThresholds<T> {
    fn default() -> Self {
        FilterThresholds {
            default: T::lit(0.55),
            chemical: T::lit(0.8),
        }
    }
}

impl<T: Scalar> FilterThresholds<T> {
    pub fn validate(&self) -> Result<()> {
        for x in [self.default, self.chemical] {
            if !(x >= -T::one() && x <= T::one()) {
                return Err(Error::Config(format!("translation threshold {x} outside [-1, 1]")));
            }
        }
        Ok(())
    }

    pub fn for_type(&self, semtype: &str) -> T {
        if semtype == CHEMICAL_OR_DRUG {
            self.chemical
        } else {
            self.default
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Kept,
    Deleted,
    Undecidable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Kept => "kept",
            Verdict::Deleted => "deleted",
            Verdict::Undecidable => "undecidable",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Judged<T> {
    /// Position in the input.
    pub index: usize,
    pub candidate: TranslationCandidate,
    pub verdict: Verdict,
    /// `None` when a vector is missing.
    pub similarity: Option<T>,
}

/// Judge one candidate. Identical strings keep with similarity 1: either
/// the back-translation reproduces the source, or the translation is the
/// source string itself.
pub fn judge<T: Scalar>(
    c: &TranslationCandidate,
    table: &EmbeddingTable<T>,
    thresholds: &FilterThresholds<T>,
) -> Judged<T> {
    let src = normalize_term(&c.source);
    if src == normalize_term(&c.back_translated) || src == normalize_term(&c.translated) {
        return Judged {
            index: 0,
            candidate: c.clone(),
            verdict: Verdict::Kept,
            similarity: Some(T::one()),
        };
    }
    match table.similarity(&c.source, &c.back_translated) {
        Ok(sim) => Judged {
            index: 0,
            candidate: c.clone(),
            verdict: if sim < thresholds.for_type(&c.semtype) {
                Verdict::Deleted
            } else {
                Verdict::Kept
            },
            similarity: Some(sim),
        },
        Err(_) => Judged {
            index: 0,
            candidate: c.clone(),
            verdict: Verdict::Undecidable,
            similarity: None,
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome<T> {
    pub kept: Vec<Judged<T>>,
    pub deleted: Vec<Judged<T>>,
    pub undecidable: Vec<Judged<T>>,
}

impl<T> FilterOutcome<T> {
    /// All judged candidates in input order.
    pub fn in_input_order(&self) -> Vec<&Judged<T>> {
        let mut all: Vec<&Judged<T>> = self.kept.iter().chain(&self.deleted).chain(&self.undecidable).collect();
        all.sort_by_key(|j| j.index);
        all
    }
}

/// Partition candidates into kept, deleted and undecidable, each in input
/// order. Deletion uses a strict `<` against the threshold.
pub fn filter_translations<T: Scalar>(
    candidates: &[TranslationCandidate],
    table: &EmbeddingTable<T>,
    thresholds: &FilterThresholds<T>,
) -> Result<FilterOutcome<T>> {
    thresholds.validate()?;
    let mut out = FilterOutcome {
        kept: Vec::new(),
        deleted: Vec::new(),
        undecidable: Vec::new(),
    };
    for (i, c) in candidates.iter().enumerate() {
        let j = Judged {
            index: i,
            ..judge(c, table, thresholds)
        };
        match j.verdict {
            Verdict::Kept => out.kept.push(j),
            Verdict::Deleted => out.deleted.push(j),
            Verdict::Undecidable => out.undecidable.push(j),
        }
    }
    Ok(out)
}

/// Candidate rows with `verdict` and `similarity` columns, in input order.
pub fn judged_to_tsv<T: Scalar>(outcome: &FilterOutcome<T>) -> String {
    let mut out = String::from("source\ttranslated\tback_translated\tsemtype\tverdict\tsimilarity\n");
    for j in outcome.in_input_order() {
        let c = &j.candidate;
        let sim = j.similarity.map_or(String::new(), |s| format!("{:.6}", s.as_f64()));
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            c.source,
            c.translated,
            c.back_translated,
            c.semtype,
            j.verdict.as_str(),
            sim
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationRate {
    pub semtype: String,
    pub concepts: usize,
    pub concepts_translated: usize,
    pub concept_rate: f64,
    pub terms: usize,
    pub terms_translated: usize,
    pub term_rate: f64,
    /// Set when either denominator is zero; the affected rate is reported
    /// as 0.
    pub zero_denominator: bool,
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-type translation rates. Term-wise: distinct source terms with a
/// kept translation over distinct candidate source terms of that type.
/// Concept-wise: concepts of the type having at least one term with a kept
/// translation, over concepts of the type. Rows follow the target-type
/// order, then any other types alphabetically.
pub fn translation_rate_report<T>(
    concepts: &[Concept],
    candidates: &[TranslationCandidate],
    kept: &[Judged<T>],
) -> Vec<TranslationRate> {
    let kept_terms: BTreeSet<String> = kept.iter().map(|j| normalize_term(&j.candidate.source)).collect();
    let mut terms_by_type: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for c in candidates {
        terms_by_type.entry(&c.semtype).or_default().insert(normalize_term(&c.source));
    }
    let mut concepts_by_type: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for c in concepts {
        let translated = c.terms.iter().any(|t| kept_terms.contains(&normalize_term(t)));
        for ty in &c.semtypes {
            let e = concepts_by_type.entry(ty).or_default();
            e.0 += 1;
            e.1 += usize::from(translated);
        }
    }
    let mut types: Vec<&str> = BIOS_TYPES.to_vec();
    let extra: BTreeSet<&str> = terms_by_type
        .keys()
        .chain(concepts_by_type.keys())
        .copied()
        .filter(|t| !BIOS_TYPES.contains(t))
        .collect();
    types.extend(extra);
    types
        .into_iter()
        .map(|ty| {
            let (n_concepts, n_concepts_tr) = concepts_by_type.get(ty).copied().unwrap_or((0, 0));
            let terms = terms_by_type.get(ty);
            let n_terms = terms.map_or(0, |s| s.len());
            let n_terms_tr = terms.map_or(0, |s| s.iter().filter(|t| kept_terms.contains(*t)).count());
            TranslationRate {
                semtype: ty.to_string(),
                concepts: n_concepts,
                concepts_translated: n_concepts_tr,
                concept_rate: rate(n_concepts_tr, n_concepts),
                terms: n_terms,
                terms_translated: n_terms_tr,
                term_rate: rate(n_terms_tr, n_terms),
                zero_denominator: n_concepts == 0 || n_terms == 0,
            }
        })
        .collect()
}
