//! Summary tables over a written knowledge graph: composition by semantic
//! type, terms per concept, occurrence coverage of the most frequent terms,
//! and translation rates.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::cluster::ConceptId;
use crate::error::Result;
use crate::kg_store::{read_kg, KnowledgeGraph, Language};
use crate::semtype::BIOS_TYPES;

/// Row label for concepts without a semantic type.
pub const UNTYPED: &str = "(untyped)";

/// Terms-per-concept buckets: label, inclusive lower bound, inclusive upper
/// bound (`None` for open-ended).
pub const TERM_BUCKETS: [(&str, usize, Option<usize>); 6] = [
    ("1", 1, Some(1)),
    ("2-5", 2, Some(5)),
    ("6-10", 6, Some(10)),
    ("11-20", 11, Some(20)),
    ("21-30", 21, Some(30)),
    (">30", 31, None),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub semtype: String,
    pub concepts: usize,
    /// Share of all (concept, type) assignments; a concept with several
    /// types counts once per type.
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketRow {
    pub bucket: &'static str,
    pub concepts: usize,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub top_n: usize,
    /// Occurrences of the `top_n` most frequent English terms over all
    /// English term occurrences.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationRow {
    pub semtype: String,
    pub concepts: usize,
    pub concepts_translated: usize,
    pub concept_rate: f64,
    pub en_terms: usize,
    pub zh_terms: usize,
    /// Chinese terms per English term among the type's concepts.
    pub term_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub dataset_id: String,
    pub concepts: usize,
    pub terms: usize,
    pub triplets: usize,
    pub composition: Vec<CompositionRow>,
    pub terms_per_concept: Vec<BucketRow>,
    pub coverage: Vec<CoverageRow>,
    pub translation: Vec<TranslationRow>,
}

fn share(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Type labels in reporting order: the 18 target types, any others
/// alphabetically, then [`UNTYPED`].
fn type_order<'a>(seen: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut extra: Vec<&str> = seen.filter(|t| !BIOS_TYPES.contains(t) && *t != UNTYPED).collect();
    extra.sort_unstable();
    extra.dedup();
    BIOS_TYPES
        .iter()
        .copied()
        .chain(extra)
        .chain([UNTYPED])
        .map(String::from)
        .collect()
}

/// `N = 10, 100, 1000, ...` below the vocabulary size, then the vocabulary
/// size itself.
pub fn coverage_points(vocabulary: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = 10usize;
    while n < vocabulary {
        out.push(n);
        n = n.saturating_mul(10);
    }
    if vocabulary > 0 {
        out.push(vocabulary);
    }
    out
}

pub fn compute_stats(kg: &KnowledgeGraph) -> StatsReport {
    let types_of = |types: &[String]| -> Vec<String> {
        if types.is_empty() {
            vec![UNTYPED.to_string()]
        } else {
            types.to_vec()
        }
    };

    let mut by_type: BTreeMap<String, usize> = BTreeMap::new();
    for c in &kg.concepts {
        for t in types_of(&c.semtypes) {
            *by_type.entry(t).or_default() += 1;
        }
    }
    let assignments: usize = by_type.values().sum();
    let composition = type_order(by_type.keys().map(String::as_str))
        .into_iter()
        .map(|t| {
            let n = by_type.get(&t).copied().unwrap_or(0);
            CompositionRow {
                semtype: t,
                concepts: n,
                proportion: share(n, assignments),
            }
        })
        .collect();

    let mut en: BTreeMap<&ConceptId, usize> = BTreeMap::new();
    let mut zh: BTreeMap<&ConceptId, usize> = BTreeMap::new();
    let mut all: BTreeMap<&ConceptId, usize> = BTreeMap::new();
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for t in &kg.terms {
        *all.entry(&t.concept_id).or_default() += 1;
        match t.language {
            Language::En => {
                *en.entry(&t.concept_id).or_default() += 1;
                *freq.entry(&t.surface).or_default() += t.frequency;
            }
            Language::Zh => *zh.entry(&t.concept_id).or_default() += 1,
        }
    }

    let mut buckets = [0usize; TERM_BUCKETS.len()];
    for c in &kg.concepts {
        let n = all.get(&c.id).copied().unwrap_or(0);
        if let Some(i) = TERM_BUCKETS
            .iter()
            .position(|&(_, lo, hi)| n >= lo && hi.is_none_or(|h| n <= h))
        {
            buckets[i] += 1;
        }
    }
    let bucketed: usize = buckets.iter().sum();
    let terms_per_concept = TERM_BUCKETS
        .iter()
        .zip(buckets)
        .map(|(&(label, _, _), n)| BucketRow {
            bucket: label,
            concepts: n,
            proportion: share(n, bucketed),
        })
        .collect();

    let mut counts: Vec<usize> = freq.values().copied().collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = counts.iter().sum();
    let mut prefix = Vec::with_capacity(counts.len() + 1);
    prefix.push(0usize);
    for c in &counts {
        prefix.push(prefix.last().unwrap() + c);
    }
    let coverage = coverage_points(counts.len())
        .into_iter()
        .map(|n| CoverageRow {
            top_n: n,
            coverage: if total == 0 { 1.0 } else { share(prefix[n], total) },
        })
        .collect();

    let mut per_type: BTreeMap<String, (usize, usize, usize, usize)> = BTreeMap::new();
    for c in &kg.concepts {
        let n_en = en.get(&c.id).copied().unwrap_or(0);
        let n_zh = zh.get(&c.id).copied().unwrap_or(0);
        for t in types_of(&c.semtypes) {
            let e = per_type.entry(t).or_default();
            e.0 += 1;
            e.1 += usize::from(n_zh > 0);
            e.2 += n_en;
            e.3 += n_zh;
        }
    }
    let translation = type_order(per_type.keys().map(String::as_str))
        .into_iter()
        .map(|t| {
            let (c, ct, ne, nz) = per_type.get(&t).copied().unwrap_or_default();
            TranslationRow {
                semtype: t,
                concepts: c,
                concepts_translated: ct,
                concept_rate: share(ct, c),
                en_terms: ne,
                zh_terms: nz,
                term_rate: share(nz, ne),
            }
        })
        .collect();

    StatsReport {
        dataset_id: kg.manifest.dataset_id.clone(),
        concepts: kg.concepts.len(),
        terms: kg.terms.len(),
        triplets: kg.triplets.len(),
        composition,
        terms_per_concept,
        coverage,
        translation,
    }
}

/// Load a dataset directory and summarize it.
pub fn stats(dir: &Path) -> Result<StatsReport> {
    Ok(compute_stats(&read_kg(dir)?))
}

impl StatsReport {
    /// Tables as `(file name, TSV)` pairs.
    pub fn to_tsv(&self) -> Vec<(&'static str, String)> {
        let mut comp = String::from("semtype\tconcepts\tproportion\n");
        for r in &self.composition {
            let _ = writeln!(comp, "{}\t{}\t{:.9}", r.semtype, r.concepts, r.proportion);
        }
        let mut hist = String::from("terms\tconcepts\tproportion\n");
        for r in &self.terms_per_concept {
            let _ = writeln!(hist, "{}\t{}\t{:.9}", r.bucket, r.concepts, r.proportion);
        }
        let mut cov = String::from("top_n\tcoverage\n");
        for r in &self.coverage {
            let _ = writeln!(cov, "{}\t{:.9}", r.top_n, r.coverage);
        }
        let mut tr = String::from("semtype\tconcepts\tconcepts_translated\tconcept_rate\ten_terms\tzh_terms\tterm_rate\n");
        for r in &self.translation {
            let _ = writeln!(
                tr,
                "{}\t{}\t{}\t{:.9}\t{}\t{}\t{:.9}",
                r.semtype, r.concepts, r.concepts_translated, r.concept_rate, r.en_terms, r.zh_terms, r.term_rate
            );
        }
        vec![
            ("composition.tsv", comp),
            ("terms_per_concept.tsv", hist),
            ("coverage.tsv", cov),
            ("translation_rates.tsv", tr),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset {}", self.dataset_id);
        let _ = writeln!(
            out,
            "{} concepts, {} terms, {} triplets\n",
            self.concepts, self.terms, self.triplets
        );
        let _ = writeln!(out, "Concepts by semantic type");
        for r in self.composition.iter().filter(|r| r.concepts > 0) {
            let _ = writeln!(out, "  {:<40} {:>8} {:>7.2}%", r.semtype, r.concepts, 100.0 * r.proportion);
        }
        let _ = writeln!(out, "\nTerms per concept");
        for r in &self.terms_per_concept {
            let _ = writeln!(out, "  {:<8} {:>8} {:>7.2}%", r.bucket, r.concepts, 100.0 * r.proportion);
        }
        let _ = writeln!(out, "\nOccurrence coverage of the top-N terms");
        for r in &self.coverage {
            let _ = writeln!(out, "  {:>10} {:>7.2}%", r.top_n, 100.0 * r.coverage);
        }
        let _ = writeln!(out, "\nTranslation rates");
        for r in self.translation.iter().filter(|r| r.concepts > 0) {
            let _ = writeln!(
                out,
                "  {:<40} concepts {:>7.2}%  terms {:>7.2}%",
                r.semtype,
                100.0 * r.concept_rate,
                100.0 * r.term_rate
            );
        }
        out
    }
}
