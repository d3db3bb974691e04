//! Semantic-type aggregation per concept and type-derived "is a" triplets.
//!
//! Term-level predictions carry fine-grained types. They are mapped onto
//! the 18 target types, counted per concept, and every type reaching a
//! third of the concept's total count is kept (at most three can).

use std::collections::BTreeMap;
use std::path::Path;

use crate::cluster::{Concept, ConceptId};
use crate::error::{Error, Result};
use crate::kg_store::{RelationTriplet, TripletSource};
use crate::relation::schema::{IS_A, REVERSE_IS_A};
use crate::util;

/// The 18 target semantic types.
pub const BIOS_TYPES: [&str; 18] = [
    "Anatomical Abnormality",
    "Anatomy",
    "Chemical or Drug",
    "Diagnostic Procedure",
    "Disease or Syndrome",
    "Eukaryote",
    "Injury or Poisoning",
    "Laboratory Procedure",
    "Medical Device",
    "Mental or Behavioral Dysfunction",
    "Microorganism",
    "Neoplastic Process",
    "Pathology",
    "Physiology",
    "Research Activity or Technique",
    "Research Device",
    "Sign, Symptom or Finding",
    "Therapeutic or Preventive Procedure",
];

/// A type is kept when its count is at least `total / DEFAULT_SHARE_DENOMINATOR`.
pub const DEFAULT_SHARE_DENOMINATOR: usize = 3;

pub const CHEMICAL_OR_DRUG: &str = "Chemical or Drug";

pub fn is_bios_type(label: &str) -> bool {
    BIOS_TYPES.contains(&label)
}

/// Fine type → target type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMapping {
    map: BTreeMap<String, String>,
}

impl TypeMapping {
    /// The shipped 64-type mapping.
    pub fn default_table() -> Self {
        Self::parse(include_str!("../data/type_mapping.tsv"), "type_mapping.tsv").expect("shipped mapping is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path))
    }

    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, line) in util::data_lines(text) {
            let (fine, target) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(label, lineno, "expected fine_type \\t target_type"))?;
            let target = target.trim();
            if !is_bios_type(target) {
                return Err(Error::parse(label, lineno, format!("{target:?} is not a target type")));
            }
            map.insert(fine.trim().to_string(), target.to_string());
        }
        Ok(TypeMapping { map })
    }

    /// Target type of a fine type. Target types map to themselves.
    pub fn target(&self, fine: &str) -> Result<&str> {
        if let Some(t) = self.map.get(fine) {
            return Ok(t);
        }
        BIOS_TYPES
            .iter()
            .find(|&&t| t == fine)
            .copied()
            .ok_or_else(|| Error::UnmappedType(fine.to_string()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

/// Type counts for one concept.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeDistribution {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
}

impl TypeDistribution {
    pub fn add(&mut self, ty: &str, n: usize) {
        if n == 0 {
            return;
        }
        *self.counts.entry(ty.to_string()).or_default() += n;
        self.total += n;
    }
}

/// Term → fine type → prediction count.
pub type TermTypeCounts = BTreeMap<String, BTreeMap<String, usize>>;

/// Fine-type counts summed over all terms of a concept.
pub fn aggregate_fine(concept: &Concept, predictions: &TermTypeCounts) -> TypeDistribution {
    let mut dist = TypeDistribution::default();
    for term in &concept.terms {
        for (ty, &n) in predictions.get(term).into_iter().flatten() {
            dist.add(ty, n);
        }
    }
    dist
}

/// Target-type counts summed over all terms of a concept.
pub fn aggregate_types(
    concept: &Concept,
    predictions: &TermTypeCounts,
    mapping: &TypeMapping,
) -> Result<TypeDistribution> {
    let fine = aggregate_fine(concept, predictions);
    let mut dist = TypeDistribution::default();
    for (ty, &n) in &fine.counts {
        dist.add(mapping.target(ty)?, n);
    }
    Ok(dist)
}

/// Types whose count reaches a third of the total (inclusive), ordered by
/// descending count then name. Evidence spread over four or more types can
/// leave every type below the bar, in which case the result is empty.
pub fn select_types(dist: &TypeDistribution) -> Result<Vec<String>> {
    select_types_with(dist, DEFAULT_SHARE_DENOMINATOR)
}

/// Types whose count reaches `1/denominator` of the total (inclusive). At
/// most `denominator` types can qualify; more is reported as an error.
pub fn select_types_with(dist: &TypeDistribution, denominator: usize) -> Result<Vec<String>> {
    if dist.total == 0 {
        return Err(Error::NoEvidence);
    }
    if denominator == 0 {
        return Err(Error::Config("type share denominator must be positive".into()));
    }
    let mut chosen: Vec<(&String, usize)> = dist
        .counts
        .iter()
        .filter(|&(_, &c)| denominator * c >= dist.total)
        .map(|(t, &c)| (t, c))
        .collect();
    if chosen.len() > denominator {
        return Err(Error::TooManyTypes(chosen.len()));
    }
    chosen.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(chosen.into_iter().map(|(t, _)| t.clone()).collect())
}

/// Typed view of a concept used for "is a" derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedConcept {
    pub id: ConceptId,
    pub target_types: Vec<String>,
    /// Fine types retained by the same one-third rule.
    pub fine_types: Vec<String>,
}

/// Classify every concept. Concepts without predictions get no types.
pub fn classify_concepts(
    concepts: &[Concept],
    predictions: &TermTypeCounts,
    mapping: &TypeMapping,
) -> Result<Vec<TypedConcept>> {
    classify_concepts_with(concepts, predictions, mapping, DEFAULT_SHARE_DENOMINATOR)
}

/// [`classify_concepts`] with a configurable share denominator.
pub fn classify_concepts_with(
    concepts: &[Concept],
    predictions: &TermTypeCounts,
    mapping: &TypeMapping,
    denominator: usize,
) -> Result<Vec<TypedConcept>> {
    concepts
        .iter()
        .map(|c| {
            let dist = aggregate_types(c, predictions, mapping)?;
            let fine = aggregate_fine(c, predictions);
            let (target_types, fine_types) = if dist.total == 0 {
                (Vec::new(), Vec::new())
            } else {
                (select_types_with(&dist, denominator)?, select_types_with(&fine, denominator)?)
            };
            Ok(TypedConcept {
                id: c.id.clone(),
                target_types,
                fine_types,
            })
        })
        .collect()
}

/// `[c, is a, concept(t)]` and `[concept(t), reverse is a, c]` for every
/// retained fine type `t` of every concept. A concept that is itself the
/// type node is skipped.
pub fn derive_isa_triplets(
    concepts: &[TypedConcept],
    registry: &BTreeMap<String, ConceptId>,
    model_version: &str,
) -> Result<Vec<RelationTriplet>> {
    let mut out = Vec::new();
    for c in concepts {
        for t in &c.fine_types {
            let node = registry.get(t).ok_or_else(|| Error::UnregisteredType(t.clone()))?;
            if *node == c.id {
                continue;
            }
            out.push(RelationTriplet::new(
                c.id.clone(),
                IS_A,
                node.clone(),
                TripletSource::SemtypeDerived,
                model_version,
            ));
            out.push(RelationTriplet::new(
                node.clone(),
                REVERSE_IS_A,
                c.id.clone(),
                TripletSource::SemtypeDerived,
                model_version,
            ));
        }
    }
    Ok(out)
}

/// `concept_id \t types` rows.
pub fn types_to_tsv(concepts: &[TypedConcept]) -> String {
    let mut out = String::from("concept_id\tsemtypes\tfine_types\n");
    for c in concepts {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            c.id,
            c.target_types.join("|"),
            c.fine_types.join("|")
        ));
    }
    out
}
