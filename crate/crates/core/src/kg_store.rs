//! On-disk knowledge graph: concepts, terms, relation triplets with
//! provenance, and the version manifest binding them to their inputs.
//!
//! Layout of a dataset directory:
//!
//! | file | rows |
//! |------|------|
//! | `concepts.tsv` | `concept_id, preferred_term, semtypes` |
//! | `terms.tsv` | `term_id, concept_id, surface, language, term_type, frequency` |
//! | `relations.tsv` | `head, relation, tail, source, model_version` |
//! | `provenance.jsonl` | `{item_id, doc_id, sent_index, span, token_span, model_version}` |
//! | `manifest.json` | [`VersionManifest`] |
//!
//! Each TSV starts with a `# dataset_id=<id>` line and a header row; the
//! JSONL starts with a `{"dataset_id": ...}` object. The manifest records the
//! SHA-256 and row count of every file, and loading fails on any mismatch.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::ConceptId;
use crate::corpus::SentenceOccurrence;
use crate::error::{Error, Result};
use crate::relation::schema::{is_bidirectional, relation_index, reverse_of, IS_A};
use crate::util;

pub const CONCEPTS_FILE: &str = "concepts.tsv";
pub const TERMS_FILE: &str = "terms.tsv";
pub const RELATIONS_FILE: &str = "relations.tsv";
pub const PROVENANCE_FILE: &str = "provenance.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Order is significant: when the same triplet arrives from several
/// sources, the earliest variant is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripletSource {
    Imported,
    ReModel,
    SemtypeDerived,
    Mirrored,
}

impl TripletSource {
    pub fn as_str(self) -> &'static str {
        match self {
            TripletSource::Imported => "imported",
            TripletSource::ReModel => "re_model",
            TripletSource::SemtypeDerived => "semtype_derived",
            TripletSource::Mirrored => "mirrored",
        }
    }
}

impl FromStr for TripletSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "imported" => TripletSource::Imported,
            "re_model" => TripletSource::ReModel,
            "semtype_derived" => TripletSource::SemtypeDerived,
            "mirrored" => TripletSource::Mirrored,
            other => return Err(Error::InvalidInput(format!("unknown triplet source {other:?}"))),
        })
    }
}

impl fmt::Display for TripletSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationTriplet {
    pub head: ConceptId,
    pub relation: String,
    pub tail: ConceptId,
    pub source: TripletSource,
    pub provenance: Vec<SentenceOccurrence>,
    pub model_version: String,
}

impl RelationTriplet {
    pub fn new(
        head: ConceptId,
        relation: &str,
        tail: ConceptId,
        source: TripletSource,
        model_version: &str,
    ) -> Self {
        RelationTriplet {
            head,
            relation: relation.to_string(),
            tail,
            source,
            provenance: Vec::new(),
            model_version: model_version.to_string(),
        }
    }

    pub fn key(&self) -> (&ConceptId, &str, &ConceptId) {
        (&self.head, &self.relation, &self.tail)
    }

    /// Identifier used by provenance rows.
    pub fn item_id(&self) -> String {
        format!("{}|{}|{}", self.head, self.relation, self.tail)
    }
}

/// Complete a triplet set under the reverse-relation rule.
///
/// Every unidirectional `(h, r, t)` gains `(t, reverse r, h)` when absent,
/// with source `mirrored` and the forward triplet's provenance. The
/// bidirectional relation is stored once per unordered pair with the
/// smaller id as head. When a triplet appears more than once, the variant
/// with the earliest source wins. Output is sorted by `(head, relation,
/// tail)`; applying the function again is a no-op.
pub fn mirror_reverse_relations(triplets: &[RelationTriplet]) -> Vec<RelationTriplet> {
    type Keyed = BTreeMap<(ConceptId, String, ConceptId), RelationTriplet>;
    fn insert(by_key: &mut Keyed, t: RelationTriplet) {
        let key = (t.head.clone(), t.relation.clone(), t.tail.clone());
        match by_key.get(&key) {
            Some(existing) if existing.source <= t.source => {}
            _ => {
                by_key.insert(key, t);
            }
        }
    }
    let mut by_key = Keyed::new();
    for t in triplets {
        let mut t = t.clone();
        if is_bidirectional(&t.relation) && t.head > t.tail {
            std::mem::swap(&mut t.head, &mut t.tail);
        }
        insert(&mut by_key, t);
    }
    let forward: Vec<RelationTriplet> = by_key.values().cloned().collect();
    let present: BTreeSet<(ConceptId, String, ConceptId)> = by_key.keys().cloned().collect();
    let mut additions = Vec::new();
    for t in forward {
        let Some(rev) = reverse_of(&t.relation) else { continue };
        let key = (t.tail.clone(), rev.to_string(), t.head.clone());
        if !present.contains(&key) {
            additions.push(RelationTriplet {
                head: t.tail.clone(),
                relation: rev.to_string(),
                tail: t.head.clone(),
                source: TripletSource::Mirrored,
                provenance: t.provenance.clone(),
                model_version: t.model_version.clone(),
            });
        }
    }
    for t in additions {
        insert(&mut by_key, t);
    }
    by_key.into_values().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Language::En),
            "zh" => Ok(Language::Zh),
            other => Err(Error::InvalidInput(format!("unknown language {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermType {
    Preferred,
    Entry,
}

impl TermType {
    pub fn as_str(self) -> &'static str {
        match self {
            TermType::Preferred => "preferred",
            TermType::Entry => "entry",
        }
    }
}

impl FromStr for TermType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "preferred" => Ok(TermType::Preferred),
            "entry" => Ok(TermType::Entry),
            other => Err(Error::InvalidInput(format!("unknown term type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub id: ConceptId,
    pub preferred_term: String,
    pub semtypes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    /// `T` followed by eight digits.
    pub term_id: String,
    pub concept_id: ConceptId,
    pub surface: String,
    pub language: Language,
    pub term_type: TermType,
    pub frequency: usize,
}

pub fn term_id(n: usize) -> String {
    format!("T{n:08}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    /// Data rows, excluding the dataset-id line and the header.
    pub rows: usize,
}

/// Binds a dataset to the inputs, models, configuration and code that
/// produced it. Contains no wall-clock data unless the caller supplies it,
/// so identical runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionManifest {
    pub dataset_id: String,
    pub code_version: String,
    /// Caller-supplied timestamp string.
    pub created: String,
    pub config: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<ArtifactRecord>,
    pub models: Vec<ArtifactRecord>,
    #[serde(default)]
    pub files: Vec<FileRecord>,
    /// Intermediate stage outputs, relative to the dataset directory. Rows
    /// count non-empty lines after the dataset-id line.
    #[serde(default)]
    pub artifacts: Vec<FileRecord>,
}

impl VersionManifest {
    /// Build a manifest whose dataset id is a digest of everything that
    /// determines the output.
    pub fn new(
        created: &str,
        config: BTreeMap<String, String>,
        seeds: BTreeMap<String, u64>,
        inputs: Vec<ArtifactRecord>,
        models: Vec<ArtifactRecord>,
    ) -> Self {
        let code_version = format!("biokg {}", env!("CARGO_PKG_VERSION"));
        let mut m = VersionManifest {
            dataset_id: String::new(),
            code_version,
            created: created.to_string(),
            config,
            seeds,
            inputs,
            models,
            files: Vec::new(),
            artifacts: Vec::new(),
        };
        let basis = serde_json::to_vec(&m).expect("manifest serializes");
        m.dataset_id = format!("ds-{}", &util::sha256_hex(&basis)[..16]);
        m
    }
}

/// In-memory knowledge graph, kept in canonical order by [`KnowledgeGraph::normalize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    pub concepts: Vec<ConceptRecord>,
    pub terms: Vec<TermRecord>,
    pub triplets: Vec<RelationTriplet>,
    pub manifest: VersionManifest,
}

impl KnowledgeGraph {
    /// Sort concepts by id, terms by term id, triplets by key, and each
    /// triplet's provenance.
    pub fn normalize(&mut self) {
        self.concepts.sort_by(|a, b| a.id.cmp(&b.id));
        self.terms.sort_by(|a, b| a.term_id.cmp(&b.term_id));
        for t in &mut self.triplets {
            t.provenance.sort();
            t.provenance.dedup();
        }
        self.triplets.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    /// Referential integrity and field checks.
    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for c in &self.concepts {
            if !ids.insert(&c.id) {
                return Err(Error::Integrity(format!("duplicate concept id {}", c.id)));
            }
            util::check_field(&c.preferred_term)?;
            for s in &c.semtypes {
                util::check_field(s)?;
                if s.contains('|') {
                    return Err(Error::Integrity(format!("semantic type {s:?} contains '|'")));
                }
            }
        }
        let mut dangling = Vec::new();
        let mut term_ids = BTreeSet::new();
        for t in &self.terms {
            if !term_ids.insert(&t.term_id) {
                return Err(Error::Integrity(format!("duplicate term id {}", t.term_id)));
            }
            util::check_field(&t.surface)?;
            if !ids.contains(&t.concept_id) {
                dangling.push(format!("term {} -> {}", t.term_id, t.concept_id));
            }
        }
        let mut keys = BTreeSet::new();
        for t in &self.triplets {
            if relation_index(&t.relation).is_none() {
                return Err(Error::Integrity(format!("relation {:?} is not in the schema", t.relation)));
            }
            util::check_field(&t.model_version)?;
            for end in [&t.head, &t.tail] {
                if !ids.contains(end) {
                    dangling.push(format!("triplet {} -> {}", t.item_id(), end));
                }
            }
            if t.relation == IS_A && t.head == t.tail {
                return Err(Error::Integrity(format!("self-referential is a on {}", t.head)));
            }
            if t.source == TripletSource::ReModel && t.provenance.is_empty() {
                return Err(Error::Integrity(format!("model triplet {} has no provenance", t.item_id())));
            }
            if !keys.insert(t.key()) {
                return Err(Error::Integrity(format!("duplicate triplet {}", t.item_id())));
            }
        }
        if dangling.is_empty() {
            Ok(())
        } else {
            Err(Error::DanglingReferences(dangling))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ProvenanceRow {
    item_id: String,
    doc_id: String,
    sent_index: usize,
    span: (usize, usize),
    token_span: (usize, usize),
    model_version: String,
}

#[derive(Serialize, Deserialize)]
struct ProvenanceHeader {
    dataset_id: String,
}

fn tsv_file(dataset_id: &str, header: &str, rows: &[String]) -> String {
    let mut out = format!("# dataset_id={dataset_id}\n{header}\n");
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    out
}

/// Render all data files of a graph in canonical order, returning
/// `(file name, contents, data rows)`.
fn render(kg: &KnowledgeGraph) -> Result<Vec<(&'static str, String, usize)>> {
    let id = &kg.manifest.dataset_id;
    let concepts: Vec<String> = kg
        .concepts
        .iter()
        .map(|c| format!("{}\t{}\t{}", c.id, c.preferred_term, c.semtypes.join("|")))
        .collect();
    let terms: Vec<String> = kg
        .terms
        .iter()
        .map(|t| {
            format!(
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.term_id,
                t.concept_id,
                t.surface,
                t.language.as_str(),
                t.term_type.as_str(),
                t.frequency
            )
        })
        .collect();
    let relations: Vec<String> = kg
        .triplets
        .iter()
        .map(|t| format!("{}\t{}\t{}\t{}\t{}", t.head, t.relation, t.tail, t.source, t.model_version))
        .collect();
    let mut prov = serde_json::to_string(&ProvenanceHeader { dataset_id: id.clone() })?;
    prov.push('\n');
    let mut prov_rows = 0;
    for t in &kg.triplets {
        for occ in &t.provenance {
            prov.push_str(&serde_json::to_string(&ProvenanceRow {
                item_id: t.item_id(),
                doc_id: occ.doc_id.clone(),
                sent_index: occ.sent_index,
                span: (occ.char_start, occ.char_end),
                token_span: (occ.start, occ.end),
                model_version: t.model_version.clone(),
            })?);
            prov.push('\n');
            prov_rows += 1;
        }
    }
    Ok(vec![
        (CONCEPTS_FILE, tsv_file(id, "concept_id\tpreferred_term\tsemtypes", &concepts), concepts.len()),
        (
            TERMS_FILE,
            tsv_file(id, "term_id\tconcept_id\tsurface\tlanguage\tterm_type\tfrequency", &terms),
            terms.len(),
        ),
        (
            RELATIONS_FILE,
            tsv_file(id, "head\trelation\ttail\tsource\tmodel_version", &relations),
            relations.len(),
        ),
        (PROVENANCE_FILE, prov, prov_rows),
    ])
}

/// Validate and write a graph. The graph is normalized first; the written
/// manifest lists every data file with its hash and row count.
pub fn write_kg(kg: &KnowledgeGraph, out_dir: &Path) -> Result<VersionManifest> {
    let mut kg = kg.clone();
    kg.normalize();
    kg.validate()?;
    let mut manifest = kg.manifest.clone();
    manifest.files.clear();
    for (name, contents, rows) in render(&kg)? {
        util::write_string(&out_dir.join(name), &contents)?;
        manifest.files.push(FileRecord {
            name: name.to_string(),
            sha256: util::sha256_hex(contents.as_bytes()),
            rows,
        });
    }
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &VersionManifest, out_dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    util::write_string(&out_dir.join(MANIFEST_FILE), &text)
}

pub fn read_manifest(dir: &Path) -> Result<VersionManifest> {
    let path = dir.join(MANIFEST_FILE);
    serde_json::from_str(&util::read_to_string(&path)?)
        .map_err(|e| Error::parse(util::file_label(&path), e.line(), e.to_string()))
}

/// Split a TSV file into data rows after checking the dataset-id line and
/// the header. Yields `(line number, columns)`.
fn tsv_rows<'a>(
    text: &'a str,
    label: &str,
    dataset_id: &str,
    header: &str,
    columns: usize,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    let expected = format!("# dataset_id={dataset_id}");
    if lines.next() != Some(expected.as_str()) {
        return Err(Error::parse(label, 1, format!("expected {expected:?}")));
    }
    if lines.next() != Some(header) {
        return Err(Error::parse(label, 2, format!("expected header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != columns {
            return Err(Error::parse(label, i + 3, format!("expected {columns} columns, found {}", cols.len())));
        }
        out.push((i + 3, cols));
    }
    Ok(out)
}

/// Load a dataset directory. Every file must match the manifest's hash and
/// row count, and integrity is re-validated, so a truncated or edited file
/// fails the load rather than yielding a partial graph.
pub fn read_kg(dir: &Path) -> Result<KnowledgeGraph> {
    let manifest = read_manifest(dir)?;
    let id = manifest.dataset_id.clone();
    let mut texts: BTreeMap<&str, String> = BTreeMap::new();
    for name in [CONCEPTS_FILE, TERMS_FILE, RELATIONS_FILE, PROVENANCE_FILE] {
        let path = dir.join(name);
        let text = util::read_to_string(&path)?;
        let record = manifest
            .files
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::Integrity(format!("manifest does not list {name}")))?;
        if util::sha256_hex(text.as_bytes()) != record.sha256 {
            return Err(Error::Integrity(format!("{name} does not match its manifest hash")));
        }
        texts.insert(name, text);
    }
    let bad = |label: &str, line: usize, e: Error| Error::parse(label, line, e.to_string());

    let mut concepts = Vec::new();
    for (line, c) in tsv_rows(&texts[CONCEPTS_FILE], CONCEPTS_FILE, &id, "concept_id\tpreferred_term\tsemtypes", 3)? {
        concepts.push(ConceptRecord {
            id: c[0].parse().map_err(|e| bad(CONCEPTS_FILE, line, e))?,
            preferred_term: c[1].to_string(),
            semtypes: if c[2].is_empty() {
                Vec::new()
            } else {
                c[2].split('|').map(str::to_string).collect()
            },
        });
    }
    let mut terms = Vec::new();
    for (line, c) in tsv_rows(
        &texts[TERMS_FILE],
        TERMS_FILE,
        &id,
        "term_id\tconcept_id\tsurface\tlanguage\tterm_type\tfrequency",
        6,
    )? {
        terms.push(TermRecord {
            term_id: c[0].to_string(),
            concept_id: c[1].parse().map_err(|e| bad(TERMS_FILE, line, e))?,
            surface: c[2].to_string(),
            language: c[3].parse().map_err(|e| bad(TERMS_FILE, line, e))?,
            term_type: c[4].parse().map_err(|e| bad(TERMS_FILE, line, e))?,
            frequency: c[5]
                .parse()
                .map_err(|_| Error::parse(TERMS_FILE, line, "frequency must be an integer"))?,
        });
    }
    let mut triplets = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (line, c) in tsv_rows(
        &texts[RELATIONS_FILE],
        RELATIONS_FILE,
        &id,
        "head\trelation\ttail\tsource\tmodel_version",
        5,
    )? {
        let t = RelationTriplet {
            head: c[0].parse().map_err(|e| bad(RELATIONS_FILE, line, e))?,
            relation: c[1].to_string(),
            tail: c[2].parse().map_err(|e| bad(RELATIONS_FILE, line, e))?,
            source: c[3].parse().map_err(|e| bad(RELATIONS_FILE, line, e))?,
            provenance: Vec::new(),
            model_version: c[4].to_string(),
        };
        index.insert(t.item_id(), triplets.len());
        triplets.push(t);
    }
    let mut prov_lines = texts[PROVENANCE_FILE].lines().enumerate();
    let header: ProvenanceHeader = match prov_lines.next() {
        Some((_, l)) => serde_json::from_str(l).map_err(|e| Error::parse(PROVENANCE_FILE, 1, e.to_string()))?,
        None => return Err(Error::parse(PROVENANCE_FILE, 1, "missing header")),
    };
    if header.dataset_id != id {
        return Err(Error::parse(PROVENANCE_FILE, 1, "dataset id does not match the manifest"));
    }
    let mut prov_rows = 0;
    for (i, line) in prov_lines {
        let row: ProvenanceRow =
            serde_json::from_str(line).map_err(|e| Error::parse(PROVENANCE_FILE, i + 1, e.to_string()))?;
        let &ti = index
            .get(&row.item_id)
            .ok_or_else(|| Error::parse(PROVENANCE_FILE, i + 1, format!("unknown item {}", row.item_id)))?;
        triplets[ti].provenance.push(SentenceOccurrence {
            doc_id: row.doc_id,
            sent_index: row.sent_index,
            start: row.token_span.0,
            end: row.token_span.1,
            char_start: row.span.0,
            char_end: row.span.1,
        });
        prov_rows += 1;
    }

    let counts = [
        (CONCEPTS_FILE, concepts.len()),
        (TERMS_FILE, terms.len()),
        (RELATIONS_FILE, triplets.len()),
        (PROVENANCE_FILE, prov_rows),
    ];
    for (name, n) in counts {
        let expected = manifest.files.iter().find(|f| f.name == name).map_or(0, |f| f.rows);
        if n != expected {
            return Err(Error::Integrity(format!("{name} has {n} rows, manifest says {expected}")));
        }
    }
    let kg = KnowledgeGraph {
        concepts,
        terms,
        triplets,
        manifest,
    };
    kg.validate()?;
    Ok(kg)
}
