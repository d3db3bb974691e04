//! End-to-end orchestration of the stages from a [`PipelineConfig`].
//!
//! Output layout: the knowledge-graph files and `manifest.json` at the top
//! of the output directory, intermediate results under `stages/`. Every
//! intermediate file starts with the dataset id.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cluster::{assign_ids_and_preferred, cluster, clusters_to_tsv, Concept, ConceptId};
use crate::config::{PipelineConfig, Stage};
use crate::corpus::{normalize_term, Corpus, OccurrenceIndex};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::fmm::{annotate, fmm_match, merge_tags, write_conll, Annotation, MatchTrie, SemanticGroups, TableSta};
use crate::kg_store::{
    self, mirror_reverse_relations, term_id, ArtifactRecord, ConceptRecord, FileRecord, KnowledgeGraph, Language,
    RelationTriplet, TermRecord, TermType, TripletSource, VersionManifest,
};
use crate::lexicon::{clean_terms, load_dictionary, FilterRuleSet, SeedTerm, SourceTypeFilter};
use crate::ner::{
    clean_discovered, discover_terms, discovered_to_tsv, noun_phrase_filter, ratio_filter, sample_training_set,
    training_set_to_conll, FilePredictions, FmmEcho, NerAdapter,
};
use crate::relation::bags::bags_to_jsonl;
use crate::relation::model::{encode_bag, predict, Candidate};
use crate::relation::schema::relation_index;
use crate::relation::{
    build_bags, co_occurring_pairs, sample_negatives, train, Bag, BagParams, ConceptMatcher, ReModel, RelationSchema,
    SentenceEncoder, ToyEncoder, TrainConfig,
};
use crate::semtype::{classify_concepts_with, derive_isa_triplets, types_to_tsv, TermTypeCounts, TypeMapping};
use crate::translation::{filter_translations, judged_to_tsv, load_candidates, translation_rate_report};
use crate::util;

pub const STAGES_DIR: &str = "stages";
const IMPORTED_VERSION: &str = "imported";

/// What a run did.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub manifest: VersionManifest,
    pub dry_run: bool,
    pub stages_run: Vec<Stage>,
    /// Named counts collected along the way, for display.
    pub counts: BTreeMap<String, usize>,
}

/// Intermediate outputs held until the run succeeds.
struct Artifacts {
    dataset_id: String,
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn tsv(&mut self, name: &str, body: String) {
        let text = format!("# dataset_id={}\n{body}", self.dataset_id);
        self.files.push((name.to_string(), text));
    }

    fn jsonl(&mut self, name: &str, body: String) {
        let header = serde_json::json!({ "dataset_id": self.dataset_id });
        self.files.push((name.to_string(), format!("{header}\n{body}")));
    }

    fn records(&self) -> Vec<FileRecord> {
        self.files
            .iter()
            .map(|(name, text)| FileRecord {
                name: format!("{STAGES_DIR}/{name}"),
                sha256: util::sha256_hex(text.as_bytes()),
                rows: text.lines().skip(1).filter(|l| !l.trim().is_empty()).count(),
            })
            .collect()
    }

    fn write(&self, out_dir: &Path) -> Result<()> {
        for (name, text) in &self.files {
            util::write_string(&out_dir.join(STAGES_DIR).join(name), text)?;
        }
        Ok(())
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Hash every configured input and build the run's manifest.
pub fn manifest_for(cfg: &PipelineConfig) -> Result<VersionManifest> {
    let mut inputs = Vec::new();
    for (key, path) in cfg.inputs.listed() {
        if path.as_os_str().is_empty() {
            continue;
        }
        inputs.push(ArtifactRecord {
            name: key.to_string(),
            sha256: util::sha256_file(path)?,
        });
    }
    let seeds = [("seed".to_string(), cfg.seed)].into();
    Ok(VersionManifest::new(&cfg.created, cfg.snapshot(), seeds, inputs, Vec::new()))
}

/// Load and clean the seed dictionary.
pub fn load_seed_terms(cfg: &PipelineConfig) -> Result<(Vec<SeedTerm>, FilterRuleSet)> {
    let filter = match &cfg.inputs.source_filter {
        Some(p) => Some(SourceTypeFilter::parse(&util::read_to_string(p)?, &util::file_label(p))?),
        None => None,
    };
    let rules = match &cfg.inputs.rules {
        Some(p) => FilterRuleSet::load(p)?,
        None => FilterRuleSet::default(),
    };
    let dictionary = load_dictionary(&cfg.inputs.dictionary, filter.as_ref())?;
    let cleaned = clean_terms(&dictionary, &rules);
    for r in &cleaned.rejected {
        log::debug!("seed term {:?} rejected by {}", r.item.surface, r.rule);
    }
    Ok((cleaned.kept, rules))
}

fn load_sta(cfg: &PipelineConfig) -> Result<TableSta> {
    match &cfg.inputs.sta {
        Some(p) => TableSta::load(p, cfg.sta_fallback.clone()),
        None => Ok(TableSta::new(cfg.sta_fallback.clone())),
    }
}

fn annotate_corpus(
    corpus: &Corpus,
    seeds: &[SeedTerm],
    sta: &TableSta,
    groups: &SemanticGroups,
    seed: u64,
) -> Result<Vec<Annotation>> {
    let surfaces: Vec<&str> = seeds.iter().map(|s| s.surface.as_str()).collect();
    let index = OccurrenceIndex::build(corpus, &surfaces);
    let trie = MatchTrie::from_seed_terms(seeds);
    let sentences: Vec<_> = corpus.sentences().collect();
    let per_sentence: Vec<Vec<Annotation>> = sentences
        .par_iter()
        .map(|s| {
            let matches = fmm_match(&s.norm_tokens(), &trie);
            annotate(s, &matches, sta, &index, groups, seed)
        })
        .collect::<Result<_>>()?;
    Ok(per_sentence.into_iter().flatten().collect())
}

fn annotations_to_conll(corpus: &Corpus, annotations: &[Annotation]) -> Result<String> {
    let mut by_sentence: BTreeMap<(&str, usize), Vec<&Annotation>> = BTreeMap::new();
    for a in annotations {
        by_sentence
            .entry((&a.occurrence.doc_id, a.occurrence.sent_index))
            .or_default()
            .push(a);
    }
    let mut rows = Vec::with_capacity(by_sentence.len());
    for ((doc, idx), anns) in by_sentence {
        let sent = corpus
            .sentence(doc, idx)
            .ok_or_else(|| Error::InvalidInput(format!("unknown sentence {doc}#{idx}")))?;
        rows.push((sent, merge_tags(sent.len(), &anns)));
    }
    Ok(write_conll(rows))
}

/// Fine-type predictions per term, one STA call per corpus occurrence.
fn term_type_counts(corpus: &Corpus, concepts: &[Concept], index: &OccurrenceIndex, sta: &TableSta) -> TermTypeCounts {
    use crate::fmm::StaAdapter;
    let mut out = TermTypeCounts::new();
    for c in concepts {
        for t in &c.terms {
            for occ in index.occurrences(t) {
                if let Some(s) = corpus.sentence(&occ.doc_id, occ.sent_index) {
                    *out.entry(t.clone()).or_default().entry(sta.predict(t, s)).or_default() += 1;
                }
            }
        }
    }
    out
}

/// Map each surface to the first concept that lists it.
fn term_lookup(concepts: &[Concept]) -> BTreeMap<String, ConceptId> {
    let mut out = BTreeMap::new();
    for c in concepts {
        for t in &c.terms {
            out.entry(t.clone()).or_insert_with(|| c.id.clone());
        }
    }
    out
}

/// Read `head \t relation \t tail` rows, naming ends by concept id or term
/// surface. Rows whose ends are unknown are skipped with a warning; an
/// unknown relation is an error.
pub fn load_imported_triplets(path: &Path, concepts: &[Concept]) -> Result<Vec<RelationTriplet>> {
    let label = util::file_label(path);
    let text = util::read_to_string(path)?;
    let lookup = term_lookup(concepts);
    let ids: BTreeSet<&ConceptId> = concepts.iter().map(|c| &c.id).collect();
    let resolve = |s: &str| -> Option<ConceptId> {
        let s = s.trim();
        if ConceptId::is_valid(s) {
            let id: ConceptId = s.parse().ok()?;
            return ids.contains(&id).then_some(id);
        }
        lookup.get(&normalize_term(s)).cloned()
    };
    let mut out = Vec::new();
    for (lineno, line) in util::data_lines(&text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(&label, lineno, "expected head, relation, tail"));
        }
        let rel = cols[1].trim();
        if relation_index(rel).is_none() {
            return Err(Error::parse(&label, lineno, format!("unknown relation {rel:?}")));
        }
        match (resolve(cols[0]), resolve(cols[2])) {
            (Some(h), Some(t)) if h != t => {
                out.push(RelationTriplet::new(h, rel, t, TripletSource::Imported, IMPORTED_VERSION))
            }
            (Some(_), Some(_)) => log::warn!("{label}:{lineno}: head and tail are the same concept; skipped"),
            _ => log::warn!("{label}:{lineno}: head or tail not in the concept set; skipped"),
        }
    }
    Ok(out)
}

/// Register a concept for every retained type label, reusing a concept
/// whose term equals the normalized label and creating one otherwise.
/// Returns the registry and the fine-to-target "is a" links between type
/// nodes.
fn register_types(
    concepts: &mut Vec<Concept>,
    labels: &BTreeSet<String>,
    mapping: &TypeMapping,
    model_version: &str,
) -> Result<(BTreeMap<String, ConceptId>, Vec<RelationTriplet>)> {
    let mut all: BTreeSet<String> = labels.clone();
    for l in labels {
        all.insert(mapping.target(l)?.to_string());
    }
    let lookup = term_lookup(concepts);
    let mut next = concepts.len() + 1;
    let mut registry = BTreeMap::new();
    for label in &all {
        let term = normalize_term(label);
        let id = match lookup.get(&term) {
            Some(id) => id.clone(),
            None => {
                let id = ConceptId::from_index(next);
                next += 1;
                concepts.push(Concept {
                    id: id.clone(),
                    terms: vec![term.clone()],
                    preferred_term: term,
                    semtypes: vec![mapping.target(label)?.to_string()],
                });
                id
            }
        };
        registry.insert(label.clone(), id);
    }
    let mut links = Vec::new();
    for label in labels {
        let target = mapping.target(label)?;
        let (a, b) = (&registry[label], &registry[target]);
        if a != b {
            links.push(RelationTriplet::new(a.clone(), crate::relation::schema::IS_A, b.clone(), TripletSource::SemtypeDerived, model_version));
        }
    }
    Ok((registry, links))
}

fn model_version(model: &ReModel<f64>) -> Result<(String, String)> {
    let json = serde_json::to_string(model)?;
    let sha = util::sha256_hex(json.as_bytes());
    Ok((format!("re-{}", &sha[..12]), json))
}

/// Run the enabled stages. With `dry_run` everything is computed and
/// validated but nothing is written.
pub fn run(cfg: &PipelineConfig, dry_run: bool) -> Result<RunReport> {
    cfg.validate()?;
    let mut manifest = manifest_for(cfg)?;
    let mut art = Artifacts {
        dataset_id: manifest.dataset_id.clone(),
        files: Vec::new(),
    };
    let mut counts = BTreeMap::new();
    let mut stages_run = Vec::new();
    let out_dir = cfg.out_dir.clone();

    if !Stage::ALL.iter().any(|&s| cfg.enabled(s)) {
        if !dry_run {
            kg_store::write_manifest(&manifest, &out_dir)?;
        }
        return Ok(RunReport {
            out_dir,
            manifest,
            dry_run,
            stages_run,
            counts,
        });
    }

    let corpus = stage("ingest", Corpus::ingest(&cfg.inputs.corpus))?;
    let (seeds, rules) = stage("ingest", load_seed_terms(cfg))?;
    counts.insert("documents".into(), corpus.len());
    counts.insert("seed_terms".into(), seeds.len());
    let sta = stage("ingest", load_sta(cfg))?;
    let table: Option<EmbeddingTable<f64>> = match &cfg.inputs.embeddings {
        Some(p) => Some(stage("ingest", EmbeddingTable::load(p))?),
        None => None,
    };

    if cfg.enabled(Stage::Annotate) {
        let groups = match &cfg.inputs.semantic_groups {
            Some(p) => stage("annotate", SemanticGroups::load(p))?,
            None => SemanticGroups::default_table(),
        };
        let annotations = stage("annotate", annotate_corpus(&corpus, &seeds, &sta, &groups, cfg.seed))?;
        counts.insert("annotations".into(), annotations.len());
        art.tsv("annotations.conll", stage("annotate", annotations_to_conll(&corpus, &annotations))?);
        stages_run.push(Stage::Annotate);

        if cfg.enabled(Stage::Sample) {
            let set = sample_training_set(&annotations);
            counts.insert("training_sentences".into(), set.len());
            art.tsv("ner_train.conll", stage("sample", training_set_to_conll(&set, &corpus))?);
            stages_run.push(Stage::Sample);
        }
    }

    let mut vocabulary: BTreeSet<String> = seeds.iter().map(|s| s.surface.clone()).collect();
    if cfg.enabled(Stage::Discover) {
        let adapter: Box<dyn NerAdapter> = match &cfg.inputs.ner_predictions {
            Some(p) => Box::new(stage("discover", FilePredictions::load(p))?),
            None => Box::new(FmmEcho::new(&seeds)),
        };
        let found = stage("discover", discover_terms(&corpus, adapter.as_ref()))?;
        counts.insert("discovered_terms".into(), found.len());
        let (kept, by_ratio) = stage("discover", ratio_filter(found, cfg.ratio_threshold))?;
        let mut rejected: Vec<(String, String)> =
            by_ratio.into_iter().map(|t| (t.surface, "ratio".to_string())).collect();
        let kept = match cfg.noun_phrase_mode {
            Some(mode) => {
                let np = noun_phrase_filter(kept, &corpus, mode);
                rejected.extend(np.rejected.into_iter().map(|t| (t.surface, "noun_phrase".to_string())));
                np.kept
            }
            None => kept,
        };
        let cleaned = clean_discovered(kept, &rules);
        rejected.extend(cleaned.rejected.into_iter().map(|r| (r.item.surface, r.rule)));
        rejected.sort();
        counts.insert("discovered_kept".into(), cleaned.kept.len());
        vocabulary.extend(cleaned.kept.iter().map(|t| t.surface.clone()));
        art.tsv("discovered_terms.tsv", discovered_to_tsv(&cleaned.kept));
        let mut body = String::from("term\trule\n");
        for (t, r) in rejected {
            body.push_str(&format!("{t}\t{r}\n"));
        }
        art.tsv("discovered_rejected.tsv", body);
        stages_run.push(Stage::Discover);
    }
    let vocabulary: Vec<String> = vocabulary.into_iter().collect();

    let mut concepts: Vec<Concept> = Vec::new();
    let frequency = OccurrenceIndex::build(&corpus, &vocabulary);
    if cfg.enabled(Stage::Cluster) {
        let table = table.as_ref().expect("validated");
        let clustering = stage("cluster", cluster(&vocabulary, table, &cfg.cluster))?;
        concepts = stage("cluster", assign_ids_and_preferred(&clustering.clusters, &frequency))?;
        counts.insert("concepts".into(), concepts.len());
        counts.insert("split_rejections".into(), clustering.rejections.len());
        counts.insert("terms_without_vectors".into(), clustering.excluded.len());
        art.tsv("clusters.tsv", clusters_to_tsv(&concepts));
        let mut body = String::from("size\tmean_cosine\tmembers\n");
        for r in &clustering.rejections {
            body.push_str(&format!("{}\t{:.6}\t{}\n", r.members.len(), r.mean_cosine, r.members.join("|")));
        }
        art.tsv("cluster_rejections.tsv", body);
        let mut body = String::from("term\n");
        for t in &clustering.excluded {
            body.push_str(t);
            body.push('\n');
        }
        art.tsv("cluster_excluded.tsv", body);
        stages_run.push(Stage::Cluster);
    }

    let mut triplets: Vec<RelationTriplet> = Vec::new();
    let mut concept_types: BTreeMap<ConceptId, Vec<String>> = BTreeMap::new();
    if cfg.enabled(Stage::Type) {
        let mapping = match &cfg.inputs.type_mapping {
            Some(p) => stage("type", TypeMapping::load(p))?,
            None => TypeMapping::default_table(),
        };
        let preds = term_type_counts(&corpus, &concepts, &frequency, &sta);
        let typed = stage(
            "type",
            classify_concepts_with(&concepts, &preds, &mapping, cfg.type_share_denominator),
        )?;
        for (c, t) in concepts.iter_mut().zip(&typed) {
            c.semtypes = t.target_types.clone();
        }
        let version = "semtype-rule";
        let labels: BTreeSet<String> = typed.iter().flat_map(|t| t.fine_types.iter().cloned()).collect();
        let (registry, links) = stage("type", register_types(&mut concepts, &labels, &mapping, version))?;
        triplets.extend(stage("type", derive_isa_triplets(&typed, &registry, version))?);
        triplets.extend(links);
        counts.insert("type_concepts".into(), concepts.len() - typed.len());
        art.tsv("semtypes.tsv", types_to_tsv(&typed));
        stages_run.push(Stage::Type);
    }
    for c in &concepts {
        concept_types.insert(c.id.clone(), c.semtypes.clone());
    }

    let imported = match (&cfg.inputs.triplets, cfg.enabled(Stage::Cluster)) {
        (Some(p), true) => stage("relations", load_imported_triplets(p, &concepts))?,
        _ => Vec::new(),
    };
    counts.insert("imported_triplets".into(), imported.len());
    let stored = mirror_reverse_relations(&imported);

    if cfg.enabled(Stage::Bags) {
        let schema = match &cfg.inputs.relation_schema {
            Some(p) => stage("bags", RelationSchema::load(p))?,
            None => RelationSchema::default(),
        };
        let params = BagParams {
            max_distance: cfg.max_distance,
            max_bag: cfg.max_bag,
            seed: cfg.seed,
        };
        let matcher = ConceptMatcher::new(&concepts);
        let pairs = co_occurring_pairs(&corpus, &matcher, cfg.max_distance);
        let mut bags = build_bags(&stored, &pairs, &params);
        let positives = bags.len();
        bags.extend(sample_negatives(
            &schema,
            &concept_types,
            &stored,
            &pairs,
            positives,
            cfg.negative_ratio,
            &params,
        ));
        bags.sort_by(|a, b| (&a.head, &a.tail).cmp(&(&b.head, &b.tail)));
        counts.insert("positive_bags".into(), positives);
        counts.insert("negative_bags".into(), bags.len() - positives);
        art.jsonl("bags.jsonl", stage("bags", bags_to_jsonl(&bags))?);
        stages_run.push(Stage::Bags);

        if cfg.enabled(Stage::Train) {
            let encoder = ToyEncoder::new(cfg.hash_dim, table.as_ref());
            let (model, version) = stage("train", train_model(cfg, &encoder, &bags, &mut art))?;
            manifest.models.push(ArtifactRecord {
                name: "re_model".into(),
                sha256: version.1.clone(),
            });
            stages_run.push(Stage::Train);

            if cfg.enabled(Stage::Predict) {
                let candidates: Vec<Candidate> = pairs
                    .iter()
                    .flat_map(|((h, t), sents)| {
                        sents.iter().map(|s| Candidate {
                            head: h.clone(),
                            tail: t.clone(),
                            sentence: s.clone(),
                        })
                    })
                    .collect();
                let preds = stage("predict", predict(&model, &encoder, &candidates, cfg.prediction_threshold))?;
                let none = Vec::new();
                let mut grouped: BTreeMap<(ConceptId, &'static str, ConceptId), RelationTriplet> = BTreeMap::new();
                let mut body = String::from("head\trelation\ttail\tprobability\tdoc_id\tsent_index\n");
                for p in &preds {
                    let (ht, tt) = (
                        concept_types.get(&p.head).unwrap_or(&none),
                        concept_types.get(&p.tail).unwrap_or(&none),
                    );
                    if !schema.compatible(p.relation, ht, tt) {
                        continue;
                    }
                    body.push_str(&format!(
                        "{}\t{}\t{}\t{:.6}\t{}\t{}\n",
                        p.head, p.relation, p.tail, p.probability, p.occurrence.doc_id, p.occurrence.sent_index
                    ));
                    grouped
                        .entry((p.head.clone(), p.relation, p.tail.clone()))
                        .or_insert_with(|| {
                            RelationTriplet::new(p.head.clone(), p.relation, p.tail.clone(), TripletSource::ReModel, &version.0)
                        })
                        .provenance
                        .push(p.occurrence.clone());
                }
                counts.insert("predicted_triplets".into(), grouped.len());
                art.tsv("predictions.tsv", body);
                triplets.extend(grouped.into_values());
                stages_run.push(Stage::Predict);
            }
        }
    }

    let mut translations: BTreeMap<ConceptId, BTreeSet<String>> = BTreeMap::new();
    if cfg.enabled(Stage::Translate) {
        let table = table.as_ref().expect("validated");
        let path = cfg.inputs.translations.as_ref().expect("validated");
        let candidates = stage("translate", load_candidates(path))?;
        let outcome = stage("translate", filter_translations(&candidates, table, &cfg.translation))?;
        counts.insert("translations_kept".into(), outcome.kept.len());
        counts.insert("translations_deleted".into(), outcome.deleted.len());
        counts.insert("translations_undecidable".into(), outcome.undecidable.len());
        art.tsv("translations.tsv", judged_to_tsv(&outcome));
        let rates = translation_rate_report(&concepts, &candidates, &outcome.kept);
        let mut body = String::from("semtype\tconcepts\tconcepts_translated\tconcept_rate\tterms\tterms_translated\tterm_rate\n");
        for r in &rates {
            body.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\t{}\t{}\t{:.6}\n",
                r.semtype, r.concepts, r.concepts_translated, r.concept_rate, r.terms, r.terms_translated, r.term_rate
            ));
        }
        art.tsv("translation_rates.tsv", body);
        let lookup = term_lookup(&concepts);
        for j in &outcome.kept {
            let zh = j.candidate.translated.trim();
            match lookup.get(&normalize_term(&j.candidate.source)) {
                Some(id) if !zh.is_empty() => {
                    translations.entry(id.clone()).or_default().insert(zh.to_string());
                }
                _ => log::warn!("translation source {:?} is not a concept term; skipped", j.candidate.source),
            }
        }
        stages_run.push(Stage::Translate);
    }

    triplets.extend(stored);
    let triplets = mirror_reverse_relations(&triplets);
    counts.insert("triplets".into(), triplets.len());

    manifest.artifacts = art.records();
    let kg = build_kg(&concepts, &frequency, &translations, triplets, manifest.clone());
    if cfg.enabled(Stage::Store) {
        stage("store", kg.validate())?;
        if !dry_run {
            manifest = stage("store", kg_store::write_kg(&kg, &out_dir))?;
        }
        stages_run.push(Stage::Store);
    } else if !dry_run {
        kg_store::write_manifest(&manifest, &out_dir)?;
    }
    if !dry_run {
        art.write(&out_dir)?;
    }
    Ok(RunReport {
        out_dir,
        manifest,
        dry_run,
        stages_run,
        counts,
    })
}

fn train_model(
    cfg: &PipelineConfig,
    encoder: &ToyEncoder<'_, f64>,
    bags: &[Bag],
    art: &mut Artifacts,
) -> Result<(ReModel<f64>, (String, String))> {
    let encoded = bags
        .par_iter()
        .map(|b| encode_bag(encoder as &dyn SentenceEncoder<f64>, b))
        .collect::<Result<Vec<_>>>()?;
    let tc = TrainConfig {
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        batch_size: (cfg.batch_size > 0).then_some(cfg.batch_size),
        seed: cfg.seed,
    };
    let (model, curve) = train(ReModel::new(encoder.dim()), &encoded, &tc)?;
    let (version, json) = model_version(&model)?;
    let sha = util::sha256_hex(json.as_bytes());
    art.jsonl("re_model.jsonl", format!("{json}\n"));
    let mut body = String::from("epoch\tloss\n");
    for (i, l) in curve.iter().enumerate() {
        body.push_str(&format!("{}\t{:.9}\n", i + 1, l));
    }
    art.tsv("training_curve.tsv", body);
    Ok((model, (version, sha)))
}

/// Assemble the graph: English terms from concepts (preferred or entry,
/// with corpus frequency) and kept Chinese translations as entry terms.
fn build_kg(
    concepts: &[Concept],
    frequency: &OccurrenceIndex,
    translations: &BTreeMap<ConceptId, BTreeSet<String>>,
    triplets: Vec<RelationTriplet>,
    manifest: VersionManifest,
) -> KnowledgeGraph {
    let mut sorted: Vec<&Concept> = concepts.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut terms = Vec::new();
    for c in &sorted {
        let mut rows: Vec<(Language, TermType, String, usize)> = c
            .terms
            .iter()
            .map(|t| {
                let ty = if *t == c.preferred_term { TermType::Preferred } else { TermType::Entry };
                (Language::En, ty, t.clone(), frequency.count(t))
            })
            .collect();
        if let Some(zh) = translations.get(&c.id) {
            rows.extend(zh.iter().map(|s| (Language::Zh, TermType::Entry, s.clone(), 0)));
        }
        rows.sort();
        for (language, term_type, surface, freq) in rows {
            terms.push(TermRecord {
                term_id: term_id(terms.len() + 1),
                concept_id: c.id.clone(),
                surface,
                language,
                term_type,
                frequency: freq,
            });
        }
    }
    let mut kg = KnowledgeGraph {
        concepts: sorted
            .iter()
            .map(|c| ConceptRecord {
                id: c.id.clone(),
                preferred_term: c.preferred_term.clone(),
                semtypes: c.semtypes.clone(),
            })
            .collect(),
        terms,
        triplets,
        manifest,
    };
    kg.normalize();
    kg
}
