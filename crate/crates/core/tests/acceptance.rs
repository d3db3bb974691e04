//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use biokg::cluster::{self, ratio_cut_bipartition, ClusterParams, Concept, ConceptId, WeightedGraph};
use biokg::config::PipelineConfig;
use biokg::corpus::{Corpus, OccurrenceIndex, SentenceOccurrence};
use biokg::embedding::EmbeddingTable;
use biokg::fmm::{annotate, fmm_match, Annotation, ConstantSta, MatchTrie, SemanticGroups, TableSta};
use biokg::kg_store::{
    self, mirror_reverse_relations, ConceptRecord, KnowledgeGraph, Language, RelationTriplet, TermRecord,
    TermType, TripletSource, VersionManifest,
};
use biokg::lexicon::SeedTerm;
use biokg::ner::sample_training_set;
use biokg::relation::bags::{build_bags, co_occurring_pairs, BagParams, ConceptMatcher, H_ED, H_ST, T_ED, T_ST};
use biokg::relation::encoder::ToyEncoder;
use biokg::relation::model::{
    bag_loss, bag_loss_gradient, micro_f1, predict_bag, score_sentence, train, EncodedBag, ReModel, TrainConfig,
};
use biokg::relation::schema::{is_bidirectional, reverse_of, FORWARD, K, RELATIONS};
use biokg::semtype::{select_types, TypeDistribution, BIOS_TYPES, CHEMICAL_OR_DRUG};
use biokg::stats::{compute_stats, stats, StatsReport, TERM_BUCKETS};
use biokg::translation::{filter_translations, FilterThresholds, TranslationCandidate, Verdict};
use biokg::{pipeline, util};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    util::keyed_rng(seed, &["acceptance"])
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fixture_config(out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::load(&fixtures().join("pipeline.conf")).expect("fixture config loads");
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn seed_term(surface: &str, types: &[&str]) -> SeedTerm {
    SeedTerm {
        surface: surface.to_string(),
        source: "TEST".to_string(),
        allowed_semtypes: types.iter().map(|t| t.to_string()).collect(),
    }
}

// 1. Forward maximum matching against a quadratic longest-match scan.

const FMM_CASES: usize = 1_000;
const FMM_BUDGET: Duration = Duration::from_secs(10);

fn brute_force_fmm(tokens: &[String], dict: &BTreeMap<Vec<String>, usize>) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let hit = (pos + 1..=tokens.len())
            .rev()
            .find_map(|end| dict.get(&tokens[pos..end]).map(|&v| (pos, end, v)));
        match hit {
            Some(m) => {
                out.push(m);
                pos = m.1;
            }
            None => pos += 1,
        }
    }
    out
}

fn fmm_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let vocab = ["a", "b", "c", "d", "e"];
    let mut total_matches = 0;
    for case in 0..FMM_CASES {
        let mut trie = MatchTrie::new();
        let mut dict = BTreeMap::new();
        for id in 0..r.gen_range(1..12) {
            let len = r.gen_range(1..=4);
            let term: Vec<String> = (0..len).map(|_| vocab.choose(&mut r).unwrap().to_string()).collect();
            if trie.insert(&term, id) {
                dict.insert(term, id);
            }
        }
        let n = r.gen_range(0..25);
        let sentence: Vec<String> = (0..n).map(|_| vocab.choose(&mut r).unwrap().to_string()).collect();
        let got: Vec<(usize, usize, usize)> = fmm_match(&sentence, &trie)
            .into_iter()
            .map(|m| (m.start, m.end, *m.value))
            .collect();
        let want = brute_force_fmm(&sentence, &dict);
        check!(got == want, "case {case}: {sentence:?} fmm {got:?} != oracle {want:?}");
        total_matches += got.len();
    }
    let elapsed = start.elapsed();
    check!(elapsed < FMM_BUDGET, "took {elapsed:?}");
    Ok(format!("{FMM_CASES} instances, {total_matches} matches identical"))
}

// 2. Annotation rate 1 - DF.

const DF_BAND: (f64, f64) = (0.68, 0.72);
const MIN_MATCHES: usize = 10_000;

fn annotation_rate() -> Outcome {
    // Three of ten documents mention the term, so DF = 0.3.
    let sentence = format!("Fever{}.", " fever".repeat(33));
    let fever_doc = vec![sentence.as_str(); 100].join(" ");
    let lines: Vec<String> = (0..10)
        .map(|i| {
            let text = if i < 3 { fever_doc.as_str() } else { "Calm day." };
            serde_json::json!({ "doc_id": format!("d{i}"), "text": text }).to_string()
        })
        .collect();
    let corpus = Corpus::from_jsonl(&lines.join("\n"), "df.jsonl").map_err(|e| e.to_string())?;
    let terms = vec![seed_term("fever", &["Sign or Symptom"])];
    let trie = MatchTrie::from_seed_terms(&terms);
    let sta = ConstantSta("Sign or Symptom".to_string());
    let groups = SemanticGroups::default_table();

    let idx = OccurrenceIndex::build(&corpus, &["fever"]);
    let zero = OccurrenceIndex::build(&Corpus::from_jsonl(r#"{"doc_id":"z","text":"Calm."}"#, "z").unwrap(), &["fever"]);
    let one = OccurrenceIndex::build(&Corpus::from_jsonl(r#"{"doc_id":"o","text":"Fever."}"#, "o").unwrap(), &["fever"]);
    check!(idx.df("fever") == 0.3, "df is {}", idx.df("fever"));
    check!(zero.df("fever") == 0.0 && one.df("fever") == 1.0, "boundary df indexes are wrong");

    let rate = |index: &OccurrenceIndex| -> Result<(usize, usize), String> {
        let (mut matches, mut kept) = (0, 0);
        for sent in corpus.sentences() {
            let m = fmm_match(&sent.norm_tokens(), &trie);
            matches += m.len();
            kept += annotate(sent, &m, &sta, index, &groups, 7).map_err(|e| e.to_string())?.len();
        }
        Ok((matches, kept))
    };
    let (matches, kept) = rate(&idx)?;
    check!(matches >= MIN_MATCHES, "only {matches} matches");
    let frac = kept as f64 / matches as f64;
    check!(frac >= DF_BAND.0 && frac <= DF_BAND.1, "DF=0.3 rate {frac:.4} outside {DF_BAND:?}");
    let (_, kept0) = rate(&zero)?;
    let (_, kept1) = rate(&one)?;
    check!(kept0 == matches, "DF=0 kept {kept0} of {matches}");
    check!(kept1 == 0, "DF=1 kept {kept1}");
    Ok(format!("DF=0.3 rate {frac:.4} over {matches} matches; DF=0 rate 1; DF=1 rate 0"))
}

// 3. Training-set sampling covers every term with at most one sentence each.

fn verify_cover(annotations: &[Annotation]) -> Result<(usize, usize), String> {
    let picked = sample_training_set(annotations);
    let terms: BTreeSet<&str> = annotations.iter().map(|a| a.term.as_str()).collect();
    let mut per_sentence: BTreeMap<(&str, usize), BTreeSet<&SentenceOccurrence>> = BTreeMap::new();
    for a in annotations {
        per_sentence
            .entry((&a.occurrence.doc_id, a.occurrence.sent_index))
            .or_default()
            .insert(&a.occurrence);
    }
    let mut covered = BTreeSet::new();
    for s in &picked {
        let all = per_sentence
            .get(&(s.doc_id.as_str(), s.sent_index))
            .ok_or("picked a sentence without annotations")?;
        let carried: BTreeSet<&SentenceOccurrence> = s.annotations.iter().map(|a| &a.occurrence).collect();
        check!(&carried == all, "sentence {}#{} lost annotations", s.doc_id, s.sent_index);
        covered.extend(s.annotations.iter().map(|a| a.term.as_str()));
    }
    let missing: Vec<&&str> = terms.difference(&covered).collect();
    check!(missing.is_empty(), "terms not covered: {missing:?}");
    check!(picked.len() <= terms.len(), "{} sentences for {} terms", picked.len(), terms.len());
    Ok((terms.len(), picked.len()))
}

fn fixture_annotations() -> Result<Vec<Annotation>, String> {
    let cfg = fixture_config(Path::new("unused"));
    let corpus = Corpus::ingest(&cfg.inputs.corpus).map_err(|e| e.to_string())?;
    let (seeds, _) = pipeline::load_seed_terms(&cfg).map_err(|e| e.to_string())?;
    let sta_path = cfg.inputs.sta.as_ref().ok_or("fixture has no STA table")?;
    let sta = TableSta::load(sta_path, cfg.sta_fallback.clone()).map_err(|e| e.to_string())?;
    let groups = SemanticGroups::default_table();
    let surfaces: Vec<&str> = seeds.iter().map(|s| s.surface.as_str()).collect();
    let index = OccurrenceIndex::build(&corpus, &surfaces);
    let trie = MatchTrie::from_seed_terms(&seeds);
    let mut out = Vec::new();
    for sent in corpus.sentences() {
        let m = fmm_match(&sent.norm_tokens(), &trie);
        out.extend(annotate(sent, &m, &sta, &index, &groups, cfg.seed).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn random_annotations(r: &mut ChaCha8Rng) -> Vec<Annotation> {
    let n_terms = r.gen_range(1..30);
    // A span is one dictionary match, so it always carries the same term.
    let mut term_at: BTreeMap<(usize, usize, usize, usize), String> = BTreeMap::new();
    let mut out = Vec::new();
    for _ in 0..r.gen_range(1..120) {
        let doc = r.gen_range(0..6);
        let sent = r.gen_range(0..5);
        let start = r.gen_range(0..10);
        let end = start + r.gen_range(1..3);
        let term = term_at
            .entry((doc, sent, start, end))
            .or_insert_with(|| format!("term{}", r.gen_range(0..n_terms)))
            .clone();
        out.push(Annotation {
            term,
            occurrence: SentenceOccurrence {
                doc_id: format!("d{doc}"),
                sent_index: sent,
                start,
                end,
                char_start: start,
                char_end: end,
            },
            semtype: "Finding".to_string(),
            tags: Vec::new(),
        });
    }
    out
}

fn sampling_coverage() -> Outcome {
    let anns = fixture_annotations()?;
    check!(!anns.is_empty(), "fixture produced no annotations");
    let (terms, sentences) = verify_cover(&anns)?;
    let mut r = rng(3);
    for _ in 0..500 {
        verify_cover(&random_annotations(&mut r))?;
    }
    Ok(format!("fixture: {terms} terms covered by {sentences} sentences; 500 random sets covered"))
}

// 4. Ratio-Cut bipartition against exhaustive search.

const RATIO_CUT_GRAPHS: usize = 200;
const RATIO_CUT_FACTOR: f64 = 1.10;
const RATIO_CUT_SEED: u64 = 4;

fn random_connected_graph(r: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize, f64)> {
    let mut edges = BTreeMap::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    for i in 1..n {
        let a = order[i];
        let b = order[r.gen_range(0..i)];
        edges.insert((a.min(b), a.max(b)), r.gen_range(0.05..1.0));
    }
    let p = r.gen_range(0.1..0.7);
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(p) {
                edges.entry((a, b)).or_insert_with(|| r.gen_range(0.05..1.0));
            }
        }
    }
    edges.into_iter().map(|((a, b), w)| (a, b, w)).collect()
}

fn ratio_cut_of(edges: &[(usize, usize, f64)], in_a: &[bool]) -> f64 {
    let size_a = in_a.iter().filter(|&&x| x).count();
    let size_b = in_a.len() - size_a;
    let cut: f64 = edges.iter().filter(|(a, b, _)| in_a[*a] != in_a[*b]).map(|e| e.2).sum();
    cut / size_a as f64 + cut / size_b as f64
}

fn exhaustive_min(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    // Node n-1 stays in B; every non-empty subset of the rest is an A side.
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << (n - 1)) {
        let in_a: Vec<bool> = (0..n).map(|i| i < n - 1 && mask & (1 << i) != 0).collect();
        best = best.min(ratio_cut_of(edges, &in_a));
    }
    best
}

fn two_blob_vectors(r: &mut ChaCha8Rng, per_blob: usize, inter: f64, noise: f64, dim: usize) -> Vec<Vec<f64>> {
    let a = {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        v
    };
    let b = {
        let mut v = vec![0.0; dim];
        v[0] = inter;
        v[1] = (1.0 - inter * inter).sqrt();
        v
    };
    let mut out = Vec::new();
    for base in [&a, &b] {
        for _ in 0..per_blob {
            let mut v = base.clone();
            for x in v.iter_mut().skip(2) {
                *x += r.gen_range(-noise..noise);
            }
            out.push(v);
        }
    }
    out
}

fn cos(u: &[f64], v: &[f64]) -> f64 {
    let d: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    d / (nu * nv)
}

fn ratio_cut_oracle() -> Outcome {
    let mut r = rng(RATIO_CUT_SEED);
    let mut worst: f64 = 1.0;
    let mut over = Vec::new();
    for g in 0..RATIO_CUT_GRAPHS {
        let n = r.gen_range(3..=12);
        let edges = random_connected_graph(&mut r, n);
        let mut graph = WeightedGraph::new(n);
        for &(a, b, w) in &edges {
            graph.add_edge(a, b, w);
        }
        let bp = ratio_cut_bipartition(&graph).map_err(|e| format!("graph {g}: {e}"))?;
        let mut in_a = vec![false; n];
        bp.a.iter().for_each(|&i| in_a[i] = true);
        let recomputed = ratio_cut_of(&edges, &in_a);
        check!(
            (recomputed - bp.cut_value).abs() <= 1e-9 * recomputed.max(1.0),
            "graph {g}: reported {} but partition scores {recomputed}",
            bp.cut_value
        );
        let ratio = recomputed / exhaustive_min(n, &edges);
        worst = worst.max(ratio);
        if ratio > RATIO_CUT_FACTOR {
            over.push((g, n, ratio));
        }
    }

    let mut recovered = 0;
    const BLOB_TRIALS: usize = 20;
    for _ in 0..BLOB_TRIALS {
        let vecs = two_blob_vectors(&mut r, 30, 0.2, 0.1, 32);
        let mut graph = WeightedGraph::new(60);
        let mut inter = Vec::new();
        for i in 0..60 {
            for j in i + 1..60 {
                let c = cos(&vecs[i], &vecs[j]);
                if (i < 30) != (j < 30) {
                    inter.push(c);
                }
                graph.add_edge(i, j, c.max(0.0));
            }
        }
        let mean_inter = inter.iter().sum::<f64>() / inter.len() as f64;
        check!((mean_inter - 0.2).abs() < 0.05, "blob inter-cluster mean cosine {mean_inter:.3}");
        let bp = ratio_cut_bipartition(&graph).map_err(|e| e.to_string())?;
        if bp.a == (0..30).collect::<Vec<_>>() {
            recovered += 1;
        }
    }
    check!(
        over.is_empty(),
        "{} of {RATIO_CUT_GRAPHS} graphs exceed {RATIO_CUT_FACTOR}x the exhaustive minimum (worst {worst:.4}): {over:?}",
        over.len()
    );
    check!(recovered == BLOB_TRIALS, "two-blob recovery {recovered}/{BLOB_TRIALS}");
    Ok(format!(
        "worst ratio {worst:.4} over {RATIO_CUT_GRAPHS} graphs (bound {RATIO_CUT_FACTOR}); blobs recovered {recovered}/{BLOB_TRIALS}"
    ))
}

// 5. Clustering thresholds.

fn unit_pair(c: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![1.0, 0.0], vec![c, (1.0 - c * c).sqrt()])
}

/// Two 30-member halves with exact mean vectors `a` and `b`, `cos(a, b) =
/// inter`, members perturbed by paired opposite offsets.
fn exact_halves(inter: f64) -> EmbeddingTable<f64> {
    let dim = 64;
    let mut table = EmbeddingTable::new(dim);
    for (h, offset) in [(0usize, 2usize), (1, 18)] {
        let mut base = vec![0.0; dim];
        if h == 0 {
            base[0] = 1.0;
        } else {
            base[0] = inter;
            base[1] = (1.0 - inter * inter).sqrt();
        }
        for i in 0..30 {
            let mut v = base.clone();
            v[offset + i / 2] += if i % 2 == 0 { 0.1 } else { -0.1 };
            table.insert(&format!("h{h}m{i:02}"), v).unwrap();
        }
    }
    table
}

fn bridged_clustering(inter: f64) -> Result<cluster::Clustering<f64>, String> {
    let table = exact_halves(inter);
    let params = ClusterParams::default();
    let terms: Vec<String> = table.terms().to_vec();
    let mut sg = cluster::build_graph(&terms, &table, &params).map_err(|e| e.to_string())?;
    check!(cluster::connected_components(&sg).len() == 2, "halves should start disconnected");
    // One bridging edge makes a single 60-node component.
    let a = sg.terms.iter().position(|t| t == "h0m00").unwrap();
    let b = sg.terms.iter().position(|t| t == "h1m00").unwrap();
    sg.graph.add_edge(a, b, 0.8);
    check!(cluster::connected_components(&sg).len() == 1, "bridge failed");
    cluster::cluster_graph(&sg, &table, &params).map_err(|e| e.to_string())
}

fn clustering_thresholds() -> Outcome {
    let params = ClusterParams::default();
    for (c, expect) in [(0.807, true), (0.8, true), (0.79, false)] {
        let (u, v) = unit_pair(c);
        let mut table = EmbeddingTable::new(2);
        table.insert("x", u).unwrap();
        table.insert("y", v).unwrap();
        let sg = cluster::build_graph(&["x".into(), "y".into()], &table, &params).map_err(|e| e.to_string())?;
        check!((sg.graph.edge_count() == 1) == expect, "similarity {c}: edge present = {}", !expect);
    }

    let kept = bridged_clustering(0.65)?;
    check!(
        kept.clusters.len() == 1 && kept.clusters[0].len() == 60,
        "mean cosine 0.65 split into {:?}",
        kept.clusters.iter().map(Vec::len).collect::<Vec<_>>()
    );
    check!(kept.rejections.len() == 1, "expected one rejection, got {}", kept.rejections.len());
    let mc = kept.rejections[0].mean_cosine;
    check!((mc - 0.65).abs() < 1e-9, "rejection mean cosine {mc}");
    let split = bridged_clustering(0.3)?;
    check!(
        split.clusters.len() == 2 && split.clusters.iter().all(|c| c.len() == 30),
        "control with mean cosine 0.3 did not split in halves"
    );

    // Oversized clusters only survive with a rejection on record.
    let mut r = rng(5);
    let mut oversized = 0;
    for trial in 0..10 {
        let dim = 48;
        let mut table = EmbeddingTable::new(dim);
        let groups = r.gen_range(3..7);
        let mut bases: Vec<Vec<f64>> = Vec::new();
        for g in 0..groups {
            let mut v: Vec<f64> = match bases.last() {
                Some(prev) if g % 2 == 1 => {
                    let mut v = prev.clone();
                    v.iter_mut().for_each(|x| *x += r.gen_range(-0.35..0.35));
                    v
                }
                _ => (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(),
            };
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            bases.push(v);
        }
        for (g, base) in bases.iter().enumerate() {
            for i in 0..r.gen_range(20..70) {
                let v: Vec<f64> = base.iter().map(|x| x + r.gen_range(-0.04..0.04)).collect();
                table.insert(&format!("t{trial}g{g}m{i}"), v).unwrap();
            }
        }
        let terms = table.terms().to_vec();
        let out = cluster::cluster(&terms, &table, &params).map_err(|e| e.to_string())?;
        let rejected: HashSet<Vec<String>> = out.rejections.iter().map(|x| x.members.clone()).collect();
        for c in out.clusters.iter().filter(|c| c.len() > params.max_cluster) {
            oversized += 1;
            check!(rejected.contains(c), "trial {trial}: cluster of {} without rejection record", c.len());
        }
        for s in &out.splits {
            check!(s.mean_cosine <= params.merge_stop, "accepted split with mean cosine {}", s.mean_cosine);
        }
    }
    Ok(format!(
        "0.807 in, 0.79 out; 60-node component at mean cosine {mc:.3} kept whole; {oversized} oversized clusters all backed by rejections"
    ))
}

// 6. Semantic-type selection.

fn dist(counts: &[(&str, usize)]) -> TypeDistribution {
    let mut d = TypeDistribution::default();
    for &(t, n) in counts {
        d.add(t, n);
    }
    d
}

fn semtype_rule() -> Outcome {
    let got = select_types(&dist(&[("A", 40), ("B", 35), ("C", 25)])).map_err(|e| e.to_string())?;
    check!(got == ["A", "B"], "{{40,35,25}} -> {got:?}");
    let got = select_types(&dist(&[("A", 1), ("B", 1), ("C", 1)])).map_err(|e| e.to_string())?;
    check!(got.len() == 3, "{{1,1,1}} -> {got:?}");
    let mut r = rng(6);
    let mut max_len = 0;
    for i in 0..10_000 {
        let k = r.gen_range(1..=8);
        let counts: Vec<(&str, usize)> = BIOS_TYPES[..k].iter().map(|&t| (t, r.gen_range(0..100))).collect();
        let d = dist(&counts);
        if d.total == 0 {
            continue;
        }
        let got = select_types(&d).map_err(|e| format!("distribution {i}: {e}"))?;
        let oracle: BTreeSet<&str> = counts.iter().filter(|(_, n)| *n > 0 && 3 * n >= d.total).map(|c| c.0).collect();
        let got_set: BTreeSet<&str> = got.iter().map(String::as_str).collect();
        check!(got_set == oracle, "distribution {i}: {got:?} vs oracle {oracle:?}");
        max_len = max_len.max(got.len());
    }
    check!(max_len <= 3, "selected {max_len} types");
    Ok(format!("{{40,35,25}} -> 2, {{1,1,1}} -> 3, max {max_len} over 10000 random"))
}

// 7. Relation model math.

const LOGISTIC_TOL: f64 = 1e-12;
const LOSS_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;
/// Denominator floor for the relative gradient error.
const FD_FLOOR: f64 = 1e-2;

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn random_model(r: &mut ChaCha8Rng, dim: usize) -> ReModel<f64> {
    let mut m = ReModel::new(dim);
    m.weights.iter_mut().flatten().for_each(|w| *w = r.gen_range(-1.0..1.0));
    m.bias.iter_mut().for_each(|b| *b = r.gen_range(-1.0..1.0));
    m
}

fn random_bag(r: &mut ChaCha8Rng, dim: usize) -> EncodedBag<f64> {
    let n = r.gen_range(1..=4);
    EncodedBag {
        features: (0..n).map(|_| (0..dim).map(|_| r.gen_range(-1.0..1.0)).collect()).collect(),
        labels: (0..K).map(|_| u8::from(r.gen_bool(0.3))).collect(),
    }
}

fn re_math() -> Outcome {
    let mut r = rng(7);
    let corpus = Corpus::from_jsonl(
        r#"{"doc_id":"m","text":"Aspirin may treat the mild fever in adults."}"#,
        "m",
    )
    .unwrap();
    let sent = &corpus.docs()[0].sentences[0];
    let marked = biokg::relation::bags::MarkedSentence::new(sent, (0, 1), (5, 6)).unwrap();
    let encoder = ToyEncoder::<f64>::new(32, None);
    let h = biokg::relation::encoder::SentenceEncoder::encode(&encoder, &marked).map_err(|e| e.to_string())?;
    let mut worst_logistic: f64 = 0.0;
    for _ in 0..100 {
        let model = random_model(&mut r, 32);
        let p = score_sentence(&model, &encoder, &marked).map_err(|e| e.to_string())?;
        for k in 0..K {
            let z: f64 = model.weights[k].iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + model.bias[k];
            let oracle = 1.0 / (1.0 + (-z).exp());
            worst_logistic = worst_logistic.max((p[k] - oracle).abs());
        }
    }
    check!(worst_logistic <= LOGISTIC_TOL, "logistic error {worst_logistic:e}");

    // Sentence j is the one-hot e_j; relation 0 has sentence probabilities
    // [0.2, 0.9, 0.4] and label 1, the others are pinned near zero with label 0.
    let probs = [0.2, 0.9, 0.4];
    let mut model = ReModel::new(3);
    for (j, &p) in probs.iter().enumerate() {
        model.weights[0][j] = logit(p);
    }
    for k in 1..K {
        model.bias[k] = -60.0;
    }
    let mut labels = vec![0u8; K];
    labels[0] = 1;
    let bag = EncodedBag {
        features: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        labels,
    };
    let bl = bag_loss(&model, &bag).map_err(|e| e.to_string())?;
    let want = -(0.9f64).ln();
    check!((bl.loss - want).abs() <= LOSS_TOL, "bag loss {} vs {want}", bl.loss);
    check!(bl.selected[0] == 1, "selected sentence {}", bl.selected[0]);

    let mut worst_rel: f64 = 0.0;
    let mut checked = 0;
    let mut instances = 0;
    while instances < 100 {
        let dim = 5;
        let model = random_model(&mut r, dim);
        let bag = random_bag(&mut r, dim);
        let base = bag_loss(&model, &bag).map_err(|e| e.to_string())?;
        let grad = bag_loss_gradient(&model, &bag).map_err(|e| e.to_string())?;
        let mut params: Vec<(usize, Option<usize>)> = (0..K).map(|k| (k, None)).collect();
        params.extend((0..K).flat_map(|k| (0..dim).map(move |d| (k, Some(d)))));
        let mut deltas = Vec::with_capacity(params.len());
        let mut stable = true;
        for &(k, d) in &params {
            let eval = |delta: f64| {
                let mut m = model.clone();
                match d {
                    None => m.bias[k] += delta,
                    Some(d) => m.weights[k][d] += delta,
                }
                bag_loss(&m, &bag).unwrap()
            };
            let (plus, minus) = (eval(FD_STEP), eval(-FD_STEP));
            if plus.selected != base.selected || minus.selected != base.selected {
                stable = false;
                break;
            }
            let fd = (plus.loss - minus.loss) / (2.0 * FD_STEP);
            let an = match d {
                None => grad.bias[k],
                Some(d) => grad.weights[k][d],
            };
            deltas.push((fd, an));
        }
        // The loss is piecewise smooth; skip instances sitting on a selection switch.
        if !stable {
            continue;
        }
        instances += 1;
        for (fd, an) in deltas {
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(FD_FLOOR);
            worst_rel = worst_rel.max(rel);
            checked += 1;
        }
    }
    check!(worst_rel <= FD_REL_TOL, "worst relative gradient error {worst_rel:e}");
    Ok(format!(
        "logistic err {worst_logistic:.1e}; loss {:.12} selects 1; {checked} gradient entries, worst rel err {worst_rel:.1e}",
        bl.loss
    ))
}

// 8. Training on a planted separable dataset.

const F1_TARGET: f64 = 0.95;
const TRAIN_BUDGET: Duration = Duration::from_secs(60);

fn planted_bags(r: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<EncodedBag<f64>> {
    let noise = |r: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|d| if d < K { 0.0 } else { r.gen_range(-0.3..0.3) }).collect()
    };
    (0..n)
        .map(|_| {
            let mut labels = vec![0u8; K];
            let mut features: Vec<Vec<f64>> = (0..r.gen_range(1..=3)).map(|_| noise(r)).collect();
            if r.gen_bool(0.75) {
                let n_rel = if r.gen_bool(0.2) { 2 } else { 1 };
                for _ in 0..n_rel {
                    let k = r.gen_range(0..K);
                    labels[k] = 1;
                    // The planted rule: relation k is expressed by feature k.
                    let mut h = noise(r);
                    h[k] = 1.0;
                    let at = r.gen_range(0..=features.len());
                    features.insert(at, h);
                }
            }
            EncodedBag { features, labels }
        })
        .collect()
}

fn re_training() -> Outcome {
    let start = Instant::now();
    let mut r = rng(8);
    let dim = 48;
    let train_set = planted_bags(&mut r, 600, dim);
    let held_out = planted_bags(&mut r, 200, dim);
    let cfg = TrainConfig {
        epochs: 200,
        learning_rate: 1.0,
        batch_size: Some(64),
        seed: 11,
    };
    let (model, curve) = train(ReModel::new(dim), &train_set, &cfg).map_err(|e| e.to_string())?;
    let (again, curve2) = train(ReModel::new(dim), &train_set, &cfg).map_err(|e| e.to_string())?;
    check!(model == again && curve == curve2, "training is not deterministic");
    let gold: Vec<Vec<u8>> = held_out.iter().map(|b| b.labels.clone()).collect();
    let pred: Vec<Vec<u8>> = held_out
        .iter()
        .map(|b| predict_bag(&model, b, 0.5))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let f1 = micro_f1(&gold, &pred);
    let elapsed = start.elapsed();
    check!(f1 >= F1_TARGET, "held-out micro-F1 {f1:.4} < {F1_TARGET}");
    check!(elapsed < TRAIN_BUDGET, "took {elapsed:?}");
    Ok(format!(
        "{} train / {} held-out bags, {K} relations, F1 {f1:.4} after {} epochs, deterministic, {elapsed:.1?}",
        train_set.len(),
        held_out.len(),
        curve.len()
    ))
}

// 9. Bag distance and size limits.

const MAX_DISTANCE: usize = 10;
const MAX_BAG: usize = 16;

/// Entity distance read off the marker layout: tokens between the first
/// span's end marker and the second span's start marker, plus one.
fn marker_distance(marked: &[String]) -> usize {
    let pos = |m: &str| marked.iter().position(|t| t == m).unwrap();
    let (h_st, h_ed, t_st, t_ed) = (pos(H_ST), pos(H_ED), pos(T_ST), pos(T_ED));
    if h_st < t_st {
        t_st - h_ed
    } else {
        h_st - t_ed
    }
}

fn bag_limits() -> Outcome {
    let mut docs = Vec::new();
    for d in 0..3 {
        let mut sentences = Vec::new();
        for gap in 0..=20 {
            sentences.push(format!("Aspirin{} fever.", " then".repeat(gap)));
            sentences.push(format!("Fever{} warfarin.", " so".repeat(gap)));
        }
        docs.push(serde_json::json!({ "doc_id": format!("d{d}"), "text": sentences.join(" ") }).to_string());
    }
    let corpus = Corpus::from_jsonl(&docs.join("\n"), "bags").map_err(|e| e.to_string())?;
    let concept = |i: usize, term: &str| Concept {
        id: ConceptId::from_index(i),
        terms: vec![term.to_string()],
        preferred_term: term.to_string(),
        semtypes: Vec::new(),
    };
    let concepts = vec![concept(1, "aspirin"), concept(2, "fever"), concept(3, "warfarin")];
    let matcher = ConceptMatcher::new(&concepts);
    let id = |i| ConceptId::from_index(i);
    let triplets = vec![
        RelationTriplet::new(id(1), "may treat", id(2), TripletSource::Imported, "t"),
        RelationTriplet::new(id(2), "reverse may treat", id(1), TripletSource::Imported, "t"),
        RelationTriplet::new(id(3), "reverse may cause", id(2), TripletSource::Imported, "t"),
    ];

    let near = co_occurring_pairs(&corpus, &matcher, MAX_DISTANCE);
    for sentences in near.values() {
        for s in sentences {
            check!(marker_distance(&s.marked_tokens()) <= MAX_DISTANCE, "pair index kept a distant sentence");
        }
    }

    let wide = co_occurring_pairs(&corpus, &matcher, 100);
    let params = BagParams {
        max_distance: MAX_DISTANCE,
        max_bag: MAX_BAG,
        seed: 9,
    };
    let bags = build_bags(&triplets, &wide, &params);
    check!(bags.len() == 3, "expected 3 bags, got {}", bags.len());
    for bag in &bags {
        let pool = &wide[&(bag.head.clone(), bag.tail.clone())];
        let qualifying: Vec<_> = pool
            .iter()
            .filter(|s| marker_distance(&s.marked_tokens()) <= MAX_DISTANCE)
            .collect();
        check!(bag.available == qualifying.len(), "available {} vs {}", bag.available, qualifying.len());
        check!(bag.sentences.len() <= MAX_BAG, "bag of {}", bag.sentences.len());
        check!(bag.sentences.len() == MAX_BAG.min(qualifying.len()), "bag under-filled");
        let mut last = None;
        for s in &bag.sentences {
            check!(marker_distance(&s.marked_tokens()) <= MAX_DISTANCE, "bag kept a distant sentence");
            let at = qualifying.iter().position(|q| *q == s).ok_or("sentence not in qualifying pool")?;
            check!(last.is_none_or(|l| at > l), "bag order differs from corpus order");
            last = Some(at);
        }
    }
    let again = build_bags(&triplets, &wide, &params);
    check!(bags == again, "same seed gave different bags");
    let other = build_bags(&triplets, &wide, &BagParams { seed: 10, ..params });
    check!(bags != other, "seed has no effect on downsampling");
    Ok(format!(
        "{} bags, {} qualifying sentences per pair capped to {MAX_BAG}, seed-stable",
        bags.len(),
        bags[0].available
    ))
}

// 10. Translation filter thresholds.

fn translation_table(sims: &[f64]) -> EmbeddingTable<f64> {
    let mut table = EmbeddingTable::new(2);
    table.insert("source", vec![1.0, 0.0]).unwrap();
    for (i, &c) in sims.iter().enumerate() {
        table.insert(&format!("back {i}"), vec![c, (1.0 - c * c).sqrt()]).unwrap();
    }
    table
}

fn candidate(i: usize, semtype: &str) -> TranslationCandidate {
    TranslationCandidate {
        source: "source".to_string(),
        translated: format!("译{i}"),
        back_translated: format!("back {i}"),
        semtype: semtype.to_string(),
    }
}

fn translation_boundaries() -> Outcome {
    let cases = [
        (0.54, "Disease or Syndrome", Verdict::Deleted),
        (0.55, "Disease or Syndrome", Verdict::Kept),
        (0.79, CHEMICAL_OR_DRUG, Verdict::Deleted),
        (0.80, CHEMICAL_OR_DRUG, Verdict::Kept),
    ];
    let table = translation_table(&cases.iter().map(|c| c.0).collect::<Vec<_>>());
    let cands: Vec<TranslationCandidate> = cases.iter().enumerate().map(|(i, c)| candidate(i, c.1)).collect();
    let out = filter_translations(&cands, &table, &FilterThresholds::default()).map_err(|e| e.to_string())?;
    for (j, case) in out.in_input_order().iter().zip(&cases) {
        check!(j.verdict == case.2, "{} at {}: {:?}", case.1, case.0, j.verdict);
    }

    let mut r = rng(10);
    let sims: Vec<f64> = (0..200).map(|_| r.gen_range(-1.0..1.0)).collect();
    let table = translation_table(&sims);
    let cands: Vec<TranslationCandidate> = (0..sims.len())
        .map(|i| candidate(i, if i % 3 == 0 { CHEMICAL_OR_DRUG } else { "Anatomy" }))
        .collect();
    let kept_at = |t: f64| -> Result<BTreeSet<usize>, String> {
        let th = FilterThresholds { default: t, chemical: t };
        let out = filter_translations(&cands, &table, &th).map_err(|e| e.to_string())?;
        Ok(out.kept.iter().map(|j| j.index).collect())
    };
    let mut prev = kept_at(-1.0)?;
    let mut steps = 0;
    for i in 1..=40 {
        let t = -1.0 + i as f64 * 0.05;
        let cur = kept_at(t)?;
        check!(cur.is_subset(&prev), "kept set grew when the threshold rose to {t:.2}");
        prev = cur;
        steps += 1;
    }
    Ok(format!("0.54/0.55 and 0.79/0.80 boundaries hold; monotone over {steps} threshold steps"))
}

// 11. Reverse-relation mirroring.

fn mirror_completeness() -> Outcome {
    let mut r = rng(11);
    let mut total = 0;
    for case in 0..300 {
        let n = r.gen_range(2..8);
        let input: Vec<RelationTriplet> = (0..r.gen_range(0..20))
            .filter_map(|_| {
                let h = r.gen_range(1..=n);
                let t = r.gen_range(1..=n);
                let rel = *RELATIONS.choose(&mut r).unwrap();
                (h != t).then(|| {
                    RelationTriplet::new(ConceptId::from_index(h), rel, ConceptId::from_index(t), TripletSource::ReModel, "m")
                })
            })
            .collect();
        let out = mirror_reverse_relations(&input);
        let keys: BTreeSet<(String, String, String)> = out
            .iter()
            .map(|t| (t.head.to_string(), t.relation.clone(), t.tail.to_string()))
            .collect();
        check!(keys.len() == out.len(), "case {case}: duplicate triplets");
        let forward: BTreeSet<_> = keys.iter().filter(|k| FORWARD.contains(&k.1.as_str())).cloned().collect();
        let reversed: BTreeSet<_> = keys
            .iter()
            .filter(|k| !FORWARD.contains(&k.1.as_str()) && !is_bidirectional(&k.1))
            .map(|(h, rel, t)| (t.clone(), reverse_of(rel).unwrap().to_string(), h.clone()))
            .collect();
        check!(forward == reversed, "case {case}: forward and reverse sets differ");
        for t in &input {
            let key = if is_bidirectional(&t.relation) {
                let (a, b) = (t.head.to_string().min(t.tail.to_string()), t.head.to_string().max(t.tail.to_string()));
                (a, t.relation.clone(), b)
            } else {
                (t.head.to_string(), t.relation.clone(), t.tail.to_string())
            };
            check!(keys.contains(&key), "case {case}: input triplet {key:?} missing");
        }
        for k in keys.iter().filter(|k| is_bidirectional(&k.1)) {
            check!(k.0 < k.2, "case {case}: bidirectional stored as {k:?}");
        }
        check!(mirror_reverse_relations(&out) == out, "case {case}: not a fixed point");
        total += out.len();
    }
    Ok(format!("300 random sets ({total} triplets) mirror exactly; re-mirroring is a fixed point"))
}

// 12. End-to-end determinism and storage round trip.

const E2E_BUDGET: Duration = Duration::from_secs(60);

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn end_to_end(work: &Path) -> Outcome {
    let (a, b, c) = (work.join("run_a"), work.join("run_b"), work.join("rewrite"));
    let mut slowest = Duration::ZERO;
    for dir in [&a, &b] {
        let start = Instant::now();
        pipeline::run(&fixture_config(dir), false).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
    }
    check!(slowest < E2E_BUDGET, "a run took {slowest:?}");
    let (ta, tb) = (tree(&a), tree(&b));
    check!(ta == tb, "runs differ in {:?}", ta.keys().filter(|k| ta.get(*k) != tb.get(*k)).collect::<Vec<_>>());

    let kg = kg_store::read_kg(&a).map_err(|e| e.to_string())?;
    kg_store::write_kg(&kg, &c).map_err(|e| e.to_string())?;
    let tc = tree(&c);
    for (name, bytes) in &tc {
        check!(ta.get(name) == Some(bytes), "rewrite changed {}", name.display());
    }
    let reread = kg_store::read_kg(&c).map_err(|e| e.to_string())?;
    check!(reread == kg, "read after rewrite differs");
    Ok(format!(
        "{} files byte-identical across runs (slowest {slowest:.1?}); {} dataset files reproduced by read/write",
        ta.len(),
        tc.len()
    ))
}

// 13. Report tables.

const SUM_TOL: f64 = 1e-9;

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(String::from).collect())
        .collect()
}

fn bucket_of(n: usize) -> &'static str {
    match n {
        1 => "1",
        2..=5 => "2-5",
        6..=10 => "6-10",
        11..=20 => "11-20",
        21..=30 => "21-30",
        _ => ">30",
    }
}

fn check_report_shape(rep: &StatsReport) -> Result<(), String> {
    let comp: f64 = rep.composition.iter().map(|r| r.proportion).sum();
    let hist: f64 = rep.terms_per_concept.iter().map(|r| r.proportion).sum();
    check!((comp - 1.0).abs() <= SUM_TOL, "composition sums to {comp}");
    check!((hist - 1.0).abs() <= SUM_TOL, "histogram sums to {hist}");
    let labels: Vec<&str> = rep.terms_per_concept.iter().map(|r| r.bucket).collect();
    check!(labels == ["1", "2-5", "6-10", "11-20", "21-30", ">30"], "buckets {labels:?}");
    check!(TERM_BUCKETS.len() == 6, "bucket table has {} rows", TERM_BUCKETS.len());
    for w in rep.coverage.windows(2) {
        check!(w[0].top_n < w[1].top_n && w[0].coverage <= w[1].coverage, "coverage not monotone");
    }
    let last = rep.coverage.last().ok_or("empty coverage curve")?;
    check!((last.coverage - 1.0).abs() <= SUM_TOL, "coverage ends at {}", last.coverage);
    Ok(())
}

fn stats_integrity(work: &Path) -> Outcome {
    let dir = work.join("run_a");
    if !dir.join("manifest.json").exists() {
        pipeline::run(&fixture_config(&dir), false).map_err(|e| e.to_string())?;
    }
    let rep = stats(&dir).map_err(|e| e.to_string())?;
    check_report_shape(&rep)?;

    // Independent recount from the TSV files.
    let concepts = data_rows(&dir.join(kg_store::CONCEPTS_FILE));
    let terms = data_rows(&dir.join(kg_store::TERMS_FILE));
    let mut by_type: BTreeMap<String, usize> = BTreeMap::new();
    for row in &concepts {
        if row[2].is_empty() {
            *by_type.entry("(untyped)".into()).or_default() += 1;
        }
        for t in row[2].split('|').filter(|t| !t.is_empty()) {
            *by_type.entry(t.to_string()).or_default() += 1;
        }
    }
    let assignments: usize = by_type.values().sum();
    for row in &rep.composition {
        let n = by_type.get(&row.semtype).copied().unwrap_or(0);
        check!(row.concepts == n, "{}: report {} vs recount {n}", row.semtype, row.concepts);
        check!((row.proportion - n as f64 / assignments as f64).abs() <= SUM_TOL, "{} proportion", row.semtype);
    }
    check!(
        by_type.keys().all(|t| rep.composition.iter().any(|r| &r.semtype == t)),
        "report misses a type"
    );

    let mut per_concept: BTreeMap<&str, usize> = concepts.iter().map(|r| (r[0].as_str(), 0)).collect();
    let mut en_freq: BTreeMap<&str, usize> = BTreeMap::new();
    for row in &terms {
        *per_concept.get_mut(row[1].as_str()).ok_or("term of unknown concept")? += 1;
        if row[3] == "en" {
            *en_freq.entry(row[2].as_str()).or_default() += row[5].parse::<usize>().unwrap();
        }
    }
    let mut buckets: BTreeMap<&str, usize> = BTreeMap::new();
    for &n in per_concept.values().filter(|&&n| n > 0) {
        *buckets.entry(bucket_of(n)).or_default() += 1;
    }
    for row in &rep.terms_per_concept {
        let n = buckets.get(row.bucket).copied().unwrap_or(0);
        check!(row.concepts == n, "bucket {}: report {} vs recount {n}", row.bucket, row.concepts);
    }
    let mut freqs: Vec<usize> = en_freq.values().copied().collect();
    freqs.sort_unstable_by(|a, b| b.cmp(a));
    let total: usize = freqs.iter().sum();
    for row in &rep.coverage {
        let top: usize = freqs.iter().take(row.top_n).sum();
        let want = top as f64 / total as f64;
        check!((row.coverage - want).abs() <= SUM_TOL, "coverage at {}: {} vs {want}", row.top_n, row.coverage);
    }

    // One concept with one term lands entirely in bucket "1".
    let manifest = VersionManifest::new("t", BTreeMap::new(), BTreeMap::new(), Vec::new(), Vec::new());
    let single = KnowledgeGraph {
        concepts: vec![ConceptRecord {
            id: ConceptId::from_index(1),
            preferred_term: "fever".into(),
            semtypes: vec!["Sign, Symptom or Finding".into()],
        }],
        terms: vec![TermRecord {
            term_id: kg_store::term_id(1),
            concept_id: ConceptId::from_index(1),
            surface: "fever".into(),
            language: Language::En,
            term_type: TermType::Preferred,
            frequency: 3,
        }],
        triplets: Vec::new(),
        manifest,
    };
    let one = compute_stats(&single);
    check_report_shape(&one)?;
    check!(
        one.terms_per_concept[0].bucket == "1" && one.terms_per_concept[0].proportion == 1.0,
        "single concept not in bucket 1"
    );
    Ok(format!(
        "{} concepts, {} terms: tables sum to 1, match recount, coverage ends at 1.0",
        concepts.len(),
        terms.len()
    ))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let w = work.path().to_path_buf();
    let w2 = w.clone();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("fmm oracle equivalence", Box::new(fmm_equivalence)),
        ("1-DF annotation rate", Box::new(annotation_rate)),
        ("sampling coverage", Box::new(sampling_coverage)),
        ("ratio-cut oracle", Box::new(ratio_cut_oracle)),
        ("clustering thresholds", Box::new(clustering_thresholds)),
        ("semantic-type rule", Box::new(semtype_rule)),
        ("relation model math", Box::new(re_math)),
        ("relation training sanity", Box::new(re_training)),
        ("bag distance and cap", Box::new(bag_limits)),
        ("translation boundaries", Box::new(translation_boundaries)),
        ("mirror completeness", Box::new(mirror_completeness)),
        ("end-to-end determinism", Box::new(move || end_to_end(&w))),
        ("stats integrity", Box::new(move || stats_integrity(&w2))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
