//! Regenerates the 100-document fixture under `crates/core/fixtures/`.
//!
//! ```text
//! cargo run -p biokg --example make_fixture [out_dir]
//! ```
//!
//! Output is a pure function of the constants below.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use biokg::corpus::Corpus;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_240_501;
const DOCS: usize = 100;
const DIM: usize = 32;
/// Cosine between a concept's base vector and each synonym vector.
const SYNONYM_COSINE: f64 = 0.95;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Role {
    Drug,
    Disease,
    Symptom,
    Organ,
    Protein,
    Microbe,
    Procedure,
}

struct ConceptSpec {
    canonical: &'static str,
    /// Dictionary synonyms.
    synonyms: &'static [&'static str],
    /// Surface forms only the tagger knows about.
    novel: &'static [&'static str],
    fine: &'static str,
    role: Role,
    /// Kept out of the embedding table.
    no_vector: bool,
}

const fn c(
    canonical: &'static str,
    synonyms: &'static [&'static str],
    fine: &'static str,
    role: Role,
) -> ConceptSpec {
    ConceptSpec {
        canonical,
        synonyms,
        novel: &[],
        fine,
        role,
        no_vector: false,
    }
}

use Role::*;

const CONCEPTS: &[ConceptSpec] = &[
    ConceptSpec {
        novel: &["asa"],
        ..c("aspirin", &["acetylsalicylic acid"], "Pharmacologic Substance", Drug)
    },
    ConceptSpec {
        novel: &["glucophage"],
        ..c("metformin", &["dimethylbiguanide"], "Pharmacologic Substance", Drug)
    },
    c("ibuprofen", &[], "Pharmacologic Substance", Drug),
    c("warfarin", &["coumadin"], "Pharmacologic Substance", Drug),
    c("insulin", &["human insulin"], "Hormone", Drug),
    c("amoxicillin", &[], "Antibiotic", Drug),
    c("paracetamol", &["acetaminophen"], "Pharmacologic Substance", Drug),
    c("atorvastatin", &[], "Pharmacologic Substance", Drug),
    ConceptSpec {
        no_vector: true,
        ..c("lisinopril", &[], "Pharmacologic Substance", Drug)
    },
    c("omeprazole", &[], "Pharmacologic Substance", Drug),
    c("heparin", &[], "Pharmacologic Substance", Drug),
    c("type 2 diabetes", &["diabetes mellitus type 2", "t2dm"], "Disease or Syndrome", Disease),
    c("hypertension", &["high blood pressure"], "Disease or Syndrome", Disease),
    c("pneumonia", &["lung infection"], "Disease or Syndrome", Disease),
    ConceptSpec {
        novel: &["mi"],
        ..c("myocardial infarction", &["heart attack"], "Disease or Syndrome", Disease)
    },
    c("migraine", &[], "Disease or Syndrome", Disease),
    c("asthma", &[], "Disease or Syndrome", Disease),
    c("atrial fibrillation", &[], "Disease or Syndrome", Disease),
    c("rheumatoid arthritis", &[], "Disease or Syndrome", Disease),
    c("gastric ulcer", &["stomach ulcer"], "Disease or Syndrome", Disease),
    c("hyperlipidemia", &["high cholesterol"], "Disease or Syndrome", Disease),
    c("influenza", &["flu"], "Disease or Syndrome", Disease),
    c("breast cancer", &["breast carcinoma"], "Neoplastic Process", Disease),
    c("headache", &["cephalalgia"], "Sign or Symptom", Symptom),
    c("fever", &["pyrexia"], "Sign or Symptom", Symptom),
    c("fatigue", &[], "Sign or Symptom", Symptom),
    c("cough", &[], "Sign or Symptom", Symptom),
    c("myalgia", &["muscle pain"], "Sign or Symptom", Symptom),
    c("nausea", &[], "Sign or Symptom", Symptom),
    c("liver", &["hepatic tissue"], "Body Part, Organ, or Organ Component", Organ),
    c("kidney", &["renal organ"], "Body Part, Organ, or Organ Component", Organ),
    c("lung", &[], "Body Part, Organ, or Organ Component", Organ),
    c("pancreas", &[], "Body Part, Organ, or Organ Component", Organ),
    c("stomach", &[], "Body Part, Organ, or Organ Component", Organ),
    c("myocardium", &["cardiac muscle"], "Tissue", Organ),
    c("tumor necrosis factor", &["tnf alpha"], "Amino Acid, Peptide, or Protein", Protein),
    c("interleukin 6", &["il6"], "Amino Acid, Peptide, or Protein", Protein),
    c("cyclooxygenase 2", &["cox2"], "Enzyme", Protein),
    c("egfr", &["epidermal growth factor receptor"], "Receptor", Protein),
    c("erythropoietin", &[], "Hormone", Protein),
    c("staphylococcus aureus", &[], "Bacterium", Microbe),
    c("streptococcus pneumoniae", &[], "Bacterium", Microbe),
    c("influenza virus", &[], "Virus", Microbe),
    c("helicobacter pylori", &[], "Bacterium", Microbe),
    c("appendectomy", &[], "Therapeutic or Preventive Procedure", Procedure),
    c("chemotherapy", &[], "Therapeutic or Preventive Procedure", Procedure),
    c("colonoscopy", &[], "Diagnostic Procedure", Procedure),
    c("biopsy", &[], "Diagnostic Procedure", Procedure),
];

/// Related pairs per relation, by canonical term.
const GOLD: &[(&str, &str, &str)] = &[
    ("aspirin", "may treat", "myocardial infarction"),
    ("metformin", "may treat", "type 2 diabetes"),
    ("insulin", "may treat", "type 2 diabetes"),
    ("ibuprofen", "may treat", "rheumatoid arthritis"),
    ("warfarin", "may treat", "atrial fibrillation"),
    ("amoxicillin", "may treat", "pneumonia"),
    ("paracetamol", "may treat", "migraine"),
    ("atorvastatin", "may treat", "hyperlipidemia"),
    ("lisinopril", "may treat", "hypertension"),
    ("omeprazole", "may treat", "gastric ulcer"),
    ("heparin", "may treat", "myocardial infarction"),
    ("lisinopril", "may cause", "cough"),
    ("atorvastatin", "may cause", "myalgia"),
    ("metformin", "may cause", "nausea"),
    ("ibuprofen", "may cause", "headache"),
    ("staphylococcus aureus", "may cause", "pneumonia"),
    ("streptococcus pneumoniae", "may cause", "pneumonia"),
    ("influenza virus", "may cause", "influenza"),
    ("helicobacter pylori", "may cause", "gastric ulcer"),
    ("egfr", "expressed in", "lung"),
    ("interleukin 6", "expressed in", "liver"),
    ("cyclooxygenase 2", "expressed in", "stomach"),
    ("erythropoietin", "expressed in", "kidney"),
    ("tumor necrosis factor", "expressed in", "myocardium"),
    ("insulin", "expressed in", "pancreas"),
    ("warfarin", "significant drug interaction", "aspirin"),
    ("warfarin", "significant drug interaction", "ibuprofen"),
    ("heparin", "significant drug interaction", "aspirin"),
];

struct Template {
    /// Whitespace-separated `word/TAG` items and `{role}` slots.
    pattern: &'static str,
    /// Relation tying the first slot to the second, drawn from gold pairs.
    relation: Option<&'static str>,
}

const TEMPLATES: &[Template] = &[
    Template {
        pattern: "{drug} may/MD treat/VB {disease} in/IN adult/JJ patients/NNS",
        relation: Some("may treat"),
    },
    Template {
        pattern: "{drug} was/VBD given/VBN to/TO patients/NNS with/IN {disease}",
        relation: Some("may treat"),
    },
    Template {
        pattern: "{drug} may/MD cause/VB {symptom} in/IN some/DT patients/NNS",
        relation: Some("may cause"),
    },
    Template {
        pattern: "{microbe} often/RB causes/VBZ {disease} in/IN older/JJR adults/NNS",
        relation: Some("may cause"),
    },
    Template {
        pattern: "{protein} is/VBZ expressed/VBN in/IN the/DT {organ}",
        relation: Some("expressed in"),
    },
    Template {
        pattern: "{drug} interacts/VBZ with/IN {drug} and/CC raises/VBZ bleeding/NN risk/NN",
        relation: Some("significant drug interaction"),
    },
    Template {
        pattern: "{procedure} was/VBD performed/VBN on/IN the/DT {organ}",
        relation: None,
    },
    Template {
        pattern: "{symptom} was/VBD reported/VBN after/IN {procedure}",
        relation: None,
    },
    Template {
        pattern: "Levels/NNS of/IN {protein} rose/VBD in/IN {disease}",
        relation: None,
    },
    Template {
        pattern: "Patients/NNS were/VBD treated/VBN for/IN {symptom} and/CC {disease}",
        relation: None,
    },
    Template {
        pattern: "{drug} was/VBD compared/VBN with/IN {drug} in/IN a/DT cohort/NN",
        relation: None,
    },
];

fn role_of(slot: &str) -> Role {
    match slot {
        "{drug}" => Drug,
        "{disease}" => Disease,
        "{symptom}" => Symptom,
        "{organ}" => Organ,
        "{protein}" => Protein,
        "{microbe}" => Microbe,
        "{procedure}" => Procedure,
        other => panic!("unknown slot {other}"),
    }
}

fn concept(name: &str) -> &'static ConceptSpec {
    CONCEPTS.iter().find(|c| c.canonical == name).expect("known concept")
}

fn forms(c: &ConceptSpec) -> Vec<&'static str> {
    std::iter::once(c.canonical)
        .chain(c.synonyms.iter().copied())
        .chain(c.novel.iter().copied())
        .collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Sum of uniforms is close enough to isotropic for separation.
    unit((0..DIM).map(|_| (0..6).map(|_| rng.gen::<f64>() - 0.5).sum()).collect())
}

/// A unit vector with cosine exactly `cos` to unit vector `base`.
fn at_cosine(base: &[f64], cos: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let r = gaussian(rng);
    let proj: f64 = r.iter().zip(base).map(|(a, b)| a * b).sum();
    let orth = unit(r.iter().zip(base).map(|(a, b)| a - proj * b).collect());
    let s = (1.0 - cos * cos).sqrt();
    base.iter().zip(&orth).map(|(b, o)| cos * b + s * o).collect()
}

struct Span {
    start: usize,
    end: usize,
    fine: &'static str,
}

struct BuiltSentence {
    words: Vec<String>,
    tags: Vec<String>,
    spans: Vec<Span>,
}

fn build_sentence(t: &Template, fillers: &[(&'static ConceptSpec, &'static str)]) -> BuiltSentence {
    let mut s = BuiltSentence {
        words: Vec::new(),
        tags: Vec::new(),
        spans: Vec::new(),
    };
    let mut next = fillers.iter();
    for item in t.pattern.split_whitespace() {
        if item.starts_with('{') {
            let (spec, surface) = next.next().expect("filler per slot");
            let start = s.words.len();
            for w in surface.split_whitespace() {
                s.words.push(w.to_string());
                s.tags.push(if w.chars().all(|c| c.is_ascii_digit()) { "CD" } else { "NN" }.to_string());
            }
            s.spans.push(Span {
                start,
                end: s.words.len(),
                fine: spec.fine,
            });
        } else {
            let (w, tag) = item.split_once('/').expect("word/TAG");
            s.words.push(w.to_string());
            s.tags.push(tag.to_string());
        }
    }
    let first = &mut s.words[0];
    let mut chars = first.chars();
    let cap: String = chars.next().unwrap().to_uppercase().chain(chars).collect();
    *first = cap;
    s.words.push(".".into());
    s.tags.push(".".into());
    s
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&out).expect("create output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let by_role: BTreeMap<Role, Vec<&ConceptSpec>> = CONCEPTS.iter().fold(BTreeMap::new(), |mut m, c| {
        m.entry(c.role).or_insert_with(Vec::new).push(c);
        m
    });
    let gold_by_rel: BTreeMap<&str, Vec<(&str, &str)>> = GOLD.iter().fold(BTreeMap::new(), |mut m, &(h, r, t)| {
        m.entry(r).or_insert_with(Vec::new).push((h, t));
        m
    });

    let mut corpus = String::new();
    let mut predictions = String::new();
    for d in 0..DOCS {
        let doc_id = format!("doc{:03}", d + 1);
        let n_sent = rng.gen_range(3..=6);
        let mut sentences = Vec::new();
        for _ in 0..n_sent {
            let t = &TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
            let slots: Vec<Role> = t.pattern.split_whitespace().filter(|w| w.starts_with('{')).map(role_of).collect();
            let specs: Vec<&ConceptSpec> = match t.relation {
                Some(r) if rng.gen_bool(0.85) => {
                    let fitting: Vec<&(&str, &str)> = gold_by_rel[r]
                        .iter()
                        .filter(|(h, tl)| concept(h).role == slots[0] && concept(tl).role == slots[1])
                        .collect();
                    let (h, tl) = **fitting.choose(&mut rng).expect("gold pair fits template");
                    vec![concept(h), concept(tl)]
                }
                _ => {
                    let mut picked: Vec<&ConceptSpec> = Vec::new();
                    for role in &slots {
                        loop {
                            let cand = *by_role[role].choose(&mut rng).unwrap();
                            if !picked.iter().any(|p| p.canonical == cand.canonical) {
                                picked.push(cand);
                                break;
                            }
                        }
                    }
                    picked
                }
            };
            let fillers: Vec<(&ConceptSpec, &str)> = specs
                .into_iter()
                .map(|spec| {
                    let f = forms(spec);
                    let surface = if rng.gen_bool(0.6) { f[0] } else { *f.choose(&mut rng).unwrap() };
                    (spec, surface)
                })
                .collect();
            sentences.push(build_sentence(t, &fillers));
        }
        let text: Vec<String> = sentences
            .iter()
            .map(|s| format!("{}.", s.words[..s.words.len() - 1].join(" ")))
            .collect();
        let mut row = serde_json::json!({ "doc_id": doc_id, "text": text.join(" ") });
        if d % 2 == 0 {
            let pos: Vec<&Vec<String>> = sentences.iter().map(|s| &s.tags).collect();
            row["pos"] = serde_json::json!(pos);
        }
        corpus.push_str(&row.to_string());
        corpus.push('\n');

        for (i, s) in sentences.iter().enumerate() {
            let mut spans: Vec<(usize, usize, &str)> = s.spans.iter().map(|sp| (sp.start, sp.end, sp.fine)).collect();
            if let Some(p) = s.words.iter().position(|w| w == "were") {
                spans.push((p, p + 2, "Finding"));
            }
            if d == 0 {
                if let Some(p) = s.words.iter().position(|w| w.eq_ignore_ascii_case("patients")) {
                    spans.push((p, p + 1, "Finding"));
                }
            }
            spans.sort();
            predictions.push_str(
                &serde_json::json!({ "doc_id": doc_id, "sent_index": i, "spans": spans }).to_string(),
            );
            predictions.push('\n');
        }
    }
    let parsed = Corpus::from_jsonl(&corpus, "corpus.jsonl").expect("fixture corpus parses");
    assert_eq!(parsed.len(), DOCS);

    let mut dictionary = String::from("# surface\tsource\tsemantic types\n");
    for (i, spec) in CONCEPTS.iter().enumerate() {
        let src = if i % 3 == 0 { "SRC2" } else { "SRC1" };
        let _ = writeln!(dictionary, "{}\t{src}\t{}", spec.canonical, spec.fine);
        for s in spec.synonyms {
            let _ = writeln!(dictionary, "{s}\tSRC1\t{}", spec.fine);
        }
    }
    dictionary.push_str("insulin\tSRC1\tPharmacologic Substance\n");
    dictionary.push_str("study\tSRC1\tResearch Activity\n");
    dictionary.push_str("2\tSRC2\tFinding\n");

    let mut sta = String::from("#buckets 16\n");
    for spec in CONCEPTS {
        for f in forms(spec) {
            let _ = writeln!(sta, "{f}\t*\t{}", spec.fine);
        }
    }
    sta.push_str("human insulin\t*\tPharmacologic Substance\n");

    let mut embeddings = format!("#dim {DIM}\n");
    let mut base: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let push_vec = |out: &mut String, term: &str, v: &[f64]| {
        let nums: Vec<String> = v.iter().map(|x| format!("{x:.8}")).collect();
        let _ = writeln!(out, "{term}\t{}", nums.join(" "));
    };
    for spec in CONCEPTS {
        let b = gaussian(&mut rng);
        if !spec.no_vector {
            push_vec(&mut embeddings, spec.canonical, &b);
            for f in spec.synonyms.iter().chain(spec.novel) {
                let v = at_cosine(&b, SYNONYM_COSINE, &mut rng);
                push_vec(&mut embeddings, f, &v);
            }
        }
        base.insert(spec.canonical, b);
    }
    // Back-translations at chosen cosines to their source term.
    let back: [(&str, &str, f64); 3] = [
        ("paracetamol", "acetaminophen tablet", 0.7),
        ("kidney", "renal structure", 0.6),
        ("migraine", "one-sided headache", 0.5),
    ];
    for (src, term, cos) in back {
        let v = at_cosine(&base[src], cos, &mut rng);
        push_vec(&mut embeddings, term, &v);
    }

    let translations = "\
# source\ttranslated\tback_translated\tsemtype
aspirin\t阿司匹林\tacetylsalicylic acid\tChemical or Drug
metformin\t二甲双胍\tmetformin\tChemical or Drug
warfarin\t华法林\theparin\tChemical or Drug
paracetamol\t对乙酰氨基酚\tacetaminophen tablet\tChemical or Drug
insulin\t胰岛素\thuman insulin\tChemical or Drug
headache\t头痛\tcephalalgia\tSign, Symptom or Finding
fever\t发热\tpyrexia\tSign, Symptom or Finding
liver\t肝脏\thepatic tissue\tAnatomy
kidney\t肾\trenal structure\tAnatomy
pneumonia\t肺炎\tlung infection\tDisease or Syndrome
hypertension\t高血压\thigh blood pressure\tDisease or Syndrome
myocardial infarction\t心肌梗死\theart attack\tDisease or Syndrome
migraine\t偏头痛\tone-sided headache\tDisease or Syndrome
asthma\t哮喘\twheezing disorder\tDisease or Syndrome
breast cancer\t乳腺癌\tbreast carcinoma\tNeoplastic Process
colonoscopy\t结肠镜检查\tbowel scope exam\tDiagnostic Procedure
";

    let mut triplets = String::from("# head\trelation\ttail\n");
    for &(h, r, t) in GOLD {
        let _ = writeln!(triplets, "{h}\t{r}\t{t}");
    }
    triplets.push_str("digoxin\tmay treat\tatrial fibrillation\n");

    let rules = "\
# Term cleaning rules.
stopwords = default
extra_stopwords = patients|cohort
min_length = 3
reject_numeric = true
reject_punctuation = true
regex.verb_phrase = ^(was|were|is|are)
";

    let config = "\
# Pipeline configuration for the 100-document fixture.
input.corpus = corpus.jsonl
input.dictionary = dictionary.tsv
input.rules = rules.conf
input.embeddings = embeddings.tsv
input.sta = sta.tsv
input.ner_predictions = ner_predictions.jsonl
input.triplets = triplets.tsv
input.translations = translations.tsv
out_dir = out
seed = 42
created = 2024-01-01T00:00:00Z
relation.hash_dim = 128
relation.epochs = 200
";

    let files: [(&str, &str); 9] = [
        ("corpus.jsonl", &corpus),
        ("ner_predictions.jsonl", &predictions),
        ("dictionary.tsv", &dictionary),
        ("sta.tsv", &sta),
        ("embeddings.tsv", &embeddings),
        ("translations.tsv", translations),
        ("triplets.tsv", &triplets),
        ("rules.conf", rules),
        ("pipeline.conf", config),
    ];
    for (name, text) in files {
        std::fs::write(out.join(name), text).expect("write fixture file");
    }
    println!("wrote {} files to {}", files.len(), out.display());
}
