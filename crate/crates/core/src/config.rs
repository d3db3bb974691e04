//! Flat `key = value` configuration files and the pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::cluster::ClusterParams;
use crate::error::{Error, Result};
use crate::ner::{NounPhraseMode, DEFAULT_RATIO_THRESHOLD};
use crate::relation::bags::{DEFAULT_MAX_BAG, DEFAULT_MAX_DISTANCE, DEFAULT_NEGATIVE_RATIO};
use crate::relation::encoder::DEFAULT_HASH_DIM;
use crate::relation::model::PREDICTION_THRESHOLD;
use crate::semtype::DEFAULT_SHARE_DENOMINATOR;
use crate::translation::FilterThresholds;
use crate::util;

/// Parse `key = value` lines; `#` starts a comment line. Returns
/// `(line, key, value)` in file order.
pub fn parse_kv(text: &str, label: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (line, raw) in util::data_lines(text) {
        let (k, v) = raw
            .split_once('=')
            .ok_or_else(|| Error::parse(label, line, "expected key = value"))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(Error::parse(label, line, "empty key"));
        }
        out.push((line, key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Annotate,
    Sample,
    Discover,
    Cluster,
    Type,
    Bags,
    Train,
    Predict,
    Translate,
    Store,
}

impl Stage {
    pub const ALL: [Stage; 10] = [
        Stage::Annotate,
        Stage::Sample,
        Stage::Discover,
        Stage::Cluster,
        Stage::Type,
        Stage::Bags,
        Stage::Train,
        Stage::Predict,
        Stage::Translate,
        Stage::Store,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Annotate => "annotate",
            Stage::Sample => "sample",
            Stage::Discover => "discover",
            Stage::Cluster => "cluster",
            Stage::Type => "type",
            Stage::Bags => "bags",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Translate => "translate",
            Stage::Store => "store",
        }
    }

    /// Stages whose results this stage consumes.
    pub fn requires(self) -> &'static [Stage] {
        match self {
            Stage::Sample => &[Stage::Annotate],
            Stage::Type | Stage::Bags => &[Stage::Cluster],
            Stage::Train => &[Stage::Bags],
            Stage::Predict => &[Stage::Train],
            _ => &[],
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Input files. Relative paths in a config file resolve against the
/// file's directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputPaths {
    pub corpus: PathBuf,
    pub dictionary: PathBuf,
    pub source_filter: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub sta: Option<PathBuf>,
    pub semantic_groups: Option<PathBuf>,
    pub type_mapping: Option<PathBuf>,
    /// Tagger output; without it the tagger echoes dictionary matches.
    pub ner_predictions: Option<PathBuf>,
    /// Known triplets `head \t relation \t tail`, by term or concept id.
    pub triplets: Option<PathBuf>,
    pub relation_schema: Option<PathBuf>,
    pub translations: Option<PathBuf>,
}

impl InputPaths {
    /// `(key, path)` for every configured input.
    pub fn listed(&self) -> Vec<(&'static str, &Path)> {
        let mut out = vec![("corpus", self.corpus.as_path()), ("dictionary", self.dictionary.as_path())];
        let optional = [
            ("source_filter", &self.source_filter),
            ("rules", &self.rules),
            ("embeddings", &self.embeddings),
            ("sta", &self.sta),
            ("semantic_groups", &self.semantic_groups),
            ("type_mapping", &self.type_mapping),
            ("ner_predictions", &self.ner_predictions),
            ("triplets", &self.triplets),
            ("relation_schema", &self.relation_schema),
            ("translations", &self.translations),
        ];
        for (k, p) in optional {
            if let Some(p) = p {
                out.push((k, p.as_path()));
            }
        }
        out
    }
}

/// Every tunable of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    pub out_dir: PathBuf,
    pub stages: BTreeMap<Stage, bool>,
    pub seed: u64,
    /// Recorded in the manifest verbatim; keeps repeated runs identical.
    pub created: String,
    pub sta_fallback: String,

    pub ratio_threshold: f64,
    /// `None` disables the part-of-speech check.
    pub noun_phrase_mode: Option<NounPhraseMode>,

    pub cluster: ClusterParams<f64>,
    pub type_share_denominator: usize,

    pub max_distance: usize,
    pub max_bag: usize,
    pub negative_ratio: f64,
    pub hash_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Zero trains full-batch.
    pub batch_size: usize,
    pub prediction_threshold: f64,

    pub translation: FilterThresholds<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            inputs: InputPaths::default(),
            out_dir: PathBuf::from("out"),
            stages: Stage::ALL.into_iter().map(|s| (s, true)).collect(),
            seed: 0,
            created: "1970-01-01T00:00:00Z".to_string(),
            sta_fallback: "Finding".to_string(),
            ratio_threshold: DEFAULT_RATIO_THRESHOLD,
            noun_phrase_mode: Some(NounPhraseMode::FinalNoun),
            cluster: ClusterParams::default(),
            type_share_denominator: DEFAULT_SHARE_DENOMINATOR,
            max_distance: DEFAULT_MAX_DISTANCE,
            max_bag: DEFAULT_MAX_BAG,
            negative_ratio: DEFAULT_NEGATIVE_RATIO,
            hash_dim: DEFAULT_HASH_DIM,
            epochs: 200,
            learning_rate: 1.0,
            batch_size: 0,
            prediction_threshold: PREDICTION_THRESHOLD,
            translation: FilterThresholds::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {value:?}"))),
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&util::read_to_string(path)?, &util::file_label(path), base)
    }

    /// Parse a config file. Unknown keys are errors.
    pub fn parse(text: &str, label: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let resolve = |v: &str| -> PathBuf {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        for (line, key, value) in parse_kv(text, label)? {
            let v = value.as_str();
            let k = key.as_str();
            let ctx = |e: Error| Error::Config(format!("{label}:{line}: {e}"));
            match k {
                "input.corpus" => cfg.inputs.corpus = resolve(v),
                "input.dictionary" => cfg.inputs.dictionary = resolve(v),
                "input.source_filter" => cfg.inputs.source_filter = Some(resolve(v)),
                "input.rules" => cfg.inputs.rules = Some(resolve(v)),
                "input.embeddings" => cfg.inputs.embeddings = Some(resolve(v)),
                "input.sta" => cfg.inputs.sta = Some(resolve(v)),
                "input.semantic_groups" => cfg.inputs.semantic_groups = Some(resolve(v)),
                "input.type_mapping" => cfg.inputs.type_mapping = Some(resolve(v)),
                "input.ner_predictions" => cfg.inputs.ner_predictions = Some(resolve(v)),
                "input.triplets" => cfg.inputs.triplets = Some(resolve(v)),
                "input.relation_schema" => cfg.inputs.relation_schema = Some(resolve(v)),
                "input.translations" => cfg.inputs.translations = Some(resolve(v)),
                "out_dir" => cfg.out_dir = resolve(v),
                "seed" => cfg.seed = num(k, v).map_err(ctx)?,
                "created" => cfg.created = v.to_string(),
                "sta.fallback_type" => cfg.sta_fallback = v.to_string(),
                "ner.ratio_threshold" => cfg.ratio_threshold = num(k, v).map_err(ctx)?,
                "ner.noun_phrase_mode" => {
                    cfg.noun_phrase_mode = match v {
                        "off" => None,
                        m => Some(m.parse().map_err(ctx)?),
                    }
                }
                "cluster.edge_threshold" => cfg.cluster.edge_threshold = num(k, v).map_err(ctx)?,
                "cluster.merge_stop" => cfg.cluster.merge_stop = num(k, v).map_err(ctx)?,
                "cluster.max_size" => cfg.cluster.max_cluster = num(k, v).map_err(ctx)?,
                "cluster.candidate_k" => cfg.cluster.candidate_k = num(k, v).map_err(ctx)?,
                "cluster.all_pairs_limit" => cfg.cluster.all_pairs_limit = num(k, v).map_err(ctx)?,
                "semtype.share_denominator" => cfg.type_share_denominator = num(k, v).map_err(ctx)?,
                "relation.max_distance" => cfg.max_distance = num(k, v).map_err(ctx)?,
                "relation.max_bag" => cfg.max_bag = num(k, v).map_err(ctx)?,
                "relation.negative_ratio" => cfg.negative_ratio = num(k, v).map_err(ctx)?,
                "relation.hash_dim" => cfg.hash_dim = num(k, v).map_err(ctx)?,
                "relation.epochs" => cfg.epochs = num(k, v).map_err(ctx)?,
                "relation.learning_rate" => cfg.learning_rate = num(k, v).map_err(ctx)?,
                "relation.batch_size" => cfg.batch_size = num(k, v).map_err(ctx)?,
                "relation.threshold" => cfg.prediction_threshold = num(k, v).map_err(ctx)?,
                "translate.threshold" => cfg.translation.default = num(k, v).map_err(ctx)?,
                "translate.chemical_threshold" => cfg.translation.chemical = num(k, v).map_err(ctx)?,
                _ => match k.strip_prefix("stage.") {
                    Some(name) => {
                        let stage: Stage = name.parse().map_err(ctx)?;
                        cfg.stages.insert(stage, flag(k, v).map_err(ctx)?);
                    }
                    None => return Err(Error::Config(format!("{label}:{line}: unknown key {k:?}"))),
                },
            }
        }
        Ok(cfg)
    }

    pub fn enabled(&self, stage: Stage) -> bool {
        self.stages.get(&stage).copied().unwrap_or(false)
    }

    pub fn set_all_stages(&mut self, on: bool) {
        for s in Stage::ALL {
            self.stages.insert(s, on);
        }
    }

    /// Turn on `stage` and everything it transitively requires.
    pub fn enable_with_requirements(&mut self, stage: Stage) {
        self.stages.insert(stage, true);
        for &r in stage.requires() {
            self.enable_with_requirements(r);
        }
    }

    /// Check value ranges and that every enabled stage has its inputs and
    /// prerequisites.
    pub fn validate(&self) -> Result<()> {
        self.cluster.validate()?;
        self.translation.validate()?;
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.ratio_threshold > 0.0) {
            return bad("ner.ratio_threshold must be positive");
        }
        if self.type_share_denominator == 0 {
            return bad("semtype.share_denominator must be positive");
        }
        if self.max_bag == 0 {
            return bad("relation.max_bag must be positive");
        }
        if self.hash_dim == 0 {
            return bad("relation.hash_dim must be positive");
        }
        if !(self.negative_ratio >= 0.0) {
            return bad("relation.negative_ratio must be non-negative");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("relation.learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.prediction_threshold) {
            return bad("relation.threshold must lie in [0, 1)");
        }
        util::check_field(&self.created).map_err(|e| Error::Config(format!("created: {e}")))?;
        for s in Stage::ALL {
            if !self.enabled(s) {
                continue;
            }
            for &r in s.requires() {
                if !self.enabled(r) {
                    return Err(Error::Config(format!(
                        "stage {} requires stage {}",
                        s.name(),
                        r.name()
                    )));
                }
            }
        }
        let any = Stage::ALL.iter().any(|&s| self.enabled(s));
        if any && self.inputs.corpus.as_os_str().is_empty() {
            return bad("input.corpus is required");
        }
        if any && self.inputs.dictionary.as_os_str().is_empty() {
            return bad("input.dictionary is required");
        }
        let needs_vectors = [Stage::Cluster, Stage::Translate]
            .iter()
            .any(|&s| self.enabled(s));
        if needs_vectors && self.inputs.embeddings.is_none() {
            return bad("input.embeddings is required by the cluster and translate stages");
        }
        if self.enabled(Stage::Translate) && self.inputs.translations.is_none() {
            return bad("input.translations is required by the translate stage");
        }
        for (key, path) in self.inputs.listed() {
            if any && !path.is_file() {
                return Err(Error::Config(format!("input.{key}: {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Every effective setting as strings, for the manifest. Input paths
    /// are excluded; the manifest records their hashes instead.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        for s in Stage::ALL {
            put(&format!("stage.{}", s.name()), self.enabled(s).to_string());
        }
        put("seed", self.seed.to_string());
        put("created", self.created.clone());
        put("sta.fallback_type", self.sta_fallback.clone());
        put("ner.ratio_threshold", self.ratio_threshold.to_string());
        put(
            "ner.noun_phrase_mode",
            match self.noun_phrase_mode {
                None => "off".into(),
                Some(NounPhraseMode::FinalNoun) => "final_noun".into(),
                Some(NounPhraseMode::NounPhrase) => "noun_phrase".into(),
            },
        );
        put("cluster.edge_threshold", self.cluster.edge_threshold.to_string());
        put("cluster.merge_stop", self.cluster.merge_stop.to_string());
        put("cluster.max_size", self.cluster.max_cluster.to_string());
        put("cluster.candidate_k", self.cluster.candidate_k.to_string());
        put("cluster.all_pairs_limit", self.cluster.all_pairs_limit.to_string());
        put("semtype.share_denominator", self.type_share_denominator.to_string());
        put("relation.max_distance", self.max_distance.to_string());
        put("relation.max_bag", self.max_bag.to_string());
        put("relation.negative_ratio", self.negative_ratio.to_string());
        put("relation.hash_dim", self.hash_dim.to_string());
        put("relation.epochs", self.epochs.to_string());
        put("relation.learning_rate", self.learning_rate.to_string());
        put("relation.batch_size", self.batch_size.to_string());
        put("relation.threshold", self.prediction_threshold.to_string());
        put("translate.threshold", self.translation.default.to_string());
        put("translate.chemical_threshold", self.translation.chemical.to_string());
        m
    }
}
