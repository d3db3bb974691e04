//! Seed-term dictionary loading and rule-based term cleaning.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::config::parse_kv;
use crate::corpus::normalize_term;
use crate::error::{Error, Result};
use crate::util;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTerm {
    /// Normalized surface form.
    pub surface: String,
    pub source: String,
    pub allowed_semtypes: BTreeSet<String>,
}

/// Per-source whitelist of semantic types. Sources without an entry keep
/// all of their types.
#[derive(Debug, Clone, Default)]
pub struct SourceTypeFilter {
    pub allowed: BTreeMap<String, BTreeSet<String>>,
}

impl SourceTypeFilter {
    /// TSV rows `source \t type1|type2|...`.
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut allowed = BTreeMap::new();
        for (lineno, line) in util::data_lines(text) {
            let (source, types) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(label, lineno, "expected source, types"))?;
            allowed.insert(source.trim().to_string(), split_types(types));
        }
        Ok(SourceTypeFilter { allowed })
    }
}

fn split_types(field: &str) -> BTreeSet<String> {
    field
        .split('|')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

pub fn load_dictionary(path: &Path, filter: Option<&SourceTypeFilter>) -> Result<Vec<SeedTerm>> {
    parse_dictionary(&util::read_to_string(path)?, &util::file_label(path), filter)
}

/// Parse a `surface \t source \t type1|type2` dictionary.
///
/// Surfaces are normalized and de-duplicated; duplicates merge their type
/// sets and keep the first row's source. Output follows first-seen order.
pub fn parse_dictionary(
    text: &str,
    label: &str,
    filter: Option<&SourceTypeFilter>,
) -> Result<Vec<SeedTerm>> {
    let mut terms: Vec<SeedTerm> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in util::data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 3 {
            return Err(Error::parse(
                label,
                lineno,
                format!("expected 3 columns (surface, source, semtypes), found {}", cols.len()),
            ));
        }
        let surface = normalize_term(cols[0]);
        if surface.is_empty() {
            return Err(Error::parse(label, lineno, "empty surface"));
        }
        let source = cols[1].trim().to_string();
        let mut types = split_types(cols[2]);
        if types.is_empty() {
            return Err(Error::parse(label, lineno, "no semantic types"));
        }
        if let Some(allowed) = filter.and_then(|f| f.allowed.get(&source)) {
            types.retain(|t| allowed.contains(t));
            if types.is_empty() {
                continue;
            }
        }
        match seen.get(&surface) {
            Some(&i) => terms[i].allowed_semtypes.extend(types),
            None => {
                seen.insert(surface.clone(), terms.len());
                terms.push(SeedTerm {
                    surface,
                    source,
                    allowed_semtypes: types,
                });
            }
        }
    }
    Ok(terms)
}

#[derive(Debug, Clone)]
pub struct RegexRule {
    pub name: String,
    pub pattern: Regex,
}

/// Ordered rejection rules. A term is rejected by the first rule that fires;
/// rule names are `stopword`, `min_length`, `numeric`, `punctuation`, then
/// `regex:<name>` in declaration order.
#[derive(Debug, Clone)]
pub struct FilterRuleSet {
    pub stopwords: BTreeSet<String>,
    /// Terms shorter than this (in characters) are rejected unless they
    /// contain a digit. Zero disables the rule.
    pub min_length: usize,
    pub reject_numeric: bool,
    pub reject_punctuation: bool,
    pub regex_rules: Vec<RegexRule>,
}

impl Default for FilterRuleSet {
    fn default() -> Self {
        FilterRuleSet {
            stopwords: parse_word_list(DEFAULT_STOPWORDS),
            min_length: 3,
            reject_numeric: true,
            reject_punctuation: true,
            regex_rules: Vec::new(),
        }
    }
}

fn parse_word_list(text: &str) -> BTreeSet<String> {
    util::data_lines(text)
        .map(|(_, w)| normalize_term(w))
        .filter(|w| !w.is_empty())
        .collect()
}

fn parse_bool(v: &str, label: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::parse(label, line, format!("expected boolean, got {v:?}"))),
    }
}

impl FilterRuleSet {
    /// A rule set that rejects nothing.
    pub fn empty() -> Self {
        FilterRuleSet {
            stopwords: BTreeSet::new(),
            min_length: 0,
            reject_numeric: false,
            reject_punctuation: false,
            regex_rules: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&util::read_to_string(path)?, &util::file_label(path), base)
    }

    /// Parse a flat `key = value` rules file, starting from the defaults.
    ///
    /// Keys: `stopwords` (`default` or `none`), `stopwords_file` (path
    /// relative to `base_dir`, added to the list), `extra_stopwords`
    /// (`|`-separated), `min_length`, `reject_numeric`, `reject_punctuation`,
    /// and `regex.<name>` (rejection pattern, applied in file order).
    pub fn parse(text: &str, label: &str, base_dir: &Path) -> Result<Self> {
        let mut rules = FilterRuleSet::default();
        for (line, key, value) in parse_kv(text, label)? {
            match key.as_str() {
                "stopwords" => match value.as_str() {
                    "default" => rules.stopwords = parse_word_list(DEFAULT_STOPWORDS),
                    "none" => rules.stopwords.clear(),
                    other => {
                        return Err(Error::parse(label, line, format!("unknown stopwords {other:?}")))
                    }
                },
                "stopwords_file" => {
                    let words = util::read_to_string(&base_dir.join(&value))?;
                    rules.stopwords.extend(parse_word_list(&words));
                }
                "extra_stopwords" => {
                    rules
                        .stopwords
                        .extend(value.split('|').map(normalize_term).filter(|w| !w.is_empty()));
                }
                "min_length" => {
                    rules.min_length = value
                        .parse()
                        .map_err(|_| Error::parse(label, line, "min_length must be an integer"))?;
                }
                "reject_numeric" => rules.reject_numeric = parse_bool(&value, label, line)?,
                "reject_punctuation" => rules.reject_punctuation = parse_bool(&value, label, line)?,
                k if k.starts_with("regex.") => {
                    let pattern = Regex::new(&value)
                        .map_err(|e| Error::parse(label, line, format!("bad regex: {e}")))?;
                    rules.regex_rules.push(RegexRule {
                        name: k["regex.".len()..].to_string(),
                        pattern,
                    });
                }
                other => return Err(Error::parse(label, line, format!("unknown rule {other:?}"))),
            }
        }
        Ok(rules)
    }

    /// Name of the first rule rejecting `surface`, if any.
    pub fn first_violation(&self, surface: &str) -> Option<String> {
        let s = normalize_term(surface);
        if self.stopwords.contains(&s) {
            return Some("stopword".into());
        }
        let has_digit = s.chars().any(|c| c.is_numeric());
        if self.min_length > 0 && s.chars().count() < self.min_length && !has_digit {
            return Some("min_length".into());
        }
        if self.reject_numeric
            && has_digit
            && s.chars().all(|c| c.is_numeric() || ".,-+/%: ".contains(c))
        {
            return Some("numeric".into());
        }
        if self.reject_punctuation && !s.chars().any(char::is_alphanumeric) {
            return Some("punctuation".into());
        }
        self.regex_rules
            .iter()
            .find(|r| r.pattern.is_match(&s))
            .map(|r| format!("regex:{}", r.name))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejected<T> {
    pub item: T,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanOutcome<T> {
    pub kept: Vec<T>,
    pub rejected: Vec<Rejected<T>>,
}

/// Partition any items with a surface form by the rule set, preserving order.
pub fn clean_by<T, F>(items: Vec<T>, surface: F, rules: &FilterRuleSet) -> CleanOutcome<T>
where
    F: Fn(&T) -> &str,
{
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for item in items {
        match rules.first_violation(surface(&item)) {
            Some(rule) => rejected.push(Rejected { item, rule }),
            None => kept.push(item),
        }
    }
    CleanOutcome { kept, rejected }
}

pub fn clean_terms(terms: &[SeedTerm], rules: &FilterRuleSet) -> CleanOutcome<SeedTerm> {
    clean_by(terms.to_vec(), |t| t.surface.as_str(), rules)
}
