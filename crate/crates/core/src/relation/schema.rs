//! The 19-label relation schema and per-relation type compatibility.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::semtype::is_bios_type;
use crate::util;

pub const IS_A: &str = "is a";
pub const REVERSE_IS_A: &str = "reverse is a";
pub const SIGNIFICANT_DRUG_INTERACTION: &str = "significant drug interaction";

/// Unidirectional relations; each has a `reverse …` partner.
pub const FORWARD: [&str; 9] = [
    "is a",
    "part of",
    "may treat",
    "involved in",
    "found in taxon",
    "active ingredient in",
    "expressed in",
    "may cause",
    "encoded by",
];

pub const K: usize = 19;

/// Label order used for label vectors and model rows.
pub const RELATIONS: [&str; K] = [
    "is a",
    "part of",
    "may treat",
    "involved in",
    "found in taxon",
    "active ingredient in",
    "expressed in",
    "may cause",
    "encoded by",
    "significant drug interaction",
    "reverse is a",
    "reverse part of",
    "reverse may treat",
    "reverse involved in",
    "reverse found in taxon",
    "reverse active ingredient in",
    "reverse expressed in",
    "reverse may cause",
    "reverse encoded by",
];

pub fn relation_index(label: &str) -> Option<usize> {
    RELATIONS.iter().position(|&r| r == label)
}

pub fn is_bidirectional(label: &str) -> bool {
    label == SIGNIFICANT_DRUG_INTERACTION
}

/// Partner label of a unidirectional relation; `None` for the bidirectional
/// one and for unknown labels.
pub fn reverse_of(label: &str) -> Option<&'static str> {
    let i = relation_index(label)?;
    match i {
        0..=8 => Some(RELATIONS[i + 10]),
        10..=18 => Some(RELATIONS[i - 10]),
        _ => None,
    }
}

/// Allowed head and tail types per relation. An empty set admits any type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSchema {
    compat: BTreeMap<&'static str, (BTreeSet<String>, BTreeSet<String>)>,
}

const DISORDERS: &[&str] = &[
    "Anatomical Abnormality",
    "Disease or Syndrome",
    "Injury or Poisoning",
    "Mental or Behavioral Dysfunction",
    "Neoplastic Process",
    "Pathology",
    "Sign, Symptom or Finding",
];
const ORGANISMS: &[&str] = &["Eukaryote", "Microorganism"];
const CHEM: &[&str] = &["Chemical or Drug"];
const ANAT: &[&str] = &["Anatomy"];

fn set(groups: &[&[&str]]) -> BTreeSet<String> {
    groups.iter().flat_map(|g| g.iter().map(|s| s.to_string())).collect()
}

impl Default for RelationSchema {
    /// Provisional compatibility sets over the 18 target types.
    fn default() -> Self {
        let forward: [(&str, BTreeSet<String>, BTreeSet<String>); 10] = [
            (IS_A, set(&[]), set(&[])),
            ("part of", set(&[ANAT, CHEM]), set(&[ANAT, ORGANISMS])),
            (
                "may treat",
                set(&[CHEM, &["Therapeutic or Preventive Procedure", "Medical Device"]]),
                set(&[DISORDERS]),
            ),
            ("involved in", set(&[CHEM, ANAT]), set(&[&["Physiology", "Pathology"], DISORDERS])),
            ("found in taxon", set(&[CHEM, ANAT]), set(&[ORGANISMS])),
            ("active ingredient in", set(&[CHEM]), set(&[CHEM])),
            ("expressed in", set(&[CHEM]), set(&[ANAT, ORGANISMS])),
            ("may cause", set(&[CHEM, ORGANISMS]), set(&[DISORDERS])),
            ("encoded by", set(&[CHEM]), set(&[CHEM])),
            (SIGNIFICANT_DRUG_INTERACTION, set(&[CHEM]), set(&[CHEM])),
        ];
        let mut compat = BTreeMap::new();
        for (r, h, t) in forward {
            let r = RELATIONS[relation_index(r).expect("known")];
            if let Some(rev) = reverse_of(r) {
                compat.insert(rev, (t.clone(), h.clone()));
            }
            compat.insert(r, (h, t));
        }
        RelationSchema { compat }
    }
}

impl RelationSchema {
    /// Schema with no type restrictions.
    pub fn permissive() -> Self {
        RelationSchema {
            compat: RELATIONS.iter().map(|&r| (r, (BTreeSet::new(), BTreeSet::new()))).collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path))
    }

    /// TSV rows `relation \t head types \t tail types`, types `|`-separated
    /// or `*` for any. Listed relations override the defaults; a forward
    /// relation's reverse gets the swapped sets unless listed itself.
    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut schema = RelationSchema::default();
        let mut explicit = BTreeSet::new();
        let parse_set = |s: &str, lineno: usize| -> Result<BTreeSet<String>> {
            if s.trim() == "*" {
                return Ok(BTreeSet::new());
            }
            s.split('|')
                .map(|t| {
                    let t = t.trim();
                    if is_bios_type(t) {
                        Ok(t.to_string())
                    } else {
                        Err(Error::parse(label, lineno, format!("{t:?} is not a target type")))
                    }
                })
                .collect()
        };
        for (lineno, line) in util::data_lines(text) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(label, lineno, "expected relation, head types, tail types"));
            }
            let idx = relation_index(cols[0].trim())
                .ok_or_else(|| Error::parse(label, lineno, format!("unknown relation {:?}", cols[0])))?;
            let r = RELATIONS[idx];
            let (h, t) = (parse_set(cols[1], lineno)?, parse_set(cols[2], lineno)?);
            if let Some(rev) = reverse_of(r) {
                if !explicit.contains(rev) {
                    schema.compat.insert(rev, (t.clone(), h.clone()));
                }
            }
            schema.compat.insert(r, (h, t));
            explicit.insert(r);
        }
        Ok(schema)
    }

    fn admits(set: &BTreeSet<String>, types: &[String]) -> bool {
        set.is_empty() || types.iter().any(|t| set.contains(t))
    }

    /// Whether a head with `head_types` and a tail with `tail_types` may
    /// stand in `relation`. Untyped concepts are compatible only with
    /// unrestricted sides.
    pub fn compatible(&self, relation: &str, head_types: &[String], tail_types: &[String]) -> bool {
        self.compat
            .get(relation)
            .is_some_and(|(h, t)| Self::admits(h, head_types) && Self::admits(t, tail_types))
    }

    /// Whether any relation admits the pair.
    pub fn any_compatible(&self, head_types: &[String], tail_types: &[String]) -> bool {
        RELATIONS.iter().any(|r| self.compatible(r, head_types, tail_types))
    }
}
