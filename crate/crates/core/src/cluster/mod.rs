//! Synonym grouping: similarity graph, connected components, recursive
//! Ratio-Cut splitting of oversized components, and concept formation.
//!
//! Terms become nodes; an edge joins two terms whose embedding cosine is at
//! least `edge_threshold`. Every connected component is a candidate concept.
//! Components with more than `max_cluster` nodes are bipartitioned
//! recursively; a proposed split is rejected, and the subgraph kept whole,
//! when the cosine between the mean vectors of the two halves exceeds
//! `merge_stop`.

pub mod eigen;
pub mod graph;
pub mod ratio_cut;

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_term, OccurrenceIndex};
use crate::embedding::{cosine, EmbeddingTable, SimilarityQuery};
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};

pub use graph::WeightedGraph;
pub use ratio_cut::{ratio_cut_bipartition, Bipartition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams<T> {
    pub edge_threshold: T,
    pub max_cluster: usize,
    pub merge_stop: T,
    /// Neighbors requested per term when generating candidate edges.
    pub candidate_k: usize,
    /// Up to this many terms, edges come from an exhaustive pairwise scan.
    pub all_pairs_limit: usize,
}

impl<T: Scalar> Default for ClusterParams<T> {
    fn default() -> Self {
        ClusterParams {
            edge_threshold: T::lit(0.8),
            max_cluster: 50,
            merge_stop: T::lit(0.6),
            candidate_k: 50,
            all_pairs_limit: 5_000,
        }
    }
}

impl<T: Scalar> ClusterParams<T> {
    pub fn validate(&self) -> Result<()> {
        let in_range = |x: T| x >= -T::one() && x <= T::one();
        if !in_range(self.edge_threshold) || !in_range(self.merge_stop) {
            return Err(Error::Config("similarity thresholds must lie in [-1, 1]".into()));
        }
        if self.max_cluster < 2 {
            return Err(Error::Config("max_cluster must be at least 2".into()));
        }
        if self.candidate_k == 0 {
            return Err(Error::Config("candidate_k must be positive".into()));
        }
        Ok(())
    }
}

/// Similarity graph over terms sorted lexicographically.
#[derive(Debug, Clone)]
pub struct SynonymGraph<T> {
    pub terms: Vec<String>,
    pub graph: WeightedGraph<T>,
    /// Input terms without an embedding.
    pub excluded: Vec<String>,
}

/// Build the thresholded similarity graph.
///
/// Small inputs are scanned exhaustively. Larger inputs take each term's
/// `candidate_k` nearest neighbors and, whenever the last neighbor still
/// clears the threshold, re-query with twice the `k`, so no qualifying edge
/// is missed.
pub fn build_graph<T: Scalar>(
    terms: &[String],
    table: &EmbeddingTable<T>,
    params: &ClusterParams<T>,
) -> Result<SynonymGraph<T>> {
    params.validate()?;
    let unique: BTreeSet<String> = terms.iter().map(|t| normalize_term(t)).collect();
    let (nodes, excluded): (Vec<String>, Vec<String>) =
        unique.into_iter().partition(|t| table.contains(t));
    let n = nodes.len();
    let vectors: Vec<&[T]> = nodes.iter().map(|t| table.get(t).expect("present")).collect();
    let norms: Vec<T> = vectors.iter().map(|v| norm(v)).collect();
    let sim = |i: usize, j: usize| dot(vectors[i], vectors[j]) / (norms[i] * norms[j]);

    let rows: Vec<Vec<(usize, T)>> = if n <= params.all_pairs_limit {
        (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .filter_map(|j| {
                        let s = sim(i, j);
                        (s >= params.edge_threshold).then_some((j, s))
                    })
                    .collect()
            })
            .collect()
    } else {
        let index_of: std::collections::HashMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
        (0..n)
            .into_par_iter()
            .map(|i| -> Result<Vec<(usize, T)>> {
                let mut k = params.candidate_k.min(table.len());
                loop {
                    let hits = table.top_k(SimilarityQuery::Term(&nodes[i]), k)?;
                    let saturated = hits.len() == k
                        && k < table.len() - 1
                        && hits.last().is_some_and(|h| h.1 >= params.edge_threshold);
                    if saturated {
                        k = (k * 2).min(table.len() - 1);
                        continue;
                    }
                    return Ok(hits
                        .iter()
                        .filter_map(|(t, _)| index_of.get(t.as_str()).copied())
                        .filter(|&j| j > i)
                        .filter_map(|j| {
                            let s = sim(i, j);
                            (s >= params.edge_threshold).then_some((j, s))
                        })
                        .collect());
                }
            })
            .collect::<Result<Vec<_>>>()?
    };

    let mut graph = WeightedGraph::new(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, w) in row {
            graph.add_edge(i, j, w);
        }
    }
    graph.sort_adjacency();
    Ok(SynonymGraph {
        terms: nodes,
        graph,
        excluded,
    })
}

/// Connected components as node indices, ordered by smallest member.
pub fn connected_components<T: Scalar>(graph: &SynonymGraph<T>) -> Vec<Vec<usize>> {
    graph.graph.components()
}

/// A split refused because the halves' mean vectors were too similar.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRejection<T> {
    pub members: Vec<String>,
    pub mean_cosine: T,
}

/// A split that was carried out.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptedSplit<T> {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub cut_value: T,
    pub best_trivial: T,
    pub mean_cosine: T,
}

#[derive(Debug, Clone)]
pub struct Clustering<T> {
    /// Each cluster sorted; clusters ordered by first member.
    pub clusters: Vec<Vec<String>>,
    pub rejections: Vec<SplitRejection<T>>,
    pub splits: Vec<AcceptedSplit<T>>,
    pub excluded: Vec<String>,
}

#[derive(Default)]
struct Partial<T> {
    clusters: Vec<Vec<usize>>,
    rejections: Vec<(Vec<usize>, T)>,
    splits: Vec<(Vec<usize>, Vec<usize>, T, T, T)>,
}

/// Group terms into synonym clusters.
pub fn cluster<T: Scalar>(
    terms: &[String],
    table: &EmbeddingTable<T>,
    params: &ClusterParams<T>,
) -> Result<Clustering<T>> {
    let sg = build_graph(terms, table, params)?;
    cluster_graph(&sg, table, params)
}

/// Cluster an already built graph.
pub fn cluster_graph<T: Scalar>(
    sg: &SynonymGraph<T>,
    table: &EmbeddingTable<T>,
    params: &ClusterParams<T>,
) -> Result<Clustering<T>> {
    let vectors: Vec<&[T]> = sg.terms.iter().map(|t| table.get(t).expect("present")).collect();
    let parts: Vec<Partial<T>> = connected_components(sg)
        .into_par_iter()
        .map(|comp| {
            let mut acc = Partial::default();
            split_recursive(&sg.graph, &vectors, comp, params, &mut acc)?;
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    let names = |ids: &[usize]| -> Vec<String> { ids.iter().map(|&i| sg.terms[i].clone()).collect() };
    let mut clusters = Vec::new();
    let mut rejections = Vec::new();
    let mut splits = Vec::new();
    for p in parts {
        clusters.extend(p.clusters);
        rejections.extend(p.rejections.into_iter().map(|(m, c)| SplitRejection {
            members: names(&m),
            mean_cosine: c,
        }));
        splits.extend(p.splits.into_iter().map(|(a, b, cv, bt, mc)| AcceptedSplit {
            a: names(&a),
            b: names(&b),
            cut_value: cv,
            best_trivial: bt,
            mean_cosine: mc,
        }));
    }
    clusters.sort_by_key(|c| c[0]);
    Ok(Clustering {
        clusters: clusters.iter().map(|c| names(c)).collect(),
        rejections,
        splits,
        excluded: sg.excluded.clone(),
    })
}

fn mean_vector<T: Scalar>(vectors: &[&[T]], members: &[usize]) -> Vec<T> {
    let dim = vectors[members[0]].len();
    let mut mean = vec![T::zero(); dim];
    for &m in members {
        for (acc, &x) in mean.iter_mut().zip(vectors[m]) {
            *acc = *acc + x;
        }
    }
    let count = T::from_count(members.len());
    mean.iter_mut().for_each(|x| *x = *x / count);
    mean
}

/// `nodes` is sorted and induces a connected subgraph.
fn split_recursive<T: Scalar>(
    graph: &WeightedGraph<T>,
    vectors: &[&[T]],
    nodes: Vec<usize>,
    params: &ClusterParams<T>,
    acc: &mut Partial<T>,
) -> Result<()> {
    if nodes.len() <= params.max_cluster {
        acc.clusters.push(nodes);
        return Ok(());
    }
    let sub = graph.induced(&nodes);
    let bp = ratio_cut_bipartition(&sub)?;
    let a: Vec<usize> = bp.a.iter().map(|&i| nodes[i]).collect();
    let b: Vec<usize> = bp.b.iter().map(|&i| nodes[i]).collect();
    // A zero mean vector has no direction; treat the halves as unrelated.
    let mean_cos = match cosine(&mean_vector(vectors, &a), &mean_vector(vectors, &b)) {
        Ok(c) => c,
        Err(Error::ZeroVector) => T::zero(),
        Err(e) => return Err(e),
    };
    if mean_cos > params.merge_stop {
        acc.rejections.push((nodes.clone(), mean_cos));
        acc.clusters.push(nodes);
        return Ok(());
    }
    acc.splits
        .push((a.clone(), b.clone(), bp.cut_value, bp.best_trivial, mean_cos));
    for part in [a, b] {
        // A sweep prefix need not be connected; recurse per component.
        for comp in graph.induced(&part).components() {
            let global: Vec<usize> = comp.into_iter().map(|i| part[i]).collect();
            split_recursive(graph, vectors, global, params, acc)?;
        }
    }
    Ok(())
}

/// Concept identifier `CN` followed by eight digits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ConceptId(String);

impl ConceptId {
    pub fn from_index(n: usize) -> Self {
        assert!(n < 100_000_000, "concept index overflows 8 digits");
        ConceptId(format!("CN{n:08}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_valid(s: &str) -> bool {
        s.len() == 10 && s.starts_with("CN") && s[2..].bytes().all(|b| b.is_ascii_digit())
    }
}

impl TryFrom<String> for ConceptId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if ConceptId::is_valid(&s) {
            Ok(ConceptId(s))
        } else {
            Err(Error::InvalidInput(format!("{s:?} is not a concept id")))
        }
    }
}

impl std::str::FromStr for ConceptId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConceptId::try_from(s.to_string())
    }
}

impl From<ConceptId> for String {
    fn from(id: ConceptId) -> String {
        id.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    /// Sorted member terms.
    pub terms: Vec<String>,
    pub preferred_term: String,
    /// Up to three target semantic types.
    pub semtypes: Vec<String>,
}

/// Pick preferred terms by corpus frequency and assign sequential ids.
pub fn assign_ids_and_preferred(
    clusters: &[Vec<String>],
    index: &OccurrenceIndex,
) -> Result<Vec<Concept>> {
    assign_ids_with(clusters, |t| index.count(t))
}

/// The preferred term is the most frequent member (ties: lexicographically
/// smallest). Concepts are ordered by preferred term and numbered from
/// `CN00000001`.
pub fn assign_ids_with<F>(clusters: &[Vec<String>], frequency: F) -> Result<Vec<Concept>>
where
    F: Fn(&str) -> usize,
{
    let mut staged = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        if cluster.is_empty() {
            return Err(Error::EmptyCluster);
        }
        let mut terms = cluster.clone();
        terms.sort();
        terms.dedup();
        let preferred = terms
            .iter()
            .map(|t| (frequency(t), t))
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, t)| t.clone())
            .expect("non-empty");
        staged.push((preferred, terms));
    }
    staged.sort();
    Ok(staged
        .into_iter()
        .enumerate()
        .map(|(i, (preferred_term, terms))| Concept {
            id: ConceptId::from_index(i + 1),
            terms,
            preferred_term,
            semtypes: Vec::new(),
        })
        .collect())
}

/// `concept_id \t preferred_term \t member|member|...`
pub fn clusters_to_tsv(concepts: &[Concept]) -> String {
    let mut out = String::from("concept_id\tpreferred_term\tterms\n");
    for c in concepts {
        out.push_str(&format!("{}\t{}\t{}\n", c.id, c.preferred_term, c.terms.join("|")));
    }
    out
}
