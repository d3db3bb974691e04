//! Term embedding tables with exact cosine top-k search.
//!
//! File format: a `#dim <d>` header line, then `term \t v1 v2 ... vd` rows.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::normalize_term;
use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Scalar};
use crate::util;

/// Default vector width of the term encoder the tables are produced with.
pub const DEFAULT_DIM: usize = 768;
pub const DEFAULT_TOP_K: usize = 30;

/// Cosine similarity `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(Error::ZeroVector);
    }
    let c = dot(u, v) / (nu * nv);
    Ok(c.max(-T::one()).min(T::one()))
}

/// Term → vector table. Terms are stored normalized; vectors are finite and
/// nonzero.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<T> {
    dim: usize,
    terms: Vec<String>,
    data: Vec<T>,
    norms: Vec<T>,
    index: HashMap<String, usize>,
}

pub enum SimilarityQuery<'a, T> {
    Term(&'a str),
    Vector(&'a [T]),
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        EmbeddingTable {
            dim,
            terms: Vec::new(),
            data: Vec::new(),
            norms: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn insert(&mut self, term: &str, vector: Vec<T>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite component in vector for {term:?}")));
        }
        let n = norm(&vector);
        if n == T::zero() {
            return Err(Error::ZeroVector);
        }
        let key = normalize_term(term);
        if self.index.contains_key(&key) {
            return Err(Error::InvalidInput(format!("duplicate embedding for {key:?}")));
        }
        self.index.insert(key.clone(), self.terms.len());
        self.terms.push(key);
        self.data.extend(vector);
        self.norms.push(n);
        Ok(())
    }

    pub fn get(&self, term: &str) -> Option<&[T]> {
        let i = *self.index.get(&normalize_term(term))?;
        Some(self.row(i))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(&normalize_term(term))
    }

    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<T> {
        let u = self.get(a).ok_or_else(|| Error::UnknownTerm(a.to_string()))?;
        let v = self.get(b).ok_or_else(|| Error::UnknownTerm(b.to_string()))?;
        cosine(u, v)
    }

    /// Exact `k` nearest terms by cosine similarity, descending, ties in
    /// lexicographic term order. A term query excludes the term itself.
    pub fn top_k(&self, query: SimilarityQuery<'_, T>, k: usize) -> Result<Vec<(String, T)>> {
        let (qv, skip) = match query {
            SimilarityQuery::Term(t) => {
                let key = normalize_term(t);
                let i = *self.index.get(&key).ok_or_else(|| Error::UnknownTerm(t.to_string()))?;
                (self.row(i), Some(i))
            }
            SimilarityQuery::Vector(v) => {
                if v.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        found: v.len(),
                    });
                }
                (v, None)
            }
        };
        let qn = norm(qv);
        if qn == T::zero() {
            return Err(Error::ZeroVector);
        }
        let mut scored: Vec<(usize, T)> = (0..self.len())
            .filter(|&i| Some(i) != skip)
            .map(|i| {
                let c = dot(qv, self.row(i)) / (qn * self.norms[i]);
                (i, c.max(-T::one()).min(T::one()))
            })
            .collect();
        let cmp = |a: &(usize, T), b: &(usize, T)| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.terms[a.0].cmp(&self.terms[b.0]))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(i, c)| (self.terms[i].clone(), c))
            .collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&util::read_to_string(path)?, &util::file_label(path))
    }

    pub fn parse(text: &str, label: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let dim = loop {
            match lines.next() {
                None => return Err(Error::parse(label, 1, "missing #dim header")),
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => {
                    let d = l
                        .strip_prefix("#dim")
                        .and_then(|d| d.trim().parse::<usize>().ok())
                        .filter(|&d| d > 0)
                        .ok_or_else(|| Error::parse(label, i + 1, "expected header \"#dim <d>\""))?;
                    break d;
                }
            }
        };
        let mut table = EmbeddingTable::new(dim);
        for (i, line) in lines {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, values) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(label, i + 1, "expected term \\t values"))?;
            let vector = values
                .split_whitespace()
                .map(|x| x.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::parse(label, i + 1, format!("bad number: {e}")))?;
            table
                .insert(term, vector)
                .map_err(|e| Error::parse(label, i + 1, e.to_string()))?;
        }
        Ok(table)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("#dim {}\n", self.dim);
        for (i, term) in self.terms.iter().enumerate() {
            out.push_str(term);
            out.push('\t');
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }
}
