//! Sentence encoders producing the feature vector `h_x` for a marked
//! sentence.

use crate::embedding::EmbeddingTable;
use crate::error::Result;
use crate::scalar::{norm, Scalar};
use crate::util;

use super::bags::MarkedSentence;

pub const DEFAULT_HASH_DIM: usize = 256;
/// Tokens taken on each outer side of the entity pair.
pub const CONTEXT_WINDOW: usize = 3;

pub trait SentenceEncoder<T>: Sync {
    fn dim(&self) -> usize;
    fn encode(&self, sentence: &MarkedSentence) -> Result<Vec<T>>;
}

/// Deterministic stand-in encoder.
///
/// The contextual part hashes token unigrams from four fields (head span,
/// tail span, tokens between the entities, and a window outside them) into
/// `hash_dim` buckets and L2-normalizes the counts. When a term table is
/// supplied, the head and tail term vectors are appended, so
/// `h_x = [hashed context ; v(head) ; v(tail)]`. Terms without a vector
/// contribute zeros.
pub struct ToyEncoder<'a, T> {
    pub hash_dim: usize,
    pub terms: Option<&'a EmbeddingTable<T>>,
}

impl<'a, T: Scalar> ToyEncoder<'a, T> {
    pub fn new(hash_dim: usize, terms: Option<&'a EmbeddingTable<T>>) -> Self {
        assert!(hash_dim > 0);
        ToyEncoder { hash_dim, terms }
    }

    fn bump(&self, h: &mut [T], field: &str, token: &str) {
        let slot = (util::stable_hash([field, token]) % self.hash_dim as u64) as usize;
        h[slot] = h[slot] + T::one();
    }
}

impl<T: Scalar> SentenceEncoder<T> for ToyEncoder<'_, T> {
    fn dim(&self) -> usize {
        self.hash_dim + self.terms.map_or(0, |t| 2 * t.dim())
    }

    fn encode(&self, s: &MarkedSentence) -> Result<Vec<T>> {
        let mut h = vec![T::zero(); self.hash_dim];
        for tok in &s.tokens[s.head.0..s.head.1] {
            self.bump(&mut h, "head", tok);
        }
        for tok in &s.tokens[s.tail.0..s.tail.1] {
            self.bump(&mut h, "tail", tok);
        }
        let (lo, hi) = (s.head.1.min(s.tail.1), s.head.0.max(s.tail.0));
        for tok in &s.tokens[lo..hi.max(lo)] {
            self.bump(&mut h, "between", tok);
        }
        let (first, last) = (s.head.0.min(s.tail.0), s.head.1.max(s.tail.1));
        for tok in &s.tokens[first.saturating_sub(CONTEXT_WINDOW)..first] {
            self.bump(&mut h, "left", tok);
        }
        for tok in &s.tokens[last..(last + CONTEXT_WINDOW).min(s.tokens.len())] {
            self.bump(&mut h, "right", tok);
        }
        let n = norm(&h);
        if n > T::zero() {
            h.iter_mut().for_each(|x| *x = *x / n);
        }
        if let Some(table) = self.terms {
            for text in [s.head_text(), s.tail_text()] {
                match table.get(&text) {
                    Some(v) => h.extend_from_slice(v),
                    None => h.extend(std::iter::repeat_n(T::zero(), table.dim())),
                }
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;

    #[test]
    fn concatenates_term_vectors() {
        let c = Corpus::from_jsonl(r#"{"doc_id":"d","text":"Aspirin relieves severe headache today."}"#, "t").unwrap();
        let s = MarkedSentence::new(c.sentence("d", 0).unwrap(), (0, 1), (3, 4)).unwrap();
        let table = EmbeddingTable::<f64>::parse("#dim 2\naspirin\t1 2\n", "e").unwrap();
        let enc = ToyEncoder::new(16, Some(&table));
        let h = enc.encode(&s).unwrap();
        assert_eq!(h.len(), enc.dim());
        assert_eq!(&h[16..18], &[1.0, 2.0]);
        assert_eq!(&h[18..20], &[0.0, 0.0]);
        assert!((norm(&h[..16]) - 1.0).abs() < 1e-12);
        assert_eq!(h, enc.encode(&s).unwrap());
    }
}
