//! Bag-level relation model: per-relation logistic scores over sentence
//! features, max aggregation across a bag, and cross-entropy training.
//!
//! For sentence `j` with features `h_j`, `p_jk = σ(W_k·h_j + b_k)`. A bag
//! is scored per relation by its most confident sentence,
//! `m_k = argmax_j p_jk` (lowest `j` on ties), and the loss is
//! `Σ_k −y_k log p_{m_k k} − (1−y_k) log(1 − p_{m_k k})`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ConceptId;
use crate::corpus::SentenceOccurrence;
use crate::error::{Error, Result};
use crate::scalar::{dot, sigmoid, softplus, Scalar};
use crate::util;

use super::bags::{Bag, MarkedSentence};
use super::encoder::SentenceEncoder;
use super::schema::{K, RELATIONS};

pub const PREDICTION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReModel<T> {
    pub dim: usize,
    /// `K` rows of length `dim`.
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ReModel<T> {
    pub fn new(dim: usize) -> Self {
        ReModel {
            dim,
            weights: vec![vec![T::zero(); dim]; K],
            bias: vec![T::zero(); K],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.bias.iter().chain(self.weights.iter().flatten()).all(|x| x.is_finite())
    }

    pub fn logits(&self, h: &[T]) -> Result<Vec<T>> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.len(),
            });
        }
        Ok(self.weights.iter().zip(&self.bias).map(|(w, &b)| dot(w, h) + b).collect())
    }

    /// `p_k = σ(W_k·h + b_k)` for every relation.
    pub fn score_features(&self, h: &[T]) -> Result<Vec<T>> {
        Ok(self.logits(h)?.into_iter().map(sigmoid).collect())
    }
}

pub fn score_sentence<T: Scalar>(
    model: &ReModel<T>,
    encoder: &dyn SentenceEncoder<T>,
    sentence: &MarkedSentence,
) -> Result<Vec<T>> {
    model.score_features(&encoder.encode(sentence)?)
}

/// A bag reduced to sentence feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBag<T> {
    pub features: Vec<Vec<T>>,
    pub labels: Vec<u8>,
}

pub fn encode_bag<T: Scalar>(encoder: &dyn SentenceEncoder<T>, bag: &Bag) -> Result<EncodedBag<T>> {
    Ok(EncodedBag {
        features: bag.sentences.iter().map(|s| encoder.encode(s)).collect::<Result<_>>()?,
        labels: bag.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BagLoss<T> {
    pub loss: T,
    /// `selected[k]` is the sentence index `m_k`.
    pub selected: Vec<usize>,
}

fn check_bag<T>(bag: &EncodedBag<T>) -> Result<()> {
    if bag.features.is_empty() {
        return Err(Error::InvalidInput("bag has no sentences".into()));
    }
    if bag.labels.len() != K {
        return Err(Error::DimensionMismatch {
            expected: K,
            found: bag.labels.len(),
        });
    }
    Ok(())
}

/// Per-sentence logits and, per relation, the selected sentence.
fn forward<T: Scalar>(model: &ReModel<T>, bag: &EncodedBag<T>) -> Result<(Vec<Vec<T>>, Vec<usize>)> {
    check_bag(bag)?;
    let logits: Vec<Vec<T>> = bag.features.iter().map(|h| model.logits(h)).collect::<Result<_>>()?;
    let selected = (0..K)
        .map(|k| {
            let mut best = 0;
            let mut best_p = sigmoid(logits[0][k]);
            for (j, z) in logits.iter().enumerate().skip(1) {
                let p = sigmoid(z[k]);
                if p > best_p {
                    best = j;
                    best_p = p;
                }
            }
            best
        })
        .collect();
    Ok((logits, selected))
}

pub fn bag_loss<T: Scalar>(model: &ReModel<T>, bag: &EncodedBag<T>) -> Result<BagLoss<T>> {
    let (logits, selected) = forward(model, bag)?;
    let loss = (0..K)
        .map(|k| {
            let z = logits[selected[k]][k];
            // −log σ(z) = softplus(−z); −log(1 − σ(z)) = softplus(z).
            if bag.labels[k] == 1 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    Ok(BagLoss { loss, selected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub weights: Vec<Vec<T>>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Gradient<T> {
    pub fn zeros(dim: usize) -> Self {
        Gradient {
            weights: vec![vec![T::zero(); dim]; K],
            bias: vec![T::zero(); K],
        }
    }

    fn add_assign(&mut self, other: &Gradient<T>) {
        for (a, b) in self.weights.iter_mut().flatten().zip(other.weights.iter().flatten()) {
            *a = *a + *b;
        }
        for (a, b) in self.bias.iter_mut().zip(&other.bias) {
            *a = *a + *b;
        }
    }
}

/// Gradient of [`bag_loss`] with the selection `m_k` held fixed:
/// `∂/∂b_k = p_{m_k k} − y_k`, `∂/∂W_k = (p_{m_k k} − y_k) h_{m_k}`.
pub fn bag_loss_gradient<T: Scalar>(model: &ReModel<T>, bag: &EncodedBag<T>) -> Result<Gradient<T>> {
    let (logits, selected) = forward(model, bag)?;
    let mut g = Gradient::zeros(model.dim);
    for k in 0..K {
        let m = selected[k];
        let residual = sigmoid(logits[m][k]) - T::from_count(bag.labels[k] as usize);
        g.bias[k] = residual;
        for (gw, &h) in g.weights[k].iter_mut().zip(&bag.features[m]) {
            *gw = residual * h;
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// `None` trains full-batch; otherwise bags are shuffled per epoch with
    /// a seeded generator and split into batches of this size.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1.0,
            batch_size: None,
            seed: 0,
        }
    }
}

/// Gradient descent on the mean bag loss. Returns the trained model and
/// the mean loss of each epoch, measured as the epoch's batches are seen.
pub fn train<T: Scalar>(
    mut model: ReModel<T>,
    bags: &[EncodedBag<T>],
    cfg: &TrainConfig,
) -> Result<(ReModel<T>, Vec<T>)> {
    let mut curve = Vec::with_capacity(cfg.epochs);
    if bags.is_empty() {
        return Ok((model, curve));
    }
    let lr = T::lit(cfg.learning_rate);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..bags.len()).collect();
        let batch = match cfg.batch_size {
            Some(b) if b > 0 => {
                let mut rng = util::keyed_rng(cfg.seed, &["epoch", &epoch.to_string()]);
                order.shuffle(&mut rng);
                b
            }
            _ => bags.len(),
        };
        let mut epoch_loss = T::zero();
        for chunk in order.chunks(batch) {
            let parts: Vec<(T, Gradient<T>)> = chunk
                .par_iter()
                .map(|&i| Ok((bag_loss(&model, &bags[i])?.loss, bag_loss_gradient(&model, &bags[i])?)))
                .collect::<Result<_>>()?;
            let mut total = Gradient::zeros(model.dim);
            for (loss, g) in &parts {
                epoch_loss = epoch_loss + *loss;
                total.add_assign(g);
            }
            let step = lr / T::from_count(chunk.len());
            for (w, g) in model.weights.iter_mut().flatten().zip(total.weights.iter().flatten()) {
                *w = *w - step * *g;
            }
            for (b, g) in model.bias.iter_mut().zip(&total.bias) {
                *b = *b - step * *g;
            }
        }
        let mean = epoch_loss / T::from_count(bags.len());
        if !mean.is_finite() || !model.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        curve.push(mean);
    }
    Ok((model, curve))
}

/// Bag-level label prediction: relation `k` is on iff its best sentence
/// scores strictly above the threshold.
pub fn predict_bag<T: Scalar>(model: &ReModel<T>, bag: &EncodedBag<T>, threshold: f64) -> Result<Vec<u8>> {
    let (logits, selected) = forward(model, bag)?;
    Ok((0..K)
        .map(|k| u8::from(sigmoid(logits[selected[k]][k]).as_f64() > threshold))
        .collect())
}

/// Micro-averaged F1 over all (bag, relation) cells. Returns 1 when there
/// are neither gold nor predicted positives.
pub fn micro_f1(gold: &[Vec<u8>], predicted: &[Vec<u8>]) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(predicted) {
        for (&a, &b) in g.iter().zip(p) {
            match (a, b) {
                (1, 1) => tp += 1,
                (0, 1) => fp += 1,
                (1, 0) => fneg += 1,
                _ => {}
            }
        }
    }
    if tp + fp + fneg == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fneg) as f64
}

/// A relation emitted for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub head: ConceptId,
    pub tail: ConceptId,
    pub relation: &'static str,
    pub probability: f64,
    pub occurrence: SentenceOccurrence,
}

/// A sentence to score for a concept pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub head: ConceptId,
    pub tail: ConceptId,
    pub sentence: MarkedSentence,
}

/// Score every candidate sentence on its own and emit `(pair, r_k)` for
/// each `p_k` strictly above `threshold`.
pub fn predict<T: Scalar>(
    model: &ReModel<T>,
    encoder: &dyn SentenceEncoder<T>,
    candidates: &[Candidate],
    threshold: f64,
) -> Result<Vec<Prediction>> {
    let scored: Vec<Vec<T>> = candidates
        .par_iter()
        .map(|c| score_sentence(model, encoder, &c.sentence))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (c, p) in candidates.iter().zip(scored) {
        for (k, pk) in p.into_iter().enumerate() {
            let pk = pk.as_f64();
            if pk > threshold {
                out.push(Prediction {
                    head: c.head.clone(),
                    tail: c.tail.clone(),
                    relation: RELATIONS[k],
                    probability: pk,
                    occurrence: c.sentence.occurrence.clone(),
                });
            }
        }
    }
    Ok(out)
}
