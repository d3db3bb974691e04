//! Distantly supervised relation extraction: bag construction, negative
//! sampling, a pluggable sentence encoder and the bag-max logistic model.

pub mod bags;
pub mod encoder;
pub mod model;
pub mod schema;

pub use bags::{build_bags, co_occurring_pairs, sample_negatives, Bag, BagParams, ConceptMatcher, MarkedSentence};
pub use encoder::{SentenceEncoder, ToyEncoder};
pub use model::{bag_loss, bag_loss_gradient, predict, score_sentence, train, EncodedBag, ReModel, TrainConfig};
pub use schema::{RelationSchema, K, RELATIONS};
