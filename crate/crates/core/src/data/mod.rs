//! Data pipeline: vocabulary, caption and feature files, the synthetic
//! scene generator, and seed-derived splits.

pub mod captions;
pub mod dataset;
pub mod features;
pub mod synthetic;
pub mod vocab;

pub use captions::{load_captions, write_captions, CaptionRecord, MAX_CAPTION_TOKENS};
pub use dataset::{split_of, Dataset, DatasetMeta, Split};
pub use features::{load_features, write_features, FeatureRecord};
pub use synthetic::{generate_scenes, lexicon, GeneratorConfig, LexCategory, SyntheticDataset};
pub use vocab::{Vocabulary, BOS, EOS, PAD, UNK};
