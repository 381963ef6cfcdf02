//! Caption metrics serving both evaluation and reinforcement rewards.

pub mod bleu;
pub mod cider;
pub mod meteor;
pub mod ngram;
pub mod report;
pub mod reward;
pub mod rouge;

pub use bleu::{bleu, bleu_corpus};
pub use cider::{cider_d, TfIdfIndex, CIDER_SIGMA};
pub use meteor::meteor_lite;
pub use ngram::{tokenize, TokenSeq};
pub use report::{score_corpus, MetricReport, MetricSelection};
pub use reward::{RewardKind, Rewarder};
pub use rouge::rouge_l;
