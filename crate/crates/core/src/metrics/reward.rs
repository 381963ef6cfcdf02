//! Sentence-level reward dispatch for policy-gradient training.

use super::bleu::bleu;
use super::cider::{cider_d, TfIdfIndex};
use super::meteor::meteor_lite;
use super::rouge::rouge_l;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RewardKind {
    Bleu4,
    RougeL,
    MeteorLite,
    CiderD,
}

impl RewardKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardKind::Bleu4 => "bleu4",
            RewardKind::RougeL => "rougeL",
            RewardKind::MeteorLite => "meteorlite",
            RewardKind::CiderD => "ciderD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bleu4" => Some(RewardKind::Bleu4),
            "rougeL" => Some(RewardKind::RougeL),
            "meteorlite" => Some(RewardKind::MeteorLite),
            "ciderD" => Some(RewardKind::CiderD),
            _ => None,
        }
    }
}

/// Pure, deterministic sentence scorer. CIDEr-D requires a tf-idf index
/// built over the corpus the references come from.
pub struct Rewarder {
    kind: RewardKind,
    index: Option<TfIdfIndex>,
}

impl Rewarder {
    pub fn new(kind: RewardKind, index: Option<TfIdfIndex>) -> Result<Self> {
        if kind == RewardKind::CiderD && index.is_none() {
            return Err(Error::contract("ciderD reward requires a tf-idf index"));
        }
        Ok(Rewarder { kind, index })
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn score(&self, candidate: &[String], references: &[Vec<String>]) -> Result<f64> {
        match self.kind {
            RewardKind::Bleu4 => bleu(candidate, references, 4),
            RewardKind::RougeL => rouge_l(candidate, references),
            RewardKind::MeteorLite => meteor_lite(candidate, references),
            RewardKind::CiderD => {
                let index = self.index.as_ref().expect("checked at construction");
                cider_d(candidate, references, index)
            }
        }
    }
}
