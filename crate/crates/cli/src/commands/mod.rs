pub mod datagen;
pub mod eval;
pub mod gradcheck;
pub mod score;
pub mod trace;
pub mod train;

use clap::ValueEnum;

/// CLI-facing architecture variants.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Single,
    Cavp3p,
    Cavp4p,
    Cavp4c,
}

impl From<VariantArg> for cavp_core::model::CavpVariant {
    fn from(v: VariantArg) -> Self {
        use cavp_core::model::CavpVariant::*;
        match v {
            VariantArg::Single => Single,
            VariantArg::Cavp3p => Cavp3p,
            VariantArg::Cavp4p => Cavp4p,
            VariantArg::Cavp4c => Cavp4c,
        }
    }
}

/// CLI-facing reward kinds.
#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RewardArg {
    Bleu4,
    #[value(name = "rougeL")]
    RougeL,
    Meteorlite,
    #[value(name = "ciderD")]
    CiderD,
}

impl From<RewardArg> for cavp_core::metrics::RewardKind {
    fn from(v: RewardArg) -> Self {
        use cavp_core::metrics::RewardKind::*;
        match v {
            RewardArg::Bleu4 => Bleu4,
            RewardArg::RougeL => RougeL,
            RewardArg::Meteorlite => MeteorLite,
            RewardArg::CiderD => CiderD,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhaseArg {
    Xe,
    Scst,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for cavp_core::data::Split {
    fn from(v: SplitArg) -> Self {
        use cavp_core::data::Split::*;
        match v {
            SplitArg::Train => Train,
            SplitArg::Val => Val,
            SplitArg::Test => Test,
        }
    }
}

/// Builds the vocabulary from the training-split references.
pub fn train_vocab(
    dataset: &cavp_core::data::Dataset,
    min_count: usize,
) -> cavp_core::data::Vocabulary {
    let refs: Vec<Vec<String>> = dataset
        .split_indices(cavp_core::data::Split::Train)
        .into_iter()
        .flat_map(|i| dataset.captions[i].references.clone())
        .collect();
    cavp_core::data::Vocabulary::build(&refs, min_count)
}
