use serde::{Deserialize, Serialize};

/// Architecture variants, selectable for ablations.
///
/// * `Single`: only the single sub-policy; `v_t = v_t^s`.
/// * `Cavp3p`: last-step visual context; LSTM parameters shared among the
///   single/context/composition sub-policies, output sub-policy separate.
/// * `Cavp4p`: last-step visual context; one LSTM parameter set shared
///   among all four sub-policies.
/// * `Cavp4c`: full attention over all previous visual contexts; one LSTM
///   parameter set shared among all four sub-policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CavpVariant {
    Single,
    Cavp3p,
    Cavp4p,
    Cavp4c,
}

impl CavpVariant {
    /// Context/composition/output sub-policies run at all.
    pub fn has_composition(self) -> bool {
        !matches!(self, CavpVariant::Single)
    }

    /// Context is chosen by attention over the full history rather than
    /// taken from the last step.
    pub fn full_context_attention(self) -> bool {
        matches!(self, CavpVariant::Cavp4c)
    }

    /// The output sub-policy's LSTM joins the shared parameter set.
    pub fn shares_output_lstm(self) -> bool {
        matches!(self, CavpVariant::Cavp4p | CavpVariant::Cavp4c)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CavpVariant::Single => "single",
            CavpVariant::Cavp3p => "cavp3p",
            CavpVariant::Cavp4p => "cavp4p",
            CavpVariant::Cavp4c => "cavp4c",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "single" => Some(CavpVariant::Single),
            "cavp3p" => Some(CavpVariant::Cavp3p),
            "cavp4p" => Some(CavpVariant::Cavp4p),
            "cavp4c" => Some(CavpVariant::Cavp4c),
            _ => None,
        }
    }
}

/// Model dimensions plus the variant; everything a forward pass needs to
/// know about the architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Region feature dimension D.
    pub feature_dim: usize,
    /// LSTM hidden size (all five cells).
    pub hidden_dim: usize,
    /// Word embedding size E.
    pub embed_dim: usize,
    /// Attention projection size A.
    pub attn_dim: usize,
    /// Vocabulary size including the four special tokens.
    pub vocab_size: usize,
    /// Regions per image k.
    pub num_regions: usize,
    /// Hard cap on generated length.
    pub max_len: usize,
    pub variant: CavpVariant,
}

impl ModelConfig {
    /// Desk-scale defaults sized to train end-to-end on a laptop-class CPU.
    pub fn desk(vocab_size: usize, variant: CavpVariant) -> Self {
        ModelConfig {
            feature_dim: 24,
            hidden_dim: 64,
            embed_dim: 48,
            attn_dim: 64,
            vocab_size,
            num_regions: 8,
            max_len: 16,
            variant,
        }
    }

    /// Full-scale settings (hidden 1300, embedding 1000, attention 1024,
    /// k = 36, detector features of 2048). Documented for completeness;
    /// not trainable at desk scale.
    pub fn paper(vocab_size: usize, variant: CavpVariant) -> Self {
        ModelConfig {
            feature_dim: 2048,
            hidden_dim: 1300,
            embed_dim: 1000,
            attn_dim: 1024,
            vocab_size,
            num_regions: 36,
            max_len: 16,
            variant,
        }
    }

    /// Tiny configuration used by gradient checks.
    pub fn miniature(variant: CavpVariant) -> Self {
        ModelConfig {
            feature_dim: 6,
            hidden_dim: 8,
            embed_dim: 5,
            attn_dim: 7,
            vocab_size: 12,
            num_regions: 4,
            max_len: 16,
            variant,
        }
    }

    /// Input width of a sub-policy LSTM: `[h^l, mean-pool, W_e pi]`.
    pub fn sp_state_dim(&self) -> usize {
        self.hidden_dim + self.feature_dim + self.embed_dim
    }

    /// Input width of the language LSTM: `[h^s, v]`.
    pub fn lang_input_dim(&self) -> usize {
        self.hidden_dim + self.feature_dim
    }
}
