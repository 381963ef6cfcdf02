//! Named parameter storage with an explicit sharing map.
//!
//! Storage entries are the unique trainable arrays; roles (what the
//! forward pass asks for) resolve to storage through the sharing map, so
//! LSTM weight sharing between sub-policies is a property of the map,
//! not of the forward code.

use super::config::ModelConfig;
use crate::autodiff::{LstmVars, Real, Tape, Tensor, Var};
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

pub const SP_NAMES: [&str; 4] = ["single", "context", "composition", "output"];
const LSTM_FIELDS: [&str; 8] = [
    "w_input", "b_input", "w_forget", "b_forget", "w_cand", "b_cand", "w_out", "b_out",
];

#[derive(Debug, Clone)]
pub struct ParamStore<R: Real> {
    names: Vec<String>,
    tensors: Vec<Tensor<R>>,
    index: HashMap<String, usize>,
    /// role -> storage name, for every LSTM role of the sub-policies.
    sharing: BTreeMap<String, String>,
    pub config: ModelConfig,
}

fn xavier<R: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor<R> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| R::from_f64(rng.gen_range(-a..a)))
        .collect();
    Tensor::new(vec![rows, cols], data).expect("xavier shape")
}

fn xavier_vec<R: Real>(rng: &mut ChaCha8Rng, len: usize) -> Tensor<R> {
    let a = (6.0 / (len + 1) as f64).sqrt();
    let data = (0..len)
        .map(|_| R::from_f64(rng.gen_range(-a..a)))
        .collect();
    Tensor::vector(data)
}

impl<R: Real> ParamStore<R> {
    /// Seeded initialization. Matrices are uniform in
    /// `[-sqrt(6/(fan_in+fan_out)), +...]`, biases zero except the LSTM
    /// forget-gate bias which starts at 1.0.
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut store = ParamStore {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
            sharing: BTreeMap::new(),
            config: config.clone(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = config;
        let h = cfg.hidden_dim;
        let d = cfg.feature_dim;
        let a = cfg.attn_dim;

        store.insert(
            "embed",
            xavier(&mut rng, cfg.vocab_size, cfg.embed_dim),
        );

        let sp_in = cfg.sp_state_dim();
        let active_sps: &[&str] = if cfg.variant.has_composition() {
            &SP_NAMES
        } else {
            &SP_NAMES[..1]
        };

        // Attention triples are never shared.
        for name in active_sps {
            store.insert(&format!("sp.{name}.attn.w_a"), xavier_vec(&mut rng, a));
            store.insert(&format!("sp.{name}.attn.w_h"), xavier(&mut rng, a, h));
            store.insert(&format!("sp.{name}.attn.w_q"), xavier(&mut rng, a, d));
        }

        // LSTM storage sets, then the role map.
        store.insert_lstm("sp.shared.lstm", sp_in, h, &mut rng);
        let output_storage = if cfg.variant.has_composition() && !cfg.variant.shares_output_lstm()
        {
            store.insert_lstm("sp.output_own.lstm", sp_in, h, &mut rng);
            "sp.output_own.lstm"
        } else {
            "sp.shared.lstm"
        };
        for name in active_sps {
            let storage = if *name == "output" {
                output_storage
            } else {
                "sp.shared.lstm"
            };
            store
                .sharing
                .insert(format!("sp.{name}.lstm"), storage.to_string());
        }

        if cfg.variant.has_composition() {
            store.insert("fuse.w", xavier(&mut rng, d, 2 * d));
        }

        store.insert_lstm("lang.lstm", cfg.lang_input_dim(), h, &mut rng);
        store.insert("lang.proj.w", xavier(&mut rng, cfg.vocab_size, h));
        store.insert("lang.proj.b", Tensor::zeros(vec![cfg.vocab_size]));

        store
    }

    fn insert(&mut self, name: &str, t: Tensor<R>) {
        debug_assert!(!self.index.contains_key(name), "duplicate param {name}");
        self.index.insert(name.to_string(), self.tensors.len());
        self.names.push(name.to_string());
        self.tensors.push(t);
    }

    fn insert_lstm(&mut self, prefix: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) {
        for field in LSTM_FIELDS {
            let t = if field.starts_with("w_") {
                xavier(rng, hidden, input + hidden)
            } else if field == "b_forget" {
                Tensor::vector(vec![R::ONE; hidden])
            } else {
                Tensor::zeros(vec![hidden])
            };
            self.insert(&format!("{prefix}.{field}"), t);
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn total_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.numel()).sum()
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<R>> {
        self.index
            .get(name)
            .map(|&i| &self.tensors[i])
            .ok_or_else(|| Error::contract(format!("unknown parameter {name}")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<R>> {
        match self.index.get(name) {
            Some(&i) => Ok(&mut self.tensors[i]),
            None => Err(Error::contract(format!("unknown parameter {name}"))),
        }
    }

    pub fn tensor_at(&self, i: usize) -> &Tensor<R> {
        &self.tensors[i]
    }

    pub fn tensor_at_mut(&mut self, i: usize) -> &mut Tensor<R> {
        &mut self.tensors[i]
    }

    pub fn sharing(&self) -> &BTreeMap<String, String> {
        &self.sharing
    }

    /// Number of distinct LSTM parameter sets used by the sub-policies.
    pub fn distinct_sp_lstm_sets(&self) -> usize {
        let mut set: Vec<&str> = self.sharing.values().map(|s| s.as_str()).collect();
        set.sort_unstable();
        set.dedup();
        set.len()
    }

    pub fn to_f64(&self) -> ParamStore<f64> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| t.to_f64()).collect(),
            index: self.index.clone(),
            sharing: self.sharing.clone(),
            config: self.config.clone(),
        }
    }

    pub fn validate_finite(&self) -> Result<()> {
        for (n, t) in self.names.iter().zip(self.tensors.iter()) {
            t.validate_finite(n)?;
        }
        Ok(())
    }

    /// Registers every storage tensor on a tape (once each) and resolves
    /// the role structure the forward pass consumes.
    pub fn bind(&self, tape: &mut Tape<R>, trainable: bool) -> Result<BoundParams> {
        let vars: Vec<Var> = self
            .tensors
            .iter()
            .map(|t| tape.leaf(t.clone(), trainable))
            .collect();
        self.resolve(vars)
    }

    /// Resolves roles against externally registered storage handles
    /// (ordered like `names`). Gradient checks drive the model through
    /// this to treat every parameter as a graph input.
    pub fn resolve(&self, vars: Vec<Var>) -> Result<BoundParams> {
        if vars.len() != self.tensors.len() {
            return Err(Error::contract(format!(
                "resolve expects {} handles, got {}",
                self.tensors.len(),
                vars.len()
            )));
        }
        let lookup = |name: &str| -> Result<Var> {
            self.index
                .get(name)
                .map(|&i| vars[i])
                .ok_or_else(|| Error::contract(format!("unknown parameter {name}")))
        };
        let lstm_vars = |storage: &str| -> Result<LstmVars> {
            Ok(LstmVars {
                w_input: lookup(&format!("{storage}.w_input"))?,
                b_input: lookup(&format!("{storage}.b_input"))?,
                w_forget: lookup(&format!("{storage}.w_forget"))?,
                b_forget: lookup(&format!("{storage}.b_forget"))?,
                w_cand: lookup(&format!("{storage}.w_cand"))?,
                b_cand: lookup(&format!("{storage}.b_cand"))?,
                w_out: lookup(&format!("{storage}.w_out"))?,
                b_out: lookup(&format!("{storage}.b_out"))?,
            })
        };
        let sub_policy = |name: &str| -> Result<BoundSubPolicy> {
            let storage = self
                .sharing
                .get(&format!("sp.{name}.lstm"))
                .ok_or_else(|| Error::contract(format!("no lstm mapping for sp.{name}")))?;
            Ok(BoundSubPolicy {
                w_a: lookup(&format!("sp.{name}.attn.w_a"))?,
                w_h: lookup(&format!("sp.{name}.attn.w_h"))?,
                w_q: lookup(&format!("sp.{name}.attn.w_q"))?,
                lstm: lstm_vars(storage)?,
            })
        };

        let with_composition = self.config.variant.has_composition();
        Ok(BoundParams {
            embed: lookup("embed")?,
            single: sub_policy("single")?,
            context: with_composition.then(|| sub_policy("context")).transpose()?,
            composition: with_composition
                .then(|| sub_policy("composition"))
                .transpose()?,
            output: with_composition.then(|| sub_policy("output")).transpose()?,
            fuse_w: with_composition.then(|| lookup("fuse.w")).transpose()?,
            lang_lstm: lstm_vars("lang.lstm")?,
            proj_w: lookup("lang.proj.w")?,
            proj_b: lookup("lang.proj.b")?,
            storage_vars: vars,
        })
    }
}

/// Attention triple plus (possibly shared) LSTM handles for one sub-policy.
#[derive(Debug, Clone, Copy)]
pub struct BoundSubPolicy {
    pub w_a: Var,
    pub w_h: Var,
    pub w_q: Var,
    pub lstm: LstmVars,
}

/// All parameter handles for one tape.
#[derive(Debug, Clone)]
pub struct BoundParams {
    pub embed: Var,
    pub single: BoundSubPolicy,
    pub context: Option<BoundSubPolicy>,
    pub composition: Option<BoundSubPolicy>,
    pub output: Option<BoundSubPolicy>,
    pub fuse_w: Option<Var>,
    pub lang_lstm: LstmVars,
    pub proj_w: Var,
    pub proj_b: Var,
    /// Storage-order handles, aligned with `ParamStore::names`.
    pub storage_vars: Vec<Var>,
}
