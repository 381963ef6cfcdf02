//! Expert output policy derived from the dataset lexicon: relation-class
//! tokens should come from the composition path, everything else from
//! the single path.

use crate::data::synthetic::LexCategory;
use std::collections::HashMap;

/// Per-token target distribution over (single, composition).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertOutputPolicy {
    pub targets: Vec<[f64; 2]>,
}

pub fn build_expert_policy(
    tokens: &[String],
    lexicon: &HashMap<String, LexCategory>,
) -> ExpertOutputPolicy {
    let targets = tokens
        .iter()
        .map(|tok| match lexicon.get(tok) {
            Some(LexCategory::Relation) => [0.0, 1.0],
            Some(_) => [1.0, 0.0],
            None => [0.5, 0.5],
        })
        .collect();
    ExpertOutputPolicy { targets }
}

/// `KL(p || q)` over a two-point distribution, with `0 ln 0 = 0`.
pub fn kl_divergence(p: &[f64; 2], q: &[f64; 2]) -> f64 {
    let mut total = 0.0;
    for i in 0..2 {
        if p[i] > 0.0 {
            total += p[i] * (p[i] / q[i]).ln();
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::lexicon;

    fn lex() -> HashMap<String, LexCategory> {
        lexicon().into_iter().collect()
    }

    #[test]
    fn relations_map_to_composition() {
        let e = build_expert_policy(&["holding".to_string()], &lex());
        assert_eq!(e.targets[0], [0.0, 1.0]);
    }

    #[test]
    fn objects_and_attributes_map_to_single() {
        let e = build_expert_policy(
            &["circle".to_string(), "red".to_string(), "a".to_string()],
            &lex(),
        );
        assert_eq!(e.targets, vec![[1.0, 0.0]; 3]);
    }

    #[test]
    fn out_of_lexicon_falls_back_to_uniform() {
        let e = build_expert_policy(&["xyzzy".to_string()], &lex());
        assert_eq!(e.targets[0], [0.5, 0.5]);
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl_divergence(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
        let kl = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]);
        assert!((kl - std::f64::consts::LN_2).abs() < 1e-12);
    }
}
