//! Metric implementations against independent brute-force oracles on the
//! hand corpus, plus metric-wide properties.

#[path = "support/oracles.rs"]
mod oracles;

use cavp_core::metrics::{
    bleu, cider_d, meteor_lite, rouge_l, tokenize, RewardKind, Rewarder, TfIdfIndex,
};
use oracles::{bleu4_oracle, cider_d_oracle, hand_corpus, meteor_oracle, rouge_l_oracle};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus_refs(pairs: &[(Vec<String>, Vec<Vec<String>>)]) -> Vec<Vec<Vec<String>>> {
    pairs.iter().map(|(_, r)| r.clone()).collect()
}

#[test]
fn bleu_matches_oracle_on_hand_corpus() {
    for (i, (cand, refs)) in hand_corpus().iter().enumerate() {
        let got = bleu(cand, refs, 4).unwrap();
        let want = bleu4_oracle(cand, refs);
        assert!((got - want).abs() < 1e-9, "pair {i}: {got} vs {want}");
    }
}

#[test]
fn rouge_matches_oracle_on_hand_corpus() {
    for (i, (cand, refs)) in hand_corpus().iter().enumerate() {
        let got = rouge_l(cand, refs).unwrap();
        let want = rouge_l_oracle(cand, refs);
        assert!((got - want).abs() < 1e-9, "pair {i}: {got} vs {want}");
    }
}

#[test]
fn meteor_matches_exhaustive_oracle_on_hand_corpus() {
    for (i, (cand, refs)) in hand_corpus().iter().enumerate() {
        let got = meteor_lite(cand, refs).unwrap();
        let want = meteor_oracle(cand, refs);
        assert!((got - want).abs() < 1e-9, "pair {i}: {got} vs {want}");
    }
}

#[test]
fn cider_matches_dense_oracle_on_hand_corpus() {
    let pairs = hand_corpus();
    let corpus = corpus_refs(&pairs);
    let index = TfIdfIndex::build(&corpus);
    for (i, (cand, refs)) in pairs.iter().enumerate() {
        let got = cider_d(cand, refs, &index).unwrap();
        let want = cider_d_oracle(cand, refs, &corpus);
        assert!((got - want).abs() < 1e-9, "pair {i}: {got} vs {want}");
    }
}

#[test]
fn identity_candidates_hit_the_maximum() {
    let pairs = hand_corpus();
    let corpus = corpus_refs(&pairs);
    let index = TfIdfIndex::build(&corpus);
    let (_, refs) = &pairs[0];
    let cand = refs[0].clone();
    assert!((bleu(&cand, refs, 4).unwrap() - 1.0).abs() < 1e-9);
    assert!((rouge_l(&cand, refs).unwrap() - 1.0).abs() < 1e-12);
    assert!((cider_d(&cand, refs, &index).unwrap() - 10.0).abs() < 1e-6);
}

#[test]
fn scores_stay_in_range_and_ignore_reference_order() {
    let pairs = hand_corpus();
    let corpus = corpus_refs(&pairs);
    let index = TfIdfIndex::build(&corpus);
    for (cand, refs) in &pairs {
        let b = bleu(cand, refs, 4).unwrap();
        let r = rouge_l(cand, refs).unwrap();
        let m = meteor_lite(cand, refs).unwrap();
        let c = cider_d(cand, refs, &index).unwrap();
        assert!((0.0..=1.0).contains(&b));
        assert!((0.0..=1.0).contains(&r));
        assert!((0.0..=1.0).contains(&m));
        assert!((0.0..=10.0 + 1e-9).contains(&c));

        if refs.len() > 1 {
            let mut rev = refs.clone();
            rev.reverse();
            assert_eq!(b.to_bits(), bleu(cand, &rev, 4).unwrap().to_bits());
            assert_eq!(r.to_bits(), rouge_l(cand, &rev).unwrap().to_bits());
            assert_eq!(m.to_bits(), meteor_lite(cand, &rev).unwrap().to_bits());
            let c2 = cider_d(cand, &rev, &index).unwrap();
            assert!((c - c2).abs() < 1e-12);
        }
    }
}

#[test]
fn identity_dominance_over_random_candidates() {
    // score(ref, {ref}) >= score(c, {ref}) for random candidates drawn
    // from the corpus vocabulary.
    let pairs = hand_corpus();
    let corpus = corpus_refs(&pairs);
    let index = TfIdfIndex::build(&corpus);
    let vocabulary: Vec<String> = {
        let mut v: Vec<String> = pairs
            .iter()
            .flat_map(|(c, refs)| {
                c.iter()
                    .cloned()
                    .chain(refs.iter().flat_map(|r| r.iter().cloned()))
            })
            .collect();
        v.sort();
        v.dedup();
        v
    };
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (_, refs) in pairs.iter().take(10) {
        let reference = &refs[0];
        let b_id = bleu(reference, refs, 4).unwrap();
        let r_id = rouge_l(reference, refs).unwrap();
        let m_id = meteor_lite(reference, refs).unwrap();
        let c_id = cider_d(reference, refs, &index).unwrap();
        for _ in 0..40 {
            let len = rng.gen_range(1..=6);
            let cand: Vec<String> = (0..len)
                .map(|_| vocabulary[rng.gen_range(0..vocabulary.len())].clone())
                .collect();
            assert!(bleu(&cand, refs, 4).unwrap() <= b_id + 1e-12);
            assert!(rouge_l(&cand, refs).unwrap() <= r_id + 1e-12);
            assert!(meteor_lite(&cand, refs).unwrap() <= m_id + 1e-12);
            assert!(cider_d(&cand, refs, &index).unwrap() <= c_id + 1e-9);
        }
    }
}

#[test]
fn reward_dispatch_agrees_with_direct_calls() {
    let pairs = hand_corpus();
    let corpus = corpus_refs(&pairs);
    let (cand, refs) = &pairs[7];
    let index = TfIdfIndex::build(&corpus);
    for kind in [RewardKind::Bleu4, RewardKind::RougeL, RewardKind::MeteorLite] {
        let rw = Rewarder::new(kind, None).unwrap();
        let direct = match kind {
            RewardKind::Bleu4 => bleu(cand, refs, 4).unwrap(),
            RewardKind::RougeL => rouge_l(cand, refs).unwrap(),
            RewardKind::MeteorLite => meteor_lite(cand, refs).unwrap(),
            RewardKind::CiderD => unreachable!(),
        };
        assert_eq!(rw.score(cand, refs).unwrap().to_bits(), direct.to_bits());
    }
    let rw = Rewarder::new(RewardKind::CiderD, Some(index.clone())).unwrap();
    assert_eq!(
        rw.score(cand, refs).unwrap().to_bits(),
        cider_d(cand, refs, &index).unwrap().to_bits()
    );
}

#[test]
fn tokenize_then_score_runs_on_plain_text() {
    let cand = tokenize("A Red Circle");
    let refs = vec![tokenize("a red circle")];
    assert!((rouge_l(&cand, &refs).unwrap() - 1.0).abs() < 1e-12);
}
