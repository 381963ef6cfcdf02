use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig, Split, Vocabulary};
use cavp_core::decode::{beam_decode, greedy_decode};
use cavp_core::metrics::{score_corpus, MetricSelection, RewardKind};
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{train, LrSchedule, TrainConfig};

fn heldout(model: &CavpModel<f32>, ds: &Dataset, vocab: &Vocabulary) -> f64 {
    let idx = ds.split_indices(Split::Test);
    let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = idx
        .iter()
        .map(|&i| {
            let t = beam_decode(model, &ds.features[i].features, 5).unwrap();
            (t.words(vocab), ds.captions[i].references.clone())
        })
        .collect();
    score_corpus(&pairs, MetricSelection::default())
        .unwrap()
        .cider_d
        .unwrap()
}

fn main() {
    let a: Vec<String> = std::env::args().collect();
    let xe_lr: f64 = a[1].parse().unwrap();
    let xe_every: usize = a[2].parse().unwrap();
    let xe_batch: usize = a[3].parse().unwrap();
    let scst_lr: f64 = a[4].parse().unwrap();
    let scst_batch: usize = a[5].parse().unwrap();
    let seed: u64 = a.get(6).and_then(|s| s.parse().ok()).unwrap_or(0);

    let gcfg = GeneratorConfig {
        deterministic: true,
        ..Default::default()
    };
    let g = generate_scenes(2000, 42, &gcfg).unwrap();
    let meta = DatasetMeta {
        seed: 42,
        count: 2000,
        num_regions: 8,
        feature_dim: 24,
        deterministic: true,
        noise_sigma: gcfg.noise_sigma,
    };
    let ds = Dataset::assemble(meta, g.features, g.captions, g.lexicon).unwrap();
    let train_idx = ds.split_indices(Split::Train);
    let refs: Vec<Vec<String>> = train_idx
        .iter()
        .flat_map(|&i| ds.captions[i].references.clone())
        .collect();
    let vocab = Vocabulary::build(&refs, 1);
    let mcfg = ModelConfig::desk(vocab.len(), CavpVariant::Cavp4c);

    let mut model = CavpModel::init(&mcfg, seed);
    let mut cfg = TrainConfig::desk_xe(CavpVariant::Cavp4c, seed);
    cfg.lr = LrSchedule {
        base: xe_lr,
        decay: 0.8,
        every_epochs: xe_every,
    };
    cfg.batch_size = xe_batch;
    let dir = tempfile::tempdir().unwrap();
    let logs = train(&mut model, &vocab, &ds, &cfg, dir.path(), 2, None).unwrap();
    let dec10 = logs
        .iter()
        .take(10)
        .map(|l| l.loss.unwrap())
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] < w[0]);
    let mut exact = 0usize;
    for &i in &train_idx {
        let tr = greedy_decode(&model, &ds.features[i].features).unwrap();
        if tr.words(&vocab) == ds.captions[i].references[0] {
            exact += 1;
        }
    }
    let base = heldout(&model, &ds, &vocab);
    println!(
        "seed={seed} XE(lr={xe_lr},every={xe_every},b={xe_batch}): exact={:.3} dec10={dec10} heldout={base:.4}",
        exact as f64 / train_idx.len() as f64
    );

    let mut scfg = TrainConfig::desk_scst(CavpVariant::Cavp4c, RewardKind::CiderD, seed);
    scfg.epochs = 20;
    scfg.lr = LrSchedule {
        base: scst_lr,
        decay: 1.0,
        every_epochs: 10,
    };
    scfg.batch_size = scst_batch;
    let sdir = tempfile::tempdir().unwrap();
    let slogs = train(&mut model, &vocab, &ds, &scfg, sdir.path(), 2, None).unwrap();
    let after = heldout(&model, &ds, &vocab);
    let l = slogs.last().unwrap();
    println!(
        "  SCST(lr={scst_lr},b={scst_batch}): heldout={after:.4} delta={:+.4} train_greedy_r={:.3}",
        after - base,
        l.mean_greedy_reward.unwrap()
    );
}
