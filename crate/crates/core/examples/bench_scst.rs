use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig, Split, Vocabulary};
use cavp_core::decode::{beam_decode, greedy_decode};
use cavp_core::metrics::{score_corpus, MetricSelection, RewardKind};
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{checkpoint_path, load_checkpoint, train, TrainConfig};

fn heldout(model: &CavpModel<f32>, ds: &Dataset, vocab: &Vocabulary, beam: usize) -> f64 {
    let idx = ds.split_indices(Split::Test);
    let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = idx
        .iter()
        .map(|&i| {
            let t = if beam <= 1 {
                greedy_decode(model, &ds.features[i].features).unwrap()
            } else {
                beam_decode(model, &ds.features[i].features, beam).unwrap()
            };
            (t.words(vocab), ds.captions[i].references.clone())
        })
        .collect();
    score_corpus(&pairs, MetricSelection::default())
        .unwrap()
        .cider_d
        .unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let sigma: f32 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.05);
    let xe_seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let gcfg = GeneratorConfig {
        deterministic: true,
        noise_sigma: sigma,
        ..Default::default()
    };
    let g = generate_scenes(2000, 42, &gcfg).unwrap();
    let meta = DatasetMeta {
        seed: 42,
        count: 2000,
        num_regions: 8,
        feature_dim: 24,
        deterministic: true,
        noise_sigma: sigma,
    };
    let ds = Dataset::assemble(meta, g.features, g.captions, g.lexicon).unwrap();
    let train_idx = ds.split_indices(Split::Train);
    let refs: Vec<Vec<String>> = train_idx
        .iter()
        .flat_map(|&i| ds.captions[i].references.clone())
        .collect();
    let vocab = Vocabulary::build(&refs, 1);
    let mcfg = ModelConfig::desk(vocab.len(), CavpVariant::Cavp4c);

    let mut model = CavpModel::init(&mcfg, xe_seed);
    let cfg = TrainConfig::desk_xe(CavpVariant::Cavp4c, xe_seed);
    let dir = tempfile::tempdir().unwrap();
    train(&mut model, &vocab, &ds, &cfg, dir.path(), 2, None).unwrap();
    let xe_ckpt = checkpoint_path(dir.path(), 30);
    let mut exact = 0usize;
    for &i in &train_idx {
        let tr = greedy_decode(&model, &ds.features[i].features).unwrap();
        if tr.words(&vocab) == ds.captions[i].references[0] {
            exact += 1;
        }
    }
    let base_cider = heldout(&model, &ds, &vocab, 5);
    println!(
        "sigma={sigma} seed={xe_seed} XE: exact={:.3} heldout beam5 cider={base_cider:.4}",
        exact as f64 / train_idx.len() as f64
    );

    for (lr, decay, batch) in [(1.5e-4, 1.0, 16usize), (1.3e-4, 1.0, 24), (2e-4, 1.0, 32)] {
        let loaded = load_checkpoint(&xe_ckpt).unwrap();
        let mut m = loaded.model;
        let mut scfg = TrainConfig::desk_scst(CavpVariant::Cavp4c, RewardKind::CiderD, xe_seed);
        scfg.epochs = 20;
        scfg.lr.base = lr;
        scfg.lr.decay = decay;
        scfg.batch_size = batch;
        let sdir = tempfile::tempdir().unwrap();
        let logs = train(&mut m, &vocab, &ds, &scfg, sdir.path(), 2, None).unwrap();
        let c5 = heldout(&m, &ds, &vocab, 5);
        let cg = heldout(&m, &ds, &vocab, 1);
        let l = logs.last().unwrap();
        println!(
            "  SCST lr={lr} decay={decay} batch={batch}: beam5 {c5:.4} ({:+.4}) greedy {cg:.4} | train greedy_r={:.3}",
            c5 - base_cider,
            l.mean_greedy_reward.unwrap()
        );
    }
}
