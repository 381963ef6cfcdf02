use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig, Split, Vocabulary};
use cavp_core::decode::greedy_decode;
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{train, LrSchedule, TrainConfig};

fn main() {
    let count = 2000;
    let gcfg = GeneratorConfig { deterministic: true, ..Default::default() };
    let g = generate_scenes(count, 42, &gcfg).unwrap();
    let meta = DatasetMeta { seed: 42, count, num_regions: 8, feature_dim: 24, deterministic: true, noise_sigma: 0.05 };
    let ds = Dataset::assemble(meta, g.features, g.captions, g.lexicon).unwrap();
    let train_idx = ds.split_indices(Split::Train);
    let refs: Vec<Vec<String>> = train_idx.iter().flat_map(|&i| ds.captions[i].references.clone()).collect();
    let vocab = Vocabulary::build(&refs, 1);
    let mcfg = ModelConfig::desk(vocab.len(), CavpVariant::Cavp4c);

    // (base, decay, every, batch)
    let candidates = [
        (5e-4, 0.8, 6, 16usize),
        (1e-3, 0.8, 4, 16),
        (5e-4, 0.9, 3, 8),
        (1e-3, 0.8, 5, 8),
    ];
    for (base, decay, every, batch) in candidates {
        let mut model = CavpModel::init(&mcfg, 0);
        let mut cfg = TrainConfig::desk_xe(CavpVariant::Cavp4c, 0);
        cfg.lr = LrSchedule { base, decay, every_epochs: every };
        cfg.batch_size = batch;
        cfg.epochs = 30;
        let dir = tempfile::tempdir().unwrap();
        let t = std::time::Instant::now();
        let logs = train(&mut model, &vocab, &ds, &cfg, dir.path(), 2, None).unwrap();
        let first10: Vec<f64> = logs.iter().take(10).map(|l| l.loss.unwrap()).collect();
        let strictly_dec = first10.windows(2).all(|w| w[1] < w[0]);
        let mut exact = 0usize;
        for &i in &train_idx {
            let tr = greedy_decode(&model, &ds.features[i].features).unwrap();
            if tr.words(&vocab) == ds.captions[i].references[0] { exact += 1; }
        }
        println!("base={base:.0e} decay={decay} every={every} batch={batch}: {:?} final_loss={:.4} exact={:.3} dec10={}",
            t.elapsed(), logs.last().unwrap().loss.unwrap(), exact as f64 / train_idx.len() as f64, strictly_dec);
    }
}
