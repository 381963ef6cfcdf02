use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig, Split, Vocabulary};
use cavp_core::decode::greedy_decode;
use cavp_core::metrics::{score_corpus, MetricSelection};
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let count: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let gcfg = GeneratorConfig { deterministic: true, ..Default::default() };
    let g = generate_scenes(count, 42, &gcfg).unwrap();
    let meta = DatasetMeta { seed: 42, count, num_regions: 8, feature_dim: 24, deterministic: true, noise_sigma: 0.05 };
    let ds = Dataset::assemble(meta, g.features, g.captions, g.lexicon).unwrap();
    let train_idx = ds.split_indices(Split::Train);
    let refs: Vec<Vec<String>> = train_idx.iter().flat_map(|&i| ds.captions[i].references.clone()).collect();
    let vocab = Vocabulary::build(&refs, 1);
    let mcfg = ModelConfig::desk(vocab.len(), CavpVariant::Cavp4c);
    let mut model = CavpModel::init(&mcfg, seed);
    let mut cfg = TrainConfig::desk_xe(CavpVariant::Cavp4c, seed);
    cfg.epochs = epochs;
    let dir = tempfile::tempdir().unwrap();
    let t = std::time::Instant::now();
    let logs = train(&mut model, &vocab, &ds, &cfg, dir.path(), 2, None).unwrap();
    println!("{} epochs in {:?}", epochs, t.elapsed());
    for l in logs.iter() {
        if l.epoch <= 10 || l.epoch % 5 == 0 { println!("  epoch {:2} loss {:.4}", l.epoch, l.loss.unwrap()); }
    }

    // greedy exact-match on train
    let mut exact = 0usize;
    for &i in &train_idx {
        let t = greedy_decode(&model, &ds.features[i].features).unwrap();
        if t.words(&vocab) == ds.captions[i].references[0] { exact += 1; }
    }
    println!("train exact-match: {}/{} = {:.3}", exact, train_idx.len(), exact as f64 / train_idx.len() as f64);

    // held-out CIDEr-D (test split)
    let test_idx = ds.split_indices(Split::Test);
    let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = test_idx.iter().map(|&i| {
        let t = greedy_decode(&model, &ds.features[i].features).unwrap();
        (t.words(&vocab), ds.captions[i].references.clone())
    }).collect();
    let report = score_corpus(&pairs, MetricSelection::default()).unwrap();
    println!("held-out (greedy): bleu4 {:.4} rougeL {:.4} meteor {:.4} ciderD {:.4}",
        report.bleu4.unwrap(), report.rouge_l.unwrap(), report.meteor_lite.unwrap(), report.cider_d.unwrap());
}
