use cavp_core::data::{generate_scenes, Dataset, DatasetMeta, GeneratorConfig, Split, Vocabulary};
use cavp_core::model::{CavpModel, CavpVariant, ModelConfig};
use cavp_core::train::{train, TrainConfig};

fn main() {
    let count = 2000;
    let gcfg = GeneratorConfig { deterministic: true, ..Default::default() };
    let t0 = std::time::Instant::now();
    let g = generate_scenes(count, 42, &gcfg).unwrap();
    let meta = DatasetMeta { seed: 42, count, num_regions: 8, feature_dim: 24, deterministic: true, noise_sigma: 0.05 };
    let ds = Dataset::assemble(meta, g.features, g.captions, g.lexicon).unwrap();
    println!("datagen: {:?}", t0.elapsed());
    let train_idx = ds.split_indices(Split::Train);
    println!("train split: {}", train_idx.len());
    let refs: Vec<Vec<String>> = train_idx.iter().flat_map(|&i| ds.captions[i].references.clone()).collect();
    let vocab = Vocabulary::build(&refs, 1);
    println!("vocab: {}", vocab.len());
    let mcfg = ModelConfig::desk(vocab.len(), CavpVariant::Cavp4c);
    let mut model = CavpModel::init(&mcfg, 0);
    let mut cfg = TrainConfig::desk_xe(CavpVariant::Cavp4c, 0);
    cfg.epochs = 1;
    let dir = tempfile::tempdir().unwrap();
    let threads: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let t1 = std::time::Instant::now();
    let logs = train(&mut model, &vocab, &ds, &cfg, dir.path(), threads, None).unwrap();
    println!("1 epoch ({} threads): {:?}  loss={:.4}", threads, t1.elapsed(), logs[0].loss.unwrap());
}
