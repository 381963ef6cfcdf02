//! Synthetic compositional scenes standing in for a detector: each scene
//! is a pair of attributed objects on a grid, region features encode
//! identity, attributes and position, and captions are templated over
//! the scene's actual spatial relation.

use super::captions::CaptionRecord;
use super::features::FeatureRecord;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::RegionFeatureSet;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const SHAPES: [&str; 5] = ["circle", "square", "triangle", "star", "ring"];
pub const COLORS: [&str; 6] = ["red", "blue", "green", "yellow", "purple", "orange"];
pub const SIZES: [&str; 2] = ["small", "big"];
pub const RELATIONS: [&str; 3] = ["leftof", "above", "holding"];
pub const QUADRANTS: [&str; 4] = ["northwest", "northeast", "southwest", "southeast"];
pub const FUNCTION_WORDS: [&str; 3] = ["a", "the", "in"];

pub const GRID: usize = 4;
/// shape one-hot | color one-hot | size one-hot | x, y | object marker
pub const USED_DIMS: usize = SHAPES.len() + COLORS.len() + SIZES.len() + 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexCategory {
    Object,
    Attribute,
    Relation,
    Function,
}

/// Token -> category table shipped with the dataset; the expert output
/// policy is derived from it.
pub fn lexicon() -> Vec<(String, LexCategory)> {
    let mut entries = Vec::new();
    for s in SHAPES {
        entries.push((s.to_string(), LexCategory::Object));
    }
    for c in COLORS {
        entries.push((c.to_string(), LexCategory::Attribute));
    }
    for s in SIZES {
        entries.push((s.to_string(), LexCategory::Attribute));
    }
    for r in RELATIONS {
        entries.push((r.to_string(), LexCategory::Relation));
    }
    for q in QUADRANTS {
        entries.push((q.to_string(), LexCategory::Attribute));
    }
    for f in FUNCTION_WORDS {
        entries.push((f.to_string(), LexCategory::Function));
    }
    entries
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LexiconLine {
    token: String,
    category: LexCategory,
}

pub fn write_lexicon(path: &std::path::Path, entries: &[(String, LexCategory)]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for (token, category) in entries {
        serde_json::to_writer(
            &mut out,
            &LexiconLine {
                token: token.clone(),
                category: *category,
            },
        )?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_lexicon(path: &std::path::Path) -> Result<Vec<(String, LexCategory)>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)
        .map_err(|e| Error::data(format!("cannot open {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LexiconLine = serde_json::from_str(&line).map_err(|e| {
            Error::data(format!(
                "{} line {}: malformed lexicon entry: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        entries.push((parsed.token, parsed.category));
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectSpec {
    pub shape: usize,
    pub color: usize,
    pub size: usize,
    pub x: usize,
    pub y: usize,
}

impl ObjectSpec {
    fn descriptor(&self) -> (usize, usize, usize) {
        (self.shape, self.color, self.size)
    }
}

/// A generated scene: either a lone attributed object described by its
/// grid quadrant, or two objects in reading order plus their derived
/// relation. The two caption structures have different lengths, which
/// makes free-running structure decisions carry metric weight.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub subject: ObjectSpec,
    pub object: Option<ObjectSpec>,
    pub relation: Option<&'static str>,
}

/// Relation of the reading-order pair: adjacency wins, then horizontal
/// order, then vertical.
fn derive_relation(a: &ObjectSpec, b: &ObjectSpec) -> &'static str {
    let manhattan =
        (a.x as i64 - b.x as i64).unsigned_abs() + (a.y as i64 - b.y as i64).unsigned_abs();
    if manhattan == 1 {
        "holding"
    } else if a.x < b.x {
        "leftof"
    } else {
        "above"
    }
}

fn quadrant_of(o: &ObjectSpec) -> &'static str {
    match (o.x < GRID / 2, o.y < GRID / 2) {
        (true, true) => "northwest",
        (false, true) => "northeast",
        (true, false) => "southwest",
        (false, false) => "southeast",
    }
}

impl SceneSpec {
    /// True spatial relations of the pair, for auditing captions.
    pub fn holds(&self, relation: &str) -> bool {
        match &self.object {
            Some(object) => derive_relation(&self.subject, object) == relation,
            None => false,
        }
    }

    /// Grid quadrant of the lone object, for auditing captions.
    pub fn quadrant(&self) -> &'static str {
        quadrant_of(&self.subject)
    }

    fn canonical_caption(&self) -> String {
        let d = |o: &ObjectSpec| format!("a {} {} {}", COLORS[o.color], SIZES[o.size], SHAPES[o.shape]);
        match (&self.object, self.relation) {
            (Some(object), Some(relation)) => {
                format!("{} {} {}", d(&self.subject), relation, d(object))
            }
            _ => format!("{} in the {}", d(&self.subject), self.quadrant()),
        }
    }

    fn reference_variants(&self) -> Vec<String> {
        let s = &self.subject;
        match (&self.object, self.relation) {
            (Some(o), Some(relation)) => vec![
                self.canonical_caption(),
                format!(
                    "a {} {} {} a {} {}",
                    COLORS[s.color], SHAPES[s.shape], relation, COLORS[o.color], SHAPES[o.shape]
                ),
                format!(
                    "a {} {} {} a {} {}",
                    SIZES[s.size], SHAPES[s.shape], relation, SIZES[o.size], SHAPES[o.shape]
                ),
                format!("the {} {} {}", COLORS[s.color], SIZES[s.size], SHAPES[s.shape]),
                format!("the {} {} {}", COLORS[o.color], SIZES[o.size], SHAPES[o.shape]),
            ],
            _ => vec![
                self.canonical_caption(),
                format!("a {} {} in the {}", COLORS[s.color], SHAPES[s.shape], self.quadrant()),
                format!("a {} {} {}", COLORS[s.color], SIZES[s.size], SHAPES[s.shape]),
                format!("the {} {} in the {}", SIZES[s.size], SHAPES[s.shape], self.quadrant()),
                format!("the {} {}", COLORS[s.color], SHAPES[s.shape]),
            ],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// One canonical caption per scene and a scene<->caption bijection.
    pub deterministic: bool,
    pub num_regions: usize,
    pub feature_dim: usize,
    pub noise_sigma: f32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            deterministic: false,
            num_regions: 8,
            feature_dim: 24,
            noise_sigma: 0.05,
        }
    }
}

/// In-memory result of one generation run.
pub struct SyntheticDataset {
    pub features: Vec<FeatureRecord>,
    pub captions: Vec<CaptionRecord>,
    pub scenes: Vec<SceneSpec>,
    pub lexicon: Vec<(String, LexCategory)>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; both uniforms drawn unconditionally to keep the
    // stream position deterministic.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn object_vector(o: &ObjectSpec, dim: usize, sigma: f32, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut v = vec![0.0f32; dim];
    v[o.shape] = 1.0;
    v[SHAPES.len() + o.color] = 1.0;
    v[SHAPES.len() + COLORS.len() + o.size] = 1.0;
    let pos = SHAPES.len() + COLORS.len() + SIZES.len();
    v[pos] = o.x as f32 / (GRID - 1) as f32;
    v[pos + 1] = o.y as f32 / (GRID - 1) as f32;
    v[pos + 2] = 1.0; // object marker
    for x in v.iter_mut() {
        *x += sigma * gaussian(rng) as f32;
    }
    v
}

fn background_vector(dim: usize, sigma: f32, rng: &mut ChaCha8Rng) -> Vec<f32> {
    (0..dim).map(|_| sigma * gaussian(rng) as f32).collect()
}

/// Fraction of scenes holding a single object (shorter captions).
const SINGLE_OBJECT_RATE: f64 = 0.2;

fn sample_scene(rng: &mut ChaCha8Rng) -> SceneSpec {
    loop {
        let single = rng.gen::<f64>() < SINGLE_OBJECT_RATE;
        let mut cells: Vec<(usize, usize)> = Vec::with_capacity(2);
        while cells.len() < 2 {
            let cell = (rng.gen_range(0..GRID), rng.gen_range(0..GRID));
            if !cells.contains(&cell) {
                cells.push(cell);
            }
        }
        cells.sort_by_key(|&(x, y)| (y, x)); // reading order
        let mut obj = |i: usize| ObjectSpec {
            shape: rng.gen_range(0..SHAPES.len()),
            color: rng.gen_range(0..COLORS.len()),
            size: rng.gen_range(0..SIZES.len()),
            x: cells[i].0,
            y: cells[i].1,
        };
        let subject = obj(0);
        let object = obj(1);
        if single {
            return SceneSpec {
                subject,
                object: None,
                relation: None,
            };
        }
        if subject.descriptor() == object.descriptor() {
            continue; // ambiguous scene, resample
        }
        let relation = derive_relation(&subject, &object);
        return SceneSpec {
            subject,
            object: Some(object),
            relation: Some(relation),
        };
    }
}

/// Generates `count` scenes. Deterministic for a fixed seed; scenes are
/// deduplicated by their canonical caption so the deterministic sub-mode
/// is a bijection between feature sets and captions.
pub fn generate_scenes(count: usize, seed: u64, cfg: &GeneratorConfig) -> Result<SyntheticDataset> {
    if cfg.feature_dim < USED_DIMS {
        return Err(Error::contract(format!(
            "feature_dim must be at least {USED_DIMS}, got {}",
            cfg.feature_dim
        )));
    }
    if cfg.num_regions < 2 {
        return Err(Error::contract("num_regions must be at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = std::collections::HashSet::new();
    let mut features = Vec::with_capacity(count);
    let mut captions = Vec::with_capacity(count);
    let mut scenes = Vec::with_capacity(count);

    let mut attempts = 0usize;
    while scenes.len() < count {
        attempts += 1;
        if attempts > count * 200 + 1000 {
            return Err(Error::data(format!(
                "scene space exhausted after {attempts} attempts ({} of {count} scenes)",
                scenes.len()
            )));
        }
        let scene = sample_scene(&mut rng);
        let canonical = scene.canonical_caption();
        if !seen.insert(canonical.clone()) {
            continue;
        }
        let image_id = format!("scene_{:06}", scenes.len());

        // region features: the objects plus background, order shuffled
        let mut rows: Vec<Vec<f32>> =
            vec![object_vector(&scene.subject, cfg.feature_dim, cfg.noise_sigma, &mut rng)];
        if let Some(object) = &scene.object {
            rows.push(object_vector(object, cfg.feature_dim, cfg.noise_sigma, &mut rng));
        }
        while rows.len() < cfg.num_regions {
            rows.push(background_vector(cfg.feature_dim, cfg.noise_sigma, &mut rng));
        }
        rows.shuffle(&mut rng);
        let flat: Vec<f32> = rows.into_iter().flatten().collect();
        let matrix = Tensor::matrix(cfg.num_regions, cfg.feature_dim, flat)?;
        features.push(FeatureRecord {
            image_id: image_id.clone(),
            features: RegionFeatureSet::new(matrix)?,
        });

        let refs: Vec<String> = if cfg.deterministic {
            vec![canonical]
        } else {
            let variants = scene.reference_variants();
            let extra = rng.gen_range(2..=4usize); // 3..=5 total with canonical
            let mut order: Vec<usize> = (1..variants.len()).collect();
            order.shuffle(&mut rng);
            let mut refs = vec![variants[0].clone()];
            refs.extend(order.into_iter().take(extra).map(|i| variants[i].clone()));
            refs
        };
        captions.push(CaptionRecord::new(image_id, &refs)?);
        scenes.push(scene);
    }

    Ok(SyntheticDataset {
        features,
        captions,
        scenes,
        lexicon: lexicon(),
    })
}
