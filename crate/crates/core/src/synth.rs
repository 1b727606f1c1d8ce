//! Seeded synthetic datasets: random concept layouts with concept-driven
//! neurons, and planted instances with a known best explanation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::{ActivationStore, Bundle, Category, ConceptCatalog, LayerKind, SampleMaskStore};
use crate::maskops::{BitMask, ConceptId};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub grid_height: usize,
    pub grid_width: usize,
    /// Inclusive range for the concept count.
    pub concepts: (usize, usize),
    /// Inclusive range for the sample count.
    pub samples: (usize, usize),
    pub n_neurons: usize,
    pub layer_kind: LayerKind,
    /// Standard deviation of the additive activation noise.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            grid_height: 16,
            grid_width: 16,
            concepts: (15, 25),
            samples: (30, 60),
            n_neurons: 4,
            layer_kind: LayerKind::Relu,
            noise: 0.1,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.grid_height < 4 || self.grid_width < 4 {
            return Err(Error::Config("synthetic grid must be at least 4x4".into()));
        }
        if self.concepts.0 < 2 || self.concepts.0 > self.concepts.1 {
            return Err(Error::Config("concept range must be lo <= hi with lo >= 2".into()));
        }
        if self.samples.0 == 0 || self.samples.0 > self.samples.1 {
            return Err(Error::Config("sample range must be lo <= hi with lo >= 1".into()));
        }
        if self.n_neurons == 0 {
            return Err(Error::Config("need at least one neuron".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config("noise must be a finite non-negative number".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Rect { max: usize },
    Blob,
    Scatter,
    Full,
}

struct ConceptModel {
    category: Category,
    shape: Shape,
    presence: f64,
}

fn pick_concept(rng: &mut ChaCha8Rng) -> ConceptModel {
    let roll: f64 = rng.gen();
    let (category, shape, presence) = if roll < 0.08 {
        (Category::Scene, Shape::Full, rng.gen_range(0.1..0.3))
    } else if roll < 0.22 {
        (Category::Color, Shape::Scatter, rng.gen_range(0.3..0.7))
    } else if roll < 0.50 {
        (Category::Object, Shape::Rect { max: 8 }, rng.gen_range(0.2..0.6))
    } else if roll < 0.68 {
        (Category::Part, Shape::Rect { max: 4 }, rng.gen_range(0.2..0.5))
    } else if roll < 0.84 {
        (Category::Material, Shape::Blob, rng.gen_range(0.2..0.5))
    } else {
        (Category::Texture, Shape::Blob, rng.gen_range(0.1..0.4))
    };
    ConceptModel {
        category,
        shape,
        presence,
    }
}

fn random_rect(rng: &mut ChaCha8Rng, h: usize, w: usize, max: usize) -> (usize, usize, usize, usize) {
    let rh = rng.gen_range(2..=max.min(h));
    let rw = rng.gen_range(2..=max.min(w));
    let r0 = rng.gen_range(0..=h - rh);
    let c0 = rng.gen_range(0..=w - rw);
    (r0, c0, r0 + rh - 1, c0 + rw - 1)
}

fn fill_rect(m: &mut BitMask, (r0, c0, r1, c1): (usize, usize, usize, usize)) {
    for r in r0..=r1 {
        for c in c0..=c1 {
            m.set(r, c, true);
        }
    }
}

fn draw_mask(rng: &mut ChaCha8Rng, shape: Shape, h: usize, w: usize) -> BitMask {
    let mut m = BitMask::empty(h, w);
    match shape {
        Shape::Full => m = BitMask::full(h, w),
        Shape::Rect { max } => fill_rect(&mut m, random_rect(rng, h, w, max)),
        Shape::Blob => {
            let first = random_rect(rng, h, w, 6);
            fill_rect(&mut m, first);
            for _ in 0..rng.gen_range(1..=2) {
                // Attach another rectangle near the first one.
                let (r0, c0, _, _) = first;
                let rh = rng.gen_range(2..=4);
                let rw = rng.gen_range(2..=4);
                let r = (r0 + rng.gen_range(0..4)).min(h - rh);
                let c = (c0 + rng.gen_range(0..4)).min(w - rw);
                fill_rect(&mut m, (r, c, r + rh - 1, c + rw - 1));
            }
        }
        Shape::Scatter => {
            let region = random_rect(rng, h, w, h.max(w));
            let density = rng.gen_range(0.15..0.4);
            for r in region.0..=region.2 {
                for c in region.1..=region.3 {
                    if rng.gen_bool(density) {
                        m.set(r, c, true);
                    }
                }
            }
        }
    }
    m
}

fn catalog_for(models: &[ConceptModel]) -> Result<ConceptCatalog> {
    ConceptCatalog::from_names(
        models
            .iter()
            .enumerate()
            .map(|(i, m)| (format!("{}_{}", m.category.as_str(), i + 1), m.category)),
    )
}

/// Draws every sample's concept masks.
fn draw_masks(rng: &mut ChaCha8Rng, models: &[ConceptModel], n_samples: usize, h: usize, w: usize) -> Result<SampleMaskStore> {
    let mut store = SampleMaskStore::new(h, w, models.len());
    for _ in 0..n_samples {
        let sample = models
            .iter()
            .map(|m| {
                if rng.gen_bool(m.presence) {
                    draw_mask(rng, m.shape, h, w)
                } else {
                    BitMask::empty(h, w)
                }
            })
            .collect();
        store.push_sample(sample)?;
    }
    Ok(store)
}

/// Random dataset whose neurons respond to a weighted mix of one to three
/// concepts plus Gaussian noise (rectified for relu layers).
pub fn random_bundle(spec: &SynthSpec, seed: u64) -> Result<Bundle> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w) = (spec.grid_height, spec.grid_width);
    let n_concepts = rng.gen_range(spec.concepts.0..=spec.concepts.1);
    let n_samples = rng.gen_range(spec.samples.0..=spec.samples.1);
    let models: Vec<ConceptModel> = (0..n_concepts).map(|_| pick_concept(&mut rng)).collect();
    let masks = draw_masks(&mut rng, &models, n_samples, h, w)?;

    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(e.to_string()))?;
    let cells = h * w;
    let mut values = Vec::with_capacity(spec.n_neurons * n_samples * cells);
    for _ in 0..spec.n_neurons {
        let n_drivers = rng.gen_range(1..=3);
        let drivers: Vec<(ConceptId, f32)> = (0..n_drivers)
            .map(|_| {
                let c = ConceptId::from_index(rng.gen_range(0..n_concepts));
                let sign = if spec.layer_kind == LayerKind::Signed && rng.gen_bool(0.3) { -1.0 } else { 1.0 };
                (c, sign * rng.gen_range(0.5..2.0))
            })
            .collect();
        for x in 0..n_samples {
            let gain: f32 = rng.gen_range(0.8..1.2);
            let mut grid = vec![0f32; cells];
            for &(c, wt) in &drivers {
                for i in masks.mask(x, c).ones() {
                    grid[i] += gain * wt;
                }
            }
            for v in &mut grid {
                *v += noise.sample(&mut rng) as f32;
                if spec.layer_kind == LayerKind::Relu {
                    *v = v.max(0.0);
                }
            }
            values.extend(grid);
        }
    }
    let acts = ActivationStore::new(spec.n_neurons, n_samples, h, w, spec.layer_kind, values)?;
    Bundle::new(catalog_for(&models)?, masks, acts)
}

/// A dataset with a known answer for neuron 0.
#[derive(Clone, Debug)]
pub struct Planted {
    pub bundle: Bundle,
    pub neuron: usize,
    /// Aligned with the low activation band `[1, 2]`.
    pub low: ConceptId,
    /// Aligned with the high activation band `[9, 10]`.
    pub high: ConceptId,
}

/// Random concepts plus two planted ones, disjoint in every sample. Neuron 0
/// fires in `[1, 2]` exactly on the low concept, in `[9, 10]` exactly on the
/// high one, and is zero elsewhere. Other neurons are random.
pub fn planted_bundle(spec: &SynthSpec, seed: u64) -> Result<Planted> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_9a17);
    let (h, w) = (spec.grid_height, spec.grid_width);
    let n_concepts = rng.gen_range(spec.concepts.0..=spec.concepts.1);
    let n_samples = rng.gen_range(spec.samples.0..=spec.samples.1);
    let mut models: Vec<ConceptModel> = (0..n_concepts).map(|_| pick_concept(&mut rng)).collect();
    let low = rng.gen_range(0..n_concepts);
    let high = (low + rng.gen_range(1..n_concepts)) % n_concepts;
    for &i in &[low, high] {
        models[i] = ConceptModel {
            category: Category::Object,
            shape: Shape::Rect { max: 6 },
            presence: 0.7,
        };
    }
    let mut masks = SampleMaskStore::new(h, w, n_concepts);
    let cells = h * w;
    let mut neuron0 = Vec::with_capacity(n_samples * cells);
    let half = h / 2;
    for x in 0..n_samples {
        let mut sample: Vec<BitMask> = models
            .iter()
            .map(|m| {
                if rng.gen_bool(m.presence) {
                    draw_mask(&mut rng, m.shape, h, w)
                } else {
                    BitMask::empty(h, w)
                }
            })
            .collect();
        // Low concept in the bottom half, high concept in the top half, so
        // they never touch. The first sample has both.
        for (&i, rows) in [low, high].iter().zip([(half, h), (0, half)]) {
            let mut m = BitMask::empty(h, w);
            if x == 0 || rng.gen_bool(0.7) {
                let (r0, c0, r1, c1) = random_rect(&mut rng, rows.1 - rows.0, w, 6);
                fill_rect(&mut m, (r0 + rows.0, c0, r1 + rows.0, c1));
            }
            sample[i] = m;
        }
        let mut grid = vec![0f32; cells];
        for i in sample[low].ones() {
            grid[i] = rng.gen_range(1.0..=2.0);
        }
        for i in sample[high].ones() {
            grid[i] = rng.gen_range(9.0..=10.0);
        }
        neuron0.extend(grid);
        masks.push_sample(sample)?;
    }
    let mut values = neuron0;
    let noise = Normal::new(0.0, spec.noise.max(1e-3)).map_err(|e| Error::Config(e.to_string()))?;
    for _ in 1..spec.n_neurons {
        for _ in 0..n_samples * cells {
            let v = noise.sample(&mut rng) as f32;
            values.push(if spec.layer_kind == LayerKind::Relu { v.max(0.0) } else { v });
        }
    }
    let acts = ActivationStore::new(spec.n_neurons, n_samples, h, w, spec.layer_kind, values)?;
    Ok(Planted {
        bundle: Bundle::new(catalog_for(&models)?, masks, acts)?,
        neuron: 0,
        low: ConceptId::from_index(low),
        high: ConceptId::from_index(high),
    })
}
