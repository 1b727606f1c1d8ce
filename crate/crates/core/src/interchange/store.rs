use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskops::{bounding_box, largest_inscribed_rect, BitMask, ConceptId, Rect};

/// Cached per-(sample, concept) geometry: cardinality, largest inscribed
/// rectangle and bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskMeta {
    pub card: u32,
    pub min_ext: Rect,
    pub max_ext: Rect,
}

impl MaskMeta {
    pub const EMPTY: MaskMeta = MaskMeta {
        card: 0,
        min_ext: Rect::EMPTY,
        max_ext: Rect::EMPTY,
    };

    pub fn compute(m: &BitMask) -> Self {
        MaskMeta {
            card: m.count(),
            min_ext: largest_inscribed_rect(m),
            max_ext: bounding_box(m),
        }
    }

    /// Checks that don't need the inscribed-rectangle search: card matches,
    /// min_ext lies inside the mask, max_ext covers it, areas are ordered.
    pub(crate) fn check_against(&self, m: &BitMask) -> std::result::Result<(), String> {
        let card = m.count();
        if self.card != card {
            return Err(format!("stored card {} but mask has {card} cells", self.card));
        }
        let (h, w) = (m.height() as u32, m.width() as u32);
        for rect in [self.min_ext, self.max_ext] {
            if !rect.is_empty() && (rect.r1 >= h || rect.c1 >= w) {
                return Err(format!("rectangle {rect:?} outside {h}x{w} grid"));
            }
        }
        if card == 0 {
            if !self.min_ext.is_empty() || !self.max_ext.is_empty() {
                return Err("empty mask with non-empty extents".into());
            }
            return Ok(());
        }
        if self.min_ext.is_empty() || self.max_ext.is_empty() {
            return Err("non-empty mask with empty extent".into());
        }
        if !(self.min_ext.area() <= card && card <= self.max_ext.area()) {
            return Err(format!(
                "extent areas out of order: {} <= {card} <= {}",
                self.min_ext.area(),
                self.max_ext.area()
            ));
        }
        let r = self.min_ext;
        for row in r.r0..=r.r1 {
            for col in r.c0..=r.c1 {
                if !m.get(row as usize, col as usize) {
                    return Err(format!("min_ext {r:?} covers an unset cell"));
                }
            }
        }
        for i in m.ones() {
            if !self.max_ext.contains(i as u32 / w, i as u32 % w) {
                return Err(format!("max_ext {:?} misses a set cell", self.max_ext));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct MaskEntry {
    slot: Option<u32>,
    meta: MaskMeta,
}

/// Per-(sample, concept) segmentation masks over one grid.
///
/// Only non-empty masks are stored; absent ones resolve to a shared empty mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleMaskStore {
    grid_height: usize,
    grid_width: usize,
    n_concepts: usize,
    n_samples: usize,
    entries: Vec<MaskEntry>,
    pool: Vec<BitMask>,
    empty: BitMask,
    concept_totals: Vec<u64>,
}

impl SampleMaskStore {
    pub fn new(grid_height: usize, grid_width: usize, n_concepts: usize) -> Self {
        SampleMaskStore {
            grid_height,
            grid_width,
            n_concepts,
            n_samples: 0,
            entries: Vec::new(),
            pool: Vec::new(),
            empty: BitMask::empty(grid_height, grid_width),
            concept_totals: vec![0; n_concepts],
        }
    }

    /// Appends one sample, computing meta for each concept mask.
    pub fn push_sample(&mut self, masks: Vec<BitMask>) -> Result<()> {
        let metas = masks.iter().map(MaskMeta::compute).collect();
        self.push_sample_with_meta(masks, metas)
    }

    pub(crate) fn push_sample_with_meta(&mut self, masks: Vec<BitMask>, metas: Vec<MaskMeta>) -> Result<()> {
        if masks.len() != self.n_concepts || metas.len() != self.n_concepts {
            return Err(Error::Consistency(format!(
                "sample has {} masks, store expects {} concepts",
                masks.len(),
                self.n_concepts
            )));
        }
        for (c, (m, meta)) in masks.into_iter().zip(metas).enumerate() {
            if m.height() != self.grid_height || m.width() != self.grid_width {
                return Err(Error::Consistency(format!(
                    "mask is {}x{}, store grid is {}x{}",
                    m.height(),
                    m.width(),
                    self.grid_height,
                    self.grid_width
                )));
            }
            self.concept_totals[c] += meta.card as u64;
            let slot = if meta.card == 0 {
                None
            } else {
                self.pool.push(m);
                Some(self.pool.len() as u32 - 1)
            };
            self.entries.push(MaskEntry { slot, meta });
        }
        self.n_samples += 1;
        Ok(())
    }

    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    /// `n_s`: the number of cells in a sample's grid.
    pub fn grid_cells(&self) -> usize {
        self.grid_height * self.grid_width
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_concepts(&self) -> usize {
        self.n_concepts
    }

    pub fn check_concept(&self, c: ConceptId) -> Result<()> {
        if c.0 == 0 || c.index() >= self.n_concepts {
            return Err(Error::InvalidInput(format!("unknown concept id {}", c.0)));
        }
        Ok(())
    }

    fn entry(&self, sample: usize, c: ConceptId) -> &MaskEntry {
        &self.entries[sample * self.n_concepts + c.index()]
    }

    pub fn mask(&self, sample: usize, c: ConceptId) -> &BitMask {
        match self.entry(sample, c).slot {
            Some(slot) => &self.pool[slot as usize],
            None => &self.empty,
        }
    }

    /// The stored mask, or `None` when the concept is absent from the sample.
    pub fn mask_opt(&self, sample: usize, c: ConceptId) -> Option<&BitMask> {
        self.entry(sample, c).slot.map(|s| &self.pool[s as usize])
    }

    pub fn meta(&self, sample: usize, c: ConceptId) -> &MaskMeta {
        &self.entry(sample, c).meta
    }

    /// Total annotated cells of the concept over all samples.
    pub fn concept_total(&self, c: ConceptId) -> u64 {
        self.concept_totals[c.index()]
    }

    pub fn concept_ids(&self) -> impl Iterator<Item = ConceptId> {
        (0..self.n_concepts).map(ConceptId::from_index)
    }

    /// Recomputes every cached meta from the decoded masks.
    pub fn verify_meta(&self) -> Result<()> {
        for s in 0..self.n_samples {
            for c in self.concept_ids() {
                let fresh = MaskMeta::compute(self.mask(s, c));
                if fresh != *self.meta(s, c) {
                    return Err(Error::Corruption(format!(
                        "meta mismatch at sample {s}, concept {}: stored {:?}, computed {:?}",
                        c.0,
                        self.meta(s, c),
                        fresh
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Relu,
    Signed,
}

impl LayerKind {
    pub fn flag(self) -> u32 {
        match self {
            LayerKind::Relu => 0,
            LayerKind::Signed => 1,
        }
    }

    pub fn from_flag(flag: u32) -> Result<Self> {
        match flag {
            0 => Ok(LayerKind::Relu),
            1 => Ok(LayerKind::Signed),
            other => Err(Error::Format(format!("unknown layer kind flag {other}"))),
        }
    }
}

/// Dense activation grids, neuron-major: `values[neuron][sample][row][col]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationStore {
    n_neurons: usize,
    n_samples: usize,
    grid_height: usize,
    grid_width: usize,
    layer_kind: LayerKind,
    values: Vec<f32>,
}

impl ActivationStore {
    pub fn new(
        n_neurons: usize,
        n_samples: usize,
        grid_height: usize,
        grid_width: usize,
        layer_kind: LayerKind,
        values: Vec<f32>,
    ) -> Result<Self> {
        let expected = n_neurons * n_samples * grid_height * grid_width;
        if values.len() != expected {
            return Err(Error::Consistency(format!(
                "activation payload has {} values, header implies {expected}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite activation {v}")));
        }
        if layer_kind == LayerKind::Relu {
            if let Some(v) = values.iter().find(|&&v| v < 0.0) {
                return Err(Error::Consistency(format!(
                    "relu layer holds a negative activation {v}"
                )));
            }
        }
        Ok(ActivationStore {
            n_neurons,
            n_samples,
            grid_height,
            grid_width,
            layer_kind,
            values,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    pub fn grid_cells(&self) -> usize {
        self.grid_height * self.grid_width
    }

    pub fn layer_kind(&self) -> LayerKind {
        self.layer_kind
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn check_neuron(&self, neuron: usize) -> Result<()> {
        if neuron >= self.n_neurons {
            return Err(Error::InvalidInput(format!(
                "neuron {neuron} out of range ({} neurons)",
                self.n_neurons
            )));
        }
        Ok(())
    }

    /// All activations of one neuron over the dataset.
    pub fn neuron_values(&self, neuron: usize) -> &[f32] {
        let per = self.n_samples * self.grid_cells();
        &self.values[neuron * per..(neuron + 1) * per]
    }

    pub fn grid(&self, neuron: usize, sample: usize) -> &[f32] {
        let cells = self.grid_cells();
        let start = (neuron * self.n_samples + sample) * cells;
        &self.values[start..start + cells]
    }

    /// Same-shape check against a mask store.
    pub fn check_pairs_with(&self, masks: &SampleMaskStore) -> Result<()> {
        if self.grid_height != masks.grid_height() || self.grid_width != masks.grid_width() {
            return Err(Error::Consistency(format!(
                "activation grid {}x{} differs from mask grid {}x{}",
                self.grid_height,
                self.grid_width,
                masks.grid_height(),
                masks.grid_width()
            )));
        }
        if self.n_samples != masks.n_samples() {
            return Err(Error::Consistency(format!(
                "activations cover {} samples, masks cover {}",
                self.n_samples,
                masks.n_samples()
            )));
        }
        Ok(())
    }
}
