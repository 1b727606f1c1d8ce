//! Studies built on the search engine: default labels and specialization
//! tags, threshold sweeps with category histograms, cluster-count sweeps.

use std::collections::{BTreeMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::{ActivationStore, Category, ConceptCatalog, LayerKind, SampleMaskStore};
use crate::maskops::{ConceptId, Formula};
use crate::metrics::{quality_vector, QualityOptions};
use crate::search::{
    clustered_explain, equivalence_key, explain_interval, formulas_equivalent, EquivKey, ExplanationRecord, Probe,
    SearchParams,
};
use crate::thresholds::{sweep_ranges, SweepRange};

pub const DEFAULT_RANDOM_UNITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RandomActivations,
    UntrainedExport,
}

/// Formulas returned for activations carrying no information.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefaultLabelSet {
    /// Canonical forms, one per equivalence class, in first-seen order.
    pub formulas: Vec<Formula>,
    pub provenance: Provenance,
    pub seed: u64,
}

impl DefaultLabelSet {
    pub fn new(formulas: impl IntoIterator<Item = Formula>, provenance: Provenance, seed: u64) -> Self {
        let mut seen = HashSet::new();
        let formulas = formulas
            .into_iter()
            .filter(|f| seen.insert(equivalence_key(f)))
            .map(|f| f.canonical())
            .collect();
        DefaultLabelSet {
            formulas,
            provenance,
            seed,
        }
    }

    pub fn terms(&self) -> HashSet<ConceptId> {
        self.formulas.iter().flat_map(|f| f.terms()).collect()
    }

    fn keys(&self) -> HashSet<EquivKey> {
        self.formulas.iter().map(equivalence_key).collect()
    }
}

fn collect_formulas(masks: &SampleMaskStore, acts: &ActivationStore, n_cls: usize, seed: u64, params: &SearchParams) -> Result<Vec<Formula>> {
    let per_unit = (0..acts.n_neurons())
        .into_par_iter()
        .map(|n| clustered_explain(masks, acts, n, n_cls, seed, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_unit
        .into_iter()
        .flat_map(|ce| ce.records)
        .filter_map(|r| r.formula)
        .collect())
}

/// Explains `n_random_units` neurons whose grids are i.i.d. standard normal
/// (rectified for relu layers) and collects the formulas.
pub fn compute_default_labels(
    masks: &SampleMaskStore,
    layer_kind: LayerKind,
    n_cls: usize,
    seed: u64,
    n_random_units: usize,
    params: &SearchParams,
) -> Result<DefaultLabelSet> {
    if n_random_units == 0 {
        return Err(Error::Config("need at least one random unit".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n_random_units * masks.n_samples() * masks.grid_cells();
    let values: Vec<f32> = (0..len)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            match layer_kind {
                LayerKind::Relu => v.max(0.0) as f32,
                LayerKind::Signed => v as f32,
            }
        })
        .collect();
    let acts = ActivationStore::new(
        n_random_units,
        masks.n_samples(),
        masks.grid_height(),
        masks.grid_width(),
        layer_kind,
        values,
    )?;
    let formulas = collect_formulas(masks, &acts, n_cls, seed, params)?;
    Ok(DefaultLabelSet::new(formulas, Provenance::RandomActivations, seed))
}

/// Default labels from every neuron of an untrained network's export.
pub fn default_labels_from_export(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    n_cls: usize,
    seed: u64,
    params: &SearchParams,
) -> Result<DefaultLabelSet> {
    let formulas = collect_formulas(masks, acts, n_cls, seed, params)?;
    Ok(DefaultLabelSet::new(formulas, Provenance::UntrainedExport, seed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecializationTag {
    Unspecialized,
    WeaklySpecialized,
    Specialized,
}

impl SpecializationTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecializationTag::Unspecialized => "unspecialized",
            SpecializationTag::WeaklySpecialized => "weakly_specialized",
            SpecializationTag::Specialized => "specialized",
        }
    }
}

/// Tags a formula against the default labels. The formula is canonicalized
/// first.
///
/// A formula (or prefix) "matches" when it is equivalent to a default formula
/// or all of its terms occur in default formulas. Unspecialized: the whole
/// formula matches. Weakly specialized: some proper left prefix matches.
pub fn classify_specialization(f: &Formula, defaults: &DefaultLabelSet) -> SpecializationTag {
    let keys = defaults.keys();
    let terms = defaults.terms();
    let matches = |g: &Formula| keys.contains(&equivalence_key(g)) || g.terms().all(|t| terms.contains(&t));
    let f = f.canonical();
    if matches(&f) {
        SpecializationTag::Unspecialized
    } else if (1..f.arity()).any(|a| matches(&f.prefix(a))) {
        SpecializationTag::WeaklySpecialized
    } else {
        SpecializationTag::Specialized
    }
}

/// Share of formula terms per category; each formula has total weight 1,
/// split evenly over its terms. `None` if there are no formulas.
pub fn category_histogram<'a>(
    catalog: &ConceptCatalog,
    formulas: impl IntoIterator<Item = &'a Formula>,
) -> Option<BTreeMap<Category, f64>> {
    let mut hist = BTreeMap::new();
    let mut n = 0usize;
    for f in formulas {
        n += 1;
        let mut per: BTreeMap<Category, usize> = BTreeMap::new();
        for t in f.terms() {
            *per.entry(catalog.category(t).unwrap_or(Category::Other)).or_insert(0) += 1;
        }
        for (cat, k) in per {
            *hist.entry(cat).or_insert(0.0) += k as f64 / f.arity() as f64;
        }
    }
    if n == 0 {
        return None;
    }
    hist.values_mut().for_each(|v| *v /= n as f64);
    Some(hist)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub range: SweepRange,
    pub record: ExplanationRecord,
    pub histogram: Option<BTreeMap<Category, f64>>,
}

/// Best formula and category shares for each preset range of one neuron.
pub fn threshold_sweep(
    catalog: &ConceptCatalog,
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    neuron: usize,
    params: &SearchParams,
) -> Result<Vec<SweepResult>> {
    let ranges = sweep_ranges(acts, neuron)?;
    ranges
        .into_par_iter()
        .map(|range| {
            let record = explain_interval(masks, acts, neuron, &range.interval, params)?;
            let histogram = category_histogram(catalog, record.formula.iter());
            Ok(SweepResult {
                range,
                record,
                histogram,
            })
        })
        .collect()
}

/// Category shares per sweep range, pooled over several neurons.
pub fn pooled_sweep_histograms(catalog: &ConceptCatalog, runs: &[Vec<SweepResult>]) -> Vec<(String, Option<BTreeMap<Category, f64>>)> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|i| {
            let formulas = runs.iter().filter_map(|r| r.get(i)).filter_map(|s| s.record.formula.as_ref());
            (first[i].range.name.clone(), category_histogram(catalog, formulas))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KSweepRow {
    pub k: usize,
    pub records: usize,
    pub mean_iou: f64,
    pub mean_expl_cov: f64,
    pub mean_sample_cov: f64,
    pub mean_act_cov: f64,
    pub mean_det_acc: f64,
    /// Formulas not equivalent to any formula found at a smaller k.
    pub novel_fraction: f64,
}

/// Explains every neuron for each cluster count and averages the qualities.
pub fn cluster_count_sweep(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    neurons: &[usize],
    k_list: &[usize],
    seed: u64,
    params: &SearchParams,
) -> Result<Vec<KSweepRow>> {
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.first() == Some(&0) {
        return Err(Error::Config("cluster counts must be at least 1".into()));
    }
    let mut earlier: Vec<Formula> = Vec::new();
    let mut rows = Vec::new();
    for &k in &ks {
        let per_neuron = neurons
            .par_iter()
            .map(|&n| clustered_explain(masks, acts, n, k, seed, params))
            .collect::<Result<Vec<_>>>()?;
        let records: Vec<&ExplanationRecord> = per_neuron.iter().flat_map(|ce| &ce.records).collect();
        let mut sums = [0.0f64; 5];
        for r in &records {
            if let Some(f) = &r.formula {
                let probe = Probe::new(masks, acts, r.neuron, &r.interval)?;
                let q = quality_vector(&probe, f, &QualityOptions::default())?;
                for (s, v) in sums.iter_mut().zip([q.iou, q.expl_cov, q.sample_cov, q.act_cov, q.det_acc]) {
                    *s += v.to_f64();
                }
            }
        }
        let n = records.len().max(1) as f64;
        let formulas: Vec<&Formula> = records.iter().filter_map(|r| r.formula.as_ref()).collect();
        let novel = formulas
            .iter()
            .filter(|f| !earlier.iter().any(|g| formulas_equivalent(f, g)))
            .count();
        let novel_fraction = if formulas.is_empty() {
            0.0
        } else {
            novel as f64 / formulas.len() as f64
        };
        rows.push(KSweepRow {
            k,
            records: records.len(),
            mean_iou: sums[0] / n,
            mean_expl_cov: sums[1] / n,
            mean_sample_cov: sums[2] / n,
            mean_act_cov: sums[3] / n,
            mean_det_acc: sums[4] / n,
            novel_fraction,
        });
        earlier.extend(formulas.into_iter().cloned());
    }
    Ok(rows)
}
