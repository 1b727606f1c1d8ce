//! Explanation qualities for a (neuron, interval, formula) triple, plus the
//! auxiliary statistics and the inputs they need from the exporter.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::{read_acts, ActivationStore, SampleMaskStore};
use crate::maskops::{formula_mask, ConceptId, Formula};
use crate::ratio::Ratio;
use crate::search::Probe;

/// Per-sample cardinalities `|M ∩ S|`, `|M|`, `|S|`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub inter: u32,
    pub m: u32,
    pub s: u32,
}

impl SampleCounts {
    pub fn union(&self) -> u32 {
        self.m + self.s - self.inter
    }
}

pub fn sample_counts(probe: &Probe, f: &Formula) -> Result<Vec<SampleCounts>> {
    probe
        .activation_masks()
        .iter()
        .enumerate()
        .map(|(x, m)| {
            let s = formula_mask(x, f, probe.masks())?;
            let inter = m.words().iter().zip(s.words()).map(|(a, b)| (a & b).count_ones()).sum();
            Ok(SampleCounts {
                inter,
                m: m.count(),
                s: s.count(),
            })
        })
        .collect()
}

fn sum(counts: &[SampleCounts], f: impl Fn(&SampleCounts) -> u32) -> u64 {
    counts.iter().map(|c| f(c) as u64).sum()
}

fn count(counts: &[SampleCounts], f: impl Fn(&SampleCounts) -> bool) -> u64 {
    counts.iter().filter(|c| f(c)).count() as u64
}

pub fn iou(counts: &[SampleCounts]) -> Ratio {
    Ratio::new(sum(counts, |c| c.inter), sum(counts, SampleCounts::union))
}

/// `Σ|M ∩ S| / Σ|S|`.
pub fn det_acc(counts: &[SampleCounts]) -> Ratio {
    Ratio::new(sum(counts, |c| c.inter), sum(counts, |c| c.s))
}

/// Samples with overlap over samples carrying the label.
pub fn sample_cov(counts: &[SampleCounts]) -> Ratio {
    Ratio::new(count(counts, |c| c.inter > 0), count(counts, |c| c.s > 0))
}

/// `Σ|M ∩ S| / Σ|M|`.
pub fn act_cov(counts: &[SampleCounts]) -> Ratio {
    Ratio::new(sum(counts, |c| c.inter), sum(counts, |c| c.m))
}

/// Samples with overlap over samples where the neuron fires in range.
pub fn expl_cov(counts: &[SampleCounts]) -> Ratio {
    Ratio::new(count(counts, |c| c.inter > 0), count(counts, |c| c.m > 0))
}

/// Penalized IoU: `Σ(|M ∩ S| − r·|M|·|S|/n_s) / Σ|M ∪ S|`. Zero union gives 0.
pub fn imrou(counts: &[SampleCounts], r: f64, n_s: usize) -> f64 {
    let union = sum(counts, SampleCounts::union);
    if union == 0 {
        return 0.0;
    }
    let random: u64 = counts.iter().map(|c| c.m as u64 * c.s as u64).sum();
    (sum(counts, |c| c.inter) as f64 - r * random as f64 / n_s as f64) / union as f64
}

pub fn avg_act_size(counts: &[SampleCounts], n_s: usize) -> f64 {
    per_cell(sum(counts, |c| c.m), counts.len(), n_s)
}

pub fn avg_lab_size(counts: &[SampleCounts], n_s: usize) -> f64 {
    per_cell(sum(counts, |c| c.s), counts.len(), n_s)
}

/// Mean `|M ∪ S|` per cell of the dataset.
pub fn avg_overlap(counts: &[SampleCounts], n_s: usize) -> f64 {
    per_cell(sum(counts, SampleCounts::union), counts.len(), n_s)
}

fn per_cell(total: u64, n_samples: usize, n_s: usize) -> f64 {
    let cells = n_samples as f64 * n_s as f64;
    if cells == 0.0 {
        0.0
    } else {
        total as f64 / cells
    }
}

/// Pearson correlation between per-sample IoU and per-sample accuracy over
/// samples where the neuron fires in range. `None` when either side has zero
/// variance or fewer than two samples qualify.
pub fn pearson(counts: &[SampleCounts], accuracy: &[f64]) -> Result<Option<f64>> {
    if accuracy.len() != counts.len() {
        return Err(Error::Consistency(format!(
            "accuracy vector has {} entries for {} samples",
            accuracy.len(),
            counts.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = counts
        .iter()
        .zip(accuracy)
        .filter(|(c, _)| c.m > 0)
        .map(|(c, &a)| (c.inter as f64 / c.union() as f64, a))
        .unzip();
    if xs.len() < 2 {
        return Ok(None);
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some(sxy / (sxx * syy).sqrt()))
}

/// A neuron's grids inside another activation store.
#[derive(Clone, Copy, Debug)]
pub struct NeuronView<'a> {
    pub store: &'a ActivationStore,
    pub neuron: usize,
}

fn check_views(probe: &Probe, a: NeuronView, b: NeuronView) -> Result<()> {
    for v in [a, b] {
        v.store.check_neuron(v.neuron)?;
        v.store.check_pairs_with(probe.masks())?;
    }
    Ok(())
}

fn cosine(a: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Mean cosine similarity, over samples where the neuron fires in range,
/// between the in-range activations on the label-masked input and on the
/// original input. A zero vector scores 0. `None` if no sample fires.
pub fn lab_mask(probe: &Probe, original: NeuronView, masked: NeuronView) -> Result<Option<f64>> {
    check_views(probe, original, masked)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (x, m) in probe.activation_masks().iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        let a = original.store.grid(original.neuron, x);
        let t = masked.store.grid(masked.neuron, x);
        total += cosine(m.ones().map(|i| (t[i] as f64, a[i] as f64)));
        n += 1;
    }
    Ok((n > 0).then(|| total / n as f64))
}

/// Unnormalized variant: `Σ_x Σ_{i ∈ M(x)} |A_i(θ(x)) − A_i(x)|`.
pub fn abs_lab_mask(probe: &Probe, original: NeuronView, masked: NeuronView) -> Result<f64> {
    check_views(probe, original, masked)?;
    let mut total = 0.0;
    for (x, m) in probe.activation_masks().iter().enumerate() {
        let a = original.store.grid(original.neuron, x);
        let t = masked.store.grid(masked.neuron, x);
        total += m.ones().map(|i| (t[i] as f64 - a[i] as f64).abs()).sum::<f64>();
    }
    Ok(total)
}

/// A concept covering the whole grid in every sample where it appears.
pub fn is_scene_concept(masks: &SampleMaskStore, c: ConceptId) -> bool {
    let n_s = masks.grid_cells() as u32;
    let mut present = false;
    for x in 0..masks.n_samples() {
        let card = masks.meta(x, c).card;
        if card > 0 {
            if card != n_s {
                return false;
            }
            present = true;
        }
    }
    present
}

/// Fraction of formula terms, over a batch of formulas, that are scene
/// concepts. `None` for an empty batch.
pub fn scene_perc<'a>(masks: &SampleMaskStore, formulas: impl IntoIterator<Item = &'a Formula>) -> Option<f64> {
    let (mut scene, mut total) = (0usize, 0usize);
    for f in formulas {
        for t in f.terms() {
            total += 1;
            scene += is_scene_concept(masks, t) as usize;
        }
    }
    (total > 0).then(|| scene as f64 / total as f64)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuxStats {
    pub scene_perc: Option<f64>,
    pub imrou: Option<f64>,
    pub pearson: Option<f64>,
    pub avg_act_size: Option<f64>,
    pub avg_lab_size: Option<f64>,
    pub avg_overlap: Option<f64>,
    pub abs_lab_mask: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityVector {
    pub iou: Ratio,
    pub det_acc: Ratio,
    pub sample_cov: Ratio,
    pub act_cov: Ratio,
    pub expl_cov: Ratio,
    pub lab_mask: Option<f64>,
    pub aux: AuxStats,
    /// Names of ratios whose denominator was zero (reported as 0).
    pub degenerate: Vec<String>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct QualityOptions<'a> {
    /// ImRoU weight; `None` leaves ImRoU absent.
    pub imrou_r: Option<f64>,
    pub accuracy: Option<&'a [f64]>,
    pub masked: Option<NeuronView<'a>>,
    pub original: Option<NeuronView<'a>>,
    pub absolute_lab_mask: bool,
}

pub fn quality_vector(probe: &Probe, f: &Formula, opts: &QualityOptions) -> Result<QualityVector> {
    let counts = sample_counts(probe, f)?;
    let n_s = probe.masks().grid_cells();
    let mut degenerate = Vec::new();
    let mut flag = |name: &str, zero: bool| {
        if zero {
            degenerate.push(name.to_string());
        }
    };
    flag("iou", sum(&counts, SampleCounts::union) == 0);
    flag("det_acc", sum(&counts, |c| c.s) == 0);
    flag("sample_cov", count(&counts, |c| c.s > 0) == 0);
    flag("act_cov", sum(&counts, |c| c.m) == 0);
    flag("expl_cov", count(&counts, |c| c.m > 0) == 0);

    let mut lab = None;
    let mut abs_lab = None;
    if let (Some(orig), Some(masked)) = (opts.original, opts.masked) {
        lab = lab_mask(probe, orig, masked)?;
        if lab.is_none() {
            degenerate.push("lab_mask".to_string());
            lab = Some(0.0);
        }
        if opts.absolute_lab_mask {
            abs_lab = Some(abs_lab_mask(probe, orig, masked)?);
        }
    }
    let pearson_value = match opts.accuracy {
        Some(acc) => {
            let p = pearson(&counts, acc)?;
            if p.is_none() {
                degenerate.push("pearson".to_string());
            }
            p
        }
        None => None,
    };
    Ok(QualityVector {
        iou: iou(&counts),
        det_acc: det_acc(&counts),
        sample_cov: sample_cov(&counts),
        act_cov: act_cov(&counts),
        expl_cov: expl_cov(&counts),
        lab_mask: lab,
        aux: AuxStats {
            scene_perc: scene_perc(probe.masks(), [f]),
            imrou: opts.imrou_r.map(|r| imrou(&counts, r, n_s)),
            pearson: pearson_value,
            avg_act_size: Some(avg_act_size(&counts, n_s)),
            avg_lab_size: Some(avg_lab_size(&counts, n_s)),
            avg_overlap: Some(avg_overlap(&counts, n_s)),
            abs_lab_mask: abs_lab,
        },
        degenerate,
    })
}

/// One float per line, one line per sample. Blank lines and `#` lines are
/// skipped.
pub fn read_accuracy(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_accuracy(&text)
}

pub fn parse_accuracy(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let v: f64 = l
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("accuracy line {}: not a number: {:?}", i + 1, l.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Format(format!("accuracy line {}: non-finite value", i + 1)))
            }
        })
        .collect()
}

pub const MASKED_INDEX_FILE: &str = "index.tsv";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedEntry {
    pub formula: Formula,
    pub file: PathBuf,
}

/// Directory of activation stores computed on label-masked inputs.
///
/// `index.tsv` has a `neuron\tcluster\tformula\tfile` header and one row per
/// explanation; `formula` uses the compact token form (`3 OR 7 AND_NOT 2`)
/// and `file` is an activation file relative to the directory. A file holds
/// either that neuron alone or every neuron of the bundle.
#[derive(Clone, Debug, Default)]
pub struct MaskedActsDir {
    root: PathBuf,
    entries: BTreeMap<(usize, u32), MaskedEntry>,
}

impl MaskedActsDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(MASKED_INDEX_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut me = MaskedActsDir {
            root: dir.to_path_buf(),
            entries: BTreeMap::new(),
        };
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if !header_seen {
                header_seen = true;
                if cols == ["neuron", "cluster", "formula", "file"] {
                    continue;
                }
                return Err(Error::Format(format!("{}: bad header {line:?}", path.display())));
            }
            let bad = |what: &str| Error::Format(format!("{} line {}: {what}", path.display(), i + 1));
            if cols.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let neuron = cols[0].parse().map_err(|_| bad("bad neuron"))?;
            let cluster = cols[1].parse().map_err(|_| bad("bad cluster"))?;
            let formula = Formula::parse_compact(cols[2]).map_err(|_| bad("bad formula"))?;
            if cols[3].is_empty() {
                return Err(bad("empty file name"));
            }
            let entry = MaskedEntry {
                formula,
                file: PathBuf::from(cols[3]),
            };
            if me.entries.insert((neuron, cluster), entry).is_some() {
                return Err(bad("duplicate (neuron, cluster)"));
            }
        }
        Ok(me)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, neuron: usize, cluster: u32) -> Option<&MaskedEntry> {
        self.entries.get(&(neuron, cluster))
    }

    /// Loads the store for an entry and returns it with the neuron's index
    /// inside it. Fails if the entry's formula differs from `formula`.
    pub fn load(&self, neuron: usize, cluster: u32, formula: &Formula) -> Result<Option<(ActivationStore, usize)>> {
        let Some(entry) = self.get(neuron, cluster) else {
            return Ok(None);
        };
        if &entry.formula != formula {
            return Err(Error::Consistency(format!(
                "masked activations for neuron {neuron} cluster {cluster} were made for {}, not {}",
                entry.formula.to_compact(),
                formula.to_compact()
            )));
        }
        let store = read_acts(&self.root.join(&entry.file))?;
        let idx = if store.n_neurons() == 1 { 0 } else { neuron };
        store.check_neuron(idx)?;
        Ok(Some((store, idx)))
    }

    /// Index text for the given rows.
    pub fn index_text(rows: &[(usize, u32, Formula, String)]) -> String {
        let mut s = String::from("neuron\tcluster\tformula\tfile\n");
        for (n, c, f, file) in rows {
            s.push_str(&format!("{n}\t{c}\t{}\t{file}\n", f.to_compact()));
        }
        s
    }
}
