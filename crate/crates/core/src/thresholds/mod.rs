//! Activation intervals per neuron: top/bottom quantile ranges and k-means
//! cluster ranges.

mod kmeans;
mod quantile;

pub use kmeans::{kmeans_1d, Cluster, KMeans1d, MAX_CLUSTER_VALUES};
pub use quantile::{bottom_quantile_threshold, top_quantile_threshold};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::interchange::{ActivationStore, LayerKind};

/// Quantile used by the single-interval NetDissect/CoEx mode.
pub const COEX_QUANTILE: f64 = 0.005;
/// Quantiles of the threshold sweep, used as `[τ_q, ∞)` and `[ε, τ_q]`.
pub const SWEEP_QUANTILES: [f64; 6] = [0.005, 0.01, 0.05, 0.1, 0.2, 0.5];
pub const SWEEP_EPSILON: f64 = 1e-6;

/// Closed activation range `[lo, hi]`; `hi` may be `+∞`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Cluster ordinal, 1 = lowest activations.
    pub label: u32,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, label: u32) -> Self {
        Interval { lo, hi, label }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalRepr {
    lo: Option<f64>,
    hi: Option<f64>,
    label: u32,
}

// JSON has no infinities: unbounded ends are written as null.
impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalRepr {
            lo: self.lo.is_finite().then_some(self.lo),
            hi: self.hi.is_finite().then_some(self.hi),
            label: self.label,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = IntervalRepr::deserialize(d)?;
        Ok(Interval {
            lo: r.lo.unwrap_or(f64::NEG_INFINITY),
            hi: r.hi.unwrap_or(f64::INFINITY),
            label: r.label,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    QuantileTop,
    QuantileBottom,
    Kmeans,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub neuron: usize,
    pub mode: ThresholdMode,
    /// Disjoint, ascending by `lo`.
    pub intervals: Vec<Interval>,
    /// No activation to cluster (e.g. a dead relu unit).
    pub degenerate: bool,
    /// Fewer distinct values than requested clusters.
    pub reduced: bool,
}

/// The values clustered for a neuron: strictly positive ones for relu layers,
/// all of them for signed layers.
pub fn clustered_values(acts: &ActivationStore, neuron: usize) -> Vec<f32> {
    let all = acts.neuron_values(neuron);
    match acts.layer_kind() {
        LayerKind::Relu => all.iter().copied().filter(|&v| v > 0.0).collect(),
        LayerKind::Signed => all.to_vec(),
    }
}

/// K-means intervals `[min(Cls), max(Cls)]` for one neuron.
pub fn threshold_set(acts: &ActivationStore, neuron: usize, n_cls: usize, seed: u64) -> Result<ThresholdSet> {
    acts.check_neuron(neuron)?;
    let values = clustered_values(acts, neuron);
    if values.is_empty() {
        return Ok(ThresholdSet {
            neuron,
            mode: ThresholdMode::Kmeans,
            intervals: Vec::new(),
            degenerate: true,
            reduced: false,
        });
    }
    let km = kmeans_1d(&values, n_cls, seed)?;
    let intervals = km
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| Interval::new(c.lo as f64, c.hi as f64, i as u32 + 1))
        .collect();
    Ok(ThresholdSet {
        neuron,
        mode: ThresholdMode::Kmeans,
        intervals,
        degenerate: false,
        reduced: km.reduced,
    })
}

/// Single interval `[τ_top, ∞)` with `τ_top` the top-0.005 quantile over all
/// of the neuron's activations.
pub fn coex_threshold_set(acts: &ActivationStore, neuron: usize) -> Result<ThresholdSet> {
    acts.check_neuron(neuron)?;
    let tau = top_quantile_threshold(acts.neuron_values(neuron), COEX_QUANTILE)?;
    Ok(ThresholdSet {
        neuron,
        mode: ThresholdMode::QuantileTop,
        intervals: vec![Interval::new(tau as f64, f64::INFINITY, 1)],
        degenerate: false,
        reduced: false,
    })
}

/// A named range from the threshold sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub name: String,
    pub mode: ThresholdMode,
    pub quantile: f64,
    pub interval: Interval,
}

/// `[τ_q, ∞)` for each sweep quantile (over all activations), then `[ε, τ_q]`
/// with `τ_q` the bottom quantile of the activations `≥ ε`.
pub fn sweep_ranges(acts: &ActivationStore, neuron: usize) -> Result<Vec<SweepRange>> {
    acts.check_neuron(neuron)?;
    let all = acts.neuron_values(neuron);
    let mut out = Vec::new();
    for (i, &q) in SWEEP_QUANTILES.iter().enumerate() {
        let tau = top_quantile_threshold(all, q)?;
        out.push(SweepRange {
            name: format!("top_{q}"),
            mode: ThresholdMode::QuantileTop,
            quantile: q,
            interval: Interval::new(tau as f64, f64::INFINITY, i as u32 + 1),
        });
    }
    let low: Vec<f32> = all.iter().copied().filter(|&v| v as f64 >= SWEEP_EPSILON).collect();
    for (i, &q) in SWEEP_QUANTILES.iter().enumerate() {
        let hi = if low.is_empty() {
            SWEEP_EPSILON
        } else {
            bottom_quantile_threshold(&low, q)? as f64
        };
        out.push(SweepRange {
            name: format!("bottom_{q}"),
            mode: ThresholdMode::QuantileBottom,
            quantile: q,
            interval: Interval::new(SWEEP_EPSILON, hi, (SWEEP_QUANTILES.len() + i) as u32 + 1),
        });
    }
    Ok(out)
}
