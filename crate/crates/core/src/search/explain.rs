use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{beam_search, Probe, SearchParams};
use crate::error::Result;
use crate::interchange::{ActivationStore, SampleMaskStore};
use crate::maskops::Formula;
use crate::ratio::Ratio;
use crate::thresholds::{coex_threshold_set, threshold_set, Interval, ThresholdSet};

/// Best formula for one (neuron, interval).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub neuron: usize,
    pub interval: Interval,
    /// `None` when no concept appears anywhere in the dataset.
    pub formula: Option<Formula>,
    pub iou: Ratio,
    pub visited: u64,
    pub dedup_skips: u64,
    /// Empty activation mask on every sample.
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

pub fn explain_interval(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    neuron: usize,
    interval: &Interval,
    params: &SearchParams,
) -> Result<ExplanationRecord> {
    let start = Instant::now();
    let probe = Probe::new(masks, acts, neuron, interval)?;
    let out = beam_search(&probe, params)?;
    let (formula, iou) = match out.best {
        Some(s) => (Some(s.formula), s.iou),
        None => (None, Ratio::ZERO),
    };
    Ok(ExplanationRecord {
        neuron,
        interval: *interval,
        formula,
        iou,
        visited: out.visited,
        dedup_skips: out.dedup_skips,
        degenerate: out.degenerate,
        wall_time_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteredExplanation {
    pub thresholds: ThresholdSet,
    /// One per interval, lowest activations first.
    pub records: Vec<ExplanationRecord>,
}

fn explain_set(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    thresholds: ThresholdSet,
    params: &SearchParams,
) -> Result<ClusteredExplanation> {
    let records = thresholds
        .intervals
        .iter()
        .map(|iv| explain_interval(masks, acts, thresholds.neuron, iv, params))
        .collect::<Result<_>>()?;
    Ok(ClusteredExplanation { thresholds, records })
}

/// Clusters the neuron's activations and explains every cluster range.
pub fn clustered_explain(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    neuron: usize,
    n_cls: usize,
    seed: u64,
    params: &SearchParams,
) -> Result<ClusteredExplanation> {
    params.validate()?;
    let ts = threshold_set(acts, neuron, n_cls, seed)?;
    explain_set(masks, acts, ts, params)
}

/// Single range `[τ_top, ∞)`.
pub fn coex_explain(
    masks: &SampleMaskStore,
    acts: &ActivationStore,
    neuron: usize,
    params: &SearchParams,
) -> Result<ClusteredExplanation> {
    params.validate()?;
    let ts = coex_threshold_set(acts, neuron)?;
    explain_set(masks, acts, ts, params)
}
