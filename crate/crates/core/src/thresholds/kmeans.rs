//! Optimal 1-D k-means by dynamic programming over sorted distinct values.
//!
//! Clusters of an optimal 1-D partition are contiguous in value order, so the
//! problem is choosing `k - 1` cut points. Layer `q` of the table holds the
//! minimal within-cluster SSE of the first `i` distinct values split into `q`
//! clusters. The optimal cut is monotone in `i`, which lets each layer be
//! filled by divide and conquer in O(m log m).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Above this many values the clustering runs on a seeded uniform subsample.
pub const MAX_CLUSTER_VALUES: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub lo: f32,
    pub hi: f32,
    pub count: usize,
    pub centroid: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeans1d {
    /// Sorted ascending by value.
    pub clusters: Vec<Cluster>,
    pub k_requested: usize,
    /// True when fewer distinct values than `k` forced a smaller `k`.
    pub reduced: bool,
    pub subsampled: bool,
}

struct Prefix {
    w: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Prefix {
    fn new(xs: &[f64], ws: &[f64]) -> Self {
        let shift = xs[xs.len() / 2];
        let mut p = Prefix {
            w: vec![0.0; xs.len() + 1],
            s1: vec![0.0; xs.len() + 1],
            s2: vec![0.0; xs.len() + 1],
        };
        for i in 0..xs.len() {
            let d = xs[i] - shift;
            p.w[i + 1] = p.w[i] + ws[i];
            p.s1[i + 1] = p.s1[i] + ws[i] * d;
            p.s2[i + 1] = p.s2[i] + ws[i] * d * d;
        }
        p
    }

    /// SSE of points `a..b` (half-open).
    #[inline]
    fn cost(&self, a: usize, b: usize) -> f64 {
        let w = self.w[b] - self.w[a];
        let s1 = self.s1[b] - self.s1[a];
        let s2 = self.s2[b] - self.s2[a];
        (s2 - s1 * s1 / w).max(0.0)
    }
}

/// Fills `cur[i]` for `i in lo..=hi` given cut candidates `opt_lo..=opt_hi`.
#[allow(clippy::too_many_arguments)]
fn fill_layer(
    prefix: &Prefix,
    prev: &[f64],
    cur: &mut [f64],
    cut: &mut [usize],
    layer: usize,
    lo: usize,
    hi: usize,
    opt_lo: usize,
    opt_hi: usize,
) {
    if lo > hi {
        return;
    }
    let mid = lo + (hi - lo) / 2;
    // The last cluster is `j..mid+1`; the first `j` points form `layer - 1` clusters.
    let mut best = f64::INFINITY;
    let mut best_j = opt_lo.max(layer - 1);
    for j in opt_lo.max(layer - 1)..=opt_hi.min(mid) {
        let v = prev[j] + prefix.cost(j, mid + 1);
        if v < best {
            best = v;
            best_j = j;
        }
    }
    cur[mid] = best;
    cut[mid] = best_j;
    if mid > lo {
        fill_layer(prefix, prev, cur, cut, layer, lo, mid - 1, opt_lo, best_j);
    }
    fill_layer(prefix, prev, cur, cut, layer, mid + 1, hi, best_j, opt_hi);
}

/// Optimal contiguous partition of weighted sorted points into `k` groups.
/// Returns the start index of each group.
fn optimal_cuts(xs: &[f64], ws: &[f64], k: usize) -> Vec<usize> {
    let m = xs.len();
    let prefix = Prefix::new(xs, ws);
    // prev[j]: best cost of the first j points in (layer - 1) clusters.
    let mut prev: Vec<f64> = (0..=m).map(|j| if j == 0 { 0.0 } else { prefix.cost(0, j) }).collect();
    let mut cuts: Vec<Vec<usize>> = Vec::with_capacity(k);
    cuts.push(vec![0; m]);
    for layer in 2..=k {
        let mut cur = vec![f64::INFINITY; m];
        let mut cut = vec![0usize; m];
        fill_layer(&prefix, &prev, &mut cur, &mut cut, layer, layer - 1, m - 1, layer - 1, m - 1);
        let mut next = vec![f64::INFINITY; m + 1];
        next[1..].copy_from_slice(&cur);
        prev = next;
        cuts.push(cut);
    }
    let mut starts = vec![0; k];
    let mut end = m - 1;
    for layer in (1..k).rev() {
        let j = cuts[layer][end];
        starts[layer] = j;
        end = j - 1;
    }
    starts
}

/// Clusters `values` into at most `k` contiguous value ranges minimizing
/// within-cluster SSE. `seed` only matters when subsampling kicks in.
pub fn kmeans_1d(values: &[f32], k: usize, seed: u64) -> Result<KMeans1d> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot cluster an empty set".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite value {v}")));
    }
    let subsampled = values.len() > MAX_CLUSTER_VALUES;
    let sample: Vec<f32> = if subsampled {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = rand::seq::index::sample(&mut rng, values.len(), MAX_CLUSTER_VALUES).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| values[i]).collect()
    } else {
        values.to_vec()
    };

    let mut sorted = sample;
    sorted.sort_unstable_by(f32::total_cmp);
    let mut xs: Vec<f64> = Vec::new();
    let mut ws: Vec<f64> = Vec::new();
    let mut raw: Vec<f32> = Vec::new();
    for v in sorted {
        if raw.last() == Some(&v) {
            *ws.last_mut().unwrap() += 1.0;
        } else {
            raw.push(v);
            xs.push(v as f64);
            ws.push(1.0);
        }
    }
    let k_eff = k.min(xs.len());
    let starts = optimal_cuts(&xs, &ws, k_eff);

    let mut clusters: Vec<Cluster> = (0..k_eff)
        .map(|g| {
            let a = starts[g];
            let b = if g + 1 < k_eff { starts[g + 1] } else { xs.len() };
            let w: f64 = ws[a..b].iter().sum();
            let s: f64 = (a..b).map(|i| xs[i] * ws[i]).sum();
            Cluster {
                lo: raw[a],
                hi: raw[b - 1],
                count: w as usize,
                centroid: s / w,
            }
        })
        .collect();

    if subsampled {
        clusters = widen_to_all(values, &clusters);
    }

    Ok(KMeans1d {
        clusters,
        k_requested: k,
        reduced: k_eff < k,
        subsampled,
    })
}

/// Assigns every value to its nearest centroid (ties to the lower cluster)
/// and widens each interval to the extremes of what it received.
fn widen_to_all(values: &[f32], clusters: &[Cluster]) -> Vec<Cluster> {
    let centroids: Vec<f64> = clusters.iter().map(|c| c.centroid).collect();
    let bounds: Vec<f64> = centroids.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    let mut out: Vec<Option<Cluster>> = vec![None; clusters.len()];
    for &v in values {
        let g = bounds.partition_point(|&b| (v as f64) > b);
        let slot = &mut out[g];
        match slot {
            None => {
                *slot = Some(Cluster {
                    lo: v,
                    hi: v,
                    count: 1,
                    centroid: centroids[g],
                })
            }
            Some(c) => {
                c.lo = c.lo.min(v);
                c.hi = c.hi.max(v);
                c.count += 1;
            }
        }
    }
    out.into_iter().flatten().collect()
}
