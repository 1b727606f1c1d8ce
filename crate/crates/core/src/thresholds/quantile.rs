use crate::error::{Error, Result};

fn sorted(values: &[f32]) -> Vec<f32> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f32::total_cmp);
    v
}

fn mass_limit(q: f64, n: usize) -> usize {
    // The epsilon absorbs representation error in q (0.005 * 1000 must be 5).
    (q * n as f64 + 1e-9).floor() as usize
}

fn check(values: &[f32], q: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty set".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("quantile {q} outside (0, 1)")));
    }
    Ok(())
}

/// Smallest stored value `τ` with `P(a ≥ τ) ≤ q`. When even the maximum
/// carries more than `q` of the mass (ties), the maximum is returned.
pub fn top_quantile_threshold(values: &[f32], q: f64) -> Result<f32> {
    check(values, q)?;
    let v = sorted(values);
    let n = v.len();
    let limit = mass_limit(q, n);
    let start = n - limit.min(n);
    if start == 0 {
        return Ok(v[0]);
    }
    // First index at or after `start` that begins a new distinct value.
    Ok((start..n).find(|&j| v[j - 1] < v[j]).map_or(v[n - 1], |j| v[j]))
}

/// Largest stored value `τ` with `P(a ≤ τ) ≤ q`; the minimum when ties make
/// that impossible.
pub fn bottom_quantile_threshold(values: &[f32], q: f64) -> Result<f32> {
    check(values, q)?;
    let v = sorted(values);
    let n = v.len();
    let limit = mass_limit(q, n);
    if limit >= n {
        return Ok(v[n - 1]);
    }
    // Last index before `limit` that ends a distinct value.
    Ok((0..limit)
        .rev()
        .find(|&j| v[j] < v[j + 1])
        .map_or(v[0], |j| v[j]))
}
