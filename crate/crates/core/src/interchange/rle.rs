//! Run-length coding of row-major bitmasks: alternating zero/one runs,
//! starting with a (possibly empty) zero run. Only the first run may be 0.

use crate::error::{Error, Result};
use crate::maskops::BitMask;

pub fn encode(m: &BitMask) -> Vec<u32> {
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for i in 0..m.cells() {
        let bit = m.get_index(i);
        if bit != current {
            runs.push(len);
            current = bit;
            len = 0;
        }
        len += 1;
    }
    runs.push(len);
    runs
}

pub fn decode(runs: &[u32], height: usize, width: usize) -> Result<BitMask> {
    let cells = height * width;
    if runs.is_empty() {
        return Err(Error::Corruption("empty run list".into()));
    }
    let mut m = BitMask::empty(height, width);
    let mut pos = 0usize;
    for (k, &len) in runs.iter().enumerate() {
        if len == 0 && (k > 0 || runs.len() == 1 && cells > 0) {
            return Err(Error::Corruption(format!("zero-length run at position {k}")));
        }
        let end = pos + len as usize;
        if end > cells {
            return Err(Error::Corruption(format!(
                "run-length overrun: runs cover more than {cells} cells"
            )));
        }
        if k % 2 == 1 {
            for i in pos..end {
                m.set_index(i, true);
            }
        }
        pos = end;
    }
    if pos != cells {
        return Err(Error::Corruption(format!(
            "run-length underrun: runs cover {pos} of {cells} cells"
        )));
    }
    Ok(m)
}
