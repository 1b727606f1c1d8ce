//! Bitmask kernels, rectangle geometry and logical formulas over concepts.

mod formula;
mod rect;

pub use formula::{ConceptId, Formula, Op};
pub use rect::{bounding_box, largest_inscribed_rect, rect_overlap_area, Rect};

use crate::error::{Error, Result};
use crate::interchange::SampleMaskStore;

/// A row-major grid of bits packed into 64-bit words.
///
/// Bits past `width * height` in the last word are always zero, so whole-word
/// popcounts never need a tail correction.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

pub(crate) fn words_for(cells: usize) -> usize {
    cells.div_ceil(64)
}

impl BitMask {
    pub fn empty(height: usize, width: usize) -> Self {
        BitMask {
            width,
            height,
            words: vec![0; words_for(width * height)],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut m = Self::empty(height, width);
        for w in m.words.iter_mut() {
            *w = u64::MAX;
        }
        m.clear_tail();
        m
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::empty(height, width);
        for r in 0..height {
            for c in 0..width {
                if f(r, c) {
                    m.set(r, c, true);
                }
            }
        }
        m
    }

    /// Wraps raw words; fails if the length is wrong or pad bits are set.
    pub fn from_words(height: usize, width: usize, words: Vec<u64>) -> Result<Self> {
        if words.len() != words_for(width * height) {
            return Err(Error::InvalidInput(format!(
                "expected {} words for a {height}x{width} mask, got {}",
                words_for(width * height),
                words.len()
            )));
        }
        let m = BitMask {
            width,
            height,
            words,
        };
        let mut check = m.clone();
        check.clear_tail();
        if check.words != m.words {
            return Err(Error::InvalidInput("mask has pad bits set".into()));
        }
        Ok(m)
    }

    fn clear_tail(&mut self) {
        let cells = self.width * self.height;
        let rem = cells % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        let i = r * self.width + c;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.set_index(r * self.width + c, value);
    }

    pub fn set_index(&mut self, i: usize, value: bool) {
        let bit = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn count(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices (row-major) of the set cells, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    fn check_dims(&self, other: &BitMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::InvalidInput(format!(
                "mask dimensions differ: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    /// `self op other`, with AND_NOT complementing `other` over the full grid.
    pub fn combine(&self, op: Op, other: &BitMask) -> Result<BitMask> {
        self.check_dims(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op.apply(a, b))
            .collect();
        Ok(BitMask {
            width: self.width,
            height: self.height,
            words,
        })
    }

    pub fn combine_in_place(&mut self, op: Op, other: &[u64]) {
        for (a, &b) in self.words.iter_mut().zip(other) {
            *a = op.apply(*a, b);
        }
    }
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "BitMask {}x{}", self.height, self.width)?;
        for r in 0..self.height {
            let row: String = (0..self.width)
                .map(|c| if self.get(r, c) { '#' } else { '.' })
                .collect();
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

/// Bit set iff `lo <= value <= hi`. Both ends are inclusive.
pub fn activation_mask(grid: &[f32], height: usize, width: usize, lo: f64, hi: f64) -> BitMask {
    debug_assert_eq!(grid.len(), height * width);
    let mut m = BitMask::empty(height, width);
    for (i, &v) in grid.iter().enumerate() {
        let v = v as f64;
        if lo <= v && v <= hi {
            m.words[i / 64] |= 1 << (i % 64);
        }
    }
    m
}

/// `|a ∩ b|`.
pub fn inter_card(a: &BitMask, b: &BitMask) -> Result<u32> {
    a.check_dims(b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x & y).count_ones())
        .sum())
}

/// `|a ∪ b|`.
pub fn union_card(a: &BitMask, b: &BitMask) -> Result<u32> {
    a.check_dims(b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x | y).count_ones())
        .sum())
}

/// Intersection and union cardinalities of `act` with `left op right`,
/// computed word by word without materializing the combined mask.
/// A `None` side stands for an empty mask.
#[inline]
pub(crate) fn combined_counts(
    act: &[u64],
    left: &[u64],
    op: Op,
    right: Option<&[u64]>,
) -> (u32, u32) {
    let mut inter = 0;
    let mut union = 0;
    match right {
        Some(right) => {
            for ((&m, &l), &r) in act.iter().zip(left).zip(right) {
                let s = op.apply(l, r);
                inter += (m & s).count_ones();
                union += (m | s).count_ones();
            }
        }
        None => {
            for (&m, &l) in act.iter().zip(left) {
                let s = op.apply(l, 0);
                inter += (m & s).count_ones();
                union += (m | s).count_ones();
            }
        }
    }
    (inter, union)
}

/// `S(x, f)`: the formula's mask on one sample, folded left to right.
pub fn formula_mask(sample: usize, f: &Formula, store: &SampleMaskStore) -> Result<BitMask> {
    if sample >= store.n_samples() {
        return Err(Error::InvalidInput(format!(
            "sample {sample} out of range ({} samples)",
            store.n_samples()
        )));
    }
    for t in f.terms() {
        store.check_concept(t)?;
    }
    let mut acc = store.mask(sample, f.head()).clone();
    for &(op, t) in f.tail() {
        acc.combine_in_place(op, store.mask(sample, t).words());
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_mask(h: usize, w: usize) -> impl Strategy<Value = BitMask> {
        proptest::collection::vec(any::<bool>(), h * w)
            .prop_map(move |bits| BitMask::from_fn(h, w, |r, c| bits[r * w + c]))
    }

    #[test]
    fn activation_mask_examples() {
        let grid = [0.1f32, 0.9, 0.5, 0.2];
        let m = activation_mask(&grid, 2, 2, 0.5, f64::INFINITY);
        assert!(m.get(0, 1) && m.get(1, 0));
        assert_eq!(m.count(), 2);
        let all = activation_mask(&grid, 2, 2, f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(all, BitMask::full(2, 2));
    }

    #[test]
    fn full_mask_has_clean_tail() {
        let m = BitMask::full(3, 5);
        assert_eq!(m.count(), 15);
        assert_eq!(m.words()[0], (1 << 15) - 1);
        assert!(BitMask::from_words(3, 5, vec![u64::MAX]).is_err());
    }

    #[test]
    fn card_examples() {
        let a = BitMask::from_fn(4, 4, |r, c| r == 0 && c < 3);
        let b = BitMask::from_fn(4, 4, |r, _| r == 3);
        assert_eq!(inter_card(&a, &a).unwrap(), 3);
        assert_eq!(union_card(&a, &a).unwrap(), 3);
        assert_eq!(inter_card(&a, &b).unwrap(), 0);
        assert_eq!(union_card(&a, &b).unwrap(), 7);
        assert!(inter_card(&a, &BitMask::empty(2, 8)).is_err());
    }

    #[test]
    fn ones_iterates_in_order() {
        let m = BitMask::from_fn(9, 9, |r, c| (r * 9 + c) % 7 == 0);
        let got: Vec<_> = m.ones().collect();
        let want: Vec<_> = (0..81).filter(|i| i % 7 == 0).collect();
        assert_eq!(got, want);
    }

    proptest! {
        #[test]
        fn cards_match_cell_loop((a, b) in (arb_mask(7, 11), arb_mask(7, 11))) {
            let mut inter = 0;
            let mut union = 0;
            for i in 0..77 {
                inter += (a.get_index(i) && b.get_index(i)) as u32;
                union += (a.get_index(i) || b.get_index(i)) as u32;
            }
            prop_assert_eq!(inter_card(&a, &b).unwrap(), inter);
            prop_assert_eq!(union_card(&a, &b).unwrap(), union);
            prop_assert_eq!(inter + union, a.count() + b.count());
        }

        #[test]
        fn combined_counts_agree((m, l, r) in (arb_mask(6, 13), arb_mask(6, 13), arb_mask(6, 13)),
                                 op in prop_oneof![Just(Op::Or), Just(Op::And), Just(Op::AndNot)]) {
            let s = l.combine(op, &r).unwrap();
            let (i, u) = combined_counts(m.words(), l.words(), op, Some(r.words()));
            prop_assert_eq!(i, inter_card(&m, &s).unwrap());
            prop_assert_eq!(u, union_card(&m, &s).unwrap());
            let (i0, u0) = combined_counts(m.words(), l.words(), op, None);
            let s0 = l.combine(op, &BitMask::empty(6, 13)).unwrap();
            prop_assert_eq!(i0, inter_card(&m, &s0).unwrap());
            prop_assert_eq!(u0, union_card(&m, &s0).unwrap());
        }
    }
}
