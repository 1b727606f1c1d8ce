//! Admissible upper bounds on the IoU of a candidate `L op t` built from a
//! scored label `L` and an atomic term `t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maskops::{rect_overlap_area, Op, Rect};
use crate::ratio::Ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Heuristic {
    Mmesh,
    Cfh,
    Areas,
    /// No bound: every candidate is scored.
    None,
}

impl Heuristic {
    pub const ALL: [Heuristic; 4] = [Heuristic::None, Heuristic::Areas, Heuristic::Cfh, Heuristic::Mmesh];

    pub fn as_str(self) -> &'static str {
        match self {
            Heuristic::Mmesh => "mmesh",
            Heuristic::Cfh => "cfh",
            Heuristic::Areas => "areas",
            Heuristic::None => "none",
        }
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown heuristic {s:?} (expected mmesh, cfh, areas or none)")))
    }
}

/// What a bound needs to know about one side of a candidate on one sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelStats {
    /// `|M(x)|`, the activation mask size.
    pub m_card: u32,
    /// `|M(x) ∩ S(x, L)|`.
    pub ims: u32,
    /// `|S(x, L)|`.
    pub card: u32,
    /// All-ones rectangle inside the label mask.
    pub min_ext: Rect,
    /// Bounding box of the label mask.
    pub max_ext: Rect,
}

impl LabelStats {
    pub const EMPTY: LabelStats = LabelStats {
        m_card: 0,
        ims: 0,
        card: 0,
        min_ext: Rect::EMPTY,
        max_ext: Rect::EMPTY,
    };
}

/// Optimistic intersection size of `M` with `L op R`.
pub fn estimate_intersection(op: Op, ims_left: u32, ims_right: u32, m_card: u32) -> u32 {
    let v = match op {
        Op::Or => ims_left.saturating_add(ims_right),
        Op::And => ims_left.min(ims_right),
        Op::AndNot => ims_left.min(m_card.saturating_sub(ims_right)),
    };
    v.min(m_card)
}

/// Pessimistic size of the mask of `L op R`. Never below `i_hat`, so the
/// estimated union never drops under `|M|`.
pub fn estimate_label_mask(op: Op, s_left: u32, s_right: u32, min_over: u32, max_over: u32, i_hat: u32) -> u32 {
    match op {
        Op::Or => s_left
            .max(s_right)
            .max((s_left + s_right).saturating_sub(max_over))
            .max(i_hat),
        Op::And => min_over.max(i_hat),
        Op::AndNot => s_left.saturating_sub(max_over).max(i_hat),
    }
}

/// Intersection estimate from mask sizes only; `n_s` is the grid size.
pub fn estimate_intersection_areas(op: Op, s_left: u32, s_right: u32, m_card: u32, n_s: u32) -> u32 {
    let v = match op {
        Op::Or => s_left.saturating_add(s_right),
        Op::And => s_left.min(s_right),
        Op::AndNot => s_left.min(n_s.saturating_sub(s_right)),
    };
    v.min(m_card)
}

/// Dataset sums feeding every bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundSums {
    pub m: u64,
    pub i_hat: u64,
    pub s_hat: u64,
    pub i_areas: u64,
}

impl BoundSums {
    pub fn add_sample(&mut self, op: Op, left: &LabelStats, right: &LabelStats, n_s: u32) {
        let m = left.m_card;
        let i_hat = estimate_intersection(op, left.ims, right.ims, m);
        let min_over = rect_overlap_area(left.min_ext, right.min_ext);
        let max_over = rect_overlap_area(left.max_ext, right.max_ext);
        let s_hat = estimate_label_mask(op, left.card, right.card, min_over, max_over, i_hat);
        self.m += m as u64;
        self.i_hat += i_hat as u64;
        self.s_hat += s_hat as u64;
        self.i_areas += estimate_intersection_areas(op, left.card, right.card, m, n_s) as u64;
    }

    pub fn mmesh(&self) -> Ratio {
        let den = self.m + self.s_hat - self.i_hat;
        Ratio::new(self.i_hat, den).min(Ratio::ONE)
    }

    pub fn cfh(&self) -> Ratio {
        saturating(self.i_hat, self.m)
    }

    pub fn areas(&self) -> Ratio {
        saturating(self.i_areas, self.m)
    }

    /// `None` gives 1, the trivial bound.
    pub fn bound(&self, h: Heuristic) -> Ratio {
        match h {
            Heuristic::Mmesh => self.mmesh(),
            Heuristic::Cfh => self.cfh(),
            Heuristic::Areas => self.areas(),
            Heuristic::None => Ratio::ONE,
        }
    }
}

fn saturating(i: u64, m: u64) -> Ratio {
    if i == 0 {
        Ratio::ZERO
    } else if m <= i {
        Ratio::ONE
    } else {
        Ratio::new(i, m - i).min(Ratio::ONE)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundResult {
    pub bound: Ratio,
    pub heuristic: Heuristic,
}

/// Bound for `L op t` given per-sample stats of both sides.
pub fn candidate_bound(
    h: Heuristic,
    op: Op,
    left: &[LabelStats],
    right: &[LabelStats],
    n_s: u32,
) -> Result<BoundResult> {
    if left.len() != right.len() {
        return Err(Error::InvalidInput(format!(
            "missing cache entries: {} left samples, {} right samples",
            left.len(),
            right.len()
        )));
    }
    let mut sums = BoundSums::default();
    for (l, r) in left.iter().zip(right) {
        sums.add_sample(op, l, r, n_s);
    }
    Ok(BoundResult {
        bound: sums.bound(h),
        heuristic: h,
    })
}

pub fn mmesh_bound(op: Op, left: &[LabelStats], right: &[LabelStats], n_s: u32) -> Result<BoundResult> {
    candidate_bound(Heuristic::Mmesh, op, left, right, n_s)
}

pub fn cfh_bound(op: Op, left: &[LabelStats], right: &[LabelStats], n_s: u32) -> Result<BoundResult> {
    candidate_bound(Heuristic::Cfh, op, left, right, n_s)
}

pub fn areas_bound(op: Op, left: &[LabelStats], right: &[LabelStats], n_s: u32) -> Result<BoundResult> {
    candidate_bound(Heuristic::Areas, op, left, right, n_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maskops::{bounding_box, largest_inscribed_rect, BitMask};
    use proptest::prelude::*;

    #[test]
    fn intersection_examples() {
        assert_eq!(estimate_intersection(Op::And, 5, 7, 10), 5);
        assert_eq!(estimate_intersection(Op::Or, 5, 7, 10), 10);
        assert_eq!(estimate_intersection(Op::AndNot, 5, 7, 10), 3);
    }

    #[test]
    fn label_mask_examples() {
        assert_eq!(estimate_label_mask(Op::Or, 4, 6, 0, 6, 0), 6);
        assert_eq!(estimate_label_mask(Op::And, 0, 0, 0, 0, 3), 3);
        assert_eq!(estimate_label_mask(Op::AndNot, 9, 0, 0, 4, 2), 5);
    }

    #[test]
    fn areas_examples() {
        assert_eq!(estimate_intersection_areas(Op::Or, 5, 7, 10, 16), 10);
        assert_eq!(estimate_intersection_areas(Op::And, 5, 7, 10, 16), 5);
        assert_eq!(estimate_intersection_areas(Op::AndNot, 5, 13, 10, 16), 3);
    }

    #[test]
    fn degenerate_sums() {
        let empty = BoundSums::default();
        assert_eq!(empty.mmesh(), Ratio::ZERO);
        assert_eq!(empty.cfh(), Ratio::ZERO);
        let full = BoundSums { m: 10, i_hat: 10, s_hat: 10, i_areas: 10 };
        assert_eq!(full.cfh(), Ratio::ONE);
        assert_eq!(full.areas(), Ratio::ONE);
        assert_eq!(full.mmesh(), Ratio::ONE);
    }

    fn stats(m: &BitMask, label: &BitMask) -> LabelStats {
        LabelStats {
            m_card: m.count(),
            ims: crate::maskops::inter_card(m, label).unwrap(),
            card: label.count(),
            min_ext: largest_inscribed_rect(label),
            max_ext: bounding_box(label),
        }
    }

    fn arb_mask(h: usize, w: usize) -> impl Strategy<Value = BitMask> {
        (proptest::collection::vec(any::<bool>(), h * w), 0u8..4).prop_map(move |(bits, shape)| match shape {
            // Rectangles make the extents tight, which stresses the bounds.
            0 => {
                let (r0, c0) = (bits[0] as usize, bits[1] as usize * 2);
                let (r1, c1) = (r0 + bits[2] as usize + 2, c0 + bits[3] as usize + 1);
                BitMask::from_fn(h, w, |r, c| (r0..=r1).contains(&r) && (c0..=c1).contains(&c))
            }
            1 => BitMask::empty(h, w),
            _ => BitMask::from_fn(h, w, |r, c| bits[r * w + c]),
        })
    }

    proptest! {
        // Per-sample conditions behind admissibility: Î ≥ I and
        // 0 ≤ Ŝ − Î ≤ |S| − I, plus the pointwise dominance chain.
        #[test]
        fn per_sample_conditions(
            m in arb_mask(5, 6),
            l in arb_mask(5, 6),
            r in arb_mask(5, 6),
            op_i in 0usize..3,
        ) {
            let op = Op::ALL[op_i];
            let s = l.combine(op, &r).unwrap();
            let i = crate::maskops::inter_card(&m, &s).unwrap();
            let (ls, rs) = (stats(&m, &l), stats(&m, &r));
            let i_hat = estimate_intersection(op, ls.ims, rs.ims, ls.m_card);
            let min_over = rect_overlap_area(ls.min_ext, rs.min_ext);
            let max_over = rect_overlap_area(ls.max_ext, rs.max_ext);
            let s_hat = estimate_label_mask(op, ls.card, rs.card, min_over, max_over, i_hat);
            prop_assert!(i_hat >= i);
            prop_assert!(s_hat >= i_hat);
            prop_assert!(s_hat - i_hat <= s.count() - i);
            let areas = estimate_intersection_areas(op, ls.card, rs.card, ls.m_card, 30);
            prop_assert!(areas >= i_hat);

            let mut sums = BoundSums::default();
            sums.add_sample(op, &ls, &rs, 30);
            let exact = Ratio::new(i as u64, crate::maskops::union_card(&m, &s).unwrap() as u64);
            prop_assert!(sums.mmesh() >= exact);
            prop_assert!(sums.cfh() >= sums.mmesh());
            prop_assert!(sums.areas() >= sums.cfh());
        }
    }

    #[test]
    fn tight_when_disjoint_rectangles() {
        // Two disjoint rectangles whose union is exactly M.
        let l = BitMask::from_fn(4, 4, |r, _| r < 2);
        let r = BitMask::from_fn(4, 4, |r, _| r >= 2);
        let m = BitMask::full(4, 4);
        let res = mmesh_bound(Op::Or, &[stats(&m, &l)], &[stats(&m, &r)], 16).unwrap();
        assert_eq!(res.bound, Ratio::ONE);
        let half = BitMask::from_fn(4, 4, |r, c| r < 2 && c < 2);
        let res = mmesh_bound(Op::Or, &[stats(&half, &l)], &[stats(&half, &r)], 16).unwrap();
        assert_eq!(res.bound, Ratio::new(4, 16));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(cfh_bound(Op::And, &[LabelStats::EMPTY], &[], 4).is_err());
    }

    #[test]
    fn heuristic_names_round_trip() {
        for h in Heuristic::ALL {
            assert_eq!(h.as_str().parse::<Heuristic>().unwrap(), h);
        }
        assert!("astar".parse::<Heuristic>().is_err());
    }
}
