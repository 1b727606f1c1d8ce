use serde::{Deserialize, Serialize};

use super::BitMask;

/// Inclusive cell rectangle `[r0, r1] x [c0, c1]`. [`Rect::EMPTY`] has area 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub r0: u32,
    pub c0: u32,
    pub r1: u32,
    pub c1: u32,
}

impl Rect {
    pub const EMPTY: Rect = Rect {
        r0: 1,
        c0: 1,
        r1: 0,
        c1: 0,
    };

    pub fn new(r0: u32, c0: u32, r1: u32, c1: u32) -> Self {
        debug_assert!(r0 <= r1 && c0 <= c1);
        Rect { r0, c0, r1, c1 }
    }

    pub fn is_empty(&self) -> bool {
        self.r1 < self.r0 || self.c1 < self.c0
    }

    pub fn area(&self) -> u32 {
        if self.is_empty() {
            0
        } else {
            (self.r1 - self.r0 + 1) * (self.c1 - self.c0 + 1)
        }
    }

    pub fn contains(&self, r: u32, c: u32) -> bool {
        !self.is_empty() && self.r0 <= r && r <= self.r1 && self.c0 <= c && c <= self.c1
    }

    fn key(&self) -> (u32, u32, u32, u32) {
        (self.r0, self.c0, self.r1, self.c1)
    }
}

/// Area of the coordinate-wise intersection; 0 if disjoint or either is empty.
pub fn rect_overlap_area(a: Rect, b: Rect) -> u32 {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let r0 = a.r0.max(b.r0);
    let r1 = a.r1.min(b.r1);
    let c0 = a.c0.max(b.c0);
    let c1 = a.c1.min(b.c1);
    if r0 > r1 || c0 > c1 {
        0
    } else {
        (r1 - r0 + 1) * (c1 - c0 + 1)
    }
}

/// Smallest rectangle containing every set cell.
pub fn bounding_box(m: &BitMask) -> Rect {
    let w = m.width();
    let mut bb: Option<Rect> = None;
    for i in m.ones() {
        let (r, c) = ((i / w) as u32, (i % w) as u32);
        bb = Some(match bb {
            None => Rect::new(r, c, r, c),
            Some(b) => Rect::new(b.r0.min(r), b.c0.min(c), b.r1.max(r), b.c1.max(c)),
        });
    }
    bb.unwrap_or(Rect::EMPTY)
}

/// Maximum-area all-ones rectangle, via a per-row histogram of consecutive
/// ones and a monotonic stack. O(H·W).
///
/// Among rectangles of equal area the lexicographically smallest
/// `(r0, c0, r1, c1)` is returned. Every maximum-area rectangle is maximal in
/// all four directions, so the stack sweep (which visits every maximal
/// rectangle at its bottom row) sees all of them.
pub fn largest_inscribed_rect(m: &BitMask) -> Rect {
    let (h, w) = (m.height(), m.width());
    let mut heights = vec![0u32; w];
    let mut best = Rect::EMPTY;
    let mut best_area = 0u32;
    let mut stack: Vec<usize> = Vec::with_capacity(w + 1);

    let consider = |rect: Rect, best: &mut Rect, best_area: &mut u32| {
        let a = rect.area();
        if a > *best_area || (a == *best_area && a > 0 && rect.key() < best.key()) {
            *best = rect;
            *best_area = a;
        }
    };

    for r in 0..h {
        for (c, hc) in heights.iter_mut().enumerate() {
            *hc = if m.get(r, c) { *hc + 1 } else { 0 };
        }
        stack.clear();
        // Sentinel column `w` with height 0 flushes the stack.
        for c in 0..=w {
            let cur = if c < w { heights[c] } else { 0 };
            while let Some(&top) = stack.last() {
                if heights[top] < cur {
                    break;
                }
                stack.pop();
                let height = heights[top];
                if height == 0 {
                    continue;
                }
                let left = stack.last().map_or(0, |&s| s + 1);
                let rect = Rect::new(
                    r as u32 + 1 - height,
                    left as u32,
                    r as u32,
                    c as u32 - 1,
                );
                consider(rect, &mut best, &mut best_area);
            }
            stack.push(c);
        }
    }
    best
}
