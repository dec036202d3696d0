//! Exact area arithmetic for unions of axis-aligned rectangles.
//!
//! Coordinates are compressed to the distinct box edges; every elementary
//! cell of the resulting grid is then either fully inside or fully outside
//! each rectangle, so areas are sums of exact cell areas.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Rect {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        (self.x2 - self.x1).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y2 - self.y1).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        !(self.x2 > self.x1 && self.y2 > self.y1)
    }

    pub fn intersection(&self, other: &Rect) -> Option<Rect> {
        let r = Rect {
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
            x2: self.x2.min(other.x2),
            y2: self.y2.min(other.y2),
        };
        (!r.is_empty()).then_some(r)
    }

    fn spans_x(&self, lo: f64, hi: f64) -> bool {
        self.x1 <= lo && self.x2 >= hi
    }

    fn spans_y(&self, lo: f64, hi: f64) -> bool {
        self.y1 <= lo && self.y2 >= hi
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Area of the union of `rects`: sweep over x-slabs between distinct
/// vertical edges, summing merged y-interval lengths per slab.
pub fn union_area(rects: &[Rect]) -> f64 {
    let rects: Vec<&Rect> = rects.iter().filter(|r| !r.is_empty()).collect();
    if rects.is_empty() {
        return 0.0;
    }
    let xs = sorted_unique(rects.iter().flat_map(|r| [r.x1, r.x2]).collect());
    let mut total = 0.0;
    let mut spans: Vec<(f64, f64)> = Vec::with_capacity(rects.len());
    for w in xs.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        spans.clear();
        spans.extend(rects.iter().filter(|r| r.spans_x(lo, hi)).map(|r| (r.y1, r.y2)));
        if spans.is_empty() {
            continue;
        }
        spans.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut covered = 0.0;
        let (mut start, mut end) = spans[0];
        for &(s, e) in &spans[1..] {
            if s > end {
                covered += end - start;
                start = s;
                end = e;
            } else if e > end {
                end = e;
            }
        }
        covered += end - start;
        total += covered * (hi - lo);
    }
    total
}

/// For rectangles listed front to back, the area of each rectangle that is
/// not covered by any rectangle listed before it.
pub fn frontmost_areas(rects_front_to_back: &[Rect]) -> Vec<f64> {
    let rects = rects_front_to_back;
    let mut owned = vec![0.0; rects.len()];
    let xs = sorted_unique(rects.iter().filter(|r| !r.is_empty()).flat_map(|r| [r.x1, r.x2]).collect());
    let ys = sorted_unique(rects.iter().filter(|r| !r.is_empty()).flat_map(|r| [r.y1, r.y2]).collect());
    let mut active: Vec<usize> = Vec::with_capacity(rects.len());
    for wx in xs.windows(2) {
        let (xlo, xhi) = (wx[0], wx[1]);
        active.clear();
        active.extend((0..rects.len()).filter(|&i| !rects[i].is_empty() && rects[i].spans_x(xlo, xhi)));
        if active.is_empty() {
            continue;
        }
        let dx = xhi - xlo;
        for wy in ys.windows(2) {
            let (ylo, yhi) = (wy[0], wy[1]);
            if let Some(&owner) = active.iter().find(|&&i| rects[i].spans_y(ylo, yhi)) {
                owned[owner] += dx * (yhi - ylo);
            }
        }
    }
    owned
}
