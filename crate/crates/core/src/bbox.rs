//! Axis-aligned pixel boxes.

use serde::{Deserialize, Serialize};

/// Axis-aligned box in pixel coordinates; `(x, y)` is the top-left pixel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl BBox {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self { x, y, w, h }
    }

    /// Box spanning the inclusive pixel range `[x0, x1] × [y0, y1]`.
    pub fn from_corners(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1);
        Self::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1)
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    /// One past the last column.
    pub fn right(&self) -> usize {
        self.x + self.w
    }

    /// One past the last row.
    pub fn bottom(&self) -> usize {
        self.y + self.h
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.right() && y >= self.y && y < self.bottom()
    }

    pub fn intersection_area(&self, other: &BBox) -> usize {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        x1.saturating_sub(x0) * y1.saturating_sub(y0)
    }

    /// Intersection over union; two empty boxes have IoU 0.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Grows the box by `margin` on every side, clamped to a `width × height` frame.
    pub fn dilate_clamped(&self, margin: usize, width: usize, height: usize) -> BBox {
        let x0 = self.x.saturating_sub(margin);
        let y0 = self.y.saturating_sub(margin);
        let x1 = (self.right() + margin).min(width);
        let y1 = (self.bottom() + margin).min(height);
        BBox::new(x0, y0, x1.saturating_sub(x0), y1.saturating_sub(y0))
    }

    pub fn fits_within(&self, width: usize, height: usize) -> bool {
        self.right() <= width && self.bottom() <= height
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_identical_and_disjoint() {
        let a = BBox::new(10, 10, 20, 10);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&BBox::new(100, 100, 5, 5)), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        let a = BBox::new(0, 0, 10, 10);
        let b = BBox::new(5, 0, 10, 10);
        // 50 / 150
        assert!((a.iou(&b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_clamps_to_frame() {
        assert_eq!(
            BBox::new(10, 10, 20, 10).dilate_clamped(8, 200, 150),
            BBox::new(2, 2, 36, 26)
        );
        assert_eq!(
            BBox::new(0, 0, 5, 5).dilate_clamped(8, 200, 150),
            BBox::new(0, 0, 13, 13)
        );
        assert_eq!(
            BBox::new(190, 140, 10, 10).dilate_clamped(8, 200, 150),
            BBox::new(182, 132, 18, 18)
        );
    }
}
