//! Detections and bounding-box geometry.

use std::fmt;

use crate::error::{Error, Result};

/// Axis-aligned box given by its top-left corner and size, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn diagonal(&self) -> f64 {
        self.w.hypot(self.h)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    pub fn center_distance(&self, other: &BBox) -> f64 {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        (ax - bx).hypot(ay - by)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.w.is_finite()
            && self.h.is_finite()
            && self.w > 0.0
            && self.h > 0.0
    }
}

/// Stable identifier of a detection inside a [`TrackingGraph`](crate::graph::TrackingGraph).
///
/// Ids are handed out in insertion order and never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetId(pub u64);

impl fmt::Display for DetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d{}", self.0)
    }
}

/// One observed bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub frame: i64,
    pub local_index: usize,
    pub bbox: BBox,
    pub score: f64,
    /// Optional per-detection feature columns from the input file.
    pub extra: Vec<f64>,
}

impl Detection {
    pub fn new(frame: i64, local_index: usize, bbox: BBox, score: f64) -> Self {
        Self {
            frame,
            local_index,
            bbox,
            score,
            extra: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidDetection {
                frame: self.frame,
                reason: reason.to_string(),
            })
        };
        if self.frame < 0 {
            return fail("negative frame index");
        }
        if !self.bbox.is_valid() {
            return fail("box must be finite with positive width and height");
        }
        if !self.score.is_finite() {
            return fail("score is not finite");
        }
        if self.extra.iter().any(|v| !v.is_finite()) {
            return fail("extra feature is not finite");
        }
        Ok(())
    }
}

/// Groups detections into one layer per frame from the first to the last
/// frame present; frames without detections become empty layers.
pub fn frame_layers(dets: Vec<Detection>) -> Vec<(i64, Vec<Detection>)> {
    let mut map: std::collections::BTreeMap<i64, Vec<Detection>> = Default::default();
    for d in dets {
        map.entry(d.frame).or_default().push(d);
    }
    let (Some(&lo), Some(&hi)) = (map.keys().next(), map.keys().next_back()) else {
        return Vec::new();
    };
    (lo..=hi).map(|t| (t, map.remove(&t).unwrap_or_default())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_half_shifted_boxes() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(5.0, 0.0, 10.0, 10.0);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.iou(&b), b.iou(&a));
    }

    #[test]
    fn iou_disjoint_and_identical() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&BBox::new(100.0, 100.0, 10.0, 10.0)), 0.0);
        // touching edges do not overlap
        assert_eq!(a.iou(&BBox::new(10.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn zero_width_rejected() {
        let d = Detection::new(0, 0, BBox::new(0.0, 0.0, 0.0, 5.0), 1.0);
        assert!(d.validate().is_err());
        let d = Detection::new(-1, 0, BBox::new(0.0, 0.0, 1.0, 5.0), 1.0);
        assert!(d.validate().is_err());
    }
}
