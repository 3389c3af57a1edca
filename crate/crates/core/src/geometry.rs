use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in absolute pixel corner coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub class_id: u32,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, class_id: u32) -> Self {
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
            class_id,
        }
    }

    /// Builds a box from YOLO normalized center format.
    pub fn from_normalized_center(
        class_id: u32,
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
        width: u32,
        height: u32,
    ) -> Self {
        let (iw, ih) = (width as f64, height as f64);
        Self {
            x_min: (cx - w / 2.0) * iw,
            y_min: (cy - h / 2.0) * ih,
            x_max: (cx + w / 2.0) * iw,
            y_max: (cy + h / 2.0) * ih,
            class_id,
        }
    }

    /// `(cx, cy, w, h)` normalized by the image extent.
    pub fn to_normalized_center(&self, width: u32, height: u32) -> [f64; 4] {
        let (iw, ih) = (width as f64, height as f64);
        [
            (self.x_min + self.x_max) / 2.0 / iw,
            (self.y_min + self.y_max) / 2.0 / ih,
            (self.x_max - self.x_min) / iw,
            (self.y_max - self.y_min) / ih,
        ]
    }

    pub fn width(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0)
    }

    pub fn height(&self) -> f64 {
        (self.y_max - self.y_min).max(0.0)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_valid(&self) -> bool {
        [self.x_min, self.y_min, self.x_max, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max
    }

    pub fn scaled(&self, sx: f64, sy: f64) -> Self {
        Self {
            x_min: self.x_min * sx,
            y_min: self.y_min * sy,
            x_max: self.x_max * sx,
            y_max: self.y_max * sy,
            class_id: self.class_id,
        }
    }

    fn degenerate(&self) -> Error {
        Error::DegenerateBox {
            x_min: self.x_min,
            y_min: self.y_min,
            x_max: self.x_max,
            y_max: self.y_max,
        }
    }
}

/// A predicted box with its detector confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

impl Detection {
    pub fn new(bbox: BoundingBox, confidence: f64) -> Self {
        Self { bbox, confidence }
    }
}

/// Clamps `bbox` to `[0, width] x [0, height]`.
///
/// Fails with [`Error::DegenerateBox`] when nothing of positive area remains.
pub fn clamp_box(bbox: &BoundingBox, width: u32, height: u32) -> Result<BoundingBox> {
    if width == 0 || height == 0 {
        return Err(bbox.degenerate());
    }
    let (w, h) = (width as f64, height as f64);
    let clamped = BoundingBox {
        x_min: bbox.x_min.clamp(0.0, w),
        y_min: bbox.y_min.clamp(0.0, h),
        x_max: bbox.x_max.clamp(0.0, w),
        y_max: bbox.y_max.clamp(0.0, h),
        class_id: bbox.class_id,
    };
    if clamped.is_valid() {
        Ok(clamped)
    } else {
        Err(bbox.degenerate())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inside_is_unchanged() {
        let b = BoundingBox::new(10.0, 20.0, 30.0, 40.0, 2);
        assert_eq!(clamp_box(&b, 100, 100).unwrap(), b);
    }

    #[test]
    fn clamps_at_zero() {
        let b = BoundingBox::new(-5.0, -5.0, 10.0, 10.0, 0);
        assert_eq!(
            clamp_box(&b, 100, 100).unwrap(),
            BoundingBox::new(0.0, 0.0, 10.0, 10.0, 0)
        );
    }

    #[test]
    fn fully_outside_is_degenerate() {
        let b = BoundingBox::new(200.0, 200.0, 300.0, 300.0, 0);
        assert!(matches!(
            clamp_box(&b, 100, 100),
            Err(Error::DegenerateBox { .. })
        ));
    }

    #[test]
    fn nan_is_degenerate() {
        let b = BoundingBox::new(f64::NAN, 0.0, 10.0, 10.0, 0);
        assert!(clamp_box(&b, 100, 100).is_err());
    }

    #[test]
    fn normalized_center_conversion() {
        let b = BoundingBox::from_normalized_center(0, 0.5, 0.5, 0.1, 0.2, 1000, 500);
        assert!((b.x_min - 450.0).abs() < 1e-9);
        assert!((b.y_min - 200.0).abs() < 1e-9);
        assert!((b.x_max - 550.0).abs() < 1e-9);
        assert!((b.y_max - 300.0).abs() < 1e-9);
        let back = b.to_normalized_center(1000, 500);
        for (a, e) in back.iter().zip([0.5, 0.5, 0.1, 0.2]) {
            assert!((a - e).abs() < 1e-12);
        }
    }
}
