use serde::Serialize;

use crate::geometry::BoundingBox;

/// Intersection over union of two boxes. Zero when either has no area.
pub fn box_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    pub gt: usize,
    pub pred: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    /// Pairs in the order they were selected.
    pub pairs: Vec<MatchedPair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl MatchResult {
    pub fn iou_sum(&self) -> f64 {
        self.pairs.iter().map(|p| p.iou).sum()
    }
}

/// Greedy one-to-one matching, highest IoU first.
///
/// Only pairs with `iou > threshold` (strict) and equal class ids qualify.
/// Equal IoUs are taken in order of lower ground-truth index, then lower
/// prediction index.
pub fn match_boxes(gt: &[BoundingBox], pred: &[BoundingBox], threshold: f64) -> MatchResult {
    let mut candidates: Vec<MatchedPair> = Vec::new();
    for (g, gb) in gt.iter().enumerate() {
        for (p, pb) in pred.iter().enumerate() {
            if gb.class_id != pb.class_id {
                continue;
            }
            let iou = box_iou(gb, pb);
            if iou > threshold {
                candidates.push(MatchedPair { gt: g, pred: p, iou });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.iou
            .total_cmp(&a.iou)
            .then(a.gt.cmp(&b.gt))
            .then(a.pred.cmp(&b.pred))
    });

    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut pairs = Vec::new();
    for c in candidates {
        if !gt_used[c.gt] && !pred_used[c.pred] {
            gt_used[c.gt] = true;
            pred_used[c.pred] = true;
            pairs.push(c);
        }
    }
    MatchResult {
        pairs,
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
    }
}

/// Sum of matched IoUs over `|gt| + |unmatched predictions|`; extra
/// predictions are penalized. An image with neither boxes nor predictions
/// scores 1.
pub fn image_iou(gt: &[BoundingBox], pred: &[BoundingBox], threshold: f64) -> f64 {
    if gt.is_empty() && pred.is_empty() {
        return 1.0;
    }
    let m = match_boxes(gt, pred, threshold);
    m.iou_sum() / (gt.len() + m.unmatched_pred.len()) as f64
}
