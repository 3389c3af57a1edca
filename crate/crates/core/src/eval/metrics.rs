use serde::Serialize;

use super::matching::{box_iou, image_iou, match_boxes};
use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Detection};

/// IoU gates 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|k| (50 + 5 * k) as f64 / 100.0)
}

/// Ground truth and predictions for one image.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalImage {
    pub name: String,
    pub ground_truth: Vec<BoundingBox>,
    pub predictions: Vec<Detection>,
}

impl EvalImage {
    pub fn new(name: impl Into<String>, ground_truth: Vec<BoundingBox>, predictions: Vec<Detection>) -> Self {
        Self {
            name: name.into(),
            ground_truth,
            predictions,
        }
    }

    pub fn predicted_boxes(&self) -> Vec<BoundingBox> {
        self.predictions.iter().map(|d| d.bbox).collect()
    }

    pub fn iou(&self, threshold: f64) -> f64 {
        image_iou(&self.ground_truth, &self.predicted_boxes(), threshold)
    }
}

/// Unweighted mean of per-image IoU.
pub fn dataset_iou(images: &[EvalImage], threshold: f64) -> Result<f64> {
    if images.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(images.iter().map(|im| im.iou(threshold)).sum::<f64>() / images.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrecisionRecall {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Micro-averaged precision, recall and F1 from the geometric matching.
/// Every `0 / 0` evaluates to 0.
pub fn precision_recall_f1(images: &[EvalImage], threshold: f64) -> PrecisionRecall {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for im in images {
        let m = match_boxes(&im.ground_truth, &im.predicted_boxes(), threshold);
        tp += m.pairs.len();
        fp += m.unmatched_pred.len();
        fn_ += m.unmatched_gt.len();
    }
    let precision = ratio(tp as f64, (tp + fp) as f64);
    let recall = ratio(tp as f64, (tp + fn_) as f64);
    PrecisionRecall {
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1: ratio(2.0 * precision * recall, precision + recall),
    }
}

/// Confidence-ranked TP/FP flags for every detection in the dataset.
fn rank_detections(images: &[EvalImage], iou_threshold: f64) -> Vec<bool> {
    let mut order: Vec<(usize, usize)> = images
        .iter()
        .enumerate()
        .flat_map(|(i, im)| (0..im.predictions.len()).map(move |d| (i, d)))
        .collect();
    // stable: equal confidences keep input order
    order.sort_by(|a, b| {
        let ca = images[a.0].predictions[a.1].confidence;
        let cb = images[b.0].predictions[b.1].confidence;
        cb.total_cmp(&ca)
    });

    let mut taken: Vec<Vec<bool>> = images
        .iter()
        .map(|im| vec![false; im.ground_truth.len()])
        .collect();
    order
        .into_iter()
        .map(|(i, d)| {
            let det = &images[i].predictions[d].bbox;
            let mut best: Option<(usize, f64)> = None;
            for (g, gt) in images[i].ground_truth.iter().enumerate() {
                if taken[i][g] || gt.class_id != det.class_id {
                    continue;
                }
                let iou = box_iou(gt, det);
                if iou > iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                    best = Some((g, iou));
                }
            }
            match best {
                Some((g, _)) => {
                    taken[i][g] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

/// Precision-recall points `(recall, precision)` after each ranked detection.
pub fn precision_recall_curve(images: &[EvalImage], iou_threshold: f64) -> Vec<(f64, f64)> {
    let total_gt: usize = images.iter().map(|im| im.ground_truth.len()).sum();
    let mut tp = 0usize;
    rank_detections(images, iou_threshold)
        .into_iter()
        .enumerate()
        .map(|(k, hit)| {
            tp += hit as usize;
            (ratio(tp as f64, total_gt as f64), tp as f64 / (k + 1) as f64)
        })
        .collect()
}

/// Area under the all-points interpolated precision-recall curve (precision
/// replaced by its running maximum from the right). Zero without ground truth.
pub fn average_precision(images: &[EvalImage], iou_threshold: f64) -> f64 {
    let total_gt: usize = images.iter().map(|im| im.ground_truth.len()).sum();
    if total_gt == 0 {
        return 0.0;
    }
    let curve = precision_recall_curve(images, iou_threshold);
    let mut envelope: Vec<f64> = curve.iter().map(|&(_, p)| p).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (&(recall, _), &p) in curve.iter().zip(&envelope) {
        ap += (recall - prev_recall) * p;
        prev_recall = recall;
    }
    ap
}

/// Mean of [`average_precision`] over `thresholds`.
pub fn mean_average_precision(images: &[EvalImage], thresholds: &[f64]) -> f64 {
    if thresholds.is_empty() {
        return 0.0;
    }
    thresholds
        .iter()
        .map(|&t| average_precision(images, t))
        .sum::<f64>()
        / thresholds.len() as f64
}

/// mAP@50-95.
pub fn map_range(images: &[EvalImage]) -> f64 {
    mean_average_precision(images, &coco_thresholds())
}
