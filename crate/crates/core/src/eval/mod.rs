//! Detection evaluation.
//!
//! Average IoU, precision, recall and F1 all come from one geometric
//! matching per image: greedy, highest IoU first, one-to-one, and gated with
//! a strict `iou > threshold`. Confidence plays no part there. AP ranks
//! detections by confidence and integrates the all-points interpolated
//! precision-recall curve.

mod matching;
mod metrics;
mod predictions;
mod report;

pub use matching::{box_iou, image_iou, match_boxes, MatchResult, MatchedPair};
pub use metrics::{
    average_precision, coco_thresholds, dataset_iou, map_range, mean_average_precision,
    precision_recall_curve, precision_recall_f1, EvalImage, PrecisionRecall,
};
pub use predictions::{
    load_predictions, parse_prediction_line, read_prediction_file, PredictionFormat,
    PREDICTIONS_JSONL,
};
pub use report::{EvalReport, ImageReport};

use crate::dataset::DatasetItem;
use crate::error::Result;
use crate::geometry::Detection;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Computes every metric over `images` at the given matching gate.
pub fn evaluate(images: &[EvalImage], threshold: f64) -> Result<EvalReport> {
    let avg_iou = dataset_iou(images, threshold)?;
    let prf = precision_recall_f1(images, threshold);
    let per_image = images
        .iter()
        .map(|im| {
            let m = match_boxes(&im.ground_truth, &im.predicted_boxes(), threshold);
            ImageReport {
                name: im.name.clone(),
                iou: im.iou(threshold),
                ground_truth: im.ground_truth.len(),
                predictions: im.predictions.len(),
                matched: m.pairs.len(),
            }
        })
        .collect();
    Ok(EvalReport {
        avg_iou,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        map50: mean_average_precision(images, &[0.5]),
        map50_95: map_range(images),
        iou_threshold: threshold,
        true_positives: prf.true_positives,
        false_positives: prf.false_positives,
        false_negatives: prf.false_negatives,
        per_image,
    })
}

/// Pairs ground-truth items with their predictions.
pub fn eval_images(items: &[DatasetItem], predictions: Vec<Vec<Detection>>) -> Vec<EvalImage> {
    items
        .iter()
        .zip(predictions)
        .map(|(it, preds)| EvalImage::new(it.file_name(), it.annotations.clone(), preds))
        .collect()
}
