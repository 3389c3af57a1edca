//! Python bindings. Images cross the boundary as raw interleaved RGB bytes
//! (`width * height * 3`) or as encoded PNG bytes.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use ::flurry::dataset::{self, AnnotationFormat, Branch, MixPolicy};
use ::flurry::eval::{self, EvalImage};
use ::flurry::snow;
use ::flurry::{BoundingBox, Detection, Error, ImageBuffer};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Image { .. } | Error::MissingAnnotation(_) => {
            PyOSError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse_format(s: &str) -> PyResult<AnnotationFormat> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "BoundingBox", module = "flurry", skip_from_py_object)]
#[derive(Clone)]
struct PyBox {
    inner: BoundingBox,
}

#[pymethods]
impl PyBox {
    #[new]
    #[pyo3(signature = (x_min, y_min, x_max, y_max, class_id = 0))]
    fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64, class_id: u32) -> Self {
        Self {
            inner: BoundingBox::new(x_min, y_min, x_max, y_max, class_id),
        }
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.inner.x_min
    }

    #[getter]
    fn y_min(&self) -> f64 {
        self.inner.y_min
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.inner.x_max
    }

    #[getter]
    fn y_max(&self) -> f64 {
        self.inner.y_max
    }

    #[getter]
    fn class_id(&self) -> u32 {
        self.inner.class_id
    }

    fn area(&self) -> f64 {
        self.inner.area()
    }

    fn iou(&self, other: PyRef<'_, PyBox>) -> f64 {
        eval::box_iou(&self.inner, &other.inner)
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!(
            "BoundingBox({}, {}, {}, {}, class_id={})",
            b.x_min, b.y_min, b.x_max, b.y_max, b.class_id
        )
    }
}

fn boxes(list: &[PyRef<'_, PyBox>]) -> Vec<BoundingBox> {
    list.iter().map(|b| b.inner).collect()
}

fn box_list(py: Python<'_>, list: &[BoundingBox]) -> PyResult<Vec<Py<PyBox>>> {
    list.iter().map(|&inner| Py::new(py, PyBox { inner })).collect()
}

#[pyclass(name = "Detection", module = "flurry", skip_from_py_object)]
#[derive(Clone)]
struct PyDetection {
    inner: Detection,
}

#[pymethods]
impl PyDetection {
    #[new]
    fn new(bbox: PyRef<'_, PyBox>, confidence: f64) -> Self {
        Self {
            inner: Detection::new(bbox.inner, confidence),
        }
    }

    #[getter]
    fn bbox(&self) -> PyBox {
        PyBox {
            inner: self.inner.bbox,
        }
    }

    #[getter]
    fn confidence(&self) -> f64 {
        self.inner.confidence
    }

    fn __repr__(&self) -> String {
        let b = &self.inner.bbox;
        format!(
            "Detection({}, {}, {}, {}, class_id={}, confidence={})",
            b.x_min, b.y_min, b.x_max, b.y_max, b.class_id, self.inner.confidence
        )
    }
}

#[pyclass(name = "SnowConfig", module = "flurry", skip_from_py_object)]
#[derive(Clone)]
struct PySnowConfig {
    inner: snow::SnowConfig,
}

#[pymethods]
impl PySnowConfig {
    #[new]
    #[pyo3(signature = (
        *,
        working_width = 640,
        working_height = 360,
        scale_array = None,
        noise_mean = 0.5,
        noise_std = 0.3,
        coverage_quantile = 0.04,
        base_sigma = 1.0,
        smoothing_constant = 1.0,
        blur_lengths = None,
        angle_min = 0.0,
        angle_max = 180.0,
        seed = 0,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        working_width: usize,
        working_height: usize,
        scale_array: Option<Vec<f64>>,
        noise_mean: f64,
        noise_std: f64,
        coverage_quantile: f64,
        base_sigma: f64,
        smoothing_constant: f64,
        blur_lengths: Option<Vec<usize>>,
        angle_min: f64,
        angle_max: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let defaults = snow::SnowConfig::default();
        let inner = snow::SnowConfig {
            working_width,
            working_height,
            scale_array: scale_array.unwrap_or(defaults.scale_array),
            noise_mean,
            noise_std,
            coverage_quantile,
            base_sigma,
            smoothing_constant,
            blur_lengths,
            angle_range: [angle_min, angle_max],
            seed,
        };
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn working_size(&self) -> (usize, usize) {
        self.inner.working_size()
    }

    #[getter]
    fn scale_array(&self) -> Vec<f64> {
        self.inner.scale_array.clone()
    }

    #[getter]
    fn coverage_quantile(&self) -> f64 {
        self.inner.coverage_quantile
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Per-scale `(scale, noise_sigma, blur_length, smoothing_sigma)`.
    fn scales(&self) -> Vec<(f64, f64, usize, f64)> {
        self.inner
            .scales()
            .into_iter()
            .map(|p| (p.scale, p.noise_sigma, p.blur_length, p.smoothing_sigma))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> PyResult<String> {
        Ok(format!("SnowConfig({})", self.to_json()?))
    }
}

fn config_or_default(config: Option<PyRef<'_, PySnowConfig>>) -> snow::SnowConfig {
    config.map(|c| c.inner.clone()).unwrap_or_default()
}

/// Adds snow to a raw RGB image; returns raw RGB bytes of the same size.
#[pyfunction]
#[pyo3(signature = (data, width, height, config = None, index = 0))]
fn synthesize_snow<'py>(
    py: Python<'py>,
    data: &[u8],
    width: usize,
    height: usize,
    config: Option<PyRef<'_, PySnowConfig>>,
    index: u64,
) -> PyResult<Bound<'py, PyBytes>> {
    let image = ImageBuffer::new(width, height, data.to_vec()).map_err(to_py)?;
    let out = snow::synthesize_snow_seeded(&image, &config_or_default(config), index).map_err(to_py)?;
    Ok(PyBytes::new(py, out.as_raw()))
}

/// Like [`synthesize_snow`] but PNG (or JPEG) bytes in, PNG bytes out.
#[pyfunction]
#[pyo3(signature = (encoded, config = None, index = 0))]
fn synthesize_snow_png<'py>(
    py: Python<'py>,
    encoded: &[u8],
    config: Option<PyRef<'_, PySnowConfig>>,
    index: u64,
) -> PyResult<Bound<'py, PyBytes>> {
    let image = ImageBuffer::decode(encoded).map_err(to_py)?;
    let out = snow::synthesize_snow_seeded(&image, &config_or_default(config), index).map_err(to_py)?;
    Ok(PyBytes::new(py, &out.encode_png().map_err(to_py)?))
}

/// The input resampled through the working resolution and back, without snow.
#[pyfunction]
#[pyo3(signature = (data, width, height, config = None))]
fn resize_round_trip<'py>(
    py: Python<'py>,
    data: &[u8],
    width: usize,
    height: usize,
    config: Option<PyRef<'_, PySnowConfig>>,
) -> PyResult<Bound<'py, PyBytes>> {
    let image = ImageBuffer::new(width, height, data.to_vec()).map_err(to_py)?;
    let out = snow::resize_round_trip(&image, &config_or_default(config));
    Ok(PyBytes::new(py, out.as_raw()))
}

#[pyfunction]
fn derive_item_seed(master: u64, index: u64) -> u64 {
    ::flurry::derive_item_seed(master, index)
}

/// Normalized 1-D Gaussian taps; the 2-D kernel is their outer product.
#[pyfunction]
fn gaussian_taps(sigma: f64) -> PyResult<Vec<f64>> {
    Ok(snow::GaussianKernel::new(sigma).map_err(to_py)?.taps().to_vec())
}

/// Row-major motion-blur weights and the stencil size.
#[pyfunction]
#[pyo3(signature = (length, angle, smoothing_sigma = 0.0))]
fn motion_blur_kernel(length: usize, angle: f64, smoothing_sigma: f64) -> PyResult<(usize, Vec<f64>)> {
    let k = snow::build_motion_blur_kernel(length, angle, smoothing_sigma).map_err(to_py)?;
    Ok((k.size(), k.weights().to_vec()))
}

#[pyfunction]
fn box_iou(a: PyRef<'_, PyBox>, b: PyRef<'_, PyBox>) -> f64 {
    eval::box_iou(&a.inner, &b.inner)
}

/// Greedy matches as `(gt_index, pred_index, iou)`.
#[pyfunction]
#[pyo3(signature = (gt, pred, threshold = 0.5))]
fn match_boxes(
    gt: Vec<PyRef<'_, PyBox>>,
    pred: Vec<PyRef<'_, PyBox>>,
    threshold: f64,
) -> Vec<(usize, usize, f64)> {
    eval::match_boxes(&boxes(&gt), &boxes(&pred), threshold)
        .pairs
        .into_iter()
        .map(|p| (p.gt, p.pred, p.iou))
        .collect()
}

#[pyfunction]
#[pyo3(signature = (gt, pred, threshold = 0.5))]
fn image_iou(gt: Vec<PyRef<'_, PyBox>>, pred: Vec<PyRef<'_, PyBox>>, threshold: f64) -> f64 {
    eval::image_iou(&boxes(&gt), &boxes(&pred), threshold)
}

fn report_dict<'py>(py: Python<'py>, r: &eval::EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("avg_iou", r.avg_iou)?;
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("f1", r.f1)?;
    d.set_item("map50", r.map50)?;
    d.set_item("map50_95", r.map50_95)?;
    d.set_item("true_positives", r.true_positives)?;
    d.set_item("false_positives", r.false_positives)?;
    d.set_item("false_negatives", r.false_negatives)?;
    d.set_item("per_image_iou", r.per_image.iter().map(|i| i.iou).collect::<Vec<_>>())?;
    Ok(d)
}

/// Scores `images`, a list of `(ground_truth, detections)` pairs.
#[pyfunction]
#[pyo3(signature = (images, iou_threshold = 0.5))]
fn evaluate<'py>(
    py: Python<'py>,
    images: Vec<(Vec<PyRef<'py, PyBox>>, Vec<PyRef<'py, PyDetection>>)>,
    iou_threshold: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let images: Vec<EvalImage> = images
        .iter()
        .enumerate()
        .map(|(i, (gt, det))| {
            EvalImage::new(format!("image_{i}"), boxes(gt), det.iter().map(|d| d.inner).collect())
        })
        .collect();
    let report = eval::evaluate(&images, iou_threshold).map_err(to_py)?;
    report_dict(py, &report)
}

/// Average precision at one gate, interpolated over all recall points.
#[pyfunction]
#[pyo3(signature = (gt, detections, iou_threshold = 0.5))]
fn average_precision(
    gt: Vec<PyRef<'_, PyBox>>,
    detections: Vec<PyRef<'_, PyDetection>>,
    iou_threshold: f64,
) -> f64 {
    let image = EvalImage::new("", boxes(&gt), detections.iter().map(|d| d.inner).collect());
    eval::average_precision(&[image], iou_threshold)
}

/// Loads a dataset as a list of dicts with `image`, `width`, `height`, `boxes`.
#[pyfunction]
#[pyo3(signature = (root, format = "yolo"))]
fn load_dataset<'py>(py: Python<'py>, root: PathBuf, format: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let ds = dataset::load_dataset(&root, parse_format(format)?).map_err(to_py)?;
    ds.items
        .iter()
        .map(|item| {
            let d = PyDict::new(py);
            d.set_item("image", item.image_path.clone())?;
            d.set_item("width", item.image_size.0)?;
            d.set_item("height", item.image_size.1)?;
            d.set_item("boxes", box_list(py, &item.annotations)?)?;
            Ok(d)
        })
        .collect()
}

/// Builds a mixed real/synthetic copy of `root` in `out`; returns branch counts.
#[pyfunction]
#[pyo3(signature = (root, out, p_synthetic = 0.5, seed = 0, config = None, format = "yolo", workers = 1))]
#[allow(clippy::too_many_arguments)]
fn mix_datasets<'py>(
    py: Python<'py>,
    root: PathBuf,
    out: PathBuf,
    p_synthetic: f64,
    seed: u64,
    config: Option<PyRef<'_, PySnowConfig>>,
    format: &str,
    workers: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let format = parse_format(format)?;
    let snow = config_or_default(config);
    let policy = MixPolicy { p_synthetic, seed };
    let ds = dataset::load_dataset(&root, format).map_err(to_py)?;
    let manifest =
        dataset::mix_datasets(&ds.items, &snow, &policy, format, &out, workers).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("original", manifest.count(Branch::Original))?;
    d.set_item("synthetic", manifest.count(Branch::Synthetic))?;
    d.set_item("failed", manifest.failed())?;
    d.set_item("manifest", out.join(dataset::MANIFEST_FILE))?;
    Ok(d)
}

#[pymodule]
fn flurry(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBox>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PySnowConfig>()?;
    m.add_function(wrap_pyfunction!(synthesize_snow, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_snow_png, m)?)?;
    m.add_function(wrap_pyfunction!(resize_round_trip, m)?)?;
    m.add_function(wrap_pyfunction!(derive_item_seed, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_taps, m)?)?;
    m.add_function(wrap_pyfunction!(motion_blur_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(box_iou, m)?)?;
    m.add_function(wrap_pyfunction!(match_boxes, m)?)?;
    m.add_function(wrap_pyfunction!(image_iou, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(average_precision, m)?)?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(mix_datasets, m)?)?;
    Ok(())
}
