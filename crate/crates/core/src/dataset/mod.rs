//! Annotated dataset ingestion, writing and real/synthetic mixing.

mod format;
mod mix;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use format::{
    format_yolo_line, parse_yolo_line, read_jsonl, read_yolo_labels, write_jsonl,
    write_yolo_labels, AnnotationFormat, JsonlRecord, IMAGES_DIR, JSONL_FILE, LABELS_DIR,
};
pub use mix::{config_digest, mix_datasets, Branch, Manifest, ManifestRecord, MixPolicy, MANIFEST_FILE};

use crate::error::{Error, Result};
use crate::geometry::{clamp_box, BoundingBox};
use crate::raster::{resize_image, ImageBuffer};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// One image with its annotations in absolute pixel coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub image_path: PathBuf,
    pub image_size: (u32, u32),
    pub annotations: Vec<BoundingBox>,
}

impl DatasetItem {
    pub fn file_name(&self) -> String {
        self.image_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn stem(&self) -> String {
        self.image_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn load_image(&self) -> Result<ImageBuffer> {
        ImageBuffer::open(&self.image_path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    /// Boxes discarded on load because clamping left no area.
    pub dropped_boxes: usize,
}

impl Dataset {
    /// Keeps only items whose image file name appears in `names`.
    pub fn retain_listed<S: AsRef<str>>(&mut self, names: &[S]) {
        let wanted: std::collections::HashSet<&str> = names.iter().map(|s| s.as_ref()).collect();
        self.items.retain(|it| wanted.contains(it.file_name().as_str()));
    }

    pub fn stats(&self) -> DatasetStats {
        let mut sizes = BTreeMap::new();
        let mut classes = BTreeMap::new();
        let mut areas = Vec::new();
        for item in &self.items {
            *sizes
                .entry(format!("{}x{}", item.image_size.0, item.image_size.1))
                .or_insert(0) += 1;
            for b in &item.annotations {
                *classes.entry(b.class_id).or_insert(0) += 1;
                areas.push(b.area());
            }
        }
        let boxes = areas.len();
        DatasetStats {
            images: self.items.len(),
            boxes,
            dropped_boxes: self.dropped_boxes,
            empty_images: self.items.iter().filter(|i| i.annotations.is_empty()).count(),
            mean_boxes_per_image: if self.items.is_empty() {
                0.0
            } else {
                boxes as f64 / self.items.len() as f64
            },
            min_box_area: areas.iter().copied().reduce(f64::min),
            max_box_area: areas.iter().copied().reduce(f64::max),
            image_sizes: sizes,
            class_counts: classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub images: usize,
    pub boxes: usize,
    pub dropped_boxes: usize,
    pub empty_images: usize,
    pub mean_boxes_per_image: f64,
    pub min_box_area: Option<f64>,
    pub max_box_area: Option<f64>,
    pub image_sizes: BTreeMap<String, usize>,
    pub class_counts: BTreeMap<u32, usize>,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

/// Image files under `dir`, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

fn image_size(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn clamp_all(
    boxes: Vec<BoundingBox>,
    (w, h): (u32, u32),
    origin: &Path,
    dropped: &mut usize,
) -> Vec<BoundingBox> {
    boxes
        .into_iter()
        .filter_map(|b| match clamp_box(&b, w, h) {
            Ok(b) => Some(b),
            Err(e) => {
                log::warn!("{}: dropping box: {e}", origin.display());
                *dropped += 1;
                None
            }
        })
        .collect()
}

/// Loads a dataset rooted at `root`. Items come back sorted by image path.
pub fn load_dataset(root: impl AsRef<Path>, format: AnnotationFormat) -> Result<Dataset> {
    let root = root.as_ref();
    let images_dir = root.join(IMAGES_DIR);
    let images = list_images(&images_dir)?;
    let mut dropped = 0;
    let mut items = Vec::with_capacity(images.len());
    match format {
        AnnotationFormat::Yolo => {
            let labels_dir = root.join(LABELS_DIR);
            for image_path in images {
                let stem = image_path.file_stem().unwrap_or_default();
                let label = labels_dir.join(stem).with_extension("txt");
                if !label.is_file() {
                    return Err(Error::MissingAnnotation(image_path));
                }
                let size = image_size(&image_path)?;
                let boxes = read_yolo_labels(&label, size.0, size.1)?;
                let annotations = clamp_all(boxes, size, &label, &mut dropped);
                items.push(DatasetItem {
                    image_path,
                    image_size: size,
                    annotations,
                });
            }
        }
        AnnotationFormat::Jsonl => {
            let jsonl = root.join(JSONL_FILE);
            let mut by_name: BTreeMap<String, (usize, JsonlRecord)> = BTreeMap::new();
            if jsonl.is_file() {
                for (line, rec) in read_jsonl(&jsonl)? {
                    if !images_dir.join(&rec.image).is_file() {
                        return Err(Error::parse(
                            &jsonl,
                            line,
                            format!("image {:?} not found in {}", rec.image, images_dir.display()),
                        ));
                    }
                    if rec.width == 0 || rec.height == 0 {
                        return Err(Error::parse(&jsonl, line, "width and height must be > 0"));
                    }
                    if by_name.insert(rec.image.clone(), (line, rec)).is_some() {
                        return Err(Error::parse(&jsonl, line, "duplicate image record"));
                    }
                }
            }
            for image_path in images {
                let name = image_path
                    .file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                let Some((_, rec)) = by_name.remove(&name) else {
                    return Err(Error::MissingAnnotation(image_path));
                };
                let size = (rec.width, rec.height);
                let annotations = clamp_all(rec.boxes, size, &jsonl, &mut dropped);
                items.push(DatasetItem {
                    image_path,
                    image_size: size,
                    annotations,
                });
            }
        }
    }
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} zero-area boxes", root.display());
    }
    Ok(Dataset {
        items,
        dropped_boxes: dropped,
    })
}

/// An in-memory image ready to be written out under `<name>.png`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub name: String,
    pub image: ImageBuffer,
    pub boxes: Vec<BoundingBox>,
}

pub(crate) fn prepare_output(out: &Path, format: AnnotationFormat) -> Result<()> {
    let images = out.join(IMAGES_DIR);
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    if format == AnnotationFormat::Yolo {
        let labels = out.join(LABELS_DIR);
        std::fs::create_dir_all(&labels).map_err(|e| Error::io(&labels, e))?;
    }
    Ok(())
}

/// Writes PNG images and labels in `format` under `out`; returns the count.
pub fn write_dataset(
    records: &[LabeledImage],
    format: AnnotationFormat,
    out: impl AsRef<Path>,
) -> Result<usize> {
    let out = out.as_ref();
    prepare_output(out, format)?;
    let mut jsonl = Vec::new();
    for rec in records {
        let file = format!("{}.png", rec.name);
        rec.image.save_png(out.join(IMAGES_DIR).join(&file))?;
        let (w, h) = (rec.image.width() as u32, rec.image.height() as u32);
        match format {
            AnnotationFormat::Yolo => write_yolo_labels(
                &out.join(LABELS_DIR).join(format!("{}.txt", rec.name)),
                &rec.boxes,
                w,
                h,
            )?,
            AnnotationFormat::Jsonl => jsonl.push(JsonlRecord {
                image: file,
                width: w,
                height: h,
                boxes: rec.boxes.clone(),
            }),
        }
    }
    if format == AnnotationFormat::Jsonl {
        write_jsonl(&out.join(JSONL_FILE), &jsonl)?;
    }
    Ok(records.len())
}

/// Result of [`resize_with_annotations`].
#[derive(Debug)]
pub struct ResizedItem {
    pub image: ImageBuffer,
    pub boxes: Vec<BoundingBox>,
    /// Boxes (by input index) that collapsed below one pixel.
    pub degenerate: Vec<(usize, Error)>,
}

/// Bilinear resize of `image` with the item's boxes scaled alongside.
pub fn resize_with_annotations(
    item: &DatasetItem,
    image: &ImageBuffer,
    target: (usize, usize),
) -> Result<ResizedItem> {
    let (tw, th) = target;
    if tw == 0 || th == 0 {
        return Err(Error::InvalidConfig(format!("resize target {tw}x{th} is empty")));
    }
    if image.is_empty() {
        return Err(Error::InvalidConfig("cannot resize an empty image".into()));
    }
    let sx = tw as f64 / image.width() as f64;
    let sy = th as f64 / image.height() as f64;
    let mut boxes = Vec::new();
    let mut degenerate = Vec::new();
    for (i, b) in item.annotations.iter().enumerate() {
        let scaled = b.scaled(sx, sy);
        match clamp_box(&scaled, tw as u32, th as u32) {
            Ok(c) if c.width() >= 1.0 && c.height() >= 1.0 => boxes.push(c),
            Ok(_) => degenerate.push((
                i,
                Error::DegenerateBox {
                    x_min: scaled.x_min,
                    y_min: scaled.y_min,
                    x_max: scaled.x_max,
                    y_max: scaled.y_max,
                },
            )),
            Err(e) => degenerate.push((i, e)),
        }
    }
    Ok(ResizedItem {
        image: resize_image(image, tw, th),
        boxes,
        degenerate,
    })
}
