//! Raster types and resampling.
//!
//! [`ImageBuffer`] is the 8-bit RGB interchange type. Synthesis works on
//! floating-point rasters ([`FloatField`] for single-channel layers,
//! [`RgbField`] for color) and quantizes back to 8 bits once at the end.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};

/// Owned 8-bit RGB raster, row-major, interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidConfig(format!(
                "RGB buffer of {}x{} needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn to_field(&self) -> RgbField {
        RgbField {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Mean over all samples of all channels.
    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| v as u64).sum::<u64>() as f64 / self.data.len() as f64
    }

    /// Decodes a PNG or JPEG file. Grayscale and alpha inputs become RGB.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_rgb_image(img.to_rgb8()))
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory(bytes).map_err(|source| Error::Image {
            path: "<memory>".into(),
            source,
        })?;
        Ok(Self::from_rgb_image(img.to_rgb8()))
    }

    fn from_rgb_image(img: RgbImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            width: w as usize,
            height: h as usize,
            data: img.into_raw(),
        }
    }

    fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer length checked at construction")
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb_image()
            .write_to(&mut out, ImageFormat::Png)
            .map_err(|source| Error::Image {
                path: "<memory>".into(),
                source,
            })?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Single-channel floating-point raster.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (data.len(), 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Three-channel floating-point raster, interleaved like [`ImageBuffer`].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RgbField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: (width, height),
                actual: (data.len() / 3, 1),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn resize(&self, width: usize, height: usize) -> RgbField {
        RgbField {
            width,
            height,
            data: resize_bilinear(&self.data, self.width, self.height, 3, width, height),
        }
    }

    /// Rounds half up and saturates to `[0, 255]`.
    pub fn quantize(&self) -> ImageBuffer {
        ImageBuffer {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| quantize_sample(v)).collect(),
        }
    }
}

#[inline]
pub fn quantize_sample(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Source taps for one output coordinate along one axis.
#[derive(Clone, Copy)]
struct Tap {
    lo: usize,
    hi: usize,
    frac: f64,
}

fn axis_taps(src: usize, dst: usize) -> Vec<Tap> {
    if src == dst {
        return (0..dst)
            .map(|i| Tap {
                lo: i,
                hi: i,
                frac: 0.0,
            })
            .collect();
    }
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            // pixel centers at half-integers
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(src - 1);
            Tap {
                lo,
                hi,
                frac: s - lo as f64,
            }
        })
        .collect()
}

/// Bilinear resampling of an interleaved raster with pixel-center alignment
/// and edge clamping. Resizing to the same dimensions is the identity.
pub fn resize_bilinear(
    src: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    new_width: usize,
    new_height: usize,
) -> Vec<f64> {
    debug_assert_eq!(src.len(), width * height * channels);
    if width == new_width && height == new_height {
        return src.to_vec();
    }
    if width == 0 || height == 0 {
        return vec![0.0; new_width * new_height * channels];
    }
    let xs = axis_taps(width, new_width);
    let ys = axis_taps(height, new_height);
    let mut out = vec![0.0; new_width * new_height * channels];
    let row = width * channels;
    for (oy, ty) in ys.iter().enumerate() {
        let r0 = &src[ty.lo * row..(ty.lo + 1) * row];
        let r1 = &src[ty.hi * row..(ty.hi + 1) * row];
        let dst = &mut out[oy * new_width * channels..(oy + 1) * new_width * channels];
        for (ox, tx) in xs.iter().enumerate() {
            for c in 0..channels {
                let a = r0[tx.lo * channels + c];
                let b = r0[tx.hi * channels + c];
                let top = a + (b - a) * tx.frac;
                let a = r1[tx.lo * channels + c];
                let b = r1[tx.hi * channels + c];
                let bottom = a + (b - a) * tx.frac;
                dst[ox * channels + c] = top + (bottom - top) * ty.frac;
            }
        }
    }
    out
}

/// 8-bit bilinear resize.
pub fn resize_image(image: &ImageBuffer, width: usize, height: usize) -> ImageBuffer {
    if image.dims() == (width, height) {
        return image.clone();
    }
    image.to_field().resize(width, height).quantize()
}
