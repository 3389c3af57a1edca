use crate::error::{Error, Result};
use crate::raster::{FloatField, RgbField};

/// Composites one snow sample: `value * (1 - layer) + layer * 255`.
#[inline]
pub fn blend_sample(value: f64, layer: f64) -> f64 {
    value * (1.0 - layer) + layer * 255.0
}

/// Applies [`blend_sample`] to every channel of every pixel, in place.
///
/// `layer` must match the image dimensions and hold values in `[0, 1]`.
pub fn blend_layer_in_place(image: &mut RgbField, layer: &FloatField) -> Result<()> {
    if image.dims() != layer.dims() {
        return Err(Error::DimensionMismatch {
            expected: image.dims(),
            actual: layer.dims(),
        });
    }
    if let Some(bad) = layer.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidConfig(format!("layer value {bad} outside [0, 1]")));
    }
    for (px, &l) in image.as_mut_slice().chunks_exact_mut(3).zip(layer.as_slice()) {
        if l == 0.0 {
            continue;
        }
        for v in px {
            *v = blend_sample(*v, l);
        }
    }
    Ok(())
}

pub fn blend_layer(image: &RgbField, layer: &FloatField) -> Result<RgbField> {
    let mut out = image.clone();
    blend_layer_in_place(&mut out, layer)?;
    Ok(out)
}
