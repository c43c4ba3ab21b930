//! Backbone-specific resizing and ImageNet normalization.

use crate::imaging;
use crate::model::BackboneKind;
use image::RgbImage;
use ndarray::Array3;

pub const IMAGENET_MEAN: [f64; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f64; 3] = [0.229, 0.224, 0.225];

/// Resizes to the backbone's native input size, scales to `[0, 1]`, and
/// applies per-channel ImageNet normalization. Output is `(3, H, W)`.
pub fn preprocess(img: &RgbImage, backbone: BackboneKind) -> Array3<f64> {
    let side = backbone.native_input_size();
    let resized = imaging::resize_bilinear(img, side, side);
    let (w, h) = (resized.width() as usize, resized.height() as usize);
    let mut out = Array3::zeros((3, h, w));
    for y in 0..h {
        for x in 0..w {
            let px = resized.get_pixel(x as u32, y as u32);
            for c in 0..3 {
                let v = px[c] as f64 / 255.0;
                out[[c, y, x]] = (v - IMAGENET_MEAN[c]) / IMAGENET_STD[c];
            }
        }
    }
    out
}
