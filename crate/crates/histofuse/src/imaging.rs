//! RGB tile I/O and geometric transforms shared by the dataset pipeline.

use crate::error::{Error, Result};
use image::{imageops, ImageReader, RgbImage};
use std::path::Path;

/// Loads an image file and converts it to RGB8.
pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::ImageRead {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .with_guessed_format()
        .map_err(|e| Error::ImageRead {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let img = reader.decode().map_err(|e| Error::ImageRead {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(img.to_rgb8())
}

pub fn save_png(path: &Path, img: &RgbImage) -> Result<()> {
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::ImageRead {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
}

/// Bilinear resize to an exact target size.
pub fn resize_bilinear(img: &RgbImage, width: u32, height: u32) -> RgbImage {
    if img.width() == width && img.height() == height {
        return img.clone();
    }
    imageops::resize(img, width, height, imageops::FilterType::Triangle)
}

pub fn flip_horizontal(img: &RgbImage) -> RgbImage {
    imageops::flip_horizontal(img)
}

/// Mirror-reflect an index into `[0, n)`.
fn reflect(mut i: i64, n: i64) -> i64 {
    debug_assert!(n > 0);
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i;
        }
    }
}

/// Rotates around the image center by `angle_deg` (counter-clockwise),
/// sampling with bilinear interpolation and reflected borders.
pub fn rotate_reflect(img: &RgbImage, angle_deg: f64) -> RgbImage {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let theta = angle_deg.to_radians();
    let (sin, cos) = theta.sin_cos();

    let mut out = RgbImage::new(img.width(), img.height());
    for y in 0..h {
        for x in 0..w {
            // inverse mapping: rotate the output coordinate back into the source
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;

            let x0 = sx.floor() as i64;
            let y0 = sy.floor() as i64;
            let fx = sx - x0 as f64;
            let fy = sy - y0 as f64;

            let mut px = [0u8; 3];
            for c in 0..3 {
                let v00 = img.get_pixel(reflect(x0, w) as u32, reflect(y0, h) as u32)[c] as f64;
                let v10 = img.get_pixel(reflect(x0 + 1, w) as u32, reflect(y0, h) as u32)[c] as f64;
                let v01 = img.get_pixel(reflect(x0, w) as u32, reflect(y0 + 1, h) as u32)[c] as f64;
                let v11 =
                    img.get_pixel(reflect(x0 + 1, w) as u32, reflect(y0 + 1, h) as u32)[c] as f64;
                let top = v00 * (1.0 - fx) + v10 * fx;
                let bot = v01 * (1.0 - fx) + v11 * fx;
                px[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
            }
            out.put_pixel(x as u32, y as u32, image::Rgb(px));
        }
    }
    out
}
