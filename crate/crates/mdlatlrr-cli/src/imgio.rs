//! Grayscale image I/O: 8-bit PNG and binary PGM in, clamped 8-bit out.

use std::fs;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageError, Luma};
use mdlatlrr::{Error, Result};
use ndarray::Array2;

/// Attach the offending path to a bare I/O error.
pub fn named_io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

fn named_image(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(io) => named_io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

/// Load an 8-bit grayscale image and map pixels to [0,1] by /255.
///
/// Anything that is not single-channel 8-bit (RGB, 16-bit, alpha) is
/// rejected; color handling is out of scope.
pub fn load_gray(path: &Path) -> Result<Array2<f64>> {
    let img = image::open(path).map_err(|e| named_image(path, e))?;
    let gray = match img {
        DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 8-bit grayscale, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = gray.dimensions();
    let mut out = Array2::zeros((h as usize, w as usize));
    for (x, y, p) in gray.enumerate_pixels() {
        out[[y as usize, x as usize]] = f64::from(p.0[0]) / 255.0;
    }
    Ok(out)
}

/// Quantize one [0,1] sample to a byte; clamps first, rounds half away
/// from zero.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Write an image as 8-bit grayscale; the extension picks PNG or PGM.
pub fn save_gray(path: &Path, img: &Array2<f64>) -> Result<()> {
    let (h, w) = img.dim();
    let mut out = GrayImage::new(w as u32, h as u32);
    for ((r, c), v) in img.indexed_iter() {
        out.put_pixel(c as u32, r as u32, Luma([quantize(*v)]));
    }
    out.save(path).map_err(|e| named_image(path, e))
}

/// Raw dump: u32-LE height, u32-LE width, then row-major f64-LE samples.
pub fn save_raw(path: &Path, img: &Array2<f64>) -> Result<()> {
    let (h, w) = img.dim();
    let mut buf = Vec::with_capacity(8 + img.len() * 8);
    buf.extend_from_slice(&(h as u32).to_le_bytes());
    buf.extend_from_slice(&(w as u32).to_le_bytes());
    for v in img.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| named_io(path, e))
}
