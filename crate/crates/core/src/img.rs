//! Float images, PNG I/O, the raw float dump format, and PSNR.
//!
//! Images are linear RGB in row-major order. Values are unbounded during
//! rendering and loss computation; they are clamped to [0, 1] only when
//! quantizing for PNG output.

use crate::{Error, Result, Rgb};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<Rgb>,
}

impl FloatImage {
    pub fn new(width: u32, height: u32) -> Self {
        FloatImage {
            width,
            height,
            data: vec![[0.0; 3]; (width * height) as usize],
        }
    }

    pub fn filled(width: u32, height: u32, value: Rgb) -> Self {
        FloatImage {
            width,
            height,
            data: vec![value; (width * height) as usize],
        }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, value: Rgb) {
        self.data[(y * self.width + x) as usize] = value;
    }

    pub fn same_dims(&self, other: &FloatImage) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.width, self.height),
                got: format!("{}x{}", other.width, other.height),
            });
        }
        Ok(())
    }

    /// Returns a copy with every channel clamped to [0, 1].
    pub fn clamped(&self) -> FloatImage {
        let mut out = self.clone();
        for px in out.data.iter_mut() {
            for ch in px.iter_mut() {
                *ch = ch.clamp(0.0, 1.0);
            }
        }
        out
    }

    pub fn mse(&self, other: &FloatImage) -> Result<f64> {
        self.same_dims(other)?;
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            for ch in 0..3 {
                let d = a[ch] - b[ch];
                acc += d * d;
            }
        }
        Ok(acc / (self.data.len() as f64 * 3.0))
    }

    /// Writes an 8-bit PNG (values clamped and quantized here, nowhere else).
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut img = image::RgbImage::new(self.width, self.height);
        for (y, row) in img.rows_mut().enumerate() {
            for (x, px) in row.enumerate() {
                let v = self.pixel(x as u32, y as u32);
                *px = image::Rgb([
                    (v[0].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (v[1].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (v[2].clamp(0.0, 1.0) * 255.0).round() as u8,
                ]);
            }
        }
        img.save(path)?;
        Ok(())
    }

    /// Loads a PNG. RGBA input is alpha-composited onto `background`
    /// (`c = a*c + (1-a)*bg`); 8-bit channels map to [0, 1] by /255.
    pub fn load_png(path: &Path, background: Rgb) -> Result<FloatImage> {
        let img = image::open(path)?.into_rgba8();
        let (width, height) = img.dimensions();
        let mut out = FloatImage::new(width, height);
        for (x, y, px) in img.enumerate_pixels() {
            let a = px[3] as f64 / 255.0;
            let mut v = [0.0; 3];
            for ch in 0..3 {
                let c = px[ch] as f64 / 255.0;
                v[ch] = a * c + (1.0 - a) * background[ch];
            }
            out.set_pixel(x, y, v);
        }
        Ok(out)
    }
}

/// PSNR in dB over [0, 1] floats, `10*log10(1/MSE)`, capped at 99 dB for the
/// identical-image case.
pub fn psnr(a: &FloatImage, b: &FloatImage) -> Result<f64> {
    let mse = a.mse(b)?;
    let v = 10.0 * (1.0 / mse).log10();
    if !v.is_finite() || v > 99.0 {
        Ok(99.0)
    } else {
        Ok(v)
    }
}

const RAW_MAGIC: &[u8; 4] = b"FIMG";
const RAW_VERSION: u32 = 1;

/// Writes the raw float dump: magic `FIMG`, then version, width, height and
/// channel count (3) as little-endian u32, then `width*height*3` f32 values
/// in row-major pixel order, little-endian, without any clamping.
pub fn write_raw(img: &FloatImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(RAW_MAGIC)?;
    w.write_all(&RAW_VERSION.to_le_bytes())?;
    w.write_all(&img.width.to_le_bytes())?;
    w.write_all(&img.height.to_le_bytes())?;
    w.write_all(&3u32.to_le_bytes())?;
    for px in &img.data {
        for ch in 0..3 {
            w.write_all(&(px[ch] as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw(path: &Path) -> Result<FloatImage> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != RAW_MAGIC {
        return Err(Error::Dataset("raw image: bad magic".into()));
    }
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(0);
    if version != RAW_VERSION {
        return Err(Error::Dataset(format!("raw image: bad version {version}")));
    }
    let (width, height, channels) = (word(1), word(2), word(3));
    if channels != 3 {
        return Err(Error::Dataset(format!(
            "raw image: expected 3 channels, got {channels}"
        )));
    }
    let mut out = FloatImage::new(width, height);
    let mut f32buf = [0u8; 4];
    for px in out.data.iter_mut() {
        for ch in 0..3 {
            r.read_exact(&mut f32buf)?;
            px[ch] = f32::from_le_bytes(f32buf) as f64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psnr_examples() {
        let a = FloatImage::filled(4, 4, [0.5, 0.5, 0.5]);
        let b = FloatImage::filled(4, 4, [0.75, 0.75, 0.75]);
        // MSE = 0.0625 -> 10*log10(16) ~ 12.04 dB
        assert_relative_eq!(psnr(&a, &b).unwrap(), 12.041199826559248, epsilon = 1e-9);
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = FloatImage::new(4, 4);
        let b = FloatImage::new(4, 5);
        assert!(a.mse(&b).is_err());
    }

    #[test]
    fn raw_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.fimg");
        let mut img = FloatImage::new(3, 2);
        for (i, px) in img.data.iter_mut().enumerate() {
            // values outside [0,1] must survive the dump
            *px = [i as f64 * 0.7 - 1.0, 0.25, 2.5];
        }
        write_raw(&img, &path).unwrap();
        let back = read_raw(&path).unwrap();
        assert_eq!(back.width, 3);
        assert_eq!(back.height, 2);
        for (a, b) in img.data.iter().zip(&back.data) {
            for ch in 0..3 {
                assert_relative_eq!(a[ch], b[ch], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn png_roundtrip_and_alpha_composite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let mut img = FloatImage::new(2, 2);
        img.set_pixel(0, 0, [1.0, 0.0, 0.0]);
        img.set_pixel(1, 1, [0.0, 0.0, 1.0]);
        img.save_png(&path).unwrap();
        let back = FloatImage::load_png(&path, [0.0; 3]).unwrap();
        assert_eq!(back.pixel(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(back.pixel(1, 1), [0.0, 0.0, 1.0]);

        // fully transparent pixel loads as the background
        let rgba = image::RgbaImage::from_pixel(1, 1, image::Rgba([10, 20, 30, 0]));
        let path2 = dir.path().join("alpha.png");
        rgba.save(&path2).unwrap();
        let white = FloatImage::load_png(&path2, [1.0, 1.0, 1.0]).unwrap();
        assert_eq!(white.pixel(0, 0), [1.0, 1.0, 1.0]);
    }
}
