//! Raster buffers, PNG I/O, analysis resizing and colour-space primitives.

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

use crate::config::AnalysisConfig;
use crate::filter::sample_bilinear;
use crate::scalar::{quantize_u8, Scalar};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("cannot decode {}: {reason}", .path.display())]
    DecodeError { path: PathBuf, reason: String },
    #[error("cannot write {}: {reason}", .path.display())]
    EncodeError { path: PathBuf, reason: String },
    #[error("invalid raster: {0}")]
    InvalidDimensions(String),
}

/// Row-major 8-bit RGB raster.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageRgb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ImageRgb({}x{})", self.width, self.height)
    }
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions(format!("{width}x{height}")));
        }
        if data.len() != width * height * 3 {
            return Err(ImageError::InvalidDimensions(format!(
                "{width}x{height} RGB needs {} samples, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    /// Image filled with one colour.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "empty raster");
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "empty raster");
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One colour channel (0 = R, 1 = G, 2 = B) as a real-valued plane.
    pub fn channel<T: Scalar>(&self, c: usize) -> Plane<T> {
        assert!(c < 3);
        let data = self.data.iter().skip(c).step_by(3).map(|&v| T::from_byte(v)).collect();
        Plane::from_vec(self.width, self.height, data)
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let buf = image::RgbImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer size checked at construction");
        encode(DynamicImage::ImageRgb8(buf))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        write_file(path, &self.encode_png())
    }
}

/// Row-major 8-bit single-channel raster.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageGray {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageGray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ImageGray({}x{})", self.width, self.height)
    }
}

impl ImageGray {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::InvalidDimensions(format!(
                "{width}x{height} gray with {} samples",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_mask(width: usize, height: usize, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), width * height);
        let data = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Replicates the luminance into three equal channels.
    pub fn to_rgb(&self) -> ImageRgb {
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        ImageRgb { width: self.width, height: self.height, data }
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let buf = image::GrayImage::from_raw(self.width as u32, self.height as u32, self.data.clone())
            .expect("buffer size checked at construction");
        encode(DynamicImage::ImageLuma8(buf))
    }

    pub fn save_png(&self, path: &Path) -> Result<(), ImageError> {
        write_file(path, &self.encode_png())
    }
}

/// Real-valued single-channel buffer used by the filtering kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![T::zero(); width * height] }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "plane size mismatch");
        Self { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Sample with coordinates clamped to the border.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { width: self.width, height: self.height, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!((self.width, self.height), (other.width, other.height));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { width: self.width, height: self.height, data }
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn mean(&self) -> T {
        self.data.iter().copied().sum::<T>() / T::from_len(self.data.len())
    }
}

fn encode(img: DynamicImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ImageError> {
    std::fs::write(path, bytes)
        .map_err(|e| ImageError::EncodeError { path: path.to_path_buf(), reason: e.to_string() })
}

/// Reads a PNG, compositing any alpha channel over white.
pub fn load_image(path: &Path) -> Result<ImageRgb, ImageError> {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ImageError::FileNotFound(path.to_path_buf()))
        }
        Err(e) => {
            return Err(ImageError::DecodeError { path: path.to_path_buf(), reason: e.to_string() })
        }
    };
    decode_png(&bytes).map_err(|reason| ImageError::DecodeError { path: path.to_path_buf(), reason })
}

pub fn decode_png(bytes: &[u8]) -> Result<ImageRgb, String> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| e.to_string())?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = if img.color().has_alpha() {
        let rgba = img.to_rgba8();
        let mut data = Vec::with_capacity(w * h * 3);
        for p in rgba.pixels() {
            let a = f64::from(p[3]);
            for c in 0..3 {
                let v = (f64::from(p[c]) * a + 255.0 * (255.0 - a)) / 255.0;
                data.push(quantize_u8(v));
            }
        }
        data
    } else {
        img.to_rgb8().into_raw()
    };
    ImageRgb::new(w, h, data).map_err(|e| e.to_string())
}

/// Output dimensions for the analysis raster: longest side capped at
/// `max_dimension`, the other side scaled and rounded.
pub fn analysis_dimensions(width: usize, height: usize, max_dimension: usize) -> (usize, usize) {
    let longest = width.max(height);
    if longest <= max_dimension {
        return (width, height);
    }
    let scale = |side: usize| -> usize {
        ((side as f64 * max_dimension as f64 / longest as f64).round() as usize).max(1)
    };
    if width >= height {
        (max_dimension, scale(height))
    } else {
        (scale(width), max_dimension)
    }
}

pub fn resize_to_analysis(img: &ImageRgb, cfg: &AnalysisConfig) -> ImageRgb {
    let (w, h) = analysis_dimensions(img.width, img.height, cfg.max_dimension);
    if (w, h) == (img.width, img.height) {
        return img.clone();
    }
    resize_bilinear(img, w, h)
}

/// Bilinear resampling with pixel-centre alignment.
pub fn resize_bilinear(img: &ImageRgb, width: usize, height: usize) -> ImageRgb {
    let planes: Vec<Plane<f64>> = (0..3).map(|c| img.channel(c)).collect();
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    ImageRgb::from_fn(width, height, |x, y| {
        let fx = (x as f64 + 0.5) * sx - 0.5;
        let fy = (y as f64 + 0.5) * sy - 0.5;
        let mut px = [0u8; 3];
        for (c, plane) in planes.iter().enumerate() {
            px[c] = quantize_u8(sample_bilinear(plane, fx, fy));
        }
        px
    })
}

/// Weighted luminance `0.299 R + 0.587 G + 0.114 B`, rounded half away.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * f64::from(rgb[0]) + 0.587 * f64::from(rgb[1]) + 0.114 * f64::from(rgb[2]);
    quantize_u8(y)
}

pub fn to_grayscale(img: &ImageRgb) -> ImageGray {
    let data = img.pixels().map(luma).collect();
    ImageGray { width: img.width, height: img.height, data }
}

/// sRGB electro-optical transfer function for one 8-bit level.
#[inline]
pub fn srgb_to_linear<T: Scalar>(v: u8) -> T {
    let c = f64::from(v) / 255.0;
    let lin = if c <= 0.04045 { c / 12.92 } else { ((c + 0.055) / 1.055).powf(2.4) };
    T::lit(lin)
}

/// Inverse transfer: clamps to `[0, 1]` and quantizes to 8 bits.
#[inline]
pub fn linear_to_srgb<T: Scalar>(v: T) -> u8 {
    let c = v.as_f64().clamp(0.0, 1.0);
    let enc = if c <= 0.0031308 { c * 12.92 } else { 1.055 * c.powf(1.0 / 2.4) - 0.055 };
    quantize_u8(enc * 255.0)
}

/// Linear-light RGB, interleaved like [`ImageRgb`].
#[derive(Clone, Debug, PartialEq)]
pub struct LinearRgb<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

pub fn srgb_decode<T: Scalar>(img: &ImageRgb) -> LinearRgb<T> {
    let lut: Vec<T> = (0..=255u8).map(srgb_to_linear).collect();
    let data = img.data.iter().map(|&v| lut[v as usize]).collect();
    LinearRgb { width: img.width, height: img.height, data }
}

pub fn srgb_encode<T: Scalar>(lin: &LinearRgb<T>) -> ImageRgb {
    let data = lin.data.iter().map(|&v| linear_to_srgb(v)).collect();
    ImageRgb { width: lin.width, height: lin.height, data }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn png_bytes(img: DynamicImage) -> Vec<u8> {
        encode(img)
    }

    #[test]
    fn decode_identity_rgb() {
        let raw = vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];
        let bytes = png_bytes(DynamicImage::ImageRgb8(image::RgbImage::from_raw(2, 2, raw.clone()).unwrap()));
        let img = decode_png(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.data(), &raw[..]);
    }

    #[test]
    fn transparent_pixel_becomes_white() {
        let raw = vec![10, 20, 30, 0, 10, 20, 30, 255];
        let bytes = png_bytes(DynamicImage::ImageRgba8(image::RgbaImage::from_raw(2, 1, raw).unwrap()));
        let img = decode_png(&bytes).unwrap();
        assert_eq!(img.pixel(0, 0), [255, 255, 255]);
        assert_eq!(img.pixel(1, 0), [10, 20, 30]);
    }

    #[test]
    fn truncated_file_is_decode_error() {
        let img = ImageRgb::filled(8, 8, [9, 9, 9]);
        let bytes = img.encode_png();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.png");
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(load_image(&p), Err(ImageError::DecodeError { .. })));
        assert!(matches!(load_image(&dir.path().join("none.png")), Err(ImageError::FileNotFound(_))));
    }

    #[test]
    fn resize_rules() {
        let cfg = AnalysisConfig::default();
        assert_eq!(analysis_dimensions(640, 480, 1280), (640, 480));
        assert_eq!(analysis_dimensions(2560, 1440, 1280), (1280, 720));
        // round(1000 * 1280 / 1300) = round(984.6) = 985
        assert_eq!(analysis_dimensions(1300, 1000, 1280), (1280, 985));
        assert_eq!(analysis_dimensions(1000, 1300, 1280), (985, 1280));
        let small = ImageRgb::filled(640, 480, [1, 2, 3]);
        assert_eq!(resize_to_analysis(&small, &cfg), small);
        let big = ImageRgb::filled(2560, 1440, [40, 80, 120]);
        let r = resize_to_analysis(&big, &cfg);
        assert_eq!((r.width(), r.height()), (1280, 720));
        assert!(r.pixels().all(|p| p == [40, 80, 120]));
    }

    #[test]
    fn grayscale_examples() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
        assert_eq!(luma([255, 0, 0]), 76);
    }

    #[test]
    fn srgb_examples() {
        assert_eq!(srgb_to_linear::<f64>(0), 0.0);
        assert!((srgb_to_linear::<f64>(255) - 1.0).abs() < 1e-12);
        assert!((srgb_to_linear::<f64>(128) - 0.2158).abs() < 1e-3);
    }

    #[test]
    fn srgb_round_trip_all_levels() {
        for v in 0..=255u8 {
            assert_eq!(linear_to_srgb(srgb_to_linear::<f64>(v)), v);
            assert_eq!(linear_to_srgb(srgb_to_linear::<f32>(v)), v, "f32 level {v}");
        }
    }

    #[test]
    fn invalid_buffers_rejected() {
        assert!(ImageRgb::new(0, 4, vec![]).is_err());
        assert!(ImageRgb::new(2, 2, vec![0; 11]).is_err());
        assert!(ImageGray::new(2, 2, vec![0; 3]).is_err());
    }
}
