//! Pixel-grid primitives shared by all detectors.
//!
//! Raster images are plain row-major byte grids; the only file format is
//! binary PNM (P5 grayscale / P6 RGB, maxval 255) so that round-trips are
//! bit-exact. All convolutions use one border policy: mirror about the edge
//! pixel without repeating it (`reflect(-1) == 1`).

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImgError {
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated data: expected {expected} body bytes, found {actual}")]
    TruncatedData { expected: usize, actual: usize },
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error("invalid sigma {0} (must be finite and > 0)")]
    InvalidSigma(f64),
    #[error("image {width}x{height} too small (minimum {min}x{min})")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("invalid image geometry: {0}")]
    InvalidGeometry(String),
}

pub type ImgResult<T> = Result<T, ImgError>;

/// Rectangular 8-bit pixel grid, 1 (gray) or 3 (RGB) channels, row-major,
/// top-left origin. Channel order for RGB is R,G,B.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> ImgResult<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidGeometry(format!(
                "dimensions {width}x{height} must be >= 1"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImgError::InvalidGeometry(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if pixels.len() != width * height * channels {
            return Err(ImgError::InvalidGeometry(format!(
                "pixel buffer length {} != {}x{}x{}",
                pixels.len(),
                width,
                height,
                channels
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> ImgResult<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// RGB triple at (x, y); for grayscale images all three components are
    /// the single intensity.
    pub fn rgb(&self, x: usize, y: usize) -> (u8, u8, u8) {
        debug_assert!(x < self.width && y < self.height);
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            let v = self.pixels[i];
            (v, v, v)
        } else {
            (self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
        }
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: (u8, u8, u8)) {
        debug_assert!(x < self.width && y < self.height);
        let i = (y * self.width + x) * self.channels;
        if self.channels == 1 {
            self.pixels[i] = rgb.0;
        } else {
            self.pixels[i] = rgb.0;
            self.pixels[i + 1] = rgb.1;
            self.pixels[i + 2] = rgb.2;
        }
    }

    /// Copy promoted to 3 channels (no-op on RGB input).
    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let mut pixels = Vec::with_capacity(self.width * self.height * 3);
        for &v in &self.pixels {
            pixels.extend_from_slice(&[v, v, v]);
        }
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            pixels,
        }
    }
}

/// Single-channel 8-bit image; houses the intensity function sampled by the
/// gradient operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> ImgResult<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidGeometry(format!(
                "dimensions {width}x{height} must be >= 1"
            )));
        }
        if pixels.len() != width * height {
            return Err(ImgError::InvalidGeometry(format!(
                "pixel buffer length {} != {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> ImgResult<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn to_raster(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            pixels: self.pixels.clone(),
        }
    }

    /// Float copy with raw intensities (0..255).
    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| p as f64).collect(),
        }
    }

    /// Float copy scaled to [0, 1].
    pub fn to_float_normalized(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| p as f64 / 255.0).collect(),
        }
    }
}

impl TryFrom<RasterImage> for GrayImage {
    type Error = ImgError;

    fn try_from(img: RasterImage) -> ImgResult<GrayImage> {
        if img.channels != 1 {
            return Err(ImgError::InvalidGeometry(format!(
                "expected 1 channel, got {}",
                img.channels
            )));
        }
        Ok(GrayImage {
            width: img.width,
            height: img.height,
            pixels: img.pixels,
        })
    }
}

/// Row-major grid of finite f64 values; holds gradients and response maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> ImgResult<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidGeometry(format!(
                "dimensions {width}x{height} must be >= 1"
            )));
        }
        if values.len() != width * height {
            return Err(ImgError::InvalidGeometry(format!(
                "value buffer length {} != {}x{}",
                values.len(),
                width,
                height
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(ImgError::InvalidGeometry(
                "non-finite value in float image".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeroed(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    /// Elementwise difference `self - other`; panics on dimension mismatch.
    pub fn sub(&self, other: &FloatImage) -> FloatImage {
        assert_eq!(self.width, other.width);
        assert_eq!(self.height, other.height);
        FloatImage {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rounds half-away-from-zero and clamps to the 8-bit range.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .values
                .iter()
                .map(|&v| v.round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }
}

/// Binary grid with one bit (stored as a byte 0/1) per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<u8>) -> ImgResult<Self> {
        if width == 0 || height == 0 {
            return Err(ImgError::InvalidGeometry(format!(
                "dimensions {width}x{height} must be >= 1"
            )));
        }
        if bits.len() != width * height {
            return Err(ImgError::InvalidGeometry(format!(
                "bit buffer length {} != {}x{}",
                bits.len(),
                width,
                height
            )));
        }
        if !bits.iter().all(|&b| b <= 1) {
            return Err(ImgError::InvalidGeometry("mask bit outside {0, 1}".into()));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x] != 0
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }
}

impl fmt::Display for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for y in 0..self.height {
            for x in 0..self.width {
                f.write_str(if self.get(x, y) { "#" } else { "." })?;
            }
            f.write_str("\n")?;
        }
        Ok(())
    }
}

/// Normalized symmetric 1-D convolution kernel of `2*radius + 1` taps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    radius: usize,
    taps: Vec<f64>,
}

impl Kernel1D {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }
}

/// Per-pixel partial derivatives of the intensity function.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub gx: FloatImage,
    pub gy: FloatImage,
}

const WHITESPACE: &[u8] = b" \t\n\r\x0b\x0c";

fn is_ws(b: u8) -> bool {
    WHITESPACE.contains(&b)
}

/// Reads one ASCII unsigned integer token, skipping leading whitespace.
/// Comments are rejected outright to keep headers canonical.
fn read_header_int(bytes: &[u8], pos: &mut usize) -> ImgResult<usize> {
    while *pos < bytes.len() && is_ws(bytes[*pos]) {
        *pos += 1;
    }
    if *pos < bytes.len() && bytes[*pos] == b'#' {
        return Err(ImgError::MalformedHeader(
            "comments are not permitted".into(),
        ));
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if *pos == start {
        return Err(ImgError::MalformedHeader(
            "expected an ASCII integer field".into(),
        ));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ImgError::MalformedHeader("unparseable integer field".into()))
}

/// Loads a binary PNM file (P5 grayscale or P6 RGB, maxval 255).
pub fn load_pnm(path: impl AsRef<Path>) -> ImgResult<RasterImage> {
    let bytes = std::fs::read(path)?;
    load_pnm_bytes(&bytes)
}

pub fn load_pnm_bytes(bytes: &[u8]) -> ImgResult<RasterImage> {
    if bytes.len() < 2 {
        return Err(ImgError::MalformedHeader("file shorter than magic".into()));
    }
    let channels = match &bytes[0..2] {
        b"P5" => 1,
        b"P6" => 3,
        magic => {
            return Err(ImgError::UnsupportedFormat(format!(
                "magic {:?} (only binary P5/P6 accepted)",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let mut pos = 2;
    if pos >= bytes.len() || !is_ws(bytes[pos]) {
        return Err(ImgError::MalformedHeader(
            "magic must be followed by whitespace".into(),
        ));
    }
    let width = read_header_int(bytes, &mut pos)?;
    let height = read_header_int(bytes, &mut pos)?;
    let maxval = read_header_int(bytes, &mut pos)?;
    if maxval != 255 {
        return Err(ImgError::UnsupportedFormat(format!(
            "maxval {maxval} (only 255 accepted)"
        )));
    }
    if width == 0 || height == 0 {
        return Err(ImgError::MalformedHeader("zero image dimension".into()));
    }
    // Exactly one whitespace byte separates the header from the body.
    if pos >= bytes.len() || !is_ws(bytes[pos]) {
        return Err(ImgError::MalformedHeader(
            "missing whitespace after maxval".into(),
        ));
    }
    pos += 1;
    let expected = width * height * channels;
    let body = &bytes[pos..];
    if body.len() < expected {
        return Err(ImgError::TruncatedData {
            expected,
            actual: body.len(),
        });
    }
    RasterImage::new(width, height, channels, body[..expected].to_vec())
}

/// Saves as binary P5 (1 channel) or P6 (3 channels) with maxval 255.
/// `load_pnm(save_pnm(img))` round-trips bit-exactly.
pub fn save_pnm(img: &RasterImage, path: impl AsRef<Path>) -> ImgResult<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    write!(w, "{magic}\n{} {}\n255\n", img.width, img.height)?;
    w.write_all(&img.pixels)?;
    w.flush()?;
    Ok(())
}

pub fn pnm_bytes(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// BT.601 luma conversion (0.299 R + 0.587 G + 0.114 B), rounded
/// half-away-from-zero. Grayscale inputs pass through unchanged.
pub fn to_grayscale(img: &RasterImage) -> GrayImage {
    if img.channels == 1 {
        return GrayImage {
            width: img.width,
            height: img.height,
            pixels: img.pixels.clone(),
        };
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|p| {
            let y = 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64;
            y.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Gaussian taps truncated at radius `ceil(3 sigma)`, normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> ImgResult<Kernel1D> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(ImgError::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let mut taps = Vec::with_capacity(2 * radius + 1);
    for d in -(radius as i64)..=(radius as i64) {
        let d = d as f64;
        taps.push((-d * d / (2.0 * sigma * sigma)).exp());
    }
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    Ok(Kernel1D { radius, taps })
}

/// Mirror-without-edge-repeat index fold: reflect(-1) = 1, reflect(n) = n-2.
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

fn convolve_rows(img: &FloatImage, kernel: &Kernel1D) -> FloatImage {
    let (w, h) = (img.width, img.height);
    let r = kernel.radius as i64;
    let mut out = FloatImage::zeroed(w, h);
    for y in 0..h {
        let row = &img.values[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in kernel.taps.iter().enumerate() {
                let sx = reflect(x as i64 + k as i64 - r, w);
                acc += tap * row[sx];
            }
            out.values[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(img: &FloatImage, kernel: &Kernel1D) -> FloatImage {
    let (w, h) = (img.width, img.height);
    let r = kernel.radius as i64;
    let mut out = FloatImage::zeroed(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, tap) in kernel.taps.iter().enumerate() {
                let sy = reflect(y as i64 + k as i64 - r, h);
                acc += tap * img.values[sy * w + x];
            }
            out.values[y * w + x] = acc;
        }
    }
    out
}

/// Separable Gaussian blur of a float image (horizontal then vertical pass).
pub fn gaussian_blur_float(img: &FloatImage, sigma: f64) -> ImgResult<FloatImage> {
    let kernel = gaussian_kernel(sigma)?;
    Ok(convolve_cols(&convolve_rows(img, &kernel), &kernel))
}

/// Separable Gaussian blur of an 8-bit image; one final rounding step,
/// half-away-from-zero.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> ImgResult<GrayImage> {
    Ok(gaussian_blur_float(&img.to_float(), sigma)?.to_gray())
}

/// Bit = 1 where intensity is strictly greater than `t`.
pub fn threshold_binary(img: &GrayImage, t: u8) -> BinaryMask {
    BinaryMask {
        width: img.width,
        height: img.height,
        bits: img.pixels.iter().map(|&p| (p > t) as u8).collect(),
    }
}

/// Morphological dilation with a full 3x3 structuring element; the
/// neighborhood is clipped at image borders.
pub fn dilate(mask: &BinaryMask, iterations: usize) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut cur = mask.clone();
    for _ in 0..iterations {
        let mut next = BinaryMask::empty(w, h);
        for y in 0..h {
            for x in 0..w {
                let mut hit = false;
                'scan: for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let nx = x as i64 + dx;
                        let ny = y as i64 + dy;
                        if nx >= 0
                            && ny >= 0
                            && (nx as usize) < w
                            && (ny as usize) < h
                            && cur.get(nx as usize, ny as usize)
                        {
                            hit = true;
                            break 'scan;
                        }
                    }
                }
                next.set(x, y, hit);
            }
        }
        cur = next;
    }
    cur
}

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Raw-scale 3x3 Sobel derivatives with the mirror border policy.
pub fn sobel_gradients_float(img: &FloatImage) -> ImgResult<GradientField> {
    let (w, h) = (img.width, img.height);
    if w < 3 || h < 3 {
        return Err(ImgError::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let mut gx = FloatImage::zeroed(w, h);
    let mut gy = FloatImage::zeroed(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut ax = 0.0;
            let mut ay = 0.0;
            for ky in 0..3 {
                let sy = reflect(y as i64 + ky as i64 - 1, h);
                for kx in 0..3 {
                    let sx = reflect(x as i64 + kx as i64 - 1, w);
                    let v = img.values[sy * w + sx];
                    ax += SOBEL_X[ky][kx] * v;
                    ay += SOBEL_Y[ky][kx] * v;
                }
            }
            gx.values[y * w + x] = ax;
            gy.values[y * w + x] = ay;
        }
    }
    Ok(GradientField { gx, gy })
}

/// Sobel partial derivatives of an 8-bit image at raw intensity scale.
pub fn sobel_gradients(img: &GrayImage) -> ImgResult<GradientField> {
    sobel_gradients_float(&img.to_float())
}
