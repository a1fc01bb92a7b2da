//! Image buffers and the pixel-level primitives used by the pipeline.
//!
//! Geometry is in pixel units with the origin at the top-left corner and
//! `y` growing downward. Color images are stored as interleaved RGB.

use std::fmt;

pub mod io;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RasterError {
    #[error("image is degenerate ({width}x{height})")]
    DegenerateImage { width: u32, height: u32 },
    #[error("expected {expected} channel(s), found {found}")]
    WrongChannelCount { expected: u8, found: u8 },
    #[error("crop rectangle does not intersect the image")]
    EmptyIntersection,
    #[error("buffer length {len} does not match {width}x{height}x{channels}")]
    BadBuffer {
        width: u32,
        height: u32,
        channels: u8,
        len: usize,
    },
}

/// Axis-aligned rectangle in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Builds a rectangle from signed, possibly out-of-range edges, clamped
    /// to `width` x `height`. Returns `None` when nothing remains.
    pub fn clamped(x0: i64, y0: i64, x1: i64, y1: i64, width: u32, height: u32) -> Option<Self> {
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(width as i64);
        let y1 = y1.min(height as i64);
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(Self::new(x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32))
    }

    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x as f64 && y >= self.y as f64 && x < self.right() as f64 && y < self.bottom() as f64
    }
}

/// Angle in degrees, counter-clockwise as seen on screen, measured from +x.
/// Always normalized to (-180, 180].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn degrees(value: f64) -> Self {
        let mut v = value % 360.0;
        if v <= -180.0 {
            v += 360.0;
        } else if v > 180.0 {
            v -= 360.0;
        }
        Angle(v)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn radians(self) -> f64 {
        self.0.to_radians()
    }

    /// Distance to `other` when directions are unsigned (mod 180).
    pub fn line_distance(self, other: Angle) -> f64 {
        let d = (self.0 - other.0).rem_euclid(180.0);
        d.min(180.0 - d)
    }
}

impl std::ops::Add for Angle {
    type Output = Angle;
    fn add(self, rhs: Angle) -> Angle {
        Angle::degrees(self.0 + rhs.0)
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle::degrees(-self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}°", self.0)
    }
}

/// Row-major interleaved 8-bit image with 1 (gray) or 3 (RGB) channels.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("channels", &self.channels)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn from_raw(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::DegenerateImage { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(RasterError::WrongChannelCount {
                expected: 3,
                found: channels,
            });
        }
        if data.len() != width as usize * height as usize * channels as usize {
            return Err(RasterError::BadBuffer {
                width,
                height,
                channels,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// A `width` x `height` RGB image filled with `color`.
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let data = color
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Self {
            width,
            height,
            channels: 3,
            data,
        }
    }

    pub fn filled_gray(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            channels: 1,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Samples of the pixel at (x, y).
    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels as usize]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.data[o..o + c]
    }

    /// RGB triple of a pixel; gray images replicate their single sample.
    #[inline]
    pub fn rgb(&self, x: u32, y: u32) -> [u8; 3] {
        let p = self.pixel(x, y);
        if self.channels == 1 {
            [p[0]; 3]
        } else {
            [p[0], p[1], p[2]]
        }
    }

    pub fn put_rgb(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        if self.channels == 1 {
            self.pixel_mut(x, y)[0] = luma(rgb);
        } else {
            self.pixel_mut(x, y).copy_from_slice(&rgb);
        }
    }

    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            data,
        }
    }

    pub fn to_gray(&self) -> RasterImage {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| luma([p[0], p[1], p[2]]))
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Per-channel median of the outermost ring of pixels.
    pub fn median_border_color(&self) -> [u8; 3] {
        let mut samples: [Vec<u8>; 3] = Default::default();
        let mut push = |x: u32, y: u32| {
            let c = self.rgb(x, y);
            for (s, v) in samples.iter_mut().zip(c) {
                s.push(v);
            }
        };
        for x in 0..self.width {
            push(x, 0);
            if self.height > 1 {
                push(x, self.height - 1);
            }
        }
        for y in 1..self.height.saturating_sub(1) {
            push(0, y);
            if self.width > 1 {
                push(self.width - 1, y);
            }
        }
        let mut out = [0u8; 3];
        for (o, s) in out.iter_mut().zip(samples.iter_mut()) {
            s.sort_unstable();
            *o = s[s.len() / 2];
        }
        out
    }

    /// Bilinear sample at continuous pixel coordinates (pixel centers at
    /// integers). Coordinates are clamped to the image.
    pub fn sample_bilinear(&self, x: f64, y: f64, out: &mut [f64]) {
        let x = x.clamp(0.0, (self.width - 1) as f64);
        let y = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = x.floor() as u32;
        let y0 = y.floor() as u32;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let (p00, p10, p01, p11) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        for c in 0..self.channels as usize {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = top * (1.0 - fy) + bottom * fy;
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }
}

/// Rec. 601 luma, rounded.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let v = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    v.round().clamp(0.0, 255.0) as u8
}

/// HSV image with H on the 0..180 half-degree scale, S and V on 0..=255.
#[derive(Clone, PartialEq, Eq)]
pub struct HsvImage(RasterImage);

impl fmt::Debug for HsvImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HsvImage")
            .field("width", &self.0.width)
            .field("height", &self.0.height)
            .finish_non_exhaustive()
    }
}

impl HsvImage {
    pub fn width(&self) -> u32 {
        self.0.width
    }

    pub fn height(&self) -> u32 {
        self.0.height
    }

    #[inline]
    pub fn hsv(&self, x: u32, y: u32) -> [u8; 3] {
        let p = self.0.pixel(x, y);
        [p[0], p[1], p[2]]
    }

    /// Underlying buffer (channels interpreted as H, S, V).
    pub fn as_raster(&self) -> &RasterImage {
        &self.0
    }

    /// Wraps a buffer whose channels already hold H, S, V.
    pub fn from_hsv_raster(img: RasterImage) -> Result<HsvImage, RasterError> {
        if img.channels != 3 {
            return Err(RasterError::WrongChannelCount {
                expected: 3,
                found: img.channels,
            });
        }
        Ok(HsvImage(img))
    }

    pub fn blurred(&self) -> HsvImage {
        HsvImage(gaussian_blur_3x3(&self.0))
    }
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

/// Converts one RGB pixel to 8-bit HSV (H in half-degrees).
pub fn rgb_to_hsv(rgb: [u8; 3]) -> [u8; 3] {
    let [r, g, b] = rgb.map(|v| v as f64);
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    let diff = v - min;
    let s = if v == 0.0 { 0.0 } else { round_half_up(255.0 * diff / v) };
    let h = if diff == 0.0 {
        0.0
    } else {
        let deg = if v == r {
            60.0 * (g - b) / diff
        } else if v == g {
            120.0 + 60.0 * (b - r) / diff
        } else {
            240.0 + 60.0 * (r - g) / diff
        };
        let deg = if deg < 0.0 { deg + 360.0 } else { deg };
        let half = round_half_up(deg / 2.0);
        if half >= 180.0 {
            half - 180.0
        } else {
            half
        }
    };
    [h as u8, s as u8, v as u8]
}

/// Inverse of [`rgb_to_hsv`] up to quantization: hue has 2° bins, so dark
/// saturated colors can come back a few levels off.
pub fn hsv_to_rgb(hsv: [u8; 3]) -> [u8; 3] {
    let h = hsv[0] as f64 * 2.0;
    let s = hsv[1] as f64 / 255.0;
    let v = hsv[2] as f64;
    let c = v * s;
    let hp = (h / 60.0) % 6.0;
    let x = c * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| round_half_up(ch + m).clamp(0.0, 255.0) as u8)
}

pub fn to_hsv(img: &RasterImage) -> Result<HsvImage, RasterError> {
    if img.channels != 3 {
        return Err(RasterError::WrongChannelCount {
            expected: 3,
            found: img.channels,
        });
    }
    let data = img
        .data
        .chunks_exact(3)
        .flat_map(|p| rgb_to_hsv([p[0], p[1], p[2]]))
        .collect();
    Ok(HsvImage(img.with_data(data)))
}

impl RasterImage {
    fn with_data(&self, data: Vec<u8>) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data,
        }
    }
}

/// 3x3 binomial blur, kernel (1 2 1; 2 4 2; 1 2 1)/16, edges replicated.
pub fn gaussian_blur_3x3(img: &RasterImage) -> RasterImage {
    const K: [u32; 3] = [1, 2, 1];
    let (w, h, c) = (img.width as i64, img.height as i64, img.channels as usize);
    let mut out = vec![0u8; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                let mut acc = 0u32;
                for (ky, wy) in K.iter().enumerate() {
                    let sy = (y + ky as i64 - 1).clamp(0, h - 1);
                    for (kx, wx) in K.iter().enumerate() {
                        let sx = (x + kx as i64 - 1).clamp(0, w - 1);
                        let v = img.data[(sy as usize * w as usize + sx as usize) * c + ch] as u32;
                        acc += v * wx * wy;
                    }
                }
                out[(y as usize * w as usize + x as usize) * c + ch] = ((acc + 8) / 16) as u8;
            }
        }
    }
    img.with_data(out)
}

/// Scales the image so its longest edge equals `target`, bilinear sampling
/// with pixel-center alignment.
pub fn resize_longest_edge(img: &RasterImage, target: u32) -> Result<RasterImage, RasterError> {
    if img.width < 2 || img.height < 2 {
        return Err(RasterError::DegenerateImage {
            width: img.width,
            height: img.height,
        });
    }
    let target = target.max(1);
    let (w, h) = (img.width as f64, img.height as f64);
    let (ow, oh) = if img.width >= img.height {
        (target, ((h * target as f64 / w).round() as u32).max(1))
    } else {
        (((w * target as f64 / h).round() as u32).max(1), target)
    };
    if ow == img.width && oh == img.height {
        return Ok(img.clone());
    }
    Ok(resize_exact(img, ow, oh))
}

/// Bilinear resize to an exact size.
pub fn resize_exact(img: &RasterImage, ow: u32, oh: u32) -> RasterImage {
    let sx = img.width as f64 / ow as f64;
    let sy = img.height as f64 / oh as f64;
    let c = img.channels as usize;
    let mut data = Vec::with_capacity(ow as usize * oh as usize * c);
    let mut px = [0.0f64; 3];
    for y in 0..oh {
        let fy = (y as f64 + 0.5) * sy - 0.5;
        for x in 0..ow {
            let fx = (x as f64 + 0.5) * sx - 0.5;
            img.sample_bilinear(fx, fy, &mut px);
            data.extend(px[..c].iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    RasterImage {
        width: ow,
        height: oh,
        channels: img.channels,
        data,
    }
}

/// Maps coordinates between a source image and its rotated canvas.
#[derive(Debug, Clone, Copy)]
pub struct RotationTransform {
    pub angle: Angle,
    cos: f64,
    sin: f64,
    src_center: (f64, f64),
    dst_center: (f64, f64),
}

impl RotationTransform {
    /// Rotation of a `src_w` x `src_h` image about its center onto a canvas
    /// of `dst_w` x `dst_h`.
    pub fn new(angle: Angle, src_w: u32, src_h: u32, dst_w: u32, dst_h: u32) -> Self {
        let r = angle.radians();
        Self {
            angle,
            cos: r.cos(),
            sin: r.sin(),
            src_center: ((src_w as f64 - 1.0) / 2.0, (src_h as f64 - 1.0) / 2.0),
            dst_center: ((dst_w as f64 - 1.0) / 2.0, (dst_h as f64 - 1.0) / 2.0),
        }
    }

    /// Size of the canvas that holds the whole rotated `w` x `h` image.
    pub fn canvas_size(angle: Angle, w: u32, h: u32) -> (u32, u32) {
        let r = angle.radians();
        let (c, s) = (r.cos().abs(), r.sin().abs());
        let cw = (w as f64 * c + h as f64 * s - 1e-9).ceil().max(1.0) as u32;
        let ch = (w as f64 * s + h as f64 * c - 1e-9).ceil().max(1.0) as u32;
        (cw, ch)
    }

    /// Source coordinates to rotated-canvas coordinates.
    pub fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.src_center.0;
        let dy = y - self.src_center.1;
        (
            dx * self.cos + dy * self.sin + self.dst_center.0,
            -dx * self.sin + dy * self.cos + self.dst_center.1,
        )
    }

    /// Rotated-canvas coordinates back to source coordinates.
    pub fn inverse(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.dst_center.0;
        let dy = y - self.dst_center.1;
        (
            dx * self.cos - dy * self.sin + self.src_center.0,
            dx * self.sin + dy * self.cos + self.src_center.1,
        )
    }
}

#[derive(Debug, Clone)]
pub struct Rotated {
    pub image: RasterImage,
    pub transform: RotationTransform,
}

/// Rotates counter-clockwise (on screen) about the image center. The canvas
/// grows to hold the whole source; uncovered pixels get `fill`, or the
/// median border color of the source when `fill` is `None`.
pub fn rotate_about_center(img: &RasterImage, angle: Angle, fill: Option<[u8; 3]>) -> Rotated {
    let (cw, ch) = RotationTransform::canvas_size(angle, img.width, img.height);
    let transform = RotationTransform::new(angle, img.width, img.height, cw, ch);
    if angle.value() == 0.0 {
        return Rotated {
            image: img.clone(),
            transform,
        };
    }
    let fill = fill.unwrap_or_else(|| img.median_border_color());
    let fill_px: Vec<u8> = if img.channels == 1 {
        vec![luma(fill)]
    } else {
        fill.to_vec()
    };
    let c = img.channels as usize;
    let (maxx, maxy) = ((img.width - 1) as f64, (img.height - 1) as f64);
    const EPS: f64 = 1e-6;
    let mut data = Vec::with_capacity(cw as usize * ch as usize * c);
    let mut px = [0.0f64; 3];
    for y in 0..ch {
        for x in 0..cw {
            let (sx, sy) = transform.inverse(x as f64, y as f64);
            if sx < -EPS || sy < -EPS || sx > maxx + EPS || sy > maxy + EPS {
                data.extend_from_slice(&fill_px);
            } else {
                img.sample_bilinear(sx, sy, &mut px);
                data.extend(px[..c].iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
            }
        }
    }
    Rotated {
        image: RasterImage {
            width: cw,
            height: ch,
            channels: img.channels,
            data,
        },
        transform,
    }
}

/// Copies the part of `rect` that lies inside the image.
pub fn crop(img: &RasterImage, rect: Rect) -> Result<RasterImage, RasterError> {
    let r = Rect::clamped(
        rect.x as i64,
        rect.y as i64,
        rect.x as i64 + rect.w as i64,
        rect.y as i64 + rect.h as i64,
        img.width,
        img.height,
    )
    .ok_or(RasterError::EmptyIntersection)?;
    let c = img.channels as usize;
    let mut data = Vec::with_capacity(r.w as usize * r.h as usize * c);
    for y in r.y..r.bottom() {
        let start = img.offset(r.x, y);
        data.extend_from_slice(&img.data[start..start + r.w as usize * c]);
    }
    Ok(RasterImage {
        width: r.w,
        height: r.h,
        channels: img.channels,
        data,
    })
}

/// Rotation by exactly 180 degrees (no resampling).
pub fn rotate_180(img: &RasterImage) -> RasterImage {
    let c = img.channels as usize;
    let mut data = Vec::with_capacity(img.data.len());
    for px in img.data.chunks_exact(c).rev() {
        data.extend_from_slice(px);
    }
    img.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb_from_fn(w: u32, h: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> RasterImage {
        let mut img = RasterImage::filled(w, h, [0, 0, 0]);
        for y in 0..h {
            for x in 0..w {
                img.put_rgb(x, y, f(x, y));
            }
        }
        img
    }

    #[test]
    fn resize_exact_ratio() {
        let img = RasterImage::filled(4000, 3000, [10, 20, 30]);
        let out = resize_longest_edge(&img, 1000).unwrap();
        assert_eq!((out.width(), out.height()), (1000, 750));
        assert!(out.data().chunks(3).all(|p| p == [10, 20, 30]));
    }

    #[test]
    fn resize_identity() {
        let img = rgb_from_fn(100, 100, |x, y| [(x * 2) as u8, (y * 2) as u8, ((x + y) % 256) as u8]);
        assert_eq!(resize_longest_edge(&img, 100).unwrap(), img);
    }

    #[test]
    fn resize_checkerboard_bilinear() {
        // 3x2 checkerboard of 0/255, doubled to 6x4. Hand-evaluated with
        // src = (dst + 0.5) / 2 - 0.5, clamped to the image:
        //   x: 0→0, 1→0.25, 2→0.75, 3→1.25, 4→1.75, 5→2
        //   y: 0→0, 1→0.25, 2→0.75, 3→1
        // Source row 0 = [0,255,0], row 1 = [255,0,255].
        let img = RasterImage::from_raw(3, 2, 1, vec![0, 255, 0, 255, 0, 255]).unwrap();
        let out = resize_longest_edge(&img, 6).unwrap();
        assert_eq!((out.width(), out.height()), (6, 4));
        let expected: [[u8; 6]; 4] = [
            // row y=0: values of row 0 at the x positions
            [0, 64, 191, 191, 64, 0],
            // y=0.25: 0.75*row0 + 0.25*row1
            [64, 96, 159, 159, 96, 64],
            // y=0.75
            [191, 159, 96, 96, 159, 191],
            // y=1: row 1
            [255, 191, 64, 64, 191, 255],
        ];
        for (y, row) in expected.iter().enumerate() {
            for (x, &v) in row.iter().enumerate() {
                assert_eq!(out.pixel(x as u32, y as u32)[0], v, "pixel ({x},{y})");
            }
        }
    }

    #[test]
    fn resize_rejects_degenerate() {
        let img = RasterImage::filled(1, 10, [0, 0, 0]);
        assert!(matches!(
            resize_longest_edge(&img, 100),
            Err(RasterError::DegenerateImage { .. })
        ));
    }

    #[test]
    fn hsv_primaries_and_gray() {
        assert_eq!(rgb_to_hsv([255, 0, 0]), [0, 255, 255]);
        assert_eq!(rgb_to_hsv([128, 128, 128]), [0, 0, 128]);
        // 120 degrees -> 60 half-degrees
        assert_eq!(rgb_to_hsv([0, 255, 0]), [60, 255, 255]);
        assert_eq!(rgb_to_hsv([0, 0, 255]), [120, 255, 255]);
        assert_eq!(rgb_to_hsv([0, 0, 0]), [0, 0, 0]);
    }

    #[test]
    fn hsv_needs_three_channels() {
        let gray = RasterImage::filled_gray(4, 4, 9);
        assert_eq!(
            to_hsv(&gray).unwrap_err(),
            RasterError::WrongChannelCount { expected: 3, found: 1 }
        );
    }

    #[test]
    fn blur_constant_and_impulse() {
        let flat = RasterImage::filled(7, 5, [90, 91, 92]);
        assert_eq!(gaussian_blur_3x3(&flat), flat);

        let mut data = vec![0u8; 25];
        data[12] = 255;
        let img = RasterImage::from_raw(5, 5, 1, data).unwrap();
        let out = gaussian_blur_3x3(&img);
        // 255*4/16 = 63.75, 255*2/16 = 31.875, 255/16 = 15.9375
        assert_eq!(out.pixel(2, 2)[0], 64);
        for (x, y) in [(1, 2), (3, 2), (2, 1), (2, 3)] {
            assert_eq!(out.pixel(x, y)[0], 32);
        }
        for (x, y) in [(1, 1), (3, 1), (1, 3), (3, 3)] {
            assert_eq!(out.pixel(x, y)[0], 16);
        }
        assert_eq!(out.pixel(0, 0)[0], 0);

        let one = RasterImage::from_raw(1, 1, 3, vec![1, 2, 3]).unwrap();
        assert_eq!(gaussian_blur_3x3(&one), one);
    }

    #[test]
    fn rotate_zero_and_ninety() {
        let img = rgb_from_fn(5, 3, |x, y| [(x * 40) as u8, (y * 80) as u8, 7]);
        let r0 = rotate_about_center(&img, Angle::degrees(0.0), None);
        assert_eq!(r0.image, img);

        let r90 = rotate_about_center(&img, Angle::degrees(90.0), Some([1, 1, 1]));
        assert_eq!((r90.image.width(), r90.image.height()), (3, 5));
        for y in 0..3 {
            for x in 0..5 {
                assert_eq!(r90.image.rgb(y, 5 - 1 - x), img.rgb(x, y), "({x},{y})");
            }
        }
        let (fx, fy) = r90.transform.forward(4.0, 0.0);
        assert!((fx - 0.0).abs() < 1e-9 && (fy - 0.0).abs() < 1e-9);
    }

    #[test]
    fn rotate_thirty_canvas() {
        let img = RasterImage::filled(100, 50, [5, 5, 5]);
        let r = rotate_about_center(&img, Angle::degrees(30.0), None);
        let c = 30f64.to_radians().cos();
        let s = 30f64.to_radians().sin();
        let w = (100.0 * c + 50.0 * s).ceil() as u32;
        let h = (100.0 * s + 50.0 * c).ceil() as u32;
        assert_eq!((r.image.width(), r.image.height()), (w, h));
        assert_eq!((w, h), (112, 94));
    }

    #[test]
    fn crop_cases() {
        let img = rgb_from_fn(4, 4, |x, y| [(y * 4 + x) as u8, 0, 0]);
        assert_eq!(crop(&img, Rect::new(0, 0, 4, 4)).unwrap(), img);
        let c = crop(&img, Rect::new(1, 2, 2, 2)).unwrap();
        let got: Vec<u8> = c.data().chunks(3).map(|p| p[0]).collect();
        assert_eq!(got, vec![9, 10, 13, 14]);
        let wide = crop(&img, Rect::new(2, 0, 12, 4)).unwrap();
        assert_eq!((wide.width(), wide.height()), (2, 4));
        assert_eq!(
            crop(&img, Rect::new(10, 10, 2, 2)).unwrap_err(),
            RasterError::EmptyIntersection
        );
    }

    #[test]
    fn angle_normalization() {
        assert_eq!(Angle::degrees(180.0).value(), 180.0);
        assert_eq!(Angle::degrees(-180.0).value(), 180.0);
        assert_eq!(Angle::degrees(270.0).value(), -90.0);
        assert!((Angle::degrees(89.0).line_distance(Angle::degrees(-89.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotate_180_reverses() {
        let img = rgb_from_fn(3, 2, |x, y| [(x + 10 * y) as u8, 0, 0]);
        let r = rotate_180(&img);
        assert_eq!(r.rgb(0, 0), img.rgb(2, 1));
        assert_eq!(rotate_180(&r), img);
    }

    #[test]
    fn hsv_round_trip_bound() {
        // 2° hue bins cap the achievable accuracy; worst case on this grid
        // is (17, 221, 34) -> (17, 221, 38)
        let mut worst = 0i32;
        for r in (0..=255).step_by(17) {
            for g in (0..=255).step_by(17) {
                for b in (0..=255).step_by(17) {
                    let back = hsv_to_rgb(rgb_to_hsv([r as u8, g as u8, b as u8]));
                    for (x, y) in [r, g, b].iter().zip(back) {
                        worst = worst.max((*x - y as i32).abs());
                    }
                }
            }
        }
        assert!(worst <= 4, "worst {worst}");
        assert_eq!(hsv_to_rgb(rgb_to_hsv([17, 221, 34])), [17, 221, 38]);
    }
}
