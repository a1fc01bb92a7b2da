//! Color-range segmentation and outer-boundary extraction of 8-connected
//! foreground components.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::raster::{HsvImage, RasterImage};

/// One bit per pixel, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BinaryMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Out-of-bounds coordinates read as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// 3x3 morphological closing: dilation then erosion. Bridges one-pixel
    /// gaps (diagonal joints lost to antialiasing) without growing convex
    /// shapes. Off-image pixels count as foreground for the erosion so the
    /// border does not eat into shapes that touch it.
    pub fn closed(&self) -> BinaryMask {
        let (w, h) = (self.width as i64, self.height as i64);
        let any3 = |m: &BinaryMask, x: i64, y: i64| (-1..=1).any(|dy| (-1..=1).any(|dx| m.get_signed(x + dx, y + dy)));
        let dilated = BinaryMask::from_fn(self.width, self.height, |x, y| any3(self, x as i64, y as i64));
        BinaryMask::from_fn(self.width, self.height, |x, y| {
            (-1..=1).all(|dy| {
                (-1..=1).all(|dx| {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    nx < 0 || ny < 0 || nx >= w || ny >= h || dilated.get(nx as u32, ny as u32)
                })
            })
        })
    }

    /// Foreground 255, background 0; handy for PGM debug dumps.
    pub fn to_raster(&self) -> RasterImage {
        let data = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        RasterImage::from_raw(self.width, self.height, 1, data).expect("mask dimensions are valid")
    }
}

/// Inclusive HSV box. With `hue_wraps` and `lo[0] > hi[0]` the hue interval
/// wraps through 0 (e.g. reds spanning 170..=10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorRange {
    pub lo: [u8; 3],
    pub hi: [u8; 3],
    #[serde(default)]
    pub hue_wraps: bool,
}

impl ColorRange {
    pub const FULL: ColorRange = ColorRange {
        lo: [0, 0, 0],
        hi: [179, 255, 255],
        hue_wraps: false,
    };

    pub fn new(lo: [u8; 3], hi: [u8; 3]) -> Self {
        Self {
            lo,
            hi,
            hue_wraps: false,
        }
    }

    pub fn wrapping(lo: [u8; 3], hi: [u8; 3]) -> Self {
        Self { lo, hi, hue_wraps: true }
    }

    /// S and V bounds must be ordered; hue may be reversed only when wrapping.
    pub fn is_valid(&self) -> bool {
        self.lo[1] <= self.hi[1] && self.lo[2] <= self.hi[2] && (self.hue_wraps || self.lo[0] <= self.hi[0])
    }

    #[inline]
    pub fn contains(&self, hsv: [u8; 3]) -> bool {
        let [h, s, v] = hsv;
        let hue_ok = if self.hue_wraps && self.lo[0] > self.hi[0] {
            h >= self.lo[0] || h <= self.hi[0]
        } else {
            h >= self.lo[0] && h <= self.hi[0]
        };
        hue_ok && s >= self.lo[1] && s <= self.hi[1] && v >= self.lo[2] && v <= self.hi[2]
    }
}

pub fn segment_by_range(img: &HsvImage, range: &ColorRange) -> BinaryMask {
    BinaryMask::from_fn(img.width(), img.height(), |x, y| range.contains(img.hsv(x, y)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Inclusive extremes of a point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: i32,
    pub x_max: i32,
    pub y_min: i32,
    pub y_max: i32,
}

impl BBox {
    pub fn of(points: &[Point]) -> Option<Self> {
        let first = points.first()?;
        let mut b = BBox {
            x_min: first.x,
            x_max: first.x,
            y_min: first.y,
            y_max: first.y,
        };
        for p in &points[1..] {
            b.x_min = b.x_min.min(p.x);
            b.x_max = b.x_max.max(p.x);
            b.y_min = b.y_min.min(p.y);
            b.y_max = b.y_max.max(p.y);
        }
        Some(b)
    }

    pub fn union(self, o: BBox) -> BBox {
        BBox {
            x_min: self.x_min.min(o.x_min),
            x_max: self.x_max.max(o.x_max),
            y_min: self.y_min.min(o.y_min),
            y_max: self.y_max.max(o.y_max),
        }
    }

    /// Width in pixels (`x_max - x_min + 1`).
    pub fn width(&self) -> i32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> i32 {
        self.y_max - self.y_min + 1
    }

    pub fn center_y(&self) -> f64 {
        (self.y_min + self.y_max) as f64 / 2.0
    }
}

/// Outer boundary of one connected component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    /// Boundary pixels in tracing order; consecutive points are 8-adjacent.
    pub points: Vec<Point>,
    /// Number of pixels in the component.
    pub area: f64,
    /// Closed chain length, 1 per axis step and √2 per diagonal step. A
    /// lone pixel counts as one unit.
    pub perimeter: f64,
    pub bbox: BBox,
}

impl Contour {
    pub fn from_points(points: Vec<Point>, area: f64) -> Self {
        let bbox = BBox::of(&points).expect("contour has at least one point");
        let perimeter = chain_length(&points);
        Self {
            points,
            area,
            perimeter,
            bbox,
        }
    }

    /// Horizontal extent in pixels.
    pub fn length(&self) -> f64 {
        self.bbox.width() as f64
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Contour {
        let points = self.points.iter().map(|p| Point::new(p.x + dx, p.y + dy)).collect();
        Contour {
            points,
            area: self.area,
            perimeter: self.perimeter,
            bbox: BBox {
                x_min: self.bbox.x_min + dx,
                x_max: self.bbox.x_max + dx,
                y_min: self.bbox.y_min + dy,
                y_max: self.bbox.y_max + dy,
            },
        }
    }

    /// Applies a rigid point map; points are rounded to the pixel grid and
    /// area is carried over unchanged.
    pub fn mapped(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> Contour {
        let mut points: Vec<Point> = self
            .points
            .iter()
            .map(|p| {
                let (x, y) = f(p.x as f64, p.y as f64);
                Point::new(x.round() as i32, y.round() as i32)
            })
            .collect();
        points.dedup();
        let bbox = BBox::of(&points).expect("non-empty");
        Contour {
            points,
            area: self.area,
            perimeter: self.perimeter,
            bbox,
        }
    }
}

fn chain_length(points: &[Point]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            let (dx, dy) = ((a.x - b.x).abs(), (a.y - b.y).abs());
            match dx + dy {
                0 => 0.0,
                1 => 1.0,
                _ => std::f64::consts::SQRT_2,
            }
        })
        .sum()
}

// Clockwise in image coordinates (y down): E, SE, S, SW, W, NW, N, NE.
const DIRS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter().position(|&d| d == (dx, dy)).expect("unit neighbor offset")
}

/// Moore-neighbor tracing of the outer border starting at `start`, which
/// must be the first foreground pixel of its component in raster order.
fn trace_outer(mask: &BinaryMask, start: (i64, i64)) -> Vec<Point> {
    let mut points = vec![Point::new(start.0 as i32, start.1 as i32)];
    let mut cur = start;
    // the west neighbor of a raster-first pixel is background
    let mut back = (start.0 - 1, start.1);
    let mut first_move: Option<(i64, i64)> = None;
    let limit = 4 * mask.width as usize * mask.height as usize + 8;
    for _ in 0..limit {
        let from = dir_index(back.0 - cur.0, back.1 - cur.1);
        let mut next = None;
        for k in 1..=8 {
            let d = (from + k) % 8;
            let p = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if mask.get_signed(p.0, p.1) {
                let prev = DIRS[(d + 7) % 8];
                next = Some((p, (cur.0 + prev.0, cur.1 + prev.1)));
                break;
            }
        }
        let Some((p, b)) = next else {
            break; // isolated pixel
        };
        match first_move {
            None => first_move = Some(p),
            Some(fm) if cur == start && p == fm => {
                points.pop();
                break;
            }
            _ => {}
        }
        points.push(Point::new(p.0 as i32, p.1 as i32));
        back = b;
        cur = p;
    }
    if points.is_empty() {
        points.push(Point::new(start.0 as i32, start.1 as i32));
    }
    points
}

/// One contour per 8-connected component (outer border only), ordered by
/// the top-left corner of the bounding box.
pub fn find_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (w, h) = (mask.width as usize, mask.height as usize);
    let mut label = vec![0u32; w * h];
    let mut next_label = 0u32;
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.bits[y * w + x] || label[y * w + x] != 0 {
                continue;
            }
            next_label += 1;
            label[y * w + x] = next_label;
            queue.push_back((x, y));
            let mut area = 0usize;
            while let Some((cx, cy)) = queue.pop_front() {
                area += 1;
                for (dx, dy) in DIRS {
                    let nx = cx as i64 + dx;
                    let ny = cy as i64 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let idx = ny as usize * w + nx as usize;
                    if mask.bits[idx] && label[idx] == 0 {
                        label[idx] = next_label;
                        queue.push_back((nx as usize, ny as usize));
                    }
                }
            }
            let points = trace_outer(mask, (x as i64, y as i64));
            out.push(((y, x), Contour::from_points(points, area as f64)));
        }
    }
    out.sort_by_key(|((sy, sx), c)| (c.bbox.y_min, c.bbox.x_min, *sy, *sx));
    out.into_iter().map(|(_, c)| c).collect()
}

/// Width extent over height extent of the bounding box; +∞ for a single row.
pub fn aspect_ratio(c: &Contour) -> f64 {
    let dx = (c.bbox.x_max - c.bbox.x_min) as f64;
    let dy = (c.bbox.y_max - c.bbox.y_min) as f64;
    if dy == 0.0 {
        f64::INFINITY
    } else {
        dx / dy
    }
}

/// Keeps contours whose aspect ratio is strictly above `threshold`.
pub fn filter_linear(cs: &[Contour], threshold: f64) -> Vec<Contour> {
    cs.iter().filter(|c| aspect_ratio(c) > threshold).cloned().collect()
}

/// Closed interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub const UNBOUNDED: Bounds = Bounds {
        min: f64::NEG_INFINITY,
        max: f64::INFINITY,
    };

    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn scaled(&self, k: f64) -> Bounds {
        Bounds::new(self.min * k, self.max * k)
    }
}

pub fn filter_by_bounds(cs: &[Contour], area: Bounds, perimeter: Bounds) -> Vec<Contour> {
    cs.iter()
        .filter(|c| area.contains(c.area) && perimeter.contains(c.perimeter))
        .cloned()
        .collect()
}
