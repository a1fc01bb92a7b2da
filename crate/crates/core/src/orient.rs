//! Scale orientation from marker contours: PCA of the pooled boundary
//! points, rotation to upright, crop to the scale region, and the 180°
//! ambiguity check.

use serde::{Deserialize, Serialize};

use crate::contour::{BBox, Contour};
use crate::raster::{self, Angle, RasterImage, Rect};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OrientError {
    #[error("point set has no spread")]
    DegeneratePointSet,
    #[error("no contours to orient by")]
    NoContours,
}

/// Principal axes of a 2-D point set.
///
/// Angles here are measured in image coordinates (from +x toward +y, with y
/// pointing down) and folded into (-90°, 90°], since a line has no
/// direction. On screen this is the clockwise sense, the opposite of the
/// rotation convention in [`raster::rotate_about_center`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaAxes {
    pub centroid: (f64, f64),
    pub major_angle: Angle,
    pub minor_angle: Angle,
    /// (λ1, λ2) with λ1 ≥ λ2 ≥ 0, in pixel².
    pub eigenvalues: (f64, f64),
}

/// Folds an undirected line angle into (-90, 90].
pub fn fold_line_angle(deg: f64) -> Angle {
    let mut v = deg.rem_euclid(180.0);
    if v > 90.0 {
        v -= 180.0;
    }
    if v <= -90.0 {
        v += 180.0;
    }
    Angle::degrees(v)
}

pub fn pca_axes(points: &[(f64, f64)]) -> Result<PcaAxes, OrientError> {
    if points.is_empty() {
        return Err(OrientError::DegeneratePointSet);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let (cxx, cyy, cxy) = (sxx / n, syy / n, sxy / n);
    if cxx + cyy == 0.0 {
        return Err(OrientError::DegeneratePointSet);
    }
    let half_trace = (cxx + cyy) / 2.0;
    let radius = (((cxx - cyy) / 2.0).powi(2) + cxy * cxy).sqrt();
    let l1 = half_trace + radius;
    let l2 = (half_trace - radius).max(0.0);
    // atan2(0, 0) = 0 gives the declared tie-break for isotropic sets
    let major = 0.5 * (2.0 * cxy).atan2(cxx - cyy).to_degrees();
    Ok(PcaAxes {
        centroid: (mx, my),
        major_angle: fold_line_angle(major),
        minor_angle: fold_line_angle(major + 90.0),
        eigenvalues: (l1, l2),
    })
}

pub fn pooled_points(contours: &[Contour]) -> Vec<(f64, f64)> {
    contours
        .iter()
        .flat_map(|c| c.points.iter().map(|p| (p.x as f64, p.y as f64)))
        .collect()
}

/// Mean direction of the contours' own principal axes, weighted by
/// boundary length. Directions are averaged as doubled-angle vectors so
/// that -89° and 89° agree. Ticks give the direction across the scale;
/// unlike pooling, stray label fragments barely move the result because
/// they are short and roughly parallel to the ticks anyway.
pub fn mean_line_direction(contours: &[Contour]) -> Result<Angle, OrientError> {
    if contours.is_empty() {
        return Err(OrientError::NoContours);
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for c in contours {
        let pts: Vec<(f64, f64)> = c.points.iter().map(|p| (p.x as f64, p.y as f64)).collect();
        let Ok(ax) = pca_axes(&pts) else { continue };
        let w = pts.len() as f64;
        let t = 2.0 * ax.major_angle.radians();
        sx += w * t.cos();
        sy += w * t.sin();
    }
    if sx == 0.0 && sy == 0.0 {
        return Err(OrientError::DegeneratePointSet);
    }
    Ok(fold_line_angle(0.5 * sy.atan2(sx).to_degrees()))
}

/// On-screen counter-clockwise rotation that turns a line whose PCA angle
/// is `major` (image coordinates) vertical. Result lies in (-90, 90].
pub fn upright_rotation(major: Angle) -> Angle {
    let a = fold_line_angle(90.0 + major.value());
    if a.value().abs() < 1e-9 {
        Angle::degrees(0.0)
    } else {
        a
    }
}

#[derive(Debug, Clone)]
pub struct Reoriented {
    pub image: RasterImage,
    pub contours: Vec<Contour>,
    /// Rotation that was applied (on-screen counter-clockwise).
    pub angle: Angle,
    pub axes: PcaAxes,
}

/// Rotates `img` so the principal axis of the pooled contour points
/// becomes vertical. Contours are carried into the rotated frame.
pub fn reorient(img: &RasterImage, orienting: &[Contour]) -> Result<Reoriented, OrientError> {
    if orienting.is_empty() {
        return Err(OrientError::NoContours);
    }
    let axes = pca_axes(&pooled_points(orienting))?;
    let angle = upright_rotation(axes.major_angle);
    let rotated = raster::rotate_about_center(img, angle, None);
    let t = rotated.transform;
    let contours = orienting.iter().map(|c| c.mapped(|x, y| t.forward(x, y))).collect();
    Ok(Reoriented {
        image: rotated.image,
        contours,
        angle,
        axes,
    })
}

pub fn contours_bbox(cs: &[Contour]) -> Option<BBox> {
    cs.iter().map(|c| c.bbox).reduce(BBox::union)
}

/// Crops to the bounding box of `linear`, padded by `pad_frac` of its width
/// horizontally and of its height vertically, clamped to the image.
/// Returns the crop and its offset in `img`.
pub fn crop_to_scale(img: &RasterImage, linear: &[Contour], pad_frac: f64) -> Option<(RasterImage, (u32, u32))> {
    crop_to_scale_with_margin(img, linear, pad_frac, 0.0)
}

/// Like [`crop_to_scale`] with an extra `margin_x` pixels on both sides,
/// used to keep printed labels that sit beside the ticks.
pub fn crop_to_scale_with_margin(
    img: &RasterImage,
    linear: &[Contour],
    pad_frac: f64,
    margin_x: f64,
) -> Option<(RasterImage, (u32, u32))> {
    let b = contours_bbox(linear)?;
    let w = b.width() as f64;
    let h = b.height() as f64;
    let px = (pad_frac * w + margin_x).round() as i64;
    let py = (pad_frac * h).round() as i64;
    let rect = Rect::clamped(
        b.x_min as i64 - px,
        b.y_min as i64 - py,
        b.x_max as i64 + 1 + px,
        b.y_max as i64 + 1 + py,
        img.width(),
        img.height(),
    )?;
    let out = raster::crop(img, rect).ok()?;
    Some((out, (rect.x, rect.y)))
}

/// Picks between `upright` and its 180° rotation by digit readability.
/// Ties keep the input. Returns the chosen image and whether it was flipped.
pub fn resolve_flip(upright: &RasterImage, read_score: impl Fn(&RasterImage) -> usize) -> (RasterImage, bool) {
    let flipped = raster::rotate_180(upright);
    let keep = read_score(upright);
    let turn = read_score(&flipped);
    if turn > keep {
        (flipped, true)
    } else {
        (upright.clone(), false)
    }
}
