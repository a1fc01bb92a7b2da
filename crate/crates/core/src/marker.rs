//! Splits linear contours into major/minor tick groups by relative length.

use serde::{Deserialize, Serialize};

use crate::contour::Contour;

/// Default relative jump that opens a new group.
pub const DEFAULT_GROUP_JUMP: f64 = 0.15;

/// Majors closer than this (pixels, vertically) are one broken tick.
pub const MERGE_DISTANCE: f64 = 2.0;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum MarkerError {
    #[error("no linear contours to group")]
    NoContours,
}

#[derive(Debug, Clone)]
pub struct MarkerGroup {
    /// Sorted by length, longest first.
    pub members: Vec<Contour>,
    pub representative_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerPosition {
    /// Vertical center of the tick's bounding box.
    pub y: f64,
    /// Horizontal extent.
    pub length: f64,
    pub x_min: i32,
    pub x_max: i32,
}

impl MarkerPosition {
    pub fn of(c: &Contour) -> Self {
        Self {
            y: c.bbox.center_y(),
            length: c.length(),
            x_min: c.bbox.x_min,
            x_max: c.bbox.x_max,
        }
    }
}

/// Group boundaries over lengths already sorted descending: a new group
/// starts wherever the drop from the previous length exceeds `jump` times
/// that previous length. Returns the index ranges of each group.
pub fn split_sorted_lengths(lengths: &[f64], jump: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    if lengths.is_empty() {
        return out;
    }
    let mut start = 0;
    for i in 1..lengths.len() {
        if lengths[i - 1] - lengths[i] > jump * lengths[i - 1] {
            out.push(start..i);
            start = i;
        }
    }
    out.push(start..lengths.len());
    out
}

/// Keeps the contours that line up with the tick column.
///
/// Ticks share one aligned edge (left, right or center) while stray linear
/// shapes, such as label strokes split by thresholding, sit elsewhere. The
/// alignment keeping the most contours within `max(3, 0.25 x median
/// length)` pixels of its median wins; the rest are dropped. Fewer than
/// three contours pass through.
pub fn aligned_column(linear: &[Contour]) -> Vec<Contour> {
    if linear.len() < 3 {
        return linear.to_vec();
    }
    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }
    let edges: [fn(&Contour) -> f64; 3] = [
        |c| c.bbox.x_min as f64,
        |c| c.bbox.x_max as f64,
        |c| (c.bbox.x_min + c.bbox.x_max) as f64 / 2.0,
    ];
    let tol = (0.25 * median(linear.iter().map(Contour::length).collect())).max(3.0);
    // most inliers wins (minor ticks alone agree on their far edge too),
    // then the tighter spread
    let (edge, center, _, _) = edges
        .iter()
        .map(|f| {
            let vals: Vec<f64> = linear.iter().map(f).collect();
            let m = median(vals.clone());
            let inliers = vals.iter().filter(|v| (*v - m).abs() <= tol).count();
            let mad = median(vals.iter().map(|v| (v - m).abs()).collect());
            (*f, m, inliers, mad)
        })
        .max_by(|a, b| a.2.cmp(&b.2).then(b.3.total_cmp(&a.3)))
        .expect("three candidates");
    linear.iter().filter(|c| (edge(c) - center).abs() <= tol).cloned().collect()
}

pub fn group_by_relative_length(linear: &[Contour], jump: f64) -> Result<Vec<MarkerGroup>, MarkerError> {
    if linear.is_empty() {
        return Err(MarkerError::NoContours);
    }
    let mut sorted: Vec<Contour> = linear.to_vec();
    // stable sort keeps the (y, x) contour order among equal lengths
    sorted.sort_by(|a, b| b.length().total_cmp(&a.length()));
    let lengths: Vec<f64> = sorted.iter().map(Contour::length).collect();
    Ok(split_sorted_lengths(&lengths, jump)
        .into_iter()
        .map(|r| {
            let members = sorted[r.clone()].to_vec();
            MarkerGroup {
                representative_length: lengths[r.start],
                members,
            }
        })
        .collect())
}

/// Positions of the first (longest) group, top to bottom, with near
/// duplicates merged.
pub fn major_markers(groups: &[MarkerGroup]) -> Vec<MarkerPosition> {
    let Some(first) = groups.first() else {
        return Vec::new();
    };
    let mut ps: Vec<MarkerPosition> = first.members.iter().map(MarkerPosition::of).collect();
    ps.sort_by(|a, b| a.y.total_cmp(&b.y));
    let mut out: Vec<(MarkerPosition, usize)> = Vec::with_capacity(ps.len());
    for p in ps {
        match out.last_mut() {
            Some((m, n)) if (p.y - m.y / *n as f64).abs() <= MERGE_DISTANCE => {
                m.y += p.y;
                *n += 1;
                m.length = m.length.max(p.length);
                m.x_min = m.x_min.min(p.x_min);
                m.x_max = m.x_max.max(p.x_max);
            }
            _ => out.push((p, 1)),
        }
    }
    out.into_iter()
        .map(|(mut m, n)| {
            m.y /= n as f64;
            m
        })
        .collect()
}

/// Median gap between consecutive positions.
pub fn median_spacing(ms: &[MarkerPosition]) -> Option<f64> {
    let mut gaps: Vec<f64> = ms.windows(2).map(|w| w[1].y - w[0].y).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    Some(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{BBox, Point};

    fn tick(x0: i32, len: i32, y: i32) -> Contour {
        let pts = vec![Point::new(x0, y), Point::new(x0 + len - 1, y), Point::new(x0 + len - 1, y + 1), Point::new(x0, y + 1)];
        Contour::from_points(pts, (len * 2) as f64)
    }

    fn group_lengths(lengths: &[i32]) -> Vec<Vec<f64>> {
        let cs: Vec<Contour> = lengths.iter().enumerate().map(|(i, &l)| tick(0, l, i as i32 * 10)).collect();
        group_by_relative_length(&cs, DEFAULT_GROUP_JUMP)
            .unwrap()
            .iter()
            .map(|g| g.members.iter().map(Contour::length).collect())
            .collect()
    }

    #[test]
    fn worked_grouping() {
        // 97 -> 40 drops 57 > 14.55
        assert_eq!(
            group_lengths(&[100, 98, 97, 40, 39]),
            vec![vec![100.0, 98.0, 97.0], vec![40.0, 39.0]]
        );
        assert_eq!(group_lengths(&[40, 98, 39, 97, 100])[0], vec![100.0, 98.0, 97.0]);
    }

    #[test]
    fn equal_lengths_single_group() {
        assert_eq!(group_lengths(&[50, 50, 50]).len(), 1);
    }

    #[test]
    fn boundary_jump() {
        // 16 > 15
        assert_eq!(group_lengths(&[100, 84]).len(), 2);
        // 15 is not more than 15
        assert_eq!(split_sorted_lengths(&[100.0, 85.0], 0.15).len(), 1);
    }

    #[test]
    fn empty_input_errors() {
        assert_eq!(group_by_relative_length(&[], 0.15).unwrap_err(), MarkerError::NoContours);
    }

    #[test]
    fn majors_sorted_and_merged() {
        let cs = vec![tick(0, 40, 200), tick(0, 40, 10), tick(0, 40, 100), tick(0, 38, 101), tick(0, 16, 50)];
        let groups = group_by_relative_length(&cs, DEFAULT_GROUP_JUMP).unwrap();
        let ms = major_markers(&groups);
        let ys: Vec<f64> = ms.iter().map(|m| m.y).collect();
        assert_eq!(ys, vec![10.5, 101.0, 200.5]);
        assert_eq!(ms[1].length, 40.0);
        assert_eq!(median_spacing(&ms), Some(95.0));
    }

    #[test]
    fn bbox_length_is_pixel_extent() {
        let t = tick(5, 10, 0);
        assert_eq!(t.bbox, BBox { x_min: 5, x_max: 14, y_min: 0, y_max: 1 });
        assert_eq!(t.length(), 10.0);
    }
}
