//! Randomized invariants checked against brute-force oracles.

use std::collections::{BTreeSet, HashSet, VecDeque};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scaleread::calib::{
    consensus_slope, correct_and_complete, pairwise_slopes, LinearRelation, MarkerReading, PairSlope,
};
use scaleread::contour::{find_contours, BinaryMask, BBox, Contour, Point};
use scaleread::digits::parse_ocr_text;
use scaleread::evalkit::{bland_altman, error_metrics_exact, hysteresis_area, Direction, MeasurementSeries};
use scaleread::marker::{group_by_relative_length, major_markers};
use scaleread::orient::pca_axes;
use scaleread::raster::{self, gaussian_blur_3x3, resize_longest_edge, rotate_about_center, Angle, RasterImage};

fn mask_strategy(max: u32) -> impl Strategy<Value = BinaryMask> {
    (1..=max, 1..=max, 0.05f64..0.7, any::<u64>()).prop_map(|(w, h, density, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(density)).collect();
        BinaryMask::from_fn(w, h, |x, y| bits[(y * w + x) as usize])
    })
}

/// 8-connected components by flood fill, each as a pixel set.
fn oracle_components(m: &BinaryMask) -> Vec<HashSet<(i64, i64)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for y in 0..m.height() as i64 {
        for x in 0..m.width() as i64 {
            if !m.get_signed(x, y) || seen.contains(&(x, y)) {
                continue;
            }
            let mut comp = HashSet::new();
            let mut q = VecDeque::from([(x, y)]);
            seen.insert((x, y));
            while let Some((cx, cy)) = q.pop_front() {
                comp.insert((cx, cy));
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let n = (cx + dx, cy + dy);
                        if m.get_signed(n.0, n.1) && seen.insert(n) {
                            q.push_back(n);
                        }
                    }
                }
            }
            out.push(comp);
        }
    }
    out
}

/// Pixels of `comp` with a 4-neighbor in the background region that
/// reaches outside the image, treating `comp` as the only foreground.
fn oracle_outer_boundary(comp: &HashSet<(i64, i64)>, w: i64, h: i64) -> BTreeSet<(i64, i64)> {
    let inside = |p: (i64, i64)| p.0 >= -1 && p.1 >= -1 && p.0 <= w && p.1 <= h;
    let mut outside = HashSet::from([(-1, -1)]);
    let mut q = VecDeque::from([(-1i64, -1i64)]);
    while let Some((x, y)) = q.pop_front() {
        for n in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if inside(n) && !comp.contains(&n) && outside.insert(n) {
                q.push_back(n);
            }
        }
    }
    comp.iter()
        .copied()
        .filter(|&(x, y)| [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].iter().any(|n| outside.contains(n)))
        .collect()
}

fn point_set(c: &Contour) -> BTreeSet<(i64, i64)> {
    c.points.iter().map(|p| (p.x as i64, p.y as i64)).collect()
}

fn translate(m: &BinaryMask, dx: u32, dy: u32) -> BinaryMask {
    BinaryMask::from_fn(m.width() + dx, m.height() + dy, |x, y| {
        x >= dx && y >= dy && m.get(x - dx, y - dy)
    })
}

fn smooth_image(w: u32, h: u32, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c): (f64, f64, f64) = (rng.random_range(0.02..0.2), rng.random_range(0.02..0.2), rng.random());
    let mut img = RasterImage::filled(w, h, [0, 0, 0]);
    for y in 0..h {
        for x in 0..w {
            let v = |k: f64| (127.5 + 100.0 * ((x as f64 * a + y as f64 * b) * k + c * 6.0).sin()) as u8;
            img.put_rgb(x, y, [v(1.0), v(0.7), v(1.3)]);
        }
    }
    img
}

fn series(pairs: Vec<(f64, f64)>) -> MeasurementSeries {
    MeasurementSeries::new(Direction::Aspirating, pairs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn contours_match_brute_force(m in mask_strategy(64)) {
        let comps = oracle_components(&m);
        let contours = find_contours(&m);
        prop_assert_eq!(contours.len(), comps.len());
        let (w, h) = (m.width() as i64, m.height() as i64);
        for c in &contours {
            let first = (c.points[0].x as i64, c.points[0].y as i64);
            let comp = comps.iter().find(|k| k.contains(&first)).expect("contour point is foreground");
            prop_assert_eq!(c.area, comp.len() as f64);
            prop_assert_eq!(point_set(c), oracle_outer_boundary(comp, w, h));
            let pts: Vec<Point> = comp.iter().map(|&(x, y)| Point::new(x as i32, y as i32)).collect();
            prop_assert_eq!(c.bbox, BBox::of(&pts).unwrap());
            // every point is foreground with a background or off-image neighbor
            for p in &c.points {
                let (x, y) = (p.x as i64, p.y as i64);
                prop_assert!(m.get_signed(x, y));
                let open = (-1..=1).any(|dy| (-1..=1).any(|dx| !m.get_signed(x + dx, y + dy)));
                prop_assert!(open);
            }
            // closed chain of 8-adjacent steps
            if c.points.len() > 1 {
                for i in 0..c.points.len() {
                    let (a, b) = (c.points[i], c.points[(i + 1) % c.points.len()]);
                    prop_assert!((a.x - b.x).abs() <= 1 && (a.y - b.y).abs() <= 1);
                }
            }
        }
    }

    #[test]
    fn contour_areas_sum_to_foreground(m in mask_strategy(48)) {
        let fg: usize = oracle_components(&m).iter().map(HashSet::len).sum();
        let total: f64 = find_contours(&m).iter().map(|c| c.area).sum();
        prop_assert_eq!(total as usize, fg);
    }

    #[test]
    fn contours_translate_with_mask(m in mask_strategy(32), dx in 0u32..8, dy in 0u32..8) {
        let a = find_contours(&m);
        let b = find_contours(&translate(&m, dx, dy));
        prop_assert_eq!(a.len(), b.len());
        for (ca, cb) in a.iter().zip(&b) {
            prop_assert_eq!(ca.translated(dx as i32, dy as i32).points, cb.points.clone());
            prop_assert_eq!(ca.area, cb.area);
            prop_assert_eq!(ca.bbox.x_min + dx as i32, cb.bbox.x_min);
            prop_assert_eq!(ca.bbox.y_max + dy as i32, cb.bbox.y_max);
        }
    }

    #[test]
    fn full_mask_is_one_contour(w in 1u32..40, h in 1u32..40) {
        let img = RasterImage::filled(w, h, [10, 200, 30]);
        let hsv = raster::to_hsv(&img).unwrap();
        let all = scaleread::contour::ColorRange::new([0, 0, 0], [179, 255, 255]);
        let cs = find_contours(&scaleread::contour::segment_by_range(&hsv, &all));
        prop_assert_eq!(cs.len(), 1);
        prop_assert_eq!(cs[0].area, (w * h) as f64);
    }

    #[test]
    fn rotate_round_trip(seed in any::<u64>(), deg in -80.0f64..80.0, w in 24u32..64, h in 24u32..64) {
        let img = smooth_image(w, h, seed);
        let there = rotate_about_center(&img, Angle::degrees(deg), None);
        let back = rotate_about_center(&there.image, Angle::degrees(-deg), None);
        // the original sits centered in the doubly grown canvas
        let ox = (back.image.width() - w) as f64 / 2.0;
        let oy = (back.image.height() - h) as f64 / 2.0;
        let (mut sum, mut n) = (0.0, 0usize);
        for y in 2..h - 2 {
            for x in 2..w - 2 {
                let mut px = [0.0; 3];
                back.image.sample_bilinear(x as f64 + ox, y as f64 + oy, &mut px);
                let orig = img.rgb(x, y);
                for c in 0..3 {
                    sum += (px[c] - orig[c] as f64).abs();
                    n += 1;
                }
            }
        }
        prop_assert!(sum / n as f64 <= 3.0, "mean abs diff {}", sum / n as f64);
    }

    #[test]
    fn blur_keeps_mean(seed in any::<u64>(), w in 3u32..50, h in 3u32..50) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<u8> = (0..w * h * 3).map(|_| rng.random()).collect();
        let img = RasterImage::from_raw(w, h, 3, data).unwrap();
        prop_assert!((gaussian_blur_3x3(&img).mean() - img.mean()).abs() <= 0.5);
    }

    #[test]
    fn resize_keeps_aspect(w in 1u32..3000, h in 1u32..3000, target in 16u32..1200) {
        let img = RasterImage::filled(w, h, [1, 2, 3]);
        let out = resize_longest_edge(&img, target).unwrap();
        let (ow, oh) = (out.width() as f64, out.height() as f64);
        // compared as short side over long side, where rounding the short
        // side moves the ratio by at most half a pixel of the long side
        let (si, li) = ((w.min(h)) as f64, (w.max(h)) as f64);
        let (so, lo) = (ow.min(oh), ow.max(oh));
        prop_assert!((so / lo - si / li).abs() <= (1.0 / oh).max(1.0 / ow));
    }

    #[test]
    fn pca_is_rotation_equivariant(seed in any::<u64>(), theta in -170.0f64..170.0, k in 0.2f64..5.0, tx in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..40)
            .map(|_| (rng.random_range(-30.0..30.0), rng.random_range(-6.0..6.0)))
            .collect();
        let base = pca_axes(&pts).unwrap();
        prop_assume!(base.eigenvalues.0 > 1.5 * base.eigenvalues.1);
        let (s, c) = theta.to_radians().sin_cos();
        let moved: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (k * (c * x - s * y) + tx, k * (s * x + c * y) - tx)).collect();
        let got = pca_axes(&moved).unwrap();
        let expect = Angle::degrees(base.major_angle.value() + theta);
        prop_assert!(got.major_angle.line_distance(expect) < 1e-6);
    }

    #[test]
    fn grouping_is_scale_invariant(lengths in prop::collection::vec(3.0f64..60.0, 1..20), k in prop::sample::select(vec![0.6, 1.0, 1.5])) {
        let make = |scale: f64| -> Vec<Contour> {
            lengths.iter().enumerate().map(|(i, &l)| {
                let l = (l * scale * 1000.0).round() as i32;
                let y = 10 * i as i32;
                Contour::from_points(vec![Point::new(0, y), Point::new(l, y)], l as f64)
            }).collect()
        };
        let members = |cs: &[Contour]| -> Vec<Vec<i32>> {
            group_by_relative_length(cs, 0.15).unwrap().iter()
                .map(|g| { let mut ys: Vec<i32> = g.members.iter().map(|c| c.bbox.y_min).collect(); ys.sort(); ys })
                .collect()
        };
        prop_assert_eq!(members(&make(1.0)), members(&make(k)));
        let majors = major_markers(&group_by_relative_length(&make(k), 0.15).unwrap());
        prop_assert!(majors.windows(2).all(|w| w[0].y < w[1].y));
    }

    #[test]
    fn consensus_ignores_order(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = [0.0154, 0.0154, 0.0151, -0.02, 0.0333];
        let slopes: Vec<PairSlope> = (0..n).map(|i| PairSlope { i, j: i + 1, slope: pool[rng.random_range(0..pool.len())] }).collect();
        let mut shuffled = slopes.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        for tol in [0.0, 0.03] {
            let a = consensus_slope(&slopes, tol).map(|c| c.slope);
            let b = consensus_slope(&shuffled, tol).map(|c| c.slope);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn pair_count_is_binomial(positions in prop::collection::btree_set(0u32..500, 2..9), holes in any::<u16>()) {
        let readings: Vec<MarkerReading> = positions.iter().enumerate()
            .map(|(i, &p)| MarkerReading::new(p as f64, (holes >> i & 1 == 0).then_some(i as f64)))
            .collect();
        let k = readings.iter().filter(|r| r.value.is_some()).count();
        match pairwise_slopes(&readings, 4) {
            Ok(t) => prop_assert_eq!(t.slopes.len(), k * (k - 1) / 2),
            Err(_) => prop_assert!(k < 2),
        }
    }

    #[test]
    fn completion_is_monotone(mut ps in prop::collection::vec(0.0f64..1000.0, 1..30), slope in 0.001f64..1.0, offset in -50.0f64..50.0) {
        ps.sort_by(f64::total_cmp);
        let out = correct_and_complete(&ps, &LinearRelation { slope, offset }, 0.1);
        prop_assert!(out.windows(2).all(|w| w[0].value <= w[1].value));
    }

    #[test]
    fn error_metric_ordering(pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 2..60)) {
        prop_assume!(pairs.iter().any(|p| p.0 != pairs[0].0));
        let r = error_metrics_exact(&series(pairs)).unwrap();
        let eps = 1e-9 * (1.0 + r.rmse);
        prop_assert!(r.rmse + eps >= r.mae);
        prop_assert!(r.mae + eps >= r.bias.abs());
        prop_assert!(r.r2 <= 1.0);
    }

    #[test]
    fn hysteresis_is_symmetric(ms in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..30)) {
        let a = series(ms.iter().enumerate().map(|(i, m)| (i as f64, m.0)).collect());
        let d = series(ms.iter().enumerate().map(|(i, m)| (i as f64, m.1)).collect());
        let ab = hysteresis_area(&a, &d).unwrap();
        let ba = hysteresis_area(&d, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-9 * (1.0 + ab));
    }

    #[test]
    fn parse_is_idempotent(v in 0u32..100_000, frac in prop::option::of(0u32..100)) {
        let text = match frac { Some(f) => format!("{v}.{f}"), None => v.to_string() };
        let parsed = parse_ocr_text(&text).unwrap();
        prop_assert_eq!(parse_ocr_text(&parsed.to_string()), Some(parsed));
    }
}

#[test]
fn bland_altman_limits_cover_gaussian_differences() {
    use rand_distr::{Distribution, Normal};
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.5).unwrap();
    let n = 10_000;
    let asp: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, i as f64 + noise.sample(&mut rng))).collect();
    let disp: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, i as f64 + noise.sample(&mut rng))).collect();
    let ba = bland_altman(&series(asp), &series(disp)).unwrap();
    let inside = 1.0 - ba.outlier_count as f64 / n as f64;
    assert!((inside - 0.95).abs() <= 0.01, "coverage {inside}");
}
