//! Position-to-value calibration from OCR'd major markers.
//!
//! Every pair of read markers votes for a slope (units per pixel, rounded
//! to a fixed number of decimals). The most common slope is trusted; pairs
//! that disagree with it expose misread labels. The relation is anchored on
//! the lowest agreeing marker in the image and then used to rewrite every
//! marker value, including the ones OCR could not read.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Decimals kept when rounding pair slopes.
pub const SLOPE_DECIMALS: i32 = 4;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CalibError {
    #[error("need at least two markers with read values, got {0}")]
    InsufficientReadings(usize),
    #[error("no slope is shared by two or more marker pairs")]
    NoConsensus,
    #[error("several slopes tie for the consensus")]
    AmbiguousConsensus,
    #[error("no reading takes part in an agreeing pair")]
    NoAgreeingReading,
    #[error("consensus slope is zero or not finite")]
    DegenerateSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerReading {
    /// Vertical pixel position.
    pub position: f64,
    pub value: Option<f64>,
}

impl MarkerReading {
    pub fn new(position: f64, value: Option<f64>) -> Self {
        Self { position, value }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSlope {
    pub i: usize,
    pub j: usize,
    pub slope: f64,
}

/// `value = slope * position + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRelation {
    pub slope: f64,
    pub offset: f64,
}

impl LinearRelation {
    pub fn eval(&self, position: f64) -> f64 {
        self.slope * position + self.offset
    }
}

/// Rounds half away from zero to `decimals` places.
pub fn round_decimals(v: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (v * k).round() / k
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlopeTable {
    pub slopes: Vec<PairSlope>,
    /// Pairs skipped because both markers sit at the same position.
    pub coincident: Vec<(usize, usize)>,
}

/// Rounded slope of every pair of readings that both carry a value.
pub fn pairwise_slopes(readings: &[MarkerReading], decimals: i32) -> Result<SlopeTable, CalibError> {
    let valued: Vec<usize> = (0..readings.len()).filter(|&i| readings[i].value.is_some()).collect();
    if valued.len() < 2 {
        return Err(CalibError::InsufficientReadings(valued.len()));
    }
    let mut table = SlopeTable::default();
    for (a, &i) in valued.iter().enumerate() {
        for &j in &valued[a + 1..] {
            let (ri, rj) = (readings[i], readings[j]);
            let dp = rj.position - ri.position;
            if dp == 0.0 {
                table.coincident.push((i, j));
                continue;
            }
            let dv = rj.value.unwrap() - ri.value.unwrap();
            let slope = round_decimals(dv / dp, decimals) + 0.0;
            table.slopes.push(PairSlope { i, j, slope });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consensus {
    pub slope: f64,
    /// Pairs whose slope agrees with the consensus.
    pub agreeing: Vec<PairSlope>,
    /// Set when only one pair was available.
    pub low_confidence: bool,
}

impl Consensus {
    /// Readings that take part in at least one agreeing pair.
    pub fn agreeing_readings(&self) -> BTreeSet<usize> {
        self.agreeing.iter().flat_map(|p| [p.i, p.j]).collect()
    }
}

fn agrees(a: f64, b: f64, rel_tol: f64) -> bool {
    a == b || (a - b).abs() <= rel_tol * a.abs().max(b.abs())
}

/// Mode of the pair slopes.
///
/// With `rel_tol == 0` slopes agree only when equal, which is the plain
/// mode. A positive `rel_tol` lets slopes within that relative distance
/// vote together; the consensus is then the median of the winning votes.
/// Ties between different winning vote sets go to the one touching more
/// distinct markers, and are otherwise reported as ambiguous.
pub fn consensus_slope(slopes: &[PairSlope], rel_tol: f64) -> Result<Consensus, CalibError> {
    match slopes.len() {
        0 => return Err(CalibError::InsufficientReadings(0)),
        1 => {
            return Ok(Consensus {
                slope: slopes[0].slope,
                agreeing: slopes.to_vec(),
                low_confidence: true,
            })
        }
        _ => {}
    }
    let support: Vec<Vec<usize>> = slopes
        .iter()
        .map(|a| {
            (0..slopes.len())
                .filter(|&m| agrees(a.slope, slopes[m].slope, rel_tol))
                .collect()
        })
        .collect();
    let best = support.iter().map(Vec::len).max().unwrap_or(0);
    if best < 2 && slopes.len() >= 3 {
        return Err(CalibError::NoConsensus);
    }
    let mut candidates: Vec<&Vec<usize>> = support.iter().filter(|s| s.len() == best).collect();
    candidates.sort();
    candidates.dedup();
    if candidates.len() > 1 {
        let span = |s: &Vec<usize>| -> usize {
            s.iter()
                .flat_map(|&m| [slopes[m].i, slopes[m].j])
                .collect::<BTreeSet<_>>()
                .len()
        };
        let widest = candidates.iter().map(|s| span(s)).max().unwrap_or(0);
        candidates.retain(|s| span(s) == widest);
        if candidates.len() > 1 {
            return Err(CalibError::AmbiguousConsensus);
        }
    }
    let winner = candidates[0];
    let mut values: Vec<f64> = winner.iter().map(|&m| slopes[m].slope).collect();
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let slope = if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    };
    Ok(Consensus {
        slope,
        agreeing: winner.iter().map(|&m| slopes[m]).collect(),
        low_confidence: false,
    })
}

/// Offset from the agreeing reading with the largest position.
///
/// Agreeing readings are first grouped by the offset they imply, two
/// offsets matching when within a quarter of the label step. Only the
/// best supported group may supply the anchor, so a pair of misreads that
/// happen to share the consensus slope cannot shift the whole scale.
pub fn fit_relation(readings: &[MarkerReading], consensus: &Consensus) -> Result<LinearRelation, CalibError> {
    if !consensus.slope.is_finite() || consensus.slope == 0.0 {
        return Err(CalibError::DegenerateSlope);
    }
    let slope = consensus.slope;
    let points: Vec<(f64, f64)> = consensus
        .agreeing_readings()
        .into_iter()
        .filter_map(|i| readings.get(i).and_then(|r| r.value.map(|v| (r.position, v - slope * r.position))))
        .collect();
    let positions: Vec<f64> = readings.iter().map(|r| r.position).collect();
    let tol = marker_step(&positions, slope).map_or(0.0, |s| 0.25 * s);
    let support = |o: f64| points.iter().filter(|q| (q.1 - o).abs() <= tol).count();
    let anchor = points
        .iter()
        .map(|&(p, o)| (support(o), p, o))
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)))
        .ok_or(CalibError::NoAgreeingReading)?;
    Ok(LinearRelation {
        slope,
        offset: anchor.2,
    })
}

/// Snaps `v` to the nearest multiple of `grain`.
pub fn snap(v: f64, grain: f64) -> f64 {
    let s = (v / grain).round() * grain;
    // tidy float noise like 0.30000000000000004 and drop negative zero
    round_decimals(s, 9) + 0.0
}

/// Evaluates the relation at every position and snaps to `grain`.
pub fn correct_and_complete(positions: &[f64], rel: &LinearRelation, grain: f64) -> Vec<MarkerReading> {
    positions
        .iter()
        .map(|&p| MarkerReading::new(p, Some(snap(rel.eval(p), grain))))
        .collect()
}

/// Value step between neighbouring markers: |slope| times the median gap
/// between consecutive marker positions.
pub fn marker_step(positions: &[f64], slope: f64) -> Option<f64> {
    let mut ps = positions.to_vec();
    ps.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = ps.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let median = if n % 2 == 1 {
        gaps[n / 2]
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) / 2.0
    };
    Some(slope.abs() * median)
}

/// Snapping grain for a label `step`.
///
/// The step is first snapped to the nearest 1, 2, 2.5 or 5 times a power
/// of ten (within 10%); the grain is then the largest power of ten that
/// divides it, so 1 and 10 keep whole labels, 0.5 gives 0.1 and 25 gives
/// 1. Steps off that series fall back to the power of ten below them.
pub fn grain_for_step(step: f64) -> f64 {
    if !(step.is_finite() && step > 0.0) {
        return 1.0;
    }
    let decade = 10f64.powf(step.log10().floor());
    let nice = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * decade)
        .find(|n| (step - n).abs() <= 0.1 * n);
    let Some(nice) = nice else {
        return decade;
    };
    let mut p = 10f64.powf(nice.log10().round());
    while p > 1e-12 {
        let q = nice / p;
        if (q - q.round()).abs() < 1e-9 {
            return round_decimals(p, 12);
        }
        p /= 10.0;
    }
    decade
}

/// Grain derived from the consensus slope and the marker spacing.
pub fn default_grain(readings: &[MarkerReading], consensus: &Consensus) -> f64 {
    let positions: Vec<f64> = readings.iter().map(|r| r.position).collect();
    marker_step(&positions, consensus.slope).map_or(1.0, grain_for_step)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibOptions {
    pub slope_decimals: i32,
    /// Relative slope agreement; 0 demands equal rounded slopes.
    pub slope_rel_tol: f64,
    /// Fixed snapping grain; `None` derives it from the readings.
    pub grain: Option<f64>,
}

impl Default for CalibOptions {
    fn default() -> Self {
        Self {
            slope_decimals: SLOPE_DECIMALS,
            slope_rel_tol: 0.0,
            grain: None,
        }
    }
}

/// Everything the auto-correction step produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub slopes: SlopeTable,
    pub consensus: Consensus,
    pub relation: LinearRelation,
    pub grain: f64,
    pub corrected: Vec<MarkerReading>,
    /// Readings that had a value but never agreed with the consensus.
    pub rejected: Vec<usize>,
}

pub fn auto_correct(readings: &[MarkerReading], opts: &CalibOptions) -> Result<Calibration, CalibError> {
    let slopes = pairwise_slopes(readings, opts.slope_decimals)?;
    if slopes.slopes.is_empty() {
        return Err(CalibError::InsufficientReadings(0));
    }
    let consensus = consensus_slope(&slopes.slopes, opts.slope_rel_tol)?;
    let relation = fit_relation(readings, &consensus)?;
    let grain = opts.grain.unwrap_or_else(|| default_grain(readings, &consensus));
    let positions: Vec<f64> = readings.iter().map(|r| r.position).collect();
    let corrected = correct_and_complete(&positions, &relation, grain);
    let agreeing = consensus.agreeing_readings();
    let rejected = (0..readings.len())
        .filter(|i| readings[*i].value.is_some() && !agreeing.contains(i))
        .collect();
    Ok(Calibration {
        slopes,
        consensus,
        relation,
        grain,
        corrected,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_readings() -> Vec<MarkerReading> {
        vec![
            MarkerReading::new(6.0, None),
            MarkerReading::new(73.0, Some(4.0)),
            MarkerReading::new(136.0, Some(2.0)),
            MarkerReading::new(201.0, Some(3.0)),
            MarkerReading::new(266.0, Some(4.0)),
        ]
    }

    #[test]
    fn worked_slopes() {
        let t = pairwise_slopes(&worked_readings(), SLOPE_DECIMALS).unwrap();
        let got: Vec<(usize, usize, f64)> = t.slopes.iter().map(|p| (p.i, p.j, p.slope)).collect();
        assert_eq!(
            got,
            vec![
                (1, 2, -0.0317),
                (1, 3, -0.0078),
                (1, 4, 0.0),
                (2, 3, 0.0154),
                (2, 4, 0.0154),
                (3, 4, 0.0154),
            ]
        );
    }

    #[test]
    fn worked_consensus_and_offset() {
        let r = worked_readings();
        let t = pairwise_slopes(&r, SLOPE_DECIMALS).unwrap();
        let c = consensus_slope(&t.slopes, 0.0).unwrap();
        assert_eq!(c.slope, 0.0154);
        assert_eq!(c.agreeing.len(), 3);
        assert!(!c.low_confidence);
        let rel = fit_relation(&r, &c).unwrap();
        assert_eq!(round_decimals(rel.offset, 4), -0.0964);
        let out = correct_and_complete(&[6.0, 73.0, 136.0, 201.0, 266.0], &rel, 1.0);
        let vals: Vec<f64> = out.iter().map(|m| m.value.unwrap()).collect();
        assert_eq!(vals, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn snapping_near_zero() {
        let rel = LinearRelation {
            slope: 0.0154,
            offset: -0.0964,
        };
        let raw = rel.eval(6.0);
        assert!((raw + 0.004).abs() < 1e-12);
        assert_eq!(snap(raw, 1.0).to_bits(), 0.0f64.to_bits());
        let half = LinearRelation { slope: 0.005, offset: 0.0 };
        assert_eq!(snap(half.eval(100.0), 0.5), 0.5);
    }

    #[test]
    fn missing_values_make_no_pairs() {
        let r = vec![
            MarkerReading::new(0.0, None),
            MarkerReading::new(10.0, Some(1.0)),
            MarkerReading::new(20.0, Some(1.0)),
        ];
        let t = pairwise_slopes(&r, 4).unwrap();
        assert_eq!(t.slopes.len(), 1);
        assert_eq!(t.slopes[0].slope, 0.0);
        assert_eq!(
            pairwise_slopes(&r[..2], 4).unwrap_err(),
            CalibError::InsufficientReadings(1)
        );
    }

    #[test]
    fn coincident_pairs_are_skipped() {
        let r = vec![
            MarkerReading::new(5.0, Some(1.0)),
            MarkerReading::new(5.0, Some(2.0)),
            MarkerReading::new(15.0, Some(3.0)),
        ];
        let t = pairwise_slopes(&r, 4).unwrap();
        assert_eq!(t.coincident, vec![(0, 1)]);
        assert_eq!(t.slopes.len(), 2);
    }

    #[test]
    fn single_pair_is_low_confidence() {
        let r = vec![MarkerReading::new(0.0, Some(0.0)), MarkerReading::new(100.0, Some(10.0))];
        let cal = auto_correct(&r, &CalibOptions::default()).unwrap();
        assert!(cal.consensus.low_confidence);
        assert_eq!(cal.relation.slope, 0.1);
        assert_eq!(cal.relation.offset, 0.0);
    }

    fn ps(slopes: &[(usize, usize, f64)]) -> Vec<PairSlope> {
        slopes.iter().map(|&(i, j, slope)| PairSlope { i, j, slope }).collect()
    }

    #[test]
    fn all_distinct_is_no_consensus() {
        let s = ps(&[(0, 1, 0.1), (0, 2, 0.2), (1, 2, 0.3)]);
        assert_eq!(consensus_slope(&s, 0.0).unwrap_err(), CalibError::NoConsensus);
    }

    #[test]
    fn ties_break_on_marker_span() {
        // 0.01 pairs touch markers {0,1,2}; 0.02 pairs touch {3,4,5,6}
        let s = ps(&[(0, 1, 0.01), (1, 2, 0.01), (3, 4, 0.02), (5, 6, 0.02)]);
        assert_eq!(consensus_slope(&s, 0.0).unwrap().slope, 0.02);
        let s = ps(&[(0, 1, 0.01), (2, 3, 0.01), (4, 5, 0.02), (6, 7, 0.02)]);
        assert_eq!(consensus_slope(&s, 0.0).unwrap_err(), CalibError::AmbiguousConsensus);
    }

    #[test]
    fn tolerance_groups_near_slopes() {
        let s = ps(&[(0, 1, 0.0143), (0, 2, 0.0144), (1, 2, 0.0145), (0, 3, 0.0300)]);
        assert_eq!(consensus_slope(&s, 0.0).unwrap_err(), CalibError::NoConsensus);
        let c = consensus_slope(&s, 0.03).unwrap();
        assert_eq!(c.slope, 0.0144);
        assert_eq!(c.agreeing.len(), 3);
    }

    #[test]
    fn misread_is_rejected_and_replaced() {
        let cal = auto_correct(&worked_readings(), &CalibOptions::default()).unwrap();
        assert_eq!(cal.rejected, vec![1]);
        assert_eq!(cal.corrected[1].value, Some(1.0));
        assert_eq!(cal.grain, 1.0);
    }

    #[test]
    fn fractional_labels_get_decimal_grain() {
        let r: Vec<MarkerReading> = (0..5)
            .map(|k| MarkerReading::new(20.0 + 50.0 * k as f64, Some(0.5 * k as f64)))
            .collect();
        let cal = auto_correct(&r, &CalibOptions::default()).unwrap();
        assert_eq!(cal.grain, 0.1);
        let vals: Vec<f64> = cal.corrected.iter().map(|m| m.value.unwrap()).collect();
        assert_eq!(vals, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn grain_follows_label_step() {
        assert_eq!(grain_for_step(1.001), 1.0);
        assert_eq!(grain_for_step(0.98), 1.0);
        assert_eq!(grain_for_step(10.0), 10.0);
        assert_eq!(grain_for_step(0.504), 0.1);
        assert_eq!(grain_for_step(25.0), 1.0);
        assert_eq!(grain_for_step(0.25), 0.01);
        assert_eq!(grain_for_step(2.0), 1.0);
        assert_eq!(grain_for_step(3.0), 1.0);
        assert_eq!(marker_step(&[6.0, 73.0, 136.0, 201.0, 266.0], 0.0154), Some(0.0154 * 65.0));
    }

    #[test]
    fn half_step_labels_survive_unread_halves() {
        // only the whole labels were read; spacing still says the step is 0.5
        let r = vec![
            MarkerReading::new(10.0, Some(0.0)),
            MarkerReading::new(90.0, None),
            MarkerReading::new(170.0, Some(1.0)),
            MarkerReading::new(250.0, None),
            MarkerReading::new(330.0, Some(2.0)),
        ];
        let cal = auto_correct(&r, &CalibOptions::default()).unwrap();
        let vals: Vec<f64> = cal.corrected.iter().map(|m| m.value.unwrap()).collect();
        assert_eq!(vals, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn zero_slope_is_rejected() {
        let r = vec![
            MarkerReading::new(0.0, Some(3.0)),
            MarkerReading::new(10.0, Some(3.0)),
            MarkerReading::new(20.0, Some(3.0)),
        ];
        assert_eq!(
            auto_correct(&r, &CalibOptions::default()).unwrap_err(),
            CalibError::DegenerateSlope
        );
    }
}
