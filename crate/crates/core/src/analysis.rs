//! Extremum detection and line-shape classification for sampled spectra.
//!
//! A series is a slice of `(detuning, value)` pairs sorted by detuning.
//! Prominence follows the usual topographic definition: the height of an
//! extremum above the higher of the two lowest points reachable on either
//! side before meeting a more extreme sample (or the end of the series).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default significance threshold as a fraction of the series range.
pub const DEFAULT_PROMINENCE_FRACTION: f64 = 0.0125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub index: usize,
    pub detuning: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    SinglePeak,
    /// A lone dip (the "V" line shape).
    SingleDip,
    M,
    W,
    TripleDip,
    TriplePeak,
    SplitM,
    SplitW,
    Flat,
    Other,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLabel {
    pub label: Profile,
    /// Significant extremum kinds in detuning order, e.g. `max,min,max`.
    pub signature: String,
    pub extrema: Vec<Extremum>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub window_height: f64,
    pub window_fwhm: f64,
    pub envelope_fwhm: f64,
    pub splitting: f64,
}

fn check_series(series: &[(f64, f64)]) -> Result<()> {
    if series.len() < 3 {
        return Err(Error::Input(format!(
            "series needs at least 3 points, got {}",
            series.len()
        )));
    }
    if series.windows(2).any(|w| w[0].0.partial_cmp(&w[1].0).is_none_or(|o| o.is_gt())) {
        return Err(Error::Input("series must be sorted by detuning".into()));
    }
    if series.iter().any(|p| !p.1.is_finite()) {
        return Err(Error::Input("series contains non-finite values".into()));
    }
    Ok(())
}

/// Variation below this fraction of the series magnitude is rounding noise.
pub const NOISE_FLOOR_FRACTION: f64 = 1e-9;

/// `DEFAULT_PROMINENCE_FRACTION` of the series range, but never below the
/// rounding-noise floor.
pub fn default_min_prominence(series: &[(f64, f64)]) -> f64 {
    let (lo, hi) = series
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if lo.is_finite() && hi.is_finite() {
        let floor = NOISE_FLOOR_FRACTION * lo.abs().max(hi.abs());
        (DEFAULT_PROMINENCE_FRACTION * (hi - lo)).max(floor)
    } else {
        0.0
    }
}

/// Prominence of a maximum occupying the plateau `start..=end`.
fn peak_prominence(values: &[f64], start: usize, end: usize) -> f64 {
    let v = values[start];
    let mut left_min = v;
    for &y in values[..start].iter().rev() {
        if y > v {
            break;
        }
        left_min = left_min.min(y);
    }
    let mut right_min = v;
    for &y in &values[end + 1..] {
        if y > v {
            break;
        }
        right_min = right_min.min(y);
    }
    v - left_min.max(right_min)
}

/// Interior local extrema with prominence at least `min_prominence`.
/// Plateaus report their midpoint, rounding toward lower detuning.
pub fn find_extrema(series: &[(f64, f64)], min_prominence: f64) -> Result<Vec<Extremum>> {
    check_series(series)?;
    let values: Vec<f64> = series.iter().map(|p| p.1).collect();
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let n = values.len();
    let mut out = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start;
        while end + 1 < n && values[end + 1] == values[start] {
            end += 1;
        }
        if start > 0 && end + 1 < n {
            let (before, here, after) = (values[start - 1], values[start], values[end + 1]);
            let kind = if before < here && after < here {
                Some(ExtremumKind::Max)
            } else if before > here && after > here {
                Some(ExtremumKind::Min)
            } else {
                None
            };
            if let Some(kind) = kind {
                let prominence = match kind {
                    ExtremumKind::Max => peak_prominence(&values, start, end),
                    ExtremumKind::Min => peak_prominence(&negated, start, end),
                };
                if prominence >= min_prominence {
                    let index = (start + end) / 2;
                    out.push(Extremum {
                        index,
                        detuning: series[index].0,
                        value: here,
                        kind,
                        prominence,
                    });
                }
            }
        }
        start = end + 1;
    }
    Ok(out)
}

fn signature(extrema: &[Extremum]) -> String {
    extrema
        .iter()
        .map(|e| match e.kind {
            ExtremumKind::Max => "max",
            ExtremumKind::Min => "min",
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Detuning where the series first drops to `level` walking from `from` in
/// direction `step`, linearly interpolated. Returns the end point if it never does.
fn crossing_below(series: &[(f64, f64)], from: usize, step: isize, level: f64) -> f64 {
    let mut k = from as isize;
    loop {
        let next = k + step;
        if next < 0 || next as usize >= series.len() {
            return series[k as usize].0;
        }
        let (x0, y0) = series[k as usize];
        let (x1, y1) = series[next as usize];
        if y1 <= level {
            if y0 == y1 {
                return x1;
            }
            return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
        }
        k = next;
    }
}

fn negate(series: &[(f64, f64)]) -> Vec<(f64, f64)> {
    series.iter().map(|&(x, y)| (x, -y)).collect()
}

/// For a `max,min,max,min,max,min,max` pattern: are the two outer M shapes
/// separated by a gap wider than their two envelope widths combined?
/// Widths are taken at half height between the central minimum and the
/// lowest of the four maxima.
fn is_split_pair(series: &[(f64, f64)], ext: &[Extremum]) -> bool {
    debug_assert_eq!(ext.len(), 7);
    let floor = ext[3].value;
    let top = [ext[0], ext[2], ext[4], ext[6]]
        .iter()
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let level = floor + 0.5 * (top - floor);
    let left_outer = crossing_below(series, ext[0].index, -1, level);
    let left_inner = crossing_below(series, ext[2].index, 1, level);
    let right_inner = crossing_below(series, ext[4].index, -1, level);
    let right_outer = crossing_below(series, ext[6].index, 1, level);
    let gap = right_inner - left_inner;
    let envelopes = (left_inner - left_outer) + (right_outer - right_inner);
    gap > envelopes
}

/// Collapses runs of same-kind extrema (left behind when a shallow
/// extremum between them is filtered out) to their most extreme member.
fn merge_runs(extrema: Vec<Extremum>) -> Vec<Extremum> {
    let mut out: Vec<Extremum> = Vec::with_capacity(extrema.len());
    for e in extrema {
        match out.last_mut() {
            Some(last) if last.kind == e.kind => {
                let more_extreme = match e.kind {
                    ExtremumKind::Max => e.value > last.value,
                    ExtremumKind::Min => e.value < last.value,
                };
                if more_extreme {
                    *last = e;
                }
            }
            _ => out.push(e),
        }
    }
    out
}

pub fn classify_profile(series: &[(f64, f64)], min_prominence: f64) -> Result<ProfileLabel> {
    let extrema = merge_runs(find_extrema(series, min_prominence)?);
    use ExtremumKind::{Max, Min};
    let kinds: Vec<ExtremumKind> = extrema.iter().map(|e| e.kind).collect();
    let label = match kinds.as_slice() {
        [] => Profile::Flat,
        [Max] => Profile::SinglePeak,
        [Min] => Profile::SingleDip,
        [Max, Min, Max] => Profile::M,
        [Min, Max, Min] => Profile::W,
        [Min, Max, Min, Max, Min] => Profile::TripleDip,
        [Max, Min, Max, Min, Max] => Profile::TriplePeak,
        [Max, Min, Max, Min, Max, Min, Max] => {
            if is_split_pair(series, &extrema) {
                Profile::SplitM
            } else {
                Profile::TripleDip
            }
        }
        [Min, Max, Min, Max, Min, Max, Min] => {
            let flipped = negate(series);
            let mut ext = extrema.clone();
            for e in &mut ext {
                e.value = -e.value;
            }
            if is_split_pair(&flipped, &ext) {
                Profile::SplitW
            } else {
                Profile::TriplePeak
            }
        }
        _ => Profile::Other,
    };
    Ok(ProfileLabel {
        label,
        signature: signature(&extrema),
        extrema,
    })
}

/// Classification with the default prominence threshold.
pub fn classify(series: &[(f64, f64)]) -> Result<ProfileLabel> {
    classify_profile(series, default_min_prominence(series))
}

/// Vertex of the parabola through the sample at `i` and its neighbours.
fn refined_position(series: &[(f64, f64)], i: usize) -> f64 {
    if i == 0 || i + 1 >= series.len() {
        return series[i].0;
    }
    let (x0, y0) = series[i - 1];
    let (x1, y1) = series[i];
    let (x2, y2) = series[i + 1];
    let h = 0.5 * (x2 - x0);
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature == 0.0 || (x1 - x0 - h).abs() > 1e-9 * h.abs() {
        return x1;
    }
    x1 + 0.5 * h * (y0 - y2) / curvature
}

/// Transparency-window and mode-splitting metrics of a reflected-intensity
/// series (a broad dip, possibly with a central peak or split into two).
/// Window height and width are zero when no peak separates the two deepest
/// minima; everything is zero for a series without a significant minimum.
pub fn window_metrics(series: &[(f64, f64)]) -> Result<WindowMetrics> {
    let extrema = find_extrema(series, default_min_prominence(series))?;
    let mut minima: Vec<&Extremum> = extrema.iter().filter(|e| e.kind == ExtremumKind::Min).collect();
    if minima.is_empty() {
        return Ok(WindowMetrics::default());
    }
    minima.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.index.cmp(&b.index)));
    let (lo, hi) = if minima.len() >= 2 {
        let (a, b) = (minima[0], minima[1]);
        if a.index < b.index {
            (a, b)
        } else {
            (b, a)
        }
    } else {
        (minima[0], minima[0])
    };

    let mut metrics = WindowMetrics::default();
    if lo.index != hi.index {
        metrics.splitting = refined_position(series, hi.index) - refined_position(series, lo.index);
        let central = extrema
            .iter()
            .filter(|e| e.kind == ExtremumKind::Max && e.index > lo.index && e.index < hi.index)
            .max_by(|a, b| a.value.total_cmp(&b.value));
        if let Some(peak) = central {
            let height = peak.value - 0.5 * (lo.value + hi.value);
            metrics.window_height = height;
            let level = peak.value - 0.5 * height;
            let left = crossing_below(series, peak.index, -1, level);
            let right = crossing_below(series, peak.index, 1, level);
            metrics.window_fwhm = right - left;
        }
    }

    let bottom = 0.5 * (lo.value + hi.value);
    let top = series[0].1.max(series[series.len() - 1].1);
    let level = bottom + 0.5 * (top - bottom);
    let inverted = negate(series);
    let left = crossing_below(&inverted, lo.index, -1, -level);
    let right = crossing_below(&inverted, hi.index, 1, -level);
    metrics.envelope_fwhm = right - left;
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sample(n: usize, half_span: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let x = half_span * (2 * k as i64 - (n as i64 - 1)) as f64 / (n - 1) as f64;
                (x, f(x))
            })
            .collect()
    }

    fn lorentzian(x: f64, centre: f64, hwhm: f64) -> f64 {
        1.0 / (1.0 + ((x - centre) / hwhm).powi(2))
    }

    #[test]
    fn monotone_has_no_extrema() {
        let s = sample(101, 1.0, |x| x.powi(3) + x);
        assert!(find_extrema(&s, 0.0).unwrap().is_empty());
        assert_eq!(classify(&s).unwrap().label, Profile::Flat);
    }

    #[test]
    fn lorentzian_dip_has_one_minimum_at_zero() {
        let s = sample(201, 1.0, |x| 1.0 - 0.8 * lorentzian(x, 0.0, 0.1));
        let e = find_extrema(&s, 0.0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].kind, ExtremumKind::Min);
        assert_eq!(e[0].detuning, 0.0);
        let edge = 1.0 - 0.8 * lorentzian(1.0, 0.0, 0.1);
        assert_abs_diff_eq!(e[0].prominence, edge - 0.2, epsilon = 1e-12);
        assert_eq!(classify(&s).unwrap().label, Profile::SingleDip);
        let m = window_metrics(&s).unwrap();
        assert_eq!(m.window_height, 0.0);
        assert_eq!(m.splitting, 0.0);
        assert!(m.envelope_fwhm > 0.15 && m.envelope_fwhm < 0.25);
    }

    #[test]
    fn too_short_or_unsorted() {
        assert!(find_extrema(&[(0.0, 1.0), (1.0, 0.0)], 0.0).is_err());
        assert!(find_extrema(&[(0.0, 1.0), (2.0, 0.0), (1.0, 3.0)], 0.0).is_err());
    }

    #[test]
    fn plateau_reports_lower_midpoint() {
        let s: Vec<(f64, f64)> = [0.0, 1.0, 2.0, 2.0, 2.0, 2.0, 1.0, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64, v))
            .collect();
        let e = find_extrema(&s, 0.0).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].index, 3);
    }

    #[test]
    fn prominence_filters_ripple() {
        let s = sample(401, 1.0, |x| {
            1.0 - 0.8 * lorentzian(x, 0.0, 0.2) + 0.003 * (100.0 * x).sin()
        });
        assert!(find_extrema(&s, 0.0).unwrap().len() > 1);
        assert_eq!(classify(&s).unwrap().label, Profile::SingleDip);
    }

    #[test]
    fn signatures_map_to_labels() {
        let m = sample(401, 1.0, |x| lorentzian(x, -0.3, 0.1) + lorentzian(x, 0.3, 0.1));
        assert_eq!(classify(&m).unwrap().label, Profile::M);
        let w: Vec<_> = m.iter().map(|&(x, y)| (x, -y)).collect();
        assert_eq!(classify(&w).unwrap().label, Profile::W);
        let peak = sample(401, 1.0, |x| lorentzian(x, 0.0, 0.1));
        assert_eq!(classify(&peak).unwrap().label, Profile::SinglePeak);
        let triple_peak = sample(801, 1.0, |x| {
            lorentzian(x, -0.4, 0.05) + lorentzian(x, 0.0, 0.05) + lorentzian(x, 0.4, 0.05)
        });
        assert_eq!(classify(&triple_peak).unwrap().label, Profile::TriplePeak);
        let triple_dip: Vec<_> = triple_peak.iter().map(|&(x, y)| (x, -y)).collect();
        assert_eq!(classify(&triple_dip).unwrap().label, Profile::TripleDip);
        let five = sample(1201, 1.2, |x| {
            (0..5).map(|k| lorentzian(x, -0.8 + 0.4 * k as f64, 0.05)).sum()
        });
        assert_eq!(classify(&five).unwrap().label, Profile::Other);
    }

    /// Two M shapes: shoulder pairs at ±(centre ± w) over a flat floor.
    fn two_ms(centre: f64, w: f64) -> Vec<(f64, f64)> {
        sample(4001, 1.0, |x| {
            [-centre - w, -centre + w, centre - w, centre + w]
                .iter()
                .map(|&c| lorentzian(x, c, 0.01))
                .sum()
        })
    }

    #[test]
    fn rounding_noise_is_flat() {
        let s = sample(101, 1.0, |x| 1.0 + 1e-16 * (37.0 * x).sin());
        assert_eq!(classify(&s).unwrap().label, Profile::Flat);
    }

    #[test]
    fn filtered_bump_leaves_one_dip() {
        let s = sample(801, 1.0, |x| {
            let x = x.abs();
            1.0 - 0.5 * lorentzian(x, -0.065, 0.1) - 0.5 * lorentzian(x, 0.065, 0.1)
        });
        assert_eq!(find_extrema(&s, 0.0).unwrap().len(), 3);
        let raw = find_extrema(&s, default_min_prominence(&s)).unwrap();
        let label = classify(&s).unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(label.label, Profile::SingleDip);
        assert_eq!(label.signature, "min");
    }

    #[test]
    fn split_versus_triple() {
        let far = two_ms(0.5, 0.03);
        let label = classify(&far).unwrap();
        assert_eq!(label.signature, "max,min,max,min,max,min,max");
        assert_eq!(label.label, Profile::SplitM);
        let near = two_ms(0.045, 0.03);
        let label = classify(&near).unwrap();
        assert_eq!(label.signature, "max,min,max,min,max,min,max");
        assert_eq!(label.label, Profile::TripleDip);

        let inverted: Vec<_> = far.iter().map(|&(x, y)| (x, 2.0 - y)).collect();
        assert_eq!(classify(&inverted).unwrap().label, Profile::SplitW);
        let inverted: Vec<_> = near.iter().map(|&(x, y)| (x, 2.0 - y)).collect();
        assert_eq!(classify(&inverted).unwrap().label, Profile::TriplePeak);
    }

    #[test]
    fn symmetric_double_dip_splitting() {
        let d0 = 0.237;
        let s = sample(1001, 1.0, |x| {
            1.0 - 0.9 * lorentzian(x, -d0, 0.05) - 0.9 * lorentzian(x, d0, 0.05)
        });
        let m = window_metrics(&s).unwrap();
        let step = 2.0 / 1000.0;
        // overlapping tails pull the minima inwards slightly
        assert!((m.splitting - 2.0 * d0).abs() < step + 0.01, "{}", m.splitting);
        assert!(m.window_height > 0.0);
        assert!(m.window_fwhm > 0.0 && m.window_fwhm < 2.0 * d0);
        assert!(m.envelope_fwhm > 2.0 * d0);
    }

    #[test]
    fn well_separated_dips_split_within_one_step() {
        let d0 = 0.4;
        let s = sample(1001, 1.0, |x| {
            1.0 - 0.9 * lorentzian(x, -d0, 0.01) - 0.9 * lorentzian(x, d0, 0.01)
        });
        let m = window_metrics(&s).unwrap();
        assert!((m.splitting - 2.0 * d0).abs() <= 2.0 / 1000.0);
    }

    proptest! {
        #[test]
        fn recovers_known_lorentzian_minima(
            centres in proptest::collection::vec(-0.8f64..0.8, 1..4),
            width in 0.01f64..0.03,
        ) {
            let mut centres = centres;
            centres.sort_by(f64::total_cmp);
            prop_assume!(centres.windows(2).all(|w| w[1] - w[0] > 20.0 * width));
            let n = 2001;
            let s = sample(n, 1.0, |x| {
                1.0 - centres.iter().map(|&c| 0.8 * lorentzian(x, c, width)).sum::<f64>()
            });
            let minima: Vec<_> = find_extrema(&s, 0.05).unwrap()
                .into_iter()
                .filter(|e| e.kind == ExtremumKind::Min)
                .collect();
            prop_assert_eq!(minima.len(), centres.len());
            let step = 2.0 / (n - 1) as f64;
            for (e, c) in minima.iter().zip(&centres) {
                prop_assert!((e.detuning - c).abs() <= step);
            }
        }

        #[test]
        fn classification_is_affine_and_mirror_invariant(
            centres in proptest::collection::vec(-0.8f64..0.8, 1..5),
            signs in proptest::collection::vec(proptest::bool::ANY, 5),
            scale in 0.1f64..10.0,
            offset in -5.0f64..5.0,
        ) {
            let s = sample(1001, 1.0, |x| {
                centres.iter().zip(&signs)
                    .map(|(&c, &up)| if up { 1.0 } else { -1.0 } * lorentzian(x, c, 0.04))
                    .sum()
            });
            let base = classify(&s).unwrap().label;
            let affine: Vec<_> = s.iter().map(|&(x, y)| (x, scale * y + offset)).collect();
            prop_assert_eq!(classify(&affine).unwrap().label, base);
            let mirrored: Vec<_> = s.iter().rev().map(|&(x, y)| (-x, y)).collect();
            prop_assert_eq!(classify(&mirrored).unwrap().label, base);
        }
    }
}
