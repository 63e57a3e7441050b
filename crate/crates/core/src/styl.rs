//! Superpositional f0 stylization: phrase-level register fits, local accent
//! polynomials, local register, and Gestalt deviations.
//!
//! Register stylization slides a 50 ms window in 10 ms steps over a semitone
//! segment. Per window, medians of the values at or below the 10th / at or
//! above the 90th percentile give base- and topline points, the median of all
//! values a midline point. Lines are least-squares fits over segment time
//! normalized to [0, 1]; range is a further fit through the pointwise
//! topline-baseline distances.

use nalgebra::{DMatrix, DVector};

use crate::ingest::SampledTrack;
use crate::util;

/// Regression line over normalized time: `c0 + c1 * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub c0: f64,
    pub c1: f64,
}

impl Line {
    fn at(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t
    }
}

/// Register stylization of one segment: level (midline) and range lines plus
/// their sampled values on the window-center grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterFit {
    pub lev: Line,
    pub rng: Line,
    /// Absolute times (seconds) of the window centers.
    pub grid: Vec<f64>,
    /// Fitted midline sampled on `grid`.
    pub midline: Vec<f64>,
    /// Fitted range line sampled on `grid`.
    pub rangeline: Vec<f64>,
    seg_start: f64,
    seg_span: f64,
}

impl RegisterFit {
    fn norm(&self, t: f64) -> f64 {
        (t - self.seg_start) / self.seg_span
    }

    /// Fitted midline value at absolute time `t`.
    pub fn midline_at(&self, t: f64) -> f64 {
        self.lev.at(self.norm(t))
    }

    /// Fitted range line value at absolute time `t`.
    pub fn rangeline_at(&self, t: f64) -> f64 {
        self.rng.at(self.norm(t))
    }
}

/// Fits the register lines of a semitone segment `[start, end)`.
///
/// Returns `None` (a marked-missing fit) for segments too short to hold two
/// windows or with a degenerate window grid.
pub fn fit_register(
    track: &SampledTrack,
    start: f64,
    end: f64,
    window_s: f64,
    step_s: f64,
) -> Option<RegisterFit> {
    if end <= start {
        return None;
    }
    let range = track.index_range(start, end);
    let n_seg = range.len();
    let w = (window_s * track.rate).round().max(1.0) as usize;
    let s = (step_s * track.rate).round().max(1.0) as usize;
    if n_seg < w + s {
        return None;
    }

    let mut grid = Vec::new();
    let mut base_seq = Vec::new();
    let mut mid_seq = Vec::new();
    let mut top_seq = Vec::new();
    let mut o = 0;
    while o + w <= n_seg {
        let i0 = range.start + o;
        let mut vals: Vec<f64> = track.values[i0..i0 + w].to_vec();
        vals.sort_by(|a, b| a.total_cmp(b));
        let p10 = util::percentile_sorted(&vals, 10.0);
        let p90 = util::percentile_sorted(&vals, 90.0);
        let low: Vec<f64> = vals.iter().copied().filter(|&v| v <= p10).collect();
        let high: Vec<f64> = vals.iter().copied().filter(|&v| v >= p90).collect();
        base_seq.push(util::median(&low).unwrap());
        top_seq.push(util::median(&high).unwrap());
        mid_seq.push(util::percentile_sorted(&vals, 50.0));
        grid.push((i0 as f64 + (w as f64 - 1.0) / 2.0) / track.rate);
        o += s;
    }
    if grid.len() < 2 {
        return None;
    }

    let seg_start = start;
    let seg_span = end - start;
    let t_norm: Vec<f64> = grid.iter().map(|&t| (t - seg_start) / seg_span).collect();
    let (lev_c0, lev_c1) = util::ols_line(&t_norm, &mid_seq)?;
    let dist_seq: Vec<f64> = top_seq.iter().zip(&base_seq).map(|(&t, &b)| t - b).collect();
    let (rng_c0, rng_c1) = util::ols_line(&t_norm, &dist_seq)?;

    let lev = Line {
        c0: lev_c0,
        c1: lev_c1,
    };
    let rng = Line {
        c0: rng_c0,
        c1: rng_c1,
    };
    let midline: Vec<f64> = t_norm.iter().map(|&t| lev.at(t)).collect();
    let rangeline: Vec<f64> = t_norm.iter().map(|&t| rng.at(t)).collect();
    Some(RegisterFit {
        lev,
        rng,
        grid,
        midline,
        rangeline,
        seg_start,
        seg_span,
    })
}

/// Least-squares third-order polynomial fit to the midline-subtracted
/// contour around a syllable nucleus.
///
/// The window of `window_s` seconds sits symmetrically on the nucleus and is
/// clipped to `[seg_start, seg_end]`; time is normalized so the full window
/// spans [-1, 1] with the nucleus at 0. `None` with fewer than 4 samples.
pub fn fit_accent_poly(
    residual: &SampledTrack,
    nucleus_time: f64,
    window_s: f64,
    seg_start: f64,
    seg_end: f64,
) -> Option<[f64; 4]> {
    let half = window_s / 2.0;
    let lo = (nucleus_time - half).max(seg_start);
    let hi = (nucleus_time + half).min(seg_end);
    let range = residual.index_range(lo, hi + 1e-9);
    let n = range.len();
    if n < 4 {
        return None;
    }
    let mut a = DMatrix::zeros(n, 4);
    let mut y = DVector::zeros(n);
    for (row, i) in range.enumerate() {
        let t = (residual.time_of(i) - nucleus_time) / half;
        let mut p = 1.0;
        for col in 0..4 {
            a[(row, col)] = p;
            p *= t;
        }
        y[row] = residual.values[i];
    }
    let svd = a.svd(true, true);
    let sol = svd.solve(&y, 1e-12).ok()?;
    Some([sol[0], sol[1], sol[2], sol[3]])
}

/// Gestalt deviation of a local register fit from the underlying phrase fit:
/// RMSD between the midlines and between the range lines, both sampled on
/// the local (accent window) grid.
pub fn gestalt(local: &RegisterFit, phrase: &RegisterFit) -> (f64, f64) {
    let phrase_mid: Vec<f64> = local.grid.iter().map(|&t| phrase.midline_at(t)).collect();
    let phrase_rng: Vec<f64> = local.grid.iter().map(|&t| phrase.rangeline_at(t)).collect();
    (
        util::rmsd(&local.midline, &phrase_mid),
        util::rmsd(&local.rangeline, &phrase_rng),
    )
}

/// Local pitch event stylization: polynomial shape, local register, and
/// Gestalt deviations. Fields are `None` where the underlying fit is missing.
#[derive(Debug, Clone)]
pub struct AccentShape {
    /// Nucleus time, seconds.
    pub time: f64,
    /// Polynomial coefficients s0..s3 of the residual shape.
    pub poly: Option<[f64; 4]>,
    /// Register fit within the accent window.
    pub register: Option<RegisterFit>,
    /// (gst_lev, gst_rng): RMSD against the phrase register.
    pub gestalt: Option<(f64, f64)>,
}

/// Stylizes one local pitch event against its phrase register fit.
#[allow(clippy::too_many_arguments)]
pub fn stylize_accent(
    semitones: &SampledTrack,
    residual: &SampledTrack,
    phrase: &RegisterFit,
    nucleus_time: f64,
    window_s: f64,
    register_window_s: f64,
    register_step_s: f64,
    seg_start: f64,
    seg_end: f64,
) -> AccentShape {
    let half = window_s / 2.0;
    let lo = (nucleus_time - half).max(seg_start);
    let hi = (nucleus_time + half).min(seg_end);
    let poly = fit_accent_poly(residual, nucleus_time, window_s, seg_start, seg_end);
    let register = fit_register(semitones, lo, hi, register_window_s, register_step_s);
    let gestalt = register.as_ref().map(|local| gestalt(local, phrase));
    AccentShape {
        time: nucleus_time,
        poly,
        register,
        gestalt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::TrackUnit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st_track(values: Vec<f64>) -> SampledTrack {
        SampledTrack::from_values(values, 100.0, TrackUnit::Semitone)
    }

    #[test]
    fn constant_segment_register() {
        let t = st_track(vec![10.0; 100]);
        let fit = fit_register(&t, 0.0, 1.0, 0.05, 0.01).unwrap();
        assert!((fit.lev.c0 - 10.0).abs() < 1e-9);
        assert!(fit.lev.c1.abs() < 1e-9);
        assert!(fit.rng.c0.abs() < 1e-9);
        assert!(fit.rng.c1.abs() < 1e-9);
    }

    #[test]
    fn linear_segment_register() {
        // 0 -> 6 st over the segment: medians of a line lie on the line.
        let values: Vec<f64> = (0..100).map(|i| 6.0 * i as f64 / 99.0).collect();
        let t = st_track(values);
        let fit = fit_register(&t, 0.0, 1.0, 0.05, 0.01).unwrap();
        assert!(
            (fit.lev.c1 - 6.0 * 100.0 / 99.0).abs() < 0.05,
            "{}",
            fit.lev.c1
        );
        assert!(fit.rng.c1.abs() < 0.05);
    }

    /// Windowed-median oracle: recompute base/mid/top sequences by definition
    /// and fit lines with a separately coded normal-equation solve.
    fn register_oracle(values: &[f64], seg_dur: f64) -> (f64, f64, f64, f64) {
        let mut mids = Vec::new();
        let mut dists = Vec::new();
        let mut ts = Vec::new();
        for o in 0..=(values.len() - 5) {
            let mut w: Vec<f64> = values[o..o + 5].to_vec();
            w.sort_by(|a, b| a.total_cmp(b));
            let h10: f64 = 4.0 * 0.1;
            let p10 = w[0] + h10.fract() * (w[1] - w[0]);
            let h90: f64 = 4.0 * 0.9;
            let p90 = w[3] + (h90 - 3.0) * (w[4] - w[3]);
            let low: Vec<f64> = w.iter().copied().filter(|&v| v <= p10).collect();
            let high: Vec<f64> = w.iter().copied().filter(|&v| v >= p90).collect();
            let med = |s: &[f64]| {
                let m = s.len();
                if m % 2 == 1 {
                    s[m / 2]
                } else {
                    (s[m / 2 - 1] + s[m / 2]) / 2.0
                }
            };
            mids.push(w[2]);
            dists.push(med(&high) - med(&low));
            ts.push((o as f64 + 2.0) / 100.0 / seg_dur);
        }
        let fit = |x: &[f64], y: &[f64]| {
            let n = x.len() as f64;
            let sx: f64 = x.iter().sum();
            let sy: f64 = y.iter().sum();
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let c1 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            ((sy - c1 * sx) / n, c1)
        };
        let (lc0, lc1) = fit(&ts, &mids);
        let (rc0, rc1) = fit(&ts, &dists);
        (lc0, lc1, rc0, rc1)
    }

    #[test]
    fn ripple_register_matches_windowed_median_oracle() {
        // Line plus a +/-2 st square ripple with a 40 ms period.
        let values: Vec<f64> = (0..200)
            .map(|i| {
                let line = 8.0 + 1.0 * i as f64 / 100.0;
                let ripple = if (i / 2) % 2 == 0 { 2.0 } else { -2.0 };
                line + ripple
            })
            .collect();
        let t = st_track(values.clone());
        let fit = fit_register(&t, 0.0, 2.0, 0.05, 0.01).unwrap();
        let (lc0, lc1, rc0, rc1) = register_oracle(&values, 2.0);
        assert!((fit.lev.c0 - lc0).abs() < 1e-9);
        assert!((fit.lev.c1 - lc1).abs() < 1e-9);
        assert!((fit.rng.c0 - rc0).abs() < 1e-9);
        assert!((fit.rng.c1 - rc1).abs() < 1e-9);
        // And the construction recovers the designed range of ~4 st.
        assert!((fit.rng.c0 - 4.0).abs() < 0.1, "rng.c0 = {}", fit.rng.c0);
        assert!(fit.rng.c1.abs() < 0.1);
    }

    #[test]
    fn register_translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values: Vec<f64> = (0..150)
            .map(|i| 5.0 + (i as f64 * 0.13).sin() + rng.gen_range(-0.5..0.5))
            .collect();
        let shifted: Vec<f64> = values.iter().map(|v| v + 3.0).collect();
        let f0 = fit_register(&st_track(values), 0.0, 1.5, 0.05, 0.01).unwrap();
        let f1 = fit_register(&st_track(shifted), 0.0, 1.5, 0.05, 0.01).unwrap();
        assert!((f1.lev.c0 - f0.lev.c0 - 3.0).abs() < 1e-9);
        assert!((f1.lev.c1 - f0.lev.c1).abs() < 1e-9);
        assert!((f1.rng.c0 - f0.rng.c0).abs() < 1e-9);
        assert!((f1.rng.c1 - f0.rng.c1).abs() < 1e-9);
    }

    #[test]
    fn short_segment_is_marked_missing() {
        let t = st_track(vec![1.0; 100]);
        assert!(fit_register(&t, 0.0, 0.05, 0.05, 0.01).is_none());
    }

    #[test]
    fn accent_poly_exact_recovery() {
        // Residual generated from (s0, s1, s2, s3) = (0, 0, 1, 0).
        let nucleus = 0.5;
        let values: Vec<f64> = (0..100)
            .map(|i| {
                let t = (i as f64 / 100.0 - nucleus) / 0.15;
                t * t
            })
            .collect();
        let t = st_track(values);
        let poly = fit_accent_poly(&t, nucleus, 0.3, 0.0, 1.0).unwrap();
        assert!(poly[0].abs() < 1e-6);
        assert!(poly[1].abs() < 1e-6);
        assert!((poly[2] - 1.0).abs() < 1e-6);
        assert!(poly[3].abs() < 1e-6);
    }

    #[test]
    fn accent_poly_constant_residual() {
        let t = st_track(vec![2.5; 100]);
        let poly = fit_accent_poly(&t, 0.5, 0.3, 0.0, 1.0).unwrap();
        assert!((poly[0] - 2.5).abs() < 1e-9);
        for &c in &poly[1..] {
            assert!(c.abs() < 1e-9);
        }
    }

    /// Normal-equation oracle for the cubic fit over the accent window.
    fn poly_oracle(track: &SampledTrack, nucleus: f64, lo: f64, hi: f64) -> [f64; 4] {
        let range = track.index_range(lo, hi + 1e-9);
        let mut m = [[0.0f64; 5]; 4];
        for i in range {
            let t = (track.time_of(i) - nucleus) / 0.15;
            for r in 0..4 {
                for c in 0..4 {
                    m[r][c] += t.powi((r + c) as i32);
                }
                m[r][4] += t.powi(r as i32) * track.values[i];
            }
        }
        for col in 0..4 {
            let piv = (col..4)
                .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
                .unwrap();
            m.swap(col, piv);
            for row in 0..4 {
                if row != col {
                    let f = m[row][col] / m[col][col];
                    for k in col..5 {
                        m[row][k] -= f * m[col][k];
                    }
                }
            }
        }
        [
            m[0][4] / m[0][0],
            m[1][4] / m[1][1],
            m[2][4] / m[2][2],
            m[3][4] / m[3][3],
        ]
    }

    #[test]
    fn accent_poly_matches_normal_equation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..100)
            .map(|i| {
                let t = (i as f64 / 100.0 - 0.5) / 0.15;
                2.0 * (-t * t).exp() + rng.gen_range(-0.3..0.3)
            })
            .collect();
        let t = st_track(values);
        let got = fit_accent_poly(&t, 0.5, 0.3, 0.0, 1.0).unwrap();
        let want = poly_oracle(&t, 0.5, 0.35, 0.65);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn accent_poly_linear_in_input() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.07).sin()).collect();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 0.11).cos()).collect();
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let pa = fit_accent_poly(&st_track(a), 0.5, 0.3, 0.0, 1.0).unwrap();
        let pb = fit_accent_poly(&st_track(b), 0.5, 0.3, 0.0, 1.0).unwrap();
        let ps = fit_accent_poly(&st_track(sum), 0.5, 0.3, 0.0, 1.0).unwrap();
        for i in 0..4 {
            assert!((pa[i] + pb[i] - ps[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn accent_poly_too_few_samples_missing() {
        let t = st_track(vec![1.0; 100]);
        // Window clipped to a segment holding too few samples.
        assert!(fit_accent_poly(&t, 0.5, 0.3, 0.49, 0.51).is_none());
    }

    #[test]
    fn gestalt_identities() {
        let t = st_track(vec![10.0; 100]);
        let phrase = fit_register(&t, 0.0, 1.0, 0.05, 0.01).unwrap();
        let local = fit_register(&t, 0.3, 0.6, 0.05, 0.01).unwrap();
        let (lev, rng) = gestalt(&local, &phrase);
        assert!(lev.abs() < 1e-9);
        assert!(rng.abs() < 1e-9);

        // Local midline two semitones above the phrase midline.
        let shifted = st_track(vec![12.0; 100]);
        let local2 = fit_register(&shifted, 0.3, 0.6, 0.05, 0.01).unwrap();
        let (lev2, _) = gestalt(&local2, &phrase);
        assert!((lev2 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn gestalt_matches_pointwise_rmsd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..100)
            .map(|i| 5.0 + 0.03 * i as f64 + rng.gen_range(-1.0..1.0))
            .collect();
        let b: Vec<f64> = (0..100)
            .map(|i| 6.5 - 0.01 * i as f64 + rng.gen_range(-1.0..1.0))
            .collect();
        let phrase = fit_register(&st_track(a), 0.0, 1.0, 0.05, 0.01).unwrap();
        let local = fit_register(&st_track(b), 0.4, 0.7, 0.05, 0.01).unwrap();
        let (lev, rg) = gestalt(&local, &phrase);
        let mut acc_lev = 0.0;
        let mut acc_rng = 0.0;
        for (i, &t) in local.grid.iter().enumerate() {
            let dm = local.midline[i] - phrase.midline_at(t);
            let dr = local.rangeline[i] - phrase.rangeline_at(t);
            acc_lev += dm * dm;
            acc_rng += dr * dr;
        }
        let n = local.grid.len() as f64;
        assert!((lev - (acc_lev / n).sqrt()).abs() < 1e-12);
        assert!((rg - (acc_rng / n).sqrt()).abs() < 1e-12);
    }
}
