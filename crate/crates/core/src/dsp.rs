//! Contour preprocessing and spectral primitives.
//!
//! Gap interpolation, IQR outlier removal, Savitzky-Golay smoothing, the
//! semitone transform, windowed RMS energy, the fixed 200-4000 Hz band-pass,
//! and an orthonormal DCT-II with frequency mapping.

use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::DspError;
use crate::ingest::{SampledTrack, TrackUnit, Waveform, TRACK_RATE};
use crate::util;

/// Band-pass corner frequencies and order used for nucleus detection.
pub const BANDPASS_LOW_HZ: f64 = 200.0;
pub const BANDPASS_HIGH_HZ: f64 = 4000.0;
pub const BANDPASS_ORDER: usize = 5;

/// Savitzky-Golay configuration: third-order polynomials in 5-sample windows.
const SAVGOL_WINDOW: usize = 5;
const SAVGOL_ORDER: usize = 3;

/// Fills invalid samples: interior gaps by linear interpolation between the
/// nearest valid neighbors, leading/trailing gaps by holding the nearest
/// valid value. The result is fully valid.
pub fn interpolate_gaps(track: &SampledTrack) -> Result<SampledTrack, DspError> {
    let n = track.len();
    let valid_idx: Vec<usize> = (0..n).filter(|&i| track.valid[i]).collect();
    if valid_idx.is_empty() {
        return Err(DspError::AllInvalid);
    }
    let mut values = track.values.clone();
    let first = valid_idx[0];
    let last = *valid_idx.last().unwrap();
    for i in 0..first {
        values[i] = values[first];
    }
    for i in (last + 1)..n {
        values[i] = values[last];
    }
    for w in valid_idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a + 1 {
            let va = values[a];
            let vb = values[b];
            let span = (b - a) as f64;
            for i in (a + 1)..b {
                values[i] = va + (vb - va) * (i - a) as f64 / span;
            }
        }
    }
    Ok(SampledTrack::new(
        values,
        track.rate,
        vec![true; n],
        track.unit,
    ))
}

/// Marks f0 outliers invalid: valid samples whose log2 falls outside the
/// [Q1 - 1.5 IQR, Q3 + 1.5 IQR] fences of the valid samples' log2 values.
/// Boundary values are kept. No-op for fewer than four valid samples.
pub fn remove_outliers(track: &SampledTrack) -> SampledTrack {
    let logs: Vec<f64> = track
        .values
        .iter()
        .zip(&track.valid)
        .filter(|&(&v, &ok)| ok && v > 0.0)
        .map(|(&v, _)| v.log2())
        .collect();
    if logs.len() < 4 {
        return track.clone();
    }
    let q1 = util::percentile(&logs, 25.0).unwrap();
    let q3 = util::percentile(&logs, 75.0).unwrap();
    let iqr = q3 - q1;
    let lo = q1 - 1.5 * iqr;
    let hi = q3 + 1.5 * iqr;
    let mut valid = track.valid.clone();
    for i in 0..track.len() {
        if valid[i] {
            let v = track.values[i];
            if v <= 0.0 {
                valid[i] = false;
            } else {
                let l = v.log2();
                if l < lo || l > hi {
                    valid[i] = false;
                }
            }
        }
    }
    SampledTrack::new(track.values.clone(), track.rate, valid, track.unit)
}

/// Least-squares projection matrix of the Savitzky-Golay window: row `j`
/// holds the weights producing the order-3 fit evaluated at window position
/// `j` (positions -2..2).
fn savgol_projection() -> DMatrix<f64> {
    let w = SAVGOL_WINDOW;
    let mut a = DMatrix::zeros(w, SAVGOL_ORDER + 1);
    for i in 0..w {
        let x = i as f64 - (w as f64 - 1.0) / 2.0;
        let mut p = 1.0;
        for j in 0..=SAVGOL_ORDER {
            a[(i, j)] = p;
            p *= x;
        }
    }
    let ata_inv = (a.transpose() * &a)
        .try_inverse()
        .expect("Vandermonde normal matrix is invertible");
    &a * ata_inv * a.transpose()
}

/// Savitzky-Golay smoothing with third-order polynomials in 5-sample windows.
///
/// Interior samples are replaced by the fit of their centered window; edge
/// samples use the fit of the nearest full window evaluated at the edge
/// position. The validity mask is preserved.
pub fn savgol_smooth(track: &SampledTrack) -> Result<SampledTrack, DspError> {
    let n = track.len();
    if n < SAVGOL_WINDOW {
        return Err(DspError::TooShort {
            len: n,
            min: SAVGOL_WINDOW,
        });
    }
    let p = savgol_projection();
    let half = SAVGOL_WINDOW / 2;
    let x = &track.values;
    let mut out = vec![0.0; n];
    let apply = |window_start: usize, row: usize| -> f64 {
        (0..SAVGOL_WINDOW)
            .map(|i| p[(row, i)] * x[window_start + i])
            .sum()
    };
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i < half {
            apply(0, i)
        } else if i + half >= n {
            apply(n - SAVGOL_WINDOW, SAVGOL_WINDOW - (n - i))
        } else {
            apply(i - half, half)
        };
    }
    Ok(SampledTrack::new(
        out,
        track.rate,
        track.valid.clone(),
        track.unit,
    ))
}

/// Semitone base value: the median of the values at or below the 5th
/// percentile of the contour.
pub fn semitone_base(values: &[f64]) -> Result<f64, DspError> {
    for (i, &v) in values.iter().enumerate() {
        if v <= 0.0 {
            return Err(DspError::NonPositive { index: i, value: v });
        }
    }
    let p5 = util::percentile(values, 5.0).ok_or(DspError::AllInvalid)?;
    let low: Vec<f64> = values.iter().copied().filter(|&v| v <= p5).collect();
    Ok(util::median(&low).expect("minimum is always at or below the 5th percentile"))
}

/// Transforms a fully valid Hz contour to semitones relative to the base
/// value computed on the contour itself. Returns the track and the base.
pub fn to_semitones(track: &SampledTrack) -> Result<(SampledTrack, f64), DspError> {
    let base = semitone_base(&track.values)?;
    let st = to_semitones_with_base(track, base)?;
    Ok((st, base))
}

/// Semitone transform against an externally chosen base (e.g. a per-speaker
/// base shared by all of that speaker's segments).
pub fn to_semitones_with_base(
    track: &SampledTrack,
    base: f64,
) -> Result<SampledTrack, DspError> {
    debug_assert!(track.valid.iter().all(|&v| v), "expects a gap-free contour");
    if base <= 0.0 {
        return Err(DspError::NonPositive {
            index: 0,
            value: base,
        });
    }
    let mut values = Vec::with_capacity(track.len());
    for (i, &v) in track.values.iter().enumerate() {
        if v <= 0.0 {
            return Err(DspError::NonPositive { index: i, value: v });
        }
        values.push(12.0 * (v / base).log2());
    }
    Ok(SampledTrack::new(
        values,
        track.rate,
        track.valid.clone(),
        TrackUnit::Semitone,
    ))
}

/// Inverse of the semitone transform.
pub fn semitones_to_hz(st: f64, base: f64) -> f64 {
    base * (st / 12.0).exp2()
}

fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (len - 1) as f64).cos())
        .collect()
}

/// RMS energy contour at 100 Hz: at each frame, the RMS of the
/// Hamming-weighted samples in the 50 ms window centered on the frame time
/// (zero-padded at the signal edges).
pub fn rms_energy(w: &Waveform) -> SampledTrack {
    assert!(w.rate >= 8000, "energy extraction expects rate >= 8000 Hz");
    let rate = w.rate as f64;
    let mut win_len = (0.05 * rate).round() as usize;
    if win_len % 2 == 0 {
        win_len += 1;
    }
    let window = hamming(win_len);
    let half = (win_len / 2) as isize;
    let n = w.samples.len();
    let n_out = (n as f64 * TRACK_RATE / rate).ceil() as usize;
    let mut values = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let center = (k as f64 * rate / TRACK_RATE).round() as isize;
        let mut acc = 0.0f64;
        for (j, &wgt) in window.iter().enumerate() {
            let idx = center - half + j as isize;
            if idx >= 0 && (idx as usize) < n {
                let s = wgt * f64::from(w.samples[idx as usize]);
                acc += s * s;
            }
        }
        values.push((acc / win_len as f64).sqrt());
    }
    SampledTrack::from_values(values, TRACK_RATE, TrackUnit::Rms)
}

// ---------------------------------------------------------------------------
// Butterworth band-pass with zero-phase application

/// Digital band-pass transfer function coefficients (b, a), a[0] == 1.
#[derive(Debug, Clone)]
pub struct BandpassDesign {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

/// Designs the 5th-order Butterworth band-pass (200-4000 Hz) for `rate` via
/// the bilinear transform of the analog prototype.
pub fn design_bandpass(rate: f64) -> Result<BandpassDesign, DspError> {
    if rate <= 2.0 * BANDPASS_HIGH_HZ {
        return Err(DspError::RateTooLow {
            rate,
            cutoff: BANDPASS_HIGH_HZ,
        });
    }
    let n = BANDPASS_ORDER;
    let fs2 = 2.0 * rate;
    // Pre-warped corner frequencies.
    let w1 = fs2 * (PI * BANDPASS_LOW_HZ / rate).tan();
    let w2 = fs2 * (PI * BANDPASS_HIGH_HZ / rate).tan();
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;

    // Analog low-pass prototype poles on the unit circle, left half plane.
    let proto: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            Complex64::new(theta.cos(), theta.sin())
        })
        .collect();

    // Low-pass to band-pass: order doubles, n zeros appear at s = 0.
    let mut poles = Vec::with_capacity(2 * n);
    for &p in &proto {
        let ps = p * (bw / 2.0);
        let disc = (ps * ps - Complex64::new(w0 * w0, 0.0)).sqrt();
        poles.push(ps + disc);
        poles.push(ps - disc);
    }
    let gain = bw.powi(n as i32);

    // Bilinear transform.
    let fs2c = Complex64::new(fs2, 0.0);
    let z_poles: Vec<Complex64> = poles.iter().map(|&p| (fs2c + p) / (fs2c - p)).collect();
    // Analog zeros at s = 0 map to z = 1; the n extra zeros land at z = -1.
    let mut z_zeros = vec![Complex64::new(1.0, 0.0); n];
    z_zeros.extend(std::iter::repeat(Complex64::new(-1.0, 0.0)).take(n));
    let num: Complex64 = poles.iter().map(|&p| fs2c - p).product();
    // Analog zeros contribute prod(fs2 - 0) = fs2^n.
    let k_z = gain * (Complex64::new(fs2.powi(n as i32), 0.0) / num).re;

    let b: Vec<f64> = poly_from_roots(&z_zeros)
        .iter()
        .map(|c| c.re * k_z)
        .collect();
    let a: Vec<f64> = poly_from_roots(&z_poles).iter().map(|c| c.re).collect();
    Ok(BandpassDesign { b, a })
}

/// Monic polynomial coefficients (highest power first) from complex roots.
fn poly_from_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Transfer function magnitude at frequency `f` Hz for a digital filter.
pub fn tf_magnitude(design: &BandpassDesign, f: f64, rate: f64) -> f64 {
    let w = 2.0 * PI * f / rate;
    let eval = |c: &[f64]| -> Complex64 {
        c.iter()
            .enumerate()
            .map(|(k, &ck)| Complex64::from_polar(ck, -(k as f64) * w))
            .sum()
    };
    (eval(&design.b) / eval(&design.a)).norm()
}

/// Direct form II transposed filter with initial state `zi`.
fn lfilter(b: &[f64], a: &[f64], x: &[f64], zi: &[f64]) -> Vec<f64> {
    let order = a.len() - 1;
    debug_assert_eq!(b.len(), a.len());
    debug_assert_eq!(zi.len(), order);
    let mut z = zi.to_vec();
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + z[0];
        for i in 0..order - 1 {
            z[i] = b[i + 1] * xn + z[i + 1] - a[i + 1] * yn;
        }
        z[order - 1] = b[order] * xn - a[order] * yn;
        y.push(yn);
    }
    y
}

/// Steady-state initial filter state for a unit step input.
fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let order = a.len() - 1;
    // Solve (I - A^T) zi = b[1:] - a[1:] b[0], A the companion matrix of a.
    let mut m = DMatrix::zeros(order, order);
    for i in 0..order {
        m[(i, 0)] += a[i + 1];
        m[(i, i)] += 1.0;
        if i + 1 < order {
            m[(i, i + 1)] -= 1.0;
        }
    }
    let rhs = DVector::from_fn(order, |i, _| b[i + 1] - a[i + 1] * b[0]);
    let zi = m
        .lu()
        .solve(&rhs)
        .expect("filter state system is nonsingular");
    zi.as_slice().to_vec()
}

/// Zero-phase (forward-backward) application of the band-pass filter.
///
/// The signal is extended by odd reflection at both ends to suppress edge
/// transients; output length equals input length.
pub fn bandpass(w: &Waveform) -> Result<Waveform, DspError> {
    let design = design_bandpass(f64::from(w.rate))?;
    let filtered = filtfilt(&design.b, &design.a, &w.samples);
    Ok(Waveform::new(filtered, w.rate))
}

fn filtfilt(b: &[f64], a: &[f64], x: &[f32]) -> Vec<f32> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let pad = (3 * b.len().max(a.len())).min(n.saturating_sub(1));
    let mut ext = Vec::with_capacity(n + 2 * pad);
    let x0 = f64::from(x[0]);
    let xn = f64::from(x[n - 1]);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x0 - f64::from(x[i]));
    }
    ext.extend(x.iter().map(|&v| f64::from(v)));
    for i in 1..=pad {
        ext.push(2.0 * xn - f64::from(x[n - 1 - i]));
    }
    let zi = lfilter_zi(b, a);
    let scale_zi = |v: f64| -> Vec<f64> { zi.iter().map(|&z| z * v).collect() };

    let fwd = lfilter(b, a, &ext, &scale_zi(ext[0]));
    let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
    rev = lfilter(b, a, &rev, &scale_zi(rev[0]));
    rev.reverse();
    rev[pad..pad + n].iter().map(|&v| v as f32).collect()
}

// ---------------------------------------------------------------------------
// DCT

/// Orthonormal DCT-II coefficients with their frequency mapping.
#[derive(Debug, Clone)]
pub struct DctSpectrum {
    pub coefficients: Vec<f64>,
    /// Sample rate of the transformed contour, in Hz.
    pub rate: f64,
}

impl DctSpectrum {
    /// Frequency of coefficient `k`: k * rate / (2 N).
    pub fn freq_of(&self, k: usize) -> f64 {
        k as f64 * self.rate / (2.0 * self.coefficients.len() as f64)
    }
}

thread_local! {
    static FFT_PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Orthonormal DCT-II of the track values, computed through a complex FFT of
/// the even-odd reordered input.
pub fn dct_spectrum(track: &SampledTrack) -> DctSpectrum {
    let coefficients = dct2_ortho(&track.values);
    DctSpectrum {
        coefficients,
        rate: track.rate,
    }
}

fn dct2_ortho(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 2, "DCT needs at least two samples");
    // Even samples ascending, then odd samples descending.
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut front = 0;
    for (i, &v) in x.iter().enumerate() {
        if i % 2 == 0 {
            buf[front] = Complex64::new(v, 0.0);
            front += 1;
        }
    }
    let mut back = n;
    for (i, &v) in x.iter().enumerate() {
        if i % 2 == 1 {
            back -= 1;
            buf[back] = Complex64::new(v, 0.0);
        }
    }
    FFT_PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_forward(n);
        fft.process(&mut buf);
    });
    let s0 = (1.0 / (4.0 * n as f64)).sqrt();
    let sk = (1.0 / (2.0 * n as f64)).sqrt();
    (0..n)
        .map(|k| {
            let phase = Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            let c = 2.0 * (buf[k] * phase).re;
            c * if k == 0 { s0 } else { sk }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hz_track(values: Vec<f64>, valid: Vec<bool>) -> SampledTrack {
        SampledTrack::new(values, 100.0, valid, TrackUnit::Hertz)
    }

    #[test]
    fn interpolate_midpoint_and_holds() {
        let t = hz_track(vec![100.0, 0.0, 200.0], vec![true, false, true]);
        let r = interpolate_gaps(&t).unwrap();
        assert_eq!(r.values, vec![100.0, 150.0, 200.0]);
        assert!(r.valid.iter().all(|&v| v));

        let lead = hz_track(vec![0.0, 0.0, 120.0, 130.0], vec![false, false, true, true]);
        let r = interpolate_gaps(&lead).unwrap();
        assert_eq!(r.values, vec![120.0, 120.0, 120.0, 130.0]);
    }

    #[test]
    fn interpolate_identity_without_gaps() {
        let t = hz_track(vec![100.0, 110.0, 120.0], vec![true, true, true]);
        let r = interpolate_gaps(&t).unwrap();
        assert_eq!(r.values, t.values);
    }

    #[test]
    fn interpolate_all_invalid_errors() {
        let t = hz_track(vec![0.0, 0.0], vec![false, false]);
        assert!(matches!(interpolate_gaps(&t), Err(DspError::AllInvalid)));
    }

    #[test]
    fn outliers_constant_contour_untouched() {
        let t = hz_track(vec![100.0; 10], vec![true; 10]);
        let r = remove_outliers(&t);
        assert_eq!(r.valid, vec![true; 10]);
    }

    #[test]
    fn outlier_spike_marked_invalid() {
        // Fences computed on log2 of [100 x9, 400]: Q1 = Q3 = log2(100),
        // IQR = 0, so only the spike falls outside.
        let mut values = vec![100.0; 9];
        values.push(400.0);
        let t = hz_track(values, vec![true; 10]);
        let r = remove_outliers(&t);
        assert_eq!(r.valid[9], false);
        assert!(r.valid[..9].iter().all(|&v| v));
    }

    #[test]
    fn values_inside_fences_unchanged() {
        let values = vec![100.0, 102.0, 104.0, 106.0, 108.0, 110.0];
        let t = hz_track(values, vec![true; 6]);
        let r = remove_outliers(&t);
        assert!(r.valid.iter().all(|&v| v));
    }

    #[test]
    fn savgol_preserves_constants_and_cubics() {
        let t = SampledTrack::from_values(vec![5.0; 20], 100.0, TrackUnit::Semitone);
        let r = savgol_smooth(&t).unwrap();
        for &v in &r.values {
            assert!((v - 5.0).abs() < 1e-9);
        }

        let cubic: Vec<f64> = (0..30)
            .map(|i| {
                let x = i as f64 * 0.1;
                x * x * x - 2.0 * x
            })
            .collect();
        let t = SampledTrack::from_values(cubic.clone(), 100.0, TrackUnit::Semitone);
        let r = savgol_smooth(&t).unwrap();
        for i in 2..28 {
            assert!(
                (r.values[i] - cubic[i]).abs() < 1e-9,
                "interior sample {i} moved"
            );
        }
    }

    /// Brute-force window fit: solve the cubic normal equations by Gaussian
    /// elimination and evaluate at the requested offset.
    fn savgol_oracle(window: &[f64], at: f64) -> f64 {
        let xs: Vec<f64> = (0..window.len())
            .map(|i| i as f64 - (window.len() as f64 - 1.0) / 2.0)
            .collect();
        // Normal equations A^T A c = A^T y for the cubic Vandermonde.
        let mut m = [[0.0f64; 5]; 4];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = xs.iter().map(|&x| x.powi((r + c) as i32)).sum();
            }
            m[r][4] = xs
                .iter()
                .zip(window)
                .map(|(&x, &y)| x.powi(r as i32) * y)
                .sum();
        }
        for col in 0..4 {
            let piv = (col..4).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs())).unwrap();
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
        let coef: Vec<f64> = (0..4).map(|i| m[i][4] / m[i][i]).collect();
        coef.iter()
            .enumerate()
            .map(|(i, &c)| c * at.powi(i as i32))
            .sum()
    }

    #[test]
    fn savgol_matches_normal_equation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noisy: Vec<f64> = (0..40)
            .map(|i| (i as f64 * 0.3).sin() + rng.gen_range(-0.2..0.2))
            .collect();
        let t = SampledTrack::from_values(noisy.clone(), 100.0, TrackUnit::Semitone);
        let r = savgol_smooth(&t).unwrap();
        for i in 0..40 {
            let expected = if i < 2 {
                savgol_oracle(&noisy[0..5], i as f64 - 2.0)
            } else if i >= 38 {
                savgol_oracle(&noisy[35..40], i as f64 - 37.0)
            } else {
                savgol_oracle(&noisy[i - 2..i + 3], 0.0)
            };
            assert!((r.values[i] - expected).abs() < 1e-9, "sample {i}");
        }
    }

    #[test]
    fn savgol_too_short_errors() {
        let t = SampledTrack::from_values(vec![1.0; 4], 100.0, TrackUnit::Semitone);
        assert!(matches!(savgol_smooth(&t), Err(DspError::TooShort { .. })));
    }

    #[test]
    fn semitone_identities() {
        let t = SampledTrack::from_values(vec![100.0; 10], 100.0, TrackUnit::Hertz);
        let (st, base) = to_semitones(&t).unwrap();
        assert_eq!(base, 100.0);
        assert!(st.values.iter().all(|&v| v.abs() < 1e-12));

        // One octave above the base is 12 st.
        let t = SampledTrack::from_values(
            vec![100.0, 100.0, 100.0, 100.0, 200.0],
            100.0,
            TrackUnit::Hertz,
        );
        let (st, base) = to_semitones(&t).unwrap();
        assert_eq!(base, 100.0);
        assert!((st.values[4] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn semitone_base_percentile_oracle() {
        // 20 distinct values; compute the base strictly by definition.
        let values: Vec<f64> = (0..20).map(|i| 100.0 + 7.0 * i as f64).collect();
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let h: f64 = 19.0 * 0.05;
        let p5 = sorted[0] + (h - h.floor()) * (sorted[1] - sorted[0]);
        let below: Vec<f64> = sorted.iter().copied().filter(|&v| v <= p5).collect();
        let expected = below[below.len() / 2]; // odd-length median by definition
        assert_eq!(semitone_base(&values).unwrap(), expected);
    }

    #[test]
    fn semitone_rejects_non_positive() {
        let t = SampledTrack::from_values(vec![100.0, 0.0], 100.0, TrackUnit::Hertz);
        assert!(matches!(
            to_semitones(&t),
            Err(DspError::NonPositive { .. })
        ));
    }

    #[test]
    fn rms_energy_silence_is_zero() {
        let w = Waveform::new(vec![0.0; 16000], 16000);
        let e = rms_energy(&w);
        assert_eq!(e.len(), 100);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rms_energy_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<f32> = (0..16000).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let doubled: Vec<f32> = samples.iter().map(|&s| 2.0 * s).collect();
        let e1 = rms_energy(&Waveform::new(samples, 16000));
        let e2 = rms_energy(&Waveform::new(doubled, 16000));
        for (a, b) in e1.values.iter().zip(&e2.values) {
            assert!((2.0 * a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rms_energy_matches_direct_sum_oracle() {
        let rate = 16000u32;
        let samples: Vec<f32> = (0..rate)
            .map(|i| (2.0 * PI * 440.0 * i as f64 / f64::from(rate)).sin() as f32)
            .collect();
        let w = Waveform::new(samples.clone(), rate);
        let e = rms_energy(&w);
        let window = hamming(801);
        for k in (10..90).step_by(7) {
            let center = (k as f64 * f64::from(rate) / 100.0).round() as isize;
            let mut acc = 0.0;
            for (j, &wg) in window.iter().enumerate() {
                let idx = center - 400 + j as isize;
                if idx >= 0 && (idx as usize) < samples.len() {
                    let s = wg * f64::from(samples[idx as usize]);
                    acc += s * s;
                }
            }
            let expected = (acc / 801.0).sqrt();
            assert!((e.values[k] - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn bandpass_blocks_dc() {
        let w = Waveform::new(vec![0.5; 32000], 16000);
        let f = bandpass(&w).unwrap();
        assert_eq!(f.samples.len(), w.samples.len());
        // Skip the edge transient, then expect deep suppression.
        let peak = f.samples[4000..28000]
            .iter()
            .fold(0.0f32, |m, &v| m.max(v.abs()));
        assert!(peak < 0.5e-3, "residual DC {peak}");
    }

    #[test]
    fn bandpass_gain_matches_designed_transfer_function() {
        let rate = 16000u32;
        let design = design_bandpass(f64::from(rate)).unwrap();
        let tone = |f: f64| -> Vec<f32> {
            (0..rate * 2)
                .map(|i| (2.0 * PI * f * f64::from(i) / f64::from(rate)).sin() as f32)
                .collect()
        };

        // Forward-backward filtering applies the magnitude twice.
        let gain_1k = tf_magnitude(&design, 1000.0, f64::from(rate)).powi(2);
        let db_1k = 20.0 * gain_1k.log10();
        assert!(db_1k.abs() < 0.5, "1 kHz designed gain {db_1k} dB");

        let filtered = bandpass(&Waveform::new(tone(1000.0), rate)).unwrap();
        let peak = filtered.samples[8000..24000]
            .iter()
            .fold(0.0f32, |m, &v| m.max(v.abs()));
        let measured_db = 20.0 * f64::from(peak).log10();
        assert!(
            (measured_db - db_1k).abs() < 0.2,
            "measured {measured_db} dB vs designed {db_1k} dB"
        );

        let gain_50 = tf_magnitude(&design, 50.0, f64::from(rate)).powi(2);
        assert!(20.0 * gain_50.log10() < -20.0);
        let filtered = bandpass(&Waveform::new(tone(50.0), rate)).unwrap();
        let peak = filtered.samples[8000..24000]
            .iter()
            .fold(0.0f32, |m, &v| m.max(v.abs()));
        assert!(20.0 * f64::from(peak).log10() < -20.0);
    }

    #[test]
    fn bandpass_is_linear() {
        let rate = 16000u32;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<f32> = (0..8000).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let b: Vec<f32> = (0..8000).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let sum: Vec<f32> = a.iter().zip(&b).map(|(&x, &y)| x + y).collect();
        let fa = bandpass(&Waveform::new(a, rate)).unwrap();
        let fb = bandpass(&Waveform::new(b, rate)).unwrap();
        let fsum = bandpass(&Waveform::new(sum, rate)).unwrap();
        for i in 0..8000 {
            let lhs = f64::from(fsum.samples[i]);
            let rhs = f64::from(fa.samples[i]) + f64::from(fb.samples[i]);
            assert!((lhs - rhs).abs() < 1e-4);
        }
    }

    #[test]
    fn bandpass_rejects_low_rate() {
        let w = Waveform::new(vec![0.0; 100], 8000);
        assert!(matches!(bandpass(&w), Err(DspError::RateTooLow { .. })));
    }

    /// Textbook O(N^2) orthonormal DCT-II.
    fn naive_dct(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let sum: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n as f64)).cos())
                    .sum();
                let scale = if k == 0 {
                    (1.0 / n as f64).sqrt()
                } else {
                    (2.0 / n as f64).sqrt()
                };
                scale * sum
            })
            .collect()
    }

    #[test]
    fn dct_constant_has_only_dc() {
        let t = SampledTrack::from_values(vec![3.0; 32], 100.0, TrackUnit::Rms);
        let s = dct_spectrum(&t);
        assert_eq!(s.freq_of(0), 0.0);
        assert!(s.coefficients[0].abs() > 1.0);
        for &c in &s.coefficients[1..] {
            assert!(c.abs() < 1e-9);
        }
    }

    #[test]
    fn dct_basis_function_is_single_coefficient() {
        let n = 64;
        let k0 = 5;
        let x: Vec<f64> = (0..n)
            .map(|i| (PI * k0 as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
            .collect();
        let t = SampledTrack::from_values(x, 100.0, TrackUnit::Rms);
        let s = dct_spectrum(&t);
        for (k, &c) in s.coefficients.iter().enumerate() {
            if k == k0 {
                assert!(c.abs() > 1.0);
            } else {
                assert!(c.abs() < 1e-9, "leakage at {k}");
            }
        }
    }

    #[test]
    fn dct_matches_naive_oracle_and_parseval() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &n in &[2usize, 3, 17, 64, 100, 256] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let t = SampledTrack::from_values(x.clone(), 100.0, TrackUnit::Rms);
            let got = dct_spectrum(&t);
            let want = naive_dct(&x);
            for (g, w) in got.coefficients.iter().zip(&want) {
                assert!((g - w).abs() < 1e-9, "n={n}");
            }
            let ex: f64 = x.iter().map(|v| v * v).sum();
            let ec: f64 = got.coefficients.iter().map(|c| c * c).sum();
            assert!((ex - ec).abs() < 1e-9);
        }
    }

    #[test]
    fn dct_frequency_mapping() {
        let t = SampledTrack::from_values(vec![0.0; 200], 100.0, TrackUnit::Rms);
        let s = dct_spectrum(&t);
        // k rate / (2N): bin 8 of a 2 s contour sits at 2 Hz.
        assert!((s.freq_of(8) - 2.0).abs() < 1e-12);
        let mut prev = -1.0;
        for k in 0..s.coefficients.len() {
            assert!(s.freq_of(k) > prev);
            prev = s.freq_of(k);
        }
    }

    proptest! {
        #[test]
        fn interpolate_is_idempotent(mask in proptest::collection::vec(any::<bool>(), 2..40)) {
            prop_assume!(mask.iter().any(|&m| m));
            let values: Vec<f64> = (0..mask.len()).map(|i| 100.0 + i as f64).collect();
            let t = hz_track(values, mask);
            let once = interpolate_gaps(&t).unwrap();
            let twice = interpolate_gaps(&once).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn semitones_monotone_and_invertible(
            hz in proptest::collection::vec(60.0f64..500.0, 4..40)
        ) {
            let t = SampledTrack::from_values(hz.clone(), 100.0, TrackUnit::Hertz);
            let (st, base) = to_semitones(&t).unwrap();
            for (i, w) in hz.windows(2).enumerate() {
                if w[0] < w[1] {
                    prop_assert!(st.values[i] < st.values[i + 1]);
                }
            }
            for (i, &v) in st.values.iter().enumerate() {
                let back = semitones_to_hz(v, base);
                prop_assert!((back - hz[i]).abs() / hz[i] < 1e-9);
            }
        }
    }
}
