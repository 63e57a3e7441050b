//! Small numeric helpers shared across the pipeline.

/// Linear-interpolation percentile (type-7 convention). `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Some(percentile_sorted(&sorted, p))
}

/// Type-7 percentile on an already sorted slice.
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * (p / 100.0).clamp(0.0, 1.0);
    let lo = (h.floor() as usize).min(n - 1);
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    // Infinite order statistics (from degenerate distance quotients) would
    // otherwise produce NaN during interpolation.
    if !sorted[lo].is_finite() || !sorted[hi].is_finite() {
        return if frac > 0.0 { sorted[hi] } else { sorted[lo] };
    }
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 50.0)
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Population standard deviation.
pub fn pop_std(values: &[f64]) -> Option<f64> {
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Some(var.sqrt())
}

/// Ordinary least-squares line `y = c0 + c1 * x`. Returns `(c0, c1)`.
///
/// `None` if fewer than two points or the x values have no spread.
pub fn ols_line(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let c1 = sxy / sxx;
    Some((my - c1 * mx, c1))
}

/// Root mean squared deviation between two equally long sequences.
pub fn rmsd(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    debug_assert!(!a.is_empty());
    let s: f64 = a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}

/// Pearson correlation of two equally long sequences.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    if a.len() < 2 {
        return None;
    }
    let ma = mean(a)?;
    let mb = mean(b)?;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_type7_matches_hand_values() {
        // h = (n-1)p/100; linear interpolation between order statistics.
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 100.0), Some(4.0));
        assert_eq!(percentile(&v, 50.0), Some(2.5));
        // h = 3 * 0.25 = 0.75 -> 1 + 0.75
        assert_eq!(percentile(&v, 25.0), Some(1.75));
    }

    #[test]
    fn percentile_single_value() {
        assert_eq!(percentile(&[7.0], 82.0), Some(7.0));
    }

    #[test]
    fn median_even_is_midpoint() {
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), Some(2.5));
    }

    #[test]
    fn pop_std_hand_value() {
        // mean 2.5, squared deviations 2.25 .25 .25 2.25 -> var 1.25
        let sd = pop_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((sd - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x = [0.0, 0.25, 0.5, 0.75, 1.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 + 3.0 * v).collect();
        let (c0, c1) = ols_line(&x, &y).unwrap();
        assert!((c0 - 2.0).abs() < 1e-12);
        assert!((c1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn ols_degenerate_x_is_none() {
        assert_eq!(ols_line(&[1.0, 1.0], &[0.0, 5.0]), None);
    }
}
