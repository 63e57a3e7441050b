//! False discovery rate correction, dependency-robust step-up variant.

/// Adjusts p-values by the step-up procedure with the harmonic-sum factor
/// `c(m) = sum_{i=1..m} 1/i`, valid under arbitrary dependence. Returns the
/// adjusted values in input order, clipped at 1.
pub fn fdr_correct(pvals: &[f64]) -> Vec<f64> {
    let m = pvals.len();
    if m == 0 {
        return Vec::new();
    }
    debug_assert!(pvals.iter().all(|&p| (0.0..=1.0).contains(&p)));
    let c_m: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));

    let mut adjusted = vec![0.0; m];
    let mut running_min = f64::INFINITY;
    for rank in (0..m).rev() {
        let idx = order[rank];
        let stepped = pvals[idx] * m as f64 * c_m / (rank + 1) as f64;
        running_min = running_min.min(stepped).min(1.0);
        adjusted[idx] = running_min;
    }
    adjusted
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_p_unchanged() {
        // c(1) = 1, so a single p-value stays as it is.
        let adj = fdr_correct(&[0.03]);
        assert!((adj[0] - 0.03).abs() < 1e-15);
    }

    #[test]
    fn all_ones_stay_one() {
        assert_eq!(fdr_correct(&[1.0, 1.0, 1.0]), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn four_p_fixture_matches_hand_computation() {
        // m = 4, c(4) = 25/12. Stepped values p_i * 4 * (25/12) / i:
        // 0.01*25/3, 0.02*25/6, 0.03*25/9... all equal 1/12 after the
        // step-up minimum, because every stepped value is exactly 25/300.
        let adj = fdr_correct(&[0.01, 0.02, 0.03, 0.04]);
        for (i, &a) in adj.iter().enumerate() {
            assert!((a - 1.0 / 12.0).abs() < 1e-12, "adj[{i}] = {a}");
        }
    }

    #[test]
    fn adjusted_never_below_raw_and_order_preserving() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let pvals: Vec<f64> = (0..50).map(|_| rng.gen_range(0.0..1.0)).collect();
        let adj = fdr_correct(&pvals);
        for (p, a) in pvals.iter().zip(&adj) {
            assert!(a >= p);
            assert!(*a <= 1.0);
        }
        // Sorting by raw p sorts the adjusted values non-decreasingly.
        let mut order: Vec<usize> = (0..50).collect();
        order.sort_by(|&x, &y| pvals[x].total_cmp(&pvals[y]));
        for w in order.windows(2) {
            assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
        }
    }
}
