//! Crossed random-intercept linear mixed model, estimated by maximum
//! likelihood.
//!
//! The model is `y = X b + Z1 u1 + Z2 u2 + e` with independent random
//! intercepts per initiating and per responding speaker. For fixed variance
//! ratios `lambda_i = var(u_i) / var(e)` the fixed effects solve the mixed
//! model equations; the ratios themselves are found by a derivative-free
//! Nelder-Mead search over their logs. All per-iteration work happens on
//! precomputed Gram matrices, so fits cost O(q^3) per step for q total
//! random-effect levels.

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::StatsError;

/// Observations with design matrix and random-effect level indices.
#[derive(Debug, Clone)]
pub struct MixedData {
    pub y: Vec<f64>,
    /// Row-major design matrix, n x p.
    pub x: DMatrix<f64>,
    /// Level index of the first random factor per row, in `0..n_g1`.
    pub g1: Vec<usize>,
    /// Level index of the second random factor per row, in `0..n_g2`.
    pub g2: Vec<usize>,
    pub n_g1: usize,
    pub n_g2: usize,
}

/// Fitted mixed model.
#[derive(Debug, Clone)]
pub struct MixedFit {
    pub beta: DVector<f64>,
    pub se: DVector<f64>,
    /// Residual variance.
    pub sigma2: f64,
    /// Variance ratios (var(u1)/var(e), var(u2)/var(e)).
    pub lambda: (f64, f64),
    /// -2 log likelihood at the optimum.
    pub deviance: f64,
    pub wald_z: Vec<f64>,
    /// Two-sided normal-approximation p-values per coefficient.
    pub wald_p: Vec<f64>,
}

struct Grams {
    n: usize,
    p: usize,
    q: usize,
    xtx: DMatrix<f64>,
    xtz: DMatrix<f64>,
    ztz: DMatrix<f64>,
    xty: DVector<f64>,
    zty: DVector<f64>,
    yty: f64,
}

fn grams(data: &MixedData) -> Grams {
    let n = data.y.len();
    let p = data.x.ncols();
    let q = data.n_g1 + data.n_g2;
    let mut xtx = DMatrix::zeros(p, p);
    let mut xtz = DMatrix::zeros(p, q);
    let mut ztz = DMatrix::zeros(q, q);
    let mut xty = DVector::zeros(p);
    let mut zty = DVector::zeros(q);
    let mut yty = 0.0;
    for row in 0..n {
        let z1 = data.g1[row];
        let z2 = data.n_g1 + data.g2[row];
        let y = data.y[row];
        yty += y * y;
        zty[z1] += y;
        zty[z2] += y;
        ztz[(z1, z1)] += 1.0;
        ztz[(z2, z2)] += 1.0;
        ztz[(z1, z2)] += 1.0;
        ztz[(z2, z1)] += 1.0;
        for a in 0..p {
            let xa = data.x[(row, a)];
            xty[a] += xa * y;
            xtz[(a, z1)] += xa;
            xtz[(a, z2)] += xa;
            for b in 0..p {
                xtx[(a, b)] += xa * data.x[(row, b)];
            }
        }
    }
    Grams {
        n,
        p,
        q,
        xtx,
        xtz,
        ztz,
        xty,
        zty,
        yty,
    }
}

struct Profile {
    beta: DVector<f64>,
    sigma2: f64,
    deviance: f64,
    /// (X' H^-1 X)^-1, the unscaled covariance of beta.
    cov_unscaled: DMatrix<f64>,
}

/// Variance treated as exactly zero below this ratio.
const LAMBDA_FLOOR: f64 = 0.0;
/// Pseudo-infinite precision for inactive random-effect blocks.
const INF_PRECISION: f64 = 1e30;

fn profile_fit(g: &Grams, n_g1: usize, lambda: (f64, f64)) -> Result<Profile, StatsError> {
    let n = g.n as f64;
    // M = Z'Z + D^-1. A zero ratio pins the block's effects at zero via an
    // effectively infinite precision.
    let mut m = g.ztz.clone();
    let mut log_det_d = 0.0;
    for i in 0..g.q {
        let lam = if i < n_g1 { lambda.0 } else { lambda.1 };
        if lam > LAMBDA_FLOOR {
            m[(i, i)] += 1.0 / lam;
            log_det_d += lam.ln();
        } else {
            m[(i, i)] += INF_PRECISION;
            log_det_d += (1.0 / INF_PRECISION).ln();
        }
    }
    let chol = Cholesky::new(m).ok_or_else(|| StatsError::Singular("Z'Z + D^-1".into()))?;
    let log_det_m: f64 = (0..g.q).map(|i| chol.l_dirty()[(i, i)].ln() * 2.0).sum();

    let minv_ztx = chol.solve(&g.xtz.transpose());
    let minv_zty = chol.solve(&g.zty);
    let s_xx = &g.xtx - &g.xtz * &minv_ztx;
    let s_xy = &g.xty - &g.xtz * &minv_zty;
    let s_yy = g.yty - g.zty.dot(&minv_zty);

    let s_xx_inv = s_xx
        .clone()
        .try_inverse()
        .ok_or_else(|| StatsError::Singular("X' H^-1 X".into()))?;
    let beta = &s_xx_inv * &s_xy;
    let r_h_r = s_yy - 2.0 * beta.dot(&s_xy) + (&s_xx * &beta).dot(&beta);
    let sigma2 = (r_h_r / n).max(1e-300);
    // log|H| = log|M| + log|D|; the inactive-block terms cancel between the
    // two determinants.
    let log_det_h = log_det_m + log_det_d;
    let deviance = n * (2.0 * std::f64::consts::PI * sigma2).ln() + n + log_det_h;
    Ok(Profile {
        beta,
        sigma2,
        deviance,
        cov_unscaled: s_xx_inv,
    })
}

fn finish(g: &Grams, n_g1: usize, lambda: (f64, f64)) -> Result<MixedFit, StatsError> {
    let prof = profile_fit(g, n_g1, lambda)?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut se = DVector::zeros(g.p);
    let mut wald_z = Vec::with_capacity(g.p);
    let mut wald_p = Vec::with_capacity(g.p);
    for j in 0..g.p {
        let var = prof.sigma2 * prof.cov_unscaled[(j, j)];
        let s = var.max(0.0).sqrt();
        se[j] = s;
        let z = if s > 0.0 { prof.beta[j] / s } else { 0.0 };
        wald_z.push(z);
        wald_p.push(2.0 * normal.cdf(-z.abs()));
    }
    Ok(MixedFit {
        beta: prof.beta,
        se,
        sigma2: prof.sigma2,
        lambda,
        deviance: prof.deviance,
        wald_z,
        wald_p,
    })
}

/// Fits the model with variance ratios held fixed. Ratios of exactly zero
/// drop the corresponding random factor, reducing to (generalized) least
/// squares.
pub fn fit_mixed_fixed(data: &MixedData, lambda: (f64, f64)) -> Result<MixedFit, StatsError> {
    let g = grams(data);
    finish(&g, data.n_g1, lambda)
}

/// Fits the model by maximum likelihood over the variance ratios.
///
/// Random factors with fewer than two levels are pinned at zero variance.
pub fn fit_mixed(data: &MixedData) -> Result<MixedFit, StatsError> {
    let g = grams(data);
    if g.n <= g.p {
        return Err(StatsError::Singular(format!(
            "{} rows for {} fixed effects",
            g.n, g.p
        )));
    }
    let opt1 = data.n_g1 >= 2;
    let opt2 = data.n_g2 >= 2;
    let objective = |u: &[f64]| -> f64 {
        let lam = (
            if opt1 { u[0].exp() } else { 0.0 },
            if opt2 { u[1].exp() } else { 0.0 },
        );
        match profile_fit(&g, data.n_g1, lam) {
            Ok(p) => p.deviance,
            Err(_) => f64::INFINITY,
        }
    };

    // Two starts guard against ending in a flat shoulder of the deviance.
    let mut best: Option<(f64, [f64; 2])> = None;
    for start in [[0.0, 0.0], [-6.0, -6.0]] {
        let (u, dev) = nelder_mead_2d(&objective, start, 400, 1e-10);
        if best.as_ref().map_or(true, |(d, _)| dev < *d) {
            best = Some((dev, u));
        }
    }
    let (_, u) = best.expect("at least one start");
    let clamp_ratio = |v: f64, active: bool| -> f64 {
        if !active {
            return 0.0;
        }
        let lam = v.exp();
        // A ratio this small is numerically indistinguishable from zero.
        if lam < 1e-10 {
            0.0
        } else {
            lam
        }
    };
    finish(
        &g,
        data.n_g1,
        (clamp_ratio(u[0], opt1), clamp_ratio(u[1], opt2)),
    )
}

/// Nelder-Mead in two dimensions with coordinates clamped to [-14, 14].
fn nelder_mead_2d<F: Fn(&[f64]) -> f64>(
    f: &F,
    start: [f64; 2],
    max_iter: usize,
    ftol: f64,
) -> ([f64; 2], f64) {
    let clamp = |p: [f64; 2]| [p[0].clamp(-14.0, 14.0), p[1].clamp(-14.0, 14.0)];
    let mut simplex = vec![
        clamp(start),
        clamp([start[0] + 1.0, start[1]]),
        clamp([start[0], start[1] + 1.0]),
    ];
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    for _ in 0..max_iter {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, mid, worst) = (order[0], order[1], order[2]);
        if (values[worst] - values[best]).abs() <= ftol * (1.0 + values[best].abs()) {
            break;
        }
        let centroid = [
            (simplex[best][0] + simplex[mid][0]) / 2.0,
            (simplex[best][1] + simplex[mid][1]) / 2.0,
        ];
        let reflect = clamp([
            centroid[0] + (centroid[0] - simplex[worst][0]),
            centroid[1] + (centroid[1] - simplex[worst][1]),
        ]);
        let fr = f(&reflect);
        if fr < values[best] {
            let expand = clamp([
                centroid[0] + 2.0 * (centroid[0] - simplex[worst][0]),
                centroid[1] + 2.0 * (centroid[1] - simplex[worst][1]),
            ]);
            let fe = f(&expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[mid] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract = clamp([
                centroid[0] + 0.5 * (simplex[worst][0] - centroid[0]),
                centroid[1] + 0.5 * (simplex[worst][1] - centroid[1]),
            ]);
            let fc = f(&contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                // Shrink towards the best vertex.
                for i in [mid, worst] {
                    simplex[i] = clamp([
                        simplex[best][0] + 0.5 * (simplex[i][0] - simplex[best][0]),
                        simplex[best][1] + 0.5 * (simplex[i][1] - simplex[best][1]),
                    ]);
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..3 {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best], values[best])
}

/// Clustered permutation test of a binary pairing effect: the pairing labels
/// are shuffled within each responder's rows. Returns the mean difference
/// (paired minus reference) and a two-sided p-value.
pub fn permutation_pairing_test(
    y: &[f64],
    paired: &[bool],
    responder: &[usize],
    n_perm: usize,
    seed: u64,
) -> (f64, f64) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    let diff = |labels: &[bool]| -> f64 {
        let mut s1 = 0.0;
        let mut n1 = 0usize;
        let mut s0 = 0.0;
        let mut n0 = 0usize;
        for (v, &l) in y.iter().zip(labels) {
            if l {
                s1 += v;
                n1 += 1;
            } else {
                s0 += v;
                n0 += 1;
            }
        }
        if n1 == 0 || n0 == 0 {
            return 0.0;
        }
        s1 / n1 as f64 - s0 / n0 as f64
    };
    let observed = diff(paired);

    let n_resp = responder.iter().copied().max().map_or(0, |m| m + 1);
    let mut by_resp: Vec<Vec<usize>> = vec![Vec::new(); n_resp];
    for (i, &r) in responder.iter().enumerate() {
        by_resp[r].push(i);
    }
    let mut labels = paired.to_vec();
    let mut hits = 0usize;
    for _ in 0..n_perm {
        for rows in &by_resp {
            // Shuffle this cluster's labels in place.
            let mut cluster: Vec<bool> = rows.iter().map(|&i| labels[i]).collect();
            cluster.shuffle(&mut rng);
            for (&i, &l) in rows.iter().zip(&cluster) {
                labels[i] = l;
            }
        }
        if diff(&labels).abs() >= observed.abs() {
            hits += 1;
        }
    }
    let p = (hits + 1) as f64 / (n_perm + 1) as f64;
    (observed, p)
}
