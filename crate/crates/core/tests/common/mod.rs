#![allow(dead_code)]

use shtest_core::measures::{DistributionPair, Hypothesis};
use shtest_core::rates::RateProfile;

pub fn reference_pair() -> DistributionPair {
    DistributionPair::bernoulli(0.02, 0.6).unwrap()
}

pub fn gaussian_pair() -> DistributionPair {
    DistributionPair::gaussian_shift(1.0, 0.0, 1.0).unwrap()
}

/// `log M_θ(w)` written out directly from the model.
pub fn naive_log_mgf(pair: &DistributionPair, theta: Hypothesis, w: f64) -> f64 {
    match *pair {
        DistributionPair::Bernoulli { p0, p1 } => {
            let (l0, l1) = (((1.0 - p1) / (1.0 - p0)).ln(), (p1 / p0).ln());
            let p = if theta == Hypothesis::H0 { p0 } else { p1 };
            ((1.0 - p) * (w * l0).exp() + p * (w * l1).exp()).ln()
        }
        DistributionPair::GaussianShift { a, sigma, .. } => {
            let d = (a / sigma).powi(2);
            let w = if theta == Hypothesis::H0 { w } else { w + 1.0 };
            0.5 * d * w * (w - 1.0)
        }
    }
}

/// `sup_w {wx − log M_θ(w)}` over a uniform grid of `w`.
pub fn grid_legendre(pair: &DistributionPair, theta: Hypothesis, x: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|i| {
            let w = lo + step * i as f64;
            w * x - naive_log_mgf(pair, theta, w)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// All `r`-subsets of `0..m` in lexicographic order.
pub fn combinations(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < r - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, m, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, m, r, &mut Vec::with_capacity(r), &mut out);
    out
}

/// Minimum over all `keep`-subsets of the summed values.
pub fn exhaustive_min_subset(values: &[f64], keep: usize) -> f64 {
    combinations(values.len(), keep)
        .iter()
        .map(|s| s.iter().map(|&i| values[i]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Membership of `λ̄` in the extended ball: some `keep`-subset has
/// `Σ I_j(λ̄_i) < z`.
pub fn in_extended_ball(profile: &RateProfile, j: Hypothesis, lam_bar: &[f64], keep: usize, z: f64) -> bool {
    let rates: Vec<f64> = lam_bar.iter().map(|&x| profile.rate(j, x)).collect();
    combinations(lam_bar.len(), keep)
        .iter()
        .any(|s| s.iter().map(|&i| rates[i]).sum::<f64>() < z)
}

/// Whether the secure detector should announce 0: `λ̄ ∈ eBal(0) ∪ (B⁻ \ eBal(1))`.
pub fn in_lambda_minus(profile: &RateProfile, lam_bar: &[f64], n: usize, z_s: f64) -> bool {
    let keep = lam_bar.len() - n;
    let b_minus = lam_bar.iter().sum::<f64>() < 0.0;
    in_extended_ball(profile, Hypothesis::H0, lam_bar, keep, z_s)
        || (b_minus && !in_extended_ball(profile, Hypothesis::H1, lam_bar, keep, z_s))
}

/// `min Σ I_1(x_i)` subject to `Σ I_0(x_i) ≤ z` for two sensors, by
/// exhaustive search over a uniform grid of `[−D(0‖1), D(1‖0)]²`.
pub fn lemma2_grid(profile: &RateProfile, z: f64, points: usize) -> f64 {
    let (lo, hi) = (-profile.d01, profile.d10);
    let xs: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    let r0: Vec<f64> = xs.iter().map(|&x| profile.rate0(x)).collect();
    let r1: Vec<f64> = xs.iter().map(|&x| profile.rate1(x)).collect();
    let mut best = f64::INFINITY;
    for a in 0..points {
        for b in a..points {
            if r0[a] + r0[b] <= z {
                best = best.min(r1[a] + r1[b]);
            }
        }
    }
    best
}

/// Exact per-time error probabilities of the naive Bayes rule on one
/// Bernoulli sensor, by enumerating every binary stream of length `horizon`.
pub fn enumerate_single_sensor_bayes(p0: f64, p1: f64, chi: f64, horizon: usize) -> [Vec<f64>; 2] {
    let (l0, l1) = (((1.0 - p1) / (1.0 - p0)).ln(), (p1 / p0).ln());
    let mut err = [vec![0.0; horizon], vec![0.0; horizon]];
    for stream in 0u32..(1 << horizon) {
        let bits: Vec<bool> = (0..horizon).map(|t| stream >> t & 1 == 1).collect();
        for (theta, p) in [(0usize, p0), (1, p1)] {
            let prob: f64 = bits.iter().map(|&b| if b { p } else { 1.0 - p }).product();
            let mut sum = 0.0;
            for (t, &b) in bits.iter().enumerate() {
                sum += if b { l1 } else { l0 };
                let k = (t + 1) as f64;
                let decide_one = sum / k >= chi;
                if decide_one != (theta == 1) {
                    err[theta][t] += prob;
                }
            }
        }
    }
    err
}
