//! Hypothesis distribution pairs.
//!
//! A pair holds the per-sensor measurement law under each hypothesis: `ν` when
//! θ = 0 and `μ` when θ = 1. Everything downstream works through the
//! log-likelihood ratio `λ(y) = log dμ/dν (y)` and its log-moment-generating
//! functions `log M_θ(w) = log E_θ[exp(w λ)]`.
//!
//! Two families ship: a Bernoulli pair on `{0, 1}` and a Gaussian location
//! shift `y = aθ + v`, `v ~ N(vbar, σ²)`. A new family must supply the sampler,
//! `llr` and `log_mgf` together, since the rate-function machinery relies on
//! all three being consistent.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The true state of the world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::H0, Hypothesis::H1];

    pub fn index(self) -> usize {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.index() as f64
    }

    pub fn other(self) -> Self {
        match self {
            Hypothesis::H0 => Hypothesis::H1,
            Hypothesis::H1 => Hypothesis::H0,
        }
    }
}

impl TryFrom<u8> for Hypothesis {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Hypothesis::H0),
            1 => Ok(Hypothesis::H1),
            other => Err(format!("hypothesis must be 0 or 1, got {other}")),
        }
    }
}

impl From<Hypothesis> for u8 {
    fn from(h: Hypothesis) -> u8 {
        h.index() as u8
    }
}

/// Support of a single measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Discrete(&'static [f64]),
    Continuous,
}

const BINARY_SUPPORT: [f64; 2] = [0.0, 1.0];

/// Unvalidated wire form, as it appears in scenario JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PairSpec {
    Bernoulli { p0: f64, p1: f64 },
    GaussianShift { a: f64, vbar: f64, sigma: f64 },
}

/// A validated hypothesis pair `(ν, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairSpec", into = "PairSpec")]
pub enum DistributionPair {
    /// `P(y = 1) = p0` under θ = 0 and `p1` under θ = 1.
    Bernoulli { p0: f64, p1: f64 },
    /// `y = aθ + v` with `v ~ N(vbar, sigma²)`.
    GaussianShift { a: f64, vbar: f64, sigma: f64 },
}

impl TryFrom<PairSpec> for DistributionPair {
    type Error = Error;

    fn try_from(spec: PairSpec) -> Result<Self> {
        match spec {
            PairSpec::Bernoulli { p0, p1 } => DistributionPair::bernoulli(p0, p1),
            PairSpec::GaussianShift { a, vbar, sigma } => {
                DistributionPair::gaussian_shift(a, vbar, sigma)
            }
        }
    }
}

impl From<DistributionPair> for PairSpec {
    fn from(p: DistributionPair) -> PairSpec {
        match p {
            DistributionPair::Bernoulli { p0, p1 } => PairSpec::Bernoulli { p0, p1 },
            DistributionPair::GaussianShift { a, vbar, sigma } => {
                PairSpec::GaussianShift { a, vbar, sigma }
            }
        }
    }
}

fn open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

/// `log(exp(a) + exp(b))` without overflow.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl DistributionPair {
    pub fn bernoulli(p0: f64, p1: f64) -> Result<Self> {
        if !open_unit(p0) || !open_unit(p1) {
            return Err(Error::InvalidPair(format!(
                "Bernoulli probabilities must lie in (0,1), got p0={p0}, p1={p1}"
            )));
        }
        if p0 == p1 {
            return Err(Error::InvalidPair(format!(
                "Bernoulli probabilities must differ, got p0=p1={p0}"
            )));
        }
        Ok(DistributionPair::Bernoulli { p0, p1 })
    }

    pub fn gaussian_shift(a: f64, vbar: f64, sigma: f64) -> Result<Self> {
        if !(a.is_finite() && a != 0.0) {
            return Err(Error::InvalidPair(format!("shift a must be finite and nonzero, got {a}")));
        }
        if !vbar.is_finite() {
            return Err(Error::InvalidPair(format!("noise mean must be finite, got {vbar}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidPair(format!("sigma must be positive, got {sigma}")));
        }
        Ok(DistributionPair::GaussianShift { a, vbar, sigma })
    }

    pub fn support(&self) -> Support {
        match self {
            DistributionPair::Bernoulli { .. } => Support::Discrete(&BINARY_SUPPORT),
            DistributionPair::GaussianShift { .. } => Support::Continuous,
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, DistributionPair::Bernoulli { .. })
    }

    /// Probability of `y = 1` under `theta` (Bernoulli only).
    fn bernoulli_p(&self, theta: Hypothesis) -> Option<f64> {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => Some(match theta {
                Hypothesis::H0 => p0,
                Hypothesis::H1 => p1,
            }),
            _ => None,
        }
    }

    /// `(λ(0), λ(1))` for the Bernoulli pair.
    fn bernoulli_llrs(p0: f64, p1: f64) -> (f64, f64) {
        (((1.0 - p1) / (1.0 - p0)).ln(), (p1 / p0).ln())
    }

    /// `d = a²/σ²`, the variance of λ for the Gaussian pair.
    fn gaussian_snr(a: f64, sigma: f64) -> f64 {
        (a / sigma).powi(2)
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, theta: Hypothesis, rng: &mut R) -> f64 {
        self.sample_tilted(theta, 0.0, rng)
    }

    /// `count` i.i.d. draws from the law of `theta`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: Hypothesis, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.sample_one(theta, rng)).collect()
    }

    /// One draw from the law of `theta` exponentially tilted by `exp(tilt·λ)`.
    ///
    /// `tilt = 0` is the untilted law. For the Bernoulli pair the tilted law is
    /// again Bernoulli; for the Gaussian pair it is a mean shift by `tilt·a`.
    pub fn sample_tilted<R: Rng + ?Sized>(&self, theta: Hypothesis, tilt: f64, rng: &mut R) -> f64 {
        match *self {
            DistributionPair::Bernoulli { .. } => {
                let q = self.tilted_bernoulli_p(theta, tilt);
                if rng.random::<f64>() < q {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionPair::GaussianShift { a, vbar, sigma } => {
                let mean = vbar + a * theta.as_f64() + tilt * a;
                Normal::new(mean, sigma)
                    .expect("sigma validated at construction")
                    .sample(rng)
            }
        }
    }

    fn tilted_bernoulli_p(&self, theta: Hypothesis, tilt: f64) -> f64 {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let p = self.bernoulli_p(theta).unwrap_or(p0);
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                logistic(logit(p) + tilt * (l1 - l0))
            }
            _ => unreachable!("Bernoulli only"),
        }
    }

    /// Log-likelihood ratio `log dμ/dν (y)`.
    pub fn llr(&self, y: f64) -> Result<f64> {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                if y == 0.0 {
                    Ok(l0)
                } else if y == 1.0 {
                    Ok(l1)
                } else {
                    Err(Error::OutOfSupport(y))
                }
            }
            DistributionPair::GaussianShift { a, vbar, sigma } => {
                if !y.is_finite() {
                    return Err(Error::OutOfSupport(y));
                }
                let s2 = sigma * sigma;
                Ok(a * (y - vbar) / s2 - a * a / (2.0 * s2))
            }
        }
    }

    /// Support points paired with their λ value (discrete pairs only).
    pub fn llr_table(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                Some(vec![(0.0, l0), (1.0, l1)])
            }
            _ => None,
        }
    }

    /// A measurement whose λ equals `l`, when λ is invertible (continuous pairs).
    pub fn llr_preimage(&self, l: f64) -> Option<f64> {
        match *self {
            DistributionPair::GaussianShift { a, vbar, sigma } => {
                let s2 = sigma * sigma;
                Some(vbar + s2 * (l + a * a / (2.0 * s2)) / a)
            }
            _ => None,
        }
    }

    /// Closed interval on which λ lives (infinite for continuous pairs).
    pub fn llr_range(&self) -> (f64, f64) {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                (l0.min(l1), l0.max(l1))
            }
            DistributionPair::GaussianShift { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Probability mass of `{λ = x}` under `theta`; zero for continuous pairs
    /// or when `x` is not an atom.
    pub fn llr_atom_mass(&self, theta: Hypothesis, x: f64) -> f64 {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let p = self.bernoulli_p(theta).unwrap();
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                if x == l1 {
                    p
                } else if x == l0 {
                    1.0 - p
                } else {
                    0.0
                }
            }
            DistributionPair::GaussianShift { .. } => 0.0,
        }
    }

    /// `log M_θ(w) = log E_θ[exp(w λ)]`. Finite for every `w` on both shipped
    /// families; `+∞` is reserved for families with a bounded domain.
    pub fn log_mgf(&self, theta: Hypothesis, w: f64) -> f64 {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let p = self.bernoulli_p(theta).unwrap();
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                log_add_exp((1.0 - p).ln() + w * l0, p.ln() + w * l1)
            }
            DistributionPair::GaussianShift { a, sigma, .. } => {
                let d = Self::gaussian_snr(a, sigma);
                let mean = match theta {
                    Hypothesis::H0 => -0.5 * d,
                    Hypothesis::H1 => 0.5 * d,
                };
                w * mean + 0.5 * d * w * w
            }
        }
    }

    /// `ψ_θ(w) = d/dw log M_θ(w)`, the mean of λ under the `w`-tilted law.
    pub fn log_mgf_slope(&self, theta: Hypothesis, w: f64) -> f64 {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                let q = self.tilted_bernoulli_p(theta, w);
                l0 + (l1 - l0) * q
            }
            DistributionPair::GaussianShift { a, sigma, .. } => {
                let d = Self::gaussian_snr(a, sigma);
                match theta {
                    Hypothesis::H0 => d * (w - 0.5),
                    Hypothesis::H1 => d * (w + 0.5),
                }
            }
        }
    }

    /// Second derivative of `log M_θ`, the variance of λ under the tilted law.
    pub fn log_mgf_curvature(&self, theta: Hypothesis, w: f64) -> f64 {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                let q = self.tilted_bernoulli_p(theta, w);
                (l1 - l0).powi(2) * q * (1.0 - q)
            }
            DistributionPair::GaussianShift { a, sigma, .. } => Self::gaussian_snr(a, sigma),
        }
    }

    /// Closed-form inverse of [`log_mgf_slope`](Self::log_mgf_slope): the tilt
    /// `w` whose tilted mean of λ equals `x`. `None` when `x` is not in the
    /// open range of λ.
    pub fn tilt_for_mean(&self, theta: Hypothesis, x: f64) -> Option<f64> {
        match *self {
            DistributionPair::Bernoulli { p0, p1 } => {
                let (l0, l1) = Self::bernoulli_llrs(p0, p1);
                let q = (x - l0) / (l1 - l0);
                if !open_unit(q) {
                    return None;
                }
                let p = self.bernoulli_p(theta).unwrap();
                Some((logit(q) - logit(p)) / (l1 - l0))
            }
            DistributionPair::GaussianShift { a, sigma, .. } => {
                if !x.is_finite() {
                    return None;
                }
                let d = Self::gaussian_snr(a, sigma);
                Some(match theta {
                    Hypothesis::H0 => x / d + 0.5,
                    Hypothesis::H1 => x / d - 0.5,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_setup() -> DistributionPair {
        DistributionPair::bernoulli(0.02, 0.6).unwrap()
    }

    fn unit_gauss() -> DistributionPair {
        DistributionPair::gaussian_shift(1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_invalid_pairs() {
        assert!(DistributionPair::bernoulli(0.0, 0.5).is_err());
        assert!(DistributionPair::bernoulli(0.3, 1.0).is_err());
        assert!(DistributionPair::bernoulli(0.3, 0.3).is_err());
        assert!(DistributionPair::gaussian_shift(0.0, 0.0, 1.0).is_err());
        assert!(DistributionPair::gaussian_shift(1.0, 0.0, 0.0).is_err());
        assert!(DistributionPair::gaussian_shift(1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn bernoulli_llr_values() {
        let p = reference_setup();
        assert!((p.llr(1.0).unwrap() - 30f64.ln()).abs() < 1e-12);
        assert!((p.llr(1.0).unwrap() - 3.4012).abs() < 1e-4);
        assert!((p.llr(0.0).unwrap() - (0.4f64 / 0.98).ln()).abs() < 1e-12);
        assert!((p.llr(0.0).unwrap() + 0.8961).abs() < 1e-4);
    }

    #[test]
    fn off_support_is_rejected() {
        assert_eq!(reference_setup().llr(0.5), Err(Error::OutOfSupport(0.5)));
        assert!(unit_gauss().llr(f64::NAN).is_err());
    }

    #[test]
    fn gaussian_llr_crossing_point() {
        assert!(unit_gauss().llr(0.5).unwrap().abs() < 1e-15);
        let l = unit_gauss().llr(2.0).unwrap();
        assert!((unit_gauss().llr_preimage(l).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_mgf_examples() {
        assert!(reference_setup().log_mgf(Hypothesis::H0, 0.0).abs() < 1e-15);
        for &w in &[-1.3, 0.0, 0.4, 2.0] {
            let g = unit_gauss().log_mgf(Hypothesis::H0, w);
            assert!((g - (-w / 2.0 + w * w / 2.0)).abs() < 1e-14);
        }
        for pair in [reference_setup(), unit_gauss()] {
            assert!(pair.log_mgf(Hypothesis::H0, 1.0).abs() < 1e-14);
            assert!(pair.log_mgf(Hypothesis::H1, 0.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tilt_inverts_slope() {
        for pair in [reference_setup(), unit_gauss(), DistributionPair::bernoulli(0.7, 0.2).unwrap()] {
            for theta in Hypothesis::BOTH {
                for &w in &[-2.0, -0.3, 0.0, 0.6, 1.7] {
                    let x = pair.log_mgf_slope(theta, w);
                    let back = pair.tilt_for_mean(theta, x).unwrap();
                    assert!((back - w).abs() < 1e-9, "{pair:?} {theta:?} {w} -> {back}");
                }
            }
        }
        let (lo, hi) = reference_setup().llr_range();
        assert!(reference_setup().tilt_for_mean(Hypothesis::H0, hi).is_none());
        assert!(reference_setup().tilt_for_mean(Hypothesis::H0, lo - 1.0).is_none());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            reference_setup().sample(Hypothesis::H1, &mut rng, 64)
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn bernoulli_sample_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let ones = reference_setup()
            .sample(Hypothesis::H0, &mut rng, n)
            .into_iter()
            .filter(|&y| y == 1.0)
            .count() as f64;
        let p = 0.02;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((ones / n as f64 - p).abs() < 4.0 * sd);
    }

    #[test]
    fn gaussian_alternative_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = unit_gauss().sample(Hypothesis::H1, &mut rng, n).iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn pair_json_round_trip() {
        let p: DistributionPair = serde_json::from_str(r#"{"kind":"bernoulli","p0":0.02,"p1":0.6}"#).unwrap();
        assert_eq!(p, reference_setup());
        let g: DistributionPair =
            serde_json::from_str(r#"{"kind":"gaussian_shift","a":1.0,"vbar":0.0,"sigma":1.0}"#).unwrap();
        assert_eq!(g, unit_gauss());
        let back: DistributionPair = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<DistributionPair>(r#"{"kind":"bernoulli","p0":0.2,"p1":0.2}"#).is_err());
    }
}
