//! Monte-Carlo and importance-sampling estimation of finite-time error
//! probabilities, and empirical error exponents fitted from them.
//!
//! Each trial draws a full measurement stream, applies the attack, feeds the
//! detector and records the error indicator at every `k ≤ K`. With tilted
//! sampling the benign sensors are drawn from `dν_w ∝ e^{wλ} dν` and every
//! indicator carries the likelihood ratio of the stream prefix; all weights
//! are accumulated in log space.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::attack::{AttackKind, Attacker};
use crate::detect::{Detector, DetectorKind};
use crate::error::{Error, Result};
use crate::limits::{NetworkShape, TradeoffCurves};
use crate::measures::{log_add_exp, DistributionPair, Hypothesis};
use crate::rates::RateProfile;

const CHUNK: usize = 512;
const MIN_FIT_POINTS: usize = 4;

/// Which hypotheses to simulate: `"both"`, `0` or `1` in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "ThetaRepr", into = "ThetaRepr")]
pub enum ThetaMode {
    #[default]
    Both,
    Fixed(Hypothesis),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ThetaRepr {
    Bit(u8),
    Word(String),
}

impl TryFrom<ThetaRepr> for ThetaMode {
    type Error = String;

    fn try_from(r: ThetaRepr) -> std::result::Result<Self, String> {
        match r {
            ThetaRepr::Bit(0) => Ok(ThetaMode::Fixed(Hypothesis::H0)),
            ThetaRepr::Bit(1) => Ok(ThetaMode::Fixed(Hypothesis::H1)),
            ThetaRepr::Word(w) if w == "both" => Ok(ThetaMode::Both),
            ThetaRepr::Bit(b) => Err(format!("theta must be 0, 1 or \"both\", got {b}")),
            ThetaRepr::Word(w) => Err(format!("theta must be 0, 1 or \"both\", got {w:?}")),
        }
    }
}

impl From<ThetaMode> for ThetaRepr {
    fn from(t: ThetaMode) -> Self {
        match t {
            ThetaMode::Both => ThetaRepr::Word("both".into()),
            ThetaMode::Fixed(h) => ThetaRepr::Bit(h.index() as u8),
        }
    }
}

impl ThetaMode {
    pub fn hypotheses(self) -> Vec<Hypothesis> {
        match self {
            ThetaMode::Both => Hypothesis::BOTH.to_vec(),
            ThetaMode::Fixed(h) => vec![h],
        }
    }
}

/// Tilt of the benign sensors, as the exponent `w` of `dν_w ∝ e^{wλ} dν`.
/// The same sampling law is used under both hypotheses unless given per
/// hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TiltSpec {
    /// `w = w*`, where `ψ_0(w*) = 0`.
    #[default]
    #[serde(with = "auto_tag")]
    Auto,
    Fixed(f64),
    PerHypothesis { theta0: f64, theta1: f64 },
}

mod auto_tag {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("auto")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        let s = String::deserialize(d)?;
        if s == "auto" {
            Ok(())
        } else {
            Err(serde::de::Error::custom(format!("expected \"auto\", got {s:?}")))
        }
    }
}

impl TiltSpec {
    /// `w` for each hypothesis.
    pub fn resolve(self, profile: &RateProfile) -> [f64; 2] {
        match self {
            TiltSpec::Auto => [profile.wstar; 2],
            TiltSpec::Fixed(w) => [w; 2],
            TiltSpec::PerHypothesis { theta0, theta1 } => [theta0, theta1],
        }
    }
}

/// One proposal of a [`Sampler::Mixture`]: `subset` benign sensors chosen
/// uniformly are tilted by `w`, the rest follow the true law. `subset = 0`
/// is the untilted law itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    #[serde(default)]
    pub w: TiltSpec,
    pub subset: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sampler {
    #[default]
    Plain,
    /// Importance sampling. With `subset = Some(s)` each trial tilts a
    /// uniformly chosen set of `s` benign sensors and weights by the mixture
    /// density over all such sets; by default every benign sensor is tilted.
    Tilted {
        #[serde(default)]
        w: TiltSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subset: Option<usize>,
    },
    /// Each trial picks one component uniformly; weights use the density of
    /// the whole mixture, so an untilted component bounds every weight by
    /// the number of components.
    Mixture { components: Vec<MixtureComponent> },
}

impl Sampler {
    pub fn tilted(w: TiltSpec) -> Self {
        Sampler::Tilted { w, subset: None }
    }

    pub fn tilted_subset(w: TiltSpec, subset: usize) -> Self {
        Sampler::Tilted { w, subset: Some(subset) }
    }
}

fn default_attack() -> AttackKind {
    AttackKind::None
}

/// A complete, self-describing simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pair: DistributionPair,
    pub shape: NetworkShape,
    pub detector: DetectorKind,
    #[serde(default = "default_attack")]
    pub attack: AttackKind,
    #[serde(default)]
    pub theta: ThetaMode,
    pub horizon: usize,
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub sampler: Sampler,
    /// Inclusive `(k_lo, k_hi)`; defaults to the last half of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(usize, usize)>,
}

impl ScenarioConfig {
    pub fn new(pair: DistributionPair, shape: NetworkShape, detector: DetectorKind) -> Self {
        ScenarioConfig {
            pair,
            shape,
            detector,
            attack: AttackKind::None,
            theta: ThetaMode::Both,
            horizon: 60,
            trials: 100_000,
            master_seed: 0,
            sampler: Sampler::Plain,
            fit_window: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some((lo, hi)) = self.fit_window {
            if lo == 0 || lo > hi || hi > self.horizon {
                return Err(Error::Config(format!(
                    "fit window ({lo}, {hi}) must satisfy 1 ≤ k_lo ≤ k_hi ≤ horizon"
                )));
            }
        }
        let parts: Vec<(TiltSpec, Option<usize>)> = match &self.sampler {
            Sampler::Plain => Vec::new(),
            Sampler::Tilted { w, subset } => vec![(*w, *subset)],
            Sampler::Mixture { components } => {
                if components.is_empty() {
                    return Err(Error::Config("mixture sampler needs at least one component".into()));
                }
                components.iter().map(|c| (c.w, Some(c.subset))).collect()
            }
        };
        for (w, subset) in parts {
            if subset.is_some_and(|s| s > self.shape.m) {
                return Err(Error::Config("tilted subset larger than the network".into()));
            }
            let finite = match w {
                TiltSpec::Auto => true,
                TiltSpec::Fixed(x) => x.is_finite(),
                TiltSpec::PerHypothesis { theta0, theta1 } => theta0.is_finite() && theta1.is_finite(),
            };
            if !finite {
                return Err(Error::Config("tilt must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Estimates at one time step. Fields for a hypothesis that was not
/// simulated are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRecord {
    pub k: usize,
    pub p_err0: Option<f64>,
    pub se0: Option<f64>,
    pub p_err1: Option<f64>,
    pub se1: Option<f64>,
    pub worst: f64,
    /// `log worst`, finite even where `worst` underflows.
    pub log_worst: f64,
}

/// What the attacker achieved across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackTrace {
    pub target_clamped: bool,
    /// Largest burn-in over trials, if every trial eventually met the rate
    /// constraint for good.
    pub max_burn_in: Option<usize>,
    pub trials_never_met: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub records: Vec<KRecord>,
    pub fitted_exponent: Option<f64>,
    pub fit_window: (usize, usize),
    /// Why the exponent could not be fitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
    /// Resolved tilt `w` per hypothesis, when tilted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack_trace: Option<AttackTrace>,
}

impl ErrorEstimate {
    /// `(k, log worst)` pairs.
    pub fn log_curve(&self) -> Vec<(usize, f64)> {
        self.records.iter().map(|r| (r.k, r.log_worst)).collect()
    }

    /// Refits the exponent on another window.
    pub fn refit(&self, window: (usize, usize)) -> Result<ExponentFit> {
        fit_exponent(&self.log_curve(), Some(window))
    }

    /// CSV with columns `k,p_err0,se0,p_err1,se1,worst`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(e.to_string());
        w.write_record(["k", "p_err0", "se0", "p_err1", "se1", "worst"]).map_err(io)?;
        let cell = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.k.to_string(),
                cell(r.p_err0),
                cell(r.se0),
                cell(r.p_err1),
                cell(r.se1),
                format!("{:e}", r.worst),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(e.to_string()))
    }

    /// JSON summary with the fitted exponent, its window, the config and seed.
    pub fn summary(&self, cfg: &ScenarioConfig) -> serde_json::Value {
        serde_json::json!({
            "fitted_exponent": self.fitted_exponent,
            "window": self.fit_window,
            "fit_error": self.fit_error,
            "tilt": self.tilt,
            "attack_trace": self.attack_trace,
            "config_echo": cfg,
            "seed": cfg.master_seed,
        })
    }
}

/// Least-squares slope of `−log error` against `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (usize, usize),
    pub points: usize,
}

/// Fits `−log e(k) ≈ a + ρ k` over the window (inclusive), using only points
/// with a finite log error. The window defaults to the last half of the
/// curve's time range.
pub fn fit_exponent(log_curve: &[(usize, f64)], window: Option<(usize, usize)>) -> Result<ExponentFit> {
    let k_max = log_curve.iter().map(|p| p.0).max().unwrap_or(0);
    let window = window.unwrap_or((k_max / 2 + 1, k_max));
    let pts: Vec<(f64, f64)> = log_curve
        .iter()
        .filter(|(k, l)| *k >= window.0 && *k <= window.1 && l.is_finite())
        .map(|&(k, l)| (k as f64, -l))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { usable: pts.len(), needed: MIN_FIT_POINTS });
    }
    let n = pts.len() as f64;
    let kx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ky = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - kx) * (p.1 - ky)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - kx).powi(2)).sum();
    let exponent = sxy / sxx;
    Ok(ExponentFit { exponent, intercept: ky - exponent * kx, window, points: pts.len() })
}

/// `w` that centres a tilted sensor's `λ` at `x`: `φ_0(x)`. The same law
/// serves both hypotheses because `φ_1 = φ_0 − 1`.
pub fn tilt_for_mean(profile: &RateProfile, x: f64) -> Result<f64> {
    profile
        .tilt(Hypothesis::H0, x)
        .ok_or_else(|| Error::Numerical(format!("no tilt centres λ at {x}")))
}

/// Mixture sampler for the secure detector with target `z_s` under the
/// rate-targeting attack. The error events let any `s` benign sensors carry
/// the whole deviation, so there is one component per `s = 1..=m−n`, tilted
/// to `I_θ⁻¹(z_s/s)`, plus an untilted one. Sizes whose target lies outside
/// the range of `λ` reuse the tilt of the nearest reachable size.
pub fn secure_attack_mixture(profile: &RateProfile, shape: &NetworkShape, z_s: f64) -> Result<Sampler> {
    let b = shape.benign();
    let tilt_for = |h: Hypothesis, s: usize| -> Option<f64> {
        let x = profile.inv_rate(h, z_s / s as f64).ok()?;
        tilt_for_mean(profile, x).ok().filter(|w| w.is_finite())
    };
    let mut per_h: [Vec<f64>; 2] = [Vec::with_capacity(b), Vec::with_capacity(b)];
    for h in Hypothesis::BOTH {
        let raw: Vec<Option<f64>> = (1..=b).map(|s| tilt_for(h, s)).collect();
        let mut last = raw.iter().find_map(|w| *w).ok_or_else(|| {
            Error::Numerical(format!("no reachable tilt for z_s = {z_s} under {h:?}"))
        })?;
        for w in raw {
            last = w.unwrap_or(last);
            per_h[h.index()].push(last);
        }
    }
    let mut components = vec![MixtureComponent { w: TiltSpec::Fixed(0.0), subset: 0 }];
    components.extend((1..=b).map(|s| MixtureComponent {
        w: TiltSpec::PerHypothesis { theta0: per_h[0][s - 1], theta1: per_h[1][s - 1] },
        subset: s,
    }));
    Ok(Sampler::Mixture { components })
}

/// Log-domain running sums `log Σ x` and `log Σ x²`.
#[derive(Debug, Clone, Copy)]
struct LogAcc {
    s1: f64,
    s2: f64,
}

impl LogAcc {
    const EMPTY: LogAcc = LogAcc { s1: f64::NEG_INFINITY, s2: f64::NEG_INFINITY };

    fn add(&mut self, lx: f64) {
        self.s1 = log_add_exp(self.s1, lx);
        self.s2 = log_add_exp(self.s2, 2.0 * lx);
    }

    fn merge(&mut self, o: &LogAcc) {
        self.s1 = log_add_exp(self.s1, o.s1);
        self.s2 = log_add_exp(self.s2, o.s2);
    }

    /// `(log mean, standard error)` over `n` trials.
    fn finish(&self, n: usize) -> (f64, f64) {
        if self.s1 == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, 0.0);
        }
        let nf = n as f64;
        let log_mean = self.s1 - nf.ln();
        if n < 2 {
            return (log_mean, 0.0);
        }
        let ratio = (self.s2 + nf.ln() - 2.0 * self.s1).exp();
        let rel = ((ratio - 1.0).max(0.0) / (nf - 1.0)).sqrt();
        (log_mean, log_mean.exp() * rel)
    }
}

struct Prepared {
    profile: RateProfile,
    shape: NetworkShape,
    detector: DetectorKind,
    attack: AttackKind,
    horizon: usize,
    /// Empty for plain sampling.
    components: Vec<Component>,
}

struct Component {
    /// Per hypothesis: tilt relative to that hypothesis' own law, and
    /// `log M_θ` at that tilt.
    tilt: [(f64, f64); 2],
    /// Tilted benign sensors; `None` means all of them.
    subset: Option<usize>,
}

#[derive(Clone)]
struct ChunkOut {
    acc: Vec<LogAcc>,
    burn_in_max: Option<usize>,
    never_met: usize,
}

/// `log e_s(r)` from `log r`, where `e_s` is the elementary symmetric
/// polynomial of degree `s`.
fn log_elementary_symmetric(log_r: &[f64], s: usize) -> f64 {
    let mut e = vec![f64::NEG_INFINITY; s + 1];
    e[0] = 0.0;
    for &lr in log_r {
        for j in (1..=s).rev() {
            e[j] = log_add_exp(e[j], e[j - 1] + lr);
        }
    }
    e[s]
}

fn substream_seed(master: u64, theta: Hypothesis, trial: u64) -> u64 {
    let mut z = master ^ (theta.index() as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93) ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_trial(p: &Prepared, theta: Hypothesis, seed: u64, out: &mut ChunkOut) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut detector = Detector::new(p.detector.clone(), p.profile, p.shape)?;
    let mut attacker = Attacker::new(p.attack, p.profile, p.shape, theta)?;
    let m = p.shape.m;
    let mut benign = vec![true; m];
    for &i in attacker.compromised() {
        benign[i] = false;
    }
    let benign_idx: Vec<usize> = (0..m).filter(|&i| benign[i]).collect();
    let b = benign_idx.len();
    let tilted = !p.components.is_empty();
    let comps: Vec<(f64, f64, usize)> = p
        .components
        .iter()
        .map(|c| {
            let (t, log_m) = c.tilt[theta.index()];
            (t, log_m, c.subset.unwrap_or(b))
        })
        .collect();
    if let Some(&(_, _, s)) = comps.iter().find(|c| c.2 > b) {
        return Err(Error::Config(format!("tilted subset {s} exceeds the {b} benign sensors")));
    }
    let pick = if comps.len() > 1 { rng.random_range(0..comps.len()) } else { 0 };
    let mut tilt_mask = vec![false; m];
    let mut t = 0.0;
    if let Some(&(tc, _, s)) = comps.get(pick) {
        t = tc;
        if s == b {
            tilt_mask.copy_from_slice(&benign);
        } else {
            for j in rand::seq::index::sample(&mut rng, b, s) {
                tilt_mask[benign_idx[j]] = true;
            }
        }
    }
    let ln_sets: Vec<f64> = comps.iter().map(|c| ln_binomial(b as u64, c.2 as u64)).collect();
    let ln_count = (comps.len() as f64).ln();
    let mut llr_sum = vec![0.0; m];
    let mut log_r = vec![0.0; b];
    let mut y = vec![0.0; m];
    for k in 1..=p.horizon {
        for i in 0..m {
            y[i] = if tilt_mask[i] {
                p.profile.pair.sample_tilted(theta, t, &mut rng)
            } else {
                p.profile.pair.sample_one(theta, &mut rng)
            };
            if tilted && benign[i] {
                llr_sum[i] += p.profile.pair.llr(y[i])?;
            }
        }
        let reported = attacker.corrupt(&y, &mut rng)?;
        let err = detector.step(&reported)?.error_under(theta);
        if err > 0.0 {
            let kf = k as f64;
            // log of the proposal-to-target density ratio, averaged over components
            let mut log_ratio = f64::NEG_INFINITY;
            for (&(tc, log_m, s), &ln_c) in comps.iter().zip(&ln_sets) {
                let term = if s == 0 {
                    0.0
                } else if s == b {
                    benign_idx.iter().map(|&i| tc * llr_sum[i]).sum::<f64>() - b as f64 * kf * log_m
                } else {
                    for (r, &i) in log_r.iter_mut().zip(&benign_idx) {
                        *r = tc * llr_sum[i] - kf * log_m;
                    }
                    log_elementary_symmetric(&log_r, s) - ln_c
                };
                log_ratio = log_add_exp(log_ratio, term);
            }
            let log_w = if tilted { ln_count - log_ratio } else { 0.0 };
            if !log_w.is_finite() {
                return Err(Error::Numerical(format!("non-finite importance weight at k = {k}")));
            }
            out.acc[k - 1].add(log_w + err.ln());
        }
    }
    if matches!(p.attack, AttackKind::RateTarget { .. }) && !attacker.compromised().is_empty() {
        match attacker.burn_in() {
            Some(b) => out.burn_in_max = Some(out.burn_in_max.map_or(b, |x| x.max(b))),
            None => out.never_met += 1,
        }
    }
    Ok(())
}

/// Runs the scenario. Trials are split into fixed chunks that may run in
/// parallel; chunk results are merged in chunk order, so the output is
/// bit-identical for a given config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ErrorEstimate> {
    cfg.validate()?;
    let profile = RateProfile::build(cfg.pair)?;
    let detector = cfg.detector.resolve(&profile, &cfg.shape, cfg.horizon)?;
    Detector::new(detector.clone(), profile, cfg.shape)?;
    let component = |w: TiltSpec, subset: Option<usize>| {
        let ws = w.resolve(&profile);
        let per = |h: Hypothesis| {
            let t = ws[h.index()] - h.as_f64();
            (t, profile.pair.log_mgf(h, t))
        };
        (Component { tilt: [per(Hypothesis::H0), per(Hypothesis::H1)], subset }, ws)
    };
    let (components, tilt_w) = match &cfg.sampler {
        Sampler::Plain => (Vec::new(), None),
        Sampler::Tilted { w, subset } => {
            let (c, ws) = component(*w, *subset);
            (vec![c], Some(ws))
        }
        Sampler::Mixture { components } => {
            (components.iter().map(|c| component(c.w, Some(c.subset)).0).collect(), None)
        }
    };
    let target_clamped = match cfg.attack {
        AttackKind::RateTarget { .. } => {
            Attacker::new(cfg.attack, profile, cfg.shape, Hypothesis::H0)?
                .target()
                .is_some_and(|t| t.clamped)
        }
        _ => false,
    };
    let prep = Prepared { profile, shape: cfg.shape, detector, attack: cfg.attack, horizon: cfg.horizon, components };

    let thetas = cfg.theta.hypotheses();
    let chunks = cfg.trials.div_ceil(CHUNK);
    let mut per_theta: [Option<Vec<(f64, f64)>>; 2] = [None, None];
    let mut burn_in_max: Option<usize> = None;
    let mut never_met = 0;
    for &theta in &thetas {
        let parts: Vec<ChunkOut> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut out = ChunkOut { acc: vec![LogAcc::EMPTY; cfg.horizon], burn_in_max: None, never_met: 0 };
                let end = ((c + 1) * CHUNK).min(cfg.trials);
                for trial in c * CHUNK..end {
                    run_trial(&prep, theta, substream_seed(cfg.master_seed, theta, trial as u64), &mut out)?;
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let mut total = vec![LogAcc::EMPTY; cfg.horizon];
        for part in &parts {
            for (t, a) in total.iter_mut().zip(&part.acc) {
                t.merge(a);
            }
            if let Some(b) = part.burn_in_max {
                burn_in_max = Some(burn_in_max.map_or(b, |x| x.max(b)));
            }
            never_met += part.never_met;
        }
        per_theta[theta.index()] = Some(total.iter().map(|a| a.finish(cfg.trials)).collect());
    }

    let records: Vec<KRecord> = (0..cfg.horizon)
        .map(|i| {
            let get = |h: usize| per_theta[h].as_ref().map(|v| v[i]);
            let (a, b) = (get(0), get(1));
            let log_worst = a.map_or(f64::NEG_INFINITY, |x| x.0).max(b.map_or(f64::NEG_INFINITY, |x| x.0));
            let prob = |x: (f64, f64)| x.0.exp().min(1.0);
            KRecord {
                k: i + 1,
                p_err0: a.map(prob),
                se0: a.map(|x| x.1),
                p_err1: b.map(prob),
                se1: b.map(|x| x.1),
                worst: log_worst.exp().min(1.0),
                log_worst,
            }
        })
        .collect();
    let curve: Vec<(usize, f64)> = records.iter().map(|r| (r.k, r.log_worst)).collect();
    let default_window = (cfg.horizon / 2 + 1, cfg.horizon);
    let (fitted_exponent, fit_window, fit_error) = match fit_exponent(&curve, Some(cfg.fit_window.unwrap_or(default_window))) {
        Ok(f) => (Some(f.exponent), f.window, None),
        Err(e) => (None, cfg.fit_window.unwrap_or(default_window), Some(e.to_string())),
    };
    let attack_trace = match cfg.attack {
        AttackKind::RateTarget { .. } => Some(AttackTrace {
            target_clamped,
            max_burn_in: if never_met == 0 { burn_in_max } else { None },
            trials_never_met: never_met,
        }),
        _ => None,
    };
    Ok(ErrorEstimate { records, fitted_exponent, fit_window, fit_error, tilt: tilt_w, attack_trace })
}

/// Simulation budget shared by the scenarios of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBudget {
    pub horizon: usize,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub z_s: f64,
    pub measured_efficiency: f64,
    pub measured_security: f64,
    pub theoretical_efficiency: f64,
    pub theoretical_security: f64,
}

/// For each `z_s`, measures the efficiency of the secure detector without
/// attack and its security under the rate-targeting attack, next to `h_e(z_s)`
/// and `z_s`. Every grid point reuses the same seed. An exponent that cannot
/// be fitted because the error does not decay is reported as 0.
pub fn sweep_security_efficiency(
    pair: DistributionPair,
    shape: NetworkShape,
    grid: &[f64],
    budget: SweepBudget,
) -> Result<Vec<SweepRow>> {
    let profile = RateProfile::build(pair)?;
    let curves = TradeoffCurves::new(profile, shape)?;
    let cap = curves.max_security();
    grid.iter()
        .map(|&z_s| {
            if !(0.0..=cap + 1e-9).contains(&z_s) {
                return Err(Error::Range { what: "z_s", value: z_s });
            }
            let base = ScenarioConfig {
                horizon: budget.horizon,
                trials: budget.trials,
                master_seed: budget.master_seed,
                ..ScenarioConfig::new(pair, shape, DetectorKind::Secure { z_s })
            };
            let eff = run_scenario(&ScenarioConfig { sampler: Sampler::tilted(TiltSpec::Auto), ..base.clone() })?;
            let sec_sampler = if z_s > 0.0 {
                secure_attack_mixture(&profile, &shape, z_s)?
            } else {
                Sampler::Plain
            };
            let sec = run_scenario(&ScenarioConfig {
                attack: AttackKind::RateTarget { z_s },
                sampler: sec_sampler,
                ..base
            })?;
            Ok(SweepRow {
                z_s,
                measured_efficiency: eff.fitted_exponent.unwrap_or(0.0).max(0.0),
                measured_security: sec.fitted_exponent.unwrap_or(0.0).max(0.0),
                theoretical_efficiency: curves.h_e(z_s)?,
                theoretical_security: z_s,
            })
        })
        .collect()
}
