//! Balls-into-bins oracles, batch statistics and scaling fits.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::protocols::{DestinationFunction, FFunction, LogStar, DEFAULT_SCRIPT_N};
use crate::randomness::{derive_seed, splitmix64};
use crate::scalar::Scalar;
use crate::scheduler::{
    DetectionMode, InitialConfig, SchedulerPolicy, SimError, SimOptions, SimulationState,
    TrialRecord,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("exact max-load distribution needs 1 ≤ n ≤ {MAX_EXACT_BALLS} and 1 ≤ k ≤ {MAX_EXACT_BINS}, got n = {n}, k = {k}")]
    TooLarge { n: usize, k: u64 },
    #[error("batch needs at least two records, got {0}")]
    TooFewRecords(usize),
    #[error("every trial timed out")]
    AllTimedOut,
    #[error("scaling fit needs at least four distinct sizes, got {0}")]
    TooFewSizes(usize),
    #[error("scaling fit needs positive means")]
    NonPositiveMean,
}

pub const MAX_EXACT_BALLS: usize = 12;
pub const MAX_EXACT_BINS: u64 = 1 << 20;

/// Exact law of the fullest bin when `n` balls go uniformly and independently
/// into `k` bins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxLoadDistribution {
    pub n: usize,
    pub k: u64,
    pub pmf: BTreeMap<usize, BigRational>,
}

impl MaxLoadDistribution {
    pub fn prob_eq(&self, load: usize) -> BigRational {
        self.pmf
            .get(&load)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn prob_gt(&self, load: usize) -> BigRational {
        self.pmf
            .range(load + 1..)
            .map(|(_, p)| p.clone())
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn total(&self) -> BigRational {
        self.pmf
            .values()
            .cloned()
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// Non-increasing partitions of `n` with at most `max_parts` parts.
fn partitions(n: usize, max_parts: usize) -> Vec<Vec<usize>> {
    fn go(left: usize, cap: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if parts == 0 {
            return;
        }
        for p in (1..=cap.min(left)).rev() {
            cur.push(p);
            go(left - p, p, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, n, max_parts, &mut Vec::new(), &mut out);
    out
}

/// Sums the probability of every load profile (sorted bin occupancy): a profile
/// `λ` with `r` non-empty bins is realized by `k!/((k−r)!·Π c_j!)` bin choices
/// (`c_j` = bins sharing a load) times `n!/Π λ_i!` ball assignments.
pub fn exact_max_load(n: usize, k: u64) -> Result<MaxLoadDistribution, AnalysisError> {
    if n == 0 || n > MAX_EXACT_BALLS || k == 0 || k > MAX_EXACT_BINS {
        return Err(AnalysisError::TooLarge { n, k });
    }
    let total = BigUint::from(k).pow(n as u32);
    let n_fact = factorial(n as u64);
    let max_parts = n.min(k as usize);
    let mut counts: BTreeMap<usize, BigUint> = BTreeMap::new();
    for profile in partitions(n, max_parts) {
        let used = profile.len() as u64;
        let mut bins = (k - used + 1..=k).fold(BigUint::one(), |acc, i| acc * i);
        let mut same: BTreeMap<usize, u64> = BTreeMap::new();
        for &p in &profile {
            *same.entry(p).or_insert(0) += 1;
        }
        for &c in same.values() {
            bins /= factorial(c);
        }
        let balls = profile
            .iter()
            .fold(n_fact.clone(), |acc, &p| acc / factorial(p as u64));
        *counts.entry(profile[0]).or_insert_with(BigUint::zero) += bins * balls;
    }
    let denom = BigInt::from(total);
    let pmf = counts
        .into_iter()
        .map(|(load, c)| (load, BigRational::new(BigInt::from(c), denom.clone())))
        .collect();
    Ok(MaxLoadDistribution { n, k, pmf })
}

/// Fullest-bin load of one random placement.
pub fn sample_max_load<R: Rng>(n: usize, k: u64, rng: &mut R) -> usize {
    let mut bins: BTreeMap<u64, usize> = BTreeMap::new();
    let mut best = 0;
    for _ in 0..n {
        let c = bins.entry(rng.random_range(0..k)).or_insert(0);
        *c += 1;
        best = best.max(*c);
    }
    best
}

/// Histogram of fullest-bin loads over `samples` placements.
pub fn empirical_max_load(n: usize, k: u64, samples: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = BTreeMap::new();
    for _ in 0..samples {
        *hist.entry(sample_max_load(n, k, &mut rng)).or_insert(0) += 1;
    }
    hist
}

/// Monte Carlo sample size used when the exact oracle is out of range.
pub const MONTE_CARLO_SAMPLES: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundCheck {
    /// `k ≥ 2n²` ⇒ `P(max > 1) ≤ 1/2`.
    QuadraticBinsAllDistinct,
    /// `k > 8n³` ⇒ `P(max > 1) ≤ 1/(2·k^{1/3})`.
    CubicBinsAllDistinct,
    /// `k ≥ max(16x⁴, 8𝒩³)`, `x ≥ 2` ⇒ `P(max = 1 or max < n/x) ≥ 1/2`.
    MultiplicityDividedByX,
}

impl BoundCheck {
    pub const ALL: [BoundCheck; 3] = [
        BoundCheck::QuadraticBinsAllDistinct,
        BoundCheck::CubicBinsAllDistinct,
        BoundCheck::MultiplicityDividedByX,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BoundCheck::QuadraticBinsAllDistinct => "quadratic_bins_all_distinct",
            BoundCheck::CubicBinsAllDistinct => "cubic_bins_all_distinct",
            BoundCheck::MultiplicityDividedByX => "multiplicity_divided_by_x",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIPPED",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    MonteCarlo { samples: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub check: BoundCheck,
    pub verdict: Verdict,
    pub method: Option<Method>,
    /// Probability of the event the bound is about, exact when available.
    pub exact: Option<BigRational>,
    pub probability: Option<f64>,
    pub bound: Option<f64>,
}

impl CheckResult {
    fn skipped(check: BoundCheck) -> Self {
        CheckResult {
            check,
            verdict: Verdict::Skipped,
            method: None,
            exact: None,
            probability: None,
            bound: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LemmaReport {
    pub n: usize,
    pub k: u64,
    pub results: Vec<CheckResult>,
}

impl LemmaReport {
    pub fn all_applicable_pass(&self) -> bool {
        self.results.iter().all(|r| r.verdict != Verdict::Fail)
    }
}

/// Largest `x` with `16x⁴ ≤ k`.
fn spread_factor(k: u64) -> u64 {
    let mut x = 0u64;
    while 16 * (x + 1).pow(4) <= k {
        x += 1;
    }
    x
}

enum Source {
    Exact(MaxLoadDistribution),
    Sampled(BTreeMap<usize, u64>),
}

impl Source {
    fn prob(&self, event: impl Fn(usize) -> bool) -> (Option<BigRational>, f64) {
        match self {
            Source::Exact(d) => {
                let p = d
                    .pmf
                    .iter()
                    .filter(|(l, _)| event(**l))
                    .fold(BigRational::zero(), |a, (_, p)| a + p);
                let f = ToPrimitive::to_f64(&p).unwrap_or(f64::NAN);
                (Some(p), f)
            }
            Source::Sampled(h) => {
                let total: u64 = h.values().sum();
                let hits: u64 = h.iter().filter(|(l, _)| event(**l)).map(|(_, c)| c).sum();
                (None, hits as f64 / total as f64)
            }
        }
    }

    fn method(&self) -> Method {
        match self {
            Source::Exact(_) => Method::Exact,
            Source::Sampled(h) => Method::MonteCarlo {
                samples: h.values().sum(),
            },
        }
    }
}

/// Checks every max-load bound whose regime covers `(n, k)`.
pub fn check_lemma_bounds(n: usize, k: u64) -> LemmaReport {
    let source = match exact_max_load(n, k) {
        Ok(d) => Source::Exact(d),
        Err(_) => Source::Sampled(empirical_max_load(
            n,
            k,
            MONTE_CARLO_SAMPLES,
            splitmix64((n as u64) << 32 ^ k),
        )),
    };
    let nn = n as u64;
    let mut results = Vec::new();

    let quadratic = BoundCheck::QuadraticBinsAllDistinct;
    if k >= 2 * nn * nn {
        let (exact, p) = source.prob(|l| l > 1);
        let verdict = match &exact {
            Some(e) => e <= &BigRational::new(1.into(), 2.into()),
            None => p <= 0.5,
        };
        results.push(CheckResult {
            check: quadratic,
            verdict: if verdict {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            method: Some(source.method()),
            exact,
            probability: Some(p),
            bound: Some(0.5),
        });
    } else {
        results.push(CheckResult::skipped(quadratic));
    }

    let cubic = BoundCheck::CubicBinsAllDistinct;
    if u128::from(k) > 8 * u128::from(nn).pow(3) {
        let (exact, p) = source.prob(|l| l > 1);
        let bound = 1.0 / (2.0 * (k as f64).cbrt());
        // P ≤ 1/(2k^{1/3})  ⇔  (2P)³·k ≤ 1
        let verdict = match &exact {
            Some(e) => {
                let two_p = e * BigRational::from_integer(2.into());
                &two_p * &two_p * &two_p * BigRational::from_integer(k.into()) <= BigRational::one()
            }
            None => p <= bound,
        };
        results.push(CheckResult {
            check: cubic,
            verdict: if verdict {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            method: Some(source.method()),
            exact,
            probability: Some(p),
            bound: Some(bound),
        });
    } else {
        results.push(CheckResult::skipped(cubic));
    }

    let divided = BoundCheck::MultiplicityDividedByX;
    let x = spread_factor(k);
    if x >= 2 && k >= 8 * DEFAULT_SCRIPT_N.pow(3) {
        let (exact, p) = source.prob(|l| l == 1 || (l as u64) * x < nn);
        let verdict = match &exact {
            Some(e) => e >= &BigRational::new(1.into(), 2.into()),
            None => p >= 0.5,
        };
        results.push(CheckResult {
            check: divided,
            verdict: if verdict {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            method: Some(source.method()),
            exact,
            probability: Some(p),
            bound: Some(0.5),
        });
    } else {
        results.push(CheckResult::skipped(divided));
    }

    LemmaReport { n, k, results }
}

/// `e^{−δ²·np/(2+δ)}`, the multiplicative Chernoff bound on
/// `P(X ≥ np(1+δ))` for a binomial `X`.
pub fn chernoff_bound(np: f64, delta: f64) -> f64 {
    (-(delta * delta) * np / (2.0 + delta)).exp()
}

/// Chernoff bound on `P(Binomial(n, 1/k) > (n/k)(1 + k^ξ))`.
pub fn chernoff_reference(n: u64, k: u64, xi: f64) -> f64 {
    let np = n as f64 / k as f64;
    chernoff_bound(np, (k as f64).powf(xi))
}

/// Trials of one experiment configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch {
    pub protocol: String,
    pub n: usize,
    pub mode: DetectionMode,
    pub policy: SchedulerPolicy,
    pub master_seed: u64,
    pub records: Vec<TrialRecord>,
}

/// Runs `trials` independent trials in parallel. Trial `i` is seeded with
/// `derive_seed(master_seed, i)`; records come back in trial order.
#[allow(clippy::too_many_arguments)]
pub fn run_batch<T: Scalar>(
    protocol: &dyn DestinationFunction<T>,
    n: usize,
    init: &InitialConfig<T>,
    opts: &SimOptions<T>,
    trials: u64,
    master_seed: u64,
    max_rounds: Option<u64>,
) -> Result<TrialBatch, SimError> {
    let max_rounds = max_rounds.unwrap_or_else(|| protocol.default_max_rounds(n as u64));
    let records = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, i);
            let config = init.build(n, seed)?;
            SimulationState::new(config, seed).run_to_scatter(protocol, opts, max_rounds)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TrialBatch {
        protocol: protocol.id(),
        n,
        mode: opts.mode,
        policy: opts.policy,
        master_seed,
        records,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub trials: usize,
    pub timed_out: usize,
    pub mean_rounds: f64,
    pub mean_bits: f64,
    pub ci95_rounds: (f64, f64),
    pub ci95_bits: (f64, f64),
    pub max_b: u64,
}

fn mean_ci(values: &[f64]) -> (f64, (f64, f64)) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, (mean, mean));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = 1.96 * (var / n).sqrt();
    (mean, (mean - half, mean + half))
}

/// Sample means with normal-approximation 95% intervals over the trials that
/// did not time out.
pub fn estimate(batch: &TrialBatch) -> Result<Estimate, AnalysisError> {
    if batch.records.len() < 2 {
        return Err(AnalysisError::TooFewRecords(batch.records.len()));
    }
    let done: Vec<&TrialRecord> = batch.records.iter().filter(|r| !r.timed_out).collect();
    if done.is_empty() {
        return Err(AnalysisError::AllTimedOut);
    }
    let rounds: Vec<f64> = done.iter().map(|r| r.rounds_used as f64).collect();
    let bits: Vec<f64> = done.iter().map(|r| r.total_bits as f64).collect();
    let (mean_rounds, ci95_rounds) = mean_ci(&rounds);
    let (mean_bits, ci95_bits) = mean_ci(&bits);
    Ok(Estimate {
        trials: done.len(),
        timed_out: batch.records.len() - done.len(),
        mean_rounds,
        mean_bits,
        ci95_rounds,
        ci95_bits,
        max_b: done.iter().map(|r| r.max_per_robot_bits).max().unwrap_or(0),
    })
}

/// Growth shapes considered by [`scaling_fit`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrowthModel {
    Constant,
    LogLog,
    LogStar,
    LogTimesLogLog,
    NLogN,
}

impl GrowthModel {
    pub const ALL: [GrowthModel; 5] = [
        GrowthModel::Constant,
        GrowthModel::LogLog,
        GrowthModel::LogStar,
        GrowthModel::LogTimesLogLog,
        GrowthModel::NLogN,
    ];

    pub fn label(self) -> &'static str {
        match self {
            GrowthModel::Constant => "c",
            GrowthModel::LogLog => "c*loglog(n)",
            GrowthModel::LogStar => "c*log*(n)",
            GrowthModel::LogTimesLogLog => "c*log(n)*loglog(n)",
            GrowthModel::NLogN => "c*n*log(n)",
        }
    }

    /// Shape evaluated at `n` (base-2 logarithms).
    pub fn shape(self, n: u64) -> f64 {
        let nf = n as f64;
        let log = nf.log2();
        let loglog = if log > 0.0 { log.log2() } else { 0.0 };
        match self {
            GrowthModel::Constant => 1.0,
            GrowthModel::LogLog => loglog,
            GrowthModel::LogStar => LogStar.eval(n) as f64,
            GrowthModel::LogTimesLogLog => log * loglog,
            GrowthModel::NLogN => nf * log,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFit {
    pub model: GrowthModel,
    pub constant: f64,
    /// Root mean square of `(y − c·g(n)) / y`.
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub fits: Vec<ModelFit>,
    pub best: GrowthModel,
}

impl FitReport {
    pub fn fit(&self, model: GrowthModel) -> &ModelFit {
        self.fits
            .iter()
            .find(|f| f.model == model)
            .expect("every model is fitted")
    }
}

/// Fits `y ≈ c·g(n)` for every growth model, minimizing relative squared
/// error, and names the model with the smallest residual. Indicative only.
pub fn scaling_fit(series: &[(u64, f64)]) -> Result<FitReport, AnalysisError> {
    let mut sizes: Vec<u64> = series.iter().map(|(n, _)| *n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(AnalysisError::TooFewSizes(sizes.len()));
    }
    if series.iter().any(|(_, y)| y.is_nan() || *y <= 0.0) {
        return Err(AnalysisError::NonPositiveMean);
    }
    let fits: Vec<ModelFit> = GrowthModel::ALL
        .into_iter()
        .map(|model| {
            let ratios: Vec<f64> = series.iter().map(|&(n, y)| model.shape(n) / y).collect();
            let den: f64 = ratios.iter().map(|r| r * r).sum();
            let constant = if den > 0.0 {
                ratios.iter().sum::<f64>() / den
            } else {
                0.0
            };
            let mse = ratios
                .iter()
                .map(|r| (1.0 - constant * r).powi(2))
                .sum::<f64>()
                / ratios.len() as f64;
            ModelFit {
                model,
                constant,
                relative_residual: mse.sqrt(),
            }
        })
        .collect();
    let best = fits
        .iter()
        .min_by(|a, b| a.relative_residual.total_cmp(&b.relative_residual))
        .map(|f| f.model)
        .expect("non-empty");
    Ok(FitReport { fits, best })
}
