//! Block protocol in which Alice signals one bit through PR-box pairs.
//!
//! Alice measures the same setting on all `N` pairs of a block. Bob's two
//! macroscopic averages `B = Σ b_m / N` and `B' = Σ b'_m / N` are then
//! equal (Alice used `a`) or opposite (Alice used `a'`). Bob reads both
//! averages with independent Gaussian noise of width `sigma` and guesses
//! Alice's bit from the sign of the product of his readings. Each of
//! Bob's readings is distributed the same way whatever Alice does; the bit
//! is only visible in their joint statistics.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::boxmodel::{DeterministicProgram, Outcome, Setting};
use crate::rng::{stream_rng, with_workers, StreamRng};
use crate::stats::{mutual_information_bits, proportion_se, wilson_interval, Z_95};
use crate::{Error, Result};

/// Alice's outcome for her chosen setting plus Bob's value for both of his
/// settings on one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairRealization {
    pub a_out: Outcome,
    pub b_val: Outcome,
    pub bprime_val: Outcome,
}

/// A source of pairs for the block protocol.
pub trait PairSource: Sync {
    /// Short name echoed in reports.
    fn kind(&self) -> &'static str;

    fn realize<R: Rng + ?Sized>(&self, alice_bit: Setting, rng: &mut R) -> PairRealization;
}

/// Nonlocal PR box: Alice's outcome is a fair coin, Bob's `b` equals it,
/// and Bob's `b'` equals it unless Alice measured `a'`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrSource;

/// Alice's fair outcome and the values the PR box then fixes for `b`, `b'`.
pub fn pr_pair_from_outcome(alice_bit: Setting, a_out: Outcome) -> PairRealization {
    let bprime_val = match alice_bit {
        Setting::Unprimed => a_out,
        Setting::Primed => a_out.flipped(),
    };
    PairRealization {
        a_out,
        b_val: a_out,
        bprime_val,
    }
}

pub fn realize_pr_pair<R: Rng + ?Sized>(alice_bit: Setting, rng: &mut R) -> PairRealization {
    pr_pair_from_outcome(alice_bit, Outcome::from_sign(rng.random::<bool>()))
}

impl PairSource for PrSource {
    fn kind(&self) -> &'static str {
        "pr"
    }

    fn realize<R: Rng + ?Sized>(&self, alice_bit: Setting, rng: &mut R) -> PairRealization {
        realize_pr_pair(alice_bit, rng)
    }
}

/// Local hidden-variable control: each pair carries a deterministic
/// program drawn from a fixed distribution, so Bob's values exist before
/// and independently of Alice's choice.
#[derive(Clone, Debug)]
pub struct LhvSource {
    weights: [f64; 16],
    sampler: WeightedIndex<f64>,
}

impl LhvSource {
    /// `weights[i]` is the probability of [`DeterministicProgram::from_index`]`(i)`.
    pub fn new(weights: [f64; 16]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > crate::PROB_TOL {
            return Err(Error::InvalidWeights { sum });
        }
        let sampler = WeightedIndex::new(weights).map_err(|_| Error::InvalidWeights { sum })?;
        Ok(LhvSource { weights, sampler })
    }

    pub fn uniform() -> Self {
        LhvSource::new([1.0 / 16.0; 16]).expect("uniform weights are valid")
    }

    pub fn constant(program: DeterministicProgram) -> Self {
        let mut w = [0.0; 16];
        w[program.index()] = 1.0;
        LhvSource::new(w).expect("point mass is valid")
    }

    pub fn weights(&self) -> &[f64; 16] {
        &self.weights
    }

    pub fn sample_program<R: Rng + ?Sized>(&self, rng: &mut R) -> DeterministicProgram {
        DeterministicProgram::from_index(self.sampler.sample(rng))
    }
}

pub fn realize_lhv_pair<R: Rng + ?Sized>(
    source: &LhvSource,
    alice_bit: Setting,
    rng: &mut R,
) -> PairRealization {
    let program = source.sample_program(rng);
    PairRealization {
        a_out: program.alice_output(alice_bit),
        b_val: program.bob_output(Setting::Unprimed),
        bprime_val: program.bob_output(Setting::Primed),
    }
}

impl PairSource for LhvSource {
    fn kind(&self) -> &'static str {
        "lhv"
    }

    fn realize<R: Rng + ?Sized>(&self, alice_bit: Setting, rng: &mut R) -> PairRealization {
        realize_lhv_pair(self, alice_bit, rng)
    }
}

/// One block of `N` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockRecord {
    pub alice_bit: Setting,
    #[serde(rename = "exact_B")]
    pub exact_b: f64,
    #[serde(rename = "exact_Bprime")]
    pub exact_bprime: f64,
    #[serde(rename = "noisy_B")]
    pub noisy_b: f64,
    #[serde(rename = "noisy_Bprime")]
    pub noisy_bprime: f64,
    pub bob_guess: Setting,
    /// `false` when the product of Bob's readings is exactly zero and the
    /// guess came from a coin.
    pub informative: bool,
}

/// How the readout noise depends on the block size.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseScaling {
    /// `sigma` is used as given.
    #[default]
    Fixed,
    /// `sigma / √N`.
    InverseSqrtN,
}

impl NoiseScaling {
    pub fn effective(self, sigma: f64, n: usize) -> f64 {
        match self {
            NoiseScaling::Fixed => sigma,
            NoiseScaling::InverseSqrtN => sigma / (n as f64).sqrt(),
        }
    }
}

fn check_block_args(n: usize, sigma: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::out_of_range("N", 0.0, "N >= 1"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::out_of_range("sigma", sigma, "sigma >= 0"));
    }
    Ok(())
}

/// Runs one block: `n` pairs with Alice fixed on `alice_bit`, then Bob's
/// noisy joint readout and his guess.
pub fn sample_block<S: PairSource, R: Rng + ?Sized>(
    source: &S,
    alice_bit: Setting,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<BlockRecord> {
    check_block_args(n, sigma)?;
    Ok(sample_block_unchecked(source, alice_bit, n, sigma, rng))
}

fn sample_block_unchecked<S: PairSource, R: Rng + ?Sized>(
    source: &S,
    alice_bit: Setting,
    n: usize,
    sigma: f64,
    rng: &mut R,
) -> BlockRecord {
    let (mut sum_b, mut sum_bp) = (0i64, 0i64);
    for _ in 0..n {
        let pair = source.realize(alice_bit, rng);
        sum_b += i64::from(pair.b_val.value());
        sum_bp += i64::from(pair.bprime_val.value());
    }
    let exact_b = sum_b as f64 / n as f64;
    let exact_bprime = sum_bp as f64 / n as f64;
    let e1: f64 = rng.sample(StandardNormal);
    let e2: f64 = rng.sample(StandardNormal);
    let noisy_b = exact_b + sigma * e1;
    let noisy_bprime = exact_bprime + sigma * e2;
    let product = noisy_b * noisy_bprime;
    let (bob_guess, informative) = if product > 0.0 {
        (Setting::Unprimed, true)
    } else if product < 0.0 {
        (Setting::Primed, true)
    } else {
        (Setting::from_bool(rng.random::<bool>()), false)
    };
    BlockRecord {
        alice_bit,
        exact_b,
        exact_bprime,
        noisy_b,
        noisy_bprime,
        bob_guess,
        informative,
    }
}

/// Parameters of a signaling run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Pairs per block.
    pub n: usize,
    /// Number of blocks.
    pub m: usize,
    pub sigma: f64,
    pub scaling: NoiseScaling,
    pub seed: u64,
    /// Alice's bit per block, cycled; `None` draws a fair coin per block.
    pub schedule: Option<Vec<Setting>>,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(n: usize, m: usize, sigma: f64, seed: u64) -> Self {
        ExperimentConfig {
            n,
            m,
            sigma,
            scaling: NoiseScaling::Fixed,
            seed,
            schedule: None,
            workers: None,
        }
    }

    fn validate(&self) -> Result<()> {
        check_block_args(self.n, self.sigma)?;
        if self.m == 0 {
            return Err(Error::out_of_range("M", 0.0, "M >= 1"));
        }
        if matches!(&self.schedule, Some(s) if s.is_empty()) {
            return Err(Error::InvalidConfig("schedule must not be empty".into()));
        }
        Ok(())
    }
}

/// Aggregate result of a signaling run.
///
/// `accuracy`, `wilson_ci` and `mutual_information_bits` are computed over
/// informative blocks, i.e. those where the product of Bob's readings is
/// nonzero. A zero product only happens without noise when `B = B' = 0`,
/// where both hypotheses predict the same data; Bob's coin-flip guesses on
/// such blocks are kept in the records and counted in
/// `accuracy_all_blocks`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalReport {
    pub kind: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub n_blocks: usize,
    pub sigma: f64,
    pub sigma_scaling: NoiseScaling,
    pub effective_sigma: f64,
    pub seed: u64,
    pub n_informative: u64,
    pub n_correct: u64,
    pub accuracy: f64,
    pub wilson_ci: (f64, f64),
    pub accuracy_all_blocks: f64,
    pub mutual_information_bits: f64,
    /// `confusion[alice_bit][bob_guess]` over informative blocks.
    pub confusion: [[u64; 2]; 2],
}

impl SignalReport {
    pub fn from_records(kind: &str, config: &ExperimentConfig, records: &[BlockRecord]) -> Self {
        let mut confusion = [[0u64; 2]; 2];
        let mut correct_all = 0u64;
        for r in records {
            if r.informative {
                confusion[r.alice_bit.index()][r.bob_guess.index()] += 1;
            }
            if r.alice_bit == r.bob_guess {
                correct_all += 1;
            }
        }
        let n_informative: u64 = confusion.iter().flatten().sum();
        let n_correct = confusion[0][0] + confusion[1][1];
        let accuracy = if n_informative > 0 {
            n_correct as f64 / n_informative as f64
        } else {
            0.5
        };
        SignalReport {
            kind: kind.to_string(),
            n: config.n,
            n_blocks: records.len(),
            sigma: config.sigma,
            sigma_scaling: config.scaling,
            effective_sigma: config.scaling.effective(config.sigma, config.n),
            seed: config.seed,
            n_informative,
            n_correct,
            accuracy,
            wilson_ci: wilson_interval(n_correct, n_informative, Z_95),
            accuracy_all_blocks: correct_all as f64 / records.len().max(1) as f64,
            mutual_information_bits: mutual_information_bits(confusion),
            confusion,
        }
    }

    /// Standard error of `accuracy`.
    pub fn accuracy_se(&self) -> f64 {
        proportion_se(self.accuracy, self.n_informative)
    }
}

/// Runs `config.m` independent blocks. Block `i` draws everything (Alice's
/// bit, the pairs, Bob's noise) from stream `i` of the master seed, so the
/// records do not depend on the worker count.
pub fn run_experiment<S: PairSource>(
    source: &S,
    config: &ExperimentConfig,
) -> Result<(SignalReport, Vec<BlockRecord>)> {
    config.validate()?;
    let sigma = config.scaling.effective(config.sigma, config.n);
    let records: Vec<BlockRecord> = with_workers(config.workers, || {
        (0..config.m)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(config.seed, i as u64);
                let bit = match &config.schedule {
                    Some(s) => s[i % s.len()],
                    None => Setting::from_bool(rng.random::<bool>()),
                };
                sample_block_unchecked(source, bit, config.n, sigma, &mut rng)
            })
            .collect()
    });
    let report = SignalReport::from_records(source.kind(), config, &records);
    Ok((report, records))
}

/// Per-block CSV columns.
pub const BLOCK_CSV_HEADER: [&str; 8] = [
    "block_index",
    "alice_bit",
    "exact_B",
    "exact_Bprime",
    "noisy_B",
    "noisy_Bprime",
    "bob_guess",
    "informative",
];

/// Analytic and sampled probabilities of the extreme block outcomes
/// `B = 1`, `B' = ±1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremeEventReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub blocks_per_bit: usize,
    pub seed: u64,
    pub analytic: ExtremeProbabilities,
    pub empirical: ExtremeProbabilities,
    /// Binomial standard errors of the empirical frequencies, evaluated at
    /// the analytic probabilities.
    pub standard_errors: ExtremeProbabilities,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExtremeProbabilities {
    /// `P(B = 1)`, pooled over both of Alice's bits.
    pub b_one: f64,
    /// `P(B = 1 ∧ B' = 1 | a)`.
    pub both_one_given_a: f64,
    /// `P(B = 1 ∧ B' = -1 | a)`.
    pub opposite_given_a: f64,
    /// `P(B = 1 ∧ B' = 1 | a')`.
    pub both_one_given_aprime: f64,
    /// `P(B = 1 ∧ B' = -1 | a')`.
    pub opposite_given_aprime: f64,
}

impl ExtremeProbabilities {
    pub fn analytic(n: usize) -> Self {
        let p = 0.5f64.powi(n as i32);
        ExtremeProbabilities {
            b_one: p,
            both_one_given_a: p,
            opposite_given_a: 0.0,
            both_one_given_aprime: 0.0,
            opposite_given_aprime: p,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.b_one,
            self.both_one_given_a,
            self.opposite_given_a,
            self.both_one_given_aprime,
            self.opposite_given_aprime,
        ]
    }

    fn from_array(v: [f64; 5]) -> Self {
        ExtremeProbabilities {
            b_one: v[0],
            both_one_given_a: v[1],
            opposite_given_a: v[2],
            both_one_given_aprime: v[3],
            opposite_given_aprime: v[4],
        }
    }
}

pub const EXTREME_MAX_N: usize = 20;

/// Exact probabilities for PR blocks of size `n`, plus frequencies from
/// `blocks_per_bit` blocks for each of Alice's bits.
pub fn extreme_event_probabilities(
    n: usize,
    blocks_per_bit: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<ExtremeEventReport> {
    if !(1..=EXTREME_MAX_N).contains(&n) {
        return Err(Error::out_of_range("N", n as f64, "1..=20"));
    }
    if blocks_per_bit == 0 {
        return Err(Error::out_of_range("blocks", 0.0, ">= 1"));
    }
    let analytic = ExtremeProbabilities::analytic(n);
    // counts[bit] = (B = 1, B = 1 ∧ B' = 1, B = 1 ∧ B' = -1)
    let counts: [[u64; 3]; 2] = with_workers(workers, || {
        let per_bit = |bit: Setting| -> [u64; 3] {
            (0..blocks_per_bit)
                .into_par_iter()
                .map(|i| {
                    let stream = (bit.index() * blocks_per_bit + i) as u64;
                    let mut rng: StreamRng = stream_rng(seed, stream);
                    let (mut all_b, mut all_bp, mut all_neg_bp) = (true, true, true);
                    for _ in 0..n {
                        let pair = realize_pr_pair(bit, &mut rng);
                        all_b &= pair.b_val == Outcome::Plus;
                        all_bp &= pair.bprime_val == Outcome::Plus;
                        all_neg_bp &= pair.bprime_val == Outcome::Minus;
                    }
                    [
                        all_b as u64,
                        (all_b && all_bp) as u64,
                        (all_b && all_neg_bp) as u64,
                    ]
                })
                .reduce(|| [0; 3], |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
        };
        [per_bit(Setting::Unprimed), per_bit(Setting::Primed)]
    });
    let m = blocks_per_bit as f64;
    let empirical = ExtremeProbabilities::from_array([
        (counts[0][0] + counts[1][0]) as f64 / (2.0 * m),
        counts[0][1] as f64 / m,
        counts[0][2] as f64 / m,
        counts[1][1] as f64 / m,
        counts[1][2] as f64 / m,
    ]);
    let a = analytic.as_array();
    let trials = [
        2 * blocks_per_bit as u64,
        blocks_per_bit as u64,
        blocks_per_bit as u64,
        blocks_per_bit as u64,
        blocks_per_bit as u64,
    ];
    let standard_errors =
        ExtremeProbabilities::from_array(std::array::from_fn(|i| proportion_se(a[i], trials[i])));
    Ok(ExtremeEventReport {
        n,
        blocks_per_bit,
        seed,
        analytic,
        empirical,
        standard_errors,
    })
}

impl ExtremeEventReport {
    /// Largest `|empirical - analytic|` in units of the standard error;
    /// an event with probability zero must never be observed.
    pub fn max_z_score(&self) -> f64 {
        let (a, e, s) = (
            self.analytic.as_array(),
            self.empirical.as_array(),
            self.standard_errors.as_array(),
        );
        (0..5)
            .map(|i| {
                let d = (e[i] - a[i]).abs();
                if s[i] > 0.0 {
                    d / s[i]
                } else if d == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_value, ks_statistic};

    #[test]
    fn pr_pair_rules() {
        let p = pr_pair_from_outcome(Setting::Unprimed, Outcome::Plus);
        assert_eq!((p.b_val, p.bprime_val), (Outcome::Plus, Outcome::Plus));
        let p = pr_pair_from_outcome(Setting::Primed, Outcome::Plus);
        assert_eq!((p.b_val, p.bprime_val), (Outcome::Plus, Outcome::Minus));
        let p = pr_pair_from_outcome(Setting::Primed, Outcome::Minus);
        assert_eq!((p.b_val, p.bprime_val), (Outcome::Minus, Outcome::Plus));
        let p = pr_pair_from_outcome(Setting::Unprimed, Outcome::Minus);
        assert_eq!((p.b_val, p.bprime_val), (Outcome::Minus, Outcome::Minus));
    }

    #[test]
    fn pr_pair_marginal_is_fair() {
        let mut rng = stream_rng(1, 0);
        let n = 100_000;
        for bit in Setting::BOTH {
            let plus = (0..n)
                .filter(|_| realize_pr_pair(bit, &mut rng).b_val == Outcome::Plus)
                .count();
            assert!((plus as f64 / n as f64 - 0.5).abs() < 0.01);
        }
    }

    #[test]
    fn lhv_constant_program_ignores_alice() {
        let src = LhvSource::constant("++++".parse().unwrap());
        let mut rng = stream_rng(2, 0);
        for bit in Setting::BOTH {
            for _ in 0..10 {
                let p = realize_lhv_pair(&src, bit, &mut rng);
                assert_eq!((p.b_val, p.bprime_val), (Outcome::Plus, Outcome::Plus));
            }
        }
    }

    #[test]
    fn lhv_bob_values_independent_of_alice() {
        let src = LhvSource::uniform();
        let samples = 1_000_000u64;
        // joint counts of (alice_bit, b, b') with alice_bit a fair coin
        let mut counts = [[0u64; 4]; 2];
        let mut rng = stream_rng(3, 0);
        for _ in 0..samples {
            let bit = Setting::from_bool(rng.random::<bool>());
            let p = realize_lhv_pair(&src, bit, &mut rng);
            counts[bit.index()][p.b_val.index() * 2 + p.bprime_val.index()] += 1;
        }
        let n = samples as f64;
        let row: Vec<f64> = counts
            .iter()
            .map(|r| r.iter().sum::<u64>() as f64 / n)
            .collect();
        let mut mi = 0.0;
        for c in 0..4 {
            let col = (counts[0][c] + counts[1][c]) as f64 / n;
            assert!((col - 0.25).abs() < 0.005);
            for r in 0..2 {
                let j = counts[r][c] as f64 / n;
                if j > 0.0 {
                    mi += j * (j / (row[r] * col)).log2();
                }
            }
        }
        assert!(mi < 0.001, "mi = {mi}");
    }

    #[test]
    fn lhv_rejects_bad_weights() {
        assert!(LhvSource::new([0.1; 16]).is_err());
        let mut w = [0.0; 16];
        w[0] = 1.5;
        w[1] = -0.5;
        assert!(LhvSource::new(w).is_err());
    }

    #[test]
    fn single_pair_blocks_noiseless() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..200 {
            let r = sample_block(&PrSource, Setting::Unprimed, 1, 0.0, &mut rng).unwrap();
            assert_eq!(r.bob_guess, Setting::Unprimed);
            assert_eq!(r.exact_b * r.exact_bprime, 1.0);
            let r = sample_block(&PrSource, Setting::Primed, 1, 0.0, &mut rng).unwrap();
            assert_eq!(r.bob_guess, Setting::Primed);
        }
    }

    #[test]
    fn block_errors() {
        let mut rng = stream_rng(4, 1);
        assert!(sample_block(&PrSource, Setting::Unprimed, 0, 0.0, &mut rng).is_err());
        assert!(sample_block(&PrSource, Setting::Unprimed, 5, -1.0, &mut rng).is_err());
        assert!(sample_block(&PrSource, Setting::Unprimed, 5, f64::NAN, &mut rng).is_err());
        let cfg = ExperimentConfig::new(5, 0, 0.0, 0);
        assert!(run_experiment(&PrSource, &cfg).is_err());
    }

    #[test]
    fn pr_block_invariant_and_typical_size() {
        let mut rng = stream_rng(5, 0);
        let mut sq = 0.0;
        let reps = 2000;
        for i in 0..reps {
            let bit = Setting::from_bool(i % 2 == 1);
            let r = sample_block(&PrSource, bit, 100, 0.0, &mut rng).unwrap();
            let sign = if bit == Setting::Unprimed { 1.0 } else { -1.0 };
            assert_eq!(r.exact_bprime, sign * r.exact_b);
            sq += r.exact_b * r.exact_b;
        }
        // rms of B is exactly 1/√N for fair ±1 values
        let rms = (sq / reps as f64).sqrt();
        assert!((rms - 0.1).abs() < 0.005, "rms {rms}");
    }

    #[test]
    fn noiseless_pr_accuracy_is_one_for_any_n() {
        for n in [1, 2, 3, 10, 100] {
            let (report, records) =
                run_experiment(&PrSource, &ExperimentConfig::new(n, 500, 0.0, 9)).unwrap();
            assert_eq!(report.accuracy, 1.0, "N = {n}");
            assert_eq!(report.n_correct, report.n_informative);
            if n % 2 == 1 {
                assert!(records.iter().all(|r| r.informative));
            }
        }
    }

    #[test]
    fn report_is_worker_independent() {
        let mut cfg = ExperimentConfig::new(50, 400, 0.1, 77);
        cfg.workers = Some(1);
        let a = run_experiment(&PrSource, &cfg).unwrap();
        cfg.workers = Some(6);
        let b = run_experiment(&PrSource, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schedule_is_cycled() {
        let mut cfg = ExperimentConfig::new(3, 6, 0.0, 1);
        cfg.schedule = Some(vec![Setting::Unprimed, Setting::Primed]);
        let (_, records) = run_experiment(&PrSource, &cfg).unwrap();
        let bits: Vec<_> = records.iter().map(|r| r.alice_bit.index()).collect();
        assert_eq!(bits, [0, 1, 0, 1, 0, 1]);
        cfg.schedule = Some(vec![]);
        assert!(run_experiment(&PrSource, &cfg).is_err());
    }

    #[test]
    fn noise_scaling() {
        assert_eq!(NoiseScaling::Fixed.effective(0.4, 16), 0.4);
        assert_eq!(NoiseScaling::InverseSqrtN.effective(0.4, 16), 0.1);
    }

    /// Binomial law of `B` folded with Gaussian readout noise: the chance
    /// that both noisy readings land on the side the hypothesis predicts.
    fn pr_accuracy_oracle(n: usize, sigma: f64) -> f64 {
        use statrs::distribution::{Binomial, ContinuousCDF, Discrete, Normal};
        let law = Binomial::new(0.5, n as u64).unwrap();
        let unit = Normal::new(0.0, 1.0).unwrap();
        (0..=n as u64)
            .map(|k| {
                let b = (2.0 * k as f64 - n as f64) / n as f64;
                let hit = if sigma == 0.0 {
                    if b == 0.0 {
                        0.5
                    } else {
                        1.0
                    }
                } else {
                    let up = unit.cdf(b / sigma);
                    up * up + (1.0 - up) * (1.0 - up)
                };
                law.pmf(k) * hit
            })
            .sum()
    }

    #[test]
    fn noisy_accuracy_matches_oracle() {
        // coin-flip blocks have probability zero once sigma > 0
        let expected = pr_accuracy_oracle(100, 0.05);
        assert!(expected > 0.75, "{expected}");
        let (report, _) =
            run_experiment(&PrSource, &ExperimentConfig::new(100, 20_000, 0.05, 8)).unwrap();
        assert_eq!(report.n_informative, 20_000);
        assert!((report.accuracy - expected).abs() < 4.0 * report.accuracy_se());
        // without noise, N = 2 has B = 0 half the time
        assert!((pr_accuracy_oracle(2, 0.0) - 0.75).abs() < 1e-12);
        let (report, _) =
            run_experiment(&PrSource, &ExperimentConfig::new(2, 20_000, 0.0, 8)).unwrap();
        assert!(
            (report.accuracy_all_blocks - 0.75).abs() < 4.0 * (0.75f64 * 0.25 / 20_000.0).sqrt()
        );
    }

    #[test]
    fn marginal_readings_do_not_depend_on_alice() {
        let (_, records) =
            run_experiment(&PrSource, &ExperimentConfig::new(100, 10_000, 0.05, 21)).unwrap();
        let split = |f: fn(&BlockRecord) -> f64, bit: Setting| -> Vec<f64> {
            records
                .iter()
                .filter(|r| r.alice_bit == bit)
                .map(f)
                .collect()
        };
        for f in [
            |r: &BlockRecord| r.noisy_b,
            |r: &BlockRecord| r.noisy_bprime,
        ] {
            let a = split(f, Setting::Unprimed);
            let b = split(f, Setting::Primed);
            assert!(ks_statistic(&a, &b) < ks_critical_value(0.01, a.len(), b.len()));
        }
    }

    #[test]
    fn extreme_events_small_n() {
        let r = extreme_event_probabilities(3, 200_000, 5, None).unwrap();
        assert_eq!(r.analytic.b_one, 0.125);
        assert_eq!(r.analytic.both_one_given_a, 0.125);
        assert_eq!(r.analytic.opposite_given_a, 0.0);
        assert_eq!(r.analytic.opposite_given_aprime, 0.125);
        assert_eq!(r.analytic.both_one_given_aprime, 0.0);
        assert_eq!(r.empirical.opposite_given_a, 0.0);
        assert_eq!(r.empirical.both_one_given_aprime, 0.0);
        assert!(r.max_z_score() < 4.0);
        assert_eq!(ExtremeProbabilities::analytic(1).b_one, 0.5);
        assert!(extreme_event_probabilities(0, 10, 0, None).is_err());
        assert!(extreme_event_probabilities(21, 10, 0, None).is_err());
    }
}
