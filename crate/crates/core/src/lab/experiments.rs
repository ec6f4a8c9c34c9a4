use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::samplers::regime_s;
use super::{
    fake_key_independence, regime_n, sample_dist, sample_dist_prime, sample_fake,
    sample_fake_prime, sample_real, tv_distance_by, DdhContext, DistClosing, DistPrimeClosing,
    DistanceEstimate, DistributionSample, LabError, Partition, Partitioner, Result, TupleKind,
};
use crate::algebra::{make_platform, AlgebraError, Platform, PlatformDescriptor};
use crate::harness::{estimate_advantage, trial_rng, BruteForce, CoinFlip, KeyMode};
use crate::protocol::{UniformPairKeys, TOOL_VERSION};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_TOLERANCE: f64 = 0.02;
const GAME_TRIALS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    /// Real against Dist′ fed Diffie–Hellman tuples.
    RealVsDistprimeDh,
    /// Fake′ against Dist′ fed excluded random tuples.
    FakeprimeVsDistprimeRand,
    /// Fake′ against Dist fed Diffie–Hellman tuples.
    FakeprimeVsDistDh,
    /// Fake against Dist fed excluded random tuples.
    FakeVsDistRand,
    /// Exact conditioning of the Fake key on its transcript, plus a null
    /// distinguisher under fake keys.
    FakeKeyIndependence,
    /// Exhaustive-search distinguisher on a toy platform.
    DdhToyAdvantage,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::RealVsDistprimeDh,
        ExperimentName::FakeprimeVsDistprimeRand,
        ExperimentName::FakeprimeVsDistDh,
        ExperimentName::FakeVsDistRand,
        ExperimentName::FakeKeyIndependence,
        ExperimentName::DdhToyAdvantage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::RealVsDistprimeDh => "real_vs_distprime_dh",
            ExperimentName::FakeprimeVsDistprimeRand => "fakeprime_vs_distprime_rand",
            ExperimentName::FakeprimeVsDistDh => "fakeprime_vs_dist_dh",
            ExperimentName::FakeVsDistRand => "fake_vs_dist_rand",
            ExperimentName::FakeKeyIndependence => "fake_key_independence",
            ExperimentName::DdhToyAdvantage => "ddh_toy_advantage",
        }
    }

    pub fn is_tv_suite(self) -> bool {
        !matches!(
            self,
            ExperimentName::FakeKeyIndependence | ExperimentName::DdhToyAdvantage
        )
    }

    pub fn default_platform(self) -> PlatformDescriptor {
        match self {
            ExperimentName::DdhToyAdvantage => PlatformDescriptor::bd_modp(23, 2, 11),
            _ => PlatformDescriptor::symmetric_conjugation(4),
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| LabError::UnknownExperiment(s.to_string()))
    }
}

/// A platform given as a selector string or a full descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlatformSelector {
    Selector(String),
    Descriptor(PlatformDescriptor),
}

impl PlatformSelector {
    pub fn resolve(&self) -> Result<PlatformDescriptor, AlgebraError> {
        match self {
            PlatformSelector::Selector(text) => PlatformDescriptor::from_selector(text),
            PlatformSelector::Descriptor(d) => Ok(d.clone()),
        }
    }
}

/// Also the manifest format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform: Option<PlatformSelector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Partition>,
    /// Further partitions estimated on fresh samples and reported only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_partitions: Vec<Partition>,
    #[serde(default)]
    pub dist_prime_closing: DistPrimeClosing,
    #[serde(default)]
    pub dist_closing: DistClosing,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentName) -> Self {
        ExperimentConfig {
            experiment,
            platform: None,
            n: None,
            s: None,
            trials: None,
            seed: 0,
            tolerance: None,
            partition: None,
            extra_partitions: Vec::new(),
            dist_prime_closing: DistPrimeClosing::default(),
            dist_closing: DistClosing::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::Infeasible(format!("manifest: {e}")))
    }

    pub fn platform_descriptor(&self) -> Result<PlatformDescriptor> {
        match &self.platform {
            Some(sel) => Ok(sel.resolve()?),
            None => Ok(self.experiment.default_platform()),
        }
    }

    /// `s` from `s`, from `n = 3s + 5`, or 1.
    fn regime(&self) -> Result<(usize, usize)> {
        let s = match (self.s, self.n) {
            (Some(s), Some(n)) => {
                if regime_n(s)? != n {
                    return Err(LabError::Regime(format!("n = {n} but s = {s}")));
                }
                s
            }
            (Some(s), None) => s,
            (None, Some(n)) => regime_s(n)?,
            (None, None) => 1,
        };
        Ok((regime_n(s)?, s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentName,
    pub tool_version: String,
    pub platform: PlatformDescriptor,
    pub platform_tag: String,
    pub seed: u64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    pub trials: u64,
    pub statistic: f64,
    pub ci95: (f64, f64),
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_prime_closing: Option<DistPrimeClosing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist_closing: Option<DistClosing>,
    pub details: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line for terminals and logs.
    pub fn summary(&self) -> String {
        format!(
            "{} {} on {} (n={}, trials={}): statistic {:.6} vs tolerance {:.6}",
            if self.pass { "PASS" } else { "FAIL" },
            self.experiment,
            self.platform_tag,
            self.n,
            self.trials,
            self.statistic,
            self.tolerance
        )
    }
}

type Sampler<'a> = Box<dyn Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync + 'a>;

fn estimate_json(e: &DistanceEstimate) -> serde_json::Value {
    json!({
        "partition": e.partition.name(),
        "statistic": e.statistic,
        "ci95": e.ci95,
        "buckets_used": e.buckets_used,
        "warning": e.warning,
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let descriptor = config.platform_descriptor()?;
    let platform = Arc::new(make_platform(&descriptor)?);
    match config.experiment {
        ExperimentName::FakeKeyIndependence => run_independence(config, platform),
        ExperimentName::DdhToyAdvantage => run_toy(config, platform),
        _ => run_tv_suite(config, platform),
    }
}

fn base_report(
    config: &ExperimentConfig,
    platform: &Platform,
    n: usize,
    trials: u64,
) -> ExperimentReport {
    ExperimentReport {
        experiment: config.experiment,
        tool_version: TOOL_VERSION.to_string(),
        platform: platform.descriptor().clone(),
        platform_tag: platform.tag().to_string(),
        seed: config.seed,
        n,
        s: None,
        trials,
        statistic: 0.0,
        ci95: (0.0, 0.0),
        tolerance: 0.0,
        pass: false,
        partition: None,
        dist_prime_closing: None,
        dist_closing: None,
        details: json!({}),
        notes: Vec::new(),
    }
}

fn run_tv_suite(config: &ExperimentConfig, platform: Arc<Platform>) -> Result<ExperimentReport> {
    let (n, s) = config.regime()?;
    let trials = config.trials.unwrap_or(DEFAULT_TRIALS);
    let ctx = DdhContext::new(platform.clone())?;
    let p = &*platform;
    let keys = &UniformPairKeys;
    let dh = |rng: &mut dyn RngCore| ctx.sample(TupleKind::DhShaped, rng);
    let rand = |rng: &mut dyn RngCore| ctx.sample(TupleKind::RandomExcluded, rng);
    let prime_closing = config.dist_prime_closing;
    let closing = config.dist_closing;

    let mut report = base_report(config, p, n, trials);
    report.s = Some(s);
    let mut tolerance = config.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    let (a, b): (Sampler, Sampler) = match config.experiment {
        ExperimentName::RealVsDistprimeDh => {
            report.dist_prime_closing = Some(prime_closing);
            (
                Box::new(move |rng| sample_real(p, keys, n, rng)),
                Box::new(move |rng| {
                    let t = dh(rng)?;
                    sample_dist_prime(p, keys, s, &t, prime_closing, rng)
                }),
            )
        }
        ExperimentName::FakeprimeVsDistprimeRand => {
            report.dist_prime_closing = Some(prime_closing);
            tolerance += ctx.slack();
            report.notes.push(format!(
                "tolerance includes the stabilizer slack |H_g|/|H| = {}",
                ctx.slack()
            ));
            (
                Box::new(move |rng| sample_fake_prime(p, keys, s, rng)),
                Box::new(move |rng| {
                    let t = rand(rng)?;
                    sample_dist_prime(p, keys, s, &t, prime_closing, rng)
                }),
            )
        }
        ExperimentName::FakeprimeVsDistDh => {
            report.dist_closing = Some(closing);
            (
                Box::new(move |rng| sample_fake_prime(p, keys, s, rng)),
                Box::new(move |rng| {
                    let t = dh(rng)?;
                    sample_dist(p, keys, s, &t, closing, rng)
                }),
            )
        }
        ExperimentName::FakeVsDistRand => {
            report.dist_closing = Some(closing);
            (
                Box::new(move |rng| sample_fake(p, keys, n, rng)),
                Box::new(move |rng| {
                    let t = rand(rng)?;
                    sample_dist(p, keys, s, &t, closing, rng)
                }),
            )
        }
        other => unreachable!("{other} is not a distance suite"),
    };
    if report.dist_closing.is_some() && closing != DistClosing::Honest {
        report.notes.push(format!(
            "closing link of Dist uses t = {}; the symbol is undefined in the source construction",
            closing.as_str()
        ));
    }

    let partition = config.partition.unwrap_or_default();
    let est = tv_distance_by(
        &a,
        &b,
        &Partitioner::new(partition, &platform)?,
        trials,
        config.seed,
    )?;
    let mut extras = Vec::new();
    for (k, extra) in config.extra_partitions.iter().enumerate() {
        let e = tv_distance_by(
            &a,
            &b,
            &Partitioner::new(*extra, &platform)?,
            trials,
            config.seed ^ (k as u64 + 1),
        )?;
        extras.push(estimate_json(&e));
    }
    if let Some(w) = &est.warning {
        report.notes.push(w.clone());
    }
    report.statistic = est.statistic;
    report.ci95 = est.ci95;
    report.tolerance = tolerance;
    report.pass = est.statistic <= tolerance;
    report.partition = Some(partition.name());
    report.details = json!({
        "buckets_used": est.buckets_used,
        "counts_a": est.counts_a,
        "counts_b": est.counts_b,
        "stabilizer_slack": ctx.slack(),
        "noise_floor": ((partition.buckets() as f64) / (std::f64::consts::PI * trials as f64)).sqrt(),
        "informational": extras,
    });
    Ok(report)
}

fn run_independence(
    config: &ExperimentConfig,
    platform: Arc<Platform>,
) -> Result<ExperimentReport> {
    let n = config.n.unwrap_or(4);
    let trials = config.trials.unwrap_or(GAME_TRIALS);
    let exact = fake_key_independence(&platform, n)?;
    let game = estimate_advantage(
        &CoinFlip { n },
        &platform,
        KeyMode::FakeUniform,
        trials,
        config.seed,
    )?;
    let game_bound = 3.0 / (trials as f64).sqrt();
    let game_pass = game.advantage <= game_bound && game.aborted == 0;

    let mut report = base_report(config, &platform, n, trials);
    report.statistic = exact.bayes_advantage;
    report.tolerance = config.tolerance.unwrap_or(0.0);
    report.pass = exact.exact && exact.bayes_advantage <= report.tolerance && game_pass;
    report.partition = Some("exact: (Z, orbit classes of the links)".into());
    if !exact.exact {
        report.notes.push(format!(
            "sk given T is uniform in {} of {} cells; the best single-transcript advantage is {:.6}",
            exact.uniform_cells, exact.cells, exact.bayes_advantage
        ));
    }
    report.details = json!({
        "exhaustive": exact,
        "null_distinguisher": {
            "advantage": game.advantage,
            "bound": game_bound,
            "ci95": game.ci95,
            "successes": game.successes,
            "trials": game.trials,
            "q_ex": game.q_ex,
            "aborted": game.aborted,
            "pass": game_pass,
        },
    });
    Ok(report)
}

fn run_toy(config: &ExperimentConfig, platform: Arc<Platform>) -> Result<ExperimentReport> {
    let n = config.n.unwrap_or(3);
    let trials = config.trials.unwrap_or(GAME_TRIALS);
    let order = platform.target().order();
    let expected = 1.0 - 1.0 / order as f64;
    let brute = estimate_advantage(
        &BruteForce::new(n),
        &platform,
        KeyMode::Real,
        trials,
        config.seed,
    )?;
    let tolerance = config.tolerance.unwrap_or(DEFAULT_TOLERANCE);

    let tuple_game = match DdhContext::new(platform.clone()) {
        Ok(ctx) => {
            let wins = (0..trials)
                .into_par_iter()
                .map(|k| {
                    let mut rng = trial_rng(config.seed, k, 3);
                    let b: bool = rng.gen();
                    let kind = if b {
                        TupleKind::DhShaped
                    } else {
                        TupleKind::RandomExcluded
                    };
                    let t = ctx.sample(kind, &mut rng)?;
                    Ok(ctx.brute_force_is_dh(&t)? == b)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|&w| w)
                .count() as u64;
            json!({ "successes": wins, "trials": trials, "advantage": (2.0 * wins as f64 / trials as f64 - 1.0).abs() })
        }
        Err(e) => json!({ "skipped": e.to_string() }),
    };

    let mut report = base_report(config, &platform, n, trials);
    report.statistic = brute.advantage;
    report.ci95 = (
        (brute.advantage - brute.ci95).max(0.0),
        (brute.advantage + brute.ci95).min(1.0),
    );
    report.tolerance = tolerance;
    report.pass = (brute.advantage - expected).abs() <= tolerance && brute.aborted == 0;
    report.partition = None;
    report.notes.push(format!(
        "a uniform Test value equals the real key with probability 1/|G|, so exhaustive search reaches 1 - 1/|G| = {expected:.6}"
    ));
    report.details = json!({
        "expected": expected,
        "successes": brute.successes,
        "q_ex": brute.q_ex,
        "aborted": brute.aborted,
        "ddh_tuple_brute_force": tuple_game,
    });
    Ok(report)
}
