use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DistributionSample, LabError, Result};
use crate::algebra::{Element, Platform};
use crate::harness::trial_rng;

pub const MIN_TRIALS: u64 = 1000;
pub const MAX_BUCKETS: usize = 64;
const BOOTSTRAP_REPLICATES: usize = 200;

/// How samples are mapped to at most [`MAX_BUCKETS`] buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Partition {
    /// SHA-256 of `(T, sk)`, reduced mod 64.
    #[default]
    Hash64,
    /// SHA-256 of `(T, sk)`, reduced mod `buckets`.
    HashMod { buckets: usize },
    /// SHA-256 of `sk` alone, reduced mod 64.
    KeyHash,
    /// SHA-256 of the link `Γ_{i,i-1}` (1-based `index`), reduced mod 64.
    /// Uses hidden values.
    Link { index: usize },
    /// Public: how many closing links are consistent with `T`, and whether
    /// `sk` is one of the keys they give.
    ConsistentKey,
}

impl Partition {
    pub fn name(&self) -> String {
        match self {
            Partition::Hash64 => "hash64".into(),
            Partition::HashMod { buckets } => format!("hash_mod_{buckets}"),
            Partition::KeyHash => "key_hash".into(),
            Partition::Link { index } => format!("link_{index}"),
            Partition::ConsistentKey => "consistent_key".into(),
        }
    }

    pub fn buckets(&self) -> usize {
        match self {
            Partition::HashMod { buckets } => *buckets,
            _ => MAX_BUCKETS,
        }
    }
}

fn hash_bucket(parts: &[&[u8]]) -> usize {
    hash_mod(parts, MAX_BUCKETS)
}

fn hash_mod(parts: &[&[u8]], modulus: usize) -> usize {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_be_bytes());
        hasher.update(p);
    }
    let digest = hasher.finalize();
    (u64::from_be_bytes(digest[..8].try_into().expect("8 bytes")) % modulus as u64) as usize
}

/// Recovers, from `T` alone, every assignment of link values that the
/// `v`'s and `Z`'s allow.
///
/// `Γ_{i,i-1}` must lie in `D_i = { φ(a⊙b, g) : φ(a,g) = v_i, φ(b,g) = v_{i-1} }`,
/// and `Z` fixes every link once `Γ_{1,n}` is chosen.
#[derive(Debug, Clone)]
pub struct PublicAnalyzer {
    platform: Arc<Platform>,
    preimages: HashMap<Element, Vec<Element>>,
}

impl PublicAnalyzer {
    pub fn new(platform: Arc<Platform>) -> Result<Self> {
        let mut preimages: HashMap<Element, Vec<Element>> = HashMap::new();
        for h in platform.acting().elements()? {
            preimages.entry(platform.act_base(&h)?).or_default().push(h);
        }
        Ok(PublicAnalyzer {
            platform,
            preimages,
        })
    }

    fn pre(&self, v: &Element) -> &[Element] {
        self.preimages.get(v).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `D_i` for 1-based `i`.
    pub fn link_domain(&self, v: &[Element], i: usize) -> Result<HashSet<Element>> {
        let n = v.len();
        let prev = if i == 1 { n } else { i - 1 };
        let mut out = HashSet::new();
        for a in self.pre(&v[i - 1]) {
            for b in self.pre(&v[prev - 1]) {
                out.insert(self.platform.act_base(&self.platform.op(a, b)?)?);
            }
        }
        Ok(out)
    }

    /// Keys of every link assignment consistent with `T`, one per
    /// admissible `Γ_{1,n}`.
    pub fn candidate_keys(&self, t: &crate::protocol::Transcript) -> Result<Vec<Element>> {
        let n = t.n();
        let p = &self.platform;
        let domains = (1..=n)
            .map(|i| self.link_domain(&t.v, i))
            .collect::<Result<Vec<_>>>()?;
        let mut keys = Vec::new();
        'outer: for first in &domains[0] {
            let mut link = first.clone();
            let mut key = link.clone();
            for i in 1..n {
                link = p.mul(&link, &t.z[i - 1])?;
                if !domains[i].contains(&link) {
                    continue 'outer;
                }
                key = p.mul(&key, &link)?;
            }
            keys.push(key);
        }
        Ok(keys)
    }
}

/// A [`Partition`] bound to a platform.
#[derive(Debug, Clone)]
pub struct Partitioner {
    partition: Partition,
    analyzer: Option<PublicAnalyzer>,
}

impl Partitioner {
    pub fn new(partition: Partition, platform: &Arc<Platform>) -> Result<Self> {
        let analyzer = match partition {
            Partition::ConsistentKey => Some(PublicAnalyzer::new(platform.clone())?),
            _ => None,
        };
        Ok(Partitioner {
            partition,
            analyzer,
        })
    }

    pub fn partition(&self) -> Partition {
        self.partition
    }

    pub fn bucket(&self, sample: &DistributionSample) -> Result<usize> {
        Ok(match self.partition {
            Partition::Hash64 => {
                hash_bucket(&[&sample.transcript.to_bytes(), sample.sk.as_bytes()])
            }
            Partition::HashMod { buckets } => hash_mod(
                &[&sample.transcript.to_bytes(), sample.sk.as_bytes()],
                buckets,
            ),
            Partition::KeyHash => hash_bucket(&[sample.sk.as_bytes()]),
            Partition::Link { index } => {
                let n = sample.n();
                if index == 0 || index > n {
                    return Err(LabError::Infeasible(format!(
                        "link index {index} outside 1..={n}"
                    )));
                }
                hash_bucket(&[sample.internals.links[index - 1].as_bytes()])
            }
            Partition::ConsistentKey => {
                let analyzer = self
                    .analyzer
                    .as_ref()
                    .expect("analyzer built with the partition");
                let keys = analyzer.candidate_keys(&sample.transcript)?;
                2 * keys.len().min(31) + usize::from(keys.contains(&sample.sk))
            }
        })
    }
}

/// Half the L1 distance between the two empirical distributions.
pub fn tv_from_counts(a: &[u64], b: &[u64]) -> f64 {
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    if na == 0 || nb == 0 {
        return 0.0;
    }
    0.5 * a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na as f64 - y as f64 / nb as f64).abs())
        .sum::<f64>()
}

fn multinomial(counts: &[u64], rng: &mut ChaCha20Rng) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    let mut left = total;
    let mut mass = total as f64;
    let mut out = Vec::with_capacity(counts.len());
    for &c in counts {
        if left == 0 || mass <= 0.0 {
            out.push(0);
            continue;
        }
        let p = (c as f64 / mass).clamp(0.0, 1.0);
        let k = Binomial::new(left, p).expect("valid binomial").sample(rng);
        out.push(k);
        left -= k;
        mass -= c as f64;
    }
    out
}

/// Percentile 95% interval of the plug-in statistic over multinomial
/// resamples of both histograms.
pub fn bootstrap_ci(a: &[u64], b: &[u64], replicates: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xb007_57a9);
    let mut stats: Vec<f64> = (0..replicates)
        .map(|_| tv_from_counts(&multinomial(a, &mut rng), &multinomial(b, &mut rng)))
        .collect();
    if stats.is_empty() {
        return (0.0, 0.0);
    }
    stats.sort_by(f64::total_cmp);
    let at = |q: f64| stats[((q * (stats.len() - 1) as f64).round() as usize).min(stats.len() - 1)];
    (at(0.025), at(0.975))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub statistic: f64,
    pub ci95: (f64, f64),
    pub trials: u64,
    pub partition: Partition,
    pub buckets_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    pub counts_a: Vec<u64>,
    pub counts_b: Vec<u64>,
}

/// Draws `trials` samples from each side and compares their histograms
/// under `partitioner`. Trial `k` of side A uses `trial_rng(seed, k, 0)`,
/// side B lane 1.
pub fn tv_distance_by<A, B>(
    sample_a: A,
    sample_b: B,
    partitioner: &Partitioner,
    trials: u64,
    seed: u64,
) -> Result<DistanceEstimate>
where
    A: Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync,
    B: Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(LabError::TooFewTrials {
            trials,
            min: MIN_TRIALS,
        });
    }
    let buckets = partitioner.partition().buckets();
    if buckets == 0 || buckets > MAX_BUCKETS {
        return Err(LabError::TooManyBuckets {
            buckets,
            max: MAX_BUCKETS,
        });
    }
    let histogram =
        |lane: u64, sampler: &(dyn Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync)| {
            let indices = (0..trials)
                .into_par_iter()
                .map(|k| partitioner.bucket(&sampler(&mut trial_rng(seed, k, lane))?))
                .collect::<Result<Vec<usize>>>()?;
            let mut counts = vec![0u64; buckets];
            for i in indices {
                counts[i] += 1;
            }
            Ok::<_, LabError>(counts)
        };
    let counts_a = histogram(0, &sample_a)?;
    let counts_b = histogram(1, &sample_b)?;
    let buckets_used = counts_a
        .iter()
        .zip(&counts_b)
        .filter(|(a, b)| **a + **b > 0)
        .count();
    let (statistic, ci95, warning) = if buckets_used <= 1 {
        (
            0.0,
            (0.0, 0.0),
            Some("partition is degenerate: every sample fell in one bucket".to_string()),
        )
    } else {
        (
            tv_from_counts(&counts_a, &counts_b),
            bootstrap_ci(&counts_a, &counts_b, BOOTSTRAP_REPLICATES, seed),
            None,
        )
    };
    Ok(DistanceEstimate {
        statistic,
        ci95,
        trials,
        partition: partitioner.partition(),
        buckets_used,
        warning,
        counts_a,
        counts_b,
    })
}

pub fn tv_distance<A, B>(
    platform: &Arc<Platform>,
    sample_a: A,
    sample_b: B,
    partition: Partition,
    trials: u64,
    seed: u64,
) -> Result<DistanceEstimate>
where
    A: Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync,
    B: Fn(&mut ChaCha20Rng) -> Result<DistributionSample> + Sync,
{
    tv_distance_by(
        sample_a,
        sample_b,
        &Partitioner::new(partition, platform)?,
        trials,
        seed,
    )
}
