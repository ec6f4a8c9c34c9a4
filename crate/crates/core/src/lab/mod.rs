//! Distributions over `(T, sk)` from the forward-secrecy argument, DDH-style
//! tuples for group actions, total-variation estimates between samplers and
//! an exact check of how much a fully random key still depends on `T`.
//!
//! Link values are indexed the way the key is multiplied out:
//! `links[i-1] = Γ_{i,i-1}` with `Γ_{1,0} = Γ_{1,n}`, so
//! `sk = links[0] · links[1] · ... · links[n-1]`,
//! `Z_i = links[i-1]^-1 · links[i mod n]` and `w_i = φ(c_{i-1}, links[i-1])`.

mod ddh;
mod experiments;
mod independence;
mod samplers;
mod tv;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::{AlgebraError, Element, Platform};
use crate::harness::HarnessError;
use crate::protocol::{wrap, ProtocolError, Transcript};

pub use ddh::{coset, DdhContext, DdhGaTuple, TupleKind};
pub use experiments::{
    run_experiment, ExperimentConfig, ExperimentName, ExperimentReport, PlatformSelector,
    DEFAULT_TOLERANCE, DEFAULT_TRIALS,
};
pub use independence::{fake_key_independence, IndependenceReport};
pub use samplers::{
    fake_prime_uniform_links, link, regime_n, regime_s, sample_dist, sample_dist_prime,
    sample_fake, sample_fake_prime, sample_real, DistClosing, DistPrimeClosing,
};
pub use tv::{
    bootstrap_ci, tv_distance, tv_distance_by, tv_from_counts, DistanceEstimate, Partition,
    Partitioner, PublicAnalyzer, MAX_BUCKETS, MIN_TRIALS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabError {
    #[error("n must be 3s + 5 with s ≥ 1 (got {0})")]
    Regime(String),
    #[error("coset exclusion leaves nothing to sample: 2·|H_g| = {} ≥ |H| = {acting}", 2 * stabilizer)]
    ExclusionEmpty { stabilizer: u64, acting: u64 },
    #[error("at least {min} trials are required (got {trials})")]
    TooFewTrials { trials: u64, min: u64 },
    #[error("a partition needs 1..={max} buckets (got {buckets})")]
    TooManyBuckets { buckets: usize, max: usize },
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

/// Hidden values behind one sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleInternals {
    /// `h_1..h_n` with `v_k = φ(h_k, g)`. For the DDH-embedding samplers
    /// these are the implied secrets.
    pub secrets: Vec<Element>,
    /// `c_1..c_n`.
    pub pair_keys: Vec<Element>,
    /// `links[i-1] = Γ_{i,i-1}`.
    pub links: Vec<Element>,
    /// 1-based `i` of every `Γ_{i,i-1}` drawn uniformly from `G`.
    pub uniform_links: Vec<usize>,
    /// Auxiliary draws (`β_i`, `γ_i`, the tuple entries, ...), by name.
    pub aux: BTreeMap<String, Element>,
}

/// A `(T, sk)` pair plus its internals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionSample {
    pub transcript: Transcript,
    pub sk: Element,
    pub internals: SampleInternals,
}

impl DistributionSample {
    pub fn n(&self) -> usize {
        self.transcript.n()
    }

    /// Every `Γ_{i,i-1}` equals `φ(h_i ⊙ h_{i-1}, g)` for the stored secrets.
    pub fn links_are_honest(&self, platform: &Platform) -> Result<Vec<bool>> {
        let n = self.n();
        let h = &self.internals.secrets;
        (1..=n)
            .map(|i| {
                let expected =
                    platform.act_base(&platform.op(&h[i - 1], &h[wrap(i as i64 - 1, n) - 1])?)?;
                Ok(expected == self.internals.links[i - 1])
            })
            .collect()
    }

    /// `sk = Γ_{1,n} · Γ_{2,1} · ... · Γ_{n,n-1}` and the transcript is
    /// the one the internals produce.
    pub fn is_consistent(&self, platform: &Platform) -> Result<bool> {
        let rebuilt = assemble(
            platform,
            &self.internals.secrets,
            &self.internals.links,
            &self.internals.pair_keys,
        )?;
        Ok(rebuilt.0 == self.transcript
            && rebuilt.1 == self.sk
            && self.transcript.telescopes(platform)?)
    }
}

/// Builds `T` and `sk` from secrets, link values and pair keys.
pub(crate) fn assemble(
    platform: &Platform,
    secrets: &[Element],
    links: &[Element],
    pair_keys: &[Element],
) -> Result<(Transcript, Element)> {
    let n = secrets.len();
    if links.len() != n || pair_keys.len() != n {
        return Err(ProtocolError::WrongCount {
            expected: n,
            found: links.len().min(pair_keys.len()),
        }
        .into());
    }
    let g = platform.target();
    let v = secrets
        .iter()
        .map(|h| platform.act_base(h))
        .collect::<Result<Vec<_>, _>>()?;
    let w = (1..=n)
        .map(|i| platform.act(&pair_keys[wrap(i as i64 - 1, n) - 1], &links[i - 1]))
        .collect::<Result<Vec<_>, _>>()?;
    let z = (1..=n)
        .map(|i| platform.mul(&g.invert(&links[i - 1])?, &links[i % n]))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sk = g.identity();
    for link in links {
        sk = platform.mul(&sk, link)?;
    }
    Ok((Transcript::new(platform.tag().to_string(), v, w, z)?, sk))
}
