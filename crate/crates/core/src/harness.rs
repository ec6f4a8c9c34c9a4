//! Passive-adversary security game: instance bookkeeping, the Execute and
//! Test oracles, and Monte-Carlo advantage estimates for supplied
//! distinguishers.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Element, Platform};
use crate::protocol::{
    run_session_with_rng, ArtifactMeta, PartyId, ProtocolError, SessionConfig, SessionRecord,
    Transcript, UniformPairKeys,
};

/// Instance `i` of party `U`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceId {
    pub party: PartyId,
    pub instance: u32,
}

impl InstanceId {
    pub fn new(party: u32, instance: u32) -> Self {
        InstanceId {
            party: PartyId(party),
            instance,
        }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}^{}", self.party, self.instance)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("instance {0} has already been used")]
    InstanceUsed(InstanceId),
    #[error("instance {0} named twice in one Execute call")]
    DuplicateInstance(InstanceId),
    #[error("instance {0} has not accepted")]
    NotAccepted(InstanceId),
    #[error("Test may be asked only once")]
    TestAlreadyUsed,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("distinguisher failed: {0}")]
    Distinguisher(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// What Execute stores as the instances' session key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMode {
    /// The key the protocol computed.
    #[default]
    Real,
    /// A fresh uniform element of `G` per session, shared by its instances.
    FakeUniform,
}

/// One run of the game: a registry of instances, the hidden bit `b` and a
/// single Test query.
#[derive(Debug)]
pub struct OracleEnv {
    platform: Arc<Platform>,
    config: SessionConfig,
    registry: HashMap<InstanceId, SessionRecord>,
    rng: ChaCha20Rng,
    test_used: bool,
    b: bool,
    q_ex: u64,
    mode: KeyMode,
}

impl OracleEnv {
    pub fn new(platform: Arc<Platform>, seed: u64, mode: KeyMode) -> Result<Self> {
        Self::from_rng(platform, ChaCha20Rng::seed_from_u64(seed), mode)
    }

    /// `b` is the first draw from `rng`.
    pub fn from_rng(platform: Arc<Platform>, mut rng: ChaCha20Rng, mode: KeyMode) -> Result<Self> {
        let b = rng.gen::<bool>();
        let config = SessionConfig::new(3, platform.clone(), Arc::new(UniformPairKeys), 0)?;
        Ok(OracleEnv {
            platform,
            config,
            registry: HashMap::new(),
            rng,
            test_used: false,
            b,
            q_ex: 0,
            mode,
        })
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }

    pub fn q_ex(&self) -> u64 {
        self.q_ex
    }

    pub fn test_used(&self) -> bool {
        self.test_used
    }

    pub fn record(&self, id: &InstanceId) -> Option<&SessionRecord> {
        self.registry.get(id)
    }

    /// The hidden bit. Exposed for calibration distinguishers only.
    pub fn hidden_bit(&self) -> bool {
        self.b
    }

    /// Runs a fresh session among the named instances (in order, as parties
    /// `1..n`) and returns its transcript. Refuses instances seen before.
    pub fn execute(&mut self, instances: &[InstanceId]) -> Result<Transcript> {
        let mut seen = HashSet::new();
        for id in instances {
            if !seen.insert(id) {
                return Err(HarnessError::DuplicateInstance(*id));
            }
            if self.registry.get(id).is_some_and(|r| r.used) {
                return Err(HarnessError::InstanceUsed(*id));
            }
        }
        let config = self.config.reseeded(instances.len(), 0)?;
        let out = run_session_with_rng(&config, &mut self.rng)?;
        let stored_key = match self.mode {
            KeyMode::Real => None,
            KeyMode::FakeUniform => Some(self.platform.target().sample(&mut self.rng)),
        };
        let pid: Vec<PartyId> = instances.iter().map(|id| id.party).collect();
        for (id, mut record) in instances.iter().zip(out.records) {
            record.pid = pid.clone();
            if let Some(k) = &stored_key {
                record.sk = Some(k.clone());
            }
            self.registry.insert(*id, record);
        }
        self.q_ex += 1;
        Ok(out.transcript)
    }

    /// `b = 1`: the instance's key; `b = 0`: a uniform element of `G`.
    pub fn test(&mut self, id: &InstanceId) -> Result<Element> {
        if self.test_used {
            return Err(HarnessError::TestAlreadyUsed);
        }
        let record = self
            .registry
            .get(id)
            .ok_or(HarnessError::NotAccepted(*id))?;
        if !record.acc {
            return Err(HarnessError::NotAccepted(*id));
        }
        let key = record.sk.clone().ok_or(HarnessError::NotAccepted(*id))?;
        self.test_used = true;
        Ok(if self.b {
            key
        } else {
            self.platform.target().sample(&mut self.rng)
        })
    }

    /// Marks an instance as used without running it, as if it had been
    /// consumed by an aborted session.
    pub fn reserve(&mut self, id: InstanceId) {
        let record = SessionRecord {
            pid: vec![id.party],
            used: true,
            ..SessionRecord::default()
        };
        self.registry.insert(id, record);
    }
}

/// A passive adversary. Returns its guess for `b`.
pub trait Distinguisher: Sync {
    fn name(&self) -> String;
    fn guess(&self, env: &mut OracleEnv, rng: &mut dyn RngCore) -> Result<bool>;
}

fn fresh_instances(n: usize) -> Vec<InstanceId> {
    (1..=n as u32).map(|u| InstanceId::new(u, 1)).collect()
}

/// Ignores everything and flips a coin.
#[derive(Debug, Clone, Copy)]
pub struct CoinFlip {
    pub n: usize,
}

impl Distinguisher for CoinFlip {
    fn name(&self) -> String {
        "coin_flip".into()
    }

    fn guess(&self, env: &mut OracleEnv, rng: &mut dyn RngCore) -> Result<bool> {
        let ids = fresh_instances(self.n);
        env.execute(&ids)?;
        env.test(&ids[0])?;
        Ok(rng.gen())
    }
}

/// Reads the hidden bit. Upper calibration only.
#[derive(Debug, Clone, Copy)]
pub struct Cheating {
    pub n: usize,
}

impl Distinguisher for Cheating {
    fn name(&self) -> String {
        "cheating".into()
    }

    fn guess(&self, env: &mut OracleEnv, _rng: &mut dyn RngCore) -> Result<bool> {
        let ids = fresh_instances(self.n);
        env.execute(&ids)?;
        env.test(&ids[0])?;
        Ok(env.hidden_bit())
    }
}

/// Enumerates every `(h_1, ..., h_n)` consistent with the `v` and `Z`
/// values of the transcript and answers 1 iff the Test value equals the
/// most common candidate key.
#[derive(Debug, Clone, Copy)]
pub struct BruteForce {
    pub n: usize,
    /// Refuse when the candidate space exceeds this many tuples.
    pub max_candidates: u64,
}

impl BruteForce {
    pub fn new(n: usize) -> Self {
        BruteForce {
            n,
            max_candidates: 1 << 20,
        }
    }

    /// Keys of all secret tuples consistent with the public `v` and `Z`,
    /// with multiplicities.
    pub fn candidate_keys(
        &self,
        platform: &Platform,
        t: &Transcript,
    ) -> Result<HashMap<Element, u64>> {
        let n = t.n();
        let hs = platform.acting().elements()?;
        let mut preimages: Vec<Vec<Element>> = vec![Vec::new(); n];
        for h in &hs {
            let v = platform.act_base(h)?;
            for (i, target) in t.v.iter().enumerate() {
                if v == *target {
                    preimages[i].push(h.clone());
                }
            }
        }
        let space = preimages
            .iter()
            .try_fold(1u64, |acc, p| acc.checked_mul(p.len() as u64));
        match space {
            Some(s) if s <= self.max_candidates => {}
            _ => {
                return Err(HarnessError::Distinguisher(format!(
                    "candidate space too large for n={n}"
                )))
            }
        }
        let mut counts = HashMap::new();
        let mut pick = vec![0usize; n];
        if preimages.iter().any(Vec::is_empty) {
            return Ok(counts);
        }
        loop {
            let secrets: Vec<Element> = pick
                .iter()
                .zip(&preimages)
                .map(|(&k, p)| p[k].clone())
                .collect();
            let links =
                crate::protocol::link_values(platform, &secrets).map_err(HarnessError::from)?;
            let consistent = (0..n).try_fold(true, |ok, i| -> Result<bool> {
                let z = platform.mul(&platform.target().invert(&links[i])?, &links[(i + 1) % n])?;
                Ok(ok && z == t.z[i])
            })?;
            if consistent {
                let mut key = platform.target().identity();
                for link in &links {
                    key = platform.mul(&key, link)?;
                }
                *counts.entry(key).or_insert(0) += 1;
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return Ok(counts);
                }
                pick[pos] += 1;
                if pick[pos] < preimages[pos].len() {
                    break;
                }
                pick[pos] = 0;
                pos += 1;
            }
        }
    }
}

impl Distinguisher for BruteForce {
    fn name(&self) -> String {
        "brute_force".into()
    }

    fn guess(&self, env: &mut OracleEnv, _rng: &mut dyn RngCore) -> Result<bool> {
        let ids = fresh_instances(self.n);
        let t = env.execute(&ids)?;
        let challenge = env.test(&ids[0])?;
        let counts = self.candidate_keys(env.platform(), &t)?;
        let best = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(k, _)| k);
        Ok(best == Some(&challenge))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub distinguisher: String,
    pub mode: KeyMode,
    pub trials: u64,
    pub successes: u64,
    /// `|2 · successes / trials - 1|`.
    pub advantage: f64,
    /// Half-width of the 95% interval on the advantage, from the Wilson
    /// interval on the success rate.
    pub ci95: f64,
    pub q_ex: u64,
    pub aborted: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub meta: Option<ArtifactMeta>,
    /// Not serialized so that reports stay byte-identical across runs.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl AdvantageReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Wilson score interval for a binomial proportion at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Stream-separated RNG for trial `trial` of experiment seed `seed`.
pub fn trial_rng(seed: u64, trial: u64, lane: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(trial);
    rng
}

/// Plays `trials` independent games. A trial whose distinguisher errors
/// counts as a failure.
pub fn estimate_advantage(
    distinguisher: &dyn Distinguisher,
    platform: &Arc<Platform>,
    mode: KeyMode,
    trials: u64,
    seed: u64,
) -> Result<AdvantageReport> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let start = Instant::now();
    let outcomes: Vec<(bool, bool, u64)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let env = OracleEnv::from_rng(platform.clone(), trial_rng(seed, trial, 1), mode);
            let mut env = match env {
                Ok(env) => env,
                Err(_) => return (false, true, 0),
            };
            let mut rng = trial_rng(seed, trial, 2);
            match distinguisher.guess(&mut env, &mut rng) {
                Ok(guess) => (guess == env.hidden_bit(), false, env.q_ex()),
                Err(_) => (false, true, env.q_ex()),
            }
        })
        .collect();
    let successes = outcomes.iter().filter(|o| o.0).count() as u64;
    let aborted = outcomes.iter().filter(|o| o.1).count() as u64;
    let q_ex = outcomes.iter().map(|o| o.2).sum();
    let rate = successes as f64 / trials as f64;
    let (lo, hi) = wilson_interval(successes, trials);
    Ok(AdvantageReport {
        distinguisher: distinguisher.name(),
        mode,
        trials,
        successes,
        advantage: (2.0 * rate - 1.0).abs(),
        ci95: hi - lo,
        q_ex,
        aborted,
        meta: Some(ArtifactMeta::new(platform, seed)),
        wall_time: start.elapsed(),
    })
}
