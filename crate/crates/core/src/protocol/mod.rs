//! The four-round group key exchange: per-party state machine, the
//! σ-permuted key ladder, a closed-form reference key and a deterministic
//! session runner.
//!
//! Parties are numbered `1..=n` everywhere outside this module's internals.
//! Pair key `c_i` is shared by parties `i` and `i+1` (cyclically).

mod party;
mod transcript;

use std::fmt;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{AlgebraError, Element, Platform};

pub use party::PartyState;
pub use transcript::{ArtifactMeta, KeysFile, Transcript, TranscriptFile, TOOL_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("n must be ≥ 3 (got {0})")]
    TooFewParties(usize),
    #[error("index {k} outside 1..={n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error("party {party}: {what} is missing")]
    Missing { party: usize, what: &'static str },
    #[error("party {party}: {what} was already set")]
    AlreadySet { party: usize, what: &'static str },
    #[error("expected {expected} values, got {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("platform mismatch: transcript is for {found}, expected {expected}")]
    PlatformMismatch { expected: String, found: String },
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub type Result<T, E = ProtocolError> = std::result::Result<T, E>;

/// `((i - 1) mod n) + 1`, so `wrap(0, n) = n` and `wrap(n + 1, n) = 1`.
pub fn wrap(i: i64, n: usize) -> usize {
    assert!(n >= 1, "wrap needs n >= 1");
    ((i - 1).rem_euclid(n as i64) + 1) as usize
}

/// The n-cycle `(1, n, n-1, ..., 2)`: `σ(1) = n`, `σ(k) = k - 1` otherwise.
pub fn sigma(n: usize, k: usize) -> Result<usize> {
    if n < 3 {
        return Err(ProtocolError::TooFewParties(n));
    }
    if k == 0 || k > n {
        return Err(ProtocolError::IndexOutOfRange { k, n });
    }
    Ok(if k == 1 { n } else { k - 1 })
}

/// `σ^j(k)`, by applying `σ` `j mod n` times.
pub fn sigma_pow(n: usize, j: usize, k: usize) -> Result<usize> {
    let mut k = k;
    sigma(n, k)?;
    for _ in 0..j % n {
        k = sigma(n, k)?;
    }
    Ok(k)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartyId(pub u32);

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{}", self.0)
    }
}

/// SHA-256 of the transcript bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(pub [u8; 32]);

impl SessionId {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(text: &str) -> Result<Self> {
        let bytes =
            hex::decode(text.trim()).map_err(|e| ProtocolError::Malformed(format!("sid: {e}")))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| ProtocolError::Malformed("sid must be 32 bytes".into()))?;
        Ok(SessionId(arr))
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// Per-instance variables of the security model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SessionRecord {
    pub pid: Vec<PartyId>,
    pub sid: Option<SessionId>,
    pub sk: Option<Element>,
    pub acc: bool,
    pub term: bool,
    pub used: bool,
}

impl SessionRecord {
    /// `acc` implies a key and termination.
    pub fn is_consistent(&self) -> bool {
        !self.acc || (self.sk.is_some() && self.term)
    }
}

/// Supplies the Round-1 pair keys `c_1..c_n`.
pub trait PairKeySource: fmt::Debug + Send + Sync {
    fn pair_keys(
        &self,
        platform: &Platform,
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Element>>;
}

/// Independent uniform elements of `H`, standing in for an out-of-band
/// two-party exchange.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPairKeys;

impl PairKeySource for UniformPairKeys {
    fn pair_keys(
        &self,
        platform: &Platform,
        n: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<Element>> {
        Ok((0..n).map(|_| platform.acting().sample(rng)).collect())
    }
}

/// Pre-shared keys, used verbatim.
#[derive(Debug, Clone)]
pub struct FixedPairKeys(pub Vec<Element>);

impl PairKeySource for FixedPairKeys {
    fn pair_keys(
        &self,
        platform: &Platform,
        n: usize,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<Element>> {
        if self.0.len() != n {
            return Err(ProtocolError::WrongCount {
                expected: n,
                found: self.0.len(),
            });
        }
        for c in &self.0 {
            platform.acting().check(c)?;
        }
        Ok(self.0.clone())
    }
}

/// Samples used by the action check when a session config is built.
pub const CONFIG_AXIOM_SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    n: usize,
    platform: Arc<Platform>,
    pair_keys: Arc<dyn PairKeySource>,
    seed: u64,
}

impl SessionConfig {
    /// Rejects `n < 3` and re-checks the action laws on a few sampled triples.
    pub fn new(
        n: usize,
        platform: Arc<Platform>,
        pair_keys: Arc<dyn PairKeySource>,
        seed: u64,
    ) -> Result<Self> {
        if n < 3 {
            return Err(ProtocolError::TooFewParties(n));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_a710);
        platform.check_action_axioms(&mut rng, 0, CONFIG_AXIOM_SAMPLES)?;
        Ok(SessionConfig {
            n,
            platform,
            pair_keys,
            seed,
        })
    }

    pub fn uniform(n: usize, platform: Arc<Platform>, seed: u64) -> Result<Self> {
        Self::new(n, platform, Arc::new(UniformPairKeys), seed)
    }

    /// Same configuration with a different seed and party count, skipping
    /// the axiom check already done.
    pub fn reseeded(&self, n: usize, seed: u64) -> Result<Self> {
        if n < 3 {
            return Err(ProtocolError::TooFewParties(n));
        }
        Ok(SessionConfig {
            n,
            seed,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pair_key_source(&self) -> &Arc<dyn PairKeySource> {
        &self.pair_keys
    }
}

/// Hidden values of a finished run, for white-box checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInternals {
    pub secrets: Vec<Element>,
    pub pair_keys: Vec<Element>,
    pub x: Vec<Element>,
    pub y: Vec<Element>,
    /// `ladders[i-1][k-1] = A_k^i`.
    pub ladders: Vec<Vec<Element>>,
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub transcript: Transcript,
    pub records: Vec<SessionRecord>,
    pub internals: SessionInternals,
}

impl SessionOutput {
    /// Every party accepted and all keys are byte-equal.
    pub fn keys_agree(&self) -> bool {
        let first = match self.records.first().and_then(|r| r.sk.as_ref()) {
            Some(k) => k,
            None => return false,
        };
        self.records
            .iter()
            .all(|r| r.acc && r.sk.as_ref() == Some(first))
    }

    pub fn key(&self) -> Option<&Element> {
        self.records.first().and_then(|r| r.sk.as_ref())
    }
}

/// Draws the pair keys and then `h_1..h_n` from the seeded stream and runs
/// every round.
pub fn run_session(config: &SessionConfig) -> Result<SessionOutput> {
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    run_session_with_rng(config, &mut rng)
}

pub fn run_session_with_rng(
    config: &SessionConfig,
    rng: &mut dyn RngCore,
) -> Result<SessionOutput> {
    let platform = &config.platform;
    let pair_keys = config.pair_keys.pair_keys(platform, config.n, rng)?;
    let secrets: Vec<Element> = (0..config.n)
        .map(|_| platform.acting().sample(rng))
        .collect();
    run_with_secrets(platform, &pair_keys, &secrets)
}

/// Runs the protocol with the given `c_1..c_n` and `h_1..h_n`.
pub fn run_with_secrets(
    platform: &Arc<Platform>,
    pair_keys: &[Element],
    secrets: &[Element],
) -> Result<SessionOutput> {
    let n = secrets.len();
    if n < 3 {
        return Err(ProtocolError::TooFewParties(n));
    }
    if pair_keys.len() != n {
        return Err(ProtocolError::WrongCount {
            expected: n,
            found: pair_keys.len(),
        });
    }
    let at = |i: i64| wrap(i, n) - 1;
    let pid: Vec<PartyId> = (1..=n as u32).map(PartyId).collect();
    let mut parties = Vec::with_capacity(n);
    for i in 1..=n {
        let record = SessionRecord {
            pid: pid.clone(),
            ..SessionRecord::default()
        };
        let mut party = PartyState::new(i, n, platform.clone(), record)?;
        party.set_pair_keys(
            pair_keys[at(i as i64 - 1)].clone(),
            pair_keys[i - 1].clone(),
        )?;
        party.set_secret(secrets[i - 1].clone())?;
        parties.push(party);
    }

    let v = parties
        .iter_mut()
        .map(|p| p.round2_message())
        .collect::<Result<Vec<_>>>()?;
    for (idx, party) in parties.iter_mut().enumerate() {
        let i = idx as i64 + 1;
        party.receive_round2(v[at(i - 1)].clone(), v[at(i + 1)].clone())?;
    }

    let w = parties
        .iter_mut()
        .map(|p| p.round3_message())
        .collect::<Result<Vec<_>>>()?;
    for (idx, party) in parties.iter_mut().enumerate() {
        party.receive_round3(w[at(idx as i64 + 2)].clone())?;
    }

    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut zs = Vec::with_capacity(n);
    for party in parties.iter_mut() {
        let (x, y, z) = party.round4_values()?;
        xs.push(x);
        ys.push(y);
        zs.push(z);
    }

    let transcript = Transcript::new(platform.tag().to_string(), v, w, zs.clone())?;
    let sid = transcript.sid();
    let mut ladders = Vec::with_capacity(n);
    for party in parties.iter_mut() {
        party.record_mut().sid = Some(sid);
        party.receive_broadcast(zs.clone())?;
        party.compute_key()?;
        ladders.push(party.ladder().map(<[Element]>::to_vec).unwrap_or_default());
    }

    Ok(SessionOutput {
        transcript,
        records: parties.iter().map(|p| p.record().clone()).collect(),
        internals: SessionInternals {
            secrets: secrets.to_vec(),
            pair_keys: pair_keys.to_vec(),
            x: xs,
            y: ys,
            ladders,
        },
    })
}

/// `Γ_{i,i-1} = φ(h_i ⊙ h_{i-1}, g)` for `i = 1..n`, with `Γ_{1,0} = Γ_{1,n}`.
pub fn link_values(platform: &Platform, secrets: &[Element]) -> Result<Vec<Element>> {
    let n = secrets.len();
    (1..=n)
        .map(|i| {
            let prev = &secrets[wrap(i as i64 - 1, n) - 1];
            Ok(platform.act_base(&platform.op(&secrets[i - 1], prev)?)?)
        })
        .collect()
}

/// Closed-form key `Γ_{1,n} · Γ_{2,1} · ... · Γ_{n,n-1}`, computed straight
/// from the secrets.
pub fn oracle_key(platform: &Platform, secrets: &[Element]) -> Result<Element> {
    if secrets.len() < 3 {
        return Err(ProtocolError::TooFewParties(secrets.len()));
    }
    let mut key = platform.target().identity();
    for link in link_values(platform, secrets)? {
        key = platform.mul(&key, &link)?;
    }
    Ok(key)
}
