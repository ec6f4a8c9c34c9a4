use std::sync::Arc;

use super::{sigma_pow, wrap, ProtocolError, SessionRecord};
use crate::algebra::{Element, Platform};

/// One party's view of a protocol run.
///
/// Every field is written at most once and only after the fields of earlier
/// rounds are present. Indices are 1-based: party `i` shares `c_{i-1}` with
/// its predecessor and `c_i` with its successor.
#[derive(Debug, Clone)]
pub struct PartyState {
    index: usize,
    n: usize,
    platform: Arc<Platform>,
    secret: Option<Element>,
    pair_prev: Option<Element>,
    pair_next: Option<Element>,
    v_own: Option<Element>,
    v_prev: Option<Element>,
    v_next: Option<Element>,
    w_own: Option<Element>,
    w_next: Option<Element>,
    x: Option<Element>,
    y: Option<Element>,
    z_own: Option<Element>,
    broadcast: Option<Vec<Element>>,
    ladder: Option<Vec<Element>>,
    record: SessionRecord,
}

fn set_once(
    slot: &mut Option<Element>,
    value: Element,
    party: usize,
    what: &'static str,
) -> Result<(), ProtocolError> {
    if slot.is_some() {
        return Err(ProtocolError::AlreadySet { party, what });
    }
    *slot = Some(value);
    Ok(())
}

impl PartyState {
    pub fn new(
        index: usize,
        n: usize,
        platform: Arc<Platform>,
        record: SessionRecord,
    ) -> Result<Self, ProtocolError> {
        if n < 3 {
            return Err(ProtocolError::TooFewParties(n));
        }
        if index == 0 || index > n {
            return Err(ProtocolError::IndexOutOfRange { k: index, n });
        }
        Ok(PartyState {
            index,
            n,
            platform,
            secret: None,
            pair_prev: None,
            pair_next: None,
            v_own: None,
            v_prev: None,
            v_next: None,
            w_own: None,
            w_next: None,
            x: None,
            y: None,
            z_own: None,
            broadcast: None,
            ladder: None,
            record,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    fn need<'a>(
        &self,
        slot: &'a Option<Element>,
        what: &'static str,
    ) -> Result<&'a Element, ProtocolError> {
        slot.as_ref().ok_or(ProtocolError::Missing {
            party: self.index,
            what,
        })
    }

    /// Round 1 output: `c_{i-1}` (shared with the predecessor) and `c_i`
    /// (shared with the successor).
    pub fn set_pair_keys(&mut self, prev: Element, next: Element) -> Result<(), ProtocolError> {
        self.platform.acting().check(&prev)?;
        self.platform.acting().check(&next)?;
        set_once(&mut self.pair_prev, prev, self.index, "pair key c_{i-1}")?;
        set_once(&mut self.pair_next, next, self.index, "pair key c_i")
    }

    pub fn set_secret(&mut self, secret: Element) -> Result<(), ProtocolError> {
        self.platform.acting().check(&secret)?;
        set_once(&mut self.secret, secret, self.index, "secret h_i")?;
        self.record.used = true;
        Ok(())
    }

    /// Round 2: `v_i = φ(h_i, g)`, sent to both neighbours.
    pub fn round2_message(&mut self) -> Result<Element, ProtocolError> {
        let h = self.need(&self.secret, "secret h_i")?;
        let v = self.platform.act_base(h)?;
        set_once(&mut self.v_own, v.clone(), self.index, "v_i")?;
        Ok(v)
    }

    pub fn receive_round2(
        &mut self,
        v_prev: Element,
        v_next: Element,
    ) -> Result<(), ProtocolError> {
        self.need(&self.v_own, "v_i")?;
        self.platform.target().check(&v_prev)?;
        self.platform.target().check(&v_next)?;
        set_once(&mut self.v_prev, v_prev, self.index, "v_{i-1}")?;
        set_once(&mut self.v_next, v_next, self.index, "v_{i+1}")
    }

    /// Round 3: `w_i = φ(c_{i-1} ⊙ h_i, v_{i-1})`, sent to the predecessor.
    pub fn round3_message(&mut self) -> Result<Element, ProtocolError> {
        let c = self.need(&self.pair_prev, "pair key c_{i-1}")?;
        let h = self.need(&self.secret, "secret h_i")?;
        let v_prev = self.need(&self.v_prev, "v_{i-1}")?;
        let w = self.platform.act(&self.platform.op(c, h)?, v_prev)?;
        set_once(&mut self.w_own, w.clone(), self.index, "w_i")?;
        Ok(w)
    }

    pub fn receive_round3(&mut self, w_next: Element) -> Result<(), ProtocolError> {
        self.need(&self.w_own, "w_i")?;
        self.platform.target().check(&w_next)?;
        set_once(&mut self.w_next, w_next, self.index, "w_{i+1}")
    }

    /// Round 4: `X_i = φ(h_i, v_{i-1})`, `Y_i = φ(c_i^-1, w_{i+1})` and the
    /// broadcast `Z_i = X_i^-1 · Y_i`.
    pub fn round4_values(&mut self) -> Result<(Element, Element, Element), ProtocolError> {
        let h = self.need(&self.secret, "secret h_i")?;
        let v_prev = self.need(&self.v_prev, "v_{i-1}")?;
        let c = self.need(&self.pair_next, "pair key c_i")?;
        let w_next = self.need(&self.w_next, "w_{i+1}")?;
        let platform = &self.platform;
        let x = platform.act(h, v_prev)?;
        let y = platform.act(&platform.acting().invert(c)?, w_next)?;
        let z = platform.mul(&platform.target().invert(&x)?, &y)?;
        let index = self.index;
        set_once(&mut self.x, x.clone(), index, "X_i")?;
        set_once(&mut self.y, y.clone(), index, "Y_i")?;
        set_once(&mut self.z_own, z.clone(), index, "Z_i")?;
        Ok((x, y, z))
    }

    /// All broadcast `Z_1..Z_n`, in party order. Fewer than `n` values are
    /// accepted here and surface as a failed key computation.
    pub fn receive_broadcast(&mut self, zs: Vec<Element>) -> Result<(), ProtocolError> {
        self.need(&self.z_own, "Z_i")?;
        if self.broadcast.is_some() {
            return Err(ProtocolError::AlreadySet {
                party: self.index,
                what: "broadcast Z values",
            });
        }
        for z in &zs {
            self.platform.target().check(z)?;
        }
        self.broadcast = Some(zs);
        Ok(())
    }

    /// `K_i = A_{σ^{i-1}(1)} · ... · A_{σ^{i-1}(n)}` where `A_1 = X_i` and
    /// `A_{k+1} = A_k · Z_{i+k-1}`.
    ///
    /// On success the record is accepted and terminated. Missing inputs leave
    /// `acc = false` and `sk` unset.
    pub fn compute_key(&mut self) -> Result<Element, ProtocolError> {
        if self.record.acc {
            return Err(ProtocolError::AlreadySet {
                party: self.index,
                what: "session key",
            });
        }
        let result = self.key_from_ladder();
        self.record.term = true;
        match result {
            Ok((key, ladder)) => {
                self.ladder = Some(ladder);
                self.record.sk = Some(key.clone());
                self.record.acc = true;
                Ok(key)
            }
            Err(e) => {
                self.record.sk = None;
                self.record.acc = false;
                Err(e)
            }
        }
    }

    fn key_from_ladder(&self) -> Result<(Element, Vec<Element>), ProtocolError> {
        let (n, i) = (self.n, self.index);
        let x = self.need(&self.x, "X_i")?;
        let zs = self.broadcast.as_ref().ok_or(ProtocolError::Missing {
            party: i,
            what: "broadcast Z values",
        })?;
        if zs.len() != n {
            return Err(ProtocolError::Missing {
                party: i,
                what: "broadcast Z values",
            });
        }
        let platform = &self.platform;
        let mut ladder = Vec::with_capacity(n);
        ladder.push(x.clone());
        for k in 1..n {
            let z = &zs[wrap((i + k) as i64 - 1, n) - 1];
            let next = platform.mul(&ladder[k - 1], z)?;
            ladder.push(next);
        }
        let mut key = platform.target().identity();
        for k in 1..=n {
            let slot = sigma_pow(n, i - 1, k)?;
            key = platform.mul(&key, &ladder[slot - 1])?;
        }
        Ok((key, ladder))
    }

    pub fn record(&self) -> &SessionRecord {
        &self.record
    }

    pub(crate) fn record_mut(&mut self) -> &mut SessionRecord {
        &mut self.record
    }

    pub fn secret(&self) -> Option<&Element> {
        self.secret.as_ref()
    }

    pub fn x(&self) -> Option<&Element> {
        self.x.as_ref()
    }

    pub fn y(&self) -> Option<&Element> {
        self.y.as_ref()
    }

    /// `A_1..A_n` once the key has been computed.
    pub fn ladder(&self) -> Option<&[Element]> {
        self.ladder.as_deref()
    }
}
