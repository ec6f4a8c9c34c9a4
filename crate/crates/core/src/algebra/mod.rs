//! Finite groups, finite group actions and the concrete platforms the key
//! exchange runs on.
//!
//! Every group element is carried as an [`Element`]: the canonical byte
//! encoding of the element plus the [`GroupId`] of the group that owns it.
//! Two elements are equal iff both the owner and the bytes match, so
//! equality, hashing and serialization all work on the encoding directly.
//!
//! Encodings:
//!
//! * permutations of `1..=m`: one byte per point, the one-line image list;
//! * 2x2 matrices over `Z_p`: four fixed-width big-endian entries, row-major;
//! * residues mod `p`: one fixed-width big-endian integer;
//! * pairs (direct products): the two encodings concatenated.

mod action;
mod derived;
mod descriptor;
mod matrix;
mod modp;
mod perm;

use std::fmt;

use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use action::{DoubleAction, Endomorphism, OrbitStabilizerReport, Platform, PlatformKind};
pub use derived::{GeneratedSubgroup, OppositeGroup, ProductGroup};
pub use descriptor::{
    make_platform, parse_family, EndomorphismSpec, GroupFamily, PlatformDescriptor, SubgroupSpec,
};
pub use matrix::GeneralLinear2;
pub use modp::{PowerSubgroup, UnitsMod};
pub use perm::{parse_cycles, SymmetricGroup};

/// Groups up to this order may be listed element by element.
pub const ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("foreign element: expected an element of {expected}, got one of group {found}")]
    ForeignElement { expected: String, found: GroupId },
    #[error("malformed encoding for {group}: {reason}")]
    Malformed { group: String, reason: String },
    #[error("enumeration cap exceeded: group order {order} > {cap}")]
    EnumerationCapExceeded { order: u64, cap: u64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{g} does not have order {claimed} modulo {p}")]
    WrongOrder { g: u64, p: u64, claimed: u64 },
    #[error("endomorphism table is not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("subgroup set is not closed under the group operation")]
    NotClosed,
    #[error("invalid platform parameters: {0}")]
    InvalidParams(String),
    #[error("action axiom violated: {0}")]
    AxiomViolation(String),
}

pub type Result<T, E = AlgebraError> = std::result::Result<T, E>;

/// Identifier of the group an element belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(u64);

impl GroupId {
    /// Stable identifier derived from the group's structural name.
    pub fn derive(name: &str) -> Self {
        let digest = Sha256::digest(name.as_bytes());
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        GroupId(u64::from_be_bytes(word))
    }
}

impl fmt::Debug for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupId({:016x})", self.0)
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// A group element in canonical encoding.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    group: GroupId,
    bytes: Box<[u8]>,
}

impl Element {
    pub(crate) fn new(group: GroupId, bytes: impl Into<Box<[u8]>>) -> Self {
        Element {
            group,
            bytes: bytes.into(),
        }
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }

    /// Same bytes, owned by another group. Only valid between groups that
    /// share an encoding (a subgroup and its parent, a group and its opposite).
    pub(crate) fn retag(&self, group: GroupId) -> Element {
        Element {
            group,
            bytes: self.bytes.clone(),
        }
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Element({}:{})", self.group, self.to_hex())
    }
}

/// A finite group with canonical element encodings.
///
/// `element_at` fixes an enumeration order; uniform sampling draws an index
/// and looks it up, so a seeded RNG always yields the same element.
pub trait FiniteGroup: fmt::Debug + Send + Sync {
    fn id(&self) -> GroupId;
    fn name(&self) -> &str;
    fn order(&self) -> u64;
    /// Width in bytes of every element encoding.
    fn encoded_len(&self) -> usize;
    fn identity(&self) -> Element;
    fn compose(&self, a: &Element, b: &Element) -> Result<Element>;
    fn invert(&self, a: &Element) -> Result<Element>;
    /// The `index`-th element, `index < order()`.
    fn element_at(&self, index: u64) -> Element;
    /// Parse and validate an encoding.
    fn decode(&self, bytes: &[u8]) -> Result<Element>;
    /// Human-readable rendering.
    fn render(&self, e: &Element) -> String {
        e.to_hex()
    }

    fn check(&self, e: &Element) -> Result<()> {
        if e.group() == self.id() {
            Ok(())
        } else {
            Err(AlgebraError::ForeignElement {
                expected: self.name().to_string(),
                found: e.group(),
            })
        }
    }

    fn is_enumerable(&self) -> bool {
        self.order() <= ENUMERATION_CAP
    }

    fn elements(&self) -> Result<Vec<Element>> {
        if !self.is_enumerable() {
            return Err(AlgebraError::EnumerationCapExceeded {
                order: self.order(),
                cap: ENUMERATION_CAP,
            });
        }
        Ok((0..self.order()).map(|i| self.element_at(i)).collect())
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Element {
        self.element_at(rng.gen_range(0..self.order()))
    }

    fn decode_hex(&self, text: &str) -> Result<Element> {
        let bytes = hex::decode(text.trim()).map_err(|e| AlgebraError::Malformed {
            group: self.name().to_string(),
            reason: format!("bad hex: {e}"),
        })?;
        self.decode(&bytes)
    }
}

/// Checks associativity, identity and inverses. Exhaustive over all triples
/// when `|G|^3 <= exhaustive_limit`, otherwise on `samples` random triples.
pub fn check_group_axioms(
    group: &dyn FiniteGroup,
    rng: &mut dyn RngCore,
    exhaustive_limit: u64,
    samples: usize,
) -> Result<()> {
    let e = group.identity();
    let check_triple = |a: &Element, b: &Element, c: &Element| -> Result<()> {
        let left = group.compose(&group.compose(a, b)?, c)?;
        let right = group.compose(a, &group.compose(b, c)?)?;
        if left != right {
            return Err(AlgebraError::AxiomViolation(format!(
                "associativity fails in {}",
                group.name()
            )));
        }
        if group.compose(&e, a)? != *a || group.compose(a, &e)? != *a {
            return Err(AlgebraError::AxiomViolation(format!(
                "identity fails in {}",
                group.name()
            )));
        }
        if group.compose(a, &group.invert(a)?)? != e {
            return Err(AlgebraError::AxiomViolation(format!(
                "inverse fails in {}",
                group.name()
            )));
        }
        Ok(())
    };
    let order = group.order();
    if order
        .checked_pow(3)
        .is_some_and(|cube| cube <= exhaustive_limit)
    {
        let all = group.elements()?;
        for a in &all {
            for b in &all {
                for c in &all {
                    check_triple(a, b, c)?;
                }
            }
        }
    } else {
        for _ in 0..samples {
            let (a, b, c) = (group.sample(rng), group.sample(rng), group.sample(rng));
            check_triple(&a, &b, &c)?;
        }
    }
    Ok(())
}

/// True iff `set` contains the identity and is closed under composition and
/// inversion.
pub fn is_subgroup(group: &dyn FiniteGroup, set: &[Element]) -> Result<bool> {
    use std::collections::HashSet;
    let members: HashSet<&Element> = set.iter().collect();
    if !members.contains(&group.identity()) {
        return Ok(false);
    }
    for a in set {
        if !members.contains(&group.invert(a)?) {
            return Ok(false);
        }
        for b in set {
            if !members.contains(&group.compose(a, b)?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Fixed-width big-endian encoding helpers shared by the residue-based groups.
pub(crate) fn width_for(modulus: u64) -> usize {
    let bits = 64 - (modulus.saturating_sub(1)).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

pub(crate) fn encode_uint(value: u64, width: usize) -> Vec<u8> {
    value.to_be_bytes()[8 - width..].to_vec()
}

pub(crate) fn decode_uint(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0u64, |acc, &b| (acc << 8) | u64::from(b))
}
