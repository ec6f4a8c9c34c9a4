use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ProtocolError, Result, SessionId};
use crate::algebra::{Element, Platform, PlatformDescriptor};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

const SID_DOMAIN: &[u8] = b"bdga/sid/v1";

/// The public messages of one run: `v_1..v_n`, `w_1..w_n`, `Z_1..Z_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transcript {
    pub platform: String,
    pub v: Vec<Element>,
    pub w: Vec<Element>,
    pub z: Vec<Element>,
}

impl Transcript {
    pub fn new(
        platform: String,
        v: Vec<Element>,
        w: Vec<Element>,
        z: Vec<Element>,
    ) -> Result<Self> {
        let n = v.len();
        for list in [&w, &z] {
            if list.len() != n {
                return Err(ProtocolError::WrongCount {
                    expected: n,
                    found: list.len(),
                });
            }
        }
        Ok(Transcript { platform, v, w, z })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    /// All `3n` elements in order.
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.v.iter().chain(&self.w).chain(&self.z)
    }

    /// Canonical bytes: domain label, tag length and tag, `n`, then every
    /// element encoding in order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(SID_DOMAIN);
        out.extend_from_slice(&(self.platform.len() as u64).to_be_bytes());
        out.extend_from_slice(self.platform.as_bytes());
        out.extend_from_slice(&(self.n() as u64).to_be_bytes());
        for e in self.elements() {
            out.extend_from_slice(e.as_bytes());
        }
        out
    }

    pub fn sid(&self) -> SessionId {
        SessionId(Sha256::digest(self.to_bytes()).into())
    }

    /// `Z_1 · Z_2 · ... · Z_n = e`.
    pub fn telescopes(&self, platform: &Platform) -> Result<bool> {
        let mut acc = platform.target().identity();
        for z in &self.z {
            acc = platform.mul(&acc, z)?;
        }
        Ok(acc == platform.target().identity())
    }

    pub fn to_file(&self, meta: Option<ArtifactMeta>) -> TranscriptFile {
        let hexes = |list: &[Element]| list.iter().map(Element::to_hex).collect();
        TranscriptFile {
            platform: self.platform.clone(),
            n: self.n(),
            v: hexes(&self.v),
            w: hexes(&self.w),
            z: hexes(&self.z),
            sid: self.sid().to_hex(),
            meta,
        }
    }

    pub fn to_json(&self, meta: Option<ArtifactMeta>) -> String {
        serde_json::to_string_pretty(&self.to_file(meta)).expect("transcript serializes")
    }
}

/// Where an artifact came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub tool_version: String,
    pub platform: PlatformDescriptor,
    pub seed: u64,
}

impl ArtifactMeta {
    pub fn new(platform: &Platform, seed: u64) -> Self {
        ArtifactMeta {
            tool_version: TOOL_VERSION.to_string(),
            platform: platform.descriptor().clone(),
            seed,
        }
    }
}

/// On-disk transcript with hex-armored elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptFile {
    pub platform: String,
    pub n: usize,
    pub v: Vec<String>,
    pub w: Vec<String>,
    #[serde(rename = "Z")]
    pub z: Vec<String>,
    pub sid: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
}

impl TranscriptFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(format!("transcript: {e}")))
    }

    /// Decodes every element against `platform`'s target group and checks the
    /// counts and the platform tag. The stored `sid` is not checked here.
    pub fn decode(&self, platform: &Platform) -> Result<Transcript> {
        if self.platform != platform.tag() {
            return Err(ProtocolError::PlatformMismatch {
                expected: platform.tag().to_string(),
                found: self.platform.clone(),
            });
        }
        for list in [&self.v, &self.w, &self.z] {
            if list.len() != self.n {
                return Err(ProtocolError::WrongCount {
                    expected: self.n,
                    found: list.len(),
                });
            }
        }
        let decode = |list: &[String]| {
            list.iter()
                .map(|t| platform.target().decode_hex(t).map_err(ProtocolError::from))
                .collect::<Result<Vec<_>>>()
        };
        Transcript::new(
            self.platform.clone(),
            decode(&self.v)?,
            decode(&self.w)?,
            decode(&self.z)?,
        )
    }
}

/// On-disk shared key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeysFile {
    pub sid: String,
    pub sk: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ArtifactMeta>,
}

impl KeysFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ProtocolError::Malformed(format!("keys: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("keys serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::make_platform;
    use crate::protocol::{run_session, SessionConfig};
    use std::sync::Arc;

    fn session() -> (Arc<Platform>, Transcript) {
        let p = Arc::new(make_platform(&PlatformDescriptor::gl2_conjugation(3)).unwrap());
        let out = run_session(&SessionConfig::uniform(5, p.clone(), 9).unwrap()).unwrap();
        (p, out.transcript)
    }

    #[test]
    fn json_round_trip() {
        let (p, t) = session();
        let meta = ArtifactMeta::new(&p, 9);
        let text = t.to_json(Some(meta.clone()));
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["platform", "n", "v", "w", "Z", "sid", "meta"] {
            assert!(value.get(key).is_some(), "missing {key}");
        }
        let file = TranscriptFile::from_json(&text).unwrap();
        assert_eq!(file.meta, Some(meta));
        let back = file.decode(&p).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.sid().to_hex(), file.sid);
    }

    #[test]
    fn sid_depends_on_every_element() {
        let (p, t) = session();
        let sid = t.sid();
        for idx in 0..3 * t.n() {
            let mut u = t.clone();
            let slot = match idx / t.n() {
                0 => &mut u.v[idx % t.n()],
                1 => &mut u.w[idx % t.n()],
                _ => &mut u.z[idx % t.n()],
            };
            let replacement = if *slot == p.target().identity() {
                p.base().clone()
            } else {
                p.target().identity()
            };
            *slot = replacement;
            assert_ne!(u.sid(), sid);
        }
    }

    #[test]
    fn telescoping_detects_tampering() {
        let (p, t) = session();
        assert!(t.telescopes(&p).unwrap());
        let mut u = t.clone();
        u.z[2] = p.mul(&u.z[2], p.base()).unwrap();
        assert!(!u.telescopes(&p).unwrap());
    }

    #[test]
    fn decode_rejects_bad_files() {
        let (p, t) = session();
        let mut file = t.to_file(None);
        file.z.pop();
        assert!(matches!(
            file.decode(&p),
            Err(ProtocolError::WrongCount { .. })
        ));
        let mut file = t.to_file(None);
        file.v[0] = "zz".into();
        assert!(matches!(file.decode(&p), Err(ProtocolError::Algebra(_))));
        let mut file = t.to_file(None);
        file.platform = "other".into();
        assert!(matches!(
            file.decode(&p),
            Err(ProtocolError::PlatformMismatch { .. })
        ));
        assert!(TranscriptFile::from_json("{\"platform\":").is_err());
    }
}
