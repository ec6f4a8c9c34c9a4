use std::collections::HashSet;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{LabError, Result};
use crate::algebra::{Element, Platform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TupleKind {
    /// `z = y ⊙ x`, `r = x ⊙ y`.
    DhShaped,
    /// `z, r` uniform outside `y⊙x·H_g ∪ x⊙y·H_g`.
    RandomExcluded,
}

/// `(φ(x,g), φ(y,g), φ(z,g), φ(r,g))` together with the hidden `x, y, z, r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdhGaTuple {
    pub kind: TupleKind,
    pub x: Element,
    pub y: Element,
    pub z: Element,
    pub r: Element,
    pub t1: Element,
    pub t2: Element,
    pub t3: Element,
    pub t4: Element,
}

impl DdhGaTuple {
    pub fn from_parts(
        platform: &Platform,
        kind: TupleKind,
        x: Element,
        y: Element,
        z: Element,
        r: Element,
    ) -> Result<Self> {
        Ok(DdhGaTuple {
            kind,
            t1: platform.act_base(&x)?,
            t2: platform.act_base(&y)?,
            t3: platform.act_base(&z)?,
            t4: platform.act_base(&r)?,
            x,
            y,
            z,
            r,
        })
    }

    pub fn public(&self) -> [&Element; 4] {
        [&self.t1, &self.t2, &self.t3, &self.t4]
    }
}

/// `{ h ⊙ s : s ∈ stab }`.
pub fn coset(platform: &Platform, h: &Element, stab: &[Element]) -> Result<Vec<Element>> {
    stab.iter().map(|s| Ok(platform.op(h, s)?)).collect()
}

/// Caches the stabilizer `H_g` of the base element.
#[derive(Debug, Clone)]
pub struct DdhContext {
    platform: Arc<Platform>,
    stabilizer: Vec<Element>,
}

impl DdhContext {
    /// Needs an enumerable `H`. Fails when `2·|H_g| ≥ |H|`, since then the
    /// exclusion set may cover all of `H`.
    pub fn new(platform: Arc<Platform>) -> Result<Self> {
        let stabilizer = platform.stabilizer(platform.base())?;
        let acting = platform.acting().order();
        if 2 * stabilizer.len() as u64 >= acting {
            return Err(LabError::ExclusionEmpty {
                stabilizer: stabilizer.len() as u64,
                acting,
            });
        }
        Ok(DdhContext {
            platform,
            stabilizer,
        })
    }

    pub fn platform(&self) -> &Arc<Platform> {
        &self.platform
    }

    /// `H_g`.
    pub fn stabilizer(&self) -> &[Element] {
        &self.stabilizer
    }

    /// `|H_g| / |H|`.
    pub fn slack(&self) -> f64 {
        self.stabilizer.len() as f64 / self.platform.acting().order() as f64
    }

    pub fn sample(&self, kind: TupleKind, rng: &mut dyn RngCore) -> Result<DdhGaTuple> {
        let p = &self.platform;
        let x = p.acting().sample(rng);
        let y = p.acting().sample(rng);
        let yx = p.op(&y, &x)?;
        let xy = p.op(&x, &y)?;
        match kind {
            TupleKind::DhShaped => DdhGaTuple::from_parts(p, kind, x, y, yx, xy),
            TupleKind::RandomExcluded => {
                let excluded: HashSet<Element> = coset(p, &yx, &self.stabilizer)?
                    .into_iter()
                    .chain(coset(p, &xy, &self.stabilizer)?)
                    .collect();
                let mut draw = || loop {
                    let h = p.acting().sample(rng);
                    if !excluded.contains(&h) {
                        return h;
                    }
                };
                let z = draw();
                let r = draw();
                DdhGaTuple::from_parts(p, kind, x, y, z, r)
            }
        }
    }

    /// Tries every preimage pair of `(t1, t2)` and answers whether some pair
    /// explains `t3` and `t4`.
    pub fn brute_force_is_dh(&self, t: &DdhGaTuple) -> Result<bool> {
        let p = &self.platform;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for h in p.acting().elements()? {
            let image = p.act_base(&h)?;
            if image == t.t1 {
                xs.push(h.clone());
            }
            if image == t.t2 {
                ys.push(h);
            }
        }
        for x in &xs {
            for y in &ys {
                if p.act_base(&p.op(y, x)?)? == t.t3 && p.act_base(&p.op(x, y)?)? == t.t4 {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// The exclusion conditions, rechecked through the action:
    /// `φ(z,g) ∉ {φ(y⊙x,g), φ(x⊙y,g)}` and likewise for `r`.
    pub fn respects_exclusion(&self, t: &DdhGaTuple) -> Result<bool> {
        let p = &self.platform;
        let forbidden = [
            p.act_base(&p.op(&t.y, &t.x)?)?,
            p.act_base(&p.op(&t.x, &t.y)?)?,
        ];
        Ok(!forbidden.contains(&t.t3) && !forbidden.contains(&t.t4))
    }
}
