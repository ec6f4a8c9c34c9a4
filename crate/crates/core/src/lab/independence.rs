//! Exact check of whether the key of the all-uniform-links distribution is
//! independent of its transcript.
//!
//! With every link uniform and independent of the secrets, `v` carries no
//! information about the key. Given `Z`, the links are fixed by `Γ_{1,n}`.
//! Each `w_i` is uniform over the orbit of its link, so conditioning on `w`
//! amounts to conditioning on the vector of orbit classes of the links. A
//! cell is therefore `(Z, orbit classes)`, and within a cell every link
//! vector is equally likely.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{LabError, Result};
use crate::algebra::{Element, Platform};

/// Enumeration budget in link vectors.
const MAX_VECTORS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub n: usize,
    pub group_order: u64,
    pub vectors: u64,
    /// Conditioning on the full public view `(Z, w)`.
    pub cells: u64,
    pub uniform_cells: u64,
    pub uniform_fraction: f64,
    pub max_tv: f64,
    /// `E_T[ TV(sk | T, uniform) ]`, the best advantage any distinguisher
    /// can reach from one transcript and its Test value.
    pub bayes_advantage: f64,
    /// Conditioning on `Z` alone.
    pub z_only_cells: u64,
    pub z_only_uniform_cells: u64,
    pub z_only_max_tv: f64,
    pub z_only_weighted_tv: f64,
    /// True iff the key is exactly uniform in every cell.
    pub exact: bool,
}

struct Tables {
    order: usize,
    mul: Vec<u16>,
    inv: Vec<u16>,
    orbit: Vec<u16>,
}

impl Tables {
    fn new(platform: &Platform) -> Result<Self> {
        let g = platform.target();
        let elements = g.elements()?;
        let order = elements.len();
        if order > u16::MAX as usize {
            return Err(LabError::Infeasible(format!(
                "|G| = {order} is too large for index tables"
            )));
        }
        let index: HashMap<&Element, u16> = elements
            .iter()
            .enumerate()
            .map(|(i, e)| (e, i as u16))
            .collect();
        let mut mul = vec![0u16; order * order];
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                mul[i * order + j] = index[&platform.mul(a, b)?];
            }
        }
        let inv = elements
            .iter()
            .map(|a| Ok(index[&g.invert(a)?]))
            .collect::<Result<Vec<_>>>()?;
        let mut orbit = vec![u16::MAX; order];
        let mut class = 0u16;
        for (i, e) in elements.iter().enumerate() {
            if orbit[i] != u16::MAX {
                continue;
            }
            for o in platform.orbit(e)? {
                orbit[index[&o] as usize] = class;
            }
            class += 1;
        }
        Ok(Tables {
            order,
            mul,
            inv,
            orbit,
        })
    }

    fn mul(&self, a: u16, b: u16) -> u16 {
        self.mul[a as usize * self.order + b as usize]
    }
}

fn tv_from_uniform(counts: &BTreeMap<u16, u64>, total: u64, order: usize) -> f64 {
    let u = 1.0 / order as f64;
    let seen: f64 = counts
        .values()
        .map(|&c| (c as f64 / total as f64 - u).abs())
        .sum();
    let unseen = (order - counts.len()) as f64 * u;
    0.5 * (seen + unseen)
}

struct Summary {
    cells: u64,
    uniform: u64,
    max_tv: f64,
    weighted_tv: f64,
}

fn summarize(
    cells: &BTreeMap<Vec<u16>, BTreeMap<u16, u64>>,
    vectors: u64,
    order: usize,
) -> Summary {
    let mut s = Summary {
        cells: cells.len() as u64,
        uniform: 0,
        max_tv: 0.0,
        weighted_tv: 0.0,
    };
    for counts in cells.values() {
        let total: u64 = counts.values().sum();
        let exact = counts.len() == order && counts.values().all(|&c| c * order as u64 == total);
        if exact {
            s.uniform += 1;
            continue;
        }
        let tv = tv_from_uniform(counts, total, order);
        s.max_tv = s.max_tv.max(tv);
        s.weighted_tv += tv * total as f64 / vectors as f64;
    }
    s
}

/// Enumerates all `|G|^n` link vectors.
pub fn fake_key_independence(platform: &Arc<Platform>, n: usize) -> Result<IndependenceReport> {
    if n < 3 {
        return Err(crate::protocol::ProtocolError::TooFewParties(n).into());
    }
    let t = Tables::new(platform)?;
    let order = t.order as u64;
    let vectors = order
        .checked_pow(n as u32)
        .filter(|&v| v <= MAX_VECTORS)
        .ok_or_else(|| {
            LabError::Infeasible(format!("|G|^n = {order}^{n} exceeds {MAX_VECTORS}"))
        })?;

    // ordered maps keep the floating-point sums reproducible
    let mut full: BTreeMap<Vec<u16>, BTreeMap<u16, u64>> = BTreeMap::new();
    let mut z_only: BTreeMap<Vec<u16>, BTreeMap<u16, u64>> = BTreeMap::new();
    let mut links = vec![0u16; n];
    loop {
        let mut zs = Vec::with_capacity(n - 1);
        let mut key = links[0];
        for i in 1..n {
            zs.push(t.mul(t.inv[links[i - 1] as usize], links[i]));
            key = t.mul(key, links[i]);
        }
        let mut cell = zs.clone();
        cell.extend(links.iter().map(|&l| t.orbit[l as usize]));
        *full.entry(cell).or_default().entry(key).or_insert(0) += 1;
        *z_only.entry(zs).or_default().entry(key).or_insert(0) += 1;

        let mut pos = 0;
        loop {
            if pos == n {
                let a = summarize(&full, vectors, t.order);
                let b = summarize(&z_only, vectors, t.order);
                return Ok(IndependenceReport {
                    n,
                    group_order: order,
                    vectors,
                    cells: a.cells,
                    uniform_cells: a.uniform,
                    uniform_fraction: a.uniform as f64 / a.cells as f64,
                    max_tv: a.max_tv,
                    bayes_advantage: a.weighted_tv,
                    z_only_cells: b.cells,
                    z_only_uniform_cells: b.uniform,
                    z_only_max_tv: b.max_tv,
                    z_only_weighted_tv: b.weighted_tv,
                    exact: a.uniform == a.cells,
                });
            }
            links[pos] += 1;
            if (links[pos] as u64) < order {
                break;
            }
            links[pos] = 0;
            pos += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_platform, PlatformDescriptor};

    #[test]
    fn commutative_z_only_view_is_uniform() {
        let p = Arc::new(make_platform(&PlatformDescriptor::bd_modp(23, 2, 11)).unwrap());
        let r = fake_key_independence(&p, 3).unwrap();
        assert_eq!(r.vectors, 11u64.pow(3));
        // sk = Γ^3 · Z-terms and cubing is a bijection on a group of order 11
        assert_eq!(r.z_only_cells, 121);
        assert_eq!(r.z_only_uniform_cells, 121);
        assert_eq!(r.z_only_weighted_tv, 0.0);
        // the orbit of the identity is a singleton, so w can pin it
        assert!(!r.exact);
    }

    #[test]
    fn symmetric_group_leaks_through_z() {
        let p = Arc::new(make_platform(&PlatformDescriptor::symmetric_conjugation(3)).unwrap());
        let r = fake_key_independence(&p, 3).unwrap();
        assert!(!r.exact);
        assert!(r.bayes_advantage > 0.0);
        assert!(r.max_tv <= 1.0);
        assert!(r.bayes_advantage <= r.max_tv);
        assert_eq!(r.group_order, p.target().order());
    }

    #[test]
    fn tv_of_point_mass() {
        let counts: BTreeMap<u16, u64> = [(0, 5)].into_iter().collect();
        assert!((tv_from_uniform(&counts, 5, 4) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn budget() {
        let p = Arc::new(make_platform(&PlatformDescriptor::symmetric_conjugation(4)).unwrap());
        assert!(matches!(
            fake_key_independence(&p, 8),
            Err(LabError::Infeasible(_))
        ));
        assert!(fake_key_independence(&p, 2).is_err());
    }
}
