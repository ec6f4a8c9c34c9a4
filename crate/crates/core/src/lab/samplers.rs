use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{assemble, DdhGaTuple, DistributionSample, LabError, Result, SampleInternals};
use crate::algebra::{Element, Platform};
use crate::protocol::{link_values, wrap, PairKeySource};

/// `n = 3s + 5`, `s ≥ 1`.
pub fn regime_n(s: usize) -> Result<usize> {
    if s == 0 {
        return Err(LabError::Regime("s = 0".into()));
    }
    Ok(3 * s + 5)
}

/// Inverse of [`regime_n`].
pub fn regime_s(n: usize) -> Result<usize> {
    if n >= 8 && (n - 5) % 3 == 0 {
        Ok((n - 5) / 3)
    } else {
        Err(LabError::Regime(format!("n = {n}")))
    }
}

/// Closing link `Γ_{1,n}` of the Dist′ sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistPrimeClosing {
    /// `φ(y⊙β_0, v_n) = φ(h_1 ⊙ h_n, g)`, matching the real protocol.
    #[default]
    Corrected,
    /// `φ(h_s, v_1) = φ(h_n ⊙ h_1, g)`. Differs from the real protocol
    /// whenever `h_1` and `h_n` do not commute.
    AsPrinted,
}

/// Closing link `Γ_{1,n}` of the Dist sampler: `φ(γ_s ⊙ t ⊙ β_0, g)` with
/// `t` one of the tuple entries, or the honest `φ(h_1 ⊙ h_n, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistClosing {
    #[default]
    R,
    Z,
    Honest,
}

impl DistClosing {
    pub fn as_str(self) -> &'static str {
        match self {
            DistClosing::R => "r",
            DistClosing::Z => "z",
            DistClosing::Honest => "honest",
        }
    }
}

fn draw(platform: &Platform, rng: &mut dyn RngCore) -> Element {
    platform.acting().sample(rng)
}

fn finish(
    platform: &Platform,
    secrets: Vec<Element>,
    links: Vec<Element>,
    pair_keys: Vec<Element>,
    uniform_links: Vec<usize>,
    aux: BTreeMap<String, Element>,
) -> Result<DistributionSample> {
    let (transcript, sk) = assemble(platform, &secrets, &links, &pair_keys)?;
    Ok(DistributionSample {
        transcript,
        sk,
        internals: SampleInternals {
            secrets,
            pair_keys,
            links,
            uniform_links,
            aux,
        },
    })
}

/// Honest run: pair keys, then `h_1..h_n`, drawn in the same order as the
/// session runner so equal RNG states give equal transcripts.
pub fn sample_real(
    platform: &Platform,
    pair_keys: &dyn PairKeySource,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<DistributionSample> {
    if n < 3 {
        return Err(crate::protocol::ProtocolError::TooFewParties(n).into());
    }
    let c = pair_keys.pair_keys(platform, n, rng)?;
    let h: Vec<Element> = (0..n).map(|_| draw(platform, rng)).collect();
    let links = link_values(platform, &h)?;
    finish(platform, h, links, c, Vec::new(), BTreeMap::new())
}

/// 1-based link indices replaced by uniform elements in the Fake′ hybrid:
/// `Γ_{2,1}, Γ_{3,2}, Γ_{4,3}` and `Γ_{j+1,j}` for `j = 3i + 3`.
pub fn fake_prime_uniform_links(s: usize) -> Vec<usize> {
    let mut out = vec![2, 3, 4];
    out.extend((1..=s).map(|i| 3 * i + 4));
    out
}

/// Honest secrets, with the links of [`fake_prime_uniform_links`] redrawn
/// uniformly from `G`.
pub fn sample_fake_prime(
    platform: &Platform,
    pair_keys: &dyn PairKeySource,
    s: usize,
    rng: &mut dyn RngCore,
) -> Result<DistributionSample> {
    let n = regime_n(s)?;
    let c = pair_keys.pair_keys(platform, n, rng)?;
    let h: Vec<Element> = (0..n).map(|_| draw(platform, rng)).collect();
    let mut links = link_values(platform, &h)?;
    let uniform = fake_prime_uniform_links(s);
    for &i in &uniform {
        links[i - 1] = platform.target().sample(rng);
    }
    finish(platform, h, links, c, uniform, BTreeMap::new())
}

/// Honest secrets, every link uniform in `G`.
pub fn sample_fake(
    platform: &Platform,
    pair_keys: &dyn PairKeySource,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<DistributionSample> {
    if n < 3 {
        return Err(crate::protocol::ProtocolError::TooFewParties(n).into());
    }
    let c = pair_keys.pair_keys(platform, n, rng)?;
    let h: Vec<Element> = (0..n).map(|_| draw(platform, rng)).collect();
    let mut links = vec![platform.target().identity(); n];
    // Γ_{2,1}, ..., Γ_{n,n-1}, then Γ_{1,n}
    for i in (2..=n).chain(std::iter::once(1)) {
        links[i - 1] = platform.target().sample(rng);
    }
    finish(platform, h, links, c, (1..=n).collect(), BTreeMap::new())
}

fn tuple_aux(t: &DdhGaTuple) -> BTreeMap<String, Element> {
    [("x", &t.x), ("y", &t.y), ("z", &t.z), ("r", &t.r)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

/// Embeds `(x, y, z, r)` into a run with `n = 3s + 5` parties. With a
/// Diffie–Hellman tuple and the corrected closing link the output is
/// distributed exactly as [`sample_real`].
///
/// Implied secrets: `h_1 = y⊙β_0`, `h_2 = x`, `h_3 = y`, `h_4 = β'_0⊙x`,
/// `h_5 = h_0` and, for `j = 3i + 3`, `h_j = x⊙γ_i`, `h_{j+1} = β_i⊙y`,
/// `h_{j+2} = h_i`.
pub fn sample_dist_prime(
    platform: &Platform,
    pair_keys: &dyn PairKeySource,
    s: usize,
    tuple: &DdhGaTuple,
    closing: DistPrimeClosing,
    rng: &mut dyn RngCore,
) -> Result<DistributionSample> {
    let n = regime_n(s)?;
    let p = platform;
    let c = pair_keys.pair_keys(p, n, rng)?;
    let beta0 = draw(p, rng);
    let beta0p = draw(p, rng);
    let h0 = draw(p, rng);
    let mut beta = Vec::with_capacity(s);
    let mut gamma = Vec::with_capacity(s);
    let mut aux_h = vec![h0.clone()];
    for _ in 1..=s {
        beta.push(draw(p, rng));
        gamma.push(draw(p, rng));
        aux_h.push(draw(p, rng));
    }
    let (x, y, z, r) = (&tuple.x, &tuple.y, &tuple.z, &tuple.r);

    let mut h = vec![p.acting().identity(); n];
    h[0] = p.op(y, &beta0)?;
    h[1] = x.clone();
    h[2] = y.clone();
    h[3] = p.op(&beta0p, x)?;
    h[4] = h0.clone();
    for i in 1..=s {
        let j = 3 * i + 3;
        h[j - 1] = p.op(x, &gamma[i - 1])?;
        h[j] = p.op(&beta[i - 1], y)?;
        h[j + 1] = aux_h[i].clone();
    }
    let v = |k: usize| p.act_base(&h[k - 1]);

    let mut links = vec![p.target().identity(); n];
    links[1] = p.act_base(&p.op(r, &beta0)?)?;
    links[2] = p.act_base(z)?;
    links[3] = p.act_base(&p.op(&beta0p, r)?)?;
    links[4] = p.act(&h0, &v(4)?)?;
    for i in 1..=s {
        let j = 3 * i + 3;
        let (b, g) = (&beta[i - 1], &gamma[i - 1]);
        links[j - 1] = p.act_base(&p.op(&p.op(x, g)?, &aux_h[i - 1])?)?;
        links[j] = p.act_base(&p.op(&p.op(b, z)?, g)?)?;
        links[j + 1] = p.act(&aux_h[i], &v(j + 1)?)?;
    }
    links[0] = match closing {
        DistPrimeClosing::Corrected => p.act(&p.op(y, &beta0)?, &v(n)?)?,
        DistPrimeClosing::AsPrinted => p.act(&aux_h[s], &v(1)?)?,
    };

    let mut aux = tuple_aux(tuple);
    aux.insert("beta_0".into(), beta0);
    aux.insert("beta'_0".into(), beta0p);
    for (i, hi) in aux_h.iter().enumerate() {
        aux.insert(format!("h_{i}"), hi.clone());
    }
    for i in 1..=s {
        aux.insert(format!("beta_{i}"), beta[i - 1].clone());
        aux.insert(format!("gamma_{i}"), gamma[i - 1].clone());
    }
    finish(p, h, links, c, Vec::new(), aux)
}

/// Embeds `(x, y, z, r)` into a run with `n = 3s + 5` parties whose links
/// `Γ_{2,1}, Γ_{3,2}, Γ_{4,3}` and `Γ_{j+1,j}` (`j = 3i + 3`) are uniform.
///
/// Implied secrets: `h_1 = y⊙β_0`, `h_2, h_3` fresh, `h_4 = y⊙β'_0`,
/// `h_5 = γ_0⊙x` and, for `j = 3i + 3`, `h_j = β_i⊙y⊙γ_{i-1}^-1`,
/// `h_{j+1} = y⊙β'_i`, `h_{j+2} = γ_i⊙x`.
pub fn sample_dist(
    platform: &Platform,
    pair_keys: &dyn PairKeySource,
    s: usize,
    tuple: &DdhGaTuple,
    closing: DistClosing,
    rng: &mut dyn RngCore,
) -> Result<DistributionSample> {
    let n = regime_n(s)?;
    let p = platform;
    let c = pair_keys.pair_keys(p, n, rng)?;
    let h1 = draw(p, rng);
    let h2 = draw(p, rng);
    let mut beta = Vec::with_capacity(s + 1);
    let mut betap = Vec::with_capacity(s + 1);
    let mut gamma = Vec::with_capacity(s + 1);
    for _ in 0..=s {
        beta.push(draw(p, rng));
        betap.push(draw(p, rng));
        gamma.push(draw(p, rng));
    }
    let (x, y, z, r) = (&tuple.x, &tuple.y, &tuple.z, &tuple.r);

    let mut h = vec![p.acting().identity(); n];
    h[0] = p.op(y, &beta[0])?;
    h[1] = h1.clone();
    h[2] = h2.clone();
    h[3] = p.op(y, &betap[0])?;
    h[4] = p.op(&gamma[0], x)?;
    for i in 1..=s {
        let j = 3 * i + 3;
        h[j - 1] = p.op(&p.op(&beta[i], y)?, &p.acting().invert(&gamma[i - 1])?)?;
        h[j] = p.op(y, &betap[i])?;
        h[j + 1] = p.op(&gamma[i], x)?;
    }

    let mut links = vec![p.target().identity(); n];
    let uniform = super::samplers::fake_prime_uniform_links(s);
    for &i in &uniform[..3] {
        links[i - 1] = p.target().sample(rng);
    }
    links[4] = p.act_base(&p.op(&p.op(&gamma[0], r)?, &betap[0])?)?;
    for i in 1..=s {
        let j = 3 * i + 3;
        links[j - 1] = p.act_base(&p.op(&beta[i], z)?)?;
        links[j] = p.target().sample(rng);
        links[j + 1] = p.act_base(&p.op(&p.op(&gamma[i], r)?, &betap[i])?)?;
    }
    links[0] = match closing {
        DistClosing::R => p.act_base(&p.op(&p.op(&gamma[s], r)?, &beta[0])?)?,
        DistClosing::Z => p.act_base(&p.op(&p.op(&gamma[s], z)?, &beta[0])?)?,
        DistClosing::Honest => p.act_base(&p.op(&h[0], &h[n - 1])?)?,
    };

    let mut aux = tuple_aux(tuple);
    aux.insert("h_1".into(), h1);
    aux.insert("h_2".into(), h2);
    for i in 0..=s {
        aux.insert(format!("beta_{i}"), beta[i].clone());
        aux.insert(format!("beta'_{i}"), betap[i].clone());
        aux.insert(format!("gamma_{i}"), gamma[i].clone());
    }
    finish(p, h, links, c, uniform, aux)
}

/// `Γ_{i,i-1}` for 1-based `i`, with `Γ_{1,0} = Γ_{1,n}`.
pub fn link(sample: &DistributionSample, i: usize) -> &Element {
    let n = sample.n();
    &sample.internals.links[wrap(i as i64, n) - 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_platform, PlatformDescriptor};
    use crate::lab::{DdhContext, TupleKind};
    use crate::protocol::{oracle_key, run_session_with_rng, SessionConfig, UniformPairKeys};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::Arc;

    fn s4() -> Arc<Platform> {
        Arc::new(make_platform(&PlatformDescriptor::symmetric_conjugation(4)).unwrap())
    }

    fn bd() -> Arc<Platform> {
        Arc::new(make_platform(&PlatformDescriptor::bd_modp(23, 2, 11)).unwrap())
    }

    #[test]
    fn regime() {
        assert_eq!(regime_n(1).unwrap(), 8);
        assert_eq!(regime_n(3).unwrap(), 14);
        assert!(regime_n(0).is_err());
        assert_eq!(regime_s(11).unwrap(), 2);
        assert!(regime_s(9).is_err());
        assert!(regime_s(5).is_err());
        assert_eq!(fake_prime_uniform_links(1), vec![2, 3, 4, 7]);
        let p = s4();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert!(sample_fake_prime(&p, &UniformPairKeys, 0, &mut rng).is_err());
    }

    #[test]
    fn real_matches_session_runner() {
        let p = s4();
        let cfg = SessionConfig::uniform(7, p.clone(), 0).unwrap();
        for seed in 0..20 {
            let out = run_session_with_rng(&cfg, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
            let sample = sample_real(
                &p,
                &UniformPairKeys,
                7,
                &mut ChaCha20Rng::seed_from_u64(seed),
            )
            .unwrap();
            assert_eq!(sample.transcript, out.transcript);
            assert_eq!(&sample.sk, out.key().unwrap());
            assert_eq!(
                sample.sk,
                oracle_key(&p, &sample.internals.secrets).unwrap()
            );
            // w_1 = φ(c_n, Γ_{1,n})
            let expected = p
                .act(&sample.internals.pair_keys[6], link(&sample, 1))
                .unwrap();
            assert_eq!(sample.transcript.w[0], expected);
        }
    }

    #[test]
    fn every_sampler_is_self_consistent() {
        for p in [s4(), bd()] {
            let ctx = DdhContext::new(p.clone()).unwrap();
            let mut rng = ChaCha20Rng::seed_from_u64(17);
            for s in 1..=2 {
                let n = regime_n(s).unwrap();
                for kind in [TupleKind::DhShaped, TupleKind::RandomExcluded] {
                    let t = ctx.sample(kind, &mut rng).unwrap();
                    let samples = vec![
                        sample_real(&p, &UniformPairKeys, n, &mut rng).unwrap(),
                        sample_fake(&p, &UniformPairKeys, n, &mut rng).unwrap(),
                        sample_fake_prime(&p, &UniformPairKeys, s, &mut rng).unwrap(),
                        sample_dist_prime(
                            &p,
                            &UniformPairKeys,
                            s,
                            &t,
                            DistPrimeClosing::Corrected,
                            &mut rng,
                        )
                        .unwrap(),
                        sample_dist_prime(
                            &p,
                            &UniformPairKeys,
                            s,
                            &t,
                            DistPrimeClosing::AsPrinted,
                            &mut rng,
                        )
                        .unwrap(),
                        sample_dist(&p, &UniformPairKeys, s, &t, DistClosing::R, &mut rng).unwrap(),
                        sample_dist(&p, &UniformPairKeys, s, &t, DistClosing::Z, &mut rng).unwrap(),
                    ];
                    for sample in &samples {
                        assert_eq!(sample.n(), n);
                        assert_eq!(sample.transcript.w.len(), n);
                        assert_eq!(sample.transcript.z.len(), n);
                        assert!(sample.is_consistent(&p).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn fake_prime_randomizes_exactly_the_listed_links() {
        let p = s4();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut ever_dishonest = [false; 8];
        for _ in 0..200 {
            let sample = sample_fake_prime(&p, &UniformPairKeys, 1, &mut rng).unwrap();
            assert_eq!(sample.internals.uniform_links, vec![2, 3, 4, 7]);
            let honest = sample.links_are_honest(&p).unwrap();
            for i in 1..=8 {
                if !sample.internals.uniform_links.contains(&i) {
                    assert!(honest[i - 1], "link {i}");
                }
                ever_dishonest[i - 1] |= !honest[i - 1];
            }
        }
        assert_eq!(
            ever_dishonest,
            [false, true, true, true, false, false, true, false]
        );
    }

    #[test]
    fn dist_prime_with_dh_tuples_is_honest_white_box() {
        let p = s4();
        let ctx = DdhContext::new(p.clone()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut printed_broken = 0;
        for _ in 0..200 {
            let t = ctx.sample(TupleKind::DhShaped, &mut rng).unwrap();
            let a = sample_dist_prime(
                &p,
                &UniformPairKeys,
                2,
                &t,
                DistPrimeClosing::Corrected,
                &mut rng,
            )
            .unwrap();
            assert!(a.links_are_honest(&p).unwrap().iter().all(|&ok| ok));
            assert_eq!(a.sk, oracle_key(&p, &a.internals.secrets).unwrap());
            let b = sample_dist_prime(
                &p,
                &UniformPairKeys,
                2,
                &t,
                DistPrimeClosing::AsPrinted,
                &mut rng,
            )
            .unwrap();
            let honest = b.links_are_honest(&p).unwrap();
            assert!(honest[1..].iter().all(|&ok| ok));
            if !honest[0] {
                printed_broken += 1;
            }
        }
        // h_1 ⊙ h_n and h_n ⊙ h_1 rarely give the same image in S4
        assert!(printed_broken > 100, "{printed_broken}");
    }

    #[test]
    fn printed_closing_is_harmless_when_commutative() {
        let p = bd();
        let ctx = DdhContext::new(p.clone()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        for _ in 0..100 {
            let t = ctx.sample(TupleKind::DhShaped, &mut rng).unwrap();
            let b = sample_dist_prime(
                &p,
                &UniformPairKeys,
                1,
                &t,
                DistPrimeClosing::AsPrinted,
                &mut rng,
            )
            .unwrap();
            assert!(b.links_are_honest(&p).unwrap().iter().all(|&ok| ok));
        }
    }

    #[test]
    fn dist_with_dh_tuples_matches_fake_prime_except_closing() {
        let p = s4();
        let ctx = DdhContext::new(p.clone()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let mut closing_mismatch = 0;
        for _ in 0..200 {
            let t = ctx.sample(TupleKind::DhShaped, &mut rng).unwrap();
            let honest_variant =
                sample_dist(&p, &UniformPairKeys, 1, &t, DistClosing::Honest, &mut rng).unwrap();
            let ok = honest_variant.links_are_honest(&p).unwrap();
            for i in [1, 5, 6, 8] {
                assert!(ok[i - 1], "link {i}");
            }
            let printed =
                sample_dist(&p, &UniformPairKeys, 1, &t, DistClosing::R, &mut rng).unwrap();
            let ok = printed.links_are_honest(&p).unwrap();
            for i in [5, 6, 8] {
                assert!(ok[i - 1], "link {i}");
            }
            // printed closing is φ(h_n ⊙ h_1, g)
            let h = &printed.internals.secrets;
            let reversed = p.act_base(&p.op(&h[7], &h[0]).unwrap()).unwrap();
            assert_eq!(printed.internals.links[0], reversed);
            if !ok[0] {
                closing_mismatch += 1;
            }
        }
        assert!(closing_mismatch > 100, "{closing_mismatch}");
    }
}
