use std::collections::HashMap;
use std::sync::Arc;

use bdga::algebra::{make_platform, Platform, PlatformDescriptor};
use bdga::lab::{sample_fake, sample_real};
use bdga::protocol::{
    oracle_key, run_session, run_session_with_rng, SessionConfig, TranscriptFile, UniformPairKeys,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn platforms() -> Vec<Arc<Platform>> {
    [
        PlatformDescriptor::bd_modp(23, 2, 11),
        PlatformDescriptor::symmetric_conjugation(4),
        PlatformDescriptor::gl2_conjugation(5),
        PlatformDescriptor::gl2_twisted(5),
        PlatformDescriptor::default_double_coset(),
    ]
    .iter()
    .map(|d| Arc::new(make_platform(d).unwrap()))
    .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_party_derives_the_oracle_key(which in 0usize..5, n in 3usize..=12, seed: u64) {
        let p = platforms().swap_remove(which);
        let out = run_session(&SessionConfig::uniform(n, p.clone(), seed).unwrap()).unwrap();
        prop_assert!(out.keys_agree());
        prop_assert_eq!(out.key().unwrap(), &oracle_key(&p, &out.internals.secrets).unwrap());
        prop_assert!(out.records.iter().all(|r| r.is_consistent() && r.sid == Some(out.transcript.sid())));
    }

    #[test]
    fn real_sampler_matches_the_protocol(n in 3usize..=10, seed: u64) {
        let p = platforms().swap_remove(1);
        let config = SessionConfig::uniform(n, p.clone(), seed).unwrap();
        let out = run_session_with_rng(&config, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        let sample = sample_real(&p, &UniformPairKeys, n, &mut ChaCha20Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&sample.transcript, &out.transcript);
        prop_assert_eq!(Some(&sample.sk), out.key());
    }

    #[test]
    fn any_changed_z_breaks_telescoping(n in 3usize..=8, seed: u64, at in 0usize..8, shift in 1u64..24) {
        let p = platforms().swap_remove(1);
        let out = run_session(&SessionConfig::uniform(n, p.clone(), seed).unwrap()).unwrap();
        let mut t = out.transcript.clone();
        let i = at % n;
        let g = p.target();
        let index = (0..g.order()).find(|&k| g.element_at(k) == t.z[i]).unwrap();
        t.z[i] = g.element_at((index + shift) % g.order());
        prop_assert!(!t.telescopes(&p).unwrap());
        prop_assert_ne!(t.sid(), out.transcript.sid());
    }

    #[test]
    fn transcript_file_roundtrip(which in 0usize..5, n in 3usize..=6, seed: u64) {
        let p = platforms().swap_remove(which);
        let out = run_session(&SessionConfig::uniform(n, p.clone(), seed).unwrap()).unwrap();
        let file = TranscriptFile::from_json(&out.transcript.to_json(None)).unwrap();
        prop_assert_eq!(file.decode(&p).unwrap(), out.transcript);
    }
}

#[test]
fn fake_key_marginal_is_uniform() {
    let p = platforms().swap_remove(1);
    let order = p.target().order() as usize;
    let draws = 1_000 * order;
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let s = sample_fake(&p, &UniformPairKeys, 3, &mut rng).unwrap();
        *counts.entry(s.sk).or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), order);
    let expected = (draws / order) as f64;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 23 degrees of freedom, upper 0.1% point
    assert!(chi2 < 49.73, "chi-square {chi2}");
}

#[test]
fn fake_transcripts_have_the_real_shape() {
    let p = platforms().swap_remove(1);
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for n in 3..=9 {
        let s = sample_fake(&p, &UniformPairKeys, n, &mut rng).unwrap();
        assert_eq!(s.transcript.n(), n);
        assert_eq!(s.transcript.platform, p.tag());
        assert!(s.transcript.telescopes(&p).unwrap());
        assert!(s.is_consistent(&p).unwrap());
    }
}
