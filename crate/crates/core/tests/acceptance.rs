//! Exit criteria. Prints one PASS/FAIL line per criterion and exits nonzero
//! when any of them fails.
//!
//! Run with `cargo test -p bdga-core --test acceptance`.

use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use bdga::algebra::{make_platform, Element, Platform, PlatformDescriptor, PlatformKind};
use bdga::harness::{estimate_advantage, CoinFlip, HarnessError, InstanceId, KeyMode, OracleEnv};
use bdga::lab::{
    fake_key_independence, run_experiment, ExperimentConfig, ExperimentName, DEFAULT_TOLERANCE,
};
use bdga::protocol::{oracle_key, run_session, run_with_secrets, SessionConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const CORRECTNESS_SESSIONS: u64 = 1_000;
const CORRECTNESS_BUDGET: Duration = Duration::from_secs(60);
const CLASSICAL_EXPECTED: u64 = 9;
const CLASSICAL_RANDOM: usize = 200;
const SAMPLED_TRIPLES: usize = 10_000;
const ALGEBRA_BUDGET: Duration = Duration::from_secs(120);
const INVARIANT_SESSIONS: u64 = 10_000;
const TV_TOLERANCE: f64 = DEFAULT_TOLERANCE;
const TV_TRIALS: u64 = 100_000;
const NULL_TRIALS: u64 = 10_000;
const CONTRACT_SEQUENCES: u64 = 1_000;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }
}

fn platform(selector: &str) -> Arc<Platform> {
    let d = PlatformDescriptor::from_selector(selector).expect("selector parses");
    Arc::new(make_platform(&d).expect("platform builds"))
}

fn all_platforms() -> Vec<Arc<Platform>> {
    [
        "bd_modp",
        "S4",
        "S5",
        "conjugation(GL2(5))",
        "twisted_conjugacy",
        "double_coset",
    ]
    .into_iter()
    .map(platform)
    .collect()
}

fn correctness() -> Outcome {
    let start = Instant::now();
    let mut failures = 0u64;
    let mut total = 0u64;
    for p in all_platforms() {
        let base = SessionConfig::uniform(3, p.clone(), 0).unwrap();
        for seed in 0..CORRECTNESS_SESSIONS {
            let n = 3 + (seed % 10) as usize;
            let out = run_session(&base.reseeded(n, seed).unwrap()).unwrap();
            let oracle = oracle_key(&p, &out.internals.secrets).unwrap();
            total += 1;
            if !out.keys_agree() || out.key() != Some(&oracle) {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures == 0 && elapsed < CORRECTNESS_BUDGET,
        format!("{failures}/{total} failures, n in 3..=12, {elapsed:.1?} (budget {CORRECTNESS_BUDGET:?})"),
    )
}

fn modpow(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// `g^(Σ h_k·h_{k-1} mod q) mod p`, indices cyclic.
fn classical_formula(h: &[u64], p: u64, g: u64, q: u64) -> u64 {
    let n = h.len();
    let exponent = (0..n).map(|k| h[k] * h[(k + n - 1) % n] % q).sum::<u64>() % q;
    modpow(g, exponent, p)
}

fn classical() -> Outcome {
    let (p, g, q) = (23, 2, 11);
    let plat = Arc::new(make_platform(&PlatformDescriptor::bd_modp(p, g, q)).unwrap());
    let units = plat.units_group().unwrap().clone();
    let power = plat.power_group().unwrap().clone();
    let run = |h: &[u64], rng: &mut ChaCha20Rng| -> (bool, u64) {
        let secrets: Vec<Element> = h.iter().map(|&v| units.wrap(v)).collect();
        let pair_keys: Vec<Element> = (0..h.len())
            .map(|_| units.wrap(rng.gen_range(1..q)))
            .collect();
        let out = run_with_secrets(&plat, &pair_keys, &secrets).unwrap();
        let key = power.value(out.key().unwrap());
        (out.keys_agree(), key)
    };
    let mut rng = ChaCha20Rng::seed_from_u64(0xbd);
    let fixed = [3, 5, 7];
    let oracle = classical_formula(&fixed, p, g, q);
    let (agree, key) = run(&fixed, &mut rng);
    let mut pass = agree && key == oracle && oracle == CLASSICAL_EXPECTED;
    let mut mismatches = 0;
    for _ in 0..CLASSICAL_RANDOM {
        let n = rng.gen_range(3..=12);
        let h: Vec<u64> = (0..n).map(|_| rng.gen_range(1..q)).collect();
        let (agree, key) = run(&h, &mut rng);
        if !agree || key != classical_formula(&h, p, g, q) {
            mismatches += 1;
        }
    }
    pass &= mismatches == 0;
    Outcome::new(
        pass,
        format!("h=(3,5,7): key {key}, oracle {oracle}; {mismatches}/{CLASSICAL_RANDOM} random mismatches"),
    )
}

fn algebra() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(0xa1);
    let mut notes = Vec::new();
    let mut pass = true;
    for p in all_platforms() {
        let tag = p.tag().to_string();
        let exhaustive = if p.kind() == PlatformKind::Conjugation && p.target().order() == 24 {
            24u64.pow(3)
        } else {
            0
        };
        if let Err(e) = p.check_action_axioms(&mut rng, exhaustive, SAMPLED_TRIPLES) {
            pass = false;
            notes.push(format!("axioms {tag}: {e}"));
        }
        if p.acting().is_enumerable() && p.target().is_enumerable() {
            for x in p.target().elements().unwrap() {
                let report = p.orbit_stabilizer(&x).unwrap();
                if !report.satisfies_fundamental_lemma(p.acting().order()) {
                    pass = false;
                    notes.push(format!("orbit-stabilizer {tag}"));
                    break;
                }
            }
        }
        match p.kind() {
            // x -> x^h and x -> h·x·h^-1 are automorphisms
            PlatformKind::BdModp | PlatformKind::Conjugation => {
                let exhaustive = if p.target().order() <= 24 {
                    24u64.pow(3)
                } else {
                    0
                };
                if let Err(e) = p.check_automorphism_action(&mut rng, exhaustive, SAMPLED_TRIPLES) {
                    pass = false;
                    notes.push(format!("automorphism {tag}: {e}"));
                }
            }
            PlatformKind::DoubleCoset => {
                if let Err(e) = p.check_interchange(&mut rng, 0, SAMPLED_TRIPLES) {
                    pass = false;
                    notes.push(format!("interchange {tag}: {e}"));
                }
            }
            PlatformKind::TwistedConjugacy => {}
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < ALGEBRA_BUDGET;
    let detail = if notes.is_empty() {
        format!("all platforms, {elapsed:.1?} (budget {ALGEBRA_BUDGET:?})")
    } else {
        notes.join("; ")
    };
    Outcome::new(pass, detail)
}

fn invariants() -> Outcome {
    let platforms = all_platforms();
    let mut violations = 0u64;
    for seed in 0..INVARIANT_SESSIONS {
        let p = &platforms[(seed % platforms.len() as u64) as usize];
        let n = 3 + (seed % 10) as usize;
        let out = run_session(&SessionConfig::uniform(n, p.clone(), seed).unwrap()).unwrap();
        let h = &out.internals.secrets;
        let mut ok = out.transcript.telescopes(p).unwrap();
        for i in 0..n {
            let prev = &h[(i + n - 1) % n];
            let next = &h[(i + 1) % n];
            ok &= out.internals.x[i] == p.act_base(&p.op(&h[i], prev).unwrap()).unwrap();
            ok &= out.internals.y[i] == p.act_base(&p.op(next, &h[i]).unwrap()).unwrap();
        }
        if !ok {
            violations += 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!(
            "{violations}/{INVARIANT_SESSIONS} sessions violate telescoping or round-4 identities"
        ),
    )
}

fn tv_suite(name: ExperimentName) -> Outcome {
    let mut config = ExperimentConfig::new(name);
    config.platform = Some(bdga::lab::PlatformSelector::Selector("S4".into()));
    config.n = Some(8);
    config.trials = Some(TV_TRIALS);
    config.tolerance = Some(TV_TOLERANCE);
    match run_experiment(&config) {
        Ok(r) => Outcome::new(
            r.statistic <= TV_TOLERANCE,
            format!(
                "statistic {:.5} (ci95 {:.5}..{:.5}) vs {TV_TOLERANCE}, {} trials",
                r.statistic, r.ci95.0, r.ci95.1, r.trials
            ),
        ),
        Err(e) => Outcome::error(e),
    }
}

fn fake_independence() -> Outcome {
    let p = platform("S4");
    let report = match fake_key_independence(&p, 4) {
        Ok(r) => r,
        Err(e) => return Outcome::error(e),
    };
    let null = estimate_advantage(&CoinFlip { n: 4 }, &p, KeyMode::FakeUniform, NULL_TRIALS, 7)
        .expect("null distinguisher runs");
    let bound = 3.0 / (NULL_TRIALS as f64).sqrt();
    Outcome::new(
        report.exact && null.advantage <= bound,
        format!(
            "exact uniform in {}/{} cells (max tv {:.4}, bayes advantage {:.4}); null advantage {:.4} vs {bound:.4}",
            report.uniform_cells, report.cells, report.max_tv, report.bayes_advantage, null.advantage
        ),
    )
}

fn ids(instance: u32, n: u32) -> Vec<InstanceId> {
    (1..=n).map(|u| InstanceId::new(u, instance)).collect()
}

/// One randomized adversarial sequence. Returns false if any misuse was
/// accepted or raised the wrong error.
fn contract_sequence(seed: u64, p: &Arc<Platform>) -> bool {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut env = OracleEnv::new(p.clone(), seed, KeyMode::Real).unwrap();
    let n = rng.gen_range(3..=6);
    let first = ids(1, n);
    if env.execute(&first).is_err() {
        return false;
    }
    let mut ok = true;
    // reuse one executed instance among fresh ones
    let mut reuse = ids(2, n);
    let victim = first[rng.gen_range(0..first.len())];
    let slot = rng.gen_range(0..reuse.len());
    reuse[slot] = victim;
    ok &= env.execute(&reuse) == Err(HarnessError::InstanceUsed(victim));
    let mut dup = ids(3, n);
    let copy = dup[0];
    let at = rng.gen_range(1..dup.len());
    dup[at] = copy;
    ok &= env.execute(&dup) == Err(HarnessError::DuplicateInstance(copy));
    let reserved = InstanceId::new(1, 9);
    env.reserve(reserved);
    let unknown = InstanceId::new(99, 99);
    for id in [reserved, unknown] {
        ok &= env.test(&id) == Err(HarnessError::NotAccepted(id));
    }
    ok &= !env.test_used();
    ok &= env.test(&first[rng.gen_range(0..first.len())]).is_ok();
    ok &= env.test(&first[0]) == Err(HarnessError::TestAlreadyUsed);
    ok
}

fn oracle_contract() -> Outcome {
    let platforms = [platform("S4"), platform("bd_modp")];
    let bad = (0..CONTRACT_SEQUENCES)
        .filter(|&s| !contract_sequence(s, &platforms[(s % 2) as usize]))
        .count();
    Outcome::new(
        bad == 0,
        format!("{bad}/{CONTRACT_SEQUENCES} adversarial sequences escaped a typed error"),
    )
}

fn run_cli_twice(args: &[&str], files: &[&str]) -> Result<bool, String> {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let status = Command::new(env!("CARGO_BIN_EXE_bdga"))
            .args(args)
            .current_dir(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        let mut bytes = status.stdout;
        for f in files {
            bytes.extend(std::fs::read(dir.path().join(f)).map_err(|e| format!("{f}: {e}"))?);
        }
        outputs.push(bytes);
    }
    Ok(outputs[0] == outputs[1])
}

fn determinism() -> Outcome {
    let session = run_cli_twice(
        &[
            "run",
            "--platform",
            "S4",
            "--n",
            "6",
            "--seed",
            "42",
            "--out",
            "out",
        ],
        &["out/transcript.json", "out/keys.json"],
    );
    let experiment = run_cli_twice(
        &[
            "experiment",
            "real_vs_distprime_dh",
            "--trials",
            "2000",
            "--seed",
            "3",
            "--out",
            "report.json",
        ],
        &["report.json"],
    );
    let mut config = ExperimentConfig::new(ExperimentName::FakeVsDistRand);
    config.trials = Some(2000);
    config.seed = 11;
    let library = run_experiment(&config)
        .map(|a| a.to_json())
        .and_then(|a| run_experiment(&config).map(|b| a == b.to_json()));
    match (session, experiment, library) {
        (Ok(s), Ok(e), Ok(l)) => Outcome::new(
            s && e && l,
            format!("transcript+keys identical: {s}, CLI report identical: {e}, library report identical: {l}"),
        ),
        (s, e, l) => Outcome::new(false, format!("{s:?} {e:?} {:?}", l.map_err(|e| e.to_string()))),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("correctness", correctness),
        ("classical_reduction", classical),
        ("algebra_suites", algebra),
        ("transcript_invariants", invariants),
        ("real_vs_distprime_dh", || {
            tv_suite(ExperimentName::RealVsDistprimeDh)
        }),
        ("fake_vs_dist_rand", || {
            tv_suite(ExperimentName::FakeVsDistRand)
        }),
        ("fake_key_independence", fake_independence),
        ("oracle_contract", oracle_contract),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.1?}]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
