//! Command-line front end. Exit codes: 0 pass, 1 a check failed, 2 usage or
//! configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::algebra::{
    make_platform, parse_family, EndomorphismSpec, Platform, PlatformDescriptor, SubgroupSpec,
};
use crate::lab::{
    run_experiment, DistClosing, DistPrimeClosing, ExperimentConfig, ExperimentName, Partition,
    PlatformSelector,
};
use crate::protocol::{
    run_session, ArtifactMeta, KeysFile, SessionConfig, SessionId, TranscriptFile, TOOL_VERSION,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "bdga",
    version,
    about = "Group key exchange over finite group actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one session and write its transcript and key.
    Run(RunArgs),
    /// Check a transcript (and optionally a keys file).
    Verify(VerifyArgs),
    /// Run a named lab experiment.
    Experiment(ExperimentArgs),
    /// List the built-in platforms.
    Platforms,
}

#[derive(Debug, Clone, Default, Args)]
struct PlatformArgs {
    /// `bd_modp`, `conjugation`, `twisted_conjugacy`, `double_coset`, or a
    /// selector such as `bd_modp(23,2,11)`, `S4`, `conjugation(GL2(5))`.
    #[arg(long)]
    platform: Option<String>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    g: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    /// `S<m>` or `GL2(<p>)`.
    #[arg(long)]
    group: Option<String>,
    /// Comma-separated hex generators of the acting subgroup (left subgroup
    /// for double cosets).
    #[arg(long)]
    subgroup: Option<String>,
    /// Comma-separated hex generators of the right subgroup for double cosets.
    #[arg(long)]
    right_subgroup: Option<String>,
    /// Hex encoding of the base element.
    #[arg(long)]
    base: Option<String>,
    /// Platform descriptor as JSON.
    #[arg(long)]
    platform_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    platform: PlatformArgs,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for transcript.json and keys.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    transcript: PathBuf,
    /// Keys file written by `run`.
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Used when the transcript carries no platform metadata.
    #[command(flatten)]
    platform: PlatformArgs,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment name; optional when --manifest is given.
    name: Option<String>,
    /// JSON manifest; flags given alongside override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    platform: PlatformArgs,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// `hash64`, `key_hash`, `consistent_key`, `link:<i>` or `hash_mod:<k>`.
    #[arg(long)]
    partition: Option<String>,
    /// Extra partitions reported without affecting pass/fail.
    #[arg(long = "extra-partition")]
    extra_partitions: Vec<String>,
    /// `r`, `z` or `honest`.
    #[arg(long)]
    dist_closing: Option<String>,
    /// `corrected` or `as_printed`.
    #[arg(long)]
    dist_prime_closing: Option<String>,
    /// Results file; defaults to `<experiment>.results.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn failed(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_FAIL,
        message: message.into(),
    }
}

type CliResult<T> = Result<T, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, out),
        Command::Verify(args) => cmd_verify(&args, out),
        Command::Experiment(args) => cmd_experiment(&args, out),
        Command::Platforms => cmd_platforms(out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn split_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect()
}

impl PlatformArgs {
    fn is_empty(&self) -> bool {
        self.platform.is_none()
            && self.group.is_none()
            && self.platform_file.is_none()
            && self.p.is_none()
    }

    fn descriptor(&self, default: PlatformDescriptor) -> CliResult<PlatformDescriptor> {
        if let Some(path) = &self.platform_file {
            let text = read(path)?;
            return PlatformDescriptor::from_json(&text)
                .map_err(|e| usage(format!("{}: {e}", path.display())));
        }
        let family = |required: bool| -> CliResult<Option<crate::algebra::GroupFamily>> {
            match &self.group {
                Some(g) => parse_family(g)
                    .map(Some)
                    .ok_or_else(|| usage(format!("unknown group {g:?}"))),
                None if required => Err(usage("--group is required for this platform")),
                None => Ok(None),
            }
        };
        let subgroup = self
            .subgroup
            .as_deref()
            .map(|s| SubgroupSpec::Generators(split_list(s)));
        let kind = self.platform.as_deref().map(str::to_ascii_lowercase);
        match kind.as_deref() {
            None if self.group.is_some() => Ok(PlatformDescriptor::Conjugation {
                group: family(true)?.expect("required"),
                subgroup,
                base: self.base.clone(),
            }),
            None if self.p.is_some() => self.bd(),
            None => Ok(default),
            Some("bd_modp") if self.p.is_some() || self.g.is_some() || self.q.is_some() => {
                self.bd()
            }
            Some("conjugation") => Ok(PlatformDescriptor::Conjugation {
                group: family(true)?.expect("required"),
                subgroup,
                base: self.base.clone(),
            }),
            Some("twisted_conjugacy") => match family(false)? {
                None if subgroup.is_none() && self.base.is_none() => {
                    Ok(PlatformDescriptor::gl2_twisted(5))
                }
                group => Ok(PlatformDescriptor::TwistedConjugacy {
                    group: group.unwrap_or(crate::algebra::GroupFamily::Gl2 { p: 5 }),
                    subgroup,
                    endomorphism: EndomorphismSpec::TransposeInverse,
                    base: self.base.clone(),
                }),
            },
            Some("double_coset") if self.group.is_some() || self.subgroup.is_some() => {
                let left =
                    subgroup.ok_or_else(|| usage("--subgroup is required for double_coset"))?;
                let right = self
                    .right_subgroup
                    .as_deref()
                    .map(|s| SubgroupSpec::Generators(split_list(s)));
                Ok(PlatformDescriptor::DoubleCoset {
                    group: family(true)?.expect("required"),
                    right: right.unwrap_or_else(|| left.clone()),
                    left,
                    base: self.base.clone(),
                })
            }
            Some(_) => {
                PlatformDescriptor::from_selector(self.platform.as_deref().unwrap_or_default())
                    .map_err(|e| usage(e.to_string()))
            }
        }
    }

    fn bd(&self) -> CliResult<PlatformDescriptor> {
        match (self.p, self.g, self.q) {
            (Some(p), Some(g), Some(q)) => Ok(PlatformDescriptor::bd_modp(p, g, q)),
            _ => Err(usage("bd_modp needs --p, --g and --q")),
        }
    }

    fn build(&self, default: PlatformDescriptor) -> CliResult<Arc<Platform>> {
        let d = self.descriptor(default)?;
        make_platform(&d)
            .map(Arc::new)
            .map_err(|e| usage(format!("invalid platform: {e}")))
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, format!("{text}\n")).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// First 16 hex digits of SHA-256 over the key encoding.
pub fn key_fingerprint(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult<i32> {
    let platform = args
        .platform
        .build(PlatformDescriptor::bd_modp(23, 2, 11))?;
    let config = SessionConfig::uniform(args.n, platform.clone(), args.seed)
        .map_err(|e| usage(e.to_string()))?;
    let output = run_session(&config).map_err(|e| failed(e.to_string()))?;
    let meta = ArtifactMeta::new(&platform, args.seed);
    let transcript_path = args.out.join("transcript.json");
    let keys_path = args.out.join("keys.json");
    write_file(
        &transcript_path,
        &output.transcript.to_json(Some(meta.clone())),
    )?;
    if !output.keys_agree() {
        let _ = writeln!(out, "parties disagree on the key");
        return Ok(EXIT_FAIL);
    }
    let key = output.key().expect("agreeing parties hold a key");
    let keys = KeysFile {
        sid: output.transcript.sid().to_hex(),
        sk: key.to_hex(),
        meta: Some(meta),
    };
    write_file(&keys_path, &keys.to_json())?;
    let _ = writeln!(out, "platform {}", platform.tag());
    let _ = writeln!(out, "n {} seed {}", args.n, args.seed);
    let _ = writeln!(out, "sid {}", keys.sid);
    let _ = writeln!(out, "key fingerprint {}", key_fingerprint(key.as_bytes()));
    let _ = writeln!(
        out,
        "wrote {} and {}",
        transcript_path.display(),
        keys_path.display()
    );
    Ok(EXIT_PASS)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CliResult<i32> {
    let file =
        TranscriptFile::from_json(&read(&args.transcript)?).map_err(|e| usage(e.to_string()))?;
    let keys = match &args.keys {
        Some(path) => Some(KeysFile::from_json(&read(path)?).map_err(|e| usage(e.to_string()))?),
        None => None,
    };
    let platform = match (&file.meta, args.platform.is_empty()) {
        (Some(meta), true) => make_platform(&meta.platform)
            .map(Arc::new)
            .map_err(|e| usage(e.to_string()))?,
        (_, false) => args
            .platform
            .build(PlatformDescriptor::bd_modp(23, 2, 11))?,
        (None, true) => {
            return Err(usage(
                "transcript has no platform metadata; pass --platform",
            ))
        }
    };
    let fail = |out: &mut dyn Write, what: String| {
        let _ = writeln!(out, "FAIL {what}");
        Ok(EXIT_FAIL)
    };
    if file.platform != platform.tag() {
        return fail(
            out,
            format!("platform mismatch: transcript is for {}", file.platform),
        );
    }
    for (name, list) in [("v", &file.v), ("w", &file.w), ("Z", &file.z)] {
        if list.len() != file.n {
            return fail(
                out,
                format!(
                    "count: expected {} {name} values, found {}",
                    file.n,
                    list.len()
                ),
            );
        }
    }
    if file.n < 3 {
        return fail(out, format!("count: n must be ≥ 3 (got {})", file.n));
    }
    let transcript = match file.decode(&platform) {
        Ok(t) => t,
        Err(e) => return fail(out, format!("element decodability: {e}")),
    };
    match transcript.telescopes(&platform) {
        Ok(true) => {}
        _ => return fail(out, "telescoping violated: Z_1 · ... · Z_n ≠ e".into()),
    }
    let sid = transcript.sid().to_hex();
    if SessionId::from_hex(&file.sid).map(|s| s.to_hex()) != Ok(sid.clone()) {
        return fail(out, "sid does not match the transcript".into());
    }
    if let Some(keys) = keys {
        if keys.sid != sid {
            return fail(out, "keys file belongs to another session".into());
        }
        if let Err(e) = platform.target().decode_hex(&keys.sk) {
            return fail(out, format!("element decodability: key: {e}"));
        }
    }
    let _ = writeln!(out, "OK n={} sid={sid}", transcript.n());
    Ok(EXIT_PASS)
}

fn parse_partition(text: &str) -> CliResult<Partition> {
    let bad = || usage(format!("unknown partition {text:?}"));
    let (head, arg) = match text.split_once(':') {
        Some((h, a)) => (h, Some(a.parse::<usize>().map_err(|_| bad())?)),
        None => (text, None),
    };
    match (head, arg) {
        ("hash64", None) => Ok(Partition::Hash64),
        ("key_hash", None) => Ok(Partition::KeyHash),
        ("consistent_key", None) => Ok(Partition::ConsistentKey),
        ("link", Some(index)) => Ok(Partition::Link { index }),
        ("hash_mod", Some(buckets)) => Ok(Partition::HashMod { buckets }),
        _ => Err(bad()),
    }
}

fn experiment_config(args: &ExperimentArgs) -> CliResult<ExperimentConfig> {
    let mut config = match &args.manifest {
        Some(path) => {
            ExperimentConfig::from_json(&read(path)?).map_err(|e| usage(e.to_string()))?
        }
        None => {
            let name = args
                .name
                .as_deref()
                .ok_or_else(|| usage("an experiment name or --manifest is required"))?;
            ExperimentConfig::new(
                name.parse::<ExperimentName>()
                    .map_err(|e| usage(e.to_string()))?,
            )
        }
    };
    if let (Some(name), Some(_)) = (&args.name, &args.manifest) {
        config.experiment = name
            .parse()
            .map_err(|e: crate::lab::LabError| usage(e.to_string()))?;
    }
    if !args.platform.is_empty() {
        let d = args
            .platform
            .descriptor(config.experiment.default_platform())?;
        config.platform = Some(PlatformSelector::Descriptor(d));
    }
    config.n = args.n.or(config.n);
    config.s = args.s.or(config.s);
    config.seed = args.seed.unwrap_or(config.seed);
    config.trials = args.trials.or(config.trials);
    config.tolerance = args.tolerance.or(config.tolerance);
    if let Some(p) = &args.partition {
        config.partition = Some(parse_partition(p)?);
    }
    for p in &args.extra_partitions {
        config.extra_partitions.push(parse_partition(p)?);
    }
    if let Some(c) = &args.dist_closing {
        config.dist_closing = match c.as_str() {
            "r" => DistClosing::R,
            "z" => DistClosing::Z,
            "honest" => DistClosing::Honest,
            _ => return Err(usage(format!("unknown Dist closing {c:?}"))),
        };
    }
    if let Some(c) = &args.dist_prime_closing {
        config.dist_prime_closing = match c.as_str() {
            "corrected" => DistPrimeClosing::Corrected,
            "as_printed" => DistPrimeClosing::AsPrinted,
            _ => return Err(usage(format!("unknown Dist′ closing {c:?}"))),
        };
    }
    Ok(config)
}

fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> CliResult<i32> {
    let config = experiment_config(args)?;
    let report = run_experiment(&config).map_err(|e| usage(e.to_string()))?;
    let path = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.results.json", config.experiment)));
    write_file(&path, &report.to_json())?;
    let _ = writeln!(out, "{}", report.summary());
    for note in &report.notes {
        let _ = writeln!(out, "  note: {note}");
    }
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(if report.pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_platforms(out: &mut dyn Write) -> CliResult<i32> {
    let _ = writeln!(out, "{TOOL_VERSION}");
    let entries = [
        ("bd_modp(23,2,11)", PlatformDescriptor::bd_modp(23, 2, 11)),
        (
            "conjugation(S4)",
            PlatformDescriptor::symmetric_conjugation(4),
        ),
        (
            "conjugation(S5)",
            PlatformDescriptor::symmetric_conjugation(5),
        ),
        (
            "conjugation(GL2(5))",
            PlatformDescriptor::gl2_conjugation(5),
        ),
        (
            "twisted_conjugacy(GL2(5))",
            PlatformDescriptor::gl2_twisted(5),
        ),
        ("double_coset", PlatformDescriptor::default_double_coset()),
    ];
    for (selector, d) in entries {
        let p = make_platform(&d).map_err(|e| failed(e.to_string()))?;
        let _ = writeln!(
            out,
            "{selector:<28} |H| = {:<6} |G| = {:<6} {}",
            p.acting().order(),
            p.target().order(),
            p.tag()
        );
    }
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_cli(
            std::iter::once("bdga").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn run_then_verify() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path().to_str().unwrap();
        let (code, out, _) = call(&[
            "run",
            "--platform",
            "bd_modp",
            "--p",
            "23",
            "--g",
            "2",
            "--q",
            "11",
            "--n",
            "3",
            "--seed",
            "7",
            "--out",
            d,
        ]);
        assert_eq!(code, 0);
        assert!(out.contains("key fingerprint"));
        let t = format!("{d}/transcript.json");
        let k = format!("{d}/keys.json");
        let (code, out, _) = call(&["verify", &t, "--keys", &k]);
        assert_eq!(code, 0, "{out}");
    }

    #[test]
    fn too_few_parties() {
        let dir = tempfile::tempdir().unwrap();
        let (code, _, err) = call(&["run", "--n", "2", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("n must be ≥ 3"), "{err}");
    }

    #[test]
    fn platform_flags() {
        let args = PlatformArgs {
            group: Some("S4".into()),
            ..Default::default()
        };
        assert_eq!(
            args.descriptor(PlatformDescriptor::bd_modp(23, 2, 11))
                .ok()
                .unwrap(),
            PlatformDescriptor::symmetric_conjugation(4)
        );
        let args = PlatformArgs {
            platform: Some("twisted_conjugacy".into()),
            group: Some("GL2(3)".into()),
            ..Default::default()
        };
        assert_eq!(
            args.descriptor(PlatformDescriptor::bd_modp(23, 2, 11))
                .ok()
                .unwrap(),
            PlatformDescriptor::gl2_twisted(3)
        );
        let args = PlatformArgs {
            platform: Some("bd_modp".into()),
            p: Some(23),
            ..Default::default()
        };
        assert!(args
            .descriptor(PlatformDescriptor::bd_modp(23, 2, 11))
            .is_err());
        let args = PlatformArgs {
            platform: Some("double_coset".into()),
            ..Default::default()
        };
        assert_eq!(
            args.descriptor(PlatformDescriptor::bd_modp(23, 2, 11))
                .ok()
                .unwrap(),
            PlatformDescriptor::default_double_coset()
        );
    }

    #[test]
    fn partitions_parse() {
        assert_eq!(
            parse_partition("link:3").ok(),
            Some(Partition::Link { index: 3 })
        );
        assert_eq!(
            parse_partition("hash_mod:2").ok(),
            Some(Partition::HashMod { buckets: 2 })
        );
        assert!(parse_partition("link").is_err());
        assert!(parse_partition("nope").is_err());
    }

    #[test]
    fn unknown_experiment_and_bad_regime() {
        let (code, _, err) = call(&["experiment", "claim_one"]);
        assert_eq!(code, 2);
        assert!(err.contains("unknown experiment"));
        let (code, _, _) = call(&[
            "experiment",
            "fake_vs_dist_rand",
            "--n",
            "9",
            "--trials",
            "1000",
        ]);
        assert_eq!(code, 2);
        let (code, _, _) = call(&["bogus"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn fingerprint_width() {
        assert_eq!(key_fingerprint(b"x").len(), 16);
    }
}
