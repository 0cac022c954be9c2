//! Command-line front end for threshold-lab.
//!
//! Every subcommand writes one report (JSON by default, CSV where a table
//! makes sense) to stdout or `--out`. With `--out`, a run manifest is written
//! next to the report as `<out>.manifest.json`.
//!
//! Exit codes: 0 success, 1 usage, 2 input error, 3 resource or budget
//! error, 4 verification failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use threshold_lab::fragments::{minimum_tower, tower_cover, TowerBudget};
use threshold_lab::instance::Instance;
use threshold_lab::instances::GeneratorSpec;
use threshold_lab::montecarlo::{
    estimate_amplified_success, estimate_key_lemma, estimate_pc, multiplier_sweep, sharpness_demo,
    ClampPolicy, ExperimentReport, McConfig, NotSmallEvidence,
};
use threshold_lab::rounding::{cost_sweep, cover_threshold, tower_round, verify_main_theorem, RoundConfig};
use threshold_lab::solvers::{CoverProblem, SolverConfig};
use threshold_lab::{Error, SetSystem, Subset};

mod verify;

pub use verify::{verify_all, CheckResult, VerifySummary};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "THRESHOLD_LAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    PerfectMatchings,
    Cliques,
    DisjointBlocks,
    RandomKuniform,
    FromFractional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clamp {
    Flag,
    Error,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "threshold-lab", version, about = "Expectation thresholds at desk scale")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Sample rounds (or the mean degree for `sharpness`).
    #[arg(long, global = true)]
    pub s: Option<f64>,
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Cap on candidate sets for the exact solvers.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    pub budget: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Clamp::Flag)]
    pub clamp_policy: Clamp,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate an instance file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Instance file holding the fractional cover for `from_fractional`.
        #[arg(long)]
        cover: Option<PathBuf>,
        /// Keep only inclusion-minimal members for `from_fractional`.
        #[arg(long)]
        minimal: bool,
    },
    /// Minimum integral cover cost at `--p`.
    Cint { instance: PathBuf },
    /// Minimum fractional cover cost at `--p`.
    Cfrac { instance: PathBuf },
    /// Expectation threshold.
    Pe { instance: PathBuf },
    /// Fractional expectation threshold.
    Pf { instance: PathBuf },
    /// Monte Carlo estimate of the probability-one-half point.
    PcMc { instance: PathBuf },
    /// Minimum towers of fragments for explicit samples.
    Tower {
        instance: PathBuf,
        /// Samples as a JSON list of lists, or a path to such a file.
        #[arg(long)]
        samples: String,
    },
    /// Success frequency of the amplified selector process.
    SelectorMc {
        instance: PathBuf,
        /// Density multiplier.
        #[arg(long, default_value_t = 16.0)]
        multiplier: f64,
        /// Run every multiplier in {1, 2, 4, 8, 16}.
        #[arg(long)]
        sweep: bool,
    },
    /// Monte Carlo estimate of the bad-tuple cover cost.
    KeyLemmaMc {
        instance: PathBuf,
        #[arg(long, default_value_t = 16.0)]
        multiplier: f64,
    },
    /// Isolated vertices of G(n, s/n).
    Sharpness {
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Integral covers from towers built on a fractional cover.
    Round { instance: PathBuf },
    /// Integrality gap report for a fractional cover.
    VerifyMain {
        instance: PathBuf,
        /// Also write a (q, c_int, c_frac) CSV sweep here.
        #[arg(long)]
        sweep: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Run every invariant check against one instance.
    VerifyAll { instance: PathBuf },
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub flags: Value,
    pub seed: u64,
    pub instance_hash: Option<String>,
    pub version: &'static str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

/// What a subcommand produced.
pub struct Report {
    pub json: Value,
    pub csv: Option<String>,
    pub instance_hash: Option<String>,
    /// Verification outcome for commands that check something.
    pub passed: bool,
}

impl Report {
    fn json(json: Value) -> Self {
        Report {
            json,
            csv: None,
            instance_hash: None,
            passed: true,
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Lib(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Json(e))
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Lib(Error::input(msg)))
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    configure_threads();
    let started = now_ms();
    match run(&cli).and_then(|report| emit(&cli, &argv, started, report)) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            if e.is_resource() {
                EXIT_RESOURCE
            } else {
                EXIT_INPUT
            }
        }
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Gen { .. } => "gen",
        Command::Cint { .. } => "cint",
        Command::Cfrac { .. } => "cfrac",
        Command::Pe { .. } => "pe",
        Command::Pf { .. } => "pf",
        Command::PcMc { .. } => "pc-mc",
        Command::Tower { .. } => "tower",
        Command::SelectorMc { .. } => "selector-mc",
        Command::KeyLemmaMc { .. } => "key-lemma-mc",
        Command::Sharpness { .. } => "sharpness",
        Command::Round { .. } => "round",
        Command::VerifyMain { .. } => "verify-main",
        Command::VerifyAll { .. } => "verify-all",
    }
}

fn emit(cli: &Cli, argv: &[String], started: u128, report: Report) -> Outcome<i32> {
    let body = match cli.format {
        Format::Json => {
            let mut v = report.json;
            if let (Some(h), Value::Object(map)) = (&report.instance_hash, &mut v) {
                map.insert("instance_hash".into(), Value::String(h.clone()));
            }
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => match report.csv {
            Some(csv) => csv,
            None => return input(format!("no CSV form for `{}`", command_name(&cli.command))),
        },
    };
    match &cli.out {
        Some(path) => {
            write_atomic(path, body.as_bytes())?;
            let manifest = RunManifest {
                command: command_name(&cli.command).into(),
                argv: argv.to_vec(),
                flags: serde_json::to_value(cli)?,
                seed: cli.seed,
                instance_hash: report.instance_hash.clone(),
                version: env!("CARGO_PKG_VERSION"),
                started_unix_ms: started,
                finished_unix_ms: now_ms(),
            };
            write_atomic(
                &manifest_path(path),
                (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes(),
            )?;
        }
        None => print!("{body}"),
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY })
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

/// Hex SHA-256 of the instance file bytes.
pub fn hash_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn load(path: &Path) -> Outcome<(Instance, String)> {
    let bytes = std::fs::read(path).map_err(|e| {
        Failure::Lib(Error::input(format!("cannot read {}: {e}", path.display())))
    })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Failure::Lib(Error::input(format!("{} is not UTF-8", path.display()))))?;
    Ok((Instance::from_json(&text)?, hash_bytes(&bytes)))
}

fn solver_config(cli: &Cli) -> SolverConfig {
    SolverConfig {
        budget: cli.budget,
        tol: cli.tol,
        ..SolverConfig::default()
    }
}

fn mc_config(cli: &Cli, default_trials: usize, multiplier: f64) -> McConfig {
    McConfig {
        trials: cli.trials.unwrap_or(default_trials),
        seed: cli.seed,
        clamp: match cli.clamp_policy {
            Clamp::Flag => ClampPolicy::Flag,
            Clamp::Error => ClampPolicy::Error,
        },
        multiplier,
    }
}

fn need_p(cli: &Cli) -> Outcome<f64> {
    cli.p.map_or_else(|| Err(Failure::Usage("--p is required".into())), Ok)
}

fn rounds(cli: &Cli) -> Outcome<usize> {
    let s = cli.s.unwrap_or(1.0);
    if s < 1.0 || s.fract() != 0.0 {
        return input(format!("--s must be a positive integer here, got {s}"));
    }
    Ok(s as usize)
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> Outcome<T> {
    v.ok_or_else(|| Failure::Usage(format!("--{flag} is required for --kind {kind}")))
}

pub fn lists(sys: &SetSystem) -> Value {
    json!(sys.to_lists())
}

fn report_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(ExperimentReport::csv_header());
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

fn parse_samples(arg: &str, n: usize) -> Outcome<Vec<Subset>> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg)?
    } else {
        arg.to_string()
    };
    let raw: Vec<Vec<usize>> = serde_json::from_str(&text)
        .map_err(|e| Failure::Lib(Error::input(format!("--samples is not a JSON list of lists: {e}"))))?;
    raw.iter()
        .map(|w| {
            w.iter()
                .map(|&x| {
                    if x < n {
                        Ok(x)
                    } else {
                        Err(Failure::Lib(Error::ElementOutOfRange { element: x, n }))
                    }
                })
                .collect::<Outcome<Subset>>()
        })
        .collect()
}

fn run(cli: &Cli) -> Outcome<Report> {
    match &cli.command {
        Command::Gen {
            kind,
            n,
            k,
            m,
            cover,
            minimal,
        } => {
            let name = format!("{kind:?}");
            let spec = match kind {
                Kind::PerfectMatchings => GeneratorSpec::PerfectMatchings {
                    n: need(*n, "n", &name)?,
                },
                Kind::Cliques => GeneratorSpec::Cliques {
                    n: need(*n, "n", &name)?,
                    k: need(*k, "k", &name)?,
                },
                Kind::DisjointBlocks => GeneratorSpec::DisjointBlocks {
                    m: need(*m, "m", &name)?,
                    k: need(*k, "k", &name)?,
                },
                Kind::RandomKuniform => GeneratorSpec::RandomKuniform {
                    n: need(*n, "n", &name)?,
                    k: need(*k, "k", &name)?,
                    m: need(*m, "m", &name)?,
                    seed: cli.seed,
                },
                Kind::FromFractional => {
                    let (inst, _) = load(need(cover.as_deref(), "cover", &name)?)?;
                    let w = inst
                        .cover
                        .ok_or_else(|| Failure::Lib(Error::input("cover file has no fractional_cover")))?;
                    GeneratorSpec::FromFractional {
                        cover: w.iter().map(|(s, x)| (s.to_vec(), x)).collect(),
                        n: w.n(),
                        minimal: *minimal,
                    }
                }
            };
            let generated = spec.generate()?;
            let mut inst = Instance::new(generated.family);
            inst.cover = generated.cover;
            Ok(Report::json(serde_json::to_value(inst.to_file())?))
        }
        Command::Cint { instance } => {
            let (inst, hash) = load(instance)?;
            let p = need_p(cli)?;
            let sol = CoverProblem::new(&inst.family, solver_config(cli))?.solve_int(p)?;
            let json = json!({
                "cost": sol.cost,
                "cover": lists(&sol.cover),
                "optimal": sol.optimal,
                "p": p,
            });
            let csv = format!("p,cost,optimal,size\n{},{},{},{}\n", p, sol.cost, sol.optimal, sol.cover.len());
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(json)
            })
        }
        Command::Cfrac { instance } => {
            let (inst, hash) = load(instance)?;
            let p = need_p(cli)?;
            let sol = CoverProblem::new(&inst.family, solver_config(cli))?.solve_frac(p)?;
            let (cover, weights): (Vec<Vec<usize>>, Vec<f64>) =
                sol.weights.iter().map(|(s, x)| (s.to_vec(), x)).unzip();
            let json = json!({
                "cost": sol.cost,
                "cover": cover,
                "weights": weights,
                "optimal": true,
                "p": p,
            });
            let csv = format!("p,cost,support\n{},{},{}\n", p, sol.cost, sol.weights.len());
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(json)
            })
        }
        Command::Pe { instance } | Command::Pf { instance } => {
            let (inst, hash) = load(instance)?;
            let prob = CoverProblem::new(&inst.family, solver_config(cli))?;
            let est = if matches!(cli.command, Command::Pe { .. }) {
                prob.threshold_pe()?
            } else {
                prob.threshold_pf()?
            };
            let csv = format!(
                "value,lo,hi,tol,degenerate\n{},{},{},{},{}\n",
                est.value, est.lo, est.hi, est.tol, est.degenerate
            );
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(serde_json::to_value(est)?)
            })
        }
        Command::PcMc { instance } => {
            let (inst, hash) = load(instance)?;
            let est = estimate_pc(&inst.family, &mc_config(cli, 10_000, 16.0), cli.tol)?;
            let csv = format!(
                "value,lo,hi,stderr,trials,seed\n{},{},{},{},{},{}\n",
                est.threshold.value, est.threshold.lo, est.threshold.hi, est.stderr, est.trials, est.seed
            );
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(serde_json::to_value(est)?)
            })
        }
        Command::Tower { instance, samples } => {
            let (inst, hash) = load(instance)?;
            let samples = parse_samples(samples, inst.n())?;
            let lambdas = inst.lambdas_or_uniform()?;
            let budget = TowerBudget::default();
            let certs = inst
                .family
                .members()
                .iter()
                .map(|h| {
                    let cert = minimum_tower(&samples, h, &inst.family, &lambdas, &budget)?;
                    Ok(json!({ "host": h, "certificate": cert }))
                })
                .collect::<threshold_lab::Result<Vec<_>>>()?;
            let cover = tower_cover(&samples, &inst.family, &lambdas, &budget)?;
            Ok(Report {
                instance_hash: Some(hash),
                ..Report::json(json!({ "samples": samples, "towers": certs, "cover": lists(&cover) }))
            })
        }
        Command::SelectorMc {
            instance,
            multiplier,
            sweep,
        } => {
            let (inst, hash) = load(instance)?;
            let p = need_p(cli)?;
            let s = rounds(cli)?;
            let lambdas = inst.lambdas_or_uniform()?;
            let sol = CoverProblem::new(&inst.family, solver_config(cli))?.solve_int(p)?;
            let evidence = NotSmallEvidence::Integral(sol);
            let cfg = mc_config(cli, 10_000, *multiplier);
            let (reports, smallest) = if *sweep {
                multiplier_sweep(&inst.family, &lambdas, p, s, &evidence, &cfg)?
            } else {
                let r = estimate_amplified_success(&inst.family, &lambdas, p, s, &evidence, &cfg)?;
                let ok = (r.estimate >= 1.0 / 3.0).then_some(*multiplier);
                (vec![r], ok)
            };
            Ok(Report {
                csv: Some(report_csv(&reports)),
                instance_hash: Some(hash),
                ..Report::json(json!({ "reports": reports, "smallest_multiplier": smallest }))
            })
        }
        Command::KeyLemmaMc { instance, multiplier } => {
            let (inst, hash) = load(instance)?;
            let p = need_p(cli)?;
            let s = rounds(cli)?;
            let lambdas = inst.lambdas_or_uniform()?;
            let r = estimate_key_lemma(
                &inst.family,
                &lambdas,
                p,
                s,
                &mc_config(cli, 10_000, *multiplier),
                &TowerBudget::default(),
            )?;
            Ok(Report {
                csv: Some(report_csv(std::slice::from_ref(&r))),
                instance_hash: Some(hash),
                ..Report::json(serde_json::to_value(r)?)
            })
        }
        Command::Sharpness { n } => {
            let s = cli.s.unwrap_or(1.0);
            let r = sharpness_demo(*n, s, &mc_config(cli, 10_000, 16.0))?;
            let mut csv = String::from("n,s,mean_isolated,stderr,closed_form,coverage_bound,trials,seed\n");
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                r.n, r.s, r.isolated.estimate, r.isolated.stderr, r.closed_form, r.coverage_bound, r.isolated.trials, cli.seed
            );
            Ok(Report {
                csv: Some(csv),
                ..Report::json(serde_json::to_value(r)?)
            })
        }
        Command::Round { instance } => {
            let (inst, hash) = load(instance)?;
            let w = inst
                .cover
                .as_ref()
                .ok_or_else(|| Failure::Lib(Error::input("instance has no fractional_cover")))?;
            let p = need_p(cli)?;
            let cfg = RoundConfig {
                q: cli.q,
                s: rounds(cli)?,
                mc: mc_config(cli, 100, 16.0),
                budget: TowerBudget::default(),
            };
            let out = tower_round(w, &inst.family, p, &cfg)?;
            let mut csv = String::from("trial,q,cost\n");
            for (i, c) in &out.costs {
                let _ = writeln!(csv, "{},{},{}", i, out.q, c);
            }
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(json!({
                    "p": p,
                    "q": out.q,
                    "best_cover": lists(&out.best_cover),
                    "best_cost": out.best_cost,
                    "costs": out.costs,
                }))
            })
        }
        Command::VerifyMain {
            instance,
            sweep,
            points,
        } => {
            let (inst, hash) = load(instance)?;
            let w = inst
                .cover
                .as_ref()
                .ok_or_else(|| Failure::Lib(Error::input("instance has no fractional_cover")))?;
            let p = match cli.p {
                Some(p) => p,
                None => cover_threshold(w, cli.tol)?,
            };
            // Tower rounding only runs when a trial count is given.
            let round = match cli.trials {
                Some(trials) => Some(RoundConfig {
                    q: cli.q,
                    s: rounds(cli)?,
                    mc: mc_config(cli, trials, 16.0),
                    budget: TowerBudget::default(),
                }),
                None => None,
            };
            let report = verify_main_theorem(w, &inst.family, p, solver_config(cli), round.as_ref())?;
            let table = cost_sweep(&inst.family, *points, solver_config(cli))?;
            let mut csv = String::from("q,c_int,c_frac\n");
            for (q, ci, cf) in &table {
                let _ = writeln!(csv, "{q},{ci},{cf}");
            }
            if let Some(path) = sweep {
                write_atomic(path, csv.as_bytes())?;
            }
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                ..Report::json(serde_json::to_value(report)?)
            })
        }
        Command::VerifyAll { instance } => {
            let (inst, hash) = load(instance)?;
            let summary = verify_all(&inst, solver_config(cli), cli.seed);
            let mut csv = String::from("check,passed,failed,skipped,note\n");
            for c in &summary.checks {
                let _ = writeln!(csv, "{},{},{},{},{}", c.name, c.passed, c.failed, c.skipped, c.note);
            }
            Ok(Report {
                csv: Some(csv),
                instance_hash: Some(hash),
                passed: summary.ok(),
                json: serde_json::to_value(&summary)?,
            })
        }
    }
}
