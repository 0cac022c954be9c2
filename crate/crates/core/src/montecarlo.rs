//! Seeded Monte Carlo experiments for the selector process: bad sample
//! tuples, the bad-tuple cover cost, amplified success frequencies, the
//! union-of-samples distribution, threshold estimation and the perfect
//! matching sharpness demonstration.
//!
//! Trials run in parallel; per-trial values are collected in trial order and
//! reduced sequentially, so estimates are bitwise reproducible for a seed.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::fragments::{minimum_tower, tower_cover, TowerBudget};
use crate::rng::{sample_subset, Streams};
use crate::solvers::{bisect, FractionalSolution, IntegerSolution, ThresholdEstimate};
use crate::subset::Subset;
use crate::system::{cost_of, is_cover, Lambdas, SetSystem, TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampPolicy {
    /// Clamp the sampling density to one and flag the report.
    #[default]
    Flag,
    /// Refuse densities above one.
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    pub clamp: ClampPolicy,
    /// Density multiplier: samples are drawn at `multiplier * s * p` for the
    /// amplified selector and at `multiplier * p` for the cover-cost lemma.
    pub multiplier: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            trials: 10_000,
            seed: 0,
            clamp: ClampPolicy::Flag,
            multiplier: 16.0,
        }
    }
}

/// Echo of the sampling parameters behind a report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub p: f64,
    /// Density actually sampled.
    pub q: f64,
    pub s: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub config: SampleConfig,
    /// The requested density exceeded one and was clamped.
    pub clamped: bool,
    pub wall_time_ms: f64,
}

impl ExperimentReport {
    pub fn csv_header() -> &'static str {
        "experiment,estimate,stderr,trials,p,q,s,seed,clamped,wall_time_ms"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{:.3}",
            self.experiment,
            self.estimate,
            self.stderr,
            self.trials,
            self.config.p,
            self.config.q,
            self.config.s,
            self.config.seed,
            self.clamped,
            self.wall_time_ms
        )
    }
}

fn check_trials(cfg: &McConfig) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::input("trials must be at least 1"));
    }
    Ok(())
}

fn clamp_density(q: f64, policy: ClampPolicy) -> Result<(f64, bool)> {
    if q <= 1.0 {
        return Ok((q, false));
    }
    match policy {
        ClampPolicy::Flag => Ok((1.0, true)),
        ClampPolicy::Error => Err(Error::input(format!(
            "sampling density {q} exceeds 1; choose a smaller p"
        ))),
    }
}

/// Mean and standard error of per-trial values, reduced in order.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of a frequency estimate.
pub fn frequency_stderr(freq: f64, trials: usize) -> f64 {
    (freq * (1.0 - freq) / trials as f64).sqrt()
}

fn run_trials<F>(cfg: &McConfig, label: &str, f: F) -> Result<Vec<f64>>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> Result<f64> + Sync,
{
    let streams = Streams::new(cfg.seed, label);
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| f(&mut streams.trial(i)))
        .collect()
}

fn union_of(samples: &[Subset]) -> Subset {
    samples.iter().fold(Subset::empty(), |a, w| a | *w)
}

fn success_level(s: usize) -> f64 {
    1.0 - 0.5f64.powi(s as i32)
}

/// True iff every member's weight on the union of the samples stays below
/// `1 - 2^{-s}`, with `s` the number of samples.
pub fn is_bad(samples: &[Subset], lambdas: &Lambdas) -> bool {
    let u = union_of(samples);
    let level = success_level(samples.len());
    lambdas.iter().all(|l| l.mass(&u) < level - TOL)
}

/// A bad tuple forces every minimum tower to be nonempty. Returns true when
/// the tuple is not bad or when all minimum towers have positive size.
pub fn bad_implies_nonempty_check(
    samples: &[Subset],
    family: &SetSystem,
    lambdas: &Lambdas,
    budget: &TowerBudget,
) -> Result<bool> {
    if !is_bad(samples, lambdas) {
        return Ok(true);
    }
    for h in family.members() {
        if minimum_tower(samples, h, family, lambdas, budget)?.is_empty_tower() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `1(W bad) * sum over U in U(W) of p^|U|` for one sample tuple.
pub fn key_lemma_integrand(
    samples: &[Subset],
    family: &SetSystem,
    lambdas: &Lambdas,
    p: f64,
    budget: &TowerBudget,
) -> Result<f64> {
    if !is_bad(samples, lambdas) {
        return Ok(0.0);
    }
    let cover = tower_cover(samples, family, lambdas, budget)?;
    Ok(cost_of(cover.members(), p))
}

/// Monte Carlo estimate of `E[1(W bad) sum_{U in U(W)} p^|U|]` with
/// `W_1..W_s ~ X_q`, `q = multiplier * p`.
pub fn estimate_key_lemma(
    family: &SetSystem,
    lambdas: &Lambdas,
    p: f64,
    s: usize,
    cfg: &McConfig,
    budget: &TowerBudget,
) -> Result<ExperimentReport> {
    check_probability(p)?;
    check_trials(cfg)?;
    if s == 0 {
        return Err(Error::input("s must be at least 1"));
    }
    let q = cfg.multiplier * p;
    if q > 1.0 {
        return Err(Error::input(format!(
            "q = {q} exceeds 1; choose p <= {}",
            1.0 / cfg.multiplier
        )));
    }
    budget.check(family, s)?;
    lambdas.check_unit_mass()?;
    let n = family.n();
    let start = Instant::now();
    let values = run_trials(cfg, "key-lemma", |rng| {
        let samples: Vec<Subset> = (0..s).map(|_| sample_subset(n, q, rng)).collect();
        key_lemma_integrand(&samples, family, lambdas, p, budget)
    })?;
    let (estimate, stderr) = mean_stderr(&values);
    Ok(ExperimentReport {
        experiment: "key-lemma".into(),
        estimate,
        stderr,
        trials: cfg.trials,
        config: SampleConfig {
            p,
            q,
            s,
            trials: cfg.trials,
            seed: cfg.seed,
        },
        clamped: false,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Certificate that a family is not `p`-small: an optimal integral cover or
/// any fractional cover (a lower bound) with cost above one half, computed at
/// some density no larger than `p`.
#[derive(Clone, Debug)]
pub enum NotSmallEvidence {
    Integral(IntegerSolution),
    Fractional(FractionalSolution),
}

impl NotSmallEvidence {
    pub fn check(&self, family: &SetSystem, p: f64) -> Result<()> {
        let (cost, at) = match self {
            NotSmallEvidence::Integral(sol) => {
                if !sol.optimal {
                    return Err(Error::input("heuristic covers do not certify largeness"));
                }
                if !is_cover(&sol.cover, family)? {
                    return Err(Error::input("evidence cover does not cover the family"));
                }
                (sol.cost, sol.p)
            }
            NotSmallEvidence::Fractional(sol) => {
                if !crate::system::is_fractional_cover(&sol.weights, family)? {
                    return Err(Error::input("evidence weights do not cover the family"));
                }
                (sol.cost, sol.p)
            }
        };
        if at > p {
            return Err(Error::input(format!(
                "evidence computed at p = {at} above the requested p = {p}"
            )));
        }
        if cost <= 0.5 + TOL {
            return Err(Error::input(format!(
                "evidence cost {cost} does not exceed 1/2; the family may be p-small"
            )));
        }
        Ok(())
    }
}

/// Frequency of `max_H λ_H(X_q) >= 1 - 2^{-s}` with `q = multiplier * s * p`.
pub fn estimate_amplified_success(
    family: &SetSystem,
    lambdas: &Lambdas,
    p: f64,
    s: usize,
    evidence: &NotSmallEvidence,
    cfg: &McConfig,
) -> Result<ExperimentReport> {
    check_probability(p)?;
    check_trials(cfg)?;
    if s == 0 {
        return Err(Error::input("s must be at least 1"));
    }
    evidence.check(family, p)?;
    lambdas.check_unit_mass()?;
    let (q, clamped) = clamp_density(cfg.multiplier * s as f64 * p, cfg.clamp)?;
    let level = success_level(s);
    let n = family.n();
    let start = Instant::now();
    let values = run_trials(cfg, "selector", |rng| {
        let x = sample_subset(n, q, rng);
        Ok(if lambdas.max_mass(&x) >= level - TOL {
            1.0
        } else {
            0.0
        })
    })?;
    let estimate = values.iter().sum::<f64>() / cfg.trials as f64;
    Ok(ExperimentReport {
        experiment: "selector".into(),
        estimate,
        stderr: frequency_stderr(estimate, cfg.trials),
        trials: cfg.trials,
        config: SampleConfig {
            p,
            q,
            s,
            trials: cfg.trials,
            seed: cfg.seed,
        },
        clamped,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Multipliers tried when searching for the smallest one reaching a success
/// frequency of one third.
pub const MULTIPLIERS: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

/// The sweep over [`MULTIPLIERS`] and the smallest multiplier whose success
/// frequency reaches one third, if any.
pub fn multiplier_sweep(
    family: &SetSystem,
    lambdas: &Lambdas,
    p: f64,
    s: usize,
    evidence: &NotSmallEvidence,
    cfg: &McConfig,
) -> Result<(Vec<ExperimentReport>, Option<f64>)> {
    let mut reports = Vec::new();
    let mut smallest = None;
    for alpha in MULTIPLIERS {
        let c = McConfig {
            multiplier: alpha,
            clamp: ClampPolicy::Flag,
            ..*cfg
        };
        let r = estimate_amplified_success(family, lambdas, p, s, evidence, &c)?;
        if smallest.is_none() && r.estimate >= 1.0 / 3.0 {
            smallest = Some(alpha);
        }
        reports.push(r);
    }
    Ok((reports, smallest))
}

/// Per-element inclusion frequencies of `W_1 ∪ .. ∪ W_s`, `W_i ~ X_q`,
/// with their frequency standard errors.
pub fn union_inclusion_frequencies(
    n: usize,
    q: f64,
    s: usize,
    cfg: &McConfig,
) -> Result<Vec<(f64, f64)>> {
    check_probability(q)?;
    check_trials(cfg)?;
    let unions: Vec<Subset> = {
        let streams = Streams::new(cfg.seed, "union");
        (0..cfg.trials as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = streams.trial(i);
                (0..s).fold(Subset::empty(), |a, _| a | sample_subset(n, q, &mut rng))
            })
            .collect()
    };
    Ok((0..n)
        .map(|x| {
            let hits = unions.iter().filter(|u| u.contains(x)).count();
            let f = hits as f64 / cfg.trials as f64;
            (f, frequency_stderr(f, cfg.trials))
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub threshold: ThresholdEstimate,
    /// Standard error of the empirical probability at the estimate.
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Estimates the `p` at which `X_p` contains a member with probability
/// one half.
///
/// Trials share uniforms across densities (`x ∈ X_p` iff `u_x < p`), so the
/// empirical probability is monotone in `p` and bisection is well posed.
pub fn estimate_pc(family: &SetSystem, cfg: &McConfig, tol: f64) -> Result<PcEstimate> {
    check_trials(cfg)?;
    if family.is_empty() {
        return Err(Error::input("threshold of an empty family is undefined"));
    }
    let n = family.n();
    let streams = Streams::new(cfg.seed, "pc");
    // Per trial, the smallest p at which some member is fully sampled.
    let critical: Vec<f64> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.trial(i);
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            family
                .members()
                .iter()
                .map(|h| h.iter().map(|x| u[x]).fold(0.0, f64::max))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let prob = |p: f64| critical.iter().filter(|&&c| c < p).count() as f64 / cfg.trials as f64;
    let threshold = bisect(|p| Ok(prob(p) < 0.5), tol)?;
    let f = prob(threshold.value);
    Ok(PcEstimate {
        threshold,
        stderr: frequency_stderr(f, cfg.trials),
        trials: cfg.trials,
        seed: cfg.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    /// Mean isolated-vertex count in `G(n, s/n)`.
    pub isolated: ExperimentReport,
    /// `n (1 - s/n)^{n-1}`.
    pub closed_form: f64,
    /// Mean of `1 - isolated/n`, an upper bound on the best weight a perfect
    /// matching with uniform weights keeps inside the sample.
    pub coverage_bound: f64,
    pub n: usize,
    pub s: f64,
}

/// Samples `G(n, s/n)` and counts isolated vertices.
pub fn sharpness_demo(n: usize, s: f64, cfg: &McConfig) -> Result<SharpnessReport> {
    check_trials(cfg)?;
    if n < 2 || n % 2 == 1 {
        return Err(Error::input(format!("n must be even and at least 2, got {n}")));
    }
    let p = s / n as f64;
    check_probability(p)?;
    let start = Instant::now();
    let values = run_trials(cfg, "sharpness", |rng| {
        Ok(isolated_vertices(n, &sample_graph(n, p, rng)) as f64)
    })?;
    let (estimate, stderr) = mean_stderr(&values);
    let closed_form = n as f64 * (1.0 - p).powi(n as i32 - 1);
    Ok(SharpnessReport {
        isolated: ExperimentReport {
            experiment: "sharpness".into(),
            estimate,
            stderr,
            trials: cfg.trials,
            config: SampleConfig {
                p,
                q: p,
                s: s.round() as usize,
                trials: cfg.trials,
                seed: cfg.seed,
            },
            clamped: false,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        },
        closed_form,
        coverage_bound: 1.0 - estimate / n as f64,
        n,
        s,
    })
}

/// Edge list of `G(n, p)`, edges in lexicographic order.
pub fn sample_graph(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn isolated_vertices(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut deg = vec![0u32; n];
    for &(i, j) in edges {
        deg[i] += 1;
        deg[j] += 1;
    }
    deg.iter().filter(|&&d| d == 0).count()
}
