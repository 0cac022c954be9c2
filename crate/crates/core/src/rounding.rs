//! From fractional covers to integral ones.
//!
//! Given a fractional cover `w`, each host `H` receives the weight vector
//!
//! ```text
//! λ_H(x) = Σ_{W ∋ x, W ⊆ H} w(W)/|W|  /  Σ_{W ⊆ H, W ≠ ∅} w(W)
//! ```
//!
//! which sums to one over `H`. For any `S`, `λ_H(S)` equals one minus the
//! `w`-weighted fraction of support sets inside `H` that `S` misses, and is at
//! most `1 - 1/t + Σ_{W ⊆ H ∩ S} w(W) / (t Σ_{W ⊆ H} w(W))` when support sets
//! have at most `t` elements. Empty support sets carry no element mass and
//! are left out of every sum here.
//!
//! The rest of the module measures integrality gaps: the largest `q` at
//! which the family is integrally `q`-small, compared against `p`, and the
//! costs of covers built from towers of minimum fragments.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::fragments::{tower_cover, TowerBudget};
use crate::montecarlo::McConfig;
use crate::rng::{sample_subset, Streams};
use crate::solvers::{CoverProblem, SolverConfig};
use crate::subset::Subset;
use crate::system::{cost_of, is_fractional_cover, FractionalCover, Lambdas, SetSystem, WeightVector};

/// Tolerance for the floating-point coverage identity.
pub const IDENTITY_TOL: f64 = 1e-9;

fn inside<'a>(w: &'a FractionalCover, h: &'a Subset) -> impl Iterator<Item = (&'a Subset, f64)> + 'a {
    w.iter().filter(move |(s, _)| !s.is_empty() && s.is_subset(h))
}

/// The weight vector `λ_H` induced by `w`.
pub fn build_lambda(w: &FractionalCover, h: &Subset) -> Result<WeightVector> {
    let mut numer: BTreeMap<usize, f64> = BTreeMap::new();
    let mut denom = 0.0;
    for (set, x) in inside(w, h) {
        let share = x / set.len() as f64;
        for e in set.iter() {
            *numer.entry(e).or_default() += share;
            denom += share;
        }
    }
    if denom <= 0.0 {
        return Err(Error::input(format!(
            "{:?} contains no nonempty support set of w",
            h
        )));
    }
    WeightVector::new(
        w.n(),
        *h,
        numer.into_iter().map(|(e, v)| (e, (v / denom).min(1.0))),
    )
}

/// `λ_H` for every member of `family`.
pub fn build_lambdas(w: &FractionalCover, family: &SetSystem) -> Result<Lambdas> {
    let vectors = family
        .members()
        .iter()
        .map(|h| build_lambda(w, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(Lambdas::from_aligned(vectors))
}

/// Both sides of the coverage identity: `(λ_H(S), 1 - missed/total)`.
pub fn coverage_identity_sides(w: &FractionalCover, h: &Subset, s: &Subset) -> Result<(f64, f64)> {
    let lambda = build_lambda(w, h)?;
    let mut total = 0.0;
    let mut missed = 0.0;
    for (set, x) in inside(w, h) {
        total += x;
        if !set.is_subset(s) {
            missed += x * (*set - *s).len() as f64 / set.len() as f64;
        }
    }
    Ok((lambda.mass(s), 1.0 - missed / total))
}

pub fn verify_coverage_identity(w: &FractionalCover, h: &Subset, s: &Subset) -> Result<bool> {
    let (lhs, rhs) = coverage_identity_sides(w, h, s)?;
    Ok((lhs - rhs).abs() <= IDENTITY_TOL)
}

/// `1 - 1/t + Σ_{W ⊆ H ∩ S} w(W) / (t Σ_{W ⊆ H} w(W))` with `t` the
/// support size bound of `w`.
pub fn coverage_upper_bound(w: &FractionalCover, h: &Subset, s: &Subset) -> Result<f64> {
    let t = w.support_bound().max(1) as f64;
    let mut total = 0.0;
    let mut kept = 0.0;
    for (set, x) in inside(w, h) {
        total += x;
        if set.is_subset(s) {
            kept += x;
        }
    }
    if total <= 0.0 {
        return Err(Error::input("host contains no nonempty support set"));
    }
    Ok(1.0 - 1.0 / t + kept / (t * total))
}

/// A fractional cover with exact rational weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactCover {
    n: usize,
    entries: BTreeMap<Subset, BigRational>,
}

impl ExactCover {
    /// Weights given as `(numerator, denominator)` pairs, each in `[0, 1]`.
    pub fn new(n: usize, entries: impl IntoIterator<Item = (Subset, i64, i64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (set, num, den) in entries {
            if !set.fits(n) {
                return Err(Error::input("support set outside the ground set"));
            }
            if den <= 0 || num < 0 || num > den {
                return Err(Error::input(format!("weight {num}/{den} outside [0, 1]")));
            }
            if num > 0 {
                map.insert(set, BigRational::new(BigInt::from(num), BigInt::from(den)));
            }
        }
        Ok(ExactCover { n, entries: map })
    }

    /// Floating-point image of the cover.
    pub fn to_float(&self) -> Result<FractionalCover> {
        FractionalCover::new(
            self.n,
            self.entries.iter().map(|(s, x)| {
                let f = num_traits::ToPrimitive::to_f64(x).expect("finite rational");
                (*s, f)
            }),
        )
    }

    fn inside<'a>(&'a self, h: &'a Subset) -> impl Iterator<Item = (&'a Subset, &'a BigRational)> + 'a {
        self.entries
            .iter()
            .filter(move |(s, _)| !s.is_empty() && s.is_subset(h))
    }

    /// Exact `λ_H` as `(element, weight)` pairs over the host.
    pub fn lambda(&self, h: &Subset) -> Result<BTreeMap<usize, BigRational>> {
        let mut numer: BTreeMap<usize, BigRational> = h.iter().map(|e| (e, BigRational::zero())).collect();
        let mut denom = BigRational::zero();
        for (set, x) in self.inside(h) {
            let share = x / BigRational::from_integer(BigInt::from(set.len()));
            for e in set.iter() {
                *numer.get_mut(&e).expect("support set inside host") += &share;
                denom += &share;
            }
        }
        if denom.is_zero() {
            return Err(Error::input("host contains no nonempty support set"));
        }
        Ok(numer.into_iter().map(|(e, v)| (e, v / &denom)).collect())
    }

    /// `Σ_y Σ_{W ∋ y, W ⊆ H} w(W)/|W| == Σ_{W ⊆ H} w(W)`, exactly.
    pub fn denominator_identity(&self, h: &Subset) -> bool {
        let mut per_element = BigRational::zero();
        let mut total = BigRational::zero();
        for (set, x) in self.inside(h) {
            total += x;
            let share = x / BigRational::from_integer(BigInt::from(set.len()));
            for _ in set.iter() {
                per_element += &share;
            }
        }
        per_element == total
    }

    /// The coverage identity evaluated in exact arithmetic.
    pub fn coverage_identity(&self, h: &Subset, s: &Subset) -> Result<bool> {
        let lambda = self.lambda(h)?;
        let lhs: BigRational = lambda
            .iter()
            .filter(|(e, _)| s.contains(**e))
            .map(|(_, v)| v.clone())
            .sum();
        let mut total = BigRational::zero();
        let mut missed = BigRational::zero();
        for (set, x) in self.inside(h) {
            total += x;
            let gone = (*set - *s).len();
            if gone > 0 {
                missed += x * BigRational::new(BigInt::from(gone), BigInt::from(set.len()));
            }
        }
        let rhs = BigRational::one() - missed / total;
        Ok(lhs == rhs)
    }

    /// Exact `Σ_{x ∈ H} λ_H(x) == 1`.
    pub fn lambda_sums_to_one(&self, h: &Subset) -> Result<bool> {
        let total: BigRational = self.lambda(h)?.into_values().sum();
        Ok(total.is_one())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundConfig {
    /// Sampling density for tower covers; `None` samples at `p`.
    pub q: Option<f64>,
    /// Sample rounds per trial.
    pub s: usize,
    pub mc: McConfig,
    pub budget: TowerBudget,
}

impl Default for RoundConfig {
    fn default() -> Self {
        RoundConfig {
            q: None,
            s: 1,
            mc: McConfig {
                trials: 100,
                ..McConfig::default()
            },
            budget: TowerBudget::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerRoundOutcome {
    pub q: f64,
    pub best_cover: SetSystem,
    pub best_cost: f64,
    /// `(trial index, cost at q)` for every trial.
    pub costs: Vec<(u64, f64)>,
}

/// Samples `W_1..W_s ~ X_q` per trial, builds the tower cover with the
/// weight vectors induced by `w`, and keeps the cheapest cover at `q`.
pub fn tower_round(
    w: &FractionalCover,
    family: &SetSystem,
    p: f64,
    cfg: &RoundConfig,
) -> Result<TowerRoundOutcome> {
    check_probability(p)?;
    let q = cfg.q.unwrap_or(p);
    check_probability(q)?;
    if cfg.s == 0 || cfg.mc.trials == 0 {
        return Err(Error::input("rounds and trials must be positive"));
    }
    if !is_fractional_cover(w, family)? {
        return Err(Error::input("w is not a fractional cover of the family"));
    }
    cfg.budget.check(family, cfg.s)?;
    let lambdas = build_lambdas(w, family)?;
    let n = family.n();
    let streams = Streams::new(cfg.mc.seed, "tower-round");
    let covers: Vec<SetSystem> = (0..cfg.mc.trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = streams.trial(i);
            let samples: Vec<Subset> = (0..cfg.s).map(|_| sample_subset(n, q, &mut rng)).collect();
            tower_cover(&samples, family, &lambdas, &cfg.budget)
        })
        .collect::<Result<_>>()?;
    let costs: Vec<(u64, f64)> = covers
        .iter()
        .enumerate()
        .map(|(i, c)| (i as u64, cost_of(c.members(), q)))
        .collect();
    let (best_idx, best_cost) = costs
        .iter()
        .fold((0usize, f64::INFINITY), |(bi, bc), &(i, c)| {
            if c < bc {
                (i as usize, c)
            } else {
                (bi, bc)
            }
        });
    Ok(TowerRoundOutcome {
        q,
        best_cover: covers[best_idx].clone(),
        best_cost,
        costs,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundingReport {
    pub p: f64,
    /// Support size bound of `w`.
    pub t: usize,
    /// Largest certified `q` with integral cover cost at most one half.
    pub best_q: f64,
    /// Smallest probed `q` where the family was not `q`-small.
    pub best_q_upper: f64,
    pub p_f: f64,
    pub gap_ratio: f64,
    /// `ln(t + 1)`.
    pub log_comparator: f64,
    /// `gap_ratio / ln(t + 1)`.
    pub constant_estimate: f64,
    /// `Σ_W w(W) p^|W|`.
    pub w_cost_at_p: f64,
    pub frac_cost_at_p: f64,
    pub tower_q: Option<f64>,
    pub tower_cover_costs: Vec<(u64, f64)>,
}

/// Measures the integrality gap for a fractionally `p`-small cover `w`.
///
/// Only `best_q > 0` and a finite gap are guaranteed; the ratio against
/// `ln(t + 1)` is reported, not bounded.
pub fn verify_main_theorem(
    w: &FractionalCover,
    family: &SetSystem,
    p: f64,
    solver: SolverConfig,
    round: Option<&RoundConfig>,
) -> Result<RoundingReport> {
    check_probability(p)?;
    let w_cost = w.cost(p)?;
    if w_cost > solver.small_threshold + crate::system::TOL {
        return Err(Error::input(format!(
            "w is not fractionally p-small: cost {w_cost} at p = {p}"
        )));
    }
    if !is_fractional_cover(w, family)? {
        return Err(Error::input("w is not a fractional cover of the family"));
    }
    let t = w.support_bound();
    if t == 0 {
        return Err(Error::input("w must have a nonempty support set"));
    }
    let prob = CoverProblem::new(family, solver)?;
    let pe = prob.threshold_pe()?;
    let pf = prob.threshold_pf()?;
    let frac_cost_at_p = prob.solve_frac(p)?.cost;
    let best_q = pe.lo;
    if !(best_q > 0.0) {
        return Err(Error::input("family is not q-small for any q > 0"));
    }
    let gap_ratio = p / best_q;
    let log_comparator = ((t + 1) as f64).ln();
    let (tower_q, tower_cover_costs) = match round {
        Some(cfg) => {
            let out = tower_round(w, family, p, cfg)?;
            (Some(out.q), out.costs)
        }
        None => (None, Vec::new()),
    };
    Ok(RoundingReport {
        p,
        t,
        best_q,
        best_q_upper: pe.hi,
        p_f: pf.value,
        gap_ratio,
        log_comparator,
        constant_estimate: gap_ratio / log_comparator,
        w_cost_at_p: w_cost,
        frac_cost_at_p,
        tower_q,
        tower_cover_costs,
    })
}

/// Largest `p` with `Σ w(W) p^|W| <= 1/2`, by bisection.
pub fn cover_threshold(w: &FractionalCover, tol: f64) -> Result<f64> {
    let est = crate::solvers::bisect(|p| Ok(w.cost(p)? <= 0.5), tol)?;
    Ok(est.lo)
}

/// `(q, c_int, c_frac)` on an even grid of `points` densities in `(0, 1]`.
pub fn cost_sweep(family: &SetSystem, points: usize, solver: SolverConfig) -> Result<Vec<(f64, f64, f64)>> {
    let prob = CoverProblem::new(family, solver)?;
    (1..=points)
        .map(|k| {
            let q = k as f64 / points as f64;
            Ok((q, prob.solve_int(q)?.cost, prob.solve_frac(q)?.cost))
        })
        .collect()
}
