//! Runs the invariant checks of every module against a single instance.

use serde::Serialize;

use threshold_lab::fragments::{
    certify_tower, cutoff, decode_fragments, fallback_tower, minimum_tower, tower_cover,
    TowerBudget,
};
use threshold_lab::instance::Instance;
use threshold_lab::montecarlo::bad_implies_nonempty_check;
use threshold_lab::rng::{sample_subset, Streams};
use threshold_lab::rounding::{build_lambda, coverage_upper_bound, verify_coverage_identity};
use threshold_lab::solvers::{CoverProblem, SolverConfig};
use threshold_lab::system::{cover_cost, is_cover, is_fractional_cover};
use threshold_lab::{Result, Subset};

const GRID: usize = 19;
const CUTOFF_DRAWS: u64 = 64;
const TOWER_DRAWS: u64 = 24;
const IDENTITY_DRAWS: u64 = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    pub skipped: bool,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<CheckResult>,
    /// Some checks were skipped because a budget was exceeded.
    pub partial: bool,
    pub total_passed: usize,
    pub total_failed: usize,
}

impl VerifySummary {
    pub fn ok(&self) -> bool {
        self.total_failed == 0
    }
}

#[derive(Default)]
struct Suite {
    checks: Vec<CheckResult>,
    partial: bool,
}

impl Suite {
    fn tally(&mut self, name: &str, outcomes: impl IntoIterator<Item = bool>) {
        let (mut passed, mut failed) = (0, 0);
        for ok in outcomes {
            if ok {
                passed += 1;
            } else {
                failed += 1;
            }
        }
        self.checks.push(CheckResult {
            name: name.into(),
            passed,
            failed,
            skipped: false,
            note: String::new(),
        });
    }

    fn skip(&mut self, name: &str, note: impl Into<String>, budget: bool) {
        self.partial |= budget;
        self.checks.push(CheckResult {
            name: name.into(),
            passed: 0,
            failed: 0,
            skipped: true,
            note: note.into(),
        });
    }

    /// Runs `f`; a budget error skips the check, other errors count as one
    /// failure.
    fn run(&mut self, name: &str, f: impl FnOnce() -> Result<Vec<bool>>) {
        match f() {
            Ok(outcomes) => self.tally(name, outcomes),
            Err(e) if e.is_resource() => self.skip(name, e.to_string(), true),
            Err(e) => self.checks.push(CheckResult {
                name: name.into(),
                passed: 0,
                failed: 1,
                skipped: false,
                note: e.to_string(),
            }),
        }
    }

    fn finish(self) -> VerifySummary {
        VerifySummary {
            total_passed: self.checks.iter().map(|c| c.passed).sum(),
            total_failed: self.checks.iter().map(|c| c.failed).sum(),
            checks: self.checks,
            partial: self.partial,
        }
    }
}

fn grid() -> impl Iterator<Item = f64> {
    (1..=GRID).map(|k| k as f64 / (GRID + 1) as f64)
}

/// Runs every invariant check that fits the budgets. Deterministic in
/// `(instance, config, seed)`.
pub fn verify_all(inst: &Instance, config: SolverConfig, seed: u64) -> VerifySummary {
    let mut suite = Suite::default();
    let family = &inst.family;
    let n = inst.n();

    match &inst.candidate {
        Some(c) => suite.run("candidate_is_cover", || Ok(vec![is_cover(c, family)?])),
        None => suite.skip("candidate_is_cover", "no candidate cover", false),
    }
    match &inst.cover {
        Some(w) => suite.run("fractional_cover_covers", || Ok(vec![is_fractional_cover(w, family)?])),
        None => suite.skip("fractional_cover_covers", "no fractional cover", false),
    }

    match CoverProblem::new(family, config) {
        Ok(prob) => {
            suite.run("int_cover_valid", || {
                grid()
                    .map(|p| {
                        let sol = prob.solve_int(p)?;
                        let cost = cover_cost(&sol.cover, p)?;
                        Ok(is_cover(&sol.cover, family)? && (cost - sol.cost).abs() <= 1e-12)
                    })
                    .collect()
            });
            suite.run("frac_le_int", || {
                grid()
                    .map(|p| Ok(prob.solve_frac(p)?.cost <= prob.solve_int(p)?.cost + 1e-9))
                    .collect()
            });
            suite.run("frac_cover_valid", || {
                grid()
                    .map(|p| is_fractional_cover(&prob.solve_frac(p)?.weights, family))
                    .collect()
            });
            suite.run("greedy_ge_exact", || {
                grid()
                    .map(|p| {
                        let g = prob.greedy_int_cover(p)?;
                        Ok(is_cover(&g.cover, family)? && g.cost >= prob.solve_int(p)?.cost - 1e-12)
                    })
                    .collect()
            });
            suite.run("int_cost_monotone", || {
                let costs = grid().map(|p| Ok(prob.solve_int(p)?.cost)).collect::<Result<Vec<_>>>()?;
                Ok(costs.windows(2).map(|w| w[0] <= w[1] + 1e-12).collect())
            });
            suite.run("thresholds", || {
                let pe = prob.threshold_pe()?;
                let pf = prob.threshold_pf()?;
                let mut out = vec![pf.value >= pe.value - 1e-9];
                if !pe.degenerate {
                    out.push(prob.is_p_small(pe.lo)?);
                    out.push(!prob.is_p_small(pe.hi)?);
                }
                Ok(out)
            });
        }
        Err(e) => {
            for name in [
                "int_cover_valid",
                "frac_le_int",
                "frac_cover_valid",
                "greedy_ge_exact",
                "int_cost_monotone",
                "thresholds",
            ] {
                suite.skip(name, e.to_string(), e.is_resource());
            }
        }
    }

    let lambdas = match inst.lambdas_or_uniform() {
        Ok(l) => l,
        Err(e) => {
            suite.run("lambda_unit_mass", || Err(e));
            return suite.finish();
        }
    };
    suite.run("lambda_unit_mass", || Ok(vec![lambdas.check_unit_mass().is_ok()]));
    let lambdas = &lambdas;

    let streams = Streams::new(seed, "verify-all");
    suite.run("cutoff_half_bound", || {
        let mut out = Vec::new();
        for i in 0..CUTOFF_DRAWS {
            let w = sample_subset(n, 0.5, &mut streams.trial(i));
            for (h, l) in family.members().iter().zip(lambdas.iter()) {
                let c = cutoff(&w, h, l);
                out.push(2 * (c.below & w).len() <= c.below.len());
            }
        }
        Ok(out)
    });

    let budget = TowerBudget::default();
    let draws: Vec<Vec<Subset>> = (0..TOWER_DRAWS)
        .map(|i| {
            let mut rng = streams.trial(1_000 + i);
            let s = 1 + (i % 2) as usize;
            (0..s).map(|_| sample_subset(n, 0.3, &mut rng)).collect()
        })
        .collect();
    // Minimum towers for every (draw, member), computed once.
    let towers = budget.check(family, 2).and_then(|_| {
        draws
            .iter()
            .map(|samples| {
                family
                    .members()
                    .iter()
                    .map(|h| minimum_tower(samples, h, family, &lambdas, &budget))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
    });
    match towers {
        Ok(towers) => {
            suite.run("tower_fragment_in_residual", || {
                Ok(towers
                    .iter()
                    .flatten()
                    .map(|c| c.fragments.iter().zip(&c.witness.residuals).all(|(f, r)| f.is_subset(r)))
                    .collect())
            });
            suite.run("tower_fragment_half_residual", || {
                Ok(towers
                    .iter()
                    .flatten()
                    .map(|c| {
                        c.fragments
                            .iter()
                            .zip(&c.witness.residuals)
                            .all(|(f, r)| 2 * f.len() >= r.len())
                    })
                    .collect())
            });
            suite.run("tower_decode_round_trip", || {
                Ok(draws
                    .iter()
                    .zip(&towers)
                    .flat_map(|(samples, certs)| {
                        certs.iter().map(move |c| {
                            let u = c.union().set;
                            matches!(
                                decode_fragments(&c.z, &c.t, &u, family, &lambdas),
                                Ok((ws, ts)) if ws == *samples && ts == c.fragments
                            )
                        })
                    })
                    .collect())
            });
            suite.run("tower_fallback_valid", || {
                let mut out = Vec::new();
                for samples in &draws {
                    for (h, l) in family.members().iter().zip(lambdas.iter()) {
                        let fb = fallback_tower(samples, h, l);
                        out.push(certify_tower(samples, h, &fb, family, &lambdas)?.is_some());
                    }
                }
                Ok(out)
            });
            suite.run("tower_cover_is_cover", || {
                draws
                    .iter()
                    .map(|samples| is_cover(&tower_cover(samples, family, &lambdas, &budget)?, family))
                    .collect()
            });
            suite.run("bad_implies_nonempty", || {
                draws
                    .iter()
                    .map(|samples| bad_implies_nonempty_check(samples, family, &lambdas, &budget))
                    .collect()
            });
        }
        Err(e) => {
            for name in [
                "tower_fragment_in_residual",
                "tower_fragment_half_residual",
                "tower_decode_round_trip",
                "tower_fallback_valid",
                "tower_cover_is_cover",
                "bad_implies_nonempty",
            ] {
                suite.skip(name, e.to_string(), e.is_resource());
            }
        }
    }

    match &inst.cover {
        Some(w) if is_fractional_cover(w, family).unwrap_or(false) => {
            suite.run("lambda_from_cover", || {
                family
                    .members()
                    .iter()
                    .map(|h| Ok((build_lambda(w, h)?.total() - 1.0).abs() <= 1e-12))
                    .collect()
            });
            suite.run("coverage_identity", || {
                let mut out = Vec::new();
                for i in 0..IDENTITY_DRAWS {
                    let s = sample_subset(n, 0.5, &mut streams.trial(2_000 + i));
                    for h in family.members() {
                        out.push(verify_coverage_identity(w, h, &s)?);
                        let mass = build_lambda(w, h)?.mass(&s);
                        out.push(mass <= coverage_upper_bound(w, h, &s)? + 1e-9);
                    }
                }
                Ok(out)
            });
        }
        _ => {
            suite.skip("lambda_from_cover", "no valid fractional cover", false);
            suite.skip("coverage_identity", "no valid fractional cover", false);
        }
    }

    suite.finish()
}
