//! Acceptance suite: one PASS/FAIL line per criterion, followed by indented
//! detail lines. Exits nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::Rng;
use threshold_lab::fragments::{
    certify_tower, cutoff, decode_fragments, fallback_tower, minimum_tower, tower_cover,
    verify_key_property, TowerBudget,
};
use threshold_lab::instances::{build_hw, gen_disjoint_blocks, gen_perfect_matchings, HwMode};
use threshold_lab::montecarlo::{
    bad_implies_nonempty_check, estimate_key_lemma, is_bad,
    multiplier_sweep, sharpness_demo, union_inclusion_frequencies, McConfig, NotSmallEvidence,
    MULTIPLIERS,
};
use threshold_lab::rounding::{
    build_lambda, cover_threshold, verify_coverage_identity, verify_main_theorem, ExactCover,
};
use threshold_lab::solvers::{CoverProblem, SolverConfig};
use threshold_lab::{is_cover, FractionalCover, Lambdas, SetSystem, Subset};

const TRIALS: usize = 10_000;

/// Outcome of one criterion: a verdict and detail lines.
struct Outcome {
    passed: bool,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            details: Vec::new(),
        }
    }

    /// Records a sub-check; a false `ok` fails the criterion.
    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, line: String) {
        self.details.push(format!("    {line}"));
    }

    fn within(&mut self, elapsed: Duration, limit_s: f64) {
        let secs = elapsed.as_secs_f64();
        self.check(secs < limit_s, format!("runtime {secs:.2}s (limit {limit_s}s)"));
    }
}

fn mc(seed: u64) -> McConfig {
    McConfig {
        trials: TRIALS,
        seed,
        ..McConfig::default()
    }
}

/// Standard error of a frequency under its predicted value. Using the
/// prediction rather than the estimate keeps a near-certain event from
/// getting a zero-width band.
fn null_stderr(pi: f64, trials: usize) -> f64 {
    (pi * (1.0 - pi) / trials as f64).sqrt()
}

fn solver() -> SolverConfig {
    SolverConfig::default()
}

fn solver_exactness() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = common::rng(1);
    let (mut int_bad, mut frac_bad) = (0, 0);
    for _ in 0..50 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=10);
        let f = common::random_family(&mut rng, n, m, n);
        // Dyadic densities keep every cost exact in floating point.
        let p = rng.gen_range(1..64) as f64 / 64.0;
        let prob = CoverProblem::new(&f, solver()).unwrap();
        let int = prob.solve_int(p).unwrap();
        if int.cost != common::brute_int_cost(&f, p) || !int.optimal || !is_cover(&int.cover, &f).unwrap() {
            int_bad += 1;
        }
        if prob.solve_frac(p).unwrap().cost > int.cost + 1e-9 {
            frac_bad += 1;
        }
    }
    out.check(int_bad == 0, format!("solve_int equals brute force on 50 families ({int_bad} mismatches)"));
    out.check(frac_bad == 0, format!("solve_frac <= solve_int + 1e-9 ({frac_bad} violations)"));
    out.within(start.elapsed(), 60.0);
    out
}

fn threshold_values() -> Outcome {
    let mut out = Outcome::new();
    let k4 = gen_perfect_matchings(4).unwrap();
    let pe = CoverProblem::new(&k4, solver()).unwrap().threshold_pe().unwrap().value;
    let target = 1.0 / 6f64.sqrt();
    out.check((pe - target).abs() <= 1e-5, format!("p_E(K_4 matchings) = {pe:.8}, target {target:.8}"));

    let singles = gen_disjoint_blocks(50, 1).unwrap();
    let pe = CoverProblem::new(&singles, solver()).unwrap().threshold_pe().unwrap().value;
    out.check((pe - 0.01).abs() <= 1e-6, format!("p_E(50 singletons) = {pe:.8}, target 0.01"));

    let mut instances: Vec<(String, SetSystem)> = vec![
        ("K_4".into(), k4),
        ("K_6".into(), gen_perfect_matchings(6).unwrap()),
        ("singletons".into(), singles),
        ("blocks".into(), gen_disjoint_blocks(40, 4).unwrap()),
    ];
    let mut rng = common::rng(2);
    for i in 0..6 {
        let n = rng.gen_range(2..=7);
        let m = rng.gen_range(1..=6);
        instances.push((format!("random-{i}"), common::random_family(&mut rng, n, m, n)));
    }
    for (name, f) in &instances {
        let prob = CoverProblem::new(f, solver()).unwrap();
        let pe = prob.threshold_pe().unwrap().value;
        let pf = prob.threshold_pf().unwrap().value;
        out.check(pf >= pe - 1e-9, format!("{name}: p_f = {pf:.6} >= p_E = {pe:.6}"));
    }
    out
}

fn cutoff_half_bound() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let mut rng = common::rng(3);
    let (mut violations, mut mismatches) = (0, 0);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=12);
        let f = common::random_family(&mut rng, n, 1, n);
        let lam = common::random_lambdas(&mut rng, &f);
        let h = f.members()[0];
        let q = rng.gen_range(0.0..1.0);
        let w = common::random_subset(&mut rng, n, q);
        let c = cutoff(&w, &h, lam.get(0));
        if 2 * (c.below & w).len() > c.below.len() {
            violations += 1;
        }
        if (c.b, c.below, c.at_or_above) != common::oracle_cutoff(&w, &h, lam.get(0)) {
            mismatches += 1;
        }
    }
    out.check(violations == 0, format!("|H_<b ∩ W| <= |H_<b|/2 on 10^4 triples ({violations} violations)"));
    out.check(mismatches == 0, format!("cutoff agrees with the definition ({mismatches} mismatches)"));
    out.within(start.elapsed(), 10.0);
    out
}

fn tower_suite() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let budget = TowerBudget::default();
    let mut rng = common::rng(4);
    let mut hosts = 0;
    let mut fails = [0usize; 7];
    for _ in 0..1_000 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=8);
        let family = common::random_family(&mut rng, n, m, n);
        let lambdas = common::random_lambdas(&mut rng, &family);
        let s = rng.gen_range(1..=2);
        let q = rng.gen_range(0.05..0.7);
        let samples: Vec<Subset> = (0..s).map(|_| common::random_subset(&mut rng, n, q)).collect();
        for (h, l) in family.members().iter().zip(lambdas.iter()) {
            hosts += 1;
            let cert = match minimum_tower(&samples, h, &family, &lambdas, &budget) {
                Ok(c) => c,
                Err(_) => {
                    fails[0] += 1;
                    continue;
                }
            };
            let fb = fallback_tower(&samples, h, l);
            if certify_tower(&samples, h, &fb, &family, &lambdas).unwrap().is_none() {
                fails[1] += 1;
            }
            if cert.fragments != common::oracle_min_tower(&samples, h, &family, &lambdas) {
                fails[2] += 1;
            }
            if !verify_key_property(&cert) {
                fails[3] += 1;
            }
            if cert.fragments.iter().zip(&cert.witness.residuals).any(|(f, r)| 2 * f.len() < r.len()) {
                fails[4] += 1;
            }
            let decoded = decode_fragments(&cert.z, &cert.t, &cert.union().set, &family, &lambdas);
            if !matches!(decoded, Ok((ref w, ref t)) if *w == samples && *t == cert.fragments) {
                fails[5] += 1;
            }
        }
        let cover = tower_cover(&samples, &family, &lambdas, &budget).unwrap();
        if !is_cover(&cover, &family).unwrap() {
            fails[6] += 1;
        }
    }
    let names = [
        "minimum_tower succeeds",
        "residual fallback is a valid tower",
        "lexicographic minimum matches exhaustive enumeration",
        "key property: fragments inside witness residuals, at least half of each",
        "half bound alone: 2|T_i| >= |R_i|",
        "decoding (Z, t, U) returns (W, T)",
        "tower_cover covers the family (per instance)",
    ];
    for (name, bad) in names.iter().zip(fails) {
        out.check(bad == 0, format!("{name} ({bad} failures)"));
    }
    out.note(format!("{hosts} (instance, host) pairs over 1000 instances"));
    if fails[3] > 0 {
        out.note("smallest counterexample: family {{0,1}} on 3 elements, uniform weights, W = ({2});".into());
        out.note("the minimum tower is ({0}) and its canonical witness ({0}) has an empty residual".into());
    }
    out.within(start.elapsed(), 300.0);
    out
}

fn bad_implies_nonempty() -> Outcome {
    let mut out = Outcome::new();
    let budget = TowerBudget::default();
    let mut rng = common::rng(5);
    let (mut found, mut violations, mut draws) = (0, 0, 0);
    while found < 1_000 {
        draws += 1;
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let family = common::random_family(&mut rng, n, m, n);
        let lambdas = common::random_lambdas(&mut rng, &family);
        let s = rng.gen_range(1..=2);
        let q = rng.gen_range(0.05..0.5);
        let samples: Vec<Subset> = (0..s).map(|_| common::random_subset(&mut rng, n, q)).collect();
        if !is_bad(&samples, &lambdas) {
            continue;
        }
        found += 1;
        if !bad_implies_nonempty_check(&samples, &family, &lambdas, &budget).unwrap() {
            violations += 1;
        }
    }
    out.check(violations == 0, format!("u > 0 on 1000 bad tuples ({violations} violations)"));
    out.note(format!("{draws} draws to find 1000 bad tuples"));
    out
}

fn key_lemma() -> Outcome {
    let mut out = Outcome::new();
    let budget = TowerBudget::default();
    let pair = SetSystem::from_lists(2, &[vec![0, 1]]).unwrap();
    let mut cases: Vec<(String, SetSystem, Lambdas, f64)> = vec![
        ("K_4".into(), gen_perfect_matchings(4).unwrap(), Lambdas::uniform(&gen_perfect_matchings(4).unwrap()).unwrap(), 0.03),
        ("pair".into(), pair.clone(), Lambdas::uniform(&pair).unwrap(), 0.05),
        ("K_6".into(), gen_perfect_matchings(6).unwrap(), Lambdas::uniform(&gen_perfect_matchings(6).unwrap()).unwrap(), 0.02),
    ];
    let mut rng = common::rng(6);
    for i in 0..4 {
        let n = rng.gen_range(2..=6);
        let m = rng.gen_range(1..=5);
        let f = common::random_family(&mut rng, n, m, n);
        let l = common::random_lambdas(&mut rng, &f);
        cases.push((format!("random-{i}"), f, l, 0.04));
    }
    for (k, (name, family, lambdas, p)) in cases.iter().enumerate() {
        for s in 1..=2 {
            let r = estimate_key_lemma(family, lambdas, *p, s, &mc(60 + k as u64), &budget).unwrap();
            out.check(
                r.estimate <= 1.0 / 3.0 + 3.0 * r.stderr,
                format!("{name} s={s} p={p}: estimate {:.5} ± {:.5} <= 1/3", r.estimate, r.stderr),
            );
            if family.n() <= 6 {
                let (mean, var) = common::exhaustive_key_lemma(family, lambdas, *p, r.config.q, s);
                let se = (var / TRIALS as f64).sqrt();
                out.check(
                    (r.estimate - mean).abs() <= 3.0 * se,
                    format!("{name} s={s}: exhaustive expectation {mean:.5}, band ±{:.5}", 3.0 * se),
                );
            }
        }
    }
    out
}

/// Smallest count `j` of a `k`-block reaching weight `level` under uniform
/// weights `1/k`.
fn needed(k: usize, level: f64) -> usize {
    (0..=k).find(|&j| j as f64 / k as f64 >= level - 1e-12).unwrap()
}

fn amplified_success() -> Outcome {
    let mut out = Outcome::new();
    let cases = [("singletons", gen_disjoint_blocks(50, 1).unwrap(), 50usize, 1usize), ("blocks", gen_disjoint_blocks(40, 4).unwrap(), 40, 4)];
    for (c, (name, family, blocks, k)) in cases.iter().enumerate() {
        let prob = CoverProblem::new(family, solver()).unwrap();
        let p = 1.05 * prob.threshold_pe().unwrap().value;
        let evidence = NotSmallEvidence::Integral(prob.solve_int(p).unwrap());
        evidence.check(family, p).unwrap();
        let lambdas = Lambdas::uniform(family).unwrap();
        for s in 1..=2usize {
            let cfg = mc(70 + 2 * c as u64 + s as u64);
            let (reports, smallest) = multiplier_sweep(family, &lambdas, p, s, &evidence, &cfg).unwrap();
            let level = 1.0 - 0.5f64.powi(s as i32);
            let j = needed(*k, level);
            let mut checked = 0;
            for (alpha, r) in MULTIPLIERS.iter().zip(&reports) {
                if r.clamped {
                    out.note(format!("{name} s={s} multiplier {alpha}: density clamped to 1, trivial, excluded"));
                    continue;
                }
                checked += 1;
                let pi = 1.0 - (1.0 - common::binomial_tail(*k, r.config.q, j)).powi(*blocks as i32);
                let se = null_stderr(pi, r.trials);
                out.check(
                    r.estimate >= 1.0 / 3.0 - 3.0 * r.stderr,
                    format!("{name} s={s} multiplier {alpha:.0} q={:.4}: frequency {:.4} >= 1/3", r.config.q, r.estimate),
                );
                out.check(
                    (r.estimate - pi).abs() <= 3.0 * se.max(r.stderr),
                    format!("{name} s={s} multiplier {alpha:.0}: binomial oracle {pi:.5}"),
                );
            }
            out.check(checked > 0, format!("{name} s={s}: {checked} unclamped runs checked"));
            out.note(format!("{name} s={s}: smallest multiplier reaching 1/3 = {smallest:?}"));
        }
    }
    out
}

fn union_distribution() -> Outcome {
    let mut out = Outcome::new();
    let q = 0.1;
    for s in 1..=3usize {
        let target = 1.0 - (1.0f64 - q).powi(s as i32);
        let se = null_stderr(target, TRIALS);
        let freqs = union_inclusion_frequencies(10, q, s, &mc(80 + s as u64)).unwrap();
        let worst = freqs.iter().map(|(f, _)| (f - target).abs()).fold(0.0, f64::max);
        out.check(
            worst <= 3.0 * se,
            format!("n=10 q={q} s={s}: target {target:.4}, worst deviation {worst:.4}, band ±{:.4}", 3.0 * se),
        );
    }
    out
}

fn identity_suite() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = common::rng(9);
    let mut fails = [0usize; 5];
    for _ in 0..1_000 {
        let n = rng.gen_range(1..=10);
        let t = rng.gen_range(1..=3).min(n);
        let mut entries = std::collections::BTreeMap::new();
        for _ in 0..rng.gen_range(1..=6) {
            let size = rng.gen_range(1..=t);
            let set: Subset = rand::seq::index::sample(&mut rng, n, size).into_iter().collect();
            let den = rng.gen_range(1..=12i64);
            entries.insert(set, (rng.gen_range(1..=den), den));
        }
        let supports: Vec<Subset> = entries.keys().copied().collect();
        let exact = ExactCover::new(n, entries.into_iter().map(|(s, (a, b))| (s, a, b))).unwrap();
        let w = exact.to_float().unwrap();
        let h = supports[rng.gen_range(0..supports.len())] | common::random_subset(&mut rng, n, 0.4);
        let s = common::random_subset(&mut rng, n, 0.5);
        if !verify_coverage_identity(&w, &h, &s).unwrap() {
            fails[0] += 1;
        }
        if !exact.coverage_identity(&h, &s).unwrap() {
            fails[1] += 1;
        }
        if !exact.denominator_identity(&h) {
            fails[2] += 1;
        }
        if !exact.lambda_sums_to_one(&h).unwrap() {
            fails[3] += 1;
        }
        if (build_lambda(&w, &h).unwrap().total() - 1.0).abs() > 1e-12 {
            fails[4] += 1;
        }
    }
    let names = [
        "coverage identity in floating point",
        "coverage identity in exact rationals",
        "denominator identity in exact rationals",
        "lambda sums to one in exact rationals",
        "build_lambda sums to 1 within 1e-12",
    ];
    for (name, bad) in names.iter().zip(fails) {
        out.check(bad == 0, format!("{name} on 1000 covers ({bad} failures)"));
    }
    out
}

fn main_theorem_report() -> Outcome {
    let mut out = Outcome::new();
    let mut rng = common::rng(10);
    let mut worst: f64 = 0.0;
    let weights = [(1, 2), (1, 3), (1, 4), (2, 3)];
    for case in 0..20 {
        let t = 1 + case % 3;
        // Redraw until w covers something; total weight below one covers
        // nothing at all.
        let (w, family) = loop {
            let n = rng.gen_range(t.max(2)..=10);
            let mut entries = std::collections::BTreeMap::new();
            for _ in 0..rng.gen_range(3..=6) {
                let size = rng.gen_range(1..=t);
                let set: Subset = rand::seq::index::sample(&mut rng, n, size).into_iter().collect();
                entries.insert(set, weights[rng.gen_range(0..weights.len())]);
            }
            let exact = ExactCover::new(n, entries.into_iter().map(|(s, (a, b))| (s, a, b))).unwrap();
            let w: FractionalCover = exact.to_float().unwrap();
            let family = build_hw(&w, HwMode::Minimal).unwrap();
            if !family.is_empty() {
                break (w, family);
            }
        };
        let p = cover_threshold(&w, 1e-9).unwrap() / 1.05;
        let r = verify_main_theorem(&w, &family, p, solver(), None).unwrap();
        let pe = CoverProblem::new(&family, solver()).unwrap().threshold_pe().unwrap().value;
        let ok = r.best_q > 0.0 && r.gap_ratio.is_finite() && pe <= r.p_f + 1e-9;
        out.check(
            ok,
            format!(
                "case {case}: t={} |H_w|={} p={:.4} best_q={:.4} gap={:.3} gap/ln(t+1)={:.3}",
                r.t,
                family.len(),
                p,
                r.best_q,
                r.gap_ratio,
                r.constant_estimate
            ),
        );
        worst = worst.max(r.constant_estimate);
    }
    out.note(format!("max gap_ratio / ln(t+1) over the suite: {worst:.4}"));
    out
}

fn sharpness() -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    for s in 1..=3 {
        let r = sharpness_demo(100, s as f64, &mc(110 + s)).unwrap();
        let est = &r.isolated;
        out.check(
            (est.estimate - r.closed_form).abs() <= 3.0 * est.stderr,
            format!(
                "s={s}: mean isolated {:.4} ± {:.4}, closed form {:.4}",
                est.estimate, est.stderr, r.closed_form
            ),
        );
    }
    out.within(start.elapsed(), 30.0);
    out
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("solver exactness", solver_exactness),
        ("threshold values", threshold_values),
        ("cutoff half bound", cutoff_half_bound),
        ("tower suite", tower_suite),
        ("bad tuples force nonempty towers", bad_implies_nonempty),
        ("cover-cost lemma at q = 16p", key_lemma),
        ("amplified selector success", amplified_success),
        ("union distribution", union_distribution),
        ("rounding identities", identity_suite),
        ("integrality gap report", main_theorem_report),
        ("isolated vertices", sharpness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            let mut o = Outcome::new();
            o.check(false, format!("panicked: {msg}"));
            o
        });
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!(
            "criterion {}: {verdict} {name} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
        for line in &outcome.details {
            println!("    {line}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
