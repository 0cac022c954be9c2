//! Exact integral and fractional cover programs at desk scale.
//!
//! Both programs range over the same restricted candidate universe: the empty
//! set plus every subset of some family member. Any other set is contained in
//! no member and therefore covers nothing, so optimal values are unchanged.
//!
//! The integral program is solved by branch and bound. At each node the
//! uncovered member with the fewest admissible candidates is chosen, and the
//! search branches on which candidate covers it, forbidding earlier siblings
//! in later branches. The incumbent starts as the better of `{∅}` and the
//! greedy cover; nodes are pruned with a per-member bound and, when that
//! fails, the LP relaxation of the residual problem.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::lp;
use crate::subset::Subset;
use crate::system::{cost_of, FractionalCover, SetSystem, TOL};

/// Slack on integral branch-and-bound pruning and on LP optimality.
pub const LP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Maximum number of distinct candidate sets.
    pub budget: usize,
    /// Cost level below which a family counts as small (`1/2` by default).
    pub small_threshold: f64,
    /// Bisection bracket width for thresholds.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            budget: 1 << 20,
            small_threshold: 0.5,
            tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegerSolution {
    pub cover: SetSystem,
    pub cost: f64,
    pub p: f64,
    /// False for heuristic (greedy) covers.
    pub optimal: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution {
    pub weights: FractionalCover,
    pub cost: f64,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub value: f64,
    /// Largest probed point where the predicate held.
    pub lo: f64,
    /// Smallest probed point where it failed.
    pub hi: f64,
    pub tol: f64,
    /// Set when the predicate already held at `p = 1` (or failed at `p = 0`).
    pub degenerate: bool,
}

/// A family together with its candidate universe, reusable across `p`.
pub struct CoverProblem {
    family: SetSystem,
    /// Candidates in canonical order; index 0 is always the empty set.
    cands: Vec<Subset>,
    /// Per member: admissible nonempty candidates, largest first.
    member_cands: Vec<Vec<usize>>,
    /// Per candidate: members it covers.
    covers: Vec<Vec<usize>>,
    config: SolverConfig,
}

impl CoverProblem {
    pub fn new(family: &SetSystem, config: SolverConfig) -> Result<Self> {
        let mut index: HashMap<Subset, usize> = HashMap::new();
        index.insert(Subset::empty(), 0);
        let mut cands = vec![Subset::empty()];
        let over = |count: usize| Error::Budget {
            what: "candidate sets",
            count,
            budget: config.budget,
        };
        for h in family.members() {
            let k = h.len();
            if k >= 63 || (1usize << k) > config.budget {
                return Err(over(if k >= 63 { usize::MAX } else { 1 << k }));
            }
            for g in h.subsets() {
                if let std::collections::hash_map::Entry::Vacant(e) = index.entry(g) {
                    e.insert(cands.len());
                    cands.push(g);
                    if cands.len() > config.budget {
                        return Err(over(cands.len()));
                    }
                }
            }
        }
        // Re-index in canonical order.
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by(|&a, &b| cands[a].cmp(&cands[b]));
        let cands: Vec<Subset> = order.iter().map(|&i| cands[i]).collect();
        let index: HashMap<Subset, usize> =
            cands.iter().enumerate().map(|(i, s)| (*s, i)).collect();

        let mut member_cands = Vec::with_capacity(family.len());
        let mut covers = vec![Vec::new(); cands.len()];
        for (i, h) in family.members().iter().enumerate() {
            let mut list: Vec<usize> = h
                .subsets()
                .filter(|g| !g.is_empty())
                .map(|g| index[&g])
                .collect();
            list.sort_by(|&a, &b| {
                cands[b]
                    .len()
                    .cmp(&cands[a].len())
                    .then_with(|| cands[a].cmp(&cands[b]))
            });
            for &j in &list {
                covers[j].push(i);
            }
            covers[0].push(i);
            member_cands.push(list);
        }
        Ok(CoverProblem {
            family: family.clone(),
            cands,
            member_cands,
            covers,
            config,
        })
    }

    pub fn family(&self) -> &SetSystem {
        &self.family
    }

    pub fn candidate_count(&self) -> usize {
        self.cands.len()
    }

    fn costs(&self, p: f64) -> Vec<f64> {
        self.cands.iter().map(|g| p.powi(g.len() as i32)).collect()
    }

    fn system(&self, idx: &[usize]) -> SetSystem {
        SetSystem::new(self.family.n(), idx.iter().map(|&j| self.cands[j]))
            .expect("candidates lie in the ground set")
    }

    fn has_empty_member(&self) -> bool {
        self.family.members().iter().any(Subset::is_empty)
    }

    /// Minimum-cost integral cover.
    pub fn solve_int(&self, p: f64) -> Result<IntegerSolution> {
        check_probability(p)?;
        if self.family.is_empty() {
            return Ok(IntegerSolution {
                cover: SetSystem::empty(self.family.n())?,
                cost: 0.0,
                p,
                optimal: true,
            });
        }
        if self.has_empty_member() {
            return Ok(self.empty_cover(p, true));
        }
        let costs = self.costs(p);
        let mut search = Search::new(self, &costs);
        let greedy = self.greedy(&costs);
        let greedy_cost: f64 = greedy.iter().map(|&j| costs[j]).sum();
        if greedy_cost < search.best_cost {
            search.best_cost = greedy_cost;
            search.best = Some(greedy);
        }
        let mut covered = vec![false; self.family.len()];
        search.run(&mut covered, 0, 0.0);
        let (cover_idx, cost) = match search.best {
            Some(idx) => {
                let cost = idx.iter().map(|&j| costs[j]).sum();
                (idx, cost)
            }
            None => (vec![0], 1.0),
        };
        Ok(IntegerSolution {
            cover: self.system(&cover_idx),
            cost,
            p,
            optimal: true,
        })
    }

    fn empty_cover(&self, p: f64, optimal: bool) -> IntegerSolution {
        IntegerSolution {
            cover: self.system(&[0]),
            cost: 1.0,
            p,
            optimal,
        }
    }

    /// Optimal fractional cover.
    pub fn solve_frac(&self, p: f64) -> Result<FractionalSolution> {
        check_probability(p)?;
        let n = self.family.n();
        if self.family.is_empty() {
            return Ok(FractionalSolution {
                weights: FractionalCover::new(n, std::iter::empty())?,
                cost: 0.0,
                p,
            });
        }
        let costs = self.costs(p);
        let rows: Vec<Vec<usize>> = self
            .member_cands
            .iter()
            .map(|l| {
                let mut r = l.clone();
                r.push(0);
                r
            })
            .collect();
        let sol = lp::solve_covering(&costs, &rows).expect("empty set covers every row");
        let mut x = sol.x;
        // Restore exact feasibility lost to rounding by topping up the
        // cheapest admissible candidate of each deficient row.
        for row in &rows {
            let total: f64 = row.iter().map(|&j| x[j]).sum();
            if total < 1.0 - TOL {
                let &j = row
                    .iter()
                    .filter(|&&j| x[j] < 1.0)
                    .min_by(|&&a, &&b| costs[a].total_cmp(&costs[b]))
                    .expect("a deficient row has an unsaturated column");
                x[j] = (x[j] + (1.0 - total)).min(1.0);
            }
        }
        let cost: f64 = x.iter().zip(&costs).map(|(a, c)| a * c).sum();
        let weights = FractionalCover::new(
            n,
            x.iter()
                .enumerate()
                .filter(|(_, &v)| v > TOL)
                .map(|(j, &v)| (self.cands[j], v)),
        )?;
        Ok(FractionalSolution { weights, cost, p })
    }

    pub fn is_p_small(&self, p: f64) -> Result<bool> {
        Ok(self.solve_int(p)?.cost <= self.config.small_threshold + TOL)
    }

    pub fn is_frac_p_small(&self, p: f64) -> Result<bool> {
        Ok(self.solve_frac(p)?.cost <= self.config.small_threshold + TOL)
    }

    fn check_threshold_input(&self) -> Result<()> {
        if self.family.is_empty() {
            return Err(Error::input("threshold of an empty family is undefined"));
        }
        if self.has_empty_member() {
            return Err(Error::input("threshold requires nonempty members"));
        }
        Ok(())
    }

    /// Largest `p` with integral cover cost at most the small threshold.
    pub fn threshold_pe(&self) -> Result<ThresholdEstimate> {
        self.check_threshold_input()?;
        bisect(|p| self.is_p_small(p), self.config.tol)
    }

    /// Largest `p` with fractional cover cost at most the small threshold.
    pub fn threshold_pf(&self) -> Result<ThresholdEstimate> {
        self.check_threshold_input()?;
        bisect(|p| self.is_frac_p_small(p), self.config.tol)
    }

    /// Greedy weighted set cover over the candidate universe, compared
    /// against `{∅}`. Returns candidate indices.
    fn greedy(&self, costs: &[f64]) -> Vec<usize> {
        let m = self.family.len();
        let mut covered = vec![false; m];
        let mut remaining = m;
        let mut chosen = Vec::new();
        // Lazy evaluation: ratios only grow as members get covered.
        let mut heap: BinaryHeap<Entry> = (1..self.cands.len())
            .filter(|&j| !self.covers[j].is_empty())
            .map(|j| Entry {
                ratio: costs[j] / self.covers[j].len() as f64,
                idx: j,
            })
            .collect();
        while remaining > 0 {
            let Some(top) = heap.pop() else { break };
            let fresh = self.covers[top.idx].iter().filter(|&&i| !covered[i]).count();
            if fresh == 0 {
                continue;
            }
            let ratio = costs[top.idx] / fresh as f64;
            if let Some(next) = heap.peek() {
                if ratio > next.ratio {
                    heap.push(Entry {
                        ratio,
                        idx: top.idx,
                    });
                    continue;
                }
            }
            for &i in &self.covers[top.idx] {
                if !covered[i] {
                    covered[i] = true;
                    remaining -= 1;
                }
            }
            chosen.push(top.idx);
        }
        self.prune_redundant(&mut chosen, costs);
        let cost: f64 = chosen.iter().map(|&j| costs[j]).sum();
        if remaining > 0 || cost >= 1.0 {
            vec![0]
        } else {
            chosen.sort_unstable();
            chosen
        }
    }

    fn prune_redundant(&self, chosen: &mut Vec<usize>, costs: &[f64]) {
        let mut count = vec![0usize; self.family.len()];
        for &j in chosen.iter() {
            for &i in &self.covers[j] {
                count[i] += 1;
            }
        }
        let mut by_cost = chosen.clone();
        by_cost.sort_by(|&a, &b| costs[b].total_cmp(&costs[a]).then(b.cmp(&a)));
        for j in by_cost {
            if self.covers[j].iter().all(|&i| count[i] > 1) {
                for &i in &self.covers[j] {
                    count[i] -= 1;
                }
                chosen.retain(|&c| c != j);
            }
        }
    }

    /// Heuristic upper bound on the integral optimum.
    pub fn greedy_int_cover(&self, p: f64) -> Result<IntegerSolution> {
        check_probability(p)?;
        if self.family.is_empty() {
            return Ok(IntegerSolution {
                cover: SetSystem::empty(self.family.n())?,
                cost: 0.0,
                p,
                optimal: false,
            });
        }
        if self.has_empty_member() {
            return Ok(self.empty_cover(p, false));
        }
        let costs = self.costs(p);
        let idx = self.greedy(&costs);
        let cost = idx.iter().map(|&j| costs[j]).sum();
        Ok(IntegerSolution {
            cover: self.system(&idx),
            cost,
            p,
            optimal: false,
        })
    }
}

#[derive(PartialEq)]
struct Entry {
    ratio: f64,
    idx: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on ratio, ties to the canonically first candidate.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .ratio
            .total_cmp(&self.ratio)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    prob: &'a CoverProblem,
    costs: &'a [f64],
    forbidden: Vec<bool>,
    chosen: Vec<usize>,
    best: Option<Vec<usize>>,
    best_cost: f64,
}

impl<'a> Search<'a> {
    fn new(prob: &'a CoverProblem, costs: &'a [f64]) -> Self {
        Search {
            prob,
            costs,
            forbidden: vec![false; prob.cands.len()],
            chosen: Vec::new(),
            best: None,
            best_cost: 1.0,
        }
    }

    fn allowed<'b>(&'b self, member: usize) -> impl Iterator<Item = usize> + 'b {
        self.prob.member_cands[member]
            .iter()
            .copied()
            .filter(move |&j| !self.forbidden[j])
    }

    fn run(&mut self, covered: &mut [bool], n_covered: usize, cost: f64) {
        let m = covered.len();
        if n_covered == m {
            if cost < self.best_cost - TOL {
                self.best_cost = cost;
                let mut idx = self.chosen.clone();
                idx.sort_unstable();
                self.best = Some(idx);
            }
            return;
        }
        // Branch member: fewest admissible candidates. Also the per-member
        // bound: every uncovered member needs at least its cheapest option.
        let mut branch: Option<(usize, usize)> = None;
        let mut bound = 0.0f64;
        for i in (0..m).filter(|&i| !covered[i]) {
            let mut count = 0;
            let mut cheapest = f64::INFINITY;
            for j in self.allowed(i) {
                count += 1;
                cheapest = cheapest.min(self.costs[j]);
            }
            if count == 0 {
                return;
            }
            bound = bound.max(cheapest);
            if branch.is_none_or(|(_, c)| count < c) {
                branch = Some((i, count));
            }
        }
        if cost + bound >= self.best_cost - TOL {
            return;
        }
        if m - n_covered > 1 && cost + self.lp_bound(covered) - LP_TOL >= self.best_cost - TOL {
            return;
        }
        let (member, _) = branch.expect("an uncovered member exists");
        let options: Vec<usize> = self.allowed(member).collect();
        let mut newly = Vec::new();
        for &j in &options {
            newly.clear();
            for &i in &self.prob.covers[j] {
                if !covered[i] {
                    covered[i] = true;
                    newly.push(i);
                }
            }
            self.chosen.push(j);
            let added = newly.len();
            let snapshot = newly.clone();
            self.run(covered, n_covered + added, cost + self.costs[j]);
            self.chosen.pop();
            for i in snapshot {
                covered[i] = false;
            }
            self.forbidden[j] = true;
        }
        for &j in &options {
            self.forbidden[j] = false;
        }
    }

    fn lp_bound(&self, covered: &[bool]) -> f64 {
        let mut col_of: HashMap<usize, usize> = HashMap::new();
        let mut col_costs = Vec::new();
        let mut rows = Vec::new();
        for i in (0..covered.len()).filter(|&i| !covered[i]) {
            let row: Vec<usize> = self
                .allowed(i)
                .map(|j| {
                    *col_of.entry(j).or_insert_with(|| {
                        col_costs.push(self.costs[j]);
                        col_costs.len() - 1
                    })
                })
                .collect();
            rows.push(row);
        }
        lp::solve_covering(&col_costs, &rows).map_or(f64::INFINITY, |s| s.value)
    }
}

/// Bisection for the largest `p` where a monotone (true-then-false)
/// predicate holds.
pub fn bisect<F>(mut holds: F, tol: f64) -> Result<ThresholdEstimate>
where
    F: FnMut(f64) -> Result<bool>,
{
    if !(tol > 0.0) {
        return Err(Error::input(format!("tolerance {tol} must be positive")));
    }
    if holds(1.0)? {
        return Ok(ThresholdEstimate {
            value: 1.0,
            lo: 1.0,
            hi: 1.0,
            tol,
            degenerate: true,
        });
    }
    if !holds(0.0)? {
        return Ok(ThresholdEstimate {
            value: 0.0,
            lo: 0.0,
            hi: 0.0,
            tol,
            degenerate: true,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdEstimate {
        value: 0.5 * (lo + hi),
        lo,
        hi,
        tol,
        degenerate: false,
    })
}

pub fn solve_int(family: &SetSystem, p: f64, config: SolverConfig) -> Result<IntegerSolution> {
    CoverProblem::new(family, config)?.solve_int(p)
}

pub fn solve_frac(family: &SetSystem, p: f64, config: SolverConfig) -> Result<FractionalSolution> {
    CoverProblem::new(family, config)?.solve_frac(p)
}

pub fn is_p_small(family: &SetSystem, p: f64, config: SolverConfig) -> Result<bool> {
    CoverProblem::new(family, config)?.is_p_small(p)
}

pub fn threshold_pe(family: &SetSystem, config: SolverConfig) -> Result<ThresholdEstimate> {
    CoverProblem::new(family, config)?.threshold_pe()
}

pub fn threshold_pf(family: &SetSystem, config: SolverConfig) -> Result<ThresholdEstimate> {
    CoverProblem::new(family, config)?.threshold_pf()
}

/// Greedy cover. Falls back to the members themselves as candidates when
/// the full candidate universe exceeds the budget.
pub fn greedy_int_cover(family: &SetSystem, p: f64, config: SolverConfig) -> Result<IntegerSolution> {
    match CoverProblem::new(family, config) {
        Ok(prob) => prob.greedy_int_cover(p),
        Err(e) if e.is_resource() => members_only_greedy(family, p),
        Err(e) => Err(e),
    }
}

fn members_only_greedy(family: &SetSystem, p: f64) -> Result<IntegerSolution> {
    check_probability(p)?;
    // Members are pairwise distinct, and only supersets of a member are
    // covered by it; greedily every member is picked unless a smaller member
    // inside it already covers it.
    let mut chosen: Vec<Subset> = Vec::new();
    for h in family.members() {
        if !chosen.iter().any(|g| g.is_subset(h)) {
            chosen.push(*h);
        }
    }
    let cost = cost_of(&chosen, p);
    let (cover, cost) = if cost < 1.0 {
        (SetSystem::new(family.n(), chosen)?, cost)
    } else {
        (SetSystem::new(family.n(), [Subset::empty()])?, 1.0)
    };
    Ok(IntegerSolution {
        cover,
        cost,
        p,
        optimal: false,
    })
}
