//! Cutoffs, residual traces and towers of minimum fragments.
//!
//! For a host `H` with weights `λ`, order `H` by decreasing weight (ties by
//! ascending index) as `h_1, .., h_k`. The cutoff `b(W, H, λ)` is the smallest
//! position whose suffix `{h_b, ..}` has at least half of its weight inside
//! `W`; position `k + 1` (empty suffix) always qualifies.
//!
//! Iterating the cutoff over a tuple of samples `W_1, .., W_s` gives the
//! residual trace `H_1 = H`, `R_i = (H_i)_{<b_i}`,
//! `H_{i+1} = (H_i)_{>=b_i} \ W_i`. A tuple `Z` is `t`-feasible when some
//! member `Ĥ` and samples `Ŵ_i ⊆ Z_i` with `|Ŵ_i| = |Z_i| - t_i` have every
//! residual `R_i(Ŵ, Ĥ)` inside `Z_i`. A tower of fragments of `(W, H)` is a
//! tuple of pairwise disjoint `T_i ⊆ H \ W_i` such that `Z_i = T_i ∪ W_i` is
//! `(|T_1|, .., |T_s|)`-feasible; the minimum tower has the lexicographically
//! smallest size vector, ties broken by canonical order of `T_1`, then `T_2`,
//! and so on.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::Subset;
use crate::system::{Lambdas, SetSystem, WeightVector, TOL};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffResult {
    /// One-based cutoff position in `[1, |H| + 1]`.
    pub b: usize,
    /// Host elements by decreasing weight, ties by ascending index.
    pub ordered: Vec<usize>,
    pub below: Subset,
    pub at_or_above: Subset,
}

pub fn cutoff(w: &Subset, h: &Subset, lambda: &WeightVector) -> CutoffResult {
    let mut ordered = h.to_vec();
    ordered.sort_by(|&a, &b| lambda.get(b).total_cmp(&lambda.get(a)));
    let k = ordered.len();
    // suffix_total[j] / suffix_in_w[j]: weight of ordered[j..] and of its
    // intersection with w.
    let mut suffix_total = vec![0.0; k + 1];
    let mut suffix_in_w = vec![0.0; k + 1];
    for j in (0..k).rev() {
        let x = ordered[j];
        let lx = lambda.get(x);
        suffix_total[j] = suffix_total[j + 1] + lx;
        suffix_in_w[j] = suffix_in_w[j + 1] + if w.contains(x) { lx } else { 0.0 };
    }
    let j = (0..=k)
        .find(|&j| suffix_in_w[j] >= 0.5 * suffix_total[j] - TOL)
        .unwrap_or(k);
    CutoffResult {
        b: j + 1,
        below: ordered[..j].iter().copied().collect(),
        at_or_above: ordered[j..].iter().copied().collect(),
        ordered,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualTrace {
    pub samples: Vec<Subset>,
    pub b: Vec<usize>,
    pub residuals: Vec<Subset>,
    /// `H_1, .., H_{s+1}`.
    pub chain: Vec<Subset>,
}

impl ResidualTrace {
    /// Union of all residuals.
    pub fn residual_union(&self) -> Subset {
        self.residuals.iter().fold(Subset::empty(), |a, r| a | *r)
    }
}

pub fn residual_trace(samples: &[Subset], h: &Subset, lambda: &WeightVector) -> ResidualTrace {
    let mut chain = vec![*h];
    let mut b = Vec::with_capacity(samples.len());
    let mut residuals = Vec::with_capacity(samples.len());
    let mut current = *h;
    for w in samples {
        let cut = cutoff(w, &current, lambda);
        b.push(cut.b);
        residuals.push(cut.below);
        current = cut.at_or_above - *w;
        chain.push(current);
    }
    ResidualTrace {
        samples: samples.to_vec(),
        b,
        residuals,
        chain,
    }
}

/// A witness `(b̂, Ŵ, Ĥ)` of `t`-feasibility, with the residuals
/// `R_i(Ŵ, Ĥ)` it induces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub b: Vec<usize>,
    pub samples: Vec<Subset>,
    pub host: Subset,
    pub host_index: usize,
    pub residuals: Vec<Subset>,
}

/// Limits on the exponential tower search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerBudget {
    pub max_host: usize,
    pub max_rounds: usize,
    pub max_family: usize,
}

impl Default for TowerBudget {
    fn default() -> Self {
        TowerBudget {
            max_host: 8,
            max_rounds: 3,
            max_family: 32,
        }
    }
}

impl TowerBudget {
    pub fn check(&self, family: &SetSystem, rounds: usize) -> Result<()> {
        let over = |what, count, budget| Err(Error::Budget { what, count, budget });
        if family.len() > self.max_family {
            return over("family members for towers", family.len(), self.max_family);
        }
        if rounds > self.max_rounds {
            return over("sample rounds for towers", rounds, self.max_rounds);
        }
        if family.max_size() > self.max_host {
            return over("host size for towers", family.max_size(), self.max_host);
        }
        Ok(())
    }
}

fn check_lambdas(family: &SetSystem, lambdas: &Lambdas) -> Result<()> {
    if lambdas.len() != family.len()
        || family
            .members()
            .iter()
            .zip(lambdas.iter())
            .any(|(h, l)| h != l.host())
    {
        return Err(Error::input("weight vectors are not aligned with the family"));
    }
    Ok(())
}

/// The canonical witness of `t`-feasibility of `z`, if any.
///
/// Members are tried in family order. For each round, the part of `Ŵ_i`
/// inside the current chain set `H_i` is enumerated in canonical subset
/// order; elements of `Z_i` outside `H_i` cannot influence the trace, and the
/// kept ones are the smallest-indexed. The first success is returned, which
/// makes the witness a function of `(z, t)`.
pub fn find_witness(
    z: &[Subset],
    t: &[usize],
    family: &SetSystem,
    lambdas: &Lambdas,
) -> Result<Option<Witness>> {
    if z.len() != t.len() {
        return Err(Error::input("Z and t have different lengths"));
    }
    if let Some(i) = (0..z.len()).find(|&i| t[i] > z[i].len()) {
        return Err(Error::input(format!(
            "t_{} = {} exceeds |Z_{}| = {}",
            i + 1,
            t[i],
            i + 1,
            z[i].len()
        )));
    }
    check_lambdas(family, lambdas)?;
    for (idx, h) in family.members().iter().enumerate() {
        let lambda = lambdas.get(idx);
        let mut state = WitnessSearch {
            z,
            t,
            lambda,
            b: Vec::with_capacity(z.len()),
            samples: Vec::with_capacity(z.len()),
            residuals: Vec::with_capacity(z.len()),
        };
        if state.extend(*h) {
            return Ok(Some(Witness {
                b: state.b,
                samples: state.samples,
                host: *h,
                host_index: idx,
                residuals: state.residuals,
            }));
        }
    }
    Ok(None)
}

struct WitnessSearch<'a> {
    z: &'a [Subset],
    t: &'a [usize],
    lambda: &'a WeightVector,
    b: Vec<usize>,
    samples: Vec<Subset>,
    residuals: Vec<Subset>,
}

impl WitnessSearch<'_> {
    fn extend(&mut self, current: Subset) -> bool {
        let i = self.samples.len();
        if i == self.z.len() {
            return true;
        }
        let zi = self.z[i];
        let ti = self.t[i];
        let relevant = zi & current;
        let outside = (zi - current).to_vec();
        let inside = relevant.to_vec();
        let (r, o) = (inside.len(), outside.len());
        let min_removed_inside = ti.saturating_sub(o);
        let max_removed_inside = ti.min(r);
        if min_removed_inside > max_removed_inside {
            return false;
        }
        for keep_inside in (r - max_removed_inside)..=(r - min_removed_inside) {
            let removed_outside = ti - (r - keep_inside);
            let kept_outside: Subset = outside[..o - removed_outside].iter().copied().collect();
            for kept in inside.iter().copied().combinations(keep_inside) {
                let w: Subset = kept.into_iter().collect::<Subset>() | kept_outside;
                let cut = cutoff(&w, &current, self.lambda);
                if !cut.below.is_subset(&zi) {
                    continue;
                }
                self.b.push(cut.b);
                self.samples.push(w);
                self.residuals.push(cut.below);
                if self.extend(cut.at_or_above - w) {
                    return true;
                }
                self.b.pop();
                self.samples.pop();
                self.residuals.pop();
            }
        }
        false
    }
}

/// A tower of fragments with its certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TowerCertificate {
    pub fragments: Vec<Subset>,
    pub z: Vec<Subset>,
    pub t: Vec<usize>,
    pub witness: Witness,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentUnion {
    pub set: Subset,
    pub size: usize,
}

impl TowerCertificate {
    pub fn union(&self) -> FragmentUnion {
        let set = self.fragments.iter().fold(Subset::empty(), |a, f| a | *f);
        FragmentUnion {
            set,
            size: self.t.iter().sum(),
        }
    }

    pub fn is_empty_tower(&self) -> bool {
        self.t.iter().all(|&x| x == 0)
    }
}

fn lambda_for<'a>(family: &SetSystem, lambdas: &'a Lambdas, h: &Subset) -> Result<&'a WeightVector> {
    let idx = family
        .position(h)
        .ok_or_else(|| Error::input(format!("{:?} is not a family member", h)))?;
    Ok(lambdas.get(idx))
}

/// `T_i = R_i(W, H) \ W_i`, always a tower of fragments.
pub fn fallback_tower(samples: &[Subset], h: &Subset, lambda: &WeightVector) -> Vec<Subset> {
    let trace = residual_trace(samples, h, lambda);
    trace
        .residuals
        .iter()
        .zip(samples)
        .map(|(r, w)| *r - *w)
        .collect()
}

/// Checks whether `fragments` is a tower of fragments of `(samples, h)` and
/// returns its canonical certificate if so.
pub fn certify_tower(
    samples: &[Subset],
    h: &Subset,
    fragments: &[Subset],
    family: &SetSystem,
    lambdas: &Lambdas,
) -> Result<Option<TowerCertificate>> {
    if fragments.len() != samples.len() {
        return Err(Error::input("fragment and sample tuples differ in length"));
    }
    let mut used = Subset::empty();
    for (f, w) in fragments.iter().zip(samples) {
        if !f.is_subset(h) || !f.is_disjoint(w) || !f.is_disjoint(&used) {
            return Ok(None);
        }
        used = used | *f;
    }
    let z: Vec<Subset> = fragments.iter().zip(samples).map(|(f, w)| *f | *w).collect();
    let t: Vec<usize> = fragments.iter().map(Subset::len).collect();
    Ok(find_witness(&z, &t, family, lambdas)?.map(|witness| TowerCertificate {
        fragments: fragments.to_vec(),
        z,
        t,
        witness,
    }))
}

fn size_vectors(caps: &[usize], total: usize) -> Vec<Vec<usize>> {
    fn rec(caps: &[usize], left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let i = prefix.len();
        if i == caps.len() {
            out.push(prefix.clone());
            return;
        }
        for x in 0..=caps[i].min(left) {
            prefix.push(x);
            rec(caps, left - x, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(caps, total, &mut Vec::new(), &mut out);
    out
}

/// The minimum tower of fragments of `(samples, h)`.
pub fn minimum_tower(
    samples: &[Subset],
    h: &Subset,
    family: &SetSystem,
    lambdas: &Lambdas,
    budget: &TowerBudget,
) -> Result<TowerCertificate> {
    if samples.is_empty() {
        return Err(Error::input("at least one sample round is required"));
    }
    budget.check(family, samples.len())?;
    check_lambdas(family, lambdas)?;
    lambda_for(family, lambdas, h)?;
    for s in samples {
        family.ground().check(s)?;
    }
    let caps: Vec<usize> = samples.iter().map(|w| (*h - *w).len()).collect();
    for t in size_vectors(&caps, h.len()) {
        let mut search = TowerSearch {
            samples,
            h: *h,
            t: &t,
            family,
            lambdas,
            fragments: Vec::with_capacity(t.len()),
        };
        if let Some(cert) = search.run(Subset::empty())? {
            return Ok(cert);
        }
    }
    unreachable!("the residual fallback is always a tower of fragments")
}

struct TowerSearch<'a> {
    samples: &'a [Subset],
    h: Subset,
    t: &'a [usize],
    family: &'a SetSystem,
    lambdas: &'a Lambdas,
    fragments: Vec<Subset>,
}

impl TowerSearch<'_> {
    fn run(&mut self, used: Subset) -> Result<Option<TowerCertificate>> {
        let i = self.fragments.len();
        if i == self.samples.len() {
            let z: Vec<Subset> = self
                .fragments
                .iter()
                .zip(self.samples)
                .map(|(f, w)| *f | *w)
                .collect();
            return Ok(find_witness(&z, self.t, self.family, self.lambdas)?.map(|witness| {
                TowerCertificate {
                    fragments: self.fragments.clone(),
                    z,
                    t: self.t.to_vec(),
                    witness,
                }
            }));
        }
        let avail = (self.h - self.samples[i] - used).to_vec();
        if avail.len() < self.t[i] {
            return Ok(None);
        }
        for pick in avail.into_iter().combinations(self.t[i]) {
            let f: Subset = pick.into_iter().collect();
            self.fragments.push(f);
            let found = self.run(used | f)?;
            self.fragments.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

/// `{∪T(W, H) : H in family}`, the cover induced by minimum towers.
pub fn tower_cover(
    samples: &[Subset],
    family: &SetSystem,
    lambdas: &Lambdas,
    budget: &TowerBudget,
) -> Result<SetSystem> {
    let unions = family
        .members()
        .iter()
        .map(|h| minimum_tower(samples, h, family, lambdas, budget).map(|c| c.union().set))
        .collect::<Result<Vec<_>>>()?;
    SetSystem::new(family.n(), unions)
}

/// Recovers `(W, T)` from `(Z, t, U)` through the canonical witness of `Z`.
pub fn decode_fragments(
    z: &[Subset],
    t: &[usize],
    u: &Subset,
    family: &SetSystem,
    lambdas: &Lambdas,
) -> Result<(Vec<Subset>, Vec<Subset>)> {
    let witness = find_witness(z, t, family, lambdas)?
        .ok_or_else(|| Error::input("Z is not t-feasible"))?;
    let support = witness.residuals.iter().fold(Subset::empty(), |a, r| a | *r);
    if !u.is_subset(&support) {
        return Err(Error::input("U is not inside the witness residuals"));
    }
    if u.len() != t.iter().sum::<usize>() {
        return Err(Error::input("|U| differs from the sum of t"));
    }
    let fragments: Vec<Subset> = witness.residuals.iter().map(|r| *u & *r).collect();
    if fragments.iter().zip(t).any(|(f, &ti)| f.len() != ti) {
        return Err(Error::input("U splits across residuals inconsistently with t"));
    }
    let samples = z.iter().zip(&fragments).map(|(zi, f)| *zi - *f).collect();
    Ok((samples, fragments))
}

/// Each fragment lies in its witness residual and holds at least half of it.
pub fn verify_key_property(cert: &TowerCertificate) -> bool {
    cert.fragments
        .iter()
        .zip(&cert.witness.residuals)
        .all(|(f, r)| f.is_subset(r) && 2 * f.len() >= r.len())
}
