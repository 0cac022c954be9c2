//! Ground sets, set families, fractional covers and per-member weight
//! vectors, together with the cover predicates every other module builds on.

use std::collections::BTreeMap;

use crate::error::{check_probability, Error, Result};
use crate::subset::{Subset, MAX_ELEMENTS};

/// Comparison slack for closed `>=` constraints on accumulated float sums.
pub const TOL: f64 = 1e-12;

/// The ground set `{0, .., n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroundSet {
    n: usize,
}

impl GroundSet {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGround);
        }
        if n > MAX_ELEMENTS {
            return Err(Error::GroundTooLarge {
                n,
                max: MAX_ELEMENTS,
            });
        }
        Ok(GroundSet { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.n)
    }

    pub fn check(&self, s: &Subset) -> Result<()> {
        match s.max_element() {
            Some(x) if x >= self.n => Err(Error::ElementOutOfRange {
                element: x,
                n: self.n,
            }),
            _ => Ok(()),
        }
    }
}

/// A deduplicated, canonically ordered family of subsets of a ground set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SetSystem {
    ground: GroundSet,
    members: Vec<Subset>,
}

impl SetSystem {
    pub fn new(n: usize, members: impl IntoIterator<Item = Subset>) -> Result<Self> {
        let ground = GroundSet::new(n)?;
        let mut members: Vec<Subset> = members.into_iter().collect();
        for m in &members {
            ground.check(m)?;
        }
        members.sort();
        members.dedup();
        Ok(SetSystem { ground, members })
    }

    pub fn from_lists<L: AsRef<[usize]>>(n: usize, lists: &[L]) -> Result<Self> {
        Self::new(
            n,
            lists.iter().map(|l| l.as_ref().iter().copied().collect()),
        )
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn ground(&self) -> GroundSet {
        self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.n
    }

    pub fn members(&self) -> &[Subset] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, s: &Subset) -> Option<usize> {
        self.members.binary_search(s).ok()
    }

    /// Largest member size.
    pub fn max_size(&self) -> usize {
        self.members.iter().map(Subset::len).max().unwrap_or(0)
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.members.iter().map(Subset::to_vec).collect()
    }

    fn same_ground(&self, other: &SetSystem) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::GroundMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(())
    }
}

/// True iff every member of `family` contains some member of `candidate`.
pub fn is_cover(candidate: &SetSystem, family: &SetSystem) -> Result<bool> {
    candidate.same_ground(family)?;
    Ok(covers(candidate.members(), family.members()))
}

pub(crate) fn covers(candidate: &[Subset], family: &[Subset]) -> bool {
    family
        .iter()
        .all(|h| candidate.iter().any(|g| g.is_subset(h)))
}

/// `sum over G of p^|G|`.
pub fn cover_cost(candidate: &SetSystem, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(cost_of(candidate.members(), p))
}

pub(crate) fn cost_of(sets: &[Subset], p: f64) -> f64 {
    sets.iter().map(|g| p.powi(g.len() as i32)).sum()
}

/// Sparse weights on subsets, each in `[0, 1]`. Zero weights are not stored.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FractionalCover {
    n: usize,
    entries: BTreeMap<Subset, f64>,
}

impl FractionalCover {
    pub fn new(n: usize, entries: impl IntoIterator<Item = (Subset, f64)>) -> Result<Self> {
        let ground = GroundSet::new(n)?;
        let mut map = BTreeMap::new();
        for (set, weight) in entries {
            ground.check(&set)?;
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::Weight { weight });
            }
            if map.contains_key(&set) {
                return Err(Error::input(format!(
                    "set {:?} listed twice in fractional cover",
                    set
                )));
            }
            if weight > 0.0 {
                map.insert(set, weight);
            }
        }
        Ok(FractionalCover { n, entries: map })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, set: &Subset) -> f64 {
        self.entries.get(set).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Subset, f64)> + '_ {
        self.entries.iter().map(|(s, &w)| (s, w))
    }

    pub fn support(&self) -> impl Iterator<Item = &Subset> + '_ {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest support set size `t`.
    pub fn support_bound(&self) -> usize {
        self.entries.keys().map(Subset::len).max().unwrap_or(0)
    }

    /// `sum over W ⊆ H of w(W)`.
    pub fn mass_inside(&self, h: &Subset) -> f64 {
        self.iter()
            .filter(|(w, _)| w.is_subset(h))
            .map(|(_, x)| x)
            .sum()
    }

    /// `sum over W of w(W) p^|W|`.
    pub fn cost(&self, p: f64) -> Result<f64> {
        check_probability(p)?;
        Ok(self.iter().map(|(w, x)| x * p.powi(w.len() as i32)).sum())
    }
}

/// True iff every member of `family` has at least unit weight inside it.
pub fn is_fractional_cover(w: &FractionalCover, family: &SetSystem) -> Result<bool> {
    if w.n() != family.n() {
        return Err(Error::GroundMismatch {
            left: w.n(),
            right: family.n(),
        });
    }
    Ok(family
        .members()
        .iter()
        .all(|h| w.mass_inside(h) >= 1.0 - TOL))
}

/// A weight vector supported on a host set.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    host: Subset,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(n: usize, host: Subset, weights: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let ground = GroundSet::new(n)?;
        ground.check(&host)?;
        let mut dense = vec![0.0; n];
        for (x, weight) in weights {
            if x >= n {
                return Err(Error::ElementOutOfRange { element: x, n });
            }
            if !(0.0..=1.0).contains(&weight) {
                return Err(Error::Weight { weight });
            }
            if weight > 0.0 && !host.contains(x) {
                return Err(Error::input(format!(
                    "weight on element {x} outside host {:?}",
                    host
                )));
            }
            dense[x] = weight;
        }
        Ok(WeightVector {
            host,
            weights: dense,
        })
    }

    /// Weight `1/|H|` on each element of the host.
    pub fn uniform(n: usize, host: Subset) -> Result<Self> {
        let k = host.len().max(1) as f64;
        Self::new(n, host, host.iter().map(|x| (x, 1.0 / k)))
    }

    pub fn host(&self) -> &Subset {
        &self.host
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights.get(x).copied().unwrap_or(0.0)
    }

    /// `λ(S) = sum over x in S ∩ H of λ(x)`.
    pub fn mass(&self, s: &Subset) -> f64 {
        (s.intersection(&self.host)).iter().map(|x| self.weights[x]).sum()
    }

    pub fn total(&self) -> f64 {
        self.mass(&self.host)
    }
}

/// Free-function form of [`WeightVector::mass`].
pub fn weighted_mass(lambda: &WeightVector, s: &Subset) -> f64 {
    lambda.mass(s)
}

/// One weight vector per family member, aligned with the family's order.
#[derive(Clone, Debug, PartialEq)]
pub struct Lambdas {
    vectors: Vec<WeightVector>,
}

impl Lambdas {
    /// Matches `vectors` to members by host. Every member needs exactly one.
    pub fn new(family: &SetSystem, vectors: Vec<WeightVector>) -> Result<Self> {
        let mut by_host: BTreeMap<Subset, WeightVector> = BTreeMap::new();
        for v in vectors {
            if v.n() != family.n() {
                return Err(Error::GroundMismatch {
                    left: v.n(),
                    right: family.n(),
                });
            }
            if by_host.insert(v.host, v).is_some() {
                return Err(Error::input("two weight vectors share a host"));
            }
        }
        let mut aligned = Vec::with_capacity(family.len());
        for h in family.members() {
            let v = by_host
                .remove(h)
                .ok_or_else(|| Error::input(format!("no weight vector for member {:?}", h)))?;
            aligned.push(v);
        }
        if !by_host.is_empty() {
            return Err(Error::input("weight vector host is not a family member"));
        }
        Ok(Lambdas { vectors: aligned })
    }

    pub fn uniform(family: &SetSystem) -> Result<Self> {
        let vectors = family
            .members()
            .iter()
            .map(|h| WeightVector::uniform(family.n(), *h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Lambdas { vectors })
    }

    pub(crate) fn from_aligned(vectors: Vec<WeightVector>) -> Self {
        Lambdas { vectors }
    }

    pub fn get(&self, member: usize) -> &WeightVector {
        &self.vectors[member]
    }

    pub fn iter(&self) -> impl Iterator<Item = &WeightVector> + '_ {
        self.vectors.iter()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Checks that every vector has total mass at least one.
    pub fn check_unit_mass(&self) -> Result<()> {
        match self.vectors.iter().find(|v| v.total() < 1.0 - TOL) {
            Some(v) => Err(Error::input(format!(
                "weight vector on {:?} has mass {} < 1",
                v.host,
                v.total()
            ))),
            None => Ok(()),
        }
    }

    /// Largest weighted mass of `s` over all members.
    pub fn max_mass(&self, s: &Subset) -> f64 {
        self.vectors
            .iter()
            .map(|v| v.mass(s))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
