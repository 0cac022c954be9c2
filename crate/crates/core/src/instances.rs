//! Generators for example families and random test instances.
//!
//! Graph families live on the edge set of `K_n`, with edge `(i, j)`, `i < j`,
//! indexed lexicographically.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::{Subset, MAX_ELEMENTS};
use crate::system::{FractionalCover, SetSystem, TOL};

/// Largest vertex count for the `K_n` families.
pub const MAX_GRAPH_VERTICES: usize = 12;
/// Largest ground set for exhaustive `H_w` construction.
pub const MAX_HW_GROUND: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    PerfectMatchings { n: usize },
    Cliques { n: usize, k: usize },
    DisjointBlocks { m: usize, k: usize },
    RandomKuniform { n: usize, k: usize, m: usize, seed: u64 },
    FromFractional { cover: Vec<(Vec<usize>, f64)>, n: usize, minimal: bool },
}

/// Output of a generator: the family and, where natural, a fractional cover.
#[derive(Clone, Debug)]
pub struct Generated {
    pub family: SetSystem,
    pub cover: Option<FractionalCover>,
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<Generated> {
        Ok(match self {
            GeneratorSpec::PerfectMatchings { n } => Generated {
                family: gen_perfect_matchings(*n)?,
                cover: None,
            },
            GeneratorSpec::Cliques { n, k } => {
                let (family, cover) = gen_cliques(*n, *k)?;
                Generated {
                    family,
                    cover: Some(cover),
                }
            }
            GeneratorSpec::DisjointBlocks { m, k } => Generated {
                family: gen_disjoint_blocks(*m, *k)?,
                cover: None,
            },
            GeneratorSpec::RandomKuniform { n, k, m, seed } => Generated {
                family: gen_random_kuniform(*n, *k, *m, *seed)?,
                cover: None,
            },
            GeneratorSpec::FromFractional { cover, n, minimal } => {
                let w = FractionalCover::new(
                    *n,
                    cover
                        .iter()
                        .map(|(s, x)| (s.iter().copied().collect::<Subset>(), *x)),
                )?;
                let mode = if *minimal { HwMode::Minimal } else { HwMode::All };
                Generated {
                    family: build_hw(&w, mode)?,
                    cover: Some(w),
                }
            }
        })
    }
}

/// Index of edge `(i, j)` of `K_n` with `i < j`.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn check_graph_n(n: usize) -> Result<()> {
    if n < 2 || n > MAX_GRAPH_VERTICES {
        return Err(Error::input(format!(
            "vertex count {n} outside [2, {MAX_GRAPH_VERTICES}]"
        )));
    }
    Ok(())
}

/// All perfect matchings of `K_n`, as edge sets.
pub fn gen_perfect_matchings(n: usize) -> Result<SetSystem> {
    check_graph_n(n)?;
    if n % 2 == 1 {
        return Err(Error::input(format!("perfect matchings need even n, got {n}")));
    }
    let mut out = Vec::new();
    let mut used = vec![false; n];
    matchings(n, &mut used, Subset::empty(), &mut out);
    SetSystem::new(edge_count(n), out)
}

fn matchings(n: usize, used: &mut [bool], acc: Subset, out: &mut Vec<Subset>) {
    let Some(i) = (0..n).find(|&v| !used[v]) else {
        out.push(acc);
        return;
    };
    used[i] = true;
    for j in i + 1..n {
        if used[j] {
            continue;
        }
        used[j] = true;
        let mut next = acc;
        next.insert(edge_index(n, i, j));
        matchings(n, used, next, out);
        used[j] = false;
    }
    used[i] = false;
}

/// Edge sets of all `k`-cliques of `K_n`, with the fractional cover putting
/// weight one on every member.
pub fn gen_cliques(n: usize, k: usize) -> Result<(SetSystem, FractionalCover)> {
    check_graph_n(n)?;
    if k < 2 || k > n {
        return Err(Error::input(format!("clique size {k} outside [2, {n}]")));
    }
    let members: Vec<Subset> = itertools::Itertools::combinations(0..n, k)
        .map(|vs| {
            let mut s = Subset::empty();
            for (a, &i) in vs.iter().enumerate() {
                for &j in &vs[a + 1..] {
                    s.insert(edge_index(n, i, j));
                }
            }
            s
        })
        .collect();
    let family = SetSystem::new(edge_count(n), members)?;
    let cover = FractionalCover::new(family.n(), family.members().iter().map(|h| (*h, 1.0)))?;
    Ok((family, cover))
}

/// `m` pairwise disjoint blocks of `k` consecutive elements.
pub fn gen_disjoint_blocks(m: usize, k: usize) -> Result<SetSystem> {
    if m == 0 || k == 0 {
        return Err(Error::input("disjoint blocks need m, k >= 1"));
    }
    if m * k > MAX_ELEMENTS {
        return Err(Error::GroundTooLarge {
            n: m * k,
            max: MAX_ELEMENTS,
        });
    }
    SetSystem::new(m * k, (0..m).map(|b| (b * k..(b + 1) * k).collect()))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `m` distinct uniformly random `k`-subsets of `[0, n)`.
pub fn gen_random_kuniform(n: usize, k: usize, m: usize, seed: u64) -> Result<SetSystem> {
    if k > n {
        return Err(Error::input(format!("k = {k} exceeds n = {n}")));
    }
    if m as u128 > binomial(n, k) {
        return Err(Error::input(format!(
            "{m} members requested but only C({n},{k}) = {} exist",
            binomial(n, k)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = binomial(n, k);
    let members: Vec<Subset> = if total <= 1 << 16 && (m as u128) * 2 > total {
        let all: Vec<Subset> = itertools::Itertools::combinations(0..n, k)
            .map(|c| c.into_iter().collect())
            .collect();
        index::sample(&mut rng, all.len(), m)
            .into_iter()
            .map(|i| all[i])
            .collect()
    } else {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let s: Subset = index::sample(&mut rng, n, k).into_iter().collect();
            if seen.insert(s) {
                out.push(s);
            }
        }
        out
    };
    SetSystem::new(n, members)
}

/// A random family of `m` distinct subsets of `[0, n)` with sizes drawn
/// uniformly from `sizes`. Not necessarily an antichain.
pub fn gen_random_family(
    n: usize,
    m: usize,
    sizes: std::ops::RangeInclusive<usize>,
    rng: &mut impl Rng,
) -> Result<SetSystem> {
    let (lo, hi) = (*sizes.start(), (*sizes.end()).min(n));
    if lo > hi {
        return Err(Error::input("empty size range"));
    }
    let available: u128 = (lo..=hi).map(|k| binomial(n, k)).sum();
    if m as u128 > available {
        return Err(Error::input("not enough distinct subsets"));
    }
    let mut seen = BTreeSet::new();
    while seen.len() < m {
        let k = rng.gen_range(lo..=hi);
        let s: Subset = index::sample(rng, n, k).into_iter().collect();
        seen.insert(s);
    }
    SetSystem::new(n, seen)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HwMode {
    All,
    Minimal,
}

/// The family of all sets fractionally covered by `w`, or its
/// inclusion-minimal members.
pub fn build_hw(w: &FractionalCover, mode: HwMode) -> Result<SetSystem> {
    let n = w.n();
    if n > MAX_HW_GROUND {
        return Err(Error::Budget {
            what: "ground set for H_w enumeration",
            count: n,
            budget: MAX_HW_GROUND,
        });
    }
    if w.is_empty() {
        return Err(Error::input("fractional cover has empty support"));
    }
    let support: Vec<(u32, f64)> = w
        .iter()
        .map(|(s, x)| (s.iter().fold(0u32, |m, e| m | 1 << e), x))
        .collect();
    let covered = |h: u32| -> bool {
        support
            .iter()
            .filter(|(s, _)| s & !h == 0)
            .map(|(_, x)| x)
            .sum::<f64>()
            >= 1.0 - TOL
    };
    let in_hw: Vec<bool> = (0..1u32 << n).map(covered).collect();
    let members = (0..1u32 << n).filter(|&h| {
        in_hw[h as usize]
            && match mode {
                HwMode::All => true,
                // H_w is upward closed, so single-element removals suffice.
                HwMode::Minimal => (0..n).all(|x| h >> x & 1 == 0 || !in_hw[(h & !(1 << x)) as usize]),
            }
    });
    SetSystem::new(
        n,
        members.map(|h| (0..n).filter(|&x| h >> x & 1 == 1).collect()),
    )
}
