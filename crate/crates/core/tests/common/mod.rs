//! Independent oracles shared by the integration tests. Everything here is
//! brute force over explicit enumerations and avoids the library's search
//! code.
#![allow(dead_code)]

use itertools::Itertools;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use threshold_lab::montecarlo::key_lemma_integrand;
use threshold_lab::fragments::TowerBudget;
use threshold_lab::instances::gen_random_family;
use threshold_lab::{Lambdas, SetSystem, Subset, WeightVector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mask_of(s: &Subset) -> u64 {
    s.iter().fold(0u64, |m, x| m | (1 << x))
}

/// Minimum `Σ p^|G|` over all covers, by dynamic programming over sets of
/// covered members with every subset of the ground set as a candidate.
pub fn brute_int_cost(family: &SetSystem, p: f64) -> f64 {
    let n = family.n();
    assert!(n <= 16, "oracle enumerates all 2^n subsets");
    let members: Vec<u64> = family.members().iter().map(mask_of).collect();
    let m = members.len();
    if m == 0 {
        return 0.0;
    }
    // covers[g] = members containing g
    let covers: Vec<u32> = (0..1u64 << n)
        .map(|g| {
            members
                .iter()
                .enumerate()
                .filter(|(_, &h)| g & h == g)
                .fold(0u32, |acc, (i, _)| acc | (1 << i))
        })
        .collect();
    let full = (1u32 << m) - 1;
    let mut dp = vec![f64::INFINITY; 1 << m];
    dp[0] = 0.0;
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let h = members[i];
        // Some set of the cover contains-in member i; try every G ⊆ H_i.
        let mut g = h;
        loop {
            let rest = mask & !covers[g as usize];
            let c = dp[rest as usize] + p.powi(g.count_ones() as i32);
            if c < dp[mask as usize] {
                dp[mask as usize] = c;
            }
            if g == 0 {
                break;
            }
            g = (g - 1) & h;
        }
    }
    dp[full as usize]
}

/// Cutoff computed straight from the definition: the smallest 1-based `b`
/// with `λ(W ∩ suffix) ≥ λ(suffix)/2`, suffixes of `H` sorted by weight
/// descending with ties by index.
pub fn oracle_cutoff(w: &Subset, h: &Subset, lambda: &WeightVector) -> (usize, Subset, Subset) {
    let ordered: Vec<usize> = h
        .iter()
        .sorted_by(|&a, &b| lambda.get(b).partial_cmp(&lambda.get(a)).unwrap().then(a.cmp(&b)))
        .collect();
    for j in 0..=ordered.len() {
        let suffix = &ordered[j..];
        let total: f64 = suffix.iter().map(|&x| lambda.get(x)).sum();
        let inside: f64 = suffix.iter().filter(|&&x| w.contains(x)).map(|&x| lambda.get(x)).sum();
        if inside >= 0.5 * total - 1e-12 {
            return (
                j + 1,
                ordered[..j].iter().copied().collect(),
                suffix.iter().copied().collect(),
            );
        }
    }
    unreachable!("the empty suffix always qualifies")
}

/// `(b_i, R_i)` of the residual procedure.
pub fn oracle_trace(samples: &[Subset], h: &Subset, lambda: &WeightVector) -> (Vec<usize>, Vec<Subset>) {
    let mut current = *h;
    let mut bs = Vec::new();
    let mut rs = Vec::new();
    for w in samples {
        let (b, below, above) = oracle_cutoff(w, &current, lambda);
        bs.push(b);
        rs.push(below);
        current = above - *w;
    }
    (bs, rs)
}

fn subsets_of_size(s: &Subset, k: usize) -> Vec<Subset> {
    s.iter().combinations(k).map(|c| c.into_iter().collect()).collect()
}

/// Every witness `(Ŵ, Ĥ)` of the `t`-feasibility of `z`, in no particular
/// order: all `Ŵ_i ⊆ Z_i` of size `|Z_i| - t_i` and all members.
pub fn oracle_witnesses(z: &[Subset], t: &[usize], family: &SetSystem, lambdas: &Lambdas) -> Vec<(Vec<Subset>, usize)> {
    let choices: Vec<Vec<Subset>> = z
        .iter()
        .zip(t)
        .map(|(zi, &ti)| if ti > zi.len() { vec![] } else { subsets_of_size(zi, zi.len() - ti) })
        .collect();
    let mut out = Vec::new();
    for (idx, h) in family.members().iter().enumerate() {
        for ws in choices.iter().multi_cartesian_product() {
            let ws: Vec<Subset> = ws.into_iter().copied().collect();
            let (_, rs) = oracle_trace(&ws, h, lambdas.get(idx));
            if rs.iter().zip(z).all(|(r, zi)| r.is_subset(zi)) {
                out.push((ws, idx));
            }
        }
    }
    out
}

pub fn oracle_feasible(z: &[Subset], t: &[usize], family: &SetSystem, lambdas: &Lambdas) -> bool {
    let choices: Vec<Vec<Subset>> = z
        .iter()
        .zip(t)
        .map(|(zi, &ti)| if ti > zi.len() { vec![] } else { subsets_of_size(zi, zi.len() - ti) })
        .collect();
    family.members().iter().enumerate().any(|(idx, h)| {
        choices.iter().multi_cartesian_product().any(|ws| {
            let ws: Vec<Subset> = ws.into_iter().copied().collect();
            let (_, rs) = oracle_trace(&ws, h, lambdas.get(idx));
            rs.iter().zip(z).all(|(r, zi)| r.is_subset(zi))
        })
    })
}

/// The minimum tower by exhaustive enumeration: all tuples of pairwise
/// disjoint `T_i ⊆ H \ W_i`, the lexicographically smallest size vector,
/// then the canonically smallest tuple among those.
pub fn oracle_min_tower(samples: &[Subset], h: &Subset, family: &SetSystem, lambdas: &Lambdas) -> Vec<Subset> {
    let s = samples.len();
    // Assign each element of H to one of s fragments or to none.
    let elems = h.to_vec();
    let mut best: Option<(Vec<usize>, Vec<Subset>)> = None;
    let total = (s + 1).pow(elems.len() as u32);
    for code in 0..total {
        let mut frags = vec![Subset::empty(); s];
        let mut c = code;
        let mut ok = true;
        for &x in &elems {
            let slot = c % (s + 1);
            c /= s + 1;
            if slot < s {
                if samples[slot].contains(x) {
                    ok = false;
                    break;
                }
                frags[slot].insert(x);
            }
        }
        if !ok {
            continue;
        }
        let t: Vec<usize> = frags.iter().map(Subset::len).collect();
        if let Some((bt, bf)) = &best {
            if (t.as_slice(), frags.as_slice()) >= (bt.as_slice(), bf.as_slice()) {
                continue;
            }
        }
        let z: Vec<Subset> = frags.iter().zip(samples).map(|(f, w)| *f | *w).collect();
        if oracle_feasible(&z, &t, family, lambdas) {
            best = Some((t, frags));
        }
    }
    best.expect("the residual fallback is always a tower").1
}

/// Mean and variance of the key-lemma integrand over `W_1..W_s ~ X_q`, by
/// summing over all `2^{ns}` tuples.
pub fn exhaustive_key_lemma(family: &SetSystem, lambdas: &Lambdas, p: f64, q: f64, s: usize) -> (f64, f64) {
    let n = family.n();
    assert!(n * s <= 16);
    let mut total = 0.0;
    let mut square = 0.0;
    let all: Vec<Subset> = (0..1u64 << n)
        .map(|m| (0..n).filter(|&x| m >> x & 1 == 1).collect())
        .collect();
    for tuple in std::iter::repeat(all.iter()).take(s).multi_cartesian_product() {
        let samples: Vec<Subset> = tuple.into_iter().copied().collect();
        let prob: f64 = samples
            .iter()
            .map(|w| q.powi(w.len() as i32) * (1.0 - q).powi((n - w.len()) as i32))
            .product();
        if prob == 0.0 {
            continue;
        }
        let v = key_lemma_integrand(&samples, family, lambdas, p, &TowerBudget::default()).unwrap();
        total += prob * v;
        square += prob * v * v;
    }
    (total, (square - total * total).max(0.0))
}

/// `P(Bin(k, q) >= j)`.
pub fn binomial_tail(k: usize, q: f64, j: usize) -> f64 {
    (j..=k)
        .map(|i| binom(k, i) * q.powi(i as i32) * (1.0 - q).powi((k - i) as i32))
        .sum()
}

pub fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Random family on `n` elements with `m` distinct members of size `1..=max`.
pub fn random_family(rng: &mut impl Rng, n: usize, m: usize, max: usize) -> SetSystem {
    let available: usize = (1..=max.min(n)).map(|k| binom(n, k) as usize).sum();
    gen_random_family(n, m.min(available), 1..=max.min(n), rng).unwrap()
}

/// Weight vectors summing to one on every member, drawn in one of three
/// styles: uniform, generic positive, or coarse values with ties and zeros.
pub fn random_lambdas(rng: &mut impl Rng, family: &SetSystem) -> Lambdas {
    let style = rng.gen_range(0..3);
    let n = family.n();
    let vectors = family
        .members()
        .iter()
        .map(|h| {
            let raw: Vec<(usize, f64)> = h
                .iter()
                .map(|x| {
                    let v = match style {
                        0 => 1.0,
                        1 => rng.gen_range(0.01..1.0),
                        _ => rng.gen_range(0..4) as f64,
                    };
                    (x, v)
                })
                .collect();
            let total: f64 = raw.iter().map(|p| p.1).sum();
            let raw = if total > 0.0 {
                raw
            } else {
                raw.into_iter().map(|(x, _)| (x, 1.0)).collect()
            };
            let total: f64 = raw.iter().map(|p| p.1).sum();
            WeightVector::new(n, *h, raw.into_iter().map(|(x, v)| (x, v / total))).unwrap()
        })
        .collect();
    Lambdas::new(family, vectors).unwrap()
}

pub fn random_subset(rng: &mut impl Rng, n: usize, q: f64) -> Subset {
    (0..n).filter(|_| rng.gen::<f64>() < q).collect()
}
