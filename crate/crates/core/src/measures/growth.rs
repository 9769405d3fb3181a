//! Product sets in SL2(Z/qZ): triple products, powers `A^k`, and covering of
//! congruence subgroups.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::arith::divisors;
use crate::error::{Error, Result};
use crate::sl2::{congruence_coset, group_elements, GroupElement, DEFAULT_GROUP_CAP};

fn same_modulus(x: &[GroupElement], y: &[GroupElement]) -> Result<u64> {
    let q = x.first().or(y.first()).ok_or(Error::EmptySet)?.modulus();
    if let Some(g) = x.iter().chain(y).find(|g| g.modulus() != q) {
        return Err(Error::ModulusMismatch { left: q, right: g.modulus() });
    }
    Ok(q)
}

/// `X Y` as a sorted list, via a hash set of products. `cap` bounds the
/// number of products formed.
pub fn product_set(x: &[GroupElement], y: &[GroupElement], cap: u64) -> Result<Vec<GroupElement>> {
    same_modulus(x, y)?;
    let work = x.len() as u128 * y.len() as u128;
    if work > cap as u128 {
        return Err(Error::CapExceeded { what: "product set pairs", requested: work, cap: cap as u128 });
    }
    let mut seen: HashSet<GroupElement> = HashSet::with_capacity(x.len().max(y.len()));
    for a in x {
        for b in y {
            seen.insert(a.mul_unchecked(b));
        }
    }
    let mut out: Vec<GroupElement> = seen.into_iter().collect();
    out.sort_unstable();
    Ok(out)
}

fn distinct(set: &[GroupElement]) -> Vec<GroupElement> {
    let mut v = set.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TripleProduct {
    pub size: u64,
    pub size2: u64,
    pub size3: u64,
    /// `|AAA| / |A|` as `num/den` in lowest terms.
    pub ratio: String,
}

pub fn triple_product(set: &[GroupElement], cap: u64) -> Result<TripleProduct> {
    let a = distinct(set);
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let a2 = product_set(&a, &a, cap)?;
    let a3 = product_set(&a2, &a, cap)?;
    let g = crate::arith::gcd(a3.len() as u64, a.len() as u64);
    Ok(TripleProduct {
        size: a.len() as u64,
        size2: a2.len() as u64,
        size3: a3.len() as u64,
        ratio: format!("{}/{}", a3.len() as u64 / g, a.len() as u64 / g),
    })
}

/// `|A|, |A^2|, ..., |A^l_max|` with `A^k = A^{k-1} A`.
pub fn power_sizes(set: &[GroupElement], l_max: usize, cap: u64) -> Result<Vec<u64>> {
    let a = distinct(set);
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut sizes = vec![a.len() as u64];
    let mut cur = a.clone();
    for _ in 1..l_max {
        cur = product_set(&cur, &a, cap)?;
        sizes.push(cur.len() as u64);
    }
    Ok(sizes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HelfgottRow {
    pub l: u32,
    pub size_l: u64,
    pub size1: u64,
    pub size3: u64,
    /// `|A^l| / |A| <= (|A^3| / |A|)^(l-2)`.
    pub holds: bool,
}

/// Checks `|A^l| |A|^(l-3) <= |A^3|^(l-2)` for each `l` in `ls` (all `>= 3`).
pub fn helfgott_check(set: &[GroupElement], ls: &[u32], cap: u64) -> Result<Vec<HelfgottRow>> {
    let l_max = ls.iter().copied().max().unwrap_or(3).max(3) as usize;
    if ls.iter().any(|&l| l < 3) {
        return crate::error::precondition("Helfgott exponents start at 3");
    }
    let sizes = power_sizes(set, l_max, cap)?;
    let (s1, s3) = (sizes[0], sizes[2]);
    Ok(ls
        .iter()
        .map(|&l| {
            let sl = sizes[l as usize - 1];
            let lhs = sl as u128 * (s1 as u128).pow(l - 3);
            let rhs = (s3 as u128).pow(l - 2);
            HelfgottRow { l, size_l: sl, size1: s1, size3: s3, holds: lhs <= rhs }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundedGeneration {
    pub q: u64,
    pub k_max: u32,
    /// Least `k` with `Gamma(Q)/Gamma(q) inside A^k` for a proper divisor `Q`.
    pub k_cover: Option<u32>,
    /// Smallest such `Q` at `k_cover`.
    pub q_found: Option<u64>,
    /// `|A^k|` for `k = 1, ..., last computed`.
    pub sizes: Vec<u64>,
}

/// Grows `A^k` (exact-length products) as a bitset over SL2(Z/qZ) until it
/// contains the kernel of reduction to some proper divisor `Q` of `q`.
pub fn bounded_generation_probe(set: &[GroupElement], k_max: u32) -> Result<BoundedGeneration> {
    let a = distinct(set);
    let q = a.first().ok_or(Error::EmptySet)?.modulus();
    same_modulus(&a, &[])?;
    let group = group_elements(q)?;
    let index: HashMap<GroupElement, u32> = group.iter().enumerate().map(|(i, g)| (*g, i as u32)).collect();
    let cosets: Vec<(u64, Vec<u32>)> = divisors(q)
        .into_iter()
        .filter(|&d| d < q)
        .map(|d| Ok((d, congruence_coset(d, q, DEFAULT_GROUP_CAP)?.iter().map(|g| index[g]).collect())))
        .collect::<Result<_>>()?;
    let mut report = BoundedGeneration { q, k_max, k_cover: None, q_found: None, sizes: Vec::new() };
    let mut member = vec![false; group.len()];
    for g in &a {
        member[index[g] as usize] = true;
    }
    for k in 1..=k_max {
        if k > 1 {
            let mut next = vec![false; group.len()];
            for (i, _) in member.iter().enumerate().filter(|(_, m)| **m) {
                for g in &a {
                    next[index[&group[i].mul_unchecked(g)] as usize] = true;
                }
            }
            member = next;
        }
        report.sizes.push(member.iter().filter(|m| **m).count() as u64);
        if let Some((d, _)) = cosets.iter().find(|(_, idx)| idx.iter().all(|&i| member[i as usize])) {
            report.k_cover = Some(k);
            report.q_found = Some(*d);
            break;
        }
    }
    Ok(report)
}
