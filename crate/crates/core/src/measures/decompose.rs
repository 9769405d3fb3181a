//! Congruence averages `mu_Q` and the components
//! `f_Q = sum_{q' | Q} m(q') mu_{q'}`, which sum back to `mu` over `Q | q`.
//!
//! Functions constant on classes mod `Q` are stored once per class as a
//! [`ClassFunction`] (a function on SL2(Z/QZ)); lifting to SL2(Z/qZ) is only
//! done on request.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{GroupMeasure, MeasureKind};
use crate::arith::{divisors, factorize};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sl2::{group_elements, group_order, GroupElement};

type Key = [u32; 4];

fn key(entries: Key, level: u64) -> Key {
    entries.map(|x| x % level as u32)
}

fn level_keys(level: u64) -> Result<Vec<Key>> {
    if level == 1 {
        return Ok(vec![[0; 4]]);
    }
    Ok(group_elements(level)?.iter().map(GroupElement::entries).collect())
}

fn order(level: u64) -> u64 {
    if level == 1 {
        1
    } else {
        group_order(level)
    }
}

fn check_divides(big_q: u64, q: u64) -> Result<()> {
    if big_q == 0 || !q.is_multiple_of(big_q) {
        return Err(Error::NotDivisor { divisor: big_q, modulus: q });
    }
    Ok(())
}

/// Function on SL2(Z/qZ) that only depends on the class mod `level`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassFunction<V> {
    q: u64,
    level: u64,
    values: HashMap<Key, V>,
}

impl<V: Scalar> ClassFunction<V> {
    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Value on the class of `entries` (entries mod any multiple of `level`).
    pub fn at(&self, entries: Key) -> V {
        self.values.get(&key(entries, self.level)).cloned().unwrap_or_else(V::zero)
    }

    /// The same function as a measure on SL2(Z/qZ).
    pub fn lift(&self, kind: MeasureKind) -> Result<GroupMeasure<V>> {
        let group = group_elements(self.q)?;
        let values = group
            .iter()
            .filter_map(|g| self.values.get(&key(g.entries(), self.level)).map(|v| (*g, v.clone())))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        Ok(GroupMeasure { q: self.q, values, kind })
    }
}

/// `y -> mean of mu over the class of y mod Q`, as a function on SL2(Z/QZ).
pub fn class_average<V: Scalar>(mu: &GroupMeasure<V>, big_q: u64) -> Result<ClassFunction<V>> {
    check_divides(big_q, mu.q)?;
    let fiber = V::from_count(group_order(mu.q) / order(big_q));
    let mut values: HashMap<Key, V> = HashMap::new();
    for (g, v) in &mu.values {
        let slot = values.entry(key(g.entries(), big_q)).or_insert_with(V::zero);
        *slot = slot.clone() + v.clone();
    }
    for v in values.values_mut() {
        *v = v.clone() / fiber.clone();
    }
    Ok(ClassFunction { q: mu.q, level: big_q, values })
}

/// `mu_Q` on SL2(Z/qZ).
pub fn average_mod<V: Scalar>(mu: &GroupMeasure<V>, big_q: u64) -> Result<GroupMeasure<V>> {
    class_average(mu, big_q)?.lift(mu.kind)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DecompositionCoeffs {
    pub big_q: u64,
    /// Nonzero `m(q')` only.
    pub coeffs: BTreeMap<u64, i32>,
}

impl DecompositionCoeffs {
    /// `sum m(q') q'`, which equals `prod (p^n - p^(n-1))`.
    pub fn weighted_sum(&self) -> i128 {
        self.coeffs.iter().map(|(&d, &m)| m as i128 * d as i128).sum()
    }
}

/// `m(q')` for `q' | Q`: nonzero exactly for `q' = prod p_i^{e_i}` with
/// `e_i in {n_i, n_i - 1}`, sign `(-1)^{#(e_i = n_i - 1)}`.
pub fn decomposition_coeffs(big_q: u64) -> DecompositionCoeffs {
    let mut coeffs = BTreeMap::from([(1u64, 1i32)]);
    for (p, n) in factorize(big_q) {
        let hi = p.pow(n);
        let lo = hi / p;
        let mut next = BTreeMap::new();
        for (&d, &m) in &coeffs {
            *next.entry(d * hi).or_insert(0) += m;
            *next.entry(d * lo).or_insert(0) -= m;
        }
        coeffs = next;
    }
    coeffs.retain(|_, m| *m != 0);
    DecompositionCoeffs { big_q, coeffs }
}

fn combine<V: Scalar>(
    q: u64,
    big_q: u64,
    averages: &BTreeMap<u64, ClassFunction<V>>,
) -> Result<ClassFunction<V>> {
    let coeffs = decomposition_coeffs(big_q);
    let mut values = HashMap::new();
    for y in level_keys(big_q)? {
        let mut v = V::zero();
        for (d, &m) in &coeffs.coeffs {
            let a = averages[d].at(y);
            v = if m > 0 { v + a } else { v - a };
        }
        if !v.is_zero() {
            values.insert(y, v);
        }
    }
    Ok(ClassFunction { q, level: big_q, values })
}

/// `f_Q` as a function on SL2(Z/QZ).
pub fn f_level<V: Scalar>(mu: &GroupMeasure<V>, big_q: u64) -> Result<ClassFunction<V>> {
    check_divides(big_q, mu.q)?;
    let averages = divisors(big_q)
        .into_iter()
        .map(|d| Ok((d, class_average(mu, d)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    combine(mu.q, big_q, &averages)
}

/// `f_Q` on SL2(Z/qZ) (a signed measure).
pub fn f_component<V: Scalar>(mu: &GroupMeasure<V>, big_q: u64) -> Result<GroupMeasure<V>> {
    f_level(mu, big_q)?.lift(MeasureKind::Signed)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReconstructionCheck {
    pub points: u64,
    pub mismatches: u64,
    pub max_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HSpaceCheck {
    pub level: u64,
    /// Class sums mod every proper divisor vanish.
    pub class_sums_vanish: bool,
    pub worst_abs_sum: f64,
}

/// All components `f_Q`, `Q | q`.
#[derive(Clone, Debug)]
pub struct Decomposition<V> {
    q: u64,
    components: BTreeMap<u64, ClassFunction<V>>,
}

pub fn decompose<V: Scalar>(mu: &GroupMeasure<V>) -> Result<Decomposition<V>> {
    let divs = divisors(mu.q);
    let averages = divs
        .iter()
        .map(|&d| Ok((d, class_average(mu, d)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let components = divs
        .iter()
        .map(|&d| Ok((d, combine(mu.q, d, &averages)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(Decomposition { q: mu.q, components })
}

impl<V: Scalar> Decomposition<V> {
    pub fn component(&self, big_q: u64) -> Option<&ClassFunction<V>> {
        self.components.get(&big_q)
    }

    /// `sum_{Q | q} f_Q(x)`.
    pub fn reconstruct(&self, x: &GroupElement) -> V {
        self.components.values().fold(V::zero(), |acc, f| acc + f.at(x.entries()))
    }

    /// Compares the reconstruction with `mu` at every element of SL2(Z/qZ).
    pub fn verify(&self, mu: &GroupMeasure<V>) -> Result<ReconstructionCheck> {
        let mut check = ReconstructionCheck { points: 0, mismatches: 0, max_abs_error: 0.0 };
        for x in group_elements(self.q)?.iter() {
            let (got, want) = (self.reconstruct(x), mu.get(x));
            check.points += 1;
            let err = (got.to_f64() - want.to_f64()).abs();
            check.max_abs_error = check.max_abs_error.max(err);
            let equal = if V::EXACT { got == want } else { err <= 1e-9 };
            if !equal {
                check.mismatches += 1;
            }
        }
        Ok(check)
    }

    /// Class sums of each `f_Q` over every proper divisor of `Q`. Classes mod
    /// `Q` have equal size in SL2(Z/qZ), so summing over SL2(Z/QZ) decides
    /// vanishing.
    pub fn h_space(&self) -> Result<Vec<HSpaceCheck>> {
        let mut out = Vec::new();
        for (&big_q, f) in &self.components {
            let keys = level_keys(big_q)?;
            let mut check = HSpaceCheck { level: big_q, class_sums_vanish: true, worst_abs_sum: 0.0 };
            for d in divisors(big_q).into_iter().filter(|&d| d < big_q) {
                let mut sums: HashMap<Key, V> = HashMap::new();
                for y in &keys {
                    let slot = sums.entry(key(*y, d)).or_insert_with(V::zero);
                    *slot = slot.clone() + f.at(*y);
                }
                for s in sums.values() {
                    let a = s.to_f64().abs();
                    check.worst_abs_sum = check.worst_abs_sum.max(a);
                    if if V::EXACT { !s.is_zero() } else { a > 1e-9 } {
                        check.class_sums_vanish = false;
                    }
                }
            }
            out.push(check);
        }
        Ok(out)
    }
}

/// Pointwise test of membership in `H_Q` for a function on SL2(Z/qZ):
/// constant on classes mod `Q`, class sums mod every proper divisor zero.
pub fn in_h_space<V: Scalar>(f: &GroupMeasure<V>, big_q: u64) -> Result<bool> {
    check_divides(big_q, f.q)?;
    let group = group_elements(f.q)?;
    let mut class_value: HashMap<Key, V> = HashMap::new();
    for x in group.iter() {
        let v = f.get(x);
        match class_value.get(&key(x.entries(), big_q)) {
            Some(c) if *c != v => return Ok(false),
            Some(_) => {}
            None => {
                class_value.insert(key(x.entries(), big_q), v);
            }
        }
    }
    for d in divisors(big_q).into_iter().filter(|&d| d < big_q) {
        let mut sums: HashMap<Key, V> = HashMap::new();
        for x in group.iter() {
            let slot = sums.entry(key(x.entries(), d)).or_insert_with(V::zero);
            *slot = slot.clone() + f.get(x);
        }
        let vanish = sums.values().all(|s| if V::EXACT { s.is_zero() } else { s.to_f64().abs() <= 1e-9 });
        if !vanish {
            return Ok(false);
        }
    }
    Ok(true)
}
