//! Arithmetic in SL2(Z/qZ) and Mat2(Z/qZ), the projective line P1(Z/qZ) with
//! its linear-fractional action, and congruence subgroups.
//!
//! Entries are stored as `u32` residues in `[0, q)`; products go through
//! `u64`. Every element carries its modulus and mixing moduli is an error.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::Serialize;

use crate::arith::{crt, factorize, gcd, mod_inv, prime_divisors};
use crate::error::{precondition, Error, Result};

pub const DEFAULT_GROUP_CAP: u64 = 20_000_000;

fn check_modulus(q: u64) -> Result<u32> {
    if q < 2 || q > u32::MAX as u64 / 2 {
        return precondition(format!("modulus {q} out of range"));
    }
    Ok(q as u32)
}

fn same_modulus(a: u32, b: u32) -> Result<()> {
    if a != b {
        return Err(Error::ModulusMismatch { left: a as u64, right: b as u64 });
    }
    Ok(())
}

#[inline]
fn mm(x: u32, y: u32, q: u32) -> u64 {
    x as u64 * y as u64 % q as u64
}

#[inline]
fn mul_entries(l: [u32; 4], r: [u32; 4], q: u32) -> [u32; 4] {
    let q64 = q as u64;
    let [a, b, c, d] = l.map(|x| x as u64);
    let [e, f, g, h] = r.map(|x| x as u64);
    [
        ((a * e + b * g) % q64) as u32,
        ((a * f + b * h) % q64) as u32,
        ((c * e + d * g) % q64) as u32,
        ((c * f + d * h) % q64) as u32,
    ]
}

/// Element `[[a, b], [c, d]]` of SL2(Z/qZ).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupElement {
    entries: [u32; 4],
    q: u32,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.q)
    }
}

impl GroupElement {
    /// Reduces the entries mod `q` and checks `ad - bc = 1`.
    pub fn new(a: i64, b: i64, c: i64, d: i64, q: u64) -> Result<Self> {
        let q32 = check_modulus(q)?;
        let r = |x: i64| x.rem_euclid(q as i64) as u32;
        let entries = [r(a), r(b), r(c), r(d)];
        let g = Self { entries, q: q32 };
        if g.det() != 1 % q32 {
            return precondition(format!("determinant of {g:?} is {} not 1", g.det()));
        }
        Ok(g)
    }

    pub(crate) fn from_raw(entries: [u32; 4], q: u32) -> Self {
        Self { entries, q }
    }

    pub fn identity(q: u64) -> Result<Self> {
        Self::new(1, 0, 0, 1, q)
    }

    pub fn entries(&self) -> [u32; 4] {
        self.entries
    }

    pub fn modulus(&self) -> u64 {
        self.q as u64
    }

    pub fn det(&self) -> u32 {
        let [a, b, c, d] = self.entries;
        ((mm(a, d, self.q) + self.q as u64 - mm(b, c, self.q)) % self.q as u64) as u32
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_modulus(self.q, other.q)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        Self { entries: mul_entries(self.entries, other.entries, self.q), q: self.q }
    }

    /// Adjugate `[[d, -b], [-c, a]]`.
    pub fn inv(&self) -> Self {
        let [a, b, c, d] = self.entries;
        let neg = |x: u32| (self.q - x) % self.q;
        Self { entries: [d, neg(b), neg(c), a], q: self.q }
    }

    pub fn trace(&self) -> u32 {
        ((self.entries[0] as u64 + self.entries[3] as u64) % self.q as u64) as u32
    }

    /// Reduction mod a divisor `q1 >= 2` of the modulus.
    pub fn project(&self, q1: u64) -> Result<Self> {
        let q1_32 = check_modulus(q1)?;
        if !self.q.is_multiple_of(q1_32) {
            return Err(Error::NotDivisor { divisor: q1, modulus: self.q as u64 });
        }
        Ok(self.reduce(q1_32))
    }

    #[inline]
    pub(crate) fn reduce(&self, q1: u32) -> Self {
        Self { entries: self.entries.map(|x| x % q1), q: q1 }
    }

    pub fn is_identity_mod(&self, q1: u64) -> bool {
        let q1 = q1 as u32;
        let [a, b, c, d] = self.entries;
        a % q1 == 1 % q1 && b % q1 == 0 && c % q1 == 0 && d % q1 == 1 % q1
    }
}

/// Element of Mat2(Z/qZ) with no determinant condition.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MatElement {
    entries: [u32; 4],
    q: u32,
}

impl fmt::Debug for MatElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.entries;
        write!(f, "[[{a},{b}],[{c},{d}]] mod {}", self.q)
    }
}

impl From<GroupElement> for MatElement {
    fn from(g: GroupElement) -> Self {
        Self { entries: g.entries, q: g.q }
    }
}

impl MatElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64, q: u64) -> Result<Self> {
        let q32 = check_modulus(q)?;
        let r = |x: i64| x.rem_euclid(q as i64) as u32;
        Ok(Self { entries: [r(a), r(b), r(c), r(d)], q: q32 })
    }

    pub fn entries(&self) -> [u32; 4] {
        self.entries
    }

    pub fn modulus(&self) -> u64 {
        self.q as u64
    }

    pub fn det(&self) -> u32 {
        let [a, b, c, d] = self.entries;
        ((mm(a, d, self.q) + self.q as u64 - mm(b, c, self.q)) % self.q as u64) as u32
    }

    pub fn trace(&self) -> u32 {
        ((self.entries[0] as u64 + self.entries[3] as u64) % self.q as u64) as u32
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        same_modulus(self.q, other.q)?;
        Ok(Self { entries: mul_entries(self.entries, other.entries, self.q), q: self.q })
    }

    /// `Tr(self * x)` without forming the product.
    #[inline]
    pub fn trace_with(&self, x: &GroupElement) -> u32 {
        let [a, b, c, d] = self.entries.map(|v| v as u64);
        let [e, f, g, h] = x.entries.map(|v| v as u64);
        ((a * e + b * g + c * f + d * h) % self.q as u64) as u32
    }

    /// For every prime `p | q` the reduction mod `p` is not the zero matrix.
    pub fn nonzero_mod_every_p(&self) -> bool {
        prime_divisors(self.q as u64)
            .into_iter()
            .all(|p| self.entries.iter().any(|&x| !(x as u64).is_multiple_of(p)))
    }
}

/// `g_j = [[2j, 1 - 4j^2], [-1, 2j]]`, determinant 1.
pub fn generator(j: u64, q: u64) -> Result<GroupElement> {
    if j < 1 {
        return precondition("generator index starts at 1");
    }
    let qq = q as i128;
    let j = j as i128;
    let r = |x: i128| x.rem_euclid(qq) as i64;
    GroupElement::new(r(2 * j), r(1 - 4 * j * j), -1, r(2 * j), q)
}

/// `[[-2j, 1 - 4j^2], [1, 2j]]`, determinant -1; maps `a` to `b` exactly when
/// `(a + 2j)(b + 2j) = 1`.
pub fn mobius_generator(j: u64, q: u64) -> Result<MatElement> {
    let qq = q as i128;
    let j = j as i128;
    let r = |x: i128| x.rem_euclid(qq) as i64;
    MatElement::new(r(-2 * j), r(1 - 4 * j * j), 1, r(2 * j), q)
}

/// `{g_1, ..., g_N}` as a sorted, deduplicated list.
pub fn generator_set(n: u64, q: u64) -> Result<Vec<GroupElement>> {
    let mut s = (1..=n).map(|j| generator(j, q)).collect::<Result<Vec<_>>>()?;
    s.sort_unstable();
    s.dedup();
    Ok(s)
}

/// `|SL2(Z/qZ)| = q^3 prod_{p | q} (1 - p^-2)`.
pub fn group_order(q: u64) -> u64 {
    factorize(q).into_iter().map(|(p, e)| p.pow(3 * e - 2) * (p * p - 1)).product()
}

/// `|P1(Z/qZ)| = q prod_{p | q} (1 + 1/p)`.
pub fn p1_size(q: u64) -> u64 {
    factorize(q).into_iter().map(|(p, e)| p.pow(e - 1) * (p + 1)).product()
}

/// Solutions `d` in `[0, q)` of `a d = rhs (mod q)`, increasing.
fn solve_linear(a: u64, rhs: u64, q: u64) -> impl Iterator<Item = u64> {
    let g = gcd(a, q);
    let step = q / g;
    let first = if rhs.is_multiple_of(g) {
        let inv = mod_inv(a / g % step, step).unwrap_or(0);
        Some((rhs / g % step) * inv % step.max(1))
    } else {
        None
    };
    first.into_iter().flat_map(move |d0| (0..g).map(move |k| d0 + k * step))
}

/// Elements congruent to the identity mod `big_q` (all of SL2(Z/qZ) when
/// `big_q = 1`), in lexicographic order of entries.
fn enumerate_congruent(big_q: u64, q: u64) -> Vec<GroupElement> {
    let q32 = q as u32;
    let step = big_q as usize;
    let mut out = Vec::with_capacity((group_order(q) / group_order_or_one(big_q)) as usize);
    for a in (1 % big_q..q).step_by(step) {
        for b in (0..q).step_by(step) {
            for c in (0..q).step_by(step) {
                let rhs = (1 + b * c) % q;
                for d in solve_linear(a, rhs, q) {
                    if d % big_q == 1 % big_q {
                        out.push(GroupElement::from_raw([a as u32, b as u32, c as u32, d as u32], q32));
                    }
                }
            }
        }
    }
    out
}

fn group_order_or_one(q: u64) -> u64 {
    if q <= 1 {
        1
    } else {
        group_order(q)
    }
}

fn check_group_cap(q: u64, cap: u64) -> Result<()> {
    let work = (q as u128).pow(3);
    if work > cap as u128 {
        return Err(Error::CapExceeded { what: "SL2 enumeration work q^3", requested: work, cap: cap as u128 });
    }
    Ok(())
}

/// All of SL2(Z/qZ), lexicographic in `(a, b, c, d)`.
pub fn enumerate_group(q: u64, cap: u64) -> Result<Vec<GroupElement>> {
    check_modulus(q)?;
    check_group_cap(q, cap)?;
    Ok(enumerate_congruent(1, q))
}

type GroupCache = Mutex<HashMap<u64, Arc<Vec<GroupElement>>>>;

/// Memoized [`enumerate_group`] with the default cap.
pub fn group_elements(q: u64) -> Result<Arc<Vec<GroupElement>>> {
    static CACHE: OnceLock<GroupCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(g) = cache.lock().expect("cache lock").get(&q) {
        return Ok(g.clone());
    }
    let g = Arc::new(enumerate_group(q, DEFAULT_GROUP_CAP)?);
    cache.lock().expect("cache lock").insert(q, g.clone());
    Ok(g)
}

/// Kernel of the reduction SL2(Z/qZ) -> SL2(Z/QZ).
pub fn congruence_coset(big_q: u64, q: u64, cap: u64) -> Result<Vec<GroupElement>> {
    check_modulus(q)?;
    if big_q == 0 || !q.is_multiple_of(big_q) {
        return Err(Error::NotDivisor { divisor: big_q, modulus: q });
    }
    let size = group_order(q) / group_order_or_one(big_q);
    let work = ((q / big_q) as u128).pow(3);
    if size as u128 > cap as u128 || work > cap as u128 {
        return Err(Error::CapExceeded { what: "congruence coset", requested: work.max(size as u128), cap: cap as u128 });
    }
    Ok(enumerate_congruent(big_q, q))
}

/// Uniform random element, by rejection on a random top row and a uniform
/// choice among the solutions for the bottom row.
pub fn random_element<R: Rng + ?Sized>(q: u64, rng: &mut R) -> Result<GroupElement> {
    let q32 = check_modulus(q)?;
    loop {
        let (a, b, c) = (rng.gen_range(0..q), rng.gen_range(0..q), rng.gen_range(0..q));
        let sols: Vec<u64> = solve_linear(a, (1 + b * c) % q, q).collect();
        // Weight each (a, b, c) by its number of solutions so elements are
        // uniform: accept with probability |sols| / q.
        if sols.is_empty() || rng.gen_range(0..q) >= sols.len() as u64 {
            continue;
        }
        let d = sols[rng.gen_range(0..sols.len())];
        return Ok(GroupElement::from_raw([a as u32, b as u32, c as u32, d as u32], q32));
    }
}

/// Point `(x : y)` of P1(Z/qZ) in normal form.
///
/// Normal form: modulo each prime power `p^k || q` the point is `(x : 1)` when
/// `y` is a unit mod `p`, and `(1 : y)` with `p | y` otherwise. The stored
/// pair is the CRT combination of these local forms, so affine points
/// `(a : 1)` are stored as `(a mod q, 1)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct ProjPoint {
    pub x: u64,
    pub y: u64,
    pub q: u64,
}

/// P1(Z/qZ) with the factorization of `q` cached.
#[derive(Clone, Debug)]
pub struct ProjLine {
    q: u64,
    prime_powers: Vec<(u64, u64)>,
}

impl ProjLine {
    pub fn new(q: u64) -> Result<Self> {
        check_modulus(q)?;
        let prime_powers = factorize(q).into_iter().map(|(p, e)| (p, p.pow(e))).collect();
        Ok(Self { q, prime_powers })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Normal form of `(x : y)`; errors unless `gcd(x, y, q) = 1`.
    pub fn point(&self, x: i128, y: i128) -> Result<ProjPoint> {
        let q = self.q as i128;
        let (x, y) = (x.rem_euclid(q) as u64, y.rem_euclid(q) as u64);
        let mut xs = Vec::with_capacity(self.prime_powers.len());
        let mut ys = Vec::with_capacity(self.prime_powers.len());
        for &(p, pk) in &self.prime_powers {
            let (xl, yl) = (x % pk, y % pk);
            if yl % p != 0 {
                let yi = mod_inv(yl, pk).expect("unit");
                xs.push((xl as u128 * yi as u128 % pk as u128) as u64);
                ys.push(1 % pk);
            } else if xl % p != 0 {
                let xi = mod_inv(xl, pk).expect("unit");
                xs.push(1 % pk);
                ys.push((yl as u128 * xi as u128 % pk as u128) as u64);
            } else {
                return precondition(format!("({x} : {y}) is not a point of P1 mod {}", self.q));
            }
        }
        let pk: Vec<u64> = self.prime_powers.iter().map(|p| p.1).collect();
        let zip = |v: &[u64]| v.iter().copied().zip(pk.iter().copied()).collect::<Vec<_>>();
        let (cx, _) = crt(&zip(&xs));
        let (cy, _) = crt(&zip(&ys));
        Ok(ProjPoint { x: cx, y: cy, q: self.q })
    }

    pub fn affine(&self, a: u64) -> ProjPoint {
        ProjPoint { x: a % self.q, y: 1 % self.q, q: self.q }
    }

    /// Every point once, sorted.
    pub fn points(&self) -> Vec<ProjPoint> {
        let local: Vec<Vec<(u64, u64)>> = self
            .prime_powers
            .iter()
            .map(|&(p, pk)| {
                let mut v: Vec<(u64, u64)> = (0..pk).map(|x| (x, 1 % pk)).collect();
                v.extend((0..pk).step_by(p as usize).map(|y| (1 % pk, y)));
                v
            })
            .collect();
        let mut out = Vec::with_capacity(p1_size(self.q) as usize);
        let mut idx = vec![0usize; local.len()];
        loop {
            let xs: Vec<(u64, u64)> =
                idx.iter().zip(&local).zip(&self.prime_powers).map(|((&i, l), &(_, pk))| (l[i].0, pk)).collect();
            let ys: Vec<(u64, u64)> =
                idx.iter().zip(&local).zip(&self.prime_powers).map(|((&i, l), &(_, pk))| (l[i].1, pk)).collect();
            out.push(ProjPoint { x: crt(&xs).0, y: crt(&ys).0, q: self.q });
            let mut k = 0;
            loop {
                if k == idx.len() {
                    out.sort_unstable();
                    return out;
                }
                idx[k] += 1;
                if idx[k] < local[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// `(x : y) -> (ax + by : cx + dy)`.
    pub fn act(&self, g: &GroupElement, p: &ProjPoint) -> Result<ProjPoint> {
        same_modulus(g.q, self.q as u32)?;
        self.apply(g.entries, p)
    }

    /// Action of a matrix whose determinant is a unit.
    pub fn act_mat(&self, m: &MatElement, p: &ProjPoint) -> Result<ProjPoint> {
        same_modulus(m.q, self.q as u32)?;
        if gcd(m.det() as u64, self.q) != 1 {
            return Err(Error::NonUnit { value: m.det() as u64, modulus: self.q });
        }
        self.apply(m.entries, p)
    }

    fn apply(&self, e: [u32; 4], p: &ProjPoint) -> Result<ProjPoint> {
        if p.q != self.q {
            return Err(Error::ModulusMismatch { left: p.q, right: self.q });
        }
        let [a, b, c, d] = e.map(|v| v as i128);
        let (x, y) = (p.x as i128, p.y as i128);
        self.point(a * x + b * y, c * x + d * y)
    }
}
