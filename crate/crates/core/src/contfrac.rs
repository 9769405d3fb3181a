//! Exact continued fractions of reduced fractions in (0, 1).
//!
//! A fraction `a/q` expands as `[a_1, ..., a_s]` meaning
//! `1 / (a_1 + 1 / (a_2 + ... + 1 / a_s))`. Expansions are kept in canonical
//! form: the last partial quotient is at least 2, so every fraction has
//! exactly one expansion.
//!
//! Convergents are indexed from 0 with `e_0/f_0 = 0/1` and the virtual
//! `e_{-1}/f_{-1} = 1/0`, so the recurrence
//! `f_v = c_v f_{v-1} + f_{v-2}` is total.

use std::fmt;

use serde::Serialize;

use crate::error::{precondition, Result};
use crate::scalar::CfInt;

/// Reduced fraction `num/den` with `0 < num < den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fraction<T> {
    num: T,
    den: T,
}

impl<T: CfInt> Fraction<T> {
    pub fn new(num: T, den: T) -> Result<Self> {
        if num.is_zero() || num >= den {
            return precondition(format!("fraction {num}/{den} is not in (0, 1)"));
        }
        if !num.gcd(&den).is_one() {
            return precondition(format!("fraction {num}/{den} is not reduced"));
        }
        Ok(Self { num, den })
    }

    pub fn num(&self) -> T {
        self.num
    }

    pub fn den(&self) -> T {
        self.den
    }
}

impl<T: fmt::Display> fmt::Display for Fraction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Canonical partial-quotient sequence of a fraction in (0, 1).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CfExpansion<T> {
    quotients: Vec<T>,
}

impl<T: CfInt> CfExpansion<T> {
    /// Validates a quotient list: non-empty, entries at least 1, last entry
    /// at least 2.
    pub fn new(quotients: Vec<T>) -> Result<Self> {
        match quotients.last() {
            None => return precondition("empty expansion"),
            Some(&last) if last < T::one() + T::one() => {
                return precondition(format!("last partial quotient {last} is below 2"))
            }
            _ => {}
        }
        if quotients.iter().any(|c| c.is_zero()) {
            return precondition("partial quotients must be at least 1");
        }
        Ok(Self { quotients })
    }

    pub fn quotients(&self) -> &[T] {
        &self.quotients
    }

    pub fn len(&self) -> usize {
        self.quotients.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<T: fmt::Display> fmt::Display for CfExpansion<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.quotients.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// Lazily yields the partial quotients of `a/q` by the Euclidean algorithm.
///
/// No validation is done; callers that need the error contract go through
/// [`expand`]. Stops when the remainder hits zero.
#[derive(Clone, Debug)]
pub struct Quotients<T> {
    num: T,
    den: T,
}

impl<T: CfInt> Quotients<T> {
    pub fn new(a: T, q: T) -> Self {
        Self { num: a, den: q }
    }
}

impl<T: CfInt> Iterator for Quotients<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        if self.num.is_zero() {
            return None;
        }
        let (c, r) = self.den.div_rem(&self.num);
        self.den = self.num;
        self.num = r;
        Some(c)
    }
}

fn check_coprime_pair<T: CfInt>(a: T, q: T) -> Result<()> {
    if q < T::one() + T::one() {
        return precondition(format!("modulus {q} is below 2"));
    }
    if a.is_zero() || a >= q {
        return precondition(format!("numerator {a} is outside [1, {q})"));
    }
    if !a.gcd(&q).is_one() {
        return precondition(format!("gcd({a}, {q}) != 1"));
    }
    Ok(())
}

pub fn expand<T: CfInt>(a: T, q: T) -> Result<CfExpansion<T>> {
    check_coprime_pair(a, q)?;
    Ok(CfExpansion { quotients: Quotients::new(a, q).collect() })
}

pub fn evaluate<T: CfInt>(cf: &CfExpansion<T>) -> Fraction<T> {
    let (mut num, mut den) = (T::zero(), T::one());
    for &c in cf.quotients.iter().rev() {
        // 1 / (c + num/den) = den / (c*den + num)
        let next_den = c * den + num;
        num = den;
        den = next_den;
    }
    Fraction { num, den }
}

/// Convergents `e_v/f_v` for `v = 0..=s`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergentSeq<T> {
    numerators: Vec<T>,
    continuants: Vec<T>,
}

impl<T: CfInt> ConvergentSeq<T> {
    /// `e_0, ..., e_s`.
    pub fn numerators(&self) -> &[T] {
        &self.numerators
    }

    /// `f_0 = 1, f_1, ..., f_s`.
    pub fn continuants(&self) -> &[T] {
        &self.continuants
    }

    pub fn convergent(&self, index: usize) -> (T, T) {
        (self.numerators[index], self.continuants[index])
    }

    /// Index of the final convergent, i.e. the expansion length `s`.
    pub fn last_index(&self) -> usize {
        self.continuants.len() - 1
    }

    /// Largest `v >= 1` with `f_v < t`, if any.
    pub fn largest_below(&self, t: T) -> Option<usize> {
        (1..self.continuants.len()).rev().find(|&v| self.continuants[v] < t)
    }
}

pub fn convergents<T: CfInt>(cf: &CfExpansion<T>) -> ConvergentSeq<T> {
    let s = cf.quotients.len();
    let mut numerators = Vec::with_capacity(s + 1);
    let mut continuants = Vec::with_capacity(s + 1);
    numerators.push(T::zero());
    continuants.push(T::one());
    let (mut e_prev, mut f_prev) = (T::one(), T::zero());
    for &c in &cf.quotients {
        let (e_cur, f_cur) = (*numerators.last().unwrap(), *continuants.last().unwrap());
        numerators.push(c * e_cur + e_prev);
        continuants.push(c * f_cur + f_prev);
        e_prev = e_cur;
        f_prev = f_cur;
    }
    ConvergentSeq { numerators, continuants }
}

pub fn max_quotient<T: CfInt>(cf: &CfExpansion<T>) -> T {
    cf.quotients.iter().copied().max().expect("expansions are non-empty")
}

/// Distance from `x` to the nearest multiple of `q`.
pub fn qdist(x: i128, q: u64) -> u64 {
    let r = x.rem_euclid(q as i128) as u64;
    r.min(q - r)
}

// x * |ax|_q < q^2 / 2 must fit in u64.
fn check_dioph_range(q: u64) -> Result<()> {
    if q > u32::MAX as u64 {
        return precondition(format!("modulus {q} too large for the Diophantine scan"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DiophCheck {
    pub holds: bool,
    pub worst_x: u64,
    pub worst_value: u64,
}

/// Exhaustive check of `x * |a x|_q > q / (4M)` over `1 <= x < q`.
///
/// `worst_x` minimizes `x * |a x|_q` with ties broken towards the smaller
/// `x`. The comparison is done in integers as `4 M x |ax|_q > q`.
pub fn check_dioph(a: u64, q: u64, m: u64) -> Result<DiophCheck> {
    check_coprime_pair(a, q)?;
    check_dioph_range(q)?;
    if m == 0 {
        return precondition("M must be at least 1");
    }
    let (mut worst_x, mut worst_value) = (0u64, u64::MAX);
    let mut r = 0u64;
    for x in 1..q {
        r += a;
        if r >= q {
            r -= q;
        }
        let value = x * r.min(q - r);
        if value < worst_value {
            worst_value = value;
            worst_x = x;
        }
    }
    let holds = 4 * m as u128 * worst_value as u128 > q as u128;
    Ok(DiophCheck { holds, worst_x, worst_value })
}

/// Minimum of `x * |a x|_q` over `1 <= x < q`, located among the
/// continuants `f_0, ..., f_{s-1}` (best approximations); returns
/// `(x, value)` with the smallest minimizing `x`.
pub fn dioph_minimum(a: u64, q: u64) -> Result<(u64, u64)> {
    check_dioph_range(q)?;
    let cf = expand(a, q)?;
    let conv = convergents(&cf);
    let mut best = (0u64, u64::MAX);
    for &f in &conv.continuants()[..conv.last_index()] {
        let value = f * qdist(a as i128 * f as i128, q);
        if value < best.1 {
            best = (f, value);
        }
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CriticalDenominator {
    /// Index `v` of the continuant.
    pub index: usize,
    /// `f_v`.
    pub continuant: u64,
    /// `c_{v+1}`, the quotient exceeding the threshold.
    pub quotient: u64,
}

/// Continuants `f_v` of `a/q` whose successor quotient `c_{v+1}` exceeds
/// `mtilde`, in increasing order.
pub fn critical_denominators(a: u64, q: u64, mtilde: u64) -> Result<Vec<CriticalDenominator>> {
    let cf = expand(a, q)?;
    let conv = convergents(&cf);
    Ok(cf
        .quotients()
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > mtilde)
        .map(|(i, &c)| CriticalDenominator {
            index: i,
            continuant: conv.continuants()[i],
            quotient: c,
        })
        .collect())
}
