//! Instance checks for the steps of the bounded-quotient argument:
//! inverse sets, `N*`-good intervals, small linear relations mod `q`,
//! integer relations between three numbers, and critical denominators.

use num_rational::Ratio;
use serde::Serialize;

use crate::arith::mod_inv;
use crate::contfrac::{convergents, critical_denominators, expand, qdist, CriticalDenominator};
use crate::error::{precondition, Error, Result};
use crate::fractal::in_zm;

/// `{a^-1 mod q : a in A}`, sorted.
pub fn invert_set(set: &[u64], q: u64) -> Result<Vec<u64>> {
    let mut out = set
        .iter()
        .map(|&a| mod_inv(a % q, q).ok_or(Error::NonUnit { value: a, modulus: q }))
        .collect::<Result<Vec<_>>>()?;
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GoodIntervalReport {
    pub start: u64,
    pub len: u64,
    pub nstar: u64,
    pub subintervals: u64,
    pub hits: u64,
    /// `hits/subintervals` as `num/den`; `0/1` when there are no subintervals.
    pub hit_fraction: String,
    pub threshold: f64,
    pub good: bool,
}

/// For each `[start, start + len)`, the share of the consecutive length-`N*`
/// pieces meeting `target`. A trailing piece shorter than `N*` counts only
/// when its length is at least `N*/2`.
pub fn nstar_good(intervals: &[(u64, u64)], target: &[u64], nstar: u64, eta: f64, q: u64) -> Result<Vec<GoodIntervalReport>> {
    if nstar < 1 {
        return precondition("N* must be at least 1");
    }
    let mut tgt = target.iter().map(|x| x % q).collect::<Vec<_>>();
    tgt.sort_unstable();
    tgt.dedup();
    let threshold = 1.0 - (nstar as f64).powf(-eta / 2.0);
    let mut out = Vec::with_capacity(intervals.len());
    for &(start, len) in intervals {
        if start + len > q {
            return precondition(format!("interval [{start}, {}) leaves [0, {q})", start + len));
        }
        let (full, rest) = (len / nstar, len % nstar);
        let pieces = full + u64::from(rest > 0 && 2 * rest >= nstar);
        let mut hits = 0;
        for k in 0..pieces {
            let lo = start + k * nstar;
            let hi = (lo + nstar).min(start + len);
            let i = tgt.partition_point(|&x| x < lo);
            if i < tgt.len() && tgt[i] < hi {
                hits += 1;
            }
        }
        let frac = if pieces == 0 { Ratio::new(0, 1) } else { Ratio::new(hits, pieces) };
        out.push(GoodIntervalReport {
            start,
            len,
            nstar,
            subintervals: pieces,
            hits,
            hit_fraction: format!("{}/{}", frac.numer(), frac.denom()),
            threshold,
            good: pieces > 0 && hits as f64 >= threshold * pieces as f64,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TripleRelation {
    pub m1: i64,
    pub m2: i64,
    pub m3: i64,
    pub value: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TripleScan {
    /// Lexicographically first nonzero `(m1, m2, m3)` with value `< t`.
    pub relation: Option<TripleRelation>,
    /// First coefficient triple giving value exactly 0, if any.
    pub zero: Option<TripleRelation>,
}

/// Scans `(m1, m2, m3) in [-m, m]^3 \ {0}` for
/// `|m1 b x' + m2 b y + m3 b z|_q < t`.
pub fn small_triple_scan(b: u64, xprime: u64, y: u64, z: u64, q: u64, m_bound: u64, t: u64) -> Result<TripleScan> {
    if m_bound < 1 || q < 2 {
        return precondition("small_triple_scan needs m_bound >= 1 and q >= 2");
    }
    let m = m_bound as i64;
    let qi = q as i128;
    let (u, v, w) = [xprime, y, z].map(|x| (b as i128 % qi) * (x as i128 % qi) % qi).into();
    let mut scan = TripleScan { relation: None, zero: None };
    for m1 in -m..=m {
        for m2 in -m..=m {
            for m3 in -m..=m {
                if (m1, m2, m3) == (0, 0, 0) {
                    continue;
                }
                let value = qdist(m1 as i128 * u + m2 as i128 * v + m3 as i128 * w, q);
                let rel = TripleRelation { m1, m2, m3, value };
                if scan.relation.is_none() && value < t {
                    scan.relation = Some(rel);
                }
                if scan.zero.is_none() && value == 0 {
                    scan.zero = Some(rel);
                }
            }
        }
    }
    Ok(scan)
}

/// True iff no nonzero `(al, be, ga) in [-bound, bound]^3` has
/// `al x' + be y + ga z = 0` over the integers.
pub fn repelling_check(xprime: i64, y: i64, z: i64, bound: u64) -> Result<bool> {
    if bound < 1 {
        return precondition("repelling_check needs bound >= 1");
    }
    if z == 0 {
        return Ok(false);
    }
    let b = bound as i64;
    for al in -b..=b {
        for be in -b..=b {
            // Solve for ga instead of scanning it.
            let rest = al as i128 * xprime as i128 + be as i128 * y as i128;
            if rest % z as i128 == 0 {
                let ga = -rest / z as i128;
                if ga.abs() <= b as i128 && (al, be, ga) != (0, 0, 0) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub a: u64,
    pub q: u64,
    pub t: u64,
    pub m: u64,
    pub mtilde: u64,
    /// `[t, q/(4tM)]` as real endpoints.
    pub window: (f64, f64),
    pub criticals_in_window: Vec<CriticalDenominator>,
    pub criticals_outside: Vec<CriticalDenominator>,
    /// Both `a` and `a^-1` lie in `Z_M(t)`.
    pub a_and_inverse_in_zm: bool,
    /// Some critical denominator is outside the window although
    /// `a, a^-1 in Z_M(t)`.
    pub violation: bool,
}

/// Splits the `M~`-critical denominators of `a/q` by the window
/// `[t, q/(4tM)]`.
pub fn critical_window_check(a: u64, q: u64, t: u64, m: u64, mtilde: u64) -> Result<WindowReport> {
    if t < 2 || m < 1 {
        return precondition("critical_window_check needs t >= 2 and M >= 1");
    }
    let crit = critical_denominators(a, q, mtilde)?;
    let hi = q as f64 / (4.0 * t as f64 * m as f64);
    let inside = |c: &CriticalDenominator| c.continuant >= t && (4 * t as u128 * m as u128 * c.continuant as u128) <= q as u128;
    let (criticals_in_window, criticals_outside): (Vec<_>, Vec<_>) = crit.into_iter().partition(inside);
    let in_zm_both = (t as u128).pow(2) < q as u128
        && in_zm(a, q, t, m)
        && mod_inv(a, q).is_some_and(|inv| in_zm(inv, q, t, m));
    Ok(WindowReport {
        a,
        q,
        t,
        m,
        mtilde,
        window: (t as f64, hi),
        violation: in_zm_both && !criticals_outside.is_empty(),
        criticals_in_window,
        criticals_outside,
        a_and_inverse_in_zm: in_zm_both,
    })
}

/// Continuants of `a/q` in `[t N^(11/20), t N^(3/4)]`.
pub fn x_prime_candidates(a: u64, q: u64, t: u64, n: u64) -> Result<Vec<u64>> {
    let cf = expand(a, q)?;
    let conv = convergents(&cf);
    let lo = t as f64 * (n as f64).powf(11.0 / 20.0);
    let hi = t as f64 * (n as f64).powf(0.75);
    Ok(conv.continuants().iter().copied().filter(|&f| f as f64 >= lo && f as f64 <= hi).collect())
}
