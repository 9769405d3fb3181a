//! Cantor-type sets built from bounded quotient prefixes.
//!
//! A prefix `[c_1, ..., c_v]` with continuants `f_{v-1}, f_v` fixes the
//! cylinder of reals whose expansion starts with it: the interval between
//! `e_v/f_v` and `(e_v + e_{v-1})/(f_v + f_{v-1})`, of length
//! `1/(f_v (f_v + f_{v-1}))`.
//!
//! * `Q_M(t)` is the union of cylinders of `M`-bounded prefixes with
//!   `f_v < t <= f_v + f_{v-1}`; these have length about `t^{-2}`.
//! * `Z_M(t)` is the set of numerators `a` mod `q` such that every quotient of
//!   `a/q` up to the last continuant below `t` is at most `M`.
//! * A [`SumSet`] `L + [1, N]` is a union of `|L|` disjoint blocks.

use std::fmt::Write as _;

use num_rational::Ratio;
use serde::Serialize;

use crate::arith::gcd;
use crate::contfrac::{convergents, expand, qdist};
use crate::error::{precondition, Error, Result};

/// `L + [1, N]` inside `Z/qZ` with every sum `l + j` distinct.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SumSet {
    q: u64,
    base: Vec<u64>,
    n: u64,
}

impl SumSet {
    pub fn new(q: u64, base: impl IntoIterator<Item = u64>, n: u64) -> Result<Self> {
        let mut base: Vec<u64> = base.into_iter().map(|l| l % q.max(1)).collect();
        base.sort_unstable();
        base.dedup();
        if !direct_sum_check(&base, n, q)? {
            return precondition(format!("base points with N = {n} do not form a direct sum mod {q}"));
        }
        Ok(Self { q, base, n })
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn base(&self) -> &[u64] {
        &self.base
    }

    pub fn block_len(&self) -> u64 {
        self.n
    }

    pub fn len(&self) -> u64 {
        self.base.len() as u64 * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    /// Whether `x = l + j` for some base point `l` and `1 <= j <= N`: looks
    /// for a base point in the circular window `[x - N, x - 1]`.
    pub fn contains(&self, x: u64) -> bool {
        let q = self.q;
        let x = x % q;
        let lo = (x + q - self.n % q) % q;
        let hi = (x + q - 1) % q;
        let any_in = |from: u64, to: u64| {
            let i = self.base.partition_point(|&l| l < from);
            i < self.base.len() && self.base[i] <= to
        };
        if self.n >= q {
            return !self.base.is_empty();
        }
        if lo <= hi {
            any_in(lo, hi)
        } else {
            any_in(lo, q - 1) || any_in(0, hi)
        }
    }

    pub fn elements(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .base
            .iter()
            .flat_map(|&l| (1..=self.n).map(move |j| (l + j) % self.q))
            .collect();
        out.sort_unstable();
        out
    }
}

/// True iff the sums `l + j` (`l` in `base`, `1 <= j <= n`) are pairwise
/// distinct mod `q`, i.e. circular gaps between base points are all `>= n`.
pub fn direct_sum_check(base: &[u64], n: u64, q: u64) -> Result<bool> {
    if q < 1 || n < 1 {
        return precondition("direct_sum_check needs q >= 1 and N >= 1");
    }
    let mut pts: Vec<u64> = base.iter().map(|l| l % q).collect();
    pts.sort_unstable();
    let distinct = {
        let before = pts.len();
        pts.dedup();
        pts.len() == before
    };
    if !distinct || n > q {
        return Ok(pts.is_empty());
    }
    if pts.len() < 2 {
        return Ok(true);
    }
    let gaps_ok = pts.windows(2).all(|w| w[1] - w[0] >= n);
    let wrap = q - pts[pts.len() - 1] + pts[0];
    Ok(gaps_ok && wrap >= n)
}

/// Cylinder of a bounded quotient prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cylinder {
    pub e_prev: u64,
    pub f_prev: u64,
    pub e: u64,
    pub f: u64,
}

impl Cylinder {
    pub fn left(&self) -> Ratio<u64> {
        let a = Ratio::new(self.e, self.f);
        let b = Ratio::new(self.e + self.e_prev, self.f + self.f_prev);
        a.min(b)
    }

    pub fn right(&self) -> Ratio<u64> {
        let a = Ratio::new(self.e, self.f);
        let b = Ratio::new(self.e + self.e_prev, self.f + self.f_prev);
        a.max(b)
    }

    pub fn length(&self) -> Ratio<u64> {
        Ratio::new(1, self.f * (self.f + self.f_prev))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FractalIntervalSet {
    pub t: u64,
    pub m: u64,
    pub intervals: Vec<Cylinder>,
}

fn render(r: &Ratio<u64>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl FractalIntervalSet {
    /// CSV with exact endpoints, sorted by left endpoint.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("left,right,length,f_prev,f\n");
        for c in &self.intervals {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                render(&c.left()),
                render(&c.right()),
                render(&c.length()),
                c.f_prev,
                c.f
            );
        }
        out
    }
}

#[derive(Clone, Copy)]
struct Node {
    e_prev: u64,
    f_prev: u64,
    e: u64,
    f: u64,
}

impl Node {
    const ROOT: Node = Node { e_prev: 1, f_prev: 0, e: 0, f: 1 };

    fn child(&self, c: u64) -> Node {
        Node { e_prev: self.e, f_prev: self.f, e: c * self.e + self.e_prev, f: c * self.f + self.f_prev }
    }
}

/// Visits the `M`-bounded prefixes of length `>= 1` with `f_v < t_max`,
/// passing `(f_{v-1}, f_v)` and the node.
fn walk_prefixes(m: u64, t_max: u64, mut visit: impl FnMut(&Node)) {
    let mut stack = vec![Node::ROOT];
    while let Some(node) = stack.pop() {
        for c in 1..=m {
            let child = node.child(c);
            if child.f >= t_max {
                break;
            }
            visit(&child);
            stack.push(child);
        }
    }
}

pub const DEFAULT_NODE_CAP: u64 = 50_000_000;

/// Cylinders of `Q_M(t)`, sorted by left endpoint.
pub fn build_qm(t: u64, m: u64, cap: u64) -> Result<FractalIntervalSet> {
    if t < 2 || m < 1 {
        return precondition("build_qm needs t >= 2 and M >= 1");
    }
    let predicted = (t as f64).powf(2.0 * crate::zaremba::predicted_dimension(m));
    if predicted > cap as f64 {
        return Err(Error::CapExceeded {
            what: "Q_M(t) prefixes (predicted)",
            requested: predicted as u128,
            cap: cap as u128,
        });
    }
    let mut intervals = Vec::new();
    let mut nodes = 0u64;
    walk_prefixes(m, t, |n| {
        nodes += 1;
        if n.f + n.f_prev >= t && intervals.len() as u64 <= cap {
            intervals.push(Cylinder { e_prev: n.e_prev, f_prev: n.f_prev, e: n.e, f: n.f });
        }
    });
    if nodes > cap {
        return Err(Error::CapExceeded { what: "Q_M(t) prefixes", requested: nodes as u128, cap: cap as u128 });
    }
    intervals.sort_by_key(|c| c.left());
    Ok(FractalIntervalSet { t, m, intervals })
}

/// Number of cylinders of `Q_M(t)` for every `t` in `ts`, from a single walk.
pub fn count_qm(m: u64, ts: &[u64]) -> Result<Vec<u64>> {
    if m < 1 || ts.iter().any(|&t| t < 2) {
        return precondition("count_qm needs M >= 1 and every t >= 2");
    }
    let mut sorted: Vec<(u64, usize)> = ts.iter().copied().zip(0..).collect();
    sorted.sort_unstable();
    let t_max = sorted.last().map_or(2, |p| p.0);
    let keys: Vec<u64> = sorted.iter().map(|p| p.0).collect();
    let mut hits = vec![0u64; keys.len()];
    walk_prefixes(m, t_max, |n| {
        // Counted for every sample t in (f_v, f_v + f_{v-1}].
        let from = keys.partition_point(|&t| t <= n.f);
        let to = keys.partition_point(|&t| t <= n.f + n.f_prev);
        for h in &mut hits[from..to] {
            *h += 1;
        }
    });
    let mut out = vec![0; ts.len()];
    for (h, (_, i)) in hits.into_iter().zip(sorted) {
        out[i] = h;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub m: u64,
    pub t_samples: Vec<u64>,
    pub counts: Vec<u64>,
    pub w_hat: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares slope of `log count` against `2 log t`.
pub fn estimate_dimension(m: u64, t_samples: &[u64]) -> Result<DimensionEstimate> {
    if t_samples.len() < 3 || t_samples.windows(2).any(|w| w[0] >= w[1]) {
        return precondition("need at least 3 strictly increasing t samples");
    }
    let counts = count_qm(m, t_samples)?;
    let xs: Vec<f64> = t_samples.iter().map(|&t| 2.0 * (t as f64).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c.max(1) as f64).ln()).collect();
    let (slope, residual) = least_squares(&xs, &ys)?;
    Ok(DimensionEstimate { m, t_samples: t_samples.to_vec(), counts, w_hat: slope, residual })
}

/// Unweighted least-squares slope and RMS residual.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if xs.len() < 2 || sxx <= f64::EPSILON * n {
        return Err(Error::DegenerateFit("sample abscissae have zero variance".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icept - slope * x).powi(2)).sum();
    Ok((slope, (ss / n).sqrt()))
}

/// Whether `a` belongs to `Z_M(t)` mod `q`: `gcd(a, q) = 1` and the
/// quotients `c_1..c_v` of `a/q` are at most `m`, where `f_v` is the last
/// continuant below `t`.
pub fn in_zm(a: u64, q: u64, t: u64, m: u64) -> bool {
    if a == 0 || a >= q || gcd(a, q) != 1 {
        return false;
    }
    let cf = expand(a, q).expect("checked coprime");
    let conv = convergents(&cf);
    let f = conv.continuants();
    cf.quotients().iter().enumerate().take_while(|(i, _)| f[i + 1] < t).all(|(_, &c)| c <= m)
}

fn check_zm_args(q: u64, t: u64, m: u64) -> Result<()> {
    if m < 1 || t < 2 {
        return precondition("Z_M(t) needs t >= 2 and M >= 1");
    }
    if (t as u128) * (t as u128) >= q as u128 {
        return precondition(format!("t = {t} must be below sqrt(q) for q = {q}"));
    }
    Ok(())
}

pub fn build_zm(q: u64, t: u64, m: u64) -> Result<Vec<u64>> {
    check_zm_args(q, t, m)?;
    Ok((1..q).filter(|&a| in_zm(a, q, t, m)).collect())
}

/// Integer range `[lo, hi]` of numerators `a` with `a/q` on the tail
/// `y >= c_min` of a prefix node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZmBlock {
    pub lo: u64,
    pub hi: u64,
}

/// The residue ranges whose union (restricted to units) is `Z_M(t)`.
///
/// Each `M`-bounded prefix with last continuant `f_v < t` (the empty prefix
/// included) contributes the reals `[c_1..c_v, y]` with `c_{v+1} f_v + f_{v-1}
/// >= t`; these pieces are disjoint. Sorted by `lo`.
pub fn zm_blocks(q: u64, t: u64, m: u64) -> Result<Vec<ZmBlock>> {
    check_zm_args(q, t, m)?;
    let mut out = Vec::new();
    let mut push = |n: &Node| {
        let c_min = (t - n.f_prev).div_ceil(n.f).max(1);
        let (ne, de) = (c_min * n.e + n.e_prev, c_min * n.f + n.f_prev);
        let qq = q as u128;
        // a/q between ne/de and n.e/n.f (open). The ne/de end is closed unless
        // c_min = 1, where ne/de = [.., c_v + 1] belongs to a shorter prefix.
        let shift = u128::from(c_min == 1);
        let (lo, hi) = if (ne as u128) * (n.f as u128) < (n.e as u128) * (de as u128) {
            (
                (qq * ne as u128 + shift).div_ceil(de as u128),
                (qq * n.e as u128).div_ceil(n.f as u128) - 1,
            )
        } else {
            (qq * n.e as u128 / n.f as u128 + 1, (qq * ne as u128 - shift) / de as u128)
        };
        if lo <= hi {
            out.push(ZmBlock { lo: lo as u64, hi: hi as u64 });
        }
    };
    push(&Node::ROOT);
    walk_prefixes(m, t, &mut push);
    out.sort_unstable_by_key(|b| b.lo);
    Ok(out)
}

/// Direct sum `L + [1, n]` tiling each block of [`zm_blocks`] with as many
/// length-`n` runs as fit.
pub fn sumset_from_zm(q: u64, t: u64, m: u64, n: u64) -> Result<SumSet> {
    if n < 1 {
        return precondition("block length must be at least 1");
    }
    let mut base = Vec::new();
    for b in zm_blocks(q, t, m)? {
        let mut start = b.lo;
        while start + n - 1 <= b.hi {
            base.push(start - 1);
            start += n;
        }
    }
    SumSet::new(q, base, n)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ZmDiophReport {
    pub q: u64,
    pub t: u64,
    pub m: u64,
    pub members: u64,
    /// Pairs `(a, x)` with `x |ax|_q <= q/(4M)`, `1 <= x <= t`.
    pub violations_quarter: Vec<(u64, u64)>,
    /// Pairs `(a, x)` with `x |ax|_q <= q/M`, `1 <= x <= t`.
    pub violations_full: Vec<(u64, u64)>,
}

/// Checks both forms of the Diophantine bound `x |ax|_q > q/(cM)`,
/// `c in {4, 1}`, for `a` in `Z_M(t)` and `1 <= x <= t`.
pub fn zm_dioph_report(q: u64, t: u64, m: u64) -> Result<ZmDiophReport> {
    let members = build_zm(q, t, m)?;
    let mut rep = ZmDiophReport { q, t, m, members: members.len() as u64, ..Default::default() };
    for &a in &members {
        for x in 1..=t {
            let v = x as u128 * qdist(a as i128 * x as i128, q) as u128;
            if 4 * m as u128 * v <= q as u128 {
                rep.violations_quarter.push((a, x));
            }
            if m as u128 * v <= q as u128 {
                rep.violations_full.push((a, x));
            }
        }
    }
    Ok(rep)
}
