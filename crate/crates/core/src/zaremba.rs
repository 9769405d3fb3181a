//! Zaremba numerators: for a denominator `q` and bound `M`, numerators `a`
//! coprime to `q` whose canonical expansion of `a/q` has every partial
//! quotient at most `M`.
//!
//! The search walks prefixes of quotient sequences. Every prefix fixes a
//! cylinder, an open interval of reals whose expansion starts with that
//! prefix, and the numerators `a` with `a/q` in the cylinder form an integer
//! range. Empty ranges are pruned, so a search touches roughly `q^{w_M}`
//! prefixes instead of all `q` residues.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::arith::gcd;
use crate::contfrac::Quotients;
use crate::error::{precondition, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ZarembaWitness {
    pub q: u64,
    pub m: u64,
    pub a: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MinimalMRecord {
    pub q: u64,
    pub m_min: u64,
    pub witness: u64,
}

/// Prefix state: `(e_{v-1}, f_{v-1}, e_v, f_v)` and the prefix length `v`.
#[derive(Clone, Copy)]
struct Prefix {
    e_prev: u64,
    f_prev: u64,
    e_cur: u64,
    f_cur: u64,
    depth: usize,
}

impl Prefix {
    const ROOT: Prefix = Prefix { e_prev: 1, f_prev: 0, e_cur: 0, f_cur: 1, depth: 0 };

    fn child(&self, c: u64) -> Prefix {
        Prefix {
            e_prev: self.e_cur,
            f_prev: self.f_cur,
            e_cur: c * self.e_cur + self.e_prev,
            f_cur: c * self.f_cur + self.f_prev,
            depth: self.depth + 1,
        }
    }

    /// Integers `a` with `a/q` strictly inside the cylinder, as an inclusive
    /// range. The cylinder has endpoints `e_v/f_v` and
    /// `(e_v + e_{v-1})/(f_v + f_{v-1})`.
    fn numerator_range(&self, q: u64) -> Option<(u64, u64)> {
        let (n0, d0) = (self.e_cur as u128, self.f_cur as u128);
        let (n1, d1) = ((self.e_cur + self.e_prev) as u128, (self.f_cur + self.f_prev) as u128);
        let ((nl, dl), (nh, dh)) = if n0 * d1 <= n1 * d0 {
            ((n0, d0), (n1, d1))
        } else {
            ((n1, d1), (n0, d0))
        };
        let q = q as u128;
        let first = q * nl / dl + 1;
        let last = (q * nh).div_ceil(dh) - 1;
        (first <= last).then_some((first as u64, last as u64))
    }
}

/// Visits every `M`-bounded numerator of `q` in increasing order.
fn walk_numerators(
    q: u64,
    m: u64,
    node: Prefix,
    visit: &mut impl FnMut(u64) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let c_max = m.min((q - node.f_prev) / node.f_cur);
    // Children sit at y in (c, c+1) of x = (y e_v + e_{v-1})/(y f_v + f_{v-1}),
    // which decreases in y for even v.
    let mut step = |c: u64| -> ControlFlow<()> {
        let child = node.child(c);
        if child.f_cur == q {
            if c >= 2 {
                return visit(child.e_cur);
            }
            return ControlFlow::Continue(());
        }
        if child.numerator_range(q).is_some() {
            walk_numerators(q, m, child, visit)?;
        }
        ControlFlow::Continue(())
    };
    if node.depth.is_multiple_of(2) {
        for c in (1..=c_max).rev() {
            step(c)?;
        }
    } else {
        for c in 1..=c_max {
            step(c)?;
        }
    }
    ControlFlow::Continue(())
}

fn check_search_args(q: u64, m: u64) -> Result<()> {
    if q < 2 {
        return precondition(format!("denominator {q} is below 2"));
    }
    if m == 0 {
        return precondition("quotient bound must be at least 1");
    }
    if q > u64::MAX / 4 {
        return precondition(format!("denominator {q} too large"));
    }
    Ok(())
}

/// Smallest numerator of `q` with all partial quotients at most `m`.
pub fn find_numerator(q: u64, m: u64) -> Result<ZarembaWitness> {
    check_search_args(q, m)?;
    let mut found = None;
    let _ = walk_numerators(q, m, Prefix::ROOT, &mut |a| {
        found = Some(a);
        ControlFlow::Break(())
    });
    Ok(ZarembaWitness { q, m, a: found })
}

/// All `m`-bounded numerators of `q`, increasing.
pub fn bounded_numerators(q: u64, m: u64) -> Result<Vec<u64>> {
    check_search_args(q, m)?;
    let mut out = Vec::new();
    let _ = walk_numerators(q, m, Prefix::ROOT, &mut |a| {
        out.push(a);
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// Plain scan over `a = 1..q` with early exit; the reference the pruned
/// search is checked against.
pub fn find_numerator_scan(q: u64, m: u64) -> Result<ZarembaWitness> {
    check_search_args(q, m)?;
    let a = (1..q).find(|&a| gcd(a, q) == 1 && Quotients::new(a, q).all(|c| c <= m));
    Ok(ZarembaWitness { q, m, a })
}

pub fn minimal_m(q: u64) -> Result<MinimalMRecord> {
    check_search_args(q, 1)?;
    // (q-1)/q = [1, q-1], so the loop ends by m = max(2, q-1).
    for m in 2.. {
        if let Some(a) = find_numerator(q, m)?.a {
            return Ok(MinimalMRecord { q, m_min: m, witness: a });
        }
    }
    unreachable!()
}

/// Rough dimension `w_M` of reals with quotients bounded by `M`; only used
/// to predict tree sizes.
pub(crate) fn predicted_dimension(m: u64) -> f64 {
    const KNOWN: [f64; 5] = [0.0, 0.531_280_506, 0.705_660_7, 0.788_945_557, 0.836_829_4];
    match m {
        0 => 0.0,
        1..=5 => KNOWN[(m - 1) as usize],
        _ => 1.0 - 6.0 / (std::f64::consts::PI.powi(2) * m as f64),
    }
}

/// All reduced `e/f` in (0, 1) with `f <= bound` and every canonical
/// quotient at most `m`, as `(f, e)` pairs.
///
/// Refuses when the predicted size `bound^{2 w_M}` or the actual node count
/// exceeds `cap`.
pub fn continuant_tree(m: u64, bound: u64, cap: u64) -> Result<BTreeSet<(u64, u64)>> {
    if m == 0 || bound < 2 {
        return precondition("continuant_tree needs M >= 1 and bound >= 2");
    }
    let predicted = (bound as f64).powf(2.0 * predicted_dimension(m));
    if predicted > cap as f64 {
        return Err(Error::CapExceeded {
            what: "continuant tree nodes (predicted)",
            requested: predicted as u128,
            cap: cap as u128,
        });
    }
    let mut out = BTreeSet::new();
    let mut nodes = 0u64;
    let mut stack = vec![Prefix::ROOT];
    while let Some(node) = stack.pop() {
        for c in 1..=m {
            let child = node.child(c);
            if child.f_cur > bound {
                break;
            }
            nodes += 1;
            if nodes > cap {
                return Err(Error::CapExceeded {
                    what: "continuant tree nodes",
                    requested: nodes as u128,
                    cap: cap as u128,
                });
            }
            if c >= 2 {
                out.insert((child.f_cur, child.e_cur));
            }
            stack.push(child);
        }
    }
    Ok(out)
}

pub fn checksum(q: u64, m_min: u64, witness: u64) -> u64 {
    ((q as u128 + m_min as u128 + witness as u128) % 9973) as u64
}

pub fn cache_line(r: &MinimalMRecord) -> String {
    format!("{},{},{},{}", r.q, r.m_min, r.witness, checksum(r.q, r.m_min, r.witness))
}

pub fn parse_cache_line(line: &str) -> std::result::Result<MinimalMRecord, String> {
    let fields: Vec<&str> = line.trim_end().split(',').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let mut nums = [0u64; 4];
    for (slot, f) in nums.iter_mut().zip(&fields) {
        *slot = f.parse().map_err(|_| format!("field {f:?} is not an integer"))?;
    }
    let [q, m_min, witness, sum] = nums;
    if checksum(q, m_min, witness) != sum {
        return Err(format!("checksum {sum} does not match"));
    }
    Ok(MinimalMRecord { q, m_min, witness })
}

/// Append-only store of minimal-`M` records, one text line per `q`.
#[derive(Debug, Default)]
pub struct RangeCache {
    path: Option<PathBuf>,
    records: BTreeMap<u64, MinimalMRecord>,
}

impl RangeCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates on first write) the cache file at `path`, checking
    /// every existing line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut records = BTreeMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec = parse_cache_line(&line)
                    .map_err(|reason| Error::CacheCorrupt { line: i + 1, reason })?;
                records.insert(rec.q, rec);
            }
        }
        Ok(Self { path: Some(path), records })
    }

    pub fn get(&self, q: u64) -> Option<&MinimalMRecord> {
        self.records.get(&q)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &MinimalMRecord> {
        self.records.values()
    }

    /// Records a batch; persisted by appending lines in the given order.
    pub fn extend(&mut self, batch: &[MinimalMRecord]) -> Result<()> {
        if let Some(path) = &self.path {
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = BufWriter::new(file);
            for r in batch {
                writeln!(w, "{}", cache_line(r))?;
            }
            w.flush()?;
        }
        for r in batch {
            self.records.insert(r.q, *r);
        }
        Ok(())
    }

    /// Rewrites the file sorted by `q` with duplicates dropped.
    pub fn finalize(&mut self) -> Result<()> {
        if let Some(path) = &self.path {
            let tmp = path.with_extension("tmp");
            {
                let mut w = BufWriter::new(File::create(&tmp)?);
                for r in self.records.values() {
                    writeln!(w, "{}", cache_line(r))?;
                }
                w.flush()?;
            }
            std::fs::rename(&tmp, path)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub q_lo: u64,
    pub q_hi: u64,
    pub m: u64,
    /// Denominators whose minimal bound exceeds `m`.
    pub failures: Vec<u64>,
    /// `M_min -> number of q`.
    pub histogram: BTreeMap<u64, u64>,
    pub records: Vec<MinimalMRecord>,
    /// Number of `q` computed in this call (the rest came from the cache).
    pub computed: u64,
}

impl VerifyReport {
    /// Smallest `C` with `M_min(q) <= C log q` over the scanned `q >= 3`.
    pub fn korobov_constant(&self) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.q >= 3)
            .map(|r| r.m_min as f64 / (r.q as f64).ln())
            .reduce(f64::max)
    }
}

const VERIFY_CHUNK: u64 = 4096;

/// Computes `M_min` for every `q` in `[q_lo, q_hi]` missing from the cache.
/// Work is sharded over the current rayon pool and merged in `q` order; the
/// cache is only written from this thread.
pub fn verify_range(q_lo: u64, q_hi: u64, m: u64, cache: &mut RangeCache) -> Result<VerifyReport> {
    if q_lo < 2 || q_lo > q_hi {
        return precondition(format!("invalid range [{q_lo}, {q_hi}]"));
    }
    let mut computed = 0u64;
    let mut start = q_lo;
    while start <= q_hi {
        let end = q_hi.min(start.saturating_add(VERIFY_CHUNK - 1));
        let todo: Vec<u64> = (start..=end).filter(|q| cache.get(*q).is_none()).collect();
        let batch = todo.par_iter().map(|&q| minimal_m(q)).collect::<Result<Vec<_>>>()?;
        computed += batch.len() as u64;
        cache.extend(&batch)?;
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
    let mut report = VerifyReport { q_lo, q_hi, m, computed, ..Default::default() };
    for q in q_lo..=q_hi {
        let rec = *cache.get(q).expect("filled above");
        if rec.m_min > m {
            report.failures.push(q);
        }
        *report.histogram.entry(rec.m_min).or_default() += 1;
        report.records.push(rec);
    }
    Ok(report)
}
