//! The counting problem `#{(j, a, b) : 1 <= j <= N, a in A, b in B,
//! (a + 2j)(b + 2j) = 1 (mod q)}` and its main term `phi(q)/q^2 |A||B| N`.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{divisors, inverse_table, is_squarefree, omega, prime_divisors, totient};
use crate::error::{precondition, Result};
use crate::fractal::{least_squares, sumset_from_zm, SumSet};
use crate::sl2::{mobius_generator, ProjLine};
use crate::Exact;

/// Subset of `Z/qZ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResidueSet {
    Full(u64),
    Explicit { q: u64, elems: Vec<u64> },
    Sum(SumSet),
}

impl ResidueSet {
    pub fn explicit(q: u64, elems: impl IntoIterator<Item = u64>) -> Self {
        let set: BTreeSet<u64> = elems.into_iter().map(|x| x % q).collect();
        Self::Explicit { q, elems: set.into_iter().collect() }
    }

    pub fn modulus(&self) -> u64 {
        match self {
            Self::Full(q) | Self::Explicit { q, .. } => *q,
            Self::Sum(s) => s.modulus(),
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            Self::Full(q) => *q,
            Self::Explicit { elems, .. } => elems.len() as u64,
            Self::Sum(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, x: u64) -> bool {
        match self {
            Self::Full(_) => true,
            Self::Explicit { q, elems } => elems.binary_search(&(x % q)).is_ok(),
            Self::Sum(s) => s.contains(x),
        }
    }

    pub fn elements(&self) -> Vec<u64> {
        match self {
            Self::Full(q) => (0..*q).collect(),
            Self::Explicit { elems, .. } => elems.clone(),
            Self::Sum(s) => s.elements(),
        }
    }

    /// `{-x : x in self}`.
    pub fn negated(&self) -> Self {
        let q = self.modulus();
        match self {
            Self::Full(q) => Self::Full(*q),
            _ => Self::explicit(q, self.elements().into_iter().map(|x| (q - x) % q)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountingInstance {
    pub q: u64,
    pub a: ResidueSet,
    pub b: ResidueSet,
    pub n: u64,
}

impl CountingInstance {
    pub fn new(q: u64, a: ResidueSet, b: ResidueSet, n: u64) -> Result<Self> {
        if q < 2 || n < 1 {
            return precondition("counting needs q >= 2 and N >= 1");
        }
        if a.modulus() != q || b.modulus() != q {
            return precondition("residue sets must live mod q");
        }
        Ok(Self { q, a, b, n })
    }
}

/// Solves `b = (a + 2j)^-1 - 2j` for each `(j, a)`; `O(N |A|)` membership tests.
pub fn count_solutions(inst: &CountingInstance) -> u64 {
    let q = inst.q;
    let inv = inverse_table(q);
    let mut count = 0;
    let a_elems = inst.a.elements();
    for j in 1..=inst.n {
        let two_j = 2 * j % q;
        for &a in &a_elems {
            if let Some(u) = inv[((a + two_j) % q) as usize] {
                if inst.b.contains((u + q - two_j) % q) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Triple loop over `(j, a, b)`.
pub fn count_brute(inst: &CountingInstance) -> u64 {
    let q = inst.q as u128;
    let (a_elems, b_elems) = (inst.a.elements(), inst.b.elements());
    let mut count = 0;
    for j in 1..=inst.n as u128 {
        for &a in &a_elems {
            for &b in &b_elems {
                if (a as u128 + 2 * j) * (b as u128 + 2 * j) % q == 1 % q {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Counts through the projective action: `(a + 2j)(b + 2j) = 1` iff the
/// matrix `[[-2j, 1 - 4j^2], [1, 2j]]` sends `(a : 1)` to `(b : 1)`.
pub fn count_via_action(inst: &CountingInstance) -> Result<u64> {
    let line = ProjLine::new(inst.q)?;
    let mut count = 0;
    for j in 1..=inst.n {
        let m = mobius_generator(j, inst.q)?;
        for a in inst.a.elements() {
            let p = line.act_mat(&m, &line.affine(a))?;
            if p.y == 1 % inst.q && inst.b.contains(p.x) {
                count += 1;
            }
        }
    }
    Ok(count)
}

pub fn main_term(inst: &CountingInstance) -> Exact {
    let q = inst.q as i128;
    Exact::new(totient(inst.q) as i128 * inst.a.len() as i128 * inst.b.len() as i128 * inst.n as i128, q * q)
}

/// `(-1)^omega(Q) / Q^2` for squarefree `Q`, else 0.
pub fn nu_q(big_q: u64) -> Exact {
    if !is_squarefree(big_q) {
        return Exact::zero();
    }
    let sign = if omega(big_q).is_multiple_of(2) { 1 } else { -1 };
    Exact::new(sign, big_q as i128 * big_q as i128)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainTermIdentity {
    pub q: u64,
    pub sum_nu: String,
    pub euler_product: String,
    pub per_point: String,
    pub target: String,
    pub equal: bool,
}

fn render(x: &Exact) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// `sum_{Q | q} nu_Q = prod_{p | q} (1 - p^-2)` and
/// `(sum nu_Q) / |P1(Z/qZ)| = phi(q)/q^2`.
pub fn main_term_identity(q: u64) -> Result<MainTermIdentity> {
    if q < 2 {
        return precondition("main_term_identity needs q >= 2");
    }
    let sum_nu: Exact = divisors(q).into_iter().map(nu_q).sum();
    let euler: Exact = prime_divisors(q)
        .into_iter()
        .map(|p| Exact::one() - Exact::new(1, p as i128 * p as i128))
        .product();
    let per_point = sum_nu / Exact::from_integer(crate::sl2::p1_size(q) as i128);
    let target = Exact::new(totient(q) as i128, q as i128 * q as i128);
    Ok(MainTermIdentity {
        q,
        sum_nu: render(&sum_nu),
        euler_product: render(&euler),
        per_point: render(&per_point),
        target: render(&target),
        equal: sum_nu == euler && per_point == target,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedSum {
    pub q: u64,
    pub cutoff: f64,
    pub partial: String,
    pub full: String,
    /// `sum 1/Q^2` over squarefree `Q | q` with `Q >= cutoff`.
    pub tail_bound: String,
    pub within_bound: bool,
}

/// `sum_{Q | q, Q < cutoff} nu_Q`.
pub fn truncated_main_sum(q: u64, cutoff: f64) -> Result<TruncatedSum> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return precondition("cutoff must be positive");
    }
    let divs = divisors(q);
    let partial: Exact = divs.iter().filter(|&&d| (d as f64) < cutoff).map(|&d| nu_q(d)).sum();
    let full: Exact = divs.iter().map(|&d| nu_q(d)).sum();
    let tail: Exact = divs
        .iter()
        .filter(|&&d| (d as f64) >= cutoff && is_squarefree(d))
        .map(|&d| Exact::new(1, d as i128 * d as i128))
        .sum();
    let diff = full - partial;
    let abs = if diff < Exact::zero() { -diff } else { diff };
    Ok(TruncatedSum {
        q,
        cutoff,
        partial: render(&partial),
        full: render(&full),
        tail_bound: render(&tail),
        within_bound: abs <= tail,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Control {
    /// `A = B = Z/qZ`, where the count equals the main term exactly.
    Full,
    /// `A = L + [1, N]` tiled from `Z_M(t)`, `B = A + r` for a seeded shift `r`.
    Fractal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentParams {
    pub q: u64,
    pub t: u64,
    pub m: u64,
    pub n: u64,
    pub seed: u64,
    pub control: Control,
}

impl ExperimentParams {
    /// `t = round(q^(1/2 - tau))`, `N = round(q / t^2)`.
    pub fn from_tau(q: u64, tau: f64, m: u64, seed: u64, control: Control) -> Result<Self> {
        if !(0.0..0.5).contains(&tau) {
            return precondition(format!("tau = {tau} must lie in [0, 1/2)"));
        }
        let t = ((q as f64).powf(0.5 - tau).round() as u64).max(2);
        let n = ((q as f64 / (t * t) as f64).round() as u64).max(1);
        Ok(Self { q, t, m, n, seed, control })
    }

    /// `t^2 N` within a factor 2 of `q`.
    pub fn check_consistent(&self) -> Result<()> {
        let prod = (self.t as u128).pow(2) * self.n as u128;
        let q = self.q as u128;
        if prod * 2 < q || prod > 2 * q {
            return precondition(format!(
                "parameters violate t^2 N ~ q: t = {}, N = {}, t^2 N = {prod}, q = {q}",
                self.t, self.n
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub params: ExperimentParams,
    pub size_a: u64,
    pub size_b: u64,
    pub lhs: u64,
    pub main: String,
    pub main_num: String,
    pub main_den: String,
    pub relative_error: Option<f64>,
    /// `|lhs - main| / (sqrt(|A||B|) N)`.
    pub normalized_error: Option<f64>,
    pub empty: bool,
    /// Wall time in milliseconds; 0 unless timing was requested.
    pub runtime_ms: u64,
}

pub fn build_instance(p: &ExperimentParams) -> Result<CountingInstance> {
    match p.control {
        Control::Full => CountingInstance::new(p.q, ResidueSet::Full(p.q), ResidueSet::Full(p.q), p.n),
        Control::Fractal => {
            let a = sumset_from_zm(p.q, p.t, p.m, p.n)?;
            let shift = ChaCha8Rng::seed_from_u64(p.seed).gen_range(0..p.q);
            let b = SumSet::new(p.q, a.base().iter().map(|l| (l + shift) % p.q), p.n)?;
            CountingInstance::new(p.q, ResidueSet::Sum(a), ResidueSet::Sum(b), p.n)
        }
    }
}

pub fn run_experiment(p: &ExperimentParams) -> Result<ExperimentReport> {
    if p.control == Control::Fractal {
        p.check_consistent()?;
    }
    let inst = build_instance(p)?;
    Ok(report_for(p.clone(), &inst))
}

pub fn report_for(params: ExperimentParams, inst: &CountingInstance) -> ExperimentReport {
    let lhs = count_solutions(inst);
    let main = main_term(inst);
    let empty = main.is_zero();
    let diff = Exact::from_integer(lhs as i128) - main;
    let abs = if diff < Exact::zero() { -diff } else { diff };
    let abs_f = *abs.numer() as f64 / *abs.denom() as f64;
    let main_f = *main.numer() as f64 / *main.denom() as f64;
    let scale = ((inst.a.len() as f64) * (inst.b.len() as f64)).sqrt() * inst.n as f64;
    ExperimentReport {
        params,
        size_a: inst.a.len(),
        size_b: inst.b.len(),
        lhs,
        main: render(&main),
        main_num: main.numer().to_string(),
        main_den: main.denom().to_string(),
        relative_error: (!empty).then(|| if abs.is_zero() { 0.0 } else { abs_f / main_f }),
        normalized_error: (scale > 0.0).then(|| abs_f / scale),
        empty,
        runtime_ms: 0,
    }
}

/// Empirical exponent `eta` from `err ~ C N^(-eta)`: minus the log-log slope.
pub fn fit_error_exponent(points: &[(u64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.1 > 0.0 && p.0 > 0).map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    if pts.len() < 2 {
        return precondition("need at least two positive error samples");
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(-least_squares(&xs, &ys)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_sets_count_n_phi() {
        let inst = CountingInstance::new(5, ResidueSet::Full(5), ResidueSet::Full(5), 3).unwrap();
        assert_eq!(count_solutions(&inst), 12);
        assert_eq!(count_brute(&inst), 12);
        assert_eq!(main_term(&inst), Exact::from_integer(12));
    }

    #[test]
    fn small_examples() {
        let one = |q| ResidueSet::explicit(q, [1]);
        let inst = CountingInstance::new(5, one(5), one(5), 1).unwrap();
        assert_eq!(count_solutions(&inst), 0);
        assert_eq!(main_term(&inst), Exact::new(4, 25));
        let empty = CountingInstance::new(5, ResidueSet::explicit(5, []), ResidueSet::explicit(5, []), 4).unwrap();
        assert_eq!(count_solutions(&empty), 0);
        assert!(run_report_empty(&empty));
    }

    fn run_report_empty(inst: &CountingInstance) -> bool {
        let p = ExperimentParams { q: inst.q, t: 2, m: 5, n: inst.n, seed: 0, control: Control::Full };
        let r = report_for(p, inst);
        r.empty && r.relative_error.is_none()
    }

    #[test]
    fn action_count_agrees() {
        for q in 2..40 {
            let a = ResidueSet::explicit(q, (0..q).filter(|x| x % 3 != 1));
            let b = ResidueSet::explicit(q, (0..q).filter(|x| x % 2 == 0));
            let inst = CountingInstance::new(q, a, b, 7).unwrap();
            assert_eq!(count_via_action(&inst).unwrap(), count_brute(&inst), "q={q}");
            assert_eq!(count_solutions(&inst), count_brute(&inst));
        }
    }

    #[test]
    fn generator_sends_minus_a_to_b() {
        let mut literal_fails = false;
        for q in 2..30u64 {
            let line = ProjLine::new(q).unwrap();
            for j in 1..=q {
                let g = crate::sl2::generator(j, q).unwrap();
                for a in 0..q {
                    for b in 0..q {
                        let eq = (a + 2 * j) * (b + 2 * j) % q == 1 % q;
                        let img = line.act(&g, &line.affine((q - a) % q)).unwrap();
                        assert_eq!(img == line.affine(b), eq, "q={q} j={j} a={a} b={b}");
                        let lit = line.act(&g, &line.affine(a)).unwrap() == line.affine((q - b) % q);
                        literal_fails |= lit != eq;
                    }
                }
            }
        }
        assert!(literal_fails);
    }

    #[test]
    fn nu_examples() {
        assert_eq!(nu_q(1), Exact::from_integer(1));
        assert_eq!(nu_q(6), Exact::new(1, 36));
        assert_eq!(nu_q(4), Exact::from_integer(0));
        assert_eq!(nu_q(2), Exact::new(-1, 4));
    }

    #[test]
    fn identity_examples() {
        let r = main_term_identity(12).unwrap();
        assert_eq!(r.sum_nu, "2/3");
        assert_eq!(r.per_point, "1/36");
        assert!(r.equal);
        for p in [2u64, 3, 5, 7, 101] {
            let r = main_term_identity(p).unwrap();
            assert_eq!(r.per_point, format!("{}/{}", p - 1, p * p));
        }
    }

    #[test]
    fn truncated_examples() {
        let t = truncated_main_sum(30, 7.0).unwrap();
        let want = Exact::one() - Exact::new(1, 4) - Exact::new(1, 9) - Exact::new(1, 25) + Exact::new(1, 36);
        assert_eq!(t.partial, render(&want));
        assert!(t.within_bound);
        assert_eq!(truncated_main_sum(30, 1.5).unwrap().partial, "1/1");
        let all = truncated_main_sum(30, 31.0).unwrap();
        assert_eq!(all.partial, all.full);
    }

    #[test]
    fn fractal_experiment_runs() {
        let p = ExperimentParams::from_tau(10007, 0.15, 5, 1, Control::Fractal).unwrap();
        let r = run_experiment(&p).unwrap();
        assert!(r.size_a > 0 && r.relative_error.unwrap().is_finite());
        assert_eq!(r, run_experiment(&p).unwrap());
    }

    #[test]
    fn control_is_exact() {
        let p = ExperimentParams { q: 101, t: 3, m: 5, n: 11, seed: 0, control: Control::Full };
        assert_eq!(run_experiment(&p).unwrap().relative_error, Some(0.0));
    }

    #[test]
    fn eta_fit_recovers_slope() {
        let pts: Vec<(u64, f64)> = [10u64, 20, 40, 80].iter().map(|&n| (n, 3.0 * (n as f64).powf(-0.3))).collect();
        assert!((fit_error_exponent(&pts).unwrap() - 0.3).abs() < 1e-9);
    }
}
