//! Trace non-concentration: how many `x` in `A` satisfy
//! `Tr(g x) = t (mod q1)` for admissible `g`, `t`, and divisors `q1 > q^omega`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::arith::{divisors, gcd, prime_divisors};
use crate::error::{precondition, Error, Result};
use crate::sl2::{GroupElement, MatElement};

/// Levels `q1` up to this size are scanned over every admissible `g`.
pub const EXHAUSTIVE_LEVEL: u64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Sampler {
    pub seed: u64,
    /// Random `g` per level above [`EXHAUSTIVE_LEVEL`].
    pub budget: u64,
}

/// `#{x in A : Tr(g x) = t (mod q1)}`.
pub fn trace_count(set: &[GroupElement], g: &MatElement, t: u64, q1: u64) -> usize {
    set.iter().filter(|x| g.trace_with(x) as u64 % q1 == t % q1).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelStat {
    pub q1: u64,
    pub exhaustive: bool,
    pub samples: u64,
    pub worst_count: u64,
    /// `worst_count / |A|` as `num/den`.
    pub ratio: String,
    pub ratio_value: f64,
    pub witness_g: [u32; 4],
    pub witness_t: u64,
    pub bound_q1: f64,
    pub bound_q: f64,
    pub pass_q1: bool,
    pub pass_q: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonConcentrationReport {
    pub q: u64,
    pub size: u64,
    pub omega: f64,
    pub kappa: f64,
    pub sampler: Sampler,
    pub levels: Vec<LevelStat>,
    /// Index into `levels` of the largest ratio.
    pub worst_level: Option<usize>,
}

fn admissible(entries: [u32; 4], primes: &[u64]) -> bool {
    primes.iter().all(|&p| entries.iter().any(|&x| !(x as u64).is_multiple_of(p)))
}

/// Worst trace concentration of `A` at every level `q1 | q` with
/// `q1 > q^omega`. Only the reduction of `g` mod `q1` matters, so `g` ranges
/// over Mat2(Z/q1Z) with nonzero reduction mod each prime of `q1`.
pub fn nonconcentration(set: &[GroupElement], omega: f64, kappa: f64, sampler: Sampler) -> Result<NonConcentrationReport> {
    if sampler.budget == 0 {
        return precondition("sampler budget must be positive");
    }
    let first = set.first().ok_or(Error::EmptySet)?;
    let q = first.modulus();
    let mut a = set.to_vec();
    a.sort_unstable();
    a.dedup();
    let n = a.len() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut levels = Vec::new();
    for q1 in divisors(q).into_iter().filter(|&d| d >= 2 && (d as f64) > (q as f64).powf(omega)) {
        let primes = prime_divisors(q1);
        let exhaustive = q1 <= EXHAUSTIVE_LEVEL;
        let candidates: Vec<[u32; 4]> = if exhaustive {
            let r = q1 as u32;
            (0..r.pow(4))
                .map(|i| [i % r, i / r % r, i / (r * r) % r, i / (r * r * r)])
                .filter(|e| admissible(*e, &primes))
                .collect()
        } else {
            let mut v = Vec::with_capacity(sampler.budget as usize);
            while (v.len() as u64) < sampler.budget {
                let e = [0; 4].map(|_: u32| rng.gen_range(0..q1 as u32));
                if admissible(e, &primes) {
                    v.push(e);
                }
            }
            v
        };
        let mut best = (0u64, [0u32; 4], 0u64);
        let mut hist = vec![0u64; q1 as usize];
        for e in &candidates {
            let g = MatElement::new(e[0] as i64, e[1] as i64, e[2] as i64, e[3] as i64, q)?;
            hist.iter_mut().for_each(|h| *h = 0);
            for x in &a {
                hist[(g.trace_with(x) as u64 % q1) as usize] += 1;
            }
            let (t, &c) = hist.iter().enumerate().max_by_key(|(t, c)| (**c, std::cmp::Reverse(*t))).expect("q1 >= 2");
            if c > best.0 {
                best = (c, *e, t as u64);
            }
        }
        let g = gcd(best.0, n);
        let ratio_value = best.0 as f64 / n as f64;
        let bound_q1 = (q1 as f64).powf(-kappa);
        let bound_q = (q as f64).powf(-kappa);
        levels.push(LevelStat {
            q1,
            exhaustive,
            samples: candidates.len() as u64,
            worst_count: best.0,
            ratio: format!("{}/{}", best.0 / g, n / g),
            ratio_value,
            witness_g: best.1,
            witness_t: best.2,
            bound_q1,
            bound_q,
            pass_q1: ratio_value < bound_q1,
            pass_q: ratio_value < bound_q,
        });
    }
    let worst_level = levels
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.ratio_value.total_cmp(&y.1.ratio_value).then(y.0.cmp(&x.0)))
        .map(|p| p.0);
    Ok(NonConcentrationReport { q, size: n, omega, kappa, sampler, levels, worst_level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::{congruence_coset, group_elements, DEFAULT_GROUP_CAP};

    #[test]
    fn trace_zero_in_sl2_f3() {
        let g = group_elements(3).unwrap();
        let id = MatElement::new(1, 0, 0, 1, 3).unwrap();
        assert_eq!(trace_count(&g, &id, 0, 3), 6);
        assert_eq!(g.len(), 24);
    }

    #[test]
    fn cosets_concentrate() {
        let k = congruence_coset(3, 9, DEFAULT_GROUP_CAP).unwrap();
        let r = nonconcentration(&k, 0.1, 0.25, Sampler { seed: 1, budget: 50 }).unwrap();
        let l3 = r.levels.iter().find(|l| l.q1 == 3).unwrap();
        assert_eq!(l3.ratio, "1/1");
        assert!(!l3.pass_q1);
    }

    #[test]
    fn zero_budget_rejected() {
        let g = group_elements(5).unwrap();
        assert!(nonconcentration(&g, 0.1, 0.25, Sampler { seed: 0, budget: 0 }).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let g = group_elements(10).unwrap();
        let s = Sampler { seed: 5, budget: 20 };
        assert_eq!(nonconcentration(&g, 0.1, 0.25, s).unwrap(), nonconcentration(&g, 0.1, 0.25, s).unwrap());
    }
}
