//! Integer helpers: gcd, modular inverses, factorization by trial division,
//! divisor lists and the multiplicative functions used throughout.

use num_integer::Integer;

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Reduce a signed value into `[0, q)`.
pub fn modulo(x: i128, q: u64) -> u64 {
    x.rem_euclid(q as i128) as u64
}

pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

/// Inverse of `a` modulo `q`, or `None` when `gcd(a, q) != 1`.
pub fn mod_inv(a: u64, q: u64) -> Option<u64> {
    if q == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = ((a % q) as i128, q as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let quot = old_r / r;
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
    }
    (old_r == 1).then(|| modulo(old_s, q))
}

/// Inverses of every residue modulo `q`; entry `x` is `None` for non-units.
///
/// Units are inverted in one batch with the prefix-product trick so the
/// table costs a single extended Euclid call.
pub fn inverse_table(q: u64) -> Vec<Option<u64>> {
    let units: Vec<u64> = (0..q).filter(|&x| gcd(x, q) == 1).collect();
    let mut table = vec![None; q as usize];
    if units.is_empty() {
        return table;
    }
    let mut prefix = Vec::with_capacity(units.len());
    let mut acc = 1 % q;
    for &u in &units {
        acc = mul_mod(acc, u, q);
        prefix.push(acc);
    }
    let mut inv = mod_inv(acc, q).expect("product of units is a unit");
    for i in (0..units.len()).rev() {
        let before = if i == 0 { 1 % q } else { prefix[i - 1] };
        table[units[i] as usize] = Some(mul_mod(inv, before, q));
        inv = mul_mod(inv, units[i], q);
    }
    table
}

/// Prime factorization `[(p, e)]` in increasing order of `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// All positive divisors of `n`, sorted.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n) {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn totient(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Number of distinct prime factors.
pub fn omega(n: u64) -> u32 {
    factorize(n).len() as u32
}

/// Möbius function.
pub fn mobius(n: u64) -> i32 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// Chinese remainder reconstruction for pairwise coprime moduli.
pub fn crt(residues: &[(u64, u64)]) -> (u64, u64) {
    residues.iter().fold((0u64, 1u64), |(x, m), &(r, n)| {
        // x' = x + m * k with x + m k = r (mod n)
        let inv = mod_inv(m % n, n).expect("moduli are coprime");
        let diff = modulo(r as i128 - x as i128, n);
        let k = mul_mod(diff, inv, n);
        (x + m * k, m * n)
    })
}
