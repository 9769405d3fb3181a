//! Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Pass criterion numbers as arguments to run a subset.
//!
//! Every tolerance below is pinned; exact criteria compare integers or
//! rationals with `==`.

use std::collections::{HashSet, VecDeque};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zlab_core::arith::gcd;
use zlab_core::contfrac::{check_dioph, dioph_minimum, evaluate, expand};
use zlab_core::counting::{count_solutions, main_term, main_term_identity, CountingInstance, ResidueSet};
use zlab_core::fractal::estimate_dimension;
use zlab_core::measures::{
    bounded_generation_probe, convolve, decompose, helfgott_check, triple_product, uniform_on, GroupMeasure,
    MeasureKind,
};
use zlab_core::sl2::{
    enumerate_group, generator, generator_set, group_elements, mobius_generator, random_element, GroupElement,
    ProjLine, DEFAULT_GROUP_CAP,
};
use zlab_core::zaremba::{minimal_m, verify_range, RangeCache};
use zlab_core::{Exact, ExactMeasure};

/// Zero-tolerance criteria count failures; this is the allowed number.
const ZERO: u64 = 0;
/// Band for `M (1 - w_hat)` in the dimension criterion.
const DIM_BAND: (f64, f64) = (0.2, 2.0);
/// Largest `t` sample for the dimension criterion.
const DIM_T_MAX: u64 = 10_000;
/// Rejection threshold on `N |A| |B|` for the random counting instances.
const COUNT_WORK: u64 = 1_000_000;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---- independent oracles -------------------------------------------------

/// Partial quotients of `a/q` by the Euclidean algorithm on `(q, a)`.
fn euclid_quotients(a: u64, q: u64) -> Vec<u64> {
    let (mut x, mut y) = (q, a);
    let mut out = Vec::new();
    while y != 0 {
        out.push(x / y);
        (x, y) = (y, x % y);
    }
    out
}

fn factor(mut n: u64) -> Vec<u64> {
    let mut ps = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            ps.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        ps.push(n);
    }
    ps
}

fn phi(q: u64) -> u64 {
    (1..=q).filter(|&x| gcd(x, q) == 1).count() as u64
}

fn mobius(n: u64) -> i128 {
    let ps = factor(n);
    if ps.iter().any(|p| n.is_multiple_of(p * p)) {
        0
    } else if ps.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn divisors(n: u64) -> Vec<u64> {
    (1..=n).filter(|d| n.is_multiple_of(*d)).collect()
}

// ---- criteria ------------------------------------------------------------

fn c01_zaremba() -> Verdict {
    let hi = 100_000;
    let mut cache = RangeCache::in_memory();
    let report = match verify_range(2, hi, 5, &mut cache) {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("verify_range error: {e}")),
    };
    let mut bad_witness = 0u64;
    for r in &report.records {
        let ok = gcd(r.witness, r.q) == 1 && euclid_quotients(r.witness, r.q).iter().all(|&c| c <= r.m_min);
        bad_witness += u64::from(!ok);
    }
    // Minimality by linear scan on every q <= 3000 and 100 random larger q.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut sample: Vec<u64> = (2..=3000).collect();
    sample.extend((0..100).map(|_| rng.gen_range(3001..=hi)));
    let mut bad_min = 0u64;
    for &q in &sample {
        let scan = (1..q)
            .filter(|&a| gcd(a, q) == 1)
            .map(|a| euclid_quotients(a, q).into_iter().max().unwrap())
            .min()
            .unwrap();
        bad_min += u64::from(scan != report.records[(q - 2) as usize].m_min);
    }
    let m6 = minimal_m(6).map(|r| r.m_min).unwrap_or(0);
    let fails = report.failures.len() as u64;
    verdict(
        fails == ZERO && bad_witness == ZERO && bad_min == ZERO && m6 == 5,
        format!(
            "q in [2, {hi}], M = 5: {fails} failures, {bad_witness} bad witnesses, {bad_min}/{} scan mismatches, M_min(6) = {m6}",
            sample.len()
        ),
    )
}

fn c02_round_trip() -> Verdict {
    let (mut pairs, mut bad) = (0u64, 0u64);
    for q in 2..=2000u64 {
        for a in (1..q).filter(|&a| gcd(a, q) == 1) {
            pairs += 1;
            let cf = match expand(a, q) {
                Ok(cf) => cf,
                Err(_) => {
                    bad += 1;
                    continue;
                }
            };
            let r = evaluate(&cf);
            let same_digits = cf.quotients() == euclid_quotients(a, q).as_slice();
            if (r.num(), r.den()) != (a, q) || !same_digits {
                bad += 1;
            }
        }
    }
    verdict(bad == ZERO, format!("{pairs} coprime pairs with q <= 2000, {bad} mismatches"))
}

fn c03_diophantine() -> Verdict {
    let (mut pairs, mut fwd, mut conv, mut min_mismatch) = (0u64, 0u64, 0u64, 0u64);
    for q in 2..=3000u64 {
        for a in (1..q).filter(|&a| gcd(a, q) == 1) {
            pairs += 1;
            let m = euclid_quotients(a, q).into_iter().max().unwrap();
            let chk = check_dioph(a, q, m).unwrap();
            fwd += u64::from(!chk.holds);
            // Converse with constant q/M: any M' with min x|ax|_q > q/M' has M' >= max quotient,
            // equivalently q/M_max is not exceeded by the minimum.
            conv += u64::from(chk.worst_value as u128 * m as u128 > q as u128);
            min_mismatch += u64::from(dioph_minimum(a, q).map(|p| p.1).ok() != Some(chk.worst_value));
        }
    }
    verdict(
        fwd == ZERO && conv == ZERO && min_mismatch == ZERO,
        format!(
            "{pairs} pairs with q <= 3000: {fwd} forward violations, {conv} converse violations, {min_mismatch} continuant-minimum mismatches"
        ),
    )
}

fn random_probability(q: u64, rng: &mut ChaCha8Rng) -> ExactMeasure {
    let group = group_elements(q).unwrap();
    let k = rng.gen_range(1..=group.len().min(40));
    let pts: Vec<(GroupElement, i128)> =
        (0..k).map(|_| (group[rng.gen_range(0..group.len())], rng.gen_range(1..=9))).collect();
    let total: i128 = pts.iter().map(|p| p.1).sum();
    let mut merged = std::collections::BTreeMap::new();
    for (g, w) in pts {
        *merged.entry(g).or_insert(0) += w;
    }
    GroupMeasure::from_values(q, merged.into_iter().map(|(g, w)| (g, Exact::new(w, total))), MeasureKind::Probability)
        .unwrap()
}

/// Brute-force `f_Q(x)` from the definition for small `q`.
fn brute_component(mu: &ExactMeasure, big_q: u64, x: &GroupElement) -> Exact {
    let group = group_elements(mu.modulus()).unwrap();
    divisors(big_q)
        .into_iter()
        .map(|d| {
            let class: Vec<&GroupElement> =
                group.iter().filter(|y| y.entries().iter().zip(x.entries()).all(|(a, b)| *a as u64 % d == b as u64 % d)).collect();
            let avg = class.iter().map(|y| mu.get(y)).sum::<Exact>() / Exact::from_integer(class.len() as i128);
            avg * Exact::from_integer(mobius(big_q / d))
        })
        .sum()
}

fn c04_decomposition() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut measures, mut points, mut mismatches, mut h_fail, mut oracle_bad) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for q in 2..=60u64 {
        let mut mus = vec![uniform_on::<Exact>(&generator_set(10, q).unwrap()).unwrap()];
        mus.extend((0..20).map(|_| random_probability(q, &mut rng)));
        for (i, mu) in mus.iter().enumerate() {
            measures += 1;
            let d = decompose(mu).unwrap();
            let chk = d.verify(mu).unwrap();
            points += chk.points;
            mismatches += chk.mismatches;
            h_fail += d.h_space().unwrap().iter().filter(|h| !h.class_sums_vanish).count() as u64;
            if q <= 12 && i < 3 {
                let group = group_elements(q).unwrap();
                for big_q in divisors(q) {
                    let f = d.component(big_q).unwrap();
                    for x in group.iter().step_by(7) {
                        oracle_bad += u64::from(f.at(x.entries()) != brute_component(mu, big_q, x));
                    }
                }
            }
        }
    }
    verdict(
        mismatches == ZERO && h_fail == ZERO && oracle_bad == ZERO,
        format!(
            "{measures} measures, {points} points: {mismatches} reconstruction mismatches, {h_fail} H_Q failures, {oracle_bad} brute-force component mismatches"
        ),
    )
}

fn c05_main_term() -> Verdict {
    let mut bad = 0u64;
    for q in 2..=10_000u64 {
        let id = main_term_identity(q).unwrap();
        let ps = factor(q);
        let num: u64 = ps.iter().map(|p| p * p - 1).product();
        let den: u64 = ps.iter().map(|p| p * p).product();
        let g = gcd(num, den);
        let euler = format!("{}/{}", num / g, den / g);
        bad += u64::from(!id.equal || id.euler_product != euler || id.sum_nu != euler);
    }
    verdict(bad == ZERO, format!("q <= 10000: {bad} identity failures"))
}

fn c06_full_sets() -> Verdict {
    let (mut cases, mut bad) = (0u64, 0u64);
    for q in 2..=500u64 {
        let ph = phi(q);
        for n in 1..=50u64 {
            cases += 1;
            let inst = CountingInstance::new(q, ResidueSet::Full(q), ResidueSet::Full(q), n).unwrap();
            let lhs = count_solutions(&inst);
            let main = main_term(&inst);
            bad += u64::from(Exact::from_integer(lhs as i128) != main || lhs != n * ph);
        }
    }
    verdict(bad == ZERO, format!("{cases} (q, N) cells with q <= 500, N <= 50: {bad} with lhs != main"))
}

fn c07_counter_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut done, mut bad) = (0u64, 0u64);
    while done < 200 {
        let q = rng.gen_range(2..=3000u64);
        let n = rng.gen_range(1..=60u64);
        let da = rng.gen_range(0.0..0.3);
        let db = rng.gen_range(0.0..0.3);
        let a: Vec<u64> = (0..q).filter(|_| rng.gen_bool(da)).collect();
        let b: Vec<u64> = (0..q).filter(|_| rng.gen_bool(db)).collect();
        if n * a.len() as u64 * b.len() as u64 > COUNT_WORK {
            continue;
        }
        done += 1;
        let mut brute = 0u64;
        for j in 1..=n {
            for &x in &a {
                for &y in &b {
                    brute += u64::from((x + 2 * j) * (y + 2 * j) % q == 1 % q);
                }
            }
        }
        let inst =
            CountingInstance::new(q, ResidueSet::explicit(q, a.iter().copied()), ResidueSet::explicit(q, b.iter().copied()), n)
                .unwrap();
        bad += u64::from(count_solutions(&inst) != brute);
    }
    verdict(bad == ZERO, format!("{done} random instances with N|A||B| <= {COUNT_WORK}: {bad} mismatches"))
}

fn c08_orders() -> Verdict {
    let mut bad = Vec::new();
    for q in [2u64, 3, 4, 5, 6, 7, 8, 9, 12] {
        let enumerated = enumerate_group(q, DEFAULT_GROUP_CAP).unwrap().len() as u64;
        let formula = q.pow(3) * factor(q).iter().map(|p| p * p - 1).product::<u64>() / factor(q).iter().map(|p| p * p).product::<u64>();
        let mut brute = 0u64;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        brute += u64::from((a * d + q * q - b * c) % q == 1 % q);
                    }
                }
            }
        }
        if enumerated != formula || brute != formula {
            bad.push(format!("group q={q}"));
        }
    }
    for q in 2..=200u64 {
        let listed = ProjLine::new(q).unwrap().points().len() as u64;
        let ps = factor(q);
        let formula = q * ps.iter().map(|p| p + 1).product::<u64>() / ps.iter().product::<u64>();
        let mut primitive = 0u64;
        for x in 0..q {
            for y in 0..q {
                primitive += u64::from(gcd(gcd(x, y), q) == 1);
            }
        }
        if listed != formula || primitive / phi(q) != formula {
            bad.push(format!("P1 q={q}"));
        }
    }
    verdict(bad.is_empty(), format!("9 group orders, P1 sizes for q <= 200: {} mismatches {:?}", bad.len(), bad))
}

fn c09_action() -> Verdict {
    let (mut triples, mut bad) = (0u64, 0u64);
    for q in 2..=50u64 {
        let line = ProjLine::new(q).unwrap();
        for j in 1..=q {
            let g = generator(j, q).unwrap();
            let m = mobius_generator(j, q).unwrap();
            for a in 0..q {
                let img = line.act(&g, &line.affine((q - a) % q)).unwrap();
                let img_m = line.act_mat(&m, &line.affine(a)).unwrap();
                for b in 0..q {
                    triples += 1;
                    let eq = (a + 2 * j) * (b + 2 * j) % q == 1 % q;
                    let target = line.affine(b);
                    bad += u64::from((img == target) != eq || (img_m == target) != eq);
                }
            }
        }
    }
    verdict(bad == ZERO, format!("{triples} (q, j, a, b) with q <= 50: {bad} disagreements"))
}

/// Radius of the directed Cayley graph of `S` from the identity.
fn cayley_radius(s: &[GroupElement], q: u64) -> Option<u32> {
    let e = GroupElement::identity(q).unwrap();
    let mut dist = std::collections::HashMap::from([(e, 0u32)]);
    let mut queue = VecDeque::from([e]);
    while let Some(x) = queue.pop_front() {
        let dx = dist[&x];
        for g in s {
            let y = x.mul(g).unwrap();
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                e.insert(dx + 1);
                queue.push_back(y);
            }
        }
    }
    (dist.len() == group_elements(q).unwrap().len()).then(|| dist.values().copied().max().unwrap())
}

fn c10_expansion() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut helf_sets, mut helf_bad, mut ratio_bad) = (0u64, 0u64, 0u64);
    for q in [5u64, 7, 11] {
        for _ in 0..100 {
            let k = rng.gen_range(2..=24);
            let a: Vec<GroupElement> = (0..k).map(|_| random_element(q, &mut rng).unwrap()).collect();
            helf_sets += 1;
            let rows = helfgott_check(&a, &[4, 5], 1 << 32).unwrap();
            helf_bad += rows.iter().filter(|r| !r.holds).count() as u64;
            let t = triple_product(&a, 1 << 32).unwrap();
            ratio_bad += u64::from(t.size3 < t.size);
        }
    }
    let primes: Vec<u64> = (50..=150u64).filter(|&p| factor(p) == vec![p]).collect();
    let mut flat_bad = Vec::new();
    let mut worst_ratio = 0.0f64;
    for &p in &primes {
        let mu = uniform_on::<Exact>(&generator_set(20, p).unwrap()).unwrap();
        let mu2 = convolve(&mu, &mu).unwrap();
        let (n1, n2) = (mu.l2_norm_sq(), mu2.l2_norm_sq());
        worst_ratio = worst_ratio.max(mu2.l2_norm() / mu.l2_norm());
        if n2 >= n1 {
            flat_bad.push(p);
        }
    }
    let mut gen_bad = Vec::new();
    for q in [5u64, 7] {
        for n in [3u64, 4, 5] {
            let s = generator_set(n, q).unwrap();
            let exact = bounded_generation_probe(&s, 40).unwrap();
            let mut with_e = s.clone();
            with_e.push(GroupElement::identity(q).unwrap());
            let ball = bounded_generation_probe(&with_e, 40).unwrap();
            let radius = cayley_radius(&s, q);
            if exact.q_found != Some(1) || ball.q_found != Some(1) || ball.k_cover != radius {
                gen_bad.push((q, n));
            }
        }
    }
    verdict(
        helf_bad == ZERO && ratio_bad == ZERO && flat_bad.is_empty() && gen_bad.is_empty(),
        format!(
            "Helfgott: {helf_bad} violations over {helf_sets} sets; flattening strict for {}/{} primes in [50,150] (max ratio {worst_ratio:.4}); generation: {} failures {:?}",
            primes.len() - flat_bad.len(),
            primes.len(),
            gen_bad.len(),
            gen_bad
        ),
    )
}

/// Brute-force `#Q_M(t)`: prefixes `[c_1..c_v]`, `v >= 1`, `c_i <= M`, with
/// `f_v < t <= f_v + f_{v-1}`.
fn brute_qm(m: u64, t: u64) -> u64 {
    fn walk(m: u64, t: u64, f_prev: u64, f: u64, depth: u32) -> u64 {
        let mut n = 0;
        if depth > 0 && f < t && t <= f + f_prev {
            n += 1;
        }
        for c in 1..=m {
            let g = c * f + f_prev;
            if g < t {
                n += walk(m, t, f, g, depth + 1);
            }
        }
        n
    }
    walk(m, t, 0, 1, 0)
}

fn c11_dimension() -> Verdict {
    let ts: Vec<u64> = vec![100, 200, 400, 800, 1600, 3200, 6400, DIM_T_MAX];
    let mut rows = Vec::new();
    let mut oracle_bad = 0u64;
    for m in 3..=10u64 {
        let est = estimate_dimension(m, &ts).unwrap();
        for (&t, &c) in ts.iter().zip(&est.counts).take(4) {
            oracle_bad += u64::from(brute_qm(m, t) != c);
        }
        rows.push((m, est.w_hat));
    }
    let monotone = rows.windows(2).all(|w| w[0].1 < w[1].1);
    let band: Vec<f64> = rows.iter().map(|&(m, w)| m as f64 * (1.0 - w)).collect();
    let in_band = band.iter().all(|&x| x >= DIM_BAND.0 && x <= DIM_BAND.1);
    let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    verdict(
        monotone && in_band && oracle_bad == ZERO,
        format!(
            "M = 3..10, t <= {DIM_T_MAX}: monotone {monotone}, M(1 - w_hat) in [{lo:.3}, {hi:.3}], {oracle_bad} box-count mismatches"
        ),
    )
}

fn run_zlab(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_zlab")).current_dir(dir).args(args).env("ZLAB_THREADS", "1").output().unwrap()
}

fn c12_determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    std::fs::write(root.path().join("cfg.toml"), "seed = 11\nM = 4\nbudget = 50\n").unwrap();
    let cfg = root.path().join("cfg.toml");
    let cfg = cfg.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["verify", "--from", "2", "--to", "3000", "--out", "verify.csv"],
        vec!["count", "--q", "1009,10007", "--tau", "0.15", "--json", "count.json", "--csv", "count.csv"],
        vec!["count", "--q", "101", "--control", "full", "--json", "full.json"],
        vec!["expand", "--q", "7", "--set", "random", "--probe", "triple", "--json", "triple.json"],
        vec!["expand", "--q", "30", "--set", "random", "--size", "100", "--probe", "nonconc", "--json", "nonconc.json"],
        vec!["expand", "--q", "5", "--set", "S", "--probe", "generate", "--json", "generate.json"],
        vec!["expand", "--q", "53", "--N", "20", "--probe", "flatten", "--json", "flatten.json"],
        vec!["dimension", "--M", "2,3", "--t-samples", "50,100,200,400", "--csv", "dim.csv", "--plot-data", "plot.csv"],
    ];
    let mut compared = 0u64;
    let mut problems = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = root.path().join(format!("run{i}_{rep}"));
            std::fs::create_dir(&dir).unwrap();
            let mut full: Vec<&str> = vec!["--config", cfg];
            full.extend(args.iter());
            let out = run_zlab(&dir, &full);
            if !out.status.success() {
                problems.push(format!("{} exited {:?}", args[0], out.status.code()));
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap())
                .filter(|e| !e.file_name().to_string_lossy().ends_with(".manifest.json"))
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
                .collect();
            files.sort();
            outputs.push((files, out.stdout));
        }
        let (a, b) = (&outputs[0], &outputs[1]);
        if a.0.is_empty() || a != b {
            problems.push(format!("{} {} differs", args[0], args[1]));
        }
        for (name, bytes) in &a.0 {
            compared += 1;
            if !String::from_utf8_lossy(bytes).contains("config_hash") {
                problems.push(format!("{name} lacks config_hash"));
            }
        }
    }
    let seen: HashSet<&String> = problems.iter().collect();
    verdict(problems.is_empty(), format!("{} runs x 2, {compared} artifacts byte-compared, problems {:?}", runs.len(), seen))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("zaremba instance scan", c01_zaremba),
        ("continued-fraction round trip", c02_round_trip),
        ("diophantine characterization", c03_diophantine),
        ("decomposition identity", c04_decomposition),
        ("main-term identity chain", c05_main_term),
        ("counting full-set control", c06_full_sets),
        ("counting vs oracle", c07_counter_oracle),
        ("group and P1 orders", c08_orders),
        ("action equivalence", c09_action),
        ("expansion probes", c10_expansion),
        ("dimension sanity", c11_dimension),
        ("determinism", c12_determinism),
    ];
    let only: HashSet<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !only.is_empty() && !only.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        println!("{} {k:02} {name}: {} [{secs:.1}s]", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
