use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use zlab_core::arith::{gcd, mod_inv};
use zlab_core::counting::{
    build_instance, report_for, Control, CountingInstance, ExperimentParams, ExperimentReport, ResidueSet,
};
use zlab_core::fractal::{build_zm, in_zm, zm_dioph_report};
use zlab_core::probe::{critical_window_check, invert_set, nstar_good, x_prime_candidates, WindowReport};

use crate::config::ExperimentConfig;
use crate::output::{csv_bytes, emit, json_bytes};
use crate::{Ctx, UsageError};

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ControlArg {
    Full,
    Fractal,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CountArgs {
    /// One or more moduli, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub tau: Option<f64>,
    #[arg(long = "M")]
    #[serde(skip)]
    pub m: Option<u64>,
    /// Block length; `t` is then `round(sqrt(q / N))` instead of coming from tau.
    #[arg(long = "N")]
    pub n: Option<u64>,
    #[arg(long, value_enum, default_value = "fractal")]
    pub control: ControlArg,
    #[arg(long)]
    #[serde(skip)]
    pub json: Option<PathBuf>,
    /// Sweep CSV, one row per modulus.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

impl CountArgs {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(m) = self.m {
            cfg.m = m;
        }
    }

    pub fn artifacts(&self) -> Vec<PathBuf> {
        self.json.iter().chain(&self.csv).cloned().collect()
    }
}

#[derive(Serialize)]
struct WindowSweep {
    mtilde: u64,
    /// `a` with `a, a^-1 in Z_M(t)`.
    pairs_checked: u64,
    violations: u64,
    first_violation: Option<WindowReport>,
    /// Violations other than `a = 1`, whose membership is vacuous.
    nontrivial_violations: u64,
}

/// Counts of `(a, x)` with `a in Z_M(t)`, `1 <= x <= t` and
/// `x |ax|_q <= q/(cM)`, with the first few pairs.
#[derive(Serialize)]
struct DiophSummary {
    members: u64,
    violations_quarter: u64,
    violations_full: u64,
    first_quarter: Vec<(u64, u64)>,
    first_full: Vec<(u64, u64)>,
}

const SHOWN: usize = 8;

#[derive(Serialize)]
struct NstarSummary {
    nstar: u64,
    eta: f64,
    intervals: u64,
    good: u64,
    worst_hit_fraction: Option<String>,
}

#[derive(Serialize)]
struct XPrime {
    a: u64,
    candidates: Vec<u64>,
}

#[derive(Serialize)]
struct Probes {
    zm_dioph: DiophSummary,
    window: WindowSweep,
    nstar: NstarSummary,
    x_prime: Option<XPrime>,
}

#[derive(Serialize)]
struct Run {
    report: ExperimentReport,
    probes: Option<Probes>,
}

#[derive(Serialize)]
struct Document<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    runs: Vec<Run>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct SweepRow<'a> {
    q: u64,
    t: u64,
    M: u64,
    N: u64,
    sizeA: u64,
    sizeB: u64,
    lhs: u64,
    main_num: &'a str,
    main_den: &'a str,
    rel_err: Option<f64>,
    norm_err: Option<f64>,
    seed: u64,
    ms: u64,
    config_hash: &'a str,
}

fn params(q: u64, args: &CountArgs, cfg: &ExperimentConfig) -> anyhow::Result<ExperimentParams> {
    let control = match args.control {
        ControlArg::Full => Control::Full,
        ControlArg::Fractal => Control::Fractal,
    };
    let mut p = ExperimentParams::from_tau(q, cfg.tau, cfg.m, cfg.seed, control)?;
    if let Some(n) = args.n {
        if n == 0 {
            return Err(UsageError("--N must be at least 1".into()).into());
        }
        p.n = n;
        p.t = (((q as f64) / n as f64).sqrt().round() as u64).max(2);
    }
    Ok(p)
}

fn probes(inst: &CountingInstance, p: &ExperimentParams, cfg: &ExperimentConfig) -> anyhow::Result<Probes> {
    let (q, t, m) = (p.q, p.t, p.m);
    let mtilde = cfg.mtilde();
    let mut window = WindowSweep { mtilde, pairs_checked: 0, violations: 0, first_violation: None, nontrivial_violations: 0 };
    let mut first_nontrivial = None;
    for a in build_zm(q, t, m)? {
        let Some(inv) = mod_inv(a, q) else { continue };
        if !in_zm(inv, q, t, m) {
            continue;
        }
        window.pairs_checked += 1;
        if a > 1 && first_nontrivial.is_none() {
            first_nontrivial = Some(a);
        }
        let r = critical_window_check(a, q, t, m, mtilde)?;
        if r.violation {
            window.violations += 1;
            window.nontrivial_violations += u64::from(a > 1);
            window.first_violation.get_or_insert(r);
        }
    }
    let nstar = ((p.n as f64).powf(cfg.nstar_exponent).round() as u64).max(1);
    let a_elems = inst.a.elements();
    let units: Vec<u64> = a_elems.iter().copied().filter(|&x| gcd(x, q) == 1).collect();
    let target = invert_set(&units, q)?;
    let intervals: Vec<(u64, u64)> = match &inst.a {
        ResidueSet::Sum(s) => s.base().iter().map(|l| (l + 1, p.n)).filter(|(s, n)| s + n <= q).collect(),
        _ => Vec::new(),
    };
    let good = nstar_good(&intervals, &target, nstar, cfg.eta, q)?;
    let worst = good
        .iter()
        .min_by(|x, y| (x.hits * y.subintervals).cmp(&(y.hits * x.subintervals)))
        .map(|r| r.hit_fraction.clone());
    let dioph = zm_dioph_report(q, t, m)?;
    Ok(Probes {
        zm_dioph: DiophSummary {
            members: dioph.members,
            violations_quarter: dioph.violations_quarter.len() as u64,
            violations_full: dioph.violations_full.len() as u64,
            first_quarter: dioph.violations_quarter.iter().take(SHOWN).copied().collect(),
            first_full: dioph.violations_full.iter().take(SHOWN).copied().collect(),
        },
        window,
        nstar: NstarSummary {
            nstar,
            eta: cfg.eta,
            intervals: good.len() as u64,
            good: good.iter().filter(|r| r.good).count() as u64,
            worst_hit_fraction: worst,
        },
        x_prime: first_nontrivial
            .map(|a| Ok::<_, anyhow::Error>(XPrime { a, candidates: x_prime_candidates(a, q, t, p.n)? }))
            .transpose()?,
    })
}

fn one(q: u64, args: &CountArgs, ctx: &Ctx) -> anyhow::Result<Run> {
    let start = Instant::now();
    let p = params(q, args, &ctx.cfg)?;
    if p.control == Control::Fractal {
        p.check_consistent()?;
    }
    let inst = build_instance(&p)?;
    let mut report = report_for(p.clone(), &inst);
    let probes = match p.control {
        Control::Fractal => Some(probes(&inst, &p, &ctx.cfg)?),
        Control::Full => None,
    };
    if ctx.timing {
        report.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(Run { report, probes })
}

pub fn run(args: &CountArgs, ctx: &Ctx) -> anyhow::Result<u8> {
    let mut qs = args.q.clone();
    qs.sort_unstable();
    qs.dedup();
    if let Some(&q) = qs.iter().find(|&&q| q < 2) {
        return Err(UsageError(format!("--q {q} must be at least 2")).into());
    }
    let runs = qs.par_iter().map(|&q| one(q, args, ctx)).collect::<anyhow::Result<Vec<_>>>()?;
    if let Some(path) = &args.csv {
        let rows: Vec<SweepRow> = runs
            .iter()
            .map(|r| {
                let rep = &r.report;
                SweepRow {
                    q: rep.params.q,
                    t: rep.params.t,
                    M: rep.params.m,
                    N: rep.params.n,
                    sizeA: rep.size_a,
                    sizeB: rep.size_b,
                    lhs: rep.lhs,
                    main_num: &rep.main_num,
                    main_den: &rep.main_den,
                    rel_err: rep.relative_error,
                    norm_err: rep.normalized_error,
                    seed: rep.params.seed,
                    ms: rep.runtime_ms,
                    config_hash: &ctx.hash,
                }
            })
            .collect();
        emit(Some(path), &csv_bytes(&rows)?)?;
    }
    let doc = Document { config_hash: &ctx.hash, config: &ctx.cfg, runs };
    if args.json.is_some() || args.csv.is_none() {
        emit(args.json.as_deref(), &json_bytes(&doc)?)?;
    }
    Ok(0)
}
