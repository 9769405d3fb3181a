use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use zlab_core::arith::prime_divisors;
use zlab_core::measures::{
    bounded_generation_probe, convolve, flattening_ratio, helfgott_check, nonconcentration, triple_product, uniform_on,
    Sampler,
};
use zlab_core::sl2::{congruence_coset, generator_set, random_element, GroupElement};
use zlab_core::{Error, Exact};

use crate::config::ExperimentConfig;
use crate::output::{emit, json_bytes};
use crate::{Ctx, UsageError};

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
pub enum SetKind {
    /// Generators `g_1, ..., g_N`.
    #[value(name = "S")]
    #[serde(rename = "S")]
    S,
    /// Kernel of reduction to `--level`.
    #[value(name = "coset")]
    #[serde(rename = "coset")]
    Coset,
    /// `--size` uniform random elements.
    #[value(name = "random")]
    #[serde(rename = "random")]
    Random,
}

#[derive(Clone, Copy, Debug, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Triple,
    Flatten,
    Generate,
    Nonconc,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct ExpandArgs {
    #[arg(long)]
    pub q: u64,
    #[arg(long, value_enum, default_value = "S")]
    pub set: SetKind,
    #[arg(long, value_enum, default_value = "triple")]
    pub probe: ProbeKind,
    /// Number of generators for `--set S`.
    #[arg(long = "N", default_value_t = 3)]
    pub n: u64,
    /// Draws for `--set random`.
    #[arg(long, default_value_t = 20)]
    pub size: u64,
    /// Level for `--set coset`; defaults to `q / p` for the smallest prime `p | q`.
    #[arg(long)]
    pub level: Option<u64>,
    /// Exponents checked against the triple-product bound.
    #[arg(long = "l", value_delimiter = ',', default_values_t = [4u32, 5])]
    pub ls: Vec<u32>,
    #[arg(long)]
    #[serde(skip)]
    pub json: Option<PathBuf>,
}

impl ExpandArgs {
    pub fn artifacts(&self) -> Vec<PathBuf> {
        self.json.iter().cloned().collect()
    }
}

#[derive(Serialize)]
struct SetEcho {
    kind: SetKind,
    size: u64,
    n: Option<u64>,
    level: Option<u64>,
    draws: Option<u64>,
}

#[derive(Serialize)]
struct Flattening {
    support: u64,
    support_conv: u64,
    l2_sq: String,
    l2_sq_conv: String,
    ratio: f64,
    strict: bool,
}

#[derive(Serialize)]
struct Document<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    q: u64,
    set: SetEcho,
    probe: ProbeKind,
    report: serde_json::Value,
}

fn build_set(args: &ExpandArgs, cfg: &ExperimentConfig) -> anyhow::Result<(Vec<GroupElement>, SetEcho)> {
    let q = args.q;
    let mut echo = SetEcho { kind: args.set, size: 0, n: None, level: None, draws: None };
    let set = match args.set {
        SetKind::S => {
            echo.n = Some(args.n);
            generator_set(args.n, q)?
        }
        SetKind::Coset => {
            let level = args.level.unwrap_or_else(|| q / prime_divisors(q)[0]);
            echo.level = Some(level);
            congruence_coset(level, q, cfg.group_cap)?
        }
        SetKind::Random => {
            echo.draws = Some(args.size);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut v = (0..args.size).map(|_| random_element(q, &mut rng)).collect::<zlab_core::Result<Vec<_>>>()?;
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    if set.is_empty() {
        return Err(UsageError("the chosen set is empty".into()).into());
    }
    echo.size = set.len() as u64;
    Ok((set, echo))
}

fn render(x: &Exact) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn run(args: &ExpandArgs, ctx: &Ctx) -> anyhow::Result<u8> {
    let cfg = &ctx.cfg;
    let q = args.q;
    if q < 2 {
        return Err(UsageError("--q must be at least 2".into()).into());
    }
    let cube = (q as u128).pow(3);
    if cube > cfg.group_cap as u128 {
        return Err(Error::CapExceeded { what: "SL2(Z/qZ) enumeration (q^3 estimate)", requested: cube, cap: cfg.group_cap as u128 }.into());
    }
    let (set, echo) = build_set(args, cfg)?;
    let report = match args.probe {
        ProbeKind::Triple => serde_json::json!({
            "triple": triple_product(&set, cfg.product_cap)?,
            "helfgott": helfgott_check(&set, &args.ls, cfg.product_cap)?,
        }),
        ProbeKind::Flatten => {
            let mu = uniform_on::<Exact>(&set)?;
            let mu2 = convolve(&mu, &mu)?;
            let ratio = flattening_ratio(&mu)?;
            serde_json::to_value(Flattening {
                support: mu.support_len() as u64,
                support_conv: mu2.support_len() as u64,
                l2_sq: render(&mu.l2_norm_sq()),
                l2_sq_conv: render(&mu2.l2_norm_sq()),
                ratio,
                strict: mu2.l2_norm_sq() < mu.l2_norm_sq(),
            })?
        }
        ProbeKind::Generate => serde_json::to_value(bounded_generation_probe(&set, cfg.k_max)?)?,
        ProbeKind::Nonconc => {
            serde_json::to_value(nonconcentration(&set, cfg.omega, cfg.kappa, Sampler { seed: cfg.seed, budget: cfg.budget })?)?
        }
    };
    let doc = Document { config_hash: &ctx.hash, config: cfg, q, set: echo, probe: args.probe, report };
    emit(args.json.as_deref(), &json_bytes(&doc)?)?;
    Ok(0)
}
