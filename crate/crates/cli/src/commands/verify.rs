use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use zlab_core::zaremba::{verify_range, RangeCache};

use crate::output::{csv_bytes, emit};
use crate::{Ctx, UsageError};

#[derive(Args, Clone, Debug, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub from: u64,
    #[arg(long)]
    pub to: u64,
    #[arg(long = "max-quotient", default_value_t = 5)]
    pub max_quotient: u64,
    /// RangeCache file, created if missing and rewritten sorted at the end.
    #[arg(long)]
    #[serde(skip)]
    pub cache: Option<PathBuf>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl VerifyArgs {
    pub fn artifacts(&self) -> Vec<PathBuf> {
        self.out.iter().cloned().collect()
    }
}

#[derive(Serialize)]
struct Row<'a> {
    q: u64,
    m_min: u64,
    witness: u64,
    ok: bool,
    config_hash: &'a str,
}

pub fn run(args: &VerifyArgs, ctx: &Ctx) -> anyhow::Result<u8> {
    if args.from < 2 || args.from > args.to {
        return Err(UsageError(format!("invalid range --from {} --to {}", args.from, args.to)).into());
    }
    if args.max_quotient < 1 {
        return Err(UsageError("--max-quotient must be at least 1".into()).into());
    }
    let mut cache = match &args.cache {
        Some(p) => RangeCache::open(p)?,
        None => RangeCache::in_memory(),
    };
    let report = verify_range(args.from, args.to, args.max_quotient, &mut cache)?;
    cache.finalize()?;
    let rows: Vec<Row> = report
        .records
        .iter()
        .map(|r| Row { q: r.q, m_min: r.m_min, witness: r.witness, ok: r.m_min <= args.max_quotient, config_hash: &ctx.hash })
        .collect();
    emit(args.out.as_deref(), &csv_bytes(&rows)?)?;
    let hist: Vec<String> = report.histogram.iter().map(|(m, c)| format!("{m}:{c}")).collect();
    eprintln!(
        "verify [{}, {}] M={}: {} failures, {} computed, M_min histogram {}",
        args.from,
        args.to,
        args.max_quotient,
        report.failures.len(),
        report.computed,
        hist.join(" ")
    );
    for q in report.failures.iter().take(20) {
        eprintln!("failure q={q}");
    }
    Ok(u8::from(!report.failures.is_empty()))
}
