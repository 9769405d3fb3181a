use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use zlab_core::fractal::{estimate_dimension, DimensionEstimate};

use crate::output::{csv_bytes, emit};
use crate::{Ctx, UsageError};

#[derive(Args, Clone, Debug, Serialize)]
pub struct DimensionArgs {
    /// Quotient bounds, comma separated.
    #[arg(long = "M", value_delimiter = ',', required = true)]
    pub m: Vec<u64>,
    /// Increasing scales `t`, at least three.
    #[arg(long = "t-samples", value_delimiter = ',', required = true)]
    pub t_samples: Vec<u64>,
    /// Estimates CSV; stdout when absent.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// Points `(log t, log count)` per M.
    #[arg(long = "plot-data")]
    #[serde(skip)]
    pub plot_data: Option<PathBuf>,
}

impl DimensionArgs {
    pub fn artifacts(&self) -> Vec<PathBuf> {
        self.csv.iter().chain(&self.plot_data).cloned().collect()
    }
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct Row<'a> {
    M: u64,
    w_hat: f64,
    residual: f64,
    one_minus_w_times_M: f64,
    samples: usize,
    config_hash: &'a str,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct PlotRow<'a> {
    M: u64,
    t: u64,
    count: u64,
    x: f64,
    y: f64,
    config_hash: &'a str,
}

pub fn run(args: &DimensionArgs, ctx: &Ctx) -> anyhow::Result<u8> {
    if args.t_samples.len() < 3 {
        return Err(UsageError(format!("need at least 3 t samples, got {}", args.t_samples.len())).into());
    }
    if args.m.contains(&0) {
        return Err(UsageError("M must be at least 1".into()).into());
    }
    let mut ms = args.m.clone();
    ms.sort_unstable();
    ms.dedup();
    let ests: Vec<DimensionEstimate> =
        ms.par_iter().map(|&m| estimate_dimension(m, &args.t_samples)).collect::<zlab_core::Result<_>>()?;
    let rows: Vec<Row> = ests
        .iter()
        .map(|e| Row {
            M: e.m,
            w_hat: e.w_hat,
            residual: e.residual,
            one_minus_w_times_M: e.m as f64 * (1.0 - e.w_hat),
            samples: e.t_samples.len(),
            config_hash: &ctx.hash,
        })
        .collect();
    emit(args.csv.as_deref(), &csv_bytes(&rows)?)?;
    if let Some(path) = &args.plot_data {
        let pts: Vec<PlotRow> = ests
            .iter()
            .flat_map(|e| {
                e.t_samples.iter().zip(&e.counts).map(|(&t, &c)| PlotRow {
                    M: e.m,
                    t,
                    count: c,
                    x: (t as f64).ln(),
                    y: (c.max(1) as f64).ln(),
                    config_hash: &ctx.hash,
                })
            })
            .collect();
        emit(Some(path), &csv_bytes(&pts)?)?;
    }
    Ok(0)
}
