//! Flat key-value experiment configuration.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Every tunable, echoed into each report. Keys in the file match the field
/// names; anything unknown is rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub tau: f64,
    #[serde(rename = "M")]
    pub m: u64,
    /// Defaults to `10 M`.
    pub m_star: Option<u64>,
    /// Defaults to `max(M, M_star)`.
    pub mtilde: Option<u64>,
    pub h_exponent: f64,
    pub nstar_exponent: f64,
    pub omega: f64,
    pub kappa: f64,
    pub eta: f64,
    pub seed: u64,
    pub group_cap: u64,
    pub node_cap: u64,
    pub product_cap: u64,
    /// Random `g` per level in the non-concentration sampler.
    pub budget: u64,
    pub k_max: u32,
    /// Worker count; 0 lets the pool decide. `ZLAB_THREADS` wins over both.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            tau: 0.15,
            m: 5,
            m_star: None,
            mtilde: None,
            h_exponent: 9.0 / 20.0,
            nstar_exponent: 1.0 / 100.0,
            omega: 0.1,
            kappa: 0.25,
            eta: 0.5,
            seed: 0,
            group_cap: zlab_core::sl2::DEFAULT_GROUP_CAP,
            node_cap: zlab_core::fractal::DEFAULT_NODE_CAP,
            product_cap: 1 << 32,
            budget: 200,
            k_max: 40,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| crate::UsageError(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Fills derived defaults and checks ranges.
    pub fn resolve(mut self) -> anyhow::Result<Self> {
        let m_star = *self.m_star.get_or_insert(10 * self.m);
        self.mtilde.get_or_insert(self.m.max(m_star));
        let unit = [
            ("h_exponent", self.h_exponent),
            ("nstar_exponent", self.nstar_exponent),
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("eta", self.eta),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v < 1.0) {
                bail!(crate::UsageError(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if !(0.0..0.5).contains(&self.tau) {
            bail!(crate::UsageError(format!("tau = {} must lie in [0, 1/2)", self.tau)));
        }
        if self.m == 0 {
            bail!(crate::UsageError("M must be at least 1".into()));
        }
        if self.group_cap == 0 || self.node_cap == 0 || self.product_cap == 0 || self.budget == 0 {
            bail!(crate::UsageError("caps and budget must be positive".into()));
        }
        Ok(self)
    }

    pub fn mtilde(&self) -> u64 {
        self.mtilde.unwrap_or(10 * self.m)
    }
}

/// Hex SHA-256 of the subcommand, its inputs, and the resolved config.
pub fn config_hash(subcommand: &str, inputs: &serde_json::Value, cfg: &ExperimentConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.threads = 0;
    let body = serde_json::json!({ "subcommand": subcommand, "inputs": inputs, "config": cfg });
    let digest = Sha256::digest(body.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
