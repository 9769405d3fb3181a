use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_hash: String,
    pub inputs: serde_json::Value,
    pub artifacts: Vec<PathBuf>,
    pub status: &'static str,
    pub exit_code: Option<i32>,
    pub wall_ms: Option<u64>,
    #[serde(skip)]
    started: Option<Instant>,
    #[serde(skip)]
    path: Option<PathBuf>,
}

impl RunManifest {
    /// Writes the manifest with status `running` when a path is known.
    pub fn begin(
        subcommand: &str,
        config_hash: &str,
        inputs: serde_json::Value,
        artifacts: Vec<PathBuf>,
        path: Option<PathBuf>,
    ) -> anyhow::Result<Self> {
        // Without an explicit path the manifest sits next to the first artifact.
        let path = path.or_else(|| artifacts.first().map(|a| sibling(a)));
        let m = Self {
            subcommand: subcommand.into(),
            config_hash: config_hash.into(),
            inputs,
            artifacts,
            status: "running",
            exit_code: None,
            wall_ms: None,
            started: Some(Instant::now()),
            path,
        };
        m.write()?;
        Ok(m)
    }

    pub fn finish(mut self, exit_code: i32) -> anyhow::Result<()> {
        self.status = if exit_code == 0 { "ok" } else { "failed" };
        self.exit_code = Some(exit_code);
        self.wall_ms = self.started.map(|s| s.elapsed().as_millis() as u64);
        self.write()
    }

    fn write(&self) -> anyhow::Result<()> {
        if let Some(p) = &self.path {
            std::fs::write(p, serde_json::to_string_pretty(self)? + "\n")?;
        }
        Ok(())
    }
}

fn sibling(p: &Path) -> PathBuf {
    let mut name = p.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    p.with_file_name(name)
}
