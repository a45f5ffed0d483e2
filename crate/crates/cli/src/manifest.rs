use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::{io_err, CliResult};

/// Provenance record written next to the reports. Holds no timestamps, so
/// identical runs produce identical manifests.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the canonical config text after command-line overrides.
    pub config_hash: String,
    pub seed: u64,
    pub versions: ModuleVersions,
    pub outputs: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuleVersions {
    pub core: String,
    pub cli: String,
}

impl RunManifest {
    pub fn new(experiment: &str, config: &Config, outputs: &[PathBuf], passed: bool) -> Self {
        RunManifest {
            experiment: experiment.to_string(),
            config_hash: config_hash(config),
            seed: config.run.seed,
            versions: ModuleVersions {
                core: dec_green::VERSION.to_string(),
                cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            outputs: outputs
                .iter()
                .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()))
                .collect(),
            passed,
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join(format!("{}.manifest.toml", self.experiment));
        let text = toml::to_string(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// The output directory is not part of the hash.
pub fn config_hash(config: &Config) -> String {
    let mut c = config.clone();
    c.run.out_dir = None;
    hex::encode(Sha256::digest(c.canonical().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_config() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.run.out_dir = Some("elsewhere".into());
        assert_eq!(config_hash(&a), config_hash(&b));
        b.run.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
