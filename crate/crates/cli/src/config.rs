use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub map_dir: Option<PathBuf>,
}

/// Settings after merging flags, environment and the config file.
#[derive(Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub map_dir: Option<PathBuf>,
}

impl FileConfig {
    /// Relative `map_dir` entries are resolved against the file's directory.
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if let Some(dir) = &config.map_dir {
            if dir.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                config.map_dir = Some(base.join(dir));
            }
        }
        Ok(config)
    }
}

impl RunConfig {
    pub fn merge(file: FileConfig, jobs: Option<usize>, map_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
        let jobs = jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(RunConfig {
            seed: file.seed.unwrap_or(0),
            jobs,
            map_dir: map_dir.or(file.map_dir),
        })
    }
}
