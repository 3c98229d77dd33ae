//! Experiment orchestration: configuration, the synthetic-corpus generator,
//! and the seeded multi-trial experiment runner behind the CLI.

mod config;
mod experiment;
mod synth;

pub use config::{
    DatasetConfig, ExperimentConfig, ExperimentSection, ModelsConfig, OutputConfig, SplitConfig,
    TrainConfigToml,
};
pub use experiment::{
    load_dataset, run_experiment, vectorize_split, BestTrial, DatasetSummary, ExperimentReport,
    TrialRecord, ASSUMPTIONS,
};
pub use synth::{generate_synthetic_corpus, SyntheticCorpusSpec};

use crate::error::Result;
use std::io::Write;
use std::path::Path;

/// Write a file atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_atomic_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
    }
}
