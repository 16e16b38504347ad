use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use sentrep::{AnyModel, Error, TrainingReport};
use serde::Serialize;

const VERSION: &str = match option_env!("SENTREP_GIT_REV") {
    Some(rev) => rev,
    None => concat!("v", env!("CARGO_PKG_VERSION")),
};

/// Everything needed to rerun a training job, written next to each model.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub model_kind: &'static str,
    pub config: serde_json::Value,
    /// CRC32 of the training corpus bytes.
    pub corpus_checksum: Option<String>,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(argv: &[String], model: &AnyModel, corpus_checksum: Option<String>, seed: u64, wall: Duration) -> Self {
        RunManifest {
            command_line: argv.to_vec(),
            model_kind: model.kind().name(),
            config: model.config_json(),
            corpus_checksum,
            seed,
            wall_time_seconds: wall.as_secs_f64(),
            version: VERSION,
        }
    }

    pub fn path_for(model: &Path) -> PathBuf {
        let mut s = model.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    pub fn write_beside(&self, model: &Path) -> Result<(), Error> {
        let path = Self::path_for(model);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// The timing-free part of a training report.
#[derive(Clone, Debug, Serialize)]
pub struct LossSummary {
    pub examples: u64,
    pub skipped: u64,
    pub mean_loss: f64,
    pub decile_losses: [f64; 10],
    pub window_losses: Vec<f64>,
}

impl From<&TrainingReport> for LossSummary {
    fn from(r: &TrainingReport) -> Self {
        LossSummary {
            examples: r.examples,
            skipped: r.skipped,
            mean_loss: r.mean_loss,
            decile_losses: r.decile_losses,
            window_losses: r.window_losses.clone(),
        }
    }
}
