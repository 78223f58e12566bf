//! The variant × initialization comparison matrix.
//!
//! Output layout under the batch directory:
//!
//! ```text
//! batch.toml
//! comparison.csv
//! <variant>/mean_curve.csv
//! <variant>/ef_histogram.csv
//! <variant>/init<k>/{curve.csv, trajectory.json, config.toml}
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::analysis::{self, CiMethod};
use super::export::{self, import_run};
use super::{run_experiment, ExperimentConfig, RunRecord};
use crate::error::{Error, Result};
use crate::stepper::Variant;

pub const BATCH_FILE: &str = "batch.toml";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const MEAN_CURVE_FILE: &str = "mean_curve.csv";
pub const HISTOGRAM_FILE: &str = "ef_histogram.csv";

/// Target placement, swarm start and seed shared by all variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Initialization {
    pub seed: u64,
    pub target_bearing_deg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchConfig {
    pub variants: Vec<Variant>,
    pub initializations: Vec<Initialization>,
    /// Resolution of the averaged curves (s).
    pub grid_step: f64,
    pub histogram_bins: usize,
    pub ci: CiMethod,
    /// Settings shared by every run; variant and seeds are overridden.
    pub base: ExperimentConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            initializations: [(1, 90.0), (2, 110.0), (3, 65.0)]
                .into_iter()
                .map(|(seed, target_bearing_deg)| Initialization {
                    seed,
                    target_bearing_deg,
                })
                .collect(),
            grid_step: 0.1,
            histogram_bins: 10,
            ci: CiMethod::Normal,
            base: ExperimentConfig::default(),
        }
    }
}

/// One cell of the matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchRun {
    pub variant: Variant,
    /// Index into the initialization list.
    pub init: usize,
    pub config: ExperimentConfig,
}

impl BatchRun {
    pub fn dir(&self, out: &Path) -> PathBuf {
        out.join(self.variant.name())
            .join(format!("init{}", self.init))
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.variants.is_empty() || self.initializations.is_empty() {
            return Err(Error::config(
                "batch needs at least one variant and one initialization",
            ));
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return Err(Error::config("grid_step must be positive"));
        }
        if self.histogram_bins < 2 {
            return Err(Error::config("histogram_bins must be at least 2"));
        }
        self.base.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("batch config serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&export::read(path.as_ref())?)
    }

    /// All runs, variant-major.
    pub fn plan(&self) -> Vec<BatchRun> {
        let mut runs = Vec::new();
        for &variant in &self.variants {
            for (k, init) in self.initializations.iter().enumerate() {
                let mut config = self.base.clone();
                config.variant = variant;
                config.scene_seed = init.seed;
                config.rng_seed = init.seed;
                config.forest.target_bearing_deg = init.target_bearing_deg;
                config.out = None;
                runs.push(BatchRun {
                    variant,
                    init: k,
                    config,
                });
            }
        }
        runs
    }
}

/// Write the run files of a finished batch and the aggregates.
pub fn write_batch(
    out: &Path,
    batch: &BatchConfig,
    runs: &[(BatchRun, RunRecord)],
) -> Result<BatchSummary> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    export::write(&out.join(BATCH_FILE), &batch.to_toml())?;
    for (run, record) in runs {
        export::export_run(record, Some(&run.config), &run.dir(out))?;
    }
    analyze(out)
}

/// Run the whole matrix sequentially and write it to `out`.
pub fn run_batch(batch: &BatchConfig, out: &Path) -> Result<BatchSummary> {
    batch.validate()?;
    let mut runs = Vec::new();
    for run in batch.plan() {
        let record = run_experiment(&run.config)?;
        runs.push((run, record));
    }
    write_batch(out, batch, &runs)
}

#[derive(Clone, Debug)]
pub struct VariantSummary {
    pub variant: Variant,
    pub records: Vec<RunRecord>,
    pub curve: analysis::MeanCurve,
    pub histogram: analysis::EfHistogram,
}

#[derive(Clone, Debug)]
pub struct BatchSummary {
    pub variants: Vec<VariantSummary>,
}

fn init_dirs(variant_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<(usize, PathBuf)> = Vec::new();
    let entries = fs::read_dir(variant_dir).map_err(|e| Error::io(variant_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(variant_dir, e))?;
        let name = entry.file_name();
        let Some(k) = name.to_str().and_then(|n| n.strip_prefix("init")) else {
            continue;
        };
        if let Ok(k) = k.parse() {
            dirs.push((k, entry.path()));
        }
    }
    dirs.sort();
    Ok(dirs.into_iter().map(|(_, p)| p).collect())
}

/// Recompute mean curves, histograms and the comparison table from the run
/// files under `out`.
pub fn analyze(out: &Path) -> Result<BatchSummary> {
    let batch_path = out.join(BATCH_FILE);
    let batch = if batch_path.exists() {
        BatchConfig::load(&batch_path)?
    } else {
        BatchConfig::default()
    };
    let mut variants = Vec::new();
    for variant in Variant::ALL {
        let dir = out.join(variant.name());
        if !dir.is_dir() {
            continue;
        }
        let records = init_dirs(&dir)?
            .iter()
            .map(|d| import_run(d))
            .collect::<Result<Vec<_>>>()?;
        if records.is_empty() {
            continue;
        }
        let curve = analysis::interpolate_and_average_with(&records, batch.grid_step, batch.ci)?;
        let histogram = analysis::ef_histogram(&records, batch.histogram_bins);
        export::write(
            &dir.join(MEAN_CURVE_FILE),
            &analysis::mean_curve_csv(&curve),
        )?;
        export::write(
            &dir.join(HISTOGRAM_FILE),
            &analysis::histogram_csv(&histogram),
        )?;
        variants.push(VariantSummary {
            variant,
            records,
            curve,
            histogram,
        });
    }
    if variants.is_empty() {
        return Err(Error::format(out, "no run directories found"));
    }
    let curves: Vec<_> = variants
        .iter()
        .map(|v| (v.variant, v.curve.clone()))
        .collect();
    export::write(
        &out.join(COMPARISON_FILE),
        &analysis::comparison_csv(&curves),
    )?;
    Ok(BatchSummary { variants })
}
