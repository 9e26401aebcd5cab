//! CSV reports and the JSON run manifest.
//!
//! | file | header |
//! |------|--------|
//! | `ber.csv` | `cipher,snr_db,delay_scale,bit_errors,bits_total,ber` |
//! | `constellation.csv` | `cipher,snr_db,delay_scale,seed,symbol,tx_i,tx_q,rx_i,rx_q,correct` |
//! | `autocorr_summary.csv` | `cipher,input,key_index,max_off_peak,max_off_peak_lag,period_lag` |
//! | `autocorr_traces.csv` | `cipher,input,key_index,lag,r` |
//! | `psd.csv` | `signal,bin,freq_hz,power` |
//! | `spectrum_summary.csv` | `signal,in_band_power,out_of_band_power,out_of_band_fraction,mean_in_band_magnitude` |
//! | `sync_trials.csv` | `seed,snr_db,injected_samples,correct_secret,synced,inferred_samples,error_samples,peak_margin,message` |
//!
//! Infinite SNRs are written as `inf`. Nothing time-dependent is written,
//! so a rerun produces identical bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::spec::{ExperimentKind, ExperimentSpec};
use crate::{
    run_autocorrelation_analysis, run_ber_experiment, run_spectrum_report, run_sync_trial, BenchError, Result,
};

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub experiment: &'static str,
    pub library_version: &'static str,
    pub runner_version: &'static str,
    pub seeds: &'a [u64],
    pub outputs: Vec<String>,
    /// Experiment settings as run, after command-line overrides.
    pub spec: String,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `spec.experiment` and writes its reports plus `manifest.json` into
/// `spec.output`. Returns the files written.
///
/// A sync run whose trials with the right secret did not all lock still
/// writes its report, then fails with [`BenchError::Sync`].
pub fn run_and_write(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    spec.validate()?;
    let dir = &spec.output;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        f(&path)?;
        files.push(path);
        Ok(())
    };
    let mut failure = None;
    match spec.experiment {
        ExperimentKind::Ber | ExperimentKind::BerDelay => {
            let report = run_ber_experiment(spec)?;
            emit("ber.csv", &|p| write_csv(p, &report.records))?;
            if !report.constellation.is_empty() {
                emit("constellation.csv", &|p| write_csv(p, &report.constellation))?;
            }
        }
        ExperimentKind::Autocorr => {
            let report = run_autocorrelation_analysis(spec)?;
            emit("autocorr_summary.csv", &|p| write_csv(p, &report.records))?;
            emit("autocorr_traces.csv", &|p| write_csv(p, &report.traces))?;
        }
        ExperimentKind::Spectrum => {
            let report = run_spectrum_report(spec)?;
            emit("spectrum_summary.csv", &|p| write_csv(p, &report.summaries))?;
            emit("psd.csv", &|p| write_csv(p, &report.psd))?;
        }
        ExperimentKind::Sync => {
            let report = run_sync_trial(spec)?;
            emit("sync_trials.csv", &|p| write_csv(p, &report.records))?;
            let failed = report.records.iter().filter(|r| r.correct_secret && !r.synced).count();
            if failed > 0 {
                failure = Some(BenchError::Sync(format!(
                    "{failed} trial(s) with the correct secret did not synchronize"
                )));
            }
        }
    }
    let manifest = Manifest {
        experiment: spec.experiment.name(),
        library_version: vpsc::VERSION,
        runner_version: env!("CARGO_PKG_VERSION"),
        seeds: &spec.seeds,
        outputs: files
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
        spec: spec.to_toml_string(),
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    files.push(path);
    match failure {
        Some(e) => Err(e),
        None => Ok(files),
    }
}
