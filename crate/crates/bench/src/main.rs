use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vpsc_bench::{run_and_write, BenchError, CipherKind, ExperimentKind, ExperimentSpec, ModeSpec};

/// Runs one vpsc experiment and writes CSV reports plus a manifest.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// TOML experiment spec. Defaults apply to every missing key.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed, replacing the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// ber, ber-delay, autocorr, spectrum or sync.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// none, vpsc, fcs, alm or rsa.
    #[arg(long)]
    cipher: Option<CipherKind>,
    /// plain, preemptive_rise, statistical_floor or combined.
    #[arg(long)]
    mode: Option<vpsc::Mode>,
    /// SNR sweep in dB, comma separated. `inf` disables noise.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr_db: Option<Vec<f64>>,
    /// Symbols per sweep point.
    #[arg(long)]
    symbols: Option<usize>,
}

impl Args {
    fn spec(&self) -> Result<ExperimentSpec, BenchError> {
        let mut spec = match &self.spec {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(out) = &self.out {
            spec.output = out.clone();
        }
        if let Some(seed) = self.seed {
            spec.seeds = vec![seed];
        }
        if let Some(e) = self.experiment {
            spec.experiment = e;
        }
        if let Some(c) = self.cipher {
            spec.cipher = c;
        }
        if let Some(m) = self.mode {
            spec.mode = ModeSpec::from(m);
        }
        if let Some(s) = &self.snr_db {
            spec.snr_db = s.clone();
        }
        if let Some(n) = self.symbols {
            spec.symbol_count = n;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match args.spec().and_then(|spec| run_and_write(&spec)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let record = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{record}");
            ExitCode::from(match e.kind() {
                "spec" | "config" => 2,
                "sync" => 3,
                _ => 1,
            })
        }
    }
}
