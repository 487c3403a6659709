use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rgcrt::baselines::{nonrobust_estimate, searching_estimate};
use rgcrt::dynrange::{dynamic_range_coprime, verify_dynamic_range};
use rgcrt::harness::{
    emit_results, frequency_range, run_snr_sweep, run_tau_sweep, Estimator, ExperimentConfig, SweepMode, SweepResult,
    FULL_TRIALS,
};
use rgcrt::sigsim::{detect_all, ToneSpec};
use rgcrt::{robust_reconstruct, solve_two_gcd, ErroneousResidueFamily, Error, ModulusSet, ResidueFamily, Result};

#[derive(Parser)]
#[command(
    name = "rgcrt",
    version,
    about = "Two-integer reconstruction from unordered residue pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Moduli {
    /// Common factor of all moduli.
    #[arg(long = "M", default_value_t = 100)]
    big_m: i64,
    /// Comma-separated pairwise coprime factors.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 7])]
    m: Vec<i64>,
}

impl Moduli {
    fn build(&self) -> Result<ModulusSet> {
        ModulusSet::new(self.big_m, self.m.clone())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Errorfree,
    Robust,
    Search,
    Nonrobust,
}

#[derive(clap::Args)]
struct SweepArgs {
    #[command(flatten)]
    moduli: Moduli,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per level; defaults to 2000.
    #[arg(long)]
    trials: Option<usize>,
    /// Use 10000 trials per level.
    #[arg(long, conflicts_with = "trials")]
    full: bool,
    /// Comma-separated levels overriding the preset.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    levels: Option<Vec<f64>>,
    /// Comma-separated subset of robust,search,nonrobust.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// CSV destination; a JSON sidecar is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Dynamic range of the moduli.
    Dynrange {
        #[command(flatten)]
        moduli: Moduli,
        /// Also check the range by exhaustive enumeration.
        #[arg(long)]
        verify: bool,
    },
    /// Reconstruct two integers from residue pairs.
    Reconstruct {
        #[arg(long, value_enum)]
        mode: Mode,
        #[command(flatten)]
        moduli: Moduli,
        /// Pairs per modulus, e.g. "69,195;95,169;69,395".
        #[arg(long)]
        residues: String,
    },
    /// Synthesize two tones and detect their residues.
    Simulate {
        #[arg(long)]
        f1: i64,
        #[arg(long)]
        f2: i64,
        #[command(flatten)]
        moduli: Moduli,
        /// SNR in dB; omit for a noiseless run.
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Remainder-error sweep.
    SweepTau(SweepArgs),
    /// SNR sweep through the waveform simulation.
    SweepSnr(SweepArgs),
}

fn parse_residues(text: &str) -> Result<Vec<(i64, i64)>> {
    let bad = || Error::InvalidArgument(format!("cannot parse residues {text:?}; expected \"a,b;c,d;...\""));
    text.split(';')
        .map(|pair| {
            let nums: Vec<i64> = pair
                .split(',')
                .map(|s| s.trim().parse::<i64>().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            match nums[..] {
                [a, b] => Ok((a, b)),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("serializable output")
}

fn sweep(
    args: SweepArgs,
    mut cfg: ExperimentConfig,
    run: fn(&ExperimentConfig) -> Result<SweepResult>,
) -> Result<Value> {
    cfg.big_m = args.moduli.big_m;
    cfg.m = args.moduli.m.clone();
    if cfg.mode == SweepMode::SnrSweep {
        cfg.range = frequency_range(cfg.big_m, &cfg.m);
    }
    cfg.seed = args.seed;
    if args.full {
        cfg.trials = FULL_TRIALS;
    } else if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(levels) = args.levels {
        cfg.levels = levels;
    }
    if let Some(names) = args.estimators {
        cfg.estimators = names.iter().map(|n| n.parse::<Estimator>()).collect::<Result<_>>()?;
    }
    cfg.out = args.out.clone();
    let result = run(&cfg)?;
    if let Some(path) = &args.out {
        emit_results(&cfg, &result.summary, path)?;
    }
    Ok(json!({ "config": cfg, "summary": result.summary }))
}

fn execute(command: Command) -> Result<Value> {
    match command {
        Command::Dynrange { moduli, verify } => {
            let ms = moduli.build()?;
            let report = dynamic_range_coprime(&ms)?;
            let mut out = to_json(&report);
            if verify {
                out["verified"] = json!({
                    "at_md": verify_dynamic_range(&ms, report.md)?,
                    "at_md_plus_one": verify_dynamic_range(&ms, report.md + 1)?,
                });
            }
            Ok(out)
        }
        Command::Reconstruct { mode, moduli, residues } => {
            let ms = moduli.build()?;
            let pairs = parse_residues(&residues)?;
            match mode {
                Mode::Errorfree => Ok(to_json(&solve_two_gcd(&ResidueFamily::new(ms, pairs)?)?)),
                Mode::Robust => Ok(to_json(&robust_reconstruct(&ErroneousResidueFamily::new(ms, pairs)?)?)),
                Mode::Search => Ok(to_json(&searching_estimate(&ErroneousResidueFamily::new(ms, pairs)?)?)),
                Mode::Nonrobust => Ok(to_json(&nonrobust_estimate(&ErroneousResidueFamily::new(ms, pairs)?)?)),
            }
        }
        Command::Simulate {
            f1,
            f2,
            moduli,
            snr,
            seed,
        } => {
            let ms = moduli.build()?;
            if f1 <= 0 || f2 <= 0 || f1 == f2 {
                return Err(Error::InvalidArgument(
                    "frequencies must be distinct positive integers".into(),
                ));
            }
            let spec = ToneSpec::new(f1, f2, snr.unwrap_or(f64::INFINITY), seed);
            let detections = detect_all(&spec, &ms)?;
            let pairs: Vec<(i64, i64)> = detections.iter().map(|d| d.bins).collect();
            Ok(json!({
                "f1": f1,
                "f2": f2,
                "snr_db": snr,
                "seed": seed,
                "moduli": ms.full_moduli(),
                "residues": pairs,
                "detections": detections,
            }))
        }
        Command::SweepTau(args) => sweep(args, ExperimentConfig::tau_preset(), run_tau_sweep),
        Command::SweepSnr(args) => sweep(args, ExperimentConfig::snr_preset(), run_snr_sweep),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let err = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{err}");
            ExitCode::FAILURE
        }
    }
}
