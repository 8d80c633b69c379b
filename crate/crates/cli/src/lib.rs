//! Command-line harness for the Walsh quartile toolkit: seeded property
//! suites, endpoint-constant sweeps, the symmetric-endpoint probe, and
//! file-based evaluation. All reports are deterministic JSON: rerunning
//! with the same seed and configuration reproduces them byte for byte.

pub mod band;
pub mod conjecture;
pub mod endpoint;
pub mod eval;
pub mod report;
pub mod verify;

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_rational::Rational64;

use crate::conjecture::{run_conjecture, ConjectureConfig};
use crate::endpoint::{run_endpoint, validate_p1, EndpointConfig, F2Shape, Variant};
use crate::report::{to_json, VerifyReport};

#[derive(Parser)]
#[command(name = "quartile", version, about = "Exact Walsh phase-plane experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run a seeded property suite and write a JSON report.
    Verify(VerifyArgs),
    /// Sweep weak-type endpoint constants over a list of exponents.
    Endpoint(EndpointArgs),
    /// Search for large symmetric-endpoint ratios (exploratory).
    Conjecture(ConjectureArgs),
    /// Evaluate V_S(f1,f2) or the trilinear form from JSON files.
    Eval(EvalArgs),
}

#[derive(Args)]
pub struct VerifyArgs {
    /// One of: orthogonality, projections, john-nirenberg, tree-estimate,
    /// size-lemma, cz-identity, all.
    #[arg(long)]
    pub suite: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EndpointArgs {
    /// Comma-separated exponents in (1,2), e.g. "17/16,9/8,5/4,3/2,7/4".
    #[arg(long, default_value = "17/16,9/8,5/4,3/2,7/4")]
    pub p1: String,
    /// Dyadic depth of the adversarial profile.
    #[arg(long, default_value_t = 14)]
    pub depth: u32,
    /// Number of Qt₁ scale classes in the quartile band.
    #[arg(long, default_value_t = 12)]
    pub scales: u32,
    /// Frequency positions per scale in the band.
    #[arg(long, default_value_t = 1)]
    pub freq_band: u64,
    /// "indicator" measures against (p₁)'·‖f₁‖·|F₂|^{1/p₂};
    /// "sign" uses an L²-normalized sign packet and 1/r = 1/p + 1/2.
    #[arg(long, default_value = "indicator")]
    pub variant: String,
    /// Shape of F₂ for the indicator variant: "unit" or "lacunary".
    #[arg(long, default_value = "lacunary")]
    pub f2: String,
    /// Apply the power-of-four dilation 4^j before measuring.
    #[arg(long, default_value_t = 0)]
    pub dilate: i32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Accepted max/min spread of K/(p₁)' across the sweep.
    #[arg(long, default_value_t = 8.0)]
    pub max_spread: f64,
    /// Finest spatial scale of the band (defaults per variant).
    #[arg(long)]
    pub min_scale: Option<i32>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ConjectureArgs {
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub depth: u32,
    #[arg(long, default_value_t = 8)]
    pub scales: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long)]
    pub f1: PathBuf,
    #[arg(long)]
    pub f2: PathBuf,
    #[arg(long)]
    pub f3: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit codes: 0 all assertions pass, 1 assertion failure, 2 usage or
/// input error.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Verify(args) => match build_verify_report(&args) {
            Ok(report) => {
                let pass = report.pass;
                if write_out(&args.out, &to_json(&report)).is_err() {
                    return 2;
                }
                summary(&format!(
                    "verify suite={} seed={} trials={}: {}",
                    args.suite,
                    args.seed,
                    args.trials,
                    if pass { "pass" } else { "FAIL" }
                ));
                i32::from(!pass)
            }
            Err(msg) => {
                eprintln!("{msg}");
                2
            }
        },
        Command::Endpoint(args) => match build_endpoint_config(&args) {
            Ok(cfg) => {
                let report = run_endpoint(&cfg);
                let pass = report.pass;
                if write_out(&args.out, &to_json(&report)).is_err() {
                    return 2;
                }
                summary(&format!(
                    "endpoint variant={} spread={:.4} (limit {}): {}",
                    report.variant,
                    report.spread,
                    report.max_spread,
                    if pass { "pass" } else { "FAIL" }
                ));
                i32::from(!pass)
            }
            Err(msg) => {
                eprintln!("{msg}");
                2
            }
        },
        Command::Conjecture(args) => {
            let cfg = ConjectureConfig {
                trials: args.trials,
                seed: args.seed,
                depth: args.depth,
                scale_classes: args.scales,
            };
            let report = run_conjecture(&cfg);
            if write_out(&args.out, &to_json(&report)).is_err() {
                return 2;
            }
            summary(&format!(
                "conjecture trials={} best_ratio={:.6}",
                report.trials, report.best_ratio
            ));
            0
        }
        Command::Eval(args) => {
            match eval::run_eval(&args.set, &args.f1, &args.f2, args.f3.as_deref()) {
                Ok(doc) => {
                    if write_out(&args.out, &doc).is_err() {
                        return 2;
                    }
                    0
                }
                Err(e) => {
                    eprintln!("{e}");
                    2
                }
            }
        }
    }
}

pub fn build_verify_report(args: &VerifyArgs) -> Result<VerifyReport, String> {
    let suites = if args.suite == "all" {
        verify::run_all(args.seed, args.trials)
    } else {
        match verify::run_suite(&args.suite, args.seed, args.trials) {
            Some(s) => vec![s],
            None => {
                return Err(format!(
                    "unknown suite {:?}; expected one of {:?} or \"all\"",
                    args.suite,
                    verify::SUITES
                ))
            }
        }
    };
    let pass = suites.iter().all(|s| s.pass);
    Ok(VerifyReport {
        command: "verify",
        version: quartile_core::VERSION,
        seed: args.seed,
        trials: args.trials,
        suites,
        pass,
    })
}

pub fn build_endpoint_config(args: &EndpointArgs) -> Result<EndpointConfig, String> {
    if args.depth > 20 {
        return Err(format!("depth {} exceeds the 2^20-cell resolution bound", args.depth));
    }
    if args.scales == 0 || args.scales > 32 {
        return Err(format!("scale count {} outside 1..=32", args.scales));
    }
    if args.freq_band == 0 || args.freq_band > 64 {
        return Err(format!("frequency band {} outside 1..=64", args.freq_band));
    }
    let mut p1_list = Vec::new();
    for part in args.p1.split(',') {
        let r: Rational64 =
            part.trim().parse().map_err(|e| format!("bad exponent {part:?}: {e}"))?;
        validate_p1(&r)?;
        p1_list.push(r);
    }
    if p1_list.is_empty() {
        return Err("empty p1 list".into());
    }
    let variant = match args.variant.as_str() {
        "indicator" => Variant::Indicator,
        "sign" => Variant::Sign,
        other => return Err(format!("unknown variant {other:?}; use indicator or sign")),
    };
    let f2_shape = match args.f2.as_str() {
        "unit" => F2Shape::Unit,
        "lacunary" => F2Shape::Lacunary,
        other => return Err(format!("unknown f2 shape {other:?}; use unit or lacunary")),
    };
    Ok(EndpointConfig {
        p1_list,
        depth: args.depth,
        scale_classes: args.scales,
        freq_band: args.freq_band,
        variant,
        f2_shape,
        dilate: args.dilate,
        seed: args.seed,
        max_spread: args.max_spread,
        min_scale: args.min_scale,
    })
}

fn write_out(path: &PathBuf, doc: &str) -> Result<(), ()> {
    fs::write(path, doc).map_err(|e| {
        eprintln!("cannot write {}: {e}", path.display());
    })
}

fn summary(line: &str) {
    println!("{line}");
}
