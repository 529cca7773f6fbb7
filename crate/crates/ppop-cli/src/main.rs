//! `ppop` — secured-PMU placement against coordinated cyber-physical
//! attacks: placement solvers, attack probing, placement verification,
//! cascade simulation, and the benchmark harness.
//!
//! Exit codes: 0 success (placements verified), 2 configuration error,
//! 3 budget exhausted without a verified result, 4 solver failure.

mod bench;
mod run;

use clap::{Args, Parser, Subcommand};
use ppop_core::report::{Algorithm, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ppop", version, about = "PMU placement for outage prevention")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Bundled case name (ieee30, ieee57, ieee118, triangle3) or a MATPOWER
    /// file path.
    #[arg(long)]
    case: Option<String>,
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Load-falsification fraction alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// Maximum number of physically attacked lines.
    #[arg(long = "xi-p")]
    xi_p: Option<usize>,
    /// Maximum number of manipulated meters ("inf" for unlimited).
    #[arg(long = "xi-c")]
    xi_c: Option<String>,
    /// Uniform overload-tripping factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Dispatch model: relaxed | kkt.
    #[arg(long)]
    sced: Option<String>,
    /// Heuristic knobs.
    #[arg(long)]
    kc: Option<usize>,
    #[arg(long)]
    ka: Option<usize>,
    #[arg(long)]
    kl: Option<usize>,
    /// Solver seed for golden determinism.
    #[arg(long)]
    seed: Option<u64>,
    /// Total wall-clock budget in seconds.
    #[arg(long = "budget-s")]
    budget_s: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict placements to these bus ids (staged rollout), e.g. "1,5,9".
    #[arg(long = "mask")]
    mask: Option<String>,
    /// Load-range boxes "lo:hi[,lo:hi...]" scaling the nominal profile.
    #[arg(long = "load-range")]
    load_range: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a minimum secured-PMU placement.
    Place {
        #[command(flatten)]
        common: CommonOpts,
        /// aong | aodc | heuristic | greedy-degree | full-observability.
        #[arg(long)]
        algo: String,
    },
    /// Solve the attacker's problem under a placement.
    Attack {
        #[command(flatten)]
        common: CommonOpts,
        /// Placement file (bus ids, one per line; # comments). Empty
        /// placement when omitted.
        #[arg(long)]
        placement: Option<PathBuf>,
    },
    /// Verify that a placement admits no outage-causing attack.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        #[arg(long)]
        placement: PathBuf,
    },
    /// Simulate overload tripping rounds after physical outages.
    Cascade {
        #[command(flatten)]
        common: CommonOpts,
        /// Outaged branch rows (1-based, comma separated), e.g. "144".
        #[arg(long)]
        lines: String,
    },
    /// Run a benchmark tier and print expected-vs-observed results.
    Bench {
        #[command(flatten)]
        common: CommonOpts,
        /// fast | full | long.
        #[arg(default_value = "fast")]
        tier: String,
    },
}

fn build_config(common: &CommonOpts, algo: Option<Algorithm>) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{e}"))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| format!("bad config: {e}"))?
        }
        None => RunConfig::default(),
    };
    if let Some(a) = algo {
        cfg.algorithm = a;
    }
    if let Some(c) = &common.case {
        cfg.case = c.clone();
    }
    if let Some(v) = common.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = common.xi_p {
        cfg.xi_p = v;
    }
    if let Some(v) = &common.xi_c {
        cfg.xi_c = match v.as_str() {
            "inf" | "unlimited" | "none" => None,
            n => Some(n.parse().map_err(|_| format!("bad --xi-c `{n}`"))?),
        };
    }
    if let Some(v) = common.gamma {
        if v < 1.0 {
            return Err("--gamma must be >= 1".into());
        }
        cfg.gamma = v;
    }
    if let Some(v) = &common.sced {
        cfg.sced = match v.as_str() {
            "relaxed" => ppop_core::attack::ScedMode::Relaxed,
            "kkt" => ppop_core::attack::ScedMode::Kkt,
            other => return Err(format!("bad --sced `{other}`")),
        };
    }
    if let Some(v) = common.kc {
        cfg.kc = v;
    }
    if let Some(v) = common.ka {
        cfg.ka = v;
    }
    if let Some(v) = common.kl {
        cfg.kl = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.budget_s {
        cfg.budget_s = v;
    }
    if let Some(v) = &common.out {
        cfg.out = Some(v.display().to_string());
    }
    if let Some(mask) = &common.mask {
        let ids: Result<Vec<u32>, _> = mask.split(',').map(|t| t.trim().parse()).collect();
        cfg.placement_mask = Some(ids.map_err(|e| format!("bad --mask: {e}"))?);
    }
    if let Some(spec) = &common.load_range {
        let mut boxes = Vec::new();
        for part in spec.split(',') {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| format!("bad --load-range `{part}` (want lo:hi)"))?;
            boxes.push((
                lo.trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?,
                hi.trim().parse().map_err(|e: std::num::ParseFloatError| e.to_string())?,
            ));
        }
        cfg.load_range = Some(ppop_core::report::LoadRangeSpec { boxes });
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, action) = match &cli.command {
        Command::Place { common, algo } => {
            let algorithm = match algo.parse::<Algorithm>() {
                Ok(a) => a,
                Err(e) => return config_error(e),
            };
            match build_config(common, Some(algorithm)) {
                Ok(cfg) => (cfg, run::Action::Place),
                Err(e) => return config_error(e),
            }
        }
        Command::Attack { common, placement } => match build_config(common, None) {
            Ok(cfg) => (
                cfg,
                run::Action::Attack {
                    placement: placement.clone(),
                    expect_safe: false,
                },
            ),
            Err(e) => return config_error(e),
        },
        Command::Verify { common, placement } => match build_config(common, None) {
            Ok(cfg) => (
                cfg,
                run::Action::Attack {
                    placement: Some(placement.clone()),
                    expect_safe: true,
                },
            ),
            Err(e) => return config_error(e),
        },
        Command::Cascade { common, lines } => match build_config(common, None) {
            Ok(cfg) => (cfg, run::Action::Cascade { lines: lines.clone() }),
            Err(e) => return config_error(e),
        },
        Command::Bench { common, tier } => match build_config(common, None) {
            Ok(cfg) => (cfg, run::Action::Bench { tier: tier.clone() }),
            Err(e) => return config_error(e),
        },
    };
    run::execute(cfg, action)
}

fn config_error(msg: String) -> ExitCode {
    eprintln!("config error: {msg}");
    ExitCode::from(2)
}
