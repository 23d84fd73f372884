use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tropdiv::{CellCaps, RankMethod};
use tropdiv_cli::*;

#[derive(Parser)]
#[command(name = "tropdiv", version, about = "Divisors, ranks and Riemann–Roch checks on metric graphs and tropical curves")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Output::Text, global = true)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct RankFlags {
    /// Largest k in the scale schedule base * lcm(1..k).
    #[arg(long, default_value_t = 4)]
    scale_cap: u32,
    /// Discrete rank route.
    #[arg(long, value_enum, default_value_t = MethodArg::Jacobian)]
    method: MethodArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Jacobian,
    Enumerate,
}

impl RankFlags {
    fn options(self) -> tropdiv::RankOptions {
        let method = match self.method {
            MethodArg::Jacobian => RankMethod::Jacobian,
            MethodArg::Enumerate => RankMethod::Enumerate,
        };
        rank_options(self.scale_cap, method)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rank of a divisor (a name from the document, `K`, or `P:1, e@1/2:1`).
    Rank {
        document: PathBuf,
        divisor: String,
        #[command(flatten)]
        flags: RankFlags,
    },
    /// Checks r(D) - r(K - D) = deg D + 1 - g.
    Rr {
        document: PathBuf,
        divisor: String,
        #[command(flatten)]
        flags: RankFlags,
    },
    /// Prints the canonical divisor.
    Canonical { document: PathBuf },
    /// Reduced representative with respect to a base point.
    Reduce {
        document: PathBuf,
        divisor: String,
        /// `V`, `edge@p/q` or `edge@inf`.
        base: String,
    },
    /// Decides linear equivalence; prints a witness f with D2 = D1 + (f).
    Equiv {
        document: PathBuf,
        d1: String,
        d2: String,
    },
    /// Cells of the space of functions with (f) + D effective.
    Cells {
        document: PathBuf,
        divisor: String,
        #[arg(long, default_value_t = 4)]
        caps_edges: usize,
        #[arg(long, default_value_t = 3)]
        caps_degree: i64,
    },
    /// Seeded random Riemann–Roch campaign.
    Campaign {
        config: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        scale_cap: Option<u32>,
    },
    /// Prints one campaign instance as a document.
    Instance {
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// Order of a function at a point.
    Ord {
        document: PathBuf,
        function: String,
        point: String,
    },
    /// Value of a function at a point.
    Eval {
        document: PathBuf,
        function: String,
        point: String,
    },
    /// Re-emits a document in normal form.
    Normalize { document: PathBuf },
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let out = cli.output;
    match cli.command {
        Command::Rank { document, divisor, flags } => cmd_rank(&load_file(&document)?, &divisor, &flags.options(), out),
        Command::Rr { document, divisor, flags } => cmd_rr(&load_file(&document)?, &divisor, &flags.options(), out),
        Command::Canonical { document } => cmd_canonical(&load_file(&document)?, out),
        Command::Reduce { document, divisor, base } => cmd_reduce(&load_file(&document)?, &divisor, &base, out),
        Command::Equiv { document, d1, d2 } => cmd_equiv(&load_file(&document)?, &d1, &d2, out),
        Command::Cells {
            document,
            divisor,
            caps_edges,
            caps_degree,
        } => {
            let caps = CellCaps {
                max_edges: caps_edges,
                max_degree: caps_degree,
                ..CellCaps::default()
            };
            cmd_cells(&load_file(&document)?, &divisor, &caps, out)
        }
        Command::Campaign { config, seed, scale_cap } => {
            let mut cfg = load_config(&config)?;
            cfg.seed = seed;
            if let Some(c) = scale_cap {
                cfg.scale_cap = c;
            }
            cmd_campaign(&cfg, out)
        }
        Command::Instance { config, seed, index } => {
            let mut cfg = load_config(&config)?;
            cfg.seed = seed;
            cmd_instance(&cfg, index)
        }
        Command::Ord { document, function, point } => cmd_ord(&load_file(&document)?, &function, &point),
        Command::Eval { document, function, point } => cmd_eval(&load_file(&document)?, &function, &point),
        Command::Normalize { document } => cmd_normalize(&load_file(&document)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
