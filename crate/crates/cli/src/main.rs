use std::path::PathBuf;
use std::process::ExitCode;

use cascade_core::pipeline::{run_pipeline, validate_config, RunConfig, RunOutput, Stage};
use cascade_core::sim::{Arm, ComparisonReport, Lookup};
use cascade_core::{io, Error, Execution};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Team, strategic and incentivized learning in a sequential-buyer model.
#[derive(Parser, Debug)]
#[command(name = "cascade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Solve the team average-reward program.
    Solve,
    /// Compute the myopic strategic policy.
    Strategic,
    /// Coincidence set, subsidy and incentivized policy.
    Mechanism,
    /// Everything, including the simulated comparison.
    Simulate,
    /// Same as `simulate`.
    All,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Self {
        match c {
            Command::Solve => Stage::Solve,
            Command::Strategic => Stage::Strategic,
            Command::Mechanism => Stage::Mechanism,
            Command::Simulate => Stage::Simulate,
            Command::All => Stage::All,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum LookupArg {
    Exact,
    GridSnap,
}

/// Command-line values win over the config file, which wins over defaults.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// Flat JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Reporting cost c.
    #[arg(long, global = true)]
    cost: Option<f64>,
    #[arg(long, global = true)]
    initial_belief: Option<f64>,
    #[arg(long, global = true)]
    grid_size: Option<usize>,
    #[arg(long, global = true)]
    vi_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    #[arg(long, global = true)]
    burn_in: Option<usize>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, action = clap::ArgAction::Set)]
    pay_on_difference_set: Option<bool>,
    #[arg(long, global = true)]
    extra_bonus_delta: Option<f64>,
    #[arg(long, global = true, value_enum)]
    lookup: Option<LookupArg>,
    /// Run without the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, mut c: RunConfig) -> RunConfig {
        let p = &mut c.params;
        macro_rules! set {
            ($src:ident => $dst:expr) => {
                if let Some(v) = self.$src.clone() {
                    $dst = v;
                }
            };
        }
        set!(epsilon => p.epsilon);
        set!(p => p.p);
        set!(cost => p.c);
        set!(initial_belief => p.initial_belief);
        set!(grid_size => p.grid_size);
        set!(vi_tol => p.vi_tol);
        set!(max_iters => p.max_iters);
        set!(horizon => p.horizon);
        set!(burn_in => p.burn_in);
        set!(replications => p.num_replications);
        set!(seed => p.seed);
        if self.sequential {
            p.execution = Execution::Sequential;
        }
        set!(pay_on_difference_set => c.mechanism.pay_on_difference_set);
        set!(extra_bonus_delta => c.mechanism.extra_bonus_delta);
        set!(out => c.out);
        if let Some(l) = self.lookup {
            c.lookup = match l {
                LookupArg::Exact => Lookup::Exact,
                LookupArg::GridSnap => Lookup::GridSnap,
            };
        }
        c
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParams(_) => EXIT_CONFIG,
        Error::NonConvergence { .. }
        | Error::ZeroProbabilityOutcome { .. }
        | Error::EmptyGammaSet
        | Error::GridMismatch(_) => EXIT_SOLVER,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Format(_) => EXIT_IO,
    }
}

fn print_summary(out: &RunOutput) {
    let m = &out.metadata;
    if let Some(s) = &m.solver {
        println!("rho = {:.6}  ({} iterations, span {:.2e})", s.rho, s.iterations, s.span);
    }
    if let Some(s) = &m.mechanism {
        println!(
            "coincidence fraction = {:.4}, pay ranges = {:?}, amount = {}",
            s.coincidence_fraction, s.pay_ranges, s.amount
        );
    }
    if let Ok(report) = io::read_json::<ComparisonReport>(&out.dir.join("comparison.json")) {
        if m.files.iter().any(|f| f == "comparison.json") {
            for arm in Arm::ALL {
                let a = report.arm(arm);
                println!(
                    "{:<18} avg_reward = {:.6} ± {:.6}  avg_payment = {:.6}",
                    arm.name(),
                    a.avg_reward.mean,
                    a.avg_reward.se,
                    a.avg_payment.mean
                );
            }
        }
    }
    println!("wrote {} files to {}", out.files.len(), out.dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let base = match &cli.overrides.config {
        Some(path) => match RunConfig::from_json_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: cannot read config {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => RunConfig::default(),
    };
    let config = cli.overrides.apply(base);
    let violations = validate_config(&config);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("invalid config: {v}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    match run_pipeline(&config, cli.command.into()) {
        Ok(out) => {
            print_summary(&out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
