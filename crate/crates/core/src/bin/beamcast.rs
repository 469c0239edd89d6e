use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use beamcast::mdp::{ExactOptions, ExactPolicy, PolicyTable};
use beamcast::phy::ReceptionMode;
use beamcast::sim::{simulate, SimConfig, DEFAULT_RUNS};
use beamcast::sweep::{self, SweepConfig};
use beamcast::{Error, LinkTable, Policy, PolicyKind, Result, Scenario};

/// Scheduling of mmWave multicast retransmissions.
#[derive(Parser)]
#[command(name = "beamcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a policy and print its expected cost, optionally dumping the table.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: f64,
        /// Write the full decision table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve (or load) a policy and replay it on random channels.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, required_unless_present = "policy_file")]
        epsilon: Option<f64>,
        #[command(flatten)]
        sim: SimArgs,
        /// Replay a table written by `solve --policy exact|broadcast --out`.
        #[arg(long)]
        policy_file: Option<PathBuf>,
        /// CSV output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve and simulate over a grid of penalties.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated penalties; default is a 12-point log grid.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the built-in figure recipes and write fig<N>.csv.
    Figure {
        /// 2, 3 or 5.
        which: u32,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON path, or @table1 / @twouser.
    scenario: String,
    #[arg(long, default_value = "hierarchical")]
    policy: PolicyKind,
    /// Override the packets each user needs (x_cap follows as 2m).
    #[arg(long)]
    m: Option<u32>,
    /// Override the number of retransmission slots.
    #[arg(long)]
    rmax: Option<u32>,
    /// Let the exact solver run with more than four users.
    #[arg(long)]
    allow_large_exact: bool,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// worst-user or per-user; defaults to the scenario's mode.
    #[arg(long)]
    mode: Option<String>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let s = Scenario::load(&self.scenario)?;
        if self.m.is_none() && self.rmax.is_none() {
            return Ok(s);
        }
        let out = s.with_protocol(self.m.unwrap_or(s.m), self.rmax.unwrap_or(s.r_max));
        out.validate()?;
        Ok(out)
    }

    fn exact(&self) -> ExactOptions {
        ExactOptions { allow_large: self.allow_large_exact, ..Default::default() }
    }
}

impl SimArgs {
    fn config(&self, scenario: &Scenario) -> Result<SimConfig> {
        let mode = match self.mode.as_deref() {
            None => scenario.reception_mode,
            Some("worst-user") => ReceptionMode::WorstUser,
            Some("per-user") => ReceptionMode::PerUser,
            Some(other) => return Err(Error::Validation(format!("unknown reception mode {other:?}"))),
        };
        Ok(SimConfig { runs: self.runs, seed: self.seed, mode })
    }
}

fn solve(common: &Common, epsilon: f64) -> Result<(Scenario, Box<dyn Policy>)> {
    let scenario = common.scenario()?;
    let exact = common.exact();
    let links = sweep::links_for(&scenario, common.policy, &exact)?;
    let policy = sweep::solve_policy(&scenario, common.policy, epsilon, links, &exact)?;
    Ok((scenario, policy))
}

/// The replayable policy stored at `path`, with the penalty it was solved for.
fn load_table(path: &PathBuf, scenario: &Scenario) -> Result<(Box<dyn Policy>, f64)> {
    let (kind, table) = PolicyTable::parse_dump(&fs::read_to_string(path)?)?;
    if kind != PolicyKind::Exact {
        return Err(Error::Validation(format!("{}: only exact policy tables can be replayed", path.display())));
    }
    if table.space.n_users() != scenario.n_users() || table.space.m() != scenario.m || table.r_max != scenario.r_max {
        return Err(Error::Validation(format!("{}: table does not match the scenario", path.display())));
    }
    let links = Arc::new(LinkTable::build(scenario, table.groups.iter().copied())?);
    let epsilon = table.epsilon;
    Ok((Box::new(ExactPolicy::from_table(table, links)), epsilon))
}

fn write_rows(rows: &[sweep::SweepRow], out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => sweep::emit(rows, path),
        None => sweep::write_csv(rows, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { common, epsilon, out } => {
            let (_, policy) = solve(&common, epsilon)?;
            println!("{} J0 = {:e}", policy.kind(), policy.expected_cost());
            if let Some(path) = out {
                fs::write(path, policy.dump())?;
            }
        }
        Command::Simulate { common, epsilon, sim, policy_file, out } => {
            let (scenario, policy, epsilon) = match (&policy_file, epsilon) {
                (Some(path), _) => {
                    let scenario = common.scenario()?;
                    let (policy, eps) = load_table(path, &scenario)?;
                    (scenario, policy, eps)
                }
                (None, Some(eps)) => {
                    let (scenario, policy) = solve(&common, eps)?;
                    (scenario, policy, eps)
                }
                (None, None) => return Err(Error::Validation("--epsilon or --policy-file is required".into())),
            };
            let config = sim.config(&scenario)?;
            let stats = simulate(policy.as_ref(), &config)?;
            let row = sweep::SweepRow {
                scenario: scenario.name.clone(),
                policy: policy.kind().to_string(),
                epsilon,
                m: scenario.m,
                rmax: scenario.r_max,
                mean_duration_s: stats.mean_duration,
                ci_duration_s: stats.ci_duration,
                mean_failures: stats.mean_failures,
                ci_failures: stats.ci_failures,
                j0: policy.expected_cost(),
                n_runs: stats.runs,
                seed: stats.seed,
            };
            write_rows(&[row], out.as_ref())?;
        }
        Command::Sweep { common, epsilons, sim, out } => {
            let scenario = common.scenario()?;
            let config =
                SweepConfig { kind: common.policy, epsilons, sim: sim.config(&scenario)?, exact: common.exact() };
            let rows = sweep::sweep(&scenario, &config)?;
            write_rows(&rows, out.as_ref())?;
        }
        Command::Figure { which, sim, out_dir } => {
            // each figure scenario supplies its own reception mode
            let config = sim.config(&Scenario::two_user())?;
            let path = sweep::figure(which, &config, &out_dir)?;
            println!("{}", path.display());
        }
    }
    io::stdout().flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamcast: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
