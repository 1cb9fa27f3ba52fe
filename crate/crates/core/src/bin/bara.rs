use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bara::harness::{batch, regret_series, run_in, BatchResult, RunConfig};
use bara::output::{write_batch, write_oracles, write_plotdata, write_rounds, write_summary};
use bara::{Execution, PolicyKind, Result};

#[derive(Parser)]
#[command(name = "bara", version, about = "Reward-budget allocation for auction-based federated learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single seed, overriding the config's seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config's `output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Policy (EA, MIA, MDA, RA, BARA), overriding the config.
    #[arg(long, global = true)]
    policy: Option<PolicyKind>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One run of one policy; writes rounds.csv and summary.csv.
    Run,
    /// Every policy over every seed; writes the batch CSVs.
    Batch,
    /// Exhaustive best fixed cohort size; writes oracle.csv.
    Oracle,
    /// Batch plus per-figure CSVs.
    Plotdata,
}

struct Setup {
    config: RunConfig,
    seeds: Vec<u64>,
    policies: Vec<PolicyKind>,
    out: PathBuf,
    quiet: bool,
}

impl Setup {
    fn new(common: Common) -> Result<Self> {
        let mut config = match &common.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(kind) = common.policy {
            config.policy = kind;
        }
        let seeds = match common.seed {
            Some(s) => vec![s],
            None => config.seeds.clone(),
        };
        let policies = match common.policy {
            Some(kind) => vec![kind],
            None => config.policies.clone(),
        };
        let out = common.out.unwrap_or_else(|| config.output.clone());
        Ok(Self { config, seeds, policies, out, quiet: common.quiet })
    }

    fn first_seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn report_batch(setup: &Setup, result: &BatchResult) {
    for s in &result.summaries {
        setup.say(format!(
            "{:<5} runs {:>3}  final accuracy {:.4} ± {:.4}  rounds {:.1}  spend {:.1}",
            s.policy.name(),
            s.runs,
            s.mean_final_accuracy,
            s.std_final_accuracy,
            s.mean_rounds,
            s.mean_spend
        ));
    }
    for r in &result.runs {
        if let Err(e) = &r.result {
            eprintln!("run {} failed: {e}", r.run_id());
        }
    }
}

fn execute(command: Command, setup: Setup) -> Result<()> {
    match command {
        Command::Run => {
            let seed = setup.first_seed();
            let env = setup.config.build_environment(seed)?;
            let oracle = setup.config.oracle(env.as_ref(), Execution::default())?;
            let mut result = run_in(env.as_ref(), &setup.config, setup.config.policy, seed)?;
            result.regret_avg = regret_series(&result, oracle.accuracy);
            std::fs::create_dir_all(&setup.out)?;
            write_rounds(&setup.out.join("rounds.csv"), &[&result])?;
            write_summary(&setup.out.join("summary.csv"), &[&result])?;
            setup.say(format!(
                "{}: final accuracy {:.4} after {} rounds, spent {:.2} (oracle n*={} a*={:.4})",
                result.run_id(),
                result.final_accuracy,
                result.rounds_executed,
                result.total_spend,
                oracle.arm,
                oracle.accuracy
            ));
        }
        Command::Batch | Command::Plotdata => {
            let plot = matches!(command, Command::Plotdata);
            let result = batch(&setup.config, &setup.policies, &setup.seeds, Execution::default())?;
            let mut written = write_batch(&setup.out, &result)?;
            if plot {
                written.extend(write_plotdata(&setup.out, &result)?);
            }
            report_batch(&setup, &result);
            for p in written {
                setup.say(format!("wrote {}", p.display()));
            }
        }
        Command::Oracle => {
            let mut oracles = Vec::with_capacity(setup.seeds.len());
            for &seed in &setup.seeds {
                let env = setup.config.build_environment(seed)?;
                let o = setup.config.oracle(env.as_ref(), Execution::default())?;
                setup.say(format!("seed {seed}: n*={} a*={:.4}", o.arm, o.accuracy));
                oracles.push((seed, o));
            }
            std::fs::create_dir_all(&setup.out)?;
            let refs: Vec<_> = oracles.iter().map(|(s, o)| (*s, o)).collect();
            write_oracles(&setup.out.join("oracle.csv"), &refs)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Setup::new(cli.common).and_then(|setup| execute(cli.command, setup));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
