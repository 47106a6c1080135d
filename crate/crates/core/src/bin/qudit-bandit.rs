use std::process::ExitCode;

use clap::Parser;
use qudit_bandit::experiment::batch::run_batch;
use qudit_bandit::experiment::config::{Cli, ExperimentConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match ExperimentConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match run_batch(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for r in &outcome.summary.reports {
        println!(
            "d={} T={} runs={} final regret {:.3} ± {:.3}{}",
            r.d,
            r.horizon,
            r.seeds.len(),
            r.final_regret_mean,
            r.final_regret_std,
            r.final_infidelity_mean.map(|f| format!(", final infidelity {f:.3e}")).unwrap_or_default()
        );
    }
    let failed = outcome.failed();
    if failed > 0 {
        eprintln!("{failed} of {} cells failed", outcome.cells.len());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
