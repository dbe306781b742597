use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use rfs_cli::{run, workers_from_env, Cli, CliError, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers_from_env()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("cannot start worker pool")?;
    match pool.install(|| run(cli))? {
        Outcome::Experiment { out_dir, summary } => {
            if let Some(p) = &summary.poisson {
                println!("P(n) at mean {}: {:?}", p.mean_atoms, p.probabilities);
            }
            for r in &summary.runs {
                println!("N = {}: P_N(n) = {:?}", r.n_atoms, r.survival.probabilities);
            }
            println!("results written to {}", out_dir.display());
        }
        Outcome::Calibration {
            preset_path,
            record,
        } => {
            println!(
                "best P_{}(1) = {:.3} at {:?}; preset written to {}",
                record.atoms,
                record.best_p1,
                record.best,
                preset_path.display()
            );
        }
    }
    Ok(())
}
