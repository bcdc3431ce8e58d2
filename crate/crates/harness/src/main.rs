use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavewall::output::{emit_all, format_report, key_table};
use wavewall::scenario::{check_only, compute_constants};
use wavewall::sweep::sweep;
use wavewall::{load_config, run_scenario, HarnessError, RunConfig};

#[derive(Parser)]
#[command(name = "wavewall", version, about = "Wave-plate blow-up and potential-well experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the well constants and print their provenance.
    Constants { config: PathBuf },
    /// Run one scenario and write CSV, report and plots.
    Run {
        config: PathBuf,
        /// Override output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one member per value of a config key, concurrently.
    Sweep {
        config: PathBuf,
        /// Config key to vary, e.g. blowup.eps_multiplier.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the scenario hypotheses without running.
    Check { config: PathBuf },
    /// Print the config key table.
    Keys,
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<RunConfig, ExitCode> {
    match load_config(path) {
        Ok(mut cfg) => {
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            Ok(cfg)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(2))
        }
    }
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Keys => {
            print!("{}", key_table());
            ExitCode::SUCCESS
        }
        Command::Constants { config } => {
            let cfg = match load(&config, None) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match compute_constants(&cfg) {
                Ok((_, _, c)) => {
                    for (name, value, how) in c.provenance() {
                        println!("{name:<8} {value:>24.16e}  {how}");
                    }
                    println!("directions {}", c.directions);
                    if let Some(note) = c.dimension_note() {
                        println!("note: {note}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Check { config } => {
            let cfg = match load(&config, None) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match check_only(&cfg) {
                Ok(p) => {
                    println!("totalE(0) = {:.16e}, E(0) = {:.16e}, class {}", p.initial_total, p.initial_quadratic, p.initial_class.label());
                    for h in &p.hypotheses {
                        println!("{} {:<22} {}", if h.passed { "PASS" } else { "FAIL" }, h.name, h.condition);
                    }
                    verdict(p.hypotheses_passed())
                }
                Err(e) => fail(e),
            }
        }
        Command::Run { config, out } => {
            let cfg = match load(&config, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let outcome = match run_scenario(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            print!("{}", format_report(&outcome));
            match emit_all(&outcome) {
                Ok(files) => files.iter().for_each(|f| println!("wrote {}", f.display())),
                Err(e) => return fail(e),
            }
            verdict(outcome.passed())
        }
        Command::Sweep { config, param, values, out } => {
            let cfg = match load(&config, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let results = match sweep(&cfg, &param, &values) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let mut all = true;
            for (value, res) in values.iter().zip(results) {
                match res.and_then(|o| emit_all(&o).map(|_| o)) {
                    Ok(o) => {
                        all &= o.passed();
                        let tail = o
                            .record
                            .as_ref()
                            .map(|r| format!("{} at t = {}", r.termination.label(), r.final_state.time))
                            .unwrap_or_else(|| "skipped".into());
                        let k = o.verdict.as_ref().map(|v| format!(", kappa_fit {:.4e}, T_comparison {:.4e}", v.kappa_fit, v.t_comparison)).unwrap_or_default();
                        println!("{param} = {value}: {} ({tail}{k})", if o.passed() { "PASS" } else { "FAIL" });
                    }
                    Err(e) => {
                        all = false;
                        println!("{param} = {value}: error: {e}");
                    }
                }
            }
            verdict(all)
        }
    }
}
