use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use lfdq::chain::load_chain;
use lfdq::cohort::{cohort_chain, load_cohort, save_cohort};
use lfdq::config::load_synth_spec;
use lfdq::results::{
    classification_delta, load_results, save_classification, save_results, write_rates_csv, write_report,
    ClassificationFile, RATES_FILE,
};
use lfdq::world::load_world;
use lfdq::{runner, selftest, Error, Result};
use lfdq_core::assessment::{cluster_adapters, summarize, AdapterLabel};
use lfdq_core::kinematics::KinematicChain;
use lfdq_core::synthcohort::PlannerConfig;
use lfdq_core::taskworld::TaskWorld;

#[derive(Parser)]
#[command(name = "lfdq", version, about = "Assess demonstration quality by learned task performance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic demonstrator cohort.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn, reproduce and score every trial of a cohort.
    Eval {
        #[arg(long)]
        cohort: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label trials and demonstrators against a quality threshold.
    Classify {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = lfdq_core::assessment::DEFAULT_DELTA, value_parser = parse_delta)]
        delta: f64,
    },
    /// Write the rate table and the study summary.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the oracle checks on the reference setup.
    Selftest,
}

fn parse_delta(s: &str) -> std::result::Result<f64, String> {
    let delta: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if delta > 0.0 && delta < 1.0 {
        Ok(delta)
    } else {
        Err(format!("delta must lie in (0, 1), got {delta}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Synth { spec, out } => synth(&spec, &out),
        Command::Eval {
            cohort,
            world,
            params,
            out,
        } => eval(&cohort, &world, &params, &out),
        Command::Classify { results, delta } => classify(&results, delta),
        Command::Report { results, out } => report(&results, &out),
        Command::Selftest => run_selftest(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn synth(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = load_synth_spec(spec_path)?;
    let chain = match &spec.chain {
        Some(p) => load_chain(p)?,
        None => KinematicChain::reference(),
    };
    let world = match &spec.world {
        Some(p) => load_world(p)?,
        None => TaskWorld::reference(),
    };
    let started = Instant::now();
    let cohort = runner::generate_cohort(&chain, &world, &spec.cohort, &spec.fast, &spec.slow, &PlannerConfig::default())?;
    save_cohort(&cohort, &spec.cohort, &chain, &world, out)?;
    println!(
        "{} demonstrators, {} demonstrations ({} not fully trackable) in {:.1?}",
        cohort.demonstrators.len(),
        cohort.total_demos(),
        cohort.infeasible.len(),
        started.elapsed()
    );
    Ok(())
}

fn eval(cohort_dir: &Path, world_path: &Path, params_path: &Path, out: &Path) -> Result<()> {
    let world = load_world(world_path)?;
    let params = lfdq::config::load_params(params_path)?;
    let chain = cohort_chain(cohort_dir)?;
    let cohort = load_cohort(cohort_dir, &chain)?;
    let started = Instant::now();
    let records = runner::evaluate_cohort(&chain, &world, &cohort, &params)?;
    save_results(&records, params.delta, out)?;
    write_rates_csv(&records, params.delta, &out.join(RATES_FILE))?;
    println!("{} trials evaluated in {:.1?}", records.len(), started.elapsed());
    Ok(())
}

fn classify(results: &Path, delta: f64) -> Result<()> {
    let (records, _) = load_results(results)?;
    let adapters = cluster_adapters(&records, delta)?;
    let file = ClassificationFile::new(&records, &adapters, delta);
    save_classification(&file, results)?;
    for (name, label) in &file.adapters {
        println!("{name} {label}");
    }
    let fast = adapters.values().filter(|l| **l == AdapterLabel::Fast).count();
    println!("fast {fast}, slow {}", adapters.len() - fast);
    Ok(())
}

fn report(results: &Path, out: &Path) -> Result<()> {
    let (records, eval_delta) = load_results(results)?;
    let delta = classification_delta(results)?.unwrap_or(eval_delta);
    let report = summarize(records, delta)?;
    write_report(&report, out)?;
    println!(
        "rho {:.4} over {} trials, {} fast and {} slow adapters",
        report.rho,
        report.records.len(),
        report.count(AdapterLabel::Fast),
        report.count(AdapterLabel::Slow)
    );
    Ok(())
}

fn run_selftest() -> Result<()> {
    let checks = selftest::run(&KinematicChain::reference(), &TaskWorld::reference());
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Error::Failed(format!("{failed} of {} checks failed", checks.len())))
    }
}

