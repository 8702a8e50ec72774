//! The three subcommands: run, figure, validate.

use std::path::{Path, PathBuf};

use qkd_sync::engine::{run_trials, sweep, SweepAxis};
use qkd_sync::scan::{validate_spacing, ScanError, ScanPlan};
use qkd_sync::{SystemConfig, TrialOutcome};

use crate::csvout::{write_run_csv, write_sweep_csv};
use crate::error::{from_engine, CliError};
use crate::experiment::ExperimentFile;

/// Dark-count axis shared by the four reproduction figures, Hz.
pub const FIGURE_DARK_RATES_HZ: [f64; 5] = [25.0, 50.0, 100.0, 200.0, 400.0];
/// Sample-scope axis shared by the four reproduction figures.
pub const FIGURE_SAMPLE_SCOPES: [u32; 7] = [32, 64, 128, 256, 512, 1024, 2048];

pub struct RunArgs {
    pub config_path: PathBuf,
    pub sets: Vec<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub no_timestamp: bool,
}

fn print_warnings(warnings: &[String]) {
    for warning in warnings {
        eprintln!("warning: {warning}");
    }
}

pub fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut file = ExperimentFile::load(&args.config_path)?;
    for assignment in &args.sets {
        file.apply_set(assignment)?;
    }
    if let Some(trials) = args.trials {
        file.run.trials = trials;
    }
    if let Some(seed) = args.seed {
        file.run.seed = seed;
    }
    let built = file.build()?;
    let derived = built.config.derive().map_err(from_engine)?;
    print_warnings(&derived.warnings);
    let out = args
        .out
        .or(built.out)
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    if built.axes.is_empty() {
        let estimates =
            run_trials(&built.config, built.trials, built.seed).map_err(from_engine)?;
        write_run_csv(&out, &estimates, args.no_timestamp)?;
        let correct = estimates.p_correct_estimate();
        println!(
            "{} trials, seed {}: p_correct = {:.6} (95% CI [{:.6}, {:.6}])",
            built.trials, built.seed, correct.p_hat, correct.ci_low, correct.ci_high
        );
        for outcome in TrialOutcome::ALL {
            println!("  {:<16} {}", outcome.label(), estimates.count(outcome));
        }
    } else {
        let points =
            sweep(&built.config, &built.axes, built.trials, built.seed).map_err(from_engine)?;
        write_sweep_csv(&out, &points, args.no_timestamp)?;
        println!(
            "{} sweep points x {} trials, seed {}",
            points.len(),
            built.trials,
            built.seed
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Sweep grid behind one reproduction figure: the fixed mean
/// photoelectron number, and which axis varies fastest.
fn figure_axes(figure_id: u8) -> Result<(f64, Vec<SweepAxis>), CliError> {
    let dark = SweepAxis::DarkRateHz(FIGURE_DARK_RATES_HZ.to_vec());
    let scopes = SweepAxis::SamplesPerWindow(FIGURE_SAMPLE_SCOPES.to_vec());
    match figure_id {
        // Detection probability versus dark rate, one series per scope.
        2 => Ok((0.01, vec![scopes, dark])),
        3 => Ok((0.5, vec![scopes, dark])),
        // Detection probability versus scope, one series per dark rate.
        4 => Ok((0.01, vec![dark, scopes])),
        5 => Ok((0.5, vec![dark, scopes])),
        other => Err(CliError::Usage(format!(
            "figure {other}: expected one of 2, 3, 4, 5"
        ))),
    }
}

pub fn cmd_figure(
    figure_id: u8,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
    no_timestamp: bool,
) -> Result<(), CliError> {
    let (mean_pe, axes) = figure_axes(figure_id)?;
    if trials == 0 {
        return Err(CliError::Usage("--trials: must be at least 1, got 0".into()));
    }
    let mut config = SystemConfig::reference();
    config.mean_pe_override = Some(mean_pe);
    let points = sweep(&config, &axes, trials, seed).map_err(from_engine)?;
    let out = out.unwrap_or_else(|| PathBuf::from(format!("figure{figure_id}.csv")));
    write_sweep_csv(&out, &points, no_timestamp)?;
    println!(
        "figure {figure_id}: {} points x {trials} trials at mean_pe {mean_pe}, seed {seed}",
        points.len()
    );
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cmd_validate(config_path: &Path, emit_config: bool) -> Result<(), CliError> {
    let file = ExperimentFile::load(config_path)?;
    let built = file.build()?;
    if emit_config {
        print!("{}", file.to_toml());
        return Ok(());
    }
    match built.config.derive() {
        Ok(derived) => {
            let plan = &derived.plan;
            let hours = plan.total_duration_ns() / 3.6e12;
            println!("channel.propagation_speed_km_s = {}", derived.propagation_speed_km_s);
            println!(
                "channel.min_repetition_period_ns = {}",
                derived.min_repetition_period_ns
            );
            println!("channel.transmittance = {}", derived.transmittance);
            println!("grid.window_width_ns = {}", built.config.grid.window_width_ns);
            println!("grid.window_count = {}", built.config.grid.window_count);
            println!("grid.frame_period_ns = {}", built.config.grid.frame_period_ns);
            println!("detector.mean_pe = {}", derived.mean_pe);
            println!("detector.dark_mean_pe = {}", derived.dark_mean_pe);
            println!(
                "detector.noise_click_probability = {}",
                derived.noise_click_probability
            );
            println!("signal.truth = {:?}", derived.model.truth);
            println!("scan.gates_per_frame = {}", plan.gates_per_frame);
            println!("scan.samples_per_window = {}", plan.samples_per_window);
            println!("scan.frame_count = {}", plan.frame_count);
            println!("scan.total_duration_ns = {}", plan.total_duration_ns());
            println!("scan.total_duration_hours = {hours:.4}");
            println!(
                "scan.min_gap_ns = {} (required {})",
                plan.min_gap_ns(),
                built.config.spad.required_gap_ns()
            );
            println!("spacing: ok");
            print_warnings(&derived.warnings);
            if !built.axes.is_empty() {
                println!("sweep.axes = {}", built.axes.len());
            }
            Ok(())
        }
        Err(err) => {
            if let qkd_sync::engine::EngineError::Scan(ScanError::InfeasibleSpacing {
                ..
            }) = &err
            {
                let plan = ScanPlan {
                    grid: built.config.grid.clone(),
                    gates_per_frame: built.config.gates_per_frame,
                    samples_per_window: built.config.samples_per_window,
                    frame_count: built.config.samples_per_window as u64
                        * built.config.grid.window_count
                        / built.config.gates_per_frame.max(1) as u64,
                };
                // Enumerating violations walks the whole schedule, so
                // list examples only when that is cheap.
                let examples = if plan.activation_count() <= 1_000_000 {
                    validate_spacing(&plan, &built.config.spad)
                } else {
                    Vec::new()
                };
                for violation in examples.iter().take(5) {
                    println!(
                        "spacing violation: frame {} gate {} -> frame {} gate {}: gap {} ns < required {} ns",
                        violation.earlier.frame,
                        violation.earlier.gate,
                        violation.later.frame,
                        violation.later.gate,
                        violation.gap_ns,
                        violation.required_ns
                    );
                }
            }
            Err(from_engine(err))
        }
    }
}
