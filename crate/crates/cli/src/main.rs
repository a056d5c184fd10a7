//! spikegrid CLI: parse scenario files, dispatch runs, export CSV traces
//! and plot-ready data series.
//!
//! Exit codes: 0 success, 1 scenario/validation error, 2 runtime failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spikegrid::engine::{compare_baseline, run, Scenario, Trace};
use spikegrid::error::Error;
use spikegrid::grid::{build_admittance, grid_derivatives, steady_state_solve};
use spikegrid::scenario::parse_scenario;
use spikegrid::trace_io::{emit_plot_data, export_csv};

#[derive(Parser)]
#[command(
    name = "spikegrid",
    version,
    about = "Droop-controlled DC microgrid co-simulator with spiking-network coordination"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output and warnings.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and export trace.csv plus plot series.
    Run(RunArgs),
    /// Solve and print the static steady-state operating point.
    SteadyState(ScenarioArg),
    /// Run the scenario twice (static and adaptive gains) and compare.
    Compare(RunArgs),
    /// Parse a scenario file and report whether it is valid.
    Validate(ScenarioArg),
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario document to load.
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario document to load.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the integration step in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the run duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Force droop adaptation off.
    #[arg(long)]
    no_adapt: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args, cli.quiet),
        Command::SteadyState(args) => cmd_steady_state(args),
        Command::Compare(args) => cmd_compare(args, cli.quiet),
        Command::Validate(args) => cmd_validate(args, cli.quiet),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_scenario_error() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn load_scenario(path: &Path, args: Option<&RunArgs>) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Scenario(format!("cannot read {}: {e}", path.display())))?;
    let mut scenario = parse_scenario(&text)?;
    if let Some(args) = args {
        if let Some(dt) = args.dt {
            scenario.dt = dt;
        }
        if let Some(duration) = args.duration {
            scenario.duration = duration;
        }
        if args.no_adapt {
            scenario.adaptation_enabled = false;
        }
        scenario.validate()?; // overrides must stay physically valid
    }
    Ok(scenario)
}

fn report_warnings(trace: &Trace, quiet: bool) {
    if quiet {
        return;
    }
    for warning in &trace.warnings {
        eprintln!("warning: {warning}");
    }
}

fn cmd_run(args: &RunArgs, quiet: bool) -> Result<(), Error> {
    let scenario = load_scenario(&args.scenario, Some(args))?;
    let trace = run(&scenario)?;
    report_warnings(&trace, quiet);
    fs::create_dir_all(&args.out)
        .map_err(|e| Error::Io { path: args.out.display().to_string(), source: e })?;
    let csv_path = args.out.join("trace.csv");
    export_csv(&trace, &csv_path)?;
    emit_plot_data(&trace, &args.out.join("plot"))?;
    if !quiet {
        let last = trace.records.last().expect("non-empty trace");
        println!(
            "wrote {} ({} windows); final avg_v_err = {:.4} V, share_err = {:.4} pu",
            csv_path.display(),
            trace.records.len(),
            last.avg_voltage_error,
            last.sharing_error
        );
    }
    Ok(())
}

fn cmd_steady_state(args: &ScenarioArg) -> Result<(), Error> {
    let scenario = load_scenario(&args.scenario, None)?;
    let y = build_admittance(&scenario.topology)?;
    let gains = spikegrid::droop::DroopGainVector::new(
        scenario.initial_gains.clone(),
        scenario.gain_bounds,
    )?;
    let n = scenario.topology.len();
    let state = steady_state_solve(
        &scenario.topology,
        &y,
        &gains,
        scenario.objectives.v_ref,
        &vec![true; n],
    )?;
    let derivatives = grid_derivatives(&state, &gains, &scenario.topology, &y, scenario.objectives.v_ref);
    println!("node  voltage_V        current_A        kcl_residual_A");
    for (k, (dv, node)) in derivatives.iter().zip(scenario.topology.nodes()).enumerate() {
        println!(
            "{:<5} {:<16} {:<16} {:e}",
            k + 1,
            state.voltages[k],
            state.source_currents[k],
            dv * node.capacitance
        );
    }
    let total: f64 = state.source_currents.iter().sum();
    println!("total source current: {total} A");
    Ok(())
}

fn cmd_compare(args: &RunArgs, quiet: bool) -> Result<(), Error> {
    let scenario = load_scenario(&args.scenario, Some(args))?;
    let comparison = compare_baseline(&scenario)?;
    report_warnings(&comparison.adaptive_trace, quiet);
    fs::create_dir_all(&args.out)
        .map_err(|e| Error::Io { path: args.out.display().to_string(), source: e })?;
    export_csv(&comparison.static_trace, &args.out.join("static.csv"))?;
    export_csv(&comparison.adaptive_trace, &args.out.join("adaptive.csv"))?;

    let final_gains: Vec<String> = comparison
        .adaptive_trace
        .records
        .last()
        .map(|r| r.nodes.iter().map(|nw| nw.droop_gain.to_string()).collect())
        .unwrap_or_default();
    let mut summary = String::new();
    summary.push_str(&format!(
        "static_final_avg_v_err {}\nadaptive_final_avg_v_err {}\n",
        comparison.static_final.avg_voltage_error, comparison.adaptive_final.avg_voltage_error
    ));
    summary.push_str(&format!(
        "static_final_share_err {}\nadaptive_final_share_err {}\n",
        comparison.static_final.sharing_error, comparison.adaptive_final.sharing_error
    ));
    for (k, gain) in final_gains.iter().enumerate() {
        summary.push_str(&format!("adaptive_final_rd_{} {gain}\n", k + 1));
    }
    let summary_path = args.out.join("summary.txt");
    fs::write(&summary_path, &summary)
        .map_err(|e| Error::Io { path: summary_path.display().to_string(), source: e })?;
    if !quiet {
        print!("{summary}");
    }
    Ok(())
}

fn cmd_validate(args: &ScenarioArg, quiet: bool) -> Result<(), Error> {
    let scenario = load_scenario(&args.scenario, None)?;
    if !quiet {
        println!(
            "ok: {} ({} nodes, {} lines, {} events, {} windows)",
            args.scenario.display(),
            scenario.topology.len(),
            scenario.topology.lines().len(),
            scenario.timeline.len(),
            scenario.window_count()
        );
    }
    Ok(())
}
