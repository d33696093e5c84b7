use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robosim_core::adc::AdcConfig;
use robosim_core::config::{RunConfig, VcdWindow};
use robosim_core::run;
use robosim_core::sensor::{self, SensorModel};
use robosim_core::SimError;

#[derive(Parser)]
#[command(name = "robosim", version, about = "FPGA mobile-robot controller co-simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trace.csv, waveform.vcd and plot files.
    Run {
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Controller tick range to dump as VCD, START:END.
        #[arg(long, value_name = "START:END")]
        vcd_window: Option<String>,
        /// Calibration table (code,distance_cm) replacing the generated one.
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
    },
    /// Build a calibration table from the sensor model.
    Calibrate {
        /// Sensor model parameters ALPHA,BETA.
        #[arg(long, value_name = "ALPHA,BETA")]
        model: String,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_command(
    config: PathBuf,
    out: PathBuf,
    vcd_window: Option<String>,
    table: Option<PathBuf>,
) -> Result<i32, SimError> {
    let mut cfg = RunConfig::load(&config)?;
    if let Some(path) = table {
        cfg = cfg.with_table_file(&path)?;
    }
    if let Some(w) = vcd_window {
        cfg.vcd_window = w.parse::<VcdWindow>()?;
    }
    cfg.output_dir = out;
    let (outcome, files) = run::run(&cfg)?;
    println!(
        "ticks={} samples={} final_pose=({:.4}, {:.4}, {:.4}) distance_cm={:.2} fault={}",
        outcome.ticks,
        outcome.samples,
        outcome.final_pose.x,
        outcome.final_pose.y,
        outcome.final_pose.theta,
        outcome.final_distance_cm,
        outcome.fault
    );
    println!("wrote {} and {}", files.csv.display(), files.vcd.display());
    if outcome.fault {
        eprintln!("error: ADC acquisition timed out waiting for EOC");
    }
    Ok(outcome.exit_code())
}

fn parse_model(s: &str) -> Result<SensorModel, SimError> {
    let bad = || SimError::config("model", format!("expected ALPHA,BETA, got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok(SensorModel {
        alpha: a.trim().parse().map_err(|_| bad())?,
        beta: b.trim().parse().map_err(|_| bad())?,
        ..SensorModel::default()
    })
}

fn calibrate_command(model: String, points: usize, out: PathBuf) -> Result<i32, SimError> {
    let model = parse_model(&model)?;
    let table = sensor::build_table(&model, &AdcConfig::default(), points)?;
    table.save(&out)?;
    println!("wrote {} entries to {}", table.len(), out.display());
    Ok(0)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would read as an ADC fault
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            out,
            vcd_window,
            table,
        } => run_command(config, out, vcd_window, table),
        Command::Calibrate { model, points, out } => calibrate_command(model, points, out),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
