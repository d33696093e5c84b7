//! Whole-run driver: simulate a configuration and write its trace files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, VcdWindow};
use crate::error::{Result, SimError};
use crate::kernel::{SimTime, MAX_SIM_TIME_NS};
use crate::plant::Pose;
use crate::system::{Bus, Simulation};
use crate::trace::{self, Level, TraceRow, VcdWriter};

pub const CSV_FILE: &str = "trace.csv";
pub const VCD_FILE: &str = "waveform.vcd";
pub const TRAJECTORY_FILE: &str = "trajectory.txt";
pub const DISTANCE_FILE: &str = "distance.txt";

/// Wires dumped to the VCD, in declaration order.
pub const VCD_SIGNALS: [(&str, u32); 16] = [
    ("pwm_out", 1),
    ("ena", 1),
    ("enb", 1),
    ("a1", 1),
    ("a2", 1),
    ("a3", 1),
    ("a4", 1),
    ("ena_gated", 1),
    ("enb_gated", 1),
    ("start", 1),
    ("ale", 1),
    ("oe", 1),
    ("eoc", 1),
    ("data", 8),
    ("adc_fault", 1),
    ("sevenseg", 7),
];

fn vcd_levels(bus: &Bus) -> [Level; 16] {
    let p = &bus.l293;
    let pwm = bus.pwm.output;
    [
        Level::Bit(pwm),
        Level::Bit(p.ena),
        Level::Bit(p.enb),
        Level::Bit(p.a1),
        Level::Bit(p.a2),
        Level::Bit(p.a3),
        Level::Bit(p.a4),
        Level::Bit(p.ena && pwm),
        Level::Bit(p.enb && pwm),
        Level::Bit(bus.adc_pins.start),
        Level::Bit(bus.adc_pins.ale),
        Level::Bit(bus.adc_pins.oe),
        Level::Bit(bus.adc_pins.eoc),
        Level::Bus(bus.adc_pins.data.value().map(u64::from)),
        Level::Bit(bus.adc_fault),
        Level::Bus(Some(u64::from(bus.segments.bits()))),
    ]
}

fn trace_row(time: SimTime, bus: &Bus, code: u8) -> TraceRow {
    TraceRow {
        time_s: time.seconds(),
        x_m: bus.pose.x,
        y_m: bus.pose.y,
        theta_rad: bus.pose.theta,
        omega_l: bus.omega_l,
        omega_r: bus.omega_r,
        distance_cm: bus.distance_cm,
        adc_code: code,
        command: bus.command.as_str(),
        duty: bus.duty.0,
        sevenseg: bus.segments.bits(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub ticks: u64,
    pub samples: u64,
    pub fault: bool,
    pub final_pose: Pose,
    pub final_distance_cm: f64,
    /// Smallest raycast distance seen at any plant step.
    pub min_distance_cm: f64,
}

impl RunOutcome {
    /// 0 on a clean run, 2 when the acquisition sequencer flagged a fault.
    pub fn exit_code(&self) -> i32 {
        if self.fault {
            2
        } else {
            0
        }
    }
}

/// In-memory results of one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<TraceRow>,
    pub vcd: Vec<u8>,
    pub outcome: RunOutcome,
}

pub fn duration_ns(duration_s: f64) -> Result<u64> {
    let ns = (duration_s * 1e9).round();
    if !(ns.is_finite() && ns >= 0.0 && ns <= MAX_SIM_TIME_NS as f64) {
        return Err(SimError::config("duration_s", "out of range"));
    }
    Ok(ns as u64)
}

/// Run the configured scenario, collecting CSV rows and the VCD window.
pub fn simulate(cfg: &RunConfig) -> Result<RunRecord> {
    simulate_with(cfg, |_, _, _| {})
}

/// As [`simulate`], also handing every tick to `observe`.
pub fn simulate_with<F>(cfg: &RunConfig, mut observe: F) -> Result<RunRecord>
where
    F: FnMut(u64, SimTime, &Bus),
{
    let mut sim = Simulation::new(&cfg.system)?;
    let t_end = SimTime::from_ns(duration_ns(cfg.system.scenario.duration_s)?);
    let window: VcdWindow = cfg.vcd_window;

    let mut vcd = VcdWriter::new(Vec::new());
    for (name, width) in VCD_SIGNALS {
        vcd.add_wire(name, width);
    }
    vcd.write_header("robot")?;

    let mut rows = Vec::new();
    let mut samples = 0u64;
    let mut min_distance = sim.bus().distance_cm;
    let ticks = sim.run_observed(t_end, |tick, start, bus| {
        if let Some(code) = bus.fresh_sample {
            if samples.is_multiple_of(cfg.csv_decimation) {
                rows.push(trace_row(start, bus, code));
            }
            samples += 1;
        }
        if window.contains(tick) {
            vcd.sample(start.ns(), &vcd_levels(bus))?;
        }
        min_distance = min_distance.min(bus.distance_cm);
        observe(tick, start, bus);
        Ok(())
    })?;

    let bus = sim.bus();
    let outcome = RunOutcome {
        ticks,
        samples,
        fault: bus.adc_fault,
        final_pose: bus.pose,
        final_distance_cm: bus.distance_cm,
        min_distance_cm: min_distance,
    };
    Ok(RunRecord {
        rows,
        vcd: vcd.finish()?,
        outcome,
    })
}

/// Paths of the files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub csv: PathBuf,
    pub vcd: PathBuf,
    pub trajectory: PathBuf,
    pub distance: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path) -> Self {
        RunFiles {
            csv: dir.join(CSV_FILE),
            vcd: dir.join(VCD_FILE),
            trajectory: dir.join(TRAJECTORY_FILE),
            distance: dir.join(DISTANCE_FILE),
        }
    }
}

/// Simulate and write `trace.csv`, `waveform.vcd` and the two-column plot
/// files into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<(RunOutcome, RunFiles)> {
    let record = simulate(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let files = RunFiles::in_dir(&cfg.output_dir);

    trace::write_csv(BufWriter::new(fs::File::create(&files.csv)?), &record.rows)?;
    fs::write(&files.vcd, &record.vcd)?;

    let mut xy = BufWriter::new(fs::File::create(&files.trajectory)?);
    writeln!(xy, "# x_m y_m")?;
    for r in &record.rows {
        writeln!(xy, "{:.9} {:.9}", r.x_m, r.y_m)?;
    }
    xy.flush()?;

    let mut dist = BufWriter::new(fs::File::create(&files.distance)?);
    writeln!(dist, "# time_s distance_cm")?;
    for r in &record.rows {
        writeln!(dist, "{:.9} {:.4}", r.time_s, r.distance_cm)?;
    }
    dist.flush()?;

    Ok((record.outcome, files))
}
