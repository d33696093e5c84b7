//! Run configuration files.
//!
//! A configuration is a TOML document with one table per subsystem. Every key
//! is optional and falls back to the documented default:
//!
//! ```toml
//! [clock]
//! controller_period_ns = 20        # 50 MHz
//! plant_period_ns = 1000000        # 1 ms
//!
//! [adc]
//! vref = 5.0
//! conversion_ticks = 5000
//! min_pulse_ns = 100
//! attached = true
//!
//! [sensor]
//! alpha = 27.0
//! beta = 0.42
//! d_min = 10.0
//! d_max = 80.0
//! table_points = 64
//! # table = "gp2d12.csv"           # overrides table_points
//! # noise_seed = 1                 # enables +-1/2 LSB uniform noise
//!
//! [pwm]
//! saturate_full = true
//!
//! [control]
//! d_stop = 15.0
//! d_far = 60.0
//! duty_max = 255
//! turn_on_stop = false
//!
//! [robot]
//! wheel_radius = 0.03
//! axle_length = 0.15
//! omega_max = 10.0
//! motor_tau = 0.1
//!
//! [scenario]
//! x = 0.0
//! y = 0.0
//! theta = 0.0
//! duration_s = 10.0
//! range_max_cm = 150.0
//!
//! [[obstacle]]
//! x = 1.0
//! y = 0.0
//! radius = 0.2
//!
//! [trace]
//! csv_decimation = 1
//! vcd_window = "0:100000"          # controller ticks, START:END
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adc::AdcConfig;
use crate::controller::ControlParams;
use crate::error::{Result, SimError};
use crate::kernel::ClockConfig;
use crate::plant::{Obstacle, Pose, RobotGeometry, Scenario};
use crate::pwm::{DutyCycle, PwmConfig};
use crate::sensor::{self, CalibrationTable, SensorModel};
use crate::system::SystemConfig;

/// Largest VCD window, in controller ticks.
pub const MAX_VCD_WINDOW_TICKS: u64 = 10_000_000;
pub const DEFAULT_VCD_WINDOW: VcdWindow = VcdWindow {
    start: 0,
    end: 100_000,
};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    clock: ClockSection,
    adc: AdcSection,
    sensor: SensorSection,
    pwm: PwmSection,
    control: ControlSection,
    robot: RobotSection,
    scenario: ScenarioSection,
    obstacle: Vec<ObstacleSection>,
    trace: TraceSection,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ClockSection {
    controller_period_ns: u64,
    plant_period_ns: u64,
}

impl Default for ClockSection {
    fn default() -> Self {
        let c = ClockConfig::default();
        ClockSection {
            controller_period_ns: c.controller_period_ns,
            plant_period_ns: c.plant_period_ns,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AdcSection {
    vref: f64,
    conversion_ticks: u32,
    min_pulse_ns: u64,
    attached: bool,
}

impl Default for AdcSection {
    fn default() -> Self {
        let a = AdcConfig::default();
        AdcSection {
            vref: a.vref,
            conversion_ticks: a.conversion_ticks,
            min_pulse_ns: a.min_pulse_ns,
            attached: true,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SensorSection {
    alpha: f64,
    beta: f64,
    d_min: f64,
    d_max: f64,
    table_points: usize,
    table: Option<PathBuf>,
    noise_seed: Option<u64>,
}

impl Default for SensorSection {
    fn default() -> Self {
        let m = SensorModel::default();
        SensorSection {
            alpha: m.alpha,
            beta: m.beta,
            d_min: m.d_min,
            d_max: m.d_max,
            table_points: 64,
            table: None,
            noise_seed: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PwmSection {
    saturate_full: bool,
}

impl Default for PwmSection {
    fn default() -> Self {
        PwmSection {
            saturate_full: PwmConfig::default().saturate_full,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ControlSection {
    d_stop: f64,
    d_far: f64,
    duty_max: i64,
    turn_on_stop: bool,
}

impl Default for ControlSection {
    fn default() -> Self {
        let c = ControlParams::default();
        ControlSection {
            d_stop: c.d_stop,
            d_far: c.d_far,
            duty_max: i64::from(c.duty_max.0),
            turn_on_stop: c.turn_on_stop,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RobotSection {
    wheel_radius: f64,
    axle_length: f64,
    omega_max: f64,
    motor_tau: f64,
}

impl Default for RobotSection {
    fn default() -> Self {
        let g = RobotGeometry::default();
        RobotSection {
            wheel_radius: g.wheel_radius,
            axle_length: g.axle_length,
            omega_max: g.omega_max,
            motor_tau: g.motor_tau,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioSection {
    x: f64,
    y: f64,
    theta: f64,
    duration_s: f64,
    range_max_cm: f64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
            duration_s: 10.0,
            range_max_cm: 150.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSection {
    x: f64,
    y: f64,
    radius: f64,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TraceSection {
    csv_decimation: u64,
    vcd_window: Option<String>,
}

impl Default for TraceSection {
    fn default() -> Self {
        TraceSection {
            csv_decimation: 1,
            vcd_window: None,
        }
    }
}

/// Half-open range of controller tick indices to dump as VCD.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VcdWindow {
    pub start: u64,
    pub end: u64,
}

impl VcdWindow {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if end < start {
            return Err(SimError::config("vcd_window", "END must not be before START"));
        }
        if end - start > MAX_VCD_WINDOW_TICKS {
            return Err(SimError::config(
                "vcd_window",
                format!("window of {} ticks exceeds {MAX_VCD_WINDOW_TICKS}", end - start),
            ));
        }
        Ok(VcdWindow { start, end })
    }

    pub fn contains(&self, tick: u64) -> bool {
        (self.start..self.end).contains(&tick)
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl std::str::FromStr for VcdWindow {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SimError::config("vcd_window", format!("expected START:END, got '{s}'"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        VcdWindow::new(start, end)
    }
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Option<PathBuf>,
    pub system: SystemConfig,
    pub table_path: Option<PathBuf>,
    pub csv_decimation: u64,
    pub vcd_window: VcdWindow,
    pub output_dir: PathBuf,
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(SimError::config(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut cfg = Self::parse(&text, base).map_err(|e| match e {
            SimError::Parse { message, .. } => SimError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    /// Parse configuration text; relative table paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| SimError::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        Self::from_file(file, base)
    }

    fn from_file(f: ConfigFile, base: &Path) -> Result<Self> {
        let clock = ClockConfig::new(f.clock.controller_period_ns, f.clock.plant_period_ns)?;
        let adc = AdcConfig {
            vref: f.adc.vref,
            conversion_ticks: f.adc.conversion_ticks,
            min_pulse_ns: f.adc.min_pulse_ns,
        };
        adc.validate()?;
        let sensor = SensorModel {
            alpha: f.sensor.alpha,
            beta: f.sensor.beta,
            d_min: f.sensor.d_min,
            d_max: f.sensor.d_max,
        };
        sensor.validate()?;

        let duty_max = u8::try_from(f.control.duty_max)
            .map_err(|_| SimError::config("duty_max", "must be in 0..=255"))?;
        let control = ControlParams {
            d_stop: f.control.d_stop,
            d_far: f.control.d_far,
            duty_max: DutyCycle(duty_max),
            turn_on_stop: f.control.turn_on_stop,
        };
        control.validate(sensor.d_max)?;

        let geometry = RobotGeometry {
            wheel_radius: f.robot.wheel_radius,
            axle_length: f.robot.axle_length,
            omega_max: f.robot.omega_max,
            motor_tau: f.robot.motor_tau,
        };
        geometry.validate()?;

        let scenario = Scenario {
            initial_pose: Pose::new(f.scenario.x, f.scenario.y, f.scenario.theta),
            obstacles: f
                .obstacle
                .iter()
                .map(|o| Obstacle {
                    x: o.x,
                    y: o.y,
                    radius: o.radius,
                })
                .collect(),
            duration_s: f.scenario.duration_s,
            control,
        };
        scenario.validate()?;
        let range_max_cm = positive("range_max_cm", f.scenario.range_max_cm)?;

        let table_path = f.sensor.table.map(|p| base.join(p));
        let table = match &table_path {
            Some(p) => CalibrationTable::load(p)?,
            None => {
                if f.sensor.table_points < 2 {
                    return Err(SimError::config("table_points", "must be at least 2"));
                }
                sensor::build_table(&sensor, &adc, f.sensor.table_points)?
            }
        };

        if f.trace.csv_decimation == 0 {
            return Err(SimError::config("csv_decimation", "must be at least 1"));
        }
        let vcd_window = match f.trace.vcd_window {
            Some(s) => s.parse()?,
            None => DEFAULT_VCD_WINDOW,
        };

        Ok(RunConfig {
            source: None,
            system: SystemConfig {
                clock,
                adc,
                adc_attached: f.adc.attached,
                sensor,
                table,
                noise_seed: f.sensor.noise_seed,
                pwm: PwmConfig {
                    saturate_full: f.pwm.saturate_full,
                },
                geometry,
                scenario,
                range_max_cm,
            },
            table_path,
            csv_decimation: f.trace.csv_decimation,
            vcd_window,
            output_dir: PathBuf::from("out"),
        })
    }

    /// Replace the calibration table with one loaded from `path`.
    pub fn with_table_file(mut self, path: &Path) -> Result<Self> {
        self.system.table = CalibrationTable::load(path)?;
        self.table_path = Some(path.to_path_buf());
        Ok(self)
    }
}
