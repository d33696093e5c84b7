//! Closed-loop wiring: sensor, converter, acquisition/control, PWM, H-bridge,
//! display and plant, stepped in that order on one shared bus.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adc::{self, AcquireFsm, AdcConfig, AdcPins, AdcState, CHANNELS};
use crate::controller::control_law;
use crate::error::Result;
use crate::kernel::{ClockConfig, Component, Kernel, SimTime};
use crate::l293::{self, Drive, DriveCommand, L293Pins, WheelDrive};
use crate::plant::{self, Obstacle, Pose, RobotGeometry, Scenario};
use crate::pwm::{self, DutyCycle, PwmConfig, PwmState};
use crate::sensor::{self, CalibrationTable, SensorModel, SensorNoise};
use crate::sevenseg::{self, SegmentPattern};

/// Step order of the closed-loop components.
pub mod order {
    pub const SENSOR: i32 = 10;
    pub const ADC: i32 = 20;
    pub const CONTROLLER: i32 = 30;
    pub const PWM: i32 = 40;
    pub const MOTOR_DRIVER: i32 = 50;
    pub const DISPLAY: i32 = 60;
    pub const PLANT: i32 = 70;
}

/// Sensor channel on the converter.
pub const SENSOR_CHANNEL: u8 = 0;

/// Every signal in the system, as seen at the end of the current tick.
#[derive(Debug, Clone)]
pub struct Bus {
    pub v_in: [f64; CHANNELS],
    pub adc_state: AdcState,
    pub adc_pins: AdcPins,

    /// Set only on the tick a sample is latched.
    pub fresh_sample: Option<u8>,
    pub last_sample: Option<u8>,
    pub measured_cm: Option<f64>,
    pub command: DriveCommand,
    pub duty: DutyCycle,
    pub adc_fault: bool,

    pub pwm: PwmState,
    pub l293: L293Pins,
    pub wheels: WheelDrive,

    pub digit: u8,
    pub segments: SegmentPattern,

    pub pose: Pose,
    pub omega_l: f64,
    pub omega_r: f64,
    /// Raycast distance from the last plant step.
    pub distance_cm: f64,
    pub plant_steps: u64,
}

impl Bus {
    fn new(pose: Pose, distance_cm: f64) -> Self {
        Bus {
            v_in: [0.0; CHANNELS],
            adc_state: AdcState::default(),
            adc_pins: AdcPins::default(),
            fresh_sample: None,
            last_sample: None,
            measured_cm: None,
            command: DriveCommand::Stop,
            duty: DutyCycle::OFF,
            adc_fault: false,
            pwm: PwmState::default(),
            l293: L293Pins::default(),
            wheels: WheelDrive::default(),
            digit: 0,
            segments: sevenseg::encode_bcd(0),
            pose,
            omega_l: 0.0,
            omega_r: 0.0,
            distance_cm,
            plant_steps: 0,
        }
    }
}

struct SensorFrontEnd {
    model: SensorModel,
    noise: Option<SensorNoise<ChaCha8Rng>>,
}

impl Component<Bus> for SensorFrontEnd {
    fn name(&self) -> &str {
        "sensor"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        let v = sensor::voltage_of_distance(bus.distance_cm, &self.model);
        bus.v_in[usize::from(SENSOR_CHANNEL)] = match &mut self.noise {
            Some(noise) => noise.apply(v),
            None => v,
        };
    }
}

struct AdcChip {
    cfg: AdcConfig,
    period_ns: u64,
}

impl Component<Bus> for AdcChip {
    fn name(&self) -> &str {
        "adc0809"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        let (state, pins) =
            adc::adc_step(&bus.adc_state, &bus.adc_pins, &bus.v_in, &self.cfg, self.period_ns);
        bus.adc_state = state;
        bus.adc_pins = pins;
    }
}

/// Acquisition sequencer plus the control law, updated only on fresh samples.
struct ControlUnit {
    fsm: AcquireFsm,
    table: CalibrationTable,
    params: crate::controller::ControlParams,
}

impl Component<Bus> for ControlUnit {
    fn name(&self) -> &str {
        "controller"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        let out = self.fsm.step(bus.adc_pins.eoc, bus.adc_pins.data);
        out.pins.apply(&mut bus.adc_pins);
        // the data bus buffer follows OE combinationally
        bus.adc_pins.data = adc::bus_data(&bus.adc_state, bus.adc_pins.oe);
        bus.adc_fault = self.fsm.fault();
        bus.fresh_sample = out.published;
        if let Some(code) = out.published {
            let distance = sensor::distance_of_code(code, &self.table);
            let (command, duty) = control_law(distance, &self.params);
            bus.last_sample = Some(code);
            bus.measured_cm = Some(distance);
            bus.command = command;
            bus.duty = duty;
        }
    }
}

struct PwmGenerator {
    cfg: PwmConfig,
}

impl Component<Bus> for PwmGenerator {
    fn name(&self) -> &str {
        "pwm"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        bus.pwm = pwm::pwm_step(bus.pwm, bus.duty, self.cfg);
    }
}

struct MotorDriver;

impl Component<Bus> for MotorDriver {
    fn name(&self) -> &str {
        "l293d"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        bus.l293 = l293::encode(bus.command);
        bus.wheels = l293::decode(bus.l293, bus.pwm.output);
    }
}

struct Display;

impl Component<Bus> for Display {
    fn name(&self) -> &str {
        "sevenseg"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        bus.digit = sevenseg::display_digit(bus.measured_cm.unwrap_or(0.0));
        bus.segments = sevenseg::encode_bcd(bus.digit);
    }
}

/// Averages the decoded wheel drive over each plant period, then advances
/// the motors and the pose.
struct Plant {
    geom: RobotGeometry,
    obstacles: Vec<Obstacle>,
    range_max_cm: f64,
    ticks_per_step: u64,
    dt: f64,
    count: u64,
    sum_left: i64,
    sum_right: i64,
}

impl Plant {
    fn averaged(&self, sum: i64) -> (Drive, f64) {
        let drive = match sum.signum() {
            1 => Drive::Forward,
            -1 => Drive::Reverse,
            _ => Drive::Off,
        };
        (drive, sum.unsigned_abs() as f64 / self.ticks_per_step as f64)
    }
}

impl Component<Bus> for Plant {
    fn name(&self) -> &str {
        "plant"
    }

    fn step(&mut self, _now: SimTime, bus: &mut Bus) {
        let (l, r) = bus.wheels.signs();
        self.sum_left += i64::from(l);
        self.sum_right += i64::from(r);
        self.count += 1;
        if self.count < self.ticks_per_step {
            return;
        }
        let (dl, fl) = self.averaged(self.sum_left);
        let (dr, fr) = self.averaged(self.sum_right);
        bus.omega_l = plant::wheel_speed_step(bus.omega_l, dl, fl, &self.geom, self.dt);
        bus.omega_r = plant::wheel_speed_step(bus.omega_r, dr, fr, &self.geom, self.dt);
        bus.pose = plant::pose_step(bus.pose, bus.omega_l, bus.omega_r, &self.geom, self.dt);
        bus.distance_cm = plant::raycast_distance(&bus.pose, &self.obstacles, self.range_max_cm);
        bus.plant_steps += 1;
        self.count = 0;
        self.sum_left = 0;
        self.sum_right = 0;
    }
}

/// Everything needed to assemble one closed-loop run.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub clock: ClockConfig,
    pub adc: AdcConfig,
    /// When false the converter is left unconnected and no EOC ever arrives.
    pub adc_attached: bool,
    pub sensor: SensorModel,
    pub table: CalibrationTable,
    pub noise_seed: Option<u64>,
    pub pwm: PwmConfig,
    pub geometry: RobotGeometry,
    pub scenario: Scenario,
    pub range_max_cm: f64,
}

pub struct Simulation {
    kernel: Kernel<Bus>,
}

impl Simulation {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.clock.validate()?;
        cfg.adc.validate()?;
        cfg.sensor.validate()?;
        cfg.geometry.validate()?;
        cfg.scenario.validate()?;
        cfg.scenario.control.validate(cfg.sensor.d_max)?;

        let pose = cfg.scenario.initial_pose;
        let distance = plant::raycast_distance(&pose, &cfg.scenario.obstacles, cfg.range_max_cm);
        let mut kernel = Kernel::new(cfg.clock, Bus::new(pose, distance))?;
        let period = cfg.clock.controller_period_ns;

        kernel.register_component(
            SensorFrontEnd {
                model: cfg.sensor,
                noise: cfg
                    .noise_seed
                    .map(|seed| SensorNoise::half_lsb(ChaCha8Rng::seed_from_u64(seed), &cfg.adc)),
            },
            order::SENSOR,
        )?;
        if cfg.adc_attached {
            kernel.register_component(
                AdcChip {
                    cfg: cfg.adc,
                    period_ns: period,
                },
                order::ADC,
            )?;
        }
        kernel.register_component(
            ControlUnit {
                fsm: AcquireFsm::new(SENSOR_CHANNEL, &cfg.adc, period),
                table: cfg.table.clone(),
                params: cfg.scenario.control,
            },
            order::CONTROLLER,
        )?;
        kernel.register_component(PwmGenerator { cfg: cfg.pwm }, order::PWM)?;
        kernel.register_component(MotorDriver, order::MOTOR_DRIVER)?;
        kernel.register_component(Display, order::DISPLAY)?;
        kernel.register_component(
            Plant {
                geom: cfg.geometry,
                obstacles: cfg.scenario.obstacles.clone(),
                range_max_cm: cfg.range_max_cm,
                ticks_per_step: cfg.clock.ticks_per_plant_step(),
                dt: cfg.clock.plant_dt_s(),
                count: 0,
                sum_left: 0,
                sum_right: 0,
            },
            order::PLANT,
        )?;
        Ok(Simulation { kernel })
    }

    pub fn kernel(&self) -> &Kernel<Bus> {
        &self.kernel
    }

    pub fn bus(&self) -> &Bus {
        self.kernel.bus()
    }

    pub fn now(&self) -> SimTime {
        self.kernel.now()
    }

    pub fn run_until(&mut self, t_end: SimTime) -> Result<u64> {
        self.kernel.run_until(t_end)
    }

    /// Like [`Simulation::run_until`], calling `observe` after every tick with
    /// the tick index, the tick's start time and the settled bus.
    pub fn run_observed<F>(&mut self, t_end: SimTime, mut observe: F) -> Result<u64>
    where
        F: FnMut(u64, SimTime, &Bus) -> Result<()>,
    {
        let period = self.kernel.clock().controller_period_ns;
        let n = t_end.ns().saturating_sub(self.kernel.now().ns()) / period;
        if t_end < self.kernel.now() {
            // delegate the argument error
            return self.kernel.run_until(t_end);
        }
        for _ in 0..n {
            let tick = self.kernel.ticks();
            let start = self.kernel.now();
            self.kernel.tick()?;
            observe(tick, start, self.kernel.bus())?;
        }
        Ok(n)
    }
}
