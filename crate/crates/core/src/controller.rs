//! Distance-to-speed control law.
//!
//! Inside the stop band the robot halts (or turns left when `turn_on_stop` is
//! set). Beyond `d_far` it runs at `duty_max`. In between the duty ramps
//! linearly with distance.

use crate::error::{Result, SimError};
use crate::l293::DriveCommand;
use crate::pwm::DutyCycle;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub d_stop: f64,
    pub d_far: f64,
    pub duty_max: DutyCycle,
    pub turn_on_stop: bool,
}

impl Default for ControlParams {
    fn default() -> Self {
        ControlParams {
            d_stop: 15.0,
            d_far: 60.0,
            duty_max: DutyCycle::MAX,
            turn_on_stop: false,
        }
    }
}

impl ControlParams {
    /// `sensor_d_max` is the upper end of the sensor's valid range.
    pub fn validate(&self, sensor_d_max: f64) -> Result<()> {
        if !(self.d_stop.is_finite() && self.d_stop > 0.0) {
            return Err(SimError::config("d_stop", "must be positive"));
        }
        if !(self.d_stop < self.d_far) {
            return Err(SimError::config(
                "d_stop",
                format!("{} must be less than d_far {}", self.d_stop, self.d_far),
            ));
        }
        if !(self.d_far <= sensor_d_max) {
            return Err(SimError::config(
                "d_far",
                format!("{} exceeds the sensor range limit {}", self.d_far, sensor_d_max),
            ));
        }
        Ok(())
    }
}

pub fn control_law(distance_cm: f64, params: &ControlParams) -> (DriveCommand, DutyCycle) {
    if distance_cm <= params.d_stop {
        return if params.turn_on_stop {
            (DriveCommand::Left, params.duty_max)
        } else {
            (DriveCommand::Stop, DutyCycle::OFF)
        };
    }
    if distance_cm >= params.d_far {
        return (DriveCommand::Forward, params.duty_max);
    }
    let frac = (distance_cm - params.d_stop) / (params.d_far - params.d_stop);
    let duty = (f64::from(params.duty_max.0) * frac).round();
    (DriveCommand::Forward, DutyCycle(duty as u8))
}
