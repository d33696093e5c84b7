//! 8-bit counter/comparator PWM.
//!
//! A free-running counter wraps every 256 ticks; the output is high while the
//! counter is below the compare value. Duty changes take effect at the next
//! comparison.

/// Compare threshold for the PWM counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DutyCycle(pub u8);

impl DutyCycle {
    pub const OFF: DutyCycle = DutyCycle(0);
    pub const MAX: DutyCycle = DutyCycle(255);

    pub fn value(self) -> u8 {
        self.0
    }
}

/// Counter ticks in one PWM period.
pub const PWM_PERIOD_TICKS: u32 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwmConfig {
    /// Treat duty 255 as always-on instead of 255/256.
    pub saturate_full: bool,
}

impl Default for PwmConfig {
    fn default() -> Self {
        PwmConfig {
            saturate_full: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PwmState {
    pub counter: u8,
    pub output: bool,
}

impl Default for PwmState {
    /// Reset state. The counter sits at 255 so the first step evaluates count 0.
    fn default() -> Self {
        PwmState {
            counter: u8::MAX,
            output: false,
        }
    }
}

/// Advance the counter by one tick and re-evaluate the comparator.
pub fn pwm_step(state: PwmState, duty: DutyCycle, cfg: PwmConfig) -> PwmState {
    let counter = state.counter.wrapping_add(1);
    let output = counter < duty.0 || (cfg.saturate_full && duty == DutyCycle::MAX);
    PwmState { counter, output }
}

/// Average high fraction for a given duty.
pub fn duty_fraction(duty: DutyCycle, cfg: PwmConfig) -> f64 {
    if cfg.saturate_full && duty == DutyCycle::MAX {
        1.0
    } else {
        f64::from(duty.0) / f64::from(PWM_PERIOD_TICKS)
    }
}
