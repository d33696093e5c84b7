//! L293D quadruple half-H driver.
//!
//! Channel A (1A/2A, enable ENA) drives the left wheel, channel B (3A/4A,
//! enable ENB) the right wheel. The PWM output gates both enables.
//!
//! | command | ENA ENB 1A 2A 3A 4A |
//! |---------|---------------------|
//! | Forward | 1 1 1 0 1 0         |
//! | Reverse | 1 1 0 1 0 1         |
//! | Left    | 0 1 0 0 1 0         |
//! | Right   | 1 0 1 0 0 0         |
//! | Stop    | 0 0 0 0 0 0         |

use std::fmt;
use std::str::FromStr;

/// The six logic inputs, in ENA ENB 1A 2A 3A 4A order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct L293Pins {
    pub ena: bool,
    pub enb: bool,
    pub a1: bool,
    pub a2: bool,
    pub a3: bool,
    pub a4: bool,
}

impl L293Pins {
    /// Build from a 6-bit value, MSB = ENA.
    pub fn from_bits(bits: u8) -> Self {
        let bit = |n: u8| bits & (1 << n) != 0;
        L293Pins {
            ena: bit(5),
            enb: bit(4),
            a1: bit(3),
            a2: bit(2),
            a3: bit(1),
            a4: bit(0),
        }
    }

    pub fn to_bits(self) -> u8 {
        [self.ena, self.enb, self.a1, self.a2, self.a3, self.a4]
            .iter()
            .fold(0, |acc, &b| (acc << 1) | u8::from(b))
    }
}

impl fmt::Display for L293Pins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:06b}", self.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DriveCommand {
    Forward,
    Reverse,
    Left,
    Right,
    #[default]
    Stop,
}

impl DriveCommand {
    pub const ALL: [DriveCommand; 5] = [
        DriveCommand::Forward,
        DriveCommand::Reverse,
        DriveCommand::Left,
        DriveCommand::Right,
        DriveCommand::Stop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DriveCommand::Forward => "Forward",
            DriveCommand::Reverse => "Reverse",
            DriveCommand::Left => "Left",
            DriveCommand::Right => "Right",
            DriveCommand::Stop => "Stop",
        }
    }
}

impl fmt::Display for DriveCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriveCommand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DriveCommand::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown drive command '{s}'"))
    }
}

/// Drive level of one wheel: rotation sign, or 0 when undriven.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum Drive {
    Reverse = -1,
    #[default]
    Off = 0,
    Forward = 1,
}

impl Drive {
    pub fn signum(self) -> i8 {
        self as i8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct WheelDrive {
    pub left: Drive,
    pub right: Drive,
}

impl WheelDrive {
    pub fn signs(self) -> (i8, i8) {
        (self.left.signum(), self.right.signum())
    }
}

pub fn encode(cmd: DriveCommand) -> L293Pins {
    let bits = match cmd {
        DriveCommand::Forward => 0b111010,
        DriveCommand::Reverse => 0b110101,
        DriveCommand::Left => 0b010010,
        DriveCommand::Right => 0b101000,
        DriveCommand::Stop => 0b000000,
    };
    L293Pins::from_bits(bits)
}

fn half_bridge(enable: bool, high: bool, low: bool) -> Drive {
    match (enable, high, low) {
        (false, _, _) => Drive::Off,
        (true, true, false) => Drive::Forward,
        (true, false, true) => Drive::Reverse,
        // equal inputs coast; the plant has no braking term
        (true, _, _) => Drive::Off,
    }
}

pub fn decode(pins: L293Pins, pwm_level: bool) -> WheelDrive {
    WheelDrive {
        left: half_bridge(pins.ena && pwm_level, pins.a1, pins.a2),
        right: half_bridge(pins.enb && pwm_level, pins.a3, pins.a4),
    }
}
