//! ADC0809 converter model and the controller-side acquisition sequencer.
//!
//! The converter latches the channel address once ALE has been high for at
//! least `min_pulse_ns`, starts converting once START has been high for at
//! least `min_pulse_ns` with an address latched, raises EOC for one tick when
//! the conversion finishes, and drives the data bus only while OE is high and a
//! result is available. Pulses shorter than the minimum are ignored.

use crate::error::{Result, SimError};

pub const RESOLUTION_BITS: u32 = 8;
pub const CHANNELS: usize = 8;
const CODES: f64 = (1u32 << RESOLUTION_BITS) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub vref: f64,
    /// Controller ticks from conversion start to EOC.
    pub conversion_ticks: u32,
    pub min_pulse_ns: u64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig {
            vref: 5.0,
            conversion_ticks: 5000,
            min_pulse_ns: 100,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.vref.is_finite() && self.vref > 0.0) {
            return Err(SimError::config("vref", "must be a positive number"));
        }
        if self.conversion_ticks == 0 {
            return Err(SimError::config("conversion_ticks", "must be at least 1"));
        }
        Ok(())
    }

    /// One LSB in volts.
    pub fn lsb(&self) -> f64 {
        self.vref / CODES
    }
}

/// Ideal staircase transfer function with top-code clamp.
pub fn quantize(v: f64, cfg: &AdcConfig) -> Result<u8> {
    if !v.is_finite() {
        return Err(SimError::NonFinite(v));
    }
    let clamped = v.clamp(0.0, cfg.vref);
    let code = (clamped / cfg.vref * CODES).floor();
    Ok(code.min(CODES - 1.0) as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdcPhase {
    #[default]
    Idle,
    Latched,
    Converting,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdcState {
    pub phase: AdcPhase,
    pub channel: u8,
    /// Conversion result; meaningful only in `Done`.
    pub result: u8,
    /// Input code held at conversion start.
    pub held: u8,
    pub ticks_remaining: u32,
    pub start_high_ns: u64,
    pub ale_high_ns: u64,
    pub oe_prev: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataBus {
    #[default]
    HighZ,
    Driven(u8),
}

impl DataBus {
    pub fn value(self) -> Option<u8> {
        match self {
            DataBus::HighZ => None,
            DataBus::Driven(v) => Some(v),
        }
    }
}

/// Converter pins. `start`, `ale`, `oe` and `addr` are inputs driven by the
/// controller; `eoc` and `data` are outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AdcPins {
    pub start: bool,
    pub ale: bool,
    pub oe: bool,
    pub eoc: bool,
    pub addr: u8,
    pub data: DataBus,
}

/// Tri-state output buffer: the bus is driven only in `Done` with OE high.
pub fn bus_data(state: &AdcState, oe: bool) -> DataBus {
    if oe && state.phase == AdcPhase::Done {
        DataBus::Driven(state.result)
    } else {
        DataBus::HighZ
    }
}

fn accumulate(high: bool, acc: u64, period_ns: u64) -> u64 {
    if high {
        acc.saturating_add(period_ns)
    } else {
        0
    }
}

/// One controller tick of the converter.
pub fn adc_step(
    state: &AdcState,
    pins: &AdcPins,
    v_in: &[f64; CHANNELS],
    cfg: &AdcConfig,
    period_ns: u64,
) -> (AdcState, AdcPins) {
    let mut s = *state;
    let mut out = *pins;
    out.eoc = false;

    s.ale_high_ns = accumulate(pins.ale, s.ale_high_ns, period_ns);
    s.start_high_ns = accumulate(pins.start, s.start_high_ns, period_ns);

    match s.phase {
        AdcPhase::Converting => {
            s.ticks_remaining -= 1;
            if s.ticks_remaining == 0 {
                s.phase = AdcPhase::Done;
                s.result = s.held;
                out.eoc = true;
            }
        }
        AdcPhase::Done => {
            // a read completes on OE falling; a new ALE/START abandons the result
            if (s.oe_prev && !pins.oe) || pins.ale || pins.start {
                s.phase = AdcPhase::Idle;
            }
        }
        AdcPhase::Idle | AdcPhase::Latched => {}
    }

    if s.phase == AdcPhase::Idle && s.ale_high_ns >= cfg.min_pulse_ns {
        s.channel = pins.addr & (CHANNELS as u8 - 1);
        s.phase = AdcPhase::Latched;
    }
    if s.phase == AdcPhase::Latched && s.start_high_ns >= cfg.min_pulse_ns {
        // non-finite inputs read as ground
        s.held = quantize(v_in[usize::from(s.channel)], cfg).unwrap_or(0);
        s.ticks_remaining = cfg.conversion_ticks;
        s.phase = AdcPhase::Converting;
    }

    s.oe_prev = pins.oe;
    out.data = bus_data(&s, pins.oe);
    (s, out)
}

/// Controller-driven converter inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PinCommand {
    pub start: bool,
    pub ale: bool,
    pub oe: bool,
    pub addr: u8,
}

impl PinCommand {
    pub fn apply(self, pins: &mut AdcPins) {
        pins.start = self.start;
        pins.ale = self.ale;
        pins.oe = self.oe;
        pins.addr = self.addr;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcquirePhase {
    Assert { remaining: u32 },
    WaitEoc { waited: u64 },
    Read,
    Latch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AcquireOutput {
    pub pins: PinCommand,
    /// Fresh sample latched this tick.
    pub published: Option<u8>,
}

/// Controller-side sequencer: pulse ALE+START, wait for EOC, pulse OE and
/// latch the data bus, then start over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcquireFsm {
    phase: AcquirePhase,
    channel: u8,
    hold_ticks: u32,
    timeout_ticks: u64,
    last_sample: Option<u8>,
    fault: bool,
}

impl AcquireFsm {
    pub fn new(channel: u8, cfg: &AdcConfig, controller_period_ns: u64) -> Self {
        let hold_ticks = cfg.min_pulse_ns.div_ceil(controller_period_ns).max(1) as u32;
        AcquireFsm {
            phase: AcquirePhase::Assert {
                remaining: hold_ticks,
            },
            channel: channel & (CHANNELS as u8 - 1),
            hold_ticks,
            timeout_ticks: 10 * u64::from(cfg.conversion_ticks),
            last_sample: None,
            fault: false,
        }
    }

    pub fn phase(&self) -> AcquirePhase {
        self.phase
    }

    /// Ticks ALE/START are held high per cycle.
    pub fn hold_ticks(&self) -> u32 {
        self.hold_ticks
    }

    pub fn last_sample(&self) -> Option<u8> {
        self.last_sample
    }

    /// Sticky: set once any cycle timed out waiting for EOC.
    pub fn fault(&self) -> bool {
        self.fault
    }

    pub fn step(&mut self, eoc: bool, data: DataBus) -> AcquireOutput {
        let mut out = AcquireOutput {
            pins: PinCommand {
                addr: self.channel,
                ..PinCommand::default()
            },
            published: None,
        };
        self.phase = match self.phase {
            AcquirePhase::Assert { remaining } => {
                out.pins.ale = true;
                out.pins.start = true;
                if remaining <= 1 {
                    AcquirePhase::WaitEoc { waited: 0 }
                } else {
                    AcquirePhase::Assert {
                        remaining: remaining - 1,
                    }
                }
            }
            AcquirePhase::WaitEoc { waited } => {
                if eoc {
                    AcquirePhase::Read
                } else if waited + 1 >= self.timeout_ticks {
                    self.fault = true;
                    self.restart()
                } else {
                    AcquirePhase::WaitEoc { waited: waited + 1 }
                }
            }
            AcquirePhase::Read => {
                out.pins.oe = true;
                AcquirePhase::Latch
            }
            AcquirePhase::Latch => {
                match data {
                    DataBus::Driven(code) => {
                        self.last_sample = Some(code);
                        out.published = Some(code);
                    }
                    DataBus::HighZ => self.fault = true,
                }
                self.restart()
            }
        };
        out
    }

    fn restart(&self) -> AcquirePhase {
        AcquirePhase::Assert {
            remaining: self.hold_ticks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PERIOD: u64 = 20;

    fn fast() -> AdcConfig {
        AdcConfig {
            conversion_ticks: 5,
            ..AdcConfig::default()
        }
    }

    #[test]
    fn quantize_examples() {
        let cfg = AdcConfig::default();
        assert_eq!(quantize(0.0, &cfg).unwrap(), 0);
        assert_eq!(quantize(5.0, &cfg).unwrap(), 255);
        assert_eq!(quantize(2.5, &cfg).unwrap(), 128);
        assert_eq!(quantize(-1.0, &cfg).unwrap(), 0);
        assert_eq!(quantize(7.0, &cfg).unwrap(), 255);
        assert!(quantize(f64::NAN, &cfg).is_err());
        assert!(quantize(f64::INFINITY, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(AdcConfig::default().validate().is_ok());
        let bad = AdcConfig {
            vref: 0.0,
            ..AdcConfig::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("vref"));
        let bad = AdcConfig {
            conversion_ticks: 0,
            ..AdcConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    /// Drive ALE+START high for `high_ticks` ticks, then low for `tail` ticks.
    /// Returns every (state, pins) after each tick.
    fn pulse(high_ticks: u32, tail: u32, cfg: &AdcConfig) -> Vec<(AdcState, AdcPins)> {
        let v = [2.5; CHANNELS];
        let mut st = AdcState::default();
        let mut pins = AdcPins::default();
        let mut trace = Vec::new();
        for t in 0..high_ticks + tail {
            pins.ale = t < high_ticks;
            pins.start = t < high_ticks;
            (st, pins) = adc_step(&st, &pins, &v, cfg, PERIOD);
            trace.push((st, pins));
        }
        trace
    }

    #[test]
    fn short_pulse_is_ignored() {
        let trace = pulse(3, 50, &fast());
        assert!(trace.iter().all(|(s, p)| s.phase == AdcPhase::Idle && !p.eoc));
        assert_eq!(trace.last().unwrap().0, AdcState::default());
    }

    #[test]
    fn eoc_after_conversion_ticks() {
        let trace = pulse(5, 20, &fast());
        let begin = trace
            .iter()
            .position(|(s, _)| s.phase == AdcPhase::Converting)
            .unwrap();
        assert_eq!(begin, 4, "conversion starts on the 5th observed high tick");
        let eoc: Vec<usize> = (0..trace.len()).filter(|&i| trace[i].1.eoc).collect();
        assert_eq!(eoc, vec![begin + 5]);
        assert_eq!(trace[begin + 5].0.result, 128);
    }

    #[test]
    fn oe_gates_data_bus() {
        let cfg = fast();
        let v = [2.5; CHANNELS];
        let (st, _) = pulse(5, 10, &cfg).pop().unwrap();
        assert_eq!(st.phase, AdcPhase::Done);

        let pins = AdcPins::default();
        let (st2, out) = adc_step(&st, &pins, &v, &cfg, PERIOD);
        assert_eq!(st2.phase, AdcPhase::Done);
        assert_eq!(out.data, DataBus::HighZ);

        let pins = AdcPins {
            oe: true,
            ..AdcPins::default()
        };
        let (st3, out) = adc_step(&st2, &pins, &v, &cfg, PERIOD);
        assert_eq!(out.data, DataBus::Driven(128));

        // OE falling ends the read
        let (st4, out) = adc_step(&st3, &AdcPins::default(), &v, &cfg, PERIOD);
        assert_eq!(st4.phase, AdcPhase::Idle);
        assert_eq!(out.data, DataBus::HighZ);
    }

    #[test]
    fn input_is_sampled_at_conversion_start() {
        let cfg = fast();
        let mut st = AdcState::default();
        let mut pins = AdcPins {
            ale: true,
            start: true,
            ..AdcPins::default()
        };
        let mut v = [1.0; CHANNELS];
        for _ in 0..5 {
            (st, pins) = adc_step(&st, &pins, &v, &cfg, PERIOD);
        }
        assert_eq!(st.phase, AdcPhase::Converting);
        v = [4.0; CHANNELS];
        pins.ale = false;
        pins.start = false;
        for _ in 0..5 {
            (st, pins) = adc_step(&st, &pins, &v, &cfg, PERIOD);
        }
        assert_eq!(st.phase, AdcPhase::Done);
        assert_eq!(st.result, quantize(1.0, &cfg).unwrap());
    }

    #[test]
    fn address_selects_channel() {
        let cfg = fast();
        let mut v = [0.0; CHANNELS];
        v[3] = 2.5;
        let mut st = AdcState::default();
        let mut pins = AdcPins {
            ale: true,
            start: true,
            addr: 3,
            ..AdcPins::default()
        };
        for t in 0..12 {
            pins.ale = t < 5;
            pins.start = t < 5;
            (st, pins) = adc_step(&st, &pins, &v, &cfg, PERIOD);
        }
        assert_eq!(st.channel, 3);
        assert_eq!(st.result, 128);
    }

    fn run_acquisition(
        fsm: &mut AcquireFsm,
        cfg: &AdcConfig,
        v: f64,
        ticks: usize,
        attached: bool,
    ) -> Vec<u8> {
        let v_in = [v; CHANNELS];
        let mut st = AdcState::default();
        let mut pins = AdcPins::default();
        let mut samples = Vec::new();
        for _ in 0..ticks {
            if attached {
                (st, pins) = adc_step(&st, &pins, &v_in, cfg, PERIOD);
            }
            let out = fsm.step(pins.eoc, pins.data);
            out.pins.apply(&mut pins);
            samples.extend(out.published);
        }
        samples
    }

    #[test]
    fn hold_ticks_cover_min_pulse() {
        let cfg = AdcConfig::default();
        assert_eq!(AcquireFsm::new(0, &cfg, 20).hold_ticks(), 5);
        assert_eq!(AcquireFsm::new(0, &cfg, 30).hold_ticks(), 4);
        assert_eq!(AcquireFsm::new(0, &cfg, 1000).hold_ticks(), 1);
    }

    #[test]
    fn steady_input_publishes_quantized_samples() {
        let cfg = fast();
        let mut fsm = AcquireFsm::new(0, &cfg, PERIOD);
        let samples = run_acquisition(&mut fsm, &cfg, 2.5, 500, true);
        assert!(samples.len() > 10);
        assert!(samples.iter().all(|&c| c == 128));
        assert!(!fsm.fault());
    }

    #[test]
    fn detached_converter_times_out() {
        let cfg = fast();
        let mut fsm = AcquireFsm::new(0, &cfg, PERIOD);
        let samples = run_acquisition(&mut fsm, &cfg, 2.5, 200, true);
        let last_good = *samples.last().unwrap();
        assert!(!fsm.fault());

        // same sequencer, converter removed
        let samples = run_acquisition(&mut fsm, &cfg, 2.5, 200, false);
        assert!(samples.is_empty());
        assert!(fsm.fault());
        assert_eq!(fsm.last_sample(), Some(last_good));
    }

    #[test]
    fn timeout_after_ten_conversions() {
        let cfg = fast();
        let mut fsm = AcquireFsm::new(0, &cfg, PERIOD);
        // 5 assert ticks, then 50 wait ticks
        for _ in 0..5 + 49 {
            fsm.step(false, DataBus::HighZ);
            assert!(!fsm.fault());
        }
        fsm.step(false, DataBus::HighZ);
        assert!(fsm.fault());
    }

    proptest! {
        #[test]
        fn pulse_gate(width in 1u32..=12) {
            let cfg = fast();
            let trace = pulse(width, 20, &cfg);
            let started = trace.iter().any(|(s, _)| s.phase != AdcPhase::Idle);
            prop_assert_eq!(started, u64::from(width) * PERIOD >= cfg.min_pulse_ns);
        }

        #[test]
        fn quantize_is_monotone(a in -1.0f64..6.0, b in -1.0f64..6.0) {
            let cfg = AdcConfig::default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantize(lo, &cfg).unwrap() <= quantize(hi, &cfg).unwrap());
        }

        #[test]
        fn quantize_error_below_one_lsb(v in 0.0f64..5.0) {
            let cfg = AdcConfig::default();
            let code = f64::from(quantize(v, &cfg).unwrap());
            prop_assert!((v - code * cfg.lsb()).abs() < cfg.lsb());
        }

        #[test]
        fn data_bus_only_driven_when_enabled(ops in proptest::collection::vec(0u8..16, 1..200)) {
            let cfg = AdcConfig { conversion_ticks: 3, ..AdcConfig::default() };
            let v = [1.7; CHANNELS];
            let mut st = AdcState::default();
            let mut pins = AdcPins::default();
            for op in ops {
                pins.ale = op & 1 != 0;
                pins.start = op & 2 != 0;
                pins.oe = op & 4 != 0;
                pins.addr = op >> 1;
                (st, pins) = adc_step(&st, &pins, &v, &cfg, PERIOD);
                if pins.data != DataBus::HighZ {
                    prop_assert!(pins.oe && st.phase == AdcPhase::Done);
                }
            }
        }
    }
}
