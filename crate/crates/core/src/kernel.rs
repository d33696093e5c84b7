//! Fixed-step simulation kernel.
//!
//! The kernel owns a shared signal bus and a list of synchronous components.
//! Every controller tick each component is stepped exactly once, in ascending
//! registration order. There are no delta cycles: a component sees whatever the
//! components ordered before it wrote during the same tick, and whatever the
//! ones ordered after it wrote during the previous tick.

use std::fmt;

use crate::error::{Result, SimError};

/// Upper bound on simulated time, in nanoseconds.
pub const MAX_SIM_TIME_NS: u64 = 1_000_000_000_000_000;

/// Nanoseconds since simulation start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ns(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn ns(self) -> u64 {
        self.0
    }

    pub fn seconds(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn checked_add_ns(self, ns: u64) -> Option<SimTime> {
        self.0
            .checked_add(ns)
            .filter(|&t| t <= MAX_SIM_TIME_NS)
            .map(SimTime)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ns", self.0)
    }
}

/// Controller and plant tick periods.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClockConfig {
    pub controller_period_ns: u64,
    pub plant_period_ns: u64,
}

impl Default for ClockConfig {
    /// 50 MHz controller clock, 1 ms physics step.
    fn default() -> Self {
        ClockConfig {
            controller_period_ns: 20,
            plant_period_ns: 1_000_000,
        }
    }
}

impl ClockConfig {
    pub fn new(controller_period_ns: u64, plant_period_ns: u64) -> Result<Self> {
        let cfg = ClockConfig {
            controller_period_ns,
            plant_period_ns,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.controller_period_ns == 0 {
            return Err(SimError::config("controller_period_ns", "must be positive"));
        }
        if self.plant_period_ns == 0 {
            return Err(SimError::config("plant_period_ns", "must be positive"));
        }
        if !self.plant_period_ns.is_multiple_of(self.controller_period_ns) {
            return Err(SimError::config(
                "plant_period_ns",
                format!(
                    "{} is not an integer multiple of controller_period_ns {}",
                    self.plant_period_ns, self.controller_period_ns
                ),
            ));
        }
        Ok(())
    }

    /// Controller ticks per plant step.
    pub fn ticks_per_plant_step(&self) -> u64 {
        self.plant_period_ns / self.controller_period_ns
    }

    pub fn plant_dt_s(&self) -> f64 {
        self.plant_period_ns as f64 * 1e-9
    }
}

/// A synchronous block clocked by the kernel.
pub trait Component<B> {
    fn name(&self) -> &str;

    /// Advance one controller tick. `now` is the time at the start of the tick.
    fn step(&mut self, now: SimTime, bus: &mut B);
}

/// Identifies a registered component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ComponentHandle {
    order: i32,
}

impl ComponentHandle {
    pub fn order(self) -> i32 {
        self.order
    }
}

struct Slot<B> {
    order: i32,
    component: Box<dyn Component<B>>,
}

pub struct Kernel<B> {
    clock: ClockConfig,
    now: SimTime,
    ticks: u64,
    slots: Vec<Slot<B>>,
    bus: B,
}

impl<B> Kernel<B> {
    pub fn new(clock: ClockConfig, bus: B) -> Result<Self> {
        clock.validate()?;
        Ok(Kernel {
            clock,
            now: SimTime::ZERO,
            ticks: 0,
            slots: Vec::new(),
            bus,
        })
    }

    pub fn register_component<C>(&mut self, component: C, order: i32) -> Result<ComponentHandle>
    where
        C: Component<B> + 'static,
    {
        self.register_boxed(Box::new(component), order)
    }

    pub fn register_boxed(
        &mut self,
        component: Box<dyn Component<B>>,
        order: i32,
    ) -> Result<ComponentHandle> {
        match self.slots.binary_search_by_key(&order, |s| s.order) {
            Ok(existing) => Err(SimError::config(
                "order",
                format!(
                    "order {} already taken by component '{}'",
                    order,
                    self.slots[existing].component.name()
                ),
            )),
            Err(pos) => {
                self.slots.insert(pos, Slot { order, component });
                Ok(ComponentHandle { order })
            }
        }
    }

    pub fn component(&self, handle: ComponentHandle) -> Option<&dyn Component<B>> {
        self.slots
            .binary_search_by_key(&handle.order, |s| s.order)
            .ok()
            .map(|i| self.slots[i].component.as_ref())
    }

    /// Names of the registered components in step order.
    pub fn step_order(&self) -> Vec<&str> {
        self.slots.iter().map(|s| s.component.name()).collect()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn clock(&self) -> &ClockConfig {
        &self.clock
    }

    pub fn bus(&self) -> &B {
        &self.bus
    }

    pub fn bus_mut(&mut self) -> &mut B {
        &mut self.bus
    }

    pub fn into_bus(self) -> B {
        self.bus
    }

    /// Execute one controller tick.
    pub fn tick(&mut self) -> Result<()> {
        let next = self
            .now
            .checked_add_ns(self.clock.controller_period_ns)
            .ok_or(SimError::TimeOverflow)?;
        for slot in &mut self.slots {
            slot.component.step(self.now, &mut self.bus);
        }
        self.now = next;
        self.ticks += 1;
        Ok(())
    }

    /// Run until the largest tick boundary not after `t_end`. Returns the
    /// number of ticks executed.
    pub fn run_until(&mut self, t_end: SimTime) -> Result<u64> {
        if t_end < self.now {
            return Err(SimError::Argument(format!(
                "run_until({}) is before current time {}",
                t_end, self.now
            )));
        }
        if t_end.ns() > MAX_SIM_TIME_NS {
            return Err(SimError::TimeOverflow);
        }
        let n = (t_end.ns() - self.now.ns()) / self.clock.controller_period_ns;
        for _ in 0..n {
            self.tick()?;
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Recorder {
        id: u32,
    }

    impl Component<Vec<(u64, u32)>> for Recorder {
        fn name(&self) -> &str {
            "recorder"
        }

        fn step(&mut self, now: SimTime, bus: &mut Vec<(u64, u32)>) {
            bus.push((now.ns(), self.id));
        }
    }

    fn kernel() -> Kernel<Vec<(u64, u32)>> {
        Kernel::new(ClockConfig::new(20, 1000).unwrap(), Vec::new()).unwrap()
    }

    #[test]
    fn components_step_in_ascending_order() {
        let mut k = kernel();
        // registered out of order on purpose
        k.register_component(Recorder { id: 2 }, 2).unwrap();
        k.register_component(Recorder { id: 1 }, 1).unwrap();
        assert_eq!(k.run_until(SimTime::from_ns(40)).unwrap(), 2);
        assert_eq!(k.bus(), &vec![(0, 1), (0, 2), (20, 1), (20, 2)]);
    }

    #[test]
    fn duplicate_order_rejected() {
        let mut k = kernel();
        k.register_component(Recorder { id: 1 }, 7).unwrap();
        let err = k.register_component(Recorder { id: 2 }, 7).unwrap_err();
        assert!(matches!(err, SimError::Config { .. }));
    }

    #[test]
    fn empty_kernel_advances_time() {
        let mut k = kernel();
        assert_eq!(k.run_until(SimTime::from_ns(2000)).unwrap(), 100);
        assert_eq!(k.now(), SimTime::from_ns(2000));
        assert!(k.bus().is_empty());
    }

    #[test]
    fn run_until_counts_and_floors() {
        let mut k = kernel();
        assert_eq!(k.run_until(SimTime::from_ns(200)).unwrap(), 10);
        assert_eq!(k.run_until(SimTime::from_ns(200)).unwrap(), 0);

        let mut k = kernel();
        // floor division oracle: 210 / 20 = 10 remainder 10
        assert_eq!(k.run_until(SimTime::from_ns(210)).unwrap(), 10);
        assert_eq!(k.now(), SimTime::from_ns(200));
    }

    #[test]
    fn run_until_past_is_an_error() {
        let mut k = kernel();
        k.run_until(SimTime::from_ns(100)).unwrap();
        assert!(matches!(
            k.run_until(SimTime::from_ns(40)),
            Err(SimError::Argument(_))
        ));
    }

    #[test]
    fn overflow_guard() {
        let mut k = kernel();
        assert!(matches!(
            k.run_until(SimTime::from_ns(MAX_SIM_TIME_NS + 1)),
            Err(SimError::TimeOverflow)
        ));
        assert!(SimTime::from_ns(MAX_SIM_TIME_NS).checked_add_ns(1).is_none());
    }

    #[test]
    fn clock_must_divide_plant_period() {
        assert!(ClockConfig::new(20, 1_000_000).is_ok());
        let err = ClockConfig::new(30, 1000).unwrap_err().to_string();
        assert!(err.contains("plant_period_ns"), "{err}");
        assert!(ClockConfig::new(0, 1000).is_err());
        assert_eq!(ClockConfig::default().ticks_per_plant_step(), 50_000);
    }
}
