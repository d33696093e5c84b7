//! Test helpers: scenario text and a VCD reader built on the `vcd` crate.

#![allow(dead_code)]

use std::collections::HashMap;
use std::io::BufReader;
use std::path::Path;

use robosim_core::config::RunConfig;
use vcd::{Command, IdCode, Value};

/// 1 MHz controller clock, 50-tick conversions, 1 ms plant step.
pub fn fast_config(extra: &str) -> RunConfig {
    let text = format!(
        "[clock]\ncontroller_period_ns = 1000\nplant_period_ns = 1000000\n\
         [adc]\nconversion_ticks = 50\n{extra}"
    );
    RunConfig::parse(&text, Path::new(".")).expect("valid test config")
}

/// Robot at the origin facing an obstacle whose surface is 1.0 m ahead.
pub const OBSTACLE_AHEAD: &str = "[[obstacle]]\nx = 1.2\ny = 0.0\nradius = 0.2\n";

/// Value changes per signal name: (time_ns, value), `None` = high impedance.
#[derive(Debug, Default)]
pub struct Waves {
    pub changes: HashMap<String, Vec<(u64, Option<u64>)>>,
    pub timescale_ns: bool,
}

impl Waves {
    pub fn signal(&self, name: &str) -> &[(u64, Option<u64>)] {
        self.changes.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Times at which `name` changes to `value` (initial dump excluded).
    pub fn edges_to(&self, name: &str, value: u64) -> Vec<u64> {
        self.signal(name)
            .iter()
            .skip(1)
            .filter(|(_, v)| *v == Some(value))
            .map(|(t, _)| *t)
            .collect()
    }

    /// Value of `name` at time `t` (last change at or before `t`).
    pub fn value_at(&self, name: &str, t: u64) -> Option<u64> {
        self.signal(name)
            .iter()
            .take_while(|(ct, _)| *ct <= t)
            .last()
            .and_then(|(_, v)| *v)
    }
}

fn scalar(v: Value) -> Option<u64> {
    match v {
        Value::V0 => Some(0),
        Value::V1 => Some(1),
        Value::X | Value::Z => None,
    }
}

pub fn parse_vcd(bytes: &[u8]) -> Waves {
    let mut parser = vcd::Parser::new(BufReader::new(bytes));
    let header = parser.parse_header().expect("VCD header parses");
    let mut names: HashMap<IdCode, String> = HashMap::new();
    for item in &header.items {
        if let vcd::ScopeItem::Scope(scope) = item {
            for child in &scope.items {
                if let vcd::ScopeItem::Var(var) = child {
                    names.insert(var.code, var.reference.clone());
                }
            }
        }
    }
    let mut waves = Waves {
        timescale_ns: matches!(header.timescale, Some((1, vcd::TimescaleUnit::NS))),
        ..Waves::default()
    };
    let mut now = 0;
    for cmd in parser {
        let (id, value) = match cmd.expect("VCD body parses") {
            Command::Timestamp(t) => {
                now = t;
                continue;
            }
            Command::ChangeScalar(id, v) => (id, scalar(v)),
            Command::ChangeVector(id, vec) => {
                let bits: Vec<Option<u64>> = vec.iter().map(scalar).collect();
                let value = if bits.iter().any(Option::is_none) {
                    None
                } else {
                    Some(bits.iter().fold(0, |acc, b| (acc << 1) | b.unwrap()))
                };
                (id, value)
            }
            _ => continue,
        };
        let name = names.get(&id).expect("change for declared var").clone();
        waves.changes.entry(name).or_default().push((now, value));
    }
    waves
}
