//! CSV run traces and VCD waveform dumps.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::Result;

pub const CSV_HEADER: [&str; 11] = [
    "time_s",
    "x_m",
    "y_m",
    "theta_rad",
    "omega_l",
    "omega_r",
    "distance_cm",
    "adc_code",
    "command",
    "duty",
    "sevenseg",
];

/// One CSV row, taken when the controller publishes an ADC sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub x_m: f64,
    pub y_m: f64,
    pub theta_rad: f64,
    pub omega_l: f64,
    pub omega_r: f64,
    /// True raycast distance.
    pub distance_cm: f64,
    pub adc_code: u8,
    pub command: &'static str,
    pub duty: u8,
    /// Segment bits a..g, MSB first.
    pub sevenseg: u8,
}

impl TraceRow {
    fn fields(&self) -> [String; 11] {
        [
            format!("{:.9}", self.time_s),
            format!("{:.9}", self.x_m),
            format!("{:.9}", self.y_m),
            format!("{:.9}", self.theta_rad),
            format!("{:.6}", self.omega_l),
            format!("{:.6}", self.omega_r),
            format!("{:.4}", self.distance_cm),
            self.adc_code.to_string(),
            self.command.to_string(),
            self.duty.to_string(),
            format!("{:07b}", self.sevenseg),
        ]
    }
}

pub fn write_csv<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// A signal value: scalar bit, or a bus that may float.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Bit(bool),
    Bus(Option<u64>),
}

#[derive(Debug, Clone)]
struct VarDecl {
    name: String,
    width: u32,
    id: String,
}

/// Identifier codes from the printable range `!`..`~`.
fn id_code(mut n: usize) -> String {
    const BASE: usize = 94;
    let mut s = String::new();
    loop {
        s.push(char::from(b'!' + (n % BASE) as u8));
        n /= BASE;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    s
}

/// Writes a value-change dump, emitting a record only when a value differs
/// from the last one written.
pub struct VcdWriter<W: Write> {
    out: W,
    vars: Vec<VarDecl>,
    last: Vec<Option<Level>>,
    header_done: bool,
    dumped: bool,
}

impl<W: Write> VcdWriter<W> {
    pub fn new(out: W) -> Self {
        VcdWriter {
            out,
            vars: Vec::new(),
            last: Vec::new(),
            header_done: false,
            dumped: false,
        }
    }

    /// Declare a wire; returns its index for [`VcdWriter::sample`].
    pub fn add_wire(&mut self, name: &str, width: u32) -> usize {
        assert!(!self.header_done, "wires must be declared before the header");
        assert!((1..=64).contains(&width));
        let idx = self.vars.len();
        self.vars.push(VarDecl {
            name: name.to_string(),
            width,
            id: id_code(idx),
        });
        self.last.push(None);
        idx
    }

    pub fn write_header(&mut self, module: &str) -> io::Result<()> {
        if self.header_done {
            return Ok(());
        }
        let mut h = String::new();
        h.push_str("$version robosim $end\n");
        h.push_str("$timescale 1ns $end\n");
        let _ = writeln!(h, "$scope module {module} $end");
        for v in &self.vars {
            if v.width == 1 {
                let _ = writeln!(h, "$var wire 1 {} {} $end", v.id, v.name);
            } else {
                let _ = writeln!(
                    h,
                    "$var wire {} {} {} [{}:0] $end",
                    v.width,
                    v.id,
                    v.name,
                    v.width - 1
                );
            }
        }
        h.push_str("$upscope $end\n$enddefinitions $end\n");
        self.out.write_all(h.as_bytes())?;
        self.header_done = true;
        Ok(())
    }

    fn format_value(v: &VarDecl, level: Level, out: &mut String) {
        match level {
            Level::Bit(b) => {
                let _ = writeln!(out, "{}{}", u8::from(b), v.id);
            }
            Level::Bus(None) => {
                let _ = writeln!(out, "b{} {}", "z".repeat(v.width as usize), v.id);
            }
            Level::Bus(Some(x)) => {
                let _ = writeln!(out, "b{:0width$b} {}", x, v.id, width = v.width as usize);
            }
        }
    }

    /// Record the values of every wire at `time_ns`, in declaration order.
    pub fn sample(&mut self, time_ns: u64, values: &[Level]) -> io::Result<()> {
        assert_eq!(values.len(), self.vars.len());
        self.write_header("top")?;
        let mut block = String::new();
        if !self.dumped {
            let _ = writeln!(block, "#{time_ns}\n$dumpvars");
            for (i, &level) in values.iter().enumerate() {
                Self::format_value(&self.vars[i], level, &mut block);
                self.last[i] = Some(level);
            }
            block.push_str("$end\n");
            self.dumped = true;
        } else {
            let mut changes = String::new();
            for (i, &level) in values.iter().enumerate() {
                if self.last[i] != Some(level) {
                    Self::format_value(&self.vars[i], level, &mut changes);
                    self.last[i] = Some(level);
                }
            }
            if !changes.is_empty() {
                let _ = writeln!(block, "#{time_ns}");
                block.push_str(&changes);
            }
        }
        self.out.write_all(block.as_bytes())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.write_header("top")?;
        self.out.flush()?;
        Ok(self.out)
    }
}
