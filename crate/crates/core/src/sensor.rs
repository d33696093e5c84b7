//! GP2D12 infrared ranger: inverse-distance voltage response and the
//! calibrated code-to-distance lookup table.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::adc::{quantize, AdcConfig};
use crate::error::{Result, SimError};

/// Response `v(d) = alpha / (d + beta)` on `[d_min, d_max]` centimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    pub alpha: f64,
    pub beta: f64,
    pub d_min: f64,
    pub d_max: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            alpha: 27.0,
            beta: 0.42,
            d_min: 10.0,
            d_max: 80.0,
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(SimError::config("alpha", "must be positive"));
        }
        if !self.beta.is_finite() {
            return Err(SimError::config("beta", "must be finite"));
        }
        if !(self.d_min.is_finite() && self.d_max.is_finite() && self.d_min < self.d_max) {
            return Err(SimError::config("d_min", "must be less than d_max"));
        }
        if self.d_min + self.beta <= 0.0 {
            // the response would have a pole inside the range
            return Err(SimError::config("beta", "d_min + beta must be positive"));
        }
        Ok(())
    }
}

/// Sensor output voltage; distances outside the valid range are clamped to it.
pub fn voltage_of_distance(d_cm: f64, model: &SensorModel) -> f64 {
    let d = if d_cm.is_nan() {
        model.d_max
    } else {
        d_cm.clamp(model.d_min, model.d_max)
    };
    model.alpha / (d + model.beta)
}

/// Optional additive uniform noise, bounded by half an ADC LSB.
#[derive(Debug)]
pub struct SensorNoise<R> {
    rng: R,
    amplitude: f64,
}

impl<R: Rng> SensorNoise<R> {
    pub fn half_lsb(rng: R, adc: &AdcConfig) -> Self {
        SensorNoise {
            rng,
            amplitude: adc.lsb() / 2.0,
        }
    }

    pub fn apply(&mut self, v: f64) -> f64 {
        v + self.rng.gen_range(-self.amplitude..=self.amplitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationEntry {
    pub code: u8,
    pub distance_cm: f64,
}

/// Monotone code-to-distance table. Codes strictly increase while distances
/// strictly decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationTable {
    entries: Vec<CalibrationEntry>,
}

impl CalibrationTable {
    pub fn new(mut entries: Vec<CalibrationEntry>) -> Result<Self> {
        entries.sort_by_key(|e| e.code);
        if entries.len() < 2 {
            return Err(SimError::Calibration(format!(
                "table needs at least 2 entries, got {}",
                entries.len()
            )));
        }
        for pair in entries.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if a.code == b.code {
                return Err(SimError::Calibration(format!("duplicate code {}", a.code)));
            }
            if !(b.distance_cm < a.distance_cm) {
                return Err(SimError::Calibration(format!(
                    "distance must decrease as code increases (code {} -> {}: {} -> {})",
                    a.code, b.code, a.distance_cm, b.distance_cm
                )));
            }
        }
        if entries.iter().any(|e| !e.distance_cm.is_finite()) {
            return Err(SimError::Calibration("non-finite distance".into()));
        }
        Ok(CalibrationTable { entries })
    }

    pub fn entries(&self) -> &[CalibrationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write as `code,distance_cm` text with a header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["code", "distance_cm"])?;
        for e in &self.entries {
            w.write_record([e.code.to_string(), format!("{:.6}", e.distance_cm)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "code" || &headers[1] != "distance_cm" {
            return Err(SimError::Calibration(
                "expected header 'code,distance_cm'".into(),
            ));
        }
        let mut entries = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record?;
            let bad = |what: &str| {
                SimError::Calibration(format!("row {}: invalid {what}", row + 1))
            };
            let code: u8 = record[0].parse().map_err(|_| bad("code"))?;
            let distance_cm: f64 = record[1].parse().map_err(|_| bad("distance_cm"))?;
            entries.push(CalibrationEntry { code, distance_cm });
        }
        CalibrationTable::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Sample `n_points` distances uniformly over the valid range and record the
/// code each one quantizes to. Distances sharing a code are averaged.
pub fn build_table(model: &SensorModel, adc: &AdcConfig, n_points: usize) -> Result<CalibrationTable> {
    model.validate()?;
    adc.validate()?;
    if n_points < 2 {
        return Err(SimError::Argument(format!(
            "n_points must be at least 2, got {n_points}"
        )));
    }
    let span = model.d_max - model.d_min;
    let last = (n_points - 1) as f64;
    // (code, sum of distances, count), in order of increasing distance
    let mut groups: Vec<(u8, f64, u32)> = Vec::new();
    for i in 0..n_points {
        let d = model.d_min + span * i as f64 / last;
        let code = quantize(voltage_of_distance(d, model), adc)?;
        match groups.last_mut() {
            Some((c, sum, n)) if *c == code => {
                *sum += d;
                *n += 1;
            }
            _ => groups.push((code, d, 1)),
        }
    }
    if groups.len() < 2 {
        return Err(SimError::Calibration(format!(
            "sensor response yields only {} distinct code(s) over [{}, {}] cm",
            groups.len(),
            model.d_min,
            model.d_max
        )));
    }
    let entries = groups
        .into_iter()
        .map(|(code, sum, n)| CalibrationEntry {
            code,
            distance_cm: sum / f64::from(n),
        })
        .collect();
    CalibrationTable::new(entries)
}

/// Piecewise-linear lookup; codes outside the table clamp to its end entries.
pub fn distance_of_code(code: u8, table: &CalibrationTable) -> f64 {
    let e = &table.entries;
    let first = e[0];
    let last = e[e.len() - 1];
    if code <= first.code {
        return first.distance_cm;
    }
    if code >= last.code {
        return last.distance_cm;
    }
    // first index whose code is >= `code`; guaranteed in 1..len
    let hi = e.partition_point(|x| x.code < code);
    let (a, b) = (e[hi - 1], e[hi]);
    let t = f64::from(code - a.code) / f64::from(b.code - a.code);
    a.distance_cm + (b.distance_cm - a.distance_cm) * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn voltage_examples() {
        let m = SensorModel::default();
        assert!((voltage_of_distance(26.58, &m) - 1.0).abs() < 1e-12);
        assert!((voltage_of_distance(10.0, &m) - 27.0 / 10.42).abs() < 1e-15);
        assert!((voltage_of_distance(10.0, &m) - 2.591).abs() < 1e-3);
        assert_eq!(voltage_of_distance(200.0, &m), voltage_of_distance(80.0, &m));
        assert_eq!(voltage_of_distance(2.0, &m), voltage_of_distance(10.0, &m));
        assert_eq!(voltage_of_distance(f64::INFINITY, &m), voltage_of_distance(80.0, &m));
    }

    #[test]
    fn two_point_table_is_endpoints() {
        let m = SensorModel::default();
        let adc = AdcConfig::default();
        let t = build_table(&m, &adc, 2).unwrap();
        let codes: Vec<u8> = t.entries().iter().map(|e| e.code).collect();
        assert_eq!(codes, vec![17, 132]);
        assert_eq!(t.entries()[0].distance_cm, 80.0);
        assert_eq!(t.entries()[1].distance_cm, 10.0);
    }

    #[test]
    fn table_is_monotone() {
        let t = build_table(&SensorModel::default(), &AdcConfig::default(), 32).unwrap();
        for w in t.entries().windows(2) {
            assert!(w[0].code < w[1].code);
            assert!(w[0].distance_cm > w[1].distance_cm);
        }
    }

    #[test]
    fn flat_model_fails_calibration() {
        let m = SensorModel {
            alpha: 1e-9,
            ..SensorModel::default()
        };
        assert!(matches!(
            build_table(&m, &AdcConfig::default(), 32),
            Err(SimError::Calibration(_))
        ));
        assert!(build_table(&SensorModel::default(), &AdcConfig::default(), 1).is_err());
    }

    fn table(points: &[(u8, f64)]) -> CalibrationTable {
        CalibrationTable::new(
            points
                .iter()
                .map(|&(code, distance_cm)| CalibrationEntry { code, distance_cm })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn lookup_interpolates_and_clamps() {
        let t = table(&[(20, 70.0), (40, 30.0), (100, 10.0)]);
        assert_eq!(distance_of_code(40, &t), 30.0);
        assert_eq!(distance_of_code(30, &t), 50.0);
        assert_eq!(distance_of_code(70, &t), 20.0);
        assert_eq!(distance_of_code(0, &t), 70.0);
        assert_eq!(distance_of_code(255, &t), 10.0);
    }

    #[test]
    fn table_invariants_enforced() {
        let e = |code, distance_cm| CalibrationEntry { code, distance_cm };
        assert!(CalibrationTable::new(vec![e(1, 10.0)]).is_err());
        assert!(CalibrationTable::new(vec![e(1, 10.0), e(1, 9.0)]).is_err());
        assert!(CalibrationTable::new(vec![e(1, 10.0), e(2, 11.0)]).is_err());
        // unsorted input is accepted and sorted
        let t = CalibrationTable::new(vec![e(9, 10.0), e(2, 40.0)]).unwrap();
        assert_eq!(t.entries()[0].code, 2);
    }

    #[test]
    fn csv_round_trip() {
        let t = build_table(&SensorModel::default(), &AdcConfig::default(), 16).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("code,distance_cm\n"));
        let back = CalibrationTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), t.len());
        for (a, b) in back.entries().iter().zip(t.entries()) {
            assert_eq!(a.code, b.code);
            assert!((a.distance_cm - b.distance_cm).abs() < 1e-6);
        }
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(CalibrationTable::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(CalibrationTable::read_csv("code,distance_cm\nx,2\n3,1\n".as_bytes()).is_err());
        assert!(CalibrationTable::read_csv("code,distance_cm\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn noise_is_bounded_and_seeded() {
        let adc = AdcConfig::default();
        let mut a = SensorNoise::half_lsb(ChaCha8Rng::seed_from_u64(7), &adc);
        let mut b = SensorNoise::half_lsb(ChaCha8Rng::seed_from_u64(7), &adc);
        for _ in 0..1000 {
            let x = a.apply(1.0);
            assert!((x - 1.0).abs() <= adc.lsb() / 2.0);
            assert_eq!(x, b.apply(1.0));
        }
    }

    proptest! {
        #[test]
        fn response_strictly_decreasing(a in 10.0f64..80.0, b in 10.0f64..80.0) {
            prop_assume!(a < b);
            let m = SensorModel::default();
            prop_assert!(voltage_of_distance(a, &m) > voltage_of_distance(b, &m));
        }

        #[test]
        fn lookup_non_increasing(c1 in 0u8..=255, c2 in 0u8..=255, n in 2usize..128) {
            let t = build_table(&SensorModel::default(), &AdcConfig::default(), n).unwrap();
            let (lo, hi) = (c1.min(c2), c1.max(c2));
            prop_assert!(distance_of_code(lo, &t) >= distance_of_code(hi, &t));
        }
    }
}
