//! BCD to seven-segment encoder (common cathode, 1 = lit).

use std::fmt;

/// Segments a..g packed MSB-first into the low 7 bits (a = bit 6, g = bit 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct SegmentPattern(u8);

impl SegmentPattern {
    pub const BLANK: SegmentPattern = SegmentPattern(0);

    pub fn bits(self) -> u8 {
        self.0
    }

    /// Segment levels in a..g order.
    pub fn segments(self) -> [bool; 7] {
        std::array::from_fn(|i| self.0 & (1 << (6 - i)) != 0)
    }

    pub fn lit(self, segment: char) -> bool {
        match segment {
            'a'..='g' => self.0 & (1 << (6 - (segment as u8 - b'a'))) != 0,
            _ => false,
        }
    }
}

impl fmt::Display for SegmentPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:07b}", self.0)
    }
}

const DIGITS: [u8; 10] = [
    0b111_1110, // 0
    0b011_0000, // 1
    0b110_1101, // 2
    0b111_1001, // 3
    0b011_0011, // 4
    0b101_1011, // 5
    0b101_1111, // 6
    0b111_0000, // 7
    0b111_1111, // 8
    0b111_1011, // 9
];

/// Digits 0-9 map to their glyphs; 10-15 (and anything larger) are blank.
pub fn encode_bcd(nibble: u8) -> SegmentPattern {
    DIGITS
        .get(usize::from(nibble))
        .map_or(SegmentPattern::BLANK, |&bits| SegmentPattern(bits))
}

/// Tens digit of a distance in centimetres, saturated at 9.
pub fn display_digit(distance_cm: f64) -> u8 {
    if distance_cm.is_nan() || distance_cm <= 0.0 {
        return 0;
    }
    (distance_cm / 10.0).floor().min(9.0) as u8
}
