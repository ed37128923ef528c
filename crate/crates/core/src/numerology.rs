//! NR time/frequency arithmetic: subcarrier spacing, resource-block width,
//! slot duration and TDD frame-pattern accounting.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Symbols per slot with normal cyclic prefix.
pub const SYMBOLS_PER_SLOT: u32 = 14;

/// Subcarriers per physical resource block.
pub const SUBCARRIERS_PER_PRB: u32 = 12;

/// Subcarrier spacing of a carrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Numerology {
    Scs15,
    Scs30,
    Scs120,
}

impl Numerology {
    pub fn from_khz(scs_khz: u32) -> Result<Self, Error> {
        match scs_khz {
            15 => Ok(Self::Scs15),
            30 => Ok(Self::Scs30),
            120 => Ok(Self::Scs120),
            other => Err(Error::Config(format!(
                "unsupported subcarrier spacing {other} kHz (expected 15, 30 or 120)"
            ))),
        }
    }

    pub fn scs_khz(self) -> u32 {
        match self {
            Self::Scs15 => 15,
            Self::Scs30 => 30,
            Self::Scs120 => 120,
        }
    }

    pub fn scs_hz(self) -> f64 {
        f64::from(self.scs_khz()) * 1e3
    }

    /// Slots per 1 ms subframe.
    pub fn slots_per_subframe(self) -> u32 {
        self.scs_khz() / 15
    }
}

impl TryFrom<u32> for Numerology {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self, Self::Error> {
        Self::from_khz(value)
    }
}

impl From<Numerology> for u32 {
    fn from(n: Numerology) -> u32 {
        n.scs_khz()
    }
}

impl fmt::Display for Numerology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} kHz", self.scs_khz())
    }
}

/// Width of one PRB in hertz.
pub fn prb_bandwidth_hz(n: Numerology) -> f64 {
    f64::from(SUBCARRIERS_PER_PRB) * n.scs_hz()
}

/// Duration of one slot in seconds.
pub fn slot_duration_s(n: Numerology) -> f64 {
    1e-3 / f64::from(n.slots_per_subframe())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    Downlink,
    Uplink,
    Special,
}

impl SlotKind {
    fn letter(self) -> char {
        match self {
            Self::Downlink => 'D',
            Self::Uplink => 'U',
            Self::Special => 'S',
        }
    }
}

/// Symbol split of a special slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpecialSplit {
    pub dl_symbols: u32,
    pub guard_symbols: u32,
    pub ul_symbols: u32,
}

/// A periodic TDD slot pattern such as `DDDSU (S: 10D:2G:2U)`.
///
/// The textual form is the canonical serialization; [`TddPattern::from_str`]
/// and `Display` round-trip exactly for canonical strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TddPattern {
    sequence: Vec<SlotKind>,
    special_split: SpecialSplit,
}

impl TddPattern {
    pub fn new(sequence: Vec<SlotKind>, special_split: SpecialSplit) -> Result<Self, Error> {
        if sequence.is_empty() {
            return Err(Error::Config("TDD pattern has no slots".into()));
        }
        let total = special_split.dl_symbols + special_split.guard_symbols + special_split.ul_symbols;
        if total != SYMBOLS_PER_SLOT {
            return Err(Error::Config(format!(
                "special slot split {}D:{}G:{}U sums to {total} symbols, expected {SYMBOLS_PER_SLOT}",
                special_split.dl_symbols, special_split.guard_symbols, special_split.ul_symbols
            )));
        }
        Ok(Self {
            sequence,
            special_split,
        })
    }

    pub fn sequence(&self) -> &[SlotKind] {
        &self.sequence
    }

    pub fn special_split(&self) -> SpecialSplit {
        self.special_split
    }

    fn symbol_counts(&self) -> (u32, u32, u32) {
        let split = self.special_split;
        self.sequence
            .iter()
            .fold((0, 0, 0), |(dl, guard, ul), kind| match kind {
                SlotKind::Downlink => (dl + SYMBOLS_PER_SLOT, guard, ul),
                SlotKind::Uplink => (dl, guard, ul + SYMBOLS_PER_SLOT),
                SlotKind::Special => (
                    dl + split.dl_symbols,
                    guard + split.guard_symbols,
                    ul + split.ul_symbols,
                ),
            })
    }

    fn total_symbols(&self) -> f64 {
        f64::from(SYMBOLS_PER_SLOT) * self.sequence.len() as f64
    }

    /// Share of pattern time spent in guard symbols.
    pub fn guard_fraction(&self) -> f64 {
        f64::from(self.symbol_counts().1) / self.total_symbols()
    }
}

impl FromStr for TddPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| Error::Config(format!("malformed TDD pattern {s:?}: {why}"));
        let s = s.trim();
        let (slots, rest) = match s.find('(') {
            Some(i) => (s[..i].trim(), Some(s[i..].trim())),
            None => (s, None),
        };
        let sequence = slots
            .chars()
            .map(|c| match c {
                'D' => Ok(SlotKind::Downlink),
                'U' => Ok(SlotKind::Uplink),
                'S' => Ok(SlotKind::Special),
                other => Err(bad(&format!("unknown slot kind {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;

        let special_split = match rest {
            None if !sequence.contains(&SlotKind::Special) => SpecialSplit {
                dl_symbols: SYMBOLS_PER_SLOT,
                guard_symbols: 0,
                ul_symbols: 0,
            },
            None => return Err(bad("special slots present but no split given")),
            Some(rest) => {
                let inner = rest
                    .strip_prefix('(')
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| bad("split must be parenthesised"))?
                    .trim();
                let inner = inner
                    .strip_prefix("S:")
                    .ok_or_else(|| bad("split must start with \"S:\""))?;
                let mut dl = None;
                let mut guard = None;
                let mut ul = None;
                for part in inner.split(':') {
                    let part = part.trim();
                    if part.len() < 2 {
                        return Err(bad("empty split field"));
                    }
                    let (count, tag) = part.split_at(part.len() - 1);
                    let count: u32 = count.parse().map_err(|_| bad("split count is not an integer"))?;
                    let slot = match tag {
                        "D" => &mut dl,
                        "G" => &mut guard,
                        "U" => &mut ul,
                        _ => return Err(bad("split fields must end in D, G or U")),
                    };
                    if slot.replace(count).is_some() {
                        return Err(bad("repeated split field"));
                    }
                }
                match (dl, guard, ul) {
                    (Some(dl_symbols), Some(guard_symbols), Some(ul_symbols)) => SpecialSplit {
                        dl_symbols,
                        guard_symbols,
                        ul_symbols,
                    },
                    _ => return Err(bad("split needs D, G and U counts")),
                }
            }
        };
        Self::new(sequence, special_split)
    }
}

impl fmt::Display for TddPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for kind in &self.sequence {
            write!(f, "{}", kind.letter())?;
        }
        if self.sequence.contains(&SlotKind::Special) {
            let s = self.special_split;
            write!(f, " (S: {}D:{}G:{}U)", s.dl_symbols, s.guard_symbols, s.ul_symbols)?;
        }
        Ok(())
    }
}

impl TryFrom<String> for TddPattern {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<TddPattern> for String {
    fn from(p: TddPattern) -> String {
        p.to_string()
    }
}

/// Duplexing of a carrier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Duplex {
    Fdd,
    Tdd(TddPattern),
}

impl Duplex {
    pub fn is_tdd(&self) -> bool {
        matches!(self, Self::Tdd(_))
    }
}

impl fmt::Display for Duplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fdd => f.write_str("FDD"),
            Self::Tdd(p) => write!(f, "TDD {p}"),
        }
    }
}

impl FromStr for Duplex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "FDD" {
            Ok(Self::Fdd)
        } else if let Some(pattern) = s.strip_prefix("TDD ") {
            Ok(Self::Tdd(pattern.parse()?))
        } else {
            Err(Error::Config(format!(
                "duplex must be \"FDD\" or \"TDD <pattern>\", got {s:?}"
            )))
        }
    }
}

impl TryFrom<String> for Duplex {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Duplex> for String {
    fn from(d: Duplex) -> String {
        d.to_string()
    }
}

/// Fractions of symbol time usable for downlink and uplink.
///
/// Special slots contribute their DL and UL symbols individually. FDD has no
/// time sharing and yields `(1.0, 1.0)`.
pub fn duty_fractions(duplex: &Duplex) -> (f64, f64) {
    match duplex {
        Duplex::Fdd => (1.0, 1.0),
        Duplex::Tdd(pattern) => {
            let (dl, _, ul) = pattern.symbol_counts();
            let total = pattern.total_symbols();
            (f64::from(dl) / total, f64::from(ul) / total)
        }
    }
}
