use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "DL")]
    Downlink,
    #[serde(rename = "UL")]
    Uplink,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Downlink => "DL",
            Self::Uplink => "UL",
        })
    }
}

/// A physical channel or random-access message.
///
/// Variant order is the reporting order and also breaks MIL ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Channel {
    Ssb,
    Prach,
    Msg2,
    Msg3,
    Msg4,
    Pdcch,
    Pdsch,
    /// PUCCH format 1, 2-bit HARQ-ACK.
    PucchF1,
    /// PUCCH format 3, 11-bit UCI.
    PucchF3Uci11,
    /// PUCCH format 3, 22-bit UCI.
    PucchF3Uci22,
    Pusch,
}

impl Channel {
    pub const ALL: [Channel; 11] = [
        Channel::Ssb,
        Channel::Prach,
        Channel::Msg2,
        Channel::Msg3,
        Channel::Msg4,
        Channel::Pdcch,
        Channel::Pdsch,
        Channel::PucchF1,
        Channel::PucchF3Uci11,
        Channel::PucchF3Uci22,
        Channel::Pusch,
    ];

    pub fn direction(self) -> Direction {
        match self {
            Self::Ssb | Self::Msg2 | Self::Msg4 | Self::Pdcch | Self::Pdsch => Direction::Downlink,
            Self::Prach | Self::Msg3 | Self::PucchF1 | Self::PucchF3Uci11 | Self::PucchF3Uci22 | Self::Pusch => {
                Direction::Uplink
            }
        }
    }

    /// Shared data channels whose allocation can be resized for a lower rate.
    pub fn is_data(self) -> bool {
        matches!(self, Self::Pdsch | Self::Pusch)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Ssb => "SSB",
            Self::Prach => "PRACH",
            Self::Msg2 => "Msg2",
            Self::Msg3 => "Msg3",
            Self::Msg4 => "Msg4",
            Self::Pdcch => "PDCCH",
            Self::Pdsch => "PDSCH",
            Self::PucchF1 => "PUCCH_F1",
            Self::PucchF3Uci11 => "PUCCH_F3_11",
            Self::PucchF3Uci22 => "PUCCH_F3_22",
            Self::Pusch => "PUSCH",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Channel::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown channel {s:?}")))
    }
}

impl TryFrom<String> for Channel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Channel> for String {
    fn from(c: Channel) -> String {
        c.name().to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for c in Channel::ALL {
            assert_eq!(c.name().parse::<Channel>().unwrap(), c);
        }
        assert_eq!("pusch".parse::<Channel>().unwrap(), Channel::Pusch);
        assert!("PUCCH".parse::<Channel>().is_err());
    }

    #[test]
    fn directions() {
        let ul: Vec<_> = Channel::ALL
            .into_iter()
            .filter(|c| c.direction() == Direction::Uplink)
            .collect();
        assert_eq!(
            ul,
            [
                Channel::Prach,
                Channel::Msg3,
                Channel::PucchF1,
                Channel::PucchF3Uci11,
                Channel::PucchF3Uci22,
                Channel::Pusch
            ]
        );
    }

    #[test]
    fn order_follows_reporting_order() {
        let mut sorted = Channel::ALL;
        sorted.sort();
        assert_eq!(sorted, Channel::ALL);
    }
}
