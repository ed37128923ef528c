//! Scenarios, UE profiles, channel allocations and SINR requirements.

mod channel;
mod validate;

pub use channel::{Channel, Direction};
pub use validate::{validate_dataset, Violation};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerology::{prb_bandwidth_hz, Duplex, Numerology};
use crate::transport::{McsTables, TbsInput, TbsScaling};
use crate::{Error, Result};

/// Carriers below this frequency are FR1.
pub const FR1_UPPER_HZ: f64 = 7.125e9;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| Error::Config(format!(
                        concat!("unknown ", stringify!($name), " {:?}"), s
                    )))
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;

            fn try_from(value: String) -> Result<Self> {
                value.parse()
            }
        }

        impl From<$name> for String {
            fn from(v: $name) -> String {
                v.name().to_owned()
            }
        }
    };
}

named_enum!(
    /// Deployment scenario.
    ScenarioName {
        Rural => "Rural",
        Urban => "Urban",
        Indoor => "Indoor",
    }
);

named_enum!(
    /// Device capability class.
    ProfileLabel {
        Reference => "Reference",
        RedCap2Rx => "RedCap2Rx",
        RedCap1Rx => "RedCap1Rx",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrequencyRange {
    Fr1,
    Fr2,
}

impl FrequencyRange {
    pub fn of(carrier_hz: f64) -> Self {
        if carrier_hz < FR1_UPPER_HZ {
            Self::Fr1
        } else {
            Self::Fr2
        }
    }
}

/// Antenna gains and noise figures of one scenario.
///
/// These are not part of the published assumptions; the bundled values are
/// fitted by `linkbudget::calibrate` and kept in a separate file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RadioCalibration {
    pub gnb_antenna_gain_db: f64,
    pub ue_antenna_gain_db: f64,
    pub gnb_noise_figure_db: f64,
    pub ue_noise_figure_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: ScenarioName,
    pub carrier_hz: f64,
    pub duplex: Duplex,
    pub carrier_bw_hz: f64,
    pub numerology: Numerology,
    /// gNB power over the whole carrier bandwidth.
    pub gnb_power_dbm: f64,
    pub gnb_txru_count: u32,
    pub gnb_rx_chains: u32,
    pub ue_power_dbm: f64,
    pub radio: RadioCalibration,
}

impl Scenario {
    pub fn frequency_range(&self) -> FrequencyRange {
        FrequencyRange::of(self.carrier_hz)
    }

    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.carrier_hz > 0.0) {
            problems.push(format!("{}: carrier frequency must be positive", self.name));
        }
        if !(self.carrier_bw_hz > 0.0) {
            problems.push(format!("{}: carrier bandwidth must be positive", self.name));
        }
        if self.gnb_txru_count == 0 || self.gnb_rx_chains == 0 {
            problems.push(format!(
                "{}: gNB TXRU and receive chain counts must be at least 1",
                self.name
            ));
        }
        let expect_tdd = self.name != ScenarioName::Rural;
        if self.duplex.is_tdd() != expect_tdd {
            problems.push(format!(
                "{}: expected {} duplexing, found {}",
                self.name,
                if expect_tdd { "TDD" } else { "FDD" },
                self.duplex
            ));
        }
        problems
    }
}

/// Receive branch count of a profile by band class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RxBranches {
    pub fr1_fdd: u32,
    pub fr1_tdd: u32,
    pub fr2: u32,
}

impl RxBranches {
    pub fn uniform(n: u32) -> Self {
        Self {
            fr1_fdd: n,
            fr1_tdd: n,
            fr2: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeProfile {
    pub label: ProfileLabel,
    pub max_bw_fr1_hz: f64,
    pub max_bw_fr2_hz: f64,
    pub tx_branches: u32,
    /// Extra loss for small-form-factor antennas, applied on both links.
    pub antenna_efficiency_loss_fr1_db: f64,
    pub antenna_efficiency_loss_fr2_db: f64,
    pub rx_branches: RxBranches,
}

impl UeProfile {
    pub fn max_bw_hz(&self, fr: FrequencyRange) -> f64 {
        match fr {
            FrequencyRange::Fr1 => self.max_bw_fr1_hz,
            FrequencyRange::Fr2 => self.max_bw_fr2_hz,
        }
    }

    pub fn antenna_efficiency_loss_db(&self, fr: FrequencyRange) -> f64 {
        match fr {
            FrequencyRange::Fr1 => self.antenna_efficiency_loss_fr1_db,
            FrequencyRange::Fr2 => self.antenna_efficiency_loss_fr2_db,
        }
    }

    pub fn rx_branches_in(&self, scenario: &Scenario) -> u32 {
        match (scenario.frequency_range(), scenario.duplex.is_tdd()) {
            (FrequencyRange::Fr2, _) => self.rx_branches.fr2,
            (FrequencyRange::Fr1, true) => self.rx_branches.fr1_tdd,
            (FrequencyRange::Fr1, false) => self.rx_branches.fr1_fdd,
        }
    }

    pub fn check(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.max_bw_fr1_hz > 0.0 && self.max_bw_fr2_hz > 0.0) {
            problems.push(format!("{}: maximum bandwidths must be positive", self.label));
        }
        let rx = self.rx_branches;
        if self.tx_branches == 0 || rx.fr1_fdd == 0 || rx.fr1_tdd == 0 || rx.fr2 == 0 {
            problems.push(format!("{}: branch counts must be at least 1", self.label));
        }
        if self.tx_branches != 1 {
            problems.push(format!("{}: expected a single transmit branch", self.label));
        }
        if self.antenna_efficiency_loss_fr1_db < 0.0 || self.antenna_efficiency_loss_fr2_db < 0.0 {
            problems.push(format!("{}: antenna efficiency loss cannot be negative", self.label));
        }
        if self.label == ProfileLabel::Reference
            && (self.antenna_efficiency_loss_fr1_db != 0.0 || self.antenna_efficiency_loss_fr2_db != 0.0)
        {
            problems.push("Reference: antenna efficiency loss must be zero".to_owned());
        }
        problems
    }
}

/// Frequency extent of an allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Occupancy {
    /// Whole PRBs at the scenario's subcarrier spacing.
    Prbs(u32),
    /// Explicit width, for signals that are not PRB-scheduled (PRACH).
    Hertz(f64),
}

/// Transport parameters of an MCS-scheduled allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TbsSpec {
    pub mcs_table: String,
    pub mcs_index: u8,
    pub dmrs_symbols: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub overhead_re_per_prb: u32,
    #[serde(default, skip_serializing_if = "is_full")]
    pub scaling: TbsScaling,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub layers: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

fn one() -> u32 {
    1
}

fn is_full(s: &TbsScaling) -> bool {
    *s == TbsScaling::Full
}

/// One channel or message of a scenario with its resources and target.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelAllocation {
    pub channel: Channel,
    pub direction: Direction,
    pub occupancy: Occupancy,
    pub n_symbols: u32,
    /// Free-form performance target, e.g. `BLER 10%`.
    pub target: String,
    pub tbs: Option<TbsSpec>,
    pub target_rate_bps: Option<f64>,
    /// Profiles this allocation applies to; `None` means all.
    pub profiles: Option<Vec<ProfileLabel>>,
}

impl ChannelAllocation {
    pub fn occupied_bw_hz(&self, numerology: Numerology) -> f64 {
        match self.occupancy {
            Occupancy::Prbs(n) => f64::from(n) * prb_bandwidth_hz(numerology),
            Occupancy::Hertz(hz) => hz,
        }
    }

    pub fn n_prb(&self) -> Option<u32> {
        match self.occupancy {
            Occupancy::Prbs(n) => Some(n),
            Occupancy::Hertz(_) => None,
        }
    }

    pub fn applies_to(&self, profile: ProfileLabel) -> bool {
        self.profiles.as_ref().is_none_or(|p| p.contains(&profile))
    }

    pub fn tbs_input(&self, tables: &McsTables) -> Result<Option<TbsInput>> {
        let Some(spec) = &self.tbs else {
            return Ok(None);
        };
        let n_prb = self
            .n_prb()
            .ok_or_else(|| Error::Config(format!("{}: transport parameters need a PRB allocation", self.channel)))?;
        let mcs = tables.lookup(&spec.mcs_table, spec.mcs_index)?;
        let input = TbsInput {
            n_prb,
            n_symbols: self.n_symbols,
            dmrs_re_per_prb: spec.dmrs_symbols * crate::numerology::SUBCARRIERS_PER_PRB,
            overhead_re_per_prb: spec.overhead_re_per_prb,
            scaling: spec.scaling,
            layers: spec.layers,
            mcs,
        };
        input.validate()?;
        Ok(Some(input))
    }

    /// Same allocation resized to `input`, keeping the MCS table name.
    pub fn with_tbs_input(&self, input: &TbsInput) -> Self {
        let mut out = self.clone();
        out.occupancy = Occupancy::Prbs(input.n_prb);
        out.n_symbols = input.n_symbols;
        let table = self.tbs.as_ref().map(|s| s.mcs_table.clone()).unwrap_or_default();
        out.tbs = Some(TbsSpec {
            mcs_table: table,
            mcs_index: input.mcs.index(),
            dmrs_symbols: input.dmrs_re_per_prb / crate::numerology::SUBCARRIERS_PER_PRB,
            overhead_re_per_prb: input.overhead_re_per_prb
                + input.dmrs_re_per_prb % crate::numerology::SUBCARRIERS_PER_PRB,
            scaling: input.scaling,
            layers: input.layers,
        });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrRequirement {
    pub scenario: ScenarioName,
    pub profile: ProfileLabel,
    pub channel: Channel,
    #[serde(rename = "sinr_db")]
    pub required_sinr_db: f64,
}

pub type SinrKey = (ScenarioName, ProfileLabel, Channel);

/// Required SINR per (scenario, profile, channel), one entry per key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SinrTable {
    entries: BTreeMap<SinrKey, f64>,
}

impl SinrTable {
    /// Builds the table, rejecting every duplicated key.
    pub fn from_requirements(rows: impl IntoIterator<Item = SinrRequirement>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut duplicates = Vec::new();
        for row in rows {
            let key = (row.scenario, row.profile, row.channel);
            if entries.insert(key, row.required_sinr_db).is_some() {
                duplicates.push(format!(
                    "duplicate SINR row ({}, {}, {})",
                    row.scenario, row.profile, row.channel
                ));
            }
        }
        if duplicates.is_empty() {
            Ok(Self { entries })
        } else {
            Err(Error::Bundle(duplicates))
        }
    }

    pub fn get(&self, scenario: ScenarioName, profile: ProfileLabel, channel: Channel) -> Option<f64> {
        self.entries.get(&(scenario, profile, channel)).copied()
    }

    pub fn require(&self, scenario: ScenarioName, profile: ProfileLabel, channel: Channel) -> Result<f64> {
        self.get(scenario, profile, channel).ok_or_else(|| Error::MissingSinr {
            scenario: scenario.to_string(),
            profile: profile.to_string(),
            channel: channel.to_string(),
        })
    }

    pub fn set(&mut self, scenario: ScenarioName, profile: ProfileLabel, channel: Channel, sinr_db: f64) {
        self.entries.insert((scenario, profile, channel), sinr_db);
    }

    /// Profiles with at least one requirement in `scenario`.
    pub fn profiles_in(&self, scenario: ScenarioName) -> Vec<ProfileLabel> {
        let mut out: Vec<_> = self
            .entries
            .keys()
            .filter(|(s, _, _)| *s == scenario)
            .map(|(_, p, _)| *p)
            .collect();
        out.dedup();
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = SinrRequirement> + '_ {
        self.entries
            .iter()
            .map(|(&(scenario, profile, channel), &required_sinr_db)| SinrRequirement {
                scenario,
                profile,
                channel,
                required_sinr_db,
            })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A complete, loaded set of inputs.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub scenarios: Vec<Scenario>,
    pub profiles: Vec<UeProfile>,
    pub allocations: BTreeMap<ScenarioName, Vec<ChannelAllocation>>,
    pub sinr: SinrTable,
    pub mcs_tables: McsTables,
}

impl Dataset {
    pub fn scenario(&self, name: ScenarioName) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("no scenario named {name}")))
    }

    pub fn scenario_mut(&mut self, name: ScenarioName) -> Result<&mut Scenario> {
        self.scenarios
            .iter_mut()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("no scenario named {name}")))
    }

    pub fn profile(&self, label: ProfileLabel) -> Result<&UeProfile> {
        self.profiles
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::Config(format!("no profile labelled {label}")))
    }

    /// Allocations of `scenario` that apply to `profile`, in channel order.
    pub fn allocations_for(&self, scenario: ScenarioName, profile: ProfileLabel) -> Vec<&ChannelAllocation> {
        let mut out: Vec<_> = self
            .allocations
            .get(&scenario)
            .into_iter()
            .flatten()
            .filter(|a| a.applies_to(profile))
            .collect();
        out.sort_by_key(|a| a.channel);
        out
    }

    pub fn allocation(
        &self,
        scenario: ScenarioName,
        profile: ProfileLabel,
        channel: Channel,
    ) -> Result<&ChannelAllocation> {
        self.allocations_for(scenario, profile)
            .into_iter()
            .find(|a| a.channel == channel)
            .ok_or_else(|| Error::Config(format!("{scenario}/{profile} has no {channel} allocation")))
    }

    /// RedCap profiles with SINR data in `scenario`.
    pub fn redcap_profiles_in(&self, scenario: ScenarioName) -> Vec<ProfileLabel> {
        self.sinr
            .profiles_in(scenario)
            .into_iter()
            .filter(|p| *p != ProfileLabel::Reference)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_ranges() {
        assert_eq!(FrequencyRange::of(700e6), FrequencyRange::Fr1);
        assert_eq!(FrequencyRange::of(2.6e9), FrequencyRange::Fr1);
        assert_eq!(FrequencyRange::of(28e9), FrequencyRange::Fr2);
    }

    #[test]
    fn labels_parse() {
        assert_eq!("rural".parse::<ScenarioName>().unwrap(), ScenarioName::Rural);
        assert_eq!("RedCap1Rx".parse::<ProfileLabel>().unwrap(), ProfileLabel::RedCap1Rx);
        assert!("Suburban".parse::<ScenarioName>().is_err());
    }

    #[test]
    fn duplicate_sinr_rows_are_named() {
        let row = SinrRequirement {
            scenario: ScenarioName::Rural,
            profile: ProfileLabel::Reference,
            channel: Channel::Pusch,
            required_sinr_db: -2.4,
        };
        let err = SinrTable::from_requirements([row, row]).unwrap_err();
        let Error::Bundle(problems) = err else {
            panic!("expected a bundle error");
        };
        assert_eq!(problems, ["duplicate SINR row (Rural, Reference, PUSCH)"]);
    }

    #[test]
    fn occupancy() {
        let a = ChannelAllocation {
            channel: Channel::Msg3,
            direction: Direction::Uplink,
            occupancy: Occupancy::Prbs(2),
            n_symbols: 14,
            target: "BLER 10%".into(),
            tbs: None,
            target_rate_bps: None,
            profiles: None,
        };
        assert_eq!(a.occupied_bw_hz(Numerology::Scs15), 360e3);
        assert!(a.applies_to(ProfileLabel::RedCap1Rx));
        assert_eq!(a.tbs_input(McsTables::builtin()).unwrap(), None);
    }
}
