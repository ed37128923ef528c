use std::collections::BTreeSet;
use std::fmt;

use super::{Channel, Dataset, Direction, ProfileLabel, ScenarioName};

/// Tolerance for treating two SINR values as equal.
const SINR_EQ_DB: f64 = 1e-9;

/// One reason a dataset cannot be evaluated as is.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    InvalidScenario(String),
    InvalidProfile(String),
    InvalidAllocation {
        scenario: ScenarioName,
        channel: Channel,
        reason: String,
    },
    UnknownScenario(ScenarioName),
    UnknownProfile(ProfileLabel),
    MissingReference(ScenarioName),
    DuplicateAllocation {
        scenario: ScenarioName,
        profile: ProfileLabel,
        channel: Channel,
    },
    MissingSinr {
        scenario: ScenarioName,
        profile: ProfileLabel,
        channel: Channel,
    },
    OrphanSinr {
        scenario: ScenarioName,
        profile: ProfileLabel,
        channel: Channel,
    },
    DirectionMismatch {
        scenario: ScenarioName,
        channel: Channel,
        declared: Direction,
    },
    BandwidthOverflow {
        scenario: ScenarioName,
        profile: Option<ProfileLabel>,
        channel: Channel,
        occupied_hz: f64,
        limit_hz: f64,
    },
    UplinkInvariance {
        scenario: ScenarioName,
        channel: Channel,
        profiles: (ProfileLabel, ProfileLabel),
        sinr_db: (f64, f64),
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidScenario(why) => write!(f, "invalid scenario: {why}"),
            Self::InvalidProfile(why) => write!(f, "invalid profile: {why}"),
            Self::InvalidAllocation {
                scenario,
                channel,
                reason,
            } => {
                write!(f, "{scenario}/{channel}: invalid allocation: {reason}")
            }
            Self::UnknownScenario(s) => write!(f, "SINR rows reference unknown scenario {s}"),
            Self::UnknownProfile(p) => write!(f, "SINR rows reference unknown profile {p}"),
            Self::MissingReference(s) => write!(f, "{s}: no SINR rows for the Reference profile"),
            Self::DuplicateAllocation {
                scenario,
                profile,
                channel,
            } => {
                write!(f, "{scenario}/{profile}: more than one {channel} allocation")
            }
            Self::MissingSinr {
                scenario,
                profile,
                channel,
            } => {
                write!(f, "{scenario}/{profile}: no SINR requirement for {channel}")
            }
            Self::OrphanSinr {
                scenario,
                profile,
                channel,
            } => {
                write!(f, "{scenario}/{profile}: SINR row for {channel} has no allocation")
            }
            Self::DirectionMismatch {
                scenario,
                channel,
                declared,
            } => write!(
                f,
                "{scenario}/{channel}: declared {declared}, but the channel is {}",
                channel.direction()
            ),
            Self::BandwidthOverflow {
                scenario,
                profile,
                channel,
                occupied_hz,
                limit_hz,
            } => {
                let whose = match profile {
                    Some(p) => format!("{p} maximum"),
                    None => "carrier".to_owned(),
                };
                write!(
                    f,
                    "{scenario}/{channel}: occupies {:.3} MHz, above the {whose} bandwidth of {:.3} MHz",
                    occupied_hz / 1e6,
                    limit_hz / 1e6
                )
            }
            Self::UplinkInvariance {
                scenario,
                channel,
                profiles,
                sinr_db,
            } => write!(
                f,
                "{scenario}/{channel}: uplink SINR differs between {} ({} dB) and {} ({} dB) \
                 despite equal transmit branches and in-band allocation",
                profiles.0, sinr_db.0, profiles.1, sinr_db.1
            ),
        }
    }
}

/// Every problem that would stop `dataset` from being evaluated.
///
/// An empty result means all (scenario, profile, channel) triples that carry
/// SINR data can be evaluated.
pub fn validate_dataset(dataset: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();

    for scenario in &dataset.scenarios {
        out.extend(scenario.check().into_iter().map(Violation::InvalidScenario));
    }
    for profile in &dataset.profiles {
        out.extend(profile.check().into_iter().map(Violation::InvalidProfile));
    }

    let known_scenarios: BTreeSet<_> = dataset.scenarios.iter().map(|s| s.name).collect();
    let known_profiles: BTreeSet<_> = dataset.profiles.iter().map(|p| p.label).collect();
    let mut unknown_s = BTreeSet::new();
    let mut unknown_p = BTreeSet::new();
    for row in dataset.sinr.iter() {
        if !known_scenarios.contains(&row.scenario) {
            unknown_s.insert(row.scenario);
        }
        if !known_profiles.contains(&row.profile) {
            unknown_p.insert(row.profile);
        }
    }
    out.extend(unknown_s.into_iter().map(Violation::UnknownScenario));
    out.extend(unknown_p.into_iter().map(Violation::UnknownProfile));

    for scenario in &dataset.scenarios {
        let name = scenario.name;
        let fr = scenario.frequency_range();
        let allocations = dataset.allocations.get(&name).map(Vec::as_slice).unwrap_or_default();

        for a in allocations {
            if a.direction != a.channel.direction() {
                out.push(Violation::DirectionMismatch {
                    scenario: name,
                    channel: a.channel,
                    declared: a.direction,
                });
            }
            if let Err(e) = a.tbs_input(&dataset.mcs_tables) {
                out.push(Violation::InvalidAllocation {
                    scenario: name,
                    channel: a.channel,
                    reason: e.to_string(),
                });
            }
            let occupied = a.occupied_bw_hz(scenario.numerology);
            if !(occupied > 0.0) {
                out.push(Violation::InvalidAllocation {
                    scenario: name,
                    channel: a.channel,
                    reason: "occupied bandwidth must be positive".into(),
                });
            }
            if occupied > scenario.carrier_bw_hz {
                out.push(Violation::BandwidthOverflow {
                    scenario: name,
                    profile: None,
                    channel: a.channel,
                    occupied_hz: occupied,
                    limit_hz: scenario.carrier_bw_hz,
                });
            }
        }

        let participants = dataset.sinr.profiles_in(name);
        if !participants.contains(&ProfileLabel::Reference) {
            out.push(Violation::MissingReference(name));
        }

        for &label in &participants {
            let Ok(profile) = dataset.profile(label) else {
                continue;
            };
            let applicable = dataset.allocations_for(name, label);
            let mut seen = BTreeSet::new();
            for a in &applicable {
                if !seen.insert(a.channel) {
                    out.push(Violation::DuplicateAllocation {
                        scenario: name,
                        profile: label,
                        channel: a.channel,
                    });
                    continue;
                }
                if dataset.sinr.get(name, label, a.channel).is_none() {
                    out.push(Violation::MissingSinr {
                        scenario: name,
                        profile: label,
                        channel: a.channel,
                    });
                }
                let occupied = a.occupied_bw_hz(scenario.numerology);
                let limit = profile.max_bw_hz(fr);
                if occupied > limit {
                    out.push(Violation::BandwidthOverflow {
                        scenario: name,
                        profile: Some(label),
                        channel: a.channel,
                        occupied_hz: occupied,
                        limit_hz: limit,
                    });
                }
            }
            for channel in Channel::ALL {
                if dataset.sinr.get(name, label, channel).is_some() && !seen.contains(&channel) {
                    out.push(Violation::OrphanSinr {
                        scenario: name,
                        profile: label,
                        channel,
                    });
                }
            }
        }

        // uplink SINR must not depend on the profile when the allocation fits
        // inside both bandwidths and transmit branches agree
        for (i, &first) in participants.iter().enumerate() {
            for &second in &participants[i + 1..] {
                let (Ok(p1), Ok(p2)) = (dataset.profile(first), dataset.profile(second)) else {
                    continue;
                };
                if p1.tx_branches != p2.tx_branches {
                    continue;
                }
                let limit = p1.max_bw_hz(fr).min(p2.max_bw_hz(fr));
                for channel in Channel::ALL.into_iter().filter(|c| c.direction() == Direction::Uplink) {
                    let (Ok(a1), Ok(a2)) = (
                        dataset.allocation(name, first, channel),
                        dataset.allocation(name, second, channel),
                    ) else {
                        continue;
                    };
                    let bw = a1
                        .occupied_bw_hz(scenario.numerology)
                        .max(a2.occupied_bw_hz(scenario.numerology));
                    if bw > limit {
                        continue;
                    }
                    let (Some(s1), Some(s2)) = (
                        dataset.sinr.get(name, first, channel),
                        dataset.sinr.get(name, second, channel),
                    ) else {
                        continue;
                    };
                    if (s1 - s2).abs() > SINR_EQ_DB {
                        out.push(Violation::UplinkInvariance {
                            scenario: name,
                            channel,
                            profiles: (first, second),
                            sinr_db: (s1, s2),
                        });
                    }
                }
            }
        }
    }
    out
}
