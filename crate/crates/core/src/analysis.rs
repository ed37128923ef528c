//! Bottleneck identification, coverage threshold and recovery computation.
//!
//! The reference UE's weakest channel sets the threshold MIL for a scenario.
//! Every RedCap channel whose MIL falls below that threshold needs the
//! difference recovered.

use serde::{Deserialize, Serialize};

use crate::linkbudget::{db, evaluate_profile, evaluate_with_sinr, LinkBudgetLine};
use crate::model::{Channel, Dataset, Direction, ProfileLabel, ScenarioName};
use crate::numerology::duty_fractions;
use crate::transport::{achieved_rate_bps, tbs, RateMode, TbsInput};
use crate::{Error, Result};

/// MIL values closer than this are treated as tied.
pub const TIE_TOLERANCE_DB: f64 = 1e-9;

/// Recoveries below this are shown as zero in human-readable output.
pub const DISPLAY_FLOOR_DB: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bottleneck {
    pub channel: Channel,
    pub mil_db: f64,
    /// Other channels within [`TIE_TOLERANCE_DB`] of the minimum.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tied_with: Vec<Channel>,
}

/// Channel with the lowest MIL; ties go to the earlier channel.
pub fn find_bottleneck(lines: &[LinkBudgetLine]) -> Result<Bottleneck> {
    let min = lines
        .iter()
        .min_by(|a, b| a.mil_db.total_cmp(&b.mil_db).then(a.channel.cmp(&b.channel)))
        .ok_or_else(|| Error::Domain("cannot find the bottleneck of an empty channel list".into()))?;
    let mut tied: Vec<_> = lines
        .iter()
        .filter(|l| (l.mil_db - min.mil_db).abs() <= TIE_TOLERANCE_DB)
        .map(|l| l.channel)
        .collect();
    tied.sort();
    tied.dedup();
    let channel = tied[0];
    let mil_db = lines
        .iter()
        .filter(|l| l.channel == channel)
        .map(|l| l.mil_db)
        .fold(f64::INFINITY, f64::min);
    tied.remove(0);
    Ok(Bottleneck {
        channel,
        mil_db,
        tied_with: tied,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileLines {
    pub profile: ProfileLabel,
    pub lines: Vec<LinkBudgetLine>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub profile: ProfileLabel,
    pub channel: Channel,
    pub recovery_db: f64,
}

impl Recovery {
    /// Value for display at 0.1 dB reporting precision.
    pub fn display_db(&self) -> f64 {
        if self.recovery_db < DISPLAY_FLOOR_DB {
            0.0
        } else {
            self.recovery_db
        }
    }
}

/// Achieved rate of a rate-targeted data allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub profile: ProfileLabel,
    pub channel: Channel,
    pub tbs_bits: u32,
    pub mode: RateMode,
    pub achieved_bps: f64,
    pub target_bps: f64,
}

impl RateCheck {
    pub fn meets_target(&self) -> bool {
        self.achieved_bps >= self.target_bps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A data allocation does not reach its stated rate target.
    RateShortfall {
        scenario: ScenarioName,
        profile: ProfileLabel,
        channel: Channel,
        mode: RateMode,
        tbs_bits: u32,
        achieved_bps: f64,
        target_bps: f64,
    },
    /// Several reference channels share the minimum MIL.
    BottleneckTie {
        scenario: ScenarioName,
        chosen: Channel,
        tied_with: Vec<Channel>,
    },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::RateShortfall {
                scenario,
                profile,
                channel,
                mode,
                tbs_bits,
                achieved_bps,
                target_bps,
            } => write!(
                f,
                "{scenario}/{profile} {channel}: TBS {tbs_bits} bits gives {:.3} Mbps ({mode}), below the {:.3} Mbps target",
                achieved_bps / 1e6,
                target_bps / 1e6
            ),
            Self::BottleneckTie {
                scenario,
                chosen,
                tied_with,
            } => {
                let others: Vec<_> = tied_with.iter().map(|c| c.name()).collect();
                write!(f, "{scenario}: bottleneck {chosen} ties with {}", others.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: ScenarioName,
    pub reference_lines: Vec<LinkBudgetLine>,
    pub redcap_lines: Vec<ProfileLines>,
    pub bottleneck: Bottleneck,
    pub threshold_mil_db: f64,
    /// Sorted by descending recovery.
    pub recoveries: Vec<Recovery>,
    #[serde(default)]
    pub rate_checks: Vec<RateCheck>,
    #[serde(default)]
    pub warnings: Vec<Warning>,
}

impl CoverageReport {
    pub fn recovery(&self, profile: ProfileLabel, channel: Channel) -> Option<f64> {
        self.recoveries
            .iter()
            .find(|r| r.profile == profile && r.channel == channel)
            .map(|r| r.recovery_db)
    }

    pub fn lines_for(&self, profile: ProfileLabel) -> Option<&[LinkBudgetLine]> {
        if profile == ProfileLabel::Reference {
            return Some(&self.reference_lines);
        }
        self.redcap_lines
            .iter()
            .find(|p| p.profile == profile)
            .map(|p| p.lines.as_slice())
    }
}

fn recoveries_against(threshold: f64, redcap: &[ProfileLines]) -> Vec<Recovery> {
    let mut out: Vec<_> = redcap
        .iter()
        .flat_map(|p| {
            p.lines.iter().filter_map(move |l| {
                let recovery_db = threshold - l.mil_db;
                (recovery_db > 0.0).then_some(Recovery {
                    profile: p.profile,
                    channel: l.channel,
                    recovery_db,
                })
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.recovery_db
            .total_cmp(&a.recovery_db)
            .then(a.profile.cmp(&b.profile))
            .then(a.channel.cmp(&b.channel))
    });
    out
}

/// Threshold from the reference lines and the recovery each RedCap channel
/// needs to meet it.
pub fn coverage_recoveries(
    reference_lines: Vec<LinkBudgetLine>,
    redcap_lines: Vec<ProfileLines>,
) -> Result<CoverageReport> {
    let scenario = reference_lines
        .first()
        .map(|l| l.scenario)
        .ok_or_else(|| Error::Domain("reference line list is empty".into()))?;
    if redcap_lines.is_empty() || redcap_lines.iter().any(|p| p.lines.is_empty()) {
        return Err(Error::Domain("RedCap line lists must be non-empty".into()));
    }
    let all = reference_lines.iter().chain(redcap_lines.iter().flat_map(|p| &p.lines));
    if let Some(stray) = all.clone().find(|l| l.scenario != scenario) {
        return Err(Error::Config(format!(
            "cannot mix scenarios {scenario} and {} in one report",
            stray.scenario
        )));
    }
    if let Some(stray) = reference_lines.iter().find(|l| l.profile != ProfileLabel::Reference) {
        return Err(Error::Config(format!(
            "reference lines contain a {} line",
            stray.profile
        )));
    }
    for p in &redcap_lines {
        if p.lines.iter().any(|l| l.profile != p.profile) {
            return Err(Error::Config(format!(
                "lines filed under {} belong to another profile",
                p.profile
            )));
        }
    }

    let bottleneck = find_bottleneck(&reference_lines)?;
    let threshold_mil_db = bottleneck.mil_db;
    let recoveries = recoveries_against(threshold_mil_db, &redcap_lines);
    let mut warnings = Vec::new();
    if !bottleneck.tied_with.is_empty() {
        warnings.push(Warning::BottleneckTie {
            scenario,
            chosen: bottleneck.channel,
            tied_with: bottleneck.tied_with.clone(),
        });
    }
    Ok(CoverageReport {
        scenario,
        reference_lines,
        redcap_lines,
        bottleneck,
        threshold_mil_db,
        recoveries,
        rate_checks: Vec::new(),
        warnings,
    })
}

fn rate_checks(
    dataset: &Dataset,
    scenario: ScenarioName,
    profile: ProfileLabel,
    mode: RateMode,
) -> Result<Vec<RateCheck>> {
    let s = dataset.scenario(scenario)?;
    let (dl, ul) = duty_fractions(&s.duplex);
    let mut out = Vec::new();
    for a in dataset.allocations_for(scenario, profile) {
        let (Some(target_bps), Some(input)) = (a.target_rate_bps, a.tbs_input(&dataset.mcs_tables)?) else {
            continue;
        };
        let duty = match a.channel.direction() {
            Direction::Downlink => dl,
            Direction::Uplink => ul,
        };
        let tbs_bits = tbs(&input)?;
        out.push(RateCheck {
            profile,
            channel: a.channel,
            tbs_bits,
            mode,
            achieved_bps: achieved_rate_bps(tbs_bits, s.numerology, duty, mode)?,
            target_bps,
        });
    }
    Ok(out)
}

/// Full evaluation of one scenario: reference threshold, RedCap recoveries,
/// rate checks and warnings.
///
/// `profiles` selects the RedCap profiles; when empty every RedCap profile
/// with SINR data for the scenario is used.
pub fn evaluate_scenario(
    dataset: &Dataset,
    scenario: ScenarioName,
    profiles: &[ProfileLabel],
    mode: RateMode,
) -> Result<CoverageReport> {
    let selected: Vec<ProfileLabel> = if profiles.is_empty() {
        dataset.redcap_profiles_in(scenario)
    } else {
        profiles
            .iter()
            .copied()
            .filter(|p| *p != ProfileLabel::Reference)
            .collect()
    };
    if selected.is_empty() {
        return Err(Error::Config(format!("{scenario}: no RedCap profile to evaluate")));
    }
    let reference_lines = evaluate_profile(dataset, scenario, ProfileLabel::Reference)?;
    let redcap_lines = selected
        .iter()
        .map(|&profile| {
            Ok(ProfileLines {
                profile,
                lines: evaluate_profile(dataset, scenario, profile)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = coverage_recoveries(reference_lines, redcap_lines)?;

    for profile in std::iter::once(ProfileLabel::Reference).chain(selected) {
        for check in rate_checks(dataset, scenario, profile, mode)? {
            if !check.meets_target() {
                report.warnings.push(Warning::RateShortfall {
                    scenario,
                    profile,
                    channel: check.channel,
                    mode,
                    tbs_bits: check.tbs_bits,
                    achieved_bps: check.achieved_bps,
                    target_bps: check.target_bps,
                });
            }
            report.rate_checks.push(check);
        }
    }
    Ok(report)
}

/// SINR requirement shift for moving between spectral efficiencies, from a
/// constant gap to capacity: `SINR ~ 2^SE - 1`.
pub fn sinr_shift_for_efficiency_db(from_bits_per_re: f64, to_bits_per_re: f64) -> f64 {
    db((to_bits_per_re.exp2() - 1.0) / (from_bits_per_re.exp2() - 1.0))
}

/// A channel re-evaluated at a different allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReduction {
    pub report: CoverageReport,
    pub profile: ProfileLabel,
    pub channel: Channel,
    pub tbs_input: TbsInput,
    pub tbs_bits: u32,
    pub achieved_rate_bps: f64,
    pub required_sinr_db: f64,
    /// Recovery of the re-evaluated channel; zero or negative means covered.
    pub recovery_db: f64,
}

/// Re-evaluates one RedCap data channel with `new_input` and recomputes its
/// recovery against the unchanged threshold.
///
/// The SINR requirement is held when the MCS is unchanged; otherwise it
/// follows [`sinr_shift_for_efficiency_db`] unless `sinr_override_db` is set.
pub fn what_if_rate_reduction(
    dataset: &Dataset,
    report: &CoverageReport,
    profile: ProfileLabel,
    channel: Channel,
    new_input: &TbsInput,
    sinr_override_db: Option<f64>,
    mode: RateMode,
) -> Result<RateReduction> {
    if !channel.is_data() {
        return Err(Error::Unsupported(format!(
            "{channel} is not a data channel; only PDSCH and PUSCH can trade rate for coverage"
        )));
    }
    if profile == ProfileLabel::Reference {
        return Err(Error::Unsupported(
            "the reference profile defines the threshold and is not re-evaluated".into(),
        ));
    }
    let scenario = dataset.scenario(report.scenario)?;
    let ue = dataset.profile(profile)?;
    let allocation = dataset.allocation(report.scenario, profile, channel)?;
    let old_input = allocation.tbs_input(&dataset.mcs_tables)?.ok_or_else(|| {
        Error::Unsupported(format!(
            "{}/{profile} {channel} has no transport parameters",
            report.scenario
        ))
    })?;
    let profile_lines = report
        .redcap_lines
        .iter()
        .position(|p| p.profile == profile)
        .ok_or_else(|| Error::Config(format!("report has no lines for {profile}")))?;
    let line_index = report.redcap_lines[profile_lines]
        .lines
        .iter()
        .position(|l| l.channel == channel)
        .ok_or_else(|| Error::Config(format!("report has no {channel} line for {profile}")))?;
    let old_line = &report.redcap_lines[profile_lines].lines[line_index];

    let required_sinr_db = match sinr_override_db {
        Some(v) => v,
        None if new_input.mcs == old_input.mcs => old_line.required_sinr_db,
        None => {
            old_line.required_sinr_db
                + sinr_shift_for_efficiency_db(old_input.mcs.spectral_efficiency(), new_input.mcs.spectral_efficiency())
        }
    };

    let resized = allocation.with_tbs_input(new_input);
    let line = evaluate_with_sinr(scenario, ue, &resized, required_sinr_db)?;
    let mut updated = report.clone();
    updated.redcap_lines[profile_lines].lines[line_index] = line.clone();
    updated.recoveries = recoveries_against(updated.threshold_mil_db, &updated.redcap_lines);

    let (dl, ul) = duty_fractions(&scenario.duplex);
    let duty = match channel.direction() {
        Direction::Downlink => dl,
        Direction::Uplink => ul,
    };
    let tbs_bits = tbs(new_input)?;
    let achieved_rate_bps = achieved_rate_bps(tbs_bits, scenario.numerology, duty, mode)?;
    if let Some(check) = updated
        .rate_checks
        .iter_mut()
        .find(|c| c.profile == profile && c.channel == channel)
    {
        check.tbs_bits = tbs_bits;
        check.achieved_bps = achieved_rate_bps;
    }
    Ok(RateReduction {
        recovery_db: updated.threshold_mil_db - line.mil_db,
        report: updated,
        profile,
        channel,
        tbs_input: *new_input,
        tbs_bits,
        achieved_rate_bps,
        required_sinr_db,
    })
}

/// Highest-rate allocation of a RedCap data channel that needs no coverage
/// recovery, searching fewer PRBs and lower MCS indices than the configured
/// allocation. `None` when even the smallest allocation stays below threshold.
pub fn max_rate_at_threshold(
    dataset: &Dataset,
    report: &CoverageReport,
    profile: ProfileLabel,
    channel: Channel,
    mode: RateMode,
) -> Result<Option<RateReduction>> {
    let allocation = dataset.allocation(report.scenario, profile, channel)?;
    let current = allocation.tbs_input(&dataset.mcs_tables)?.ok_or_else(|| {
        Error::Unsupported(format!(
            "{}/{profile} {channel} has no transport parameters",
            report.scenario
        ))
    })?;
    let table_name = &allocation.tbs.as_ref().expect("transport parameters present").mcs_table;
    let table = dataset
        .mcs_tables
        .get(table_name)
        .ok_or_else(|| Error::Config(format!("unknown MCS table {table_name:?}")))?;

    let mut best: Option<RateReduction> = None;
    for mcs in table.entries().iter().filter(|e| e.index() <= current.mcs.index()) {
        for n_prb in 1..=current.n_prb {
            let candidate = current.with_mcs(*mcs).with_n_prb(n_prb);
            if candidate.validate().is_err() {
                continue;
            }
            let outcome = what_if_rate_reduction(dataset, report, profile, channel, &candidate, None, mode)?;
            if outcome.recovery_db > 0.0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => {
                    outcome.achieved_rate_bps > b.achieved_rate_bps
                        || (outcome.achieved_rate_bps == b.achieved_rate_bps && outcome.recovery_db < b.recovery_db)
                }
            };
            if better {
                best = Some(outcome);
            }
        }
    }
    Ok(best)
}
