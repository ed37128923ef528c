//! Fitting scenario antenna gains and noise figures to published results.
//!
//! Two knobs are fitted per scenario:
//!
//! - the gNB antenna gain, which moves every MIL by the same amount, is set
//!   so the reference bottleneck MIL lands on the threshold target;
//! - the UE noise figure, which only moves downlink MILs, is set to the
//!   least-squares fit of the downlink recovery targets.
//!
//! Uplink recoveries do not depend on either knob and are only reported as
//! residuals. Fitted values are rounded to 0.01 dB.

use serde::{Deserialize, Serialize};

use crate::analysis::evaluate_scenario;
use crate::model::{Channel, Dataset, Direction, ProfileLabel, RadioCalibration, ScenarioName};
use crate::transport::RateMode;
use crate::{Error, Result};

const MAX_ITERATIONS: usize = 100;
const CONVERGED_DB: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTarget {
    pub scenario: ScenarioName,
    pub mil_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTarget {
    pub scenario: ScenarioName,
    pub profile: ProfileLabel,
    pub channel: Channel,
    pub recovery_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    #[serde(default, rename = "threshold")]
    pub thresholds: Vec<ThresholdTarget>,
    #[serde(default, rename = "recovery")]
    pub recoveries: Vec<RecoveryTarget>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub radio: Vec<(ScenarioName, RadioCalibration)>,
    /// `(target, achieved)` for each threshold target.
    pub threshold_residuals: Vec<(ThresholdTarget, f64)>,
    /// `(target, achieved)` for each recovery target; a channel that needs no
    /// recovery reports its (non-positive) margin instead.
    pub recovery_residuals: Vec<(RecoveryTarget, f64)>,
}

fn round_centi(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn raw_recovery(report: &crate::analysis::CoverageReport, target: &RecoveryTarget) -> Result<f64> {
    let line = report
        .lines_for(target.profile)
        .and_then(|ls| ls.iter().find(|l| l.channel == target.channel))
        .ok_or_else(|| {
            Error::Config(format!(
                "recovery target {}/{}/{} has no evaluated line",
                target.scenario, target.profile, target.channel
            ))
        })?;
    Ok(report.threshold_mil_db - line.mil_db)
}

fn evaluate(
    dataset: &Dataset,
    scenario: ScenarioName,
    targets: &[&RecoveryTarget],
) -> Result<crate::analysis::CoverageReport> {
    let mut profiles: Vec<_> = targets.iter().map(|t| t.profile).collect();
    profiles.sort();
    profiles.dedup();
    evaluate_scenario(dataset, scenario, &profiles, RateMode::PerSlot)
}

/// Fits gains and noise figures of every scenario that has a threshold target.
/// Scenarios without one keep their current values.
pub fn calibrate(dataset: &Dataset, targets: &CalibrationTargets) -> Result<CalibrationFit> {
    let mut work = dataset.clone();
    for t in &targets.thresholds {
        let downlink: Vec<_> = targets
            .recoveries
            .iter()
            .filter(|r| r.scenario == t.scenario && r.channel.direction() == Direction::Downlink)
            .collect();
        let all_for_scenario: Vec<_> = targets.recoveries.iter().filter(|r| r.scenario == t.scenario).collect();

        let mut converged = false;
        for _ in 0..MAX_ITERATIONS {
            let report = evaluate(&work, t.scenario, &all_for_scenario)?;
            let gain_step = t.mil_db - report.threshold_mil_db;
            work.scenario_mut(t.scenario)?.radio.gnb_antenna_gain_db += gain_step;

            let mut nf_step = 0.0;
            if !downlink.is_empty() {
                let report = evaluate(&work, t.scenario, &all_for_scenario)?;
                let mut sum = 0.0;
                for r in &downlink {
                    sum += r.recovery_db - raw_recovery(&report, r)?;
                }
                nf_step = sum / downlink.len() as f64;
                work.scenario_mut(t.scenario)?.radio.ue_noise_figure_db += nf_step;
            }
            if gain_step.abs() < CONVERGED_DB && nf_step.abs() < CONVERGED_DB {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Config(format!(
                "{}: calibration did not converge; the targets move the bottleneck between links",
                t.scenario
            )));
        }
        let radio = &mut work.scenario_mut(t.scenario)?.radio;
        radio.gnb_antenna_gain_db = round_centi(radio.gnb_antenna_gain_db);
        radio.ue_antenna_gain_db = round_centi(radio.ue_antenna_gain_db);
        radio.gnb_noise_figure_db = round_centi(radio.gnb_noise_figure_db);
        radio.ue_noise_figure_db = round_centi(radio.ue_noise_figure_db);
    }

    let mut threshold_residuals = Vec::new();
    let mut recovery_residuals = Vec::new();
    for t in &targets.thresholds {
        let for_scenario: Vec<_> = targets.recoveries.iter().filter(|r| r.scenario == t.scenario).collect();
        let report = evaluate(&work, t.scenario, &for_scenario)?;
        threshold_residuals.push((t.clone(), report.threshold_mil_db));
        for r in for_scenario {
            recovery_residuals.push((r.clone(), raw_recovery(&report, r)?));
        }
    }
    Ok(CalibrationFit {
        radio: work.scenarios.iter().map(|s| (s.name, s.radio)).collect(),
        threshold_residuals,
        recovery_residuals,
    })
}
