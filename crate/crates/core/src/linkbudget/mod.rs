//! Maximum isotropic loss (MIL) and maximum coupling loss (MCL) per channel.
//!
//! For a transmitter of power `P` over the occupied bandwidth `B`:
//!
//! ```text
//! MIL = P + G_tx + G_rx - NF_rx - N(B) - SINR_req - L_eff
//! MCL = MIL - G_tx - G_rx
//! ```
//!
//! where `N(B) = -174 dBm/Hz + 10 log10(B)`. Downlink power is shared by
//! spectral density over the carrier, so on the downlink the bandwidth terms
//! cancel and MIL depends only on the SINR requirement. The uplink transmitter
//! puts its full power into the allocation.

mod calibrate;

pub use calibrate::{calibrate, CalibrationFit, CalibrationTargets, RecoveryTarget, ThresholdTarget};

use serde::{Deserialize, Serialize};

use crate::model::Channel;
use crate::model::{ChannelAllocation, Direction, ProfileLabel, Scenario, ScenarioName, SinrTable, UeProfile};
use crate::{Error, Result};

/// Thermal noise density at 290 K.
pub const NOISE_DENSITY_DBM_PER_HZ: f64 = -174.0;

pub fn db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

/// Thermal noise power over `bw_hz`.
pub fn thermal_noise_dbm(bw_hz: f64) -> Result<f64> {
    if !(bw_hz > 0.0) || !bw_hz.is_finite() {
        return Err(Error::Domain(format!(
            "noise bandwidth must be positive, got {bw_hz} Hz"
        )));
    }
    Ok(NOISE_DENSITY_DBM_PER_HZ + db(bw_hz))
}

/// Transmit power inside the allocation.
pub fn tx_power_over_allocation_dbm(
    scenario: &Scenario,
    allocation: &ChannelAllocation,
    direction: Direction,
) -> Result<f64> {
    let occupied = allocation.occupied_bw_hz(scenario.numerology);
    match direction {
        Direction::Uplink => Ok(scenario.ue_power_dbm),
        Direction::Downlink => {
            if !(occupied > 0.0) || occupied > scenario.carrier_bw_hz {
                return Err(Error::Config(format!(
                    "{}/{}: downlink allocation of {occupied} Hz does not fit the {} Hz carrier",
                    scenario.name, allocation.channel, scenario.carrier_bw_hz
                )));
            }
            Ok(scenario.gnb_power_dbm + db(occupied / scenario.carrier_bw_hz))
        }
    }
}

/// Every term of one channel's link budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetLine {
    pub scenario: ScenarioName,
    pub profile: ProfileLabel,
    pub channel: Channel,
    pub direction: Direction,
    pub occupied_bw_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_antenna_gain_db: f64,
    pub rx_antenna_gain_db: f64,
    pub rx_noise_figure_db: f64,
    pub thermal_noise_dbm: f64,
    pub required_sinr_db: f64,
    pub antenna_efficiency_loss_db: f64,
    pub mil_db: f64,
    pub mcl_db: f64,
}

impl LinkBudgetLine {
    /// MIL recomputed from the stored terms.
    pub fn term_sum_db(&self) -> f64 {
        self.tx_power_dbm + self.tx_antenna_gain_db + self.rx_antenna_gain_db
            - self.rx_noise_figure_db
            - self.thermal_noise_dbm
            - self.required_sinr_db
            - self.antenna_efficiency_loss_db
    }
}

/// Link budget of `allocation` for `profile`, looking up the SINR requirement.
pub fn evaluate_channel(
    scenario: &Scenario,
    profile: &UeProfile,
    allocation: &ChannelAllocation,
    sinr: &SinrTable,
) -> Result<LinkBudgetLine> {
    let required = sinr.require(scenario.name, profile.label, allocation.channel)?;
    evaluate_with_sinr(scenario, profile, allocation, required)
}

/// Link budget of `allocation` for `profile` at a given SINR requirement.
pub fn evaluate_with_sinr(
    scenario: &Scenario,
    profile: &UeProfile,
    allocation: &ChannelAllocation,
    required_sinr_db: f64,
) -> Result<LinkBudgetLine> {
    let direction = allocation.channel.direction();
    let radio = scenario.radio;
    let occupied_bw_hz = allocation.occupied_bw_hz(scenario.numerology);
    let tx_power_dbm = tx_power_over_allocation_dbm(scenario, allocation, direction)?;
    let thermal_noise_dbm = thermal_noise_dbm(occupied_bw_hz)?;
    let (tx_antenna_gain_db, rx_antenna_gain_db, rx_noise_figure_db) = match direction {
        Direction::Downlink => (
            radio.gnb_antenna_gain_db,
            radio.ue_antenna_gain_db,
            radio.ue_noise_figure_db,
        ),
        Direction::Uplink => (
            radio.ue_antenna_gain_db,
            radio.gnb_antenna_gain_db,
            radio.gnb_noise_figure_db,
        ),
    };
    let antenna_efficiency_loss_db = profile.antenna_efficiency_loss_db(scenario.frequency_range());

    let mut line = LinkBudgetLine {
        scenario: scenario.name,
        profile: profile.label,
        channel: allocation.channel,
        direction,
        occupied_bw_hz,
        tx_power_dbm,
        tx_antenna_gain_db,
        rx_antenna_gain_db,
        rx_noise_figure_db,
        thermal_noise_dbm,
        required_sinr_db,
        antenna_efficiency_loss_db,
        mil_db: 0.0,
        mcl_db: 0.0,
    };
    line.mil_db = line.term_sum_db();
    line.mcl_db = line.mil_db - tx_antenna_gain_db - rx_antenna_gain_db;
    Ok(line)
}

/// Link budget lines for every allocation of `profile` in `scenario`, in
/// channel order.
pub fn evaluate_profile(
    dataset: &crate::model::Dataset,
    scenario: ScenarioName,
    profile: ProfileLabel,
) -> Result<Vec<LinkBudgetLine>> {
    let s = dataset.scenario(scenario)?;
    let p = dataset.profile(profile)?;
    dataset
        .allocations_for(scenario, profile)
        .into_iter()
        .map(|a| evaluate_channel(s, p, a, &dataset.sinr))
        .collect()
}
