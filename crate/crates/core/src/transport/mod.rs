//! Transport block sizing and achieved data rates.
//!
//! The TBS procedure follows the NR PDSCH/PUSCH rules: count usable resource
//! elements, form the intermediate bit count `N_info = S * N_RE * R * Q_m * v`
//! and quantize it, through the TBS table below 3824 bits and through the
//! byte-aligned code-block formula above.
//!
//! Note that the code rate `R` belongs in the `N_info` product even though it
//! is sometimes printed without it; the standard TBS values only come out
//! with it included.

mod tables;

pub use tables::{McsTable, McsTables, TbsTable, PDSCH_QAM64, PUSCH_TP_QAM64, PUSCH_TP_QAM64_LOWSE};

use serde::{Deserialize, Serialize};

use crate::numerology::{slot_duration_s, Numerology, SUBCARRIERS_PER_PRB, SYMBOLS_PER_SLOT};
use crate::{Error, Result};

/// Per-PRB cap on counted resource elements.
pub const MAX_RE_PER_PRB: u32 = 156;

const TABLE_LIMIT_BITS: f64 = 3824.0;

/// One row of an MCS index table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    index: u8,
    modulation_order: u8,
    code_rate_x1024: f64,
}

impl McsEntry {
    pub fn new(index: u8, modulation_order: u8, code_rate_x1024: f64) -> Result<Self> {
        if !matches!(modulation_order, 2 | 4 | 6 | 8) {
            return Err(Error::Config(format!(
                "MCS {index}: modulation order {modulation_order} not in {{2, 4, 6, 8}}"
            )));
        }
        if !(code_rate_x1024 > 0.0 && code_rate_x1024 < 1024.0) {
            return Err(Error::Config(format!(
                "MCS {index}: code rate {code_rate_x1024}/1024 outside (0, 1)"
            )));
        }
        Ok(Self {
            index,
            modulation_order,
            code_rate_x1024,
        })
    }

    pub fn index(&self) -> u8 {
        self.index
    }

    pub fn modulation_order(&self) -> u8 {
        self.modulation_order
    }

    pub fn code_rate_x1024(&self) -> f64 {
        self.code_rate_x1024
    }

    pub fn code_rate(&self) -> f64 {
        self.code_rate_x1024 / 1024.0
    }

    /// Information bits per resource element, `Q_m * R`.
    pub fn spectral_efficiency(&self) -> f64 {
        f64::from(self.modulation_order) * self.code_rate()
    }
}

/// TBS scaling factor applied to `N_info`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum TbsScaling {
    #[default]
    Full,
    Half,
    Quarter,
}

impl TbsScaling {
    pub fn factor(self) -> f64 {
        match self {
            Self::Full => 1.0,
            Self::Half => 0.5,
            Self::Quarter => 0.25,
        }
    }
}

impl TryFrom<f64> for TbsScaling {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        match value {
            1.0 => Ok(Self::Full),
            0.5 => Ok(Self::Half),
            0.25 => Ok(Self::Quarter),
            v => Err(Error::Config(format!("TBS scaling {v} not in {{1, 0.5, 0.25}}"))),
        }
    }
}

impl From<TbsScaling> for f64 {
    fn from(s: TbsScaling) -> f64 {
        s.factor()
    }
}

/// Everything the TBS procedure needs about one scheduled allocation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbsInput {
    pub n_prb: u32,
    pub n_symbols: u32,
    pub dmrs_re_per_prb: u32,
    pub overhead_re_per_prb: u32,
    pub scaling: TbsScaling,
    pub layers: u32,
    pub mcs: McsEntry,
}

impl TbsInput {
    /// Single-layer, unscaled allocation with `dmrs_symbols` full DMRS symbols
    /// (12 REs each) and no other overhead.
    pub fn new(n_prb: u32, n_symbols: u32, dmrs_symbols: u32, mcs: McsEntry) -> Self {
        Self {
            n_prb,
            n_symbols,
            dmrs_re_per_prb: dmrs_symbols * SUBCARRIERS_PER_PRB,
            overhead_re_per_prb: 0,
            scaling: TbsScaling::Full,
            layers: 1,
            mcs,
        }
    }

    pub fn with_scaling(mut self, scaling: TbsScaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_mcs(mut self, mcs: McsEntry) -> Self {
        self.mcs = mcs;
        self
    }

    pub fn with_n_prb(mut self, n_prb: u32) -> Self {
        self.n_prb = n_prb;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_prb == 0 {
            return Err(Error::Config("TBS input needs at least one PRB".into()));
        }
        if !(1..=SYMBOLS_PER_SLOT).contains(&self.n_symbols) {
            return Err(Error::Config(format!(
                "{} allocated symbols outside 1..=14",
                self.n_symbols
            )));
        }
        if self.layers == 0 {
            return Err(Error::Config("TBS input needs at least one layer".into()));
        }
        if self.dmrs_re_per_prb + self.overhead_re_per_prb >= SUBCARRIERS_PER_PRB * self.n_symbols {
            return Err(Error::Config(format!(
                "DMRS ({}) plus overhead ({}) leave no data REs in {} symbols",
                self.dmrs_re_per_prb, self.overhead_re_per_prb, self.n_symbols
            )));
        }
        Ok(())
    }
}

/// Resource elements available for data over the whole allocation.
pub fn n_re(input: &TbsInput) -> Result<u32> {
    input.validate()?;
    let per_prb = SUBCARRIERS_PER_PRB * input.n_symbols - input.dmrs_re_per_prb - input.overhead_re_per_prb;
    Ok(per_prb.min(MAX_RE_PER_PRB) * input.n_prb)
}

fn info_bits_from_re(input: &TbsInput, n_re: u32) -> f64 {
    // integer product first keeps table-rate results exact
    let product =
        f64::from(n_re) * input.mcs.code_rate_x1024 * f64::from(input.mcs.modulation_order) * f64::from(input.layers);
    input.scaling.factor() * product / 1024.0
}

/// Unquantized information bit count `N_info = S * N_RE * R * Q_m * v`.
pub fn intermediate_info_bits(input: &TbsInput) -> Result<f64> {
    Ok(info_bits_from_re(input, n_re(input)?))
}

/// Transport block size in bits using the built-in TBS table.
pub fn tbs(input: &TbsInput) -> Result<u32> {
    tbs_with_table(input, TbsTable::builtin())
}

pub fn tbs_with_table(input: &TbsInput, table: &TbsTable) -> Result<u32> {
    let n_info = intermediate_info_bits(input)?;
    Ok(quantize(n_info, input.mcs.code_rate(), table))
}

fn quantize(n_info: f64, code_rate: f64, table: &TbsTable) -> u32 {
    if n_info <= TABLE_LIMIT_BITS {
        let n = if n_info > 0.0 {
            (n_info.log2().floor() as i32 - 6).max(3)
        } else {
            3
        };
        let step = f64::from(1u32 << n);
        let n_info_q = (step * (n_info / step).floor()).max(24.0);
        return table.ceiling(n_info_q);
    }

    let n = n_info_q_exponent(n_info);
    let step = f64::from(1u32 << n);
    let n_info_q = (step * ((n_info - 24.0) / step).round()).max(3840.0);
    let payload = n_info_q + 24.0;
    let segments = if code_rate <= 0.25 {
        (payload / 3816.0).ceil()
    } else if n_info_q > 8424.0 {
        (payload / 8424.0).ceil()
    } else {
        1.0
    };
    (8.0 * segments * (payload / (8.0 * segments)).ceil() - 24.0) as u32
}

fn n_info_q_exponent(n_info: f64) -> u32 {
    ((n_info - 24.0).log2().floor() as i32 - 5).max(0) as u32
}

/// How the per-slot TBS is turned into a rate on TDD carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// One transport block per slot, every slot.
    #[default]
    PerSlot,
    /// Per-slot rate scaled by the direction's share of pattern time.
    DutyScaled,
}

impl std::fmt::Display for RateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::PerSlot => "per-slot",
            Self::DutyScaled => "duty-scaled",
        })
    }
}

impl std::str::FromStr for RateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-slot" => Ok(Self::PerSlot),
            "duty-scaled" => Ok(Self::DutyScaled),
            other => Err(Error::Config(format!(
                "rate mode {other:?} is neither per-slot nor duty-scaled"
            ))),
        }
    }
}

/// Data rate achieved by sending `tbs_bits` each slot.
pub fn achieved_rate_bps(tbs_bits: u32, numerology: Numerology, duty_fraction: f64, mode: RateMode) -> Result<f64> {
    if !(duty_fraction > 0.0 && duty_fraction <= 1.0) {
        return Err(Error::Domain(format!("duty fraction {duty_fraction} outside (0, 1]")));
    }
    let per_slot = f64::from(tbs_bits) / slot_duration_s(numerology);
    Ok(match mode {
        RateMode::PerSlot => per_slot,
        RateMode::DutyScaled => per_slot * duty_fraction,
    })
}

/// Outcome of searching an MCS table for a rate target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McsChoice {
    Feasible {
        mcs: McsEntry,
        tbs_bits: u32,
        rate_bps: f64,
    },
    /// No entry reaches the target; carries the best rate the table offers.
    Infeasible { best_rate_bps: f64 },
}

impl McsChoice {
    pub fn mcs(&self) -> Option<McsEntry> {
        match self {
            Self::Feasible { mcs, .. } => Some(*mcs),
            Self::Infeasible { .. } => None,
        }
    }
}

/// Smallest MCS index of `table` whose TBS on `allocation` reaches `target_bps`.
///
/// The MCS already set on `allocation` is ignored.
pub fn min_mcs_for_rate(
    target_bps: f64,
    allocation: &TbsInput,
    table: &McsTable,
    numerology: Numerology,
    duty_fraction: f64,
    mode: RateMode,
) -> Result<McsChoice> {
    let mut best = 0.0_f64;
    for &mcs in table.entries() {
        let candidate = allocation.with_mcs(mcs);
        let tbs_bits = tbs(&candidate)?;
        let rate_bps = achieved_rate_bps(tbs_bits, numerology, duty_fraction, mode)?;
        if rate_bps >= target_bps {
            return Ok(McsChoice::Feasible {
                mcs,
                tbs_bits,
                rate_bps,
            });
        }
        best = best.max(rate_bps);
    }
    Ok(McsChoice::Infeasible { best_rate_bps: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pdsch(index: u8) -> McsEntry {
        McsTables::builtin().lookup(PDSCH_QAM64, index).unwrap()
    }

    fn pusch_lowse(index: u8) -> McsEntry {
        McsTables::builtin().lookup(PUSCH_TP_QAM64_LOWSE, index).unwrap()
    }

    #[test]
    fn resource_elements() {
        assert_eq!(n_re(&TbsInput::new(40, 12, 2, pdsch(0))).unwrap(), 4800);
        assert_eq!(n_re(&TbsInput::new(1, 14, 0, pdsch(0))).unwrap(), 156);
        assert_eq!(n_re(&TbsInput::new(2, 14, 3, pdsch(0))).unwrap(), 264);
    }

    #[test]
    fn resource_elements_reject_empty_prb() {
        let mut input = TbsInput::new(1, 2, 2, pdsch(0));
        assert!(n_re(&input).is_err());
        input.dmrs_re_per_prb = 12;
        input.overhead_re_per_prb = 12;
        assert!(n_re(&input).is_err());
        assert!(n_re(&TbsInput::new(0, 14, 2, pdsch(0))).is_err());
        assert!(n_re(&TbsInput::new(1, 15, 2, pdsch(0))).is_err());
    }

    #[test]
    fn info_bits() {
        let input = TbsInput::new(40, 12, 2, pdsch(0));
        assert_eq!(intermediate_info_bits(&input).unwrap(), 1125.0);
        let quarter = input.with_scaling(TbsScaling::Quarter);
        assert_eq!(intermediate_info_bits(&quarter).unwrap(), 0.25 * 1125.0);
        assert_eq!(info_bits_from_re(&input, 0), 0.0);
    }

    // expected values from an independent script of the quantization rules
    #[test]
    fn table_sizes() {
        assert_eq!(tbs(&TbsInput::new(40, 12, 2, pdsch(0))).unwrap(), 1128);
        assert_eq!(tbs(&TbsInput::new(200, 12, 2, pdsch(0))).unwrap(), 5640);
        assert_eq!(tbs(&TbsInput::new(51, 12, 2, pdsch(0))).unwrap(), 1480);
        assert_eq!(tbs(&TbsInput::new(60, 12, 2, pdsch(3))).unwrap(), 3624);
        assert_eq!(tbs(&TbsInput::new(30, 12, 2, pdsch(6))).unwrap(), 3240);
        assert_eq!(tbs(&TbsInput::new(30, 14, 2, pusch_lowse(3))).unwrap(), 552);
        assert_eq!(tbs(&TbsInput::new(66, 14, 2, pusch_lowse(1))).unwrap(), 736);
        assert_eq!(tbs(&TbsInput::new(4, 14, 2, pusch_lowse(6))).unwrap(), 128);
    }

    #[test]
    fn random_access_payloads() {
        // Msg2: 9 bytes with quarter scaling, Msg3: 56 bits
        let msg2 = TbsInput::new(12, 12, 3, pdsch(0)).with_scaling(TbsScaling::Quarter);
        assert_eq!(tbs(&msg2).unwrap(), 72);
        assert_eq!(tbs(&TbsInput::new(2, 14, 3, pdsch(0))).unwrap(), 56);
    }

    #[test]
    fn code_rate_quarter_boundary_is_not_monotone() {
        // R = 1/4 segments at 3816 bits, R just above does not
        let at = TbsInput::new(55, 14, 2, McsEntry::new(0, 2, 256.0).unwrap());
        let above = at.with_mcs(McsEntry::new(0, 2, 257.0).unwrap());
        assert_eq!(tbs(&at).unwrap(), 3976);
        assert_eq!(tbs(&above).unwrap(), 3968);
    }

    #[test]
    fn large_allocation_segments() {
        // 273 PRBs, 64QAM rate 948: N_info well above 8424
        let input = TbsInput::new(273, 14, 1, pdsch(28));
        let bits = tbs(&input).unwrap();
        assert_eq!((bits + 24) % 8, 0);
        let n_info = intermediate_info_bits(&input).unwrap();
        assert!((f64::from(bits) - n_info).abs() / n_info < 0.02);
    }

    #[test]
    fn rates() {
        let r = achieved_rate_bps(1128, Numerology::Scs15, 1.0, RateMode::PerSlot).unwrap();
        assert!((r - 1.128e6).abs() < 1e-6);
        let r = achieved_rate_bps(3624, Numerology::Scs120, 1.0, RateMode::PerSlot).unwrap();
        assert!((r - 28.992e6).abs() < 1e-6);
        assert_eq!(
            achieved_rate_bps(0, Numerology::Scs30, 1.0, RateMode::PerSlot).unwrap(),
            0.0
        );
        let r = achieved_rate_bps(5640, Numerology::Scs30, 104.0 / 140.0, RateMode::DutyScaled).unwrap();
        assert!((r - 11.28e6 * 104.0 / 140.0).abs() < 1e-6);
        assert!(achieved_rate_bps(100, Numerology::Scs30, 0.0, RateMode::PerSlot).is_err());
        assert!(achieved_rate_bps(100, Numerology::Scs30, 1.5, RateMode::PerSlot).is_err());
    }

    #[test]
    fn smallest_mcs_for_indoor_redcap() {
        let table = McsTables::builtin().get(PDSCH_QAM64).unwrap();
        let alloc = TbsInput::new(30, 12, 2, pdsch(0));
        let choice = min_mcs_for_rate(25e6, &alloc, table, Numerology::Scs120, 1.0, RateMode::PerSlot).unwrap();
        let McsChoice::Feasible { mcs, tbs_bits, .. } = choice else {
            panic!("expected a feasible MCS, got {choice:?}");
        };
        assert_eq!((mcs.index(), tbs_bits), (6, 3240));

        let ref_alloc = TbsInput::new(60, 12, 2, pdsch(0));
        let choice = min_mcs_for_rate(25e6, &ref_alloc, table, Numerology::Scs120, 1.0, RateMode::PerSlot).unwrap();
        assert_eq!(choice.mcs().map(|m| m.index()), Some(3));
    }

    #[test]
    fn smallest_mcs_edges() {
        let table = McsTables::builtin().get(PDSCH_QAM64).unwrap();
        let alloc = TbsInput::new(4, 12, 2, pdsch(0));
        let zero = min_mcs_for_rate(0.0, &alloc, table, Numerology::Scs15, 1.0, RateMode::PerSlot).unwrap();
        assert_eq!(zero.mcs().map(|m| m.index()), Some(0));

        // 4 PRBs x 120 REs x 8 bits x 1000 slots/s bounds every table entry
        let ceiling = 4.0 * 120.0 * 8.0 * 1000.0;
        let out = min_mcs_for_rate(ceiling, &alloc, table, Numerology::Scs15, 1.0, RateMode::PerSlot).unwrap();
        let McsChoice::Infeasible { best_rate_bps } = out else {
            panic!("expected infeasible, got {out:?}");
        };
        assert!(best_rate_bps > 0.0 && best_rate_bps < ceiling);
    }

    #[test]
    fn scaling_parses() {
        assert_eq!(TbsScaling::try_from(0.25).unwrap(), TbsScaling::Quarter);
        assert!(TbsScaling::try_from(0.3).is_err());
    }

    // brute-force reference for the table branch: smallest table entry not
    // below the quantized bit count, found by linear scan
    fn table_branch_oracle(n_info: f64) -> u32 {
        let n = ((n_info.log2().floor() as i32) - 6).max(3);
        let step = 2f64.powi(n);
        let q = (step * (n_info / step).floor()).max(24.0);
        *TbsTable::builtin()
            .sizes()
            .iter()
            .find(|&&s| f64::from(s) >= q)
            .unwrap()
    }

    fn arb_input() -> impl Strategy<Value = TbsInput> {
        let table = McsTables::builtin().get(PDSCH_QAM64).unwrap().entries().to_vec();
        (
            1u32..=275,
            4u32..=14,
            1u32..=3,
            prop::sample::select(table),
            1u32..=4,
            0usize..3,
        )
            .prop_map(|(n_prb, n_symbols, dmrs, mcs, layers, s)| {
                let scaling = [TbsScaling::Full, TbsScaling::Half, TbsScaling::Quarter][s];
                let mut input = TbsInput::new(n_prb, n_symbols, dmrs, mcs).with_scaling(scaling);
                input.layers = layers;
                input
            })
    }

    proptest! {
        #[test]
        fn table_branch_matches_scan(input in arb_input(), n_prb in 1u32..=16) {
            let input = input.with_n_prb(n_prb);
            let n_info = intermediate_info_bits(&input).unwrap();
            prop_assume!(n_info > 0.0 && n_info <= 3824.0);
            prop_assert_eq!(tbs(&input).unwrap(), table_branch_oracle(n_info));
        }

        #[test]
        fn monotone_in_prbs(input in arb_input(), extra in 1u32..50) {
            let bigger = input.with_n_prb(input.n_prb + extra);
            prop_assert!(tbs(&bigger).unwrap() >= tbs(&input).unwrap());
        }

        #[test]
        fn monotone_in_layers(input in arb_input()) {
            let mut more = input;
            more.layers += 1;
            prop_assert!(tbs(&more).unwrap() >= tbs(&input).unwrap());
        }

        #[test]
        fn monotone_in_scaling(input in arb_input()) {
            let quarter = tbs(&input.with_scaling(TbsScaling::Quarter)).unwrap();
            let half = tbs(&input.with_scaling(TbsScaling::Half)).unwrap();
            let full = tbs(&input.with_scaling(TbsScaling::Full)).unwrap();
            prop_assert!(quarter <= half && half <= full);
        }

        #[test]
        fn monotone_in_modulation(input in arb_input()) {
            let mcs = input.mcs;
            for q in [2u8, 4, 6, 8] {
                if q <= mcs.modulation_order() { continue; }
                let higher = input.with_mcs(McsEntry::new(mcs.index(), q, mcs.code_rate_x1024()).unwrap());
                prop_assert!(tbs(&higher).unwrap() >= tbs(&input).unwrap());
            }
        }

        // monotone in R on either side of the R = 1/4 segmentation switch
        #[test]
        fn monotone_in_code_rate(input in arb_input(), a in 1.0f64..1023.0, b in 1.0f64..1023.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assume!((lo <= 256.0) == (hi <= 256.0));
            let q = input.mcs.modulation_order();
            let low = input.with_mcs(McsEntry::new(0, q, lo).unwrap());
            let high = input.with_mcs(McsEntry::new(0, q, hi).unwrap());
            prop_assert!(tbs(&high).unwrap() >= tbs(&low).unwrap());
        }
    }
}
