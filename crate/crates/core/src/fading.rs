//! Monte Carlo outage margins for maximal-ratio combining over flat Rayleigh
//! fading.
//!
//! With `N` i.i.d. Rayleigh branches the combined SNR is the mean branch SNR
//! times a sum of `N` unit-mean exponentials, i.e. a Gamma(`N`, 1) variate.
//! The margin for outage probability `p` is the mean SNR, relative to the
//! required SNR, at which `P(combined < required) = p`: `-10 log10(q_p)` with
//! `q_p` the `p`-quantile of that sum.
//!
//! The flat-fading penalty of dropping branches bounds, from above, what a
//! frequency-selective coded link loses.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linkbudget::db;
use crate::{Error, Result};

/// Minimum expected number of outage samples.
pub const MIN_OUTAGE_SAMPLES: f64 = 100.0;

pub const DEFAULT_PARTITIONS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutageSpec {
    pub branches: u32,
    pub outage_prob: OutageProb,
    pub samples: u64,
    pub seed: u64,
    /// Number of independently seeded sample streams.
    pub partitions: u32,
}

/// Probability in `(0, 0.5]`, stored as its bit pattern so specs stay `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct OutageProb(u64);

impl OutageProb {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 0.5) {
            return Err(Error::Config(format!("outage probability {p} outside (0, 0.5]")));
        }
        Ok(Self(p.to_bits()))
    }

    pub fn get(self) -> f64 {
        f64::from_bits(self.0)
    }
}

impl TryFrom<f64> for OutageProb {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<OutageProb> for f64 {
    fn from(p: OutageProb) -> f64 {
        p.get()
    }
}

impl OutageSpec {
    pub fn new(branches: u32, outage_prob: f64, samples: u64, seed: u64) -> Result<Self> {
        let spec = Self {
            branches,
            outage_prob: OutageProb::new(outage_prob)?,
            samples,
            seed,
            partitions: DEFAULT_PARTITIONS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_partitions(mut self, partitions: u32) -> Result<Self> {
        self.partitions = partitions;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches == 0 {
            return Err(Error::Config("MRC needs at least one branch".into()));
        }
        if self.samples == 0 || self.partitions == 0 {
            return Err(Error::Config("sample and partition counts must be at least 1".into()));
        }
        let expected = self.samples as f64 * self.outage_prob.get();
        if expected < MIN_OUTAGE_SAMPLES {
            return Err(Error::Config(format!(
                "{} samples at outage {} give {expected:.1} outage events; need at least {MIN_OUTAGE_SAMPLES}",
                self.samples,
                self.outage_prob.get()
            )));
        }
        Ok(())
    }

    /// 0-based index of the order statistic used as the quantile estimate,
    /// `ceil(samples * p) - 1`.
    fn quantile_rank(&self) -> usize {
        let k = (self.samples as f64 * self.outage_prob.get() - 1e-9).ceil() as usize;
        k.max(1) - 1
    }
}

fn partition_samples(spec: &OutageSpec, partition: u32) -> Vec<f64> {
    let per = spec.samples / u64::from(spec.partitions);
    let extra = spec.samples % u64::from(spec.partitions);
    let count = per + u64::from(u64::from(partition) < extra);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(u64::from(partition));
    (0..count)
        .map(|_| (0..spec.branches).map(|_| -> f64 { Exp1.sample(&mut rng) }).sum())
        .collect()
}

/// Combined-power samples, in partition order. Deterministic for a given
/// `(seed, samples, partitions)`.
pub fn combined_power_samples(spec: &OutageSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let parts: Vec<Vec<f64>> = (0..spec.partitions)
        .into_par_iter()
        .map(|k| partition_samples(spec, k))
        .collect();
    Ok(parts.concat())
}

/// Monte Carlo estimate of the MRC outage margin in dB.
pub fn mrc_outage_snr_db(spec: &OutageSpec) -> Result<f64> {
    let mut samples = combined_power_samples(spec)?;
    let rank = spec.quantile_rank();
    let (_, q, _) = samples.select_nth_unstable_by(rank, f64::total_cmp);
    Ok(-db(*q))
}

/// `P(X < x)` for `X ~ Gamma(n, 1)`, summed as `e^-x * sum_{k >= n} x^k / k!`
/// so small tails keep full precision.
fn gamma_lower_tail(n: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut term = (-x).exp();
    for k in 1..=n {
        term *= x / f64::from(k);
    }
    let mut sum = 0.0;
    let mut k = n;
    while term > sum * 1e-17 || k < n + 1 {
        sum += term;
        k += 1;
        term *= x / f64::from(k);
        if k > n + 10_000 {
            break;
        }
    }
    sum
}

/// Exact outage margin in dB from the Gamma(`branches`, 1) quantile.
pub fn closed_form_outage_snr_db(branches: u32, outage_prob: f64) -> Result<f64> {
    if branches == 0 {
        return Err(Error::Config("MRC needs at least one branch".into()));
    }
    OutageProb::new(outage_prob)?;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while gamma_lower_tail(branches, hi) < outage_prob {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_lower_tail(branches, mid) < outage_prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(-db(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPenalty {
    pub from_branches: u32,
    pub to_branches: u32,
    pub outage_prob: f64,
    /// Monte Carlo margin difference, `margin(to) - margin(from)`.
    pub monte_carlo_db: f64,
    pub closed_form_db: f64,
    /// Coherent combining gain lost, `10 log10(from / to)`; not included in
    /// the margins, which are per-branch SNRs.
    pub array_gain_db: f64,
}

/// Extra mean per-branch SNR needed after reducing MRC branches from
/// `n_from` to `n_to` at the same outage probability.
pub fn branch_reduction_penalty_db(
    n_from: u32,
    n_to: u32,
    outage_prob: f64,
    samples: u64,
    seed: u64,
) -> Result<BranchPenalty> {
    if n_to == 0 || n_to > n_from {
        return Err(Error::Domain(format!(
            "branch reduction needs n_from >= n_to >= 1, got {n_from} -> {n_to}"
        )));
    }
    let (monte_carlo_db, closed_form_db) = if n_from == n_to {
        (0.0, 0.0)
    } else {
        let to = mrc_outage_snr_db(&OutageSpec::new(n_to, outage_prob, samples, seed)?)?;
        let from = mrc_outage_snr_db(&OutageSpec::new(n_from, outage_prob, samples, seed)?)?;
        let exact = closed_form_outage_snr_db(n_to, outage_prob)? - closed_form_outage_snr_db(n_from, outage_prob)?;
        (to - from, exact)
    };
    Ok(BranchPenalty {
        from_branches: n_from,
        to_branches: n_to,
        outage_prob,
        monte_carlo_db,
        closed_form_db,
        array_gain_db: db(f64::from(n_from) / f64::from(n_to)),
    })
}
