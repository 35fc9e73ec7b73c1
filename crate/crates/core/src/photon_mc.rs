//! Monte Carlo photon-fate sampler.
//!
//! Each emitted photon first enters the cavity mode with probability `beta`
//! (otherwise it is lost to leaky modes), then leaves the mode through one
//! channel chosen with probability proportional to that channel's loss rate.
//!
//! Photons are drawn in fixed batches of [`BATCH`]; batch `k` uses a ChaCha8
//! generator keyed by the seed with stream id `k`, so a tally depends only on
//! the seed and photon count, never on how batches are scheduled.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::loss_budget::LossBudget;
use crate::multilayer::EscapeSplit;

pub const BATCH: u64 = 1 << 16;
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9), 65536-photon batches, stream = batch index";

/// Branching weights. Escape weights are loss rates `1/Q` of each channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub into_mode: f64,
    pub top_mirror: f64,
    pub bottom_mirror: f64,
    pub extrinsic: f64,
    pub sidewall: f64,
}

impl ChannelRates {
    pub fn new(into_mode: f64, top_mirror: f64, bottom_mirror: f64, extrinsic: f64, sidewall: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&into_mode) {
            return Err(domain("beta must lie in [0, 1]"));
        }
        let w = [top_mirror, bottom_mirror, extrinsic, sidewall];
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(domain("channel weights must be finite and >= 0"));
        }
        if into_mode > 0.0 && w.iter().sum::<f64>() <= 0.0 {
            return Err(domain("photons in the mode need at least one escape channel"));
        }
        Ok(Self {
            into_mode,
            top_mirror,
            bottom_mirror,
            extrinsic,
            sidewall,
        })
    }

    /// Mirror losses `1/Q_int` split between top and bottom by `split`.
    pub fn from_budget(beta: f64, budget: &LossBudget, split: EscapeSplit) -> Result<Self> {
        let mirror = 1.0 / budget.q_int;
        Self::new(
            beta,
            mirror * split.top,
            mirror * split.bottom,
            1.0 / budget.q_ext,
            1.0 / budget.q_scat,
        )
    }

    pub fn leaky(&self) -> f64 {
        1.0 - self.into_mode
    }

    fn escape_total(&self) -> f64 {
        self.top_mirror + self.bottom_mirror + self.extrinsic + self.sidewall
    }

    /// Probability of a photon ending in the top-exit beam.
    pub fn analytic_eta(&self) -> f64 {
        if self.into_mode == 0.0 {
            return 0.0;
        }
        self.into_mode * self.top_mirror / self.escape_total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FateTally {
    pub collected_top: u64,
    pub lost_bottom: u64,
    pub lost_extrinsic: u64,
    pub lost_sidewall: u64,
    pub lost_leaky: u64,
    pub total: u64,
    pub seed: u64,
}

impl FateTally {
    pub fn merge(&mut self, other: &FateTally) {
        self.collected_top += other.collected_top;
        self.lost_bottom += other.lost_bottom;
        self.lost_extrinsic += other.lost_extrinsic;
        self.lost_sidewall += other.lost_sidewall;
        self.lost_leaky += other.lost_leaky;
        self.total += other.total;
    }

    pub fn fates(&self) -> [(&'static str, u64); 5] {
        [
            ("collected_top", self.collected_top),
            ("lost_bottom", self.lost_bottom),
            ("lost_extrinsic", self.lost_extrinsic),
            ("lost_sidewall", self.lost_sidewall),
            ("lost_leaky", self.lost_leaky),
        ]
    }
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn batch_count(n_photons: u64) -> u64 {
    n_photons.div_ceil(BATCH)
}

/// Photons `[k * BATCH, min((k + 1) * BATCH, n_photons))` of a run.
pub fn simulate_batch(rates: &ChannelRates, n_photons: u64, seed: u64, batch: u64) -> FateTally {
    let start = batch * BATCH;
    let count = n_photons.saturating_sub(start).min(BATCH);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);

    let total = rates.escape_total();
    let c_top = rates.top_mirror / total;
    let c_bottom = c_top + rates.bottom_mirror / total;
    let c_ext = c_bottom + rates.extrinsic / total;

    let mut t = FateTally {
        total: count,
        seed,
        ..FateTally::default()
    };
    for _ in 0..count {
        if unit(&mut rng) >= rates.into_mode {
            t.lost_leaky += 1;
            continue;
        }
        let u = unit(&mut rng);
        if u < c_top {
            t.collected_top += 1;
        } else if u < c_bottom {
            t.lost_bottom += 1;
        } else if u < c_ext {
            t.lost_extrinsic += 1;
        } else {
            t.lost_sidewall += 1;
        }
    }
    t
}

pub fn simulate(rates: &ChannelRates, n_photons: u64, seed: u64) -> Result<FateTally> {
    if n_photons == 0 {
        return Err(domain("need at least one photon"));
    }
    let mut tally = FateTally {
        seed,
        ..FateTally::default()
    };
    for k in 0..batch_count(n_photons) {
        tally.merge(&simulate_batch(rates, n_photons, seed, k));
    }
    Ok(tally)
}

/// `(eta_hat, binomial standard error)`.
pub fn estimate_eta(tally: &FateTally) -> (f64, f64) {
    if tally.total == 0 {
        return (0.0, 0.0);
    }
    let n = tally.total as f64;
    let p = tally.collected_top as f64 / n;
    (p, libm::sqrt(p * (1.0 - p) / n))
}
