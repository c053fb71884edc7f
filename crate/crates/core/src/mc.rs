//! Monte-Carlo estimation of the outage probability and of SNR statistics.
//!
//! Trial `t` always consumes stream `t` of the seeded generator, so results
//! are bit-identical for any number of worker threads.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{BsIrsChannel, ChannelRealization, SystemParams};
use crate::rng::StreamRng;
use crate::specfun::Probability;
use crate::transceiver::{
    instant_snr_bob, instant_snr_eve, irs_optimal_phases, scenario_snrs, secrecy_capacity, ElementSelector, IrsConfig,
    Scenario, StrongestSelector,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 picks the number of CPUs.
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: usize, seed: u64, workers: usize) -> Result<Self> {
        if trials < 1 {
            return Err(Error::invalid("trials", trials, "need at least one trial"));
        }
        Ok(McConfig { trials, seed, workers })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub p_hat: Probability,
    /// Binomial standard error `sqrt(p(1-p)/trials)`.
    pub std_err: f64,
    pub trials: usize,
    pub outages: usize,
}

impl McEstimate {
    pub fn from_counts(outages: usize, trials: usize) -> Result<Self> {
        if trials == 0 || outages > trials {
            return Err(Error::invalid("outages", outages, "must not exceed a positive trial count"));
        }
        let p = outages as f64 / trials as f64;
        Ok(McEstimate { p_hat: Probability::new(p)?, std_err: (p * (1.0 - p) / trials as f64).sqrt(), trials, outages })
    }
}

/// Which receiver's SNR to record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bob,
    Eve,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))
}

struct Trial {
    real: ChannelRealization,
    phases: Vec<f64>,
    order: Vec<usize>,
}

fn run_trial(
    params: &SystemParams,
    link: &Arc<BsIrsChannel>,
    selector: &dyn ElementSelector,
    seed: u64,
    index: u64,
) -> Result<Trial> {
    let mut rng = StreamRng::for_trial(seed, index);
    let real = ChannelRealization::draw(params, link, &mut rng)?;
    let phases = irs_optimal_phases(&real.h_bob_outdated, &link.irs_steering)?;
    let order = selector.rank(&real.h_bob_outdated, &mut rng);
    Ok(Trial { real, phases, order })
}

fn resolve_ks(params: &SystemParams, ks: &[Option<usize>]) -> Result<Vec<usize>> {
    let n = params.elements();
    ks.iter()
        .map(|k| match *k {
            None => Ok(n),
            Some(k) if k >= 1 && k <= n => Ok(k),
            Some(k) => Err(Error::invalid("K", k, "must lie in [1, N]")),
        })
        .collect()
}

/// Outage estimates for several subset sizes from one shared set of
/// channel draws; `None` keeps every element on.
pub fn estimate_sop_sweep(
    params: &SystemParams,
    scenario: Scenario,
    ks: &[Option<usize>],
    selector: &dyn ElementSelector,
    mc: McConfig,
) -> Result<Vec<McEstimate>> {
    params.validate()?;
    McConfig::new(mc.trials, mc.seed, mc.workers)?;
    let ks = resolve_ks(params, ks)?;
    let link = Arc::new(BsIrsChannel::new(params));
    let counts = pool(mc.workers)?.install(|| {
        (0..mc.trials as u64)
            .into_par_iter()
            .map(|t| -> Result<Vec<usize>> {
                let trial = run_trial(params, &link, selector, mc.seed, t)?;
                ks.iter()
                    .map(|&k| {
                        let irs = IrsConfig::new(trial.phases.clone(), trial.order[..k].to_vec())?;
                        let (gb, ge) = scenario_snrs(&trial.real, &irs, params, scenario);
                        Ok(usize::from(secrecy_capacity(gb, ge) <= params.secrecy_rate))
                    })
                    .collect()
            })
            .try_reduce(
                || vec![0; ks.len()],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )
    })?;
    counts.into_iter().map(|c| McEstimate::from_counts(c, mc.trials)).collect()
}

/// Outage estimate with the strongest-`K` rule (`None` = all elements).
pub fn estimate_sop(params: &SystemParams, scenario: Scenario, k: Option<usize>, mc: McConfig) -> Result<McEstimate> {
    estimate_sop_with(params, scenario, k, &StrongestSelector, mc)
}

pub fn estimate_sop_with(
    params: &SystemParams,
    scenario: Scenario,
    k: Option<usize>,
    selector: &dyn ElementSelector,
    mc: McConfig,
) -> Result<McEstimate> {
    Ok(estimate_sop_sweep(params, scenario, &[k], selector, mc)?[0])
}

/// Sample statistics of one receiver's SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrStats {
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the mean.
    pub std_err: f64,
    /// `(x, F̂(x))` on 100 evenly spaced points between the extreme samples.
    pub ecdf: Vec<(f64, f64)>,
    #[serde(skip)]
    pub sorted: Vec<f64>,
}

impl SnrStats {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("samples", samples.len(), "need at least two samples"));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        samples.sort_by(f64::total_cmp);
        let (lo, hi) = (samples[0], samples[samples.len() - 1]);
        let ecdf = (0..100)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 99.0;
                let below = samples.partition_point(|&s| s <= x);
                (x, below as f64 / n)
            })
            .collect();
        Ok(SnrStats { mean, variance, std_err: (variance / n).sqrt(), ecdf, sorted: samples })
    }

    pub fn ks_against<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        ks_statistic(&self.sorted, cdf)
    }
}

/// Kolmogorov–Smirnov distance between sorted samples and a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// SNR samples of `side` under `scenario`.
pub fn sample_snrs(
    params: &SystemParams,
    scenario: Scenario,
    k: Option<usize>,
    side: Side,
    mc: McConfig,
) -> Result<Vec<f64>> {
    params.validate()?;
    McConfig::new(mc.trials, mc.seed, mc.workers)?;
    let k = resolve_ks(params, &[k])?[0];
    let link = Arc::new(BsIrsChannel::new(params));
    pool(mc.workers)?.install(|| {
        (0..mc.trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut trial = run_trial(params, &link, &StrongestSelector, mc.seed, t)?;
                trial.order.truncate(k);
                let irs = IrsConfig::new(trial.phases, trial.order)?;
                Ok(match side {
                    Side::Bob => instant_snr_bob(&trial.real, &irs, params, scenario.bob),
                    Side::Eve => instant_snr_eve(&trial.real, &irs, params, scenario.eve),
                })
            })
            .collect()
    })
}

pub fn estimate_snr_stats(
    params: &SystemParams,
    scenario: Scenario,
    k: Option<usize>,
    side: Side,
    mc: McConfig,
) -> Result<SnrStats> {
    SnrStats::from_samples(sample_snrs(params, scenario, k, side, mc)?)
}
