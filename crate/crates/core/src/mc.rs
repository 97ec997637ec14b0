//! Monte Carlo outage and selected-gain CDF estimation.
//!
//! Trial `t` at grid point `p` always draws from `substream(seed, p, t)`.
//! Trials are split into fixed-size chunks and per-chunk integer counts are
//! summed, so every output is independent of the worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{fill_gain_matrix, gain_sampler, GainMatrix, ImpairmentState, SystemConfig};
use crate::error::ModelError;
use crate::rng::{substream, CDF_STREAM};
use crate::selection::{per_user_vote, select_into, Scheme, SelectionScratch};
use crate::stats;

const CHUNK: u64 = 1 << 14;

/// SINR of user `l` when decoding user `j`'s signal (zero-based, `j <= l`).
pub fn sinr(j: usize, l: usize, phi: f64, gamma: f64, cfg: &SystemConfig, beta: f64) -> Result<f64, ModelError> {
    let users = cfg.num_users();
    if j > l || l >= users {
        return Err(ModelError::Contract(format!(
            "user {} cannot decode user {} in a {users}-user network",
            l + 1,
            j + 1
        )));
    }
    let residual: f64 = cfg.powers[j + 1..].iter().sum();
    Ok(stage_sinr(cfg.powers[j], residual, gamma * phi, beta))
}

#[inline]
fn stage_sinr(power: f64, residual: f64, snr_gain: f64, beta: f64) -> f64 {
    power * snr_gain / (snr_gain * residual + beta)
}

/// Per-stage constants reused across trials at one SNR point.
struct SicChain {
    powers: Vec<f64>,
    residual: Vec<f64>,
    thresholds: Vec<f64>,
    gamma: f64,
    beta: f64,
}

impl SicChain {
    fn new(cfg: &SystemConfig, gamma: f64, beta: f64) -> Self {
        let residual = (0..cfg.num_users()).map(|j| cfg.powers[j + 1..].iter().sum()).collect();
        Self { powers: cfg.powers.clone(), residual, thresholds: cfg.thresholds.clone(), gamma, beta }
    }

    /// Writes outage flags for users ordered by ascending gain.
    #[inline]
    fn flags(&self, ordered: &[f64], out: &mut [bool]) {
        for (l, (&phi, flag)) in ordered.iter().zip(out.iter_mut()).enumerate() {
            let g = self.gamma * phi;
            *flag = (0..=l).any(|j| stage_sinr(self.powers[j], self.residual[j], g, self.beta) < self.thresholds[j]);
        }
    }
}

/// Outage flag per user for one channel realization.
pub fn trial_outage(
    gains: &GainMatrix,
    scheme: Scheme,
    gamma: f64,
    cfg: &SystemConfig,
    imp: &ImpairmentState,
) -> Vec<bool> {
    let mut scratch = SelectionScratch::new();
    select_into(scheme, gains, &mut scratch);
    let chain = SicChain::new(cfg, gamma, imp.beta(gamma));
    let mut out = vec![false; scratch.ordered.len()];
    chain.flags(&scratch.ordered, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; zero uses every available core.
    pub workers: usize,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self { trials, seed, workers: 0 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McPoint {
    /// Linear SNR.
    pub gamma: f64,
    /// Outage counts per user, weakest first.
    pub outages: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McRun {
    pub scheme: Scheme,
    pub trials: u64,
    pub seed: u64,
    pub points: Vec<McPoint>,
}

impl McRun {
    pub fn frequency(&self, point: usize, user: usize) -> f64 {
        self.points[point].outages[user] as f64 / self.trials as f64
    }

    /// Binomial plug-in standard error.
    pub fn std_error(&self, point: usize, user: usize) -> f64 {
        stats::binomial_std_error(self.frequency(point, user), self.trials)
    }

    pub fn snr_grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gamma).collect()
    }
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, ModelError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ModelError::Resource(format!("cannot start worker pool: {e}")))
}

fn chunks(trials: u64) -> impl Iterator<Item = (u64, u64)> {
    (0..trials.div_ceil(CHUNK)).map(move |c| (c * CHUNK, ((c + 1) * CHUNK).min(trials)))
}

/// Outage frequencies of `scheme` over `snr_grid` (linear SNRs).
pub fn run_outage_mc(
    cfg: &SystemConfig,
    imp: &ImpairmentState,
    scheme: Scheme,
    snr_grid: &[f64],
    settings: McSettings,
) -> Result<McRun, ModelError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(ModelError::InvalidConfig(problems));
    }
    if settings.trials == 0 {
        return Err(ModelError::Contract("at least one trial per point is required".into()));
    }
    if let Some(g) = snr_grid.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
        return Err(ModelError::Contract(format!("SNR values must be positive and finite, got {g}")));
    }
    if settings.trials.checked_mul(snr_grid.len() as u64).is_none() {
        return Err(ModelError::Resource("total trial count overflows a 64-bit counter".into()));
    }
    let sampler = gain_sampler(cfg, imp)?;
    let users = cfg.num_users();
    let tasks: Vec<(usize, u64, u64)> =
        (0..snr_grid.len()).flat_map(|p| chunks(settings.trials).map(move |(s, e)| (p, s, e))).collect();
    let chains: Vec<SicChain> = snr_grid.iter().map(|&g| SicChain::new(cfg, g, imp.beta(g))).collect();

    let counts: Vec<Vec<u64>> = thread_pool(settings.workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(p, start, end)| {
                let mut gains = GainMatrix::zeros(users, cfg.n_t);
                let mut scratch = SelectionScratch::new();
                let mut flags = vec![false; users];
                let mut local = vec![0u64; users];
                for t in start..end {
                    let mut rng = substream(settings.seed, p as u64, t);
                    fill_gain_matrix(&mut gains, &sampler, &mut rng);
                    select_into(scheme, &gains, &mut scratch);
                    chains[p].flags(&scratch.ordered, &mut flags);
                    for (c, f) in local.iter_mut().zip(&flags) {
                        *c += u64::from(*f);
                    }
                }
                local
            })
            .collect()
    });

    let mut points: Vec<McPoint> = snr_grid.iter().map(|&gamma| McPoint { gamma, outages: vec![0; users] }).collect();
    for (&(p, _, _), local) in tasks.iter().zip(&counts) {
        for (total, c) in points[p].outages.iter_mut().zip(local) {
            *total += c;
        }
    }
    Ok(McRun { scheme, trials: settings.trials, seed: settings.seed, points })
}

/// Sorted samples of every user's gain on the majority antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMajorityCdf {
    samples: u64,
    unanimous: u64,
    /// `sorted[l]` holds user `l`'s selected gains, ascending.
    sorted: Vec<Vec<f64>>,
}

pub const MIN_CDF_SAMPLES: u64 = 10_000;
pub const CDF_GRID_POINTS: usize = 256;

/// Draws `samples` channels, applies majority selection and records the
/// ordered gains and how often the vote is unanimous.
pub fn empirical_majority_cdf(
    cfg: &SystemConfig,
    imp: &ImpairmentState,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<EmpiricalMajorityCdf, ModelError> {
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(ModelError::InvalidConfig(problems));
    }
    if samples < MIN_CDF_SAMPLES {
        return Err(ModelError::Contract(format!("at least {MIN_CDF_SAMPLES} samples are required, got {samples}")));
    }
    let len = usize::try_from(samples)
        .ok()
        .and_then(|n| n.checked_mul(cfg.num_users()))
        .ok_or_else(|| ModelError::Resource(format!("{samples} samples do not fit in memory")))?;
    let sampler = gain_sampler(cfg, imp)?;
    let users = cfg.num_users();
    let tasks: Vec<(u64, u64)> = chunks(samples).collect();

    let parts: Vec<(u64, Vec<f64>)> = thread_pool(workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(start, end)| {
                let mut gains = GainMatrix::zeros(users, cfg.n_t);
                let mut scratch = SelectionScratch::new();
                let mut unanimous = 0;
                let mut out = Vec::with_capacity((end - start) as usize * users);
                for t in start..end {
                    let mut rng = substream(seed, CDF_STREAM, t);
                    fill_gain_matrix(&mut gains, &sampler, &mut rng);
                    let antenna = select_into(Scheme::Majority, &gains, &mut scratch);
                    if (0..users).all(|l| per_user_vote(&gains, l) == antenna) {
                        unanimous += 1;
                    }
                    out.extend_from_slice(&scratch.ordered);
                }
                (unanimous, out)
            })
            .collect()
    });

    let mut sorted = vec![Vec::with_capacity(len / users); users];
    let mut unanimous = 0;
    for (u, flat) in parts {
        unanimous += u;
        for row in flat.chunks_exact(users) {
            for (col, &g) in sorted.iter_mut().zip(row) {
                col.push(g);
            }
        }
    }
    for col in &mut sorted {
        col.sort_by(f64::total_cmp);
    }
    Ok(EmpiricalMajorityCdf { samples, unanimous, sorted })
}

impl EmpiricalMajorityCdf {
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn users(&self) -> usize {
        self.sorted.len()
    }

    /// Fraction of draws with no dissenting vote.
    pub fn p_unanimous(&self) -> f64 {
        self.unanimous as f64 / self.samples as f64
    }

    pub fn sorted_gains(&self, user: usize) -> &[f64] {
        &self.sorted[user]
    }

    pub fn cdf_at(&self, user: usize, x: f64) -> f64 {
        let col = &self.sorted[user];
        col.partition_point(|&g| g <= x) as f64 / col.len() as f64
    }

    /// Empirical `q`-quantile of a user's selected gain.
    pub fn quantile(&self, user: usize, q: f64) -> f64 {
        let col = &self.sorted[user];
        let idx = ((q.clamp(0.0, 1.0) * col.len() as f64).ceil() as usize).clamp(1, col.len()) - 1;
        col[idx]
    }

    /// Kolmogorov-Smirnov distance to `cdf`, over every sample.
    pub fn ks_distance<F: Fn(f64) -> f64>(&self, user: usize, cdf: F) -> f64 {
        stats::ks_distance(&self.sorted[user], cdf)
    }

    /// Evenly spaced points from zero to the strongest user's 0.9999 quantile.
    pub fn grid(&self) -> Vec<f64> {
        let top = self.quantile(self.users() - 1, 0.9999);
        (0..CDF_GRID_POINTS).map(|i| top * i as f64 / (CDF_GRID_POINTS - 1) as f64).collect()
    }

    /// Every user's empirical CDF on [`Self::grid`].
    pub fn curves(&self) -> Vec<Vec<f64>> {
        let grid = self.grid();
        (0..self.users()).map(|u| grid.iter().map(|&x| self.cdf_at(u, x)).collect()).collect()
    }
}
