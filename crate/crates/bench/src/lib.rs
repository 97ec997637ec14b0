//! Fixed inputs shared by the benchmarks.

use rand::SeedableRng;
use tasmaj::rng::TrialRng;
use tasmaj::{sample_gain_matrix, GainMatrix, ImpairmentState, SystemConfig};

/// `count` gain matrices drawn from a fixed seed.
pub fn gain_matrices(cfg: &SystemConfig, count: usize) -> Vec<GainMatrix> {
    let imp = ImpairmentState::ideal(cfg);
    let mut rng = TrialRng::seed_from_u64(0x5eed);
    (0..count).map(|_| sample_gain_matrix(cfg, &imp, &mut rng).expect("valid preset")).collect()
}

/// SNR grid `0, 5, ..., 40` dB in linear units.
pub fn snr_grid() -> Vec<f64> {
    (0..=8).map(|i| tasmaj::db_to_linear(5.0 * i as f64)).collect()
}
