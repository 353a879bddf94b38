//! Shared fixtures for the benchmarks.

use aggsim_core::phy_channel::{derive_seed, sample_channel, ChannelParams, FadingChannel};

/// Link parameters used by the channel and decision-statistic benchmarks.
pub fn link_params(bandwidth_ratio: f64) -> ChannelParams {
    ChannelParams::new(bandwidth_ratio, 1.0, 8)
}

/// `m` independent channel realizations seeded from `seed`.
pub fn cluster(params: &ChannelParams, m: usize, seed: u64) -> Vec<FadingChannel> {
    (0..m)
        .map(|i| sample_channel(params, derive_seed(seed, &[i as u64])).expect("valid parameters"))
        .collect()
}
