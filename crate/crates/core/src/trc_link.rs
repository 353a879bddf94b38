//! Cooperative TRC link statistics.
//!
//! For a cluster of `m` nodes at distance `r` from the sink, the matched-filter
//! decision statistic is
//!
//! ```text
//! X = (r^-alpha / B) * integral ( sum_i |H_i(f)|^2 / sqrt(E_i) )^2 df
//! ```
//!
//! Its mean grows like `m^2` and its variance like `m^3`. Interference from the
//! rest of the network and receiver noise are both proportional to `X`, which
//! gives the closed-form link rate evaluated by [`trc_rate`].

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::phy_channel::{autocorrelation_phi, derive_seed, sample_channel, ChannelParams, FadingChannel};
use crate::quadrature::{relative_change, trapezoid, trapezoid_fn, REFINEMENT_TOLERANCE};
use crate::stats::{ks_distance_standardized, SampleSummary};

/// Default node count for the standalone constant quadratures.
pub const QUADRATURE_POINTS: usize = 10_001;

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn accumulate(acc: &mut [f64], power: &[f64], energy: f64) {
    let w = 1.0 / energy.sqrt();
    for (a, p) in acc.iter_mut().zip(power) {
        *a += p * w;
    }
}

fn x_from_accumulator(acc: &[f64], r: f64, params: &ChannelParams) -> f64 {
    let squared: Vec<f64> = acc.iter().map(|g| g * g).collect();
    r.powf(-params.alpha) / params.bandwidth * trapezoid(&squared, params.bin_spacing())
}

/// Decision statistic `X` for a cluster whose channels are `channels`.
pub fn compute_x(channels: &[FadingChannel], r: f64, params: &ChannelParams) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveDistance(r));
    }
    let mut acc = vec![0.0; params.freq_bins];
    for (index, ch) in channels.iter().enumerate() {
        if ch.len() != params.freq_bins {
            return Err(Error::GridMismatch {
                expected: params.freq_bins,
                actual: ch.len(),
            });
        }
        let power: Vec<f64> = ch.power().collect();
        let energy = trapezoid(&power, params.bin_spacing()) / params.bandwidth;
        if !(energy > 0.0) {
            return Err(Error::ZeroEnergy { index });
        }
        accumulate(&mut acc, &power, energy);
    }
    Ok(x_from_accumulator(&acc, r, params))
}

/// `K0 = (1/B) * integral_{-delta/2}^{delta/2} sinc(2 pi (delta+B) f / (delta B)) phi(f)^2 df`.
pub fn k0_constant_with(params: &ChannelParams, points: usize) -> f64 {
    let (b, delta) = (params.bandwidth, params.coherence_delta);
    let scale = 2.0 * PI * (delta + b) / (delta * b);
    let half = trapezoid_fn(
        |f| sinc(scale * f) * autocorrelation_phi(f, params).powi(2),
        0.0,
        0.5 * delta,
        points,
    );
    2.0 * half / b
}

pub fn k0_constant(params: &ChannelParams) -> f64 {
    k0_constant_with(params, QUADRATURE_POINTS)
}

/// `2 pi P K0 / ((alpha - 2) rho0^(alpha - 2))`, the aggregate interference
/// power per unit `X` after normalizing by `1 + B/delta`.
pub fn interference_coefficient(params: &ChannelParams) -> Result<f64> {
    let a = params.alpha;
    if !(a > 2.0) {
        return Err(Error::DivergentInterference(a));
    }
    Ok(2.0 * PI * params.power_cap * k0_constant(params) / ((a - 2.0) * params.rho0.powf(a - 2.0)))
}

/// Variances of the interference and noise terms at the matched-filter output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceNoise {
    pub interference: f64,
    pub noise: f64,
}

pub fn interference_and_noise(x: f64, params: &ChannelParams) -> Result<InterferenceNoise> {
    if !(x >= 0.0) {
        return Err(invalid("x", format!("decision statistic must be nonnegative, got {x}")));
    }
    let spread = 1.0 + params.bandwidth / params.coherence_delta;
    Ok(InterferenceNoise {
        interference: spread * interference_coefficient(params)? * x,
        noise: params.bandwidth * params.noise_density * x,
    })
}

/// Achievable TRC link rate (bit/s) for a realized decision statistic `x`.
/// Cluster nodes transmit at the power cap.
pub fn trc_rate(x: f64, params: &ChannelParams) -> f64 {
    let s = params.symbol_rate();
    let coeff = interference_coefficient(params).expect("ChannelParams require alpha > 2");
    s * (params.power_cap * x / (s * params.noise_density + coeff)).ln_1p() / std::f64::consts::LN_2
}

/// High-probability rate with `X` replaced by its large-`m` limit `m^2 r^-alpha`.
pub fn limit_mean_rate(m: usize, r: f64, params: &ChannelParams) -> f64 {
    let (b, delta, a) = (params.bandwidth, params.coherence_delta, params.alpha);
    let p = params.power_cap;
    let prefactor = delta * b / (delta + b);
    let k_mu = 1.0;
    let signal = (m as f64).powi(2) * k_mu * p * r.powf(-a);
    let denom =
        prefactor * params.noise_density + 2.0 * PI * p * k0_constant(params) / ((a - 2.0) * params.rho0.powf(a - 2.0));
    prefactor * (1.0 + signal / denom).log2()
}

/// Gauss hypergeometric series `2F1(a, b; c; z)`, summed until the terms vanish
/// (terminating case) or fall below machine precision.
pub fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..100_000 {
        let kf = k as f64;
        term *= (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        sum += term;
        if term == 0.0 || term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `2F1(-1, -1; 1; z) = 1 + z`.
pub fn hyp2f1_neg1_neg1_1(z: f64) -> f64 {
    1.0 + z
}

/// `2F1(2, 2; 1; z) = (1 + z) / (1 - z)^3` for `z < 1`.
pub fn hyp2f1_2_2_1(z: f64) -> f64 {
    (1.0 + z) / (1.0 - z).powi(3)
}

/// Variance constant of the Gaussian limit:
/// `K_sigma = (8/B) [ integral_0^{B/2} (1 - f/B)(1 - phi^2) 2F1(-1,-1;1;phi^2) df - 1 ]`.
pub fn k_sigma_constant_with(params: &ChannelParams, points: usize) -> f64 {
    let b = params.bandwidth;
    let integrand = |f: f64| {
        let z = autocorrelation_phi(f, params).powi(2);
        (1.0 - f / b) * (1.0 - z) * hyp2f1_neg1_neg1_1(z)
    };
    let knee = (0.5 * params.coherence_delta).min(0.5 * b);
    let mut integral = trapezoid_fn(integrand, 0.0, knee, points);
    if knee < 0.5 * b {
        integral += trapezoid_fn(integrand, knee, 0.5 * b, points);
    }
    8.0 / b * (integral - 1.0)
}

pub fn k_sigma_constant(params: &ChannelParams) -> f64 {
    k_sigma_constant_with(params, QUADRATURE_POINTS)
}

/// Closed-form variance of the channel energy `E_i` in the form
/// `(2 delta/B) integral_0^{1/2} (1 - delta u/B)[1 - phi^2]^4 2F1(2,2;1;phi^2) du - delta/B + (delta/2B)^2`.
pub fn energy_variance_closed_form(params: &ChannelParams) -> f64 {
    let (b, delta) = (params.bandwidth, params.coherence_delta);
    let integrand = |u: f64| {
        let z = autocorrelation_phi(delta * u, params).powi(2);
        let weighted = if z < 1.0 {
            (1.0 - z).powi(4) * hyp2f1_2_2_1(z)
        } else {
            0.0
        };
        (1.0 - delta * u / b) * weighted
    };
    2.0 * delta / b * trapezoid_fn(integrand, 0.0, 0.5, QUADRATURE_POINTS) - delta / b + (delta / (2.0 * b)).powi(2)
}

/// Variance of `E_i` implied directly by the fading model:
/// `(1/B^2) double-integral phi(f - f')^2 = (2/B) integral_0^B (1 - v/B) phi(v)^2 dv`.
pub fn energy_variance_model(params: &ChannelParams) -> f64 {
    let b = params.bandwidth;
    let upper = (0.5 * params.coherence_delta).min(b);
    2.0 / b
        * trapezoid_fn(
            |v| (1.0 - v / b) * autocorrelation_phi(v, params).powi(2),
            0.0,
            upper,
            QUADRATURE_POINTS,
        )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrcLinkConfig {
    pub params: ChannelParams,
    /// Nodes in the cooperating cluster.
    pub m: usize,
    /// Cluster-to-sink distance.
    pub r: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl TrcLinkConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.m == 0 {
            return Err(invalid("m", "cluster needs at least one node"));
        }
        if !(self.r > 0.0) {
            return Err(Error::NonPositiveDistance(self.r));
        }
        if self.trials < MIN_TRIALS {
            return Err(invalid(
                "trials",
                format!("need at least {MIN_TRIALS} trials, got {}", self.trials),
            ));
        }
        let ratio = self.params.bandwidth / self.params.coherence_delta;
        if ratio < 8.0 - 1e-9 {
            return Err(invalid("bandwidth", format!("B/delta must be at least 8, got {ratio}")));
        }
        Ok(())
    }
}

pub const MIN_TRIALS: usize = 100;

/// One Monte Carlo cluster draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XTrial {
    pub x: f64,
    pub energy_sum: f64,
    pub energy_sq_sum: f64,
    pub sqrt_energy_sum: f64,
}

fn run_trial(config: &TrcLinkConfig, trial: usize) -> Result<XTrial> {
    let params = &config.params;
    let df = params.bin_spacing();
    let mut acc = vec![0.0; params.freq_bins];
    let mut power = vec![0.0; params.freq_bins];
    let mut out = XTrial {
        x: 0.0,
        energy_sum: 0.0,
        energy_sq_sum: 0.0,
        sqrt_energy_sum: 0.0,
    };
    for node in 0..config.m {
        let seed = derive_seed(config.master_seed, &[trial as u64, node as u64]);
        let ch = sample_channel(params, seed)?;
        for (p, v) in power.iter_mut().zip(ch.power()) {
            *p = v;
        }
        let energy = trapezoid(&power, df) / params.bandwidth;
        if !(energy > 0.0) {
            return Err(Error::ZeroEnergy { index: node });
        }
        accumulate(&mut acc, &power, energy);
        out.energy_sum += energy;
        out.energy_sq_sum += energy * energy;
        out.sqrt_energy_sum += energy.sqrt();
    }
    out.x = x_from_accumulator(&acc, config.r, params);
    Ok(out)
}

/// Independent cluster draws; trial `t`, node `i` uses the seed derived from
/// `(master_seed, t, i)`, so the result does not depend on the thread count.
pub fn x_trials(config: &TrcLinkConfig) -> Result<Vec<XTrial>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect()
}

/// Monte Carlo summary of `X` against its predicted moments.
#[derive(Debug, Clone, PartialEq)]
pub struct TrcLinkStats {
    pub m: usize,
    pub r: f64,
    pub trials: usize,
    pub x: SampleSummary,
    /// KS distance of standardized `X` from the standard normal.
    pub ks_distance: f64,
    /// `var(X/m^2) / mean(X/m^2)^2`.
    pub concentration: f64,
    /// Fraction of draws with `|X - mean| > 0.1 mean`.
    pub deviation_fraction: f64,
    /// `m^2 r^-alpha`, the Gaussian-limit mean (`K_mu = 1`).
    pub predicted_mean: f64,
    /// Estimate of `E{|H(f)|^2 / sqrt(E)}` from the sampled channels.
    pub k_mu_estimate: f64,
    /// `K_mu m^2 r^-alpha` with the estimated `K_mu`.
    pub predicted_mean_k_mu: f64,
    /// `K_mu^2 m^2 r^-alpha` with the estimated `K_mu`.
    pub predicted_mean_k_mu_squared: f64,
    pub k_sigma: f64,
    /// `K_sigma m^3 r^-2alpha`.
    pub predicted_variance: f64,
    /// `var(E) m^3 r^-2alpha`, the leading-order variance of the normalized statistic.
    pub predicted_variance_model: f64,
    pub k0: f64,
    pub energy_mean: f64,
    pub energy_variance: f64,
    pub rate: SampleSummary,
    /// Both constant quadratures moved by less than 0.1% under grid doubling.
    pub quadrature_stable: bool,
}

pub fn summarize_trials(config: &TrcLinkConfig, trials: &[XTrial]) -> TrcLinkStats {
    let params = &config.params;
    let xs: Vec<f64> = trials.iter().map(|t| t.x).collect();
    let x = SampleSummary::from_samples(&xs);
    let m = config.m as f64;
    let gain = config.r.powf(-params.alpha);

    let draws = (trials.len() * config.m) as f64;
    let energy_sum: f64 = trials.iter().map(|t| t.energy_sum).sum();
    let energy_sq_sum: f64 = trials.iter().map(|t| t.energy_sq_sum).sum();
    let energy_mean = energy_sum / draws;
    let energy_variance = (energy_sq_sum - draws * energy_mean * energy_mean) / (draws - 1.0);
    let k_mu_estimate = trials.iter().map(|t| t.sqrt_energy_sum).sum::<f64>() / draws;

    let deviation_fraction = xs.iter().filter(|&&v| (v - x.mean).abs() > 0.1 * x.mean).count() as f64 / xs.len() as f64;
    let rates: Vec<f64> = xs.iter().map(|&v| trc_rate(v, params)).collect();

    let k0 = k0_constant(params);
    let k_sigma = k_sigma_constant(params);
    let stable = relative_change(k0_constant_with(params, QUADRATURE_POINTS / 2 + 1), k0) < REFINEMENT_TOLERANCE
        && relative_change(k_sigma_constant_with(params, QUADRATURE_POINTS / 2 + 1), k_sigma) < REFINEMENT_TOLERANCE;

    TrcLinkStats {
        m: config.m,
        r: config.r,
        trials: trials.len(),
        ks_distance: ks_distance_standardized(&xs),
        concentration: x.variance / (x.mean * x.mean),
        deviation_fraction,
        predicted_mean: m * m * gain,
        k_mu_estimate,
        predicted_mean_k_mu: k_mu_estimate * m * m * gain,
        predicted_mean_k_mu_squared: k_mu_estimate * k_mu_estimate * m * m * gain,
        k_sigma,
        predicted_variance: k_sigma * m.powi(3) * gain * gain,
        predicted_variance_model: energy_variance_model(params) * m.powi(3) * gain * gain,
        k0,
        energy_mean,
        energy_variance,
        rate: SampleSummary::from_samples(&rates),
        quadrature_stable: stable,
        x,
    }
}

pub fn monte_carlo_x(config: &TrcLinkConfig) -> Result<TrcLinkStats> {
    let trials = x_trials(config)?;
    Ok(summarize_trials(config, &trials))
}

/// Column names of the per-run summary record.
pub const SUMMARY_COLUMNS: [&str; 13] = [
    "m",
    "B",
    "delta",
    "alpha",
    "r",
    "trials",
    "sample_mean",
    "sample_var",
    "predicted_mean",
    "predicted_var",
    "ks_distance",
    "k0",
    "rate_mean",
];

impl TrcLinkStats {
    /// Values in [`SUMMARY_COLUMNS`] order.
    pub fn summary_record(&self, params: &ChannelParams) -> [f64; 13] {
        [
            self.m as f64,
            params.bandwidth,
            params.coherence_delta,
            params.alpha,
            self.r,
            self.trials as f64,
            self.x.mean,
            self.x.variance,
            self.predicted_mean,
            self.predicted_variance,
            self.ks_distance,
            self.k0,
            self.rate.mean,
        ]
    }
}
