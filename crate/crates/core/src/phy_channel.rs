//! Physical-layer channel models.
//!
//! Short-range links use deterministic path loss `d^-alpha`. Long-range links are
//! WSSUS Rayleigh channels: the frequency response `H(f)` on `[-B/2, B/2]` is a
//! stationary circular complex Gaussian process with unit power whose
//! autocorrelation is the triangle `phi(f) = max(0, 1 - 2|f|/delta)`.
//!
//! The triangle is synthesized exactly by a rectangular moving average of
//! width `delta/2` over i.i.d. circular Gaussians on the frequency grid.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::quadrature::trapezoid;

/// Resolution contract: frequency samples per coherence interval `delta/2`.
pub const MIN_BINS_PER_HALF_COHERENCE: f64 = 8.0;

/// Bandwidth, coherence, propagation and power parameters shared by every link model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Two-sided bandwidth `B` (Hz).
    pub bandwidth: f64,
    /// `delta` (Hz); the coherence bandwidth is `delta/2`.
    pub coherence_delta: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Noise power spectral density `N0` (W/Hz).
    pub noise_density: f64,
    /// Per-node average power cap `P_max` (W).
    pub power_cap: f64,
    /// Number of frequency samples on `[-B/2, B/2]`, endpoints included.
    pub freq_bins: usize,
    /// Interference exclusion radius `rho0` (m).
    pub rho0: f64,
}

impl ChannelParams {
    /// Parameters with `bins_per_half` samples per coherence interval and unit
    /// defaults for `N0`, `P_max` and `rho0`; `alpha` defaults to 3.
    pub fn new(bandwidth: f64, coherence_delta: f64, bins_per_half: usize) -> Self {
        let freq_bins = (2.0 * bandwidth / coherence_delta * bins_per_half as f64).round() as usize + 1;
        Self {
            bandwidth,
            coherence_delta,
            alpha: 3.0,
            noise_density: 1.0,
            power_cap: 1.0,
            freq_bins,
            rho0: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_noise_density(mut self, n0: f64) -> Self {
        self.noise_density = n0;
        self
    }

    pub fn with_power_cap(mut self, p: f64) -> Self {
        self.power_cap = p;
        self
    }

    pub fn with_rho0(mut self, rho0: f64) -> Self {
        self.rho0 = rho0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be positive and finite, got {v}")))
            }
        };
        positive("bandwidth", self.bandwidth)?;
        positive("coherence_delta", self.coherence_delta)?;
        positive("noise_density", self.noise_density)?;
        positive("power_cap", self.power_cap)?;
        positive("rho0", self.rho0)?;
        if !(self.alpha > 2.0) {
            return Err(invalid("alpha", format!("must exceed 2, got {}", self.alpha)));
        }
        if self.freq_bins < 2 {
            return Err(invalid("freq_bins", "need at least two frequency samples"));
        }
        Ok(())
    }

    /// Spacing between adjacent frequency samples.
    pub fn bin_spacing(&self) -> f64 {
        self.bandwidth / (self.freq_bins - 1) as f64
    }

    pub fn bins_per_half_coherence(&self) -> f64 {
        0.5 * self.coherence_delta / self.bin_spacing()
    }

    /// Frequency of sample `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        -0.5 * self.bandwidth + k as f64 * self.bin_spacing()
    }

    /// Moving-average window length (in samples) that realizes the triangular kernel.
    pub fn window_len(&self) -> Result<usize> {
        let per_half = self.bins_per_half_coherence();
        if per_half + 1e-9 < MIN_BINS_PER_HALF_COHERENCE {
            return Err(Error::Resolution {
                bins_per_half_coherence: per_half,
                required: MIN_BINS_PER_HALF_COHERENCE,
            });
        }
        Ok(per_half.round() as usize)
    }

    /// Maximum ISI-free symbol rate `delta*B / (delta + B)`.
    pub fn symbol_rate(&self) -> f64 {
        self.coherence_delta * self.bandwidth / (self.coherence_delta + self.bandwidth)
    }

    /// `P_max / (B N0)`.
    pub fn snr(&self) -> f64 {
        self.power_cap / (self.bandwidth * self.noise_density)
    }
}

/// Frequency autocorrelation `phi(lag)` of the fading process.
pub fn autocorrelation_phi(lag: f64, params: &ChannelParams) -> f64 {
    (1.0 - 2.0 * lag.abs() / params.coherence_delta).max(0.0)
}

/// One realization of a node-to-sink frequency response.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingChannel {
    response: Vec<Complex64>,
}

impl FadingChannel {
    pub fn from_response(response: Vec<Complex64>) -> Self {
        Self { response }
    }

    /// Constant response `H(f) = value` on the grid of `params`.
    pub fn flat(value: Complex64, params: &ChannelParams) -> Self {
        Self {
            response: vec![value; params.freq_bins],
        }
    }

    pub fn response(&self) -> &[Complex64] {
        &self.response
    }

    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    /// `|H(f_k)|^2` for every grid point.
    pub fn power(&self) -> impl Iterator<Item = f64> + '_ {
        self.response.iter().map(|h| h.norm_sqr())
    }

    fn check_grid(&self, params: &ChannelParams) -> Result<()> {
        if self.response.len() != params.freq_bins {
            return Err(Error::GridMismatch {
                expected: params.freq_bins,
                actual: self.response.len(),
            });
        }
        Ok(())
    }
}

/// Mixes a master seed with stream indices into an independent 64-bit seed.
pub fn derive_seed(master: u64, stream: &[u64]) -> u64 {
    let mut state = splitmix64(master ^ 0x5851_F42D_4C95_7F2D);
    for &s in stream {
        state = splitmix64(state ^ splitmix64(s.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws one fading realization; identical seeds give identical responses.
pub fn sample_channel(params: &ChannelParams, seed: u64) -> Result<FadingChannel> {
    let window = params.window_len()?;
    let n = params.freq_bins;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<Complex64> = (0..n + window - 1)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect();

    // unit power: each output is the mean of `window` unit-power samples times sqrt(window)
    let scale = 1.0 / (window as f64).sqrt();
    let mut acc: Complex64 = white[..window].iter().sum();
    let mut response = Vec::with_capacity(n);
    response.push(acc * scale);
    for k in 1..n {
        acc += white[k + window - 1] - white[k - 1];
        response.push(acc * scale);
    }
    Ok(FadingChannel { response })
}

/// Deterministic short-range power gain `distance^-alpha`.
pub fn path_loss_gain(distance: f64, params: &ChannelParams) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::NonPositiveDistance(distance));
    }
    Ok(distance.powf(-params.alpha))
}

/// Normalized channel energy `E = (1/B) * integral |H(f)|^2 df`.
pub fn channel_energy(ch: &FadingChannel, params: &ChannelParams) -> Result<f64> {
    ch.check_grid(params)?;
    let power: Vec<f64> = ch.power().collect();
    Ok(trapezoid(&power, params.bin_spacing()) / params.bandwidth)
}

/// Samples of the continuous impulse response at `t = n/B`, obtained from
/// the response by an inverse DFT over the grid (last endpoint dropped so the
/// grid is one period).
pub fn impulse_response(ch: &FadingChannel, params: &ChannelParams) -> Result<Vec<Complex64>> {
    ch.check_grid(params)?;
    let period = params.freq_bins - 1;
    let mut buf: Vec<Complex64> = ch.response[..period].to_vec();
    FftPlanner::new().plan_fft_inverse(period).process(&mut buf);
    let df = params.bin_spacing();
    buf.iter_mut().for_each(|h| *h *= df);
    Ok(buf)
}
