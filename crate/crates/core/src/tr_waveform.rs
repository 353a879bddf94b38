//! Discrete-time time-reversal precoding at tap spacing `1/B`.
//!
//! A cluster of nodes transmits `s_i`, node `i`'s signal reaches the sink
//! through taps `h_i`, and the sink observes `r = sum_i s_i * h_i`. Time
//! reversal sends `s_i[n] = conj(h_i[t0 - n])`, so that `r[t0]` collects
//! `sum_i R_{h_i}(0)`.
//!
//! Spectral quantities follow the convention `S(f_k) = DFT(s)[k] / sqrt(B)`
//! on an `N`-point grid with spacing `B/N`, which makes
//! `integral |S|^2 df = sum |s[n]|^2`. All grids are long enough that the
//! discrete sums integrate the underlying trigonometric polynomials exactly.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::phy_channel::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    taps: Vec<Complex64>,
}

impl ImpulseResponse {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptyResponse);
        }
        if taps.iter().all(|t| t.norm_sqr() == 0.0) {
            return Err(Error::ZeroResponse);
        }
        Ok(Self { taps })
    }

    pub fn from_real(taps: &[f64]) -> Result<Self> {
        Self::new(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect())
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    /// Deterministic autocorrelation `R_h(lag) = sum_n h[n] conj(h[n - lag])`.
    pub fn autocorrelation(&self, lag: isize) -> Complex64 {
        let len = self.taps.len() as isize;
        (0..len)
            .filter(|&n| (0..len).contains(&(n - lag)))
            .map(|n| self.taps[n as usize] * self.taps[(n - lag) as usize].conj())
            .sum()
    }
}

/// `h~[n] = conj(h[L - 1 - n])`.
pub fn time_reverse_conjugate(h: &ImpulseResponse) -> ImpulseResponse {
    ImpulseResponse {
        taps: h.taps.iter().rev().map(|t| t.conj()).collect(),
    }
}

/// Per-node transmitted signals sharing one sample grid, and the target sample `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateTransmission {
    signals: Vec<Vec<Complex64>>,
    t0: usize,
}

impl AggregateTransmission {
    pub fn new(signals: Vec<Vec<Complex64>>, t0: usize) -> Self {
        Self { signals, t0 }
    }

    /// Time-reversed waveforms delayed so that every peak lands on `t0 = max_len - 1`.
    pub fn time_reversal(channels: &[ImpulseResponse]) -> Self {
        let t0 = channels.iter().map(|h| h.len()).max().unwrap_or(1) - 1;
        let signals = channels
            .iter()
            .map(|h| {
                (0..=t0)
                    .map(|n| h.taps.get(t0 - n).map_or(Complex64::new(0.0, 0.0), |t| t.conj()))
                    .collect()
            })
            .collect();
        Self { signals, t0 }
    }

    pub fn signals(&self) -> &[Vec<Complex64>] {
        &self.signals
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            signals: self.signals.iter().map(|s| s.iter().map(|v| v * c).collect()).collect(),
            t0: self.t0,
        }
    }

    /// Rescaled so that `energy() == e_max`. A zero transmission is returned unchanged.
    pub fn with_energy(&self, e_max: f64) -> Self {
        let e = energy(self);
        if e == 0.0 {
            return self.clone();
        }
        self.scaled((e_max / e).sqrt())
    }

    /// Rescaled so that the space-frequency localization equals `l_max`.
    pub fn with_localization(&self, l_max: f64, bandwidth: f64) -> Self {
        let l = space_frequency_localization(self, bandwidth);
        if l == 0.0 {
            return self.clone();
        }
        // L scales with the fourth power of amplitude
        self.scaled((l_max / l).powf(0.25))
    }

    fn max_len(&self) -> usize {
        self.signals.iter().map(Vec::len).max().unwrap_or(0)
    }
}

fn check_lengths(tx: &AggregateTransmission, channels: &[ImpulseResponse]) -> Result<()> {
    if tx.signals.len() != channels.len() {
        return Err(Error::LengthMismatch {
            signals: tx.signals.len(),
            channels: channels.len(),
        });
    }
    Ok(())
}

fn convolve_into(out: &mut [Complex64], s: &[Complex64], h: &[Complex64]) {
    for (i, &a) in s.iter().enumerate() {
        for (j, &b) in h.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
}

/// Sink observation `r[n] = sum_i (s_i * h_i)[n]`.
pub fn receive(tx: &AggregateTransmission, channels: &[ImpulseResponse]) -> Result<Vec<Complex64>> {
    check_lengths(tx, channels)?;
    let len = tx
        .signals
        .iter()
        .zip(channels)
        .map(|(s, h)| (s.len() + h.len()).saturating_sub(1))
        .max()
        .unwrap_or(0);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (s, h) in tx.signals.iter().zip(channels) {
        convolve_into(&mut out, s, &h.taps);
    }
    Ok(out)
}

/// Instantaneous output power `|r(t0)|^2`.
pub fn peak_power(tx: &AggregateTransmission, channels: &[ImpulseResponse]) -> Result<f64> {
    let r = receive(tx, channels)?;
    Ok(r.get(tx.t0).map_or(0.0, |v| v.norm_sqr()))
}

/// Total transmitted energy `E_s = sum_i sum_n |s_i[n]|^2`.
pub fn energy(tx: &AggregateTransmission) -> f64 {
    tx.signals.iter().flat_map(|s| s.iter()).map(|v| v.norm_sqr()).sum()
}

/// Upper bound on `|r(t0)|^2` under the energy constraint `e_max`.
pub fn peak_power_bound(e_max: f64, channels: &[ImpulseResponse]) -> f64 {
    e_max * channels.iter().map(|h| h.autocorrelation(0).re).sum::<f64>()
}

fn dft(samples: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..samples.len()].copy_from_slice(samples);
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf
}

/// DFT length that integrates every spectral quantity of `tx` over `channels` exactly.
pub fn spectral_grid_len(tx: &AggregateTransmission, channels: &[ImpulseResponse]) -> usize {
    let hmax = channels.iter().map(|h| h.len()).max().unwrap_or(1);
    (2 * (tx.max_len() + hmax)).next_power_of_two()
}

/// `sum_i |DFT(x_i)[k]|^2` for every bin.
fn summed_energy_spectrum<'a>(signals: impl Iterator<Item = &'a [Complex64]>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    for s in signals {
        for (a, v) in acc.iter_mut().zip(dft(s, len)) {
            *a += v.norm_sqr();
        }
    }
    acc
}

/// Space-frequency localization `L_s = integral (sum_i |S_i(f)|^2)^2 df`.
pub fn space_frequency_localization(tx: &AggregateTransmission, bandwidth: f64) -> f64 {
    let len = (4 * tx.max_len().max(1)).next_power_of_two();
    let a = summed_energy_spectrum(tx.signals.iter().map(Vec::as_slice), len);
    a.iter().map(|v| v * v).sum::<f64>() / (bandwidth * len as f64)
}

/// `integral (sum_i |H_i(f)|^2)^2 df` over the band.
pub fn channel_localization(channels: &[ImpulseResponse], bandwidth: f64) -> f64 {
    let hmax = channels.iter().map(|h| h.len()).max().unwrap_or(1);
    let len = (4 * hmax).next_power_of_two();
    let b = summed_energy_spectrum(channels.iter().map(|h| h.taps()), len);
    bandwidth * b.iter().map(|v| v * v).sum::<f64>() / len as f64
}

/// Received energy `E_r = integral |sum_i S_i(f) H_i(f)|^2 df`, evaluated in frequency.
pub fn received_energy(tx: &AggregateTransmission, channels: &[ImpulseResponse]) -> Result<f64> {
    check_lengths(tx, channels)?;
    let len = spectral_grid_len(tx, channels);
    let mut total = vec![Complex64::new(0.0, 0.0); len];
    for (s, h) in tx.signals.iter().zip(channels) {
        let sf = dft(s, len);
        let hf = dft(&h.taps, len);
        for ((t, a), b) in total.iter_mut().zip(sf).zip(hf) {
            *t += a * b;
        }
    }
    Ok(total.iter().map(|v| v.norm_sqr()).sum::<f64>() / len as f64)
}

/// Upper bound on `E_r` under the localization constraint `l_max`.
pub fn received_energy_bound(l_max: f64, channels: &[ImpulseResponse], bandwidth: f64) -> f64 {
    (l_max * channel_localization(channels, bandwidth)).sqrt()
}

fn random_taps(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Time reversal against random competitors on one random channel set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalityTrial {
    pub nodes: usize,
    pub max_taps: usize,
    /// `E_max sum_i R_{h_i}(0)`.
    pub peak_bound: f64,
    pub tr_peak: f64,
    /// Largest competitor peak divided by `peak_bound`.
    pub worst_peak_ratio: f64,
    /// `sqrt(L_max integral (sum |H_i|^2)^2 df)`.
    pub energy_bound: f64,
    pub tr_received_energy: f64,
    /// Largest competitor received energy divided by `energy_bound`.
    pub worst_energy_ratio: f64,
    /// Smallest `L_s B / E_s^2` over every transmission tried.
    pub min_localization_ratio: f64,
}

/// Draws `1..=max_nodes` channels of `1..=max_taps` complex Gaussian taps and
/// `competitors` random transmissions, all rescaled to the energy budget
/// `e_max` (peak test) and to the localization budget `l_max` (received-energy test).
pub fn optimality_trial(
    seed: u64,
    max_nodes: usize,
    max_taps: usize,
    competitors: usize,
    e_max: f64,
    l_max: f64,
    bandwidth: f64,
) -> Result<OptimalityTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let nodes = rng.random_range(1..=max_nodes.max(1));
    let channels = (0..nodes)
        .map(|_| {
            let len = rng.random_range(1..=max_taps.max(1));
            ImpulseResponse::new(random_taps(&mut rng, len))
        })
        .collect::<Result<Vec<_>>>()?;
    let tr = AggregateTransmission::time_reversal(&channels);
    let t0 = tr.t0();

    let peak_bound = peak_power_bound(e_max, &channels);
    let tr_peak = peak_power(&tr.with_energy(e_max), &channels)?;
    let energy_bound = received_energy_bound(l_max, &channels, bandwidth);
    let tr_localized = tr.with_localization(l_max, bandwidth);
    let tr_received_energy = received_energy(&tr_localized, &channels)?;

    let localization_ratio = |tx: &AggregateTransmission| {
        let e = energy(tx);
        space_frequency_localization(tx, bandwidth) * bandwidth / (e * e)
    };
    let mut min_localization_ratio = localization_ratio(&tr_localized);
    let mut worst_peak_ratio = 0.0f64;
    let mut worst_energy_ratio = 0.0f64;
    for c in 0..competitors {
        let mut crng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1, c as u64]));
        let signals = channels.iter().map(|h| random_taps(&mut crng, h.len())).collect();
        let candidate = AggregateTransmission::new(signals, t0);
        let by_energy = candidate.with_energy(e_max);
        worst_peak_ratio = worst_peak_ratio.max(peak_power(&by_energy, &channels)? / peak_bound);
        let by_localization = candidate.with_localization(l_max, bandwidth);
        worst_energy_ratio = worst_energy_ratio.max(received_energy(&by_localization, &channels)? / energy_bound);
        min_localization_ratio = min_localization_ratio
            .min(localization_ratio(&by_energy))
            .min(localization_ratio(&by_localization));
    }
    Ok(OptimalityTrial {
        nodes,
        max_taps: channels.iter().map(ImpulseResponse::len).max().unwrap_or(0),
        peak_bound,
        tr_peak,
        worst_peak_ratio,
        energy_bound,
        tr_received_energy,
        worst_energy_ratio,
        min_localization_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reversal_examples() {
        let one = ImpulseResponse::from_real(&[1.0]).unwrap();
        assert_eq!(time_reverse_conjugate(&one), one);
        let h = ImpulseResponse::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(time_reverse_conjugate(&h).taps(), &[c(0.0, -1.0), c(1.0, 0.0)]);
    }

    #[test]
    fn empty_and_zero_responses_rejected() {
        assert_eq!(ImpulseResponse::new(vec![]), Err(Error::EmptyResponse));
        assert_eq!(ImpulseResponse::from_real(&[0.0, 0.0]), Err(Error::ZeroResponse));
    }

    #[test]
    fn receive_single_tap() {
        let h = vec![ImpulseResponse::from_real(&[1.0]).unwrap()];
        let tx = AggregateTransmission::time_reversal(&h);
        assert_eq!(receive(&tx, &h).unwrap(), vec![c(1.0, 0.0)]);
    }

    #[test]
    fn receive_two_tap_autocorrelation() {
        // hand convolution of [0.5, 1] with [1, 0.5]
        let h = vec![ImpulseResponse::from_real(&[1.0, 0.5]).unwrap()];
        let tx = AggregateTransmission::time_reversal(&h);
        let r = receive(&tx, &h).unwrap();
        let expected = [0.5, 1.25, 0.5];
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip(expected) {
            assert_relative_eq!(got.re, want, epsilon = 1e-15);
            assert_eq!(got.im, 0.0);
        }
        assert_eq!(tx.t0(), 1);
        assert_relative_eq!(r[1].re, h[0].autocorrelation(0).re);
    }

    #[test]
    fn two_node_peak_sums_autocorrelations() {
        let h = vec![
            ImpulseResponse::from_real(&[1.0]).unwrap(),
            ImpulseResponse::from_real(&[0.0, 1.0]).unwrap(),
        ];
        let tx = AggregateTransmission::time_reversal(&h);
        let r = receive(&tx, &h).unwrap();
        assert_eq!(tx.t0(), 1);
        assert_relative_eq!(r[1].re, 2.0);
        assert_relative_eq!(peak_power(&tx, &h).unwrap(), 4.0);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let h = vec![ImpulseResponse::from_real(&[1.0]).unwrap()];
        let tx = AggregateTransmission::new(vec![vec![c(1.0, 0.0)]; 2], 0);
        assert!(matches!(receive(&tx, &h), Err(Error::LengthMismatch { .. })));
        assert!(received_energy(&tx, &h).is_err());
    }

    #[test]
    fn zero_signal_has_no_power() {
        let h = vec![ImpulseResponse::from_real(&[1.0, 2.0]).unwrap()];
        let tx = AggregateTransmission::new(vec![vec![c(0.0, 0.0); 2]], 1);
        assert_eq!(peak_power(&tx, &h).unwrap(), 0.0);
        assert_eq!(energy(&tx), 0.0);
    }

    #[test]
    fn flat_spectrum_localization() {
        // a single impulse has a flat spectrum |S|^2 = E/B
        let e: f64 = 3.0;
        let b = 10.0;
        let tx = AggregateTransmission::new(vec![vec![c(e.sqrt(), 0.0)]], 0);
        assert_relative_eq!(space_frequency_localization(&tx, b), e * e / b, epsilon = 1e-12);
    }

    #[test]
    fn received_energy_matches_time_domain() {
        let h = vec![
            ImpulseResponse::new(vec![c(1.0, 0.3), c(-0.2, 0.5), c(0.1, 0.0)]).unwrap(),
            ImpulseResponse::new(vec![c(0.4, -1.0)]).unwrap(),
        ];
        let tx = AggregateTransmission::new(
            vec![
                vec![c(0.3, 0.1), c(1.0, -0.7)],
                vec![c(0.0, 2.0), c(0.5, 0.5), c(-1.0, 0.0)],
            ],
            1,
        );
        let r = receive(&tx, &h).unwrap();
        let time: f64 = r.iter().map(|v| v.norm_sqr()).sum();
        assert_relative_eq!(received_energy(&tx, &h).unwrap(), time, max_relative = 1e-12);
    }

    #[test]
    fn localization_rescaling_hits_target() {
        let tx = AggregateTransmission::new(vec![vec![c(1.0, 0.0), c(0.5, 0.5)]], 0);
        let scaled = tx.with_localization(7.0, 4.0);
        assert_relative_eq!(space_frequency_localization(&scaled, 4.0), 7.0, max_relative = 1e-12);
        let e = tx.with_energy(2.5);
        assert_relative_eq!(energy(&e), 2.5, max_relative = 1e-12);
    }
}
