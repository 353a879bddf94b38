//! Network lifetime under transmit-energy budgets.
//!
//! Every node starts with `e0` joules and generates `lambda(n)` bit/s. A node
//! pushing traffic `T` through bandwidth `W` spends `W N0 (e^(T/W) - 1)`, which
//! is `N0 T` at low duty cycle. The lifetime is `e0` over the largest per-node
//! power; the sink has an external supply and is excluded.

use crate::agg_protocol::{area_frame, AreaPartition, RateConstants};
use crate::error::{invalid, Result};
use crate::grid_routing::TrafficMap;
use crate::phy_channel::ChannelParams;
use crate::stats::{log_log_slope, LineFit};

/// `lambda(n) = coeff * n^-exponent`; `exponent > 1` keeps `n lambda -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSchedule {
    pub coeff: f64,
    pub exponent: f64,
}

impl RateSchedule {
    pub fn at(&self, n: f64) -> f64 {
        self.coeff * n.powf(-self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeParams {
    /// Initial energy per node (J).
    pub e0: f64,
    pub rate: RateSchedule,
    /// Largest multihop load as a fraction of `n`.
    pub c2: f64,
}

impl LifetimeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.e0 > 0.0) {
            return Err(invalid(
                "e0",
                format!("initial energy must be positive, got {}", self.e0),
            ));
        }
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(invalid(
                "c2",
                format!("load fraction must lie in (0, 1), got {}", self.c2),
            ));
        }
        if !(self.rate.coeff >= 0.0) {
            return Err(invalid("rate", "rate coefficient must be nonnegative"));
        }
        Ok(())
    }
}

/// Largest non-sink load of the multihop tree divided by `n`.
pub fn estimate_c2(traffic: &TrafficMap) -> f64 {
    traffic.max_load() as f64 / traffic.network().node_count() as f64
}

/// `ln(e^x - 1)` without overflow for large `x`.
pub fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// Lifetime in seconds, carried in log space so huge values stay finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Lifetime {
    pub ln_seconds: f64,
}

impl Lifetime {
    pub fn from_ln_power(e0: f64, ln_power: f64) -> Self {
        Self {
            ln_seconds: e0.ln() - ln_power,
        }
    }

    pub fn seconds(&self) -> f64 {
        self.ln_seconds.exp()
    }

    /// Zero traffic never drains a node.
    pub fn is_infinite(&self) -> bool {
        self.ln_seconds == f64::INFINITY
    }
}

/// `ln(W N0 (e^(T/W) - 1))` for traffic `T` on bandwidth `W`.
fn ln_link_power(width: f64, n0: f64, traffic: f64) -> f64 {
    if traffic == 0.0 {
        return f64::NEG_INFINITY;
    }
    (width * n0).ln() + ln_expm1(traffic / width)
}

/// `e0 / (B N0 (e^(c2 n lambda / B) - 1))`.
pub fn baseline_lifetime(n: f64, lp: &LifetimeParams, params: &ChannelParams) -> Lifetime {
    let traffic = lp.c2 * n * lp.rate.at(n);
    Lifetime::from_ln_power(lp.e0, ln_link_power(params.bandwidth, params.noise_density, traffic))
}

/// First-order form `e0 / (c2 n lambda N0)`.
pub fn baseline_lifetime_asymptotic(n: f64, lp: &LifetimeParams, params: &ChannelParams) -> f64 {
    lp.e0 / (lp.c2 * n * lp.rate.at(n) * params.noise_density)
}

/// Per-node transmit powers of the cooperative protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    /// Multihop node in Area I, `B N0 (e^((2d-R)^2 lambda / B) - 1)`.
    pub area1: f64,
    /// Intra-cluster gathering and forwarding in Area II.
    pub intra: f64,
    /// Cooperative long-range transmission from Area II to the sink.
    pub inter: f64,
    /// `intra + inter`.
    pub area2: f64,
    pub ln_area1: f64,
    pub ln_area2: f64,
    /// Linearized (`e^x - 1 ~ x`) counterparts.
    pub area1_linear: f64,
    pub intra_linear: f64,
    pub inter_linear: f64,
    /// `lambda N0 n (n^(2gamma-1) + 16 n^-(beta-gamma) + 48 K' n^-(4gamma-alpha beta))`.
    pub area2_asymptotic: f64,
    /// `N0 n^(2beta) lambda`.
    pub area1_asymptotic: f64,
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

pub fn trc_power_profile(
    p: &AreaPartition,
    lambda: f64,
    consts: &RateConstants,
    params: &ChannelParams,
) -> PowerProfile {
    let s = params.symbol_rate();
    let n0 = params.noise_density;
    let n = p.n;
    let traffic1 = (2.0 * p.d - p.r).powi(2) * lambda;
    let traffic_intra = lambda * p.cluster_size + 16.0 * n * lambda / (p.clusters + 4.0);
    let traffic_inter = area_frame() * n * lambda;
    // gain R^4 d'^-alpha of the coherent cluster
    let array_gain = p.r.powi(4) * p.d_prime.powf(-p.alpha);

    let ln_area1 = ln_link_power(params.bandwidth, n0, traffic1);
    let ln_intra = ln_link_power(s, n0, traffic_intra);
    let ln_inter = ln_link_power(s, n0, traffic_inter) + (consts.k_prime / array_gain).ln();
    let ln_area2 = log_add(ln_intra, ln_inter);

    let asym = lambda
        * n0
        * n
        * (n.powf(2.0 * p.gamma - 1.0)
            + 16.0 * n.powf(-(p.beta - p.gamma))
            + area_frame() * consts.k_prime * n.powf(-(4.0 * p.gamma - p.alpha * p.beta)));
    PowerProfile {
        area1: ln_area1.exp(),
        intra: ln_intra.exp(),
        inter: ln_inter.exp(),
        area2: ln_area2.exp(),
        ln_area1,
        ln_area2,
        area1_linear: n0 * traffic1,
        intra_linear: n0 * traffic_intra,
        inter_linear: n0 * traffic_inter * consts.k_prime / array_gain,
        area2_asymptotic: asym,
        area1_asymptotic: n0 * n.powf(2.0 * p.beta) * lambda,
    }
}

/// `e0 / max(P_I, P_II)`.
pub fn trc_lifetime(
    p: &AreaPartition,
    lp: &LifetimeParams,
    consts: &RateConstants,
    params: &ChannelParams,
) -> Lifetime {
    let profile = trc_power_profile(p, lp.rate.at(p.n), consts, params);
    Lifetime::from_ln_power(lp.e0, profile.ln_area1.max(profile.ln_area2))
}

/// Growth exponent of `lifetime * n lambda`: `min(1 - 2beta, 4gamma - alpha beta, beta - gamma)`.
pub fn lifetime_exponent(alpha: f64, beta: f64, gamma: f64) -> f64 {
    (1.0 - 2.0 * beta).min(4.0 * gamma - alpha * beta).min(beta - gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeRow {
    pub n: f64,
    pub baseline: Lifetime,
    pub trc: Lifetime,
}

impl LifetimeRow {
    pub fn ratio(&self) -> f64 {
        (self.trc.ln_seconds - self.baseline.ln_seconds).exp()
    }
}

pub fn lifetime_ratio_experiment(
    n_list: &[f64],
    beta: f64,
    gamma: f64,
    lp: &LifetimeParams,
    consts: &RateConstants,
    params: &ChannelParams,
) -> Result<Vec<LifetimeRow>> {
    lp.validate()?;
    n_list
        .iter()
        .map(|&n| {
            let p = crate::agg_protocol::partition(n, beta, gamma, params.alpha)?;
            Ok(LifetimeRow {
                n,
                baseline: baseline_lifetime(n, lp, params),
                trc: trc_lifetime(&p, lp, consts, params),
            })
        })
        .collect()
}

/// Fit of `ln(lifetime * n lambda / e0) = slope ln n - ln c3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub c3: f64,
}

pub fn fit_lifetime_exponent(rows: &[LifetimeRow], lp: &LifetimeParams) -> ExponentFit {
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let scaled: Vec<f64> = rows
        .iter()
        .map(|r| (r.trc.ln_seconds + (r.n * lp.rate.at(r.n)).ln() - lp.e0.ln()).exp())
        .collect();
    let LineFit { slope, intercept } = log_log_slope(&ns, &scaled);
    ExponentFit {
        slope,
        c3: (-intercept).exp(),
    }
}

/// Log-log slope of the TRC/baseline lifetime ratio.
pub fn ratio_slope(rows: &[LifetimeRow]) -> f64 {
    let ns: Vec<f64> = rows.iter().map(|r| r.n).collect();
    let ratios: Vec<f64> = rows.iter().map(LifetimeRow::ratio).collect();
    log_log_slope(&ns, &ratios).slope
}
