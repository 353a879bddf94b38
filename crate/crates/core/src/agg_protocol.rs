//! Three-area aggregation protocol and its rate analysis.
//!
//! The grid is split around the sink into Area I (the inner square of
//! half-diagonal `d = n^beta`, multihop), Area II (a ring of `M` clusters of
//! `m = R^2` nodes with `R = n^gamma`, cooperative long-range TRC to the sink)
//! and Area III (the remainder, multihop toward Area II). The three areas are
//! served in non-overlapping time slots; inside each area short-range
//! transmissions follow a spatial-reuse TDMA schedule.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::phy_channel::ChannelParams;

/// Non-overlapping time shares, one per area.
pub const AREA_TIME_SLOTS: f64 = 3.0;

/// Broadcast radius used by the intra-area schedules.
pub const AREA_SCHEDULE_RADIUS: usize = 1;

/// Geometry of the three areas for an `n`-node network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaPartition {
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `n^beta`.
    pub d: f64,
    /// Cluster edge `n^gamma`.
    pub r: f64,
    /// Sink distance of the farthest Area II cluster, `d + R/sqrt2`.
    pub d_prime: f64,
    /// Number of clusters, `4(sqrt2 d + R)/R`.
    pub clusters: f64,
    /// Nodes per cluster, `R^2`.
    pub cluster_size: f64,
    /// Area I node count `2 d^2`.
    pub n1: f64,
    /// Area II node count `4 sqrt2 d R + 4 R^2`.
    pub n2: f64,
    /// Area III node count `n - (sqrt2 d + 2R)^2`.
    pub n3: f64,
    /// `beta < (4/alpha) gamma`, the regime in which cooperation pays off.
    pub in_regime: bool,
}

pub fn partition(n: f64, beta: f64, gamma: f64, alpha: f64) -> Result<AreaPartition> {
    if !(n >= 100.0) || !n.is_finite() {
        return Err(invalid("n", format!("partition needs n >= 100, got {n}")));
    }
    if !(0.0 < gamma && gamma < beta && beta < 0.5) {
        return Err(Error::ExponentOrder { beta, gamma });
    }
    if !(alpha > 2.0) {
        return Err(Error::DivergentInterference(alpha));
    }
    let d = n.powf(beta);
    let r = n.powf(gamma);
    let sq2 = std::f64::consts::SQRT_2;
    Ok(AreaPartition {
        n,
        alpha,
        beta,
        gamma,
        d,
        r,
        d_prime: d + r / sq2,
        clusters: 4.0 * (sq2 * d + r) / r,
        cluster_size: r * r,
        n1: 2.0 * d * d,
        n2: 4.0 * sq2 * d * r + 4.0 * r * r,
        n3: n - (sq2 * d + 2.0 * r).powi(2),
        in_regime: beta < 4.0 / alpha * gamma,
    })
}

/// Spatial-reuse TDMA on square cells of `l x l` nodes: a transmitter in each
/// cell reaches every node within `k` cells, and cells sharing a slot form a
/// square lattice of spacing `2(k+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TdmaSchedule {
    pub l: usize,
    pub k: usize,
}

pub fn build_schedule(l: usize, k: usize) -> Result<TdmaSchedule> {
    if l == 0 {
        return Err(invalid("l", "cell edge must be at least one node"));
    }
    Ok(TdmaSchedule { l, k })
}

impl TdmaSchedule {
    pub fn reuse_spacing(&self) -> i64 {
        2 * (self.k as i64 + 1)
    }

    pub fn frame_len(&self) -> usize {
        4 * (self.k + 1) * (self.k + 1)
    }

    pub fn slot(&self, cell_x: i64, cell_y: i64) -> usize {
        let s = self.reuse_spacing();
        (cell_x.rem_euclid(s) + s * cell_y.rem_euclid(s)) as usize
    }

    pub fn cell_of(&self, x: i64, y: i64) -> (i64, i64) {
        let l = self.l as i64;
        (x.div_euclid(l), y.div_euclid(l))
    }
}

/// Pairs of same-slot cells on a `board x board` grid of cells that are not
/// separated by a whole number of reuse periods on both axes.
pub fn reuse_violations(schedule: &TdmaSchedule, board: usize) -> usize {
    let s = schedule.reuse_spacing();
    let cells: Vec<(i64, i64)> = (0..board as i64)
        .flat_map(|y| (0..board as i64).map(move |x| (x, y)))
        .collect();
    cells
        .par_iter()
        .enumerate()
        .map(|(i, &(ax, ay))| {
            cells[i + 1..]
                .iter()
                .filter(|&&(bx, by)| schedule.slot(ax, ay) == schedule.slot(bx, by))
                .filter(|&&(bx, by)| {
                    let (dx, dy) = ((ax - bx).abs(), (ay - by).abs());
                    dx.max(dy) < s || dx % s != 0 || dy % s != 0
                })
                .count()
        })
        .sum()
}

/// Co-channel interference constant from [`derive_k1`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct K1Estimate {
    /// `partial_sum + tail_bound`, an upper bound on the lattice sum.
    pub value: f64,
    pub partial_sum: f64,
    pub tail_bound: f64,
    /// Number of lattice shells summed exactly.
    pub shells: usize,
    /// Worst receiver offset from its transmitter, in cells.
    pub worst_receiver: (f64, f64),
}

pub const K1_RELATIVE_TAIL: f64 = 1e-6;
pub const K1_MAX_SHELLS: usize = 2000;
const K1_SCREEN_SHELLS: usize = 40;
const K1_EDGE_SAMPLES: usize = 16;

/// Sum over co-channel lattice points `S*(i,j)` in Chebyshev shells
/// `first..=last` of `(|S*(i,j) - rho| / (k+1))^-alpha`.
fn lattice_shells(k: usize, alpha: f64, rho: (f64, f64), first: usize, last: usize) -> f64 {
    let s = 2.0 * (k as f64 + 1.0);
    let reach = k as f64 + 1.0;
    let term = |i: i64, j: i64| {
        let dx = s * i as f64 - rho.0;
        let dy = s * j as f64 - rho.1;
        ((dx * dx + dy * dy).sqrt() / reach).powf(-alpha)
    };
    (first..=last)
        .into_par_iter()
        .map(|shell| {
            let t = shell as i64;
            let mut sum = 0.0;
            for v in -t..t {
                // walk the square perimeter once, side by side
                sum += term(v, -t) + term(t, v) + term(-v, t) + term(-t, -v);
            }
            sum
        })
        .collect::<Vec<f64>>()
        .iter()
        // sequential addition keeps the result independent of the thread count
        .sum()
}

/// Bound on the shells beyond `last`: every receiver is within `k+1` cells of
/// its transmitter, so a point in shell `t` is at least `(2t - 1)(k+1)` away
/// and there are `8t <= 8(2t - 1)` points per shell.
fn lattice_tail(alpha: f64, last: usize) -> f64 {
    4.0 * (2.0 * last as f64 - 1.0).powf(2.0 - alpha) / (alpha - 2.0)
}

/// Receiver offsets on the boundary of the diamond `|x| + |y| <= k+1`.
fn boundary_receivers(k: usize) -> Vec<(f64, f64)> {
    let reach = k as f64 + 1.0;
    let corners = [(reach, 0.0), (0.0, reach), (-reach, 0.0), (0.0, -reach)];
    let mut out = Vec::new();
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        for s in 0..K1_EDGE_SAMPLES {
            let t = s as f64 / K1_EDGE_SAMPLES as f64;
            out.push((a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1)));
        }
    }
    out
}

/// Normalized worst-case interference of the co-channel lattice:
/// `K1 = max_rho sum_{j != 0} (|S j - rho| / (k+1))^-alpha`, with `rho`
/// ranging over receiver positions. Each term is subharmonic, so the maximum
/// sits on the boundary of the receiver region.
pub fn derive_k1(k: usize, alpha: f64) -> Result<K1Estimate> {
    if !(alpha > 2.0) {
        return Err(Error::DivergentInterference(alpha));
    }
    let candidates = boundary_receivers(k);
    let screened: Vec<f64> = candidates
        .iter()
        .map(|&rho| lattice_shells(k, alpha, rho, 1, K1_SCREEN_SHELLS))
        .collect();
    let worst = screened
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| candidates[i])
        .expect("receiver candidates are nonempty");

    let mut partial = lattice_shells(k, alpha, worst, 1, K1_SCREEN_SHELLS);
    let mut shells = K1_SCREEN_SHELLS;
    while lattice_tail(alpha, shells) >= K1_RELATIVE_TAIL * partial && shells < K1_MAX_SHELLS {
        let next = (shells * 2).min(K1_MAX_SHELLS);
        partial += lattice_shells(k, alpha, worst, shells + 1, next);
        shells = next;
    }
    let tail = lattice_tail(alpha, shells);
    Ok(K1Estimate {
        value: partial + tail,
        partial_sum: partial,
        tail_bound: tail,
        shells,
        worst_receiver: worst,
    })
}

/// Broadcast rate guaranteed by the schedule:
/// `B/(4(k+1)^2) * log2(1 + P/(B N0 [l(k+1)]^alpha + K1 P))`.
pub fn tdma_broadcast_rate(l: usize, k: usize, k1: f64, params: &ChannelParams) -> f64 {
    let frame = 4.0 * ((k + 1) as f64).powi(2);
    let reach = (l * (k + 1)) as f64;
    let p = params.power_cap;
    let sinr = p / (params.bandwidth * params.noise_density * reach.powf(params.alpha) + k1 * p);
    params.bandwidth / frame * sinr.log2_1p()
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() / std::f64::consts::LN_2
    }
}

/// Worst-receiver outcome of one frame slot of the schedule on a finite board.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleSinrReport {
    pub min_sinr: f64,
    /// `B / frame * log2(1 + min_sinr)`.
    pub rate: f64,
    pub transmitters: usize,
    pub receivers_checked: usize,
}

/// Places one transmitter at the center node of every slot-0 cell of a
/// `board x board` cell grid and evaluates the SINR at every node within
/// `max(1, l k)` hops of each transmitter under deterministic path loss.
/// Every slot is a translate of slot 0, so this covers the whole frame.
pub fn simulate_schedule(schedule: &TdmaSchedule, board: usize, params: &ChannelParams) -> ScheduleSinrReport {
    let l = schedule.l as i64;
    let s = schedule.reuse_spacing();
    let txs: Vec<(i64, i64)> = (0..board as i64)
        .step_by(s as usize)
        .flat_map(|cy| (0..board as i64).step_by(s as usize).map(move |cx| (cx, cy)))
        .map(|(cx, cy)| (cx * l + l / 2, cy * l + l / 2))
        .collect();
    let radius = (schedule.l as i64 * schedule.k as i64).max(1);
    let offsets: Vec<(i64, i64)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx.abs() + dy.abs() <= radius && (dx, dy) != (0, 0))
        .collect();
    let snr = params.power_cap / (params.bandwidth * params.noise_density);
    let alpha = params.alpha;
    let gain = |a: (i64, i64), b: (i64, i64)| {
        let (dx, dy) = ((a.0 - b.0) as f64, (a.1 - b.1) as f64);
        (dx * dx + dy * dy).sqrt().powf(-alpha)
    };
    let min_sinr = txs
        .par_iter()
        .map(|&tx| {
            offsets
                .iter()
                .map(|&(dx, dy)| {
                    let rx = (tx.0 + dx, tx.1 + dy);
                    let interference: f64 = txs.iter().filter(|&&o| o != tx).map(|&o| gain(o, rx)).sum();
                    snr * gain(tx, rx) / (1.0 + snr * interference)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min);
    ScheduleSinrReport {
        min_sinr,
        rate: params.bandwidth / schedule.frame_len() as f64 * min_sinr.log2_1p(),
        transmitters: txs.len(),
        receivers_checked: txs.len() * offsets.len(),
    }
}

/// Constants of the area rate expressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    /// Inter-cluster interference factor at the sink; 1 under TDMA across clusters.
    pub k_prime: f64,
    /// Effective noise-plus-interference factor of the short-range schedule,
    /// `[l(k+1)]^alpha + K1 P/(B N0)` at `l = k = 1`.
    pub k_double_prime: f64,
    pub k1: f64,
}

impl RateConstants {
    pub fn derive(params: &ChannelParams) -> Result<Self> {
        let k = AREA_SCHEDULE_RADIUS;
        let k1 = derive_k1(k, params.alpha)?.value;
        let reach = (k + 1) as f64;
        Ok(Self {
            k_prime: 1.0,
            k_double_prime: reach.powf(params.alpha) + k1 * params.snr(),
            k1,
        })
    }

    pub fn with_k_prime(self, k_prime: f64) -> Self {
        Self { k_prime, ..self }
    }
}

/// Per-node rates each area can sustain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaRates {
    pub area1: f64,
    pub area2: f64,
    pub area3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingArea {
    Inner,
    Clusters,
    Outer,
}

impl AreaRates {
    pub fn min(&self) -> f64 {
        self.area1.min(self.area2).min(self.area3)
    }

    pub fn binding(&self) -> BindingArea {
        let m = self.min();
        if m == self.area2 {
            BindingArea::Clusters
        } else if m == self.area1 {
            BindingArea::Inner
        } else {
            BindingArea::Outer
        }
    }
}

/// Frame length of one short-range schedule slot group: the `k = 1` TDMA
/// frame times the three area time shares.
pub fn area_frame() -> f64 {
    4.0 * ((AREA_SCHEDULE_RADIUS + 1) as f64).powi(2) * AREA_TIME_SLOTS
}

/// Short-range per-slot rate shared by Areas I and III, `(B/48) log2(1 + P/(B N0 K''))`.
pub fn short_range_rate(consts: &RateConstants, params: &ChannelParams) -> f64 {
    let b = params.bandwidth;
    b / area_frame() * (params.power_cap / (b * params.noise_density * consts.k_double_prime)).log2_1p()
}

/// Long-range cluster-to-sink rate of the farthest cluster in its time share,
/// before dividing by the traffic it carries.
pub fn cluster_link_argument(p: &AreaPartition, consts: &RateConstants, params: &ChannelParams) -> f64 {
    let s = params.symbol_rate();
    p.r.powi(4) * p.d_prime.powf(-p.alpha) * params.power_cap / (s * params.noise_density * consts.k_prime)
}

pub fn area_constraints(p: &AreaPartition, consts: &RateConstants, params: &ChannelParams) -> AreaRates {
    let short = short_range_rate(consts, params);
    let sq2 = std::f64::consts::SQRT_2;
    let outer_hops = (2.0 * p.n / (sq2 * p.d + 2.0 * p.r)).ceil();
    let s = params.symbol_rate();
    AreaRates {
        area1: short / (2.0 * p.d - p.r).powi(2),
        area2: s / (area_frame() * p.n) * cluster_link_argument(p, consts, params).log2_1p(),
        area3: short / outer_hops,
    }
}

pub fn achievable_lambda(p: &AreaPartition, consts: &RateConstants, params: &ChannelParams) -> f64 {
    area_constraints(p, consts, params).min()
}

/// Per-node rate if all `n` nodes could pool their power at the sink for free:
/// `B log2(1 + n^2 P/(B N0)) / n`.
pub fn genie_upper_bound(n: f64, params: &ChannelParams) -> f64 {
    params.bandwidth * (n * n * params.snr()).log2_1p() / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub n: f64,
    pub lambda: f64,
    /// `lambda * n / ln n`.
    pub lambda_norm: f64,
    pub genie: f64,
    pub genie_norm: f64,
}

pub fn scaling_table(n_list: &[f64], lambda: impl Fn(f64) -> f64, genie: impl Fn(f64) -> f64) -> Vec<ScalingRow> {
    n_list
        .iter()
        .map(|&n| {
            let (l, g) = (lambda(n), genie(n));
            let norm = n / n.ln();
            ScalingRow {
                n,
                lambda: l,
                lambda_norm: l * norm,
                genie: g,
                genie_norm: g * norm,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub partitions: Vec<AreaPartition>,
    pub binding: Vec<BindingArea>,
    /// max/min of `lambda * n / ln n` over rows with `n >= n_max / 100`.
    pub top_spread: f64,
    /// Largest `genie / lambda` over the same rows.
    pub top_genie_gap: f64,
    pub below_genie: bool,
}

/// Spread and genie gap over the top two decades of the sweep.
pub fn top_two_decades(rows: &[ScalingRow]) -> (f64, f64) {
    let n_max = rows.iter().map(|r| r.n).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&ScalingRow> = rows.iter().filter(|r| r.n >= n_max / 100.0 * (1.0 - 1e-12)).collect();
    let hi = top.iter().map(|r| r.lambda_norm).fold(f64::NEG_INFINITY, f64::max);
    let lo = top.iter().map(|r| r.lambda_norm).fold(f64::INFINITY, f64::min);
    let gap = top.iter().map(|r| r.genie / r.lambda).fold(f64::NEG_INFINITY, f64::max);
    (hi / lo, gap)
}

pub fn scaling_experiment(
    n_list: &[f64],
    beta: f64,
    gamma: f64,
    consts: &RateConstants,
    params: &ChannelParams,
) -> Result<ScalingReport> {
    if n_list.len() < 4 {
        return Err(invalid("n_list", "need at least 4 sweep points"));
    }
    if n_list.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("n_list", "sweep must be strictly increasing"));
    }
    if n_list[n_list.len() - 1] / n_list[0] < 1e3 * (1.0 - 1e-12) {
        return Err(invalid("n_list", "sweep must span at least three decades"));
    }
    let partitions = n_list
        .iter()
        .map(|&n| partition(n, beta, gamma, params.alpha))
        .collect::<Result<Vec<_>>>()?;
    let binding = partitions
        .iter()
        .map(|p| area_constraints(p, consts, params).binding())
        .collect();
    let rows = scaling_table(
        n_list,
        |n| {
            let p = partition(n, beta, gamma, params.alpha).expect("validated above");
            achievable_lambda(&p, consts, params)
        },
        |n| genie_upper_bound(n, params),
    );
    let (top_spread, top_genie_gap) = top_two_decades(&rows);
    let below_genie = rows.iter().all(|r| r.lambda <= r.genie);
    Ok(ScalingReport {
        rows,
        partitions,
        binding,
        top_spread,
        top_genie_gap,
        below_genie,
    })
}

/// `10^from, 10^(from+1), ..., 10^to`.
pub fn decades(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 10f64.powi(e)).collect()
}
