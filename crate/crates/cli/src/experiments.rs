//! One runner per experiment family. Each returns its tables and the checks
//! whose outcome sets the exit status.

use aggsim_core::agg_protocol::{
    build_schedule, decades, derive_k1, reuse_violations, scaling_experiment, simulate_schedule, tdma_broadcast_rate,
    BindingArea, RateConstants,
};
use aggsim_core::grid_routing::{build_tree, check_traffic_bounds, GridNetwork};
use aggsim_core::lifetime::{
    estimate_c2, fit_lifetime_exponent, lifetime_exponent, lifetime_ratio_experiment, LifetimeParams, RateSchedule,
};
use aggsim_core::phy_channel::{derive_seed, ChannelParams};
use aggsim_core::stats::log_log_slope;
use aggsim_core::tr_waveform::optimality_trial;
use aggsim_core::trc_link::{monte_carlo_x, TrcLinkConfig, SUMMARY_COLUMNS};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{
    ChannelArgs, Experiment, LifetimeArgs, McXArgs, ProtocolArgs, RouteArgs, ScalingArgs, TdmaArgs, WaveformArgs,
};
use crate::output::{Cell, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    /// Additional CSV files, keyed by file suffix.
    pub extra_tables: Vec<(&'static str, Table)>,
    /// JSON side files, keyed by file suffix.
    pub json: Vec<(&'static str, serde_json::Value)>,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(table: Table) -> Self {
        Self {
            table,
            extra_tables: Vec::new(),
            json: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_experiment(experiment: &Experiment) -> aggsim_core::Result<Report> {
    match experiment {
        Experiment::McX(a) => mc_x(a),
        Experiment::Waveform(a) => waveform(a),
        Experiment::Route(a) => route(a),
        Experiment::Scaling(a) => scaling(a),
        Experiment::Lifetime(a) => lifetime(a),
        Experiment::Tdma(a) => tdma(a),
    }
}

fn channel_params(c: &ChannelArgs, bins_per_half: usize) -> aggsim_core::Result<ChannelParams> {
    let p = ChannelParams::new(c.bandwidth, c.delta, bins_per_half)
        .with_alpha(c.alpha)
        .with_noise_density(c.n0)
        .with_power_cap(c.power)
        .with_rho0(c.rho0);
    p.validate()?;
    Ok(p)
}

fn protocol_params(a: &ProtocolArgs) -> aggsim_core::Result<(ChannelParams, RateConstants)> {
    let p = ChannelParams::new(a.bandwidth, a.delta, 8)
        .with_alpha(a.alpha)
        .with_noise_density(a.n0)
        .with_power_cap(a.power);
    let consts = RateConstants::derive(&p)?.with_k_prime(a.k_prime);
    Ok((p, consts))
}

fn mc_x(a: &McXArgs) -> aggsim_core::Result<Report> {
    let params = channel_params(&a.channel, a.bins_per_half)?;
    let mut report = Report::new(Table::new(&SUMMARY_COLUMNS));
    let mut variances = Vec::new();
    for &m in &a.m {
        let stats = monte_carlo_x(&TrcLinkConfig {
            params,
            m,
            r: a.r,
            trials: a.trials,
            master_seed: a.seed,
        })?;
        report
            .table
            .push(stats.summary_record(&params).iter().map(|&v| Cell::from(v)).collect());
        let rel = (stats.x.mean - stats.predicted_mean).abs() / stats.predicted_mean;
        report.checks.push(Check::new(
            format!("m={m}: sample mean within 10% of m^2 r^-alpha"),
            rel < 0.1,
            format!("relative error {rel:.4}"),
        ));
        report.checks.push(Check::new(
            format!("m={m}: moments finite, samples nonnegative"),
            stats.x.is_finite() && stats.x.min >= 0.0,
            format!("min {:.6e}", stats.x.min),
        ));
        report.checks.push(Check::new(
            format!("m={m}: constant quadratures stable under refinement"),
            stats.quadrature_stable,
            format!("K0 {:.6e}, K_sigma {:.6e}", stats.k0, stats.k_sigma),
        ));
        variances.push((m as f64, stats.x.variance));
    }
    if variances.len() >= 2 {
        let (ms, vs): (Vec<f64>, Vec<f64>) = variances.into_iter().unzip();
        let slope = log_log_slope(&ms, &vs).slope;
        report.checks.push(Check::new(
            "variance grows like m^3",
            (slope - 3.0).abs() <= 0.2,
            format!("log-log slope {slope:.4}"),
        ));
    }
    Ok(report)
}

const WAVEFORM_COLUMNS: [&str; 10] = [
    "trial",
    "nodes",
    "max_taps",
    "peak_bound",
    "tr_peak",
    "worst_peak_ratio",
    "energy_bound",
    "tr_received_energy",
    "worst_energy_ratio",
    "min_localization_ratio",
];

fn waveform(a: &WaveformArgs) -> aggsim_core::Result<Report> {
    let trials = (0..a.trials)
        .into_par_iter()
        .map(|t| {
            optimality_trial(
                derive_seed(a.seed, &[t as u64]),
                a.max_nodes,
                a.max_taps,
                a.competitors,
                a.e_max,
                a.l_max,
                a.bandwidth,
            )
        })
        .collect::<aggsim_core::Result<Vec<_>>>()?;
    let mut report = Report::new(Table::new(&WAVEFORM_COLUMNS));
    for (t, r) in trials.iter().enumerate() {
        report.table.push(vec![
            t.into(),
            r.nodes.into(),
            r.max_taps.into(),
            r.peak_bound.into(),
            r.tr_peak.into(),
            r.worst_peak_ratio.into(),
            r.energy_bound.into(),
            r.tr_received_energy.into(),
            r.worst_energy_ratio.into(),
            r.min_localization_ratio.into(),
        ]);
    }
    let fold = |f: &dyn Fn(&aggsim_core::tr_waveform::OptimalityTrial) -> f64| {
        trials.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
    };
    let worst_peak = fold(&|r| r.worst_peak_ratio);
    let peak_gap = fold(&|r| (r.tr_peak - r.peak_bound).abs() / r.peak_bound);
    let worst_energy = fold(&|r| r.worst_energy_ratio);
    let energy_gap = fold(&|r| (r.tr_received_energy - r.energy_bound).abs() / r.energy_bound);
    let min_loc = -fold(&|r| -r.min_localization_ratio);
    report.checks = vec![
        Check::new(
            "competitors stay below the peak-power bound",
            worst_peak <= 1.0 + 1e-9,
            format!("worst ratio {worst_peak:.12}"),
        ),
        Check::new(
            "time reversal attains the peak-power bound",
            peak_gap < 1e-9,
            format!("max relative gap {peak_gap:.3e}"),
        ),
        Check::new(
            "competitors stay below the received-energy bound",
            worst_energy <= 1.0 + 1e-9,
            format!("worst ratio {worst_energy:.12}"),
        ),
        Check::new(
            "time reversal attains the received-energy bound",
            energy_gap < 1e-6,
            format!("max relative gap {energy_gap:.3e}"),
        ),
        Check::new(
            "localization at least E^2/B",
            min_loc >= 1.0 - 1e-9,
            format!("min L B / E^2 {min_loc:.12}"),
        ),
    ];
    Ok(report)
}

const ROUTE_COLUMNS: [&str; 7] = ["x", "y", "load", "lower_bound", "upper_bound", "ok", "certified"];
const EDGE_COLUMNS: [&str; 4] = ["child_x", "child_y", "parent_x", "parent_y"];

fn route(a: &RouteArgs) -> aggsim_core::Result<Report> {
    let net = GridNetwork::from_node_count(a.n)?;
    let tree = build_tree(&net);
    let annulus = (a.rho_min_sq, a.rho_max_sq.unwrap_or(a.n as u64 / 25));
    let bounds = check_traffic_bounds(&tree.traffic, annulus);
    let mut report = Report::new(Table::new(&ROUTE_COLUMNS));
    for row in &bounds.rows {
        report.table.push(vec![
            row.node.x.into(),
            row.node.y.into(),
            row.load.into(),
            row.lower.into(),
            row.upper.into(),
            Cell::Int(row.ok as i64),
            Cell::Int(row.certified as i64),
        ]);
    }
    let mut edges = Table::new(&EDGE_COLUMNS);
    for (c, p) in tree.edges() {
        edges.push(vec![c.x.into(), c.y.into(), p.x.into(), p.y.into()]);
    }
    report.extra_tables.push(("edges.csv", edges));

    let n = a.n as u64;
    let spread = bounds.max_ratio / bounds.min_ratio;
    report.checks = vec![
        Check::new(
            "tree has n-1 edges",
            tree.edge_count() as u64 == n - 1,
            format!("{} edges", tree.edge_count()),
        ),
        Check::new(
            "sink neighbors deliver n-1 units",
            tree.traffic.sink_inflow() == n - 1,
            format!("inflow {}", tree.traffic.sink_inflow()),
        ),
        Check::new(
            "traffic bounds hold on the certification annulus",
            bounds.violations.is_empty(),
            format!(
                "{} of {} nodes violate ({} below lower, {} above upper); load*rho/n in [{:.4}, {:.4}]{}",
                bounds.violations.len(),
                bounds.certified_count,
                bounds.lower_violations(),
                bounds.upper_violations(),
                bounds.min_ratio,
                bounds.max_ratio,
                bounds
                    .regime_warning
                    .as_deref()
                    .map(|w| format!("; {w}"))
                    .unwrap_or_default()
            ),
        ),
        Check::new(
            "load balanced within a constant factor",
            spread <= 16.0 / 2f64.sqrt(),
            format!("max/min of load*rho {spread:.4}"),
        ),
    ];
    Ok(report)
}

const SCALING_COLUMNS: [&str; 9] = [
    "n",
    "lambda",
    "lambda_norm",
    "genie",
    "genie_norm",
    "lambda_area1",
    "lambda_area2",
    "lambda_area3",
    "binding_area",
];

fn area_label(b: BindingArea) -> &'static str {
    match b {
        BindingArea::Inner => "I",
        BindingArea::Clusters => "II",
        BindingArea::Outer => "III",
    }
}

fn scaling(a: &ScalingArgs) -> aggsim_core::Result<Report> {
    let (params, consts) = protocol_params(&a.protocol)?;
    let ns = decades(a.n_min_exp, a.n_max_exp);
    let sweep = scaling_experiment(&ns, a.protocol.beta, a.protocol.gamma, &consts, &params)?;
    let mut report = Report::new(Table::new(&SCALING_COLUMNS));
    let mut geometry = Vec::new();
    for ((row, p), b) in sweep.rows.iter().zip(&sweep.partitions).zip(&sweep.binding) {
        let rates = aggsim_core::agg_protocol::area_constraints(p, &consts, &params);
        report.table.push(vec![
            row.n.into(),
            row.lambda.into(),
            row.lambda_norm.into(),
            row.genie.into(),
            row.genie_norm.into(),
            rates.area1.into(),
            rates.area2.into(),
            rates.area3.into(),
            area_label(*b).into(),
        ]);
        geometry.push(json!({
            "n": p.n, "d": p.d, "r": p.r, "d_prime": p.d_prime, "clusters": p.clusters,
            "cluster_size": p.cluster_size, "n1": p.n1, "n2": p.n2, "n3": p.n3, "in_regime": p.in_regime,
        }));
    }
    report.json.push((
        "partition.json",
        json!({
            "alpha": a.protocol.alpha, "beta": a.protocol.beta, "gamma": a.protocol.gamma,
            "k1": consts.k1, "k_prime": consts.k_prime, "k_double_prime": consts.k_double_prime,
            "partitions": geometry,
        }),
    ));
    let in_regime = sweep.partitions.iter().all(|p| p.in_regime);
    report.checks = vec![
        Check::new(
            "exponents inside the cooperative regime",
            in_regime,
            format!(
                "beta {} vs 4 gamma / alpha {}",
                a.protocol.beta,
                4.0 * a.protocol.gamma / a.protocol.alpha
            ),
        ),
        Check::new(
            "lambda n / ln n within a factor 2 over the top two decades",
            sweep.top_spread < 2.0,
            format!("max/min {:.4}", sweep.top_spread),
        ),
        Check::new(
            "lambda below the genie-aided bound",
            sweep.below_genie,
            format!("largest genie/lambda over the top decades {:.4e}", sweep.top_genie_gap),
        ),
    ];
    Ok(report)
}

const LIFETIME_COLUMNS: [&str; 4] = ["n", "baseline", "trc", "ratio"];

fn lifetime(a: &LifetimeArgs) -> aggsim_core::Result<Report> {
    let (params, consts) = protocol_params(&a.protocol)?;
    let c2 = match a.c2 {
        Some(c) => c,
        None => estimate_c2(&build_tree(&GridNetwork::new(a.c2_side)?).traffic),
    };
    let lp = LifetimeParams {
        e0: a.e0,
        rate: RateSchedule {
            coeff: a.lambda_coeff,
            exponent: a.lambda_exponent,
        },
        c2,
    };
    let ns = decades(a.n_min_exp, a.n_max_exp);
    let (beta, gamma) = (a.protocol.beta, a.protocol.gamma);
    let rows = lifetime_ratio_experiment(&ns, beta, gamma, &lp, &consts, &params)?;
    let mut report = Report::new(Table::new(&LIFETIME_COLUMNS));
    for r in &rows {
        report.table.push(vec![
            r.n.into(),
            r.baseline.seconds().into(),
            r.trc.seconds().into(),
            r.ratio().into(),
        ]);
    }
    let fit = fit_lifetime_exponent(&rows, &lp);
    let expected = lifetime_exponent(a.protocol.alpha, beta, gamma);
    let top: Vec<f64> = rows.iter().rev().take(4).rev().map(|r| r.ratio()).collect();
    report.checks = vec![
        Check::new(
            "lifetime exponent matches min(1-2beta, 4gamma-alpha beta, beta-gamma)",
            (fit.slope - expected).abs() <= 0.01,
            format!(
                "fitted {:.4} vs {expected:.4}; c3 {:.4e}; c2 {c2:.4}",
                fit.slope, fit.c3
            ),
        ),
        Check::new(
            "lifetime ratio increasing over the top three decades",
            top.windows(2).all(|w| w[1] > w[0]),
            format!(
                "ratios {}",
                top.iter().map(|r| format!("{r:.4e}")).collect::<Vec<_>>().join(", ")
            ),
        ),
    ];
    Ok(report)
}

const TDMA_COLUMNS: [&str; 10] = [
    "l",
    "k",
    "alpha",
    "k1",
    "k1_tail",
    "bound_rate",
    "simulated_rate",
    "min_sinr",
    "reuse_violations",
    "ok",
];

fn tdma(a: &TdmaArgs) -> aggsim_core::Result<Report> {
    let mut report = Report::new(Table::new(&TDMA_COLUMNS));
    let mut worst_margin = f64::INFINITY;
    let mut total_violations = 0;
    for &alpha in &a.alpha {
        let params = ChannelParams::new(1.0, 1.0, 8).with_alpha(alpha).with_power_cap(a.snr);
        for &k in &a.k {
            let k1 = derive_k1(k, alpha)?;
            let schedule = build_schedule(a.l, k)?;
            let sim = simulate_schedule(&schedule, a.board, &params);
            let bound = tdma_broadcast_rate(a.l, k, k1.value, &params);
            let violations = reuse_violations(&schedule, a.board);
            let ok = sim.rate >= bound && violations == 0;
            worst_margin = worst_margin.min(sim.rate / bound);
            total_violations += violations;
            report.table.push(vec![
                a.l.into(),
                k.into(),
                alpha.into(),
                k1.value.into(),
                k1.tail_bound.into(),
                bound.into(),
                sim.rate.into(),
                sim.min_sinr.into(),
                violations.into(),
                Cell::Int(ok as i64),
            ]);
        }
    }
    report.checks = vec![
        Check::new(
            "simulated schedule rate at least the bound",
            worst_margin >= 1.0,
            format!("smallest simulated/bound {worst_margin:.4}"),
        ),
        Check::new(
            "no reuse-distance violations",
            total_violations == 0,
            format!("{total_violations} violating pairs on a {0}x{0} board", a.board),
        ),
    ];
    Ok(report)
}
