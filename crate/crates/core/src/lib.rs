//! Simulation core for data aggregation in dense wireless networks with
//! cooperative time-reversal communication.
//!
//! Short-range traffic follows a multihop aggregation tree on a square grid;
//! long-range traffic is carried by clusters transmitting coherently to the sink.

// `!(x > 0.0)` guards deliberately reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agg_protocol;
pub mod error;
pub mod grid_routing;
pub mod lifetime;
pub mod phy_channel;
pub mod quadrature;
pub mod stats;
pub mod tr_waveform;
pub mod trc_link;

pub use agg_protocol::{AreaPartition, AreaRates, RateConstants, ScalingRow, TdmaSchedule};
pub use error::{Error, Result};
pub use grid_routing::{AggregationTree, GridNetwork, Node, TrafficMap};
pub use lifetime::{Lifetime, LifetimeParams, LifetimeRow, RateSchedule};
pub use phy_channel::{ChannelParams, FadingChannel};
pub use stats::SampleSummary;
pub use tr_waveform::{AggregateTransmission, ImpulseResponse};
pub use trc_link::{TrcLinkConfig, TrcLinkStats};
