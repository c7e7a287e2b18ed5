//! Goal-oriented / data-oriented spectrum sharing simulator.
//!
//! A GO user uploads one inference batch per slot to an edge server co-located
//! with a multi-antenna access point, while a DO user shares the same band and
//! wants throughput. Each slot the drift-plus-penalty controller in
//! [`orchestrator`] picks the DO admission, DO power, drop decision,
//! inference model and compute allocation. [`sim`] runs the slot loop and the
//! sweeps that trace goal-effective achievable rate regions.

// Range checks are written as `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod orchestrator;
pub mod phy;
pub mod queueing;
pub mod reliability;
pub mod sim;

pub use error::{PhyError, PolicyError, ReliabilityError, SimError};
pub use orchestrator::{PolicyConfig, SlotDecision, StaticPolicy};
pub use phy::{ChannelDraw, LinkMetrics, PhyConfig};
pub use queueing::QueueState;
pub use reliability::{ModelCatalog, ReliabilityProfile, SyntheticModel};
pub use sim::{RunOutput, RunSummary, SimConfig, TraceRecord};
