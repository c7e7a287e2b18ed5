//! Slot-loop engine: Poisson arrivals, block-fading channel, controller
//! decision, queue updates and trace recording.

mod sweep;
mod trace;

pub use sweep::{
    baseline_comparison, mean_and_se, select_static, static_scan, sweep_gearr, sweep_tradeoff, BaselineRow,
    GearrRow, RunRecord, StaticScanPoint, Sweep, TradeoffRow,
};
pub use trace::{write_csv_rows, write_trace_csv, TraceRecord};

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::orchestrator::{decide_slot_with_gains, PolicyConfig, SlotDecision, StaticPolicy};
use crate::phy::{draw_channel, ChannelGains, PhyConfig};
use crate::queueing::{
    departures, queueing_delay, update_buffer, update_virtual_y, update_virtual_z, MovingPoint,
    QueueState, RunningAverages, SlotSample, FLOPS_PER_TFLOPS,
};
use crate::reliability::{load_catalog, reference_synthetic_models, synthetic_catalog, ModelCatalog, SyntheticModel};

const STREAM_CHANNEL: u64 = 0;
const STREAM_ARRIVALS: u64 = 1;
const STREAM_CORRECTNESS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CatalogSource {
    File(PathBuf),
    Synthetic(Vec<SyntheticModel>),
}

impl CatalogSource {
    pub fn load(&self) -> Result<ModelCatalog, SimError> {
        Ok(match self {
            CatalogSource::File(path) => load_catalog(path)?,
            CatalogSource::Synthetic(specs) => synthetic_catalog(specs)?,
        })
    }
}

/// Which controller drives the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Controller {
    Dynamic,
    Static { p_tx_d_w: f64, model_index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub phy: PhyConfig,
    pub policy: PolicyConfig,
    pub catalog: CatalogSource,
    pub controller: Controller,
    pub horizon_slots: u64,
    /// Slots excluded from horizon averages.
    pub warmup_slots: u64,
    /// Poisson mean of the offered DO traffic, bits per slot.
    pub arrival_lambda_bits: f64,
    pub seed: u64,
    /// Moving-average window length, in slots.
    pub window_slots: usize,
    /// Sample inference correctness instead of recording its expectation.
    pub bernoulli_correctness: bool,
    /// Least-squares slope of Q_d over the last half of the run above which
    /// the run is flagged unstable.
    pub unstable_slope_bits_per_slot: f64,
}

impl SimConfig {
    /// Reference scenario with the four-model synthetic catalog, 20000 slots,
    /// averages over the last 10000, λ = 5·10⁶ bits per slot.
    pub fn table1() -> Self {
        Self {
            phy: PhyConfig::table1(),
            policy: PolicyConfig::table1(),
            catalog: CatalogSource::Synthetic(reference_synthetic_models()),
            controller: Controller::Dynamic,
            horizon_slots: 20_000,
            warmup_slots: 10_000,
            arrival_lambda_bits: 5e6,
            seed: 1,
            window_slots: 1000,
            bernoulli_correctness: false,
            unstable_slope_bits_per_slot: 1e4,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.phy.validate()?;
        self.policy.validate()?;
        let bad = |field: &'static str, reason: &str| SimError::InvalidConfig {
            field,
            reason: reason.to_owned(),
        };
        if self.horizon_slots == 0 || self.warmup_slots >= self.horizon_slots {
            return Err(bad("warmup_slots", "horizon must exceed warmup"));
        }
        if !(self.arrival_lambda_bits.is_finite() && self.arrival_lambda_bits >= 0.0) {
            return Err(bad("arrival_lambda_bits", "must be non-negative"));
        }
        if self.window_slots == 0 {
            return Err(bad("window_slots", "must be at least 1"));
        }
        if !(self.unstable_slope_bits_per_slot >= 0.0) {
            return Err(bad("unstable_slope_bits_per_slot", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub avg_a_d_bits: f64,
    pub avg_gamma_g: f64,
    pub avg_f_flops: f64,
    pub avg_q_d_bits: f64,
    pub avg_r_d_bps: f64,
    /// Little's-law queueing delay; `None` without admitted traffic.
    pub avg_delay_q_s: Option<f64>,
    pub drop_rate: f64,
    pub slots_averaged: u64,
    pub final_q_d_bits: f64,
    pub final_z: f64,
    pub final_y: f64,
    pub total_admitted_bits: f64,
    pub total_departed_bits: f64,
    pub q_slope_bits_per_slot: f64,
    pub unstable: bool,
    pub moving: Vec<MovingPoint>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: Vec<TraceRecord>,
}

/// Ordinary least-squares slope accumulated online.
#[derive(Debug, Default)]
struct SlopeFit {
    n: f64,
    sx: f64,
    sy: f64,
    sxx: f64,
    sxy: f64,
}

impl SlopeFit {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.sxy += x * y;
    }

    fn slope(&self) -> f64 {
        let den = self.n * self.sxx - self.sx * self.sx;
        if self.n < 2.0 || den == 0.0 {
            0.0
        } else {
            (self.n * self.sxy - self.sx * self.sy) / den
        }
    }
}

/// Runs one simulation, loading the catalog from the config.
pub fn run(cfg: &SimConfig) -> Result<RunOutput, SimError> {
    let catalog = cfg.catalog.load()?;
    run_with_catalog(cfg, &catalog, true)
}

/// Runs one simulation on an already loaded catalog. With `record_trace`
/// false the returned trace is empty.
pub fn run_with_catalog(
    cfg: &SimConfig,
    catalog: &ModelCatalog,
    record_trace: bool,
) -> Result<RunOutput, SimError> {
    cfg.validate()?;
    catalog.validate()?;
    let phy = &cfg.phy;
    let pol = &cfg.policy;
    let tau = phy.slot_s;

    let static_policy = match &cfg.controller {
        Controller::Dynamic => None,
        Controller::Static {
            p_tx_d_w,
            model_index,
        } => Some(StaticPolicy::new(*p_tx_d_w, *model_index, catalog, phy, pol)?),
    };

    let mut channel_rng = stream(cfg.seed, STREAM_CHANNEL);
    let mut arrival_rng = stream(cfg.seed, STREAM_ARRIVALS);
    let mut correctness_rng = stream(cfg.seed, STREAM_CORRECTNESS);
    let poisson = if cfg.arrival_lambda_bits > 0.0 {
        Some(Poisson::new(cfg.arrival_lambda_bits).map_err(|e| SimError::InvalidConfig {
            field: "arrival_lambda_bits",
            reason: e.to_string(),
        })?)
    } else {
        None
    };

    let mut state = QueueState::new(pol.mu_z, pol.mu_y);
    let mut averages = RunningAverages::new(cfg.warmup_slots, cfg.window_slots);
    let mut trace = Vec::with_capacity(if record_trace { cfg.horizon_slots as usize } else { 0 });
    let mut slope = SlopeFit::default();
    let slope_start = cfg.horizon_slots / 2;
    let f_th_tflops = pol.f_th_flops / FLOPS_PER_TFLOPS;
    let mut total_admitted = 0.0;
    let mut total_departed = 0.0;

    for slot in 0..cfg.horizon_slots {
        let a_max = match &poisson {
            Some(p) => p.sample(&mut arrival_rng),
            None => 0.0,
        };
        let draw = draw_channel(phy, &mut channel_rng, slot)?;
        let gains = ChannelGains::from_draw(&draw)?;
        let decision: SlotDecision = match &static_policy {
            None => decide_slot_with_gains(&gains, &state, catalog, phy, pol, a_max)?,
            Some(sp) => sp.decide(&gains, &state, catalog, phy, pol, a_max)?,
        };

        let realized_gamma = if cfg.bernoulli_correctness {
            let correct = correctness_rng.random::<f64>() < decision.gamma_g;
            if correct { 1.0 } else { 0.0 }
        } else {
            decision.gamma_g
        };

        if record_trace {
            trace.push(TraceRecord {
                slot,
                a_d: decision.a_d_bits,
                q_d: state.q_d_bits,
                p_tx_d: decision.p_tx_d_w,
                gamma: decision.gamma(),
                model: decision
                    .model_index
                    .map(|l| catalog.profiles[l].model_name.clone()),
                f: decision.f_flops,
                r_d: decision.r_d_bps,
                p_b: decision.ber,
                gamma_g: realized_gamma,
                z: state.z,
                y: state.y,
            });
        }
        averages.push(
            slot,
            &SlotSample {
                a_d_bits: decision.a_d_bits,
                gamma_g: realized_gamma,
                f_flops: decision.f_flops,
                q_d_bits: state.q_d_bits,
                r_d_bps: decision.r_d_bps,
                dropped: !decision.transmit,
            },
        );
        if slot >= slope_start {
            slope.push((slot - slope_start) as f64, state.q_d_bits);
        }

        total_admitted += decision.a_d_bits;
        total_departed += departures(state.q_d_bits, decision.r_d_bps, tau);
        state.q_d_bits = update_buffer(state.q_d_bits, decision.r_d_bps, decision.a_d_bits, tau);
        // The virtual queue tracks the expected goal achievement.
        state.z = update_virtual_z(state.z, decision.gamma_g, pol.gamma_th, state.mu_z);
        state.y = update_virtual_y(
            state.y,
            decision.f_flops / FLOPS_PER_TFLOPS,
            f_th_tflops,
            state.mu_y,
        );
    }

    let q_slope = slope.slope();
    let summary = RunSummary {
        avg_a_d_bits: averages.a_d.get(),
        avg_gamma_g: averages.gamma_g.get(),
        avg_f_flops: averages.f.get(),
        avg_q_d_bits: averages.q_d.get(),
        avg_r_d_bps: averages.r_d.get(),
        avg_delay_q_s: queueing_delay(averages.q_d.get(), averages.a_d.get(), tau),
        drop_rate: averages.drops.get(),
        slots_averaged: averages.a_d.count(),
        final_q_d_bits: state.q_d_bits,
        final_z: state.z,
        final_y: state.y,
        total_admitted_bits: total_admitted,
        total_departed_bits: total_departed,
        q_slope_bits_per_slot: q_slope,
        unstable: q_slope > cfg.unstable_slope_bits_per_slot,
        moving: averages.moving_samples().to_vec(),
    };
    Ok(RunOutput { summary, trace })
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
