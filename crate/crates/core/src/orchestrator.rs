//! Per-slot drift-plus-penalty controller.
//!
//! Each slot the controller solves two decoupled problems:
//!
//! 1. Arrival admission: maximize `(V − Q_d) A_d` over `0 ≤ A_d ≤ A_max`, whose
//!    solution is the valve `A_max · 1{Q_d ≤ V}`.
//! 2. Radio/compute allocation: minimize
//!    `−Q_d τ R_d − μ_z Z Γ_g + μ_y Y F` over DO power, drop decision,
//!    inference model and QAM order, with `F` set to the smallest allocation
//!    that meets the GO deadline.
//!
//! Problem 2 is solved by exhaustive search over a small grid. All queue terms
//! use normalized units: `Q_d` and `τ R_d` in Mbit, `F` in TFLOPS.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::PolicyError;
use crate::phy::{rate_do, ChannelDraw, ChannelGains, LinkMetrics, PhyConfig};
use crate::queueing::{QueueState, BITS_PER_MBIT, FLOPS_PER_TFLOPS};
use crate::reliability::ModelCatalog;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Trade-off weight, in Mbit.
    pub v_mbit: f64,
    /// Admissible DO transmit powers, strictly increasing.
    pub power_levels_w: Vec<f64>,
    pub gamma_th: f64,
    /// Long-term average compute budget.
    pub f_th_flops: f64,
    /// Per-slot compute cap.
    pub f_max_flops: f64,
    pub d_max_s: f64,
    pub mu_z: f64,
    pub mu_y: f64,
}

impl PolicyConfig {
    /// Power grid {0, 0.01, ..., 0.1} W, D_max = 20 ms, 1 TFLOPS budget.
    pub fn table1() -> Self {
        Self {
            v_mbit: 5.0,
            power_levels_w: vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1],
            gamma_th: 0.7,
            f_th_flops: 1e12,
            f_max_flops: 10e12,
            d_max_s: 0.020,
            mu_z: 1.0,
            mu_y: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        fn check(ok: bool, field: &'static str, reason: &str) -> Result<(), PolicyError> {
            if ok {
                Ok(())
            } else {
                Err(PolicyError::InvalidConfig {
                    field,
                    reason: reason.to_owned(),
                })
            }
        }
        check(self.v_mbit.is_finite() && self.v_mbit >= 0.0, "v_mbit", "must be non-negative")?;
        check(!self.power_levels_w.is_empty(), "power_levels_w", "must not be empty")?;
        check(
            self.power_levels_w.iter().all(|p| p.is_finite() && *p >= 0.0),
            "power_levels_w",
            "levels must be finite and non-negative",
        )?;
        check(
            self.power_levels_w.windows(2).all(|w| w[0] < w[1]),
            "power_levels_w",
            "levels must be strictly increasing",
        )?;
        check((0.0..=1.0).contains(&self.gamma_th), "gamma_th", "must lie in [0, 1]")?;
        check(
            self.f_th_flops.is_finite() && self.f_th_flops >= 0.0,
            "f_th_flops",
            "must be non-negative",
        )?;
        check(self.f_max_flops > 0.0, "f_max_flops", "must be positive")?;
        check(
            self.d_max_s.is_finite() && self.d_max_s > 0.0,
            "d_max_s",
            "must be positive",
        )?;
        check(self.mu_z.is_finite() && self.mu_z > 0.0, "mu_z", "must be positive")?;
        check(self.mu_y.is_finite() && self.mu_y > 0.0, "mu_y", "must be positive")?;
        Ok(())
    }
}

/// `n` evenly spaced levels from 0 to `p_max`, endpoints included.
pub fn uniform_power_levels(p_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![p_max],
        _ => (0..n)
            .map(|i| p_max * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Controller output for one slot, plus the link quantities it implies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    pub a_d_bits: f64,
    pub p_tx_d_w: f64,
    /// `false` when the GO batch is proactively dropped.
    pub transmit: bool,
    pub model_index: Option<usize>,
    /// Allocated compute; zero when dropped.
    pub f_flops: f64,
    /// GO QAM order; `None` when dropped.
    pub m: Option<u32>,
    pub objective: f64,
    /// Slot-averaged DO rate implied by the decision.
    pub r_d_bps: f64,
    /// GO bit error rate; `None` when dropped.
    pub ber: Option<f64>,
    /// Expected goal achievement Γ_l(P_b)·γ.
    pub gamma_g: f64,
}

impl SlotDecision {
    pub fn gamma(&self) -> u8 {
        u8::from(self.transmit)
    }

    /// Total GO latency, transmission plus inference. Zero when dropped.
    pub fn total_delay(&self, catalog: &ModelCatalog, phy: &PhyConfig) -> f64 {
        match (self.model_index, self.m) {
            (Some(l), Some(m)) if self.transmit => {
                phy.tx_delay(m) + catalog.profiles[l].omega_flops / self.f_flops
            }
            _ => 0.0,
        }
    }
}

/// Closed-form admission valve: everything when `Q_d ≤ V`, nothing otherwise.
pub fn admit_arrivals(q_d_mbit: f64, v_mbit: f64, a_max_bits: f64) -> f64 {
    if q_d_mbit <= v_mbit {
        a_max_bits
    } else {
        0.0
    }
}

/// Smallest compute allocation finishing inference by the deadline, or `None`
/// when the deadline cannot be met.
pub fn min_feasible_f(omega_flops: f64, d_tx_s: f64, d_max_s: f64, f_max_flops: f64) -> Option<f64> {
    if d_tx_s >= d_max_s {
        return None;
    }
    let f = omega_flops / (d_max_s - d_tx_s);
    (f <= f_max_flops).then_some(f)
}

/// Per-slot drift-plus-penalty objective in normalized units.
#[allow(clippy::too_many_arguments)]
pub fn slot_objective(
    q_d_mbit: f64,
    z: f64,
    y: f64,
    r_d_bps: f64,
    gamma_g: f64,
    f_tflops: f64,
    tau_s: f64,
    mu_z: f64,
    mu_y: f64,
) -> f64 {
    let served_mbit = tau_s * r_d_bps / BITS_PER_MBIT;
    -q_d_mbit * served_mbit - mu_z * z * gamma_g + mu_y * y * f_tflops
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    p_index: usize,
    p: f64,
    /// (model index, omega, QAM order) for transmit candidates.
    tx: Option<(usize, f64, u32)>,
    f_flops: f64,
    r_d_bps: f64,
    ber: Option<f64>,
    gamma_g: f64,
    objective: f64,
}

impl Candidate {
    /// Strict preference: lower objective, then lower power, then lower
    /// workload, then transmitting over dropping. Remaining ties (equal
    /// workloads, several QAM orders) go to the lower model index, then the
    /// lower QAM order.
    fn cmp_preference(&self, other: &Self) -> Ordering {
        self.objective
            .partial_cmp(&other.objective)
            .unwrap_or(Ordering::Equal)
            .then(self.p.total_cmp(&other.p))
            .then_with(|| match (self.tx, other.tx) {
                (Some((la, wa, ma)), Some((lb, wb, mb))) => {
                    wa.total_cmp(&wb).then(la.cmp(&lb)).then(ma.cmp(&mb))
                }
                (Some(_), None) => Ordering::Less,
                (None, Some(_)) => Ordering::Greater,
                (None, None) => Ordering::Equal,
            })
    }
}

struct SearchContext<'a> {
    gains: &'a ChannelGains,
    state: &'a QueueState,
    catalog: &'a ModelCatalog,
    phy: &'a PhyConfig,
    pol: &'a PolicyConfig,
}

impl SearchContext<'_> {
    fn objective(&self, r_d_bps: f64, gamma_g: f64, f_flops: f64) -> f64 {
        slot_objective(
            self.state.q_d_mbit(),
            self.state.z,
            self.state.y,
            r_d_bps,
            gamma_g,
            f_flops / FLOPS_PER_TFLOPS,
            self.phy.slot_s,
            self.state.mu_z,
            self.state.mu_y,
        )
    }

    fn drop_candidate(&self, p_index: usize, metrics: &LinkMetrics) -> Result<Candidate, PolicyError> {
        let r_d = rate_do(metrics, 0.0, self.phy)?;
        Ok(Candidate {
            p_index,
            p: self.pol.power_levels_w[p_index],
            tx: None,
            f_flops: 0.0,
            r_d_bps: r_d,
            ber: None,
            gamma_g: 0.0,
            objective: self.objective(r_d, 0.0, 0.0),
        })
    }

    /// Transmit candidate for model `l`, or `None` when the deadline (or the
    /// slot length) rules it out.
    fn transmit_candidate(
        &self,
        p_index: usize,
        l: usize,
        metrics: &LinkMetrics,
        m: u32,
    ) -> Result<Option<Candidate>, PolicyError> {
        let profile = self.catalog.get(l).ok_or(PolicyError::ModelIndex(l))?;
        if metrics.d_tx > self.phy.slot_s {
            return Ok(None);
        }
        let Some(f) = min_feasible_f(
            profile.omega_flops,
            metrics.d_tx,
            self.pol.d_max_s,
            self.pol.f_max_flops,
        ) else {
            return Ok(None);
        };
        let r_d = rate_do(metrics, metrics.d_tx, self.phy)?;
        let gamma_g = profile.accuracy_at(metrics.ber)?;
        Ok(Some(Candidate {
            p_index,
            p: self.pol.power_levels_w[p_index],
            tx: Some((l, profile.omega_flops, m)),
            f_flops: f,
            r_d_bps: r_d,
            ber: Some(metrics.ber),
            gamma_g,
            objective: self.objective(r_d, gamma_g, f),
        }))
    }
}

fn into_decision(c: Candidate, a_d_bits: f64) -> SlotDecision {
    SlotDecision {
        a_d_bits,
        p_tx_d_w: c.p,
        transmit: c.tx.is_some(),
        model_index: c.tx.map(|t| t.0),
        f_flops: c.f_flops,
        m: c.tx.map(|t| t.2),
        objective: c.objective,
        r_d_bps: c.r_d_bps,
        ber: c.ber,
        gamma_g: c.gamma_g,
    }
}

/// Drift-plus-penalty decision for one slot.
pub fn decide_slot(
    draw: &ChannelDraw,
    state: &QueueState,
    catalog: &ModelCatalog,
    phy: &PhyConfig,
    pol: &PolicyConfig,
    a_max_bits: f64,
) -> Result<SlotDecision, PolicyError> {
    let gains = ChannelGains::from_draw(draw)?;
    decide_slot_with_gains(&gains, state, catalog, phy, pol, a_max_bits)
}

/// [`decide_slot`] on precomputed channel inner products.
pub fn decide_slot_with_gains(
    gains: &ChannelGains,
    state: &QueueState,
    catalog: &ModelCatalog,
    phy: &PhyConfig,
    pol: &PolicyConfig,
    a_max_bits: f64,
) -> Result<SlotDecision, PolicyError> {
    let a_d = admit_arrivals(state.q_d_mbit(), pol.v_mbit, a_max_bits);
    let ctx = SearchContext {
        gains,
        state,
        catalog,
        phy,
        pol,
    };
    let mut best: Option<Candidate> = None;
    let mut offer = |c: Candidate| {
        if best
            .as_ref()
            .is_none_or(|b| c.cmp_preference(b) == Ordering::Less)
        {
            best = Some(c);
        }
    };
    for (pi, &p) in pol.power_levels_w.iter().enumerate() {
        for (mi, &m) in phy.modulation_orders.iter().enumerate() {
            let metrics = LinkMetrics::from_gains(ctx.gains, p, m, phy)?;
            if mi == 0 {
                // The drop candidate does not depend on the QAM order.
                offer(ctx.drop_candidate(pi, &metrics)?);
            }
            for l in 0..catalog.len() {
                if let Some(c) = ctx.transmit_candidate(pi, l, &metrics, m)? {
                    offer(c);
                }
            }
        }
    }
    let best = best.expect("power set is non-empty, so a drop candidate exists");
    debug_assert!(best.p_index < pol.power_levels_w.len());
    Ok(into_decision(best, a_d))
}

/// Fixed DO power and inference model; the batch is dropped only when the
/// deadline cannot be met. Arrivals go through the same admission valve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StaticPolicy {
    pub p_tx_d_w: f64,
    pub model_index: usize,
    pub m: u32,
}

impl StaticPolicy {
    /// Uses the highest QAM order of the set (shortest upload).
    pub fn new(
        p_tx_d_w: f64,
        model_index: usize,
        catalog: &ModelCatalog,
        phy: &PhyConfig,
        pol: &PolicyConfig,
    ) -> Result<Self, PolicyError> {
        if !pol.power_levels_w.contains(&p_tx_d_w) {
            return Err(PolicyError::InvalidConfig {
                field: "p_tx_d_w",
                reason: format!("{p_tx_d_w} W is not in the power set"),
            });
        }
        if model_index >= catalog.len() {
            return Err(PolicyError::ModelIndex(model_index));
        }
        let m = *phy
            .modulation_orders
            .iter()
            .max()
            .ok_or(PolicyError::InvalidConfig {
                field: "modulation_orders",
                reason: "empty".into(),
            })?;
        Ok(Self {
            p_tx_d_w,
            model_index,
            m,
        })
    }

    pub fn decide(
        &self,
        gains: &ChannelGains,
        state: &QueueState,
        catalog: &ModelCatalog,
        phy: &PhyConfig,
        pol: &PolicyConfig,
        a_max_bits: f64,
    ) -> Result<SlotDecision, PolicyError> {
        let a_d = admit_arrivals(state.q_d_mbit(), pol.v_mbit, a_max_bits);
        let p_index = pol
            .power_levels_w
            .iter()
            .position(|&p| p == self.p_tx_d_w)
            .ok_or(PolicyError::InvalidConfig {
                field: "p_tx_d_w",
                reason: "not in the power set".into(),
            })?;
        let ctx = SearchContext {
            gains,
            state,
            catalog,
            phy,
            pol,
        };
        let metrics = LinkMetrics::from_gains(gains, self.p_tx_d_w, self.m, phy)?;
        let c = match ctx.transmit_candidate(p_index, self.model_index, &metrics, self.m)? {
            Some(c) => c,
            None => ctx.drop_candidate(p_index, &metrics)?,
        };
        Ok(into_decision(c, a_d))
    }
}
