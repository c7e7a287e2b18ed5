//! Independent reference implementations shared by the integration tests and
//! the acceptance target. Nothing here calls the search, link or reliability
//! code it is used to check.
#![allow(dead_code)]

use std::collections::VecDeque;

use gearr_core::orchestrator::PolicyConfig;
use gearr_core::phy::{ChannelDraw, PhyConfig};
use gearr_core::queueing::QueueState;
use gearr_core::reliability::{ModelCatalog, ReliabilityProfile};
use gearr_core::sim::TraceRecord;
use num_complex::Complex64;
use rand::SeedableRng;

/// Gaussian tail by Craig's form, Q(x) = (1/π) ∫₀^{π/2} exp(−x²/(2 sin²θ)) dθ,
/// integrated with composite Simpson. The integrand is flat at θ = 0, so the
/// rule converges fast.
pub fn q_craig(x: f64) -> f64 {
    assert!(x >= 0.0);
    let n = 20_000;
    let h = std::f64::consts::FRAC_PI_2 / n as f64;
    let f = |theta: f64| {
        let s = theta.sin();
        if s == 0.0 {
            0.0
        } else {
            (-x * x / (2.0 * s * s)).exp()
        }
    };
    let mut acc = f(0.0) + f(std::f64::consts::FRAC_PI_2);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0 / std::f64::consts::PI
}

/// Log-BER piecewise linear interpolation, written out directly.
pub fn accuracy_ref(profile: &ReliabilityProfile, ber: f64) -> f64 {
    let knots: Vec<(f64, f64)> = profile.curve.iter().copied().filter(|k| k.0 > 0.0).collect();
    if ber == 0.0 || knots.is_empty() {
        return profile.curve[0].1;
    }
    if ber <= knots[0].0 {
        return knots[0].1;
    }
    if ber >= knots[knots.len() - 1].0 {
        return knots[knots.len() - 1].1;
    }
    for w in knots.windows(2) {
        let ((b0, a0), (b1, a1)) = (w[0], w[1]);
        if ber == b0 {
            return a0;
        }
        if ber > b0 && ber < b1 {
            let t = (ber.log10() - b0.log10()) / (b1.log10() - b0.log10());
            return a0 + t * (a1 - a0);
        }
    }
    unreachable!()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleChoice {
    pub p: f64,
    /// (model index, QAM order) when transmitting.
    pub tx: Option<(usize, u32)>,
    pub f_flops: f64,
    pub r_d_bps: f64,
    pub gamma_g: f64,
    pub objective: f64,
}

/// Lists every (power, drop | model × QAM order) candidate, keeps the feasible
/// ones and sorts them by the documented preference key.
pub fn enumerate_decision(
    draw: &ChannelDraw,
    state: &QueueState,
    catalog: &ModelCatalog,
    phy: &PhyConfig,
    pol: &PolicyConfig,
) -> OracleChoice {
    let norm = |h: &[Complex64]| h.iter().map(|c| c.re * c.re + c.im * c.im).sum::<f64>();
    let ng = norm(&draw.h_g);
    let nd = norm(&draw.h_d);
    let mut dot = Complex64::new(0.0, 0.0);
    for (g, d) in draw.h_g.iter().zip(&draw.h_d) {
        dot += g.conj() * d;
    }
    let cross = dot.re * dot.re + dot.im * dot.im;
    let noise = 10f64.powf((phy.noise_psd_dbm_per_hz + phy.noise_figure_db - 30.0) / 10.0)
        * phy.bandwidth_hz;
    let tau = phy.slot_s;
    let w = phy.bandwidth_hz;
    let q_mbit = state.q_d_bits / 1e6;
    let objective =
        |r: f64, g: f64, f: f64| -q_mbit * (tau * r / 1e6) - state.mu_z * state.z * g + state.mu_y * state.y * (f / 1e12);

    // (objective, p, omega, drop flag, model, M) sorted lexicographically.
    let mut all: Vec<(f64, f64, f64, u8, usize, u32, OracleChoice)> = Vec::new();
    for &p in &pol.power_levels_w {
        let sinr_g = ng * phy.p_tx_g_w / (cross / ng * p + noise);
        let sinr_d = nd * p / (cross / nd * phy.p_tx_g_w + noise);
        let snr_d = nd * p / noise;
        let r_drop = w * (1.0 + snr_d).log2();
        all.push((
            objective(r_drop, 0.0, 0.0),
            p,
            0.0,
            1,
            0,
            0,
            OracleChoice {
                p,
                tx: None,
                f_flops: 0.0,
                r_d_bps: r_drop,
                gamma_g: 0.0,
                objective: objective(r_drop, 0.0, 0.0),
            },
        ));
        for &m in &phy.modulation_orders {
            let mf = m as f64;
            let bits = mf.log2();
            let x = (3.0 * sinr_g / (mf - 1.0)).sqrt();
            let ber = (4.0 / bits * (1.0 - 1.0 / mf.sqrt()) * 0.5 * libm::erfc(x / 2f64.sqrt())).min(0.5);
            let d_tx = phy.batch_bits / (w * bits);
            if d_tx > tau || d_tx >= pol.d_max_s {
                continue;
            }
            let frac = d_tx / tau;
            let r_tx = frac * w * (1.0 + sinr_d).log2() + (1.0 - frac) * w * (1.0 + snr_d).log2();
            for (l, prof) in catalog.profiles.iter().enumerate() {
                let f = prof.omega_flops / (pol.d_max_s - d_tx);
                if f > pol.f_max_flops {
                    continue;
                }
                let g = accuracy_ref(prof, ber);
                let obj = objective(r_tx, g, f);
                all.push((
                    obj,
                    p,
                    prof.omega_flops,
                    0,
                    l,
                    m,
                    OracleChoice {
                        p,
                        tx: Some((l, m)),
                        f_flops: f,
                        r_d_bps: r_tx,
                        gamma_g: g,
                        objective: obj,
                    },
                ));
            }
        }
    }
    all.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.3.cmp(&b.3))
            .then(a.2.partial_cmp(&b.2).unwrap())
            .then(a.4.cmp(&b.4))
            .then(a.5.cmp(&b.5))
    });
    all.swap_remove(0).6
}

/// Brute-force arg-max of (V − Q)·A over an `n`-point grid on [0, A_max];
/// ties go to the largest A.
pub fn admit_brute_force(q_mbit: f64, v_mbit: f64, a_max: f64, n: usize) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        let a = if i == n - 1 {
            a_max
        } else {
            a_max * i as f64 / (n - 1) as f64
        };
        let val = (v_mbit - q_mbit) * a;
        if val >= best.0 {
            best = (val, a);
        }
    }
    best.1
}

/// Mean sojourn time of bits that depart at or after `from_slot`, measured by
/// tagging each admitted chunk with its arrival slot and serving the buffer
/// first-in first-out. Needs `q_d` at slot start and `r_d` from the trace.
pub fn fifo_mean_delay(trace: &[TraceRecord], tau_s: f64, from_slot: u64) -> Option<f64> {
    let mut fifo: VecDeque<(u64, f64)> = VecDeque::new();
    let mut weighted = 0.0;
    let mut served = 0.0;
    for rec in trace {
        let mut budget = rec.r_d * tau_s;
        while budget > 0.0 {
            let Some(front) = fifo.front_mut() else { break };
            let take = front.1.min(budget);
            if rec.slot >= from_slot {
                weighted += take * (rec.slot - front.0) as f64;
                served += take;
            }
            front.1 -= take;
            budget -= take;
            if front.1 <= 0.0 {
                fifo.pop_front();
            }
        }
        if rec.a_d > 0.0 {
            fifo.push_back((rec.slot, rec.a_d));
        }
    }
    (served > 0.0).then(|| weighted / served * tau_s)
}

/// Upper bound on the long-run goal-effectiveness reachable within an
/// average compute budget, assuming every batch could be sent error-free:
/// the best mixture of models (or drops) on the clean accuracy/compute
/// frontier. Solved by enumerating all pairs of pure strategies, which is
/// exact for a linear program with one budget constraint.
pub fn clean_gamma_bound(catalog: &ModelCatalog, phy: &PhyConfig, pol: &PolicyConfig) -> f64 {
    let d_tx = phy
        .modulation_orders
        .iter()
        .map(|&m| phy.batch_bits / (phy.bandwidth_hz * (m as f64).log2()))
        .fold(f64::INFINITY, f64::min);
    let mut pure = vec![(0.0, 0.0)];
    for prof in &catalog.profiles {
        if d_tx < pol.d_max_s {
            let f = prof.omega_flops / (pol.d_max_s - d_tx);
            if f <= pol.f_max_flops {
                let best = prof.curve.iter().map(|k| k.1).fold(0.0, f64::max);
                pure.push((f, best));
            }
        }
    }
    let budget = pol.f_th_flops;
    let mut bound: f64 = 0.0;
    for &(fa, ga) in &pure {
        if fa <= budget {
            bound = bound.max(ga);
        }
        for &(fb, gb) in &pure {
            if fa <= budget && fb > budget {
                let x = (budget - fa) / (fb - fa);
                bound = bound.max((1.0 - x) * ga + x * gb);
            }
        }
    }
    bound
}

pub struct Instance {
    pub phy: PhyConfig,
    pub pol: PolicyConfig,
    pub catalog: ModelCatalog,
    pub draw: ChannelDraw,
    pub state: QueueState,
    pub a_max: f64,
}

/// Picks zero with probability 1/4, otherwise uniform on [0, hi).
fn maybe_zero<R: rand::Rng>(rng: &mut R, hi: f64) -> f64 {
    if rng.random_bool(0.25) {
        0.0
    } else {
        rng.random_range(0.0..hi)
    }
}

/// A randomized slot problem: geometry, fading, QAM set, power grid, catalog
/// (occasionally with equal workloads or a zero-BER knot) and queue state.
pub fn random_instance<R: rand::Rng>(rng: &mut R) -> Instance {
    use gearr_core::orchestrator::uniform_power_levels;
    use gearr_core::phy::{draw_channel, Position};
    use gearr_core::reliability::{synthetic_catalog, SyntheticModel};

    let mut phy = PhyConfig::table1();
    phy.n_antennas = [1, 2, 4, 8][rng.random_range(0..4)];
    phy.rician_k = [0.0, 1.0, 4.0, f64::INFINITY][rng.random_range(0..4)];
    phy.go_position = Position::new(rng.random_range(-40.0..-5.0), rng.random_range(-10.0..10.0));
    phy.do_position = Position::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
    phy.modulation_orders = match rng.random_range(0..3) {
        0 => vec![256],
        1 => vec![64, 256],
        _ => vec![4, 16, 64, 256],
    };

    let mut pol = PolicyConfig::table1();
    pol.power_levels_w = uniform_power_levels(rng.random_range(0.01..0.2), rng.random_range(1..12));
    pol.v_mbit = rng.random_range(0.0..50.0);
    pol.f_max_flops = 10f64.powf(rng.random_range(11.0..13.5));
    pol.d_max_s = rng.random_range(0.012..0.030);
    pol.mu_z = rng.random_range(0.1..2.0);
    pol.mu_y = rng.random_range(0.1..2.0);

    let n_models = rng.random_range(1..=4);
    let mut specs: Vec<SyntheticModel> = (0..n_models)
        .map(|i| {
            let clean = rng.random_range(0.5..0.99);
            SyntheticModel::new(
                &format!("m{i}"),
                10f64.powf(rng.random_range(8.0..10.7)),
                clean,
                rng.random_range(0.0..clean),
                10f64.powf(rng.random_range(-6.0..-1.0)),
            )
        })
        .collect();
    if n_models > 1 && rng.random_bool(0.2) {
        specs[1].omega_flops = specs[0].omega_flops;
    }
    let mut catalog = synthetic_catalog(&specs).unwrap();
    if rng.random_bool(0.2) {
        let c = &mut catalog.profiles[0].curve;
        let top = c[0].1;
        c.insert(0, (0.0, (top + 0.01).min(1.0)));
    }

    let mut ch_rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng.random());
    let draw = draw_channel(&phy, &mut ch_rng, 0).unwrap();
    let mut state = QueueState::new(pol.mu_z, pol.mu_y);
    state.q_d_bits = maybe_zero(rng, 40e6);
    state.z = maybe_zero(rng, 60.0);
    state.y = maybe_zero(rng, 30.0);
    Instance {
        phy,
        pol,
        catalog,
        draw,
        state,
        a_max: rng.random_range(0.0..1e7),
    }
}
