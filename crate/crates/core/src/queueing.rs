//! DO buffer and the two virtual queues that enforce the long-term
//! goal-effectiveness and compute-budget constraints.
//!
//! Units: the buffer is tracked in bits; the controller sees it in megabits.
//! `z` is in probability units (times `mu_z`), `y` in TFLOPS (times `mu_y`).

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const BITS_PER_MBIT: f64 = 1e6;
pub const FLOPS_PER_TFLOPS: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueState {
    pub q_d_bits: f64,
    pub z: f64,
    pub y: f64,
    pub mu_z: f64,
    pub mu_y: f64,
}

impl QueueState {
    pub fn new(mu_z: f64, mu_y: f64) -> Self {
        Self {
            q_d_bits: 0.0,
            z: 0.0,
            y: 0.0,
            mu_z,
            mu_y,
        }
    }

    pub fn q_d_mbit(&self) -> f64 {
        self.q_d_bits / BITS_PER_MBIT
    }
}

/// `max(0, Q − τR) + A`.
pub fn update_buffer(q_d_bits: f64, r_d_bps: f64, a_d_bits: f64, tau_s: f64) -> f64 {
    (q_d_bits - tau_s * r_d_bps).max(0.0) + a_d_bits
}

/// Bits actually served in a slot, `min(Q, τR)`.
pub fn departures(q_d_bits: f64, r_d_bps: f64, tau_s: f64) -> f64 {
    q_d_bits.min(tau_s * r_d_bps)
}

/// Goal-effectiveness deficit queue: `max(0, Z − μ_z (Γ_g − Γ_th))`.
pub fn update_virtual_z(z: f64, gamma_g: f64, gamma_th: f64, mu_z: f64) -> f64 {
    (z - mu_z * (gamma_g - gamma_th)).max(0.0)
}

/// Compute-excess queue: `max(0, Y + μ_y (F − F_th))`, F in TFLOPS.
pub fn update_virtual_y(y: f64, f_tflops: f64, f_th_tflops: f64, mu_y: f64) -> f64 {
    (y + mu_y * (f_tflops - f_th_tflops)).max(0.0)
}

/// Little's-law delay `τ Q̄ / Ā`. `None` when there is no traffic.
pub fn queueing_delay(avg_q_bits: f64, avg_a_bits_per_slot: f64, tau_s: f64) -> Option<f64> {
    if avg_a_bits_per_slot > 0.0 {
        Some(tau_s * avg_q_bits / avg_a_bits_per_slot)
    } else {
        None
    }
}

/// Sliding mean over the last `len` samples.
#[derive(Debug, Clone)]
pub struct MovingWindow {
    buf: VecDeque<f64>,
    sum: f64,
    len: usize,
    pushes: u64,
}

impl MovingWindow {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "window length must be at least 1");
        Self {
            buf: VecDeque::with_capacity(len),
            sum: 0.0,
            len,
            pushes: 0,
        }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.buf.len() == self.len {
            if let Some(old) = self.buf.pop_front() {
                self.sum -= old;
            }
        }
        self.buf.push_back(x);
        self.sum += x;
        self.pushes += 1;
        // Re-sum periodically so subtractive round-off cannot accumulate.
        if self.pushes.is_multiple_of(self.len as u64) {
            self.sum = self.buf.iter().sum();
        }
        self.mean()
    }

    pub fn mean(&self) -> f64 {
        if self.buf.is_empty() {
            0.0
        } else {
            self.sum / self.buf.len() as f64
        }
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.len
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Mean {
    sum: f64,
    count: u64,
}

impl Mean {
    pub fn push(&mut self, x: f64) {
        self.sum += x;
        self.count += 1;
    }

    pub fn get(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// One slot's worth of metrics fed to [`RunningAverages`].
#[derive(Debug, Clone, Copy)]
pub struct SlotSample {
    pub a_d_bits: f64,
    pub gamma_g: f64,
    pub f_flops: f64,
    pub q_d_bits: f64,
    pub r_d_bps: f64,
    pub dropped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovingPoint {
    pub slot: u64,
    pub a_d_bits: f64,
    pub gamma_g: f64,
    pub f_flops: f64,
}

/// Horizon averages over slots `>= warmup`, plus sliding-window means over
/// the whole run sampled once per window length.
#[derive(Debug, Clone)]
pub struct RunningAverages {
    warmup: u64,
    pub a_d: Mean,
    pub gamma_g: Mean,
    pub f: Mean,
    pub q_d: Mean,
    pub r_d: Mean,
    pub drops: Mean,
    win_a: MovingWindow,
    win_gamma: MovingWindow,
    win_f: MovingWindow,
    samples: Vec<MovingPoint>,
}

impl RunningAverages {
    pub fn new(warmup: u64, window: usize) -> Self {
        Self {
            warmup,
            a_d: Mean::default(),
            gamma_g: Mean::default(),
            f: Mean::default(),
            q_d: Mean::default(),
            r_d: Mean::default(),
            drops: Mean::default(),
            win_a: MovingWindow::new(window),
            win_gamma: MovingWindow::new(window),
            win_f: MovingWindow::new(window),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, slot: u64, s: &SlotSample) {
        let a = self.win_a.push(s.a_d_bits);
        let g = self.win_gamma.push(s.gamma_g);
        let f = self.win_f.push(s.f_flops);
        if (slot + 1).is_multiple_of(self.win_a.len as u64) {
            self.samples.push(MovingPoint {
                slot,
                a_d_bits: a,
                gamma_g: g,
                f_flops: f,
            });
        }
        if slot >= self.warmup {
            self.a_d.push(s.a_d_bits);
            self.gamma_g.push(s.gamma_g);
            self.f.push(s.f_flops);
            self.q_d.push(s.q_d_bits);
            self.r_d.push(s.r_d_bps);
            self.drops.push(if s.dropped { 1.0 } else { 0.0 });
        }
    }

    pub fn moving_samples(&self) -> &[MovingPoint] {
        &self.samples
    }
}
