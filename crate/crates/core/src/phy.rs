//! Uplink physical layer for one slot: Rician channel draws at a multi-antenna
//! access point, MRC combining, SINR/SNR of both users, uncoded M-QAM bit
//! error rate, GO upload delay and the interference-averaged DO rate.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::PhyError;

/// Speed of light in m/s, used for the free-space reference gain.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One uncompressed 224x224 RGB image, 8 bits per channel.
pub const DEFAULT_BATCH_BITS: f64 = 224.0 * 224.0 * 3.0 * 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Radio configuration shared by both users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhyConfig {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub n_antennas: usize,
    /// Rician K-factor; `f64::INFINITY` gives a pure line-of-sight channel.
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    /// Linear power gain at 1 m.
    pub pathloss_ref_gain: f64,
    pub do_position: Position,
    pub go_position: Position,
    pub ap_position: Position,
    pub p_tx_g_w: f64,
    /// Candidate QAM orders for the GO upload. Each must be a power of 4.
    pub modulation_orders: Vec<u32>,
    /// Bits per inference batch.
    pub batch_bits: f64,
    pub slot_s: f64,
}

impl PhyConfig {
    /// Simulation parameters of the reference scenario: 3.5 GHz, 10 MHz,
    /// 256-QAM, Rician K=4, path loss exponent 3.5, 8 antennas.
    pub fn table1() -> Self {
        let carrier = 3.5e9;
        Self {
            carrier_freq_hz: carrier,
            bandwidth_hz: 10e6,
            noise_psd_dbm_per_hz: -174.0,
            noise_figure_db: 10.0,
            n_antennas: 8,
            rician_k: 4.0,
            pathloss_exponent: 3.5,
            pathloss_ref_gain: free_space_ref_gain(carrier),
            do_position: Position::new(-15.0, 0.0),
            go_position: Position::new(0.0, 0.0),
            ap_position: Position::new(0.0, 20.0),
            p_tx_g_w: 0.1,
            modulation_orders: vec![256],
            batch_bits: DEFAULT_BATCH_BITS,
            slot_s: 0.020,
        }
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        fn check(ok: bool, field: &'static str, reason: &str) -> Result<(), PhyError> {
            if ok {
                Ok(())
            } else {
                Err(PhyError::InvalidConfig {
                    field,
                    reason: reason.to_owned(),
                })
            }
        }
        check(
            self.carrier_freq_hz.is_finite() && self.carrier_freq_hz > 0.0,
            "carrier_freq_hz",
            "must be positive",
        )?;
        check(
            self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0,
            "bandwidth_hz",
            "must be positive",
        )?;
        check(self.noise_psd_dbm_per_hz.is_finite(), "noise_psd_dbm_per_hz", "must be finite")?;
        check(self.noise_figure_db.is_finite(), "noise_figure_db", "must be finite")?;
        check(self.n_antennas >= 1, "n_antennas", "must be at least 1")?;
        check(self.rician_k >= 0.0, "rician_k", "must be non-negative")?;
        check(
            self.pathloss_exponent.is_finite() && self.pathloss_exponent >= 0.0,
            "pathloss_exponent",
            "must be non-negative",
        )?;
        check(
            self.pathloss_ref_gain.is_finite() && self.pathloss_ref_gain > 0.0,
            "pathloss_ref_gain",
            "must be positive",
        )?;
        check(
            self.p_tx_g_w.is_finite() && self.p_tx_g_w >= 0.0,
            "p_tx_g_w",
            "must be non-negative",
        )?;
        check(!self.modulation_orders.is_empty(), "modulation_orders", "must not be empty")?;
        for &m in &self.modulation_orders {
            check(
                is_power_of_four(m),
                "modulation_orders",
                &format!("QAM order {m} is not a power of 4 (>= 4)"),
            )?;
        }
        check(
            self.batch_bits.is_finite() && self.batch_bits > 0.0,
            "batch_bits",
            "must be positive",
        )?;
        check(self.slot_s.is_finite() && self.slot_s > 0.0, "slot_s", "must be positive")?;
        check(self.noise_power_w() > 0.0, "noise_psd_dbm_per_hz", "noise power underflows")?;
        if self.go_position.distance_to(&self.ap_position) == 0.0 {
            return Err(PhyError::ColocatedUser("go_position"));
        }
        if self.do_position.distance_to(&self.ap_position) == 0.0 {
            return Err(PhyError::ColocatedUser("do_position"));
        }
        Ok(())
    }

    /// σ_n² = (PSD + NF) in dBm/Hz integrated over the bandwidth, in W.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watts(self.noise_psd_dbm_per_hz + self.noise_figure_db) * self.bandwidth_hz
    }

    /// Large-scale power gain of the GO link.
    pub fn gain_go(&self) -> f64 {
        self.pathloss_gain(self.go_position.distance_to(&self.ap_position))
    }

    /// Large-scale power gain of the DO link.
    pub fn gain_do(&self) -> f64 {
        self.pathloss_gain(self.do_position.distance_to(&self.ap_position))
    }

    fn pathloss_gain(&self, distance_m: f64) -> f64 {
        self.pathloss_ref_gain * distance_m.powf(-self.pathloss_exponent)
    }

    /// GO uplink rate for QAM order `m`: W·log2(M).
    pub fn rate_go(&self, m: u32) -> f64 {
        self.bandwidth_hz * f64::from(m).log2()
    }

    /// GO upload delay for one batch at QAM order `m`.
    pub fn tx_delay(&self, m: u32) -> f64 {
        self.batch_bits / self.rate_go(m)
    }
}

/// Free-space power gain at 1 m, (c / (4π f_c))².
pub fn free_space_ref_gain(carrier_freq_hz: f64) -> f64 {
    let a = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * carrier_freq_hz);
    a * a
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn is_power_of_four(m: u32) -> bool {
    m >= 4 && m.is_power_of_two() && m.trailing_zeros().is_multiple_of(2)
}

/// Per-slot small-scale + large-scale channel of both users.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub h_g: Vec<Complex64>,
    pub h_d: Vec<Complex64>,
    pub slot: u64,
}

/// Draws one block-fading realization for both users.
///
/// `h_u = sqrt(g_u) (sqrt(K/(K+1)) a + sqrt(1/(K+1)) z)` with `a` the all-ones
/// line-of-sight vector and `z ~ CN(0, I)`.
pub fn draw_channel<R: Rng + ?Sized>(
    cfg: &PhyConfig,
    rng: &mut R,
    slot: u64,
) -> Result<ChannelDraw, PhyError> {
    let d_g = cfg.go_position.distance_to(&cfg.ap_position);
    let d_d = cfg.do_position.distance_to(&cfg.ap_position);
    if d_g == 0.0 {
        return Err(PhyError::ColocatedUser("go_position"));
    }
    if d_d == 0.0 {
        return Err(PhyError::ColocatedUser("do_position"));
    }
    let (los, nlos) = rician_weights(cfg.rician_k);
    let h_g = draw_user(cfg.n_antennas, cfg.pathloss_gain(d_g), los, nlos, rng);
    let h_d = draw_user(cfg.n_antennas, cfg.pathloss_gain(d_d), los, nlos, rng);
    Ok(ChannelDraw { h_g, h_d, slot })
}

fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

fn draw_user<R: Rng + ?Sized>(
    n: usize,
    gain: f64,
    los: f64,
    nlos: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let amp = gain.sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let z = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            (Complex64::new(los, 0.0) + z * nlos) * amp
        })
        .collect()
}

/// The three inner products MRC needs: ‖h_g‖², ‖h_d‖² and |h_g^H h_d|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub norm_sq_g: f64,
    pub norm_sq_d: f64,
    pub cross_sq: f64,
}

impl ChannelGains {
    pub fn from_draw(draw: &ChannelDraw) -> Result<Self, PhyError> {
        if draw.h_g.is_empty() || draw.h_d.is_empty() {
            return Err(PhyError::EmptyChannel);
        }
        if draw.h_g.len() != draw.h_d.len() {
            return Err(PhyError::AntennaMismatch {
                go: draw.h_g.len(),
                do_len: draw.h_d.len(),
            });
        }
        let norm_sq_g = draw.h_g.iter().map(|h| h.norm_sqr()).sum();
        let norm_sq_d = draw.h_d.iter().map(|h| h.norm_sqr()).sum();
        let cross: Complex64 = draw
            .h_g
            .iter()
            .zip(&draw.h_d)
            .map(|(g, d)| g.conj() * d)
            .sum();
        Ok(Self {
            norm_sq_g,
            norm_sq_d,
            cross_sq: cross.norm_sqr(),
        })
    }

    /// MRC interference leakage of the DO signal into the GO combiner,
    /// |h_g^H h_d|² / ‖h_g‖².
    pub fn leakage_into_go(&self) -> f64 {
        if self.norm_sq_g > 0.0 {
            self.cross_sq / self.norm_sq_g
        } else {
            0.0
        }
    }

    /// MRC interference leakage of the GO signal into the DO combiner.
    pub fn leakage_into_do(&self) -> f64 {
        if self.norm_sq_d > 0.0 {
            self.cross_sq / self.norm_sq_d
        } else {
            0.0
        }
    }
}

/// Link quantities for one slot, one DO power and one QAM order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub sinr_g: f64,
    pub sinr_d: f64,
    pub snr_d: f64,
    /// GO bit error probability.
    pub ber: f64,
    /// GO uplink rate in bit/s.
    pub rate_g: f64,
    /// GO upload delay in seconds.
    pub d_tx: f64,
}

impl LinkMetrics {
    pub fn from_gains(
        gains: &ChannelGains,
        p_tx_d_w: f64,
        m: u32,
        cfg: &PhyConfig,
    ) -> Result<Self, PhyError> {
        if !(p_tx_d_w >= 0.0) {
            return Err(PhyError::NegativePower(p_tx_d_w));
        }
        if !cfg.modulation_orders.contains(&m) {
            return Err(PhyError::UnsupportedModulation(m));
        }
        let noise = cfg.noise_power_w();
        let p_g = cfg.p_tx_g_w;
        let sinr_g = gains.norm_sq_g * p_g / (gains.leakage_into_go() * p_tx_d_w + noise);
        let sinr_d = gains.norm_sq_d * p_tx_d_w / (gains.leakage_into_do() * p_g + noise);
        let snr_d = gains.norm_sq_d * p_tx_d_w / noise;
        let ber = ber_mqam(sinr_g, m)?;
        let rate_g = cfg.rate_go(m);
        Ok(Self {
            sinr_g,
            sinr_d,
            snr_d,
            ber,
            rate_g,
            d_tx: cfg.batch_bits / rate_g,
        })
    }
}

/// SINR/SNR, BER, GO rate and upload delay under MRC combining.
pub fn compute_link_metrics(
    draw: &ChannelDraw,
    p_tx_d_w: f64,
    m: u32,
    cfg: &PhyConfig,
) -> Result<LinkMetrics, PhyError> {
    let gains = ChannelGains::from_draw(draw)?;
    LinkMetrics::from_gains(&gains, p_tx_d_w, m, cfg)
}

/// Gaussian tail probability Q(x) = P[N(0,1) > x].
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Uncoded square M-QAM bit error probability, clamped to [0, 1/2].
pub fn ber_mqam(sinr: f64, m: u32) -> Result<f64, PhyError> {
    if !is_power_of_four(m) {
        return Err(PhyError::UnsupportedModulation(m));
    }
    if sinr.is_nan() || sinr < 0.0 {
        return Err(PhyError::NegativeSinr(sinr));
    }
    let mf = f64::from(m);
    let coeff = 4.0 / mf.log2() * (1.0 - 1.0 / mf.sqrt());
    let p = coeff * q_function((3.0 * sinr / (mf - 1.0)).sqrt());
    Ok(p.clamp(0.0, 0.5))
}

/// Slot-averaged DO rate: interfered during the GO upload, interference-free
/// for the rest of the slot.
pub fn rate_do(metrics: &LinkMetrics, d_tx_effective: f64, cfg: &PhyConfig) -> Result<f64, PhyError> {
    let tau = cfg.slot_s;
    if !(d_tx_effective >= 0.0) || d_tx_effective > tau {
        return Err(PhyError::TxExceedsSlot {
            d_tx: d_tx_effective,
            slot: tau,
        });
    }
    // Weighting by the busy fraction keeps both endpoints exact.
    let busy = d_tx_effective / tau;
    let w = cfg.bandwidth_hz;
    Ok(busy * w * (1.0 + metrics.sinr_d).log2() + (1.0 - busy) * w * (1.0 + metrics.snr_d).log2())
}

/// Inference latency ω/F. Zero allocated compute is reported as an error so
/// the caller decides how to treat it (infinite delay).
pub fn compute_delay(omega_flops: f64, f_flops: f64) -> Result<f64, PhyError> {
    if f_flops <= 0.0 {
        if omega_flops > 0.0 {
            return Err(PhyError::NoComputeAllocated);
        }
        return Ok(0.0);
    }
    Ok(omega_flops / f_flops)
}
