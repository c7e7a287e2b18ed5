//! TOML experiment configuration.
//!
//! A config file names an optional preset and overrides any subset of its
//! fields. Every physical quantity carries its unit in the key. Missing keys
//! take the preset value; the fully resolved configuration can be written
//! back out, and reading that echo reproduces the same `SimConfig`.

use std::path::{Path, PathBuf};

use gearr_core::phy::{free_space_ref_gain, PhyConfig, Position};
use gearr_core::reliability::SyntheticModel;
use gearr_core::sim::{CatalogSource, Controller, SimConfig};
use gearr_core::{ModelCatalog, PolicyConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_PRESET: &str = "table1";

/// A named starting point that a config file overrides.
pub struct ExperimentPreset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> SimConfig,
}

impl ExperimentPreset {
    pub fn config(&self) -> SimConfig {
        (self.build)()
    }
}

pub const PRESETS: &[ExperimentPreset] = &[
    ExperimentPreset {
        name: "table1",
        description: "reference scenario: 20000 slots, averages over the last 10000",
        build: SimConfig::table1,
    },
    ExperimentPreset {
        name: "quick",
        description: "reference scenario shortened to 2000 slots for smoke tests",
        build: quick,
    },
];

fn quick() -> SimConfig {
    let mut cfg = SimConfig::table1();
    cfg.horizon_slots = 2000;
    cfg.warmup_slots = 1000;
    cfg.window_slots = 100;
    cfg
}

pub fn preset(name: &str) -> Result<&'static ExperimentPreset, CliError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        CliError::Validation(format!("preset: unknown preset {name:?} (known: {})", known.join(", ")))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: String,
    pub phy: PhySection,
    pub policy: PolicySection,
    pub sim: SimSection,
    pub controller: ControllerSection,
    pub catalog: CatalogSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhySection {
    pub carrier_freq_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub n_antennas: usize,
    /// `inf` gives a pure line-of-sight channel.
    pub rician_k: f64,
    pub pathloss_exponent: f64,
    /// Linear gain at 1 m. Defaults to free space at the carrier frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pathloss_ref_gain: Option<f64>,
    pub do_position_m: [f64; 2],
    pub go_position_m: [f64; 2],
    pub ap_position_m: [f64; 2],
    pub p_tx_g_w: f64,
    pub modulation_orders: Vec<u32>,
    pub batch_bits: f64,
    pub slot_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub v_mbit: f64,
    pub power_levels_w: Vec<f64>,
    pub gamma_th: f64,
    pub f_th_tflops: f64,
    pub f_max_tflops: f64,
    pub d_max_ms: f64,
    pub mu_z: f64,
    pub mu_y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub horizon_slots: u64,
    pub warmup_slots: u64,
    /// Poisson mean of the offered DO traffic per slot.
    pub arrival_lambda_bits: f64,
    pub seed: u64,
    pub window_slots: usize,
    pub bernoulli_correctness: bool,
    pub unstable_slope_bits_per_slot: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Dynamic,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tx_d_w: Option<f64>,
    /// Model name from the catalog.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSection {
    /// Profile document; relative paths resolve against the config file.
    /// Takes precedence over `synthetic`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthetic: Vec<SyntheticSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub name: String,
    pub flops: f64,
    pub acc_clean: f64,
    pub acc_floor: f64,
    pub ber_knee: f64,
}

fn pos(p: [f64; 2]) -> Position {
    Position::new(p[0], p[1])
}

fn unpos(p: Position) -> [f64; 2] {
    [p.x, p.y]
}

impl FileConfig {
    /// Fully populated file form of `cfg`. A static controller's model is
    /// named through `catalog`.
    pub fn from_sim(
        preset: &str,
        cfg: &SimConfig,
        catalog: Option<&ModelCatalog>,
    ) -> Result<Self, CliError> {
        let controller = match &cfg.controller {
            Controller::Dynamic => ControllerSection {
                kind: ControllerKind::Dynamic,
                p_tx_d_w: None,
                model: None,
            },
            Controller::Static {
                p_tx_d_w,
                model_index,
            } => {
                let name = catalog
                    .and_then(|c| c.get(*model_index))
                    .map(|p| p.model_name.clone())
                    .ok_or_else(|| {
                        CliError::Validation(format!("controller.model: no model at index {model_index}"))
                    })?;
                ControllerSection {
                    kind: ControllerKind::Static,
                    p_tx_d_w: Some(*p_tx_d_w),
                    model: Some(name),
                }
            }
        };
        let catalog = match &cfg.catalog {
            CatalogSource::File(path) => CatalogSection {
                profile_path: Some(path.clone()),
                synthetic: Vec::new(),
            },
            CatalogSource::Synthetic(specs) => CatalogSection {
                profile_path: None,
                synthetic: specs
                    .iter()
                    .map(|s| SyntheticSpec {
                        name: s.name.clone(),
                        flops: s.omega_flops,
                        acc_clean: s.acc_clean,
                        acc_floor: s.acc_floor,
                        ber_knee: s.ber_knee,
                    })
                    .collect(),
            },
        };
        let (phy, pol) = (&cfg.phy, &cfg.policy);
        Ok(Self {
            preset: preset.to_owned(),
            phy: PhySection {
                carrier_freq_hz: phy.carrier_freq_hz,
                bandwidth_hz: phy.bandwidth_hz,
                noise_psd_dbm_per_hz: phy.noise_psd_dbm_per_hz,
                noise_figure_db: phy.noise_figure_db,
                n_antennas: phy.n_antennas,
                rician_k: phy.rician_k,
                pathloss_exponent: phy.pathloss_exponent,
                pathloss_ref_gain: Some(phy.pathloss_ref_gain),
                do_position_m: unpos(phy.do_position),
                go_position_m: unpos(phy.go_position),
                ap_position_m: unpos(phy.ap_position),
                p_tx_g_w: phy.p_tx_g_w,
                modulation_orders: phy.modulation_orders.clone(),
                batch_bits: phy.batch_bits,
                slot_ms: phy.slot_s * 1e3,
            },
            policy: PolicySection {
                v_mbit: pol.v_mbit,
                power_levels_w: pol.power_levels_w.clone(),
                gamma_th: pol.gamma_th,
                f_th_tflops: pol.f_th_flops / 1e12,
                f_max_tflops: pol.f_max_flops / 1e12,
                d_max_ms: pol.d_max_s * 1e3,
                mu_z: pol.mu_z,
                mu_y: pol.mu_y,
            },
            sim: SimSection {
                horizon_slots: cfg.horizon_slots,
                warmup_slots: cfg.warmup_slots,
                arrival_lambda_bits: cfg.arrival_lambda_bits,
                seed: cfg.seed,
                window_slots: cfg.window_slots,
                bernoulli_correctness: cfg.bernoulli_correctness,
                unstable_slope_bits_per_slot: cfg.unstable_slope_bits_per_slot,
            },
            controller,
            catalog,
        })
    }

    /// Converts to the simulator's SI-unit configuration and loads the
    /// catalog. Field errors name the config key, e.g. `phy.bandwidth_hz`.
    pub fn resolve(&self) -> Result<(SimConfig, ModelCatalog), CliError> {
        let p = &self.phy;
        let phy = PhyConfig {
            carrier_freq_hz: p.carrier_freq_hz,
            bandwidth_hz: p.bandwidth_hz,
            noise_psd_dbm_per_hz: p.noise_psd_dbm_per_hz,
            noise_figure_db: p.noise_figure_db,
            n_antennas: p.n_antennas,
            rician_k: p.rician_k,
            pathloss_exponent: p.pathloss_exponent,
            pathloss_ref_gain: p
                .pathloss_ref_gain
                .unwrap_or_else(|| free_space_ref_gain(p.carrier_freq_hz)),
            do_position: pos(p.do_position_m),
            go_position: pos(p.go_position_m),
            ap_position: pos(p.ap_position_m),
            p_tx_g_w: p.p_tx_g_w,
            modulation_orders: p.modulation_orders.clone(),
            batch_bits: p.batch_bits,
            slot_s: p.slot_ms / 1e3,
        };
        let q = &self.policy;
        let policy = PolicyConfig {
            v_mbit: q.v_mbit,
            power_levels_w: q.power_levels_w.clone(),
            gamma_th: q.gamma_th,
            f_th_flops: q.f_th_tflops * 1e12,
            f_max_flops: q.f_max_tflops * 1e12,
            d_max_s: q.d_max_ms / 1e3,
            mu_z: q.mu_z,
            mu_y: q.mu_y,
        };
        let catalog_source = match &self.catalog.profile_path {
            Some(path) => CatalogSource::File(path.clone()),
            None if self.catalog.synthetic.is_empty() => {
                return Err(CliError::Validation(
                    "catalog: set profile_path or at least one synthetic model".into(),
                ))
            }
            None => CatalogSource::Synthetic(
                self.catalog
                    .synthetic
                    .iter()
                    .map(|s| SyntheticModel::new(&s.name, s.flops, s.acc_clean, s.acc_floor, s.ber_knee))
                    .collect(),
            ),
        };
        let s = &self.sim;
        let mut cfg = SimConfig {
            phy,
            policy,
            catalog: catalog_source,
            controller: Controller::Dynamic,
            horizon_slots: s.horizon_slots,
            warmup_slots: s.warmup_slots,
            arrival_lambda_bits: s.arrival_lambda_bits,
            seed: s.seed,
            window_slots: s.window_slots,
            bernoulli_correctness: s.bernoulli_correctness,
            unstable_slope_bits_per_slot: s.unstable_slope_bits_per_slot,
        };
        cfg.validate().map_err(|e| CliError::from_sim(&e))?;
        let catalog = cfg.catalog.load().map_err(|e| CliError::from_sim(&e))?;
        if self.controller.kind == ControllerKind::Static {
            let p_tx_d_w = self.controller.p_tx_d_w.ok_or_else(|| {
                CliError::Validation("controller.p_tx_d_w: required for a static controller".into())
            })?;
            let name = self.controller.model.as_deref().ok_or_else(|| {
                CliError::Validation("controller.model: required for a static controller".into())
            })?;
            let model_index = catalog.index_of(name).ok_or_else(|| {
                CliError::Validation(format!("controller.model: {name:?} is not in the catalog"))
            })?;
            if !cfg.policy.power_levels_w.contains(&p_tx_d_w) {
                return Err(CliError::Validation(format!(
                    "controller.p_tx_d_w: {p_tx_d_w} W is not one of policy.power_levels_w"
                )));
            }
            cfg.controller = Controller::Static {
                p_tx_d_w,
                model_index,
            };
        }
        Ok((cfg, catalog))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Recursively overlays `top` onto `base`; tables merge, everything else
/// (including arrays) is replaced.
fn deep_merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => deep_merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses a config document over its preset. Relative catalog paths resolve
/// against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<FileConfig, CliError> {
    let top: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {e}")))?;
    let preset_name = match top.get("preset") {
        None => DEFAULT_PRESET,
        Some(toml::Value::String(s)) => s.as_str(),
        Some(_) => return Err(CliError::Validation("preset: expected a string".into())),
    };
    let base_cfg = preset(preset_name)?.config();
    let mut merged = toml::Table::try_from(FileConfig::from_sim(preset_name, &base_cfg, None)?)
        .expect("config serializes to a table");
    // Let the reference gain follow a carrier override.
    if let Some(toml::Value::Table(phy)) = merged.get_mut("phy") {
        phy.remove("pathloss_ref_gain");
    }
    // A profile path replaces the preset's synthetic models.
    let has_path = matches!(top.get("catalog"), Some(toml::Value::Table(c)) if c.contains_key("profile_path"));
    if has_path {
        if let Some(toml::Value::Table(cat)) = merged.get_mut("catalog") {
            cat.remove("synthetic");
        }
    }
    deep_merge(&mut merged, top);
    let mut cfg: FileConfig = merged
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Validation(format!("config: {e}")))?;
    if let Some(path) = &cfg.catalog.profile_path {
        if path.is_relative() {
            cfg.catalog.profile_path = Some(base_dir.join(path));
        }
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("config file {}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<FileConfig, CliError> {
        parse_config(text, Path::new("/cfg"))
    }

    #[test]
    fn empty_file_is_the_default_preset() {
        let (cfg, catalog) = parse("").unwrap().resolve().unwrap();
        assert_eq!(cfg, SimConfig::table1());
        assert_eq!(catalog.len(), 4);
    }

    #[test]
    fn table1_values_verbatim() {
        let file = parse("preset = \"table1\"").unwrap();
        assert_eq!(file.phy.carrier_freq_hz, 3.5e9);
        assert_eq!(file.phy.bandwidth_hz, 10e6);
        assert_eq!(file.phy.modulation_orders, vec![256]);
        assert_eq!(file.phy.rician_k, 4.0);
        assert_eq!(file.phy.pathloss_exponent, 3.5);
        assert_eq!(file.phy.n_antennas, 8);
        assert_eq!(file.phy.do_position_m, [-15.0, 0.0]);
        assert_eq!(file.phy.go_position_m, [0.0, 0.0]);
        assert_eq!(file.phy.ap_position_m, [0.0, 20.0]);
        assert_eq!(file.phy.p_tx_g_w, 0.1);
        assert_eq!(file.phy.slot_ms, 20.0);
        assert_eq!(file.policy.d_max_ms, 20.0);
        assert_eq!(*file.policy.power_levels_w.last().unwrap(), 0.1);
        assert_eq!(file.sim.arrival_lambda_bits, 5e6);
        assert_eq!(file.sim.horizon_slots, 20000);
        assert_eq!(file.sim.warmup_slots, 10000);
    }

    #[test]
    fn overrides_merge_into_the_preset() {
        let file = parse(
            "preset = \"quick\"\n[policy]\ngamma_th = 0.6\nf_th_tflops = 2\n[phy]\nrician_k = inf\n",
        )
        .unwrap();
        let (cfg, _) = file.resolve().unwrap();
        assert_eq!(cfg.horizon_slots, 2000);
        assert_eq!(cfg.policy.gamma_th, 0.6);
        assert_eq!(cfg.policy.f_th_flops, 2e12);
        assert!(cfg.phy.rician_k.is_infinite());
        assert_eq!(cfg.policy.v_mbit, 5.0);
    }

    #[test]
    fn echo_round_trips() {
        let file = parse("[policy]\nv_mbit = 12.5\n[controller]\nkind = \"static\"\np_tx_d_w = 0.02\nmodel = \"resnet50\"\n")
            .unwrap();
        let (cfg, catalog) = file.resolve().unwrap();
        let echo = FileConfig::from_sim("table1", &cfg, Some(&catalog)).unwrap().to_toml();
        let (again, _) = parse(&echo).unwrap().resolve().unwrap();
        assert_eq!(again, cfg);
        assert!(matches!(again.controller, Controller::Static { model_index: 1, .. }));
    }

    #[test]
    fn carrier_override_moves_the_reference_gain() {
        let (cfg, _) = parse("[phy]\ncarrier_freq_hz = 7e9\n").unwrap().resolve().unwrap();
        assert_eq!(cfg.phy.pathloss_ref_gain, free_space_ref_gain(7e9));
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("[phy]\nbandwidth_hz = -1.0\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("phy.bandwidth_hz"), "{e}");
        let e = parse("[policy]\nd_max_ms = 0\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("policy.d_max_ms"), "{e}");
        let e = parse("[sim]\nwarmup_slots = 30000\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("sim.warmup_slots"), "{e}");
        let e = parse("[phy]\nbandwidth = 1.0\n").unwrap_err();
        assert!(e.to_string().contains("bandwidth"), "{e}");
        let e = parse("preset = \"nope\"").unwrap_err();
        assert!(e.to_string().contains("nope"), "{e}");
        let e = parse("[controller]\nkind = \"static\"\n").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("controller.p_tx_d_w"), "{e}");
        assert!(matches!(e, CliError::Validation(_)));
    }

    #[test]
    fn profile_path_replaces_synthetic_models() {
        let file = parse("[catalog]\nprofile_path = \"p.json\"\n").unwrap();
        assert_eq!(file.catalog.profile_path, Some(PathBuf::from("/cfg/p.json")));
        assert!(file.catalog.synthetic.is_empty());
    }
}
