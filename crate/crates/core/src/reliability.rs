//! Inference models as (workload, accuracy-vs-BER) pairs.
//!
//! A profile's curve is a list of `(ber, accuracy)` knots. Lookups interpolate
//! linearly in `log10(ber)` and clamp outside the knot range. Profiles come
//! either from a JSON document produced by an offline profiler or from a
//! synthetic sigmoid generator.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ReliabilityError;

/// Steepness of synthetic curves, in logistic units per decade of BER.
pub const SIGMOID_SLOPE_PER_DECADE: f64 = 3.0;
pub const SYNTHETIC_KNOTS: usize = 20;
pub const SYNTHETIC_BER_MIN: f64 = 1e-8;
pub const SYNTHETIC_BER_MAX: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityProfile {
    #[serde(rename = "name")]
    pub model_name: String,
    /// FLOPs per inference instance.
    #[serde(rename = "flops")]
    pub omega_flops: f64,
    pub curve: Vec<(f64, f64)>,
}

impl ReliabilityProfile {
    pub fn validate(&self) -> Result<(), ReliabilityError> {
        let model = || self.model_name.clone();
        if !(self.omega_flops.is_finite() && self.omega_flops > 0.0) {
            return Err(ReliabilityError::InvalidModel {
                model: model(),
                reason: format!("flops must be positive, got {}", self.omega_flops),
            });
        }
        if self.curve.is_empty() {
            return Err(ReliabilityError::InvalidModel {
                model: model(),
                reason: "curve has no knots".into(),
            });
        }
        for (knot, &(ber, acc)) in self.curve.iter().enumerate() {
            let bad = |reason: String| ReliabilityError::InvalidKnot {
                model: model(),
                knot,
                reason,
            };
            if !(0.0..=0.5).contains(&ber) {
                return Err(bad(format!("ber {ber} outside [0, 0.5]")));
            }
            if !(0.0..=1.0).contains(&acc) {
                return Err(bad(format!("accuracy {acc} outside [0, 1]")));
            }
            if knot > 0 && !(ber > self.curve[knot - 1].0) {
                return Err(bad(format!(
                    "ber {ber} not strictly greater than previous knot {}",
                    self.curve[knot - 1].0
                )));
            }
        }
        Ok(())
    }

    /// Accuracy Γ_l(P_b) under bit error rate `ber`.
    pub fn accuracy_at(&self, ber: f64) -> Result<f64, ReliabilityError> {
        if !(0.0..=0.5).contains(&ber) {
            return Err(ReliabilityError::InvalidBer(ber));
        }
        // A knot at ber = 0 only answers exact zero queries; positive queries
        // start from the first positive knot.
        let first_positive = self.curve.iter().position(|&(b, _)| b > 0.0);
        let Some(start) = first_positive else {
            return Ok(self.curve[0].1);
        };
        if ber == 0.0 {
            return Ok(self.curve[0].1);
        }
        let knots = &self.curve[start..];
        let (b0, a0) = knots[0];
        if ber <= b0 {
            return Ok(a0);
        }
        let (bn, an) = knots[knots.len() - 1];
        if ber >= bn {
            return Ok(an);
        }
        // First knot with b > ber; knots are strictly increasing.
        let hi = knots.partition_point(|&(b, _)| b <= ber);
        let (bl, al) = knots[hi - 1];
        let (bh, ah) = knots[hi];
        if ber == bl {
            return Ok(al);
        }
        let t = (ber.log10() - bl.log10()) / (bh.log10() - bl.log10());
        Ok(al + t * (ah - al))
    }

    pub fn accuracy_range(&self) -> (f64, f64) {
        self.curve
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, a)| {
                (lo.min(a), hi.max(a))
            })
    }
}

/// The set of models available at the edge server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCatalog {
    #[serde(rename = "models")]
    pub profiles: Vec<ReliabilityProfile>,
}

impl ModelCatalog {
    pub fn new(profiles: Vec<ReliabilityProfile>) -> Result<Self, ReliabilityError> {
        let catalog = Self { profiles };
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn validate(&self) -> Result<(), ReliabilityError> {
        if self.profiles.is_empty() {
            return Err(ReliabilityError::EmptyCatalog);
        }
        let mut seen = HashSet::new();
        for p in &self.profiles {
            if !seen.insert(p.model_name.as_str()) {
                return Err(ReliabilityError::DuplicateName(p.model_name.clone()));
            }
            p.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ReliabilityProfile> {
        self.profiles.get(index)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.profiles.iter().position(|p| p.model_name == name)
    }

    pub fn from_json_str(s: &str) -> Result<Self, ReliabilityError> {
        let catalog: Self =
            serde_json::from_str(s).map_err(|e| ReliabilityError::Parse(e.to_string()))?;
        catalog.validate()?;
        Ok(catalog)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ReliabilityError> {
        std::fs::write(path, self.to_json_string()).map_err(|e| ReliabilityError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

/// Reads and validates a profile document.
pub fn load_catalog(path: &Path) -> Result<ModelCatalog, ReliabilityError> {
    let text = std::fs::read_to_string(path).map_err(|e| ReliabilityError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    ModelCatalog::from_json_str(&text)
}

/// Parameters of a synthetic accuracy curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub name: String,
    pub omega_flops: f64,
    pub acc_clean: f64,
    pub acc_floor: f64,
    pub ber_knee: f64,
}

impl SyntheticModel {
    pub fn new(name: &str, omega_flops: f64, acc_clean: f64, acc_floor: f64, ber_knee: f64) -> Self {
        Self {
            name: name.to_owned(),
            omega_flops,
            acc_clean,
            acc_floor,
            ber_knee,
        }
    }

    /// Logistic curve in log10(ber), `acc_clean` far left, `acc_floor` far right.
    pub fn sigmoid(&self, ber: f64) -> f64 {
        let x = SIGMOID_SLOPE_PER_DECADE * (ber.log10() - self.ber_knee.log10());
        self.acc_floor + (self.acc_clean - self.acc_floor) / (1.0 + x.exp())
    }

    fn validate(&self) -> Result<(), ReliabilityError> {
        let bad = |reason: &str| ReliabilityError::InvalidSynthetic {
            model: self.name.clone(),
            reason: reason.to_owned(),
        };
        if !(self.omega_flops.is_finite() && self.omega_flops > 0.0) {
            return Err(bad("omega_flops must be positive"));
        }
        if !(0.0..=1.0).contains(&self.acc_clean) || !(0.0..=1.0).contains(&self.acc_floor) {
            return Err(bad("accuracies must lie in [0, 1]"));
        }
        if self.acc_floor > self.acc_clean {
            return Err(bad("acc_floor exceeds acc_clean"));
        }
        if !(self.ber_knee > 0.0 && self.ber_knee < 0.5) {
            return Err(bad("ber_knee must lie in (0, 0.5)"));
        }
        Ok(())
    }
}

/// Log-spaced knot positions used by synthetic curves.
pub fn synthetic_knots() -> Vec<f64> {
    let lo = SYNTHETIC_BER_MIN.log10();
    let hi = SYNTHETIC_BER_MAX.log10();
    (0..SYNTHETIC_KNOTS)
        .map(|i| {
            if i == SYNTHETIC_KNOTS - 1 {
                SYNTHETIC_BER_MAX
            } else {
                10f64.powf(lo + (hi - lo) * i as f64 / (SYNTHETIC_KNOTS - 1) as f64)
            }
        })
        .collect()
}

/// Builds a catalog of sampled sigmoid curves.
pub fn synthetic_catalog(specs: &[SyntheticModel]) -> Result<ModelCatalog, ReliabilityError> {
    let knots = synthetic_knots();
    let mut profiles = Vec::with_capacity(specs.len());
    for spec in specs {
        spec.validate()?;
        let curve = knots
            .iter()
            .map(|&b| (b, spec.sigmoid(b).clamp(spec.acc_floor, spec.acc_clean)))
            .collect();
        profiles.push(ReliabilityProfile {
            model_name: spec.name.clone(),
            omega_flops: spec.omega_flops,
            curve,
        });
    }
    ModelCatalog::new(profiles)
}

/// Stand-in curves for the four reference classifiers (MobileNetV3-small,
/// ResNet-50, ResNet-101, ViT-B/16) with their per-image GFLOPs. Heavier
/// models are both more accurate and more tolerant to bit errors.
pub fn reference_synthetic_models() -> Vec<SyntheticModel> {
    vec![
        SyntheticModel::new("mobilenetv3_small", 0.11e9, 0.82, 0.10, 2e-3),
        SyntheticModel::new("resnet50", 8.2e9, 0.91, 0.10, 5e-3),
        SyntheticModel::new("resnet101", 15.6e9, 0.93, 0.10, 8e-3),
        SyntheticModel::new("vit_b_16", 33e9, 0.95, 0.10, 2e-2),
    ]
}
