use std::path::PathBuf;

use gearr_core::reliability::{
    load_catalog, reference_synthetic_models, synthetic_catalog, ModelCatalog, ReliabilityProfile,
    SyntheticModel,
};
use gearr_core::sim::{run_with_catalog, SimConfig};
use proptest::prelude::*;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/profiler_imagenette.json")
}

#[test]
fn profiler_document_loads() {
    let cat = load_catalog(&fixture()).unwrap();
    let names: Vec<_> = cat.profiles.iter().map(|p| p.model_name.as_str()).collect();
    assert_eq!(names, ["mobilenetv3_small", "resnet50", "resnet101", "vit_b_16"]);
    assert_eq!(cat.profiles[2].omega_flops, 15.6e9);
    // The zero-BER knot holds the clean accuracy.
    assert_eq!(cat.profiles[0].accuracy_at(0.0).unwrap(), 0.878);
    for p in &cat.profiles {
        assert!((p.accuracy_at(0.5).unwrap() - 0.1).abs() <= 0.05);
    }
}

#[test]
fn profiler_document_drives_a_run() {
    let cat = load_catalog(&fixture()).unwrap();
    let mut cfg = SimConfig::table1();
    cfg.horizon_slots = 2000;
    cfg.warmup_slots = 1000;
    cfg.policy.gamma_th = 0.7;
    let out = run_with_catalog(&cfg, &cat, false).unwrap();
    assert!(out.summary.avg_gamma_g > 0.5);
    assert!(!out.summary.unstable);
}

#[test]
fn unknown_top_level_keys_are_ignored() {
    let text = r#"{"models": [{"name": "a", "flops": 1e9, "curve": [[1e-4, 0.9]]}], "seed": 3}"#;
    assert_eq!(ModelCatalog::from_json_str(text).unwrap().len(), 1);
}

#[test]
fn synthetic_reference_curves_are_monotone_on_a_fine_grid() {
    let cat = synthetic_catalog(&reference_synthetic_models()).unwrap();
    for p in &cat.profiles {
        let mut prev = f64::INFINITY;
        for i in 0..=4000 {
            let ber = 10f64.powf(-9.0 + i as f64 * (9.0 + 0.5f64.log10()) / 4000.0).min(0.5);
            let a = p.accuracy_at(ber).unwrap();
            assert!(a <= prev, "{} at {ber}", p.model_name);
            prev = a;
        }
    }
}

fn profile_strategy() -> impl Strategy<Value = ReliabilityProfile> {
    (
        "[a-z][a-z0-9_]{0,12}",
        1e6f64..1e12,
        prop::collection::vec((1e-9f64..0.5, 0.0f64..=1.0), 1..25),
        any::<bool>(),
    )
        .prop_map(|(name, flops, mut knots, zero)| {
            knots.sort_by(|a, b| a.0.total_cmp(&b.0));
            knots.dedup_by(|a, b| a.0 == b.0);
            if zero {
                knots.insert(0, (0.0, 1.0));
            }
            ReliabilityProfile {
                model_name: name,
                omega_flops: flops,
                curve: knots,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_then_load_is_exact(profiles in prop::collection::vec(profile_strategy(), 1..5)) {
        let mut profiles = profiles;
        for (i, p) in profiles.iter_mut().enumerate() {
            p.model_name = format!("{}_{i}", p.model_name);
        }
        let cat = ModelCatalog::new(profiles).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.json");
        cat.save(&path).unwrap();
        prop_assert_eq!(load_catalog(&path).unwrap(), cat);
    }

    #[test]
    fn interpolated_accuracy_stays_between_neighbouring_knots(p in profile_strategy(), u in 0.0f64..1.0) {
        let ber = 10f64.powf(-10.0 + u * (10.0 + 0.5f64.log10())).min(0.5);
        let a = p.accuracy_at(ber).unwrap();
        let (lo, hi) = p.accuracy_range();
        prop_assert!(a >= lo - 1e-12 && a <= hi + 1e-12);
    }

    #[test]
    fn synthetic_curves_fall_from_clean_to_floor(
        clean in 0.2f64..1.0, frac in 0.0f64..1.0, knee in -6.0f64..-0.5, flops in 1e6f64..1e12,
    ) {
        let spec = SyntheticModel::new("s", flops, clean, clean * frac, 10f64.powf(knee));
        let cat = synthetic_catalog(std::slice::from_ref(&spec)).unwrap();
        let curve = &cat.profiles[0].curve;
        for w in curve.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
        prop_assert!(curve.iter().all(|&(_, a)| a >= spec.acc_floor && a <= spec.acc_clean));
    }
}
