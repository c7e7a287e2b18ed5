mod common;

use common::{admit_brute_force, enumerate_decision, random_instance};
use gearr_core::orchestrator::{admit_arrivals, decide_slot};
use gearr_core::SlotDecision;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn decide(inst: &common::Instance) -> SlotDecision {
    decide_slot(&inst.draw, &inst.state, &inst.catalog, &inst.phy, &inst.pol, inst.a_max).unwrap()
}

#[test]
fn decide_slot_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut transmits = 0;
    let mut drops = 0;
    for case in 0..2000 {
        let inst = random_instance(&mut rng);
        let got = decide(&inst);
        let want = enumerate_decision(&inst.draw, &inst.state, &inst.catalog, &inst.phy, &inst.pol);
        let tol = 1e-12 * want.objective.abs().max(1.0);
        assert!(
            (got.objective - want.objective).abs() <= tol,
            "case {case}: objective {} vs {}",
            got.objective,
            want.objective
        );
        assert_eq!(got.p_tx_d_w, want.p, "case {case}");
        let got_tx = got.model_index.zip(got.m);
        assert_eq!(got_tx, want.tx, "case {case}");
        assert_eq!(got.transmit, want.tx.is_some());
        if got.transmit {
            transmits += 1;
        } else {
            drops += 1;
        }
    }
    // Both branches must be exercised for the comparison to mean anything.
    assert!(transmits > 200 && drops > 200, "{transmits} transmit, {drops} drop");
}

#[test]
fn admission_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let v = rng.random_range(0.0..100.0);
        let q = if rng.random_bool(0.1) { v } else { rng.random_range(0.0..200.0) };
        let a_max = rng.random_range(0.0..1e7);
        assert_eq!(admit_arrivals(q, v, a_max), admit_brute_force(q, v, a_max, 1000));
    }
}

#[test]
fn argmin_invariant_under_common_scaling() {
    // Scaling Q_d, Z and Y by c scales every candidate's objective by c.
    // Powers of two keep the products exact, so ties are preserved too.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let inst = random_instance(&mut rng);
        let base = decide(&inst);
        for c in [0.25, 2.0, 1024.0] {
            let mut scaled = inst.state;
            scaled.q_d_bits *= c;
            scaled.z *= c;
            scaled.y *= c;
            let s = decide_slot(&inst.draw, &scaled, &inst.catalog, &inst.phy, &inst.pol, inst.a_max).unwrap();
            assert_eq!(
                (s.p_tx_d_w, s.model_index, s.m),
                (base.p_tx_d_w, base.model_index, base.m)
            );
            assert_eq!(s.objective, base.objective * c);
        }
    }
}

#[test]
fn higher_z_never_lowers_goal_effectiveness() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..300 {
        let mut inst = random_instance(&mut rng);
        let mut prev = f64::NEG_INFINITY;
        for z in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 1e3, 1e4] {
            inst.state.z = z;
            let d = decide(&inst);
            assert!(d.gamma_g >= prev - 1e-12, "z={z}: {} < {prev}", d.gamma_g);
            prev = d.gamma_g;
        }
    }
}

#[test]
fn higher_y_never_raises_compute() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..300 {
        let mut inst = random_instance(&mut rng);
        let mut prev = f64::INFINITY;
        for y in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 1e3, 1e5] {
            inst.state.y = y;
            let d = decide(&inst);
            assert!(d.f_flops <= prev * (1.0 + 1e-12), "y={y}: {} > {prev}", d.f_flops);
            prev = d.f_flops;
        }
    }
}

#[test]
fn every_decision_meets_the_deadline() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..2000 {
        let inst = random_instance(&mut rng);
        let d = decide(&inst);
        let total = d.total_delay(&inst.catalog, &inst.phy);
        if d.transmit {
            assert!(total <= inst.pol.d_max_s * (1.0 + 1e-12), "{total}");
            assert!(d.f_flops <= inst.pol.f_max_flops);
            assert!(inst.phy.tx_delay(d.m.unwrap()) <= inst.phy.slot_s);
        } else {
            assert_eq!(total, 0.0);
            assert_eq!(d.f_flops, 0.0);
            assert_eq!(d.gamma_g, 0.0);
        }
        assert!(inst.pol.power_levels_w.contains(&d.p_tx_d_w));
        assert!(d.a_d_bits == 0.0 || d.a_d_bits == inst.a_max);
    }
}
