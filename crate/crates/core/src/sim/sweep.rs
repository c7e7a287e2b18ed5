//! Grid sweeps over independent runs.
//!
//! Runs execute on a bounded rayon pool. Results are collected in grid order
//! and reduced sequentially, so output does not depend on the worker count.
//! Runs flagged unstable are excluded from the aggregated rows.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::{run_with_catalog, Controller, RunSummary, SimConfig};
use crate::error::SimError;
use crate::reliability::ModelCatalog;

#[derive(Debug, Clone)]
pub struct Sweep<R> {
    pub rows: Vec<R>,
    pub runs: Vec<RunRecord>,
}

/// Per-run record kept for stability bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub kind: &'static str,
    pub gamma_th: f64,
    pub f_th_flops: f64,
    pub v_mbit: f64,
    pub p_tx_d_w: Option<f64>,
    pub model: Option<String>,
    pub seed: u64,
    pub avg_a_d_bits: f64,
    pub avg_gamma_g: f64,
    pub avg_f_flops: f64,
    pub avg_delay_q_s: Option<f64>,
    pub q_slope_bits_per_slot: f64,
    pub unstable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GearrRow {
    pub gamma_th: f64,
    pub f_th_flops: f64,
    pub avg_a_d_bits: f64,
    pub avg_a_d_se: f64,
    pub avg_gamma_g: f64,
    pub avg_gamma_g_se: f64,
    pub avg_f_flops: f64,
    pub avg_f_se: f64,
    pub runs: usize,
    pub unstable_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub v_mbit: f64,
    pub gamma_th: f64,
    pub f_th_flops: f64,
    pub avg_a_d_bits: f64,
    pub avg_a_d_se: f64,
    pub avg_delay_q_s: f64,
    pub avg_delay_q_se: f64,
    pub avg_q_d_bits: f64,
    pub runs: usize,
    pub unstable_runs: usize,
}

/// Seed-averaged outcome of one fixed (power, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StaticScanPoint {
    pub p_tx_d_w: f64,
    pub model_index: usize,
    pub model: String,
    pub avg_a_d_bits: f64,
    pub avg_a_d_se: f64,
    pub avg_gamma_g: f64,
    pub avg_gamma_g_se: f64,
    pub avg_f_flops: f64,
    pub runs: usize,
    pub unstable_runs: usize,
}

/// Best static pair for a goal-effectiveness target next to the dynamic
/// controller run with the static pair's realized compute as its budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub gamma_th: f64,
    pub static_feasible: bool,
    pub static_p_tx_d_w: Option<f64>,
    pub static_model: Option<String>,
    pub static_avg_a_d_bits: Option<f64>,
    pub static_avg_gamma_g: Option<f64>,
    pub static_avg_f_flops: Option<f64>,
    pub dynamic_f_th_flops: Option<f64>,
    pub dynamic_avg_a_d_bits: Option<f64>,
    pub dynamic_avg_a_d_se: Option<f64>,
    pub dynamic_avg_gamma_g: Option<f64>,
    pub dynamic_avg_f_flops: Option<f64>,
}

/// Sample mean and standard error of the mean (zero for fewer than two samples).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn check_grid<T>(grid: &[T], name: &'static str) -> Result<(), SimError> {
    if grid.is_empty() {
        Err(SimError::EmptyGrid(name))
    } else {
        Ok(())
    }
}

fn run_all(
    configs: &[SimConfig],
    catalog: &ModelCatalog,
    jobs: usize,
) -> Result<Vec<RunSummary>, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::ThreadPool(e.to_string()))?;
    pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| run_with_catalog(cfg, catalog, false).map(|o| o.summary))
            .collect()
    })
}

fn record(kind: &'static str, cfg: &SimConfig, catalog: &ModelCatalog, s: &RunSummary) -> RunRecord {
    let (p, model) = match &cfg.controller {
        Controller::Dynamic => (None, None),
        Controller::Static {
            p_tx_d_w,
            model_index,
        } => (
            Some(*p_tx_d_w),
            Some(catalog.profiles[*model_index].model_name.clone()),
        ),
    };
    RunRecord {
        kind,
        gamma_th: cfg.policy.gamma_th,
        f_th_flops: cfg.policy.f_th_flops,
        v_mbit: cfg.policy.v_mbit,
        p_tx_d_w: p,
        model,
        seed: cfg.seed,
        avg_a_d_bits: s.avg_a_d_bits,
        avg_gamma_g: s.avg_gamma_g,
        avg_f_flops: s.avg_f_flops,
        avg_delay_q_s: s.avg_delay_q_s,
        q_slope_bits_per_slot: s.q_slope_bits_per_slot,
        unstable: s.unstable,
    }
}

/// Splits one grid point's runs into stable summaries and an unstable count.
fn stable_subset<'a>(point: &str, group: &'a [RunSummary]) -> (Vec<&'a RunSummary>, usize) {
    let stable: Vec<_> = group.iter().filter(|s| !s.unstable).collect();
    let unstable = group.len() - stable.len();
    if unstable > 0 {
        warn!("{point}: excluding {unstable} unstable run(s) from the aggregate");
    }
    (stable, unstable)
}

fn column(runs: &[&RunSummary], f: impl Fn(&RunSummary) -> f64) -> Vec<f64> {
    runs.iter().map(|s| f(s)).collect()
}

/// Goal-effective achievable rate region: one row per (Γ_th, F_th) point,
/// averaged over seeds.
pub fn sweep_gearr(
    base: &SimConfig,
    catalog: &ModelCatalog,
    gamma_th_grid: &[f64],
    f_th_grid: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<Sweep<GearrRow>, SimError> {
    check_grid(gamma_th_grid, "gamma_th")?;
    check_grid(f_th_grid, "f_th")?;
    check_grid(seeds, "seeds")?;
    let mut configs = Vec::new();
    for &f_th in f_th_grid {
        for &g in gamma_th_grid {
            for &seed in seeds {
                let mut cfg = base.clone();
                cfg.controller = Controller::Dynamic;
                cfg.policy.gamma_th = g;
                cfg.policy.f_th_flops = f_th;
                cfg.seed = seed;
                configs.push(cfg);
            }
        }
    }
    let summaries = run_all(&configs, catalog, jobs)?;
    let runs = configs
        .iter()
        .zip(&summaries)
        .map(|(c, s)| record("gearr", c, catalog, s))
        .collect();
    let rows = configs
        .chunks(seeds.len())
        .zip(summaries.chunks(seeds.len()))
        .map(|(cfgs, group)| {
            let (g, f_th) = (cfgs[0].policy.gamma_th, cfgs[0].policy.f_th_flops);
            let (stable, unstable_runs) =
                stable_subset(&format!("gamma_th={g} f_th={f_th}"), group);
            let (a, a_se) = mean_and_se(&column(&stable, |s| s.avg_a_d_bits));
            let (gg, gg_se) = mean_and_se(&column(&stable, |s| s.avg_gamma_g));
            let (f, f_se) = mean_and_se(&column(&stable, |s| s.avg_f_flops));
            GearrRow {
                gamma_th: g,
                f_th_flops: f_th,
                avg_a_d_bits: a,
                avg_a_d_se: a_se,
                avg_gamma_g: gg,
                avg_gamma_g_se: gg_se,
                avg_f_flops: f,
                avg_f_se: f_se,
                runs: stable.len(),
                unstable_runs,
            }
        })
        .collect();
    Ok(Sweep { rows, runs })
}

/// Delay versus sustained rate as V varies, one curve per Γ_th. The compute
/// budget comes from `base`.
pub fn sweep_tradeoff(
    base: &SimConfig,
    catalog: &ModelCatalog,
    v_grid: &[f64],
    gamma_th_grid: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<Sweep<TradeoffRow>, SimError> {
    check_grid(v_grid, "v")?;
    check_grid(gamma_th_grid, "gamma_th")?;
    check_grid(seeds, "seeds")?;
    let mut configs = Vec::new();
    for &g in gamma_th_grid {
        for &v in v_grid {
            for &seed in seeds {
                let mut cfg = base.clone();
                cfg.controller = Controller::Dynamic;
                cfg.policy.gamma_th = g;
                cfg.policy.v_mbit = v;
                cfg.seed = seed;
                configs.push(cfg);
            }
        }
    }
    let summaries = run_all(&configs, catalog, jobs)?;
    let runs = configs
        .iter()
        .zip(&summaries)
        .map(|(c, s)| record("tradeoff", c, catalog, s))
        .collect();
    let rows = configs
        .chunks(seeds.len())
        .zip(summaries.chunks(seeds.len()))
        .map(|(cfgs, group)| {
            let (g, v) = (cfgs[0].policy.gamma_th, cfgs[0].policy.v_mbit);
            let (stable, unstable_runs) = stable_subset(&format!("gamma_th={g} v={v}"), group);
            let (a, a_se) = mean_and_se(&column(&stable, |s| s.avg_a_d_bits));
            let delays: Vec<f64> = stable.iter().filter_map(|s| s.avg_delay_q_s).collect();
            let (d, d_se) = mean_and_se(&delays);
            let (q, _) = mean_and_se(&column(&stable, |s| s.avg_q_d_bits));
            TradeoffRow {
                v_mbit: v,
                gamma_th: g,
                f_th_flops: cfgs[0].policy.f_th_flops,
                avg_a_d_bits: a,
                avg_a_d_se: a_se,
                avg_delay_q_s: d,
                avg_delay_q_se: d_se,
                avg_q_d_bits: q,
                runs: stable.len(),
                unstable_runs,
            }
        })
        .collect();
    Ok(Sweep { rows, runs })
}

/// Runs every fixed (power, model) pair over all seeds.
pub fn static_scan(
    base: &SimConfig,
    catalog: &ModelCatalog,
    seeds: &[u64],
    jobs: usize,
) -> Result<Sweep<StaticScanPoint>, SimError> {
    check_grid(seeds, "seeds")?;
    let mut configs = Vec::new();
    for &p in &base.policy.power_levels_w {
        for l in 0..catalog.len() {
            for &seed in seeds {
                let mut cfg = base.clone();
                cfg.controller = Controller::Static {
                    p_tx_d_w: p,
                    model_index: l,
                };
                cfg.seed = seed;
                configs.push(cfg);
            }
        }
    }
    let summaries = run_all(&configs, catalog, jobs)?;
    let runs = configs
        .iter()
        .zip(&summaries)
        .map(|(c, s)| record("static", c, catalog, s))
        .collect();
    let rows = configs
        .chunks(seeds.len())
        .zip(summaries.chunks(seeds.len()))
        .map(|(cfgs, group)| {
            let Controller::Static {
                p_tx_d_w,
                model_index,
            } = cfgs[0].controller
            else {
                unreachable!("static scan builds static controllers only")
            };
            let name = &catalog.profiles[model_index].model_name;
            let (stable, unstable_runs) =
                stable_subset(&format!("static p={p_tx_d_w} model={name}"), group);
            let (a, a_se) = mean_and_se(&column(&stable, |s| s.avg_a_d_bits));
            let (g, g_se) = mean_and_se(&column(&stable, |s| s.avg_gamma_g));
            let (f, _) = mean_and_se(&column(&stable, |s| s.avg_f_flops));
            StaticScanPoint {
                p_tx_d_w,
                model_index,
                model: name.clone(),
                avg_a_d_bits: a,
                avg_a_d_se: a_se,
                avg_gamma_g: g,
                avg_gamma_g_se: g_se,
                avg_f_flops: f,
                runs: stable.len(),
                unstable_runs,
            }
        })
        .collect();
    Ok(Sweep { rows, runs })
}

/// A-posteriori choice of the static pair: among pairs meeting `gamma_th`,
/// the highest sustained rate; ties go to lower compute, then lower power.
pub fn select_static(points: &[StaticScanPoint], gamma_th: f64) -> Option<&StaticScanPoint> {
    points
        .iter()
        .filter(|p| p.runs > 0 && p.avg_gamma_g >= gamma_th)
        .min_by(|a, b| {
            b.avg_a_d_bits
                .total_cmp(&a.avg_a_d_bits)
                .then(a.avg_f_flops.total_cmp(&b.avg_f_flops))
                .then(a.p_tx_d_w.total_cmp(&b.p_tx_d_w))
                .then(a.model_index.cmp(&b.model_index))
        })
}

/// Static baseline versus the dynamic controller at matched compute.
pub fn baseline_comparison(
    base: &SimConfig,
    catalog: &ModelCatalog,
    gamma_th_grid: &[f64],
    seeds: &[u64],
    jobs: usize,
) -> Result<(Sweep<BaselineRow>, Vec<StaticScanPoint>), SimError> {
    check_grid(gamma_th_grid, "gamma_th")?;
    let scan = static_scan(base, catalog, seeds, jobs)?;
    let mut rows = Vec::with_capacity(gamma_th_grid.len());
    let mut runs = scan.runs.clone();
    for &g in gamma_th_grid {
        let Some(best) = select_static(&scan.rows, g) else {
            rows.push(BaselineRow {
                gamma_th: g,
                static_feasible: false,
                static_p_tx_d_w: None,
                static_model: None,
                static_avg_a_d_bits: None,
                static_avg_gamma_g: None,
                static_avg_f_flops: None,
                dynamic_f_th_flops: None,
                dynamic_avg_a_d_bits: None,
                dynamic_avg_a_d_se: None,
                dynamic_avg_gamma_g: None,
                dynamic_avg_f_flops: None,
            });
            continue;
        };
        let dynamic = sweep_gearr(base, catalog, &[g], &[best.avg_f_flops], seeds, jobs)?;
        runs.extend(dynamic.runs);
        let d = &dynamic.rows[0];
        rows.push(BaselineRow {
            gamma_th: g,
            static_feasible: true,
            static_p_tx_d_w: Some(best.p_tx_d_w),
            static_model: Some(best.model.clone()),
            static_avg_a_d_bits: Some(best.avg_a_d_bits),
            static_avg_gamma_g: Some(best.avg_gamma_g),
            static_avg_f_flops: Some(best.avg_f_flops),
            dynamic_f_th_flops: Some(d.f_th_flops),
            dynamic_avg_a_d_bits: Some(d.avg_a_d_bits),
            dynamic_avg_a_d_se: Some(d.avg_a_d_se),
            dynamic_avg_gamma_g: Some(d.avg_gamma_g),
            dynamic_avg_f_flops: Some(d.avg_f_flops),
        });
    }
    Ok((Sweep { rows, runs }, scan.rows))
}
