//! End-to-end checks of the published operating points. Each test prints one
//! `criterion N: PASS|FAIL` line on stderr, uncaptured, before asserting.

use std::io::Write;
use std::time::{Duration, Instant};

use pnpqkd_core::experiments::{records_dataset, Experiment};
use pnpqkd_core::numerics::deviation_xi;
use pnpqkd_core::optimizer::{grid_oracle_2d, maximize, OptimizationProblem};
use pnpqkd_core::rate::{finite_correction_delta, ClassProbabilities, ErrorBudget};
use pnpqkd_core::source::PhotonBounds;
use pnpqkd_core::{KeyRateModel, PhysicalParams, ProtocolPoint, Scenario};

fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} | {detail}\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn within(x: f64, centre: f64, tol: f64) -> bool {
    (x - centre).abs() <= tol
}

fn within_factor(x: f64, centre: f64, factor: f64) -> bool {
    x >= centre / factor && x <= centre * factor
}

fn percent(r: f64) -> f64 {
    100.0 * r
}

#[test]
fn criterion_1_no_decoy_asymptotic_reach() {
    let start = Instant::now();
    let lmax = Experiment::default()
        .find_lmax(Scenario::NoDecoyInfinite, f64::INFINITY)
        .unwrap();
    let took = start.elapsed();
    let pass = within(lmax, 40.0, 5.0) && took < Duration::from_secs(60);
    report(
        1,
        pass,
        format!("L_max = {lmax:.1} km (40 +/- 5), {took:.1?}"),
    );
}

#[test]
fn criterion_2_decoy_asymptotic_reach() {
    let start = Instant::now();
    let lmax = Experiment::default()
        .find_lmax(Scenario::DecoyInfinite, f64::INFINITY)
        .unwrap();
    let took = start.elapsed();
    let pass = within(lmax, 123.0, 8.0) && took < Duration::from_secs(300);
    report(
        2,
        pass,
        format!("L_max = {lmax:.1} km (123 +/- 8), {took:.1?}"),
    );
}

#[test]
fn criterion_3_and_4_pulse_thresholds() {
    let exp = Experiment::default();
    let start = Instant::now();
    let no_decoy = exp.find_na_threshold(Scenario::NoDecoyFinite).unwrap();
    let took = start.elapsed();
    let pass = (3e8..=3e9).contains(&no_decoy) && took < Duration::from_secs(600);
    let line3 = format!("N_A threshold = {no_decoy:.3e} (in [3e8, 3e9]), {took:.1?}");

    let start = Instant::now();
    let decoy = exp.find_na_threshold(Scenario::DecoyFinite).unwrap();
    let took = start.elapsed();
    let pass4 = (1e8..=1e9).contains(&decoy) && decoy < no_decoy && took < Duration::from_secs(600);
    let line4 =
        format!("N_A threshold = {decoy:.3e} (in [1e8, 1e9], below {no_decoy:.3e}), {took:.1?}");
    let _ = std::io::stderr().write_all(
        format!(
            "criterion 3: {} | {line3}\n",
            if pass { "PASS" } else { "FAIL" }
        )
        .as_bytes(),
    );
    report(4, pass4, line4);
    assert!(pass, "criterion 3 failed: {line3}");
}

#[test]
fn criterion_5_finite_no_decoy_points() {
    let exp = Experiment::default();
    let lmax = exp.find_lmax(Scenario::NoDecoyFinite, 5e10).unwrap();
    let at20 = exp
        .optimize(Scenario::NoDecoyFinite, 20.0, 5e10, None)
        .unwrap();
    let r20 = at20.breakdown.sampling_ratio(at20.best_point.sampled_bits);

    // same final rate, larger block
    let reach = exp
        .distance_at_rate(Scenario::NoDecoyFinite, 1e14, at20.best_rate)
        .unwrap();
    let far = exp
        .optimize(Scenario::NoDecoyFinite, reach, 1e14, None)
        .unwrap();
    let r_far = far.breakdown.sampling_ratio(far.best_point.sampled_bits);

    let pass = within(lmax, 20.0, 3.0)
        && within_factor(at20.best_rate, 2e-6, 2.0)
        && within(percent(r20), 18.0, 5.0)
        && within(reach, 33.0, 4.0)
        && within(percent(r_far), 1.5, 1.0);
    report(
        5,
        pass,
        format!(
            "5e10: L_max = {lmax:.1} km (20 +/- 3), R(20 km) = {:.3e} (2e-6 x/ 2), r = {:.1}% (18 +/- 5); \
             1e14: L = {reach:.1} km at R = {:.3e} (33 +/- 4), r = {:.2}% (1.5 +/- 1)",
            at20.best_rate,
            percent(r20),
            at20.best_rate,
            percent(r_far)
        ),
    );
}

#[test]
fn criterion_6_finite_decoy_points() {
    let exp = Experiment::default();
    let at20 = exp
        .optimize(Scenario::DecoyFinite, 20.0, 5e10, None)
        .unwrap();
    let r20 = at20.breakdown.sampling_ratio(at20.best_point.sampled_bits);
    let lmax = exp.find_lmax(Scenario::DecoyFinite, 5e10).unwrap();
    let reach = exp
        .distance_at_rate(Scenario::DecoyFinite, 5e10, 4e-6)
        .unwrap();
    let far = exp
        .optimize(Scenario::DecoyFinite, reach, 5e10, None)
        .unwrap();
    let r_far = far.breakdown.sampling_ratio(far.best_point.sampled_bits);

    let pass = within_factor(at20.best_rate, 4e-4, 2.0)
        && within(percent(r20), 3.0, 2.0)
        && within(lmax, 60.0, 6.0)
        && within(reach, 60.0, 6.0)
        && within(percent(r_far), 16.0, 5.0);
    report(
        6,
        pass,
        format!(
            "R(20 km) = {:.3e} (4e-4 x/ 2), r = {:.1}% (3 +/- 2); L_max = {lmax:.1} km, \
             R = 4e-6 at {reach:.1} km (60 +/- 6), r there = {:.1}% (16 +/- 5)",
            at20.best_rate,
            percent(r20),
            percent(r_far)
        ),
    );
}

#[test]
fn criterion_7_finite_decoy_gap_at_60_km() {
    let exp = Experiment::default();
    let inf = exp
        .optimize(Scenario::DecoyInfinite, 60.0, f64::INFINITY, None)
        .unwrap();
    let fin = exp
        .optimize(Scenario::DecoyFinite, 60.0, 5e10, None)
        .unwrap();
    let rate_ratio = inf.best_rate / fin.best_rate;
    let e1u_ratio = fin.breakdown.e1u_upper / inf.breakdown.e1u_upper;
    let pass = fin.best_rate > 0.0
        && within_factor(rate_ratio, 10.0, 2.0)
        && within_factor(e1u_ratio, 5.0, 2.0);
    report(
        7,
        pass,
        format!(
            "R_inf = {:.3e}, R_fin = {:.3e}, ratio = {rate_ratio:.3} (10 x/ 2); \
             E1u finite/infinite = {:.4}/{:.4} = {e1u_ratio:.3} (5 x/ 2)",
            inf.best_rate, fin.best_rate, fin.breakdown.e1u_upper, inf.breakdown.e1u_upper
        ),
    );
}

fn binomial_pmf(trials: u64, n: u64, p: f64) -> f64 {
    let mut c = 1.0;
    for k in 0..n {
        c *= (trials - k) as f64 / (k + 1) as f64;
    }
    c * p.powi(n as i32) * (1.0 - p).powf((trials - n) as f64)
}

fn envelopes_dominate() -> bool {
    [(50.0, 0.2, 0.3), (400.0, 0.1, 0.8), (2500.0, 0.05, 0.5)]
        .iter()
        .all(|&(m_a, delta, load)| {
            let lp = load / ((1.0 + delta) * m_a);
            let b = PhotonBounds::from_parts(m_a, delta, lp).unwrap();
            let lo = ((1.0 - delta) * m_a).ceil() as u64;
            let hi = ((1.0 + delta) * m_a).floor() as u64;
            (lo..=hi).all(|k| {
                (0..=3).all(|n| {
                    let p = binomial_pmf(k, n, lp);
                    p <= b.upper(n).value() * (1.0 + 1e-11)
                        && p >= b.lower(n).value() * (1.0 - 1e-11)
                })
            })
        })
}

fn finite_point(
    inf_pt: &ProtocolPoint,
    params: &PhysicalParams,
    pulses: f64,
    sampled: f64,
) -> ProtocolPoint {
    let decoys = inf_pt.scenario.uses_decoys();
    let share = params.eps_free() / if decoys { 6.0 } else { 4.0 };
    ProtocolPoint {
        scenario: inf_pt.scenario.with_finite(true),
        pulses,
        sampled_bits: sampled,
        classes: if decoys {
            ClassProbabilities::RANDOM
        } else {
            ClassProbabilities::SIGNAL_ONLY
        },
        budget: ErrorBudget {
            privacy_amplification: share,
            error_correction: params.eps_ec,
            smoothing: share,
            untagged_signal: share,
            untagged_decoy: if decoys { share } else { 0.0 },
            untagged_vacuum: if decoys { share } else { 0.0 },
            qber: share,
        },
        ..*inf_pt
    }
}

#[test]
fn criterion_8_property_suite() {
    let start = Instant::now();
    let model = KeyRateModel::default();
    let mut failures = Vec::new();

    if !envelopes_dominate() {
        failures.push("envelope dominance");
    }

    let mut limit_ok = true;
    let mut dominance_ok = true;
    for scenario in [Scenario::NoDecoyInfinite, Scenario::DecoyInfinite] {
        for l in [0.0, 20.0] {
            let best =
                maximize(&OptimizationProblem::new(model, scenario, l, f64::INFINITY)).unwrap();
            let inf = best.best_rate;
            let limit = model
                .evaluate(&finite_point(
                    &best.best_point,
                    &model.params,
                    f64::INFINITY,
                    f64::INFINITY,
                ))
                .unwrap()
                .rate;
            limit_ok &= ((limit - inf) / inf).abs() < 1e-4;
            for n in [1e10, 1e12, 1e14] {
                let sifted = n * 0.5 * best.breakdown.gain / 2.0;
                if let Ok(b) = model.evaluate(&finite_point(
                    &best.best_point,
                    &model.params,
                    n,
                    0.01 * sifted,
                )) {
                    dominance_ok &= b.rate < inf;
                }
            }
        }
    }
    if !limit_ok {
        failures.push("limit recovery");
    }
    if !dominance_ok {
        failures.push("finite < infinite");
    }

    let oracle_ok = [10.0, 20.0, 30.0].iter().all(|&l| {
        let problem = OptimizationProblem::new(model, Scenario::NoDecoyInfinite, l, f64::INFINITY);
        let found = maximize(&problem).unwrap().best_rate;
        let grid = grid_oracle_2d(&problem, 200).unwrap().best_rate;
        grid > 0.0 && (found - grid).abs() <= 0.02 * grid
    });
    if !oracle_ok {
        failures.push("optimizer vs grid");
    }

    let exp = Experiment {
        seed: 11,
        ..Experiment::default()
    };
    let csv = || {
        let recs = exp
            .scan_distance(Scenario::DecoyFinite, 1e12, &[0.0, 30.0])
            .unwrap();
        records_dataset("repro", &recs, &exp.model, exp.threshold).to_csv()
    };
    if csv() != csv() {
        failures.push("seeded CSV reproduction");
    }

    let monotone = [1e-12, 1e-9, 1e-6].iter().all(|&eps| {
        let ns: Vec<f64> = (0..40).map(|k| 10f64.powf(3.0 + 0.3 * k as f64)).collect();
        let d: Vec<f64> = ns
            .iter()
            .map(|&n| finite_correction_delta(n, eps, eps, eps).unwrap())
            .collect();
        let x: Vec<f64> = ns.iter().map(|&n| deviation_xi(eps, n).unwrap()).collect();
        d.windows(2).all(|w| w[1] < w[0]) && x.windows(2).all(|w| w[1] < w[0])
    });
    if !monotone {
        failures.push("Delta/xi monotonicity");
    }

    let took = start.elapsed();
    if took >= Duration::from_secs(120) {
        failures.push("runtime");
    }
    let detail = if failures.is_empty() {
        format!("all properties hold, {took:.1?}")
    } else {
        format!("violated: {}, {took:.1?}", failures.join(", "))
    };
    report(8, failures.is_empty(), detail);
}

#[test]
fn criterion_9_error_budget_insensitivity() {
    let exp = Experiment::default();
    let best = exp
        .optimize(Scenario::DecoyFinite, 20.0, 5e10, None)
        .unwrap();
    let base = best.best_rate;
    type Component = fn(&mut ErrorBudget) -> &mut f64;
    let setters: [(&str, Component); 5] = [
        ("eps_PA", |b| &mut b.privacy_amplification),
        ("eps_bar", |b| &mut b.smoothing),
        ("eps_u_S", |b| &mut b.untagged_signal),
        ("eps_u_D", |b| &mut b.untagged_decoy),
        ("eps_u_V", |b| &mut b.untagged_vacuum),
    ];
    let mut worst = (0.0f64, String::new());
    for (name, field) in setters {
        for factor in [10.0, 0.1] {
            let mut point = best.best_point;
            *field(&mut point.budget) *= factor;
            let model = KeyRateModel {
                params: PhysicalParams {
                    eps_total: point.budget.total(),
                    ..exp.model.params
                },
                ..exp.model
            };
            let change = model
                .evaluate(&point)
                .map_or(f64::INFINITY, |b| ((b.rate - base) / base).abs());
            if change >= worst.0 {
                worst = (change, format!("{name} x{factor}"));
            }
        }
    }
    report(
        9,
        worst.0 < 0.05,
        format!(
            "R(20 km) = {base:.3e}; largest change {:.2}% from {} (< 5%)",
            100.0 * worst.0,
            worst.1
        ),
    );
}
