// SPDX-License-Identifier: Apache-2.0 OR MIT
//! End-to-end acceptance run: each criterion is executed in turn and reported
//! on one PASS/FAIL line; the test fails if any criterion does.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use macpp::backwall::{discretize, singular_points};
use macpp::combinatorics::{enumerate_on_wall, height_exponential_integral, DiscreteBackWall, Partition, SkewPlanePartition, SkewSupport};
use macpp::exact_oracle::exact_expectations;
use macpp::frozen::{frozen_boundary, grid_boundary_mismatch, single_piece_model, tentacles, three_tentacle_model};
use macpp::gff::{contour_kernel, prelimit_covariance_convergence, prelimit_moment_convergence, pullback_as_kernel, SweepSpec};
use macpp::limitshape::{limit_moment, LimitModel};
use macpp::macdonald::{log_measure_weight, log_measure_weight_via_coefficients, WeightSpec};
use macpp::observables::{covariance, moment_k1, moment_multi, wp};
use macpp::sampler::{empirical_cumulants, empirical_height_profile, run_chains, ChainConfig, Dynamics};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn small_walls() -> Vec<(&'static str, DiscreteBackWall)> {
    vec![
        ("1^1", SkewSupport::rectangle(1, 1).unwrap().wall()),
        ("2^2", SkewSupport::rectangle(2, 2).unwrap().wall()),
        ("3^1/(1)", SkewSupport::new(3, 1, Partition::new(vec![1]).unwrap()).unwrap().wall()),
    ]
}

const ALPHA_T: [(f64, f64); 3] = [(1.0, 0.3), (2.0, 0.4), (0.5, 0.5)];

fn c1_measure_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (_, wall) in small_walls() {
        let wall = Arc::new(wall);
        for cap in 1..=3 {
            for pp in enumerate_on_wall(&wall, cap, 1 << 20).map_err(|e| e.to_string())? {
                for (alpha, t) in ALPHA_T {
                    let spec = WeightSpec::with_t(0.3, t, alpha).unwrap();
                    let a = log_measure_weight(&pp, &spec).map_err(|e| e.to_string())?;
                    let b = log_measure_weight_via_coefficients(&pp, &spec, 1.0);
                    worst = worst.max(((a - b).exp() - 1.0).abs());
                    n += 1;
                }
            }
        }
    }
    ensure(worst < 1e-9, || format!("max |ratio − 1| = {worst:e}"))?;
    Ok(format!("{n} weight pairs, max |ratio − 1| = {worst:.1e}"))
}

fn c2_exact_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for (name, wall) in small_walls() {
        for (alpha, t) in ALPHA_T {
            let spec = WeightSpec::with_t(0.005, t, alpha).unwrap();
            let xs: Vec<i64> = wall.interior().collect();
            // one or two factors with k_i ≤ 2, so Σk ≤ 4
            let mut cases: Vec<(Vec<i64>, Vec<u32>)> = Vec::new();
            for &x in &xs {
                for k in 1..=2 {
                    cases.push((vec![x], vec![k]));
                }
                for &x2 in xs.iter().filter(|&&x2| x2 >= x) {
                    for (k1, k2) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                        cases.push((vec![x, x2], vec![k1, k2]));
                    }
                }
            }
            let (q, tt) = (spec.q(), spec.t());
            let cs = cases.clone();
            let f = move |pp: &SkewPlanePartition| -> Vec<f64> {
                cs.iter().map(|(xs, ks)| xs.iter().zip(ks).map(|(&x, &k)| wp(k, pp.diagonal(x), q, tt)).product()).collect()
            };
            let exact = exact_expectations(&wall, &spec, f, 10, 1 << 22).map_err(|e| e.to_string())?;
            for ((xs, ks), e) in cases.iter().zip(&exact) {
                let c = moment_multi(&wall, &spec, xs, ks).map_err(|e| format!("{name} α={alpha} {xs:?} {ks:?}: {e}"))?.value;
                let rel = (c - e.value).abs() / e.value.abs();
                ensure(rel < 1e-7, || format!("{name} α={alpha} {xs:?} {ks:?}: {c} vs {}", e.value))?;
                worst = worst.max(rel);
                n += 1;
                if ks == &[1] {
                    let c = moment_k1(&wall, &spec, xs[0]).map_err(|e| e.to_string())?;
                    let rel = (c - e.value).abs() / e.value.abs();
                    ensure(rel < 1e-7, || format!("{name} moment_k1 x={}: {c} vs {}", xs[0], e.value))?;
                    worst = worst.max(rel);
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} moments, max relative error {worst:.1e}"))
}

fn c3_height_integral() -> Outcome {
    let mut worst: f64 = 0.0;
    for (pp, alpha) in random_pps(50, 3) {
        for x in pp.wall().interior() {
            for k in 1..=3 {
                let t = 0.4;
                let want = height_integral_closed_form(&pp, alpha, x, t, k);
                let scale = want.abs().max(1.0);
                let quad = height_integral_quadrature(&pp, alpha, x, t, k);
                let exact = height_exponential_integral(&pp, alpha, x, t, k).map_err(|e| e.to_string())?;
                worst = worst.max((quad - want).abs() / scale).max((exact - want).abs() / scale);
            }
        }
    }
    ensure(worst < 1e-8, || format!("worst {worst:e}"))?;
    Ok(format!("50 plane partitions, k = 1..3, worst {worst:.1e}"))
}

fn c4_corner_closed_forms() -> Outcome {
    let m = LimitModel::corner();
    let lower = |x: f64| -2.0 * (1.0 + (-x / 2.0).exp()).ln();
    // lowest liquid point of 20 columns, located by scan and bisection
    let mut worst_b: f64 = 0.0;
    for i in 0..20 {
        let x = -3.0 + 0.3 * i as f64 + 0.01;
        let col = m.column(x).map_err(|e| e.to_string())?;
        let y = col.intervals.first().ok_or_else(|| format!("no liquid interval above x = {x}"))?.0;
        worst_b = worst_b.max((y - lower(x)).abs());
    }
    ensure(worst_b < 1e-9, || format!("lower boundary error {worst_b:e}"))?;
    let z = m.zeta(0.0, 0.0).map_err(|e| e.to_string())?.ok_or("(0,0) not liquid")?;
    let dz = (z - Complex64::from_polar(1.0, PI / 3.0)).norm();
    ensure(dz < 1e-10, || format!("ζ(0,0) = {z}"))?;
    let mut worst_m: f64 = 0.0;
    for x in [0.2f64, 0.5, 1.0, 1.7, 3.0] {
        let e = (-x).exp();
        let m1 = limit_moment(&m, x, 1.0).map_err(|e| e.to_string())?;
        let m2 = limit_moment(&m, x, 2.0).map_err(|e| e.to_string())?;
        worst_m = worst_m.max((m1 - (1.0 + e)).abs()).max((m2 - (1.0 + 4.0 * e + e * e)).abs());
    }
    ensure(worst_m < 1e-8, || format!("limit moment error {worst_m:e}"))?;
    Ok(format!("boundary {worst_b:.1e} at 20 x, |ζ(0,0) − e^(iπ/3)| = {dz:.1e}, moments {worst_m:.1e}"))
}

fn c5_convergence() -> Outcome {
    let m = LimitModel::corner();
    let sweep = SweepSpec { frak_t: 1.0, alpha: 2.0, half_width: None, epsilons: vec![0.2, 0.1, 0.05] };
    let mut orders = Vec::new();
    for x in [0.598, -0.402] {
        for k in [1, 2] {
            let t = prelimit_moment_convergence(&m, &sweep, x, k).map_err(|e| e.to_string())?;
            orders.extend(t.observed_orders);
        }
    }
    let t = prelimit_covariance_convergence(&m, &sweep, 0.5, 1, 1.0, 1).map_err(|e| e.to_string())?;
    orders.extend(t.observed_orders);
    ensure(orders.iter().all(|o| (0.6..1.6).contains(o)), || format!("orders {orders:.2?}"))?;
    Ok(format!("observed orders {orders:.2?}"))
}

fn c6_contour_vs_pullback() -> Outcome {
    let corner = LimitModel::corner();
    let fig9 = three_tentacle_model(2.0).unwrap();
    let points: [(&LimitModel, f64, f64, f64, f64); 6] = [
        (&corner, 0.3, 1.0, 0.8, 1.0),
        (&corner, 0.5, 1.0, 0.5, 1.0),
        (&corner, 0.5, 1.0, 1.5, 2.0),
        (&corner, -0.5, 1.0, 0.7, 1.0),
        (&fig9, 0.5, 1.0, 1.0, 1.0),
        (&fig9, -1.0, 1.0, 1.0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (m, x1, k1, x2, k2) in points {
        let j = contour_kernel(m, x1, k1, x2, k2).map_err(|e| e.to_string())?.value;
        let p = pullback_as_kernel(m, x1, k1, x2, k2).map_err(|e| e.to_string())?;
        ensure((j - p).abs() < 1e-3, || format!("({x1},{k1}),({x2},{k2}): {j} vs {p}"))?;
        worst = worst.max((j - p).abs());
    }
    Ok(format!("6 points on 2 walls, max |Δ| = {worst:.1e}"))
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

fn c7_figures() -> Outcome {
    let fig9 = three_tentacle_model(2.0).unwrap();
    let fig10 = single_piece_model().unwrap();
    let tent = tentacles(&fig9);
    let sing = singular_points(&fig9.bw, &fig9.s).map_err(|e| e.to_string())?;
    ensure(tent.len() == 3 && sing.len() == 3, || format!("{} tentacles, {} singular points", tent.len(), sing.len()))?;
    let dx = tent.iter().zip(&sing).map(|(t, s)| (t.x_limit - s.x).abs()).fold(0.0, f64::max);
    ensure(dx < 1e-9, || format!("tentacle offset {dx:e}"))?;
    let n10 = tentacles(&fig10).len();
    ensure(n10 == 0, || format!("{n10} tentacles on the single-piece wall"))?;
    let mut worst = Vec::new();
    for (m, xs, ys) in [(&fig9, grid(-4.0, 4.0, 0.1), grid(-4.0, 6.0, 0.1)), (&fig10, grid(-2.9, 2.9, 0.1), grid(-3.0, 6.0, 0.1))] {
        let segs = frozen_boundary(m, 2000).map_err(|e| e.to_string())?;
        let (n, w) = grid_boundary_mismatch(m, &segs, &xs, &ys);
        ensure(n > 20 && w <= 2.0, || format!("{n} transitions, worst {w} steps"))?;
        worst.push(w);
    }
    Ok(format!("3 and 0 tentacles, x offset {dx:.1e}, grid mismatch {worst:.2?} steps"))
}

fn c8_mcmc() -> Outcome {
    let mut notes = Vec::new();
    // exact vs empirical means and variances on 2^2
    let wall22 = SkewSupport::rectangle(2, 2).unwrap().wall();
    for (t, alpha) in [(0.3, 1.0), (0.4, 2.0)] {
        let spec = WeightSpec::with_t(0.3, t, alpha).unwrap();
        let (q, tt) = (spec.q(), spec.t());
        let cfg = ChainConfig { seed: 11, burn_in: 100, steps: 20_100, thin: 1, wall: wall22.clone(), spec: spec.clone(), dynamics: Dynamics::Auto };
        let run = run_chains(&cfg, 4, move |pp: &SkewPlanePartition| vec![wp(1, pp.diagonal(0), q, tt), pp.volume() as f64])
            .map_err(|e| e.to_string())?;
        let exact = exact_expectations(
            &wall22,
            &spec,
            |pp| {
                let (w, v) = (wp(1, pp.diagonal(0), q, tt), pp.volume() as f64);
                vec![w, v, w * w, v * v]
            },
            14,
            1 << 22,
        )
        .map_err(|e| e.to_string())?;
        let vars = empirical_cumulants(&run.pooled(), &[vec![0, 0], vec![1, 1]]).map_err(|e| e.to_string())?;
        for j in 0..2 {
            let z = (run.stats[j].mean - exact[j].value) / run.stats[j].se;
            ensure(z.abs() < 4.0, || format!("2^2 α={alpha} mean {j}: z = {z:.2}"))?;
            let v_exact = exact[j + 2].value - exact[j].value.powi(2);
            let zv = (vars[j].value - v_exact) / vars[j].jackknife_se;
            ensure(zv.abs() < 4.0, || format!("2^2 α={alpha} variance {j}: z = {zv:.2}"))?;
        }
    }
    notes.push("2^2 moments within 4 SE".to_string());

    // single-cell law, χ² at 99%
    for (t, alpha, thin) in [(0.5, 1.0, 1), (0.4, 2.0, 100)] {
        let r = 0.5;
        let spec = WeightSpec::with_t(r, t, alpha).unwrap();
        let (q, tt) = (spec.q(), spec.t());
        let mut law = vec![1.0];
        for k in 1..200 {
            let prev: f64 = law[k - 1];
            law.push(prev * (1.0 - tt * q.powi(k as i32 - 1)) / (1.0 - q.powi(k as i32)) * r);
        }
        let z: f64 = law.iter().sum();
        law.iter_mut().for_each(|p| *p /= z);
        let cfg = ChainConfig {
            seed: 5,
            burn_in: 100,
            steps: 100 + thin * 2500,
            thin,
            wall: SkewSupport::rectangle(1, 1).unwrap().wall(),
            spec,
            dynamics: Dynamics::Auto,
        };
        let run = run_chains(&cfg, 4, |pp: &SkewPlanePartition| vec![pp.volume() as f64]).map_err(|e| e.to_string())?;
        let draws: Vec<usize> = run.pooled().iter().map(|d| d[0] as usize).collect();
        let n = draws.len() as f64;
        let mut bins = 0;
        while law[bins..].iter().sum::<f64>() * n >= 10.0 {
            bins += 1;
        }
        let mut counts = vec![0.0; bins + 1];
        for d in draws {
            counts[d.min(bins)] += 1.0;
        }
        let mut expected: Vec<f64> = law[..bins].iter().map(|p| p * n).collect();
        expected.push(law[bins..].iter().sum::<f64>() * n);
        let chi2: f64 = counts.iter().zip(&expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
        let crit = ChiSquared::new(bins as f64).unwrap().inverse_cdf(0.99);
        ensure(chi2 < crit, || format!("single cell α={alpha}: χ² = {chi2:.1} ≥ {crit:.1}"))?;
        notes.push(format!("χ²(α={alpha}) = {chi2:.1} < {crit:.1}"));
    }

    // order-3 cumulant of ε^{-1}℘_1 at ε = 0.05
    let m = LimitModel::corner();
    let eps = 0.05;
    let d = discretize(&m.bw, &m.s, eps, Some(1.0)).map_err(|e| e.to_string())?;
    let spec = WeightSpec::new(m.s.weights(), (-eps).exp(), 1.0, 1.0).map_err(|e| e.to_string())?;
    let xp = d.prelimit_coordinate(&m.bw, 0.5);
    let (q, tt) = (spec.q(), spec.t());
    let cfg = ChainConfig { seed: 21, burn_in: 500, steps: 10_500, thin: 2, wall: d.wall.clone(), spec: spec.clone(), dynamics: Dynamics::Auto };
    let run = run_chains(&cfg, 4, move |pp: &SkewPlanePartition| vec![wp(1, pp.diagonal(xp), q, tt) / eps]).map_err(|e| e.to_string())?;
    let cums = empirical_cumulants(&run.pooled(), &[vec![0, 0], vec![0, 0, 0]]).map_err(|e| e.to_string())?;
    let var_exact = covariance(&d.wall, &spec, xp, 1, xp, 1).map_err(|e| e.to_string())? / (eps * eps);
    let z2 = (cums[0].value - var_exact) / cums[0].jackknife_se;
    ensure(z2.abs() < 4.0, || format!("κ2 = {} ± {} vs {var_exact}", cums[0].value, cums[0].jackknife_se))?;
    let z3 = cums[1].value / cums[1].jackknife_se;
    ensure(z3.abs() < 4.0, || format!("κ3 = {} ± {}", cums[1].value, cums[1].jackknife_se))?;
    notes.push(format!("κ3/SE = {z3:.2}"));

    // rescaled height profile at ε = 0.1
    let eps = 0.1;
    let d = discretize(&m.bw, &m.s, eps, Some(3.0)).map_err(|e| e.to_string())?;
    let spec = WeightSpec::new(m.s.weights(), (-eps).exp(), 1.0, 1.0).map_err(|e| e.to_string())?;
    let xp = d.prelimit_coordinate(&m.bw, 0.5);
    let cfg = ChainConfig { seed: 31, burn_in: 3000, steps: 20_000, thin: 10, wall: d.wall.clone(), spec, dynamics: Dynamics::Auto };
    let ys = grid(-2.0, 4.0, 0.2);
    let prof = empirical_height_profile(&cfg, 4, xp, &ys, eps).map_err(|e| e.to_string())?;
    ensure(prof.converged, || "height-profile chains did not converge".into())?;
    let mut sup: f64 = 0.0;
    for (y, v) in ys.iter().zip(&prof.mean) {
        sup = sup.max((v - m.h(0.5, *y).map_err(|e| e.to_string())?).abs());
    }
    ensure(sup < 0.08, || format!("height sup-distance {sup}"))?;
    notes.push(format!("height sup {sup:.3}"));
    Ok(notes.join(", "))
}

fn run_property<S: Strategy>(cases: u32, strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

fn c9_properties() -> Outcome {
    run_property(64, (support(), 0.1f64..0.8, 0.0f64..0.9, prop::sample::select(vec![0.5, 1.0, 2.0]), any::<u64>()), |(s, r, t, a, seed)| {
        check_mcmc_interlacing(&s, r, t, a, seed)
    })?;
    run_property(256, (0usize..3, -2.5f64..2.5, -3.0f64..5.0), |(w, x, y)| check_height_slope(w, x, y))?;
    run_property(256, (0usize..3, -2.5f64..2.5, -3.0f64..5.0), |(w, x, y)| check_proportions(w, x, y))?;
    run_property(256, (0usize..3, (-2.5f64..2.5, -3.0f64..5.0), (-2.5f64..2.5, -3.0f64..5.0)), |(w, p1, p2)| {
        check_zeta_injective(w, p1, p2)
    })?;
    run_property(256, (0usize..3, -5.0f64..5.0, 1e-3f64..5.0), |(w, re, im)| check_spectral_bounds(w, Complex64::new(re, im)))?;
    run_property(8, (proptest::collection::vec((0.05f64..2.0, 1u32..3), 2..4), 0.5f64..2.0), |(pts, t)| {
        check_covariance_psd(&pts, t)
    })?;
    Ok("6 invariant suites".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 9] = [
        ("1 two measures agree", c1_measure_equivalence, Duration::from_secs(10)),
        ("2 exact moments vs enumeration", c2_exact_moments, Duration::from_secs(60)),
        ("3 height integral identity", c3_height_integral, Duration::MAX),
        ("4 corner closed forms", c4_corner_closed_forms, Duration::MAX),
        ("5 convergence sweeps", c5_convergence, Duration::MAX),
        ("6 contour vs pullback covariance", c6_contour_vs_pullback, Duration::from_secs(300)),
        ("7 figure walls", c7_figures, Duration::MAX),
        ("8 chain statistics", c8_mcmc, Duration::from_secs(600)),
        ("9 invariant properties", c9_properties, Duration::MAX),
    ];
    let mut failed = Vec::new();
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= budget {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {name}: PASS ({elapsed:.1?}) {msg}"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({elapsed:.1?}) {msg}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
