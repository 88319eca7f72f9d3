// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Helpers shared by the integration tests: random small plane partitions,
//! the height-integral quadrature, and the invariant checks run both as
//! property tests and from the acceptance run.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use macpp::combinatorics::{height_function, Partition, SkewPlanePartition, SkewSupport};
use macpp::frozen::{single_piece_model, three_tentacle_model};
use macpp::gff::{covariance_matrix, min_eigenvalue, tanh_sinh};
use macpp::limitshape::{grad_at, proportions_at, spectral_arg_bounds, LimitModel};
use macpp::macdonald::WeightSpec;
use macpp::observables::wp;
use macpp::sampler::{Dynamics, Sampler};
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn model(which: usize) -> LimitModel {
    match which {
        0 => LimitModel::corner(),
        1 => three_tentacle_model(2.0).unwrap(),
        _ => single_piece_model().unwrap(),
    }
}

pub fn support() -> impl Strategy<Value = SkewSupport> {
    (1usize..4, 1usize..4, proptest::collection::vec(0u32..3, 0..3)).prop_filter_map("skew shape", |(n, m, mu)| {
        let mu: Vec<u32> = mu.into_iter().map(|p| p.min(m as u32 - 1)).take(n - 1).collect();
        SkewSupport::new(n, m, Partition::new(mu).ok()?).ok()
    })
}

/// Random small plane partitions drawn from short chains, with an α each.
pub fn random_pps(n: usize, seed: u64) -> Vec<(SkewPlanePartition, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (a, b) = (rng.random_range(1..4), rng.random_range(1..4));
            let wall = Arc::new(SkewSupport::rectangle(a, b).unwrap().wall());
            let alpha = [0.5, 1.0, 2.0, 1.5][rng.random_range(0..4)];
            let spec = WeightSpec::with_t(0.6, 0.4, alpha).unwrap();
            let mut s = Sampler::new(SkewPlanePartition::empty(wall), spec, Dynamics::Auto).unwrap();
            for _ in 0..rng.random_range(1..30) {
                s.sweep(&mut rng).unwrap();
            }
            (s.state, alpha)
        })
        .collect()
}

/// t^{kB(x)}℘_k(π^x; t^α, t)/(αk²(log t)²).
pub fn height_integral_closed_form(pp: &SkewPlanePartition, alpha: f64, x: i64, t: f64, k: u32) -> f64 {
    let b = pp.wall().b(x) as f64;
    let lt = t.ln();
    t.powf(k as f64 * b) * wp(k, pp.diagonal(x), t.powf(alpha), t) / (alpha * (k * k) as f64 * lt * lt)
}

/// ∫h(x,y)t^{ky}dy by tanh-sinh between the breakpoints of h, plus a tail
/// truncated where the integrand is below e^{−60}.
pub fn height_integral_quadrature(pp: &SkewPlanePartition, alpha: f64, x: i64, t: f64, k: u32) -> f64 {
    let lam = pp.diagonal(x);
    let b = pp.wall().b(x) as f64;
    let l = lam.len() as f64;
    let lo = b - l - 1.0;
    let hi = b + alpha * lam.part(1) as f64 + 2.0;
    let decay = -(k as f64) * t.ln();
    let f = |y: f64| height_function(pp, alpha, x, y).unwrap() * (-decay * y).exp();
    let mut knots = vec![lo, hi, b, b - l];
    for i in 1..=lam.len() {
        let yi = alpha * lam.part(i) as f64 - i as f64 + 1.0 + b;
        knots.extend([yi, yi - 1.0]);
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let body: f64 = knots.windows(2).map(|w| tanh_sinh(f, w[0], w[1], 1e-14).0).sum();
    body + tanh_sinh(f, hi, hi + 60.0 / decay, 1e-14).0
}

pub fn check_mcmc_interlacing(supp: &SkewSupport, r: f64, t: f64, alpha: f64, seed: u64) -> Result<(), TestCaseError> {
    let wall = Arc::new(supp.wall());
    let spec = WeightSpec::with_t(r, t, alpha).unwrap();
    let mut s = Sampler::new(SkewPlanePartition::empty(wall.clone()), spec, Dynamics::Auto).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        s.sweep(&mut rng).unwrap();
        // full re-validation through the checked constructor
        prop_assert!(SkewPlanePartition::new(wall.clone(), s.state.diagonals().to_vec()).is_ok());
    }
    Ok(())
}

pub fn check_height_slope(which: usize, x: f64, y: f64) -> Result<(), TestCaseError> {
    let (_, dy) = model(which).grad_h(x, y).unwrap();
    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&dy), "∂_yℋ = {dy}");
    Ok(())
}

pub fn check_proportions(which: usize, x: f64, y: f64) -> Result<(), TestCaseError> {
    let m = model(which);
    if let Some(z) = m.zeta(x, y).unwrap() {
        let (a, b, c) = proportions_at(&m, x, z);
        prop_assert!((a + b + c - 1.0).abs() < 1e-10);
        for p in [a, b, c] {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "{a} {b} {c}");
        }
        // ∂_yℋ counts the non-vertical lozenges
        let (_, dy) = grad_at(&m, x, z);
        prop_assert!((dy - (b + c)).abs() < 1e-10);
    }
    Ok(())
}

pub fn check_zeta_injective(which: usize, p1: (f64, f64), p2: (f64, f64)) -> Result<(), TestCaseError> {
    let m = model(which);
    let (Some(z1), Some(z2)) = (m.zeta(p1.0, p1.1).unwrap(), m.zeta(p2.0, p2.1).unwrap()) else {
        return Ok(());
    };
    // y is recovered from (x, ζ)
    prop_assert!((m.log_script_g(p1.0, z1).re + p1.1).abs() < 1e-8);
    if (p1.0 - p2.0).hypot(p1.1 - p2.1) > 1e-6 {
        prop_assert!((z1 - z2).norm() > 1e-12, "{p1:?} and {p2:?} share ζ = {z1}");
    }
    Ok(())
}

pub fn check_spectral_bounds(which: usize, zeta: Complex64) -> Result<(), TestCaseError> {
    let (a, b) = spectral_arg_bounds(&model(which), zeta);
    prop_assert!(a > 0.0 && a < b && b < PI, "−arg Q = {a}, π − arg ζ = {b}");
    Ok(())
}

pub fn check_covariance_psd(points: &[(f64, u32)], frak_t: f64) -> Result<(), TestCaseError> {
    let c = covariance_matrix(&LimitModel::corner(), points, frak_t).unwrap();
    let scale = c.iter().enumerate().map(|(i, r)| r[i].abs()).fold(0.0, f64::max);
    prop_assert!(min_eigenvalue(&c) > -1e-9 * scale.max(1.0));
    Ok(())
}
