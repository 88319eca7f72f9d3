// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Limiting covariances of the height moments: the nested double contour
//! integral, the log-kernel pullback over liquid slices, and the prelimit
//! ε-sweep that connects them to the finite measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backwall::{discretize, rho_greater, rho_less};
use crate::error::{Error, Result};
use crate::limitshape::{limit_moment, LimitModel};
use crate::macdonald::WeightSpec;
use crate::observables::{circle, covariance, moment_multi, nested_radii};
use crate::par;

/// J = (1/(2πi)²)∮∮ [𝒢<𝒢>]^{κ1}(z) [𝒢<𝒢>]^{κ2}(w) / (z − w)² dz dw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourKernel {
    pub value: f64,
    pub error_estimate: f64,
    pub nodes: usize,
    /// (z-radius, w-radius), z inside w.
    pub radii: (f64, f64),
}

const KERNEL_TOL: f64 = 1e-11;
const KERNEL_MAX_NODES: usize = 1 << 13;

/// The double contour kernel for x1 ≤ x2 (arguments are swapped otherwise;
/// the kernel is symmetric).
pub fn contour_kernel(model: &LimitModel, x1: f64, kappa1: f64, x2: f64, kappa2: f64) -> Result<ContourKernel> {
    let ((x1, k1), (x2, k2)) = if x1 <= x2 { ((x1, kappa1), (x2, kappa2)) } else { ((x2, kappa2), (x1, kappa1)) };
    let (bw, s) = (&model.bw, &model.s);
    let lo = [rho_less(bw, s, x1), rho_less(bw, s, x2)];
    let hi = [rho_greater(bw, s, x1), rho_greater(bw, s, x2)];
    let (r, margin) = nested_radii(&lo, &hi, 1.0)?;
    if margin <= 1e-8 {
        return Err(Error::Contour(format!("contours for x = {x1}, {x2} cannot be separated (margin {margin:e})")));
    }
    kernel_on_radii(model, x1, k1, x2, k2, (r[0], r[1]))
}

/// The tensor trapezoid evaluation of the kernel on the given circles,
/// doubling the node count until successive values agree.
pub fn kernel_on_radii(model: &LimitModel, x1: f64, k1: f64, x2: f64, k2: f64, radii: (f64, f64)) -> Result<ContourKernel> {
    let eval = |n: usize| -> f64 {
        let zs = circle(radii.0, n);
        let ws = circle(radii.1, n);
        // (1/2πi)∮ f dz = mean of f(z)·z over the nodes.
        let fz: Vec<Complex64> = par::map(&zs, |&z| model.log_g_less_greater(x1, z, k1).exp() * z);
        let fw: Vec<Complex64> = par::map(&ws, |&w| model.log_g_less_greater(x2, w, k2).exp() * w);
        let rows = par::map_range(n, |j| {
            let w = ws[j];
            zs.iter().zip(&fz).map(|(&z, &f)| f / ((z - w) * (z - w))).sum::<Complex64>() * fw[j]
        });
        rows.iter().sum::<Complex64>().re / (n * n) as f64
    };
    let mut n = 64;
    let mut prev = eval(n);
    while n < KERNEL_MAX_NODES {
        n *= 2;
        let cur = eval(n);
        let err = (cur - prev).abs();
        if err < KERNEL_TOL * cur.abs().max(1.0) {
            return Ok(ContourKernel { value: cur, error_estimate: err, nodes: n, radii });
        }
        prev = cur;
    }
    Err(Error::Contour(format!("double contour did not converge with {KERNEL_MAX_NODES} nodes")))
}

/// The covariance exactly as the double contour formula is written:
/// k1·k2·J with exponents k𝔱.
pub fn limit_covariance_contour(model: &LimitModel, x1: f64, k1: u32, x2: f64, k2: u32, frak_t: f64) -> Result<f64> {
    let j = contour_kernel(model, x1, k1 as f64 * frak_t, x2, k2 as f64 * frak_t)?;
    Ok(k1 as f64 * k2 as f64 * j.value)
}

/// The limit of Cov(℘_{k1}, ℘_{k2})/ε² along the discretized family:
/// α𝔱²·k1·k2·J. The literal formula omits the α𝔱² normalization of the
/// ε-scaled moments; the prelimit sweep fixes it.
pub fn limit_covariance_scaled(model: &LimitModel, x1: f64, k1: u32, x2: f64, k2: u32, frak_t: f64, alpha: f64) -> Result<f64> {
    Ok(alpha * frak_t * frak_t * limit_covariance_contour(model, x1, k1, x2, k2, frak_t)?)
}

/// Nodes and weights of the tanh-sinh rule on [a, b] at level `level`
/// (step 2^{−level}); nodes that round onto an endpoint are dropped.
pub fn tanh_sinh_nodes(a: f64, b: f64, level: u32) -> Vec<(f64, f64)> {
    const T_MAX: f64 = 3.2;
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let n = (T_MAX / h).ceil() as i64;
    let mut out = Vec::with_capacity(2 * n as usize + 1);
    for k in -n..=n {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let ch = u.cosh();
        let w = h * 0.5 * PI * t.cosh() / (ch * ch) * half;
        // distance to the nearer endpoint, computed without cancellation
        let gap = 2.0 * half / (1.0 + (2.0 * u.abs()).exp());
        let x = if t >= 0.0 { b - gap } else { a + gap };
        if gap > 0.0 && x > a && x < b && w > 0.0 {
            out.push((x, w));
        }
    }
    out
}

/// ∫_a^b f by tanh-sinh with level doubling; tolerates integrable
/// endpoint singularities.
pub fn tanh_sinh<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let rule = |level: u32| -> f64 {
        let nodes = tanh_sinh_nodes(a, b, level);
        nodes.iter().map(|&(x, w)| w * f(x)).sum()
    };
    let mut prev = rule(3);
    let mut err = f64::INFINITY;
    for level in 4..=9 {
        let cur = rule(level);
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol * cur.abs().max(1.0) {
            break;
        }
    }
    (prev, err)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PullbackValue {
    pub value: f64,
    pub error_estimate: f64,
}

/// −(1/2π)∫_{Y_{x2}}∫_{Y_{x1}} e^{−κ1 y1 − κ2 y2} log|(ζ1 − ζ2)/(ζ1 − ζ̄2)| dy1 dy2
/// with ζi = ζ(xi, yi) over the liquid slices. For x1 = x2 the inner
/// integral is split at the diagonal.
pub fn gff_pullback_covariance(model: &LimitModel, x1: f64, kappa1: f64, x2: f64, kappa2: f64) -> Result<PullbackValue> {
    gff_pullback_covariance_tol(model, x1, kappa1, x2, kappa2, 1e-7)
}

pub fn gff_pullback_covariance_tol(model: &LimitModel, x1: f64, kappa1: f64, x2: f64, kappa2: f64, tol: f64) -> Result<PullbackValue> {
    let slice1 = model.column(x1)?.intervals;
    let slice2 = model.column(x2)?.intervals;
    let same = x1 == x2;
    let zeta = |x: f64, y: f64| model.zeta(x, y).ok().flatten();
    let kernel = |z1: Complex64, y2: f64| -> f64 {
        match zeta(x2, y2) {
            Some(z2) => {
                let ratio = (z1 - z2).norm() / (z1 - z2.conj()).norm();
                // nodes that round onto the diagonal carry negligible weight
                if ratio > 0.0 {
                    (-kappa2 * y2).exp() * ratio.ln()
                } else {
                    0.0
                }
            }
            None => 0.0,
        }
    };
    let inner = |y1: f64| -> (f64, f64) {
        let Some(z1) = zeta(x1, y1) else { return (0.0, 0.0) };
        let mut total = 0.0;
        let mut err = 0.0;
        for &(a, b) in &slice2 {
            let pieces: Vec<(f64, f64)> = if same && y1 > a && y1 < b { vec![(a, y1), (y1, b)] } else { vec![(a, b)] };
            for (lo, hi) in pieces {
                let (v, e) = tanh_sinh(|y2| kernel(z1, y2), lo, hi, tol);
                total += v;
                err += e;
            }
        }
        ((-kappa1 * y1).exp() * total, (-kappa1 * y1).exp() * err)
    };
    let mut value = 0.0;
    let mut err = 0.0;
    for &(a, b) in &slice1 {
        // The outer rule runs at fixed levels so the inner integrals can be
        // spread over the pool.
        let level_value = |level: u32| -> (f64, f64) {
            let nodes = tanh_sinh_nodes(a, b, level);
            let vals = par::map(&nodes, |&(y, w)| {
                let (v, e) = inner(y);
                (w * v, w * e)
            });
            vals.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1.abs()))
        };
        let mut prev = level_value(3);
        let mut seg_err = f64::INFINITY;
        for level in 4..=8 {
            let cur = level_value(level);
            let step = (cur.0 - prev.0).abs();
            seg_err = step + cur.1;
            prev = cur;
            if step <= tol * cur.0.abs().max(1.0) {
                break;
            }
        }
        value += prev.0;
        err += seg_err;
    }
    Ok(PullbackValue { value: -value / (2.0 * PI), error_estimate: err / (2.0 * PI) })
}

/// The pullback value rescaled to the contour kernel J:
/// J = (κ1κ2/π)·e^{κ1ℬ(x1) + κ2ℬ(x2)}·P.
pub fn pullback_as_kernel(model: &LimitModel, x1: f64, kappa1: f64, x2: f64, kappa2: f64) -> Result<f64> {
    let p = gff_pullback_covariance(model, x1, kappa1, x2, kappa2)?.value;
    let b = kappa1 * model.bw.b(x1) + kappa2 * model.bw.b(x2);
    Ok(kappa1 * kappa2 / PI * b.exp() * p)
}

/// One row of a prelimit ε-sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// Prelimit values at the discretized coordinates.
    pub prelimit: f64,
    pub limit: f64,
    pub abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<SweepRow>,
    /// log2 of successive error ratios (≈ 1 for an O(ε) approach when ε halves).
    pub observed_orders: Vec<f64>,
}

impl ConvergenceTable {
    fn from_rows(rows: Vec<SweepRow>) -> Self {
        let observed_orders = rows
            .windows(2)
            .map(|w| (w[0].abs_error / w[1].abs_error).ln() / (w[0].epsilon / w[1].epsilon).ln())
            .collect();
        ConvergenceTable { rows, observed_orders }
    }
}

/// Parameters of an ε-sweep: the limit model, (𝔱, α) and the truncation
/// half-width for infinite wall ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub frak_t: f64,
    pub alpha: f64,
    pub half_width: Option<f64>,
    pub epsilons: Vec<f64>,
}

fn prelimit_setup(model: &LimitModel, sweep: &SweepSpec, eps: f64) -> Result<(crate::backwall::Discretization, WeightSpec)> {
    let d = discretize(&model.bw, &model.s, eps, sweep.half_width)?;
    let spec = WeightSpec::new(model.s.weights(), (-eps).exp(), sweep.frak_t, sweep.alpha)?;
    Ok((d, spec))
}

/// E℘_k at the discretized coordinate of x against the limit moment.
pub fn prelimit_moment_convergence(model: &LimitModel, sweep: &SweepSpec, x: f64, k: u32) -> Result<ConvergenceTable> {
    let limit = limit_moment(model, x, k as f64 * sweep.frak_t)?;
    let mut rows = Vec::new();
    for &eps in &sweep.epsilons {
        let (d, spec) = prelimit_setup(model, sweep, eps)?;
        let xp = d.prelimit_coordinate(&model.bw, x);
        let prelimit = moment_multi(&d.wall, &spec, &[xp], &[k])?.value;
        rows.push(SweepRow { epsilon: eps, prelimit, limit, abs_error: (prelimit - limit).abs() });
    }
    Ok(ConvergenceTable::from_rows(rows))
}

/// Cov(℘_{k1}(π^{x1}), ℘_{k2}(π^{x2}))/ε² against α𝔱²·k1k2·J.
pub fn prelimit_covariance_convergence(model: &LimitModel, sweep: &SweepSpec, x1: f64, k1: u32, x2: f64, k2: u32) -> Result<ConvergenceTable> {
    let limit = limit_covariance_scaled(model, x1, k1, x2, k2, sweep.frak_t, sweep.alpha)?;
    let mut rows = Vec::new();
    for &eps in &sweep.epsilons {
        let (d, spec) = prelimit_setup(model, sweep, eps)?;
        let (p1, p2) = (d.prelimit_coordinate(&model.bw, x1), d.prelimit_coordinate(&model.bw, x2));
        let prelimit = covariance(&d.wall, &spec, p1, k1, p2, k2)? / (eps * eps);
        rows.push(SweepRow { epsilon: eps, prelimit, limit, abs_error: (prelimit - limit).abs() });
    }
    Ok(ConvergenceTable::from_rows(rows))
}

/// Covariance matrix of (x_i, k_i) pairs from the contour kernel.
pub fn covariance_matrix(model: &LimitModel, points: &[(f64, u32)], frak_t: f64) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let (xi, ki) = points[i];
            let (xj, kj) = points[j];
            let v = limit_covariance_contour(model, xi, ki, xj, kj, frak_t)?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    mat.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
