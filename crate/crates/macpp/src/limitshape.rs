// SPDX-License-Identifier: Apache-2.0 OR MIT
//! The limit function 𝒢_x = P_x/Q, companion-equation roots, the liquid
//! region, the limit height function ℋ and the limiting moments.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backwall::{rho_greater, rho_less, LimitBackWall, SMultiset};
use crate::error::{Error, Result};
use crate::observables::nested_radii;

/// Principal Log(1 − v z) on the closed upper half plane, with the real axis
/// reached from above (arg −π on the negative part); conjugated below.
pub(crate) fn log1m(v: f64, z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return log1m(v, z.conj()).conj();
    }
    let w = Complex64::new(1.0, 0.0) - v * z;
    if w.im == 0.0 || (w.im.abs() < 1e-300) {
        let arg = if w.re < 0.0 { -PI } else { 0.0 };
        return Complex64::new(w.re.abs().ln(), arg);
    }
    w.ln()
}

/// Log(−z) with the same conventions.
pub(crate) fn log_neg(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return log_neg(z.conj()).conj();
    }
    if z.im == 0.0 {
        let arg = if z.re > 0.0 { -PI } else { 0.0 };
        return Complex64::new(z.re.abs().ln(), arg);
    }
    (-z).ln()
}

/// A limiting back wall with its multiset, plus the branch data of Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitModel {
    pub bw: LimitBackWall,
    pub s: SMultiset,
    /// Factors (1 − v z)^{e/p} of Q with integer e ≠ 0.
    pub q_factors: Vec<(f64, i64)>,
    /// Q ∋ (−z)^{m0/p} when V_0 = −∞.
    pub monomial: i64,
    pub log_c: f64,
    /// Finite nonzero branch points of Q (sorted), each with the index of its kink.
    pub junctions: Vec<(f64, usize)>,
    pub zero_in_j: bool,
    pub infinity_in_j: bool,
}

impl LimitModel {
    pub fn new(bw: LimitBackWall, s: SMultiset) -> Result<Self> {
        bw.check_shape()?;
        let p = s.p() as i64;
        let d = s.d();
        let ind = |slope: f64, j: usize| s.slope_covers(slope, j) as i64;
        let mut q_factors = Vec::new();
        let mut junctions = Vec::new();
        for (l, v) in bw.finite_kinks() {
            let (lo, hi) = (bw.slope_left_of_kink(l), bw.slope_right_of_kink(l));
            for j in 1..=d {
                let e = s.multiplicities[j - 1] as i64 * (ind(hi, j) - ind(lo, j));
                if e != 0 {
                    let vv = (-v).exp() * s.sigmas[j - 1];
                    q_factors.push((vv, e));
                    junctions.push((1.0 / vv, l));
                }
            }
        }
        let n = bw.n();
        let mut monomial = 0;
        let mut log_c;
        if bw.kinks[0].is_finite() {
            log_c = bw.b(bw.kinks[0]);
        } else {
            log_c = bw.intercept(1);
            for j in 1..=d {
                let e = s.multiplicities[j - 1] as i64 * ind(bw.slopes[0], j);
                monomial += e;
                log_c += e as f64 / p as f64 * s.sigmas[j - 1].ln();
            }
        }
        junctions.sort_by(|a, b| a.0.total_cmp(&b.0));
        let infinity_in_j = !bw.kinks[n].is_finite() && bw.slopes[n - 1] < 1.0;
        Ok(LimitModel { bw, s, q_factors, monomial, log_c, junctions, zero_in_j: monomial > 0, infinity_in_j })
    }

    /// ℬ(x) = min(x, 0) with 𝒮 = {1}.
    pub fn corner() -> Self {
        Self::new(LimitBackWall::corner(), SMultiset::from_weights(&[1.0]).unwrap()).unwrap()
    }

    pub fn p(&self) -> usize {
        self.s.p()
    }

    /// J_x = {σ^{-1} e^x}.
    pub fn j_x(&self, x: f64) -> Vec<f64> {
        self.s.sigmas.iter().map(|sg| x.exp() / sg).collect()
    }

    /// Log Q(z) (principal branches, factorwise).
    pub fn log_q(&self, z: Complex64) -> Complex64 {
        let p = self.p() as f64;
        let mut s = Complex64::new(self.log_c, 0.0);
        if self.monomial != 0 {
            s += self.monomial as f64 / p * log_neg(z);
        }
        for &(v, e) in &self.q_factors {
            s += e as f64 / p * log1m(v, z);
        }
        s
    }

    /// Log P_x(z).
    pub fn log_p(&self, x: f64, z: Complex64) -> Complex64 {
        let p = self.p() as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for (sg, &m) in self.s.sigmas.iter().zip(&self.s.multiplicities) {
            s += m as f64 / p * log1m((-x).exp() * sg, z);
        }
        s
    }

    /// Log 𝒢_x(z) = Log P_x(z) − Log Q(z).
    pub fn log_script_g(&self, x: f64, z: Complex64) -> Complex64 {
        self.log_p(x, z) - self.log_q(z)
    }

    /// d/dz Log 𝒢_x(z).
    fn dlog_script_g(&self, x: f64, z: Complex64) -> Complex64 {
        let p = self.p() as f64;
        let mut s = Complex64::new(0.0, 0.0);
        for (sg, &m) in self.s.sigmas.iter().zip(&self.s.multiplicities) {
            s += m as f64 / p / (z - x.exp() / sg);
        }
        s - self.sigma_fn(z)
    }

    /// Σ(ζ) = d/dζ Log Q(ζ).
    pub fn sigma_fn(&self, z: Complex64) -> Complex64 {
        let p = self.p() as f64;
        let mut s = Complex64::new(0.0, 0.0);
        if self.monomial != 0 {
            s += self.monomial as f64 / p / z;
        }
        for &(v, e) in &self.q_factors {
            s += e as f64 / p / (z - 1.0 / v);
        }
        s
    }

    fn on_branch_point(&self, x: f64, z: Complex64) -> bool {
        let near = |c: f64| (z - c).norm() <= 1e-14 * c.abs().max(1.0);
        (self.zero_in_j && z.norm() < 1e-300)
            || self.junctions.iter().any(|&(j, _)| near(j))
            || self.j_x(x).iter().any(|&j| near(j))
    }

    /// 𝒢_x(0) (possibly +∞ or 0).
    pub fn script_g_at_zero(&self, x: f64) -> f64 {
        let _ = x;
        if self.monomial > 0 {
            f64::INFINITY
        } else {
            (-self.log_c).exp()
        }
    }

    /// Q's integer exponent data in polynomial form: the companion polynomial
    /// P_x^p·D − e^{−py}·C^p·(−z)^{m0}·N with Q^p = C^p (−z)^{m0} N / D.
    pub fn companion_polynomial(&self, x: f64, y: f64) -> Vec<f64> {
        let p = self.p() as i32;
        let mut left = vec![1.0];
        for (sg, &m) in self.s.sigmas.iter().zip(&self.s.multiplicities) {
            for _ in 0..m {
                left = poly_mul(&left, &[1.0, -(-x).exp() * sg]);
            }
        }
        let mut right = vec![1.0];
        for &(v, e) in &self.q_factors {
            for _ in 0..e.abs() {
                if e < 0 {
                    left = poly_mul(&left, &[1.0, -v]);
                } else {
                    right = poly_mul(&right, &[1.0, -v]);
                }
            }
        }
        for _ in 0..self.monomial {
            right = poly_mul(&right, &[0.0, -1.0]);
        }
        let scale = (-(p as f64) * y + p as f64 * self.log_c).exp();
        let n = left.len().max(right.len());
        (0..n)
            .map(|i| left.get(i).copied().unwrap_or(0.0) - scale * right.get(i).copied().unwrap_or(0.0))
            .collect()
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// All roots of a real polynomial (ascending coefficients) from the
/// eigenvalues of its companion matrix.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    while c.len() > 1 && c.last().unwrap().abs() <= 1e-300 * scale {
        c.pop();
    }
    let mut zeros = 0;
    while c.len() > 1 && c[0] == 0.0 {
        c.remove(0);
        zeros += 1;
    }
    let deg = c.len() - 1;
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    if deg == 0 {
        return roots;
    }
    let lead = c[deg];
    let mut m = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        m[(i, deg - 1)] = -c[i] / lead;
    }
    roots.extend(m.complex_eigenvalues().iter().copied());
    roots
}

/// Roots of 𝒢_x(ζ) = e^{−y} on the principal branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompanionRoots {
    pub nonreal: Vec<Complex64>,
    pub real: Vec<f64>,
}

const ROOT_TOL: f64 = 1e-9;
const IM_TOL: f64 = 1e-10;

impl LimitModel {
    fn polish(&self, x: f64, y: f64, mut z: Complex64) -> Complex64 {
        for _ in 0..40 {
            if self.on_branch_point(x, z) {
                break;
            }
            let f = self.log_script_g(x, z) + y;
            let df = self.dlog_script_g(x, z);
            let step = f / df;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            let next = z - step;
            // Stay in the half plane the seed came from.
            if z.im != 0.0 && next.im.signum() != z.im.signum() {
                z = Complex64::new(next.re, z.im * 0.5);
                continue;
            }
            z = next;
            if step.norm() < 1e-15 * z.norm().max(1e-300) {
                break;
            }
        }
        z
    }

    fn residual(&self, x: f64, y: f64, z: Complex64) -> f64 {
        (self.log_script_g(x, z) + y).norm()
    }

    pub fn companion_roots(&self, x: f64, y: f64) -> Result<CompanionRoots> {
        let seeds = polynomial_roots(&self.companion_polynomial(x, y));
        let mut nonreal: Vec<Complex64> = Vec::new();
        let mut real: Vec<f64> = Vec::new();
        for seed in seeds {
            let seed = if seed.im.abs() < IM_TOL * seed.norm().max(1.0) { Complex64::new(seed.re, 0.0) } else { seed };
            if self.on_branch_point(x, seed) {
                continue;
            }
            let z = self.polish(x, y, seed);
            if self.on_branch_point(x, z) || self.residual(x, y, z) > ROOT_TOL * (1.0 + y.abs()) {
                continue;
            }
            if z.im.abs() > IM_TOL * z.norm().max(1.0) {
                if !nonreal.iter().any(|w| (w - z).norm() < 1e-8 * z.norm().max(1.0)) {
                    nonreal.push(z);
                }
            } else if !real.iter().any(|w| (w - z.re).abs() < 1e-10 * z.re.abs().max(1.0)) {
                real.push(z.re);
            }
        }
        real.sort_by(f64::total_cmp);
        // A large real root can come out of the eigensolver as a split pair
        // whose polished copy keeps a relative imaginary part just above
        // IM_TOL; it duplicates an entry of `real`.
        nonreal.retain(|z| !real.iter().any(|&w| (z - w).norm() < 1e-8 * z.norm().max(1.0)));
        let upper: Vec<&Complex64> = nonreal.iter().filter(|z| z.im > 0.0).collect();
        if upper.len() > 1 {
            return Err(Error::RootFinding(format!("{} candidate roots in the upper half plane at ({x}, {y})", upper.len())));
        }
        Ok(CompanionRoots { nonreal, real })
    }

    /// ζ(x, y) ∈ ℍ, or `None` outside the liquid region.
    pub fn zeta(&self, x: f64, y: f64) -> Result<Option<Complex64>> {
        let roots = self.companion_roots(x, y)?;
        Ok(roots.nonreal.into_iter().find(|z| z.im > 0.0))
    }

    pub fn zeta_map(&self, x: f64, y: f64) -> Result<Option<LiquidPoint>> {
        Ok(self.zeta(x, y)?.map(|zeta| LiquidPoint { x, y, zeta }))
    }

    pub fn is_liquid(&self, x: f64, y: f64) -> bool {
        matches!(self.zeta(x, y), Ok(Some(_)))
    }

    /// 𝒢_x(z) via P_x/Q.
    pub fn script_g(&self, x: f64, z: Complex64) -> Result<Complex64> {
        if self.on_branch_point(x, z) {
            return Err(Error::RootFinding(format!("{z} is a branch point of 𝒢_{x}")));
        }
        Ok(self.log_script_g(x, z).exp())
    }

    /// 𝒢_x(z) = e^{−ℬ(x)} 𝒢_{<x}(z) 𝒢_{>x}(z) from the piecewise products.
    pub fn script_g_product(&self, x: f64, z: Complex64) -> Complex64 {
        (self.log_g_less_greater(x, z, 1.0) - self.bw.b(x)).exp()
    }

    /// κ·Log[𝒢_{<x}(z)𝒢_{>x}(z)], factorwise principal branches.
    pub fn log_g_less_greater(&self, x: f64, z: Complex64, kappa: f64) -> Complex64 {
        let bw = &self.bw;
        let p = self.p() as f64;
        let zi = z.inv();
        let mut s = Complex64::new(0.0, 0.0);
        for (j, (sg, &m)) in self.s.sigmas.iter().zip(&self.s.multiplicities).enumerate() {
            let w = m as f64 / p;
            for l in 1..=bw.n() {
                let (a, b) = (bw.kinks[l - 1], bw.kinks[l]);
                let slope = bw.slopes[l - 1];
                let covers = self.s.slope_covers(slope, j + 1);
                if a < x && covers {
                    let num = log1m(b.min(x).exp() / sg, zi);
                    let den = if a.is_finite() { log1m(a.exp() / sg, zi) } else { Complex64::new(0.0, 0.0) };
                    s += w * (num - den);
                }
                if b > x && !covers {
                    let num = log1m((-(a.max(x))).exp() * sg, z);
                    let den = if b.is_finite() { log1m((-b).exp() * sg, z) } else { Complex64::new(0.0, 0.0) };
                    s += w * (num - den);
                }
            }
        }
        kappa * s
    }
}

/// A point of the liquid region with its complex coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiquidPoint {
    pub x: f64,
    pub y: f64,
    pub zeta: Complex64,
}

/// Local lozenge proportions (p_vert, p_left, p_right) at a liquid point,
/// from z = e^{−x}ζ.
pub fn local_proportions(model: &LimitModel, x: f64, y: f64) -> Result<(f64, f64, f64)> {
    let zeta = model.zeta(x, y)?.ok_or_else(|| Error::Other(format!("({x}, {y}) is not in the liquid region")))?;
    Ok(proportions_at(model, x, zeta))
}

pub fn proportions_at(model: &LimitModel, x: f64, zeta: Complex64) -> (f64, f64, f64) {
    let z = (-x).exp() * zeta;
    let p = model.p() as f64;
    let p_vert = z.arg() / PI;
    let p_left = model.s.values.iter().map(|&v| (1.0 - v * z).arg().abs()).sum::<f64>() / (p * PI);
    (p_vert, p_left, 1.0 - p_vert - p_left)
}

/// ∇ℋ at a liquid point: ((1/pπ)Σ arg(1 − σe^{−x}ζ), 1 − arg ζ/π).
pub fn grad_at(model: &LimitModel, x: f64, zeta: Complex64) -> (f64, f64) {
    let p = model.p() as f64;
    let dx = model.s.values.iter().map(|&v| log1m(v * (-x).exp(), zeta).im).sum::<f64>() / (p * PI);
    (dx, 1.0 - zeta.arg() / PI)
}

/// Liquid y-intervals of the column above x, found by scanning and bisection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub x: f64,
    pub y_floor: f64,
    pub y_top: f64,
    pub intervals: Vec<(f64, f64)>,
    /// Gradient in the frozen stretch above each interval.
    pub frozen_above: Vec<(f64, f64)>,
}

const SCAN_STEP: f64 = 0.02;

impl LimitModel {
    /// Scanning window [y_floor, y_top] for the column above x.
    fn window(&self, x: f64) -> (f64, f64) {
        let bx = self.bw.b(x);
        let base = if self.bw.kinks[0].is_finite() { bx.min(self.bw.b(self.bw.kinks[0])) } else { bx };
        (base - 12.0, bx + 30.0)
    }

    pub fn column(&self, x: f64) -> Result<Column> {
        let (lo, hi) = self.bw.domain();
        if !(x > lo && x < hi) {
            return Err(Error::Other(format!("x = {x} outside the domain ({lo}, {hi})")));
        }
        let (y_floor, y_top) = self.window(x);
        let n = ((y_top - y_floor) / SCAN_STEP).ceil() as usize;
        let ys: Vec<f64> = (0..=n).map(|i| y_floor + (y_top - y_floor) * i as f64 / n as f64).collect();
        let flags: Vec<bool> = crate::par::map(&ys, |&y| self.is_liquid(x, y));
        if flags[0] {
            return Err(Error::Other(format!("liquid region reaches the scan floor {y_floor} at x = {x}")));
        }
        let refine = |mut a: f64, mut b: f64, liquid_at_b: bool| -> f64 {
            for _ in 0..60 {
                let m = 0.5 * (a + b);
                if self.is_liquid(x, m) == liquid_at_b {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        };
        let mut intervals = Vec::new();
        let mut start = None;
        for i in 1..ys.len() {
            match (flags[i - 1], flags[i]) {
                (false, true) => start = Some(refine(ys[i - 1], ys[i], true)),
                (true, false) => intervals.push((start.take().unwrap(), refine(ys[i], ys[i - 1], true))),
                _ => {}
            }
        }
        if let Some(a) = start {
            intervals.push((a, y_top));
        }
        let mut frozen_above = Vec::new();
        for &(a, b) in &intervals {
            let probe = b - 1e-7 * (b - a).max(1e-3);
            let z = self.zeta(x, probe)?.map(|z| z.re).unwrap_or(1.0);
            frozen_above.push(frozen_gradient(self, x, z));
        }
        Ok(Column { x, y_floor, y_top, intervals, frozen_above })
    }
}

/// Gradient in a frozen region whose continuation ζ̃ is the real point `z0`.
fn frozen_gradient(model: &LimitModel, x: f64, z0: f64) -> (f64, f64) {
    let p = model.p() as f64;
    let neg = model.s.values.iter().filter(|&&v| 1.0 - v * (-x).exp() * z0 < 0.0).count() as f64;
    (-neg / p, if z0 < 0.0 { 0.0 } else { 1.0 })
}

impl Column {
    /// Index of the liquid interval containing y, or of the last interval below y.
    fn locate(&self, y: f64) -> (Option<usize>, Option<usize>) {
        let inside = self.intervals.iter().position(|&(a, b)| y > a && y < b);
        let below = self.intervals.iter().rposition(|&(_, b)| b <= y);
        (inside, below)
    }
}

/// Adaptive Simpson on [a, b].
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// ∫_a^b g(y) dy with the cosine substitution that tames square-root edges.
fn integrate_edges<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, tol: f64) -> f64 {
    let h = |th: f64| {
        let y = a + (b - a) * (1.0 - th.cos()) / 2.0;
        g(y) * (b - a) * th.sin() / 2.0
    };
    // Split [0, π] once so Simpson's first estimate sees the interior.
    simpson(&h, 0.0, PI / 2.0, tol / 2.0) + simpson(&h, PI / 2.0, PI, tol / 2.0)
}

impl LimitModel {
    /// ∂_yℋ inside a liquid interval.
    fn dh_dy_liquid(&self, x: f64, y: f64) -> f64 {
        match self.zeta(x, y) {
            Ok(Some(z)) => 1.0 - z.arg() / PI,
            // Tangency with the boundary: use the neighbouring frozen value.
            _ => f64::NAN,
        }
    }

    /// ∇ℋ(x, y) = (∂_xℋ, ∂_yℋ); outside the liquid region the gradient is
    /// continued from the nearest liquid boundary below (zero under the slice).
    pub fn grad_h(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if let Some(z) = self.zeta(x, y)? {
            return Ok(grad_at(self, x, z));
        }
        let col = self.column(x)?;
        Ok(col_grad(&col, y))
    }

    /// ℋ(x, y) for several y in one column sweep (ys need not be sorted).
    pub fn h_column(&self, x: f64, ys: &[f64]) -> Result<Vec<f64>> {
        let col = self.column(x)?;
        ys.iter().map(|&y| Ok(self.h_in_column(&col, y))).collect()
    }

    pub fn h(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.h_column(x, &[y])?[0])
    }

    fn h_in_column(&self, col: &Column, y: f64) -> f64 {
        let x = col.x;
        let mut total = 0.0;
        for (i, &(a, b)) in col.intervals.iter().enumerate() {
            if y <= a {
                break;
            }
            let hi = y.min(b);
            total += integrate_edges(|u| nan_to(self.dh_dy_liquid(x, u), 0.5), a, hi, 1e-9);
            if y > b {
                let next = col.intervals.get(i + 1).map(|iv| iv.0).unwrap_or(f64::INFINITY);
                total += col.frozen_above[i].1 * (y.min(next) - b);
            }
        }
        total
    }

    /// ∫ ℋ(x,y) e^{−κy} dy = (1/κ)∫ ∂_yℋ e^{−κy} dy, frozen stretches in closed form.
    pub fn h_exponential_moment(&self, x: f64, kappa: f64) -> Result<f64> {
        let col = self.column(x)?;
        let mut total = 0.0;
        let e = |y: f64| if y.is_infinite() { 0.0 } else { (-kappa * y).exp() };
        for (i, &(a, b)) in col.intervals.iter().enumerate() {
            total += integrate_edges(|u| nan_to(self.dh_dy_liquid(x, u), 0.5) * (-kappa * u).exp(), a, b, 1e-12);
            let next = col.intervals.get(i + 1).map(|iv| iv.0).unwrap_or(f64::INFINITY);
            total += col.frozen_above[i].1 * (e(b) - e(next)) / kappa;
        }
        Ok(total / kappa)
    }
}

fn nan_to(v: f64, d: f64) -> f64 {
    if v.is_nan() {
        d
    } else {
        v
    }
}

fn col_grad(col: &Column, y: f64) -> (f64, f64) {
    match col.locate(y) {
        (Some(_), _) => (f64::NAN, f64::NAN),
        (None, Some(i)) => col.frozen_above[i],
        (None, None) => (0.0, 0.0),
    }
}

/// (1/2πi)∮ [𝒢_{<x}𝒢_{>x}]^κ dz/z on a circle between ρ_<(x) and ρ_>(x).
pub fn limit_moment(model: &LimitModel, x: f64, kappa: f64) -> Result<f64> {
    let (lo, hi) = (rho_less(&model.bw, &model.s, x), rho_greater(&model.bw, &model.s, x));
    if lo >= hi * (1.0 - 1e-12) {
        return Err(Error::Contour(format!("x = {x} is a singular point (ρ_< = ρ_> = {lo})")));
    }
    let r = nested_radii(&[lo], &[hi], 0.5)?.0[0];
    let integrate = |n: usize| -> f64 {
        (0..n)
            .map(|j| {
                let z = Complex64::from_polar(r, std::f64::consts::TAU * j as f64 / n as f64);
                model.log_g_less_greater(x, z, kappa).exp().re
            })
            .sum::<f64>()
            / n as f64
    };
    let mut n = 64;
    let mut prev = integrate(n);
    while n < (1 << 18) {
        n *= 2;
        let cur = integrate(n);
        if (cur - prev).abs() < 1e-13 * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Contour("limit moment quadrature did not converge".into()))
}

/// Check of 0 < −arg Q(ζ) < π − arg ζ at ζ ∈ ℍ; returns (−arg Q, π − arg ζ).
pub fn spectral_arg_bounds(model: &LimitModel, zeta: Complex64) -> (f64, f64) {
    (-model.log_q(zeta).im, PI - zeta.arg())
}
