// SPDX-License-Identifier: Apache-2.0 OR MIT
//! ℘_k observables and their exact contour-integral moments on finite walls.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{DiscreteBackWall, Partition};
use crate::error::{Error, Result};
use crate::macdonald::{log_a_e, WeightSpec};
use crate::par;

/// ℘_k(λ; q, t) = (1 − t^{−k}) Σ_i q^{kλ_i} t^{k(1−i)} + t^{−kℓ(λ)}.
pub fn wp(k: u32, lam: &Partition, q: f64, t: f64) -> f64 {
    let k = k as i32;
    let mut s = 0.0;
    for (i, &part) in lam.parts().iter().enumerate() {
        s += q.powi(k * part as i32) * t.powi(-k * i as i32);
    }
    (1.0 - t.powi(-k)) * s + t.powi(-k * lam.len() as i32)
}

/// The functions G_{<x} and G_{>x} of a finite wall, stored by their poles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GFunctions {
    pub t: f64,
    /// Values a_e for e < x with B′(e) = 1 (poles at 1/a_e).
    pub a_less: Vec<f64>,
    /// Values a_e for e > x with B′(e) = 0 (poles at 1/(t a_e)).
    pub a_greater: Vec<f64>,
}

impl GFunctions {
    pub fn new(wall: &DiscreteBackWall, spec: &WeightSpec, x: i64) -> Result<Self> {
        Self::with_xi(wall, spec, x, 1.0)
    }

    pub fn with_xi(wall: &DiscreteBackWall, spec: &WeightSpec, x: i64, xi: f64) -> Result<Self> {
        if x <= wall.v_min || x >= wall.v_max() {
            return Err(Error::Domain { x, lo: wall.v_min, hi: wall.v_max() });
        }
        let split = (x - wall.v_min) as usize;
        let mut la = log_a_e(wall, spec, xi, 0);
        let (mut a_less, mut a_greater) = (Vec::new(), Vec::new());
        for (k, &bit) in wall.bits.iter().enumerate() {
            if k > 0 {
                la += spec.r_v(wall.v_min + k as i64).ln();
            }
            match (k < split, bit) {
                (true, true) => a_less.push(la.exp()),
                (false, false) => a_greater.push(la.exp()),
                _ => {}
            }
        }
        Ok(GFunctions { t: spec.t(), a_less, a_greater })
    }

    /// Largest pole of G_{<x} (0 when there is none).
    pub fn rho_less(&self) -> f64 {
        self.a_less.iter().map(|a| 1.0 / a).fold(0.0, f64::max)
    }

    /// Smallest pole of G_{>x} (∞ when there is none).
    pub fn rho_greater(&self) -> f64 {
        self.a_greater.iter().map(|a| 1.0 / (self.t * a)).fold(f64::INFINITY, f64::min)
    }

    pub fn poles_less(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.a_less.iter().map(|a| 1.0 / a).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn poles_greater(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.a_greater.iter().map(|a| 1.0 / (self.t * a)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn g_less(&self, z: Complex64) -> Complex64 {
        let t = self.t;
        self.a_less.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| {
            let w = (a * z).inv();
            acc * (1.0 - w / t) / (1.0 - w)
        })
    }

    pub fn g_greater(&self, z: Complex64) -> Complex64 {
        let t = self.t;
        self.a_greater.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| {
            let w = a * z;
            acc * (1.0 - w) / (1.0 - t * w)
        })
    }

    /// G_{<x}(z) G_{>x}(z).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.g_less(z) * self.g_greater(z)
    }
}

/// Circle radii for variables listed in integration order: variable m sits
/// in (lo[m], hi[m]) and radius m+1 exceeds radius m / t. Radii maximize the
/// common log-margin; returns (radii, margin).
pub fn nested_radii(lo: &[f64], hi: &[f64], t: f64) -> Result<(Vec<f64>, f64)> {
    let n = lo.len();
    let tau = -t.ln();
    let span = n as f64 * (tau + 2.0) + 4.0;
    let finite_hi = hi.iter().copied().filter(|h| h.is_finite()).map(f64::ln).fold(f64::INFINITY, f64::min);
    let finite_lo = lo.iter().copied().filter(|l| *l > 0.0).map(f64::ln).fold(f64::NEG_INFINITY, f64::max);
    let (fl, fh) = match (finite_lo.is_finite(), finite_hi.is_finite()) {
        (true, true) => (finite_lo, finite_hi),
        (true, false) => (finite_lo, finite_lo + span),
        (false, true) => (finite_hi - span, finite_hi),
        (false, false) => (-span / 2.0, span / 2.0),
    };
    let l: Vec<f64> = lo.iter().map(|&x| if x > 0.0 { x.ln() } else { fl.min(fh - span) }).collect();
    let u: Vec<f64> = hi.iter().map(|&x| if x.is_finite() { x.ln() } else { fh.max(fl + span) }).collect();
    let forward = |s: f64| -> (Vec<f64>, bool) {
        let mut r = Vec::with_capacity(n);
        let mut ok = true;
        for m in 0..n {
            let mut v = l[m] + s;
            if m > 0 {
                v = v.max(r[m - 1] + tau + s);
            }
            ok &= v <= u[m] - s;
            r.push(v);
        }
        (r, ok)
    };
    if !forward(0.0).1 {
        let m = (0..n).find(|&m| !forward(0.0).0[m].le(&u[m])).unwrap_or(0);
        return Err(Error::Contour(format!(
            "nesting infeasible at variable {m}: the annulus is too thin for the t-separation (the k𝔱-separation condition fails)"
        )));
    }
    let (mut a, mut b) = (0.0, span);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        if forward(mid).1 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let s = a;
    let (fw, _) = forward(s);
    let mut bw = vec![0.0; n];
    for m in (0..n).rev() {
        let mut v = u[m] - s;
        if m + 1 < n {
            v = v.min(bw[m + 1] - tau - s);
        }
        bw[m] = v;
    }
    Ok(((0..n).map(|m| (0.5 * (fw[m] + bw[m])).exp()).collect(), s))
}

pub fn circle(radius: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(radius, std::f64::consts::TAU * j as f64 / n as f64)).collect()
}

const K1_TOL: f64 = 1e-10;
const MAX_NODES: usize = 1 << 16;

/// E℘_1(π^x) = (1/2πi)∮ G_{<x}G_{>x} dz/z on |z| = √(ρ_<ρ_>), with node
/// doubling from 64 until successive values agree to 1e−10.
pub fn moment_k1(wall: &DiscreteBackWall, spec: &WeightSpec, x: i64) -> Result<f64> {
    let g = GFunctions::new(wall, spec, x)?;
    let (lo, hi) = (g.rho_less(), g.rho_greater());
    if lo >= hi {
        return Err(Error::Contour(format!("no gap between poles: ρ_< = {lo}, ρ_> = {hi}")));
    }
    let radius = nested_radii(&[lo], &[hi], spec.t())?.0[0];
    let integrate = |n: usize| -> f64 {
        let nodes = circle(radius, n);
        let vals = par::map(&nodes, |&z| g.eval(z).re);
        vals.iter().sum::<f64>() / n as f64
    };
    let mut n = 64;
    let mut prev = integrate(n);
    while n < MAX_NODES {
        n *= 2;
        let cur = integrate(n);
        if (cur - prev).abs() < K1_TOL * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Contour(format!("quadrature did not converge with {MAX_NODES} nodes")))
}

/// A moment request E[∏_i ℘_{k_i}(π^{x_i})].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRequest {
    pub xs: Vec<i64>,
    pub ks: Vec<u32>,
}

/// Result of a multi-dimensional contour evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourValue {
    pub value: f64,
    /// |I(N) − I(N′)| for the two node counts used.
    pub error_estimate: f64,
    pub nodes: usize,
    pub radii: Vec<f64>,
}

/// Pairwise kernel between variables `a < b` of the integrand.
#[derive(Clone, Copy)]
enum PairKind {
    /// Two variables of one ℘_2 group: [1 + (q/t) z_1/z_2] (1 − z_1/z_2) / ((1 − z_1/(t z_2))(1 − q z_1/z_2)).
    Within,
    /// Cross kernel between groups.
    Cross,
}

fn pair_factor(kind: PairKind, z: Complex64, w: Complex64, q: f64, t: f64) -> Complex64 {
    let u = z / w;
    match kind {
        PairKind::Within => (1.0 + (q / t) * u) * (1.0 - u) / ((1.0 - u / t) * (1.0 - q * u)),
        PairKind::Cross => (1.0 - (q / t) * u) * (1.0 - u) / ((1.0 - q * u) * (1.0 - u / t)),
    }
}

struct Layout {
    /// Group index of every variable.
    group: Vec<usize>,
    pairs: Vec<(usize, usize, PairKind)>,
}

fn layout(ks: &[u32]) -> Layout {
    let mut group = Vec::new();
    for (g, &k) in ks.iter().enumerate() {
        group.extend(std::iter::repeat_n(g, k as usize));
    }
    let n = group.len();
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let kind = if group[a] == group[b] { PairKind::Within } else { PairKind::Cross };
            pairs.push((a, b, kind));
        }
    }
    Layout { group, pairs }
}

/// Tensor trapezoid sum of ∏_v f_v(z_v) ∏_{a<b} T_ab(z_a, z_b) over n ≤ 4 circles.
fn tensor_sum(nodes: &[Vec<Complex64>], single: &[Vec<Complex64>], lay: &Layout, q: f64, t: f64) -> f64 {
    let n = nodes.len();
    let nn = nodes[0].len();
    // tables[b][a] is the N×N table of T_ab, row index = node of a.
    let mut tables: Vec<Vec<Vec<Complex64>>> = vec![vec![Vec::new(); n]; n];
    for &(a, b, kind) in &lay.pairs {
        let mut tab = Vec::with_capacity(nn * nn);
        for &za in &nodes[a] {
            for &zb in &nodes[b] {
                tab.push(pair_factor(kind, za, zb, q, t));
            }
        }
        tables[b][a] = tab;
    }
    let one = Complex64::new(1.0, 0.0);
    let partial = |i0: usize| -> f64 {
        let mut idx = vec![0usize; n];
        idx[0] = i0;
        let base = single[0][i0];
        fn rec(
            level: usize,
            acc: Complex64,
            idx: &mut Vec<usize>,
            single: &[Vec<Complex64>],
            tables: &[Vec<Vec<Complex64>>],
            nn: usize,
        ) -> Complex64 {
            let n = idx.len();
            if level == n {
                return acc;
            }
            let mut total = Complex64::new(0.0, 0.0);
            for i in 0..nn {
                let mut term = acc * single[level][i];
                for a in 0..level {
                    term *= tables[level][a][idx[a] * nn + i];
                }
                idx[level] = i;
                total += rec(level + 1, term, idx, single, tables, nn);
            }
            total
        }
        rec(1, base * one, &mut idx, single, &tables, nn).re
    };
    let parts = par::map_range(nn, partial);
    parts.iter().sum::<f64>() / (nn as f64).powi(n as i32)
}

/// E[∏ ℘_{k_i}(π^{x_i})] from the nested contour formula, Σk ≤ 4, k_i ≤ 2,
/// `xs` weakly increasing.
pub fn moment_multi(wall: &DiscreteBackWall, spec: &WeightSpec, xs: &[i64], ks: &[u32]) -> Result<ContourValue> {
    moment_multi_tol(wall, spec, xs, ks, 1e-11)
}

pub fn moment_multi_tol(wall: &DiscreteBackWall, spec: &WeightSpec, xs: &[i64], ks: &[u32], tol: f64) -> Result<ContourValue> {
    validate_request(xs, ks)?;
    let (q, t) = (spec.q(), spec.t());
    let lay = layout(ks);
    let gs: Vec<GFunctions> = xs.iter().map(|&x| GFunctions::new(wall, spec, x)).collect::<Result<_>>()?;
    let lo: Vec<f64> = lay.group.iter().map(|&g| gs[g].rho_less()).collect();
    let hi: Vec<f64> = lay.group.iter().map(|&g| gs[g].rho_greater()).collect();
    let (radii, margin) = nested_radii(&lo, &hi, t)?;
    let dim = lay.group.len();
    let evaluate = |nn: usize| -> f64 {
        let nodes: Vec<Vec<Complex64>> = radii.iter().map(|&r| circle(r, nn)).collect();
        let single: Vec<Vec<Complex64>> =
            (0..dim).map(|v| nodes[v].iter().map(|&z| gs[lay.group[v]].eval(z)).collect()).collect();
        tensor_sum(&nodes, &single, &lay, q, t)
    };
    // Trapezoid error decays like e^{−N·margin}.
    let mut nn = ((-tol.ln() + 4.0) / margin).ceil().max(16.0) as usize;
    let budget = 3.0e8;
    loop {
        let n2 = nn + nn / 2;
        if (n2 as f64).powi(dim as i32) > budget {
            return Err(Error::Contour(format!("quadrature budget exceeded (margin {margin:.3}, dimension {dim})")));
        }
        let (a, b) = (evaluate(nn), evaluate(n2));
        let err = (a - b).abs();
        if err < tol * b.abs().max(1.0) {
            return Ok(ContourValue { value: b, error_estimate: err, nodes: n2, radii });
        }
        nn = n2;
    }
}

fn validate_request(xs: &[i64], ks: &[u32]) -> Result<()> {
    if xs.is_empty() || xs.len() != ks.len() {
        return Err(Error::Other("xs and ks must be non-empty and of equal length".into()));
    }
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Other("xs must be weakly increasing".into()));
    }
    if ks.iter().any(|&k| k == 0 || k > 2) || ks.iter().sum::<u32>() > 4 {
        return Err(Error::Other("need 1 ≤ k_i ≤ 2 and Σk ≤ 4".into()));
    }
    Ok(())
}

/// Joint cumulant κ(℘_{k_1}(π^{x_1}), …) via the nested contours; the
/// ∏C − 1 subtraction in the cross kernel is done for pairs (order 2).
pub fn covariance(wall: &DiscreteBackWall, spec: &WeightSpec, x1: i64, k1: u32, x2: i64, k2: u32) -> Result<f64> {
    let ((xa, ka), (xb, kb)) = if x1 <= x2 { ((x1, k1), (x2, k2)) } else { ((x2, k2), (x1, k1)) };
    let joint = moment_multi(wall, spec, &[xa, xb], &[ka, kb])?.value;
    let ma = moment_multi(wall, spec, &[xa], &[ka])?.value;
    let mb = moment_multi(wall, spec, &[xb], &[kb])?.value;
    Ok(joint - ma * mb)
}

/// Residual of the dimension reduction identity
/// (1/(2πi)^k)∮⋯∮ ∏ f(v_i) ∏_j(Σ_i g_j(v_i)) / ∏(v_{i+1} − v_i) dv
///   = k^{s−1}/(2πi) ∮ f^k ∏ g_j dv
/// for nested circles of the given radii (increasing), k ≤ 4.
pub fn dimension_reduction_check<F, G>(f: F, gs: &[G], radii: &[f64], nodes: usize) -> f64
where
    F: Fn(Complex64) -> Complex64 + Sync,
    G: Fn(Complex64) -> Complex64 + Sync,
{
    let k = radii.len();
    let i_unit = Complex64::new(0.0, 1.0);
    // dv/(2πi) on a trapezoid circle is v/N.
    let rhs = {
        let r = radii[k - 1];
        let mut s = Complex64::new(0.0, 0.0);
        for z in circle(r, nodes) {
            let mut term = f(z).powu(k as u32) * z;
            for g in gs {
                term *= g(z);
            }
            s += term;
        }
        s / nodes as f64 * (k as f64).powi(gs.len() as i32 - 1)
    };
    if k == 1 {
        let _ = i_unit;
        return 0.0;
    }
    let pts: Vec<Vec<Complex64>> = radii.iter().map(|&r| circle(r, nodes)).collect();
    let fv: Vec<Vec<Complex64>> = pts.iter().map(|p| p.iter().map(|&z| f(z) * z).collect()).collect();
    let gv: Vec<Vec<Vec<Complex64>>> =
        gs.iter().map(|g| pts.iter().map(|p| p.iter().map(|&z| g(z)).collect()).collect()).collect();
    let lhs_parts = par::map_range(nodes, |i0| {
        let mut idx = vec![0usize; k];
        idx[0] = i0;
        let mut total = Complex64::new(0.0, 0.0);
        loop {
            let mut term = Complex64::new(1.0, 0.0);
            for m in 0..k {
                term *= fv[m][idx[m]];
                if m > 0 {
                    term /= pts[m][idx[m]] - pts[m - 1][idx[m - 1]];
                }
            }
            for gj in &gv {
                let s: Complex64 = (0..k).map(|m| gj[m][idx[m]]).sum();
                term *= s;
            }
            total += term;
            let mut m = k - 1;
            loop {
                if m == 0 {
                    return total;
                }
                idx[m] += 1;
                if idx[m] < nodes {
                    break;
                }
                idx[m] = 0;
                m -= 1;
            }
        }
    });
    let lhs: Complex64 = lhs_parts.iter().sum::<Complex64>() / (nodes as f64).powi(k as i32);
    (lhs - rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::SkewSupport;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn wp_examples() {
        let (q, t) = (0.3, 0.6);
        assert_eq!(wp(1, &Partition::empty(), q, t), 1.0);
        let v = wp(1, &p(&[1]), q, t);
        assert!((v - ((1.0 - 1.0 / t) * q + 1.0 / t)).abs() < 1e-15);
        // ℘ is continuous in (q, t); at q = t = 1 every λ gives 1.
        let near = wp(2, &p(&[3, 1]), 1.0 - 1e-9, 1.0 - 1e-9);
        assert!((near - 1.0).abs() < 1e-6);
    }

    #[test]
    fn g_functions_poles_are_separated() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        let g = GFunctions::new(&wall, &spec, -1).unwrap();
        assert_eq!(g.a_less.len(), 1);
        assert!(g.rho_less() < g.rho_greater());
        let left = DiscreteBackWall::new(0, 0, vec![false, false, true, true]);
        let g = GFunctions::new(&left, &spec, 1).unwrap();
        assert!(g.a_less.is_empty());
        assert_eq!(g.g_less(Complex64::new(0.7, 0.2)), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn nested_radii_respect_constraints() {
        let (r, s) = nested_radii(&[1.0, 1.0, 1.5], &[50.0, 60.0, 60.0], 0.5).unwrap();
        assert!(s > 0.0);
        assert!(r[0] > 1.0 && r[2] < 60.0);
        assert!(r[1] > r[0] / 0.5 && r[2] > r[1] / 0.5);
        assert!(nested_radii(&[1.0, 1.0], &[1.5, 1.5], 0.5).is_err());
        let (r, _) = nested_radii(&[0.0], &[f64::INFINITY], 0.5).unwrap();
        assert!(r[0].is_finite() && r[0] > 0.0);
    }

    #[test]
    fn forced_empty_diagonal_has_unit_moment() {
        let wall = SkewSupport::new(3, 1, p(&[1])).unwrap().wall();
        let spec = WeightSpec::with_t(0.4, 0.5, 2.0).unwrap();
        let v = wall.interior().find(|&v| wall.diag_len(v) == 0).unwrap();
        assert!((moment_k1(&wall, &spec, v).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k1_is_radius_invariant_and_matches_multi() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.2, 0.4, 2.0).unwrap();
        let g = GFunctions::new(&wall, &spec, 0).unwrap();
        let (lo, hi) = (g.rho_less(), g.rho_greater());
        let at = |r: f64| circle(r, 2048).iter().map(|&z| g.eval(z).re).sum::<f64>() / 2048.0;
        let a = at(lo * (hi / lo).powf(0.3));
        let b = at(lo * (hi / lo).powf(0.7));
        assert!((a - b).abs() < 1e-10);
        let m = moment_k1(&wall, &spec, 0).unwrap();
        assert!((m - a).abs() < 1e-10);
        let mm = moment_multi(&wall, &spec, &[0], &[1]).unwrap().value;
        assert!((m - mm).abs() < 1e-10);
    }

    #[test]
    fn schur_case_matches_residues() {
        // 1^1 with q = t: G = (1 − 1/(taz))/(1 − 1/(az)) · (1 − a′z)/(1 − t a′z).
        let wall = SkewSupport::rectangle(1, 1).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.5, 1.0).unwrap();
        let g = GFunctions::new(&wall, &spec, 0).unwrap();
        let (a, b, t) = (g.a_less[0], g.a_greater[0], spec.t());
        // Residue sum outside the contour: only the pole at z = 1/(t b) and ∞.
        let f = |z: Complex64| g.eval(z) / z;
        let z0 = 1.0 / (t * b);
        let res_z0 = {
            let z = Complex64::new(z0, 0.0);
            (1.0 - 1.0 / (t * a * z)) / (1.0 - 1.0 / (a * z)) * (1.0 - b * z) / (-t * b) / z
        };
        let at_inf = 1.0 / t; // lim G(z) as z → ∞
        let exact = at_inf - res_z0.re;
        let _ = f;
        assert!((moment_k1(&wall, &spec, 0).unwrap() - exact).abs() < 1e-11);
    }

    #[test]
    fn dimension_reduction_identity() {
        let f = |v: Complex64| 1.0 / (v - 0.5);
        let g = |v: Complex64| 1.0 / v;
        let r = dimension_reduction_check(f, &[g], &[1.0, 1.6], 256);
        assert!(r < 1e-10, "{r}");
        assert_eq!(dimension_reduction_check(f, &[g], &[1.0], 64), 0.0);
        let f2 = |v: Complex64| 1.0 / ((v - 0.3) * (v - 0.6));
        let r = dimension_reduction_check(f2, &[g], &[1.0, 1.5, 2.2], 128);
        assert!(r < 1e-9, "{r}");
    }
}
