// SPDX-License-Identifier: Apache-2.0 OR MIT
//! q-series primitives, single-variable skew Macdonald coefficients, turn
//! weights and the two equivalent descriptions of the finite measure.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{interlaces, turns, Partition, SkewPlanePartition, TurnKind};
use crate::combinatorics::DiscreteBackWall;
use crate::error::{Error, Result};

/// Parameters of the periodic Macdonald measure. `t = r^𝔱`, `q = t^α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub p: usize,
    pub s: Vec<f64>,
    pub r: f64,
    pub frak_t: f64,
    pub alpha: f64,
}

impl WeightSpec {
    pub fn new(s: Vec<f64>, r: f64, frak_t: f64, alpha: f64) -> Result<Self> {
        let spec = WeightSpec { p: s.len(), s, r, frak_t, alpha };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous spec with prescribed `t` rather than 𝔱.
    pub fn with_t(r: f64, t: f64, alpha: f64) -> Result<Self> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidSpec(format!("t = {t} must lie in (0,1)")));
        }
        Self::new(vec![1.0], r, t.ln() / r.ln(), alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.s.len() != self.p {
            return Err(Error::InvalidSpec(format!("period {} with {} weights", self.p, self.s.len())));
        }
        if self.s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpec("weights s must be positive".into()));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidSpec(format!("r = {} must lie in (0,1)", self.r)));
        }
        if !(self.frak_t > 0.0 && self.alpha > 0.0) {
            return Err(Error::InvalidSpec("𝔱 and α must be positive".into()));
        }
        Ok(())
    }

    pub fn t(&self) -> f64 {
        self.r.powf(self.frak_t)
    }

    pub fn q(&self) -> f64 {
        self.t().powf(self.alpha)
    }

    pub fn epsilon(&self) -> f64 {
        -self.r.ln()
    }

    /// s_v with p-periodic indexing.
    pub fn s_at(&self, v: i64) -> f64 {
        self.s[v.rem_euclid(self.p as i64) as usize]
    }

    pub fn r_v(&self, v: i64) -> f64 {
        self.s_at(v) * self.r
    }

    /// Whether ∏ s_i = 1 (needed for non-trivial limit shapes only).
    pub fn is_balanced(&self) -> bool {
        (self.s.iter().map(|x| x.ln()).sum::<f64>()).abs() < 1e-12
    }
}

const POCH_EPS: f64 = 1e-17;
const POCH_MIN: usize = 8;

/// (a; q)_n, or (a; q)_∞ when `n` is `None`.
pub fn qpochhammer(a: Complex64, q: f64, n: Option<usize>) -> Complex64 {
    let mut prod = Complex64::new(1.0, 0.0);
    let mut aq = a;
    match n {
        Some(n) => {
            for _ in 0..n {
                prod *= 1.0 - aq;
                aq *= q;
            }
        }
        None => {
            let mut i = 0usize;
            while i < POCH_MIN || aq.norm() >= POCH_EPS {
                prod *= 1.0 - aq;
                aq *= q;
                i += 1;
                if i > 1_000_000 {
                    break;
                }
            }
        }
    }
    prod
}

/// Real (a; q)_∞.
pub fn qpoch_inf(a: f64, q: f64) -> f64 {
    qpochhammer(Complex64::new(a, 0.0), q, None).re
}

/// f(u) = (tu; q)_∞ / (qu; q)_∞.
pub fn f_ratio(u: f64, q: f64, t: f64) -> Result<f64> {
    let mut num = 1.0;
    let mut den = 1.0;
    let (mut tu, mut qu) = (t * u, q * u);
    let mut i = 0usize;
    while i < POCH_MIN || tu.abs().max(qu.abs()) >= POCH_EPS {
        let d = 1.0 - qu;
        if d.abs() < 1e-300 {
            return Err(Error::Other(format!("f({u}) hits the pole of (qu;q)_∞ at index {i}")));
        }
        num *= 1.0 - tu;
        den *= d;
        tu *= q;
        qu *= q;
        i += 1;
        if i > 1_000_000 {
            break;
        }
    }
    Ok(num / den)
}

fn f_checked(u: f64, q: f64, t: f64) -> f64 {
    f_ratio(u, q, t).expect("arguments q^a t^b with a ≥ 0, b ≥ 0 are regular")
}

/// ψ_{λ/μ}(q,t); zero unless μ ≺ λ.
pub fn psi_coeff(lam: &Partition, mu: &Partition, q: f64, t: f64) -> f64 {
    if !interlaces(mu, lam) {
        return 0.0;
    }
    let l = lam.len();
    let mut acc = 1.0;
    for i in 1..=l {
        for j in i..=l {
            let tt = t.powi((j - i) as i32);
            let e = |a: u32, b: u32| q.powi(a as i32 - b as i32) * tt;
            acc *= f_checked(e(mu.part(i), mu.part(j)), q, t) * f_checked(e(lam.part(i), lam.part(j + 1)), q, t)
                / (f_checked(e(lam.part(i), mu.part(j)), q, t) * f_checked(e(mu.part(i), lam.part(j + 1)), q, t));
        }
    }
    acc
}

/// φ_{λ/μ}(q,t); zero unless μ ≺ λ. The product runs up to ℓ(λ).
pub fn phi_coeff(lam: &Partition, mu: &Partition, q: f64, t: f64) -> f64 {
    if !interlaces(mu, lam) {
        return 0.0;
    }
    let l = lam.len();
    let mut acc = 1.0;
    for i in 1..=l {
        for j in i..=l {
            let tt = t.powi((j - i) as i32);
            let e = |a: u32, b: u32| q.powi(a as i32 - b as i32) * tt;
            acc *= f_checked(e(lam.part(i), lam.part(j)), q, t) * f_checked(e(mu.part(i), mu.part(j + 1)), q, t)
                / (f_checked(e(lam.part(i), mu.part(j)), q, t) * f_checked(e(mu.part(i), lam.part(j + 1)), q, t));
        }
    }
    acc
}

/// Log of the turn weight v_{α,t}(π,T) for every turn on line `x`, paired
/// with its kind.
fn log_turn_weights_on_line(pp: &SkewPlanePartition, spec: &WeightSpec, x: i64) -> Result<Vec<(TurnKind, f64)>> {
    let alpha = spec.alpha;
    let t = spec.t();
    let ln_t = t.ln();
    let p = pp.diagonal(x);
    let b = pp.wall().b(x) as f64;
    let tops: Vec<f64> = (1..=p.len()).map(|j| alpha * p.part(j) as f64 - j as f64 + 1.0 + b).collect();
    let ts = turns(pp, alpha, x)?;
    Ok(ts
        .into_iter()
        .filter(|tr| tr.above > 0)
        .map(|tr| {
            let mut s = 0.0;
            for &yj in &tops[..tr.above] {
                let num = 1.0 - (ln_t * (yj - tr.y_plus)).exp();
                let den = 1.0 - (ln_t * (yj - 1.0 - tr.y_minus)).exp();
                s += num.ln() - den.ln();
            }
            (tr.kind, s)
        })
        .collect())
}

/// v_{α,t}(π,T) for a turn `turn` of `pp` (matched by position).
pub fn turn_weight(pp: &SkewPlanePartition, turn: &crate::combinatorics::Turn, spec: &WeightSpec) -> f64 {
    let t = spec.t();
    let p = pp.diagonal(turn.x);
    let b = pp.wall().b(turn.x) as f64;
    let mut acc = 1.0;
    for j in 1..=p.len() {
        let yj = spec.alpha * p.part(j) as f64 - j as f64 + 1.0 + b;
        // lozenge j occupies [yj − 1, yj]
        if yj - 1.0 >= turn.y_plus - 1e-12 {
            acc *= (1.0 - t.powf(yj - turn.y_plus)) / (1.0 - t.powf(yj - 1.0 - turn.y_minus));
        }
    }
    acc
}

/// ln w_{α,t}(π).
pub fn log_macdonald_weight(pp: &SkewPlanePartition, spec: &WeightSpec) -> Result<f64> {
    if spec.alpha == 1.0 {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for x in pp.wall().interior() {
        for (kind, lw) in log_turn_weights_on_line(pp, spec, x)? {
            match kind {
                TurnKind::External => s += lw,
                TurnKind::Internal => s -= lw,
            }
        }
    }
    Ok(s)
}

pub fn macdonald_weight(pp: &SkewPlanePartition, spec: &WeightSpec) -> Result<f64> {
    Ok(log_macdonald_weight(pp, spec)?.exp())
}

/// ln of the unnormalized weight w_{α,t}(π) ∏_v r_v^{|π^v|}.
pub fn log_measure_weight(pp: &SkewPlanePartition, spec: &WeightSpec) -> Result<f64> {
    let mut s = log_macdonald_weight(pp, spec)?;
    for v in pp.wall().interior() {
        s += pp.diagonal(v).size() as f64 * spec.r_v(v).ln();
    }
    Ok(s)
}

pub fn measure_weight(pp: &SkewPlanePartition, spec: &WeightSpec) -> Result<f64> {
    Ok(log_measure_weight(pp, spec)?.exp())
}

/// Specialization a_e = ξ ∏_{v_min < v < e} r_v for edge index `k`
/// (e = v_min + k + ½).
pub fn a_e(wall: &DiscreteBackWall, spec: &WeightSpec, xi: f64, k: usize) -> f64 {
    log_a_e(wall, spec, xi, k).exp()
}

pub fn log_a_e(wall: &DiscreteBackWall, spec: &WeightSpec, xi: f64, k: usize) -> f64 {
    let mut s = xi.ln();
    for v in wall.v_min + 1..=wall.v_min + k as i64 {
        s += spec.r_v(v).ln();
    }
    s
}

/// ln of ∏_e F_{π^{e−½},π^{e+½}}(a_e^{1−2B′(e)}); −∞ if some pair fails to interlace.
pub fn log_measure_weight_via_coefficients(pp: &SkewPlanePartition, spec: &WeightSpec, xi: f64) -> f64 {
    let wall = pp.wall();
    let (q, t) = (spec.q(), spec.t());
    let mut s = 0.0;
    for (k, &bit) in wall.bits.iter().enumerate() {
        let v = wall.v_min + k as i64;
        let (lo, hi) = (pp.diagonal(v), pp.diagonal(v + 1));
        let coeff = if bit { psi_coeff(hi, lo, q, t) } else { phi_coeff(lo, hi, q, t) };
        if coeff <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let delta = hi.size() as f64 - lo.size() as f64;
        s += coeff.ln() - delta * log_a_e(wall, spec, xi, k);
    }
    s
}

pub fn measure_weight_via_coefficients(pp: &SkewPlanePartition, spec: &WeightSpec, xi: f64) -> f64 {
    log_measure_weight_via_coefficients(pp, spec, xi).exp()
}

/// Outcome of the summability test; `witness` holds the worst violating pair
/// of half-integer edges and its ratio a_{e1}^{-1} a_{e2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summability {
    pub summable: bool,
    pub witness: Option<(f64, f64, f64)>,
}

pub fn summability_check(wall: &DiscreteBackWall, spec: &WeightSpec) -> Summability {
    let la: Vec<f64> = (0..wall.bits.len()).map(|k| log_a_e(wall, spec, 1.0, k)).collect();
    let mut worst: Option<(f64, f64, f64)> = None;
    for (k1, &b1) in wall.bits.iter().enumerate() {
        if !b1 {
            continue;
        }
        for k2 in k1 + 1..wall.bits.len() {
            if wall.bits[k2] {
                continue;
            }
            let ratio = (la[k2] - la[k1]).exp();
            if ratio >= 1.0 && worst.is_none_or(|w| ratio > w.2) {
                let e = |k: usize| wall.v_min as f64 + k as f64 + 0.5;
                worst = Some((e(k1), e(k2), ratio));
            }
        }
    }
    Summability { summable: worst.is_none(), witness: worst }
}

/// Normalizing constant ∏ Π(a_{e1}^{-1}, a_{e2}) of the coefficient weights
/// (with the same ξ as [`measure_weight_via_coefficients`]; Π only sees ratios).
pub fn partition_function_exact(wall: &DiscreteBackWall, spec: &WeightSpec) -> Result<f64> {
    Ok(log_partition_function_exact(wall, spec)?.exp())
}

pub fn log_partition_function_exact(wall: &DiscreteBackWall, spec: &WeightSpec) -> Result<f64> {
    let sm = summability_check(wall, spec);
    if let Some((e1, e2, ratio)) = sm.witness {
        return Err(Error::NotSummable { e1, e2, ratio });
    }
    let (q, t) = (spec.q(), spec.t());
    let la: Vec<f64> = (0..wall.bits.len()).map(|k| log_a_e(wall, spec, 1.0, k)).collect();
    let mut s = 0.0;
    for (k1, &b1) in wall.bits.iter().enumerate() {
        if !b1 {
            continue;
        }
        for k2 in k1 + 1..wall.bits.len() {
            if !wall.bits[k2] {
                let x = (la[k2] - la[k1]).exp();
                s += qpoch_inf(t * x, q).ln() - qpoch_inf(x, q).ln();
            }
        }
    }
    Ok(s)
}

/// ln of the measure weight change when a cube is added on diagonal `v`
/// (part `i` of π^v incremented); recomputes the three affected lines only.
pub fn log_weight_local(pp: &SkewPlanePartition, spec: &WeightSpec, v: i64) -> Result<f64> {
    let mut s = pp.diagonal(v).size() as f64 * spec.r_v(v).ln();
    if spec.alpha == 1.0 {
        return Ok(s);
    }
    let w = pp.wall();
    for x in (v - 1..=v + 1).filter(|x| *x > w.v_min && *x < w.v_max()) {
        for (kind, lw) in log_turn_weights_on_line(pp, spec, x)? {
            s += if kind == TurnKind::External { lw } else { -lw };
        }
    }
    Ok(s)
}

/// ext − int over the lowest `k` edges of line `x` as predicted from the
/// diagonal sizes and the wall slopes alone.
pub fn turn_balance_identity(pp: &SkewPlanePartition, x: i64, k: usize) -> i64 {
    let w = pp.wall();
    let dslope = w.bit_after(x) as i64 - w.bit_after(x - 1) as i64;
    k as i64 * dslope + 2 * pp.diagonal(x).size() as i64
        - pp.diagonal(x - 1).size() as i64
        - pp.diagonal(x + 1).size() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{enumerate_skew_pp, turns_in_window, SkewSupport};

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    /// b_λ(s) for a cell s = (i,j) in λ.
    fn b(lam: &Partition, i: usize, j: usize, q: f64, t: f64) -> f64 {
        let arm = lam.part(i) as i32 - j as i32;
        let leg = lam.conjugate().part(j) as i32 - i as i32;
        (1.0 - q.powi(arm) * t.powi(leg + 1)) / (1.0 - q.powi(arm + 1) * t.powi(leg))
    }

    fn cells(lam: &Partition) -> Vec<(usize, usize)> {
        (1..=lam.len()).flat_map(|i| (1..=lam.part(i) as usize).map(move |j| (i, j))).collect()
    }

    fn arm_leg_phi(lam: &Partition, mu: &Partition, q: f64, t: f64) -> f64 {
        let cols: Vec<usize> =
            cells(lam).into_iter().filter(|&(i, j)| j as u32 > mu.part(i)).map(|c| c.1).collect();
        let mut acc = 1.0;
        for (i, j) in cells(lam) {
            if cols.contains(&j) {
                acc *= b(lam, i, j, q, t);
            }
        }
        for (i, j) in cells(mu) {
            if cols.contains(&j) {
                acc /= b(mu, i, j, q, t);
            }
        }
        acc
    }

    fn arm_leg_psi(lam: &Partition, mu: &Partition, q: f64, t: f64) -> f64 {
        let skew: Vec<(usize, usize)> = cells(lam).into_iter().filter(|&(i, j)| j as u32 > mu.part(i)).collect();
        let rows: Vec<usize> = skew.iter().map(|c| c.0).collect();
        let cols: Vec<usize> = skew.iter().map(|c| c.1).collect();
        let mut acc = 1.0;
        for (i, j) in cells(mu) {
            if rows.contains(&i) && !cols.contains(&j) {
                acc *= b(mu, i, j, q, t) / b(lam, i, j, q, t);
            }
        }
        acc
    }

    #[test]
    fn qpochhammer_examples() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert_eq!(qpochhammer(c(0.7), 0.3, Some(0)).re, 1.0);
        assert!((qpochhammer(c(0.5), 0.5, Some(2)).re - 0.375).abs() < 1e-15);
        // direct product to convergence
        let mut prod = 1.0;
        for i in 0..200 {
            prod *= 1.0 - 0.5 * 0.5f64.powi(i);
        }
        assert!((qpoch_inf(0.5, 0.5) - prod).abs() < 1e-15);
        assert!((qpoch_inf(0.5, 0.5) - 0.2887880951).abs() < 1e-10);
    }

    #[test]
    fn f_ratio_examples() {
        assert!((f_ratio(0.4, 0.3, 0.3).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(f_ratio(0.0, 0.3, 0.5).unwrap(), 1.0);
        let v = f_ratio(0.3, 0.25, 0.5).unwrap();
        assert!((v - qpoch_inf(0.15, 0.25) / qpoch_inf(0.075, 0.25)).abs() < 1e-14);
        assert!(f_ratio(4.0, 0.25, 0.5).is_err());
    }

    #[test]
    fn coefficients_trivial_cases() {
        let l = p(&[3, 1]);
        assert!((psi_coeff(&l, &l, 0.2, 0.5) - 1.0).abs() < 1e-14);
        assert!((phi_coeff(&l, &l, 0.2, 0.5) - 1.0).abs() < 1e-14);
        assert!((psi_coeff(&p(&[3, 1]), &p(&[2]), 0.4, 0.4) - 1.0).abs() < 1e-14);
        assert_eq!(psi_coeff(&p(&[2]), &p(&[3]), 0.4, 0.5), 0.0);
        let (q, t) = (0.3, 0.6);
        assert!((phi_coeff(&p(&[1]), &p(&[]), q, t) - (1.0 - t) / (1.0 - q)).abs() < 1e-14);
        assert!((psi_coeff(&p(&[1]), &p(&[]), q, t) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coefficients_match_arm_leg_formulas() {
        let pairs = [
            (p(&[2, 1]), p(&[1])),
            (p(&[3, 1]), p(&[2])),
            (p(&[3, 2, 1]), p(&[2, 1])),
            (p(&[4, 2]), p(&[2, 1])),
            (p(&[2]), p(&[])),
            (p(&[5, 3, 3]), p(&[4, 3, 1])),
        ];
        for (q, t) in [(0.2, 0.4), (0.16, 0.4), (0.5, 0.3)] {
            for (lam, mu) in &pairs {
                let (a, b) = (psi_coeff(lam, mu, q, t), arm_leg_psi(lam, mu, q, t));
                assert!((a / b - 1.0).abs() < 1e-12, "psi {lam:?}/{mu:?}: {a} vs {b}");
                let (a, b) = (phi_coeff(lam, mu, q, t), arm_leg_phi(lam, mu, q, t));
                assert!((a / b - 1.0).abs() < 1e-12, "phi {lam:?}/{mu:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn single_row_coefficients() {
        // φ_{(k)/∅} = (t;q)_k/(q;q)_k, ψ_{(k)/∅} = 1
        let (q, t) = (0.3, 0.55);
        for k in 0..6u32 {
            let lam = p(&[k]);
            let c = |a: f64| qpochhammer(Complex64::new(a, 0.0), q, Some(k as usize)).re;
            assert!((phi_coeff(&lam, &p(&[]), q, t) - c(t) / c(q)).abs() < 1e-13);
            assert!((psi_coeff(&lam, &p(&[]), q, t) - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn turn_weights_trivial_at_alpha_one() {
        let s = SkewSupport::rectangle(2, 2).unwrap();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        for pp in enumerate_skew_pp(&s, 2, 1000).unwrap() {
            assert_eq!(macdonald_weight(&pp, &spec).unwrap(), 1.0);
            for x in -1..=1 {
                for tr in turns(&pp, 1.0, x).unwrap() {
                    assert!((turn_weight(&pp, &tr, &spec) - 1.0).abs() < 1e-14);
                    assert_eq!(tr.y_plus - tr.y_minus, 1.0);
                }
            }
        }
    }

    #[test]
    fn turn_weight_by_hand() {
        // Single cube in 1^1 at α = 0.5: the external turn at y_− = −1 sits
        // under the lozenge [−0.5, 0.5]; weight (1 − t^{0.5−(−0.5)})/(1 − t^{−0.5−(−1)}).
        let s = SkewSupport::rectangle(1, 1).unwrap();
        let pp = SkewPlanePartition::from_grid(&s, &[vec![1]]).unwrap();
        let spec = WeightSpec::with_t(0.5, 0.4, 0.5).unwrap();
        let t = spec.t();
        let ts = turns(&pp, 0.5, 0).unwrap();
        let ext = ts.iter().find(|x| x.kind == TurnKind::External).unwrap();
        let w = turn_weight(&pp, ext, &spec);
        assert!((w - (1.0 - t) / (1.0 - t.powf(0.5))).abs() < 1e-14);
        assert!((macdonald_weight(&pp, &spec).unwrap() - w).abs() < 1e-14);
        let empty = SkewPlanePartition::from_grid(&s, &[vec![0]]).unwrap();
        assert_eq!(macdonald_weight(&empty, &spec).unwrap(), 1.0);
    }

    #[test]
    fn measure_weight_examples() {
        let s = SkewSupport::rectangle(2, 2).unwrap();
        let spec = WeightSpec::new(vec![2.0, 0.5], 0.3, 1.0, 1.0).unwrap();
        let empty = SkewPlanePartition::from_grid(&s, &[]).unwrap();
        assert_eq!(measure_weight(&empty, &spec).unwrap(), 1.0);
        let cube = SkewPlanePartition::from_grid(&s, &[vec![1, 0], vec![0, 0]]).unwrap();
        assert!((measure_weight(&cube, &spec).unwrap() - spec.s_at(0) * 0.3).abs() < 1e-15);
        let full = SkewPlanePartition::from_grid(&s, &[vec![2, 2], vec![2, 2]]).unwrap();
        let want = 0.3f64.powi(8) * 0.5f64.powi(4) * 2.0f64.powi(4);
        assert!((measure_weight(&full, &spec).unwrap() / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_weights_agree_and_xi_cancels() {
        let supports = [
            SkewSupport::rectangle(1, 1).unwrap(),
            SkewSupport::rectangle(2, 2).unwrap(),
            SkewSupport::new(3, 1, p(&[1])).unwrap(),
            SkewSupport::new(3, 2, p(&[1])).unwrap(),
        ];
        for (alpha, t) in [(1.0, 0.3f64), (2.0, 0.4), (0.5, 0.5), (3.0, 0.7)] {
            let spec = WeightSpec::new(vec![1.3, 1.0 / 1.3], 0.35, t.ln() / 0.35f64.ln(), alpha).unwrap();
            for s in &supports {
                for pp in enumerate_skew_pp(s, 3, 10_000).unwrap() {
                    let a = log_measure_weight(&pp, &spec).unwrap();
                    for xi in [1.0, 0.37, 5.0] {
                        let b = log_measure_weight_via_coefficients(&pp, &spec, xi);
                        assert!((a - b).abs() < 1e-11, "α={alpha} {pp:?}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn turn_balance_is_not_support_only_but_follows_identity() {
        let s = SkewSupport::rectangle(2, 2).unwrap();
        for pp in enumerate_skew_pp(&s, 3, 1000).unwrap() {
            for x in -1..=1 {
                let k = 8;
                let ts = turns_in_window(&pp, 0.7, x, k).unwrap();
                let ext = ts.iter().filter(|t| t.kind == TurnKind::External).count() as i64;
                let int = ts.len() as i64 - ext;
                assert_eq!(ext - int, turn_balance_identity(&pp, x, k));
            }
        }
    }

    #[test]
    fn summability_examples() {
        let spec = WeightSpec::new(vec![4.0, 0.25], 0.95, 1.0, 1.0).unwrap();
        let corner = DiscreteBackWall::new(0, 0, vec![true, false]);
        assert!(summability_check(&corner, &WeightSpec::with_t(0.9, 0.5, 1.0).unwrap()).summable);
        assert!(summability_check(&DiscreteBackWall::new(0, 0, vec![true]), &spec).summable);
        // a_{½}/a_{−½} = r_0 = 4r > 1
        let w = DiscreteBackWall::new(-1, 0, vec![true, false]);
        let s = summability_check(&w, &spec);
        assert!(!s.summable, "{s:?}");
        assert!(s.witness.unwrap().2 >= 1.0);
        assert!(partition_function_exact(&w, &spec).is_err());
    }

    #[test]
    fn partition_function_single_cell_schur() {
        let s = SkewSupport::rectangle(1, 1).unwrap();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        let z = partition_function_exact(&s.wall(), &spec).unwrap();
        let series: f64 = (0..=50).map(|k| 0.3f64.powi(k)).sum();
        assert!((z - 1.0 / 0.7).abs() < 1e-14);
        assert!((z - series).abs() < 1e-12);
    }

    #[test]
    fn partition_function_matches_enumeration() {
        let s = SkewSupport::rectangle(2, 2).unwrap();
        let spec = WeightSpec::with_t(0.1, 0.4, 2.0).unwrap();
        let z = partition_function_exact(&s.wall(), &spec).unwrap();
        let sum: f64 = enumerate_skew_pp(&s, 14, 1000)
            .unwrap()
            .iter()
            .map(|pp| measure_weight_via_coefficients(pp, &spec, 1.0))
            .sum();
        assert!((sum / z - 1.0).abs() < 1e-9, "{sum} vs {z}");
    }
}
