// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Limiting back walls: admissibility, the radii ρ_< / ρ_>, singular points
//! and ε-discretization into a [`DiscreteBackWall`].

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::combinatorics::DiscreteBackWall;
use crate::error::{Error, Result};

const GROUP_TOL: f64 = 1e-12;
const SLOPE_TOL: f64 = 1e-9;
const LC_SLACK: f64 = 1e-12;

/// The multiset {s_0⋯s_i}_{i<p} together with its distinct values
/// σ_1 > … > σ_d and cumulative slopes ς_a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SMultiset {
    /// s_0⋯s_i, indexed by i.
    pub values: Vec<f64>,
    /// Distinct values, decreasing.
    pub sigmas: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

impl SMultiset {
    pub fn from_weights(s: &[f64]) -> Result<Self> {
        if s.is_empty() || s.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidSpec("weights must be a non-empty list of positive reals".into()));
        }
        let mut values = Vec::with_capacity(s.len());
        let mut acc = 1.0;
        for &x in s {
            acc *= x;
            values.push(acc);
        }
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut sigmas: Vec<f64> = Vec::new();
        let mut multiplicities = Vec::new();
        for v in sorted {
            match sigmas.last() {
                Some(&last) if (last - v).abs() <= GROUP_TOL * last => *multiplicities.last_mut().unwrap() += 1,
                _ => {
                    sigmas.push(v);
                    multiplicities.push(1);
                }
            }
        }
        Ok(SMultiset { values, sigmas, multiplicities })
    }

    /// The weights s_0, …, s_{p−1} recovered from the running products.
    pub fn weights(&self) -> Vec<f64> {
        let mut prev = 1.0;
        self.values
            .iter()
            .map(|&v| {
                let w = v / prev;
                prev = v;
                w
            })
            .collect()
    }

    pub fn p(&self) -> usize {
        self.values.len()
    }

    pub fn d(&self) -> usize {
        self.sigmas.len()
    }

    /// ς_a = Σ_{j≤a} |S_{σ_j}| / p for a = 0..=d.
    pub fn varsigma(&self, a: usize) -> f64 {
        self.multiplicities[..a].iter().sum::<usize>() as f64 / self.p() as f64
    }

    /// τ_i for i = 0..=p+1 (τ_0 = ∞, τ_{p+1} = 0).
    pub fn tau(&self, i: usize) -> f64 {
        let p = self.p();
        if i == 0 {
            return f64::INFINITY;
        }
        if i > p {
            return 0.0;
        }
        let mut sorted = self.values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[i - 1]
    }

    /// τ_i^{-1}, with τ_0^{-1} = 0 and τ_{p+1}^{-1} = ∞.
    pub fn tau_inv(&self, i: usize) -> f64 {
        1.0 / self.tau(i)
    }

    /// The index a with ς_a equal to `slope`, if any.
    pub fn varsigma_index(&self, slope: f64) -> Option<usize> {
        (0..=self.d()).find(|&a| (self.varsigma(a) - slope).abs() < SLOPE_TOL)
    }

    /// Indicator 1[slope ≥ ς_σ] for the σ-index `j` (1-based as in σ_j).
    pub fn slope_covers(&self, slope: f64, j: usize) -> bool {
        slope >= self.varsigma(j) - SLOPE_TOL
    }
}

/// Continuous piecewise linear ℬ with kinks V_0 < … < V_n (the ends may be
/// infinite) and slopes[ℓ−1] = ℬ′ on (V_{ℓ−1}, V_ℓ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitBackWall {
    #[serde(serialize_with = "ser_kinks", deserialize_with = "de_kinks")]
    pub kinks: Vec<f64>,
    pub slopes: Vec<f64>,
    /// (x_0, ℬ(x_0)).
    pub anchor: (f64, f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KinkRepr {
    Num(f64),
    Str(String),
}

fn ser_kinks<S: Serializer>(kinks: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let reprs: Vec<KinkRepr> = kinks
        .iter()
        .map(|&k| {
            if k == f64::NEG_INFINITY {
                KinkRepr::Str("-inf".into())
            } else if k == f64::INFINITY {
                KinkRepr::Str("+inf".into())
            } else {
                KinkRepr::Num(k)
            }
        })
        .collect();
    reprs.serialize(ser)
}

fn de_kinks<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    let reprs = Vec::<KinkRepr>::deserialize(de)?;
    reprs
        .into_iter()
        .map(|r| match r {
            KinkRepr::Num(x) => Ok(x),
            KinkRepr::Str(s) => match s.trim() {
                "-inf" | "−inf" => Ok(f64::NEG_INFINITY),
                "+inf" | "inf" => Ok(f64::INFINITY),
                other => Err(serde::de::Error::custom(format!("bad kink sentinel {other:?}"))),
            },
        })
        .collect()
}

impl LimitBackWall {
    pub fn new(kinks: Vec<f64>, slopes: Vec<f64>, anchor: (f64, f64)) -> Result<Self> {
        let bw = LimitBackWall { kinks, slopes, anchor };
        bw.check_shape()?;
        Ok(bw)
    }

    /// ℬ(x) = min(x, 0): slope 1 then 0, kink at the origin.
    pub fn corner() -> Self {
        LimitBackWall {
            kinks: vec![f64::NEG_INFINITY, 0.0, f64::INFINITY],
            slopes: vec![1.0, 0.0],
            anchor: (0.0, 0.0),
        }
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.slopes.len();
        if n == 0 || self.kinks.len() != n + 1 {
            return Err(Error::InvalidWall(format!("{} kinks for {} slopes", self.kinks.len(), n)));
        }
        if self.kinks.iter().any(|k| k.is_nan()) || self.kinks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidWall("kinks must be strictly increasing".into()));
        }
        if self.kinks[1..n].iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidWall("only the end kinks may be infinite".into()));
        }
        if self.slopes.iter().any(|&s| !(-SLOPE_TOL..=1.0 + SLOPE_TOL).contains(&s)) {
            return Err(Error::InvalidWall("slopes must lie in [0,1]".into()));
        }
        if self.slopes.windows(2).any(|w| (w[0] - w[1]).abs() < SLOPE_TOL) {
            return Err(Error::InvalidWall("adjacent slopes coincide".into()));
        }
        let (x0, b0) = self.anchor;
        if !(x0.is_finite() && b0.is_finite()) || x0 < self.kinks[0] || x0 > self.kinks[n] {
            return Err(Error::InvalidWall("anchor must be a finite point of the domain".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.slopes.len()
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.kinks[0], self.kinks[self.n()])
    }

    /// 1-based piece index ℓ with V_{ℓ−1} < x ≤ V_ℓ (first piece if x = V_0).
    pub fn piece_of(&self, x: f64) -> usize {
        (1..=self.n()).find(|&l| x <= self.kinks[l]).unwrap_or(self.n())
    }

    /// ℬ′(V_ℓ^−), with ℬ′(V_0^−) = 0.
    pub fn slope_left_of_kink(&self, l: usize) -> f64 {
        if l == 0 {
            0.0
        } else {
            self.slopes[l - 1]
        }
    }

    /// ℬ′(V_ℓ^+), with ℬ′(V_n^+) = 1.
    pub fn slope_right_of_kink(&self, l: usize) -> f64 {
        if l >= self.n() {
            1.0
        } else {
            self.slopes[l]
        }
    }

    /// ℬ(x), integrating the slopes from the anchor.
    pub fn b(&self, x: f64) -> f64 {
        let (x0, b0) = self.anchor;
        b0 + self.integral_slope(x0, x)
    }

    fn integral_slope(&self, from: f64, to: f64) -> f64 {
        if to < from {
            return -self.integral_slope(to, from);
        }
        let mut s = 0.0;
        for l in 1..=self.n() {
            let lo = self.kinks[l - 1].max(from);
            let hi = self.kinks[l].min(to);
            if hi > lo {
                s += self.slopes[l - 1] * (hi - lo);
            }
        }
        s
    }

    /// c_ℓ with ℬ(x) = slope_ℓ·x + c_ℓ on piece ℓ.
    pub fn intercept(&self, l: usize) -> f64 {
        let v = self.kinks[l];
        let x = if v.is_finite() { v } else { self.kinks[l - 1] };
        let x = if x.is_finite() { x } else { self.anchor.0 };
        self.b(x) - self.slopes[l - 1] * x
    }

    /// Finite kinks with their indices.
    pub fn finite_kinks(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.kinks.iter().copied().enumerate().filter(|(_, v)| v.is_finite())
    }

    fn slope_count(slope: f64, p: usize) -> Result<usize> {
        let i = (slope * p as f64).round();
        if (i - slope * p as f64).abs() > SLOPE_TOL * p as f64 {
            return Err(Error::InvalidWall(format!("slope {slope} is not a multiple of 1/{p}")));
        }
        Ok(i as usize)
    }
}

/// A violated pair of kinks in the membership condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub v: f64,
    pub w: f64,
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub member: bool,
    pub violations: Vec<Violation>,
}

/// Membership in 𝔅(𝒮): slopes in {i/p} and τ_i^{-1}τ_{j+1}e^{−(W−V)} ≤ 1
/// for all kinks V ≤ W, with i = p·ℬ′(V^−), j = p·ℬ′(W^+).
pub fn validate_limit_backwall(bw: &LimitBackWall, s: &SMultiset) -> Result<MembershipReport> {
    bw.check_shape()?;
    let p = s.p();
    for &sl in &bw.slopes {
        LimitBackWall::slope_count(sl, p)?;
    }
    let mut violations = Vec::new();
    let n = bw.n();
    for a in 0..=n {
        let v = bw.kinks[a];
        if !v.is_finite() {
            continue;
        }
        let i = LimitBackWall::slope_count(bw.slope_left_of_kink(a), p)?;
        for b in a..=n {
            let w = bw.kinks[b];
            if !w.is_finite() {
                continue;
            }
            let j = LimitBackWall::slope_count(bw.slope_right_of_kink(b), p)?;
            let (ti, tj) = (s.tau_inv(i), s.tau(j + 1));
            if ti == 0.0 || tj == 0.0 {
                continue;
            }
            let product = ti * tj * (-(w - v)).exp();
            if product > 1.0 + LC_SLACK {
                violations.push(Violation { v, w, product });
            }
        }
    }
    Ok(MembershipReport { member: violations.is_empty(), violations })
}

/// ρ_<(x) = max over pieces with V_{ℓ−1} < x of τ_i^{-1} e^{min(x, V_ℓ)}.
pub fn rho_less(bw: &LimitBackWall, s: &SMultiset, x: f64) -> f64 {
    let p = s.p();
    let mut best = 0.0f64;
    for l in 1..=bw.n() {
        if bw.kinks[l - 1] >= x {
            break;
        }
        let i = (bw.slopes[l - 1] * p as f64).round() as usize;
        let ti = s.tau_inv(i);
        if ti > 0.0 {
            best = best.max(ti * x.min(bw.kinks[l]).exp());
        }
    }
    best
}

/// ρ_>(x) = min over pieces with V_ℓ > x of τ_{i+1}^{-1} e^{max(V_{ℓ−1}, x)}.
pub fn rho_greater(bw: &LimitBackWall, s: &SMultiset, x: f64) -> f64 {
    let p = s.p();
    let mut best = f64::INFINITY;
    for l in (1..=bw.n()).rev() {
        if bw.kinks[l] <= x {
            break;
        }
        let i = (bw.slopes[l - 1] * p as f64).round() as usize;
        let ti = s.tau_inv(i + 1);
        if ti.is_finite() {
            best = best.min(ti * x.max(bw.kinks[l - 1]).exp());
        }
    }
    best
}

/// Membership in 𝔅^Δ(𝒮): a member of 𝔅(𝒮) whose slopes are all in {ς_a}
/// and with ρ_<(V) < ρ_>(W) for all kinks V < W.
pub fn is_regular(bw: &LimitBackWall, s: &SMultiset) -> Result<bool> {
    if !validate_limit_backwall(bw, s)?.member {
        return Ok(false);
    }
    if bw.slopes.iter().any(|&sl| s.varsigma_index(sl).is_none()) {
        return Ok(false);
    }
    let kinks: Vec<f64> = bw.finite_kinks().map(|(_, v)| v).collect();
    for (a, &v) in kinks.iter().enumerate() {
        for &w in &kinks[a + 1..] {
            if rho_less(bw, s, v) >= rho_greater(bw, s, w) * (1.0 - LC_SLACK) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A singular kink V with its common radius ρ_<(V) = ρ_>(V) = σ_i^{-1} e^V.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub kink_index: usize,
    pub x: f64,
    pub rho: f64,
    /// i with ℬ′(V^−) = ς_i.
    pub sigma_index: usize,
}

/// Interior kinks where the slope decreases.
pub fn singular_points(bw: &LimitBackWall, s: &SMultiset) -> Result<Vec<SingularPoint>> {
    if !is_regular(bw, s)? {
        return Err(Error::InvalidWall("back wall is not regular; singular points are not isolated".into()));
    }
    let mut out = Vec::new();
    for l in 1..bw.n() {
        let (left, right) = (bw.slopes[l - 1], bw.slopes[l]);
        if right < left {
            let i = s.varsigma_index(left).expect("regular wall");
            let x = bw.kinks[l];
            out.push(SingularPoint { kink_index: l, x, rho: x.exp() / s.sigmas[i - 1], sigma_index: i });
        }
    }
    Ok(out)
}

/// ε-discretization of a limiting wall.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub wall: DiscreteBackWall,
    /// v_ℓ for ℓ = 0..=n.
    pub kinks: Vec<i64>,
    pub epsilon: f64,
}

impl Discretization {
    /// Prelimit diagonal ⌊x/ε⌋ + (ℓ−1) for x in piece ℓ; v_ℓ when x = V_ℓ.
    pub fn prelimit_coordinate(&self, bw: &LimitBackWall, x: f64) -> i64 {
        if let Some(l) = bw.kinks.iter().position(|&v| v == x) {
            return self.kinks[l];
        }
        let l = bw.piece_of(x) as i64;
        (x / self.epsilon).floor() as i64 + l - 1
    }
}

/// The set A ⊂ [[0,p−1]] of the `i` indices a with the largest s_0⋯s_a
/// (lowest index first among ties).
pub fn sigma_order_set(s: &SMultiset, i: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.p()).collect();
    idx.sort_by(|&a, &b| {
        let (va, vb) = (s.values[a], s.values[b]);
        if (va - vb).abs() <= GROUP_TOL * va.max(vb) {
            a.cmp(&b)
        } else {
            vb.total_cmp(&va)
        }
    });
    let mut set: Vec<usize> = idx[..i].to_vec();
    set.sort_unstable();
    set
}

/// Discretize with kinks v_ℓ = ⌊V_ℓ/ε⌋ + ℓ. Infinite ends go to ∓⌊L/ε⌋
/// (plus the shift), where L = `half_width` or 1/ε by default. Within
/// block ℓ, B′(v+½) = 1 iff (v mod p) ∈ A_ℓ.
pub fn discretize(bw: &LimitBackWall, s: &SMultiset, epsilon: f64, half_width: Option<f64>) -> Result<Discretization> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidSpec(format!("epsilon = {epsilon} must lie in (0,1)")));
    }
    let report = validate_limit_backwall(bw, s)?;
    if !report.member {
        return Err(Error::InvalidWall(format!("{} violated kink pairs", report.violations.len())));
    }
    let n = bw.n();
    let p = s.p();
    let l_half = half_width.unwrap_or(1.0 / epsilon);
    let mut kinks = Vec::with_capacity(n + 1);
    for (l, &v) in bw.kinks.iter().enumerate() {
        let vv = if v == f64::NEG_INFINITY {
            -l_half
        } else if v == f64::INFINITY {
            l_half
        } else {
            v
        };
        kinks.push((vv / epsilon).floor() as i64 + l as i64);
    }
    if kinks.windows(2).any(|w| w[1] - w[0] < p as i64) {
        return Err(Error::InvalidWall("epsilon too coarse (or window too narrow) for one period per block".into()));
    }
    let mut bits = Vec::with_capacity((kinks[n] - kinks[0]) as usize);
    for l in 1..=n {
        let i = LimitBackWall::slope_count(bw.slopes[l - 1], p)?;
        let set = sigma_order_set(s, i);
        for v in kinks[l - 1]..kinks[l] {
            bits.push(set.contains(&(v.rem_euclid(p as i64) as usize)));
        }
    }
    let v_min = kinks[0];
    let mut disc = Discretization { wall: DiscreteBackWall::new(v_min, 0, bits), kinks, epsilon };
    let (x0, b0) = bw.anchor;
    let va = disc.prelimit_coordinate(bw, x0).clamp(v_min, disc.wall.v_max());
    let target = (b0 / epsilon).round() as i64;
    disc.wall.b_min = target - disc.wall.b(va);
    Ok(disc)
}
