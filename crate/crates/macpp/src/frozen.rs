// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Real double roots of the companion equation and the frozen boundary,
//! parametrized by ζ ∈ ℝ̂ ∖ 𝒥.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::backwall::{LimitBackWall, SMultiset};
use crate::error::Result;
use crate::limitshape::LimitModel;

/// f(u) = (1/p) Σ_{σ∈𝒮} 1/(1 − u/σ).
pub fn f_of_u(s: &SMultiset, u: f64) -> f64 {
    if u.is_infinite() {
        return 0.0;
    }
    let p = s.p() as f64;
    s.sigmas.iter().zip(&s.multiplicities).map(|(sg, &m)| m as f64 / (1.0 - u / sg)).sum::<f64>() / p
}

/// φ_j(w): the inverse of f on the component E_j (E_0 ∋ ∞, E_d = (0, σ_d)).
/// f increases on every component, so plain bisection suffices.
pub fn invert_f(s: &SMultiset, j: usize, w: f64) -> Option<f64> {
    let d = s.d();
    let bisect = |lo: f64, hi: f64, map: &dyn Fn(f64) -> f64| -> f64 {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f_of_u(s, map(m)) < w {
                a = m;
            } else {
                b = m;
            }
            if b - a <= f64::EPSILON * m.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        map(0.5 * (a + b))
    };
    if j == 0 {
        // E_0 through ∞, with u = −1/τ for τ ∈ (−1/σ_1, ∞); f runs over (−∞, 1).
        if w >= 1.0 {
            return None;
        }
        let map = |tau: f64| if tau == 0.0 { f64::INFINITY } else { -1.0 / tau };
        let mut hi = 1.0;
        while f_of_u(s, map(hi)) < w {
            hi *= 2.0;
            if hi > 1e300 {
                return None;
            }
        }
        return Some(bisect(-1.0 / s.sigmas[0], hi, &map));
    }
    if j == d {
        if w <= 1.0 {
            return None;
        }
        return Some(bisect(0.0, s.sigmas[d - 1], &|u| u));
    }
    Some(bisect(s.sigmas[j], s.sigmas[j - 1], &|u| u))
}

/// A point of the frozen boundary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenPoint {
    pub zeta: f64,
    pub x: f64,
    pub y: f64,
}

/// (x, y) with ζ a real double root of the (x,y)-companion equation, or
/// `None` when ζ is not on the boundary (or is a branch point).
pub fn frozen_point(model: &LimitModel, zeta: f64) -> Option<FrozenPoint> {
    if !zeta.is_finite() || (model.zero_in_j && zeta == 0.0) {
        return None;
    }
    let z = Complex64::new(zeta, 0.0);
    let w = zeta * model.sigma_fn(z).re;
    let p = model.p() as f64;
    let log_q = model.log_q(z);
    if !log_q.re.is_finite() {
        return None;
    }
    let count = (-log_q.im * p / PI).round();
    let j = (0..=model.s.d()).find(|&j| (model.s.varsigma(j) * p - count).abs() < 1e-6)?;
    let u = invert_f(&model.s, j, w)?;
    let ex = zeta * u;
    if !(ex > 0.0 && ex.is_finite()) {
        return None;
    }
    let x = ex.ln();
    let log_p = model.log_p(x, z);
    if (log_p.im - log_q.im).abs() > 1e-6 {
        return None;
    }
    Some(FrozenPoint { zeta, x, y: log_q.re - log_p.re })
}

/// What happens to the boundary as ζ approaches an end of its component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointKind {
    /// y → +∞ while x → the kink (a singular point).
    Tentacle,
    /// The curve reaches a finite point (slope-increasing kink).
    Finite,
    /// ζ → 0 or ∞ from an infinite end of the wall.
    InfiniteEnd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenSegment {
    /// Component of ℝ̂ ∖ 𝒥 as (left end, right end) in circle order; ±∞ allowed.
    pub component: (f64, f64),
    pub endpoint_kinds: (EndpointKind, EndpointKind),
    pub points: Vec<FrozenPoint>,
    /// Indices into `points` where both dx/dζ and dy/dζ change sign.
    pub cusps: Vec<usize>,
}

/// A branch point of 𝒥 together with its kink.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JunctionPoint {
    pub zeta: f64,
    pub kind: EndpointKind,
    /// The kink V it belongs to (±∞ for 0 and ∞).
    pub kink: f64,
}

/// 𝒥 in increasing order on ℝ (0 first if present); ∞ last if present.
pub fn junction_points(model: &LimitModel) -> Vec<JunctionPoint> {
    let mut out = Vec::new();
    if model.zero_in_j {
        out.push(JunctionPoint { zeta: 0.0, kind: EndpointKind::InfiniteEnd, kink: f64::NEG_INFINITY });
    }
    for &(zeta, l) in &model.junctions {
        if out.iter().any(|j: &JunctionPoint| (j.zeta - zeta).abs() <= 1e-14 * zeta.abs().max(1.0)) {
            continue;
        }
        let bw = &model.bw;
        let kind = if bw.slope_right_of_kink(l) < bw.slope_left_of_kink(l) && l > 0 && l < bw.n() {
            EndpointKind::Tentacle
        } else {
            EndpointKind::Finite
        };
        out.push(JunctionPoint { zeta, kind, kink: bw.kinks[l] });
    }
    if model.infinity_in_j {
        out.push(JunctionPoint { zeta: f64::INFINITY, kind: EndpointKind::InfiniteEnd, kink: f64::INFINITY });
    }
    out
}

fn angle(z: f64) -> f64 {
    if z.is_infinite() {
        PI
    } else {
        2.0 * z.atan()
    }
}

/// The frozen boundary: one segment per component of ℝ̂ ∖ 𝒥, each sampled
/// at `samples` parameter values clustered toward its ends.
pub fn frozen_boundary(model: &LimitModel, samples: usize) -> Result<Vec<FrozenSegment>> {
    let js = junction_points(model);
    let mut segments = Vec::new();
    let m = js.len();
    if m == 0 {
        return Ok(segments);
    }
    for i in 0..m {
        let (a, b) = (js[i], js[(i + 1) % m]);
        let ta = angle(a.zeta);
        let mut tb = angle(b.zeta);
        if tb <= ta {
            tb += 2.0 * PI;
        }
        let mut points = Vec::with_capacity(samples);
        for k in 1..=samples {
            let s = (1.0 - (PI * k as f64 / (samples + 1) as f64).cos()) / 2.0;
            let th = ta + (tb - ta) * s;
            let zeta = (th / 2.0).tan();
            if zeta.abs() > 1e15 {
                continue;
            }
            if let Some(pt) = frozen_point(model, zeta) {
                points.push(pt);
            }
        }
        let cusps = find_cusps(&points);
        segments.push(FrozenSegment { component: (a.zeta, b.zeta), endpoint_kinds: (a.kind, b.kind), points, cusps });
    }
    Ok(segments)
}

fn find_cusps(points: &[FrozenPoint]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 1..points.len().saturating_sub(1) {
        let (a, b, c) = (points[i - 1], points[i], points[i + 1]);
        let (dx1, dx2) = (b.x - a.x, c.x - b.x);
        let (dy1, dy2) = (b.y - a.y, c.y - b.y);
        if dx1 * dx2 < 0.0 && dy1 * dy2 < 0.0 {
            out.push(i);
        }
    }
    out
}

/// Limit of (x, y) as ζ approaches a junction from either side; a tentacle
/// shows x → V with y → +∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tentacle {
    pub junction: f64,
    pub kink: f64,
    /// x reached at the closest sample (|ζ − J| = 1e−12·J).
    pub x_limit: f64,
    pub y_at_sample: f64,
}

/// The tentacles of the frozen boundary: junctions where y diverges.
pub fn tentacles(model: &LimitModel) -> Vec<Tentacle> {
    let mut out = Vec::new();
    for j in junction_points(model) {
        if !j.zeta.is_finite() || j.zeta == 0.0 {
            continue;
        }
        let side = |sign: f64| frozen_point(model, j.zeta * (1.0 + sign * 1e-12));
        let best = [side(1.0), side(-1.0)].into_iter().flatten().max_by(|a, b| a.y.total_cmp(&b.y));
        if let Some(pt) = best {
            let far = [frozen_point(model, j.zeta * (1.0 + 1e-6)), frozen_point(model, j.zeta * (1.0 - 1e-6))]
                .into_iter()
                .flatten()
                .map(|p| p.y)
                .fold(f64::NEG_INFINITY, f64::max);
            // Divergence: y keeps growing like −log|ζ − J| as ζ → J.
            if pt.y > far + 5.0 {
                out.push(Tentacle { junction: j.zeta, kink: j.kink, x_limit: pt.x, y_at_sample: pt.y });
            }
        }
    }
    out
}

/// Distance from (x, y) to the sampled boundary, as a polyline.
pub fn distance_to_boundary(segments: &[FrozenSegment], x: f64, y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for seg in segments {
        for w in seg.points.windows(2) {
            let (ax, ay, bx, by) = (w[0].x, w[0].y, w[1].x, w[1].y);
            let (dx, dy) = (bx - ax, by - ay);
            let len2 = dx * dx + dy * dy;
            let t = if len2 > 0.0 { (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((x - ax - t * dx).hypot(y - ay - t * dy));
        }
    }
    best
}

/// Liquid/frozen transitions on a grid over `xs × ys`, returning the
/// largest distance (in units of `step`) from a transition cell to the
/// curve. Cells on or below the wall are skipped.
pub fn grid_boundary_mismatch(model: &LimitModel, segments: &[FrozenSegment], xs: &[f64], ys: &[f64]) -> (usize, f64) {
    let step = (xs[1] - xs[0]).abs().max((ys[1] - ys[0]).abs());
    let liquid: Vec<Vec<bool>> = crate::par::map(xs, |&x| ys.iter().map(|&y| model.is_liquid(x, y)).collect());
    let mut transitions = 0;
    let mut worst: f64 = 0.0;
    for i in 0..xs.len() {
        for k in 0..ys.len() {
            if ys[k] <= model.bw.b(xs[i]) + step {
                continue;
            }
            let right = i + 1 < xs.len() && liquid[i][k] != liquid[i + 1][k];
            let up = k + 1 < ys.len() && liquid[i][k] != liquid[i][k + 1];
            if right || up {
                transitions += 1;
                let (mx, my) = if right {
                    (0.5 * (xs[i] + xs[i + 1]), ys[k])
                } else {
                    (xs[i], 0.5 * (ys[k] + ys[k + 1]))
                };
                worst = worst.max(distance_to_boundary(segments, mx, my) / step);
            }
        }
    }
    (transitions, worst)
}

/// The three-kink wall with weights (2, 2, ¼) and slopes 1, ⅔, ⅓, 0 at
/// kinks −Δ, 0, Δ, anchored at ℬ(0) = 0.
pub fn three_tentacle_model(delta: f64) -> Result<LimitModel> {
    let s = SMultiset::from_weights(&[2.0, 2.0, 0.25])?;
    let bw = LimitBackWall::new(
        vec![f64::NEG_INFINITY, -delta, 0.0, delta, f64::INFINITY],
        vec![1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0],
        (0.0, 0.0),
    )?;
    LimitModel::new(bw, s)
}

/// Weights (4, ¼, 2, ½, 5/4, 4/5) with a single slope-½ piece on [−3, 3].
pub fn single_piece_model() -> Result<LimitModel> {
    let s = SMultiset::from_weights(&[4.0, 0.25, 2.0, 0.5, 1.25, 0.8])?;
    let bw = LimitBackWall::new(vec![-3.0, 3.0], vec![0.5], (0.0, 0.0))?;
    LimitModel::new(bw, s)
}
