// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Partitions, back walls, skew plane partitions, turns and the height
//! function in α-coordinates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A Young diagram, stored without trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition(format!("{parts:?} is not weakly decreasing")));
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition(parts))
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    /// Number of nonzero parts.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn size(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }

    /// Part `i` with 1-based indexing; zero beyond the length.
    pub fn part(&self, i: usize) -> u32 {
        if i == 0 {
            return u32::MAX;
        }
        self.0.get(i - 1).copied().unwrap_or(0)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Conjugate partition.
    pub fn conjugate(&self) -> Partition {
        let n = self.part(1) as usize;
        let mut c = vec![0u32; n];
        for &p in &self.0 {
            for x in c.iter_mut().take(p as usize) {
                *x += 1;
            }
        }
        Partition(c)
    }

    pub(crate) fn from_raw(parts: Vec<u32>) -> Self {
        Partition::new(parts).expect("raw parts are decreasing")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// μ ≺ λ: λ_1 ≥ μ_1 ≥ λ_2 ≥ μ_2 ≥ …
pub fn interlaces(mu: &Partition, lam: &Partition) -> bool {
    let n = mu.len().max(lam.len()) + 1;
    (1..=n).all(|i| lam.part(i) >= mu.part(i) && mu.part(i) >= lam.part(i + 1))
}

/// The skew shape N^M/μ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewSupport {
    pub n: usize,
    pub m: usize,
    pub mu: Partition,
}

impl SkewSupport {
    pub fn new(n: usize, m: usize, mu: Partition) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidSupport("N and M must be positive".into()));
        }
        if mu.len() > m || mu.part(1) as usize > n {
            return Err(Error::InvalidSupport(format!("{mu:?} does not fit in {n}^{m}")));
        }
        Ok(SkewSupport { n, m, mu })
    }

    pub fn rectangle(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, Partition::empty())
    }

    /// Cell (i, j), 1-based, lies in N^M/μ.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= 1 && i <= self.m && j <= self.n && j as u32 > self.mu.part(i)
    }

    pub fn cells(&self) -> usize {
        self.n * self.m - self.mu.size() as usize
    }

    /// Back wall in the coordinates where I = (−M, N).
    pub fn wall(&self) -> DiscreteBackWall {
        let mut bits = Vec::with_capacity(self.n + self.m);
        let mut col = 0u32;
        for row in (1..=self.m).rev() {
            let target = self.mu.part(row);
            while col < target {
                bits.push(false);
                col += 1;
            }
            bits.push(true);
        }
        while (col as usize) < self.n {
            bits.push(false);
            col += 1;
        }
        DiscreteBackWall::new(-(self.m as i64), -(self.m as i64), bits)
    }
}

/// Slope bits B′(e) ∈ {0,1} on the half-integer points of I = (v_min, v_max).
/// `bits[k]` is the slope on the edge between `v_min + k` and `v_min + k + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteBackWall {
    pub v_min: i64,
    /// B(v_min).
    pub b_min: i64,
    pub bits: Vec<bool>,
}

impl DiscreteBackWall {
    pub fn new(v_min: i64, b_min: i64, bits: Vec<bool>) -> Self {
        DiscreteBackWall { v_min, b_min, bits }
    }

    pub fn v_max(&self) -> i64 {
        self.v_min + self.bits.len() as i64
    }

    /// Interior diagonals v_min < v < v_max.
    pub fn interior(&self) -> std::ops::Range<i64> {
        self.v_min + 1..self.v_max()
    }

    /// B′ on the edge (v, v+1).
    pub fn bit_after(&self, v: i64) -> bool {
        self.bits[(v - self.v_min) as usize]
    }

    /// B(v) for v_min ≤ v ≤ v_max.
    pub fn b(&self, v: i64) -> i64 {
        let k = (v - self.v_min) as usize;
        self.b_min + self.bits[..k].iter().filter(|&&x| x).count() as i64
    }

    /// Number of cells on diagonal v: min(#ups before v, #rights after v).
    pub fn diag_len(&self, v: i64) -> usize {
        if v <= self.v_min || v >= self.v_max() {
            return 0;
        }
        let k = (v - self.v_min) as usize;
        let ups = self.bits[..k].iter().filter(|&&x| x).count();
        let rights = self.bits[k..].iter().filter(|&&x| !x).count();
        ups.min(rights)
    }

    /// Skew support with the same shape, plus the shift `v_min + M` between
    /// diagonal labels here and the labels j − i of the support.
    pub fn support(&self) -> Result<(SkewSupport, i64)> {
        let m = self.bits.iter().filter(|&&x| x).count();
        let n = self.bits.len() - m;
        let mut mu = vec![0u32; m];
        let mut col = 0u32;
        let mut row = m;
        for &b in &self.bits {
            if b {
                mu[row - 1] = col;
                row -= 1;
            } else {
                col += 1;
            }
        }
        let mu = Partition::new(mu)?;
        Ok((SkewSupport::new(n.max(1), m.max(1), mu)?, self.v_min + m as i64))
    }

    pub fn cells(&self) -> usize {
        self.interior().map(|v| self.diag_len(v)).sum()
    }
}

/// A skew plane partition, stored by diagonal sections.
#[derive(Clone, PartialEq, Eq)]
pub struct SkewPlanePartition {
    wall: Arc<DiscreteBackWall>,
    diagonals: Vec<Partition>,
}

impl fmt::Debug for SkewPlanePartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewPlanePartition")
            .field("v_min", &self.wall.v_min)
            .field("diagonals", &self.diagonals)
            .finish()
    }
}

impl SkewPlanePartition {
    /// Build from the interior diagonals, checking lengths and interlacing.
    pub fn new(wall: Arc<DiscreteBackWall>, diagonals: Vec<Partition>) -> Result<Self> {
        let expected = wall.bits.len().saturating_sub(1);
        if diagonals.len() != expected {
            return Err(Error::InvalidPlanePartition(format!(
                "expected {expected} diagonals, got {}",
                diagonals.len()
            )));
        }
        let pp = SkewPlanePartition { wall, diagonals };
        pp.validate()?;
        Ok(pp)
    }

    pub fn empty(wall: Arc<DiscreteBackWall>) -> Self {
        let n = wall.bits.len().saturating_sub(1);
        SkewPlanePartition { wall, diagonals: vec![Partition::empty(); n] }
    }

    pub(crate) fn new_unchecked(wall: Arc<DiscreteBackWall>, diagonals: Vec<Partition>) -> Self {
        SkewPlanePartition { wall, diagonals }
    }

    fn validate(&self) -> Result<()> {
        let w = &self.wall;
        for v in w.interior() {
            let p = self.diagonal(v);
            if p.len() > w.diag_len(v) {
                return Err(Error::InvalidPlanePartition(format!(
                    "diagonal {v} has length {} > {}",
                    p.len(),
                    w.diag_len(v)
                )));
            }
        }
        for v in w.v_min..w.v_max() {
            let (a, b) = (self.diagonal(v), self.diagonal(v + 1));
            let ok = if w.bit_after(v) { interlaces(a, b) } else { interlaces(b, a) };
            if !ok {
                return Err(Error::InvalidPlanePartition(format!(
                    "diagonals {v} and {} do not interlace",
                    v + 1
                )));
            }
        }
        Ok(())
    }

    pub fn wall(&self) -> &DiscreteBackWall {
        &self.wall
    }

    pub fn wall_arc(&self) -> &Arc<DiscreteBackWall> {
        &self.wall
    }

    /// π^v; empty on the boundary and outside I.
    pub fn diagonal(&self, v: i64) -> &Partition {
        static EMPTY: Partition = Partition(Vec::new());
        if v <= self.wall.v_min || v >= self.wall.v_max() {
            return &EMPTY;
        }
        &self.diagonals[(v - self.wall.v_min - 1) as usize]
    }

    pub fn diagonals(&self) -> &[Partition] {
        &self.diagonals
    }

    pub fn diagonal_sections(&self) -> Vec<(i64, Partition)> {
        self.wall.interior().map(|v| (v, self.diagonal(v).clone())).collect()
    }

    pub fn volume(&self) -> u64 {
        self.diagonals.iter().map(|p| p.size()).sum()
    }

    /// Range of values the i-th part of π^v (1-based) can take with every
    /// other entry fixed; `u32::MAX` marks no upper bound.
    pub fn part_bounds(&self, v: i64, i: usize) -> (u32, u32) {
        let w = &self.wall;
        if i == 0 || i > w.diag_len(v) {
            return (0, 0);
        }
        let me = self.diagonal(v);
        let mut lo = me.part(i + 1);
        let mut hi = if i == 1 { u32::MAX } else { me.part(i - 1) };
        // neighbor above the relation: π^v ≺ π^u gives π^u_{i+1} ≤ c ≤ π^u_i
        let mut below = |u: &Partition| {
            hi = hi.min(u.part(i));
            lo = lo.max(u.part(i + 1));
        };
        let (next, prev) = (self.diagonal(v + 1), self.diagonal(v - 1));
        if w.bit_after(v) {
            below(next);
        }
        if !w.bit_after(v - 1) {
            below(prev);
        }
        // π^u ≺ π^v gives π^u_i ≤ c ≤ π^u_{i−1}
        let mut above = |u: &Partition| {
            lo = lo.max(u.part(i));
            if i > 1 {
                hi = hi.min(u.part(i - 1));
            }
        };
        if !w.bit_after(v) {
            above(next);
        }
        if w.bit_after(v - 1) {
            above(prev);
        }
        (lo, hi)
    }

    /// Overwrite the i-th part of π^v; the caller keeps the value within
    /// [`part_bounds`](Self::part_bounds).
    pub(crate) fn set_part(&mut self, v: i64, i: usize, value: u32) {
        let d = &mut self.diagonals[(v - self.wall.v_min - 1) as usize].0;
        if d.len() < i {
            d.resize(i, 0);
        }
        d[i - 1] = value;
        while d.last() == Some(&0) {
            d.pop();
        }
        debug_assert!(self.valid_around(v), "set_part broke interlacing at ({v}, {i})");
    }

    /// Length and interlacing checks restricted to the pairs touching π^v.
    pub fn valid_around(&self, v: i64) -> bool {
        let w = &self.wall;
        if self.diagonal(v).len() > w.diag_len(v) {
            return false;
        }
        (v - 1..=v).filter(|&u| u >= w.v_min && u < w.v_max()).all(|u| {
            let (a, b) = (self.diagonal(u), self.diagonal(u + 1));
            if w.bit_after(u) {
                interlaces(a, b)
            } else {
                interlaces(b, a)
            }
        })
    }

    /// Build from a grid `entries[i-1][j-1]` over N^M (cells of μ ignored).
    pub fn from_grid(support: &SkewSupport, entries: &[Vec<u32>]) -> Result<Self> {
        let wall = Arc::new(support.wall());
        let get = |i: usize, j: usize| -> u32 {
            entries.get(i - 1).and_then(|r| r.get(j - 1)).copied().unwrap_or(0)
        };
        for i in 1..=support.m {
            for j in 1..=support.n {
                if !support.contains(i, j) {
                    continue;
                }
                let x = get(i, j);
                if (support.contains(i + 1, j) && get(i + 1, j) > x)
                    || (support.contains(i, j + 1) && get(i, j + 1) > x)
                {
                    return Err(Error::InvalidPlanePartition(format!(
                        "entries not weakly decreasing at ({i},{j})"
                    )));
                }
            }
        }
        let mut diagonals = Vec::new();
        for v in wall.interior() {
            let mut parts = Vec::new();
            for i in 1..=support.m {
                let j = i as i64 + v;
                if j >= 1 && support.contains(i, j as usize) {
                    parts.push(get(i, j as usize));
                }
            }
            diagonals.push(Partition::new(parts)?);
        }
        SkewPlanePartition::new(wall, diagonals)
    }

    /// Grid view over N^M of the associated support (zeros on μ).
    pub fn grid(&self) -> Result<(SkewSupport, Vec<Vec<u32>>)> {
        let (support, shift) = self.wall.support()?;
        let mut g = vec![vec![0u32; support.n]; support.m];
        for v in self.wall.interior() {
            let lbl = v - shift;
            let p = self.diagonal(v);
            let mut k = 0usize;
            for i in 1..=support.m {
                let j = i as i64 + lbl;
                if j >= 1 && support.contains(i, j as usize) {
                    k += 1;
                    g[i - 1][j as usize - 1] = p.part(k);
                }
            }
        }
        Ok((support, g))
    }
}

/// Whether a turn goes from a left-leaning to a square tile (internal) or the
/// other way round (external), reading left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TurnKind {
    Internal,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub x: i64,
    pub y_minus: f64,
    pub y_plus: f64,
    pub kind: TurnKind,
    /// Number of horizontal lozenges directly above on the same line.
    pub above: usize,
}

/// A vertical unit edge in α-coordinates: y = α·a + b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Edge {
    pub a: i64,
    pub b: i64,
    /// Horizontal lozenges above it on the line.
    pub above: usize,
}

/// The first `k` vertical edges on line v, from the bottom up.
pub(crate) fn edges_on_line(pp: &SkewPlanePartition, v: i64, k: usize) -> Vec<Edge> {
    let p = pp.diagonal(v);
    let bv = pp.wall.b(v);
    let l = p.len();
    let mut out = Vec::with_capacity(k);
    for i in (1..=l).rev() {
        let lo = p.part(i + 1) as i64;
        let hi = p.part(i) as i64;
        for a in lo..hi {
            if out.len() == k {
                return out;
            }
            out.push(Edge { a, b: bv - i as i64, above: i });
        }
    }
    let mut a = p.part(1) as i64;
    while out.len() < k {
        out.push(Edge { a, b: bv, above: 0 });
        a += 1;
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Tile {
    Square,
    Lean,
}

fn tile(l: &Edge, r: &Edge) -> Tile {
    assert_eq!(l.a, r.a, "edges matched across a strip must have equal α-part");
    match r.b - l.b {
        0 => Tile::Square,
        1 => Tile::Lean,
        d => panic!("impossible tile offset {d}"),
    }
}

/// Turns on line x among the lowest `window` edges (default: every edge lying
/// below some horizontal lozenge of the three lines involved, plus one).
pub fn turns_in_window(pp: &SkewPlanePartition, alpha: f64, x: i64, window: usize) -> Result<Vec<Turn>> {
    let w = &pp.wall;
    if x <= w.v_min || x >= w.v_max() {
        return Err(Error::Domain { x, lo: w.v_min, hi: w.v_max() });
    }
    let left = edges_on_line(pp, x - 1, window);
    let mid = edges_on_line(pp, x, window);
    let right = edges_on_line(pp, x + 1, window);
    let mut out = Vec::new();
    for k in 0..window {
        let kind = match (tile(&left[k], &mid[k]), tile(&mid[k], &right[k])) {
            (Tile::Lean, Tile::Square) => TurnKind::Internal,
            (Tile::Square, Tile::Lean) => TurnKind::External,
            _ => continue,
        };
        let y = alpha * mid[k].a as f64 + mid[k].b as f64;
        out.push(Turn { x, y_minus: y, y_plus: y + alpha, kind, above: mid[k].above });
    }
    Ok(out)
}

/// Turns on diagonal x, see [`turns_in_window`].
pub fn turns(pp: &SkewPlanePartition, alpha: f64, x: i64) -> Result<Vec<Turn>> {
    let k = (x - 1..=x + 1).map(|v| pp.diagonal(v).part(1) as usize).max().unwrap_or(0) + 1;
    turns_in_window(pp, alpha, x, k)
}

/// Height function h(x, y) in α-coordinates.
pub fn height_function(pp: &SkewPlanePartition, alpha: f64, x: i64, y: f64) -> Result<f64> {
    let w = &pp.wall;
    if x < w.v_min || x > w.v_max() {
        return Err(Error::Domain { x, lo: w.v_min, hi: w.v_max() });
    }
    let p = pp.diagonal(x);
    let b = w.b(x) as f64;
    let l = p.len();
    let mut s = y - b + (b - l as f64 - y).max(0.0);
    for i in 1..=l {
        let yi = alpha * p.part(i) as f64 - i as f64 + 1.0 + b;
        s += (yi - y).clamp(0.0, 1.0);
    }
    Ok(s / alpha)
}

/// ∫ h(x,y) t^{ky} dy computed segment by segment from the piecewise linear
/// shape of h (independent of the closed form in terms of ℘_k).
pub fn height_exponential_integral(pp: &SkewPlanePartition, alpha: f64, x: i64, t: f64, k: u32) -> Result<f64> {
    let p = pp.diagonal(x);
    let b = pp.wall.b(x) as f64;
    let l = p.len();
    let mut knots = vec![b - l as f64, b];
    for i in 1..=l {
        let yi = alpha * p.part(i) as f64 - i as f64 + 1.0 + b;
        knots.push(yi);
        knots.push(yi - 1.0);
    }
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();
    let lam = -(k as f64) * t.ln();
    // ∫_a^b (c0 + c1 y) e^{-λy} dy
    let seg = |a: f64, bb: f64, c0: f64, c1: f64| -> f64 {
        let prim = |y: f64| -> f64 {
            if y.is_infinite() {
                return 0.0;
            }
            -(c0 + c1 * y) * (-lam * y).exp() / lam - c1 * (-lam * y).exp() / (lam * lam)
        };
        prim(bb) - prim(a)
    };
    let h = |y: f64| height_function(pp, alpha, x, y).unwrap();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, bb) = (w[0], w[1]);
        let (ha, hb) = (h(a), h(bb));
        let c1 = (hb - ha) / (bb - a);
        total += seg(a, bb, ha - c1 * a, c1);
    }
    let last = *knots.last().unwrap();
    let hl = h(last);
    total += seg(last, f64::INFINITY, hl - last / alpha, 1.0 / alpha);
    Ok(total)
}

/// Visit every skew plane partition on `wall` with entries ≤ `cap`.
pub fn for_each_skew_pp<F: FnMut(&[Partition])>(wall: &DiscreteBackWall, cap: u32, mut f: F) {
    let interior: Vec<i64> = wall.interior().collect();
    let mut stack: Vec<Partition> = Vec::with_capacity(interior.len());
    fn rec<F: FnMut(&[Partition])>(
        wall: &DiscreteBackWall,
        interior: &[i64],
        cap: u32,
        stack: &mut Vec<Partition>,
        f: &mut F,
    ) {
        let idx = stack.len();
        if idx == interior.len() {
            f(stack);
            return;
        }
        let v = interior[idx];
        let prev = if idx == 0 { Partition::empty() } else { stack[idx - 1].clone() };
        let len = wall.diag_len(v);
        let grow = wall.bit_after(v - 1);
        let mut bounds = Vec::with_capacity(len);
        for i in 1..=len {
            let (lo, hi) = if grow {
                (prev.part(i), if i == 1 { cap } else { prev.part(i - 1).min(cap) })
            } else {
                (prev.part(i + 1), prev.part(i))
            };
            if lo > hi {
                return;
            }
            bounds.push((lo, hi));
        }
        // Beyond `len` the interlacing forces zeros; reject otherwise.
        if grow {
            if prev.part(len + 1) > 0 {
                return;
            }
        } else if prev.part(len + 2) > 0 {
            return;
        }
        let mut cur: Vec<u32> = bounds.iter().map(|b| b.0).collect();
        loop {
            stack.push(Partition::from_raw(cur.clone()));
            rec(wall, interior, cap, stack, f);
            stack.pop();
            let mut i = 0;
            loop {
                if i == cur.len() {
                    return;
                }
                if cur[i] < bounds[i].1 {
                    cur[i] += 1;
                    for j in 0..i {
                        cur[j] = bounds[j].0;
                    }
                    break;
                }
                i += 1;
            }
            // The intervals are nested, so `cur` stays weakly decreasing.
        }
    }
    if interior.is_empty() {
        f(&[]);
        return;
    }
    rec(wall, &interior, cap, &mut stack, &mut f);
}

/// All skew plane partitions on `support` with entries ≤ `height_cap`.
/// Refuses when cells × cap exceeds `budget`.
pub fn enumerate_skew_pp(support: &SkewSupport, height_cap: u32, budget: u128) -> Result<Vec<SkewPlanePartition>> {
    enumerate_on_wall(&Arc::new(support.wall()), height_cap, budget)
}

pub fn enumerate_on_wall(wall: &Arc<DiscreteBackWall>, height_cap: u32, budget: u128) -> Result<Vec<SkewPlanePartition>> {
    let estimate = wall.cells() as u128 * height_cap.max(1) as u128;
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }
    let mut out = Vec::new();
    for_each_skew_pp(wall, height_cap, |d| {
        out.push(SkewPlanePartition::new_unchecked(wall.clone(), d.to_vec()));
    });
    Ok(out)
}
