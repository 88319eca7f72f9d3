// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Single-cell Markov chains for the periodic Macdonald measure, with
//! batch-means errors, R̂ diagnostics and jackknifed cumulants.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{height_function, DiscreteBackWall, SkewPlanePartition};
use crate::error::{Error, Result};
use crate::exact_oracle::cumulant;
use crate::macdonald::{log_weight_local, WeightSpec};
use crate::par;

/// Update rule for a single cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// ±1 proposal, accepted with min(1, weight ratio).
    Metropolis,
    /// Exact conditional draw; only for α = 1, where the conditional law of
    /// one entry is a truncated geometric.
    HeatBath,
    /// Heat bath when α = 1, Metropolis otherwise.
    #[default]
    Auto,
}

impl Dynamics {
    fn resolve(self, spec: &WeightSpec) -> Result<Dynamics> {
        match self {
            Dynamics::Auto if spec.alpha == 1.0 => Ok(Dynamics::HeatBath),
            Dynamics::Auto => Ok(Dynamics::Metropolis),
            Dynamics::HeatBath if spec.alpha != 1.0 => {
                Err(Error::InvalidSpec("heat-bath updates need α = 1".into()))
            }
            d => Ok(d),
        }
    }
}

/// Chain plumbing. `burn_in`, `steps` and `thin` count sweeps (one sweep is
/// as many single-cell updates as the wall has cells); `steps` includes
/// the burn-in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub steps: usize,
    pub thin: usize,
    pub wall: DiscreteBackWall,
    pub spec: WeightSpec,
    #[serde(default)]
    pub dynamics: Dynamics,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.steps <= self.burn_in || self.thin == 0 {
            return Err(Error::InvalidSpec(format!(
                "need steps > burn_in and thin > 0 (steps {}, burn_in {}, thin {})",
                self.steps, self.burn_in, self.thin
            )));
        }
        if self.wall.cells() == 0 {
            return Err(Error::InvalidSpec("the wall has no cells".into()));
        }
        Ok(())
    }
}

/// A chain state together with its cell list.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub state: SkewPlanePartition,
    spec: WeightSpec,
    dynamics: Dynamics,
    cells: Vec<(i64, usize)>,
    log_rv: Vec<f64>,
    pub proposed: u64,
    pub accepted: u64,
}

fn cell_list(wall: &DiscreteBackWall) -> Vec<(i64, usize)> {
    wall.interior().flat_map(|v| (1..=wall.diag_len(v)).map(move |i| (v, i))).collect()
}

impl Sampler {
    pub fn new(state: SkewPlanePartition, spec: WeightSpec, dynamics: Dynamics) -> Result<Self> {
        let dynamics = dynamics.resolve(&spec)?;
        let wall = state.wall();
        let cells = cell_list(wall);
        let log_rv = (wall.v_min..=wall.v_max()).map(|v| spec.r_v(v).ln()).collect();
        Ok(Sampler { state, spec, dynamics, cells, log_rv, proposed: 0, accepted: 0 })
    }

    pub fn cells(&self) -> usize {
        self.cells.len()
    }

    fn log_r(&self, v: i64) -> f64 {
        self.log_rv[(v - self.state.wall().v_min) as usize]
    }

    /// One single-cell update at a uniformly chosen cell.
    pub fn step<R: Rng>(&mut self, rng: &mut R) -> Result<bool> {
        let (v, i) = self.cells[rng.random_range(0..self.cells.len())];
        self.proposed += 1;
        let changed = match self.dynamics {
            Dynamics::HeatBath => self.heat_bath(v, i, rng)?,
            _ => self.metropolis(v, i, rng)?,
        };
        if changed {
            self.accepted += 1;
        }
        Ok(changed)
    }

    pub fn sweep<R: Rng>(&mut self, rng: &mut R) -> Result<()> {
        for _ in 0..self.cells.len() {
            self.step(rng)?;
        }
        Ok(())
    }

    fn metropolis<R: Rng>(&mut self, v: i64, i: usize, rng: &mut R) -> Result<bool> {
        let up = rng.random_bool(0.5);
        let c = self.state.diagonal(v).part(i);
        let (lo, hi) = self.state.part_bounds(v, i);
        let new = if up {
            if c >= hi {
                return Ok(false);
            }
            c + 1
        } else {
            if c <= lo {
                return Ok(false);
            }
            c - 1
        };
        let log_ratio = if self.spec.alpha == 1.0 {
            (new as f64 - c as f64) * self.log_r(v)
        } else {
            let before = log_weight_local(&self.state, &self.spec, v)?;
            self.state.set_part(v, i, new);
            let after = log_weight_local(&self.state, &self.spec, v)?;
            self.state.set_part(v, i, c);
            after - before
        };
        if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
            self.state.set_part(v, i, new);
            return Ok(true);
        }
        Ok(false)
    }

    fn heat_bath<R: Rng>(&mut self, v: i64, i: usize, rng: &mut R) -> Result<bool> {
        let c = self.state.diagonal(v).part(i);
        let (lo, hi) = self.state.part_bounds(v, i);
        let new = truncated_geometric(self.log_r(v), lo, hi, rng.random::<f64>())?;
        if new != c {
            self.state.set_part(v, i, new);
        }
        Ok(new != c)
    }
}

/// Draw from P(c) ∝ e^{c·log_ratio} on lo ≤ c ≤ hi (hi = u32::MAX: no bound)
/// by inverting the CDF at `u`.
fn truncated_geometric(log_ratio: f64, lo: u32, hi: u32, u: f64) -> Result<u32> {
    if lo == hi {
        return Ok(lo);
    }
    let unbounded = hi == u32::MAX;
    if unbounded && log_ratio >= 0.0 {
        return Err(Error::InvalidSpec("unbounded entry with s_v·r ≥ 1: the measure is not summable".into()));
    }
    let n = if unbounded { f64::INFINITY } else { (hi - lo) as f64 };
    if log_ratio.abs() < 1e-300 {
        return Ok(lo + (u * (n + 1.0)).floor().min(n) as u32);
    }
    // ρ = e^a < 1 counted from the heavier end: F(k) = (1 − ρ^{k+1})/(1 − ρ^{n+1})
    let a = -log_ratio.abs();
    let mass = if unbounded { 1.0 } else { -(a * (n + 1.0)).exp_m1() };
    let k = ((-u * mass).ln_1p() / a).ceil() - 1.0;
    let k = k.clamp(0.0, n) as u32;
    Ok(if log_ratio < 0.0 { lo + k } else { hi - k })
}

/// One update of a standalone state (cell list rebuilt each call).
pub fn mcmc_step<R: Rng>(state: &mut SkewPlanePartition, spec: &WeightSpec, dynamics: Dynamics, rng: &mut R) -> Result<bool> {
    let mut s = Sampler::new(state.clone(), spec.clone(), dynamics)?;
    let changed = s.step(rng)?;
    *state = s.state;
    Ok(changed)
}

/// All one-step transitions out of `state` with their probabilities
/// (including the holding probability); unbounded heat-bath draws are cut
/// where the remaining mass drops below 1e−18.
pub fn transition_kernel(state: &SkewPlanePartition, spec: &WeightSpec, dynamics: Dynamics) -> Result<Vec<(SkewPlanePartition, f64)>> {
    let sampler = Sampler::new(state.clone(), spec.clone(), dynamics)?;
    let ncell = sampler.cells.len() as f64;
    let mut out: Vec<(SkewPlanePartition, f64)> = Vec::new();
    let mut hold = 0.0;
    for &(v, i) in &sampler.cells {
        let c = state.diagonal(v).part(i);
        let (lo, hi) = state.part_bounds(v, i);
        let with = |value: u32| {
            let mut s = state.clone();
            s.set_part(v, i, value);
            s
        };
        match sampler.dynamics {
            Dynamics::HeatBath => {
                let lr = sampler.log_r(v);
                let top = if hi == u32::MAX { lo + ((-18.0 * 10f64.ln()) / lr).ceil() as u32 + 1 } else { hi };
                let ws: Vec<f64> = (lo..=top).map(|k| ((k - lo) as f64 * lr).exp()).collect();
                let z: f64 = if hi == u32::MAX { 1.0 / (1.0 - lr.exp()) } else { ws.iter().sum() };
                for (k, w) in (lo..=top).zip(ws) {
                    let prob = w / z / ncell;
                    if k == c {
                        hold += prob;
                    } else {
                        out.push((with(k), prob));
                    }
                }
            }
            _ => {
                for new in [c.checked_add(1).filter(|&n| n <= hi), c.checked_sub(1).filter(|&n| n >= lo)] {
                    let Some(new) = new else {
                        hold += 0.5 / ncell;
                        continue;
                    };
                    let s = with(new);
                    let lr = if spec.alpha == 1.0 {
                        (new as f64 - c as f64) * sampler.log_r(v)
                    } else {
                        log_weight_local(&s, spec, v)? - log_weight_local(state, spec, v)?
                    };
                    let acc = lr.exp().min(1.0);
                    out.push((s, 0.5 / ncell * acc));
                    hold += 0.5 / ncell * (1.0 - acc);
                }
            }
        }
    }
    out.push((state.clone(), hold));
    Ok(out)
}

/// Mean, batch-means standard error and R̂ of one recorded observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableStats {
    pub mean: f64,
    pub se: f64,
    pub rhat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    /// samples[chain][draw][observable]
    pub samples: Vec<Vec<Vec<f64>>>,
    pub stats: Vec<ObservableStats>,
    /// All R̂ ≤ 1.05.
    pub converged: bool,
    pub acceptance: f64,
}

impl ChainRun {
    /// Draws of all chains, concatenated chain by chain.
    pub fn pooled(&self) -> Vec<Vec<f64>> {
        self.samples.iter().flatten().cloned().collect()
    }
}

pub const RHAT_LIMIT: f64 = 1.05;
const BATCHES: usize = 20;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Batch-means standard error of the mean of a correlated series.
pub fn batch_means_se(xs: &[f64]) -> f64 {
    let nb = BATCHES.min(xs.len());
    if nb < 2 {
        return f64::INFINITY;
    }
    let size = xs.len() / nb;
    let means: Vec<f64> = (0..nb).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    (var(&means) / nb as f64).sqrt()
}

/// Gelman–Rubin potential scale reduction over chains of equal length.
pub fn rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let w = chains.iter().map(|c| var(&c[..n])).sum::<f64>() / m as f64;
    if w == 0.0 {
        return if var(&means) == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let b = n as f64 * var(&means);
    let v = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (v / w).sqrt()
}

/// Run `n_chains` independent chains from the empty configuration and
/// record `observe` every `thin` sweeps after the burn-in. Chain c uses the
/// ChaCha stream c of the configured seed.
pub fn run_chains<F>(cfg: &ChainConfig, n_chains: usize, observe: F) -> Result<ChainRun>
where
    F: Fn(&SkewPlanePartition) -> Vec<f64> + Sync + Send,
{
    cfg.validate()?;
    let wall = Arc::new(cfg.wall.clone());
    let runs = par::map_range(n_chains, |c| -> Result<(Vec<Vec<f64>>, u64, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let mut s = Sampler::new(SkewPlanePartition::empty(wall.clone()), cfg.spec.clone(), cfg.dynamics)?;
        let mut draws = Vec::new();
        for sweep in 0..cfg.steps {
            s.sweep(&mut rng)?;
            if sweep >= cfg.burn_in && (sweep - cfg.burn_in).is_multiple_of(cfg.thin) {
                draws.push(observe(&s.state));
            }
        }
        Ok((draws, s.proposed, s.accepted))
    });
    let mut samples = Vec::with_capacity(n_chains);
    let (mut proposed, mut accepted) = (0u64, 0u64);
    for r in runs {
        let (d, p, a) = r?;
        samples.push(d);
        proposed += p;
        accepted += a;
    }
    let n_obs = samples.first().and_then(|c| c.first()).map_or(0, Vec::len);
    let stats: Vec<ObservableStats> = (0..n_obs)
        .map(|j| {
            let series: Vec<Vec<f64>> = samples.iter().map(|c| c.iter().map(|d| d[j]).collect()).collect();
            let chain_means: Vec<f64> = series.iter().map(|s| mean(s)).collect();
            let se = series.iter().map(|s| batch_means_se(s).powi(2)).sum::<f64>().sqrt() / n_chains as f64;
            let r = if n_chains >= 2 { rhat(&series) } else { 1.0 };
            ObservableStats { mean: mean(&chain_means), se, rhat: r }
        })
        .collect();
    let converged = stats.iter().all(|s| s.rhat.is_nan() || s.rhat <= RHAT_LIMIT);
    Ok(ChainRun { samples, stats, converged, acceptance: accepted as f64 / proposed.max(1) as f64 })
}

/// ε·h(x, y/ε) at each y of `ys`, as an observable for [`run_chains`].
pub fn height_profile_observable(x: i64, ys: Vec<f64>, epsilon: f64, alpha: f64) -> impl Fn(&SkewPlanePartition) -> Vec<f64> + Sync + Send {
    move |pp| ys.iter().map(|&y| epsilon * height_function(pp, alpha, x, y / epsilon).unwrap_or(f64::NAN)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightProfile {
    pub x: i64,
    pub ys: Vec<f64>,
    pub mean: Vec<f64>,
    /// Batch-means standard errors.
    pub se: Vec<f64>,
    pub converged: bool,
}

/// Mean rescaled height along the column at discrete x.
pub fn empirical_height_profile(cfg: &ChainConfig, n_chains: usize, x: i64, ys: &[f64], epsilon: f64) -> Result<HeightProfile> {
    let obs = height_profile_observable(x, ys.to_vec(), epsilon, cfg.spec.alpha);
    let run = run_chains(cfg, n_chains, obs)?;
    Ok(HeightProfile {
        x,
        ys: ys.to_vec(),
        mean: run.stats.iter().map(|s| s.mean).collect(),
        se: run.stats.iter().map(|s| s.se).collect(),
        converged: run.converged,
    })
}

/// A plug-in joint cumulant with its delete-a-block jackknife error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimate {
    pub indices: Vec<usize>,
    pub value: f64,
    pub jackknife_se: f64,
}

fn plug_in_cumulant(draws: &[&Vec<f64>], idx: &[usize]) -> Result<f64> {
    let n = draws.len() as f64;
    cumulant(idx.len(), |block| draws.iter().map(|d| block.iter().map(|&b| d[idx[b]]).product::<f64>()).sum::<f64>() / n)
}

/// Cumulants κ(v_{i_1}, …, v_{i_ν}) of recorded variables (ν ≤ 4), where
/// each request lists variable indices. Errors come from a jackknife over
/// 20 contiguous blocks, which absorbs short-range autocorrelation.
pub fn empirical_cumulants(draws: &[Vec<f64>], requests: &[Vec<usize>]) -> Result<Vec<CumulantEstimate>> {
    if draws.len() < 2 * BATCHES {
        return Err(Error::Other(format!("need at least {} draws for the jackknife", 2 * BATCHES)));
    }
    let all: Vec<&Vec<f64>> = draws.iter().collect();
    let size = draws.len() / BATCHES;
    requests
        .iter()
        .map(|idx| {
            let value = plug_in_cumulant(&all, idx)?;
            let mut loo = Vec::with_capacity(BATCHES);
            for b in 0..BATCHES {
                let kept: Vec<&Vec<f64>> =
                    all.iter().enumerate().filter(|(k, _)| k / size != b).map(|(_, d)| *d).collect();
                loo.push(plug_in_cumulant(&kept, idx)?);
            }
            let m = mean(&loo);
            let nb = BATCHES as f64;
            let se = ((nb - 1.0) / nb * loo.iter().map(|x| (x - m) * (x - m)).sum::<f64>()).sqrt();
            Ok(CumulantEstimate { indices: idx.clone(), value, jackknife_se: se })
        })
        .collect()
}
