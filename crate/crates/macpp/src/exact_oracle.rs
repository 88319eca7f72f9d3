// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Brute-force ground truth by enumeration: expectations, the two-weight
//! distribution cross-check, and joint cumulants.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{for_each_skew_pp, DiscreteBackWall, Partition, SkewPlanePartition};
use crate::error::{Error, Result};
use crate::macdonald::{log_measure_weight, log_measure_weight_via_coefficients, log_partition_function_exact, WeightSpec};
use crate::par;

/// Default enumeration budget (cells × cap).
pub const DEFAULT_BUDGET: u128 = 4096;

/// Kahan–Neumaier accumulator.
#[derive(Clone, Copy, Debug, Default)]
struct Acc {
    sum: f64,
    comp: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Every configuration on `wall` with entries ≤ `cap`, grouped into shards
/// keyed by the first interior diagonal.
fn shards(wall: &Arc<DiscreteBackWall>, cap: u32, budget: u128) -> Result<Vec<Vec<SkewPlanePartition>>> {
    let estimate = wall.cells() as u128 * cap.max(1) as u128;
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }
    let mut map: BTreeMap<Vec<u32>, Vec<SkewPlanePartition>> = BTreeMap::new();
    for_each_skew_pp(wall, cap, |d| {
        let key = d.first().map(|p: &Partition| p.parts().to_vec()).unwrap_or_default();
        map.entry(key).or_default().push(SkewPlanePartition::new_unchecked(wall.clone(), d.to_vec()));
    });
    Ok(map.into_values().collect())
}

/// An enumeration expectation with the probability mass lost to the cap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    /// 1 − Z_cap/Z: mass of configurations exceeding the cap.
    pub tail_mass: f64,
    pub count: usize,
    pub cap: u32,
}

/// Σ f·w / Σ w over configurations with entries ≤ `cap`.
pub fn exact_expectation<F>(wall: &DiscreteBackWall, spec: &WeightSpec, f: F, cap: u32) -> Result<Expectation>
where
    F: Fn(&SkewPlanePartition) -> f64 + Sync,
{
    let vals = exact_expectations(wall, spec, |pp| vec![f(pp)], cap, DEFAULT_BUDGET)?;
    Ok(vals.into_iter().next().unwrap())
}

/// Several expectations in one enumeration pass; `f` returns one value per
/// observable (the same length for every configuration).
pub fn exact_expectations<F>(
    wall: &DiscreteBackWall,
    spec: &WeightSpec,
    f: F,
    cap: u32,
    budget: u128,
) -> Result<Vec<Expectation>>
where
    F: Fn(&SkewPlanePartition) -> Vec<f64> + Sync,
{
    let wall = Arc::new(wall.clone());
    let shards = shards(&wall, cap, budget)?;
    let log_z = log_partition_function_exact(&wall, spec)?;
    // Each shard returns (Σ w, Σ f·w, count) with w = exp(log w − log Z).
    let parts = par::map(&shards, |shard| -> Result<(Acc, Vec<Acc>, usize)> {
        let mut zw = Acc::default();
        let mut fw: Vec<Acc> = Vec::new();
        for pp in shard {
            let w = (log_measure_weight(pp, spec)? - log_z).exp();
            zw.add(w);
            let vals = f(pp);
            if fw.is_empty() {
                fw = vec![Acc::default(); vals.len()];
            }
            for (a, v) in fw.iter_mut().zip(vals) {
                a.add(v * w);
            }
        }
        Ok((zw, fw, shard.len()))
    });
    let mut z = Acc::default();
    let mut fsum: Vec<Acc> = Vec::new();
    let mut count = 0;
    for part in parts {
        let (zw, fw, c) = part?;
        z.add(zw.value());
        if fsum.is_empty() {
            fsum = vec![Acc::default(); fw.len()];
        }
        for (a, b) in fsum.iter_mut().zip(fw) {
            a.add(b.value());
        }
        count += c;
    }
    let zc = z.value();
    Ok(fsum
        .iter()
        .map(|a| Expectation { value: a.value() / zc, tail_mass: (1.0 - zc).max(0.0), count, cap })
        .collect())
}

/// Normalized probabilities of every capped configuration under both weight
/// descriptions.
pub fn normalized_weights(wall: &DiscreteBackWall, spec: &WeightSpec, cap: u32) -> Result<Vec<(SkewPlanePartition, f64, f64)>> {
    let wall = Arc::new(wall.clone());
    let all: Vec<SkewPlanePartition> = shards(&wall, cap, DEFAULT_BUDGET)?.into_iter().flatten().collect();
    let logs = par::map(&all, |pp| -> Result<(f64, f64)> {
        Ok((log_measure_weight(pp, spec)?, log_measure_weight_via_coefficients(pp, spec, 1.0)))
    });
    let logs: Vec<(f64, f64)> = logs.into_iter().collect::<Result<_>>()?;
    let m1 = logs.iter().map(|l| l.0).fold(f64::NEG_INFINITY, f64::max);
    let m2 = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut z1, mut z2) = (Acc::default(), Acc::default());
    for l in &logs {
        z1.add((l.0 - m1).exp());
        z2.add((l.1 - m2).exp());
    }
    let (lz1, lz2) = (m1 + z1.value().ln(), m2 + z2.value().ln());
    Ok(all.into_iter().zip(logs).map(|(pp, l)| (pp, (l.0 - lz1).exp(), (l.1 - lz2).exp())).collect())
}

/// max |p₁/p₂ − 1| between the turn-weight and coefficient-product
/// distributions, each normalized over the capped support.
pub fn distribution_crosscheck(wall: &DiscreteBackWall, spec: &WeightSpec, cap: u32) -> Result<f64> {
    Ok(normalized_weights(wall, spec, cap)?.iter().map(|(_, p1, p2)| (p1 / p2 - 1.0).abs()).fold(0.0, f64::max))
}

/// All set partitions of {0,…,n−1} (restricted-growth strings), as blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut a = vec![0usize; n];
    loop {
        let nb = a.iter().max().unwrap() + 1;
        let mut blocks = vec![Vec::new(); nb];
        for (i, &b) in a.iter().enumerate() {
            blocks[b].push(i);
        }
        out.push(blocks);
        // Next restricted-growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return out;
            }
            let max_prefix = a[..i].iter().copied().max().unwrap();
            if a[i] <= max_prefix {
                a[i] += 1;
                for x in &mut a[i + 1..] {
                    *x = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// κ(v_1,…,v_ν) = Σ_{partitions} (−1)^{d−1}(d−1)! ∏_ℓ E[∏_{i∈U_ℓ} v_i],
/// given a mixed-moment oracle on index subsets.
pub fn cumulant<M: FnMut(&[usize]) -> f64>(order: usize, mut moment: M) -> Result<f64> {
    if order == 0 || order > 4 {
        return Err(Error::Other(format!("cumulant order {order} outside 1..=4")));
    }
    let mut total = 0.0;
    for blocks in set_partitions(order) {
        let d = blocks.len();
        let fact: f64 = (1..d).map(|i| i as f64).product();
        let sign = if d % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * fact * blocks.iter().map(|b| moment(b)).product::<f64>();
    }
    Ok(total)
}

/// Cumulant of exact observables `vars[i](pp)` under the capped measure.
pub fn exact_cumulant(
    wall: &DiscreteBackWall,
    spec: &WeightSpec,
    vars: &[&(dyn Fn(&SkewPlanePartition) -> f64 + Sync)],
    cap: u32,
) -> Result<f64> {
    let order = vars.len();
    let subsets: Vec<Vec<usize>> = (1..(1usize << order))
        .map(|mask| (0..order).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    let ex = exact_expectations(
        wall,
        spec,
        |pp| {
            let v: Vec<f64> = vars.iter().map(|f| f(pp)).collect();
            subsets.iter().map(|s| s.iter().map(|&i| v[i]).product()).collect()
        },
        cap,
        DEFAULT_BUDGET,
    )?;
    cumulant(order, |block| {
        let mask: usize = block.iter().map(|i| 1 << i).sum();
        ex[mask - 1].value
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::SkewSupport;
    use crate::observables::{moment_k1, wp};

    #[test]
    fn normalization_and_geometric_volume() {
        let wall = SkewSupport::rectangle(1, 1).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        let one = exact_expectation(&wall, &spec, |_| 1.0, 30).unwrap();
        assert!((one.value - 1.0).abs() < 1e-15);
        let vol = exact_expectation(&wall, &spec, |pp| pp.volume() as f64, 40).unwrap();
        assert!((vol.value - 0.3 / 0.7).abs() < 1e-12);
        assert!(vol.tail_mass < 1e-15);
    }

    #[test]
    fn tail_mass_shrinks_with_cap() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        let a = exact_expectation(&wall, &spec, |pp| pp.volume() as f64, 4).unwrap();
        let b = exact_expectation(&wall, &spec, |pp| pp.volume() as f64, 8).unwrap();
        assert!(b.tail_mass < a.tail_mass);
        assert!((a.value - b.value).abs() < 10.0 * a.tail_mass);
    }

    #[test]
    fn crosscheck_examples() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        assert!(distribution_crosscheck(&wall, &spec, 3).unwrap() < 1e-12);
        let spec = WeightSpec::with_t(0.3, 0.4, 2.0).unwrap();
        assert!(distribution_crosscheck(&wall, &spec, 3).unwrap() < 1e-9);
        let wall = SkewSupport::new(3, 1, Partition::new(vec![1]).unwrap()).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.5, 0.5).unwrap();
        assert!(distribution_crosscheck(&wall, &spec, 3).unwrap() < 1e-9);
    }

    #[test]
    fn expectation_matches_contour_k1() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.3, 1.0).unwrap();
        let (q, t) = (spec.q(), spec.t());
        let ex = exact_expectation(&wall, &spec, |pp| wp(1, pp.diagonal(0), q, t), 40).unwrap();
        assert!((ex.value - moment_k1(&wall, &spec, 0).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn set_partition_counts() {
        let counts: Vec<usize> = (1..=4).map(|n| set_partitions(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15]);
    }

    #[test]
    fn cumulants_of_synthetic_gaussian() {
        // Centered-plus-mean Gaussian triple: moments from Isserlis' theorem.
        let mu = [0.3, -1.2, 2.0];
        let c = [[1.0, 0.4, -0.2], [0.4, 2.0, 0.5], [-0.2, 0.5, 1.5]];
        let moment = |b: &[usize]| -> f64 {
            // E∏(μ_i + X_i) = Σ_{S⊆b} ∏_{i∉S} μ_i · E∏_{i∈S} X_i.
            let n = b.len();
            let mut total = 0.0;
            for mask in 0..(1usize << n) {
                let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| b[i]).collect();
                let rest: f64 = (0..n).filter(|i| mask >> i & 1 == 0).map(|i| mu[b[i]]).product();
                let ex = match s.len() {
                    0 => 1.0,
                    2 => c[s[0]][s[1]],
                    _ => 0.0,
                };
                total += rest * ex;
            }
            total
        };
        assert!((cumulant(1, |_| moment(&[0])).unwrap() - 0.3).abs() < 1e-15);
        let k2 = cumulant(2, |b| moment(&b.iter().map(|&i| [0, 1][i]).collect::<Vec<_>>())).unwrap();
        assert!((k2 - 0.4).abs() < 1e-12);
        let k3 = cumulant(3, |b| moment(b)).unwrap();
        assert!(k3.abs() < 1e-10);
    }

    #[test]
    fn sharding_is_order_independent() {
        let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
        let spec = WeightSpec::with_t(0.3, 0.5, 2.0).unwrap();
        let f = |pp: &SkewPlanePartition| pp.volume() as f64;
        let a = crate::par::with_threads(1, || exact_expectation(&wall, &spec, f, 5).unwrap().value);
        let b = crate::par::with_threads(3, || exact_expectation(&wall, &spec, f, 5).unwrap().value);
        assert_eq!(a, b);
    }
}
