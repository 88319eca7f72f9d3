// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Contour moments against brute-force enumeration on small supports.

use macpp::combinatorics::{DiscreteBackWall, Partition, SkewSupport};
use macpp::exact_oracle::exact_expectations;
use macpp::macdonald::WeightSpec;
use macpp::observables::{covariance, moment_k1, moment_multi, wp};

fn oracle(wall: &DiscreteBackWall, spec: &WeightSpec, xs: &[i64], ks: &[u32]) -> f64 {
    let (q, t) = (spec.q(), spec.t());
    let f = |pp: &macpp::combinatorics::SkewPlanePartition| {
        vec![xs.iter().zip(ks).map(|(&x, &k)| wp(k, pp.diagonal(x), q, t)).product()]
    };
    exact_expectations(wall, spec, f, 10, 1 << 20).unwrap()[0].value
}

fn walls() -> Vec<DiscreteBackWall> {
    vec![
        SkewSupport::rectangle(1, 1).unwrap().wall(),
        SkewSupport::rectangle(2, 2).unwrap().wall(),
        SkewSupport::new(3, 1, Partition::new(vec![1]).unwrap()).unwrap().wall(),
    ]
}

#[test]
fn single_moments_match_enumeration() {
    for wall in walls() {
        for &(t, a) in &[(0.3, 1.0), (0.4, 2.0), (0.5, 0.5)] {
            let spec = WeightSpec::with_t(0.05, t, a).unwrap();
            for x in wall.interior() {
                for k in 1..=2 {
                    let c = moment_multi(&wall, &spec, &[x], &[k]).unwrap().value;
                    let e = oracle(&wall, &spec, &[x], &[k]);
                    assert!((c - e).abs() < 1e-9 * e.abs(), "x={x} k={k}: {c} vs {e}");
                }
                let c = moment_k1(&wall, &spec, x).unwrap();
                assert!((c - oracle(&wall, &spec, &[x], &[1])).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn mixed_moments_match_enumeration() {
    let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
    for &(t, a) in &[(0.3, 1.0), (0.4, 2.0), (0.5, 0.5)] {
        let spec = WeightSpec::with_t(0.02, t, a).unwrap();
        let cases: [(&[i64], &[u32]); 5] =
            [(&[0, 0], &[1, 1]), (&[-1, 1], &[1, 1]), (&[-1, 0], &[2, 1]), (&[0, 1], &[1, 2]), (&[0, 1], &[2, 2])];
        for (xs, ks) in cases {
            let c = moment_multi(&wall, &spec, xs, ks).unwrap().value;
            let e = oracle(&wall, &spec, xs, ks);
            assert!((c - e).abs() < 1e-7 * e.abs(), "{xs:?} {ks:?}: {c} vs {e}");
        }
    }
}

#[test]
fn covariance_matches_enumeration() {
    let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
    let spec = WeightSpec::with_t(0.1, 0.3, 2.0).unwrap();
    let c = covariance(&wall, &spec, -1, 1, 1, 1).unwrap();
    let e = oracle(&wall, &spec, &[-1, 1], &[1, 1]) - oracle(&wall, &spec, &[-1], &[1]) * oracle(&wall, &spec, &[1], &[1]);
    assert!((c - e).abs() < 1e-9, "{c} vs {e}");
}

#[test]
fn moments_do_not_depend_on_specialization_scale() {
    use macpp::observables::GFunctions;
    let wall = SkewSupport::rectangle(2, 2).unwrap().wall();
    let spec = WeightSpec::with_t(0.1, 0.4, 2.0).unwrap();
    let g1 = GFunctions::with_xi(&wall, &spec, 0, 1.0).unwrap();
    let g2 = GFunctions::with_xi(&wall, &spec, 0, 3.7).unwrap();
    // Rescaling z by 1/ξ maps one integrand onto the other.
    let z = num_complex::Complex64::new(2.0, 1.3);
    assert!((g1.eval(z) - g2.eval(z / 3.7)).norm() < 1e-12);
}
