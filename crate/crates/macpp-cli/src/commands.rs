// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Subcommand implementations.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use macpp::backwall::{discretize, is_regular, singular_points, validate_limit_backwall};
use macpp::combinatorics::{DiscreteBackWall, SkewPlanePartition};
use macpp::exact_oracle::{exact_expectations, normalized_weights};
use macpp::frozen::{frozen_boundary, grid_boundary_mismatch, tentacles, FrozenSegment};
use macpp::gff::{covariance_matrix, min_eigenvalue, pullback_as_kernel};
use macpp::limitshape::{proportions_at, LimitModel};
use macpp::observables::{moment_multi_tol, wp};
use macpp::sampler::{run_chains, ChainConfig};
use serde_json::json;

use crate::config::{Config, GridConfig, Preset, SampleConfig, SupportConfig};
use crate::output::{num, Artifacts, Metadata, SvgPlot};
use crate::{Cli, Command, Which};

pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
    /// false → the run completed but its check failed (exit status 2).
    pub ok: bool,
}

pub fn run(cli: &Cli, cfg: &Config) -> Result<Outcome> {
    let tol = cli.tolerance;
    let meta = |default_tol: f64| Metadata::new(cli.command.name(), cfg, cli.seed, tol.unwrap_or(default_tol), cli.threads);
    let (summary, ok, art) = match &cli.command {
        Command::Validate => {
            let mut art = Artifacts::new(&cli.out_dir, meta(0.0)?)?;
            let (s, ok) = validate(cfg, &mut art)?;
            (s, ok, art)
        }
        Command::Discretize { epsilon } => {
            let mut art = Artifacts::new(&cli.out_dir, meta(0.0)?)?;
            (discretize_cmd(cfg, *epsilon, &mut art)?, true, art)
        }
        Command::Moments => {
            let mut art = Artifacts::new(&cli.out_dir, meta(1e-11)?)?;
            let (s, ok) = moments(cfg, tol.unwrap_or(1e-11), &mut art)?;
            (s, ok, art)
        }
        Command::Sample => {
            let mut art = Artifacts::new(&cli.out_dir, meta(0.0)?)?;
            let (s, ok) = sample(cfg, cli.seed, &mut art)?;
            (s, ok, art)
        }
        Command::LimitShape => {
            let mut art = Artifacts::new(&cli.out_dir, meta(0.0)?)?;
            (limit_shape(cfg, &mut art)?, true, art)
        }
        Command::FrozenBoundary => {
            let mut art = Artifacts::new(&cli.out_dir, meta(0.0)?)?;
            let m = cfg.model()?;
            let samples = cfg.frozen.as_ref().map_or(400, |f| f.samples);
            let (s, _) = frozen_report(&m, "frozen_boundary", samples, grid_or_default(cfg, &m)?, &mut art)?;
            (s, true, art)
        }
        Command::Covariance => {
            let mut art = Artifacts::new(&cli.out_dir, meta(1e-3)?)?;
            let (s, ok) = covariance(cfg, tol.unwrap_or(1e-3), &mut art)?;
            (s, ok, art)
        }
        Command::Oracle { support, cap } => {
            let mut art = Artifacts::new(&cli.out_dir, meta(1e-9)?)?;
            let (s, ok) = oracle(cfg, support.as_deref(), *cap, tol.unwrap_or(1e-9), &mut art)?;
            (s, ok, art)
        }
        Command::Figures { which } => {
            let mut art = Artifacts::new(&cli.out_dir, meta(2.0)?)?;
            let (s, ok) = figures(*which, tol.unwrap_or(2.0), &mut art)?;
            (s, ok, art)
        }
    };
    Ok(Outcome { written: art.written, summary, ok })
}

fn validate(cfg: &Config, art: &mut Artifacts) -> Result<(String, bool)> {
    let model = cfg.model.clone().unwrap_or(crate::config::ModelConfig::Preset { preset: Preset::Corner });
    let (bw, s) = model.wall()?;
    let report = validate_limit_backwall(&bw, &s)?;
    let regular = if report.member { Some(is_regular(&bw, &s)?) } else { None };
    let singular = if regular == Some(true) { singular_points(&bw, &s)? } else { Vec::new() };
    art.json("validation.json", &json!({ "report": report, "regular": regular, "singular_points": singular }))?;
    let summary = if report.member {
        format!("member: yes; regular: {}; {} singular points", regular == Some(true), singular.len())
    } else {
        let v = &report.violations[0];
        format!(
            "member: no; {} violation(s), worst pair V = {}, W = {} with product {} > 1",
            report.violations.len(),
            v.v,
            v.w,
            v.product
        )
    };
    Ok((summary, report.member))
}

fn wall_rows(wall: &DiscreteBackWall) -> Vec<Vec<String>> {
    (wall.v_min..=wall.v_max()).map(|v| vec![v.to_string(), wall.b(v).to_string()]).collect()
}

fn discretize_cmd(cfg: &Config, epsilon: Option<f64>, art: &mut Artifacts) -> Result<String> {
    let m = cfg.model()?;
    let d = cfg.discretization.as_ref();
    let eps = epsilon.or(d.map(|d| d.epsilon)).unwrap_or(0.1);
    let disc = discretize(&m.bw, &m.s, eps, d.and_then(|d| d.half_width))?;
    art.csv("discrete_wall.csv", &["v", "B"], &wall_rows(&disc.wall))?;
    art.json("discretization.json", &disc)?;
    Ok(format!(
        "ε = {eps}: diagonals {}..{}, kinks at {:?}, {} interior diagonals",
        disc.wall.v_min,
        disc.wall.v_max(),
        disc.kinks,
        disc.wall.interior().count()
    ))
}

fn moments(cfg: &Config, tol: f64, art: &mut Artifacts) -> Result<(String, bool)> {
    let (wall, spec) = cfg.discrete_wall()?;
    let mc = cfg.moments.clone();
    let mut requests: Vec<(Vec<i64>, Vec<u32>)> = mc.as_ref().map_or(Vec::new(), |m| {
        m.requests.iter().map(|r| (r.xs.clone(), r.ks.clone())).collect()
    });
    if requests.is_empty() {
        for x in wall.interior() {
            requests.push((vec![x], vec![1]));
            requests.push((vec![x], vec![2]));
        }
    }
    let cap = mc.map_or(10, |m| m.oracle_cap);
    let (q, t) = (spec.q(), spec.t());
    let reqs = requests.clone();
    let oracle = exact_expectations(
        &wall,
        &spec,
        move |pp: &SkewPlanePartition| {
            reqs.iter().map(|(xs, ks)| xs.iter().zip(ks).map(|(&x, &k)| wp(k, pp.diagonal(x), q, t)).product()).collect()
        },
        cap,
        1 << 22,
    )
    .ok();
    // enumeration is only a reference when the capped-off mass is negligible
    let tail = oracle.as_ref().map_or(1.0, |o| o[0].tail_mass);
    let reliable = tail < 1e-12;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, (xs, ks)) in requests.iter().enumerate() {
        let c = moment_multi_tol(&wall, &spec, xs, ks, tol).with_context(|| format!("/moments/requests/{i}"))?;
        let (ov, diff) = match &oracle {
            Some(o) => {
                let d = (c.value - o[i].value).abs();
                if reliable {
                    worst = worst.max(d / o[i].value.abs().max(1e-300));
                }
                (num(o[i].value), num(d))
            }
            None => (String::new(), String::new()),
        };
        let join = |v: Vec<String>| v.join(" ");
        rows.push(vec![
            join(xs.iter().map(|x| x.to_string()).collect()),
            join(ks.iter().map(|k| k.to_string()).collect()),
            num(c.value),
            num(c.error_estimate),
            ov,
            diff,
            if oracle.is_some() { num(tail) } else { String::new() },
        ]);
    }
    art.csv(
        "moments.csv",
        &["x", "k", "contour_value", "quadrature_error", "oracle_value", "abs_diff", "oracle_tail_mass"],
        &rows,
    )?;
    Ok(match (&oracle, reliable) {
        (Some(_), true) => (format!("{} moments; worst relative difference to enumeration {worst:.2e}", rows.len()), worst < 1e-7),
        (Some(_), false) => (
            format!("{} moments; enumeration tail mass {tail:.1e} too large for a comparison (raise /moments/oracle_cap)", rows.len()),
            true,
        ),
        (None, _) => (format!("{} moments; enumeration oracle over budget, skipped", rows.len()), true),
    })
}

fn sample(cfg: &Config, seed: u64, art: &mut Artifacts) -> Result<(String, bool)> {
    let (wall, spec) = cfg.discrete_wall()?;
    let sc: SampleConfig = cfg.sample.clone().unwrap_or_default();
    let diagonals = if sc.diagonals.is_empty() { wall.interior().collect() } else { sc.diagonals.clone() };
    let chain = ChainConfig {
        seed,
        burn_in: sc.burn_in,
        steps: sc.steps,
        thin: sc.thin,
        wall: wall.clone(),
        spec: spec.clone(),
        dynamics: sc.dynamics,
    };
    let (q, t) = (spec.q(), spec.t());
    let diags = diagonals.clone();
    let run = run_chains(&chain, sc.chains, move |pp: &SkewPlanePartition| {
        let mut v = vec![pp.volume() as f64];
        v.extend(diags.iter().map(|&x| wp(1, pp.diagonal(x), q, t)));
        v
    })?;
    let names: Vec<String> = std::iter::once("volume".to_string()).chain(diagonals.iter().map(|x| format!("wp1[{x}]"))).collect();
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(&run.stats)
        .map(|(n, s)| vec![n.clone(), num(s.mean), num(s.se), num(s.rhat)])
        .collect();
    art.csv("sample_stats.csv", &["observable", "mean", "batch_means_se", "rhat"], &rows)?;
    art.json(
        "sample.json",
        &json!({
            "chains": sc.chains,
            "draws_per_chain": run.samples.first().map_or(0, |c| c.len()),
            "acceptance": run.acceptance,
            "converged": run.converged,
            "dynamics": sc.dynamics,
            "cells": wall.cells(),
        }),
    )?;
    Ok((
        format!(
            "{} chains, acceptance {:.3}, converged (R̂ < {}): {}; E volume = {:.4} ± {:.4}",
            sc.chains,
            run.acceptance,
            macpp::sampler::RHAT_LIMIT,
            run.converged,
            run.stats[0].mean,
            run.stats[0].se
        ),
        run.converged,
    ))
}

fn grid_or_default(cfg: &Config, m: &LimitModel) -> Result<(Vec<f64>, Vec<f64>)> {
    match &cfg.grid {
        Some(g) => Ok((g.xs()?, g.ys()?)),
        None => {
            let (lo, hi) = m.bw.domain();
            let (lo, hi) = (lo.max(-4.0) + 0.1, hi.min(4.0) - 0.1);
            Ok((GridConfig::axis(lo, hi, 0.1)?, GridConfig::axis(m.bw.b(lo).min(m.bw.b(hi)) - 2.0, 6.0, 0.1)?))
        }
    }
}

fn wall_polyline(m: &LimitModel, xs: &[f64]) -> Vec<(f64, f64)> {
    let (a, b) = (xs[0], xs[xs.len() - 1]);
    (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).map(|x| (x, m.bw.b(x))).collect()
}

fn limit_shape(cfg: &Config, art: &mut Artifacts) -> Result<String> {
    let m = cfg.model()?;
    let (xs, ys) = grid_or_default(cfg, &m)?;
    let cols = macpp::par::map(&xs, |&x| -> macpp::Result<Vec<Vec<f64>>> {
        let hs = m.h_column(x, &ys)?;
        ys.iter()
            .zip(hs)
            .map(|(&y, h)| {
                Ok(match m.zeta(x, y)? {
                    Some(z) => {
                        let (a, b, c) = proportions_at(&m, x, z);
                        vec![x, y, 1.0, z.re, z.im, h, a, b, c]
                    }
                    None => vec![x, y, 0.0, f64::NAN, f64::NAN, h, f64::NAN, f64::NAN, f64::NAN],
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    let step = xs.get(1).map_or(0.1, |x1| x1 - xs[0]);
    let mut plot = SvgPlot::new((xs[0], xs[xs.len() - 1]), (ys[0], ys[ys.len() - 1]), 40.0, "liquid region", "α-coordinates (x, y)");
    let mut liquid = 0;
    for col in cols {
        for r in col? {
            if r[2] == 1.0 {
                liquid += 1;
                // shade by the vertical-lozenge proportion
                let g = (255.0 * (1.0 - r[6])).round() as u8;
                plot.cell(r[0], r[1], step, &format!("rgb({g},{g},255)"));
            }
            rows.push(vec![num(r[0]), num(r[1]), (r[2] as u8).to_string(), num(r[3]), num(r[4]), num(r[5]), num(r[6]), num(r[7]), num(r[8])]);
        }
    }
    plot.polyline(&wall_polyline(&m, &xs), "black", 1.5);
    art.csv("limit_shape.csv", &["x", "y", "liquid", "zeta_re", "zeta_im", "height", "p_vert", "p_left", "p_right"], &rows)?;
    art.svg("liquid_region.svg", &plot)?;
    Ok(format!("{} grid points, {liquid} liquid", rows.len()))
}

fn segment_rows(segs: &[FrozenSegment]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, s) in segs.iter().enumerate() {
        for (j, p) in s.points.iter().enumerate() {
            rows.push(vec![i.to_string(), num(p.zeta), num(p.x), num(p.y), (s.cusps.contains(&j) as u8).to_string()]);
        }
    }
    rows
}

/// Frozen boundary CSV/SVG/JSON for one model; returns a one-line summary.
fn frozen_report(m: &LimitModel, stem: &str, samples: usize, grid: (Vec<f64>, Vec<f64>), art: &mut Artifacts) -> Result<(String, f64)> {
    let segs = frozen_boundary(m, samples)?;
    let tent = tentacles(m);
    let sing = if is_regular(&m.bw, &m.s)? { singular_points(&m.bw, &m.s)? } else { Vec::new() };
    let (xs, ys) = grid;
    let (transitions, worst) = grid_boundary_mismatch(m, &segs, &xs, &ys);
    art.csv(&format!("{stem}.csv"), &["segment", "zeta", "x", "y", "cusp"], &segment_rows(&segs))?;
    let mut plot = SvgPlot::new((xs[0], xs[xs.len() - 1]), (ys[0], ys[ys.len() - 1]), 40.0, stem, "α-coordinates (x, y)");
    for s in &segs {
        let pts: Vec<(f64, f64)> = s.points.iter().map(|p| (p.x, p.y)).collect();
        plot.polyline(&pts, "crimson", 1.5);
        for &c in &s.cusps {
            plot.marker(s.points[c].x, s.points[c].y, "navy");
        }
    }
    for t in &tent {
        plot.vline(t.x_limit, "gray");
    }
    plot.polyline(&wall_polyline(m, &xs), "black", 1.5);
    art.svg(&format!("{stem}.svg"), &plot)?;
    let cusps: usize = segs.iter().map(|s| s.cusps.len()).sum();
    art.json(
        &format!("{stem}.json"),
        &json!({
            "segments": segs.len(),
            "cusps": cusps,
            "tentacles": tent,
            "singular_points": sing,
            "grid": { "transitions": transitions, "worst_distance_in_steps": worst },
        }),
    )?;
    let line = format!(
        "{stem}: {} segments, {cusps} cusps, {} tentacles, {} singular points, grid boundary within {worst:.2} steps ({transitions} transitions)",
        segs.len(),
        tent.len(),
        sing.len()
    );
    Ok((line, worst))
}

fn covariance(cfg: &Config, tol: f64, art: &mut Artifacts) -> Result<(String, bool)> {
    let m = cfg.model()?;
    let Some(cc) = &cfg.covariance else {
        bail!("config: /covariance is required (points, frak_t, alpha, pullback)");
    };
    let pts: Vec<(f64, u32)> = cc.points.iter().map(|p| (p.x, p.k)).collect();
    let mat = covariance_matrix(&m, &pts, cc.frak_t)?;
    let scale = cc.alpha * cc.frak_t * cc.frak_t;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i..pts.len() {
            let (xi, ki) = pts[i];
            let (xj, kj) = pts[j];
            let pull = if cc.pullback {
                let p = (ki * kj) as f64 * pullback_as_kernel(&m, xi, ki as f64 * cc.frak_t, xj, kj as f64 * cc.frak_t)?;
                worst = worst.max((p - mat[i][j]).abs());
                num(p)
            } else {
                String::new()
            };
            rows.push(vec![num(xi), ki.to_string(), num(xj), kj.to_string(), num(mat[i][j]), num(scale * mat[i][j]), pull]);
        }
    }
    let lam = min_eigenvalue(&mat);
    art.csv("covariance.csv", &["x1", "k1", "x2", "k2", "contour_k1k2J", "scaled_alpha_t2", "pullback_k1k2J"], &rows)?;
    art.json("covariance.json", &json!({ "matrix": mat, "min_eigenvalue": lam, "alpha_t2": scale, "max_pullback_diff": worst }))?;
    let ok = lam > -1e-8 && (!cc.pullback || worst < tol);
    let mut s = format!("{}×{} matrix, smallest eigenvalue {lam:.3e}", pts.len(), pts.len());
    if cc.pullback {
        s += &format!(", max |contour − pullback| = {worst:.2e}");
    }
    Ok((s, ok))
}

fn oracle(cfg: &Config, support: Option<&str>, cap: u32, tol: f64, art: &mut Artifacts) -> Result<(String, bool)> {
    let sup = match support {
        Some(s) => SupportConfig::parse(s)?,
        None => cfg.support.clone().unwrap_or(SupportConfig { n: 2, m: 2, mu: Vec::new() }),
    };
    let wall = sup.support()?.wall();
    let measure = cfg.measure.clone().unwrap_or_default();
    let spec = measure.spec(vec![1.0])?;
    let weights = normalized_weights(&wall, &spec, cap)?;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (pp, p1, p2) in &weights {
        let d = (p1 / p2 - 1.0).abs();
        worst = worst.max(d);
        let (_, grid) = pp.grid()?;
        let cells: Vec<String> = grid.iter().map(|r| r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")).collect();
        rows.push(vec![cells.join(" / "), num(*p1), num(*p2), num(d)]);
    }
    art.csv("oracle.csv", &["plane_partition", "p_turn_weights", "p_coefficients", "ratio_discrepancy"], &rows)?;
    art.json(
        "oracle.json",
        &json!({ "support": sup, "cap": cap, "configurations": rows.len(), "max_ratio_discrepancy": worst, "tolerance": tol }),
    )?;
    Ok((format!("{} configurations up to height {cap}; max |p₁/p₂ − 1| = {worst:.2e}", rows.len()), worst < tol))
}

fn figures(which: Which, tol: f64, art: &mut Artifacts) -> Result<(String, bool)> {
    let mut lines = Vec::new();
    let mut ok = true;
    let axis = GridConfig::axis;
    if matches!(which, Which::Fb1 | Which::All) {
        let m = Preset::ThreeTentacle.model()?;
        let grid = (axis(-4.0, 4.0, 0.1)?, axis(-4.0, 6.0, 0.1)?);
        let (line, worst) = frozen_report(&m, "figure_three_tentacles", 2000, grid, art)?;
        lines.push(line);
        ok &= tentacles(&m).len() == 3 && worst <= tol;
    }
    if matches!(which, Which::Fb2 | Which::All) {
        let m = Preset::SinglePiece.model()?;
        let grid = (axis(-2.9, 2.9, 0.1)?, axis(-3.0, 6.0, 0.1)?);
        let (line, worst) = frozen_report(&m, "figure_single_piece", 2000, grid, art)?;
        lines.push(line);
        ok &= tentacles(&m).is_empty() && worst <= tol;
    }
    Ok((lines.join("\n"), ok))
}
