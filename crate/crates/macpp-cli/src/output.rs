// SPDX-License-Identifier: Apache-2.0 OR MIT
//! Artifact writers. Every file starts with the same metadata: config hash,
//! seed, crate version and tolerances.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

#[derive(Clone, Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    /// SHA-256 of the canonical JSON form of the effective config.
    pub config_sha256: String,
    pub seed: u64,
    pub tolerance: f64,
    pub threads: usize,
    pub parallel_backend: bool,
}

impl Metadata {
    pub fn new(subcommand: &str, config: &Config, seed: u64, tolerance: f64, threads: usize) -> Result<Self> {
        let canonical = serde_json::to_string(config)?;
        let digest = Sha256::digest(canonical.as_bytes());
        let config_sha256 = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Ok(Metadata {
            tool: "macpp",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config_sha256,
            seed,
            tolerance,
            threads,
            parallel_backend: macpp::par::is_parallel(),
        })
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("tool: {} {}", self.tool, self.version),
            format!("subcommand: {}", self.subcommand),
            format!("config_sha256: {}", self.config_sha256),
            format!("seed: {}", self.seed),
            format!("tolerance: {:e}", self.tolerance),
            format!("threads: {} (parallel backend: {})", self.threads, self.parallel_backend),
        ]
    }
}

pub struct Artifacts {
    pub dir: PathBuf,
    pub meta: Metadata,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, meta: Metadata) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Artifacts { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<(PathBuf, File)> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path.clone());
        Ok((path, f))
    }

    /// CSV with `# key: value` metadata lines before the header row.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let lines = self.meta.lines();
        let (path, mut f) = self.create(name)?;
        for l in lines {
            writeln!(f, "# {l}")?;
        }
        let mut w = csv::Writer::from_writer(f);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    /// JSON object {"metadata": …, "data": …}.
    pub fn json<T: Serialize>(&mut self, name: &str, data: &T) -> Result<PathBuf> {
        let doc = serde_json::json!({ "metadata": self.meta, "data": data });
        let (path, mut f) = self.create(name)?;
        serde_json::to_writer_pretty(&mut f, &doc)?;
        writeln!(f)?;
        Ok(path)
    }

    pub fn svg(&mut self, name: &str, plot: &SvgPlot) -> Result<PathBuf> {
        let meta = serde_json::to_string(&self.meta)?;
        let comment = self.meta.lines().join("; ");
        let (path, mut f) = self.create(name)?;
        f.write_all(plot.render(&comment, &meta).as_bytes())?;
        Ok(path)
    }
}

/// Format a float for CSV output.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A minimal x/y plot in model coordinates.
pub struct SvgPlot {
    pub x: (f64, f64),
    pub y: (f64, f64),
    /// Pixels per model unit.
    pub scale: f64,
    pub title: String,
    pub unit: String,
    elements: Vec<String>,
}

impl SvgPlot {
    pub fn new(x: (f64, f64), y: (f64, f64), scale: f64, title: &str, unit: &str) -> Self {
        SvgPlot { x, y, scale, title: title.into(), unit: unit.into(), elements: Vec::new() }
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        (20.0 + (x - self.x.0) * self.scale, 30.0 + (self.y.1 - y) * self.scale)
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        x >= self.x.0 && x <= self.x.1 && y >= self.y.0 && y <= self.y.1
    }

    /// Polyline through the points that fall inside the frame; the line is
    /// broken where points leave it.
    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, width: f64) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, el: &mut Vec<String>| {
            if run.len() >= 2 {
                let d: Vec<String> = run.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                el.push(format!(
                    r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
                    d.join(" ")
                ));
            }
            run.clear();
        };
        let mut els = std::mem::take(&mut self.elements);
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() && self.inside(x, y) {
                run.push(self.px(x, y));
            } else {
                flush(&mut run, &mut els);
            }
        }
        flush(&mut run, &mut els);
        self.elements = els;
    }

    pub fn cell(&mut self, x: f64, y: f64, w: f64, color: &str) {
        let (px, py) = self.px(x - w / 2.0, y + w / 2.0);
        let s = w * self.scale;
        self.elements.push(format!(r#"<rect x="{px:.2}" y="{py:.2}" width="{s:.2}" height="{s:.2}" fill="{color}"/>"#));
    }

    pub fn marker(&mut self, x: f64, y: f64, color: &str) {
        if self.inside(x, y) {
            let (px, py) = self.px(x, y);
            self.elements.push(format!(r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#));
        }
    }

    pub fn vline(&mut self, x: f64, color: &str) {
        self.polyline(&[(x, self.y.0), (x, self.y.1)], color, 0.5);
    }

    fn render(&self, comment: &str, meta: &str) -> String {
        let w = 40.0 + (self.x.1 - self.x.0) * self.scale;
        let h = 60.0 + (self.y.1 - self.y.0) * self.scale;
        let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(out, "<!-- {} -->", comment.replace("--", "- -"));
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
        let _ = writeln!(out, "<metadata>{}</metadata>", esc(meta));
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (x0, y0) = self.px(self.x.0, self.y.0);
        let (x1, y1) = self.px(self.x.1, self.y.1);
        let _ = writeln!(
            out,
            r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
            x1 - x0,
            y0 - y1
        );
        for e in &self.elements {
            let _ = writeln!(out, "{e}");
        }
        let _ = writeln!(
            out,
            r#"<text x="20" y="18" font-family="sans-serif" font-size="12">{} — x ∈ [{}, {}], y ∈ [{}, {}], unit: {}</text>"#,
            esc(&self.title),
            self.x.0,
            self.x.1,
            self.y.0,
            self.y.1,
            esc(&self.unit)
        );
        let _ = writeln!(out, "</svg>");
        out
    }
}
