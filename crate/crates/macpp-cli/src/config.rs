// SPDX-License-Identifier: Apache-2.0 OR MIT
//! JSON run configuration. Every section is optional; subcommands fill in
//! defaults for what they need and reject what they cannot use.

use std::path::Path;

use anyhow::{bail, Context, Result};
use macpp::backwall::{LimitBackWall, SMultiset};
use macpp::combinatorics::{DiscreteBackWall, Partition, SkewSupport};
use macpp::frozen::{single_piece_model, three_tentacle_model};
use macpp::limitshape::LimitModel;
use macpp::macdonald::WeightSpec;
use macpp::sampler::Dynamics;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub support: Option<SupportConfig>,
    #[serde(default)]
    pub measure: Option<MeasureConfig>,
    #[serde(default)]
    pub discretization: Option<DiscretizationConfig>,
    #[serde(default)]
    pub moments: Option<MomentsConfig>,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub frozen: Option<FrozenConfig>,
    #[serde(default)]
    pub covariance: Option<CovarianceConfig>,
}

/// A limiting back wall, either a named preset or explicit data.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ModelConfig {
    Preset { preset: Preset },
    Explicit { kinks: Vec<KinkValue>, slopes: Vec<f64>, anchor: (f64, f64), s: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Corner,
    /// Three singular kinks (three tentacles).
    ThreeTentacle,
    /// One linear piece between two slope-increasing kinks (no tentacles).
    SinglePiece,
}

/// A kink abscissa; ±∞ are written as the strings "-inf" / "+inf".
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KinkValue {
    Num(f64),
    Sentinel(String),
}

impl KinkValue {
    fn value(&self) -> Result<f64> {
        match self {
            KinkValue::Num(x) => Ok(*x),
            KinkValue::Sentinel(s) => match s.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "+inf" | "inf" => Ok(f64::INFINITY),
                other => bail!("/model/kinks: unknown sentinel {other:?} (use \"-inf\" or \"+inf\")"),
            },
        }
    }
}

impl ModelConfig {
    /// The wall and weights without the regularity checks of [`LimitModel`].
    pub fn wall(&self) -> Result<(LimitBackWall, SMultiset)> {
        match self {
            ModelConfig::Preset { preset } => {
                let m = preset.model()?;
                Ok((m.bw, m.s))
            }
            ModelConfig::Explicit { kinks, slopes, anchor, s } => {
                let kinks = kinks.iter().map(KinkValue::value).collect::<Result<Vec<_>>>()?;
                let bw = LimitBackWall::new(kinks, slopes.clone(), *anchor).context("/model")?;
                let s = SMultiset::from_weights(s).context("/model/s")?;
                Ok((bw, s))
            }
        }
    }

    pub fn model(&self) -> Result<LimitModel> {
        let (bw, s) = self.wall()?;
        Ok(LimitModel::new(bw, s)?)
    }
}

impl Preset {
    pub fn model(self) -> Result<LimitModel> {
        Ok(match self {
            Preset::Corner => LimitModel::corner(),
            Preset::ThreeTentacle => three_tentacle_model(2.0)?,
            Preset::SinglePiece => single_piece_model()?,
        })
    }
}

/// A finite skew support N^M/μ.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportConfig {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub mu: Vec<u32>,
}

impl SupportConfig {
    pub fn support(&self) -> Result<SkewSupport> {
        let mu = Partition::new(self.mu.clone()).context("/support/mu")?;
        SkewSupport::new(self.n, self.m, mu).context("/support")
    }

    /// Parse "NxM" or "NxM/μ1,μ2,…".
    pub fn parse(s: &str) -> Result<Self> {
        let (rect, mu) = s.split_once('/').unwrap_or((s, ""));
        let (n, m) = rect.split_once('x').with_context(|| format!("support {s:?}: expected NxM[/mu]"))?;
        let mu = if mu.is_empty() {
            Vec::new()
        } else {
            mu.split(',').map(|p| p.trim().parse()).collect::<std::result::Result<_, _>>()?
        };
        Ok(SupportConfig { n: n.trim().parse()?, m: m.trim().parse()?, mu })
    }
}

/// Measure parameters. Exactly one of `t` (homogeneous walls) or `frak_t`
/// must be given; q = t^α.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub r: f64,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub frak_t: Option<f64>,
    #[serde(default = "one")]
    pub alpha: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { r: 0.3, t: Some(0.4), frak_t: None, alpha: 1.0 }
    }
}

impl MeasureConfig {
    /// The spec for a wall with weights `s` (homogeneous when `s` = [1]).
    pub fn spec(&self, s: Vec<f64>) -> Result<WeightSpec> {
        let frak_t = match (self.t, self.frak_t) {
            (Some(t), None) => {
                if !(t > 0.0 && t < 1.0) {
                    bail!("/measure/t: {t} must lie in (0,1)");
                }
                t.ln() / self.r.ln()
            }
            (None, Some(ft)) => ft,
            _ => bail!("/measure: give exactly one of `t` and `frak_t`"),
        };
        WeightSpec::new(s, self.r, frak_t, self.alpha).context("/measure")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub half_width: Option<f64>,
    /// 𝔱 of the prelimit measure (t = e^{−ε𝔱}).
    #[serde(default = "one")]
    pub frak_t: f64,
    #[serde(default = "one")]
    pub alpha: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentRequestConfig {
    pub xs: Vec<i64>,
    pub ks: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    /// Requests; empty means ℘_1 and ℘_2 on every interior diagonal.
    #[serde(default)]
    pub requests: Vec<MomentRequestConfig>,
    /// Height cap of the enumeration oracle (skipped when over budget).
    #[serde(default = "default_cap")]
    pub oracle_cap: u32,
}

fn default_cap() -> u32 {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    #[serde(default = "default_burn")]
    pub burn_in: usize,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "one_usize")]
    pub thin: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default = "default_dynamics")]
    pub dynamics: Dynamics,
    /// Diagonals whose ℘_1 is recorded (default: all interior diagonals).
    #[serde(default)]
    pub diagonals: Vec<i64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            burn_in: default_burn(),
            steps: default_steps(),
            thin: 1,
            chains: default_chains(),
            dynamics: Dynamics::Auto,
            diagonals: Vec::new(),
        }
    }
}

fn default_burn() -> usize {
    500
}
fn default_steps() -> usize {
    5000
}
fn one_usize() -> usize {
    1
}
fn default_chains() -> usize {
    4
}
fn default_dynamics() -> Dynamics {
    Dynamics::Auto
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub step: f64,
}

impl GridConfig {
    pub fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && hi > lo) {
            bail!("/grid: need lo < hi and step > 0");
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + step * i as f64).collect())
    }
    pub fn xs(&self) -> Result<Vec<f64>> {
        Self::axis(self.x.0, self.x.1, self.step)
    }
    pub fn ys(&self) -> Result<Vec<f64>> {
        Self::axis(self.y.0, self.y.1, self.step)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrozenConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    400
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariancePoint {
    pub x: f64,
    pub k: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceConfig {
    pub points: Vec<CovariancePoint>,
    #[serde(default = "one")]
    pub frak_t: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    /// Also evaluate the log-kernel pullback integral for every pair.
    #[serde(default)]
    pub pullback: bool,
}

impl Config {
    /// Read a config; schema errors carry the JSON pointer of the offending
    /// field.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string().replace('.', "/");
            anyhow::anyhow!("config /{path}: {}", e.inner())
        })
    }

    pub fn model(&self) -> Result<LimitModel> {
        self.model.clone().unwrap_or(ModelConfig::Preset { preset: Preset::Corner }).model()
    }

    /// Finite wall: an explicit support, else the discretized model.
    pub fn discrete_wall(&self) -> Result<(DiscreteBackWall, WeightSpec)> {
        if let Some(sup) = &self.support {
            let spec = self.measure.clone().unwrap_or_default().spec(vec![1.0])?;
            return Ok((sup.support()?.wall(), spec));
        }
        let Some(d) = &self.discretization else {
            bail!("config: need either /support or /discretization");
        };
        let m = self.model()?;
        let disc = macpp::backwall::discretize(&m.bw, &m.s, d.epsilon, d.half_width)?;
        let spec = WeightSpec::new(m.s.weights(), (-d.epsilon).exp(), d.frak_t, d.alpha)?;
        Ok((disc.wall, spec))
    }
}
