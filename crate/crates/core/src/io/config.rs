//! TOML run configuration.
//!
//! ```toml
//! [params]
//! gamma = "sqrt(8/3)"
//! gamma_prime = 1.0
//!
//! [grid]
//! nx = 512
//! ny = 256
//! spacing = "1/128"
//!
//! [experiment]
//! levels = [3, 4]
//! trials = 50
//! ```
//!
//! Every key is optional; missing keys take the values of [`TrialConfig::standard`].
//! Real-valued keys accept a number or a string such as `"1/256"` or `"sqrt(8/3)"`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::report::Format;
use crate::error::{Error, Result};
use crate::experiments::{Measurements, TrialConfig};
use crate::geometry::{GridSpec, Interval, Point};
use crate::gff::SamplerKind;
use crate::params::{CoalescenceConfig, LqgParams};

/// A parsed and validated configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub trial: TrialConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Real {
    Number(f64),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    gamma: Option<Real>,
    gamma_prime: Option<Real>,
    d_gamma: Option<Real>,
    alpha1: Option<Real>,
    alpha2: Option<Real>,
    annulus_ratio: Option<Real>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    nx: Option<usize>,
    ny: Option<usize>,
    spacing: Option<Real>,
    origin_x: Option<Real>,
    sampler: Option<SamplerKind>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    epsilon: Option<Real>,
    a_eps: Option<Real>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    levels: Option<Vec<u32>>,
    window: Option<[Real; 2]>,
    intervals: Option<usize>,
    reference: Option<[Real; 2]>,
    alt_references: Option<Vec<[Real; 2]>>,
    far_arc_radius: Option<Real>,
    kappa_scale: Option<Real>,
    symmetry_shift: Option<Real>,
    separations: Option<Vec<Real>>,
    separation_mids: Option<Vec<Real>>,
    weyl_shift: Option<Real>,
    seed: Option<u64>,
    trials: Option<usize>,
    measurements: Option<Measurements>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
    format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    grid: RawGrid,
    #[serde(default)]
    metric: RawMetric,
    #[serde(default)]
    experiment: RawExperiment,
    #[serde(default)]
    output: RawOutput,
}

/// Evaluates a number, `a/b` or `sqrt(expr)`.
pub fn eval_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(inner) = t.strip_prefix("sqrt(").and_then(|s| s.strip_suffix(')')) {
        return eval_real(inner).filter(|v| *v >= 0.0).map(f64::sqrt);
    }
    if let Some((a, b)) = t.split_once('/') {
        return Some(eval_real(a)? / eval_real(b)?);
    }
    t.parse().ok()
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `key = ...` assignment, or 0 when the key is absent.
fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn real(text: &str, key: &str, v: Option<Real>, default: f64) -> Result<f64> {
    match v {
        None => Ok(default),
        Some(Real::Number(x)) => Ok(x),
        Some(Real::Text(s)) => eval_real(&s).ok_or_else(|| Error::Config {
            line: line_of_key(text, key),
            message: format!("`{key}`: cannot evaluate {s:?} as a real number"),
        }),
    }
}

fn point(text: &str, key: &str, v: [Real; 2]) -> Result<Point> {
    let [x, y] = v;
    Ok(Point::new(real(text, key, Some(x), 0.0)?, real(text, key, Some(y), 0.0)?))
}

fn reals(text: &str, key: &str, v: Option<Vec<Real>>, default: &[f64]) -> Result<Vec<f64>> {
    match v {
        None => Ok(default.to_vec()),
        Some(xs) => xs.into_iter().map(|x| real(text, key, Some(x), 0.0)).collect(),
    }
}

/// Config key most likely responsible for a validation error.
fn blame(e: &Error) -> &str {
    let msg = e.to_string();
    let hints = [
        ("epsilon", "epsilon"),
        ("level", "levels"),
        ("alt_reference", "alt_references"),
        ("reference", "reference"),
        ("window", "window"),
        ("far arc", "far_arc_radius"),
        ("Busemann", "kappa_scale"),
        ("restricted", "separations"),
        ("grid", "nx"),
    ];
    match e {
        Error::InvalidParameter { name, .. } => name.as_str(),
        _ => hints.iter().find(|(h, _)| msg.contains(h)).map_or("", |(_, k)| k),
    }
}

fn with_line(text: &str, e: Error) -> Error {
    match e {
        Error::Config { .. } => e,
        e => {
            let key = blame(&e);
            Error::Config { line: if key.is_empty() { 0 } else { line_of_key(text, key) }, message: e.to_string() }
        }
    }
}

/// Parses and validates a configuration; errors carry the offending line (0 if unknown).
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map_or(0, |s| line_of_offset(text, s.start)),
        message: e.message().to_string(),
    })?;
    build(text, raw).map_err(|e| with_line(text, e))
}

fn build(text: &str, raw: RawConfig) -> Result<RunConfig> {
    let d = TrialConfig::standard();
    let p = raw.params;
    let gamma = real(text, "gamma", p.gamma, d.params.gamma)?;
    let gamma_prime = real(text, "gamma_prime", p.gamma_prime, gamma)?;
    let d_gamma = real(text, "d_gamma", p.d_gamma, d.params.d_gamma)?;
    let params = LqgParams::new(gamma, gamma_prime, d_gamma)?;
    let coalescence = CoalescenceConfig::new(
        real(text, "alpha1", p.alpha1, d.coalescence.alpha1)?,
        real(text, "alpha2", p.alpha2, d.coalescence.alpha2)?,
        real(text, "annulus_ratio", p.annulus_ratio, d.coalescence.annulus_ratio)?,
    )?;

    let g = raw.grid;
    let nx = g.nx.unwrap_or(d.grid.nx);
    let ny = g.ny.unwrap_or(d.grid.ny);
    let spacing = real(text, "spacing", g.spacing, d.grid.spacing)?;
    let grid = match g.origin_x {
        None => GridSpec::centered(nx, ny, spacing)?,
        Some(o) => GridSpec::new(nx, ny, spacing, real(text, "origin_x", Some(o), 0.0)?)?,
    };

    let e = raw.experiment;
    let window = match e.window {
        None => d.window,
        Some([lo, hi]) => Interval::new(real(text, "window", Some(lo), 0.0)?, real(text, "window", Some(hi), 0.0)?)?,
    };
    let alt_references = match e.alt_references {
        None => d.alt_references.clone(),
        Some(ps) => ps.into_iter().map(|p| point(text, "alt_references", p)).collect::<Result<_>>()?,
    };
    let trial = TrialConfig {
        params,
        coalescence,
        grid,
        sampler: g.sampler.unwrap_or(d.sampler),
        epsilon: real(text, "epsilon", raw.metric.epsilon, 2.0 * spacing)?,
        a_eps: real(text, "a_eps", raw.metric.a_eps, d.a_eps)?,
        levels: e.levels.unwrap_or(d.levels.clone()),
        window,
        intervals: e.intervals.unwrap_or(d.intervals),
        reference: match e.reference {
            None => d.reference,
            Some(p) => point(text, "reference", p)?,
        },
        alt_references,
        far_arc_radius: real(text, "far_arc_radius", e.far_arc_radius, d.far_arc_radius)?,
        kappa_scale: real(text, "kappa_scale", e.kappa_scale, d.kappa_scale)?,
        symmetry_shift: real(text, "symmetry_shift", e.symmetry_shift, d.symmetry_shift)?,
        separations: reals(text, "separations", e.separations, &d.separations)?,
        separation_mids: reals(text, "separation_mids", e.separation_mids, &d.separation_mids)?,
        weyl_shift: real(text, "weyl_shift", e.weyl_shift, d.weyl_shift)?,
        master_seed: e.seed.unwrap_or(d.master_seed),
        trials: e.trials.unwrap_or(d.trials),
        measurements: e.measurements.unwrap_or(d.measurements),
    };
    trial.validate()?;
    Ok(RunConfig { trial, output: OutputConfig { dir: raw.output.dir, format: raw.output.format.unwrap_or_default() } })
}
