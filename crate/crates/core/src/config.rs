//! Experiment configuration: `key = value` lines, `#` comments, flags on top.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gibbs::{Observable, Region};
use crate::perturbation::TChoice;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Cat,
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Roof {
    Sqrt2,
    Value(f64),
}

impl Roof {
    pub fn value(&self) -> f64 {
        match self {
            Roof::Sqrt2 => std::f64::consts::SQRT_2,
            Roof::Value(r) => *r,
        }
    }
}

/// Which map the orbit-based subcommands iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    F,
    G,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub roof: Roof,
    pub eps: f64,
    pub t: TChoice,
    pub gamma: f64,
    /// Chart base point; `None` picks the system default.
    pub base: Option<Vec<f64>>,
    pub map: MapKind,
    pub steps: usize,
    pub settle: usize,
    pub block: usize,
    pub orbits: usize,
    pub batches: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Fixed initial point for every orbit instead of volume samples.
    pub start: Option<Vec<f64>>,
    pub disk_base: Option<Vec<f64>>,
    pub disk_len: f64,
    pub samples: usize,
    pub iters: usize,
    pub region: Region,
    pub observables: Vec<Observable>,
    pub eps_sweep: Vec<f64>,
    pub grid: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemKind::Cat,
            roof: Roof::Sqrt2,
            eps: 0.05,
            t: TChoice::Auto,
            gamma: 0.2,
            base: None,
            map: MapKind::G,
            steps: 1_000_000,
            settle: 80,
            block: 10_000,
            orbits: 100,
            batches: 100,
            seed: 0,
            out: PathBuf::from("hypexp-out"),
            start: None,
            disk_base: None,
            disk_len: 0.01,
            samples: 4096,
            iters: 200,
            region: Region::Support,
            observables: vec![Observable::Coord(0), Observable::Coord(1), Observable::Coord(2)],
            eps_sweep: Vec::new(),
            grid: 41,
        }
    }
}

pub const KEYS: &[(&str, &str)] = &[
    ("system", "cat | geodesic"),
    ("roof", "sqrt2 | <decimal> (cat only)"),
    ("eps", "support scale ε in (0, 1/4)"),
    ("t", "auto | cap:<θ> (θ/(4C)) | <decimal>"),
    ("gamma", "chart radius"),
    ("base", "chart base point: x1,x2,s (cat) or φ,ρ,θ (geodesic)"),
    ("map", "f | g"),
    ("steps", "orbit length N"),
    ("settle", "tracker settle steps"),
    ("block", "re-settling period"),
    ("orbits", "number of orbits K"),
    ("batches", "batches for batch-means standard errors"),
    ("seed", "64-bit seed"),
    ("out", "output directory"),
    ("start", "fixed initial point, same format as base"),
    ("disk_base", "unstable disk center, same format as base"),
    ("disk_len", "disk half-length δ"),
    ("samples", "disk samples m"),
    ("iters", "pushforward iterations n"),
    ("region", "whole | V | U | box:lo:hi,… | not:<region>"),
    ("observables", "';'-separated list of const:c, coord:i, cos:i:period, ind:<region>, logstretch[:settle]"),
    ("eps_sweep", "comma-separated ε values"),
    ("grid", "points per axis in certificate grids"),
];

fn valid_keys() -> String {
    KEYS.iter().map(|k| k.0).collect::<Vec<_>>().join(", ")
}

fn parse<T: FromStr>(value: &str, what: &str) -> std::result::Result<T, String> {
    value.parse::<T>().map_err(|_| format!("expected {what}, got `{value}`"))
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|x| parse::<f64>(x.trim(), "a number")).collect()
}

fn parse_point(value: &str) -> std::result::Result<Option<Vec<f64>>, String> {
    if value == "default" {
        return Ok(None);
    }
    let p = parse_list(value)?;
    if p.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{value}`"));
    }
    Ok(Some(p))
}

fn parse_usize(value: &str) -> std::result::Result<usize, String> {
    // accept 1e6-style counts
    if let Ok(n) = value.parse::<usize>() {
        return Ok(n);
    }
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e18 => Ok(x as usize),
        _ => Err(format!("expected a non-negative integer, got `{value}`")),
    }
}

impl ExperimentConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "system" => {
                self.system = match v {
                    "cat" => SystemKind::Cat,
                    "geodesic" => SystemKind::Geodesic,
                    _ => return Err(format!("expected cat or geodesic, got `{v}`")),
                }
            }
            "roof" => {
                self.roof = if v == "sqrt2" {
                    Roof::Sqrt2
                } else {
                    Roof::Value(parse(v, "sqrt2 or a decimal")?)
                }
            }
            "eps" => self.eps = parse(v, "a decimal")?,
            "t" => {
                self.t = if v == "auto" {
                    TChoice::Auto
                } else if let Some(theta) = v.strip_prefix("cap:") {
                    TChoice::CapFraction(parse(theta, "a decimal after cap:")?)
                } else {
                    TChoice::Value(parse(v, "auto, cap:<θ> or a decimal")?)
                }
            }
            "gamma" => self.gamma = parse(v, "a decimal")?,
            "base" => self.base = parse_point(v)?,
            "map" => {
                self.map = match v {
                    "f" => MapKind::F,
                    "g" => MapKind::G,
                    _ => return Err(format!("expected f or g, got `{v}`")),
                }
            }
            "steps" => self.steps = parse_usize(v)?,
            "settle" => self.settle = parse_usize(v)?,
            "block" => self.block = parse_usize(v)?,
            "orbits" => self.orbits = parse_usize(v)?,
            "batches" => self.batches = parse_usize(v)?,
            "seed" => self.seed = parse(v, "an unsigned 64-bit integer")?,
            "out" => self.out = PathBuf::from(v),
            "start" => self.start = parse_point(v)?,
            "disk_base" => self.disk_base = parse_point(v)?,
            "disk_len" => self.disk_len = parse(v, "a decimal")?,
            "samples" => self.samples = parse_usize(v)?,
            "iters" => self.iters = parse_usize(v)?,
            "region" => self.region = v.parse()?,
            "observables" => {
                self.observables = v.split(';').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<std::result::Result<_, _>>()?
            }
            "eps_sweep" => self.eps_sweep = parse_list(v)?,
            "grid" => self.grid = parse_usize(v)?,
            _ => return Err(format!("unknown key `{key}`; valid keys: {}", valid_keys())),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            self.set(key.trim(), value).map_err(|e| Error::Config(format!("line {}: {}: {e}", i + 1, key.trim())))?;
        }
        Ok(())
    }

    /// Flags override the file; `key` uses the file spelling.
    pub fn apply_flag(&mut self, key: &str, value: &str) -> Result<()> {
        self.set(key, value).map_err(|e| Error::Config(format!("flag --{}: {e}", key.replace('_', "-"))))
    }

    /// Every key with its value, in `KEYS` order; parses back to `self`.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let point = |p: &Option<Vec<f64>>| match p {
            None => "default".to_string(),
            Some(v) => join(v),
        };
        KEYS.iter()
            .map(|&(k, _)| {
                let v = match k {
                    "system" => match self.system {
                        SystemKind::Cat => "cat".into(),
                        SystemKind::Geodesic => "geodesic".into(),
                    },
                    "roof" => match self.roof {
                        Roof::Sqrt2 => "sqrt2".into(),
                        Roof::Value(r) => num(r),
                    },
                    "eps" => num(self.eps),
                    "t" => match self.t {
                        TChoice::Auto => "auto".into(),
                        TChoice::CapFraction(x) => format!("cap:{}", num(x)),
                        TChoice::Value(x) => num(x),
                    },
                    "gamma" => num(self.gamma),
                    "base" => point(&self.base),
                    "map" => match self.map {
                        MapKind::F => "f".into(),
                        MapKind::G => "g".into(),
                    },
                    "steps" => self.steps.to_string(),
                    "settle" => self.settle.to_string(),
                    "block" => self.block.to_string(),
                    "orbits" => self.orbits.to_string(),
                    "batches" => self.batches.to_string(),
                    "seed" => self.seed.to_string(),
                    "out" => self.out.display().to_string(),
                    "start" => point(&self.start),
                    "disk_base" => point(&self.disk_base),
                    "disk_len" => num(self.disk_len),
                    "samples" => self.samples.to_string(),
                    "iters" => self.iters.to_string(),
                    "region" => self.region.to_string(),
                    "observables" => self.observables.iter().map(|o| o.to_string()).collect::<Vec<_>>().join(";"),
                    "eps_sweep" => join(&self.eps_sweep),
                    "grid" => self.grid.to_string(),
                    _ => unreachable!("every key is listed"),
                };
                (k, v)
            })
            .collect()
    }
}

/// Shortest representation that parses back to the same double.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(",")
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
