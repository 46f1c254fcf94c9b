//! Flat `key = value` run configuration: parameters, quadrature settings,
//! suite selection, output path and seed.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::contour::QuadratureSpec;
use crate::error::{Error, Result};
use crate::master::ParameterSet;
use crate::reduction::gaussian::G;
use crate::reduction::ExactParams;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "QKZ_SEED";

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Checks the suite driver can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    Qdet,
    ClassicalDet,
    Barnes,
    Qkz,
    Flatness,
    Limits,
    ReductionRoundtrip,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::Qdet,
        CheckKind::ClassicalDet,
        CheckKind::Barnes,
        CheckKind::Qkz,
        CheckKind::Flatness,
        CheckKind::Limits,
        CheckKind::ReductionRoundtrip,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Qdet => "qdet",
            CheckKind::ClassicalDet => "classical-det",
            CheckKind::Barnes => "barnes",
            CheckKind::Qkz => "qkz",
            CheckKind::Flatness => "flatness",
            CheckKind::Limits => "limits",
            CheckKind::ReductionRoundtrip => "reduction-roundtrip",
        }
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

/// Parsed configuration. Parameters are kept exact; absent parameters are
/// sampled from the seed by the suite.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub z: Option<Vec<G>>,
    pub a_imag: Option<Vec<G>>,
    pub p_imag: Option<G>,
    pub kappa: Option<G>,
    pub quadrature: QuadratureSpec,
    pub suite: Vec<CheckKind>,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: None,
            z: None,
            a_imag: None,
            p_imag: None,
            kappa: None,
            quadrature: QuadratureSpec::default(),
            suite: Vec::new(),
            output: None,
            seed: DEFAULT_SEED,
        }
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<G>> {
    value
        .split(',')
        .map(|item| item.trim().parse::<G>().map_err(|e| Error::Config(format!("{key}: {e}"))))
        .collect()
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse::<T>().map_err(|e| Error::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = Some(parse_scalar(key, value)?),
            "z" => self.z = Some(parse_list(key, value)?),
            "a_imag" => self.a_imag = Some(parse_list(key, value)?),
            "p_imag" => self.p_imag = Some(parse_scalar(key, value)?),
            "kappa" => self.kappa = Some(parse_scalar(key, value)?),
            "rel_tol" => self.quadrature.rel_tol = parse_scalar(key, value)?,
            "abs_tol" => self.quadrature.abs_tol = parse_scalar(key, value)?,
            "eps_trunc" => self.quadrature.eps_trunc = parse_scalar(key, value)?,
            "r_max" => self.quadrature.r_max = parse_scalar(key, value)?,
            "max_panels" => self.quadrature.max_panels = parse_scalar(key, value)?,
            "suite" => {
                self.suite = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(CheckKind::from_str)
                    .collect::<Result<_>>()?
            }
            "output" => self.output = (!value.is_empty()).then(|| PathBuf::from(value)),
            "seed" => self.seed = parse_scalar(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Consistency of lengths and the quadrature block.
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate().map_err(|e| Error::Config(e.to_string()))?;
        let lens = [self.z.as_ref().map(Vec::len), self.a_imag.as_ref().map(Vec::len)];
        for len in lens.into_iter().flatten() {
            if let Some(n) = self.n {
                if n != len {
                    return Err(Error::Config(format!("list of length {len} does not match n = {n}")));
                }
            }
        }
        if let [Some(lz), Some(la)] = lens {
            if lz != la {
                return Err(Error::Config(format!("z has {lz} entries but a_imag has {la}")));
            }
        }
        Ok(())
    }

    /// Replaces the seed by `QKZ_SEED` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = parse_scalar(SEED_ENV, &v)?;
        }
        Ok(())
    }

    /// `n` from the explicit key or the list lengths.
    pub fn dimension(&self) -> Option<usize> {
        self.n.or(self.z.as_ref().map(Vec::len)).or(self.a_imag.as_ref().map(Vec::len))
    }

    /// Exact parameters `z`, `a = i a_imag`, `p = i p_imag` when all are
    /// given; `kappa` defaults to 2.
    pub fn exact_params(&self) -> Result<Option<ExactParams>> {
        match (&self.z, &self.a_imag, &self.p_imag) {
            (Some(z), Some(a), Some(p)) => {
                let kappa = self.kappa.clone().unwrap_or_else(|| G::from(2));
                Ok(Some(ExactParams::from_imag(z.clone(), a.clone(), p.clone(), kappa).map_err(|e| Error::Config(e.to_string()))?))
            }
            (None, None, None) => Ok(None),
            _ => Err(Error::Config("z, a_imag and p_imag must be given together".into())),
        }
    }

    pub fn parameter_set(&self) -> Result<Option<ParameterSet>> {
        self.exact_params()?.map(|p| p.to_parameter_set()).transpose()
    }
}
