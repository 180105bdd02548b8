//! Run configuration: a single JSON document.

use std::path::{Path, PathBuf};

use cca_core::eigensolve::{Method, SolverOptions};
use cca_core::lattice::{chain, honeycomb, square, BondCoupling, Lattice};
use cca_core::mixedfill::MixedOptions;
use cca_core::perturbation::SpinNormalization;
use cca_core::regime::DEFAULT_THRESHOLD;
use cca_core::site::SiteParams;
use cca_core::sweep::{GroundOptions, SweepSpec};
use cca_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CHAIN4_PRESET: &str = include_str!("../presets/chain4.json");
pub const KITAEV_PRESET: &str = include_str!("../presets/kitaev.json");

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "chain4" => Some(CHAIN4_PRESET),
        "kitaev" => Some(KITAEV_PRESET),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeSpec {
    Chain {
        n: usize,
        #[serde(default)]
        periodic: bool,
        j_a: f64,
        j_b: f64,
    },
    Square {
        rows: usize,
        cols: usize,
        j_a: f64,
        j_b: f64,
    },
    /// `couplings` is indexed by bond label `[X, Y, Z]`.
    Honeycomb {
        rows: usize,
        cols: usize,
        couplings: [BondCoupling; 3],
    },
    Inline(Lattice),
    /// Path to a lattice JSON document, relative to the config file.
    File(PathBuf),
}

impl LatticeSpec {
    pub fn build(&self, base: Option<&Path>) -> Result<Lattice> {
        match self {
            Self::Chain { n, periodic, j_a, j_b } => chain(*n, *periodic, *j_a, *j_b),
            Self::Square { rows, cols, j_a, j_b } => square(*rows, *cols, *j_a, *j_b),
            Self::Honeycomb { rows, cols, couplings } => honeycomb(*rows, *cols, *couplings),
            Self::Inline(lat) => Ok(lat.clone()),
            Self::File(path) => {
                let full = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let text = std::fs::read_to_string(&full).map_err(|e| Error::Io(format!("{}: {e}", full.display())))?;
                Lattice::from_json(&text)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Excitations {
    PerSite(u32),
    Total(u32),
}

impl Excitations {
    /// Per-site count, when the total divides evenly.
    pub fn per_site(self, n_sites: usize) -> Option<u32> {
        match self {
            Self::PerSite(s) => Some(s),
            Self::Total(t) => (n_sites > 0 && (t as usize).is_multiple_of(n_sites)).then(|| t / n_sites as u32),
        }
    }

    pub fn total(self, n_sites: usize) -> u32 {
        match self {
            Self::PerSite(s) => s * n_sites as u32,
            Self::Total(t) => t,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRates {
    pub kappa_loss: f64,
    pub gamma: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KitaevConfig {
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
    /// Local dimension, `s + 1`.
    #[serde(default = "default_local_dim")]
    pub d: usize,
}

fn default_local_dim() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedConfig {
    pub n_heavy: usize,
    #[serde(default)]
    pub allow_outside_regime: bool,
}

impl MixedConfig {
    pub fn options(&self) -> MixedOptions {
        MixedOptions {
            allow_outside_regime: self.allow_outside_regime,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub site: SiteParams,
    pub lattice: Option<LatticeSpec>,
    pub excitations: Option<Excitations>,
    /// Blocks listed by `site-spectrum`.
    #[serde(default = "default_s_values")]
    pub s_values: Vec<u32>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_symmetry")]
    pub use_symmetry: bool,
    #[serde(default = "default_dim_cap")]
    pub dim_cap: usize,
    pub normalization: Option<SpinNormalization>,
    pub sweep: Option<SweepSpec>,
    pub regime: Option<LossRates>,
    pub kitaev: Option<KitaevConfig>,
    pub mixed: Option<MixedConfig>,
    /// Number of levels reported by spectrum-producing commands.
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_s_values() -> Vec<u32> {
    vec![0, 1, 2, 3]
}

fn default_method() -> Method {
    Method::Auto
}

fn default_symmetry() -> bool {
    true
}

fn default_dim_cap() -> usize {
    cca_core::manybody::DEFAULT_DIM_CAP
}

fn default_levels() -> usize {
    4
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.site.validate()?;
        if let Some(sw) = &self.sweep {
            sw.validate()?;
        }
        if self.levels == 0 {
            return Err(Error::InvalidParameter("levels must be at least 1".into()));
        }
        if let Some(r) = &self.regime {
            for (name, v) in [("kappa_loss", r.kappa_loss), ("gamma", r.gamma), ("threshold", r.threshold)] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!("regime.{name} must be finite and non-negative")));
                }
            }
        }
        Ok(())
    }

    pub fn ground_options(&self) -> GroundOptions {
        GroundOptions {
            solver: self.solver,
            method: self.method,
            use_symmetry: self.use_symmetry,
            dim_cap: self.dim_cap,
        }
    }

    pub fn lattice(&self, base: Option<&Path>) -> Result<Lattice> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("config has no lattice".into()))?
            .build(base)
    }

    pub fn excitations(&self) -> Result<Excitations> {
        self.excitations
            .ok_or_else(|| Error::InvalidParameter("config has no excitations".into()))
    }

    /// Per-site filling, required by the effective-model pipelines.
    pub fn per_site(&self, n_sites: usize) -> Result<u32> {
        let ex = self.excitations()?;
        ex.per_site(n_sites).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} total excitations on {n_sites} sites is not an integer filling",
                ex.total(n_sites)
            ))
        })
    }
}
