//! Validity margins of the effective description. A margin of `None`
//! means the bound is infinite (a vanishing denominator).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::site::energy_barrier;

pub const DEFAULT_THRESHOLD: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeInputs {
    pub s: u32,
    pub g: f64,
    pub j_max: f64,
    /// Cavity photon decay rate.
    pub kappa_loss: f64,
    /// Atomic spontaneous emission rate.
    pub gamma: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub inequality: String,
    pub margin: Option<f64>,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub s: u32,
    pub u_barrier: f64,
    pub j_max: f64,
    /// `√s·J²/g`.
    pub hop_scale: f64,
    pub kappa_loss: f64,
    pub gamma: f64,
    pub threshold: f64,
    pub verdicts: Vec<Verdict>,
}

impl RegimeReport {
    pub fn all_satisfied(&self) -> bool {
        self.verdicts.iter().all(|v| v.satisfied)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

pub fn evaluate(inp: &RegimeInputs) -> Result<RegimeReport> {
    let named = [
        ("g", inp.g),
        ("j_max", inp.j_max),
        ("kappa_loss", inp.kappa_loss),
        ("gamma", inp.gamma),
        ("threshold", inp.threshold),
    ];
    for (name, v) in named {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    if inp.s == 0 || inp.g == 0.0 {
        return Err(Error::InvalidParameter("regime check needs s >= 1 and g > 0".into()));
    }
    let sqrt_s = f64::from(inp.s).sqrt();
    let u = energy_barrier(inp.s, inp.g);
    let hop_scale = sqrt_s * inp.j_max * inp.j_max / inp.g;
    let loss = (sqrt_s * inp.kappa_loss).max(inp.gamma);
    let js = inp.j_max * f64::from(inp.s);

    let verdict = |name: &str, inequality: &str, margin: Option<f64>| Verdict {
        name: name.into(),
        inequality: inequality.into(),
        margin,
        satisfied: margin.is_none_or(|m| m >= inp.threshold),
    };
    let verdicts = vec![
        verdict("mott_barrier", "U >> J_max", ratio(u, inp.j_max)),
        verdict("coherent_exchange", "sqrt(s) J^2/g >> max(sqrt(s) kappa_loss, gamma)", ratio(hop_scale, loss)),
        verdict("mixed_coupling", "g >> J s", ratio(inp.g, js)),
        verdict("mixed_loss", "J s >> max(sqrt(s) kappa_loss, gamma)", ratio(js, loss)),
    ];
    Ok(RegimeReport {
        s: inp.s,
        u_barrier: u,
        j_max: inp.j_max,
        hop_scale,
        kappa_loss: inp.kappa_loss,
        gamma: inp.gamma,
        threshold: inp.threshold,
        verdicts,
    })
}
