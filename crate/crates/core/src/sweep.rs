//! Ground state of the full cavity array against its effective spin model,
//! point by point along a parameter sweep.
//!
//! Full-model energies are reported raw and shifted by `n·(sω₀ − g√s)`.
//! Within a fixed-excitation block `ω₀` only adds `ω₀·S_tot`, so the matrix
//! is assembled with `ω₀ = 0` and the constant is restored afterwards; this
//! keeps solver tolerances tied to the physically relevant scale.

use serde::{Deserialize, Serialize};

use crate::eigensolve::{solve, Method, SolverOptions};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::manybody::{assemble, BasisBlock, DEFAULT_DIM_CAP};
use crate::par;
use crate::perturbation::ground_manifold;
use crate::site::{SiteParams, SiteState};
use crate::spinmodel::{build_spin_hamiltonian, effective_model};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundOptions {
    pub solver: SolverOptions,
    pub method: Method,
    /// Split the block by total a-type excitation count when every edge
    /// hops the two polarizations independently.
    pub use_symmetry: bool,
    pub dim_cap: usize,
}

impl Default for GroundOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            method: Method::Auto,
            use_symmetry: true,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullGround {
    /// Raw ground energy including `ω₀·S_tot`.
    pub energy: f64,
    pub first_excited: Option<f64>,
    pub state: Vec<C64>,
    pub block: BasisBlock,
    /// Number of independently solved sectors (1 without symmetry splitting).
    pub sectors: usize,
    pub residual: f64,
    pub iterations: usize,
}

impl FullGround {
    pub fn gap(&self) -> Option<f64> {
        self.first_excited.map(|e| e - self.energy)
    }
}

fn splits_by_polarization(lat: &Lattice) -> bool {
    lat.edges().iter().all(|e| {
        let m = e.hopping_matrix();
        m[(0, 1)] == C64::new(0.0, 0.0) && m[(1, 0)] == C64::new(0.0, 0.0)
    })
}

/// Lowest two levels of the full model with `s` excitations per site.
pub fn full_ground(lat: &Lattice, p: &SiteParams, s: u32, opts: &GroundOptions) -> Result<FullGround> {
    let n = lat.n_vertices();
    let s_tot = s * n as u32;
    let block = BasisBlock::enumerate(n, s_tot, opts.dim_cap)?;
    let frame = SiteParams { omega0: 0.0, ..*p };
    let h = assemble(&block, lat, &frame)?;
    let offset = p.omega0 * f64::from(s_tot);

    let sectors: Vec<Vec<usize>> = if opts.use_symmetry && splits_by_polarization(lat) {
        let mut by_count: Vec<Vec<usize>> = vec![Vec::new(); s_tot as usize + 1];
        for (idx, cfg) in block.iter().enumerate() {
            let a: u32 = cfg.iter().map(SiteState::a_type).sum();
            by_count[a as usize].push(idx);
        }
        by_count.into_iter().filter(|v| !v.is_empty()).collect()
    } else {
        vec![(0..block.dim()).collect()]
    };

    let solved = par::map_collect(sectors.len(), |k| -> Result<_> {
        let idx = &sectors[k];
        if idx.len() == block.dim() {
            return solve(&h, 2, &opts.solver, opts.method);
        }
        let (sub, leak) = h.principal_submatrix(idx)?;
        if leak != 0.0 {
            return Err(Error::Regime("a-type count is not conserved on this lattice".into()));
        }
        solve(&sub, 2, &opts.solver, opts.method)
    });

    let mut levels: Vec<(f64, usize, usize)> = Vec::new();
    let mut results = Vec::with_capacity(sectors.len());
    for (k, r) in solved.into_iter().enumerate() {
        let r = r?;
        for (lvl, e) in r.eigenvalues.iter().enumerate() {
            levels.push((*e, k, lvl));
        }
        results.push(r);
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (e0, k0, l0) = levels[0];
    let mut state = vec![C64::new(0.0, 0.0); block.dim()];
    for (local, &global) in sectors[k0].iter().enumerate() {
        state[global] = results[k0].eigenvectors[l0][local];
    }
    Ok(FullGround {
        energy: e0 + offset,
        first_excited: levels.get(1).map(|l| l.0 + offset),
        residual: results[k0].residuals[l0],
        iterations: results.iter().map(|r| r.iterations).sum(),
        sectors: sectors.len(),
        state,
        block,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundCharacter {
    /// Dominated by every site in `Ψ⁻_{s,s}` (`|0⟩^⊗n` at `s = 1`).
    Zero,
    /// Dominated by every site in `Ψ⁻_{s,0}` (`|1⟩^⊗n` at `s = 1`).
    One,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlaps {
    pub zero: f64,
    pub one: f64,
    /// Weight on the whole `(s+1)^n` product manifold, when small enough to evaluate.
    pub manifold: Option<f64>,
}

impl Overlaps {
    pub fn character(&self) -> GroundCharacter {
        let total = self.zero + self.one;
        if total < 0.5 {
            GroundCharacter::Mixed
        } else if self.zero - self.one > 0.1 * total {
            GroundCharacter::Zero
        } else if self.one - self.zero > 0.1 * total {
            GroundCharacter::One
        } else {
            GroundCharacter::Mixed
        }
    }
}

/// Squared overlaps of `g.state` with the fully polarized product states and
/// with the product manifold of single-site ground polaritons.
pub fn overlaps(g: &FullGround, s: u32, p: &SiteParams) -> Result<Overlaps> {
    let n = g.block.n_sites();
    let (vecs, _) = ground_manifold(s, p)?;
    let d = s as usize + 1;
    let comp = vec![s; n];
    let range = g.block.composition_range(&comp).expect("uniform composition belongs to the block");
    let local: Vec<Vec<usize>> = range
        .clone()
        .map(|idx| g.block.state(idx).iter().map(crate::site::local_index).collect())
        .collect();
    let amp = |choice: &[usize]| -> C64 {
        local
            .iter()
            .zip(range.clone())
            .map(|(li, idx)| {
                let w: f64 = li.iter().zip(choice).map(|(&l, &c)| vecs[(l, c)]).product();
                g.state[idx] * w
            })
            .sum()
    };
    let zero = amp(&vec![0; n]).norm_sqr();
    let one = amp(&vec![d - 1; n]).norm_sqr();
    let count = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let manifold = (count.saturating_mul(range.len() as u128) <= 50_000_000).then(|| {
        let mut total = 0.0;
        let mut choice = vec![0usize; n];
        loop {
            total += amp(&choice).norm_sqr();
            let mut k = n;
            loop {
                if k == 0 {
                    return total;
                }
                k -= 1;
                choice[k] += 1;
                if choice[k] < d {
                    break;
                }
                choice[k] = 0;
            }
        }
    });
    Ok(Overlaps { zero, one, manifold })
}

/// Ground energy of the effective spin model, on the same shifted scale as
/// the full model.
pub fn effective_ground(lat: &Lattice, p: &SiteParams, s: u32, solver: &SolverOptions) -> Result<f64> {
    let model = effective_model(lat, s, p)?;
    let h = build_spin_hamiltonian(&model)?;
    let e = solve(&h, 1, solver, Method::Auto)?.ground_energy();
    let (_, eps) = ground_manifold(s, p)?;
    let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(e + lat.n_vertices() as f64 * (eps_min - p.polariton_energy(s)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    JA,
    JB,
    G,
    DeltaA,
    DeltaB,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            Self::JA => "j_a",
            Self::JB => "j_b",
            Self::G => "g",
            Self::DeltaA => "delta_a",
            Self::DeltaB => "delta_b",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidParameter("sweep needs at least one point".into()));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidParameter("sweep bounds must be finite".into()));
        }
        Ok(())
    }

    /// Evenly spaced values; the endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                if k + 1 == self.points {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * (k as f64 / last)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lattice: Lattice,
    pub site: SiteParams,
    /// Excitations per site.
    pub s: u32,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub ground: GroundOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub e_full_raw: Option<f64>,
    pub e_full_shifted: Option<f64>,
    pub e_eff: Option<f64>,
    pub deviation: Option<f64>,
    pub overlap_zero: Option<f64>,
    pub overlap_one: Option<f64>,
    pub overlap_manifold: Option<f64>,
    pub gap: Option<f64>,
    pub character: Option<GroundCharacter>,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub lo_index: usize,
    pub hi_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub from: GroundCharacter,
    pub to: GroundCharacter,
}

impl Crossing {
    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = if self.lo <= self.hi { (self.lo, self.hi) } else { (self.hi, self.lo) };
        a <= x && x <= b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing: Option<Crossing>,
}

/// Lattice and site parameters at one sweep value.
pub fn apply(cfg: &SweepConfig, value: f64) -> Result<(Lattice, SiteParams)> {
    let mut p = cfg.site;
    let lat = match cfg.sweep.parameter {
        SweepParameter::JA => cfg.lattice.map_hopping(|e| (value, e.j_b))?,
        SweepParameter::JB => cfg.lattice.map_hopping(|e| (e.j_a, value))?,
        other => {
            match other {
                SweepParameter::G => p.g = value,
                SweepParameter::DeltaA => p.delta_a = value,
                _ => p.delta_b = value,
            }
            cfg.lattice.clone()
        }
    };
    p.validate()?;
    Ok((lat, p))
}

pub fn run_point(cfg: &SweepConfig, index: usize, value: f64) -> SweepRow {
    let mut row = SweepRow {
        index,
        value,
        e_full_raw: None,
        e_full_shifted: None,
        e_eff: None,
        deviation: None,
        overlap_zero: None,
        overlap_one: None,
        overlap_manifold: None,
        gap: None,
        character: None,
        error: None,
    };
    let mut errors = Vec::new();
    match apply(cfg, value) {
        Err(e) => errors.push(e.to_string()),
        Ok((lat, p)) => {
            let shift = lat.n_vertices() as f64 * p.polariton_energy(cfg.s);
            match full_ground(&lat, &p, cfg.s, &cfg.ground) {
                Ok(g) => {
                    row.e_full_raw = Some(g.energy);
                    row.e_full_shifted = Some(g.energy - shift);
                    row.gap = g.gap();
                    match overlaps(&g, cfg.s, &p) {
                        Ok(o) => {
                            row.overlap_zero = Some(o.zero);
                            row.overlap_one = Some(o.one);
                            row.overlap_manifold = o.manifold;
                            row.character = Some(o.character());
                        }
                        Err(e) => errors.push(format!("overlaps: {e}")),
                    }
                }
                Err(e) => errors.push(format!("full model: {e}")),
            }
            match effective_ground(&lat, &p, cfg.s, &cfg.ground.solver) {
                Ok(e) => row.e_eff = Some(e),
                Err(e) => errors.push(format!("effective model: {e}")),
            }
        }
    }
    if let (Some(a), Some(b)) = (row.e_full_shifted, row.e_eff) {
        row.deviation = Some((a - b).abs());
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Interval between the last definite character before a flip and the
/// first definite character after it. `Mixed` points are skipped.
pub fn detect_crossing(rows: &[SweepRow]) -> Option<Crossing> {
    let definite: Vec<(usize, GroundCharacter)> = rows
        .iter()
        .enumerate()
        .filter_map(|(k, r)| match r.character {
            Some(c @ (GroundCharacter::Zero | GroundCharacter::One)) => Some((k, c)),
            _ => None,
        })
        .collect();
    definite.windows(2).find(|w| w[0].1 != w[1].1).map(|w| Crossing {
        lo_index: rows[w[0].0].index,
        hi_index: rows[w[1].0].index,
        lo: rows[w[0].0].value,
        hi: rows[w[1].0].value,
        from: w[0].1,
        to: w[1].1,
    })
}

/// Runs every point (in parallel with the `parallel` feature); rows come
/// back in sweep order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.sweep.validate()?;
    cfg.site.validate()?;
    if cfg.s == 0 {
        return Err(Error::InvalidParameter("sweep needs s >= 1 excitations per site".into()));
    }
    let values = cfg.sweep.values();
    let rows = par::map_collect(values.len(), |k| run_point(cfg, k, values[k]));
    let crossing = if rows.len() > 1 { detect_crossing(&rows) } else { None };
    Ok(SweepResult {
        parameter: cfg.sweep.parameter,
        rows,
        crossing,
    })
}
