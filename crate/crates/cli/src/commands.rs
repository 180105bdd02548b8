use std::path::Path;

use cca_core::eigensolve::{dense_spectrum, solve};
use cca_core::lattice::PolarizationRotation;
use cca_core::manybody::{assemble, BasisBlock};
use cca_core::mixedfill::{audit_pair, first_order_hopping, MixedAudit};
use cca_core::perturbation::{extract_coefficients, ground_manifold, pair_effective, EffectiveCoefficients, SpinNormalization};
use cca_core::regime::{evaluate, RegimeInputs, RegimeReport};
use cca_core::site::{analytic_eigensystem, site_spectrum, SiteParams};
use cca_core::spinmodel::{build_spin_hamiltonian, effective_model, kitaev_honeycomb};
use cca_core::sweep::{effective_ground, full_ground, overlaps, run_sweep, GroundCharacter, Overlaps, SweepConfig, SweepResult};
use cca_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::output::{format_float, Cell, Report, Table};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteBlock {
    pub s: u32,
    pub eigenvalues: Vec<f64>,
    pub analytic: Option<Vec<f64>>,
    pub max_abs_error: Option<f64>,
    /// Set when detuning rules out the closed forms.
    pub no_analytic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteSpectrumReport {
    pub site: SiteParams,
    pub blocks: Vec<SiteBlock>,
}

impl Report for SiteSpectrumReport {
    const KIND: &'static str = "site-spectrum";

    fn table(&self) -> Table {
        let mut t = Table::new(vec!["s", "index", "numeric", "analytic", "abs_error", "no_analytic"]);
        for b in &self.blocks {
            for (k, &e) in b.eigenvalues.iter().enumerate() {
                let a = b.analytic.as_ref().map(|v| v[k]);
                t.push(vec![
                    b.s.into(),
                    k.into(),
                    e.into(),
                    a.into(),
                    a.map(|a| (e - a).abs()).into(),
                    b.no_analytic.into(),
                ]);
            }
        }
        t
    }
}

pub fn site_spectrum_cmd(cfg: &RunConfig) -> Result<SiteSpectrumReport> {
    let p = cfg.site;
    let blocks = cfg
        .s_values
        .iter()
        .map(|&s| {
            let eigenvalues = site_spectrum(s, &p);
            let analytic = match (s, p.is_resonant()) {
                (_, false) => None,
                (0, true) => Some(vec![0.0]),
                (_, true) => {
                    let mut e: Vec<f64> = analytic_eigensystem(s, &p)?.iter().map(|st| st.energy).collect();
                    e.sort_by(f64::total_cmp);
                    Some(e)
                }
            };
            let max_abs_error = analytic
                .as_ref()
                .map(|a| a.iter().zip(&eigenvalues).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max));
            Ok(SiteBlock {
                s,
                eigenvalues,
                no_analytic: analytic.is_none(),
                analytic,
                max_abs_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SiteSpectrumReport { site: p, blocks })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoefficients {
    pub i: usize,
    pub j: usize,
    pub j_a: f64,
    pub j_b: f64,
    pub rotation: Option<PolarizationRotation>,
    pub coefficients: EffectiveCoefficients,
    pub hermiticity_defect: f64,
    pub first_order_max: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCoeffsReport {
    pub s: u32,
    pub normalization: SpinNormalization,
    pub edges: Vec<EdgeCoefficients>,
}

impl Report for PairCoeffsReport {
    const KIND: &'static str = "pair-coeffs";

    fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "i", "j", "j_a", "j_b", "rotated", "kappa_eff", "b_z", "lambda_z", "lambda_x", "residual_norm", "first_order_max",
        ]);
        for e in &self.edges {
            let c = &e.coefficients;
            t.push(vec![
                e.i.into(),
                e.j.into(),
                e.j_a.into(),
                e.j_b.into(),
                e.rotation.is_some().into(),
                c.kappa_eff.into(),
                c.b_z.into(),
                c.lambda_z.into(),
                c.lambda_x.into(),
                c.residual_norm.into(),
                e.first_order_max.into(),
            ]);
        }
        t
    }
}

pub fn pair_coeffs_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<PairCoeffsReport> {
    let lat = cfg.lattice(base)?;
    let s = cfg.per_site(lat.n_vertices())?;
    let norm = cfg.normalization.unwrap_or(SpinNormalization::conventional(s));
    let edges = lat
        .edges()
        .iter()
        .map(|e| {
            let r = pair_effective(s, &cfg.site, e.j_a, e.j_b, e.rotation.as_ref())?;
            Ok(EdgeCoefficients {
                i: e.i,
                j: e.j,
                j_a: e.j_a,
                j_b: e.j_b,
                rotation: e.rotation,
                coefficients: extract_coefficients(&r, norm)?,
                hermiticity_defect: r.hermiticity_defect(),
                first_order_max: r.first_order_max,
                warnings: r.warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairCoeffsReport { s, normalization: norm, edges })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundReport {
    pub n_sites: usize,
    pub total_excitations: u32,
    pub dim: usize,
    pub sectors: usize,
    pub energy: f64,
    pub first_excited: Option<f64>,
    pub gap: Option<f64>,
    /// `energy − n·(sω₀ − g√s)`; integer filling only.
    pub shifted_energy: Option<f64>,
    /// Effective spin-model ground energy on the shifted scale.
    pub effective_energy: Option<f64>,
    pub overlaps: Option<Overlaps>,
    pub character: Option<GroundCharacter>,
    pub residual: f64,
    pub iterations: usize,
}

impl Report for GroundReport {
    const KIND: &'static str = "ground";

    fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "n_sites",
            "total_excitations",
            "dim",
            "energy",
            "gap",
            "shifted_energy",
            "effective_energy",
            "overlap_zero",
            "overlap_one",
            "overlap_manifold",
            "character",
        ]);
        let o = self.overlaps;
        t.push(vec![
            self.n_sites.into(),
            self.total_excitations.into(),
            self.dim.into(),
            self.energy.into(),
            self.gap.into(),
            self.shifted_energy.into(),
            self.effective_energy.into(),
            o.map(|o| o.zero).into(),
            o.map(|o| o.one).into(),
            o.and_then(|o| o.manifold).into(),
            self.character.map_or(Cell::Missing, |c| format!("{c:?}").to_lowercase().into()),
        ]);
        t
    }
}

pub fn ground_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<GroundReport> {
    let lat = cfg.lattice(base)?;
    let n = lat.n_vertices();
    let ex = cfg.excitations()?;
    let total = ex.total(n);
    let opts = cfg.ground_options();
    match ex.per_site(n) {
        Some(s) if s > 0 => {
            let g = full_ground(&lat, &cfg.site, s, &opts)?;
            let o = overlaps(&g, s, &cfg.site)?;
            Ok(GroundReport {
                n_sites: n,
                total_excitations: total,
                dim: g.block.dim(),
                sectors: g.sectors,
                energy: g.energy,
                first_excited: g.first_excited,
                gap: g.gap(),
                shifted_energy: Some(g.energy - n as f64 * cfg.site.polariton_energy(s)),
                effective_energy: Some(effective_ground(&lat, &cfg.site, s, &cfg.solver)?),
                overlaps: Some(o),
                character: Some(o.character()),
                residual: g.residual,
                iterations: g.iterations,
            })
        }
        _ => {
            let block = BasisBlock::enumerate(n, total, cfg.dim_cap)?;
            let h = assemble(&block, &lat, &cfg.site)?;
            let r = solve(&h, 2.min(h.dim()), &cfg.solver, cfg.method)?;
            Ok(GroundReport {
                n_sites: n,
                total_excitations: total,
                dim: block.dim(),
                sectors: 1,
                energy: r.ground_energy(),
                first_excited: r.eigenvalues.get(1).copied(),
                gap: r.gap(),
                shifted_energy: None,
                effective_energy: None,
                overlaps: None,
                character: None,
                residual: r.residuals[0],
                iterations: r.iterations,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SweepReport(pub SweepResult);

impl Report for SweepReport {
    const KIND: &'static str = "sweep";

    fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "index",
            "value",
            "e_full_raw",
            "e_full_shifted",
            "e_eff",
            "deviation",
            "overlap_zero",
            "overlap_one",
            "overlap_manifold",
            "gap",
            "character",
            "error",
        ]);
        for r in &self.0.rows {
            t.push(vec![
                r.index.into(),
                r.value.into(),
                r.e_full_raw.into(),
                r.e_full_shifted.into(),
                r.e_eff.into(),
                r.deviation.into(),
                r.overlap_zero.into(),
                r.overlap_one.into(),
                r.overlap_manifold.into(),
                r.gap.into(),
                r.character.map_or(Cell::Missing, |c| format!("{c:?}").to_lowercase().into()),
                r.error.clone().map_or(Cell::Missing, Cell::Text),
            ]);
        }
        if let Some(c) = self.0.crossing {
            t.notes.push(format!(
                "crossing {} {} {:?} {:?}",
                format_float(c.lo),
                format_float(c.hi),
                c.from,
                c.to
            ));
        }
        t
    }
}

pub fn sweep_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<SweepReport> {
    let lattice = cfg.lattice(base)?;
    let s = cfg.per_site(lattice.n_vertices())?;
    let sweep = cfg.sweep.ok_or_else(|| Error::InvalidParameter("config has no sweep".into()))?;
    let sc = SweepConfig {
        lattice,
        site: cfg.site,
        s,
        sweep,
        ground: cfg.ground_options(),
    };
    run_sweep(&sc).map(SweepReport)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinGroundReport {
    pub n_sites: usize,
    pub s: u32,
    pub dim: usize,
    /// Lowest levels of the spin Hamiltonian, ascending.
    pub energies: Vec<f64>,
    /// Ground energy on the full-model shifted scale.
    pub shifted_ground: f64,
    pub degenerate: bool,
    pub residual: f64,
}

impl Report for SpinGroundReport {
    const KIND: &'static str = "spin-ground";

    fn table(&self) -> Table {
        levels_table(&self.energies)
    }
}

fn levels_table(energies: &[f64]) -> Table {
    let mut t = Table::new(vec!["level", "energy"]);
    for (k, &e) in energies.iter().enumerate() {
        t.push(vec![k.into(), e.into()]);
    }
    t
}

pub fn spin_ground_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<SpinGroundReport> {
    let lat = cfg.lattice(base)?;
    let n = lat.n_vertices();
    let s = cfg.per_site(n)?;
    let model = effective_model(&lat, s, &cfg.site)?;
    let h = build_spin_hamiltonian(&model)?;
    let r = solve(&h, cfg.levels.min(h.dim()), &cfg.solver, cfg.method)?;
    let (_, eps) = ground_manifold(s, &cfg.site)?;
    let eps_min = eps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SpinGroundReport {
        n_sites: n,
        s,
        dim: h.dim(),
        shifted_ground: r.ground_energy() + n as f64 * (eps_min - cfg.site.polariton_energy(s)),
        degenerate: r.degenerate,
        residual: r.residuals[0],
        energies: r.eigenvalues,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KitaevReport {
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
    pub d: usize,
    pub n_sites: usize,
    pub n_edges: usize,
    pub dim: usize,
    pub energies: Vec<f64>,
    pub degenerate: bool,
}

impl Report for KitaevReport {
    const KIND: &'static str = "kitaev";

    fn table(&self) -> Table {
        levels_table(&self.energies)
    }
}

pub fn kitaev_cmd(cfg: &RunConfig) -> Result<KitaevReport> {
    let k = cfg.kitaev.ok_or_else(|| Error::InvalidParameter("config has no kitaev section".into()))?;
    let (lat, model) = kitaev_honeycomb(k.rows, k.cols, k.lambda, k.d)?;
    let h = build_spin_hamiltonian(&model)?;
    let r = solve(&h, cfg.levels.min(h.dim()), &cfg.solver, cfg.method)?;
    Ok(KitaevReport {
        rows: k.rows,
        cols: k.cols,
        lambda: k.lambda,
        d: k.d,
        n_sites: lat.n_vertices(),
        n_edges: lat.edges().len(),
        dim: h.dim(),
        energies: r.eigenvalues,
        degenerate: r.degenerate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedReport {
    pub s: u32,
    pub n_heavy: usize,
    pub n_sites: usize,
    pub manifold_dim: usize,
    pub hermitian: bool,
    pub same_type_max: f64,
    /// Lowest levels of the first-order hopping operator.
    pub spectrum: Vec<f64>,
    /// Two-site element audit at the first edge's hopping.
    pub audit: MixedAudit,
}

impl Report for MixedReport {
    const KIND: &'static str = "mixed";

    fn table(&self) -> Table {
        let mut t = Table::new(vec![
            "branch",
            "light_n",
            "heavy_n",
            "new_heavy_n",
            "new_light_n",
            "projected",
            "formula",
        ]);
        for r in &self.audit.rows {
            t.push(vec![
                format!("{:?}", r.branch).to_lowercase().into(),
                r.light_n.into(),
                r.heavy_n.into(),
                r.new_heavy_n.into(),
                r.new_light_n.into(),
                r.projected.into(),
                r.formula.into(),
            ]);
        }
        t
    }
}

pub fn mixed_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<MixedReport> {
    let lat = cfg.lattice(base)?;
    let n = lat.n_vertices();
    let s = cfg.per_site(n)?;
    let m = cfg.mixed.ok_or_else(|| Error::InvalidParameter("config has no mixed section".into()))?;
    let first = lat
        .edges()
        .first()
        .ok_or_else(|| Error::InvalidLattice("mixed filling needs at least one edge".into()))?;
    let audit = audit_pair(s, &cfg.site, first.j_a, first.j_b, m.options())?;
    let hop = first_order_hopping(&lat, s, m.n_heavy, &cfg.site, m.options())?;
    let levels = cfg.levels.min(hop.matrix.dim());
    let spectrum = if hop.matrix.dim() <= cfg.solver.dense_cap {
        let mut e = dense_spectrum(&hop.matrix, cfg.solver.dense_cap)?.eigenvalues;
        e.truncate(levels);
        e
    } else {
        solve(&hop.matrix, levels, &cfg.solver, cfg.method)?.eigenvalues
    };
    Ok(MixedReport {
        s,
        n_heavy: m.n_heavy,
        n_sites: n,
        manifold_dim: hop.matrix.dim(),
        hermitian: hop.matrix.is_hermitian(1e-14 * hop.matrix.norm_bound().max(f64::MIN_POSITIVE)),
        same_type_max: hop.same_type_max,
        spectrum,
        audit,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegimeOutput(pub RegimeReport);

impl Report for RegimeOutput {
    const KIND: &'static str = "regime";

    /// An empty margin cell is an infinite margin.
    fn table(&self) -> Table {
        let mut t = Table::new(vec!["name", "inequality", "margin", "satisfied"]);
        for v in &self.0.verdicts {
            t.push(vec![v.name.clone().into(), v.inequality.clone().into(), v.margin.into(), v.satisfied.into()]);
        }
        t
    }
}

pub fn regime_cmd(cfg: &RunConfig, base: Option<&Path>) -> Result<RegimeOutput> {
    let lat = cfg.lattice(base)?;
    let s = cfg.per_site(lat.n_vertices())?;
    let rates = cfg
        .regime
        .ok_or_else(|| Error::InvalidParameter("regime check needs kappa_loss and gamma".into()))?;
    evaluate(&RegimeInputs {
        s,
        g: cfg.site.g,
        j_max: lat.max_hopping(),
        kappa_loss: rates.kappa_loss,
        gamma: rates.gamma,
        threshold: rates.threshold,
    })
    .map(RegimeOutput)
}
