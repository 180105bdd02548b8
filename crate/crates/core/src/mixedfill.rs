//! Non-integer filling `s + f`: `n_heavy` sites carry `s+1` excitations, the
//! rest carry `s`. At first order the hopping swaps heavy and light
//! polaritons across an edge; the manifold is degenerate only on resonance.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Edge, Lattice};
use crate::manybody::{assemble, BasisBlock, DEFAULT_DIM_CAP};
use crate::par;
use crate::site::{polariton_ground, SiteParams};
use crate::sparse::SparseHermitian;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MixedConfig {
    /// Sites carrying `s+1` excitations, ascending.
    pub occupied: Vec<usize>,
    /// Polariton index `n` of `Ψ⁻` on every site.
    pub internal: Vec<u32>,
}

impl MixedConfig {
    pub fn is_heavy(&self, site: usize) -> bool {
        self.occupied.binary_search(&site).is_ok()
    }

    pub fn excitations(&self, s: u32, site: usize) -> u32 {
        s + u32::from(self.is_heavy(site))
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

/// `C(n, h)·(s+1)^(n−h)·(s+2)^h`, saturating.
pub fn manifold_dimension(n_sites: usize, s: u32, n_heavy: usize) -> u128 {
    let light = (s as u128 + 1).checked_pow((n_sites - n_heavy) as u32).unwrap_or(u128::MAX);
    let heavy = (s as u128 + 2).checked_pow(n_heavy as u32).unwrap_or(u128::MAX);
    binomial(n_sites, n_heavy).saturating_mul(light).saturating_mul(heavy)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < k - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Degenerate ground manifold, ordered by heavy-site set (lexicographic),
/// then internal indices in mixed radix with site 0 most significant and
/// `n` descending.
pub fn mixed_manifold(lat: &Lattice, s: u32, n_heavy: usize) -> Result<Vec<MixedConfig>> {
    let n = lat.n_vertices();
    if n_heavy == 0 || n_heavy >= n {
        return Err(Error::InvalidParameter(format!(
            "mixed filling needs 0 < n_heavy < n_sites, got {n_heavy} of {n}"
        )));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("mixed filling needs s >= 1".into()));
    }
    let dim = manifold_dimension(n, s, n_heavy);
    if dim > DEFAULT_DIM_CAP as u128 {
        return Err(Error::DimensionCap {
            dim,
            cap: DEFAULT_DIM_CAP,
        });
    }
    let mut out = Vec::with_capacity(dim as usize);
    for occupied in combinations(n, n_heavy) {
        let top: Vec<u32> = (0..n).map(|v| s + u32::from(occupied.contains(&v))).collect();
        let mut internal = top.clone();
        loop {
            out.push(MixedConfig {
                occupied: occupied.clone(),
                internal: internal.clone(),
            });
            let mut k = n;
            let done = loop {
                if k == 0 {
                    break true;
                }
                k -= 1;
                if internal[k] > 0 {
                    internal[k] -= 1;
                    break false;
                }
                internal[k] = top[k];
            };
            if done {
                break;
            }
        }
    }
    Ok(out)
}

/// `(√s + √(s+1))² / (4(s+1))`.
pub fn prefactor(s: u32) -> f64 {
    let (a, b) = (f64::from(s).sqrt(), f64::from(s + 1).sqrt());
    (a + b).powi(2) / (4.0 * f64::from(s + 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    A,
    B,
}

/// Closed-form swap amplitudes for an unrotated edge with a light site at
/// polariton index `light_n` and a heavy site at `heavy_n`. Writing
/// `i = light_n`, `j = heavy_n − 1`, the a-branch yields heavy `i+1` / light `j`
/// with `prefactor·J_a·√((i+1)(j+1))`, and the b-branch heavy `i` / light
/// `j+1` with `prefactor·J_b·√((s−i+1)(s−j))`.
/// Returns `(branch, new heavy n, new light n, amplitude)`.
pub fn hopping_formula(s: u32, j_a: f64, j_b: f64, light_n: u32, heavy_n: u32) -> Vec<(Branch, u32, u32, f64)> {
    let pf = prefactor(s);
    let i = f64::from(light_n);
    let j = f64::from(heavy_n) - 1.0;
    let sf = f64::from(s);
    let mut out = Vec::new();
    if heavy_n >= 1 {
        out.push((Branch::A, light_n + 1, heavy_n - 1, pf * j_a * ((i + 1.0) * (j + 1.0)).sqrt()));
    }
    if heavy_n <= s {
        out.push((Branch::B, light_n, heavy_n, pf * j_b * ((sf - i + 1.0) * (sf - j)).sqrt()));
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MixedOptions {
    /// Skip the `g ≥ 10·J·s` validity check.
    pub allow_outside_regime: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixedHopping {
    pub s: u32,
    pub configs: Vec<MixedConfig>,
    pub matrix: SparseHermitian,
    /// Largest element between configurations with the same heavy-site set.
    pub same_type_max: f64,
}

/// Two-site projected hopping for one edge kind: manifold states of the pair
/// keyed by `(c_i, c_j, n_i, n_j)` and all matrix elements between them.
struct LocalTable {
    states: Vec<(u32, u32, u32, u32)>,
    index: HashMap<(u32, u32, u32, u32), usize>,
    matrix: DMatrix<C64>,
}

fn local_table(s: u32, p: &SiteParams, edge: &Edge) -> Result<LocalTable> {
    let mut e = Edge::new(0, 1, edge.j_a, edge.j_b);
    e.rotation = edge.rotation;
    let lat = Lattice::new(2, vec![e], None)?;
    let hop_only = SiteParams::resonant(0.0, 0.0)?;
    let mut states = Vec::new();
    let mut vectors: Vec<Vec<C64>> = Vec::new();
    let mut blocks = Vec::new();
    let psi = |c: u32, n: u32| -> Result<Vec<C64>> {
        Ok(polariton_ground(c, n, p)?.to_block_vector().iter().map(|&x| C64::from(x)).collect())
    };
    for total in [2 * s, 2 * s + 1, 2 * s + 2] {
        let block = BasisBlock::enumerate(2, total, usize::MAX)?;
        let h = assemble(&block, &lat, &hop_only)?;
        let first = states.len();
        for (ci, cj) in [(s, s), (s, s + 1), (s + 1, s), (s + 1, s + 1)] {
            if ci + cj != total {
                continue;
            }
            for ni in (0..=ci).rev() {
                for nj in (0..=cj).rev() {
                    states.push((ci, cj, ni, nj));
                    vectors.push(block.product_state(&[ci, cj], &[psi(ci, ni)?, psi(cj, nj)?])?);
                }
            }
        }
        blocks.push((first..states.len(), h));
    }
    let mut matrix = DMatrix::zeros(states.len(), states.len());
    for (range, h) in &blocks {
        for a in range.clone() {
            let ha = h.matvec(&vectors[a])?;
            for b in range.clone() {
                matrix[(b, a)] = vectors[b].iter().zip(&ha).map(|(x, y)| x.conj() * y).sum();
            }
        }
    }
    let index = states.iter().enumerate().map(|(k, st)| (*st, k)).collect();
    Ok(LocalTable { states, index, matrix })
}

/// First-order effective hopping on the mixed manifold by direct projection
/// of `H_hop` onto products of exact `Ψ⁻` states.
pub fn first_order_hopping(lat: &Lattice, s: u32, n_heavy: usize, p: &SiteParams, opts: MixedOptions) -> Result<MixedHopping> {
    p.validate()?;
    if !p.is_resonant() {
        return Err(Error::Detuned {
            delta_a: p.delta_a,
            delta_b: p.delta_b,
        });
    }
    let j_max = lat.max_hopping();
    if !opts.allow_outside_regime && p.g < 10.0 * j_max * f64::from(s) {
        return Err(Error::Regime(format!(
            "g = {} is not much larger than J·s = {}; first-order hopping needs g >= 10·J·s",
            p.g,
            j_max * f64::from(s)
        )));
    }
    let configs = mixed_manifold(lat, s, n_heavy)?;
    let rank: HashMap<&MixedConfig, usize> = configs.iter().enumerate().map(|(k, c)| (c, k)).collect();

    let mut kinds: Vec<(Edge, LocalTable)> = Vec::new();
    let mut edge_kind = Vec::with_capacity(lat.edges().len());
    for e in lat.edges() {
        let same = |k: &Edge| k.j_a == e.j_a && k.j_b == e.j_b && k.rotation == e.rotation;
        match kinds.iter().position(|(k, _)| same(k)) {
            Some(pos) => edge_kind.push(pos),
            None => {
                kinds.push((*e, local_table(s, p, e)?));
                edge_kind.push(kinds.len() - 1);
            }
        }
    }

    let rows = par::map_collect(configs.len(), |row| {
        let x = &configs[row];
        let mut out = Vec::new();
        for (e, &kind) in lat.edges().iter().zip(&edge_kind) {
            let table = &kinds[kind].1;
            let key = (x.excitations(s, e.i), x.excitations(s, e.j), x.internal[e.i], x.internal[e.j]);
            let a = table.index[&key];
            for (b, st) in table.states.iter().enumerate() {
                let v = table.matrix[(b, a)];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut y = x.clone();
                y.internal[e.i] = st.2;
                y.internal[e.j] = st.3;
                for (site, c) in [(e.i, st.0), (e.j, st.1)] {
                    let heavy = c == s + 1;
                    match (y.occupied.binary_search(&site), heavy) {
                        (Ok(pos), false) => {
                            y.occupied.remove(pos);
                        }
                        (Err(pos), true) => y.occupied.insert(pos, site),
                        _ => {}
                    }
                }
                let col = rank[&y];
                out.push((col, v.conj()));
            }
        }
        out
    });
    let matrix = SparseHermitian::from_rows(configs.len(), rows)?;
    let mut same_type_max = 0.0f64;
    for r in 0..matrix.dim() {
        for (c, v) in matrix.row(r) {
            if configs[r].occupied == configs[c].occupied {
                same_type_max = same_type_max.max(v.norm());
            }
        }
    }
    // Pairs of equal type never reach the matrix through a swap; check them directly.
    for (_, table) in &kinds {
        for (b, sb) in table.states.iter().enumerate() {
            for (a, sa) in table.states.iter().enumerate() {
                if sa.0 == sa.1 && sb.0 == sb.1 {
                    same_type_max = same_type_max.max(table.matrix[(b, a)].norm());
                }
            }
        }
    }
    Ok(MixedHopping {
        s,
        configs,
        matrix,
        same_type_max,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub branch: Branch,
    pub light_n: u32,
    pub heavy_n: u32,
    pub new_heavy_n: u32,
    pub new_light_n: u32,
    pub projected: f64,
    pub formula: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedAudit {
    pub s: u32,
    pub prefactor: f64,
    pub rows: Vec<AuditRow>,
    /// Projected swap elements with no closed-form counterpart.
    pub unmatched: usize,
    pub max_relative_error: f64,
    pub same_type_max: f64,
    pub hermitian: bool,
}

/// Compares every nonzero swap element of a two-site system (site 0 light,
/// site 1 heavy initially) with [`hopping_formula`].
pub fn audit_pair(s: u32, p: &SiteParams, j_a: f64, j_b: f64, opts: MixedOptions) -> Result<MixedAudit> {
    let lat = crate::lattice::chain(2, false, j_a, j_b)?;
    let hop = first_order_hopping(&lat, s, 1, p, opts)?;
    let rank: HashMap<&MixedConfig, usize> = hop.configs.iter().enumerate().map(|(k, c)| (c, k)).collect();
    let mut rows = Vec::new();
    let mut max_rel = 0.0f64;
    let mut nonzero = 0usize;
    for x in hop.configs.iter().filter(|c| c.occupied == [1]) {
        let (light_n, heavy_n) = (x.internal[0], x.internal[1]);
        for (branch, new_heavy_n, new_light_n, formula) in hopping_formula(s, j_a, j_b, light_n, heavy_n) {
            let y = MixedConfig {
                occupied: vec![0],
                internal: vec![new_heavy_n, new_light_n],
            };
            let projected = hop.matrix.get(rank[&y], rank[x]).conj();
            if projected.norm() > 0.0 || formula != 0.0 {
                let err = (projected - C64::from(formula)).norm() / formula.abs().max(f64::MIN_POSITIVE);
                max_rel = max_rel.max(err);
                rows.push(AuditRow {
                    branch,
                    light_n,
                    heavy_n,
                    new_heavy_n,
                    new_light_n,
                    projected: projected.re,
                    formula,
                });
            }
        }
        let from = rank[x];
        for r in 0..hop.matrix.dim() {
            if hop.configs[r].occupied == [0] && hop.matrix.get(r, from).norm() > 0.0 {
                nonzero += 1;
            }
        }
    }
    let predicted = rows.iter().filter(|r| r.projected != 0.0).count();
    Ok(MixedAudit {
        s,
        prefactor: prefactor(s),
        unmatched: nonzero.saturating_sub(predicted),
        max_relative_error: max_rel,
        same_type_max: hop.same_type_max,
        hermitian: hop.matrix.is_hermitian(1e-14 * j_a.max(j_b)),
        rows,
    })
}
