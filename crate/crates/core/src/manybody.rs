//! Fixed-excitation product bases over the whole array and the full
//! cavity-array Hamiltonian `Σ_sites H_site + Σ_edges H_hop`.
//!
//! Both terms conserve the total number of excitations, so working inside a
//! block of fixed `S_tot` is exact: every per-site photon number is bounded by
//! `S_tot` and no Fock-space truncation is needed.
//!
//! Basis order: compositions `(s_0, …, s_{n−1})` of `S_tot` in ascending
//! lexicographic order; within a composition, the per-site block indices of
//! [`site::block_states`] in mixed radix with site 0 most significant.
//! Ranking uses precomputed tail counts, `O(n_sites · S_tot)` per lookup.

use std::ops::Range;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::par;
use crate::site::{self, block_size, local_index, Mode, SiteParams, SiteState};
use crate::sparse::SparseHermitian;

pub const DEFAULT_DIM_CAP: usize = 4_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BasisBlock {
    n_sites: usize,
    s_tot: u32,
    /// `tail[k][r]`: number of configurations of sites `k..` carrying `r` excitations.
    tail: Vec<Vec<usize>>,
    states: Vec<SiteState>,
}

fn tail_counts(n_sites: usize, s_tot: u32) -> Vec<Vec<u128>> {
    let r_max = s_tot as usize;
    let mut tail = vec![vec![0u128; r_max + 1]; n_sites + 1];
    tail[n_sites][0] = 1;
    for k in (0..n_sites).rev() {
        for r in 0..=r_max {
            tail[k][r] = (0..=r)
                .map(|s| (block_size(s as u32) as u128).saturating_mul(tail[k + 1][r - s]))
                .fold(0u128, u128::saturating_add);
        }
    }
    tail
}

/// Dimension of the `s_tot` block over `n_sites` cavities, saturating at `u128::MAX`.
pub fn block_dimension(n_sites: usize, s_tot: u32) -> u128 {
    tail_counts(n_sites, s_tot)[0][s_tot as usize]
}

impl BasisBlock {
    pub fn enumerate(n_sites: usize, s_tot: u32, cap: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter("basis needs at least one site".into()));
        }
        let wide = tail_counts(n_sites, s_tot);
        let dim = wide[0][s_tot as usize];
        if dim > cap as u128 {
            return Err(Error::DimensionCap { dim, cap });
        }
        let tail: Vec<Vec<usize>> = wide.iter().map(|row| row.iter().map(|&x| x as usize).collect()).collect();

        let mut states = Vec::with_capacity(dim as usize * n_sites);
        let mut comp = vec![0u32; n_sites];
        compositions(&mut comp, 0, s_tot, &mut |c| {
            let blocks: Vec<Vec<SiteState>> = c.iter().map(|&s| site::block_states(s)).collect();
            let mut idx = vec![0usize; n_sites];
            loop {
                states.extend(idx.iter().zip(&blocks).map(|(&i, b)| b[i]));
                // Mixed-radix increment, last site fastest.
                let mut k = n_sites;
                loop {
                    if k == 0 {
                        return;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < blocks[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        });
        debug_assert_eq!(states.len(), dim as usize * n_sites);
        Ok(Self {
            n_sites,
            s_tot,
            tail,
            states,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn total_excitations(&self) -> u32 {
        self.s_tot
    }

    pub fn dim(&self) -> usize {
        self.states.len() / self.n_sites
    }

    pub fn state(&self, idx: usize) -> &[SiteState] {
        &self.states[idx * self.n_sites..(idx + 1) * self.n_sites]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[SiteState]> {
        self.states.chunks_exact(self.n_sites)
    }

    /// Offset of the first configuration with excitation composition `comp`.
    fn composition_offset(&self, comp: &[u32]) -> usize {
        let mut offset = 0usize;
        let mut prefix = 1usize;
        let mut remaining = self.s_tot as usize;
        for (k, &sk) in comp.iter().enumerate() {
            let sk = sk as usize;
            for s in 0..sk {
                offset += prefix * block_size(s as u32) * self.tail[k + 1][remaining - s];
            }
            prefix *= block_size(sk as u32);
            remaining -= sk;
        }
        offset
    }

    /// Contiguous index range holding every configuration with composition `comp`.
    pub fn composition_range(&self, comp: &[u32]) -> Option<Range<usize>> {
        if comp.len() != self.n_sites || comp.iter().sum::<u32>() != self.s_tot {
            return None;
        }
        let start = self.composition_offset(comp);
        let len: usize = comp.iter().map(|&s| block_size(s)).product();
        Some(start..start + len)
    }

    /// Position of `config` in the block, or `None` if it does not belong to it.
    pub fn rank(&self, config: &[SiteState]) -> Option<usize> {
        if config.len() != self.n_sites {
            return None;
        }
        let comp: Vec<u32> = config.iter().map(SiteState::excitations).collect();
        if comp.iter().sum::<u32>() != self.s_tot {
            return None;
        }
        let mut inner = 0usize;
        for (st, &s) in config.iter().zip(&comp) {
            inner = inner * block_size(s) + local_index(st);
        }
        Some(self.composition_offset(&comp) + inner)
    }

    /// Embeds the product state `⊗_k v_k`, where `v_k` lives in the site block
    /// `comps[k]`, as a vector of this block.
    pub fn product_state(&self, comps: &[u32], vectors: &[Vec<C64>]) -> Result<Vec<C64>> {
        let range = self.composition_range(comps).ok_or_else(|| {
            Error::InvalidParameter(format!("composition {comps:?} is not part of the S_tot = {} block", self.s_tot))
        })?;
        for (v, &s) in vectors.iter().zip(comps) {
            if v.len() != block_size(s) {
                return Err(Error::DimensionMismatch {
                    expected: block_size(s),
                    found: v.len(),
                });
            }
        }
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for idx in range {
            out[idx] = self
                .state(idx)
                .iter()
                .zip(vectors)
                .map(|(st, v)| v[local_index(st)])
                .product();
        }
        Ok(out)
    }
}

fn compositions(comp: &mut [u32], k: usize, remaining: u32, visit: &mut dyn FnMut(&[u32])) {
    if k + 1 == comp.len() {
        comp[k] = remaining;
        visit(comp);
        return;
    }
    for s in 0..=remaining {
        comp[k] = s;
        compositions(comp, k + 1, remaining - s, visit);
    }
}

/// Hopping data of one edge, prepared once per assembly.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HopTerm {
    i: usize,
    j: usize,
    m: Matrix2<C64>,
}

pub(crate) fn hop_terms(lat: &Lattice) -> Vec<HopTerm> {
    lat.edges()
        .iter()
        .map(|e| HopTerm {
            i: e.i,
            j: e.j,
            m: e.hopping_matrix(),
        })
        .collect()
}

/// Calls `emit(config', ⟨config'|H|config⟩)` for every term of `H|config⟩`.
/// `scratch` must have the length of `config`.
pub(crate) fn apply_hamiltonian(
    config: &[SiteState],
    hops: &[HopTerm],
    p: &SiteParams,
    scratch: &mut Vec<SiteState>,
    emit: &mut dyn FnMut(&[SiteState], C64),
) {
    scratch.clear();
    scratch.extend_from_slice(config);
    for k in 0..config.len() {
        for (to, amp) in site::apply_onsite(&config[k], p) {
            scratch[k] = to;
            emit(scratch, C64::new(amp, 0.0));
        }
        scratch[k] = config[k];
    }
    for h in hops {
        for (dst, src) in [(h.i, h.j), (h.j, h.i)] {
            for q in Mode::BOTH {
                let Some((src_state, a_src)) = config[src].annihilate(q) else {
                    continue;
                };
                for pm in Mode::BOTH {
                    let coef = h.m[(pm.index(), q.index())];
                    if coef == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let (dst_state, a_dst) = config[dst].create(pm);
                    scratch[src] = src_state;
                    scratch[dst] = dst_state;
                    emit(scratch, coef * (a_src * a_dst));
                    scratch[src] = config[src];
                    scratch[dst] = config[dst];
                }
            }
        }
    }
}

/// Full Hamiltonian restricted to `block`. Rows are generated independently
/// (in parallel with the `parallel` feature) and the result does not depend on
/// scheduling.
pub fn assemble(block: &BasisBlock, lat: &Lattice, p: &SiteParams) -> Result<SparseHermitian> {
    if lat.n_vertices() != block.n_sites() {
        return Err(Error::DimensionMismatch {
            expected: block.n_sites(),
            found: lat.n_vertices(),
        });
    }
    p.validate()?;
    let hops = hop_terms(lat);
    let rows = par::map_collect(block.dim(), |row| {
        let mut entries = Vec::with_capacity(4 * block.n_sites() + 8 * hops.len());
        let mut scratch = Vec::with_capacity(block.n_sites());
        apply_hamiltonian(block.state(row), &hops, p, &mut scratch, &mut |cfg, amp| {
            let col = block.rank(cfg).expect("Hamiltonian conserves excitations");
            // Row r of H holds conj(⟨c|H|r⟩).
            entries.push((col, amp.conj()));
        });
        entries
    });
    SparseHermitian::from_rows(block.dim(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{dense_spectrum, lowest_k, SolverOptions};
    use crate::lattice::{chain, Edge, PolarizationRotation};
    use std::collections::{BTreeSet, HashMap};

    /// Brute-force oracle: all per-site states up to `s_tot`, filtered.
    fn brute_force(n_sites: usize, s_tot: u32) -> BTreeSet<Vec<SiteState>> {
        let singles: Vec<SiteState> = site::site_basis(s_tot).into_iter().flatten().collect();
        let mut out = BTreeSet::new();
        let mut idx = vec![0usize; n_sites];
        'outer: loop {
            let cfg: Vec<SiteState> = idx.iter().map(|&i| singles[i]).collect();
            if cfg.iter().map(SiteState::excitations).sum::<u32>() == s_tot {
                out.insert(cfg);
            }
            for k in (0..n_sites).rev() {
                idx[k] += 1;
                if idx[k] < singles.len() {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        out
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(BasisBlock::enumerate(1, 1, 100).unwrap().dim(), 4);
        assert_eq!(BasisBlock::enumerate(2, 2, 100).unwrap().dim(), 30);
        assert_eq!(BasisBlock::enumerate(4, 4, 10_000).unwrap().dim(), 2426);
        assert_eq!(block_dimension(4, 4), 2426);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (n, s) in [(1, 3), (2, 2), (3, 3), (4, 4), (2, 5)] {
            let block = BasisBlock::enumerate(n, s, 100_000).unwrap();
            let listed: BTreeSet<Vec<SiteState>> = block.iter().map(|c| c.to_vec()).collect();
            assert_eq!(listed.len(), block.dim(), "duplicates for n={n} s={s}");
            assert_eq!(listed, brute_force(n, s));
        }
    }

    #[test]
    fn rank_inverts_enumeration() {
        let block = BasisBlock::enumerate(4, 4, 10_000).unwrap();
        for idx in 0..block.dim() {
            assert_eq!(block.rank(block.state(idx)), Some(idx));
        }
        let wrong = vec![SiteState::VACUUM; 4];
        assert_eq!(block.rank(&wrong), None);
    }

    #[test]
    fn order_is_composition_major() {
        let block = BasisBlock::enumerate(3, 2, 1000).unwrap();
        let comps: Vec<Vec<u32>> = block.iter().map(|c| c.iter().map(SiteState::excitations).collect()).collect();
        assert!(comps.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(comps[0], vec![0, 0, 2]);
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(BasisBlock::enumerate(12, 12, 1000), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn vacuum_block() {
        let lat = chain(2, false, 0.3, 0.1).unwrap();
        let block = BasisBlock::enumerate(2, 0, 10).unwrap();
        let h = assemble(&block, &lat, &SiteParams::resonant(0.0, 1.0).unwrap()).unwrap();
        assert_eq!(h.dim(), 1);
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn free_photon_hops() {
        let ja = 0.37;
        let lat = chain(2, false, ja, 0.0).unwrap();
        let block = BasisBlock::enumerate(2, 1, 10).unwrap();
        let p = SiteParams::resonant(0.0, 0.0).unwrap();
        let h = assemble(&block, &lat, &p).unwrap();
        let ga = block.rank(&[SiteState::new(site::AtomLevel::G, 1, 0), SiteState::VACUUM]).unwrap();
        let gb = block.rank(&[SiteState::VACUUM, SiteState::new(site::AtomLevel::G, 1, 0)]).unwrap();
        assert_eq!(h.get(ga, gb), C64::new(ja, 0.0));
        let spec = dense_spectrum(&h, 100).unwrap();
        assert!((spec.eigenvalues[0] + ja).abs() < 1e-15);
        assert!((spec.eigenvalues[7] - ja).abs() < 1e-15);
        let l = lowest_k(&h, 1, &SolverOptions::default()).unwrap();
        assert!((l.eigenvalues[0] + ja).abs() < 1e-14);
    }

    #[test]
    fn decoupled_pair_is_tensor_sum() {
        let p = SiteParams::resonant(0.3, 1.0).unwrap();
        let lat = chain(2, false, 0.0, 0.0).unwrap();
        let block = BasisBlock::enumerate(2, 2, 100).unwrap();
        let h = assemble(&block, &lat, &p).unwrap();
        let got = dense_spectrum(&h, 100).unwrap().eigenvalues;
        let mut want = Vec::new();
        for s0 in 0..=2 {
            for a in site::site_spectrum(s0, &p) {
                for b in site::site_spectrum(2 - s0, &p) {
                    want.push(a + b);
                }
            }
        }
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(want.iter().filter(|&&e| (e - 2.0 * (0.3 - 1.0)).abs() < 1e-12).count() == 4);
    }

    #[test]
    fn hermitian_with_complex_rotation() {
        let r = PolarizationRotation::new(0.9, [0.0, 0.6, 0.8]).unwrap();
        let lat = Lattice::new(3, vec![Edge::new(0, 1, 0.2, 0.1).with_rotation(r), Edge::new(1, 2, 0.05, 0.3)], None).unwrap();
        let block = BasisBlock::enumerate(3, 3, 10_000).unwrap();
        let h = assemble(&block, &lat, &SiteParams::new(0.1, 1.0, 0.01, -0.02).unwrap()).unwrap();
        assert!(h.is_hermitian(1e-14));
        assert!(!h.is_real_symmetric());
        assert!(!lat.is_real());

        let real = chain(3, false, 0.2, 0.1).unwrap();
        let h = assemble(&block, &real, &SiteParams::resonant(0.1, 1.0).unwrap()).unwrap();
        assert!(h.is_real_symmetric());
    }

    #[test]
    fn excitation_number_commutes_on_block_union() {
        let r = PolarizationRotation::new(0.4, [0.0, 0.0, 1.0]).unwrap();
        let lat = Lattice::new(3, vec![Edge::new(0, 1, 0.2, 0.1), Edge::new(1, 2, 0.3, 0.25).with_rotation(r)], None).unwrap();
        let p = SiteParams::resonant(0.5, 1.0).unwrap();
        let blocks = [BasisBlock::enumerate(3, 2, 1000).unwrap(), BasisBlock::enumerate(3, 3, 1000).unwrap()];
        let union: Vec<Vec<SiteState>> = blocks.iter().flat_map(|b| b.iter().map(|c| c.to_vec())).collect();
        let index: HashMap<Vec<SiteState>, usize> = union.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
        let n_exc: Vec<f64> = union.iter().map(|c| c.iter().map(|s| s.excitations()).sum::<u32>() as f64).collect();
        let hops = hop_terms(&lat);
        let mut rows = vec![Vec::new(); union.len()];
        let mut scratch = Vec::new();
        for (col, cfg) in union.iter().enumerate() {
            apply_hamiltonian(cfg, &hops, &p, &mut scratch, &mut |to, amp| {
                let row = *index.get(to).expect("target escaped the union of blocks");
                rows[row].push((col, amp));
            });
        }
        let h = SparseHermitian::from_rows(union.len(), rows).unwrap();
        // [H, N]_{rc} = H_rc (N_c − N_r)
        for r in 0..h.dim() {
            for (c, v) in h.row(r) {
                assert!((v * (n_exc[c] - n_exc[r])).norm() == 0.0);
            }
        }
    }

    #[test]
    fn product_state_embedding() {
        let block = BasisBlock::enumerate(2, 2, 100).unwrap();
        let p = SiteParams::resonant(0.0, 1.0).unwrap();
        let zero: Vec<C64> = site::polariton_ground(1, 1, &p).unwrap().to_block_vector().iter().map(|&x| C64::new(x, 0.0)).collect();
        let v = block.product_state(&[1, 1], &[zero.clone(), zero]).unwrap();
        let n2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert!((n2 - 1.0).abs() < 1e-15);
        assert!(block.product_state(&[2, 1], &[vec![], vec![]]).is_err());
    }
}
