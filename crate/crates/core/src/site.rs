//! Single-cavity physics: the `|level, n_a, n_b⟩` basis, the on-site
//! Jaynes-Cummings-type Hamiltonian of a V-system atom, its closed-form
//! polariton eigenstates and the Mott energy barrier.
//!
//! The on-site Hamiltonian uses the number-operator convention
//! `ω₀(a†a + b†b + |A⟩⟨A| + |B⟩⟨B|) + Δ_A|A⟩⟨A| + Δ_B|B⟩⟨B| + g(|A⟩⟨g|a + |B⟩⟨g|b + h.c.)`,
//! so the vacuum has energy zero and every state in the `s`-excitation block
//! sits at `s·ω₀` before coupling.
//!
//! The Hamiltonian conserves the number of "a-type" excitations
//! `n = n_a + [level = A]` separately from the b-type ones. The closed-form
//! eigenstates are labelled by that `n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::eigensolve::symmetric_eigh;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomLevel {
    G,
    A,
    B,
}

/// Photon polarization. `A` photons drive `g ↔ A`, `B` photons drive `g ↔ B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::A, Mode::B];

    pub fn index(self) -> usize {
        match self {
            Mode::A => 0,
            Mode::B => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteState {
    pub level: AtomLevel,
    pub n_a: u32,
    pub n_b: u32,
}

impl SiteState {
    pub const VACUUM: SiteState = SiteState::new(AtomLevel::G, 0, 0);

    pub const fn new(level: AtomLevel, n_a: u32, n_b: u32) -> Self {
        Self { level, n_a, n_b }
    }

    pub fn excitations(&self) -> u32 {
        self.n_a + self.n_b + u32::from(self.level != AtomLevel::G)
    }

    /// Conserved a-type excitation count `n_a + [level = A]`.
    pub fn a_type(&self) -> u32 {
        self.n_a + u32::from(self.level == AtomLevel::A)
    }

    fn photons(&self, mode: Mode) -> u32 {
        match mode {
            Mode::A => self.n_a,
            Mode::B => self.n_b,
        }
    }

    fn with_photons(mut self, mode: Mode, n: u32) -> Self {
        match mode {
            Mode::A => self.n_a = n,
            Mode::B => self.n_b = n,
        }
        self
    }

    /// `mode†|self⟩ = √(n+1)|…, n+1⟩`.
    pub fn create(self, mode: Mode) -> (SiteState, f64) {
        let n = self.photons(mode);
        (self.with_photons(mode, n + 1), f64::from(n + 1).sqrt())
    }

    /// `mode|self⟩ = √n|…, n−1⟩`, or `None` when no photon of that mode is present.
    pub fn annihilate(self, mode: Mode) -> Option<(SiteState, f64)> {
        let n = self.photons(mode);
        (n > 0).then(|| (self.with_photons(mode, n - 1), f64::from(n).sqrt()))
    }
}

/// Number of single-site states carrying `s` excitations.
pub fn block_size(s: u32) -> usize {
    if s == 0 {
        1
    } else {
        3 * s as usize + 1
    }
}

/// States of the `s`-excitation block in canonical order: level `G` first,
/// then `A`, then `B`; within a level ascending `n_a`.
pub fn block_states(s: u32) -> Vec<SiteState> {
    let mut out = Vec::with_capacity(block_size(s));
    out.extend((0..=s).map(|na| SiteState::new(AtomLevel::G, na, s - na)));
    if s >= 1 {
        out.extend((0..s).map(|na| SiteState::new(AtomLevel::A, na, s - 1 - na)));
        out.extend((0..s).map(|na| SiteState::new(AtomLevel::B, na, s - 1 - na)));
    }
    out
}

/// Position of `state` inside its excitation block (inverse of [`block_states`]).
pub fn local_index(state: &SiteState) -> usize {
    let s = state.excitations() as usize;
    let na = state.n_a as usize;
    match state.level {
        AtomLevel::G => na,
        AtomLevel::A => s + 1 + na,
        AtomLevel::B => 2 * s + 1 + na,
    }
}

/// Blocks `0..=s_max`, each in canonical order.
pub fn site_basis(s_max: u32) -> Vec<Vec<SiteState>> {
    (0..=s_max).map(block_states).collect()
}

/// Creation (`Ladder::Create`) or annihilation operator of one photon mode,
/// as a dense map from block `s_from` to block `s_from ± 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create,
    Annihilate,
}

pub fn ladder_matrix(s_from: u32, mode: Mode, ladder: Ladder) -> DMatrix<f64> {
    let s_to = match ladder {
        Ladder::Create => s_from + 1,
        Ladder::Annihilate => {
            if s_from == 0 {
                return DMatrix::zeros(0, 1);
            }
            s_from - 1
        }
    };
    let mut m = DMatrix::zeros(block_size(s_to), block_size(s_from));
    for (col, st) in block_states(s_from).into_iter().enumerate() {
        let hit = match ladder {
            Ladder::Create => Some(st.create(mode)),
            Ladder::Annihilate => st.annihilate(mode),
        };
        if let Some((to, amp)) = hit {
            m[(local_index(&to), col)] = amp;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteParams {
    pub omega0: f64,
    pub g: f64,
    #[serde(default)]
    pub delta_a: f64,
    #[serde(default)]
    pub delta_b: f64,
}

impl SiteParams {
    pub fn new(omega0: f64, g: f64, delta_a: f64, delta_b: f64) -> Result<Self> {
        let p = Self {
            omega0,
            g,
            delta_a,
            delta_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn resonant(omega0: f64, g: f64) -> Result<Self> {
        Self::new(omega0, g, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.omega0, self.g, self.delta_a, self.delta_b];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("site parameters must be finite".into()));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParameter(format!("g must be non-negative, got {}", self.g)));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        self.delta_a == 0.0 && self.delta_b == 0.0
    }

    pub(crate) fn require_resonant(&self) -> Result<()> {
        if self.is_resonant() {
            Ok(())
        } else {
            Err(Error::Detuned {
                delta_a: self.delta_a,
                delta_b: self.delta_b,
            })
        }
    }

    /// Energy of the polariton ground manifold with `s` excitations on resonance.
    pub fn polariton_energy(&self, s: u32) -> f64 {
        f64::from(s) * self.omega0 - self.g * f64::from(s).sqrt()
    }

    fn diagonal(&self, st: &SiteState) -> f64 {
        let detuning = match st.level {
            AtomLevel::G => 0.0,
            AtomLevel::A => self.delta_a,
            AtomLevel::B => self.delta_b,
        };
        self.omega0 * f64::from(st.excitations()) + detuning
    }
}

/// Applies the on-site Hamiltonian to a basis state, returning `(state, amplitude)` pairs
/// with the diagonal entry first.
pub fn apply_onsite(st: &SiteState, p: &SiteParams) -> impl Iterator<Item = (SiteState, f64)> {
    let diag = (*st, p.diagonal(st));
    let g = p.g;
    let mut off: [Option<(SiteState, f64)>; 2] = [None, None];
    match st.level {
        AtomLevel::G => {
            if st.n_a > 0 {
                off[0] = Some((SiteState::new(AtomLevel::A, st.n_a - 1, st.n_b), g * f64::from(st.n_a).sqrt()));
            }
            if st.n_b > 0 {
                off[1] = Some((SiteState::new(AtomLevel::B, st.n_a, st.n_b - 1), g * f64::from(st.n_b).sqrt()));
            }
        }
        AtomLevel::A => {
            off[0] = Some((SiteState::new(AtomLevel::G, st.n_a + 1, st.n_b), g * f64::from(st.n_a + 1).sqrt()));
        }
        AtomLevel::B => {
            off[0] = Some((SiteState::new(AtomLevel::G, st.n_a, st.n_b + 1), g * f64::from(st.n_b + 1).sqrt()));
        }
    }
    std::iter::once(diag).chain(off.into_iter().flatten().filter(move |_| g != 0.0))
}

/// Dense on-site Hamiltonian restricted to the `s`-excitation block.
pub fn site_hamiltonian(s: u32, p: &SiteParams) -> DMatrix<f64> {
    let states = block_states(s);
    let mut h = DMatrix::zeros(states.len(), states.len());
    for (col, st) in states.iter().enumerate() {
        for (to, amp) in apply_onsite(st, p) {
            h[(local_index(&to), col)] += amp;
        }
    }
    h
}

/// Block indices belonging to the conserved a-type sector `n` of block `s`,
/// ordered `G`, `A`, `B`.
fn sector_indices(s: u32, n: u32) -> Vec<usize> {
    let mut idx = vec![local_index(&SiteState::new(AtomLevel::G, n, s - n))];
    if n >= 1 {
        idx.push(local_index(&SiteState::new(AtomLevel::A, n - 1, s - n)));
    }
    if n < s {
        idx.push(local_index(&SiteState::new(AtomLevel::B, n, s - n - 1)));
    }
    idx
}

fn sector_eigh(s: u32, n: u32, h: &DMatrix<f64>) -> (Vec<usize>, DVector<f64>, DMatrix<f64>) {
    let idx = sector_indices(s, n);
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
    let (vals, vecs) = symmetric_eigh(&sub);
    (idx, vals, vecs)
}

/// Numeric spectrum of the `s`-excitation block, ascending.
///
/// Diagonalizes each conserved a-type sector (at most 3×3) separately,
/// which keeps the absolute error at the level of a few ulps of `g√s`.
pub fn site_spectrum(s: u32, p: &SiteParams) -> Vec<f64> {
    let h = site_hamiltonian(s, p);
    if s == 0 {
        return vec![h[(0, 0)]];
    }
    let mut out: Vec<f64> = (0..=s).flat_map(|n| sector_eigh(s, n, &h).1.iter().copied().collect::<Vec<_>>()).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Lowest eigenvector of every a-type sector `n = 0..=s`, embedded in the
/// block and sign-fixed so that the `|g, n, s−n⟩` component is negative
/// (the sign convention of the closed-form `Ψ⁻`). Valid at any detuning.
pub fn sector_ground_states(s: u32, p: &SiteParams) -> Vec<(f64, DVector<f64>)> {
    let h = site_hamiltonian(s, p);
    (0..=s)
        .map(|n| {
            let (idx, vals, vecs) = sector_eigh(s, n, &h);
            let mut v = DVector::zeros(block_size(s));
            let sign = if vecs[(0, 0)] > 0.0 { -1.0 } else { 1.0 };
            for (r, &i) in idx.iter().enumerate() {
                v[i] = sign * vecs[(r, 0)];
            }
            (vals[0], v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Zero,
    Plus,
    Minus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticEigenstate {
    pub family: Family,
    pub s: u32,
    pub n: u32,
    pub energy: f64,
    /// Normalized amplitudes on the site basis; zero coefficients are omitted.
    pub amplitudes: Vec<(SiteState, f64)>,
}

impl AnalyticEigenstate {
    /// Dense vector in the canonical order of [`block_states`].
    pub fn to_block_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(block_size(self.s));
        for (st, amp) in &self.amplitudes {
            v[local_index(st)] += amp;
        }
        v
    }

    pub fn amplitude(&self, st: &SiteState) -> f64 {
        self.amplitudes.iter().filter(|(x, _)| x == st).map(|(_, a)| a).sum()
    }
}

fn analytic_state(family: Family, s: u32, n: u32, p: &SiteParams) -> AnalyticEigenstate {
    let sf = f64::from(s);
    let nf = f64::from(n);
    let mut amps = Vec::with_capacity(3);
    let (norm, energy) = match family {
        Family::Zero => {
            amps.push((SiteState::new(AtomLevel::A, n - 1, s - n), (sf - nf).sqrt()));
            amps.push((SiteState::new(AtomLevel::B, n, s - n - 1), -nf.sqrt()));
            (sf.sqrt(), sf * p.omega0)
        }
        Family::Plus | Family::Minus => {
            let sign = if family == Family::Plus { 1.0 } else { -1.0 };
            if n >= 1 {
                amps.push((SiteState::new(AtomLevel::A, n - 1, s - n), nf.sqrt()));
            }
            if n < s {
                amps.push((SiteState::new(AtomLevel::B, n, s - n - 1), (sf - nf).sqrt()));
            }
            amps.push((SiteState::new(AtomLevel::G, n, s - n), sign * sf.sqrt()));
            ((2.0 * sf).sqrt(), sf * p.omega0 + sign * p.g * sf.sqrt())
        }
    };
    for (_, a) in &mut amps {
        *a /= norm;
    }
    AnalyticEigenstate {
        family,
        s,
        n,
        energy,
        amplitudes: amps,
    }
}

/// All `3s+1` closed-form eigenstates of the `s`-excitation block: `Ψ⁻` and
/// `Ψ⁺` for `n ∈ [0, s]`, `Ψ⁰` for `n ∈ [1, s−1]`.
pub fn analytic_eigensystem(s: u32, p: &SiteParams) -> Result<Vec<AnalyticEigenstate>> {
    if s == 0 {
        return Err(Error::InvalidParameter("analytic eigensystem needs s >= 1".into()));
    }
    p.require_resonant()?;
    let mut out = Vec::with_capacity(block_size(s));
    out.extend((0..=s).map(|n| analytic_state(Family::Minus, s, n, p)));
    out.extend((1..s).map(|n| analytic_state(Family::Zero, s, n, p)));
    out.extend((0..=s).map(|n| analytic_state(Family::Plus, s, n, p)));
    Ok(out)
}

/// The ground polariton `Ψ⁻_{s,n}`. For `s = 1`, `n = 1` is the qubit state
/// `|0⟩ = (|A,0,0⟩ − |g,1,0⟩)/√2` and `n = 0` is `|1⟩`.
pub fn polariton_ground(s: u32, n: u32, p: &SiteParams) -> Result<AnalyticEigenstate> {
    if s == 0 {
        return Err(Error::InvalidParameter("polariton ground state needs s >= 1".into()));
    }
    if n > s {
        return Err(Error::IndexOutOfRange {
            what: "polariton index n",
            index: i64::from(n),
            lo: 0,
            hi: i64::from(s),
        });
    }
    p.require_resonant()?;
    Ok(analytic_state(Family::Minus, s, n, p))
}

/// Closed-form Mott barrier `U(s) = (2√s − √(s+1) − √(s−1))·g`.
pub fn energy_barrier(s: u32, g: f64) -> f64 {
    assert!(s >= 1, "energy barrier defined for s >= 1");
    let sf = f64::from(s);
    (2.0 * sf.sqrt() - (sf + 1.0).sqrt() - (sf - 1.0).sqrt()) * g
}

/// Barrier from numeric block spectra:
/// `E_min(s+1) + E_min(s−1) − 2·E_min(s)`.
pub fn numeric_energy_barrier(s: u32, p: &SiteParams) -> f64 {
    assert!(s >= 1, "energy barrier defined for s >= 1");
    let lowest = |k: u32| site_spectrum(k, p)[0];
    lowest(s + 1) + lowest(s - 1) - 2.0 * lowest(s)
}
