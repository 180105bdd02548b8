//! Second-order degenerate perturbation theory for a pair of cavities and
//! projection of the result onto XXZ spin operators.
//!
//! The unperturbed manifold is the `(s+1)²` product of single-site ground
//! polaritons `Ψ⁻_{s,n}`, ordered `n₁` major, `n₂` minor, `n` descending.
//! Intermediate states are all eigenstates of the decoupled pair with
//! excitation splits `(s+1, s−1)` and `(s−1, s+1)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{hermitian_eigh, symmetric_eigh};
use crate::error::{Error, Result};
use crate::lattice::{chain, hopping_matrix, Edge, Lattice, PolarizationRotation};
use crate::manybody::{assemble, BasisBlock};
use crate::site::{
    block_size, energy_barrier, ladder_matrix, polariton_ground, sector_ground_states, site_hamiltonian, Ladder, Mode,
    SiteParams,
};
use crate::spinmodel::{spin_matrices, spin_representation};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct PTResult {
    pub s: u32,
    /// Second-order operator on the manifold, excluding the unperturbed part.
    pub effective_matrix: DMatrix<C64>,
    /// Reference pair energy `2·min_n ε_n`; equals `2(sω₀ − g√s)` on resonance.
    pub unperturbed_energy: f64,
    /// `ε_n − min ε` per manifold state of one site, `n` descending. Zero on resonance.
    pub onsite_shift: Vec<f64>,
    pub intermediate_count: usize,
    /// Largest first-order element `|⟨b|H_hop|a⟩|` on the manifold.
    pub first_order_max: f64,
    pub warnings: Vec<String>,
}

impl PTResult {
    pub fn manifold_dim(&self) -> usize {
        (self.s as usize + 1).pow(2)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.effective_matrix;
        (m - m.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `E·𝟙 + on-site shifts + effective_matrix`: the PT approximation to the
    /// low pair spectrum.
    pub fn pair_hamiltonian(&self) -> DMatrix<C64> {
        let d = self.s as usize + 1;
        let mut h = self.effective_matrix.clone();
        for a1 in 0..d {
            for a2 in 0..d {
                let k = a1 * d + a2;
                h[(k, k)] += self.unperturbed_energy + self.onsite_shift[a1] + self.onsite_shift[a2];
            }
        }
        h
    }

    pub fn pair_spectrum(&self) -> Vec<f64> {
        hermitian_eigh(&self.pair_hamiltonian()).0
    }
}

/// Single-site ground manifold: block vectors (columns, `n` descending) and
/// their energies. Closed-form `Ψ⁻` on resonance, numeric sector grounds otherwise.
pub fn ground_manifold(s: u32, p: &SiteParams) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let dim = block_size(s);
    let d = s as usize + 1;
    let mut vecs = DMatrix::zeros(dim, d);
    let mut energies = Vec::with_capacity(d);
    if p.is_resonant() {
        for (k, n) in (0..=s).rev().enumerate() {
            let st = polariton_ground(s, n, p)?;
            vecs.set_column(k, &st.to_block_vector());
            energies.push(st.energy);
        }
    } else {
        let grounds = sector_ground_states(s, p);
        for (k, (e, v)) in grounds.into_iter().rev().enumerate() {
            vecs.set_column(k, &v);
            energies.push(e);
        }
    }
    Ok((vecs, energies))
}

fn block_eigensystem(s: u32, p: &SiteParams) -> (DVector<f64>, DMatrix<f64>) {
    symmetric_eigh(&site_hamiltonian(s, p))
}

/// Projected ladder matrices `E_tᵀ · L · A` for both modes.
fn projected_ladders(s: u32, ladder: Ladder, basis: &DMatrix<f64>, manifold: &DMatrix<f64>) -> [DMatrix<f64>; 2] {
    Mode::BOTH.map(|m| basis.transpose() * ladder_matrix(s, m, ladder) * manifold)
}

/// Second-order effective Hamiltonian of one edge carrying `s` excitations
/// per site.
///
/// On resonance the manifold states are the closed-form `Ψ⁻`; with detuning
/// they are the numeric lowest state of each conserved sector and the
/// denominators use the symmetrized quasi-degenerate form
/// `½(1/(E_a − E_μ) + 1/(E_b − E_μ))`.
pub fn pair_effective(
    s: u32,
    p: &SiteParams,
    j_a: f64,
    j_b: f64,
    rotation: Option<&PolarizationRotation>,
) -> Result<PTResult> {
    p.validate()?;
    if s == 0 {
        return Err(Error::InvalidParameter("pair perturbation theory needs s >= 1".into()));
    }
    for j in [j_a, j_b] {
        if !j.is_finite() || j < 0.0 {
            return Err(Error::InvalidParameter(format!("hopping must be finite and non-negative, got {j}")));
        }
    }
    let d = s as usize + 1;
    let (a_vecs, eps) = ground_manifold(s, p)?;
    let eps_ref = eps.iter().copied().fold(f64::INFINITY, f64::min);

    let (up_e, up_v) = block_eigensystem(s + 1, p);
    let (dn_e, dn_v) = block_eigensystem(s - 1, p);
    let c = projected_ladders(s, Ladder::Create, &up_v, &a_vecs);
    let a = projected_ladders(s, Ladder::Annihilate, &dn_v, &a_vecs);
    let m = hopping_matrix(j_a, j_b, rotation);

    let n_up = up_e.len();
    let n_dn = dn_e.len();
    let n_mu = 2 * n_up * n_dn;
    // T[μ, a] = ⟨μ|H_hop|a⟩, μ enumerating split (s+1, s−1) then (s−1, s+1).
    let mut t = DMatrix::<C64>::zeros(n_mu, d * d);
    let mut e_mu = Vec::with_capacity(n_mu);
    for e1 in 0..n_up {
        for e2 in 0..n_dn {
            e_mu.push(up_e[e1] + dn_e[e2]);
        }
    }
    for e1 in 0..n_dn {
        for e2 in 0..n_up {
            e_mu.push(dn_e[e1] + up_e[e2]);
        }
    }
    for pm in 0..2 {
        for q in 0..2 {
            let mpq = m[(pm, q)];
            if mpq == ZERO {
                continue;
            }
            for a1 in 0..d {
                for a2 in 0..d {
                    let col = a1 * d + a2;
                    // Photon p created on site 1, q removed from site 2.
                    for e1 in 0..n_up {
                        for e2 in 0..n_dn {
                            t[(e1 * n_dn + e2, col)] += mpq * (c[pm][(e1, a1)] * a[q][(e2, a2)]);
                        }
                    }
                    // Photon p created on site 2, q removed from site 1.
                    for e1 in 0..n_dn {
                        for e2 in 0..n_up {
                            t[(n_up * n_dn + e1 * n_up + e2, col)] += mpq * (a[q][(e1, a1)] * c[pm][(e2, a2)]);
                        }
                    }
                }
            }
        }
    }

    let e_state: Vec<f64> = (0..d * d).map(|k| eps[k / d] + eps[k % d]).collect();
    let scale = p.g.max(p.omega0.abs()).max(f64::MIN_POSITIVE);
    let min_gap = e_mu
        .iter()
        .flat_map(|em| e_state.iter().map(move |ea| (ea - em).abs()))
        .fold(f64::INFINITY, f64::min);
    if min_gap <= 1e-12 * scale {
        return Err(Error::Regime(format!(
            "intermediate states degenerate with the ground manifold (gap {min_gap:e}); g must be positive"
        )));
    }

    let mut h = DMatrix::<C64>::zeros(d * d, d * d);
    for b in 0..d * d {
        for col in 0..d * d {
            let mut acc = ZERO;
            for mu in 0..n_mu {
                let w = 0.5 * (1.0 / (e_state[col] - e_mu[mu]) + 1.0 / (e_state[b] - e_mu[mu]));
                acc += t[(mu, b)].conj() * t[(mu, col)] * w;
            }
            h[(b, col)] = acc;
        }
    }

    let mut warnings = Vec::new();
    let barrier = energy_barrier(s, p.g);
    if j_a.max(j_b) > barrier / 10.0 {
        warnings.push(format!(
            "max hopping {:e} exceeds a tenth of the Mott barrier U = {barrier:e}; perturbation theory is unreliable",
            j_a.max(j_b)
        ));
    }
    let spread = eps.iter().map(|e| e - eps_ref).fold(0.0, f64::max);
    if spread > barrier / 10.0 {
        warnings.push(format!("detuning splits the ground manifold by {spread:e}, comparable to the barrier"));
    }

    Ok(PTResult {
        s,
        effective_matrix: h,
        unperturbed_energy: 2.0 * eps_ref,
        onsite_shift: eps.iter().map(|e| e - eps_ref).collect(),
        intermediate_count: n_mu,
        first_order_max: first_order_max(s, &a_vecs, j_a, j_b, rotation)?,
        warnings,
    })
}

/// `max |⟨b|H_hop|a⟩|` over the manifold, evaluated on the full two-site
/// block with the atom–cavity terms switched off.
fn first_order_max(
    s: u32,
    a_vecs: &DMatrix<f64>,
    j_a: f64,
    j_b: f64,
    rotation: Option<&PolarizationRotation>,
) -> Result<f64> {
    let mut edge = Edge::new(0, 1, j_a, j_b);
    if let Some(r) = rotation {
        edge = edge.with_rotation(*r);
    }
    let lat = Lattice::new(2, vec![edge], None)?;
    let block = BasisBlock::enumerate(2, 2 * s, usize::MAX)?;
    let hop_only = SiteParams::resonant(0.0, 0.0)?;
    let h = assemble(&block, &lat, &hop_only)?;
    let d = s as usize + 1;
    let cols: Vec<Vec<C64>> = (0..d).map(|k| a_vecs.column(k).iter().map(|&x| C64::from(x)).collect()).collect();
    let states: Vec<Vec<C64>> = (0..d * d)
        .map(|k| block.product_state(&[s, s], &[cols[k / d].clone(), cols[k % d].clone()]))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for a in &states {
        let ha = h.matvec(a)?;
        for b in &states {
            let v: C64 = b.iter().zip(&ha).map(|(x, y)| x.conj() * y).sum();
            worst = worst.max(v.norm());
        }
    }
    Ok(worst)
}

/// Scale of the spin operators the coefficients multiply: `J⃗` itself, or
/// `2J⃗` (Pauli matrices at spin ½).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinNormalization {
    Pauli,
    Spin,
}

impl SpinNormalization {
    /// Pauli for spin ½, spin matrices otherwise.
    pub fn conventional(s: u32) -> Self {
        if s == 1 {
            Self::Pauli
        } else {
            Self::Spin
        }
    }

    /// Operators are `factor·J⃗`. This is the only place the `σ = 2J` conversion lives.
    pub fn factor(self) -> f64 {
        match self {
            Self::Pauli => 2.0,
            Self::Spin => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualTerm {
    pub name: String,
    /// Coefficient multiplying the (unnegated) operator.
    pub coefficient: f64,
}

/// Coefficients of
/// `H_eff = −κ_eff 𝟙⊗𝟙 − B_z(Z⊗𝟙 + 𝟙⊗Z) − λ_z Z⊗Z − λ_x(X⊗X + Y⊗Y)`
/// where `X, Y, Z` are `factor·J⃗` for the chosen normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    pub s: u32,
    pub normalization: SpinNormalization,
    pub kappa_eff: f64,
    pub b_z: f64,
    pub lambda_z: f64,
    pub lambda_x: f64,
    /// Hilbert–Schmidt norm of the part outside the four-operator span.
    pub residual_norm: f64,
    /// Projection of that part onto further two-site operators; `other` is what remains.
    pub residual_terms: Vec<ResidualTerm>,
}

impl EffectiveCoefficients {
    pub fn in_normalization(&self, target: SpinNormalization) -> Self {
        let r = self.normalization.factor() / target.factor();
        let mut out = self.clone();
        out.normalization = target;
        out.b_z *= r;
        out.lambda_z *= r * r;
        out.lambda_x *= r * r;
        out
    }
}

fn hs(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn hs_norm(a: &DMatrix<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonal Hilbert–Schmidt projection of the effective matrix onto the
/// XXZ operator span.
pub fn extract_coefficients(r: &PTResult, norm: SpinNormalization) -> Result<EffectiveCoefficients> {
    let d = r.s as usize + 1;
    let h = &r.effective_matrix;
    if h.nrows() != d * d || h.ncols() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            found: h.nrows(),
        });
    }
    let ops = spin_matrices(d)?;
    let f = C64::from(norm.factor());
    let (x, y, z) = (&ops.x * f, &ops.y * f, &ops.z * f);
    let id = ops.identity();

    let basis = [
        id.kronecker(&id),
        z.kronecker(&id) + id.kronecker(&z),
        z.kronecker(&z),
        x.kronecker(&x) + y.kronecker(&y),
    ];
    let mut coef = [0.0; 4];
    let mut residual = h.clone();
    for (k, o) in basis.iter().enumerate() {
        coef[k] = hs(o, h).re / hs(o, o).re;
        residual -= o * C64::from(coef[k]);
    }

    let q = {
        let z2 = &z * &z;
        let mean = z2.trace() / C64::from(d as f64);
        z2 - &id * mean
    };
    let extended = [
        ("quadratic_field", q.kronecker(&id) + id.kronecker(&q)),
        ("antisymmetric_field", z.kronecker(&id) - id.kronecker(&z)),
        ("antisymmetric_exchange", x.kronecker(&y) - y.kronecker(&x)),
        ("xy_anisotropy", x.kronecker(&x) - y.kronecker(&y)),
    ];
    let mut rest = residual.clone();
    let mut residual_terms = Vec::new();
    for (name, o) in extended {
        let nn = hs(&o, &o).re;
        if nn <= 1e-24 {
            continue;
        }
        let c = hs(&o, &residual).re / nn;
        rest -= &o * C64::from(c);
        residual_terms.push(ResidualTerm {
            name: name.into(),
            coefficient: c,
        });
    }
    residual_terms.push(ResidualTerm {
        name: "other".into(),
        coefficient: hs_norm(&rest),
    });

    Ok(EffectiveCoefficients {
        s: r.s,
        normalization: norm,
        kappa_eff: -coef[0],
        b_z: -coef[1],
        lambda_z: -coef[2],
        lambda_x: -coef[3],
        residual_norm: hs_norm(&residual),
        residual_terms,
    })
}

/// Spectral norm of a Hermitian matrix.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigh(m).0.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Covariance {
    /// `‖H_eff(V) − (U⊗U)H_eff(𝟙)(U⊗U)†‖`.
    pub deviation: f64,
    /// `‖H_eff(𝟙)‖`.
    pub reference_norm: f64,
}

impl Covariance {
    pub fn relative(&self) -> f64 {
        if self.reference_norm == 0.0 {
            self.deviation
        } else {
            self.deviation / self.reference_norm
        }
    }
}

/// Compares pair PT with an edge rotation against conjugation of the
/// unrotated result by the spin representation of the rotation.
pub fn rotated_pair_covariance_check(
    s: u32,
    p: &SiteParams,
    j_a: f64,
    j_b: f64,
    rotation: &PolarizationRotation,
) -> Result<Covariance> {
    let plain = pair_effective(s, p, j_a, j_b, None)?;
    let rotated = pair_effective(s, p, j_a, j_b, Some(rotation))?;
    let u = spin_representation(rotation, s as usize + 1)?;
    let w = u.kronecker(&u);
    let want = &w * &plain.effective_matrix * w.adjoint();
    Ok(Covariance {
        deviation: operator_norm(&(&rotated.effective_matrix - want)),
        reference_norm: operator_norm(&plain.effective_matrix),
    })
}

/// Lowest `count` eigenvalues of the exact two-site Hamiltonian with `2s`
/// excitations, for comparison with [`PTResult::pair_spectrum`].
pub fn exact_pair_spectrum(s: u32, p: &SiteParams, j_a: f64, j_b: f64, count: usize) -> Result<Vec<f64>> {
    let lat = chain(2, false, j_a, j_b)?;
    let block = BasisBlock::enumerate(2, 2 * s, usize::MAX)?;
    let h = assemble(&block, &lat, p)?;
    let mut e = if h.is_real_symmetric() {
        symmetric_eigh(&h.to_dense_real()).0.iter().copied().collect::<Vec<_>>()
    } else {
        hermitian_eigh(&h.to_dense()).0
    };
    e.truncate(count);
    Ok(e)
}
