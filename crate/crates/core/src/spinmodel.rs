//! Spin-`j` operators, rotation lifts and lattice spin Hamiltonians.
//!
//! Spin basis order is `m = j, j−1, …, −j`. Polariton index `n` of the
//! `s`-excitation manifold maps to `m = n − s/2`, so basis index `k` holds
//! `n = s − k`.
//!
//! Model convention:
//! `H = c + Σ_i [B⃗_i·J⃗_i + D(J_Z,i)] + Σ_e R_e (Σ_k λ_k J_k⊗J_k + h_e (J_Z⊗𝟙 + 𝟙⊗J_Z)) R_e†`
//! with `R_e = U_e⊗U_e` and `U_e` the spin representation of the edge rotation.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::eigensolve::hermitian_eigh;
use crate::error::{Error, Result};
use crate::lattice::{self, BondCoupling, BondLabel, Lattice, PolarizationRotation};
use crate::manybody::DEFAULT_DIM_CAP;
use crate::par;
use crate::perturbation::{extract_coefficients, pair_effective, EffectiveCoefficients, SpinNormalization};
use crate::site::SiteParams;
use crate::sparse::SparseHermitian;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct SpinOps {
    pub d: usize,
    pub x: DMatrix<C64>,
    pub y: DMatrix<C64>,
    pub z: DMatrix<C64>,
}

impl SpinOps {
    pub fn j(&self) -> f64 {
        (self.d as f64 - 1.0) / 2.0
    }

    pub fn identity(&self) -> DMatrix<C64> {
        DMatrix::identity(self.d, self.d)
    }

    /// `[J_X, J_Y, J_Z]`.
    pub fn components(&self) -> [&DMatrix<C64>; 3] {
        [&self.x, &self.y, &self.z]
    }

    /// `n·J⃗`.
    pub fn along(&self, n: [f64; 3]) -> DMatrix<C64> {
        &self.x * C64::from(n[0]) + &self.y * C64::from(n[1]) + &self.z * C64::from(n[2])
    }
}

/// Angular-momentum matrices for spin `j = (d−1)/2`.
pub fn spin_matrices(d: usize) -> Result<SpinOps> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("spin dimension must be >= 2, got {d}")));
    }
    let j = (d as f64 - 1.0) / 2.0;
    let m = |k: usize| j - k as f64;
    // J+ |m⟩ = √(j(j+1) − m(m+1)) |m+1⟩; |m+1⟩ sits one index up.
    let mut plus = DMatrix::<C64>::zeros(d, d);
    for k in 1..d {
        plus[(k - 1, k)] = C64::from((j * (j + 1.0) - m(k) * (m(k) + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) * C64::from(0.5);
    let y = (&plus - &minus) * C64::new(0.0, -0.5);
    let z = DMatrix::from_fn(d, d, |r, c| if r == c { C64::from(m(r)) } else { ZERO });
    Ok(SpinOps { d, x, y, z })
}

fn exp_i_hermitian(g: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let (vals, vecs) = hermitian_eigh(g);
    let phases = DMatrix::from_fn(vals.len(), vals.len(), |r, c| {
        if r == c {
            C64::from_polar(1.0, -t * vals[r])
        } else {
            ZERO
        }
    });
    &vecs * phases * vecs.adjoint()
}

/// `exp(−iθ n·J⃗)` on spin dimension `d`.
pub fn lift_rotation(r: &PolarizationRotation, d: usize) -> Result<DMatrix<C64>> {
    let ops = spin_matrices(d)?;
    Ok(exp_i_hermitian(&ops.along(r.axis()), r.theta()))
}

/// Representation of a polarization rotation on the spin-`s/2` polariton
/// manifold: `exp(−iθ n·2J⃗)`. Equals [`lattice::rotation_matrix`] at `d = 2`
/// and is the operator under which the pair effective Hamiltonian transforms.
pub fn spin_representation(r: &PolarizationRotation, d: usize) -> Result<DMatrix<C64>> {
    let ops = spin_matrices(d)?;
    Ok(exp_i_hermitian(&ops.along(r.axis()), 2.0 * r.theta()))
}

/// Two-site term on one edge, expressed in the edge frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinCoupling {
    pub i: usize,
    pub j: usize,
    /// `(λ_x, λ_y, λ_z)` multiplying `J_k⊗J_k`.
    pub lambda: [f64; 3],
    /// Coefficient of `J_Z⊗𝟙 + 𝟙⊗J_Z`.
    #[serde(default)]
    pub pair_field: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<PolarizationRotation>,
}

impl SpinCoupling {
    pub fn new(i: usize, j: usize, lambda: [f64; 3]) -> Self {
        Self {
            i,
            j,
            lambda,
            pair_field: 0.0,
            rotation: None,
        }
    }

    /// Edge operator on `d²` dimensions, pair order `(i, j)`, rotation applied.
    pub fn operator(&self, ops: &SpinOps) -> Result<DMatrix<C64>> {
        let id = ops.identity();
        let mut h = DMatrix::zeros(ops.d * ops.d, ops.d * ops.d);
        for (k, jk) in ops.components().into_iter().enumerate() {
            if self.lambda[k] != 0.0 {
                h += jk.kronecker(jk) * C64::from(self.lambda[k]);
            }
        }
        if self.pair_field != 0.0 {
            h += (ops.z.kronecker(&id) + id.kronecker(&ops.z)) * C64::from(self.pair_field);
        }
        if let Some(r) = &self.rotation {
            let u = spin_representation(r, ops.d)?;
            let uu = u.kronecker(&u);
            h = &uu * h * uu.adjoint();
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralSpinModel {
    pub n_sites: usize,
    pub d: usize,
    pub fields: Vec<[f64; 3]>,
    pub couplings: Vec<SpinCoupling>,
    #[serde(default)]
    pub constant: f64,
    /// Single-site diagonal energies in spin-basis order, added on every site.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub onsite: Vec<f64>,
}

impl GeneralSpinModel {
    pub fn new(n_sites: usize, d: usize) -> Self {
        Self {
            n_sites,
            d,
            fields: vec![[0.0; 3]; n_sites],
            couplings: Vec::new(),
            constant: 0.0,
            onsite: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidParameter(format!("spin dimension must be >= 2, got {}", self.d)));
        }
        if self.fields.len() != self.n_sites {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                found: self.fields.len(),
            });
        }
        if !self.onsite.is_empty() && self.onsite.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: self.onsite.len(),
            });
        }
        for c in &self.couplings {
            if c.i >= self.n_sites || c.j >= self.n_sites || c.i == c.j {
                return Err(Error::InvalidLattice(format!("bad spin coupling ({}, {}) on {} sites", c.i, c.j, self.n_sites)));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Result<usize> {
        let dim = (self.d as u128).checked_pow(self.n_sites as u32).unwrap_or(u128::MAX);
        if dim > DEFAULT_DIM_CAP as u128 {
            return Err(Error::DimensionCap {
                dim,
                cap: DEFAULT_DIM_CAP,
            });
        }
        Ok(dim as usize)
    }

    /// Net lab-frame field on every site: explicit fields plus the rotated
    /// pair fields of incident edges.
    pub fn net_fields(&self) -> Result<Vec<[f64; 3]>> {
        let ops = spin_matrices(self.d)?;
        let mut out = self.fields.clone();
        for c in &self.couplings {
            if c.pair_field == 0.0 {
                continue;
            }
            let dir = rotated_z(c.rotation.as_ref(), &ops)?;
            for v in [c.i, c.j] {
                for k in 0..3 {
                    out[v][k] += c.pair_field * dir[k];
                }
            }
        }
        Ok(out)
    }
}

/// Direction `v` with `U J_Z U† = v·J⃗`, found by Hilbert–Schmidt projection.
fn rotated_z(r: Option<&PolarizationRotation>, ops: &SpinOps) -> Result<[f64; 3]> {
    let Some(r) = r else {
        return Ok([0.0, 0.0, 1.0]);
    };
    let u = spin_representation(r, ops.d)?;
    let rz = &u * &ops.z * u.adjoint();
    let norm = ops.z.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mut out = [0.0; 3];
    for (k, jk) in ops.components().into_iter().enumerate() {
        out[k] = (jk.adjoint() * &rz).trace().re / norm;
    }
    Ok(out)
}

/// Assembles the model on the full `d^n` product space (site 0 most significant).
pub fn build_spin_hamiltonian(m: &GeneralSpinModel) -> Result<SparseHermitian> {
    m.validate()?;
    let dim = m.dim()?;
    let ops = spin_matrices(m.d)?;
    let d = m.d;
    let n = m.n_sites;

    let mut local: Vec<DMatrix<C64>> = Vec::with_capacity(n);
    for b in &m.fields {
        let mut op = ops.along(*b);
        for (k, e) in m.onsite.iter().enumerate() {
            op[(k, k)] += e;
        }
        local.push(op);
    }
    let edges: Vec<(usize, usize, DMatrix<C64>)> =
        m.couplings.iter().map(|c| Ok((c.i, c.j, c.operator(&ops)?))).collect::<Result<_>>()?;
    let stride: Vec<usize> = (0..n).map(|k| d.pow((n - 1 - k) as u32)).collect();

    let rows = par::map_collect(dim, |row| {
        let digit = |k: usize| (row / stride[k]) % d;
        let mut out = Vec::new();
        if m.constant != 0.0 {
            out.push((row, C64::from(m.constant)));
        }
        // Row r of H holds conj(⟨c|H|r⟩).
        for (k, op) in local.iter().enumerate() {
            let dk = digit(k);
            for to in 0..d {
                let v = op[(to, dk)];
                if v != ZERO {
                    out.push((row + to * stride[k] - dk * stride[k], v.conj()));
                }
            }
        }
        for (i, j, op) in &edges {
            let (di, dj) = (digit(*i), digit(*j));
            let base = row - di * stride[*i] - dj * stride[*j];
            let from = di * d + dj;
            for ti in 0..d {
                for tj in 0..d {
                    let v = op[(ti * d + tj, from)];
                    if v != ZERO {
                        out.push((base + ti * stride[*i] + tj * stride[*j], v.conj()));
                    }
                }
            }
        }
        out
    });
    SparseHermitian::from_rows(dim, rows)
}

/// Lattice spin model from per-edge pair perturbation theory at `s`
/// excitations per site, in the `J`-matrix normalization.
///
/// Each edge contributes `−κ − B_z(J_Z⊗𝟙 + 𝟙⊗J_Z) − λ_z J_Z⊗J_Z − λ_x(J_X⊗J_X + J_Y⊗J_Y)`
/// in its own frame; site fields therefore accumulate with vertex degree.
pub fn effective_model(lat: &Lattice, s: u32, p: &SiteParams) -> Result<GeneralSpinModel> {
    let mut model = GeneralSpinModel::new(lat.n_vertices(), s as usize + 1);
    let mut cache: Vec<((u64, u64), EffectiveCoefficients)> = Vec::new();
    let mut onsite = None;
    for e in lat.edges() {
        let key = (e.j_a.to_bits(), e.j_b.to_bits());
        let coeffs = match cache.iter().find(|(k, _)| *k == key) {
            Some((_, c)) => c.clone(),
            None => {
                let r = pair_effective(s, p, e.j_a, e.j_b, None)?;
                if onsite.is_none() {
                    onsite = Some(r.onsite_shift.clone());
                }
                let c = extract_coefficients(&r, SpinNormalization::Spin)?;
                cache.push((key, c.clone()));
                c
            }
        };
        model.constant -= coeffs.kappa_eff;
        model.couplings.push(SpinCoupling {
            i: e.i,
            j: e.j,
            lambda: [-coeffs.lambda_x, -coeffs.lambda_x, -coeffs.lambda_z],
            pair_field: -coeffs.b_z,
            rotation: e.rotation,
        });
    }
    if !p.is_resonant() {
        let shifts = match onsite {
            Some(o) => o,
            None => pair_effective(s, p, 0.0, 0.0, None)?.onsite_shift,
        };
        model.onsite = shifts;
    }
    Ok(model)
}

/// Local fields `B⃗_i` that cancel the accumulated single-site terms of the
/// effective model built from `coeffs` on `lat`: `B_z·degree(i)` along `ẑ`
/// for unrotated edges, along the rotated axis otherwise.
pub fn stark_compensation(lat: &Lattice, coeffs: &EffectiveCoefficients) -> Result<Vec<[f64; 3]>> {
    let c = coeffs.in_normalization(SpinNormalization::Spin);
    let ops = spin_matrices(c.s as usize + 1)?;
    let mut out = vec![[0.0; 3]; lat.n_vertices()];
    for e in lat.edges() {
        let dir = rotated_z(e.rotation.as_ref(), &ops)?;
        for v in [e.i, e.j] {
            for k in 0..3 {
                out[v][k] += c.b_z * dir[k];
            }
        }
    }
    Ok(out)
}

/// Rotation that turns a `J_Z⊗J_Z` edge term into the bond's Kitaev term.
pub fn kitaev_rotation(label: BondLabel) -> Option<PolarizationRotation> {
    let quarter = std::f64::consts::FRAC_PI_4;
    match label {
        BondLabel::X => Some(PolarizationRotation::about_y(quarter)),
        BondLabel::Y => Some(PolarizationRotation::about_x(quarter)),
        BondLabel::Z => None,
    }
}

/// Kitaev honeycomb model `−λ Σ_{γ-bonds} J_γ⊗J_γ` on spin dimension `d`,
/// built from `−λ J_Z⊗J_Z` on every bond plus the bond-direction rotation.
/// The matching cavity lattice uses `J_b = 0` and the same rotations.
pub fn kitaev_honeycomb(rows: usize, cols: usize, lambda: f64, d: usize) -> Result<(Lattice, GeneralSpinModel)> {
    let mut lat = lattice::honeycomb(rows, cols, [BondCoupling::new(1.0, 0.0); 3])?;
    for label in [BondLabel::X, BondLabel::Y] {
        lat.set_label_rotation(label, kitaev_rotation(label));
    }
    let mut model = GeneralSpinModel::new(lat.n_vertices(), d);
    model.couplings = lat
        .edges()
        .iter()
        .map(|e| SpinCoupling {
            rotation: e.rotation,
            ..SpinCoupling::new(e.i, e.j, [0.0, 0.0, -lambda])
        })
        .collect();
    Ok((lat, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{dense_spectrum, symmetric_eigh};
    use crate::lattice::chain;

    fn op_norm(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn commutator(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    #[test]
    fn su2_algebra_and_casimir() {
        for d in 2..=6 {
            let o = spin_matrices(d).unwrap();
            let i = C64::new(0.0, 1.0);
            assert!(op_norm(&(commutator(&o.x, &o.y) - &o.z * i)) < 1e-13);
            assert!(op_norm(&(commutator(&o.y, &o.z) - &o.x * i)) < 1e-13);
            assert!(op_norm(&(commutator(&o.z, &o.x) - &o.y * i)) < 1e-13);
            let cas = &o.x * &o.x + &o.y * &o.y + &o.z * &o.z;
            let j = o.j();
            assert!(op_norm(&(cas - o.identity() * C64::from(j * (j + 1.0)))) < 1e-13);
            for k in 1..d {
                assert!(o.z[(k - 1, k - 1)].re > o.z[(k, k)].re);
            }
        }
        assert!(spin_matrices(1).is_err());
    }

    #[test]
    fn qutrit_matrices() {
        let o = spin_matrices(3).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let x = DMatrix::from_row_slice(3, 3, &[0.0, r, 0.0, r, 0.0, r, 0.0, r, 0.0]).map(C64::from);
        let y = DMatrix::from_row_slice(
            3,
            3,
            &[ZERO, C64::new(0.0, -r), ZERO, C64::new(0.0, r), ZERO, C64::new(0.0, -r), ZERO, C64::new(0.0, r), ZERO],
        );
        assert!(op_norm(&(&o.x - x)) < 1e-15);
        assert!(op_norm(&(&o.y - y)) < 1e-15);
        let z = commutator(&o.x, &o.y) * C64::new(0.0, -1.0);
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0, -1.0])).map(C64::from);
        assert!(op_norm(&(z - want)) < 1e-15);
        let half = spin_matrices(2).unwrap();
        assert_eq!(half.z[(0, 0)], C64::from(0.5));
    }

    #[test]
    fn lift_examples() {
        for d in 2..=5 {
            let u = lift_rotation(&PolarizationRotation::about_z(0.0), d).unwrap();
            assert!(op_norm(&(u - DMatrix::identity(d, d))) < 1e-15);
        }
        let u = lift_rotation(&PolarizationRotation::about_z(std::f64::consts::PI), 3).unwrap();
        let want = [C64::from_polar(1.0, -std::f64::consts::PI), C64::from(1.0), C64::from_polar(1.0, std::f64::consts::PI)];
        for k in 0..3 {
            assert!((u[(k, k)] - want[k]).norm() < 1e-13);
        }
        let r = PolarizationRotation::new(0.7, [0.0, 0.6, 0.8]).unwrap();
        let v = spin_representation(&r, 2).unwrap();
        let w = lattice::rotation_matrix(&r);
        assert!(op_norm(&(v - DMatrix::from_fn(2, 2, |a, b| w[(a, b)]))) < 1e-14);
    }

    #[test]
    fn lift_is_one_parameter_group() {
        let axis = [0.48, -0.6, 0.64];
        for d in 2..=5 {
            let a = lift_rotation(&PolarizationRotation::new(0.3, axis).unwrap(), d).unwrap();
            let b = lift_rotation(&PolarizationRotation::new(1.1, axis).unwrap(), d).unwrap();
            let ab = lift_rotation(&PolarizationRotation::new(1.4, axis).unwrap(), d).unwrap();
            assert!(op_norm(&(&a * &b - &ab)) < 1e-12);
            assert!(op_norm(&(a.adjoint() * &a - DMatrix::identity(d, d))) < 1e-13);
        }
    }

    #[test]
    fn ising_pair_spectrum() {
        let mut m = GeneralSpinModel::new(2, 2);
        // −λ_z Z⊗Z in Pauli form is −4λ_z J_Z⊗J_Z.
        m.couplings.push(SpinCoupling::new(0, 1, [0.0, 0.0, -4.0]));
        let h = build_spin_hamiltonian(&m).unwrap();
        let e = dense_spectrum(&h, 16).unwrap().eigenvalues;
        assert_eq!(e.len(), 4);
        for (a, b) in e.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn heisenberg_pair_has_singlet_ground() {
        let mut m = GeneralSpinModel::new(2, 2);
        m.couplings.push(SpinCoupling::new(0, 1, [1.0, 1.0, 1.0]));
        let h = build_spin_hamiltonian(&m).unwrap();
        let r = dense_spectrum(&h, 16).unwrap();
        assert!((r.eigenvalues[0] + 0.75).abs() < 1e-14);
        for e in &r.eigenvalues[1..] {
            assert!((e - 0.25).abs() < 1e-14);
        }
        // Singlet is odd under SWAP: amplitudes on |↑↓⟩ and |↓↑⟩ are opposite.
        let g = r.ground_state();
        assert!((g[1] + g[2]).norm() < 1e-12);
        assert!(g[0].norm() < 1e-12 && g[3].norm() < 1e-12);
    }

    #[test]
    fn rotated_build_equals_conjugated_build() {
        let r = PolarizationRotation::new(0.9, [0.36, 0.48, 0.8]).unwrap();
        for d in [2, 3] {
            let mut plain = GeneralSpinModel::new(3, d);
            plain.couplings.push(SpinCoupling {
                pair_field: -0.3,
                ..SpinCoupling::new(0, 1, [-0.5, -0.5, -0.8])
            });
            plain.couplings.push(SpinCoupling::new(1, 2, [0.1, 0.2, 0.3]));
            let mut rotated = plain.clone();
            rotated.couplings[0].rotation = Some(r);

            let u = spin_representation(&r, d).unwrap();
            let id = DMatrix::<C64>::identity(d, d);
            // Only sites 0 and 1 carry the rotated edge; build its conjugated version separately.
            let mut edge_only = GeneralSpinModel::new(3, d);
            edge_only.couplings.push(plain.couplings[0]);
            let mut rest = GeneralSpinModel::new(3, d);
            rest.couplings.push(plain.couplings[1]);
            let w = u.kronecker(&u).kronecker(&id);
            let want = &w * build_spin_hamiltonian(&edge_only).unwrap().to_dense() * w.adjoint()
                + build_spin_hamiltonian(&rest).unwrap().to_dense();
            let got = build_spin_hamiltonian(&rotated).unwrap().to_dense();
            assert!(op_norm(&(got - want)) < 1e-12);
        }
    }

    #[test]
    fn xx_limit_is_free_hopping() {
        let p = SiteParams::resonant(0.0, 1.0).unwrap();
        let lat = chain(2, false, 1e-3, 1e-3).unwrap();
        let mut m = effective_model(&lat, 1, &p).unwrap();
        let lambda_x = -m.couplings[0].lambda[0];
        m.couplings[0].lambda[2] = 0.0;
        m.couplings[0].pair_field = 0.0;
        m.constant = 0.0;
        let h = build_spin_hamiltonian(&m).unwrap().to_dense_real();
        // One-flip sector {|↑↓⟩, |↓↑⟩} hops with amplitude −λ_x/2.
        let sub = DMatrix::from_fn(2, 2, |r, c| h[(r + 1, c + 1)]);
        let (e, _) = symmetric_eigh(&sub);
        assert!((e[1] - e[0] - lambda_x).abs() < 1e-18);
        assert!((lambda_x - 4.0 * 9.0e-6 / 16.0).abs() < 1e-16);
    }

    #[test]
    fn stark_compensation_cancels_fields() {
        let p = SiteParams::resonant(0.0, 1.0).unwrap();
        let lat = chain(4, false, 2e-3, 1e-3).unwrap();
        let r = pair_effective(1, &p, 2e-3, 1e-3, None).unwrap();
        let coeffs = extract_coefficients(&r, SpinNormalization::Spin).unwrap();
        let mut m = effective_model(&lat, 1, &p).unwrap();
        let offsets = stark_compensation(&lat, &coeffs).unwrap();
        for (v, o) in offsets.iter().enumerate() {
            assert!((o[2] - coeffs.b_z * lat.degree(v) as f64).abs() < 1e-18);
        }
        m.fields = offsets;
        let h = build_spin_hamiltonian(&m).unwrap().to_dense();
        let ops = spin_matrices(2).unwrap();
        let id = ops.identity();
        for site in 0..4 {
            for jk in ops.components() {
                let mut full = DMatrix::<C64>::identity(1, 1);
                for k in 0..4 {
                    full = full.kronecker(if k == site { jk } else { &id });
                }
                let overlap = (full.adjoint() * &h).trace().norm();
                assert!(overlap < 1e-13 * op_norm(&h), "site {site}: {overlap}");
            }
        }
    }

    #[test]
    fn chain_compensation_tracks_degree() {
        let p = SiteParams::resonant(0.0, 1.0).unwrap();
        let r = pair_effective(1, &p, 2e-3, 0.0, None).unwrap();
        let coeffs = extract_coefficients(&r, SpinNormalization::Spin).unwrap();
        let two = stark_compensation(&chain(2, false, 2e-3, 0.0).unwrap(), &coeffs).unwrap();
        assert_eq!(two[0], two[1]);
        let four = stark_compensation(&chain(4, false, 2e-3, 0.0).unwrap(), &coeffs).unwrap();
        assert!((four[1][2] - 2.0 * four[0][2]).abs() < 1e-18);
        assert_eq!(four[0], four[3]);
    }

    fn direct_kitaev(lat: &Lattice, lambda: f64) -> DMatrix<C64> {
        let ops = spin_matrices(2).unwrap();
        let n = lat.n_vertices();
        let id = ops.identity();
    let mut h = DMatrix::<C64>::zeros(1 << n, 1 << n);
        for (e, label) in lat.edges().iter().zip(lat.labels().unwrap()) {
            let jk = match label {
                BondLabel::X => &ops.x,
                BondLabel::Y => &ops.y,
                BondLabel::Z => &ops.z,
            };
            let mut term = DMatrix::<C64>::identity(1, 1);
            for k in 0..n {
                term = term.kronecker(if k == e.i || k == e.j { jk } else { &id });
            }
            h -= term * C64::from(lambda);
        }
        h
    }

    #[test]
    fn kitaev_bond_rotations() {
        let ops = spin_matrices(2).unwrap();
        for (label, want) in [(BondLabel::X, &ops.x), (BondLabel::Y, &ops.y), (BondLabel::Z, &ops.z)] {
            let c = SpinCoupling {
                rotation: kitaev_rotation(label),
                ..SpinCoupling::new(0, 1, [0.0, 0.0, -1.0])
            };
            let got = c.operator(&ops).unwrap();
            assert!(op_norm(&(got + want.kronecker(want))) < 1e-13, "{label:?}");
        }
    }

    #[test]
    fn kitaev_hexagon_matches_direct_build() {
        let lambda = 0.7;
        let (lat, model) = kitaev_honeycomb(1, 1, lambda, 2).unwrap();
        assert_eq!(lat.n_vertices(), 6);
        let built = build_spin_hamiltonian(&model).unwrap();
        let direct = direct_kitaev(&lat, lambda);
        assert!(op_norm(&(built.to_dense() - &direct)) < 1e-12);
        let e_built = dense_spectrum(&built, 64).unwrap().eigenvalues[0];
        let e_direct = dense_spectrum(&SparseHermitian::from_dense(&direct).unwrap(), 64).unwrap().eigenvalues[0];
        assert!((e_built - e_direct).abs() < 1e-12);
    }
}
