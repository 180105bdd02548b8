//! Cavity-array geometry: vertices, hopping edges and optional polarization
//! rotations on the connectors.
//!
//! # Rotation convention
//!
//! A [`PolarizationRotation`] describes the 2×2 unitary
//! `V = exp(−iθ(n_x X + n_y Y + n_z Z))` acting on single-photon polarization
//! states in the `(a, b)` basis. The connector's optical axes are the rotated
//! modes `c† = V·a†`, `d† = V·b†` (i.e. `c† = V₀₀a† + V₁₀b†`), and the edge
//! hopping `J_a(c_i†c_j + h.c.) + J_b(d_i†d_j + h.c.)` becomes
//! `Σ_pq M_pq p_i† q_j + h.c.` with `M = V·diag(J_a, J_b)·V†`.
//! With this convention the effective pair spin model transforms as
//! `(V⊗V) H (V⊗V)†`.

use std::collections::BTreeSet;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRotation")]
pub struct PolarizationRotation {
    theta: f64,
    axis: [f64; 3],
}

#[derive(Deserialize)]
struct RawRotation {
    theta: f64,
    axis: [f64; 3],
}

impl TryFrom<RawRotation> for PolarizationRotation {
    type Error = Error;
    fn try_from(r: RawRotation) -> Result<Self> {
        Self::new(r.theta, r.axis)
    }
}

impl PolarizationRotation {
    pub fn new(theta: f64, axis: [f64; 3]) -> Result<Self> {
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !theta.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "rotation axis must be a unit vector (|n| = {norm}) and theta finite"
            )));
        }
        Ok(Self { theta, axis })
    }

    pub fn about_x(theta: f64) -> Self {
        Self { theta, axis: [1.0, 0.0, 0.0] }
    }

    pub fn about_y(theta: f64) -> Self {
        Self { theta, axis: [0.0, 1.0, 0.0] }
    }

    pub fn about_z(theta: f64) -> Self {
        Self { theta, axis: [0.0, 0.0, 1.0] }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    /// True when the induced `V` has only real entries.
    pub fn is_real(&self) -> bool {
        let v = rotation_matrix(self);
        v.iter().all(|z| z.im == 0.0)
    }
}

/// `V = exp(−iθ n·σ) = cos θ·𝟙 − i sin θ·(n·σ)`.
pub fn rotation_matrix(r: &PolarizationRotation) -> Matrix2<C64> {
    let (s, c) = r.theta.sin_cos();
    let [nx, ny, nz] = r.axis;
    let i = C64::i();
    // n·σ = [[nz, nx − i ny], [nx + i ny, −nz]]
    let ns = Matrix2::new(
        C64::new(nz, 0.0),
        C64::new(nx, -ny),
        C64::new(nx, ny),
        C64::new(-nz, 0.0),
    );
    let mut v = ns * (-i * s);
    v[(0, 0)] += c;
    v[(1, 1)] += c;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BondLabel {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub j_a: f64,
    pub j_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<PolarizationRotation>,
}

impl Edge {
    pub fn new(i: usize, j: usize, j_a: f64, j_b: f64) -> Self {
        Self { i, j, j_a, j_b, rotation: None }
    }

    pub fn with_rotation(mut self, r: PolarizationRotation) -> Self {
        self.rotation = Some(r);
        self
    }

    /// `M = V·diag(J_a, J_b)·V†` (identity `V` when unrotated).
    pub fn hopping_matrix(&self) -> Matrix2<C64> {
        hopping_matrix(self.j_a, self.j_b, self.rotation.as_ref())
    }
}

pub fn hopping_matrix(j_a: f64, j_b: f64, rotation: Option<&PolarizationRotation>) -> Matrix2<C64> {
    let d = Matrix2::new(C64::new(j_a, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(j_b, 0.0));
    match rotation {
        None => d,
        Some(r) => {
            let v = rotation_matrix(r);
            v * d * v.adjoint()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLattice")]
pub struct Lattice {
    n_vertices: usize,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<BondLabel>>,
}

#[derive(Deserialize)]
struct RawLattice {
    n_vertices: usize,
    edges: Vec<Edge>,
    #[serde(default)]
    labels: Option<Vec<BondLabel>>,
}

impl TryFrom<RawLattice> for Lattice {
    type Error = Error;
    fn try_from(r: RawLattice) -> Result<Self> {
        Lattice::new(r.n_vertices, r.edges, r.labels)
    }
}

impl Lattice {
    pub fn new(n_vertices: usize, edges: Vec<Edge>, labels: Option<Vec<BondLabel>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for e in &edges {
            if e.i >= n_vertices || e.j >= n_vertices {
                return Err(Error::InvalidLattice(format!("edge ({}, {}) outside {n_vertices} vertices", e.i, e.j)));
            }
            if e.i == e.j {
                return Err(Error::InvalidLattice(format!("self-loop at vertex {}", e.i)));
            }
            if !(e.j_a >= 0.0 && e.j_b >= 0.0) || !e.j_a.is_finite() || !e.j_b.is_finite() {
                return Err(Error::InvalidLattice(format!("edge ({}, {}) has invalid hopping", e.i, e.j)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::InvalidLattice(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        if let Some(l) = &labels {
            if l.len() != edges.len() {
                return Err(Error::InvalidLattice(format!("{} labels for {} edges", l.len(), edges.len())));
            }
        }
        Ok(Self {
            n_vertices,
            edges,
            labels,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[BondLabel]> {
        self.labels.as_deref()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.i == v || e.j == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_vertices).map(|v| self.degree(v)).collect()
    }

    /// True when no edge carries a complex rotation.
    pub fn is_real(&self) -> bool {
        self.edges.iter().all(|e| e.rotation.is_none_or(|r| r.is_real()))
    }

    pub fn max_hopping(&self) -> f64 {
        self.edges.iter().map(|e| e.j_a.max(e.j_b)).fold(0.0, f64::max)
    }

    /// Same graph with every edge's hopping replaced.
    pub fn with_uniform_hopping(&self, j_a: f64, j_b: f64) -> Result<Self> {
        let edges = self.edges.iter().map(|e| Edge { j_a, j_b, ..*e }).collect();
        Self::new(self.n_vertices, edges, self.labels.clone())
    }

    pub fn map_hopping(&self, f: impl Fn(&Edge) -> (f64, f64)) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| {
                let (j_a, j_b) = f(e);
                Edge { j_a, j_b, ..*e }
            })
            .collect();
        Self::new(self.n_vertices, edges, self.labels.clone())
    }

    /// Assigns `rotation` to every edge carrying `label`.
    pub fn set_label_rotation(&mut self, label: BondLabel, rotation: Option<PolarizationRotation>) {
        if let Some(labels) = &self.labels {
            for (e, l) in self.edges.iter_mut().zip(labels) {
                if *l == label {
                    e.rotation = rotation;
                }
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Open path (or ring when `periodic`) with uniform couplings.
pub fn chain(n: usize, periodic: bool, j_a: f64, j_b: f64) -> Result<Lattice> {
    if n < 2 {
        return Err(Error::InvalidLattice("chain needs at least 2 sites".into()));
    }
    if periodic && n == 2 {
        return Err(Error::InvalidLattice("periodic chain of 2 sites would double the edge".into()));
    }
    let mut edges: Vec<Edge> = (0..n - 1).map(|i| Edge::new(i, i + 1, j_a, j_b)).collect();
    if periodic {
        edges.push(Edge::new(n - 1, 0, j_a, j_b));
    }
    Lattice::new(n, edges, None)
}

/// Open `rows × cols` square grid, vertices in row-major order.
pub fn square(rows: usize, cols: usize, j_a: f64, j_b: f64) -> Result<Lattice> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::InvalidLattice("square lattice needs at least 2 sites".into()));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push(Edge::new(id(r, c), id(r, c + 1), j_a, j_b));
            }
            if r + 1 < rows {
                edges.push(Edge::new(id(r, c), id(r + 1, c), j_a, j_b));
            }
        }
    }
    Lattice::new(rows * cols, edges, None)
}

/// Per-label hopping for [`honeycomb`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondCoupling {
    pub j_a: f64,
    pub j_b: f64,
    #[serde(default)]
    pub rotation: Option<PolarizationRotation>,
}

impl BondCoupling {
    pub fn new(j_a: f64, j_b: f64) -> Self {
        Self { j_a, j_b, rotation: None }
    }
}

type Bond = ((usize, usize), (usize, usize), BondLabel);

/// Honeycomb patch of `rows × cols` hexagons in the brick-wall embedding with
/// open boundaries.
///
/// Vertices sit on a `(rows+1) × (2·cols+2)` grid `(r, x)`. Horizontal bonds
/// `(r, x)–(r, x+1)` are labelled `X` when `r + x` is even and `Y` otherwise;
/// vertical bonds `(r, x)–(r+1, x)` exist when `r + x` is even and are
/// labelled `Z`. The two corner vertices left with a single bond are removed,
/// giving `2(rows+1)(cols+1) − 2` vertices, numbered row-major over the
/// remaining grid points. `couplings` is indexed `[X, Y, Z]`.
pub fn honeycomb(rows: usize, cols: usize, couplings: [BondCoupling; 3]) -> Result<Lattice> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidLattice("honeycomb needs rows, cols >= 1".into()));
    }
    let width = 2 * cols + 2;
    let mut bonds: Vec<Bond> = Vec::new();
    for r in 0..=rows {
        for x in 0..width {
            if x + 1 < width {
                let label = if (r + x) % 2 == 0 { BondLabel::X } else { BondLabel::Y };
                bonds.push(((r, x), (r, x + 1), label));
            }
            if r < rows && (r + x) % 2 == 0 {
                bonds.push(((r, x), (r + 1, x), BondLabel::Z));
            }
        }
    }
    // Drop dangling corner vertices (degree 1) together with their bond.
    let degree = |p: (usize, usize), bonds: &[Bond]| {
        bonds.iter().filter(|(a, b, _)| *a == p || *b == p).count()
    };
    let dangling: Vec<(usize, usize)> = (0..=rows)
        .flat_map(|r| (0..width).map(move |x| (r, x)))
        .filter(|&p| degree(p, &bonds) == 1)
        .collect();
    bonds.retain(|(a, b, _)| !dangling.contains(a) && !dangling.contains(b));

    let mut ids = vec![vec![usize::MAX; width]; rows + 1];
    let mut next = 0;
    for (r, row) in ids.iter_mut().enumerate() {
        for (x, id) in row.iter_mut().enumerate() {
            if !dangling.contains(&(r, x)) && degree((r, x), &bonds) > 0 {
                *id = next;
                next += 1;
            }
        }
    }
    let mut edges = Vec::with_capacity(bonds.len());
    let mut labels = Vec::with_capacity(bonds.len());
    for ((r0, x0), (r1, x1), label) in bonds {
        let c = couplings[label as usize];
        let mut e = Edge::new(ids[r0][x0], ids[r1][x1], c.j_a, c.j_b);
        e.rotation = c.rotation;
        edges.push(e);
        labels.push(label);
    }
    Lattice::new(next, edges, Some(labels))
}
