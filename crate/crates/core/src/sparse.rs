//! Compressed-row Hermitian operator with a deterministic matrix-vector product.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::par;

/// Sparse Hermitian matrix in CSR layout. Column indices within a row are
/// strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
    real_symmetric: bool,
}

impl SparseHermitian {
    /// Builds from per-row `(column, value)` lists. Duplicate columns are summed
    /// in list order and explicit zeros are dropped.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, C64)>>) -> Result<Self> {
        if rows.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rows.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: c + 1 });
                }
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let mut h = Self {
            dim,
            row_ptr,
            col_idx,
            values,
            real_symmetric: false,
        };
        h.prune_zeros();
        h.real_symmetric = h.values.iter().all(|v| v.im == 0.0);
        Ok(h)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let rows = (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| (c, m[(r, c)])).collect())
            .collect();
        Self::from_rows(m.nrows(), rows)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            real_symmetric: true,
        }
    }

    fn prune_zeros(&mut self) {
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        row_ptr.push(0);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != C64::new(0.0, 0.0) {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// True when every stored entry has an exactly zero imaginary part.
    pub fn is_real_symmetric(&self) -> bool {
        self.real_symmetric
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `y = H·x`. Each row is summed in ascending column order, so the result is
    /// bitwise reproducible regardless of how rows are scheduled.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.matvec_unchecked(x))
    }

    pub(crate) fn matvec_unchecked(&self, x: &[C64]) -> Vec<C64> {
        let row = |r: usize| {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            acc
        };
        if self.dim >= 4096 {
            par::map_collect(self.dim, row)
        } else {
            (0..self.dim).map(row).collect()
        }
    }

    /// Largest deviation `|H_rc − conj(H_cr)|` over stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Maximum absolute row sum. An upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    /// Real part as a dense matrix; meaningful when [`Self::is_real_symmetric`].
    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                m[(r, c)] = v.re;
            }
        }
        m
    }

    /// Restriction to the rows and columns in `indices` (strictly increasing),
    /// together with the largest dropped coupling into the complement.
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<(Self, f64)> {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            if i >= self.dim || (k > 0 && indices[k - 1] >= i) {
                return Err(Error::InvalidParameter("submatrix indices must be increasing and in range".into()));
            }
            pos[i] = k;
        }
        let mut leak = 0.0f64;
        let rows = indices
            .iter()
            .map(|&r| {
                self.row(r)
                    .filter_map(|(c, v)| {
                        if pos[c] == usize::MAX {
                            leak = leak.max(v.norm());
                            None
                        } else {
                            Some((pos[c], v))
                        }
                    })
                    .collect()
            })
            .collect();
        Ok((Self::from_rows(indices.len(), rows)?, leak))
    }

    /// `⟨u|H|v⟩`.
    pub fn expectation(&self, u: &[C64], v: &[C64]) -> Result<C64> {
        let hv = self.matvec(v)?;
        Ok(u.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum())
    }

    /// Debug dump, little-endian: `dim: u64`, `nnz: u64`, `row_ptr: [u64; dim+1]`,
    /// `col_idx: [u64; nnz]`, `values: [(re: f64, im: f64); nnz]`.
    /// Not a stable interchange format.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&(self.nnz() as u64).to_le_bytes())?;
        for &p in &self.row_ptr {
            w.write_all(&(p as u64).to_le_bytes())?;
        }
        for &c in &self.col_idx {
            w.write_all(&(c as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        fn u64_of<R: Read>(r: &mut R) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        fn f64_of<R: Read>(r: &mut R) -> Result<f64> {
            Ok(f64::from_bits(u64_of(r)?))
        }
        let dim = u64_of(&mut r)? as usize;
        let nnz = u64_of(&mut r)? as usize;
        let row_ptr = (0..=dim).map(|_| u64_of(&mut r).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let col_idx = (0..nnz).map(|_| u64_of(&mut r).map(|x| x as usize)).collect::<Result<Vec<_>>>()?;
        let values = (0..nnz)
            .map(|_| Ok(C64::new(f64_of(&mut r)?, f64_of(&mut r)?)))
            .collect::<Result<Vec<_>>>()?;
        if row_ptr.first() != Some(&0) || row_ptr.last() != Some(&nnz) || col_idx.iter().any(|&c| c >= dim) {
            return Err(Error::Io("corrupt sparse matrix dump".into()));
        }
        let real_symmetric = values.iter().all(|v| v.im == 0.0);
        Ok(Self {
            dim,
            row_ptr,
            col_idx,
            values,
            real_symmetric,
        })
    }
}
