//! Dense complex tensors with row-major layout.
//!
//! `ComplexTensor` is the universal value carrier: gate matrices, state vectors,
//! density matrices and network node payloads are all instances of it. Values are
//! immutable after construction; all operations are pure functions.

use num_complex::Complex64;

use crate::{Error, Result};

/// Dense multi-dimensional array of complex doubles, row-major.
///
/// A rank-0 tensor has shape `[]` and exactly one element.
#[derive(Clone, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for ComplexTensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ComplexTensor(shape={:?}, len={})", self.shape, self.data.len())
    }
}

pub(crate) fn product(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl ComplexTensor {
    /// Build a tensor from a shape and row-major data.
    pub fn from_vec(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::shape("axis lengths must be >= 1"));
        }
        if product(&shape) != data.len() {
            return Err(Error::shape(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = product(&shape);
        Self { shape, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn scalar(value: Complex64) -> Self {
        Self { shape: vec![], data: vec![value] }
    }

    /// Identity matrix of dimension `dim`.
    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(vec![dim, dim]);
        for i in 0..dim {
            t.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        t
    }

    /// Square matrix from rows of (re, im) pairs; panics on ragged input.
    pub fn matrix_from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix rows");
        let data = rows.iter().flatten().copied().collect();
        Self { shape: vec![r, c], data }
    }

    /// Convenience for real-valued matrices in tests and gate tables.
    pub fn matrix_from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self { shape: vec![r, c], data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // axis lengths are >= 1, so there is always at least one element
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Element access by multi-index.
    pub fn at(&self, index: &[usize]) -> Complex64 {
        debug_assert_eq!(index.len(), self.rank());
        let mut flat = 0;
        for (i, &ix) in index.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            flat = flat * self.shape[i] + ix;
        }
        self.data[flat]
    }

    /// Matrix element access for rank-2 tensors.
    pub fn mat(&self, row: usize, col: usize) -> Complex64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[row * self.shape[1] + col]
    }

    pub fn conj(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::shape("tensor addition requires equal shapes"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self { shape: self.shape.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Conjugate transpose of a rank-2 tensor.
    pub fn dagger(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::shape("dagger requires a matrix"));
        }
        let (r, c) = (self.shape[0], self.shape[1]);
        let mut out = Self::zeros(vec![c, r]);
        for i in 0..r {
            for j in 0..c {
                out.data[j * r + i] = self.data[i * c + j].conj();
            }
        }
        Ok(out)
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.rank() != 2 || other.rank() != 2 {
            return Err(Error::shape("matmul requires matrices"));
        }
        if self.shape[1] != other.shape[0] {
            return Err(Error::shape(format!(
                "matmul inner dims {} vs {}",
                self.shape[1], other.shape[0]
            )));
        }
        let (m, k, n) = (self.shape[0], self.shape[1], other.shape[1]);
        let mut out = vec![Complex64::new(0.0, 0.0); m * n];
        for i in 0..m {
            let arow = &self.data[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for (kk, &a) in arow.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let brow = &other.data[kk * n..(kk + 1) * n];
                for j in 0..n {
                    orow[j] += a * brow[j];
                }
            }
        }
        Ok(Self { shape: vec![m, n], data: out })
    }

    /// Reinterpret with a new shape of the same element count.
    pub fn reshape(&self, new_shape: Vec<usize>) -> Result<Self> {
        if product(&new_shape) != self.data.len() || new_shape.iter().any(|&d| d == 0) {
            return Err(Error::shape(format!(
                "cannot reshape {} elements to {:?}",
                self.data.len(),
                new_shape
            )));
        }
        Ok(Self { shape: new_shape, data: self.data.clone() })
    }

    /// Permute axes: output axis `i` is input axis `perm[i]`.
    pub fn transpose(&self, perm: &[usize]) -> Result<Self> {
        let r = self.rank();
        if perm.len() != r {
            return Err(Error::shape("permutation length must equal rank"));
        }
        let mut seen = vec![false; r];
        for &p in perm {
            if p >= r || seen[p] {
                return Err(Error::shape("invalid axis permutation"));
            }
            seen[p] = true;
        }
        if r <= 1 || perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        // strides of the input, then gather
        let mut in_strides = vec![1usize; r];
        for i in (0..r - 1).rev() {
            in_strides[i] = in_strides[i + 1] * self.shape[i + 1];
        }
        let gather_strides: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
        let mut data = vec![Complex64::new(0.0, 0.0); self.data.len()];
        let mut index = vec![0usize; r];
        let mut src = 0usize;
        for slot in data.iter_mut() {
            *slot = self.data[src];
            // odometer increment over the output index
            for ax in (0..r).rev() {
                index[ax] += 1;
                src += gather_strides[ax];
                if index[ax] < new_shape[ax] {
                    break;
                }
                src -= gather_strides[ax] * new_shape[ax];
                index[ax] = 0;
            }
        }
        Ok(Self { shape: new_shape, data })
    }

    /// Sum over a pair of equal-length axes (partial trace of one index pair).
    pub fn trace_axes(&self, ax1: usize, ax2: usize) -> Result<Self> {
        let r = self.rank();
        if ax1 == ax2 || ax1 >= r || ax2 >= r || self.shape[ax1] != self.shape[ax2] {
            return Err(Error::shape("trace_axes needs two distinct equal axes"));
        }
        let (lo, hi) = (ax1.min(ax2), ax1.max(ax2));
        let mut perm: Vec<usize> = (0..r).filter(|a| *a != lo && *a != hi).collect();
        perm.push(lo);
        perm.push(hi);
        let t = self.transpose(&perm)?;
        let d = self.shape[lo];
        let free: usize = t.shape[..r - 2].iter().product();
        let mut data = vec![Complex64::new(0.0, 0.0); free];
        for (i, slot) in data.iter_mut().enumerate() {
            let base = i * d * d;
            for k in 0..d {
                *slot += t.data[base + k * d + k];
            }
        }
        Ok(Self { shape: t.shape[..r - 2].to_vec(), data })
    }
}

/// Generalized tensordot: contract `a_axes` of `a` against `b_axes` of `b`.
///
/// Result axes are the free axes of `a` (in order) followed by the free axes of `b`.
pub fn contract_pair(
    a: &ComplexTensor,
    a_axes: &[usize],
    b: &ComplexTensor,
    b_axes: &[usize],
) -> Result<ComplexTensor> {
    if a_axes.len() != b_axes.len() {
        return Err(Error::shape("contract_pair axis lists differ in length"));
    }
    let check = |axes: &[usize], rank: usize| -> Result<()> {
        let mut seen = vec![false; rank];
        for &ax in axes {
            if ax >= rank || seen[ax] {
                return Err(Error::shape("repeated or out-of-range contraction axis"));
            }
            seen[ax] = true;
        }
        Ok(())
    };
    check(a_axes, a.rank())?;
    check(b_axes, b.rank())?;
    for (&ax, &bx) in a_axes.iter().zip(b_axes) {
        if a.shape[ax] != b.shape[bx] {
            return Err(Error::shape(format!(
                "contracted axes differ: {} vs {}",
                a.shape[ax], b.shape[bx]
            )));
        }
    }
    let a_free: Vec<usize> = (0..a.rank()).filter(|ax| !a_axes.contains(ax)).collect();
    let b_free: Vec<usize> = (0..b.rank()).filter(|bx| !b_axes.contains(bx)).collect();

    let mut a_perm = a_free.clone();
    a_perm.extend_from_slice(a_axes);
    let mut b_perm = b_axes.to_vec();
    b_perm.extend_from_slice(&b_free);

    let m: usize = a_free.iter().map(|&ax| a.shape[ax]).product();
    let k: usize = a_axes.iter().map(|&ax| a.shape[ax]).product();
    let n: usize = b_free.iter().map(|&bx| b.shape[bx]).product();

    let lhs = a.transpose(&a_perm)?.reshape(vec![m.max(1), k.max(1)])?;
    let rhs = b.transpose(&b_perm)?.reshape(vec![k.max(1), n.max(1)])?;
    let prod = lhs.matmul(&rhs)?;

    let mut shape: Vec<usize> = a_free.iter().map(|&ax| a.shape[ax]).collect();
    shape.extend(b_free.iter().map(|&bx| b.shape[bx]));
    ComplexTensor::from_vec(shape, prod.into_data())
}

/// Transpose by `perm` then reinterpret with `new_shape`.
pub fn transpose_reshape(
    t: &ComplexTensor,
    perm: &[usize],
    new_shape: Vec<usize>,
) -> Result<ComplexTensor> {
    t.transpose(perm)?.reshape(new_shape)
}

/// Kronecker product of two matrices.
pub fn kron(a: &ComplexTensor, b: &ComplexTensor) -> Result<ComplexTensor> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::shape("kron requires matrices"));
    }
    let (m, n) = (a.shape[0], a.shape[1]);
    let (p, q) = (b.shape[0], b.shape[1]);
    let mut out = ComplexTensor::zeros(vec![m * p, n * q]);
    for i in 0..m {
        for j in 0..n {
            let aij = a.data[i * n + j];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..p {
                for l in 0..q {
                    out.data[(i * p + k) * (n * q) + (j * q + l)] = aij * b.data[k * q + l];
                }
            }
        }
    }
    Ok(out)
}

/// Result of splitting a two-qubit gate over a shared bond axis.
#[derive(Debug, Clone)]
pub struct SvdSplit {
    /// Rank-3 tensor with axes (out0, in0, bond).
    pub left: ComplexTensor,
    /// Rank-3 tensor with axes (bond, out1, in1).
    pub right: ComplexTensor,
    pub bond_dimension: usize,
    /// Frobenius norm of the discarded singular values.
    pub truncation_error: f64,
}

/// Split a rank-4 two-qubit gate (axes: out0, out1, in0, in1) across the qubit cut.
///
/// Singular values are sorted descending and the bond is truncated to at most
/// `max_singular_values`; exact zero modes below `1e-14 * sigma_max` are dropped
/// so product operators report their true bond dimension.
pub fn svd_split(gate: &ComplexTensor, max_singular_values: usize) -> Result<SvdSplit> {
    if gate.shape() != [2, 2, 2, 2] {
        return Err(Error::shape("svd_split expects a [2,2,2,2] gate tensor"));
    }
    if max_singular_values == 0 {
        return Err(Error::pre("max_singular_values must be >= 1"));
    }
    // Group axes as (out0,in0) x (out1,in1).
    let m = gate.transpose(&[0, 2, 1, 3])?.reshape(vec![4, 4])?;
    let svd = crate::linalg::svd(&m)?;
    let cutoff = svd.singular_values.first().copied().unwrap_or(0.0) * 1e-14;
    let full = svd
        .singular_values
        .iter()
        .filter(|&&s| s > cutoff)
        .count()
        .max(1);
    let bond = full.min(max_singular_values);
    let truncation_error = svd.singular_values[bond..]
        .iter()
        .map(|s| s * s)
        .sum::<f64>()
        .sqrt();

    // left[(o0,i0), k] = U[.,k] * sqrt(s_k); right[k, (o1,i1)] = sqrt(s_k) * V^dag[k,.]
    let mut left = ComplexTensor::zeros(vec![4, bond]);
    let mut right = ComplexTensor::zeros(vec![bond, 4]);
    for k in 0..bond {
        let root = svd.singular_values[k].sqrt();
        for i in 0..4 {
            left.data[i * bond + k] = svd.u.mat(i, k) * root;
            right.data[k * 4 + i] = svd.v.mat(i, k).conj() * root;
        }
    }
    Ok(SvdSplit {
        left: left.reshape(vec![2, 2, bond])?,
        right: right.reshape(vec![bond, 2, 2])?,
        bond_dimension: bond,
        truncation_error,
    })
}

impl SvdSplit {
    /// Recombine the two halves into the rank-4 gate tensor (axes out0,out1,in0,in1).
    pub fn recombine(&self) -> Result<ComplexTensor> {
        let joined = contract_pair(&self.left, &[2], &self.right, &[0])?;
        // axes now (out0, in0, out1, in1) -> (out0, out1, in0, in1)
        joined.transpose(&[0, 2, 1, 3])
    }
}
