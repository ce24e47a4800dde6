//! Pauli-string Hamiltonians: integer-coded structures with complex weights,
//! conversion to dense / sparse-COO / MPO form, and operator expectations.
//!
//! Every Pauli string has exactly one nonzero per column, so the sparse
//! conversion runs in O(terms * 2^n) without building anything dense.

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::gates;
use crate::quop::QuOperator;
use crate::tensor::{contract_pair, ComplexTensor};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pauli string as per-qubit codes: 0=I, 1=X, 2=Y, 3=Z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliStructure(pub Vec<u8>);

impl PauliStructure {
    pub fn new(codes: Vec<u8>) -> Result<Self> {
        if codes.iter().any(|&c| c > 3) {
            return Err(Error::pre("Pauli codes must lie in {0,1,2,3}"));
        }
        Ok(Self(codes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index lists (x, y, z) equivalent to this structure.
    pub fn index_lists(&self) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
        let pick = |code: u8| {
            self.0
                .iter()
                .enumerate()
                .filter(|(_, &c)| c == code)
                .map(|(q, _)| q)
                .collect::<Vec<_>>()
        };
        (pick(1), pick(2), pick(3))
    }
}

/// Hamiltonian as a weighted sum of Pauli strings. Duplicate structures are
/// permitted and get summed on conversion.
#[derive(Debug, Clone)]
pub struct WeightedPauliSum {
    pub n: usize,
    pub terms: Vec<(PauliStructure, Complex64)>,
}

impl WeightedPauliSum {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn push(&mut self, codes: Vec<u8>, weight: Complex64) -> Result<()> {
        if codes.len() != self.n {
            return Err(Error::shape("structure length must equal qubit count"));
        }
        self.terms.push((PauliStructure::new(codes)?, weight));
        Ok(())
    }

    /// TFIM Hamiltonian `sum_i J_i X_i X_{i+1} - sum_i h_i Z_i`, open boundary.
    pub fn tfim(n: usize, j: &[f64], h: &[f64]) -> Result<Self> {
        if n < 2 || j.len() != n - 1 || h.len() != n {
            return Err(Error::pre("TFIM needs |J| = n-1 and |h| = n with n >= 2"));
        }
        let mut sum = Self::new(n);
        for i in 0..n - 1 {
            let mut codes = vec![0u8; n];
            codes[i] = 1;
            codes[i + 1] = 1;
            sum.push(codes, Complex64::new(j[i], 0.0))?;
        }
        for i in 0..n {
            let mut codes = vec![0u8; n];
            codes[i] = 3;
            sum.push(codes, Complex64::new(-h[i], 0.0))?;
        }
        Ok(sum)
    }
}

/// Phase and column map of one Pauli string: `P |col> = phase(col) |col ^ xmask>`.
fn string_action(codes: &[u8], col: usize) -> (usize, Complex64) {
    let n = codes.len();
    let mut row = col;
    let mut phase = Complex64::new(1.0, 0.0);
    for (q, &code) in codes.iter().enumerate() {
        let bit = (col >> (n - 1 - q)) & 1;
        match code {
            0 => {}
            1 => row ^= 1 << (n - 1 - q),
            2 => {
                row ^= 1 << (n - 1 - q);
                // Y|0> = i|1>, Y|1> = -i|0>
                phase *= Complex64::new(0.0, if bit == 0 { 1.0 } else { -1.0 });
            }
            3 => {
                if bit == 1 {
                    phase = -phase;
                }
            }
            _ => unreachable!(),
        }
    }
    (row, phase)
}

/// Dense matrix of the sum; capped at 12 qubits.
pub fn sum_to_dense(h: &WeightedPauliSum) -> Result<ComplexTensor> {
    if h.n > 12 {
        return Err(Error::DenseCap("sum_to_dense capped at 12 qubits".into()));
    }
    let dim = 1usize << h.n;
    let mut out = ComplexTensor::zeros(vec![dim, dim]);
    for (structure, weight) in &h.terms {
        for col in 0..dim {
            let (row, phase) = string_action(&structure.0, col);
            out.data_mut()[row * dim + col] += weight * phase;
        }
    }
    Ok(out)
}

/// Sparse matrix in canonical COO form: sorted by (row, col), duplicates
/// merged in term order, exact zeros dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCOO {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<Complex64>,
    pub dim: usize,
}

impl SparseCOO {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::shape("matvec dimension mismatch"));
        }
        let mut out = vec![ZERO; self.dim];
        for ((&r, &c), &val) in self.rows.iter().zip(&self.cols).zip(&self.values) {
            out[r] += val * v[c];
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> ComplexTensor {
        let mut out = ComplexTensor::zeros(vec![self.dim, self.dim]);
        for ((&r, &c), &val) in self.rows.iter().zip(&self.cols).zip(&self.values) {
            out.data_mut()[r * self.dim + c] += val;
        }
        out
    }
}

/// Sparse COO of the sum; capped at 24 qubits.
pub fn sum_to_coo(h: &WeightedPauliSum) -> Result<SparseCOO> {
    if h.n > 24 {
        return Err(Error::DenseCap("sum_to_coo capped at 24 qubits".into()));
    }
    let dim = 1usize << h.n;
    let mut triplets: Vec<(usize, usize, Complex64)> = Vec::with_capacity(h.terms.len() * dim);
    for (structure, weight) in &h.terms {
        for col in 0..dim {
            let (row, phase) = string_action(&structure.0, col);
            triplets.push((row, col, weight * phase));
        }
    }
    // stable sort keeps term order within a cell, so merged sums match the
    // dense accumulation order exactly
    triplets.sort_by_key(|&(r, c, _)| (r, c));
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();
    for (r, c, v) in triplets {
        if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
            if lr == r && lc == c {
                *values.last_mut().unwrap() += v;
                continue;
            }
        }
        rows.push(r);
        cols.push(c);
        values.push(v);
    }
    // drop exact zeros produced by cancellation
    let mut keep_rows = Vec::with_capacity(rows.len());
    let mut keep_cols = Vec::with_capacity(cols.len());
    let mut keep_vals = Vec::with_capacity(values.len());
    for ((r, c), v) in rows.into_iter().zip(cols).zip(values) {
        if v != ZERO {
            keep_rows.push(r);
            keep_cols.push(c);
            keep_vals.push(v);
        }
    }
    Ok(SparseCOO { rows: keep_rows, cols: keep_cols, values: keep_vals, dim })
}

/// Matrix product operator with site tensors (bond_left, 2, 2, bond_right)
/// and unit boundary bonds.
#[derive(Debug, Clone)]
pub struct MPOOperator {
    pub sites: Vec<ComplexTensor>,
}

impl MPOOperator {
    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dimensions(&self) -> Vec<usize> {
        (1..self.sites.len())
            .map(|k| self.sites[k].shape()[0])
            .collect()
    }

    pub fn stored_elements(&self) -> usize {
        self.sites.iter().map(|s| s.len()).sum()
    }

    pub fn to_quoperator(&self) -> Result<QuOperator> {
        QuOperator::from_mpo_sites(&self.sites)
    }

    /// Dense matrix (test oracle); capped at 10 qubits.
    pub fn to_dense(&self) -> Result<ComplexTensor> {
        if self.n() > 10 {
            return Err(Error::DenseCap("MPO densification capped at 10 qubits".into()));
        }
        self.to_quoperator()?.eval_matrix()
    }

    /// `M |psi>` for a dense rank-n state tensor.
    pub fn matvec(&self, psi: &ComplexTensor) -> Result<ComplexTensor> {
        let n = self.n();
        if psi.rank() != n {
            return Err(Error::shape("MPO matvec rank mismatch"));
        }
        // carry axes: (out_1..out_k, bond_k, in_{k+1}..in_n)
        let mut shape = vec![1usize];
        shape.extend_from_slice(psi.shape());
        let mut carry = psi.reshape(shape)?;
        for (k, site) in self.sites.iter().enumerate() {
            // contract (bond_k, in_{k+1}) with site's (bond_left, in)
            let joined = contract_pair(&carry, &[k, k + 1], site, &[0, 2])?;
            // joined axes: (out_1..out_k, in_{k+2}..in_n, out_{k+1}, bond_{k+1})
            let rank = joined.rank();
            let mut perm: Vec<usize> = (0..k).collect();
            perm.push(rank - 2); // new out
            perm.push(rank - 1); // new bond
            perm.extend(k..rank - 2); // remaining ins
            carry = joined.transpose(&perm)?;
        }
        // final axes: (out_1..out_n, bond_n = 1)
        carry.reshape(vec![2; n])
    }
}

/// Bond-3 MPO of the TFIM Hamiltonian `sum J_i X_i X_{i+1} - sum h_i Z_i`.
pub fn tfim_mpo(n: usize, j: &[f64], h: &[f64]) -> Result<MPOOperator> {
    if n < 2 || j.len() != n - 1 || h.len() != n {
        return Err(Error::pre("TFIM MPO needs |J| = n-1 and |h| = n with n >= 2"));
    }
    let id = ComplexTensor::identity(2);
    let x = gates::pauli_x();
    let z = gates::pauli_z();
    let put = |site: &mut ComplexTensor, bl: usize, br: usize, ncols: usize, m: &ComplexTensor, scale: f64| {
        for p in 0..2 {
            for q in 0..2 {
                let idx = ((bl * 2 + p) * 2 + q) * ncols + br;
                site.data_mut()[idx] = m.mat(p, q) * Complex64::new(scale, 0.0);
            }
        }
    };
    let mut sites = Vec::with_capacity(n);
    // first site: row vector [I, J_0 X, -h_0 Z]
    let mut first = ComplexTensor::zeros(vec![1, 2, 2, 3]);
    put(&mut first, 0, 0, 3, &id, 1.0);
    put(&mut first, 0, 1, 3, &x, j[0]);
    put(&mut first, 0, 2, 3, &z, -h[0]);
    sites.push(first);
    for k in 1..n - 1 {
        let mut w = ComplexTensor::zeros(vec![3, 2, 2, 3]);
        put(&mut w, 0, 0, 3, &id, 1.0);
        put(&mut w, 0, 1, 3, &x, j[k]);
        put(&mut w, 0, 2, 3, &z, -h[k]);
        put(&mut w, 1, 2, 3, &x, 1.0);
        put(&mut w, 2, 2, 3, &id, 1.0);
        sites.push(w);
    }
    // last site: column vector [-h_{n-1} Z; X; I]
    let mut last = ComplexTensor::zeros(vec![3, 2, 2, 1]);
    put(&mut last, 0, 0, 1, &z, -h[n - 1]);
    put(&mut last, 1, 0, 1, &x, 1.0);
    put(&mut last, 2, 0, 1, &id, 1.0);
    sites.push(last);
    Ok(MPOOperator { sites })
}

/// Operator representation accepted by [`operator_expectation`].
pub enum OperatorForm {
    Dense(ComplexTensor),
    Sparse(SparseCOO),
    Mpo(MPOOperator),
    QuOp(QuOperator),
}

/// Expectation value split into real part and diagnostic imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub real: f64,
    pub imag: f64,
}

/// `Re <psi|O|psi>` of the circuit output for any supported representation.
pub fn operator_expectation(c: &Circuit, op: &OperatorForm) -> Result<Expectation> {
    let dim = 1usize << c.n();
    let psi = c.state()?;
    let value: Complex64 = match op {
        OperatorForm::Dense(m) => {
            if m.shape() != [dim, dim] {
                return Err(Error::shape("dense operator dimension mismatch"));
            }
            let mut acc = ZERO;
            for r in 0..dim {
                let mut row = ZERO;
                for col in 0..dim {
                    row += m.mat(r, col) * psi[col];
                }
                acc += psi[r].conj() * row;
            }
            acc
        }
        OperatorForm::Sparse(s) => {
            if s.dim != dim {
                return Err(Error::shape("sparse operator dimension mismatch"));
            }
            let phi = s.matvec(&psi)?;
            psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum()
        }
        OperatorForm::Mpo(m) => {
            if m.n() != c.n() {
                return Err(Error::shape("MPO operator site-count mismatch"));
            }
            let psi_t = ComplexTensor::from_vec(vec![2; c.n()], psi.clone())?;
            let phi = m.matvec(&psi_t)?;
            psi.iter()
                .zip(phi.data())
                .map(|(a, b)| a.conj() * b)
                .sum()
        }
        OperatorForm::QuOp(q) => {
            let out: usize = q.out_dims().iter().product();
            let inn: usize = q.in_dims().iter().product();
            if out != dim || inn != dim {
                return Err(Error::shape("QuOperator dimension mismatch"));
            }
            let psi_t = ComplexTensor::from_vec(vec![2; c.n()], psi.clone())?;
            let ket = QuOperator::from_state_tensor(psi_t);
            let bra = ket.adjoint();
            let scalar = bra.matmul(&q.matmul(&ket)?)?.eval()?;
            scalar.data()[0]
        }
    };
    Ok(Expectation { real: value.re, imag: value.im })
}

/// Expectation of a single integer-coded Pauli string.
pub fn parameterized_measurement(c: &Circuit, structure: &PauliStructure) -> Result<f64> {
    if structure.len() != c.n() {
        return Err(Error::shape("structure length must equal qubit count"));
    }
    let (x, y, z) = structure.index_lists();
    Ok(c.expectation_ps(&x, &y, &z)?.re)
}

/// TFIM energy by an explicit per-term loop; every term re-evaluates the
/// circuit, matching the cost model of the straightforward approach.
pub fn tfim_energy_loop(c: &Circuit, j: &[f64], h: &[f64]) -> Result<f64> {
    let n = c.n();
    if j.len() != n - 1 || h.len() != n {
        return Err(Error::pre("tfim_energy_loop needs |J| = n-1 and |h| = n"));
    }
    let mut energy = 0.0;
    for (i, &ji) in j.iter().enumerate() {
        energy += ji * c.expectation_ps(&[i, i + 1], &[], &[])?.re;
    }
    for (i, &hi) in h.iter().enumerate() {
        energy -= hi * c.expectation_ps(&[], &[], &[i])?.re;
    }
    Ok(energy)
}

/// Exact lowest eigenvalue of the sum: dense diagonalization up to dimension
/// 256, Lanczos on the sparse form beyond.
pub fn ground_state_energy(h: &WeightedPauliSum) -> Result<f64> {
    let dim = 1usize << h.n;
    if dim <= 256 {
        let dense = sum_to_dense(h)?;
        let (vals, _) = crate::linalg::hermitian_eig(&dense)?;
        Ok(vals[0])
    } else {
        let coo = sum_to_coo(h)?;
        crate::linalg::lanczos_ground_energy(|v| coo.matvec(v).expect("dim checked"), dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c64(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Kronecker-product oracle for Pauli sums.
    fn dense_oracle(h: &WeightedPauliSum) -> ComplexTensor {
        let dim = 1usize << h.n;
        let mut out = ComplexTensor::zeros(vec![dim, dim]);
        for (structure, w) in &h.terms {
            let mut term = ComplexTensor::identity(1);
            for &code in &structure.0 {
                let factor = match code {
                    0 => ComplexTensor::identity(2),
                    1 => gates::pauli_x(),
                    2 => gates::pauli_y(),
                    _ => gates::pauli_z(),
                };
                term = crate::tensor::kron(&term, &factor).unwrap();
            }
            out = out.add(&term.scale(*w)).unwrap();
        }
        out
    }

    #[test]
    fn dense_example_xx_minus_z_terms() {
        // XX - ZI - IZ: diagonal (-2, 0, 0, 2), anti-diagonal ones
        let mut h = WeightedPauliSum::new(2);
        h.push(vec![1, 1], c64(1.0, 0.0)).unwrap();
        h.push(vec![0, 3], c64(-1.0, 0.0)).unwrap();
        h.push(vec![3, 0], c64(-1.0, 0.0)).unwrap();
        let m = sum_to_dense(&h).unwrap();
        let expected = ComplexTensor::matrix_from_real(&[
            &[-2.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0, 2.0],
        ]);
        assert!(m.sub(&expected).unwrap().frobenius_norm() < 1e-14);
        assert!(m.sub(&dense_oracle(&h)).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn dense_trivial_cases() {
        let h = WeightedPauliSum::new(2);
        assert!(sum_to_dense(&h).unwrap().frobenius_norm() < 1e-300);
        let mut single = WeightedPauliSum::new(1);
        single.push(vec![3], c64(2.0, 0.0)).unwrap();
        let m = sum_to_dense(&single).unwrap();
        assert!((m.mat(0, 0) - c64(2.0, 0.0)).norm() < 1e-15);
        assert!((m.mat(1, 1) - c64(-2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn coo_single_paulis() {
        let mut hz = WeightedPauliSum::new(1);
        hz.push(vec![3], c64(1.0, 0.0)).unwrap();
        let coo = sum_to_coo(&hz).unwrap();
        assert_eq!(coo.rows, vec![0, 1]);
        assert_eq!(coo.cols, vec![0, 1]);
        assert_eq!(coo.values, vec![c64(1.0, 0.0), c64(-1.0, 0.0)]);

        let mut hx = WeightedPauliSum::new(1);
        hx.push(vec![1], c64(1.0, 0.0)).unwrap();
        let coo = sum_to_coo(&hx).unwrap();
        assert_eq!(coo.rows, vec![0, 1]);
        assert_eq!(coo.cols, vec![1, 0]);
        assert_eq!(coo.values, vec![c64(1.0, 0.0), c64(1.0, 0.0)]);
    }

    #[test]
    fn coo_matches_dense_exactly() {
        let mut rng = crate::rng::StatusSource::new(5);
        for n in 2..=5 {
            let mut h = WeightedPauliSum::new(n);
            for _ in 0..6 {
                let codes: Vec<u8> = (0..n).map(|_| (rng.next_uniform() * 4.0) as u8).collect();
                h.push(codes, c64(rng.next_normal(), rng.next_normal())).unwrap();
            }
            let dense = sum_to_dense(&h).unwrap();
            let coo = sum_to_coo(&h).unwrap();
            let back = coo.to_dense();
            // bit-exact: same arithmetic order per cell
            assert_eq!(dense.data(), back.data());
        }
    }

    #[test]
    fn coo_tfim_n3_matches_dense() {
        let h = WeightedPauliSum::tfim(3, &[1.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        let dense = sum_to_dense(&h).unwrap();
        let coo = sum_to_coo(&h).unwrap();
        assert!(coo.to_dense().sub(&dense).unwrap().frobenius_norm() < 1e-14);
        assert!(dense.sub(&dense_oracle(&h)).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn hermitian_for_real_weights() {
        let mut rng = crate::rng::StatusSource::new(8);
        let mut h = WeightedPauliSum::new(4);
        for _ in 0..8 {
            let codes: Vec<u8> = (0..4).map(|_| (rng.next_uniform() * 4.0) as u8).collect();
            h.push(codes, c64(rng.next_normal(), 0.0)).unwrap();
        }
        let dense = sum_to_dense(&h).unwrap();
        assert!(dense.sub(&dense.dagger().unwrap()).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn tfim_mpo_densification_matches_sum() {
        for n in 2..=6 {
            let j: Vec<f64> = (0..n - 1).map(|i| 0.5 + 0.25 * i as f64).collect();
            let h: Vec<f64> = (0..n).map(|i| -1.0 + 0.5 * i as f64).collect();
            let mpo = tfim_mpo(n, &j, &h).unwrap();
            let dense = sum_to_dense(&WeightedPauliSum::tfim(n, &j, &h).unwrap()).unwrap();
            let back = mpo.to_dense().unwrap();
            assert!(
                back.sub(&dense).unwrap().frobenius_norm() < 1e-11,
                "n={n}: {}",
                back.sub(&dense).unwrap().frobenius_norm()
            );
        }
    }

    #[test]
    fn tfim_mpo_bond_three_and_storage() {
        let n = 10;
        let j = vec![1.0; n - 1];
        let h = vec![1.0; n];
        let mpo = tfim_mpo(n, &j, &h).unwrap();
        assert_eq!(mpo.bond_dimensions(), vec![3; n - 1]);
        assert!(mpo.stored_elements() <= 36 * n);
    }

    #[test]
    fn tfim_mpo_decoupled_case() {
        let n = 4;
        let j = vec![0.0; n - 1];
        let h = vec![0.7, -0.3, 1.1, 0.2];
        let mpo = tfim_mpo(n, &j, &h).unwrap();
        let mut expect = WeightedPauliSum::new(n);
        for (i, &hi) in h.iter().enumerate() {
            let mut codes = vec![0u8; n];
            codes[i] = 3;
            expect.push(codes, c64(-hi, 0.0)).unwrap();
        }
        let dense = sum_to_dense(&expect).unwrap();
        assert!(mpo.to_dense().unwrap().sub(&dense).unwrap().frobenius_norm() < 1e-11);
    }

    #[test]
    fn parameterized_measurement_equals_expectation_ps() {
        let mut c = Circuit::new(3);
        c.h(0);
        c.cnot(0, 1);
        c.rx(2, 0.7);
        let s = PauliStructure::new(vec![0, 1, 1]).unwrap();
        let a = parameterized_measurement(&c, &s).unwrap();
        let b = c.expectation_ps(&[1, 2], &[], &[]).unwrap().re;
        assert!((a - b).abs() < 1e-12);

        let identity = PauliStructure::new(vec![0, 0, 0]).unwrap();
        assert!((parameterized_measurement(&c, &identity).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tfim_energy_loop_reference_states() {
        // |0...0>: <Z> = 1 each, <XX> = 0 -> E = -n
        let n = 4;
        let j = vec![1.0; n - 1];
        let h = vec![1.0; n];
        let zeros = Circuit::new(n);
        let e = tfim_energy_loop(&zeros, &j, &h).unwrap();
        assert!((e - (-(n as f64))).abs() < 1e-10);
        // |+...+>: <XX> = 1 each, <Z> = 0 -> E = n-1
        let mut plus = Circuit::new(n);
        for q in 0..n {
            plus.h(q);
        }
        let e = tfim_energy_loop(&plus, &j, &h).unwrap();
        assert!((e - (n as f64 - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn ground_energy_dense_and_lanczos_agree() {
        let n = 5; // dim 32 dense; force both paths to cross-check
        let h = WeightedPauliSum::tfim(n, &vec![1.0; n - 1], &vec![1.0; n]).unwrap();
        let dense = sum_to_dense(&h).unwrap();
        let (vals, _) = crate::linalg::hermitian_eig(&dense).unwrap();
        let coo = sum_to_coo(&h).unwrap();
        let lanczos =
            crate::linalg::lanczos_ground_energy(|v| coo.matvec(v).unwrap(), 1 << n).unwrap();
        assert!((vals[0] - lanczos).abs() < 1e-9);
        assert!((ground_state_energy(&h).unwrap() - vals[0]).abs() < 1e-9);
    }
}
