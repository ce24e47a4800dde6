//! Gate library: fixed gates, rotations, exponential gates and the
//! multi-controlled MPO gate.
//!
//! Rotation convention: `R_a(theta) = exp(-i theta sigma_a / 2)`. Exponential
//! gates follow the opposite sign, `exp(+i theta G)`, so `exp1(theta, ZZ)` is
//! not the same as an `Rzz(2 theta)` up to sign -- callers mixing the two
//! conventions should double-check phases.

use num_complex::Complex64;

use crate::quop::QuOperator;
use crate::tensor::{kron, ComplexTensor};
use crate::{Error, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Rotation axis for the parameterized single-qubit rotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "rx" | "x" => Ok(Axis::X),
            "ry" | "y" => Ok(Axis::Y),
            "rz" | "z" => Ok(Axis::Z),
            other => Err(Error::UnknownGate(other.into())),
        }
    }

    pub fn pauli(self) -> ComplexTensor {
        match self {
            Axis::X => pauli_x(),
            Axis::Y => pauli_y(),
            Axis::Z => pauli_z(),
        }
    }
}

pub fn pauli_x() -> ComplexTensor {
    ComplexTensor::matrix_from_rows(&[
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![c(1.0, 0.0), c(0.0, 0.0)],
    ])
}

pub fn pauli_y() -> ComplexTensor {
    ComplexTensor::matrix_from_rows(&[
        vec![c(0.0, 0.0), c(0.0, -1.0)],
        vec![c(0.0, 1.0), c(0.0, 0.0)],
    ])
}

pub fn pauli_z() -> ComplexTensor {
    ComplexTensor::matrix_from_rows(&[
        vec![c(1.0, 0.0), c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(-1.0, 0.0)],
    ])
}

/// Z (x) Z as a 4x4 matrix.
pub fn zz_matrix() -> ComplexTensor {
    kron(&pauli_z(), &pauli_z()).expect("2x2 inputs")
}

/// X (x) X as a 4x4 matrix.
pub fn xx_matrix() -> ComplexTensor {
    kron(&pauli_x(), &pauli_x()).expect("2x2 inputs")
}

/// Names of the fixed (non-parameterized) gates in the registry.
pub const STANDARD_GATES: &[&str] = &["i", "x", "y", "z", "h", "s", "t", "cnot", "cz", "swap"];

/// Names of the parameterized gates in the registry.
pub const PARAMETERIZED_GATES: &[&str] = &["rx", "ry", "rz", "exp1", "exp"];

/// Matrix of a fixed gate by registry name.
pub fn standard_gate(name: &str) -> Result<ComplexTensor> {
    let r2 = 1.0 / 2f64.sqrt();
    Ok(match name {
        "i" => ComplexTensor::identity(2),
        "x" => pauli_x(),
        "y" => pauli_y(),
        "z" => pauli_z(),
        "h" => ComplexTensor::matrix_from_real(&[&[r2, r2], &[r2, -r2]]),
        "s" => ComplexTensor::matrix_from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 1.0)],
        ]),
        "t" => ComplexTensor::matrix_from_rows(&[
            vec![c(1.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(r2, r2)],
        ]),
        "cnot" => ComplexTensor::matrix_from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]),
        "cz" => ComplexTensor::matrix_from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, -1.0],
        ]),
        "swap" => ComplexTensor::matrix_from_real(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]),
        other => return Err(Error::UnknownGate(other.into())),
    })
}

/// Number of qubits acted on by a registry gate.
pub fn gate_arity(name: &str) -> Result<usize> {
    Ok(match name {
        "i" | "x" | "y" | "z" | "h" | "s" | "t" | "rx" | "ry" | "rz" => 1,
        "cnot" | "cz" | "swap" => 2,
        other => return Err(Error::UnknownGate(other.into())),
    })
}

/// `R_a(theta) = exp(-i theta sigma_a / 2)` in closed form.
pub fn rotation_gate(axis: Axis, theta: f64) -> ComplexTensor {
    let half = theta / 2.0;
    let (cos, sin) = (half.cos(), half.sin());
    match axis {
        Axis::X => ComplexTensor::matrix_from_rows(&[
            vec![c(cos, 0.0), c(0.0, -sin)],
            vec![c(0.0, -sin), c(cos, 0.0)],
        ]),
        Axis::Y => ComplexTensor::matrix_from_rows(&[
            vec![c(cos, 0.0), c(-sin, 0.0)],
            vec![c(sin, 0.0), c(cos, 0.0)],
        ]),
        Axis::Z => ComplexTensor::matrix_from_rows(&[
            vec![Complex64::from_polar(1.0, -half), c(0.0, 0.0)],
            vec![c(0.0, 0.0), Complex64::from_polar(1.0, half)],
        ]),
    }
}

/// Derivative `dR_a/dtheta = (-i sigma_a / 2) R_a(theta)`.
pub fn rotation_gate_derivative(axis: Axis, theta: f64) -> ComplexTensor {
    let half_sigma = axis.pauli().scale(c(0.0, -0.5));
    half_sigma
        .matmul(&rotation_gate(axis, theta))
        .expect("2x2 product")
}

/// `exp(i theta G)` for G with G^2 = I, via `cos(theta) I + i sin(theta) G`.
pub fn exp1_gate(theta: f64, generator: &ComplexTensor) -> Result<ComplexTensor> {
    if generator.rank() != 2 || generator.shape()[0] != generator.shape()[1] {
        return Err(Error::shape("exp1 generator must be square"));
    }
    let dim = generator.shape()[0];
    let gg = generator.matmul(generator)?;
    let dev = gg.sub(&ComplexTensor::identity(dim))?.frobenius_norm();
    if dev > 1e-8 {
        return Err(Error::pre(format!(
            "exp1 requires G^2 = I (deviation {dev:.2e}); use exp_gate for general generators"
        )));
    }
    let id = ComplexTensor::identity(dim).scale(c(theta.cos(), 0.0));
    id.add(&generator.scale(c(0.0, theta.sin())))
}

/// `exp(i theta G)` for a general square generator.
///
/// Hermitian generators go through the eigendecomposition; anything else falls
/// back to a Pade matrix exponential.
pub fn exp_gate(theta: f64, generator: &ComplexTensor) -> Result<ComplexTensor> {
    if generator.rank() != 2 || generator.shape()[0] != generator.shape()[1] {
        return Err(Error::shape("exp generator must be square"));
    }
    let n = generator.shape()[0];
    let herm_dev: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (generator.mat(i, j) - generator.mat(j, i).conj()).norm())
        .fold(0.0, f64::max);
    if herm_dev <= 1e-10 * generator.frobenius_norm().max(1.0) {
        let (vals, vecs) = crate::linalg::hermitian_eig(generator)?;
        let mut diag = ComplexTensor::zeros(vec![n, n]);
        for (k, &lambda) in vals.iter().enumerate() {
            diag.data_mut()[k * n + k] = Complex64::from_polar(1.0, theta * lambda);
        }
        return vecs.matmul(&diag)?.matmul(&vecs.dagger()?);
    }
    crate::linalg::expm(&generator.scale(c(0.0, theta)))
}

/// Multi-controlled gate as a bond-2 MPO over `[controls..., target]` sites.
///
/// `ctrl_states[j]` gives the activation value of control j: the target unitary
/// applies exactly when every control qubit matches its state. Site tensors have
/// shape `(bond_left, out, in, bond_right)` with boundary bonds of size one, so
/// the whole gate stores at most 16 elements per site.
pub fn multicontrol_mpo(ctrl_states: &[u8], target_unitary: &ComplexTensor) -> Result<QuOperator> {
    if target_unitary.rank() != 2 || target_unitary.shape()[0] != target_unitary.shape()[1] {
        return Err(Error::shape("target unitary must be square"));
    }
    if ctrl_states.iter().any(|&s| s > 1) {
        return Err(Error::pre("control states must be bits"));
    }
    let td = target_unitary.shape()[0];
    if ctrl_states.is_empty() {
        // degenerate: the plain gate as a single-site MPO
        let site = target_unitary.reshape(vec![1, td, td, 1])?;
        return QuOperator::from_mpo_sites(&[site]);
    }

    let mut sites = Vec::with_capacity(ctrl_states.len() + 1);
    for (j, &s) in ctrl_states.iter().enumerate() {
        let bl = if j == 0 { 1 } else { 2 };
        let mut site = ComplexTensor::zeros(vec![bl, 2, 2, 2]);
        let idx = |b: usize, i: usize, jj: usize, bp: usize| ((b * 2 + i) * 2 + jj) * 2 + bp;
        for i in 0..2 {
            // bond 0 = "all controls so far matched", bond 1 = "some control failed"
            let d = site.data_mut();
            if i == s as usize {
                d[idx(0, i, i, 0)] = c(1.0, 0.0);
            } else {
                d[idx(0, i, i, 1)] = c(1.0, 0.0);
            }
            if bl == 2 {
                d[idx(1, i, i, 1)] = c(1.0, 0.0);
            }
        }
        sites.push(site);
    }
    let mut last = ComplexTensor::zeros(vec![2, td, td, 1]);
    for i in 0..td {
        for j in 0..td {
            last.data_mut()[(i * td + j) as usize] = target_unitary.mat(i, j);
            if i == j {
                last.data_mut()[td * td + i * td + j] = c(1.0, 0.0);
            }
        }
    }
    sites.push(last);
    QuOperator::from_mpo_sites(&sites)
}
