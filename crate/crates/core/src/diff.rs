//! Differentiation of parameterized circuits: adjoint gradients, parameter
//! shift, finite differences, state Jacobians, JVP, quantum Fisher
//! information and Hessians.
//!
//! Parameters are tracked through [`Param::Var`] indices attached to gates at
//! construction time. The adjoint engine caches the forward states once and
//! sweeps a single cotangent backward, so a full gradient costs two passes
//! regardless of the parameter count. Circuits containing state-dependent
//! stochastic ops (general Kraus branches, collapsing measurements) are
//! rejected with the offending op index; unitary-Kraus ops with a fixed
//! status resolve to a constant gate and differentiate fine. Gradients of
//! split gates are taken on the unsplit dense form.

use num_complex::Complex64;

use crate::circuit::{apply_matrix, Circuit, CircuitOp, GatePayload, Param};
use crate::gates::{self, Axis};
use crate::pauli::{SparseCOO, WeightedPauliSum};
use crate::tensor::ComplexTensor;
use crate::{Error, Result};

/// A family of circuits indexed by a real parameter vector.
pub struct ParamCircuit {
    n_params: usize,
    build: Box<dyn Fn(&[f64]) -> Circuit + Send + Sync>,
}

impl ParamCircuit {
    pub fn new(
        n_params: usize,
        build: impl Fn(&[f64]) -> Circuit + Send + Sync + 'static,
    ) -> Self {
        Self { n_params, build: Box::new(build) }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn build(&self, theta: &[f64]) -> Result<Circuit> {
        if theta.len() != self.n_params {
            return Err(Error::pre(format!(
                "expected {} parameters, got {}",
                self.n_params,
                theta.len()
            )));
        }
        Ok((self.build)(theta))
    }
}

/// Hermitian observable in any of the supported carrier forms.
pub enum Observable {
    Dense(ComplexTensor),
    Sparse(SparseCOO),
    PauliSum(WeightedPauliSum),
}

impl Observable {
    fn check_hermitian(&self) -> Result<()> {
        match self {
            Observable::Dense(m) => {
                let defect = m.sub(&m.dagger()?)?.frobenius_norm();
                if defect > 1e-10 * m.frobenius_norm().max(1.0) {
                    return Err(Error::pre("observable must be Hermitian"));
                }
            }
            Observable::Sparse(s) => {
                let dense = s.to_dense();
                let defect = dense.sub(&dense.dagger()?)?.frobenius_norm();
                if defect > 1e-10 * dense.frobenius_norm().max(1.0) {
                    return Err(Error::pre("observable must be Hermitian"));
                }
            }
            Observable::PauliSum(sum) => {
                if sum.terms.iter().any(|(_, w)| w.im.abs() > 1e-12) {
                    return Err(Error::pre("Pauli-sum weights must be real"));
                }
            }
        }
        Ok(())
    }

    /// `O |psi>` on a flat state vector.
    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Observable::Dense(m) => {
                let dim = m.shape()[0];
                if psi.len() != dim {
                    return Err(Error::shape("observable dimension mismatch"));
                }
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for (r, slot) in out.iter_mut().enumerate() {
                    for c in 0..dim {
                        *slot += m.mat(r, c) * psi[c];
                    }
                }
                Ok(out)
            }
            Observable::Sparse(s) => s.matvec(psi),
            Observable::PauliSum(sum) => {
                let dim = 1usize << sum.n;
                if psi.len() != dim {
                    return Err(Error::shape("observable dimension mismatch"));
                }
                let mut out = vec![Complex64::new(0.0, 0.0); dim];
                for (structure, w) in &sum.terms {
                    for col in 0..dim {
                        let (row, phase) = pauli_action(&structure.0, col);
                        out[row] += w * phase * psi[col];
                    }
                }
                Ok(out)
            }
        }
    }
}

fn pauli_action(codes: &[u8], col: usize) -> (usize, Complex64) {
    let n = codes.len();
    let mut row = col;
    let mut phase = Complex64::new(1.0, 0.0);
    for (q, &code) in codes.iter().enumerate() {
        let bit = (col >> (n - 1 - q)) & 1;
        match code {
            1 => row ^= 1 << (n - 1 - q),
            2 => {
                row ^= 1 << (n - 1 - q);
                phase *= Complex64::new(0.0, if bit == 0 { 1.0 } else { -1.0 });
            }
            3 => {
                if bit == 1 {
                    phase = -phase;
                }
            }
            _ => {}
        }
    }
    (row, phase)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientResult {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Real symmetric quantum Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QFIMatrix {
    pub p: usize,
    /// Row-major p x p entries.
    pub data: Vec<f64>,
}

impl QFIMatrix {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }
}

struct DiffItem {
    matrix: ComplexTensor,
    qubits: Vec<usize>,
    derivative: Option<(usize, ComplexTensor)>,
}

fn diff_items(c: &Circuit) -> Result<Vec<DiffItem>> {
    let mut items = Vec::with_capacity(c.ops().len());
    for (op_index, op) in c.ops().iter().enumerate() {
        match op {
            CircuitOp::Gate(g) => {
                let matrix = crate::circuit::gate_matrix(g)?;
                let var = g.params.get("theta").and_then(|p| match p {
                    Param::Var { index, value } => Some((*index, *value)),
                    Param::Const(_) => None,
                });
                let derivative = match var {
                    None => None,
                    Some((index, theta)) => {
                        let d = match (&g.payload, g.name.as_str()) {
                            (GatePayload::Registry, "rx") => {
                                gates::rotation_gate_derivative(Axis::X, theta)
                            }
                            (GatePayload::Registry, "ry") => {
                                gates::rotation_gate_derivative(Axis::Y, theta)
                            }
                            (GatePayload::Registry, "rz") => {
                                gates::rotation_gate_derivative(Axis::Z, theta)
                            }
                            (GatePayload::Exp1 { generator }, _)
                            | (GatePayload::Exp { generator }, _) => {
                                // d/dtheta exp(i theta G) = i G exp(i theta G)
                                generator.matmul(&matrix)?.scale(Complex64::new(0.0, 1.0))
                            }
                            _ => {
                                return Err(Error::NotDifferentiable {
                                    op_index,
                                    message: format!(
                                        "gate `{}` has no parameter derivative",
                                        g.name
                                    ),
                                })
                            }
                        };
                        Some((index, d))
                    }
                };
                items.push(DiffItem { matrix, qubits: g.qubits.clone(), derivative });
            }
            CircuitOp::PostSelect { qubit, keep } => {
                let mut m = ComplexTensor::zeros(vec![2, 2]);
                m.data_mut()[if *keep == 0 { 0 } else { 3 }] = Complex64::new(1.0, 0.0);
                items.push(DiffItem { matrix: m, qubits: vec![*qubit], derivative: None });
            }
            CircuitOp::KrausUnitary { operators, probs, qubits, status } => {
                // branch selection is state independent, so the resolved gate
                // is a constant
                let total: f64 = probs.iter().sum();
                let mut cumulative = 0.0;
                let mut branch = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    cumulative += p / total;
                    if *status < cumulative {
                        branch = i;
                        break;
                    }
                }
                items.push(DiffItem {
                    matrix: operators[branch].clone(),
                    qubits: qubits.clone(),
                    derivative: None,
                });
            }
            CircuitOp::KrausGeneral { .. } => {
                return Err(Error::NotDifferentiable {
                    op_index,
                    message: "general Kraus branches renormalize by a state-dependent factor"
                        .into(),
                })
            }
            CircuitOp::CondMeasure { .. } | CircuitOp::ConditionalGate { .. } => {
                return Err(Error::NotDifferentiable {
                    op_index,
                    message: "collapsing measurements are not differentiable".into(),
                })
            }
        }
    }
    Ok(items)
}

fn inner(a: &ComplexTensor, b: &ComplexTensor) -> Complex64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

fn energy_of(c: &Circuit, observable: &Observable) -> Result<f64> {
    let psi = c.state()?;
    let opsi = observable.apply(&psi)?;
    let e: Complex64 = psi.iter().zip(&opsi).map(|(a, b)| a.conj() * b).sum();
    Ok(e.re)
}

/// Energy and exact gradient by adjoint (reverse-mode) differentiation.
pub fn value_and_grad(
    pc: &ParamCircuit,
    observable: &Observable,
    theta: &[f64],
) -> Result<GradientResult> {
    observable.check_hermitian()?;
    let c = pc.build(theta)?;
    let items = diff_items(&c)?;
    let n = c.n();

    // forward sweep, caching post-gate states
    let mut states = Vec::with_capacity(items.len() + 1);
    states.push(c.input_dense()?);
    for item in &items {
        let next = apply_matrix(states.last().unwrap(), &item.matrix, &item.qubits)?;
        states.push(next);
    }
    let psi = states.last().unwrap();
    let opsi = observable.apply(psi.data())?;
    let value = psi
        .data()
        .iter()
        .zip(&opsi)
        .map(|(a, b)| (a.conj() * b).re)
        .sum();

    // backward sweep: lambda_k = (U_N ... U_{k+1})^dag O psi
    let mut lambda = ComplexTensor::from_vec(vec![2; n], opsi)?;
    let mut grad = vec![0.0f64; pc.n_params()];
    for (k, item) in items.iter().enumerate().rev() {
        if let Some((index, d)) = &item.derivative {
            let tangent = apply_matrix(&states[k], d, &item.qubits)?;
            grad[*index] += 2.0 * inner(&lambda, &tangent).re;
        }
        lambda = apply_matrix(&lambda, &item.matrix.dagger()?, &item.qubits)?;
    }
    Ok(GradientResult { value, grad })
}

/// Exact gradient by the parameter-shift rule; only rotation gates
/// (generator eigenvalues +-1/2) are supported. Parameters shared across
/// gates are handled by shifting each occurrence separately.
pub fn grad_parameter_shift(
    pc: &ParamCircuit,
    observable: &Observable,
    theta: &[f64],
) -> Result<Vec<f64>> {
    observable.check_hermitian()?;
    let c = pc.build(theta)?;
    let mut occurrences: Vec<(usize, usize)> = Vec::new();
    for (op_index, op) in c.ops().iter().enumerate() {
        if let CircuitOp::Gate(g) = op {
            if let Some(Param::Var { index, .. }) = g.params.get("theta") {
                if !matches!(g.name.as_str(), "rx" | "ry" | "rz") {
                    return Err(Error::pre(format!(
                        "parameter shift unsupported for generator of `{}` at op {op_index}",
                        g.name
                    )));
                }
                occurrences.push((op_index, *index));
            }
        }
    }
    let shift = std::f64::consts::FRAC_PI_2;
    let mut grad = vec![0.0f64; pc.n_params()];
    for &(op_index, var) in &occurrences {
        let mut plus = c.clone();
        plus.shift_gate_param(op_index, shift)?;
        let mut minus = c.clone();
        minus.shift_gate_param(op_index, -shift)?;
        grad[var] += (energy_of(&plus, observable)? - energy_of(&minus, observable)?) / 2.0;
    }
    Ok(grad)
}

/// Central finite differences; the independent oracle for the exact methods.
pub fn finite_difference_grad(
    f: impl Fn(&[f64]) -> Result<f64>,
    theta: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(Error::pre("finite-difference step must be positive"));
    }
    let mut grad = Vec::with_capacity(theta.len());
    let mut point = theta.to_vec();
    for k in 0..theta.len() {
        point[k] = theta[k] + h;
        let fp = f(&point)?;
        point[k] = theta[k] - h;
        let fm = f(&point)?;
        point[k] = theta[k];
        grad.push((fp - fm) / (2.0 * h));
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Forward,
    Reverse,
}

/// Jacobian of the output state: column k is `d psi / d theta_k`, returned as
/// a vector of columns of length 2^n.
pub fn jacobian_state(
    pc: &ParamCircuit,
    theta: &[f64],
    mode: JacobianMode,
) -> Result<Vec<Vec<Complex64>>> {
    let c = pc.build(theta)?;
    let items = diff_items(&c)?;
    let n = c.n();
    let p = pc.n_params();
    match mode {
        JacobianMode::Forward => {
            let mut psi = c.input_dense()?;
            let mut tangents: Vec<ComplexTensor> =
                (0..p).map(|_| ComplexTensor::zeros(vec![2; n])).collect();
            for item in &items {
                for t in tangents.iter_mut() {
                    *t = apply_matrix(t, &item.matrix, &item.qubits)?;
                }
                if let Some((index, d)) = &item.derivative {
                    let extra = apply_matrix(&psi, d, &item.qubits)?;
                    tangents[*index] = tangents[*index].add(&extra)?;
                }
                psi = apply_matrix(&psi, &item.matrix, &item.qubits)?;
            }
            Ok(tangents.into_iter().map(|t| t.into_data()).collect())
        }
        JacobianMode::Reverse => {
            let mut states = Vec::with_capacity(items.len() + 1);
            states.push(c.input_dense()?);
            for item in &items {
                let next = apply_matrix(states.last().unwrap(), &item.matrix, &item.qubits)?;
                states.push(next);
            }
            let mut columns: Vec<ComplexTensor> =
                (0..p).map(|_| ComplexTensor::zeros(vec![2; n])).collect();
            for (k, item) in items.iter().enumerate() {
                if let Some((index, d)) = &item.derivative {
                    let mut v = apply_matrix(&states[k], d, &item.qubits)?;
                    for later in &items[k + 1..] {
                        v = apply_matrix(&v, &later.matrix, &later.qubits)?;
                    }
                    columns[*index] = columns[*index].add(&v)?;
                }
            }
            Ok(columns.into_iter().map(|t| t.into_data()).collect())
        }
    }
}

/// State and directional derivative `(psi, J v)` in one forward pass.
pub fn jvp(
    pc: &ParamCircuit,
    theta: &[f64],
    v: &[f64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if v.len() != pc.n_params() {
        return Err(Error::pre("tangent vector length must equal parameter count"));
    }
    let c = pc.build(theta)?;
    let items = diff_items(&c)?;
    let n = c.n();
    let mut psi = c.input_dense()?;
    let mut tangent = ComplexTensor::zeros(vec![2; n]);
    for item in &items {
        tangent = apply_matrix(&tangent, &item.matrix, &item.qubits)?;
        if let Some((index, d)) = &item.derivative {
            if v[*index] != 0.0 {
                let extra = apply_matrix(&psi, d, &item.qubits)?
                    .scale(Complex64::new(v[*index], 0.0));
                tangent = tangent.add(&extra)?;
            }
        }
        psi = apply_matrix(&psi, &item.matrix, &item.qubits)?;
    }
    Ok((psi.into_data(), tangent.into_data()))
}

/// Quantum Fisher information
/// `M_ij = Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>]`.
pub fn qfi(pc: &ParamCircuit, theta: &[f64]) -> Result<QFIMatrix> {
    let p = pc.n_params();
    let c = pc.build(theta)?;
    let psi = c.state()?;
    let jac = jacobian_state(pc, theta, JacobianMode::Forward)?;
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let overlaps: Vec<Complex64> = jac.iter().map(|col| dot(col, &psi)).collect();
    let mut data = vec![0.0f64; p * p];
    for i in 0..p {
        for j in i..p {
            let value = (dot(&jac[i], &jac[j]) - overlaps[i] * overlaps[j].conj()).re;
            data[i * p + j] = value;
            data[j * p + i] = value;
        }
    }
    Ok(QFIMatrix { p, data })
}

/// Solve `(M + regularization I) x = grad` with a symmetric eigensolver.
pub fn natural_gradient_solve(
    qfi: &QFIMatrix,
    grad: &[f64],
    regularization: f64,
) -> Result<Vec<f64>> {
    if regularization < 0.0 {
        return Err(Error::pre("regularization must be nonnegative"));
    }
    let p = qfi.p;
    if grad.len() != p {
        return Err(Error::shape("gradient length must match the QFI dimension"));
    }
    if p == 0 {
        return Ok(Vec::new());
    }
    let mut m = ComplexTensor::zeros(vec![p, p]);
    for i in 0..p {
        for j in 0..p {
            m.data_mut()[i * p + j] = Complex64::new(
                qfi.at(i, j) + if i == j { regularization } else { 0.0 },
                0.0,
            );
        }
    }
    let (vals, vecs) = crate::linalg::hermitian_eig(&m)?;
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if vals.iter().any(|v| v.abs() < 1e-14 * scale.max(1e-30)) || scale == 0.0 {
        return Err(Error::pre("QFI singular even after regularization"));
    }
    let mut x = vec![0.0f64; p];
    for k in 0..p {
        let mut coeff = 0.0;
        for i in 0..p {
            coeff += vecs.mat(i, k).re * grad[i];
        }
        coeff /= vals[k];
        for (i, slot) in x.iter_mut().enumerate() {
            *slot += coeff * vecs.mat(i, k).re;
        }
    }
    Ok(x)
}

/// Hessian by central finite differences of the adjoint gradient
/// (step 1e-4), symmetrized.
pub fn hessian(
    pc: &ParamCircuit,
    observable: &Observable,
    theta: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let p = pc.n_params();
    let h = 1e-4;
    let mut rows = Vec::with_capacity(p);
    let mut point = theta.to_vec();
    for k in 0..p {
        point[k] = theta[k] + h;
        let gp = value_and_grad(pc, observable, &point)?.grad;
        point[k] = theta[k] - h;
        let gm = value_and_grad(pc, observable, &point)?.grad;
        point[k] = theta[k];
        rows.push(
            gp.iter()
                .zip(&gm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    // symmetrize
    for i in 0..p {
        for j in (i + 1)..p {
            let avg = (rows[i][j] + rows[j][i]) / 2.0;
            rows[i][j] = avg;
            rows[j][i] = avg;
        }
    }
    Ok(rows)
}

/// Entries `<psi(theta)| H |d_k psi(theta)>`: the state on the left is held
/// constant while the Jacobian columns supply the derivative side.
pub fn braket_h_dpsi(
    pc: &ParamCircuit,
    h: &ComplexTensor,
    theta: &[f64],
) -> Result<Vec<Complex64>> {
    let c = pc.build(theta)?;
    let psi = c.state()?;
    let dim = psi.len();
    if h.rank() != 2 || h.shape()[0] != dim || h.shape()[1] != dim {
        return Err(Error::shape("H must be square with dimension 2^n"));
    }
    // w = H^dag psi, so <psi|H|d_k psi> = <w|d_k psi>
    let hdag = h.dagger()?;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    for (r, slot) in w.iter_mut().enumerate() {
        for col in 0..dim {
            *slot += hdag.mat(r, col) * psi[col];
        }
    }
    let jac = jacobian_state(pc, theta, JacobianMode::Forward)?;
    Ok(jac
        .iter()
        .map(|col| w.iter().zip(col).map(|(a, b)| a.conj() * b).sum())
        .collect())
}
