//! Shared oracles for integration tests: a dense matrix-multiplication
//! simulator that never touches the tensor-network machinery.

use num_complex::Complex64;
use qsim_core::circuit::{Circuit, CircuitOp, Param};
use qsim_core::gates;
use qsim_core::rng::StatusSource;
use qsim_core::tensor::ComplexTensor;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Dense 2^n x 2^n matrix of a k-qubit gate on the listed qubits.
pub fn embed_gate(n: usize, matrix: &ComplexTensor, qubits: &[usize]) -> ComplexTensor {
    let dim = 1usize << n;
    let k = qubits.len();
    let gdim = 1usize << k;
    let mut data = vec![c(0.0, 0.0); dim * dim];
    for row in 0..dim {
        let mut grow = 0usize;
        for (slot, &q) in qubits.iter().enumerate() {
            grow |= ((row >> (n - 1 - q)) & 1) << (k - 1 - slot);
        }
        for gcol in 0..gdim {
            let amp = matrix.mat(grow, gcol);
            if amp == c(0.0, 0.0) {
                continue;
            }
            let mut col = row;
            for (slot, &q) in qubits.iter().enumerate() {
                let bit = (gcol >> (k - 1 - slot)) & 1;
                col = (col & !(1 << (n - 1 - q))) | (bit << (n - 1 - q));
            }
            data[row * dim + col] += amp;
        }
    }
    ComplexTensor::from_vec(vec![dim, dim], data).unwrap()
}

/// Matrix-multiplication state oracle over a circuit's resolved gate list.
/// Only static circuits (gates + post-selection) are supported.
pub fn dense_oracle_state(circ: &Circuit) -> Vec<Complex64> {
    let n = circ.n();
    let dim = 1usize << n;
    let mut state: Vec<Complex64> = match circ.input() {
        qsim_core::circuit::InputState::Zeros => {
            let mut v = vec![c(0.0, 0.0); dim];
            v[0] = c(1.0, 0.0);
            v
        }
        qsim_core::circuit::InputState::Dense(v) => v.clone(),
        qsim_core::circuit::InputState::Mps(_) => panic!("oracle: dense inputs only"),
    };
    for op in circ.ops() {
        let (matrix, qubits): (ComplexTensor, Vec<usize>) = match op {
            CircuitOp::Gate(g) => (oracle_gate_matrix(g), g.qubits.clone()),
            CircuitOp::PostSelect { qubit, keep } => {
                let m = if *keep == 0 {
                    ComplexTensor::matrix_from_real(&[&[1.0, 0.0], &[0.0, 0.0]])
                } else {
                    ComplexTensor::matrix_from_real(&[&[0.0, 0.0], &[0.0, 1.0]])
                };
                (m, vec![*qubit])
            }
            other => panic!("oracle: unsupported op {other:?}"),
        };
        let full = embed_gate(n, &matrix, &qubits);
        let mut next = vec![c(0.0, 0.0); dim];
        for (r, slot) in next.iter_mut().enumerate() {
            for (col, amp) in state.iter().enumerate() {
                *slot += full.mat(r, col) * amp;
            }
        }
        state = next;
    }
    state
}

fn oracle_gate_matrix(g: &qsim_core::circuit::GateOp) -> ComplexTensor {
    use qsim_core::circuit::GatePayload;
    match &g.payload {
        GatePayload::Registry => match g.name.as_str() {
            "rx" => gates::rotation_gate(gates::Axis::X, g.params["theta"].value()),
            "ry" => gates::rotation_gate(gates::Axis::Y, g.params["theta"].value()),
            "rz" => gates::rotation_gate(gates::Axis::Z, g.params["theta"].value()),
            name => gates::standard_gate(name).unwrap(),
        },
        GatePayload::Exp1 { generator } => {
            gates::exp1_gate(g.params["theta"].value(), generator).unwrap()
        }
        GatePayload::Exp { generator } => {
            gates::exp_gate(g.params["theta"].value(), generator).unwrap()
        }
        GatePayload::Unitary { matrix } => matrix.clone(),
        GatePayload::Mpo { .. } => panic!("oracle: MPO gates unsupported"),
    }
}

/// Random circuit over rotations and entanglers for oracle comparisons.
/// Parameters are tracked (`Param::Var`) in application order.
pub fn random_rotation_circuit(
    n: usize,
    depth: usize,
    rng: &mut StatusSource,
) -> (Circuit, Vec<f64>) {
    let mut circ = Circuit::new(n);
    let mut theta = Vec::new();
    for layer in 0..depth {
        for q in 0..n {
            let angle = 2.0 * std::f64::consts::PI * rng.next_uniform();
            let idx = theta.len();
            theta.push(angle);
            match (layer + q) % 3 {
                0 => circ.rx(q, Param::var(idx, angle)),
                1 => circ.ry(q, Param::var(idx, angle)),
                _ => circ.rz(q, Param::var(idx, angle)),
            }
        }
        for q in (layer % 2..n.saturating_sub(1)).step_by(2) {
            circ.cnot(q, q + 1);
        }
    }
    (circ, theta)
}

/// Random n-qubit circuit mixing every static gate kind, for state oracles.
pub fn random_mixed_circuit(n: usize, ops: usize, rng: &mut StatusSource) -> Circuit {
    let mut circ = Circuit::new(n);
    for _ in 0..ops {
        let choice = (rng.next_uniform() * 6.0) as usize;
        let q = (rng.next_uniform() * n as f64) as usize % n;
        match choice {
            0 => circ.h(q),
            1 => circ.rx(q, 2.0 * rng.next_uniform()),
            2 => circ.rz(q, 2.0 * rng.next_uniform()),
            3 if n > 1 => {
                let mut p = (rng.next_uniform() * n as f64) as usize % n;
                if p == q {
                    p = (p + 1) % n;
                }
                circ.cnot(q, p);
            }
            4 if n > 1 => {
                let p = (q + 1) % n;
                let theta = rng.next_uniform();
                circ.exp1(&[q, p], theta, gates::zz_matrix()).unwrap();
            }
            _ => {
                let theta = rng.next_uniform();
                circ.exp(&[q], theta, gates::pauli_y()).unwrap();
            }
        }
    }
    circ
}
