//! Mid-circuit measurement, conditional gates and post-selection.

mod common;

use common::c;
use num_complex::Complex64;
use qsim_core::circuit::Circuit;
use qsim_core::gates;
use qsim_core::quop::reduced_density_matrix;
use qsim_core::rng::StatusSource;
use qsim_core::tensor::kron;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[test]
fn post_select_bell_example() {
    let bell = vec![c(SQRT_HALF, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(SQRT_HALF, 0.0)];
    let mut circ = Circuit::with_input(2, bell).unwrap();
    circ.post_select(0, 1).unwrap();
    let state = circ.state().unwrap();
    let expect = [0.0, 0.0, 0.0, SQRT_HALF];
    for (z, e) in state.iter().zip(expect) {
        assert!((z - c(e, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn post_select_on_basis_states() {
    // matching outcome leaves the state unchanged
    let mut circ = Circuit::new(2);
    circ.x(0);
    circ.post_select(0, 1).unwrap();
    let state = circ.state().unwrap();
    assert!((state[2] - c(1.0, 0.0)).norm() < 1e-14);
    // mismatching outcome zeroes it
    let mut circ = Circuit::new(2);
    circ.x(0);
    circ.post_select(0, 0).unwrap();
    let norm: f64 = circ.state().unwrap().iter().map(|z| z.norm_sqr()).sum();
    assert!(norm < 1e-300);
}

#[test]
fn cond_measure_deterministic_qubit() {
    let mut circ = Circuit::new(1);
    circ.x(0);
    let mut rng = StatusSource::new(2);
    let bit = circ.cond_measure(0, &mut rng).unwrap();
    assert_eq!(circ.bit_value(bit).unwrap(), 1);
    let state = circ.state().unwrap();
    assert!((state[1] - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn cond_measure_collapses_bell_pair() {
    for status in [0.2, 0.8] {
        let mut circ = Circuit::new(2);
        circ.h(0);
        circ.cnot(0, 1);
        let bit = circ.cond_measure_with_status(0, status).unwrap();
        let b = circ.bit_value(bit).unwrap();
        let state = circ.state().unwrap();
        let expect_index = if b == 0 { 0 } else { 3 };
        for (i, z) in state.iter().enumerate() {
            let expect = if i == expect_index { 1.0 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-10, "status {status} index {i}");
        }
    }
}

#[test]
fn cond_measure_rejects_impossible_branch() {
    let mut circ = Circuit::new(1);
    circ.x(0);
    // forcing outcome 0 has probability zero
    assert!(circ.cond_measure_with_status(0, 0.0).is_err());
    // the failed op must not linger
    assert_eq!(circ.ops().len(), 1);
}

#[test]
fn conditional_gate_choices() {
    let eye = qsim_core::tensor::ComplexTensor::identity(2);
    for (status, expect_index) in [(0.1, 0b00), (0.9, 0b11)] {
        let mut circ = Circuit::new(2);
        circ.h(0);
        let bit = circ.cond_measure_with_status(0, status).unwrap();
        circ.conditional_gate(bit, vec![eye.clone(), gates::pauli_x()], 1).unwrap();
        let state = circ.state().unwrap();
        for (i, z) in state.iter().enumerate() {
            let expect = if i == expect_index { 1.0 } else { 0.0 };
            assert!((z.norm() - expect).abs() < 1e-10);
        }
    }
    let mut circ = Circuit::new(2);
    let eye2 = qsim_core::tensor::ComplexTensor::identity(2);
    assert!(circ.conditional_gate(0, vec![eye2], 1).is_err()); // unknown bit, too few choices
}

fn teleport(a: f64, b: Complex64, statuses: (f64, f64)) -> (Vec<Complex64>, Vec<Complex64>) {
    // input |psi> = a|0> + b|1> on qubit 0, ancillas |00>
    let single = vec![c(a, 0.0), b];
    let rest = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
    let full = {
        let s = qsim_core::tensor::ComplexTensor::from_vec(vec![2], single.clone()).unwrap();
        let r = qsim_core::tensor::ComplexTensor::from_vec(vec![4], rest).unwrap();
        kron(&s.reshape(vec![2, 1]).unwrap(), &r.reshape(vec![4, 1]).unwrap())
            .unwrap()
            .into_data()
    };
    let mut circ = Circuit::with_input(3, full).unwrap();
    circ.h(2);
    circ.cnot(2, 1);
    circ.cnot(0, 1);
    circ.h(0);
    let z = circ.cond_measure_with_status(0, statuses.0).unwrap();
    let x = circ.cond_measure_with_status(1, statuses.1).unwrap();
    let eye = qsim_core::tensor::ComplexTensor::identity(2);
    circ.conditional_gate(x, vec![eye.clone(), gates::pauli_x()], 2).unwrap();
    circ.conditional_gate(z, vec![eye, gates::pauli_z()], 2).unwrap();
    (single, circ.state().unwrap())
}

#[test]
fn teleportation_fidelity_is_one() {
    let mut rng = StatusSource::new(77);
    // paper's worked input a = 0.3 plus random states, across measurement branches
    let mut cases = vec![(0.3, c((1.0 - 0.09f64).sqrt(), 0.0))];
    for _ in 0..20 {
        let re = rng.next_normal();
        let im = rng.next_normal();
        let a = rng.next_normal().abs();
        let norm = (a * a + re * re + im * im).sqrt();
        cases.push((a / norm, c(re / norm, im / norm)));
    }
    for (i, (a, b)) in cases.into_iter().enumerate() {
        let statuses = (rng.next_uniform(), rng.next_uniform());
        let (input, out_state) = teleport(a, b, statuses);
        let rho2 = reduced_density_matrix(&out_state, 3, &[0, 1]).unwrap();
        // fidelity <psi| rho |psi>
        let mut fidelity = c(0.0, 0.0);
        for r in 0..2 {
            for s in 0..2 {
                fidelity += input[r].conj() * rho2.mat(r, s) * input[s];
            }
        }
        assert!(
            (fidelity.re - 1.0).abs() < 1e-10 && fidelity.im.abs() < 1e-10,
            "case {i}: fidelity {fidelity}"
        );
    }
}

#[test]
fn teleportation_worked_example_reduced_state() {
    let a = 0.3;
    let b = (1.0 - a * a) as f64;
    let (_, out_state) = teleport(a, c(b.sqrt(), 0.0), (0.42, 0.77));
    let rho2 = reduced_density_matrix(&out_state, 3, &[0, 1]).unwrap();
    // rho should be |psi><psi| with psi = [0.3, sqrt(0.91)] up to global phase
    assert!((rho2.mat(0, 0).re - 0.09).abs() < 1e-10);
    assert!((rho2.mat(1, 1).re - 0.91).abs() < 1e-10);
    assert!((rho2.mat(0, 1).norm() - (0.09f64 * 0.91).sqrt()).abs() < 1e-10);
}
