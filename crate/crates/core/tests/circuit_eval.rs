//! Circuit construction and evaluation against the dense oracle.

mod common;

use common::{c, dense_oracle_state, random_mixed_circuit};
use qsim_core::circuit::{Circuit, SplitConfig};
use qsim_core::gates;
use qsim_core::rng::StatusSource;
use qsim_core::tensor::ComplexTensor;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn fig2_circuit() -> Circuit {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.cnot(0, 1);
    circ.rx(1, 0.2);
    circ
}

#[test]
fn hadamard_state() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    let state = circ.state().unwrap();
    let expect = [SQRT_HALF, 0.0, SQRT_HALF, 0.0];
    for (z, e) in state.iter().zip(expect) {
        assert!((z - c(e, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn fig2_population_and_oracle() {
    let circ = fig2_circuit();
    let state = circ.state().unwrap();
    // |alpha_00|^2 = cos^2(0.1)/2
    assert!((state[0].norm_sqr() - 0.1f64.cos().powi(2) / 2.0).abs() < 1e-12);
    let oracle = dense_oracle_state(&circ);
    for (a, b) in state.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn exp1_gate_application_matches_dense_matrix() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.exp1(&[0, 1], 0.2, gates::zz_matrix()).unwrap();
    let state = circ.state().unwrap();
    let oracle = dense_oracle_state(&circ);
    for (a, b) in state.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn bell_state_and_amplitudes() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.cnot(0, 1);
    let state = circ.state().unwrap();
    assert!((state[0] - c(SQRT_HALF, 0.0)).norm() < 1e-14);
    assert!((state[3] - c(SQRT_HALF, 0.0)).norm() < 1e-14);
    assert!((circ.amplitude("00").unwrap() - c(SQRT_HALF, 0.0)).norm() < 1e-12);
    assert!(circ.amplitude("01").unwrap().norm() < 1e-14);
    assert!(circ.amplitude("0").is_err());
}

#[test]
fn fig2_amplitude_matches_dense_oracle() {
    let circ = fig2_circuit();
    let oracle = dense_oracle_state(&circ);
    for (i, bits) in ["00", "01", "10", "11"].iter().enumerate() {
        let amp = circ.amplitude(bits).unwrap();
        assert!((amp - oracle[i]).norm() < 1e-12, "{bits}");
    }
}

#[test]
fn dense_input_passes_through() {
    let v = vec![c(SQRT_HALF, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(SQRT_HALF, 0.0)];
    let circ = Circuit::with_input(2, v.clone()).unwrap();
    let state = circ.state().unwrap();
    for (a, b) in state.iter().zip(&v) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn unitary_s_matrix_and_non_unitary() {
    // S on |1>
    let mut circ = Circuit::new(1);
    circ.x(0);
    let s = gates::standard_gate("s").unwrap();
    circ.unitary(&[0], s, "S").unwrap();
    let state = circ.state().unwrap();
    assert!((state[1] - c(0.0, 1.0)).norm() < 1e-14);

    // non-unitary [[1,2],[2,3]] on |0> leaves [1, 2] unnormalized
    let mut circ = Circuit::new(1);
    let m = ComplexTensor::matrix_from_real(&[&[1.0, 2.0], &[2.0, 3.0]]);
    circ.unitary(&[0], m, "non_unitary").unwrap();
    let state = circ.state().unwrap();
    assert!((state[0] - c(1.0, 0.0)).norm() < 1e-14);
    assert!((state[1] - c(2.0, 0.0)).norm() < 1e-14);

    // identity leaves anything unchanged
    let mut circ = fig2_circuit();
    let before = circ.state().unwrap();
    circ.unitary(&[1], ComplexTensor::identity(2), "id").unwrap();
    let after = circ.state().unwrap();
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn full_unitary_small_circuits() {
    let mut circ = Circuit::new(1);
    circ.h(0);
    let u = circ.full_unitary().unwrap();
    let h = gates::standard_gate("h").unwrap();
    assert!(u.sub(&h).unwrap().frobenius_norm() < 1e-14);

    circ.h(0);
    let u = circ.full_unitary().unwrap();
    assert!(u.sub(&ComplexTensor::identity(2)).unwrap().frobenius_norm() < 1e-12);

    // Fig. 2: (I (x) Rx) * CNOT * (H (x) I)
    let circ = fig2_circuit();
    let u = circ.full_unitary().unwrap();
    let h_i = qsim_core::tensor::kron(&h, &ComplexTensor::identity(2)).unwrap();
    let cnot = gates::standard_gate("cnot").unwrap();
    let i_rx = qsim_core::tensor::kron(
        &ComplexTensor::identity(2),
        &gates::rotation_gate(gates::Axis::X, 0.2),
    )
    .unwrap();
    let expect = i_rx.matmul(&cnot).unwrap().matmul(&h_i).unwrap();
    assert!(u.sub(&expect).unwrap().frobenius_norm() < 1e-12);
}

#[test]
fn full_unitary_rejects_non_gate_ops() {
    let mut circ = Circuit::new(1);
    circ.post_select(0, 1).unwrap();
    assert!(circ.full_unitary().is_err());
}

#[test]
fn sampling_bell_circuit() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.cnot(0, 1);
    let mut rng = StatusSource::new(99);
    let mut count00 = 0usize;
    let draws = 10_000;
    for _ in 0..draws {
        let (bits, prob) = circ.sample(&mut rng).unwrap();
        assert!(bits == "00" || bits == "11");
        assert!((prob - 0.5).abs() < 1e-12);
        if bits == "00" {
            count00 += 1;
        }
    }
    let freq = count00 as f64 / draws as f64;
    assert!((0.47..=0.53).contains(&freq), "freq {freq}");
}

#[test]
fn sampling_deterministic_state() {
    let mut circ = Circuit::new(2);
    circ.x(0);
    let mut rng = StatusSource::new(5);
    let (bits, prob) = circ.sample(&mut rng).unwrap();
    assert_eq!(bits, "10");
    assert!((prob - 1.0).abs() < 1e-12);
}

#[test]
fn measure_subsets() {
    let mut bell = Circuit::new(2);
    bell.h(0);
    bell.cnot(0, 1);
    let mut rng = StatusSource::new(17);
    for _ in 0..50 {
        let rec = bell.measure(&[0], &mut rng).unwrap();
        assert_eq!(rec.len(), 1);
        assert!((rec[0].probability - 0.5).abs() < 1e-12);
    }
    for _ in 0..50 {
        let rec = bell.measure(&[0, 1], &mut rng).unwrap();
        assert_eq!(rec[0].outcome, rec[1].outcome);
        assert!((rec[0].probability - 0.5).abs() < 1e-12);
    }

    // |010>, measuring qubit 1 gives 1 with certainty
    let mut circ = Circuit::new(3);
    circ.x(1);
    let rec = circ.measure(&[1], &mut rng).unwrap();
    assert_eq!(rec[0].outcome, 1);
    assert!((rec[0].probability - 1.0).abs() < 1e-12);

    assert!(circ.measure(&[5], &mut rng).is_err());
}

#[test]
fn measure_and_sample_do_not_collapse() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.cnot(0, 1);
    let before = circ.state().unwrap();
    let mut rng = StatusSource::new(3);
    let _ = circ.sample(&mut rng).unwrap();
    let _ = circ.measure(&[0], &mut rng).unwrap();
    let after = circ.state().unwrap();
    // byte-identical evaluation
    for (a, b) in before.iter().zip(&after) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn expectation_values_basic() {
    let mut bell = Circuit::new(2);
    bell.h(0);
    bell.cnot(0, 1);
    let zz = bell
        .expectation(
            &[
                (gates::pauli_z(), vec![0]),
                (gates::pauli_z(), vec![1]),
            ],
            true,
        )
        .unwrap();
    assert!((zz - c(1.0, 0.0)).norm() < 1e-12);

    // 2X + 3Z on |0> gives 3
    let circ = Circuit::new(1);
    let op = ComplexTensor::matrix_from_real(&[&[3.0, 2.0], &[2.0, -3.0]]);
    let e = circ.expectation(&[(op, vec![0])], true).unwrap();
    assert!((e - c(3.0, 0.0)).norm() < 1e-12);

    // <X0> on Fig. 2 equals the dense oracle value
    let circ = fig2_circuit();
    let psi = dense_oracle_state(&circ);
    let x0 = common::embed_gate(2, &gates::pauli_x(), &[0]);
    let mut expect = c(0.0, 0.0);
    for r in 0..4 {
        for col in 0..4 {
            expect += psi[r].conj() * x0.mat(r, col) * psi[col];
        }
    }
    let got = circ.expectation(&[(gates::pauli_x(), vec![0])], true).unwrap();
    assert!((got - expect).norm() < 1e-12);
}

#[test]
fn expectation_reuse_modes_agree() {
    let mut rng = StatusSource::new(21);
    for trial in 0..8 {
        let n = 2 + trial % 3;
        let circ = random_mixed_circuit(n, 8, &mut rng);
        let terms = vec![(gates::pauli_z(), vec![0]), (gates::pauli_x(), vec![n - 1])];
        let with_state = circ.expectation(&terms, true).unwrap();
        let single_network = circ.expectation(&terms, false).unwrap();
        assert!(
            (with_state - single_network).norm() < 1e-10,
            "trial {trial}: {with_state} vs {single_network}"
        );
    }
}

#[test]
fn expectation_rejects_overlapping_terms() {
    let circ = Circuit::new(2);
    let terms = vec![(gates::pauli_z(), vec![0]), (gates::pauli_x(), vec![0])];
    assert!(circ.expectation(&terms, true).is_err());
    assert!(circ.expectation_ps(&[0], &[0], &[]).is_err());
}

#[test]
fn expectation_ps_identities() {
    let mut bell = Circuit::new(2);
    bell.h(0);
    bell.cnot(0, 1);
    // X1 Z0 on the Bell state vanishes
    let e = bell.expectation_ps(&[1], &[], &[0]).unwrap();
    assert!(e.norm() < 1e-12);
    // empty lists give the squared norm
    let e = bell.expectation_ps(&[], &[], &[]).unwrap();
    assert!((e - c(1.0, 0.0)).norm() < 1e-12);
    // after post-selection the norm drops
    let mut post = bell.clone();
    post.post_select(0, 1).unwrap();
    let e = post.expectation_ps(&[], &[], &[]).unwrap();
    assert!((e - c(0.5, 0.0)).norm() < 1e-12);
}

#[test]
fn append_composes_circuits() {
    let bell_input = vec![c(SQRT_HALF, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(SQRT_HALF, 0.0)];
    let c1 = Circuit::with_input(2, bell_input).unwrap();
    let mut c2 = Circuit::new(2);
    c2.cnot(0, 1);
    let c3 = c1.append(&c2).unwrap();
    let state = c3.state().unwrap();
    let oracle = dense_oracle_state(&c3);
    for (a, b) in state.iter().zip(&oracle) {
        assert!((a - b).norm() < 1e-12);
    }
    // appending an empty circuit changes nothing
    let same = c3.append(&Circuit::new(2)).unwrap();
    for (a, b) in c3.state().unwrap().iter().zip(&same.state().unwrap()) {
        assert!((a - b).norm() < 1e-15);
    }
    // full unitary composes as U2 * U1
    let mut a = Circuit::new(2);
    a.h(0);
    a.rz(1, 0.3);
    let mut b = Circuit::new(2);
    b.cnot(0, 1);
    b.rx(0, 0.7);
    let ab = a.append(&b).unwrap();
    let u = ab.full_unitary().unwrap();
    let expect = b
        .full_unitary()
        .unwrap()
        .matmul(&a.full_unitary().unwrap())
        .unwrap();
    assert!(u.sub(&expect).unwrap().frobenius_norm() < 1e-12);

    // mismatched widths and non-default inputs are rejected
    assert!(a.append(&Circuit::new(3)).is_err());
    let with_input = Circuit::with_input(2, vec![c(1.0, 0.0); 4]).unwrap();
    assert!(a.append(&with_input).is_err());
}

#[test]
fn norm_preserved_by_unitary_circuits() {
    let mut rng = StatusSource::new(33);
    for _ in 0..10 {
        let circ = random_mixed_circuit(4, 12, &mut rng);
        let norm: f64 = circ.state().unwrap().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-10, "norm {norm}");
    }
}

#[test]
fn random_circuits_match_dense_oracle() {
    let mut rng = StatusSource::new(44);
    for trial in 0..12 {
        let n = 2 + trial % 5; // up to 6 qubits here, 8 in the acceptance suite
        let circ = random_mixed_circuit(n, 10, &mut rng);
        let state = circ.state().unwrap();
        let oracle = dense_oracle_state(&circ);
        for (a, b) in state.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10, "trial {trial}");
        }
    }
}

#[test]
fn split_circuits_match_unsplit() {
    let mut rng = StatusSource::new(55);
    for trial in 0..6 {
        let n = 3 + trial % 2;
        // identical gate sequences, one circuit splitting two-qubit gates
        let build = |split: Option<SplitConfig>| {
            let mut circ = Circuit::new(n);
            if let Some(cfg) = split {
                circ = circ.with_split(cfg);
            }
            let mut local = StatusSource::new(1000 + trial as u64);
            for q in 0..n {
                circ.rx(q, 2.0 * local.next_uniform());
            }
            for q in 0..n - 1 {
                circ.exp1(&[q, q + 1], local.next_uniform(), gates::xx_matrix()).unwrap();
            }
            for q in 0..n {
                circ.rz(q, local.next_uniform());
            }
            circ.cnot(0, n - 1);
            circ
        };
        let plain = build(None);
        let full_rank = build(Some(SplitConfig {
            max_singular_values: 4,
            apply_to_two_qubit_gates: true,
        }));
        let a = plain.state().unwrap();
        let b = full_rank.state().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-10);
        }
        let _ = rng.next_uniform();
    }
    // rank-2 split is exact for exp(i theta XX) circuits
    let mut plain = Circuit::new(3);
    let mut split = Circuit::new(3).with_split(SplitConfig {
        max_singular_values: 2,
        apply_to_two_qubit_gates: true,
    });
    for circ in [&mut plain, &mut split] {
        circ.h(0);
        circ.exp1(&[0, 1], 0.8, gates::xx_matrix()).unwrap();
        circ.exp1(&[1, 2], -0.4, gates::xx_matrix()).unwrap();
    }
    let a = plain.state().unwrap();
    let b = split.state().unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).norm() < 1e-10);
    }
}

#[test]
fn mps_input_product_state() {
    // |111> as a 3-site product MPS, then X on qubit 0: state |011>
    let site_first = ComplexTensor::from_vec(vec![2, 1], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let site_mid = ComplexTensor::from_vec(vec![1, 2, 1], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let site_last = ComplexTensor::from_vec(vec![1, 2], vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let mut circ = Circuit::with_mps_input(3, vec![site_first, site_mid, site_last]).unwrap();
    circ.x(0);
    let state = circ.state().unwrap();
    let idx = 0b011;
    for (i, z) in state.iter().enumerate() {
        let expect = if i == idx { 1.0 } else { 0.0 };
        assert!((z - c(expect, 0.0)).norm() < 1e-14, "index {i}");
    }
    // <Z0> = 1 after the flip
    let e = circ.expectation_ps(&[], &[], &[0]).unwrap();
    assert!((e - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn wire_diagram_mentions_ops() {
    let mut circ = Circuit::new(2);
    circ.h(0);
    circ.cnot(0, 1);
    let text = circ.wire_diagram();
    assert!(text.contains("[h]"));
    assert!(text.contains("[cnot:0]"));
    assert!(text.contains("q1:"));
}
