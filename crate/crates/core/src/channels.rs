//! Quantum channels in Kraus form, density-matrix evolution and Monte Carlo
//! trajectory application.
//!
//! The depolarizing factory uses square-root coefficients `sqrt(p_i)` so that
//! the channel is trace preserving and the `p_i` act as branch probabilities,
//! which is also what the unitary-Kraus trajectory sampler assumes.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuit::{Circuit, CircuitOp};
use crate::gates;
use crate::tensor::ComplexTensor;
use crate::{Error, Result};

/// Density-matrix evolution is capped here; a 13-qubit density matrix already
/// holds 2^26 complex doubles, twice the memory footprint of the pure-state cap.
pub const DM_CAP: usize = 13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A quantum operation as a list of Kraus operators on `arity` qubits.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    pub name: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub operators: Vec<ComplexTensor>,
    pub arity: usize,
}

impl KrausChannel {
    pub fn from_operators(operators: Vec<ComplexTensor>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::pre("Kraus channel needs at least one operator"));
        }
        let dim = operators[0].shape()[0];
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::shape("Kraus operators must act on qubits"));
        }
        for op in &operators {
            if op.shape() != [dim, dim] {
                return Err(Error::shape("Kraus operators must share one square shape"));
            }
        }
        Ok(Self {
            name: None,
            params: BTreeMap::new(),
            operators,
            arity: dim.trailing_zeros() as usize,
        })
    }

    /// `|| sum_i K_i^dag K_i - I ||_F`; zero for a CPTP channel.
    pub fn cptp_defect(&self) -> f64 {
        let dim = 1usize << self.arity;
        let mut acc = ComplexTensor::zeros(vec![dim, dim]);
        for k in &self.operators {
            let kk = k.dagger().unwrap().matmul(k).unwrap();
            acc = acc.add(&kk).unwrap();
        }
        acc.sub(&ComplexTensor::identity(dim)).unwrap().frobenius_norm()
    }
}

fn drop_zero_operators(ops: Vec<ComplexTensor>) -> Vec<ComplexTensor> {
    let kept: Vec<ComplexTensor> = ops
        .into_iter()
        .filter(|k| k.frobenius_norm() > 1e-15)
        .collect();
    kept
}

fn named(
    name: &str,
    params: &[(&str, f64)],
    operators: Vec<ComplexTensor>,
) -> Result<KrausChannel> {
    let mut ch = KrausChannel::from_operators(drop_zero_operators(operators))?;
    ch.name = Some(name.to_string());
    ch.params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    Ok(ch)
}

pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside [0, 1]")));
    }
    let k0 = ComplexTensor::matrix_from_real(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]);
    let k1 = ComplexTensor::matrix_from_real(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]);
    named("amplitude_damping", &[("gamma", gamma)], vec![k0, k1])
}

pub fn phase_damping(gamma: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside [0, 1]")));
    }
    let k0 = ComplexTensor::matrix_from_real(&[&[1.0, 0.0], &[0.0, (1.0 - gamma).sqrt()]]);
    let k1 = ComplexTensor::matrix_from_real(&[&[0.0, 0.0], &[0.0, gamma.sqrt()]]);
    named("phase_damping", &[("gamma", gamma)], vec![k0, k1])
}

pub fn depolarizing(px: f64, py: f64, pz: f64) -> Result<KrausChannel> {
    for (label, p) in [("px", px), ("py", py), ("pz", pz)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("{label} = {p} outside [0, 1]")));
        }
    }
    if px + py + pz > 1.0 + 1e-12 {
        return Err(Error::Parameter("px + py + pz must not exceed 1".into()));
    }
    let k0 = ComplexTensor::identity(2).scale(c((1.0 - px - py - pz).max(0.0).sqrt(), 0.0));
    let k1 = gates::pauli_x().scale(c(px.sqrt(), 0.0));
    let k2 = gates::pauli_y().scale(c(py.sqrt(), 0.0));
    let k3 = gates::pauli_z().scale(c(pz.sqrt(), 0.0));
    named(
        "depolarizing",
        &[("px", px), ("py", py), ("pz", pz)],
        vec![k0, k1, k2, k3],
    )
}

pub fn reset() -> Result<KrausChannel> {
    let k0 = ComplexTensor::matrix_from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
    let k1 = ComplexTensor::matrix_from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
    named("reset", &[], vec![k0, k1])
}

/// Channel factory used by the IR reader.
pub fn channel_by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<KrausChannel> {
    let get = |key: &str| -> Result<f64> {
        params
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parameter(format!("channel `{name}` needs parameter `{key}`")))
    };
    match name {
        "amplitude_damping" => amplitude_damping(get("gamma")?),
        "phase_damping" => phase_damping(get("gamma")?),
        "depolarizing" => depolarizing(get("px")?, get("py")?, get("pz")?),
        "reset" => reset(),
        other => Err(Error::UnknownGate(format!("channel `{other}`"))),
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo trajectory application
// ---------------------------------------------------------------------------

/// Append a general Kraus channel to a pure-state circuit, selecting the
/// branch by `status` in the cumulative Born-weight partition (ordered by
/// operator index). The chosen operator is applied renormalized; returns the
/// branch index.
pub fn mc_general_kraus(
    c: &mut Circuit,
    ch: &KrausChannel,
    qubits: &[usize],
    status: f64,
) -> Result<usize> {
    if !(0.0..1.0).contains(&status) {
        return Err(Error::Parameter("status must lie in [0, 1)".into()));
    }
    if qubits.len() != ch.arity {
        return Err(Error::pre("channel arity does not match qubit count"));
    }
    let op = CircuitOp::KrausGeneral {
        channel: ch.name.clone().map(|n| (n, ch.params.clone())),
        operators: ch.operators.clone(),
        qubits: qubits.to_vec(),
        status,
    };
    c.push_op(op);
    let index = c.ops().len() - 1;
    match c.last_branch_of(index) {
        Ok(branch) => Ok(branch),
        Err(e) => {
            c.pop_op();
            Err(e)
        }
    }
}

/// Append a unitary-Kraus channel: the branch is drawn from fixed
/// probabilities independent of the state, and the chosen unitary is applied
/// without renormalization.
pub fn mc_unitary_kraus(
    c: &mut Circuit,
    operators: Vec<ComplexTensor>,
    probs: Vec<f64>,
    qubits: &[usize],
    status: f64,
) -> Result<usize> {
    if !(0.0..1.0).contains(&status) {
        return Err(Error::Parameter("status must lie in [0, 1)".into()));
    }
    if operators.len() != probs.len() || operators.is_empty() {
        return Err(Error::pre("operators and probabilities must match and be nonempty"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::Parameter("probabilities must be nonnegative and sum to 1".into()));
    }
    let dim = 1usize << qubits.len();
    for op in &operators {
        if op.shape() != [dim, dim] {
            return Err(Error::shape("unitary Kraus operator dimension mismatch"));
        }
        // unitary up to scale: K^dag K = c I
        let kk = op.dagger()?.matmul(op)?;
        let scale = kk.mat(0, 0);
        let defect = kk
            .sub(&ComplexTensor::identity(dim).scale(scale))?
            .frobenius_norm();
        if defect > 1e-8 * scale.norm().max(1.0) {
            return Err(Error::pre("operators must be unitary up to a constant factor"));
        }
    }
    let mut cumulative = 0.0;
    let mut branch = probs.len() - 1;
    for (i, p) in probs.iter().enumerate() {
        cumulative += p / total;
        if status < cumulative {
            branch = i;
            break;
        }
    }
    c.push_op(CircuitOp::KrausUnitary { operators, probs, qubits: qubits.to_vec(), status });
    Ok(branch)
}

// ---------------------------------------------------------------------------
// density-matrix simulation
// ---------------------------------------------------------------------------

/// Full density-matrix circuit; operations are applied eagerly to `rho`.
#[derive(Debug, Clone)]
pub struct DMCircuit {
    n: usize,
    rho: ComplexTensor, // rank-2n tensor: row axes 0..n, column axes n..2n
}

impl DMCircuit {
    pub fn new(n: usize) -> Result<Self> {
        Self::check_cap(n)?;
        let mut data = vec![ZERO; 1 << (2 * n)];
        data[0] = ONE;
        Ok(Self { n, rho: ComplexTensor::from_vec(vec![2; 2 * n], data)? })
    }

    pub fn with_dm_input(n: usize, rho: ComplexTensor) -> Result<Self> {
        Self::check_cap(n)?;
        let dim = 1usize << n;
        if rho.shape() != [dim, dim] {
            return Err(Error::shape("density matrix dimension mismatch"));
        }
        let herm: f64 = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| (rho.mat(i, j) - rho.mat(j, i).conj()).norm())
            .fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(Error::pre("density matrix must be Hermitian"));
        }
        let trace: Complex64 = (0..dim).map(|i| rho.mat(i, i)).sum();
        if (trace - ONE).norm() > 1e-10 {
            return Err(Error::pre("density matrix must have unit trace"));
        }
        if dim <= 256 {
            let (vals, _) = crate::linalg::hermitian_eig(&rho)?;
            if vals.first().copied().unwrap_or(0.0) < -1e-10 {
                return Err(Error::pre("density matrix must be positive semidefinite"));
            }
        }
        Ok(Self { n, rho: rho.reshape(vec![2; 2 * n])? })
    }

    pub fn with_pure_input(n: usize, psi: &[Complex64]) -> Result<Self> {
        Self::check_cap(n)?;
        let dim = 1usize << n;
        if psi.len() != dim {
            return Err(Error::shape("pure input dimension mismatch"));
        }
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = psi[i] * psi[j].conj();
            }
        }
        Ok(Self { n, rho: ComplexTensor::from_vec(vec![2; 2 * n], data)? })
    }

    fn check_cap(n: usize) -> Result<()> {
        if n > DM_CAP {
            return Err(Error::DenseCap(format!("density matrices capped at {DM_CAP} qubits")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        for &q in qubits {
            if q >= self.n {
                return Err(Error::QubitIndex { index: q, n: self.n });
            }
        }
        Ok(())
    }

    /// `rho <- U rho U^dag` on the addressed qubits.
    pub fn apply_gate_matrix(&mut self, matrix: &ComplexTensor, qubits: &[usize]) -> Result<()> {
        self.check_qubits(qubits)?;
        let rows: Vec<usize> = qubits.to_vec();
        let cols: Vec<usize> = qubits.iter().map(|&q| q + self.n).collect();
        let applied = crate::circuit::apply_matrix(&self.rho, matrix, &rows)?;
        self.rho = crate::circuit::apply_matrix(&applied, &matrix.conj(), &cols)?;
        Ok(())
    }

    pub fn apply_named_gate(&mut self, name: &str, qubits: &[usize]) -> Result<()> {
        self.apply_gate_matrix(&gates::standard_gate(name)?, qubits)
    }

    pub fn rx(&mut self, q: usize, theta: f64) -> Result<()> {
        self.apply_gate_matrix(&gates::rotation_gate(gates::Axis::X, theta), &[q])
    }
    pub fn ry(&mut self, q: usize, theta: f64) -> Result<()> {
        self.apply_gate_matrix(&gates::rotation_gate(gates::Axis::Y, theta), &[q])
    }
    pub fn rz(&mut self, q: usize, theta: f64) -> Result<()> {
        self.apply_gate_matrix(&gates::rotation_gate(gates::Axis::Z, theta), &[q])
    }

    /// `rho <- sum_i K_i rho K_i^dag` on the addressed qubits.
    pub fn apply_kraus(&mut self, ch: &KrausChannel, qubits: &[usize]) -> Result<()> {
        self.check_qubits(qubits)?;
        if qubits.len() != ch.arity {
            return Err(Error::pre("channel arity does not match qubit count"));
        }
        let rows: Vec<usize> = qubits.to_vec();
        let cols: Vec<usize> = qubits.iter().map(|&q| q + self.n).collect();
        let mut acc: Option<ComplexTensor> = None;
        for k in &ch.operators {
            let applied = crate::circuit::apply_matrix(&self.rho, k, &rows)?;
            let applied = crate::circuit::apply_matrix(&applied, &k.conj(), &cols)?;
            acc = Some(match acc {
                None => applied,
                Some(prev) => prev.add(&applied)?,
            });
        }
        self.rho = acc.expect("nonempty channel");
        Ok(())
    }

    /// Full density matrix as a 2^n x 2^n tensor.
    pub fn state(&self) -> Result<ComplexTensor> {
        let dim = 1usize << self.n;
        self.rho.reshape(vec![dim, dim])
    }

    pub fn trace(&self) -> Complex64 {
        let dim = 1usize << self.n;
        let data = self.rho.data();
        (0..dim).map(|i| data[i * dim + i]).sum()
    }

    /// `tr(rho O)` for a product of disjoint single/multi-qubit terms.
    pub fn expectation(&self, terms: &[(ComplexTensor, Vec<usize>)]) -> Result<Complex64> {
        let mut applied = self.rho.clone();
        for (m, qs) in terms {
            self.check_qubits(qs)?;
            applied = crate::circuit::apply_matrix(&applied, m, qs)?;
        }
        let dim = 1usize << self.n;
        let data = applied.data();
        Ok((0..dim).map(|i| data[i * dim + i]).sum())
    }

    pub fn expectation_ps(&self, x: &[usize], y: &[usize], z: &[usize]) -> Result<Complex64> {
        let mut terms: Vec<(ComplexTensor, Vec<usize>)> = Vec::new();
        for &q in x {
            terms.push((gates::pauli_x(), vec![q]));
        }
        for &q in y {
            terms.push((gates::pauli_y(), vec![q]));
        }
        for &q in z {
            terms.push((gates::pauli_z(), vec![q]));
        }
        self.expectation(&terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_damping_on_excited_state() {
        let ch = amplitude_damping(0.3).unwrap();
        let mut dmc = DMCircuit::new(1).unwrap();
        dmc.apply_named_gate("x", &[0]).unwrap(); // |1><1|
        dmc.apply_kraus(&ch, &[0]).unwrap();
        let rho = dmc.state().unwrap();
        assert!((rho.mat(0, 0) - c(0.3, 0.0)).norm() < 1e-12);
        assert!((rho.mat(1, 1) - c(0.7, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn phase_damping_zero_is_identity_channel() {
        let ch = phase_damping(0.0).unwrap();
        assert_eq!(ch.operators.len(), 1);
        assert!(ch.cptp_defect() < 1e-12);
    }

    #[test]
    fn depolarizing_is_cptp() {
        let ch = depolarizing(0.1, 0.2, 0.3).unwrap();
        assert!(ch.cptp_defect() < 1e-12);
        assert!(depolarizing(0.6, 0.3, 0.3).is_err());
        assert!(amplitude_damping(1.5).is_err());
    }

    #[test]
    fn builtin_channels_cptp_over_parameter_grid() {
        for &p in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!(amplitude_damping(p).unwrap().cptp_defect() < 1e-10);
            assert!(phase_damping(p).unwrap().cptp_defect() < 1e-10);
            let third = p / 3.0;
            assert!(depolarizing(third, third, third).unwrap().cptp_defect() < 1e-10);
        }
        assert!(reset().unwrap().cptp_defect() < 1e-10);
    }

    #[test]
    fn worked_evolution_alpha_gamma() {
        // rho(0.6) -> X -> amplitude damping 0.3 gives diag(0.44, 0.56)
        let rho = ComplexTensor::matrix_from_real(&[&[0.8, 0.0], &[0.0, 0.2]]);
        let mut dmc = DMCircuit::with_dm_input(1, rho).unwrap();
        dmc.apply_named_gate("x", &[0]).unwrap();
        dmc.apply_kraus(&amplitude_damping(0.3).unwrap(), &[0]).unwrap();
        let out = dmc.state().unwrap();
        assert!((out.mat(0, 0) - c(0.44, 0.0)).norm() < 1e-12);
        assert!((out.mat(1, 1) - c(0.56, 0.0)).norm() < 1e-12);
        // <Z> = -0.12
        let z = dmc.expectation_ps(&[], &[], &[0]).unwrap();
        assert!((z - c(-0.12, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identity_channel_leaves_rho_unchanged() {
        let mut dmc = DMCircuit::new(2).unwrap();
        dmc.apply_named_gate("h", &[0]).unwrap();
        dmc.apply_named_gate("cnot", &[0, 1]).unwrap();
        let before = dmc.state().unwrap();
        let id = KrausChannel::from_operators(vec![ComplexTensor::identity(2)]).unwrap();
        dmc.apply_kraus(&id, &[1]).unwrap();
        let after = dmc.state().unwrap();
        assert!(before.sub(&after).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn cptp_sequences_preserve_trace_and_hermiticity() {
        let mut rng = crate::rng::StatusSource::new(31);
        let mut dmc = DMCircuit::new(2).unwrap();
        dmc.apply_named_gate("h", &[0]).unwrap();
        dmc.apply_named_gate("cnot", &[0, 1]).unwrap();
        for step in 0..6 {
            let q = step % 2;
            match step % 3 {
                0 => dmc.apply_kraus(&amplitude_damping(rng.next_uniform()).unwrap(), &[q]),
                1 => dmc.apply_kraus(&phase_damping(rng.next_uniform()).unwrap(), &[q]),
                _ => {
                    let p = rng.next_uniform() / 3.0;
                    dmc.apply_kraus(&depolarizing(p, p, p).unwrap(), &[q])
                }
            }
            .unwrap();
        }
        assert!((dmc.trace() - ONE).norm() < 1e-10);
        let rho = dmc.state().unwrap();
        assert!(rho.sub(&rho.dagger().unwrap()).unwrap().frobenius_norm() < 1e-10);
        let (vals, _) = crate::linalg::hermitian_eig(&rho).unwrap();
        assert!(vals[0] > -1e-10);
    }

    #[test]
    fn maximally_mixed_pauli_expectations_vanish() {
        let rho = ComplexTensor::matrix_from_real(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let dmc = DMCircuit::with_dm_input(1, rho).unwrap();
        for lists in [(&[0][..], &[][..], &[][..]), (&[], &[0], &[]), (&[], &[], &[0])] {
            let e = dmc.expectation_ps(lists.0, lists.1, lists.2).unwrap();
            assert!(e.norm() < 1e-12);
        }
    }

    #[test]
    fn mc_identity_channel_always_branch_zero() {
        let id = KrausChannel::from_operators(vec![ComplexTensor::identity(2)]).unwrap();
        let mut c0 = Circuit::new(1);
        c0.h(0);
        let before = c0.state().unwrap();
        let branch = mc_general_kraus(&mut c0, &id, &[0], 0.7).unwrap();
        assert_eq!(branch, 0);
        let after = c0.state().unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mc_phase_damping_partition_boundary() {
        // |+> through phase damping 0.5: p0 = 0.75
        let ch = phase_damping(0.5).unwrap();
        let amp = 1.0 / 2f64.sqrt();
        let mut c0 = Circuit::with_input(1, vec![c(amp, 0.0), c(amp, 0.0)]).unwrap();
        let branch = mc_general_kraus(&mut c0, &ch, &[0], 0.1).unwrap();
        assert_eq!(branch, 0);
        let mut c1 = Circuit::with_input(1, vec![c(amp, 0.0), c(amp, 0.0)]).unwrap();
        let branch = mc_general_kraus(&mut c1, &ch, &[0], 0.76).unwrap();
        assert_eq!(branch, 1);
    }

    #[test]
    fn mc_unitary_kraus_partition_and_validation() {
        let ops = vec![
            gates::rotation_gate(gates::Axis::X, 0.3),
            gates::rotation_gate(gates::Axis::Y, 0.3),
            gates::rotation_gate(gates::Axis::Z, 0.3),
        ];
        let third = 1.0 / 3.0;
        let mut c0 = Circuit::new(1);
        let branch =
            mc_unitary_kraus(&mut c0, ops.clone(), vec![third; 3], &[0], 0.5).unwrap();
        assert_eq!(branch, 1);
        let mut c1 = Circuit::new(1);
        let branch = mc_unitary_kraus(&mut c1, ops.clone(), vec![1.0, 0.0, 0.0], &[0], 0.9).unwrap();
        assert_eq!(branch, 0);
        let mut c2 = Circuit::new(1);
        assert!(mc_unitary_kraus(&mut c2, ops, vec![0.5, 0.2, 0.1], &[0], 0.5).is_err());
    }

    #[test]
    fn mc_unitary_kraus_frequency_band() {
        let ops = vec![
            gates::rotation_gate(gates::Axis::X, 0.3),
            gates::rotation_gate(gates::Axis::Y, 0.3),
            gates::rotation_gate(gates::Axis::Z, 0.3),
        ];
        let third = 1.0 / 3.0;
        let mut rng = crate::rng::StatusSource::new(1234);
        let mut counts = [0usize; 3];
        let draws = 3000;
        for _ in 0..draws {
            let mut c0 = Circuit::new(1);
            let b = mc_unitary_kraus(
                &mut c0,
                ops.clone(),
                vec![third; 3],
                &[0],
                rng.next_uniform(),
            )
            .unwrap();
            counts[b] += 1;
        }
        for &count in &counts {
            let freq = count as f64 / draws as f64;
            assert!((0.28..=0.39).contains(&freq), "freq {freq}");
        }
    }

    #[test]
    fn mc_branch_is_pure_function_of_inputs() {
        let ch = depolarizing(0.1, 0.2, 0.3).unwrap();
        for &status in &[0.05, 0.35, 0.55, 0.85] {
            let mut branches = Vec::new();
            for _ in 0..3 {
                let mut c0 = Circuit::new(1);
                c0.h(0);
                branches.push(mc_general_kraus(&mut c0, &ch, &[0], status).unwrap());
            }
            assert!(branches.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
