//! Pure-state circuits: construction, evaluation and measurement.
//!
//! A [`Circuit`] is an append-only op list over `n` qubits. Stochastic ops
//! (channels, collapsing measurements) carry an explicit status in [0,1) so a
//! circuit is always a single deterministic trajectory: evaluating it twice
//! gives identical results, and serializing to IR preserves the trajectory.
//!
//! Bit ordering: qubit 0 is the most significant bit, `index = sum_i b_i *
//! 2^(n-1-i)`, and all bitstring I/O follows it.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::gates::{self, Axis};
use crate::tensor::{contract_pair, svd_split, ComplexTensor};
use crate::tn;
use crate::{Error, Result};

/// Dense state vectors are capped at this qubit count (about 1 GiB of
/// complex doubles).
pub const DENSE_STATE_CAP: usize = 26;
/// Full-unitary extraction cap.
pub const UNITARY_CAP: usize = 13;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A gate parameter, optionally tracked for differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Const(f64),
    Var { index: usize, value: f64 },
}

impl Param {
    pub fn var(index: usize, value: f64) -> Self {
        Param::Var { index, value }
    }
    pub fn value(&self) -> f64 {
        match self {
            Param::Const(v) => *v,
            Param::Var { value, .. } => *value,
        }
    }
    pub fn index(&self) -> Option<usize> {
        match self {
            Param::Const(_) => None,
            Param::Var { index, .. } => Some(*index),
        }
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Const(v)
    }
}

/// Two-qubit gates are split by SVD when this is set on the circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub max_singular_values: usize,
    pub apply_to_two_qubit_gates: bool,
}

#[derive(Debug, Clone)]
pub enum InputState {
    Zeros,
    Dense(Vec<Complex64>),
    /// MPS site tensors: first site (phys, bond), middle (bond, phys, bond),
    /// last (bond, phys); a single site is just (phys).
    Mps(Vec<ComplexTensor>),
}

#[derive(Debug, Clone)]
pub enum GatePayload {
    /// Matrix derived from the registry name and params at evaluation time.
    Registry,
    Exp1 { generator: ComplexTensor },
    Exp { generator: ComplexTensor },
    Unitary { matrix: ComplexTensor },
    /// MPO gate sites: first (out, in, bond) / middle (bond, out, in, bond) /
    /// last (bond, out, in); single site (out, in).
    Mpo { sites: Vec<ComplexTensor> },
}

#[derive(Debug, Clone)]
pub struct SplitParts {
    pub left: ComplexTensor,  // (out0, in0, bond)
    pub right: ComplexTensor, // (bond, out1, in1)
}

#[derive(Debug, Clone)]
pub struct GateOp {
    pub name: String,
    pub qubits: Vec<usize>,
    pub params: BTreeMap<String, Param>,
    pub payload: GatePayload,
    pub split: Option<SplitParts>,
}

#[derive(Debug, Clone)]
pub enum CircuitOp {
    Gate(GateOp),
    KrausGeneral {
        channel: Option<(String, BTreeMap<String, f64>)>,
        operators: Vec<ComplexTensor>,
        qubits: Vec<usize>,
        status: f64,
    },
    KrausUnitary {
        operators: Vec<ComplexTensor>,
        probs: Vec<f64>,
        qubits: Vec<usize>,
        status: f64,
    },
    CondMeasure { qubit: usize, status: f64, bit: usize },
    ConditionalGate { bit: usize, choices: Vec<ComplexTensor>, qubit: usize },
    PostSelect { qubit: usize, keep: u8 },
}

/// Outcome of a non-collapsing Z measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: u8,
    /// Joint Born probability of the full drawn outcome tuple.
    pub probability: f64,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    n: usize,
    ops: Vec<CircuitOp>,
    input: InputState,
    split: Option<SplitConfig>,
    bits: usize,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Self { n, ops: Vec::new(), input: InputState::Zeros, split: None, bits: 0 }
    }

    pub fn with_input(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(Error::shape(format!(
                "dense input needs {} amplitudes, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        Ok(Self { n, ops: Vec::new(), input: InputState::Dense(amplitudes), split: None, bits: 0 })
    }

    pub fn with_mps_input(n: usize, sites: Vec<ComplexTensor>) -> Result<Self> {
        if sites.len() != n {
            return Err(Error::shape("MPS input needs one site per qubit"));
        }
        Ok(Self { n, ops: Vec::new(), input: InputState::Mps(sites), split: None, bits: 0 })
    }

    pub fn with_split(mut self, split: SplitConfig) -> Self {
        self.split = Some(split);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn input(&self) -> &InputState {
        &self.input
    }

    pub fn split_config(&self) -> Option<SplitConfig> {
        self.split
    }

    pub(crate) fn set_split_config(&mut self, split: Option<SplitConfig>) {
        self.split = split;
    }

    pub fn classical_bits(&self) -> usize {
        self.bits
    }

    fn check_qubits(&self, qubits: &[usize]) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &q in qubits {
            if q >= self.n {
                return Err(Error::QubitIndex { index: q, n: self.n });
            }
            if !seen.insert(q) {
                return Err(Error::pre("duplicate qubit index"));
            }
        }
        Ok(())
    }

    // -- construction -------------------------------------------------------

    /// Append a registry gate.
    pub fn apply_gate(
        &mut self,
        name: &str,
        qubits: &[usize],
        params: BTreeMap<String, Param>,
    ) -> Result<()> {
        let arity = gates::gate_arity(name)?;
        if qubits.len() != arity {
            return Err(Error::pre(format!(
                "gate `{name}` acts on {arity} qubits, got {}",
                qubits.len()
            )));
        }
        self.check_qubits(qubits)?;
        let is_param = matches!(name, "rx" | "ry" | "rz");
        if is_param && !params.contains_key("theta") {
            return Err(Error::pre(format!("gate `{name}` needs a `theta` parameter")));
        }
        self.push_gate(GateOp {
            name: name.to_string(),
            qubits: qubits.to_vec(),
            params,
            payload: GatePayload::Registry,
            split: None,
        })
    }

    pub fn h(&mut self, q: usize) {
        self.apply_gate("h", &[q], BTreeMap::new()).expect("valid gate");
    }
    pub fn x(&mut self, q: usize) {
        self.apply_gate("x", &[q], BTreeMap::new()).expect("valid gate");
    }
    pub fn y(&mut self, q: usize) {
        self.apply_gate("y", &[q], BTreeMap::new()).expect("valid gate");
    }
    pub fn z(&mut self, q: usize) {
        self.apply_gate("z", &[q], BTreeMap::new()).expect("valid gate");
    }
    pub fn s(&mut self, q: usize) {
        self.apply_gate("s", &[q], BTreeMap::new()).expect("valid gate");
    }
    pub fn cnot(&mut self, control: usize, target: usize) {
        self.apply_gate("cnot", &[control, target], BTreeMap::new()).expect("valid gate");
    }
    pub fn cz(&mut self, a: usize, b: usize) {
        self.apply_gate("cz", &[a, b], BTreeMap::new()).expect("valid gate");
    }
    pub fn swap(&mut self, a: usize, b: usize) {
        self.apply_gate("swap", &[a, b], BTreeMap::new()).expect("valid gate");
    }

    pub fn rx(&mut self, q: usize, theta: impl Into<Param>) {
        self.rotation(q, "rx", theta.into());
    }
    pub fn ry(&mut self, q: usize, theta: impl Into<Param>) {
        self.rotation(q, "ry", theta.into());
    }
    pub fn rz(&mut self, q: usize, theta: impl Into<Param>) {
        self.rotation(q, "rz", theta.into());
    }

    fn rotation(&mut self, q: usize, name: &str, theta: Param) {
        let mut params = BTreeMap::new();
        params.insert("theta".to_string(), theta);
        self.apply_gate(name, &[q], params).expect("valid rotation");
    }

    /// `exp(i theta G)` with an involutory generator.
    pub fn exp1(
        &mut self,
        qubits: &[usize],
        theta: impl Into<Param>,
        generator: ComplexTensor,
    ) -> Result<()> {
        let theta = theta.into();
        self.check_qubits(qubits)?;
        let dim = 1usize << qubits.len();
        if generator.shape() != [dim, dim] {
            return Err(Error::shape("generator dimension must match qubit count"));
        }
        // validate once at append time so evaluation cannot fail later
        gates::exp1_gate(theta.value(), &generator)?;
        let mut params = BTreeMap::new();
        params.insert("theta".to_string(), theta);
        self.push_gate(GateOp {
            name: "exp1".into(),
            qubits: qubits.to_vec(),
            params,
            payload: GatePayload::Exp1 { generator },
            split: None,
        })
    }

    /// `exp(i theta G)` with a general square generator.
    pub fn exp(
        &mut self,
        qubits: &[usize],
        theta: impl Into<Param>,
        generator: ComplexTensor,
    ) -> Result<()> {
        let theta = theta.into();
        self.check_qubits(qubits)?;
        let dim = 1usize << qubits.len();
        if generator.shape() != [dim, dim] {
            return Err(Error::shape("generator dimension must match qubit count"));
        }
        let mut params = BTreeMap::new();
        params.insert("theta".to_string(), theta);
        self.push_gate(GateOp {
            name: "exp".into(),
            qubits: qubits.to_vec(),
            params,
            payload: GatePayload::Exp { generator },
            split: None,
        })
    }

    /// Apply an arbitrary (possibly non-unitary) matrix; no unitarity check,
    /// non-unitary matrices leave the output state unnormalized.
    pub fn unitary(&mut self, qubits: &[usize], matrix: ComplexTensor, name: &str) -> Result<()> {
        self.check_qubits(qubits)?;
        let dim = 1usize << qubits.len();
        if matrix.shape() != [dim, dim] {
            return Err(Error::shape(format!(
                "matrix must be {dim}x{dim} for {} qubits",
                qubits.len()
            )));
        }
        self.push_gate(GateOp {
            name: name.to_string(),
            qubits: qubits.to_vec(),
            params: BTreeMap::new(),
            payload: GatePayload::Unitary { matrix },
            split: None,
        })
    }

    /// Apply an MPO gate; site tensors enter the network individually.
    pub fn mpo(&mut self, qubits: &[usize], mpo: &crate::quop::QuOperator) -> Result<()> {
        self.check_qubits(qubits)?;
        let sites = mpo.to_mpo_gate_sites()?;
        if sites.len() != qubits.len() {
            return Err(Error::shape("MPO site count must match qubit count"));
        }
        self.push_gate(GateOp {
            name: "multicontrol".into(),
            qubits: qubits.to_vec(),
            params: BTreeMap::new(),
            payload: GatePayload::Mpo { sites },
            split: None,
        })
    }

    pub(crate) fn push_gate(&mut self, mut gate: GateOp) -> Result<()> {
        if let Some(cfg) = self.split {
            if cfg.apply_to_two_qubit_gates
                && gate.qubits.len() == 2
                && !matches!(gate.payload, GatePayload::Mpo { .. })
            {
                let dense = gate_matrix(&gate)?;
                let split = svd_split(
                    &dense.reshape(vec![2, 2, 2, 2])?,
                    cfg.max_singular_values,
                )?;
                gate.split = Some(SplitParts { left: split.left, right: split.right });
            }
        }
        self.ops.push(CircuitOp::Gate(gate));
        Ok(())
    }

    pub(crate) fn push_op(&mut self, op: CircuitOp) {
        if let CircuitOp::CondMeasure { .. } = op {
            self.bits += 1;
        }
        self.ops.push(op);
    }

    pub(crate) fn pop_op(&mut self) {
        if let Some(CircuitOp::CondMeasure { .. }) = self.ops.pop() {
            self.bits -= 1;
        }
    }

    /// Collapsing Z measurement; returns the classical bit handle.
    pub fn cond_measure(&mut self, qubit: usize, rng: &mut crate::rng::StatusSource) -> Result<usize> {
        self.cond_measure_with_status(qubit, rng.next_uniform())
    }

    /// Collapsing Z measurement with an externally supplied status.
    pub fn cond_measure_with_status(&mut self, qubit: usize, status: f64) -> Result<usize> {
        self.check_qubits(&[qubit])?;
        let bit = self.bits;
        self.bits += 1;
        self.ops.push(CircuitOp::CondMeasure { qubit, status, bit });
        // resolve eagerly so a zero-probability forced branch fails here
        match self.resolve() {
            Ok(_) => Ok(bit),
            Err(e) => {
                self.ops.pop();
                self.bits -= 1;
                Err(e)
            }
        }
    }

    /// The measured value of a classical bit, if the trajectory resolves.
    pub fn bit_value(&self, bit: usize) -> Result<u8> {
        let resolved = self.resolve()?;
        resolved
            .bits
            .get(bit)
            .copied()
            .ok_or_else(|| Error::pre(format!("unknown bit handle {bit}")))
    }

    /// Apply `choices[bit]` to `qubit`, controlled by a measured bit.
    pub fn conditional_gate(
        &mut self,
        bit: usize,
        choices: Vec<ComplexTensor>,
        qubit: usize,
    ) -> Result<()> {
        self.check_qubits(&[qubit])?;
        if bit >= self.bits {
            return Err(Error::pre(format!("unknown bit handle {bit}")));
        }
        if choices.len() < 2 {
            return Err(Error::pre("conditional_gate needs at least two choices"));
        }
        for m in &choices {
            if m.shape() != [2, 2] {
                return Err(Error::shape("conditional gate choices must be 2x2"));
            }
        }
        self.ops.push(CircuitOp::ConditionalGate { bit, choices, qubit });
        Ok(())
    }

    /// Project `qubit` onto `keep` without renormalizing.
    pub fn post_select(&mut self, qubit: usize, keep: u8) -> Result<()> {
        self.check_qubits(&[qubit])?;
        if keep > 1 {
            return Err(Error::pre("keep must be 0 or 1"));
        }
        self.ops.push(CircuitOp::PostSelect { qubit, keep });
        Ok(())
    }

    /// Concatenate: first apply `self`, then `other`. `other` must have the
    /// default all-zero input.
    pub fn append(&self, other: &Circuit) -> Result<Circuit> {
        if self.n != other.n {
            return Err(Error::pre("append requires equal qubit counts"));
        }
        if !matches!(other.input, InputState::Zeros) {
            return Err(Error::pre("appended circuit must have the default input"));
        }
        let mut out = self.clone();
        for op in &other.ops {
            let mut op = op.clone();
            // classical registers concatenate
            match &mut op {
                CircuitOp::CondMeasure { bit, .. } => *bit += self.bits,
                CircuitOp::ConditionalGate { bit, .. } => *bit += self.bits,
                _ => {}
            }
            out.push_op(op);
        }
        out.bits = self.bits + other.bits;
        Ok(out)
    }

    // -- evaluation ---------------------------------------------------------

    /// Shift a gate's theta value in place (parameter-shift evaluations).
    pub(crate) fn shift_gate_param(&mut self, op_index: usize, delta: f64) -> Result<()> {
        match self.ops.get_mut(op_index) {
            Some(CircuitOp::Gate(g)) => {
                match g.params.get_mut("theta") {
                    Some(Param::Const(v)) => *v += delta,
                    Some(Param::Var { value, .. }) => *value += delta,
                    None => return Err(Error::pre("gate has no theta parameter")),
                }
                Ok(())
            }
            _ => Err(Error::pre("op is not a gate")),
        }
    }

    pub(crate) fn input_dense(&self) -> Result<ComplexTensor> {
        if self.n > DENSE_STATE_CAP {
            return Err(Error::DenseCap(format!(
                "dense evaluation capped at {DENSE_STATE_CAP} qubits, circuit has {}",
                self.n
            )));
        }
        let shape = vec![2usize; self.n];
        match &self.input {
            InputState::Zeros => {
                let mut data = vec![ZERO; 1 << self.n];
                data[0] = ONE;
                ComplexTensor::from_vec(shape, data)
            }
            InputState::Dense(v) => ComplexTensor::from_vec(shape, v.clone()),
            InputState::Mps(sites) => {
                let mut acc: Option<ComplexTensor> = None;
                for (k, site) in sites.iter().enumerate() {
                    let site = site.clone();
                    acc = Some(match acc {
                        None => site,
                        Some(prev) => {
                            // contract previous right bond with this left bond
                            let bond_axis = prev.rank() - 1;
                            contract_pair(&prev, &[bond_axis], &site, &[0])?
                        }
                    });
                    let _ = k;
                }
                let t = acc.ok_or_else(|| Error::shape("empty MPS"))?;
                t.reshape(shape)
            }
        }
    }

    /// Resolve stochastic ops into a deterministic item list. Circuits without
    /// dynamic ops resolve without touching the state.
    pub(crate) fn resolve(&self) -> Result<Resolved> {
        let dynamic = self.ops.iter().any(|op| {
            matches!(
                op,
                CircuitOp::KrausGeneral { .. }
                    | CircuitOp::KrausUnitary { .. }
                    | CircuitOp::CondMeasure { .. }
                    | CircuitOp::ConditionalGate { .. }
            )
        });
        let mut items = Vec::with_capacity(self.ops.len());
        let mut bits = vec![0u8; self.bits];
        if !dynamic {
            for op in &self.ops {
                match op {
                    CircuitOp::Gate(g) => items.push(gate_item(g)?),
                    CircuitOp::PostSelect { qubit, keep } => {
                        items.push(ResolvedItem::Matrix {
                            matrix: projector(*keep),
                            qubits: vec![*qubit],
                        });
                    }
                    _ => unreachable!(),
                }
            }
            return Ok(Resolved { items, bits, final_state: None });
        }

        let mut state = self.input_dense()?;
        for op in &self.ops {
            match op {
                CircuitOp::Gate(g) => {
                    let item = gate_item(g)?;
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
                CircuitOp::PostSelect { qubit, keep } => {
                    let item =
                        ResolvedItem::Matrix { matrix: projector(*keep), qubits: vec![*qubit] };
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
                CircuitOp::CondMeasure { qubit, status, bit } => {
                    let norm_sq = norm_sq(&state);
                    if norm_sq < 1e-300 {
                        return Err(Error::pre("measurement on a zero-norm state"));
                    }
                    let p1 = prob_one(&state, *qubit) / norm_sq;
                    let p0 = 1.0 - p1;
                    let outcome = if *status < p0 { 0u8 } else { 1u8 };
                    let p = if outcome == 0 { p0 } else { p1 };
                    if p < 1e-12 {
                        return Err(Error::pre(format!(
                            "forced zero-probability branch on qubit {qubit}"
                        )));
                    }
                    bits[*bit] = outcome;
                    let matrix = projector(outcome).scale(Complex64::new(1.0 / p.sqrt(), 0.0));
                    let item = ResolvedItem::Matrix { matrix, qubits: vec![*qubit] };
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
                CircuitOp::ConditionalGate { bit, choices, qubit } => {
                    let value = bits[*bit] as usize;
                    let matrix = choices
                        .get(value)
                        .cloned()
                        .ok_or_else(|| Error::pre("conditional gate choice out of range"))?;
                    let item = ResolvedItem::Matrix { matrix, qubits: vec![*qubit] };
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
                CircuitOp::KrausGeneral { operators, qubits, status, .. } => {
                    let norm_sq = norm_sq(&state);
                    let weights: Vec<f64> = operators
                        .iter()
                        .map(|k| {
                            apply_matrix(&state, k, qubits).map(|phi| norm_sq_t(&phi))
                        })
                        .collect::<Result<_>>()?;
                    let total: f64 = weights.iter().sum();
                    if total < 1e-300 {
                        return Err(Error::pre("all Kraus branch probabilities are zero"));
                    }
                    let mut cumulative = 0.0;
                    let mut branch = operators.len() - 1;
                    for (i, w) in weights.iter().enumerate() {
                        cumulative += w / total;
                        if *status < cumulative {
                            branch = i;
                            break;
                        }
                    }
                    let p_rel = weights[branch] / norm_sq;
                    let matrix = operators[branch]
                        .scale(Complex64::new(1.0 / p_rel.sqrt(), 0.0));
                    let item = ResolvedItem::Matrix { matrix, qubits: qubits.clone() };
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
                CircuitOp::KrausUnitary { operators, probs, qubits, status } => {
                    let total: f64 = probs.iter().sum();
                    let mut cumulative = 0.0;
                    let mut branch = operators.len() - 1;
                    for (i, p) in probs.iter().enumerate() {
                        cumulative += p / total;
                        if *status < cumulative {
                            branch = i;
                            break;
                        }
                    }
                    let item = ResolvedItem::Matrix {
                        matrix: operators[branch].clone(),
                        qubits: qubits.clone(),
                    };
                    state = apply_item(&state, &item)?;
                    items.push(item);
                }
            }
        }
        Ok(Resolved { items, bits, final_state: Some(state) })
    }

    /// Kraus branch chosen by the op's stored status, for callers that need
    /// the index (state-independent for unitary Kraus ops).
    pub(crate) fn last_branch_of(&self, op_index: usize) -> Result<usize> {
        let resolved = self.resolve()?;
        let _ = resolved;
        // re-derive the branch from the stored status by replaying the prefix
        let prefix = Circuit {
            n: self.n,
            ops: self.ops[..op_index].to_vec(),
            input: self.input.clone(),
            split: self.split,
            bits: self.bits,
        };
        let state = prefix.state_tensor()?;
        match &self.ops[op_index] {
            CircuitOp::KrausGeneral { operators, qubits, status, .. } => {
                let weights: Vec<f64> = operators
                    .iter()
                    .map(|k| apply_matrix(&state, k, qubits).map(|phi| norm_sq_t(&phi)))
                    .collect::<Result<_>>()?;
                let total: f64 = weights.iter().sum();
                if total < 1e-300 {
                    return Err(Error::pre("all Kraus branch probabilities are zero"));
                }
                let mut cumulative = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    cumulative += w / total;
                    if *status < cumulative {
                        return Ok(i);
                    }
                }
                Ok(operators.len() - 1)
            }
            CircuitOp::KrausUnitary { probs, status, .. } => {
                let total: f64 = probs.iter().sum();
                let mut cumulative = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    cumulative += p / total;
                    if *status < cumulative {
                        return Ok(i);
                    }
                }
                Ok(probs.len() - 1)
            }
            _ => Err(Error::pre("op is not a Kraus channel")),
        }
    }

    fn state_tensor(&self) -> Result<ComplexTensor> {
        let resolved = self.resolve()?;
        if let Some(state) = resolved.final_state {
            return Ok(state);
        }
        let mut state = self.input_dense()?;
        for item in &resolved.items {
            state = apply_item(&state, item)?;
        }
        Ok(state)
    }

    /// Full output state as a 2^n vector.
    pub fn state(&self) -> Result<Vec<Complex64>> {
        Ok(self.state_tensor()?.into_data())
    }

    /// Amplitude of a basis bitstring, contracted as a closed network; the
    /// full state is never materialized for static circuits.
    pub fn amplitude(&self, bitstring: &str) -> Result<Complex64> {
        let bits = parse_bitstring(bitstring, self.n)?;
        let resolved = self.resolve()?;
        let net = build_network(self, &resolved.items, Closing::Basis(&bits))?;
        let absorbed = tn::preprocess_absorb(&net);
        let path = tn::greedy_path(&absorbed)?;
        let out = tn::contract_with_path(&absorbed, &path)?;
        Ok(out.data()[0])
    }

    /// Unitary matrix of the whole circuit; rejects channels, measurements and
    /// post-selection.
    pub fn full_unitary(&self) -> Result<ComplexTensor> {
        if self.n > UNITARY_CAP {
            return Err(Error::DenseCap(format!(
                "full_unitary capped at {UNITARY_CAP} qubits"
            )));
        }
        for (i, op) in self.ops.iter().enumerate() {
            if !matches!(op, CircuitOp::Gate(_)) {
                return Err(Error::pre(format!(
                    "full_unitary requires a gate-only circuit; op {i} is not a gate"
                )));
            }
        }
        let dim = 1usize << self.n;
        let mut acc = ComplexTensor::identity(dim).reshape(vec![2; 2 * self.n])?;
        let resolved = self.resolve()?;
        for item in &resolved.items {
            acc = apply_item(&acc, item)?;
        }
        acc.reshape(vec![dim, dim])
    }

    /// Z-basis sample over all qubits: (bitstring, its exact Born probability).
    /// Non-collapsing. The distribution is normalized before drawing; the
    /// returned flag is true when the state had to be renormalized.
    pub fn sample(&self, rng: &mut crate::rng::StatusSource) -> Result<(String, f64)> {
        self.sample_with_status(rng.next_uniform()).map(|(s, p, _)| (s, p))
    }

    pub fn sample_with_status(&self, status: f64) -> Result<(String, f64, bool)> {
        let state = self.state()?;
        let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq < 1e-300 {
            return Err(Error::pre("cannot sample a zero-norm state"));
        }
        let renormalized = (norm_sq - 1.0).abs() > 1e-9;
        let mut cumulative = 0.0;
        let mut drawn = state.len() - 1;
        for (i, z) in state.iter().enumerate() {
            cumulative += z.norm_sqr() / norm_sq;
            if status < cumulative {
                drawn = i;
                break;
            }
        }
        let probability = state[drawn].norm_sqr() / norm_sq;
        Ok((format_bitstring(drawn, self.n), probability, renormalized))
    }

    /// Joint Z measurement on a qubit subset; non-collapsing. Each record
    /// carries the joint probability of the drawn outcome tuple.
    pub fn measure(
        &self,
        qubits: &[usize],
        rng: &mut crate::rng::StatusSource,
    ) -> Result<Vec<MeasurementRecord>> {
        self.check_qubits(qubits)?;
        let state = self.state()?;
        let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq < 1e-300 {
            return Err(Error::pre("cannot measure a zero-norm state"));
        }
        let k = qubits.len();
        let mut marginal = vec![0.0f64; 1 << k];
        for (i, z) in state.iter().enumerate() {
            let mut key = 0usize;
            for &q in qubits {
                key = (key << 1) | ((i >> (self.n - 1 - q)) & 1);
            }
            marginal[key] += z.norm_sqr() / norm_sq;
        }
        let status = rng.next_uniform();
        let mut cumulative = 0.0;
        let mut drawn = marginal.len() - 1;
        for (i, p) in marginal.iter().enumerate() {
            cumulative += p;
            if status < cumulative {
                drawn = i;
                break;
            }
        }
        let joint = marginal[drawn];
        Ok((0..k)
            .map(|j| MeasurementRecord {
                outcome: ((drawn >> (k - 1 - j)) & 1) as u8,
                probability: joint,
            })
            .collect())
    }

    /// `<psi| (x) terms |psi>`. With `reuse` the state is computed once and
    /// sandwiched; without it the whole expectation contracts as one network.
    pub fn expectation(
        &self,
        terms: &[(ComplexTensor, Vec<usize>)],
        reuse: bool,
    ) -> Result<Complex64> {
        let mut seen = BTreeSet::new();
        for (m, qs) in terms {
            self.check_qubits(qs)?;
            for &q in qs {
                if !seen.insert(q) {
                    return Err(Error::pre("expectation terms overlap on qubits"));
                }
            }
            let dim = 1usize << qs.len();
            if m.shape() != [dim, dim] {
                return Err(Error::shape("term matrix dimension mismatch"));
            }
        }
        if reuse {
            let psi = self.state_tensor()?;
            let mut phi = psi.clone();
            for (m, qs) in terms {
                phi = apply_matrix(&phi, m, qs)?;
            }
            Ok(inner(&psi, &phi))
        } else {
            let resolved = self.resolve()?;
            let net = build_network(self, &resolved.items, Closing::Operator(terms))?;
            let absorbed = tn::preprocess_absorb(&net);
            let path = tn::greedy_path(&absorbed)?;
            let out = tn::contract_with_path(&absorbed, &path)?;
            Ok(out.data()[0])
        }
    }

    /// Pauli-string expectation via index lists; empty lists give the squared
    /// norm of the (possibly unnormalized) output state.
    pub fn expectation_ps(&self, x: &[usize], y: &[usize], z: &[usize]) -> Result<Complex64> {
        let mut seen = BTreeSet::new();
        for &q in x.iter().chain(y).chain(z) {
            if !seen.insert(q) {
                return Err(Error::pre("x/y/z index lists overlap"));
            }
        }
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
        self.expectation(&terms, true)
    }

    /// Plain-text wire diagram.
    pub fn wire_diagram(&self) -> String {
        let mut rows: Vec<String> = (0..self.n).map(|q| format!("q{q}: ")).collect();
        let pad = |rows: &mut Vec<String>| {
            let width = rows.iter().map(|r| r.len()).max().unwrap_or(0);
            for r in rows.iter_mut() {
                while r.len() < width {
                    r.push('-');
                }
            }
        };
        for op in &self.ops {
            pad(&mut rows);
            let (label, qubits): (String, Vec<usize>) = match op {
                CircuitOp::Gate(g) => (g.name.clone(), g.qubits.clone()),
                CircuitOp::KrausGeneral { channel, qubits, .. } => (
                    channel
                        .as_ref()
                        .map(|(name, _)| name.clone())
                        .unwrap_or_else(|| "kraus".into()),
                    qubits.clone(),
                ),
                CircuitOp::KrausUnitary { qubits, .. } => ("ukraus".into(), qubits.clone()),
                CircuitOp::CondMeasure { qubit, bit, .. } => {
                    (format!("M->b{bit}"), vec![*qubit])
                }
                CircuitOp::ConditionalGate { bit, qubit, .. } => {
                    (format!("?b{bit}"), vec![*qubit])
                }
                CircuitOp::PostSelect { qubit, keep } => (format!("|{keep}><{keep}|"), vec![*qubit]),
            };
            for (slot, &q) in qubits.iter().enumerate() {
                let tag = if qubits.len() == 1 {
                    format!("[{label}]")
                } else {
                    format!("[{label}:{slot}]")
                };
                rows[q].push_str(&tag);
            }
        }
        pad(&mut rows);
        rows.join("\n")
    }
}

// ---------------------------------------------------------------------------
// resolved items and dense application
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) enum ResolvedItem {
    Matrix { matrix: ComplexTensor, qubits: Vec<usize> },
    Split { left: ComplexTensor, right: ComplexTensor, qubits: [usize; 2] },
    MpoSites { sites: Vec<ComplexTensor>, qubits: Vec<usize> },
}

pub(crate) struct Resolved {
    pub items: Vec<ResolvedItem>,
    pub bits: Vec<u8>,
    pub final_state: Option<ComplexTensor>,
}

pub(crate) fn gate_matrix(gate: &GateOp) -> Result<ComplexTensor> {
    match &gate.payload {
        GatePayload::Registry => match gate.name.as_str() {
            "rx" | "ry" | "rz" => {
                let theta = gate.params["theta"].value();
                Ok(gates::rotation_gate(Axis::from_name(&gate.name)?, theta))
            }
            name => gates::standard_gate(name),
        },
        GatePayload::Exp1 { generator } => {
            gates::exp1_gate(gate.params["theta"].value(), generator)
        }
        GatePayload::Exp { generator } => gates::exp_gate(gate.params["theta"].value(), generator),
        GatePayload::Unitary { matrix } => Ok(matrix.clone()),
        GatePayload::Mpo { sites } => densify_mpo_sites(sites),
    }
}

fn gate_item(gate: &GateOp) -> Result<ResolvedItem> {
    if let Some(split) = &gate.split {
        return Ok(ResolvedItem::Split {
            left: split.left.clone(),
            right: split.right.clone(),
            qubits: [gate.qubits[0], gate.qubits[1]],
        });
    }
    if let GatePayload::Mpo { sites } = &gate.payload {
        return Ok(ResolvedItem::MpoSites { sites: sites.clone(), qubits: gate.qubits.clone() });
    }
    Ok(ResolvedItem::Matrix { matrix: gate_matrix(gate)?, qubits: gate.qubits.clone() })
}

/// Densify MPO gate sites into a 2^k x 2^k matrix over the site order.
pub(crate) fn densify_mpo_sites(sites: &[ComplexTensor]) -> Result<ComplexTensor> {
    let k = sites.len();
    if k == 1 {
        return sites[0].clone().reshape(vec![2, 2]);
    }
    // axes carried as (out..., in..., bond)
    let mut acc = sites[0].clone(); // (out, in, bond)
    for (i, site) in sites.iter().enumerate().skip(1) {
        let bond_axis = acc.rank() - 1;
        let joined = contract_pair(&acc, &[bond_axis], site, &[0])?;
        // joined axes: (out..i, in..i, out_i, in_i[, bond])
        let outs = i; // number of outs already in acc
        let mut perm: Vec<usize> = Vec::new();
        perm.extend(0..outs); // previous outs
        perm.push(2 * outs); // new out
        perm.extend(outs..2 * outs); // previous ins
        perm.push(2 * outs + 1); // new in
        if joined.rank() == 2 * outs + 3 {
            perm.push(2 * outs + 2); // trailing bond
        }
        acc = joined.transpose(&perm)?;
    }
    let dim = 1usize << k;
    acc.reshape(vec![dim, dim])
}

fn projector(keep: u8) -> ComplexTensor {
    let mut m = ComplexTensor::zeros(vec![2, 2]);
    m.data_mut()[if keep == 0 { 0 } else { 3 }] = ONE;
    m
}

pub(crate) fn apply_item(state: &ComplexTensor, item: &ResolvedItem) -> Result<ComplexTensor> {
    match item {
        ResolvedItem::Matrix { matrix, qubits } => apply_matrix(state, matrix, qubits),
        ResolvedItem::Split { left, right, qubits } => {
            // recombine over the bond: (out0,in0,b) x (b,out1,in1) -> 4x4
            let joined = contract_pair(left, &[2], right, &[0])?; // (o0,i0,o1,i1)
            let matrix = joined.transpose(&[0, 2, 1, 3])?.reshape(vec![4, 4])?;
            apply_matrix(state, &matrix, &qubits[..])
        }
        ResolvedItem::MpoSites { sites, qubits } => {
            let matrix = densify_mpo_sites(sites)?;
            apply_matrix(state, &matrix, qubits)
        }
    }
}

/// Apply a 2^k x 2^k matrix to the listed qubit axes of a rank-n state tensor.
pub(crate) fn apply_matrix(
    state: &ComplexTensor,
    matrix: &ComplexTensor,
    qubits: &[usize],
) -> Result<ComplexTensor> {
    let n = state.rank();
    let k = qubits.len();
    let gate = matrix.reshape(vec![2; 2 * k])?;
    let in_axes: Vec<usize> = (k..2 * k).collect();
    let contracted = contract_pair(state, qubits, &gate, &in_axes)?;
    // contracted axes: free state axes ascending, then gate outputs in list order
    let free: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
    let mut perm = vec![0usize; n];
    for (target, source) in free.iter().zip(0..) {
        perm[*target] = source;
    }
    for (slot, &q) in qubits.iter().enumerate() {
        perm[q] = n - k + slot;
    }
    contracted.transpose(&perm)
}

fn norm_sq(state: &ComplexTensor) -> f64 {
    state.data().iter().map(|z| z.norm_sqr()).sum()
}

fn norm_sq_t(state: &ComplexTensor) -> f64 {
    norm_sq(state)
}

fn prob_one(state: &ComplexTensor, qubit: usize) -> f64 {
    let n = state.rank();
    state
        .data()
        .iter()
        .enumerate()
        .filter(|(i, _)| (i >> (n - 1 - qubit)) & 1 == 1)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

fn inner(a: &ComplexTensor, b: &ComplexTensor) -> Complex64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

pub fn parse_bitstring(s: &str, n: usize) -> Result<Vec<u8>> {
    if s.len() != n {
        return Err(Error::pre(format!("bitstring must have length {n}")));
    }
    s.chars()
        .map(|ch| match ch {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            other => Err(Error::pre(format!("invalid bitstring character `{other}`"))),
        })
        .collect()
}

pub fn format_bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| {
            if (index >> (n - 1 - q)) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// network construction
// ---------------------------------------------------------------------------

pub(crate) enum Closing<'a> {
    /// Output edges stay dangling in qubit order.
    Open,
    /// Close outputs with a basis bra.
    Basis(&'a [u8]),
    /// Sandwich operator terms between the circuit and its conjugate mirror.
    Operator(&'a [(ComplexTensor, Vec<usize>)]),
}

/// Build the tensor network of a resolved circuit.
pub(crate) fn build_network(
    c: &Circuit,
    items: &[ResolvedItem],
    closing: Closing,
) -> Result<tn::Network> {
    let mut net = tn::Network::new();
    let mut wire: Vec<tn::EdgeId> = Vec::with_capacity(c.n);

    // input nodes
    match &c.input {
        InputState::Zeros => {
            for q in 0..c.n {
                let e = net.add_edge(2);
                let ket0 =
                    ComplexTensor::from_vec(vec![2], vec![ONE, ZERO]).expect("ket0");
                net.add_node(ket0, vec![e], Some([q].into()))?;
                wire.push(e);
            }
        }
        InputState::Dense(v) => {
            let t = ComplexTensor::from_vec(vec![2; c.n], v.clone())?;
            let edges: Vec<tn::EdgeId> = (0..c.n).map(|_| net.add_edge(2)).collect();
            net.add_node(t, edges.clone(), Some((0..c.n).collect()))?;
            wire = edges;
        }
        InputState::Mps(sites) => {
            let mut bond_edge: Option<tn::EdgeId> = None;
            for (q, site) in sites.iter().enumerate() {
                let phys = net.add_edge(2);
                let mut edges = Vec::new();
                let last = q + 1 == sites.len();
                match (q == 0, last) {
                    (true, true) => edges.push(phys),
                    (true, false) => {
                        let b = net.add_edge(site.shape()[1]);
                        edges.extend([phys, b]);
                        bond_edge = Some(b);
                    }
                    (false, false) => {
                        let b = net.add_edge(site.shape()[2]);
                        edges.extend([bond_edge.take().expect("bond"), phys, b]);
                        bond_edge = Some(b);
                    }
                    (false, true) => {
                        edges.extend([bond_edge.take().expect("bond"), phys]);
                    }
                }
                net.add_node(site.clone(), edges, Some([q].into()))?;
                wire.push(phys);
            }
        }
    }

    add_items_to_network(&mut net, items, &mut wire, false)?;

    match closing {
        Closing::Open => {
            net.set_dangling(wire);
        }
        Closing::Basis(bits) => {
            for (q, &b) in bits.iter().enumerate() {
                let mut v = vec![ZERO, ZERO];
                v[b as usize] = ONE;
                let bra = ComplexTensor::from_vec(vec![2], v)?;
                net.add_node(bra, vec![wire[q]], Some([q].into()))?;
            }
        }
        Closing::Operator(terms) => {
            // operator nodes between ket and bra wire ends
            let mut bra_wire = wire.clone();
            for (m, qs) in terms {
                let k = qs.len();
                let t = m.reshape(vec![2; 2 * k])?;
                let mut edges = Vec::with_capacity(2 * k);
                let mut new_edges = Vec::with_capacity(k);
                for _ in 0..k {
                    let e = net.add_edge(2); // bra side (row index)
                    new_edges.push(e);
                }
                edges.extend(new_edges.iter().copied());
                for &q in qs {
                    edges.push(wire[q]); // ket side (column index)
                }
                net.add_node(t, edges, Some(qs.iter().copied().collect()))?;
                for (slot, &q) in qs.iter().enumerate() {
                    bra_wire[q] = new_edges[slot];
                }
            }
            // conjugate mirror of the circuit, applied to the bra wires
            add_conjugate_mirror(&mut net, c, items, &mut bra_wire)?;
        }
    }
    Ok(net)
}

fn add_items_to_network(
    net: &mut tn::Network,
    items: &[ResolvedItem],
    wire: &mut [tn::EdgeId],
    conjugate: bool,
) -> Result<()> {
    let maybe_conj = |t: &ComplexTensor| if conjugate { t.conj() } else { t.clone() };
    for item in items {
        match item {
            ResolvedItem::Matrix { matrix, qubits } => {
                let k = qubits.len();
                let t = maybe_conj(matrix).reshape(vec![2; 2 * k])?;
                let mut edges = Vec::with_capacity(2 * k);
                let outs: Vec<tn::EdgeId> = (0..k).map(|_| net.add_edge(2)).collect();
                edges.extend(outs.iter().copied());
                for &q in qubits {
                    edges.push(wire[q]);
                }
                net.add_node(t, edges, Some(qubits.iter().copied().collect()))?;
                for (slot, &q) in qubits.iter().enumerate() {
                    wire[q] = outs[slot];
                }
            }
            ResolvedItem::Split { left, right, qubits } => {
                let bond_dim = left.shape()[2];
                let bond = net.add_edge(bond_dim);
                let out0 = net.add_edge(2);
                let out1 = net.add_edge(2);
                // left (out0, in0, bond), right (bond, out1, in1)
                net.add_node(
                    maybe_conj(left),
                    vec![out0, wire[qubits[0]], bond],
                    Some([qubits[0]].into()),
                )?;
                net.add_node(
                    maybe_conj(right),
                    vec![bond, out1, wire[qubits[1]]],
                    Some([qubits[1]].into()),
                )?;
                wire[qubits[0]] = out0;
                wire[qubits[1]] = out1;
            }
            ResolvedItem::MpoSites { sites, qubits } => {
                let k = sites.len();
                let mut bond: Option<tn::EdgeId> = None;
                for (s, site) in sites.iter().enumerate() {
                    let q = qubits[s];
                    let out = net.add_edge(2);
                    let t = maybe_conj(site);
                    let last = s + 1 == k;
                    let edges = match (s == 0, last) {
                        (true, true) => vec![out, wire[q]],
                        (true, false) => {
                            let b = net.add_edge(site.shape()[2]);
                            bond = Some(b);
                            vec![out, wire[q], b]
                        }
                        (false, false) => {
                            let b = net.add_edge(site.shape()[3]);
                            let prev = bond.replace(b).expect("bond");
                            vec![prev, out, wire[q], b]
                        }
                        (false, true) => {
                            vec![bond.take().expect("bond"), out, wire[q]]
                        }
                    };
                    net.add_node(t, edges, Some([q].into()))?;
                    wire[q] = out;
                }
            }
        }
    }
    Ok(())
}

/// Append the conjugated circuit (inputs last) onto the bra wires so that the
/// whole network evaluates `<psi| O |psi>`.
fn add_conjugate_mirror(
    net: &mut tn::Network,
    c: &Circuit,
    items: &[ResolvedItem],
    bra_wire: &mut [tn::EdgeId],
) -> Result<()> {
    // mirror items in reverse order with swapped in/out roles
    for item in items.iter().rev() {
        match item {
            ResolvedItem::Matrix { matrix, qubits } => {
                let k = qubits.len();
                // conj(U) with out axes joined to the bra wires: node axes
                // (out..., in...) where "out" connects toward the operator
                let t = matrix.conj().reshape(vec![2; 2 * k])?;
                let ins: Vec<tn::EdgeId> = (0..k).map(|_| net.add_edge(2)).collect();
                let mut edges = Vec::with_capacity(2 * k);
                for &q in qubits {
                    edges.push(bra_wire[q]);
                }
                edges.extend(ins.iter().copied());
                net.add_node(t, edges, Some(qubits.iter().copied().collect()))?;
                for (slot, &q) in qubits.iter().enumerate() {
                    bra_wire[q] = ins[slot];
                }
            }
            ResolvedItem::Split { left, right, qubits } => {
                let bond_dim = left.shape()[2];
                let bond = net.add_edge(bond_dim);
                let in0 = net.add_edge(2);
                let in1 = net.add_edge(2);
                net.add_node(
                    left.conj(),
                    vec![bra_wire[qubits[0]], in0, bond],
                    Some([qubits[0]].into()),
                )?;
                net.add_node(
                    right.conj(),
                    vec![bond, bra_wire[qubits[1]], in1],
                    Some([qubits[1]].into()),
                )?;
                bra_wire[qubits[0]] = in0;
                bra_wire[qubits[1]] = in1;
            }
            ResolvedItem::MpoSites { sites, qubits } => {
                let k = sites.len();
                let mut bond: Option<tn::EdgeId> = None;
                for (s, site) in sites.iter().enumerate() {
                    let q = qubits[s];
                    let inn = net.add_edge(2);
                    let t = site.conj();
                    let last = s + 1 == k;
                    let edges = match (s == 0, last) {
                        (true, true) => vec![bra_wire[q], inn],
                        (true, false) => {
                            let b = net.add_edge(site.shape()[2]);
                            bond = Some(b);
                            vec![bra_wire[q], inn, b]
                        }
                        (false, false) => {
                            let b = net.add_edge(site.shape()[3]);
                            let prev = bond.replace(b).expect("bond");
                            vec![prev, bra_wire[q], inn, b]
                        }
                        (false, true) => vec![bond.take().expect("bond"), bra_wire[q], inn],
                    };
                    net.add_node(t, edges, Some([q].into()))?;
                    bra_wire[q] = inn;
                }
            }
        }
    }
    // conjugated input closes the bra wires
    match &c.input {
        InputState::Zeros => {
            for q in 0..c.n {
                let ket0 = ComplexTensor::from_vec(vec![2], vec![ONE, ZERO])?;
                net.add_node(ket0, vec![bra_wire[q]], Some([q].into()))?;
            }
        }
        InputState::Dense(v) => {
            let t = ComplexTensor::from_vec(vec![2; c.n], v.clone())?.conj();
            let edges: Vec<tn::EdgeId> = bra_wire.to_vec();
            net.add_node(t, edges, Some((0..c.n).collect()))?;
        }
        InputState::Mps(sites) => {
            let mut bond: Option<tn::EdgeId> = None;
            for (q, site) in sites.iter().enumerate() {
                let t = site.conj();
                let last = q + 1 == sites.len();
                let edges = match (q == 0, last) {
                    (true, true) => vec![bra_wire[q]],
                    (true, false) => {
                        let b = net.add_edge(site.shape()[1]);
                        bond = Some(b);
                        vec![bra_wire[q], b]
                    }
                    (false, false) => {
                        let b = net.add_edge(site.shape()[2]);
                        let prev = bond.replace(b).expect("bond");
                        vec![prev, bra_wire[q], b]
                    }
                    (false, true) => vec![bond.take().expect("bond"), bra_wire[q]],
                };
                net.add_node(t, edges, Some([q].into()))?;
            }
        }
    }
    Ok(())
}
