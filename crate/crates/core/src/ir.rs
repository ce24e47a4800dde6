//! JSON intermediate representation of circuits.
//!
//! Schema (version "1"):
//! `{"version":"1","n":int,"input":{"kind":"zeros"|"dense"|"mps",...},"ops":[...]}`
//! with complex numbers always encoded as `[re, im]` pairs and matrices as
//! row-major lists of pairs. Stochastic ops carry their resolved `status`, so
//! a document always denotes one concrete trajectory.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channels;
use crate::circuit::{Circuit, CircuitOp, GateOp, GatePayload, InputState, Param, SplitConfig};
use crate::gates;
use crate::tensor::ComplexTensor;
use crate::{Error, Result};

type Pair = (f64, f64);

fn to_pairs(data: &[Complex64]) -> Vec<Pair> {
    data.iter().map(|z| (z.re, z.im)).collect()
}

fn from_pairs(pairs: &[Pair]) -> Vec<Complex64> {
    pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IRTensor {
    pub shape: Vec<usize>,
    pub data: Vec<Pair>,
}

impl IRTensor {
    fn from_tensor(t: &ComplexTensor) -> Self {
        Self { shape: t.shape().to_vec(), data: to_pairs(t.data()) }
    }
    fn to_tensor(&self, path: &str) -> Result<ComplexTensor> {
        ComplexTensor::from_vec(self.shape.clone(), from_pairs(&self.data)).map_err(|e| {
            Error::Schema { path: path.to_string(), message: e.to_string() }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IRInput {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Vec<Pair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensors: Option<Vec<IRTensor>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IROp {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    /// Gate matrix for `unitary`, generator for `exp1`/`exp`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Pair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<IRTensor>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub channel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Pair>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<Vec<Pair>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub keep: Option<u8>,
}

impl IROp {
    fn empty(kind: &str, qubits: Vec<usize>) -> Self {
        Self {
            kind: kind.to_string(),
            name: None,
            qubits,
            params: None,
            matrix: None,
            sites: None,
            channel: None,
            matrices: None,
            probs: None,
            choices: None,
            bit: None,
            status: None,
            keep: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IRSplit {
    pub max_singular_values: usize,
    pub apply_to_two_qubit_gates: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IRDocument {
    pub version: String,
    pub n: usize,
    pub input: IRInput,
    pub ops: Vec<IROp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<IRSplit>,
}

/// Serialize a circuit. Parameter values survive bit-exactly; tracked
/// parameter indices are an in-memory differentiation concern and are not
/// part of the format.
pub fn to_ir(c: &Circuit) -> IRDocument {
    let input = match c.input() {
        InputState::Zeros => IRInput { kind: "zeros".into(), data: None, tensors: None },
        InputState::Dense(v) => {
            IRInput { kind: "dense".into(), data: Some(to_pairs(v)), tensors: None }
        }
        InputState::Mps(sites) => IRInput {
            kind: "mps".into(),
            data: None,
            tensors: Some(sites.iter().map(IRTensor::from_tensor).collect()),
        },
    };
    let ops = c.ops().iter().map(op_to_ir).collect();
    IRDocument {
        version: "1".into(),
        n: c.n(),
        input,
        ops,
        split: c.split_config().map(|s| IRSplit {
            max_singular_values: s.max_singular_values,
            apply_to_two_qubit_gates: s.apply_to_two_qubit_gates,
        }),
    }
}

fn op_to_ir(op: &CircuitOp) -> IROp {
    match op {
        CircuitOp::Gate(g) => {
            let mut ir = IROp::empty("gate", g.qubits.clone());
            ir.name = Some(g.name.clone());
            if !g.params.is_empty() {
                ir.params = Some(
                    g.params
                        .iter()
                        .map(|(k, v)| (k.clone(), v.value()))
                        .collect(),
                );
            }
            match &g.payload {
                GatePayload::Registry => {}
                GatePayload::Exp1 { generator } | GatePayload::Exp { generator } => {
                    ir.matrix = Some(to_pairs(generator.data()));
                }
                GatePayload::Unitary { matrix } => {
                    ir.matrix = Some(to_pairs(matrix.data()));
                }
                GatePayload::Mpo { sites } => {
                    ir.sites = Some(sites.iter().map(IRTensor::from_tensor).collect());
                }
            }
            ir
        }
        CircuitOp::KrausGeneral { channel, operators, qubits, status } => {
            let mut ir = IROp::empty("kraus", qubits.clone());
            ir.status = Some(*status);
            match channel {
                Some((name, params)) => {
                    ir.channel = Some(name.clone());
                    ir.params = Some(params.clone());
                }
                None => {
                    ir.kind = "kraus_general".into();
                    ir.matrices =
                        Some(operators.iter().map(|m| to_pairs(m.data())).collect());
                }
            }
            ir
        }
        CircuitOp::KrausUnitary { operators, probs, qubits, status } => {
            let mut ir = IROp::empty("kraus_unitary", qubits.clone());
            ir.matrices = Some(operators.iter().map(|m| to_pairs(m.data())).collect());
            ir.probs = Some(probs.clone());
            ir.status = Some(*status);
            ir
        }
        CircuitOp::CondMeasure { qubit, status, bit } => {
            let mut ir = IROp::empty("cond_measure", vec![*qubit]);
            ir.status = Some(*status);
            ir.bit = Some(*bit);
            ir
        }
        CircuitOp::ConditionalGate { bit, choices, qubit } => {
            let mut ir = IROp::empty("conditional_gate", vec![*qubit]);
            ir.bit = Some(*bit);
            ir.choices = Some(choices.iter().map(|m| to_pairs(m.data())).collect());
            ir
        }
        CircuitOp::PostSelect { qubit, keep } => {
            let mut ir = IROp::empty("post_select", vec![*qubit]);
            ir.keep = Some(*keep);
            ir
        }
    }
}

fn schema_err<T>(path: String, message: impl Into<String>) -> Result<T> {
    Err(Error::Schema { path, message: message.into() })
}

fn square_matrix(pairs: &[Pair], qubits: usize, path: &str) -> Result<ComplexTensor> {
    let dim = 1usize << qubits;
    if pairs.len() != dim * dim {
        return schema_err(
            path.to_string(),
            format!("expected {} complex entries, got {}", dim * dim, pairs.len()),
        );
    }
    Ok(ComplexTensor::from_vec(vec![dim, dim], from_pairs(pairs)).expect("validated shape"))
}

/// Rebuild a circuit from a document; stochastic ops replay their stored
/// statuses, so the reconstructed trajectory matches the serialized one.
pub fn from_ir(doc: &IRDocument) -> Result<Circuit> {
    if doc.version != "1" {
        return schema_err("version".into(), format!("unsupported version `{}`", doc.version));
    }
    let mut c = match doc.input.kind.as_str() {
        "zeros" => Circuit::new(doc.n),
        "dense" => {
            let data = doc
                .input
                .data
                .as_ref()
                .ok_or_else(|| Error::Schema {
                    path: "input.data".into(),
                    message: "dense input needs data".into(),
                })?;
            Circuit::with_input(doc.n, from_pairs(data))
                .map_err(|e| Error::Schema { path: "input.data".into(), message: e.to_string() })?
        }
        "mps" => {
            let tensors = doc
                .input
                .tensors
                .as_ref()
                .ok_or_else(|| Error::Schema {
                    path: "input.tensors".into(),
                    message: "mps input needs tensors".into(),
                })?;
            let sites: Vec<ComplexTensor> = tensors
                .iter()
                .enumerate()
                .map(|(i, t)| t.to_tensor(&format!("input.tensors[{i}]")))
                .collect::<Result<_>>()?;
            Circuit::with_mps_input(doc.n, sites)
                .map_err(|e| Error::Schema { path: "input.tensors".into(), message: e.to_string() })?
        }
        other => {
            return schema_err("input.kind".into(), format!("unknown input kind `{other}`"))
        }
    };
    if let Some(split) = &doc.split {
        c = c.with_split(SplitConfig {
            max_singular_values: split.max_singular_values,
            apply_to_two_qubit_gates: split.apply_to_two_qubit_gates,
        });
    }

    for (i, op) in doc.ops.iter().enumerate() {
        let path = |field: &str| format!("ops[{i}].{field}");
        for &q in &op.qubits {
            if q >= doc.n {
                return schema_err(path("qubits"), format!("qubit {q} out of range"));
            }
        }
        let params = |op: &IROp| -> BTreeMap<String, Param> {
            op.params
                .as_ref()
                .map(|m| {
                    m.iter()
                        .map(|(k, &v)| (k.clone(), Param::Const(v)))
                        .collect()
                })
                .unwrap_or_default()
        };
        match op.kind.as_str() {
            "gate" => {
                let name = op
                    .name
                    .as_deref()
                    .ok_or_else(|| Error::Schema {
                        path: path("name"),
                        message: "gate op needs a name".into(),
                    })?;
                match (name, &op.matrix, &op.sites) {
                    ("exp1", Some(matrix), _) | ("exp", Some(matrix), _) => {
                        let generator = square_matrix(matrix, op.qubits.len(), &path("matrix"))?;
                        let theta = op
                            .params
                            .as_ref()
                            .and_then(|p| p.get("theta"))
                            .copied()
                            .ok_or_else(|| Error::Schema {
                                path: path("params.theta"),
                                message: "exponential gate needs theta".into(),
                            })?;
                        let r = if name == "exp1" {
                            c.exp1(&op.qubits, theta, generator)
                        } else {
                            c.exp(&op.qubits, theta, generator)
                        };
                        r.map_err(|e| Error::Schema { path: path("matrix"), message: e.to_string() })?;
                    }
                    (_, _, Some(sites)) => {
                        let tensors: Vec<ComplexTensor> = sites
                            .iter()
                            .enumerate()
                            .map(|(s, t)| t.to_tensor(&format!("ops[{i}].sites[{s}]")))
                            .collect::<Result<_>>()?;
                        let gate = GateOp {
                            name: name.to_string(),
                            qubits: op.qubits.clone(),
                            params: params(op),
                            payload: GatePayload::Mpo { sites: tensors },
                            split: None,
                        };
                        c.push_gate(gate)
                            .map_err(|e| Error::Schema { path: path("sites"), message: e.to_string() })?;
                    }
                    (_, Some(matrix), _) => {
                        let m = square_matrix(matrix, op.qubits.len(), &path("matrix"))?;
                        c.unitary(&op.qubits, m, name)
                            .map_err(|e| Error::Schema { path: path("matrix"), message: e.to_string() })?;
                    }
                    (_, None, None) => {
                        if gates::gate_arity(name).is_err() {
                            return schema_err(
                                path("name"),
                                format!("unknown gate name `{name}`"),
                            );
                        }
                        c.apply_gate(name, &op.qubits, params(op))
                            .map_err(|e| Error::Schema { path: path("name"), message: e.to_string() })?;
                    }
                }
            }
            "kraus" => {
                let channel_name = op.channel.as_deref().ok_or_else(|| Error::Schema {
                    path: path("channel"),
                    message: "kraus op needs a channel name".into(),
                })?;
                let raw_params: BTreeMap<String, f64> =
                    op.params.clone().unwrap_or_default();
                let ch = channels::channel_by_name(channel_name, &raw_params)
                    .map_err(|e| Error::Schema { path: path("channel"), message: e.to_string() })?;
                let status = op.status.ok_or_else(|| Error::Schema {
                    path: path("status"),
                    message: "kraus op needs a status".into(),
                })?;
                channels::mc_general_kraus(&mut c, &ch, &op.qubits, status)
                    .map_err(|e| Error::Schema { path: path("status"), message: e.to_string() })?;
            }
            "kraus_general" => {
                let matrices = op.matrices.as_ref().ok_or_else(|| Error::Schema {
                    path: path("matrices"),
                    message: "kraus_general needs matrices".into(),
                })?;
                let operators: Vec<ComplexTensor> = matrices
                    .iter()
                    .map(|m| square_matrix(m, op.qubits.len(), &path("matrices")))
                    .collect::<Result<_>>()?;
                let ch = channels::KrausChannel::from_operators(operators)
                    .map_err(|e| Error::Schema { path: path("matrices"), message: e.to_string() })?;
                let status = op.status.ok_or_else(|| Error::Schema {
                    path: path("status"),
                    message: "kraus_general needs a status".into(),
                })?;
                channels::mc_general_kraus(&mut c, &ch, &op.qubits, status)
                    .map_err(|e| Error::Schema { path: path("status"), message: e.to_string() })?;
            }
            "kraus_unitary" => {
                let matrices = op.matrices.as_ref().ok_or_else(|| Error::Schema {
                    path: path("matrices"),
                    message: "kraus_unitary needs matrices".into(),
                })?;
                let operators: Vec<ComplexTensor> = matrices
                    .iter()
                    .map(|m| square_matrix(m, op.qubits.len(), &path("matrices")))
                    .collect::<Result<_>>()?;
                let probs = op.probs.clone().ok_or_else(|| Error::Schema {
                    path: path("probs"),
                    message: "kraus_unitary needs probs".into(),
                })?;
                let status = op.status.ok_or_else(|| Error::Schema {
                    path: path("status"),
                    message: "kraus_unitary needs a status".into(),
                })?;
                channels::mc_unitary_kraus(&mut c, operators, probs, &op.qubits, status)
                    .map_err(|e| Error::Schema { path: path("probs"), message: e.to_string() })?;
            }
            "cond_measure" => {
                let status = op.status.ok_or_else(|| Error::Schema {
                    path: path("status"),
                    message: "cond_measure needs a status".into(),
                })?;
                let expected_bit = c.classical_bits();
                if let Some(bit) = op.bit {
                    if bit != expected_bit {
                        return schema_err(
                            path("bit"),
                            format!("bit handle {bit} out of order; expected {expected_bit}"),
                        );
                    }
                }
                c.cond_measure_with_status(op.qubits[0], status)
                    .map_err(|e| Error::Schema { path: path("status"), message: e.to_string() })?;
            }
            "conditional_gate" => {
                let bit = op.bit.ok_or_else(|| Error::Schema {
                    path: path("bit"),
                    message: "conditional_gate needs a bit handle".into(),
                })?;
                let choices = op.choices.as_ref().ok_or_else(|| Error::Schema {
                    path: path("choices"),
                    message: "conditional_gate needs choices".into(),
                })?;
                let tensors: Vec<ComplexTensor> = choices
                    .iter()
                    .map(|m| square_matrix(m, 1, &path("choices")))
                    .collect::<Result<_>>()?;
                c.conditional_gate(bit, tensors, op.qubits[0])
                    .map_err(|e| Error::Schema { path: path("bit"), message: e.to_string() })?;
            }
            "post_select" => {
                let keep = op.keep.ok_or_else(|| Error::Schema {
                    path: path("keep"),
                    message: "post_select needs keep".into(),
                })?;
                c.post_select(op.qubits[0], keep)
                    .map_err(|e| Error::Schema { path: path("keep"), message: e.to_string() })?;
            }
            other => {
                return schema_err(path("kind"), format!("unknown op kind `{other}`"));
            }
        }
    }
    Ok(c)
}

pub fn to_json(c: &Circuit) -> String {
    serde_json::to_string_pretty(&to_ir(c)).expect("IR is serializable")
}

pub fn from_json(json: &str) -> Result<Circuit> {
    let doc: IRDocument = serde_json::from_str(json).map_err(|e| Error::Schema {
        path: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    from_ir(&doc)
}
