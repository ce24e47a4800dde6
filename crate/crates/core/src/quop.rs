//! Lazy matrix/vector-like tensor networks.
//!
//! A [`QuOperator`] is a fragment of tensor nodes with designated ordered
//! `out` (row) and `in` (column) dangling edges. Vectors are operators with no
//! `in` edges, adjoint vectors have no `out` edges. Algebraic operations are
//! lazy: they only rewire edges and share node tensors structurally; nothing
//! is contracted until `eval`/`eval_matrix`.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;

use crate::tensor::ComplexTensor;
use crate::tn;
use crate::{Error, Result};

static NEXT_EDGE: AtomicU64 = AtomicU64::new(1);

fn fresh_edge() -> u64 {
    NEXT_EDGE.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone)]
struct QNode {
    tensor: Arc<ComplexTensor>,
    conjugated: bool,
    edges: Vec<u64>,
}

impl QNode {
    fn materialize(&self) -> ComplexTensor {
        if self.conjugated {
            self.tensor.conj()
        } else {
            (*self.tensor).clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuOperator {
    nodes: Vec<QNode>,
    out_edges: Vec<u64>,
    in_edges: Vec<u64>,
    edge_dims: BTreeMap<u64, usize>,
}

/// A `QuOperator` with no `in` edges.
pub type QuVector = QuOperator;
/// A `QuOperator` with no `out` edges.
pub type QuAdjointVector = QuOperator;

/// Incrementally builds a tensor-network fragment, then designates its
/// dangling edges as operator rows/columns.
pub struct FragmentBuilder {
    nodes: Vec<QNode>,
    edge_dims: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeHandle(usize);

impl Default for FragmentBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FragmentBuilder {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), edge_dims: BTreeMap::new() }
    }

    pub fn add(&mut self, tensor: ComplexTensor) -> NodeHandle {
        let edges: Vec<u64> = tensor
            .shape()
            .iter()
            .map(|&d| {
                let e = fresh_edge();
                self.edge_dims.insert(e, d);
                e
            })
            .collect();
        self.nodes.push(QNode { tensor: Arc::new(tensor), conjugated: false, edges });
        NodeHandle(self.nodes.len() - 1)
    }

    fn edge_at(&self, at: (NodeHandle, usize)) -> Result<u64> {
        let node = self
            .nodes
            .get(at.0 .0)
            .ok_or_else(|| Error::pre("unknown node handle"))?;
        node.edges
            .get(at.1)
            .copied()
            .ok_or_else(|| Error::pre("axis out of range"))
    }

    fn occurrences(&self, edge: u64) -> usize {
        self.nodes
            .iter()
            .flat_map(|n| n.edges.iter())
            .filter(|&&e| e == edge)
            .count()
    }

    /// Join two dangling axes.
    pub fn connect(&mut self, a: (NodeHandle, usize), b: (NodeHandle, usize)) -> Result<()> {
        let ea = self.edge_at(a)?;
        let eb = self.edge_at(b)?;
        if ea == eb {
            return Err(Error::pre("axes already connected"));
        }
        if self.occurrences(ea) != 1 || self.occurrences(eb) != 1 {
            return Err(Error::pre("connect requires dangling axes"));
        }
        if self.edge_dims[&ea] != self.edge_dims[&eb] {
            return Err(Error::shape("connected axes must have equal dimension"));
        }
        self.nodes[b.0 .0].edges[b.1] = ea;
        self.edge_dims.remove(&eb);
        Ok(())
    }

    /// Finish as an operator with the given row and column axes. Every
    /// dangling edge must be designated exactly once.
    pub fn into_operator(
        self,
        out: &[(NodeHandle, usize)],
        inp: &[(NodeHandle, usize)],
    ) -> Result<QuOperator> {
        let out_edges: Vec<u64> = out
            .iter()
            .map(|&at| self.edge_at(at))
            .collect::<Result<_>>()?;
        let in_edges: Vec<u64> = inp
            .iter()
            .map(|&at| self.edge_at(at))
            .collect::<Result<_>>()?;
        let op = QuOperator {
            nodes: self.nodes,
            out_edges,
            in_edges,
            edge_dims: self.edge_dims,
        };
        op.validate()?;
        Ok(op)
    }

    /// Finish as a (column) vector.
    pub fn into_vector(self, edges: &[(NodeHandle, usize)]) -> Result<QuVector> {
        self.into_operator(edges, &[])
    }
}

impl QuOperator {
    fn validate(&self) -> Result<()> {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for node in &self.nodes {
            for &e in &node.edges {
                *counts.entry(e).or_insert(0) += 1;
            }
        }
        let mut designated: BTreeMap<u64, usize> = BTreeMap::new();
        for &e in self.out_edges.iter().chain(&self.in_edges) {
            *designated.entry(e).or_insert(0) += 1;
        }
        for (&e, &c) in &counts {
            let d = designated.get(&e).copied().unwrap_or(0);
            match (c, d) {
                (2, 0) => {}          // internal
                (1, 1) => {}          // designated dangling
                _ => {
                    return Err(Error::pre(format!(
                        "edge {e} has {c} endpoints and {d} designations"
                    )))
                }
            }
        }
        for (&e, &d) in &designated {
            if counts.contains_key(&e) {
                continue;
            }
            // node-free edges only appear as identity wiring: once as out, once as in
            if d != 2 || !self.out_edges.contains(&e) || !self.in_edges.contains(&e) {
                return Err(Error::pre(format!("edge {e} designated without endpoints")));
            }
        }
        Ok(())
    }

    /// Identity operator as pure wiring (no nodes).
    pub fn identity(dims: &[usize]) -> Self {
        let mut edge_dims = BTreeMap::new();
        let edges: Vec<u64> = dims
            .iter()
            .map(|&d| {
                let e = fresh_edge();
                edge_dims.insert(e, d);
                e
            })
            .collect();
        QuOperator { nodes: Vec::new(), out_edges: edges.clone(), in_edges: edges, edge_dims }
    }

    /// Single-node vector from a state tensor; one out edge per axis.
    pub fn from_state_tensor(state: ComplexTensor) -> Self {
        let mut b = FragmentBuilder::new();
        let rank = state.rank();
        let h = b.add(state);
        let edges: Vec<(NodeHandle, usize)> = (0..rank).map(|ax| (h, ax)).collect();
        b.into_vector(&edges).expect("fresh node is valid")
    }

    /// Chain MPO from site tensors shaped (bond_left, out, in, bond_right)
    /// with unit boundary bonds.
    pub fn from_mpo_sites(sites: &[ComplexTensor]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::pre("MPO needs at least one site"));
        }
        let mut b = FragmentBuilder::new();
        let mut handles = Vec::new();
        let mut trimmed: Vec<ComplexTensor> = Vec::new();
        for (k, site) in sites.iter().enumerate() {
            if site.rank() != 4 {
                return Err(Error::shape("MPO sites must be rank 4"));
            }
            let (bl, d_out, d_in, br) =
                (site.shape()[0], site.shape()[1], site.shape()[2], site.shape()[3]);
            if k == 0 && bl != 1 {
                return Err(Error::shape("first MPO site must have left bond 1"));
            }
            if k + 1 == sites.len() && br != 1 {
                return Err(Error::shape("last MPO site must have right bond 1"));
            }
            if k > 0 {
                let prev = &trimmed[k - 1];
                if prev.shape()[prev.rank() - 1] != bl {
                    return Err(Error::shape("MPO bond dimensions must chain"));
                }
            }
            // trim unit boundary bonds
            let t = if k == 0 && k + 1 == sites.len() {
                site.reshape(vec![d_out, d_in])?
            } else if k == 0 {
                site.reshape(vec![d_out, d_in, br])?
            } else if k + 1 == sites.len() {
                site.reshape(vec![bl, d_out, d_in])?
            } else {
                site.clone()
            };
            trimmed.push(t.clone());
            handles.push(b.add(t));
        }
        for k in 1..handles.len() {
            let prev_rank = trimmed[k - 1].rank();
            b.connect((handles[k - 1], prev_rank - 1), (handles[k], 0))?;
        }
        let out: Vec<(NodeHandle, usize)> = handles
            .iter()
            .enumerate()
            .map(|(k, &h)| (h, if k == 0 { 0 } else { 1 }))
            .collect();
        let inp: Vec<(NodeHandle, usize)> = handles
            .iter()
            .enumerate()
            .map(|(k, &h)| (h, if k == 0 { 1 } else { 2 }))
            .collect();
        b.into_operator(&out, &inp)
    }

    /// Convert a circuit-shaped network into a vector over its dangling edges.
    pub(crate) fn from_tn_network(net: &tn::Network) -> Result<Self> {
        let mut edge_dims = BTreeMap::new();
        let mut nodes = Vec::new();
        for node in net.nodes() {
            for &e in &node.edges {
                edge_dims.insert(e, net.edge_dim(e));
            }
            nodes.push(QNode {
                tensor: Arc::new(node.tensor.clone()),
                conjugated: false,
                edges: node.edges.clone(),
            });
        }
        let out_edges = net.dangling();
        let op = QuOperator { nodes, out_edges, in_edges: Vec::new(), edge_dims };
        op.validate()?;
        Ok(op)
    }

    pub fn out_dims(&self) -> Vec<usize> {
        self.out_edges.iter().map(|e| self.edge_dims[e]).collect()
    }

    pub fn in_dims(&self) -> Vec<usize> {
        self.in_edges.iter().map(|e| self.edge_dims[e]).collect()
    }

    pub fn is_vector(&self) -> bool {
        self.in_edges.is_empty() && !self.out_edges.is_empty()
    }

    pub fn is_adjoint_vector(&self) -> bool {
        self.out_edges.is_empty() && !self.in_edges.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Total stored tensor elements across nodes.
    pub fn stored_elements(&self) -> usize {
        self.nodes.iter().map(|n| n.tensor.len()).sum()
    }

    /// Clone with fresh edge ids so fragments can be combined repeatedly.
    fn refreshed(&self) -> Self {
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        let mut edge_dims = BTreeMap::new();
        let mut remap = |e: u64, dims: &BTreeMap<u64, usize>, edge_dims: &mut BTreeMap<u64, usize>| {
            *map.entry(e).or_insert_with(|| {
                let ne = fresh_edge();
                edge_dims.insert(ne, dims[&e]);
                ne
            })
        };
        let nodes = self
            .nodes
            .iter()
            .map(|n| QNode {
                tensor: Arc::clone(&n.tensor),
                conjugated: n.conjugated,
                edges: n
                    .edges
                    .iter()
                    .map(|&e| remap(e, &self.edge_dims, &mut edge_dims))
                    .collect(),
            })
            .collect();
        let out_edges = self
            .out_edges
            .iter()
            .map(|&e| remap(e, &self.edge_dims, &mut edge_dims))
            .collect();
        let in_edges = self
            .in_edges
            .iter()
            .map(|&e| remap(e, &self.edge_dims, &mut edge_dims))
            .collect();
        QuOperator { nodes, out_edges, in_edges, edge_dims }
    }

    /// Matrix-matrix / matrix-vector product; lazy.
    pub fn matmul(&self, rhs: &QuOperator) -> Result<QuOperator> {
        let a = self.refreshed();
        let b = rhs.refreshed();
        if a.in_dims() != b.out_dims() {
            return Err(Error::shape(format!(
                "matmul dims {:?} vs {:?}",
                a.in_dims(),
                b.out_dims()
            )));
        }
        let mut nodes = a.nodes;
        let mut edge_dims = a.edge_dims;
        // rewire b's out edges onto a's in edges
        let rewrite: BTreeMap<u64, u64> = b
            .out_edges
            .iter()
            .copied()
            .zip(a.in_edges.iter().copied())
            .collect();
        for node in b.nodes {
            nodes.push(QNode {
                tensor: node.tensor,
                conjugated: node.conjugated,
                edges: node
                    .edges
                    .iter()
                    .map(|e| rewrite.get(e).copied().unwrap_or(*e))
                    .collect(),
            });
        }
        for (e, d) in b.edge_dims {
            if !rewrite.contains_key(&e) {
                edge_dims.insert(e, d);
            }
        }
        let in_edges: Vec<u64> = b
            .in_edges
            .iter()
            .map(|e| rewrite.get(e).copied().unwrap_or(*e))
            .collect();
        let op = QuOperator { nodes, out_edges: a.out_edges, in_edges, edge_dims };
        op.validate()?;
        Ok(op)
    }

    /// Conjugate transpose; lazy (swaps edge roles and flags conjugation).
    pub fn adjoint(&self) -> QuOperator {
        let mut out = self.refreshed();
        std::mem::swap(&mut out.out_edges, &mut out.in_edges);
        for node in &mut out.nodes {
            node.conjugated = !node.conjugated;
        }
        out
    }

    /// Multiply by a scalar; lazy (adds a rank-0 node).
    pub fn scalar_mul(&self, s: Complex64) -> QuOperator {
        let mut out = self.refreshed();
        out.nodes.push(QNode {
            tensor: Arc::new(ComplexTensor::scalar(s)),
            conjugated: false,
            edges: Vec::new(),
        });
        out
    }

    /// Tensor product; lazy.
    pub fn tensor_prod(&self, rhs: &QuOperator) -> QuOperator {
        let a = self.refreshed();
        let b = rhs.refreshed();
        let mut nodes = a.nodes;
        nodes.extend(b.nodes);
        let mut edge_dims = a.edge_dims;
        edge_dims.extend(b.edge_dims);
        let mut out_edges = a.out_edges;
        out_edges.extend(b.out_edges);
        let mut in_edges = a.in_edges;
        in_edges.extend(b.in_edges);
        QuOperator { nodes, out_edges, in_edges, edge_dims }
    }

    /// Trace out the listed sites (positions in the out/in edge lists); lazy.
    pub fn partial_trace(&self, sites: &[usize]) -> Result<QuOperator> {
        let mut out = self.refreshed();
        let mut sites: Vec<usize> = sites.to_vec();
        sites.sort_unstable();
        sites.dedup();
        for &s in sites.iter().rev() {
            if s >= out.out_edges.len() || s >= out.in_edges.len() {
                return Err(Error::pre(format!("site {s} out of range")));
            }
            let oe = out.out_edges.remove(s);
            let ie = out.in_edges.remove(s);
            if out.edge_dims[&oe] != out.edge_dims[&ie] {
                return Err(Error::shape("partial trace requires square site dims"));
            }
            if oe == ie {
                // identity wire traced: contributes a scalar factor dim
                let d = out.edge_dims[&oe];
                out.nodes.push(QNode {
                    tensor: Arc::new(ComplexTensor::scalar(Complex64::new(d as f64, 0.0))),
                    conjugated: false,
                    edges: Vec::new(),
                });
                out.edge_dims.remove(&oe);
                continue;
            }
            // unify: replace ie by oe everywhere, making it internal
            for node in &mut out.nodes {
                for e in &mut node.edges {
                    if *e == ie {
                        *e = oe;
                    }
                }
            }
            out.edge_dims.remove(&ie);
        }
        Ok(out)
    }

    /// Contract the fragment; axes ordered out-edges then in-edges.
    pub fn eval(&self) -> Result<ComplexTensor> {
        let dense: f64 = self
            .out_edges
            .iter()
            .chain(&self.in_edges)
            .map(|e| self.edge_dims[e] as f64)
            .product();
        if dense > (1u64 << 26) as f64 {
            return Err(Error::DenseCap("eval result exceeds the dense cap".into()));
        }
        // materialize, resolving identity wiring and self loops
        let mut tensors: Vec<(ComplexTensor, Vec<u64>)> = self
            .nodes
            .iter()
            .map(|n| (n.materialize(), n.edges.clone()))
            .collect();
        let mut out_edges = self.out_edges.clone();
        let mut in_edges = self.in_edges.clone();
        let mut edge_dims = self.edge_dims.clone();
        // identity wiring: same edge designated out and in with no endpoints
        let mut extra = 0u64;
        for k in 0..out_edges.len() {
            let e = out_edges[k];
            if let Some(pos) = in_edges.iter().position(|&x| x == e) {
                let on_node = tensors.iter().any(|(_, es)| es.contains(&e));
                if !on_node {
                    let d = edge_dims[&e];
                    extra += 1;
                    let e_out = u64::MAX - 2 * extra;
                    let e_in = u64::MAX - 2 * extra - 1;
                    edge_dims.insert(e_out, d);
                    edge_dims.insert(e_in, d);
                    tensors.push((ComplexTensor::identity(d), vec![e_out, e_in]));
                    out_edges[k] = e_out;
                    in_edges[pos] = e_in;
                }
            }
        }
        // self loops
        for entry in tensors.iter_mut() {
            loop {
                let dup = entry
                    .1
                    .iter()
                    .enumerate()
                    .find_map(|(i, &e)| {
                        entry.1[i + 1..]
                            .iter()
                            .position(|&x| x == e)
                            .map(|j| (i, i + 1 + j))
                    });
                let Some((i, j)) = dup else { break };
                entry.0 = entry.0.trace_axes(i, j)?;
                let (hi, lo) = (i.max(j), i.min(j));
                entry.1.remove(hi);
                entry.1.remove(lo);
            }
        }

        let mut net = tn::Network::new();
        let mut id_map: BTreeMap<u64, tn::EdgeId> = BTreeMap::new();
        for (_, edges) in &tensors {
            for &e in edges {
                id_map
                    .entry(e)
                    .or_insert_with(|| net.add_edge(edge_dims[&e]));
            }
        }
        for &e in out_edges.iter().chain(&in_edges) {
            id_map.entry(e).or_insert_with(|| net.add_edge(edge_dims[&e]));
        }
        for (tensor, edges) in tensors {
            let mapped: Vec<tn::EdgeId> = edges.iter().map(|e| id_map[e]).collect();
            net.add_node(tensor, mapped, None)?;
        }
        let dangling_order: Vec<tn::EdgeId> = out_edges
            .iter()
            .chain(&in_edges)
            .map(|e| id_map[e])
            .collect();
        net.set_dangling(dangling_order);
        if net.node_count() == 0 {
            // nothing to contract: scalar one
            return Ok(ComplexTensor::scalar(Complex64::new(1.0, 0.0)));
        }
        let path = tn::greedy_path(&net)?;
        tn::contract_with_path(&net, &path)
    }

    /// Matrix representation: (prod out dims) x (prod in dims); vectors come
    /// out as single-column matrices.
    pub fn eval_matrix(&self) -> Result<ComplexTensor> {
        let t = self.eval()?;
        let rows: usize = self.out_dims().iter().product::<usize>().max(1);
        let cols: usize = self.in_dims().iter().product::<usize>().max(1);
        t.reshape(vec![rows, cols])
    }

    /// Bond dimensions along an MPO chain, for chain-shaped operators.
    pub fn mpo_bond_dimensions(&self) -> Result<Vec<usize>> {
        let sites = self.chain_nodes()?;
        let mut bonds = Vec::new();
        for k in 1..sites.len() {
            let shared: Vec<u64> = self.nodes[sites[k - 1]]
                .edges
                .iter()
                .copied()
                .filter(|e| self.nodes[sites[k]].edges.contains(e))
                .collect();
            if shared.len() > 1 {
                return Err(Error::pre("multiple bonds between chain sites"));
            }
            bonds.push(shared.first().map(|e| self.edge_dims[e]).unwrap_or(1));
        }
        Ok(bonds)
    }

    /// Node index holding each consecutive out edge; errors unless the
    /// fragment is chain-shaped with one site per out/in pair.
    fn chain_nodes(&self) -> Result<Vec<usize>> {
        let mut order = Vec::with_capacity(self.out_edges.len());
        for (k, &oe) in self.out_edges.iter().enumerate() {
            let holder = self
                .nodes
                .iter()
                .position(|n| n.edges.contains(&oe))
                .ok_or_else(|| Error::pre("out edge without node"))?;
            if !self.in_edges.is_empty() {
                let ie = self.in_edges[k];
                if !self.nodes[holder].edges.contains(&ie) {
                    return Err(Error::pre("site out/in edges live on different nodes"));
                }
            }
            order.push(holder);
        }
        Ok(order)
    }

    /// Site tensors for use as a circuit MPO gate: first (out, in, bond),
    /// middle (bond, out, in, bond), last (bond, out, in); single site
    /// (out, in). Missing bonds become dimension 1.
    pub fn to_mpo_gate_sites(&self) -> Result<Vec<ComplexTensor>> {
        if self.out_edges.len() != self.in_edges.len() {
            return Err(Error::pre("MPO gate requires matching out/in edges"));
        }
        let order = self.chain_nodes()?;
        let k = order.len();
        let mut out = Vec::with_capacity(k);
        for s in 0..k {
            let node = &self.nodes[order[s]];
            let t = node.materialize();
            let oe = self.out_edges[s];
            let ie = self.in_edges[s];
            let left_bond: Option<u64> = if s == 0 {
                None
            } else {
                self.nodes[order[s - 1]]
                    .edges
                    .iter()
                    .copied()
                    .find(|e| node.edges.contains(e))
            };
            let right_bond: Option<u64> = if s + 1 == k {
                None
            } else {
                self.nodes[order[s + 1]]
                    .edges
                    .iter()
                    .copied()
                    .find(|e| node.edges.contains(e))
            };
            // target axis order: [left_bond?] out in [right_bond?]
            let mut target: Vec<u64> = Vec::new();
            if let Some(lb) = left_bond {
                target.push(lb);
            }
            target.push(oe);
            target.push(ie);
            if let Some(rb) = right_bond {
                target.push(rb);
            }
            if target.len() != node.edges.len() {
                return Err(Error::pre("site has extra edges; not an MPO chain"));
            }
            let perm: Vec<usize> = target
                .iter()
                .map(|e| node.edges.iter().position(|x| x == e).unwrap())
                .collect();
            let mut site = t.transpose(&perm)?;
            // normalize to the layout the circuit expects, inserting unit bonds
            let d_out = self.edge_dims[&oe];
            let d_in = self.edge_dims[&ie];
            let (lb, rb) = (left_bond.is_some(), right_bond.is_some());
            site = match (s == 0, s + 1 == k) {
                (true, true) => site, // (out, in)
                (true, false) => {
                    if rb {
                        site
                    } else {
                        site.reshape(vec![d_out, d_in, 1])?
                    }
                }
                (false, true) => {
                    if lb {
                        site
                    } else {
                        site.reshape(vec![1, d_out, d_in])?
                    }
                }
                (false, false) => match (lb, rb) {
                    (true, true) => site,
                    (true, false) => {
                        let bl = site.shape()[0];
                        site.reshape(vec![bl, d_out, d_in, 1])?
                    }
                    (false, true) => {
                        let br = *site.shape().last().unwrap();
                        site.reshape(vec![1, d_out, d_in, br])?
                    }
                    (false, false) => site.reshape(vec![1, d_out, d_in, 1])?,
                },
            };
            out.push(site);
        }
        Ok(out)
    }

    /// Site tensors of an MPS-shaped vector: first (phys, bond), middle
    /// (bond, phys, bond), last (bond, phys); single site (phys). Missing
    /// bonds become dimension 1.
    pub fn to_mps_sites(&self) -> Result<Vec<ComplexTensor>> {
        if !self.is_vector() {
            return Err(Error::pre("to_mps_sites requires a vector"));
        }
        let order = self.chain_nodes()?;
        let k = order.len();
        let mut out = Vec::with_capacity(k);
        for s in 0..k {
            let node = &self.nodes[order[s]];
            let t = node.materialize();
            let pe = self.out_edges[s];
            let left_bond: Option<u64> = if s == 0 {
                None
            } else {
                self.nodes[order[s - 1]]
                    .edges
                    .iter()
                    .copied()
                    .find(|e| node.edges.contains(e))
            };
            let right_bond: Option<u64> = if s + 1 == k {
                None
            } else {
                self.nodes[order[s + 1]]
                    .edges
                    .iter()
                    .copied()
                    .find(|e| node.edges.contains(e))
            };
            let mut target: Vec<u64> = Vec::new();
            if let Some(lb) = left_bond {
                target.push(lb);
            }
            target.push(pe);
            if let Some(rb) = right_bond {
                target.push(rb);
            }
            if target.len() != node.edges.len() {
                return Err(Error::pre("site has extra edges; not an MPS chain"));
            }
            let perm: Vec<usize> = target
                .iter()
                .map(|e| node.edges.iter().position(|x| x == e).unwrap())
                .collect();
            let mut site = t.transpose(&perm)?;
            let d = self.edge_dims[&pe];
            site = match (s == 0, s + 1 == k) {
                (true, true) => site, // (phys)
                (true, false) => {
                    if right_bond.is_some() {
                        site
                    } else {
                        site.reshape(vec![d, 1])?
                    }
                }
                (false, true) => {
                    if left_bond.is_some() {
                        site
                    } else {
                        site.reshape(vec![1, d])?
                    }
                }
                (false, false) => match (left_bond.is_some(), right_bond.is_some()) {
                    (true, true) => site,
                    (true, false) => {
                        let bl = site.shape()[0];
                        site.reshape(vec![bl, d, 1])?
                    }
                    (false, true) => {
                        let br = *site.shape().last().unwrap();
                        site.reshape(vec![1, d, br])?
                    }
                    (false, false) => site.reshape(vec![1, d, 1])?,
                },
            };
            out.push(site);
        }
        Ok(out)
    }
}

/// Circuit whose input state is an MPS-shaped QuVector, stored as O(n d^2)
/// site tensors.
pub fn circuit_with_mps_input(n: usize, mps: &QuVector) -> Result<crate::circuit::Circuit> {
    if mps.out_edges.len() != n {
        return Err(Error::pre("MPS site count must equal the qubit count"));
    }
    if mps.out_dims().iter().any(|&d| d != 2) {
        return Err(Error::shape("MPS physical dimensions must be 2"));
    }
    let sites = mps.to_mps_sites()?;
    crate::circuit::Circuit::with_mps_input(n, sites)
}

/// The circuit's output state as a lazy QuVector over its network.
pub fn circuit_quvector(c: &crate::circuit::Circuit) -> Result<QuVector> {
    let resolved = c.resolve()?;
    let net = crate::circuit::build_network(c, &resolved.items, crate::circuit::Closing::Open)?;
    QuOperator::from_tn_network(&net)
}

/// Partial trace of a dense state: density matrix of the qubits not in `cut`.
pub fn reduced_density_matrix(state: &[Complex64], n: usize, cut: &[usize]) -> Result<ComplexTensor> {
    if state.len() != 1 << n {
        return Err(Error::shape("state length must be 2^n"));
    }
    let cut_set: std::collections::BTreeSet<usize> = cut.iter().copied().collect();
    for &q in cut {
        if q >= n {
            return Err(Error::QubitIndex { index: q, n });
        }
    }
    if cut_set.len() >= n {
        return Err(Error::pre("cannot trace out every qubit"));
    }
    let keep: Vec<usize> = (0..n).filter(|q| !cut_set.contains(q)).collect();
    let kd = 1usize << keep.len();
    let cd = 1usize << cut_set.len();
    let cut_list: Vec<usize> = cut_set.iter().copied().collect();
    let mut rho = ComplexTensor::zeros(vec![kd, kd]);
    let index_of = |keep_bits: usize, cut_bits: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let b = (keep_bits >> (keep.len() - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        for (pos, &q) in cut_list.iter().enumerate() {
            let b = (cut_bits >> (cut_list.len() - 1 - pos)) & 1;
            idx |= b << (n - 1 - q);
        }
        idx
    };
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = Complex64::new(0.0, 0.0);
            for cbits in 0..cd {
                acc += state[index_of(i, cbits)] * state[index_of(j, cbits)].conj();
            }
            rho.data_mut()[i * kd + j] = acc;
        }
    }
    Ok(rho)
}
