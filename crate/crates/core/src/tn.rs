//! Tensor-network graph, contraction-path search and path execution.
//!
//! A [`Network`] is a set of tensor nodes joined by shared edges; every edge
//! has at most two endpoints and edges with a single endpoint are dangling.
//! Contraction quality is measured by three metrics: FLOPs (total scalar
//! multiply-adds over all pairwise contractions), WRITE (total elements of
//! all produced intermediates) and SIZE (largest produced intermediate).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::tensor::{contract_pair, ComplexTensor};
use crate::{Error, Result};

pub type EdgeId = u64;
pub type NodeId = u64;

/// A node of the network: a tensor plus one edge per axis.
#[derive(Debug, Clone)]
pub struct TensorNode {
    pub id: NodeId,
    pub tensor: ComplexTensor,
    pub edges: Vec<EdgeId>,
    /// Qubit wires this node touches, for circuit-shaped networks.
    pub wires: Option<BTreeSet<usize>>,
    /// Creation order; preprocess_absorb uses it as the circuit order.
    pub order: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Network {
    nodes: BTreeMap<NodeId, TensorNode>,
    edge_dims: BTreeMap<EdgeId, usize>,
    dangling_order: Vec<EdgeId>,
    next_node: NodeId,
    next_edge: EdgeId,
    next_order: usize,
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_edge(&mut self, dim: usize) -> EdgeId {
        let id = self.next_edge;
        self.next_edge += 1;
        self.edge_dims.insert(id, dim);
        id
    }

    pub fn edge_dim(&self, e: EdgeId) -> usize {
        self.edge_dims[&e]
    }

    pub fn add_node(
        &mut self,
        tensor: ComplexTensor,
        edges: Vec<EdgeId>,
        wires: Option<BTreeSet<usize>>,
    ) -> Result<NodeId> {
        if edges.len() != tensor.rank() {
            return Err(Error::shape("edge count must equal tensor rank"));
        }
        for (ax, &e) in edges.iter().enumerate() {
            let dim = *self
                .edge_dims
                .get(&e)
                .ok_or_else(|| Error::shape("unknown edge id"))?;
            if tensor.shape()[ax] != dim {
                return Err(Error::shape(format!(
                    "axis {ax} has dim {} but edge {} has dim {dim}",
                    tensor.shape()[ax],
                    e
                )));
            }
            // self loops are traced out before networks are built
            if edges.iter().filter(|&&x| x == e).count() > 1 {
                return Err(Error::shape(format!("edge {e} repeats on one node")));
            }
            let endpoints = self.endpoint_count(e);
            if endpoints >= 2 {
                return Err(Error::shape(format!("edge {e} already has two endpoints")));
            }
        }
        let id = self.next_node;
        self.next_node += 1;
        let order = self.next_order;
        self.next_order += 1;
        self.nodes.insert(id, TensorNode { id, tensor, edges, wires, order });
        Ok(id)
    }

    fn endpoint_count(&self, e: EdgeId) -> usize {
        self.nodes
            .values()
            .map(|n| n.edges.iter().filter(|&&x| x == e).count())
            .sum()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TensorNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&TensorNode> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Fix the axis order of the final contracted tensor.
    pub fn set_dangling(&mut self, order: Vec<EdgeId>) {
        self.dangling_order = order;
    }

    /// Dangling edges (single endpoint), in the explicit order when set,
    /// otherwise ascending by edge id.
    pub fn dangling(&self) -> Vec<EdgeId> {
        let mut count: BTreeMap<EdgeId, usize> = BTreeMap::new();
        for node in self.nodes.values() {
            for &e in &node.edges {
                *count.entry(e).or_insert(0) += 1;
            }
        }
        let is_dangling: BTreeSet<EdgeId> = count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        if !self.dangling_order.is_empty() {
            self.dangling_order
                .iter()
                .copied()
                .filter(|e| is_dangling.contains(e))
                .collect()
        } else {
            is_dangling.into_iter().collect()
        }
    }

    fn first_free_node_id(&self) -> NodeId {
        self.next_node
    }
}

/// Pairwise contraction order. Step `k` contracts two live node ids and
/// produces a node with id `base + k`, where `base` is one past the largest
/// node id of the network the path was built for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractionPath {
    pub steps: Vec<(NodeId, NodeId)>,
}

/// Cost metrics of a contraction path, in log space.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PathMetrics {
    pub log10_flops: f64,
    pub log2_size: f64,
    pub log2_write: f64,
}

/// Score to minimize during subtree reconfiguration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricName {
    Flops,
    Write,
    Size,
    /// flops + 64 * write
    Combo,
}

impl MetricName {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "flops" => Ok(MetricName::Flops),
            "write" => Ok(MetricName::Write),
            "size" => Ok(MetricName::Size),
            "combo" => Ok(MetricName::Combo),
            other => Err(Error::pre(format!("unknown metric `{other}`"))),
        }
    }
}

// ---------------------------------------------------------------------------
// greedy path search
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct LiveNode {
    edges: Vec<EdgeId>,
    size: f64,
}

fn node_size(edges: &[EdgeId], dims: &BTreeMap<EdgeId, usize>) -> f64 {
    edges.iter().map(|e| dims[e] as f64).product()
}

fn result_edges(a: &[EdgeId], b: &[EdgeId]) -> Vec<EdgeId> {
    let bset: BTreeSet<EdgeId> = b.iter().copied().collect();
    let aset: BTreeSet<EdgeId> = a.iter().copied().collect();
    let mut out: Vec<EdgeId> = a.iter().copied().filter(|e| !bset.contains(e)).collect();
    out.extend(b.iter().copied().filter(|e| !aset.contains(e)));
    out
}

/// Deterministic greedy contraction path.
///
/// At every step the pair minimizing `size(result) - size(a) - size(b)` over
/// all edge-sharing pairs is contracted, ties broken by the lowest (id, id)
/// pair. Disconnected components reduce independently and the remaining roots
/// are outer-producted in ascending id order.
pub fn greedy_path(net: &Network) -> Result<ContractionPath> {
    if net.node_count() == 0 {
        return Err(Error::pre("empty network"));
    }
    let mut live: HashMap<NodeId, LiveNode> = net
        .nodes()
        .map(|n| {
            (
                n.id,
                LiveNode { edges: n.edges.clone(), size: node_size(&n.edges, &net.edge_dims) },
            )
        })
        .collect();
    let mut next_id = net.first_free_node_id();
    let mut steps = Vec::with_capacity(live.len().saturating_sub(1));

    // edge -> live endpoints
    let mut ends: HashMap<EdgeId, Vec<NodeId>> = HashMap::new();
    for (&id, node) in &live {
        for &e in &node.edges {
            ends.entry(e).or_default().push(id);
        }
    }

    loop {
        let mut best: Option<((NodeId, NodeId), f64)> = None;
        let mut seen: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for endpoints in ends.values() {
            if endpoints.len() != 2 {
                continue;
            }
            let (a, b) = (endpoints[0].min(endpoints[1]), endpoints[0].max(endpoints[1]));
            if a == b || !seen.insert((a, b)) {
                continue;
            }
            let na = &live[&a];
            let nb = &live[&b];
            let out = result_edges(&na.edges, &nb.edges);
            let cost = node_size(&out, &net.edge_dims) - na.size - nb.size;
            let better = match &best {
                None => true,
                Some((pair, c)) => cost < *c || (cost == *c && (a, b) < *pair),
            };
            if better {
                best = Some(((a, b), cost));
            }
        }
        let Some(((a, b), _)) = best else { break };
        contract_live(&mut live, &mut ends, &net.edge_dims, a, b, next_id);
        steps.push((a, b));
        next_id += 1;
    }

    // outer products across components, ascending id order
    let mut roots: Vec<NodeId> = live.keys().copied().collect();
    roots.sort_unstable();
    while roots.len() > 1 {
        let (a, b) = (roots[0], roots[1]);
        contract_live(&mut live, &mut ends, &net.edge_dims, a, b, next_id);
        steps.push((a, b));
        roots.remove(1);
        roots[0] = next_id;
        next_id += 1;
        roots.sort_unstable();
    }
    Ok(ContractionPath { steps })
}

fn contract_live(
    live: &mut HashMap<NodeId, LiveNode>,
    ends: &mut HashMap<EdgeId, Vec<NodeId>>,
    dims: &BTreeMap<EdgeId, usize>,
    a: NodeId,
    b: NodeId,
    new_id: NodeId,
) {
    let na = live.remove(&a).expect("live node");
    let nb = live.remove(&b).expect("live node");
    let out = result_edges(&na.edges, &nb.edges);
    for &e in na.edges.iter().chain(&nb.edges) {
        if let Some(v) = ends.get_mut(&e) {
            v.retain(|&x| x != a && x != b);
        }
    }
    for &e in &out {
        ends.entry(e).or_default().push(new_id);
    }
    let size = node_size(&out, dims);
    live.insert(new_id, LiveNode { edges: out, size });
}

// ---------------------------------------------------------------------------
// metric evaluation
// ---------------------------------------------------------------------------

/// Evaluate FLOPs/WRITE/SIZE of a path without touching tensor data.
pub fn path_metrics(net: &Network, path: &ContractionPath) -> Result<PathMetrics> {
    let mut live: HashMap<NodeId, Vec<EdgeId>> =
        net.nodes().map(|n| (n.id, n.edges.clone())).collect();
    let mut next_id = net.first_free_node_id();
    let mut flops = 0.0f64;
    let mut write = 0.0f64;
    let mut size = 0.0f64;
    for &(a, b) in &path.steps {
        let ea = live
            .remove(&a)
            .ok_or_else(|| Error::pre(format!("path references dead node {a}")))?;
        let eb = live
            .remove(&b)
            .ok_or_else(|| Error::pre(format!("path references dead node {b}")))?;
        let distinct: BTreeSet<EdgeId> = ea.iter().chain(&eb).copied().collect();
        let step_flops: f64 = distinct.iter().map(|e| net.edge_dims[e] as f64).product();
        let out = result_edges(&ea, &eb);
        let out_size = node_size(&out, &net.edge_dims);
        flops += step_flops;
        write += out_size;
        size = size.max(out_size);
        live.insert(next_id, out);
        next_id += 1;
    }
    if live.len() != 1 {
        return Err(Error::pre("path does not reduce the network to one node"));
    }
    Ok(PathMetrics {
        log10_flops: flops.max(1.0).log10(),
        log2_size: size.max(1.0).log2(),
        log2_write: write.max(1.0).log2(),
    })
}

// ---------------------------------------------------------------------------
// path execution
// ---------------------------------------------------------------------------

/// Contract the network along `path`; the final tensor's axes follow the
/// network's dangling-edge order.
pub fn contract_with_path(net: &Network, path: &ContractionPath) -> Result<ComplexTensor> {
    if net.node_count() == 0 {
        return Err(Error::pre("empty network"));
    }
    let mut live: HashMap<NodeId, (ComplexTensor, Vec<EdgeId>)> = net
        .nodes()
        .map(|n| (n.id, (n.tensor.clone(), n.edges.clone())))
        .collect();
    let mut next_id = net.first_free_node_id();
    for &(a, b) in &path.steps {
        let (ta, ea) = live
            .remove(&a)
            .ok_or_else(|| Error::pre(format!("path references dead node {a}")))?;
        let (tb, eb) = live
            .remove(&b)
            .ok_or_else(|| Error::pre(format!("path references dead node {b}")))?;
        let (t, e) = contract_nodes(ta, ea, tb, eb)?;
        live.insert(next_id, (t, e));
        next_id += 1;
    }
    if live.len() != 1 {
        return Err(Error::pre("path does not reduce the network to one node"));
    }
    let (tensor, edges) = live.into_values().next().unwrap();
    let dangling = net.dangling();
    if dangling.len() != edges.len() {
        return Err(Error::shape("dangling bookkeeping mismatch"));
    }
    if dangling.is_empty() {
        return Ok(tensor);
    }
    let perm: Vec<usize> = dangling
        .iter()
        .map(|d| edges.iter().position(|e| e == d).expect("dangling edge present"))
        .collect();
    tensor.transpose(&perm)
}

pub(crate) fn contract_nodes(
    ta: ComplexTensor,
    ea: Vec<EdgeId>,
    tb: ComplexTensor,
    eb: Vec<EdgeId>,
) -> Result<(ComplexTensor, Vec<EdgeId>)> {
    let shared: Vec<EdgeId> = ea
        .iter()
        .copied()
        .filter(|e| eb.contains(e))
        .collect();
    let a_axes: Vec<usize> = shared
        .iter()
        .map(|e| ea.iter().position(|x| x == e).unwrap())
        .collect();
    let b_axes: Vec<usize> = shared
        .iter()
        .map(|e| eb.iter().position(|x| x == e).unwrap())
        .collect();
    let t = contract_pair(&ta, &a_axes, &tb, &b_axes)?;
    let mut edges: Vec<EdgeId> = ea.iter().copied().filter(|e| !shared.contains(e)).collect();
    edges.extend(eb.iter().copied().filter(|e| !shared.contains(e)));
    Ok((t, edges))
}

// ---------------------------------------------------------------------------
// preprocessing: absorb single-wire nodes
// ---------------------------------------------------------------------------

/// Contract every node touching exactly one qubit wire into an adjacent node,
/// preferring a multi-wire host later in circuit order, then an earlier one.
/// Nodes without wire annotations are left untouched (they still act as hosts).
pub fn preprocess_absorb(net: &Network) -> Network {
    let mut out = net.clone();
    loop {
        // lowest-order single-wire node that still has a neighbor
        let candidate = out
            .nodes
            .values()
            .filter(|n| n.wires.as_ref().map(|w| w.len()) == Some(1))
            .filter(|n| !neighbors(&out, n.id).is_empty())
            .min_by_key(|n| n.order)
            .map(|n| n.id);
        let Some(node_id) = candidate else { break };

        let node_order = out.nodes[&node_id].order;
        let nbrs = neighbors(&out, node_id);
        let multi: Vec<NodeId> = nbrs
            .iter()
            .copied()
            .filter(|id| {
                out.nodes[id]
                    .wires
                    .as_ref()
                    .map(|w| w.len() >= 2)
                    .unwrap_or(true)
            })
            .collect();
        let pool = if multi.is_empty() { nbrs.clone() } else { multi };
        let later = pool
            .iter()
            .copied()
            .filter(|id| out.nodes[id].order > node_order)
            .min_by_key(|id| out.nodes[id].order);
        let host = later.unwrap_or_else(|| {
            pool.iter()
                .copied()
                .max_by_key(|id| out.nodes[id].order)
                .expect("non-empty host pool")
        });
        absorb_into(&mut out, node_id, host);
    }
    out
}

fn neighbors(net: &Network, id: NodeId) -> Vec<NodeId> {
    let node = &net.nodes[&id];
    let mut out: BTreeSet<NodeId> = BTreeSet::new();
    for other in net.nodes.values() {
        if other.id == id {
            continue;
        }
        if other.edges.iter().any(|e| node.edges.contains(e)) {
            out.insert(other.id);
        }
    }
    out.into_iter().collect()
}

fn absorb_into(net: &mut Network, node_id: NodeId, host_id: NodeId) {
    let node = net.nodes.remove(&node_id).expect("node");
    let host = net.nodes.remove(&host_id).expect("host");
    let (tensor, edges) =
        contract_nodes(host.tensor, host.edges, node.tensor, node.edges).expect("absorb contract");
    let wires = match (host.wires, node.wires) {
        (Some(a), Some(b)) => Some(a.union(&b).copied().collect()),
        (a, None) | (None, a) => a,
    };
    net.nodes.insert(
        host_id,
        TensorNode { id: host_id, tensor, edges, wires, order: host.order },
    );
}

// ---------------------------------------------------------------------------
// subtree reconfiguration
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum Tree {
    Leaf(NodeId),
    Internal(Box<Tree>, Box<Tree>),
}

impl Tree {
    fn leaves(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Internal(l, r) => l.leaves() + r.leaves(),
        }
    }
}

fn path_to_tree(net: &Network, path: &ContractionPath) -> Result<Tree> {
    let mut live: HashMap<NodeId, Tree> =
        net.nodes().map(|n| (n.id, Tree::Leaf(n.id))).collect();
    let mut next_id = net.first_free_node_id();
    for &(a, b) in &path.steps {
        let ta = live
            .remove(&a)
            .ok_or_else(|| Error::pre(format!("path references dead node {a}")))?;
        let tb = live
            .remove(&b)
            .ok_or_else(|| Error::pre(format!("path references dead node {b}")))?;
        live.insert(next_id, Tree::Internal(Box::new(ta), Box::new(tb)));
        next_id += 1;
    }
    if live.len() != 1 {
        return Err(Error::pre("path does not reduce the network to one node"));
    }
    Ok(live.into_values().next().unwrap())
}

fn tree_to_path(net: &Network, tree: &Tree) -> ContractionPath {
    fn emit(tree: &Tree, steps: &mut Vec<(NodeId, NodeId)>, next_id: &mut NodeId) -> NodeId {
        match tree {
            Tree::Leaf(id) => *id,
            Tree::Internal(l, r) => {
                let a = emit(l, steps, next_id);
                let b = emit(r, steps, next_id);
                let id = *next_id;
                *next_id += 1;
                steps.push((a, b));
                id
            }
        }
    }
    let mut steps = Vec::new();
    let mut next_id = net.first_free_node_id();
    emit(tree, &mut steps, &mut next_id);
    ContractionPath { steps }
}

/// Edge list of a tree node's contraction result.
fn tree_edges(tree: &Tree, net: &Network) -> Vec<EdgeId> {
    match tree {
        Tree::Leaf(id) => net.nodes[id].edges.clone(),
        Tree::Internal(l, r) => result_edges(&tree_edges(l, net), &tree_edges(r, net)),
    }
}

struct SubtreeCost {
    flops: f64,
    write: f64,
    size: f64,
}

impl SubtreeCost {
    fn zero() -> Self {
        SubtreeCost { flops: 0.0, write: 0.0, size: 0.0 }
    }
    fn score(&self, metric: MetricName) -> f64 {
        match metric {
            MetricName::Flops => self.flops,
            MetricName::Write => self.write,
            MetricName::Size => self.size,
            MetricName::Combo => self.flops + 64.0 * self.write,
        }
    }
}

/// Exhaustive-optimal reordering of small subtrees of the contraction tree.
///
/// For `rounds` passes, every internal node's subtree is re-cut into at most
/// `subtree_size` leaf groups and replaced by the subset-DP-optimal local
/// contraction order under `minimize`. The chosen metric never increases.
pub fn subtree_reconfigure(
    net: &Network,
    path: &ContractionPath,
    subtree_size: usize,
    rounds: usize,
    minimize: MetricName,
) -> Result<ContractionPath> {
    subtree_reconfigure_with_deadline(net, path, subtree_size, rounds, minimize, None)
}

/// Same as [`subtree_reconfigure`] but stops early once `deadline` has passed.
pub fn subtree_reconfigure_with_deadline(
    net: &Network,
    path: &ContractionPath,
    subtree_size: usize,
    rounds: usize,
    minimize: MetricName,
    deadline: Option<std::time::Instant>,
) -> Result<ContractionPath> {
    if !(3..=10).contains(&subtree_size) {
        return Err(Error::pre("subtree_size must lie in [3, 10]"));
    }
    if rounds == 0 {
        return Ok(path.clone());
    }
    let mut tree = path_to_tree(net, path)?;
    for _ in 0..rounds {
        let mut changed = false;
        optimize_node(&mut tree, net, subtree_size, minimize, &mut changed, deadline);
        if !changed {
            break;
        }
        if let Some(d) = deadline {
            if std::time::Instant::now() >= d {
                break;
            }
        }
    }
    Ok(tree_to_path(net, &tree))
}

fn optimize_node(
    tree: &mut Tree,
    net: &Network,
    subtree_size: usize,
    minimize: MetricName,
    changed: &mut bool,
    deadline: Option<std::time::Instant>,
) {
    if let Some(d) = deadline {
        if std::time::Instant::now() >= d {
            return;
        }
    }
    if let Tree::Internal(l, r) = tree {
        optimize_node(l, net, subtree_size, minimize, changed, deadline);
        optimize_node(r, net, subtree_size, minimize, changed, deadline);
    } else {
        return;
    }
    // Cut this subtree into at most `subtree_size` frontier groups, keeping
    // the original local structure as a skeleton over group slots so the cut
    // can be stitched back verbatim when the DP finds nothing better.
    let root = std::mem::replace(tree, Tree::Leaf(0));
    let mut frontier: Vec<Tree> = vec![root];
    let mut skeleton = OrderTree::Leaf(0);
    while frontier.len() < subtree_size {
        let mut pick: Option<(usize, usize)> = None; // (slot, leaf count)
        for (i, t) in frontier.iter().enumerate() {
            if matches!(t, Tree::Internal(_, _)) {
                let leaves = t.leaves();
                if pick.map(|(_, best)| leaves > best).unwrap_or(true) {
                    pick = Some((i, leaves));
                }
            }
        }
        let Some((slot, _)) = pick else { break };
        let Tree::Internal(l, r) = std::mem::replace(&mut frontier[slot], Tree::Leaf(0)) else {
            unreachable!()
        };
        frontier[slot] = *l;
        let new_slot = frontier.len();
        frontier.push(*r);
        skeleton = skeleton_expand(skeleton, slot, new_slot);
    }
    let restore = |frontier: Vec<Tree>, order: &OrderTree| -> Tree {
        let mut slots: Vec<Option<Tree>> = frontier.into_iter().map(Some).collect();
        instantiate(order, &mut slots)
    };
    if frontier.len() < 3 {
        *tree = restore(frontier, &skeleton);
        return;
    }
    let group_edges: Vec<Vec<EdgeId>> = frontier.iter().map(|t| tree_edges(t, net)).collect();
    if let Some(order_tree) = optimal_order(&group_edges, net, minimize) {
        // compare with identical arithmetic so the metric can never increase
        let current = cost_over_groups(&skeleton, &group_edges, net);
        let candidate = cost_over_groups(&order_tree, &group_edges, net);
        if candidate.score(minimize) < current.score(minimize) {
            *tree = restore(frontier, &order_tree);
            *changed = true;
            return;
        }
    }
    *tree = restore(frontier, &skeleton);
}

/// Record an expansion of `slot` into (slot, new_slot) in the skeleton.
fn skeleton_expand(sk: OrderTree, slot: usize, new_slot: usize) -> OrderTree {
    match sk {
        OrderTree::Leaf(i) if i == slot => OrderTree::Internal(
            Box::new(OrderTree::Leaf(slot)),
            Box::new(OrderTree::Leaf(new_slot)),
        ),
        OrderTree::Leaf(i) => OrderTree::Leaf(i),
        OrderTree::Internal(l, r) => OrderTree::Internal(
            Box::new(skeleton_expand(*l, slot, new_slot)),
            Box::new(skeleton_expand(*r, slot, new_slot)),
        ),
    }
}

fn cost_over_groups(order: &OrderTree, group_edges: &[Vec<EdgeId>], net: &Network) -> SubtreeCost {
    fn walk(
        order: &OrderTree,
        group_edges: &[Vec<EdgeId>],
        net: &Network,
        cost: &mut SubtreeCost,
    ) -> Vec<EdgeId> {
        match order {
            OrderTree::Leaf(i) => group_edges[*i].clone(),
            OrderTree::Internal(l, r) => {
                let ea = walk(l, group_edges, net, cost);
                let eb = walk(r, group_edges, net, cost);
                let distinct: BTreeSet<EdgeId> = ea.iter().chain(&eb).copied().collect();
                let step_flops: f64 =
                    distinct.iter().map(|e| net.edge_dims[e] as f64).product();
                let out = result_edges(&ea, &eb);
                let out_size = node_size(&out, &net.edge_dims);
                cost.flops += step_flops;
                cost.write += out_size;
                cost.size = cost.size.max(out_size);
                out
            }
        }
    }
    let mut cost = SubtreeCost::zero();
    walk(order, group_edges, net, &mut cost);
    cost
}

/// Binary contraction order over group indices, found by DP over subsets.
enum OrderTree {
    Leaf(usize),
    Internal(Box<OrderTree>, Box<OrderTree>),
}

fn instantiate(order: &OrderTree, groups: &mut Vec<Option<Tree>>) -> Tree {
    match order {
        OrderTree::Leaf(i) => groups[*i].take().expect("group used once"),
        OrderTree::Internal(l, r) => Tree::Internal(
            Box::new(instantiate(l, groups)),
            Box::new(instantiate(r, groups)),
        ),
    }
}

fn optimal_order(
    group_edges: &[Vec<EdgeId>],
    net: &Network,
    minimize: MetricName,
) -> Option<OrderTree> {
    let m = group_edges.len();
    if m < 2 || m > 16 {
        return None;
    }
    // edge -> (mask of groups containing it, dim)
    let mut edge_info: BTreeMap<EdgeId, (u32, f64)> = BTreeMap::new();
    for (g, edges) in group_edges.iter().enumerate() {
        for &e in edges {
            let entry = edge_info
                .entry(e)
                .or_insert((0, net.edge_dims[&e] as f64));
            entry.0 |= 1 << g;
        }
    }
    let edges: Vec<(u32, f64)> = edge_info.values().copied().collect();
    let full: u32 = (1 << m) - 1;
    // boundary size of each subset: product over edges with exactly one endpoint inside
    let mut bsize = vec![1.0f64; (full + 1) as usize];
    for s in 1..=full {
        let mut prod = 1.0;
        for &(mask, dim) in &edges {
            if (mask & s).count_ones() == 1 {
                prod *= dim;
            }
        }
        bsize[s as usize] = prod;
    }

    #[derive(Clone)]
    struct Cell {
        flops: f64,
        write: f64,
        size: f64,
        split: u32, // 0 for singletons
    }
    let mut dp: Vec<Option<Cell>> = vec![None; (full + 1) as usize];
    for g in 0..m {
        dp[1usize << g] = Some(Cell { flops: 0.0, write: 0.0, size: 0.0, split: 0 });
    }
    let mut subsets: Vec<u32> = (1..=full).collect();
    subsets.sort_by_key(|s| s.count_ones());
    for &s in &subsets {
        if s.count_ones() < 2 {
            continue;
        }
        let mut best: Option<Cell> = None;
        // iterate proper sub-masks; visit each unordered split once
        let mut t = (s - 1) & s;
        while t > 0 {
            let u = s & !t;
            if t < u {
                t = (t - 1) & s;
                continue;
            }
            if let (Some(ct), Some(cu)) = (&dp[t as usize], &dp[u as usize]) {
                // flops of the merging step: sqrt(size(S) * size(T) * size(U))
                let step_flops =
                    (bsize[s as usize] * bsize[t as usize] * bsize[u as usize]).sqrt();
                let out_size = bsize[s as usize];
                let cand = Cell {
                    flops: ct.flops + cu.flops + step_flops,
                    write: ct.write + cu.write + out_size,
                    size: ct.size.max(cu.size).max(out_size),
                    split: t,
                };
                let cand_score = score_cell(&cand, minimize);
                let better = match &best {
                    None => true,
                    Some(b) => cand_score < score_cell(b, minimize),
                };
                if better {
                    best = Some(cand);
                }
            }
            t = (t - 1) & s;
        }
        dp[s as usize] = best;
    }
    dp[full as usize].as_ref()?;

    fn build(dp: &[Option<Cell>], s: u32) -> OrderTree {
        let cell = dp[s as usize].as_ref().expect("dp cell");
        if cell.split == 0 {
            OrderTree::Leaf(s.trailing_zeros() as usize)
        } else {
            let t = cell.split;
            let u = s & !t;
            OrderTree::Internal(Box::new(build(dp, t)), Box::new(build(dp, u)))
        }
    }
    fn score_cell(c: &Cell, metric: MetricName) -> f64 {
        match metric {
            MetricName::Flops => c.flops,
            MetricName::Write => c.write,
            MetricName::Size => c.size,
            MetricName::Combo => c.flops + 64.0 * c.write,
        }
    }
    Some(build(&dp, full))
}
