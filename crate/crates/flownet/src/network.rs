//! Network topology, edge weights and boundary conditions.
//!
//! A [`Network`] is an undirected simple graph. Every edge carries a positive
//! weight `d` (the material cost per unit of root-conductance), and every
//! vertex carries one boundary tag: a prescribed pressure, a prescribed net
//! inflow, or nothing. Edges are stored with `u < v`; a positive flow on an
//! edge means fluid moving from `u` toward `v`.

use std::fmt;
use std::ops::Index;

use thiserror::Error;

/// Boundary condition attached to a vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    /// Pressure (Dirichlet) vertex with prescribed pressure.
    Pressure(f64),
    /// Flow (Neumann) vertex with prescribed net inflow into the network.
    Flow(f64),
    /// No boundary condition; mass is conserved with zero inflow.
    Free,
}

impl Boundary {
    pub fn is_pressure(&self) -> bool {
        matches!(self, Boundary::Pressure(_))
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, Boundary::Flow(_))
    }

    /// Prescribed pressure, if this is a pressure vertex.
    pub fn pressure(&self) -> Option<f64> {
        match self {
            Boundary::Pressure(p) => Some(*p),
            _ => None,
        }
    }

    /// Prescribed inflow; zero for pressure and free vertices.
    pub fn inflow(&self) -> f64 {
        match self {
            Boundary::Flow(q) => *q,
            _ => 0.0,
        }
    }
}

/// Undirected edge with canonical orientation `u < v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub d: f64,
}

impl Edge {
    /// The endpoint that is not `k`.
    pub fn other(&self, k: usize) -> usize {
        if k == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// An edge index together with a traversal direction.
///
/// `forward` means the edge is traversed from `u` to `v`. Loop and path
/// currents are expressed as sequences of oriented edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedEdge {
    pub edge: usize,
    pub forward: bool,
}

impl OrientedEdge {
    pub fn new(edge: usize, forward: bool) -> Self {
        OrientedEdge { edge, forward }
    }

    /// Traversal endpoints `(from, to)`.
    pub fn endpoints(&self, net: &Network) -> (usize, usize) {
        let e = net.edge(self.edge);
        if self.forward {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        }
    }

    /// Flow along the traversal direction.
    pub fn signed_flow(&self, flows: &[f64]) -> f64 {
        if self.forward {
            flows[self.edge]
        } else {
            -flows[self.edge]
        }
    }

    /// Sign carried by this orientation (+1 forward, -1 backward).
    pub fn sign(&self) -> f64 {
        if self.forward {
            1.0
        } else {
            -1.0
        }
    }
}

/// A structural violation found while validating network input.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between vertices {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex id {id} out of range (vertex count {count})")]
    VertexOutOfRange { id: usize, count: usize },
    #[error("edge ({u}, {v}) has non-positive weight {d}")]
    NonPositiveWeight { u: usize, v: usize, d: f64 },
    #[error("conflicting boundary tags at vertex {0}")]
    ConflictingBoundary(usize),
}

/// Outcome of validating raw network input. Valid iff no violations.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid network");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Unvalidated network input. `build` checks the structural invariants and
/// produces an immutable [`Network`].
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    vertex_count: usize,
    edges: Vec<(usize, usize, f64)>,
    tags: Vec<(usize, Boundary)>,
}

impl NetworkBuilder {
    pub fn new(vertex_count: usize) -> Self {
        NetworkBuilder {
            vertex_count,
            edges: Vec::new(),
            tags: Vec::new(),
        }
    }

    /// Add an edge with unit weight.
    pub fn edge(self, u: usize, v: usize) -> Self {
        self.weighted_edge(u, v, 1.0)
    }

    /// Add an edge with weight `d`.
    pub fn weighted_edge(mut self, u: usize, v: usize, d: f64) -> Self {
        self.edges.push((u, v, d));
        self
    }

    /// Prescribe the pressure at vertex `k`.
    pub fn pressure(mut self, k: usize, p: f64) -> Self {
        self.tags.push((k, Boundary::Pressure(p)));
        self
    }

    /// Prescribe the net inflow at vertex `k`.
    pub fn inflow(mut self, k: usize, q: f64) -> Self {
        self.tags.push((k, Boundary::Flow(q)));
        self
    }

    /// Report every structural violation in the current input.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for &(u, v, d) in &self.edges {
            if u == v {
                violations.push(Violation::SelfLoop(u));
                continue;
            }
            for id in [u, v] {
                if id >= self.vertex_count {
                    violations.push(Violation::VertexOutOfRange {
                        id,
                        count: self.vertex_count,
                    });
                }
            }
            if !(d > 0.0) || !d.is_finite() {
                violations.push(Violation::NonPositiveWeight { u, v, d });
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                violations.push(Violation::DuplicateEdge(key.0, key.1));
            }
        }
        let mut tagged = vec![false; self.vertex_count];
        for &(k, _) in &self.tags {
            if k >= self.vertex_count {
                violations.push(Violation::VertexOutOfRange {
                    id: k,
                    count: self.vertex_count,
                });
            } else if tagged[k] {
                violations.push(Violation::ConflictingBoundary(k));
            } else {
                tagged[k] = true;
            }
        }
        ValidationReport { violations }
    }

    /// Validate and construct the network.
    pub fn build(self) -> Result<Network, ValidationReport> {
        let report = self.validate();
        if !report.is_valid() {
            return Err(report);
        }
        // Edge indices keep insertion order; only the orientation is
        // canonicalized to u < v.
        let edges: Vec<Edge> = self
            .edges
            .into_iter()
            .map(|(u, v, d)| Edge {
                u: u.min(v),
                v: u.max(v),
                d,
            })
            .collect();
        let mut boundary = vec![Boundary::Free; self.vertex_count];
        for (k, tag) in self.tags {
            boundary[k] = tag;
        }
        let mut adjacency = vec![Vec::new(); self.vertex_count];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.u].push((e.v, i));
            adjacency[e.v].push((e.u, i));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(_, e)| e);
        }
        Ok(Network {
            vertex_count: self.vertex_count,
            edges,
            boundary,
            adjacency,
        })
    }
}

/// Immutable network: simple graph, positive edge weights, one boundary tag
/// per vertex. Safe to share across threads.
#[derive(Clone, Debug)]
pub struct Network {
    vertex_count: usize,
    edges: Vec<Edge>,
    boundary: Vec<Boundary>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Network {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn boundary(&self, k: usize) -> Boundary {
        self.boundary[k]
    }

    pub fn boundaries(&self) -> &[Boundary] {
        &self.boundary
    }

    /// Neighbors of `k` as `(vertex, edge index)` pairs, in edge-index order.
    pub fn neighbors(&self, k: usize) -> &[(usize, usize)] {
        &self.adjacency[k]
    }

    /// Pressure vertices with their prescribed pressures.
    pub fn pressure_vertices(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.boundary.iter().enumerate().filter_map(|(k, b)| match b {
            Boundary::Pressure(p) => Some((k, *p)),
            _ => None,
        })
    }

    /// Flow vertices with their prescribed inflows.
    pub fn flow_vertices(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.boundary.iter().enumerate().filter_map(|(k, b)| match b {
            Boundary::Flow(q) => Some((k, *q)),
            _ => None,
        })
    }

    pub fn has_flow_vertex(&self) -> bool {
        self.boundary.iter().any(|b| b.is_flow())
    }

    /// Net flow out of vertex `k` into the network, given per-edge flows in
    /// canonical orientation.
    pub fn outflow(&self, flows: &[f64], k: usize) -> f64 {
        self.adjacency[k]
            .iter()
            .map(|&(_, e)| {
                if self.edges[e].u == k {
                    flows[e]
                } else {
                    -flows[e]
                }
            })
            .sum()
    }

    /// Copy of the network with every boundary tag rewritten by `f`.
    pub(crate) fn with_boundary(&self, f: impl Fn(usize, Boundary) -> Boundary) -> Network {
        let mut net = self.clone();
        for (k, b) in net.boundary.iter_mut().enumerate() {
            *b = f(k, *b);
        }
        net
    }
}

/// Conductance assignment error.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum ConductanceError {
    #[error("expected {expected} conductances, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("conductance {value} on edge {edge} is negative or non-finite")]
    Invalid { edge: usize, value: f64 },
}

/// Non-negative conductances, one per edge, indexed like `Network::edges`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conductances {
    values: Vec<f64>,
}

impl Conductances {
    pub fn new(net: &Network, values: Vec<f64>) -> Result<Self, ConductanceError> {
        if values.len() != net.edge_count() {
            return Err(ConductanceError::LengthMismatch {
                expected: net.edge_count(),
                got: values.len(),
            });
        }
        for (edge, &value) in values.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ConductanceError::Invalid { edge, value });
            }
        }
        Ok(Conductances { values })
    }

    /// Same conductance on every edge.
    pub fn uniform(net: &Network, value: f64) -> Self {
        assert!(value >= 0.0 && value.is_finite());
        Conductances {
            values: vec![value; net.edge_count()],
        }
    }

    // Internal constructor for values already known to be valid.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| *v >= 0.0 && v.is_finite()));
        Conductances { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Every conductance multiplied by `beta`.
    pub fn scaled(&self, beta: f64) -> Self {
        assert!(beta >= 0.0 && beta.is_finite());
        Conductances {
            values: self.values.iter().map(|v| v * beta).collect(),
        }
    }
}

impl Index<usize> for Conductances {
    type Output = f64;

    fn index(&self, e: usize) -> &f64 {
        &self.values[e]
    }
}

/// Default absolute threshold below which a conductance counts as zero.
pub fn default_prune_threshold(kappa: &Conductances) -> f64 {
    1e-12 * kappa.max_value().max(1.0)
}

/// A connected component of the positive subgraph.
#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub label: usize,
    /// Member vertices in ascending order.
    pub vertices: Vec<usize>,
    /// Pressure vertices among the members.
    pub dirichlet: Vec<usize>,
    /// Total prescribed inflow over member flow vertices.
    pub net_inflow: f64,
}

/// The subgraph of edges whose conductance exceeds a threshold, together
/// with the connected-component labelling it induces. Isolated vertices form
/// singleton components.
#[derive(Clone, Debug)]
pub struct SubgraphView<'a> {
    net: &'a Network,
    active: Vec<bool>,
    active_edges: Vec<usize>,
    component_of: Vec<usize>,
    component_count: usize,
}

impl<'a> SubgraphView<'a> {
    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn is_active(&self, e: usize) -> bool {
        self.active[e]
    }

    /// Active edge indices in ascending order.
    pub fn active_edges(&self) -> &[usize] {
        &self.active_edges
    }

    /// Component label per vertex. Labels are assigned in order of the
    /// lowest vertex id of each component, so they do not depend on edge
    /// ordering.
    pub fn component_of(&self) -> &[usize] {
        &self.component_of
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    /// Active neighbors of `k` as `(vertex, edge index)` pairs.
    pub fn active_neighbors(&self, k: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.net
            .neighbors(k)
            .iter()
            .copied()
            .filter(move |&(_, e)| self.active[e])
    }

    /// Materialize the component list.
    pub fn components(&self) -> Vec<Component> {
        let mut comps: Vec<Component> = (0..self.component_count)
            .map(|label| Component {
                label,
                vertices: Vec::new(),
                dirichlet: Vec::new(),
                net_inflow: 0.0,
            })
            .collect();
        for k in 0..self.net.vertex_count() {
            let c = &mut comps[self.component_of[k]];
            c.vertices.push(k);
            match self.net.boundary(k) {
                Boundary::Pressure(_) => c.dirichlet.push(k),
                Boundary::Flow(q) => c.net_inflow += q,
                Boundary::Free => {}
            }
        }
        comps
    }
}

/// View of the edges with conductance strictly above `eps_kappa`.
pub fn positive_subgraph<'a>(
    net: &'a Network,
    kappa: &Conductances,
    eps_kappa: f64,
) -> SubgraphView<'a> {
    assert_eq!(kappa.len(), net.edge_count());
    let active: Vec<bool> = kappa.iter().map(|k| k > eps_kappa).collect();
    let active_edges: Vec<usize> = (0..net.edge_count()).filter(|&e| active[e]).collect();

    let mut component_of = vec![usize::MAX; net.vertex_count()];
    let mut component_count = 0;
    let mut queue = std::collections::VecDeque::new();
    for start in 0..net.vertex_count() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let label = component_count;
        component_count += 1;
        component_of[start] = label;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            for &(l, e) in net.neighbors(k) {
                if active[e] && component_of[l] == usize::MAX {
                    component_of[l] = label;
                    queue.push_back(l);
                }
            }
        }
    }

    SubgraphView {
        net,
        active,
        active_edges,
        component_of,
        component_count,
    }
}

/// Connected components of the view, with per-component pressure membership
/// and total prescribed inflow.
pub fn connected_components(view: &SubgraphView<'_>) -> Vec<Component> {
    view.components()
}
