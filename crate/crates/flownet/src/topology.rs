//! Structural certificates for optimized networks: acyclicity, connections
//! between equal-pressure vertices, and conformance of the conductances to
//! the cube-root flow scaling law.

use std::collections::BTreeMap;

use crate::network::{Conductances, Network, OrientedEdge, SubgraphView};

/// Relative tolerance for treating two prescribed pressures as equal.
pub const PRESSURE_EQ_REL_TOL: f64 = 1e-12;

/// Whether two prescribed pressures count as equal.
pub fn pressures_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= PRESSURE_EQ_REL_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Certificates describing the active subgraph of an optimized network.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologyReport {
    pub is_forest: bool,
    /// Edge indices of a simple cycle, when one exists.
    pub loop_witness: Option<Vec<usize>>,
    /// An equal-pressure vertex pair joined by a path of active edges,
    /// with the path's edge indices.
    pub equal_pressure_path_witness: Option<((usize, usize), Vec<usize>)>,
    pub murray_residual: f64,
    /// Fitted proportionality constant of the conductance-flow law.
    pub murray_coefficient: f64,
    /// Component label of every pressure vertex.
    pub dirichlet_components: BTreeMap<usize, usize>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when both were already in the same set.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Shortest path between two vertices over active edges passing `allowed`,
/// as oriented edges from `from` to `to`.
fn bfs_path(
    view: &SubgraphView<'_>,
    from: usize,
    to: usize,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<OrientedEdge>> {
    let net = view.network();
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; net.vertex_count()];
    let mut seen = vec![false; net.vertex_count()];
    let mut queue = std::collections::VecDeque::new();
    seen[from] = true;
    queue.push_back(from);
    while let Some(k) = queue.pop_front() {
        if k == to {
            break;
        }
        for (l, e) in view.active_neighbors(k) {
            if allowed(e) && !seen[l] {
                seen[l] = true;
                prev[l] = Some((k, e));
                queue.push_back(l);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut walk = Vec::new();
    let mut k = to;
    while let Some((p, e)) = prev[k] {
        walk.push(OrientedEdge::new(e, net.edge(e).u == p));
        k = p;
    }
    walk.reverse();
    Some(walk)
}

/// Acyclicity of the active subgraph. Returns a simple cycle witness (edge
/// indices) when a cycle exists.
pub fn is_forest(view: &SubgraphView<'_>) -> (bool, Option<Vec<usize>>) {
    let net = view.network();
    let mut uf = UnionFind::new(net.vertex_count());
    for &e in view.active_edges() {
        let edge = net.edge(e);
        if !uf.union(edge.u, edge.v) {
            // The earlier edges already connect the two endpoints.
            let path = bfs_path(view, edge.v, edge.u, |f| f < e)
                .expect("cycle-closing edge endpoints must already be connected");
            let mut cycle = vec![e];
            cycle.extend(path.iter().map(|oe| oe.edge));
            return (false, Some(cycle));
        }
    }
    (true, None)
}

/// Find a pair of pressure vertices with equal prescribed pressure joined by
/// a path of active edges. Pairs are scanned in lexicographic order; the
/// path returned is a shortest one.
pub fn equal_pressure_connection(
    net: &Network,
    view: &SubgraphView<'_>,
) -> Option<((usize, usize), Vec<usize>)> {
    let dirichlet: Vec<(usize, f64)> = net.pressure_vertices().collect();
    for (i, &(ki, pi)) in dirichlet.iter().enumerate() {
        for &(kj, pj) in &dirichlet[i + 1..] {
            if !pressures_equal(pi, pj) {
                continue;
            }
            if view.component_of()[ki] != view.component_of()[kj] {
                continue;
            }
            let path = bfs_path(view, ki, kj, |_| true)
                .expect("same component implies a connecting path");
            return Some(((ki, kj), path.iter().map(|oe| oe.edge).collect()));
        }
    }
    None
}

/// Fit the conductance-flow law `kappa = a |Q|^(4/3) d^(-2/3)` and report
/// the worst relative deviation.
///
/// Edges with zero flow must carry zero conductance to conform; otherwise
/// the residual is 1. A network with no flow at all conforms trivially with
/// coefficient zero.
pub fn murray_residual(net: &Network, kappa: &Conductances, flows: &[f64]) -> (f64, f64) {
    assert_eq!(flows.len(), net.edge_count());
    let flow_scale = flows.iter().map(|q| q.abs()).fold(0.0_f64, f64::max);
    if flow_scale == 0.0 {
        return (0.0, 0.0);
    }
    let flow_tol = 1e-12 * flow_scale.max(1.0);
    let kappa_scale = kappa.max_value();
    let kappa_tol = 1e-12 * kappa_scale.max(1.0);

    let mut sum_kw = 0.0;
    let mut sum_ww = 0.0;
    let mut fit_edges = Vec::new();
    let mut dead_edge_with_material = false;
    for (e, edge) in net.edges().iter().enumerate() {
        let q = flows[e].abs();
        if q > flow_tol {
            let w = q.powf(4.0 / 3.0) / edge.d.powf(2.0 / 3.0);
            sum_kw += kappa[e] * w;
            sum_ww += w * w;
            fit_edges.push((e, w));
        } else if kappa[e] > kappa_tol {
            dead_edge_with_material = true;
        }
    }
    let coefficient = if sum_ww > 0.0 { sum_kw / sum_ww } else { 0.0 };
    if dead_edge_with_material || kappa_scale == 0.0 {
        return (1.0, coefficient);
    }
    let residual = fit_edges
        .iter()
        .map(|&(e, w)| (kappa[e] - coefficient * w).abs())
        .fold(0.0_f64, f64::max)
        / kappa_scale;
    (residual, coefficient)
}

/// Fundamental cycles of the active subgraph with respect to its BFS
/// spanning forest, each as an oriented closed walk starting with the
/// non-tree edge. Ordered by non-tree edge index.
pub fn fundamental_cycles(view: &SubgraphView<'_>) -> Vec<Vec<OrientedEdge>> {
    let net = view.network();
    let mut uf = UnionFind::new(net.vertex_count());
    let mut tree = vec![false; net.edge_count()];
    let mut cotree = Vec::new();
    for &e in view.active_edges() {
        let edge = net.edge(e);
        if uf.union(edge.u, edge.v) {
            tree[e] = true;
        } else {
            cotree.push(e);
        }
    }
    cotree
        .into_iter()
        .map(|e| {
            let edge = net.edge(e);
            let mut cycle = vec![OrientedEdge::new(e, true)];
            let back = bfs_path(view, edge.v, edge.u, |f| tree[f])
                .expect("tree connects the endpoints of every non-tree edge");
            cycle.extend(back);
            cycle
        })
        .collect()
}

/// Full certificate report for one `(kappa, flows)` state, using `eps_kappa`
/// as the active-edge threshold.
pub fn analyze(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    eps_kappa: f64,
) -> TopologyReport {
    let view = crate::network::positive_subgraph(net, kappa, eps_kappa);
    let (forest, loop_witness) = is_forest(&view);
    let equal_pressure_path_witness = equal_pressure_connection(net, &view);
    let (murray_residual, murray_coefficient) = murray_residual(net, kappa, flows);
    let dirichlet_components = net
        .pressure_vertices()
        .map(|(k, _)| (k, view.component_of()[k]))
        .collect();
    TopologyReport {
        is_forest: forest,
        loop_witness,
        equal_pressure_path_witness,
        murray_residual,
        murray_coefficient,
        dirichlet_components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{positive_subgraph, NetworkBuilder};

    fn square() -> Network {
        NetworkBuilder::new(4)
            .edge(0, 1)
            .edge(1, 2)
            .edge(2, 3)
            .edge(0, 3)
            .build()
            .unwrap()
    }

    #[test]
    fn full_square_is_a_cycle() {
        let net = square();
        let kappa = Conductances::uniform(&net, 1.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        let (forest, witness) = is_forest(&view);
        assert!(!forest);
        let mut cycle = witness.unwrap();
        cycle.sort_unstable();
        assert_eq!(cycle, vec![0, 1, 2, 3]);
    }

    #[test]
    fn cut_square_is_a_forest() {
        let net = square();
        let kappa = Conductances::new(&net, vec![1.0, 1.0, 1.0, 0.0]).unwrap();
        let view = positive_subgraph(&net, &kappa, 0.0);
        let (forest, witness) = is_forest(&view);
        assert!(forest);
        assert!(witness.is_none());
    }

    #[test]
    fn empty_subgraph_is_a_forest() {
        let net = square();
        let kappa = Conductances::uniform(&net, 0.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        assert!(is_forest(&view).0);
    }

    #[test]
    fn equal_pressure_pair_through_a_free_vertex() {
        let net = NetworkBuilder::new(3)
            .edge(0, 2)
            .edge(1, 2)
            .pressure(0, 0.0)
            .pressure(1, 0.0)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        let ((a, b), path) = equal_pressure_connection(&net, &view).unwrap();
        assert_eq!((a, b), (0, 1));
        assert_eq!(path, vec![0, 1]);
    }

    #[test]
    fn unequal_pressures_are_not_a_witness() {
        let net = NetworkBuilder::new(3)
            .edge(0, 2)
            .edge(1, 2)
            .pressure(0, 0.0)
            .pressure(1, 1.0)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        assert!(equal_pressure_connection(&net, &view).is_none());
    }

    #[test]
    fn disconnected_equal_pair_is_not_a_witness() {
        let net = NetworkBuilder::new(3)
            .edge(0, 2)
            .edge(1, 2)
            .pressure(0, 0.0)
            .pressure(1, 0.0)
            .build()
            .unwrap();
        let kappa = Conductances::new(&net, vec![1.0, 0.0]).unwrap();
        let view = positive_subgraph(&net, &kappa, 0.0);
        assert!(equal_pressure_connection(&net, &view).is_none());
    }

    #[test]
    fn conformant_conductances_have_tiny_residual() {
        let net = square();
        let flows = vec![1.0, -2.0, 0.5, 0.0];
        let a = 0.7;
        let kappa = Conductances::new(
            &net,
            flows
                .iter()
                .map(|q: &f64| a * q.abs().powf(4.0 / 3.0))
                .collect(),
        )
        .unwrap();
        let (residual, fitted) = murray_residual(&net, &kappa, &flows);
        assert!(residual <= 1e-12, "residual {residual}");
        assert!((fitted - a).abs() <= 1e-12);
    }

    #[test]
    fn uniform_flows_and_conductances_fit_exactly() {
        let net = square();
        let kappa = Conductances::uniform(&net, 0.25);
        let flows = vec![0.25, -0.25, 0.25, -0.25];
        let (residual, _) = murray_residual(&net, &kappa, &flows);
        assert!(residual <= 1e-12);
    }

    #[test]
    fn mismatched_conductances_have_large_residual() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![1.0, 2.0];
        let (residual, _) = murray_residual(&net, &kappa, &flows);
        assert!(residual > 0.1, "residual {residual}");
    }

    #[test]
    fn material_on_a_dead_edge_is_nonconformant() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![1.0, 0.0];
        let (residual, _) = murray_residual(&net, &kappa, &flows);
        assert_eq!(residual, 1.0);
    }

    #[test]
    fn no_flow_conforms_with_zero_coefficient() {
        let net = square();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![0.0; 4];
        assert_eq!(murray_residual(&net, &kappa, &flows), (0.0, 0.0));
    }

    #[test]
    fn residual_is_invariant_under_edge_relabeling() {
        let build = |order: &[(usize, usize)]| {
            let mut b = NetworkBuilder::new(4);
            for &(u, v) in order {
                b = b.edge(u, v);
            }
            b.build().unwrap()
        };
        let net_a = build(&[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let net_b = build(&[(2, 3), (0, 3), (0, 1), (1, 2)]);
        let kappa_a = Conductances::new(&net_a, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let kappa_b = Conductances::new(&net_b, vec![3.0, 4.0, 1.0, 2.0]).unwrap();
        let flows_a = vec![0.5, -1.0, 1.5, 2.0];
        let flows_b = vec![1.5, 2.0, 0.5, -1.0];
        let (ra, ca) = murray_residual(&net_a, &kappa_a, &flows_a);
        let (rb, cb) = murray_residual(&net_b, &kappa_b, &flows_b);
        assert_eq!(ra, rb);
        assert_eq!(ca, cb);
    }

    #[test]
    fn fundamental_cycles_of_the_square() {
        let net = square();
        let kappa = Conductances::uniform(&net, 1.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        let cycles = fundamental_cycles(&view);
        assert_eq!(cycles.len(), 1);
        let cycle = &cycles[0];
        assert_eq!(cycle.len(), 4);
        // The walk is closed: each oriented edge starts where the previous
        // one ended.
        for i in 0..cycle.len() {
            let (_, to) = cycle[i].endpoints(&net);
            let (from, _) = cycle[(i + 1) % cycle.len()].endpoints(&net);
            assert_eq!(to, from);
        }
    }

    #[test]
    fn grid_has_independent_cycle_count() {
        // 3x3 grid: 9 vertices, 12 edges, 4 independent cycles.
        let mut b = NetworkBuilder::new(9);
        for r in 0..3 {
            for c in 0..3 {
                let k = 3 * r + c;
                if c + 1 < 3 {
                    b = b.edge(k, k + 1);
                }
                if r + 1 < 3 {
                    b = b.edge(k, k + 3);
                }
            }
        }
        let net = b.build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let view = positive_subgraph(&net, &kappa, 0.0);
        assert_eq!(fundamental_cycles(&view).len(), 4);
    }
}
