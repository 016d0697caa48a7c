//! Assembly and direct solution of the Kirchhoff pressure system.
//!
//! For conductances `kappa` the pressures satisfy, per vertex `k`,
//!
//! ```text
//! sum_l (p_k - p_l) kappa_kl = 0      k free
//! p_k = pbar_k                        k pressure
//! sum_l (p_k - p_l) kappa_kl = q_k    k flow
//! ```
//!
//! Components of the positive subgraph that contain a pressure vertex have a
//! unique solution. Components without one are solvable only when their net
//! prescribed inflow vanishes; the pressure there is determined up to an
//! additive constant and is pinned by setting the lowest-index vertex to
//! zero. Components with unbalanced inflow and no pressure vertex admit no
//! solution at all, which is reported before any factorization happens.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::{
    connected_components, positive_subgraph, Boundary, Conductances, Network,
};

/// Whether solved pressures are unique or only unique up to a constant on
/// some component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    Unique,
    UpToConstant,
}

/// Pressures and flows solving the Kirchhoff system.
///
/// Flows follow the canonical edge orientation: `flows[e] > 0` means flow
/// from `u` toward `v` for edge `e = (u, v)`. Edges with zero conductance
/// carry exactly zero flow.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub pressures: Vec<f64>,
    pub flows: Vec<f64>,
    pub gauge: Gauge,
}

impl FlowState {
    /// Largest normalized conservation residual over free and flow vertices.
    ///
    /// The residual at a free vertex is `|sum_l Q_kl|`, at a flow vertex
    /// `|sum_l Q_kl - q_k|`, normalized by `max(1, |q|, max |Q|)`.
    pub fn conservation_residual(&self, net: &Network) -> f64 {
        let scale = self
            .flows
            .iter()
            .map(|q| q.abs())
            .chain(net.flow_vertices().map(|(_, q)| q.abs()))
            .fold(1.0_f64, f64::max);
        let mut worst = 0.0_f64;
        for k in 0..net.vertex_count() {
            let r = match net.boundary(k) {
                Boundary::Pressure(_) => continue,
                Boundary::Flow(q) => net.outflow(&self.flows, k) - q,
                Boundary::Free => net.outflow(&self.flows, k),
            };
            worst = worst.max(r.abs() / scale);
        }
        worst
    }
}

/// Dense Kirchhoff system `D p = b`.
///
/// Rows of pressure vertices are unit rows with the prescribed pressure on
/// the right-hand side; all other rows carry the weighted-Laplacian stencil
/// with the prescribed inflow (or zero) on the right.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolverError {
    /// A component of the positive subgraph has no pressure vertex but a
    /// nonzero net prescribed inflow; no pressure solution exists.
    #[error(
        "no pressure solution: component {{{}}} has net inflow {net_inflow:e} and no pressure vertex",
        format_vertices(.vertices)
    )]
    UnbalancedInflow {
        vertices: Vec<usize>,
        net_inflow: f64,
    },
    /// The assembled system was numerically rank-deficient for reasons not
    /// explained by the gauge freedom.
    #[error("Kirchhoff system is numerically singular")]
    SingularSystem,
}

fn format_vertices(vertices: &[usize]) -> String {
    vertices
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Assemble the raw Kirchhoff system for the given conductances.
///
/// Zero-conductance edges are excluded, so a free vertex whose incident
/// conductances all vanish produces an all-zero row; `solve_kirchhoff` deals
/// with those topologically before factorizing.
pub fn assemble_system(net: &Network, kappa: &Conductances) -> LinearSystem {
    assert_eq!(kappa.len(), net.edge_count());
    let n = net.vertex_count();
    let mut matrix = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for k in 0..n {
        match net.boundary(k) {
            Boundary::Pressure(p) => {
                matrix[(k, k)] = 1.0;
                rhs[k] = p;
            }
            other => {
                for &(l, e) in net.neighbors(k) {
                    let c = kappa[e];
                    if c > 0.0 {
                        matrix[(k, k)] += c;
                        matrix[(k, l)] -= c;
                    }
                }
                rhs[k] = other.inflow();
            }
        }
    }
    LinearSystem { matrix, rhs }
}

// Relative tolerance for deciding that a pressure-free component has
// balanced inflow.
const BALANCE_REL_TOL: f64 = 1e-12;

/// Solve the Kirchhoff system for the given conductances.
///
/// Pressure-free components with balanced inflow are pinned at their
/// lowest-index vertex and flagged with [`Gauge::UpToConstant`]; the flows
/// are unique regardless. Unbalanced pressure-free components are rejected
/// as [`SolverError::UnbalancedInflow`].
pub fn solve_kirchhoff(net: &Network, kappa: &Conductances) -> Result<FlowState, SolverError> {
    let view = positive_subgraph(net, kappa, 0.0);
    let mut gauge = Gauge::Unique;
    let mut pinned = Vec::new();
    for comp in connected_components(&view) {
        if comp.dirichlet.is_empty() {
            let inflow_scale: f64 = comp
                .vertices
                .iter()
                .map(|&k| net.boundary(k).inflow().abs())
                .sum::<f64>()
                .max(1.0);
            if comp.net_inflow.abs() > BALANCE_REL_TOL * inflow_scale {
                return Err(SolverError::UnbalancedInflow {
                    vertices: comp.vertices,
                    net_inflow: comp.net_inflow,
                });
            }
            pinned.push(comp.vertices[0]);
            gauge = Gauge::UpToConstant;
        }
    }

    let LinearSystem { mut matrix, mut rhs } = assemble_system(net, kappa);
    for &k in &pinned {
        for l in 0..net.vertex_count() {
            matrix[(k, l)] = 0.0;
        }
        matrix[(k, k)] = 1.0;
        rhs[k] = 0.0;
    }

    let lu = matrix.lu();
    let pressures = lu.solve(&rhs).ok_or(SolverError::SingularSystem)?;
    if pressures.iter().any(|p| !p.is_finite()) {
        return Err(SolverError::SingularSystem);
    }

    let flows = net
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let c = kappa[e];
            if c > 0.0 {
                (pressures[edge.u] - pressures[edge.v]) * c
            } else {
                0.0
            }
        })
        .collect();

    Ok(FlowState {
        pressures: pressures.data.into(),
        flows,
        gauge,
    })
}

/// Split the solution by boundary-condition superposition.
///
/// The first state solves the network with every prescribed pressure set to
/// zero (flow data kept), the second with every prescribed inflow set to
/// zero (pressure data kept). Edgewise, the two flow fields sum to the flows
/// of `solve_kirchhoff`.
pub fn decompose_flow(
    net: &Network,
    kappa: &Conductances,
) -> Result<(FlowState, FlowState), SolverError> {
    let flow_part = net.with_boundary(|_, b| match b {
        Boundary::Pressure(_) => Boundary::Pressure(0.0),
        other => other,
    });
    let pressure_part = net.with_boundary(|_, b| match b {
        Boundary::Flow(_) => Boundary::Flow(0.0),
        other => other,
    });
    let f = solve_kirchhoff(&flow_part, kappa)?;
    let p = solve_kirchhoff(&pressure_part, kappa)?;
    Ok((f, p))
}
