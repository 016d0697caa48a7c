//! The scalar functionals: dissipation, pressure work, complementary
//! dissipation, material cost and the penalized objective.

use thiserror::Error;

use crate::network::{Conductances, Network};

/// Which functional an optimization targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    Dissipation,
    Complementary,
}

impl Objective {
    /// Evaluate this objective for the given flows.
    pub fn value(
        self,
        net: &Network,
        kappa: &Conductances,
        flows: &[f64],
    ) -> Result<f64, EnergyError> {
        match self {
            Objective::Dissipation => dissipation(net, kappa, flows),
            Objective::Complementary => complementary_dissipation(net, kappa, flows),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EnergyError {
    /// Nonzero flow through a zero-conductance edge. The pair is infeasible
    /// rather than infinitely dissipative, so callers must keep flows off
    /// dead edges explicitly.
    #[error("nonzero flow {flow:e} through zero-conductance edge {edge}")]
    InfiniteDissipation { edge: usize, flow: f64 },
}

/// Dissipation `sum_e Q_e^2 / kappa_e`, with the convention `0^2/0 = 0`.
pub fn dissipation(net: &Network, kappa: &Conductances, flows: &[f64]) -> Result<f64, EnergyError> {
    assert_eq!(flows.len(), net.edge_count());
    assert_eq!(kappa.len(), net.edge_count());
    let mut total = 0.0;
    for (e, &q) in flows.iter().enumerate() {
        let c = kappa[e];
        if c > 0.0 {
            total += q * q / c;
        } else if q != 0.0 {
            return Err(EnergyError::InfiniteDissipation { edge: e, flow: q });
        }
    }
    Ok(total)
}

/// Work rate done at pressure vertices: `sum_{k pressure} pbar_k sum_l Q_kl`.
pub fn pressure_work(net: &Network, flows: &[f64]) -> f64 {
    net.pressure_vertices()
        .map(|(k, p)| p * net.outflow(flows, k))
        .sum()
}

/// Complementary dissipation `D - 2 sum_{k pressure} pbar_k sum_l Q_kl`.
///
/// At fixed conductances the Kirchhoff flow is its unique global minimizer
/// among flows satisfying mass conservation and the prescribed inflows.
pub fn complementary_dissipation(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
) -> Result<f64, EnergyError> {
    Ok(dissipation(net, kappa, flows)? - 2.0 * pressure_work(net, flows))
}

/// Material cost `sum_e kappa_e^(1/2) d_e`.
pub fn material_cost(net: &Network, kappa: &Conductances) -> f64 {
    net.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| kappa[e].sqrt() * edge.d)
        .sum()
}

/// Objective value plus `a` times the material cost.
pub fn penalty_objective(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    a: f64,
    objective: Objective,
) -> Result<f64, EnergyError> {
    assert!(a > 0.0);
    Ok(objective.value(net, kappa, flows)? + a * material_cost(net, kappa))
}

/// All functionals evaluated on one `(kappa, flows)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub dissipation: f64,
    pub pressure_work: f64,
    pub complementary: f64,
    pub material: f64,
    /// Penalized objective, present when a penalty coefficient was supplied.
    pub penalty_objective: Option<f64>,
}

impl EnergyReport {
    pub fn compute(
        net: &Network,
        kappa: &Conductances,
        flows: &[f64],
    ) -> Result<Self, EnergyError> {
        let dissipation = dissipation(net, kappa, flows)?;
        let pressure_work = pressure_work(net, flows);
        Ok(EnergyReport {
            dissipation,
            pressure_work,
            complementary: dissipation - 2.0 * pressure_work,
            material: material_cost(net, kappa),
            penalty_objective: None,
        })
    }

    /// Fill in the penalized objective for coefficient `a`.
    pub fn with_penalty(mut self, a: f64, objective: Objective) -> Self {
        let base = match objective {
            Objective::Dissipation => self.dissipation,
            Objective::Complementary => self.complementary,
        };
        self.penalty_objective = Some(base + a * self.material);
        self
    }
}
