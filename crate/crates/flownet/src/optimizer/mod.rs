//! Minimization of dissipation or complementary dissipation over the
//! conductances, under a material constraint or a material penalty.
//!
//! The constrained optimizer alternates four non-increasing steps from a
//! randomized start on the material surface: relax the flows to the
//! Kirchhoff flows, refit the conductances to the cube-root flow law,
//! apply one loop or path current move found in the positive subgraph, and
//! prune dead edges while redistributing their material. The best run over
//! seeded restarts is returned together with topology certificates.
//!
//! The penalized optimizer is reduced to a unit-material constrained run:
//! with `D` the unit optimum, the material level `K = (2 D / a)^(1/3)`
//! makes the constrained optimum stationary for the penalty coefficient
//! `a`, provided the flows do not change under uniform conductance
//! rescaling. That holds in particular when flow boundary conditions are
//! present, because the optimum then disconnects all pressure vertices.

mod moves;

pub use moves::{
    loop_current_minimize, murray_conductances, path_current_minimize, prune_and_redistribute,
    relax_flows,
};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::energy::{dissipation, EnergyError, EnergyReport, Objective};
use crate::network::{
    default_prune_threshold, positive_subgraph, Boundary, Conductances, Network, OrientedEdge,
    SubgraphView,
};
use crate::solver::{solve_kirchhoff, FlowState, SolverError};
use crate::topology::{
    analyze, equal_pressure_connection, fundamental_cycles, pressures_equal, TopologyReport,
};

use moves::{dirichlet_path_current, flow_tolerance, walk_material};

/// How the material cost enters the problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizeMode {
    /// Fix the material cost to the given budget.
    Constraint(f64),
    /// Add the material cost, weighted by the given coefficient, to the
    /// objective.
    Penalty(f64),
}

#[derive(Clone, Debug)]
pub struct OptimizeConfig {
    pub objective: Objective,
    pub mode: OptimizeMode,
    pub max_iters: usize,
    /// Relative objective change below which an iteration counts as stable;
    /// three consecutive stable iterations terminate a run.
    pub rel_tol: f64,
    /// Absolute conductance threshold for the certificate subgraph. `None`
    /// selects `1e-12 * max(kappa, 1)`.
    pub prune_threshold: Option<f64>,
    pub restarts: usize,
    pub rng_seed: u64,
}

impl OptimizeConfig {
    /// Constraint-mode configuration with library defaults.
    pub fn constrained(objective: Objective, material: f64) -> Self {
        OptimizeConfig {
            objective,
            mode: OptimizeMode::Constraint(material),
            max_iters: 500,
            rel_tol: 1e-10,
            prune_threshold: None,
            restarts: 10,
            rng_seed: 0,
        }
    }

    /// Penalty-mode configuration with library defaults.
    pub fn penalized(objective: Objective, coefficient: f64) -> Self {
        OptimizeConfig {
            mode: OptimizeMode::Penalty(coefficient),
            ..Self::constrained(objective, 1.0)
        }
    }

    fn validate(&self) -> Result<(), OptimizeError> {
        if self.max_iters < 1 {
            return Err(OptimizeError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(OptimizeError::InvalidConfig("rel_tol must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(OptimizeError::InvalidConfig("restarts must be >= 1".into()));
        }
        let level = match self.mode {
            OptimizeMode::Constraint(m) => m,
            OptimizeMode::Penalty(a) => a,
        };
        if !(level > 0.0) || !level.is_finite() {
            return Err(OptimizeError::InvalidConfig(
                "material budget and penalty coefficient must be positive".into(),
            ));
        }
        if let Some(eps) = self.prune_threshold {
            if !(eps >= 0.0) {
                return Err(OptimizeError::InvalidConfig(
                    "prune_threshold must be non-negative".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
    /// Iterates collapsed toward zero conductance with the objective still
    /// decreasing; the infimum is not attained.
    DegenerateToZero,
    /// The objective decreases without bound.
    UnboundedBelow,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub conductances: Conductances,
    pub flows: FlowState,
    pub energy: EnergyReport,
    /// Objective values per iteration of the best restart.
    pub trace: Vec<f64>,
    pub certificates: TopologyReport,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OptimizeError {
    #[error("every flow on the edge subset is zero")]
    AllZeroFlows,
    #[error("all oriented loop flows are equal; prune the whole loop instead")]
    ConstantLoopFlow,
    #[error("path endpoints {a} and {b} prescribe different pressures")]
    EndpointPressureMismatch { a: usize, b: usize },
    #[error("every remaining edge carries zero flow")]
    NoLiveFlow,
    #[error("the all-positive prior network is not physical: {0}")]
    NonPhysicalPrior(SolverError),
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "penalized complementary dissipation is unbounded below: connectable pressure \
         vertices {a} and {b} prescribe different pressures"
    )]
    UnboundedBelow { a: usize, b: usize },
    #[error("flows change under uniform conductance rescaling; the penalty reduction does not apply")]
    ScaleDependentFlows,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Material level equivalent to penalty coefficient `a` given the
/// unit-material optimal dissipation: `K = (2 d_hat / a)^(1/3)`.
///
/// For fixed `d_hat` this is a strictly decreasing bijection from
/// `(0, inf)` onto `(0, inf)`.
pub fn material_of_penalty(a: f64, d_hat: f64) -> f64 {
    assert!(a > 0.0 && d_hat > 0.0);
    (2.0 * d_hat / a).powf(1.0 / 3.0)
}

/// Dimensionless finite-difference residual of `d Theta / d beta` at the
/// reduction point `beta = K^2`, where `Theta(beta) = d_hat / beta +
/// a sqrt(beta)` is the penalized objective along uniform rescalings of the
/// unit-material optimum.
pub fn penalty_stationarity_residual(a: f64, d_hat: f64) -> f64 {
    let k = material_of_penalty(a, d_hat);
    let beta = k * k;
    let theta = |b: f64| d_hat / b + a * b.sqrt();
    let h = 1e-4 * beta;
    let fd = (theta(beta + h) - theta(beta - h)) / (2.0 * h);
    (fd * beta / theta(beta)).abs()
}

/// Minimize the configured objective over conductances on the material
/// surface `material_cost = M`, best over seeded restarts.
pub fn optimize_constrained(
    net: &Network,
    config: &OptimizeConfig,
) -> Result<OptimizeResult, OptimizeError> {
    config.validate()?;
    let m = match config.mode {
        OptimizeMode::Constraint(m) => m,
        OptimizeMode::Penalty(_) => {
            return Err(OptimizeError::InvalidConfig(
                "optimize_constrained requires constraint mode".into(),
            ))
        }
    };
    if net.edge_count() == 0 {
        return Err(OptimizeError::InvalidConfig("network has no edges".into()));
    }
    check_physical_prior(net)?;

    let strategy = Strategy::select(net, config.objective);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut best: Option<RunOutcome> = None;
    for _ in 0..config.restarts {
        let kappa0 = random_material_point(net, m, &mut rng);
        let outcome = strategy.run(net, m, config, kappa0)?;
        let better = match &best {
            None => true,
            Some(b) => outcome.objective() < b.objective(),
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("restarts >= 1");
    finalize(net, config, best)
}

/// Minimize dissipation plus `a` times the material cost, via the material
/// level equivalent to `a`.
///
/// Only the dissipation objective is supported: the penalized complementary
/// dissipation has no minimizer whenever two pressure vertices with
/// different pressures can be connected, which is diagnosed and reported as
/// [`OptimizeError::UnboundedBelow`].
pub fn optimize_penalized(
    net: &Network,
    config: &OptimizeConfig,
) -> Result<OptimizeResult, OptimizeError> {
    config.validate()?;
    let a = match config.mode {
        OptimizeMode::Penalty(a) => a,
        OptimizeMode::Constraint(_) => {
            return Err(OptimizeError::InvalidConfig(
                "optimize_penalized requires penalty mode".into(),
            ))
        }
    };
    if config.objective == Objective::Complementary {
        if let Some((a_vertex, b_vertex)) = connectable_unequal_pressure_pair(net) {
            return Err(OptimizeError::UnboundedBelow {
                a: a_vertex,
                b: b_vertex,
            });
        }
        return Err(OptimizeError::InvalidConfig(
            "penalty mode supports only the dissipation objective".into(),
        ));
    }

    let unit_config = OptimizeConfig {
        mode: OptimizeMode::Constraint(1.0),
        ..config.clone()
    };
    let unit = optimize_constrained(net, &unit_config)?;
    let d_hat = unit.energy.dissipation;
    if d_hat <= f64::MIN_POSITIVE {
        // Nothing flows at the unit optimum, so the penalty is minimized by
        // the empty network.
        let kappa = Conductances::uniform(net, 0.0);
        let flows = solve_kirchhoff(net, &kappa)?;
        let energy =
            EnergyReport::compute(net, &kappa, &flows.flows)?.with_penalty(a, config.objective);
        let certificates = analyze(net, &kappa, &flows.flows, 0.0);
        return Ok(OptimizeResult {
            conductances: kappa,
            flows,
            energy,
            trace: unit.trace,
            certificates,
            termination: Termination::DegenerateToZero,
        });
    }

    let k_material = material_of_penalty(a, d_hat);
    let beta = k_material * k_material;
    let kappa = unit.conductances.scaled(beta);
    let flows = solve_kirchhoff(net, &kappa)?;
    let d_scaled = dissipation(net, &kappa, &flows.flows)?;
    let expected = d_hat / beta;
    if (d_scaled - expected).abs() > 1e-8 * expected.max(f64::MIN_POSITIVE) {
        return Err(OptimizeError::ScaleDependentFlows);
    }
    debug_assert!(penalty_stationarity_residual(a, d_hat) < 1e-6);

    let energy =
        EnergyReport::compute(net, &kappa, &flows.flows)?.with_penalty(a, config.objective);
    let eps = config
        .prune_threshold
        .unwrap_or_else(|| default_prune_threshold(&kappa));
    let certificates = analyze(net, &kappa, &flows.flows, eps);
    Ok(OptimizeResult {
        conductances: kappa,
        flows,
        energy,
        trace: unit.trace,
        certificates,
        termination: unit.termination,
    })
}

// A pair of pressure vertices with unequal pressures joined by some path of
// prior edges, if any. Witness for the unbounded penalized complementary
// objective.
fn connectable_unequal_pressure_pair(net: &Network) -> Option<(usize, usize)> {
    let all = Conductances::uniform(net, 1.0);
    let view = positive_subgraph(net, &all, 0.0);
    let dirichlet: Vec<(usize, f64)> = net.pressure_vertices().collect();
    for (i, &(ki, pi)) in dirichlet.iter().enumerate() {
        for &(kj, pj) in &dirichlet[i + 1..] {
            if !pressures_equal(pi, pj) && view.component_of()[ki] == view.component_of()[kj] {
                return Some((ki, kj));
            }
        }
    }
    None
}

fn check_physical_prior(net: &Network) -> Result<(), OptimizeError> {
    let all = Conductances::uniform(net, 1.0);
    solve_kirchhoff(net, &all).map_err(OptimizeError::NonPhysicalPrior)?;
    Ok(())
}

// Uniform sample from the material simplex: sqrt(kappa_e) d_e = m s_e with
// s Dirichlet(1,...,1) distributed.
fn random_material_point(net: &Network, m: f64, rng: &mut ChaCha8Rng) -> Conductances {
    let e = net.edge_count();
    let mut x = vec![0.0_f64; e];
    let mut total = 0.0;
    for xi in &mut x {
        let u: f64 = rng.gen_range(0.0..1.0);
        *xi = -(1.0 - u).ln().max(f64::MIN_POSITIVE);
        total += *xi;
    }
    let values = x
        .iter()
        .enumerate()
        .map(|(i, xi)| {
            let s = xi / total;
            let root = m * s / net.edge(i).d;
            root * root
        })
        .collect();
    Conductances::from_raw(values)
}

struct RunOutcome {
    kappa: Conductances,
    trace: Vec<f64>,
    termination: Termination,
}

impl RunOutcome {
    fn objective(&self) -> f64 {
        *self.trace.last().expect("trace is never empty")
    }
}

enum Strategy {
    /// Descend the complementary dissipation directly.
    Complementary,
    /// Dissipation with a single prescribed pressure value: shift it to
    /// zero, where the two objectives coincide.
    ShiftedComplementary(Network),
    /// Dissipation with flow vertices present: disconnect all pressure
    /// vertex pairs first, then descend per component.
    TwoPhase,
    /// Dissipation with only pressure and free vertices and at least two
    /// distinct pressures: projected gradient on the material simplex.
    DirichletSimplex,
}

impl Strategy {
    fn select(net: &Network, objective: Objective) -> Strategy {
        match objective {
            Objective::Complementary => Strategy::Complementary,
            Objective::Dissipation => {
                let pressures: Vec<f64> = net.pressure_vertices().map(|(_, p)| p).collect();
                let all_equal = pressures
                    .windows(2)
                    .all(|w| pressures_equal(w[0], w[1]));
                if pressures.is_empty() || all_equal {
                    let shift = pressures.first().copied().unwrap_or(0.0);
                    let shifted = net.with_boundary(|_, b| match b {
                        Boundary::Pressure(p) => Boundary::Pressure(p - shift),
                        other => other,
                    });
                    Strategy::ShiftedComplementary(shifted)
                } else if net.has_flow_vertex() {
                    Strategy::TwoPhase
                } else {
                    Strategy::DirichletSimplex
                }
            }
        }
    }

    fn run(
        &self,
        net: &Network,
        m: f64,
        config: &OptimizeConfig,
        kappa0: Conductances,
    ) -> Result<RunOutcome, OptimizeError> {
        match self {
            Strategy::Complementary => {
                descend_alternating(net, m, config, kappa0, Objective::Complementary)
            }
            Strategy::ShiftedComplementary(shifted) => {
                // On the shifted network the complementary dissipation
                // equals the dissipation of the original network.
                descend_alternating(shifted, m, config, kappa0, Objective::Complementary)
            }
            Strategy::TwoPhase => {
                let phase1 = disconnect_pressure_pairs(net, m, kappa0)?;
                match phase1 {
                    Phase1::NoFlow { kappa, trace } => Ok(RunOutcome {
                        kappa,
                        trace,
                        termination: Termination::Converged,
                    }),
                    Phase1::Live { kappa, trace } => {
                        let mut outcome =
                            descend_alternating(net, m, config, kappa, Objective::Dissipation)?;
                        let mut full = trace;
                        full.extend(outcome.trace);
                        outcome.trace = full;
                        Ok(outcome)
                    }
                }
            }
            Strategy::DirichletSimplex => descend_simplex_gradient(net, m, config, kappa0),
        }
    }
}

fn relative_delta(previous: f64, current: f64) -> f64 {
    (current - previous).abs() / current.abs().max(1.0)
}

// One iteration applies at most one structural move; its result feeds the
// next relaxation.
fn descend_alternating(
    net: &Network,
    m: f64,
    config: &OptimizeConfig,
    kappa0: Conductances,
    trace_objective: Objective,
) -> Result<RunOutcome, OptimizeError> {
    let mut kappa = kappa0;
    let mut state = solve_kirchhoff(net, &kappa)?;
    let mut trace = vec![trace_objective.value(net, &kappa, &state.flows)?];
    let mut stable = 0_usize;
    let mut termination = Termination::MaxIters;

    for _ in 0..config.max_iters {
        // Conductance refit on flowing edges; dead edges lose their
        // material to the rest.
        let ftol = flow_tolerance(&state.flows);
        let mut flows = state.flows.clone();
        let mut flowing = Vec::new();
        let mut dead = Vec::new();
        for e in 0..net.edge_count() {
            if flows[e].abs() > ftol {
                flowing.push(e);
            } else {
                flows[e] = 0.0;
                dead.push(e);
            }
        }
        if flowing.is_empty() {
            termination = Termination::Converged;
            break;
        }
        kappa = murray_conductances(net, &kappa, &flows, m, &flowing)?;
        kappa = prune_and_redistribute(net, &kappa, &flows, &dead, m)?;

        // One structural move per iteration, lowest index first.
        let mut moved = false;
        let view = positive_subgraph(net, &kappa, 0.0);
        if let Some(cycle) = fundamental_cycles(&view).into_iter().next() {
            let m_loop = walk_material(net, &kappa, &cycle);
            match loop_current_minimize(net, &kappa, &flows, &cycle, m_loop) {
                Ok((new_flows, new_kappa)) => {
                    flows = new_flows;
                    kappa = new_kappa;
                    moved = true;
                }
                Err(OptimizeError::ConstantLoopFlow) => {
                    // Zero the circulating loop and hand its material to
                    // the flowing edges.
                    let loop_edges: Vec<usize> = cycle.iter().map(|oe| oe.edge).collect();
                    for &e in &loop_edges {
                        flows[e] = 0.0;
                    }
                    match prune_and_redistribute(net, &kappa, &flows, &loop_edges, m) {
                        Ok(new_kappa) => {
                            kappa = new_kappa;
                            moved = true;
                        }
                        Err(OptimizeError::NoLiveFlow) => {
                            termination = Termination::Converged;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                Err(e) => return Err(e),
            }
        } else if let Some(((from, _), path_edges)) = equal_pressure_connection(net, &view) {
            let walk = orient_walk(net, from, &path_edges);
            let (new_flows, new_kappa) = path_current_minimize(net, &kappa, &flows, &walk)?;
            flows = new_flows;
            // An all-equal path is emptied entirely and releases its
            // material; rebalance over what still flows.
            let newly_dead: Vec<usize> = (0..net.edge_count())
                .filter(|&e| new_kappa[e] == 0.0 && kappa[e] != 0.0)
                .collect();
            match prune_and_redistribute(net, &new_kappa, &flows, &newly_dead, m) {
                Ok(balanced) => {
                    kappa = balanced;
                    moved = true;
                }
                Err(OptimizeError::NoLiveFlow) => {
                    kappa = new_kappa;
                    termination = Termination::Converged;
                    break;
                }
                Err(e) => return Err(e),
            }
        }

        state = solve_kirchhoff(net, &kappa)?;
        let objective = trace_objective.value(net, &kappa, &state.flows)?;
        let previous = *trace.last().unwrap();
        trace.push(objective);
        if !moved && relative_delta(previous, objective) < config.rel_tol {
            stable += 1;
        } else {
            stable = 0;
        }
        if stable >= 3 {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(RunOutcome {
        kappa,
        trace,
        termination,
    })
}

enum Phase1 {
    Live { kappa: Conductances, trace: Vec<f64> },
    NoFlow { kappa: Conductances, trace: Vec<f64> },
}

// Disconnect every pair of pressure vertices by path current moves, without
// relaxing the flows in between. Valid for the dissipation objective only:
// the moves lower the dissipation on the path regardless of the endpoint
// pressures.
fn disconnect_pressure_pairs(
    net: &Network,
    m: f64,
    kappa0: Conductances,
) -> Result<Phase1, OptimizeError> {
    let mut kappa = kappa0;
    let state = solve_kirchhoff(net, &kappa)?;
    let mut flows = state.flows;
    let mut trace = vec![dissipation(net, &kappa, &flows)?];

    let cap = 4 * net.edge_count() + 4;
    for _ in 0..cap {
        let view = positive_subgraph(net, &kappa, 0.0);
        let Some((from, path_edges)) = connected_pressure_pair(net, &view) else {
            break;
        };
        let walk = orient_walk(net, from, &path_edges);
        let (new_flows, new_kappa) = dirichlet_path_current(net, &kappa, &flows, &walk)?;
        flows = new_flows;
        let newly_dead: Vec<usize> = (0..net.edge_count())
            .filter(|&e| new_kappa[e] == 0.0 && kappa[e] != 0.0)
            .collect();
        match prune_and_redistribute(net, &new_kappa, &flows, &newly_dead, m) {
            Ok(balanced) => kappa = balanced,
            Err(OptimizeError::NoLiveFlow) => {
                return Ok(Phase1::NoFlow { kappa: new_kappa, trace });
            }
            Err(e) => return Err(e),
        }
        trace.push(dissipation(net, &kappa, &flows)?);
    }
    debug_assert!(
        connected_pressure_pair(net, &positive_subgraph(net, &kappa, 0.0)).is_none(),
        "pressure pairs still connected after the move cap"
    );
    Ok(Phase1::Live { kappa, trace })
}

// Lowest pair of pressure vertices, equal pressures or not, joined by
// active edges; returns the start vertex and a shortest path.
fn connected_pressure_pair(
    net: &Network,
    view: &SubgraphView<'_>,
) -> Option<(usize, Vec<usize>)> {
    let dirichlet: Vec<usize> = net.pressure_vertices().map(|(k, _)| k).collect();
    for (i, &ki) in dirichlet.iter().enumerate() {
        for &kj in &dirichlet[i + 1..] {
            if view.component_of()[ki] == view.component_of()[kj] {
                let path = shortest_active_path(net, view, ki, kj)
                    .expect("same component implies a path");
                return Some((ki, path));
            }
        }
    }
    None
}

fn shortest_active_path(
    net: &Network,
    view: &SubgraphView<'_>,
    from: usize,
    to: usize,
) -> Option<Vec<usize>> {
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
            if !seen[l] {
                seen[l] = true;
                prev[l] = Some((k, e));
                queue.push_back(l);
            }
        }
    }
    if !seen[to] {
        return None;
    }
    let mut edges = Vec::new();
    let mut k = to;
    while let Some((p, e)) = prev[k] {
        edges.push(e);
        k = p;
    }
    edges.reverse();
    Some(edges)
}

// Orient a chained edge list into a walk starting at `start`.
fn orient_walk(net: &Network, start: usize, edges: &[usize]) -> Vec<OrientedEdge> {
    let mut at = start;
    edges
        .iter()
        .map(|&e| {
            let edge = net.edge(e);
            let forward = edge.u == at;
            at = edge.other(at);
            OrientedEdge::new(e, forward)
        })
        .collect()
}

// Projected gradient descent of the dissipation over the material simplex,
// for networks with only pressure and free vertices. There the gradient of
// the dissipation with respect to a conductance is exactly the squared
// pressure drop across its edge, and every point of the simplex yields a
// physical network.
fn descend_simplex_gradient(
    net: &Network,
    m: f64,
    config: &OptimizeConfig,
    kappa0: Conductances,
) -> Result<RunOutcome, OptimizeError> {
    let kappa_of = |s: &[f64]| -> Conductances {
        Conductances::from_raw(
            s.iter()
                .enumerate()
                .map(|(e, &si)| {
                    let root = m * si / net.edge(e).d;
                    root * root
                })
                .collect(),
        )
    };
    let mut s: Vec<f64> = kappa0
        .values()
        .iter()
        .enumerate()
        .map(|(e, &k)| k.sqrt() * net.edge(e).d / m)
        .collect();
    let mut kappa = kappa_of(&s);
    let mut state = solve_kirchhoff(net, &kappa)?;
    let mut d_value = dissipation(net, &kappa, &state.flows)?;
    let mut trace = vec![d_value];
    let mut stable = 0_usize;
    let mut termination = Termination::MaxIters;
    let mut step: Option<f64> = None;

    for _ in 0..config.max_iters {
        let grad: Vec<f64> = net
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let drop = state.pressures[edge.u] - state.pressures[edge.v];
                let dd_dkappa = drop * drop;
                dd_dkappa * 2.0 * m * m * s[e] / (edge.d * edge.d)
            })
            .collect();
        let gmax = grad.iter().fold(0.0_f64, |acc, g| acc.max(g.abs()));
        if gmax == 0.0 {
            termination = Termination::Converged;
            break;
        }
        let mut eta = step.unwrap_or(0.25 / gmax);
        let mut improved = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = s
                .iter()
                .zip(&grad)
                .map(|(&si, &gi)| si - eta * gi)
                .collect();
            let candidate = project_to_simplex(&candidate);
            let kappa_c = kappa_of(&candidate);
            let state_c = solve_kirchhoff(net, &kappa_c)?;
            let d_c = dissipation(net, &kappa_c, &state_c.flows)?;
            if d_c < d_value {
                s = candidate;
                kappa = kappa_c;
                state = state_c;
                d_value = d_c;
                step = Some(eta * 2.0);
                improved = true;
                break;
            }
            eta *= 0.5;
        }
        if !improved {
            termination = Termination::Converged;
            break;
        }
        let previous = *trace.last().unwrap();
        trace.push(d_value);
        if relative_delta(previous, d_value) < config.rel_tol {
            stable += 1;
        } else {
            stable = 0;
        }
        if stable >= 3 {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(RunOutcome {
        kappa,
        trace,
        termination,
    })
}

// Euclidean projection onto the unit simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &vj) in sorted.iter().enumerate() {
        cumulative += vj;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if vj - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&vi| (vi - theta).max(0.0)).collect()
}

fn finalize(
    net: &Network,
    config: &OptimizeConfig,
    outcome: RunOutcome,
) -> Result<OptimizeResult, OptimizeError> {
    let kappa = outcome.kappa;
    let flows = solve_kirchhoff(net, &kappa)?;
    let energy = EnergyReport::compute(net, &kappa, &flows.flows)?;
    let eps = config
        .prune_threshold
        .unwrap_or_else(|| default_prune_threshold(&kappa));
    let certificates = analyze(net, &kappa, &flows.flows, eps);
    Ok(OptimizeResult {
        conductances: kappa,
        flows,
        energy,
        trace: outcome.trace,
        certificates,
        termination: outcome.termination,
    })
}
