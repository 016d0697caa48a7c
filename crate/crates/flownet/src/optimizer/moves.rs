//! The individual descent moves: conductance refitting along the cube-root
//! flow law, loop and path current line searches, and pruning with material
//! redistribution.
//!
//! Loop and path currents add a constant flow along a closed walk or a walk
//! between two pressure vertices. They preserve mass conservation and every
//! prescribed inflow, and restricted to the walk the objective becomes
//!
//! ```text
//! D_walk(Q) = (sum_i |q_i + Q|^(2/3) d_i^(2/3))^3 / K_walk^2
//! ```
//!
//! once the walk's conductances are refit to the law with its material
//! `K_walk` held fixed. `D_walk` is continuous, grows without bound as
//! `|Q| -> inf`, has cusped local minima exactly where some walk flow
//! crosses zero, and its smooth stationary points are maxima. The line
//! search therefore compares every zero crossing and, against rounding,
//! golden-sections the intervals between consecutive crossings.

use crate::network::{Conductances, Network, OrientedEdge};
use crate::solver::{solve_kirchhoff, FlowState, SolverError};
use crate::topology::pressures_equal;

use super::OptimizeError;

/// Replace the flows by the Kirchhoff flows for `kappa`.
///
/// Among all flows satisfying mass conservation and the prescribed inflows
/// this cannot increase the complementary dissipation.
pub fn relax_flows(net: &Network, kappa: &Conductances) -> Result<FlowState, SolverError> {
    solve_kirchhoff(net, kappa)
}

/// Conductances refit to `kappa_e = mu |Q_e|^(4/3) / d_e^(2/3)` on the given
/// edge subset, with `mu` chosen so the material cost over the subset equals
/// `m`. Conductances off the subset are returned unchanged.
///
/// This is the minimizer of the dissipation restricted to the subset at
/// fixed flows and fixed subset material. Edges of the subset with zero flow
/// come out with zero conductance.
pub fn murray_conductances(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    m: f64,
    subset: &[usize],
) -> Result<Conductances, OptimizeError> {
    assert_eq!(flows.len(), net.edge_count());
    if !(m > 0.0) || !m.is_finite() {
        return Err(OptimizeError::InvalidMove(format!(
            "material budget must be positive, got {m}"
        )));
    }
    if subset.is_empty() {
        return Err(OptimizeError::InvalidMove("empty edge subset".into()));
    }
    let mut seen = vec![false; net.edge_count()];
    for &e in subset {
        if e >= net.edge_count() {
            return Err(OptimizeError::InvalidMove(format!("edge {e} out of range")));
        }
        if seen[e] {
            return Err(OptimizeError::InvalidMove(format!("duplicate edge {e}")));
        }
        seen[e] = true;
    }

    let weight: f64 = subset
        .iter()
        .map(|&e| flows[e].abs().powf(2.0 / 3.0) * net.edge(e).d.powf(2.0 / 3.0))
        .sum();
    if weight == 0.0 {
        return Err(OptimizeError::AllZeroFlows);
    }
    let mu = (m / weight) * (m / weight);
    let mut values = kappa.to_vec();
    for &e in subset {
        values[e] = mu * flows[e].abs().powf(4.0 / 3.0) / net.edge(e).d.powf(2.0 / 3.0);
    }
    Ok(Conductances::from_raw(values))
}

/// Zero the dead edges and rescale the rest so the material cost returns to
/// `m`. Dead edges must not carry flow; at least one surviving edge must.
pub fn prune_and_redistribute(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    dead_edges: &[usize],
    m: f64,
) -> Result<Conductances, OptimizeError> {
    assert_eq!(flows.len(), net.edge_count());
    if !(m > 0.0) || !m.is_finite() {
        return Err(OptimizeError::InvalidMove(format!(
            "material budget must be positive, got {m}"
        )));
    }
    let ftol = flow_tolerance(flows);
    let mut dead = vec![false; net.edge_count()];
    for &e in dead_edges {
        if e >= net.edge_count() {
            return Err(OptimizeError::InvalidMove(format!("edge {e} out of range")));
        }
        if flows[e].abs() > ftol {
            return Err(OptimizeError::InvalidMove(format!(
                "dead edge {e} still carries flow {:e}",
                flows[e]
            )));
        }
        dead[e] = true;
    }
    let any_live_flow = (0..net.edge_count()).any(|e| !dead[e] && flows[e].abs() > ftol);
    if !any_live_flow {
        return Err(OptimizeError::NoLiveFlow);
    }
    let live_material: f64 = net
        .edges()
        .iter()
        .enumerate()
        .filter(|(e, _)| !dead[*e])
        .map(|(e, edge)| kappa[e].sqrt() * edge.d)
        .sum();
    if live_material <= 0.0 {
        return Err(OptimizeError::InvalidMove(
            "no material left on live edges".into(),
        ));
    }
    let beta = (m / live_material) * (m / live_material);
    let values = kappa
        .values()
        .iter()
        .enumerate()
        .map(|(e, &k)| if dead[e] { 0.0 } else { k * beta })
        .collect();
    Ok(Conductances::from_raw(values))
}

/// Add the optimal loop current along a simple cycle and refit the loop
/// conductances with its material `m_loop` held fixed.
///
/// The optimum zeroes at least one loop edge whenever the oriented loop
/// flows are not all equal. All-equal loop flows are rejected as
/// [`OptimizeError::ConstantLoopFlow`]; the caller should prune the whole
/// loop and redistribute its material instead.
pub fn loop_current_minimize(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    cycle: &[OrientedEdge],
    m_loop: f64,
) -> Result<(Vec<f64>, Conductances), OptimizeError> {
    let vertices = walk_vertices(net, cycle)?;
    if cycle.len() < 3 {
        return Err(OptimizeError::InvalidMove(
            "a loop needs at least 3 edges".into(),
        ));
    }
    if vertices[0] != vertices[cycle.len()] {
        return Err(OptimizeError::InvalidMove("walk does not close".into()));
    }
    check_simple(&vertices[..cycle.len()])?;
    check_active(kappa, cycle)?;

    let oriented: Vec<f64> = cycle.iter().map(|oe| oe.signed_flow(flows)).collect();
    if is_constant(&oriented) {
        return Err(OptimizeError::ConstantLoopFlow);
    }
    apply_best_current(net, kappa, flows, cycle, &oriented, m_loop)
}

/// Add the optimal path current along a simple path between two pressure
/// vertices with equal prescribed pressure and refit the path conductances
/// with the path material held fixed.
///
/// When the oriented path flows are all equal the optimal current zeroes
/// every path edge; the path conductances are then zeroed and the released
/// material is left for the caller to redistribute.
pub fn path_current_minimize(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    path: &[OrientedEdge],
) -> Result<(Vec<f64>, Conductances), OptimizeError> {
    let vertices = validate_path(net, kappa, path)?;
    let (first, last) = (vertices[0], vertices[path.len()]);
    let p_first = match net.boundary(first).pressure() {
        Some(p) => p,
        None => {
            return Err(OptimizeError::InvalidMove(format!(
                "path endpoint {first} is not a pressure vertex"
            )))
        }
    };
    let p_last = match net.boundary(last).pressure() {
        Some(p) => p,
        None => {
            return Err(OptimizeError::InvalidMove(format!(
                "path endpoint {last} is not a pressure vertex"
            )))
        }
    };
    if !pressures_equal(p_first, p_last) {
        return Err(OptimizeError::EndpointPressureMismatch { a: first, b: last });
    }
    path_current_unchecked(net, kappa, flows, path)
}

/// Path current between any two pressure vertices, without the equal
/// pressure requirement. Only valid when the objective ignores the pressure
/// work term, as the dissipation objective does.
pub(crate) fn dirichlet_path_current(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    path: &[OrientedEdge],
) -> Result<(Vec<f64>, Conductances), OptimizeError> {
    let vertices = validate_path(net, kappa, path)?;
    for &end in [vertices[0], vertices[path.len()]].iter() {
        if !net.boundary(end).is_pressure() {
            return Err(OptimizeError::InvalidMove(format!(
                "path endpoint {end} is not a pressure vertex"
            )));
        }
    }
    path_current_unchecked(net, kappa, flows, path)
}

fn path_current_unchecked(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    path: &[OrientedEdge],
) -> Result<(Vec<f64>, Conductances), OptimizeError> {
    let oriented: Vec<f64> = path.iter().map(|oe| oe.signed_flow(flows)).collect();
    if is_constant(&oriented) {
        // The optimal current cancels the common flow, emptying the path.
        let mut new_flows = flows.to_vec();
        let mut values = kappa.to_vec();
        for oe in path {
            new_flows[oe.edge] = 0.0;
            values[oe.edge] = 0.0;
        }
        return Ok((new_flows, Conductances::from_raw(values)));
    }
    let m_path: f64 = path
        .iter()
        .map(|oe| kappa[oe.edge].sqrt() * net.edge(oe.edge).d)
        .sum();
    apply_best_current(net, kappa, flows, path, &oriented, m_path)
}

fn apply_best_current(
    net: &Network,
    kappa: &Conductances,
    flows: &[f64],
    walk: &[OrientedEdge],
    oriented: &[f64],
    material: f64,
) -> Result<(Vec<f64>, Conductances), OptimizeError> {
    if !(material > 0.0) || !material.is_finite() {
        return Err(OptimizeError::InvalidMove(format!(
            "walk material must be positive, got {material}"
        )));
    }
    let d23: Vec<f64> = walk
        .iter()
        .map(|oe| net.edge(oe.edge).d.powf(2.0 / 3.0))
        .collect();
    let q_star = optimal_added_current(oriented, &d23);
    let mut new_flows = flows.to_vec();
    for oe in walk {
        new_flows[oe.edge] = flows[oe.edge] + oe.sign() * q_star;
    }
    let edges: Vec<usize> = walk.iter().map(|oe| oe.edge).collect();
    let new_kappa = murray_conductances(net, kappa, &new_flows, material, &edges)?;
    Ok((new_flows, new_kappa))
}

/// Minimize `A(Q) = sum_i |q_i + Q|^(2/3) d23_i` over the added current.
///
/// The minimum of the walk objective is attained at a zero crossing
/// `Q = -q_i`; crossings are compared directly and the open intervals
/// between consecutive crossings are golden-sectioned as a numerical
/// safeguard, with crossings winning ties.
fn optimal_added_current(q: &[f64], d23: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), d23.len());
    let objective = |current: f64| -> f64 {
        q.iter()
            .zip(d23)
            .map(|(&qi, &di)| (qi + current).abs().powf(2.0 / 3.0) * di)
            .sum()
    };
    let mut crossings: Vec<f64> = q.iter().map(|&qi| -qi).collect();
    crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    crossings.dedup();

    let mut best_q = crossings[0];
    let mut best_a = objective(best_q);
    for &c in &crossings[1..] {
        let a = objective(c);
        if a < best_a {
            best_a = a;
            best_q = c;
        }
    }
    for pair in crossings.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 1e-15 * lo.abs().max(hi.abs()).max(1.0) {
            continue;
        }
        let (q_mid, a_mid) = golden_section(&objective, lo, hi);
        if a_mid < best_a {
            best_a = a_mid;
            best_q = q_mid;
        }
    }
    best_q
}

fn golden_section(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let tol = 1e-12 * (hi - lo).max(1e-12);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

pub(crate) fn flow_tolerance(flows: &[f64]) -> f64 {
    1e-12 * flows.iter().map(|q| q.abs()).fold(1.0_f64, f64::max)
}

fn is_constant(values: &[f64]) -> bool {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = values.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    max - min <= 1e-12 * scale
}

/// Vertex sequence visited by a chained walk, length `edges + 1`.
fn walk_vertices(net: &Network, walk: &[OrientedEdge]) -> Result<Vec<usize>, OptimizeError> {
    if walk.is_empty() {
        return Err(OptimizeError::InvalidMove("empty walk".into()));
    }
    let mut vertices = vec![walk[0].endpoints(net).0];
    for oe in walk {
        if oe.edge >= net.edge_count() {
            return Err(OptimizeError::InvalidMove(format!(
                "edge {} out of range",
                oe.edge
            )));
        }
        let (from, to) = oe.endpoints(net);
        if from != *vertices.last().unwrap() {
            return Err(OptimizeError::InvalidMove(
                "walk edges do not chain".into(),
            ));
        }
        vertices.push(to);
    }
    Ok(vertices)
}

fn check_simple(vertices: &[usize]) -> Result<(), OptimizeError> {
    let mut sorted = vertices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != vertices.len() {
        return Err(OptimizeError::InvalidMove(
            "walk visits a vertex twice".into(),
        ));
    }
    Ok(())
}

fn check_active(kappa: &Conductances, walk: &[OrientedEdge]) -> Result<(), OptimizeError> {
    for oe in walk {
        if !(kappa[oe.edge] > 0.0) {
            return Err(OptimizeError::InvalidMove(format!(
                "edge {} of the walk has zero conductance",
                oe.edge
            )));
        }
    }
    Ok(())
}

fn validate_path(
    net: &Network,
    kappa: &Conductances,
    path: &[OrientedEdge],
) -> Result<Vec<usize>, OptimizeError> {
    let vertices = walk_vertices(net, path)?;
    check_simple(&vertices)?;
    check_active(kappa, path)?;
    for &k in &vertices[1..path.len()] {
        if net.boundary(k).is_pressure() {
            return Err(OptimizeError::InvalidMove(format!(
                "interior path vertex {k} is a pressure vertex"
            )));
        }
    }
    Ok(vertices)
}

/// Material cost restricted to a walk.
pub(crate) fn walk_material(net: &Network, kappa: &Conductances, walk: &[OrientedEdge]) -> f64 {
    walk.iter()
        .map(|oe| kappa[oe.edge].sqrt() * net.edge(oe.edge).d)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::material_cost;
    use crate::network::NetworkBuilder;
    use approx::assert_relative_eq;

    fn triangle_free() -> Network {
        NetworkBuilder::new(3)
            .edge(0, 1)
            .edge(1, 2)
            .edge(0, 2)
            .build()
            .unwrap()
    }

    fn triangle_cycle() -> Vec<OrientedEdge> {
        // 0 -> 1 -> 2 -> 0 over edges 0, 1, 2.
        vec![
            OrientedEdge::new(0, true),
            OrientedEdge::new(1, true),
            OrientedEdge::new(2, false),
        ]
    }

    #[test]
    fn murray_splits_equal_flows_equally() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 9.0);
        let flows = vec![1.0, -1.0];
        let fitted = murray_conductances(&net, &kappa, &flows, 1.0, &[0, 1]).unwrap();
        assert_relative_eq!(fitted[0], 0.25, max_relative = 1e-15);
        assert_relative_eq!(fitted[1], 0.25, max_relative = 1e-15);
    }

    #[test]
    fn murray_matches_the_mu_formula() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![1.0, 2.0];
        let fitted = murray_conductances(&net, &kappa, &flows, 1.0, &[0, 1]).unwrap();
        let mu = (1.0 + 2.0_f64.powf(2.0 / 3.0)).powi(-2);
        assert_relative_eq!(fitted[0], mu, max_relative = 1e-14);
        assert_relative_eq!(fitted[1], mu * 2.0_f64.powf(4.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(material_cost(&net, &fitted), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn murray_single_edge_takes_all_material() {
        let net = NetworkBuilder::new(3)
            .weighted_edge(0, 1, 2.0)
            .edge(1, 2)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 7.0);
        let flows = vec![3.0, 0.5];
        let m = 4.0;
        let fitted = murray_conductances(&net, &kappa, &flows, m, &[0]).unwrap();
        assert_relative_eq!(fitted[0], (m / 2.0).powi(2), max_relative = 1e-14);
        // off-subset conductance untouched
        assert_eq!(fitted[1], 7.0);
    }

    #[test]
    fn murray_rejects_all_zero_flows() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![0.0, 1.0];
        assert!(matches!(
            murray_conductances(&net, &kappa, &flows, 1.0, &[0]),
            Err(OptimizeError::AllZeroFlows)
        ));
    }

    #[test]
    fn prune_rescales_to_the_budget() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![0.0, 1.0];
        let pruned = prune_and_redistribute(&net, &kappa, &flows, &[0], 2.0).unwrap();
        assert_eq!(pruned[0], 0.0);
        assert_relative_eq!(pruned[1], 4.0, max_relative = 1e-14);
    }

    #[test]
    fn prune_without_dead_edges_is_a_pure_rescale() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::new(&net, vec![1.0, 4.0]).unwrap();
        let flows = vec![1.0, 1.0];
        let m = 6.0;
        let rescaled = prune_and_redistribute(&net, &kappa, &flows, &[], m).unwrap();
        assert_relative_eq!(material_cost(&net, &rescaled), m, max_relative = 1e-14);
        assert_relative_eq!(rescaled[1] / rescaled[0], 4.0, max_relative = 1e-14);
    }

    #[test]
    fn prune_rejects_fully_dead_networks() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![0.0, 0.0];
        assert!(matches!(
            prune_and_redistribute(&net, &kappa, &flows, &[0, 1], 1.0),
            Err(OptimizeError::NoLiveFlow)
        ));
    }

    #[test]
    fn prune_rejects_flowing_dead_edges() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![0.5, 1.0];
        assert!(matches!(
            prune_and_redistribute(&net, &kappa, &flows, &[0], 1.0),
            Err(OptimizeError::InvalidMove(_))
        ));
    }

    /// Brute-force line-search oracle: dense grid plus golden refinement.
    fn oracle_current(q: &[f64], d23: &[f64], lo: f64, hi: f64) -> f64 {
        let objective = |current: f64| -> f64 {
            q.iter()
                .zip(d23)
                .map(|(&qi, &di)| (qi + current).abs().powf(2.0 / 3.0) * di)
                .sum()
        };
        let steps = 16_000;
        let mut best_q = lo;
        let mut best_a = objective(lo);
        for i in 1..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let a = objective(x);
            if a < best_a {
                best_a = a;
                best_q = x;
            }
        }
        let span = (hi - lo) / steps as f64;
        let (refined_q, refined_a) = golden_section(&objective, best_q - span, best_q + span);
        if refined_a < best_a {
            refined_q
        } else {
            best_q
        }
    }

    #[test]
    fn line_search_agrees_with_the_grid_oracle() {
        let cases: [&[f64]; 4] = [
            &[2.0, 1.0, -1.0],
            &[1.0, 3.0, -0.5, 0.25],
            &[-2.0, -1.5, 4.0],
            &[0.1, 0.2, 0.3],
        ];
        for q in cases {
            let d23 = vec![1.0; q.len()];
            let expected = oracle_current(q, &d23, -4.0, 4.0);
            let got = optimal_added_current(q, &d23);
            assert!(
                (got - expected).abs() <= 1e-6,
                "q={q:?}: got {got}, oracle {expected}"
            );
            // The optimum sits at a zero crossing.
            assert!(
                q.iter().any(|&qi| (qi + got).abs() <= 1e-9),
                "q={q:?}: {got} is not a crossing"
            );
        }
    }

    #[test]
    fn loop_current_zeroes_an_edge_of_the_triangle() {
        let net = triangle_free();
        let kappa = Conductances::uniform(&net, 1.0);
        // Oriented flows (2, 1, -1) along the walk 0 -> 1 -> 2 -> 0; the
        // stored flow on edge (0,2) is +1 because the walk traverses it
        // backwards.
        let flows = vec![2.0, 1.0, 1.0];
        let cycle = triangle_cycle();
        let m_loop = walk_material(&net, &kappa, &cycle);
        let (new_flows, new_kappa) =
            loop_current_minimize(&net, &kappa, &flows, &cycle, m_loop).unwrap();
        // The grid oracle picks the crossing Q = -1, zeroing the middle
        // edge: oriented flows become (1, 0, -2).
        assert_eq!(new_flows[1], 0.0);
        assert_eq!(new_kappa[1], 0.0);
        assert_relative_eq!(new_flows[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(new_flows[2], 2.0, max_relative = 1e-12);
        // Loop material is preserved by the refit.
        assert_relative_eq!(
            walk_material(&net, &new_kappa, &cycle),
            m_loop,
            max_relative = 1e-12
        );
        // The loop objective strictly decreased.
        let d_loop = |q: &[f64], k: &Conductances| -> f64 {
            (0..3).map(|e| q[e] * q[e] / k[e].max(f64::MIN_POSITIVE)).sum()
        };
        assert!(d_loop(&new_flows, &new_kappa) < d_loop(&flows, &kappa));
    }

    #[test]
    fn constant_loop_flow_is_rejected() {
        let net = triangle_free();
        let kappa = Conductances::uniform(&net, 1.0);
        // Circulation: oriented flows (1, 1, 1).
        let flows = vec![1.0, 1.0, -1.0];
        let cycle = triangle_cycle();
        assert!(matches!(
            loop_current_minimize(&net, &kappa, &flows, &cycle, 3.0),
            Err(OptimizeError::ConstantLoopFlow)
        ));
    }

    #[test]
    fn short_walks_are_not_loops() {
        let net = NetworkBuilder::new(3).edge(0, 1).edge(1, 2).build().unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![1.0, -1.0];
        let walk = vec![OrientedEdge::new(0, true), OrientedEdge::new(1, true)];
        assert!(matches!(
            loop_current_minimize(&net, &kappa, &flows, &walk, 2.0),
            Err(OptimizeError::InvalidMove(_))
        ));
    }

    fn fan_with_equal_sinks() -> Network {
        NetworkBuilder::new(3)
            .edge(0, 2)
            .edge(1, 2)
            .pressure(0, 0.0)
            .pressure(1, 0.0)
            .inflow(2, 1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn constant_path_flow_is_cancelled() {
        let net = fan_with_equal_sinks();
        let kappa = Conductances::uniform(&net, 1.0);
        // Walk 0 -> 2 -> 1: edge 0 forward, edge 1 backward. A constant
        // oriented flow c means stored flows (c, -c).
        let c = 0.75;
        let flows = vec![c, -c];
        let path = vec![OrientedEdge::new(0, true), OrientedEdge::new(1, false)];
        let (new_flows, new_kappa) = path_current_minimize(&net, &kappa, &flows, &path).unwrap();
        assert_eq!(new_flows, vec![0.0, 0.0]);
        assert_eq!(new_kappa.values(), &[0.0, 0.0]);
    }

    #[test]
    fn nonconstant_path_zeroes_one_edge() {
        // Interior vertex fed by a third edge, so the path flows differ.
        let net = NetworkBuilder::new(4)
            .edge(0, 2)
            .edge(1, 2)
            .edge(2, 3)
            .pressure(0, 0.0)
            .pressure(1, 0.0)
            .inflow(3, 1.0)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        // Oriented path flows (2, 1) along 0 -> 2 -> 1; stored (-2, 1) plus
        // the feeding edge carrying the balance.
        let flows = vec![-2.0, 1.0, -1.0];
        let path = vec![OrientedEdge::new(0, false), OrientedEdge::new(1, false)];
        let (new_flows, new_kappa) = path_current_minimize(&net, &kappa, &flows, &path).unwrap();
        let zeroed = (new_flows[0] == 0.0) ^ (new_flows[1] == 0.0);
        assert!(zeroed, "exactly one path edge should be zeroed: {new_flows:?}");
        let dead = if new_flows[0] == 0.0 { 0 } else { 1 };
        assert_eq!(new_kappa[dead], 0.0);
        // Mass conservation at the interior vertex is untouched.
        assert_relative_eq!(net.outflow(&new_flows, 2), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_edge_path_is_cancelled() {
        let net = NetworkBuilder::new(2)
            .edge(0, 1)
            .pressure(0, 1.0)
            .pressure(1, 1.0)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 2.0);
        let flows = vec![0.5];
        let path = vec![OrientedEdge::new(0, true)];
        let (new_flows, new_kappa) = path_current_minimize(&net, &kappa, &flows, &path).unwrap();
        assert_eq!(new_flows, vec![0.0]);
        assert_eq!(new_kappa.values(), &[0.0]);
    }

    #[test]
    fn mismatched_endpoint_pressures_are_rejected() {
        let net = NetworkBuilder::new(3)
            .edge(0, 2)
            .edge(1, 2)
            .pressure(0, 0.0)
            .pressure(1, 1.0)
            .inflow(2, 1.0)
            .build()
            .unwrap();
        let kappa = Conductances::uniform(&net, 1.0);
        let flows = vec![-1.0, 0.5];
        let path = vec![OrientedEdge::new(0, false), OrientedEdge::new(1, false)];
        assert!(matches!(
            path_current_minimize(&net, &kappa, &flows, &path),
            Err(OptimizeError::EndpointPressureMismatch { a: 0, b: 1 })
        ));
        // The pressure-free variant accepts the same walk.
        assert!(dirichlet_path_current(&net, &kappa, &flows, &path).is_ok());
    }

    #[test]
    fn relax_is_idempotent_on_kirchhoff_flows() {
        let net = fan_with_equal_sinks();
        let kappa = Conductances::new(&net, vec![1.0, 3.0]).unwrap();
        let first = relax_flows(&net, &kappa).unwrap();
        let second = relax_flows(&net, &kappa).unwrap();
        assert_eq!(first.flows, second.flows);
    }
}
