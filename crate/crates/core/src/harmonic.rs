//! Discrete energy minimisation on weighted graphs with NPC targets.
//!
//! Maps assign a target point (a Euclidean vector or a building norm) to each
//! vertex; the energy of a map is the weighted sum of squared distances along
//! edges, twisted by a group representation in the equivariant case.  The
//! deterministic solver sweeps vertices in ascending index order and replaces
//! each value by the weighted center of mass of its (pulled-back) neighbours,
//! accepting a step only if the exact local energy does not increase.
//!
//! Iterates are kept inside bounded arithmetic by snapping coordinates to a
//! dyadic grid far below every tolerance in use; the acceptance guard keeps
//! energy monotone under exact comparison regardless of rounding.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::monodromy::{GroupRep, Word};
use crate::norms::{self, round_dyadic, DiagNorm};
use crate::scalars::Rat;

/// Denominator cap (in bits) for solver iterates.
const SOLVER_ROUND_BITS: u32 = 128;

/// An undirected edge with a positive weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: Rat,
}

/// A finite connected weighted graph, optionally with a boundary.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    vertex_count: usize,
    edges: Vec<Edge>,
    boundary: Vec<usize>,
}

impl WeightedGraph {
    pub fn new(vertex_count: usize, edges: Vec<Edge>, boundary: Vec<usize>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        for e in &edges {
            if e.from >= vertex_count || e.to >= vertex_count {
                return Err(Error::invalid("edge endpoint out of range"));
            }
            if !e.weight.is_positive() {
                return Err(Error::invalid("edge weights must be positive"));
            }
        }
        let mut boundary = boundary;
        boundary.sort_unstable();
        boundary.dedup();
        if boundary.iter().any(|&v| v >= vertex_count) {
            return Err(Error::invalid("boundary vertex out of range"));
        }
        if !boundary.is_empty() && edges.iter().any(|e| e.from == e.to) {
            return Err(Error::invalid("self-loops are not allowed with a boundary"));
        }
        let g = WeightedGraph {
            vertex_count,
            edges,
            boundary,
        };
        if !g.is_connected() {
            return Err(Error::invalid("graph must be connected"));
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.vertex_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary.binary_search(&v).is_ok()
    }

    pub fn interior(&self) -> Vec<usize> {
        (0..self.vertex_count)
            .filter(|v| !self.is_boundary(*v))
            .collect()
    }
}

/// A weighted graph whose edges carry words in the generators of a
/// representation; no boundary.
#[derive(Clone, Debug)]
pub struct VoltageGraph {
    graph: WeightedGraph,
    labels: Vec<Word>,
}

impl VoltageGraph {
    pub fn new(graph: WeightedGraph, labels: Vec<Word>) -> Result<Self> {
        if !graph.boundary().is_empty() {
            return Err(Error::invalid("voltage graphs carry no boundary"));
        }
        if labels.len() != graph.edges().len() {
            return Err(Error::mismatch("one word label per edge"));
        }
        for w in &labels {
            if !crate::monodromy::word_is_reduced(w) {
                return Err(Error::invalid("edge labels must be reduced words"));
            }
        }
        Ok(VoltageGraph { graph, labels })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn labels(&self) -> &[Word] {
        &self.labels
    }
}

/// A point of the target space.
#[derive(Clone, Debug)]
pub enum TargetPoint {
    Euclid(Vec<Rat>),
    Building(DiagNorm),
}

impl TargetPoint {
    pub fn d2_sq(&self, other: &TargetPoint) -> Result<Rat> {
        match (self, other) {
            (TargetPoint::Euclid(a), TargetPoint::Euclid(b)) => {
                if a.len() != b.len() {
                    return Err(Error::mismatch("euclidean dimensions differ"));
                }
                Ok(a.iter()
                    .zip(b)
                    .map(|(x, y)| {
                        let d = x - y;
                        &d * &d
                    })
                    .sum())
            }
            (TargetPoint::Building(a), TargetPoint::Building(b)) => norms::d2_sq(a, b),
            _ => Err(Error::mismatch("mixed target kinds")),
        }
    }

    fn round(&self) -> TargetPoint {
        match self {
            TargetPoint::Euclid(v) => TargetPoint::Euclid(
                v.iter().map(|x| round_dyadic(x, SOLVER_ROUND_BITS)).collect(),
            ),
            TargetPoint::Building(n) => {
                let ws = n
                    .weights()
                    .iter()
                    .map(|w| round_dyadic(w, SOLVER_ROUND_BITS))
                    .collect();
                TargetPoint::Building(
                    DiagNorm::new(n.place(), n.basis().clone(), ws)
                        .expect("rounding preserves the basis"),
                )
            }
        }
    }
}

/// Assignment of target points to vertices, with the last sweep displacement.
#[derive(Clone, Debug)]
pub struct EquivMapState {
    pub values: Vec<TargetPoint>,
    /// Maximum per-vertex squared displacement of the last completed sweep.
    pub residual: Option<Rat>,
}

impl EquivMapState {
    pub fn new(values: Vec<TargetPoint>) -> Self {
        EquivMapState {
            values,
            residual: None,
        }
    }

    pub fn constant(n: usize, p: TargetPoint) -> Self {
        EquivMapState {
            values: vec![p; n],
            residual: None,
        }
    }
}

fn check_state(graph: &WeightedGraph, state: &EquivMapState) -> Result<()> {
    if state.values.len() != graph.vertex_count() {
        return Err(Error::mismatch("one value per vertex"));
    }
    Ok(())
}

/// Exact Dirichlet energy: `sum_e w_e d(u(from), u(to))^2`.
pub fn energy(graph: &WeightedGraph, state: &EquivMapState) -> Result<Rat> {
    check_state(graph, state)?;
    let mut acc = Rat::zero();
    for e in graph.edges() {
        acc += &e.weight * state.values[e.from].d2_sq(&state.values[e.to])?;
    }
    Ok(acc)
}

/// Exact twisted energy: `sum_e w_e d(u(to), rho(g_e) u(from))^2`.
pub fn energy_equivariant(
    vg: &VoltageGraph,
    rep: &GroupRep<Rat>,
    state: &EquivMapState,
) -> Result<Rat> {
    check_state(vg.graph(), state)?;
    let mut acc = Rat::zero();
    for (e, label) in vg.graph().edges().iter().zip(vg.labels()) {
        let g = rep.eval(label)?;
        let moved = apply_isometry(&g, &state.values[e.from])?;
        acc += &e.weight * state.values[e.to].d2_sq(&moved)?;
    }
    Ok(acc)
}

fn apply_isometry(g: &Matrix<Rat>, p: &TargetPoint) -> Result<TargetPoint> {
    match p {
        TargetPoint::Building(n) => Ok(TargetPoint::Building(n.act(g)?)),
        TargetPoint::Euclid(_) => Err(Error::mismatch(
            "equivariant solves need building targets",
        )),
    }
}

/// The neighbour values a vertex sees, after pulling back along edge labels.
fn neighbour_values(
    graph: &WeightedGraph,
    twist: Option<(&VoltageGraph, &GroupRep<Rat>)>,
    state: &EquivMapState,
    v: usize,
) -> Result<Vec<(TargetPoint, Rat)>> {
    let mut out = Vec::new();
    for (idx, e) in graph.edges().iter().enumerate() {
        match twist {
            None => {
                if e.from == v {
                    out.push((state.values[e.to].clone(), e.weight.clone()));
                } else if e.to == v {
                    out.push((state.values[e.from].clone(), e.weight.clone()));
                }
            }
            Some((vg, rep)) => {
                let g = rep.eval(&vg.labels()[idx])?;
                if e.from == v && e.to == v {
                    // loop: the vertex sees itself through the label and its inverse
                    out.push((apply_isometry(&g, &state.values[v])?, e.weight.clone()));
                    let g_inv = g.inverse().expect("representation matrices are invertible");
                    out.push((apply_isometry(&g_inv, &state.values[v])?, e.weight.clone()));
                } else if e.to == v {
                    out.push((apply_isometry(&g, &state.values[e.from])?, e.weight.clone()));
                } else if e.from == v {
                    let g_inv = g.inverse().expect("representation matrices are invertible");
                    out.push((apply_isometry(&g_inv, &state.values[e.to])?, e.weight.clone()));
                }
            }
        }
    }
    Ok(out)
}

/// Local energy contribution of the edges touching `v`, with `z` in place of
/// the current value at `v`.
fn local_energy(
    graph: &WeightedGraph,
    twist: Option<(&VoltageGraph, &GroupRep<Rat>)>,
    state: &EquivMapState,
    v: usize,
    z: &TargetPoint,
) -> Result<Rat> {
    let mut acc = Rat::zero();
    for (idx, e) in graph.edges().iter().enumerate() {
        if e.from != v && e.to != v {
            continue;
        }
        let term = match twist {
            None => {
                let other = if e.from == v { e.to } else { e.from };
                z.d2_sq(&state.values[other])?
            }
            Some((vg, rep)) => {
                let g = rep.eval(&vg.labels()[idx])?;
                if e.from == v && e.to == v {
                    z.d2_sq(&apply_isometry(&g, z)?)?
                } else if e.to == v {
                    z.d2_sq(&apply_isometry(&g, &state.values[e.from])?)?
                } else {
                    apply_isometry(&g, z)?.d2_sq(&state.values[e.to])?
                }
            }
        };
        acc += &e.weight * term;
    }
    Ok(acc)
}

/// Weighted center of mass of target points; exact for Euclidean targets and
/// for norms sharing an apartment, iterative otherwise.
fn target_center_of_mass(
    points: &[(TargetPoint, Rat)],
    tol: &Rat,
) -> Result<TargetPoint> {
    match &points[0].0 {
        TargetPoint::Euclid(first) => {
            let dim = first.len();
            let mut total = Rat::zero();
            let mut acc = vec![Rat::zero(); dim];
            for (p, m) in points {
                let TargetPoint::Euclid(v) = p else {
                    return Err(Error::mismatch("mixed target kinds"));
                };
                if v.len() != dim {
                    return Err(Error::mismatch("euclidean dimensions differ"));
                }
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += m * x;
                }
                total += m;
            }
            for a in acc.iter_mut() {
                *a /= &total;
            }
            Ok(TargetPoint::Euclid(acc))
        }
        TargetPoint::Building(_) => {
            let mut norms_in = Vec::with_capacity(points.len());
            let mut masses = Vec::with_capacity(points.len());
            for (p, m) in points {
                let TargetPoint::Building(n) = p else {
                    return Err(Error::mismatch("mixed target kinds"));
                };
                norms_in.push(n.clone());
                masses.push(m.clone());
            }
            let bary = norms::center_of_mass(&norms_in, &masses, tol, 256)?;
            Ok(TargetPoint::Building(bary.point))
        }
    }
}

/// One relaxation at `v`: replaces the value by the weighted center of mass
/// of the pulled-back neighbour values, guarded so the exact local energy
/// never increases.  Boundary vertices cannot be relaxed in Dirichlet mode.
pub fn vertex_relax(
    graph: &WeightedGraph,
    twist: Option<(&VoltageGraph, &GroupRep<Rat>)>,
    state: &EquivMapState,
    v: usize,
    tol: &Rat,
) -> Result<EquivMapState> {
    check_state(graph, state)?;
    if twist.is_none() && graph.is_boundary(v) {
        return Err(Error::precondition(format!(
            "vertex {v} lies on the boundary"
        )));
    }
    let neighbours = neighbour_values(graph, twist, state, v)?;
    if neighbours.is_empty() {
        return Ok(state.clone());
    }
    let candidate = target_center_of_mass(&neighbours, tol)?.round();
    let old_local = local_energy(graph, twist, state, v, &state.values[v])?;
    let new_local = local_energy(graph, twist, state, v, &candidate)?;
    let mut out = state.clone();
    if new_local <= old_local {
        out.values[v] = candidate;
    }
    Ok(out)
}

/// Why a solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxSweeps,
}

/// Outcome of a solver run: final state, exact energy, per-sweep energies.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub state: EquivMapState,
    pub energy: Rat,
    pub sweeps: usize,
    pub termination: Termination,
    /// Exact energy after each sweep (starting value first).
    pub energies: Vec<Rat>,
}

/// Gauss–Seidel sweeps over interior vertices in ascending order until the
/// sweep displacement (max over vertices of squared change) drops below
/// `tol^2` or `max_sweeps` is reached.  Energy never increases, exactly.
pub fn solve_dirichlet(
    graph: &WeightedGraph,
    boundary_values: &BTreeMap<usize, TargetPoint>,
    tol: &Rat,
    max_sweeps: usize,
) -> Result<SolveReport> {
    if graph.boundary().is_empty() {
        return Err(Error::precondition("Dirichlet solve needs a boundary"));
    }
    if !tol.is_positive() {
        return Err(Error::precondition("tolerance must be positive"));
    }
    for &b in graph.boundary() {
        if !boundary_values.contains_key(&b) {
            return Err(Error::precondition(format!(
                "missing boundary value for vertex {b}"
            )));
        }
    }
    let first = boundary_values
        .values()
        .next()
        .ok_or_else(|| Error::precondition("empty boundary"))?;
    let mut state = EquivMapState::constant(graph.vertex_count(), first.clone());
    for (&v, p) in boundary_values {
        if !graph.is_boundary(v) {
            return Err(Error::precondition(format!(
                "value given for non-boundary vertex {v}"
            )));
        }
        state.values[v] = p.clone();
    }
    let interior = graph.interior();
    run_sweeps(graph, None, state, &interior, tol, max_sweeps)
}

/// Equivariant sweeps: every vertex relaxes against the pulled-back values of
/// its neighbours.  Minimisers need not be unique; the energy value is the
/// contract.
pub fn solve_equivariant(
    vg: &VoltageGraph,
    rep: &GroupRep<Rat>,
    init: EquivMapState,
    tol: &Rat,
    max_sweeps: usize,
) -> Result<SolveReport> {
    if !tol.is_positive() {
        return Err(Error::precondition("tolerance must be positive"));
    }
    check_state(vg.graph(), &init)?;
    let all: Vec<usize> = (0..vg.graph().vertex_count()).collect();
    run_sweeps(vg.graph(), Some((vg, rep)), init, &all, tol, max_sweeps)
}

fn run_sweeps(
    graph: &WeightedGraph,
    twist: Option<(&VoltageGraph, &GroupRep<Rat>)>,
    mut state: EquivMapState,
    active: &[usize],
    tol: &Rat,
    max_sweeps: usize,
) -> Result<SolveReport> {
    let tol_sq = tol * tol;
    let inner_tol = tol / crate::scalars::rat(4);
    let mut energies = Vec::new();
    let current_energy = |s: &EquivMapState| -> Result<Rat> {
        match twist {
            None => energy(graph, s),
            Some((vg, rep)) => energy_equivariant(vg, rep, s),
        }
    };
    energies.push(current_energy(&state)?);
    let mut sweeps = 0usize;
    let mut termination = Termination::MaxSweeps;
    while sweeps < max_sweeps {
        let mut max_disp = Rat::zero();
        for &v in active {
            let neighbours = neighbour_values(graph, twist, &state, v)?;
            if neighbours.is_empty() {
                continue;
            }
            let candidate = target_center_of_mass(&neighbours, &inner_tol)?.round();
            let old_local = local_energy(graph, twist, &state, v, &state.values[v])?;
            let new_local = local_energy(graph, twist, &state, v, &candidate)?;
            if new_local <= old_local {
                let disp = state.values[v].d2_sq(&candidate)?;
                if disp > max_disp {
                    max_disp = disp.clone();
                }
                state.values[v] = candidate;
            }
        }
        sweeps += 1;
        energies.push(current_energy(&state)?);
        state.residual = Some(max_disp.clone());
        if max_disp < tol_sq {
            termination = Termination::Converged;
            break;
        }
    }
    let final_energy = energies.last().unwrap().clone();
    Ok(SolveReport {
        state,
        energy: final_energy,
        sweeps,
        termination,
        energies,
    })
}

/// Jacobi-style sweep: all active vertices relax simultaneously against the
/// previous state.  With the `parallel` feature the per-vertex work runs on a
/// rayon pool; otherwise it runs sequentially.  No monotonicity guarantee —
/// this variant exists for throughput comparisons and is excluded from the
/// deterministic golden contracts.
pub fn solve_dirichlet_jacobi(
    graph: &WeightedGraph,
    boundary_values: &BTreeMap<usize, TargetPoint>,
    tol: &Rat,
    max_sweeps: usize,
) -> Result<SolveReport> {
    if graph.boundary().is_empty() {
        return Err(Error::precondition("Dirichlet solve needs a boundary"));
    }
    if !tol.is_positive() {
        return Err(Error::precondition("tolerance must be positive"));
    }
    let first = boundary_values
        .values()
        .next()
        .ok_or_else(|| Error::precondition("empty boundary"))?;
    let mut state = EquivMapState::constant(graph.vertex_count(), first.clone());
    for (&v, p) in boundary_values {
        state.values[v] = p.clone();
    }
    let interior = graph.interior();
    let tol_sq = tol * tol;
    let inner_tol = tol / crate::scalars::rat(4);
    let mut energies = vec![energy(graph, &state)?];
    let mut sweeps = 0usize;
    let mut termination = Termination::MaxSweeps;
    while sweeps < max_sweeps {
        let relax_one = |&v: &usize| -> Result<(usize, TargetPoint)> {
            let neighbours = neighbour_values(graph, None, &state, v)?;
            if neighbours.is_empty() {
                return Ok((v, state.values[v].clone()));
            }
            Ok((v, target_center_of_mass(&neighbours, &inner_tol)?.round()))
        };
        let updates: Result<Vec<(usize, TargetPoint)>> =
            crate::batch::map_collect(&interior, relax_one);
        let mut max_disp = Rat::zero();
        for (v, p) in updates? {
            let disp = state.values[v].d2_sq(&p)?;
            if disp > max_disp {
                max_disp = disp;
            }
            state.values[v] = p;
        }
        sweeps += 1;
        energies.push(energy(graph, &state)?);
        state.residual = Some(max_disp.clone());
        if max_disp < tol_sq {
            termination = Termination::Converged;
            break;
        }
    }
    let final_energy = energies.last().unwrap().clone();
    Ok(SolveReport {
        state,
        energy: final_energy,
        sweeps,
        termination,
        energies,
    })
}

/// Per-vertex squared distances between two states on the same graph.
pub fn distance_field(u1: &EquivMapState, u2: &EquivMapState) -> Result<Vec<Rat>> {
    if u1.values.len() != u2.values.len() {
        return Err(Error::mismatch("states of different vertex count"));
    }
    u1.values
        .iter()
        .zip(&u2.values)
        .map(|(a, b)| a.d2_sq(b))
        .collect()
}

/// Per-edge log-norm increments of a flat orthogonal frame, with their
/// elementary symmetric functions.
#[derive(Clone, Debug)]
pub struct CharacteristicData {
    pub edges: Vec<EdgeIncrements>,
}

#[derive(Clone, Debug)]
pub struct EdgeIncrements {
    pub edge: usize,
    /// Sorted increment multiset, one entry per frame vector.
    pub increments: Vec<Rat>,
    /// Elementary symmetric functions `sigma_1..sigma_r` of the increments.
    pub sigma: Vec<Rat>,
}

/// Checks the frame (orthogonal at every vertex, flat across edges) and
/// collects, per edge, the multiset of log-norm increments of the frame
/// vectors together with their symmetric functions.
pub fn log_norm_increments(
    vg: &VoltageGraph,
    rep: &GroupRep<Rat>,
    state: &EquivMapState,
    frames: &[Matrix<Rat>],
) -> Result<CharacteristicData> {
    let graph = vg.graph();
    check_state(graph, state)?;
    if frames.len() != graph.vertex_count() {
        return Err(Error::mismatch("one frame per vertex"));
    }
    let mut vertex_norms = Vec::with_capacity(graph.vertex_count());
    for (v, value) in state.values.iter().enumerate() {
        let TargetPoint::Building(n) = value else {
            return Err(Error::mismatch("characteristic data needs building targets"));
        };
        let frame = &frames[v];
        let cols: Vec<Vec<Rat>> = (0..frame.cols()).map(|c| frame.col(c)).collect();
        if cols.len() != n.dim() {
            return Err(Error::mismatch(format!(
                "frame at vertex {v} is not a full basis"
            )));
        }
        if !n.is_orthogonal_family(&cols)? {
            return Err(Error::precondition(format!(
                "frame not orthogonal at vertex {v}"
            )));
        }
        vertex_norms.push(n.clone());
    }
    let mut out = Vec::with_capacity(graph.edges().len());
    for (idx, e) in graph.edges().iter().enumerate() {
        let g = rep.eval(&vg.labels()[idx])?;
        let moved_tail = g.mul(&frames[e.from]);
        // stored frames must agree with parallel transport; around a loop the
        // transported frame is compared against the same stored frame, so the
        // constraint is vacuous there and the transport itself is used
        if e.from != e.to && moved_tail != frames[e.to] {
            return Err(Error::precondition(format!(
                "frame not flat across edge {idx}"
            )));
        }
        let r = frames[e.from].cols();
        let mut increments = Vec::with_capacity(r);
        for c in 0..r {
            let head_val = vertex_norms[e.to].eval(&moved_tail.col(c))?;
            let tail_val = vertex_norms[e.from].eval(&frames[e.from].col(c))?;
            match (head_val, tail_val) {
                (crate::scalars::LogMag::Finite(h), crate::scalars::LogMag::Finite(t)) => {
                    increments.push(h - t)
                }
                _ => return Err(Error::internal("frame vector of norm zero")),
            }
        }
        increments.sort();
        let sigma = elementary_symmetric(&increments);
        out.push(EdgeIncrements {
            edge: idx,
            increments,
            sigma,
        });
    }
    Ok(CharacteristicData { edges: out })
}

/// `sigma_1..sigma_n` of the given values, by incremental expansion of
/// `prod (1 + x_i t)`.
pub fn elementary_symmetric(values: &[Rat]) -> Vec<Rat> {
    let mut sigma = vec![Rat::zero(); values.len()];
    let mut poly: Vec<Rat> = vec![Rat::one()];
    for x in values {
        let mut next = vec![Rat::zero(); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c * x;
        }
        poly = next;
    }
    for (i, s) in sigma.iter_mut().enumerate() {
        *s = poly[i + 1].clone();
    }
    sigma
}
