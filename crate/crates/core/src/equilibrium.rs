//! The solve pipeline: one linear program ties the per-round placement
//! flows together with inter-round compatibility constraints; its optimum
//! is uncrossed, peeled into interval strategies top path by top path, and
//! concretized into integer patrol paths.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::daygraph::{build_day_graph, CanonicalFlow, DayGraph, Vertex};
use crate::lp::{self, LpError, LpModel, Relation};
use crate::model::{Mode, MixedStrategy, ProblemInstance, PureStrategy};
use crate::partition::{build_partitions, PartitionSet};
use crate::scalar::{min_s, Int, Rational, Scalar};

/// One pure strategy at the interval level: `paths[k][t-1]` is the interval
/// row patrol `k` occupies at round `t`. Rows are sorted across patrols at
/// every round.
pub type IntervalStrategy = Vec<Vec<usize>>;

#[derive(Debug, Clone)]
pub struct EquilibriumResult<S: Scalar> {
    /// The game value: the attacker's best expected payoff.
    pub value: S,
    /// Post-uncrossing optimal flows, one per round.
    pub flows: Vec<CanonicalFlow<S>>,
    pub interval_support: Vec<(IntervalStrategy, S)>,
    pub strategy: MixedStrategy<S>,
}

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("linear program failed: {0}")]
    Lp(#[from] LpError),
    #[error("continuous instances must be rescaled before the discrete solve")]
    NotDiscrete,
    #[error("top-most paths of rounds {round} and {} are incompatible at patrol {patrol}", round + 1)]
    IncompatibleTopPaths { round: usize, patrol: usize },
    #[error("no flow mass left to peel")]
    ExhaustedFlow,
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Where each variable of the assembled LP lives.
#[derive(Debug, Clone)]
pub struct LpLayout {
    /// `round_offsets[t-1] + edge_id` is the LP variable of that edge flow.
    pub round_offsets: Vec<usize>,
    /// Variable index of the attacker-payoff bound `u`.
    pub u: usize,
}

/// Assembles the full equilibrium LP with compatibility constraints for
/// every consecutive row range, exactly as specified.
pub fn assemble_lp(
    instance: &ProblemInstance,
    partitions: &PartitionSet,
    graphs: &[DayGraph],
) -> (LpModel, LpLayout) {
    assemble(instance, partitions, graphs, false)
}

/// As [`assemble_lp`], but drops compatibility rows that are implied by a
/// wider row with the same feasible window (sound because flows are
/// non-negative). The reachable polytope over the flow variables is
/// unchanged; the LP just gets much smaller.
pub fn assemble_lp_reduced(
    instance: &ProblemInstance,
    partitions: &PartitionSet,
    graphs: &[DayGraph],
) -> (LpModel, LpLayout) {
    assemble(instance, partitions, graphs, true)
}

fn assemble(
    instance: &ProblemInstance,
    partitions: &PartitionSet,
    graphs: &[DayGraph],
    reduce_compat: bool,
) -> (LpModel, LpLayout) {
    let horizon = instance.horizon;
    debug_assert_eq!(graphs.len(), horizon);

    let mut round_offsets = Vec::with_capacity(horizon);
    let mut next = 0usize;
    for g in graphs {
        round_offsets.push(next);
        next += g.edges.len();
    }
    let u = next;
    let layout = LpLayout { round_offsets, u };
    let mut model = LpModel::new(u + 1);

    let one = Rational::one();
    for (ti, g) in graphs.iter().enumerate() {
        let off = layout.round_offsets[ti];
        // Conservation at every grid vertex.
        for col in 0..g.cols {
            for row in 0..g.rows {
                let v = Vertex::Grid { col, row };
                let mut coeffs: Vec<(usize, Rational)> = Vec::new();
                for e in g.in_edges(v) {
                    coeffs.push((off + e, one.clone()));
                }
                for e in g.out_edges(v) {
                    coeffs.push((off + e, -one.clone()));
                }
                model.add_constraint(coeffs, Relation::Eq, Rational::zero());
            }
        }
    }
    for (ti, g) in graphs.iter().enumerate() {
        let off = layout.round_offsets[ti];
        let coeffs = (0..g.rows)
            .map(|y| (off + g.source_edge(y), one.clone()))
            .collect();
        model.add_constraint(coeffs, Relation::Eq, one.clone());
    }
    for (ti, g) in graphs.iter().enumerate() {
        let off = layout.round_offsets[ti];
        let coeffs = (0..g.rows)
            .map(|y| (off + g.sink_edge(y), one.clone()))
            .collect();
        model.add_constraint(coeffs, Relation::Eq, one.clone());
    }

    // Attacker payoff per (round, target) stays below u.
    for (ti, g) in graphs.iter().enumerate() {
        let off = layout.round_offsets[ti];
        for track in &instance.targets {
            let weight = &track.weights[ti];
            let mut coeffs: Vec<(usize, Rational)> = g
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.uncovered.contains(&track.id))
                .map(|(eid, _)| (off + eid, weight.clone()))
                .collect();
            coeffs.push((layout.u, -one.clone()));
            model.add_constraint(coeffs, Relation::Le, Rational::zero());
        }
    }

    // Compatibility: mass in a row range cannot exceed the mass of its
    // reachable rows one round later, per patrol column.
    for t in 1..horizon {
        let g = &graphs[t - 1];
        let g_next = &graphs[t];
        let off = layout.round_offsets[t - 1];
        let off_next = layout.round_offsets[t];
        let rows = g.rows;
        let window = |y: usize| partitions.feasible_set(t, y, y).expect("nonempty window");
        let starts: Vec<usize> = if reduce_compat {
            (0..rows)
                .filter(|&i| i == 0 || window(i).0 > window(i - 1).0)
                .collect()
        } else {
            (0..rows).collect()
        };
        let ends: Vec<usize> = if reduce_compat {
            (0..rows)
                .filter(|&j| j + 1 == rows || window(j).1 < window(j + 1).1)
                .collect()
        } else {
            (0..rows).collect()
        };
        for col in 0..g.cols {
            for &i in &starts {
                for &j in ends.iter().filter(|&&j| j >= i) {
                    let (lo, hi) = partitions.feasible_set(t, i, j).expect("nonempty window");
                    let mut coeffs: Vec<(usize, Rational)> = Vec::new();
                    for y in i..=j {
                        for e in g.out_edges(Vertex::Grid { col, row: y }) {
                            coeffs.push((off + e, one.clone()));
                        }
                    }
                    for y in lo..=hi {
                        for e in g_next.out_edges(Vertex::Grid { col, row: y }) {
                            coeffs.push((off_next + e, -one.clone()));
                        }
                    }
                    model.add_constraint(coeffs, Relation::Le, Rational::zero());
                }
            }
        }
    }

    model.objective = vec![(layout.u, one)];
    (model, layout)
}

/// Solves the assembled LP and splits the optimum into per-round flows.
pub fn solve_lp<S: Scalar>(
    model: &LpModel,
    layout: &LpLayout,
    graphs: &[DayGraph],
) -> Result<(S, Vec<CanonicalFlow<S>>), EquilibriumError> {
    let solution = match lp::minimize::<S>(model) {
        Ok(s) => s,
        // The all-patrols-in-the-lowest-interval flow is always feasible,
        // and u is bounded below by zero, so neither failure can occur on a
        // well-formed model.
        Err(LpError::Infeasible) | Err(LpError::Unbounded) => {
            unreachable!("equilibrium LP is always feasible and bounded")
        }
        Err(e) => return Err(e.into()),
    };
    let mut flows = Vec::with_capacity(graphs.len());
    for (ti, g) in graphs.iter().enumerate() {
        let off = layout.round_offsets[ti];
        let mut values = Vec::with_capacity(g.edges.len());
        for e in 0..g.edges.len() {
            let v = solution.values[off + e].clone();
            // Basic solutions are non-negative; float mode may carry dust.
            values.push(if v < S::zero() { S::zero() } else { v });
        }
        let flow = CanonicalFlow { values };
        if !flow.is_canonical(g) {
            return Err(EquilibriumError::Numerical(format!(
                "round {} flow violates conservation",
                g.round
            )));
        }
        flows.push(flow);
    }
    Ok((solution.values[layout.u].clone(), flows))
}

/// Two positive-flow edges in one column layer whose rows swap order.
/// `lower` starts strictly below `upper` and ends strictly above it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingPair {
    pub col: usize,
    pub lower: usize,
    pub upper: usize,
}

fn edge_rows(g: &DayGraph, e: usize) -> (usize, usize) {
    match (g.edges[e].from, g.edges[e].to) {
        (Vertex::Grid { row, .. }, Vertex::Grid { row: to, .. }) => (row, to),
        _ => unreachable!("crossing candidates are grid edges"),
    }
}

/// Finds the minimum crossing pair under the lexicographic order
/// (column, lower.from, lower.to, upper.to, upper.from), or `None`.
pub fn find_next_cross<S: Scalar>(g: &DayGraph, flow: &CanonicalFlow<S>) -> Option<CrossingPair> {
    for col in 0..g.cols.saturating_sub(1) {
        // Edge ids within a column are ordered by (from, to) already.
        let mut positive: Vec<(usize, usize, usize)> = Vec::new();
        for from in 0..g.rows {
            for to in from..g.rows {
                let e = g.grid_edge(col, from, to);
                if flow.values[e].is_pos() {
                    positive.push((e, from, to));
                }
            }
        }
        let mut best: Option<((usize, usize, usize, usize), CrossingPair)> = None;
        for (idx, &(e1, f1, t1)) in positive.iter().enumerate() {
            for &(e2, f2, t2) in &positive[idx + 1..] {
                if f2 > f1 && t2 < t1 {
                    let key = (f1, t1, t2, f2);
                    if best.as_ref().map_or(true, |(bk, _)| key < *bk) {
                        best = Some((key, CrossingPair { col, lower: e1, upper: e2 }));
                    }
                }
            }
        }
        if let Some((_, pair)) = best {
            return Some(pair);
        }
    }
    None
}

#[derive(Debug, Clone, Default)]
pub struct UncrossReport {
    /// Crossing resolutions performed per round.
    pub iterations: Vec<usize>,
}

/// Rewires crossing flows until none remain. Per-vertex through-flow is
/// preserved and no target's expected payoff increases.
pub fn resolve_crosses<S: Scalar>(
    graphs: &[DayGraph],
    flows: &mut [CanonicalFlow<S>],
) -> UncrossReport {
    let mut report = UncrossReport::default();
    for (g, flow) in graphs.iter().zip(flows.iter_mut()) {
        let e = g.edges.len();
        let pair_budget = e * (e - 1) / 2 + 1;
        let mut iterations = 0usize;
        while let Some(cross) = find_next_cross(g, flow) {
            let (f1, t1) = edge_rows(g, cross.lower);
            let (f2, t2) = edge_rows(g, cross.upper);
            let amount = min_s(
                flow.values[cross.lower].clone(),
                flow.values[cross.upper].clone(),
            );
            flow.values[cross.lower] = flow.values[cross.lower].clone() - amount.clone();
            flow.values[cross.upper] = flow.values[cross.upper].clone() - amount.clone();
            let straight_low = g.grid_edge(cross.col, f1, t2);
            let straight_high = g.grid_edge(cross.col, f2, t1);
            flow.values[straight_low] = flow.values[straight_low].clone() + amount.clone();
            flow.values[straight_high] = flow.values[straight_high].clone() + amount;
            iterations += 1;
            assert!(
                iterations <= pair_budget,
                "uncrossing exceeded the edge-pair budget in round {}",
                g.round
            );
        }
        report.iterations.push(iterations);
    }
    report
}

/// The uppermost source-to-sink path with positive flow everywhere:
/// greedily take the highest-row successor. Well-defined once the flow has
/// no crossings. Returns (edge ids, row per column, bottleneck size).
pub fn top_most_flow_path<S: Scalar>(
    g: &DayGraph,
    flow: &CanonicalFlow<S>,
) -> Result<(Vec<usize>, Vec<usize>, S), EquilibriumError> {
    if !flow.total_out_of_source(g).is_pos() {
        return Err(EquilibriumError::ExhaustedFlow);
    }
    let pick = |candidates: &mut dyn Iterator<Item = (usize, usize)>| -> Option<(usize, usize)> {
        // Highest row with flow above tolerance; in float mode fall back to
        // the highest row with any positive residue.
        let mut best: Option<(usize, usize)> = None;
        let mut fallback: Option<(usize, usize)> = None;
        for (e, row) in candidates {
            if flow.values[e].is_pos() && best.is_none_or(|(_, r)| row > r) {
                best = Some((e, row));
            }
            if flow.values[e] > S::zero() && fallback.is_none_or(|(_, r)| row > r) {
                fallback = Some((e, row));
            }
        }
        best.or(fallback)
    };

    let mut edges = Vec::with_capacity(g.cols + 1);
    let mut rows = Vec::with_capacity(g.cols);
    let (e0, row0) = pick(&mut (0..g.rows).map(|y| (g.source_edge(y), y)))
        .ok_or(EquilibriumError::ExhaustedFlow)?;
    edges.push(e0);
    rows.push(row0);
    let mut size = flow.values[e0].clone();
    for col in 0..g.cols - 1 {
        let here = rows[col];
        let (e, row) = pick(&mut (here..g.rows).map(|to| (g.grid_edge(col, here, to), to)))
            .ok_or_else(|| {
                EquilibriumError::Numerical(format!(
                    "flow vanished mid-path at round {} column {}",
                    g.round, col
                ))
            })?;
        edges.push(e);
        rows.push(row);
        size = min_s(size, flow.values[e].clone());
    }
    let sink = g.sink_edge(rows[g.cols - 1]);
    edges.push(sink);
    size = min_s(size, flow.values[sink].clone());
    Ok((edges, rows, size))
}

/// Peels compatible top-most paths off the per-round flows until the mass
/// is exhausted, yielding interval strategies with probabilities.
pub fn decompose_flows<S: Scalar>(
    partitions: &PartitionSet,
    graphs: &[DayGraph],
    flows: &[CanonicalFlow<S>],
) -> Result<Vec<(IntervalStrategy, S)>, EquilibriumError> {
    let horizon = graphs.len();
    let cols = graphs[0].cols;
    let mut flows: Vec<CanonicalFlow<S>> = flows.to_vec();
    let mut support: Vec<(IntervalStrategy, S)> = Vec::new();
    let peel_budget: usize = graphs.iter().map(|g| g.edges.len()).sum::<usize>() + 1;

    while flows[0].total_out_of_source(&graphs[0]).is_pos() {
        let mut edges_per_round = Vec::with_capacity(horizon);
        let mut rows_per_round: Vec<Vec<usize>> = Vec::with_capacity(horizon);
        let mut quantum: Option<S> = None;
        for (g, flow) in graphs.iter().zip(&flows) {
            let (edges, rows, size) = top_most_flow_path(g, flow)?;
            quantum = Some(match quantum {
                None => size,
                Some(q) => min_s(q, size),
            });
            edges_per_round.push(edges);
            rows_per_round.push(rows);
        }
        // Compatibility of consecutive top paths is guaranteed by the LP's
        // range constraints; a violation here is a bug.
        for t in 1..horizon {
            for k in 0..cols {
                let here = rows_per_round[t - 1][k];
                let (lo, hi) = partitions
                    .feasible_set(t, here, here)
                    .expect("nonempty window");
                let next = rows_per_round[t][k];
                if next < lo || next > hi {
                    return Err(EquilibriumError::IncompatibleTopPaths {
                        round: t,
                        patrol: k,
                    });
                }
            }
        }
        let q = quantum.expect("horizon >= 1");
        for (edges, flow) in edges_per_round.iter().zip(flows.iter_mut()) {
            for &e in edges {
                let left = flow.values[e].clone() - q.clone();
                // Exact mode hits zero exactly; float mode may leave dust.
                flow.values[e] = if left < S::zero() { S::zero() } else { left };
            }
        }
        let strategy: IntervalStrategy = (0..cols)
            .map(|k| (0..horizon).map(|t| rows_per_round[t][k]).collect())
            .collect();
        support.push((strategy, q));
        assert!(
            support.len() <= peel_budget,
            "decomposition exceeded the edge budget"
        );
    }
    Ok(support)
}

/// Picks the deterministic integer walk through an interval path: start at
/// the lowest integer, then clamp into each next interval. The partition
/// construction guarantees every clamped step obeys the speed limit.
pub fn concretize_strategy(
    strategy: &IntervalStrategy,
    partitions: &PartitionSet,
    space_max: &Int,
    speed_floor: &Int,
) -> PureStrategy {
    let horizon = partitions.per_round.len();
    let paths = strategy
        .iter()
        .map(|interval_path| {
            debug_assert_eq!(interval_path.len(), horizon);
            let mut path = Vec::with_capacity(horizon);
            let mut here = partitions.round(1).intervals[interval_path[0]]
                .lo_int
                .clone();
            path.push(here.clone());
            for t in 2..=horizon {
                let iv = &partitions.round(t).intervals[interval_path[t - 1]];
                let mut next = here.clone();
                if next < iv.lo_int {
                    next = iv.lo_int.clone();
                } else if next > iv.hi_int {
                    next = iv.hi_int.clone();
                }
                assert!(
                    (&next - &here).abs() <= *speed_floor,
                    "clamped walk broke the speed limit"
                );
                path.push(next.clone());
                here = next;
            }
            debug_assert!(path.iter().all(|m| !m.is_negative() && m <= space_max));
            path
        })
        .collect();
    PureStrategy { paths }
}

/// Full pipeline for a discrete instance.
pub fn solve<S: Scalar>(
    instance: &ProblemInstance,
) -> Result<EquilibriumResult<S>, EquilibriumError> {
    if instance.mode != Mode::Discrete || !instance.space_max.is_integer() {
        return Err(EquilibriumError::NotDiscrete);
    }
    let partitions = build_partitions(instance);
    let graphs: Vec<DayGraph> = (1..=instance.horizon)
        .map(|t| build_day_graph(instance, &partitions, t))
        .collect();
    let (model, layout) = assemble_lp_reduced(instance, &partitions, &graphs);
    let (value, mut flows) = solve_lp::<S>(&model, &layout, &graphs)?;
    resolve_crosses(&graphs, &mut flows);
    let interval_support = decompose_flows(&partitions, &graphs, &flows)?;
    let space_max = instance.space_max_int();
    let speed_floor = instance.speed_floor();
    let support = interval_support
        .iter()
        .map(|(s, q)| {
            (
                concretize_strategy(s, &partitions, &space_max, &speed_floor),
                q.clone(),
            )
        })
        .collect();
    Ok(EquilibriumResult {
        value,
        flows,
        interval_support,
        strategy: MixedStrategy { support },
    })
}
