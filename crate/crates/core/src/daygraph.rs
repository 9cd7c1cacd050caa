//! One layered DAG per round: source-to-sink paths encode sorted patrol
//! placements (one column per patrol, one row per interval), and unit flows
//! encode randomized placements. Each edge records which targets stay
//! unprotected when the two patrols it connects are the nearest ones.

use thiserror::Error;

use crate::model::ProblemInstance;
use crate::partition::{Interval, PartitionSet, TimePartition};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Source,
    Sink,
    /// `col` indexes patrols (0-based, `0..cols`), `row` indexes intervals.
    Grid { col: usize, row: usize },
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: Vertex,
    pub to: Vertex,
    /// Ids of targets left unprotected when this edge is used.
    pub uncovered: Vec<usize>,
}

/// The placement graph of round `t`.
#[derive(Debug, Clone)]
pub struct DayGraph {
    pub round: usize,
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<Edge>,
}

/// Edge flows aligned with `DayGraph::edges`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFlow<S: Scalar> {
    pub values: Vec<S>,
}

impl<S: Scalar> CanonicalFlow<S> {
    pub fn zero(graph: &DayGraph) -> Self {
        Self {
            values: vec![S::zero(); graph.edges.len()],
        }
    }

    pub fn total_out_of_source(&self, graph: &DayGraph) -> S {
        (0..graph.rows).fold(S::zero(), |acc, y| {
            acc + self.values[graph.source_edge(y)].clone()
        })
    }

    /// Conservation at every grid vertex plus unit mass out of the source,
    /// all within the scalar's tolerance.
    pub fn is_canonical(&self, graph: &DayGraph) -> bool {
        if self.values.iter().any(|v| *v < -S::tol_zero()) {
            return false;
        }
        let one_dev = self.total_out_of_source(graph) - S::one();
        if !one_dev.is_zeroish() {
            return false;
        }
        for col in 0..graph.cols {
            for row in 0..graph.rows {
                let v = Vertex::Grid { col, row };
                let net = graph.in_edges(v).fold(S::zero(), |acc, e| {
                    acc + self.values[e].clone()
                }) - graph.out_edges(v).fold(S::zero(), |acc, e| {
                    acc + self.values[e].clone()
                });
                if !net.is_zeroish() {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DayGraphError {
    #[error("snapshot rows must be non-decreasing, got {rows:?}")]
    UnsortedSnapshot { rows: Vec<usize> },
    #[error("snapshot probabilities sum to {got}, expected 1")]
    ProbabilitySumMismatch { got: String },
    #[error("snapshot has {got} rows, the graph has {expected} columns")]
    SnapshotArity { got: usize, expected: usize },
}

impl DayGraph {
    /// Number of edges in a graph with `rows` intervals and `cols` patrols.
    pub fn edge_count(rows: usize, cols: usize) -> usize {
        2 * rows + (cols - 1) * rows * (rows + 1) / 2
    }

    fn col_pair_count(&self) -> usize {
        self.rows * (self.rows + 1) / 2
    }

    /// Edge id of `source -> (0, row)`.
    pub fn source_edge(&self, row: usize) -> usize {
        row
    }

    /// Edge id of `(cols-1, row) -> sink`.
    pub fn sink_edge(&self, row: usize) -> usize {
        self.edges.len() - self.rows + row
    }

    /// Edge id of `(col, from_row) -> (col + 1, to_row)`; rows must satisfy
    /// `from_row <= to_row`.
    pub fn grid_edge(&self, col: usize, from_row: usize, to_row: usize) -> usize {
        debug_assert!(from_row <= to_row && col + 1 < self.cols);
        let base = self.rows + col * self.col_pair_count();
        // Edges out of lower rows come first; within a row, by destination.
        let before_row = from_row * (2 * self.rows - from_row + 1) / 2;
        base + before_row + (to_row - from_row)
    }

    pub fn out_edges(&self, v: Vertex) -> impl Iterator<Item = usize> + '_ {
        let ids: Vec<usize> = match v {
            Vertex::Source => (0..self.rows).map(|y| self.source_edge(y)).collect(),
            Vertex::Sink => Vec::new(),
            Vertex::Grid { col, row } => {
                if col + 1 == self.cols {
                    vec![self.sink_edge(row)]
                } else {
                    (row..self.rows)
                        .map(|to| self.grid_edge(col, row, to))
                        .collect()
                }
            }
        };
        ids.into_iter()
    }

    pub fn in_edges(&self, v: Vertex) -> impl Iterator<Item = usize> + '_ {
        let ids: Vec<usize> = match v {
            Vertex::Source => Vec::new(),
            Vertex::Sink => (0..self.rows).map(|y| self.sink_edge(y)).collect(),
            Vertex::Grid { col, row } => {
                if col == 0 {
                    vec![self.source_edge(row)]
                } else {
                    (0..=row)
                        .map(|from| self.grid_edge(col - 1, from, row))
                        .collect()
                }
            }
        };
        ids.into_iter()
    }

    /// Through-flow of a grid vertex (its outgoing mass).
    pub fn vertex_outflow<S: Scalar>(&self, flow: &CanonicalFlow<S>, v: Vertex) -> S {
        self.out_edges(v)
            .fold(S::zero(), |acc, e| acc + flow.values[e].clone())
    }
}

/// True when a target at `pos` slips through between the interval below and
/// the interval above (either may be absent at the border).
///
/// The test runs on integer patrol positions: the below interval must sit
/// entirely under the protection window `[pos - R, pos + R]` and the above
/// interval entirely over it. Phrasing it this way keeps the charge correct
/// even when the window contains no integer at all (an unprotectable
/// target), where span-based "strictly between" tests lose the target
/// inside a merged interval.
pub fn cover_flag(
    below: Option<&Interval>,
    above: Option<&Interval>,
    pos: &Rational,
    radius: &Rational,
) -> bool {
    debug_assert!(below.is_some() || above.is_some());
    if let Some(b) = below {
        let hi = Rational::from_integer(b.hi_int.clone());
        if hi >= pos - radius {
            return false;
        }
    }
    if let Some(a) = above {
        let lo = Rational::from_integer(a.lo_int.clone());
        if lo <= pos + radius {
            return false;
        }
    }
    true
}

fn uncovered_targets(
    instance: &ProblemInstance,
    partition: &TimePartition,
    below: Option<usize>,
    above: Option<usize>,
    t: usize,
) -> Vec<usize> {
    let below = below.map(|y| &partition.intervals[y]);
    let above = above.map(|y| &partition.intervals[y]);
    instance
        .targets
        .iter()
        .filter(|track| cover_flag(below, above, &track.positions[t - 1], &instance.radius))
        .map(|track| track.id)
        .collect()
}

/// Builds the round-`t` graph over the round's intervals with one column
/// per effective patrol.
pub fn build_day_graph(
    instance: &ProblemInstance,
    partitions: &PartitionSet,
    t: usize,
) -> DayGraph {
    let partition = partitions.round(t);
    let rows = partition.intervals.len();
    let cols = instance.effective_patrol_count();
    let mut edges = Vec::with_capacity(DayGraph::edge_count(rows, cols));

    for row in 0..rows {
        edges.push(Edge {
            from: Vertex::Source,
            to: Vertex::Grid { col: 0, row },
            uncovered: uncovered_targets(instance, partition, None, Some(row), t),
        });
    }
    for col in 0..cols.saturating_sub(1) {
        for from_row in 0..rows {
            for to_row in from_row..rows {
                edges.push(Edge {
                    from: Vertex::Grid { col, row: from_row },
                    to: Vertex::Grid { col: col + 1, row: to_row },
                    uncovered: uncovered_targets(
                        instance,
                        partition,
                        Some(from_row),
                        Some(to_row),
                        t,
                    ),
                });
            }
        }
    }
    for row in 0..rows {
        edges.push(Edge {
            from: Vertex::Grid { col: cols - 1, row },
            to: Vertex::Sink,
            uncovered: uncovered_targets(instance, partition, Some(row), None, t),
        });
    }

    DayGraph { round: t, rows, cols, edges }
}

/// Attacker payoff for striking target `a` at this round against the pure
/// placement encoded by `path` (edge ids of a source-to-sink path).
pub fn path_payoff(
    graph: &DayGraph,
    path: &[usize],
    a: usize,
    weight: &Rational,
) -> Rational {
    let hits = path
        .iter()
        .filter(|&&e| graph.edges[e].uncovered.contains(&a))
        .count();
    Rational::from_integer(hits.into()) * weight
}

/// Best attacker payoff at this round against the randomized placement
/// `flow`: the most valuable target weighted by its miss probability.
pub fn flow_cost<S: Scalar>(
    graph: &DayGraph,
    flow: &CanonicalFlow<S>,
    instance: &ProblemInstance,
) -> S {
    let t = graph.round;
    let mut best = S::zero();
    for track in &instance.targets {
        let weight = S::from_rat(&track.weights[t - 1]);
        if weight.is_zero() {
            continue;
        }
        let mass = graph
            .edges
            .iter()
            .zip(&flow.values)
            .filter(|(e, _)| e.uncovered.contains(&track.id))
            .fold(S::zero(), |acc, (_, v)| acc + v.clone());
        let cost = mass * weight;
        if cost > best {
            best = cost;
        }
    }
    best
}

/// Maps a sorted placement (interval row per patrol) to its path's edge ids.
pub fn snapshot_to_path(
    graph: &DayGraph,
    snapshot_rows: &[usize],
) -> Result<Vec<usize>, DayGraphError> {
    if snapshot_rows.len() != graph.cols {
        return Err(DayGraphError::SnapshotArity {
            got: snapshot_rows.len(),
            expected: graph.cols,
        });
    }
    if snapshot_rows.windows(2).any(|w| w[0] > w[1]) {
        return Err(DayGraphError::UnsortedSnapshot {
            rows: snapshot_rows.to_vec(),
        });
    }
    let mut path = Vec::with_capacity(graph.cols + 1);
    path.push(graph.source_edge(snapshot_rows[0]));
    for col in 0..graph.cols - 1 {
        path.push(graph.grid_edge(col, snapshot_rows[col], snapshot_rows[col + 1]));
    }
    path.push(graph.sink_edge(snapshot_rows[graph.cols - 1]));
    Ok(path)
}

/// Superposes the paths of weighted snapshots into one unit flow.
pub fn mixed_to_flow<S: Scalar>(
    graph: &DayGraph,
    snapshots: &[(Vec<usize>, S)],
) -> Result<CanonicalFlow<S>, DayGraphError> {
    let total = snapshots
        .iter()
        .fold(S::zero(), |acc, (_, p)| acc + p.clone());
    if !(total.clone() - S::one()).is_zeroish() {
        return Err(DayGraphError::ProbabilitySumMismatch {
            got: format!("{total:?}"),
        });
    }
    let mut flow: CanonicalFlow<S> = CanonicalFlow::zero(graph);
    for (rows, p) in snapshots {
        for e in snapshot_to_path(graph, rows)? {
            flow.values[e] = flow.values[e].clone() + p.clone();
        }
    }
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_rational, Mode, TargetTrack};
    use crate::partition::build_partitions;
    use num_traits::One;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    /// T=1, M=2, K=1, R=0, unit-weight targets at 0 and 2.
    fn instance_a() -> ProblemInstance {
        ProblemInstance::new(
            1,
            rat("2"),
            1,
            rat("0"),
            rat("0"),
            vec![
                TargetTrack { id: 0, positions: vec![rat("0")], weights: vec![rat("1")] },
                TargetTrack { id: 1, positions: vec![rat("2")], weights: vec![rat("1")] },
            ],
            Mode::Discrete,
        )
        .unwrap()
    }

    fn graph_a() -> (ProblemInstance, PartitionSet, DayGraph) {
        let inst = instance_a();
        let parts = build_partitions(&inst);
        let graph = build_day_graph(&inst, &parts, 1);
        (inst, parts, graph)
    }

    #[test]
    fn instance_a_graph_shape_and_covers() {
        let (_, _, g) = graph_a();
        assert_eq!(g.rows, 3);
        assert_eq!(g.cols, 1);
        assert_eq!(g.edges.len(), 6);
        // Rows 0,1,2 hold intervals {0}, {1}, {2}.
        assert_eq!(g.edges[g.source_edge(0)].uncovered, Vec::<usize>::new());
        assert_eq!(g.edges[g.source_edge(1)].uncovered, vec![0]);
        assert_eq!(g.edges[g.source_edge(2)].uncovered, vec![0]);
        assert_eq!(g.edges[g.sink_edge(0)].uncovered, vec![1]);
        assert_eq!(g.edges[g.sink_edge(1)].uncovered, vec![1]);
        assert_eq!(g.edges[g.sink_edge(2)].uncovered, Vec::<usize>::new());
    }

    #[test]
    fn edge_count_formula() {
        assert_eq!(DayGraph::edge_count(2, 2), 7);
        assert_eq!(DayGraph::edge_count(1, 1), 2);
        assert_eq!(DayGraph::edge_count(3, 1), 6);
    }

    #[test]
    fn grid_edge_ids_are_consistent() {
        let inst = ProblemInstance::new(
            1,
            rat("2"),
            2,
            rat("0"),
            rat("0"),
            vec![
                TargetTrack { id: 0, positions: vec![rat("0")], weights: vec![rat("1")] },
                TargetTrack { id: 1, positions: vec![rat("2")], weights: vec![rat("1")] },
            ],
            Mode::Discrete,
        )
        .unwrap();
        let parts = build_partitions(&inst);
        let g = build_day_graph(&inst, &parts, 1);
        assert_eq!(g.edges.len(), DayGraph::edge_count(3, 2));
        for (id, e) in g.edges.iter().enumerate() {
            let recomputed = match (e.from, e.to) {
                (Vertex::Source, Vertex::Grid { row, .. }) => g.source_edge(row),
                (Vertex::Grid { row, .. }, Vertex::Sink) => g.sink_edge(row),
                (Vertex::Grid { col, row }, Vertex::Grid { row: to, .. }) => {
                    g.grid_edge(col, row, to)
                }
                other => panic!("unexpected edge {other:?}"),
            };
            assert_eq!(id, recomputed);
        }
    }

    #[test]
    fn cover_flag_cases() {
        let (inst, parts, _) = graph_a();
        let ivs = &parts.round(1).intervals;
        // Target at 2 above {0}: uncovered toward the sink side.
        assert!(cover_flag(Some(&ivs[0]), None, &rat("2"), &inst.radius));
        // Target at 0 is inside {0}, not below it.
        assert!(!cover_flag(None, Some(&ivs[0]), &rat("0"), &inst.radius));
        // Target at 1 strictly between {0} and {2}, R = 0.
        assert!(cover_flag(Some(&ivs[0]), Some(&ivs[2]), &rat("1"), &inst.radius));
    }

    #[test]
    fn path_payoffs_match_protection() {
        let (_, _, g) = graph_a();
        let via = |row| snapshot_to_path(&g, &[row]).unwrap();
        assert_eq!(path_payoff(&g, &via(1), 0, &rat("1")), rat("1"));
        assert_eq!(path_payoff(&g, &via(0), 0, &rat("1")), rat("0"));
        assert_eq!(path_payoff(&g, &via(2), 0, &rat("0")), rat("0"));
    }

    #[test]
    fn flow_cost_of_even_split() {
        let (inst, _, g) = graph_a();
        let flow = mixed_to_flow(
            &g,
            &[(vec![0], rat("1/2")), (vec![2], rat("1/2"))],
        )
        .unwrap();
        assert!(flow.is_canonical(&g));
        assert_eq!(flow_cost(&g, &flow, &inst), rat("1/2"));

        let all_mid = mixed_to_flow(&g, &[(vec![1], Rational::one())]).unwrap();
        assert_eq!(flow_cost(&g, &all_mid, &inst), rat("1"));
    }

    #[test]
    fn snapshot_mapping_rejects_unsorted() {
        let inst = ProblemInstance::new(
            1,
            rat("2"),
            2,
            rat("0"),
            rat("0"),
            vec![
                TargetTrack { id: 0, positions: vec![rat("0")], weights: vec![rat("1")] },
                TargetTrack { id: 1, positions: vec![rat("2")], weights: vec![rat("1")] },
            ],
            Mode::Discrete,
        )
        .unwrap();
        let parts = build_partitions(&inst);
        let g2 = build_day_graph(&inst, &parts, 1);
        assert!(matches!(
            snapshot_to_path(&g2, &[2, 0]),
            Err(DayGraphError::UnsortedSnapshot { .. })
        ));
        assert!(snapshot_to_path(&g2, &[0, 2]).is_ok());
    }

    #[test]
    fn duplicate_snapshots_superpose_linearly() {
        let (_, _, g) = graph_a();
        let single = mixed_to_flow(&g, &[(vec![1], Rational::one())]).unwrap();
        let doubled = mixed_to_flow(
            &g,
            &[(vec![1], rat("1/2")), (vec![1], rat("1/2"))],
        )
        .unwrap();
        assert_eq!(single, doubled);
    }

    #[test]
    fn mixed_to_flow_rejects_bad_probabilities() {
        let (_, _, g) = graph_a();
        assert!(matches!(
            mixed_to_flow(&g, &[(vec![0], rat("1/2"))]),
            Err(DayGraphError::ProbabilitySumMismatch { .. })
        ));
    }
}
