//! Placement graphs must price attacks exactly: path costs equal simulated
//! pure payoffs, flow costs equal simulated mixed payoffs, and each
//! uncovered target charges exactly one edge of its path.

use linepatrol::daygraph::{
    build_day_graph, flow_cost, mixed_to_flow, path_payoff, snapshot_to_path, DayGraph, Vertex,
};
use linepatrol::model::{protects, Mode, ProblemInstance, TargetTrack};
use linepatrol::partition::build_partitions;
use linepatrol::scalar::{Int, Rational};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn rational(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[derive(Debug, Clone)]
struct Scenario {
    horizon: usize,
    space: i64,
    patrols: usize,
    radius: (i64, i64),
    tracks: Vec<Vec<(i64, i64)>>,
    weights: Vec<Vec<i64>>,
    /// Seeds for snapshot rows and in-interval representatives.
    row_seeds: Vec<Vec<usize>>,
    offset_seeds: Vec<Vec<usize>>,
    prob_seeds: Vec<usize>,
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (1usize..=3, 1i64..=50, 1usize..=3, 1usize..=4).prop_flat_map(
        |(horizon, space, patrols, mixtures)| {
            let pos = (-space / 3..=space + space / 3 + 1, 1i64..=3);
            let track = prop::collection::vec(pos, horizon);
            (
                Just(horizon),
                Just(space),
                Just(patrols),
                (0i64..=5, 1i64..=2),
                prop::collection::vec(track, 1usize..=3),
                prop::collection::vec(prop::collection::vec(0i64..=3, horizon), 3),
                prop::collection::vec(prop::collection::vec(0usize..100, patrols), mixtures),
                prop::collection::vec(prop::collection::vec(0usize..100, patrols), mixtures),
                prop::collection::vec(1usize..=4, mixtures),
            )
                .prop_map(
                    |(horizon, space, patrols, radius, tracks, weights, row_seeds, offset_seeds, prob_seeds)| {
                        Scenario {
                            horizon,
                            space,
                            patrols,
                            radius,
                            tracks,
                            weights,
                            row_seeds,
                            offset_seeds,
                            prob_seeds,
                        }
                    },
                )
        },
    )
}

impl Scenario {
    fn build(&self) -> ProblemInstance {
        let targets = self
            .tracks
            .iter()
            .enumerate()
            .map(|(id, track)| TargetTrack {
                id,
                positions: track.iter().map(|&(n, d)| rational(n, d)).collect(),
                weights: self.weights[id % self.weights.len()]
                    .iter()
                    .map(|&w| Rational::from_integer(w.into()))
                    .collect(),
            })
            .collect();
        ProblemInstance::new(
            self.horizon,
            Rational::from_integer(self.space.into()),
            self.patrols,
            Rational::from_integer(2.into()),
            rational(self.radius.0, self.radius.1),
            targets,
            Mode::Discrete,
        )
        .unwrap()
    }

    /// Sorted snapshot rows plus one representative integer per patrol.
    fn placement(&self, g: &DayGraph, which: usize) -> (Vec<usize>, Vec<Int>) {
        let mut rows: Vec<usize> = self.row_seeds[which]
            .iter()
            .map(|s| s % g.rows)
            .collect();
        rows.truncate(g.cols);
        while rows.len() < g.cols {
            rows.push(0);
        }
        reps_for(self, g, &mut rows, which)
    }
}

fn reps_for(
    sc: &Scenario,
    g: &DayGraph,
    rows: &mut Vec<usize>,
    which: usize,
) -> (Vec<usize>, Vec<Int>) {
    rows.sort_unstable();
    let inst = sc.build();
    let parts = build_partitions(&inst);
    let intervals = &parts.round(g.round).intervals;
    let reps = rows
        .iter()
        .zip(&sc.offset_seeds[which])
        .map(|(&row, &seed)| {
            let iv = &intervals[row];
            let width = i64::try_from(&iv.hi_int - &iv.lo_int).unwrap() + 1;
            &iv.lo_int + Int::from(seed as i64 % width)
        })
        .collect();
    (rows.clone(), reps)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Pure placements: the canonical path's cost per target equals the
    /// simulated attacker payoff with patrols at arbitrary representatives.
    #[test]
    fn path_costs_match_simulated_payoffs(sc in arb_scenario()) {
        let inst = sc.build();
        let parts = build_partitions(&inst);
        for t in 1..=inst.horizon {
            let g = build_day_graph(&inst, &parts, t);
            for which in 0..sc.row_seeds.len() {
                let (rows, reps) = sc.placement(&g, which);
                let path = snapshot_to_path(&g, &rows).unwrap();
                prop_assert_eq!(path.len(), g.cols + 1);
                for track in &inst.targets {
                    let pos = &track.positions[t - 1];
                    let weight = &track.weights[t - 1];
                    let covered = reps.iter().any(|m| protects(m, pos, &inst.radius));
                    let expected = if covered {
                        Rational::zero()
                    } else {
                        weight.clone()
                    };
                    let got = path_payoff(&g, &path, track.id, weight);
                    prop_assert_eq!(got, expected,
                        "round {} target {} rows {:?} reps {:?}", t, track.id, &rows, &reps);
                    // Exactly one edge charges an uncovered target.
                    let charges = path
                        .iter()
                        .filter(|&&e| g.edges[e].uncovered.contains(&track.id))
                        .count();
                    prop_assert!(charges <= 1);
                    prop_assert_eq!(charges == 1, !covered);
                }
            }
        }
    }

    /// Mixed placements: the flow cost equals the best simulated expected
    /// payoff over targets.
    #[test]
    fn flow_costs_match_simulated_mixtures(sc in arb_scenario()) {
        let inst = sc.build();
        let parts = build_partitions(&inst);
        for t in 1..=inst.horizon {
            let g = build_day_graph(&inst, &parts, t);
            let n = sc.row_seeds.len();
            // Probabilities p_i proportional to prob_seeds, exactly rational.
            let total: usize = sc.prob_seeds.iter().sum();
            let probs: Vec<Rational> = sc
                .prob_seeds
                .iter()
                .map(|&s| rational(s as i64, total as i64))
                .collect();
            let mut snapshots = Vec::with_capacity(n);
            let mut reps_all = Vec::with_capacity(n);
            for which in 0..n {
                let (rows, reps) = sc.placement(&g, which);
                snapshots.push((rows, probs[which].clone()));
                reps_all.push(reps);
            }
            let flow = mixed_to_flow(&g, &snapshots).unwrap();
            prop_assert!(flow.is_canonical(&g));
            let expected = inst
                .targets
                .iter()
                .map(|track| {
                    let pos = &track.positions[t - 1];
                    let weight = &track.weights[t - 1];
                    let miss: Rational = reps_all
                        .iter()
                        .zip(&probs)
                        .filter(|(reps, _)| {
                            !reps.iter().any(|m| protects(m, pos, &inst.radius))
                        })
                        .fold(Rational::zero(), |acc, (_, p)| acc + p);
                    miss * weight
                })
                .max()
                .unwrap_or_else(Rational::zero);
            prop_assert_eq!(flow_cost(&g, &flow, &inst), expected);
        }
    }

    /// Structure: the edge-count formula holds and grid edges never step
    /// down a row.
    #[test]
    fn graph_structure(sc in arb_scenario()) {
        let inst = sc.build();
        let parts = build_partitions(&inst);
        for t in 1..=inst.horizon {
            let g = build_day_graph(&inst, &parts, t);
            prop_assert_eq!(g.edges.len(), DayGraph::edge_count(g.rows, g.cols));
            for e in &g.edges {
                if let (Vertex::Grid { col, row }, Vertex::Grid { col: c2, row: r2 }) =
                    (e.from, e.to)
                {
                    prop_assert_eq!(c2, col + 1);
                    prop_assert!(r2 >= row);
                }
            }
            let one = Rational::one();
            let flow = mixed_to_flow(&g, &[(vec![0; g.cols], one)]).unwrap();
            prop_assert!(flow.is_canonical(&g));
        }
    }
}
