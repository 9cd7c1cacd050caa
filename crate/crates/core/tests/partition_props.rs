//! Brute-force property checks for the interval partition: positions inside
//! one interval are interchangeable for protection and for movement, and
//! the partition never grows past its polynomial budget.

use linepatrol::model::{protects, Mode, ProblemInstance, TargetTrack};
use linepatrol::partition::{build_partitions, interval_budget, locate_int};
use linepatrol::scalar::{Int, Rational};
use num_traits::Signed;
use proptest::prelude::*;

fn rational(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

#[derive(Debug, Clone)]
struct Raw {
    horizon: usize,
    space: i64,
    speed: (i64, i64),
    radius: (i64, i64),
    tracks: Vec<Vec<(i64, i64)>>,
    weights: Vec<Vec<i64>>,
}

impl Raw {
    fn build(&self) -> ProblemInstance {
        let targets = self
            .tracks
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(id, (track, weights))| TargetTrack {
                id,
                positions: track.iter().map(|&(n, d)| rational(n, d)).collect(),
                weights: weights
                    .iter()
                    .map(|&w| Rational::from_integer(w.into()))
                    .collect(),
            })
            .collect();
        ProblemInstance::new(
            self.horizon,
            Rational::from_integer(self.space.into()),
            2,
            rational(self.speed.0, self.speed.1),
            rational(self.radius.0, self.radius.1),
            targets,
            Mode::Discrete,
        )
        .unwrap()
    }
}

fn arb_raw(max_t: usize, max_m: i64) -> impl Strategy<Value = Raw> {
    (1..=max_t, 1..=max_m, 1usize..=3).prop_flat_map(move |(horizon, space, n)| {
        let pos = (-space / 3..=space + space / 3 + 1, 1i64..=3);
        let track = prop::collection::vec(pos, horizon);
        let weights = prop::collection::vec(0i64..=3, horizon);
        (
            Just(horizon),
            Just(space),
            (0i64..=12, 1i64..=3),
            (0i64..=6, 1i64..=3),
            prop::collection::vec(track, n),
            prop::collection::vec(weights, n),
        )
            .prop_map(
                |(horizon, space, speed, radius, tracks, weights)| Raw {
                    horizon,
                    space,
                    speed,
                    radius,
                    tracks,
                    weights,
                },
            )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Every integer position belongs to exactly one interval per round.
    #[test]
    fn coverage_and_disjointness(raw in arb_raw(4, 60)) {
        let inst = raw.build();
        let parts = build_partitions(&inst);
        for t in 1..=inst.horizon {
            let p = parts.round(t);
            let mut seen = 0i64;
            for iv in &p.intervals {
                prop_assert!(iv.lo_int <= iv.hi_int);
                prop_assert_eq!(Int::from(seen), iv.lo_int.clone());
                seen = i64::try_from(&iv.hi_int).unwrap() + 1;
            }
            prop_assert_eq!(seen, raw.space + 1);
            for m in 0..=raw.space {
                let idx = locate_int(p, &Int::from(m));
                prop_assert!(p.intervals[idx].contains_int(&Int::from(m)));
            }
        }
    }

    /// All positions of one interval protect exactly the same targets.
    #[test]
    fn protection_is_uniform_within_intervals(raw in arb_raw(4, 60)) {
        let inst = raw.build();
        let parts = build_partitions(&inst);
        for t in 1..=inst.horizon {
            for iv in &parts.round(t).intervals {
                for track in &inst.targets {
                    let pos = &track.positions[t - 1];
                    let lo = i64::try_from(&iv.lo_int).unwrap();
                    let hi = i64::try_from(&iv.hi_int).unwrap();
                    let first = protects(&Int::from(lo), pos, &inst.radius);
                    for m in lo..=hi {
                        prop_assert_eq!(
                            protects(&Int::from(m), pos, &inst.radius),
                            first,
                            "round {} target {} interval {}..{} splits at {}",
                            t, track.id, lo, hi, m
                        );
                    }
                }
            }
        }
    }

    /// Either every position of an interval has a speed-feasible move into a
    /// next-round interval, or none does.
    #[test]
    fn reachability_is_uniform_within_intervals(raw in arb_raw(3, 40)) {
        let inst = raw.build();
        let parts = build_partitions(&inst);
        let speed = i64::try_from(&inst.speed_floor()).unwrap_or(i64::MAX);
        for t in 1..inst.horizon {
            for from in &parts.round(t).intervals {
                for to in &parts.round(t + 1).intervals {
                    let f_lo = i64::try_from(&from.lo_int).unwrap();
                    let f_hi = i64::try_from(&from.hi_int).unwrap();
                    let t_lo = i64::try_from(&to.lo_int).unwrap();
                    let t_hi = i64::try_from(&to.hi_int).unwrap();
                    let can = |m: i64| (t_lo..=t_hi).any(|m2| (m - m2).abs() <= speed);
                    let first = can(f_lo);
                    for m in f_lo..=f_hi {
                        prop_assert_eq!(can(m), first);
                    }
                }
            }
        }
    }

    /// Brute-forced reachable interval indices form a contiguous range that
    /// matches the computed feasible set, for single intervals and blocks.
    #[test]
    fn feasible_sets_are_contiguous_and_exact(raw in arb_raw(3, 40)) {
        let inst = raw.build();
        let parts = build_partitions(&inst);
        let speed = i64::try_from(&inst.speed_floor()).unwrap_or(i64::MAX);
        for t in 1..inst.horizon {
            let here = &parts.round(t).intervals;
            let next = &parts.round(t + 1).intervals;
            let mut reach: Vec<Vec<usize>> = Vec::new();
            for from in here {
                let f_lo = i64::try_from(&from.lo_int).unwrap();
                let f_hi = i64::try_from(&from.hi_int).unwrap();
                let mut indices = Vec::new();
                for (j, to) in next.iter().enumerate() {
                    let t_lo = i64::try_from(&to.lo_int).unwrap();
                    let t_hi = i64::try_from(&to.hi_int).unwrap();
                    let ok = (f_lo..=f_hi)
                        .any(|m| (t_lo..=t_hi).any(|m2| (m - m2).abs() <= speed));
                    if ok {
                        indices.push(j);
                    }
                }
                prop_assert!(!indices.is_empty());
                prop_assert!(indices.windows(2).all(|w| w[1] == w[0] + 1));
                let (lo, hi) = parts.feasible_set(t, from.index, from.index).unwrap();
                prop_assert_eq!((lo, hi), (indices[0], *indices.last().unwrap()));
                reach.push(indices);
            }
            // Blocks: the union over i..=j is the computed contiguous range.
            for i in 0..here.len() {
                for j in i..here.len() {
                    let lo = reach[i..=j].iter().map(|r| r[0]).min().unwrap();
                    let hi = reach[i..=j]
                        .iter()
                        .map(|r| *r.last().unwrap())
                        .max()
                        .unwrap();
                    prop_assert_eq!(parts.feasible_set(t, i, j).unwrap(), (lo, hi));
                }
            }
        }
    }

    /// The total interval count stays within the polynomial budget.
    #[test]
    fn interval_count_stays_in_budget(raw in arb_raw(4, 200)) {
        let inst = raw.build();
        let parts = build_partitions(&inst);
        prop_assert!(
            parts.total_intervals() <= interval_budget(inst.target_count(), inst.horizon)
        );
    }
}
