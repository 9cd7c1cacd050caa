//! Per-round partitions of the patrol space into intervals whose integer
//! positions are interchangeable: they protect the same targets and have
//! the same reachable intervals one round later.
//!
//! Cut points carry a symbolic epsilon count instead of a concrete small
//! number, so "just above x" stays exact no matter how close other cut
//! points are.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::model::ProblemInstance;
use crate::scalar::{Int, Rational};

/// A cut point `value + eps * ε` for an infinitesimal ε > 0.
///
/// Ordered lexicographically by `(value, eps)`; an integer `m` compares as
/// `(m, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EndPoint {
    pub value: Rational,
    pub eps: u32,
}

impl EndPoint {
    pub fn new(value: Rational, eps: u32) -> Self {
        Self { value, eps }
    }

    pub fn at(value: Rational) -> Self {
        Self { value, eps: 0 }
    }

    fn shifted(&self, delta: &Rational) -> Self {
        Self {
            value: &self.value + delta,
            eps: self.eps,
        }
    }

    /// Smallest integer `m` with `(m, 0) >= self`.
    pub fn ceil_int(&self) -> Int {
        if self.eps == 0 {
            self.value.ceil().to_integer()
        } else {
            self.value.floor().to_integer() + 1
        }
    }

    /// Largest integer `m` with `(m, 0) < self`.
    pub fn floor_int_exclusive(&self) -> Int {
        if self.eps == 0 {
            self.value.ceil().to_integer() - 1
        } else {
            self.value.floor().to_integer()
        }
    }

    /// Compares the pure rational `x` (an integer position or a target
    /// position) against this cut point.
    pub fn cmp_rational(&self, x: &Rational) -> std::cmp::Ordering {
        match self.value.cmp(x) {
            std::cmp::Ordering::Equal => self.eps.cmp(&0),
            ord => ord,
        }
    }
}

/// A half-open span `[start, end)` of the line together with the integer
/// patrol positions it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    /// Position within its round (0-based).
    pub index: usize,
    pub start: EndPoint,
    pub end: EndPoint,
    pub lo_int: Int,
    pub hi_int: Int,
}

impl Interval {
    pub fn contains_int(&self, m: &Int) -> bool {
        *m >= self.lo_int && *m <= self.hi_int
    }
}

/// The interval partition of one round.
#[derive(Debug, Clone)]
pub struct TimePartition {
    /// Round index, 1-based.
    pub round: usize,
    pub cut_points: Vec<EndPoint>,
    pub intervals: Vec<Interval>,
}

/// Partitions for every round, plus the whole-step speed used to link them.
#[derive(Debug, Clone)]
pub struct PartitionSet {
    pub per_round: Vec<TimePartition>,
    pub speed_floor: Int,
    /// `reach[t-1][i] = (lo, hi)`: interval indices at round `t+1` reachable
    /// from interval `i` at round `t` (0-based indices, rounds `1..T`).
    reach: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("no interval at round {next_round} is reachable from intervals {lo}..={hi}")]
    EmptyFeasibleSet {
        next_round: usize,
        lo: usize,
        hi: usize,
    },
}

impl PartitionSet {
    pub fn round(&self, t: usize) -> &TimePartition {
        &self.per_round[t - 1]
    }

    pub fn interval_count(&self, t: usize) -> usize {
        self.round(t).intervals.len()
    }

    pub fn total_intervals(&self) -> usize {
        self.per_round.iter().map(|p| p.intervals.len()).sum()
    }

    /// Index range of intervals at round `t+1` reachable from the interval
    /// block `i..=j` at round `t` (all indices 0-based). The result is a
    /// contiguous range because reachability windows slide monotonically.
    pub fn feasible_set(
        &self,
        t: usize,
        i: usize,
        j: usize,
    ) -> Result<(usize, usize), PartitionError> {
        debug_assert!(t < self.per_round.len());
        debug_assert!(i <= j && j < self.interval_count(t));
        let row = &self.reach[t - 1];
        let (lo, _) = row[i];
        let (_, hi) = row[j];
        if lo > hi {
            return Err(PartitionError::EmptyFeasibleSet {
                next_round: t + 1,
                lo: i,
                hi: j,
            });
        }
        Ok((lo, hi))
    }
}

/// True when a patrol can protect `pos` from somewhere in `interval`: the
/// protection window `[pos - R, pos + R]` meets the interval's integers.
pub fn protected_by_interval(interval: &Interval, pos: &Rational, radius: &Rational) -> bool {
    let lo = Rational::from_integer(interval.lo_int.clone());
    let hi = Rational::from_integer(interval.hi_int.clone());
    lo <= pos + radius && hi >= pos - radius
}

/// True when some integer of `from` can move into `to` within one round.
/// All positions of `from` then have such a move (the partition is built
/// to make reachability uniform inside an interval).
pub fn feasible_move_exists(from: &Interval, to: &Interval, speed_floor: &Int) -> bool {
    to.lo_int <= &from.hi_int + speed_floor && to.hi_int >= &from.lo_int - speed_floor
}

/// Builds the per-round partitions, back to front.
///
/// Round `t` cuts the line at `0`, just above `M`, around every target
/// (`x - R` and just above `x + R`), and at the `±D` shifts of every cut
/// point of round `t+1`; spans without an integer are merged downward.
pub fn build_partitions(instance: &ProblemInstance) -> PartitionSet {
    let horizon = instance.horizon;
    let space_max = instance.space_max.clone();
    // Integer moves are bounded by floor(D); propagating cut points by the
    // raw rational D would misplace reachability thresholds whenever D is
    // fractional (shifting by a whole number commutes with the integer
    // bounds of an endpoint, shifting by a fraction does not).
    let step = Rational::from_integer(instance.speed_floor());
    let radius = &instance.radius;

    let mut rounds: Vec<TimePartition> = Vec::with_capacity(horizon);
    let mut next_points: Option<Vec<EndPoint>> = None;

    for t in (1..=horizon).rev() {
        let mut points: BTreeSet<EndPoint> = BTreeSet::new();
        points.insert(EndPoint::at(Rational::zero()));
        // The upper sentinel sits just above M so position M lands inside
        // the last half-open interval.
        points.insert(EndPoint::new(space_max.clone(), 1));

        for track in &instance.targets {
            let pos = &track.positions[t - 1];
            // Targets may sit outside [0, M]; only cut points that land in
            // the space matter (a cut at exactly M still splits off {M}).
            let low = pos - radius;
            if low > Rational::zero() && low <= space_max {
                points.insert(EndPoint::at(low));
            }
            let high = pos + radius;
            if high < space_max && !high.is_negative() {
                points.insert(EndPoint::new(high, 1));
            }
        }

        if let Some(prev) = &next_points {
            for p in prev {
                let down = p.shifted(&-step.clone());
                // down > (0, 0): strictly positive value, or zero with ε.
                if down.value.is_positive() || (down.value.is_zero() && down.eps > 0) {
                    points.insert(down);
                }
                // up < the (M, ε) sentinel. A shift landing exactly on M
                // with no ε is a real cut: it separates M from the
                // positions that can still reach below the shifted point.
                let up = p.shifted(&step);
                if up.value < space_max || (up.value == space_max && up.eps == 0) {
                    points.insert(up);
                }
            }
        }

        let cut_points = merge_empty_spans(points.into_iter().collect());
        let intervals = intervals_from_cuts(&cut_points);
        next_points = Some(cut_points.clone());
        rounds.push(TimePartition {
            round: t,
            cut_points,
            intervals,
        });
    }

    rounds.reverse();
    let speed_floor = instance.speed.floor().to_integer();
    let reach = build_reach(&rounds, &speed_floor);
    PartitionSet {
        per_round: rounds,
        speed_floor,
        reach,
    }
}

/// Drops the lower cut point of every span that contains no integer.
fn merge_empty_spans(sorted: Vec<EndPoint>) -> Vec<EndPoint> {
    let mut kept: Vec<EndPoint> = Vec::with_capacity(sorted.len());
    for point in sorted {
        if let Some(top) = kept.last() {
            if top.ceil_int() > point.floor_int_exclusive() {
                // [top, point) holds no integer; merge down. The span below
                // the previous kept point always holds one, so one pop is
                // enough.
                kept.pop();
            }
        }
        kept.push(point);
    }
    kept
}

fn intervals_from_cuts(cuts: &[EndPoint]) -> Vec<Interval> {
    cuts.windows(2)
        .enumerate()
        .map(|(index, pair)| {
            let lo_int = pair[0].ceil_int();
            let hi_int = pair[1].floor_int_exclusive();
            debug_assert!(lo_int <= hi_int, "empty interval survived the merge");
            Interval {
                index,
                start: pair[0].clone(),
                end: pair[1].clone(),
                lo_int,
                hi_int,
            }
        })
        .collect()
}

fn build_reach(rounds: &[TimePartition], speed_floor: &Int) -> Vec<Vec<(usize, usize)>> {
    let mut reach = Vec::with_capacity(rounds.len().saturating_sub(1));
    for t in 0..rounds.len().saturating_sub(1) {
        let here = &rounds[t].intervals;
        let next = &rounds[t + 1].intervals;
        let mut row = Vec::with_capacity(here.len());
        // Reachability windows slide upward with the source interval, so
        // both bounds advance monotonically.
        let mut lo = 0usize;
        let mut hi = 0usize;
        for interval in here {
            let min_pos = &interval.lo_int - speed_floor;
            let max_pos = &interval.hi_int + speed_floor;
            while lo < next.len() && next[lo].hi_int < min_pos {
                lo += 1;
            }
            if hi < lo {
                hi = lo;
            }
            while hi + 1 < next.len() && next[hi + 1].lo_int <= max_pos {
                hi += 1;
            }
            debug_assert!(
                lo < next.len() && next[lo].lo_int <= max_pos,
                "every interval reaches something when D >= 0"
            );
            row.push((lo, hi));
        }
        reach.push(row);
    }
    reach
}

/// Interval index (0-based) containing integer position `m` at round `t`.
pub fn locate_int(partition: &TimePartition, m: &Int) -> usize {
    let ints = &partition.intervals;
    debug_assert!(!ints.is_empty());
    match ints.binary_search_by(|iv| {
        if iv.hi_int < *m {
            std::cmp::Ordering::Less
        } else if iv.lo_int > *m {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    }) {
        Ok(i) => i,
        Err(_) => panic!("position {m} outside every interval of round {}", partition.round),
    }
}

/// Upper bound on the total interval count: each cut point traces back to
/// some target-round pair shifted by whole multiples of the speed, plus
/// boundaries.
pub fn interval_budget(targets: usize, horizon: usize) -> usize {
    8 * targets * horizon.pow(3) + 2 * horizon
}
