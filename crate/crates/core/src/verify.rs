//! Independent checks: the attacker's exact best response to any mixed
//! strategy, brute-force enumeration of pure strategies, and the matrix
//! game value for small instances. Nothing here touches the partition or
//! flow machinery, so these are genuine oracles for the solver.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lp::{self, LpModel, Relation, VarBound};
use crate::model::{MixedStrategy, ProblemInstance, PureStrategy};
use crate::scalar::{Int, Rational, Scalar};

/// A mixed strategy over rational-position paths; integer strategies embed
/// losslessly, and continuous results arrive here after rescaling.
pub type RationalSupport = Vec<(Vec<Vec<Rational>>, Rational)>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("enumeration would exceed the cap of {cap} strategies (estimated {estimate})")]
    TooLarge { cap: usize, estimate: String },
}

/// Expected attacker payoff for every (target, round) pair, maximized.
#[derive(Debug, Clone)]
pub struct BestResponseReport {
    pub value: Rational,
    /// `(target id, round)` attaining the maximum (first in scan order).
    pub argmax: (usize, usize),
    pub payoffs: Vec<((usize, usize), Rational)>,
}

pub fn support_of<S: Scalar>(strategy: &MixedStrategy<S>) -> RationalSupport {
    strategy
        .support
        .iter()
        .map(|(s, p)| {
            let paths = s
                .paths
                .iter()
                .map(|path| {
                    path.iter()
                        .map(|m| Rational::from_integer(m.clone()))
                        .collect()
                })
                .collect();
            (paths, p.to_rat())
        })
        .collect()
}

/// Exact expected payoff per (target, round) under `support`, assuming the
/// attacker picks the best pair.
pub fn attacker_best_response(
    instance: &ProblemInstance,
    support: &RationalSupport,
) -> BestResponseReport {
    let mut payoffs = Vec::with_capacity(instance.target_count() * instance.horizon);
    let mut best: Option<((usize, usize), Rational)> = None;
    for track in &instance.targets {
        for t in 1..=instance.horizon {
            let pos = &track.positions[t - 1];
            let weight = &track.weights[t - 1];
            let mut miss = Rational::zero();
            for (paths, p) in support {
                let covered = paths
                    .iter()
                    .any(|path| (&path[t - 1] - pos).abs() <= instance.radius);
                if !covered {
                    miss += p;
                }
            }
            let payoff = miss * weight;
            let key = (track.id, t);
            if best.as_ref().is_none_or(|(_, b)| payoff > *b) {
                best = Some((key, payoff.clone()));
            }
            payoffs.push((key, payoff));
        }
    }
    let (argmax, value) = best.expect("instances have at least one target");
    BestResponseReport { value, argmax, payoffs }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

/// Sorted position tuples for one round.
fn sorted_tuples(space_max: usize, patrols: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; patrols];
    loop {
        out.push(current.clone());
        // Next multiset: increment from the right, reset suffix to the new
        // value to keep sortedness.
        let mut i = patrols;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < space_max {
                let v = current[i] + 1;
                for x in current.iter_mut().skip(i) {
                    *x = v;
                }
                break;
            }
        }
    }
}

fn tuple_step_ok(from: &[usize], to: &[usize], speed: usize) -> bool {
    from.iter()
        .zip(to)
        .all(|(&a, &b)| a.abs_diff(b) <= speed)
}

/// Every pure strategy as a sequence of sorted position tuples, one per
/// round, linked by speed-feasible sorted matchings. Payoffs only depend on
/// these multisets, so this enumeration is deduplicated and complete.
pub fn enumerate_pure_strategies(
    instance: &ProblemInstance,
    cap: usize,
) -> Result<Vec<PureStrategy>, VerifyError> {
    let space_max = usize::try_from(&instance.space_max_int()).unwrap_or(usize::MAX);
    let patrols = instance.effective_patrol_count();
    let speed = usize::try_from(&instance.speed_floor()).unwrap_or(usize::MAX);
    let horizon = instance.horizon;

    let states = binomial((space_max + patrols) as u128, patrols as u128);
    match states {
        // Each state extends to at least one strategy (hold still), so the
        // state count already lower-bounds the strategy count.
        Some(s) if s <= cap as u128 => {}
        other => {
            return Err(VerifyError::TooLarge {
                cap,
                estimate: other.map_or("overflow".to_string(), |s| s.to_string()),
            });
        }
    }
    let tuples = sorted_tuples(space_max, patrols);

    // Count path extensions per round before materializing.
    let mut counts: Vec<u128> = vec![1; tuples.len()];
    for _ in 1..horizon {
        let mut next: Vec<u128> = vec![0; tuples.len()];
        for (i, from) in tuples.iter().enumerate() {
            if counts[i] == 0 {
                continue;
            }
            for (j, to) in tuples.iter().enumerate() {
                if tuple_step_ok(from, to, speed) {
                    next[j] = next[j]
                        .checked_add(counts[i])
                        .unwrap_or(u128::MAX);
                }
            }
        }
        counts = next;
        let total: u128 = counts.iter().fold(0u128, |a, b| a.saturating_add(*b));
        if total > cap as u128 {
            return Err(VerifyError::TooLarge {
                cap,
                estimate: total.to_string(),
            });
        }
    }

    // Depth-first materialization over rounds.
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::with_capacity(horizon);
    fn emit(
        tuples: &[Vec<usize>],
        speed: usize,
        horizon: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<PureStrategy>,
    ) {
        if stack.len() == horizon {
            let patrols = tuples[0].len();
            let paths = (0..patrols)
                .map(|k| {
                    stack
                        .iter()
                        .map(|&ti| Int::from(tuples[ti][k]))
                        .collect::<Vec<Int>>()
                })
                .collect();
            out.push(PureStrategy { paths });
            return;
        }
        for (j, to) in tuples.iter().enumerate() {
            if let Some(&last) = stack.last() {
                if !tuple_step_ok(&tuples[last], to, speed) {
                    continue;
                }
            }
            stack.push(j);
            emit(tuples, speed, horizon, stack, out);
            stack.pop();
        }
    }
    emit(&tuples, speed, horizon, &mut stack, &mut out);
    Ok(out)
}

/// Exact game value by brute force: enumerate the defender's pure
/// strategies, then solve the induced matrix game as an LP.
pub fn matrix_game_value(
    instance: &ProblemInstance,
    cap: usize,
) -> Result<Rational, VerifyError> {
    let strategies = enumerate_pure_strategies(instance, cap)?;
    let n = strategies.len();
    let u_var = n;
    let mut model = LpModel::new(n + 1);
    model.bounds[u_var] = VarBound::Free;
    model.objective = vec![(u_var, Rational::one())];
    model.add_constraint(
        (0..n).map(|i| (i, Rational::one())).collect(),
        Relation::Eq,
        Rational::one(),
    );
    for track in &instance.targets {
        for t in 1..=instance.horizon {
            let pos = &track.positions[t - 1];
            let weight = &track.weights[t - 1];
            let mut coeffs: Vec<(usize, Rational)> = strategies
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.covers(t, pos, &instance.radius))
                .map(|(i, _)| (i, weight.clone()))
                .collect();
            coeffs.push((u_var, -Rational::one()));
            model.add_constraint(coeffs, Relation::Le, Rational::zero());
        }
    }
    let solution = lp::minimize::<Rational>(&model).expect("matrix game LP is always solvable");
    Ok(solution.objective)
}

/// Outcome of replaying a solver result against the oracles.
#[derive(Debug, Clone)]
pub struct EquilibriumCheck {
    pub probability_sum: Rational,
    pub probability_ok: bool,
    pub feasible_ok: bool,
    pub feasibility_details: Vec<String>,
    pub best_response: Rational,
    pub best_response_gap: Rational,
    pub best_response_ok: bool,
    /// Present when the instance fits under the enumeration cap.
    pub oracle_value: Option<Rational>,
    pub oracle_gap: Option<Rational>,
    pub oracle_ok: Option<bool>,
}

impl EquilibriumCheck {
    pub fn passed(&self) -> bool {
        self.probability_ok
            && self.feasible_ok
            && self.best_response_ok
            && self.oracle_ok.unwrap_or(true)
    }
}

/// Verifies probabilities, feasibility of the support, the best-response
/// certificate, and (within `cap`) agreement with the brute-force value.
/// `tolerance` is zero for exact results and a small rational for float
/// ones.
pub fn check_equilibrium(
    instance: &ProblemInstance,
    value: &Rational,
    strategy: &MixedStrategy<Rational>,
    cap: usize,
    tolerance: &Rational,
) -> EquilibriumCheck {
    let probability_sum: Rational = strategy
        .support
        .iter()
        .fold(Rational::zero(), |acc, (_, p)| acc + p);
    let probability_ok = (probability_sum.clone() - Rational::one()).abs() <= *tolerance;

    let space_max = instance.space_max_int();
    let speed_floor = instance.speed_floor();
    let mut feasibility_details = Vec::new();
    for (idx, (s, p)) in strategy.support.iter().enumerate() {
        if p.is_negative() {
            feasibility_details.push(format!("support entry {idx} has negative probability"));
        }
        if s.paths.len() != instance.effective_patrol_count() {
            feasibility_details.push(format!(
                "support entry {idx} has {} paths, expected {}",
                s.paths.len(),
                instance.effective_patrol_count()
            ));
        }
        for (k, path) in s.paths.iter().enumerate() {
            if path.len() != instance.horizon {
                feasibility_details
                    .push(format!("entry {idx} patrol {k} has a short path"));
                continue;
            }
            for (t, w) in path.windows(2).enumerate() {
                if (&w[1] - &w[0]).abs() > speed_floor {
                    feasibility_details.push(format!(
                        "entry {idx} patrol {k} jumps {} -> {} between rounds {} and {}",
                        w[0],
                        w[1],
                        t + 1,
                        t + 2
                    ));
                }
            }
            for (t, m) in path.iter().enumerate() {
                if m.is_negative() || *m > space_max {
                    feasibility_details.push(format!(
                        "entry {idx} patrol {k} leaves [0, M] at round {}",
                        t + 1
                    ));
                }
            }
        }
    }
    let feasible_ok = feasibility_details.is_empty();

    let report = attacker_best_response(instance, &support_of(strategy));
    let best_response_gap = (report.value.clone() - value).abs();
    let best_response_ok = best_response_gap <= *tolerance;

    let (oracle_value, oracle_gap, oracle_ok) = match matrix_game_value(instance, cap) {
        Ok(v) => {
            let gap = (v.clone() - value).abs();
            let ok = gap <= *tolerance;
            (Some(v), Some(gap), Some(ok))
        }
        Err(VerifyError::TooLarge { .. }) => (None, None, None),
    };

    EquilibriumCheck {
        probability_sum,
        probability_ok,
        feasible_ok,
        feasibility_details,
        best_response: report.value,
        best_response_gap,
        best_response_ok,
        oracle_value,
        oracle_gap,
        oracle_ok,
    }
}
