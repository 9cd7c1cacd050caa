//! Game instances: moving weighted targets on a line segment, patrols with
//! a speed limit and a protection radius, and the strategy types the solver
//! produces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::scalar::{Int, Rational, Scalar};

/// How patrol positions are interpreted: integers in `[0, M]` or arbitrary
/// rationals in `[0, M]` (solved by rescaling to the integer grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Discrete,
    Continuous,
}

/// One target's trajectory: position and weight for every round `1..=T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetTrack {
    pub id: usize,
    pub positions: Vec<Rational>,
    pub weights: Vec<Rational>,
}

/// A validated game instance.
///
/// `space_max` is kept as a rational so continuous instances can carry a
/// fractional upper bound; in discrete mode it is always an integer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    pub horizon: usize,
    pub space_max: Rational,
    pub patrol_count: usize,
    pub speed: Rational,
    pub radius: Rational,
    pub targets: Vec<TargetTrack>,
    pub mode: Mode,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InstanceError {
    #[error("target {target} has a negative weight at round {round}")]
    NegativeWeight { target: usize, round: usize },
    #[error("target {target}: {field} has {got} entries, expected {expected}")]
    TrackLengthMismatch {
        target: usize,
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("horizon T must be at least 1")]
    ZeroHorizon,
    #[error("parameter {field} must be non-negative, got {value}")]
    NegativeParameter { field: &'static str, value: String },
    #[error("patrol count K must be at least 1")]
    ZeroPatrols,
    #[error("instance has no targets")]
    NoTargets,
    #[error("discrete instances need an integer space bound M, got {value}")]
    FractionalSpaceBound { value: String },
}

impl ProblemInstance {
    /// Validates raw fields and returns a normalized instance.
    pub fn new(
        horizon: usize,
        space_max: Rational,
        patrol_count: usize,
        speed: Rational,
        radius: Rational,
        targets: Vec<TargetTrack>,
        mode: Mode,
    ) -> Result<Self, InstanceError> {
        if horizon == 0 {
            return Err(InstanceError::ZeroHorizon);
        }
        if patrol_count == 0 {
            return Err(InstanceError::ZeroPatrols);
        }
        if targets.is_empty() {
            return Err(InstanceError::NoTargets);
        }
        if space_max.is_negative() {
            return Err(InstanceError::NegativeParameter {
                field: "M",
                value: space_max.to_string(),
            });
        }
        if speed.is_negative() {
            return Err(InstanceError::NegativeParameter {
                field: "D",
                value: speed.to_string(),
            });
        }
        if radius.is_negative() {
            return Err(InstanceError::NegativeParameter {
                field: "R",
                value: radius.to_string(),
            });
        }
        if mode == Mode::Discrete && !space_max.is_integer() {
            return Err(InstanceError::FractionalSpaceBound {
                value: space_max.to_string(),
            });
        }
        for track in &targets {
            if track.positions.len() != horizon {
                return Err(InstanceError::TrackLengthMismatch {
                    target: track.id,
                    field: "positions",
                    got: track.positions.len(),
                    expected: horizon,
                });
            }
            if track.weights.len() != horizon {
                return Err(InstanceError::TrackLengthMismatch {
                    target: track.id,
                    field: "weights",
                    got: track.weights.len(),
                    expected: horizon,
                });
            }
            if let Some(round) = track.weights.iter().position(Rational::is_negative) {
                return Err(InstanceError::NegativeWeight {
                    target: track.id,
                    round: round + 1,
                });
            }
        }
        Ok(Self {
            horizon,
            space_max,
            patrol_count,
            speed,
            radius,
            targets,
            mode,
        })
    }

    pub fn target_count(&self) -> usize {
        self.targets.len()
    }

    /// Patrols beyond one per target-round pair are redundant.
    pub fn effective_patrol_count(&self) -> usize {
        effective_patrol_count(self.patrol_count, self.target_count(), self.horizon)
    }

    /// Largest whole step a patrol can take between consecutive rounds.
    pub fn speed_floor(&self) -> Int {
        self.speed.floor().to_integer()
    }

    /// `space_max` as an integer; panics on continuous instances that were
    /// not rescaled first.
    pub fn space_max_int(&self) -> Int {
        debug_assert!(self.space_max.is_integer());
        self.space_max.to_integer()
    }

    /// Position and weight of target `a` at round `t` (1-based).
    pub fn target_at(&self, a: usize, t: usize) -> (&Rational, &Rational) {
        let track = &self.targets[a];
        (&track.positions[t - 1], &track.weights[t - 1])
    }
}

/// `min(K, n*T)`: more patrols than target-round pairs never help.
pub fn effective_patrol_count(patrols: usize, targets: usize, horizon: usize) -> usize {
    patrols.min(targets.saturating_mul(horizon))
}

/// A patrol at integer position `m` protects a target at `pos` iff the
/// target is within the protection radius.
pub fn protects(m: &Int, pos: &Rational, radius: &Rational) -> bool {
    let m_rat = Rational::from_integer(m.clone());
    (pos - m_rat).abs() <= *radius
}

/// One patrol's integer trajectory over all rounds.
pub type PatrolPath = Vec<Int>;

/// A pure defender strategy: one path per (effective) patrol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PureStrategy {
    pub paths: Vec<PatrolPath>,
}

impl PureStrategy {
    /// Checks the speed limit and the `[0, M]` bounds for every move.
    pub fn is_feasible(&self, space_max: &Int, speed_floor: &Int) -> bool {
        self.paths.iter().all(|path| {
            path.iter()
                .all(|m| !m.is_negative() && m <= space_max)
                && path
                    .windows(2)
                    .all(|w| (&w[1] - &w[0]).abs() <= *speed_floor)
        })
    }

    /// True when some patrol protects `pos` at round `t` (1-based).
    pub fn covers(&self, t: usize, pos: &Rational, radius: &Rational) -> bool {
        self.paths.iter().any(|p| protects(&p[t - 1], pos, radius))
    }
}

/// A probability distribution over pure strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy<S: Scalar> {
    pub support: Vec<(PureStrategy, S)>,
}

impl<S: Scalar> MixedStrategy<S> {
    pub fn probability_sum(&self) -> S {
        self.support
            .iter()
            .fold(S::zero(), |acc, (_, p)| acc + p.clone())
    }

    /// Lossless conversion of probabilities to rationals.
    pub fn to_exact(&self) -> MixedStrategy<Rational> {
        MixedStrategy {
            support: self
                .support
                .iter()
                .map(|(s, p)| (s.clone(), p.to_rat()))
                .collect(),
        }
    }
}

/// Parses an exact rational from a decimal string (`"2"`, `"-0.25"`) or a
/// fraction (`"1/3"`).
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-1, r),
        None => (1, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = match rest.split_once('.') {
        Some((i, f)) => (i, f),
        None => (rest, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(Rational::new(numer * sign, denom))
}

/// Renders a rational as `"p/q"`, or just `"p"` for integers.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Least common multiple of two positive integers.
pub fn lcm(a: &Int, b: &Int) -> Int {
    a.lcm(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn int(v: i64) -> Int {
        Int::from(v)
    }

    fn track(id: usize, positions: &[&str], weights: &[&str]) -> TargetTrack {
        TargetTrack {
            id,
            positions: positions.iter().map(|p| rat(p)).collect(),
            weights: weights.iter().map(|w| rat(w)).collect(),
        }
    }

    #[test]
    fn protects_boundary_cases() {
        assert!(protects(&int(5), &rat("11/2"), &rat("1")));
        assert!(protects(&int(5), &rat("5"), &rat("0")));
        assert!(!protects(&int(5), &rat("33/5"), &rat("1")));
    }

    #[test]
    fn protects_reflection_symmetry() {
        // protects(m, x, R) == protects(-m + 2c, -x + 2c, R)
        let cases = [(5i64, "11/2", "1"), (3, "7/2", "1/4"), (0, "-2", "3")];
        for c in 0i64..4 {
            for (m, x, r) in cases {
                let lhs = protects(&int(m), &rat(x), &rat(r));
                let refl_m = int(-m + 2 * c);
                let refl_x = -rat(x) + Rational::from_integer(int(2 * c));
                assert_eq!(lhs, protects(&refl_m, &refl_x, &rat(r)));
            }
        }
    }

    #[test]
    fn effective_count_caps() {
        assert_eq!(effective_patrol_count(3, 2, 4), 3);
        assert_eq!(effective_patrol_count(100, 2, 4), 8);
        assert_eq!(effective_patrol_count(8, 2, 4), 8);
    }

    #[test]
    fn validate_accepts_well_formed() {
        let inst = ProblemInstance::new(
            1,
            rat("2"),
            1,
            rat("0"),
            rat("0"),
            vec![track(0, &["0"], &["1"]), track(1, &["2"], &["1"])],
            Mode::Discrete,
        )
        .unwrap();
        assert_eq!(inst.effective_patrol_count(), 1);
    }

    #[test]
    fn validate_rejects_negative_weight() {
        let err = ProblemInstance::new(
            1,
            rat("2"),
            1,
            rat("0"),
            rat("0"),
            vec![track(0, &["0"], &["-1"])],
            Mode::Discrete,
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::NegativeWeight { .. }));
    }

    #[test]
    fn validate_rejects_track_length_mismatch() {
        let err = ProblemInstance::new(
            2,
            rat("2"),
            1,
            rat("0"),
            rat("0"),
            vec![track(0, &["0"], &["1", "1"])],
            Mode::Discrete,
        )
        .unwrap_err();
        assert!(matches!(err, InstanceError::TrackLengthMismatch { .. }));
    }

    #[test]
    fn validate_caps_patrols() {
        let inst = ProblemInstance::new(
            2,
            rat("3"),
            10,
            rat("1"),
            rat("0"),
            vec![track(0, &["0", "1"], &["1", "1"])],
            Mode::Discrete,
        )
        .unwrap();
        assert_eq!(inst.effective_patrol_count(), 2);
    }

    #[test]
    fn validate_rejects_zero_horizon_and_negatives() {
        assert!(matches!(
            ProblemInstance::new(0, rat("1"), 1, rat("0"), rat("0"),
                vec![track(0, &[], &[])], Mode::Discrete),
            Err(InstanceError::ZeroHorizon)
        ));
        assert!(matches!(
            ProblemInstance::new(1, rat("1"), 1, rat("-1"), rat("0"),
                vec![track(0, &["0"], &["1"])], Mode::Discrete),
            Err(InstanceError::NegativeParameter { field: "D", .. })
        ));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(rat("0.25"), Rational::new(int(1), int(4)));
        assert_eq!(rat("-1.5"), Rational::new(int(-3), int(2)));
        assert_eq!(rat("7"), Rational::from_integer(int(7)));
        assert_eq!(rat("2/6"), Rational::new(int(1), int(3)));
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("abc").is_none());
        assert!(parse_rational("").is_none());
    }

    #[test]
    fn rational_formatting_round_trips() {
        for s in ["1/2", "-3", "0", "22/7"] {
            let r = rat(s);
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
        assert_eq!(format_rational(&Rational::one()), "1");
    }

    #[test]
    fn pure_strategy_feasibility() {
        let s = PureStrategy {
            paths: vec![vec![int(0), int(2), int(1)]],
        };
        assert!(s.is_feasible(&int(4), &int(2)));
        assert!(!s.is_feasible(&int(4), &int(1)));
        assert!(!s.is_feasible(&int(1), &int(2)));
    }
}
