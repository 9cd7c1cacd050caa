//! Shared helpers for integration tests: deterministic random instances.

use linepatrol::model::{Mode, ProblemInstance, TargetTrack};
use linepatrol::scalar::Rational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(s: &str) -> Rational {
    linepatrol::model::parse_rational(s).unwrap()
}

pub struct InstanceShape {
    pub max_horizon: usize,
    pub max_space: i64,
    pub max_targets: usize,
    pub max_patrols: usize,
    pub max_speed: i64,
    pub max_radius: i64,
    /// Allow non-integer target positions with this denominator bound
    /// (1 = integers only).
    pub max_denominator: i64,
}

impl Default for InstanceShape {
    fn default() -> Self {
        Self {
            max_horizon: 3,
            max_space: 6,
            max_targets: 2,
            max_patrols: 2,
            max_speed: 3,
            max_radius: 2,
            max_denominator: 1,
        }
    }
}

pub fn random_instance(rng: &mut ChaCha8Rng, shape: &InstanceShape) -> ProblemInstance {
    let horizon = rng.gen_range(1..=shape.max_horizon);
    let space = rng.gen_range(1..=shape.max_space);
    let targets_n = rng.gen_range(1..=shape.max_targets);
    let patrols = rng.gen_range(1..=shape.max_patrols);
    let speed = rng.gen_range(0..=shape.max_speed);
    let radius_num = rng.gen_range(0..=shape.max_radius);
    let radius_den = rng.gen_range(1..=shape.max_denominator);
    let targets = (0..targets_n)
        .map(|id| {
            let positions = (0..horizon)
                .map(|_| {
                    let den = rng.gen_range(1..=shape.max_denominator);
                    let num = rng.gen_range(-space / 4..=space * den + space / 4 + 1);
                    Rational::new(num.into(), den.into())
                })
                .collect();
            let weights = (0..horizon)
                .map(|_| Rational::from_integer(rng.gen_range(0..=3).into()))
                .collect();
            TargetTrack { id, positions, weights }
        })
        .collect();
    ProblemInstance::new(
        horizon,
        Rational::from_integer(space.into()),
        patrols,
        Rational::from_integer(speed.into()),
        Rational::new(radius_num.into(), radius_den.into()),
        targets,
        Mode::Discrete,
    )
    .unwrap()
}
