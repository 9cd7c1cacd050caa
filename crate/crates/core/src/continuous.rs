//! Rational patrol positions reduce to the integer grid: multiply every
//! spatial quantity by the least common denominator, solve the discrete
//! game, and divide the resulting positions back.

use num_traits::One;

use crate::equilibrium::{self, EquilibriumError, EquilibriumResult};
use crate::model::{Mode, ProblemInstance, TargetTrack};
use crate::scalar::{Int, Rational, Scalar};

/// Discrete solve of a rescaled instance, with positions mapped back to
/// multiples of `1/scale`.
#[derive(Debug, Clone)]
pub struct ContinuousSolution<S: Scalar> {
    pub value: S,
    pub scale: Int,
    /// Support with rational positions: `paths[k][t-1]` for patrol `k`.
    pub support: Vec<(Vec<Vec<Rational>>, S)>,
    pub discrete: EquilibriumResult<S>,
}

/// Least common multiple of the denominators of all target positions, the
/// speed, the radius, and the space bound.
pub fn scale_factor(instance: &ProblemInstance) -> Int {
    let mut m = Int::one();
    let mut fold = |r: &Rational| {
        m = crate::model::lcm(&m, r.denom());
    };
    for track in &instance.targets {
        for pos in &track.positions {
            fold(pos);
        }
    }
    fold(&instance.speed);
    fold(&instance.radius);
    fold(&instance.space_max);
    m
}

/// Multiplies every spatial quantity by the scale factor; weights and the
/// horizon are untouched. The result is a valid discrete instance.
pub fn scale_instance(instance: &ProblemInstance) -> (ProblemInstance, Int) {
    let m = scale_factor(instance);
    let factor = Rational::from_integer(m.clone());
    let targets = instance
        .targets
        .iter()
        .map(|track| TargetTrack {
            id: track.id,
            positions: track.positions.iter().map(|p| p * &factor).collect(),
            weights: track.weights.clone(),
        })
        .collect();
    let scaled = ProblemInstance::new(
        instance.horizon,
        &instance.space_max * &factor,
        instance.patrol_count,
        &instance.speed * &factor,
        &instance.radius * &factor,
        targets,
        Mode::Discrete,
    )
    .expect("scaling preserves validity");
    (scaled, m)
}

/// Solves a continuous-mode instance by rescaling. The value needs no
/// unscaling (weights were untouched); positions come back divided by the
/// scale factor.
pub fn solve_continuous<S: Scalar>(
    instance: &ProblemInstance,
) -> Result<ContinuousSolution<S>, EquilibriumError> {
    let (scaled, m) = scale_instance(instance);
    let discrete = equilibrium::solve::<S>(&scaled)?;
    let factor = Rational::from_integer(m.clone());
    let support = discrete
        .strategy
        .support
        .iter()
        .map(|(s, p)| {
            let paths = s
                .paths
                .iter()
                .map(|path| {
                    path.iter()
                        .map(|pos| Rational::from_integer(pos.clone()) / &factor)
                        .collect()
                })
                .collect();
            (paths, p.clone())
        })
        .collect();
    Ok(ContinuousSolution {
        value: discrete.value.clone(),
        scale: m,
        support,
        discrete,
    })
}
