#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use segpost::emissions::{
    log_density_table, EmissionModel, Family, LogDensityTable, ObservationSequence,
};
use segpost::prior::TransitionPrior;
use segpost::Grid;

pub struct Instance {
    pub data: ObservationSequence,
    pub model: EmissionModel,
    pub table: LogDensityTable,
    pub prior: TransitionPrior,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random data from a random `segments`-segment model of `family`, scored
/// under that model.
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    segments: usize,
    family: Family,
    tabulated: bool,
) -> Instance {
    let model = match family {
        Family::Poisson => {
            let rates: Vec<f64> = (0..segments).map(|_| rng.random_range(0.5..8.0)).collect();
            EmissionModel::poisson(&rates).unwrap()
        }
        Family::GaussianHeteroscedastic => {
            let p: Vec<(f64, f64)> = (0..segments)
                .map(|_| (rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0)))
                .collect();
            EmissionModel::gaussian_heteroscedastic(&p).unwrap()
        }
        _ => {
            let means: Vec<f64> = (0..segments).map(|_| rng.random_range(-2.0..2.0)).collect();
            EmissionModel::gaussian_homoscedastic(&means, rng.random_range(0.5..2.0)).unwrap()
        }
    };
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let k = (i * segments) / n;
            let loc = model.params()[k].location;
            match family {
                Family::Poisson => Poisson::new(loc).unwrap().sample(rng),
                _ => loc + Normal::new(0.0, 1.0).unwrap().sample(rng),
            }
        })
        .collect();
    let data = ObservationSequence::new(values).unwrap();
    let table = log_density_table(&data, &model).unwrap();
    let prior = if tabulated {
        let eta: Vec<f64> = (0..segments * n)
            .map(|_| rng.random_range(0.05..0.95))
            .collect();
        TransitionPrior::tabulated(Grid::from_row_major(segments, n, eta)).unwrap()
    } else {
        TransitionPrior::homogeneous(segments, n, rng.random_range(0.05..0.95)).unwrap()
    };
    Instance {
        data,
        model,
        table,
        prior,
    }
}

/// Gaussian sequence with `segments` equal-length segments alternating
/// between 0 and `delta`, unit noise.
pub fn step_sequence(rng: &mut ChaCha8Rng, n: usize, segments: usize, delta: f64) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..n)
        .map(|i| {
            let k = (i * segments) / n;
            (if k.is_multiple_of(2) { 0.0 } else { delta }) + noise.sample(rng)
        })
        .collect()
}
