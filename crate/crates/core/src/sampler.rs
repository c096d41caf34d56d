//! Exact draws of complete segmentations from the posterior, and
//! parametric bootstrap of new observation sequences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::changepoints::ChangePointVector;
use crate::emissions::{EmissionModel, Family, LogDensityTable, ObservationSequence};
use crate::engine::{check_dimensions, ForwardBackward};
use crate::error::{Error, Result};
use crate::prior::TransitionPrior;

/// Generator for stream `stream` of `seed`. Streams are independent, so
/// sample `j` is reproducible regardless of how the work is scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `count` segmentations i.i.d. from `P(S | X, S ends in K)`.
///
/// Each draw walks left to right: in segment `k` at position `i - 1` it
/// jumps with probability
/// `eta_k(i) g_{k+1}(x_i) B_i(k+1) / B_{i-1}(k)`, and is forced to jump once
/// the remaining positions equal the remaining segments.
pub fn sample_segmentations(
    fb: &ForwardBackward,
    table: &LogDensityTable,
    prior: &TransitionPrior,
    count: usize,
    seed: u64,
) -> Result<Vec<ChangePointVector>> {
    if count == 0 {
        return Err(Error::Domain("number of samples must be at least 1".into()));
    }
    check_dimensions(table, prior)?;
    if fb.len() != table.len() || fb.num_segments() != table.num_segments() {
        return Err(Error::DimensionMismatch(
            "forward-backward state does not match the table".into(),
        ));
    }
    (0..count)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j as u64);
            draw_one(fb, table, prior, &mut rng)
        })
        .collect()
}

fn draw_one<R: Rng>(
    fb: &ForwardBackward,
    table: &LogDensityTable,
    prior: &TransitionPrior,
    rng: &mut R,
) -> Result<ChangePointVector> {
    let (n, segments) = (table.len(), table.num_segments());
    let b = fb.log_backward();
    let mut positions = Vec::with_capacity(segments - 1);
    let mut k = 0;
    for i in 1..n {
        if k + 1 == segments {
            break;
        }
        let jump = if n - i == segments - 1 - k {
            true
        } else {
            let log_p = prior.reduced_jump(k, i) + table.get(i, k + 1) + b.scaled().get(i, k + 1)
                - b.scaled().get(i - 1, k)
                - b.step(i - 1);
            rng.random::<f64>() < log_p.exp()
        };
        if jump {
            positions.push(i);
            k += 1;
        }
    }
    ChangePointVector::new(positions, n)
}

/// A fresh sequence drawn from the emission model, segment by segment.
pub fn parametric_bootstrap(
    changepoints: &ChangePointVector,
    model: &EmissionModel,
    n: usize,
    seed: u64,
) -> Result<ObservationSequence> {
    if model.family() == Family::ExternalLogDensity {
        return Err(Error::UnsupportedFamily(
            "cannot draw observations from an external log-density table".into(),
        ));
    }
    let cps = ChangePointVector::new(changepoints.positions().to_vec(), n)?;
    if cps.num_segments() != model.num_segments() {
        return Err(Error::DimensionMismatch(format!(
            "{} segments but the model has {}",
            cps.num_segments(),
            model.num_segments()
        )));
    }
    let mut rng = stream_rng(seed, 0);
    let mut values = Vec::with_capacity(n);
    for (k, range) in cps.segments(n).enumerate() {
        let p = model.params()[k];
        match model.family() {
            Family::GaussianHomoscedastic | Family::GaussianHeteroscedastic => {
                let scale = p.scale.or(model.shared_scale()).unwrap_or(f64::NAN);
                let dist = Normal::new(p.location, scale)
                    .map_err(|e| Error::Domain(format!("segment {}: {e}", k + 1)))?;
                values.extend((0..range.len()).map(|_| dist.sample(&mut rng)));
            }
            Family::Poisson => {
                let dist = Poisson::new(p.location)
                    .map_err(|e| Error::Domain(format!("segment {}: {e}", k + 1)))?;
                values.extend((0..range.len()).map(|_| dist.sample(&mut rng)));
            }
            Family::ExternalLogDensity => unreachable!("rejected above"),
        }
    }
    ObservationSequence::new(values)
}
