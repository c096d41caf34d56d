//! Simulation designs with alternating segment means, posterior-mean loss
//! metrics and a replicate harness for the short (n = 500) and long
//! (n = 10 000) designs.

use std::io::Write;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::emissions::{fit_mle, log_density_table, EmissionModel, Family, ObservationSequence};
use crate::engine::ForwardBackward;
use crate::error::{Error, Result};
use crate::model_select::select_segments;
use crate::prior::{TransitionPrior, DEFAULT_ETA};
use crate::sampler::stream_rng;

/// Change-points of the short design (n = 500).
pub const SHORT_DESIGN_CHANGEPOINTS: [usize; 6] = [22, 65, 108, 219, 252, 435];
pub const SHORT_DESIGN_LEN: usize = 500;
pub const LONG_DESIGN_LEN: usize = 10_000;
pub const LONG_DESIGN_CHANGEPOINTS: usize = 39;
pub const LONG_DESIGN_MIN_SEGMENT: usize = 25;

const MAX_REJECTION_ATTEMPTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationDesign {
    pub n: usize,
    pub true_changepoints: ChangePointVector,
    /// Mean of odd (1st, 3rd, ...) segments.
    pub theta0: f64,
    /// Mean of even segments.
    pub theta1: f64,
    pub family: Family,
    pub seed: u64,
}

impl SimulationDesign {
    pub fn new(
        n: usize,
        true_changepoints: ChangePointVector,
        theta0: f64,
        theta1: f64,
        family: Family,
        seed: u64,
    ) -> Result<Self> {
        let true_changepoints = ChangePointVector::new(true_changepoints.into_inner(), n)?;
        match family {
            Family::GaussianHomoscedastic | Family::GaussianHeteroscedastic => {
                if !(theta0.is_finite() && theta1.is_finite()) {
                    return Err(Error::Domain("segment means must be finite".into()));
                }
            }
            Family::Poisson => {
                if !(theta0 > 0.0 && theta1 > 0.0 && theta0.is_finite() && theta1.is_finite()) {
                    return Err(Error::Domain(format!(
                        "poisson means must be positive, got {theta0} and {theta1}"
                    )));
                }
            }
            Family::ExternalLogDensity => {
                return Err(Error::UnsupportedFamily(
                    "cannot simulate from an external log-density table".into(),
                ))
            }
        }
        Ok(Self {
            n,
            true_changepoints,
            theta0,
            theta1,
            family,
            seed,
        })
    }

    /// Six fixed change-points on 500 observations.
    pub fn short(family: Family, theta0: f64, theta1: f64, seed: u64) -> Result<Self> {
        let cps = ChangePointVector::new(SHORT_DESIGN_CHANGEPOINTS.to_vec(), SHORT_DESIGN_LEN)?;
        Self::new(SHORT_DESIGN_LEN, cps, theta0, theta1, family, seed)
    }

    /// 39 uniformly placed change-points on 10 000 observations with every
    /// segment at least 25 long. The placement is drawn from `seed`.
    pub fn long(family: Family, theta0: f64, theta1: f64, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, u64::MAX);
        let cps = random_changepoints(
            LONG_DESIGN_LEN,
            LONG_DESIGN_CHANGEPOINTS,
            LONG_DESIGN_MIN_SEGMENT,
            &mut rng,
        )?;
        Self::new(LONG_DESIGN_LEN, cps, theta0, theta1, family, seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Alternating `theta0, theta1, theta0, ...` segment means.
    pub fn segment_means(&self) -> Vec<f64> {
        (0..self.true_changepoints.num_segments())
            .map(|k| if k % 2 == 0 { self.theta0 } else { self.theta1 })
            .collect()
    }

    pub fn true_track(&self) -> Vec<f64> {
        let means = self.segment_means();
        self.true_changepoints
            .states(self.n)
            .into_iter()
            .map(|k| means[k])
            .collect()
    }
}

/// Rejection sampling: `count` distinct uniform positions in `[1, n-1]`,
/// redrawn until every segment has at least `min_len` observations.
pub fn random_changepoints<R: Rng>(
    n: usize,
    count: usize,
    min_len: usize,
    rng: &mut R,
) -> Result<ChangePointVector> {
    if (count + 1) * min_len > n || count >= n {
        return Err(Error::Infeasible {
            segments: count + 1,
            n,
        });
    }
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let mut positions: Vec<usize> = sample(rng, n - 1, count)
            .into_iter()
            .map(|p| p + 1)
            .collect();
        positions.sort_unstable();
        let cps = ChangePointVector::new(positions, n)?;
        if cps.segments(n).all(|r| r.len() >= min_len) {
            return Ok(cps);
        }
    }
    Err(Error::Numerical(format!(
        "no placement with minimum segment length {min_len} after {MAX_REJECTION_ATTEMPTS} attempts"
    )))
}

/// Draws one sequence from `design`; returns it with the true mean track.
pub fn generate(design: &SimulationDesign) -> Result<(ObservationSequence, Vec<f64>)> {
    let truth = design.true_track();
    let mut rng = stream_rng(design.seed, 0);
    let values: Vec<f64> = match design.family {
        Family::GaussianHomoscedastic | Family::GaussianHeteroscedastic => {
            let noise = Normal::new(0.0, 1.0).expect("unit normal");
            truth.iter().map(|m| m + noise.sample(&mut rng)).collect()
        }
        Family::Poisson => truth
            .iter()
            .map(|&m| {
                Poisson::new(m)
                    .map(|d| d.sample(&mut rng))
                    .map_err(|e| Error::Domain(e.to_string()))
            })
            .collect::<Result<_>>()?,
        Family::ExternalLogDensity => {
            return Err(Error::UnsupportedFamily(
                "cannot simulate from an external log-density table".into(),
            ))
        }
    };
    Ok((ObservationSequence::new(values)?, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Mae,
}

impl Metric {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::Poisson => Metric::Mae,
            _ => Metric::Mse,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Metric::Mse => "MSE",
            Metric::Mae => "MAE (mean)",
        }
    }
}

/// Per-observation mean squared or absolute error between two tracks.
pub fn loss(estimated: &[f64], truth: &[f64], metric: Metric) -> Result<f64> {
    if estimated.len() != truth.len() || truth.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "tracks of length {} and {}",
            estimated.len(),
            truth.len()
        )));
    }
    let total: f64 = estimated
        .iter()
        .zip(truth)
        .map(|(e, t)| match metric {
            Metric::Mse => (e - t) * (e - t),
            Metric::Mae => (e - t).abs(),
        })
        .sum();
    Ok(total / truth.len() as f64)
}

/// Posterior mean track for a fixed segmentation size, with parameters
/// fitted by maximum likelihood on `changepoints`.
pub fn posterior_mean_given(
    data: &ObservationSequence,
    changepoints: &ChangePointVector,
    family: Family,
) -> Result<Vec<f64>> {
    let model = fit_mle(data, changepoints, family)?;
    posterior_mean_with_model(data, &model)
}

fn posterior_mean_with_model(
    data: &ObservationSequence,
    model: &EmissionModel,
) -> Result<Vec<f64>> {
    let table = log_density_table(data, model)?;
    let prior = TransitionPrior::homogeneous(model.num_segments(), data.len(), DEFAULT_ETA)?;
    ForwardBackward::compute(&table, &prior)?.posterior_mean_track(model)
}

/// How the segmentation handed to the posterior stage is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    /// Greedy least squares, Viterbi refinement and BIC over `1..=max_segments`.
    Greedy { max_segments: usize },
    /// The true change-points.
    Truth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub mse: f64,
    pub mae: f64,
    pub segments: usize,
}

pub fn run_replicate(design: &SimulationDesign, pipeline: Pipeline) -> Result<ReplicateOutcome> {
    let (data, truth) = generate(design)?;
    let (track, segments) = match pipeline {
        Pipeline::Truth => (
            posterior_mean_given(&data, &design.true_changepoints, design.family)?,
            design.true_changepoints.num_segments(),
        ),
        Pipeline::Greedy { max_segments } => {
            let sel = select_segments(&data, max_segments, design.family)?;
            (posterior_mean_with_model(&data, &sel.model)?, sel.segments)
        }
    };
    Ok(ReplicateOutcome {
        mse: loss(&track, &truth, Metric::Mse)?,
        mae: loss(&track, &truth, Metric::Mae)?,
        segments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossReport {
    pub mse: f64,
    pub mae: f64,
    pub n_replicates: usize,
    /// Fraction of replicates whose segmentation had the true number of segments.
    pub correct_segments: f64,
}

/// Runs `replicates` independent draws of `design` (replicate `r` uses seed
/// `design.seed + r`) and averages the losses.
pub fn run_replicates(
    design: &SimulationDesign,
    pipeline: Pipeline,
    replicates: usize,
) -> Result<LossReport> {
    if replicates == 0 {
        return Err(Error::Domain("need at least one replicate".into()));
    }
    let outcomes: Vec<ReplicateOutcome> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            run_replicate(
                &design.with_seed(design.seed.wrapping_add(r as u64)),
                pipeline,
            )
        })
        .collect::<Result<_>>()?;
    let m = replicates as f64;
    let target = design.true_changepoints.num_segments();
    Ok(LossReport {
        mse: outcomes.iter().map(|o| o.mse).sum::<f64>() / m,
        mae: outcomes.iter().map(|o| o.mae).sum::<f64>() / m,
        n_replicates: replicates,
        correct_segments: outcomes.iter().filter(|o| o.segments == target).count() as f64 / m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossTableRow {
    pub theta0: f64,
    pub theta1: f64,
    pub metric: Metric,
    pub greedy: LossReport,
    pub truth: LossReport,
}

/// Which of the two designs to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignSize {
    Short,
    Long,
}

/// One row per `theta1`, comparing greedy+posterior and truth+posterior.
pub fn loss_table(
    family: Family,
    size: DesignSize,
    theta0: f64,
    theta1_values: &[f64],
    replicates: usize,
    max_segments: usize,
    seed: u64,
) -> Result<Vec<LossTableRow>> {
    theta1_values
        .iter()
        .map(|&theta1| {
            let design = match size {
                DesignSize::Short => SimulationDesign::short(family, theta0, theta1, seed)?,
                DesignSize::Long => SimulationDesign::long(family, theta0, theta1, seed)?,
            };
            let greedy = run_replicates(&design, Pipeline::Greedy { max_segments }, replicates)?;
            let truth = run_replicates(&design, Pipeline::Truth, replicates)?;
            Ok(LossTableRow {
                theta0,
                theta1,
                metric: Metric::for_family(family),
                greedy,
                truth,
            })
        })
        .collect()
}

/// Rows are `theta1` values; the loss columns hold the family's metric.
pub fn write_loss_table<W: Write>(mut out: W, rows: &[LossTableRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "theta0\ttheta1\tmetric\tgreedy+posterior\ttruth+posterior\tgreedy_correct_k\treplicates"
    )?;
    for row in rows {
        let pick = |r: &LossReport| match row.metric {
            Metric::Mse => r.mse,
            Metric::Mae => r.mae,
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            crate::report::fmt_sig(row.theta0),
            crate::report::fmt_sig(row.theta1),
            row.metric.label(),
            crate::report::fmt_sig(pick(&row.greedy)),
            crate::report::fmt_sig(pick(&row.truth)),
            crate::report::fmt_sig(row.greedy.correct_segments),
            row.greedy.n_replicates
        )?;
    }
    Ok(())
}
