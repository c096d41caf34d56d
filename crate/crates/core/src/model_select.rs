//! Initial segmentation by greedy least squares, Viterbi refinement and
//! BIC choice of the number of segments.

use rayon::prelude::*;
use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::decode::viterbi;
use crate::emissions::{
    fit_mle, fit_mle_floored, log_density_table, EmissionModel, Family, ObservationSequence,
};
use crate::error::{Error, Result};
use crate::prior::{TransitionPrior, DEFAULT_ETA};

pub const MAX_REFINE_ITERATIONS: usize = 20;

/// Prefix sums of centred values and their squares, for O(1) segment SSE.
struct SegmentCost {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl SegmentCost {
    fn new(values: &[f64]) -> Self {
        let centre = values.iter().sum::<f64>() / values.len() as f64;
        let mut sum = Vec::with_capacity(values.len() + 1);
        let mut sum_sq = Vec::with_capacity(values.len() + 1);
        sum.push(0.0);
        sum_sq.push(0.0);
        for &v in values {
            let d = v - centre;
            sum.push(sum.last().unwrap() + d);
            sum_sq.push(sum_sq.last().unwrap() + d * d);
        }
        Self { sum, sum_sq }
    }

    /// Within-segment sum of squares of `[start, end)`.
    fn sse(&self, start: usize, end: usize) -> f64 {
        let len = (end - start) as f64;
        let s = self.sum[end] - self.sum[start];
        (self.sum_sq[end] - self.sum_sq[start] - s * s / len).max(0.0)
    }

    /// Best single split of `[start, end)`: `(reduction, split)` where the
    /// right part starts at `split`. The smallest split wins ties.
    fn best_split(&self, start: usize, end: usize) -> Option<(f64, usize)> {
        if end - start < 2 {
            return None;
        }
        let whole = self.sse(start, end);
        let mut best: Option<(f64, usize)> = None;
        for j in start + 1..end {
            let gain = whole - self.sse(start, j) - self.sse(j, end);
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, j));
            }
        }
        best
    }
}

/// Total within-segment sum of squares of a segmentation.
pub fn total_sse(values: &[f64], cps: &ChangePointVector) -> f64 {
    let cost = SegmentCost::new(values);
    cps.segments(values.len())
        .map(|r| cost.sse(r.start, r.end))
        .sum()
}

/// Binary segmentation for a fixed number of segments: repeatedly split the
/// segment whose best single cut removes the most squared error.
pub fn greedy_segment(data: &ObservationSequence, segments: usize) -> Result<ChangePointVector> {
    let n = data.len();
    if segments == 0 {
        return Err(Error::Domain("number of segments must be positive".into()));
    }
    if segments > n {
        return Err(Error::Infeasible { segments, n });
    }
    let cost = SegmentCost::new(data.values());
    // (start, end, cached best split)
    let mut pieces = vec![(0, n, cost.best_split(0, n))];
    while pieces.len() < segments {
        let (idx, split) = pieces
            .iter()
            .enumerate()
            .filter_map(|(idx, &(_, _, best))| best.map(|b| (idx, b)))
            .fold(None::<(usize, (f64, usize))>, |acc, (idx, b)| match acc {
                Some((_, a)) if a.0 >= b.0 => acc,
                _ => Some((idx, b)),
            })
            .map(|(idx, (_, split))| (idx, split))
            .expect("a splittable segment exists while segments <= n");
        let (start, end, _) = pieces[idx];
        pieces[idx] = (start, split, cost.best_split(start, split));
        pieces.insert(idx + 1, (split, end, cost.best_split(split, end)));
    }
    let positions = pieces.iter().skip(1).map(|&(start, _, _)| start).collect();
    ChangePointVector::new(positions, n)
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub changepoints: ChangePointVector,
    pub model: EmissionModel,
    pub iterations: usize,
    /// Whether any fitted scale or rate had to be floored.
    pub degenerate: bool,
}

/// Alternates MLE fitting and Viterbi decoding from `initial` until the
/// change-point set stops moving, at most [`MAX_REFINE_ITERATIONS`] times.
pub fn refine(
    data: &ObservationSequence,
    initial: &ChangePointVector,
    family: Family,
) -> Result<Refinement> {
    refine_with(data, initial, family, false)
}

fn fit_with(
    data: &ObservationSequence,
    cps: &ChangePointVector,
    family: Family,
    floor: bool,
) -> Result<(EmissionModel, bool)> {
    if floor {
        fit_mle_floored(data, cps, family)
    } else {
        fit_mle(data, cps, family).map(|m| (m, false))
    }
}

fn refine_with(
    data: &ObservationSequence,
    initial: &ChangePointVector,
    family: Family,
    floor: bool,
) -> Result<Refinement> {
    let n = data.len();
    let mut current = ChangePointVector::new(initial.positions().to_vec(), n)?;
    let prior = TransitionPrior::homogeneous(current.num_segments(), n, DEFAULT_ETA)?;
    let mut iterations = 0;
    let mut degenerate = false;
    while iterations < MAX_REFINE_ITERATIONS {
        iterations += 1;
        let (model, floored) = fit_with(data, &current, family, floor)?;
        degenerate |= floored;
        let table = log_density_table(data, &model)?;
        let next = viterbi(&table, &prior)?.changepoints;
        if next == current {
            return Ok(Refinement {
                changepoints: current,
                model,
                iterations,
                degenerate,
            });
        }
        current = next;
    }
    let (model, floored) = fit_with(data, &current, family, floor)?;
    Ok(Refinement {
        changepoints: current,
        model,
        iterations,
        degenerate: degenerate || floored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelScore {
    pub segments: usize,
    pub log_likelihood: f64,
    pub parameters: usize,
    pub bic: f64,
    pub degenerate: bool,
}

impl ModelScore {
    pub fn new(
        segments: usize,
        log_likelihood: f64,
        parameters: usize,
        n: usize,
        degenerate: bool,
    ) -> Self {
        Self {
            segments,
            log_likelihood,
            parameters,
            bic: log_likelihood - parameters as f64 * (n as f64).ln(),
            degenerate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub segments: usize,
    pub changepoints: ChangePointVector,
    pub model: EmissionModel,
    pub scores: Vec<ModelScore>,
}

/// Runs greedy → refine → fit for every `K` in `1..=max_segments` and keeps
/// the largest BIC, preferring fewer segments on ties.
pub fn select_segments(
    data: &ObservationSequence,
    max_segments: usize,
    family: Family,
) -> Result<Selection> {
    let n = data.len();
    if max_segments == 0 {
        return Err(Error::Domain(
            "maximum number of segments must be positive".into(),
        ));
    }
    if max_segments > n {
        return Err(Error::Infeasible {
            segments: max_segments,
            n,
        });
    }
    if family == Family::ExternalLogDensity {
        return Err(Error::UnsupportedFamily(
            "model selection needs a parametric family".into(),
        ));
    }
    let candidates: Vec<(ModelScore, Refinement)> = (1..=max_segments)
        .into_par_iter()
        .map(|k| {
            let initial = greedy_segment(data, k)?;
            let refined = refine_with(data, &initial, family, true)?;
            let table = log_density_table(data, &refined.model)?;
            let ll = table.log_likelihood(&refined.changepoints)?;
            let score = ModelScore::new(k, ll, family.parameter_count(k), n, refined.degenerate);
            Ok((score, refined))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (idx, (score, _)) in candidates.iter().enumerate() {
        if score.bic > candidates[best].0.bic {
            best = idx;
        }
    }
    let scores = candidates.iter().map(|(s, _)| *s).collect();
    let (score, refined) = candidates.into_iter().nth(best).expect("non-empty");
    Ok(Selection {
        segments: score.segments,
        changepoints: refined.changepoints,
        model: refined.model,
        scores,
    })
}
