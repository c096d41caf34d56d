//! Log-space forward-backward recursions over the segment chain and the
//! posterior quantities derived from them.
//!
//! Grids are `n × K`, indexed by 0-based position and 0-based segment.
//! Change-point ranks and positions are 1-based, as in
//! [`ChangePointVector`].

use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::emissions::{EmissionModel, LogDensityTable};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::logspace::{log_add, log_sum_exp};
use crate::prior::TransitionPrior;

/// Range of segments reachable at position `i` while still ending in the
/// last segment at position `n - 1`.
#[inline]
pub(crate) fn feasible_states(
    i: usize,
    n: usize,
    segments: usize,
) -> std::ops::RangeInclusive<usize> {
    let remaining = n - 1 - i;
    let lo = (segments - 1).saturating_sub(remaining);
    let hi = i.min(segments - 1);
    lo..=hi
}

pub(crate) fn check_dimensions(table: &LogDensityTable, prior: &TransitionPrior) -> Result<()> {
    let (n, k) = (table.len(), table.num_segments());
    if prior.len() != n || prior.num_segments() != k {
        return Err(Error::DimensionMismatch(format!(
            "log-density table is {n}x{k} but the prior covers {} positions and {} segments",
            prior.len(),
            prior.num_segments()
        )));
    }
    if k > n {
        return Err(Error::Infeasible { segments: k, n });
    }
    Ok(())
}

/// Log-space grid stored as a per-row offset plus values relative to the
/// row maximum. Long sequences push plain log values far from zero, where
/// each addition loses absolute precision; the scaled form keeps stored
/// magnitudes small and accumulates the offsets with compensated summation.
#[derive(Debug, Clone)]
pub struct ScaledLogGrid {
    scaled: Grid,
    /// Transition logs removed from the recursion and restored by `get`.
    removed: RemovedPrior,
    /// Amount added to the offset when row `i` was produced from its
    /// predecessor in recursion order.
    steps: Vec<f64>,
    offsets: Vec<f64>,
}

impl ScaledLogGrid {
    pub fn rows(&self) -> usize {
        self.scaled.rows()
    }

    pub fn cols(&self) -> usize {
        self.scaled.cols()
    }

    /// Full log value at `(i, k)`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        let v = self.scaled.get(i, k);
        if v == f64::NEG_INFINITY {
            return v;
        }
        let r = &self.removed;
        let (n, segments) = (self.rows(), self.cols());
        let (jumps, transitions) = if r.forward {
            (k, i)
        } else {
            (segments - 1 - k, n - 1 - i)
        };
        let stays = transitions as f64 - jumps as f64;
        v + self.offsets[i] + jumps as f64 * r.log_jump + stays * r.log_stay
    }

    /// Values relative to each row's offset, with any homogeneous prior
    /// constant removed; the largest feasible entry of every row is zero.
    pub fn scaled(&self) -> &Grid {
        &self.scaled
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i]
    }

    pub fn step(&self, i: usize) -> f64 {
        self.steps[i]
    }
}

#[derive(Debug, Clone, Copy)]
struct RemovedPrior {
    log_stay: f64,
    log_jump: f64,
    forward: bool,
}

impl RemovedPrior {
    fn new(prior: &TransitionPrior, forward: bool) -> Self {
        let (log_stay, log_jump) = prior.removed_logs();
        Self {
            log_stay,
            log_jump,
            forward,
        }
    }
}

/// Neumaier compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Moves the maximum of the feasible entries of `row` into the returned
/// step. Rows with no finite entry keep a zero step.
fn rescale_row(row: &mut [f64], states: std::ops::RangeInclusive<usize>) -> f64 {
    let m = row[states.clone()]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return 0.0;
    }
    for v in &mut row[states] {
        *v -= m;
    }
    m
}

/// `log F[i][k] = log P(x_0..=x_i, S_i = k)`.
pub fn forward(table: &LogDensityTable, prior: &TransitionPrior) -> Result<ScaledLogGrid> {
    check_dimensions(table, prior)?;
    let (n, segments) = (table.len(), table.num_segments());
    let mut f = Grid::filled(n, segments, f64::NEG_INFINITY);
    let mut steps = vec![0.0; n];
    let mut offsets = vec![0.0; n];
    let mut total = CompensatedSum::default();
    f.set(0, 0, table.get(0, 0));
    for i in 0..n {
        if i > 0 {
            for k in feasible_states(i, n, segments) {
                let stay = f.get(i - 1, k) + prior.reduced_stay(k, i);
                let jump = if k > 0 {
                    f.get(i - 1, k - 1) + prior.reduced_jump(k - 1, i)
                } else {
                    f64::NEG_INFINITY
                };
                f.set(i, k, log_add(stay, jump) + table.get(i, k));
            }
        }
        steps[i] = rescale_row(f.row_mut(i), feasible_states(i, n, segments));
        total.add(steps[i]);
        offsets[i] = total.value();
    }
    Ok(ScaledLogGrid {
        scaled: f,
        removed: RemovedPrior::new(prior, true),
        steps,
        offsets,
    })
}

/// `log B[i][k] = log P(x_{i+1}..x_{n-1}, S_{n-1} = K - 1 | S_i = k)`.
pub fn backward(table: &LogDensityTable, prior: &TransitionPrior) -> Result<ScaledLogGrid> {
    check_dimensions(table, prior)?;
    let (n, segments) = (table.len(), table.num_segments());
    let mut b = Grid::filled(n, segments, f64::NEG_INFINITY);
    let mut steps = vec![0.0; n];
    let mut offsets = vec![0.0; n];
    let mut total = CompensatedSum::default();
    b.set(n - 1, segments - 1, 0.0);
    for i in (0..n - 1).rev() {
        for k in feasible_states(i, n, segments) {
            let stay = prior.reduced_stay(k, i + 1) + table.get(i + 1, k) + b.get(i + 1, k);
            let jump = if k + 1 < segments {
                prior.reduced_jump(k, i + 1) + table.get(i + 1, k + 1) + b.get(i + 1, k + 1)
            } else {
                f64::NEG_INFINITY
            };
            b.set(i, k, log_add(stay, jump));
        }
        steps[i] = rescale_row(b.row_mut(i), feasible_states(i, n, segments));
        total.add(steps[i]);
        offsets[i] = total.value();
    }
    Ok(ScaledLogGrid {
        scaled: b,
        removed: RemovedPrior::new(prior, false),
        steps,
        offsets,
    })
}

/// Forward and backward tables for one sequence plus the log evidence
/// `log P(X, S_{n-1} = K - 1)`.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    log_forward: ScaledLogGrid,
    log_backward: ScaledLogGrid,
    /// Log-sum of the scaled forward-backward products of each row.
    row_norms: Vec<f64>,
    log_evidence: f64,
}

impl ForwardBackward {
    pub fn compute(table: &LogDensityTable, prior: &TransitionPrior) -> Result<Self> {
        check_dimensions(table, prior)?;
        let (f, b) = rayon::join(|| forward(table, prior), || backward(table, prior));
        let (log_forward, log_backward) = (f?, b?);
        let (n, segments) = (table.len(), table.num_segments());
        let log_evidence = log_forward.get(n - 1, segments - 1);
        if !log_evidence.is_finite() {
            return Err(Error::Numerical(format!(
                "log evidence is {log_evidence}: no segmentation has positive probability"
            )));
        }
        let row_norms = (0..n)
            .map(|i| {
                let logs: Vec<f64> = feasible_states(i, n, segments)
                    .map(|k| log_forward.scaled().get(i, k) + log_backward.scaled().get(i, k))
                    .collect();
                log_sum_exp(&logs)
            })
            .collect();
        Ok(Self {
            log_forward,
            log_backward,
            row_norms,
            log_evidence,
        })
    }

    pub fn len(&self) -> usize {
        self.log_forward.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.log_forward.rows() == 0
    }

    pub fn num_segments(&self) -> usize {
        self.log_forward.cols()
    }

    pub fn log_forward(&self) -> &ScaledLogGrid {
        &self.log_forward
    }

    pub fn log_backward(&self) -> &ScaledLogGrid {
        &self.log_backward
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// `P(S_i = k | X, S_{n-1} = K - 1)`; every row sums to one.
    pub fn state_posterior(&self) -> Grid {
        let (n, segments) = (self.len(), self.num_segments());
        let (f, b) = (self.log_forward.scaled(), self.log_backward.scaled());
        let mut out = Grid::filled(n, segments, 0.0);
        for i in 0..n {
            for k in feasible_states(i, n, segments) {
                out.set(i, k, (f.get(i, k) + b.get(i, k) - self.row_norms[i]).exp());
            }
        }
        out
    }

    /// Log of the total forward-backward mass at row `i` relative to the
    /// evidence; zero up to rounding at every row.
    pub fn row_mass_defect(&self, i: usize) -> f64 {
        let r = self.log_forward.removed;
        let (n, segments) = (self.len(), self.num_segments());
        let prior_mass = (segments - 1) as f64 * r.log_jump + (n - segments) as f64 * r.log_stay;
        self.row_norms[i] + self.log_forward.offset(i) + self.log_backward.offset(i) + prior_mass
            - self.log_evidence
    }

    /// Posterior distribution of change-point `rank` (1-based): the
    /// probability that segment `rank` ends at each position.
    pub fn changepoint_marginal(
        &self,
        table: &LogDensityTable,
        prior: &TransitionPrior,
        rank: usize,
    ) -> Result<ChangePointDistribution> {
        check_dimensions(table, prior)?;
        let (n, segments) = (self.len(), self.num_segments());
        if table.len() != n || table.num_segments() != segments {
            return Err(Error::DimensionMismatch(
                "table does not match the forward-backward state".into(),
            ));
        }
        if rank == 0 || rank >= segments {
            return Err(Error::IndexOutOfRange(format!(
                "change-point rank {rank} outside 1..={}",
                segments - 1
            )));
        }
        let k = rank - 1;
        let (f, b) = (self.log_forward.scaled(), self.log_backward.scaled());
        // Segment k ends at 1-based position p, i.e. 0-based p - 1, and
        // segment k + 1 starts at 0-based p. Offsets enter through the row
        // normalizer at p - 1 and the backward step from p to p - 1, both
        // small, so the large accumulated offsets cancel exactly.
        let first = rank;
        let last = n - segments + rank;
        let logs: Vec<f64> = (first..=last)
            .map(|p| {
                f.get(p - 1, k) + prior.reduced_jump(k, p) + table.get(p, k + 1) + b.get(p, k + 1)
                    - self.row_norms[p - 1]
                    - self.log_backward.step(p - 1)
            })
            .collect();
        let norm = log_sum_exp(&logs);
        let probs = logs.iter().map(|v| (v - norm).exp()).collect();
        Ok(ChangePointDistribution { rank, first, probs })
    }

    pub fn changepoint_marginals(
        &self,
        table: &LogDensityTable,
        prior: &TransitionPrior,
    ) -> Result<Vec<ChangePointDistribution>> {
        (1..self.num_segments())
            .map(|rank| self.changepoint_marginal(table, prior, rank))
            .collect()
    }

    /// Posterior mean of the segment location at every position.
    pub fn posterior_mean_track(&self, model: &EmissionModel) -> Result<Vec<f64>> {
        let locations = model.locations();
        if locations.len() != self.num_segments() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} segment locations, posterior has {} segments",
                locations.len(),
                self.num_segments()
            )));
        }
        let (lo, hi) = locations
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let post = self.state_posterior();
        Ok(post
            .iter_rows()
            .map(|row| {
                let m: f64 = row.iter().zip(&locations).map(|(p, t)| p * t).sum();
                m.clamp(lo, hi)
            })
            .collect())
    }
}

/// Marginal posterior of one change-point over its feasible positions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangePointDistribution {
    /// 1-based change-point rank.
    pub rank: usize,
    /// 1-based position of `probs[0]`.
    pub first: usize,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub level: f64,
    pub lower: usize,
    pub upper: usize,
    /// Posterior mass of `[lower, upper]`; at least `level`.
    pub coverage: f64,
}

impl ChangePointDistribution {
    /// Last 1-based position in the support.
    pub fn last(&self) -> usize {
        self.first + self.probs.len() - 1
    }

    pub fn positions(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last()
    }

    pub fn prob_at(&self, position: usize) -> f64 {
        position
            .checked_sub(self.first)
            .and_then(|j| self.probs.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Most probable position; the smallest wins on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = j;
            }
        }
        self.first + best
    }

    /// Equal-tailed interval: `lower` is the first position whose CDF
    /// reaches `(1 - level) / 2`, `upper` the first whose CDF reaches
    /// `1 - (1 - level) / 2`.
    pub fn confidence_interval(&self, level: f64) -> Result<ConfidenceInterval> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::Domain(format!(
                "confidence level must lie in (0, 1), got {level}"
            )));
        }
        let tail = (1.0 - level) / 2.0;
        let total = self.total();
        let cdf: Vec<f64> = self
            .probs
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p / total;
                Some(*acc)
            })
            .collect();
        let last = cdf.len() - 1;
        let lo = cdf.iter().position(|&c| c >= tail).unwrap_or(last);
        let hi = cdf
            .iter()
            .position(|&c| c >= 1.0 - tail)
            .unwrap_or(last)
            .max(lo);
        let below = if lo == 0 { 0.0 } else { cdf[lo - 1] };
        let above = if hi == last { 1.0 } else { cdf[hi] };
        Ok(ConfidenceInterval {
            level,
            lower: self.first + lo,
            upper: self.first + hi,
            coverage: above - below,
        })
    }
}

/// Convenience bundle: everything the posterior report needs for one
/// sequence at a fixed segmentation size.
#[derive(Debug, Clone)]
pub struct PosteriorAnalysis {
    pub fb: ForwardBackward,
    pub state_posterior: Grid,
    pub marginals: Vec<ChangePointDistribution>,
}

impl PosteriorAnalysis {
    pub fn run(table: &LogDensityTable, prior: &TransitionPrior) -> Result<Self> {
        let fb = ForwardBackward::compute(table, prior)?;
        let state_posterior = fb.state_posterior();
        let marginals = fb.changepoint_marginals(table, prior)?;
        Ok(Self {
            fb,
            state_posterior,
            marginals,
        })
    }

    /// Posterior probability of each change-point at its initial location.
    pub fn probabilities_at(&self, cps: &ChangePointVector) -> Vec<f64> {
        self.marginals
            .iter()
            .zip(cps.positions())
            .map(|(d, &p)| d.prob_at(p))
            .collect()
    }
}
