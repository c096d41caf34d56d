//! Brute-force reference: sums over every segmentation into `K` segments.
//!
//! Exponential in `n`; intended for small instances in tests, where it
//! pins down the exact values the linear-time recursions must reproduce.

use crate::changepoints::ChangePointVector;
use crate::emissions::LogDensityTable;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::logspace::log_sum_exp;
use crate::prior::TransitionPrior;

pub const ENUMERATION_LIMIT: u128 = 1_000_000;

/// Number of segmentations of `n` observations into `segments` pieces,
/// `C(n - 1, segments - 1)`.
pub fn segmentation_count(n: usize, segments: usize) -> u128 {
    if segments == 0 || segments > n {
        return 0;
    }
    let (top, choose) = ((n - 1) as u128, (segments - 1) as u128);
    let choose = choose.min(top - choose);
    (0..choose).fold(1u128, |acc, j| acc * (top - j) / (j + 1))
}

/// All strictly increasing `(K-1)`-subsets of `[1, n-1]` in lexicographic order.
pub fn segmentations(n: usize, segments: usize) -> impl Iterator<Item = ChangePointVector> {
    let m = segments.saturating_sub(1);
    let mut current: Option<Vec<usize>> =
        (segments >= 1 && segments <= n).then(|| (1..=m).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        // advance to the next combination
        let next = {
            let mut c = out.clone();
            let mut j = m;
            loop {
                if j == 0 {
                    break None;
                }
                j -= 1;
                if c[j] < n - m + j {
                    c[j] += 1;
                    for t in j + 1..m {
                        c[t] = c[t - 1] + 1;
                    }
                    break Some(c);
                }
            }
        };
        current = next;
        Some(ChangePointVector::new(out, n).expect("enumerated vector is valid"))
    })
}

/// Exact posterior quantities obtained by enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    segments: usize,
    /// Each segmentation with its log joint `log P(X | S) + log P(S)`.
    pub joints: Vec<(ChangePointVector, f64)>,
    pub log_evidence: f64,
    /// `n × K` posterior state probabilities.
    pub state_posterior: Grid,
    /// `changepoint_marginals[k][p]`: posterior probability that change-point
    /// `k` (0-based rank) sits at 1-based position `p`; length `n`.
    pub changepoint_marginals: Vec<Vec<f64>>,
    pub map: ChangePointVector,
    pub map_log_joint: f64,
}

pub fn enumerate_posterior(
    table: &LogDensityTable,
    prior: &TransitionPrior,
) -> Result<Enumeration> {
    let (n, segments) = (table.len(), table.num_segments());
    if prior.num_segments() != segments || prior.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "prior is {}x{}, table is {n}x{segments}",
            prior.num_segments(),
            prior.len()
        )));
    }
    let count = segmentation_count(n, segments);
    if count > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            count,
            limit: ENUMERATION_LIMIT,
        });
    }
    if count == 0 {
        return Err(Error::Infeasible { segments, n });
    }

    let joints: Vec<(ChangePointVector, f64)> = segmentations(n, segments)
        .map(|cps| {
            let states = cps.states(n);
            let ll: f64 = states
                .iter()
                .enumerate()
                .map(|(i, &k)| table.get(i, k))
                .sum();
            let lj = ll + prior.log_path_mass(&states);
            (cps, lj)
        })
        .collect();

    let logs: Vec<f64> = joints.iter().map(|(_, lj)| *lj).collect();
    let log_evidence = log_sum_exp(&logs);
    if !log_evidence.is_finite() {
        return Err(Error::Numerical(
            "every segmentation has zero probability".into(),
        ));
    }

    let mut state_posterior = Grid::filled(n, segments, 0.0);
    let mut changepoint_marginals = vec![vec![0.0; n]; segments - 1];
    for (cps, lj) in &joints {
        let w = (lj - log_evidence).exp();
        for (i, k) in cps.states(n).into_iter().enumerate() {
            state_posterior.set(i, k, state_posterior.get(i, k) + w);
        }
        for (k, &p) in cps.positions().iter().enumerate() {
            changepoint_marginals[k][p] += w;
        }
    }

    // Ties resolved towards the smallest last change-point, then the
    // smallest second-to-last, and so on.
    let best = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * (1.0 + best.abs());
    let (map, map_log_joint) = joints
        .iter()
        .filter(|(_, lj)| *lj >= best - tol)
        .min_by(|(a, _), (b, _)| a.positions().iter().rev().cmp(b.positions().iter().rev()))
        .map(|(c, lj)| (c.clone(), *lj))
        .expect("at least one segmentation");

    Ok(Enumeration {
        n,
        segments,
        joints,
        log_evidence,
        state_posterior,
        changepoint_marginals,
        map,
        map_log_joint,
    })
}

impl Enumeration {
    pub fn num_segmentations(&self) -> usize {
        self.joints.len()
    }

    /// `sum_S P(S | X) * locations[S_i]` at every position, summed
    /// segmentation by segmentation.
    pub fn posterior_mean(&self, locations: &[f64]) -> Vec<f64> {
        assert_eq!(locations.len(), self.segments);
        let mut out = vec![0.0; self.n];
        for (cps, lj) in &self.joints {
            let w = (lj - self.log_evidence).exp();
            for (slot, k) in out.iter_mut().zip(cps.states(self.n)) {
                *slot += w * locations[k];
            }
        }
        out
    }

    /// Exact posterior probability of one complete segmentation.
    pub fn probability_of(&self, cps: &ChangePointVector) -> f64 {
        self.joints
            .iter()
            .find(|(c, _)| c == cps)
            .map_or(0.0, |(_, lj)| (lj - self.log_evidence).exp())
    }
}
