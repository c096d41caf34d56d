//! Most probable segmentation by a Viterbi pass over the segment chain.

use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::emissions::LogDensityTable;
use crate::engine::{check_dimensions, feasible_states, forward};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::prior::TransitionPrior;

/// Max-product tables: `log_v[i][k]` is the best log joint of a prefix
/// ending in segment `k` at position `i`, `jumped[i][k]` records whether
/// that prefix entered `k` at `i`.
#[derive(Debug, Clone)]
pub struct ViterbiState {
    log_v: Grid,
    jumped: Vec<bool>,
}

impl ViterbiState {
    /// On exact ties the stay predecessor wins.
    pub fn compute(table: &LogDensityTable, prior: &TransitionPrior) -> Result<Self> {
        check_dimensions(table, prior)?;
        let (n, segments) = (table.len(), table.num_segments());
        let mut log_v = Grid::filled(n, segments, f64::NEG_INFINITY);
        let mut jumped = vec![false; n * segments];
        log_v.set(0, 0, table.get(0, 0));
        for i in 1..n {
            for k in feasible_states(i, n, segments) {
                let stay = log_v.get(i - 1, k) + prior.stay(k, i);
                let jump = if k > 0 {
                    log_v.get(i - 1, k - 1) + prior.jump(k - 1, i)
                } else {
                    f64::NEG_INFINITY
                };
                let best = if jump > stay {
                    jumped[i * segments + k] = true;
                    jump
                } else {
                    stay
                };
                log_v.set(i, k, best + table.get(i, k));
            }
        }
        Ok(Self { log_v, jumped })
    }

    pub fn log_v(&self) -> &Grid {
        &self.log_v
    }

    /// Log joint `log P(X, S)` of the best complete path.
    pub fn best_log_joint(&self) -> f64 {
        self.log_v.get(self.log_v.rows() - 1, self.log_v.cols() - 1)
    }

    pub fn traceback(&self) -> Result<ChangePointVector> {
        let (n, segments) = (self.log_v.rows(), self.log_v.cols());
        if !self.best_log_joint().is_finite() {
            return Err(Error::Numerical(
                "no segmentation has positive probability".into(),
            ));
        }
        let mut k = segments - 1;
        let mut positions = Vec::with_capacity(segments - 1);
        for i in (1..n).rev() {
            if k == 0 {
                break;
            }
            if self.jumped[i * segments + k] {
                positions.push(i);
                k -= 1;
            }
        }
        debug_assert_eq!(k, 0);
        positions.reverse();
        ChangePointVector::new(positions, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSegmentation {
    pub changepoints: ChangePointVector,
    /// `log P(X, S)` of the returned path.
    pub log_joint: f64,
    /// `log P(S | X, S ends in the last segment)`.
    pub log_posterior: f64,
}

/// Most probable segmentation and its log posterior.
pub fn viterbi(table: &LogDensityTable, prior: &TransitionPrior) -> Result<MapSegmentation> {
    let state = ViterbiState::compute(table, prior)?;
    let changepoints = state.traceback()?;
    let f = forward(table, prior)?;
    let log_evidence = f.get(f.rows() - 1, f.cols() - 1);
    let log_joint = state.best_log_joint();
    Ok(MapSegmentation {
        changepoints,
        log_joint,
        log_posterior: log_joint - log_evidence,
    })
}
