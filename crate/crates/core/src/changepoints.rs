use std::fmt;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};

/// Ordered change-point locations of a segmentation into `K` segments.
///
/// Each entry is the 1-based index of the last observation of a segment,
/// so `positions[k]` is also the 0-based index of the first observation of
/// segment `k + 1`. A sequence of length `n` split as `(1,1,2,2,2)` has
/// positions `[2]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ChangePointVector(Vec<usize>);

impl ChangePointVector {
    /// Validates `positions` against a sequence of length `n`: strictly
    /// increasing and within `[1, n-1]`.
    pub fn new(positions: Vec<usize>, n: usize) -> Result<Self> {
        if positions.len() >= n.max(1) {
            return Err(Error::Infeasible {
                segments: positions.len() + 1,
                n,
            });
        }
        for (idx, &p) in positions.iter().enumerate() {
            if p == 0 || p >= n {
                return Err(Error::InvalidSegmentation(format!(
                    "change-point {} at {p} is outside [1, {}]",
                    idx + 1,
                    n.saturating_sub(1)
                )));
            }
            if idx > 0 && positions[idx - 1] >= p {
                return Err(Error::InvalidSegmentation(format!(
                    "change-points must be strictly increasing: {} then {p}",
                    positions[idx - 1]
                )));
            }
        }
        Ok(Self(positions))
    }

    /// The segmentation with a single segment.
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Builds from a 0-based state path such as `[0, 0, 1, 1, 1]`.
    pub fn from_states(states: &[usize]) -> Result<Self> {
        let mut positions = Vec::new();
        for i in 1..states.len() {
            match states[i].checked_sub(states[i - 1]) {
                Some(0) => {}
                Some(1) => positions.push(i),
                _ => {
                    return Err(Error::InvalidSegmentation(format!(
                        "state path jumps from {} to {} at index {i}",
                        states[i - 1],
                        states[i]
                    )))
                }
            }
        }
        if states.first().is_some_and(|&s| s != 0) {
            return Err(Error::InvalidSegmentation(
                "state path must start in segment 0".into(),
            ));
        }
        Ok(Self(positions))
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn num_changepoints(&self) -> usize {
        self.0.len()
    }

    pub fn num_segments(&self) -> usize {
        self.0.len() + 1
    }

    /// 0-based half-open index ranges of every segment.
    pub fn segments(&self, n: usize) -> impl Iterator<Item = Range<usize>> + '_ {
        let starts = std::iter::once(0).chain(self.0.iter().copied());
        let ends = self.0.iter().copied().chain(std::iter::once(n));
        starts.zip(ends).map(|(s, e)| s..e)
    }

    /// 0-based segment label of every observation.
    pub fn states(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(n);
        for (k, range) in self.segments(n).enumerate() {
            out.extend(std::iter::repeat_n(k, range.len()));
        }
        out
    }
}

impl fmt::Display for ChangePointVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}
