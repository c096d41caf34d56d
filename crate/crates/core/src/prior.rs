//! Prior over segmentations: a left-to-right chain that either stays in
//! segment `k` or jumps to `k + 1` at each step.
//!
//! Jump probabilities are source-indexed. With 0-based states and
//! positions, `log_jump(k, i)` is the log probability of moving from
//! segment `k` at position `i - 1` to segment `k + 1` at position `i`.
//! The chain starts in segment 0 with probability one, so column 0 is never
//! consulted, and the last segment never jumps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;

pub const DEFAULT_ETA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Homogeneous {
        eta: f64,
        log_stay: f64,
        log_jump: f64,
    },
    /// `K × n` jump probabilities with precomputed logs.
    Tabulated {
        eta: Grid,
        log_stay: Grid,
        log_jump: Grid,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionPrior {
    segments: usize,
    n: usize,
    kind: Kind,
}

fn check_shape(segments: usize, n: usize) -> Result<()> {
    if segments == 0 {
        return Err(Error::Domain("number of segments must be positive".into()));
    }
    if segments > n {
        return Err(Error::Infeasible { segments, n });
    }
    Ok(())
}

impl TransitionPrior {
    /// Constant jump probability `eta` everywhere. Conditional on ending in
    /// the last segment, this is the uniform prior over segmentations.
    pub fn homogeneous(segments: usize, n: usize, eta: f64) -> Result<Self> {
        check_shape(segments, n)?;
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(Self {
            segments,
            n,
            kind: Kind::Homogeneous {
                eta,
                log_stay: (-eta).ln_1p(),
                log_jump: eta.ln(),
            },
        })
    }

    /// Position-dependent jump probabilities, one row per segment and one
    /// column per position. Entries must lie in `[0, 1)`; a zero forbids a
    /// jump at that position.
    pub fn tabulated(eta: Grid) -> Result<Self> {
        let (segments, n) = (eta.rows(), eta.cols());
        check_shape(segments, n)?;
        for (k, row) in eta.iter_rows().enumerate() {
            if let Some(i) = row.iter().position(|p| !(*p >= 0.0 && *p < 1.0)) {
                return Err(Error::Domain(format!(
                    "jump probability for segment {} at position {} must lie in [0, 1), got {}",
                    k + 1,
                    i + 1,
                    row[i]
                )));
            }
        }
        let log_jump =
            Grid::from_row_major(segments, n, eta.as_slice().iter().map(|p| p.ln()).collect());
        let log_stay = Grid::from_row_major(
            segments,
            n,
            eta.as_slice().iter().map(|p| (-p).ln_1p()).collect(),
        );
        Ok(Self {
            segments,
            n,
            kind: Kind::Tabulated {
                eta,
                log_stay,
                log_jump,
            },
        })
    }

    /// Reads a tabulated prior: `K` rows of `n` tab-separated probabilities.
    pub fn from_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let rows = io::read_numeric_rows(path, b'\t', false)?;
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!(
                    "row {} has {} columns, expected {cols}",
                    r + 1,
                    rows[r].len()
                ),
            });
        }
        let grid = Grid::from_row_major(rows.len(), cols, rows.into_iter().flatten().collect());
        Self::tabulated(grid).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn num_segments(&self) -> usize {
        self.segments
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.kind, Kind::Homogeneous { .. })
    }

    /// Jump probability out of segment `k` into position `i` (0-based).
    pub fn eta(&self, k: usize, i: usize) -> f64 {
        match &self.kind {
            Kind::Homogeneous { eta, .. } => *eta,
            Kind::Tabulated { eta, .. } => eta.get(k, i),
        }
    }

    #[inline]
    pub(crate) fn stay(&self, k: usize, i: usize) -> f64 {
        match &self.kind {
            Kind::Homogeneous { log_stay, .. } => *log_stay,
            Kind::Tabulated { log_stay, .. } => log_stay.get(k, i),
        }
    }

    #[inline]
    pub(crate) fn jump(&self, k: usize, i: usize) -> f64 {
        match &self.kind {
            Kind::Homogeneous { log_jump, .. } => *log_jump,
            Kind::Tabulated { log_jump, .. } => log_jump.get(k, i),
        }
    }

    /// Every segmentation ending in the last segment makes `K - 1` jumps and
    /// `n - K` stays, so a homogeneous prior contributes the same constant
    /// to all of them. The reduced logs drop that constant: zero for
    /// homogeneous priors, unchanged for tabulated ones.
    #[inline]
    pub(crate) fn reduced_stay(&self, k: usize, i: usize) -> f64 {
        match &self.kind {
            Kind::Homogeneous { .. } => 0.0,
            Kind::Tabulated { log_stay, .. } => log_stay.get(k, i),
        }
    }

    #[inline]
    pub(crate) fn reduced_jump(&self, k: usize, i: usize) -> f64 {
        match &self.kind {
            Kind::Homogeneous { .. } => 0.0,
            Kind::Tabulated { log_jump, .. } => log_jump.get(k, i),
        }
    }

    /// Per-transition `(log stay, log jump)` removed by the reduced logs.
    pub(crate) fn removed_logs(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Homogeneous {
                log_stay, log_jump, ..
            } => (*log_stay, *log_jump),
            Kind::Tabulated { .. } => (0.0, 0.0),
        }
    }

    fn check_index(&self, k: usize, i: usize) -> Result<()> {
        if k >= self.segments || i == 0 || i >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "transition (segment {k}, position {i}) outside segments 0..{} and positions 1..{}",
                self.segments, self.n
            )));
        }
        Ok(())
    }

    /// Log probability of staying in segment `k` between positions `i - 1`
    /// and `i` (0-based; `1 <= i < n`).
    pub fn log_stay(&self, k: usize, i: usize) -> Result<f64> {
        self.check_index(k, i)?;
        Ok(self.stay(k, i))
    }

    /// Log probability of jumping from segment `k` to `k + 1` between
    /// positions `i - 1` and `i` (0-based; `1 <= i < n`).
    pub fn log_jump(&self, k: usize, i: usize) -> Result<f64> {
        self.check_index(k, i)?;
        Ok(self.jump(k, i))
    }

    /// Log prior mass of the state path `states` (0-based labels, starting
    /// at 0). Paths that do not end in the last segment are not excluded
    /// here; the chain places mass on them too.
    pub fn log_path_mass(&self, states: &[usize]) -> f64 {
        states
            .windows(2)
            .enumerate()
            .map(|(idx, w)| {
                let i = idx + 1;
                if w[1] == w[0] {
                    self.stay(w[0], i)
                } else {
                    self.jump(w[0], i)
                }
            })
            .sum()
    }
}
