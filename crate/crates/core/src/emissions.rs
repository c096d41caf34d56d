//! Emission families, per-segment maximum-likelihood fitting and the
//! `n × K` log-density table every recursion consumes.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Relative threshold (against the data range) below which a fitted scale
/// counts as degenerate.
pub const DEGENERATE_SCALE_RATIO: f64 = 1e-12;

/// Rate used in place of a zero Poisson mean when fitting for model comparison.
const RATE_FLOOR: f64 = 1e-12;

/// Ordered observations `x_1..x_n`, optionally labelled by position.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl ObservationSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidData(format!(
                "need at least 2 observations, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "observation {} is not finite ({})",
                i + 1,
                values[i]
            )));
        }
        Ok(Self {
            values,
            labels: None,
        })
    }

    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} observations",
                labels.len(),
                values.len()
            )));
        }
        let mut seq = Self::new(values)?;
        seq.labels = Some(labels);
        Ok(seq)
    }

    /// Reads a one- or two-column CSV/TSV file (value, optional label).
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        io::read_observations(path.as_ref())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    fn check_counts(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|&v| v < 0.0 || v.fract() != 0.0)
        {
            Some(i) => Err(Error::InvalidData(format!(
                "poisson observations must be non-negative integers; observation {} is {}",
                i + 1,
                self.values[i]
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    GaussianHomoscedastic,
    GaussianHeteroscedastic,
    Poisson,
    ExternalLogDensity,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianHomoscedastic => "gaussian-homoscedastic",
            Family::GaussianHeteroscedastic => "gaussian-heteroscedastic",
            Family::Poisson => "poisson",
            Family::ExternalLogDensity => "external-log-density",
        }
    }

    /// Free parameters of a `segments`-segment model, change-point
    /// locations excluded.
    pub fn parameter_count(self, segments: usize) -> usize {
        match self {
            Family::GaussianHomoscedastic => segments + 1,
            Family::GaussianHeteroscedastic => 2 * segments,
            Family::Poisson | Family::ExternalLogDensity => segments,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-homoscedastic" | "gaussian" | "normal" => Ok(Family::GaussianHomoscedastic),
            "gaussian-heteroscedastic" => Ok(Family::GaussianHeteroscedastic),
            "poisson" => Ok(Family::Poisson),
            "external-log-density" | "external" => Ok(Family::ExternalLogDensity),
            other => Err(Error::UnsupportedFamily(format!(
                "unknown family `{other}`"
            ))),
        }
    }
}

/// Parameters of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentParams {
    pub location: f64,
    /// Per-segment standard deviation; heteroscedastic gaussian only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// Emission family together with per-segment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EmissionModel {
    family: Family,
    params: Vec<SegmentParams>,
    shared_scale: Option<f64>,
    external: Option<LogDensityTable>,
}

impl EmissionModel {
    pub fn gaussian_homoscedastic(means: &[f64], scale: f64) -> Result<Self> {
        check_nonempty(means.len())?;
        check_finite(means, "mean")?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegenerateScale(format!(
                "shared scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self {
            family: Family::GaussianHomoscedastic,
            params: means
                .iter()
                .map(|&m| SegmentParams {
                    location: m,
                    scale: None,
                })
                .collect(),
            shared_scale: Some(scale),
            external: None,
        })
    }

    pub fn gaussian_heteroscedastic(params: &[(f64, f64)]) -> Result<Self> {
        check_nonempty(params.len())?;
        let mut out = Vec::with_capacity(params.len());
        for (k, &(mean, scale)) in params.iter().enumerate() {
            if !mean.is_finite() {
                return Err(Error::Domain(format!(
                    "mean of segment {} is not finite",
                    k + 1
                )));
            }
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(Error::DegenerateScale(format!(
                    "scale of segment {} must be positive and finite, got {scale}",
                    k + 1
                )));
            }
            out.push(SegmentParams {
                location: mean,
                scale: Some(scale),
            });
        }
        Ok(Self {
            family: Family::GaussianHeteroscedastic,
            params: out,
            shared_scale: None,
            external: None,
        })
    }

    pub fn poisson(rates: &[f64]) -> Result<Self> {
        check_nonempty(rates.len())?;
        if let Some(k) = rates.iter().position(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::DegenerateRate(format!(
                "rate of segment {} must be positive and finite, got {}",
                k + 1,
                rates[k]
            )));
        }
        Ok(Self {
            family: Family::Poisson,
            params: rates
                .iter()
                .map(|&r| SegmentParams {
                    location: r,
                    scale: None,
                })
                .collect(),
            shared_scale: None,
            external: None,
        })
    }

    /// A model whose log-densities are supplied directly.
    pub fn external(table: LogDensityTable) -> Self {
        Self {
            family: Family::ExternalLogDensity,
            params: Vec::new(),
            shared_scale: None,
            external: Some(table),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &[SegmentParams] {
        &self.params
    }

    pub fn shared_scale(&self) -> Option<f64> {
        self.shared_scale
    }

    pub fn num_segments(&self) -> usize {
        match &self.external {
            Some(t) => t.num_segments(),
            None => self.params.len(),
        }
    }

    /// Segment locations (means or rates); empty for external tables.
    pub fn locations(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.location).collect()
    }

    /// Log density of `x` under segment `k` (0-based).
    pub fn log_density(&self, x: f64, k: usize) -> f64 {
        let p = &self.params[k];
        match self.family {
            Family::GaussianHomoscedastic => {
                gaussian_log_density(x, p.location, self.shared_scale.unwrap_or(f64::NAN))
            }
            Family::GaussianHeteroscedastic => {
                gaussian_log_density(x, p.location, p.scale.unwrap_or(f64::NAN))
            }
            Family::Poisson => poisson_log_pmf(x, p.location),
            Family::ExternalLogDensity => f64::NAN,
        }
    }
}

fn check_nonempty(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("a model needs at least one segment".into()));
    }
    Ok(())
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    match xs.iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::Domain(format!(
            "{what} of segment {} is not finite",
            k + 1
        ))),
        None => Ok(()),
    }
}

#[inline]
pub fn gaussian_log_density(x: f64, mean: f64, scale: f64) -> f64 {
    let z = (x - mean) / scale;
    -LN_SQRT_2PI - scale.ln() - 0.5 * z * z
}

#[inline]
pub fn poisson_log_pmf(x: f64, rate: f64) -> f64 {
    if x == 0.0 {
        return -rate;
    }
    x * rate.ln() - rate - libm::lgamma(x + 1.0)
}

/// The `n × K` table of `log g_k(x_i)`.
///
/// Entries may be `-inf` (observation impossible under a segment) but never
/// `NaN` or `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDensityTable(Grid);

impl LogDensityTable {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.rows() == 0 || grid.cols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "log-density table must be non-empty, got {}x{}",
                grid.rows(),
                grid.cols()
            )));
        }
        for (i, row) in grid.iter_rows().enumerate() {
            if let Some(k) = row.iter().position(|v| v.is_nan() || *v == f64::INFINITY) {
                return Err(Error::InvalidData(format!(
                    "log-density entry ({}, {}) is {}",
                    i + 1,
                    k + 1,
                    row[k]
                )));
            }
        }
        Ok(Self(grid))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} columns, expected {k}",
                i + 1,
                rows[i].len()
            )));
        }
        Self::new(Grid::from_row_major(
            n,
            k,
            rows.into_iter().flatten().collect(),
        ))
    }

    /// Reads `n` rows of `K` tab-separated log densities.
    pub fn from_tsv(path: impl AsRef<Path>, has_header: bool) -> Result<Self> {
        let path = path.as_ref();
        let rows = io::read_numeric_rows(path, b'\t', has_header)?;
        Self::from_rows(rows).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }

    pub fn num_segments(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.0.get(i, k)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn grid(&self) -> &Grid {
        &self.0
    }

    /// Returns a copy with `c` added to every entry.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        let data = self.0.as_slice().iter().map(|v| v + c).collect();
        Self::new(Grid::from_row_major(self.0.rows(), self.0.cols(), data))
    }

    /// `log P(X | S)` for the segmentation `cps`.
    pub fn log_likelihood(&self, cps: &ChangePointVector) -> Result<f64> {
        if cps.num_segments() != self.num_segments() {
            return Err(Error::DimensionMismatch(format!(
                "{} segments for a {}-column table",
                cps.num_segments(),
                self.num_segments()
            )));
        }
        Ok(cps
            .segments(self.len())
            .enumerate()
            .map(|(k, r)| r.map(|i| self.get(i, k)).sum::<f64>())
            .sum())
    }
}

/// Builds the log-density table of `data` under `model`.
pub fn log_density_table(
    data: &ObservationSequence,
    model: &EmissionModel,
) -> Result<LogDensityTable> {
    if let Some(table) = &model.external {
        if table.len() != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "external table has {} rows for {} observations",
                table.len(),
                data.len()
            )));
        }
        return Ok(table.clone());
    }
    if model.family == Family::Poisson {
        data.check_counts()?;
    }
    let k = model.num_segments();
    let mut data_out = Vec::with_capacity(data.len() * k);
    for &x in data.values() {
        data_out.extend((0..k).map(|j| model.log_density(x, j)));
    }
    LogDensityTable::new(Grid::from_row_major(data.len(), k, data_out))
}

/// Maximum-likelihood parameters given a segmentation.
///
/// Degenerate fits (zero or vanishing scale, zero Poisson mean) are errors.
pub fn fit_mle(
    data: &ObservationSequence,
    cps: &ChangePointVector,
    family: Family,
) -> Result<EmissionModel> {
    fit(data, cps, family, false).map(|(m, _)| m)
}

/// Like [`fit_mle`], but floors degenerate scales and rates instead of
/// failing. The flag reports whether any floor was applied.
///
/// Used for model comparison only: the floored model keeps the
/// log-likelihood finite on pathological inputs such as constant data.
pub fn fit_mle_floored(
    data: &ObservationSequence,
    cps: &ChangePointVector,
    family: Family,
) -> Result<(EmissionModel, bool)> {
    fit(data, cps, family, true)
}

fn fit(
    data: &ObservationSequence,
    cps: &ChangePointVector,
    family: Family,
    floor: bool,
) -> Result<(EmissionModel, bool)> {
    let n = data.len();
    let x = data.values();
    if let Some(&last) = cps.positions().last() {
        if last >= n {
            return Err(Error::InvalidSegmentation(format!(
                "change-point {last} leaves the final segment empty (n = {n})"
            )));
        }
    }
    if cps.segments(n).any(|r| r.is_empty()) {
        return Err(Error::InvalidSegmentation("empty segment".into()));
    }

    let means: Vec<f64> = cps
        .segments(n)
        .map(|r| x[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    let range = data.range();
    let scale_floor = DEGENERATE_SCALE_RATIO * range
        + DEGENERATE_SCALE_RATIO * (1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    let is_degenerate = |s: f64| s == 0.0 || s < DEGENERATE_SCALE_RATIO * range;
    let mut floored = false;

    match family {
        Family::GaussianHomoscedastic => {
            let ss: f64 = cps
                .segments(n)
                .zip(&means)
                .map(|(r, m)| x[r].iter().map(|v| (v - m) * (v - m)).sum::<f64>())
                .sum();
            let mut scale = (ss / n as f64).sqrt();
            if is_degenerate(scale) {
                if !floor {
                    return Err(Error::DegenerateScale(format!(
                        "pooled standard deviation {scale:e} is degenerate (data range {range:e})"
                    )));
                }
                scale = scale.max(scale_floor);
                floored = true;
            }
            Ok((
                EmissionModel::gaussian_homoscedastic(&means, scale)?,
                floored,
            ))
        }
        Family::GaussianHeteroscedastic => {
            let mut params = Vec::with_capacity(means.len());
            for (k, (r, &m)) in cps.segments(n).zip(&means).enumerate() {
                let len = r.len();
                let mut scale =
                    (x[r].iter().map(|v| (v - m) * (v - m)).sum::<f64>() / len as f64).sqrt();
                if len < 2 || is_degenerate(scale) {
                    if !floor {
                        return Err(Error::DegenerateScale(format!(
                            "segment {} (length {len}) has degenerate standard deviation {scale:e}",
                            k + 1
                        )));
                    }
                    scale = scale.max(scale_floor);
                    floored = true;
                }
                params.push((m, scale));
            }
            Ok((EmissionModel::gaussian_heteroscedastic(&params)?, floored))
        }
        Family::Poisson => {
            data.check_counts()?;
            let mut rates = means;
            for (k, r) in rates.iter_mut().enumerate() {
                if *r <= 0.0 {
                    if !floor {
                        return Err(Error::DegenerateRate(format!(
                            "segment {} has zero mean count",
                            k + 1
                        )));
                    }
                    *r = RATE_FLOOR;
                    floored = true;
                }
            }
            Ok((EmissionModel::poisson(&rates)?, floored))
        }
        Family::ExternalLogDensity => Err(Error::UnsupportedFamily(
            "external log-density tables carry no parameters to fit".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(v: &[f64]) -> ObservationSequence {
        ObservationSequence::new(v.to_vec()).unwrap()
    }

    fn cps(p: &[usize], n: usize) -> ChangePointVector {
        ChangePointVector::new(p.to_vec(), n).unwrap()
    }

    #[test]
    fn observation_sequence_validation() {
        assert!(ObservationSequence::new(vec![1.0]).is_err());
        assert!(ObservationSequence::new(vec![1.0, f64::NAN]).is_err());
        assert!(ObservationSequence::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(ObservationSequence::with_labels(vec![1.0, 2.0], vec!["a".into()]).is_err());
    }

    #[test]
    fn homoscedastic_zero_variance_is_degenerate() {
        let err = fit_mle(
            &seq(&[1.0, 1.0, 5.0, 5.0]),
            &cps(&[2], 4),
            Family::GaussianHomoscedastic,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateScale(_)));
    }

    #[test]
    fn homoscedastic_pooled_scale() {
        let m = fit_mle(
            &seq(&[0.0, 2.0, 4.0, 6.0]),
            &cps(&[2], 4),
            Family::GaussianHomoscedastic,
        )
        .unwrap();
        assert_eq!(m.locations(), vec![1.0, 5.0]);
        assert!((m.shared_scale().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heteroscedastic_singleton_segment_is_degenerate() {
        let err = fit_mle(
            &seq(&[0.0, 2.0, 4.0, 6.0]),
            &cps(&[3], 4),
            Family::GaussianHeteroscedastic,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateScale(_)));
    }

    #[test]
    fn heteroscedastic_per_segment_scales() {
        let m = fit_mle(
            &seq(&[0.0, 2.0, 4.0, 10.0]),
            &cps(&[2], 4),
            Family::GaussianHeteroscedastic,
        )
        .unwrap();
        assert_eq!(m.params()[0].scale, Some(1.0));
        assert_eq!(m.params()[1].scale, Some(3.0));
        assert_eq!(m.locations(), vec![1.0, 7.0]);
    }

    #[test]
    fn poisson_zero_mean_is_degenerate() {
        let err = fit_mle(&seq(&[0.0, 0.0, 3.0, 5.0]), &cps(&[2], 4), Family::Poisson).unwrap_err();
        assert!(matches!(err, Error::DegenerateRate(_)));
        let (m, floored) =
            fit_mle_floored(&seq(&[0.0, 0.0, 3.0, 5.0]), &cps(&[2], 4), Family::Poisson).unwrap();
        assert!(floored);
        assert_eq!(m.locations(), vec![RATE_FLOOR, 4.0]);
    }

    #[test]
    fn poisson_rejects_non_counts() {
        let err = fit_mle(&seq(&[0.5, 1.0, 3.0, 5.0]), &cps(&[2], 4), Family::Poisson).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
        let err =
            fit_mle(&seq(&[-1.0, 1.0, 3.0, 5.0]), &cps(&[2], 4), Family::Poisson).unwrap_err();
        assert!(matches!(err, Error::InvalidData(_)));
    }

    #[test]
    fn floored_fit_keeps_constant_data_finite() {
        let data = seq(&[3.0; 10]);
        let (m, floored) =
            fit_mle_floored(&data, &cps(&[4], 10), Family::GaussianHomoscedastic).unwrap();
        assert!(floored);
        let table = log_density_table(&data, &m).unwrap();
        assert!(table.grid().as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn analytic_point_values() {
        let m = EmissionModel::poisson(&[1.0]).unwrap();
        assert!((m.log_density(1.0, 0) - (-1.0)).abs() < 1e-15);
        let g = EmissionModel::gaussian_homoscedastic(&[0.0], 1.0).unwrap();
        let expect = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((g.log_density(0.0, 0) - expect).abs() < 1e-15);
    }

    #[test]
    fn table_matches_closed_form_densities() {
        let data = seq(&[-1.2, 0.3, 2.5, 4.0, 0.0]);
        let model = EmissionModel::gaussian_heteroscedastic(&[(0.0, 1.0), (2.0, 0.5), (-1.0, 3.0)])
            .unwrap();
        let table = log_density_table(&data, &model).unwrap();
        for (i, &x) in data.values().iter().enumerate() {
            for (k, p) in model.params().iter().enumerate() {
                let s = p.scale.unwrap();
                let pdf = (-(x - p.location).powi(2) / (2.0 * s * s)).exp()
                    / (s * (2.0 * std::f64::consts::PI).sqrt());
                assert!((table.get(i, k).exp() - pdf).abs() < 1e-14 * pdf.max(1.0));
            }
        }

        let counts = seq(&[0.0, 1.0, 4.0, 12.0, 30.0]);
        let model = EmissionModel::poisson(&[0.5, 3.0, 20.0]).unwrap();
        let table = log_density_table(&counts, &model).unwrap();
        for (i, &x) in counts.values().iter().enumerate() {
            for (k, &rate) in model.locations().iter().enumerate() {
                let fact: f64 = (1..=x as u64).map(|j| j as f64).product();
                let pmf = (-rate).exp() * rate.powf(x) / fact;
                assert!((table.get(i, k).exp() - pmf).abs() <= 1e-12 * pmf);
            }
        }
    }

    #[test]
    fn external_table_returned_verbatim_and_checked() {
        let t = LogDensityTable::from_rows(vec![vec![0.0, f64::NEG_INFINITY], vec![-1.0, -2.0]])
            .unwrap();
        let model = EmissionModel::external(t.clone());
        assert_eq!(log_density_table(&seq(&[0.0, 0.0]), &model).unwrap(), t);
        assert!(matches!(
            log_density_table(&seq(&[0.0, 0.0, 0.0]), &model),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(LogDensityTable::from_rows(vec![vec![f64::NAN], vec![0.0]]).is_err());
        assert!(LogDensityTable::from_rows(vec![vec![f64::INFINITY], vec![0.0]]).is_err());
        assert!(LogDensityTable::from_rows(vec![vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn table_sum_reproduces_pooled_log_likelihood() {
        let data = seq(&[0.1, -0.4, 0.3, 2.2, 1.7, 2.4, 2.0]);
        let c = cps(&[3], 7);
        let m = fit_mle(&data, &c, Family::GaussianHomoscedastic).unwrap();
        let table = log_density_table(&data, &m).unwrap();
        let s = m.shared_scale().unwrap();
        let direct = -(7.0 / 2.0) * (2.0 * std::f64::consts::PI * s * s).ln() - 7.0 / 2.0;
        assert!((table.log_likelihood(&c).unwrap() - direct).abs() < 1e-12);
    }

    fn total_ll(data: &ObservationSequence, c: &ChangePointVector, m: &EmissionModel) -> f64 {
        log_density_table(data, m)
            .unwrap()
            .log_likelihood(c)
            .unwrap()
    }

    proptest! {
        #[test]
        fn fitted_locations_are_local_maxima(
            values in prop::collection::vec(-5.0f64..5.0, 6..30),
            split in 0.2f64..0.8,
        ) {
            let n = values.len();
            let cut = ((n as f64 * split) as usize).clamp(2, n - 2);
            let data = seq(&values);
            let c = cps(&[cut], n);
            let m = fit_mle(&data, &c, Family::GaussianHomoscedastic).unwrap();
            let base = total_ll(&data, &c, &m);
            let eps = 1e-4 * m.shared_scale().unwrap();
            for k in 0..2 {
                for sign in [-1.0, 1.0] {
                    let mut means = m.locations();
                    means[k] += sign * eps;
                    let p = EmissionModel::gaussian_homoscedastic(&means, m.shared_scale().unwrap()).unwrap();
                    prop_assert!(total_ll(&data, &c, &p) <= base + 1e-12 * base.abs());
                }
            }
        }

        #[test]
        fn poisson_rates_are_local_maxima(
            values in prop::collection::vec(1u32..20, 6..30),
        ) {
            let n = values.len();
            let data = seq(&values.iter().map(|&v| v as f64).collect::<Vec<_>>());
            let c = cps(&[n / 2], n);
            let m = fit_mle(&data, &c, Family::Poisson).unwrap();
            let base = total_ll(&data, &c, &m);
            for k in 0..2 {
                for sign in [-1.0, 1.0] {
                    let mut rates = m.locations();
                    rates[k] += sign * 1e-4 * rates[k].sqrt();
                    let p = EmissionModel::poisson(&rates).unwrap();
                    prop_assert!(total_ll(&data, &c, &p) <= base + 1e-12 * base.abs());
                }
            }
        }

        #[test]
        fn gaussian_density_decreases_with_distance(
            mean in -10.0f64..10.0, scale in 0.1f64..5.0, d1 in 0.0f64..10.0, d2 in 0.0f64..10.0,
        ) {
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(gaussian_log_density(mean + near, mean, scale) >= gaussian_log_density(mean - far, mean, scale));
        }
    }
}
