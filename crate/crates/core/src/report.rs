//! Serializable reports and plain-text writers. Floating-point output is
//! rounded to 12 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::changepoints::ChangePointVector;
use crate::emissions::{EmissionModel, Family, SegmentParams};
use crate::engine::{ConfidenceInterval, PosteriorAnalysis};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model_select::ModelScore;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round_sig(x);
    if r == 0.0 || (1e-5..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangePointSummary {
    /// 1-based rank.
    pub rank: usize,
    /// Location supplied by the initial segmentation.
    pub initial: usize,
    pub initial_probability: f64,
    pub mode: usize,
    pub mode_probability: f64,
    /// Difference between the fitted locations of the segments on either
    /// side (right minus left); absent for external tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_mean: Option<f64>,
    pub intervals: Vec<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangePointReport {
    pub n: usize,
    pub segments: usize,
    pub family: Family,
    pub log_evidence: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub segment_params: Vec<SegmentParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shared_scale: Option<f64>,
    pub changepoints: Vec<ChangePointSummary>,
}

impl ChangePointReport {
    pub fn build(
        analysis: &PosteriorAnalysis,
        model: &EmissionModel,
        initial: &ChangePointVector,
        levels: &[f64],
    ) -> Result<Self> {
        if initial.num_segments() != analysis.fb.num_segments() {
            return Err(Error::DimensionMismatch(format!(
                "{} initial change-points for a {}-segment posterior",
                initial.num_changepoints(),
                analysis.fb.num_segments()
            )));
        }
        let locations = model.locations();
        let changepoints = analysis
            .marginals
            .iter()
            .zip(initial.positions())
            .map(|(dist, &init)| {
                let intervals = levels
                    .iter()
                    .map(|&level| {
                        dist.confidence_interval(level)
                            .map(|ci| ConfidenceInterval {
                                coverage: round_sig(ci.coverage),
                                ..ci
                            })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mode = dist.mode();
                let k = dist.rank - 1;
                Ok(ChangePointSummary {
                    rank: dist.rank,
                    initial: init,
                    initial_probability: round_sig(dist.prob_at(init)),
                    mode,
                    mode_probability: round_sig(dist.prob_at(mode)),
                    delta_mean: (locations.len() > k + 1)
                        .then(|| round_sig(locations[k + 1] - locations[k])),
                    intervals,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: analysis.fb.len(),
            segments: analysis.fb.num_segments(),
            family: model.family(),
            log_evidence: round_sig(analysis.fb.log_evidence()),
            segment_params: model
                .params()
                .iter()
                .map(|p| SegmentParams {
                    location: round_sig(p.location),
                    scale: p.scale.map(round_sig),
                })
                .collect(),
            shared_scale: model.shared_scale().map(round_sig),
            changepoints,
        })
    }
}

/// One row per position: 1-based position, optional label, the posterior
/// probability of every segment, and the posterior mean when available.
pub fn write_tracks_tsv<W: Write>(
    mut out: W,
    state_posterior: &Grid,
    posterior_mean: Option<&[f64]>,
    labels: Option<&[String]>,
) -> std::io::Result<()> {
    let mut header = vec!["position".to_string()];
    if labels.is_some() {
        header.push("label".into());
    }
    header.extend((1..=state_posterior.cols()).map(|k| format!("state_{k}")));
    if posterior_mean.is_some() {
        header.push("posterior_mean".into());
    }
    writeln!(out, "{}", header.join("\t"))?;
    for (i, row) in state_posterior.iter_rows().enumerate() {
        let mut fields = vec![(i + 1).to_string()];
        if let Some(l) = labels {
            fields.push(l[i].clone());
        }
        fields.extend(row.iter().map(|&p| fmt_sig(p)));
        if let Some(m) = posterior_mean {
            fields.push(fmt_sig(m[i]));
        }
        writeln!(out, "{}", fields.join("\t"))?;
    }
    Ok(())
}

/// One sampled segmentation per line, change-points comma-separated.
pub fn write_samples_csv<W: Write>(
    mut out: W,
    samples: &[ChangePointVector],
) -> std::io::Result<()> {
    for s in samples {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn write_scores_tsv<W: Write>(mut out: W, scores: &[ModelScore]) -> std::io::Result<()> {
    writeln!(out, "segments\tlog_likelihood\tparameters\tbic\tdegenerate")?;
    for s in scores {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            s.segments,
            fmt_sig(s.log_likelihood),
            s.parameters,
            fmt_sig(s.bic),
            s.degenerate
        )?;
    }
    Ok(())
}
