use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use segpost::decode::viterbi as map_segmentation;
use segpost::emissions::{
    fit_mle, log_density_table, EmissionModel, Family, LogDensityTable, ObservationSequence,
};
use segpost::engine::PosteriorAnalysis;
use segpost::io::read_observations;
use segpost::model_select::{select_segments, ModelScore};
use segpost::prior::TransitionPrior;
use segpost::report::{
    round_sig, write_samples_csv, write_scores_tsv, write_tracks_tsv, ChangePointReport,
};
use segpost::sampler::{parametric_bootstrap, sample_segmentations};
use segpost::simulate::{loss_table, write_loss_table, DesignSize};
use segpost::ChangePointVector;

use crate::{BenchArgs, Design, ModelArgs, PosteriorArgs, SampleArgs, SelectArgs, SimulateArgs};

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Numerical(m) => m,
        }
    }

    fn with_context(err: segpost::Error, context: &str) -> Self {
        let msg = if context.is_empty() {
            err.to_string()
        } else {
            format!("{context}: {err}")
        };
        if err.is_numerical() {
            Failure::Numerical(msg)
        } else {
            Failure::Input(msg)
        }
    }
}

impl From<segpost::Error> for Failure {
    fn from(err: segpost::Error) -> Self {
        Failure::with_context(err, "")
    }
}

trait Context<T> {
    fn context(self, what: &str) -> Result<T, Failure>;
}

impl<T> Context<T> for segpost::Result<T> {
    fn context(self, what: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::with_context(e, what))
    }
}

fn io_failure(path: Option<&Path>, err: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Input(format!("{}: {err}", p.display())),
        None => Failure::Input(format!("stdout: {err}")),
    }
}

/// Runs `write` against the file at `path`, or stdout when absent.
fn emit<F>(path: Option<&Path>, write: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let result = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| io_failure(path, e))
}

fn emit_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
        writeln!(w)
    })
}

fn parse_family(name: &str) -> Result<Family, Failure> {
    name.parse().context("--family")
}

/// Everything the posterior commands need for one sequence.
struct Setup {
    data: Option<ObservationSequence>,
    initial: ChangePointVector,
    model: EmissionModel,
    table: LogDensityTable,
    prior: TransitionPrior,
}

fn setup(args: &ModelArgs) -> Result<Setup, Failure> {
    let family = parse_family(&args.family)?;
    let data = match &args.data {
        Some(path) => Some(read_observations(path)?),
        None => None,
    };
    let (model, table) = match &args.logdens {
        Some(path) => {
            let table = LogDensityTable::from_tsv(path, args.header)?;
            if let Some(d) = &data {
                if d.len() != table.len() {
                    return Err(Failure::Input(format!(
                        "{}: {} rows but the data have {} observations",
                        path.display(),
                        table.len(),
                        d.len()
                    )));
                }
            }
            (EmissionModel::external(table.clone()), table)
        }
        None => {
            if family == Family::ExternalLogDensity {
                return Err(Failure::Input(
                    "--family external-log-density needs --logdens".into(),
                ));
            }
            let data = data
                .as_ref()
                .expect("clap requires --data without --logdens");
            let initial = ChangePointVector::new(args.seg.clone(), data.len()).context("--seg")?;
            let model = fit_mle(data, &initial, family)?;
            let table = log_density_table(data, &model)?;
            (model, table)
        }
    };
    let n = table.len();
    let initial = ChangePointVector::new(args.seg.clone(), n).context("--seg")?;
    let segments = initial.num_segments();
    if table.num_segments() != segments {
        return Err(Failure::Input(format!(
            "--seg gives {segments} segments but the log-density table has {} columns",
            table.num_segments()
        )));
    }
    let prior = match &args.prior {
        Some(path) => {
            let prior = TransitionPrior::from_tsv(path)?;
            if prior.num_segments() != segments || prior.len() != n {
                return Err(Failure::Input(format!(
                    "{}: prior is {}x{} but {segments} segments on {n} observations need {segments}x{n}",
                    path.display(),
                    prior.num_segments(),
                    prior.len()
                )));
            }
            prior
        }
        None => TransitionPrior::homogeneous(segments, n, args.eta).context("--eta")?,
    };
    Ok(Setup {
        data,
        initial,
        model,
        table,
        prior,
    })
}

pub fn posterior(args: &PosteriorArgs) -> Result<(), Failure> {
    if let Some(bad) = args.ci.iter().find(|&&l| !(l > 0.0 && l < 1.0)) {
        return Err(Failure::Input(format!("--ci: level {bad} outside (0, 1)")));
    }
    let s = setup(&args.model)?;
    let analysis = PosteriorAnalysis::run(&s.table, &s.prior)?;
    let report = ChangePointReport::build(&analysis, &s.model, &s.initial, &args.ci)?;
    if let Some(path) = &args.tracks {
        let mean = match s.model.family() {
            Family::ExternalLogDensity => None,
            _ => Some(analysis.fb.posterior_mean_track(&s.model)?),
        };
        let labels = s.data.as_ref().and_then(|d| d.labels());
        emit(Some(path), |w| {
            write_tracks_tsv(w, &analysis.state_posterior, mean.as_deref(), labels)
        })?;
    }
    emit_json(args.model.output.as_deref(), &report)
}

#[derive(Serialize)]
struct MapReport {
    n: usize,
    segments: usize,
    changepoints: ChangePointVector,
    log_joint: f64,
    log_posterior: f64,
}

pub fn viterbi(args: &ModelArgs) -> Result<(), Failure> {
    let s = setup(args)?;
    let map = map_segmentation(&s.table, &s.prior)?;
    let report = MapReport {
        n: s.table.len(),
        segments: s.table.num_segments(),
        changepoints: map.changepoints,
        log_joint: round_sig(map.log_joint),
        log_posterior: round_sig(map.log_posterior),
    };
    emit_json(args.output.as_deref(), &report)
}

pub fn sample(args: &SampleArgs) -> Result<(), Failure> {
    if args.nsamples == 0 {
        return Err(Failure::Input("--nsamples must be at least 1".into()));
    }
    let s = setup(&args.model)?;
    let analysis = PosteriorAnalysis::run(&s.table, &s.prior)?;
    let samples = sample_segmentations(&analysis.fb, &s.table, &s.prior, args.nsamples, args.seed)?;
    emit(args.model.output.as_deref(), |w| {
        write_samples_csv(w, &samples)
    })
}

#[derive(Serialize)]
struct SelectReport {
    data: PathBuf,
    family: Family,
    segments: usize,
    changepoints: ChangePointVector,
    scores: Vec<ModelScore>,
}

fn select_one(path: &Path, kmax: usize, family: Family) -> Result<SelectReport, Failure> {
    let data = read_observations(path)?;
    let context = path.display().to_string();
    if kmax > data.len() {
        return Err(Failure::Input(format!(
            "{context}: --kmax {kmax} exceeds the {} observations",
            data.len()
        )));
    }
    let sel = select_segments(&data, kmax, family).context(&context)?;
    let scores = sel
        .scores
        .iter()
        .map(|s| ModelScore {
            log_likelihood: round_sig(s.log_likelihood),
            bic: round_sig(s.bic),
            ..*s
        })
        .collect();
    Ok(SelectReport {
        data: path.to_path_buf(),
        family,
        segments: sel.segments,
        changepoints: sel.changepoints,
        scores,
    })
}

pub fn select(args: &SelectArgs) -> Result<(), Failure> {
    let family = parse_family(&args.family)?;
    if args.kmax == 0 {
        return Err(Failure::Input("--kmax must be at least 1".into()));
    }
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_failure(Some(dir), e))?;
    }
    let reports: Vec<SelectReport> = args
        .data
        .par_iter()
        .map(|p| select_one(p, args.kmax, family))
        .collect::<Result<_, _>>()?;
    match &args.out_dir {
        Some(dir) => {
            for r in &reports {
                let stem = r
                    .data
                    .file_stem()
                    .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
                emit_json(Some(&dir.join(format!("{stem}.select.json"))), r)?;
                emit(Some(&dir.join(format!("{stem}.bic.tsv"))), |w| {
                    write_scores_tsv(w, &r.scores)
                })?;
            }
            Ok(())
        }
        None => emit(None, |w| {
            for r in &reports {
                serde_json::to_writer(&mut *w, r).map_err(io::Error::other)?;
                writeln!(w)?;
            }
            Ok(())
        }),
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let family = parse_family(&args.family)?;
    let (theta0, theta1): (f64, Vec<f64>) = match family {
        Family::GaussianHomoscedastic | Family::GaussianHeteroscedastic => (
            args.theta0.unwrap_or(0.0),
            if args.theta1.is_empty() {
                (1..=10).map(|j| 0.25 * j as f64).collect()
            } else {
                args.theta1.clone()
            },
        ),
        Family::Poisson => (
            args.theta0.unwrap_or(1.0),
            if args.theta1.is_empty() {
                (2..=11).map(f64::from).collect()
            } else {
                args.theta1.clone()
            },
        ),
        Family::ExternalLogDensity => {
            return Err(Failure::Input(
                "--family: simulation needs gaussian or poisson data".into(),
            ))
        }
    };
    let size = match args.design {
        Design::Short => DesignSize::Short,
        Design::Long => DesignSize::Long,
    };
    if args.replicates == 0 {
        return Err(Failure::Input("--replicates must be at least 1".into()));
    }
    let rows = loss_table(
        family,
        size,
        theta0,
        &theta1,
        args.replicates,
        args.kmax,
        args.seed,
    )?;
    emit(args.output.as_deref(), |w| write_loss_table(w, &rows))
}

#[derive(Serialize)]
struct BenchReport {
    n: usize,
    segments: usize,
    repeats: usize,
    table_seconds: f64,
    best_seconds: f64,
    median_seconds: f64,
}

pub fn bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.k == 0 || args.k > args.n || args.n < 2 {
        return Err(Failure::Input(format!(
            "--k {} segments cannot be placed on --n {} observations",
            args.k, args.n
        )));
    }
    if args.repeats == 0 {
        return Err(Failure::Input("--repeats must be at least 1".into()));
    }
    let (n, k) = (args.n, args.k);
    let cps = ChangePointVector::new((1..k).map(|j| j * n / k).collect(), n)?;
    let means: Vec<f64> = (0..k).map(|j| (j % 2) as f64 * 1.5).collect();
    let truth = EmissionModel::gaussian_homoscedastic(&means, 1.0)?;
    let data = parametric_bootstrap(&cps, &truth, n, args.seed)?;

    let start = Instant::now();
    let model = fit_mle(&data, &cps, Family::GaussianHomoscedastic)?;
    let table = log_density_table(&data, &model)?;
    let table_seconds = start.elapsed().as_secs_f64();
    let prior = TransitionPrior::homogeneous(k, n, segpost::prior::DEFAULT_ETA)?;

    let mut times: Vec<f64> = (0..args.repeats)
        .map(|_| {
            let start = Instant::now();
            let post = PosteriorAnalysis::run(&table, &prior);
            let t = start.elapsed().as_secs_f64();
            post.map(|p| {
                std::hint::black_box(p);
                t
            })
        })
        .collect::<segpost::Result<_>>()?;
    times.sort_by(f64::total_cmp);
    let report = BenchReport {
        n,
        segments: k,
        repeats: args.repeats,
        table_seconds: round_sig(table_seconds),
        best_seconds: round_sig(times[0]),
        median_seconds: round_sig(times[times.len() / 2]),
    };
    emit_json(None, &report)
}
