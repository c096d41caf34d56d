//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any criterion fails. Criteria that need the external
//! 120-point chromosome 10 fixture are skipped when it is absent; point
//! `SEGPOST_CHR10_FIXTURE` at it or place it at `tests/fixtures/chr10.csv`.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use common::{random_instance, rng};
use segpost::decode::viterbi;
use segpost::emissions::{
    fit_mle, log_density_table, Family, LogDensityTable, ObservationSequence,
};
use segpost::engine::{ForwardBackward, PosteriorAnalysis};
use segpost::io::read_observations;
use segpost::oracle::enumerate_posterior;
use segpost::prior::TransitionPrior;
use segpost::sampler::sample_segmentations;
use segpost::simulate::{run_replicates, Pipeline, SimulationDesign};
use segpost::ChangePointVector;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

type Criterion = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("prior invariance", prior_invariance),
        ("sampler fidelity", sampler_fidelity),
        ("confidence intervals on chromosome 10", chr10_intervals),
        ("simulated loss", simulated_loss),
        ("performance and scaling", performance),
        ("numerical robustness at n=200000", robustness),
        (
            "joint sampling correlation on chromosome 10",
            chr10_correlation,
        ),
    ];
    let mut failed = 0;
    for (idx, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {name}: {tag} ({detail})", idx + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let families = [
        Family::GaussianHomoscedastic,
        Family::GaussianHeteroscedastic,
        Family::Poisson,
    ];
    let mut worst = 0.0f64;
    let mut map_mismatch = 0;
    for idx in 0..200 {
        let n = r.random_range(5..=15);
        let k = r.random_range(2..=4);
        let inst = random_instance(&mut r, n, k, families[idx % 3], idx % 2 == 1);
        let oracle = enumerate_posterior(&inst.table, &inst.prior).unwrap();
        let post = PosteriorAnalysis::run(&inst.table, &inst.prior).unwrap();
        let mut err = (post.fb.log_evidence() - oracle.log_evidence).abs();
        for (a, b) in post
            .state_posterior
            .as_slice()
            .iter()
            .zip(oracle.state_posterior.as_slice())
        {
            err = err.max((a - b).abs());
        }
        for (d, exact) in post.marginals.iter().zip(&oracle.changepoint_marginals) {
            for (p, &e) in exact.iter().enumerate() {
                err = err.max((d.prob_at(p) - e).abs());
            }
        }
        let track = post.fb.posterior_mean_track(&inst.model).unwrap();
        for (a, b) in track
            .iter()
            .zip(oracle.posterior_mean(&inst.model.locations()))
        {
            err = err.max((a - b).abs());
        }
        worst = worst.max(err);
        if viterbi(&inst.table, &inst.prior).unwrap().changepoints != oracle.map {
            map_mismatch += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        worst <= 1e-9 && map_mismatch == 0 && elapsed < Duration::from_secs(10),
        format!(
            "200 instances, max abs error {worst:.2e}, MAP mismatches {map_mismatch}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn prior_invariance() -> Outcome {
    let mut r = rng(202);
    let mut worst = 0.0f64;
    let mut path_mismatch = 0;
    for idx in 0..50 {
        let n = r.random_range(10..=120);
        let k = r.random_range(2..=6);
        let family = if idx % 2 == 0 {
            Family::GaussianHomoscedastic
        } else {
            Family::Poisson
        };
        let inst = random_instance(&mut r, n, k, family, false);
        let low = TransitionPrior::homogeneous(k, n, 0.3).unwrap();
        let high = TransitionPrior::homogeneous(k, n, 0.7).unwrap();
        let a = PosteriorAnalysis::run(&inst.table, &low).unwrap();
        let b = PosteriorAnalysis::run(&inst.table, &high).unwrap();
        for (x, y) in a
            .state_posterior
            .as_slice()
            .iter()
            .zip(b.state_posterior.as_slice())
        {
            worst = worst.max(relative_gap(*x, *y));
        }
        for (da, db) in a.marginals.iter().zip(&b.marginals) {
            for (x, y) in da.probs.iter().zip(&db.probs) {
                worst = worst.max(relative_gap(*x, *y));
            }
        }
        let va = viterbi(&inst.table, &low).unwrap();
        let vb = viterbi(&inst.table, &high).unwrap();
        if va.changepoints != vb.changepoints {
            path_mismatch += 1;
        }
    }
    verdict(
        worst <= 1e-12 && path_mismatch == 0,
        format!("50 instances, max relative gap {worst:.2e}, MAP mismatches {path_mismatch}"),
    )
}

fn sampler_fidelity() -> Outcome {
    let (n, k, m) = (12, 3, 50_000);
    let mut r = rng(303);
    let inst = random_instance(&mut r, n, k, Family::GaussianHomoscedastic, false);
    let oracle = enumerate_posterior(&inst.table, &inst.prior).unwrap();
    let fb = ForwardBackward::compute(&inst.table, &inst.prior).unwrap();
    let samples = sample_segmentations(&fb, &inst.table, &inst.prior, m, 2024).unwrap();
    let mut counts = vec![vec![0usize; n]; k - 1];
    for s in &samples {
        for (rank, &p) in s.positions().iter().enumerate() {
            counts[rank][p] += 1;
        }
    }
    let mut worst_z = 0.0f64;
    let mut outside = 0;
    let mut worst_tv = 0.0f64;
    for (rank, exact) in oracle.changepoint_marginals.iter().enumerate() {
        let mut tv = 0.0;
        for (p, &e) in exact.iter().enumerate() {
            let freq = counts[rank][p] as f64 / m as f64;
            let sd = (e * (1.0 - e) / m as f64).sqrt();
            let gap = (freq - e).abs();
            if gap > 4.0 * sd + 1e-15 {
                outside += 1;
            }
            if sd > 0.0 {
                worst_z = worst_z.max(gap / sd);
            }
            tv += gap;
        }
        worst_tv = worst_tv.max(tv / 2.0);
    }
    verdict(
        outside == 0 && worst_tv < 0.02,
        format!("max |z| {worst_z:.2}, positions beyond 4 sd {outside}, max TV {worst_tv:.4}"),
    )
}

fn chr10_fixture() -> Option<PathBuf> {
    let path = std::env::var_os("SEGPOST_CHR10_FIXTURE")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chr10.csv")
        });
    path.is_file().then_some(path)
}

fn chr10_analysis(
    data: &ObservationSequence,
    cps: &[usize],
) -> (LogDensityTable, TransitionPrior, PosteriorAnalysis) {
    let n = data.len();
    let init = ChangePointVector::new(cps.to_vec(), n).unwrap();
    let model = fit_mle(data, &init, Family::GaussianHomoscedastic).unwrap();
    let table = log_density_table(data, &model).unwrap();
    let prior = TransitionPrior::homogeneous(cps.len() + 1, n, 0.5).unwrap();
    let post = PosteriorAnalysis::run(&table, &prior).unwrap();
    (table, prior, post)
}

const FIXTURE_MISSING: &str = "chromosome 10 fixture not found; set SEGPOST_CHR10_FIXTURE";

fn chr10_intervals() -> Outcome {
    let Some(path) = chr10_fixture() else {
        eprintln!("warning: {FIXTURE_MISSING}");
        return Skip(FIXTURE_MISSING.into());
    };
    let data = read_observations(&path).unwrap();
    let mut found = Vec::new();
    let mut ok = true;
    for (cps, expect) in [
        (vec![68, 96], vec![(66, 76), (96, 96)]),
        (vec![68, 80, 96], vec![(66, 76), (79, 85), (96, 96)]),
    ] {
        let (_, _, post) = chr10_analysis(&data, &cps);
        let got: Vec<(usize, usize)> = post
            .marginals
            .iter()
            .map(|d| {
                let ci = d.confidence_interval(0.95).unwrap();
                (ci.lower, ci.upper)
            })
            .collect();
        let last = post.marginals.last().unwrap();
        let p_last = last.prob_at(*cps.last().unwrap());
        ok &= got == expect && p_last > 0.95;
        found.push(format!("K={} {got:?} P(last)={p_last:.3}", cps.len() + 1));
    }
    verdict(ok, found.join("; "))
}

fn chr10_correlation() -> Outcome {
    let Some(path) = chr10_fixture() else {
        eprintln!("warning: {FIXTURE_MISSING}");
        return Skip(FIXTURE_MISSING.into());
    };
    let data = read_observations(&path).unwrap();
    let (table, prior, post) = chr10_analysis(&data, &[68, 80, 96]);
    let samples = sample_segmentations(&post.fb, &table, &prior, 10_000, 2024).unwrap();
    let xs: Vec<f64> = samples.iter().map(|s| s.positions()[0] as f64).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.positions()[1] as f64).collect();
    let r = pearson(&xs, &ys);
    verdict(
        (r - 0.123).abs() <= 0.05,
        format!("r = {r:.4} over 10000 samples"),
    )
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn simulated_loss() -> Outcome {
    let start = Instant::now();
    let pipeline = Pipeline::Greedy { max_segments: 15 };
    let normal = SimulationDesign::short(Family::GaussianHomoscedastic, 0.0, 2.0, 7).unwrap();
    let poisson = SimulationDesign::short(Family::Poisson, 1.0, 5.0, 7).unwrap();
    let mse = run_replicates(&normal, pipeline, 200).unwrap().mse;
    let mae = run_replicates(&poisson, pipeline, 200).unwrap().mae;
    let elapsed = start.elapsed();
    verdict(
        (0.025..=0.055).contains(&mse)
            && (0.08..=0.18).contains(&mae)
            && elapsed < Duration::from_secs(120),
        format!(
            "normal MSE {mse:.4} (expected 0.037), poisson MAE {mae:.4} (expected 0.126), {:.1} s",
            elapsed.as_secs_f64()
        ),
    )
}

/// Gaussian data with `segments` equal segments and its fitted table.
fn synthetic(n: usize, segments: usize, seed: u64) -> (LogDensityTable, TransitionPrior) {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let values: Vec<f64> = (0..n)
        .map(|i| (i * segments / n) as f64 % 2.0 * 1.5 + noise.sample(&mut r))
        .collect();
    let data = ObservationSequence::new(values).unwrap();
    let cps: Vec<usize> = (1..segments).map(|k| k * n / segments).collect();
    let init = ChangePointVector::new(cps, n).unwrap();
    let model = fit_mle(&data, &init, Family::GaussianHomoscedastic).unwrap();
    let table = log_density_table(&data, &model).unwrap();
    let prior = TransitionPrior::homogeneous(segments, n, 0.5).unwrap();
    (table, prior)
}

fn time_once(table: &LogDensityTable, prior: &TransitionPrior) -> f64 {
    let start = Instant::now();
    let post = PosteriorAnalysis::run(table, prior).unwrap();
    let t = start.elapsed().as_secs_f64();
    std::hint::black_box(post);
    t
}

fn performance() -> Outcome {
    let (table, prior) = synthetic(14_241, 11, 606);
    let t = (0..9)
        .map(|_| time_once(&table, &prior))
        .fold(f64::INFINITY, f64::min);
    // sizes are interleaved so background load affects them alike; the
    // minimum over repetitions estimates the undisturbed cost
    let inputs: Vec<_> = [10_000, 20_000, 40_000]
        .iter()
        .map(|&n| synthetic(n, 11, 607))
        .collect();
    let mut times = vec![f64::INFINITY; inputs.len()];
    for _ in 0..25 {
        for (best, (table, prior)) in times.iter_mut().zip(&inputs) {
            *best = best.min(time_once(table, prior));
        }
    }
    let ratios = [times[1] / times[0], times[2] / times[1]];
    verdict(
        t < 0.1 && ratios.iter().all(|r| (1.5..=2.5).contains(r)),
        format!(
            "n=14241 K=11 in {:.2} ms; scaling ratios {:.2}, {:.2}",
            t * 1e3,
            ratios[0],
            ratios[1]
        ),
    )
}

fn robustness() -> Outcome {
    let (n, k) = (200_000, 20);
    let (table, prior) = synthetic(n, k, 707);
    let post = PosteriorAnalysis::run(&table, &prior).unwrap();
    let fb = &post.fb;
    let ev = fb.log_evidence();
    let mut finite = ev.is_finite();
    let mut worst = 0.0f64;
    for i in 0..n {
        let row = post.state_posterior.row(i);
        finite &= row.iter().all(|p| p.is_finite());
        worst = worst.max((row.iter().sum::<f64>() - 1.0).abs());
        // mass recovered from the unnormalized forward-backward product
        worst = worst.max(fb.row_mass_defect(i).exp_m1().abs());
    }
    for d in &post.marginals {
        finite &= d.probs.iter().all(|p| p.is_finite());
        worst = worst.max((d.total() - 1.0).abs());
    }
    let track = fb.posterior_mean_track(&fit_free_model(k)).unwrap();
    finite &= track.iter().all(|v| v.is_finite());
    verdict(
        finite && worst <= 1e-8,
        format!("all outputs finite: {finite}; max normalization error {worst:.2e}"),
    )
}

fn fit_free_model(segments: usize) -> segpost::emissions::EmissionModel {
    let means: Vec<f64> = (0..segments).map(|k| (k % 2) as f64 * 1.5).collect();
    segpost::emissions::EmissionModel::gaussian_homoscedastic(&means, 1.0).unwrap()
}
