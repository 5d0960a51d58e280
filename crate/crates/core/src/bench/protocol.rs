//! The learning-curve and cross-validation protocols.
//!
//! Repeats are independent tasks seeded from the master seed and the
//! experimental coordinates, executed in parallel and gathered in a fixed
//! order, so output rows are byte-identical across runs and thread counts.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_oracle, fit_self_learning, fit_usm};
use crate::bench::dataset::Dataset;
use crate::bench::seeding::repeat_seed;
use crate::bench::split::{
    draw_stratified_labeled, materialize, sample_split, select_entries, select_rows, LabeledSize,
};
use crate::bench::stats::{mean, std_error, wilcoxon_signed_rank};
use crate::error::{Error, Result};
use crate::icls::fit_icls;
use crate::linalg::{Matrix, Vector};
use crate::supervised::{fit_ls, LabeledSet, LinearModel};

/// The learners the protocols can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Supervised,
    SelfLearning,
    Usm,
    Icls,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Supervised,
        Method::SelfLearning,
        Method::Usm,
        Method::Icls,
        Method::Oracle,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Method::Supervised => "supervised",
            Method::SelfLearning => "self",
            Method::Usm => "usm",
            Method::Icls => "icls",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(token: &str) -> Result<Method> {
        match token {
            "supervised" => Ok(Method::Supervised),
            "self" => Ok(Method::SelfLearning),
            "usm" => Ok(Method::Usm),
            "icls" => Ok(Method::Icls),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::invalid(format!(
                "unknown method '{other}' (expected supervised, self, usm, icls, oracle)"
            ))),
        }
    }

    /// Parse a comma-separated method list; unknown tokens are hard errors.
    pub fn parse_list(tokens: &str) -> Result<Vec<Method>> {
        let methods: Vec<Method> = tokens
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Method::parse)
            .collect::<Result<_>>()?;
        if methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        Ok(methods)
    }
}

/// Knobs shared by both protocols.
#[derive(Debug, Clone, Copy)]
pub struct ProtocolOptions {
    /// Fit models with an intercept column (the benchmark default).
    pub intercept: bool,
    /// Record wall-clock training times. Off by default so that result files
    /// are byte-identical across runs; timings are inherently noisy.
    pub measure_time: bool,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        ProtocolOptions {
            intercept: true,
            measure_time: false,
        }
    }
}

/// One (method, repeat, U) measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub dataset: String,
    pub method: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "U")]
    pub u: usize,
    pub repeat: usize,
    pub error: f64,
    pub test_loss: f64,
    pub train_seconds: f64,
    pub seed: u64,
}

/// The unlabeled-set sizes used by the learning-curve experiments:
/// 2, 4, 8, ..., 1024.
pub fn default_u_schedule() -> Vec<usize> {
    (1..=10).map(|k| 1usize << k).collect()
}

fn fit_method(
    method: Method,
    labeled: &LabeledSet,
    x_u: &Matrix,
    y_u_true: &Vector,
    intercept: bool,
) -> Result<LinearModel> {
    match method {
        Method::Supervised => fit_ls(labeled, intercept),
        Method::SelfLearning => Ok(fit_self_learning(labeled, x_u, intercept)?.model),
        Method::Usm => fit_usm(labeled, x_u),
        Method::Icls => {
            if x_u.nrows() == 0 {
                fit_ls(labeled, intercept)
            } else {
                Ok(fit_icls(labeled, x_u, intercept)?.model)
            }
        }
        Method::Oracle => fit_oracle(labeled, x_u, y_u_true, intercept),
    }
}

/// Misclassification rate and mean squared loss of raw scores against `{0,1}`
/// targets, both computed from the same fitted model.
fn evaluate(model: &LinearModel, x: &Matrix, y: &Vector) -> Result<(f64, f64)> {
    let scores = model.score(x)?;
    let n = y.len() as f64;
    let mut wrong = 0usize;
    let mut loss = 0.0;
    for i in 0..y.len() {
        let class = f64::from(scores[i] >= 0.5);
        if class != y[i] {
            wrong += 1;
        }
        loss += (scores[i] - y[i]).powi(2);
    }
    Ok((wrong as f64 / n, loss / n))
}

/// Run every method over a fresh split per (repeat, U) and record test error,
/// test squared loss and training time. Infeasible U values are skipped with
/// a logged notice.
pub fn learning_curve(
    data: &Dataset,
    methods: &[Method],
    u_schedule: &[usize],
    repeats: usize,
    master_seed: u64,
    l: LabeledSize,
    opts: ProtocolOptions,
) -> Result<Vec<RepeatResult>> {
    if methods.is_empty() {
        return Err(Error::invalid("learning_curve: no methods"));
    }
    if u_schedule.is_empty() || u_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "learning_curve: U schedule must be nonempty and increasing",
        ));
    }
    if repeats == 0 {
        return Err(Error::invalid("learning_curve: need at least one repeat"));
    }
    let l_resolved = l.resolve(data.dim());
    let feasible: Vec<usize> = u_schedule
        .iter()
        .copied()
        .filter(|&u| {
            let ok = l_resolved + u <= data.n() - 1;
            if !ok {
                log::warn!(
                    "skipping U={u}: L={l_resolved} + U exceeds n-1={} on '{}'",
                    data.n() - 1,
                    data.name
                );
            }
            ok
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::invalid(
            "learning_curve: every U in the schedule is infeasible",
        ));
    }

    let tasks: Vec<(usize, usize)> = (0..repeats)
        .flat_map(|r| feasible.iter().map(move |&u| (r, u)))
        .collect();

    let rows: Vec<Vec<RepeatResult>> = tasks
        .par_iter()
        .map(|&(repeat, u)| {
            let seed = repeat_seed(master_seed, &data.name, "lc", repeat as u64, u as u64);
            let plan = sample_split(data, LabeledSize::Fixed(l_resolved), u, seed)?;
            let split = materialize(data, &plan)?;
            let mut out = Vec::with_capacity(methods.len());
            for &method in methods {
                let start = Instant::now();
                let model = fit_method(method, &split.labeled, &split.x_u, &split.y_u_true, opts.intercept)?;
                let elapsed = start.elapsed().as_secs_f64();
                let (error, test_loss) = evaluate(&model, &split.x_test, &split.y_test)?;
                out.push(RepeatResult {
                    dataset: data.name.clone(),
                    method: method.token().to_string(),
                    l: l_resolved,
                    u,
                    repeat,
                    error,
                    test_loss,
                    train_seconds: if opts.measure_time { elapsed } else { 0.0 },
                    seed,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(rows.into_iter().flatten().collect())
}

const CV_FOLDS: usize = 10;

/// Per-repeat 10-fold cross-validation: one random fold partition per repeat,
/// a stratified labeled draw from each training pool with the rest of the
/// pool unlabeled, predictions gathered over all folds into a single error
/// per method per repeat.
pub fn cross_validate(
    data: &Dataset,
    methods: &[Method],
    repeats: usize,
    master_seed: u64,
    l: LabeledSize,
    opts: ProtocolOptions,
) -> Result<Vec<RepeatResult>> {
    if methods.is_empty() {
        return Err(Error::invalid("cross_validate: no methods"));
    }
    if repeats == 0 {
        return Err(Error::invalid("cross_validate: need at least one repeat"));
    }
    let n = data.n();
    let l_resolved = l.resolve(data.dim());
    if n < CV_FOLDS + l_resolved {
        return Err(Error::invalid(format!(
            "cross_validate: need n >= {} for L={l_resolved}, got n={n}",
            CV_FOLDS + l_resolved
        )));
    }

    let rows: Vec<Vec<RepeatResult>> = (0..repeats)
        .into_par_iter()
        .map(|repeat| {
            let seed = repeat_seed(master_seed, &data.name, "cv", repeat as u64, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let folds = partition_folds(&perm, CV_FOLDS);

            let mut predictions = vec![vec![0.0; n]; methods.len()];
            let mut scores = vec![vec![0.0; n]; methods.len()];
            let mut train_seconds = vec![0.0; methods.len()];
            let mut unlabeled_total = 0usize;

            for fold in &folds {
                let mut in_fold = vec![false; n];
                for &i in fold {
                    in_fold[i] = true;
                }
                let pool: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
                let labeled_idx = draw_stratified_labeled(&mut rng, &pool, &data.y, l_resolved)?;
                let mut in_labeled = vec![false; n];
                for &i in &labeled_idx {
                    in_labeled[i] = true;
                }
                let unlabeled_idx: Vec<usize> =
                    pool.iter().copied().filter(|&i| !in_labeled[i]).collect();
                unlabeled_total += unlabeled_idx.len();

                let labeled = LabeledSet::new(
                    select_rows(&data.x, &labeled_idx),
                    select_entries(&data.y, &labeled_idx),
                )?;
                let x_u = select_rows(&data.x, &unlabeled_idx);
                let y_u_true = select_entries(&data.y, &unlabeled_idx);
                let x_val = select_rows(&data.x, fold);

                for (m, &method) in methods.iter().enumerate() {
                    let start = Instant::now();
                    let model = fit_method(method, &labeled, &x_u, &y_u_true, opts.intercept)?;
                    train_seconds[m] += start.elapsed().as_secs_f64();
                    let s = model.score(&x_val)?;
                    for (k, &i) in fold.iter().enumerate() {
                        scores[m][i] = s[k];
                        predictions[m][i] = f64::from(s[k] >= 0.5);
                    }
                }
            }

            let mut out = Vec::with_capacity(methods.len());
            for (m, &method) in methods.iter().enumerate() {
                let mut wrong = 0usize;
                let mut loss = 0.0;
                for i in 0..n {
                    if predictions[m][i] != data.y[i] {
                        wrong += 1;
                    }
                    loss += (scores[m][i] - data.y[i]).powi(2);
                }
                out.push(RepeatResult {
                    dataset: data.name.clone(),
                    method: method.token().to_string(),
                    l: l_resolved,
                    // Mean unlabeled-pool size over the folds.
                    u: unlabeled_total / CV_FOLDS,
                    repeat,
                    error: wrong as f64 / n as f64,
                    test_loss: loss / n as f64,
                    train_seconds: if opts.measure_time { train_seconds[m] } else { 0.0 },
                    seed,
                });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    Ok(rows.into_iter().flatten().collect())
}

/// Split a shuffled permutation into nearly equal folds; every index lands in
/// exactly one fold.
fn partition_folds(perm: &[usize], folds: usize) -> Vec<Vec<usize>> {
    let n = perm.len();
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut offset = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        out.push(perm[offset..offset + size].to_vec());
        offset += size;
    }
    out
}

/// Per-(method, U) aggregate of a learning-curve run.
#[derive(Debug, Clone, Serialize)]
pub struct LearningCurveSummary {
    pub dataset: String,
    pub method: String,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "U")]
    pub u: usize,
    pub repeats: usize,
    pub mean_error: f64,
    pub se_error: f64,
    pub mean_test_loss: f64,
    pub se_test_loss: f64,
    /// Repeats on which this method's error strictly exceeds supervised.
    pub worse_than_supervised: Option<usize>,
    pub wilcoxon_p: Option<f64>,
}

/// Per-method aggregate of a cross-validation run.
#[derive(Debug, Clone, Serialize)]
pub struct CvSummary {
    pub dataset: String,
    pub method: String,
    #[serde(rename = "L")]
    pub l: usize,
    pub repeats: usize,
    pub mean_error: f64,
    pub se_error: f64,
    pub mean_test_loss: f64,
    pub worse_than_supervised: Option<usize>,
    pub wilcoxon_p: Option<f64>,
}

fn method_order(token: &str) -> usize {
    Method::ALL
        .iter()
        .position(|m| m.token() == token)
        .unwrap_or(usize::MAX)
}

/// Collect per-repeat errors keyed by (method, U), keeping repeat order.
fn errors_by_group(results: &[RepeatResult]) -> Vec<((String, usize), Vec<&RepeatResult>)> {
    let mut groups: Vec<((String, usize), Vec<&RepeatResult>)> = Vec::new();
    for r in results {
        let key = (r.method.clone(), r.u);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups.sort_by(|a, b| {
        (a.0 .1, method_order(&a.0 .0)).cmp(&(b.0 .1, method_order(&b.0 .0)))
    });
    groups
}

pub fn summarize_learning_curve(results: &[RepeatResult]) -> Result<Vec<LearningCurveSummary>> {
    if results.is_empty() {
        return Err(Error::invalid("summarize: no results"));
    }
    let groups = errors_by_group(results);
    let mut out = Vec::with_capacity(groups.len());
    for ((method, u), rows) in &groups {
        let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let losses: Vec<f64> = rows.iter().map(|r| r.test_loss).collect();
        let supervised = groups
            .iter()
            .find(|((m, gu), _)| m == "supervised" && gu == u)
            .map(|(_, v)| v);
        let (worse, p) = match supervised {
            Some(sup_rows) if method != "supervised" => {
                let sup_errors: Vec<f64> = sup_rows.iter().map(|r| r.error).collect();
                let worse = errors
                    .iter()
                    .zip(&sup_errors)
                    .filter(|(e, s)| e > s)
                    .count();
                let (_, p) = wilcoxon_signed_rank(&errors, &sup_errors)?;
                (Some(worse), Some(p))
            }
            _ => (None, None),
        };
        out.push(LearningCurveSummary {
            dataset: rows[0].dataset.clone(),
            method: method.clone(),
            l: rows[0].l,
            u: *u,
            repeats: rows.len(),
            mean_error: mean(&errors),
            se_error: std_error(&errors),
            mean_test_loss: mean(&losses),
            se_test_loss: std_error(&losses),
            worse_than_supervised: worse,
            wilcoxon_p: p,
        });
    }
    Ok(out)
}

pub fn summarize_cv(results: &[RepeatResult]) -> Result<Vec<CvSummary>> {
    if results.is_empty() {
        return Err(Error::invalid("summarize: no results"));
    }
    let mut methods: Vec<String> = Vec::new();
    for r in results {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    methods.sort_by_key(|m| method_order(m));

    let per_method = |m: &str| -> Vec<&RepeatResult> {
        results.iter().filter(|r| r.method == m).collect()
    };
    let sup_errors: Option<Vec<f64>> = methods
        .iter()
        .any(|m| m == "supervised")
        .then(|| per_method("supervised").iter().map(|r| r.error).collect());

    let mut out = Vec::with_capacity(methods.len());
    for method in &methods {
        let rows = per_method(method);
        let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let losses: Vec<f64> = rows.iter().map(|r| r.test_loss).collect();
        let (worse, p) = match (&sup_errors, method.as_str()) {
            (Some(sup), m) if m != "supervised" => {
                let worse = errors.iter().zip(sup).filter(|(e, s)| e > s).count();
                let (_, p) = wilcoxon_signed_rank(&errors, sup)?;
                (Some(worse), Some(p))
            }
            _ => (None, None),
        };
        out.push(CvSummary {
            dataset: rows[0].dataset.clone(),
            method: method.clone(),
            l: rows[0].l,
            repeats: rows.len(),
            mean_error: mean(&errors),
            se_error: std_error(&errors),
            mean_test_loss: mean(&losses),
            worse_than_supervised: worse,
            wilcoxon_p: p,
        });
    }
    Ok(out)
}
