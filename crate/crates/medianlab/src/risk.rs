//! Monte Carlo risk laboratory.
//!
//! The risk of an estimator at a truth `f` is the grid-averaged expected
//! squared error `(1/n^d) Σ_i E[(T[Y](i) − f(i/n))²]`. Everything here is a
//! seeded Monte Carlo approximation of that quantity: per-width records with
//! bias²/variance splits, width sweeps realizing the infimum over a finite
//! geometric grid, log–log rate fits across sample-size ladders, per-index
//! expectation profiles, and the shrinking-noise crossover experiment.
//!
//! Replicate `t` of an experiment seeded with `s` draws its noise from
//! `substream(s, t)`; replicates are computed in parallel but reduced in
//! fixed order, so reports are bit-identical for every thread count.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::filters::{FilterSpec, TwoScaleSpec};
use crate::grid::{add_noise, Dim};
use crate::noise::NoiseModel;
use crate::phantoms::Phantom;
use crate::rng;

/// Which single filter family a sweep ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Linear,
    Median,
    TwoScale,
}

impl FilterKind {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim() {
            "linear" => Ok(FilterKind::Linear),
            "median" => Ok(FilterKind::Median),
            "two-scale" => Ok(FilterKind::TwoScale),
            other => Err(domain(format!(
                "unknown filter '{other}' (expected linear|median|two-scale)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Linear => "linear",
            FilterKind::Median => "median",
            FilterKind::TwoScale => "two-scale",
        }
    }

    fn spec(&self, h1: f64, h2: Option<f64>) -> FilterSpec {
        match self {
            FilterKind::Linear => FilterSpec::Linear { h: h1 },
            FilterKind::Median => FilterSpec::Median { h: h1 },
            FilterKind::TwoScale => FilterSpec::TwoScale { h1, h2: h2.expect("two-scale pair") },
        }
    }
}

/// One Monte Carlo risk measurement at a fixed width (or width pair).
#[derive(Clone, Copy, Debug)]
pub struct RiskRecord {
    pub h1: f64,
    /// Coarse width for two-scale records, `None` for single-width filters.
    pub h2: Option<f64>,
    pub mse: f64,
    pub mse_se: f64,
    pub bias_sq: f64,
    pub variance: f64,
}

/// A width sweep for one (filter, phantom, model, σ, n) configuration.
#[derive(Clone, Debug)]
pub struct RiskReport {
    pub filter: FilterKind,
    pub phantom: String,
    pub model: NoiseModel,
    pub dim: Dim,
    pub n: usize,
    pub sigma: f64,
    pub reps: usize,
    pub seed: u64,
    /// Sorted by `(h1, h2)`.
    pub records: Vec<RiskRecord>,
}

impl RiskReport {
    /// The minimum-risk record of the sweep.
    pub fn best(&self) -> &RiskRecord {
        self.records
            .iter()
            .min_by(|a, b| a.mse.total_cmp(&b.mse))
            .expect("sweep has at least one record")
    }
}

/// Monte Carlo risk of one filter configuration.
///
/// `reps ≥ 2` independent noise draws; reports the grid-averaged MSE with
/// its standard error, plus the split into `avg_i (Ê[T(i)] − f(i/n))²` and
/// the grid-averaged per-point sample variance (divisor `reps − 1`).
pub fn estimate_risk(
    filter: &FilterSpec,
    phantom: &Phantom,
    model: NoiseModel,
    sigma: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskRecord> {
    if reps < 2 {
        return Err(domain(format!("need at least 2 replicates, got {reps}")));
    }
    let clean = phantom.sample(n)?;
    let outputs: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let noisy = add_noise(&clean, model, sigma, rng::mix(seed, t))?;
            Ok(filter.apply(&noisy)?.values().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;

    let truth = clean.values();
    let cells = truth.len() as f64;
    let mut sum = vec![0.0; truth.len()];
    let mut sumsq = vec![0.0; truth.len()];
    let mut per_rep = Vec::with_capacity(reps);
    for out in &outputs {
        let mut acc = 0.0;
        for (i, &v) in out.iter().enumerate() {
            let e = v - truth[i];
            acc += e * e;
            sum[i] += v;
            sumsq[i] += v * v;
        }
        per_rep.push(acc / cells);
    }
    let mse = per_rep.iter().sum::<f64>() / reps as f64;
    let mse_var =
        per_rep.iter().map(|v| (v - mse) * (v - mse)).sum::<f64>() / (reps as f64 - 1.0);
    let repsf = reps as f64;
    let mut bias_sq = 0.0;
    let mut variance = 0.0;
    for i in 0..truth.len() {
        let mean = sum[i] / repsf;
        let b = mean - truth[i];
        bias_sq += b * b;
        variance += (sumsq[i] - repsf * mean * mean).max(0.0) / (repsf - 1.0);
    }
    Ok(RiskRecord {
        h1: match filter {
            FilterSpec::Linear { h } | FilterSpec::Median { h } => *h,
            FilterSpec::TwoScale { h1, .. } => *h1,
            FilterSpec::Chain { widths } => widths.first().copied().unwrap_or(0.0),
        },
        h2: match filter {
            FilterSpec::TwoScale { h2, .. } => Some(*h2),
            _ => None,
        },
        mse,
        mse_se: (mse_var / repsf).sqrt(),
        bias_sq: bias_sq / cells,
        variance: variance / cells,
    })
}

/// Discrete geometry of a width choice: two widths with equal signatures
/// drive identical window sets, hence identical filter outputs.
#[derive(Clone, Debug, PartialEq)]
enum WidthSignature {
    Radius1D(usize),
    Extents2D(Vec<usize>),
    TwoScale { block: usize, stage2: Box<WidthSignature> },
}

fn single_signature(dim: Dim, n: usize, h: f64) -> WidthSignature {
    match dim {
        Dim::One => WidthSignature::Radius1D((n as f64 * h).floor() as usize),
        Dim::Two => WidthSignature::Extents2D(crate::grid::disc_row_extents(n, h)),
    }
}

fn width_signature(dim: Dim, n: usize, h1: f64, h2: Option<f64>) -> WidthSignature {
    match h2 {
        None => single_signature(dim, n, h1),
        Some(h2) => {
            let spec = TwoScaleSpec::new(n, h1, h2).expect("pair validated by grid");
            WidthSignature::TwoScale {
                block: spec.block_side,
                stage2: Box::new(single_signature(dim, spec.coarse_side, h2)),
            }
        }
    }
}

/// The √2-geometric width grid spanning `[1/n, 1/4]`.
pub fn h_grid(n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for k in 0.. {
        let h = 2f64.powf(k as f64 / 2.0) / n as f64;
        if h > 0.25 * (1.0 + 1e-9) {
            break;
        }
        out.push(h.min(0.25));
    }
    out
}

/// All valid `(h1, h2)` pairs from the geometric grid with `h1 < h2`.
pub fn two_scale_pairs(n: usize) -> Vec<(f64, f64)> {
    let grid = h_grid(n);
    let mut out = Vec::new();
    for (i, &h1) in grid.iter().enumerate() {
        for &h2 in &grid[i + 1..] {
            if TwoScaleSpec::new(n, h1, h2).is_ok() {
                out.push((h1, h2));
            }
        }
    }
    out
}

/// Sweep the width grid (or width-pair grid) for one filter kind.
///
/// Every record reuses the same replicate noise streams, so comparisons
/// across widths and filters at one seed use common random numbers.
pub fn sweep_h(
    kind: FilterKind,
    phantom: &Phantom,
    model: NoiseModel,
    sigma: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskReport> {
    let widths: Vec<(f64, Option<f64>)> = match kind {
        FilterKind::TwoScale => two_scale_pairs(n).into_iter().map(|(a, b)| (a, Some(b))).collect(),
        _ => h_grid(n).into_iter().map(|h| (h, None)).collect(),
    };
    if widths.is_empty() {
        return Err(domain(format!("no admissible widths for n = {n}")));
    }
    // widths with the same discrete window geometry produce identical
    // outputs on identical noise; compute each signature once
    let mut records: Vec<RiskRecord> = Vec::with_capacity(widths.len());
    let mut seen: Vec<(WidthSignature, usize)> = Vec::new();
    for (h1, h2) in widths {
        let sig = width_signature(phantom.dim(), n, h1, h2);
        if let Some(&(_, idx)) = seen.iter().find(|(s, _)| *s == sig) {
            let mut copy = records[idx];
            copy.h1 = h1;
            copy.h2 = h2;
            records.push(copy);
            continue;
        }
        let record = estimate_risk(&kind.spec(h1, h2), phantom, model, sigma, n, reps, seed)?;
        seen.push((sig, records.len()));
        records.push(record);
    }
    Ok(RiskReport {
        filter: kind,
        phantom: phantom_label(phantom),
        model,
        dim: phantom.dim(),
        n,
        sigma,
        reps,
        seed,
        records,
    })
}

fn phantom_label(phantom: &Phantom) -> String {
    match phantom {
        Phantom::One(_) => "1d".to_string(),
        Phantom::Two(_) => "2d".to_string(),
    }
}

/// Width sweep of the worst case over a phantom family: each record is the
/// maximum risk across the family at that width.
///
/// This is the Monte Carlo stand-in for a class risk `sup_f R(T; f)`. It
/// matters for the two-scale filter, whose block partition is degenerately
/// kind to jumps sitting exactly on block boundaries: a single aligned step
/// understates the class risk, so the family should include phantoms with
/// generic jump positions.
pub fn sweep_h_worst_case(
    kind: FilterKind,
    phantoms: &[Phantom],
    model: NoiseModel,
    sigma: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<RiskReport> {
    if phantoms.is_empty() {
        return Err(domain("worst-case sweep needs at least one phantom"));
    }
    let mut worst: Option<RiskReport> = None;
    for phantom in phantoms {
        let report = sweep_h(kind, phantom, model, sigma, n, reps, seed)?;
        worst = Some(match worst {
            None => report,
            Some(mut acc) => {
                for (slot, record) in acc.records.iter_mut().zip(&report.records) {
                    if record.mse > slot.mse {
                        *slot = *record;
                    }
                }
                acc
            }
        });
    }
    let mut report = worst.expect("nonempty family");
    report.phantom = format!("family({})", phantoms.len());
    Ok(report)
}

/// Ordinary least squares of `log(risk)` on `log(n)`.
#[derive(Clone, Debug)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Fit the empirical rate exponent from `(n, risk)` points.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(domain(format!("rate fit needs at least 3 points, got {}", points.len())));
    }
    if let Some((n, r)) = points.iter().find(|(n, r)| !(*n > 0.0 && *r > 0.0)) {
        return Err(domain(format!("rate fit needs positive points, got ({n}, {r})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(n, r)| (n.ln(), r.ln())).collect();
    let m = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let r_squared = if ss_tot <= f64::EPSILON { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { slope, intercept, r_squared, points: points.to_vec() })
}

/// Per-index mean filter output with standard errors.
#[derive(Clone, Debug)]
pub struct Profile {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Estimate `E[T(i)]` at every grid index over `reps ≥ 1000` noise draws.
pub fn bias_profile(
    filter: &FilterSpec,
    phantom: &Phantom,
    model: NoiseModel,
    sigma: f64,
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Profile> {
    if reps < 1_000 {
        return Err(domain(format!("profile needs at least 1000 replicates, got {reps}")));
    }
    let clean = phantom.sample(n)?;
    if sigma == 0.0 {
        let out = filter.apply(&clean)?;
        let len = out.len();
        return Ok(Profile { mean: out.values().to_vec(), stderr: vec![0.0; len] });
    }
    let outputs: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<f64>> {
            let noisy = add_noise(&clean, model, sigma, rng::mix(seed, t))?;
            Ok(filter.apply(&noisy)?.values().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let cells = clean.len();
    let repsf = reps as f64;
    let mut sum = vec![0.0; cells];
    let mut sumsq = vec![0.0; cells];
    for out in &outputs {
        for (i, &v) in out.iter().enumerate() {
            sum[i] += v;
            sumsq[i] += v * v;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / repsf).collect();
    let stderr: Vec<f64> = (0..cells)
        .map(|i| {
            let var = (sumsq[i] - repsf * mean[i] * mean[i]).max(0.0) / (repsf - 1.0);
            (var / repsf).sqrt()
        })
        .collect();
    Ok(Profile { mean, stderr })
}

/// One ladder entry of the crossover experiment.
#[derive(Clone, Debug)]
pub struct CrossoverRow {
    pub n: usize,
    pub sigma: f64,
    pub linear: RiskRecord,
    pub median: RiskRecord,
    /// median min-risk over linear min-risk
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct CrossoverTable {
    pub rows: Vec<CrossoverRow>,
    /// Set when `σ_n·n` fails to grow along the ladder, the regime where
    /// neither filter should beat no-smoothing.
    pub schedule_warning: bool,
}

/// Best linear vs best median risk along an `n`-ladder with noise schedule
/// `σ = sigma_of_n(n)`.
pub fn crossover_experiment(
    ns: &[usize],
    sigma_of_n: impl Fn(usize) -> f64,
    model: NoiseModel,
    phantom: &Phantom,
    reps: usize,
    seed: u64,
) -> Result<CrossoverTable> {
    if ns.len() < 2 {
        return Err(domain("crossover ladder needs at least 2 sizes"));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(domain("crossover ladder must be strictly increasing"));
    }
    let first = *ns.first().unwrap();
    let last = *ns.last().unwrap();
    let schedule_warning =
        sigma_of_n(last) * last as f64 <= sigma_of_n(first) * first as f64;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let sigma = sigma_of_n(n);
        let linear = sweep_h(FilterKind::Linear, phantom, model, sigma, n, reps, seed)?;
        let median = sweep_h(FilterKind::Median, phantom, model, sigma, n, reps, seed)?;
        let (lbest, mbest) = (*linear.best(), *median.best());
        rows.push(CrossoverRow {
            n,
            sigma,
            linear: lbest,
            median: mbest,
            ratio: mbest.mse / lbest.mse,
        });
    }
    Ok(CrossoverTable { rows, schedule_warning })
}

/// CSV header shared by all risk tables.
pub const RISK_CSV_HEADER: &str =
    "experiment,filter,phantom,model,dim,n,sigma,h1,h2,reps,seed,mse,mse_se,bias_sq,var";

/// Render a sweep report as CSV rows under [`RISK_CSV_HEADER`].
pub fn risk_csv(experiment: &str, report: &RiskReport) -> String {
    let mut out = String::from(RISK_CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let h2 = r.h2.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            experiment,
            report.filter.name(),
            report.phantom,
            report.model.name(),
            report.dim.as_u8(),
            report.n,
            report.sigma,
            r.h1,
            h2,
            report.reps,
            report.seed,
            r.mse,
            r.mse_se,
            r.bias_sq,
            r.variance,
        ));
    }
    out
}

/// Companion rate-fit CSV.
pub fn rate_csv(experiment: &str, fit: &RateFit) -> String {
    format!(
        "experiment,slope,intercept,r2\n{},{},{},{}\n",
        experiment, fit.slope, fit.intercept, fit.r_squared
    )
}

pub fn profile_csv(profile: &Profile) -> String {
    let mut out = String::from("i,mean,stderr\n");
    for (i, (m, s)) in profile.mean.iter().zip(&profile.stderr).enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, m, s));
    }
    out
}

pub fn crossover_csv(table: &CrossoverTable) -> String {
    let mut out = String::from(
        "n,sigma,linear_mse,linear_se,linear_h,median_mse,median_se,median_h,ratio,schedule_ok\n",
    );
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.n,
            row.sigma,
            row.linear.mse,
            row.linear.mse_se,
            row.linear.h1,
            row.median.mse,
            row.median.mse_se,
            row.median.h1,
            row.ratio,
            !table.schedule_warning,
        ));
    }
    out
}
