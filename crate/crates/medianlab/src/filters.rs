//! The window estimators: box linear filter, running median, two-scale
//! median, and left-to-right iterated median chains.
//!
//! All filters share the clipped window of [`crate::grid`] and the single
//! median/quantile rank convention of [`crate::stats`]. They are pure
//! functions: output entries depend only on the input and the widths, rows
//! are computed independently, and results are bit-identical under any
//! parallel schedule.
//!
//! Median outputs are order statistics of window values, so medians commute
//! exactly with monotone affine maps and preserve window ranges bit for bit.
//! Linear outputs are floating-point means (window sums via prefix tables);
//! fully constant inputs short-circuit so that `filter(c) = c` holds exactly.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::grid::{disc_row_extents, window_range_1d, Dim, GridSample, WindowSpec};
use crate::stats::median_of;

fn all_equal(values: &[f64]) -> bool {
    values.first().map(|&v| values.iter().all(|&w| w == v)).unwrap_or(true)
}

/// Box linear filter: each output entry is the mean of the window values.
pub fn linear_filter(input: &GridSample, h: f64) -> Result<GridSample> {
    let spec = WindowSpec::new(input.n(), h)?;
    if all_equal(input.values()) {
        return Ok(input.clone());
    }
    match input.dim() {
        Dim::One => linear_1d(input, spec.radius_samples),
        Dim::Two => linear_2d(input, h),
    }
}

fn linear_1d(input: &GridSample, radius: usize) -> Result<GridSample> {
    let n = input.n();
    let vals = input.values();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in vals {
        acc += v;
        prefix.push(acc);
    }
    let out: Vec<f64> = (1..=n)
        .map(|i| {
            let (lo, hi) = window_range_1d(n, radius, i);
            (prefix[hi] - prefix[lo - 1]) / (hi - lo + 1) as f64
        })
        .collect();
    GridSample::new(Dim::One, n, out)
}

fn linear_2d(input: &GridSample, h: f64) -> Result<GridSample> {
    let n = input.n();
    let vals = input.values();
    let extents = disc_row_extents(n, h);
    let radius = extents.len() - 1;
    // per-row inclusive prefix sums, one row = n+1 entries
    let mut prefix = vec![0.0; n * (n + 1)];
    for i1 in 0..n {
        let row = &vals[i1 * n..(i1 + 1) * n];
        let pre = &mut prefix[i1 * (n + 1)..(i1 + 1) * (n + 1)];
        let mut acc = 0.0;
        for (j, &v) in row.iter().enumerate() {
            acc += v;
            pre[j + 1] = acc;
        }
    }
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(row, out_row)| {
        let i1 = row + 1;
        let (lo1, hi1) = window_range_1d(n, radius, i1);
        for i2 in 1..=n {
            let mut sum = 0.0;
            let mut count = 0usize;
            for j1 in lo1..=hi1 {
                let e = extents[j1.abs_diff(i1)];
                let (lo2, hi2) = window_range_1d(n, e, i2);
                let pre = &prefix[(j1 - 1) * (n + 1)..j1 * (n + 1)];
                sum += pre[hi2] - pre[lo2 - 1];
                count += hi2 - lo2 + 1;
            }
            out_row[i2 - 1] = sum / count as f64;
        }
    });
    GridSample::new(Dim::Two, n, out)
}

/// Running median: each output entry is the window median under the
/// rank-`1+⌊m/2⌋` convention.
pub fn median_filter(input: &GridSample, h: f64) -> Result<GridSample> {
    let spec = WindowSpec::new(input.n(), h)?;
    match input.dim() {
        Dim::One => Ok(median_1d(input, spec.radius_samples)),
        Dim::Two => Ok(median_2d(input, h)),
    }
}

/// Sliding sorted window with one insert and at most one evict per step.
fn median_1d(input: &GridSample, radius: usize) -> GridSample {
    let n = input.n();
    let vals = input.values();
    let mut window: Vec<f64> = Vec::with_capacity(2 * radius + 2);
    let (mut cur_lo, mut cur_hi) = window_range_1d(n, radius, 1);
    for j in cur_lo..=cur_hi {
        sorted_insert(&mut window, vals[j - 1]);
    }
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let (lo, hi) = window_range_1d(n, radius, i);
        while cur_hi < hi {
            cur_hi += 1;
            sorted_insert(&mut window, vals[cur_hi - 1]);
        }
        while cur_lo < lo {
            sorted_remove(&mut window, vals[cur_lo - 1]);
            cur_lo += 1;
        }
        out.push(window[window.len() / 2]);
    }
    GridSample::new(Dim::One, n, out).expect("filter output shape")
}

fn sorted_insert(window: &mut Vec<f64>, v: f64) {
    let pos = window.partition_point(|&w| w < v);
    window.insert(pos, v);
}

fn sorted_remove(window: &mut Vec<f64>, v: f64) {
    let pos = window
        .binary_search_by(|w| w.total_cmp(&v))
        .expect("evicted value present in window");
    window.remove(pos);
}

/// Per-pixel gather and select; rows run in parallel with thread-local
/// scratch buffers.
fn median_2d(input: &GridSample, h: f64) -> GridSample {
    let n = input.n();
    let vals = input.values();
    let extents = disc_row_extents(n, h);
    let radius = extents.len() - 1;
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n)
        .enumerate()
        .for_each_init(Vec::new, |scratch: &mut Vec<f64>, (row, out_row)| {
            let i1 = row + 1;
            let (lo1, hi1) = window_range_1d(n, radius, i1);
            for i2 in 1..=n {
                scratch.clear();
                for j1 in lo1..=hi1 {
                    let e = extents[j1.abs_diff(i1)];
                    let (lo2, hi2) = window_range_1d(n, e, i2);
                    scratch.extend_from_slice(&vals[(j1 - 1) * n + lo2 - 1..(j1 - 1) * n + hi2]);
                }
                out_row[i2 - 1] = median_of(scratch);
            }
        });
    GridSample::new(Dim::Two, n, out).expect("filter output shape")
}

/// Geometry of a two-scale pass: fine width `h1` gives blocks of side
/// `round(n·h1)` and a coarse grid of side `⌊n/b⌋`; a trailing partial block
/// is absorbed into the last full block along each axis.
#[derive(Clone, Copy, Debug)]
pub struct TwoScaleSpec {
    pub h1: f64,
    pub h2: f64,
    pub block_side: usize,
    pub coarse_side: usize,
}

impl TwoScaleSpec {
    pub fn new(n: usize, h1: f64, h2: f64) -> Result<Self> {
        if !(h1 > 0.0 && h1 < h2 && h2 < 1.0) {
            return Err(domain(format!(
                "two-scale widths must satisfy 0 < h1 < h2 < 1, got ({h1}, {h2})"
            )));
        }
        let block_side = (n as f64 * h1).round() as usize;
        if block_side == 0 {
            return Err(domain(format!("block side round(n·h1) = 0 for n={n}, h1={h1}")));
        }
        let coarse_side = n / block_side;
        if coarse_side < 3 {
            return Err(domain(format!(
                "coarse grid side {coarse_side} too small (need ≥ 3); lower h1"
            )));
        }
        Ok(TwoScaleSpec { h1, h2, block_side, coarse_side })
    }

    /// 1-based index range of block `k` (0-based) along one axis.
    fn block_range(&self, n: usize, k: usize) -> (usize, usize) {
        let lo = k * self.block_side + 1;
        let hi = if k + 1 == self.coarse_side { n } else { (k + 1) * self.block_side };
        (lo, hi)
    }

    /// 0-based block coordinate containing the 1-based fine index.
    fn block_of(&self, i: usize) -> usize {
        ((i - 1) / self.block_side).min(self.coarse_side - 1)
    }
}

/// Two-scale median: block medians at fine width `h1`, a running median at
/// width `h2` on the coarse grid, then piecewise-constant upsampling.
pub fn two_scale_median(input: &GridSample, h1: f64, h2: f64) -> Result<GridSample> {
    let spec = TwoScaleSpec::new(input.n(), h1, h2)?;
    let coarse = block_medians(input, &spec)?;
    let smoothed = median_filter(&coarse, h2)?;
    upsample(input, &spec, &smoothed)
}

/// Stage-1 block statistic: the usual rank median for odd cardinality, the
/// midpoint average of the two central order statistics for even
/// cardinality.
///
/// The coarse pass needs the per-block noise to stay symmetric about the
/// block's true level; the upper-middle rank applied to an even block
/// shifts every block upward by the expectation of that order statistic,
/// and the second-stage median preserves rather than removes such a shift.
fn block_median(values: &mut [f64]) -> f64 {
    let m = values.len();
    if m % 2 == 1 {
        return median_of(values);
    }
    let (left, hi, _) = values.select_nth_unstable_by(m / 2, f64::total_cmp);
    let lo = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.5 * (lo + *hi)
}

/// Stage 1: the coarsened sample of per-block medians.
pub fn block_medians(input: &GridSample, spec: &TwoScaleSpec) -> Result<GridSample> {
    let n = input.n();
    let n1 = spec.coarse_side;
    match input.dim() {
        Dim::One => {
            let mut coarse = Vec::with_capacity(n1);
            let mut buf = Vec::new();
            for k in 0..n1 {
                let (lo, hi) = spec.block_range(n, k);
                buf.clear();
                buf.extend_from_slice(&input.values()[lo - 1..hi]);
                coarse.push(block_median(&mut buf));
            }
            GridSample::new(Dim::One, n1, coarse)
        }
        Dim::Two => {
            let vals = input.values();
            let mut coarse = vec![0.0; n1 * n1];
            coarse
                .par_chunks_mut(n1)
                .enumerate()
                .for_each_init(Vec::new, |buf: &mut Vec<f64>, (k1, row)| {
                    let (lo1, hi1) = spec.block_range(n, k1);
                    for (k2, slot) in row.iter_mut().enumerate() {
                        let (lo2, hi2) = spec.block_range(n, k2);
                        buf.clear();
                        for j1 in lo1..=hi1 {
                            buf.extend_from_slice(&vals[(j1 - 1) * n + lo2 - 1..(j1 - 1) * n + hi2]);
                        }
                        *slot = block_median(buf);
                    }
                });
            GridSample::new(Dim::Two, n1, coarse)
        }
    }
}

fn upsample(input: &GridSample, spec: &TwoScaleSpec, smoothed: &GridSample) -> Result<GridSample> {
    let n = input.n();
    match input.dim() {
        Dim::One => {
            let out = (1..=n).map(|i| smoothed.at1(spec.block_of(i) + 1)).collect();
            GridSample::new(Dim::One, n, out)
        }
        Dim::Two => {
            let mut out = Vec::with_capacity(n * n);
            for i1 in 1..=n {
                let k1 = spec.block_of(i1);
                for i2 in 1..=n {
                    out.push(smoothed.at2(k1 + 1, spec.block_of(i2) + 1));
                }
            }
            GridSample::new(Dim::Two, n, out)
        }
    }
}

/// Left-to-right composition of running medians; an empty width list is the
/// identity.
pub fn iterated_median(input: &GridSample, widths: &[f64]) -> Result<GridSample> {
    let mut current = input.clone();
    for &h in widths {
        current = median_filter(&current, h)?;
    }
    Ok(current)
}

/// A fully resolved filter choice, as selected on a command line.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterSpec {
    Linear { h: f64 },
    Median { h: f64 },
    TwoScale { h1: f64, h2: f64 },
    Chain { widths: Vec<f64> },
}

impl FilterSpec {
    pub fn apply(&self, input: &GridSample) -> Result<GridSample> {
        match self {
            FilterSpec::Linear { h } => linear_filter(input, *h),
            FilterSpec::Median { h } => median_filter(input, *h),
            FilterSpec::TwoScale { h1, h2 } => two_scale_median(input, *h1, *h2),
            FilterSpec::Chain { widths } => iterated_median(input, widths),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FilterSpec::Linear { .. } => "linear",
            FilterSpec::Median { .. } => "median",
            FilterSpec::TwoScale { .. } => "two-scale",
            FilterSpec::Chain { .. } => "chain",
        }
    }
}
