//! Order-statistic toolbox: empirical quantiles, median moments, the scaled
//! median distribution of an odd sample, and the tail-exponent formulas.
//!
//! One rank convention is used everywhere, for quantiles and medians alike:
//! the empirical `p`-quantile of `m` values is the order statistic of rank
//! `1 + ⌊mp⌋` (1-based), and the median is that quantile at `p = 1/2` —
//! the upper-middle value when `m` is even. The window filters reuse
//! [`median_of`], so there is exactly one place where ties are broken.

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::noise::NoiseModel;
use crate::rng;

/// 0-based index of the rank-`1+⌊mp⌋` order statistic.
pub fn quantile_index(m: usize, p: f64) -> Result<usize> {
    if m == 0 {
        return Err(domain("empty sample has no quantiles"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("quantile probability must lie in (0,1), got {p}")));
    }
    let idx = (m as f64 * p).floor() as usize;
    if idx >= m {
        return Err(domain(format!("rank 1+⌊mp⌋ = {} overflows sample size {m}", idx + 1)));
    }
    Ok(idx)
}

/// Empirical `p`-quantile: order statistic of rank `1 + ⌊mp⌋`.
pub fn empirical_quantile(sample: &[f64], p: f64) -> Result<f64> {
    let idx = quantile_index(sample.len(), p)?;
    let mut buf = sample.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

/// Median under the single rank convention (`p = 1/2`); scrambles `values`.
pub fn median_of(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let idx = values.len() / 2; // 0-based ⌊m/2⌋ = rank 1+⌊m/2⌋
    let (_, v, _) = values.select_nth_unstable_by(idx, f64::total_cmp);
    *v
}

/// A Monte Carlo estimate with its standard error and provenance.
#[derive(Clone, Copy, Debug)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
}

fn mc_mean(per_rep: &[f64], seed: u64) -> McEstimate {
    let reps = per_rep.len();
    let mean = per_rep.iter().sum::<f64>() / reps as f64;
    let var = per_rep.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps as f64 - 1.0);
    McEstimate {
        estimate: mean,
        stderr: (var / reps as f64).sqrt(),
        reps,
        seed,
    }
}

/// Monte Carlo estimate of `E[Med_m(Z₁,…,Z_m)²]` for an odd sample size.
///
/// Replicates draw from independent substreams of `seed`, and the reduction
/// order is fixed, so the result is bit-identical for any thread count.
pub fn median_second_moment_mc(
    model: NoiseModel,
    m: usize,
    reps: usize,
    seed: u64,
) -> Result<McEstimate> {
    if m == 0 || m.is_multiple_of(2) {
        return Err(domain(format!("sample size must be odd and positive, got {m}")));
    }
    if reps < 1_000 {
        return Err(domain(format!("need at least 1000 replicates, got {reps}")));
    }
    let per_rep: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::substream(seed, t);
            let mut draws: Vec<f64> = (0..m).map(|_| model.sample(&mut rng)).collect();
            let med = median_of(&mut draws);
            med * med
        })
        .collect();
    Ok(mc_mean(&per_rep, seed))
}

/// Result of [`quantile_second_moment_mc`]: the estimate together with its
/// ratio to the tail-shape reference `(p(1−p))^{−2α+2}`.
#[derive(Clone, Copy, Debug)]
pub struct QuantileMoment {
    pub mc: McEstimate,
    pub shape_ratio: f64,
}

/// Monte Carlo estimate of `E[Z_{m,p}²]`, the second moment of the empirical
/// `p`-quantile of `m` model draws.
///
/// `p` must stay inside `(2α/m, 1 − 2α/m)` with `α = α(ζ)` of the model;
/// nearer the extremes the moment is not controlled.
pub fn quantile_second_moment_mc(
    model: NoiseModel,
    m: usize,
    p: f64,
    reps: usize,
    seed: u64,
) -> Result<QuantileMoment> {
    if reps < 1_000 {
        return Err(domain(format!("need at least 1000 replicates, got {reps}")));
    }
    let alpha = alpha_of_zeta(model.zeta())?;
    let lo = 2.0 * alpha / m as f64;
    if !(p > lo && p < 1.0 - lo) {
        return Err(domain(format!(
            "p = {p} outside the admissible range ({lo}, {}) for m = {m}",
            1.0 - lo
        )));
    }
    let idx = quantile_index(m, p)?;
    let per_rep: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::substream(seed, t);
            let mut draws: Vec<f64> = (0..m).map(|_| model.sample(&mut rng)).collect();
            let (_, v, _) = draws.select_nth_unstable_by(idx, f64::total_cmp);
            *v * *v
        })
        .collect();
    let mc = mc_mean(&per_rep, seed);
    let reference = (p * (1.0 - p)).powf(-2.0 * alpha + 2.0);
    Ok(QuantileMoment {
        mc,
        shape_ratio: mc.estimate / reference,
    })
}

/// CDF of `√(2m+1) · Median(Z₁,…,Z_{2m+1})`.
///
/// Composes the model CDF with the beta-type integral
/// `B_m(y) = (2m+1)!/(m!)² ∫₀^y (u(1−u))^m du`, evaluated by adaptive
/// Simpson quadrature on the log-scaled integrand (the normalizer is folded
/// in as `exp(lgamma(2m+2) − 2·lgamma(m+1))`, so nothing overflows at
/// moderate `m`). Absolute accuracy 1e−10.
pub fn repeated_median_cdf(model: NoiseModel, m: usize, x: f64) -> f64 {
    let scale = ((2 * m + 1) as f64).sqrt();
    beta_median_cdf(m, model.cdf(x / scale))
}

/// `B_m(y)`: CDF of the median of `2m+1` independent uniforms.
fn beta_median_cdf(m: usize, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 1.0;
    }
    if y > 0.5 {
        return 1.0 - beta_median_cdf(m, 1.0 - y);
    }
    let mf = m as f64;
    let log_norm = libm::lgamma(2.0 * mf + 2.0) - 2.0 * libm::lgamma(mf + 1.0);
    let integrand = move |u: f64| {
        if u <= 0.0 {
            if m == 0 {
                log_norm.exp()
            } else {
                0.0
            }
        } else {
            (log_norm + mf * (u.ln() + (-u).ln_1p())).exp()
        }
    };
    adaptive_simpson(&integrand, 0.0, y, 1e-11).min(1.0)
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth == 0 || err.abs() <= 15.0 * tol {
        left + right + err / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// The quantile-variance blowup exponent `α(ζ)`.
///
/// `(5ζ−3)/(4ζ−4)` for `ζ > 3`, `ζ/(ζ−1)` for `1 < ζ ≤ 3`; continuous at
/// the knot (both branches give 3/2) and `5/4` in the limit `ζ = ∞`.
pub fn alpha_of_zeta(zeta: f64) -> Result<f64> {
    if zeta.is_nan() || zeta <= 1.0 {
        return Err(domain(format!("decay exponent must exceed 1, got {zeta}")));
    }
    if zeta.is_infinite() {
        return Ok(1.25);
    }
    if zeta > 3.0 {
        Ok((5.0 * zeta - 3.0) / (4.0 * zeta - 4.0))
    } else {
        Ok(zeta / (zeta - 1.0))
    }
}

/// The near-edge risk factor `ν`: `σ²` for `ζ > 3`, `σ²·log(1/σ)` at
/// `ζ = 3`, `σ^{ζ−1}` for `ζ < 3`. Requires `0 < σ < 1`.
pub fn nu_n(zeta: f64, sigma: f64) -> Result<f64> {
    if zeta.is_nan() || zeta <= 1.0 {
        return Err(domain(format!("decay exponent must exceed 1, got {zeta}")));
    }
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(domain(format!("sigma must lie in (0,1), got {sigma}")));
    }
    Ok(if zeta > 3.0 {
        sigma * sigma
    } else if zeta == 3.0 {
        sigma * sigma * (1.0 / sigma).ln()
    } else {
        sigma.powf(zeta - 1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_rank_examples() {
        assert_eq!(empirical_quantile(&[3.0, 1.0, 2.0], 0.5).unwrap(), 2.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 3.0);
        assert_eq!(empirical_quantile(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap(), 2.0);
    }

    #[test]
    fn quantile_rejects_bad_p_and_empty() {
        assert!(empirical_quantile(&[], 0.5).is_err());
        assert!(empirical_quantile(&[1.0], 0.0).is_err());
        assert!(empirical_quantile(&[1.0], 1.0).is_err());
    }

    #[test]
    fn quantile_permutation_invariant_and_monotone_in_p() {
        let mut rng = crate::rng::stream(17);
        let sample: Vec<f64> = (0..37).map(|_| NoiseModel::Gaussian.sample(&mut rng)).collect();
        let mut shuffled = sample.clone();
        shuffled.reverse();
        shuffled.swap(0, 18);
        let mut prev = f64::NEG_INFINITY;
        for k in 1..20 {
            let p = k as f64 / 20.0;
            let a = empirical_quantile(&sample, p).unwrap();
            let b = empirical_quantile(&shuffled, p).unwrap();
            assert_eq!(a, b);
            assert!(a >= prev);
            prev = a;
        }
    }

    #[test]
    fn median_matches_quantile_convention() {
        let mut v = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(median_of(&mut v), 3.0); // even size: upper-middle
        let mut w = vec![5.0, 1.0, 3.0];
        assert_eq!(median_of(&mut w), 3.0);
        let data = [0.3, -1.0, 2.0, 0.7, 0.1, -0.4];
        let mut d = data.to_vec();
        assert_eq!(median_of(&mut d), empirical_quantile(&data, 0.5).unwrap());
    }

    #[test]
    fn alpha_branch_table() {
        assert_eq!(alpha_of_zeta(5.0).unwrap(), 1.375);
        assert_eq!(alpha_of_zeta(2.0).unwrap(), 2.0);
        assert_eq!(alpha_of_zeta(3.0).unwrap(), 1.5);
        assert!((alpha_of_zeta(3.0 + 1e-12).unwrap() - 1.5).abs() < 1e-9);
        assert_eq!(alpha_of_zeta(f64::INFINITY).unwrap(), 1.25);
        assert!(alpha_of_zeta(1.0).is_err());
        assert!(alpha_of_zeta(0.5).is_err());
    }

    #[test]
    fn alpha_nonincreasing_in_zeta() {
        let zetas = [1.1, 1.5, 2.0, 2.5, 3.0, 3.5, 5.0, 10.0, 1e6, f64::INFINITY];
        let mut prev = f64::INFINITY;
        for &z in &zetas {
            let a = alpha_of_zeta(z).unwrap();
            assert!(a <= prev + 1e-12, "alpha({z}) = {a} > {prev}");
            prev = a;
        }
    }

    #[test]
    fn nu_branch_table() {
        assert!((nu_n(4.0, 0.1).unwrap() - 0.01).abs() < 1e-15);
        assert!((nu_n(2.0, 0.01).unwrap() - 0.01).abs() < 1e-15);
        let e = std::f64::consts::E;
        assert!((nu_n(3.0, 1.0 / e).unwrap() - (1.0 / e).powi(2) * 2.0_f64.ln().mul_add(0.0, 1.0)).abs() < 1e-12);
        assert!((nu_n(f64::INFINITY, 0.2).unwrap() - 0.04).abs() < 1e-15);
        assert!(nu_n(4.0, 1.0).is_err());
        assert!(nu_n(4.0, 0.0).is_err());
        assert!(nu_n(0.9, 0.5).is_err());
    }

    #[test]
    fn repeated_median_cdf_single_draw_is_model_cdf() {
        for x in [-2.0, -0.3, 0.0, 0.7, 1.9] {
            let direct = NoiseModel::Gaussian.cdf(x);
            let composed = repeated_median_cdf(NoiseModel::Gaussian, 0, x);
            assert!((direct - composed).abs() < 1e-10, "x={x}");
        }
    }

    #[test]
    fn repeated_median_cdf_symmetry_and_center() {
        for m in [1usize, 3, 10] {
            assert!((repeated_median_cdf(NoiseModel::Laplace, m, 0.0) - 0.5).abs() < 1e-10);
            for x in [0.2, 0.9, 2.5] {
                let up = repeated_median_cdf(NoiseModel::Laplace, m, x);
                let dn = repeated_median_cdf(NoiseModel::Laplace, m, -x);
                assert!((up + dn - 1.0).abs() < 1e-9, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn repeated_median_cdf_is_valid_cdf() {
        let mut prev = 0.0;
        for k in 0..=1000 {
            let x = -8.0 + 16.0 * k as f64 / 1000.0;
            let v = repeated_median_cdf(NoiseModel::Gaussian, 3, x);
            assert!((0.0..=1.0).contains(&v));
            assert!(v + 1e-12 >= prev, "not monotone at x={x}");
            prev = v;
        }
        assert!(repeated_median_cdf(NoiseModel::Gaussian, 3, -12.0) < 1e-9);
        assert!(repeated_median_cdf(NoiseModel::Gaussian, 3, 12.0) > 1.0 - 1e-9);
    }

    #[test]
    fn repeated_median_cdf_matches_simulation() {
        // 7-draw scaled medians vs the composed formula, at unit-test size.
        let m = 3usize;
        let reps = 20_000u64;
        let scale = 7f64.sqrt();
        let mut samples: Vec<f64> = (0..reps)
            .map(|t| {
                let mut rng = crate::rng::substream(31, t);
                let mut draws: Vec<f64> =
                    (0..7).map(|_| NoiseModel::Gaussian.sample(&mut rng)).collect();
                scale * median_of(&mut draws)
            })
            .collect();
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let mut ks = 0.0_f64;
        for (i, &x) in samples.iter().enumerate() {
            let f = repeated_median_cdf(NoiseModel::Gaussian, m, x);
            ks = ks.max((f - i as f64 / n).abs());
            ks = ks.max((f - (i as f64 + 1.0) / n).abs());
        }
        assert!(ks < 0.015, "KS distance {ks}");
    }

    #[test]
    fn median_second_moment_single_draw_is_variance() {
        let est = median_second_moment_mc(NoiseModel::Gaussian, 1, 20_000, 5).unwrap();
        assert!((est.estimate - 1.0).abs() < 5.0 * est.stderr.max(0.01), "{est:?}");
        let est = median_second_moment_mc(NoiseModel::Uniform, 1, 20_000, 5).unwrap();
        assert!((est.estimate - 1.0).abs() < 0.05, "{est:?}");
    }

    #[test]
    fn median_second_moment_gaussian_asymptotics() {
        // m·E[Med²] → π/2 for Gaussian noise.
        let m = 101;
        let est = median_second_moment_mc(NoiseModel::Gaussian, m, 20_000, 7).unwrap();
        let scaled = m as f64 * est.estimate;
        let target = std::f64::consts::FRAC_PI_2;
        assert!((scaled - target).abs() < 0.1 * target, "scaled {scaled}");
    }

    #[test]
    fn median_second_moment_rejects_bad_args() {
        assert!(median_second_moment_mc(NoiseModel::Gaussian, 2, 2000, 0).is_err());
        assert!(median_second_moment_mc(NoiseModel::Gaussian, 0, 2000, 0).is_err());
        assert!(median_second_moment_mc(NoiseModel::Gaussian, 3, 999, 0).is_err());
    }

    #[test]
    fn median_second_moment_cauchy_scaling_bracket() {
        // m·E[Med²] stays within a bounded bracket across m for Cauchy noise.
        let a = median_second_moment_mc(NoiseModel::Cauchy, 101, 20_000, 13).unwrap();
        let b = median_second_moment_mc(NoiseModel::Cauchy, 1001, 20_000, 14).unwrap();
        let ra = 101.0 * a.estimate;
        let rb = 1001.0 * b.estimate;
        let ratio = ra / rb;
        assert!(
            (1.0 / 3.0..=3.0).contains(&ratio),
            "scaled moments {ra} vs {rb} differ by more than 3x"
        );
    }

    #[test]
    fn quantile_moment_matches_uniform_closed_form() {
        let (m, p) = (1001usize, 0.9);
        let got = quantile_second_moment_mc(NoiseModel::Uniform, m, p, 20_000, 3).unwrap();
        // rank k order statistic of Unif(0,1) is Beta(k, m+1−k)
        let k = (m as f64 * p).floor() + 1.0;
        let mf = m as f64;
        let eu = k / (mf + 1.0);
        let eu2 = k * (k + 1.0) / ((mf + 1.0) * (mf + 2.0));
        let expect = 3.0 * (4.0 * eu2 - 4.0 * eu + 1.0);
        assert!(
            (got.mc.estimate - expect).abs() < 0.1 * expect,
            "mc {} vs beta-moment {expect}",
            got.mc.estimate
        );
    }

    #[test]
    fn quantile_moment_equals_median_moment_at_half() {
        let a = quantile_second_moment_mc(NoiseModel::Gaussian, 101, 0.5, 5_000, 21).unwrap();
        let b = median_second_moment_mc(NoiseModel::Gaussian, 101, 5_000, 21).unwrap();
        assert_eq!(a.mc.estimate, b.estimate);
    }

    #[test]
    fn quantile_moment_shape_ratio_bounded_for_gaussian() {
        // The ratio to (p(1−p))^{−2α+2} stays below one constant across p.
        for &p in &[0.6, 0.8, 0.95] {
            let got = quantile_second_moment_mc(NoiseModel::Gaussian, 1001, p, 10_000, 4).unwrap();
            assert!(got.shape_ratio <= 1.0, "p={p} ratio={}", got.shape_ratio);
        }
    }

    #[test]
    fn quantile_moment_rejects_extreme_p() {
        assert!(quantile_second_moment_mc(NoiseModel::Gaussian, 10, 0.9, 2000, 0).is_err());
        assert!(quantile_second_moment_mc(NoiseModel::Cauchy, 10, 0.5, 2000, 0).is_ok());
        assert!(quantile_second_moment_mc(NoiseModel::Cauchy, 10, 0.35, 2000, 0).is_err());
    }

    #[test]
    fn scaled_median_density_tail_report() {
        // Numerical check that the scaled-median density decays at least
        // like |x|^{-4}: report sup over a grid of ψ_m(x)(1+|x|)^4 per
        // sample size, without asserting a particular threshold.
        for &m in &[3usize, 10, 50] {
            let mut sup = 0.0_f64;
            for k in 0..=200 {
                let x = 10.0 * k as f64 / 200.0;
                let e = 1e-4;
                let density = (repeated_median_cdf(NoiseModel::Gaussian, m, x + e)
                    - repeated_median_cdf(NoiseModel::Gaussian, m, x - e))
                    / (2.0 * e);
                sup = sup.max(density * (1.0 + x).powi(4));
            }
            println!("scaled-median tail check: 2m+1 = {}, sup ψ(1+x)^4 = {sup:.4}", 2 * m + 1);
            assert!(sup.is_finite() && sup > 0.0);
        }
    }
}
