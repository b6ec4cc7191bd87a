//! Grids, sampled signals/images, and the discrete smoothing window.
//!
//! A [`GridSample`] holds real values indexed by `i ∈ {1,…,n}^d` for
//! `d = 1, 2`, stored row-major in doubles. The smoothing window of
//! continuum radius `h` around `i` is the set of grid indices within
//! distance `n·h` of `i` — absolute value in 1-D, Euclidean distance in
//! 2-D — clipped to the grid. No padding or reflection is ever applied.

use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{domain, parse, Result};
use crate::noise::NoiseModel;
use crate::rng;

/// Grid dimension; this crate handles signals (1-D) and images (2-D) only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    One,
    Two,
}

impl Dim {
    /// Total number of cells of an `n`-wide grid.
    pub fn cells(self, n: usize) -> usize {
        match self {
            Dim::One => n,
            Dim::Two => n * n,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Dim::One => 1,
            Dim::Two => 2,
        }
    }

    pub fn from_u8(d: u8) -> Result<Self> {
        match d {
            1 => Ok(Dim::One),
            2 => Ok(Dim::Two),
            other => Err(domain(format!("dim must be 1 or 2, got {other}"))),
        }
    }
}

/// A `d`-dimensional array of real values on the grid `{1,…,n}^d`.
///
/// Immutable after construction; all entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    dim: Dim,
    n: usize,
    values: Vec<f64>,
}

impl GridSample {
    pub fn new(dim: Dim, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(domain("grid side n must be positive"));
        }
        if values.len() != dim.cells(n) {
            return Err(domain(format!(
                "value array has length {}, expected n^dim = {}",
                values.len(),
                dim.cells(n)
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite grid value {v}")));
        }
        Ok(GridSample { dim, n, values })
    }

    pub fn constant(dim: Dim, n: usize, value: f64) -> Result<Self> {
        GridSample::new(dim, n, vec![value; dim.cells(n)])
    }

    /// 1-D sample with `values[i] = f(i/n)`.
    pub fn from_fn_1d(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let nf = n as f64;
        let values = (1..=n).map(|i| f(i as f64 / nf)).collect();
        GridSample::new(Dim::One, n, values)
    }

    /// 2-D sample with `values[(i1,i2)] = f(i1/n, i2/n)`, row-major in `i1`.
    pub fn from_fn_2d(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let nf = n as f64;
        let mut values = Vec::with_capacity(n * n);
        for i1 in 1..=n {
            for i2 in 1..=n {
                values.push(f(i1 as f64 / nf, i2 as f64 / nf));
            }
        }
        GridSample::new(Dim::Two, n, values)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major linear offset of the 2-D index `(i1, i2)`, both 1-based.
    pub fn offset2(&self, i1: usize, i2: usize) -> usize {
        (i1 - 1) * self.n + (i2 - 1)
    }

    /// Value at a 1-based 1-D index.
    pub fn at1(&self, i: usize) -> f64 {
        self.values[i - 1]
    }

    /// Value at a 1-based 2-D index.
    pub fn at2(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.offset2(i1, i2)]
    }

    /// CSV encoding: a `dim,n` header line, the `dim,n` record, then one
    /// value per line (1-D) or one comma-joined row per grid row (2-D).
    /// Values print in shortest round-trip form, so decode is bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("dim,n\n");
        let _ = writeln!(out, "{},{}", self.dim.as_u8(), self.n);
        match self.dim {
            Dim::One => {
                for v in &self.values {
                    let _ = writeln!(out, "{v}");
                }
            }
            Dim::Two => {
                for row in self.values.chunks(self.n) {
                    let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    let _ = writeln!(out, "{}", line.join(","));
                }
            }
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| parse("empty sample file"))??;
        if header.trim() != "dim,n" {
            return Err(parse(format!("expected header 'dim,n', got '{header}'")));
        }
        let meta = lines
            .next()
            .ok_or_else(|| parse("missing dim,n record"))??;
        let mut parts = meta.trim().split(',');
        let dim: u8 = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse("bad dim field"))?;
        let n: usize = parts
            .next()
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse("bad n field"))?;
        let dim = Dim::from_u8(dim)?;
        let mut values = Vec::with_capacity(dim.cells(n));
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| parse(format!("bad value '{field}'")))?;
                values.push(v);
            }
        }
        GridSample::new(dim, n, values)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_csv(text.as_bytes())
    }
}

/// A smoothing-window width: continuum radius `h ∈ (0,1)` and the derived
/// per-axis sample radius `⌊nh⌋`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowSpec {
    pub h: f64,
    pub radius_samples: usize,
}

impl WindowSpec {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(domain(format!("window width h must lie in (0,1), got {h}")));
        }
        Ok(WindowSpec {
            h,
            radius_samples: (n as f64 * h).floor() as usize,
        })
    }
}

fn check_coord(n: usize, c: usize) -> Result<()> {
    if c < 1 || c > n {
        return Err(domain(format!("index {c} outside the grid 1..={n}")));
    }
    Ok(())
}

/// Clipped 1-D window range `[lo, hi]` (inclusive, 1-based) around `i`.
pub(crate) fn window_range_1d(n: usize, radius: usize, i: usize) -> (usize, usize) {
    (i.saturating_sub(radius).max(1), (i + radius).min(n))
}

/// 1-D window: `{j : |j − i| ≤ ⌊nh⌋}` clipped to the grid.
pub fn window_indices_1d(n: usize, h: f64, i: usize) -> Result<Vec<usize>> {
    check_coord(n, i)?;
    let spec = WindowSpec::new(n, h)?;
    let (lo, hi) = window_range_1d(n, spec.radius_samples, i);
    Ok((lo..=hi).collect())
}

/// Per-row half-widths of the Euclidean disc of real radius `nh`: entry `k`
/// is the largest `e` with `k² + e² ≤ (nh)²`, for `k = 0..=⌊nh⌋`.
pub(crate) fn disc_row_extents(n: usize, h: f64) -> Vec<usize> {
    let r = n as f64 * h;
    let rfloor = r.floor() as usize;
    (0..=rfloor)
        .map(|k| {
            let rem = r * r - (k * k) as f64;
            if rem < 0.0 {
                0
            } else {
                rem.sqrt().floor() as usize
            }
        })
        .collect()
}

/// 2-D window: `{j : ‖j − i‖₂ ≤ nh}` clipped to the grid, row-major order.
pub fn window_indices_2d(n: usize, h: f64, i: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    check_coord(n, i.0)?;
    check_coord(n, i.1)?;
    WindowSpec::new(n, h)?;
    let extents = disc_row_extents(n, h);
    let radius = extents.len() - 1;
    let mut out = Vec::new();
    let (lo1, hi1) = window_range_1d(n, radius, i.0);
    for j1 in lo1..=hi1 {
        let k = j1.abs_diff(i.0);
        let (lo2, hi2) = window_range_1d(n, extents[k], i.1);
        for j2 in lo2..=hi2 {
            out.push((j1, j2));
        }
    }
    Ok(out)
}

/// Add `sigma`-scaled white noise from `model`, seeded draws in index order.
///
/// `out[i] = clean[i] + sigma·Z(i)` with the `Z(i)` i.i.d. from the model;
/// the output is fully determined by `(clean, model, sigma, seed)`.
pub fn add_noise(clean: &GridSample, model: NoiseModel, sigma: f64, seed: u64) -> Result<GridSample> {
    if sigma < 0.0 {
        return Err(domain(format!("sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(clean.clone());
    }
    let mut rng = rng::stream(seed);
    let values = clean
        .values()
        .iter()
        .map(|&v| v + sigma * model.sample(&mut rng))
        .collect();
    GridSample::new(clean.dim(), clean.n(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantoms::Phantom1D;

    #[test]
    fn window_1d_interior() {
        assert_eq!(window_indices_1d(10, 0.2, 5).unwrap(), vec![3, 4, 5, 6, 7]);
    }

    #[test]
    fn window_1d_clipped_at_boundary() {
        assert_eq!(window_indices_1d(10, 0.2, 1).unwrap(), vec![1, 2, 3]);
    }

    #[test]
    fn window_2d_euclidean_radius_one() {
        let w = window_indices_2d(10, 0.1, (5, 5)).unwrap();
        let mut expect = vec![(5, 5), (4, 5), (6, 5), (5, 4), (5, 6)];
        expect.sort_unstable();
        let mut got = w.clone();
        got.sort_unstable();
        assert_eq!(got, expect);
    }

    #[test]
    fn window_rejects_out_of_grid() {
        assert!(window_indices_1d(10, 0.2, 0).is_err());
        assert!(window_indices_1d(10, 0.2, 11).is_err());
        assert!(window_indices_2d(10, 0.1, (5, 11)).is_err());
        assert!(window_indices_1d(10, 0.0, 5).is_err());
        assert!(window_indices_1d(10, 1.0, 5).is_err());
    }

    #[test]
    fn window_contains_center_and_respects_size_bound() {
        for &(n, h) in &[(10usize, 0.23), (17, 0.05), (64, 0.5)] {
            let r = (n as f64 * h).floor() as usize;
            for i in 1..=n {
                let w = window_indices_1d(n, h, i).unwrap();
                assert!(w.contains(&i));
                assert!(w.len() <= 2 * r + 1);
                // interior windows are full-size
                if i > r && i + r <= n {
                    assert_eq!(w.len(), 2 * r + 1);
                }
            }
        }
        let n = 12;
        let h = 0.21;
        let r = (n as f64 * h).floor() as usize;
        for i1 in 1..=n {
            for i2 in 1..=n {
                let w = window_indices_2d(n, h, (i1, i2)).unwrap();
                assert!(w.contains(&(i1, i2)));
                assert!(w.len() <= (2 * r + 1) * (2 * r + 1));
            }
        }
    }

    #[test]
    fn window_reflection_symmetry_away_from_boundary() {
        let (n, h) = (20usize, 0.15);
        let r = (n as f64 * h).floor() as usize;
        for i in (1 + r)..=(n - r) {
            let w: Vec<usize> = window_indices_1d(n, h, i).unwrap();
            let refl = n + 1 - i;
            let mut wr: Vec<usize> = window_indices_1d(n, h, refl)
                .unwrap()
                .into_iter()
                .map(|j| n + 1 - j)
                .collect();
            wr.sort_unstable();
            assert_eq!(w, wr);
        }
    }

    #[test]
    fn window_2d_matches_brute_force() {
        let n = 15;
        for &h in &[0.07, 0.131, 0.3] {
            let nh = n as f64 * h;
            for &center in &[(1usize, 1usize), (8, 8), (15, 3), (2, 14)] {
                let mut brute: Vec<(usize, usize)> = Vec::new();
                for j1 in 1..=n {
                    for j2 in 1..=n {
                        let d1 = j1 as f64 - center.0 as f64;
                        let d2 = j2 as f64 - center.1 as f64;
                        if d1 * d1 + d2 * d2 <= nh * nh {
                            brute.push((j1, j2));
                        }
                    }
                }
                let mut got = window_indices_2d(n, h, center).unwrap();
                got.sort_unstable();
                brute.sort_unstable();
                assert_eq!(got, brute, "n={n} h={h} center={center:?}");
            }
        }
    }

    #[test]
    fn sample_step_phantom() {
        let f = Phantom1D::canonical_step();
        let s = f.sample(4).unwrap();
        assert_eq!(s.values(), &[0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn sample_constant_phantom() {
        let s = GridSample::from_fn_1d(9, |_| 0.5).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn sample_disc_phantom_center_inside() {
        let f = crate::phantoms::Phantom2D::canonical_disc();
        let s = f.sample(2).unwrap();
        // points (i/2, j/2): only (1/2, 1/2) is inside the radius-1/4 disc
        assert_eq!(s.values(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn add_noise_sigma_zero_is_identity() {
        let clean = GridSample::from_fn_1d(32, |x| x).unwrap();
        let out = add_noise(&clean, NoiseModel::Gaussian, 0.0, 42).unwrap();
        assert_eq!(clean, out);
    }

    #[test]
    fn add_noise_same_seed_same_output() {
        let clean = GridSample::constant(Dim::One, 64, 0.0).unwrap();
        let a = add_noise(&clean, NoiseModel::Laplace, 0.7, 9).unwrap();
        let b = add_noise(&clean, NoiseModel::Laplace, 0.7, 9).unwrap();
        assert_eq!(a, b);
        let c = add_noise(&clean, NoiseModel::Laplace, 0.7, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn add_noise_gaussian_law_of_large_numbers() {
        let n = 10_000;
        let clean = GridSample::constant(Dim::One, n, 0.0).unwrap();
        let noisy = add_noise(&clean, NoiseModel::Gaussian, 1.0, 2024).unwrap();
        let mean: f64 = noisy.values().iter().sum::<f64>() / n as f64;
        let var: f64 = noisy.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (n as f64 - 1.0);
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn add_noise_rejects_negative_sigma() {
        let clean = GridSample::constant(Dim::One, 4, 0.0).unwrap();
        assert!(add_noise(&clean, NoiseModel::Gaussian, -1.0, 0).is_err());
    }

    #[test]
    fn grid_sample_validates_shape_and_finiteness() {
        assert!(GridSample::new(Dim::One, 4, vec![0.0; 3]).is_err());
        assert!(GridSample::new(Dim::Two, 3, vec![0.0; 9]).is_ok());
        assert!(GridSample::new(Dim::One, 2, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = GridSample::new(Dim::One, 3, vec![0.1, -2.5e-17, 3.0]).unwrap();
        let back = GridSample::from_csv_str(&s.to_csv()).unwrap();
        assert_eq!(s, back);

        let t = GridSample::from_fn_2d(5, |x, y| (x * 37.0).sin() * y).unwrap();
        let back = GridSample::from_csv_str(&t.to_csv()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(GridSample::from_csv_str("").is_err());
        assert!(GridSample::from_csv_str("dim,n\n3,4\n").is_err());
        assert!(GridSample::from_csv_str("dim,n\n1,2\n0.5\nxyz\n").is_err());
    }
}
