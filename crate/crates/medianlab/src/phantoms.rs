//! Exactly evaluable piecewise-Lipschitz test functions.
//!
//! 1-D phantoms are Lipschitz pieces between sorted breakpoints in (0,1);
//! 2-D phantoms are a pair of Lipschitz fields separated by a closed curve
//! complex. Pieces and fields are affine maps clamped to [0,1], so the
//! Lipschitz constant is the slope norm and evaluation is exact.
//!
//! Convention at a discontinuity: the value comes from the piece on the
//! right (equivalently, regions are closed on their lower-x side), so the
//! canonical step is the indicator of the closed interval [1/2, 1] and
//! `f(1/2) = 1`. The canonical disc is likewise closed.

use crate::error::{domain, Result};
use crate::geometry::{Complex, Curve};
use crate::grid::{window_indices_1d, window_indices_2d, Dim, GridSample};
use crate::rng::{self, open01};

/// Window statistics around a grid index relative to a phantom's
/// discontinuity set: `rho` is the fraction of window points on the same
/// side as the center, `p = 1/(2·rho)` clamped to `[1/2, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct GoodFraction {
    pub rho: f64,
    pub p: f64,
}

fn good_fraction_from_count(same: usize, total: usize) -> GoodFraction {
    let rho = same as f64 / total as f64;
    GoodFraction {
        rho,
        p: (1.0 / (2.0 * rho)).clamp(0.5, 1.0 - 1e-12),
    }
}

/// One Lipschitz piece: an affine map anchored at the piece's left edge,
/// clamped to [0,1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffinePiece {
    pub left_value: f64,
    pub slope: f64,
}

impl AffinePiece {
    fn eval(&self, x: f64, left_edge: f64) -> f64 {
        (self.left_value + self.slope * (x - left_edge)).clamp(0.0, 1.0)
    }
}

/// A 1-D piecewise-Lipschitz phantom with at most `N` breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct Phantom1D {
    breakpoints: Vec<f64>,
    pieces: Vec<AffinePiece>,
    eta: f64,
    beta: f64,
}

impl Phantom1D {
    pub fn new(
        breakpoints: Vec<f64>,
        pieces: Vec<AffinePiece>,
        eta: f64,
        beta: f64,
    ) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(domain(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain("breakpoints must be strictly increasing"));
        }
        if breakpoints.iter().any(|&x| x <= 0.0 || x >= 1.0) {
            return Err(domain("breakpoints must lie strictly inside (0,1)"));
        }
        if eta < 0.0 || beta < 0.0 {
            return Err(domain("eta and beta must be nonnegative"));
        }
        if eta > 0.0 {
            for &x in &breakpoints {
                if x < eta || 1.0 - x < eta {
                    return Err(domain(format!("breakpoint {x} closer than {eta} to the boundary")));
                }
            }
            if breakpoints.windows(2).any(|w| w[1] - w[0] < eta) {
                return Err(domain("breakpoints closer together than the separation"));
            }
        }
        for p in &pieces {
            if p.slope.abs() > beta {
                return Err(domain(format!("piece slope {} exceeds beta {beta}", p.slope)));
            }
            if !(0.0..=1.0).contains(&p.left_value) {
                return Err(domain("piece values must start in [0,1]"));
            }
        }
        Ok(Phantom1D { breakpoints, pieces, eta, beta })
    }

    /// The canonical edge: the indicator of [1/2, 1].
    pub fn canonical_step() -> Phantom1D {
        Phantom1D::step_at(0.5).expect("canonical step is valid")
    }

    /// Indicator of the closed interval `[x, 1]`.
    pub fn step_at(x: f64) -> Result<Phantom1D> {
        Phantom1D::new(
            vec![x],
            vec![
                AffinePiece { left_value: 0.0, slope: 0.0 },
                AffinePiece { left_value: 1.0, slope: 0.0 },
            ],
            x.min(1.0 - x),
            0.0,
        )
    }

    /// Draw a phantom with `n_breaks` η-separated breakpoints and random
    /// affine pieces of slope at most `beta`.
    pub fn random(n_breaks: usize, beta: f64, eta: f64, seed: u64) -> Result<Phantom1D> {
        if n_breaks == 0 {
            return Err(domain("need at least one breakpoint"));
        }
        if eta < 0.0 || eta >= 1.0 / (2.0 * n_breaks as f64) {
            return Err(domain(format!(
                "separation {eta} infeasible for {n_breaks} breakpoints (need eta < 1/(2N))"
            )));
        }
        if beta < 0.0 {
            return Err(domain("beta must be nonnegative"));
        }
        let mut rng = rng::stream(seed);
        let slack = 1.0 - (n_breaks + 1) as f64 * eta;
        let breakpoints = loop {
            let mut u: Vec<f64> = (0..n_breaks).map(|_| open01(&mut rng)).collect();
            u.sort_by(f64::total_cmp);
            let bps: Vec<f64> = u
                .iter()
                .enumerate()
                .map(|(i, &v)| eta + i as f64 * eta + v * slack)
                .collect();
            if bps.windows(2).all(|w| w[1] > w[0]) {
                break bps;
            }
        };
        let pieces = (0..=n_breaks)
            .map(|_| AffinePiece {
                left_value: open01(&mut rng),
                slope: beta * (2.0 * open01(&mut rng) - 1.0),
            })
            .collect();
        Phantom1D::new(breakpoints, pieces, eta, beta)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Index of the piece owning `x`: breakpoints belong to the right piece.
    pub fn piece_index(&self, x: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let j = self.piece_index(x);
        let left_edge = if j == 0 { 0.0 } else { self.breakpoints[j - 1] };
        self.pieces[j].eval(x, left_edge)
    }

    pub fn sample(&self, n: usize) -> Result<GridSample> {
        GridSample::from_fn_1d(n, |x| self.eval(x))
    }

    /// Fraction of the window around `i` on the same piece as `i`.
    pub fn good_fraction(&self, n: usize, h: f64, i: usize) -> Result<GoodFraction> {
        let window = window_indices_1d(n, h, i)?;
        let side = self.piece_index(i as f64 / n as f64);
        let same = window
            .iter()
            .filter(|&&j| self.piece_index(j as f64 / n as f64) == side)
            .count();
        Ok(good_fraction_from_count(same, window.len()))
    }

    /// Sampled class-membership check: range, per-piece Lipschitz bound on
    /// 1000 random pairs per piece, and separation.
    pub fn validate(&self, seed: u64) -> Result<()> {
        let mut rng = rng::stream(seed);
        let mut edges = vec![0.0];
        edges.extend_from_slice(&self.breakpoints);
        edges.push(1.0);
        for (j, win) in edges.windows(2).enumerate() {
            let (lo, hi) = (win[0], win[1]);
            for _ in 0..1000 {
                let x = lo + (hi - lo) * open01(&mut rng);
                let y = lo + (hi - lo) * open01(&mut rng);
                let fx = self.eval(x);
                let fy = self.eval(y);
                if !(0.0..=1.0).contains(&fx) {
                    return Err(domain(format!("value {fx} outside [0,1] at x={x}")));
                }
                if (fx - fy).abs() > self.beta * (x - y).abs() + 1e-12 {
                    return Err(domain(format!(
                        "piece {j} violates the Lipschitz bound between {x} and {y}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A clamped affine field on the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Field {
    pub base: f64,
    pub grad: [f64; 2],
    pub anchor: [f64; 2],
}

impl Field {
    pub const fn constant(v: f64) -> Field {
        Field { base: v, grad: [0.0, 0.0], anchor: [0.0, 0.0] }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.base + self.grad[0] * (x - self.anchor[0]) + self.grad[1] * (y - self.anchor[1]))
            .clamp(0.0, 1.0)
    }

    pub fn lipschitz(&self) -> f64 {
        (self.grad[0] * self.grad[0] + self.grad[1] * self.grad[1]).sqrt()
    }
}

/// Membership test for the region enclosed by the discontinuity set.
///
/// Canonical shapes use exact analytic tests; general complexes fall back
/// to ray casting against the polyline caches.
#[derive(Clone, Debug, PartialEq)]
enum Region {
    Disc { center: [f64; 2], radius: f64 },
    AxisSquare { center: [f64; 2], half: f64 },
    Curves,
}

/// A 2-D cartoon phantom: one Lipschitz field inside the complex, another
/// outside, with declared class parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Phantom2D {
    complex: Complex,
    region: Region,
    inside: Field,
    outside: Field,
    pub lambda: f64,
    pub beta: f64,
    pub eta: f64,
    pub kappa: f64,
    pub theta: f64,
    /// Set when the complex is only rectifiable (corners), not C²; such
    /// phantoms serve linear-filter checks but not the separated classes.
    pub cplip_only: bool,
}

impl Phantom2D {
    /// Indicator of the closed disc of radius 1/4 centered at (1/2, 1/2).
    pub fn canonical_disc() -> Phantom2D {
        Phantom2D {
            complex: Complex::canonical_circle(),
            region: Region::Disc { center: [0.5, 0.5], radius: 0.25 },
            inside: Field::constant(1.0),
            outside: Field::constant(0.0),
            lambda: std::f64::consts::FRAC_PI_2,
            beta: 0.0,
            eta: 0.25,
            kappa: 4.0,
            theta: std::f64::consts::FRAC_PI_2,
            cplip_only: false,
        }
    }

    /// Indicator of the axis-aligned square of side `zeta_side` centered at
    /// (1/2, 1/2). The boundary has corners, so the phantom is flagged
    /// `cplip_only` and kept out of the separated-class experiments.
    pub fn canonical_square(zeta_side: f64) -> Result<Phantom2D> {
        if !(zeta_side > 0.0 && zeta_side < 0.5) {
            return Err(domain(format!(
                "square side must lie in (0, 1/2), got {zeta_side}"
            )));
        }
        let half = zeta_side / 2.0;
        let corners = [
            [0.5 - half, 0.5 - half],
            [0.5 - half, 0.5 + half],
            [0.5 + half, 0.5 + half],
            [0.5 + half, 0.5 - half],
        ];
        let boundary = Curve::from_polyline(&corners)?;
        let eta = 0.5 - half;
        Ok(Phantom2D {
            complex: Complex::new(vec![boundary], eta)?,
            region: Region::AxisSquare { center: [0.5, 0.5], half },
            inside: Field::constant(1.0),
            outside: Field::constant(0.0),
            lambda: 4.0 * zeta_side,
            beta: 0.0,
            eta,
            kappa: f64::INFINITY,
            theta: 2.0,
            cplip_only: true,
        })
    }

    /// Wrap an arbitrary complex with two Lipschitz fields; the inside is
    /// decided by ray casting against the polyline caches (points enclosed
    /// by an odd number of curves).
    pub fn from_complex(
        complex: Complex,
        inside: Field,
        outside: Field,
        beta: f64,
    ) -> Result<Phantom2D> {
        if inside.lipschitz() > beta || outside.lipschitz() > beta {
            return Err(domain("field gradients exceed the requested beta"));
        }
        let lambda = complex.curves().iter().map(Curve::length).sum();
        let kappa = complex.curves().iter().map(Curve::kappa).fold(0.0, f64::max);
        let theta = complex.curves().iter().map(Curve::theta).fold(0.0, f64::max);
        let eta = complex.eta();
        Ok(Phantom2D {
            complex,
            region: Region::Curves,
            inside,
            outside,
            lambda,
            beta,
            eta,
            kappa,
            theta,
            cplip_only: false,
        })
    }

    /// Draw a random disc phantom: radius in [0.15, 0.3], center keeping
    /// 0.1 clearance, and affine fields with gradient norm at most 1.
    pub fn random(seed: u64) -> Phantom2D {
        let mut rng = rng::stream(seed);
        let radius = 0.15 + 0.15 * open01(&mut rng);
        let margin = radius + 0.1;
        let cx = margin + (1.0 - 2.0 * margin) * open01(&mut rng);
        let cy = margin + (1.0 - 2.0 * margin) * open01(&mut rng);
        let beta = 1.0;
        let scale = beta / std::f64::consts::SQRT_2;
        let field = |rng: &mut crate::rng::Stream| Field {
            base: open01(rng),
            grad: [
                scale * (2.0 * open01(rng) - 1.0),
                scale * (2.0 * open01(rng) - 1.0),
            ],
            anchor: [cx, cy],
        };
        let inside = field(&mut rng);
        let outside = field(&mut rng);
        Phantom2D {
            complex: Complex::new(vec![Curve::circle([cx, cy], radius)], 0.1)
                .expect("random disc respects its clearance"),
            region: Region::Disc { center: [cx, cy], radius },
            inside,
            outside,
            lambda: 2.0 * std::f64::consts::PI * radius,
            beta,
            eta: 0.1,
            kappa: 1.0 / radius,
            theta: std::f64::consts::FRAC_PI_2,
            cplip_only: false,
        }
    }

    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    pub fn is_inside(&self, x: f64, y: f64) -> bool {
        match &self.region {
            Region::Disc { center, radius } => {
                let dx = x - center[0];
                let dy = y - center[1];
                dx * dx + dy * dy <= radius * radius
            }
            Region::AxisSquare { center, half } => {
                (x - center[0]).abs() <= *half && (y - center[1]).abs() <= *half
            }
            Region::Curves => {
                let mut inside = false;
                for c in self.complex.curves() {
                    if c.contains([x, y]) {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        if self.is_inside(x, y) {
            self.inside.eval(x, y)
        } else {
            self.outside.eval(x, y)
        }
    }

    pub fn sample(&self, n: usize) -> Result<GridSample> {
        GridSample::from_fn_2d(n, |x, y| self.eval(x, y))
    }

    /// Fraction of the window around `i` on the same side of the complex.
    pub fn good_fraction(&self, n: usize, h: f64, i: (usize, usize)) -> Result<GoodFraction> {
        let window = window_indices_2d(n, h, i)?;
        let nf = n as f64;
        let side = self.is_inside(i.0 as f64 / nf, i.1 as f64 / nf);
        let same = window
            .iter()
            .filter(|&&(j1, j2)| self.is_inside(j1 as f64 / nf, j2 as f64 / nf) == side)
            .count();
        Ok(good_fraction_from_count(same, window.len()))
    }

    /// Sampled class-membership check: complex invariants, range, and the
    /// per-region Lipschitz bound on 1000 random same-side pairs.
    pub fn validate(&self, seed: u64) -> Result<()> {
        if !self.cplip_only {
            self.complex.validate()?;
        }
        if self.inside.lipschitz() > self.beta + 1e-12
            || self.outside.lipschitz() > self.beta + 1e-12
        {
            return Err(domain("field gradient exceeds the declared beta"));
        }
        let mut rng = rng::stream(seed);
        let mut checked = 0;
        while checked < 1000 {
            let (x1, y1) = (open01(&mut rng), open01(&mut rng));
            let (x2, y2) = (open01(&mut rng), open01(&mut rng));
            if self.is_inside(x1, y1) != self.is_inside(x2, y2) {
                continue;
            }
            checked += 1;
            let d = ((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2)).sqrt();
            let df = (self.eval(x1, y1) - self.eval(x2, y2)).abs();
            let f = self.eval(x1, y1);
            if !(0.0..=1.0).contains(&f) {
                return Err(domain(format!("value {f} outside [0,1]")));
            }
            if df > self.beta * d + 1e-12 {
                return Err(domain(format!(
                    "Lipschitz bound violated between ({x1},{y1}) and ({x2},{y2})"
                )));
            }
        }
        Ok(())
    }
}

/// A named phantom of either dimension, as selected on a command line.
#[derive(Clone, Debug, PartialEq)]
pub enum Phantom {
    One(Phantom1D),
    Two(Phantom2D),
}

impl Phantom {
    /// Resolve `step | disc | square | random1d:<seed> | random2d:<seed>`.
    ///
    /// Random 1-D phantoms use two breakpoints, slope bound 1, separation
    /// 0.1; random 2-D phantoms are discs with affine fields.
    pub fn from_name(name: &str) -> Result<Phantom> {
        let name = name.trim();
        if let Some(seed) = name.strip_prefix("random1d:") {
            let seed: u64 = seed
                .parse()
                .map_err(|_| domain(format!("bad seed in phantom name '{name}'")))?;
            return Ok(Phantom::One(Phantom1D::random(2, 1.0, 0.1, seed)?));
        }
        if let Some(seed) = name.strip_prefix("random2d:") {
            let seed: u64 = seed
                .parse()
                .map_err(|_| domain(format!("bad seed in phantom name '{name}'")))?;
            return Ok(Phantom::Two(Phantom2D::random(seed)));
        }
        match name {
            "step" => Ok(Phantom::One(Phantom1D::canonical_step())),
            "disc" => Ok(Phantom::Two(Phantom2D::canonical_disc())),
            "square" => Ok(Phantom::Two(Phantom2D::canonical_square(0.25)?)),
            other => Err(domain(format!(
                "unknown phantom '{other}' (expected step|disc|square|random1d:<seed>|random2d:<seed>)"
            ))),
        }
    }

    pub fn dim(&self) -> Dim {
        match self {
            Phantom::One(_) => Dim::One,
            Phantom::Two(_) => Dim::Two,
        }
    }

    pub fn sample(&self, n: usize) -> Result<GridSample> {
        match self {
            Phantom::One(f) => f.sample(n),
            Phantom::Two(f) => f.sample(n),
        }
    }
}

/// Sample a phantom on the `n`-grid (noiseless truth values).
pub fn sample_phantom(phantom: &Phantom, n: usize) -> Result<GridSample> {
    phantom.sample(n)
}
