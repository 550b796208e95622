//! Parallel-beam tomography by exact ray tracing through a pixel grid.
//!
//! The grid covers `[-1, 1]²` with `grid × grid` square pixels, row 0 at the
//! top (`y = 1`) and column 0 at the left (`x = -1`); pixel `(row, col)` is
//! unknown `row·grid + col`. Projection angle `a` is `θ = π·a/n_angles` and
//! detector `d` sits at offset `s = −1 + (d + ½)·2/grid`. The ray is the line
//! through `s·(cos θ, sin θ)` with direction `(−sin θ, cos θ)`, and row
//! `a·grid + d` of the system matrix holds the chord length of that line in
//! each pixel.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linops::CsrMatrix;
use crate::problems::image::Image;
use crate::scalar::Scalar;

/// A ray as a point and unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: (f64, f64),
    pub direction: (f64, f64),
}

impl Ray {
    pub fn parallel(theta: f64, offset: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            origin: (offset * c, offset * s),
            direction: (-s, c),
        }
    }
}

/// Parallel-beam geometry over `[0, π)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParallelBeam {
    pub grid: usize,
    pub n_angles: usize,
}

impl ParallelBeam {
    pub fn new(grid: usize, n_angles: usize) -> Result<Self> {
        if grid == 0 || n_angles == 0 {
            return Err(Error::InvalidArgument(format!(
                "tomography needs a positive grid and angle count, got grid {grid}, {n_angles} angles"
            )));
        }
        Ok(Self { grid, n_angles })
    }

    pub fn detector_count(&self) -> usize {
        self.grid
    }

    pub fn ray_count(&self) -> usize {
        self.n_angles * self.detector_count()
    }

    pub fn angle(&self, a: usize) -> f64 {
        PI * a as f64 / self.n_angles as f64
    }

    pub fn offset(&self, d: usize) -> f64 {
        -1.0 + (d as f64 + 0.5) * 2.0 / self.detector_count() as f64
    }

    pub fn ray(&self, index: usize) -> Ray {
        let (a, d) = (index / self.detector_count(), index % self.detector_count());
        Ray::parallel(self.angle(a), self.offset(d))
    }

    /// The sparse `rays × pixels` system matrix.
    pub fn system_matrix<T: Scalar>(&self) -> Result<CsrMatrix<T>> {
        let mut triplets = Vec::new();
        for r in 0..self.ray_count() {
            for (pixel, len) in trace_ray(self.grid, self.ray(r)) {
                triplets.push((r, pixel, T::lit(len)));
            }
        }
        CsrMatrix::from_triplets(self.ray_count(), self.grid * self.grid, triplets)
    }
}

/// Pixels crossed by `ray` on a `grid × grid` tiling of `[-1, 1]²` and the
/// chord length in each, found by merging the ray's crossings with the
/// vertical and horizontal grid lines.
pub fn trace_ray(grid: usize, ray: Ray) -> Vec<(usize, f64)> {
    let h = 2.0 / grid as f64;
    let (ox, oy) = ray.origin;
    let (dx, dy) = ray.direction;
    let eps = 1e-12;

    let Some((t_min, t_max)) = clip_to_box(ox, oy, dx, dy) else {
        return Vec::new();
    };
    let mut ts = vec![t_min, t_max];
    for k in 0..=grid {
        let line = -1.0 + k as f64 * h;
        if dx.abs() > eps {
            let t = (line - ox) / dx;
            if t > t_min && t < t_max {
                ts.push(t);
            }
        }
        if dy.abs() > eps {
            let t = (line - oy) / dy;
            if t > t_min && t < t_max {
                ts.push(t);
            }
        }
    }
    ts.sort_by(f64::total_cmp);

    let mut out: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let len = w[1] - w[0];
        if len <= eps * h {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let (x, y) = (ox + tm * dx, oy + tm * dy);
        let col = (((x + 1.0) / h).floor() as isize).clamp(0, grid as isize - 1) as usize;
        let row = (((1.0 - y) / h).floor() as isize).clamp(0, grid as isize - 1) as usize;
        let pixel = row * grid + col;
        match out.last_mut() {
            Some((p, l)) if *p == pixel => *l += len,
            _ => out.push((pixel, len)),
        }
    }
    out
}

/// Parameter interval of the ray inside `[-1, 1]²`, if it has positive length.
fn clip_to_box(ox: f64, oy: f64, dx: f64, dy: f64) -> Option<(f64, f64)> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (o, d) in [(ox, dx), (oy, dy)] {
        if d.abs() <= 1e-12 {
            if !(-1.0..=1.0).contains(&o) {
                return None;
            }
        } else {
            let (a, b) = ((-1.0 - o) / d, (1.0 - o) / d);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    (hi > lo).then_some((lo, hi))
}

/// A disc `(cx, cy, radius, value)` in grid coordinates `[-1, 1]²`.
pub type Disc = (f64, f64, f64, f64);

/// Phantom discs; later discs overwrite earlier ones.
pub const TOMOGRAPHY_DISCS: [Disc; 5] = [
    (0.0, 0.0, 0.8, 0.3),
    (-0.3, 0.25, 0.25, 0.7),
    (0.35, 0.2, 0.18, 1.0),
    (0.1, -0.4, 0.2, 0.5),
    (-0.35, -0.35, 0.1, 0.9),
];

/// Piecewise-constant multi-disc phantom sampled at pixel centers.
pub fn tomography_phantom(grid: usize) -> Image {
    let h = 2.0 / grid as f64;
    let mut px = Vec::with_capacity(grid * grid);
    for row in 0..grid {
        for col in 0..grid {
            let x = -1.0 + (col as f64 + 0.5) * h;
            let y = 1.0 - (row as f64 + 0.5) * h;
            let mut val = 0.0;
            for &(cx, cy, r, v) in &TOMOGRAPHY_DISCS {
                if (x - cx).powi(2) + (y - cy).powi(2) <= r * r {
                    val = v;
                }
            }
            px.push(val);
        }
    }
    Image::new(grid, grid, px).expect("phantom dimensions")
}
