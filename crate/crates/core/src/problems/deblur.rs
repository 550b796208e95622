//! Two-dimensional deblurring with a zero-boundary convolution operator.

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::problems::image::Image;
use crate::scalar::Scalar;

/// Point spread function families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Psf {
    /// Isotropic Gaussian with standard deviation `sigma` pixels, truncated at
    /// radius `ceil(3σ)`. `sigma = 0` is the delta kernel.
    Gaussian { sigma: f64 },
    /// Uniform linear motion of `length` pixels at `angle` degrees
    /// (counterclockwise from the image x-axis).
    Motion { length: f64, angle: f64 },
}

/// A normalized PSF kernel stored row-major with its center pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    pub height: usize,
    pub width: usize,
    pub center: (usize, usize),
    pub weights: Vec<f64>,
}

impl Kernel {
    pub fn get(&self, p: usize, q: usize) -> f64 {
        self.weights[p * self.width + q]
    }
}

impl Psf {
    /// Builds the unit-mass kernel.
    pub fn kernel(&self) -> Result<Kernel> {
        match *self {
            Psf::Gaussian { sigma } => {
                if !sigma.is_finite() || sigma < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "gaussian sigma must be finite and nonnegative, got {sigma}"
                    )));
                }
                let r = (3.0 * sigma).ceil() as usize;
                let size = 2 * r + 1;
                let mut w = vec![0.0; size * size];
                if r == 0 {
                    w[0] = 1.0;
                } else {
                    for p in 0..size {
                        for q in 0..size {
                            let dy = p as f64 - r as f64;
                            let dx = q as f64 - r as f64;
                            w[p * size + q] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
                        }
                    }
                }
                Ok(normalized(size, size, (r, r), w))
            }
            Psf::Motion { length, angle } => {
                if !length.is_finite() || length < 1.0 || !angle.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "motion blur needs finite length >= 1 and finite angle, got length {length}, angle {angle}"
                    )));
                }
                // Points spread uniformly along the segment, each splatted
                // bilinearly onto the grid.
                let r = (length / 2.0).ceil() as usize + 1;
                let size = 2 * r + 1;
                let samples = 2 * (length.ceil() as usize) + 1;
                let (s, c) = angle.to_radians().sin_cos();
                let mut w = vec![0.0; size * size];
                for i in 0..samples {
                    let t = length * (i as f64 / (samples - 1) as f64 - 0.5);
                    let x = r as f64 + t * c;
                    let y = r as f64 - t * s;
                    let (x0, y0) = (x.floor(), y.floor());
                    let (fx, fy) = (x - x0, y - y0);
                    let (q, p) = (x0 as usize, y0 as usize);
                    for (dp, wy) in [(0, 1.0 - fy), (1, fy)] {
                        for (dq, wx) in [(0, 1.0 - fx), (1, fx)] {
                            if wx * wy > 0.0 {
                                w[(p + dp) * size + q + dq] += wx * wy;
                            }
                        }
                    }
                }
                Ok(normalized(size, size, (r, r), w))
            }
        }
    }
}

fn normalized(height: usize, width: usize, center: (usize, usize), mut weights: Vec<f64>) -> Kernel {
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Kernel {
        height,
        width,
        center,
        weights,
    }
}

/// `y(i, j) = Σ K(p, q)·x(i − p + cᵢ, j − q + cⱼ)` with zero outside the
/// image, on row-major `height × width` images. The transpose is the matching
/// correlation.
#[derive(Clone, Debug)]
pub struct Convolution2d<T> {
    height: usize,
    width: usize,
    kernel: Kernel,
    weights: Vec<T>,
}

impl<T: Scalar> Convolution2d<T> {
    pub fn new(height: usize, width: usize, kernel: Kernel) -> Result<Self> {
        if kernel.height >= height || kernel.width >= width {
            return Err(Error::InvalidArgument(format!(
                "PSF support {}x{} must be smaller than the {}x{} image",
                kernel.height, kernel.width, height, width
            )));
        }
        let weights = kernel.weights.iter().map(|&w| T::lit(w)).collect();
        Ok(Self {
            height,
            width,
            kernel,
            weights,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Visits every `(output, input, weight)` triple with both pixels inside
    /// the image.
    fn for_each_tap(&self, mut f: impl FnMut(usize, usize, T)) {
        let (h, w) = (self.height as isize, self.width as isize);
        let (ci, cj) = (self.kernel.center.0 as isize, self.kernel.center.1 as isize);
        for p in 0..self.kernel.height {
            for q in 0..self.kernel.width {
                let wt = self.weights[p * self.kernel.width + q];
                if wt == T::zero() {
                    continue;
                }
                let (di, dj) = (p as isize - ci, q as isize - cj);
                let i_lo = di.max(0);
                let i_hi = (h + di).min(h);
                let j_lo = dj.max(0);
                let j_hi = (w + dj).min(w);
                for i in i_lo..i_hi {
                    let out_row = (i * w) as usize;
                    let in_row = ((i - di) * w) as usize;
                    for j in j_lo..j_hi {
                        f(out_row + j as usize, in_row + (j - dj) as usize, wt);
                    }
                }
            }
        }
    }
}

impl<T: Scalar> LinearOperator<T> for Convolution2d<T> {
    fn rows(&self) -> usize {
        self.height * self.width
    }

    fn cols(&self) -> usize {
        self.height * self.width
    }

    fn apply_into(&self, x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        self.for_each_tap(|o, i, w| y[o] += w * x[i]);
    }

    fn apply_transpose_into(&self, y: &[T], x: &mut [T]) {
        x.iter_mut().for_each(|v| *v = T::zero());
        self.for_each_tap(|o, i, w| x[i] += w * y[o]);
    }
}

/// Procedural test image on the unit square, with `u = (col + ½)/size`
/// (left to right) and `v = (row + ½)/size` (top to bottom):
///
/// * background `0.15 + 0.25·u`;
/// * rectangle `u ∈ [0.15, 0.45]`, `v ∈ [0.20, 0.70]` set to `0.8`;
/// * disc at `(0.70, 0.35)`, radius `0.17`, set to `1.0`;
/// * disc at `(0.65, 0.75)`, radius `0.12`, profile `0.45 + 0.3·(1 − d²/0.12²)`;
/// * disc at `(0.30, 0.85)`, radius `0.06`, set to `0.95`.
///
/// Later shapes overwrite earlier ones.
pub fn deblur_phantom(size: usize) -> Image {
    let mut px = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let u = (col as f64 + 0.5) / size as f64;
            let v = (row as f64 + 0.5) / size as f64;
            let d2 = |cu: f64, cv: f64| (u - cu).powi(2) + (v - cv).powi(2);
            let mut val = 0.15 + 0.25 * u;
            if (0.15..=0.45).contains(&u) && (0.20..=0.70).contains(&v) {
                val = 0.8;
            }
            if d2(0.70, 0.35) <= 0.17 * 0.17 {
                val = 1.0;
            }
            let dd = d2(0.65, 0.75);
            if dd <= 0.12 * 0.12 {
                val = 0.45 + 0.3 * (1.0 - dd / (0.12 * 0.12));
            }
            if d2(0.30, 0.85) <= 0.06 * 0.06 {
                val = 0.95;
            }
            px.push(val);
        }
    }
    Image::new(size, size, px).expect("phantom dimensions")
}
