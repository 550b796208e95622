//! Seeded synthetic inverse problems `b = A·x_true + e`.

mod deblur;
mod image;
mod noise;
mod tomography;

pub use deblur::{deblur_phantom, Convolution2d, Kernel, Psf};
pub use image::Image;
pub use noise::add_noise;
pub use tomography::{trace_ray, tomography_phantom, Disc, ParallelBeam, Ray, TOMOGRAPHY_DISCS};

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::solvers::System;

const NOISE_STREAM: u64 = 0x6e6f697365;

/// An operator with observed data, the clean data it came from and the
/// ground truth when known. Immutable after construction.
pub struct Problem<T: Scalar> {
    operator: Box<dyn LinearOperator<T>>,
    b: Vec<T>,
    noise: Vec<T>,
    x_true: Option<Vec<T>>,
    noise_level: f64,
    seed: u64,
    image_shape: Option<(usize, usize)>,
}

impl<T: Scalar> Problem<T> {
    /// Builds `b = A·x_true + e` with `‖e‖ = noise_level·‖A·x_true‖`.
    pub fn from_truth(
        operator: Box<dyn LinearOperator<T>>,
        x_true: Vec<T>,
        noise_level: f64,
        seed: u64,
        image_shape: Option<(usize, usize)>,
    ) -> Result<Self> {
        let clean = operator.apply(&x_true)?;
        let (b, noise) = add_noise(&clean, noise_level, derive_seed(seed, NOISE_STREAM))?;
        Ok(Self {
            operator,
            b,
            noise,
            x_true: Some(x_true),
            noise_level,
            seed,
            image_shape,
        })
    }

    /// Wraps observed data with no known ground truth.
    pub fn from_data(operator: Box<dyn LinearOperator<T>>, b: Vec<T>) -> Result<Self> {
        crate::error::check_len("Problem data", operator.rows(), b.len())?;
        let noise = vec![T::zero(); b.len()];
        Ok(Self {
            operator,
            b,
            noise,
            x_true: None,
            noise_level: 0.0,
            seed: 0,
            image_shape: None,
        })
    }

    pub fn operator(&self) -> &dyn LinearOperator<T> {
        self.operator.as_ref()
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    /// The added noise vector `e`.
    pub fn noise(&self) -> &[T] {
        &self.noise
    }

    pub fn x_true(&self) -> Option<&[T]> {
        self.x_true.as_deref()
    }

    pub fn noise_level(&self) -> f64 {
        self.noise_level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `(width, height)` when unknowns are pixels of an image.
    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn rows(&self) -> usize {
        self.operator.rows()
    }

    pub fn cols(&self) -> usize {
        self.operator.cols()
    }

    /// The linear system with ground truth attached when known.
    pub fn system(&self) -> System<'_, T> {
        let sys = System::new(self.operator(), &self.b);
        match &self.x_true {
            Some(x) => sys.with_truth(x),
            None => sys,
        }
    }

    /// Interprets a solution vector as an image, if the problem has one.
    pub fn to_image(&self, x: &[T]) -> Option<Image> {
        let (w, h) = self.image_shape?;
        let px = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        Image::new(w, h, px).ok()
    }
}

impl<T: Scalar> std::fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("rows", &self.rows())
            .field("cols", &self.cols())
            .field("noise_level", &self.noise_level)
            .field("seed", &self.seed)
            .field("image_shape", &self.image_shape)
            .finish()
    }
}

fn image_to_vec<T: Scalar>(img: &Image) -> Vec<T> {
    img.pixels().iter().map(|&p| T::lit(p)).collect()
}

/// Deblurring of the procedural phantom with zero boundary conditions.
pub fn make_deblur<T: Scalar>(size: usize, psf: Psf, noise_level: f64, seed: u64) -> Result<Problem<T>> {
    if size < 8 {
        return Err(Error::InvalidArgument(format!("deblur size must be at least 8, got {size}")));
    }
    make_deblur_with_image(&deblur_phantom(size), psf, noise_level, seed)
}

/// Deblurring of a caller-supplied image.
pub fn make_deblur_with_image<T: Scalar>(
    image: &Image,
    psf: Psf,
    noise_level: f64,
    seed: u64,
) -> Result<Problem<T>> {
    let op = Convolution2d::<T>::new(image.height(), image.width(), psf.kernel()?)?;
    Problem::from_truth(
        Box::new(op),
        image_to_vec(image),
        noise_level,
        seed,
        Some((image.width(), image.height())),
    )
}

/// Parallel-beam tomography of the multi-disc phantom.
pub fn make_tomography<T: Scalar>(grid: usize, n_angles: usize, noise_level: f64, seed: u64) -> Result<Problem<T>> {
    if grid < 8 || n_angles < 2 {
        return Err(Error::InvalidArgument(format!(
            "tomography needs grid >= 8 and at least 2 angles, got grid {grid}, {n_angles} angles"
        )));
    }
    make_tomography_with_phantom(&tomography_phantom(grid), n_angles, noise_level, seed)
}

/// Parallel-beam tomography of a caller-supplied square phantom.
pub fn make_tomography_with_phantom<T: Scalar>(
    phantom: &Image,
    n_angles: usize,
    noise_level: f64,
    seed: u64,
) -> Result<Problem<T>> {
    if phantom.width() != phantom.height() {
        return Err(Error::InvalidArgument(format!(
            "tomography phantom must be square, got {}x{}",
            phantom.width(),
            phantom.height()
        )));
    }
    let geo = ParallelBeam::new(phantom.width(), n_angles)?;
    let a = geo.system_matrix::<T>()?;
    Problem::from_truth(
        Box::new(a),
        image_to_vec(phantom),
        noise_level,
        seed,
        Some((phantom.width(), phantom.height())),
    )
}
