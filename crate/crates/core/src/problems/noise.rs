//! Additive Gaussian noise at an exact relative level.

use crate::error::{Error, Result};
use crate::linops::vector::diagnostic_norm;
use crate::rng::{gaussian_vec, rng_from_seed};
use crate::scalar::Scalar;

/// Returns `(b, e)` with `e = level·‖b_clean‖·g/‖g‖` for seeded standard
/// normal `g`, so `‖e‖/‖b_clean‖ = level` up to rounding.
pub fn add_noise<T: Scalar>(b_clean: &[T], level: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !level.is_finite() || level < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "noise level must be finite and nonnegative, got {level}"
        )));
    }
    if level == 0.0 {
        return Ok((b_clean.to_vec(), vec![T::zero(); b_clean.len()]));
    }
    let bn = diagnostic_norm(b_clean);
    if bn == T::zero() {
        return Err(Error::InvalidArgument(
            "relative noise level is undefined for zero data".into(),
        ));
    }
    let g: Vec<T> = gaussian_vec(&mut rng_from_seed(seed), b_clean.len());
    let factor = T::lit(level) * bn / diagnostic_norm(&g);
    let e: Vec<T> = g.iter().map(|&v| v * factor).collect();
    let b = b_clean.iter().zip(&e).map(|(&x, &y)| x + y).collect();
    Ok((b, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_level_is_identity() {
        let b = vec![1.0, -2.0, 3.0];
        let (bn, e) = add_noise(&b, 0.0, 4).unwrap();
        assert_eq!(bn, b);
        assert!(e.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn level_is_exact() {
        let b: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin() + 2.0).collect();
        let (_, e) = add_noise(&b, 0.01, 17).unwrap();
        let rel = diagnostic_norm(&e) / diagnostic_norm(&b);
        assert!((rel - 0.01).abs() < 1e-14);
    }

    #[test]
    fn seeded_and_checked() {
        let b = vec![1.0f64; 10];
        assert_eq!(add_noise(&b, 0.1, 3).unwrap(), add_noise(&b, 0.1, 3).unwrap());
        assert_ne!(add_noise(&b, 0.1, 3).unwrap().1, add_noise(&b, 0.1, 4).unwrap().1);
        assert!(add_noise(&[0.0f64; 4], 0.1, 3).is_err());
        assert!(add_noise(&b, -0.1, 3).is_err());
        assert!(add_noise(&b, f64::NAN, 3).is_err());
    }
}
