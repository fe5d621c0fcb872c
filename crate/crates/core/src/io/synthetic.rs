//! Small synthetic classification tasks.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Example, FullyLabeledDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticKind {
    /// Two isotropic Gaussians centered at (±2, 0).
    Blobs,
    /// Two interleaved half-circles.
    Moons,
    /// Four Gaussian clusters at (±1, ±1), opposite corners sharing a class.
    Xor,
}

impl FromStr for SyntheticKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blobs" => Ok(SyntheticKind::Blobs),
            "moons" => Ok(SyntheticKind::Moons),
            "xor" => Ok(SyntheticKind::Xor),
            _ => Err(Error::InvalidConfig(format!("unknown synthetic kind '{s}'"))),
        }
    }
}

fn check(n_per_class: usize, noise: f64) -> Result<Normal<f64>> {
    if n_per_class == 0 {
        return Err(Error::InvalidConfig("n_per_class must be at least 1".into()));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise must be nonnegative, got {noise}")));
    }
    Ok(Normal::new(0.0, noise).expect("valid normal"))
}

/// Gaussian clusters, one per center; class `k` is drawn around `centers[k]`.
/// Examples are interleaved by class and numbered from 0.
pub fn generate_blobs(centers: &[Vec<f64>], n_per_class: usize, noise: f64, seed: u64) -> Result<FullyLabeledDataset> {
    let normal = check(n_per_class, noise)?;
    if centers.len() < 2 {
        return Err(Error::InvalidConfig("blobs need at least two centers".into()));
    }
    let dim = centers[0].len();
    if dim == 0 || centers.iter().any(|c| c.len() != dim) {
        return Err(Error::InvalidConfig("centers must share a positive dimension".into()));
    }
    let mut g = rng::stream(seed, rng::DATA, 0);
    let mut examples = Vec::with_capacity(n_per_class * centers.len());
    for i in 0..n_per_class {
        for (y, c) in centers.iter().enumerate() {
            let x = c.iter().map(|m| m + normal.sample(&mut g)).collect();
            examples.push(Example { id: (i * centers.len() + y) as u64, x, y });
        }
    }
    FullyLabeledDataset::new(examples, centers.len(), dim)
}

pub fn generate_synthetic(
    kind: SyntheticKind,
    n_per_class: usize,
    noise: f64,
    seed: u64,
) -> Result<FullyLabeledDataset> {
    match kind {
        SyntheticKind::Blobs => generate_blobs(&[vec![-2.0, 0.0], vec![2.0, 0.0]], n_per_class, noise, seed),
        SyntheticKind::Moons => {
            let normal = check(n_per_class, noise)?;
            let mut g = rng::stream(seed, rng::DATA, 0);
            let mut examples = Vec::with_capacity(2 * n_per_class);
            let denom = (n_per_class.max(2) - 1) as f64;
            for i in 0..n_per_class {
                let t = PI * i as f64 / denom;
                let outer = [t.cos(), t.sin()];
                let inner = [1.0 - t.cos(), 0.5 - t.sin()];
                for (y, p) in [outer, inner].iter().enumerate() {
                    let x = p.iter().map(|v| v + normal.sample(&mut g)).collect();
                    examples.push(Example { id: (2 * i + y) as u64, x, y });
                }
            }
            FullyLabeledDataset::new(examples, 2, 2)
        }
        SyntheticKind::Xor => {
            let normal = check(n_per_class, noise)?;
            let mut g = rng::stream(seed, rng::DATA, 0);
            let corners = [[[1.0, 1.0], [-1.0, -1.0]], [[1.0, -1.0], [-1.0, 1.0]]];
            let mut examples = Vec::with_capacity(2 * n_per_class);
            for i in 0..n_per_class {
                for (y, pair) in corners.iter().enumerate() {
                    let c = pair[g.random_range(0..2)];
                    let x = c.iter().map(|v| v + normal.sample(&mut g)).collect();
                    examples.push(Example { id: (2 * i + y) as u64, x, y });
                }
            }
            FullyLabeledDataset::new(examples, 2, 2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        for kind in [SyntheticKind::Blobs, SyntheticKind::Moons, SyntheticKind::Xor] {
            let a = generate_synthetic(kind, 50, 0.2, 3).unwrap();
            assert_eq!(a, generate_synthetic(kind, 50, 0.2, 3).unwrap());
            assert_ne!(a, generate_synthetic(kind, 50, 0.2, 4).unwrap());
            assert_eq!(a.len(), 100);
            assert_eq!(crate::data::class_histogram(&a).values().copied().collect::<Vec<_>>(), vec![50, 50]);
        }
        assert!(generate_synthetic(SyntheticKind::Blobs, 0, 0.1, 0).is_err());
        assert!(generate_synthetic(SyntheticKind::Blobs, 3, -0.1, 0).is_err());
    }
}
