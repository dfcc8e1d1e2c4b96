#![allow(dead_code)]

use std::collections::HashMap;

use levy_cumulants::bell::SubordinatedModel;
use levy_cumulants::providers::{JointCumulantProvider, UnivariateCumulants};
use levy_cumulants::MultiIndex;
use nalgebra::DMatrix;
use rand::Rng;

pub fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::new(v.to_vec())
}

/// |x - y| ≤ rel · max(|x|, |y|), with both zero counting as equal.
pub fn rel_err(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

pub fn random_ig<R: Rng>(rng: &mut R) -> UnivariateCumulants {
    UnivariateCumulants::inverse_gaussian(rng.random_range(0.2..2.0), rng.random_range(0.5..2.0)).unwrap()
}

pub fn random_base<R: Rng>(rng: &mut R, max_order: u32) -> UnivariateCumulants {
    match rng.random_range(0..3) {
        0 => UnivariateCumulants::gaussian(rng.random_range(-0.5..0.5), rng.random_range(0.1..1.5)).unwrap(),
        1 => random_ig(rng),
        _ => UnivariateCumulants::Table((0..max_order).map(|_| rng.random_range(-1.0..1.0)).collect()),
    }
}

pub fn random_clock<R: Rng>(rng: &mut R, d: usize, max_order: u32) -> JointCumulantProvider {
    match rng.random_range(0..3) {
        0 => JointCumulantProvider::Independent((0..d).map(|_| random_ig(rng)).collect()),
        1 => JointCumulantProvider::Comonotone { dim: d, base: random_ig(rng) },
        _ => {
            let values: HashMap<MultiIndex, f64> = MultiIndex::all_up_to(d, max_order)
                .into_iter()
                .map(|j| (j, rng.random_range(-1.0..1.0)))
                .collect();
            JointCumulantProvider::Tabulated { dim: d, max_order, values }
        }
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
}

/// `n, d ∈ {1, 2, 3}`, matrix entries in `[-1, 1]`, mixed base and clock families.
pub fn random_model<R: Rng>(rng: &mut R, max_order: u32) -> SubordinatedModel {
    let n = rng.random_range(1..=3);
    let d = rng.random_range(1..=3);
    let bases = (0..d).map(|_| random_base(rng, max_order)).collect();
    SubordinatedModel::new(random_matrix(rng, n, d), bases, random_clock(rng, d, max_order)).unwrap()
}

/// Same shape, Gaussian bases only.
pub fn random_brownian_model<R: Rng>(rng: &mut R, max_order: u32) -> SubordinatedModel {
    let n = rng.random_range(1..=3);
    let d = rng.random_range(1..=3);
    let bases = (0..d)
        .map(|_| UnivariateCumulants::gaussian(rng.random_range(-0.5..0.5), rng.random_range(0.1..1.5)).unwrap())
        .collect();
    SubordinatedModel::new(random_matrix(rng, n, d), bases, random_clock(rng, d, max_order)).unwrap()
}
