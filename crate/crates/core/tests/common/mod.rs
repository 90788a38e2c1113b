#![allow(dead_code)]

use adaptive_observer::lti::{realize_observable_canonical, SystemRealization, TransferFunctionSpec};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Monic polynomial coefficients (highest power first, leading 1 dropped)
/// of `Π (s - root)`, with complex roots given as conjugate pairs `(re, im)`.
pub fn poly_from_roots(real: &[f64], pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut c = vec![1.0];
    let mul = |c: &Vec<f64>, f: &[f64]| {
        let mut out = vec![0.0; c.len() + f.len() - 1];
        for (i, a) in c.iter().enumerate() {
            for (j, b) in f.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    };
    for r in real {
        c = mul(&c, &[1.0, -r]);
    }
    for (re, im) in pairs {
        c = mul(&c, &[1.0, -2.0 * re, re * re + im * im]);
    }
    c[1..].to_vec()
}

/// Random root set of the given degree, all with modulus below `radius`.
pub fn random_roots<R: Rng>(rng: &mut R, degree: usize, radius: f64) -> (Vec<f64>, Vec<(f64, f64)>) {
    let mut real = Vec::new();
    let mut pairs = Vec::new();
    let mut left = degree;
    while left > 0 {
        if left >= 2 && rng.random_bool(0.4) {
            let rho = rng.random_range(0.05..radius);
            let th = rng.random_range(0.1..3.0);
            pairs.push((rho * f64::cos(th), rho * f64::sin(th)));
            left -= 2;
        } else {
            real.push(rng.random_range(-radius..radius));
            left -= 1;
        }
    }
    (real, pairs)
}

/// `s^r + a_1 s^{r-1} + ... + a_r` coefficients with every root inside `radius`.
pub fn random_stable_coeffs<R: Rng>(rng: &mut R, degree: usize, radius: f64) -> Vec<f64> {
    let (real, pairs) = random_roots(rng, degree, radius);
    poly_from_roots(&real, &pairs)
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

pub fn random_vector<R: Rng>(rng: &mut R, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-scale..scale))
}

/// Random symmetric positive definite matrix with eigenvalues at least `floor`.
pub fn random_spd<R: Rng>(rng: &mut R, dim: usize, floor: f64) -> DMatrix<f64> {
    let a = random_matrix(rng, dim, dim, 1.0);
    &a * a.transpose() + DMatrix::identity(dim, dim) * floor
}

pub struct RandomPlant {
    pub plant: SystemRealization,
    pub f_vec: Vec<f64>,
}

/// Schur-stable plant with `q, m <= 2`, `r <= 3` and a stable filter of the
/// same order.
pub fn random_stable_plant<R: Rng>(rng: &mut R) -> RandomPlant {
    let q = rng.random_range(1..=2);
    let m = rng.random_range(1..=2);
    let r = rng.random_range(1..=3);
    let a_coeffs = random_stable_coeffs(rng, r, 0.85);
    let numerators = (0..r).map(|_| random_matrix(rng, q, m, 1.0)).collect();
    let tf = TransferFunctionSpec::new(a_coeffs, numerators).unwrap();
    let plant = realize_observable_canonical(&tf);
    let f_vec = random_stable_coeffs(rng, r, 0.6).iter().map(|c| -c).collect();
    RandomPlant { plant, f_vec }
}
