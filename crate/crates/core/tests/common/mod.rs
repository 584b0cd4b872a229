//! Independent oracles shared by the integration tests: Gauss-Legendre
//! quadrature and exact rational versions of the transfer matrices.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num::{BigInt, BigRational, One, Zero};

/// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        let k = i.max(j) as f64;
        if i.abs_diff(j) == 1 {
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss-Legendre rule over `[a, b]` split into `panels`.
pub struct Quadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Quadrature {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let h = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * h * xi);
                weights.push(0.5 * h * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let terms = self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x));
        roughness::numeric::compensated_sum(terms)
    }

    /// `∫ f(r) 2πr dr`, the transverse-plane integral of a radial function.
    pub fn integrate_plane<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.integrate(|r| 2.0 * std::f64::consts::PI * r * f(r))
    }

    pub fn integrate_complex<F: Fn(f64) -> nalgebra::Complex<f64>>(&self, f: F) -> nalgebra::Complex<f64> {
        let re = self.integrate(|x| f(x).re);
        let im = self.integrate(|x| f(x).im);
        nalgebra::Complex::new(re, im)
    }
}

/// Radial rule over `[0, r_max]` fine enough for Gaussians of width ≳ 0.5.
pub fn radial(r_max: f64) -> Quadrature {
    Quadrature::new(0.0, r_max, 64, 20)
}

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int_factorial(n: usize) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn int_binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    int_factorial(n) / (int_factorial(k) * int_factorial(n - k))
}

fn rpow(x: &BigRational, e: i64) -> BigRational {
    let mut acc = BigRational::one();
    let base = if e >= 0 { x.clone() } else { x.recip() };
    for _ in 0..e.unsigned_abs() {
        acc *= base.clone();
    }
    acc
}

fn sign(e: usize) -> BigRational {
    if e.is_multiple_of(2) {
        BigRational::one()
    } else {
        -BigRational::one()
    }
}

/// `C_ij = i!/2^i binom(i,j) / z_R^{2j}` with unit waist.
pub fn exact_c(order: usize, zr: &BigRational) -> Vec<Vec<BigRational>> {
    (0..=order)
        .map(|i| {
            (0..=order)
                .map(|j| {
                    BigRational::from_integer(int_factorial(i) * int_binomial(i, j))
                        * rpow(&rational(1, 2), i as i64)
                        * rpow(zr, -2 * j as i64)
                })
                .collect()
        })
        .collect()
}

/// `[C⁻¹]_ij = (−1)^{i−j} binom(i,j) 2^j / j! · z_R^{2i}`.
pub fn exact_c_inverse(order: usize, zr: &BigRational) -> Vec<Vec<BigRational>> {
    (0..=order)
        .map(|i| {
            (0..=order)
                .map(|j| {
                    if j > i {
                        return BigRational::zero();
                    }
                    sign(i - j)
                        * BigRational::new(int_binomial(i, j) * BigInt::from(2).pow(j as u32), int_factorial(j))
                        * rpow(zr, 2 * i as i64)
                })
                .collect()
        })
        .collect()
}

/// `W_qk = (−1)^{k−q} binom(k,q) / (2z_R)^{2k}`.
pub fn exact_w(order: usize, zr: &BigRational) -> Vec<Vec<BigRational>> {
    let two_zr = zr.clone() * rational(2, 1);
    (0..=order)
        .map(|q| {
            (0..=order)
                .map(|k| {
                    if q > k {
                        return BigRational::zero();
                    }
                    sign(k - q) * BigRational::from_integer(int_binomial(k, q)) * rpow(&two_zr, -2 * k as i64)
                })
                .collect()
        })
        .collect()
}

/// `[W⁻¹]_kq = (2z_R)^{2k} binom(q,k)`.
pub fn exact_w_inverse(order: usize, zr: &BigRational) -> Vec<Vec<BigRational>> {
    let two_zr = zr.clone() * rational(2, 1);
    (0..=order)
        .map(|k| {
            (0..=order)
                .map(|q| BigRational::from_integer(int_binomial(q, k)) * rpow(&two_zr, 2 * k as i64))
                .collect()
        })
        .collect()
}

pub fn exact_product(a: &[Vec<BigRational>], b: &[Vec<BigRational>]) -> Vec<Vec<BigRational>> {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(BigRational::zero(), |acc, m| acc + a[i][m].clone() * b[m][j].clone()))
                .collect()
        })
        .collect()
}

pub fn is_exact_identity(m: &[Vec<BigRational>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
    })
}

pub fn to_f64(x: &BigRational) -> f64 {
    use num::ToPrimitive;
    x.to_f64().expect("finite rational")
}

/// Largest entry-wise relative gap between a float matrix and an exact one.
pub fn max_relative_gap(m: &DMatrix<f64>, exact: &[Vec<BigRational>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in exact.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let e = to_f64(x);
            let gap = if e == 0.0 { m[(i, j)].abs() } else { (m[(i, j)] / e - 1.0).abs() };
            worst = worst.max(gap);
        }
    }
    worst
}

/// Largest `|a − b| / max|b|`.
pub fn scaled_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}
