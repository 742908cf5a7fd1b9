//! Reference implementations shared by the integration tests. Everything here
//! is written from the textbook formulas, independently of the library code.
#![allow(dead_code)]

use gicselect::{Dataset, Family, Penalty};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

/// Scales every column to Euclidean norm `sqrt(n)`.
pub fn scale_columns(mut x: DMatrix<f64>) -> DMatrix<f64> {
    let target = (x.nrows() as f64).sqrt();
    for mut col in x.column_iter_mut() {
        let norm = col.norm();
        col *= target / norm;
    }
    x
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// Response drawn from `family` at linear predictor `eta`.
pub fn draw_response(rng: &mut ChaCha8Rng, family: &Family, eta: &DVector<f64>) -> DVector<f64> {
    eta.map(|e| match family {
        Family::Gaussian { phi } => e + phi.sqrt() * rng.sample::<f64, _>(StandardNormal),
        Family::Binomial => {
            if rng.random::<f64>() < sigmoid(e) {
                1.0
            } else {
                0.0
            }
        }
        Family::Poisson => rng.sample(Poisson::new(e.exp()).unwrap()),
    })
}

/// Sparse coefficients: the first `s` entries drawn from `+-[0.5, 1.5]`
/// (scaled down for Poisson), the rest zero.
pub fn sparse_beta(rng: &mut ChaCha8Rng, family: &Family, p: usize, s: usize) -> Vec<f64> {
    let scale = if matches!(family, Family::Poisson) { 0.3 } else { 1.0 };
    (0..p)
        .map(|j| {
            if j < s {
                let m = rng.random_range(0.5..1.5) * scale;
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            } else {
                0.0
            }
        })
        .collect()
}

/// Standardized design with a response from a sparse model.
pub fn random_problem(seed: u64, family: &Family, n: usize, p: usize, s: usize) -> (Dataset, Vec<f64>) {
    let mut r = rng(seed);
    let x = scale_columns(normal_matrix(&mut r, n, p));
    let beta = sparse_beta(&mut r, family, p, s);
    let eta = &x * DVector::from_column_slice(&beta);
    let y = draw_response(&mut r, family, &eta);
    (Dataset::from_standardized(x, y).unwrap(), beta)
}

// ---- families ----

pub fn ref_b(family: &Family, t: f64) -> f64 {
    match family {
        Family::Gaussian { .. } => t * t / 2.0,
        Family::Binomial => (1.0 + t.exp()).ln(),
        Family::Poisson => t.exp(),
    }
}

pub fn ref_mean(family: &Family, t: f64) -> f64 {
    match family {
        Family::Gaussian { .. } => t,
        Family::Binomial => sigmoid(t),
        Family::Poisson => t.exp(),
    }
}

pub fn ref_var(family: &Family, t: f64) -> f64 {
    match family {
        Family::Gaussian { .. } => 1.0,
        Family::Binomial => sigmoid(t) * (1.0 - sigmoid(t)),
        Family::Poisson => t.exp(),
    }
}

pub fn ref_phi(family: &Family) -> f64 {
    match family {
        Family::Gaussian { phi } => *phi,
        _ => 1.0,
    }
}

/// `sum (y eta - b(eta)) / phi`.
pub fn ref_loglik(family: &Family, x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y.iter()).map(|(&e, &yi)| yi * e - ref_b(family, e)).sum::<f64>() / ref_phi(family)
}

/// Scaled deviance of mean vector `mu`.
pub fn ref_deviance(family: &Family, y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    let xlogx = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    let total: f64 = y
        .iter()
        .zip(mu.iter())
        .map(|(&yi, &m)| match family {
            Family::Gaussian { .. } => (yi - m).powi(2),
            Family::Binomial => 2.0 * (xlogx(yi, m) + xlogx(1.0 - yi, 1.0 - m)),
            Family::Poisson => 2.0 * (xlogx(yi, m) - (yi - m)),
        })
        .sum();
    total / ref_phi(family)
}

pub fn ref_deviance_at(family: &Family, x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64]) -> f64 {
    let eta = x * DVector::from_column_slice(beta);
    ref_deviance(family, y, &eta.map(|e| ref_mean(family, e)))
}

/// Unpenalized MLE on the columns `support`, by plain Newton iterations on the
/// normal equations. Returns `None` when the iteration does not settle.
pub fn newton_mle(family: &Family, x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Option<DVector<f64>> {
    let xa = x.select_columns(support);
    let k = support.len();
    let mut b = DVector::zeros(k);
    if k == 0 {
        return Some(b);
    }
    for _ in 0..200 {
        let eta = &xa * &b;
        let resid = DVector::from_iterator(y.len(), y.iter().zip(eta.iter()).map(|(yi, e)| yi - ref_mean(family, *e)));
        let w = eta.map(|e| ref_var(family, e));
        let mut h = DMatrix::zeros(k, k);
        for i in 0..xa.nrows() {
            let row = xa.row(i);
            h += w[i] * row.transpose() * row;
        }
        let step = h.cholesky()?.solve(&(xa.transpose() * resid));
        b += &step;
        if step.amax() < 1e-13 * (1.0 + b.amax()) {
            return Some(b);
        }
    }
    None
}

/// Residual sum of squares after projecting `y` on the columns `support`,
/// via the explicit hat matrix `A (A^T A)^{-1} A^T`.
pub fn projection_rss(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> f64 {
    if support.is_empty() {
        return y.norm_squared();
    }
    let a = x.select_columns(support);
    let gram_inv = (a.transpose() * &a).try_inverse().unwrap();
    let hat = &a * gram_inv * a.transpose();
    (y - hat * y).norm_squared()
}

// ---- penalties ----

pub fn ref_penalty(pen: &Penalty, lambda: f64, t: f64) -> f64 {
    match *pen {
        Penalty::Lasso | Penalty::AdaptiveLasso { .. } => lambda * t,
        Penalty::Scad { a } => {
            if t <= lambda {
                lambda * t
            } else if t <= a * lambda {
                -(t * t - 2.0 * a * lambda * t + lambda * lambda) / (2.0 * (a - 1.0))
            } else {
                (a + 1.0) * lambda * lambda / 2.0
            }
        }
        Penalty::Mcp { gamma } => {
            if t <= gamma * lambda {
                lambda * t - t * t / (2.0 * gamma)
            } else {
                gamma * lambda * lambda / 2.0
            }
        }
    }
}

/// Kink points of the penalty on `t > 0`.
pub fn kinks(pen: &Penalty, lambda: f64) -> Vec<f64> {
    match *pen {
        Penalty::Scad { a } => vec![lambda, a * lambda],
        Penalty::Mcp { gamma } => vec![gamma * lambda],
        _ => vec![],
    }
}

/// Scalar objective minimized by the coordinate update.
pub fn scalar_objective(pen: &Penalty, lambda: f64, z: f64, v: f64, beta: f64) -> f64 {
    0.5 * v * (beta - z / v).powi(2) + ref_penalty(pen, lambda, beta.abs())
}

/// Minimizes `f` on `[lo, hi]` by a uniform grid followed by repeated local
/// refinement around the best point. Returns `(argmin, min)`.
pub fn grid_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (lo, f(lo));
    let consider = |t: f64, best: &mut (f64, f64)| {
        let ft = f(t);
        if ft < best.1 {
            *best = (t, ft);
        }
    };
    consider(hi, &mut best);
    let (mut a, mut b) = (lo, hi);
    let cells = 4000;
    for _ in 0..5 {
        let h = (b - a) / cells as f64;
        if h <= 0.0 {
            break;
        }
        for k in 0..=cells {
            consider(a + h * k as f64, &mut best);
        }
        a = (best.0 - 2.0 * h).max(lo);
        b = (best.0 + 2.0 * h).min(hi);
    }
    best
}

// ---- distributions ----

pub fn chi2_cdf(df: f64, x: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df).unwrap().cdf(x)
}

/// Largest gap between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in s.iter().enumerate() {
        let f = cdf(*v);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Sylvester Hadamard matrix of order `2^k`.
pub fn hadamard(k: u32) -> DMatrix<f64> {
    let mut h = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..k {
        let m = h.nrows();
        let mut next = DMatrix::zeros(2 * m, 2 * m);
        next.view_mut((0, 0), (m, m)).copy_from(&h);
        next.view_mut((0, m), (m, m)).copy_from(&h);
        next.view_mut((m, 0), (m, m)).copy_from(&h);
        next.view_mut((m, m), (m, m)).copy_from(&(-&h));
        h = next;
    }
    h
}

/// Lasso optimality residual at `beta`: the largest violation of the
/// subgradient conditions of `-l/n + lambda |beta|_1`.
pub fn lasso_kkt_residual(family: &Family, data: &Dataset, lambda: f64, beta: &[f64]) -> f64 {
    let x = data.x();
    let eta = x * DVector::from_column_slice(beta);
    let resid = DVector::from_iterator(
        data.n(),
        data.y().iter().zip(eta.iter()).map(|(y, e)| y - ref_mean(family, *e)),
    );
    let scale = data.n() as f64 * ref_phi(family);
    beta.iter()
        .enumerate()
        .map(|(j, &b)| {
            let g = x.column(j).dot(&resid) / scale;
            if b == 0.0 {
                (g.abs() - lambda).max(0.0)
            } else {
                (g - lambda * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}
