//! Independent reference implementations used by the integration tests.
//! None of these call into the solvers they check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn log_uniform(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Gaussian Gram matrix written out entry by entry.
pub fn gaussian_gram(x: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let l = x.nrows();
    DMatrix::from_fn(l, l, |i, j| {
        let d2: f64 = (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum();
        (-d2 / (2.0 * bandwidth * bandwidth)).exp()
    })
}

/// Random PSD matrix with trace exactly `tau`.
pub fn random_psd(n: usize, tau: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = uniform(n, n, rng);
    let m = &g * g.transpose() + DMatrix::identity(n, n) * 0.05;
    let m = (&m + m.transpose()) * 0.5;
    let t = m.trace();
    m * (tau / t)
}

/// Random point of the probability simplex.
pub fn random_simplex(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Solves `K C L + shift C = Y` through `(L^T ⊗ K + shift I) vec C = vec Y`.
pub fn dense_sylvester(k: &DMatrix<f64>, l_out: &DMatrix<f64>, shift: f64, y: &DMatrix<f64>) -> DMatrix<f64> {
    let big = kron(&l_out.transpose(), k) + DMatrix::identity(k.nrows() * l_out.nrows(), k.nrows() * l_out.nrows()) * shift;
    let sol = big.lu().solve(&vec_of(y)).expect("dense system is nonsingular");
    DMatrix::from_column_slice(y.nrows(), y.ncols(), sol.as_slice())
}

/// `(1/l) |vec Y - (L ⊗ K) vec C|^2 + lambda vec(C)^T (L ⊗ K) vec C`.
pub fn naive_objective(c: &DMatrix<f64>, k: &DMatrix<f64>, l_out: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> f64 {
    let big = kron(l_out, k);
    let vc = vec_of(c);
    let fit = &big * &vc;
    let r = vec_of(y) - &fit;
    r.norm_squared() / k.nrows() as f64 + lambda * vc.dot(&fit)
}

/// `g(L) = (1/l) |A L - Y|^2 + lambda tr(B L)`.
pub fn l_value(a: &DMatrix<f64>, b: &DMatrix<f64>, y: &DMatrix<f64>, l_out: &DMatrix<f64>, lambda: f64) -> f64 {
    (a * l_out - y).norm_squared() / a.nrows() as f64 + lambda * (b * l_out).trace()
}

/// Euclidean projection of a vector onto `{x >= 0, sum x <= tau}`.
fn project_capped_simplex(v: &[f64], tau: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= tau {
        return clipped;
    }
    // Bisection on the shift theta with sum max(v - theta, 0) = tau.
    let (mut lo, mut hi) = (0.0, v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = v.iter().map(|x| (x - mid).max(0.0)).sum();
        if s > tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    v.iter().map(|x| (x - hi).max(0.0)).collect()
}

/// Projection onto `{L PSD, tr L <= tau}`.
pub fn project_spectahedron(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let vals = project_capped_simplex(eig.eigenvalues.as_slice(), tau);
    let d = DMatrix::from_diagonal(&DVector::from_vec(vals));
    let out = &eig.eigenvectors * d * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Accelerated projected gradient on `g` over the spectahedron.
pub fn projected_gradient_l(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    tau: f64,
    iters: usize,
) -> (DMatrix<f64>, f64) {
    let l = a.nrows() as f64;
    let ata = a.transpose() * a;
    let lip = 2.0 / l * ata.symmetric_eigen().eigenvalues.iter().copied().fold(0.0, f64::max);
    let step = 1.0 / lip.max(1e-12);
    let grad = |m: &DMatrix<f64>| {
        let g = (a.transpose() * (a * m - y)) * (2.0 / l) + b * lambda;
        (&g + g.transpose()) * 0.5
    };
    let n = a.ncols();
    let mut x = DMatrix::zeros(n, n);
    let mut z = x.clone();
    let mut t: f64 = 1.0;
    for _ in 0..iters {
        let next = project_spectahedron(&(&z - grad(&z) * step), tau);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        z = &next + (&next - &x) * ((t - 1.0) / t_next);
        x = next;
        t = t_next;
    }
    let v = l_value(a, b, y, &x, lambda);
    (x, v)
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    for _ in 0..iters {
        if f(c) < f(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - r * (hi - lo);
        d = lo + r * (hi - lo);
    }
    0.5 * (lo + hi)
}

/// `sum_j alpha_j^2 / eta_j`.
pub fn variational_value(alpha: &[f64], eta: &[f64]) -> f64 {
    alpha.iter().zip(eta).map(|(a, e)| a * a / e).sum()
}

/// Numeric minimum of `sum_j alpha_j^2 / eta_j` over `eta > 0`,
/// `sum_j eta_j^q = 1`, parametrized as `eta = e^w / |e^w|_q` and solved by
/// gradient descent with backtracking.
pub fn numeric_eta_minimum(alpha: &[f64], q: f64) -> f64 {
    let h = |w: &[f64]| {
        let norm = w.iter().map(|v| (q * v).exp()).sum::<f64>().powf(1.0 / q);
        let s: f64 = alpha.iter().zip(w).map(|(a, v)| a * a * (-v).exp()).sum();
        norm * s
    };
    let grad = |w: &[f64]| {
        let sum_q: f64 = w.iter().map(|v| (q * v).exp()).sum();
        let norm = sum_q.powf(1.0 / q);
        let s: f64 = alpha.iter().zip(w).map(|(a, v)| a * a * (-v).exp()).sum();
        w.iter()
            .zip(alpha)
            .map(|(v, a)| norm.powf(1.0 - q) * (q * v).exp() * s - norm * a * a * (-v).exp())
            .collect::<Vec<f64>>()
    };
    let mut w = vec![0.0; alpha.len()];
    let mut val = h(&w);
    let mut step = 1.0;
    for _ in 0..20000 {
        let g = grad(&w);
        let gg: f64 = g.iter().map(|v| v * v).sum();
        if gg.sqrt() < 1e-13 * val {
            break;
        }
        step *= 2.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(&g).map(|(v, d)| v - step * d).collect();
            let cv = h(&cand);
            if cv <= val - 0.5 * step * gg {
                w = cand;
                val = cv;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return val;
            }
        }
    }
    val
}

/// Lagged OLS baseline: the score of edge `j -> i` is the increase of the
/// residual sum of squares of node `i`'s regression when node `j`'s lagged
/// block is dropped.
pub fn ols_granger_scores(values: &DMatrix<f64>, lag: usize) -> DMatrix<f64> {
    let (t, n) = values.shape();
    let rows = t - lag;
    let design = |keep: &dyn Fn(usize) -> bool| {
        let cols: Vec<(usize, usize)> = (0..n).filter(|j| keep(*j)).flat_map(|j| (1..=lag).map(move |k| (j, k))).collect();
        DMatrix::from_fn(rows, cols.len() + 1, |r, c| {
            if c == cols.len() {
                1.0
            } else {
                let (j, k) = cols[c];
                values[(r + lag - k, j)]
            }
        })
    };
    let rss = |x: &DMatrix<f64>, y: &DVector<f64>| {
        let svd = x.clone().svd(true, true);
        let beta = svd.solve(y, 1e-12).expect("least squares");
        (y - x * beta).norm_squared()
    };
    DMatrix::from_fn(n, n, |i, j| {
        let y = DVector::from_fn(rows, |r, _| values[(r + lag, i)]);
        let full = rss(&design(&|_| true), &y);
        let reduced = rss(&design(&|k| k != j), &y);
        reduced - full
    })
}
