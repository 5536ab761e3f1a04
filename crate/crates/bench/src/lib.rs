//! Seeded problem instances shared by the solver benchmarks.

use mvkl::spectahedron::LQuadratic;
use mvkl::{GramSet, KernelDictionary, ScalarKernelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub gs: GramSet,
    pub eta: Vec<f64>,
    pub l_out: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

fn uniform(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `m` Gaussian kernels of geometric bandwidths on `l` points in 3-D,
/// uniform weights and a random output kernel of trace `n`.
pub fn instance(l: usize, n: usize, m: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform(l, 3, &mut rng);
    let specs = (0..m)
        .map(|j| ScalarKernelSpec::gaussian(format!("k{j}"), 0.2 * 1.5f64.powi(j as i32), vec![]))
        .collect();
    let gs = GramSet::build(&KernelDictionary::new(specs).unwrap(), &x).unwrap();
    let g = uniform(n, n, &mut rng);
    let l_out = &g * g.transpose() + DMatrix::identity(n, n) * 0.1;
    let l_out = &l_out * (n as f64 / l_out.trace());
    Instance {
        gs,
        eta: vec![1.0 / m as f64; m],
        l_out,
        y: uniform(l, n, &mut rng),
    }
}

/// The output-kernel subproblem at coefficients `c` of `inst`.
pub fn l_problem(inst: &Instance, c: &DMatrix<f64>, lambda: f64) -> LQuadratic {
    let a = inst.gs.weighted_apply(&inst.eta, c).unwrap();
    let b = c.transpose() * &a;
    LQuadratic::new(&a, &b, &inst.y, lambda, inst.gs.samples()).unwrap()
}
