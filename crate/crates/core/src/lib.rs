//! Multiple kernel learning for vector-valued regression.
//!
//! A model is `f(x) = sum_j eta_j k_j(x, .) L`: a weighted dictionary of
//! scalar input kernels times a shared positive semidefinite output kernel
//! `L`. [`trainer::fit`] learns the coefficients `C`, the weights `eta`
//! and `L` together by block coordinate descent, using conjugate gradients
//! for the Sylvester equation in `C` ([`sylvester`]) and a Frank-Wolfe
//! method over the trace-bounded PSD cone for `L` ([`spectahedron`]).
//!
//! [`granger`] turns per-node fits into a causal graph, [`bounds`]
//! evaluates generalization bounds, and [`io`] / [`pipeline`] back the
//! `mvkl` command-line tool.

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod bounds;
pub mod error;
pub mod granger;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod pipeline;
pub mod spectahedron;
pub mod sylvester;
pub mod trainer;
pub mod weights;

pub use error::{MvklError, Result};
pub use granger::{CausalGraph, GrangerConfig, TimeSeriesPanel};
pub use io::{BenchRow, ModelFile, RunConfig};
pub use kernel::{GramRep, GramSet, KernelDictionary, KernelKind, ScalarKernelSpec, WeightedGram};
pub use spectahedron::OutputKernel;
pub use trainer::{FitResult, FitState, Mode, Model, TrainConfig};
pub use weights::{Penalty, WeightVector};
