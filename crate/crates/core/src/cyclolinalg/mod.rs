//! Exact arithmetic over `Q` and `Q(√−1)` with sparse and dense linear
//! algebra: kernels, eigenspaces and characteristic polynomials.

mod dense;
mod modular;
mod poly;
mod scalar;
mod sparse;

pub use dense::{eigenspace, DenseMat};
pub use modular::{kernel_rational, kernel_rational_with_stats, rational_reconstruct, ModularKernelStats};
pub use poly::{charpoly, gaussian_integer_roots, to_gauss, Poly};
pub use scalar::{rat, Field, GaussRat, Rat};
pub use sparse::SparseMat;
