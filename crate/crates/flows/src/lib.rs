//! Dynamics on oriented simplicial complexes.
//!
//! The crate provides, layer by layer:
//!
//! * [`complex`] - finite oriented simplicial complexes with fixed simplex
//!   orderings and exact integer boundary matrices.
//! * [`hodge`] - Moore-Penrose pseudoinverses, the orthogonal triple
//!   decomposition of each chain space, and reduced up/down Laplacians.
//! * [`expr`] - a small scalar expression language (odd polynomials, `sin`)
//!   with statically checkable oddness.
//! * [`dynamics`] - coupling functions, assembly of simplicial vector fields,
//!   equivalence of couplings, and realization of arbitrary target fields as
//!   simplicial flows conjugate to a block normal form.
//! * [`relabel`] - vertex permutations, sign bookkeeping, the diagonal
//!   relabeling maps and signed symmetry representations, and automorphism
//!   search.
//! * [`coloring`] - anti-colorings of simplices, induced colorings, the
//!   balanced condition classifying flow-invariant anti-synchrony subspaces,
//!   and a randomized dynamical cross-check.
//! * [`simulate`] - fixed-step RK4 integration, fixed-point inertia analysis,
//!   and two ready-made showcase scenarios.
//! * [`files`] - JSON/CSV interchange formats used by the command line tool.

pub mod coloring;
pub mod complex;
pub mod dynamics;
pub mod expr;
pub mod files;
pub mod hodge;
pub mod relabel;
pub mod simulate;

mod error;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
