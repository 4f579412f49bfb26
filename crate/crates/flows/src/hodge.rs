//! Pseudoinverses, the orthogonal triple decomposition of chain spaces, and
//! reduced up/down Laplacians.
//!
//! Every chain space splits orthogonally as
//! `C_d = im(B_d^T) + im(B_{d+1}) + W_d` with `W_d = ker(B_d) n ker(B_{d+1}^T)`.
//! Ranks are determined twice: from singular values and by exact integer
//! elimination; a disagreement is a hard error rather than a warning, since
//! every later projection depends on the rank being right.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use serde::Serialize;

use crate::complex::OrientedComplex;
use crate::{Error, Result};

/// A singular value counts as nonzero iff it exceeds this fraction of the
/// largest singular value.
pub const RANK_RTOL: f64 = 1e-10;

/// Converts an exact integer matrix to floating point.
pub fn to_f64(m: &DMatrix<i64>) -> DMatrix<f64> {
    m.map(|v| v as f64)
}

/// Rank from singular values with the relative threshold [`RANK_RTOL`].
pub fn singular_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    if !(max > 0.0) {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * max).count()
}

/// Exact rank over the integers via fraction-free (Bareiss) elimination.
pub fn integer_rank(m: &DMatrix<i64>) -> usize {
    let (nr, nc) = m.shape();
    if nr == 0 || nc == 0 {
        return 0;
    }
    let mut a: Vec<Vec<BigInt>> = (0..nr)
        .map(|i| (0..nc).map(|j| BigInt::from(m[(i, j)])).collect())
        .collect();
    let zero = BigInt::from(0);
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..nc {
        let Some(pivot_row) = (rank..nr).find(|&r| a[r][col] != zero) else {
            continue;
        };
        a.swap(rank, pivot_row);
        for r in rank + 1..nr {
            for c in col + 1..nc {
                let num = &a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c];
                a[r][c] = num / &prev;
            }
            a[r][col] = zero.clone();
        }
        prev = a[rank][col].clone();
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

/// Rank of an integer matrix, computed both ways; errors on disagreement.
pub fn checked_rank(m: &DMatrix<i64>) -> Result<usize> {
    let float_rank = singular_rank(&to_f64(m));
    let int_rank = integer_rank(m);
    if float_rank != int_rank {
        return Err(Error::RankDisagreement { float_rank, int_rank });
    }
    Ok(int_rank)
}

/// Orthonormal basis (as columns) of the column space of `m`, truncated to
/// the given rank. Uses Householder QR with column pivoting: the pivot rule
/// picks the column holding the largest remaining entry, so while independent
/// columns remain they are preferred, and the first `rank` columns of Q span
/// the image. Deterministic for a fixed input.
///
/// nalgebra's iterative SVD is deliberately avoided here: on some small
/// integer boundary matrices (e.g. the B_2 of `[[1,2,3],[2,3,6,8],[3,5,8]]`)
/// it returns u columns that do not span the image even though the singular
/// values are correct.
pub fn orthonormal_image_basis(m: &DMatrix<f64>, rank: usize) -> DMatrix<f64> {
    let n = m.nrows();
    if rank == 0 || n == 0 || m.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let qr = m.clone().col_piv_qr();
    let basis = qr.q().columns(0, rank).into_owned();
    debug_assert!(
        max_norm(&(m - &basis * (basis.transpose() * m))) < 1e-9 * (1.0 + max_norm(m)),
        "image basis does not span the column space"
    );
    basis
}

/// A matrix together with its Moore-Penrose pseudoinverse.
#[derive(Clone, Debug)]
pub struct Pseudoinverse {
    pub source: DMatrix<f64>,
    pub pinv: DMatrix<f64>,
    pub rank: usize,
}

/// Moore-Penrose pseudoinverse via a full-rank factorization `L = C F`:
/// `C` is an orthonormal image basis from pivoted QR and `F = C^T L`, giving
/// `L^+ = F^T (F F^T)^{-1} C^T` with the Gram matrix inverted by Cholesky.
/// Rank is the number of singular values above the relative threshold
/// [`RANK_RTOL`]. Defined for every finite real matrix.
///
/// nalgebra's SVD-backed `pseudo_inverse` is deliberately avoided: it fails
/// the Penrose identities outright on some small integer boundary matrices
/// (same failure as documented on [`orthonormal_image_basis`]).
pub fn pseudoinverse(l: &DMatrix<f64>) -> Pseudoinverse {
    let (nr, nc) = l.shape();
    let rank = singular_rank(l);
    if rank == 0 {
        return Pseudoinverse {
            source: l.clone(),
            pinv: DMatrix::zeros(nc, nr),
            rank: 0,
        };
    }
    let c = orthonormal_image_basis(l, rank);
    let f = c.transpose() * l;
    let gram = &f * f.transpose();
    let chol = Cholesky::new(gram).expect("Gram matrix of a rank-r factor is positive definite");
    let pinv = f.transpose() * chol.solve(&c.transpose());
    Pseudoinverse { source: l.clone(), pinv, rank }
}

/// The orthogonal splitting of `C_d(X)` with its three projections.
#[derive(Clone, Debug)]
pub struct TripleDecomposition {
    pub d: usize,
    pub n: usize,
    /// Projection onto `im(B_d^T)`.
    pub p: DMatrix<f64>,
    /// Projection onto `im(B_{d+1})`.
    pub q: DMatrix<f64>,
    /// Projection onto the harmonic summand `W_d`.
    pub r: DMatrix<f64>,
    pub r_down: usize,
    pub r_up: usize,
    pub w: usize,
    pub basis_down: DMatrix<f64>,
    pub basis_up: DMatrix<f64>,
    pub basis_harmonic: DMatrix<f64>,
}

/// Computes the triple decomposition of `C_d(X)`.
///
/// `B_0` and `B_{d_max+1}` are treated as zero maps, so every
/// `0 <= d <= d_max` is valid.
pub fn triple_decomposition(x: &OrientedComplex, d: usize) -> Result<TripleDecomposition> {
    if d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() });
    }
    let n = x.size(d);
    let bd = x.boundary_or_zero(d);
    let bup = x.boundary_or_zero(d + 1);
    let r_down = checked_rank(&bd)?;
    let r_up = checked_rank(&bup)?;
    let w = n - r_down - r_up;

    let bd_f = to_f64(&bd);
    let bup_f = to_f64(&bup);
    let basis_down = orthonormal_image_basis(&bd_f.transpose(), r_down);
    let basis_up = orthonormal_image_basis(&bup_f, r_up);
    let p = &basis_down * basis_down.transpose();
    let q = &basis_up * basis_up.transpose();
    let r = DMatrix::identity(n, n) - &p - &q;

    // W_d is the kernel of the symmetric PSD matrix B_d^T B_d + B_{d+1} B_{d+1}^T;
    // take the w eigenvectors of smallest magnitude (counts fixed by rank-nullity).
    let basis_harmonic = if w == 0 || n == 0 {
        DMatrix::zeros(n, 0)
    } else {
        let s = bd_f.transpose() * &bd_f + &bup_f * bup_f.transpose();
        let eig = SymmetricEigen::new(s);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            eig.eigenvalues[i]
                .abs()
                .partial_cmp(&eig.eigenvalues[j].abs())
                .expect("finite eigenvalues")
        });
        let mut basis = DMatrix::zeros(n, w);
        for (k, &i) in order.iter().take(w).enumerate() {
            basis.set_column(k, &eig.eigenvectors.column(i));
        }
        basis
    };

    Ok(TripleDecomposition {
        d,
        n,
        p,
        q,
        r,
        r_down,
        r_up,
        w,
        basis_down,
        basis_up,
        basis_harmonic,
    })
}

/// Dimension of the harmonic summand `W_d` (the d-th Betti number).
pub fn harmonic_dimension(x: &OrientedComplex, d: usize) -> Result<usize> {
    if d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() });
    }
    let r_down = checked_rank(&x.boundary_or_zero(d))?;
    let r_up = checked_rank(&x.boundary_or_zero(d + 1))?;
    Ok(x.size(d) - r_down - r_up)
}

/// Which restriction a reduced Laplacian takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `B_D^T B_D` restricted to `im(B_D^T)` (a map on `C_D`).
    Up,
    /// `B_D B_D^T` restricted to `im(B_D)` (a map on `C_{D-1}`).
    Down,
}

/// A reduced Laplacian expressed in a stored orthonormal basis of the
/// restriction subspace; symmetric positive definite whenever nonempty.
#[derive(Clone, Debug)]
pub struct ReducedLaplacian {
    pub kind: LaplacianKind,
    pub d: usize,
    pub matrix: DMatrix<f64>,
    /// Orthonormal basis of the subspace the restriction acts on, as columns
    /// of an ambient-dimension matrix.
    pub basis: DMatrix<f64>,
}

/// Computes the reduced Laplacian of boundary index `d` and the given kind.
/// Rank zero yields a legal empty 0 x 0 matrix.
pub fn reduced_laplacian(
    x: &OrientedComplex,
    d: usize,
    kind: LaplacianKind,
) -> Result<ReducedLaplacian> {
    if d > x.d_max() + 1 {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() + 1 });
    }
    let b = to_f64(&x.boundary_or_zero(d));
    let rank = checked_rank(&x.boundary_or_zero(d))?;
    let (basis, full) = match kind {
        LaplacianKind::Up => (
            orthonormal_image_basis(&b.transpose(), rank),
            b.transpose() * &b,
        ),
        LaplacianKind::Down => (orthonormal_image_basis(&b, rank), &b * b.transpose()),
    };
    let matrix = basis.transpose() * full * &basis;
    Ok(ReducedLaplacian { kind, d, matrix, basis })
}

/// JSON-facing summary of a decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub d: usize,
    pub n: usize,
    pub r_down: usize,
    pub r_up: usize,
    pub harmonic_dimension: usize,
    pub conjugacy_type: (usize, usize, usize),
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projections: Option<ProjectionMatrices>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionMatrices {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
}

impl DecompositionReport {
    pub fn from_decomposition(t: &TripleDecomposition, with_projections: bool) -> Self {
        let projections = with_projections.then(|| ProjectionMatrices {
            p: matrix_rows(&t.p),
            q: matrix_rows(&t.q),
            r: matrix_rows(&t.r),
        });
        DecompositionReport {
            d: t.d,
            n: t.n,
            r_down: t.r_down,
            r_up: t.r_up,
            harmonic_dimension: t.w,
            conjugacy_type: (t.r_down, t.r_up, t.n),
            projections,
        }
    }
}

/// Rows of a matrix as nested vectors, for JSON output.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Max-entry norm; the standard norm for the crate's matrix identities.
pub fn max_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
