//! Fixed-step integration of assembled fields, fixed-point inertia
//! analysis, and two built-in showcase scenarios that realize well-known
//! benchmark systems (Guckenheimer-Holmes, Lorenz, Sel'kov) as simplicial
//! flows.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{diamond, tetrahedron, OrientedComplex};
use crate::dynamics::{
    assemble, jacobian_fd, realize_with_basis, AssembledField, BuiltinField, Realization,
    VectorMap,
};
use crate::hodge::ReducedLaplacian;
use crate::{Error, Result};

/// Largest pointwise residual `|h(x*)|` accepted as a fixed point.
const FIXED_POINT_TOL: f64 = 1e-8;
/// Relative skew tolerance for the Jacobian symmetry check.
const JACOBIAN_SYMMETRY_TOL: f64 = 1e-6;
/// Eigenvalues within this band of zero count as zero in sign counts.
const INERTIA_ZERO_TOL: f64 = 1e-9;
/// Central-difference step for numerical Jacobians.
const FD_STEP: f64 = 1e-6;

/// A uniformly sampled solution path.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Sample times `k * h`, one per stored row.
    pub times: Vec<f64>,
    /// One state per row; row `k` is the state at `times[k]`.
    pub states: DMatrix<f64>,
    /// Step size the grid was built with.
    pub h: f64,
    /// `Some(step)` when the run was cut short because the state at that
    /// step stopped being finite; stored rows all precede it.
    pub aborted_at: Option<usize>,
    /// Content hash of the field description, filled in by file-based runs.
    pub field_hash: Option<String>,
    /// Content hash of the complex description, filled in by file-based runs.
    pub complex_hash: Option<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    /// Phase-space dimension.
    pub fn dim(&self) -> usize {
        self.states.ncols()
    }

    /// The state at row `k` as a column vector.
    pub fn state(&self, k: usize) -> DVector<f64> {
        self.states.row(k).transpose()
    }

    pub fn final_state(&self) -> DVector<f64> {
        self.state(self.len() - 1)
    }

    /// The time series of one coordinate.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.states.column(i).iter().copied().collect()
    }
}

/// Integrates `field` from `x0` with the classical fixed-step RK4 scheme,
/// storing `floor(T/h) + 1` uniformly spaced states (including the start).
/// If the state stops being finite the partial path is returned with
/// [`Trajectory::aborted_at`] set instead of an error.
pub fn integrate(
    field: &AssembledField,
    x0: &DVector<f64>,
    h: f64,
    t_end: f64,
) -> Result<Trajectory> {
    if !(h > 0.0) || !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step and horizon must be positive, got h = {h}, T = {t_end}"
        )));
    }
    if x0.len() != field.dim() {
        return Err(Error::InvalidInput(format!(
            "initial state has {} entries, the field needs {}",
            x0.len(),
            field.dim()
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    let steps = (t_end / h).floor() as usize;
    let mut rows: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    rows.push(x.clone());
    let mut aborted_at = None;
    for k in 1..=steps {
        x = rk4_step(field, &x, h);
        if x.iter().any(|v| !v.is_finite()) {
            aborted_at = Some(k);
            break;
        }
        rows.push(x.clone());
    }
    let times: Vec<f64> = (0..rows.len()).map(|k| k as f64 * h).collect();
    let row_views: Vec<_> = rows.iter().map(|r| r.transpose()).collect();
    Ok(Trajectory {
        times,
        states: DMatrix::from_rows(&row_views),
        h,
        aborted_at,
        field_hash: None,
        complex_hash: None,
    })
}

fn rk4_step(field: &AssembledField, x: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = field.eval(x);
    let k2 = field.eval(&(x + &k1 * (h / 2.0)));
    let k3 = field.eval(&(x + &k2 * (h / 2.0)));
    let k4 = field.eval(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// The image of a trajectory under a linear map, on the same time grid.
pub fn map_states(traj: &Trajectory, m: &DMatrix<f64>) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: &traj.states * m.transpose(),
        h: traj.h,
        aborted_at: traj.aborted_at,
        field_hash: traj.field_hash.clone(),
        complex_hash: traj.complex_hash.clone(),
    }
}

/// Eigenvalue sign counts of a symmetric matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub zero: usize,
    pub negative: usize,
}

impl Inertia {
    pub fn dim(&self) -> usize {
        self.positive + self.zero + self.negative
    }
}

fn check_symmetric(m: &DMatrix<f64>, context: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidInput(format!("{context}: matrix must be square")));
    }
    let skew = (m - m.transpose()).amax();
    if skew > 1e-8 * (1.0 + m.amax()) {
        return Err(Error::InvalidInput(format!(
            "{context}: matrix is not symmetric (skew {skew:.2e})"
        )));
    }
    Ok(())
}

/// Sign counts of the spectrum of a symmetric matrix; eigenvalues with
/// `|lambda| <= zero_tol` count as zero.
pub fn inertia(sym: &DMatrix<f64>, zero_tol: f64) -> Result<Inertia> {
    check_symmetric(sym, "inertia")?;
    let eigenvalues = sym.clone().symmetric_eigenvalues();
    let mut out = Inertia { positive: 0, zero: 0, negative: 0 };
    for &lambda in eigenvalues.iter() {
        if lambda > zero_tol {
            out.positive += 1;
        } else if lambda < -zero_tol {
            out.negative += 1;
        } else {
            out.zero += 1;
        }
    }
    Ok(out)
}

/// Symmetric positive definite square root through the spectral
/// decomposition.
pub fn spd_sqrt(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(l, "spd_sqrt")?;
    let eig = nalgebra::linalg::SymmetricEigen::new(l.clone());
    if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidInput("matrix is not positive definite".into()));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose())
}

/// Inertia of `L * A` for symmetric `A` and positive definite `L`. The
/// product is similar to `L^{1/2} A L^{1/2}`, which is congruent to `A`, so
/// the counts can be read off a symmetric eigenproblem (and by Sylvester's
/// law they equal the inertia of `A` itself).
pub fn inertia_of_product(l: &DMatrix<f64>, a: &DMatrix<f64>, zero_tol: f64) -> Result<Inertia> {
    if l.shape() != a.shape() {
        return Err(Error::InvalidInput(format!(
            "shape mismatch: weight {:?} vs matrix {:?}",
            l.shape(),
            a.shape()
        )));
    }
    check_symmetric(a, "inertia_of_product")?;
    let s = spd_sqrt(l)?;
    let conjugated = &s * a * &s;
    let symmetrized = (&conjugated + conjugated.transpose()) * 0.5;
    inertia(&symmetrized, zero_tol)
}

/// Inertia data at a fixed point of a reduced dynamics block.
#[derive(Clone, Debug)]
pub struct InertiaReport {
    pub x_star: DVector<f64>,
    /// Sign counts of the (symmetrized) Jacobian `Dh(x*)`.
    pub direct: Inertia,
    /// Sign counts of the weighted Jacobian `L * Dh(x*)`.
    pub weighted: Inertia,
}

/// Verifies that weighting a gradient-like reduced dynamics by a reduced
/// Laplacian preserves the local signature at a fixed point: the sign
/// counts of `Dh(x*)` and `L * Dh(x*)` must agree. Both the fixed-point
/// residual and the Jacobian symmetry are checked up front; a count
/// mismatch is reported as a verification failure.
pub fn fixed_point_inertia(
    h: &VectorMap,
    l: &ReducedLaplacian,
    x_star: &DVector<f64>,
) -> Result<InertiaReport> {
    h.validate()?;
    let n = x_star.len();
    if h.dim_in() != n || h.dim_out() != n || l.matrix.nrows() != n {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: map {} -> {}, weight {}x{}, point {}",
            h.dim_in(),
            h.dim_out(),
            l.matrix.nrows(),
            l.matrix.ncols(),
            n
        )));
    }
    let residual = h.eval(x_star).amax();
    if residual > FIXED_POINT_TOL {
        return Err(Error::InvalidInput(format!(
            "not a fixed point: |h(x*)| = {residual:.2e}"
        )));
    }
    let jac = jacobian_fd(|v| h.eval(v), x_star, FD_STEP);
    let skew = (&jac - jac.transpose()).amax();
    if skew > JACOBIAN_SYMMETRY_TOL * (1.0 + jac.amax()) {
        return Err(Error::InvalidInput(format!(
            "Jacobian at x* is not symmetric (skew {skew:.2e})"
        )));
    }
    let symmetrized = (&jac + jac.transpose()) * 0.5;
    let direct = inertia(&symmetrized, INERTIA_ZERO_TOL)?;
    let weighted = inertia_of_product(&l.matrix, &symmetrized, INERTIA_ZERO_TOL)?;
    if direct != weighted {
        return Err(Error::VerificationFailure(format!(
            "sign counts changed under the Laplacian weight: {direct:?} vs {weighted:?}"
        )));
    }
    Ok(InertiaReport { x_star: x_star.clone(), direct, weighted })
}

/// A uniform cartesian seed grid in `[lo, hi]^n` with `per_dim` points per
/// axis, for seeding the Newton search.
pub fn seed_grid(n: usize, lo: f64, hi: f64, per_dim: usize) -> Vec<DVector<f64>> {
    assert!(per_dim >= 1, "need at least one point per axis");
    assert!(hi > lo, "empty seed box");
    let count = per_dim.pow(n as u32);
    let mut out = Vec::with_capacity(count);
    for flat in 0..count {
        let mut rest = flat;
        let mut v = DVector::zeros(n);
        for i in 0..n {
            let k = rest % per_dim;
            rest /= per_dim;
            v[i] = if per_dim == 1 {
                (lo + hi) / 2.0
            } else {
                lo + (hi - lo) * k as f64 / (per_dim - 1) as f64
            };
        }
        out.push(v);
    }
    out
}

/// Damped-Newton search for zeros of `f` from every seed. Converged points
/// (`|f| <= 1e-10`) are deduplicated at max-norm distance `1e-6` and the
/// result is sorted coordinatewise, so the output is deterministic.
pub fn find_fixed_points<F>(f: F, seeds: &[DVector<f64>]) -> Vec<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    const MAX_ITER: usize = 50;
    const CONVERGED: f64 = 1e-10;
    const DEDUP: f64 = 1e-6;
    let mut found: Vec<DVector<f64>> = Vec::new();
    for seed in seeds {
        let mut x = seed.clone();
        let mut res = f(&x);
        if res.iter().any(|v| !v.is_finite()) {
            continue;
        }
        for _ in 0..MAX_ITER {
            if res.amax() <= CONVERGED {
                break;
            }
            let jac = jacobian_fd(&f, &x, FD_STEP);
            let Some(step) = jac.lu().solve(&(-&res)) else { break };
            let mut lambda = 1.0_f64;
            let mut advanced = false;
            for _ in 0..12 {
                let candidate = &x + &step * lambda;
                let candidate_res = f(&candidate);
                if candidate_res.iter().all(|v| v.is_finite())
                    && candidate_res.norm() < res.norm()
                {
                    x = candidate;
                    res = candidate_res;
                    advanced = true;
                    break;
                }
                lambda /= 2.0;
            }
            if !advanced {
                break;
            }
        }
        if res.amax() <= CONVERGED && !found.iter().any(|y| (y - &x).amax() <= DEDUP) {
            found.push(x);
        }
    }
    found.sort_by(|a, b| {
        for (u, v) in a.iter().zip(b.iter()) {
            match u.total_cmp(v) {
                std::cmp::Ordering::Equal => continue,
                other => return other,
            }
        }
        std::cmp::Ordering::Equal
    });
    found
}

/// Parameters of the cycling three-population field used by the
/// tetrahedron scenario.
#[derive(Clone, Copy, Debug)]
pub struct GhParams {
    pub mu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GhParams {
    fn default() -> Self {
        GhParams { mu: 1.0, a: 1.0, b: 0.55, c: 1.5 }
    }
}

/// Parameters of the chaotic-block-plus-oscillator field used by the
/// two-triangle scenario.
#[derive(Clone, Copy, Debug)]
pub struct LsParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
}

impl Default for LsParams {
    fn default() -> Self {
        LsParams { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0, a: 0.1, b: 1.5 }
    }
}

/// A showcase run: the realized simplicial flow next to its image under the
/// conjugating map `M`.
pub struct ScenarioRun {
    pub complex: OrientedComplex,
    pub realization: Realization,
    pub field: AssembledField,
    /// The simplicial trajectory, in `C_d` coordinates.
    pub raw: Trajectory,
    /// The same path mapped through `M`, in block coordinates.
    pub transformed: Trajectory,
    /// Largest pointwise conjugacy residual along the stored path.
    pub max_conjugacy_residual: f64,
}

fn run_scenario(
    complex: OrientedComplex,
    realization: Realization,
    u0: &DVector<f64>,
    h: f64,
    t_end: f64,
) -> Result<ScenarioRun> {
    let field = assemble(&complex, &realization.spec)?;
    let theta0 = &realization.m_inv * u0;
    let raw = integrate(&field, &theta0, h, t_end)?;
    let transformed = map_states(&raw, &realization.m);
    let mut worst = 0.0_f64;
    for k in 0..raw.len() {
        worst = worst.max(realization.conjugacy_residual(&field, &raw.state(k)));
    }
    Ok(ScenarioRun { complex, realization, field, raw, transformed, max_conjugacy_residual: worst })
}

/// Realizes the cycling field with one frozen coordinate adjoined on the
/// triangle space of the full complex on four vertices and integrates it.
/// The start point is a seeded perturbation (radius 0.05) of
/// `(1/2, 1/2, 1/2)` with the exact value `1/3` adjoined, pushed through
/// `M^{-1}`.
pub fn scenario_guckenheimer_holmes(
    params: &GhParams,
    h: f64,
    t_end: f64,
    seed: u64,
) -> Result<ScenarioRun> {
    let complex = tetrahedron();
    let h_down = VectorMap::Builtin(BuiltinField::GuckenheimerHolmes {
        mu: params.mu,
        a: params.a,
        b: params.b,
        c: params.c,
    });
    let h_up = VectorMap::zero(1);
    // Columns: three independent rows of B_2, then the kernel direction of
    // B_2 (the image of B_3).
    let m_inv = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 1.0, 0.0, 1.0, //
            1.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, 1.0, 1.0, //
            0.0, 1.0, 1.0, -1.0,
        ],
    );
    let realization = realize_with_basis(&complex, 2, h_down, h_up, m_inv)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u0 = DVector::zeros(4);
    for i in 0..3 {
        u0[i] = 0.5 + rng.random_range(-0.05..0.05);
    }
    u0[3] = 1.0 / 3.0;
    run_scenario(complex, realization, &u0, h, t_end)
}

/// Realizes the chaotic block on the gradient summand and the oscillator
/// block on the curl summand of the edge space of the two-triangle complex,
/// then integrates from a seeded start near `(1, 1, 1, 2, 3)`.
pub fn scenario_lorenz_selkov(
    params: &LsParams,
    h: f64,
    t_end: f64,
    seed: u64,
) -> Result<ScenarioRun> {
    let complex = diamond();
    let h_down = VectorMap::Builtin(BuiltinField::Lorenz {
        sigma: params.sigma,
        rho: params.rho,
        beta: params.beta,
    });
    let h_up = VectorMap::Builtin(BuiltinField::Selkov { a: params.a, b: params.b });
    // Columns: the first three rows of B_1, then the two columns of B_2.
    let m_inv = DMatrix::from_row_slice(
        5,
        5,
        &[
            -1.0, 1.0, 0.0, 1.0, 0.0, //
            0.0, -1.0, 1.0, 1.0, 0.0, //
            -1.0, 0.0, 1.0, -1.0, 1.0, //
            -1.0, 0.0, 0.0, 0.0, -1.0, //
            0.0, 0.0, -1.0, 0.0, 1.0,
        ],
    );
    let realization = realize_with_basis(&complex, 1, h_down, h_up, m_inv)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = [1.0, 1.0, 1.0, 2.0, 3.0];
    let u0 = DVector::from_iterator(5, base.iter().map(|&v| v + rng.random_range(-0.01..0.01)));
    run_scenario(complex, realization, &u0, h, t_end)
}

/// A maximal time span during which one watched coordinate dominates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellInterval {
    pub coord: usize,
    pub start: f64,
    pub end: f64,
}

impl DwellInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Splits a trajectory into spans where a single one of the watched
/// coordinates has absolute value more than `factor` times each of the
/// others. The final interval is clipped by the end of the run, so callers
/// comparing durations should drop it.
pub fn dwell_intervals(traj: &Trajectory, coords: &[usize], factor: f64) -> Vec<DwellInterval> {
    let mut out = Vec::new();
    let mut current: Option<(usize, usize)> = None;
    for k in 0..traj.len() {
        let row = traj.states.row(k);
        let dominant = coords
            .iter()
            .copied()
            .find(|&i| coords.iter().all(|&j| j == i || row[i].abs() > factor * row[j].abs()));
        match (current, dominant) {
            (Some((coord, start)), d) if d != Some(coord) => {
                out.push(DwellInterval { coord, start: traj.times[start], end: traj.times[k] });
                current = d.map(|c| (c, k));
            }
            (None, Some(c)) => current = Some((c, k)),
            _ => {}
        }
    }
    if let Some((coord, start)) = current {
        out.push(DwellInterval {
            coord,
            start: traj.times[start],
            end: *traj.times.last().expect("non-empty trajectory"),
        });
    }
    out
}
