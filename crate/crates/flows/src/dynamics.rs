//! Vector fields on chain spaces: coupling functions, assembly of the
//! simplicial right-hand side, equivalence of couplings, and realization of
//! arbitrary target fields as simplicial flows.
//!
//! The phase space is `C_d(X)`. A field is assembled from up to three terms:
//!
//! ```text
//! dθ/dt = G0(θ) + B_d^T f_down(B_d θ) + B_{d+1} f_up(B_{d+1}^T θ)
//! ```
//!
//! with `G0` componentwise on `C_d`, `f_down` acting on `C_{d-1}` and `f_up`
//! acting on `C_{d+1}`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::OrientedComplex;
use crate::expr::ScalarFunction;
use crate::hodge::{pseudoinverse, to_f64, triple_decomposition, TripleDecomposition};
use crate::{Error, Result};

/// Relative tolerance for pointwise function-equality surrogates.
pub const POINTWISE_RTOL: f64 = 1e-9;
/// Number of seeded random sample points for pointwise checks.
pub const POINTWISE_SAMPLES: usize = 25;

/// Named closed-form target fields.
#[derive(Clone, Debug, PartialEq)]
pub enum BuiltinField {
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    Selkov { a: f64, b: f64 },
    GuckenheimerHolmes { mu: f64, a: f64, b: f64, c: f64 },
}

impl BuiltinField {
    pub fn dim(&self) -> usize {
        match self {
            BuiltinField::Lorenz { .. } => 3,
            BuiltinField::Selkov { .. } => 2,
            BuiltinField::GuckenheimerHolmes { .. } => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinField::Lorenz { .. } => "lorenz",
            BuiltinField::Selkov { .. } => "selkov",
            BuiltinField::GuckenheimerHolmes { .. } => "guckenheimer_holmes",
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match *self {
            BuiltinField::Lorenz { sigma, rho, beta } => {
                m.insert("sigma".into(), sigma);
                m.insert("rho".into(), rho);
                m.insert("beta".into(), beta);
            }
            BuiltinField::Selkov { a, b } => {
                m.insert("a".into(), a);
                m.insert("b".into(), b);
            }
            BuiltinField::GuckenheimerHolmes { mu, a, b, c } => {
                m.insert("mu".into(), mu);
                m.insert("a".into(), a);
                m.insert("b".into(), b);
                m.insert("c".into(), c);
            }
        }
        m
    }

    /// Builds a named field, starting from its standard parameters and
    /// applying overrides. Unknown names or parameters are rejected.
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut field = match name {
            "lorenz" => BuiltinField::Lorenz { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 },
            "selkov" => BuiltinField::Selkov { a: 0.1, b: 1.5 },
            "guckenheimer_holmes" => {
                BuiltinField::GuckenheimerHolmes { mu: 1.0, a: 1.0, b: 0.55, c: 1.5 }
            }
            other => return Err(Error::InvalidInput(format!("unknown field {other:?}"))),
        };
        for (key, &value) in params {
            let slot = match (&mut field, key.as_str()) {
                (BuiltinField::Lorenz { sigma, .. }, "sigma") => sigma,
                (BuiltinField::Lorenz { rho, .. }, "rho") => rho,
                (BuiltinField::Lorenz { beta, .. }, "beta") => beta,
                (BuiltinField::Selkov { a, .. }, "a") => a,
                (BuiltinField::Selkov { b, .. }, "b") => b,
                (BuiltinField::GuckenheimerHolmes { mu, .. }, "mu") => mu,
                (BuiltinField::GuckenheimerHolmes { a, .. }, "a") => a,
                (BuiltinField::GuckenheimerHolmes { b, .. }, "b") => b,
                (BuiltinField::GuckenheimerHolmes { c, .. }, "c") => c,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "field {name:?} has no parameter {key:?}"
                    )))
                }
            };
            *slot = value;
        }
        Ok(field)
    }

    pub fn eval(&self, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            BuiltinField::Lorenz { sigma, rho, beta } => {
                let (x, y, z) = (v[0], v[1], v[2]);
                DVector::from_vec(vec![sigma * (y - x), x * (rho - z) - y, x * y - beta * z])
            }
            BuiltinField::Selkov { a, b } => {
                let (xi, eta) = (v[0], v[1]);
                let cubic = xi * xi * eta / 400.0;
                DVector::from_vec(vec![-xi + a * eta + cubic, b - a * eta - cubic])
            }
            BuiltinField::GuckenheimerHolmes { mu, a, b, c } => {
                let (x, y, z) = (v[0], v[1], v[2]);
                DVector::from_vec(vec![
                    x * (mu - (a * x * x + b * y * y + c * z * z)),
                    y * (mu - (a * y * y + b * z * z + c * x * x)),
                    z * (mu - (a * z * z + b * x * x + c * y * y)),
                ])
            }
        }
    }

    /// Analytic Jacobian, used to validate finite differencing.
    pub fn jacobian(&self, v: &DVector<f64>) -> DMatrix<f64> {
        match *self {
            BuiltinField::Lorenz { sigma, rho, beta } => {
                let (x, y, z) = (v[0], v[1], v[2]);
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[-sigma, sigma, 0.0, rho - z, -1.0, -x, y, x, -beta],
                )
            }
            BuiltinField::Selkov { a, .. } => {
                let (xi, eta) = (v[0], v[1]);
                let dxi = 2.0 * xi * eta / 400.0;
                let deta = xi * xi / 400.0;
                DMatrix::from_row_slice(2, 2, &[-1.0 + dxi, a + deta, -dxi, -a - deta])
            }
            BuiltinField::GuckenheimerHolmes { mu, a, b, c } => {
                let (x, y, z) = (v[0], v[1], v[2]);
                DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        mu - (3.0 * a * x * x + b * y * y + c * z * z),
                        -2.0 * b * x * y,
                        -2.0 * c * x * z,
                        -2.0 * c * x * y,
                        mu - (3.0 * a * y * y + b * z * z + c * x * x),
                        -2.0 * b * y * z,
                        -2.0 * b * x * z,
                        -2.0 * c * y * z,
                        mu - (3.0 * a * z * z + b * x * x + c * y * y),
                    ],
                )
            }
        }
    }

    /// Oddness under global negation of the state.
    pub fn is_odd(&self) -> bool {
        matches!(self, BuiltinField::GuckenheimerHolmes { .. })
    }
}

/// A finite-dimensional map built from a small composable algebra.
///
/// `Compose` applies right to left (function composition order); `DirectSum`
/// splits the input by the summands' input dimensions and concatenates the
/// outputs.
#[derive(Clone, Debug)]
pub enum VectorMap {
    Zero { dim_in: usize, dim_out: usize },
    Componentwise(Vec<ScalarFunction>),
    Linear(DMatrix<f64>),
    Builtin(BuiltinField),
    Compose(Vec<VectorMap>),
    Sum(Vec<VectorMap>),
    DirectSum(Vec<VectorMap>),
}

impl VectorMap {
    pub fn zero(n: usize) -> Self {
        VectorMap::Zero { dim_in: n, dim_out: n }
    }

    pub fn dim_in(&self) -> usize {
        match self {
            VectorMap::Zero { dim_in, .. } => *dim_in,
            VectorMap::Componentwise(fs) => fs.len(),
            VectorMap::Linear(m) => m.ncols(),
            VectorMap::Builtin(b) => b.dim(),
            VectorMap::Compose(maps) => maps.last().map_or(0, VectorMap::dim_in),
            VectorMap::Sum(maps) => maps.first().map_or(0, VectorMap::dim_in),
            VectorMap::DirectSum(maps) => maps.iter().map(VectorMap::dim_in).sum(),
        }
    }

    pub fn dim_out(&self) -> usize {
        match self {
            VectorMap::Zero { dim_out, .. } => *dim_out,
            VectorMap::Componentwise(fs) => fs.len(),
            VectorMap::Linear(m) => m.nrows(),
            VectorMap::Builtin(b) => b.dim(),
            VectorMap::Compose(maps) => maps.first().map_or(0, VectorMap::dim_out),
            VectorMap::Sum(maps) => maps.first().map_or(0, VectorMap::dim_out),
            VectorMap::DirectSum(maps) => maps.iter().map(VectorMap::dim_out).sum(),
        }
    }

    /// Checks internal dimension consistency.
    pub fn validate(&self) -> Result<()> {
        match self {
            VectorMap::Zero { .. }
            | VectorMap::Componentwise(_)
            | VectorMap::Linear(_)
            | VectorMap::Builtin(_) => Ok(()),
            VectorMap::Compose(maps) => {
                if maps.is_empty() {
                    return Err(Error::InvalidInput("empty composition".into()));
                }
                for pair in maps.windows(2) {
                    if pair[0].dim_in() != pair[1].dim_out() {
                        return Err(Error::InvalidInput(format!(
                            "composition mismatch: {} vs {}",
                            pair[0].dim_in(),
                            pair[1].dim_out()
                        )));
                    }
                }
                maps.iter().try_for_each(VectorMap::validate)
            }
            VectorMap::Sum(maps) => {
                if maps.is_empty() {
                    return Err(Error::InvalidInput("empty sum".into()));
                }
                for m in maps {
                    if m.dim_in() != maps[0].dim_in() || m.dim_out() != maps[0].dim_out() {
                        return Err(Error::InvalidInput("sum of mismatched maps".into()));
                    }
                }
                maps.iter().try_for_each(VectorMap::validate)
            }
            VectorMap::DirectSum(maps) => maps.iter().try_for_each(VectorMap::validate),
        }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            VectorMap::Zero { dim_out, .. } => DVector::zeros(*dim_out),
            VectorMap::Componentwise(fs) => {
                DVector::from_iterator(fs.len(), fs.iter().zip(x.iter()).map(|(f, &v)| f.eval(v)))
            }
            VectorMap::Linear(m) => m * x,
            VectorMap::Builtin(b) => b.eval(x),
            VectorMap::Compose(maps) => {
                let mut v = x.clone();
                for m in maps.iter().rev() {
                    v = m.eval(&v);
                }
                v
            }
            VectorMap::Sum(maps) => {
                let mut acc = DVector::zeros(self.dim_out());
                for m in maps {
                    acc += m.eval(x);
                }
                acc
            }
            VectorMap::DirectSum(maps) => {
                let mut out = DVector::zeros(self.dim_out());
                let mut at_in = 0;
                let mut at_out = 0;
                for m in maps {
                    let piece = m.eval(&x.rows(at_in, m.dim_in()).into_owned());
                    out.rows_mut(at_out, m.dim_out()).copy_from(&piece);
                    at_in += m.dim_in();
                    at_out += m.dim_out();
                }
                out
            }
        }
    }

    /// Conservative syntactic oddness: true only when every part is odd.
    pub fn is_odd(&self) -> bool {
        match self {
            VectorMap::Zero { .. } | VectorMap::Linear(_) => true,
            VectorMap::Componentwise(fs) => fs.iter().all(ScalarFunction::is_odd),
            VectorMap::Builtin(b) => b.is_odd(),
            VectorMap::Compose(maps) | VectorMap::Sum(maps) | VectorMap::DirectSum(maps) => {
                maps.iter().all(VectorMap::is_odd)
            }
        }
    }
}

/// A square map used as an internal, up or down coupling.
#[derive(Clone, Debug)]
pub struct CouplingFunction {
    map: VectorMap,
    partition: Option<Vec<Vec<usize>>>,
}

impl CouplingFunction {
    /// Componentwise coupling with one scalar function per basis simplex.
    pub fn componentwise(components: Vec<ScalarFunction>) -> Self {
        CouplingFunction { map: VectorMap::Componentwise(components), partition: None }
    }

    /// The same scalar function on every component.
    pub fn uniform(n: usize, f: ScalarFunction) -> Self {
        CouplingFunction {
            map: VectorMap::Componentwise(vec![f; n]),
            partition: Some(vec![(0..n).collect()]),
        }
    }

    /// Componentwise coupling constant on each partition class.
    pub fn componentwise_classes(
        n: usize,
        classes: &[Vec<usize>],
        funcs: &[ScalarFunction],
    ) -> Result<Self> {
        if classes.len() != funcs.len() {
            return Err(Error::InvalidInput(format!(
                "{} classes but {} functions",
                classes.len(),
                funcs.len()
            )));
        }
        let mut components: Vec<Option<ScalarFunction>> = vec![None; n];
        for (class, f) in classes.iter().zip(funcs) {
            for &i in class {
                if i >= n || components[i].is_some() {
                    return Err(Error::InvalidInput(format!(
                        "partition classes must cover 0..{n} exactly once"
                    )));
                }
                components[i] = Some(f.clone());
            }
        }
        let components: Option<Vec<_>> = components.into_iter().collect();
        let components =
            components.ok_or_else(|| Error::InvalidInput("partition does not cover all indices".into()))?;
        Ok(CouplingFunction {
            map: VectorMap::Componentwise(components),
            partition: Some(classes.to_vec()),
        })
    }

    /// A general (not necessarily componentwise) square map.
    pub fn general(map: VectorMap) -> Result<Self> {
        map.validate()?;
        if map.dim_in() != map.dim_out() {
            return Err(Error::InvalidInput(format!(
                "coupling must be square, got {} -> {}",
                map.dim_in(),
                map.dim_out()
            )));
        }
        Ok(CouplingFunction { map, partition: None })
    }

    pub fn zero(n: usize) -> Self {
        CouplingFunction { map: VectorMap::zero(n), partition: None }
    }

    pub fn arity(&self) -> usize {
        self.map.dim_in()
    }

    pub fn is_componentwise(&self) -> bool {
        matches!(self.map, VectorMap::Componentwise(_) | VectorMap::Zero { .. })
    }

    pub fn components(&self) -> Option<&[ScalarFunction]> {
        match &self.map {
            VectorMap::Componentwise(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn partition(&self) -> Option<&[Vec<usize>]> {
        self.partition.as_deref()
    }

    pub fn is_odd(&self) -> bool {
        self.map.is_odd()
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        self.map.eval(x)
    }

    pub fn map(&self) -> &VectorMap {
        &self.map
    }
}

/// The three optional terms of a simplicial vector field on `C_d(X)`.
#[derive(Clone, Debug)]
pub struct VectorFieldSpec {
    pub d: usize,
    /// Componentwise internal term `G0` on `C_d`.
    pub internal: Option<CouplingFunction>,
    /// Down coupling `f_down` on `C_{d-1}`.
    pub down: Option<CouplingFunction>,
    /// Up coupling `f_up` on `C_{d+1}`.
    pub up: Option<CouplingFunction>,
}

impl VectorFieldSpec {
    pub fn new(d: usize) -> Self {
        VectorFieldSpec { d, internal: None, down: None, up: None }
    }
}

struct CoupledTerm {
    left: DMatrix<f64>,
    right: DMatrix<f64>,
    coupling: CouplingFunction,
}

impl CoupledTerm {
    fn eval(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.left * self.coupling.eval(&(&self.right * theta))
    }
}

/// An evaluable right-hand side on `C_d(X)`.
pub struct AssembledField {
    n: usize,
    internal: Option<CouplingFunction>,
    down: Option<CoupledTerm>,
    up: Option<CoupledTerm>,
}

impl AssembledField {
    /// Builds a field from explicit boundary matrices: `down` couples through
    /// the given `B_d` (term `B_d^T f(B_d θ)`), `up` through the given
    /// `B_{d+1}` (term `B_{d+1} f(B_{d+1}^T θ)`).
    pub fn from_parts(
        n: usize,
        internal: Option<CouplingFunction>,
        down: Option<(DMatrix<f64>, CouplingFunction)>,
        up: Option<(DMatrix<f64>, CouplingFunction)>,
    ) -> Result<Self> {
        if let Some(g0) = &internal {
            if !g0.is_componentwise() {
                return Err(Error::ComponentwiseRequired);
            }
            check_arity("internal term", g0.arity(), n)?;
        }
        let down = down
            .map(|(bd, coupling)| {
                check_arity("down coupling", coupling.arity(), bd.nrows())?;
                check_arity("down boundary", bd.ncols(), n)?;
                coupling.map.validate()?;
                Ok::<_, Error>(CoupledTerm { left: bd.transpose(), right: bd, coupling })
            })
            .transpose()?;
        let up = up
            .map(|(bup, coupling)| {
                check_arity("up coupling", coupling.arity(), bup.ncols())?;
                check_arity("up boundary", bup.nrows(), n)?;
                coupling.map.validate()?;
                Ok::<_, Error>(CoupledTerm { left: bup.clone(), right: bup.transpose(), coupling })
            })
            .transpose()?;
        Ok(AssembledField { n, internal, down, up })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn eval(&self, theta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        if let Some(g0) = &self.internal {
            out += g0.eval(theta);
        }
        if let Some(term) = &self.down {
            out += term.eval(theta);
        }
        if let Some(term) = &self.up {
            out += term.eval(theta);
        }
        out
    }

    /// Central-difference Jacobian.
    pub fn jacobian_fd(&self, theta: &DVector<f64>, step: f64) -> DMatrix<f64> {
        jacobian_fd(|v| self.eval(v), theta, step)
    }
}

fn check_arity(context: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidInput(format!(
            "{context}: arity {got} does not match required {expected}"
        )));
    }
    Ok(())
}

/// Assembles the right-hand side of the simplicial system for `spec` on `X`.
pub fn assemble(x: &OrientedComplex, spec: &VectorFieldSpec) -> Result<AssembledField> {
    if spec.d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d: spec.d, max: x.d_max() });
    }
    let n = x.size(spec.d);
    let down = spec
        .down
        .as_ref()
        .map(|f| (to_f64(&x.boundary_or_zero(spec.d)), f.clone()));
    let up = spec
        .up
        .as_ref()
        .map(|f| (to_f64(&x.boundary_or_zero(spec.d + 1)), f.clone()));
    AssembledField::from_parts(n, spec.internal.clone(), down, up)
}

/// Central-difference Jacobian of an arbitrary map.
pub fn jacobian_fd<F>(f: F, x: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let n = x.len();
    let m = f(x).len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += step;
        minus[j] -= step;
        let column = (f(&plus) - f(&minus)) / (2.0 * step);
        jac.set_column(j, &column);
    }
    jac
}

/// Which coupling slot an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

/// The canonical representative of a coupling's equivalence class: the map
/// conjugated by the relevant projection (`P_{d+1} f P_{d+1}` for up
/// couplings of a `d`-dimensional system, `Q_{d-1} f Q_{d-1}` for down).
pub fn canonical_representative(
    x: &OrientedComplex,
    f: &CouplingFunction,
    d: usize,
    direction: Direction,
) -> Result<CouplingFunction> {
    let proj = match direction {
        Direction::Up => {
            let level = d + 1;
            check_arity("up coupling", f.arity(), x.size(level))?;
            triple_decomposition(x, level)?.p
        }
        Direction::Down => {
            if d == 0 {
                return Err(Error::DimensionOutOfRange { d: 0, max: x.d_max() });
            }
            let level = d - 1;
            check_arity("down coupling", f.arity(), x.size(level))?;
            triple_decomposition(x, level)?.q
        }
    };
    CouplingFunction::general(VectorMap::Compose(vec![
        VectorMap::Linear(proj.clone()),
        f.map.clone(),
        VectorMap::Linear(proj),
    ]))
}

/// Deterministic sample grid: the origin, all `±e_i`, and the all-ones vector.
pub fn unit_grid(n: usize) -> Vec<DVector<f64>> {
    let mut pts = vec![DVector::zeros(n)];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        pts.push(e.clone());
        e[i] = -1.0;
        pts.push(e);
    }
    pts.push(DVector::from_element(n, 1.0));
    pts
}

/// Seeded uniform random points in `[-scale, scale]^n`.
pub fn random_points(n: usize, count: usize, seed: u64, scale: f64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| DVector::from_fn(n, |_, _| rng.random_range(-scale..=scale)))
        .collect()
}

fn maps_agree(a: &VectorMap, b: &VectorMap, n: usize) -> bool {
    let mut points = unit_grid(n);
    points.extend(random_points(n, POINTWISE_SAMPLES, 0x5eed, 2.0));
    points.iter().all(|pt| {
        let va = a.eval(pt);
        let vb = b.eval(pt);
        (va - &vb).amax() <= POINTWISE_RTOL * (1.0 + vb.amax())
    })
}

/// Numerical surrogate for up-equivalence of two couplings on `C_d`:
/// compares `P_d f P_d` and `P_d g P_d` on a deterministic grid plus seeded
/// random points. A numerical test, not a proof.
pub fn equivalent_up(
    x: &OrientedComplex,
    f: &CouplingFunction,
    g: &CouplingFunction,
    d: usize,
) -> Result<bool> {
    let n = x.size(d);
    check_arity("coupling f", f.arity(), n)?;
    check_arity("coupling g", g.arity(), n)?;
    let p = triple_decomposition(x, d)?.p;
    let wrap = |m: &CouplingFunction| {
        VectorMap::Compose(vec![
            VectorMap::Linear(p.clone()),
            m.map.clone(),
            VectorMap::Linear(p.clone()),
        ])
    };
    Ok(maps_agree(&wrap(f), &wrap(g), n))
}

/// A realization of a target field as a simplicial flow, together with the
/// conjugating isomorphism.
#[derive(Clone, Debug)]
pub struct Realization {
    pub d: usize,
    pub spec: VectorFieldSpec,
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    pub r_down: usize,
    pub r_up: usize,
    pub w: usize,
    /// The block target `H_down ⊕ H_up ⊕ 0` acting in `M`-coordinates.
    pub target: VectorMap,
}

impl Realization {
    /// Max-norm of `M G(θ) - H(M θ)` at one point, given the assembled `G`.
    pub fn conjugacy_residual(&self, field: &AssembledField, theta: &DVector<f64>) -> f64 {
        let lhs = &self.m * field.eval(theta);
        let rhs = self.target.eval(&(&self.m * theta));
        (lhs - rhs).amax()
    }
}

/// Realizes `H_down` on the down summand and `H_up` on the up summand of
/// `C_d(X)` as a simplicial flow, choosing the default basis: independent
/// rows of `B_d`, then independent columns of `B_{d+1}`, then an orthonormal
/// basis of the harmonic summand.
pub fn realize(
    x: &OrientedComplex,
    d: usize,
    h_down: VectorMap,
    h_up: VectorMap,
) -> Result<Realization> {
    let dec = triple_decomposition(x, d)?;
    let m_inv = default_basis(x, d, &dec);
    realize_in_basis(x, d, dec, h_down, h_up, m_inv, false)
}

/// Same as [`realize`] but with a caller-supplied `M^{-1}` whose columns must
/// span the three summands in order (down block, up block, harmonic block).
pub fn realize_with_basis(
    x: &OrientedComplex,
    d: usize,
    h_down: VectorMap,
    h_up: VectorMap,
    m_inv: DMatrix<f64>,
) -> Result<Realization> {
    let dec = triple_decomposition(x, d)?;
    realize_in_basis(x, d, dec, h_down, h_up, m_inv, true)
}

fn default_basis(x: &OrientedComplex, d: usize, dec: &TripleDecomposition) -> DMatrix<f64> {
    let n = dec.n;
    let bd = to_f64(&x.boundary_or_zero(d));
    let bup = to_f64(&x.boundary_or_zero(d + 1));
    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let rows: Vec<DVector<f64>> = (0..bd.nrows()).map(|i| bd.row(i).transpose()).collect();
    columns.extend(greedy_independent(&rows, dec.r_down));
    let cols: Vec<DVector<f64>> = (0..bup.ncols()).map(|j| bup.column(j).into_owned()).collect();
    columns.extend(greedy_independent(&cols, dec.r_up));
    for j in 0..dec.w {
        columns.push(dec.basis_harmonic.column(j).into_owned());
    }
    DMatrix::from_columns(&columns)
}

/// First vectors (in the given order) forming a basis of the span, selected
/// by Gram-Schmidt with a residual threshold.
fn greedy_independent(vectors: &[DVector<f64>], target_rank: usize) -> Vec<DVector<f64>> {
    let mut chosen: Vec<DVector<f64>> = Vec::new();
    let mut ortho: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        if chosen.len() == target_rank {
            break;
        }
        let mut residual = v.clone();
        for u in &ortho {
            let coeff = u.dot(&residual);
            residual -= u * coeff;
        }
        let norm = residual.norm();
        if norm > 1e-8 * (1.0 + v.norm()) {
            chosen.push(v.clone());
            ortho.push(residual / norm);
        }
    }
    assert_eq!(chosen.len(), target_rank, "vectors span less than the expected rank");
    chosen
}

fn realize_in_basis(
    x: &OrientedComplex,
    d: usize,
    dec: TripleDecomposition,
    h_down: VectorMap,
    h_up: VectorMap,
    m_inv: DMatrix<f64>,
    validate_blocks: bool,
) -> Result<Realization> {
    let n = dec.n;
    h_down.validate()?;
    h_up.validate()?;
    if h_down.dim_in() != dec.r_down || h_down.dim_out() != dec.r_down {
        return Err(Error::InvalidInput(format!(
            "down target must act on {} dims, got {} -> {}",
            dec.r_down,
            h_down.dim_in(),
            h_down.dim_out()
        )));
    }
    if h_up.dim_in() != dec.r_up || h_up.dim_out() != dec.r_up {
        return Err(Error::InvalidInput(format!(
            "up target must act on {} dims, got {} -> {}",
            dec.r_up,
            h_up.dim_in(),
            h_up.dim_out()
        )));
    }
    if m_inv.shape() != (n, n) {
        return Err(Error::InvalidInput(format!(
            "basis matrix must be {n} x {n}, got {:?}",
            m_inv.shape()
        )));
    }
    if validate_blocks {
        let blocks = [(&dec.p, 0, dec.r_down), (&dec.q, dec.r_down, dec.r_up), (&dec.r, dec.r_down + dec.r_up, dec.w)];
        for (proj, start, len) in blocks {
            for j in start..start + len {
                let v = m_inv.column(j).into_owned();
                let residual = (proj * &v - &v).amax();
                if residual > 1e-9 * (1.0 + v.amax()) {
                    return Err(Error::InvalidInput(format!(
                        "basis column {j} does not lie in its summand (residual {residual:.2e})"
                    )));
                }
            }
        }
    }
    let m = m_inv
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("basis matrix is not invertible".into()))?;

    let bd = to_f64(&x.boundary_or_zero(d));
    let bup = to_f64(&x.boundary_or_zero(d + 1));

    let block_map = |start: usize, len: usize, h: &VectorMap| -> VectorMap {
        VectorMap::Compose(vec![
            VectorMap::Linear(m_inv.columns(start, len).into_owned()),
            h.clone(),
            VectorMap::Linear(m.rows(start, len).into_owned()),
        ])
    };

    let mut spec = VectorFieldSpec::new(d);
    if d >= 1 {
        let g1 = block_map(0, dec.r_down, &h_down);
        let pinv_bd = pseudoinverse(&bd).pinv;
        spec.down = Some(CouplingFunction::general(VectorMap::Compose(vec![
            VectorMap::Linear(pinv_bd.transpose()),
            g1,
            VectorMap::Linear(pinv_bd),
        ]))?);
    }
    if d < x.d_max() {
        let g2 = block_map(dec.r_down, dec.r_up, &h_up);
        let pinv_bup = pseudoinverse(&bup).pinv;
        spec.up = Some(CouplingFunction::general(VectorMap::Compose(vec![
            VectorMap::Linear(pinv_bup.clone()),
            g2,
            VectorMap::Linear(pinv_bup.transpose()),
        ]))?);
    }

    let target = VectorMap::DirectSum(vec![h_down, h_up, VectorMap::zero(dec.w)]);
    Ok(Realization {
        d,
        spec,
        m,
        m_inv,
        r_down: dec.r_down,
        r_up: dec.r_up,
        w: dec.w,
        target,
    })
}

/// The conjugacy class `(r_d, r_{d+1}, n_d)` of systems on `C_d(X)`.
pub fn classify(x: &OrientedComplex, d: usize) -> Result<(usize, usize, usize)> {
    let dec = triple_decomposition(x, d)?;
    Ok((dec.r_down, dec.r_up, dec.n))
}

/// The class when the up coupling is ignored (pure down coupling), as for a
/// top-dimensional flow: `(r_d, 0, n_d)`.
pub fn classify_ignoring_up(x: &OrientedComplex, d: usize) -> Result<(usize, usize, usize)> {
    let (r_down, _, n) = classify(x, d)?;
    Ok((r_down, 0, n))
}

/// Numerically tests exactness: the Jacobians of the canonical
/// representatives must be symmetric at sampled points (finite differences,
/// tolerance 1e-6). Componentwise couplings are exact by construction.
pub fn is_exact(x: &OrientedComplex, spec: &VectorFieldSpec) -> Result<bool> {
    const TOL: f64 = 1e-6;
    let check = |f: &CouplingFunction, direction: Direction| -> Result<bool> {
        if f.is_componentwise() {
            return Ok(true);
        }
        let rep = canonical_representative(x, f, spec.d, direction)?;
        let n = rep.arity();
        let mut points = vec![DVector::from_element(n, 0.3)];
        points.extend(random_points(n, 4, 0xace, 1.0));
        for pt in &points {
            let jac = jacobian_fd(|v| rep.eval(v), pt, 1e-6);
            if (&jac - jac.transpose()).amax() > TOL {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let up_ok = match &spec.up {
        Some(f) => check(f, Direction::Up)?,
        None => true,
    };
    let down_ok = match &spec.down {
        Some(f) => check(f, Direction::Down)?,
        None => true,
    };
    Ok(up_ok && down_ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{diamond, tetrahedron};
    use crate::expr::ScalarFunction;

    fn odd_cubic() -> ScalarFunction {
        ScalarFunction::parse("x - 0.5*x^3").unwrap()
    }

    #[test]
    fn assembled_up_coupling_matches_hand_formula() {
        let x = diamond();
        let f = odd_cubic();
        let spec = VectorFieldSpec {
            d: 1,
            internal: None,
            down: None,
            up: Some(CouplingFunction::uniform(2, f.clone())),
        };
        let field = assemble(&x, &spec).unwrap();
        let theta = DVector::from_vec(vec![0.3, -0.7, 1.1, 0.4, -0.2]);
        let got = field.eval(&theta);
        let y1 = f.eval(theta[0] + theta[1] - theta[2]);
        let y2 = f.eval(theta[2] - theta[3] + theta[4]);
        let expected = DVector::from_vec(vec![y1, y1, -y1 + y2, -y2, y2]);
        assert!((got - expected).amax() < 1e-14);
    }

    #[test]
    fn assembled_down_coupling_matches_hand_formula() {
        let x = diamond();
        let f = odd_cubic();
        let spec = VectorFieldSpec {
            d: 2,
            internal: None,
            down: Some(CouplingFunction::uniform(5, f.clone())),
            up: None,
        };
        let field = assemble(&x, &spec).unwrap();
        let theta = DVector::from_vec(vec![0.8, -0.6]);
        let got = field.eval(&theta);
        let (x1, x2) = (theta[0], theta[1]);
        let expected = DVector::from_vec(vec![
            2.0 * f.eval(x1) + f.eval(x1 - x2),
            2.0 * f.eval(x2) + f.eval(x2 - x1),
        ]);
        assert!((got - expected).amax() < 1e-14);
    }

    #[test]
    fn zero_couplings_give_zero_field() {
        let x = diamond();
        let spec = VectorFieldSpec {
            d: 1,
            internal: Some(CouplingFunction::zero(5)),
            down: Some(CouplingFunction::zero(4)),
            up: Some(CouplingFunction::zero(2)),
        };
        let field = assemble(&x, &spec).unwrap();
        let theta = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(field.eval(&theta).amax(), 0.0);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let x = diamond();
        let spec = VectorFieldSpec {
            d: 1,
            internal: None,
            down: None,
            up: Some(CouplingFunction::uniform(3, odd_cubic())),
        };
        assert!(assemble(&x, &spec).is_err());
    }

    #[test]
    fn canonical_representative_is_identity_on_full_rank_up() {
        // rank B_2 = n_2 = 2 on the diamond, so P is the identity and the
        // representative equals the original coupling.
        let x = diamond();
        let f = CouplingFunction::uniform(2, odd_cubic());
        let rep = canonical_representative(&x, &f, 1, Direction::Up).unwrap();
        for pt in unit_grid(2) {
            assert!((rep.eval(&pt) - f.eval(&pt)).amax() < 1e-12);
        }
    }

    #[test]
    fn representative_substitution_preserves_assembly() {
        let x = tetrahedron();
        // Down coupling on edges for the triangle system: Q_1 has rank 3 < 6.
        let f = CouplingFunction::componentwise(vec![
            ScalarFunction::parse("x + 1").unwrap(),
            ScalarFunction::parse("x^3").unwrap(),
            ScalarFunction::parse("2*x").unwrap(),
            ScalarFunction::parse("sin(x)").unwrap(),
            ScalarFunction::parse("x - x^3").unwrap(),
            ScalarFunction::parse("0.5*x^5").unwrap(),
        ]);
        let rep = canonical_representative(&x, &f, 2, Direction::Down).unwrap();
        let with_f = assemble(
            &x,
            &VectorFieldSpec { d: 2, internal: None, down: Some(f), up: None },
        )
        .unwrap();
        let with_rep = assemble(
            &x,
            &VectorFieldSpec { d: 2, internal: None, down: Some(rep), up: None },
        )
        .unwrap();
        for pt in random_points(4, 20, 99, 1.5) {
            let a = with_f.eval(&pt);
            let b = with_rep.eval(&pt);
            assert!((a - &b).amax() <= 1e-10 * (1.0 + b.amax()));
        }
    }

    #[test]
    fn equivalence_detects_scaling() {
        let x = diamond();
        let f = CouplingFunction::uniform(2, ScalarFunction::identity());
        let g = CouplingFunction::uniform(2, ScalarFunction::monomial(2.0, 1));
        assert!(equivalent_up(&x, &f, &f, 2).unwrap());
        assert!(!equivalent_up(&x, &f, &g, 2).unwrap());
        let rep = canonical_representative(&x, &f, 1, Direction::Up).unwrap();
        assert!(equivalent_up(&x, &f, &rep, 2).unwrap());
    }

    #[test]
    fn realize_round_trip_on_tetrahedron_triangles() {
        let x = tetrahedron();
        let h_down = VectorMap::Componentwise(vec![odd_cubic(); 3]);
        let h_up = VectorMap::zero(1);
        let real = realize(&x, 2, h_down, h_up).unwrap();
        let field = assemble(&x, &real.spec).unwrap();
        for pt in random_points(4, 20, 7, 1.0) {
            assert!(real.conjugacy_residual(&field, &pt) < 1e-9);
        }
    }

    #[test]
    fn realize_respects_caller_basis() {
        let x = tetrahedron();
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
        let real = realize_with_basis(
            &x,
            2,
            VectorMap::Builtin(BuiltinField::from_name("guckenheimer_holmes", &BTreeMap::new()).unwrap()),
            VectorMap::zero(1),
            m_inv.clone(),
        )
        .unwrap();
        assert_eq!(real.m_inv, m_inv);
        let field = assemble(&x, &real.spec).unwrap();
        for pt in random_points(4, 10, 3, 0.8) {
            assert!(real.conjugacy_residual(&field, &pt) < 1e-9);
        }
    }

    #[test]
    fn realize_rejects_bad_basis_and_dims() {
        let x = tetrahedron();
        let swapped = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 1.0, 0.0, 1.0, //
                -1.0, 0.0, 0.0, 1.0, //
                1.0, 0.0, 1.0, 0.0, //
                -1.0, 1.0, 1.0, 0.0,
            ],
        );
        // Columns 1 and 4 exchanged: the first column is the kernel vector,
        // which is not in the down summand.
        assert!(realize_with_basis(
            &x,
            2,
            VectorMap::Componentwise(vec![odd_cubic(); 3]),
            VectorMap::zero(1),
            swapped
        )
        .is_err());
        assert!(realize(&x, 2, VectorMap::zero(2), VectorMap::zero(1)).is_err());
    }

    #[test]
    fn classification_triples() {
        assert_eq!(classify(&diamond(), 1).unwrap(), (3, 2, 5));
        assert_eq!(classify(&tetrahedron(), 2).unwrap(), (3, 1, 4));
        assert_eq!(classify_ignoring_up(&tetrahedron(), 2).unwrap(), (3, 0, 4));
        let v = crate::complex::OrientedComplex::build_complex(&[vec![1]]).unwrap();
        assert_eq!(classify(&v, 0).unwrap(), (0, 0, 1));
    }

    #[test]
    fn componentwise_couplings_are_exact() {
        let x = diamond();
        let spec = VectorFieldSpec {
            d: 1,
            internal: None,
            down: Some(CouplingFunction::uniform(4, odd_cubic())),
            up: Some(CouplingFunction::uniform(2, odd_cubic())),
        };
        assert!(is_exact(&x, &spec).unwrap());
    }

    #[test]
    fn rotational_coupling_is_not_exact() {
        let x = diamond();
        // P_2 is the identity here, so a rotation survives projection.
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let spec = VectorFieldSpec {
            d: 1,
            internal: None,
            down: None,
            up: Some(CouplingFunction::general(VectorMap::Linear(rot)).unwrap()),
        };
        assert!(!is_exact(&x, &spec).unwrap());
    }

    #[test]
    fn gradient_coupling_is_exact() {
        let x = diamond();
        // Gradient of phi(x, y) = (x + y)^4 / 4: both components are (x + y)^3.
        let grad = VectorMap::Compose(vec![
            VectorMap::Linear(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0])),
            VectorMap::Componentwise(vec![
                ScalarFunction::parse("x^3").unwrap(),
                ScalarFunction::zero(),
            ]),
            VectorMap::Linear(DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0])),
        ]);
        let sym = VectorMap::Linear(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        for map in [sym, grad] {
            let spec = VectorFieldSpec {
                d: 1,
                internal: None,
                down: None,
                up: Some(CouplingFunction::general(map).unwrap()),
            };
            assert!(is_exact(&x, &spec).unwrap());
        }
    }

    #[test]
    fn builtin_jacobians_match_finite_differences() {
        let fields = [
            BuiltinField::from_name("lorenz", &BTreeMap::new()).unwrap(),
            BuiltinField::from_name("selkov", &BTreeMap::new()).unwrap(),
            BuiltinField::from_name("guckenheimer_holmes", &BTreeMap::new()).unwrap(),
        ];
        for f in fields {
            let pt = DVector::from_fn(f.dim(), |i, _| 0.4 + 0.3 * i as f64);
            let fd = jacobian_fd(|v| f.eval(v), &pt, 1e-6);
            assert!(
                (fd - f.jacobian(&pt)).amax() < 1e-5,
                "jacobian mismatch for {}",
                f.name()
            );
        }
    }

    #[test]
    fn builtin_parameter_overrides() {
        let mut params = BTreeMap::new();
        params.insert("rho".to_string(), 0.5);
        let f = BuiltinField::from_name("lorenz", &params).unwrap();
        assert_eq!(f.params()["rho"], 0.5);
        assert_eq!(f.params()["sigma"], 10.0);
        params.insert("nope".to_string(), 1.0);
        assert!(BuiltinField::from_name("lorenz", &params).is_err());
        assert!(BuiltinField::from_name("unknown", &BTreeMap::new()).is_err());
    }

    #[test]
    fn assembled_field_vanishes_on_harmonic_summand() {
        // Hollow triangle at d=1 has a harmonic direction; couplings cannot
        // move the state along it.
        let x = crate::complex::OrientedComplex::build_complex(&[
            vec![1, 2],
            vec![2, 3],
            vec![1, 3],
        ])
        .unwrap();
        let dec = triple_decomposition(&x, 1).unwrap();
        assert_eq!(dec.w, 1);
        let spec = VectorFieldSpec {
            d: 1,
            internal: None,
            down: Some(CouplingFunction::uniform(3, odd_cubic())),
            up: None,
        };
        let field = assemble(&x, &spec).unwrap();
        for pt in random_points(3, 10, 5, 1.0) {
            let g = field.eval(&pt);
            assert!((&dec.r * g).amax() < 1e-12);
        }
    }
}
