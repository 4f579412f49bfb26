//! Anti-colorings of simplices, balance checks for invariant anti-synchrony
//! subspaces, exhaustive enumeration, and a randomized dynamical oracle.
//!
//! An anti-coloring assigns each `d`-simplex a signed color `+c`, `-c`, or
//! `0`. Its anti-synchrony subspace collects the states that are equal on
//! same-colored simplices, opposite on oppositely colored ones, and zero on
//! zero-colored ones. Balance (with respect to a partition of the coupling
//! level) is the exact combinatorial condition under which that subspace is
//! invariant for every admissible odd coupling.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::OrientedComplex;
use crate::dynamics::{AssembledField, CouplingFunction, Direction, POINTWISE_RTOL};
use crate::expr::ScalarFunction;
use crate::hodge::to_f64;
use crate::{Error, Result};

/// Largest number of simplices for which exhaustive enumeration of
/// anti-colorings is attempted by default.
pub const ENUMERATION_GUARD: usize = 12;

/// An exact element of the free abelian group on the color set, indexed by
/// color position.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ColorVector {
    terms: BTreeMap<usize, i64>,
}

impl ColorVector {
    pub fn zero() -> Self {
        ColorVector::default()
    }

    pub fn single(color: usize, coeff: i64) -> Self {
        ColorVector::from_entries([(color, coeff)])
    }

    pub fn from_entries<I: IntoIterator<Item = (usize, i64)>>(entries: I) -> Self {
        let mut terms = BTreeMap::new();
        for (color, coeff) in entries {
            let slot = terms.entry(color).or_insert(0);
            *slot += coeff;
        }
        terms.retain(|_, v| *v != 0);
        ColorVector { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, color: usize) -> i64 {
        self.terms.get(&color).copied().unwrap_or(0)
    }

    pub fn add_scaled(&mut self, other: &ColorVector, scale: i64) {
        for (&color, &coeff) in &other.terms {
            let slot = self.terms.entry(color).or_insert(0);
            *slot += scale * coeff;
        }
        self.terms.retain(|_, v| *v != 0);
    }

    pub fn neg(&self) -> ColorVector {
        ColorVector { terms: self.terms.iter().map(|(&c, &v)| (c, -v)).collect() }
    }

    /// Representative of `{self, -self}` whose first nonzero coefficient is
    /// positive, together with the sign relating `self` to it.
    pub fn canonical(&self) -> (ColorVector, i64) {
        match self.terms.values().next() {
            Some(&first) if first < 0 => (self.neg(), -1),
            _ => (self.clone(), 1),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.terms.iter().map(|(&c, &v)| (c, v))
    }

    /// Renders the vector against a color name table, e.g. `c1 - 2*c3`.
    pub fn display_with(&self, colors: &[String]) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (color, coeff)) in self.terms().enumerate() {
            let name = colors.get(color).cloned().unwrap_or_else(|| format!("k{color}"));
            let magnitude = coeff.abs();
            if i == 0 {
                if coeff < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if coeff < 0 { " - " } else { " + " });
            }
            if magnitude == 1 {
                out.push_str(&name);
            } else {
                out.push_str(&format!("{magnitude}*{name}"));
            }
        }
        out
    }
}

/// The signed color of one simplex.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignedColor {
    Zero,
    Plus(usize),
    Minus(usize),
}

impl SignedColor {
    pub fn color(&self) -> Option<usize> {
        match self {
            SignedColor::Zero => None,
            SignedColor::Plus(c) | SignedColor::Minus(c) => Some(*c),
        }
    }

    pub fn sign(&self) -> i64 {
        match self {
            SignedColor::Zero => 0,
            SignedColor::Plus(_) => 1,
            SignedColor::Minus(_) => -1,
        }
    }
}

/// A signed coloring of the `d`-simplices against a named color table.
#[derive(Clone, Debug, PartialEq)]
pub struct AntiColoring {
    d: usize,
    values: Vec<SignedColor>,
    colors: Vec<String>,
}

impl AntiColoring {
    pub fn new(d: usize, values: Vec<SignedColor>, colors: Vec<String>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for name in &colors {
            if name.is_empty() || name == "0" {
                return Err(Error::InvalidInput(format!("invalid color name {name:?}")));
            }
            if !seen.insert(name) {
                return Err(Error::InvalidInput(format!("duplicate color name {name:?}")));
            }
        }
        for v in &values {
            if let Some(c) = v.color() {
                if c >= colors.len() {
                    return Err(Error::InvalidInput(format!(
                        "color index {c} out of range for {} colors",
                        colors.len()
                    )));
                }
            }
        }
        Ok(AntiColoring { d, values, colors })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[SignedColor] {
        &self.values
    }

    pub fn colors(&self) -> &[String] {
        &self.colors
    }

    /// The coloring as an integer matrix with one row per simplex and one
    /// column per color.
    pub fn to_matrix(&self) -> DMatrix<i64> {
        let mut m = DMatrix::zeros(self.values.len(), self.colors.len());
        for (i, v) in self.values.iter().enumerate() {
            if let Some(c) = v.color() {
                m[(i, c)] = v.sign();
            }
        }
        m
    }
}

/// An ordered partition of the simplex positions `0..n` at one level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplexPartition {
    classes: Vec<Vec<usize>>,
}

impl SimplexPartition {
    /// The single-class partition: one coupling function for every simplex.
    pub fn trivial(n: usize) -> Self {
        SimplexPartition { classes: vec![(0..n).collect()] }
    }

    pub fn new(n: usize, classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        for class in &classes {
            if class.is_empty() {
                return Err(Error::InvalidInput("empty partition class".into()));
            }
            for &i in class {
                if i >= n || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "partition must cover 0..{n} exactly once"
                    )));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput(format!("partition must cover 0..{n} exactly once")));
        }
        Ok(SimplexPartition { classes })
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn size(&self) -> usize {
        self.classes.iter().map(Vec::len).sum()
    }
}

fn coupling_level(x: &OrientedComplex, d: usize, direction: Direction) -> Result<usize> {
    match direction {
        Direction::Up => {
            if d >= x.d_max() {
                return Err(Error::DimensionOutOfRange { d: d + 1, max: x.d_max() });
            }
            Ok(d + 1)
        }
        Direction::Down => {
            if d == 0 {
                return Err(Error::DimensionOutOfRange { d: 0, max: x.d_max() });
            }
            Ok(d - 1)
        }
    }
}

/// The exact induced coloring on the coupling level: row `t` of
/// `B_{d+1}^T K` (up) or `B_d K` (down), as elements of the free abelian
/// group on the colors.
pub fn induced_coloring(
    x: &OrientedComplex,
    k: &AntiColoring,
    direction: Direction,
) -> Result<Vec<ColorVector>> {
    let d = k.d();
    if k.len() != x.size(d) {
        return Err(Error::InvalidInput(format!(
            "coloring has {} values but the complex has {} simplices at dimension {d}",
            k.len(),
            x.size(d)
        )));
    }
    coupling_level(x, d, direction)?;
    let k_mat = k.to_matrix();
    let induced = match direction {
        Direction::Up => x.boundary_or_zero(d + 1).transpose() * k_mat,
        Direction::Down => x.boundary_or_zero(d) * k_mat,
    };
    Ok((0..induced.nrows())
        .map(|t| ColorVector::from_entries((0..induced.ncols()).map(|c| (c, induced[(t, c)]))))
        .collect())
}

/// Why an integer vector fails to lie in the anti-synchrony pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeltaViolation {
    /// A zero-colored simplex carries a nonzero value.
    NotZero { simplex: usize, value: i64 },
    /// A simplex disagrees with the first simplex of the same color.
    Mismatch { simplex: usize, reference: usize, value: i64, expected: i64 },
}

/// Exact membership of an integer vector in the anti-synchrony pattern of
/// `k`: equal entries on same-colored simplices, opposite entries on
/// oppositely colored ones, zero on zero-colored ones. Returns the first
/// violation in simplex order, or `None` for members.
pub fn delta_membership(k: &AntiColoring, v: &[i64]) -> Option<DeltaViolation> {
    assert_eq!(k.len(), v.len(), "vector length must match the coloring");
    let mut reference: BTreeMap<usize, (usize, i64)> = BTreeMap::new();
    for (i, value) in v.iter().copied().enumerate() {
        match k.values()[i] {
            SignedColor::Zero => {
                if value != 0 {
                    return Some(DeltaViolation::NotZero { simplex: i, value });
                }
            }
            sc => {
                let c = sc.color().expect("non-zero signed color");
                let signed = sc.sign() * value;
                match reference.get(&c) {
                    None => {
                        reference.insert(c, (i, signed));
                    }
                    Some(&(first, expected_signed)) => {
                        if signed != expected_signed {
                            return Some(DeltaViolation::Mismatch {
                                simplex: i,
                                reference: first,
                                value,
                                expected: sc.sign() * expected_signed,
                            });
                        }
                    }
                }
            }
        }
    }
    None
}

/// Largest deviation of a real vector from the anti-synchrony pattern of
/// `k`, measured against the first simplex of each color.
pub fn delta_residual(k: &AntiColoring, v: &DVector<f64>) -> f64 {
    assert_eq!(k.len(), v.len(), "vector length must match the coloring");
    let mut reference: BTreeMap<usize, f64> = BTreeMap::new();
    let mut worst: f64 = 0.0;
    for (i, &value) in v.iter().enumerate() {
        match k.values()[i] {
            SignedColor::Zero => worst = worst.max(value.abs()),
            sc => {
                let c = sc.color().expect("non-zero signed color");
                let signed = sc.sign() as f64 * value;
                match reference.get(&c) {
                    None => {
                        reference.insert(c, signed);
                    }
                    Some(&expected) => worst = worst.max((signed - expected).abs()),
                }
            }
        }
    }
    worst
}

/// Outcome of a balance check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceCheck {
    pub balanced: bool,
    pub witness: Option<BalanceWitness>,
}

/// The first filtered indicator whose mapped-back image escapes the
/// anti-synchrony pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BalanceWitness {
    /// Index of the partition class the violation occurred in.
    pub class_index: usize,
    /// Canonical induced color value whose indicator fails.
    pub representative: ColorVector,
    /// The mapped-back integer vector on the `d`-simplices.
    pub image: Vec<i64>,
    pub violation: DeltaViolation,
}

/// Exact balance check of `k` with respect to a partition of the coupling
/// level. For every partition class and every induced color value (up to
/// sign), the signed indicator of the simplices carrying that value is
/// mapped back through the boundary; `k` is balanced exactly when all these
/// images respect the anti-synchrony pattern.
pub fn is_balanced(
    x: &OrientedComplex,
    k: &AntiColoring,
    partition: &SimplexPartition,
    direction: Direction,
) -> Result<BalanceCheck> {
    let induced = induced_coloring(x, k, direction)?;
    let n_level = induced.len();
    if partition.size() != n_level
        || partition.classes().iter().flatten().any(|&i| i >= n_level)
    {
        return Err(Error::InvalidInput(format!(
            "partition must cover the {n_level} coupling-level simplices"
        )));
    }
    let d = k.d();
    let back: DMatrix<i64> = match direction {
        Direction::Up => x.boundary_or_zero(d + 1),
        Direction::Down => x.boundary_or_zero(d).transpose(),
    };
    for (class_index, class) in partition.classes().iter().enumerate() {
        let mut groups: BTreeMap<ColorVector, Vec<(usize, i64)>> = BTreeMap::new();
        for &t in class {
            let (canon, sign) = induced[t].canonical();
            if canon.is_zero() {
                continue;
            }
            groups.entry(canon).or_default().push((t, sign));
        }
        for (representative, members) in groups {
            let mut indicator = DVector::<i64>::zeros(n_level);
            for (t, sign) in members {
                indicator[t] = sign;
            }
            let image = &back * indicator;
            let image: Vec<i64> = image.iter().copied().collect();
            if let Some(violation) = delta_membership(k, &image) {
                return Ok(BalanceCheck {
                    balanced: false,
                    witness: Some(BalanceWitness {
                        class_index,
                        representative,
                        image,
                        violation,
                    }),
                });
            }
        }
    }
    Ok(BalanceCheck { balanced: true, witness: None })
}

/// Enumerates the balanced anti-colorings of the `d`-simplices in canonical
/// form: colors are numbered by first occurrence and each color first
/// appears with a plus sign. Refuses levels larger than the guard
/// (default [`ENUMERATION_GUARD`]).
pub fn enumerate_balanced(
    x: &OrientedComplex,
    d: usize,
    partition: &SimplexPartition,
    direction: Direction,
    guard: Option<usize>,
) -> Result<Vec<AntiColoring>> {
    let n = x.size(d);
    let limit = guard.unwrap_or(ENUMERATION_GUARD);
    if n > limit {
        return Err(Error::GuardExceeded { size: n, limit });
    }
    coupling_level(x, d, direction)?;
    let mut values = vec![SignedColor::Zero; n];
    let mut out = Vec::new();
    enumerate_rec(x, d, partition, direction, &mut values, 0, 0, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rec(
    x: &OrientedComplex,
    d: usize,
    partition: &SimplexPartition,
    direction: Direction,
    values: &mut Vec<SignedColor>,
    position: usize,
    used: usize,
    out: &mut Vec<AntiColoring>,
) -> Result<()> {
    if position == values.len() {
        let colors = (1..=used).map(|i| format!("c{i}")).collect();
        let candidate = AntiColoring::new(d, values.clone(), colors)?;
        if is_balanced(x, &candidate, partition, direction)?.balanced {
            out.push(candidate);
        }
        return Ok(());
    }
    let mut options = vec![SignedColor::Zero];
    for c in 0..used {
        options.push(SignedColor::Plus(c));
        options.push(SignedColor::Minus(c));
    }
    options.push(SignedColor::Plus(used));
    for option in options {
        values[position] = option;
        let next_used = used.max(option.color().map_or(0, |c| c + 1));
        enumerate_rec(x, d, partition, direction, values, position + 1, next_used, out)?;
    }
    values[position] = SignedColor::Zero;
    Ok(())
}

/// Samples a point of the anti-synchrony subspace with independent uniform
/// color values in `[-scale, scale]`.
pub fn sample_delta_point<R: Rng>(k: &AntiColoring, rng: &mut R, scale: f64) -> DVector<f64> {
    let z: Vec<f64> =
        (0..k.colors().len()).map(|_| rng.random_range(-scale..=scale)).collect();
    DVector::from_iterator(
        k.len(),
        k.values().iter().map(|v| match v.color() {
            None => 0.0,
            Some(c) => v.sign() as f64 * z[c],
        }),
    )
}

/// Randomized dynamical check of balance: assembles coupling terms from
/// random odd scalar functions (one per partition class), flows points of
/// the anti-synchrony subspace through them, and tests that the images stay
/// in the subspace within a strict tolerance. Agrees with [`is_balanced`]
/// up to the usual caveats of sampling.
pub fn invariance_oracle(
    x: &OrientedComplex,
    k: &AntiColoring,
    partition: &SimplexPartition,
    direction: Direction,
    trials: usize,
    seed: u64,
) -> Result<bool> {
    let d = k.d();
    let level = coupling_level(x, d, direction)?;
    let n_level = x.size(level);
    if partition.size() != n_level {
        return Err(Error::InvalidInput(format!(
            "partition must cover the {n_level} coupling-level simplices"
        )));
    }
    if k.len() != x.size(d) {
        return Err(Error::InvalidInput(format!(
            "coloring has {} values but the complex has {} simplices at dimension {d}",
            k.len(),
            x.size(d)
        )));
    }
    let boundary = match direction {
        Direction::Up => to_f64(&x.boundary_or_zero(d + 1)),
        Direction::Down => to_f64(&x.boundary_or_zero(d)),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let funcs: Vec<ScalarFunction> =
            partition.classes().iter().map(|_| ScalarFunction::random_odd(&mut rng)).collect();
        let coupling =
            CouplingFunction::componentwise_classes(n_level, partition.classes(), &funcs)?;
        let field = match direction {
            Direction::Up => AssembledField::from_parts(
                x.size(d),
                None,
                None,
                Some((boundary.clone(), coupling)),
            )?,
            Direction::Down => AssembledField::from_parts(
                x.size(d),
                None,
                Some((boundary.clone(), coupling)),
                None,
            )?,
        };
        for _ in 0..5 {
            let point = sample_delta_point(k, &mut rng, 1.5);
            let image = field.eval(&point);
            if delta_residual(k, &image) > POINTWISE_RTOL * (1.0 + image.amax()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Independent color-degree test for vertex colorings of a graph under
/// difference coupling: two same-colored vertices must have equally many
/// neighbors of every other color. Same-colored neighbors are irrelevant
/// because odd couplings vanish on zero differences. Requires an unsigned
/// coloring without zeros.
pub fn classical_graph_check(x: &OrientedComplex, k: &AntiColoring) -> Result<bool> {
    if k.d() != 0 {
        return Err(Error::InvalidInput("classical check applies to vertex colorings".into()));
    }
    if k.len() != x.size(0) {
        return Err(Error::InvalidInput(format!(
            "coloring has {} values but the complex has {} vertices",
            k.len(),
            x.size(0)
        )));
    }
    let colors: Vec<usize> = k
        .values()
        .iter()
        .map(|v| match v {
            SignedColor::Plus(c) => Ok(*c),
            _ => Err(Error::InvalidInput(
                "classical check requires a positive coloring without zeros".into(),
            )),
        })
        .collect::<Result<_>>()?;
    let n = x.size(0);
    let mut degree: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); n];
    for e in x.simplices(1) {
        let i = x.index_of(0, &[e[0]]).expect("endpoint exists");
        let j = x.index_of(0, &[e[1]]).expect("endpoint exists");
        *degree[i].entry(colors[j]).or_insert(0) += 1;
        *degree[j].entry(colors[i]).or_insert(0) += 1;
    }
    let mut per_class: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for v in 0..n {
        let own = colors[v];
        let mut counts = degree[v].clone();
        counts.remove(&own);
        match per_class.get(&own) {
            None => {
                per_class.insert(own, counts);
            }
            Some(reference) => {
                if *reference != counts {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
