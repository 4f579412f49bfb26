//! Vertex relabelings and the maps they induce on chain spaces.
//!
//! A relabeling `σ` sends each simplex `A = [a_0 < ... < a_d]` to the sorted
//! tuple of its images with a sign `sgn(A, σ)`: the parity of the sorting
//! permutation. On chains this induces the diagonal map `T_σ^d` (against the
//! relabeled complex, whose simplices are kept at the same index positions)
//! and, when `σ` maps the complex to itself, the signed permutation `S_σ^d`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::complex::{apply_label_map, OrientedComplex};
use crate::dynamics::{
    random_points, unit_grid, AssembledField, CouplingFunction, Direction, POINTWISE_RTOL,
    POINTWISE_SAMPLES,
};
use crate::hodge::to_f64;
use crate::{Error, Result};

/// A bijection between two finite sets of vertex labels. The image labels
/// need not be drawn from the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    map: BTreeMap<usize, usize>,
}

impl Permutation {
    pub fn from_map(map: BTreeMap<usize, usize>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (&k, &v) in &map {
            if k == 0 || v == 0 {
                return Err(Error::InvalidPermutation("labels must be positive".into()));
            }
            if !seen.insert(v) {
                return Err(Error::InvalidPermutation(format!("label {v} is hit twice")));
            }
        }
        Ok(Permutation { map })
    }

    pub fn identity<I: IntoIterator<Item = usize>>(labels: I) -> Self {
        Permutation { map: labels.into_iter().map(|v| (v, v)).collect() }
    }

    /// Identity on `labels` composed with the given disjoint cycles.
    pub fn from_cycles(labels: &[usize], cycles: &[Vec<usize>]) -> Result<Self> {
        let mut map: BTreeMap<usize, usize> = labels.iter().map(|&v| (v, v)).collect();
        for cycle in cycles {
            for window in cycle.windows(2) {
                if !map.contains_key(&window[0]) {
                    return Err(Error::InvalidPermutation(format!(
                        "cycle label {} is not in the domain",
                        window[0]
                    )));
                }
                map.insert(window[0], window[1]);
            }
            if cycle.len() > 1 {
                map.insert(cycle[cycle.len() - 1], cycle[0]);
            }
        }
        Permutation::from_map(map)
    }

    pub fn get(&self, v: usize) -> Option<usize> {
        self.map.get(&v).copied()
    }

    pub fn apply(&self, v: usize) -> Result<usize> {
        self.get(v)
            .ok_or_else(|| Error::InvalidPermutation(format!("label {v} has no image")))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation> {
        let map = other
            .map
            .iter()
            .map(|(&k, &v)| Ok((k, self.apply(v)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Permutation::from_map(map)
    }

    pub fn inverse(&self) -> Permutation {
        Permutation { map: self.map.iter().map(|(&k, &v)| (v, k)).collect() }
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.keys().copied()
    }

    pub fn as_map(&self) -> &BTreeMap<usize, usize> {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(k, v)| k == v)
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let body = self
            .map
            .iter()
            .map(|(k, v)| format!("{k}->{v}"))
            .collect::<Vec<_>>()
            .join(", ");
        write!(f, "{{{body}}}")
    }
}

/// Sign of `σ` on the oriented simplex `A`: the parity of the number of
/// inversions in the image tuple.
pub fn sgn(a: &[usize], sigma: &Permutation) -> Result<i64> {
    let image: Vec<usize> = a.iter().map(|&v| sigma.apply(v)).collect::<Result<_>>()?;
    let mut inversions = 0usize;
    for i in 0..image.len() {
        for j in i + 1..image.len() {
            if image[i] > image[j] {
                inversions += 1;
            }
        }
    }
    Ok(if inversions % 2 == 0 { 1 } else { -1 })
}

/// The complex with every vertex relabeled through `σ`, keeping each simplex
/// at its original index position.
pub fn relabeled_complex(x: &OrientedComplex, sigma: &Permutation) -> Result<OrientedComplex> {
    apply_label_map(x, sigma.as_map())
}

/// Diagonal sign matrix `T_σ^d : C_d(X) -> C_d(σX)` in the position-matched
/// bases.
pub fn relabel_map_t(x: &OrientedComplex, sigma: &Permutation, d: usize) -> Result<DMatrix<i64>> {
    if d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() });
    }
    let n = x.size(d);
    let mut t = DMatrix::zeros(n, n);
    for (i, s) in x.simplices(d).iter().enumerate() {
        t[(i, i)] = sgn(s, sigma)?;
    }
    Ok(t)
}

/// Boundary matrix of the relabeled complex, constructed independently of
/// the conjugation identity `B̃_d = T^{d-1} B_d T^d` so the two can be
/// checked against each other.
pub fn relabeled_boundary(
    x: &OrientedComplex,
    sigma: &Permutation,
    d: usize,
) -> Result<DMatrix<i64>> {
    relabeled_complex(x, sigma)?.boundary_matrix(d)
}

/// True when `σ` maps every simplex of `X` to a simplex of `X`.
pub fn is_symmetry(x: &OrientedComplex, sigma: &Permutation) -> Result<bool> {
    for d in 0..=x.d_max() {
        for s in x.simplices(d) {
            let mut image: Vec<usize> =
                s.iter().map(|&v| sigma.apply(v)).collect::<Result<_>>()?;
            image.sort_unstable();
            if x.index_of(d, &image).is_none() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Signed permutation `S_σ^d : C_d(X) -> C_d(X)` induced by a symmetry:
/// column `s` has the single entry `sgn(A_s, σ)` in the row of the sorted
/// image of `A_s`.
pub fn symmetry_map_s(x: &OrientedComplex, sigma: &Permutation, d: usize) -> Result<DMatrix<i64>> {
    symmetry_map_impl(x, sigma, d, true)
}

/// Unsigned version of [`symmetry_map_s`]: the plain permutation matrix.
pub fn symmetry_map_s_tilde(
    x: &OrientedComplex,
    sigma: &Permutation,
    d: usize,
) -> Result<DMatrix<i64>> {
    symmetry_map_impl(x, sigma, d, false)
}

fn symmetry_map_impl(
    x: &OrientedComplex,
    sigma: &Permutation,
    d: usize,
    signed: bool,
) -> Result<DMatrix<i64>> {
    if d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() });
    }
    let n = x.size(d);
    let mut s_mat = DMatrix::zeros(n, n);
    for (col, s) in x.simplices(d).iter().enumerate() {
        let mut image: Vec<usize> = s.iter().map(|&v| sigma.apply(v)).collect::<Result<_>>()?;
        let value = if signed { sgn(s, sigma)? } else { 1 };
        image.sort_unstable();
        let row = x
            .index_of(d, &image)
            .ok_or_else(|| Error::NotASymmetry(format!("{sigma} does not preserve {s:?}")))?;
        s_mat[(row, col)] = value;
    }
    Ok(s_mat)
}

/// All label permutations of the vertex set mapping the complex to itself,
/// in lexicographic order of their image tuples.
pub fn find_symmetries(x: &OrientedComplex) -> Vec<Permutation> {
    let labels: Vec<usize> = x.vertex_labels().to_vec();
    let profiles: Vec<Vec<usize>> = labels.iter().map(|&v| incidence_profile(x, v)).collect();
    let mut out = Vec::new();
    let mut assignment: BTreeMap<usize, usize> = BTreeMap::new();
    let mut used = vec![false; labels.len()];
    search(x, &labels, &profiles, 0, &mut assignment, &mut used, &mut out);
    out
}

fn incidence_profile(x: &OrientedComplex, v: usize) -> Vec<usize> {
    (0..=x.d_max())
        .map(|d| x.simplices(d).iter().filter(|s| s.contains(&v)).count())
        .collect()
}

fn search(
    x: &OrientedComplex,
    labels: &[usize],
    profiles: &[Vec<usize>],
    idx: usize,
    assignment: &mut BTreeMap<usize, usize>,
    used: &mut [bool],
    out: &mut Vec<Permutation>,
) {
    if idx == labels.len() {
        out.push(Permutation { map: assignment.clone() });
        return;
    }
    let v = labels[idx];
    for (cand, &w) in labels.iter().enumerate() {
        if used[cand] || profiles[cand] != profiles[idx] {
            continue;
        }
        assignment.insert(v, w);
        used[cand] = true;
        if partial_images_exist(x, assignment, v) {
            search(x, labels, profiles, idx + 1, assignment, used, out);
        }
        used[cand] = false;
        assignment.remove(&v);
    }
}

/// Checks every simplex containing `v` whose vertices are all assigned.
fn partial_images_exist(
    x: &OrientedComplex,
    assignment: &BTreeMap<usize, usize>,
    v: usize,
) -> bool {
    for d in 1..=x.d_max() {
        for s in x.simplices(d) {
            if !s.contains(&v) {
                continue;
            }
            let image: Option<Vec<usize>> =
                s.iter().map(|u| assignment.get(u).copied()).collect();
            if let Some(mut image) = image {
                image.sort_unstable();
                if x.index_of(d, &image).is_none() {
                    return false;
                }
            }
        }
    }
    true
}

fn coupling_spaces(
    x: &OrientedComplex,
    d: usize,
    direction: Direction,
) -> Result<(usize, usize)> {
    if d == 0 || d > x.d_max() {
        return Err(Error::DimensionOutOfRange { d, max: x.d_max() });
    }
    Ok(match direction {
        Direction::Up => (x.size(d - 1), x.size(d)),
        Direction::Down => (x.size(d), x.size(d - 1)),
    })
}

fn single_term_field(
    n: usize,
    boundary: DMatrix<f64>,
    f: &CouplingFunction,
    direction: Direction,
) -> Result<AssembledField> {
    match direction {
        Direction::Up => AssembledField::from_parts(n, None, None, Some((boundary, f.clone()))),
        Direction::Down => AssembledField::from_parts(n, None, Some((boundary, f.clone())), None),
    }
}

/// Raw numerical check of the relabeling identity for the coupling term
/// through `B_d`: `T ∘ G = G̃ ∘ T` at a deterministic grid plus seeded
/// random points, where `G̃` is assembled from the relabeled boundary and
/// `T` acts on the phase space (`C_{d-1}` for up terms, `C_d` for down).
/// No structural preconditions are applied; see
/// [`verify_relabel_conjugacy`] for the checked variant.
pub fn relabel_identity_holds(
    x: &OrientedComplex,
    sigma: &Permutation,
    f: &CouplingFunction,
    d: usize,
    direction: Direction,
) -> Result<bool> {
    let (n_phase, arity) = coupling_spaces(x, d, direction)?;
    if f.arity() != arity {
        return Err(Error::InvalidInput(format!(
            "coupling arity {} does not match required {arity}",
            f.arity()
        )));
    }
    let b = to_f64(&x.boundary_matrix(d)?);
    let b_tilde = to_f64(&relabeled_boundary(x, sigma, d)?);
    let t_phase = match direction {
        Direction::Up => relabel_map_t(x, sigma, d - 1)?,
        Direction::Down => relabel_map_t(x, sigma, d)?,
    };
    let t = to_f64(&t_phase);
    let g = single_term_field(n_phase, b, f, direction)?;
    let g_tilde = single_term_field(n_phase, b_tilde, f, direction)?;
    let mut points = unit_grid(n_phase);
    points.extend(random_points(n_phase, POINTWISE_SAMPLES, 0x7e1ab, 2.0));
    Ok(points.iter().all(|pt| {
        let lhs = &t * g.eval(pt);
        let rhs = g_tilde.eval(&(&t * pt));
        (lhs - &rhs).amax() <= POINTWISE_RTOL * (1.0 + rhs.amax())
    }))
}

/// Checks that relabeling by `σ` conjugates the coupling term: requires a
/// componentwise odd coupling (the structural hypotheses under which the
/// identity is guaranteed), then runs the numerical check.
pub fn verify_relabel_conjugacy(
    x: &OrientedComplex,
    sigma: &Permutation,
    f: &CouplingFunction,
    d: usize,
    direction: Direction,
) -> Result<bool> {
    if !f.is_componentwise() {
        return Err(Error::ComponentwiseRequired);
    }
    if !f.is_odd() {
        return Err(Error::OddnessRequired);
    }
    relabel_identity_holds(x, sigma, f, d, direction)
}

/// Checks that the signed permutation of a symmetry `σ` commutes with the
/// coupling term through `B_d`. Requires `σ` to be a symmetry and the
/// coupling to apply one odd scalar function uniformly.
pub fn verify_symmetry(
    x: &OrientedComplex,
    sigma: &Permutation,
    f: &CouplingFunction,
    d: usize,
    direction: Direction,
) -> Result<bool> {
    if !is_symmetry(x, sigma)? {
        return Err(Error::NotASymmetry(format!("{sigma} does not map the complex to itself")));
    }
    if !f.is_componentwise() {
        return Err(Error::ComponentwiseRequired);
    }
    if let Some(components) = f.components() {
        if components.windows(2).any(|pair| pair[0] != pair[1]) {
            return Err(Error::InvalidInput(
                "symmetry verification requires one uniform scalar function".into(),
            ));
        }
    }
    if !f.is_odd() {
        return Err(Error::OddnessRequired);
    }
    let (n_phase, arity) = coupling_spaces(x, d, direction)?;
    if f.arity() != arity {
        return Err(Error::InvalidInput(format!(
            "coupling arity {} does not match required {arity}",
            f.arity()
        )));
    }
    let phase_level = match direction {
        Direction::Up => d - 1,
        Direction::Down => d,
    };
    let s = to_f64(&symmetry_map_s(x, sigma, phase_level)?);
    let g = single_term_field(n_phase, to_f64(&x.boundary_matrix(d)?), f, direction)?;
    Ok(commutation_witness(&s, |pt| g.eval(pt), n_phase, POINTWISE_SAMPLES, 0x5ca1e, POINTWISE_RTOL).is_none())
}

/// First sampled point where `map` fails to commute with `field`, together
/// with the residual, or `None` when all samples commute within `tol`.
pub fn commutation_witness<F>(
    map: &DMatrix<f64>,
    field: F,
    n: usize,
    extra_samples: usize,
    seed: u64,
    tol: f64,
) -> Option<(DVector<f64>, f64)>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut points = unit_grid(n);
    points.extend(random_points(n, extra_samples, seed, 2.0));
    for pt in points {
        let lhs = map * field(&pt);
        let rhs = field(&(map * &pt));
        let residual = (lhs - &rhs).amax();
        if residual > tol * (1.0 + rhs.amax()) {
            return Some((pt, residual));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{diamond, diamond_relabeled, tetrahedron, OrientedComplex};
    use crate::expr::ScalarFunction;

    fn diamond_relabeling() -> Permutation {
        Permutation::from_map(BTreeMap::from([(1, 1), (2, 3), (3, 4), (4, 2)])).unwrap()
    }

    fn swap13() -> Permutation {
        Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 3]]).unwrap()
    }

    fn odd() -> ScalarFunction {
        ScalarFunction::parse("2*x - 0.3*x^3").unwrap()
    }

    #[test]
    fn sign_counts_inversions() {
        let sigma = diamond_relabeling();
        assert_eq!(sgn(&[1, 2], &sigma).unwrap(), 1);
        assert_eq!(sgn(&[3, 4], &sigma).unwrap(), -1);
        assert_eq!(sgn(&[1, 3, 4], &sigma).unwrap(), -1);
        assert_eq!(sgn(&[2, 3, 4], &sigma).unwrap(), 1);
        let rev = Permutation::from_map(BTreeMap::from([(1, 3), (2, 2), (3, 1)])).unwrap();
        assert_eq!(sgn(&[1, 2, 3], &rev).unwrap(), -1);
    }

    #[test]
    fn permutation_validation_and_algebra() {
        assert!(Permutation::from_map(BTreeMap::from([(1, 2), (3, 2)])).is_err());
        assert!(Permutation::from_map(BTreeMap::from([(0, 1)])).is_err());
        let sigma = swap13();
        assert!(sigma.compose(&sigma).unwrap().is_identity());
        assert_eq!(sigma.inverse(), sigma);
        let tau = diamond_relabeling();
        let composed = tau.compose(&tau.inverse()).unwrap();
        assert!(composed.is_identity());
    }

    #[test]
    fn relabel_maps_are_the_expected_diagonals() {
        let x = diamond();
        let sigma = diamond_relabeling();
        let t0 = relabel_map_t(&x, &sigma, 0).unwrap();
        assert_eq!(t0, DMatrix::identity(4, 4));
        let t1 = relabel_map_t(&x, &sigma, 1).unwrap();
        assert_eq!(t1.diagonal().iter().copied().collect::<Vec<_>>(), vec![1, 1, 1, 1, -1]);
        let t2 = relabel_map_t(&x, &sigma, 2).unwrap();
        assert_eq!(t2.diagonal().iter().copied().collect::<Vec<_>>(), vec![1, -1]);
    }

    #[test]
    fn relabeled_complex_matches_builtin_and_conjugation() {
        let x = diamond();
        let sigma = diamond_relabeling();
        let relabeled = relabeled_complex(&x, &sigma).unwrap();
        assert_eq!(relabeled, diamond_relabeled());
        for d in 1..=2 {
            let b = x.boundary_matrix(d).unwrap();
            let b_tilde = relabeled_boundary(&x, &sigma, d).unwrap();
            let t_up = relabel_map_t(&x, &sigma, d).unwrap();
            let t_down = relabel_map_t(&x, &sigma, d - 1).unwrap();
            assert_eq!(b_tilde, &t_down * &b * &t_up);
        }
    }

    #[test]
    fn relabeling_to_fresh_labels() {
        let x = OrientedComplex::build_complex(&[vec![1, 2], vec![2, 3]]).unwrap();
        let sigma =
            Permutation::from_map(BTreeMap::from([(1, 7), (2, 8), (3, 2)])).unwrap();
        let relabeled = relabeled_complex(&x, &sigma).unwrap();
        // Vertex positions are preserved, so labels appear in image order.
        assert_eq!(relabeled.vertex_labels(), &[7, 8, 2]);
        // Edge [2,3] maps to (8,2), which sorts with one inversion.
        assert_eq!(sgn(&[2, 3], &sigma).unwrap(), -1);
        let b = x.boundary_matrix(1).unwrap();
        let b_tilde = relabeled_boundary(&x, &sigma, 1).unwrap();
        let t1 = relabel_map_t(&x, &sigma, 1).unwrap();
        let t0 = relabel_map_t(&x, &sigma, 0).unwrap();
        assert_eq!(b_tilde, &t0 * &b * &t1);
    }

    #[test]
    fn symmetry_map_for_vertex_swap_is_frozen() {
        let x = diamond();
        let sigma = swap13();
        assert!(is_symmetry(&x, &sigma).unwrap());
        let s1 = symmetry_map_s(&x, &sigma, 1).unwrap();
        let expected = DMatrix::from_row_slice(
            5,
            5,
            &[
                0, -1, 0, 0, 0, //
                -1, 0, 0, 0, 0, //
                0, 0, -1, 0, 0, //
                0, 0, 0, 0, 1, //
                0, 0, 0, 1, 0,
            ],
        );
        assert_eq!(s1, expected);
        let s_tilde = symmetry_map_s_tilde(&x, &sigma, 1).unwrap();
        assert_eq!(s_tilde, expected.map(|v: i64| v.abs()));
        let s0 = symmetry_map_s(&x, &sigma, 0).unwrap();
        let mut p = DMatrix::zeros(4, 4);
        p[(2, 0)] = 1;
        p[(1, 1)] = 1;
        p[(0, 2)] = 1;
        p[(3, 3)] = 1;
        assert_eq!(s0, p);
    }

    #[test]
    fn symmetry_maps_intertwine_boundaries_exactly() {
        for x in [diamond(), tetrahedron()] {
            for sigma in find_symmetries(&x) {
                for d in 1..=x.d_max() {
                    let b = x.boundary_matrix(d).unwrap();
                    let s_up = symmetry_map_s(&x, &sigma, d).unwrap();
                    let s_down = symmetry_map_s(&x, &sigma, d - 1).unwrap();
                    assert_eq!(&b * &s_up, &s_down * &b, "failed for {sigma} at d={d}");
                }
            }
        }
    }

    #[test]
    fn symmetry_maps_form_a_representation() {
        let x = tetrahedron();
        let syms = find_symmetries(&x);
        for sigma in &syms {
            for tau in syms.iter().take(6) {
                let composed = sigma.compose(tau).unwrap();
                for d in 0..=x.d_max() {
                    let s_sigma = symmetry_map_s(&x, sigma, d).unwrap();
                    let s_tau = symmetry_map_s(&x, tau, d).unwrap();
                    let s_composed = symmetry_map_s(&x, &composed, d).unwrap();
                    assert_eq!(s_composed, &s_sigma * &s_tau);
                }
            }
            let s = symmetry_map_s(&x, sigma, 1).unwrap();
            let s_inv = symmetry_map_s(&x, &sigma.inverse(), 1).unwrap();
            assert_eq!(s_inv, s.transpose());
        }
    }

    #[test]
    fn symmetry_groups_have_expected_orders() {
        let diamond_syms = find_symmetries(&diamond());
        assert_eq!(diamond_syms.len(), 4);
        let images: Vec<Vec<usize>> = diamond_syms
            .iter()
            .map(|s| (1..=4).map(|v| s.get(v).unwrap()).collect())
            .collect();
        assert_eq!(
            images,
            vec![vec![1, 2, 3, 4], vec![1, 4, 3, 2], vec![3, 2, 1, 4], vec![3, 4, 1, 2]]
        );
        assert_eq!(find_symmetries(&tetrahedron()).len(), 24);
        let path = OrientedComplex::build_complex(&[vec![1, 2], vec![2, 3]]).unwrap();
        let path_syms = find_symmetries(&path);
        assert_eq!(path_syms.len(), 2);
        assert!(path_syms[0].is_identity());
        assert_eq!(path_syms[1], Permutation::from_cycles(&[1, 2, 3], &[vec![1, 3]]).unwrap());
    }

    #[test]
    fn relabel_conjugacy_holds_for_odd_componentwise_couplings() {
        let x = diamond();
        let sigma = diamond_relabeling();
        let f_up = CouplingFunction::componentwise(vec![odd(), ScalarFunction::parse("x^3").unwrap()]);
        assert!(verify_relabel_conjugacy(&x, &sigma, &f_up, 2, Direction::Up).unwrap());
        let f_down = CouplingFunction::uniform(5, odd());
        assert!(verify_relabel_conjugacy(&x, &sigma, &f_down, 2, Direction::Down).unwrap());
        let f_edges = CouplingFunction::uniform(5, odd());
        assert!(verify_relabel_conjugacy(&x, &sigma, &f_edges, 1, Direction::Up).unwrap());
    }

    #[test]
    fn relabel_conjugacy_preconditions_and_failure() {
        let x = diamond();
        let sigma = diamond_relabeling();
        let even = CouplingFunction::uniform(2, ScalarFunction::parse("x^2 + x").unwrap());
        assert!(matches!(
            verify_relabel_conjugacy(&x, &sigma, &even, 2, Direction::Up),
            Err(Error::OddnessRequired)
        ));
        // The raw identity genuinely fails for the non-odd coupling.
        assert!(!relabel_identity_holds(&x, &sigma, &even, 2, Direction::Up).unwrap());
        let rot = CouplingFunction::general(crate::dynamics::VectorMap::Linear(
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        ))
        .unwrap();
        assert!(matches!(
            verify_relabel_conjugacy(&x, &sigma, &rot, 2, Direction::Up),
            Err(Error::ComponentwiseRequired)
        ));
    }

    #[test]
    fn symmetry_commutes_signed_but_not_unsigned() {
        let x = diamond();
        let sigma = swap13();
        let f = CouplingFunction::uniform(2, odd());
        assert!(verify_symmetry(&x, &sigma, &f, 2, Direction::Up).unwrap());
        let g = single_term_field(5, to_f64(&x.boundary_matrix(2).unwrap()), &f, Direction::Up)
            .unwrap();
        let s_tilde = to_f64(&symmetry_map_s_tilde(&x, &sigma, 1).unwrap());
        let witness = commutation_witness(&s_tilde, |pt| g.eval(pt), 5, 25, 7, 1e-9);
        assert!(witness.is_some());
        let (point, residual) = witness.unwrap();
        assert!(residual > 1e-6);
        assert_eq!(point.len(), 5);
    }

    #[test]
    fn symmetry_verification_preconditions() {
        let x = diamond();
        let not_sym = Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 2]]).unwrap();
        let f = CouplingFunction::uniform(2, odd());
        assert!(matches!(
            verify_symmetry(&x, &not_sym, &f, 2, Direction::Up),
            Err(Error::NotASymmetry(_))
        ));
        let mixed = CouplingFunction::componentwise(vec![
            odd(),
            ScalarFunction::parse("x^3").unwrap(),
        ]);
        assert!(verify_symmetry(&x, &swap13(), &mixed, 2, Direction::Up).is_err());
        let even = CouplingFunction::uniform(2, ScalarFunction::parse("x^2").unwrap());
        assert!(matches!(
            verify_symmetry(&x, &swap13(), &even, 2, Direction::Up),
            Err(Error::OddnessRequired)
        ));
    }

    #[test]
    fn sign_cocycle_through_intermediate_complex() {
        // sgn(A, σ∘τ) = sgn(τA sorted, σ) * sgn(A, τ) for every 2-simplex of
        // the tetrahedron and a pair of symmetries.
        let x = tetrahedron();
        let tau = Permutation::from_cycles(&[1, 2, 3, 4], &[vec![1, 2, 3]]).unwrap();
        let sigma = Permutation::from_cycles(&[1, 2, 3, 4], &[vec![2, 4]]).unwrap();
        let composed = sigma.compose(&tau).unwrap();
        for s in x.simplices(2) {
            let mut tau_image: Vec<usize> =
                s.iter().map(|&v| tau.apply(v).unwrap()).collect();
            tau_image.sort_unstable();
            let lhs = sgn(s, &composed).unwrap();
            let rhs = sgn(&tau_image, &sigma).unwrap() * sgn(s, &tau).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
