//! Finite oriented simplicial complexes and their boundary matrices.
//!
//! A complex stores, for every dimension, an ordered list of simplices; each
//! simplex is a strictly ascending tuple of positive vertex labels. The
//! ordering within a dimension is fixed at construction time and serves as
//! the basis of the chain space `C_d(X)`, so two complexes with the same
//! simplices but different orderings are different bases (and produce
//! different boundary matrices).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use nalgebra::DMatrix;
use rand::Rng;

use crate::{Error, Result};

/// A simplex as a strictly ascending tuple of vertex labels.
pub type Simplex = Vec<usize>;

/// An oriented simplicial complex with a fixed simplex ordering per dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedComplex {
    vertex_labels: Vec<usize>,
    simplices_by_dim: Vec<Vec<Simplex>>,
    index_by_dim: Vec<HashMap<Simplex, usize>>,
}

impl OrientedComplex {
    /// Builds the downward closure of the given maximal simplices, ordering
    /// each dimension lexicographically by ascending label tuple.
    pub fn build_complex(maximal_simplices: &[Vec<usize>]) -> Result<Self> {
        if maximal_simplices.is_empty() {
            return Err(Error::InvalidComplex("no maximal simplices given".into()));
        }
        let mut normalized: Vec<Simplex> = Vec::new();
        for s in maximal_simplices {
            if s.is_empty() {
                return Err(Error::InvalidComplex("empty simplex".into()));
            }
            if s.iter().any(|&v| v == 0) {
                return Err(Error::InvalidComplex(format!(
                    "vertex labels must be positive, got {s:?}"
                )));
            }
            let mut t = s.clone();
            t.sort_unstable();
            t.dedup();
            if t.len() != s.len() {
                return Err(Error::InvalidComplex(format!(
                    "repeated vertex label in simplex {s:?}"
                )));
            }
            if normalized.contains(&t) {
                return Err(Error::InvalidComplex(format!(
                    "duplicate maximal simplex {t:?}"
                )));
            }
            normalized.push(t);
        }
        let d_max = normalized.iter().map(|s| s.len()).max().unwrap() - 1;
        let mut by_dim: Vec<BTreeSet<Simplex>> = vec![BTreeSet::new(); d_max + 1];
        for s in &normalized {
            for d in 0..s.len() {
                for face in s.iter().copied().combinations(d + 1) {
                    by_dim[d].insert(face);
                }
            }
        }
        let simplices_by_dim: Vec<Vec<Simplex>> =
            by_dim.into_iter().map(|set| set.into_iter().collect()).collect();
        Self::from_simplices(simplices_by_dim)
    }

    /// Builds a complex from explicit per-dimension simplex orderings.
    ///
    /// The input must already be closed under faces; this is the entry point
    /// for bases in a non-lexicographic order.
    pub fn from_simplices(simplices_by_dim: Vec<Vec<Simplex>>) -> Result<Self> {
        if simplices_by_dim.is_empty() || simplices_by_dim[0].is_empty() {
            return Err(Error::InvalidComplex("no vertices".into()));
        }
        let mut index_by_dim: Vec<HashMap<Simplex, usize>> = Vec::new();
        for (d, simplices) in simplices_by_dim.iter().enumerate() {
            if d > 0 && simplices.is_empty() {
                return Err(Error::InvalidComplex(format!(
                    "dimension {d} is empty; trim trailing dimensions instead"
                )));
            }
            let mut index = HashMap::new();
            for (i, s) in simplices.iter().enumerate() {
                if s.len() != d + 1 {
                    return Err(Error::InvalidComplex(format!(
                        "simplex {s:?} stored in dimension {d}"
                    )));
                }
                if s.iter().any(|&v| v == 0) {
                    return Err(Error::InvalidComplex(format!(
                        "vertex labels must be positive, got {s:?}"
                    )));
                }
                if !s.windows(2).all(|w| w[0] < w[1]) {
                    return Err(Error::InvalidComplex(format!(
                        "simplex {s:?} is not strictly ascending"
                    )));
                }
                if index.insert(s.clone(), i).is_some() {
                    return Err(Error::InvalidComplex(format!("duplicate simplex {s:?}")));
                }
            }
            index_by_dim.push(index);
        }
        for d in 1..simplices_by_dim.len() {
            for s in &simplices_by_dim[d] {
                for k in 0..s.len() {
                    let mut face = s.clone();
                    face.remove(k);
                    if !index_by_dim[d - 1].contains_key(&face) {
                        return Err(Error::InvalidComplex(format!(
                            "face {face:?} of {s:?} is missing; not closed under faces"
                        )));
                    }
                }
            }
        }
        let vertex_labels = simplices_by_dim[0].iter().map(|s| s[0]).collect();
        Ok(Self {
            vertex_labels,
            simplices_by_dim,
            index_by_dim,
        })
    }

    /// Largest dimension with at least one simplex.
    pub fn d_max(&self) -> usize {
        self.simplices_by_dim.len() - 1
    }

    /// Number of d-simplices; zero when `d` exceeds the complex dimension.
    pub fn size(&self, d: usize) -> usize {
        self.simplices_by_dim.get(d).map_or(0, Vec::len)
    }

    /// The ordered d-simplices (the basis of `C_d(X)`).
    pub fn simplices(&self, d: usize) -> &[Simplex] {
        self.simplices_by_dim.get(d).map_or(&[], Vec::as_slice)
    }

    /// All vertex labels in basis position order (ascending for complexes
    /// built from facet closures).
    pub fn vertex_labels(&self) -> &[usize] {
        &self.vertex_labels
    }

    /// Basis position of a simplex within its dimension.
    pub fn index_of(&self, d: usize, simplex: &[usize]) -> Option<usize> {
        self.index_by_dim.get(d)?.get(simplex).copied()
    }

    /// The simplices not contained in any higher simplex.
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        let mut result = Vec::new();
        for d in 0..=self.d_max() {
            for s in self.simplices(d) {
                let covered = self
                    .simplices(d + 1)
                    .iter()
                    .any(|t| s.iter().all(|v| t.contains(v)));
                if !covered {
                    result.push(s.clone());
                }
            }
        }
        result
    }

    /// The boundary matrix `B_d` mapping `C_d` to `C_{d-1}`, with the
    /// alternating-sign incidence entries. Requires `1 <= d <= d_max`.
    pub fn boundary_matrix(&self, d: usize) -> Result<DMatrix<i64>> {
        if d == 0 || d > self.d_max() {
            return Err(Error::DimensionOutOfRange { d, max: self.d_max() });
        }
        let rows = self.size(d - 1);
        let cols = self.size(d);
        let mut m = DMatrix::<i64>::zeros(rows, cols);
        for (j, s) in self.simplices(d).iter().enumerate() {
            for k in 0..s.len() {
                let mut face = s.clone();
                face.remove(k);
                let i = self.index_of(d - 1, &face).expect("complex closed under faces");
                m[(i, j)] = if k % 2 == 0 { 1 } else { -1 };
            }
        }
        Ok(m)
    }

    /// `B_d` extended by the zero-map conventions: `B_0` is the zero map out
    /// of `C_0` (0 x n_0) and any `d` beyond `d_max` is a zero map into
    /// `C_{d-1}` with zero columns.
    pub fn boundary_or_zero(&self, d: usize) -> DMatrix<i64> {
        if d == 0 {
            DMatrix::zeros(0, self.size(0))
        } else if d <= self.d_max() {
            self.boundary_matrix(d).expect("dimension in range")
        } else {
            DMatrix::zeros(self.size(d - 1), self.size(d))
        }
    }

    /// True iff both d-simplices are faces of a common (d+1)-simplex.
    pub fn upper_adjacent(&self, f1: &[usize], f2: &[usize]) -> Result<bool> {
        let d = self.lookup_dim(f1)?;
        self.require_known(d, f2)?;
        Ok(self
            .simplices(d + 1)
            .iter()
            .any(|t| is_subset(f1, t) && is_subset(f2, t)))
    }

    /// True iff both d-simplices share a common (d-1)-face.
    pub fn lower_adjacent(&self, f1: &[usize], f2: &[usize]) -> Result<bool> {
        let d = self.lookup_dim(f1)?;
        self.require_known(d, f2)?;
        if d == 0 {
            return Ok(false);
        }
        let shared = f1.iter().filter(|v| f2.contains(v)).count();
        Ok(shared >= d)
    }

    fn lookup_dim(&self, simplex: &[usize]) -> Result<usize> {
        if simplex.is_empty() {
            return Err(Error::UnknownSimplex(simplex.to_vec()));
        }
        let d = simplex.len() - 1;
        self.require_known(d, simplex)?;
        Ok(d)
    }

    fn require_known(&self, d: usize, simplex: &[usize]) -> Result<()> {
        match self.index_of(d, simplex) {
            Some(_) => Ok(()),
            None => Err(Error::UnknownSimplex(simplex.to_vec())),
        }
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|v| big.contains(v))
}

/// Two triangles glued along an edge, with the edge basis
/// `[1,2], [2,3], [1,3], [1,4], [3,4]` and triangles `[1,2,3], [1,3,4]`.
pub fn diamond() -> OrientedComplex {
    OrientedComplex::from_simplices(vec![
        vec![vec![1], vec![2], vec![3], vec![4]],
        vec![vec![1, 2], vec![2, 3], vec![1, 3], vec![1, 4], vec![3, 4]],
        vec![vec![1, 2, 3], vec![1, 3, 4]],
    ])
    .expect("valid complex")
}

/// The diamond complex under the vertex relabeling 1->1, 2->3, 3->4, 4->2,
/// with each simplex kept at its original basis position.
pub fn diamond_relabeled() -> OrientedComplex {
    OrientedComplex::from_simplices(vec![
        // Vertices sit at the positions of their preimages (1, 2, 3, 4 map
        // to 1, 3, 4, 2) so chain maps between the two labellings stay
        // diagonal in every dimension.
        vec![vec![1], vec![3], vec![4], vec![2]],
        vec![vec![1, 3], vec![3, 4], vec![1, 4], vec![1, 2], vec![2, 4]],
        vec![vec![1, 3, 4], vec![1, 2, 4]],
    ])
    .expect("valid complex")
}

/// The solid tetrahedron on vertices 1..4 in lexicographic order.
pub fn tetrahedron() -> OrientedComplex {
    OrientedComplex::build_complex(&[vec![1, 2, 3, 4]]).expect("valid complex")
}

/// Generates a random complex for randomized tests: up to `max_facets`
/// maximal simplices over at most `max_vertices` vertices, each of size at
/// most `max_facet_size`.
pub fn random_complex<R: Rng>(
    rng: &mut R,
    max_vertices: usize,
    max_facets: usize,
    max_facet_size: usize,
) -> OrientedComplex {
    let n = rng.random_range(1..=max_vertices);
    let facets = rng.random_range(1..=max_facets);
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for _ in 0..facets {
        let size = rng.random_range(1..=max_facet_size.min(n));
        let mut labels: BTreeSet<usize> = BTreeSet::new();
        while labels.len() < size {
            labels.insert(rng.random_range(1..=n));
        }
        seen.insert(labels.into_iter().collect());
    }
    // Drop facets contained in other facets so the constructor sees no
    // duplicates after closure; containment is allowed by build_complex, but
    // keeping the input reduced makes shrunk failures easier to read.
    let facets: Vec<Vec<usize>> = seen
        .iter()
        .filter(|s| {
            !seen.iter().any(|t| t.len() > s.len() && s.iter().all(|v| t.contains(v)))
        })
        .cloned()
        .collect();
    OrientedComplex::build_complex(&facets).expect("generated facets are valid")
}

/// Canonical label permutation applying `map` to every vertex; used by
/// relabeling utilities. Kept here so complex construction stays reusable.
pub(crate) fn apply_label_map(
    complex: &OrientedComplex,
    map: &BTreeMap<usize, usize>,
) -> Result<OrientedComplex> {
    let mut simplices_by_dim = Vec::new();
    for d in 0..=complex.d_max() {
        let mut level = Vec::new();
        for s in complex.simplices(d) {
            let mut image: Vec<usize> = s
                .iter()
                .map(|v| {
                    map.get(v).copied().ok_or_else(|| {
                        Error::InvalidPermutation(format!("label {v} has no image"))
                    })
                })
                .collect::<Result<_>>()?;
            image.sort_unstable();
            level.push(image);
        }
        simplices_by_dim.push(level);
    }
    OrientedComplex::from_simplices(simplices_by_dim)
}
