//! On-disk formats: complex descriptions, vector field specifications,
//! colorings, partitions, and trajectory CSV output.
//!
//! All JSON structures round-trip exactly, and all numeric text output is
//! locale-independent with 12 significant digits so that repeated runs are
//! byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coloring::{AntiColoring, SignedColor, SimplexPartition};
use crate::complex::OrientedComplex;
use crate::dynamics::{BuiltinField, CouplingFunction, VectorFieldSpec, VectorMap};
use crate::expr::ScalarFunction;
use crate::relabel::{relabeled_complex, Permutation};
use crate::simulate::Trajectory;
use crate::{Error, Result};

/// A complex description: maximal simplices by vertex label, plus an
/// optional vertex relabeling to apply after construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexFile {
    pub maximal_simplices: Vec<Vec<usize>>,
    /// Vertex relabeling as a map `old -> new`, e.g. `{"1": 1, "2": 3}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labelling: Option<BTreeMap<usize, usize>>,
}

impl ComplexFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Describes an existing complex (without a labelling entry).
    pub fn from_complex(x: &OrientedComplex) -> Self {
        ComplexFile {
            maximal_simplices: x.maximal_simplices(),
            labelling: None,
        }
    }

    /// Builds the described complex. When a labelling is present the
    /// returned complex is the relabeled one and the permutation comes back
    /// with it so callers can report which relabeling was applied.
    pub fn build(&self) -> Result<(OrientedComplex, Option<Permutation>)> {
        let base = OrientedComplex::build_complex(&self.maximal_simplices)?;
        match &self.labelling {
            None => Ok((base, None)),
            Some(map) => {
                let sigma = Permutation::from_map(map.clone())?;
                let relabeled = relabeled_complex(&base, &sigma)?;
                Ok((relabeled, Some(sigma)))
            }
        }
    }
}

pub fn read_complex_file(path: &Path) -> Result<(OrientedComplex, Option<Permutation>)> {
    ComplexFile::from_json(&fs::read_to_string(path)?)?.build()
}

pub fn write_complex_file(path: &Path, x: &OrientedComplex) -> Result<()> {
    fs::write(path, ComplexFile::from_complex(x).to_json()? + "\n")?;
    Ok(())
}

/// Serializable mirror of [`VectorMap`]. Componentwise entries are stored as
/// expression strings and parsed back on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Zero {
        dim_in: usize,
        dim_out: usize,
    },
    Componentwise {
        components: Vec<String>,
    },
    Linear {
        matrix: Vec<Vec<f64>>,
    },
    Builtin {
        name: String,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        params: BTreeMap<String, f64>,
    },
    Compose {
        maps: Vec<MapSpec>,
    },
    Sum {
        maps: Vec<MapSpec>,
    },
    DirectSum {
        maps: Vec<MapSpec>,
    },
}

impl MapSpec {
    pub fn from_map(map: &VectorMap) -> Self {
        match map {
            VectorMap::Zero { dim_in, dim_out } => MapSpec::Zero {
                dim_in: *dim_in,
                dim_out: *dim_out,
            },
            VectorMap::Componentwise(fs) => MapSpec::Componentwise {
                components: fs.iter().map(ToString::to_string).collect(),
            },
            VectorMap::Linear(m) => MapSpec::Linear {
                matrix: m
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect(),
            },
            VectorMap::Builtin(b) => MapSpec::Builtin {
                name: b.name().to_string(),
                params: b.params(),
            },
            VectorMap::Compose(maps) => MapSpec::Compose {
                maps: maps.iter().map(MapSpec::from_map).collect(),
            },
            VectorMap::Sum(maps) => MapSpec::Sum {
                maps: maps.iter().map(MapSpec::from_map).collect(),
            },
            VectorMap::DirectSum(maps) => MapSpec::DirectSum {
                maps: maps.iter().map(MapSpec::from_map).collect(),
            },
        }
    }

    pub fn to_map(&self) -> Result<VectorMap> {
        let map = match self {
            MapSpec::Zero { dim_in, dim_out } => VectorMap::Zero {
                dim_in: *dim_in,
                dim_out: *dim_out,
            },
            MapSpec::Componentwise { components } => {
                let fs = components
                    .iter()
                    .map(|s| ScalarFunction::parse(s))
                    .collect::<Result<Vec<_>>>()?;
                VectorMap::Componentwise(fs)
            }
            MapSpec::Linear { matrix } => {
                let rows = matrix.len();
                let cols = matrix.first().map_or(0, Vec::len);
                if matrix.iter().any(|r| r.len() != cols) {
                    return Err(Error::InvalidInput(
                        "linear map rows have unequal lengths".into(),
                    ));
                }
                VectorMap::Linear(DMatrix::from_fn(rows, cols, |i, j| matrix[i][j]))
            }
            MapSpec::Builtin { name, params } => {
                VectorMap::Builtin(BuiltinField::from_name(name, params)?)
            }
            MapSpec::Compose { maps } => VectorMap::Compose(Self::to_maps(maps)?),
            MapSpec::Sum { maps } => VectorMap::Sum(Self::to_maps(maps)?),
            MapSpec::DirectSum { maps } => VectorMap::DirectSum(Self::to_maps(maps)?),
        };
        map.validate()?;
        Ok(map)
    }

    fn to_maps(specs: &[MapSpec]) -> Result<Vec<VectorMap>> {
        specs.iter().map(MapSpec::to_map).collect()
    }
}

/// Serializable mirror of [`CouplingFunction`]: a map plus an optional
/// partition of input positions into classes sharing one component function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub map: MapSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<usize>>>,
}

impl CouplingSpec {
    pub fn from_coupling(g: &CouplingFunction) -> Self {
        CouplingSpec {
            map: MapSpec::from_map(g.map()),
            partition: g.partition().map(<[Vec<usize>]>::to_vec),
        }
    }

    pub fn to_coupling(&self) -> Result<CouplingFunction> {
        let map = self.map.to_map()?;
        match &self.partition {
            None => CouplingFunction::general(map),
            Some(classes) => {
                let VectorMap::Componentwise(fs) = &map else {
                    return Err(Error::InvalidInput(
                        "a coupling partition requires a componentwise map".into(),
                    ));
                };
                let mut class_funcs = Vec::with_capacity(classes.len());
                for class in classes {
                    let Some(&first) = class.first() else {
                        return Err(Error::InvalidInput("empty partition class".into()));
                    };
                    let f = fs.get(first).ok_or_else(|| {
                        Error::InvalidInput(format!("partition index {first} out of range"))
                    })?;
                    for &i in class {
                        if fs.get(i) != Some(f) {
                            return Err(Error::InvalidInput(format!(
                                "component {i} differs from its class representative"
                            )));
                        }
                    }
                    class_funcs.push(f.clone());
                }
                CouplingFunction::componentwise_classes(fs.len(), classes, &class_funcs)
            }
        }
    }
}

/// Serializable mirror of [`VectorFieldSpec`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpecFile {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub internal: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down: Option<CouplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<CouplingSpec>,
}

impl FieldSpecFile {
    pub fn from_spec(spec: &VectorFieldSpec) -> Self {
        FieldSpecFile {
            d: spec.d,
            internal: spec.internal.as_ref().map(CouplingSpec::from_coupling),
            down: spec.down.as_ref().map(CouplingSpec::from_coupling),
            up: spec.up.as_ref().map(CouplingSpec::from_coupling),
        }
    }

    pub fn to_spec(&self) -> Result<VectorFieldSpec> {
        Ok(VectorFieldSpec {
            d: self.d,
            internal: self.internal.as_ref().map(CouplingSpec::to_coupling).transpose()?,
            down: self.down.as_ref().map(CouplingSpec::to_coupling).transpose()?,
            up: self.up.as_ref().map(CouplingSpec::to_coupling).transpose()?,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A realization request: target maps for the down and up summands of
/// `C_d`, plus an optional explicit basis `M^{-1}` whose columns must span
/// the down, up, and harmonic blocks in that order. Omitted targets default
/// to zero maps of the summand dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizeTargetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub down: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_inv: Option<Vec<Vec<f64>>>,
}

impl RealizeTargetFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn read_realize_target(path: &Path) -> Result<RealizeTargetFile> {
    RealizeTargetFile::from_json(&fs::read_to_string(path)?)
}

pub fn read_field_spec(path: &Path) -> Result<VectorFieldSpec> {
    FieldSpecFile::from_json(&fs::read_to_string(path)?)?.to_spec()
}

pub fn write_field_spec(path: &Path, spec: &VectorFieldSpec) -> Result<()> {
    fs::write(path, FieldSpecFile::from_spec(spec).to_json()? + "\n")?;
    Ok(())
}

fn simplex_key(simplex: &[usize]) -> String {
    let parts: Vec<String> = simplex.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(","))
}

fn parse_simplex_key(key: &str) -> Result<Vec<usize>> {
    serde_json::from_str(key)
        .map_err(|_| Error::Parse(format!("invalid simplex key {key:?}")))
}

/// A signed coloring in file form maps every d-simplex (as `"[1,2,3]"`) to
/// `"+name"`, `"-name"`, or `"0"`.
pub fn coloring_to_entries(
    x: &OrientedComplex,
    coloring: &AntiColoring,
) -> Result<BTreeMap<String, String>> {
    let d = coloring.d();
    let simplices = x.simplices(d);
    if simplices.len() != coloring.len() {
        return Err(Error::InvalidInput(format!(
            "coloring has {} values but the complex has {} simplices in dimension {d}",
            coloring.len(),
            simplices.len()
        )));
    }
    let names = coloring.colors();
    let mut entries = BTreeMap::new();
    for (s, v) in simplices.iter().zip(coloring.values()) {
        let text = match v {
            SignedColor::Zero => "0".to_string(),
            SignedColor::Plus(c) => format!("+{}", names[*c]),
            SignedColor::Minus(c) => format!("-{}", names[*c]),
        };
        entries.insert(simplex_key(s), text);
    }
    Ok(entries)
}

/// Parses coloring entries back into an [`AntiColoring`] on dimension `d` of
/// the given complex. Every d-simplex must appear exactly once; color
/// indices are assigned by sorted name order so loading is deterministic.
pub fn coloring_from_entries(
    x: &OrientedComplex,
    d: usize,
    entries: &BTreeMap<String, String>,
) -> Result<AntiColoring> {
    let n = x.size(d);
    if entries.len() != n {
        return Err(Error::InvalidInput(format!(
            "coloring file has {} entries but dimension {d} has {n} simplices",
            entries.len()
        )));
    }
    let mut parsed: Vec<(usize, Option<(bool, String)>)> = Vec::with_capacity(n);
    let mut names = std::collections::BTreeSet::new();
    for (key, value) in entries {
        let simplex = parse_simplex_key(key)?;
        let idx = x
            .index_of(d, &simplex)
            .ok_or_else(|| Error::UnknownSimplex(simplex.clone()))?;
        let value = value.trim();
        let signed = if value == "0" {
            None
        } else if let Some(name) = value.strip_prefix('+') {
            Some((true, name.to_string()))
        } else if let Some(name) = value.strip_prefix('-') {
            Some((false, name.to_string()))
        } else {
            return Err(Error::Parse(format!(
                "color value {value:?} must be \"0\" or start with '+' or '-'"
            )));
        };
        if let Some((_, name)) = &signed {
            names.insert(name.clone());
        }
        parsed.push((idx, signed));
    }
    let colors: Vec<String> = names.into_iter().collect();
    let mut values = vec![SignedColor::Zero; n];
    for (idx, signed) in parsed {
        values[idx] = match signed {
            None => SignedColor::Zero,
            Some((positive, name)) => {
                let c = colors.binary_search(&name).expect("collected above");
                if positive {
                    SignedColor::Plus(c)
                } else {
                    SignedColor::Minus(c)
                }
            }
        };
    }
    AntiColoring::new(d, values, colors)
}

pub fn read_coloring(path: &Path, x: &OrientedComplex, d: usize) -> Result<AntiColoring> {
    let entries: BTreeMap<String, String> = serde_json::from_str(&fs::read_to_string(path)?)?;
    coloring_from_entries(x, d, &entries)
}

pub fn write_coloring(path: &Path, x: &OrientedComplex, coloring: &AntiColoring) -> Result<()> {
    let entries = coloring_to_entries(x, coloring)?;
    fs::write(path, serde_json::to_string_pretty(&entries)? + "\n")?;
    Ok(())
}

/// A partition in file form lists each class as a list of simplices, e.g.
/// `[[[1,2],[2,3]], [[1,3],[1,4],[3,4]]]`.
pub fn partition_to_classes(
    x: &OrientedComplex,
    d: usize,
    partition: &SimplexPartition,
) -> Vec<Vec<Vec<usize>>> {
    let simplices = x.simplices(d);
    partition
        .classes()
        .iter()
        .map(|class| class.iter().map(|&i| simplices[i].clone()).collect())
        .collect()
}

pub fn partition_from_classes(
    x: &OrientedComplex,
    d: usize,
    classes: &[Vec<Vec<usize>>],
) -> Result<SimplexPartition> {
    let index_classes = classes
        .iter()
        .map(|class| {
            class
                .iter()
                .map(|s| {
                    x.index_of(d, s)
                        .ok_or_else(|| Error::UnknownSimplex(s.clone()))
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SimplexPartition::new(x.size(d), index_classes)
}

pub fn read_partition(path: &Path, x: &OrientedComplex, d: usize) -> Result<SimplexPartition> {
    let classes: Vec<Vec<Vec<usize>>> = serde_json::from_str(&fs::read_to_string(path)?)?;
    partition_from_classes(x, d, &classes)
}

pub fn write_partition(
    path: &Path,
    x: &OrientedComplex,
    d: usize,
    partition: &SimplexPartition,
) -> Result<()> {
    let classes = partition_to_classes(x, d, partition);
    fs::write(path, serde_json::to_string_pretty(&classes)? + "\n")?;
    Ok(())
}

/// Formats a value with 12 significant digits in scientific notation,
/// independent of locale.
pub fn format_sig12(v: f64) -> String {
    format!("{v:.11e}")
}

/// Writes trajectory rows as `t,x_1,...,x_n` CSV with 12 significant digits
/// and LF line endings. The output is byte-identical across runs for the
/// same trajectory.
pub fn write_trajectory_csv<W: Write>(out: &mut W, traj: &Trajectory) -> Result<()> {
    let n = traj.dim();
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x_{i}"));
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    for k in 0..traj.len() {
        let mut line = format_sig12(traj.times[k]);
        for j in 0..n {
            line.push(',');
            line.push_str(&format_sig12(traj.states[(k, j)]));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn save_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut bytes = Vec::new();
    write_trajectory_csv(&mut bytes, traj)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes a headerless numeric CSV (one row per matrix row, 12 significant
/// digits, LF endings).
pub fn write_matrix_csv<W: Write>(out: &mut W, m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_sig12(m[(i, j)])).collect();
        out.write_all(row.join(",").as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut bytes = Vec::new();
    write_matrix_csv(&mut bytes, m)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a headerless numeric CSV back into a matrix. Rows must have equal
/// lengths; empty input yields a 0x0 matrix.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {cell:?}", lineno + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("matrix rows have unequal lengths".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
