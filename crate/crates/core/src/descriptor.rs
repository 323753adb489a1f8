//! JSON descriptors for spaces and operators, and the fixed-precision JSON
//! writer used for reports.
//!
//! Complex numbers travel as `[re, im]`; a bare number is accepted on input
//! as a real value.

use std::io;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::measure_space::{build_space, MeasureSpace};
use crate::operators::{densify, named, FiniteRankOperator, Operator};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    #[serde(default)]
    pub cells: usize,
    #[serde(default)]
    pub atoms: Vec<i64>,
}

impl SpaceDescriptor {
    pub fn build(&self) -> Result<MeasureSpace> {
        build_space(self.cells, &self.atoms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Scalar> for C64 {
    fn from(s: Scalar) -> C64 {
        match s {
            Scalar::Real(re) => C64::new(re, 0.0),
            Scalar::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorDescriptor {
    Dense {
        kernel: Vec<Vec<Scalar>>,
    },
    FiniteRank {
        #[serde(rename = "F")]
        f: Vec<Vec<Scalar>>,
        #[serde(rename = "G")]
        g: Vec<Vec<Scalar>>,
    },
    Named {
        name: String,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        cells: Option<usize>,
    },
}

/// Input file: `{"space": ..., "operator": ..., "sets": ...}` or a bare
/// operator descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    #[serde(default)]
    pub space: Option<SpaceDescriptor>,
    pub operator: OperatorDescriptor,
    /// Standard sets as point-index lists, for commands that take them.
    #[serde(default)]
    pub sets: Option<Vec<Vec<usize>>>,
}

impl InputFile {
    pub fn parse(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("kind").is_some() {
            let operator = serde_json::from_value(value)?;
            return Ok(InputFile { space: None, operator, sets: None });
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// An operator resolved from a descriptor, with its factorization when the
/// descriptor supplied one.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub operator: Operator,
    pub finite_rank: Option<FiniteRankOperator>,
}

fn to_matrix(rows: &[Vec<Scalar>], what: &str) -> Result<DMatrix<C64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Descriptor(format!("{what} rows have different lengths")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j].into()))
}

fn default_space(space: &Option<SpaceDescriptor>, p: usize) -> Result<MeasureSpace> {
    match space {
        Some(s) => s.build(),
        None => MeasureSpace::atomic(p),
    }
}

pub fn resolve(input: &InputFile) -> Result<Resolved> {
    match &input.operator {
        OperatorDescriptor::Dense { kernel } => {
            let k = to_matrix(kernel, "kernel")?;
            if k.nrows() != k.ncols() {
                return Err(Error::DimensionMismatch(format!("kernel is {}x{}", k.nrows(), k.ncols())));
            }
            let space = default_space(&input.space, k.nrows())?;
            Ok(Resolved { operator: Operator::from_kernel(space, k)?, finite_rank: None })
        }
        OperatorDescriptor::FiniteRank { f, g } => {
            let f = to_matrix(f, "F")?;
            let g = to_matrix(g, "G")?;
            let space = default_space(&input.space, f.nrows())?;
            let kfr = FiniteRankOperator::new(space, f, g)?;
            Ok(Resolved { operator: densify(&kfr)?, finite_rank: Some(kfr) })
        }
        OperatorDescriptor::Named { name, n, cells } => {
            let cells = cells.or(input.space.as_ref().map(|s| s.cells)).unwrap_or(64);
            let suffix = if name == "paper_example" { Some("") } else { name.strip_prefix("paper_example_") };
            match (name.as_str(), suffix) {
                (_, Some(rest)) => {
                    let n = match (n, rest.parse::<usize>()) {
                        (Some(n), _) => *n,
                        (None, Ok(n)) => n,
                        (None, Err(_)) => {
                            return Err(Error::Descriptor(format!("{name} needs a numeric \"n\"")));
                        }
                    };
                    let kfr = named::paper_example(n)?;
                    Ok(Resolved { operator: densify(&kfr)?, finite_rank: Some(kfr) })
                }
                ("volterra_linear", None) => {
                    Ok(Resolved { operator: named::volterra_linear(cells)?, finite_rank: None })
                }
                ("ones_kernel", None) => Ok(Resolved { operator: named::ones_kernel(cells)?, finite_rank: None }),
                _ => Err(Error::Descriptor(format!("unknown named operator {name:?}"))),
            }
        }
    }
}

/// Pretty JSON where every float is written with 17 significant digits.
pub struct FixedPrecision {
    inner: PrettyFormatter<'static>,
}

impl Default for FixedPrecision {
    fn default() -> Self {
        Self { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Formatter for FixedPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedPrecision::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub mod complex {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub mod complex_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

pub mod complex_opt {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| [z.re, z.im]).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Ok(Option::<[f64; 2]>::deserialize(d)?.map(|[re, im]| C64::new(re, im)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_operator_kinds() {
        let dense = InputFile::parse(r#"{"kind":"dense","kernel":[[[0,0],[1,0]],[0,[2,-1]]]}"#).unwrap();
        let r = resolve(&dense).unwrap();
        assert_eq!(r.operator.dim(), 2);
        assert_eq!(r.operator.kernel().unwrap()[(1, 1)], C64::new(2.0, -1.0));

        let fr = InputFile::parse(
            r#"{"space":{"cells":0,"atoms":[5,6]},"operator":{"kind":"finite_rank","F":[[1],[0]],"G":[[0],[1]]}}"#,
        )
        .unwrap();
        let r = resolve(&fr).unwrap();
        assert_eq!(r.finite_rank.as_ref().unwrap().rank(), 1);
        assert_eq!(r.operator.entries()[(0, 1)], C64::new(1.0, 0.0));

        let named = InputFile::parse(r#"{"kind":"named","name":"paper_example_n","n":2}"#).unwrap();
        assert_eq!(resolve(&named).unwrap().operator.dim(), 5);
        let named = InputFile::parse(r#"{"kind":"named","name":"paper_example_3"}"#).unwrap();
        assert_eq!(resolve(&named).unwrap().operator.dim(), 7);
        let v = InputFile::parse(r#"{"kind":"named","name":"volterra_linear","cells":16}"#).unwrap();
        assert_eq!(resolve(&v).unwrap().operator.dim(), 16);
    }

    #[test]
    fn descriptor_errors() {
        assert!(matches!(InputFile::parse("{not json"), Err(Error::Json(_))));
        let bad = InputFile::parse(r#"{"kind":"named","name":"nope"}"#).unwrap();
        assert!(matches!(resolve(&bad), Err(Error::Descriptor(_))));
        let ragged = InputFile::parse(r#"{"kind":"dense","kernel":[[1,2],[3]]}"#).unwrap();
        assert!(matches!(resolve(&ragged), Err(Error::Descriptor(_))));
        let mismatch = InputFile::parse(r#"{"space":{"cells":3},"operator":{"kind":"dense","kernel":[[1]]}}"#).unwrap();
        assert!(matches!(resolve(&mismatch), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn floats_have_seventeen_digits() {
        #[derive(Serialize)]
        struct T {
            x: f64,
            k: usize,
        }
        let s = to_json(&T { x: 0.1, k: 3 }).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"k\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }
}
