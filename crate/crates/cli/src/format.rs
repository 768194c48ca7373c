//! The JSON surface-data document.
//!
//! ```json
//! { "version": 1, "c": 0,
//!   "chart": { "nx": 8, "ny": 8, "x_min": 0.0, "x_max": 1.0, "y_min": 0.0, "y_max": 1.0,
//!              "periodic_x": false, "periodic_y": false },
//!   "u": [..], "phi_re": [..], "phi_im": [..], "psi_re": [..], "psi_im": [..] }
//! ```
//!
//! Arrays are row-major, entry `iy * nx + ix`. Floats are written in the
//! shortest form that parses back to the same bits.

use std::fs;
use std::path::{Path, PathBuf};

use lagbonnet_core::chart::{ComplexField, ConformalChart, RealField};
use lagbonnet_core::surface::{SpaceForm, SurfaceData};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

pub const VERSION: u64 = 1;

const ARRAYS: [&str; 5] = ["u", "phi_re", "phi_im", "psi_re", "psi_im"];

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported version {0}")]
    UnsupportedVersion(Value),
    #[error("field `{field}` has {got} entries, expected {expected}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid c = {0}; expected -1, 0 or 1")]
    InvalidC(Value),
    #[error("non-finite entry in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },
    #[error("invalid chart: {0}")]
    Chart(lagbonnet_core::Error),
}

impl FormatError {
    /// Stable short name of the failure class.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Unreadable { .. } => "unreadable",
            Self::Malformed(_) => "malformed",
            Self::UnsupportedVersion(_) => "version",
            Self::LengthMismatch { .. } => "length-mismatch",
            Self::InvalidC(_) => "invalid-c",
            Self::NonFinite { .. } => "non-finite",
            Self::Chart(_) => "chart",
        }
    }
}

#[derive(Serialize)]
struct ChartDoc {
    nx: usize,
    ny: usize,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    periodic_x: bool,
    periodic_y: bool,
}

#[derive(Serialize)]
struct SurfaceDoc<'a> {
    version: u64,
    c: i64,
    chart: ChartDoc,
    u: &'a [f64],
    phi_re: Vec<f64>,
    phi_im: Vec<f64>,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
}

pub fn emit_surface(data: &SurfaceData) -> String {
    let chart = data.chart();
    let (x_min, x_max) = chart.x_range();
    let (y_min, y_max) = chart.y_range();
    let doc = SurfaceDoc {
        version: VERSION,
        c: data.space().c(),
        chart: ChartDoc {
            nx: chart.nx(),
            ny: chart.ny(),
            x_min,
            x_max,
            y_min,
            y_max,
            periodic_x: chart.periodic_x(),
            periodic_y: chart.periodic_y(),
        },
        u: data.u().values(),
        phi_re: data.phi().values().iter().map(|v| v.re).collect(),
        phi_im: data.phi().values().iter().map(|v| v.im).collect(),
        psi_re: data.psi().values().iter().map(|v| v.re).collect(),
        psi_im: data.psi().values().iter().map(|v| v.im).collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("finite data serializes");
    s.push('\n');
    s
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, FormatError> {
    obj.get(key).ok_or_else(|| FormatError::Malformed(format!("missing `{key}`")))
}

fn number(obj: &Map<String, Value>, key: &str) -> Result<f64, FormatError> {
    field(obj, key)?
        .as_f64()
        .ok_or_else(|| FormatError::Malformed(format!("`{key}` must be a number")))
}

fn count(obj: &Map<String, Value>, key: &str) -> Result<usize, FormatError> {
    field(obj, key)?
        .as_u64()
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| FormatError::Malformed(format!("`{key}` must be a non-negative integer")))
}

fn flag(obj: &Map<String, Value>, key: &str) -> Result<bool, FormatError> {
    field(obj, key)?
        .as_bool()
        .ok_or_else(|| FormatError::Malformed(format!("`{key}` must be a boolean")))
}

/// Entries are numbers; `null` and the strings `NaN`, `Infinity` and
/// `-Infinity` are read as non-finite values and rejected.
fn array(obj: &Map<String, Value>, key: &'static str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let items = field(obj, key)?
        .as_array()
        .ok_or_else(|| FormatError::Malformed(format!("`{key}` must be an array")))?;
    if items.len() != expected {
        return Err(FormatError::LengthMismatch {
            field: key,
            expected,
            got: items.len(),
        });
    }
    items
        .iter()
        .enumerate()
        .map(|(index, v)| match v {
            Value::Number(n) => n
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or(FormatError::NonFinite { field: key, index }),
            Value::Null => Err(FormatError::NonFinite { field: key, index }),
            Value::String(s) if matches!(s.as_str(), "NaN" | "Infinity" | "-Infinity" | "inf" | "-inf") => {
                Err(FormatError::NonFinite { field: key, index })
            }
            _ => Err(FormatError::Malformed(format!("`{key}[{index}]` must be a number"))),
        })
        .collect()
}

pub fn parse_surface(text: &str) -> Result<SurfaceData, FormatError> {
    let root: Value = serde_json::from_str(text).map_err(|e| FormatError::Malformed(e.to_string()))?;
    let obj = root
        .as_object()
        .ok_or_else(|| FormatError::Malformed("document must be an object".into()))?;
    let version = field(obj, "version")?;
    if version.as_u64() != Some(VERSION) {
        return Err(FormatError::UnsupportedVersion(version.clone()));
    }
    let c_value = field(obj, "c")?;
    let space = c_value
        .as_i64()
        .and_then(|c| SpaceForm::from_c(c).ok())
        .ok_or_else(|| FormatError::InvalidC(c_value.clone()))?;
    let chart_obj = field(obj, "chart")?
        .as_object()
        .ok_or_else(|| FormatError::Malformed("`chart` must be an object".into()))?;
    let chart = ConformalChart::with_periodicity(
        count(chart_obj, "nx")?,
        count(chart_obj, "ny")?,
        (number(chart_obj, "x_min")?, number(chart_obj, "x_max")?),
        (number(chart_obj, "y_min")?, number(chart_obj, "y_max")?),
        flag(chart_obj, "periodic_x")?,
        flag(chart_obj, "periodic_y")?,
    )
    .map_err(FormatError::Chart)?;
    let n = chart.len();
    let [u, phi_re, phi_im, psi_re, psi_im] = ARRAYS.map(|key| array(obj, key, n));
    let (u, phi_re, phi_im, psi_re, psi_im) = (u?, phi_re?, phi_im?, psi_re?, psi_im?);
    let complex = |re: Vec<f64>, im: Vec<f64>| re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect();
    let build = || -> lagbonnet_core::Result<SurfaceData> {
        SurfaceData::new(
            space,
            RealField::from_values(chart, u)?,
            ComplexField::from_values(chart, complex(phi_re, phi_im))?,
            ComplexField::from_values(chart, complex(psi_re, psi_im))?,
        )
    };
    build().map_err(FormatError::Chart)
}

pub fn read_surface(path: &Path) -> Result<SurfaceData, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    parse_surface(&text)
}
