//! Function files and CSV exports.
//!
//! Input files are JSON in one of three layouts, told apart by their keys:
//! `{origin, step, count, values}` for a 1D function, `{gridX, gridY, terms}`
//! for a tensor function and `{gridX, gridY, values}` for a dense one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filters::{dilate, MotherFilter};
use crate::grid::{DenseFunction2D, Grid1D, SampledFunction1D, TensorFunction2D};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionFile {
    OneD(SampledFunction1D),
    Tensor(TensorFunction2D),
    Dense(DenseFunction2D),
}

impl FunctionFile {
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("function file must hold a JSON object".into()))?;
        if obj.contains_key("terms") {
            Ok(Self::Tensor(serde_json::from_value(value)?))
        } else if obj.contains_key("gridX") {
            Ok(Self::Dense(serde_json::from_value(value)?))
        } else if obj.contains_key("step") {
            Ok(Self::OneD(serde_json::from_value(value)?))
        } else {
            Err(Error::Config(
                "unrecognized function file: expected a 1D, tensor or dense layout".into(),
            ))
        }
    }

    /// Dense view; tensors are materialized and 1D functions are rejected.
    pub fn into_dense(self) -> Result<DenseFunction2D> {
        match self {
            Self::Dense(d) => Ok(d),
            Self::Tensor(t) => Ok(t.materialize()),
            Self::OneD(_) => Err(Error::Config("expected a 2D function, found a 1D one".into())),
        }
    }
}

pub fn load_function(path: &Path) -> Result<FunctionFile> {
    let reader = BufReader::new(File::open(path)?);
    FunctionFile::from_value(serde_json::from_reader(reader)?)
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn save_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_json(value, &mut out)?;
    out.flush()?;
    Ok(())
}

/// One CSV row per `y` sample, `count_x` values each, no header.
pub fn write_dense_csv<W: Write>(f: &DenseFunction2D, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in f.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_function_csv<W: Write>(f: &SampledFunction1D, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "value"])?;
    for (x, v) in f.grid().points().zip(f.values()) {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `x,value` rows of the mother profile, or of its dilation by `t` on `grid`.
pub fn write_filter_csv<W: Write>(
    zeta: &MotherFilter,
    dilation: Option<(f64, &Grid1D)>,
    out: W,
) -> Result<()> {
    match dilation {
        None => write_function_csv(zeta.profile(), out),
        Some((t, grid)) => write_function_csv(&dilate(zeta, t, grid)?, out),
    }
}

pub fn read_dense_csv(text: &str, grid_x: Grid1D, grid_y: Grid1D) -> Result<DenseFunction2D> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut values = Vec::with_capacity(grid_x.count() * grid_y.count());
    for record in r.records() {
        for field in record?.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad CSV value {field:?}: {e}")))?,
            );
        }
    }
    DenseFunction2D::new(grid_x, grid_y, values)
}
