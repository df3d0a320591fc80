//! CSV input: header `x,y` or `x,y,d`.

use std::io::Read;
use std::path::Path;

use npreg_core::{RddSample, Sample};

use crate::error::{CliError, Result};

/// Parsed columns; `d` only when the file has a treatment column.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d: Option<Vec<f64>>,
}

impl Table {
    pub fn sample(&self) -> Result<Sample> {
        Ok(Sample::new(self.x.clone(), self.y.clone())?)
    }

    /// Sharp design at `cutoff`; a treatment column must agree with it.
    pub fn rdd_sample(&self, cutoff: f64) -> Result<RddSample> {
        let s = match &self.d {
            Some(d) => RddSample::with_treatment(self.x.clone(), self.y.clone(), d, cutoff)?,
            None => RddSample::new(self.x.clone(), self.y.clone(), cutoff)?,
        };
        Ok(s)
    }
}

pub fn ingest_csv(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_csv(file)
}

pub fn read_csv(input: impl Read) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();
    let with_d = match header.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["x", "y"] => false,
        ["x", "y", "d"] => true,
        _ => {
            return Err(CliError::Schema(format!(
                "header is `{}`, expected `x,y` or `x,y,d`",
                header.join(",")
            )))
        }
    };
    let mut t = Table {
        x: Vec::new(),
        y: Vec::new(),
        d: with_d.then(Vec::new),
    };
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Parse {
                    line,
                    message: format!("column {name}: `{raw}` is not a finite number"),
                }),
            }
        };
        t.x.push(field(0, "x")?);
        t.y.push(field(1, "y")?);
        if let Some(d) = t.d.as_mut() {
            let v = field(2, "d")?;
            if v != 0.0 && v != 1.0 {
                return Err(CliError::Parse {
                    line,
                    message: format!("column d: `{v}` is not 0 or 1"),
                });
            }
            d.push(v);
        }
    }
    Ok(t)
}
