//! Uniform `(x, y, y_err)` series shared by every scan and fit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SignalError {
    #[error("length mismatch: x has {x}, y has {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("error column has {got} entries, expected {expected}")]
    ErrorLength { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalCurve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub y_err: Option<Vec<f64>>,
}

impl SignalCurve {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, SignalError> {
        if x.len() != y.len() {
            return Err(SignalError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        Ok(Self { x, y, y_err: None })
    }

    pub fn with_errors(mut self, y_err: Vec<f64>) -> Result<Self, SignalError> {
        if y_err.len() != self.y.len() {
            return Err(SignalError::ErrorLength {
                expected: self.y.len(),
                got: y_err.len(),
            });
        }
        self.y_err = Some(y_err);
        Ok(self)
    }

    /// Samples `f` on `x`.
    pub fn from_fn(x: &[f64], f: impl Fn(f64) -> f64) -> Self {
        Self {
            x: x.to_vec(),
            y: x.iter().map(|&v| f(v)).collect(),
            y_err: None,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Appends `other` after `self`; used to stack channels for joint fits.
    pub fn concat(&self, other: &SignalCurve) -> SignalCurve {
        let mut x = self.x.clone();
        x.extend_from_slice(&other.x);
        let mut y = self.y.clone();
        y.extend_from_slice(&other.y);
        let y_err = match (&self.y_err, &other.y_err) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        SignalCurve { x, y, y_err }
    }

    /// Multiplies every x value by `factor` (unit conversion).
    pub fn scale_x(mut self, factor: f64) -> Self {
        self.x.iter_mut().for_each(|v| *v *= factor);
        self
    }

    pub fn argmin(&self) -> Option<usize> {
        argext(&self.y, |a, b| a < b)
    }

    pub fn argmax(&self) -> Option<usize> {
        argext(&self.y, |a, b| a > b)
    }

    /// Indices of strict interior local minima of `y`.
    pub fn local_minima(&self) -> Vec<usize> {
        (1..self.y.len().saturating_sub(1))
            .filter(|&i| self.y[i] < self.y[i - 1] && self.y[i] <= self.y[i + 1])
            .collect()
    }
}

fn argext(v: &[f64], better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &y) in v.iter().enumerate() {
        match best {
            Some(b) if !better(y, v[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Evenly spaced grid including both end points.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n).map(|i| start + step * i as f64).collect()
        }
    }
}

/// Logarithmically spaced grid including both end points.
pub fn logspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    linspace(start.ln(), stop.ln(), points)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Minimal CSV table with a units comment line and a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str], units: &[&str]) -> Self {
        let units_line = header
            .iter()
            .zip(units)
            .map(|(h, u)| format!("{h}={u}"))
            .collect::<Vec<_>>()
            .join(", ");
        Self {
            comments: vec![format!("units: {units_line}")],
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.insert(0, line.into());
        self
    }

    pub fn push_numeric(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| format_float(*v)).collect());
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }

    /// Parses text written by [`CsvTable::render`] (or any comma separated
    /// table with `#` comment lines and a single header row).
    pub fn parse(text: &str) -> Result<Self, SignalError> {
        let mut comments = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                comments.push(c.trim().to_string());
                continue;
            }
            let cells: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
            match &header {
                None => header = Some(cells),
                Some(h) if h.len() != cells.len() => {
                    return Err(SignalError::Csv {
                        line: i + 1,
                        msg: format!("expected {} columns, found {}", h.len(), cells.len()),
                    })
                }
                Some(_) => rows.push(cells),
            }
        }
        let header = header.ok_or(SignalError::Csv {
            line: 0,
            msg: "missing header row".into(),
        })?;
        Ok(Self {
            comments,
            header,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<Result<Vec<f64>, SignalError>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    r[idx].parse::<f64>().map_err(|e| SignalError::Csv {
                        line: i + 1,
                        msg: format!("column {name}: {e}"),
                    })
                })
                .collect(),
        )
    }

    /// Value of a `# key: value` comment line.
    pub fn comment_value(&self, key: &str) -> Option<&str> {
        self.comments.iter().find_map(|c| {
            c.strip_prefix(key)
                .and_then(|rest| rest.trim_start().strip_prefix(':'))
                .map(str::trim)
        })
    }
}

/// Shortest representation that parses back to the same value.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}
