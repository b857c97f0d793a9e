//! Domain types shared by the model, calibration and analysis layers.
//!
//! All types are immutable values; constructors enforce their invariants.

use crate::error::{Error, Result};
use std::collections::HashSet;

/// Labels of the five principal-subsystems used when a scenario does not name its own.
pub const DEFAULT_SUBSYSTEMS: [&str; 5] = [
    "comprehensive education",
    "health-care and nutrition access",
    "income avenues, public insurance and micro-financing",
    "human security and legal systems",
    "technological and demographic growth/transition management",
];

/// Ordered, uniquely named set of principal-subsystems.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsystemSet {
    names: Vec<String>,
}

impl SubsystemSet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        let violations = Self::violations(&names);
        if violations.is_empty() {
            Ok(Self { names })
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub(crate) fn violations(names: &[String]) -> Vec<String> {
        let mut out = Vec::new();
        if names.len() < 2 {
            out.push(format!(
                "subsystem set needs at least 2 members, found {}",
                names.len()
            ));
        }
        let mut seen = HashSet::new();
        for (i, n) in names.iter().enumerate() {
            if n.trim().is_empty() {
                out.push(format!("subsystems[{i}] is empty"));
            } else if !seen.insert(n.as_str()) {
                out.push(format!("subsystems[{i}] duplicates name {n:?}"));
            }
        }
        out
    }

    pub(crate) fn from_names_unchecked(names: Vec<String>) -> Self {
        Self { names }
    }

    /// The five default subsystems for `n == 5`, `S1..Sn` otherwise.
    pub fn default_sized(n: usize) -> Self {
        if n == DEFAULT_SUBSYSTEMS.len() {
            Self::default()
        } else {
            Self::generic(n)
        }
    }

    pub fn generic(n: usize) -> Self {
        Self {
            names: (1..=n).map(|i| format!("S{i}")).collect(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl Default for SubsystemSet {
    fn default() -> Self {
        Self {
            names: DEFAULT_SUBSYSTEMS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Dense row-major square grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    fn from_rows(rows: Vec<Vec<f64>>, what: &'static str) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid(format!("{what} must have at least one row")));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::Shape {
                    what,
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }
}

/// Dynamic relationship strengths `R_ij(t)`: how strongly subsystem `j` acts on subsystem `i`.
///
/// Entries are finite and non-negative and the diagonal is exactly 1. Whether entries may exceed
/// 1 depends on the clamp option of the run, see [`InfluenceMatrix::is_clamped`].
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    grid: Square,
    timestamp: i64,
}

impl InfluenceMatrix {
    pub fn new(rows: Vec<Vec<f64>>, timestamp: i64) -> Result<Self> {
        let grid = Square::from_rows(rows, "influence matrix")?;
        let violations = influence_violations(&grid.rows(), false, "R");
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Self { grid, timestamp })
    }

    pub fn identity(n: usize, timestamp: i64) -> Self {
        Self {
            grid: Square::identity(n),
            timestamp,
        }
    }

    /// Builds from entries computed by the update rule, which keeps every invariant.
    pub(crate) fn from_flat_unchecked(n: usize, data: Vec<f64>, timestamp: i64) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self {
            grid: Square { n, data },
            timestamp,
        }
    }

    pub fn dim(&self) -> usize {
        self.grid.n
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn with_timestamp(mut self, timestamp: i64) -> Self {
        self.timestamp = timestamp;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.grid.row(i)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.grid.rows()
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.grid.data
    }

    pub fn is_clamped(&self) -> bool {
        self.grid.data.iter().all(|&x| x <= 1.0)
    }
}

/// Collects every invariant violation of a candidate influence matrix, naming cells as `label[i][j]`.
pub(crate) fn influence_violations(rows: &[Vec<f64>], clamp: bool, label: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                out.push(format!("{label}[{i}][{j}] = {x} is not finite"));
            } else if i == j && x != 1.0 {
                out.push(format!(
                    "{label}[{i}][{j}] = {x}: diagonal entries must be exactly 1"
                ));
            } else if x < 0.0 {
                out.push(format!("{label}[{i}][{j}] = {x} is negative"));
            } else if clamp && x > 1.0 {
                out.push(format!("{label}[{i}][{j}] = {x} is out of range [0, 1]"));
            }
        }
    }
    out
}

/// Fixed utility weight factors `U_ij`. Time-invariant, so no timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    grid: Square,
}

impl UtilityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let grid = Square::from_rows(rows, "utility matrix")?;
        if let Some(pos) = grid.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "U[{}][{}] is not finite",
                pos / grid.n,
                pos % grid.n
            )));
        }
        Ok(Self { grid })
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![vec![value; n]; n])
    }

    pub fn dim(&self) -> usize {
        self.grid.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid.get(i, j)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.grid.row(i)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.grid.rows()
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.rows()
                .into_iter()
                .map(|r| r.into_iter().map(|x| alpha * x).collect())
                .collect(),
        )
    }
}

/// Performance metrics `W_Si(t)`, one per subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceVector {
    values: Vec<f64>,
    timestamp: i64,
}

impl PerformanceVector {
    pub fn new(values: Vec<f64>, timestamp: i64) -> Result<Self> {
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "W[{i}] = {} is not finite",
                values[i]
            )));
        }
        Ok(Self { values, timestamp })
    }

    pub fn zeros(n: usize, timestamp: i64) -> Self {
        Self {
            values: vec![0.0; n],
            timestamp,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn is_normalized(&self) -> bool {
        self.values.iter().all(|x| (0.0..=1.0).contains(x))
    }
}

/// Additive exogenous adjustment to the performance vector produced at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyIntervention {
    emphasis: Vec<f64>,
    timestamp: i64,
}

impl PolicyIntervention {
    pub fn new(emphasis: Vec<f64>, timestamp: i64) -> Result<Self> {
        if let Some(i) = emphasis.iter().position(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!(
                "policy emphasis[{i}] = {} is not finite",
                emphasis[i]
            )));
        }
        Ok(Self {
            emphasis,
            timestamp,
        })
    }

    pub fn none(n: usize, timestamp: i64) -> Self {
        Self {
            emphasis: vec![0.0; n],
            timestamp,
        }
    }

    pub fn emphasis(&self) -> &[f64] {
        &self.emphasis
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    /// Clamp updated strengths to [0, 1].
    pub clamp: bool,
    /// Deltas at or below this magnitude count as zero; deltas this close count as equal.
    pub eps_delta: f64,
    /// Clip produced performance values to [0, 1].
    pub normalize_w: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            clamp: true,
            eps_delta: 1e-9,
            normalize_w: true,
        }
    }
}

impl ModelOptions {
    pub fn validate(&self) -> Result<()> {
        if self.eps_delta > 0.0 && self.eps_delta.is_finite() {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "eps_delta must be positive and finite, got {}",
                self.eps_delta
            )))
        }
    }
}
