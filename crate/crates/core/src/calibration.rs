//! Calibration of fixed utility weights and of initial relationship strengths.
//!
//! Utility weights come from the minimum-norm solution of `W_i = Σ_j R_ij · U_ij`, obtained with
//! Lagrange multipliers: with constraint rows stacked in `A` (one row of `A` per subsystem, acting
//! on the flattened `U`), the multipliers solve `(A Aᵀ) λ = W` and `U = Aᵀ λ`.
//!
//! Initial strengths are tuned coordinate by coordinate until a policy function evaluated on each
//! row reproduces the observed next-step performance.

use crate::error::{Error, Result};
use crate::model::{apply_deltas, deltas, BranchCounts};
use crate::types::{InfluenceMatrix, ModelOptions, PerformanceVector, SubsystemSet, UtilityMatrix};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Absolute tolerance on the reproduced performance for the utility solver.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// Predicts the performance of subsystem `i` from row `i` of R and row `i` of U.
pub trait PolicyFunction {
    fn name(&self) -> &str;

    fn evaluate(&self, r_row: &[f64], u_row: &[f64]) -> f64;

    /// True when the prediction is monotone in each strength, which allows bisection.
    fn is_monotone(&self) -> bool {
        false
    }
}

/// The forward aggregation `Σ_j R_ij · U_ij`.
#[derive(Debug, Clone, Copy, Default)]
pub struct LinearForward;

impl PolicyFunction for LinearForward {
    fn name(&self) -> &str {
        "linear-forward"
    }

    fn evaluate(&self, r_row: &[f64], u_row: &[f64]) -> f64 {
        r_row.iter().zip(u_row).map(|(r, u)| r * u).sum()
    }

    fn is_monotone(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub bracket: (f64, f64),
    /// Options for deriving R(t) from the tuned R(t-1).
    pub model: ModelOptions,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_sweeps: 200,
            bracket: (0.0, 1.0),
            model: ModelOptions::default(),
        }
    }
}

impl TuneOptions {
    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            v.push(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_sweeps == 0 {
            v.push("max_sweeps must be at least 1".to_string());
        }
        let (lo, hi) = self.bracket;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            v.push(format!(
                "bracket must be a non-degenerate interval within [0, 1], got [{lo}, {hi}]"
            ));
        }
        if self.model.validate().is_err() {
            v.push(format!(
                "eps_delta must be positive, got {}",
                self.model.eps_delta
            ));
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowNote {
    /// All strengths in the row are zero and so is the target; weights set to zero.
    DegenerateRow,
    /// No single coordinate move inside the bracket can cross the target.
    UnreachableTarget,
    /// Sweep budget exhausted.
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowReport {
    pub row: usize,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<RowNote>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub tol: f64,
    pub rows: Vec<RowReport>,
}

impl CalibrationReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn failed_rows(&self) -> impl Iterator<Item = &RowReport> {
        self.rows.iter().filter(|r| !r.converged)
    }
}

fn check_dims(r: &InfluenceMatrix, w: &PerformanceVector) -> Result<()> {
    if r.dim() != w.len() {
        return Err(Error::Shape {
            what: "calibration target",
            expected: r.dim(),
            found: w.len(),
        });
    }
    Ok(())
}

/// Minimum-Euclidean-norm `U` with `Σ_j R_ij · U_ij = W_i` for every row.
///
/// An all-zero row of R with a zero target yields a zero row of U and a degenerate note; with a
/// nonzero target the row is infeasible.
pub fn solve_utility_min_norm(
    r: &InfluenceMatrix,
    w: &PerformanceVector,
) -> Result<(UtilityMatrix, CalibrationReport)> {
    check_dims(r, w)?;
    solve_min_norm_rows(&r.rows(), w.values())
}

/// Same solve over raw non-negative strength rows, which need not carry a unit diagonal.
pub fn solve_min_norm_rows(
    strengths: &[Vec<f64>],
    targets: &[f64],
) -> Result<(UtilityMatrix, CalibrationReport)> {
    let n = strengths.len();
    if targets.len() != n {
        return Err(Error::Shape {
            what: "calibration target",
            expected: n,
            found: targets.len(),
        });
    }
    if let Some(row) = strengths.iter().find(|r| r.len() != n) {
        return Err(Error::Shape {
            what: "calibration strengths",
            expected: n,
            found: row.len(),
        });
    }
    if strengths
        .iter()
        .flatten()
        .chain(targets)
        .any(|x| !x.is_finite())
    {
        return Err(Error::Domain("calibration inputs must be finite".into()));
    }
    let names = SubsystemSet::default_sized(n);

    let mut active = Vec::new();
    let mut notes = vec![None; n];
    for i in 0..n {
        if strengths[i].iter().all(|&x| x == 0.0) {
            if targets[i] != 0.0 {
                return Err(Error::InfeasibleRow {
                    row: i,
                    name: names.name(i).to_string(),
                    target: targets[i],
                });
            }
            notes[i] = Some(RowNote::DegenerateRow);
        } else {
            active.push(i);
        }
    }

    // Constraint matrix over the flattened unknowns, one row per feasible subsystem.
    let m = active.len();
    let mut a = DMatrix::<f64>::zeros(m, n * n);
    let mut b = DVector::<f64>::zeros(m);
    for (k, &i) in active.iter().enumerate() {
        for j in 0..n {
            a[(k, i * n + j)] = strengths[i][j];
        }
        b[k] = targets[i];
    }
    let flat = if m == 0 {
        DVector::zeros(n * n)
    } else {
        let gram = &a * a.transpose();
        let lambda = gram
            .cholesky()
            .ok_or_else(|| Error::NoConvergence("constraint Gram matrix is singular".into()))?
            .solve(&b);
        a.transpose() * lambda
    };

    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| flat[i * n + j]).collect())
        .collect();
    let u = UtilityMatrix::new(rows)?;

    let report = CalibrationReport {
        tol: CONSTRAINT_TOL,
        rows: (0..n)
            .map(|i| {
                let residual = (LinearForward.evaluate(&strengths[i], u.row(i)) - targets[i]).abs();
                RowReport {
                    row: i,
                    residual,
                    iterations: usize::from(notes[i].is_none()),
                    converged: residual <= CONSTRAINT_TOL,
                    note: notes[i],
                }
            })
            .collect(),
    };
    Ok((u, report))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Probes minimality of `U`: random directions projected onto each row's constraint null space
/// must never shorten the row. Returns false if `U` does not satisfy the constraints.
pub fn verify_min_norm(
    u: &UtilityMatrix,
    r: &InfluenceMatrix,
    w: &PerformanceVector,
    trials: usize,
    seed: u64,
) -> bool {
    let n = r.dim();
    if u.dim() != n || w.len() != n {
        return false;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let r_row = r.row(i);
        let u_row = u.row(i);
        if (LinearForward.evaluate(r_row, u_row) - w.values()[i]).abs() > CONSTRAINT_TOL {
            return false;
        }
        let rr: f64 = r_row.iter().map(|x| x * x).sum();
        // Null space of a single nonzero constraint has dimension n - 1.
        let null_dim = if rr > 0.0 { n - 1 } else { n };
        if null_dim == 0 {
            continue;
        }
        let base = norm(u_row);
        let scale = base.max(1.0);
        for _ in 0..trials {
            let mut d: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if rr > 0.0 {
                let proj = d.iter().zip(r_row).map(|(a, b)| a * b).sum::<f64>() / rr;
                for (dj, rj) in d.iter_mut().zip(r_row) {
                    *dj -= proj * rj;
                }
            }
            let mag: f64 = rng.gen_range(1e-3..1.0) * scale;
            let dn = norm(&d);
            if dn == 0.0 {
                continue;
            }
            let moved: Vec<f64> = u_row
                .iter()
                .zip(&d)
                .map(|(uj, dj)| uj + dj * mag / dn)
                .collect();
            if norm(&moved) < base - 1e-9 {
                return false;
            }
        }
    }
    true
}

/// Starting strengths: unit diagonal and every other cell at the bracket midpoint.
pub fn initial_guess(n: usize, bracket: (f64, f64), timestamp: i64) -> InfluenceMatrix {
    let mid = 0.5 * (bracket.0 + bracket.1);
    let data = (0..n * n)
        .map(|k| if k / n == k % n { 1.0 } else { mid })
        .collect();
    InfluenceMatrix::from_flat_unchecked(n, data, timestamp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    /// Tuned strengths at t-1.
    pub r_prev: InfluenceMatrix,
    /// Strengths at t derived from `r_prev` by the update rule.
    pub r_curr: InfluenceMatrix,
    pub report: CalibrationReport,
    pub branches: BranchCounts,
}

/// Tunes R(t-1) row by row until `policy(R row, U row)` matches `w_curr` within `opts.tol`, then
/// derives R(t) from it with the deltas `w_curr - w_prev`.
///
/// Coordinates are swept in ascending column order skipping the diagonal. A monotone policy is
/// tuned by bisection, any other by golden-section search on the absolute residual. Rows that do
/// not converge are flagged in the report and keep their best-found values.
pub fn tune_initial_r(
    w_prev: &PerformanceVector,
    w_curr: &PerformanceVector,
    u: &UtilityMatrix,
    policy: &dyn PolicyFunction,
    guess: Option<&InfluenceMatrix>,
    opts: &TuneOptions,
) -> Result<TuneResult> {
    opts.validate()?;
    let n = u.dim();
    for (what, len) in [("tune W(t-1)", w_prev.len()), ("tune W(t)", w_curr.len())] {
        if len != n {
            return Err(Error::Shape {
                what,
                expected: n,
                found: len,
            });
        }
    }
    if w_curr.timestamp() <= w_prev.timestamp() {
        return Err(Error::Sequencing {
            what: "tune W(t)",
            expected: w_prev.timestamp() + 1,
            found: w_curr.timestamp(),
        });
    }
    let start = match guess {
        Some(g) => {
            if g.dim() != n {
                return Err(Error::Shape {
                    what: "tune initial guess",
                    expected: n,
                    found: g.dim(),
                });
            }
            g.clone()
        }
        None => initial_guess(n, opts.bracket, w_prev.timestamp()),
    };

    let mut data = start.as_slice().to_vec();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        rows.push(tune_row(i, row, u.row(i), w_curr.values()[i], policy, opts));
    }
    let r_prev = InfluenceMatrix::new(
        data.chunks(n).map(<[f64]>::to_vec).collect(),
        w_prev.timestamp(),
    )?;
    let (r_curr, branches) = apply_deltas(
        &deltas(w_prev, w_curr),
        &r_prev,
        &opts.model,
        w_curr.timestamp(),
    )?;
    Ok(TuneResult {
        r_prev,
        r_curr,
        report: CalibrationReport {
            tol: opts.tol,
            rows,
        },
        branches,
    })
}

fn tune_row(
    i: usize,
    row: &mut [f64],
    u_row: &[f64],
    target: f64,
    policy: &dyn PolicyFunction,
    opts: &TuneOptions,
) -> RowReport {
    let residual = |row: &[f64]| policy.evaluate(row, u_row) - target;
    let mut sweeps = 0;
    while residual(row).abs() > opts.tol && sweeps < opts.max_sweeps {
        sweeps += 1;
        let before = residual(row).abs();
        for j in (0..row.len()).filter(|&j| j != i) {
            if policy.is_monotone() {
                bisect_coordinate(row, j, &residual, opts);
            } else {
                golden_coordinate(row, j, &residual, opts);
            }
            if residual(row).abs() <= opts.tol {
                break;
            }
        }
        // A sweep that moves nothing will not move on the next one either.
        if residual(row).abs() >= before {
            break;
        }
    }
    let final_residual = residual(row).abs();
    let converged = final_residual <= opts.tol;
    let note = if converged {
        None
    } else if unreachable(row, i, &residual, opts) {
        Some(RowNote::UnreachableTarget)
    } else {
        Some(RowNote::NotConverged)
    };
    RowReport {
        row: i,
        residual: final_residual,
        iterations: sweeps,
        converged,
        note,
    }
}

fn eval_at(row: &mut [f64], j: usize, v: f64, residual: &dyn Fn(&[f64]) -> f64) -> f64 {
    let keep = row[j];
    row[j] = v;
    let f = residual(row);
    row[j] = keep;
    f
}

fn bisect_coordinate(
    row: &mut [f64],
    j: usize,
    residual: &dyn Fn(&[f64]) -> f64,
    opts: &TuneOptions,
) {
    let (mut lo, mut hi) = opts.bracket;
    let f_lo = eval_at(row, j, lo, residual);
    let f_hi = eval_at(row, j, hi, residual);
    let current = residual(row).abs();

    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 {
        let (v, f) = if f_lo.abs() <= f_hi.abs() {
            (lo, f_lo)
        } else {
            (hi, f_hi)
        };
        if f.abs() < current {
            row[j] = v;
        }
        return;
    }
    // Sign change inside the bracket: narrow it well past tol.
    let goal = 1e-3 * opts.tol;
    let lo_negative = f_lo < 0.0;
    let (mut best, mut best_f) = if f_lo.abs() <= f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    for _ in 0..200 {
        if best_f.abs() <= goal {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = eval_at(row, j, mid, residual);
        if f_mid.abs() < best_f.abs() {
            best = mid;
            best_f = f_mid;
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best_f.abs() < current {
        row[j] = best;
    }
}

fn golden_coordinate(
    row: &mut [f64],
    j: usize,
    residual: &dyn Fn(&[f64]) -> f64,
    opts: &TuneOptions,
) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = opts.bracket;
    let cost = |row: &mut [f64], v: f64| eval_at(row, j, v, residual).abs();
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = cost(row, c);
    let mut fd = cost(row, d);
    for _ in 0..120 {
        if (b - a).abs() < 1e-15 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = cost(row, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = cost(row, d);
        }
    }
    let candidates = [opts.bracket.0, opts.bracket.1, 0.5 * (a + b)];
    let current = residual(row).abs();
    let start = row[j];
    let (v, f) = candidates
        .iter()
        .map(|&v| (v, cost(row, v)))
        .fold((start, current), |acc, x| if x.1 < acc.1 { x } else { acc });
    if f < current {
        row[j] = v;
    }
}

/// True when, for every tunable coordinate, both bracket ends leave the residual on the same
/// side of zero and outside tolerance.
fn unreachable(
    row: &mut [f64],
    i: usize,
    residual: &dyn Fn(&[f64]) -> f64,
    opts: &TuneOptions,
) -> bool {
    (0..row.len()).filter(|&j| j != i).all(|j| {
        let f_lo = eval_at(row, j, opts.bracket.0, residual);
        let f_hi = eval_at(row, j, opts.bracket.1, residual);
        f_lo.abs() > opts.tol && f_hi.abs() > opts.tol && f_lo.signum() == f_hi.signum()
    })
}
