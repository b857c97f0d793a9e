//! Command-line front end. Machine output goes to stdout (or `--out`), diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numerical failure.

use crate::analysis::{influence_ranking, trend, ObservationDesign, DEFAULT_SLOPE_EPS};
use crate::calibration::{
    initial_guess, solve_min_norm_rows, solve_utility_min_norm, tune_initial_r, LinearForward,
    PolicyFunction, TuneOptions,
};
use crate::error::Error;
use crate::io::{
    note_label, parse_matrix, parse_scenario, parse_series, parse_trace, write_matrix,
    write_qc_table, write_rank, write_trace, write_tune, MatrixDoc, RankDoc, ReportDoc,
    TraceFormat, TuneDoc,
};
use crate::model::simulate;
use crate::types::UtilityMatrix;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "influence",
    version,
    about = "Influence-network simulation and calibration"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario forward and write the trace.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Number of steps; defaults to the scenario's horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "table")]
        format: String,
    },
    /// Solve minimum-norm utility weights from an influence matrix and observed performance.
    Calibrate {
        #[arg(long)]
        r: PathBuf,
        #[arg(long)]
        w: PathBuf,
        /// Series row to use (by t); defaults to the first row.
        #[arg(long)]
        step: Option<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tune initial strengths so the first two series rows are reproduced.
    Tune {
        #[arg(long)]
        series: PathBuf,
        /// Utility matrix table, or `auto` to solve it from the first series row.
        #[arg(long, default_value = "auto")]
        u: String,
        #[arg(long, default_value_t = 1e-6, allow_negative_numbers = true)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_sweeps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quality coefficient per series row and its trend.
    Qc {
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SLOPE_EPS, allow_negative_numbers = true)]
        slope_eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank subsystems by first-principal-component loading over a trace.
    Rank {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "column-sums")]
        design: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INPUT
            },
            message: e.to_string(),
        }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))
}

/// Machine output of a successful command, plus an optional numerical failure that still has
/// output worth writing (unconverged tuning).
struct Outcome {
    data: String,
    out: Option<PathBuf>,
    failure: Option<Failure>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Simulate {
            scenario,
            horizon,
            out,
            format,
        } => cmd_simulate(&scenario, horizon, out, &format, stderr),
        Command::Calibrate { r, w, step, out } => cmd_calibrate(&r, &w, step, out, stderr),
        Command::Tune {
            series,
            u,
            tol,
            max_sweeps,
            out,
        } => cmd_tune(&series, &u, tol, max_sweeps, out, stderr),
        Command::Qc {
            series,
            slope_eps,
            out,
        } => cmd_qc(&series, slope_eps, out, stderr),
        Command::Rank { trace, design, out } => cmd_rank(&trace, &design, out, stderr),
    };
    match result {
        Ok(outcome) => {
            let written = match &outcome.out {
                Some(p) => std::fs::write(p, &outcome.data)
                    .map_err(|e| input(format!("cannot write {}: {e}", p.display()))),
                None => stdout
                    .write_all(outcome.data.as_bytes())
                    .map_err(|e| input(format!("cannot write output: {e}"))),
            };
            if let Err(f) = written {
                let _ = writeln!(stderr, "error: {}", f.message);
                return f.code;
            }
            match outcome.failure {
                Some(f) => {
                    let _ = writeln!(stderr, "error: {}", f.message);
                    f.code
                }
                None => EXIT_OK,
            }
        }
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn cmd_simulate(
    scenario: &Path,
    horizon: Option<usize>,
    out: Option<PathBuf>,
    format: &str,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let format: TraceFormat = format.parse()?;
    if horizon == Some(0) {
        return Err(input("--horizon must be at least 1"));
    }
    let scenario = parse_scenario(&read(scenario)?)?;
    let horizon = horizon.unwrap_or(scenario.horizon);
    let trace = simulate(&scenario, horizon)?;

    let totals = trace.branch_totals();
    if let Some(last) = trace.last() {
        let _ = writeln!(
            stderr,
            "simulated {} step(s); final t = {}, W = {:?}",
            trace.len(),
            last.timestamp(),
            last.w.values()
        );
    }
    let _ = writeln!(
        stderr,
        "branches: one-zero {}, equal {}, ratio {} (degenerate {})",
        totals.one_zero, totals.equal, totals.ratio, totals.degenerate
    );
    Ok(Outcome {
        data: write_trace(&trace, format),
        out,
        failure: None,
    })
}

fn cmd_calibrate(
    r_path: &Path,
    w_path: &Path,
    step: Option<i64>,
    out: Option<PathBuf>,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let (names, rows) = parse_matrix(&read(r_path)?)?;
    let mut violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if *x < 0.0 {
                violations.push(format!("R[{i}][{j}] = {x} is negative"));
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations).into());
    }
    let series = parse_series(&read(w_path)?)?;
    if series.width() != rows.len() {
        return Err(input(format!(
            "dimension mismatch: R is {0}x{0} but the series has {1} subsystems",
            rows.len(),
            series.width()
        )));
    }
    let k = match step {
        None if series.is_empty() => return Err(input("series has no rows")),
        None => 0,
        Some(t) => series
            .rows
            .iter()
            .position(|r| r.t == t)
            .ok_or_else(|| input(format!("series has no row with t = {t}")))?,
    };
    let w = series.performance(k)?;
    let (u, report) = solve_min_norm_rows(&rows, w.values()).map_err(|e| match e {
        Error::InfeasibleRow { row, target, .. } => Error::InfeasibleRow {
            row,
            name: names[row].clone(),
            target,
        },
        e => e,
    })?;
    for r in &report.rows {
        let _ = writeln!(
            stderr,
            "row {} ({}): residual {:e}{}",
            r.row,
            names[r.row],
            r.residual,
            r.note
                .map(|n| format!(", {}", note_label(n)))
                .unwrap_or_default()
        );
    }
    let failure = (!report.all_converged()).then(|| Failure {
        code: EXIT_NUMERICAL,
        message: format!(
            "constraint residual {:e} exceeds {:e}",
            report.max_residual(),
            report.tol
        ),
    });
    Ok(Outcome {
        data: write_matrix(&names, &u.rows()),
        out,
        failure,
    })
}

fn cmd_tune(
    series_path: &Path,
    u_arg: &str,
    tol: f64,
    max_sweeps: usize,
    out: Option<PathBuf>,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let opts = TuneOptions {
        tol,
        max_sweeps,
        ..Default::default()
    };
    opts.validate()?;
    let series = parse_series(&read(series_path)?)?;
    if series.len() < 2 {
        return Err(input(format!(
            "tuning needs two consecutive series rows, found {}",
            series.len()
        )));
    }
    if series.len() > 2 {
        let _ = writeln!(
            stderr,
            "note: using the first two of {} series rows",
            series.len()
        );
    }
    let n = series.width();
    let w_prev = series.performance(0)?;
    let w_curr = series.performance(1)?;
    let guess = initial_guess(n, opts.bracket, w_prev.timestamp());

    let u = if u_arg == "auto" {
        solve_utility_min_norm(&guess, &w_prev)?.0
    } else {
        let (_, rows) = parse_matrix(&read(Path::new(u_arg))?)?;
        if rows.len() != n {
            return Err(input(format!(
                "dimension mismatch: U is {0}x{0} but the series has {n} subsystems",
                rows.len()
            )));
        }
        UtilityMatrix::new(rows)?
    };

    let policy = LinearForward;
    let res = tune_initial_r(&w_prev, &w_curr, &u, &policy, Some(&guess), &opts)?;
    let names = series.names.clone();
    for r in &res.report.rows {
        let _ = writeln!(
            stderr,
            "row {} ({}): residual {:e} after {} sweep(s){}",
            r.row,
            names[r.row],
            r.residual,
            r.iterations,
            r.note
                .map(|n| format!(", {}", note_label(n)))
                .unwrap_or_default()
        );
    }
    let failure = (!res.report.all_converged()).then(|| {
        let rows: Vec<String> = res
            .report
            .failed_rows()
            .map(|r| {
                format!(
                    "{} ({})",
                    names[r.row],
                    r.note.map(note_label).unwrap_or("not-converged")
                )
            })
            .collect();
        Failure {
            code: EXIT_NUMERICAL,
            message: format!("rows did not converge: {}", rows.join(", ")),
        }
    });
    let doc = TuneDoc {
        subsystems: names.clone(),
        policy: policy.name().to_string(),
        u: u.rows(),
        r_prev: MatrixDoc {
            t: res.r_prev.timestamp(),
            entries: res.r_prev.rows(),
        },
        r_curr: MatrixDoc {
            t: res.r_curr.timestamp(),
            entries: res.r_curr.rows(),
        },
        report: ReportDoc::from_report(&res.report, &names),
    };
    Ok(Outcome {
        data: write_tune(&doc),
        out,
        failure,
    })
}

fn cmd_qc(
    series_path: &Path,
    slope_eps: f64,
    out: Option<PathBuf>,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let series = parse_series(&read(series_path)?)?;
    let points = series.quality_points()?;
    let report = trend(&points, slope_eps)?;
    let _ = writeln!(
        stderr,
        "trend: slope {:e}, {}, satisfiable {}",
        report.slope, report.classification, report.satisfiable
    );
    Ok(Outcome {
        data: write_qc_table(&points),
        out,
        failure: None,
    })
}

fn cmd_rank(
    trace_path: &Path,
    design: &str,
    out: Option<PathBuf>,
    stderr: &mut dyn Write,
) -> Result<Outcome, Failure> {
    let design: ObservationDesign = design.parse()?;
    let trace = parse_trace(&read(trace_path)?)?;
    let ranking = influence_ranking(&trace, design)?;
    if let Some(top) = ranking.ranked.first() {
        let _ = writeln!(
            stderr,
            "most influential: {} (loading {:.6}, PC1 explains {:.4})",
            top.name, top.loading, ranking.explained_variance[0]
        );
    }
    Ok(Outcome {
        data: write_rank(&RankDoc::from_ranking(&ranking)),
        out,
        failure: None,
    })
}
