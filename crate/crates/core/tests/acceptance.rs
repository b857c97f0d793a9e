//! Acceptance criteria. Runs as a plain binary so each criterion reports one line
//! regardless of output capture; exits non-zero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::process::{Command, ExitCode};

use influence_core::eigen::jacobi_eigen;
use influence_core::fixtures::REFERENCE_MATRIX;
use influence_core::io::{
    parse_trace, parse_tune, write_matrix, write_series, write_trace, SeriesRow, SeriesTable,
    TraceFormat,
};
use influence_core::model::BranchCounts;
use influence_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn random_influence(rng: &mut ChaCha8Rng, n: usize, t: i64) -> InfluenceMatrix {
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        rng.gen_range(0.0..=1.0)
                    }
                })
                .collect()
        })
        .collect();
    InfluenceMatrix::new(rows, t).unwrap()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

/// Update-rule fixture: every branch, the boundary of the zero test, both signs of the ratio.
fn ac1_update_rule() -> Check {
    struct Case {
        dw_i: f64,
        dw_j: f64,
        r: f64,
        clamp: bool,
        want: f64,
        branch: Branch,
    }
    let c = |dw_i, dw_j, r, clamp, want, branch| Case {
        dw_i,
        dw_j,
        r,
        clamp,
        want,
        branch,
    };
    use Branch::*;
    let cases = [
        // worked examples
        c(0.1, 0.0, 0.5, true, 0.0, OneZero),
        c(0.05, 0.05, 0.7, true, 0.7, Equal),
        c(0.2, 0.1, 0.5, false, 4.0, Ratio),
        c(-0.2, 0.1, 0.5, true, 0.25, Ratio),
        // clamped version of the growth case
        c(0.2, 0.1, 0.5, true, 1.0, Ratio),
        c(0.0, 0.0, 0.3, true, 0.3, Equal),
        c(0.0, -0.3, 0.9, true, 0.0, OneZero),
        c(-0.1, -0.1, 0.2, true, 0.2, Equal),
        // 0.1 / (0.4 * 0.5) = 0.5
        c(0.1, 0.4, 0.5, true, 0.5, Ratio),
        c(-0.1, -0.4, 0.5, true, 0.5, Ratio),
        // 0.3 / (-0.2 * 0.75) = -2 -> 1/2
        c(0.3, -0.2, 0.75, true, 0.5, Ratio),
        // 0.02 / (-0.08 * 0.5) = -0.5 -> 2
        c(0.02, -0.08, 0.5, false, 2.0, Ratio),
        c(0.02, -0.08, 0.5, true, 1.0, Ratio),
        // 0.05 / (0.2 * 1) = 0.25
        c(0.05, 0.2, 1.0, true, 0.25, Ratio),
        // zero previous strength stays zero
        c(0.2, 0.1, 0.0, true, 0.0, Ratio),
        // deltas within eps of each other and of zero
        c(0.9e-9, 1.1e-9, 0.4, true, 0.4, Equal),
        c(2e-9, 0.0, 0.4, true, 0.0, OneZero),
        c(1e-9, -1e-9, 0.6, true, 0.6, Equal),
    ];
    for (k, case) in cases.iter().enumerate() {
        let opts = ModelOptions {
            clamp: case.clamp,
            ..Default::default()
        };
        let u = update_relationship(case.dw_i, case.dw_j, case.r, &opts)
            .map_err(|e| format!("case {k}: {e}"))?;
        ensure(u.branch == case.branch, || {
            format!(
                "case {k}: branch {:?}, expected {:?}",
                u.branch, case.branch
            )
        })?;
        let ok = match case.branch {
            OneZero | Equal => u.value == case.want,
            Ratio => rel_err(u.value, case.want) <= 1e-12,
        };
        ensure(ok, || {
            format!("case {k}: got {}, expected {}", u.value, case.want)
        })?;
    }
    Ok(format!("{} cases", cases.len()))
}

/// Minimum-norm weights against the closed form, constraint residual, and local minimality.
fn ac2_min_norm() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let r = random_influence(&mut rng, 5, 0);
        let w = PerformanceVector::new(random_vec(&mut rng, 5, 0.0, 1.0), 0).unwrap();
        let (u, report) =
            solve_utility_min_norm(&r, &w).map_err(|e| format!("instance {inst}: {e}"))?;
        for i in 0..5 {
            let norm2: f64 = (0..5).map(|k| r.get(i, k) * r.get(i, k)).sum();
            for j in 0..5 {
                let want = r.get(i, j) * w.values()[i] / norm2;
                worst = worst.max((u.get(i, j) - want).abs());
            }
            let w_i: f64 = (0..5).map(|j| r.get(i, j) * u.get(i, j)).sum();
            ensure((w_i - w.values()[i]).abs() <= 1e-9, || {
                format!(
                    "instance {inst} row {i}: residual {}",
                    (w_i - w.values()[i]).abs()
                )
            })?;
        }
        ensure(report.max_residual() <= 1e-9, || {
            format!(
                "instance {inst}: reported residual {}",
                report.max_residual()
            )
        })?;
        ensure(verify_min_norm(&u, &r, &w, 100, 1000 + inst), || {
            format!("instance {inst}: a feasible perturbation reduced the norm")
        })?;
    }
    ensure(worst <= 1e-10, || {
        format!("max deviation from closed form {worst:e}")
    })?;
    Ok(format!("100 instances, max deviation {worst:e}"))
}

/// Weights for the reference matrix with uniform utility 0.2.
fn ac3_reference_weights() -> Check {
    let r = influence_core::fixtures::reference_matrix(0);
    let u = UtilityMatrix::uniform(5, 0.2).unwrap();
    let w = compute_weights(&r, &u).map_err(|e| e.to_string())?;
    let expected = [0.5, 0.38, 0.42, 0.34, 0.5];
    for i in 0..5 {
        let oracle: f64 = REFERENCE_MATRIX[i].iter().sum::<f64>() * 0.2;
        ensure((oracle - expected[i]).abs() <= 1e-12, || {
            format!("row-sum oracle disagrees on row {i}: {oracle}")
        })?;
        ensure((w.values()[i] - expected[i]).abs() <= 1e-12, || {
            format!("W[{i}] = {}, expected {}", w.values()[i], expected[i])
        })?;
    }
    Ok(format!("W = {:?}", w.values()))
}

/// Tuning on forward-generated series reproduces the target performance.
fn ac4_tuning() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let names: Vec<String> = (1..=5).map(|k| format!("S{k}")).collect();
    let mut worst = 0.0f64;
    for inst in 0..50 {
        let truth = random_influence(&mut rng, 5, 0);
        let u_rows: Vec<Vec<f64>> = (0..5).map(|_| random_vec(&mut rng, 5, 0.0, 0.2)).collect();
        let u = UtilityMatrix::new(u_rows.clone()).unwrap();
        let target = compute_weights(&truth, &u).unwrap();
        let table = SeriesTable {
            names: names.clone(),
            has_ihdi: false,
            rows: vec![
                SeriesRow {
                    t: 2000,
                    w: random_vec(&mut rng, 5, 0.0, 1.0),
                    ihdi: None,
                },
                SeriesRow {
                    t: 2001,
                    w: target.values().to_vec(),
                    ihdi: None,
                },
            ],
        };
        let series = dir.path().join(format!("series{inst}.csv"));
        let u_path = dir.path().join(format!("u{inst}.csv"));
        std::fs::write(&series, write_series(&table)).unwrap();
        std::fs::write(&u_path, write_matrix(&names, &u_rows)).unwrap();

        let (mut out, mut err) = (Vec::new(), Vec::new());
        let args = [
            "influence",
            "tune",
            "--series",
            series.to_str().unwrap(),
            "--u",
            u_path.to_str().unwrap(),
        ];
        let code = influence_core::cli::run(args, &mut out, &mut err);
        ensure(code == 0, || {
            format!(
                "instance {inst}: exit {code}: {}",
                String::from_utf8_lossy(&err)
            )
        })?;
        let doc = parse_tune(&String::from_utf8(out).unwrap()).map_err(|e| e.to_string())?;
        for row in &doc.report.rows {
            ensure(row.converged && row.residual <= 1e-6, || {
                format!(
                    "instance {inst} row {}: residual {:e}",
                    row.row, row.residual
                )
            })?;
        }
        let tuned = InfluenceMatrix::new(doc.r_prev.entries, 0).map_err(|e| e.to_string())?;
        let forward = compute_weights(&tuned, &u).unwrap();
        for (a, b) in forward.values().iter().zip(target.values()) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("forward mismatch {worst:e}"))?;
    Ok(format!("50 series, max forward mismatch {worst:e}"))
}

/// Quality coefficient identity and the reference point.
fn ac5_quality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for k in 0..1000 {
        let w = PerformanceVector::new(random_vec(&mut rng, 5, 0.0, 1.0), k).unwrap();
        let ihdi = rng.gen_range(1e-3..=1.0);
        let p = quality_coefficient(&w, ihdi).map_err(|e| e.to_string())?;
        let mean = w.values().iter().sum::<f64>() / 5.0;
        worst = worst.max(rel_err(p.qc * ihdi, mean));
    }
    ensure(worst <= 1e-12, || format!("identity error {worst:e}"))?;
    let w = PerformanceVector::new(vec![0.72; 5], 0).unwrap();
    let p = quality_coefficient(&w, 0.8).map_err(|e| e.to_string())?;
    ensure((p.qc - 0.9).abs() <= 1e-12, || {
        format!("0.72/0.8 gave {}", p.qc)
    })?;
    Ok(format!(
        "1000 points, max relative error {worst:e}; 0.72/0.8 = {}",
        p.qc
    ))
}

fn trace_from(rows_per_step: Vec<Vec<Vec<f64>>>) -> SimulationTrace {
    let n = rows_per_step[0].len();
    let steps = rows_per_step
        .into_iter()
        .enumerate()
        .map(|(k, rows)| TraceStep {
            w: PerformanceVector::zeros(n, k as i64 + 2),
            r: InfluenceMatrix::new(rows, k as i64 + 2).unwrap(),
            branches: BranchCounts::default(),
        })
        .collect();
    SimulationTrace::new(SubsystemSet::generic(n), steps).unwrap()
}

/// Principal components: analytic case, decomposition quality, planted signal.
fn ac6_ranking() -> Check {
    // analytic covariance diag(2, 1)
    let e = jacobi_eigen(&[vec![2.0, 0.0], vec![0.0, 1.0]], 1e-12).map_err(|e| e.to_string())?;
    ensure(
        (e.values[0] - 2.0).abs() <= 1e-10 && (e.values[1] - 1.0).abs() <= 1e-10,
        || format!("eigenvalues {:?}", e.values),
    )?;

    // a trace whose exerted-influence sample covariance is diag(2, 1)
    let (a, b) = (1.5f64.sqrt(), 0.75f64.sqrt());
    let signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];
    let trace = trace_from(
        signs
            .iter()
            .map(|(sa, sb)| vec![vec![1.0, 2.0 + sb * b], vec![2.0 + sa * a, 1.0]])
            .collect(),
    );
    let rank =
        influence_ranking(&trace, ObservationDesign::ColumnSums).map_err(|e| e.to_string())?;
    ensure(
        (rank.eigenvalues[0] - 2.0).abs() <= 1e-10
            && (rank.eigenvalues[1] - 1.0).abs() <= 1e-10
            && (rank.explained_variance[0] - 2.0 / 3.0).abs() <= 1e-10
            && (rank.explained_variance[1] - 1.0 / 3.0).abs() <= 1e-10,
        || {
            format!(
                "eigenvalues {:?}, explained {:?}",
                rank.eigenvalues, rank.explained_variance
            )
        },
    )?;
    ensure(rank.ranked[0].index == 0, || {
        "analytic case ranked wrong subsystem first".into()
    })?;

    // random five-feature decompositions
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut ortho, mut recon) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let obs: Vec<Vec<f64>> = (0..20)
            .map(|_| random_vec(&mut rng, 5, -1.0, 1.0))
            .collect();
        let cov = influence_core::analysis::covariance(&obs);
        let e = jacobi_eigen(&cov, 1e-12).map_err(|e| e.to_string())?;
        let mut err = 0.0;
        for p in 0..5 {
            for q in 0..5 {
                let dot: f64 = (0..5).map(|k| e.vectors[p][k] * e.vectors[q][k]).sum();
                ortho = ortho.max((dot - f64::from(u8::from(p == q))).abs());
                let rec: f64 = (0..5)
                    .map(|k| e.values[k] * e.vectors[k][p] * e.vectors[k][q])
                    .sum();
                err += (rec - cov[p][q]).powi(2);
            }
        }
        recon = recon.max(err.sqrt());
    }
    ensure(ortho <= 1e-9, || format!("orthonormality error {ortho:e}"))?;
    ensure(recon <= 1e-9, || format!("reconstruction error {recon:e}"))?;

    // only one subsystem's exerted influence varies
    let mut hits = 0;
    for _ in 0..100 {
        let base = random_influence(&mut rng, 5, 0).rows();
        let c = rng.gen_range(0..5);
        let steps = (0..12)
            .map(|_| {
                let mut rows = base.clone();
                for (i, row) in rows.iter_mut().enumerate() {
                    if i != c {
                        row[c] = rng.gen_range(0.0..=1.0);
                    }
                }
                rows
            })
            .collect();
        let rank = influence_ranking(&trace_from(steps), ObservationDesign::ColumnSums)
            .map_err(|e| e.to_string())?;
        hits += usize::from(rank.ranked[0].index == c);
    }
    ensure(hits == 100, || {
        format!("planted subsystem ranked first in {hits}/100")
    })?;
    Ok(format!(
        "analytic case exact, orthonormality {ortho:e}, reconstruction {recon:e}, planted {hits}/100"
    ))
}

/// Byte-identical reruns and lossless trace round trips.
fn ac7_determinism() -> Check {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let scenario = dir.path().join("s.json");
    std::fs::write(
        &scenario,
        r#"{"w0": [0.40, 0.30, 0.35, 0.30, 0.45],
            "w1": [0.42, 0.31, 0.37, 0.29, 0.47],
            "r1": [[1, 0.9, 0.1, 0.3, 0.2], [0.3, 1, 0, 0.2, 0.4], [0.4, 0.6, 1, 0, 0.1],
                   [0, 0.5, 0.2, 1, 0], [0.7, 0.6, 0.2, 0, 1]],
            "u": "calibrate",
            "policy": {"2": [0.03, 0, -0.02, 0, 0.01]},
            "horizon": 40}"#,
    )
    .unwrap();
    for format in ["table", "structured"] {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_influence"))
                .args(["simulate", "--format", format, "--scenario"])
                .arg(&scenario)
                .output()
                .unwrap()
        };
        let (a, b) = (run(), run());
        ensure(a.status.success() && b.status.success(), || {
            format!("simulate failed: {}", String::from_utf8_lossy(&a.stderr))
        })?;
        ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || {
            format!("{format} output differs between runs")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..100 {
        let n = rng.gen_range(2..=6);
        let u = UtilityMatrix::new((0..n).map(|_| random_vec(&mut rng, n, 0.0, 0.3)).collect())
            .unwrap();
        let scenario = Scenario::new(
            PerformanceVector::new(random_vec(&mut rng, n, 0.0, 1.0), 0).unwrap(),
            PerformanceVector::new(random_vec(&mut rng, n, 0.0, 1.0), 1).unwrap(),
            random_influence(&mut rng, n, 1),
            UtilitySpec::Fixed(u),
        );
        let trace = simulate(&scenario, rng.gen_range(1..=25)).map_err(|e| e.to_string())?;
        let back = parse_trace(&write_trace(&trace, TraceFormat::Structured))
            .map_err(|e| e.to_string())?;
        ensure(back == trace, || {
            format!("trace {k}: structured round trip differs")
        })?;
        let back =
            parse_trace(&write_trace(&trace, TraceFormat::Table)).map_err(|e| e.to_string())?;
        let same = back.len() == trace.len()
            && back
                .steps()
                .iter()
                .zip(trace.steps())
                .all(|(x, y)| x.w == y.w && x.r == y.r);
        ensure(same, || format!("trace {k}: table round trip differs"))?;
    }
    Ok("reruns byte-identical, 100 traces round-trip".into())
}

/// With no change between snapshots, no policy and consistent weights, nothing moves.
fn ac8_quiescence() -> Check {
    let w = vec![0.40, 0.30, 0.35, 0.30, 0.45];
    let scenario = Scenario::new(
        PerformanceVector::new(w.clone(), 0).unwrap(),
        PerformanceVector::new(w, 1).unwrap(),
        influence_core::fixtures::reference_matrix(1),
        UtilitySpec::Calibrate,
    );
    let trace = simulate(&scenario, 1000).map_err(|e| e.to_string())?;
    let first = &trace.steps()[0];
    for s in trace.steps() {
        ensure(
            s.w.values() == first.w.values() && s.r.as_slice() == first.r.as_slice(),
            || format!("state changed at t = {}", s.timestamp()),
        )?;
    }
    ensure(first.r.as_slice() == scenario.r1.as_slice(), || {
        "strengths moved".into()
    })?;
    Ok(format!("{} steps constant", trace.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("AC1 update rule branches", ac1_update_rule),
        ("AC2 minimum-norm utility solve", ac2_min_norm),
        ("AC3 reference weights", ac3_reference_weights),
        ("AC4 initial strength tuning", ac4_tuning),
        ("AC5 quality coefficient", ac5_quality),
        ("AC6 influence ranking", ac6_ranking),
        ("AC7 determinism and round trips", ac7_determinism),
        ("AC8 quiescent fixed point", ac8_quiescence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
