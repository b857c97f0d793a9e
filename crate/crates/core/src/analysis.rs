//! Index-quality audit against an external composite index, and influence ranking.

#![allow(clippy::needless_range_loop)]

use crate::eigen::jacobi_eigen;
use crate::error::{Error, Result};
use crate::model::SimulationTrace;
use crate::types::{InfluenceMatrix, PerformanceVector};

/// Minimum coefficient for a satisfiable quality of life.
pub const SATISFIABLE_QC: f64 = 0.9;
pub const DEFAULT_SLOPE_EPS: f64 = 1e-3;
/// Off-diagonal tolerance for the covariance eigensolver.
pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityPoint {
    pub timestamp: i64,
    pub ihdi: f64,
    pub mean_w: f64,
    pub qc: f64,
}

impl QualityPoint {
    /// Index values are defined on [0, 1]; larger ones are computed but suspicious.
    pub fn ihdi_out_of_range(&self) -> bool {
        self.ihdi > 1.0
    }
}

/// `qc = mean(W) / ihdi`, so that `qc · ihdi = mean(W)`.
pub fn quality_coefficient(w: &PerformanceVector, ihdi: f64) -> Result<QualityPoint> {
    if !ihdi.is_finite() || ihdi <= 0.0 {
        return Err(Error::Domain(format!(
            "index value must be positive and finite, got {ihdi}"
        )));
    }
    if w.is_empty() {
        return Err(Error::Invalid("performance vector is empty".into()));
    }
    let mean_w = w.mean();
    Ok(QualityPoint {
        timestamp: w.timestamp(),
        ihdi,
        mean_w,
        qc: mean_w / ihdi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendClass {
    Increasing,
    Stationary,
    Decreasing,
}

impl TrendClass {
    pub fn classify(slope: f64, slope_eps: f64) -> Self {
        if slope > slope_eps {
            TrendClass::Increasing
        } else if slope < -slope_eps {
            TrendClass::Decreasing
        } else {
            TrendClass::Stationary
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TrendClass::Increasing => "increasing",
            TrendClass::Stationary => "stationary",
            TrendClass::Decreasing => "decreasing",
        }
    }
}

impl std::fmt::Display for TrendClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub series: Vec<QualityPoint>,
    pub slope: f64,
    pub classification: TrendClass,
    pub satisfiable: bool,
}

/// Least-squares slope of `qc` against time, its classification, and whether every point meets
/// the satisfiable band with a non-decreasing trend.
pub fn trend(series: &[QualityPoint], slope_eps: f64) -> Result<TrendReport> {
    if series.len() < 2 {
        return Err(Error::Invalid(format!(
            "trend needs at least 2 points, got {}",
            series.len()
        )));
    }
    if !slope_eps.is_finite() || slope_eps < 0.0 {
        return Err(Error::Invalid(format!(
            "slope threshold must be non-negative, got {slope_eps}"
        )));
    }
    if let Some(w) = series.windows(2).find(|w| w[1].timestamp <= w[0].timestamp) {
        return Err(Error::Invalid(format!(
            "timestamps must be strictly increasing, {} follows {}",
            w[1].timestamp, w[0].timestamp
        )));
    }
    let m = series.len() as f64;
    let t_mean = series.iter().map(|p| p.timestamp as f64).sum::<f64>() / m;
    let q_mean = series.iter().map(|p| p.qc).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in series {
        let dt = p.timestamp as f64 - t_mean;
        sxy += dt * (p.qc - q_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    let classification = TrendClass::classify(slope, slope_eps);
    let satisfiable =
        classification != TrendClass::Decreasing && series.iter().all(|p| p.qc >= SATISFIABLE_QC);
    Ok(TrendReport {
        series: series.to_vec(),
        slope,
        classification,
        satisfiable,
    })
}

/// How each time step is turned into an observation row for the ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationDesign {
    /// One feature per subsystem: total influence it exerts on the others.
    ColumnSums,
    /// All entries of the matrix; loadings are pooled per influencing subsystem.
    Flattened,
}

impl ObservationDesign {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObservationDesign::ColumnSums => "column-sums",
            ObservationDesign::Flattened => "flattened",
        }
    }
}

impl std::str::FromStr for ObservationDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column-sums" => Ok(ObservationDesign::ColumnSums),
            "flattened" => Ok(ObservationDesign::Flattened),
            other => Err(Error::Invalid(format!(
                "unknown observation design {other:?}, expected column-sums or flattened"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSubsystem {
    pub index: usize,
    pub name: String,
    /// Magnitude of the subsystem's weight on the first principal component.
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRanking {
    pub design: ObservationDesign,
    /// Most influential first.
    pub ranked: Vec<RankedSubsystem>,
    /// Share of total variance per principal component, descending.
    pub explained_variance: Vec<f64>,
    /// Covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Sample covariance of the columns of `obs` (rows are observations).
pub fn covariance(obs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = obs.len();
    let p = obs.first().map_or(0, Vec::len);
    let means: Vec<f64> = (0..p)
        .map(|k| obs.iter().map(|r| r[k]).sum::<f64>() / m as f64)
        .collect();
    let mut cov = vec![vec![0.0; p]; p];
    for row in obs {
        for a in 0..p {
            let da = row[a] - means[a];
            for b in a..p {
                cov[a][b] += da * (row[b] - means[b]);
            }
        }
    }
    let denom = (m - 1) as f64;
    for a in 0..p {
        for b in a..p {
            cov[a][b] /= denom;
            cov[b][a] = cov[a][b];
        }
    }
    cov
}

/// Ranks subsystems by their weight on the first principal component of the influence-matrix
/// time series.
pub fn influence_ranking(
    trace: &SimulationTrace,
    design: ObservationDesign,
) -> Result<InfluenceRanking> {
    if trace.len() < 2 {
        return Err(Error::Invalid(format!(
            "ranking needs at least 2 trace steps, got {}",
            trace.len()
        )));
    }
    let n = trace.subsystems().len();
    let obs: Vec<Vec<f64>> = trace
        .steps()
        .iter()
        .map(|s| match design {
            ObservationDesign::ColumnSums => influence_centrality(&s.r).exerted,
            ObservationDesign::Flattened => s.r.as_slice().to_vec(),
        })
        .collect();

    let cov = covariance(&obs);
    let total_var: f64 = (0..cov.len()).map(|k| cov[k][k]).sum();
    if total_var.is_nan() || total_var <= 0.0 {
        return Err(Error::DegenerateRanking);
    }
    let eig = jacobi_eigen(&cov, JACOBI_TOL)?;
    let clipped: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let sum: f64 = clipped.iter().sum();
    let explained_variance = clipped.iter().map(|l| l / sum).collect();

    let pc1 = &eig.vectors[0];
    let loadings: Vec<f64> = match design {
        ObservationDesign::ColumnSums => pc1.iter().map(|x| x.abs()).collect(),
        // feature k is R[i][j] with k = i*n + j; pool by influencing subsystem j
        ObservationDesign::Flattened => (0..n)
            .map(|j| (0..n).map(|i| pc1[i * n + j].powi(2)).sum::<f64>().sqrt())
            .collect(),
    };
    let mut ranked: Vec<RankedSubsystem> = loadings
        .iter()
        .enumerate()
        .map(|(index, &loading)| RankedSubsystem {
            index,
            name: trace.subsystems().name(index).to_string(),
            loading,
        })
        .collect();
    ranked.sort_by(|a, b| b.loading.total_cmp(&a.loading).then(a.index.cmp(&b.index)));
    Ok(InfluenceRanking {
        design,
        ranked,
        explained_variance,
        eigenvalues: eig.values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centrality {
    /// Column sums without the diagonal: influence subsystem `j` exerts on the others.
    pub exerted: Vec<f64>,
    /// Row sums without the diagonal: influence subsystem `i` receives.
    pub received: Vec<f64>,
}

pub fn influence_centrality(r: &InfluenceMatrix) -> Centrality {
    let n = r.dim();
    let exerted = (0..n)
        .map(|j| (0..n).filter(|&i| i != j).map(|i| r.get(i, j)).sum())
        .collect();
    let received = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| r.get(i, j)).sum())
        .collect();
    Centrality { exerted, received }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_matrix;
    use crate::model::{BranchCounts, TraceStep};
    use crate::types::SubsystemSet;
    use approx::assert_relative_eq;

    fn pv(values: Vec<f64>, t: i64) -> PerformanceVector {
        PerformanceVector::new(values, t).unwrap()
    }

    #[test]
    fn qc_examples() {
        let p = quality_coefficient(&pv(vec![0.72; 5], 0), 0.8).unwrap();
        assert_relative_eq!(p.qc, 0.9, max_relative = 1e-12);
        let p = quality_coefficient(&pv(vec![0.6, 0.7, 0.8], 0), 0.7).unwrap();
        assert_relative_eq!(p.qc, 1.0, max_relative = 1e-12);
        let p = quality_coefficient(&pv(vec![0.0; 5], 0), 0.5).unwrap();
        assert_eq!(p.qc, 0.0);
    }

    #[test]
    fn qc_domain() {
        assert!(quality_coefficient(&pv(vec![0.5; 5], 0), 0.0).is_err());
        assert!(quality_coefficient(&pv(vec![0.5; 5], 0), -0.3).is_err());
        let p = quality_coefficient(&pv(vec![0.5; 5], 0), 1.2).unwrap();
        assert!(p.ihdi_out_of_range());
    }

    fn points(qcs: impl IntoIterator<Item = f64>) -> Vec<QualityPoint> {
        qcs.into_iter()
            .enumerate()
            .map(|(t, qc)| QualityPoint {
                timestamp: t as i64,
                ihdi: 1.0,
                mean_w: qc,
                qc,
            })
            .collect()
    }

    #[test]
    fn trend_examples() {
        let r = trend(&points(vec![0.95; 10]), DEFAULT_SLOPE_EPS).unwrap();
        assert_eq!(r.slope, 0.0);
        assert_eq!(r.classification, TrendClass::Stationary);
        assert!(r.satisfiable);

        let r = trend(
            &points((0..10).map(|t| 0.95 - 0.01 * t as f64)),
            DEFAULT_SLOPE_EPS,
        )
        .unwrap();
        assert_relative_eq!(r.slope, -0.01, max_relative = 1e-10);
        assert_eq!(r.classification, TrendClass::Decreasing);
        assert!(!r.satisfiable);

        let r = trend(&points(vec![0.85; 10]), DEFAULT_SLOPE_EPS).unwrap();
        assert_eq!(r.classification, TrendClass::Stationary);
        assert!(!r.satisfiable);
    }

    #[test]
    fn trend_input_errors() {
        assert!(trend(&points(vec![0.9]), DEFAULT_SLOPE_EPS).is_err());
        let mut p = points(vec![0.9, 0.9]);
        p[1].timestamp = 0;
        assert!(trend(&p, DEFAULT_SLOPE_EPS).is_err());
    }

    #[test]
    fn centrality_reference() {
        let c = influence_centrality(&reference_matrix(0));
        assert_relative_eq!(c.exerted[1], 2.6, epsilon = 1e-12);
        assert_relative_eq!(c.received[0], 1.5, epsilon = 1e-12);
        let id = influence_centrality(&InfluenceMatrix::identity(4, 0));
        assert!(id.exerted.iter().chain(&id.received).all(|&x| x == 0.0));
    }

    fn trace_of(mats: Vec<InfluenceMatrix>) -> SimulationTrace {
        let n = mats[0].dim();
        let steps = mats
            .into_iter()
            .enumerate()
            .map(|(k, r)| TraceStep {
                w: PerformanceVector::zeros(n, k as i64),
                r: r.with_timestamp(k as i64),
                branches: BranchCounts::default(),
            })
            .collect();
        SimulationTrace::new(SubsystemSet::default_sized(n), steps).unwrap()
    }

    #[test]
    fn single_varying_column_ranks_first() {
        let mats = (0..6)
            .map(|k| {
                let mut rows = reference_matrix(0).rows();
                rows[0][1] = 0.1 * k as f64;
                rows[3][1] = 0.5 - 0.05 * k as f64 * 0.5;
                InfluenceMatrix::new(rows, 0).unwrap()
            })
            .collect();
        let trace = trace_of(mats);
        for design in [ObservationDesign::ColumnSums, ObservationDesign::Flattened] {
            let rank = influence_ranking(&trace, design).unwrap();
            assert_eq!(rank.ranked[0].index, 1, "{design:?}");
            assert_relative_eq!(
                rank.explained_variance.iter().sum::<f64>(),
                1.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let trace = trace_of(vec![reference_matrix(0); 4]);
        assert_eq!(
            influence_ranking(&trace, ObservationDesign::ColumnSums),
            Err(Error::DegenerateRanking)
        );
    }

    #[test]
    fn design_parse() {
        assert_eq!(
            "flattened".parse::<ObservationDesign>().unwrap(),
            ObservationDesign::Flattened
        );
        assert!("rows".parse::<ObservationDesign>().is_err());
    }
}
