use crate::calibration::solve_utility_min_norm;
use crate::error::{Error, Result};
use crate::types::{
    influence_violations, InfluenceMatrix, ModelOptions, PerformanceVector, PolicyIntervention,
    SubsystemSet, UtilityMatrix,
};
use std::collections::BTreeMap;

pub const DEFAULT_HORIZON: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub enum UtilitySpec {
    Fixed(UtilityMatrix),
    /// Solve the minimum-norm weights that reproduce `w1` from `r1`.
    Calibrate,
}

/// Everything needed for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub subsystems: SubsystemSet,
    pub w0: PerformanceVector,
    pub w1: PerformanceVector,
    pub r1: InfluenceMatrix,
    pub utility: UtilitySpec,
    /// Keyed by 1-based step number.
    pub policy: BTreeMap<u64, PolicyIntervention>,
    pub options: ModelOptions,
    pub horizon: usize,
}

impl Scenario {
    /// Scenario with default names, no policy and default options.
    pub fn new(
        w0: PerformanceVector,
        w1: PerformanceVector,
        r1: InfluenceMatrix,
        utility: UtilitySpec,
    ) -> Self {
        Self {
            subsystems: SubsystemSet::default_sized(r1.dim()),
            w0,
            w1,
            r1,
            utility,
            policy: BTreeMap::new(),
            options: ModelOptions::default(),
            horizon: DEFAULT_HORIZON,
        }
    }

    /// Every violated invariant, in one list.
    pub fn violations(&self) -> Vec<String> {
        let mut out = SubsystemSet::violations(self.subsystems.names());
        let n = self.subsystems.len();
        if self.options.validate().is_err() {
            out.push(format!(
                "options.eps_delta must be positive, got {}",
                self.options.eps_delta
            ));
        }
        if self.horizon == 0 {
            out.push("horizon must be at least 1".into());
        }
        for (label, w) in [("w0", &self.w0), ("w1", &self.w1)] {
            if w.len() != n {
                out.push(format!("{label} has {} entries, expected {n}", w.len()));
            }
            if self.options.normalize_w {
                for (i, x) in w.values().iter().enumerate() {
                    if !(0.0..=1.0).contains(x) {
                        out.push(format!("{label}[{i}] = {x} is out of range [0, 1]"));
                    }
                }
            }
        }
        if self.w1.timestamp() != self.w0.timestamp() + 1 {
            out.push("w1 must immediately follow w0".into());
        }
        if self.r1.timestamp() != self.w1.timestamp() {
            out.push("r1 must share the timestamp of w1".into());
        }
        if self.r1.dim() != n {
            out.push(format!("r1 is {0}x{0}, expected {n}x{n}", self.r1.dim()));
        }
        out.extend(influence_violations(
            &self.r1.rows(),
            self.options.clamp,
            "r1",
        ));
        if let UtilitySpec::Fixed(u) = &self.utility {
            if u.dim() != n {
                out.push(format!("u is {0}x{0}, expected {n}x{n}", u.dim()));
            }
        }
        for (k, p) in &self.policy {
            if *k == 0 || *k as usize > self.horizon {
                out.push(format!(
                    "policy step {k} is outside the horizon 1..={}",
                    self.horizon
                ));
            }
            if p.emphasis().len() != n {
                out.push(format!(
                    "policy step {k} has {} entries, expected {n}",
                    p.emphasis().len()
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn resolve_utility(&self) -> Result<UtilityMatrix> {
        match &self.utility {
            UtilitySpec::Fixed(u) => Ok(u.clone()),
            UtilitySpec::Calibrate => Ok(solve_utility_min_norm(&self.r1, &self.w1)?.0),
        }
    }
}
