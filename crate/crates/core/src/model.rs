//! Forward dynamics: performance aggregation, the relationship-strength update rule and the
//! step/simulate drivers built on them.

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::types::{
    InfluenceMatrix, ModelOptions, PerformanceVector, PolicyIntervention, SubsystemSet,
    UtilityMatrix,
};

/// Aggregates performance as `W_i = Σ_j R_ij · U_ij`. No clamping is applied.
pub fn compute_weights(r: &InfluenceMatrix, u: &UtilityMatrix) -> Result<PerformanceVector> {
    if r.dim() != u.dim() {
        return Err(Error::Shape {
            what: "compute_weights",
            expected: r.dim(),
            found: u.dim(),
        });
    }
    let values = (0..r.dim())
        .map(|i| r.row(i).iter().zip(u.row(i)).map(|(a, b)| a * b).sum())
        .collect();
    PerformanceVector::new(values, r.timestamp())
}

/// Which arm of the update rule produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Exactly one of the two deltas is zero: the relation is cut to 0.
    OneZero,
    /// Deltas equal (both zero included): the previous strength is kept.
    Equal,
    /// Otherwise: `|x|^sgn(x)` with `x = dW_i / (dW_j · r_prev)`.
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationshipUpdate {
    pub value: f64,
    pub branch: Branch,
    /// The ratio arm was reached with `r_prev = 0`; the relation stays at 0.
    pub degenerate: bool,
}

/// Updates one relationship strength from the latest performance deltas of the affected
/// subsystem (`dw_i`) and the influencing one (`dw_j`).
///
/// Branch order: equal deltas (within `eps_delta`, or both zero) keep `r_prev`; otherwise exactly
/// one zero delta yields 0; otherwise the ratio arm applies. A zero previous strength is absorbing.
pub fn update_relationship(
    dw_i: f64,
    dw_j: f64,
    r_prev: f64,
    opts: &ModelOptions,
) -> Result<RelationshipUpdate> {
    if !dw_i.is_finite() || !dw_j.is_finite() {
        return Err(Error::Domain(format!(
            "performance deltas must be finite, got ({dw_i}, {dw_j})"
        )));
    }
    if !r_prev.is_finite() || r_prev < 0.0 {
        return Err(Error::Domain(format!(
            "previous strength must be finite and non-negative, got {r_prev}"
        )));
    }
    let eps = opts.eps_delta;
    let zero_i = dw_i.abs() <= eps;
    let zero_j = dw_j.abs() <= eps;

    if (zero_i && zero_j) || (dw_i - dw_j).abs() <= eps {
        return Ok(RelationshipUpdate {
            value: r_prev,
            branch: Branch::Equal,
            degenerate: false,
        });
    }
    if zero_i != zero_j {
        return Ok(RelationshipUpdate {
            value: 0.0,
            branch: Branch::OneZero,
            degenerate: false,
        });
    }
    if r_prev == 0.0 {
        return Ok(RelationshipUpdate {
            value: 0.0,
            branch: Branch::Ratio,
            degenerate: true,
        });
    }

    let x = dw_i / (dw_j * r_prev);
    // x != 0 here since dw_i is not zero, so sgn(x) is ±1.
    let raw = if x > 0.0 { x } else { 1.0 / x.abs() };
    let value = if opts.clamp { raw.clamp(0.0, 1.0) } else { raw };
    if !value.is_finite() {
        return Err(Error::Domain(format!(
            "unclamped update overflowed: dW_i = {dw_i}, dW_j = {dw_j}, r_prev = {r_prev}"
        )));
    }
    Ok(RelationshipUpdate {
        value,
        branch: Branch::Ratio,
        degenerate: false,
    })
}

/// Per-step tally of update arms over the off-diagonal cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchCounts {
    pub one_zero: usize,
    pub equal: usize,
    pub ratio: usize,
    /// Subset of `ratio` where the previous strength was 0.
    pub degenerate: usize,
}

impl BranchCounts {
    pub fn record(&mut self, update: &RelationshipUpdate) {
        match update.branch {
            Branch::OneZero => self.one_zero += 1,
            Branch::Equal => self.equal += 1,
            Branch::Ratio => self.ratio += 1,
        }
        if update.degenerate {
            self.degenerate += 1;
        }
    }

    pub fn total(&self) -> usize {
        self.one_zero + self.equal + self.ratio
    }

    pub fn merge(&mut self, other: &BranchCounts) {
        self.one_zero += other.one_zero;
        self.equal += other.equal;
        self.ratio += other.ratio;
        self.degenerate += other.degenerate;
    }
}

/// Applies the update rule to every off-diagonal cell given per-subsystem deltas.
/// The diagonal stays at 1 and the timestamp is left to the caller.
pub(crate) fn apply_deltas(
    deltas: &[f64],
    r: &InfluenceMatrix,
    opts: &ModelOptions,
    timestamp: i64,
) -> Result<(InfluenceMatrix, BranchCounts)> {
    let n = r.dim();
    let mut counts = BranchCounts::default();
    let mut data = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                data.push(1.0);
                continue;
            }
            let upd = update_relationship(deltas[i], deltas[j], r.get(i, j), opts)?;
            counts.record(&upd);
            data.push(upd.value);
        }
    }
    Ok((
        InfluenceMatrix::from_flat_unchecked(n, data, timestamp),
        counts,
    ))
}

pub(crate) fn deltas(w_prev: &PerformanceVector, w_curr: &PerformanceVector) -> Vec<f64> {
    w_curr
        .values()
        .iter()
        .zip(w_prev.values())
        .map(|(c, p)| c - p)
        .collect()
}

/// Advances the whole influence matrix by one step. Requires
/// `t(w_prev) + 1 == t(w_curr) == t(r_curr)`.
pub fn update_matrix(
    w_prev: &PerformanceVector,
    w_curr: &PerformanceVector,
    r_curr: &InfluenceMatrix,
    opts: &ModelOptions,
) -> Result<(InfluenceMatrix, BranchCounts)> {
    opts.validate()?;
    let n = r_curr.dim();
    for (what, len) in [
        ("update_matrix W(t-1)", w_prev.len()),
        ("update_matrix W(t)", w_curr.len()),
    ] {
        if len != n {
            return Err(Error::Shape {
                what,
                expected: n,
                found: len,
            });
        }
    }
    if w_curr.timestamp() != w_prev.timestamp() + 1 {
        return Err(Error::Sequencing {
            what: "update_matrix W(t)",
            expected: w_prev.timestamp() + 1,
            found: w_curr.timestamp(),
        });
    }
    if r_curr.timestamp() != w_curr.timestamp() {
        return Err(Error::Sequencing {
            what: "update_matrix R(t)",
            expected: w_curr.timestamp(),
            found: r_curr.timestamp(),
        });
    }
    apply_deltas(
        &deltas(w_prev, w_curr),
        r_curr,
        opts,
        r_curr.timestamp() + 1,
    )
}

/// State carried between steps: two consecutive performance snapshots and the current strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub w_prev: PerformanceVector,
    pub w_curr: PerformanceVector,
    pub r_curr: InfluenceMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub w_next: PerformanceVector,
    pub r_next: InfluenceMatrix,
    pub branches: BranchCounts,
}

impl ModelState {
    pub fn advance(self, outcome: &StepOutcome) -> ModelState {
        ModelState {
            w_prev: self.w_curr,
            w_curr: outcome.w_next.clone(),
            r_curr: outcome.r_next.clone(),
        }
    }
}

/// One step: update strengths, aggregate performance, add the policy emphasis, then clip to
/// [0, 1] when `normalize_w` is set.
pub fn step(
    state: &ModelState,
    u: &UtilityMatrix,
    policy: &PolicyIntervention,
    opts: &ModelOptions,
) -> Result<StepOutcome> {
    let n = state.r_curr.dim();
    if policy.emphasis().len() != n {
        return Err(Error::Shape {
            what: "step policy emphasis",
            expected: n,
            found: policy.emphasis().len(),
        });
    }
    let (r_next, branches) = update_matrix(&state.w_prev, &state.w_curr, &state.r_curr, opts)?;
    let raw = compute_weights(&r_next, u)?;
    let values = raw
        .values()
        .iter()
        .zip(policy.emphasis())
        .map(|(w, e)| {
            let v = w + e;
            if opts.normalize_w {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    Ok(StepOutcome {
        w_next: PerformanceVector::new(values, r_next.timestamp())?,
        r_next,
        branches,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub w: PerformanceVector,
    pub r: InfluenceMatrix,
    pub branches: BranchCounts,
}

impl TraceStep {
    pub fn timestamp(&self) -> i64 {
        self.w.timestamp()
    }
}

/// Ordered record of a run: timestamps advance by exactly 1 and every matrix has a unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    subsystems: SubsystemSet,
    steps: Vec<TraceStep>,
}

impl SimulationTrace {
    pub fn new(subsystems: SubsystemSet, steps: Vec<TraceStep>) -> Result<Self> {
        let n = subsystems.len();
        let mut violations = Vec::new();
        for (k, s) in steps.iter().enumerate() {
            if s.w.len() != n || s.r.dim() != n {
                violations.push(format!(
                    "step {k}: sizes W={} R={} do not match {n} subsystems",
                    s.w.len(),
                    s.r.dim()
                ));
                continue;
            }
            if s.r.timestamp() != s.w.timestamp() {
                violations.push(format!("step {k}: W and R timestamps differ"));
            }
            if (0..n).any(|i| s.r.get(i, i) != 1.0) {
                violations.push(format!("step {k}: influence matrix diagonal is not 1"));
            }
            if k > 0 && s.timestamp() != steps[k - 1].timestamp() + 1 {
                violations.push(format!(
                    "step {k}: timestamp {} does not follow {}",
                    s.timestamp(),
                    steps[k - 1].timestamp()
                ));
            }
        }
        if violations.is_empty() {
            Ok(Self { subsystems, steps })
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn subsystems(&self) -> &SubsystemSet {
        &self.subsystems
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    pub fn branch_totals(&self) -> BranchCounts {
        let mut total = BranchCounts::default();
        for s in &self.steps {
            total.merge(&s.branches);
        }
        total
    }
}

/// Runs `horizon` steps from the scenario's seeds. Policy entries are keyed by 1-based step
/// number; steps without an entry get no intervention.
pub fn simulate(scenario: &Scenario, horizon: usize) -> Result<SimulationTrace> {
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    scenario.validate()?;
    let u = scenario.resolve_utility()?;
    let n = scenario.subsystems.len();
    let mut state = ModelState {
        w_prev: scenario.w0.clone(),
        w_curr: scenario.w1.clone(),
        r_curr: scenario.r1.clone(),
    };
    let mut steps = Vec::with_capacity(horizon);
    for k in 1..=horizon as u64 {
        let outcome = match scenario.policy.get(&k) {
            Some(p) => step(&state, &u, p, &scenario.options)?,
            None => step(
                &state,
                &u,
                &PolicyIntervention::none(n, state.w_curr.timestamp()),
                &scenario.options,
            )?,
        };
        steps.push(TraceStep {
            w: outcome.w_next.clone(),
            r: outcome.r_next.clone(),
            branches: outcome.branches,
        });
        state = state.advance(&outcome);
    }
    SimulationTrace::new(scenario.subsystems.clone(), steps)
}
