//! Opinion states, trajectories, and the consensus process itself.
//!
//! One update is `x(t+1) = W x(t)`: every node moves to a convex
//! combination of all current opinions. Multidimensional opinions (`m`
//! issue columns) update column-independently under the same weights.

use crate::error::{Error, Result};
use crate::matrix::{CoupledWeights, InfluenceMatrix, ResistanceProfile};

/// Default convergence tolerance on the max-norm change between states.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-10;

/// Hard cap on simulation steps in convergence mode.
pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// Tolerance for the left Perron vector power iteration.
pub const POWER_ITERATION_TOL: f64 = 1e-12;

/// Iteration cap for the left Perron vector power iteration.
pub const POWER_ITERATION_CAP: usize = 1_000_000;

/// Opinions of `n` nodes on `m` issue dimensions, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OpinionState {
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl OpinionState {
    /// Builds an `n`-by-`m` state from row-major values. All entries must be
    /// finite.
    pub fn new(n: usize, m: usize, values: Vec<f64>) -> Result<OpinionState> {
        if n == 0 || m == 0 {
            return Err(Error::invalid_parameter(
                "opinion state needs at least one node and one column",
            ));
        }
        if values.len() != n * m {
            return Err(Error::DimensionMismatch {
                context: "opinion state values",
                expected: n * m,
                got: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!(
                "opinion entry {} = {}",
                bad, values[bad]
            )));
        }
        Ok(OpinionState { n, m, values })
    }

    /// Single-column state from one value per node.
    pub fn from_column(values: Vec<f64>) -> Result<OpinionState> {
        let n = values.len();
        OpinionState::new(n, 1, values)
    }

    /// State with every entry equal to `value`.
    pub fn constant(n: usize, m: usize, value: f64) -> Result<OpinionState> {
        OpinionState::new(n, m, vec![value; n * m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, node: usize, column: usize) -> f64 {
        self.values[node * self.m + column]
    }

    /// All of node `i`'s opinions, one per column.
    pub fn row(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Min and max of one column.
    pub fn column_range(&self, column: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let v = self.get(i, column);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> OpinionState {
        OpinionState {
            n: self.n,
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// A time-indexed sequence of opinion states, `t = 0, 1, 2, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    states: Vec<OpinionState>,
}

impl Trajectory {
    /// Builds from states that all share the same shape. At least one state
    /// is required.
    pub fn new(states: Vec<OpinionState>) -> Result<Trajectory> {
        let first = states
            .first()
            .ok_or_else(|| Error::invalid_parameter("trajectory needs at least one state"))?;
        let (n, m) = (first.n(), first.m());
        for s in &states {
            if s.n() != n || s.m() != m {
                return Err(Error::DimensionMismatch {
                    context: "trajectory state shape",
                    expected: n * m,
                    got: s.n() * s.m(),
                });
            }
        }
        Ok(Trajectory { states })
    }

    /// Number of states (time horizon plus one).
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one state
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    pub fn m(&self) -> usize {
        self.states[0].m()
    }

    pub fn state(&self, t: usize) -> &OpinionState {
        &self.states[t]
    }

    pub fn states(&self) -> &[OpinionState] {
        &self.states
    }

    pub fn last(&self) -> &OpinionState {
        self.states.last().expect("trajectory is never empty")
    }

    /// Min and max of one column across every state.
    pub fn column_range(&self, column: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.states {
            let (l, h) = s.column_range(column);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        (lo, hi)
    }
}

/// One update of the coupled dynamics: returns `W x`.
pub fn step(w: &CoupledWeights, x: &OpinionState) -> Result<OpinionState> {
    if x.n() != w.n() {
        return Err(Error::DimensionMismatch {
            context: "state rows vs weights",
            expected: w.n(),
            got: x.n(),
        });
    }
    let (n, m) = (x.n(), x.m());
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for col in 0..m {
            out.push(w.storage().row_dot(i, |j| x.get(j, col)));
        }
    }
    OpinionState::new(n, m, out)
}

/// One update in factored form:
/// `x_i(t+1) = d_ii x_i(t) + (1 - d_ii) * sum_{j != i} c_ij x_j(t)`.
///
/// Agrees with [`step`] through [`crate::matrix::compose_weights`] to within
/// accumulated rounding.
pub fn step_factored(
    c: &InfluenceMatrix,
    d: &ResistanceProfile,
    x: &OpinionState,
) -> Result<OpinionState> {
    let n = c.n();
    if d.n() != n {
        return Err(Error::DimensionMismatch {
            context: "resistance profile length",
            expected: n,
            got: d.n(),
        });
    }
    if x.n() != n {
        return Err(Error::DimensionMismatch {
            context: "state rows vs influence matrix",
            expected: n,
            got: x.n(),
        });
    }
    let m = x.m();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        let keep = d.get(i);
        for col in 0..m {
            let social = c.storage().row_dot(i, |j| x.get(j, col));
            out.push(keep * x.get(i, col) + (1.0 - keep) * social);
        }
    }
    OpinionState::new(n, m, out)
}

/// When to stop a simulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Run exactly this many steps (trajectory has `steps + 1` states).
    Horizon(usize),
    /// Run until the max-norm change between successive states drops below
    /// `tol`, up to `max_steps`.
    Tolerance { tol: f64, max_steps: usize },
}

impl StopRule {
    /// Convergence rule with the default step cap.
    pub fn tolerance(tol: f64) -> StopRule {
        StopRule::Tolerance {
            tol,
            max_steps: DEFAULT_STEP_CAP,
        }
    }
}

/// Why a simulation stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    HorizonReached,
    Converged,
    /// The step cap was hit before the tolerance was met.
    StepCapReached,
}

/// A finished simulation run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub trajectory: Trajectory,
    /// Max-norm change of the final step.
    pub final_change: f64,
    pub reason: StopReason,
}

impl Simulation {
    pub fn steps(&self) -> usize {
        self.trajectory.len() - 1
    }
}

/// Runs the coupled dynamics from `x0` until the stop rule fires.
///
/// State 0 of the result is `x0` itself, bit for bit.
pub fn simulate(
    c: &InfluenceMatrix,
    d: &ResistanceProfile,
    x0: &OpinionState,
    stop: StopRule,
) -> Result<Simulation> {
    match stop {
        StopRule::Horizon(0) => {
            return Err(Error::invalid_parameter("horizon must be at least 1 step"))
        }
        StopRule::Tolerance { tol, max_steps } => {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::invalid_parameter(
                    "convergence tolerance must be positive",
                ));
            }
            if max_steps == 0 {
                return Err(Error::invalid_parameter("step cap must be at least 1"));
            }
        }
        _ => {}
    }

    let mut states = vec![x0.clone()];
    let limit = match stop {
        StopRule::Horizon(steps) => steps,
        StopRule::Tolerance { max_steps, .. } => max_steps,
    };

    let mut final_change = f64::INFINITY;
    let mut reason = StopReason::StepCapReached;
    for taken in 1..=limit {
        let prev = states.last().expect("nonempty");
        let next = step_factored(c, d, prev)?;
        if let Some(bad) = next.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::non_finite(format!(
                "simulation step {taken} produced {} at entry {bad}",
                next.values()[bad]
            )));
        }
        final_change = prev
            .values()
            .iter()
            .zip(next.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        states.push(next);
        match stop {
            StopRule::Horizon(steps) => {
                if taken == steps {
                    reason = StopReason::HorizonReached;
                    break;
                }
            }
            StopRule::Tolerance { tol, .. } => {
                if final_change < tol {
                    reason = StopReason::Converged;
                    break;
                }
            }
        }
    }

    Ok(Simulation {
        trajectory: Trajectory::new(states)?,
        final_change,
        reason,
    })
}

/// The consensus each column converges to: `v' x0`, where `v` is the left
/// Perron vector of `W` normalized to sum 1.
///
/// Requires an irreducible `W`; the positive diagonal already guarantees
/// aperiodicity. The vector is found by power iteration to
/// [`POWER_ITERATION_TOL`].
pub fn consensus_value(w: &CoupledWeights, x0: &OpinionState) -> Result<Vec<f64>> {
    if x0.n() != w.n() {
        return Err(Error::DimensionMismatch {
            context: "state rows vs weights",
            expected: w.n(),
            got: x0.n(),
        });
    }
    let v = left_perron_vector(w)?;
    let mut out = Vec::with_capacity(x0.m());
    for col in 0..x0.m() {
        out.push((0..w.n()).map(|i| v[i] * x0.get(i, col)).sum());
    }
    Ok(out)
}

/// Left Perron vector of `w`, normalized to sum 1.
pub fn left_perron_vector(w: &CoupledWeights) -> Result<Vec<f64>> {
    let n = w.n();
    if !coupled_irreducible(w) {
        return Err(Error::Reducible);
    }
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..POWER_ITERATION_CAP {
        let mut next = vec![0.0; n];
        for (i, &vi) in v.iter().enumerate() {
            for (j, wij) in w.storage().row_nonzero(i) {
                next[j] += vi * wij;
            }
        }
        let sum: f64 = next.iter().sum();
        for x in next.iter_mut() {
            *x /= sum;
        }
        let change = v
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = next;
        if change < POWER_ITERATION_TOL {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        context: "left Perron vector power iteration",
        cap: POWER_ITERATION_CAP,
    })
}

/// Strong connectivity of the positive off-diagonal pattern of `w`.
fn coupled_irreducible(w: &CoupledWeights) -> bool {
    let n = w.n();
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    let forward_seen = {
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        // Reverse adjacency is collected during the forward pass over rows.
        for i in 0..n {
            for (j, _) in w.storage().row_nonzero(i) {
                if j != i {
                    reverse[j].push(i);
                }
            }
        }
        while let Some(i) = queue.pop_front() {
            for (j, _) in w.storage().row_nonzero(i) {
                if j != i && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    };
    if !forward_seen.iter().all(|&s| s) {
        return false;
    }
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &reverse[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Affine rescaling of the opinion scale: every entry becomes
/// `alpha * x + beta`. Estimation results are invariant under this map.
pub fn rescale(tr: &Trajectory, alpha: f64, beta: f64) -> Result<Trajectory> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "rescale alpha must be positive and finite, got {alpha}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::invalid_parameter(format!(
            "rescale beta must be finite, got {beta}"
        )));
    }
    let states = tr
        .states()
        .iter()
        .map(|s| s.map(|v| alpha * v + beta))
        .collect();
    Trajectory::new(states)
}

/// Pairwise opinion difference `alpha * (x_i(t+k) - x_j(t))`.
///
/// `column` may be omitted only for single-column trajectories.
pub fn opinion_difference(
    tr: &Trajectory,
    i: usize,
    j: usize,
    t: usize,
    k: usize,
    alpha: f64,
    column: Option<usize>,
) -> Result<f64> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let col = match column {
        Some(c) => c,
        None if tr.m() == 1 => 0,
        None => {
            return Err(Error::invalid_parameter(
                "a column index is required when m > 1",
            ))
        }
    };
    if col >= tr.m() {
        return Err(Error::IndexOutOfRange {
            context: "column",
            index: col,
            len: tr.m(),
        });
    }
    for (ctx, node) in [("node i", i), ("node j", j)] {
        if node >= tr.n() {
            return Err(Error::IndexOutOfRange {
                context: ctx,
                index: node,
                len: tr.n(),
            });
        }
    }
    if t >= tr.len() {
        return Err(Error::IndexOutOfRange {
            context: "time t",
            index: t,
            len: tr.len(),
        });
    }
    let tk = t + k;
    if tk >= tr.len() {
        return Err(Error::IndexOutOfRange {
            context: "time t+k",
            index: tk,
            len: tr.len(),
        });
    }
    Ok(alpha * (tr.state(tk).get(i, col) - tr.state(t).get(j, col)))
}

/// A state entry that escaped the convex hull of the initial opinions.
#[derive(Clone, Debug, PartialEq)]
pub struct HullViolation {
    pub t: usize,
    pub node: usize,
    pub column: usize,
    pub value: f64,
    /// How far outside the initial `[min, max]` band the value lies.
    pub excess: f64,
}

/// Result of [`hull_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct HullReport {
    /// Initial `[min, max]` per column.
    pub bounds: Vec<(f64, f64)>,
    pub violations: Vec<HullViolation>,
}

impl HullReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies that every opinion stays within the per-column range of the
/// initial state, allowing `tol` of slack on each bound.
pub fn hull_check(tr: &Trajectory, tol: f64) -> HullReport {
    let m = tr.m();
    let bounds: Vec<(f64, f64)> = (0..m).map(|c| tr.state(0).column_range(c)).collect();
    let mut violations = Vec::new();
    for t in 1..tr.len() {
        let s = tr.state(t);
        for node in 0..tr.n() {
            for (column, &(lo, hi)) in bounds.iter().enumerate() {
                let value = s.get(node, column);
                let excess = if value < lo - tol {
                    lo - value
                } else if value > hi + tol {
                    value - hi
                } else {
                    continue;
                };
                violations.push(HullViolation {
                    t,
                    node,
                    column,
                    value,
                    excess,
                });
            }
        }
    }
    HullReport { bounds, violations }
}

/// Per-column outcome of [`consensus_preservation_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnConsensus {
    pub column: usize,
    /// Whether state 0 is constant in this column (within tolerance).
    pub initial_consensus: bool,
    /// Whether all later states stay at the initial value; `None` when the
    /// column never started in consensus.
    pub preserved: Option<bool>,
    /// Largest deviation from the initial reference value over all times.
    pub max_deviation: f64,
}

/// Result of [`consensus_preservation_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusCheck {
    pub columns: Vec<ColumnConsensus>,
}

impl ConsensusCheck {
    /// True when no initially-consensus column ever leaves its value.
    pub fn all_preserved(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.preserved.unwrap_or(true))
    }

    /// True when at least one column started in consensus.
    pub fn any_initial_consensus(&self) -> bool {
        self.columns.iter().any(|c| c.initial_consensus)
    }
}

/// If state 0 is constant per column, verifies that all later states stay at
/// that value within `tol`.
pub fn consensus_preservation_check(tr: &Trajectory, tol: f64) -> ConsensusCheck {
    let mut columns = Vec::with_capacity(tr.m());
    for column in 0..tr.m() {
        let reference = tr.state(0).get(0, column);
        let initial_consensus = (0..tr.n())
            .all(|i| (tr.state(0).get(i, column) - reference).abs() <= tol);
        let mut max_deviation: f64 = 0.0;
        for s in tr.states() {
            for i in 0..tr.n() {
                max_deviation = max_deviation.max((s.get(i, column) - reference).abs());
            }
        }
        let preserved = if initial_consensus {
            Some(max_deviation <= tol)
        } else {
            None
        };
        columns.push(ColumnConsensus {
            column,
            initial_consensus,
            preserved,
            max_deviation,
        });
    }
    ConsensusCheck { columns }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::compose_weights;

    fn example() -> (InfluenceMatrix, ResistanceProfile, CoupledWeights) {
        let c = InfluenceMatrix::from_rows(vec![
            vec![0.0, 0.5, 0.5],
            vec![1.0, 0.0, 0.0],
            vec![0.25, 0.75, 0.0],
        ])
        .unwrap();
        let d = ResistanceProfile::new(vec![0.2, 0.5, 0.8]).unwrap();
        let w = compose_weights(&c, &d).unwrap();
        (c, d, w)
    }

    #[test]
    fn step_averages_two_nodes() {
        let w = CoupledWeights::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let x = OpinionState::from_column(vec![0.0, 1.0]).unwrap();
        let next = step(&w, &x).unwrap();
        assert_eq!(next.values(), &[0.5, 0.5]);
    }

    #[test]
    fn step_hand_values() {
        let (_, _, w) = example();
        let x = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let next = step(&w, &x).unwrap();
        let expected = [1.2, 0.5, 1.75];
        for (got, want) in next.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn step_fixes_consensus() {
        let (_, _, w) = example();
        let x = OpinionState::constant(3, 1, 3.0).unwrap();
        let next = step(&w, &x).unwrap();
        for &v in next.values() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn factored_matches_coupled() {
        let (c, d, w) = example();
        let x = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let a = step_factored(&c, &d, &x).unwrap();
        let b = step(&w, &x).unwrap();
        for (u, v) in a.values().iter().zip(b.values()) {
            assert!((u - v).abs() < 1e-12);
        }
        let expected = [1.2, 0.5, 1.75];
        for (got, want) in a.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn factored_full_resistance_keeps_opinions() {
        let c = InfluenceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = ResistanceProfile::new(vec![1.0 - 1e-9, 1.0 - 1e-9]).unwrap();
        let x = OpinionState::from_column(vec![-4.0, 9.0]).unwrap();
        let next = step_factored(&c, &d, &x).unwrap();
        assert!((next.get(0, 0) - -4.0).abs() < 1e-7);
        assert!((next.get(1, 0) - 9.0).abs() < 1e-7);
    }

    #[test]
    fn simulate_two_node_consensus() {
        let c = InfluenceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let d = ResistanceProfile::new(vec![0.5, 0.5]).unwrap();
        let x0 = OpinionState::from_column(vec![0.0, 1.0]).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::tolerance(1e-10)).unwrap();
        assert_eq!(sim.reason, StopReason::Converged);
        let last = sim.trajectory.last();
        assert!((last.get(0, 0) - 0.5).abs() < 1e-9);
        assert!((last.get(1, 0) - 0.5).abs() < 1e-9);
        assert_eq!(sim.trajectory.state(0), &x0);
    }

    #[test]
    fn simulate_reaches_perron_consensus() {
        let (c, d, w) = example();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::tolerance(1e-12)).unwrap();
        let target = 27.0 / 22.0;
        for i in 0..3 {
            assert!((sim.trajectory.last().get(i, 0) - target).abs() < 1e-8);
        }
        let cv = consensus_value(&w, &x0).unwrap();
        assert!((cv[0] - target).abs() < 1e-9);
    }

    #[test]
    fn simulate_horizon_length() {
        let (c, d, _) = example();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(7)).unwrap();
        assert_eq!(sim.trajectory.len(), 8);
        assert_eq!(sim.reason, StopReason::HorizonReached);
    }

    #[test]
    fn simulate_consensus_start_stays_constant() {
        let (c, d, _) = example();
        let x0 = OpinionState::constant(3, 1, 3.0).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(20)).unwrap();
        for s in sim.trajectory.states() {
            for &v in s.values() {
                assert!((v - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulate_step_cap_reported() {
        let (c, d, _) = example();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(
            &c,
            &d,
            &x0,
            StopRule::Tolerance {
                tol: 1e-16,
                max_steps: 3,
            },
        )
        .unwrap();
        assert_eq!(sim.reason, StopReason::StepCapReached);
        assert_eq!(sim.trajectory.len(), 4);
    }

    #[test]
    fn perron_vector_hand_values() {
        let (_, _, w) = example();
        let v = left_perron_vector(&w).unwrap();
        let expected = [5.0 / 22.0, 7.0 / 22.0, 10.0 / 22.0];
        for (got, want) in v.iter().zip(expected) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn consensus_value_uniform_for_doubly_stochastic() {
        let w = CoupledWeights::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let x0 = OpinionState::from_column(vec![0.0, 1.0]).unwrap();
        let cv = consensus_value(&w, &x0).unwrap();
        assert!((cv[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn consensus_value_of_consensus_input() {
        let (_, _, w) = example();
        let x0 = OpinionState::constant(3, 1, 7.25).unwrap();
        let cv = consensus_value(&w, &x0).unwrap();
        assert!((cv[0] - 7.25).abs() < 1e-12);
    }

    #[test]
    fn consensus_value_rejects_reducible() {
        let w = CoupledWeights::from_rows(vec![
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.5, 0.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.5, 0.5],
            vec![0.0, 0.0, 0.5, 0.5],
        ])
        .unwrap();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(consensus_value(&w, &x0), Err(Error::Reducible)));
    }

    #[test]
    fn rescale_identity_and_affine() {
        let x0 = OpinionState::from_column(vec![0.0, 1.0]).unwrap();
        let tr = Trajectory::new(vec![x0]).unwrap();
        let same = rescale(&tr, 1.0, 0.0).unwrap();
        assert_eq!(same, tr);
        let moved = rescale(&tr, 2.0, 5.0).unwrap();
        assert_eq!(moved.state(0).values(), &[5.0, 7.0]);
        assert!(rescale(&tr, 0.0, 0.0).is_err());
        assert!(rescale(&tr, -1.0, 0.0).is_err());
    }

    #[test]
    fn opinion_difference_cases() {
        let (c, d, _) = example();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(2)).unwrap();
        let tr = &sim.trajectory;

        // Self-difference at a single time is zero.
        assert_eq!(opinion_difference(tr, 1, 1, 0, 0, 3.5, None).unwrap(), 0.0);
        // Node 0 moved from 0 to 1.2 after one step.
        let diff = opinion_difference(tr, 0, 0, 0, 1, 1.0, None).unwrap();
        assert!((diff - 1.2).abs() < 1e-12);
        // Linearity in alpha.
        let doubled = opinion_difference(tr, 0, 0, 0, 1, 2.0, None).unwrap();
        assert!((doubled - 2.0 * diff).abs() < 1e-15);
        // Out-of-range times are rejected.
        assert!(opinion_difference(tr, 0, 0, 2, 1, 1.0, None).is_err());
    }

    #[test]
    fn opinion_difference_needs_column_when_multidimensional() {
        let s0 = OpinionState::new(2, 2, vec![0.0, 10.0, 1.0, 20.0]).unwrap();
        let s1 = OpinionState::new(2, 2, vec![0.5, 12.0, 0.5, 18.0]).unwrap();
        let tr = Trajectory::new(vec![s0, s1]).unwrap();
        assert!(opinion_difference(&tr, 0, 1, 0, 1, 1.0, None).is_err());
        // x_0(1) = 12 in column 1, x_1(0) = 20 in column 1.
        let diff = opinion_difference(&tr, 0, 1, 0, 1, 1.0, Some(1)).unwrap();
        assert!((diff - (12.0 - 20.0)).abs() < 1e-15);
        assert!(opinion_difference(&tr, 0, 1, 0, 1, 1.0, Some(2)).is_err());
    }

    #[test]
    fn hull_check_flags_escapes() {
        let (c, d, _) = example();
        let x0 = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(&c, &d, &x0, StopRule::Horizon(30)).unwrap();
        assert!(hull_check(&sim.trajectory, 1e-10).ok());

        let mut states = sim.trajectory.states().to_vec();
        let mut bad = states[3].values().to_vec();
        bad[0] = 5.0; // outside [0, 2]
        states[3] = OpinionState::from_column(bad).unwrap();
        let corrupted = Trajectory::new(states).unwrap();
        let report = hull_check(&corrupted, 1e-10);
        assert_eq!(report.violations.len(), 1);
        let v = &report.violations[0];
        assert_eq!((v.t, v.node, v.column), (3, 0, 0));
        assert!((v.excess - 3.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_preservation_cases() {
        let (c, d, _) = example();
        let constant = OpinionState::constant(3, 1, -2.0).unwrap();
        let sim = simulate(&c, &d, &constant, StopRule::Horizon(10)).unwrap();
        let check = consensus_preservation_check(&sim.trajectory, 1e-12);
        assert!(check.columns[0].initial_consensus);
        assert_eq!(check.columns[0].preserved, Some(true));
        assert!(check.all_preserved());

        let spread = OpinionState::from_column(vec![0.0, 1.0, 2.0]).unwrap();
        let sim = simulate(&c, &d, &spread, StopRule::Horizon(2)).unwrap();
        let check = consensus_preservation_check(&sim.trajectory, 1e-12);
        assert!(!check.columns[0].initial_consensus);
        assert_eq!(check.columns[0].preserved, None);
        assert!(check.all_preserved()); // vacuously
    }

    #[test]
    fn state_rejects_non_finite() {
        assert!(OpinionState::from_column(vec![0.0, f64::NAN]).is_err());
        assert!(OpinionState::from_column(vec![f64::INFINITY]).is_err());
    }
}
