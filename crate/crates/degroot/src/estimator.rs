//! Recovery of resistance values from an influence matrix and an observed
//! trajectory.
//!
//! Each usable sample is one node and one transition: with
//! `s_i(t) = sum_{j != i} c_ij x_j(t)`, the resistance solves
//!
//! ```text
//! d_ii = 1 - (x_i(t+1) - x_i(t)) / (s_i(t) - x_i(t))
//! ```
//!
//! whenever the denominator is nonzero. Both numerator and denominator are
//! differences of opinions, so any positive affine rescaling of the opinion
//! scale cancels: the recovered values are scale-free.
//!
//! Samples whose denominator is too small carry no information and are
//! dropped. [`estimate_single`] and [`estimate_ego`] treat their `epsilon`
//! as an absolute threshold on `|s_i(t) - x_i(t)|`; the trajectory-level
//! estimators scale `epsilon` by the per-column opinion range so the
//! degeneracy decision is itself scale-free.

use crate::dynamics::{OpinionState, Trajectory};
use crate::error::{Error, Result};
use crate::matrix::{compose_weights, CoupledWeights, InfluenceMatrix, ResistanceProfile};

/// Default degeneracy threshold, relative to the per-column opinion range.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Per-column estimates of one node must agree this closely before they are
/// pooled into a single value.
pub const COLUMN_AGREEMENT_TOL: f64 = 1e-6;

/// Spread of a node's per-time estimates beyond which the time-varying
/// report flags the node: on data generated by a time-invariant system the
/// per-time values coincide, so dispersion indicates model misfit.
pub const DISPERSION_TOL: f64 = 1e-6;

/// Fixed-point iterations of the observation-noise correction in the pooled
/// fit.
const NOISE_CORRECTION_ROUNDS: usize = 3;

/// Pooled fits drop samples whose denominator magnitude is below this
/// multiple of the estimated denominator noise scale: such samples carry no
/// signal, only variance. The noise scale is zero on noise-free data, so
/// nothing is dropped there.
const NOISE_SNR_FACTOR: f64 = 2.0;

/// Validity classification of a recovered resistance value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateStatus {
    /// Strictly inside `(0, 1)`.
    Ok,
    /// Every candidate sample had `|s_i(t) - x_i(t)|` below threshold.
    Degenerate,
    /// Below 0 by more than `epsilon`; signals unreliable or invalid
    /// measurement, or a process other than the assumed one.
    OutOfRangeLow,
    /// Above 1 by more than `epsilon`.
    OutOfRangeHigh,
    /// Within `epsilon` of 0: full adoption of the social term.
    BoundaryZero,
    /// Within `epsilon` of 1: unchanged opinion, full resistance.
    BoundaryOne,
}

impl EstimateStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateStatus::Ok => "ok",
            EstimateStatus::Degenerate => "degenerate",
            EstimateStatus::OutOfRangeLow => "out-of-range-low",
            EstimateStatus::OutOfRangeHigh => "out-of-range-high",
            EstimateStatus::BoundaryZero => "boundary-zero",
            EstimateStatus::BoundaryOne => "boundary-one",
        }
    }

    pub fn from_str_tag(tag: &str) -> Option<EstimateStatus> {
        Some(match tag {
            "ok" => EstimateStatus::Ok,
            "degenerate" => EstimateStatus::Degenerate,
            "out-of-range-low" => EstimateStatus::OutOfRangeLow,
            "out-of-range-high" => EstimateStatus::OutOfRangeHigh,
            "boundary-zero" => EstimateStatus::BoundaryZero,
            "boundary-one" => EstimateStatus::BoundaryOne,
            _ => return None,
        })
    }
}

impl std::fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One node's recovered resistance with diagnostics.
///
/// `value` is present exactly for `Ok`, `BoundaryZero` and `BoundaryOne`,
/// and is never clipped: a boundary value may sit slightly outside `(0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEstimate {
    pub node: usize,
    pub value: Option<f64>,
    pub status: EstimateStatus,
    /// Samples with a usable denominator that entered the fit.
    pub samples_used: usize,
    /// Root-mean-square residual of `x_i(t+1) - x_i(t)` against the fitted
    /// linear form, zero when nothing was fitted.
    pub residual_rms: f64,
}

/// One time-varying estimate: node `node` over the transition `t -> t+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeEstimate {
    pub t: usize,
    pub estimate: NodeEstimate,
}

/// Spread of one node's per-time estimates in time-varying mode.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeDispersion {
    pub node: usize,
    /// Number of valued per-time estimates behind `spread`.
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    /// True when `spread` exceeds [`DISPERSION_TOL`].
    pub flagged: bool,
}

/// Mode-specific content of an [`EstimationReport`].
#[derive(Clone, Debug, PartialEq)]
pub enum ReportBody {
    /// One pooled estimate per node.
    Static { nodes: Vec<NodeEstimate> },
    /// One estimate per (node, t) with a defined denominator, plus per-node
    /// dispersion of the recovered values.
    TimeVarying {
        samples: Vec<TimeEstimate>,
        dispersion: Vec<NodeDispersion>,
    },
}

/// Output of the trajectory-level estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationReport {
    /// The relative degeneracy threshold that was used.
    pub epsilon: f64,
    pub body: ReportBody,
}

impl EstimationReport {
    pub fn mode_str(&self) -> &'static str {
        match self.body {
            ReportBody::Static { .. } => "static",
            ReportBody::TimeVarying { .. } => "varying",
        }
    }

    /// Per-node estimates of a static report.
    pub fn nodes(&self) -> Option<&[NodeEstimate]> {
        match &self.body {
            ReportBody::Static { nodes } => Some(nodes),
            ReportBody::TimeVarying { .. } => None,
        }
    }

    /// Counts of each status over all estimates in the report.
    pub fn status_counts(&self) -> StatusCounts {
        let mut counts = StatusCounts::default();
        let mut bump = |status: EstimateStatus| match status {
            EstimateStatus::Ok => counts.ok += 1,
            EstimateStatus::Degenerate => counts.degenerate += 1,
            EstimateStatus::OutOfRangeLow => counts.out_of_range_low += 1,
            EstimateStatus::OutOfRangeHigh => counts.out_of_range_high += 1,
            EstimateStatus::BoundaryZero => counts.boundary_zero += 1,
            EstimateStatus::BoundaryOne => counts.boundary_one += 1,
        };
        match &self.body {
            ReportBody::Static { nodes } => {
                for e in nodes {
                    bump(e.status);
                }
            }
            ReportBody::TimeVarying { samples, .. } => {
                for s in samples {
                    bump(s.estimate.status);
                }
            }
        }
        counts
    }
}

/// Status tallies of a report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatusCounts {
    pub ok: usize,
    pub degenerate: usize,
    pub out_of_range_low: usize,
    pub out_of_range_high: usize,
    pub boundary_zero: usize,
    pub boundary_one: usize,
}

impl StatusCounts {
    pub fn out_of_range(&self) -> usize {
        self.out_of_range_low + self.out_of_range_high
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::invalid_parameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )));
    }
    Ok(())
}

fn check_row(c_row: &[f64], n: usize, node: usize) -> Result<()> {
    if c_row.len() != n {
        return Err(Error::DimensionMismatch {
            context: "weight row length",
            expected: n,
            got: c_row.len(),
        });
    }
    if node >= n {
        return Err(Error::IndexOutOfRange {
            context: "node",
            index: node,
            len: n,
        });
    }
    for (j, &w) in c_row.iter().enumerate() {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::invalid_matrix(format!(
                "weight row entry {j} = {w}"
            )));
        }
    }
    if c_row[node] != 0.0 {
        return Err(Error::invalid_matrix(format!(
            "self-entry of the weight row must be zero, got {}",
            c_row[node]
        )));
    }
    let sum: f64 = c_row.iter().sum();
    if (sum - 1.0).abs() > crate::matrix::ROW_SUM_RENORM_BAND {
        return Err(Error::RowSum { row: node, sum });
    }
    Ok(())
}

/// Skips zero weights; IEEE addition of a zero term is a no-op, so this is
/// bit-identical to the full dot product and to the sparse-row path.
fn dot_nonzero(row: &[f64], x: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (j, &w) in row.iter().enumerate() {
        if w != 0.0 {
            acc += w * x(j);
        }
    }
    acc
}

/// The social term `s_i(t)`: the weighted average of the other nodes'
/// opinions, one value per column.
pub fn social_term(c_row: &[f64], x: &OpinionState, node: usize) -> Result<Vec<f64>> {
    check_row(c_row, x.n(), node)?;
    Ok((0..x.m())
        .map(|col| dot_nonzero(c_row, |j| x.get(j, col)))
        .collect())
}

/// One column's numerator/denominator sample.
#[derive(Clone, Copy, Debug)]
struct Sample {
    num: f64,
    den: f64,
}

/// Least squares through the origin on `num = b * den`, returning the fitted
/// resistance `1 - b`, the residual rms, and the per-sample values.
fn fit_samples(samples: &[Sample]) -> (f64, f64, Vec<f64>) {
    debug_assert!(!samples.is_empty());
    let slope = if samples.len() == 1 {
        samples[0].num / samples[0].den
    } else {
        let mut cross = 0.0;
        let mut sq = 0.0;
        for s in samples {
            cross += s.num * s.den;
            sq += s.den * s.den;
        }
        cross / sq
    };
    let mut rss = 0.0;
    for s in samples {
        let r = s.num - slope * s.den;
        rss += r * r;
    }
    let rms = (rss / samples.len() as f64).sqrt();
    let per_sample = samples.iter().map(|s| 1.0 - s.num / s.den).collect();
    (1.0 - slope, rms, per_sample)
}

/// Classifies a fitted value. The value is kept only for statuses that the
/// report treats as carrying one.
fn classify(value: f64, epsilon: f64) -> (EstimateStatus, Option<f64>) {
    if value.abs() <= epsilon {
        (EstimateStatus::BoundaryZero, Some(value))
    } else if (value - 1.0).abs() <= epsilon {
        (EstimateStatus::BoundaryOne, Some(value))
    } else if value > 0.0 && value < 1.0 {
        (EstimateStatus::Ok, Some(value))
    } else if value < 0.0 {
        (EstimateStatus::OutOfRangeLow, None)
    } else {
        (EstimateStatus::OutOfRangeHigh, None)
    }
}

fn degenerate(node: usize) -> NodeEstimate {
    NodeEstimate {
        node,
        value: None,
        status: EstimateStatus::Degenerate,
        samples_used: 0,
        residual_rms: 0.0,
    }
}

/// Pools the usable samples of one node into an estimate.
///
/// `check_agreement` applies the per-column consistency rule: when distinct
/// columns of the same node disagree beyond [`COLUMN_AGREEMENT_TOL`] the
/// node cannot have a single resistance, and the estimate is demoted to an
/// out-of-range status on the side of the pooled value.
fn estimate_from_samples(node: usize, samples: &[Sample], epsilon: f64, check_agreement: bool) -> NodeEstimate {
    if samples.is_empty() {
        return degenerate(node);
    }
    let (value, rms, per_sample) = fit_samples(samples);
    if check_agreement && samples.len() > 1 {
        let max_dev = per_sample
            .iter()
            .map(|v| (v - value).abs())
            .fold(0.0, f64::max);
        if max_dev > COLUMN_AGREEMENT_TOL {
            let status = if value >= 1.0 {
                EstimateStatus::OutOfRangeHigh
            } else {
                EstimateStatus::OutOfRangeLow
            };
            return NodeEstimate {
                node,
                value: None,
                status,
                samples_used: samples.len(),
                residual_rms: rms,
            };
        }
    }
    let (status, value) = classify(value, epsilon);
    NodeEstimate {
        node,
        value,
        status,
        samples_used: samples.len(),
        residual_rms: rms,
    }
}

/// Recovers one node's resistance from a single transition.
///
/// `x_next_i` is node `node`'s opinion vector at the next time. `epsilon`
/// is an absolute threshold here: a column with
/// `|s_i(t) - x_i(t)| <= epsilon` is dropped as degenerate. Columns that
/// survive are pooled; with several columns they must agree within
/// [`COLUMN_AGREEMENT_TOL`].
pub fn estimate_single(
    c_row: &[f64],
    x_t: &OpinionState,
    x_next_i: &[f64],
    node: usize,
    epsilon: f64,
) -> Result<NodeEstimate> {
    check_epsilon(epsilon)?;
    check_row(c_row, x_t.n(), node)?;
    if x_next_i.len() != x_t.m() {
        return Err(Error::DimensionMismatch {
            context: "next-opinion vector length",
            expected: x_t.m(),
            got: x_next_i.len(),
        });
    }
    if let Some(bad) = x_next_i.iter().position(|v| !v.is_finite()) {
        return Err(Error::non_finite(format!(
            "next opinion column {bad} = {}",
            x_next_i[bad]
        )));
    }
    let mut samples = Vec::with_capacity(x_t.m());
    for (col, &next) in x_next_i.iter().enumerate() {
        let social = dot_nonzero(c_row, |j| x_t.get(j, col));
        let den = social - x_t.get(node, col);
        if den.abs() > epsilon {
            samples.push(Sample {
                num: next - x_t.get(node, col),
                den,
            });
        }
    }
    Ok(estimate_from_samples(node, &samples, epsilon, true))
}

/// Recovers one node's resistance from its ego neighborhood only: its own
/// weight row, its own opinion at `t` and `t+1`, and the opinions of its
/// positive-weight neighbors at `t`.
///
/// `weights` lists the positive entries of the node's weight row as
/// `(neighbor, weight)`; `neighbor_opinions` supplies each neighbor's
/// opinion vector at time `t`. Produces exactly what [`estimate_single`]
/// would with the full state: no data beyond the ego neighborhood is
/// needed.
pub fn estimate_ego(
    node: usize,
    weights: &[(usize, f64)],
    own_pair: (&[f64], &[f64]),
    neighbor_opinions: &[(usize, &[f64])],
    epsilon: f64,
) -> Result<NodeEstimate> {
    check_epsilon(epsilon)?;
    let (own_now, own_next) = own_pair;
    let m = own_now.len();
    if own_next.len() != m {
        return Err(Error::DimensionMismatch {
            context: "own next-opinion vector length",
            expected: m,
            got: own_next.len(),
        });
    }
    if m == 0 {
        return Err(Error::invalid_parameter("own opinions need at least one column"));
    }
    for &v in own_now.iter().chain(own_next) {
        if !v.is_finite() {
            return Err(Error::non_finite(format!("own opinion = {v}")));
        }
    }

    let mut row: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    for &(j, w) in weights {
        if j == node {
            return Err(Error::invalid_matrix(format!(
                "self-loop weight at ({node}, {node})"
            )));
        }
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::invalid_matrix(format!(
                "ego weight on neighbor {j} = {w}; list positive entries only"
            )));
        }
        row.push((j, w));
    }
    row.sort_by_key(|&(j, _)| j);
    if row.windows(2).any(|p| p[0].0 == p[1].0) {
        return Err(Error::invalid_matrix("duplicate ego weight entry".to_string()));
    }
    let sum: f64 = row.iter().map(|&(_, w)| w).sum();
    if (sum - 1.0).abs() > crate::matrix::ROW_SUM_RENORM_BAND {
        return Err(Error::RowSum { row: node, sum });
    }

    let mut opinions: std::collections::HashMap<usize, &[f64]> = std::collections::HashMap::new();
    for &(j, vals) in neighbor_opinions {
        if vals.len() != m {
            return Err(Error::DimensionMismatch {
                context: "neighbor opinion vector length",
                expected: m,
                got: vals.len(),
            });
        }
        opinions.insert(j, vals);
    }
    for &(j, _) in &row {
        if !opinions.contains_key(&j) {
            return Err(Error::MissingNeighborOpinion { node, neighbor: j });
        }
    }

    let mut samples = Vec::with_capacity(m);
    for col in 0..m {
        let mut social = 0.0;
        for &(j, w) in &row {
            social += w * opinions[&j][col];
        }
        let den = social - own_now[col];
        if den.abs() > epsilon {
            samples.push(Sample {
                num: own_next[col] - own_now[col],
                den,
            });
        }
    }
    Ok(estimate_from_samples(node, &samples, epsilon, true))
}

/// Per-column absolute degeneracy thresholds: `epsilon` scaled by the
/// column's opinion range over the whole trajectory.
///
/// A column whose initial state has exactly zero range starts in consensus
/// and carries no information: every denominator is zero up to rounding, so
/// the column yields no samples at all. Both the trigger and the scaling are
/// equivariant under affine rescaling of the opinions, which keeps the
/// degeneracy decision itself scale-free.
fn column_thresholds(tr: &Trajectory, epsilon: f64) -> Vec<Option<f64>> {
    (0..tr.m())
        .map(|col| {
            let (lo0, hi0) = tr.state(0).column_range(col);
            if hi0 - lo0 == 0.0 {
                return None;
            }
            let (lo, hi) = tr.column_range(col);
            Some(epsilon * (hi - lo))
        })
        .collect()
}

fn residual_mean_square(samples: &[Sample], slope: f64) -> f64 {
    let rss: f64 = samples
        .iter()
        .map(|s| {
            let r = s.num - slope * s.den;
            r * r
        })
        .sum();
    rss / samples.len() as f64
}

/// Least-squares slope with the observation-noise moment correction.
///
/// With iid noise of scale `sigma` on every opinion, both sides of the
/// fitted form are noisy: the denominator noise has variance
/// `sigma^2 (1 + q)` with `q` the sum of squared row weights, the numerator
/// noise `2 sigma^2`, and their covariance is `+sigma^2` (the node's own
/// observation appears in both). A plain least-squares slope is therefore
/// biased, and the bias grows with the number of near-converged samples.
/// The residual scale identifies `sigma`, so the moment sums are corrected
/// by their known noise expectations and re-solved. On noise-free data the
/// residual scale is at rounding level and the correction vanishes.
///
/// Returns the slope and the noise-variance estimate, or `None` when the
/// corrected denominator power is nonpositive, meaning the samples carry
/// nothing but noise.
fn corrected_slope(samples: &[Sample], q: f64) -> Option<(f64, f64)> {
    let k = samples.len() as f64;
    let mut cross = 0.0;
    let mut sq = 0.0;
    for s in samples {
        cross += s.num * s.den;
        sq += s.den * s.den;
    }
    let mut slope = cross / sq;
    let mut sigma2 = 0.0;
    for _ in 0..NOISE_CORRECTION_ROUNDS {
        let mean_square = residual_mean_square(samples, slope);
        if mean_square == 0.0 {
            break;
        }
        // E[r^2] = sigma^2 (2 - 2b + b^2 (1 + q)); the quadratic in b has a
        // negative discriminant, so the shape factor is always positive.
        let shape = 2.0 - 2.0 * slope + slope * slope * (1.0 + q);
        sigma2 = mean_square / shape;
        let corrected_sq = sq - k * sigma2 * (1.0 + q);
        if corrected_sq <= 0.0 {
            return None;
        }
        slope = (cross - k * sigma2) / corrected_sq;
    }
    Some((slope, sigma2))
}

/// Pooled fit of one node: noise-corrected least squares, then one pass
/// dropping samples whose denominator sits below the revealed noise scale,
/// then a refit on what remains.
fn fit_static_node(node: usize, samples: Vec<Sample>, q: f64, epsilon: f64) -> NodeEstimate {
    if samples.is_empty() {
        return degenerate(node);
    }
    if samples.len() == 1 {
        return estimate_from_samples(node, &samples, epsilon, false);
    }
    let Some((slope, sigma2)) = corrected_slope(&samples, q) else {
        return degenerate(node);
    };
    let floor = NOISE_SNR_FACTOR * (sigma2 * (1.0 + q)).sqrt();
    let kept: Vec<Sample> = samples
        .iter()
        .copied()
        .filter(|s| s.den.abs() > floor)
        .collect();
    let (slope, kept) = if kept.len() == samples.len() {
        (slope, samples)
    } else if kept.is_empty() {
        return degenerate(node);
    } else if kept.len() == 1 {
        (kept[0].num / kept[0].den, kept)
    } else {
        match corrected_slope(&kept, q) {
            Some((slope, _)) => (slope, kept),
            None => return degenerate(node),
        }
    };
    let rms = residual_mean_square(&kept, slope).sqrt();
    let (status, value) = classify(1.0 - slope, epsilon);
    NodeEstimate {
        node,
        value,
        status,
        samples_used: kept.len(),
        residual_rms: rms,
    }
}

fn check_estimation_inputs(c: &InfluenceMatrix, tr: &Trajectory, epsilon: f64) -> Result<()> {
    check_epsilon(epsilon)?;
    if tr.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            len: tr.len(),
            min: 2,
        });
    }
    if tr.n() != c.n() {
        return Err(Error::DimensionMismatch {
            context: "trajectory nodes vs influence matrix",
            expected: c.n(),
            got: tr.n(),
        });
    }
    Ok(())
}

/// Recovers a time-invariant resistance per node by pooling every usable
/// transition and column.
///
/// The pooled fit is least squares through the origin on
/// `x_i(t+1) - x_i(t) = (1 - d_ii) (s_i(t) - x_i(t))`, corrected for
/// observation noise through the fitted residual scale (see
/// [`fit_static_node`]'s notes); the correction vanishes on noise-free
/// data. A single sample reduces to the plain ratio, so on a two-state
/// trajectory each node's result equals [`estimate_single`] called with the
/// range-scaled threshold. Nodes with no usable sample come back
/// `Degenerate`.
pub fn estimate_static(
    c: &InfluenceMatrix,
    tr: &Trajectory,
    epsilon: f64,
) -> Result<EstimationReport> {
    check_estimation_inputs(c, tr, epsilon)?;
    let thresholds = column_thresholds(tr, epsilon);
    let n = tr.n();
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let q: f64 = c.out_neighbors(i).map(|(_, w)| w * w).sum();
        let mut samples = Vec::new();
        for t in 0..tr.len() - 1 {
            let now = tr.state(t);
            let next = tr.state(t + 1);
            for (col, threshold) in thresholds.iter().enumerate() {
                let Some(threshold) = *threshold else {
                    continue;
                };
                let social = c.storage().row_dot(i, |j| now.get(j, col));
                let den = social - now.get(i, col);
                if den.abs() > threshold {
                    samples.push(Sample {
                        num: next.get(i, col) - now.get(i, col),
                        den,
                    });
                }
            }
        }
        nodes.push(fit_static_node(i, samples, q, epsilon));
    }
    Ok(EstimationReport {
        epsilon,
        body: ReportBody::Static { nodes },
    })
}

/// Recovers one resistance per (node, transition) without pooling over time,
/// for use when the weights may drift.
///
/// Only pairs with a usable denominator appear. The per-node spread of the
/// recovered values is reported; on data from a time-invariant system the
/// values coincide, so spread beyond [`DISPERSION_TOL`] flags misfit.
pub fn estimate_time_varying(
    c: &InfluenceMatrix,
    tr: &Trajectory,
    epsilon: f64,
) -> Result<EstimationReport> {
    check_estimation_inputs(c, tr, epsilon)?;
    let thresholds = column_thresholds(tr, epsilon);
    let (n, m) = (tr.n(), tr.m());
    let mut samples_out = Vec::new();
    let mut dispersion = Vec::new();
    for i in 0..n {
        let mut values = Vec::new();
        for t in 0..tr.len() - 1 {
            let now = tr.state(t);
            let next = tr.state(t + 1);
            let mut samples = Vec::with_capacity(m);
            for (col, threshold) in thresholds.iter().enumerate() {
                let Some(threshold) = *threshold else {
                    continue;
                };
                let social = c.storage().row_dot(i, |j| now.get(j, col));
                let den = social - now.get(i, col);
                if den.abs() > threshold {
                    samples.push(Sample {
                        num: next.get(i, col) - now.get(i, col),
                        den,
                    });
                }
            }
            if samples.is_empty() {
                continue;
            }
            let estimate = estimate_from_samples(i, &samples, epsilon, true);
            if let Some(v) = estimate.value {
                values.push(v);
            }
            samples_out.push(TimeEstimate { t, estimate });
        }
        if values.is_empty() {
            continue;
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let spread = max - min;
        dispersion.push(NodeDispersion {
            node: i,
            samples: values.len(),
            min,
            max,
            spread,
            flagged: spread > DISPERSION_TOL,
        });
    }
    Ok(EstimationReport {
        epsilon,
        body: ReportBody::TimeVarying {
            samples: samples_out,
            dispersion,
        },
    })
}

/// Rebuilds the full coupled weights from a static report in which every
/// node recovered an `Ok` resistance.
pub fn reconstruct_weights(
    c: &InfluenceMatrix,
    report: &EstimationReport,
) -> Result<CoupledWeights> {
    let nodes = report.nodes().ok_or_else(|| Error::ReportMode {
        reason: "weight reconstruction needs a static report".to_string(),
    })?;
    if nodes.len() != c.n() {
        return Err(Error::DimensionMismatch {
            context: "report nodes vs influence matrix",
            expected: c.n(),
            got: nodes.len(),
        });
    }
    let mut d = Vec::with_capacity(nodes.len());
    for e in nodes {
        match (e.status, e.value) {
            (EstimateStatus::Ok, Some(v)) => d.push(v),
            _ => {
                return Err(Error::NotOkEstimate {
                    node: e.node,
                    status: e.status,
                })
            }
        }
    }
    compose_weights(c, &ResistanceProfile::new(d)?)
}
