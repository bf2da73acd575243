//! Text formats for networks, trajectories, opinion states, resistance
//! profiles, estimation reports, run manifests and run configurations.
//!
//! Numeric values are written with Rust's shortest round-trip formatting,
//! so every write/read pair is lossless. Lines starting with `#` and blank
//! lines are ignored by all readers. Readers validate the full type
//! invariants and report the file, line and reason of the first violation;
//! they never hand back an invariant-violating object.
//!
//! Formats:
//! - network: header `n`, then one `i j weight` line per positive entry
//!   (0-based, row-major order)
//! - resistance: header `n`, then `i value` lines
//! - opinion state: header `n m`, then `node column value` lines
//! - trajectory: long-format `t node column value` lines covering the full
//!   `t x node x column` grid
//! - report: CSV with a schema-version header line
//! - run config: TOML, unknown keys rejected with their location

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{OpinionState, Trajectory, DEFAULT_CONVERGENCE_TOL, DEFAULT_STEP_CAP};
use crate::error::{Error, Result};
use crate::estimator::{EstimationReport, NodeEstimate, ReportBody, DEFAULT_EPSILON};
use crate::matrix::{InfluenceMatrix, ResistanceProfile};
use crate::synth::{GeneratorSpec, NetworkKind, OpinionDist, WeightScheme};

/// Schema version written into report headers.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn write_file(path: impl AsRef<Path>, content: &str) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut out = std::io::BufWriter::new(file);
    out.write_all(content.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path_str(path), e))
}

/// Data lines of a file with their 1-based line numbers; comments and blank
/// lines are skipped.
fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut lines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path_str(path), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        lines.push((idx + 1, trimmed.to_string()));
    }
    Ok(lines)
}

fn parse_token<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    token: &str,
    what: &str,
) -> Result<T> {
    token.parse().map_err(|_| {
        Error::parse(
            path_str(path),
            line,
            format!("cannot parse {what} from `{token}`"),
        )
    })
}

fn expect_fields<'a>(
    path: &Path,
    line: usize,
    text: &'a str,
    count: usize,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != count {
        return Err(Error::parse(
            path_str(path),
            line,
            format!("expected {count} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

// ---------------------------------------------------------------------------
// network
// ---------------------------------------------------------------------------

/// Writes the positive entries of `c` as `i j weight` lines after a node
/// count header.
pub fn write_network(c: &InfluenceMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# influence network v1");
    let _ = writeln!(out, "{}", c.n());
    for (i, j, w) in c.positive_entries() {
        let _ = writeln!(out, "{i} {j} {w}");
    }
    write_file(path, &out)
}

/// Reads a network file and validates the influence-matrix invariants.
pub fn read_network(path: impl AsRef<Path>) -> Result<InfluenceMatrix> {
    let path = path.as_ref();
    let lines = data_lines(path)?;
    let Some(((header_line, header), entries)) = lines.split_first().map(|(h, t)| (h.clone(), t))
    else {
        return Err(Error::parse(path_str(path), 1, "empty network file"));
    };
    let n: usize = {
        let fields = expect_fields(path, header_line, &header, 1)?;
        parse_token(path, header_line, fields[0], "node count")?
    };
    let mut edges = Vec::with_capacity(entries.len());
    let mut seen = std::collections::HashSet::new();
    for (line, text) in entries {
        let fields = expect_fields(path, *line, text, 3)?;
        let i: usize = parse_token(path, *line, fields[0], "row index")?;
        let j: usize = parse_token(path, *line, fields[1], "column index")?;
        let w: f64 = parse_token(path, *line, fields[2], "weight")?;
        if i >= n || j >= n {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("cell ({i}, {j}) is outside a {n}-node network"),
            ));
        }
        if i == j {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("self-loop weight at cell ({i}, {i}); the diagonal must be zero"),
            ));
        }
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("weight at cell ({i}, {j}) must be positive and finite, got {w}"),
            ));
        }
        if !seen.insert((i, j)) {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("duplicate entry for cell ({i}, {j})"),
            ));
        }
        edges.push((i, j, w));
    }
    InfluenceMatrix::from_edges(n, &edges)
}

// ---------------------------------------------------------------------------
// resistance
// ---------------------------------------------------------------------------

/// Writes a resistance profile as `i value` lines after a node count header.
pub fn write_resistance(d: &ResistanceProfile, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# resistance profile v1");
    let _ = writeln!(out, "{}", d.n());
    for (i, v) in d.values().iter().enumerate() {
        let _ = writeln!(out, "{i} {v}");
    }
    write_file(path, &out)
}

/// Reads a resistance profile, requiring exactly one value per node.
pub fn read_resistance(path: impl AsRef<Path>) -> Result<ResistanceProfile> {
    let path = path.as_ref();
    let lines = data_lines(path)?;
    let Some(((header_line, header), entries)) = lines.split_first().map(|(h, t)| (h.clone(), t))
    else {
        return Err(Error::parse(path_str(path), 1, "empty resistance file"));
    };
    let n: usize = {
        let fields = expect_fields(path, header_line, &header, 1)?;
        parse_token(path, header_line, fields[0], "node count")?
    };
    let mut values: Vec<Option<f64>> = vec![None; n];
    for (line, text) in entries {
        let fields = expect_fields(path, *line, text, 2)?;
        let i: usize = parse_token(path, *line, fields[0], "node index")?;
        let v: f64 = parse_token(path, *line, fields[1], "resistance value")?;
        if i >= n {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("node {i} is outside a {n}-node profile"),
            ));
        }
        if values[i].replace(v).is_some() {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("duplicate value for node {i}"),
            ));
        }
    }
    let mut d = Vec::with_capacity(n);
    for (i, v) in values.into_iter().enumerate() {
        d.push(v.ok_or_else(|| {
            Error::parse(path_str(path), 0, format!("missing value for node {i}"))
        })?);
    }
    ResistanceProfile::new(d)
}

// ---------------------------------------------------------------------------
// opinion state
// ---------------------------------------------------------------------------

/// Writes one opinion state as `node column value` lines after an `n m`
/// header.
pub fn write_opinions(x: &OpinionState, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# opinion state v1");
    let _ = writeln!(out, "{} {}", x.n(), x.m());
    for node in 0..x.n() {
        for column in 0..x.m() {
            let _ = writeln!(out, "{node} {column} {}", x.get(node, column));
        }
    }
    write_file(path, &out)
}

/// Reads one opinion state, requiring the full node-by-column grid.
pub fn read_opinions(path: impl AsRef<Path>) -> Result<OpinionState> {
    let path = path.as_ref();
    let lines = data_lines(path)?;
    let Some(((header_line, header), entries)) = lines.split_first().map(|(h, t)| (h.clone(), t))
    else {
        return Err(Error::parse(path_str(path), 1, "empty opinion file"));
    };
    let fields = expect_fields(path, header_line, &header, 2)?;
    let n: usize = parse_token(path, header_line, fields[0], "node count")?;
    let m: usize = parse_token(path, header_line, fields[1], "column count")?;
    if n == 0 || m == 0 {
        return Err(Error::parse(
            path_str(path),
            header_line,
            "node and column counts must be positive",
        ));
    }
    let mut grid: Vec<Option<f64>> = vec![None; n * m];
    for (line, text) in entries {
        let fields = expect_fields(path, *line, text, 3)?;
        let node: usize = parse_token(path, *line, fields[0], "node index")?;
        let column: usize = parse_token(path, *line, fields[1], "column index")?;
        let value: f64 = parse_token(path, *line, fields[2], "opinion value")?;
        if node >= n || column >= m {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("entry ({node}, {column}) is outside a {n}x{m} state"),
            ));
        }
        if grid[node * m + column].replace(value).is_some() {
            return Err(Error::parse(
                path_str(path),
                *line,
                format!("duplicate entry ({node}, {column})"),
            ));
        }
    }
    let mut values = Vec::with_capacity(n * m);
    for (idx, v) in grid.into_iter().enumerate() {
        values.push(v.ok_or_else(|| {
            Error::parse(
                path_str(path),
                0,
                format!("missing entry ({}, {})", idx / m, idx % m),
            )
        })?);
    }
    OpinionState::new(n, m, values)
}

// ---------------------------------------------------------------------------
// trajectory
// ---------------------------------------------------------------------------

/// Writes a trajectory in long format: one `t node column value` line per
/// entry, sorted by `(t, node, column)`.
pub fn write_trajectory(tr: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# opinion trajectory v1");
    for (t, state) in tr.states().iter().enumerate() {
        for node in 0..tr.n() {
            for column in 0..tr.m() {
                let _ = writeln!(out, "{t} {node} {column} {}", state.get(node, column));
            }
        }
    }
    write_file(path, &out)
}

/// Reads a long-format trajectory; every `(t, node, column)` combination of
/// the implied grid must be present exactly once.
pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    let lines = data_lines(path)?;
    if lines.is_empty() {
        return Err(Error::parse(path_str(path), 1, "empty trajectory file"));
    }
    let mut rows = Vec::with_capacity(lines.len());
    let (mut steps, mut n, mut m) = (0usize, 0usize, 0usize);
    for (line, text) in &lines {
        let fields = expect_fields(path, *line, text, 4)?;
        let t: usize = parse_token(path, *line, fields[0], "time index")?;
        let node: usize = parse_token(path, *line, fields[1], "node index")?;
        let column: usize = parse_token(path, *line, fields[2], "column index")?;
        let value: f64 = parse_token(path, *line, fields[3], "opinion value")?;
        steps = steps.max(t + 1);
        n = n.max(node + 1);
        m = m.max(column + 1);
        rows.push((*line, t, node, column, value));
    }
    let mut grid: Vec<Option<f64>> = vec![None; steps * n * m];
    for (line, t, node, column, value) in rows {
        let idx = (t * n + node) * m + column;
        if grid[idx].replace(value).is_some() {
            return Err(Error::parse(
                path_str(path),
                line,
                format!("duplicate entry (t={t}, node={node}, column={column})"),
            ));
        }
    }
    let mut states = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut values = Vec::with_capacity(n * m);
        for node in 0..n {
            for column in 0..m {
                let idx = (t * n + node) * m + column;
                values.push(grid[idx].ok_or_else(|| {
                    Error::parse(
                        path_str(path),
                        0,
                        format!("missing entry (t={t}, node={node}, column={column})"),
                    )
                })?);
            }
        }
        states.push(OpinionState::new(n, m, values)?);
    }
    Trajectory::new(states)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn report_row(out: &mut String, t: &str, e: &NodeEstimate) {
    let value = e.value.map(|v| v.to_string()).unwrap_or_default();
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        e.node, t, value, e.status, e.samples_used, e.residual_rms
    );
}

/// Writes an estimation report as CSV: one row per node (static mode) or per
/// node-time pair (time-varying mode). The value field is empty for
/// statuses that carry no value. Time-varying dispersion is appended as
/// comment lines so the row schema stays fixed.
pub fn write_report(report: &EstimationReport, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# degroot report schema {REPORT_SCHEMA_VERSION}");
    let _ = writeln!(out, "# mode {} epsilon {}", report.mode_str(), report.epsilon);
    let _ = writeln!(out, "node,t,value,status,samples_used,residual_rms");
    match &report.body {
        ReportBody::Static { nodes } => {
            for e in nodes {
                report_row(&mut out, "static", e);
            }
        }
        ReportBody::TimeVarying {
            samples,
            dispersion,
        } => {
            for s in samples {
                report_row(&mut out, &s.t.to_string(), &s.estimate);
            }
            for d in dispersion {
                let _ = writeln!(
                    out,
                    "# dispersion node={} samples={} min={} max={} spread={} flagged={}",
                    d.node, d.samples, d.min, d.max, d.spread, d.flagged
                );
            }
        }
    }
    write_file(path, &out)
}

// ---------------------------------------------------------------------------
// run config
// ---------------------------------------------------------------------------

/// Estimator mode selected in a run config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    Static,
    Varying,
}

/// Network topology key in a run config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Complete,
    Ring,
    Star,
    RandomSparse,
}

/// Weight scheme key in a run config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightsKey {
    Uniform,
    Random,
}

/// Opinion distribution key in a run config.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistKey {
    Uniform,
    Gaussian,
    Constant,
}

/// Initial-opinion settings of the generate section.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpinionsSection {
    pub distribution: DistKey,
    /// Lower bound of the uniform distribution.
    pub low: f64,
    /// Upper bound of the uniform distribution.
    pub high: f64,
    /// Mean of the gaussian distribution.
    pub mean: f64,
    /// Scale of the gaussian distribution.
    pub sigma: f64,
    /// Value of the constant (consensus) distribution.
    pub value: f64,
}

impl Default for OpinionsSection {
    fn default() -> Self {
        OpinionsSection {
            distribution: DistKey::Uniform,
            low: 0.0,
            high: 1.0,
            mean: 0.0,
            sigma: 1.0,
            value: 0.0,
        }
    }
}

impl OpinionsSection {
    pub fn dist(&self) -> OpinionDist {
        match self.distribution {
            DistKey::Uniform => OpinionDist::Uniform {
                low: self.low,
                high: self.high,
            },
            DistKey::Gaussian => OpinionDist::Gaussian {
                mean: self.mean,
                sigma: self.sigma,
            },
            DistKey::Constant => OpinionDist::Constant { value: self.value },
        }
    }
}

/// Generator settings: the input source when artifacts are generated rather
/// than read from files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateSection {
    pub kind: GenKind,
    pub n: usize,
    /// Issue dimensions of the generated initial opinions.
    pub m: usize,
    /// Edge probability; required for (and only used by) `random-sparse`.
    pub density: Option<f64>,
    pub weights: WeightsKey,
    pub resistance_low: f64,
    pub resistance_high: f64,
    pub opinions: OpinionsSection,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection {
            kind: GenKind::RandomSparse,
            n: 50,
            m: 1,
            density: Some(0.1),
            weights: WeightsKey::Random,
            resistance_low: 0.05,
            resistance_high: 0.95,
            opinions: OpinionsSection::default(),
        }
    }
}

impl GenerateSection {
    /// The network recipe for this section, seeded with `seed`.
    pub fn network_spec(&self, seed: u64) -> Result<GeneratorSpec> {
        let kind = match self.kind {
            GenKind::Complete => NetworkKind::Complete,
            GenKind::Ring => NetworkKind::Ring,
            GenKind::Star => NetworkKind::Star,
            GenKind::RandomSparse => {
                let density = self.density.ok_or_else(|| {
                    Error::invalid_parameter("random-sparse generation needs a density")
                })?;
                NetworkKind::RandomSparse { density }
            }
        };
        Ok(GeneratorSpec {
            kind,
            n: self.n,
            seed,
            weights: match self.weights {
                WeightsKey::Uniform => WeightScheme::Uniform,
                WeightsKey::Random => WeightScheme::Random,
            },
        })
    }
}

/// Simulation stop settings: exactly one of `steps` or `tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Fixed horizon.
    pub steps: Option<usize>,
    /// Convergence tolerance on the max-norm change per step.
    pub tol: Option<f64>,
    /// Step cap for the convergence mode.
    pub max_steps: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            steps: Some(10),
            tol: None,
            max_steps: DEFAULT_STEP_CAP,
        }
    }
}

impl SimulateSection {
    pub fn stop_rule(&self) -> Result<crate::dynamics::StopRule> {
        match (self.steps, self.tol) {
            (Some(_), Some(_)) => Err(Error::invalid_parameter(
                "set either simulate.steps or simulate.tol, not both",
            )),
            (Some(steps), None) => Ok(crate::dynamics::StopRule::Horizon(steps)),
            (None, Some(tol)) => Ok(crate::dynamics::StopRule::Tolerance {
                tol,
                max_steps: self.max_steps,
            }),
            (None, None) => Ok(crate::dynamics::StopRule::Tolerance {
                tol: DEFAULT_CONVERGENCE_TOL,
                max_steps: self.max_steps,
            }),
        }
    }
}

/// Affine rescale settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RescaleSection {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for RescaleSection {
    fn default() -> Self {
        RescaleSection {
            alpha: 1.0,
            beta: 0.0,
        }
    }
}

/// Trajectory validation tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateSection {
    /// Slack on the convex-hull bounds.
    pub hull_tol: f64,
    /// Tolerance for consensus detection and preservation.
    pub consensus_tol: f64,
}

impl Default for ValidateSection {
    fn default() -> Self {
        ValidateSection {
            hull_tol: 1e-10,
            consensus_tol: 1e-12,
        }
    }
}

/// Noise-robustness sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Observation-noise scales.
    pub sigmas: Vec<f64>,
    /// Trajectory lengths in steps.
    pub lengths: Vec<usize>,
    /// Independent systems per cell.
    pub seeds: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            sigmas: vec![0.001, 0.01],
            lengths: vec![2, 5, 10, 25],
            seeds: 100,
        }
    }
}

/// Input and output file locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub network: String,
    pub resistance: String,
    pub opinions: String,
    pub trajectory: String,
    pub rescaled: String,
    pub report: String,
    pub sweep: String,
    pub manifest: String,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            network: "network.tsv".to_string(),
            resistance: "resistance.tsv".to_string(),
            opinions: "opinions.tsv".to_string(),
            trajectory: "trajectory.tsv".to_string(),
            rescaled: "rescaled.tsv".to_string(),
            report: "report.csv".to_string(),
            sweep: "sweep.csv".to_string(),
            manifest: "manifest.txt".to_string(),
        }
    }
}

/// One full run configuration.
///
/// The `generate` section, when present, is the input source for the
/// generate and sweep commands; the stage commands exchange the remaining
/// artifacts through the files in `paths`, so each object has exactly one
/// source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Run seed; all task seeds are derived from it.
    pub seed: u64,
    /// Degeneracy threshold, relative to the per-column opinion range.
    pub epsilon: f64,
    pub mode: EstimationMode,
    /// Present iff this run generates its own system. The built-in default
    /// config has one; a config file only has one when it spells the
    /// section out.
    #[serde(default)]
    pub generate: Option<GenerateSection>,
    pub simulate: SimulateSection,
    pub rescale: RescaleSection,
    pub validate: ValidateSection,
    pub sweep: SweepSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            epsilon: DEFAULT_EPSILON,
            mode: EstimationMode::Static,
            generate: Some(GenerateSection::default()),
            simulate: SimulateSection::default(),
            rescale: RescaleSection::default(),
            validate: ValidateSection::default(),
            sweep: SweepSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    /// Structural validation beyond what parsing enforces.
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::invalid_parameter(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if let Some(tol) = self.simulate.tol {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::invalid_parameter(format!(
                    "simulate.tol must be positive and finite, got {tol}"
                )));
            }
        }
        self.simulate.stop_rule()?;
        for (name, tol) in [
            ("validate.hull_tol", self.validate.hull_tol),
            ("validate.consensus_tol", self.validate.consensus_tol),
        ] {
            if !tol.is_finite() || tol <= 0.0 {
                return Err(Error::invalid_parameter(format!(
                    "{name} must be positive and finite, got {tol}"
                )));
            }
        }
        if !self.rescale.alpha.is_finite() || self.rescale.alpha <= 0.0 {
            return Err(Error::invalid_parameter(format!(
                "rescale.alpha must be positive and finite, got {}",
                self.rescale.alpha
            )));
        }
        Ok(())
    }
}

/// Reads and validates a TOML run configuration. Unknown keys are rejected
/// with their location in the file.
pub fn read_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    let config: RunConfig = toml::from_str(&text).map_err(|e| Error::Config {
        path: path_str(path),
        reason: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

/// The documented default configuration, generated from the in-code
/// defaults so it cannot drift from them.
pub fn config_reference() -> String {
    let c = RunConfig::default();
    let g = c.generate.expect("defaults include a generate section");
    let o = g.opinions;
    let sigmas: Vec<String> = c.sweep.sigmas.iter().map(|s| s.to_string()).collect();
    let lengths: Vec<String> = c.sweep.lengths.iter().map(|l| l.to_string()).collect();
    format!(
        r#"# Run configuration reference. Every key is optional and shown with its
# default value. Unknown keys are rejected.

# Run seed; every task seed is derived from it.
seed = {seed}
# Degeneracy threshold for estimation, relative to the per-column opinion range.
epsilon = {epsilon:e}
# Estimator mode: "static" (one pooled value per node) or "varying"
# (one value per node and time step).
mode = "static"

# Input source for `generate` and `sweep`. Omit this whole section when the
# network comes from a file instead.
[generate]
# Topology: "complete", "ring", "star" or "random-sparse".
kind = "random-sparse"
n = {n}
# Issue dimensions of the generated initial opinions.
m = {m}
# Edge probability; used by random-sparse only.
density = {density}
# Row weights: "uniform" (equal) or "random" (normalized positive draws).
weights = "random"
resistance_low = {rlow}
resistance_high = {rhigh}

[generate.opinions]
# "uniform", "gaussian" or "constant"; each uses its own keys below.
distribution = "uniform"
low = {olow}
high = {ohigh}
mean = {omean}
sigma = {osigma}
value = {ovalue}

[simulate]
# Exactly one of `steps` (fixed horizon) or `tol` (run to convergence).
steps = {steps}
# tol = 1e-10
# Step cap when running to convergence.
max_steps = {max_steps}

[rescale]
alpha = {alpha}
beta = {beta}

[validate]
hull_tol = {hull_tol:e}
consensus_tol = {consensus_tol:e}

[sweep]
sigmas = [{sigmas}]
lengths = [{lengths}]
# Independent systems per grid cell.
seeds = {sweep_seeds}

[paths]
network = "{p_network}"
resistance = "{p_resistance}"
opinions = "{p_opinions}"
trajectory = "{p_trajectory}"
rescaled = "{p_rescaled}"
report = "{p_report}"
sweep = "{p_sweep}"
manifest = "{p_manifest}"
"#,
        seed = c.seed,
        epsilon = c.epsilon,
        n = g.n,
        m = g.m,
        density = g.density.unwrap_or(0.1),
        rlow = g.resistance_low,
        rhigh = g.resistance_high,
        olow = o.low,
        ohigh = o.high,
        omean = o.mean,
        osigma = o.sigma,
        ovalue = o.value,
        steps = c.simulate.steps.unwrap_or(10),
        max_steps = c.simulate.max_steps,
        alpha = c.rescale.alpha,
        beta = c.rescale.beta,
        hull_tol = c.validate.hull_tol,
        consensus_tol = c.validate.consensus_tol,
        sigmas = sigmas.join(", "),
        lengths = lengths.join(", "),
        sweep_seeds = c.sweep.seeds,
        p_network = c.paths.network,
        p_resistance = c.paths.resistance,
        p_opinions = c.paths.opinions,
        p_trajectory = c.paths.trajectory,
        p_rescaled = c.paths.rescaled,
        p_report = c.paths.report,
        p_sweep = c.paths.sweep,
        p_manifest = c.paths.manifest,
    )
}

/// Writes the manifest of a generate run: the seed, the generator settings
/// and where the artifacts went.
pub fn write_manifest(config: &RunConfig, edges: usize, path: impl AsRef<Path>) -> Result<()> {
    let g = config.generate.as_ref().ok_or_else(|| {
        Error::invalid_parameter("cannot write a manifest without a generate section")
    })?;
    let mut out = String::new();
    let _ = writeln!(out, "# run manifest v1");
    let _ = writeln!(out, "seed = {}", config.seed);
    let _ = writeln!(out, "kind = {:?}", g.kind);
    let _ = writeln!(out, "n = {}", g.n);
    let _ = writeln!(out, "m = {}", g.m);
    if let Some(density) = g.density {
        let _ = writeln!(out, "density = {density}");
    }
    let _ = writeln!(out, "weights = {:?}", g.weights);
    let _ = writeln!(out, "resistance_low = {}", g.resistance_low);
    let _ = writeln!(out, "resistance_high = {}", g.resistance_high);
    let _ = writeln!(out, "opinions = {:?}", g.opinions.distribution);
    let _ = writeln!(out, "edges = {edges}");
    let _ = writeln!(out, "network = {}", config.paths.network);
    let _ = writeln!(out, "resistance = {}", config.paths.resistance);
    let _ = writeln!(out, "opinions_path = {}", config.paths.opinions);
    write_file(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_network, gen_opinions, gen_resistance};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("degroot-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn network_round_trip_is_exact() {
        let c = gen_network(&GeneratorSpec {
            kind: NetworkKind::RandomSparse { density: 0.15 },
            n: 50,
            seed: 31,
            weights: WeightScheme::Random,
        })
        .unwrap();
        let path = tmp("net-roundtrip.tsv");
        write_network(&c, &path).unwrap();
        let back = read_network(&path).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn network_reader_names_bad_cell() {
        let path = tmp("net-selfloop.tsv");
        std::fs::write(&path, "2\n1 1 0.3\n0 1 1\n1 0 1\n").unwrap();
        let err = read_network(&path).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("(1, 1)"), "{text}");
        assert!(text.contains(":2:"), "{text}");
    }

    #[test]
    fn network_reader_rejects_bad_row_sum() {
        let path = tmp("net-rowsum.tsv");
        std::fs::write(&path, "2\n0 1 0.7\n1 0 1\n").unwrap();
        let err = read_network(&path).unwrap_err();
        assert!(matches!(err, Error::RowSum { row: 0, .. }), "{err}");
    }

    #[test]
    fn network_reader_rejects_malformed_line() {
        let path = tmp("net-malformed.tsv");
        std::fs::write(&path, "2\n0 1\n1 0 1\n").unwrap();
        let err = read_network(&path).unwrap_err();
        assert!(err.to_string().contains("expected 3 fields"), "{err}");
    }

    #[test]
    fn resistance_round_trip() {
        let d = gen_resistance(20, 0.05, 0.95, 3).unwrap();
        let path = tmp("resistance.tsv");
        write_resistance(&d, &path).unwrap();
        assert_eq!(read_resistance(&path).unwrap(), d);
    }

    #[test]
    fn opinions_round_trip() {
        let x = gen_opinions(9, 3, OpinionDist::Gaussian { mean: 2.0, sigma: 5.0 }, 8).unwrap();
        let path = tmp("opinions.tsv");
        write_opinions(&x, &path).unwrap();
        assert_eq!(read_opinions(&path).unwrap(), x);
    }

    #[test]
    fn trajectory_round_trip_and_completeness() {
        let c = gen_network(&GeneratorSpec {
            kind: NetworkKind::Complete,
            n: 4,
            seed: 5,
            weights: WeightScheme::Random,
        })
        .unwrap();
        let d = gen_resistance(4, 0.2, 0.8, 6).unwrap();
        let x0 = gen_opinions(4, 2, OpinionDist::Uniform { low: -1.0, high: 1.0 }, 7).unwrap();
        let sim = crate::dynamics::simulate(&c, &d, &x0, crate::dynamics::StopRule::Horizon(5))
            .unwrap();
        let path = tmp("trajectory.tsv");
        write_trajectory(&sim.trajectory, &path).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back, sim.trajectory);

        // Drop one line: the reader must notice the hole.
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(5);
        let broken = tmp("trajectory-broken.tsv");
        std::fs::write(&broken, lines.join("\n")).unwrap();
        let err = read_trajectory(&broken).unwrap_err();
        assert!(err.to_string().contains("missing entry"), "{err}");
    }

    #[test]
    fn report_columns_and_empty_values() {
        let report = EstimationReport {
            epsilon: 1e-9,
            body: ReportBody::Static {
                nodes: vec![
                    NodeEstimate {
                        node: 0,
                        value: Some(0.25),
                        status: crate::estimator::EstimateStatus::Ok,
                        samples_used: 10,
                        residual_rms: 0.0,
                    },
                    NodeEstimate {
                        node: 1,
                        value: None,
                        status: crate::estimator::EstimateStatus::Degenerate,
                        samples_used: 0,
                        residual_rms: 0.0,
                    },
                ],
            },
        };
        let path = tmp("report.csv");
        write_report(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            format!("# degroot report schema {REPORT_SCHEMA_VERSION}")
        );
        assert!(lines.next().unwrap().starts_with("# mode static"));
        assert_eq!(
            lines.next().unwrap(),
            "node,t,value,status,samples_used,residual_rms"
        );
        assert_eq!(lines.next().unwrap(), "0,static,0.25,ok,10,0");
        assert_eq!(lines.next().unwrap(), "1,static,,degenerate,0,0");
    }

    #[test]
    fn config_defaults_and_unknown_keys() {
        let path = tmp("config-min.toml");
        std::fs::write(&path, "seed = 7\n").unwrap();
        let config = read_config(&path).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.epsilon, DEFAULT_EPSILON);
        assert_eq!(config.mode, EstimationMode::Static);
        // A config file names its input source explicitly; only the
        // built-in defaults carry an implied generate section.
        assert!(config.generate.is_none());

        let gen = tmp("config-gen.toml");
        std::fs::write(&gen, "seed = 7\n[generate]\nn = 20\n").unwrap();
        let config = read_config(&gen).unwrap();
        assert_eq!(config.generate.unwrap().n, 20);

        let bad = tmp("config-unknown.toml");
        std::fs::write(&bad, "seed = 7\nepsilonn = 1e-9\n").unwrap();
        let err = read_config(&bad).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("epsilonn"), "{text}");
        assert!(text.contains("line 2"), "{text}");
    }

    #[test]
    fn config_rejects_double_stop_rule() {
        let path = tmp("config-stop.toml");
        std::fs::write(&path, "[simulate]\nsteps = 5\ntol = 1e-10\n").unwrap();
        let err = read_config(&path).unwrap_err();
        assert!(err.to_string().contains("not both"), "{err}");
    }

    #[test]
    fn config_reference_parses_back_to_defaults() {
        let path = tmp("config-reference.toml");
        std::fs::write(&path, config_reference()).unwrap();
        let config = read_config(&path).unwrap();
        assert_eq!(config, RunConfig::default());
    }

    #[test]
    fn config_file_without_generate_has_none() {
        let path = tmp("config-files.toml");
        std::fs::write(&path, "seed = 3\n[paths]\nnetwork = \"ext.tsv\"\n").unwrap();
        let config = read_config(&path).unwrap();
        assert!(config.generate.is_none());
        assert_eq!(config.paths.network, "ext.tsv");
    }
}
