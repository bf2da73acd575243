//! Seeded generators for networks, resistance profiles, initial opinions and
//! observation noise.
//!
//! Everything here is a pure function of its arguments: the same spec and
//! seed always produce bit-identical output. Parallel workloads derive one
//! sub-seed per task with [`derive_seed`] so a single run seed reproduces an
//! entire experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::dynamics::{OpinionState, Trajectory};
use crate::error::{Error, Result};
use crate::matrix::{InfluenceMatrix, ResistanceProfile};

/// Attempts at hitting a strongly connected sample before the generator
/// augments the draw with a connecting cycle.
const CONNECTIVITY_RETRIES: usize = 16;

/// Derives an independent sub-seed from a run seed and a task index
/// (SplitMix64 over the combined words).
///
/// This is the seed-derivation rule for parallel use: task `k` of a run
/// seeded with `s` draws from `derive_seed(s, k)`.
pub fn derive_seed(run_seed: u64, task_index: u64) -> u64 {
    let mut z = run_seed ^ task_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Network topology to generate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NetworkKind {
    /// Every ordered pair of distinct nodes is an edge.
    Complete,
    /// Directed cycle: each node listens only to its successor.
    Ring,
    /// Node 0 listens to all leaves; each leaf listens only to node 0.
    Star,
    /// Each ordered pair is an edge independently with probability
    /// `density`; the sample is retried and finally augmented with a cycle
    /// until strongly connected.
    RandomSparse { density: f64 },
}

/// How row weights are assigned to the generated edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightScheme {
    /// Equal weight on every out-neighbor.
    Uniform,
    /// Normalized positive uniform draws, bounded away from zero so no edge
    /// carries a negligible weight.
    Random,
}

/// Full recipe for one generated network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub kind: NetworkKind,
    pub n: usize,
    pub seed: u64,
    pub weights: WeightScheme,
}

/// Generates a valid, strongly connected influence matrix.
pub fn gen_network(spec: &GeneratorSpec) -> Result<InfluenceMatrix> {
    if spec.n < 2 {
        return Err(Error::invalid_parameter(format!(
            "network generation needs n >= 2, got {}",
            spec.n
        )));
    }
    let mut rng = rng_for(spec.seed);
    let adjacency = match spec.kind {
        NetworkKind::Complete => (0..spec.n)
            .map(|i| (0..spec.n).filter(|&j| j != i).collect())
            .collect(),
        NetworkKind::Ring => (0..spec.n).map(|i| vec![(i + 1) % spec.n]).collect(),
        NetworkKind::Star => {
            let mut rows: Vec<Vec<usize>> = vec![(1..spec.n).collect()];
            rows.extend((1..spec.n).map(|_| vec![0]));
            rows
        }
        NetworkKind::RandomSparse { density } => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(Error::invalid_parameter(format!(
                    "sparse density must lie in (0, 1], got {density}"
                )));
            }
            sample_sparse(spec.n, density, &mut rng)
        }
    };

    let mut edges = Vec::new();
    for (i, neighbors) in adjacency.iter().enumerate() {
        match spec.weights {
            WeightScheme::Uniform => {
                let w = 1.0 / neighbors.len() as f64;
                for &j in neighbors {
                    edges.push((i, j, w));
                }
            }
            WeightScheme::Random => {
                let raw: Vec<f64> = neighbors
                    .iter()
                    .map(|_| 0.1 + 0.9 * rng.random::<f64>())
                    .collect();
                let sum: f64 = raw.iter().sum();
                for (&j, u) in neighbors.iter().zip(raw) {
                    edges.push((i, j, u / sum));
                }
            }
        }
    }
    InfluenceMatrix::from_edges(spec.n, &edges)
}

/// Draws Bernoulli edges until strongly connected, augmenting the final
/// attempt with a random permutation cycle if the retries run out.
fn sample_sparse(n: usize, density: f64, rng: &mut ChaCha12Rng) -> Vec<Vec<usize>> {
    let mut adjacency = Vec::new();
    for _ in 0..CONNECTIVITY_RETRIES {
        adjacency = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && rng.random::<f64>() < density)
                    .collect::<Vec<_>>()
            })
            .collect();
        if strongly_connected(&adjacency) {
            return adjacency;
        }
    }
    // Overlay a cycle through a random permutation; the result is strongly
    // connected no matter what the sample looked like.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = (rng.random::<f64>() * (i + 1) as f64) as usize;
        order.swap(i, j.min(i));
    }
    for k in 0..n {
        let from = order[k];
        let to = order[(k + 1) % n];
        if !adjacency[from].contains(&to) {
            adjacency[from].push(to);
            adjacency[from].sort_unstable();
        }
    }
    adjacency
}

fn strongly_connected(adjacency: &[Vec<usize>]) -> bool {
    let n = adjacency.len();
    if adjacency.iter().any(|row| row.is_empty()) {
        return false;
    }
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in adjacency.iter().enumerate() {
        for &j in row {
            reverse[j].push(i);
        }
    }
    let reach = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(adjacency) && reach(&reverse)
}

/// Uniform resistance draws in `[low, high]`, which must sit strictly inside
/// `(0, 1)` with `low < high`.
pub fn gen_resistance(n: usize, low: f64, high: f64, seed: u64) -> Result<ResistanceProfile> {
    if !(low > 0.0 && low < high && high < 1.0) {
        return Err(Error::invalid_parameter(format!(
            "resistance bounds must satisfy 0 < low < high < 1, got [{low}, {high}]"
        )));
    }
    let mut rng = rng_for(seed);
    let d = (0..n)
        .map(|_| low + (high - low) * rng.random::<f64>())
        .collect();
    ResistanceProfile::new(d)
}

/// Distribution of generated initial opinions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpinionDist {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, sigma: f64 },
    /// Every entry equal: a consensus initial state.
    Constant { value: f64 },
}

/// Generates an `n`-by-`m` opinion state from the given distribution.
pub fn gen_opinions(n: usize, m: usize, dist: OpinionDist, seed: u64) -> Result<OpinionState> {
    let mut rng = rng_for(seed);
    let count = n.checked_mul(m).ok_or_else(|| {
        Error::invalid_parameter("opinion state size overflows".to_string())
    })?;
    let values: Vec<f64> = match dist {
        OpinionDist::Uniform { low, high } => {
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(Error::invalid_parameter(format!(
                    "uniform opinion bounds must satisfy low < high, got [{low}, {high}]"
                )));
            }
            (0..count)
                .map(|_| low + (high - low) * rng.random::<f64>())
                .collect()
        }
        OpinionDist::Gaussian { mean, sigma } => {
            if !(sigma > 0.0 && sigma.is_finite() && mean.is_finite()) {
                return Err(Error::invalid_parameter(format!(
                    "gaussian opinions need finite mean and positive sigma, got ({mean}, {sigma})"
                )));
            }
            let normal = Normal::new(mean, sigma)
                .map_err(|e| Error::invalid_parameter(e.to_string()))?;
            (0..count).map(|_| normal.sample(&mut rng)).collect()
        }
        OpinionDist::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::non_finite(format!("constant opinion = {value}")));
            }
            vec![value; count]
        }
    };
    OpinionState::new(n, m, values)
}

/// Adds independent zero-mean gaussian observation noise of scale `sigma` to
/// every entry. `sigma = 0` returns the input unchanged, bit for bit.
pub fn perturb(tr: &Trajectory, sigma: f64, seed: u64) -> Result<Trajectory> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::invalid_parameter(format!(
            "noise sigma must be nonnegative and finite, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(tr.clone());
    }
    let mut rng = rng_for(seed);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid_parameter(e.to_string()))?;
    let states = tr
        .states()
        .iter()
        .map(|s| {
            let values = s.values().iter().map(|&v| v + normal.sample(&mut rng)).collect();
            OpinionState::new(s.n(), s.m(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(states)
}
