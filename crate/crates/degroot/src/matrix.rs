//! Influence networks and their coupling with resistance profiles.
//!
//! [`InfluenceMatrix`] holds the observable relative interpersonal weights
//! `C`: zero main diagonal, nonnegative entries, unit row sums.
//! [`ResistanceProfile`] holds the hidden self-weights `d_ii`, each strictly
//! inside `(0, 1)`. [`CoupledWeights`] is the full row-stochastic update
//! matrix `W = (I - D) C + D` that drives the dynamics.

use crate::error::{Error, Result};
use crate::storage::Storage;

/// Row sums are accepted as stochastic when within this tolerance of 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row sums off by more than [`ROW_SUM_TOL`] but within this band are
/// renormalized with a warning; anything beyond is rejected. Measured data
/// is rarely exactly stochastic.
pub const ROW_SUM_RENORM_BAND: f64 = 1e-9;

fn check_row_sum(i: usize, row: &mut [f64], what: &str) -> Result<()> {
    let sum: f64 = row.iter().sum();
    let off = (sum - 1.0).abs();
    if off <= ROW_SUM_TOL {
        return Ok(());
    }
    if off <= ROW_SUM_RENORM_BAND {
        log::warn!(
            "{what} row {i} sums to {sum:.17e}; renormalizing (off by {off:.3e})"
        );
        for w in row.iter_mut() {
            *w /= sum;
        }
        return Ok(());
    }
    Err(Error::RowSum { row: i, sum })
}

/// Observable relative interpersonal weights `C` with a zero main diagonal
/// and unit row sums.
#[derive(Clone, Debug, PartialEq)]
pub struct InfluenceMatrix {
    storage: Storage,
}

impl InfluenceMatrix {
    /// Builds from full rows. Rows must be square, have an exactly zero
    /// diagonal, nonnegative finite entries, and sums within the
    /// renormalization band around 1.
    pub fn from_rows(mut rows: Vec<Vec<f64>>) -> Result<InfluenceMatrix> {
        let n = rows.len();
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "influence matrix row length",
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(Error::non_finite(format!("c[{i}][{j}] = {w}")));
                }
                if j == i && w != 0.0 {
                    return Err(Error::invalid_matrix(format!(
                        "self-weight c[{i}][{i}] = {w} must be exactly zero"
                    )));
                }
                if w < 0.0 {
                    return Err(Error::invalid_matrix(format!(
                        "negative weight c[{i}][{j}] = {w}"
                    )));
                }
            }
            check_row_sum(i, row, "influence matrix")?;
        }
        Ok(InfluenceMatrix {
            storage: Storage::from_rows(&rows),
        })
    }

    /// Builds from positive off-diagonal entries `(i, j, weight)`.
    /// Unlisted entries are zero. Duplicates, self-loops, nonpositive
    /// weights and out-of-range indices are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<InfluenceMatrix> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n {
                return Err(Error::IndexOutOfRange {
                    context: "edge source",
                    index: i,
                    len: n,
                });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange {
                    context: "edge target",
                    index: j,
                    len: n,
                });
            }
            if i == j {
                return Err(Error::invalid_matrix(format!(
                    "self-loop weight at ({i}, {i})"
                )));
            }
            if !w.is_finite() {
                return Err(Error::non_finite(format!("c[{i}][{j}] = {w}")));
            }
            if w <= 0.0 {
                return Err(Error::invalid_matrix(format!(
                    "nonpositive weight c[{i}][{j}] = {w}; omit zero entries"
                )));
            }
            rows[i].push((j, w));
        }
        let mut sorted = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|&(j, _)| j);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::invalid_matrix(format!(
                    "duplicate entry in row {i}"
                )));
            }
            let mut weights: Vec<f64> = row.iter().map(|&(_, w)| w).collect();
            check_row_sum(i, &mut weights, "influence matrix")?;
            for (k, e) in row.iter_mut().enumerate() {
                e.1 = weights[k];
            }
            sorted.push(row);
        }
        Ok(InfluenceMatrix {
            storage: Storage::from_sorted_entries(n, &sorted),
        })
    }

    pub fn n(&self) -> usize {
        self.storage.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.storage.get(i, j)
    }

    /// Row `i` as a dense weight vector (zero self-entry included).
    pub fn row_weights(&self, i: usize) -> Vec<f64> {
        self.storage.row_dense(i)
    }

    /// Positive entries of row `i` in ascending column order.
    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.storage.row_nonzero(i)
    }

    /// All positive entries `(i, j, weight)` in row-major order.
    pub fn positive_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n()).flat_map(move |i| self.storage.row_nonzero(i).map(move |(j, w)| (i, j, w)))
    }

    /// Number of positive entries.
    pub fn edge_count(&self) -> usize {
        self.storage.nonzero_count()
    }

    pub(crate) fn storage(&self) -> &Storage {
        &self.storage
    }
}

/// Hidden self-weights `d_ii`, each strictly inside `(0, 1)`.
///
/// Boundary values are rejected: `d_ii = 0` would mean the node ignores
/// itself entirely and `d_ii = 1` would decouple it from the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceProfile {
    d: Vec<f64>,
}

impl ResistanceProfile {
    pub fn new(d: Vec<f64>) -> Result<ResistanceProfile> {
        for (node, &v) in d.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(Error::InvalidResistance { node, value: v });
            }
        }
        Ok(ResistanceProfile { d })
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.d[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.d
    }
}

/// The full row-stochastic update matrix `W` with positive diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledWeights {
    storage: Storage,
}

impl CoupledWeights {
    /// Builds from full rows, validating nonnegativity, diagonal strictly in
    /// `(0, 1)` and row sums within the renormalization band.
    pub fn from_rows(mut rows: Vec<Vec<f64>>) -> Result<CoupledWeights> {
        let n = rows.len();
        for (i, row) in rows.iter_mut().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "coupled weights row length",
                    expected: n,
                    got: row.len(),
                });
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(Error::non_finite(format!("w[{i}][{j}] = {w}")));
                }
                if w < 0.0 {
                    return Err(Error::invalid_matrix(format!(
                        "negative weight w[{i}][{j}] = {w}"
                    )));
                }
            }
            let d = row[i];
            if d <= 0.0 || d >= 1.0 {
                return Err(Error::InvalidResistance { node: i, value: d });
            }
            check_row_sum(i, row, "coupled weights")?;
        }
        Ok(CoupledWeights {
            storage: Storage::from_rows(&rows),
        })
    }

    pub fn n(&self) -> usize {
        self.storage.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.storage.get(i, j)
    }

    /// The self-weight `w_ii`.
    pub fn diagonal(&self, i: usize) -> f64 {
        self.storage.get(i, i)
    }

    pub(crate) fn storage(&self) -> &Storage {
        &self.storage
    }
}

/// Couples an influence matrix with a resistance profile:
/// `w_ij = (1 - d_ii) c_ij` off the diagonal and `w_ii = d_ii` on it.
pub fn compose_weights(c: &InfluenceMatrix, d: &ResistanceProfile) -> Result<CoupledWeights> {
    let n = c.n();
    if d.n() != n {
        return Err(Error::DimensionMismatch {
            context: "resistance profile length",
            expected: n,
            got: d.n(),
        });
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let keep = 1.0 - d.get(i);
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut placed_diag = false;
        for (j, w) in c.out_neighbors(i) {
            if !placed_diag && j > i {
                row.push((i, d.get(i)));
                placed_diag = true;
            }
            row.push((j, keep * w));
        }
        if !placed_diag {
            row.push((i, d.get(i)));
        }
        rows.push(row);
    }
    // Construction from valid inputs keeps rows stochastic and the diagonal
    // inside (0, 1), so no revalidation pass is needed.
    Ok(CoupledWeights {
        storage: Storage::from_sorted_entries(n, &rows),
    })
}

/// Splits coupled weights back into the zero-diagonal influence matrix and
/// the resistance profile: `c_ij = w_ij / (1 - w_ii)`, `d_ii = w_ii`.
pub fn decompose_weights(w: &CoupledWeights) -> Result<(InfluenceMatrix, ResistanceProfile)> {
    let n = w.n();
    let mut d = Vec::with_capacity(n);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let dii = w.diagonal(i);
        if dii >= 1.0 {
            return Err(Error::InvalidResistance {
                node: i,
                value: dii,
            });
        }
        d.push(dii);
        let spread = 1.0 - dii;
        let row: Vec<(usize, f64)> = w
            .storage()
            .row_nonzero(i)
            .filter(|&(j, _)| j != i)
            .map(|(j, wij)| (j, wij / spread))
            .collect();
        rows.push(row);
    }
    let mut edges = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for &(j, cij) in row {
            edges.push((i, j, cij));
        }
    }
    let c = InfluenceMatrix::from_edges(n, &edges)?;
    let d = ResistanceProfile::new(d)?;
    Ok((c, d))
}

/// Strong-connectivity report for the directed graph of positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureReport {
    /// Whether every node can reach every other along positive weights.
    pub irreducible: bool,
    /// Nodes unreachable from node 0 along forward edges.
    pub unreached_forward: Vec<usize>,
    /// Nodes that cannot reach node 0 (unreachable along reversed edges).
    pub unreached_backward: Vec<usize>,
    /// Coupling with any valid resistance profile puts a positive value on
    /// every diagonal entry, which makes the chain aperiodic. Always true;
    /// recorded so reports are self-describing.
    pub aperiodic_when_coupled: bool,
}

/// Checks strong connectivity of the positive-weight digraph of `c`.
///
/// Irreducibility together with the positive diagonal contributed by any
/// resistance profile guarantees convergence of the coupled dynamics to a
/// single consensus value.
pub fn check_structure(c: &InfluenceMatrix) -> StructureReport {
    let n = c.n();
    let forward = reach_from_zero(n, |i| c.out_neighbors(i).map(|(j, _)| j).collect());

    // Reverse adjacency built in one pass over the stored entries.
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in c.positive_entries() {
        reverse[j].push(i);
    }
    let backward = reach_from_zero(n, |i| reverse[i].clone());

    let unreached_forward: Vec<usize> = (0..n).filter(|&i| !forward[i]).collect();
    let unreached_backward: Vec<usize> = (0..n).filter(|&i| !backward[i]).collect();
    StructureReport {
        irreducible: unreached_forward.is_empty() && unreached_backward.is_empty(),
        unreached_forward,
        unreached_backward,
        aperiodic_when_coupled: true,
    }
}

fn reach_from_zero(n: usize, successors: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; n];
    if n == 0 {
        return seen;
    }
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back(0);
    while let Some(i) = queue.pop_front() {
        for j in successors(i) {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}
