//! Row-major weight storage shared by the matrix types.
//!
//! Small systems use a dense row-major buffer; larger ones a compressed
//! sparse row layout. Everything the simulator and estimator need is
//! row-oriented, so no column access is provided.

/// Node count above which matrices switch to compressed sparse rows.
pub(crate) const DENSE_LIMIT: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Storage {
    Dense {
        n: usize,
        values: Vec<f64>,
    },
    Sparse {
        n: usize,
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
}

impl Storage {
    /// Builds storage from full rows, choosing the layout by size.
    pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Storage {
        let n = rows.len();
        if n <= DENSE_LIMIT {
            let mut values = Vec::with_capacity(n * n);
            for row in rows {
                values.extend_from_slice(row);
            }
            Storage::Dense { n, values }
        } else {
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            row_ptr.push(0);
            for row in rows {
                for (j, &w) in row.iter().enumerate() {
                    if w != 0.0 {
                        cols.push(j);
                        vals.push(w);
                    }
                }
                row_ptr.push(cols.len());
            }
            Storage::Sparse {
                n,
                row_ptr,
                cols,
                vals,
            }
        }
    }

    /// Builds storage from per-row (column, weight) lists sorted by column.
    pub(crate) fn from_sorted_entries(n: usize, rows: &[Vec<(usize, f64)>]) -> Storage {
        if n <= DENSE_LIMIT {
            let mut values = vec![0.0; n * n];
            for (i, row) in rows.iter().enumerate() {
                for &(j, w) in row {
                    values[i * n + j] = w;
                }
            }
            Storage::Dense { n, values }
        } else {
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols = Vec::new();
            let mut vals = Vec::new();
            row_ptr.push(0);
            for row in rows {
                for &(j, w) in row {
                    if w != 0.0 {
                        cols.push(j);
                        vals.push(w);
                    }
                }
                row_ptr.push(cols.len());
            }
            Storage::Sparse {
                n,
                row_ptr,
                cols,
                vals,
            }
        }
    }

    pub(crate) fn n(&self) -> usize {
        match self {
            Storage::Dense { n, .. } | Storage::Sparse { n, .. } => *n,
        }
    }

    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Storage::Dense { n, values } => values[i * n + j],
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
                ..
            } => {
                let lo = row_ptr[i];
                let hi = row_ptr[i + 1];
                match cols[lo..hi].binary_search(&j) {
                    Ok(k) => vals[lo + k],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Iterates the stored nonzero entries of row `i` in ascending column order.
    pub(crate) fn row_nonzero(&self, i: usize) -> RowIter<'_> {
        match self {
            Storage::Dense { n, values } => RowIter::Dense {
                row: &values[i * n..(i + 1) * n],
                j: 0,
            },
            Storage::Sparse {
                row_ptr,
                cols,
                vals,
                ..
            } => RowIter::Sparse {
                cols: &cols[row_ptr[i]..row_ptr[i + 1]],
                vals: &vals[row_ptr[i]..row_ptr[i + 1]],
                k: 0,
            },
        }
    }

    /// Row `i` as a dense vector of length `n`.
    pub(crate) fn row_dense(&self, i: usize) -> Vec<f64> {
        match self {
            Storage::Dense { n, values } => values[i * n..(i + 1) * n].to_vec(),
            Storage::Sparse { n, .. } => {
                let mut row = vec![0.0; *n];
                for (j, w) in self.row_nonzero(i) {
                    row[j] = w;
                }
                row
            }
        }
    }

    /// Dot product of row `i` with the values produced by `x`, summing the
    /// stored nonzero entries in ascending column order.
    ///
    /// Zero entries contribute exactly nothing under IEEE addition, so the
    /// dense and sparse layouts produce bit-identical sums.
    pub(crate) fn row_dot(&self, i: usize, x: impl Fn(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (j, w) in self.row_nonzero(i) {
            acc += w * x(j);
        }
        acc
    }

    /// Number of stored nonzero entries.
    pub(crate) fn nonzero_count(&self) -> usize {
        match self {
            Storage::Dense { values, .. } => values.iter().filter(|&&w| w != 0.0).count(),
            Storage::Sparse { vals, .. } => vals.len(),
        }
    }
}

pub(crate) enum RowIter<'a> {
    Dense { row: &'a [f64], j: usize },
    Sparse {
        cols: &'a [usize],
        vals: &'a [f64],
        k: usize,
    },
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Dense { row, j } => {
                while *j < row.len() {
                    let col = *j;
                    *j += 1;
                    if row[col] != 0.0 {
                        return Some((col, row[col]));
                    }
                }
                None
            }
            RowIter::Sparse { cols, vals, k } => {
                if *k < cols.len() {
                    let out = (cols[*k], vals[*k]);
                    *k += 1;
                    Some(out)
                } else {
                    None
                }
            }
        }
    }
}
