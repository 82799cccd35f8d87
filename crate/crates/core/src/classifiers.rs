//! Classifiers to be explained: k-nearest neighbours with leave-one-out
//! model selection, and a table of externally computed predictions.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{sq_dist, Matrix};
use crate::Label;

/// Anything that assigns a class label to a point. Implementations are
/// deterministic and immutable.
pub trait LabelOracle {
    fn predict(&self, x: &[f64]) -> Result<Label>;

    fn predict_all(&self, x: &Matrix) -> Result<Vec<Label>> {
        x.rows().map(|r| self.predict(r)).collect()
    }
}

/// Euclidean k-NN with majority vote.
///
/// Neighbours are ordered by distance, then by training index. A vote tie is
/// resolved in favour of the tied class whose member comes first in that order.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    train_x: Matrix,
    train_y: Vec<Label>,
    k: usize,
}

/// Leave-one-out error count for every candidate `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LooReport {
    pub candidates: Vec<usize>,
    pub errors: Vec<usize>,
    pub selected_k: usize,
}

fn vote<I: Iterator<Item = usize>>(labels: &[Label], neighbours: I) -> Label {
    // (label, votes, first position)
    let mut tally: Vec<(Label, usize, usize)> = Vec::new();
    for (pos, i) in neighbours.enumerate() {
        let l = labels[i];
        match tally.iter_mut().find(|t| t.0 == l) {
            Some(t) => t.1 += 1,
            None => tally.push((l, 1, pos)),
        }
    }
    tally
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|t| t.0)
        .expect("at least one neighbour")
}

/// Indices of the rows of `x` sorted by distance to `q`, ties by index.
fn neighbour_order(x: &Matrix, q: &[f64], exclude: Option<usize>) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = x
        .rows()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(i, r)| (sq_dist(q, r), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().map(|(_, i)| i).collect()
}

impl KnnClassifier {
    pub fn new(train_x: Matrix, train_y: Vec<Label>, k: usize) -> Result<Self> {
        check_dim(train_x.nrows(), train_y.len())?;
        if train_x.nrows() == 0 {
            return Err(Error::Empty("k-NN needs training points"));
        }
        if k == 0 || k > train_x.nrows() {
            return Err(Error::param(
                "k",
                format!("must lie in 1..={}, got {k}", train_x.nrows()),
            ));
        }
        Ok(KnnClassifier {
            train_x,
            train_y,
            k,
        })
    }

    /// Chooses `k` among `candidates` by leave-one-out error on the training
    /// set; ties go to the smaller `k`.
    pub fn fit_loo(
        train_x: Matrix,
        train_y: Vec<Label>,
        candidates: &[usize],
    ) -> Result<(Self, LooReport)> {
        let n = train_x.nrows();
        check_dim(n, train_y.len())?;
        if n == 0 {
            return Err(Error::Empty("k-NN needs training points"));
        }
        if candidates.is_empty() {
            return Err(Error::Empty("no candidate k"));
        }
        if let Some(bad) = candidates.iter().find(|&&k| k == 0 || k + 1 > n) {
            return Err(Error::param(
                "k_candidates",
                format!("each candidate must lie in 1..={}, got {bad}", n.saturating_sub(1)),
            ));
        }
        let orders: Vec<Vec<usize>> = (0..n)
            .map(|i| neighbour_order(&train_x, train_x.row(i), Some(i)))
            .collect();
        let errors: Vec<usize> = candidates
            .iter()
            .map(|&k| {
                (0..n)
                    .filter(|&i| vote(&train_y, orders[i].iter().copied().take(k)) != train_y[i])
                    .count()
            })
            .collect();
        let best = (0..candidates.len())
            .min_by(|&a, &b| errors[a].cmp(&errors[b]).then(candidates[a].cmp(&candidates[b])))
            .expect("nonempty");
        let selected_k = candidates[best];
        let report = LooReport {
            candidates: candidates.to_vec(),
            errors,
            selected_k,
        };
        Ok((Self::new(train_x, train_y, selected_k)?, report))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn train_x(&self) -> &Matrix {
        &self.train_x
    }

    pub fn train_y(&self) -> &[Label] {
        &self.train_y
    }

    /// Majority vote of the `k` nearest training points.
    pub fn classify(&self, x: &[f64]) -> Result<Label> {
        check_dim(self.train_x.ncols(), x.len())?;
        let order = neighbour_order(&self.train_x, x, None);
        Ok(vote(&self.train_y, order.into_iter().take(self.k)))
    }

    /// Leave-one-out prediction for training point `i`.
    pub fn classify_without(&self, i: usize) -> Label {
        let order = neighbour_order(&self.train_x, self.train_x.row(i), Some(i));
        vote(&self.train_y, order.into_iter().take(self.k))
    }
}

impl LabelOracle for KnnClassifier {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        self.classify(x)
    }
}

/// Predictions of an external model, keyed by the row index of a companion
/// dataset. A point is looked up by exact coordinate equality with a row.
#[derive(Debug, Clone)]
pub struct TableOracle {
    rows: Matrix,
    labels: Vec<Label>,
}

impl TableOracle {
    /// `entries` pairs row ids of `rows` with labels; ids must cover every
    /// row exactly once and labels must come from `classes`.
    pub fn new(rows: Matrix, entries: &[(usize, Label)], classes: &[Label]) -> Result<Self> {
        let n = rows.nrows();
        if entries.len() != n {
            return Err(Error::InvalidLabels(format!(
                "table has {} rows but the dataset has {n}",
                entries.len()
            )));
        }
        let mut labels: Vec<Option<Label>> = vec![None; n];
        for &(id, label) in entries {
            if id >= n {
                return Err(Error::InvalidLabels(format!("unknown row id {id}")));
            }
            if labels[id].is_some() {
                return Err(Error::InvalidLabels(format!("duplicate row id {id}")));
            }
            if !classes.contains(&label) {
                return Err(Error::InvalidLabels(format!(
                    "label {label} for id {id} is not a declared class"
                )));
            }
            labels[id] = Some(label);
        }
        Ok(TableOracle {
            rows,
            labels: labels.into_iter().map(|l| l.expect("bijection checked")).collect(),
        })
    }

    pub fn predict_id(&self, id: usize) -> Result<Label> {
        self.labels.get(id).copied().ok_or(Error::UnknownQuery)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }
}

impl LabelOracle for TableOracle {
    fn predict(&self, x: &[f64]) -> Result<Label> {
        check_dim(self.rows.ncols(), x.len())?;
        self.rows
            .rows()
            .position(|r| r == x)
            .map(|i| self.labels[i])
            .ok_or(Error::UnknownQuery)
    }
}
