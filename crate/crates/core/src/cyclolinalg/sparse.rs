use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dense::DenseMat;
use super::scalar::Field;

/// Sparse matrix stored as row lists of `(column, value)` with no duplicate
/// columns and no stored zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMat<F> {
    rows: usize,
    cols: usize,
    row_entries: Vec<Vec<(usize, F)>>,
}

impl<F: Field> SparseMat<F> {
    pub fn new(cols: usize) -> Self {
        SparseMat {
            rows: 0,
            cols,
            row_entries: Vec::new(),
        }
    }

    /// Appends a row, merging repeated columns and dropping zeros.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, F)>) {
        let mut merged: BTreeMap<usize, F> = BTreeMap::new();
        for (c, v) in entries {
            assert!(c < self.cols, "column {c} out of range");
            let slot = merged.entry(c).or_insert_with(F::zero);
            *slot = slot.add(&v);
        }
        self.row_entries
            .push(merged.into_iter().filter(|(_, v)| !v.is_zero()).collect());
        self.rows += 1;
    }

    /// Builds from `(row, col, value)` triplets.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, F)>) -> Self {
        let mut buckets: Vec<Vec<(usize, F)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            buckets[r].push((c, v));
        }
        let mut m = SparseMat::new(cols);
        for b in buckets {
            m.push_row(b);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[(usize, F)] {
        &self.row_entries[i]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[(usize, F)]> {
        self.row_entries.iter().map(Vec::as_slice)
    }

    pub fn nnz(&self) -> usize {
        self.row_entries.iter().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, F)> {
        self.row_entries
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c, v.clone())))
            .collect()
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(v.len(), self.cols);
        self.row_entries
            .iter()
            .map(|row| row.iter().fold(F::zero(), |acc, (c, a)| acc.add(&a.mul(&v[*c]))))
            .collect()
    }

    /// True iff every row annihilates `v`.
    pub fn annihilates(&self, v: &[F]) -> bool {
        self.row_entries
            .iter()
            .all(|row| row.iter().fold(F::zero(), |acc, (c, a)| acc.add(&a.mul(&v[*c]))).is_zero())
    }

    pub fn to_dense(&self) -> DenseMat<F> {
        let mut d = DenseMat::zeros(self.rows, self.cols);
        for (r, row) in self.row_entries.iter().enumerate() {
            for (c, v) in row {
                d.set(r, *c, v.clone());
            }
        }
        d
    }

    /// Reorders columns: new column `perm[c]` holds old column `c`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        let mut m = SparseMat::new(self.cols);
        for row in &self.row_entries {
            m.push_row(row.iter().map(|(c, v)| (perm[*c], v.clone())));
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclolinalg::scalar::{rat, Rat};

    #[test]
    fn merges_and_drops_zeros() {
        let mut m = SparseMat::<Rat>::new(3);
        m.push_row([(0, rat(1, 1)), (2, rat(1, 2)), (0, rat(-1, 1))]);
        assert_eq!(m.row(0), &[(2, rat(1, 2))]);
        assert_eq!(m.nnz(), 1);
        let t = m.triplets();
        assert_eq!(SparseMat::from_triplets(1, 3, t), m);
    }
}
