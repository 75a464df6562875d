use serde::{Deserialize, Serialize};

use super::scalar::Field;

/// Row-major dense matrix over an exact field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> DenseMat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> DenseMat<G> {
        DenseMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows);
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j).add(&a.mul(b));
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                    .fold(F::zero(), |acc, (a, b)| acc.add(&a.mul(b)))
            })
            .collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        DenseMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b)).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        DenseMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn scale(&self, s: &F) -> Self {
        self.map(|a| a.mul(s))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Field::is_zero)
    }

    /// Reduces in place to reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = F::one().div(self.get(r, c));
            for j in c..self.cols {
                let v = self.get(r, j).mul(&inv);
                self.set(r, j, v);
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let f = self.get(i, c).clone();
                for j in c..self.cols {
                    let pr = self.get(r, j);
                    if pr.is_zero() {
                        continue;
                    }
                    let v = self.get(i, j).sub(&f.mul(pr));
                    self.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space, itself in reduced echelon form with
    /// ascending pivot columns.
    pub fn kernel(&self) -> Vec<Vec<F>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let raw: Vec<Vec<F>> = free
            .iter()
            .map(|&f| {
                let mut v = vec![F::zero(); self.cols];
                v[f] = F::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = m.get(r, f).neg();
                }
                v
            })
            .collect();
        canonical_basis(raw)
    }

    pub fn determinant(&self) -> F {
        assert!(self.is_square());
        let mut m = self.clone();
        let mut det = F::one();
        for c in 0..m.cols {
            let Some(p) = (c..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                return F::zero();
            };
            if p != c {
                m.swap_rows(p, c);
                det = det.neg();
            }
            let piv = m.get(c, c).clone();
            det = det.mul(&piv);
            for i in c + 1..m.rows {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).div(&piv);
                for j in c..m.cols {
                    let v = m.get(i, j).sub(&f.mul(m.get(c, j)));
                    m.set(i, j, v);
                }
            }
        }
        det
    }
}

/// Row-reduces a list of vectors and drops zero rows.
pub fn canonical_basis<F: Field>(vectors: Vec<Vec<F>>) -> Vec<Vec<F>> {
    if vectors.is_empty() {
        return vectors;
    }
    let mut m = DenseMat::from_rows(vectors);
    let rank = m.rref().len();
    m.to_rows().into_iter().take(rank).collect()
}

/// Exact basis of `ker(m − λ·1)`.
pub fn eigenspace<F: Field>(m: &DenseMat<F>, lambda: &F) -> Vec<Vec<F>> {
    assert!(m.is_square(), "eigenspace of a non-square matrix");
    let shifted = m.sub(&DenseMat::identity(m.rows()).scale(lambda));
    shifted.kernel()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclolinalg::scalar::{rat, GaussRat, Rat};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(rows: Vec<Vec<i64>>) -> DenseMat<Rat> {
        DenseMat::from_rows(rows.into_iter().map(|r| r.into_iter().map(|x| rat(x, 1)).collect()).collect())
    }

    #[test]
    fn small_kernels() {
        let k = q(vec![vec![1, 1], vec![1, 1]]).kernel();
        assert_eq!(k, vec![vec![rat(1, 1), rat(-1, 1)]]);
        let k = q(vec![vec![0]]).kernel();
        assert_eq!(k, vec![vec![rat(1, 1)]]);
    }

    /// Fraction-free integer elimination giving the rank, independent of
    /// the field code.
    fn bareiss_rank(mut a: Vec<Vec<i128>>) -> usize {
        let (n, m) = (a.len(), a[0].len());
        let mut rank = 0;
        let mut prev = 1i128;
        for c in 0..m {
            let Some(p) = (rank..n).find(|&i| a[i][c] != 0) else { continue };
            a.swap(rank, p);
            for i in rank + 1..n {
                for j in c + 1..m {
                    a[i][j] = (a[rank][c] * a[i][j] - a[i][c] * a[rank][j]) / prev;
                }
                a[i][c] = 0;
            }
            prev = a[rank][c];
            rank += 1;
        }
        rank
    }

    #[test]
    fn random_rank_four_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let b: Vec<Vec<i64>> = (0..6).map(|_| (0..4).map(|_| rng.gen_range(-5..=5)).collect()).collect();
            let c: Vec<Vec<i64>> = (0..4).map(|_| (0..6).map(|_| rng.gen_range(-5..=5)).collect()).collect();
            let m = q(b).mul(&q(c));
            let ints: Vec<Vec<i128>> = (0..6)
                .map(|i| (0..6).map(|j| m.get(i, j).to_integer().try_into().unwrap()).collect())
                .collect();
            let rank = bareiss_rank(ints);
            let k = m.kernel();
            assert_eq!(k.len(), 6 - rank);
            for v in &k {
                assert!(m.mul_vec(v).iter().all(Field::is_zero));
            }
        }
    }

    #[test]
    fn eigenspace_examples() {
        let id = DenseMat::<Rat>::identity(3);
        assert_eq!(eigenspace(&id, &rat(1, 1)).len(), 3);
        let d = DenseMat::from_rows(vec![
            vec![GaussRat::from_ints(1, 2), GaussRat::zero()],
            vec![GaussRat::zero(), GaussRat::from_ints(1, -2)],
        ]);
        assert_eq!(eigenspace(&d, &GaussRat::from_ints(1, 2)).len(), 1);
        // companion matrix of x^2 + 1
        let c = DenseMat::from_rows(vec![
            vec![GaussRat::zero(), GaussRat::from_ints(-1, 0)],
            vec![GaussRat::one(), GaussRat::zero()],
        ]);
        let e = eigenspace(&c, &GaussRat::i());
        assert_eq!(e.len(), 1);
        let lhs = c.mul_vec(&e[0]);
        let rhs: Vec<GaussRat> = e[0].iter().map(|x| x.mul(&GaussRat::i())).collect();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn kernel_rank_nullity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let (r, c) = (rng.gen_range(1..6), rng.gen_range(1..7));
            let vals: Vec<i64> = (0..r * c).map(|_| rng.gen_range(-2..=2)).collect();
            let m = DenseMat::from_fn(r, c, |i, j| rat(vals[i * c + j], 1));
            assert_eq!(m.rank() + m.kernel().len(), c);
        }
    }
}
