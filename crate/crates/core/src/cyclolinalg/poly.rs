use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::dense::DenseMat;
use super::scalar::{Field, GaussRat, Rat};

/// Polynomial with coefficients stored from the constant term upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poly<F> {
    pub coeffs: Vec<F>,
}

impl<F: Field> Poly<F> {
    pub fn new(mut coeffs: Vec<F>) -> Self {
        while coeffs.last().is_some_and(Field::is_zero) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &F) -> F {
        self.coeffs
            .iter()
            .rev()
            .fold(F::zero(), |acc, c| acc.mul(x).add(c))
    }

    /// Horner evaluation at a square matrix.
    pub fn eval_matrix(&self, m: &DenseMat<F>) -> DenseMat<F> {
        let n = m.rows();
        let id = DenseMat::identity(n);
        self.coeffs
            .iter()
            .rev()
            .fold(DenseMat::zeros(n, n), |acc, c| acc.mul(m).add(&id.scale(c)))
    }

    fn mul_linear(&self, root: &F) -> Poly<F> {
        // (x - root) * self
        let mut out = vec![F::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i + 1] = out[i + 1].add(c);
            out[i] = out[i].sub(&c.mul(root));
        }
        Poly::new(out)
    }

    fn scaled(&self, s: &F) -> Poly<F> {
        Poly::new(self.coeffs.iter().map(|c| c.mul(s)).collect())
    }

    fn sub(&self, o: &Poly<F>) -> Poly<F> {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(F::zero);
                    let b = o.coeffs.get(i).cloned().unwrap_or_else(F::zero);
                    a.sub(&b)
                })
                .collect(),
        )
    }
}

impl<F: Field> fmt::Display for Poly<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|c| format!("\"{c}\"")).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// Characteristic polynomial `det(x·1 − m)` via Hessenberg reduction.
pub fn charpoly<F: Field>(m: &DenseMat<F>) -> Poly<F> {
    assert!(m.is_square(), "charpoly of a non-square matrix");
    let n = m.rows();
    let mut h = m.clone();
    // similarity transform to upper Hessenberg form
    for col in 0..n.saturating_sub(2) {
        let piv_row = col + 1;
        let Some(p) = (piv_row..n).find(|&i| !h.get(i, col).is_zero()) else {
            continue;
        };
        if p != piv_row {
            for j in 0..n {
                let a = h.get(p, j).clone();
                let b = h.get(piv_row, j).clone();
                h.set(p, j, b);
                h.set(piv_row, j, a);
            }
            for i in 0..n {
                let a = h.get(i, p).clone();
                let b = h.get(i, piv_row).clone();
                h.set(i, p, b);
                h.set(i, piv_row, a);
            }
        }
        let pivot = h.get(piv_row, col).clone();
        for i in piv_row + 1..n {
            if h.get(i, col).is_zero() {
                continue;
            }
            let u = h.get(i, col).div(&pivot);
            for j in 0..n {
                let v = h.get(i, j).sub(&u.mul(h.get(piv_row, j)));
                h.set(i, j, v);
            }
            for r in 0..n {
                let v = h.get(r, piv_row).add(&u.mul(h.get(r, i)));
                h.set(r, piv_row, v);
            }
        }
    }
    // p_k = charpoly of the leading k×k block
    let mut ps: Vec<Poly<F>> = vec![Poly::new(vec![F::one()])];
    for k in 0..n {
        let mut next = ps[k].mul_linear(h.get(k, k));
        let mut t = F::one();
        for i in (0..k).rev() {
            t = t.mul(h.get(i + 1, i));
            let coef = t.mul(h.get(i, k));
            if !coef.is_zero() {
                next = next.sub(&ps[i].scaled(&coef));
            }
        }
        ps.push(next);
    }
    ps.pop().expect("nonempty")
}

const FILTER_PRIME: u64 = 1_000_000_009;

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % p as u128) as u64;
        }
        b = (b as u128 * b as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

fn rat_mod(r: &Rat, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let d = r.denom().mod_floor(&pb).to_u64()?;
    if d == 0 {
        return None;
    }
    let n = r.numer().mod_floor(&pb).to_u64()?;
    Some((n as u128 * pow_mod(d, p - 2, p) as u128 % p as u128) as u64)
}

/// Gaussian-integer roots `a + b·√−1` with `|a|, |b| ≤ bound`, each with its
/// multiplicity. Candidates are screened modulo a prime `p ≡ 1 (mod 4)` and
/// confirmed by exact evaluation.
pub fn gaussian_integer_roots(poly: &Poly<GaussRat>, bound: i64) -> Vec<(GaussRat, usize)> {
    let p = FILTER_PRIME;
    // square root of -1 mod p
    let sqrt_m1 = (2..)
        .map(|g| pow_mod(g, (p - 1) / 4, p))
        .find(|r| (*r as u128 * *r as u128 % p as u128) as u64 == p - 1)
        .expect("p = 1 mod 4");
    let reduced: Option<Vec<u64>> = poly
        .coeffs
        .iter()
        .map(|c| Some((rat_mod(&c.re, p)? + (rat_mod(&c.im, p)? as u128 * sqrt_m1 as u128 % p as u128) as u64) % p))
        .collect();
    let mut roots = Vec::new();
    for a in -bound..=bound {
        for b in -bound..=bound {
            if let Some(coeffs) = &reduced {
                let x = ((a.rem_euclid(p as i64) as u128 + b.rem_euclid(p as i64) as u128 * sqrt_m1 as u128) % p as u128) as u64;
                let v = coeffs
                    .iter()
                    .rev()
                    .fold(0u64, |acc, c| ((acc as u128 * x as u128 + *c as u128) % p as u128) as u64);
                if v != 0 {
                    continue;
                }
            }
            let root = GaussRat::from_ints(a, b);
            let mut mult = 0;
            let mut q = poly.clone();
            while q.degree().is_some_and(|d| d > 0) && q.eval(&root).is_zero() {
                q = deflate(&q, &root);
                mult += 1;
            }
            if mult > 0 {
                roots.push((root, mult));
            }
        }
    }
    roots
}

/// Synthetic division by `(x − root)`; assumes `root` is a root.
fn deflate<F: Field>(p: &Poly<F>, root: &F) -> Poly<F> {
    let n = p.coeffs.len();
    let mut out = vec![F::zero(); n - 1];
    let mut carry = F::zero();
    for i in (1..n).rev() {
        carry = carry.mul(root).add(&p.coeffs[i]);
        out[i - 1] = carry.clone();
    }
    Poly::new(out)
}

/// Lifts a rational polynomial into `Q(√−1)[x]`.
pub fn to_gauss(p: &Poly<Rat>) -> Poly<GaussRat> {
    Poly::new(p.coeffs.iter().map(|c| GaussRat::from_rat(c.clone())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclolinalg::scalar::rat;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q(rows: Vec<Vec<i64>>) -> DenseMat<Rat> {
        DenseMat::from_rows(rows.into_iter().map(|r| r.into_iter().map(|x| rat(x, 1)).collect()).collect())
    }

    /// Cofactor expansion of det(x·1 − m) with polynomial entries.
    fn cofactor_charpoly(m: &DenseMat<Rat>) -> Vec<Rat> {
        fn det(entries: &[Vec<Vec<Rat>>]) -> Vec<Rat> {
            let n = entries.len();
            if n == 1 {
                return entries[0][0].clone();
            }
            let mut acc: Vec<Rat> = vec![<Rat as Field>::zero(); n + 1];
            for j in 0..n {
                let minor: Vec<Vec<Vec<Rat>>> = entries[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, e)| e.clone()).collect())
                    .collect();
                let sub = det(&minor);
                for (a, ea) in entries[0][j].iter().enumerate() {
                    for (b, eb) in sub.iter().enumerate() {
                        let term = ea * eb;
                        if j % 2 == 0 {
                            acc[a + b] += term;
                        } else {
                            acc[a + b] -= term;
                        }
                    }
                }
            }
            acc
        }
        let n = m.rows();
        let entries: Vec<Vec<Vec<Rat>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = -m.get(i, j).clone();
                        if i == j {
                            vec![c, <Rat as Field>::one()]
                        } else {
                            vec![c]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut coeffs = det(&entries);
        while coeffs.last().is_some_and(|c| Field::is_zero(c)) {
            coeffs.pop();
        }
        coeffs
    }

    #[test]
    fn small_examples() {
        let z = DenseMat::<Rat>::zeros(2, 2);
        assert_eq!(charpoly(&z).coeffs, vec![rat(0, 1), rat(0, 1), rat(1, 1)]);
        let d = q(vec![vec![2, 0], vec![0, 3]]);
        assert_eq!(charpoly(&d).coeffs, vec![rat(6, 1), rat(-5, 1), rat(1, 1)]);
    }

    #[test]
    fn agrees_with_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=5 {
            for _ in 0..4 {
                let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-4..=4)).collect()).collect();
                let m = q(rows);
                assert_eq!(charpoly(&m).coeffs, cofactor_charpoly(&m), "n={n}");
            }
        }
    }

    #[test]
    fn cayley_hamilton() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [3usize, 6, 10] {
            let rows: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect();
            let m = q(rows);
            assert!(charpoly(&m).eval_matrix(&m).is_zero());
        }
    }

    #[test]
    fn finds_gaussian_roots() {
        // (x - (1+2i))(x - (1-2i))(x - 3)^2 = (x^2 - 2x + 5)(x^2 - 6x + 9)
        let p = Poly::new(vec![rat(45, 1), rat(-48, 1), rat(26, 1), rat(-8, 1), rat(1, 1)]);
        let roots = gaussian_integer_roots(&to_gauss(&p), 5);
        assert_eq!(
            roots,
            vec![
                (GaussRat::from_ints(1, -2), 1),
                (GaussRat::from_ints(1, 2), 1),
                (GaussRat::from_ints(3, 0), 2)
            ]
        );
    }
}
