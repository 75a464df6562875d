//! Kernel of large sparse rational systems by reduction modulo word-size
//! primes, rational reconstruction and an exact verification pass.
//!
//! Pipeline: two-term rows are folded into a weighted union-find over the
//! columns, the surviving rows are randomly compressed and row-reduced mod p,
//! the kernel is expanded back and put in echelon form mod p, and the
//! reconstructed rational basis is checked against every row exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scalar::Rat;
use super::sparse::SparseMat;

/// Diagnostics from one kernel computation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModularKernelStats {
    pub cols: usize,
    pub rows: usize,
    /// Columns left after folding two-term rows.
    pub compressed_cols: usize,
    /// Rows with three or more live terms after folding.
    pub residual_rows: usize,
    pub primes_used: usize,
    pub dim: usize,
}

const EXTRA_ROWS: usize = 24;
const MAX_PRIMES: usize = 24;

/// Exact kernel basis in reduced echelon form with ascending pivots.
pub fn kernel_rational(m: &SparseMat<Rat>) -> Vec<Vec<Rat>> {
    kernel_rational_with_stats(m, 0x5eed).0
}

pub fn kernel_rational_with_stats(m: &SparseMat<Rat>, seed: u64) -> (Vec<Vec<Rat>>, ModularKernelStats) {
    let n = m.cols();
    let mut stats = ModularKernelStats {
        cols: n,
        rows: m.rows(),
        ..Default::default()
    };
    if n == 0 {
        return (Vec::new(), stats);
    }
    let folded = Folded::new(m);
    stats.compressed_cols = folded.live.len();
    stats.residual_rows = folded.residual.len();
    let int_rows = integral_rows(m);

    let mut groups: BTreeMap<(usize, Vec<usize>), Vec<(u64, Vec<Vec<u64>>)>> = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut primes = PrimeIter::new();
    let mut used = 0;
    while used < MAX_PRIMES {
        let p = primes.next_prime();
        let Some((pivots, rows)) = folded.kernel_mod(p, &mut rng) else {
            continue;
        };
        used += 1;
        stats.primes_used = used;
        groups.entry((pivots.len(), pivots.clone())).or_default().push((p, rows));
        // Smallest dimension wins; among equal dimensions the largest group.
        let best = groups
            .iter()
            .min_by(|a, b| a.0 .0.cmp(&b.0 .0).then(b.1.len().cmp(&a.1.len())))
            .map(|(k, _)| k.clone())
            .expect("at least one group");
        let group = &groups[&best];
        if let Some(basis) = reconstruct(group, n) {
            if basis.iter().all(|v| annihilates(&int_rows, v)) {
                stats.dim = basis.len();
                return (basis, stats);
            }
        }
    }
    panic!("multi-modular kernel did not stabilise after {MAX_PRIMES} primes");
}

/// Rational `r/s ≡ a (mod m)` with `|r|, s ≤ sqrt(m/2)`, if one exists.
pub fn rational_reconstruct(a: &BigInt, m: &BigInt) -> Option<Rat> {
    let bound = (m / BigInt::from(2)).sqrt();
    let (mut r0, mut r1) = (m.clone(), a.mod_floor(m));
    let (mut s0, mut s1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let s2 = &s0 - &q * &s1;
        r0 = std::mem::replace(&mut r1, r2);
        s0 = std::mem::replace(&mut s1, s2);
    }
    if s1.is_zero() || s1.abs() > bound || !r1.gcd(&s1).is_one() {
        return None;
    }
    Some(Rat::new(r1, s1))
}

fn rational_reconstruct_i128(a: i128, m: i128) -> Option<(i128, i128)> {
    let bound = isqrt(m / 2);
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 > bound {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if s1 == 0 || s1.abs() > bound || r1.gcd(&s1) != 1 {
        return None;
    }
    if s1 < 0 {
        Some((-r1, -s1))
    } else {
        Some((r1, s1))
    }
}

fn isqrt(x: i128) -> i128 {
    let mut r = (x as f64).sqrt() as i128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Columns folded through the two-term rows: `x_c = weight_c · x_root(c)`.
struct Folded {
    n: usize,
    /// For each column: `None` if forced to zero, else `(root, weight)`.
    class: Vec<Option<(usize, Rat)>>,
    live: Vec<usize>,
    live_index: Vec<usize>,
    residual: Vec<Vec<(usize, Rat)>>,
}

impl Folded {
    fn new(m: &SparseMat<Rat>) -> Self {
        let n = m.cols();
        let mut uf = WeightedUnionFind::new(n);
        let mut pending: Vec<Vec<(usize, Rat)>> = m.iter_rows().map(|r| r.to_vec()).collect();
        loop {
            let mut changed = false;
            let mut keep = Vec::with_capacity(pending.len());
            for row in pending {
                let terms = uf.substitute(&row);
                match terms.len() {
                    0 => {}
                    1 => {
                        uf.set_zero(terms[0].0);
                        changed = true;
                    }
                    2 => {
                        let (r1, c1) = &terms[0];
                        let (r2, c2) = &terms[1];
                        // c1·x1 + c2·x2 = 0, hang the larger root under the smaller.
                        uf.link(*r2, *r1, -(c1 / c2));
                        changed = true;
                    }
                    _ => keep.push(row),
                }
            }
            pending = keep;
            if !changed {
                break;
            }
        }
        let class: Vec<Option<(usize, Rat)>> = (0..n).map(|c| uf.find(c)).collect();
        let live: Vec<usize> = (0..n)
            .filter(|&c| matches!(&class[c], Some((r, _)) if *r == c))
            .collect();
        let mut live_index = vec![usize::MAX; n];
        for (i, &c) in live.iter().enumerate() {
            live_index[c] = i;
        }
        let residual = pending
            .iter()
            .map(|row| {
                uf.substitute(row)
                    .into_iter()
                    .map(|(r, v)| (live_index[r], v))
                    .collect()
            })
            .collect();
        Folded {
            n,
            class,
            live,
            live_index,
            residual,
        }
    }

    /// Echelon kernel basis mod p in the original coordinates, or `None` if
    /// p divides a denominator.
    fn kernel_mod(&self, p: u64, rng: &mut ChaCha8Rng) -> Option<(Vec<usize>, Vec<Vec<u64>>)> {
        let k = self.live.len();
        let mut res_rows = Vec::with_capacity(self.residual.len());
        for row in &self.residual {
            let mut r = Vec::with_capacity(row.len());
            for (c, v) in row {
                r.push((*c, rat_mod(v, p)?));
            }
            res_rows.push(r);
        }
        let mut weights = Vec::with_capacity(self.n);
        for cl in &self.class {
            weights.push(match cl {
                None => None,
                Some((root, w)) => Some((self.live_index[*root], rat_mod(w, p)?)),
            });
        }

        // Random compression when the system is much taller than wide.
        let dense_rows = if res_rows.len() > k + EXTRA_ROWS {
            let t = k + EXTRA_ROWS;
            let mut a = vec![0u64; t * k];
            for row in &res_rows {
                for out in 0..t {
                    let s: u64 = rng.gen_range(0..p);
                    if s == 0 {
                        continue;
                    }
                    let base = out * k;
                    for &(c, v) in row {
                        a[base + c] = (a[base + c] + s * v) % p;
                    }
                }
            }
            (a, t)
        } else {
            let t = res_rows.len();
            let mut a = vec![0u64; t * k];
            for (i, row) in res_rows.iter().enumerate() {
                for &(c, v) in row {
                    a[i * k + c] = (a[i * k + c] + v) % p;
                }
            }
            (a, t)
        };
        let (mut a, t) = dense_rows;
        let pivots = rref_mod(&mut a, t, k, p);

        let mut is_pivot = vec![usize::MAX; k];
        for (r, &c) in pivots.iter().enumerate() {
            is_pivot[c] = r;
        }
        let free: Vec<usize> = (0..k).filter(|&c| is_pivot[c] == usize::MAX).collect();
        let d = free.len();
        let mut full = vec![0u64; d * self.n];
        for (b, &f) in free.iter().enumerate() {
            // Compressed kernel vector: 1 at f, −a[row(pc), f] at pivot column pc.
            let mut comp = vec![0u64; k];
            comp[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                let v = a[r * k + f];
                if v != 0 {
                    comp[pc] = p - v;
                }
            }
            let row = &mut full[b * self.n..(b + 1) * self.n];
            for (c, w) in weights.iter().enumerate() {
                if let Some((li, wv)) = w {
                    row[c] = wv * comp[*li] % p;
                }
            }
        }
        let kp = rref_mod(&mut full, d, self.n, p);
        debug_assert_eq!(kp.len(), d);
        let rows = full.chunks(self.n).map(|r| r.to_vec()).collect();
        Some((kp, rows))
    }
}

struct WeightedUnionFind {
    parent: Vec<usize>,
    weight: Vec<Rat>,
    zero: Vec<bool>,
}

impl WeightedUnionFind {
    fn new(n: usize) -> Self {
        WeightedUnionFind {
            parent: (0..n).collect(),
            weight: vec![Rat::one(); n],
            zero: vec![false; n],
        }
    }

    /// `(root, w)` with `x_c = w·x_root`, or `None` when `x_c` is forced zero.
    fn find(&mut self, c: usize) -> Option<(usize, Rat)> {
        let mut path = Vec::new();
        let mut r = c;
        while self.parent[r] != r {
            path.push(r);
            r = self.parent[r];
        }
        // Compress: walk back from the node nearest the root.
        let mut acc = Rat::one();
        for &node in path.iter().rev() {
            acc = &self.weight[node] * &acc;
            self.weight[node] = acc.clone();
            self.parent[node] = r;
        }
        if self.zero[r] {
            None
        } else {
            Some((r, if path.is_empty() { Rat::one() } else { self.weight[c].clone() }))
        }
    }

    fn substitute(&mut self, row: &[(usize, Rat)]) -> Vec<(usize, Rat)> {
        let mut acc: BTreeMap<usize, Rat> = BTreeMap::new();
        for (c, v) in row {
            if let Some((r, w)) = self.find(*c) {
                let e = acc.entry(r).or_insert_with(Rat::zero);
                *e += v * w;
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    fn set_zero(&mut self, root: usize) {
        self.zero[root] = true;
    }

    /// Roots `a`, `b` with `x_a = w·x_b`; keeps the smaller index as root.
    fn link(&mut self, a: usize, b: usize, w: Rat) {
        if a > b {
            self.parent[a] = b;
            self.weight[a] = w;
        } else {
            self.parent[b] = a;
            self.weight[b] = w.recip();
        }
    }
}

fn rat_mod(v: &Rat, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let num = v.numer().mod_floor(&pb).to_u64().expect("residue fits");
    let den = v.denom().mod_floor(&pb).to_u64().expect("residue fits");
    if den == 0 {
        return None;
    }
    Some(num * inv_mod(den, p) % p)
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// In-place reduced row echelon form of a row-major `rows × cols` matrix
/// mod p (p < 2³¹). Returns the pivot columns; pivot rows come first.
fn rref_mod(a: &mut [u64], rows: usize, cols: usize, p: u64) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    let mut nz = Vec::with_capacity(cols);
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| a[i * cols + c] != 0) else {
            continue;
        };
        if pr != r {
            for j in c..cols {
                a.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = inv_mod(a[r * cols + c], p);
        nz.clear();
        for j in c..cols {
            let x = &mut a[r * cols + j];
            if *x != 0 {
                *x = *x * inv % p;
                nz.push(j);
            }
        }
        let (before, rest) = a.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let mut eliminate = |row: &mut [u64]| {
            let f = row[c];
            if f != 0 {
                let g = p - f;
                for &j in &nz {
                    row[j] = (row[j] + g * prow[j]) % p;
                }
            }
        };
        before.chunks_mut(cols).for_each(&mut eliminate);
        after.chunks_mut(cols).take(rows - r - 1).for_each(&mut eliminate);
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn reconstruct(group: &[(u64, Vec<Vec<u64>>)], n: usize) -> Option<Vec<Vec<Rat>>> {
    let d = group[0].1.len();
    let modulus: BigInt = group.iter().map(|(p, _)| BigInt::from(*p)).product();
    let small = modulus.bits() < 120;
    let m128 = modulus.to_i128();
    let mut out = Vec::with_capacity(d);
    for b in 0..d {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            if group.iter().all(|(_, rows)| rows[b][j] == 0) {
                row.push(Rat::zero());
                continue;
            }
            let residues: Vec<(u64, u64)> = group.iter().map(|(p, rows)| (*p, rows[b][j])).collect();
            let v = if small {
                let m = m128.expect("small modulus");
                let a = crt_i128(&residues);
                let (num, den) = rational_reconstruct_i128(a, m)?;
                Rat::new(BigInt::from(num), BigInt::from(den))
            } else {
                rational_reconstruct(&crt_big(&residues), &modulus)?
            };
            row.push(v);
        }
        out.push(row);
    }
    Some(out)
}

fn crt_i128(res: &[(u64, u64)]) -> i128 {
    let mut x: i128 = 0;
    let mut m: i128 = 1;
    for &(p, r) in res {
        let p = p as i128;
        // x + m·t ≡ r (mod p)
        let t = ((r as i128 - x).rem_euclid(p) * inv_mod((m % p) as u64, p as u64) as i128) % p;
        x += m * t;
        m *= p;
    }
    x
}

fn crt_big(res: &[(u64, u64)]) -> BigInt {
    let mut x = BigInt::zero();
    let mut m = BigInt::one();
    for &(p, r) in res {
        let pb = BigInt::from(p);
        let xm = x.mod_floor(&pb).to_u64().expect("fits");
        let mm = m.mod_floor(&pb).to_u64().expect("fits");
        let t = (r + p - xm) % p * inv_mod(mm, p) % p;
        x += &m * BigInt::from(t);
        m *= pb;
    }
    x
}

/// Rows scaled to integer coefficients.
fn integral_rows(m: &SparseMat<Rat>) -> Vec<Vec<(usize, BigInt)>> {
    m.iter_rows()
        .map(|row| {
            let l = row.iter().fold(BigInt::one(), |acc, (_, v)| acc.lcm(v.denom()));
            row.iter()
                .map(|(c, v)| (*c, v.numer() * (&l / v.denom())))
                .collect()
        })
        .collect()
}

fn annihilates(rows: &[Vec<(usize, BigInt)>], v: &[Rat]) -> bool {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scaled: Vec<BigInt> = v.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let small: Option<Vec<i64>> = scaled.iter().map(|x| x.to_i64()).collect();
    if let Some(sv) = small {
        let small_rows: Option<Vec<Vec<(usize, i64)>>> = rows
            .iter()
            .map(|r| r.iter().map(|(c, a)| a.to_i64().map(|a| (*c, a))).collect())
            .collect();
        if let Some(sr) = small_rows {
            return sr.iter().all(|r| {
                let mut acc: i128 = 0;
                for &(c, a) in r {
                    acc += a as i128 * sv[c] as i128;
                }
                acc == 0
            });
        }
    }
    rows.iter().all(|r| {
        let mut acc = BigInt::zero();
        for (c, a) in r {
            acc += a * &scaled[*c];
        }
        acc.is_zero()
    })
}

/// Descending primes below 2³¹.
struct PrimeIter {
    next: u64,
}

impl PrimeIter {
    fn new() -> Self {
        PrimeIter { next: (1 << 31) - 1 }
    }

    fn next_prime(&mut self) -> u64 {
        loop {
            let c = self.next;
            self.next -= 1;
            if is_prime(c) {
                return c;
            }
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclolinalg::dense::DenseMat;
    use crate::cyclolinalg::scalar::rat;

    #[test]
    fn reconstruct_small_fractions() {
        let m = BigInt::from(1_000_000_007u64);
        for (n, d) in [(3i64, 7i64), (-5, 11), (0, 1), (123, 1)] {
            let r = rat(n, d);
            let a = (BigInt::from(n) * BigInt::from(d).modpow(&(&m - 2), &m)).mod_floor(&m);
            assert_eq!(rational_reconstruct(&a, &m), Some(r.clone()));
            let small = rational_reconstruct_i128(a.to_i128().unwrap(), 1_000_000_007).unwrap();
            assert_eq!(Rat::new(small.0.into(), small.1.into()), r);
        }
    }

    #[test]
    fn matches_dense_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let cols = rng.gen_range(2..12);
            let rows = rng.gen_range(1..30);
            let mut m = SparseMat::new(cols);
            for _ in 0..rows {
                let width = rng.gen_range(1..4);
                let entries: Vec<(usize, Rat)> = (0..width)
                    .map(|_| (rng.gen_range(0..cols), rat(rng.gen_range(-3..4), rng.gen_range(1..4))))
                    .collect();
                m.push_row(entries);
            }
            let fast = kernel_rational(&m);
            let dense: DenseMat<Rat> = m.to_dense();
            assert_eq!(fast, dense.kernel());
        }
    }

    #[test]
    fn folds_long_chains() {
        // Two alternating chains 0..=4 and 5..=8 tied by one three-term row.
        let n = 9;
        let mut m = SparseMat::new(n);
        for i in (0..n - 1).filter(|&i| i != 4) {
            m.push_row([(i, rat(1, 1)), (i + 1, rat(1, 1))]);
        }
        m.push_row([(0, rat(1, 1)), (2, rat(1, 1)), (5, rat(1, 1))]);
        let (k, stats) = kernel_rational_with_stats(&m, 1);
        assert_eq!(stats.compressed_cols, 1);
        assert_eq!(k, m.to_dense().kernel());
    }
}
