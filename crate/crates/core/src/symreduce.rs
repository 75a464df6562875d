//! Modular symbols and their reduction to unimodular symbols.
//!
//! A symbol is a nonsingular 3×3 matrix whose *rows* are the three vectors
//! of the symbol; `GL₃(Q)` acts by right multiplication. The symbol is
//! invariant under rescaling any row and alternating in the rows. A model
//! function `f` pairs with a unimodular symbol `R` through the first column,
//! `f(R·e₁ mod N)`, which is invariant under `R ↦ Rγ` for `γ ∈ Γ₀(N)`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::cyclolinalg::Rat;
use crate::error::{Error, Result};
use crate::matrix::RMat3;
use crate::projspace::PointTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModularSymbol {
    rows: [[i64; 3]; 3],
}

fn primitive(v: [i128; 3]) -> [i64; 3] {
    let g = v[0].gcd(&v[1]).gcd(&v[2]);
    if g == 0 {
        return [0; 3];
    }
    let mut out = v.map(|x| x / g);
    if let Some(first) = out.iter().find(|x| **x != 0) {
        if *first < 0 {
            out = out.map(|x| -x);
        }
    }
    out.map(|x| i64::try_from(x).expect("symbol entry exceeds i64"))
}

fn det3(m: &[[i128; 3]; 3]) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

impl ModularSymbol {
    /// Rows are made primitive with a positive leading entry.
    pub fn from_rows(rows: [[i64; 3]; 3]) -> Self {
        ModularSymbol {
            rows: rows.map(|r| primitive(r.map(i128::from))),
        }
    }

    pub fn from_wide(rows: [[i128; 3]; 3]) -> Self {
        ModularSymbol {
            rows: rows.map(primitive),
        }
    }

    /// Symbol of a rational matrix; each row is rescaled to a primitive
    /// integer vector.
    pub fn from_rational(m: &RMat3) -> Result<Self> {
        let mut rows = [[0i128; 3]; 3];
        for (i, row) in rows.iter_mut().enumerate() {
            let l = (0..3).fold(num_bigint::BigInt::from(1), |acc, j| acc.lcm(m.get(i, j).denom()));
            for (j, x) in row.iter_mut().enumerate() {
                let v = m.get(i, j) * Rat::from_integer(l.clone());
                *x = v
                    .to_integer()
                    .to_i128()
                    .ok_or_else(|| Error::Parse(format!("matrix entry too large: {}", m.get(i, j))))?;
            }
        }
        Ok(Self::from_wide(rows))
    }

    pub fn rows(&self) -> [[i64; 3]; 3] {
        self.rows
    }

    fn wide(&self) -> [[i128; 3]; 3] {
        self.rows.map(|r| r.map(i128::from))
    }

    pub fn det(&self) -> i128 {
        det3(&self.wide())
    }

    pub fn swap_rows(&self, i: usize, j: usize) -> Self {
        let mut rows = self.rows;
        rows.swap(i, j);
        ModularSymbol { rows }
    }

    pub fn first_column(&self) -> [i64; 3] {
        [self.rows[0][0], self.rows[1][0], self.rows[2][0]]
    }

    /// Scales row `i` by `k` (stored primitive, so only the sign of `k` can
    /// survive normalization).
    pub fn scale_row(&self, i: usize, k: i64) -> Self {
        let mut rows = self.rows;
        rows[i] = rows[i].map(|x| x * k);
        Self::from_rows(rows)
    }

    /// Right multiplication by an integer matrix.
    pub fn mul_right(&self, g: &[[i64; 3]; 3]) -> Self {
        let a = self.wide();
        let mut out = [[0i128; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| a[i][k] * g[k][j] as i128).sum();
            }
        }
        Self::from_wide(out)
    }
}

impl fmt::Display for ModularSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.rows;
        write!(
            f,
            "[{},{},{};{},{},{};{},{},{}]",
            r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]
        )
    }
}

pub fn symbol_det(s: &ModularSymbol) -> i128 {
    s.det()
}

/// Formal integer combination of unimodular symbols, like terms merged.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolSum {
    pub terms: Vec<(i64, ModularSymbol)>,
}

impl SymbolSum {
    fn from_map(m: BTreeMap<ModularSymbol, i64>) -> Self {
        SymbolSum {
            terms: m.into_iter().filter(|(_, c)| *c != 0).map(|(s, c)| (c, s)).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// How the reducing vector is chosen. All choices give the same class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionStrategy {
    /// Rounded barycentric combinations of the rows, falling back to the
    /// exhaustive lattice search.
    #[default]
    Barycentric,
    /// Exhaustive lattice search minimizing the largest sub-determinant.
    LatticeMinMax,
    /// Exhaustive lattice search minimizing the sum of sub-determinants.
    LatticeMinSum,
}

pub const ALL_STRATEGIES: [ReductionStrategy; 3] = [
    ReductionStrategy::Barycentric,
    ReductionStrategy::LatticeMinMax,
    ReductionStrategy::LatticeMinSum,
];

const BARYCENTRIC: [[(i32, i32); 3]; 10] = [
    [(1, 2), (1, 2), (0, 1)],
    [(1, 2), (0, 1), (1, 2)],
    [(0, 1), (1, 2), (1, 2)],
    [(1, 2), (-1, 2), (0, 1)],
    [(1, 2), (0, 1), (-1, 2)],
    [(0, 1), (1, 2), (-1, 2)],
    [(1, 3), (1, 3), (1, 3)],
    [(-1, 3), (1, 3), (1, 3)],
    [(1, 3), (-1, 3), (1, 3)],
    [(1, 3), (1, 3), (-1, 3)],
];

fn round_div(a: i128, b: i128) -> i128 {
    // nearest integer to a/b, halves away from zero; b > 0
    let q = a.div_euclid(b);
    let r = a.rem_euclid(b);
    if 2 * r > b || (2 * r == b && a > 0) {
        q + 1
    } else {
        q
    }
}

fn sub_dets(r: &[[i128; 3]; 3], v: [i128; 3]) -> [i128; 3] {
    [det3(&[v, r[1], r[2]]), det3(&[r[0], v, r[2]]), det3(&[r[0], r[1], v])]
}

fn barycentric_vector(r: &[[i128; 3]; 3], d: i128) -> Option<[i128; 3]> {
    let mut best: Option<(i128, [i128; 3])> = None;
    for t in BARYCENTRIC {
        let mut v = [0i128; 3];
        for (j, vj) in v.iter_mut().enumerate() {
            // Σ t_i r_ij with common denominator 6
            let num: i128 = (0..3).map(|i| r[i][j] * (t[i].0 as i128) * (6 / t[i].1 as i128)).sum();
            *vj = round_div(num, 6);
        }
        if v == [0; 3] {
            continue;
        }
        let s = sub_dets(r, v);
        let worst = s.iter().map(|x| x.abs()).max().unwrap_or(0);
        if worst < d.abs() && best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, v));
        }
    }
    best.map(|(_, v)| v)
}

fn adjugate(m: &[[i128; 3]; 3]) -> [[i128; 3]; 3] {
    let c = |a: usize, b: usize, x: usize, y: usize| m[a][x] * m[b][y] - m[a][y] * m[b][x];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

/// Diagonal of the row Hermite normal form of `m` (positive, product |det|).
fn hnf_diagonal(m: &[[i128; 3]; 3]) -> [i128; 3] {
    let mut a = *m;
    for col in 0..3 {
        for r in col + 1..3 {
            while a[r][col] != 0 {
                let q = a[col][col].div_euclid(a[r][col]);
                for j in 0..3 {
                    a[col][j] -= q * a[r][j];
                }
                a.swap(col, r);
            }
        }
    }
    [a[0][0].abs(), a[1][1].abs(), a[2][2].abs()]
}

/// Nonzero `v = c·R` with `cR ∈ Z³` and every `|c_i| < 1`, chosen by
/// exhaustive search over the `|det R|` classes of `{c : cR ∈ Z³}/Z³`.
fn lattice_vector(r: &[[i128; 3]; 3], d: i128, by_sum: bool) -> Option<[i128; 3]> {
    let da = d.abs();
    let adj = adjugate(r);
    let diag = hnf_diagonal(r);
    let mut best: Option<((i128, i128, [i128; 3]), [i128; 3])> = None;
    for a0 in 0..diag[0] {
        for a1 in 0..diag[1] {
            for a2 in 0..diag[2] {
                let w = [a0, a1, a2];
                if w == [0; 3] {
                    continue;
                }
                // c = w·adj(R)/D, numerators over |D| reduced to the symmetric range
                let mut m = [0i128; 3];
                for (j, mj) in m.iter_mut().enumerate() {
                    let raw: i128 = (0..3).map(|i| w[i] * adj[i][j]).sum::<i128>() * d.signum();
                    let mut x = raw.rem_euclid(da);
                    if 2 * x > da {
                        x -= da;
                    }
                    *mj = x;
                }
                if m == [0; 3] {
                    continue;
                }
                let max = m.iter().map(|x| x.abs()).max().unwrap_or(0);
                let sum: i128 = m.iter().map(|x| x.abs()).sum();
                let key = if by_sum { (sum, max, m) } else { (max, sum, m) };
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    let mut v = [0i128; 3];
                    for (j, vj) in v.iter_mut().enumerate() {
                        let num: i128 = (0..3).map(|i| m[i] * r[i][j]).sum();
                        debug_assert_eq!(num % da, 0);
                        *vj = num / da;
                    }
                    best = Some((key, v));
                }
            }
        }
    }
    best.map(|(_, v)| v)
}

fn reducing_vector(r: &[[i128; 3]; 3], d: i128, strategy: ReductionStrategy) -> Option<[i128; 3]> {
    match strategy {
        ReductionStrategy::Barycentric => barycentric_vector(r, d).or_else(|| lattice_vector(r, d, false)),
        ReductionStrategy::LatticeMinMax => lattice_vector(r, d, false),
        ReductionStrategy::LatticeMinSum => lattice_vector(r, d, true),
    }
}

/// Calls `leaf(sign, symbol)` for every unimodular term of the reduction.
fn walk(
    s: &ModularSymbol,
    strategy: ReductionStrategy,
    sign: i64,
    depth: usize,
    trace: &mut Option<&mut Vec<String>>,
    leaf: &mut dyn FnMut(i64, &ModularSymbol),
) -> Result<()> {
    let r = s.wide();
    let d = det3(&r);
    if let Some(t) = trace.as_deref_mut() {
        t.push(format!("{}{:+} {} det={}", "  ".repeat(depth), sign, s, d));
    }
    if d == 0 {
        return Ok(());
    }
    if d.abs() == 1 {
        leaf(sign, s);
        return Ok(());
    }
    let v = reducing_vector(&r, d, strategy)
        .ok_or_else(|| Error::ReductionStall(format!("{s} with determinant {d}")))?;
    for i in 0..3 {
        let mut rows = r;
        rows[i] = v;
        let child = ModularSymbol::from_wide(rows);
        let cd = child.det();
        if cd.abs() >= d.abs() {
            return Err(Error::ReductionStall(format!("{s}: branch {i} has determinant {cd}")));
        }
        walk(&child, strategy, sign, depth + 1, trace, leaf)?;
    }
    Ok(())
}

pub fn reduce(s: &ModularSymbol) -> Result<SymbolSum> {
    reduce_with(s, ReductionStrategy::default(), None)
}

pub fn reduce_with(
    s: &ModularSymbol,
    strategy: ReductionStrategy,
    trace: Option<&mut Vec<String>>,
) -> Result<SymbolSum> {
    let mut acc: BTreeMap<ModularSymbol, i64> = BTreeMap::new();
    let mut trace = trace;
    walk(s, strategy, 1, 0, &mut trace, &mut |sign, leaf| {
        *acc.entry(*leaf).or_insert(0) += sign;
    })?;
    Ok(SymbolSum::from_map(acc))
}

/// `(sign, point index)` with `pairing(f, s) = sign·f[index]` for unimodular `s`.
pub fn unimodular_point(s: &ModularSymbol, table: &PointTable) -> Result<(i64, usize)> {
    let d = s.det();
    let [x, y, z] = s.first_column();
    let (sign, t) = match d {
        1 => (1, [x, y, z]),
        // swap rows 2 and 3, then negate
        -1 => (-1, [x, z, y]),
        _ => return Err(Error::ReductionStall(format!("pairing of non-unimodular symbol {s}"))),
    };
    let idx = table
        .index_of(t[0], t[1], t[2])
        .ok_or(Error::NonUnimodular(t[0], t[1], t[2], table.level().modulus()))?;
    Ok((sign, idx))
}

pub fn pairing(f: &[Rat], s: &ModularSymbol, table: &PointTable) -> Result<Rat> {
    let (sign, idx) = unimodular_point(s, table)?;
    Ok(if sign > 0 { f[idx].clone() } else { -f[idx].clone() })
}

/// Signed point indices of the unimodular terms of `s`, unmerged.
pub fn reduce_to_points(
    s: &ModularSymbol,
    table: &PointTable,
    strategy: ReductionStrategy,
    out: &mut Vec<(i64, usize)>,
) -> Result<()> {
    let mut err = None;
    walk(s, strategy, 1, 0, &mut None, &mut |sign, leaf| match unimodular_point(leaf, table) {
        Ok((sg, idx)) => out.push((sign * sg, idx)),
        Err(e) => err = Some(e),
    })?;
    err.map_or(Ok(()), Err)
}

pub fn pair_rational(f: &[Rat], s: &ModularSymbol, table: &PointTable) -> Result<Rat> {
    pair_rational_with(f, s, table, ReductionStrategy::default())
}

pub fn pair_rational_with(f: &[Rat], s: &ModularSymbol, table: &PointTable, strategy: ReductionStrategy) -> Result<Rat> {
    let mut pts = Vec::new();
    reduce_to_points(s, table, strategy, &mut pts)?;
    let mut acc = Rat::zero();
    for (sign, idx) in pts {
        if sign > 0 {
            acc += &f[idx];
        } else {
            acc -= &f[idx];
        }
    }
    Ok(acc)
}

/// Random symbol with entries in `[-9, 9]` and `1 < |det| ≤ max_det`.
pub fn random_symbol(rng: &mut impl rand::Rng, max_det: i128) -> ModularSymbol {
    loop {
        let rows = [(); 3].map(|_| [(); 3].map(|_| rng.gen_range(-9i64..=9)));
        let s = ModularSymbol::from_rows(rows);
        let d = s.det().abs();
        if d > 1 && d <= max_det {
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projspace::{lift_point, Level};
    use crate::relspace::model_for_level;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn determinants() {
        assert_eq!(ModularSymbol::from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]]).det(), 1);
        assert_eq!(ModularSymbol::from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 3]]).det(), 1);
        let s = ModularSymbol::from_rational(&RMat3::diag(2, 2, 1)).unwrap();
        // rows rescale to primitive vectors, so compare against the raw matrix
        assert_eq!(RMat3::diag(2, 2, 1).det(), Rat::from_integer(4.into()));
        assert_eq!(s.det(), 1);
        let raw = ModularSymbol {
            rows: [[2, 0, 0], [0, 2, 0], [0, 0, 1]],
        };
        assert_eq!(symbol_det(&raw), 4);
    }

    #[test]
    fn trivial_reductions() {
        let id = ModularSymbol::from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(reduce(&id).unwrap().terms, vec![(1, id)]);
        let degenerate = ModularSymbol::from_rows([[1, 2, 3], [1, 2, 3], [0, 0, 1]]);
        assert!(reduce(&degenerate).unwrap().is_empty());
    }

    #[test]
    fn strategies_agree_on_small_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [4u64, 8] {
            let (table, basis) = model_for_level(n).unwrap();
            for _ in 0..40 {
                let s = random_symbol(&mut rng, 60);
                for f in &basis.vectors {
                    let vals: Vec<Rat> = ALL_STRATEGIES
                        .iter()
                        .map(|st| pair_rational_with(f, &s, &table, *st).unwrap())
                        .collect();
                    assert!(vals.windows(2).all(|w| w[0] == w[1]), "{s} at N={n}");
                }
            }
        }
    }

    #[test]
    fn antisymmetry_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (table, basis) = model_for_level(8).unwrap();
        for _ in 0..30 {
            let s = random_symbol(&mut rng, 40);
            let swapped = s.swap_rows(0, 2);
            let scaled = s.scale_row(1, -5);
            for f in &basis.vectors {
                let v = pair_rational(f, &s, &table).unwrap();
                assert_eq!(pair_rational(f, &swapped, &table).unwrap(), -v.clone());
                assert_eq!(pair_rational(f, &scaled, &table).unwrap(), v);
            }
        }
    }

    #[test]
    fn right_gamma_invariance() {
        let level = Level::new(8).unwrap();
        let (table, basis) = model_for_level(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let q = table.point(rng.gen_range(0..table.len()));
            let u = lift_point(q, level);
            let s = ModularSymbol::from_rows(u.0);
            let g = random_gamma0(&mut rng, 8);
            let sg = s.mul_right(&g);
            for f in &basis.vectors {
                assert_eq!(pairing(f, &s, &table).unwrap(), pairing(f, &sg, &table).unwrap());
            }
        }
    }

    /// Product of random elementary generators of Γ₀(N).
    pub(crate) fn random_gamma0(rng: &mut ChaCha8Rng, n: i64) -> [[i64; 3]; 3] {
        let mut g = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
        for _ in 0..6 {
            let (i, j, x) = match rng.gen_range(0..6) {
                0 => (0, 1, rng.gen_range(-2..=2)),
                1 => (0, 2, rng.gen_range(-2..=2)),
                2 => (1, 2, rng.gen_range(-2..=2)),
                3 => (2, 1, rng.gen_range(-2..=2)),
                4 => (1, 0, n * rng.gen_range(-1..=1)),
                _ => (2, 0, n * rng.gen_range(-1..=1)),
            };
            let mut e = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
            e[i][j] = x;
            let mut out = [[0i64; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    out[a][b] = (0..3).map(|k| g[a][k] * e[k][b]).sum();
                }
            }
            g = out;
        }
        g
    }

    #[test]
    fn all_strategies_reach_unimodular_terms() {
        let s = ModularSymbol {
            rows: [[3, 0, 0], [0, 1, 0], [0, 0, 1]],
        };
        let sums: Vec<SymbolSum> = ALL_STRATEGIES.iter().map(|st| reduce_with(&s, *st, None).unwrap()).collect();
        for sum in &sums {
            assert!(sum.terms.iter().all(|(_, t)| t.det().abs() == 1));
        }
    }

    #[test]
    fn trace_records_tree() {
        let s = ModularSymbol {
            rows: [[5, 1, 0], [0, 1, 0], [0, 0, 7]],
        };
        let mut lines = Vec::new();
        reduce_with(&s, ReductionStrategy::LatticeMinMax, Some(&mut lines)).unwrap();
        assert!(lines[0].contains("det=35"));
        assert!(lines.len() > 1);
    }
}
