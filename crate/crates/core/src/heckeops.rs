//! Double cosets `KαK = ⊔ gᵢK`, Hecke operators on the relation model and
//! the eigensystem report.
//!
//! Two coset scopes are used. *Local* cosets are taken modulo the open
//! compact `K = ∏_{p∈S} K_p` at a finite set `S` of primes, with `K_p` the
//! Iwahori-type group `a₂₁ ≡ a₃₁ ≡ 0 mod N` when `p | N` and `GL₃(Z_p)`
//! otherwise. *Global* cosets are taken modulo `Γ₀(N) ⊂ SL₃(Z)`; these are
//! the representatives the modular-symbol action needs. Strong approximation
//! makes the two counts agree, which is checked on every decomposition.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::cyclolinalg::{eigenspace, DenseMat, GaussRat, Rat};
use crate::error::{Error, Result};
use crate::matrix::{IMat3, RMat3};
use crate::projspace::{lift_point, normalize, prime_factors, Level, PointTable, ProjPoint};
use crate::relspace::ModelBasis;
use crate::symreduce::{reduce_to_points, ModularSymbol, ReductionStrategy};

pub const DEFAULT_BUDGET: usize = 10_000;

type Wide = [[i128; 3]; 3];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HeckeElement {
    pub alpha: RMat3,
}

impl HeckeElement {
    pub fn new(alpha: RMat3) -> Result<Self> {
        if alpha.det().is_zero() {
            return Err(Error::Singular);
        }
        Ok(HeckeElement { alpha })
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::new(RMat3::parse(s)?)
    }

    pub fn from_ints(rows: [[i64; 3]; 3]) -> Result<Self> {
        Self::new(RMat3::from_ints(rows))
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.alpha.inverse()?)
    }

    /// Primes at which the coset condition is imposed: those dividing `N`,
    /// the determinant, or a denominator of an entry.
    pub fn relevant_primes(&self, level: Level) -> Vec<u64> {
        let mut ps = level.primes();
        let det = self.alpha.det();
        let mut add = |n: &BigInt| {
            if let Some(v) = n.abs().to_u64() {
                ps.extend(prime_factors(v));
            }
        };
        add(det.numer());
        add(det.denom());
        for e in self.alpha.0.iter().flatten() {
            add(e.denom());
        }
        ps.sort_unstable();
        ps.dedup();
        ps
    }
}

impl fmt::Display for HeckeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CosetScope {
    Local,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosetDecomposition {
    pub alpha: HeckeElement,
    pub level: Level,
    pub reps: Vec<RMat3>,
    pub verified: bool,
    pub scope: CosetScope,
    pub primes: Vec<u64>,
}

impl CosetDecomposition {
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }
}

fn vp(x: &BigInt, p: u64) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    Some(v)
}

fn vp128(mut x: i128, p: u64) -> Option<i64> {
    if x == 0 {
        return None;
    }
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

/// Valuation of a nonzero rational.
fn vp_rat(x: &Rat, p: u64) -> Option<i64> {
    let n = vp(x.numer(), p)?;
    let d = vp(x.denom(), p).unwrap_or(0);
    Some(n as i64 - d as i64)
}

fn level_exponent(level: Level, p: u64) -> i64 {
    vp(&BigInt::from(level.modulus()), p).unwrap_or(0) as i64
}

/// Membership in `K` at the primes dividing `N`.
pub fn in_k(g: &RMat3, level: Level) -> bool {
    in_k_at(g, level, &level.primes())
}

/// Membership in `∏_{p∈primes} K_p`, decided from exact valuations.
pub fn in_k_at(g: &RMat3, level: Level, primes: &[u64]) -> bool {
    let det = g.det();
    if det.is_zero() {
        return false;
    }
    primes.iter().all(|&p| {
        let e = level_exponent(level, p);
        let integral = g.0.iter().flatten().all(|x| vp_rat(x, p).is_none_or(|v| v >= 0));
        let congruence = [g.get(1, 0), g.get(2, 0)].iter().all(|x| vp_rat(x, p).is_none_or(|v| v >= e));
        integral && congruence && vp_rat(&det, p) == Some(0)
    })
}

fn lcm_denominators<'a>(ms: impl IntoIterator<Item = &'a RMat3>) -> BigInt {
    ms.into_iter()
        .flat_map(|m| m.0.iter().flatten())
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

fn to_wide(m: &RMat3, scale: &BigInt) -> Result<Wide> {
    let mut out = [[0i128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let v = m.get(i, j) * Rat::from_integer(scale.clone());
            out[i][j] = v
                .to_integer()
                .to_i128()
                .ok_or_else(|| Error::InconsistentInputs(format!("entry of {m} too large")))?;
        }
    }
    Ok(out)
}

fn wide_to_rat(m: &Wide, scale: &BigInt) -> RMat3 {
    RMat3::from_fn(|i, j| Rat::new(BigInt::from(m[i][j]), scale.clone()))
}

fn wide_mul(a: &Wide, b: &Wide) -> Wide {
    let mut out = [[0i128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn wide_det(m: &Wide) -> i128 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn wide_adj(m: &Wide) -> Wide {
    let c = |a: usize, b: usize, x: usize, y: usize| m[a][x] * m[b][y] - m[a][y] * m[b][x];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

fn i64_to_wide(m: &[[i64; 3]; 3]) -> Wide {
    m.map(|r| r.map(i128::from))
}

/// Which coset relation a canonical key encodes.
#[derive(Debug, Clone, Copy)]
enum Scope<'a> {
    /// Right cosets of `Γ₀(N)` in `GL₃(Q)`.
    Global,
    /// Right cosets of `K` at the listed primes.
    Local(&'a [u64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct CosetKey {
    h: [[i64; 3]; 3],
    q: ProjPoint,
}

fn col_axpy(h: &mut Wide, dst: usize, src: usize, q: i128) {
    for row in h.iter_mut() {
        row[dst] -= q * row[src];
    }
}

/// Lower-triangular column Hermite form: `g·V` with `V ∈ GL₃(Z)`, positive
/// diagonal and entries left of the diagonal reduced modulo it.
fn column_hnf(g: &Wide) -> Wide {
    let mut h = *g;
    for i in 0..3 {
        for j in i + 1..3 {
            while h[i][j] != 0 {
                let q = h[i][i] / h[i][j];
                col_axpy(&mut h, i, j, q);
                for row in h.iter_mut() {
                    row.swap(i, j);
                }
            }
        }
        if h[i][i] < 0 {
            for row in h.iter_mut() {
                row[i] = -row[i];
            }
        }
    }
    for i in 1..3 {
        for j in 0..i {
            let q = h[i][j].div_euclid(h[i][i]);
            col_axpy(&mut h, j, i, q);
        }
    }
    h
}

fn split_s_part(mut x: i128, primes: &[u64]) -> (i128, i128) {
    let mut s = 1;
    for &p in primes {
        let p = p as i128;
        while x % p == 0 {
            x /= p;
            s *= p;
        }
    }
    (s, x)
}

/// `x mod m` for a rational whose denominator is prime to `m`.
fn residue(x: &Rat, m: i128) -> Result<i128> {
    if m == 1 {
        return Ok(0);
    }
    let m_big = BigInt::from(m);
    let num = x.numer().mod_floor(&m_big);
    let den = x.denom().mod_floor(&m_big);
    let inv = den
        .extended_gcd(&m_big)
        .x
        .mod_floor(&m_big);
    if !(den * &inv).mod_floor(&m_big).is_one() {
        return Err(Error::InconsistentInputs(format!("denominator of {x} not invertible mod {m}")));
    }
    Ok((num * inv).mod_floor(&m_big).to_i128().expect("residue fits"))
}

/// Canonical key and small representative of the coset of an integral `g`.
fn canonical_coset(g: &Wide, level: Level, scope: Scope) -> Result<(CosetKey, [[i64; 3]; 3])> {
    let det = wide_det(g);
    if det == 0 {
        return Err(Error::Singular);
    }
    let mut h = column_hnf(g);
    let hr: RMat3 = match scope {
        Scope::Global => {
            if det < 0 {
                for row in h.iter_mut() {
                    row[2] = -row[2];
                }
            }
            wide_to_rat(&h, &BigInt::one())
        }
        Scope::Local(primes) => {
            // divide each column by the prime-to-S part of its pivot, then
            // re-reduce below the diagonal in Z_(S)
            let mut m = wide_to_rat(&h, &BigInt::one());
            let mut s = [1i128; 3];
            for i in 0..3 {
                let (si, ti) = split_s_part(h[i][i], primes);
                s[i] = si;
                let t = Rat::from_integer(BigInt::from(ti));
                for r in 0..3 {
                    m.0[r][i] = &m.0[r][i] / &t;
                }
            }
            for i in 1..3 {
                for j in 0..i {
                    let x = m.0[i][j].clone();
                    let r = residue(&x, s[i])?;
                    let c = (x - Rat::from_integer(BigInt::from(r))) / Rat::from_integer(BigInt::from(s[i]));
                    for row in 0..3 {
                        let d = &c * &m.0[row][i];
                        m.0[row][j] -= d;
                    }
                }
            }
            m
        }
    };
    let hi = hr
        .to_int()
        .ok_or_else(|| Error::InconsistentInputs(format!("non-integral coset form {hr}")))?;
    h = i64_to_wide(&hi.0);
    let w = hr.inverse()?.mul(&wide_to_rat(g, &BigInt::one()));
    let n = level.modulus() as i128;
    let mut col = [0i64; 3];
    for (i, c) in col.iter_mut().enumerate() {
        *c = residue(w.get(i, 0), n)? as i64;
    }
    let q = normalize(col[0], col[1], col[2], level)?;
    let lift = i64_to_wide(&lift_point(q, level).0);
    let rep = wide_mul(&h, &lift);
    let rep = rep.map(|r| r.map(|x| i64::try_from(x).expect("coset representative fits in i64")));
    Ok((CosetKey { h: hi.0, q }, rep))
}

fn first_units(primes: &[u64], count: usize) -> Vec<i64> {
    (2i64..)
        .filter(|u| primes.iter().all(|&p| *u % p as i64 != 0))
        .take(count)
        .collect()
}

/// Generators of `K` at the given primes: elementary matrices adapted to the
/// level and diagonal units.
pub fn local_generators(level: Level, primes: &[u64]) -> Vec<RMat3> {
    let n = level.modulus() as i64;
    let mut gens = vec![
        RMat3::elementary(0, 1, 1),
        RMat3::elementary(0, 2, 1),
        RMat3::elementary(1, 2, 1),
        RMat3::elementary(2, 1, 1),
        RMat3::elementary(1, 0, n),
        RMat3::elementary(2, 0, n),
    ];
    let mut units = vec![-1];
    units.extend(first_units(primes, 2));
    for u in units {
        gens.push(RMat3::diag(u, 1, 1));
        gens.push(RMat3::diag(1, u, 1));
        gens.push(RMat3::diag(1, 1, u));
    }
    gens
}

/// Generators of `Γ₀(N)`.
pub fn gamma0_generators(level: Level) -> Vec<IMat3> {
    let n = level.modulus() as i64;
    let mut gens = vec![];
    for (i, j, x) in [(0, 1, 1), (0, 2, 1), (1, 2, 1), (2, 1, 1), (1, 0, n), (2, 0, n)] {
        let mut m = IMat3::identity();
        m.0[i][j] = x;
        gens.push(m);
    }
    for u in first_units(&level.primes(), 2) {
        // [[u, b], [N, d]] with ud − Nb = 1
        let d = if n == 1 {
            1
        } else {
            let e = u.extended_gcd(&n);
            e.x.rem_euclid(n)
        };
        let b = (u * d - 1) / n;
        gens.push(IMat3::from_rows([[u, b, 0], [n, d, 0], [0, 0, 1]]));
    }
    gens.push(IMat3::from_rows([[-1, 0, 0], [0, -1, 0], [0, 0, 1]]));
    gens.push(IMat3::from_rows([[-1, 0, 0], [0, 1, 0], [0, 0, -1]]));
    gens
}

/// Orbit of the coset of `start` under left multiplication by `gens`.
fn closure(start: &Wide, gens: &[Wide], level: Level, scope: Scope, budget: usize) -> Result<Vec<(CosetKey, [[i64; 3]; 3])>> {
    let (k0, r0) = canonical_coset(start, level, scope)?;
    let mut seen: HashMap<CosetKey, [[i64; 3]; 3]> = HashMap::new();
    seen.insert(k0, r0);
    let mut queue = VecDeque::from([r0]);
    while let Some(r) = queue.pop_front() {
        let rw = i64_to_wide(&r);
        for g in gens {
            let (k, rep) = canonical_coset(&wide_mul(g, &rw), level, scope)?;
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                e.insert(rep);
                if seen.len() > budget {
                    return Err(Error::BudgetExceeded(budget));
                }
                queue.push_back(rep);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort_by_key(|(k, _)| *k);
    Ok(out)
}

/// Local decomposition by closure search from `α`, then verified.
pub fn enumerate_decomposition(alpha: &HeckeElement, level: Level) -> Result<CosetDecomposition> {
    enumerate_decomposition_with_budget(alpha, level, DEFAULT_BUDGET)
}

pub fn enumerate_decomposition_with_budget(alpha: &HeckeElement, level: Level, budget: usize) -> Result<CosetDecomposition> {
    let primes = alpha.relevant_primes(level);
    let scale = lcm_denominators([&alpha.alpha]);
    let start = to_wide(&alpha.alpha, &scale)?;
    let gens_r = local_generators(level, &primes);
    let gens: Vec<Wide> = gens_r.iter().map(|g| to_wide(g, &BigInt::one())).collect::<Result<_>>()?;
    let found = closure(&start, &gens, level, Scope::Local(&primes), budget)?;
    let reps = found.iter().map(|(_, r)| wide_to_rat(&i64_to_wide(r), &scale)).collect();
    let mut d = CosetDecomposition {
        alpha: alpha.clone(),
        level,
        reps,
        verified: false,
        scope: CosetScope::Local,
        primes,
    };
    d.verified = verify_decomposition(&d, &gens_r);
    Ok(d)
}

/// `Γ₀(N)`-representatives of `Γ₀(N) α Γ₀(N)`, cross-checked against the
/// local decomposition: same count, and the global representatives must
/// themselves pass local verification.
pub fn global_decomposition(alpha: &HeckeElement, level: Level) -> Result<CosetDecomposition> {
    let local = enumerate_decomposition(alpha, level)?;
    let scale = lcm_denominators([&alpha.alpha]);
    let start = to_wide(&alpha.alpha, &scale)?;
    let gens: Vec<Wide> = gamma0_generators(level).iter().map(|g| i64_to_wide(&g.0)).collect();
    let found = closure(&start, &gens, level, Scope::Global, DEFAULT_BUDGET)?;
    if found.len() != local.len() {
        return Err(Error::InconsistentInputs(format!(
            "{} global cosets but {} local cosets for {alpha}",
            found.len(),
            local.len()
        )));
    }
    let reps: Vec<RMat3> = found.iter().map(|(_, r)| wide_to_rat(&i64_to_wide(r), &scale)).collect();
    let as_local = CosetDecomposition {
        reps: reps.clone(),
        scope: CosetScope::Local,
        verified: false,
        ..local.clone()
    };
    let verified = local.verified && verify_decomposition(&as_local, &local_generators(level, &local.primes));
    Ok(CosetDecomposition {
        alpha: alpha.clone(),
        level,
        reps,
        verified,
        scope: CosetScope::Global,
        primes: local.primes,
    })
}

/// `g = m / scale` with precomputed determinant valuations.
struct ScaledRep {
    m: Wide,
    adj: Wide,
    scale: i128,
    det: i128,
}

impl ScaledRep {
    fn new(g: &RMat3) -> Result<Self> {
        let l = lcm_denominators([g]);
        let m = to_wide(g, &l)?;
        Ok(ScaledRep {
            adj: wide_adj(&m),
            det: wide_det(&m),
            scale: l.to_i128().ok_or(Error::InconsistentInputs("denominator too large".into()))?,
            m,
        })
    }
}

/// `a⁻¹b ∈ K` at `primes`, using `a⁻¹b = (l_a / (l_b·det m_a))·adj(m_a)·m_b`.
fn equivalent(a: &ScaledRep, b: &ScaledRep, level: Level, primes: &[u64]) -> bool {
    let p_mat = wide_mul(&a.adj, &b.m);
    primes.iter().all(|&p| {
        let vs = vp128(a.scale, p).unwrap_or(0) - vp128(b.scale, p).unwrap_or(0) - vp128(a.det, p).unwrap_or(0);
        let vdet = 3 * vs + 2 * vp128(a.det, p).unwrap_or(0) + vp128(b.det, p).unwrap_or(0);
        if vdet != 0 {
            return false;
        }
        let e = level_exponent(level, p);
        for (i, row) in p_mat.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let bound = if j == 0 && i > 0 { e } else { 0 };
                if vp128(*x, p).is_some_and(|v| v + vs < bound) {
                    return false;
                }
            }
        }
        true
    })
}

/// Checks that the representatives are pairwise inequivalent, that the set
/// is stable under every generator, contains `α`'s coset, and is a single
/// orbit. Equivalence is always confirmed through valuations.
pub fn verify_decomposition(candidate: &CosetDecomposition, generators: &[RMat3]) -> bool {
    verify_inner(candidate, generators).unwrap_or(false)
}

fn verify_inner(c: &CosetDecomposition, generators: &[RMat3]) -> Result<bool> {
    let level = c.level;
    let primes = &c.primes;
    let scope = Scope::Local(primes);
    let scale = lcm_denominators(c.reps.iter().chain(std::iter::once(&c.alpha.alpha)));
    let scaled: Vec<ScaledRep> = c.reps.iter().map(ScaledRep::new).collect::<Result<_>>()?;
    for i in 0..scaled.len() {
        for j in i + 1..scaled.len() {
            if equivalent(&scaled[i], &scaled[j], level, primes) {
                return Ok(false);
            }
        }
    }
    let mut index: HashMap<CosetKey, usize> = HashMap::new();
    for (i, g) in c.reps.iter().enumerate() {
        let (k, _) = canonical_coset(&to_wide(g, &scale)?, level, scope)?;
        index.insert(k, i);
    }
    let locate = |g: &RMat3| -> Result<Option<usize>> {
        let (k, _) = canonical_coset(&to_wide(g, &scale)?, level, scope)?;
        let Some(&j) = index.get(&k) else { return Ok(None) };
        Ok(equivalent(&ScaledRep::new(g)?, &scaled[j], level, primes).then_some(j))
    };
    let Some(start) = locate(&c.alpha.alpha)? else { return Ok(false) };
    let mut reached = vec![false; c.reps.len()];
    reached[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut images: Vec<Vec<Option<usize>>> = vec![vec![]; c.reps.len()];
    for (i, g) in c.reps.iter().enumerate() {
        for gamma in generators {
            images[i].push(locate(&gamma.mul(g))?);
        }
    }
    if images.iter().flatten().any(|x| x.is_none()) {
        return Ok(false);
    }
    while let Some(i) = queue.pop_front() {
        for j in images[i].iter().flatten() {
            if !reached[*j] {
                reached[*j] = true;
                queue.push_back(*j);
            }
        }
    }
    Ok(reached.iter().all(|r| *r))
}

/// Closed-form representative lists for the operators of the eigenreport.
pub mod known_reps {
    use super::*;

    fn m(rows: [[i64; 3]; 3]) -> RMat3 {
        RMat3::from_ints(rows)
    }

    /// `[[2,j,k],[0,1,0],[0,0,1]]`, `j,k ∈ {0,1}`.
    pub fn diag211() -> Vec<RMat3> {
        let mut out = vec![];
        for j in 0..2 {
            for k in 0..2 {
                out.push(m([[2, j, k], [0, 1, 0], [0, 0, 1]]));
            }
        }
        out
    }

    /// `[[2,0,j],[0,2,k],[0,0,1]]` and `[[2,j,0],[0,1,0],[0,0,2]]`.
    pub fn diag221() -> Vec<RMat3> {
        let mut out = vec![];
        for j in 0..2 {
            for k in 0..2 {
                out.push(m([[2, 0, j], [0, 2, k], [0, 0, 1]]));
            }
        }
        for j in 0..2 {
            out.push(m([[2, j, 0], [0, 1, 0], [0, 0, 2]]));
        }
        out
    }

    pub fn lower64() -> Vec<RMat3> {
        vec![
            m([[1, 0, 0], [64, 1, 0], [0, 0, 1]]),
            m([[1, 0, 0], [0, 1, 0], [64, 0, 1]]),
            m([[1, 0, 0], [64, 1, 0], [64, 0, 1]]),
        ]
    }

    /// `[[k,u,−s],[128r,k,0],[128t,0,k]]` over `r,s,t,u` in `range` with
    /// `ru − st ≡ 1 mod modulus`.
    fn sl2_family(k: i64, range: &[i64], modulus: i64) -> Vec<RMat3> {
        let mut out = vec![];
        for &r in range {
            for &s in range {
                for &t in range {
                    for &u in range {
                        if (r * u - s * t - 1).rem_euclid(modulus) == 0 {
                            out.push(m([[k, u, -s], [128 * r, k, 0], [128 * t, 0, k]]));
                        }
                    }
                }
            }
        }
        out
    }

    /// Representatives for `(36,1,0;128,4,0;0,0,4)`: 48 elements.
    pub fn sl2_mod4() -> Vec<RMat3> {
        sl2_family(4, &[-1, 0, 1, 2], 4)
    }

    /// Representatives for `(8,1,0;128,8,0;0,0,8)`: 384 elements.
    pub fn sl2_mod8() -> Vec<RMat3> {
        sl2_family(8, &[0, 1, 2, 3, 4, 5, 6, 7], 8)
    }

    /// Representatives for `(0,1,0;−128,0,0;0,0,1)`: 128 + 64 elements.
    pub fn weyl128() -> Vec<RMat3> {
        let mut out: Vec<RMat3> = (0..128).map(|i| m([[0, 1, 0], [-128, 0, i], [0, 0, 1]])).collect();
        out.extend((0..64).map(|i| m([[0, 1, 0], [0, 0, 1], [-128, 0, 2 * i]])));
        out
    }
}

/// Wraps a representative list as a local candidate for verification.
pub fn candidate(alpha: &HeckeElement, level: Level, reps: Vec<RMat3>) -> CosetDecomposition {
    CosetDecomposition {
        primes: alpha.relevant_primes(level),
        alpha: alpha.clone(),
        level,
        reps,
        verified: false,
        scope: CosetScope::Local,
    }
}

/// How a coset representative `g` combines with the lift `U` of a point
/// into the symbol whose rows are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActionConvention {
    LiftRep,
    RepLift,
    LiftRepTranspose,
    RepTransposeLift,
}

pub const ALL_CONVENTIONS: [ActionConvention; 4] = [
    ActionConvention::LiftRep,
    ActionConvention::RepLift,
    ActionConvention::LiftRepTranspose,
    ActionConvention::RepTransposeLift,
];

/// The convention selected by [`calibrate`] at level 128.
pub const FROZEN_CONVENTION: ActionConvention = ActionConvention::LiftRep;

#[derive(Debug, Clone)]
pub struct HeckeOptions {
    pub workers: usize,
    pub strategy: ReductionStrategy,
    pub convention: ActionConvention,
    pub verification_probes: usize,
}

impl Default for HeckeOptions {
    fn default() -> Self {
        HeckeOptions {
            workers: 1,
            strategy: ReductionStrategy::default(),
            convention: FROZEN_CONVENTION,
            verification_probes: 20,
        }
    }
}

fn transpose(m: &Wide) -> Wide {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

fn symbol_for(u: &Wide, g: &Wide, conv: ActionConvention) -> ModularSymbol {
    let m = match conv {
        ActionConvention::LiftRep => wide_mul(u, g),
        ActionConvention::RepLift => wide_mul(g, u),
        ActionConvention::LiftRepTranspose => wide_mul(u, &transpose(g)),
        ActionConvention::RepTransposeLift => wide_mul(&transpose(g), u),
    };
    ModularSymbol::from_wide(m)
}

fn integral_reps(d: &CosetDecomposition) -> Result<Vec<Wide>> {
    d.reps.iter().map(|g| to_wide(g, &lcm_denominators([g]))).collect()
}

/// `(T f)(Q) = Σ_k c_k f(P_k)`: the signed point multiset for probe `Q`.
fn probe_combination(q: usize, table: &PointTable, reps: &[Wide], opts: &HeckeOptions) -> Result<Vec<(usize, i64)>> {
    let u = i64_to_wide(&lift_point(table.point(q), table.level()).0);
    let mut pts = Vec::new();
    for g in reps {
        reduce_to_points(&symbol_for(&u, g, opts.convention), table, opts.strategy, &mut pts)?;
    }
    let mut acc: HashMap<usize, i64> = HashMap::new();
    for (s, i) in pts {
        *acc.entry(i).or_insert(0) += s;
    }
    let mut out: Vec<_> = acc.into_iter().filter(|(_, c)| *c != 0).collect();
    out.sort_unstable();
    Ok(out)
}

fn combinations(probes: &[usize], table: &PointTable, reps: &[Wide], opts: &HeckeOptions) -> Result<Vec<Vec<(usize, i64)>>> {
    let workers = opts.workers.max(1).min(probes.len().max(1));
    if workers == 1 {
        return probes.iter().map(|&q| probe_combination(q, table, reps, opts)).collect();
    }
    let chunk = probes.len().div_ceil(workers);
    let parts: Vec<Result<Vec<Vec<(usize, i64)>>>> = std::thread::scope(|sc| {
        let handles: Vec<_> = probes
            .chunks(chunk)
            .map(|ps| sc.spawn(move || ps.iter().map(|&q| probe_combination(q, table, reps, opts)).collect()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(probes.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn require_global(d: &CosetDecomposition) -> Result<()> {
    if d.scope != CosetScope::Global || !d.verified {
        return Err(Error::InconsistentInputs(
            "Hecke action needs a verified global decomposition".into(),
        ));
    }
    Ok(())
}

/// `T_α f` on every point; intended for small levels.
pub fn apply_full(f: &[Rat], table: &PointTable, d: &CosetDecomposition, opts: &HeckeOptions) -> Result<Vec<Rat>> {
    require_global(d)?;
    let reps = integral_reps(d)?;
    let probes: Vec<usize> = (0..table.len()).collect();
    let combos = combinations(&probes, table, &reps, opts)?;
    Ok(combos
        .iter()
        .map(|c| c.iter().fold(Rat::zero(), |acc, (i, k)| acc + &f[*i] * Rat::from_integer((*k).into())))
        .collect())
}

/// Basis vectors as integer numerators over a common denominator each.
struct IntegerBasis {
    num: Vec<Vec<BigInt>>,
    den: Vec<BigInt>,
}

impl IntegerBasis {
    fn new(basis: &ModelBasis) -> Self {
        let mut num = vec![];
        let mut den = vec![];
        for v in &basis.vectors {
            let d = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            num.push(v.iter().map(|x| (x * Rat::from_integer(d.clone())).to_integer()).collect());
            den.push(d);
        }
        IntegerBasis { num, den }
    }

    fn eval(&self, k: usize, combo: &[(usize, i64)]) -> Rat {
        let s: BigInt = combo.iter().map(|(i, c)| &self.num[k][*i] * BigInt::from(*c)).sum();
        Rat::new(s, self.den[k].clone())
    }
}

fn verification_points(basis: &ModelBasis, n: usize, count: usize) -> Vec<usize> {
    let pivots: std::collections::HashSet<usize> = basis.pivots.iter().copied().collect();
    let mut out = vec![];
    if n == 0 {
        return out;
    }
    let step = (n / (count + 1)).max(1);
    let mut i = step / 2;
    while out.len() < count && out.len() + pivots.len() < n {
        let j = i % n;
        if !pivots.contains(&j) && !out.contains(&j) {
            out.push(j);
        }
        i += step.max(1);
        if i > 4 * n + count {
            break;
        }
    }
    out
}

/// Matrix of `T_α` on the basis: column `k` holds the coordinates of
/// `T_α φ_k`. Coordinates are read off at the pivot points, where the
/// echelon basis is the identity, and confirmed on extra probes.
pub fn hecke_matrix(basis: &ModelBasis, table: &PointTable, d: &CosetDecomposition) -> Result<DenseMat<Rat>> {
    hecke_matrix_with(basis, table, d, &HeckeOptions::default())
}

pub fn hecke_matrix_with(basis: &ModelBasis, table: &PointTable, d: &CosetDecomposition, opts: &HeckeOptions) -> Result<DenseMat<Rat>> {
    require_global(d)?;
    if basis.points() != table.len() && basis.dim > 0 {
        return Err(Error::InconsistentInputs("basis and point table disagree".into()));
    }
    let dim = basis.dim;
    let reps = integral_reps(d)?;
    let extra = verification_points(basis, table.len(), opts.verification_probes);
    let mut probes = basis.pivots.clone();
    probes.extend(&extra);
    let combos = combinations(&probes, table, &reps, opts)?;
    let ib = IntegerBasis::new(basis);
    let mut m = DenseMat::<Rat>::zeros(dim, dim);
    for (l, combo) in combos.iter().take(dim).enumerate() {
        for k in 0..dim {
            m.set(l, k, ib.eval(k, combo));
        }
    }
    for (combo, &q) in combos[dim..].iter().zip(&extra) {
        for k in 0..dim {
            let lhs = ib.eval(k, combo);
            let rhs = (0..dim).fold(Rat::zero(), |acc, l| acc + m.get(l, k) * &basis.vectors[l][q]);
            if lhs != rhs {
                return Err(Error::InconsistentInputs(format!(
                    "image of basis vector {k} under {} leaves the model space at point {}",
                    d.alpha,
                    table.point(q)
                )));
            }
        }
    }
    Ok(m)
}

pub fn anchor_alpha() -> HeckeElement {
    HeckeElement::from_ints([[3, 0, 0], [0, 1, 0], [0, 0, 1]]).expect("nonsingular")
}

/// The seven operators of the eigensystem report with their labels.
pub fn report_operators() -> Vec<(&'static str, HeckeElement)> {
    let h = |r| HeckeElement::from_ints(r).expect("nonsingular");
    vec![
        ("diag(2,2,1)", h([[2, 0, 0], [0, 2, 0], [0, 0, 1]])),
        ("diag(2,1,1)", h([[2, 0, 0], [0, 1, 0], [0, 0, 1]])),
        ("lower(64)", h([[1, 0, 0], [64, 1, 0], [0, 0, 1]])),
        ("(36,1;128,4;;4)", h([[36, 1, 0], [128, 4, 0], [0, 0, 4]])),
        ("(8,1;128,8;;8)", h([[8, 1, 0], [128, 8, 0], [0, 0, 8]])),
        ("(;1;-128;;1)", h([[0, 1, 0], [-128, 0, 0], [0, 0, 1]])),
        ("central(2)", h([[2, 0, 0], [0, 2, 0], [0, 0, 2]])),
    ]
}

fn to_gauss_matrix(m: &DenseMat<Rat>) -> DenseMat<GaussRat> {
    m.map(|x| <GaussRat as crate::cyclolinalg::Field>::from_rat(x.clone()))
}

/// Eigenvector of `m` for `λ` when that eigenspace is one-dimensional.
pub fn one_dimensional_eigenvector(m: &DenseMat<Rat>, lambda: &GaussRat) -> Option<Vec<GaussRat>> {
    let space = eigenspace(&to_gauss_matrix(m), lambda);
    (space.len() == 1).then(|| space.into_iter().next().expect("one vector"))
}

/// Exact eigenvalue of `m` on `v`, or an error if `v` is not an eigenvector.
pub fn eigenvalue_on(m: &DenseMat<Rat>, v: &[GaussRat]) -> Result<GaussRat> {
    let g = to_gauss_matrix(m);
    let mv = g.mul_vec(v);
    let j = v
        .iter()
        .position(|x| !crate::cyclolinalg::Field::is_zero(x))
        .ok_or_else(|| Error::InconsistentInputs("zero eigenvector".into()))?;
    let lambda = crate::cyclolinalg::Field::div(&mv[j], &v[j]);
    for (a, b) in mv.iter().zip(v) {
        if *a != crate::cyclolinalg::Field::mul(&lambda, b) {
            return Err(Error::InconsistentInputs("vector is not an eigenvector".into()));
        }
    }
    Ok(lambda)
}

/// The anchor eigenvalues in preference order.
pub fn anchor_candidates() -> [GaussRat; 2] {
    [GaussRat::from_ints(1, 2), GaussRat::from_ints(1, -2)]
}

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationOutcome {
    pub convention: ActionConvention,
    pub passed: bool,
    pub detail: String,
}

/// Tries every action convention on the anchor operator; a convention passes
/// when its images stay in the model space and an anchor eigenvalue has a
/// one-dimensional eigenspace. Returns the first passing convention.
pub fn calibrate(basis: &ModelBasis, table: &PointTable, opts: &HeckeOptions) -> Result<(ActionConvention, Vec<CalibrationOutcome>)> {
    let d = global_decomposition(&anchor_alpha(), basis.level)?;
    let mut outcomes = vec![];
    for conv in ALL_CONVENTIONS {
        let o = HeckeOptions {
            convention: conv,
            ..opts.clone()
        };
        let outcome = match hecke_matrix_with(basis, table, &d, &o) {
            Err(e) => CalibrationOutcome {
                convention: conv,
                passed: false,
                detail: e.to_string(),
            },
            Ok(m) => match anchor_candidates().iter().find(|l| one_dimensional_eigenvector(&m, l).is_some()) {
                Some(l) => CalibrationOutcome {
                    convention: conv,
                    passed: true,
                    detail: format!("eigenvalue {l} with a one-dimensional eigenspace"),
                },
                None => CalibrationOutcome {
                    convention: conv,
                    passed: false,
                    detail: "no anchor eigenvalue with a one-dimensional eigenspace".into(),
                },
            },
        };
        outcomes.push(outcome);
    }
    match outcomes.iter().find(|o| o.passed) {
        Some(o) => Ok((o.convention, outcomes)),
        None => Err(Error::AnchorNotFound(
            outcomes.iter().map(|o| format!("{:?}: {}", o.convention, o.detail)).collect::<Vec<_>>().join("; "),
        )),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenLine {
    pub label: String,
    pub alpha: String,
    pub cosets: usize,
    pub eigenvalue: String,
}

#[derive(Debug, Clone)]
pub struct EigenReport {
    pub level: Level,
    pub anchor: (HeckeElement, GaussRat),
    pub lines: Vec<(String, HeckeElement, usize, GaussRat)>,
}

impl EigenReport {
    pub fn eigenvalue(&self, label: &str) -> Option<&GaussRat> {
        self.lines.iter().find(|l| l.0 == label).map(|l| &l.3)
    }

    pub fn to_lines(&self) -> Vec<EigenLine> {
        self.lines
            .iter()
            .map(|(label, a, n, v)| EigenLine {
                label: label.clone(),
                alpha: a.to_string(),
                cosets: *n,
                eigenvalue: v.to_string(),
            })
            .collect()
    }
}

/// Fixes the eigenvector through the anchor operator, then reports the
/// eigenvalue of each operator of [`report_operators`] on it.
pub fn eigenreport(basis: &ModelBasis, table: &PointTable, opts: &HeckeOptions) -> Result<EigenReport> {
    eigenreport_with(basis, table, opts, &mut |a| global_decomposition(a, basis.level))
}

/// As [`eigenreport`], with a caller-supplied source of decompositions.
pub fn eigenreport_with(
    basis: &ModelBasis,
    table: &PointTable,
    opts: &HeckeOptions,
    decompose: &mut dyn FnMut(&HeckeElement) -> Result<CosetDecomposition>,
) -> Result<EigenReport> {
    let anchor = anchor_alpha();
    let t = hecke_matrix_with(basis, table, &decompose(&anchor)?, opts)?;
    let (lambda, v) = anchor_candidates()
        .into_iter()
        .find_map(|l| one_dimensional_eigenvector(&t, &l).map(|v| (l, v)))
        .ok_or_else(|| Error::AnchorNotFound(format!("operator {anchor} at level {}", basis.level)))?;
    let mut lines = vec![];
    for (label, alpha) in report_operators() {
        let d = decompose(&alpha)?;
        let m = hecke_matrix_with(basis, table, &d, opts)?;
        lines.push((label.to_string(), alpha, d.len(), eigenvalue_on(&m, &v)?));
    }
    Ok(EigenReport {
        level: basis.level,
        anchor: (anchor, lambda),
        lines,
    })
}
