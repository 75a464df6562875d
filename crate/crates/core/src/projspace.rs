//! The finite projective plane `P²(Z/N)` and lifts of its points to `SL₃(Z)`.
//!
//! Points are stored in canonical form: the lexicographically smallest triple
//! among all unit multiples modulo `N`. The table orders points
//! lexicographically, which fixes the coordinate order of every downstream
//! vector and matrix.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IMat3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Level(u64);

impl Level {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidLevel(n));
        }
        Ok(Level(n))
    }

    pub fn modulus(self) -> u64 {
        self.0
    }

    /// Units of `Z/N` in increasing order.
    pub fn units(self) -> Vec<u64> {
        if self.0 == 1 {
            return vec![0];
        }
        (1..self.0).filter(|u| u.gcd(&self.0) == 1).collect()
    }

    /// Distinct primes dividing `N`.
    pub fn primes(self) -> Vec<u64> {
        prime_factors(self.0)
    }

    /// `N² · ∏_{p | N} (1 + 1/p + 1/p²)`.
    pub fn point_count(self) -> u64 {
        let mut count = self.0 * self.0;
        for p in self.primes() {
            count = count / (p * p) * (p * p + p + 1);
        }
        count
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProjPoint {
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

impl ProjPoint {
    pub fn triple(self) -> [u64; 3] {
        [self.x, self.y, self.z]
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}:{}:{})", self.x, self.y, self.z)
    }
}

fn reduce_mod(v: i64, n: u64) -> u64 {
    v.rem_euclid(n as i64) as u64
}

fn is_unimodular(t: [u64; 3], n: u64) -> bool {
    t[0].gcd(&t[1]).gcd(&t[2]).gcd(&n) == 1
}

/// Canonical representative of `(x:y:z)` modulo `N`.
pub fn normalize(x: i64, y: i64, z: i64, level: Level) -> Result<ProjPoint> {
    let n = level.modulus();
    let t = [reduce_mod(x, n), reduce_mod(y, n), reduce_mod(z, n)];
    if !is_unimodular(t, n) {
        return Err(Error::NonUnimodular(x, y, z, n));
    }
    Ok(min_over_units(t, n, &level.units()))
}

fn min_over_units(t: [u64; 3], n: u64, units: &[u64]) -> ProjPoint {
    let mut best = [u64::MAX; 3];
    for &u in units {
        let c = [t[0] * u % n, t[1] * u % n, t[2] * u % n];
        if c < best {
            best = c;
        }
    }
    ProjPoint {
        x: best[0],
        y: best[1],
        z: best[2],
    }
}

/// All canonical points of `P²(Z/N)` with an O(1) lookup from any
/// unimodular residue triple to the ordinal of its class.
#[derive(Clone)]
pub struct PointTable {
    level: Level,
    points: Vec<ProjPoint>,
    // index of the class of (x, y, z), flattened as (x·N + y)·N + z
    lookup: Vec<u32>,
}

const UNSET: u32 = u32::MAX;

impl fmt::Debug for PointTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointTable")
            .field("level", &self.level)
            .field("len", &self.points.len())
            .finish()
    }
}

/// Enumerates `P²(Z/N)` in lexicographic order of canonical triples.
pub fn enumerate(level: Level) -> PointTable {
    let n = level.modulus();
    let units = level.units();
    let cube = (n * n * n) as usize;
    let mut lookup = vec![UNSET; cube];
    let mut points = Vec::with_capacity(level.point_count() as usize);
    let flat = |t: [u64; 3]| ((t[0] * n + t[1]) * n + t[2]) as usize;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let t = [x, y, z];
                if lookup[flat(t)] != UNSET || !is_unimodular(t, n) {
                    continue;
                }
                // the first unvisited member of an orbit in lexicographic
                // order is its minimum, hence canonical
                let idx = points.len() as u32;
                points.push(ProjPoint { x, y, z });
                for &u in &units {
                    let c = [x * u % n, y * u % n, z * u % n];
                    lookup[flat(c)] = idx;
                }
            }
        }
    }
    PointTable {
        level,
        points,
        lookup,
    }
}

impl PointTable {
    pub fn level(&self) -> Level {
        self.level
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[ProjPoint] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> ProjPoint {
        self.points[idx]
    }

    /// Ordinal of the class of `(x:y:z)`, or `None` when not unimodular.
    pub fn index_of(&self, x: i64, y: i64, z: i64) -> Option<usize> {
        let n = self.level.modulus();
        let t = [reduce_mod(x, n), reduce_mod(y, n), reduce_mod(z, n)];
        let i = self.lookup[((t[0] * n + t[1]) * n + t[2]) as usize];
        (i != UNSET).then_some(i as usize)
    }

    pub fn index_of_point(&self, p: ProjPoint) -> Option<usize> {
        self.index_of(p.x as i64, p.y as i64, p.z as i64)
    }

    /// Same as [`PointTable::index_of`] for wide integer coordinates.
    pub fn index_of_i128(&self, t: [i128; 3]) -> Option<usize> {
        let n = self.level.modulus() as i128;
        self.index_of(
            t[0].rem_euclid(n) as i64,
            t[1].rem_euclid(n) as i64,
            t[2].rem_euclid(n) as i64,
        )
    }

    pub fn normalize(&self, x: i64, y: i64, z: i64) -> Result<ProjPoint> {
        self.index_of(x, y, z)
            .map(|i| self.points[i])
            .ok_or(Error::NonUnimodular(x, y, z, self.level.modulus()))
    }

    /// Writes the versioned header line followed by one `x,y,z` row per point.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({
            "format": "hecke3-points",
            "version": crate::FORMAT_VERSION,
            "level": self.level.modulus(),
            "count": self.points.len(),
        });
        writeln!(w, "{header}")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.x, p.y, p.z)?;
        }
        Ok(())
    }

    /// Reads a table written by [`PointTable::write_csv`] and checks it against
    /// a fresh enumeration.
    pub fn read_csv<R: BufRead>(r: R) -> Result<PointTable> {
        let mut lines = r.lines();
        let header: serde_json::Value = serde_json::from_str(
            &lines
                .next()
                .ok_or_else(|| Error::Artifact("empty point file".into()))??,
        )?;
        if header["format"] != "hecke3-points" || header["version"] != crate::FORMAT_VERSION {
            return Err(Error::Artifact("unexpected point file header".into()));
        }
        let level = Level::new(
            header["level"]
                .as_u64()
                .ok_or_else(|| Error::Artifact("missing level".into()))?,
        )?;
        let table = enumerate(level);
        let mut count = 0;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let coords: Vec<u64> = line
                .split(',')
                .map(|s| s.trim().parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            if coords.len() != 3 || table.points.get(i).map(|p| p.triple()) != Some([coords[0], coords[1], coords[2]]) {
                return Err(Error::Artifact(format!("point row {i} does not match enumeration")));
            }
            count += 1;
        }
        if count != table.len() {
            return Err(Error::Artifact("truncated point file".into()));
        }
        Ok(table)
    }
}

/// Brute-force count of `P²(Z/N)`, grouping unimodular triples by their
/// unit orbits with a hash map. Used as an oracle for small `N`.
pub fn brute_force_count(level: Level) -> usize {
    let n = level.modulus();
    let units = level.units();
    let mut classes: HashMap<[u64; 3], ()> = HashMap::new();
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                if is_unimodular([x, y, z], n) {
                    classes.insert(min_over_units([x, y, z], n, &units).triple(), ());
                }
            }
        }
    }
    classes.len()
}

/// Returns `U ∈ SL₃(Z)` whose first column is a primitive integer lift of `q`.
pub fn lift_point(q: ProjPoint, level: Level) -> IMat3 {
    let v = primitive_lift(q, level);
    complete_to_sl3(v)
}

fn gcd3(v: [i64; 3]) -> i64 {
    v[0].gcd(&v[1]).gcd(&v[2])
}

fn primitive_lift(q: ProjPoint, level: Level) -> [i64; 3] {
    let n = level.modulus() as i64;
    let base = [q.x as i64, q.y as i64, q.z as i64];
    if gcd3(base) == 1 {
        return base;
    }
    for radius in 1i64.. {
        for a in 0..=radius {
            for b in 0..=radius {
                for c in 0..=radius {
                    if a.max(b).max(c) != radius {
                        continue;
                    }
                    let v = [base[0] + a * n, base[1] + b * n, base[2] + c * n];
                    if gcd3(v) == 1 {
                        return v;
                    }
                }
            }
        }
    }
    unreachable!("a unimodular residue triple always has a primitive lift")
}

/// Completes a primitive integer column to a determinant-one matrix.
pub fn complete_to_sl3(v: [i64; 3]) -> IMat3 {
    debug_assert_eq!(gcd3(v), 1);
    // R1 sends v to (v1, g, 0), R2 sends (v1, g, 0) to e1; U = (R2 R1)^-1.
    let g = v[1].gcd(&v[2]);
    let (a, b, p, q) = if g == 0 {
        (1, 0, 1, 0)
    } else {
        let (a, b) = (v[1] / g, v[2] / g);
        let e = a.extended_gcd(&b);
        (a, b, e.x, e.y)
    };
    let r1 = IMat3::from_rows([[1, 0, 0], [0, p, q], [0, -b, a]]);
    let e = v[0].extended_gcd(&g);
    let (mut r, mut s) = (e.x, e.y);
    if e.gcd < 0 {
        r = -r;
        s = -s;
    }
    let r2 = IMat3::from_rows([[r, s, 0], [-g, v[0], 0], [0, 0, 1]]);
    let a = r2.mul(&r1);
    debug_assert_eq!(a.det(), 1);
    let u = a.adjugate();
    debug_assert_eq!(u.col(0), v);
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(n: u64) -> Level {
        Level::new(n).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(3, 6, 2, lvl(2)).unwrap().triple(), [1, 0, 0]);
        assert!(matches!(
            normalize(2, 4, 6, lvl(8)),
            Err(Error::NonUnimodular(..))
        ));
        // oracle: minimum over the units {1,3,5,7} of (3,5,7) mod 8
        let oracle = [1u64, 3, 5, 7]
            .iter()
            .map(|u| [3 * u % 8, 5 * u % 8, 7 * u % 8])
            .min()
            .unwrap();
        assert_eq!(oracle, [1, 7, 5]);
        assert_eq!(normalize(3, 5, 7, lvl(8)).unwrap().triple(), oracle);
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate(lvl(1)).len(), 1);
        assert_eq!(enumerate(lvl(2)).len(), 7);
        for n in 1..=16 {
            let t = enumerate(lvl(n));
            assert_eq!(t.len() as u64, lvl(n).point_count(), "N={n}");
            assert_eq!(t.len(), brute_force_count(lvl(n)), "N={n}");
        }
    }

    #[test]
    fn table_is_sorted_and_indexed() {
        let t = enumerate(lvl(12));
        assert!(t.points().windows(2).all(|w| w[0] < w[1]));
        for (i, p) in t.points().iter().enumerate() {
            assert_eq!(t.index_of_point(*p), Some(i));
            assert_eq!(normalize(p.x as i64, p.y as i64, p.z as i64, lvl(12)).unwrap(), *p);
        }
    }

    #[test]
    fn lifts_are_valid() {
        for n in [1u64, 2, 6, 8, 9, 16] {
            let t = enumerate(lvl(n));
            for &q in t.points() {
                let u = lift_point(q, lvl(n));
                assert_eq!(u.det(), 1);
                let c = u.col(0);
                assert_eq!(normalize(c[0], c[1], c[2], lvl(n)).unwrap(), q);
            }
        }
        assert_eq!(lift_point(ProjPoint { x: 1, y: 0, z: 0 }, lvl(5)), IMat3::identity());
    }

    #[test]
    fn csv_round_trip() {
        let t = enumerate(lvl(6));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = PointTable::read_csv(&buf[..]).unwrap();
        assert_eq!(back.points(), t.points());
    }

    proptest::proptest! {
        #[test]
        fn normalize_is_unit_invariant(x in -50i64..50, y in -50i64..50, z in -50i64..50, k in 0usize..8) {
            let level = lvl(16);
            let u = level.units()[k] as i64;
            match normalize(x, y, z, level) {
                Ok(p) => proptest::prop_assert_eq!(normalize(u * x, u * y, u * z, level).unwrap(), p),
                Err(_) => proptest::prop_assert!(normalize(u * x, u * y, u * z, level).is_err()),
            }
        }
    }
}
